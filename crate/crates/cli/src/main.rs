fn main() {
    std::process::exit(respondyn::run(std::env::args_os()));
}
