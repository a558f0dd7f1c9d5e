//! Text serialization shared by the library and the CLI.
//!
//! Floats are written in shortest round-trip form. CSV output uses `,`, `.` and LF.

use crate::transfer::GridFunction;

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let a = x.abs();
    if !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Builds a CSV document row by row.
#[derive(Debug, Clone)]
pub struct CsvWriter {
    out: String,
    width: usize,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        CsvWriter {
            out,
            width: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.width);
        self.out.push_str(&fields.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

/// `index,value` for cell functions, `index,re,im` (index = mode) for Fourier.
pub fn grid_function_csv(f: &GridFunction) -> String {
    match f {
        GridFunction::Cells { values, .. } => {
            let mut w = CsvWriter::new(&["index", "value"]);
            for (i, v) in values.iter().enumerate() {
                w.row(&[i.to_string(), fmt_f64(*v)]);
            }
            w.finish()
        }
        GridFunction::Fourier { coeffs } => {
            let modes = (coeffs.len() / 2) as i64;
            let mut w = CsvWriter::new(&["index", "re", "im"]);
            for (i, c) in coeffs.iter().enumerate() {
                w.row(&[(i as i64 - modes).to_string(), fmt_f64(c.re), fmt_f64(c.im)]);
            }
            w.finish()
        }
    }
}

/// Serializes a value as pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for x in [0.1, -std::f64::consts::PI, 1e-300, 6.02e23, 1.0 / 3.0, 123456.789, 2.5e-6, f64::MAX] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(1e-7), "1e-7");
        assert_eq!(fmt_f64(3.0), "3");
    }

    #[test]
    fn csv_layout() {
        let f = GridFunction::Cells {
            values: vec![0.5, 0.25],
            lo: 0.0,
            hi: 1.0,
        };
        assert_eq!(grid_function_csv(&f), "index,value\n0,0.5\n1,0.25\n");
    }
}
