//! Parser for the textual map and field descriptions used on the command line:
//!
//! ```text
//! tent:a=<r>[,t=<r>]     logistic:t=<r>     circle:d=<int>,sin=<r,...>,cos=<r,...>
//! trig:[const=<r>,]sin=<r,...>,cos=<r,...>  poly:<r,...>
//! ```

use std::collections::BTreeMap;

use super::{CircleMap, LogisticMap, MapSpec, TentMap, VectorField};
use crate::error::{Error, Result};

fn split_head(s: &str) -> Result<(&str, &str)> {
    let s = s.trim();
    match s.split_once(':') {
        Some((head, rest)) => Ok((head.trim(), rest.trim())),
        None => Err(Error::parse(s, "expected `<kind>:<arguments>`")),
    }
}

fn number(token: &str) -> Result<f64> {
    let v: f64 = token
        .trim()
        .parse()
        .map_err(|_| Error::parse(token, "not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(token, "not a finite number"))
    }
}

/// `k1=v1,v2,k2=v3` → `{k1: [v1, v2], k2: [v3]}`. Values belong to the most
/// recent key.
fn keyed_lists(body: &str) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for token in body.split(',').map(str::trim) {
        if token.is_empty() {
            return Err(Error::parse(body, "empty item"));
        }
        let value = match token.split_once('=') {
            Some((k, v)) => {
                let key = k.trim().to_string();
                if out.contains_key(&key) {
                    return Err(Error::parse(token, "duplicate key"));
                }
                out.insert(key.clone(), vec![]);
                current = Some(key);
                v
            }
            None => token,
        };
        let key = current
            .as_ref()
            .ok_or_else(|| Error::parse(token, "value before any key"))?;
        out.get_mut(key).unwrap().push(number(value)?);
    }
    Ok(out)
}

fn only_keys(map: &BTreeMap<String, Vec<f64>>, allowed: &[&str]) -> Result<()> {
    for k in map.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::parse(k.as_str(), format!("unknown key (expected one of {allowed:?})")));
        }
    }
    Ok(())
}

fn scalar(map: &BTreeMap<String, Vec<f64>>, key: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) if v.len() == 1 => Ok(Some(v[0])),
        Some(_) => Err(Error::parse(key, "expects a single value")),
    }
}

pub fn parse_map(s: &str) -> Result<MapSpec> {
    let (head, body) = split_head(s)?;
    let args = keyed_lists(body)?;
    match head {
        "tent" => {
            only_keys(&args, &["a", "t"])?;
            let a = scalar(&args, "a")?.ok_or_else(|| Error::parse(s, "tent needs `a=`"))?;
            let t = scalar(&args, "t")?.unwrap_or(0.0);
            Ok(TentMap::new(a, t)?.into())
        }
        "logistic" => {
            only_keys(&args, &["t"])?;
            let t = scalar(&args, "t")?.ok_or_else(|| Error::parse(s, "logistic needs `t=`"))?;
            Ok(LogisticMap::new(t)?.into())
        }
        "circle" => {
            only_keys(&args, &["d", "sin", "cos"])?;
            let d = scalar(&args, "d")?.ok_or_else(|| Error::parse(s, "circle needs `d=`"))?;
            if d.fract() != 0.0 || d < 0.0 || d > u32::MAX as f64 {
                return Err(Error::parse(format!("d={d}"), "degree must be a non-negative integer"));
            }
            let sin = args.get("sin").cloned().unwrap_or_default();
            let cos = args.get("cos").cloned().unwrap_or_default();
            Ok(CircleMap::new(d as u32, sin, cos)?.into())
        }
        other => Err(Error::parse(other, "unknown map family (tent, logistic, circle)")),
    }
}

pub fn parse_field(s: &str) -> Result<VectorField> {
    let (head, body) = split_head(s)?;
    match head {
        "poly" => {
            let coeffs = body.split(',').map(number).collect::<Result<Vec<_>>>()?;
            Ok(VectorField::poly(coeffs))
        }
        "trig" => {
            let args = keyed_lists(body)?;
            only_keys(&args, &["const", "sin", "cos"])?;
            Ok(VectorField::trig_with_constant(
                scalar(&args, "const")?.unwrap_or(0.0),
                args.get("sin").cloned().unwrap_or_default(),
                args.get("cos").cloned().unwrap_or_default(),
            ))
        }
        other => Err(Error::parse(other, "unknown field kind (trig, poly)")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapKind;

    #[test]
    fn parses_each_family() {
        let t = parse_map("tent:a=0.5,t=0.01").unwrap();
        let tm = t.as_tent().unwrap();
        assert_eq!((tm.a(), tm.t()), (0.5, 0.01));
        assert!(matches!(parse_map("logistic:t=4").unwrap().kind(), MapKind::Logistic(_)));
        let c = parse_map("circle:d=2,sin=0.05,0.01,cos=0.02").unwrap();
        let cm = c.as_circle().unwrap();
        assert_eq!(cm.sin_coeffs(), &[0.05, 0.01]);
        assert_eq!(cm.cos_coeffs(), &[0.02]);
    }

    #[test]
    fn parses_fields() {
        assert_eq!(parse_field("poly:0.5,0.5").unwrap(), VectorField::poly([0.5, 0.5]));
        assert_eq!(parse_field("trig:sin=1").unwrap(), VectorField::trig([1.0], []));
        assert_eq!(
            parse_field("trig:const=2,cos=0,1").unwrap(),
            VectorField::trig_with_constant(2.0, [], [0.0, 1.0])
        );
    }

    #[test]
    fn reports_the_offending_token() {
        match parse_map("tent:a=zz") {
            Err(Error::Parse { token, .. }) => assert_eq!(token, "zz"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_map("henon:a=1"), Err(Error::Parse { .. })));
        assert!(matches!(parse_field("poly:"), Err(Error::Parse { .. })));
        assert!(matches!(parse_map("tent:b=1"), Err(Error::Parse { .. })));
    }

    #[test]
    fn invalid_parameters_are_preconditions() {
        assert!(matches!(parse_map("tent:a=0"), Err(Error::Precondition(_))));
    }
}
