//! Numeric formatting shared by every report.

use std::collections::BTreeMap;

use serde::Serializer;

/// Round to six significant digits.
pub fn round6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// Text form of [`round6`], shortest representation.
pub fn fmt6(x: f64) -> String {
    round6(x).to_string()
}

pub fn sig6<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round6(*x))
}

pub fn sig6_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round6(*v)),
        None => s.serialize_none(),
    }
}

pub fn sig6_map<K, S>(m: &BTreeMap<K, f64>, s: S) -> Result<S::Ok, S::Error>
where
    K: serde::Serialize,
    S: Serializer,
{
    s.collect_map(m.iter().map(|(k, v)| (k, round6(*v))))
}
