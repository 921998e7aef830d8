//! Text formatting of floats for CSV and checkpoints: 17 significant digits, which
//! round-trips every `f64` exactly.

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Join numbers into one CSV row.
pub fn row(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}
