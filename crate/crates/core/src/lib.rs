//! Sharp discrete isoperimetric constants on weighted geometric graphs.
//!
//! The pipeline: Minkowski cell optimization ([`geometry`]), Neumann problems and
//! the optimal constant C(g,Ω) ([`pde`]), subdifferential chains ([`subdifferential`]),
//! semidiscrete transport ([`transport`]) and exhaustive checks on lattice
//! examples ([`lattices`], [`isoperimetry`]).

pub mod error;
pub mod geometry;
pub mod graph;
pub mod isoperimetry;
pub mod lattices;
pub mod linalg;
pub mod pde;
pub mod simplex;
pub mod subdifferential;
pub mod transport;

pub use error::{Error, Result};

/// Vertex deduplication distance.
pub const EPS_VERT: f64 = 1e-9;
/// Geometric residual tolerance (closure identity, reciprocity, linear precision).
pub const EPS_GEOM: f64 = 1e-8;
/// Relative tolerance for chain equality flags.
pub const EPS_EQUAL: f64 = 1e-6;

/// Formats a float with 12 significant digits, shortest form, for byte-stable reports.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap();
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

/// Rounds every float in a JSON value to 12 significant digits.
pub fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            if let (Some(f), false) = (n.as_f64(), n.is_i64() || n.is_u64()) {
                let r: f64 = fmt_float(f).parse().unwrap_or(f);
                if let Some(m) = serde_json::Number::from_f64(r) {
                    *n = m;
                }
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_float(8.0), "8");
        assert_eq!(fmt_float(3f64.sqrt()), "1.73205080757");
        assert_eq!(fmt_float(-0.0), "0");
        assert_eq!(fmt_float(0.1 + 0.2), "0.3");
    }
}
