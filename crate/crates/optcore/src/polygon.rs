//! Polygonal outer approximation of a disc `p^2 + q^2 <= s^2`.

use std::f64::consts::PI;

use crate::model::{ModelError, ModelIR, Sense, VarId};

/// Adds `k` rows `p cos(2 pi i / k) + q sin(2 pi i / k) <= s_max` for
/// `i = 0..k`. Returns an error if `k` is odd or below 4.
pub fn polygonize_magnitude(
    model: &mut ModelIR,
    tag: &str,
    p: VarId,
    q: VarId,
    s_max: f64,
    k: usize,
) -> Result<(), ModelError> {
    if k < 4 || !k.is_multiple_of(2) {
        return Err(ModelError::NonFinite(format!(
            "{tag}: polygon side count {k}"
        )));
    }
    for i in 0..k {
        let a = 2.0 * PI * i as f64 / k as f64;
        let (c, s) = (a.cos(), a.sin());
        let c = if c.abs() < 1e-15 { 0.0 } else { c };
        let s = if s.abs() < 1e-15 { 0.0 } else { s };
        model.add_row(format!("{tag}#{i}"), [(p, c), (q, s)], Sense::Le, s_max)?;
    }
    Ok(())
}

/// Largest radial overshoot of the polygon relative to the disc, as a
/// fraction of `s_max`.
pub fn polygon_overshoot(k: usize) -> f64 {
    1.0 / (PI / k as f64).cos() - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_side_count() {
        let mut m = ModelIR::new();
        let p = m.add_var("p", -1.0, 1.0);
        let q = m.add_var("q", -1.0, 1.0);
        assert!(polygonize_magnitude(&mut m, "s", p, q, 1.0, 5).is_err());
        assert!(polygonize_magnitude(&mut m, "s", p, q, 1.0, 2).is_err());
        assert!(polygonize_magnitude(&mut m, "s", p, q, 1.0, 8).is_ok());
        assert_eq!(m.num_rows(), 8);
    }

    #[test]
    fn overshoot_for_twelve_sides() {
        assert!((polygon_overshoot(12) - 0.03527618).abs() < 1e-7);
    }
}
