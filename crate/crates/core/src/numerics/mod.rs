pub mod quadrature;
pub mod roots;
pub mod special;

/// Type-7 (linear interpolation) sample quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::quantile_sorted;

    #[test]
    fn type7_matches_reference_values() {
        // R: quantile(c(1, 2, 4, 7, 11), c(0, .1, .5, .9, 1), type = 7)
        let x = [1.0, 2.0, 4.0, 7.0, 11.0];
        let got: Vec<f64> = [0.0, 0.1, 0.5, 0.9, 1.0].iter().map(|&p| quantile_sorted(&x, p)).collect();
        let want = [1.0, 1.4, 4.0, 9.4, 11.0];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }
}
