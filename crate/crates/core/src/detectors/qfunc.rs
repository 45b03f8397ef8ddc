use std::f64::consts::SQRT_2;

/// Standard normal tail probability `Q(x) = P(Z > x)`.
///
/// Computed as `erfc(x / √2) / 2`, which keeps full relative precision in
/// the far right tail; the left tail is `1 - Q(-x)` evaluated the same way.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson quadrature of the standard normal density over
    /// `[x, 12]`; the mass beyond 12 is below 1e-32.
    fn q_by_quadrature(x: f64) -> f64 {
        let upper = 12.0;
        if x >= upper {
            return 0.0;
        }
        let n = 40_000usize;
        let h = (upper - x) / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = pdf(x) + pdf(upper);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * pdf(x + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn symmetric_point() {
        assert_eq!(q_function(0.0), 0.5);
    }

    #[test]
    fn complement_identity() {
        for i in -80..=80 {
            let x = i as f64 / 10.0;
            assert!((q_function(x) - (1.0 - q_function(-x))).abs() < 1e-15);
        }
    }

    #[test]
    fn five_percent_quantile() {
        assert!((q_function(1.644_853_626_951_472_2) - 0.05).abs() < 1e-8);
    }

    #[test]
    fn matches_quadrature_oracle() {
        for i in -32..=32 {
            let x = i as f64 / 4.0;
            let err = (q_function(x) - q_by_quadrature(x)).abs();
            assert!(err < 1e-12, "x = {x}: |err| = {err:e}");
        }
    }

    #[test]
    fn limits() {
        assert_eq!(q_function(f64::NEG_INFINITY), 1.0);
        assert_eq!(q_function(f64::INFINITY), 0.0);
    }
}
