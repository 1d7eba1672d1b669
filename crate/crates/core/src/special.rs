//! Complementary error function.

/// `erfc(x) = 1 - 2/sqrt(pi) * integral_0^x exp(-t^2) dt`.
///
/// Delegates to the `libm` port of the fdlibm rational approximations, which
/// stay within a few ulp over the whole real line (including the
/// `erfc(x) ~ exp(-x^2)` tail, where relative accuracy is kept).
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::erfc_by_quadrature;

    #[test]
    fn fixed_points() {
        assert_eq!(erfc(0.0), 1.0);
        assert_eq!(erfc(f64::INFINITY), 0.0);
        assert_eq!(erfc(f64::NEG_INFINITY), 2.0);
        assert!(erfc(30.0) < 1e-300);
    }

    #[test]
    fn matches_defining_integral() {
        let mut x = -10.0;
        while x <= 10.0 {
            let oracle = erfc_by_quadrature(x);
            let rel = ((erfc(x) - oracle) / oracle).abs();
            assert!(
                rel <= 1e-12,
                "x = {x}: {} vs {oracle} (rel {rel:e})",
                erfc(x)
            );
            x += 0.0625;
        }
    }

    #[test]
    fn reflection() {
        for &x in &[0.01, 0.3, 1.7, 4.2, 9.5] {
            assert!((erfc(-x) - (2.0 - erfc(x))).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn known_value() {
        // frozen from the quadrature oracle
        let v = erfc(0.19839);
        assert!((v - 0.779_043_428).abs() < 1e-9, "{v}");
        assert!((v - erfc_by_quadrature(0.19839)).abs() < 1e-15);
    }
}
