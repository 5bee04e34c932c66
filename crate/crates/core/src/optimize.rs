//! One-dimensional maximization helpers.

/// 1/φ
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(x, f(x))`. The end points are compared against the interior
/// estimate so a maximum sitting on the boundary is returned exactly.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    if b - a <= tol {
        let x = 0.5 * (a + b);
        return (x, f(x));
    }
    let (flo, fhi) = (f(a), f(b));
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    let (mut x, mut fx) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if flo > fx {
        (x, fx) = (lo.min(hi), flo);
    }
    if fhi > fx {
        (x, fx) = (lo.max(hi), fhi);
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3) * (x - 0.3), -1.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx.abs() < 1e-15);
    }

    #[test]
    fn finds_kinked_peak() {
        let (x, _) = golden_section_max(|x| -(x - 1.25).abs(), 0.0, 3.0, 1e-10);
        assert!((x - 1.25).abs() < 1e-9);
    }

    #[test]
    fn boundary_maximum_is_exact() {
        let (x, fx) = golden_section_max(|x| x, 0.0, 1.0, 1e-6);
        assert_eq!((x, fx), (1.0, 1.0));
        let (x, _) = golden_section_max(|x| -x, 0.0, 1.0, 1e-6);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn collapsed_interval() {
        let (x, fx) = golden_section_max(|x| 2.0 * x, 0.5, 0.5, 1e-6);
        assert_eq!((x, fx), (0.5, 1.0));
    }
}
