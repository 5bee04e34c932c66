//! Parameter-plane sweeps, the improvement maximum, the DN/H crossover and a
//! brute-force optimizer that does not use any closed form.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::optimize::golden_section_max;
use crate::protocol::{
    avg_fidelity_opt, chi_opt, eta_opt, fidelity_dn, fidelity_h, ProtocolEvaluator,
};

/// Rectangular `(θ, p)` grid, end points included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub theta_min: f64,
    pub theta_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_theta: usize,
    pub n_p: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            theta_min: 0.0,
            theta_max: FRAC_PI_2,
            p_min: 0.0,
            p_max: 0.5,
            n_theta: 200,
            n_p: 200,
        }
    }
}

fn check_axis(name: &'static str, lo: f64, hi: f64, n: usize) -> Result<()> {
    if lo > hi {
        return Err(Error::Validation(format!(
            "{name}: min {lo} exceeds max {hi}"
        )));
    }
    // a single sample only makes sense for a degenerate axis
    if n == 0 || (n == 1 && lo != hi) {
        return Err(Error::Validation(format!(
            "{name}: need at least 2 points on [{lo}, {hi}], got {n}"
        )));
    }
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

impl GridSpec {
    pub fn new(
        theta_min: f64,
        theta_max: f64,
        p_min: f64,
        p_max: f64,
        n_theta: usize,
        n_p: usize,
    ) -> Result<Self> {
        let g = Self {
            theta_min,
            theta_max,
            p_min,
            p_max,
            n_theta,
            n_p,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("theta_min", self.theta_min, 0.0, FRAC_PI_2, "[0, pi/2]")?;
        check_range("theta_max", self.theta_max, 0.0, FRAC_PI_2, "[0, pi/2]")?;
        check_range("p_min", self.p_min, 0.0, 0.5, "[0, 1/2]")?;
        check_range("p_max", self.p_max, 0.0, 0.5, "[0, 1/2]")?;
        check_axis("theta", self.theta_min, self.theta_max, self.n_theta)?;
        check_axis("p", self.p_min, self.p_max, self.n_p)
    }

    pub fn thetas(&self) -> Vec<f64> {
        linspace(self.theta_min, self.theta_max, self.n_theta)
    }

    pub fn ps(&self) -> Vec<f64> {
        linspace(self.p_min, self.p_max, self.n_p)
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn theta_step(&self) -> f64 {
        step(self.theta_min, self.theta_max, self.n_theta)
    }

    fn p_step(&self) -> f64 {
        step(self.p_min, self.p_max, self.n_p)
    }
}

fn step(lo: f64, hi: f64, n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        (hi - lo) / (n - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub theta: f64,
    pub p: f64,
    pub chi_opt: f64,
    pub cos_chi_opt: f64,
    pub eta_opt: f64,
    pub f_opt: f64,
    pub f_dn: f64,
    pub f_h: f64,
    /// `f_opt − max(f_dn, f_h)`
    pub f_diff: f64,
}

impl SweepCell {
    pub fn at(theta: f64, p: f64) -> Self {
        let chi = chi_opt(theta, p).chi;
        let f_opt = avg_fidelity_opt(theta, p);
        let f_dn = fidelity_dn(theta, p);
        let f_h = fidelity_h(theta, p);
        Self {
            theta,
            p,
            chi_opt: chi,
            cos_chi_opt: chi.cos(),
            eta_opt: eta_opt(theta, p, chi),
            f_opt,
            f_dn,
            f_h,
            f_diff: f_opt - f_dn.max(f_h),
        }
    }
}

/// Improvement of the optimal scheme over the better of the two limits.
pub fn f_diff(theta: f64, p: f64) -> f64 {
    avg_fidelity_opt(theta, p) - fidelity_dn(theta, p).max(fidelity_h(theta, p))
}

/// One cell per grid point, `θ` as the outer (slow) index.
pub fn sweep(grid: &GridSpec) -> Result<Vec<SweepCell>> {
    grid.validate()?;
    let thetas = grid.thetas();
    let ps = grid.ps();
    let n_p = ps.len();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|k| SweepCell::at(thetas[k / n_p], ps[k % n_p]))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxImprovement {
    pub theta: f64,
    pub p: f64,
    pub f_diff: f64,
    /// The refined point sits on an edge of the searched region.
    pub boundary: bool,
}

/// Coarse argmax of `f_diff` on the grid, then golden-section refinement
/// inside the neighbouring cells.
///
/// The improvement has a ridge with a kink along the DN/H crossover, so
/// alternating one-axis searches stall on it. The refinement instead
/// maximizes the profile `θ ↦ max_p f_diff(θ, p)`: an outer golden-section
/// over `θ`, each step running an inner one over `p`.
pub fn find_max_improvement(grid: &GridSpec, refine_tolerance: f64) -> Result<MaxImprovement> {
    if !(refine_tolerance > 0.0 && refine_tolerance.is_finite()) {
        return Err(Error::Domain {
            name: "refine_tolerance",
            value: refine_tolerance,
            range: "> 0",
        });
    }
    let cells = sweep(grid)?;
    let best = cells
        .iter()
        .copied()
        .reduce(|a, b| if b.f_diff > a.f_diff { b } else { a })
        .ok_or_else(|| Error::Validation("empty grid".into()))?;

    let (dt, dp) = (2.0 * grid.theta_step(), 2.0 * grid.p_step());
    let t_lo = (best.theta - dt).max(grid.theta_min);
    let t_hi = (best.theta + dt).min(grid.theta_max);
    let p_lo = (best.p - dp).max(grid.p_min);
    let p_hi = (best.p + dp).min(grid.p_max);

    // the profile is flat in θ, so inner-search noise must stay well below
    // the outer tolerance
    let inner_tol = 1e-3 * refine_tolerance;
    let inner = |theta: f64| golden_section_max(|p| f_diff(theta, p), p_lo, p_hi, inner_tol);
    let (theta, _) = golden_section_max(|t| inner(t).1, t_lo, t_hi, refine_tolerance);
    let (p, value) = inner(theta);

    let (theta, p, value) = if value >= best.f_diff {
        (theta, p, value)
    } else {
        (best.theta, best.p, best.f_diff)
    };
    let near = |x: f64, edge: f64| (x - edge).abs() <= refine_tolerance;
    let boundary = (grid.n_theta > 1
        && (near(theta, grid.theta_min) || near(theta, grid.theta_max)))
        || (grid.n_p > 1 && (near(p, grid.p_min) || near(p, grid.p_max)));
    Ok(MaxImprovement {
        theta,
        p,
        f_diff: value,
        boundary,
    })
}

/// Noise level at which doing nothing and the Helstrom scheme tie.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverPoint {
    pub theta: f64,
    /// `None` when `f_dn − f_h` does not change sign on `[0, 1/2]`.
    pub p_star: Option<f64>,
}

/// `[1 − √(sin⁴θ + cos²θ)] / (2 cos²θ)` when it lies in `[0, 1/2]`.
pub fn crossover_closed_form(theta: f64) -> Option<f64> {
    let c2 = theta.cos().powi(2);
    if c2 <= 1e-15 {
        return None;
    }
    let p = (1.0 - (theta.sin().powi(4) + c2).sqrt()) / (2.0 * c2);
    (0.0..=0.5).contains(&p).then_some(p)
}

/// Bisection on `p` of `f_dn(θ, p) − f_h(θ, p)`.
pub fn crossover_curve(theta_list: &[f64], tolerance: f64) -> Result<Vec<CrossoverPoint>> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::Domain {
            name: "tolerance",
            value: tolerance,
            range: "> 0",
        });
    }
    theta_list
        .iter()
        .map(|&theta| {
            check_range("theta", theta, 0.0, FRAC_PI_2, "[0, pi/2]")?;
            Ok(CrossoverPoint {
                theta,
                p_star: bisect_crossover(theta, tolerance),
            })
        })
        .collect()
}

fn bisect_crossover(theta: f64, tolerance: f64) -> Option<f64> {
    let g = |p: f64| fidelity_dn(theta, p) - fidelity_h(theta, p);
    // g decreases in p and g(0) = 1 − f_h ≥ 0
    let (mut lo, mut hi) = (0.0, 0.5);
    if g(lo) <= 0.0 {
        return (g(hi) < 0.0).then_some(lo);
    }
    if g(hi) >= 0.0 {
        return None;
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceOpt {
    pub chi: f64,
    pub eta: f64,
    pub fidelity: f64,
    /// Density-matrix evaluations spent.
    pub evaluations: usize,
}

/// Exhaustive `(χ, η)` scan of the density-matrix protocol on `[0, π/2]²`
/// at spacing `resolution`, followed by one golden-section pass per axis
/// around the best grid point.
pub fn brute_force_protocol_opt(theta: f64, p: f64, resolution: f64) -> Result<BruteForceOpt> {
    if !(resolution > 0.0 && resolution <= 1e-2) {
        return Err(Error::Domain {
            name: "resolution",
            value: resolution,
            range: "(0, 1e-2]",
        });
    }
    let evaluator = ProtocolEvaluator::new(theta, p)?;
    let n = (FRAC_PI_2 / resolution).ceil() as usize + 1;
    let axis = linspace(0.0, FRAC_PI_2, n);

    let frames: Vec<_> = axis.iter().map(|&eta| evaluator.frame(eta)).collect();

    let (i_best, j_best, f_best) = axis
        .par_iter()
        .enumerate()
        .map(|(i, &chi)| {
            let measured = evaluator.measured(chi);
            let mut best = (i, 0, f64::NEG_INFINITY);
            for (j, frame) in frames.iter().enumerate() {
                let [a, b] = measured.fidelities_in(frame);
                let f = 0.5 * (a + b);
                if f > best.2 {
                    best = (i, j, f);
                }
            }
            best
        })
        .reduce(
            || (0, 0, f64::NEG_INFINITY),
            |a, b| {
                if b.2 > a.2 || (b.2 == a.2 && (b.0, b.1) < (a.0, a.1)) {
                    b
                } else {
                    a
                }
            },
        );

    let h = FRAC_PI_2 / (n - 1) as f64;
    let bracket = |x: f64| ((x - h).max(0.0), (x + h).min(FRAC_PI_2));
    let tol = 1e-3 * resolution;
    let mut evaluations = n * n;
    let mut count = 0usize;

    let mut chi = axis[i_best];
    let mut eta = axis[j_best];
    let mut f = f_best;

    let (lo, hi) = bracket(chi);
    let (c, fc) = golden_section_max(
        |x| {
            count += 1;
            evaluator.average_fidelity(x, eta)
        },
        lo,
        hi,
        tol,
    );
    if fc > f {
        (chi, f) = (c, fc);
    }
    let (lo, hi) = bracket(eta);
    let measured = evaluator.measured(chi);
    let (e, fe) = golden_section_max(
        |x| {
            count += 1;
            let [a, b] = measured.fidelities(x);
            0.5 * (a + b)
        },
        lo,
        hi,
        tol,
    );
    if fe > f {
        (eta, f) = (e, fe);
    }
    evaluations += count;
    Ok(BruteForceOpt {
        chi,
        eta,
        fidelity: f,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0.0, 1.0, 0.0, 0.5, 1, 10).is_err());
        assert!(GridSpec::new(1.0, 0.5, 0.0, 0.5, 10, 10).is_err());
        assert!(GridSpec::new(0.0, 2.0, 0.0, 0.5, 10, 10).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0.0, 0.6, 10, 10).is_err());
        assert!(GridSpec::new(0.7, 0.7, 0.1, 0.1, 1, 1).is_ok());
        let g = GridSpec::default();
        let t = g.thetas();
        assert_eq!((t.len(), t[0], t[199]), (200, 0.0, FRAC_PI_2));
    }

    #[test]
    fn corner_cells() {
        let cells = sweep(&GridSpec::new(0.0, FRAC_PI_2, 0.0, 0.5, 2, 2).unwrap()).unwrap();
        assert_eq!(cells.len(), 4);
        // row-major, θ outer
        assert_eq!((cells[1].theta, cells[1].p), (0.0, 0.5));
        assert_eq!((cells[2].theta, cells[2].p), (FRAC_PI_2, 0.0));
        assert_abs_diff_eq!(cells[0].f_opt, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cells[0].f_diff, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sweep_cells_satisfy_invariants_and_match_serial() {
        let g = GridSpec::new(0.0, FRAC_PI_2, 0.0, 0.5, 41, 37).unwrap();
        let par = sweep(&g).unwrap();
        let serial: Vec<SweepCell> = g
            .thetas()
            .iter()
            .flat_map(|&t| g.ps().into_iter().map(move |p| SweepCell::at(t, p)))
            .collect();
        assert_eq!(par, serial);
        for c in &par {
            assert!((c.f_diff - (c.f_opt - c.f_dn.max(c.f_h))).abs() <= 1e-12);
            assert!(c.f_diff >= -1e-12, "{c:?}");
        }
    }

    #[test]
    fn crossover_matches_closed_form() {
        let thetas: Vec<f64> = (1..100).map(|i| i as f64 * FRAC_PI_2 / 100.0).collect();
        for cp in crossover_curve(&thetas, 1e-12).unwrap() {
            let p = cp.p_star.unwrap();
            let closed = crossover_closed_form(cp.theta).unwrap();
            assert!((p - closed).abs() < 1e-9, "θ={} {p} vs {closed}", cp.theta);
            assert!((fidelity_dn(cp.theta, p) - fidelity_h(cp.theta, p)).abs() < 1e-9);
        }
    }

    #[test]
    fn crossover_operating_point_and_edges() {
        let cp = crossover_curve(&[0.715], 1e-10).unwrap()[0];
        let p = cp.p_star.unwrap();
        assert_abs_diff_eq!(
            1.0 - p * 0.715f64.cos().powi(2),
            fidelity_h(0.715, 0.0),
            epsilon = 1e-9
        );
        assert!((p - 0.115).abs() < 0.005, "{p}");
        assert_eq!(
            crossover_curve(&[FRAC_PI_2], 1e-10).unwrap()[0].p_star,
            None
        );
        assert!(crossover_curve(&[0.3], 0.0).is_err());
        assert!(crossover_curve(&[-0.1], 1e-6).is_err());
        // below the curve doing nothing wins
        assert!(fidelity_dn(0.715, p - 0.01) > fidelity_h(0.715, p - 0.01));
        assert!(fidelity_dn(0.715, p + 0.01) < fidelity_h(0.715, p + 0.01));
    }

    #[test]
    fn max_improvement_on_restricted_grid_is_on_the_boundary() {
        let g = GridSpec::new(0.0, FRAC_PI_2, 0.4, 0.5, 50, 50).unwrap();
        let m = find_max_improvement(&g, 1e-6).unwrap();
        assert!(m.boundary);
        // dense scan oracle
        let mut best = f64::NEG_INFINITY;
        for i in 0..100 {
            for j in 0..100 {
                let t = FRAC_PI_2 * i as f64 / 99.0;
                let p = 0.4 + 0.1 * j as f64 / 99.0;
                best = best.max(f_diff(t, p));
            }
        }
        assert!(m.f_diff >= best - 1e-6, "{} vs {best}", m.f_diff);
        assert!(m.f_diff - best < 1e-4);
    }

    #[test]
    fn max_improvement_collapsed_grid() {
        let g = GridSpec::new(0.5, 0.5, 0.2, 0.2, 1, 1).unwrap();
        let m = find_max_improvement(&g, 1e-6).unwrap();
        assert_eq!((m.theta, m.p), (0.5, 0.2));
        assert_abs_diff_eq!(m.f_diff, f_diff(0.5, 0.2), epsilon = 1e-15);
        assert!(find_max_improvement(&g, 0.0).is_err());
    }

    #[test]
    fn brute_force_trivial_points() {
        let b = brute_force_protocol_opt(0.4, 0.0, 1e-2).unwrap();
        assert_abs_diff_eq!(b.fidelity, 1.0, epsilon = 1e-12);
        let b = brute_force_protocol_opt(FRAC_PI_2, 0.3, 1e-2).unwrap();
        assert_abs_diff_eq!(b.fidelity, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.eta, 0.0, epsilon = 1e-12);
        assert!(brute_force_protocol_opt(0.4, 0.1, 0.02).is_err());
        assert!(brute_force_protocol_opt(0.4, 0.6, 1e-2).is_err());
    }

    #[test]
    fn brute_force_matches_closed_form_at_operating_point() {
        let b = brute_force_protocol_opt(0.715, 0.145, 1e-3).unwrap();
        let chi = chi_opt(0.715, 0.145).chi;
        assert!((b.chi - chi).abs() < 2e-3, "{} vs {chi}", b.chi);
        assert!((b.eta - eta_opt(0.715, 0.145, chi)).abs() < 2e-3);
        assert!((b.fidelity - avg_fidelity_opt(0.715, 0.145)).abs() < 1e-5);
    }
}
