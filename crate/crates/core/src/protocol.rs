//! The feedback loop: dephasing, weak measurement, conditional rotation.
//!
//! Two routes evaluate the same protocol. [`run_protocol_exact`] propagates
//! density matrices through every branch; the closed forms
//! ([`avg_fidelity_analytic`], [`eta_opt`], [`chi_opt`], [`avg_fidelity_opt`])
//! give the optimized fidelity directly. Agreement between them pins the
//! sign conventions of the whole stack.
//!
//! The correction angle `η` is an angle on the Bloch sphere: outcome `+`
//! turns the state by `η` about the y axis toward `+x`, outcome `−` by `η`
//! the other way.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{dephase_unchecked, phase_flip, sample_unchecked, KrausPair};
use crate::error::{check_range, Result};
use crate::qubit::{
    expectation, input_state_unchecked, rotation_y, BlochVector, Ket2, Mat2, PureQubit, QubitState,
    Sign, Unitary2,
};

/// A named `(θ, p)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub theta: f64,
    pub p: f64,
}

impl OperatingPoint {
    /// Where the hardware run was taken.
    pub const EXPERIMENT: OperatingPoint = OperatingPoint {
        theta: 0.715,
        p: 0.145,
    };
    /// Location of the largest gain of variable strength over the DN/H schemes.
    pub const MAX_IMPROVEMENT: OperatingPoint = OperatingPoint {
        theta: 0.715,
        p: 0.115,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub theta: f64,
    pub p: f64,
    pub chi: f64,
    pub eta: f64,
}

impl ProtocolParams {
    pub fn new(theta: f64, p: f64, chi: f64, eta: f64) -> Result<Self> {
        let params = Self { theta, p, chi, eta };
        params.validate()?;
        Ok(params)
    }

    pub fn for_scheme(theta: f64, p: f64, scheme: SchemeKind) -> Result<Self> {
        check_range("theta", theta, 0.0, FRAC_PI_2, "[0, pi/2]")?;
        check_range("p", p, 0.0, 0.5, "[0, 1/2]")?;
        let (chi, eta) = scheme.resolve(theta, p);
        Self::new(theta, p, chi, eta)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("theta", self.theta, 0.0, FRAC_PI_2, "[0, pi/2]")?;
        check_range("p", self.p, 0.0, 0.5, "[0, 1/2]")?;
        check_range("chi", self.chi, 0.0, FRAC_PI_2, "[0, pi/2]")?;
        if !self.eta.is_finite() {
            return Err(crate::Error::Domain {
                name: "eta",
                value: self.eta,
                range: "finite",
            });
        }
        Ok(())
    }

    pub fn strength(&self) -> f64 {
        self.chi.cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SchemeKind {
    /// No measurement, no correction.
    DoNothing,
    /// Projective measurement with the best correction for it.
    Helstrom,
    /// Optimal strength and correction.
    Optimal,
    Custom {
        chi: f64,
        eta: f64,
    },
}

impl SchemeKind {
    /// `(χ, η)` for this scheme at `(θ, p)`.
    pub fn resolve(&self, theta: f64, p: f64) -> (f64, f64) {
        match *self {
            SchemeKind::DoNothing => (FRAC_PI_2, 0.0),
            SchemeKind::Helstrom => (0.0, eta_opt(theta, p, 0.0)),
            SchemeKind::Optimal => {
                let chi = chi_opt(theta, p).chi;
                (chi, eta_opt(theta, p, chi))
            }
            SchemeKind::Custom { chi, eta } => (chi, eta),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::DoNothing => "dn",
            SchemeKind::Helstrom => "helstrom",
            SchemeKind::Optimal => "optimal",
            SchemeKind::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolResult {
    pub params: ProtocolParams,
    pub fidelity_plus: f64,
    pub fidelity_minus: f64,
    pub fidelity_avg: f64,
    pub output_plus: QubitState,
    pub output_minus: QubitState,
    /// `[input][outcome]`, indexed by [`Sign::index`].
    pub outcome_probabilities: [[f64; 2]; 2],
}

impl ProtocolResult {
    pub fn fidelity(&self, input: Sign) -> f64 {
        match input {
            Sign::Plus => self.fidelity_plus,
            Sign::Minus => self.fidelity_minus,
        }
    }

    pub fn output(&self, input: Sign) -> &QubitState {
        match input {
            Sign::Plus => &self.output_plus,
            Sign::Minus => &self.output_minus,
        }
    }
}

/// Rotation applied after `outcome`. Fixed pairing: `+` turns by `+η`
/// toward `+x`, which is `exp(−iηY/2)`.
pub fn correction_unitary(outcome: Sign, eta: f64) -> Unitary2 {
    rotation_y(eta / 2.0, outcome.flip())
}

/// The control map `C(ρ) = Σ_o Y_o M_o ρ M_o† Y_o†` for any input state.
pub fn control_map(rho: &QubitState, chi: f64, eta: f64) -> Result<QubitState> {
    check_range("chi", chi, 0.0, FRAC_PI_2, "[0, pi/2]")?;
    let kraus = KrausPair::new_unchecked(chi);
    let mut out = Mat2::zeros();
    for o in Sign::BOTH {
        let u = correction_unitary(o, eta);
        out += u.matrix() * kraus.unnormalized_post_state(rho.matrix(), o) * u.matrix().adjoint();
    }
    Ok(QubitState::new_unchecked(out))
}

/// Noisy inputs at fixed `(θ, p)`, shared by every `(χ, η)` evaluation.
#[derive(Debug, Clone)]
pub struct ProtocolEvaluator {
    theta: f64,
    p: f64,
    inputs: [PureQubit; 2],
    noisy: [QubitState; 2],
}

impl ProtocolEvaluator {
    pub fn new(theta: f64, p: f64) -> Result<Self> {
        check_range("theta", theta, 0.0, FRAC_PI_2, "[0, pi/2]")?;
        check_range("p", p, 0.0, 0.5, "[0, 1/2]")?;
        let inputs = Sign::BOTH.map(|s| input_state_unchecked(theta, s));
        let noisy = inputs.map(|psi| dephase_unchecked(&psi.to_density(), p));
        Ok(Self {
            theta,
            p,
            inputs,
            noisy,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn input(&self, sign: Sign) -> &PureQubit {
        &self.inputs[sign.index()]
    }

    pub fn noisy_input(&self, sign: Sign) -> &QubitState {
        &self.noisy[sign.index()]
    }

    /// Measures both noisy inputs at strength `cos χ`. `χ` is not range
    /// checked here.
    pub fn measured(&self, chi: f64) -> MeasuredBranches<'_> {
        let kraus = KrausPair::new_unchecked(chi);
        let branches = self
            .noisy
            .map(|rho| Sign::BOTH.map(|o| kraus.unnormalized_post_state(rho.matrix(), o)));
        MeasuredBranches {
            evaluator: self,
            chi,
            branches,
        }
    }

    pub fn frame(&self, eta: f64) -> CorrectionFrame {
        let u = Sign::BOTH.map(|o| correction_unitary(o, eta).adjoint());
        CorrectionFrame {
            eta,
            kets: self
                .inputs
                .map(|psi| u.map(|ud| ud.matrix() * psi.amplitudes())),
        }
    }

    /// Average fidelity at `(χ, η)`.
    pub fn average_fidelity(&self, chi: f64, eta: f64) -> f64 {
        let [a, b] = self.measured(chi).fidelities(eta);
        0.5 * (a + b)
    }
}

/// Unnormalized post-measurement states `M_o ρ′ M_o†` for both inputs.
#[derive(Debug, Clone)]
pub struct MeasuredBranches<'a> {
    evaluator: &'a ProtocolEvaluator,
    chi: f64,
    branches: [[Mat2; 2]; 2],
}

impl MeasuredBranches<'_> {
    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// `[input][outcome]`
    pub fn probabilities(&self) -> [[f64; 2]; 2] {
        self.branches.map(|b| b.map(|m| m.trace().re))
    }

    /// Corrected output `C(ρ′)` for each input.
    pub fn corrected(&self, eta: f64) -> [Mat2; 2] {
        let u = Sign::BOTH.map(|o| correction_unitary(o, eta));
        self.branches.map(|b| {
            let mut out = Mat2::zeros();
            for o in Sign::BOTH {
                let m = u[o.index()].matrix();
                out += m * b[o.index()] * m.adjoint();
            }
            out
        })
    }

    /// `⟨ψ±|C(ρ′±)|ψ±⟩`
    pub fn fidelities(&self, eta: f64) -> [f64; 2] {
        self.fidelities_in(&self.evaluator.frame(eta))
    }

    /// As [`fidelities`](Self::fidelities) with the rotated targets
    /// precomputed, for scans that reuse one `η` across many `χ`.
    pub fn fidelities_in(&self, frame: &CorrectionFrame) -> [f64; 2] {
        Sign::BOTH.map(|s| {
            Sign::BOTH
                .into_iter()
                .map(|o| {
                    quadratic_form(
                        &frame.kets[s.index()][o.index()],
                        &self.branches[s.index()][o.index()],
                    )
                })
                .sum()
        })
    }
}

/// `U_o(η)† |ψ_s⟩` for every input `s` and outcome `o`, so that
/// `⟨ψ|U B U†|ψ⟩ = ⟨φ|B|φ⟩`.
#[derive(Debug, Clone, Copy)]
pub struct CorrectionFrame {
    eta: f64,
    kets: [[Ket2; 2]; 2],
}

impl CorrectionFrame {
    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// `⟨φ|B|φ⟩` for Hermitian `B`.
fn quadratic_form(phi: &Ket2, b: &Mat2) -> f64 {
    let (a0, a1) = (phi[0], phi[1]);
    b[(0, 0)].re * a0.norm_sqr()
        + b[(1, 1)].re * a1.norm_sqr()
        + 2.0 * (a0.conj() * b[(0, 1)] * a1).re
}

/// Exact density-matrix evaluation of one control run for both inputs.
pub fn run_protocol_exact(params: &ProtocolParams) -> Result<ProtocolResult> {
    params.validate()?;
    let evaluator = ProtocolEvaluator::new(params.theta, params.p)?;
    let measured = evaluator.measured(params.chi);
    let out = measured.corrected(params.eta);
    let [fp, fm] = Sign::BOTH.map(|s| expectation(evaluator.input(s), &out[s.index()]).re);
    Ok(ProtocolResult {
        params: *params,
        fidelity_plus: fp,
        fidelity_minus: fm,
        fidelity_avg: 0.5 * (fp + fm),
        output_plus: QubitState::new_unchecked(out[0]),
        output_minus: QubitState::new_unchecked(out[1]),
        outcome_probabilities: measured.probabilities(),
    })
}

/// `1 − (1 − (1 − 2p) sin χ) cos²θ`, the part of the fidelity along the
/// ideal input direction.
fn aligned_term(theta: f64, p: f64, chi: f64) -> f64 {
    let c2 = theta.cos().powi(2);
    1.0 - (1.0 - (1.0 - 2.0 * p) * chi.sin()) * c2
}

/// Average fidelity at strength `cos χ` with the correction angle already
/// optimized.
pub fn avg_fidelity_analytic(theta: f64, p: f64, chi: f64) -> f64 {
    let a = aligned_term(theta, p, chi);
    let b = chi.cos() * theta.cos();
    0.5 + 0.5 * (a * a + b * b).sqrt()
}

/// Optimal correction angle, in `[0, π/2]`.
pub fn eta_opt(theta: f64, p: f64, chi: f64) -> f64 {
    let num = chi.cos() * theta.cos();
    let den = aligned_term(theta, p, chi);
    num.atan2(den.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiOpt {
    pub chi: f64,
    /// `θ = 0, p = 0`: every strength is optimal; `chi` is `π/2`.
    pub degenerate: bool,
}

/// Optimal measurement angle `χ`; the strength is `cos χ`.
pub fn chi_opt(theta: f64, p: f64) -> ChiOpt {
    let q = 1.0 - 2.0 * p;
    let num = q * theta.sin().powi(2);
    let den = 1.0 - q * q * theta.cos().powi(2);
    if den <= 1e-15 {
        return ChiOpt {
            chi: FRAC_PI_2,
            degenerate: true,
        };
    }
    ChiOpt {
        chi: (num / den).clamp(0.0, 1.0).asin(),
        degenerate: false,
    }
}

/// Fidelity at the optimal strength and correction.
pub fn avg_fidelity_opt(theta: f64, p: f64) -> f64 {
    let q = 1.0 - 2.0 * p;
    let c2 = theta.cos().powi(2);
    let s4 = theta.sin().powi(4);
    let den = 1.0 - q * q * c2;
    if den <= 1e-15 {
        return 1.0;
    }
    0.5 + 0.5 * (c2 + s4 / den).sqrt()
}

/// Do-nothing scheme, `1 − p cos²θ`.
pub fn fidelity_dn(theta: f64, p: f64) -> f64 {
    1.0 - p * theta.cos().powi(2)
}

/// Helstrom scheme, `½ + ½ √(sin⁴θ + cos²θ)`; independent of `p`.
pub fn fidelity_h(theta: f64, _p: f64) -> f64 {
    0.5 + 0.5 * (theta.sin().powi(4) + theta.cos().powi(2)).sqrt()
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl Estimate {
    fn from_moments(sum: f64, sum_sq: f64, n: u64) -> Self {
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                samples: 0,
            };
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / nf).sqrt(),
            samples: n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloResult {
    pub params: ProtocolParams,
    pub fidelity_plus: Estimate,
    pub fidelity_minus: Estimate,
    pub fidelity_avg: Estimate,
    /// Empirical mean of the corrected states per input; the maximally
    /// mixed state if an input was never drawn.
    pub output_plus: QubitState,
    pub output_minus: QubitState,
}

impl MonteCarloResult {
    pub fn output_bloch(&self, input: Sign) -> BlochVector {
        match input {
            Sign::Plus => self.output_plus.bloch(),
            Sign::Minus => self.output_minus.bloch(),
        }
    }
}

/// Shot-by-shot simulation: random input sign, random phase flip, Born-rule
/// outcome, conditional correction, pure-state fidelity against the
/// noiseless input.
pub fn run_protocol_mc<R: Rng + ?Sized>(
    params: &ProtocolParams,
    n_shots: u64,
    rng: &mut R,
) -> Result<MonteCarloResult> {
    params.validate()?;
    if n_shots == 0 {
        return Err(crate::Error::Domain {
            name: "n_shots",
            value: 0.0,
            range: ">= 1",
        });
    }
    let kraus = KrausPair::new_unchecked(params.chi);
    let inputs = Sign::BOTH.map(|s| input_state_unchecked(params.theta, s));
    let clean = inputs.map(|psi| psi.to_density());
    let flipped = clean.map(|rho| phase_flip(&rho));
    let corrections = Sign::BOTH.map(|o| correction_unitary(o, params.eta));

    let mut sums = [[0.0f64; 2]; 2];
    let mut counts = [0u64; 2];
    let mut outputs = [Mat2::zeros(); 2];
    let (mut all_sum, mut all_sq) = (0.0, 0.0);

    for _ in 0..n_shots {
        let sign = if rng.random::<bool>() {
            Sign::Plus
        } else {
            Sign::Minus
        };
        let i = sign.index();
        let state = if rng.random::<f64>() < params.p {
            &flipped[i]
        } else {
            &clean[i]
        };
        let outcome = sample_unchecked(&kraus, state, rng);
        let out = outcome
            .post_state
            .apply_unitary(&corrections[outcome.sign.index()]);
        let f = expectation(&inputs[i], out.matrix()).re;
        sums[i][0] += f;
        sums[i][1] += f * f;
        counts[i] += 1;
        outputs[i] += out.matrix();
        all_sum += f;
        all_sq += f * f;
    }

    let per_sign = Sign::BOTH.map(|s| {
        let i = s.index();
        Estimate::from_moments(sums[i][0], sums[i][1], counts[i])
    });
    let mean_out = Sign::BOTH.map(|s| {
        let i = s.index();
        if counts[i] == 0 {
            QubitState::maximally_mixed()
        } else {
            QubitState::new_unchecked(outputs[i].unscale(counts[i] as f64))
        }
    });
    Ok(MonteCarloResult {
        params: *params,
        fidelity_plus: per_sign[0],
        fidelity_minus: per_sign[1],
        fidelity_avg: Estimate::from_moments(all_sum, all_sq, n_shots),
        output_plus: mean_out[0],
        output_minus: mean_out[1],
    })
}
