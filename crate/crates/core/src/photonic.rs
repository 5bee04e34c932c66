//! Linear-optics realization of the weak measurement.
//!
//! Polarization encodes the qubit, `V ≡ |0⟩` and `H ≡ |1⟩`. A partially
//! polarizing beamsplitter (PPBS) overlaps the signal and meter photons;
//! conditioned on one photon leaving each output port it acts as a
//! controlled-Z with amplitude 1/3 when `R_H = 1/3, R_V = 1`, after two
//! attenuating elements that pass `V` with amplitude `1/√3`.
//!
//! Two-photon operators use the ordered basis `VV, VH, HV, HH` with the
//! signal photon first.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::channels::{dephase_unchecked, PROBABILITY_FLOOR};
use crate::error::{check_range, Error, Result};
use crate::optimize::golden_section_max;
use crate::protocol::{correction_unitary, eta_opt, ProtocolEvaluator};
use crate::qubit::{
    c, expectation, input_state_unchecked, project_meter, BlochVector, Ket2, Mat2, Mat4,
    QubitState, Sign, TwoQubitState, POSITIVITY_TOL,
};

/// Amplitude passed by each loss element for a `V` photon.
pub const LOSS_AMPLITUDE_V: f64 = 0.577_350_269_189_625_8; // 1/√3

/// Total success probabilities below this are flagged degenerate.
pub const SUCCESS_FLOOR: f64 = 1e-12;

/// Intensity reflectivities of a partially polarizing beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ppbs {
    pub r_h: f64,
    pub r_v: f64,
}

impl Ppbs {
    /// Design values.
    pub const IDEAL: Ppbs = Ppbs {
        r_h: 1.0 / 3.0,
        r_v: 1.0,
    };
    /// Measured reflectivities of the beamsplitter used in the experiment.
    pub const MEASURED: Ppbs = Ppbs {
        r_h: 0.345,
        r_v: 0.995,
    };

    pub fn new(r_h: f64, r_v: f64) -> Result<Self> {
        check_range("r_h", r_h, 0.0, 1.0, "[0, 1]")?;
        check_range("r_v", r_v, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { r_h, r_v })
    }

    /// Amplitude reflection and transmission `(r, t)` for polarization
    /// index 0 (V) or 1 (H).
    fn amplitudes(&self, pol: usize) -> (f64, f64) {
        let big_r = if pol == 0 { self.r_v } else { self.r_h };
        (big_r.sqrt(), (1.0 - big_r).sqrt())
    }

    /// Coincidence operator of the bare beamsplitter (no loss elements, no
    /// phase fixing). Convention `a† → r c† + t d†`, `b† → t c† − r d†`,
    /// where `a, c` are the signal side and `b, d` the meter side.
    pub fn coincidence_operator(&self) -> Mat4 {
        let mut op = Mat4::zeros();
        for p in 0..2 {
            let (rp, tp) = self.amplitudes(p);
            for q in 0..2 {
                let (rq, tq) = self.amplitudes(q);
                let col = 2 * p + q;
                // both photons reflected: signal side keeps p, meter side q
                op[(2 * p + q, col)] += c(-rp * rq, 0.);
                // both transmitted: polarizations swap sides
                op[(2 * q + p, col)] += c(tp * tq, 0.);
            }
        }
        op
    }
}

/// Postselected two-photon operator on signal ⊗ meter amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostselectedGate {
    pub operator: Mat4,
    /// Amplitude factor applied to each `V` photon by the loss stage.
    pub loss_attenuation: f64,
}

impl PostselectedGate {
    pub fn largest_singular_value(&self) -> f64 {
        let svd = SVD::new(self.operator, false, false);
        svd.singular_values.max()
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.largest_singular_value();
        if s > 1.0 + POSITIVITY_TOL {
            return Err(Error::Validation(format!(
                "postselected operator has singular value {s} > 1"
            )));
        }
        Ok(())
    }

    /// The operator divided by its VV entry.
    pub fn normalized(&self) -> Mat4 {
        self.operator.unscale(self.operator[(0, 0)].norm())
    }
}

/// Beamsplitter coincidence operator followed by the loss stage, with the
/// global phase chosen so the VV entry is real and non-negative.
pub fn ppbs_conditional(ppbs: &Ppbs) -> PostselectedGate {
    let raw = ppbs.coincidence_operator();
    let loss = [LOSS_AMPLITUDE_V, 1.0];
    let mut op = raw;
    for row in 0..4 {
        let factor = loss[row / 2] * loss[row % 2];
        for col in 0..4 {
            op[(row, col)] *= factor;
        }
    }
    let vv = op[(0, 0)];
    if vv.norm() > 0.0 {
        let phase = vv.conj() / vv.norm();
        op *= phase;
    }
    PostselectedGate {
        operator: op,
        loss_attenuation: LOSS_AMPLITUDE_V,
    }
}

/// Meter prepared in `cos(χ/2)|+⟩ + sin(χ/2)|−⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeterState {
    chi: f64,
}

impl MeterState {
    pub fn new(chi: f64) -> Result<Self> {
        check_range("chi", chi, 0.0, FRAC_PI_2, "[0, pi/2]")?;
        Ok(Self { chi })
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn ket(&self) -> Ket2 {
        meter_ket(self.chi)
    }
}

fn meter_ket(chi: f64) -> Ket2 {
    let (s, co) = (chi / 2.0).sin_cos();
    Ket2::new(
        c((co + s) * FRAC_1_SQRT_2, 0.),
        c((co - s) * FRAC_1_SQRT_2, 0.),
    )
}

fn readout_ket(sign: Sign) -> Ket2 {
    let h = FRAC_1_SQRT_2;
    Ket2::new(c(h, 0.), c(sign.value() * h, 0.))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOutcome {
    /// Meter readout in the `|±⟩` basis.
    pub sign: Sign,
    /// Joint probability of a coincidence and this meter outcome.
    pub success_probability: f64,
    pub post_signal: QubitState,
    /// Set when this branch (or the whole gate) never succeeds.
    pub degenerate: bool,
}

/// Unnormalized signal states `⟨±|_m G (ρ ⊗ |φ⟩⟨φ|) G† |±⟩_m`.
fn gate_branches(rho: &Mat2, meter: &Ket2, gate: &Mat4) -> [Mat2; 2] {
    let joint = TwoQubitState::product(
        &QubitState::new_unchecked(*rho),
        &QubitState::new_unchecked(meter * meter.adjoint()),
    );
    let out = joint.apply_operator(gate);
    Sign::BOTH.map(|s| project_meter(&out, &readout_ket(s)))
}

/// Runs the gate with the meter prepared at strength `cos χ` and reads the
/// meter out in `|±⟩`. Returns the `+` branch first.
pub fn gate_measurement(
    rho_signal: &QubitState,
    meter: &MeterState,
    gate: &PostselectedGate,
) -> Result<(GateOutcome, GateOutcome)> {
    rho_signal.validate()?;
    let branches = gate_branches(rho_signal.matrix(), &meter.ket(), &gate.operator);
    let probs = branches.map(|b| b.trace().re.max(0.0));
    let total_degenerate = probs[0] + probs[1] < SUCCESS_FLOOR;
    let [plus, minus] = Sign::BOTH.map(|s| {
        let i = s.index();
        if total_degenerate || probs[i] <= PROBABILITY_FLOOR {
            GateOutcome {
                sign: s,
                success_probability: probs[i],
                post_signal: QubitState::maximally_mixed(),
                degenerate: true,
            }
        } else {
            GateOutcome {
                sign: s,
                success_probability: probs[i],
                post_signal: QubitState::new_unchecked(branches[i].unscale(probs[i])),
                degenerate: false,
            }
        }
    });
    Ok((plus, minus))
}

/// How the correction angle is chosen at each strength.
#[derive(Debug, Clone, PartialEq)]
pub enum Correction {
    /// `eta_opt(θ, p, χ)` from the ideal theory, as the experiment was set up.
    IdealTheory,
    /// Re-maximize the model fidelity over `η ∈ [0, π/2]`.
    Reoptimized,
    /// One angle per entry of the strength list.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub chi: f64,
    pub cos_chi: f64,
    pub eta: f64,
    /// Ideal gate at the same `(χ, η)`.
    pub fidelity_ideal: f64,
    pub fidelity_model: f64,
    pub fidelity_plus: f64,
    pub fidelity_minus: f64,
    pub bloch_plus: BlochVector,
    pub bloch_minus: BlochVector,
    /// Postselection probability averaged over the two inputs.
    pub success_probability: f64,
}

struct ModelEval {
    fidelities: [f64; 2],
    outputs: [QubitState; 2],
    success: [f64; 2],
}

fn evaluate_model(theta: f64, p: f64, chi: f64, eta: f64, gate: &Mat4) -> ModelEval {
    let meter = meter_ket(chi);
    let corrections = Sign::BOTH.map(|o| correction_unitary(o, eta));
    let mut fidelities = [0.0; 2];
    let mut outputs = [QubitState::maximally_mixed(); 2];
    let mut success = [0.0; 2];
    for s in Sign::BOTH {
        let psi = input_state_unchecked(theta, s);
        // the noise ensemble enters linearly, so mixing before or after the
        // postselected map gives the same unnormalized output
        let noisy = dephase_unchecked(&psi.to_density(), p);
        let branches = gate_branches(noisy.matrix(), &meter, gate);
        let mut out = Mat2::zeros();
        for o in Sign::BOTH {
            let u = corrections[o.index()].matrix();
            out += u * branches[o.index()] * u.adjoint();
        }
        let total = out.trace().re;
        let i = s.index();
        success[i] = total;
        if total > SUCCESS_FLOOR {
            let normalized = out.unscale(total);
            fidelities[i] = expectation(&psi, &normalized).re;
            outputs[i] = QubitState::new_unchecked(normalized);
        }
    }
    ModelEval {
        fidelities,
        outputs,
        success,
    }
}

/// Fidelity curve of the optical model over a list of `χ` values.
pub fn experimental_model_curve(
    theta: f64,
    p: f64,
    chi_list: &[f64],
    ppbs: &Ppbs,
    correction: &Correction,
) -> Result<Vec<ModelPoint>> {
    let ideal = ProtocolEvaluator::new(theta, p)?;
    let ppbs = Ppbs::new(ppbs.r_h, ppbs.r_v)?;
    for &chi in chi_list {
        check_range("chi", chi, 0.0, FRAC_PI_2, "[0, pi/2]")?;
    }
    if let Correction::Explicit(etas) = correction {
        if etas.len() != chi_list.len() {
            return Err(Error::Mismatch(format!(
                "{} correction angles for {} strengths",
                etas.len(),
                chi_list.len()
            )));
        }
    }
    let gate = ppbs_conditional(&ppbs).operator;

    let points = chi_list
        .iter()
        .enumerate()
        .map(|(k, &chi)| {
            let eta = match correction {
                Correction::IdealTheory => eta_opt(theta, p, chi),
                Correction::Explicit(etas) => etas[k],
                Correction::Reoptimized => {
                    golden_section_max(
                        |eta| {
                            let m = evaluate_model(theta, p, chi, eta, &gate);
                            0.5 * (m.fidelities[0] + m.fidelities[1])
                        },
                        0.0,
                        FRAC_PI_2,
                        1e-10,
                    )
                    .0
                }
            };
            let m = evaluate_model(theta, p, chi, eta, &gate);
            ModelPoint {
                chi,
                cos_chi: chi.cos(),
                eta,
                fidelity_ideal: ideal.average_fidelity(chi, eta),
                fidelity_model: 0.5 * (m.fidelities[0] + m.fidelities[1]),
                fidelity_plus: m.fidelities[0],
                fidelity_minus: m.fidelities[1],
                bloch_plus: m.outputs[0].bloch(),
                bloch_minus: m.outputs[1].bloch(),
                success_probability: 0.5 * (m.success[0] + m.success[1]),
            }
        })
        .collect();
    Ok(points)
}

/// `χ = arccos(strength)` for a strength in `[0, 1]`.
pub fn chi_from_strength(strength: f64) -> Result<f64> {
    check_range("cos_chi", strength, 0.0, 1.0, "[0, 1]")?;
    Ok(strength.acos())
}
