//! Phase-flip noise and the variable-strength measurement in the logical basis.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use crate::error::{check_range, Result};
use crate::qubit::{c, max_abs, pauli_z, Mat2, QubitState, Sign};

/// Outcome probabilities at or below this are treated as impossible.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

/// Applies `Z` with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingChannel {
    p: f64,
}

impl DephasingChannel {
    pub fn new(p: f64) -> Result<Self> {
        check_range("p", p, 0.0, 0.5, "[0, 1/2]")?;
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `(1 − p) ρ + p Z ρ Z`
    pub fn apply(&self, rho: &QubitState) -> QubitState {
        dephase_unchecked(rho, self.p)
    }
}

pub fn dephase(rho: &QubitState, p: f64) -> Result<QubitState> {
    Ok(DephasingChannel::new(p)?.apply(rho))
}

pub(crate) fn dephase_unchecked(rho: &QubitState, p: f64) -> QubitState {
    // Z ρ Z only flips the sign of the off-diagonal block
    let mut m = *rho.matrix();
    let k = 1.0 - 2.0 * p;
    m[(0, 1)] *= k;
    m[(1, 0)] *= k;
    QubitState::new_unchecked(m)
}

/// `ZρZ`
pub fn phase_flip(rho: &QubitState) -> QubitState {
    let z = pauli_z();
    QubitState::new_unchecked(z * rho.matrix() * z)
}

/// Measurement operators of strength `cos χ`:
/// `M₊ = cos(χ/2)|0⟩⟨0| + sin(χ/2)|1⟩⟨1|` and `M₋` with the two swapped.
///
/// `χ = 0` is the projective Z measurement, `χ = π/2` measures nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausPair {
    chi: f64,
    cos_half: f64,
    sin_half: f64,
}

impl KrausPair {
    pub fn new(chi: f64) -> Result<Self> {
        check_range("chi", chi, 0.0, FRAC_PI_2, "[0, pi/2]")?;
        Ok(Self::new_unchecked(chi))
    }

    pub(crate) fn new_unchecked(chi: f64) -> Self {
        let (sin_half, cos_half) = (chi / 2.0).sin_cos();
        Self {
            chi,
            cos_half,
            sin_half,
        }
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Measurement strength `cos χ`.
    pub fn strength(&self) -> f64 {
        self.chi.cos()
    }

    /// Diagonal of `M_sign` in the logical basis.
    pub fn diagonal(&self, sign: Sign) -> [f64; 2] {
        match sign {
            Sign::Plus => [self.cos_half, self.sin_half],
            Sign::Minus => [self.sin_half, self.cos_half],
        }
    }

    pub fn operator(&self, sign: Sign) -> Mat2 {
        let [a, b] = self.diagonal(sign);
        Mat2::new(c(a, 0.), c(0., 0.), c(0., 0.), c(b, 0.))
    }

    pub fn m_plus(&self) -> Mat2 {
        self.operator(Sign::Plus)
    }

    pub fn m_minus(&self) -> Mat2 {
        self.operator(Sign::Minus)
    }

    /// `Π = M†M`
    pub fn povm(&self, sign: Sign) -> Mat2 {
        let m = self.operator(sign);
        m.adjoint() * m
    }

    /// Largest entry of `Π₊ + Π₋ − 𝟙`.
    pub fn completeness_deviation(&self) -> f64 {
        max_abs(&(self.povm(Sign::Plus) + self.povm(Sign::Minus) - Mat2::identity()))
    }

    /// `M ρ M†` without normalization. `M` is real diagonal, so this is an
    /// entrywise rescaling.
    pub(crate) fn unnormalized_post_state(&self, rho: &Mat2, sign: Sign) -> Mat2 {
        let [a, b] = self.diagonal(sign);
        let mut m = *rho;
        m[(0, 0)] *= a * a;
        m[(1, 1)] *= b * b;
        m[(0, 1)] *= a * b;
        m[(1, 0)] *= a * b;
        m
    }
}

pub fn kraus_pair(chi: f64) -> Result<KrausPair> {
    KrausPair::new(chi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOutcome {
    pub sign: Sign,
    pub probability: f64,
    /// `M ρ M† / probability`, or the maximally mixed state when the
    /// outcome is impossible.
    pub post_state: QubitState,
    /// Set when `probability` is below [`PROBABILITY_FLOOR`]; the post state
    /// carries no information and the branch should be skipped.
    pub degenerate: bool,
}

fn outcome(kraus: &KrausPair, rho: &QubitState, sign: Sign) -> MeasurementOutcome {
    let un = kraus.unnormalized_post_state(rho.matrix(), sign);
    let probability = un.trace().re.clamp(0.0, 1.0);
    if probability <= PROBABILITY_FLOOR {
        MeasurementOutcome {
            sign,
            probability: 0.0,
            post_state: QubitState::maximally_mixed(),
            degenerate: true,
        }
    } else {
        MeasurementOutcome {
            sign,
            probability,
            post_state: QubitState::new_unchecked(un.unscale(probability)),
            degenerate: false,
        }
    }
}

/// Both branches of the measurement, `+` first.
pub fn measure(rho: &QubitState, chi: f64) -> Result<(MeasurementOutcome, MeasurementOutcome)> {
    rho.validate()?;
    let kraus = KrausPair::new(chi)?;
    Ok((
        outcome(&kraus, rho, Sign::Plus),
        outcome(&kraus, rho, Sign::Minus),
    ))
}

/// Draws one outcome with Born-rule probability.
pub fn sample_outcome<R: Rng + ?Sized>(
    rho: &QubitState,
    chi: f64,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    rho.validate()?;
    let kraus = KrausPair::new(chi)?;
    Ok(sample_unchecked(&kraus, rho, rng))
}

pub(crate) fn sample_unchecked<R: Rng + ?Sized>(
    kraus: &KrausPair,
    rho: &QubitState,
    rng: &mut R,
) -> MeasurementOutcome {
    let plus = outcome(kraus, rho, Sign::Plus);
    let u: f64 = rng.random();
    if u < plus.probability {
        plus
    } else {
        outcome(kraus, rho, Sign::Minus)
    }
}
