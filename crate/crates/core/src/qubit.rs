//! One- and two-qubit state algebra.
//!
//! Logical basis `|0⟩, |1⟩` with `Z|0⟩ = |0⟩`; the diagonal basis is
//! `|±⟩ = (|0⟩ ± |1⟩)/√2`. Pauli matrices use the usual convention
//! `Y = [[0, -i], [i, 0]]`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;
pub type Ket2 = Vector2<C64>;

/// Tolerance for algebraic identities (hermiticity, trace, unitarity).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Slack allowed below zero for eigenvalues and above one for Bloch radii.
pub const POSITIVITY_TOL: f64 = 1e-10;

pub(crate) const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs<'a, I: IntoIterator<Item = &'a C64>>(entries: I) -> f64 {
    entries.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn identity2() -> Mat2 {
    Mat2::identity()
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.))
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.))
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.))
}

/// A ±1 label: input-state sign, measurement outcome, tomography outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Normalized pure state of one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureQubit {
    amplitudes: Ket2,
}

impl PureQubit {
    pub fn new(a0: C64, a1: C64) -> Result<Self> {
        let psi = Self {
            amplitudes: Ket2::new(a0, a1),
        };
        psi.validate()?;
        Ok(psi)
    }

    pub(crate) fn new_unchecked(a0: C64, a1: C64) -> Self {
        Self {
            amplitudes: Ket2::new(a0, a1),
        }
    }

    pub fn zero() -> Self {
        Self::new_unchecked(c(1., 0.), c(0., 0.))
    }

    pub fn one() -> Self {
        Self::new_unchecked(c(0., 0.), c(1., 0.))
    }

    pub fn plus() -> Self {
        Self::new_unchecked(c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.))
    }

    pub fn minus() -> Self {
        Self::new_unchecked(c(FRAC_1_SQRT_2, 0.), c(-FRAC_1_SQRT_2, 0.))
    }

    pub fn amplitudes(&self) -> &Ket2 {
        &self.amplitudes
    }

    pub fn validate(&self) -> Result<()> {
        let norm = self.amplitudes.norm();
        if (norm - 1.0).abs() > ALGEBRA_TOL {
            return Err(Error::Validation(format!("pure state norm {norm} != 1")));
        }
        Ok(())
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureQubit) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// The projector `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> QubitState {
        QubitState {
            matrix: self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    pub fn bloch(&self) -> BlochVector {
        self.to_density().bloch()
    }
}

/// `cos(θ/2)|+⟩ ± sin(θ/2)|−⟩`; the two signs sit `2θ` apart on the Bloch
/// sphere with Bloch vectors `(cos θ, 0, ±sin θ)`.
pub fn make_input_state(theta: f64, sign: Sign) -> Result<PureQubit> {
    check_range("theta", theta, 0.0, FRAC_PI_2, "[0, pi/2]")?;
    Ok(input_state_unchecked(theta, sign))
}

pub(crate) fn input_state_unchecked(theta: f64, sign: Sign) -> PureQubit {
    let (s, co) = (theta / 2.0).sin_cos();
    let s = sign.value() * s;
    PureQubit::new_unchecked(
        c((co + s) * FRAC_1_SQRT_2, 0.),
        c((co - s) * FRAC_1_SQRT_2, 0.),
    )
}

pub fn to_density(psi: &PureQubit) -> QubitState {
    psi.to_density()
}

/// Single-qubit density matrix.
///
/// Construction through [`QubitState::new`] validates; the arithmetic
/// helpers in this crate do not re-validate, call [`QubitState::validate`]
/// where it matters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    matrix: Mat2,
}

impl QubitState {
    pub fn new(matrix: Mat2) -> Result<Self> {
        let rho = Self { matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn new_unchecked(matrix: Mat2) -> Self {
        Self { matrix }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            matrix: identity2().scale(0.5),
        }
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Eigenvalues in ascending order (real part of the hermitian part).
    pub fn eigenvalues(&self) -> [f64; 2] {
        hermitian_eigenvalues_2x2(&self.matrix)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("non-finite matrix entry".into()));
        }
        let herm = max_abs(&(m - m.adjoint()));
        if herm > ALGEBRA_TOL {
            return Err(Error::Validation(format!(
                "not hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr - c(1., 0.)).norm() > ALGEBRA_TOL {
            return Err(Error::Validation(format!("trace {tr} != 1")));
        }
        let [lo, _] = self.eigenvalues();
        if lo < -POSITIVITY_TOL {
            return Err(Error::Validation(format!("negative eigenvalue {lo:e}")));
        }
        Ok(())
    }

    pub fn bloch(&self) -> BlochVector {
        let m = &self.matrix;
        // tr(ρY) = i(ρ01 - ρ10)
        BlochVector {
            x: (m[(0, 1)] + m[(1, 0)]).re,
            y: (m[(1, 0)] - m[(0, 1)]).im,
            z: (m[(0, 0)] - m[(1, 1)]).re,
        }
    }

    /// `U ρ U†`
    pub fn apply_unitary(&self, u: &Unitary2) -> QubitState {
        QubitState {
            matrix: u.matrix * self.matrix * u.matrix.adjoint(),
        }
    }

    /// `ρ ↦ (1 - w) self + w other`
    pub fn mix(&self, other: &QubitState, w: f64) -> QubitState {
        QubitState {
            matrix: self.matrix.scale(1.0 - w) + other.matrix.scale(w),
        }
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &QubitState) -> f64 {
        let [a, b] = hermitian_eigenvalues_2x2(&(self.matrix - other.matrix));
        0.5 * (a.abs() + b.abs())
    }
}

pub(crate) fn hermitian_eigenvalues_2x2(m: &Mat2) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - r, mean + r]
}

/// `⟨ψ|ρ|ψ⟩`, validating both arguments.
pub fn fidelity(psi: &PureQubit, rho: &QubitState) -> Result<f64> {
    psi.validate()?;
    rho.validate()?;
    let f = expectation(psi, rho.matrix());
    if f.im.abs() > ALGEBRA_TOL {
        return Err(Error::Validation(format!(
            "fidelity has imaginary residue {:e}",
            f.im
        )));
    }
    Ok(f.re.clamp(0.0, 1.0))
}

/// `⟨ψ|M|ψ⟩` without any checks.
pub(crate) fn expectation(psi: &PureQubit, m: &Mat2) -> C64 {
    psi.amplitudes.dotc(&(m * psi.amplitudes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn validate(&self) -> Result<()> {
        let n2 = self.x * self.x + self.y * self.y + self.z * self.z;
        if !n2.is_finite() || n2 > 1.0 + POSITIVITY_TOL {
            return Err(Error::Validation(format!(
                "Bloch vector length {} exceeds 1",
                n2.sqrt()
            )));
        }
        Ok(())
    }

    /// `(𝟙 + r·σ)/2`, without the unit-ball check.
    pub fn density_matrix(&self) -> Mat2 {
        (identity2() + pauli_x().scale(self.x) + pauli_y().scale(self.y) + pauli_z().scale(self.z))
            .scale(0.5)
    }
}

/// Inverse of [`QubitState::bloch`]; rejects vectors outside the unit ball.
pub fn density_from_bloch(r: &BlochVector) -> Result<QubitState> {
    r.validate()?;
    Ok(QubitState::new_unchecked(r.density_matrix()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    matrix: Mat2,
}

impl Unitary2 {
    pub fn new(matrix: Mat2) -> Result<Self> {
        let u = Self { matrix };
        u.validate()?;
        Ok(u)
    }

    pub fn identity() -> Self {
        Self {
            matrix: identity2(),
        }
    }

    pub fn pauli_z() -> Self {
        Self { matrix: pauli_z() }
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn validate(&self) -> Result<()> {
        let dev = max_abs(&(self.matrix * self.matrix.adjoint() - identity2()));
        if dev > ALGEBRA_TOL {
            return Err(Error::Validation(format!(
                "not unitary (deviation {dev:e})"
            )));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Unitary2 {
        Unitary2 {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn compose(&self, after: &Unitary2) -> Unitary2 {
        Unitary2 {
            matrix: after.matrix * self.matrix,
        }
    }
}

/// `exp(sign · i · η · Y) = cos η 𝟙 + i sign sin η Y`.
///
/// This turns Bloch vectors about the y axis by `-2 sign η`, so a Bloch
/// rotation by `β` toward `+x` is `rotation_y(β/2, Sign::Minus)`.
pub fn rotation_y(eta: f64, sign: Sign) -> Unitary2 {
    let (s, co) = eta.sin_cos();
    let s = sign.value() * s;
    // i·s·Y = [[0, s], [-s, 0]]
    Unitary2 {
        matrix: Mat2::new(c(co, 0.), c(s, 0.), c(-s, 0.), c(co, 0.)),
    }
}

pub fn apply_unitary(rho: &QubitState, u: &Unitary2) -> QubitState {
    rho.apply_unitary(u)
}

/// Density matrix on signal ⊗ meter, basis order `|00⟩, |01⟩, |10⟩, |11⟩`
/// (signal is the more significant index).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    matrix: Mat4,
}

impl TwoQubitState {
    pub fn new(matrix: Mat4) -> Result<Self> {
        let rho = Self { matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub fn product(signal: &QubitState, meter: &QubitState) -> Self {
        Self {
            matrix: signal.matrix.kronecker(&meter.matrix),
        }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("non-finite matrix entry".into()));
        }
        let herm = max_abs(&(m - m.adjoint()));
        if herm > ALGEBRA_TOL {
            return Err(Error::Validation(format!(
                "not hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr - c(1., 0.)).norm() > ALGEBRA_TOL {
            return Err(Error::Validation(format!("trace {tr} != 1")));
        }
        let lo = self.eigenvalues()[0];
        if lo < -POSITIVITY_TOL {
            return Err(Error::Validation(format!("negative eigenvalue {lo:e}")));
        }
        Ok(())
    }

    /// Ascending eigenvalues of the hermitian part.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let h = (self.matrix + self.matrix.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(h);
        let mut ev = [
            eig.eigenvalues[0],
            eig.eigenvalues[1],
            eig.eigenvalues[2],
            eig.eigenvalues[3],
        ];
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `O ρ O†` for any 4×4 operator; the result is unnormalized when `O`
    /// is not unitary.
    pub fn apply_operator(&self, op: &Mat4) -> Mat4 {
        op * self.matrix * op.adjoint()
    }

    pub fn apply_unitary(&self, u: &Mat4) -> TwoQubitState {
        TwoQubitState {
            matrix: self.apply_operator(u),
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

/// Reduced signal operator `⟨m| X |m⟩` for a meter ket `|m⟩`, where `X` is
/// a 4×4 operator on signal ⊗ meter.
pub(crate) fn project_meter(x: &Mat4, meter: &Ket2) -> Mat2 {
    let mut out = Mat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = c(0., 0.);
            for a in 0..2 {
                for b in 0..2 {
                    acc += meter[a].conj() * x[(2 * i + a, 2 * j + b)] * meter[b];
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        max_abs(&(a - b)) <= tol
    }

    #[test]
    fn input_state_limits() {
        let p = make_input_state(0.0, Sign::Plus).unwrap();
        assert!((p.inner(&PureQubit::plus()).norm() - 1.0).abs() < 1e-15);
        let z = make_input_state(FRAC_PI_2, Sign::Plus).unwrap();
        assert_abs_diff_eq!(z.inner(&PureQubit::zero()).re, 1.0, epsilon = 1e-15);
        let o = make_input_state(FRAC_PI_2, Sign::Minus).unwrap();
        assert_abs_diff_eq!(o.inner(&PureQubit::one()).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn input_state_overlap_is_cos_theta() {
        let theta = 0.715;
        let a = make_input_state(theta, Sign::Plus).unwrap();
        let b = make_input_state(theta, Sign::Minus).unwrap();
        // by hand: (c+s)(c-s)/2 + (c-s)(c+s)/2 = c² - s² with c, s at θ/2
        let (s, co) = (theta / 2.0_f64).sin_cos();
        let oracle = co * co - s * s;
        assert_abs_diff_eq!(a.inner(&b).re, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(a.inner(&b).re, 0.755_1, epsilon = 5e-5);
    }

    #[test]
    fn input_state_rejects_out_of_range() {
        assert!(matches!(
            make_input_state(-0.1, Sign::Plus),
            Err(Error::Domain { name: "theta", .. })
        ));
        assert!(make_input_state(1.6, Sign::Minus).is_err());
        assert!(make_input_state(f64::NAN, Sign::Minus).is_err());
    }

    #[test]
    fn density_of_basis_states() {
        let rho0 = PureQubit::zero().to_density();
        assert!(close(
            rho0.matrix(),
            &Mat2::new(c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)),
            0.0
        ));
        let rhop = PureQubit::plus().to_density();
        assert!(rhop
            .matrix()
            .iter()
            .all(|z| (z - c(0.5, 0.)).norm() < 1e-15));
        rhop.validate().unwrap();
    }

    #[test]
    fn density_of_input_state_matches_hand_outer_product() {
        let theta = 0.715_f64;
        let rho = make_input_state(theta, Sign::Plus).unwrap().to_density();
        let (s, co) = (theta / 2.0).sin_cos();
        let (a0, a1) = ((co + s) / 2f64.sqrt(), (co - s) / 2f64.sqrt());
        let hand = Mat2::new(
            c(a0 * a0, 0.),
            c(a0 * a1, 0.),
            c(a1 * a0, 0.),
            c(a1 * a1, 0.),
        );
        assert!(close(rho.matrix(), &hand, 1e-15));
        let r = rho.bloch();
        // trace formulas: x = 2 a0 a1, z = a0² - a1²
        assert_abs_diff_eq!(r.x, 2.0 * a0 * a1, epsilon = 1e-15);
        assert_abs_diff_eq!(r.z, a0 * a0 - a1 * a1, epsilon = 1e-15);
        assert_abs_diff_eq!(r.x, theta.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.z, theta.sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.y, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_basics() {
        let zero = PureQubit::zero();
        assert_abs_diff_eq!(fidelity(&zero, &zero.to_density()).unwrap(), 1.0);
        assert_abs_diff_eq!(
            fidelity(&zero, &PureQubit::one().to_density()).unwrap(),
            0.0
        );
        // |+⟩⟨+| with its off-diagonals removed is 𝟙/2
        let plus = PureQubit::plus();
        let mut m = *plus.to_density().matrix();
        m[(0, 1)] = c(0., 0.);
        m[(1, 0)] = c(0., 0.);
        let dephased = QubitState::new(m).unwrap();
        assert_abs_diff_eq!(fidelity(&plus, &dephased).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_rejects_invalid_state() {
        let bad = QubitState::new_unchecked(identity2());
        assert!(matches!(
            fidelity(&PureQubit::zero(), &bad),
            Err(Error::Validation(_))
        ));
        let unnormalized = PureQubit::new_unchecked(c(1., 0.), c(1., 0.));
        assert!(fidelity(&unnormalized, &QubitState::maximally_mixed()).is_err());
    }

    #[test]
    fn bloch_of_simple_states() {
        let r = PureQubit::zero().to_density().bloch();
        assert_eq!((r.x, r.y, r.z), (0.0, 0.0, 1.0));
        let r = QubitState::maximally_mixed().bloch();
        assert_eq!((r.x, r.y, r.z), (0.0, 0.0, 0.0));
        // |+i⟩ = (|0⟩ + i|1⟩)/√2 sits on +y
        let yi = PureQubit::new(c(FRAC_1_SQRT_2, 0.), c(0., FRAC_1_SQRT_2)).unwrap();
        assert_abs_diff_eq!(yi.bloch().y, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn density_from_bloch_rejects_outside_ball() {
        assert!(density_from_bloch(&BlochVector::new(0.8, 0.7, 0.0)).is_err());
        assert!(density_from_bloch(&BlochVector::new(1.0, 0.0, 0.0)).is_ok());
    }

    /// Power series for exp(A), used as an oracle for the closed-form rotation.
    fn expm_series(a: &Mat2) -> Mat2 {
        let mut term = identity2();
        let mut sum = identity2();
        for k in 1..40 {
            term = term * a / c(k as f64, 0.);
            sum += term;
        }
        sum
    }

    #[test]
    fn rotation_y_matches_series_exponential() {
        for &eta in &[0.0, 0.3, FRAC_PI_4, 1.2, -2.0] {
            for sign in Sign::BOTH {
                let gen = pauli_y() * c(0., sign.value() * eta);
                let oracle = expm_series(&gen);
                assert!(close(rotation_y(eta, sign).matrix(), &oracle, 1e-14));
            }
        }
    }

    #[test]
    fn rotation_y_special_values() {
        assert!(close(
            rotation_y(0.0, Sign::Plus).matrix(),
            &identity2(),
            0.0
        ));
        let iy = pauli_y() * c(0., 1.);
        assert!(close(
            rotation_y(FRAC_PI_2, Sign::Plus).matrix(),
            &iy,
            1e-15
        ));
        let prod = rotation_y(0.7, Sign::Plus).compose(&rotation_y(0.7, Sign::Minus));
        assert!(close(prod.matrix(), &identity2(), 1e-15));
        let det = rotation_y(1.1, Sign::Minus).matrix().determinant();
        assert_abs_diff_eq!(det.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn apply_unitary_examples() {
        let rho = PureQubit::plus().to_density();
        let out = rho.apply_unitary(&Unitary2::identity());
        assert_eq!(out, rho);
        let flipped = rho.apply_unitary(&Unitary2::pauli_z());
        assert!(close(
            flipped.matrix(),
            PureQubit::minus().to_density().matrix(),
            1e-15
        ));
        // exp(iπ/4 Y) turns +z by -π/2 about y: lands on -x
        let turned = PureQubit::zero()
            .to_density()
            .apply_unitary(&rotation_y(FRAC_PI_4, Sign::Plus));
        let oracle = expm_series(&(pauli_y() * c(0., FRAC_PI_4)));
        let want = oracle * PureQubit::zero().to_density().matrix() * oracle.adjoint();
        assert!(close(turned.matrix(), &want, 1e-14));
        assert_abs_diff_eq!(turned.bloch().x, -(PI / 2.0).sin(), epsilon = 1e-15);
    }

    #[test]
    fn two_qubit_product_is_valid() {
        let s = make_input_state(0.4, Sign::Minus).unwrap().to_density();
        let m = QubitState::maximally_mixed();
        let joint = TwoQubitState::product(&s, &m);
        joint.validate().unwrap();
        let ev = joint.eigenvalues();
        assert_abs_diff_eq!(ev[3], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-12);
        let bad = TwoQubitState {
            matrix: Mat4::identity(),
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn project_meter_recovers_signal_of_product() {
        let s = make_input_state(0.9, Sign::Plus).unwrap().to_density();
        let m = PureQubit::plus();
        let joint = TwoQubitState::product(&s, &m.to_density());
        let reduced = project_meter(joint.matrix(), m.amplitudes());
        assert!(close(&reduced, s.matrix(), 1e-15));
    }
}
