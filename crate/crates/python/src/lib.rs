//! Python bindings. States are wrapped as classes; results come back as
//! plain dicts and lists.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qf::photonic::{Correction, Ppbs};
use qf::protocol::{ProtocolParams, SchemeKind};
use qf::qubit::{BlochVector, Mat2, PureQubit, QubitState, Sign};
use qf::sweep::GridSpec;
use qf::tomography::{Basis, CountRecord, MeasurementSetting};

fn err(e: qf::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn sign(s: i32) -> PyResult<Sign> {
    match s {
        1 => Ok(Sign::Plus),
        -1 => Ok(Sign::Minus),
        _ => Err(PyValueError::new_err(format!("sign must be +1 or -1, got {s}"))),
    }
}

fn sign_value(s: Sign) -> i32 {
    s.value() as i32
}

fn rows(m: &Mat2) -> Vec<Vec<Complex64>> {
    (0..2).map(|i| (0..2).map(|j| m[(i, j)]).collect()).collect()
}

fn bloch_tuple(b: BlochVector) -> (f64, f64, f64) {
    (b.x, b.y, b.z)
}

/// Single-qubit density matrix.
#[pyclass(name = "QubitState", module = "qfeedback", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyQubitState(pub QubitState);

#[pymethods]
impl PyQubitState {
    /// From a 2x2 nested list of complex numbers; must be a valid state.
    #[new]
    fn new(matrix: Vec<Vec<Complex64>>) -> PyResult<Self> {
        if matrix.len() != 2 || matrix.iter().any(|r| r.len() != 2) {
            return Err(PyValueError::new_err("expected a 2x2 matrix"));
        }
        let m = Mat2::new(matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]);
        QubitState::new(m).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_bloch(x: f64, y: f64, z: f64) -> PyResult<Self> {
        qf::qubit::density_from_bloch(&BlochVector::new(x, y, z))
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn maximally_mixed() -> Self {
        Self(QubitState::maximally_mixed())
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        rows(self.0.matrix())
    }

    fn bloch(&self) -> (f64, f64, f64) {
        bloch_tuple(self.0.bloch())
    }

    fn eigenvalues(&self) -> (f64, f64) {
        let [a, b] = self.0.eigenvalues();
        (a, b)
    }

    fn trace_distance(&self, other: &PyQubitState) -> f64 {
        self.0.trace_distance(&other.0)
    }

    fn __repr__(&self) -> String {
        let b = self.0.bloch();
        format!("QubitState(bloch=({:.6}, {:.6}, {:.6}))", b.x, b.y, b.z)
    }
}

/// Pure single-qubit state.
#[pyclass(name = "PureQubit", module = "qfeedback", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyPureQubit(pub PureQubit);

#[pymethods]
impl PyPureQubit {
    #[new]
    fn new(a0: Complex64, a1: Complex64) -> PyResult<Self> {
        PureQubit::new(a0, a1).map(Self).map_err(err)
    }

    fn amplitudes(&self) -> (Complex64, Complex64) {
        let a = self.0.amplitudes();
        (a[0], a[1])
    }

    fn bloch(&self) -> (f64, f64, f64) {
        bloch_tuple(self.0.bloch())
    }

    fn to_density(&self) -> PyQubitState {
        PyQubitState(self.0.to_density())
    }

    fn __repr__(&self) -> String {
        let a = self.0.amplitudes();
        format!("PureQubit({}, {})", a[0], a[1])
    }
}

/// `cos(θ/2)|+⟩ ± sin(θ/2)|−⟩`
#[pyfunction]
fn make_input_state(theta: f64, sign_: i32) -> PyResult<PyPureQubit> {
    qf::qubit::make_input_state(theta, sign(sign_)?)
        .map(PyPureQubit)
        .map_err(err)
}

#[pyfunction]
fn fidelity(psi: &PyPureQubit, rho: &PyQubitState) -> PyResult<f64> {
    qf::qubit::fidelity(&psi.0, &rho.0).map_err(err)
}

#[pyfunction]
fn rotation_y(eta: f64, sign_: i32) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(rows(qf::qubit::rotation_y(eta, sign(sign_)?).matrix()))
}

#[pyfunction]
fn dephase(rho: &PyQubitState, p: f64) -> PyResult<PyQubitState> {
    qf::channels::dephase(&rho.0, p).map(PyQubitState).map_err(err)
}

/// Both outcomes of the strength-`cos χ` measurement, `+` first.
#[pyfunction]
fn measure<'py>(py: Python<'py>, rho: &PyQubitState, chi: f64) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let (a, b) = qf::channels::measure(&rho.0, chi).map_err(err)?;
    [a, b]
        .into_iter()
        .map(|o| {
            let d = PyDict::new(py);
            d.set_item("sign", sign_value(o.sign))?;
            d.set_item("probability", o.probability)?;
            d.set_item("post_state", PyQubitState(o.post_state))?;
            d.set_item("degenerate", o.degenerate)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
fn control_map(rho: &PyQubitState, chi: f64, eta: f64) -> PyResult<PyQubitState> {
    qf::protocol::control_map(&rho.0, chi, eta)
        .map(PyQubitState)
        .map_err(err)
}

fn scheme(name: &str, chi: Option<f64>, eta: Option<f64>) -> PyResult<SchemeKind> {
    match (name, chi, eta) {
        ("dn", None, None) => Ok(SchemeKind::DoNothing),
        ("helstrom", None, None) => Ok(SchemeKind::Helstrom),
        ("optimal", None, None) => Ok(SchemeKind::Optimal),
        ("custom" | "optimal", Some(chi), Some(eta)) => Ok(SchemeKind::Custom { chi, eta }),
        ("custom", _, _) | ("optimal", _, _) => {
            Err(PyValueError::new_err("explicit parameters need both chi and eta"))
        }
        _ => Err(PyValueError::new_err(format!(
            "scheme must be dn, helstrom, optimal or custom (chi and eta only with custom), got {name}"
        ))),
    }
}

/// Exact run for both inputs. Give `chi` and `eta` for an explicit
/// setting, otherwise a scheme name.
#[pyfunction]
#[pyo3(signature = (theta, p, chi=None, eta=None, scheme_name="optimal"))]
fn run_protocol_exact<'py>(
    py: Python<'py>,
    theta: f64,
    p: f64,
    chi: Option<f64>,
    eta: Option<f64>,
    scheme_name: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let params = ProtocolParams::for_scheme(theta, p, scheme(scheme_name, chi, eta)?).map_err(err)?;
    let r = qf::protocol::run_protocol_exact(&params).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("theta", theta)?;
    d.set_item("p", p)?;
    d.set_item("chi", params.chi)?;
    d.set_item("eta", params.eta)?;
    d.set_item("fidelity_plus", r.fidelity_plus)?;
    d.set_item("fidelity_minus", r.fidelity_minus)?;
    d.set_item("fidelity_avg", r.fidelity_avg)?;
    d.set_item("output_plus", PyQubitState(r.output_plus))?;
    d.set_item("output_minus", PyQubitState(r.output_minus))?;
    d.set_item("outcome_probabilities", r.outcome_probabilities.map(|x| x.to_vec()).to_vec())?;
    Ok(d)
}

/// Monte-Carlo run; estimates are `(mean, stderr, samples)`.
#[pyfunction]
fn run_protocol_mc<'py>(
    py: Python<'py>,
    theta: f64,
    p: f64,
    chi: f64,
    eta: f64,
    n_shots: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let params = ProtocolParams::new(theta, p, chi, eta).map_err(err)?;
    let r = qf::protocol::run_protocol_mc(&params, n_shots, &mut ChaCha8Rng::seed_from_u64(seed))
        .map_err(err)?;
    let d = PyDict::new(py);
    for (k, e) in [
        ("fidelity_plus", r.fidelity_plus),
        ("fidelity_minus", r.fidelity_minus),
        ("fidelity_avg", r.fidelity_avg),
    ] {
        d.set_item(k, (e.mean, e.stderr, e.samples))?;
    }
    d.set_item("output_plus", PyQubitState(r.output_plus))?;
    d.set_item("output_minus", PyQubitState(r.output_minus))?;
    Ok(d)
}

#[pyfunction]
fn avg_fidelity_analytic(theta: f64, p: f64, chi: f64) -> f64 {
    qf::protocol::avg_fidelity_analytic(theta, p, chi)
}

#[pyfunction]
fn eta_opt(theta: f64, p: f64, chi: f64) -> f64 {
    qf::protocol::eta_opt(theta, p, chi)
}

/// Optimal measurement angle; `cos` of it is the strength.
#[pyfunction]
fn chi_opt(theta: f64, p: f64) -> f64 {
    qf::protocol::chi_opt(theta, p).chi
}

#[pyfunction]
fn avg_fidelity_opt(theta: f64, p: f64) -> f64 {
    qf::protocol::avg_fidelity_opt(theta, p)
}

#[pyfunction]
fn fidelity_dn(theta: f64, p: f64) -> f64 {
    qf::protocol::fidelity_dn(theta, p)
}

#[pyfunction]
fn fidelity_h(theta: f64, p: f64) -> f64 {
    qf::protocol::fidelity_h(theta, p)
}

/// Grid sweep as a dict of equal-length columns, `theta` varying slowest.
#[pyfunction]
#[pyo3(signature = (theta_min=0.0, theta_max=FRAC_PI_2, p_min=0.0, p_max=0.5, n_theta=200, n_p=200))]
fn sweep<'py>(
    py: Python<'py>,
    theta_min: f64,
    theta_max: f64,
    p_min: f64,
    p_max: f64,
    n_theta: usize,
    n_p: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = GridSpec::new(theta_min, theta_max, p_min, p_max, n_theta, n_p).map_err(err)?;
    let cells = qf::sweep::sweep(&grid).map_err(err)?;
    let d = PyDict::new(py);
    let col = |f: fn(&qf::sweep::SweepCell) -> f64| cells.iter().map(f).collect::<Vec<f64>>();
    d.set_item("theta", col(|c| c.theta))?;
    d.set_item("p", col(|c| c.p))?;
    d.set_item("chi_opt", col(|c| c.chi_opt))?;
    d.set_item("cos_chi_opt", col(|c| c.cos_chi_opt))?;
    d.set_item("eta_opt", col(|c| c.eta_opt))?;
    d.set_item("f_opt", col(|c| c.f_opt))?;
    d.set_item("f_dn", col(|c| c.f_dn))?;
    d.set_item("f_h", col(|c| c.f_h))?;
    d.set_item("f_diff", col(|c| c.f_diff))?;
    Ok(d)
}

/// `(theta, p, f_diff, boundary)`
#[pyfunction]
#[pyo3(signature = (theta_min=0.0, theta_max=FRAC_PI_2, p_min=0.0, p_max=0.5, n_theta=200, n_p=200, refine_tolerance=1e-4))]
#[allow(clippy::too_many_arguments)]
fn find_max_improvement(
    theta_min: f64,
    theta_max: f64,
    p_min: f64,
    p_max: f64,
    n_theta: usize,
    n_p: usize,
    refine_tolerance: f64,
) -> PyResult<(f64, f64, f64, bool)> {
    let grid = GridSpec::new(theta_min, theta_max, p_min, p_max, n_theta, n_p).map_err(err)?;
    let m = qf::sweep::find_max_improvement(&grid, refine_tolerance).map_err(err)?;
    Ok((m.theta, m.p, m.f_diff, m.boundary))
}

/// `p*` per `θ`, `None` where the two limits never cross.
#[pyfunction]
#[pyo3(signature = (thetas, tolerance=1e-10))]
fn crossover_curve(thetas: Vec<f64>, tolerance: f64) -> PyResult<Vec<Option<f64>>> {
    Ok(qf::sweep::crossover_curve(&thetas, tolerance)
        .map_err(err)?
        .into_iter()
        .map(|c| c.p_star)
        .collect())
}

/// `(chi, eta, fidelity)` from an exhaustive scan.
#[pyfunction]
#[pyo3(signature = (theta, p, resolution=1e-2))]
fn brute_force_protocol_opt(theta: f64, p: f64, resolution: f64) -> PyResult<(f64, f64, f64)> {
    let b = qf::sweep::brute_force_protocol_opt(theta, p, resolution).map_err(err)?;
    Ok((b.chi, b.eta, b.fidelity))
}

/// Optical-model fidelities at the given strengths `cos χ`.
#[pyfunction]
#[pyo3(signature = (theta, p, cos_chi, rh=Ppbs::MEASURED.r_h, rv=Ppbs::MEASURED.r_v, correction="ideal"))]
fn experimental_model_curve<'py>(
    py: Python<'py>,
    theta: f64,
    p: f64,
    cos_chi: Vec<f64>,
    rh: f64,
    rv: f64,
    correction: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let chis = cos_chi
        .iter()
        .map(|&s| qf::photonic::chi_from_strength(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let correction = match correction {
        "ideal" => Correction::IdealTheory,
        "reoptimized" => Correction::Reoptimized,
        other => {
            return Err(PyValueError::new_err(format!(
                "correction must be ideal or reoptimized, got {other}"
            )))
        }
    };
    let ppbs = Ppbs::new(rh, rv).map_err(err)?;
    let points = qf::photonic::experimental_model_curve(theta, p, &chis, &ppbs, &correction).map_err(err)?;
    points
        .into_iter()
        .map(|m| {
            let d = PyDict::new(py);
            d.set_item("cos_chi", m.cos_chi)?;
            d.set_item("chi", m.chi)?;
            d.set_item("eta", m.eta)?;
            d.set_item("fidelity_ideal", m.fidelity_ideal)?;
            d.set_item("fidelity_model", m.fidelity_model)?;
            d.set_item("fidelity_plus", m.fidelity_plus)?;
            d.set_item("fidelity_minus", m.fidelity_minus)?;
            d.set_item("bloch_plus", bloch_tuple(m.bloch_plus))?;
            d.set_item("bloch_minus", bloch_tuple(m.bloch_minus))?;
            d.set_item("success_probability", m.success_probability)?;
            Ok(d)
        })
        .collect()
}

type CountTuple = (String, f64, f64);

fn parse_setting(label: &str) -> PyResult<MeasurementSetting> {
    let basis = match label.chars().next() {
        Some('X') => Basis::X,
        Some('Y') => Basis::Y,
        Some('Z') => Basis::Z,
        _ => return Err(PyValueError::new_err(format!("bad setting label {label:?}"))),
    };
    let outcome = match &label[1..] {
        "+" => Sign::Plus,
        "-" | "−" => Sign::Minus,
        _ => return Err(PyValueError::new_err(format!("bad setting label {label:?}"))),
    };
    Ok(MeasurementSetting { basis, outcome })
}

fn to_records(counts: &[CountTuple]) -> PyResult<Vec<CountRecord>> {
    counts
        .iter()
        .map(|(label, n, duration)| {
            Ok(CountRecord {
                setting: parse_setting(label)?,
                counts: *n,
                duration: *duration,
            })
        })
        .collect()
}

fn to_tuples(records: &[CountRecord]) -> Vec<CountTuple> {
    records
        .iter()
        .map(|r| {
            let label = format!("{}{}", r.setting.basis.name(), if r.setting.outcome == Sign::Plus { '+' } else { '-' });
            (label, r.counts, r.duration)
        })
        .collect()
}

/// Poisson counts `(setting, counts, duration)` for the six settings.
#[pyfunction]
fn simulate_counts(rho: &PyQubitState, rate: f64, duration: f64, seed: u64) -> PyResult<Vec<CountTuple>> {
    let records = qf::tomography::simulate_counts(&rho.0, rate, duration, &mut ChaCha8Rng::seed_from_u64(seed))
        .map_err(err)?;
    Ok(to_tuples(&records))
}

#[pyfunction]
fn expected_counts(rho: &PyQubitState, rate: f64, duration: f64) -> PyResult<Vec<CountTuple>> {
    Ok(to_tuples(&qf::tomography::expected_counts(&rho.0, rate, duration).map_err(err)?))
}

/// `(1 − p)·clean + p·flipped` per setting.
#[pyfunction]
#[pyo3(signature = (clean, flipped, p, round=true))]
fn mix_ensemble_counts(clean: Vec<CountTuple>, flipped: Vec<CountTuple>, p: f64, round: bool) -> PyResult<Vec<CountTuple>> {
    let rounding = if round {
        qf::tomography::Rounding::Nearest
    } else {
        qf::tomography::Rounding::Exact
    };
    let mixed = qf::tomography::mix_ensemble_counts(&to_records(&clean)?, &to_records(&flipped)?, p, rounding)
        .map_err(err)?;
    Ok(to_tuples(&mixed))
}

#[pyfunction]
fn linear_inversion<'py>(py: Python<'py>, counts: Vec<CountTuple>) -> PyResult<Bound<'py, PyDict>> {
    let rec = qf::tomography::linear_inversion(&to_records(&counts)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("matrix", rows(&rec.matrix))?;
    d.set_item("bloch", bloch_tuple(rec.bloch))?;
    d.set_item("min_eigenvalue", rec.min_eigenvalue)?;
    d.set_item("physical", rec.physical)?;
    d.set_item("clipped", PyQubitState(rec.clipped()))?;
    Ok(d)
}

/// `(fidelity, bootstrap_mean, stderr)` from a parametric bootstrap.
#[pyfunction]
#[pyo3(signature = (psi, counts, n_resamples=1000, seed=0))]
fn fidelity_with_error(psi: &PyPureQubit, counts: Vec<CountTuple>, n_resamples: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
    let e = qf::tomography::fidelity_with_error(&psi.0, &to_records(&counts)?, n_resamples, &mut ChaCha8Rng::seed_from_u64(seed))
        .map_err(err)?;
    Ok((e.fidelity, e.bootstrap_mean, e.stderr))
}

#[pymodule(name = "qfeedback")]
fn qfeedback_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    init(m)
}

/// Registers every class and function on `m`.
pub fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQubitState>()?;
    m.add_class::<PyPureQubit>()?;
    m.add_function(wrap_pyfunction!(make_input_state, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(rotation_y, m)?)?;
    m.add_function(wrap_pyfunction!(dephase, m)?)?;
    m.add_function(wrap_pyfunction!(measure, m)?)?;
    m.add_function(wrap_pyfunction!(control_map, m)?)?;
    m.add_function(wrap_pyfunction!(run_protocol_exact, m)?)?;
    m.add_function(wrap_pyfunction!(run_protocol_mc, m)?)?;
    m.add_function(wrap_pyfunction!(avg_fidelity_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(eta_opt, m)?)?;
    m.add_function(wrap_pyfunction!(chi_opt, m)?)?;
    m.add_function(wrap_pyfunction!(avg_fidelity_opt, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_dn, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_h, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(find_max_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(crossover_curve, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_protocol_opt, m)?)?;
    m.add_function(wrap_pyfunction!(experimental_model_curve, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_counts, m)?)?;
    m.add_function(wrap_pyfunction!(expected_counts, m)?)?;
    m.add_function(wrap_pyfunction!(mix_ensemble_counts, m)?)?;
    m.add_function(wrap_pyfunction!(linear_inversion, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_with_error, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
