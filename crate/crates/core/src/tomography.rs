//! Six-setting single-qubit tomography with Poissonian counts.
//!
//! Each basis X, Y, Z gets a third of the integration time; the two
//! outcomes of a basis are counted simultaneously. Noise is added the way
//! the experiment did it: the clean and phase-flipped preparations are
//! measured separately and their counts are combined with weights `1 − p`
//! and `p` before inversion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::qubit::{
    expectation, hermitian_eigenvalues_2x2, pauli_x, pauli_y, pauli_z, BlochVector, Mat2,
    PureQubit, QubitState, Sign, POSITIVITY_TOL,
};

/// Default integration time per configuration, in seconds.
pub const DEFAULT_DURATION: f64 = 60.0;
/// Coincidence rate seen at the output of the optical circuit, per second.
pub const DEFAULT_RATE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn pauli(self) -> Mat2 {
        match self {
            Basis::X => pauli_x(),
            Basis::Y => pauli_y(),
            Basis::Z => pauli_z(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Basis::X => "X",
            Basis::Y => "Y",
            Basis::Z => "Z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub basis: Basis,
    pub outcome: Sign,
}

impl MeasurementSetting {
    /// `X+, X−, Y+, Y−, Z+, Z−`
    pub fn all() -> [MeasurementSetting; 6] {
        let mut out = [MeasurementSetting {
            basis: Basis::X,
            outcome: Sign::Plus,
        }; 6];
        for (i, basis) in Basis::ALL.into_iter().enumerate() {
            for outcome in Sign::BOTH {
                out[2 * i + outcome.index()] = MeasurementSetting { basis, outcome };
            }
        }
        out
    }

    /// `(𝟙 ± σ)/2`
    pub fn projector(&self) -> Mat2 {
        (Mat2::identity() + self.basis.pauli().scale(self.outcome.value())).scale(0.5)
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.basis.name(), self.outcome.symbol())
    }
}

/// Counts recorded for one setting. Simulated draws are whole numbers;
/// expectation-level records may be fractional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: MeasurementSetting,
    pub counts: f64,
    /// Seconds spent on the basis this setting belongs to.
    pub duration: f64,
}

fn check_rate_duration(rate: f64, duration: f64) -> Result<()> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Domain {
            name: "rate",
            value: rate,
            range: "> 0",
        });
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Domain {
            name: "duration",
            value: duration,
            range: "> 0",
        });
    }
    Ok(())
}

/// Mean counts `rate · duration · tr(Π ρ) / 3` for each setting.
pub fn expected_counts(rho: &QubitState, rate: f64, duration: f64) -> Result<Vec<CountRecord>> {
    check_rate_duration(rate, duration)?;
    let per_basis = duration / 3.0;
    Ok(MeasurementSetting::all()
        .into_iter()
        .map(|setting| {
            let prob = (setting.projector() * rho.matrix()).trace().re.max(0.0);
            CountRecord {
                setting,
                counts: rate * per_basis * prob,
                duration: per_basis,
            }
        })
        .collect())
}

/// Poisson draws around [`expected_counts`].
pub fn simulate_counts<R: Rng + ?Sized>(
    rho: &QubitState,
    rate: f64,
    duration: f64,
    rng: &mut R,
) -> Result<Vec<CountRecord>> {
    let mut records = expected_counts(rho, rate, duration)?;
    for r in &mut records {
        r.counts = poisson(r.counts, rng);
    }
    Ok(records)
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rounding {
    /// Round each combined count to the nearest integer.
    Nearest,
    /// Keep the weighted sum as is.
    Exact,
}

/// Per-setting `(1 − p)·clean + p·flipped`.
pub fn mix_ensemble_counts(
    counts_clean: &[CountRecord],
    counts_flipped: &[CountRecord],
    p: f64,
    rounding: Rounding,
) -> Result<Vec<CountRecord>> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    if counts_clean.len() != counts_flipped.len() {
        return Err(Error::Mismatch(format!(
            "{} clean records vs {} flipped records",
            counts_clean.len(),
            counts_flipped.len()
        )));
    }
    counts_clean
        .iter()
        .zip(counts_flipped)
        .map(|(a, b)| {
            if a.setting != b.setting {
                return Err(Error::Mismatch(format!(
                    "setting {} paired with {}",
                    a.setting.label(),
                    b.setting.label()
                )));
            }
            if (a.duration - b.duration).abs() > 1e-12 * a.duration.abs().max(1.0) {
                return Err(Error::Mismatch(format!(
                    "durations {} and {} for setting {}",
                    a.duration,
                    b.duration,
                    a.setting.label()
                )));
            }
            let mixed = (1.0 - p) * a.counts + p * b.counts;
            Ok(CountRecord {
                setting: a.setting,
                counts: match rounding {
                    Rounding::Nearest => mixed.round(),
                    Rounding::Exact => mixed,
                },
                duration: a.duration,
            })
        })
        .collect()
}

/// Linear-inversion estimate; not necessarily positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructedState {
    pub matrix: Mat2,
    pub bloch: BlochVector,
    pub min_eigenvalue: f64,
    pub physical: bool,
}

impl ReconstructedState {
    /// Negative eigenvalue clipped to zero and renormalized. For one qubit
    /// this rescales an outside-the-ball Bloch vector to unit length.
    pub fn clipped(&self) -> QubitState {
        let n = self.bloch.norm();
        let r = if n > 1.0 {
            BlochVector::new(self.bloch.x / n, self.bloch.y / n, self.bloch.z / n)
        } else {
            self.bloch
        };
        QubitState::new_unchecked(r.density_matrix())
    }

    /// `⟨ψ|ρ|ψ⟩` on the raw reconstruction.
    pub fn fidelity(&self, psi: &PureQubit) -> f64 {
        expectation(psi, &self.matrix).re
    }
}

/// Bloch components from count asymmetries `(n₊ − n₋)/(n₊ + n₋)` per basis.
pub fn linear_inversion(counts: &[CountRecord]) -> Result<ReconstructedState> {
    let mut tallies = [[None::<f64>; 2]; 3];
    for rec in counts {
        if !(rec.counts >= 0.0 && rec.counts.is_finite()) {
            return Err(Error::Reconstruction(format!(
                "invalid count {} for {}",
                rec.counts,
                rec.setting.label()
            )));
        }
        let slot = &mut tallies[rec.setting.basis as usize][rec.setting.outcome.index()];
        *slot = Some(slot.unwrap_or(0.0) + rec.counts);
    }
    let mut r = [0.0; 3];
    for (k, basis) in Basis::ALL.into_iter().enumerate() {
        let [Some(plus), Some(minus)] = tallies[k] else {
            return Err(Error::Reconstruction(format!(
                "basis {} is missing a setting",
                basis.name()
            )));
        };
        let total = plus + minus;
        if total <= 0.0 {
            return Err(Error::Reconstruction(format!(
                "basis {} recorded no counts",
                basis.name()
            )));
        }
        r[k] = (plus - minus) / total;
    }
    let bloch = BlochVector::new(r[0], r[1], r[2]);
    let matrix = bloch.density_matrix();
    let min_eigenvalue = hermitian_eigenvalues_2x2(&matrix)[0];
    Ok(ReconstructedState {
        matrix,
        bloch,
        min_eigenvalue,
        physical: min_eigenvalue >= -POSITIVITY_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    /// Fidelity of the reconstruction from the observed counts.
    pub fidelity: f64,
    /// Mean over bootstrap resamples.
    pub bootstrap_mean: f64,
    /// Standard deviation over bootstrap resamples.
    pub stderr: f64,
    pub resamples: usize,
}

/// Parametric bootstrap: redraw every count from a Poisson law centred on
/// the observed value, re-invert and re-score. Resample `i` uses its own
/// ChaCha stream `i` under a base seed drawn from `rng`, so the result does
/// not depend on scheduling.
pub fn fidelity_with_error<R: Rng + ?Sized>(
    psi_target: &PureQubit,
    counts: &[CountRecord],
    n_resamples: usize,
    rng: &mut R,
) -> Result<FidelityEstimate> {
    if n_resamples < 100 {
        return Err(Error::Domain {
            name: "n_resamples",
            value: n_resamples as f64,
            range: ">= 100",
        });
    }
    psi_target.validate()?;
    let point = linear_inversion(counts)?.fidelity(psi_target);
    let base_seed: u64 = rng.random();
    let samples: Vec<f64> = (0..n_resamples)
        .into_par_iter()
        .filter_map(|i| {
            let mut sub = ChaCha8Rng::seed_from_u64(base_seed);
            sub.set_stream(i as u64);
            let redrawn: Vec<CountRecord> = counts
                .iter()
                .map(|r| CountRecord {
                    counts: poisson(r.counts, &mut sub),
                    ..*r
                })
                .collect();
            linear_inversion(&redrawn)
                .ok()
                .map(|s| s.fidelity(psi_target))
        })
        .collect();
    if samples.len() < 2 {
        return Err(Error::Reconstruction(
            "bootstrap produced fewer than two valid resamples".into(),
        ));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(FidelityEstimate {
        fidelity: point,
        bootstrap_mean: mean,
        stderr: var.sqrt(),
        resamples: samples.len(),
    })
}

/// Average of independent per-input estimates: mean of the fidelities,
/// errors added in quadrature.
pub fn average_estimates(estimates: &[FidelityEstimate]) -> FidelityEstimate {
    let n = estimates.len() as f64;
    FidelityEstimate {
        fidelity: estimates.iter().map(|e| e.fidelity).sum::<f64>() / n,
        bootstrap_mean: estimates.iter().map(|e| e.bootstrap_mean).sum::<f64>() / n,
        stderr: estimates
            .iter()
            .map(|e| e.stderr.powi(2))
            .sum::<f64>()
            .sqrt()
            / n,
        resamples: estimates.iter().map(|e| e.resamples).min().unwrap_or(0),
    }
}

/// Counts for the clean and phase-flipped preparations and their mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleCounts {
    pub clean: Vec<CountRecord>,
    pub flipped: Vec<CountRecord>,
    pub mixed: Vec<CountRecord>,
}

/// Simulates tomography of `clean` and `flipped` separately, each for the
/// full `duration`, and mixes the counts with noise probability `p`.
pub fn simulate_ensemble<R: Rng + ?Sized>(
    clean: &QubitState,
    flipped: &QubitState,
    p: f64,
    rate: f64,
    duration: f64,
    rounding: Rounding,
    rng: &mut R,
) -> Result<EnsembleCounts> {
    let clean_counts = simulate_counts(clean, rate, duration, rng)?;
    let flipped_counts = simulate_counts(flipped, rate, duration, rng)?;
    let mixed = mix_ensemble_counts(&clean_counts, &flipped_counts, p, rounding)?;
    Ok(EnsembleCounts {
        clean: clean_counts,
        flipped: flipped_counts,
        mixed,
    })
}

/// Exact expectation-level version of [`simulate_ensemble`].
pub fn expected_ensemble(
    clean: &QubitState,
    flipped: &QubitState,
    p: f64,
    rate: f64,
    duration: f64,
    rounding: Rounding,
) -> Result<EnsembleCounts> {
    let clean_counts = expected_counts(clean, rate, duration)?;
    let flipped_counts = expected_counts(flipped, rate, duration)?;
    let mixed = mix_ensemble_counts(&clean_counts, &flipped_counts, p, rounding)?;
    Ok(EnsembleCounts {
        clean: clean_counts,
        flipped: flipped_counts,
        mixed,
    })
}
