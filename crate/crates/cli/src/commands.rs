//! The four subcommands. Each turns parsed arguments into a [`Report`].

use std::f64::consts::FRAC_PI_2;

use clap::{Args, ValueEnum};
use qfeedback::photonic::{chi_from_strength, experimental_model_curve, Correction, Ppbs};
use qfeedback::protocol::{
    control_map, run_protocol_exact, run_protocol_mc, OperatingPoint, ProtocolParams, SchemeKind,
};
use qfeedback::qubit::{make_input_state, Sign};
use qfeedback::sweep::{crossover_closed_form, crossover_curve, find_max_improvement, sweep, GridSpec};
use qfeedback::tomography::{
    average_estimates, fidelity_with_error, linear_inversion, simulate_ensemble, CountRecord,
    Rounding, DEFAULT_DURATION, DEFAULT_RATE,
};
use qfeedback::channels::{dephase, phase_flip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::output::{Report, SCHEMA_VERSION};

/// Converts user-facing angles to radians.
#[derive(Debug, Clone, Copy)]
pub struct Angles {
    pub degrees: bool,
}

impl Angles {
    fn rad(&self, x: f64) -> f64 {
        if self.degrees {
            x.to_radians()
        } else {
            x
        }
    }
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeChoice {
    Dn,
    Helstrom,
    Optimal,
    Custom,
}

/// Scheme preset or explicit `(χ, η)`.
#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    /// Control scheme; `custom` needs `--chi` (or `--cos-chi`) and `--eta`
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeChoice>,
    /// Measurement angle chi; the strength is cos(chi)
    #[arg(long, allow_hyphen_values = true, conflicts_with = "cos_chi")]
    pub chi: Option<f64>,
    /// Measurement strength cos(chi) in [0, 1]
    #[arg(long, allow_hyphen_values = true)]
    pub cos_chi: Option<f64>,
    /// Correction angle eta
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
}

impl SchemeArgs {
    fn resolve(&self, angles: Angles) -> Result<SchemeKind, CliError> {
        let explicit = self.chi.is_some() || self.cos_chi.is_some() || self.eta.is_some();
        let choice = self.scheme.unwrap_or(if explicit {
            SchemeChoice::Custom
        } else {
            SchemeChoice::Optimal
        });
        if choice != SchemeChoice::Custom {
            if explicit {
                return Err(validation("--chi/--cos-chi/--eta only apply to --scheme custom"));
            }
            return Ok(match choice {
                SchemeChoice::Dn => SchemeKind::DoNothing,
                SchemeChoice::Helstrom => SchemeKind::Helstrom,
                _ => SchemeKind::Optimal,
            });
        }
        let chi = match (self.chi, self.cos_chi) {
            (Some(c), None) => angles.rad(c),
            (None, Some(s)) => chi_from_strength(s)?,
            _ => return Err(validation("custom scheme needs --chi or --cos-chi")),
        };
        let eta = self
            .eta
            .map(|e| angles.rad(e))
            .ok_or_else(|| validation("custom scheme needs --eta"))?;
        Ok(SchemeKind::Custom { chi, eta })
    }
}

/// Operating point, defaulting to the experimental one.
#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    /// Input-state angle theta [default: 0.715 rad]
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Phase-flip probability
    #[arg(long, default_value_t = OperatingPoint::EXPERIMENT.p, allow_hyphen_values = true)]
    pub p: f64,
}

impl PointArgs {
    fn theta(&self, angles: Angles) -> f64 {
        self.theta.map_or(OperatingPoint::EXPERIMENT.theta, |t| angles.rad(t))
    }
}

// ---------------------------------------------------------------- protocol

#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Also run this many Monte-Carlo shots (needs --seed)
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ProtocolRow {
    pub schema_version: u32,
    pub scheme: &'static str,
    /// `+`, `-` or `avg`
    pub input: &'static str,
    pub theta: f64,
    pub p: f64,
    pub chi: f64,
    pub cos_chi: f64,
    pub eta: f64,
    pub fidelity: f64,
    pub bloch_x: Option<f64>,
    pub bloch_y: Option<f64>,
    pub bloch_z: Option<f64>,
    pub prob_plus: Option<f64>,
    pub prob_minus: Option<f64>,
    pub mc_fidelity: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub mc_shots: Option<u64>,
}

pub fn protocol(args: &ProtocolArgs, angles: Angles) -> Result<Report<ProtocolRow>, CliError> {
    let theta = args.point.theta(angles);
    let p = args.point.p;
    let scheme = args.scheme.resolve(angles)?;
    let params = ProtocolParams::for_scheme(theta, p, scheme)?;
    let exact = run_protocol_exact(&params)?;

    let mc = match (args.shots, args.seed) {
        (Some(0), _) => return Err(validation("--shots must be at least 1")),
        (Some(n), Some(seed)) => Some(run_protocol_mc(&params, n, &mut ChaCha8Rng::seed_from_u64(seed))?),
        (Some(_), None) => return Err(validation("--shots needs --seed")),
        (None, _) => None,
    };

    let base = |input: &'static str, fidelity: f64| ProtocolRow {
        schema_version: SCHEMA_VERSION,
        scheme: scheme.name(),
        input,
        theta,
        p,
        chi: params.chi,
        cos_chi: params.chi.cos(),
        eta: params.eta,
        fidelity,
        bloch_x: None,
        bloch_y: None,
        bloch_z: None,
        prob_plus: None,
        prob_minus: None,
        mc_fidelity: None,
        mc_stderr: None,
        mc_shots: None,
    };
    let mut rows = Vec::new();
    for s in Sign::BOTH {
        let b = exact.output(s).bloch();
        let probs = exact.outcome_probabilities[s.index()];
        let est = mc.as_ref().map(|m| match s {
            Sign::Plus => m.fidelity_plus,
            Sign::Minus => m.fidelity_minus,
        });
        rows.push(ProtocolRow {
            bloch_x: Some(b.x),
            bloch_y: Some(b.y),
            bloch_z: Some(b.z),
            prob_plus: Some(probs[0]),
            prob_minus: Some(probs[1]),
            mc_fidelity: est.map(|e| e.mean),
            mc_stderr: est.map(|e| e.stderr),
            mc_shots: est.map(|e| e.samples),
            ..base(if s == Sign::Plus { "+" } else { "-" }, exact.fidelity(s))
        });
    }
    let avg = mc.as_ref().map(|m| m.fidelity_avg);
    rows.push(ProtocolRow {
        mc_fidelity: avg.map(|e| e.mean),
        mc_stderr: avg.map(|e| e.stderr),
        mc_shots: avg.map(|e| e.samples),
        ..base("avg", exact.fidelity_avg)
    });

    Ok(Report {
        command: "protocol",
        config: json!({
            "theta": theta,
            "p": p,
            "scheme": scheme.name(),
            "chi": params.chi,
            "eta": params.eta,
            "shots": args.shots,
            "seed": args.seed,
            "degrees": angles.degrees,
        }),
        summary: json!({ "fidelity_avg": exact.fidelity_avg, "cos_chi": params.chi.cos() }),
        rows,
    })
}

// ------------------------------------------------------------------- sweep

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta_min: f64,
    /// [default: pi/2 rad]
    #[arg(long, allow_hyphen_values = true)]
    pub theta_max: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub p_min: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub p_max: f64,
    #[arg(long, default_value_t = 200)]
    pub n_theta: usize,
    #[arg(long, default_value_t = 200)]
    pub n_p: usize,
    /// Tolerance of the refinement around the best grid cell
    #[arg(long, default_value_t = 1e-4)]
    pub refine_tolerance: f64,
    /// Number of crossover samples in the summary
    #[arg(long, default_value_t = 50)]
    pub crossover_points: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepRow {
    pub schema_version: u32,
    pub theta: f64,
    pub p: f64,
    pub chi_opt: f64,
    pub cos_chi_opt: f64,
    pub eta_opt: f64,
    pub f_opt: f64,
    pub f_dn: f64,
    pub f_h: f64,
    pub f_diff: f64,
}

pub fn sweep_cmd(args: &SweepArgs, angles: Angles) -> Result<Report<SweepRow>, CliError> {
    let grid = GridSpec::new(
        angles.rad(args.theta_min),
        args.theta_max.map_or(FRAC_PI_2, |t| angles.rad(t)),
        args.p_min,
        args.p_max,
        args.n_theta,
        args.n_p,
    )?;
    let rows: Vec<SweepRow> = sweep(&grid)?
        .into_iter()
        .map(|c| SweepRow {
            schema_version: SCHEMA_VERSION,
            theta: c.theta,
            p: c.p,
            chi_opt: c.chi_opt,
            cos_chi_opt: c.cos_chi_opt,
            eta_opt: c.eta_opt,
            f_opt: c.f_opt,
            f_dn: c.f_dn,
            f_h: c.f_h,
            f_diff: c.f_diff,
        })
        .collect();
    let best = find_max_improvement(&grid, args.refine_tolerance)?;

    let n = args.crossover_points;
    let thetas: Vec<f64> = match n {
        0 => Vec::new(),
        1 => vec![grid.theta_min],
        _ => (0..n)
            .map(|i| grid.theta_min + (grid.theta_max - grid.theta_min) * i as f64 / (n - 1) as f64)
            .collect(),
    };
    let crossover: Vec<_> = crossover_curve(&thetas, 1e-12)?
        .into_iter()
        .map(|c| json!({ "theta": c.theta, "p_star": c.p_star, "p_star_closed_form": crossover_closed_form(c.theta) }))
        .collect();

    Ok(Report {
        command: "sweep",
        config: serde_json::to_value(grid)
            .map(|mut v| {
                v["refine_tolerance"] = json!(args.refine_tolerance);
                v["crossover_points"] = json!(n);
                v["degrees"] = json!(angles.degrees);
                v
            })
            .map_err(|e| CliError::Runtime(e.to_string()))?,
        summary: json!({
            "max_improvement": {
                "theta": best.theta,
                "p": best.p,
                "f_diff": best.f_diff,
                "boundary": best.boundary,
            },
            "crossover": crossover,
        }),
        rows,
    })
}

// -------------------------------------------------------- experiment-model

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrectionChoice {
    /// Correction angle of the ideal theory at each strength
    Ideal,
    /// Correction angle re-optimized for the imperfect gate
    Reoptimized,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Horizontal reflectivity of the partially polarizing beamsplitter
    #[arg(long, default_value_t = Ppbs::MEASURED.r_h)]
    pub rh: f64,
    /// Vertical reflectivity of the partially polarizing beamsplitter
    #[arg(long, default_value_t = Ppbs::MEASURED.r_v)]
    pub rv: f64,
    /// Strengths cos(chi), comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.93, 1.0], conflicts_with = "scan")]
    pub cos_chi: Vec<f64>,
    /// Use this many chi values evenly spaced on [0, pi/2] instead
    #[arg(long)]
    pub scan: Option<usize>,
    #[arg(long, value_enum, default_value_t = CorrectionChoice::Ideal)]
    pub correction: CorrectionChoice,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExperimentRow {
    pub schema_version: u32,
    pub cos_chi: f64,
    pub chi: f64,
    pub eta: f64,
    pub fidelity_ideal: f64,
    pub fidelity_model: f64,
    pub fidelity_plus: f64,
    pub fidelity_minus: f64,
    pub bloch_plus_x: f64,
    pub bloch_plus_y: f64,
    pub bloch_plus_z: f64,
    pub bloch_minus_x: f64,
    pub bloch_minus_y: f64,
    pub bloch_minus_z: f64,
    pub success_probability: f64,
}

pub fn experiment_model(args: &ExperimentArgs, angles: Angles) -> Result<Report<ExperimentRow>, CliError> {
    let theta = args.point.theta(angles);
    let p = args.point.p;
    let ppbs = Ppbs::new(args.rh, args.rv)?;
    let chis: Vec<f64> = match args.scan {
        Some(0 | 1) => return Err(validation("--scan needs at least 2 points")),
        Some(n) => (0..n).map(|k| FRAC_PI_2 * k as f64 / (n - 1) as f64).collect(),
        None => args
            .cos_chi
            .iter()
            .map(|&s| chi_from_strength(s))
            .collect::<Result<_, _>>()?,
    };
    let correction = match args.correction {
        CorrectionChoice::Ideal => Correction::IdealTheory,
        CorrectionChoice::Reoptimized => Correction::Reoptimized,
    };
    let points = experimental_model_curve(theta, p, &chis, &ppbs, &correction)?;
    let rows: Vec<ExperimentRow> = points
        .iter()
        .map(|m| ExperimentRow {
            schema_version: SCHEMA_VERSION,
            cos_chi: m.cos_chi,
            chi: m.chi,
            eta: m.eta,
            fidelity_ideal: m.fidelity_ideal,
            fidelity_model: m.fidelity_model,
            fidelity_plus: m.fidelity_plus,
            fidelity_minus: m.fidelity_minus,
            bloch_plus_x: m.bloch_plus.x,
            bloch_plus_y: m.bloch_plus.y,
            bloch_plus_z: m.bloch_plus.z,
            bloch_minus_x: m.bloch_minus.x,
            bloch_minus_y: m.bloch_minus.y,
            bloch_minus_z: m.bloch_minus.z,
            success_probability: m.success_probability,
        })
        .collect();
    let best = rows
        .iter()
        .max_by(|a, b| a.fidelity_model.total_cmp(&b.fidelity_model));
    Ok(Report {
        command: "experiment-model",
        config: json!({
            "theta": theta,
            "p": p,
            "rh": ppbs.r_h,
            "rv": ppbs.r_v,
            "chi": chis,
            "correction": match args.correction {
                CorrectionChoice::Ideal => "ideal",
                CorrectionChoice::Reoptimized => "reoptimized",
            },
            "degrees": angles.degrees,
        }),
        summary: json!({
            "best_model": best.map(|b| json!({ "cos_chi": b.cos_chi, "fidelity_model": b.fidelity_model })),
            "max_model_minus_ideal": rows.iter().map(|r| r.fidelity_model - r.fidelity_ideal).fold(f64::NEG_INFINITY, f64::max),
        }),
        rows,
    })
}

// -------------------------------------------------------------- tomography

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateChoice {
    /// Output of the feedback protocol
    Output,
    /// Dephased input, no control
    Input,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoundingChoice {
    Nearest,
    Exact,
}

#[derive(Debug, Clone, Args)]
pub struct TomographyArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long, value_enum, default_value_t = StateChoice::Output)]
    pub state: StateChoice,
    /// Coincidence rate, counts per second
    #[arg(long, default_value_t = DEFAULT_RATE)]
    pub rate: f64,
    /// Integration time per preparation, seconds, split over three bases
    #[arg(long, default_value_t = DEFAULT_DURATION)]
    pub duration: f64,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
    #[arg(long, value_enum, default_value_t = RoundingChoice::Nearest)]
    pub rounding: RoundingChoice,
    /// Also report fidelity after clipping negative eigenvalues
    #[arg(long)]
    pub clip: bool,
    #[arg(long, required = true)]
    pub seed: Option<u64>,
    /// Write the simulated count records to this CSV file
    #[arg(long)]
    pub counts_output: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TomographyRow {
    pub schema_version: u32,
    pub input: &'static str,
    pub fidelity_true: f64,
    pub fidelity: f64,
    pub bootstrap_mean: f64,
    pub stderr: f64,
    pub resamples: usize,
    pub bloch_x: Option<f64>,
    pub bloch_y: Option<f64>,
    pub bloch_z: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    pub physical: Option<bool>,
    pub fidelity_clipped: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CountRow {
    pub schema_version: u32,
    pub input: &'static str,
    /// `clean`, `flipped` or `mixed`
    pub preparation: &'static str,
    pub setting: String,
    pub counts: f64,
    pub duration: f64,
}

pub struct TomographyOutput {
    pub report: Report<TomographyRow>,
    pub counts: Vec<CountRow>,
}

pub fn tomography(args: &TomographyArgs, angles: Angles) -> Result<TomographyOutput, CliError> {
    let theta = args.point.theta(angles);
    let p = args.point.p;
    let seed = args.seed.ok_or_else(|| validation("--seed is required"))?;
    let scheme = args.scheme.resolve(angles)?;
    let params = ProtocolParams::for_scheme(theta, p, scheme)?;
    let rounding = match args.rounding {
        RoundingChoice::Nearest => Rounding::Nearest,
        RoundingChoice::Exact => Rounding::Exact,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut rows = Vec::new();
    let mut counts = Vec::new();
    let mut estimates = Vec::new();
    let mut truths = Vec::new();
    for s in Sign::BOTH {
        let label = if s == Sign::Plus { "+" } else { "-" };
        let psi = make_input_state(theta, s)?;
        let rho = psi.to_density();
        let (clean, flipped, truth) = match args.state {
            StateChoice::Output => (
                control_map(&rho, params.chi, params.eta)?,
                control_map(&phase_flip(&rho), params.chi, params.eta)?,
                control_map(&dephase(&rho, p)?, params.chi, params.eta)?,
            ),
            StateChoice::Input => (rho, phase_flip(&rho), dephase(&rho, p)?),
        };
        let ens = simulate_ensemble(&clean, &flipped, p, args.rate, args.duration, rounding, &mut rng)?;
        let rec = linear_inversion(&ens.mixed)?;
        let est = fidelity_with_error(&psi, &ens.mixed, args.resamples, &mut rng)?;
        let fidelity_true = qfeedback::qubit::fidelity(&psi, &truth)?;
        for (prep, records) in [("clean", &ens.clean), ("flipped", &ens.flipped), ("mixed", &ens.mixed)] {
            counts.extend(records.iter().map(|r: &CountRecord| CountRow {
                schema_version: SCHEMA_VERSION,
                input: label,
                preparation: prep,
                setting: r.setting.label(),
                counts: r.counts,
                duration: r.duration,
            }));
        }
        rows.push(TomographyRow {
            schema_version: SCHEMA_VERSION,
            input: label,
            fidelity_true,
            fidelity: est.fidelity,
            bootstrap_mean: est.bootstrap_mean,
            stderr: est.stderr,
            resamples: est.resamples,
            bloch_x: Some(rec.bloch.x),
            bloch_y: Some(rec.bloch.y),
            bloch_z: Some(rec.bloch.z),
            min_eigenvalue: Some(rec.min_eigenvalue),
            physical: Some(rec.physical),
            fidelity_clipped: args
                .clip
                .then(|| qfeedback::qubit::fidelity(&psi, &rec.clipped()))
                .transpose()?,
        });
        estimates.push(est);
        truths.push(fidelity_true);
    }
    let avg = average_estimates(&estimates);
    let clipped_avg = if args.clip {
        Some(rows.iter().filter_map(|r| r.fidelity_clipped).sum::<f64>() / 2.0)
    } else {
        None
    };
    rows.push(TomographyRow {
        schema_version: SCHEMA_VERSION,
        input: "avg",
        fidelity_true: 0.5 * (truths[0] + truths[1]),
        fidelity: avg.fidelity,
        bootstrap_mean: avg.bootstrap_mean,
        stderr: avg.stderr,
        resamples: avg.resamples,
        bloch_x: None,
        bloch_y: None,
        bloch_z: None,
        min_eigenvalue: None,
        physical: None,
        fidelity_clipped: clipped_avg,
    });

    let report = Report {
        command: "tomography",
        config: json!({
            "theta": theta,
            "p": p,
            "state": match args.state { StateChoice::Output => "output", StateChoice::Input => "input" },
            "scheme": scheme.name(),
            "chi": params.chi,
            "eta": params.eta,
            "rate": args.rate,
            "duration": args.duration,
            "resamples": args.resamples,
            "rounding": match args.rounding { RoundingChoice::Nearest => "nearest", RoundingChoice::Exact => "exact" },
            "clip": args.clip,
            "seed": seed,
            "degrees": angles.degrees,
        }),
        summary: json!({
            "fidelity_avg": avg.fidelity,
            "stderr_avg": avg.stderr,
            "counts": counts,
        }),
        rows,
    };
    Ok(TomographyOutput { report, counts })
}
