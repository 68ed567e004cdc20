//! Scenario runs and their report files.
//!
//! Every run writes into `<out>/<scenario name>/`. Tables are comma-separated
//! with a header row, LF line endings and 17 significant digits; JSON
//! documents carry no timestamps, so identical inputs give identical bytes.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use hilfer_core::stability::ExperimentOutcome;
use hilfer_core::{
    certify_uh, certify_uhr, power_rule_oracle, rl_integral, solve_fixed_point, CertifyOptions,
    InitialTermMode, Path, SolveOptions, StabilityCertificate, UhMode,
};
use serde::Serialize;

use crate::scenario::{Scenario, ScenarioSummary};
use crate::CliError;

/// Command-line settings that take precedence over the scenario document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub experiments: Option<usize>,
    pub mode: Option<InitialTermMode>,
    pub uh_mode: Option<UhMode>,
    pub steps_per_delay: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, s: &Scenario) -> Scenario {
        let mut s = s.clone();
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.experiments {
            s.experiments = v;
        }
        if let Some(v) = self.mode {
            s.mode = v;
        }
        if let Some(v) = self.uh_mode {
            s.uh_mode = v;
        }
        if let Some(v) = self.steps_per_delay {
            s.steps_per_delay = v;
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertifyKind {
    Uhr,
    Uh,
}

impl CertifyKind {
    fn tag(self) -> &'static str {
        match self {
            CertifyKind::Uhr => "uhr",
            CertifyKind::Uh => "uh",
        }
    }
}

/// Files written by a run, plus the headline verdict when there is one.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub pass: Option<bool>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &FsPath, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_json(path: &FsPath, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_csv(
    path: &FsPath,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io {
        path: path.display().to_string(),
        source: e.into(),
    };
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e.into_error(),
    })?;
    write_file(path, &bytes)
}

fn scenario_dir(out: &FsPath, s: &Scenario) -> Result<PathBuf, CliError> {
    let dir = out.join(&s.name);
    fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    Ok(dir)
}

#[derive(Serialize)]
struct SolveDoc<'a> {
    scenario: ScenarioSummary,
    converged: bool,
    iterations: usize,
    contraction_observed: f64,
    final_step: f64,
    t0_jump: f64,
    /// `sup (psi(t) - psi(t0))^{1-gamma} |y(t)|`, the norm of the weighted space.
    weighted_norm: f64,
    residual_sup: f64,
    warnings: &'a [String],
}

/// Solves the scenario once; writes `solution.csv` (`t,y`) and `solve.json`.
pub fn run_solve(s: &Scenario, out: &FsPath) -> Result<RunOutput, CliError> {
    let problem = s.problem()?;
    let opts = SolveOptions {
        weight: Some(s.phi_weight()),
        ..Default::default()
    };
    let report = solve_fixed_point(&problem, s.mode, &opts)?;
    if !report.converged {
        return Err(hilfer_core::Error::NotConverged {
            iterations: report.iterations,
            last_step: report.final_residual_sup,
        }
        .into());
    }
    let residual = hilfer_core::residual(&report.solution, &problem)?;
    let grid = problem.grid();
    // The Hilfer difference stencil is unreliable on the first two forward nodes.
    let residual_sup = residual
        .forward()
        .iter()
        .skip(2)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let dir = scenario_dir(out, s)?;
    let csv_path = dir.join("solution.csv");
    write_csv(
        &csv_path,
        &["t", "y"],
        grid.nodes()
            .zip(report.solution.values())
            .map(|(t, y)| vec![num(t), num(*y)]),
    )?;
    let json_path = dir.join("solve.json");
    write_json(
        &json_path,
        &SolveDoc {
            scenario: s.summary(),
            converged: report.converged,
            iterations: report.iterations,
            contraction_observed: report.contraction_observed,
            final_step: report.final_residual_sup,
            t0_jump: report.t0_jump,
            weighted_norm: report.solution.weighted_norm(&s.psi, 1.0 - s.order.gamma()),
            residual_sup,
            warnings: problem.warnings(),
        },
    )?;
    Ok(RunOutput {
        files: vec![json_path, csv_path],
        warnings: problem.warnings().to_vec(),
        pass: None,
    })
}

#[derive(Serialize)]
struct BoundSummary {
    at_t0: f64,
    at_t_end: f64,
    min: f64,
    max: f64,
}

impl BoundSummary {
    fn new(bound: &Path) -> Self {
        let fwd = bound.forward();
        Self {
            at_t0: fwd[0],
            at_t_end: fwd[fwd.len() - 1],
            min: fwd.iter().copied().fold(f64::INFINITY, f64::min),
            max: fwd.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Serialize)]
struct CertificateDoc<'a> {
    scenario: ScenarioSummary,
    kind: &'static str,
    #[serde(rename = "K")]
    k: Option<f64>,
    contraction: f64,
    condition_ok: bool,
    reason: Option<&'a str>,
    epsilon: f64,
    #[serde(rename = "B")]
    bound: Option<BoundSummary>,
    empirical_sup_ratio: f64,
    c_phi: f64,
    discretization_budget: f64,
    pass: bool,
    experiments: usize,
    outcomes: &'a [ExperimentOutcome],
    warnings: &'a [String],
}

/// Runs a Ulam-Hyers(-Rassias) certification; writes `certificate_<kind>.json`
/// and, when the contraction condition holds, `bound_<kind>.csv` with columns
/// `t,y0,B,max_dev`.
///
/// A failed contraction condition is a valid outcome: the certificate is
/// written with `condition_ok = false` and no table.
pub fn run_certify(
    s: &Scenario,
    kind: CertifyKind,
    out: &FsPath,
) -> Result<(RunOutput, StabilityCertificate), CliError> {
    let problem = s.problem()?;
    let opts = CertifyOptions {
        mode: s.mode,
        uh_mode: s.uh_mode,
        solve: SolveOptions::default(),
    };
    let cert = match kind {
        CertifyKind::Uhr => certify_uhr(&problem, &s.phi_weight(), s.experiments, s.seed, &opts)?,
        CertifyKind::Uh => certify_uh(&problem, s.epsilon, s.experiments, s.seed, &opts)?,
    };
    let dir = scenario_dir(out, s)?;
    let mut files = Vec::new();
    let json_path = dir.join(format!("certificate_{}.json", kind.tag()));
    write_json(
        &json_path,
        &CertificateDoc {
            scenario: s.summary(),
            kind: kind.tag(),
            k: cert.k,
            contraction: cert.contraction,
            condition_ok: cert.condition_ok,
            reason: cert.reason.as_deref(),
            epsilon: cert.epsilon,
            bound: cert.bound.as_ref().map(BoundSummary::new),
            empirical_sup_ratio: cert.empirical_sup_ratio,
            c_phi: cert.generalized_c_phi,
            discretization_budget: cert.discretization_budget,
            pass: cert.pass,
            experiments: cert.experiments,
            outcomes: &cert.outcomes,
            warnings: problem.warnings(),
        },
    )?;
    files.push(json_path);
    if let (Some(bound), Some(y0), Some(dev)) = (&cert.bound, &cert.y0, &cert.max_deviation) {
        let csv_path = dir.join(format!("bound_{}.csv", kind.tag()));
        let grid = problem.grid();
        write_csv(
            &csv_path,
            &["t", "y0", "B", "max_dev"],
            (0..grid.len()).map(|i| {
                vec![
                    num(grid.node(i)),
                    num(y0.get(i)),
                    num(bound.get(i)),
                    num(dev.get(i)),
                ]
            }),
        )?;
        files.push(csv_path);
    }
    let out = RunOutput {
        files,
        warnings: problem.warnings().to_vec(),
        pass: Some(cert.pass),
    };
    Ok((out, cert))
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub error: f64,
    pub ratio: Option<f64>,
    pub order: Option<f64>,
}

/// Error of the fractional integral of `(psi(s) - psi(t0))^{delta-1}` at `T`
/// against the closed form, under `refinements` doublings of the scenario
/// grid. Writes `convergence.csv` with columns `n,error,ratio,order`.
pub fn run_convergence_study(
    s: &Scenario,
    refinements: usize,
    delta: f64,
    out: &FsPath,
) -> Result<(RunOutput, Vec<StudyRow>), CliError> {
    if refinements < 2 {
        return Err(CliError::Input("refinements must be at least 2".into()));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(CliError::Input("delta must be positive".into()));
    }
    let alpha = s.order.alpha();
    let mut rows: Vec<StudyRow> = Vec::with_capacity(refinements + 1);
    for k in 0..=refinements {
        let grid = s.grid_with(s.steps_per_delay << k)?;
        let (t0, psi) = (grid.t0(), s.psi);
        let f = Path::from_fn(grid.clone(), |t| {
            if t < t0 {
                0.0
            } else {
                psi.diff(t, t0).powf(delta - 1.0)
            }
        });
        let integral = rl_integral(&f, alpha, &psi)?;
        let exact = power_rule_oracle(delta, alpha, &psi, t0, grid.t_end())?;
        let error = (integral.values()[grid.len() - 1] - exact).abs();
        let ratio = rows.last().map(|prev| prev.error / error);
        rows.push(StudyRow {
            n: grid.steps(),
            error,
            ratio,
            order: ratio.map(f64::log2),
        });
    }
    let dir = scenario_dir(out, s)?;
    let csv_path = dir.join("convergence.csv");
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    write_csv(
        &csv_path,
        &["n", "error", "ratio", "order"],
        rows.iter()
            .map(|r| vec![r.n.to_string(), num(r.error), opt(r.ratio), opt(r.order)]),
    )?;
    Ok((
        RunOutput {
            files: vec![csv_path],
            warnings: Vec::new(),
            pass: None,
        },
        rows,
    ))
}
