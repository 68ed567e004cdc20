//! Contraction constants, Ulam-Hyers(-Rassias) bound functions and their
//! empirical verification against seeded quasi-solutions.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::gamma;
use crate::grid::{Path, TimeGrid, WeightFn};
use crate::psi::PsiMap;
use crate::quadrature::RlOperator;
use crate::solver::{
    perturbed_problem, solve_fixed_point, DelayProblem, InitialTermMode, SolveOptions, SolveReport,
};

/// Safety factor applied to the grid estimate of `K`.
pub const K_SAFETY: f64 = 1.02;
/// Relative slack allowed on the bound ratio before a check fails.
pub const RELATIVE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    /// Ulam-Hyers-Rassias, weight-proportional bound.
    Uhr,
    /// Ulam-Hyers, constant bound.
    Uh,
    /// Ulam-Hyers with the logarithmic scale.
    Hadamard,
    /// Ulam-Hyers for first-order equations.
    Classical,
}

/// Which power of the scale enters the Ulam-Hyers contraction condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UhMode {
    /// `psi(T)^alpha`
    #[default]
    PaperLiteral,
    /// `(psi(T) - psi(t0))^alpha`
    Tight,
}

impl UhMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            UhMode::PaperLiteral => "paper-literal",
            UhMode::Tight => "tight",
        }
    }
}

impl fmt::Display for UhMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for UhMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-literal" => Ok(UhMode::PaperLiteral),
            "tight" => Ok(UhMode::Tight),
            other => Err(Error::Domain(format!(
                "unknown uh mode '{other}' (expected paper-literal or tight)"
            ))),
        }
    }
}

/// Result of checking `|y - y0| <= bound` node by node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub sup_ratio: f64,
    pub worst_node: f64,
    pub ok: bool,
}

/// Outcome of one quasi-solution experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutcome {
    pub seed: u64,
    pub sup_ratio: f64,
    pub worst_node: f64,
    pub c_phi: f64,
    pub final_step: f64,
}

#[derive(Debug, Clone)]
pub struct StabilityCertificate {
    pub kind: CertificateKind,
    /// `K` of the weighted integral inequality (UHR only).
    pub k: Option<f64>,
    pub contraction: f64,
    pub condition_ok: bool,
    /// Why the condition failed, if it did.
    pub reason: Option<String>,
    pub epsilon: f64,
    /// Samples of the bound function `B(t)` when it is defined.
    pub bound: Option<Path>,
    pub y0: Option<Path>,
    /// Pointwise maximum of `|y - y0|` over the experiments.
    pub max_deviation: Option<Path>,
    pub empirical_sup_ratio: f64,
    pub generalized_c_phi: f64,
    pub experiments: usize,
    pub outcomes: Vec<ExperimentOutcome>,
    /// Measured iteration error in bound-ratio units.
    pub discretization_budget: f64,
    pub pass: bool,
}

/// Settings shared by the certification flows.
#[derive(Debug, Clone, Default)]
pub struct CertifyOptions {
    pub mode: InitialTermMode,
    pub uh_mode: UhMode,
    pub solve: SolveOptions,
}

/// Least `K` with `I^{alpha;psi} phi <= K phi` on the forward nodes, times
/// [`K_SAFETY`].
pub fn estimate_k(
    phi: &WeightFn,
    alpha: f64,
    psi: &PsiMap,
    grid: &std::sync::Arc<TimeGrid>,
) -> Result<f64> {
    let sampled = phi.sample(grid)?;
    let op = RlOperator::new(grid.clone(), *psi, alpha)?;
    Ok(k_from_samples(&sampled, &op))
}

fn k_from_samples(phi: &Path, op: &RlOperator) -> f64 {
    let integral = op.rule().apply(phi.forward());
    let ratio = integral
        .iter()
        .zip(phi.forward())
        .map(|(i, p)| i / p)
        .fold(0.0, f64::max);
    ratio * K_SAFETY
}

/// Sup over all nodes of `|y - y0| / bound`.
pub fn verify_bound(y: &Path, y0: &Path, bound: &Path) -> Result<BoundCheck> {
    if !y.same_grid(y0) || !y.same_grid(bound) {
        return Err(Error::GridMismatch);
    }
    let grid = y.grid();
    let mut sup = 0.0;
    let mut worst = 0;
    for i in 0..y.len() {
        let b = bound.get(i);
        if !(b > 0.0) {
            return Err(Error::NonPositiveWeight {
                t: grid.node(i),
                value: b,
            });
        }
        let r = (y.get(i) - y0.get(i)).abs() / b;
        if r > sup {
            sup = r;
            worst = i;
        }
    }
    Ok(BoundCheck {
        sup_ratio: sup,
        worst_node: grid.node(worst),
        ok: sup <= 1.0 + RELATIVE_SLACK,
    })
}

fn derive_seed(master: u64, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(master ^ splitmix(index))
}

fn fail_closed(
    kind: CertificateKind,
    k: Option<f64>,
    contraction: f64,
    epsilon: f64,
    reason: String,
    bound: Option<Path>,
) -> StabilityCertificate {
    StabilityCertificate {
        kind,
        k,
        contraction,
        condition_ok: false,
        reason: Some(reason),
        epsilon,
        bound,
        y0: None,
        max_deviation: None,
        empirical_sup_ratio: f64::NAN,
        generalized_c_phi: f64::NAN,
        experiments: 0,
        outcomes: Vec::new(),
        discretization_budget: 0.0,
        pass: false,
    }
}

fn condition_failure(l_sum: f64, contraction: f64) -> Option<String> {
    if l_sum == 0.0 {
        Some("degenerate Lipschitz: L1 + L2 = 0".into())
    } else if !(contraction < 1.0) {
        Some(format!(
            "contraction violated: factor {contraction} is not below 1"
        ))
    } else {
        None
    }
}

struct ExperimentRun {
    outcome: ExperimentOutcome,
    deviation: Vec<f64>,
}

/// Runs `experiments` quasi-solutions with residual weight `epsilon * weight`
/// and compares each against `y0` and `bound`.
#[allow(clippy::too_many_arguments)]
fn run_experiments(
    problem: &DelayProblem,
    weight: &WeightFn,
    weight_samples: &Path,
    epsilon: f64,
    bound: &Path,
    y0: &SolveReport,
    experiments: usize,
    seed: u64,
    opts: &CertifyOptions,
) -> Result<Vec<ExperimentRun>> {
    (0..experiments as u64)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i);
            let perturbed = perturbed_problem(problem, weight, epsilon, s);
            let report = solve_fixed_point(&perturbed, opts.mode, &opts.solve)?;
            if !report.converged {
                return Err(Error::NotConverged {
                    iterations: report.iterations,
                    last_step: report.final_residual_sup,
                });
            }
            let y = &report.solution;
            let deviation: Vec<f64> = y
                .values()
                .iter()
                .zip(y0.solution.values())
                .map(|(a, b)| (a - b).abs())
                .collect();
            let (sup_ratio, worst_node) = ratio_against(&deviation, bound);
            let c_phi = deviation
                .iter()
                .zip(weight_samples.values())
                .map(|(d, w)| d / w)
                .fold(0.0, f64::max);
            Ok(ExperimentRun {
                outcome: ExperimentOutcome {
                    seed: s,
                    sup_ratio,
                    worst_node,
                    c_phi,
                    final_step: report.final_residual_sup,
                },
                deviation,
            })
        })
        .collect()
}

/// Ratio of a deviation to a nonnegative bound; a zero bound admits only a
/// zero deviation.
fn ratio_against(deviation: &[f64], bound: &Path) -> (f64, f64) {
    let grid = bound.grid();
    let mut sup = 0.0;
    let mut worst = 0;
    for (i, (&d, &b)) in deviation.iter().zip(bound.values()).enumerate() {
        let r = if d == 0.0 { 0.0 } else { d / b };
        if r > sup {
            sup = r;
            worst = i;
        }
    }
    (sup, grid.node(worst))
}

fn pointwise_max(runs: &[ExperimentRun], grid: &Path) -> Path {
    let mut max = vec![0.0; grid.len()];
    for run in runs {
        for (m, d) in max.iter_mut().zip(&run.deviation) {
            *m = f64::max(*m, *d);
        }
    }
    Path::new(grid.grid_arc().clone(), max).expect("length matches grid")
}

/// Ulam-Hyers-Rassias certificate with residual weight `phi`.
pub fn certify_uhr(
    problem: &DelayProblem,
    phi: &WeightFn,
    experiments: usize,
    seed: u64,
    opts: &CertifyOptions,
) -> Result<StabilityCertificate> {
    if experiments == 0 {
        return Err(Error::Domain("experiments must be at least 1".into()));
    }
    let grid = problem.grid();
    let phi_samples = phi.sample(grid)?;
    let k = k_from_samples(&phi_samples, problem.integral());
    let l_sum = problem.l1() + problem.l2();
    let contraction = k * l_sum;
    let bound = (contraction < 1.0).then(|| phi_samples.map(|_, p| k * p / (1.0 - contraction)));
    if let Some(reason) = condition_failure(l_sum, contraction) {
        return Ok(fail_closed(
            CertificateKind::Uhr,
            Some(k),
            contraction,
            1.0,
            reason,
            bound,
        ));
    }
    let bound = bound.expect("contraction below 1");
    let mut solve = opts.solve.clone();
    solve.weight = Some(phi.clone());
    let opts = CertifyOptions {
        solve,
        ..opts.clone()
    };
    let y0 = solve_fixed_point(problem, opts.mode, &opts.solve)?;
    if !y0.converged {
        return Err(Error::NotConverged {
            iterations: y0.iterations,
            last_step: y0.final_residual_sup,
        });
    }
    let runs = run_experiments(
        problem,
        phi,
        &phi_samples,
        1.0,
        &bound,
        &y0,
        experiments,
        seed,
        &opts,
    )?;
    // iterate error of both solves, |y_k - y*| <= step L / (1 - L), in units of B/phi
    let worst_step = runs
        .iter()
        .map(|r| r.outcome.final_step)
        .fold(0.0, f64::max);
    let budget = (y0.final_residual_sup + worst_step) * contraction / (1.0 - contraction)
        * (1.0 - contraction)
        / k;
    Ok(assemble(
        CertificateKind::Uhr,
        Some(k),
        contraction,
        1.0,
        bound,
        y0.solution,
        runs,
        budget,
        &phi_samples,
    ))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    kind: CertificateKind,
    k: Option<f64>,
    contraction: f64,
    epsilon: f64,
    bound: Path,
    y0: Path,
    runs: Vec<ExperimentRun>,
    budget: f64,
    _weight: &Path,
) -> StabilityCertificate {
    let max_deviation = pointwise_max(&runs, &y0);
    let empirical_sup_ratio = runs.iter().map(|r| r.outcome.sup_ratio).fold(0.0, f64::max);
    let generalized_c_phi = runs.iter().map(|r| r.outcome.c_phi).fold(0.0, f64::max);
    let pass = empirical_sup_ratio <= 1.0 + RELATIVE_SLACK + budget;
    StabilityCertificate {
        kind,
        k,
        contraction,
        condition_ok: true,
        reason: None,
        epsilon,
        bound: Some(bound),
        y0: Some(y0),
        max_deviation: Some(max_deviation),
        empirical_sup_ratio,
        generalized_c_phi,
        experiments: runs.len(),
        outcomes: runs.into_iter().map(|r| r.outcome).collect(),
        discretization_budget: budget,
        pass,
    }
}

/// Contraction factor and constant bound of the Ulam-Hyers estimate.
///
/// Returns `(contraction, B)`; `B` is infinite or negative when the
/// contraction condition fails.
pub fn uh_constants(problem: &DelayProblem, epsilon: f64, uh_mode: UhMode) -> (f64, f64) {
    let psi = problem.psi();
    let grid = problem.grid();
    let base = match uh_mode {
        UhMode::PaperLiteral => psi.eval(grid.t_end()),
        UhMode::Tight => psi.diff(grid.t_end(), grid.t0()),
    };
    let alpha = problem.order().alpha();
    let power = base.powf(alpha);
    let l_sum = problem.l1() + problem.l2();
    let g = gamma(alpha + 1.0);
    (power * l_sum / g, epsilon * power / (g - power * l_sum))
}

/// Ulam-Hyers certificate with constant residual bound `epsilon`.
pub fn certify_uh(
    problem: &DelayProblem,
    epsilon: f64,
    experiments: usize,
    seed: u64,
    opts: &CertifyOptions,
) -> Result<StabilityCertificate> {
    if experiments == 0 {
        return Err(Error::Domain("experiments must be at least 1".into()));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    let (contraction, b) = uh_constants(problem, epsilon, opts.uh_mode);
    let l_sum = problem.l1() + problem.l2();
    let grid = problem.grid();
    if contraction.is_nan() {
        return Ok(fail_closed(
            CertificateKind::Uh,
            None,
            contraction,
            epsilon,
            format!(
                "psi(T) = {} has no real power",
                problem.psi().eval(grid.t_end())
            ),
            None,
        ));
    }
    let bound = (contraction < 1.0).then(|| Path::constant(grid.clone(), b));
    if let Some(reason) = condition_failure(l_sum, contraction) {
        return Ok(fail_closed(
            CertificateKind::Uh,
            None,
            contraction,
            epsilon,
            reason,
            bound,
        ));
    }
    let bound = bound.expect("contraction below 1");
    let mut solve = opts.solve.clone();
    solve.weight = None;
    let opts = CertifyOptions {
        solve,
        ..opts.clone()
    };
    let y0 = solve_fixed_point(problem, opts.mode, &opts.solve)?;
    if !y0.converged {
        return Err(Error::NotConverged {
            iterations: y0.iterations,
            last_step: y0.final_residual_sup,
        });
    }
    let unit = WeightFn::constant(1.0);
    let weight_samples = Path::constant(grid.clone(), if epsilon > 0.0 { epsilon } else { 1.0 });
    let runs = run_experiments(
        problem,
        &unit,
        &weight_samples,
        epsilon,
        &bound,
        &y0,
        experiments,
        seed,
        &opts,
    )?;
    let worst_step = runs
        .iter()
        .map(|r| r.outcome.final_step)
        .fold(0.0, f64::max);
    let budget = if b > 0.0 {
        (y0.final_residual_sup + worst_step) * contraction / (1.0 - contraction) / b
    } else {
        0.0
    };
    Ok(assemble(
        CertificateKind::Uh,
        None,
        contraction,
        epsilon,
        bound,
        y0.solution,
        runs,
        budget,
        &weight_samples,
    ))
}

/// Constant of the Ulam-Hyers estimate for the Hadamard derivative
/// (`psi = ln t`, `t0 = 1`): `eps (ln T)^alpha / (Gamma(alpha+1) - (ln T)^alpha (L1+L2))`.
pub fn hadamard_bound(epsilon: f64, t_end: f64, alpha: f64, l1: f64, l2: f64) -> Result<f64> {
    if !(t_end > 1.0) {
        return Err(Error::Domain(format!(
            "Hadamard bound needs T > 1, got {t_end}"
        )));
    }
    let log_pow = t_end.ln().powf(alpha);
    let g = gamma(alpha + 1.0);
    if !(log_pow * (l1 + l2) < g) {
        return Err(Error::ContractionViolated(format!(
            "(ln T)^alpha (L1 + L2) = {} >= Gamma(alpha + 1) = {g}",
            log_pow * (l1 + l2)
        )));
    }
    Ok(epsilon * log_pow / (g - log_pow * (l1 + l2)))
}

/// Constant of the Ulam-Hyers estimate for first-order equations
/// (`psi = t`, `t0 = 0`, `alpha = 1`): `eps T / (1 - T (L1+L2))`.
pub fn classical_bound(epsilon: f64, t_end: f64, l1: f64, l2: f64) -> Result<f64> {
    if !(t_end * (l1 + l2) < 1.0) {
        return Err(Error::ContractionViolated(format!(
            "T (L1 + L2) = {} >= 1",
            t_end * (l1 + l2)
        )));
    }
    Ok(epsilon * t_end / (1.0 - t_end * (l1 + l2)))
}
