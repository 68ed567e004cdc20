//! Picard iteration for the delay problem.
//!
//! The operator
//!
//! ```text
//! (Omega y)(t) = Phi(t)                                           t in [t0 - a, t0]
//! (Omega y)(t) = W(t) Phi(t0) + I^{alpha;psi} F(., y(.), y(. - a))(t)  t in (t0, T]
//! ```
//!
//! is iterated from a candidate that matches the history. `W` depends on the
//! [`InitialTermMode`]. The node `t0` belongs to the history branch.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::gamma;
use crate::grid::{sup_ratio, Path, TimeGrid, WeightFn};
use crate::hilfer::HilferOperator;
use crate::order::FracOrder;
use crate::psi::PsiMap;
use crate::quadrature::RlOperator;

pub type RhsFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;
pub type HistoryFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Weight multiplying `Phi(t0)` in the Picard operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialTermMode {
    /// `(psi(t) - psi(t0))^{1-gamma} / Gamma(gamma)`
    #[default]
    PaperLiteral,
    /// `(psi(t) - psi(t0))^{gamma-1} / Gamma(gamma)`
    WeightedHilfer,
}

impl InitialTermMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitialTermMode::PaperLiteral => "paper-literal",
            InitialTermMode::WeightedHilfer => "weighted-hilfer",
        }
    }
}

impl fmt::Display for InitialTermMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for InitialTermMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-literal" => Ok(Self::PaperLiteral),
            "weighted-hilfer" => Ok(Self::WeightedHilfer),
            other => Err(Error::Domain(format!(
                "unknown initial term mode '{other}' (expected paper-literal or weighted-hilfer)"
            ))),
        }
    }
}

/// Delay problem with declared Lipschitz constants.
#[derive(Clone)]
pub struct DelayProblem {
    rhs: Arc<RhsFn>,
    l1: f64,
    l2: f64,
    history: Arc<HistoryFn>,
    history_values: Vec<f64>,
    order: FracOrder,
    psi: PsiMap,
    grid: Arc<TimeGrid>,
    integral: RlOperator,
    warnings: Vec<String>,
}

impl fmt::Debug for DelayProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DelayProblem")
            .field("l1", &self.l1)
            .field("l2", &self.l2)
            .field("order", &self.order)
            .field("psi", &self.psi)
            .field("grid", &self.grid)
            .field("warnings", &self.warnings)
            .finish()
    }
}

const LIPSCHITZ_PROBES: usize = 512;

impl DelayProblem {
    pub fn new(
        rhs: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        l1: f64,
        l2: f64,
        history: impl Fn(f64) -> f64 + Send + Sync + 'static,
        order: FracOrder,
        psi: PsiMap,
        grid: Arc<TimeGrid>,
    ) -> Result<Self> {
        if !(l1 >= 0.0 && l2 >= 0.0 && l1.is_finite() && l2.is_finite()) {
            return Err(Error::Domain(format!(
                "Lipschitz constants must be nonnegative, got L1 = {l1}, L2 = {l2}"
            )));
        }
        let history: Arc<HistoryFn> = Arc::new(history);
        let history_values: Vec<f64> = (0..=grid.t0_index())
            .map(|i| history(grid.node(i)))
            .collect();
        if let Some(i) = history_values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: i,
                t: grid.node(i),
            });
        }
        let integral = RlOperator::new(grid.clone(), psi, order.alpha())?;
        let mut problem = Self {
            rhs: Arc::new(rhs),
            l1,
            l2,
            history,
            history_values,
            order,
            psi,
            grid,
            integral,
            warnings: Vec::new(),
        };
        problem.probe_lipschitz();
        Ok(problem)
    }

    /// Randomized check of `|F(t,x,y) - F(t,z,w)| <= L1 |x-z| + L2 |y-w|`.
    fn probe_lipschitz(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(0x4c49_5053);
        let scale = 10.0
            * (1.0
                + self
                    .history_values
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs())));
        let (t0, t1) = (self.grid.t0(), self.grid.t_end());
        let mut worst: Option<(f64, f64)> = None;
        for _ in 0..LIPSCHITZ_PROBES {
            let t = rng.gen_range(t0..=t1);
            let x = rng.gen_range(-scale..scale);
            let y = rng.gen_range(-scale..scale);
            let (z, w) = if rng.gen_bool(0.5) {
                (x + rng.gen_range(-1.0..1.0), y + rng.gen_range(-1.0..1.0))
            } else {
                (rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
            };
            let lhs = ((self.rhs)(t, x, y) - (self.rhs)(t, z, w)).abs();
            let rhs = self.l1 * (x - z).abs() + self.l2 * (y - w).abs();
            if lhs > rhs * (1.0 + 1e-9) + 1e-12 && worst.is_none_or(|(a, b)| lhs - rhs > a - b) {
                worst = Some((lhs, rhs));
            }
        }
        if let Some((lhs, rhs)) = worst {
            self.warnings.push(format!(
                "declared Lipschitz constants violated on probes: |dF| = {lhs:.6e} > {rhs:.6e}"
            ));
        }
    }

    /// Same problem with a different right-hand side; the Lipschitz probe is
    /// not repeated.
    pub fn with_rhs(&self, rhs: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        let mut p = self.clone();
        p.rhs = Arc::new(rhs);
        p
    }

    pub fn rhs(&self, t: f64, y: f64, y_delay: f64) -> f64 {
        (self.rhs)(t, y, y_delay)
    }

    pub fn rhs_fn(&self) -> Arc<RhsFn> {
        self.rhs.clone()
    }

    pub fn history(&self, t: f64) -> f64 {
        (self.history)(t)
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn order(&self) -> FracOrder {
        self.order
    }

    pub fn psi(&self) -> &PsiMap {
        &self.psi
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn integral(&self) -> &RlOperator {
        &self.integral
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn phi_t0(&self) -> f64 {
        self.history_values[self.grid.t0_index()]
    }

    /// History on `[t0 - a, t0]`, extended by the constant `Phi(t0)`.
    pub fn initial_candidate(&self) -> Path {
        let mut values = self.history_values.clone();
        values.resize(self.grid.len(), self.phi_t0());
        Path::new(self.grid.clone(), values).expect("length matches grid")
    }

    /// History extended by the ramp `Phi(t0) + (t - t0)`.
    pub fn ramp_candidate(&self) -> Path {
        let t0 = self.grid.t0();
        let c = self.phi_t0();
        let mut values = self.history_values.clone();
        for i in self.grid.t0_index() + 1..self.grid.len() {
            values.push(c + (self.grid.node(i) - t0));
        }
        Path::new(self.grid.clone(), values).expect("length matches grid")
    }

    /// Samples of `W(t)` on the forward nodes. Entry 0 is unused because `t0`
    /// takes the history value.
    fn initial_weights(&self, mode: InitialTermMode) -> Vec<f64> {
        let gamma_order = self.order.gamma();
        let exponent = match mode {
            InitialTermMode::PaperLiteral => 1.0 - gamma_order,
            InitialTermMode::WeightedHilfer => gamma_order - 1.0,
        };
        let scale = 1.0 / gamma(gamma_order);
        let start = self.grid.t0_index();
        let t0 = self.grid.t0();
        (start..self.grid.len())
            .map(|i| {
                if i == start {
                    scale
                } else {
                    self.psi.diff(self.grid.node(i), t0).powf(exponent) * scale
                }
            })
            .collect()
    }

    /// Gap at `t0` between the history value and the one-sided limit of the
    /// integral branch.
    pub fn t0_jump(&self, mode: InitialTermMode) -> f64 {
        let phi0 = self.phi_t0();
        let g = self.order.gamma();
        if g == 1.0 {
            return 0.0;
        }
        match mode {
            InitialTermMode::PaperLiteral => phi0.abs(),
            InitialTermMode::WeightedHilfer if phi0 == 0.0 => 0.0,
            InitialTermMode::WeightedHilfer => f64::INFINITY,
        }
    }

    fn check_candidate(&self, candidate: &Path) -> Result<()> {
        if **candidate.grid_arc() != *self.grid {
            return Err(Error::GridMismatch);
        }
        for (i, h) in self.history_values.iter().enumerate() {
            let c = candidate.get(i);
            if (c - h).abs() > 1e-12 * (1.0 + h.abs()) {
                return Err(Error::HistoryMismatch {
                    t: self.grid.node(i),
                });
            }
        }
        Ok(())
    }
}

/// Fixed-point iteration settings.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight of the stopping metric; `None` means the uniform metric.
    pub weight: Option<WeightFn>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            weight: None,
        }
    }
}

/// Outcome of a fixed-point solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Path,
    pub iterations: usize,
    /// Largest ratio of successive step sizes.
    pub contraction_observed: f64,
    pub converged: bool,
    /// Size of the last step in the stopping metric.
    pub final_residual_sup: f64,
    /// Step sizes, one per iteration.
    pub steps: Vec<f64>,
    /// Jump at `t0` between the two branches of the operator.
    pub t0_jump: f64,
}

/// Workspace for repeated operator applications.
struct OmegaApplier<'a> {
    problem: &'a DelayProblem,
    weights: Vec<f64>,
    forcing: Vec<f64>,
}

impl<'a> OmegaApplier<'a> {
    fn new(problem: &'a DelayProblem, mode: InitialTermMode) -> Self {
        Self {
            problem,
            weights: problem.initial_weights(mode),
            forcing: vec![0.0; problem.grid.steps() + 1],
        }
    }

    fn apply(&mut self, candidate: &[f64], out: &mut [f64]) {
        let p = self.problem;
        let grid = &p.grid;
        let start = grid.t0_index();
        for (k, f) in self.forcing.iter_mut().enumerate() {
            let i = start + k;
            *f = p.rhs(grid.node(i), candidate[i], candidate[grid.delayed_index(i)]);
        }
        out[..=start].copy_from_slice(&p.history_values);
        let phi0 = p.phi_t0();
        let rule = p.integral.rule();
        for k in 1..self.forcing.len() {
            out[start + k] = self.weights[k] * phi0 + rule.integrate_at(k, &self.forcing);
        }
    }
}

/// One application of the Picard operator.
pub fn apply_omega(
    candidate: &Path,
    problem: &DelayProblem,
    mode: InitialTermMode,
) -> Result<Path> {
    problem.check_candidate(candidate)?;
    let mut out = vec![0.0; candidate.len()];
    OmegaApplier::new(problem, mode).apply(candidate.values(), &mut out);
    Path::new(problem.grid.clone(), out)
}

/// Iterates the Picard operator from the history extended by `Phi(t0)`.
pub fn solve_fixed_point(
    problem: &DelayProblem,
    mode: InitialTermMode,
    options: &SolveOptions,
) -> Result<SolveReport> {
    solve_from(problem, mode, problem.initial_candidate(), options)
}

/// Iterates the Picard operator from `initial`.
pub fn solve_from(
    problem: &DelayProblem,
    mode: InitialTermMode,
    initial: Path,
    options: &SolveOptions,
) -> Result<SolveReport> {
    if !(options.tol > 0.0) {
        return Err(Error::Domain(format!(
            "tol must be positive, got {}",
            options.tol
        )));
    }
    if options.max_iter == 0 {
        return Err(Error::Domain("max_iter must be at least 1".into()));
    }
    problem.check_candidate(&initial)?;
    let weights = match &options.weight {
        Some(w) => w.sample(&problem.grid)?.into_values(),
        None => vec![1.0; problem.grid.len()],
    };
    let mut applier = OmegaApplier::new(problem, mode);
    let mut current = initial.into_values();
    let mut next = vec![0.0; current.len()];
    let mut steps = Vec::new();
    let mut contraction: f64 = 0.0;
    let mut converged = false;
    for iteration in 1..=options.max_iter {
        applier.apply(&current, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergent { iteration });
        }
        let step = sup_ratio(&next, &current, &weights);
        if let Some(&prev) = steps.last() {
            // ratios of steps near rounding level carry no information
            let scale = sup_ratio(&next, &vec![0.0; next.len()], &weights);
            if prev > 1e3 * f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
                contraction = contraction.max(step / prev);
            }
        }
        steps.push(step);
        std::mem::swap(&mut current, &mut next);
        if step <= options.tol {
            converged = true;
            break;
        }
    }
    Ok(SolveReport {
        solution: Path::new(problem.grid.clone(), current)?,
        iterations: steps.len(),
        contraction_observed: contraction,
        converged,
        final_residual_sup: steps.last().copied().unwrap_or(0.0),
        steps,
        t0_jump: problem.t0_jump(mode),
    })
}

/// `D^{alpha,beta;psi} y - F(t, y(t), y(t-a))` on `[t0, T]`; history nodes
/// carry 0.
pub fn residual(y: &Path, problem: &DelayProblem) -> Result<Path> {
    let op = HilferOperator::new(problem.grid.clone(), problem.order, problem.psi)?;
    let mut r = op.apply(y)?;
    let grid = &problem.grid;
    let start = grid.t0_index();
    for i in start..grid.len() {
        let f = problem.rhs(grid.node(i), y.get(i), y.get(grid.delayed_index(i)));
        r.values_mut()[i] -= f;
    }
    Ok(r)
}

/// Smooth random profile on `[t0, T]` with sup over the forward nodes equal
/// to 1.
#[derive(Debug, Clone)]
pub struct Perturbation {
    t0: f64,
    span: f64,
    modes: Vec<(f64, f64, f64)>,
    norm: f64,
}

impl Perturbation {
    pub const MAX_MODES: usize = 5;

    pub fn from_seed(seed: u64, grid: &TimeGrid) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.gen_range(1..=Self::MAX_MODES);
        let modes = (0..count)
            .map(|_| {
                let amp = rng.gen_range(-1.0..1.0);
                let freq = rng.gen_range(0.0..3.0 * std::f64::consts::PI);
                let phase = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
                (amp, freq, phase)
            })
            .collect();
        let mut p = Self {
            t0: grid.t0(),
            span: grid.t_end() - grid.t0(),
            modes,
            norm: 1.0,
        };
        let sup = (grid.t0_index()..grid.len())
            .map(|i| p.raw(grid.node(i)).abs())
            .fold(0.0, f64::max);
        p.norm = if sup > 0.0 { sup } else { 1.0 };
        p
    }

    fn raw(&self, t: f64) -> f64 {
        let tau = (t - self.t0) / self.span;
        self.modes
            .iter()
            .map(|(a, w, ph)| a * (w * tau + ph).sin())
            .sum()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.raw(t) / self.norm
    }
}

/// Solves the problem with right-hand side `F + epsilon * bound * s`, where
/// `s` is a seeded smooth profile with sup 1. The result matches the history
/// exactly and its residual against `F` is bounded by `epsilon * bound` up to
/// discretization error.
pub fn make_quasi_solution(
    problem: &DelayProblem,
    bound: &WeightFn,
    epsilon: f64,
    seed: u64,
    mode: InitialTermMode,
    options: &SolveOptions,
) -> Result<Path> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    bound.sample(&problem.grid)?;
    let perturbed = perturbed_problem(problem, bound, epsilon, seed);
    let report = solve_fixed_point(&perturbed, mode, options)?;
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            last_step: report.final_residual_sup,
        });
    }
    Ok(report.solution)
}

pub(crate) fn perturbed_problem(
    problem: &DelayProblem,
    bound: &WeightFn,
    epsilon: f64,
    seed: u64,
) -> DelayProblem {
    let s = Perturbation::from_seed(seed, &problem.grid);
    let rhs = problem.rhs_fn();
    let bound = bound.clone();
    problem.with_rhs(move |t, y, yd| rhs(t, y, yd) + epsilon * bound.eval(t) * s.eval(t))
}
