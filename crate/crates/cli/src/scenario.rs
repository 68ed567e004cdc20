//! Scenario documents.
//!
//! A document is TOML holding either a single scenario at the top level or a
//! list of `[[scenario]]` tables:
//!
//! ```toml
//! name = "classical"
//! psi = "identity"
//! alpha = 1.0
//! beta = 0.0
//! t0 = 0.0
//! T = 1.0
//! delay_a = 1.0
//! rhs = "0.25*y + 0.25*yd"
//! L1 = 0.25
//! L2 = 0.25
//! history = "1"
//! phi = "1"
//! epsilon = 0.1
//! ```

use std::sync::Arc;

use hilfer_core::{DelayProblem, FracOrder, InitialTermMode, PsiMap, TimeGrid, UhMode, WeightFn};
use serde::{Deserialize, Serialize};

use crate::expr::{Dialect, Expr};
use crate::CliError;

pub const DEFAULT_STEPS_PER_DELAY: usize = 64;
pub const DEFAULT_EXPERIMENTS: usize = 100;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    psi: String,
    alpha: f64,
    beta: f64,
    t0: f64,
    #[serde(rename = "T")]
    t_end: f64,
    delay_a: f64,
    #[serde(default = "default_steps")]
    steps_per_delay: usize,
    rhs: String,
    #[serde(rename = "L1")]
    l1: f64,
    #[serde(rename = "L2")]
    l2: f64,
    history: String,
    phi: String,
    epsilon: f64,
    #[serde(default = "default_experiments")]
    experiments: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    initial_term_mode: Option<String>,
    #[serde(default)]
    uh_mode: Option<String>,
}

fn default_steps() -> usize {
    DEFAULT_STEPS_PER_DELAY
}

fn default_experiments() -> usize {
    DEFAULT_EXPERIMENTS
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub psi: PsiMap,
    pub order: FracOrder,
    pub t0: f64,
    pub t_end: f64,
    pub delay: f64,
    pub steps_per_delay: usize,
    pub rhs: Arc<Expr>,
    pub l1: f64,
    pub l2: f64,
    pub history: Arc<Expr>,
    pub phi: Arc<Expr>,
    pub epsilon: f64,
    pub experiments: usize,
    pub seed: u64,
    pub mode: InitialTermMode,
    pub uh_mode: UhMode,
}

/// Echo of the scenario inputs written alongside every report.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub psi: String,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t0: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub delay_a: f64,
    pub steps_per_delay: usize,
    pub rhs: String,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    pub history: String,
    pub phi: String,
    pub epsilon: f64,
    pub experiments: usize,
    pub seed: u64,
    pub initial_term_mode: String,
    pub uh_mode: String,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{field}: {msg}"))
}

fn expr(field: &str, src: &str, dialect: Dialect) -> Result<Arc<Expr>, CliError> {
    Expr::parse(src, dialect)
        .map(Arc::new)
        .map_err(|e| invalid(field, e))
}

impl Scenario {
    fn from_raw(raw: RawScenario) -> Result<Self, CliError> {
        if raw.name.is_empty()
            || !raw
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            || raw.name.starts_with('.')
        {
            return Err(invalid(
                "name",
                "must be non-empty and use only [A-Za-z0-9._-]",
            ));
        }
        let psi: PsiMap = raw.psi.parse().map_err(|e| invalid("psi", e))?;
        let order = FracOrder::new(raw.alpha, raw.beta).map_err(|e| match e {
            hilfer_core::Error::InvalidAlpha(_) => invalid("alpha", "alpha must lie in (0,1]"),
            hilfer_core::Error::InvalidBeta(_) => invalid("beta", "beta must lie in [0,1]"),
            other => invalid("alpha/beta", other),
        })?;
        for (field, v) in [("t0", raw.t0), ("T", raw.t_end), ("delay_a", raw.delay_a)] {
            if !v.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        if !(raw.t_end > raw.t0) {
            return Err(invalid("T", "T must exceed t0"));
        }
        if !(raw.delay_a > 0.0) {
            return Err(invalid("delay_a", "delay_a must be positive"));
        }
        if raw.steps_per_delay < 2 {
            return Err(invalid(
                "steps_per_delay",
                "steps_per_delay must be at least 2",
            ));
        }
        for (field, v) in [("L1", raw.l1), ("L2", raw.l2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, format!("{field} must be nonnegative")));
            }
        }
        if !(raw.epsilon >= 0.0 && raw.epsilon.is_finite()) {
            return Err(invalid("epsilon", "epsilon must be nonnegative"));
        }
        if raw.experiments == 0 {
            return Err(invalid("experiments", "experiments must be at least 1"));
        }
        let mode = match &raw.initial_term_mode {
            Some(s) => s.parse().map_err(|e| invalid("initial_term_mode", e))?,
            None => InitialTermMode::default(),
        };
        let uh_mode = match &raw.uh_mode {
            Some(s) => s.parse().map_err(|e| invalid("uh_mode", e))?,
            None => UhMode::default(),
        };
        let scenario = Self {
            name: raw.name,
            psi,
            order,
            t0: raw.t0,
            t_end: raw.t_end,
            delay: raw.delay_a,
            steps_per_delay: raw.steps_per_delay,
            rhs: expr("rhs", &raw.rhs, Dialect::Rhs)?,
            l1: raw.l1,
            l2: raw.l2,
            history: expr("history", &raw.history, Dialect::Time)?,
            phi: expr("phi", &raw.phi, Dialect::Time)?,
            epsilon: raw.epsilon,
            experiments: raw.experiments,
            seed: raw.seed,
            mode,
            uh_mode,
        };
        let grid = scenario.grid()?;
        grid.check_psi(&scenario.psi)
            .map_err(|e| invalid("psi", e))?;
        scenario.phi_weight().sample(&grid).map_err(|e| match e {
            hilfer_core::Error::NonPositiveWeight { t, value } => {
                invalid("phi", format!("phi must be positive (phi({t}) = {value})"))
            }
            other => invalid("phi", other),
        })?;
        for t in grid.nodes().take(grid.t0_index() + 1) {
            if !scenario.history.eval_t(t).is_finite() {
                return Err(invalid(
                    "history",
                    format!("history is not finite at t = {t}"),
                ));
            }
        }
        Ok(scenario)
    }

    pub fn grid(&self) -> Result<Arc<TimeGrid>, CliError> {
        self.grid_with(self.steps_per_delay)
    }

    pub fn grid_with(&self, steps_per_delay: usize) -> Result<Arc<TimeGrid>, CliError> {
        TimeGrid::new(self.t0, self.t_end, self.delay, steps_per_delay)
            .map(Arc::new)
            .map_err(|e| invalid("grid", e))
    }

    pub fn phi_weight(&self) -> WeightFn {
        let phi = self.phi.clone();
        WeightFn::new(move |t| phi.eval_t(t))
    }

    /// The delay problem on the scenario grid; Lipschitz probe warnings are
    /// available from [`DelayProblem::warnings`].
    pub fn problem(&self) -> Result<DelayProblem, CliError> {
        self.problem_on(self.grid()?)
    }

    pub fn problem_on(&self, grid: Arc<TimeGrid>) -> Result<DelayProblem, CliError> {
        let rhs = self.rhs.clone();
        let history = self.history.clone();
        DelayProblem::new(
            move |t, y, yd| rhs.eval(t, y, yd),
            self.l1,
            self.l2,
            move |t| history.eval_t(t),
            self.order,
            self.psi,
            grid,
        )
        .map_err(CliError::from)
    }

    pub fn summary(&self) -> ScenarioSummary {
        ScenarioSummary {
            name: self.name.clone(),
            psi: self.psi.name(),
            alpha: self.order.alpha(),
            beta: self.order.beta(),
            gamma: self.order.gamma(),
            t0: self.t0,
            t_end: self.t_end,
            delay_a: self.delay,
            steps_per_delay: self.steps_per_delay,
            rhs: self.rhs.to_string(),
            l1: self.l1,
            l2: self.l2,
            history: self.history.to_string(),
            phi: self.phi.to_string(),
            epsilon: self.epsilon,
            experiments: self.experiments,
            seed: self.seed,
            initial_term_mode: self.mode.as_str().to_string(),
            uh_mode: self.uh_mode.as_str().to_string(),
        }
    }
}

/// Parses a document holding one scenario or a `[[scenario]]` list.
pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>, CliError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Input(e.message().to_string()))?;
    let raws: Vec<RawScenario> = match table.get("scenario") {
        Some(toml::Value::Array(items)) if table.len() == 1 => {
            if items.is_empty() {
                return Err(CliError::Input("empty scenario list".into()));
            }
            items
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.clone().try_into().map_err(|e: toml::de::Error| {
                        CliError::Input(format!("scenario {}: {}", i + 1, e.message()))
                    })
                })
                .collect::<Result<_, _>>()?
        }
        _ => vec![toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Input(e.message().to_string()))?],
    };
    let many = raws.len() > 1;
    let scenarios: Vec<Scenario> = raws
        .into_iter()
        .map(|raw| {
            let name = raw.name.clone();
            Scenario::from_raw(raw).map_err(|e| match e {
                CliError::Input(msg) if many => {
                    CliError::Input(format!("scenario `{name}`: {msg}"))
                }
                other => other,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Input(format!(
            "duplicate scenario name `{}`",
            w[0]
        )));
    }
    Ok(scenarios)
}

/// Parses a document that must hold exactly one scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let mut list = parse_scenarios(text)?;
    if list.len() != 1 {
        return Err(CliError::Input(format!(
            "expected one scenario, found {}",
            list.len()
        )));
    }
    Ok(list.remove(0))
}
