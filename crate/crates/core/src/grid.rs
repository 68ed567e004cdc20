//! Delay-aligned time grids, sampled paths, weights and grid metrics.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::psi::PsiMap;

/// Uniform grid on `[t0 - a, T]` whose spacing divides the delay `a`.
///
/// Node `i` sits at `t0 + (i - m) h` with `m = steps_per_delay`, so node
/// `m` is `t0` and the delayed argument of node `i` is node `i - m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    delay: f64,
    steps_per_delay: usize,
    h: f64,
    steps: usize,
}

impl TimeGrid {
    /// `t_end` is rounded up to a whole number of steps past `t0`.
    pub fn new(t0: f64, t_end: f64, delay: f64, steps_per_delay: usize) -> Result<Self> {
        if !(t0.is_finite() && t_end.is_finite()) || t_end <= t0 {
            return Err(Error::InvalidGrid(format!(
                "need T > t0, got t0 = {t0}, T = {t_end}"
            )));
        }
        if !(delay > 0.0 && delay.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "delay must be positive, got {delay}"
            )));
        }
        if steps_per_delay == 0 {
            return Err(Error::InvalidGrid(
                "steps_per_delay must be at least 1".into(),
            ));
        }
        let h = delay / steps_per_delay as f64;
        let exact = (t_end - t0) / h;
        let steps = (exact - 1e-9 * exact.max(1.0)).ceil().max(1.0) as usize;
        Ok(Self {
            t0,
            t_end: t0 + steps as f64 * h,
            delay,
            steps_per_delay,
            h,
            steps,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Right end after rounding to the grid.
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn steps_per_delay(&self) -> usize {
        self.steps_per_delay
    }

    /// Number of steps on `[t0, T]`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Index of `t0`.
    pub fn t0_index(&self) -> usize {
        self.steps_per_delay
    }

    pub fn len(&self) -> usize {
        self.steps_per_delay + self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i == self.steps_per_delay {
            self.t0
        } else {
            self.t0 + (i as f64 - self.steps_per_delay as f64) * self.h
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Index of the delayed node `t_i - a`, valid for `i >= m`.
    #[inline]
    pub fn delayed_index(&self, i: usize) -> usize {
        i - self.steps_per_delay
    }

    /// Checks that `psi` is defined and increasing on `[t0, T]`.
    pub fn check_psi(&self, psi: &PsiMap) -> Result<()> {
        let start = self.t0_index();
        let mut prev = f64::NEG_INFINITY;
        for i in start..self.len() {
            let t = self.node(i);
            if !psi.contains(t) {
                return Err(Error::Domain(format!(
                    "psi = {psi} is undefined at t = {t}"
                )));
            }
            let v = psi.eval(t);
            if !(v > prev) || psi.deriv(t).is_nan() || psi.deriv(t) <= 0.0 {
                return Err(Error::Domain(format!(
                    "psi = {psi} is not increasing at t = {t}"
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

/// A function sampled at every node of a [`TimeGrid`].
#[derive(Clone, PartialEq)]
pub struct Path {
    grid: Arc<TimeGrid>,
    values: Vec<f64>,
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Path")
            .field("nodes", &self.values.len())
            .field("t0", &self.grid.t0)
            .field("t_end", &self.grid.t_end)
            .finish()
    }
}

impl Path {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<TimeGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Arc<TimeGrid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<TimeGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Values on `[t0, T]`, starting at `t0`.
    pub fn forward(&self) -> &[f64] {
        &self.values[self.grid.t0_index()..]
    }

    pub fn same_grid(&self, other: &Path) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite {
                index,
                t: self.grid.node(index),
            }),
            None => Ok(()),
        }
    }

    /// Pointwise map, keeping the grid.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Path {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.grid.node(i), v))
            .collect();
        Path {
            grid: self.grid.clone(),
            values,
        }
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Path, b: f64) -> Result<Path> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Path {
            grid: self.grid.clone(),
            values,
        })
    }

    /// Weighted sup-norm `max_{t in (t0, T]} |(psi(t) - psi(t0))^weight f(t)|`.
    ///
    /// With `weight = 1 - gamma` this is the norm of `C_{1-gamma; psi}`. It is
    /// a diagnostic only; membership is never enforced on a grid.
    pub fn weighted_norm(&self, psi: &PsiMap, weight: f64) -> f64 {
        let start = self.grid.t0_index();
        let t0 = self.grid.t0;
        (start + 1..self.len())
            .map(|i| {
                let u = psi.diff(self.grid.node(i), t0);
                (u.powf(weight) * self.values[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Positive continuous weight `phi(t)`.
#[derive(Clone)]
pub struct WeightFn {
    f: Arc<ScalarFn>,
}

impl fmt::Debug for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("WeightFn")
    }
}

impl WeightFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    /// Samples the weight on `grid`, rejecting non-positive or non-finite
    /// values.
    pub fn sample(&self, grid: &Arc<TimeGrid>) -> Result<Path> {
        let path = Path::from_fn(grid.clone(), |t| self.eval(t));
        for (i, &v) in path.values().iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveWeight {
                    t: grid.node(i),
                    value: v,
                });
            }
        }
        Ok(path)
    }

    /// Scaled copy `c * phi`.
    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        Self::new(move |t| c * f(t))
    }
}

/// Sup over nodes of `|p - q| / w` with pre-sampled weights.
pub(crate) fn sup_ratio(p: &[f64], q: &[f64], w: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .zip(w)
        .map(|((a, b), w)| (a - b).abs() / w)
        .fold(0.0, f64::max)
}

/// Smallest `M` with `|p(t) - q(t)| <= M w(t)` at every node.
pub fn weighted_distance(p: &Path, q: &Path, w: &WeightFn) -> Result<f64> {
    if !p.same_grid(q) {
        return Err(Error::GridMismatch);
    }
    let weights = w.sample(p.grid_arc())?;
    Ok(sup_ratio(p.values(), q.values(), weights.values()))
}

/// Same as [`weighted_distance`] with weights already sampled on the grid.
pub fn weighted_distance_sampled(p: &Path, q: &Path, w: &Path) -> Result<f64> {
    if !p.same_grid(q) || !p.same_grid(w) {
        return Err(Error::GridMismatch);
    }
    Ok(sup_ratio(p.values(), q.values(), w.values()))
}

/// Sup over nodes of `|p - q|`.
pub fn uniform_distance(p: &Path, q: &Path) -> Result<f64> {
    if !p.same_grid(q) {
        return Err(Error::GridMismatch);
    }
    Ok(p.values()
        .iter()
        .zip(q.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
