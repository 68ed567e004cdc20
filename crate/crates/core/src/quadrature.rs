//! Product-trapezoidal quadrature for the psi-Riemann-Liouville integral
//!
//! ```text
//! I^{alpha; psi} f(t) = 1/Gamma(alpha) int_{t0}^{t} psi'(s) (psi(t) - psi(s))^{alpha-1} f(s) ds
//! ```
//!
//! After the substitution `u = psi(s) - psi(t0)` the integrand is
//! `(U - u)^{alpha-1} f`, with `f` interpolated linearly in `u` between grid
//! nodes. The kernel moments on each subinterval are integrated exactly, so
//! the singularity at `u = U` is never sampled.
//!
//! [`ProductRule::weighted`] handles integrands of the form `u^lead g(u)` with
//! `g` piecewise linear, which is how singular profiles such as
//! `(psi(t) - psi(t0))^{gamma-1}` enter the psi-Hilfer derivative.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::gamma::{beta, gamma};
use crate::grid::{Path, TimeGrid};
use crate::psi::PsiMap;

/// Lower-triangular table of quadrature weights on the forward segment
/// `[t0, T]` of a grid. Row `j` holds the weights of nodes `0..=j` for the
/// integral evaluated at node `j` (indices relative to `t0`). The factor
/// `1/Gamma(alpha)` is folded in.
#[derive(Debug, Clone)]
pub struct ProductRule {
    alpha: f64,
    lead: f64,
    steps: usize,
    weights: Vec<f64>,
}

#[inline]
fn row_offset(j: usize) -> usize {
    j * (j + 1) / 2
}

/// `base^exponent`, switching to log space for bases that would underflow.
#[inline]
fn pow_small(base: f64, exponent: f64) -> f64 {
    if base < 1e-300 && base > 0.0 {
        (exponent * base.ln()).exp()
    } else {
        base.powf(exponent)
    }
}

/// Offsets `u_k = psi(t_k) - psi(t0)` of the forward nodes.
pub(crate) fn psi_offsets(grid: &TimeGrid, psi: &PsiMap) -> Vec<f64> {
    let start = grid.t0_index();
    let t0 = grid.t0();
    (start..grid.len())
        .map(|i| psi.diff(grid.node(i), t0))
        .collect()
}

impl ProductRule {
    /// Weights for a linear interpolant of `f` in `u`.
    pub fn new(grid: &TimeGrid, psi: &PsiMap, alpha: f64) -> Result<Self> {
        Self::weighted(grid, psi, alpha, 0.0)
    }

    /// Weights for `f(u) = u^lead g(u)` with `g` linear in `u` between nodes.
    /// The rule is applied to samples of `g`. `lead` must exceed -1. At `t0`
    /// the integral is taken as its limit, which is finite only when
    /// `lead + alpha >= 0`; row 0 is left at zero otherwise.
    pub fn weighted(grid: &TimeGrid, psi: &PsiMap, alpha: f64, lead: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if !(lead > -1.0 && lead.is_finite()) {
            return Err(Error::Domain(format!(
                "leading exponent must exceed -1, got {lead}"
            )));
        }
        grid.check_psi(psi)?;
        let u = psi_offsets(grid, psi);
        let steps = u.len() - 1;
        let mut weights = vec![0.0; row_offset(steps + 1)];
        let scale = 1.0 / gamma(alpha);
        for j in 1..=steps {
            let row = &mut weights[row_offset(j)..row_offset(j + 1)];
            for k in 0..j {
                let (wp, wn) = if lead == 0.0 {
                    linear_moments(&u, j, k, alpha)
                } else {
                    weighted_moments(&u, j, k, alpha, lead)
                };
                row[k] += wp * scale;
                row[k + 1] += wn * scale;
            }
        }
        if (lead + alpha).abs() < 1e-12 {
            // I^alpha u^{-alpha} is the constant Gamma(1 - alpha), including
            // its limit at t0
            weights[0] = gamma(lead + 1.0);
        }
        Ok(Self {
            alpha,
            lead,
            steps,
            weights,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lead(&self) -> f64 {
        self.lead
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Weights of the integral at forward node `j`.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.weights[row_offset(j)..row_offset(j + 1)]
    }

    /// Integral at forward node `j` of the samples `g[0..=j]`.
    #[inline]
    pub fn integrate_at(&self, j: usize, g: &[f64]) -> f64 {
        self.row(j).iter().zip(g).map(|(w, v)| w * v).sum()
    }

    /// Integral at every forward node of the forward samples `g`.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        debug_assert_eq!(g.len(), self.steps + 1);
        (0..=self.steps).map(|j| self.integrate_at(j, g)).collect()
    }

    /// Integral at every forward node, written into `out`.
    pub fn apply_into(&self, g: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate().take(self.steps + 1) {
            *o = self.integrate_at(j, g);
        }
    }
}

/// Exact kernel moments for a linear interpolant on interval `k` with target
/// node `j`. Returns the weights of `f_k` and `f_{k+1}` without the gamma
/// factor.
fn linear_moments(u: &[f64], j: usize, k: usize, alpha: f64) -> (f64, f64) {
    let a = u[j] - u[k];
    let b = u[j] - u[k + 1];
    let delta = u[k + 1] - u[k];
    if alpha == 1.0 {
        return (0.5 * delta, 0.5 * delta);
    }
    // m0 = int_b^a v^{alpha-1} dv, m1 = int_b^a v^{alpha-1} (v - b) dv
    let (m0, m1) = if b <= 0.0 {
        let p = pow_small(a, alpha);
        (p / alpha, p * a / (alpha + 1.0))
    } else {
        let r = delta / b;
        let m0 = pow_small(b, alpha) * (alpha * r.ln_1p()).exp_m1() / alpha;
        let m1 = if r < 0.5 {
            // delta^2 b^{alpha-1} sum_m C(alpha-1, m) r^m / (m + 2)
            let mut c = 1.0;
            let mut sum = 0.5;
            let mut m = 0.0;
            loop {
                c *= (alpha - 1.0 - m) / (m + 1.0) * r;
                m += 1.0;
                let term = c / (m + 2.0);
                sum += term;
                if term.abs() <= 1e-17 * sum.abs() {
                    break;
                }
            }
            delta * delta * pow_small(b, alpha - 1.0) * sum
        } else {
            (pow_small(a, alpha + 1.0) - pow_small(b, alpha + 1.0)) / (alpha + 1.0) - b * m0
        };
        (m0, m1)
    };
    let w_prev = m1 / delta;
    (w_prev, m0 - w_prev)
}

/// Moments of `(U - u)^{alpha-1} u^lead` against the two linear hat pieces
/// on interval `k` with target node `j`.
fn weighted_moments(u: &[f64], j: usize, k: usize, alpha: f64, lead: f64) -> (f64, f64) {
    let lo = u[k];
    let hi = u[k + 1];
    let delta = hi - lo;
    let big_u = u[j];
    if k == 0 && j == 1 {
        // both endpoint singularities on one interval: complete beta integrals
        let p = pow_small(delta, alpha + lead);
        return (
            p * beta(alpha + 1.0, lead + 1.0),
            p * beta(alpha, lead + 2.0),
        );
    }
    if k == 0 {
        // u^lead singular at 0; expand (U - delta s)^{alpha-1} in r = delta/U
        let r = delta / big_u;
        let mut c = 1.0;
        let mut m = 0.0;
        let (mut sp, mut sn) = (0.0, 0.0);
        for _ in 0..5000 {
            let tn = c / (m + lead + 2.0);
            let tp = c / (m + lead + 1.0) - tn;
            sp += tp;
            sn += tn;
            if tn.abs() <= 1e-17 * sn.abs() && tp.abs() <= 1e-17 * sp.abs() {
                break;
            }
            c *= (1.0 - alpha + m) / (m + 1.0) * r;
            m += 1.0;
        }
        let scale = pow_small(delta, lead + 1.0) * pow_small(big_u, alpha - 1.0);
        return (scale * sp, scale * sn);
    }
    if k + 1 == j {
        // kernel singular at u = U; expand (U - v)^lead in rho = v/U
        let rho = delta / big_u;
        let mut c = 1.0;
        let mut m = 0.0;
        let mut p = 1.0;
        let (mut sp, mut sn) = (0.0, 0.0);
        for _ in 0..5000 {
            let tp = c * p / (alpha + m + 1.0);
            let tn = c * p * (1.0 / (alpha + m) - 1.0 / (alpha + m + 1.0));
            sp += tp;
            sn += tn;
            if tp.abs() <= 1e-17 * sp.abs() && tn.abs() <= 1e-17 * sn.abs() {
                break;
            }
            c *= (m - lead) / (m + 1.0);
            p *= rho;
            m += 1.0;
            if c == 0.0 {
                break;
            }
        }
        let scale = pow_small(big_u, lead) * pow_small(delta, alpha);
        return (scale * sp, scale * sn);
    }
    // smooth on the interval: Gauss-Legendre sized by distance to the
    // nearest singularity
    let dist = lo.min(big_u - hi) / delta;
    let rule = if dist >= 20.0 {
        gauss_legendre(4)
    } else if dist >= 4.0 {
        gauss_legendre(8)
    } else {
        gauss_legendre(16)
    };
    let half = 0.5 * delta;
    let mid = lo + half;
    let (mut sp, mut sn) = (0.0, 0.0);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let uu = mid + half * x;
        let f = pow_small(big_u - uu, alpha - 1.0) * pow_small(uu, lead) * w;
        sp += f * (1.0 - x) * 0.5;
        sn += f * (1.0 + x) * 0.5;
    }
    (sp * half, sn * half)
}

pub(crate) struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre rule on [-1, 1], cached per order.
pub(crate) fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static CACHE: [OnceLock<GaussLegendre>; 3] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = match n {
        4 => 0,
        8 => 1,
        16 => 2,
        _ => panic!("unsupported Gauss-Legendre order {n}"),
    };
    CACHE[slot].get_or_init(|| compute_gauss_legendre(n))
}

fn compute_gauss_legendre(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussLegendre { nodes, weights }
}

/// The psi-Riemann-Liouville integral of order `alpha` as a reusable
/// operator on one grid.
#[derive(Debug, Clone)]
pub struct RlOperator {
    grid: Arc<TimeGrid>,
    psi: PsiMap,
    rule: Arc<ProductRule>,
}

impl RlOperator {
    pub fn new(grid: Arc<TimeGrid>, psi: PsiMap, alpha: f64) -> Result<Self> {
        let rule = Arc::new(ProductRule::new(&grid, &psi, alpha)?);
        Ok(Self { grid, psi, rule })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn psi(&self) -> &PsiMap {
        &self.psi
    }

    pub fn alpha(&self) -> f64 {
        self.rule.alpha()
    }

    pub fn rule(&self) -> &ProductRule {
        &self.rule
    }

    /// Integral of `f` at every forward node. History nodes carry 0.
    pub fn apply(&self, f: &Path) -> Result<Path> {
        if **f.grid_arc() != *self.grid {
            return Err(Error::GridMismatch);
        }
        check_forward_finite(f)?;
        let start = self.grid.t0_index();
        let mut values = vec![0.0; self.grid.len()];
        self.rule.apply_into(f.forward(), &mut values[start..]);
        Path::new(self.grid.clone(), values)
    }
}

fn check_forward_finite(f: &Path) -> Result<()> {
    let start = f.grid().t0_index();
    match f.forward().iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite {
            index: start + k,
            t: f.grid().node(start + k),
        }),
        None => Ok(()),
    }
}

/// `I^{alpha; psi}_{t0+} f` at every node `t >= t0`; history nodes carry 0.
pub fn rl_integral(f: &Path, alpha: f64, psi: &PsiMap) -> Result<Path> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    RlOperator::new(f.grid_arc().clone(), *psi, alpha)?.apply(f)
}

/// Integral of order `exponent >= 0` where order 0 is the identity map.
pub(crate) fn rl_integral_or_identity(f: &[f64], rule: Option<&ProductRule>) -> Vec<f64> {
    match rule {
        Some(rule) => rule.apply(f),
        None => f.to_vec(),
    }
}

/// Closed form of `I^{alpha; psi}_{t0+} (psi(s) - psi(t0))^{delta-1}` at `t`:
/// `Gamma(delta) / Gamma(delta + alpha) (psi(t) - psi(t0))^{delta + alpha - 1}`.
pub fn power_rule_oracle(delta: f64, alpha: f64, psi: &PsiMap, t0: f64, t: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if t < t0 {
        return Err(Error::Domain(format!(
            "need t >= t0, got t = {t} < t0 = {t0}"
        )));
    }
    if !psi.contains(t0) || !psi.contains(t) {
        return Err(Error::Domain(format!(
            "psi = {psi} undefined on [{t0}, {t}]"
        )));
    }
    let u = psi.diff(t, t0);
    Ok(gamma(delta) / gamma(delta + alpha) * u.powf(delta + alpha - 1.0))
}
