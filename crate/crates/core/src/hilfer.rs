//! The psi-Hilfer derivative of order (alpha, beta), 0 < alpha <= 1:
//!
//! ```text
//! D^{alpha,beta;psi} f = I^{beta(1-alpha);psi} (1/psi' d/dt) I^{(1-beta)(1-alpha);psi} f
//! ```
//!
//! Both integrals use the product rule of [`crate::quadrature`]; the middle
//! stage is a second-order finite difference on the uniform grid. A zero
//! exponent integral is the identity.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{uniform_distance, Path, TimeGrid};
use crate::order::FracOrder;
use crate::psi::PsiMap;
use crate::quadrature::{rl_integral, rl_integral_or_identity, ProductRule};

/// A profile `(psi(t) - psi(t0))^lead * regular(t)` on `[t0, T]`.
///
/// Lets singular members of the weighted space, such as
/// `(psi(t) - psi(t0))^{gamma-1}`, be passed through the derivative without
/// sampling the singularity.
#[derive(Debug, Clone)]
pub struct WeightedPath {
    pub lead: f64,
    pub regular: Path,
}

impl WeightedPath {
    pub fn new(lead: f64, regular: Path) -> Self {
        Self { lead, regular }
    }

    /// Value at node `i`, infinite at `t0` when `lead < 0`.
    pub fn value(&self, psi: &PsiMap, i: usize) -> f64 {
        let grid = self.regular.grid();
        let u = psi.diff(grid.node(i), grid.t0());
        u.powf(self.lead) * self.regular.get(i)
    }
}

/// Reusable psi-Hilfer derivative on one grid.
#[derive(Debug, Clone)]
pub struct HilferOperator {
    grid: Arc<TimeGrid>,
    order: FracOrder,
    psi: PsiMap,
    lead: f64,
    inner: Option<ProductRule>,
    outer: Option<ProductRule>,
    /// `u^lead` on the forward nodes when the inner integral is the identity.
    lead_factors: Option<Vec<f64>>,
}

impl HilferOperator {
    pub fn new(grid: Arc<TimeGrid>, order: FracOrder, psi: PsiMap) -> Result<Self> {
        Self::with_lead(grid, order, psi, 0.0)
    }

    /// Operator acting on profiles `u^lead g`; the rule is applied to `g`.
    pub fn with_lead(
        grid: Arc<TimeGrid>,
        order: FracOrder,
        psi: PsiMap,
        lead: f64,
    ) -> Result<Self> {
        if grid.steps() < 2 {
            return Err(Error::StencilTooShort(grid.steps() + 1));
        }
        grid.check_psi(&psi)?;
        let inner_exp = order.inner_exponent();
        let outer_exp = order.outer_exponent();
        if lead + inner_exp < -1e-12 {
            return Err(Error::Domain(format!(
                "profile exponent {lead} is more singular than the inner integral can absorb"
            )));
        }
        let inner = if inner_exp > 0.0 {
            Some(ProductRule::weighted(&grid, &psi, inner_exp, lead)?)
        } else {
            None
        };
        let lead_factors = (inner.is_none() && lead != 0.0).then(|| {
            let t0 = grid.t0();
            (grid.t0_index()..grid.len())
                .map(|i| psi.diff(grid.node(i), t0).powf(lead))
                .collect()
        });
        let outer = if outer_exp > 0.0 {
            Some(ProductRule::new(&grid, &psi, outer_exp)?)
        } else {
            None
        };
        Ok(Self {
            grid,
            order,
            psi,
            lead,
            inner,
            outer,
            lead_factors,
        })
    }

    pub fn order(&self) -> FracOrder {
        self.order
    }

    /// Derivative on the forward segment, one value per node of `[t0, T]`.
    pub fn apply_forward(&self, g: &[f64]) -> Vec<f64> {
        let inner = match &self.lead_factors {
            Some(w) => g.iter().zip(w).map(|(a, b)| a * b).collect(),
            None => rl_integral_or_identity(g, self.inner.as_ref()),
        };
        let d = scaled_first_derivative(&inner, &self.grid, &self.psi);
        rl_integral_or_identity(&d, self.outer.as_ref())
    }

    /// Derivative as a path; history nodes carry 0.
    pub fn apply(&self, f: &Path) -> Result<Path> {
        if **f.grid_arc() != *self.grid {
            return Err(Error::GridMismatch);
        }
        let start = self.grid.t0_index();
        if let Some(k) = f.forward().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: start + k,
                t: self.grid.node(start + k),
            });
        }
        let d = self.apply_forward(f.forward());
        let mut values = vec![0.0; self.grid.len()];
        values[start..].copy_from_slice(&d);
        Path::new(self.grid.clone(), values)
    }

    pub fn lead(&self) -> f64 {
        self.lead
    }
}

/// `(1/psi'(t)) d/dt` by central differences, second-order one-sided at the
/// ends of the forward segment.
fn scaled_first_derivative(v: &[f64], grid: &TimeGrid, psi: &PsiMap) -> Vec<f64> {
    let n = v.len();
    let h = grid.h();
    let start = grid.t0_index();
    (0..n)
        .map(|i| {
            let dv = if i == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            };
            dv / psi.deriv(grid.node(start + i))
        })
        .collect()
}

/// psi-Hilfer derivative of `f` on `[t0, T]`; history nodes carry 0.
pub fn psi_hilfer_derivative(f: &Path, order: FracOrder, psi: &PsiMap) -> Result<Path> {
    HilferOperator::new(f.grid_arc().clone(), order, *psi)?.apply(f)
}

/// psi-Hilfer derivative of the profile `(psi - psi(t0))^lead * regular`.
pub fn psi_hilfer_derivative_weighted(
    f: &WeightedPath,
    order: FracOrder,
    psi: &PsiMap,
) -> Result<Path> {
    HilferOperator::with_lead(f.regular.grid_arc().clone(), order, *psi, f.lead)?.apply(&f.regular)
}

/// Sup-norm gap between `D^{alpha,beta} I^alpha f` and `f`, skipping `t0` and
/// the first node after it.
///
/// The intermediate integral behaves like `f(t0) u^alpha / Gamma(alpha+1)`
/// near `t0`, so it is handed to the derivative as the profile `u^alpha g`.
pub fn roundtrip_residual(f: &Path, order: FracOrder, psi: &PsiMap) -> Result<f64> {
    let alpha = order.alpha();
    let integral = rl_integral(f, alpha, psi)?;
    let grid = f.grid();
    let start = grid.t0_index();
    let t0 = grid.t0();
    let regular = integral.map(|t, v| {
        if t < t0 {
            0.0
        } else {
            v / psi.diff(t, t0).powf(alpha)
        }
    });
    let mut regular = regular;
    regular.values_mut()[start] = f.get(start) / crate::gamma::gamma(alpha + 1.0);
    let back = psi_hilfer_derivative_weighted(&WeightedPath::new(alpha, regular), order, psi)?;
    let skip = f.grid().t0_index() + 2;
    let mut a = back.clone();
    let mut b = f.clone();
    for i in 0..skip.min(f.len()) {
        a.values_mut()[i] = 0.0;
        b.values_mut()[i] = 0.0;
    }
    uniform_distance(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::power_rule_oracle;

    fn grid(t0: f64, t_end: f64, n: usize) -> Arc<TimeGrid> {
        Arc::new(TimeGrid::new(t0, t_end, t_end - t0, n).unwrap())
    }

    fn sup_after(p: &Path, skip: usize) -> f64 {
        p.forward()
            .iter()
            .skip(skip)
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn caputo_annihilates_constants() {
        for psi in [PsiMap::Identity, PsiMap::Log, PsiMap::Power(0.5)] {
            let g = grid(1.0, 2.0, 128);
            let c = Path::constant(g.clone(), 3.5);
            for alpha in [0.3, 0.7, 1.0] {
                let order = FracOrder::new(alpha, 1.0).unwrap();
                let d = psi_hilfer_derivative(&c, order, &psi).unwrap();
                assert!(sup_after(&d, 0) < 1e-10, "{psi} alpha {alpha}");
            }
        }
    }

    #[test]
    fn alpha_one_is_scaled_first_derivative() {
        let g = grid(0.0, 1.0, 200);
        let f = Path::from_fn(g.clone(), |t| t * t);
        let order = FracOrder::new(1.0, 0.4).unwrap();
        let d = psi_hilfer_derivative(&f, order, &PsiMap::Identity).unwrap();
        for (i, v) in d.values().iter().enumerate().skip(g.t0_index()) {
            assert!((v - 2.0 * g.node(i)).abs() < 1e-10);
        }
    }

    #[test]
    fn kernel_profile_is_annihilated() {
        for (alpha, beta) in [(0.5, 0.0), (0.7, 0.3), (0.4, 0.5)] {
            let order = FracOrder::new(alpha, beta).unwrap();
            let g = grid(0.0, 1.0, 256);
            let profile = WeightedPath::new(order.gamma() - 1.0, Path::constant(g.clone(), 1.0));
            let d = psi_hilfer_derivative_weighted(&profile, order, &PsiMap::Identity).unwrap();
            assert!(
                sup_after(&d, 2) < 1e-8,
                "({alpha}, {beta}): {}",
                sup_after(&d, 2)
            );
        }
    }

    #[test]
    fn derivative_of_power_matches_oracle() {
        // D^{alpha,beta} u^{delta-1} = Gamma(delta)/Gamma(delta-alpha) u^{delta-alpha-1}
        let order = FracOrder::new(0.6, 0.5).unwrap();
        let g = grid(0.0, 1.0, 512);
        let delta = 3.0;
        let f = Path::from_fn(
            g.clone(),
            |t| if t > 0.0 { t.powf(delta - 1.0) } else { 0.0 },
        );
        let d = psi_hilfer_derivative(&f, order, &PsiMap::Identity).unwrap();
        let coef = crate::gamma::gamma(delta) / crate::gamma::gamma(delta - 0.6);
        let start = g.t0_index();
        for i in start + 2..g.len() {
            let t = g.node(i);
            assert!(
                (d.get(i) - coef * t.powf(delta - 0.6 - 1.0)).abs() < 5e-3,
                "t = {t}"
            );
        }
        // cross-check the coefficient against the integral oracle
        let back = power_rule_oracle(delta - 0.6, 0.6, &PsiMap::Identity, 0.0, 1.0).unwrap();
        assert!((coef * back - 1.0).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_examples() {
        let g = grid(0.0, 1.0, 64);
        let zero = Path::zeros(g.clone());
        let order = FracOrder::new(0.5, 0.0).unwrap();
        assert_eq!(
            roundtrip_residual(&zero, order, &PsiMap::Identity).unwrap(),
            0.0
        );

        let order = FracOrder::new(0.7, 0.3).unwrap();
        let mut prev = f64::INFINITY;
        let mut errs = vec![];
        for n in [128, 256, 512] {
            let g = grid(0.0, 1.0, n);
            let f = Path::from_fn(g.clone(), f64::sin);
            let r = roundtrip_residual(&f, order, &PsiMap::Identity).unwrap();
            assert!(r < prev);
            prev = r;
            errs.push(r);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.0, "{errs:?}");
        }
    }

    #[test]
    fn short_grid_is_rejected() {
        let g = grid(0.0, 1.0, 1);
        let f = Path::constant(g, 1.0);
        let order = FracOrder::new(0.5, 0.5).unwrap();
        assert_eq!(
            psi_hilfer_derivative(&f, order, &PsiMap::Identity).unwrap_err(),
            Error::StencilTooShort(2)
        );
    }
}
