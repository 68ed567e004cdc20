//! Scale functions for fractional calculus with respect to another function.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A strictly increasing scale function together with its derivative.
///
/// The identity map gives the Riemann-Liouville/Caputo family, the logarithm
/// gives the Hadamard family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PsiMap {
    /// psi(t) = t
    Identity,
    /// psi(t) = ln t, t > 0
    Log,
    /// psi(t) = t^sigma, sigma > 0, t > 0 (t >= 0 when sigma >= 1)
    Power(f64),
    /// psi(t) = e^t
    Exp,
}

impl PsiMap {
    pub fn power(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!(
                "power scale exponent must be positive, got {sigma}"
            )));
        }
        Ok(PsiMap::Power(sigma))
    }

    pub fn name(&self) -> String {
        match self {
            PsiMap::Identity => "identity".into(),
            PsiMap::Log => "log".into(),
            PsiMap::Power(s) => format!("power({s})"),
            PsiMap::Exp => "exp".into(),
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            PsiMap::Identity => t,
            PsiMap::Log => t.ln(),
            PsiMap::Power(s) => t.powf(s),
            PsiMap::Exp => t.exp(),
        }
    }

    #[inline]
    pub fn deriv(&self, t: f64) -> f64 {
        match *self {
            PsiMap::Identity => 1.0,
            PsiMap::Log => 1.0 / t,
            PsiMap::Power(s) => s * t.powf(s - 1.0),
            PsiMap::Exp => t.exp(),
        }
    }

    /// Lower end of the valid domain and whether it is itself admissible.
    pub fn domain_min(&self) -> (f64, bool) {
        match *self {
            PsiMap::Identity | PsiMap::Exp => (f64::NEG_INFINITY, false),
            PsiMap::Log => (0.0, false),
            PsiMap::Power(s) => (0.0, s >= 1.0),
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, closed) = self.domain_min();
        t.is_finite() && (t > lo || (closed && t == lo))
    }

    /// psi(t) - psi(s) for s <= t, computed without cancellation where a
    /// closed form is available.
    #[inline]
    pub fn diff(&self, t: f64, s: f64) -> f64 {
        match *self {
            PsiMap::Identity => t - s,
            PsiMap::Log => {
                if s > 0.0 {
                    ((t - s) / s).ln_1p()
                } else {
                    t.ln() - s.ln()
                }
            }
            PsiMap::Exp => s.exp() * (t - s).exp_m1(),
            PsiMap::Power(sigma) => {
                if s > 0.0 {
                    s.powf(sigma) * (sigma * ((t - s) / s).ln_1p()).exp_m1()
                } else {
                    t.powf(sigma) - s.powf(sigma)
                }
            }
        }
    }
}

impl fmt::Display for PsiMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for PsiMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim();
        match key {
            "identity" => Ok(PsiMap::Identity),
            "log" => Ok(PsiMap::Log),
            "exp" => Ok(PsiMap::Exp),
            _ => {
                let inner = key
                    .strip_prefix("power(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| Error::Domain(format!("unknown psi catalog key '{key}'")))?;
                let sigma: f64 = inner
                    .trim()
                    .parse()
                    .map_err(|_| Error::Domain(format!("bad power exponent in '{key}'")))?;
                PsiMap::power(sigma)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> Vec<(PsiMap, f64, f64)> {
        vec![
            (PsiMap::Identity, -1.0, 3.0),
            (PsiMap::Log, 0.1, 8.0),
            (PsiMap::Power(0.5), 0.05, 4.0),
            (PsiMap::Power(2.0), 0.0, 3.0),
            (PsiMap::Exp, -2.0, 2.0),
        ]
    }

    #[test]
    fn strictly_increasing_with_positive_derivative() {
        for (psi, lo, hi) in catalog() {
            let n = 400;
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=n {
                let t = lo + (hi - lo) * i as f64 / n as f64;
                let v = psi.eval(t);
                assert!(v > prev, "{psi} not increasing at {t}");
                prev = v;
                if t > 0.0 || matches!(psi, PsiMap::Identity | PsiMap::Exp) {
                    assert!(psi.deriv(t) > 0.0);
                }
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        for (psi, lo, hi) in catalog() {
            for i in 1..50 {
                let t = lo + (hi - lo) * i as f64 / 50.0;
                let h = 1e-5 * t.abs().max(1e-2);
                let fd = (psi.eval(t + h) - psi.eval(t - h)) / (2.0 * h);
                let d = psi.deriv(t);
                assert!(((fd - d) / d).abs() <= 1e-6, "{psi} at {t}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn diff_is_accurate() {
        for (psi, lo, hi) in catalog() {
            let s = lo + 0.3 * (hi - lo);
            let t = s + 1e-3;
            let direct = psi.eval(t) - psi.eval(s);
            assert!(((psi.diff(t, s) - direct) / direct).abs() < 1e-9);
        }
    }

    #[test]
    fn parse_catalog_keys() {
        assert_eq!("identity".parse::<PsiMap>().unwrap(), PsiMap::Identity);
        assert_eq!("log".parse::<PsiMap>().unwrap(), PsiMap::Log);
        assert_eq!("power(0.5)".parse::<PsiMap>().unwrap(), PsiMap::Power(0.5));
        assert_eq!("exp".parse::<PsiMap>().unwrap(), PsiMap::Exp);
        assert!("power(-1)".parse::<PsiMap>().is_err());
        assert!("cosh".parse::<PsiMap>().is_err());
    }
}
