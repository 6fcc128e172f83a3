//! Reaction terms `f` with their derivatives.
//!
//! The model families couple to the geometry through `ψ(R)` and `K_ψ`; on the Euclidean
//! unit ball they reduce to the classical `e^u` and `(1+u)^m`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ModelKind, RiemannianModel};

/// Exponential arguments above this value are reported as overflow.
pub const EXP_OVERFLOW_GUARD: f64 = 700.0;

/// Scalar function of the solution value.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearityKind {
    ExpModel,
    PowerModel,
    GelfandClassic,
    PowerClassic,
    Custom,
}

impl NonlinearityKind {
    /// Exponential-type laws, whose discrete branches are guarded against `sup u > 500`.
    pub fn is_exponential(self) -> bool {
        matches!(
            self,
            NonlinearityKind::ExpModel | NonlinearityKind::GelfandClassic
        )
    }
}

#[derive(Clone)]
enum Law {
    /// `scale·e^u − shift`
    Exp {
        scale: f64,
        shift: f64,
    },
    /// `(u + offset)^m − kappa·(u + offset)`
    Power {
        m: f64,
        offset: f64,
        kappa: f64,
    },
    Custom {
        f: ScalarFn,
        f_prime: ScalarFn,
    },
}

#[derive(Clone)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    law: Law,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Nonlinearity");
        d.field("kind", &self.kind);
        match &self.law {
            Law::Exp { scale, shift } => d.field("scale", scale).field("shift", shift),
            Law::Power { m, offset, kappa } => d
                .field("m", m)
                .field("offset", offset)
                .field("kappa", kappa),
            Law::Custom { .. } => &mut d,
        };
        d.finish()
    }
}

/// `((m−1)n − (m+1)) / ((m−1)n − 2m)`, the curvature coefficient of the power model.
pub fn power_curvature_coefficient(n: f64, m: f64) -> f64 {
    ((m - 1.0) * n - (m + 1.0)) / ((m - 1.0) * n - 2.0 * m)
}

impl Nonlinearity {
    /// `f(u) = e^u/ψ(R)² − ((n−1)/(n−2)) K_ψ`.
    pub fn exp_model(model: &RiemannianModel) -> Result<Self> {
        let n = model.dim();
        if n < 3 {
            return Err(Error::Validity(format!(
                "exponential model needs n ≥ 3 (got n = {n})"
            )));
        }
        let k = space_form_curvature(model)?;
        if model.kind() == ModelKind::Elliptic {
            let re = model.critical_radii()?.re;
            if model.radius() >= re {
                return Err(Error::Validity(format!(
                    "elliptic exponential model needs R < R_e = {re:.9} (got R = {}); f(0) would be ≤ 0",
                    model.radius()
                )));
            }
        }
        let nf = n as f64;
        let nl = Self {
            kind: NonlinearityKind::ExpModel,
            law: Law::Exp {
                scale: model.psi(model.radius()).powi(-2),
                shift: (nf - 1.0) / (nf - 2.0) * k,
            },
        };
        nl.require_positive_at_zero()?;
        Ok(nl)
    }

    /// Power model with the exponent restricted to `m > (n+2)/(n−2)`.
    pub fn power_model(model: &RiemannianModel, m: f64) -> Result<Self> {
        let nf = model.dim() as f64;
        if model.dim() < 3 {
            return Err(Error::Validity(format!(
                "power model needs n ≥ 3 (got n = {})",
                model.dim()
            )));
        }
        let threshold = (nf + 2.0) / (nf - 2.0);
        if !(m > threshold) {
            return Err(Error::Validity(format!(
                "power model needs m > (n+2)/(n−2) = {threshold:.9} (got m = {m})"
            )));
        }
        Self::power_model_permissive(model, m)
    }

    /// Power model for any `m > 1`, for branch-only studies outside the closed-form regime.
    ///
    /// The elliptic radius restriction `R < R_p` and `f(0) > 0` are still enforced.
    pub fn power_model_permissive(model: &RiemannianModel, m: f64) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::Validity(format!(
                "power exponent must satisfy m > 1 (got {m})"
            )));
        }
        let k = space_form_curvature(model)?;
        if model.kind() == ModelKind::Elliptic {
            let rp = model.critical_radii()?.rp;
            if model.radius() >= rp {
                return Err(Error::Validity(format!(
                    "elliptic power model needs R < R_p = {rp:.9} (got R = {})",
                    model.radius()
                )));
            }
        }
        let nf = model.dim() as f64;
        let nl = Self {
            kind: NonlinearityKind::PowerModel,
            law: Law::Power {
                m,
                offset: model.psi(model.radius()).powf(-2.0 / (m - 1.0)),
                kappa: power_curvature_coefficient(nf, m) * k,
            },
        };
        nl.require_positive_at_zero()?;
        Ok(nl)
    }

    /// `f(u) = e^u`.
    pub fn gelfand() -> Self {
        Self {
            kind: NonlinearityKind::GelfandClassic,
            law: Law::Exp {
                scale: 1.0,
                shift: 0.0,
            },
        }
    }

    /// `f(u) = (1+u)^m`, `m > 1`.
    pub fn power_classic(m: f64) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::Validity(format!(
                "power exponent must satisfy m > 1 (got {m})"
            )));
        }
        Ok(Self {
            kind: NonlinearityKind::PowerClassic,
            law: Law::Power {
                m,
                offset: 1.0,
                kappa: 0.0,
            },
        })
    }

    /// A user-supplied increasing `C¹` nonlinearity.
    ///
    /// Validity is probed, not proven: `f(0) > 0`, `f' ≥ 0` on a grid of `[0, u_max_probe]`,
    /// and `f(t)/t` increasing between `t = 10³` and `t = 10⁶`.
    pub fn custom(f: ScalarFn, f_prime: ScalarFn, u_max_probe: f64) -> Result<Self> {
        let f0 = f(0.0);
        if !(f0 > 0.0) {
            return Err(Error::Validity(format!("f(0) = {f0} must be positive")));
        }
        for k in 0..=256 {
            let u = u_max_probe * k as f64 / 256.0;
            let d = f_prime(u);
            if !(d >= 0.0) {
                return Err(Error::Validity(format!(
                    "f'({u}) = {d} is negative; f must be increasing"
                )));
            }
        }
        let (a, b) = (f(1e3) / 1e3, f(1e6) / 1e6);
        if !(b > a) {
            return Err(Error::Validity(format!(
                "superlinearity probe failed: f(t)/t = {a} at 1e3, {b} at 1e6"
            )));
        }
        Ok(Self {
            kind: NonlinearityKind::Custom,
            law: Law::Custom { f, f_prime },
        })
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    /// The power exponent, for the power families.
    pub fn exponent(&self) -> Option<f64> {
        match self.law {
            Law::Power { m, .. } => Some(m),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> Result<f64> {
        match &self.law {
            Law::Exp { scale, shift } => {
                check_exp_argument(u)?;
                Ok(scale * u.exp() - shift)
            }
            Law::Power { m, offset, kappa } => {
                let base = power_base(u, *offset)?;
                Ok(base.powf(*m) - kappa * base)
            }
            Law::Custom { f, .. } => Ok(f(u)),
        }
    }

    #[inline]
    pub fn eval_prime(&self, u: f64) -> Result<f64> {
        match &self.law {
            Law::Exp { scale, .. } => {
                check_exp_argument(u)?;
                Ok(scale * u.exp())
            }
            Law::Power { m, offset, kappa } => {
                let base = power_base(u, *offset)?;
                Ok(m * base.powf(m - 1.0) - kappa)
            }
            Law::Custom { f_prime, .. } => Ok(f_prime(u)),
        }
    }

    fn require_positive_at_zero(&self) -> Result<()> {
        let f0 = self.eval(0.0)?;
        if f0 > 0.0 {
            Ok(())
        } else {
            Err(Error::Validity(format!("f(0) = {f0} must be positive")))
        }
    }
}

fn space_form_curvature(model: &RiemannianModel) -> Result<f64> {
    model.curvature().ok_or_else(|| {
        Error::Validity(
            "model nonlinearities need a space form (K_ψ undefined for custom ψ)".into(),
        )
    })
}

#[inline]
fn check_exp_argument(u: f64) -> Result<()> {
    if u > EXP_OVERFLOW_GUARD || !u.is_finite() {
        Err(Error::Overflow(u))
    } else {
        Ok(())
    }
}

#[inline]
fn power_base(u: f64, offset: f64) -> Result<f64> {
    let base = u + offset;
    if base >= 0.0 && base.is_finite() {
        Ok(base)
    } else {
        Err(Error::Domain(format!(
            "u = {u} below the power-law domain u > −{offset}"
        )))
    }
}
