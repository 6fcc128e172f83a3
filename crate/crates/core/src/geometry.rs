//! Riemannian models `dr² + ψ(r)² dΘ²` and the scalars derived from the warping function.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Scalar function of the geodesic radius.
pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const HYPOTHESIS_TOL: f64 = 1e-10;
const PROBE_POINTS: usize = 4096;
const SUP_SCAN_POINTS: usize = 10 * 1024;
const GOLDEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Euclidean,
    Hyperbolic,
    Elliptic,
    Custom,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::Euclidean => "euclidean",
            ModelKind::Hyperbolic => "hyperbolic",
            ModelKind::Elliptic => "elliptic",
            ModelKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

#[derive(Clone)]
enum Warping {
    Identity,
    Sinh,
    Sin,
    Custom {
        psi: RadialFn,
        psi_prime: RadialFn,
        psi_second: RadialFn,
    },
}

/// A geodesic ball of radius `R` in an `n`-dimensional model with a pole.
#[derive(Clone)]
pub struct RiemannianModel {
    dim: usize,
    radius: f64,
    warping: Warping,
}

impl fmt::Debug for RiemannianModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RiemannianModel")
            .field("kind", &self.kind())
            .field("n", &self.dim)
            .field("R", &self.radius)
            .finish()
    }
}

/// Critical radii of the elliptic theorems; `+∞` when the geometry imposes no restriction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalRadii {
    /// Largest radius with a positive improved-Hardy constant.
    pub r0: f64,
    /// Positivity radius of the exponential model nonlinearity.
    pub re: f64,
    /// Positivity radius of the power model nonlinearity.
    pub rp: f64,
}

impl RiemannianModel {
    /// One of the three space forms: `ψ ∈ {r, sinh r, sin r}`.
    pub fn space_form(kind: ModelKind, n: usize, radius: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!(
                "dimension n = {n} must be at least 2"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!(
                "radius R = {radius} must be positive and finite"
            )));
        }
        let warping = match kind {
            ModelKind::Euclidean => Warping::Identity,
            ModelKind::Hyperbolic => Warping::Sinh,
            ModelKind::Elliptic => {
                if radius >= PI {
                    return Err(Error::Domain(format!(
                        "elliptic ball needs R < π (got R = {radius}); ψ = sin vanishes at π"
                    )));
                }
                Warping::Sin
            }
            ModelKind::Custom => {
                return Err(Error::Domain(
                    "custom warping functions are built with RiemannianModel::custom".into(),
                ))
            }
        };
        Ok(Self {
            dim: n,
            radius,
            warping,
        })
    }

    /// A model with a user-supplied warping function and its first two derivatives.
    ///
    /// Checks `ψ(0) = ψ''(0) = 0`, `ψ'(0) = 1`, positivity of `ψ` on a probe grid of `(0, R]`
    /// and that `ψ'` agrees with a centered difference of `ψ`.
    pub fn custom(
        n: usize,
        radius: f64,
        psi: RadialFn,
        psi_prime: RadialFn,
        psi_second: RadialFn,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!(
                "dimension n = {n} must be at least 2"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!(
                "radius R = {radius} must be positive and finite"
            )));
        }
        let (p0, dp0, ddp0) = (psi(0.0), psi_prime(0.0), psi_second(0.0));
        if p0.abs() > HYPOTHESIS_TOL
            || (dp0 - 1.0).abs() > HYPOTHESIS_TOL
            || ddp0.abs() > HYPOTHESIS_TOL
        {
            return Err(Error::Geometry(format!(
                "warping function must satisfy ψ(0) = ψ''(0) = 0, ψ'(0) = 1; got ({p0:e}, {dp0}, {ddp0:e})"
            )));
        }
        for k in 1..=PROBE_POINTS {
            let r = radius * k as f64 / PROBE_POINTS as f64;
            let v = psi(r);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Geometry(format!("ψ({r}) = {v} is not positive")));
            }
        }
        let step = 1e-5 * radius;
        for k in 1..16 {
            let r = radius * k as f64 / 16.0;
            let fd = (psi(r + step) - psi(r - step)) / (2.0 * step);
            let d = psi_prime(r);
            if (fd - d).abs() > 1e-5 * (1.0 + d.abs()) {
                return Err(Error::Geometry(format!(
                    "ψ' inconsistent with ψ at r = {r}: supplied {d}, centered difference {fd}"
                )));
            }
        }
        Ok(Self {
            dim: n,
            radius,
            warping: Warping::Custom {
                psi,
                psi_prime,
                psi_second,
            },
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self.warping {
            Warping::Identity => ModelKind::Euclidean,
            Warping::Sinh => ModelKind::Hyperbolic,
            Warping::Sin => ModelKind::Elliptic,
            Warping::Custom { .. } => ModelKind::Custom,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Sectional curvature `K_ψ` for the space forms; `None` for custom warping.
    pub fn curvature(&self) -> Option<f64> {
        match self.warping {
            Warping::Identity => Some(0.0),
            Warping::Sinh => Some(-1.0),
            Warping::Sin => Some(1.0),
            Warping::Custom { .. } => None,
        }
    }

    fn require_curvature(&self, what: &str) -> Result<f64> {
        self.curvature().ok_or_else(|| {
            Error::Domain(format!(
                "{what} is only defined for the space forms, not custom ψ"
            ))
        })
    }

    #[inline]
    pub fn psi(&self, r: f64) -> f64 {
        match &self.warping {
            Warping::Identity => r,
            Warping::Sinh => r.sinh(),
            Warping::Sin => r.sin(),
            Warping::Custom { psi, .. } => psi(r),
        }
    }

    #[inline]
    pub fn psi_prime(&self, r: f64) -> f64 {
        match &self.warping {
            Warping::Identity => 1.0,
            Warping::Sinh => r.cosh(),
            Warping::Sin => r.cos(),
            Warping::Custom { psi_prime, .. } => psi_prime(r),
        }
    }

    #[inline]
    pub fn psi_second(&self, r: f64) -> f64 {
        match &self.warping {
            Warping::Identity => 0.0,
            Warping::Sinh => r.sinh(),
            Warping::Sin => -r.sin(),
            Warping::Custom { psi_second, .. } => psi_second(r),
        }
    }

    /// Volume density `ψ(r)^{n-1}` of the radial measure.
    #[inline]
    pub fn volume_density(&self, r: f64) -> f64 {
        self.psi(r).powi(self.dim as i32 - 1)
    }

    /// `φ(r) = ∫₀ʳ ψ(s) ds`.
    pub fn phi(&self, r: f64) -> Result<f64> {
        if !(0.0..=self.radius).contains(&r) {
            return Err(Error::Domain(format!(
                "r = {r} outside [0, {}]",
                self.radius
            )));
        }
        Ok(self.phi_unchecked(r))
    }

    fn phi_unchecked(&self, r: f64) -> f64 {
        match &self.warping {
            Warping::Identity => 0.5 * r * r,
            // cosh r − 1 and 1 − cos r without cancellation
            Warping::Sinh => 2.0 * (0.5 * r).sinh().powi(2),
            Warping::Sin => 2.0 * (0.5 * r).sin().powi(2),
            Warping::Custom { psi, .. } => {
                let panels = ((r / self.radius) * 64.0).ceil().max(1.0) as usize;
                crate::quadrature::composite_gauss(|s| psi(s), 0.0, r, panels)
            }
        }
    }

    /// `sup_{(0,R)} φ/ψ`.
    ///
    /// For the space forms the ratio is `r/2`, `tanh(r/2)` or `tan(r/2)`, increasing in `r`,
    /// so the supremum is its value at `R`. Custom warping uses a dense scan followed by a
    /// golden-section polish on the best cell.
    pub fn sup_phi_over_psi(&self) -> f64 {
        let r = self.radius;
        match &self.warping {
            Warping::Identity => 0.5 * r,
            Warping::Sinh => (0.5 * r).tanh(),
            Warping::Sin => (0.5 * r).tan(),
            Warping::Custom { psi, .. } => {
                let step = r / SUP_SCAN_POINTS as f64;
                let mut phi_acc = 0.0;
                let mut cumulative = Vec::with_capacity(SUP_SCAN_POINTS + 1);
                cumulative.push(0.0);
                let (mut best, mut best_k) = (f64::NEG_INFINITY, 1);
                for k in 1..=SUP_SCAN_POINTS {
                    let (lo, hi) = ((k - 1) as f64 * step, k as f64 * step);
                    phi_acc += gauss_legendre(|s| psi(s), lo, hi);
                    cumulative.push(phi_acc);
                    let ratio = phi_acc / psi(hi);
                    if ratio > best {
                        best = ratio;
                        best_k = k;
                    }
                }
                let ratio_at = |x: f64| {
                    let k = ((x / step).floor() as usize).min(SUP_SCAN_POINTS);
                    let base = k as f64 * step;
                    (cumulative[k] + gauss_legendre(|s| psi(s), base, x)) / psi(x)
                };
                let lo = (best_k - 1) as f64 * step;
                let hi = ((best_k + 1) as f64 * step).min(r);
                let (_, v) = golden_section_max(ratio_at, lo.max(step * 1e-3), hi, GOLDEN_TOL);
                v.max(best)
            }
        }
    }

    /// Improved-Hardy constant `H = ¼((sup φ/ψ)^{-2} − n(n−2)K_ψ)`.
    ///
    /// The Euclidean value (`K_ψ = 0`) is an extension: the inequality is usually stated for
    /// `sinh` and `sin` only.
    pub fn hardy_constant(&self) -> Result<f64> {
        if self.dim < 3 {
            return Err(Error::Domain(format!(
                "Hardy constant needs n ≥ 3 (got n = {})",
                self.dim
            )));
        }
        let k = self.require_curvature("the Hardy constant")?;
        let n = self.dim as f64;
        let s = self.sup_phi_over_psi();
        Ok(0.25 * (s.powi(-2) - n * (n - 2.0) * k))
    }

    /// `R₀`, `R_e` and `R_p` for the elliptic model; all `+∞` for the Euclidean and hyperbolic ones.
    pub fn critical_radii(&self) -> Result<CriticalRadii> {
        if self.dim < 3 {
            return Err(Error::Domain(format!(
                "critical radii need n ≥ 3 (got n = {})",
                self.dim
            )));
        }
        match self.kind() {
            ModelKind::Euclidean | ModelKind::Hyperbolic => Ok(CriticalRadii {
                r0: f64::INFINITY,
                re: f64::INFINITY,
                rp: f64::INFINITY,
            }),
            ModelKind::Elliptic => Ok(elliptic_critical_radii(self.dim)),
            ModelKind::Custom => Err(Error::Domain(
                "critical radii are only defined for the space forms".into(),
            )),
        }
    }

    /// Largest probe-grid `δ ≤ 0.49 R` with `ψ' > 0` on `[0, δ]`.
    pub fn delta_psi(&self) -> Result<f64> {
        let cap = 0.49 * self.radius;
        match self.warping {
            // cosh, 1 > 0 everywhere; cos > 0 on [0, 0.49 R] because R < π
            Warping::Identity | Warping::Sinh | Warping::Sin => Ok(cap),
            Warping::Custom { ref psi_prime, .. } => {
                let mut last_good = None;
                for k in 1..=PROBE_POINTS {
                    let r = cap * k as f64 / PROBE_POINTS as f64;
                    if psi_prime(r) > 0.0 {
                        last_good = Some(r);
                    } else {
                        break;
                    }
                }
                last_good.ok_or_else(|| {
                    Error::Geometry("ψ' is not positive just to the right of the origin".into())
                })
            }
        }
    }
}

/// Closed-form elliptic radii.
///
/// `R₀` solves `(1 + cos s)/(1 − cos s) = n(n−2)`, i.e. `cos R₀ = (n(n−2)−1)/(n(n−2)+1)`.
pub fn elliptic_critical_radii(n: usize) -> CriticalRadii {
    let nf = n as f64;
    let q = nf * (nf - 2.0);
    let r0 = ((q - 1.0) / (q + 1.0)).acos().min(PI / 2.0);
    let re = ((nf - 2.0) / (nf - 1.0)).sqrt().asin();
    let rp = ((nf - 2.0) / nf).sqrt().asin();
    CriticalRadii { r0, re, rp }
}

fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + a.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x).max(fc).max(fd))
}

/// Surface area of the unit sphere `𝕊^{n−1}`, `2π^{n/2}/Γ(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    assert!(n >= 2, "sphere_area needs n ≥ 2");
    // Γ(n/2) by recursion from Γ(1) = 1 or Γ(1/2) = √π
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    let target = n as f64 / 2.0;
    while x < target - 1e-12 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / gamma
}
