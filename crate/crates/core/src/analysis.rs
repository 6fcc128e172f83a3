//! Closed-form oracles for the space forms and the checks built on them: critical exponents,
//! explicit extremal pairs, ladder verification of `λ*`, the improved weighted Hardy
//! inequality, the power-case semistability conditions and integrability scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{assemble_laplacian, weak_residual, LaplacianRoute, RadialMesh};
use crate::error::{Error, Result};
use crate::format::{serialize_extended, serialize_extended_opt};
use crate::geometry::{ModelKind, RiemannianModel};
use crate::nonlinearity::{Nonlinearity, NonlinearityKind};
use crate::quadrature::composite_gauss;
use crate::solver::{ContinuationOptions, RadialProblem};

/// Relative tolerance on `λ*` used by [`ExtremalVerification::check`].
pub const LAMBDA_STAR_TOLERANCE: f64 = 0.02;

/// Mesh ladder used when none is given.
pub const DEFAULT_LADDER: [usize; 4] = [512, 1024, 2048, 4096];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityExponents {
    #[serde(serialize_with = "serialize_extended")]
    pub p0: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub p1: f64,
    #[serde(rename = "N_m", serialize_with = "serialize_extended_opt")]
    pub n_m: Option<f64>,
}

/// `N(m) = 2 + 4m/(m−1) + 4√(m/(m−1))`.
pub fn dimension_threshold(m: f64) -> Result<f64> {
    if !(m > 1.0) {
        return Err(Error::Domain(format!("N(m) needs m > 1 (got {m})")));
    }
    let q = m / (m - 1.0);
    Ok(2.0 + 4.0 * q + 4.0 * q.sqrt())
}

/// `p₀ = 2n/(n − 2√(n−1) − 4)` and `p₁ = 2n/(n − 2√(n−1) − 2)`, each `+∞` when its
/// denominator is not positive; `N(m)` when `m` is given.
pub fn regularity_exponents(n: usize, m: Option<f64>) -> Result<RegularityExponents> {
    if n < 2 {
        return Err(Error::Domain(format!("exponents need n ≥ 2 (got n = {n})")));
    }
    let nf = n as f64;
    let root = 2.0 * (nf - 1.0).sqrt();
    let ratio = |den: f64| {
        if den > 0.0 {
            2.0 * nf / den
        } else {
            f64::INFINITY
        }
    };
    Ok(RegularityExponents {
        p0: ratio(nf - root - 4.0),
        p1: ratio(nf - root - 2.0),
        n_m: m.map(dimension_threshold).transpose()?,
    })
}

/// `λ# = (2/(m−1))(n − 2m/(m−1))`.
pub fn power_lambda_sharp(n: f64, m: f64) -> f64 {
    2.0 / (m - 1.0) * (n - 2.0 * m / (m - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtremalFamily {
    /// `u* = −2 log(ψ/ψ(R))`.
    Exponential,
    /// `u* = scale·(ψ^{−2/(m−1)} − ψ(R)^{−2/(m−1)})`.
    Power { m: f64, scale: f64 },
}

/// An explicit extremal pair `(λ*, u*)`.
#[derive(Debug, Clone)]
pub struct ClosedFormExtremal {
    pub family: ExtremalFamily,
    pub lambda_star: f64,
    model: RiemannianModel,
    nl: Nonlinearity,
}

fn hypothesis(msg: String) -> Error {
    Error::Hypothesis(msg)
}

/// The extremal pair of `nl` on `model`, when the matching theorem applies.
///
/// Model laws need `n ≥ 10` (exponential) or `n ≥ N(m)` (power) and, on the sphere,
/// `R < min(R₀, R_e)` or `R < min(R₀, R_p)`. The classical `e^u` and `(1+u)^m` are covered on
/// Euclidean balls of any radius, where `λ*` scales as `R^{−2}`.
pub fn closed_form_extremal(
    model: &RiemannianModel,
    nl: &Nonlinearity,
) -> Result<ClosedFormExtremal> {
    let n = model.dim();
    let nf = n as f64;
    let radius = model.radius();
    let kind = model.kind();
    if kind == ModelKind::Custom {
        return Err(hypothesis(
            "no closed-form extremal pair for a custom warping".into(),
        ));
    }
    let classic = matches!(
        nl.kind(),
        NonlinearityKind::GelfandClassic | NonlinearityKind::PowerClassic
    );
    if classic && kind != ModelKind::Euclidean {
        return Err(hypothesis(format!(
            "the classical nonlinearity has no closed-form extremal pair on the {kind} model"
        )));
    }
    let radii = model.critical_radii()?;
    let (family, lambda_star) = match nl.kind() {
        NonlinearityKind::ExpModel | NonlinearityKind::GelfandClassic => {
            if n < 10 {
                return Err(hypothesis(format!(
                    "exponential extremal pair needs n ≥ 10 (got n = {n})"
                )));
            }
            if radius >= radii.r0.min(radii.re) {
                return Err(hypothesis(format!(
                    "exponential extremal pair needs R < min(R0, Re) = {} (got R = {radius}; R0 = {}, Re = {})",
                    radii.r0.min(radii.re),
                    radii.r0,
                    radii.re
                )));
            }
            let scale = if classic { radius.powi(-2) } else { 1.0 };
            (ExtremalFamily::Exponential, 2.0 * (nf - 2.0) * scale)
        }
        NonlinearityKind::PowerModel | NonlinearityKind::PowerClassic => {
            let m = nl.exponent().expect("power laws carry an exponent");
            let threshold = dimension_threshold(m)?;
            if nf < threshold {
                return Err(hypothesis(format!(
                    "power extremal pair needs n ≥ N(m) = {threshold:.6} (got n = {n}, m = {m})"
                )));
            }
            if radius >= radii.r0.min(radii.rp) {
                return Err(hypothesis(format!(
                    "power extremal pair needs R < min(R0, Rp) = {} (got R = {radius}; R0 = {}, Rp = {})",
                    radii.r0.min(radii.rp),
                    radii.r0,
                    radii.rp
                )));
            }
            let beta = 2.0 / (m - 1.0);
            let scale = if classic { radius.powf(beta) } else { 1.0 };
            let lambda = power_lambda_sharp(nf, m) * if classic { radius.powi(-2) } else { 1.0 };
            (ExtremalFamily::Power { m, scale }, lambda)
        }
        NonlinearityKind::Custom => {
            return Err(hypothesis(
                "no closed-form extremal pair for a custom nonlinearity".into(),
            ));
        }
    };
    Ok(ClosedFormExtremal {
        family,
        lambda_star,
        model: model.clone(),
        nl: nl.clone(),
    })
}

impl ClosedFormExtremal {
    pub fn model(&self) -> &RiemannianModel {
        &self.model
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    /// `(u*, u*', u*'')` at `r ∈ (0, R]`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let m = &self.model;
        let (p, dp, ddp) = (m.psi(r), m.psi_prime(r), m.psi_second(r));
        match self.family {
            ExtremalFamily::Exponential => (
                -2.0 * (p / m.psi(m.radius())).ln(),
                -2.0 * dp / p,
                -2.0 * (ddp / p - dp * dp / (p * p)),
            ),
            ExtremalFamily::Power { m: expo, scale } => {
                let beta = 2.0 / (expo - 1.0);
                let pb = p.powf(-beta);
                (
                    scale * (pb - m.psi(m.radius()).powf(-beta)),
                    -scale * beta * pb / p * dp,
                    -scale * beta * pb / p * (ddp - (beta + 1.0) * dp * dp / p),
                )
            }
        }
    }

    pub fn u(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// `(−Δ_g u* − λ* f(u*), |Δ_g u*| + λ*|f(u*)|)` at `r` from the closed-form derivatives.
    pub fn strong_residual(&self, r: f64) -> Result<(f64, f64)> {
        let (u, du, ddu) = self.eval(r);
        let m = &self.model;
        let lap = ddu + (m.dim() as f64 - 1.0) * m.psi_prime(r) / m.psi(r) * du;
        let reaction = self.lambda_star * self.nl.eval(u)?;
        Ok((-lap - reaction, lap.abs() + reaction.abs()))
    }
}

/// The JSON report of an extremal verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremalReport {
    pub lambda_star_numeric: f64,
    pub lambda_star_closed: f64,
    /// `max |u_λ − u*|` over nodes in `[R/4, R]` at the last accepted point, finest mesh.
    pub max_pointwise_gap: f64,
    /// Very-weak residual of `u*` sampled on the finest mesh at `λ*`.
    pub weak_residual_of_closed_form: f64,
    pub exponents: RegularityExponents,
}

/// Per-mesh data behind an [`ExtremalReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct LadderEntry {
    pub cells: usize,
    pub lambda_star_estimate: f64,
    pub fold_bracket: (f64, f64),
    pub max_pointwise_gap: f64,
    pub weak_residual: f64,
    pub points: usize,
    pub last_sup_u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalVerification {
    pub report: ExtremalReport,
    /// Ordered by increasing `cells`.
    pub ladder: Vec<LadderEntry>,
}

impl ExtremalVerification {
    pub fn relative_lambda_error(&self) -> f64 {
        (self.report.lambda_star_numeric - self.report.lambda_star_closed).abs()
            / self.report.lambda_star_closed
    }

    /// Whether the weak residual of `u*` strictly decreases along the ladder.
    pub fn weak_residual_decreases(&self) -> bool {
        self.ladder
            .windows(2)
            .all(|w| w[1].weak_residual < w[0].weak_residual)
    }

    /// Fails with `ReportFailure` unless `λ*` is within 2% and the weak residual decreases.
    pub fn check(&self) -> Result<()> {
        let err = self.relative_lambda_error();
        if !(err < LAMBDA_STAR_TOLERANCE) {
            return Err(Error::ReportFailure(format!(
                "numeric λ* = {} is {:.3}% from the closed form {}",
                self.report.lambda_star_numeric,
                100.0 * err,
                self.report.lambda_star_closed
            )));
        }
        if !self.weak_residual_decreases() {
            return Err(Error::ReportFailure(
                "weak residual of u* does not decrease under refinement".into(),
            ));
        }
        Ok(())
    }
}

/// Observed order `log₂(e_k/e_{k+1})` between consecutive ladder levels (meshes doubling).
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Continues the branch on every ladder mesh (in parallel) and compares with the closed form.
pub fn evaluate_extremal(
    model: &RiemannianModel,
    nl: &Nonlinearity,
    ladder: &[usize],
    opts: &ContinuationOptions,
) -> Result<ExtremalVerification> {
    let exact = closed_form_extremal(model, nl)?;
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "mesh ladder must be non-empty and strictly increasing".into(),
        ));
    }
    let radius = model.radius();
    let ladder: Vec<LadderEntry> = ladder
        .par_iter()
        .map(|&cells| -> Result<LadderEntry> {
            let mesh = RadialMesh::new(radius, cells)?;
            let op = assemble_laplacian(model, &mesh)?;
            let problem = RadialProblem::from_operator(op, nl.clone());
            let branch = problem.continue_branch(opts)?;
            let last = branch.last();
            let gap = (0..cells)
                .filter(|&i| mesh.node(i) >= 0.25 * radius)
                .map(|i| (last.u[i] - exact.u(mesh.node(i))).abs())
                .fold(0.0, f64::max);
            let sampled = mesh.sample(|r| exact.u(r));
            let weak = weak_residual(
                problem.operator(),
                &sampled,
                exact.lambda_star,
                nl,
                4,
                LaplacianRoute::Analytic,
            )?;
            Ok(LadderEntry {
                cells,
                lambda_star_estimate: branch.lambda_star_estimate,
                fold_bracket: branch.fold_bracket,
                max_pointwise_gap: gap,
                weak_residual: weak,
                points: branch.points.len(),
                last_sup_u: last.sup_u,
            })
        })
        .collect::<Result<_>>()?;
    let finest = ladder.last().expect("non-empty ladder");
    let report = ExtremalReport {
        lambda_star_numeric: finest.lambda_star_estimate,
        lambda_star_closed: exact.lambda_star,
        max_pointwise_gap: finest.max_pointwise_gap,
        weak_residual_of_closed_form: finest.weak_residual,
        exponents: regularity_exponents(model.dim(), nl.exponent())?,
    };
    Ok(ExtremalVerification { report, ladder })
}

/// [`evaluate_extremal`] followed by [`ExtremalVerification::check`].
pub fn verify_extremal(
    model: &RiemannianModel,
    nl: &Nonlinearity,
    ladder: &[usize],
    opts: &ContinuationOptions,
) -> Result<ExtremalVerification> {
    let v = evaluate_extremal(model, nl, ladder, opts)?;
    v.check()?;
    Ok(v)
}

/// Outcome of the randomized Hardy check. Margins are relative to `∫ψ^{n−1}ξ_r²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyReport {
    pub hardy_constant: f64,
    pub trials: usize,
    /// `min (LHS − RHS)/LHS` of the improved inequality.
    pub worst_margin: f64,
    /// `min (∫φ_r²ψ − ¼ s^{−2}∫φ²ψ)/∫φ_r²ψ` over `φ = ξψ^{n/2−1}`, `s = sup(∫ψ/ψ)`.
    pub poincare_margin: f64,
    /// Relative margin of a truncated `ψ^{−(n−2)/2}`, which nearly saturates the inequality.
    pub sharpness_margin: f64,
}

/// Continuous piecewise-linear function through `(knots[i], values[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseLinear {
    fn segment(&self, r: f64) -> usize {
        let k = self.knots.partition_point(|&x| x <= r);
        k.clamp(1, self.knots.len() - 1) - 1
    }

    /// `(ξ(r), ξ'(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let i = self.segment(r);
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        let slope = (self.values[i + 1] - self.values[i]) / (b - a);
        (self.values[i] + slope * (r - a), slope)
    }
}

/// Random test function: plateau on `[0, r₁]`, 16 random interior knots, `ξ(R) = 0`.
pub fn random_test_function(rng: &mut ChaCha8Rng, radius: f64) -> PiecewiseLinear {
    const KNOTS: usize = 16;
    let mut inner: Vec<f64> = (0..KNOTS)
        .map(|_| rng.gen_range(0.02..0.98) * radius)
        .collect();
    inner.sort_by(f64::total_cmp);
    let mut knots = vec![0.0];
    knots.extend(inner);
    knots.push(radius);
    knots.dedup();
    let mut values: Vec<f64> = (0..knots.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    values[0] = values[1];
    *values.last_mut().expect("knots") = 0.0;
    PiecewiseLinear { knots, values }
}

/// `∫ g` over `[0, R]`, split at the knots so the integrand is smooth on every piece.
fn integrate_by_knots<F: Fn(f64) -> f64>(knots: &[f64], g: F) -> f64 {
    knots
        .windows(2)
        .map(|w| composite_gauss(&g, w[0], w[1], 4))
        .sum()
}

struct HardyTerms {
    gradient: f64,
    hardy: f64,
    mass: f64,
    poincare_lhs: f64,
    poincare_mass: f64,
}

fn hardy_terms<F: Fn(f64) -> (f64, f64)>(
    model: &RiemannianModel,
    knots: &[f64],
    xi: F,
) -> HardyTerms {
    let nf = model.dim() as f64;
    let half = nf / 2.0 - 1.0;
    let gradient = integrate_by_knots(knots, |r| model.volume_density(r) * xi(r).1.powi(2));
    let hardy = integrate_by_knots(knots, |r| model.psi(r).powf(nf - 3.0) * xi(r).0.powi(2));
    let mass = integrate_by_knots(knots, |r| model.volume_density(r) * xi(r).0.powi(2));
    // φ = ξ ψ^{n/2−1}, φ_r = ξ_r ψ^{n/2−1} + (n/2−1) ξ ψ^{n/2−2} ψ'
    let poincare_lhs = integrate_by_knots(knots, |r| {
        let (v, dv) = xi(r);
        let p = model.psi(r);
        let d = dv * p.powf(half) + half * v * p.powf(half - 1.0) * model.psi_prime(r);
        d * d * p
    });
    let poincare_mass = integrate_by_knots(knots, |r| {
        xi(r).0.powi(2) * model.psi(r).powf(2.0 * half + 1.0)
    });
    HardyTerms {
        gradient,
        hardy,
        mass,
        poincare_lhs,
        poincare_mass,
    }
}

/// Randomized check of
/// `∫ψ^{n−1}ξ_r² ≥ ((n−2)²/4)∫ψ^{n−1}ξ²/ψ² + H∫ψ^{n−1}ξ²` and of the Poincaré step behind it.
///
/// Requires `n ≥ 3` and a space form; on the sphere `R < R₀` (positive `H`) is required.
pub fn hardy_verify(model: &RiemannianModel, trials: usize, seed: u64) -> Result<HardyReport> {
    let n = model.dim();
    if n < 3 {
        return Err(Error::Domain(format!(
            "Hardy check needs n ≥ 3 (got n = {n})"
        )));
    }
    if model.kind() == ModelKind::Custom {
        return Err(Error::Domain("Hardy check needs a space form".into()));
    }
    let radius = model.radius();
    let r0 = model.critical_radii()?.r0;
    if radius >= r0 {
        return Err(Error::Hypothesis(format!(
            "positive Hardy constant needs R < R0 = {r0} on the sphere (got R = {radius})"
        )));
    }
    let h = model.hardy_constant()?;
    let nf = n as f64;
    let c_hardy = (nf - 2.0).powi(2) / 4.0;
    let c_poincare = 0.25 * model.sup_phi_over_psi().powi(-2);
    let relative = |lhs: f64, rhs: f64| if lhs > 0.0 { (lhs - rhs) / lhs } else { 0.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut poincare = f64::INFINITY;
    for _ in 0..trials {
        let xi = random_test_function(&mut rng, radius);
        let t = hardy_terms(model, &xi.knots, |r| xi.eval(r));
        worst = worst.min(relative(t.gradient, c_hardy * t.hardy + h * t.mass));
        poincare = poincare.min(relative(t.poincare_lhs, c_poincare * t.poincare_mass));
    }
    if trials == 0 {
        worst = 0.0;
        poincare = 0.0;
    }

    // ψ(max(r, ε))^{−(n−2)/2} − ψ(R)^{−(n−2)/2}
    let a = (nf - 2.0) / 2.0;
    let eps = 1e-3 * radius;
    let tail = model.psi(radius).powf(-a);
    let probe = |r: f64| {
        if r <= eps {
            (model.psi(eps).powf(-a) - tail, 0.0)
        } else {
            let p = model.psi(r);
            (
                p.powf(-a) - tail,
                -a * p.powf(-a - 1.0) * model.psi_prime(r),
            )
        }
    };
    let knots: Vec<f64> = std::iter::once(0.0)
        .chain((0..=40).map(|k| eps * (radius / eps).powf(k as f64 / 40.0)))
        .collect();
    let t = hardy_terms(model, &knots, probe);
    let sharpness = relative(t.gradient, c_hardy * t.hardy + h * t.mass);

    Ok(HardyReport {
        hardy_constant: h,
        trials,
        worst_margin: worst,
        poincare_margin: poincare,
        sharpness_margin: sharpness,
    })
}

/// The two scalar conditions that make the singular power solution semistable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerConditions {
    /// `(n−2)²/4 ≥ λ# m`.
    pub cond1: bool,
    /// `H ≥ −(2/(m−1)²)((m−1)n − (m+1)) K_ψ`.
    pub cond2: bool,
    pub cond1_margin: f64,
    pub cond2_margin: f64,
}

/// `(n−2)²/4 − λ# m`; vanishes exactly at `n = N(m)`.
pub fn cond1_margin(n: f64, m: f64) -> f64 {
    (n - 2.0).powi(2) / 4.0 - power_lambda_sharp(n, m) * m
}

pub fn power_semistability_conditions(model: &RiemannianModel, m: f64) -> Result<PowerConditions> {
    let nf = model.dim() as f64;
    if model.dim() < 3 || !(m > (nf + 2.0) / (nf - 2.0)) {
        return Err(Error::Domain(format!(
            "conditions need m > (n+2)/(n−2) (got n = {nf}, m = {m})"
        )));
    }
    let k = model
        .curvature()
        .ok_or_else(|| Error::Domain("conditions need a space form".into()))?;
    let h = model.hardy_constant()?;
    let c1 = cond1_margin(nf, m);
    let c2 = h + 2.0 / (m - 1.0).powi(2) * ((m - 1.0) * nf - (m + 1.0)) * k;
    Ok(PowerConditions {
        cond1: c1 >= 0.0,
        cond2: c2 >= 0.0,
        cond1_margin: c1,
        cond2_margin: c2,
    })
}

/// Which integral a membership scan measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// `∫ψ^{n−1}|u|^p`.
    Lp,
    /// `∫ψ^{n−1}|u_r|^p`.
    W1p,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipRow {
    pub p: f64,
    pub norm: NormKind,
    /// `(cells, ω_{n−1} Σ qᵢ|gᵢ|^p h)` per ladder level.
    pub integrals: Vec<(usize, f64)>,
    /// Least-squares slope of `log I` against `log h`; near 0 for members.
    pub slope: f64,
    /// `(I_{2N} − I_N)/(I_N − I_{N/2})` on the finest levels; below 1 for members.
    pub increment_ratio: f64,
    pub member: bool,
}

/// `points` values geometrically spaced on `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    (0..points)
        .map(|k| lo * (hi / lo).powf(k as f64 / (points - 1) as f64))
        .collect()
}

/// The 9-point grid from `0.5×` to `2×` a predicted boundary.
pub fn boundary_grid(boundary: f64) -> Vec<f64> {
    geometric_grid(0.5 * boundary, 2.0 * boundary, 9)
}

/// Classifies `u ∈ L^p` (or `u_r ∈ L^p`) from midpoint integrals along a doubling ladder.
///
/// `u_fn(r)` returns `(u(r), u_r(r))` on `(0, R]`.
pub fn lp_membership_scan<F>(
    model: &RiemannianModel,
    u_fn: F,
    p_grid: &[f64],
    ladder: &[usize],
    norm: NormKind,
) -> Result<Vec<MembershipRow>>
where
    F: Fn(f64) -> (f64, f64) + Sync,
{
    if ladder.len() < 3 || ladder.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::Domain(
            "membership scan needs at least three doubling meshes".into(),
        ));
    }
    let ops: Vec<_> = ladder
        .iter()
        .map(|&cells| {
            RadialMesh::new(model.radius(), cells).and_then(|mesh| assemble_laplacian(model, &mesh))
        })
        .collect::<Result<_>>()?;
    let samples: Vec<Vec<f64>> = ops
        .iter()
        .map(|op| {
            op.mesh()
                .sample(|r| {
                    let (v, dv) = u_fn(r);
                    match norm {
                        NormKind::Lp => v,
                        NormKind::W1p => dv,
                    }
                })
                .iter()
                .map(|v| v.abs())
                .collect()
        })
        .collect();
    p_grid
        .par_iter()
        .map(|&p| {
            if !(p >= 1.0) || p.is_infinite() {
                return Err(Error::Domain(format!(
                    "membership scan needs finite p ≥ 1 (got {p})"
                )));
            }
            let integrals: Vec<(usize, f64)> = ops
                .iter()
                .zip(&samples)
                .map(|(op, g)| {
                    let h = op.mesh().spacing();
                    let s: f64 = op
                        .quad_weights()
                        .iter()
                        .zip(g)
                        .map(|(q, v)| q * v.powf(p))
                        .sum();
                    (op.len(), op.sphere_area() * s * h)
                })
                .collect();
            let k = integrals.len();
            let d1 = integrals[k - 2].1 - integrals[k - 3].1;
            let d2 = integrals[k - 1].1 - integrals[k - 2].1;
            let increment_ratio = d2.abs() / d1.abs();
            let xs: Vec<f64> = ops.iter().map(|op| op.mesh().spacing().ln()).collect();
            let ys: Vec<f64> = integrals.iter().map(|(_, v)| v.ln()).collect();
            Ok(MembershipRow {
                p,
                norm,
                slope: least_squares_slope(&xs, &ys),
                increment_ratio,
                member: increment_ratio < 1.0,
                integrals,
            })
        })
        .collect()
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Slope of `max_i |u(rᵢ)|` against `log(1/h)` along the ladder.
pub fn sup_growth_rate<F: Fn(f64) -> f64>(
    model: &RiemannianModel,
    u_fn: F,
    ladder: &[usize],
) -> Result<f64> {
    if ladder.len() < 2 {
        return Err(Error::Domain("sup growth needs at least two meshes".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &cells in ladder {
        let mesh = RadialMesh::new(model.radius(), cells)?;
        xs.push(-mesh.spacing().ln());
        ys.push(
            mesh.sample(&u_fn)
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs())),
        );
    }
    Ok(least_squares_slope(&xs, &ys))
}
