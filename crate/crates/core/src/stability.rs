//! Semistability of computed solutions: the principal eigenvalue of the linearization, the
//! second variation `Q_u`, the `η`-weighted gradient inequality and the key-estimate ratio.

use rayon::prelude::*;

use crate::discretization::{weighted_lp_norm, DiscreteOperator};
use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::solver::{Branch, RadialProblem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Stop once successive Rayleigh quotients differ by less than `tol·(1 + |λ₁|)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Smallest eigenvalue of `A − λ diag f'(u)` and its eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda1: f64,
    /// Normalized by `h Σ wᵢ φᵢ² = 1` and nonnegative.
    pub phi1: Vec<f64>,
    pub iterations: usize,
    /// `‖(S − λ₁)y‖_∞` for the symmetrized matrix `S` and unit `y`.
    pub residual: f64,
    /// `‖S‖_∞`, the scale for `residual`.
    pub scale: f64,
}

/// Nodal `−λ f'(u)`.
fn reaction_shift(nl: &Nonlinearity, lambda: f64, u: &[f64]) -> Result<Vec<f64>> {
    u.iter()
        .map(|&v| nl.eval_prime(v).map(|d| -lambda * d))
        .collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Principal eigenpair of the linearized operator at `(λ, u)`.
///
/// The pencil is symmetrized as `S = D^{1/2}(A − λ diag f')D^{−1/2}`, `D = diag(w)`. A Sturm
/// bisection started from the Gershgorin bound brackets the lowest eigenvalue; shifted
/// inverse iteration from just below the bracket then converges in a few solves.
pub fn principal_eigenvalue(
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    lambda: f64,
    u: &[f64],
    opts: &EigenOptions,
) -> Result<EigenPair> {
    if u.len() != op.len() || u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("u must be finite and match the mesh".into()));
    }
    let shift = reaction_shift(nl, lambda, u)?;
    let s = op.symmetrized(Some(&shift));
    let (g_lo, g_hi) = s.gershgorin();
    let scale = g_lo.abs().max(g_hi.abs());
    let (mut lo, mut hi) = (g_lo, g_hi);
    // Invariant: no eigenvalue below `lo`, at least one below `hi`.
    lo -= 1e-12 * scale;
    for _ in 0..200 {
        if hi - lo <= 1e-9 * (1.0 + lo.abs().min(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if s.count_below(mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sigma = lo - (hi - lo).max(1e-12 * scale);
    let shifted = s.shifted(sigma);

    let n = op.len();
    let mut y = vec![1.0 / (n as f64).sqrt(); n];
    let mut sy = vec![0.0; n];
    let mut rq = f64::NAN;
    for iter in 1..=opts.max_iter {
        let mut z = shifted.solve(&y)?;
        let nz = norm2(&z);
        if !(nz > 0.0 && nz.is_finite()) {
            return Err(Error::NoConvergence(
                "inverse iteration produced a degenerate vector".into(),
            ));
        }
        z.iter_mut().for_each(|v| *v /= nz);
        s.apply(&z, &mut sy);
        let next: f64 = z.iter().zip(&sy).map(|(a, b)| a * b).sum();
        y = z;
        if (next - rq).abs() < opts.tol * (1.0 + next.abs()) {
            rq = next;
            let residual = sy
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - rq * b).abs())
                .fold(0.0, f64::max);
            return Ok(EigenPair {
                lambda1: rq,
                phi1: unsymmetrize(op, &y),
                iterations: iter,
                residual,
                scale,
            });
        }
        rq = next;
    }
    Err(Error::NoConvergence(format!(
        "inverse iteration did not settle in {} iterations",
        opts.max_iter
    )))
}

/// `φ = D^{−1/2} y`, rescaled to `h Σ wφ² = 1` and made nonnegative.
fn unsymmetrize(op: &DiscreteOperator, y: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = y
        .iter()
        .zip(op.weights())
        .map(|(v, w)| v / w.sqrt())
        .collect();
    let norm = op.inner(&phi, &phi).sqrt();
    let sign = if phi.iter().sum::<f64>() < 0.0 {
        -1.0
    } else {
        1.0
    };
    phi.iter_mut().for_each(|v| *v *= sign / norm);
    phi
}

/// `Q_u(ξ) = ∫ψ^{n−1}{ξ_r² − λ f'(u) ξ²}` with `ξ(R) = 0`, in the operator weights.
pub fn quadratic_form(
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    lambda: f64,
    u: &[f64],
    xi: &[f64],
) -> Result<f64> {
    let shift = reaction_shift(nl, lambda, u)?;
    let weighted: Vec<f64> = shift.iter().zip(xi).map(|(s, x)| s * x).collect();
    Ok(op.dirichlet_energy(xi) + op.inner(&weighted, xi))
}

/// Cut-off functions `η` with `η(R) = 0` for the gradient inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaFunction {
    /// `(1 − r/R)^k`.
    Polynomial {
        k: u32,
    },
    /// `ψ(min(r, ε))^{−α} − ψ(δ)^{−α}` on `[0, δ]`, zero beyond.
    TruncatedPsiPower {
        alpha: f64,
        eps: f64,
        delta: f64,
    },
    Zero,
}

impl EtaFunction {
    /// `η(r)` and `η'(r)`.
    pub fn eval(&self, op: &DiscreteOperator, r: f64) -> (f64, f64) {
        let model = op.model();
        match *self {
            EtaFunction::Polynomial { k } => {
                let radius = model.radius();
                let s = 1.0 - r / radius;
                let kf = k as f64;
                (s.powi(k as i32), -kf * s.powi(k as i32 - 1) / radius)
            }
            EtaFunction::TruncatedPsiPower { alpha, eps, delta } => {
                if r >= delta {
                    (0.0, 0.0)
                } else if r <= eps {
                    (
                        model.psi(eps).powf(-alpha) - model.psi(delta).powf(-alpha),
                        0.0,
                    )
                } else {
                    let p = model.psi(r);
                    (
                        p.powf(-alpha) - model.psi(delta).powf(-alpha),
                        -alpha * p.powf(-alpha - 1.0) * model.psi_prime(r),
                    )
                }
            }
            EtaFunction::Zero => (0.0, 0.0),
        }
    }

    /// `(1 − r/R)^k` for `k = 1..=4` and the truncated powers `α ∈ {1, 1 + √(n−1)/2}` on `[0, δ]`.
    pub fn default_family(op: &DiscreteOperator) -> Result<Vec<EtaFunction>> {
        let delta = op.model().delta_psi()?;
        let eps = 4.0 * op.mesh().spacing();
        let mut family: Vec<EtaFunction> = (1..=4).map(|k| EtaFunction::Polynomial { k }).collect();
        if eps < delta {
            let root = (op.model().dim() as f64 - 1.0).sqrt();
            for alpha in [1.0, 1.0 + 0.5 * root] {
                family.push(EtaFunction::TruncatedPsiPower { alpha, eps, delta });
            }
        }
        Ok(family)
    }
}

/// Face gradients `(u_j − u_{j−1})/h` at `r = jh`, `j = 1..=N`, with `u_N = 0`.
fn face_gradients(op: &DiscreteOperator, u: &[f64]) -> Vec<f64> {
    let h = op.mesh().spacing();
    let n = u.len();
    (1..=n)
        .map(|j| {
            let right = if j < n { u[j] } else { 0.0 };
            (right - u[j - 1]) / h
        })
        .collect()
}

/// Both sides of
/// `(n−1)∫ψ^{n−1}u_r²ψ'²η² ≤ ∫ψ^{n−1}u_r²{(ψη)_r² + (n−1)ψψ''η²}` for each `η`, by
/// midpoint quadrature over the flux faces.
pub fn etapsi_check(op: &DiscreteOperator, u: &[f64], family: &[EtaFunction]) -> Vec<(f64, f64)> {
    let model = op.model();
    let h = op.mesh().spacing();
    let nm1 = model.dim() as f64 - 1.0;
    let grad = face_gradients(op, u);
    family
        .iter()
        .map(|eta| {
            let (mut lhs, mut rhs) = (0.0, 0.0);
            for (j, g) in grad.iter().enumerate() {
                let r = op.mesh().face(j + 1);
                let (p, dp, ddp) = (model.psi(r), model.psi_prime(r), model.psi_second(r));
                let (e, de) = eta.eval(op, r);
                let w = model.volume_density(r) * g * g;
                let d_psi_eta = dp * e + p * de;
                lhs += w * nm1 * dp * dp * e * e;
                rhs += w * (d_psi_eta * d_psi_eta + nm1 * p * ddp * e * e);
            }
            (lhs * h, rhs * h)
        })
        .collect()
}

/// `∫₀^δ u_r² ψ^{n−1−2α} dr / ‖u‖²_{L¹(B_R)}` with `δ` from the geometry.
pub fn key_estimate_ratio(op: &DiscreteOperator, u: &[f64], alpha: f64) -> Result<f64> {
    let model = op.model();
    let limit = 1.0 + (model.dim() as f64 - 1.0).sqrt();
    if !(alpha >= 1.0 && alpha < limit) {
        return Err(Error::Domain(format!(
            "α must lie in [1, {limit}) (got {alpha})"
        )));
    }
    let delta = model.delta_psi()?;
    let h = op.mesh().spacing();
    let expo = model.dim() as f64 - 1.0 - 2.0 * alpha;
    let numerator: f64 = face_gradients(op, u)
        .iter()
        .enumerate()
        .map(|(j, g)| (op.mesh().face(j + 1), g))
        .take_while(|(r, _)| *r <= delta)
        .map(|(r, g)| g * g * model.psi(r).powf(expo))
        .sum::<f64>()
        * h;
    let l1 = weighted_lp_norm(op, u, 1.0)?;
    if !(l1 > 0.0) {
        return Err(Error::Domain(
            "key-estimate ratio needs u with nonzero L¹ norm".into(),
        ));
    }
    Ok(numerator / (l1 * l1))
}

/// Fills `lambda1` on every branch point, in parallel across points.
pub fn annotate_branch(
    problem: &RadialProblem,
    branch: &mut Branch,
    opts: &EigenOptions,
) -> Result<()> {
    branch.points.par_iter_mut().try_for_each(|p| {
        let pair = principal_eigenvalue(
            problem.operator(),
            problem.nonlinearity(),
            p.lambda,
            &p.u,
            opts,
        )?;
        p.lambda1 = Some(pair.lambda1);
        Ok(())
    })
}
