//! Newton solves of the discrete problem, natural continuation of the minimal branch in `λ`,
//! and the fold bracket that estimates the extremal parameter.

use std::fmt::Write as _;

use crate::discretization::{assemble_laplacian, weighted_lp_norm, DiscreteOperator, RadialMesh};
use crate::error::{Error, Result};
use crate::format::fmt9;
use crate::geometry::RiemannianModel;
use crate::nonlinearity::Nonlinearity;
use crate::tridiag::Tridiagonal;

/// Header of the branch CSV.
pub const BRANCH_CSV_HEADER: &str = "lambda,sup_u,l1_norm,lambda1,newton_iters";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Abort when `sup u` exceeds this value; `None` picks 500 for exponential laws.
    pub sup_guard: Option<f64>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            max_halvings: 30,
            sup_guard: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub u: Vec<f64>,
    pub iterations: usize,
    /// `‖A u − λ f(u)‖_∞` at the returned iterate.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    /// Initial `λ` step; `None` means `0.05·n`.
    pub step0: Option<f64>,
    pub newton: NewtonOptions,
    /// Stop once the step falls below this fraction of the current `λ`.
    pub step_floor: f64,
    /// Cap on consecutive step halvings.
    pub max_bisections: usize,
    pub growth: f64,
    pub lambda_max: f64,
    pub max_points: usize,
    /// After the `λ` steps stall, walk on toward the fold with `u(r₀)` as the parameter.
    pub fold_polish: bool,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            step0: None,
            newton: NewtonOptions::default(),
            step_floor: 1e-8,
            max_bisections: 40,
            growth: 2.0,
            lambda_max: 1e8,
            max_points: 100_000,
            fold_polish: true,
        }
    }
}

/// One accepted solution on the minimal branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub lambda: f64,
    pub u: Vec<f64>,
    pub sup_u: f64,
    pub l1_norm: f64,
    /// Principal eigenvalue of the linearization, filled in by [`crate::stability`].
    pub lambda1: Option<f64>,
    pub newton_iters: usize,
}

impl BranchPoint {
    /// Positivity and radial monotonicity of `u`, with slack `1e−12·sup u`.
    pub fn check_shape(&self) -> Result<()> {
        check_profile(&self.u, self.lambda)
    }
}

fn check_profile(u: &[f64], lambda: f64) -> Result<()> {
    if lambda == 0.0 {
        return Ok(());
    }
    let sup = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let slack = 1e-12 * sup;
    for (i, &v) in u.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::Invariant(format!(
                "u[{i}] = {v} is not positive at λ = {lambda}"
            )));
        }
    }
    for (i, w) in u.windows(2).enumerate() {
        if w[1] >= w[0] + slack {
            return Err(Error::Invariant(format!(
                "u is not decreasing at node {i}: {} then {} (λ = {lambda})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub lambda_star_estimate: f64,
    /// Last accepted and first failed `λ`.
    pub fold_bracket: (f64, f64),
}

impl Branch {
    pub fn last(&self) -> &BranchPoint {
        self.points
            .last()
            .expect("a branch holds at least the trivial point")
    }

    /// The accepted point whose `λ` is closest to `target`.
    pub fn nearest(&self, target: f64) -> &BranchPoint {
        self.points
            .iter()
            .min_by(|a, b| {
                (a.lambda - target)
                    .abs()
                    .total_cmp(&(b.lambda - target).abs())
            })
            .expect("non-empty branch")
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<BranchRecord> = self.points.iter().map(BranchRecord::from).collect();
        write_branch_csv(&rows, Some(self.lambda_star_estimate))
    }
}

/// A row of a branch CSV read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub lambda: f64,
    pub sup_u: f64,
    pub l1_norm: f64,
    pub lambda1: Option<f64>,
    pub newton_iters: usize,
}

impl From<&BranchPoint> for BranchRecord {
    fn from(p: &BranchPoint) -> Self {
        Self {
            lambda: p.lambda,
            sup_u: p.sup_u,
            l1_norm: p.l1_norm,
            lambda1: p.lambda1,
            newton_iters: p.newton_iters,
        }
    }
}

/// Writes rows under [`BRANCH_CSV_HEADER`] with an optional trailing `# lambda_star_estimate=` line.
pub fn write_branch_csv(rows: &[BranchRecord], estimate: Option<f64>) -> String {
    let mut out = String::new();
    out.push_str(BRANCH_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let l1 = r.lambda1.map(fmt9).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt9(r.lambda),
            fmt9(r.sup_u),
            fmt9(r.l1_norm),
            l1,
            r.newton_iters
        );
    }
    if let Some(e) = estimate {
        let _ = writeln!(out, "# lambda_star_estimate={}", fmt9(e));
    }
    out
}

/// Parses the branch CSV; returns the rows and the trailing `λ*` estimate if present.
pub fn parse_branch_csv(text: &str) -> Result<(Vec<BranchRecord>, Option<f64>)> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == BRANCH_CSV_HEADER => {}
        other => {
            return Err(Error::Domain(format!(
                "unexpected branch CSV header {other:?}"
            )));
        }
    }
    let bad = |line: &str| Error::Domain(format!("malformed branch CSV row {line:?}"));
    let mut rows = Vec::new();
    let mut estimate = None;
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("lambda_star_estimate=") {
                estimate = Some(parse_float(v).ok_or_else(|| bad(line))?);
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 5 {
            return Err(bad(line));
        }
        let num = |s: &str| parse_float(s).ok_or_else(|| bad(line));
        rows.push(BranchRecord {
            lambda: num(fields[0])?,
            sup_u: num(fields[1])?,
            l1_norm: num(fields[2])?,
            lambda1: if fields[3].is_empty() {
                None
            } else {
                Some(num(fields[3])?)
            },
            newton_iters: fields[4].trim().parse().map_err(|_| bad(line))?,
        });
    }
    Ok((rows, estimate))
}

fn parse_float(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Newton counts at or below this let the continuation step grow.
const FAST_NEWTON: usize = 6;

/// Linear extrapolation in `λ` through the last two accepted points, floored by the last one.
fn secant_seed(points: &[BranchPoint], trial: f64) -> Vec<f64> {
    let last = &points[points.len() - 1];
    if points.len() < 2 {
        return last.u.clone();
    }
    let before = &points[points.len() - 2];
    let t = (trial - last.lambda) / (last.lambda - before.lambda);
    last.u
        .iter()
        .zip(&before.u)
        .map(|(&a, &b)| a + t * (a - b).max(0.0))
        .collect()
}

/// The discrete radial problem `A u = λ f(u)` for a fixed model, mesh and nonlinearity.
#[derive(Debug, Clone)]
pub struct RadialProblem {
    op: DiscreteOperator,
    nl: Nonlinearity,
}

impl RadialProblem {
    pub fn new(model: &RiemannianModel, mesh: &RadialMesh, nl: Nonlinearity) -> Result<Self> {
        Ok(Self {
            op: assemble_laplacian(model, mesh)?,
            nl,
        })
    }

    pub fn from_operator(op: DiscreteOperator, nl: Nonlinearity) -> Self {
        Self { op, nl }
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.op
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn model(&self) -> &RiemannianModel {
        self.op.model()
    }

    fn sup_guard(&self, opts: &NewtonOptions) -> f64 {
        opts.sup_guard
            .unwrap_or(if self.nl.kind().is_exponential() {
                500.0
            } else {
                1e12
            })
    }

    /// `A u − λ f(u)` and `λ‖f(u)‖_∞`.
    pub fn residual(&self, lambda: f64, u: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut r = self.op.apply(u);
        let mut reaction_sup: f64 = 0.0;
        for (ri, &ui) in r.iter_mut().zip(u) {
            let f = lambda * self.nl.eval(ui)?;
            reaction_sup = reaction_sup.max(f.abs());
            *ri -= f;
        }
        Ok((r, reaction_sup))
    }

    /// `A − λ diag(f'(u))`.
    pub fn jacobian(&self, lambda: f64, u: &[f64]) -> Result<Tridiagonal> {
        let mut j = self.op.matrix().clone();
        for (d, &ui) in j.diag.iter_mut().zip(u) {
            *d -= lambda * self.nl.eval_prime(ui)?;
        }
        Ok(j)
    }

    /// Damped Newton iteration from `u0`.
    ///
    /// Converged when `‖A u − λ f(u)‖_∞ ≤ tol·(1 + λ‖f(u)‖_∞)` or when a full Newton
    /// correction satisfies `‖δ‖_∞ ≤ tol·(1 + ‖u‖_∞)`; the latter is the operative test on
    /// fine meshes, where the `1/h²` stencil puts a rounding floor under the raw residual.
    pub fn newton_solve(
        &self,
        lambda: f64,
        u0: &[f64],
        opts: &NewtonOptions,
    ) -> Result<NewtonOutcome> {
        if !(opts.tol > 0.0) {
            return Err(Error::Domain(format!(
                "Newton tolerance must be positive (got {})",
                opts.tol
            )));
        }
        if u0.len() != self.op.len() || u0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(
                "initial guess must be finite and match the mesh".into(),
            ));
        }
        let guard = self.sup_guard(opts);
        let mut u = u0.to_vec();
        let (mut res, mut reaction) = self.residual(lambda, &u)?;
        let mut res_norm = sup_norm(&res);
        for iter in 0..=opts.max_iter {
            if res_norm <= opts.tol * (1.0 + reaction) {
                return Ok(NewtonOutcome {
                    u,
                    iterations: iter,
                    residual: res_norm,
                });
            }
            if iter == opts.max_iter {
                break;
            }
            let jac = self.jacobian(lambda, &u)?;
            let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
            let delta = jac.solve(&rhs)?;
            let delta_norm = sup_norm(&delta);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..=opts.max_halvings {
                let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
                if sup_norm(&trial) > guard {
                    return Err(Error::NoConvergence(format!(
                        "sup u exceeded the guard {guard} at λ = {lambda}"
                    )));
                }
                if let Ok((r_trial, reaction_trial)) = self.residual(lambda, &trial) {
                    let n_trial = sup_norm(&r_trial);
                    let small_step = t == 1.0 && delta_norm <= opts.tol * (1.0 + sup_norm(&trial));
                    if n_trial.is_finite() && (n_trial <= res_norm || small_step) {
                        u = trial;
                        res = r_trial;
                        res_norm = n_trial;
                        reaction = reaction_trial;
                        accepted = true;
                        if small_step {
                            return Ok(NewtonOutcome {
                                u,
                                iterations: iter + 1,
                                residual: res_norm,
                            });
                        }
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                return Err(Error::NoConvergence(format!(
                    "line search failed after {} halvings at λ = {lambda}",
                    opts.max_halvings
                )));
            }
        }
        Err(Error::NoConvergence(format!(
            "Newton did not converge in {} iterations at λ = {lambda} (residual {res_norm:e})",
            opts.max_iter
        )))
    }

    /// Picard iteration `u ← A⁻¹(λ f(u))` from `u = 0`: the monotone minimal-solution oracle.
    pub fn monotone_iteration(&self, lambda: f64, tol: f64) -> Result<Vec<f64>> {
        const MAX_ITER: usize = 200_000;
        let guard = self.sup_guard(&NewtonOptions::default());
        let mut u = vec![0.0; self.op.len()];
        if lambda == 0.0 {
            return Ok(u);
        }
        for _ in 0..MAX_ITER {
            let rhs = self.op.reaction(&self.nl, lambda, &u)?;
            let next = self.op.matrix().solve(&rhs)?;
            let sup = sup_norm(&next);
            if sup > guard || !sup.is_finite() {
                return Err(Error::NoConvergence(format!(
                    "monotone iteration exceeded sup u = {guard} at λ = {lambda}"
                )));
            }
            let change = u
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            u = next;
            if change <= tol * (1.0 + sup) {
                return Ok(u);
            }
        }
        Err(Error::NoConvergence(format!(
            "monotone iteration did not settle in {MAX_ITER} sweeps at λ = {lambda}"
        )))
    }

    /// Whether the linearization at `u` has no negative eigenvalue (Sturm count at zero).
    pub fn is_stable(&self, lambda: f64, u: &[f64]) -> Result<bool> {
        let shift: Vec<f64> = u
            .iter()
            .map(|&v| self.nl.eval_prime(v).map(|d| -lambda * d))
            .collect::<Result<_>>()?;
        Ok(self.op.symmetrized(Some(&shift)).count_below(0.0) == 0)
    }

    fn make_point(&self, lambda: f64, u: Vec<f64>, newton_iters: usize) -> Result<BranchPoint> {
        let l1_norm = weighted_lp_norm(&self.op, &u, 1.0)?;
        Ok(BranchPoint {
            lambda,
            sup_u: sup_norm(&u),
            u,
            l1_norm,
            lambda1: None,
            newton_iters,
        })
    }

    /// Damped Newton for `(λ, u)` with `u₀ = s` held fixed (bordered system).
    ///
    /// With `J a = −f(u)` and `J b = −F`, the correction is `δu = b − δλ a`, `δλ = b₀/a₀`;
    /// this stays well posed through a fold of `λ ↦ u`, where `J` alone is singular.
    pub fn newton_pinned(
        &self,
        s: f64,
        u0: &[f64],
        lambda0: f64,
        opts: &NewtonOptions,
    ) -> Result<(NewtonOutcome, f64)> {
        let guard = self.sup_guard(opts);
        let mut u = u0.to_vec();
        u[0] = s;
        let mut lambda = lambda0;
        let (mut res, mut reaction) = self.residual(lambda, &u)?;
        let mut res_norm = sup_norm(&res);
        for iter in 0..=opts.max_iter {
            if res_norm <= opts.tol * (1.0 + reaction) {
                return Ok((
                    NewtonOutcome {
                        u,
                        iterations: iter,
                        residual: res_norm,
                    },
                    lambda,
                ));
            }
            if iter == opts.max_iter {
                break;
            }
            let jac = self.jacobian(lambda, &u)?;
            let f_lambda: Vec<f64> = u
                .iter()
                .map(|&v| self.nl.eval(v).map(|f| -f))
                .collect::<Result<_>>()?;
            let a = jac.solve(&f_lambda)?;
            let b = jac.solve(&res.iter().map(|v| -v).collect::<Vec<_>>())?;
            if a[0] == 0.0 || !a[0].is_finite() {
                return Err(Error::SingularJacobian {
                    row: 0,
                    pivot: a[0],
                });
            }
            let d_lambda = b[0] / a[0];
            let mut delta: Vec<f64> = b
                .iter()
                .zip(&a)
                .map(|(bi, ai)| bi - d_lambda * ai)
                .collect();
            delta[0] = 0.0;
            let small_step = sup_norm(&delta) <= opts.tol * (1.0 + sup_norm(&u))
                && d_lambda.abs() <= opts.tol * (1.0 + lambda);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..=opts.max_halvings {
                let trial: Vec<f64> = u.iter().zip(&delta).map(|(x, d)| x + t * d).collect();
                let trial_lambda = lambda + t * d_lambda;
                if sup_norm(&trial) <= guard {
                    if let Ok((r_trial, reaction_trial)) = self.residual(trial_lambda, &trial) {
                        let n_trial = sup_norm(&r_trial);
                        let small = t == 1.0 && small_step;
                        if n_trial.is_finite() && (n_trial <= res_norm || small) {
                            u = trial;
                            lambda = trial_lambda;
                            res = r_trial;
                            res_norm = n_trial;
                            reaction = reaction_trial;
                            accepted = true;
                            if small {
                                return Ok((
                                    NewtonOutcome {
                                        u,
                                        iterations: iter + 1,
                                        residual: res_norm,
                                    },
                                    lambda,
                                ));
                            }
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                return Err(Error::NoConvergence(format!(
                    "pinned line search failed at u₀ = {s}"
                )));
            }
        }
        Err(Error::NoConvergence(format!(
            "pinned Newton did not converge at u₀ = {s}"
        )))
    }

    /// Raises `u₀` in adaptive steps from the last accepted point. A trial is accepted only if
    /// it is stable, raises `λ`, and lies pointwise above its predecessor; rejection halves the
    /// `u₀` step, so the walk settles just below the fold instead of crossing it.
    fn polish_fold(&self, points: &mut Vec<BranchPoint>, opts: &ContinuationOptions) -> Result<()> {
        let start = points.last().expect("non-empty").u[0];
        let mut step = 1e-6 * (1.0 + start.abs());
        let mut halvings = 0;
        while halvings < opts.max_bisections && points.len() < opts.max_points {
            let prev = points.last().expect("non-empty");
            let s = prev.u[0] + step;
            if step < 1e-14 * (1.0 + s.abs()) {
                break;
            }
            let accepted = match self.newton_pinned(s, &prev.u, prev.lambda, &opts.newton) {
                Ok((out, lam)) => {
                    lam > prev.lambda
                        && self.is_stable(lam, &out.u)?
                        && check_profile(&out.u, lam).is_ok()
                        && prev.u.iter().zip(&out.u).all(|(a, b)| *b >= *a - 1e-10)
                        && {
                            let point = self.make_point(lam, out.u, out.iterations)?;
                            points.push(point);
                            true
                        }
                }
                Err(Error::NoConvergence(_))
                | Err(Error::SingularJacobian { .. })
                | Err(Error::Overflow(_)) => false,
                Err(e) => return Err(e),
            };
            if accepted {
                halvings = 0;
                step *= opts.growth;
            } else {
                halvings += 1;
                step *= 0.5;
            }
        }
        Ok(())
    }

    /// Newton solve at `lambda` seeded by the accepted point of `branch` just below it.
    pub fn solve_near(
        &self,
        branch: &Branch,
        lambda: f64,
        opts: &NewtonOptions,
    ) -> Result<BranchPoint> {
        let seed = branch
            .points
            .iter()
            .rev()
            .find(|p| p.lambda <= lambda)
            .ok_or_else(|| Error::Domain(format!("no branch point at or below λ = {lambda}")))?;
        let out = self.newton_solve(lambda, &seed.u, opts)?;
        if !self.is_stable(lambda, &out.u)? {
            return Err(Error::NoConvergence(format!(
                "unstable solution at λ = {lambda}"
            )));
        }
        check_profile(&out.u, lambda)?;
        self.make_point(lambda, out.u, out.iterations)
    }

    /// Re-solves a recorded branch from its `(λ, sup u)` pairs, pinning `u(r₀) = sup u`.
    ///
    /// Pinning the peak instead of `λ` keeps the solves well posed where rounded `λ` values
    /// collide or sit marginally past the fold; the returned `λ` are the solved ones.
    pub fn retrace(
        &self,
        samples: &[(f64, f64)],
        opts: &NewtonOptions,
    ) -> Result<Vec<BranchPoint>> {
        if samples.windows(2).any(|w| w[1].1 < w[0].1) || samples.iter().any(|s| !(s.1 >= 0.0)) {
            return Err(Error::Domain(
                "retrace needs nonnegative, nondecreasing sup u".into(),
            ));
        }
        let mut points: Vec<BranchPoint> = Vec::with_capacity(samples.len());
        for &(lambda, sup) in samples {
            if sup == 0.0 {
                points.push(self.make_point(0.0, vec![0.0; self.op.len()], 0)?);
                continue;
            }
            let seed: Vec<f64> = match points.last() {
                Some(p) if p.u[0] > 0.0 => p.u.iter().map(|v| v * sup / p.u[0]).collect(),
                _ => self
                    .op
                    .mesh()
                    .sample(|r| sup * (1.0 - (r / self.op.mesh().radius()).powi(2))),
            };
            let (out, solved) = self.newton_pinned(sup, &seed, lambda, opts)?;
            check_profile(&out.u, solved)?;
            points.push(self.make_point(solved, out.u, out.iterations)?);
        }
        Ok(points)
    }

    /// Natural continuation from `(λ, u) = (0, 0)` until the step collapses at the fold.
    ///
    /// Each trial is seeded by secant extrapolation from the last two accepted points. A Newton
    /// failure, or convergence to a solution whose linearization has a negative eigenvalue,
    /// halves the step; two consecutive cheap successes grow it again, so failures far from
    /// the seed are retried from closer points. The run
    /// ends when the step drops below `step_floor·λ`, leaving the fold between the last
    /// accepted and the last failed `λ`.
    pub fn continue_branch(&self, opts: &ContinuationOptions) -> Result<Branch> {
        let step0 = opts.step0.unwrap_or(0.05 * self.model().dim() as f64);
        if !(step0 > 0.0) {
            return Err(Error::Domain(format!(
                "initial step must be positive (got {step0})"
            )));
        }
        let mut points = vec![self.make_point(0.0, vec![0.0; self.op.len()], 0)?];
        let mut lambda: f64 = 0.0;
        let mut step = step0;
        let mut lambda_fail = f64::INFINITY;
        let mut halvings = 0;
        let mut streak = 0usize;
        loop {
            if step < opts.step_floor * lambda.max(step0) || halvings >= opts.max_bisections {
                break;
            }
            if points.len() >= opts.max_points || lambda > opts.lambda_max {
                return Err(Error::NoConvergence(format!(
                    "no fold located below λ = {lambda} after {} points",
                    points.len()
                )));
            }
            let trial = lambda + step;
            let prev = &points.last().expect("non-empty").u;
            let seed = secant_seed(&points, trial);
            let attempt = self
                .newton_solve(trial, &seed, &opts.newton)
                .and_then(|out| match self.is_stable(trial, &out.u)? {
                    true => Ok(out),
                    false => Err(Error::NoConvergence(format!(
                        "unstable solution at λ = {trial}"
                    ))),
                });
            match attempt {
                Ok(out) => {
                    check_profile(&out.u, trial)?;
                    if let Some((i, (a, b))) = prev
                        .iter()
                        .zip(&out.u)
                        .enumerate()
                        .find(|(_, (a, b))| **b < **a - 1e-10)
                    {
                        return Err(Error::Invariant(format!(
                            "branch not pointwise increasing at node {i}: {a} → {b} (λ = {trial})"
                        )));
                    }
                    let iters = out.iterations;
                    points.push(self.make_point(trial, out.u, iters)?);
                    lambda = trial;
                    halvings = 0;
                    streak += 1;
                    if streak >= 2 && iters <= FAST_NEWTON {
                        step *= opts.growth;
                    }
                }
                Err(Error::NoConvergence(_))
                | Err(Error::SingularJacobian { .. })
                | Err(Error::Overflow(_)) => {
                    lambda_fail = trial;
                    halvings += 1;
                    streak = 0;
                    step *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        if points.len() == 1 {
            return Err(Error::NoConvergence(
                "no branch point accepted beyond λ = 0".into(),
            ));
        }
        if opts.fold_polish && lambda_fail.is_finite() {
            self.polish_fold(&mut points, opts)?;
            lambda = points.last().expect("non-empty").lambda;
            // The polish can walk past a λ where the natural step had failed from too far away.
            lambda_fail = lambda_fail.max(lambda);
        }
        let fold_bracket = (lambda, lambda_fail);
        let lambda_star_estimate = if lambda_fail.is_finite() {
            0.5 * (lambda + lambda_fail)
        } else {
            lambda
        };
        Ok(Branch {
            points,
            lambda_star_estimate,
            fold_bracket,
        })
    }
}
