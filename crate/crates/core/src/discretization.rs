//! Cell-centred radial mesh, the flux-form discretization of `−(ψ^{n−1} u_r)_r / ψ^{n−1}`,
//! and weighted quadrature on the geodesic ball.
//!
//! Nodes sit at `r_i = (i + ½)h` with `h = R/(N + ½)`, so no node touches the origin and
//! the Dirichlet node `r_N = R` closes the last cell. Fluxes live on the faces `r_{i+½} = (i+1)h`;
//! the face at the origin carries zero flux, which realizes `u_r(0) = 0`.

use crate::error::{Error, Result};
use crate::geometry::{sphere_area, RiemannianModel};
use crate::nonlinearity::Nonlinearity;
use crate::quadrature::gauss_legendre;
use crate::tridiag::{SymTridiagonal, Tridiagonal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialMesh {
    cells: usize,
    radius: f64,
    h: f64,
}

impl RadialMesh {
    pub fn new(radius: f64, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::Domain(format!(
                "mesh needs at least 2 interior nodes (got {cells})"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!(
                "mesh radius must be positive (got {radius})"
            )));
        }
        Ok(Self {
            cells,
            radius,
            h: radius / (cells as f64 + 0.5),
        })
    }

    /// Number of unknowns `N`.
    pub fn len(&self) -> usize {
        self.cells
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Node `r_i = (i + ½)h`, `i < N`; `node(N) = R` is the Dirichlet node.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i == self.cells {
            self.radius
        } else {
            (i as f64 + 0.5) * self.h
        }
    }

    /// Face `j·h` between nodes `j−1` and `j`, for `j = 0..=N`.
    #[inline]
    pub fn face(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.node(i)).collect()
    }

    /// Samples `g` on the interior nodes.
    pub fn sample<F: Fn(f64) -> f64>(&self, g: F) -> Vec<f64> {
        (0..self.cells).map(|i| g(self.node(i))).collect()
    }
}

/// Discrete `−Δ_g` on radial functions with its inner-product weights.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    model: RiemannianModel,
    mesh: RadialMesh,
    /// `ψ(jh)^{n−1}/h²` for `j = 0..=N`; `conductance[0] = 0`.
    conductance: Vec<f64>,
    /// Cell averages `h⁻¹∫_{ih}^{(i+1)h} ψ^{n−1}`; the operator is symmetric in `Σ wᵢ uᵢ vᵢ`.
    weights: Vec<f64>,
    /// Quadrature weights: the cell weights with the last half-cell `[Nh, R]` folded into node `N−1`.
    quad_weights: Vec<f64>,
    matrix: Tridiagonal,
    sphere: f64,
}

/// Assembles the flux-form operator
/// `(A u)_i = [c_i(u_i − u_{i−1}) + c_{i+1}(u_i − u_{i+1})] / w_i`, `c_j = ψ(jh)^{n−1}/h²`,
/// with `c_0 = 0` at the origin and the ghost value `u_N = 0` at `r = R`.
///
/// The weights `w_i` are exact cell integrals of the volume density rather than point values
/// `ψ(r_i)^{n−1}`; point values are inconsistent in the first cell (by a factor `2^{n−1}/n`).
pub fn assemble_laplacian(model: &RiemannianModel, mesh: &RadialMesh) -> Result<DiscreteOperator> {
    if (mesh.radius() - model.radius()).abs() > 1e-12 * model.radius() {
        return Err(Error::Domain(format!(
            "mesh radius {} differs from the model radius {}",
            mesh.radius(),
            model.radius()
        )));
    }
    let n_cells = mesh.len();
    let h = mesh.spacing();
    let mut conductance = vec![0.0; n_cells + 1];
    for (j, c) in conductance.iter_mut().enumerate().skip(1) {
        let r = mesh.face(j);
        let psi = model.psi(r);
        if !(psi > 0.0) {
            return Err(Error::Geometry(format!(
                "ψ({r}) = {psi} is not positive on a flux face"
            )));
        }
        *c = model.volume_density(r) / (h * h);
    }
    let density = |r: f64| model.volume_density(r);
    let weights: Vec<f64> = (0..n_cells)
        .map(|i| gauss_legendre(density, mesh.face(i), mesh.face(i + 1)) / h)
        .collect();
    let mut quad_weights = weights.clone();
    quad_weights[n_cells - 1] += gauss_legendre(density, mesh.face(n_cells), mesh.radius()) / h;

    let mut sub = vec![0.0; n_cells];
    let mut diag = vec![0.0; n_cells];
    let mut sup = vec![0.0; n_cells];
    for i in 0..n_cells {
        let w = weights[i];
        diag[i] = (conductance[i] + conductance[i + 1]) / w;
        sub[i] = -conductance[i] / w;
        if i + 1 < n_cells {
            sup[i] = -conductance[i + 1] / w;
        }
    }
    Ok(DiscreteOperator {
        model: model.clone(),
        mesh: *mesh,
        conductance,
        weights,
        quad_weights,
        matrix: Tridiagonal { sub, diag, sup },
        sphere: sphere_area(model.dim()),
    })
}

impl DiscreteOperator {
    pub fn model(&self) -> &RiemannianModel {
        &self.model
    }

    pub fn mesh(&self) -> &RadialMesh {
        &self.mesh
    }

    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn matrix(&self) -> &Tridiagonal {
        &self.matrix
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn conductance(&self) -> &[f64] {
        &self.conductance
    }

    /// `ω_{n−1}`.
    pub fn sphere_area(&self) -> f64 {
        self.sphere
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.matrix.apply(u, &mut out);
        out
    }

    /// `h Σ wᵢ uᵢ vᵢ`: the radial `L²(ψ^{n−1} dr)` product in the operator weights.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let h = self.mesh.spacing();
        self.weights
            .iter()
            .zip(u)
            .zip(v)
            .map(|((w, a), b)| w * a * b)
            .sum::<f64>()
            * h
    }

    /// Discrete `∫₀ᴿ ψ^{n−1} ξ_r² dr` with `ξ(R) = 0`; equals `h⟨ξ, Aξ⟩_w`.
    pub fn dirichlet_energy(&self, xi: &[f64]) -> f64 {
        let h = self.mesh.spacing();
        let n = xi.len();
        let mut acc = 0.0;
        for j in 1..=n {
            let right = if j < n { xi[j] } else { 0.0 };
            let d = right - xi[j - 1];
            acc += self.conductance[j] * d * d;
        }
        acc * h
    }

    /// `D^{1/2} A D^{−1/2}` with the diagonal shifted by `extra[i]` (e.g. `−λ f'(u_i)`).
    pub fn symmetrized(&self, extra: Option<&[f64]>) -> SymTridiagonal {
        let n = self.len();
        let diag = (0..n)
            .map(|i| self.matrix.diag[i] + extra.map_or(0.0, |e| e[i]))
            .collect();
        let off = (0..n.saturating_sub(1))
            .map(|i| -self.conductance[i + 1] / (self.weights[i] * self.weights[i + 1]).sqrt())
            .collect();
        SymTridiagonal { diag, off }
    }

    /// Node values of `λ f(u)`.
    pub fn reaction(&self, nl: &Nonlinearity, lambda: f64, u: &[f64]) -> Result<Vec<f64>> {
        u.iter().map(|&v| nl.eval(v).map(|f| lambda * f)).collect()
    }
}

/// `Δ_g` of a radial function from its derivatives: `u'' + (n−1)(ψ'/ψ)u'`.
#[inline]
pub fn radial_laplacian(model: &RiemannianModel, r: f64, du: f64, d2u: f64) -> f64 {
    d2u + (model.dim() as f64 - 1.0) * model.psi_prime(r) / model.psi(r) * du
}

/// `(ω_{n−1} Σ |uᵢ|^p qᵢ h)^{1/p}`, or `max |uᵢ|` for `p = ∞`.
pub fn weighted_lp_norm(op: &DiscreteOperator, u: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("L^p norm needs p ≥ 1 (got {p})")));
    }
    if p.is_infinite() {
        return Ok(u.iter().fold(0.0, |a, v| a.max(v.abs())));
    }
    let h = op.mesh.spacing();
    let sum: f64 = op
        .quad_weights
        .iter()
        .zip(u)
        .map(|(q, v)| q * v.abs().powf(p))
        .sum();
    Ok((op.sphere * sum * h).powf(1.0 / p))
}

/// Node gradient by centred differences; mirror `u_{−1} = u_0` at the origin, one-sided at the last node.
pub fn node_gradient(op: &DiscreteOperator, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let h = op.mesh.spacing();
    (0..n)
        .map(|i| {
            if i + 1 == n {
                (u[i] - u[i - 1]) / h
            } else {
                let left = if i == 0 { u[0] } else { u[i - 1] };
                (u[i + 1] - left) / (2.0 * h)
            }
        })
        .collect()
}

/// `|u|_{W^{1,p}}`: the weighted `L^p` norm of the centred-difference gradient.
pub fn weighted_w1p_seminorm(op: &DiscreteOperator, u: &[f64], p: f64) -> Result<f64> {
    weighted_lp_norm(op, &node_gradient(op, u), p)
}

/// `(‖u‖_p^p + |u|_{1,p}^p)^{1/p}`.
pub fn weighted_w1p_norm(op: &DiscreteOperator, u: &[f64], p: f64) -> Result<f64> {
    let a = weighted_lp_norm(op, u, p)?;
    let b = weighted_w1p_seminorm(op, u, p)?;
    if p.is_infinite() {
        Ok(a.max(b))
    } else {
        Ok((a.powf(p) + b.powf(p)).powf(1.0 / p))
    }
}

/// How `Δ_g ξ` is evaluated in [`weak_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaplacianRoute {
    /// Closed-form derivatives of the test functions, quadrature weights.
    #[default]
    Analytic,
    /// The assembled operator applied to the sampled test functions, operator weights.
    Discrete,
}

/// Polynomial bump `(1 − (r/R)²)^k` with its first two derivatives.
pub fn bump(k: u32, radius: f64, r: f64) -> (f64, f64, f64) {
    let s = 1.0 - (r / radius).powi(2);
    let kf = k as f64;
    let ds = -2.0 * r / (radius * radius);
    let dds = -2.0 / (radius * radius);
    let v = s.powi(k as i32);
    let dv = kf * s.powi(k as i32 - 1) * ds;
    let ddv = kf * (kf - 1.0) * s.powi(k as i32 - 2) * ds * ds + kf * s.powi(k as i32 - 1) * dds;
    (v, dv, ddv)
}

/// Very-weak residual `max_k |∫ u Δ_g ξ_k + λ∫ f(u) ξ_k| / (∫|u Δ_g ξ_k| + λ∫|f(u) ξ_k|)`
/// over the bumps `ξ_k = (1 − (r/R)²)^k`, `k = 2..=family_size+1`.
pub fn weak_residual(
    op: &DiscreteOperator,
    u: &[f64],
    lambda: f64,
    nl: &Nonlinearity,
    family_size: usize,
    route: LaplacianRoute,
) -> Result<f64> {
    let mesh = op.mesh;
    let radius = mesh.radius();
    let fu: Vec<f64> = u.iter().map(|&v| nl.eval(v)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for k in 2..=(family_size as u32 + 1) {
        let xi: Vec<f64> = mesh.sample(|r| bump(k, radius, r).0);
        let (lap, weights): (Vec<f64>, &[f64]) = match route {
            LaplacianRoute::Analytic => (
                mesh.sample(|r| {
                    let (_, d, dd) = bump(k, radius, r);
                    radial_laplacian(&op.model, r, d, dd)
                }),
                &op.quad_weights,
            ),
            LaplacianRoute::Discrete => {
                (op.apply(&xi).into_iter().map(|v| -v).collect(), &op.weights)
            }
        };
        let (mut diffusion, mut reaction, mut scale) = (0.0, 0.0, 0.0);
        for i in 0..u.len() {
            let a = u[i] * lap[i] * weights[i];
            let b = lambda * fu[i] * xi[i] * weights[i];
            diffusion += a;
            reaction += b;
            scale += a.abs() + b.abs();
        }
        if scale > 0.0 {
            worst = worst.max((diffusion + reaction).abs() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelKind;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn operator(kind: ModelKind, n: usize, radius: f64, cells: usize) -> DiscreteOperator {
        let model = RiemannianModel::space_form(kind, n, radius).unwrap();
        assemble_laplacian(&model, &RadialMesh::new(radius, cells).unwrap()).unwrap()
    }

    fn orders(errors: &[f64]) -> Vec<f64> {
        errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
    }

    /// Max node error of `A u` against `−Δ_g u` for `u` given with its derivatives.
    fn operator_error<F: Fn(f64) -> (f64, f64, f64)>(op: &DiscreteOperator, u: F) -> f64 {
        let mesh = op.mesh();
        let au = op.apply(&mesh.sample(|r| u(r).0));
        (0..op.len())
            .map(|i| {
                let r = mesh.node(i);
                let (_, d, dd) = u(r);
                (au[i] + radial_laplacian(op.model(), r, d, dd)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn mesh_layout() {
        let mesh = RadialMesh::new(2.0, 7).unwrap();
        let h = mesh.spacing();
        assert!((mesh.node(0) - h / 2.0).abs() < 1e-15);
        assert!((mesh.node(6) + h / 2.0 - mesh.face(7)).abs() < 1e-15);
        assert!((mesh.face(7) + h / 2.0 - 2.0).abs() < 1e-15);
        assert_eq!(mesh.node(7), 2.0);
        assert!(mesh
            .nodes()
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() < 1e-14));
        assert!(RadialMesh::new(1.0, 1).is_err());
        assert!(RadialMesh::new(0.0, 10).is_err());
    }

    #[test]
    fn coefficients_are_weight_symmetric() {
        for kind in [
            ModelKind::Euclidean,
            ModelKind::Hyperbolic,
            ModelKind::Elliptic,
        ] {
            let op = operator(kind, 5, 1.0, 64);
            let (a, w) = (op.matrix(), op.weights());
            for i in 0..op.len() - 1 {
                let (l, r) = (w[i] * a.sup[i], w[i + 1] * a.sub[i + 1]);
                assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0), "{kind}: row {i}");
            }
        }
    }

    #[test]
    fn constants_only_feel_the_boundary_row() {
        let op = operator(ModelKind::Hyperbolic, 4, 1.0, 32);
        let au = op.apply(&vec![1.0; 32]);
        assert!(au[..31].iter().all(|v| v.abs() < 1e-9));
        let last = op.conductance()[32] / op.weights()[31];
        assert!((au[31] - last).abs() < 1e-9 * last);
        assert!(op.apply(&vec![0.0; 32]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn euclidean_paraboloid() {
        let errs: Vec<f64> = [32, 64, 128, 256]
            .iter()
            .map(|&c| {
                let op = operator(ModelKind::Euclidean, 3, 1.0, c);
                let au = op.apply(&op.mesh().sample(|r| 1.0 - r * r));
                au.iter().map(|v| (v - 6.0).abs()).fold(0.0, f64::max)
            })
            .collect();
        // The stencil is exact on quadratics, so only rounding remains.
        assert!(errs.iter().all(|&e| e < 1e-9), "{errs:?}");
    }

    #[test]
    fn hyperbolic_cosh_profile() {
        let radius: f64 = 1.0;
        let errs: Vec<f64> = [32, 64, 128, 256]
            .iter()
            .map(|&c| {
                let op = operator(ModelKind::Hyperbolic, 10, radius, c);
                let au = op.apply(&op.mesh().sample(|r| radius.cosh() - r.cosh()));
                let mesh = op.mesh();
                // −Δ_g(cosh R − cosh r) = cosh r + 9 cosh r for n = 10.
                (0..c)
                    .map(|i| (au[i] - 10.0 * mesh.node(i).cosh()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(orders(&errs).iter().all(|&p| p >= 1.9), "{errs:?}");
    }

    #[test]
    fn second_order_on_all_space_forms() {
        let radius = 1.2;
        let u = |r: f64| {
            let s = radius * radius - r * r;
            (s * s, -4.0 * r * s, -4.0 * s + 8.0 * r * r)
        };
        for kind in [
            ModelKind::Euclidean,
            ModelKind::Hyperbolic,
            ModelKind::Elliptic,
        ] {
            let errs: Vec<f64> = [32, 64, 128, 256]
                .iter()
                .map(|&c| operator_error(&operator(kind, 6, radius, c), u))
                .collect();
            assert!(orders(&errs).iter().all(|&p| p >= 1.9), "{kind}: {errs:?}");
        }
    }

    #[test]
    fn ball_volumes() {
        let radius: f64 = 0.8;
        let exact = [
            (ModelKind::Euclidean, 4.0 * PI / 3.0 * radius.powi(3)),
            (
                ModelKind::Hyperbolic,
                2.0 * PI * (radius.sinh() * radius.cosh() - radius),
            ),
            (
                ModelKind::Elliptic,
                2.0 * PI * (radius - radius.sin() * radius.cos()),
            ),
        ];
        for (kind, volume) in exact {
            let errs: Vec<f64> = [16, 32, 64, 128]
                .iter()
                .map(|&c| {
                    let op = operator(kind, 3, radius, c);
                    (weighted_lp_norm(&op, &vec![1.0; c], 1.0).unwrap() - volume).abs()
                })
                .collect();
            assert!(errs.iter().all(|&e| e < 1e-10 * volume), "{kind}: {errs:?}");
        }
        assert_eq!(
            weighted_lp_norm(&operator(ModelKind::Euclidean, 3, 1.0, 16), &[0.0; 16], 2.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn norms() {
        let op = operator(ModelKind::Euclidean, 3, 1.0, 512);
        let u = op.mesh().sample(|r| r);
        let g = weighted_w1p_seminorm(&op, &u, 2.0).unwrap();
        assert!((g - (4.0 * PI / 3.0).sqrt()).abs() < 1e-3, "{g}");
        assert_eq!(
            weighted_w1p_seminorm(&op, &vec![3.0; 512], 2.0).unwrap(),
            0.0
        );
        let full = weighted_w1p_norm(&op, &u, 2.0).unwrap();
        let l2 = weighted_lp_norm(&op, &u, 2.0).unwrap();
        assert!((full * full - g * g - l2 * l2).abs() < 1e-12);
        assert_eq!(
            weighted_lp_norm(&op, &u, f64::INFINITY).unwrap(),
            op.mesh().node(511)
        );
        assert!(weighted_lp_norm(&op, &u, 0.5).is_err());
    }

    #[test]
    fn weak_residual_of_the_hyperbolic_extremal_decreases() {
        let model = RiemannianModel::space_form(ModelKind::Hyperbolic, 10, 1.0).unwrap();
        let nl = Nonlinearity::exp_model(&model).unwrap();
        let sinh_r: f64 = 1f64.sinh();
        let res: Vec<f64> = [256, 512, 1024, 2048]
            .iter()
            .map(|&c| {
                let op = assemble_laplacian(&model, &RadialMesh::new(1.0, c).unwrap()).unwrap();
                let u = op.mesh().sample(|r| -2.0 * (r.sinh() / sinh_r).ln());
                weak_residual(&op, &u, 16.0, &nl, 4, LaplacianRoute::Analytic).unwrap()
            })
            .collect();
        assert!(orders(&res).iter().all(|&p| p >= 1.0), "{res:?}");
    }

    #[test]
    fn weak_residual_of_a_constant() {
        // The bumps have zero flux at R for k ≥ 2, so ∫ψ^{n−1}Δξ vanishes and only quadrature error remains.
        let model = RiemannianModel::space_form(ModelKind::Euclidean, 3, 1.0).unwrap();
        let nl = Nonlinearity::gelfand();
        let res: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&c| {
                let op = assemble_laplacian(&model, &RadialMesh::new(1.0, c).unwrap()).unwrap();
                weak_residual(&op, &vec![1.0; c], 0.0, &nl, 3, LaplacianRoute::Analytic).unwrap()
            })
            .collect();
        assert!(
            res[2] < 1e-3 && orders(&res).iter().all(|&p| p >= 1.9),
            "{res:?}"
        );
    }

    #[test]
    fn discrete_solution_is_galerkin_orthogonal() {
        let model = RiemannianModel::space_form(ModelKind::Euclidean, 3, 1.0).unwrap();
        let op = assemble_laplacian(&model, &RadialMesh::new(1.0, 128).unwrap()).unwrap();
        let rhs = vec![2.0; 128];
        let u = op.matrix().solve(&rhs).unwrap();
        let mut worst: f64 = 0.0;
        for k in 2..=4 {
            let xi = op.mesh().sample(|r| bump(k, 1.0, r).0);
            let axi = op.apply(&xi);
            let lhs = op.inner(&u, &axi);
            let rhs_int = op.inner(&rhs, &xi);
            worst = worst.max((lhs - rhs_int).abs() / rhs_int.abs());
        }
        assert!(worst < 1e-12, "{worst}");
    }

    proptest! {
        #[test]
        fn operator_is_self_adjoint(seed in prop::collection::vec(-1.0f64..1.0, 80)) {
            let op = operator(ModelKind::Hyperbolic, 7, 1.5, 40);
            let (u, v) = seed.split_at(40);
            let lhs = op.inner(&op.apply(u), v);
            let rhs = op.inner(u, &op.apply(v));
            let scale = op.inner(u, u).sqrt() * op.inner(v, v).sqrt() * op.matrix().inf_norm();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }

        #[test]
        fn energy_matches_the_operator(seed in prop::collection::vec(-1.0f64..1.0, 30)) {
            let op = operator(ModelKind::Elliptic, 4, 1.0, 30);
            let e = op.dirichlet_energy(&seed);
            let q = op.inner(&seed, &op.apply(&seed));
            prop_assert!((e - q).abs() <= 1e-10 * e.abs().max(1.0));
        }
    }
}
