//! Shared fixtures for the criterion benchmarks.

use semistable::{ModelKind, Nonlinearity, RadialMesh, RadialProblem, RiemannianModel};

/// Hyperbolic ball `n = 10`, `R = 1`, with the exponential model nonlinearity on `cells` nodes.
pub fn hyperbolic_exp_problem(cells: usize) -> RadialProblem {
    let model = RiemannianModel::space_form(ModelKind::Hyperbolic, 10, 1.0).expect("valid model");
    let mesh = RadialMesh::new(1.0, cells).expect("valid mesh");
    let nl = Nonlinearity::exp_model(&model).expect("valid nonlinearity");
    RadialProblem::new(&model, &mesh, nl).expect("assembles")
}
