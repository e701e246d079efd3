//! Discrete results against closed forms and brute-force dense solves.

use std::f64::consts::PI;

use scatspec_core::discretize::*;
use scatspec_core::geometry::*;
use scatspec_core::inequalities::*;
use scatspec_core::linalg::Mat;
use scatspec_core::quadrature::composite_gauss;
use scatspec_core::spectral::*;

/// Dirichlet eigenvalues of the flat 3-cone at λ = 0: u = v/r turns
/// −u″ − (2/r)u′ into −v″ on [1, R].
fn flat_cone_error(r_max: f64, nodes: usize, count: usize) -> f64 {
    let m = ManifoldModel::cone(3);
    let grid = RadialGrid::new(&m, r_max, nodes).unwrap();
    let op = ModeOperator::assemble(&m, &grid, 0.0).unwrap();
    let ev = op.p_symmetric().unwrap().eigenvalues().unwrap();
    (0..count)
        .map(|j| {
            let exact = (PI * (j + 1) as f64 / (r_max - 1.0)).powi(2);
            ((ev[j] - exact) / exact).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn flat_cone_eigenvalues_converge_at_second_order() {
    let coarse = flat_cone_error(11.0, 1025, 10);
    let fine = flat_cone_error(11.0, 2049, 10);
    assert!(fine <= 1e-3, "{fine}");
    let ratio = coarse / fine;
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn quotient_minimum_matches_dense_generalized_eigenproblem() {
    let grid = LogGrid::with_ratio(100.0, 150).unwrap();
    let hardy = hardy_problem(5, 0.5, &grid).unwrap();
    let model = ManifoldModel::perturbed(5, 0.2, 1.0, 0.5, 1.0);
    let rgrid = RadialGrid::new(&model, 30.0, 180).unwrap();
    let w = PoincareWeights::sharp(5, 1.0).unwrap();
    let poincare = poincare_problem(&model, &rgrid, w, 8.0).unwrap();
    for q in [hardy, poincare] {
        let (num, den) = q.to_dense();
        let dense = num.generalized_eigenvalues(&den).unwrap()[0];
        let fast = q.min().unwrap();
        assert!((dense - fast).abs() <= 1e-9 * dense.abs().max(1.0), "{dense} {fast}");
    }
}

#[test]
fn hardy_minimum_tracks_truncated_continuum() {
    for (n, s) in [(3, 0.0), (5, 1.0)] {
        let grid = LogGrid::with_ratio(1e3, 4096).unwrap();
        let discrete = hardy_rayleigh_min(n, s, &grid).unwrap();
        let continuum = hardy_truncated_min(n, s, 1e3).unwrap();
        assert!(((discrete - continuum) / continuum).abs() < 1e-5, "{discrete} {continuum}");
        assert!(discrete >= hardy_sharp(n, s).unwrap());
    }
}

fn window_defect(nodes: usize) -> f64 {
    let m = ManifoldModel::cone(3).with_cutoff(Cutoff::Everywhere);
    let grid = RadialGrid::new(&m, 41.0, nodes).unwrap();
    let mut worst = 0.0f64;
    for lambda in [0.0, 2.0, 6.0] {
        let op = ModeOperator::assemble(&m, &grid, lambda).unwrap();
        let eig = op.p_symmetric().unwrap().window(0.05, 0.5).unwrap();
        let ks = op.k_symmetric();
        let e = Mat::from_columns(op.dim(), eig.vectors());
        let images: Vec<Vec<f64>> = eig.vectors().map(|v| ks.apply(v)).collect();
        let ke = Mat::from_columns(op.dim(), images.iter().map(Vec::as_slice));
        let defect = e.transpose().matmul(&ke).unwrap().sub(&Mat::diagonal(&eig.values));
        let top = eig.values.iter().cloned().fold(0.0, f64::max);
        worst = worst.max(defect.norm2().unwrap() / top);
    }
    worst
}

#[test]
fn exact_cone_commutator_equals_laplacian_on_windows() {
    let coarse = window_defect(2048);
    let fine = window_defect(4096);
    assert!(fine <= 1e-3, "{fine}");
    assert!(coarse / fine > 3.5, "{coarse} {fine}");
}

fn eigen_sqrt(s: &scatspec_core::linalg::SymTridiag) -> Mat {
    let eig = s.eigen().unwrap();
    let n = s.dim();
    Mat::from_fn(n, n, |i, j| {
        (0..n).map(|k| eig.values[k].sqrt() * eig.vector(k)[i] * eig.vector(k)[j]).sum()
    })
}

#[test]
fn quadrature_square_root_matches_eigendecomposition() {
    let m = ManifoldModel::cone(3);
    let grid = RadialGrid::new(&m, 41.0, 400).unwrap();
    let s = ModeOperator::assemble(&m, &grid, 0.0).unwrap().p_symmetric().unwrap();
    let exact = eigen_sqrt(&s);
    let scale = exact.norm2().unwrap();
    let err = |spec: QuadSpec| sqrt_via_quadrature(&s, &spec).unwrap().sub(&exact).norm2().unwrap() / scale;
    assert!(err(QuadSpec::default()) <= 1e-6);
    let errors: Vec<f64> = [2, 4, 8, 16].iter().map(|&order| err(QuadSpec { order, levels: None })).collect();
    for pair in errors.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12, "{errors:?}");
    }
}

#[test]
fn sqrt_kernel_by_quadrature() {
    let edges: Vec<f64> = (0..=16).map(|i| 0.5 * PI * i as f64 / 16.0).collect();
    let rule = composite_gauss(&edges, 16).unwrap();
    for (ta, tb) in [(1.0_f64, 1.0), (0.5, 2.0), (0.1, 3.0)] {
        let c = (ta * tb).sqrt();
        let q = sqrt_kernel_quadrature(ta, tb, c, &rule);
        assert!((q - sqrt_kernel(ta, tb)).abs() < 1e-12);
    }
}

#[test]
fn every_mode_operator_is_exactly_self_adjoint() {
    let m = ManifoldModel::perturbed(4, 0.2, 1.0, 0.5, 1.0);
    let grid = RadialGrid::build(&m, 20.0, 300).unwrap();
    for mode in m.modes().iter().take(6) {
        let r = ModeOperator::assemble(&m, &grid, mode.lambda).unwrap().residuals();
        assert!(r.p < 1e-14 && r.a < 1e-14 && r.k < 1e-14, "{r:?}");
    }
}

#[test]
fn resolvent_solves_against_dense_inverse() {
    use num_complex::Complex64;
    let m = ManifoldModel::cone(3);
    let grid = RadialGrid::new(&m, 10.0, 60).unwrap();
    let op = ModeOperator::assemble(&m, &grid, 2.0).unwrap();
    let w = Complex64::new(0.3, 0.2);
    let v: Vec<Complex64> = (0..op.dim()).map(|i| Complex64::new((i as f64).sin(), 1.0)).collect();
    let u = resolvent_apply(&op, w, &v).unwrap();
    // check (P − w)u = v directly with the nodal matrix
    let re: Vec<f64> = u.iter().map(|z| z.re).collect();
    let im: Vec<f64> = u.iter().map(|z| z.im).collect();
    let (pre, pim) = (op.p.apply(&re), op.p.apply(&im));
    for i in 0..op.dim() {
        let lhs = Complex64::new(pre[i], pim[i]) - w * u[i];
        assert!((lhs - v[i]).norm() < 1e-10);
    }
}
