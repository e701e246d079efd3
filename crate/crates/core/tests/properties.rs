use proptest::prelude::*;

use scatspec_core::discretize::*;
use scatspec_core::geometry::*;
use scatspec_core::inequalities::*;
use scatspec_core::linalg::{Mat, SymTridiag, Tridiag};
use scatspec_core::mourre::mourre_sandwich_min;
use scatspec_core::spectral::*;
use scatspec_core::wave::*;

fn dense(t: &Tridiag) -> Mat {
    Mat::from_fn(t.dim(), t.dim(), |i, j| t.get(i, j))
}

/// Nodal matrix → symmetric coordinates D^{1/2} X D^{−1/2}.
fn symmetric(x: &Mat, m: &[f64]) -> Mat {
    Mat::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] * (m[i] / m[j]).sqrt())
}

fn mnorm(u: &[f64], m: &[f64]) -> f64 {
    u.iter().zip(m).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
}

fn model_strategy() -> impl Strategy<Value = ManifoldModel> {
    (3usize..=5, 0.0f64..0.4, 0.5f64..2.0, 0.0f64..1.0).prop_map(|(n, c, rho, v0)| {
        ManifoldModel::perturbed(n, c, rho, v0, rho)
    })
}

/// A mode whose window I/H² with I = [0.5, 2] holds several eigenvalues.
fn window_mode(k: usize, h: f64) -> (ModeOperator, ModeSpectrum, SpectralWindow) {
    let model = ManifoldModel::cone(3);
    let grid = RadialGrid::new(&model, 100.0, 400).unwrap();
    let mode = model.modes()[k];
    let op = ModeOperator::assemble(&model, &grid, mode.lambda).unwrap();
    let spec = ModeSpectrum::full(&op, mode).unwrap();
    (op, spec, SpectralWindow::new(0.5, 2.0, h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operators_are_self_adjoint(model in model_strategy(), k in 0usize..8, nodes in 40usize..400) {
        let grid = RadialGrid::build(&model, 20.0, nodes).unwrap();
        let lambda = model.modes()[k].lambda;
        let r = ModeOperator::assemble(&model, &grid, lambda).unwrap().residuals();
        prop_assert!(r.p < 1e-14 && r.a < 1e-14 && r.k < 1e-14, "{:?}", r);
    }

    #[test]
    fn spectrum_is_positive_and_monotone_in_mode(model in model_strategy(), nodes in 40usize..400) {
        let grid = RadialGrid::new(&model, 20.0, nodes).unwrap();
        let mut last = 0.0;
        for mode in model.modes().iter().take(6) {
            let op = ModeOperator::assemble(&model, &grid, mode.lambda).unwrap();
            let bottom = op.p_symmetric().unwrap().min_eigenvalue();
            prop_assert!(bottom > 0.0 && bottom >= last);
            last = bottom;
        }
    }

    #[test]
    fn sturm_counts_agree_with_eigenvalues(
        diag in prop::collection::vec(-5.0f64..5.0, 2..60),
        seed in prop::collection::vec(-2.0f64..2.0, 60),
        x in -8.0f64..8.0,
    ) {
        let off = seed[..diag.len() - 1].to_vec();
        let s = SymTridiag::new(diag, off).unwrap();
        let ev = s.eigenvalues().unwrap();
        prop_assume!(ev.iter().all(|v| (v - x).abs() > 1e-9));
        prop_assert_eq!(s.count_below(x), ev.iter().filter(|v| **v < x).count());
    }

    #[test]
    fn projector_is_idempotent_and_commutes(k in 0usize..4, h in 5.0f64..15.0) {
        let (op, spec, window) = window_mode(k, h);
        let pi = projector(&spec, &window);
        let p = dense(&op.p);
        prop_assert!(pi.matmul(&pi).unwrap().sub(&pi).max_abs() <= 1e-10);
        let comm = pi.matmul(&p).unwrap().sub(&p.matmul(&pi).unwrap());
        prop_assert!(comm.max_abs() <= 1e-10 * p.max_abs());
    }

    #[test]
    fn smooth_cutoff_is_a_contraction_inside_the_window(k in 0usize..4, h in 5.0f64..15.0) {
        let (_, spec, window) = window_mode(k, h);
        let psi = apply_spectral_function(&spec, |mu| psi_bump(h * h * mu, window.a, window.b)).unwrap();
        let norm = symmetric(&psi, &spec.weights).norm2().unwrap();
        prop_assert!(norm <= 1.0 + 1e-12);
        let pi = projector(&spec, &window);
        prop_assert!(psi.matmul(&pi).unwrap().sub(&psi).max_abs() <= 1e-10);
    }

    #[test]
    fn window_norm_equivalence(k in 0usize..4, h in 5.0f64..15.0, v in prop::collection::vec(-1.0f64..1.0, 398)) {
        let (op, spec, window) = window_mode(k, h);
        let psi = apply_spectral_function(&spec, |mu| psi_bump(h * h * mu, window.a, window.b)).unwrap();
        let u = psi.mul_vec(&v);
        let nu = mnorm(&u, &op.weights);
        prop_assume!(nu > 1e-8);
        let pu: Vec<f64> = op.p.apply(&u).iter().map(|x| h * h * x).collect();
        let npu = mnorm(&pu, &op.weights);
        prop_assert!(npu >= window.a * nu * (1.0 - 1e-9) && npu <= window.b * nu * (1.0 + 1e-9));
    }

    #[test]
    fn nested_windows_have_nested_ranges(k in 0usize..4, h in 5.0f64..15.0, lo in 0.6f64..1.0, hi in 1.2f64..1.8) {
        let (_, spec, outer) = window_mode(k, h);
        let inner = SpectralWindow::new(lo, hi, h).unwrap();
        let (pi, po) = (projector(&spec, &inner), projector(&spec, &outer));
        prop_assert!(po.matmul(&pi).unwrap().sub(&pi).max_abs() <= 1e-10);
    }

    #[test]
    fn hardy_minimum_decreases_toward_sharp(n in 3usize..7, frac in 0.0f64..0.9) {
        let s = frac * (n as f64 - 2.0) / 2.0;
        let sharp = hardy_sharp(n, s).unwrap();
        let mut last = f64::INFINITY;
        for decades in [2, 3, 4] {
            // fixed log step so the shorter domains embed in the longer ones
            let grid = LogGrid::with_ratio(10f64.powi(decades), 200 * decades as usize + 1).unwrap();
            let kappa = hardy_rayleigh_min(n, s, &grid).unwrap();
            prop_assert!(kappa >= sharp - 1e-8 && kappa <= last);
            last = kappa;
        }
    }

    #[test]
    fn poincare_quotient_grows_with_angular_eigenvalue(model in model_strategy(), frac in 0.1f64..0.9) {
        let s = frac * (model.n as f64 - 2.0) / 2.0;
        let grid = RadialGrid::new(&model, 30.0, 300).unwrap();
        let w = PoincareWeights::sharp(model.n, s).unwrap();
        let mut last = 0.0;
        for mode in model.modes().iter().take(5) {
            let kappa = poincare_problem(&model, &grid, w, mode.lambda).unwrap().min().unwrap();
            prop_assert!(kappa >= last);
            last = kappa;
        }
    }

    #[test]
    fn quadrature_sqrt_improves_with_nodes(k in 0usize..4, nodes in 50usize..300) {
        let model = ManifoldModel::cone(3);
        let grid = RadialGrid::new(&model, 30.0, nodes).unwrap();
        let s = ModeOperator::assemble(&model, &grid, model.modes()[k].lambda).unwrap().p_symmetric().unwrap();
        let eig = s.eigen().unwrap();
        let n = s.dim();
        let exact = Mat::from_fn(n, n, |i, j| {
            (0..n).map(|q| eig.values[q].sqrt() * eig.vector(q)[i] * eig.vector(q)[j]).sum()
        });
        let scale = exact.norm2().unwrap();
        let mut last = f64::INFINITY;
        for order in [2, 4, 8, 16] {
            let q = sqrt_via_quadrature(&s, &QuadSpec { order, levels: None }).unwrap();
            let err = q.sub(&exact).norm2().unwrap() / scale;
            prop_assert!(err <= last + 1e-12);
            last = err;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn exact_cone_is_dilation_covariant(e in -1i32..=2, h in 3.0f64..6.0) {
        let kappa = 2f64.powi(e);
        let base = ManifoldModel::cone(3).with_cutoff(Cutoff::Everywhere).with_spectrum(AngularSpectrum::Sphere { k_max: 3 });
        let scaled = base.clone().with_r_min(kappa);
        let rule = WindowGrid { oversampling: 4.0, spacing: 0.1 };
        let rule_k = WindowGrid { oversampling: 4.0, spacing: 0.1 * kappa };
        let a = mourre_sandwich_min(&base, &SpectralWindow::new(0.5, 2.0, h).unwrap(), &rule).unwrap();
        let b = mourre_sandwich_min(&scaled, &SpectralWindow::new(0.5, 2.0, kappa * h).unwrap(), &rule_k).unwrap();
        prop_assert_eq!(a.rank, b.rank);
        let (ca, cb) = (a.c.unwrap(), b.c.unwrap());
        prop_assert!((ca - cb).abs() <= 1e-6 * ca.abs().max(1.0), "{} {}", ca, cb);
    }

    #[test]
    fn wave_evolution_is_conservative_linear_and_reversible(
        lambda_index in 0usize..3,
        t in 0.5f64..12.0,
        mix in -2.0f64..2.0,
    ) {
        let model = ManifoldModel::cone(3);
        let grid = RadialGrid::with_spacing(&model, 30.0, 0.1).unwrap();
        let lambda = model.modes()[lambda_index].lambda;
        let a = bump_profile(&grid, 2.0, 4.0).unwrap();
        let b = bump_profile(&grid, 2.5, 3.5).unwrap();
        let zero = vec![0.0; a.len()];
        let b: Vec<f64> = b.iter().map(|y| mix * y).collect();
        let sa = synthesize_initial_data(&model, &grid, &[(lambda, a.clone(), zero.clone())]).unwrap();
        let sb = synthesize_initial_data(&model, &grid, &[(lambda, zero.clone(), b.clone())]).unwrap();
        let sab = synthesize_initial_data(&model, &grid, &[(lambda, a.clone(), b.clone())]).unwrap();
        let e0 = sab.energy_at(0.0);
        prop_assert!((sab.energy_at(t) - e0).abs() <= 1e-8 * e0);

        let (ua, uta) = sa.modes[0].evolve(t);
        let (ub, utb) = sb.modes[0].evolve(t);
        let (uab, utab) = sab.modes[0].evolve(t);
        let scale = uab.iter().chain(&utab).fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..ua.len() {
            prop_assert!((ua[i] + ub[i] - uab[i]).abs() <= 1e-10 * scale);
            prop_assert!((uta[i] + utb[i] - utab[i]).abs() <= 1e-10 * scale);
        }

        let back_data: Vec<f64> = utab.iter().map(|v| -v).collect();
        let back = synthesize_initial_data(&model, &grid, &[(lambda, uab, back_data)]).unwrap();
        let (u0, ut0) = back.modes[0].evolve(t);
        for i in 0..u0.len() {
            prop_assert!((u0[i] - a[i]).abs() <= 1e-10 * scale);
            prop_assert!((ut0[i] + b[i]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn energy_propagates_at_finite_speed(lambda_index in 0usize..3, t in 1.0f64..15.0) {
        let model = ManifoldModel::cone(3);
        let grid = RadialGrid::with_spacing(&model, 40.0, 0.1).unwrap();
        let u0 = bump_profile(&grid, 2.0, 4.0).unwrap();
        let u1 = vec![0.0; u0.len()];
        let state = synthesize_initial_data(&model, &grid, &[(model.modes()[lambda_index].lambda, u0, u1)]).unwrap();
        let fields = state.evolve(t);
        let delta = 1.0;
        let outside = energy_outside(&model, &state, &fields, 2.0 - t - delta, 4.0 + t + delta);
        prop_assert!(outside < 1e-4, "{}", outside);
    }

    #[test]
    fn local_energy_integral_is_nondecreasing(lambda_index in 0usize..3, mu in 0.1f64..1.0) {
        let model = ManifoldModel::cone(3);
        let grid = RadialGrid::with_spacing(&model, 40.0, 0.2).unwrap();
        let u0 = bump_profile(&grid, 2.0, 4.0).unwrap();
        let u1 = vec![0.0; u0.len()];
        let state = synthesize_initial_data(&model, &grid, &[(model.modes()[lambda_index].lambda, u0, u1)]).unwrap();
        let fits = decay_rate_fit(&model, &state, &[mu], &[2.0, 4.0, 8.0, 16.0], 0.1, 4.0).unwrap();
        for pair in fits[0].q.windows(2) {
            prop_assert!(pair[1] >= pair[0]);
        }
        prop_assert!(fits[0].energy_drift <= 1e-8);
    }
}
