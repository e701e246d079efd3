//! The verification suites. Each one reads its section of the configuration,
//! writes its CSV curves and returns a report block.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use scatspec_core::discretize::{ModeOperator, RadialGrid, WeightedB};
use scatspec_core::fit::loglog;
use scatspec_core::geometry::{
    check_weight_positivity, epsilon_threshold, laplacian_positivity, Cutoff, ManifoldModel, Warp, WeightFunction,
};
use scatspec_core::inequalities::{
    hardy_rayleigh_min, hardy_sharp, hardy_truncated_min, interpolation_check, poincare_min, random_bumps,
    vb_lower_bound, weighted_gain_fit, LogGrid, PoincareWeights,
};
use scatspec_core::linalg::{Mat, SymTridiag};
use scatspec_core::mourre::{
    adjoint_bounds_check, conjugate_projector_norms, locate_h0, resolvent_gain_fit, resolvent_uniformity, scan_h,
    sqrt_mourre_min,
};
use scatspec_core::spectral::{projector, sqrt_via_quadrature, ModeSpectrum, QuadSpec, SpectralWindow, WindowGrid};
use scatspec_core::wave::{bump_profile, decay_rate_fit, synthesize_initial_data};

use crate::config::{LoadedConfig, ModelConfig};
use crate::error::CliError;
use crate::report::{Check, FitRecord, OutDir, Status, SuiteBlock};

/// Suite names in report order.
pub const SUITES: [&str; 8] =
    ["adjoint-bounds", "hardy", "mourre", "poincare", "resolvent", "sqrt-mourre", "wave", "weight"];

/// R² below which a fit is reported as inconclusive.
const R_SQUARED_MIN: f64 = 0.9;

pub struct Context<'a> {
    pub loaded: &'a LoadedConfig,
    pub out: &'a OutDir,
}

impl Context<'_> {
    fn rule(&self, spacing: Option<f64>) -> WindowGrid {
        let g = &self.loaded.config.grid;
        WindowGrid { oversampling: g.oversampling, spacing: spacing.unwrap_or(g.spacing) }
    }
}

/// Runs one suite. A failing computation still yields a block, marked as
/// an error, alongside the error itself.
pub fn run_suite(name: &str, ctx: &Context) -> (SuiteBlock, Option<CliError>) {
    let start = Instant::now();
    let mut block = SuiteBlock::new(name, inputs(name, ctx.loaded));
    let result = match name {
        "hardy" => hardy(ctx, &mut block),
        "poincare" => poincare(ctx, &mut block),
        "weight" => weight(ctx, &mut block),
        "mourre" => mourre(ctx, &mut block),
        "sqrt-mourre" => sqrt_mourre(ctx, &mut block),
        "resolvent" => resolvent(ctx, &mut block),
        "adjoint-bounds" => adjoint_bounds(ctx, &mut block),
        "wave" => wave(ctx, &mut block),
        other => Err(CliError::Config(vec![format!("unknown suite `{other}`")])),
    };
    let err = result.err();
    if let Some(e) = &err {
        block.error = Some(e.to_string());
    }
    block.finish();
    block.wall_time_s = start.elapsed().as_secs_f64();
    (block, err)
}

fn echo<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("configuration serializes")
}

fn inputs(name: &str, l: &LoadedConfig) -> serde_json::Value {
    let c = &l.config;
    let m = &l.models;
    match name {
        "hardy" => json!({ "params": echo(&c.hardy) }),
        "poincare" => json!({ "model": echo(&m.poincare), "params": echo(&c.poincare) }),
        "weight" => json!({ "model": echo(&m.weight), "params": echo(&c.weight) }),
        "mourre" => json!({ "model": echo(&m.mourre), "params": echo(&c.mourre) }),
        "sqrt-mourre" => json!({ "model": echo(&m.sqrt_mourre), "params": echo(&c.sqrt_mourre) }),
        "resolvent" => json!({ "model": echo(&m.resolvent), "params": echo(&c.resolvent) }),
        "adjoint-bounds" => json!({ "model": echo(&m.adjoint_bounds), "params": echo(&c.adjoint_bounds) }),
        "wave" => json!({ "model": echo(&m.wave), "params": echo(&c.wave) }),
        _ => serde_json::Value::Null,
    }
}

fn model(cfg: &ModelConfig) -> Result<ManifoldModel, CliError> {
    let m = cfg.build();
    m.validate()?;
    Ok(m)
}

fn max_min_ratio(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn hardy(ctx: &Context, block: &mut SuiteBlock) -> Result<(), CliError> {
    let c = &ctx.loaded.config.hardy;
    let mut rows = Vec::new();
    for &(n, s) in &c.cases {
        let sharp = hardy_sharp(n, s)?;
        let mut mins = Vec::with_capacity(c.ratios.len());
        for &ratio in &c.ratios {
            let grid = LogGrid::with_ratio(ratio, c.nodes)?;
            let kappa = hardy_rayleigh_min(n, s, &grid)?;
            rows.push(vec![n as f64, s, ratio, kappa, sharp, hardy_truncated_min(n, s, ratio)?]);
            mins.push(kappa);
        }
        let case = format!("n={n} s={s}");
        let last = *mins.last().expect("at least one ratio");
        let ratio = c.ratios.last().copied().unwrap_or(f64::NAN);
        let truncated = hardy_truncated_min(n, s, ratio)?;
        block.check(
            Check::within(format!("hardy {case}: min/sharp at ratio {ratio:e}"), last / sharp, 1.0, c.band).note(
                format!("continuum minimum on the truncated domain is {:.6}·sharp", truncated / sharp),
            ),
        );
        let monotone = mins.windows(2).all(|w| w[1] <= w[0]);
        block.check(Check::holds(format!("hardy {case}: nonincreasing in domain ratio"), monotone));
        let floor = mins.iter().cloned().fold(f64::INFINITY, f64::min) - (sharp - c.solver_tol);
        block.check(Check::ge(format!("hardy {case}: min − (sharp − tol)"), floor, 0.0));
    }
    block.artifacts.push(ctx.out.csv(
        "hardy.csv",
        &["n", "s", "ratio", "kappa_min", "sharp", "truncated_continuum"],
        &rows,
    )?);
    Ok(())
}

fn poincare(ctx: &Context, block: &mut SuiteBlock) -> Result<(), CliError> {
    let c = &ctx.loaded.config.poincare;
    let m = model(&ctx.loaded.models.poincare)?;
    let modes = m.modes();
    let weights =
        if c.eps == 0.0 { PoincareWeights::sharp(m.n, c.s)? } else { PoincareWeights { s: c.s, eps: c.eps } };
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for &r_max in &c.r_max {
        let grid = RadialGrid::with_spacing(&m, r_max, c.spacing)?;
        let q = poincare_min(&m, &grid, weights, &modes)?;
        rows.push(vec![r_max, q.value, q.mode as f64]);
        values.push(q.value);
        block.check(Check::gt(format!("poincare min at r_max {r_max}"), q.value, 0.0));
    }
    for (pair, r) in values.windows(2).zip(c.r_max.windows(2)) {
        let drift = (pair[1] - pair[0]).abs() / pair[0];
        block.check(Check::le(format!("poincare drift r_max {} → {}", r[0], r[1]), drift, c.drift_tol));
    }
    block.artifacts.push(ctx.out.csv("poincare.csv", &["r_max", "kappa_min", "mode"], &rows)?);

    // interpolation on the smallest domain: Hölder gives ratio(θ) ≤ ratio(1)^θ
    // sample by sample, and the Hardy constant bounds ratio(1) by 2/(n−2)
    let grid = RadialGrid::with_spacing(&m, c.r_max[0], c.spacing)?;
    let samples = random_bumps(&grid, c.samples, ctx.loaded.seed());
    let endpoint = interpolation_check(&m, &grid, 0.0, 1.0, &samples)?;
    let hardy_bound = 2.0 / (m.n as f64 - 2.0);
    block.check(Check::le("interpolation θ=1 vs 2/(n−2)", endpoint, hardy_bound * (1.0 + c.interpolation_slack)));
    let mut rows = Vec::new();
    for &theta in &c.thetas {
        let v = interpolation_check(&m, &grid, 0.0, theta, &samples)?;
        rows.push(vec![theta, v, endpoint.powf(theta)]);
        block.check(Check::le(
            format!("interpolation θ={theta}"),
            v,
            endpoint.powf(theta) * (1.0 + c.interpolation_slack),
        ));
    }
    block.artifacts.push(ctx.out.csv("interpolation.csv", &["theta", "ratio_max", "endpoint_bound"], &rows)?);

    let vb_cfg = ModelConfig {
        n: c.vb_n,
        spectrum: crate::config::SpectrumConfig { k_max: c.vb_k_max, ..ctx.loaded.models.poincare.spectrum.clone() },
        ..ctx.loaded.models.poincare.clone()
    };
    let vb = model(&vb_cfg)?;
    let vb_modes = vb.modes();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for &r_max in &c.vb_r_max {
        let grid = RadialGrid::with_spacing(&vb, r_max, c.vb_spacing)?;
        let q = vb_lower_bound(&vb, &grid, &vb_modes)?;
        rows.push(vec![r_max, q.value, q.mode as f64]);
        values.push(q.value);
        block.check(Check::gt(format!("vb lower bound at r_max {r_max}"), q.value, 0.0));
    }
    for (pair, r) in values.windows(2).zip(c.vb_r_max.windows(2)) {
        let drift = (pair[1] - pair[0]).abs() / pair[0];
        block.check(Check::le(format!("vb drift r_max {} → {}", r[0], r[1]), drift, c.drift_tol));
    }
    block.artifacts.push(ctx.out.csv("vb.csv", &["r_max", "kappa_min", "mode"], &rows)?);
    Ok(())
}

fn weight(ctx: &Context, block: &mut SuiteBlock) -> Result<(), CliError> {
    let c = &ctx.loaded.config.weight;
    let mut rows = Vec::new();
    let mut failures = 0usize;
    let mut worst = f64::INFINITY;
    for &n in &c.dims {
        let s_max = (n as f64 - 2.0) / 2.0;
        for &t0 in &c.t0 {
            let t_grid: Vec<f64> = (0..c.t_points).map(|i| t0 * i as f64 / c.t_points as f64).collect();
            for &frac in &c.s_fractions {
                let s = frac * s_max;
                let w = WeightFunction::new(t0, s, 1.0, n)?;
                let p = check_weight_positivity(n, &w, &t_grid)?;
                if !p.holds() {
                    failures += 1;
                }
                worst = worst.min(p.min_full);
                rows.push(vec![
                    n as f64,
                    t0,
                    s,
                    p.min_full,
                    p.min_reduced,
                    f64::from(u8::from(p.concave)),
                    f64::from(u8::from(p.tg_below_g)),
                ]);
            }
        }
    }
    block.check(
        Check::holds("model weight positivity on the (n, t₀, s) lattice", failures == 0)
            .note(format!("{failures} failing lattice points, smallest value {worst:e}")),
    );
    block.artifacts.push(ctx.out.csv(
        "weight_lattice.csv",
        &["n", "t0", "s", "min_full", "min_reduced", "concave", "tg_below_g"],
        &rows,
    )?);

    let mut rows = Vec::new();
    for &n in &c.dims {
        let cone = ManifoldModel::cone(n);
        let s = 0.5 * (n as f64 - 2.0) / 2.0;
        let w = WeightFunction::new(c.threshold_t0, s, c.eps, n)?;
        let lp = laplacian_positivity(&cone, &w)?;
        rows.push(vec![n as f64, s, lp.min_value, lp.tol_pos]);
        block.check(Check::ge(format!("exact cone n={n}: min Δf + tol"), lp.min_value + lp.tol_pos, 0.0));
    }
    block.artifacts.push(ctx.out.csv("weight_cone.csv", &["n", "s", "min_laplacian", "tol_pos"], &rows)?);

    let m = model(&ctx.loaded.models.weight)?;
    let eps0 = epsilon_threshold(&m, c.threshold_s, c.threshold_t0, c.eps_range.0, c.eps_range.1)?;
    let check = match eps0 {
        Some(e) => Check::ge("empirical ε₀ threshold", e, c.eps_range.0),
        None => Check::holds("empirical ε₀ threshold", false).note("positivity fails already at the smallest ε"),
    };
    block.check(check);
    Ok(())
}

fn flat_cone_error(r_max: f64, nodes: usize) -> Result<f64, CliError> {
    let m = ManifoldModel::cone(3);
    let grid = RadialGrid::new(&m, r_max, nodes)?;
    let ev = ModeOperator::assemble(&m, &grid, 0.0)?.p_symmetric()?.eigenvalues()?;
    Ok((0..10.min(ev.len()))
        .map(|j| {
            let exact = (PI * (j + 1) as f64 / (r_max - 1.0)).powi(2);
            ((ev[j] - exact) / exact).abs()
        })
        .fold(0.0, f64::max))
}

/// ‖E*KE − diag μ‖/max μ on low windows of the exact cone with φ ≡ 1.
fn commutator_defect(r_max: f64, nodes: usize) -> Result<f64, CliError> {
    let m = ManifoldModel::cone(3).with_cutoff(Cutoff::Everywhere);
    let grid = RadialGrid::new(&m, r_max, nodes)?;
    let mut worst = 0.0f64;
    for lambda in [0.0, 2.0, 6.0] {
        let op = ModeOperator::assemble(&m, &grid, lambda)?;
        let eig = op.p_symmetric()?.window(0.05, 0.5)?;
        let ks = op.k_symmetric();
        let e = Mat::from_columns(op.dim(), eig.vectors());
        let images: Vec<Vec<f64>> = eig.vectors().map(|v| ks.apply(v)).collect();
        let ke = Mat::from_columns(op.dim(), images.iter().map(Vec::as_slice));
        let defect = e.transpose().matmul(&ke)?.sub(&Mat::diagonal(&eig.values));
        let top = eig.values.iter().cloned().fold(0.0, f64::max);
        worst = worst.max(defect.norm2()? / top);
    }
    Ok(worst)
}

fn mourre(ctx: &Context, block: &mut SuiteBlock) -> Result<(), CliError> {
    let c = &ctx.loaded.config.mourre;
    let m = model(&ctx.loaded.models.mourre)?;

    let (n0, n1) = c.oracle_nodes;
    let (e0, e1) = (flat_cone_error(c.oracle_r_max, n0)?, flat_cone_error(c.oracle_r_max, n1)?);
    block.check(Check::le(format!("flat cone eigenvalue error at {n1} nodes"), e1, c.oracle_tol));
    block.check(Check::within("flat cone error ratio under halving", e0 / e1, c.order_band.0, c.order_band.1));
    let (k0, k1) = c.commutator_nodes;
    let (d0, d1) = (commutator_defect(c.commutator_r_max, k0)?, commutator_defect(c.commutator_r_max, k1)?);
    block.check(Check::le(format!("exact cone commutator defect at {k1} nodes"), d1, c.commutator_tol));
    block.check(Check::ge("exact cone commutator defect ratio under halving", d0 / d1, c.order_band.0));
    block.artifacts.push(ctx.out.csv(
        "refinement.csv",
        &["study", "nodes", "error"],
        &[
            vec![0.0, n0 as f64, e0],
            vec![0.0, n1 as f64, e1],
            vec![1.0, k0 as f64, d0],
            vec![1.0, k1 as f64, d1],
        ],
    )?);

    let scan = scan_h(&m, c.interval, &c.h_list, &ctx.rule(None))?;
    let rows: Vec<Vec<f64>> = scan.points.iter().map(|p| vec![p.h, opt(p.c), p.rank as f64]).collect();
    block.artifacts.push(ctx.out.csv("mourre_scan.csv", &["H", "c_H", "window_rank"], &rows)?);
    let rows: Vec<Vec<f64>> =
        scan.points.iter().map(|p| vec![p.h, opt(p.deviation), opt(p.window_bottom), p.modes_scanned as f64]).collect();
    block.artifacts.push(ctx.out.csv("mourre_deviation.csv", &["H", "deviation", "window_bottom", "modes"], &rows)?);
    let h0 = locate_h0(&scan.points.iter().map(|p| (p.h, p.c)).collect::<Vec<_>>(), c.c_min);
    block.check(match h0 {
        Some(h0) => Check::le(format!("H₀ with c(H) ≥ {} beyond it", c.c_min), h0, c.h0_max),
        None => Check::holds(format!("H₀ with c(H) ≥ {} beyond it", c.c_min), false).note("c(H) below threshold at the largest H"),
    });
    let mut fit = FitRecord::two_sided(
        "mourre deviation exponent",
        scan.deviation_fit.as_ref(),
        -m.rho,
        c.slope_tol * m.rho,
        c.r_squared_min,
    );
    if scan.exact_model || scan.fit_aborted {
        // on the exact cone the deviation is discretization noise
        fit.status = Status::Inconclusive;
    }
    block.fit(fit);

    // structural residuals on a moderate grid
    let grid = RadialGrid::with_spacing(&m, 50.0, 0.1)?;
    let window = SpectralWindow::new(c.interval.0, c.interval.1, 8.0)?;
    let (mut residual, mut idempotency) = (0.0f64, 0.0f64);
    for mode in m.modes().into_iter().take(4) {
        let op = ModeOperator::assemble(&m, &grid, mode.lambda)?;
        let r = op.residuals();
        residual = residual.max(r.p).max(r.a).max(r.k);
        let spec = ModeSpectrum::full(&op, mode)?;
        let pi = projector(&spec, &window);
        idempotency = idempotency.max(pi.matmul(&pi)?.sub(&pi).max_abs());
    }
    block.check(Check::le("self-adjointness residual of P, A, K", residual, c.residual_tol));
    block.check(Check::le("projector idempotency ‖Π² − Π‖", idempotency, c.projector_tol));
    Ok(())
}

fn eigen_sqrt(s: &SymTridiag) -> Result<Mat, CliError> {
    let eig = s.eigen()?;
    let n = s.dim();
    Ok(Mat::from_fn(n, n, |i, j| (0..n).map(|k| eig.values[k].sqrt() * eig.vector(k)[i] * eig.vector(k)[j]).sum()))
}

fn sqrt_mourre(ctx: &Context, block: &mut SuiteBlock) -> Result<(), CliError> {
    let c = &ctx.loaded.config.sqrt_mourre;

    let cone = ManifoldModel::cone(3);
    let grid = RadialGrid::new(&cone, c.oracle_r_max, c.oracle_nodes)?;
    let s = ModeOperator::assemble(&cone, &grid, 0.0)?.p_symmetric()?;
    let exact = eigen_sqrt(&s)?;
    let scale = exact.norm2()?;
    let err = |spec: &QuadSpec| -> Result<f64, CliError> {
        Ok(sqrt_via_quadrature(&s, spec)?.sub(&exact).norm2()? / scale)
    };
    block.check(Check::le("quadrature √P vs eigen √P at default nodes", err(&QuadSpec::default())?, c.oracle_tol));
    let mut rows = Vec::new();
    for &order in &c.oracle_orders {
        rows.push(vec![order as f64, err(&QuadSpec { order, levels: None })?]);
    }
    let monotone = rows.windows(2).all(|w| w[1][1] <= w[0][1] + 1e-12);
    block.check(Check::holds("quadrature √P error nonincreasing in node count", monotone));
    block.artifacts.push(ctx.out.csv("sqrt_quadrature.csv", &["order", "relative_error"], &rows)?);

    let m = model(&ctx.loaded.models.sqrt_mourre)?;
    let rule = ctx.rule(None);
    let quad = QuadSpec { order: c.quad_order, levels: None };
    let mut points = Vec::new();
    let mut rows = Vec::new();
    let mut defect = 0.0f64;
    for &h in &c.h_list {
        let window = SpectralWindow::new(c.interval.0, c.interval.1, h)?;
        let p = sqrt_mourre_min(&m, &window, &rule, &quad)?;
        defect = defect.max(p.quadrature_defect);
        rows.push(vec![h, opt(p.c_sqrt), opt(p.c), p.quadrature_defect, opt(p.mechanism_bound), p.rank as f64]);
        points.push((h, p.c_sqrt));
    }
    block.artifacts.push(ctx.out.csv(
        "sqrt_mourre.csv",
        &["H", "c_sqrt_H", "c_H", "quadrature_defect", "mechanism_bound", "window_rank"],
        &rows,
    )?);
    let h0 = locate_h0(&points, c.c_min);
    let name = format!("H₀ with c_√(H) ≥ {} beyond it", c.c_min);
    block.check(match h0 {
        Some(h0) => Check::le(name, h0, c.h_list.last().copied().unwrap_or(f64::NAN)),
        None => Check::holds(name, false).note("c_√(H) below threshold at the largest H"),
    });
    block.check(Check::le("quadrature vs eigen [H√P, A] on windows", defect, c.defect_tol));
    Ok(())
}

fn resolvent(ctx: &Context, block: &mut SuiteBlock) -> Result<(), CliError> {
    let c = &ctx.loaded.config.resolvent;
    let m = model(&ctx.loaded.models.resolvent)?;
    let rule = ctx.rule(c.spacing);
    let w = Complex64::new(c.w.0, c.w.1);
    let mut rows = Vec::new();
    for &s in &c.s_list {
        for &j in &c.derivatives {
            let gain = resolvent_gain_fit(&m, j, s, w, c.interval, &c.h_list, &rule)?;
            for (h, norm) in gain.h_values.iter().zip(&gain.norms) {
                rows.push(vec![s, j as f64, *h, *norm]);
            }
            block.fit(FitRecord::two_sided(
                format!("resolvent gain s={s} j={j}"),
                gain.fit.as_ref(),
                -(1.0 + s),
                c.slope_tol,
                R_SQUARED_MIN,
            ));
        }
    }
    block.artifacts.push(ctx.out.csv("resolvent_gain.csv", &["s", "j", "H", "norm"], &rows)?);

    let mut rows = Vec::new();
    for &s in &c.s_list {
        let at_i = resolvent_uniformity(&m, 0, s, 0.0, &[1.0], c.interval, c.uniform_h, &rule)?[0];
        let norms = resolvent_uniformity(&m, 0, s, c.uniform_re, &c.uniform_etas, c.interval, c.uniform_h, &rule)?;
        let mut branch = 0.0f64;
        for (eta, norm) in c.uniform_etas.iter().zip(&norms) {
            let modulus = Complex64::new(c.uniform_re, *eta).norm();
            // same constant as the w = i bound, scaled by |w|^{−(1−s)/2}
            branch = branch.max(norm / (at_i * modulus.powf(-(1.0 - s) / 2.0)));
            rows.push(vec![s, c.uniform_re, *eta, *norm]);
        }
        block.check(Check::le(
            format!("resolvent uniform in Im w at Re w = {} (s={s})", c.uniform_re),
            max_min_ratio(&norms),
            c.uniform_ratio,
        ));
        block.check(Check::le(format!("resolvent Re w < 0 branch relative to w = i (s={s})"), branch, 1.0));
    }
    block.artifacts.push(ctx.out.csv("resolvent_uniformity.csv", &["s", "re_w", "im_w", "norm"], &rows)?);

    let mut rows = Vec::new();
    for &sigma in &c.sigmas {
        for &j in &c.pairing_derivatives {
            let curve = weighted_gain_fit(&m, c.interval, sigma, j, &c.h_list, &rule)?;
            for (h, v) in curve.h_values.iter().zip(&curve.sup) {
                rows.push(vec![sigma, j as f64, *h, *v]);
            }
            let mut fit = FitRecord::two_sided(
                format!("pairing gain σ={sigma} j={j}"),
                curve.fit.as_ref(),
                -2.0 - sigma,
                c.slope_tol,
                R_SQUARED_MIN,
            );
            if !curve.skipped.is_empty() && fit.status == Status::Pass {
                fit.status = Status::Inconclusive;
            }
            block.fit(fit);
        }
    }
    block.artifacts.push(ctx.out.csv("pairing_gain.csv", &["sigma", "j", "H", "sup"], &rows)?);
    Ok(())
}

fn adjoint_bounds(ctx: &Context, block: &mut SuiteBlock) -> Result<(), CliError> {
    let c = &ctx.loaded.config.adjoint_bounds;
    let m = model(&ctx.loaded.models.adjoint_bounds)?;
    let rule = ctx.rule(c.spacing);
    let quad = QuadSpec { order: c.quad_order, levels: None };
    let points = adjoint_bounds_check(&m, c.interval, &c.mu_list, &c.h_list, &rule, &quad)?;
    let hs: Vec<f64> = points.iter().map(|p| p.h).collect();
    let ad1: Vec<f64> = points.iter().map(|p| p.ad1).collect();
    let ad2: Vec<f64> = points.iter().map(|p| p.ad2).collect();
    block.check(Check::le("(ad1) max/min over H", max_min_ratio(&ad1), c.ratio_max));
    block.check(Check::le("(ad2) max/min over H", max_min_ratio(&ad2), c.ratio_max));
    for (k, mu) in c.mu_list.iter().enumerate() {
        for (label, values) in [
            ("mourre1", points.iter().map(|p| p.mourre1[k]).collect::<Vec<_>>()),
            ("mourre2", points.iter().map(|p| p.mourre2[k]).collect::<Vec<_>>()),
        ] {
            let fit = loglog(&hs, &values).ok();
            block.fit(FitRecord::two_sided(format!("({label}) μ={mu}"), fit.as_ref(), -mu, c.slope_tol, R_SQUARED_MIN));
        }
    }
    let identity = points.iter().map(|p| p.identity_residual).fold(0.0, f64::max);
    let literal = points.iter().map(|p| p.literal_identity_residual).fold(0.0, f64::max);
    block.check(
        Check::le("[𝒜_H, H√P] = iψ²H√P + ℬ residual", identity, c.identity_tol)
            .note(format!("with coefficient 2i the residual is {literal:.3e}")),
    );
    let mut rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let mut row = vec![p.h, p.ad1, p.ad2, p.identity_residual, p.rank as f64];
            row.extend(&p.mourre1);
            row.extend(&p.mourre2);
            row
        })
        .collect();
    let mut header: Vec<String> =
        ["H", "ad1", "ad2", "identity_residual", "window_rank"].iter().map(|s| s.to_string()).collect();
    header.extend(c.mu_list.iter().map(|mu| format!("mourre1_mu{mu}")));
    header.extend(c.mu_list.iter().map(|mu| format!("mourre2_mu{mu}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    block.artifacts.push(ctx.out.csv("adjoint_bounds.csv", &header, &rows)?);

    rows = Vec::new();
    for &(weight, j) in &c.projector_l {
        let l = WeightedB::new(weight, j);
        let norms = conjugate_projector_norms(&m, c.interval, &l, &c.h_list, &rule)?;
        let forward: Vec<f64> = norms.iter().map(|p| p.forward).collect();
        let gap = norms.iter().map(|p| (p.forward - p.adjoint).abs() / p.forward).fold(0.0, f64::max);
        block.check(Check::le(format!("conjugate projector x^{weight}(r∂r)^{j} max/min over H"), max_min_ratio(&forward), c.ratio_max));
        block.check(Check::le(format!("conjugate projector x^{weight}(r∂r)^{j} adjoint norm gap"), gap, 1e-8));
        rows.extend(norms.iter().map(|p| vec![weight, j as f64, p.h, p.forward, p.adjoint]));
    }
    block.artifacts.push(ctx.out.csv("conjugate_projector.csv", &["weight", "j", "H", "forward", "adjoint"], &rows)?);
    Ok(())
}

fn wave(ctx: &Context, block: &mut SuiteBlock) -> Result<(), CliError> {
    let c = &ctx.loaded.config.wave;
    let m = model(&ctx.loaded.models.wave)?;
    let grid = RadialGrid::with_spacing(&m, c.r_max, c.spacing)?;
    if !m.is_non_trapping(c.r_max) {
        block.check(Check::holds("wave model is non-trapping", false));
    }
    let modes = m.modes();
    let profile = bump_profile(&grid, c.bump.0, c.bump.1)?;
    let mut data = Vec::new();
    for &k in &c.modes {
        let mode = modes.get(k).ok_or_else(|| {
            CliError::Config(vec![format!("wave.modes: index {k} exceeds the angular spectrum")])
        })?;
        data.push((mode.lambda, profile.clone(), vec![0.0; profile.len()]));
    }
    let state = synthesize_initial_data(&m, &grid, &data)?;
    let fits = decay_rate_fit(&m, &state, &c.mus, &c.t_list, c.dt, c.bump.1)?;
    let drift = fits.first().map_or(0.0, |f| f.energy_drift);
    block.check(Check::le("relative energy drift", drift, c.energy_tol));
    let mut q_rows = Vec::new();
    for f in &fits {
        if f.mu > 0.5 {
            block.check(Check::le(format!("μ={} plateau Q(T)/Q(T/2)", f.mu), f.plateau_ratio, c.plateau_tol));
        } else {
            block.fit(FitRecord::at_most(
                format!("μ={} growth exponent of Q(T)", f.mu),
                f.fit.as_ref(),
                1.0 - 2.0 * f.mu,
                c.slope_tol,
                R_SQUARED_MIN,
            ));
        }
        let rows: Vec<Vec<f64>> =
            f.times.iter().zip(&f.local_energy).zip(&f.energy).map(|((t, l), e)| vec![*t, *l, *e]).collect();
        block.artifacts.push(ctx.out.csv(&format!("wave_mu{}.csv", f.mu), &["t", "local_energy", "energy"], &rows)?);
        q_rows.extend(f.t_values.iter().zip(&f.q).map(|(t, q)| vec![f.mu, *t, *q]));
    }
    block.artifacts.push(ctx.out.csv("wave_q.csv", &["mu", "T", "Q"], &q_rows)?);

    let tr = &c.trapping;
    if tr.enabled {
        let trap = m.clone().with_warp(Warp::Trapping { c: tr.c, center: tr.center, width: tr.width });
        trap.validate()?;
        let lambda = trap.modes().get(tr.mode).map(|md| md.lambda).ok_or_else(|| {
            CliError::Config(vec![format!("wave.trapping.mode: index {} exceeds the angular spectrum", tr.mode)])
        })?;
        let grid = RadialGrid::with_spacing(&trap, c.r_max, c.spacing)?;
        let u0 = bump_profile(&grid, tr.bump.0, tr.bump.1)?;
        let u1 = vec![0.0; u0.len()];
        let state = synthesize_initial_data(&trap, &grid, &[(lambda, u0, u1)])?;
        let mu = 0.25;
        let f = decay_rate_fit(&trap, &state, &[mu], &c.t_list, c.dt, tr.bump.1)?.remove(0);
        let slope = f.fit.map(|p| p.slope);
        let violated = !f.within_bound(c.slope_tol, c.plateau_tol);
        block.check(
            Check::holds("trapping control violates the μ=0.25 bound", violated)
                .note(format!("slope {:.4} against bound {}", opt(slope), 1.0 - 2.0 * mu + c.slope_tol)),
        );
        let rows: Vec<Vec<f64>> = f.t_values.iter().zip(&f.q).map(|(t, q)| vec![*t, *q]).collect();
        block.artifacts.push(ctx.out.csv("wave_trapping_q.csv", &["T", "Q"], &rows)?);
    }
    Ok(())
}

/// Outcome of a run: the report (already written to disk) and the worst
/// error raised by any suite.
#[derive(Debug)]
pub struct Run {
    pub report: crate::report::Report,
    pub errors: Vec<CliError>,
}

impl Run {
    /// 0 all pass, 1 any fail or inconclusive, 2 configuration error,
    /// 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        if let Some(code) = self.errors.iter().map(CliError::exit_code).min() {
            return code;
        }
        match self.report.overall {
            Status::Pass => 0,
            _ => 1,
        }
    }
}

/// Runs `suite` (or every suite for "all"), rewriting the report after
/// each suite so partial results survive a later failure.
pub fn run(suite: &str, loaded: &LoadedConfig, out: &OutDir) -> Result<Run, CliError> {
    let names: Vec<&str> = match suite {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        other => {
            return Err(CliError::Config(vec![format!(
                "unknown suite `{other}`; expected one of {} or all",
                SUITES.join(", ")
            )]))
        }
    };
    let grid = crate::report::GridStanza {
        oversampling: loaded.config.grid.oversampling,
        spacing: loaded.config.grid.spacing,
    };
    let mut report = crate::report::Report::new(loaded.hash.clone(), loaded.seed(), grid);
    let mut errors = Vec::new();
    let ctx = Context { loaded, out };
    for name in names {
        let (block, err) = run_suite(name, &ctx);
        report.push(block);
        out.write_report(&report)?;
        errors.extend(err);
    }
    let config = out.root.join("config.toml");
    std::fs::write(&config, &loaded.canonical).map_err(|e| CliError::io(&config, e))?;
    Ok(Run { report, errors })
}
