//! Range checks on a parsed configuration. Every violation is collected and
//! reported with the hypothesis it breaks.

use crate::config::{Config, ModelConfig, SuiteModels};

struct Checker {
    errors: Vec<String>,
}

impl Checker {
    fn require(&mut self, ok: bool, key: &str, value: impl std::fmt::Display, hypothesis: &str) {
        if !ok {
            self.errors.push(format!("{key} = {value}: must satisfy {hypothesis}"));
        }
    }

    fn interval(&mut self, key: &str, (a, b): (f64, f64)) {
        self.require(a > 0.0 && b > a, key, format!("[{a}, {b}]"), "0 < a < b (compact window in (0, ∞))");
    }

    fn schedule(&mut self, key: &str, list: &[f64]) {
        let ok = list.len() >= 2 && list[0] > 0.0 && list.windows(2).all(|w| w[1] > w[0]);
        self.require(ok, key, format!("{list:?}"), "at least two positive, strictly increasing entries");
    }

    fn positive(&mut self, key: &str, value: f64) {
        self.require(value > 0.0, key, value, "> 0");
    }

    fn model(&mut self, prefix: &str, m: &ModelConfig) {
        if let Err(e) = m.build().validate() {
            self.errors.push(format!("{prefix}: {e}"));
        }
    }
}

fn s_max(n: usize) -> f64 {
    (n as f64 - 2.0) / 2.0
}

pub fn validate(c: &Config, models: &SuiteModels) -> Vec<String> {
    let mut v = Checker { errors: Vec::new() };
    v.model("model", &models.base);
    for (name, m) in [
        ("poincare.model", &models.poincare),
        ("weight.model", &models.weight),
        ("mourre.model", &models.mourre),
        ("sqrt-mourre.model", &models.sqrt_mourre),
        ("resolvent.model", &models.resolvent),
        ("adjoint-bounds.model", &models.adjoint_bounds),
        ("wave.model", &models.wave),
    ] {
        if m != &models.base {
            v.model(name, m);
        }
    }
    v.positive("grid.oversampling", c.grid.oversampling);
    v.positive("grid.spacing", c.grid.spacing);

    let hardy = &c.hardy;
    for &(n, s) in &hardy.cases {
        v.require(n >= 3, "hardy.cases.n", n, "n ≥ 3 (standing dimension assumption)");
        v.require(s < s_max(n), "hardy.cases.s", s, "s < (n−2)/2 (sharp Hardy inequality)");
    }
    v.require(hardy.ratios.iter().all(|r| *r > 1.0), "hardy.ratios", format!("{:?}", hardy.ratios), "ratios > 1");
    v.require(hardy.nodes >= 4, "hardy.nodes", hardy.nodes, "≥ 4 nodes");
    v.require(hardy.band >= 1.0, "hardy.band", hardy.band, "≥ 1");

    let p = &c.poincare;
    let n = models.poincare.n;
    v.require(p.s >= 0.0, "poincare.s", p.s, "s ≥ 0");
    v.require(p.s < s_max(n), "poincare.s", p.s, "s < (n−2)/2 (sharp Poincaré inequality)");
    v.require(p.eps >= 0.0, "poincare.eps", p.eps, "ε ≥ 0");
    v.schedule("poincare.r_max", &p.r_max);
    v.positive("poincare.spacing", p.spacing);
    v.require(
        p.thetas.iter().all(|t| (0.0..=1.0).contains(t)),
        "poincare.thetas",
        format!("{:?}", p.thetas),
        "θ ∈ [0, 1]",
    );
    v.require(p.samples > 0, "poincare.samples", p.samples, "> 0");
    v.require(p.vb_n >= 5, "poincare.vb_n", p.vb_n, "n ≥ 5 (b-elliptic lower bound)");
    v.schedule("poincare.vb_r_max", &p.vb_r_max);
    v.positive("poincare.vb_spacing", p.vb_spacing);

    let w = &c.weight;
    for &n in &w.dims {
        v.require(n >= 3, "weight.dims", n, "n ≥ 3 (standing dimension assumption)");
    }
    for &t0 in w.t0.iter().chain([&w.threshold_t0]) {
        v.require(t0 > 0.0 && t0 < 0.5, "weight.t0", t0, "0 < t₀ < 1/2 (positivity of the model Laplacian)");
    }
    for &f in &w.s_fractions {
        v.require(f > 0.0 && f < 1.0, "weight.s_fractions", f, "0 < s/((n−2)/2) < 1 (sharp Poincaré inequality)");
    }
    let wn = models.weight.n;
    v.require(
        w.threshold_s > 0.0 && w.threshold_s < s_max(wn),
        "weight.threshold_s",
        w.threshold_s,
        "0 < s < (n−2)/2 (sharp Poincaré inequality)",
    );
    v.positive("weight.eps", w.eps);
    v.require(
        w.eps_range.0 > 0.0 && w.eps_range.1 > w.eps_range.0,
        "weight.eps_range",
        format!("{:?}", w.eps_range),
        "0 < ε_lo < ε_hi",
    );
    v.require(w.t_points >= 2, "weight.t_points", w.t_points, "≥ 2");

    let m = &c.mourre;
    v.interval("mourre.interval", m.interval);
    v.schedule("mourre.h_list", &m.h_list);
    v.require(m.slope_tol >= 0.0, "mourre.slope_tol", m.slope_tol, "≥ 0");
    v.require(m.oracle_r_max > 1.0, "mourre.oracle_r_max", m.oracle_r_max, "R > r_min = 1");
    v.require(m.commutator_r_max > 1.0, "mourre.commutator_r_max", m.commutator_r_max, "R > r_min = 1");

    let q = &c.sqrt_mourre;
    v.interval("sqrt-mourre.interval", q.interval);
    v.schedule("sqrt-mourre.h_list", &q.h_list);
    v.require(q.quad_order >= 1, "sqrt-mourre.quad_order", q.quad_order, "≥ 1");
    v.require(
        q.oracle_orders.iter().all(|o| *o >= 1),
        "sqrt-mourre.oracle_orders",
        format!("{:?}", q.oracle_orders),
        "orders ≥ 1",
    );

    let r = &c.resolvent;
    v.interval("resolvent.interval", r.interval);
    v.schedule("resolvent.h_list", &r.h_list);
    for &s in &r.s_list {
        v.require((0.0..0.5).contains(&s), "resolvent.s_list", s, "s ∈ [0, 1/2) (resolvent weight gain)");
    }
    v.require(
        r.w.1 != 0.0 || r.w.0 < 0.0,
        "resolvent.w",
        format!("{:?}", r.w),
        "Im w ≠ 0 or Re w < 0 (w off the spectrum)",
    );
    v.require(r.derivatives.iter().all(|d| *d <= 1), "resolvent.derivatives", format!("{:?}", r.derivatives), "L ∈ Diff_b¹");
    v.require(r.uniform_re < 0.0, "resolvent.uniform_re", r.uniform_re, "Re w < 0");
    v.require(r.uniform_etas.iter().all(|e| *e >= 0.0), "resolvent.uniform_etas", format!("{:?}", r.uniform_etas), "Im w ≥ 0");
    for &s in &r.sigmas {
        v.require((0.0..1.0).contains(&s), "resolvent.sigmas", s, "σ ∈ [0, 1) (localized weighted pairing)");
    }
    v.require(
        r.pairing_derivatives.iter().all(|d| *d <= 2),
        "resolvent.pairing_derivatives",
        format!("{:?}", r.pairing_derivatives),
        "L ∈ Diff_b²",
    );
    if let Some(h) = r.spacing {
        v.positive("resolvent.spacing", h);
    }

    let a = &c.adjoint_bounds;
    v.interval("adjoint-bounds.interval", a.interval);
    v.schedule("adjoint-bounds.h_list", &a.h_list);
    for &mu in &a.mu_list {
        v.require((0.0..=1.0).contains(&mu), "adjoint-bounds.mu_list", mu, "μ ∈ [0, 1]");
    }
    v.require(a.ratio_max >= 1.0, "adjoint-bounds.ratio_max", a.ratio_max, "≥ 1");
    if let Some(h) = a.spacing {
        v.positive("adjoint-bounds.spacing", h);
    }

    let wv = &c.wave;
    v.positive("wave.spacing", wv.spacing);
    v.positive("wave.dt", wv.dt);
    v.schedule("wave.t_list", &wv.t_list);
    for &mu in &wv.mus {
        v.require(mu > 0.0 && mu <= 1.0, "wave.mus", mu, "μ ∈ (0, 1]");
    }
    let (b0, b1) = wv.bump;
    v.require(
        b0 > models.wave.r_min && b1 > b0,
        "wave.bump",
        format!("[{b0}, {b1}]"),
        "r_min < r_a < r_b (compactly supported data)",
    );
    let t_max = wv.t_list.last().copied().unwrap_or(0.0);
    v.require(
        wv.r_max >= b1 + t_max,
        "wave.r_max",
        wv.r_max,
        "r_max ≥ r_b + max T (finite speed keeps reflections out)",
    );
    let tr = &wv.trapping;
    v.require(tr.bump.1 > tr.bump.0, "wave.trapping.bump", format!("{:?}", tr.bump), "r_a < r_b");

    v.errors
}
