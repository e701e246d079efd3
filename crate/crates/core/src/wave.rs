//! Wave evolution (∂_t² + P)u = 0 by exact spectral synthesis per mode, and
//! the weighted local energy ∫₀^T ‖x^μu′‖² dt.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::discretize::{ModeOperator, RadialGrid};
use crate::fit::{loglog, PowerFit};
use crate::geometry::ManifoldModel;
use crate::linalg::Eigen;
use crate::quadrature::simpson;
use crate::{Error, Result};

/// Room left between the outgoing front and r_max, in units of r.
pub const CONTAMINATION_MARGIN: f64 = 8.0;

/// exp(−1/(τ(1−τ))) on (r_a, r_b), τ = (r − r_a)/(r_b − r_a).
pub fn bump_profile(grid: &RadialGrid, r_a: f64, r_b: f64) -> Result<Vec<f64>> {
    if !(r_a > grid.r_min() && r_b < grid.r_max() && r_b > r_a) {
        return Err(Error::Domain(format!(
            "bump support [{r_a}, {r_b}] is not inside ({}, {})",
            grid.r_min(),
            grid.r_max()
        )));
    }
    if r_b - r_a < 4.0 * grid.h() {
        return Err(Error::Resolution(format!("bump width {} < 4h = {}", r_b - r_a, 4.0 * grid.h())));
    }
    Ok(grid
        .interior()
        .iter()
        .map(|r| {
            let tau = (r - r_a) / (r_b - r_a);
            if tau > 0.0 && tau < 1.0 {
                libm::exp(-1.0 / (tau * (1.0 - tau)))
            } else {
                0.0
            }
        })
        .collect())
}

/// One angular mode of a wave: eigenbasis coefficients of (u₀, u₁).
#[derive(Debug, Clone)]
pub struct ModeWave {
    pub op: ModeOperator,
    pub eigen: Eigen,
    pub omega: Vec<f64>,
    /// c_j = ⟨u₀, e_j⟩_m.
    pub c: Vec<f64>,
    /// d_j = ⟨u₁, e_j⟩_m.
    pub d: Vec<f64>,
}

impl ModeWave {
    /// (u(t), ∂_t u(t)) on nodal values.
    pub fn evolve(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.op.dim();
        let mut us = vec![0.0; n];
        let mut vs = vec![0.0; n];
        for (j, e) in self.eigen.vectors().enumerate() {
            let (s, c) = (libm::sin(self.omega[j] * t), libm::cos(self.omega[j] * t));
            let a = self.c[j] * c + self.d[j] * s / self.omega[j];
            let b = -self.c[j] * self.omega[j] * s + self.d[j] * c;
            if a == 0.0 && b == 0.0 {
                continue;
            }
            for i in 0..n {
                us[i] += a * e[i];
                vs[i] += b * e[i];
            }
        }
        let root: Vec<f64> = self.op.weights.iter().map(|m| libm::sqrt(*m)).collect();
        (
            us.iter().zip(&root).map(|(x, r)| x / r).collect(),
            vs.iter().zip(&root).map(|(x, r)| x / r).collect(),
        )
    }

    /// ‖u_t‖² + ⟨Pu, u⟩ from nodal fields.
    pub fn energy(&self, u: &[f64], ut: &[f64]) -> f64 {
        let pu = self.op.p.apply(u);
        self.op
            .weights
            .iter()
            .enumerate()
            .map(|(i, m)| m * (ut[i] * ut[i] + pu[i] * u[i]))
            .sum()
    }
}

/// Per-mode wave data at t = 0.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub modes: Vec<ModeWave>,
    /// Grid spacing, for the midpoint gradient.
    pub h: f64,
    pub r_min: f64,
    pub r_max: f64,
}

/// Projects initial data onto the full eigenbasis of each listed mode.
/// `data` holds (λ, u₀, u₁) triples on interior nodes.
pub fn synthesize_initial_data(model: &ManifoldModel, grid: &RadialGrid, data: &[(f64, Vec<f64>, Vec<f64>)]) -> Result<WaveState> {
    let dim = grid.interior().len();
    let mut modes = Vec::with_capacity(data.len());
    for (lambda, u0, u1) in data {
        for v in [u0, u1] {
            if v.len() != dim {
                return Err(Error::Dimension { expected: dim, found: v.len() });
            }
        }
        let op = ModeOperator::assemble(model, grid, *lambda)?;
        let eigen = op.p_symmetric()?.eigen()?;
        if let Some(mu) = eigen.values.iter().find(|mu| !(**mu > 0.0)) {
            return Err(Error::Domain(format!("nonpositive eigenvalue {mu} in a wave mode")));
        }
        let omega = eigen.values.iter().map(|mu| libm::sqrt(*mu)).collect();
        let project = |u: &[f64]| -> Vec<f64> {
            let su: Vec<f64> = u.iter().zip(&op.weights).map(|(x, m)| x * libm::sqrt(*m)).collect();
            eigen.vectors().map(|e| crate::linalg::dot(e, &su)).collect()
        };
        let c = project(u0);
        let d = project(u1);
        modes.push(ModeWave { op, eigen, omega, c, d });
    }
    Ok(WaveState { modes, h: grid.h(), r_min: grid.r_min(), r_max: grid.r_max() })
}

impl WaveState {
    pub fn evolve(&self, t: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.modes.iter().map(|m| m.evolve(t)).collect()
    }

    pub fn energy_at(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let (u, ut) = m.evolve(t);
                m.energy(&u, &ut)
            })
            .sum()
    }

    /// Parseval energy from the coefficients: Σ d_j² + μ_j c_j².
    pub fn spectral_energy(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.c.iter().zip(&m.d).zip(&m.eigen.values).map(|((c, d), mu)| d * d + mu * c * c).sum::<f64>())
            .sum()
    }
}

/// ∫ x^{2μ}(|u_t|² + |∂_r u|² + λ|u|²/w²) dvol for one mode, x = r_min/r.
/// μ = 0 gives the unweighted energy without the potential.
pub fn weighted_energy_density(model: &ManifoldModel, wave: &ModeWave, h: f64, u: &[f64], ut: &[f64], mu: f64) -> Vec<f64> {
    let n1 = model.n as f64 - 1.0;
    let radii = &wave.op.radii;
    let m = &wave.op.weights;
    let x = |r: f64| libm::pow(model.r_min / r, 2.0 * mu);
    let n = radii.len();
    let mut density = vec![0.0; n];
    for i in 0..n {
        let w = model.warp_at(radii[i]).w;
        density[i] += x(radii[i]) * m[i] * (ut[i] * ut[i] + wave.op.lambda * u[i] * u[i] / (w * w));
    }
    // the flux of cell (i, i+1) is split evenly between its two nodes
    for i in 0..=n {
        let left = if i == 0 { 0.0 } else { u[i - 1] };
        let right = if i == n { 0.0 } else { u[i] };
        let r = if i == 0 { radii[0] - 0.5 * h } else { radii[i - 1] + 0.5 * h };
        let flux = x(r) * libm::pow(model.warp_at(r).w, n1) * (right - left) * (right - left) / h;
        if i > 0 {
            density[i - 1] += 0.5 * flux;
        }
        if i < n {
            density[i] += 0.5 * flux;
        }
    }
    density
}

/// ‖x^μu′‖² summed over modes.
pub fn weighted_energy(model: &ManifoldModel, state: &WaveState, fields: &[(Vec<f64>, Vec<f64>)], mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::Parameter { name: "mu", value: mu, hypothesis: "μ ∈ (0, 1]" });
    }
    Ok(energy_sum(model, state, fields, mu))
}

fn energy_sum(model: &ManifoldModel, state: &WaveState, fields: &[(Vec<f64>, Vec<f64>)], mu: f64) -> f64 {
    state
        .modes
        .iter()
        .zip(fields)
        .map(|(m, (u, ut))| weighted_energy_density(model, m, state.h, u, ut, mu).iter().sum::<f64>())
        .sum()
}

/// Energy outside [lo, hi], as a fraction of the total unweighted energy.
pub fn energy_outside(model: &ManifoldModel, state: &WaveState, fields: &[(Vec<f64>, Vec<f64>)], lo: f64, hi: f64) -> f64 {
    let mut outside = 0.0;
    let mut total = 0.0;
    for (m, (u, ut)) in state.modes.iter().zip(fields) {
        let d = weighted_energy_density(model, m, state.h, u, ut, 0.0);
        for (r, e) in m.op.radii.iter().zip(&d) {
            total += e;
            if *r < lo || *r > hi {
                outside += e;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outside / total
    }
}

/// F_μ^ε(T): T^{1−2μ−2ε} for μ ≤ 1/2, 1 otherwise.
pub fn rate_function(mu: f64, eps: f64, t: f64) -> f64 {
    if mu <= 0.5 {
        libm::pow(t, 1.0 - 2.0 * mu - 2.0 * eps)
    } else {
        1.0
    }
}

/// Time series and fitted growth of Q(T) = ∫₀^T ‖x^μu′‖² dt.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub mu: f64,
    pub times: Vec<f64>,
    /// ‖x^μu′(t)‖² at the sample times.
    pub local_energy: Vec<f64>,
    /// Total energy at the sample times.
    pub energy: Vec<f64>,
    pub t_values: Vec<f64>,
    pub q: Vec<f64>,
    pub fit: Option<PowerFit>,
    /// Q(T_max)/Q(T_max/2).
    pub plateau_ratio: f64,
    /// max_t |E(t) − E(0)|/E(0).
    pub energy_drift: f64,
}

impl DecayFit {
    /// The theorem's bound: plateau for μ > 1/2, slope ≤ 1 − 2μ + tol otherwise.
    pub fn within_bound(&self, slope_tol: f64, plateau_tol: f64) -> bool {
        if self.mu > 0.5 {
            self.plateau_ratio <= plateau_tol
        } else {
            self.fit.is_some_and(|f| f.slope <= 1.0 - 2.0 * self.mu + slope_tol)
        }
    }
}

/// Samples the evolution on [0, max T] with step `dt`, and fits Q(T) for
/// every μ. `support_end` is the outer edge of the initial data; the
/// domain must hold the front until max T plus [`CONTAMINATION_MARGIN`].
pub fn decay_rate_fit(
    model: &ManifoldModel,
    state: &WaveState,
    mus: &[f64],
    t_list: &[f64],
    dt: f64,
    support_end: f64,
) -> Result<Vec<DecayFit>> {
    let t_max = t_list.iter().cloned().fold(0.0f64, f64::max);
    let required = support_end + t_max + CONTAMINATION_MARGIN;
    if state.r_max < required {
        return Err(Error::Contamination { r_max: state.r_max, required });
    }
    if let Some(mu) = mus.iter().find(|m| !(**m > 0.0 && **m <= 1.0)) {
        return Err(Error::Parameter { name: "mu", value: *mu, hypothesis: "μ ∈ (0, 1]" });
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter { name: "dt", value: dt, hypothesis: "time step > 0" });
    }
    let steps = libm::round(t_max / dt) as usize;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    let mut series = vec![Vec::with_capacity(times.len()); mus.len()];
    let mut energy = Vec::with_capacity(times.len());
    for &t in &times {
        let fields = state.evolve(t);
        energy.push(state.modes.iter().zip(&fields).map(|(m, (u, ut))| m.energy(u, ut)).sum::<f64>());
        for (k, mu) in mus.iter().enumerate() {
            series[k].push(energy_sum(model, state, &fields, *mu));
        }
    }
    let e0 = energy[0];
    let energy_drift = energy.iter().fold(0.0f64, |a, e| a.max(libm::fabs(e - e0))) / e0;
    let q_at = |s: &[f64], t: f64| -> f64 {
        let k = libm::round(t / dt) as usize;
        simpson(&s[..=k], dt)
    };
    Ok(mus
        .iter()
        .zip(series)
        .map(|(mu, s)| {
            let q: Vec<f64> = t_list.iter().map(|t| q_at(&s, *t)).collect();
            let plateau_ratio = q_at(&s, t_max) / q_at(&s, 0.5 * t_max);
            DecayFit {
                mu: *mu,
                times: times.clone(),
                local_energy: s,
                energy: energy.clone(),
                t_values: t_list.to_vec(),
                fit: loglog(t_list, &q).ok(),
                q,
                plateau_ratio,
                energy_drift,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_state(lambda: f64) -> (ManifoldModel, RadialGrid, WaveState) {
        let model = ManifoldModel::cone(3);
        let grid = RadialGrid::with_spacing(&model, 30.0, 0.1).unwrap();
        let u0 = bump_profile(&grid, 2.0, 4.0).unwrap();
        let u1 = vec![0.0; u0.len()];
        let state = synthesize_initial_data(&model, &grid, &[(lambda, u0, u1)]).unwrap();
        (model, grid, state)
    }

    #[test]
    fn initial_data_is_reproduced_and_energy_conserved() {
        let (model, grid, state) = flat_state(2.0);
        let u0 = bump_profile(&grid, 2.0, 4.0).unwrap();
        let (u, ut) = &state.evolve(0.0)[0];
        let err = u.iter().zip(&u0).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(err < 1e-12 && ut.iter().all(|v| v.abs() < 1e-12));
        let e0 = state.energy_at(0.0);
        assert!((state.spectral_energy() - e0).abs() < 1e-10 * e0);
        for t in [1.0, 7.5, 20.0] {
            assert!((state.energy_at(t) - e0).abs() < 1e-10 * e0);
        }
        let fields = state.evolve(0.0);
        assert!(weighted_energy(&model, &state, &fields, 0.0).is_err());
    }

    #[test]
    fn time_reversal() {
        let (_, _, state) = flat_state(0.0);
        let m = &state.modes[0];
        let (u, ut) = m.evolve(5.0);
        let reversed = synthesize_initial_data(
            &ManifoldModel::cone(3),
            &RadialGrid::with_spacing(&ManifoldModel::cone(3), 30.0, 0.1).unwrap(),
            &[(0.0, u, ut.iter().map(|v| -v).collect())],
        )
        .unwrap();
        let (back, _) = reversed.modes[0].evolve(5.0);
        let (orig, _) = m.evolve(0.0);
        assert!(back.iter().zip(&orig).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn unresolved_bump_is_rejected() {
        let model = ManifoldModel::cone(3);
        let grid = RadialGrid::with_spacing(&model, 30.0, 0.5).unwrap();
        assert!(matches!(bump_profile(&grid, 2.0, 3.5), Err(Error::Resolution(_))));
    }

    #[test]
    fn short_domain_is_refused() {
        let (model, _, state) = flat_state(0.0);
        let err = decay_rate_fit(&model, &state, &[1.0], &[8.0, 16.0, 32.0], 0.1, 4.0).unwrap_err();
        assert!(matches!(err, Error::Contamination { .. }));
    }
}
