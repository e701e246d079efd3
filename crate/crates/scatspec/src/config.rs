//! Experiment configuration: a closed TOML schema with defaults for every
//! field, per-suite model overrides and dotted-path command-line overrides.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use scatspec_core::geometry::{AngularSpectrum, Cutoff, ManifoldModel, Potential, Warp};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarpFamily {
    Flat,
    Decay,
    Trapping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WarpConfig {
    pub family: WarpFamily,
    pub c: f64,
    pub center: f64,
    pub width: f64,
}

impl Default for WarpConfig {
    fn default() -> Self {
        WarpConfig { family: WarpFamily::Flat, c: 0.0, center: 4.0, width: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotentialConfig {
    pub v0: f64,
    pub rho_prime: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig { v0: 0.0, rho_prime: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffKind {
    Collar,
    Everywhere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CutoffConfig {
    pub kind: CutoffKind,
    pub r0: f64,
    pub r1: f64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig { kind: CutoffKind::Collar, r0: 2.0, r1: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Sphere,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumConfig {
    pub kind: SpectrumKind,
    pub k_max: usize,
    /// (λ, multiplicity) pairs for `kind = "custom"`.
    pub values: Vec<(f64, u64)>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { kind: SpectrumKind::Sphere, k_max: 256, values: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub n: usize,
    pub r_min: f64,
    pub rho: f64,
    pub warp: WarpConfig,
    pub potential: PotentialConfig,
    pub cutoff: CutoffConfig,
    pub spectrum: SpectrumConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n: 3,
            r_min: 1.0,
            rho: 1.0,
            warp: WarpConfig::default(),
            potential: PotentialConfig::default(),
            cutoff: CutoffConfig::default(),
            spectrum: SpectrumConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> ManifoldModel {
        let w = &self.warp;
        let warp = match w.family {
            WarpFamily::Flat => Warp::Flat,
            WarpFamily::Decay => Warp::Decay { c: w.c },
            WarpFamily::Trapping => Warp::Trapping { c: w.c, center: w.center, width: w.width },
        };
        let cutoff = match self.cutoff.kind {
            CutoffKind::Collar => Cutoff::Collar { r0: self.cutoff.r0, r1: self.cutoff.r1 },
            CutoffKind::Everywhere => Cutoff::Everywhere,
        };
        let spectrum = match self.spectrum.kind {
            SpectrumKind::Sphere => AngularSpectrum::Sphere { k_max: self.spectrum.k_max },
            SpectrumKind::Custom => AngularSpectrum::Custom(self.spectrum.values.clone()),
        };
        ManifoldModel {
            n: self.n,
            r_min: self.r_min,
            warp,
            rho: self.rho,
            potential: Potential { v0: self.potential.v0, rho_prime: self.potential.rho_prime },
            cutoff,
            spectrum,
        }
    }
}

/// Window grid rule r_max = q·π·H/√(inf I) with uniform spacing h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub oversampling: f64,
    pub spacing: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { oversampling: 8.0, spacing: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardyConfig {
    /// (n, s) pairs.
    pub cases: Vec<(usize, f64)>,
    pub ratios: Vec<f64>,
    pub nodes: usize,
    /// Upper edge of the acceptance band, as a multiple of the sharp constant.
    pub band: f64,
    pub solver_tol: f64,
}

impl Default for HardyConfig {
    fn default() -> Self {
        HardyConfig {
            cases: vec![(3, 0.0), (4, 0.5), (5, 0.0), (5, 1.0)],
            ratios: vec![1e2, 1e3, 1e4],
            nodes: 4096,
            band: 1.05,
            solver_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoincareConfig {
    pub model: Option<Table>,
    pub s: f64,
    pub eps: f64,
    pub r_max: Vec<f64>,
    pub spacing: f64,
    pub drift_tol: f64,
    pub thetas: Vec<f64>,
    pub samples: usize,
    pub interpolation_slack: f64,
    pub vb_n: usize,
    pub vb_k_max: usize,
    pub vb_r_max: Vec<f64>,
    pub vb_spacing: f64,
}

impl Default for PoincareConfig {
    fn default() -> Self {
        PoincareConfig {
            model: None,
            s: 0.0,
            eps: 0.0,
            r_max: vec![1000.0, 2000.0],
            spacing: 0.5,
            drift_tol: 0.1,
            thetas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            samples: 100,
            interpolation_slack: 0.01,
            vb_n: 5,
            vb_k_max: 4,
            vb_r_max: vec![80.0, 160.0],
            vb_spacing: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightConfig {
    pub model: Option<Table>,
    pub dims: Vec<usize>,
    pub t0: Vec<f64>,
    /// Fractions of (n−2)/2 at which s is sampled.
    pub s_fractions: Vec<f64>,
    pub t_points: usize,
    /// ε for the exact-cone Δ_g f check.
    pub eps: f64,
    pub threshold_s: f64,
    pub threshold_t0: f64,
    pub eps_range: (f64, f64),
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            model: None,
            dims: vec![3, 4, 5, 6],
            t0: vec![0.1, 0.2, 0.3, 0.4, 0.49],
            s_fractions: vec![0.05, 0.25, 0.5, 0.75, 0.95],
            t_points: 1000,
            eps: 0.5,
            threshold_s: 0.25,
            threshold_t0: 0.4,
            eps_range: (0.01, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MourreConfig {
    pub model: Option<Table>,
    pub interval: (f64, f64),
    pub h_list: Vec<f64>,
    pub c_min: f64,
    pub h0_max: f64,
    /// Allowed deviation of the fitted slope from −ρ, as a fraction of ρ.
    pub slope_tol: f64,
    pub r_squared_min: f64,
    pub oracle_r_max: f64,
    pub oracle_nodes: (usize, usize),
    pub oracle_tol: f64,
    pub order_band: (f64, f64),
    pub commutator_r_max: f64,
    pub commutator_nodes: (usize, usize),
    pub commutator_tol: f64,
    /// Bound on the weighted self-adjointness residuals of P, A and K.
    pub residual_tol: f64,
    /// Bound on ‖Π² − Π‖ for the window projectors.
    pub projector_tol: f64,
}

impl Default for MourreConfig {
    fn default() -> Self {
        MourreConfig {
            model: None,
            interval: (0.5, 2.0),
            h_list: vec![4.0, 8.0, 16.0, 32.0],
            c_min: 0.25,
            h0_max: 32.0,
            slope_tol: 0.3,
            r_squared_min: 0.9,
            oracle_r_max: 11.0,
            oracle_nodes: (1025, 2049),
            oracle_tol: 1e-3,
            order_band: (3.5, 4.5),
            commutator_r_max: 41.0,
            commutator_nodes: (2048, 4096),
            commutator_tol: 1e-3,
            residual_tol: 1e-12,
            projector_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SqrtMourreConfig {
    pub model: Option<Table>,
    pub interval: (f64, f64),
    pub h_list: Vec<f64>,
    pub c_min: f64,
    pub quad_order: usize,
    pub defect_tol: f64,
    pub oracle_r_max: f64,
    pub oracle_nodes: usize,
    pub oracle_tol: f64,
    pub oracle_orders: Vec<usize>,
}

impl Default for SqrtMourreConfig {
    fn default() -> Self {
        SqrtMourreConfig {
            model: None,
            interval: (0.5, 2.0),
            h_list: vec![4.0, 8.0, 16.0, 32.0],
            c_min: 0.1,
            quad_order: 16,
            defect_tol: 1e-6,
            oracle_r_max: 41.0,
            oracle_nodes: 400,
            oracle_tol: 1e-6,
            oracle_orders: vec![2, 4, 8, 16],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResolventConfig {
    pub model: Option<Table>,
    pub spacing: Option<f64>,
    pub interval: (f64, f64),
    pub h_list: Vec<f64>,
    pub s_list: Vec<f64>,
    /// Spectral parameter w = re + i·im.
    pub w: (f64, f64),
    pub derivatives: Vec<usize>,
    pub slope_tol: f64,
    pub uniform_re: f64,
    pub uniform_etas: Vec<f64>,
    pub uniform_h: f64,
    pub uniform_ratio: f64,
    pub sigmas: Vec<f64>,
    pub pairing_derivatives: Vec<usize>,
}

impl Default for ResolventConfig {
    fn default() -> Self {
        ResolventConfig {
            model: None,
            spacing: Some(0.25),
            interval: (0.5, 2.0),
            h_list: vec![4.0, 8.0, 16.0, 32.0],
            s_list: vec![0.0, 0.4],
            w: (0.0, 1.0),
            derivatives: vec![0, 1],
            slope_tol: 0.15,
            uniform_re: -1.0,
            uniform_etas: vec![1.0, 0.1, 0.01, 0.001, 0.0],
            uniform_h: 16.0,
            uniform_ratio: 2.0,
            sigmas: vec![0.0, 0.5],
            pairing_derivatives: vec![0, 1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdjointConfig {
    pub model: Option<Table>,
    pub spacing: Option<f64>,
    pub interval: (f64, f64),
    pub h_list: Vec<f64>,
    pub mu_list: Vec<f64>,
    pub ratio_max: f64,
    pub slope_tol: f64,
    pub quad_order: usize,
    pub identity_tol: f64,
    /// (weight, b-derivatives) of each L tested in the conjugate-projector lemma.
    pub projector_l: Vec<(f64, usize)>,
}

impl Default for AdjointConfig {
    fn default() -> Self {
        AdjointConfig {
            model: None,
            spacing: Some(0.25),
            interval: (0.5, 2.0),
            h_list: vec![8.0, 16.0, 32.0, 64.0],
            mu_list: vec![0.5, 1.0],
            ratio_max: 2.0,
            slope_tol: 0.15,
            quad_order: 16,
            identity_tol: 1e-8,
            projector_l: vec![(1.0, 0), (1.0, 1)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrappingConfig {
    pub enabled: bool,
    pub c: f64,
    pub center: f64,
    pub width: f64,
    pub mode: usize,
    pub bump: (f64, f64),
}

impl Default for TrappingConfig {
    fn default() -> Self {
        TrappingConfig { enabled: true, c: 2.0, center: 4.0, width: 1.0, mode: 30, bump: (3.0, 5.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveConfig {
    pub model: Option<Table>,
    pub r_max: f64,
    pub spacing: f64,
    pub dt: f64,
    pub t_list: Vec<f64>,
    pub mus: Vec<f64>,
    pub bump: (f64, f64),
    /// Angular mode indices carrying the initial data.
    pub modes: Vec<usize>,
    pub plateau_tol: f64,
    pub slope_tol: f64,
    pub energy_tol: f64,
    pub trapping: TrappingConfig,
}

impl Default for WaveConfig {
    fn default() -> Self {
        WaveConfig {
            model: None,
            r_max: 64.0,
            spacing: 0.1,
            dt: 0.1,
            t_list: vec![8.0, 16.0, 32.0, 48.0],
            mus: vec![1.0, 0.5, 0.25],
            bump: (2.0, 4.0),
            modes: vec![0],
            plateau_tol: 1.1,
            slope_tol: 0.15,
            energy_tol: 1e-8,
            trapping: TrappingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub out: Option<PathBuf>,
    pub hardy: HardyConfig,
    pub poincare: PoincareConfig,
    pub weight: WeightConfig,
    pub mourre: MourreConfig,
    #[serde(rename = "sqrt-mourre")]
    pub sqrt_mourre: SqrtMourreConfig,
    pub resolvent: ResolventConfig,
    #[serde(rename = "adjoint-bounds")]
    pub adjoint_bounds: AdjointConfig,
    pub wave: WaveConfig,
}

/// A validated configuration together with its canonical form.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    /// The merged TOML after overrides, keys sorted.
    pub canonical: String,
    /// SHA-256 of `canonical`, hex encoded.
    pub hash: String,
    /// Models per suite after applying `[suite.model]` overrides.
    pub models: SuiteModels,
}

#[derive(Debug, Clone)]
pub struct SuiteModels {
    pub base: ModelConfig,
    pub poincare: ModelConfig,
    pub weight: ModelConfig,
    pub mourre: ModelConfig,
    pub sqrt_mourre: ModelConfig,
    pub resolvent: ModelConfig,
    pub adjoint_bounds: ModelConfig,
    pub wave: ModelConfig,
}

impl LoadedConfig {
    /// Seed for every sampled quantity, derived from the configuration hash.
    pub fn seed(&self) -> u64 {
        u64::from_str_radix(&self.hash[..16], 16).expect("hash is hex")
    }
}

fn strict<T: DeserializeOwned>(value: Value, prefix: &str, errors: &mut Vec<String>) -> Option<T> {
    let mut unknown = Vec::new();
    let parsed = serde_ignored::deserialize(value, |path| unknown.push(path.to_string()));
    for key in unknown {
        let full = if prefix.is_empty() { key } else { format!("{prefix}.{key}") };
        errors.push(format!("unknown key `{full}`"));
    }
    match parsed {
        Ok(v) => Some(v),
        Err(e) => {
            let where_ = if prefix.is_empty() { String::new() } else { format!("in [{prefix}]: ") };
            errors.push(format!("{where_}{e}"));
            None
        }
    }
}

/// Parses the right-hand side of `key=value` as a TOML value, falling back
/// to a bare string.
fn parse_override_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

pub fn apply_override(root: &mut Table, spec: &str) -> Result<(), String> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| format!("override `{spec}` is not of the form key=value"))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(format!("override key `{key}` has an empty segment"));
    }
    let mut table = root;
    for seg in &path[..path.len() - 1] {
        let entry = table.entry(seg.to_string()).or_insert_with(|| Value::Table(Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| format!("override `{key}`: `{seg}` is not a table"))?;
    }
    table.insert(path[path.len() - 1].to_string(), parse_override_value(raw.trim()));
    Ok(())
}

fn merge(base: &mut Table, over: &Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn suite_model(root: &Table, suite: &str, errors: &mut Vec<String>) -> Option<ModelConfig> {
    let mut merged = root.get("model").and_then(Value::as_table).cloned().unwrap_or_default();
    if let Some(over) = root.get(suite).and_then(|s| s.get("model")).and_then(Value::as_table) {
        merge(&mut merged, over);
    }
    let prefix = if root.get(suite).and_then(|s| s.get("model")).is_some() {
        format!("{suite}.model")
    } else {
        "model".to_string()
    };
    let mut local = Vec::new();
    let model = strict::<ModelConfig>(Value::Table(merged), &prefix, &mut local);
    // unknown keys of the base model are already reported once
    if prefix != "model" {
        errors.extend(local);
    }
    model
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text, overrides)
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<LoadedConfig, CliError> {
    let mut root: Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(vec![e.to_string()]))?;
    let mut errors = Vec::new();
    for spec in overrides {
        if let Err(e) = apply_override(&mut root, spec) {
            errors.push(e);
        }
    }
    let config: Option<Config> = strict(Value::Table(root.clone()), "", &mut errors);
    let models = [
        "poincare",
        "weight",
        "mourre",
        "sqrt-mourre",
        "resolvent",
        "adjoint-bounds",
        "wave",
    ]
    .map(|s| suite_model(&root, s, &mut errors));
    let (Some(config), [Some(poincare), Some(weight), Some(mourre), Some(sqrt_mourre), Some(resolvent), Some(adjoint_bounds), Some(wave)]) =
        (config, models)
    else {
        return Err(CliError::Config(errors));
    };
    let models = SuiteModels {
        base: config.model.clone(),
        poincare,
        weight,
        mourre,
        sqrt_mourre,
        resolvent,
        adjoint_bounds,
        wave,
    };
    errors.extend(crate::validate::validate(&config, &models));
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    let canonical = toml::to_string(&root).expect("a parsed table serializes");
    let hash = Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    Ok(LoadedConfig { config, canonical, hash, models })
}
