//! Experiment configuration: one TOML section per module, every knob with a
//! default so an empty file is a valid desk configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub run: RunConfig,
    pub geometry: GeometryConfig,
    pub kernels: KernelsConfig,
    pub harmonics: HarmonicsConfig,
    pub dyadic: DyadicConfig,
    pub operators: OperatorsConfig,
    pub sparse: SparseConfig,
    pub weights: WeightsConfig,
    pub orlicz: OrliczConfig,
    pub estimates: EstimatesConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// shapes by name: "parabolic", "kolmogorov"
    pub shapes: Vec<String>,
    /// directory holding reference tables as <suite>/<table>.csv
    pub golden_dir: Option<String>,
    /// relative tolerance of numeric golden comparisons
    pub golden_rtol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { seed: 7, shapes: vec!["parabolic".into(), "kolmogorov".into()], golden_dir: None, golden_rtol: 1e-9 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub samples: usize,
    pub tol: f64,
    /// bisection tolerance of the homogeneous-norm root finder
    pub norm_tol: f64,
    pub beta_samples: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { samples: 10_000, tol: 1e-10, norm_tol: 1e-12, beta_samples: 5_000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelsConfig {
    pub samples: usize,
    pub homogeneity_tol: f64,
    pub cancellation_tol: f64,
    /// annulus (a, b) per shape
    pub annulus_parabolic: [f64; 2],
    pub annulus_kolmogorov: [f64; 2],
    /// finite-difference step of the PDE residual probe (halved once)
    pub residual_h: f64,
    pub residual_band: f64,
    /// smallest t of the residual probe points
    pub residual_t_min: f64,
    pub anchor_tol: f64,
    /// scalar diffusion of the second frozen matrix tested
    pub frozen_scalar: f64,
}

impl Default for KernelsConfig {
    fn default() -> Self {
        KernelsConfig {
            samples: 200,
            homogeneity_tol: 1e-8,
            cancellation_tol: 1e-6,
            annulus_parabolic: [0.25, 4.0],
            annulus_kolmogorov: [0.5, 1.0],
            residual_h: 0.02,
            residual_band: 0.25,
            residual_t_min: 0.25,
            anchor_tol: 1e-10,
            frozen_scalar: 1.7,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarmonicsConfig {
    pub m_max: usize,
    pub orthonormality_tol: f64,
    pub m0_tol: f64,
    /// degree range of the coefficient decay fit
    pub decay_range: [usize; 2],
    pub decay_slope: f64,
    pub homogeneity_tol: f64,
    pub mean_tol: f64,
    pub samples: usize,
}

impl Default for HarmonicsConfig {
    fn default() -> Self {
        HarmonicsConfig {
            m_max: 8,
            orthonormality_tol: 1e-10,
            m0_tol: 1e-8,
            decay_range: [4, 16],
            decay_slope: -2.0,
            homogeneity_tol: 1e-10,
            mean_tol: 1e-8,
            samples: 200,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DyadicConfig {
    pub delta: f64,
    pub grids: usize,
    /// coarse and fine resolution per shape
    pub parabolic: [usize; 2],
    pub kolmogorov: [usize; 2],
    /// CZ level as a fraction of sup |f|
    pub lambda_fraction: f64,
    pub d_tilde_band: f64,
    pub covering_samples: usize,
}

impl Default for DyadicConfig {
    fn default() -> Self {
        DyadicConfig {
            delta: 0.5,
            grids: 3,
            parabolic: [32, 64],
            kolmogorov: [8, 16],
            lambda_fraction: 0.5,
            d_tilde_band: 0.2,
            covering_samples: 2_000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorsConfig {
    pub parabolic: usize,
    pub kolmogorov: usize,
    pub m_list: Vec<usize>,
    /// near/far split in homogeneous cell sizes
    pub split: f64,
    /// dilation s of M#_{T,s}
    pub s: f64,
    pub pairs: usize,
    pub slope_margin: f64,
}

impl Default for OperatorsConfig {
    fn default() -> Self {
        OperatorsConfig { parabolic: 64, kolmogorov: 16, m_list: vec![1, 2, 4, 8], split: 4.0, s: 5.0, pairs: 32, slope_margin: 0.5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparseConfig {
    pub parabolic: [usize; 2],
    pub kolmogorov: [usize; 2],
    pub m_list: Vec<usize>,
    pub budget: f64,
    pub stability: f64,
    /// lambda = lambda_factor / D~
    pub lambda_factor: f64,
    pub alpha0: f64,
    pub min_cells: usize,
    /// corpus fields whose constants enter the refinement comparison
    pub stable_fields: Vec<String>,
}

impl Default for SparseConfig {
    fn default() -> Self {
        SparseConfig {
            parabolic: [64, 128],
            kolmogorov: [16, 24],
            m_list: vec![1, 2, 4, 8],
            budget: 0.01,
            stability: 0.3,
            lambda_factor: 0.25,
            alpha0: 2.0,
            min_cells: 8,
            stable_fields: vec!["bump".into(), "bump_off".into(), "osc_bump".into(), "cube".into()],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsConfig {
    pub shapes: Vec<String>,
    pub parabolic: usize,
    pub kolmogorov: usize,
    pub p: Vec<f64>,
    /// distances to the ends of the A_p range of the power exponents
    pub eps: Vec<f64>,
    /// exponent of the weight used for the duality identity
    pub duality_gamma: f64,
    pub duality_tol: f64,
    pub min_decades: f64,
    pub commutator_m: usize,
    pub deltas: Vec<f64>,
    /// radius cutoff of the delta_K-BMO norm
    pub k_cut: f64,
    pub slope_band: f64,
    pub margin: usize,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig {
            shapes: vec!["parabolic".into()],
            parabolic: 64,
            kolmogorov: 16,
            p: vec![2.0, 1.5],
            eps: vec![0.6, 0.4, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001],
            duality_gamma: 1.2,
            duality_tol: 1e-8,
            min_decades: 2.0,
            commutator_m: 2,
            deltas: vec![0.05, 0.1, 0.2, 0.4],
            k_cut: 1.0,
            slope_band: 0.3,
            margin: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrliczConfig {
    pub parabolic: [usize; 2],
    pub kolmogorov: [usize; 2],
    pub lp: Vec<f64>,
    pub luxemburg_tol: f64,
    pub holder_pairs: usize,
    pub holder_bound: f64,
    pub double_phase: [f64; 2],
    /// p(z) = variable_base + variable_amp sin(x_1) cos(t)
    pub variable_base: f64,
    pub variable_amp: f64,
    pub weight_gamma: f64,
    pub stability: f64,
    pub stable_fields: Vec<String>,
}

impl Default for OrliczConfig {
    fn default() -> Self {
        OrliczConfig {
            parabolic: [32, 64],
            kolmogorov: [8, 16],
            lp: vec![1.5, 2.0, 3.5],
            luxemburg_tol: 1e-8,
            holder_pairs: 100,
            holder_bound: 2.0,
            double_phase: [1.5, 2.5],
            variable_base: 2.0,
            variable_amp: 0.4,
            weight_gamma: 0.5,
            stability: 0.3,
            stable_fields: vec!["bump".into(), "bump_off".into(), "osc_bump".into(), "cube".into()],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatesConfig {
    /// coarse and base resolution of the representation runs
    pub rep_parabolic: [usize; 2],
    pub rep_kolmogorov: [usize; 2],
    /// approximate number of evaluation cells per representation run
    pub rep_targets: usize,
    pub m_list: Vec<usize>,
    pub rep_tol_parabolic: f64,
    pub rep_tol_kolmogorov: f64,
    pub y_identity_tol: f64,
    /// parabolic resolution of the variable-coefficient representation run, 0 skips it
    pub variable_rep_n: usize,
    /// coarse and fine resolution of the theorem ratios
    pub thm_parabolic: [usize; 2],
    pub thm_kolmogorov: [usize; 2],
    /// amplitude of the oscillating coefficients
    pub delta: f64,
    pub k_cut: f64,
    pub margin: usize,
    pub p: f64,
    /// power exponents as fractions of the A_p range ends
    pub gamma_fractions: Vec<f64>,
    pub stability: f64,
    /// slack of the exponent comparisons
    pub exponent_slack: f64,
}

impl Default for EstimatesConfig {
    fn default() -> Self {
        EstimatesConfig {
            rep_parabolic: [128, 256],
            rep_kolmogorov: [24, 48],
            rep_targets: 500,
            m_list: vec![2, 4, 8],
            rep_tol_parabolic: 0.10,
            rep_tol_kolmogorov: 0.20,
            y_identity_tol: 1e-10,
            variable_rep_n: 32,
            thm_parabolic: [64, 128],
            thm_kolmogorov: [24, 48],
            delta: 0.2,
            k_cut: 1.0,
            margin: 4,
            p: 2.0,
            gamma_fractions: vec![0.0, 0.5, -0.5, 0.8, -0.8],
            stability: 0.3,
            exponent_slack: 0.25,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        for s in self.run.shapes.iter().chain(&self.weights.shapes) {
            if kfp_core::OperatorShape::by_name(s).is_none() {
                return bad(&format!("unknown shape '{s}'"));
            }
        }
        if self.geometry.samples == 0 || self.kernels.samples == 0 || self.harmonics.samples == 0 {
            return bad("sample counts must be positive");
        }
        if self.harmonics.decay_range[0] >= self.harmonics.decay_range[1] {
            return bad("harmonics.decay_range must be increasing");
        }
        for pair in [self.dyadic.parabolic, self.dyadic.kolmogorov, self.sparse.parabolic, self.sparse.kolmogorov, self.orlicz.parabolic, self.orlicz.kolmogorov] {
            if pair[0] < 4 || pair[0] >= pair[1] {
                return bad("resolution pairs must be increasing and at least 4");
            }
        }
        if self.operators.m_list.is_empty() || self.sparse.m_list.is_empty() || self.estimates.m_list.is_empty() {
            return bad("degree lists must be nonempty");
        }
        if self.weights.p.iter().chain([&self.estimates.p]).any(|p| *p <= 1.0) {
            return bad("exponents p must exceed 1");
        }
        if self.weights.eps.iter().any(|e| !(0.0..1.0).contains(e) || *e == 0.0) {
            return bad("weights.eps entries must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.estimates.delta) {
            return bad("estimates.delta must lie in [0, 1)");
        }
        if self.estimates.gamma_fractions.iter().any(|g| g.abs() >= 1.0) {
            return bad("estimates.gamma_fractions must lie in (-1, 1)");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let c = Config::parse("").unwrap();
        assert_eq!(c.run.seed, 7);
        assert_eq!(c.sparse.m_list, vec![1, 2, 4, 8]);
    }

    #[test]
    fn unknown_key_and_shape_rejected() {
        assert!(matches!(Config::parse("[geometry]\nsampels = 3\n"), Err(CliError::Config(_))));
        assert!(matches!(Config::parse("[run]\nshapes = [\"elliptic\"]\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        let text = toml::to_string(&c).unwrap();
        let back = Config::parse(&text).unwrap();
        assert_eq!(toml::to_string(&back).unwrap(), text);
    }
}
