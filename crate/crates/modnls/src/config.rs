//! Run configuration: a flat, human-editable TOML file with nested sections
//! for the modulation, plus flag overrides that take precedence. The merged
//! effective configuration is echoed into every output manifest.

use crate::error::{Error, Result};
use crate::integrators::Scheme;
use crate::modulation::{ModulationPath, DEFAULT_ROUGH_MODES};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulationKind {
    Affine,
    Sine,
    Rough,
    Brownian,
}

impl FromStr for ModulationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affine" => Ok(ModulationKind::Affine),
            "sine" => Ok(ModulationKind::Sine),
            "rough" | "rough_fourier" => Ok(ModulationKind::Rough),
            "brownian" => Ok(ModulationKind::Brownian),
            other => Err(Error::Config(format!(
                "modulation.kind: unknown kind `{other}` (expected affine, sine, rough or brownian)"
            ))),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "randomized" | "randomized_exponential" => Ok(Scheme::RandomizedExponential),
            "classical" | "classical_exponential" => Ok(Scheme::ClassicalExponential),
            "strang" => Ok(Scheme::Strang),
            other => Err(Error::Config(format!(
                "schemes: unknown scheme `{other}` (expected randomized, classical or strang)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ModulationConfig {
    pub kind: ModulationKind,
    pub alpha: f64,
    pub n_modes: usize,
    pub seed: u64,
    pub slope: f64,
    pub intercept: f64,
    pub brownian_steps: usize,
    /// Path horizon; defaults to the experiment horizon T.
    pub t_max: Option<f64>,
}

impl Default for ModulationConfig {
    fn default() -> Self {
        ModulationConfig {
            kind: ModulationKind::Sine,
            alpha: 0.5,
            n_modes: DEFAULT_ROUGH_MODES,
            seed: 7,
            slope: 1.0,
            intercept: 0.0,
            brownian_steps: 1 << 12,
            t_max: None,
        }
    }
}

impl ModulationConfig {
    pub fn build(&self, t_end: f64) -> Result<ModulationPath<f64>> {
        let t_max = self.t_max.unwrap_or(t_end);
        match self.kind {
            ModulationKind::Affine => Ok(ModulationPath::affine(self.slope, self.intercept)),
            ModulationKind::Sine => Ok(ModulationPath::sine()),
            ModulationKind::Rough => {
                ModulationPath::rough(self.alpha, self.n_modes, self.seed, t_max)
            }
            ModulationKind::Brownian => {
                ModulationPath::brownian(self.brownian_steps, t_max, self.seed)
            }
        }
    }
}

/// Effective, validated run configuration (the defaults reproduce the
/// benchmark protocol: K = 2⁷, T = 1, σ = 1, m = 100, u₀ = cos x/(2−sin x)).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dimension: usize,
    pub largest_mode: usize,
    pub sigma: f64,
    pub t_end: f64,
    pub step_counts: Vec<usize>,
    pub m: usize,
    pub schemes: Vec<Scheme>,
    pub dealias: bool,
    pub modulation: ModulationConfig,
    pub base_seed: u64,
    pub reference_seed: u64,
    pub refinement: usize,
    pub check_reference: bool,
    /// Worker threads; defaults to the available cores. Results are
    /// independent of this value.
    pub threads: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dimension: 1,
            largest_mode: 128,
            sigma: 1.0,
            t_end: 1.0,
            step_counts: (4..=10).map(|p| 1usize << p).collect(),
            m: 100,
            schemes: vec![
                Scheme::RandomizedExponential,
                Scheme::ClassicalExponential,
                Scheme::Strang,
            ],
            dealias: false,
            modulation: ModulationConfig::default(),
            base_seed: 1_234_567,
            reference_seed: 7_654_321,
            refinement: 64,
            check_reference: false,
            threads: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Flag overrides; set fields take precedence over file values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub largest_mode: Option<usize>,
    pub sigma: Option<f64>,
    pub t_end: Option<f64>,
    pub step_counts: Option<Vec<usize>>,
    pub m: Option<usize>,
    pub schemes: Option<Vec<Scheme>>,
    pub dealias: Option<bool>,
    pub kind: Option<ModulationKind>,
    pub alpha: Option<f64>,
    pub modulation_seed: Option<u64>,
    pub base_seed: Option<u64>,
    pub reference_seed: Option<u64>,
    pub refinement: Option<usize>,
    pub check_reference: Option<bool>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

/// Read the config file (when given), apply overrides, validate.
pub fn parse_config(file: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut config = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config file {}: {e}", path.display()))
            })?;
            toml::from_str::<RunConfig>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };

    let o = overrides;
    if let Some(v) = o.largest_mode {
        config.largest_mode = v;
    }
    if let Some(v) = o.sigma {
        config.sigma = v;
    }
    if let Some(v) = o.t_end {
        config.t_end = v;
    }
    if let Some(v) = &o.step_counts {
        config.step_counts = v.clone();
    }
    if let Some(v) = o.m {
        config.m = v;
    }
    if let Some(v) = &o.schemes {
        config.schemes = v.clone();
    }
    if let Some(v) = o.dealias {
        config.dealias = v;
    }
    if let Some(v) = o.kind {
        config.modulation.kind = v;
    }
    if let Some(v) = o.alpha {
        config.modulation.alpha = v;
    }
    if let Some(v) = o.modulation_seed {
        config.modulation.seed = v;
    }
    if let Some(v) = o.base_seed {
        config.base_seed = v;
    }
    if let Some(v) = o.reference_seed {
        config.reference_seed = v;
    }
    if let Some(v) = o.refinement {
        config.refinement = v;
    }
    if let Some(v) = o.check_reference {
        config.check_reference = v;
    }
    if let Some(v) = o.threads {
        config.threads = Some(v);
    }
    if let Some(v) = &o.output_dir {
        config.output_dir = v.clone();
    }

    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<()> {
    if config.dimension == 0 {
        return Err(Error::Config("dimension: must be ≥ 1".into()));
    }
    if config.largest_mode == 0 {
        return Err(Error::Config("largest_mode: must be ≥ 1".into()));
    }
    if config.sigma < 0.0 {
        return Err(Error::Config(format!(
            "sigma: must be ≥ 0, got {}",
            config.sigma
        )));
    }
    if !(config.t_end > 0.0) {
        return Err(Error::Config(format!(
            "t_end: must be positive, got {}",
            config.t_end
        )));
    }
    if config.step_counts.is_empty() {
        return Err(Error::Config("step_counts: must be nonempty".into()));
    }
    if config.step_counts.iter().any(|&n| n == 0) {
        return Err(Error::Config("step_counts: entries must be ≥ 1".into()));
    }
    if config.m == 0 {
        return Err(Error::Config("m: must be ≥ 1".into()));
    }
    if config.schemes.is_empty() {
        return Err(Error::Config("schemes: must be nonempty".into()));
    }
    if config.refinement < 16 {
        return Err(Error::Config(format!(
            "refinement: must be ≥ 16, got {}",
            config.refinement
        )));
    }
    match config.modulation.kind {
        ModulationKind::Rough => {
            let a = config.modulation.alpha;
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Config(format!(
                    "modulation.alpha: must lie in (0,1), got {a}"
                )));
            }
            let n = config.modulation.n_modes;
            if n < 2 || n % 2 != 0 {
                return Err(Error::Config(format!(
                    "modulation.n_modes: must be even and ≥ 2, got {n}"
                )));
            }
        }
        ModulationKind::Brownian => {
            if config.modulation.brownian_steps == 0 {
                return Err(Error::Config(
                    "modulation.brownian_steps: must be ≥ 1".into(),
                ));
            }
        }
        _ => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_reproduce_benchmark_protocol() {
        let config = parse_config(None, &Overrides::default()).unwrap();
        assert_eq!(config.largest_mode, 128);
        assert_eq!(config.t_end, 1.0);
        assert_eq!(config.sigma, 1.0);
        assert_eq!(config.m, 100);
        assert_eq!(config.step_counts, vec![16, 32, 64, 128, 256, 512, 1024]);
        assert_eq!(config.schemes.len(), 3);
    }

    #[test]
    fn missing_file_error_names_path() {
        let err = parse_config(Some(Path::new("/no/such/config.toml")), &Overrides::default())
            .unwrap_err();
        assert!(err.to_string().contains("/no/such/config.toml"));
    }

    #[test]
    fn flags_override_file_values() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "m = 100\nlargest_mode = 64").unwrap();
        let overrides = Overrides {
            m: Some(10),
            ..Overrides::default()
        };
        let config = parse_config(Some(file.path()), &overrides).unwrap();
        assert_eq!(config.m, 10);
        assert_eq!(config.largest_mode, 64);
    }

    #[test]
    fn validation_names_offending_key() {
        let overrides = Overrides {
            m: Some(0),
            ..Overrides::default()
        };
        let err = parse_config(None, &overrides).unwrap_err();
        assert!(err.to_string().contains("m:"), "{err}");

        let overrides = Overrides {
            kind: Some(ModulationKind::Rough),
            alpha: Some(1.5),
            ..Overrides::default()
        };
        let err = parse_config(None, &overrides).unwrap_err();
        assert!(err.to_string().contains("modulation.alpha"), "{err}");
    }

    #[test]
    fn scheme_and_kind_parsing() {
        assert_eq!(
            "randomized".parse::<Scheme>().unwrap(),
            Scheme::RandomizedExponential
        );
        assert_eq!("strang".parse::<Scheme>().unwrap(), Scheme::Strang);
        assert!("euler".parse::<Scheme>().is_err());
        assert_eq!(
            "rough".parse::<ModulationKind>().unwrap(),
            ModulationKind::Rough
        );
        assert!("square".parse::<ModulationKind>().is_err());
    }
}
