//! Experiment configuration: TOML by default, JSON when the file ends in
//! `.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use dqlab_core::hamiltonians::{constrained_dipolar, dipolar_from_geometry, DotGeometry};
use dqlab_core::spin::spec::normalize_profile;
use dqlab_core::spin::{SpinBathSpec, Zeeman};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::stream;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: SpecConfig,
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub k: usize,
    #[serde(default = "half")]
    pub spin: f64,
    #[serde(default)]
    pub alpha: AlphaProfile,
    #[serde(default = "one")]
    pub a_hf: f64,
    #[serde(default)]
    pub zeeman: ZeemanConfig,
    #[serde(default)]
    pub dipolar: DipolarSource,
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlphaProfile {
    #[default]
    Uniform,
    /// `alpha_j ~ exp(-x_j^2 / 2 w^2)` with `x_j = (j + 1/2)/K - 1/2`.
    Gaussian {
        width: f64,
    },
    Explicit(Vec<f64>),
    /// Independent uniform draws in `[min, max)` from the spec stream.
    Random {
        min: f64,
        max: f64,
    },
    /// `1 + eps cos(2 pi j / K)`.
    Perturbed {
        eps: f64,
    },
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ZeemanConfig {
    #[serde(default)]
    pub g_star: f64,
    #[serde(default)]
    pub mu_b: f64,
    #[serde(default)]
    pub g_n: f64,
    #[serde(default)]
    pub mu_n: f64,
    #[serde(default)]
    pub b: f64,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DipolarSource {
    #[default]
    None,
    Matrix(Vec<Vec<f64>>),
    /// `x y z` per line, relative paths resolved against the config file.
    Geometry {
        file: PathBuf,
        prefactor: f64,
    },
    /// Random positions in the unit cube from the spec stream.
    RandomGeometry {
        prefactor: f64,
    },
    Constrained {
        b_bar: f64,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ExperimentBlock {
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: None,
            formats: default_formats(),
        }
    }
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A parsed configuration together with the directory it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub path: Option<PathBuf>,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let config = parse(&text, json).with_context(|| format!("invalid config {}", path.display()))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self {
            config,
            base_dir,
            path: Some(path.to_path_buf()),
        })
    }

    pub fn from_str(text: &str, json: bool, base_dir: impl Into<PathBuf>) -> Result<Self> {
        Ok(Self {
            config: parse(text, json)?,
            base_dir: base_dir.into(),
            path: None,
        })
    }
}

pub fn parse(text: &str, json: bool) -> Result<ExperimentConfig> {
    if json {
        serde_json::from_str(text).map_err(|e| anyhow!("{e}"))
    } else {
        toml::from_str(text).map_err(|e| anyhow!("{e}"))
    }
}

pub fn two_i_of(spin: f64) -> Result<u8> {
    let t = 2.0 * spin;
    if !((1.0..=255.0).contains(&t) && (t - t.round()).abs() < 1e-9) {
        bail!("spec.spin: {spin} is not a positive integer or half-integer");
    }
    Ok(t.round() as u8)
}

pub fn alpha_profile(profile: &AlphaProfile, k: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let raw: Vec<f64> = match profile {
        AlphaProfile::Uniform => vec![1.0; k],
        AlphaProfile::Gaussian { width } => {
            if !(*width > 0.0) {
                bail!("spec.alpha.gaussian.width must be positive");
            }
            (0..k)
                .map(|j| {
                    let x = (j as f64 + 0.5) / k as f64 - 0.5;
                    (-x * x / (2.0 * width * width)).exp()
                })
                .collect()
        }
        AlphaProfile::Explicit(v) => {
            if v.len() != k {
                bail!("spec.alpha.explicit: {} entries for K = {k}", v.len());
            }
            v.clone()
        }
        AlphaProfile::Random { min, max } => {
            if !(min < max) {
                bail!("spec.alpha.random: need min < max");
            }
            (0..k).map(|_| rng.random_range(*min..*max)).collect()
        }
        AlphaProfile::Perturbed { eps } => dqlab_core::leakage::perturbed_profile(k, *eps),
    };
    normalize_profile(&raw).map_err(|e| anyhow!("spec.alpha: {e}"))
}

/// Materializes the bath spec. Random pieces draw from stream 0 of `seed`.
pub fn build_spec(cfg: &SpecConfig, base_dir: &Path, seed: u64) -> Result<SpinBathSpec<f64>> {
    if cfg.k == 0 {
        bail!("spec.k must be at least 1");
    }
    let two_i = two_i_of(cfg.spin)?;
    let mut rng = stream(seed, 0);
    let alpha = alpha_profile(&cfg.alpha, cfg.k, &mut rng)?;
    let k = cfg.k;
    let b = match &cfg.dipolar {
        DipolarSource::None => DMatrix::zeros(k, k),
        DipolarSource::Matrix(rows) => {
            if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                bail!("spec.dipolar.matrix must be {k} x {k}");
            }
            DMatrix::from_fn(k, k, |i, j| rows[i][j])
        }
        DipolarSource::Geometry { file, prefactor } => {
            let path = base_dir.join(file);
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("spec.dipolar.geometry.file: cannot read {}", path.display()))?;
            let geom = DotGeometry::parse(&text, *prefactor).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            if geom.positions.len() != k {
                bail!("{}: {} positions for K = {k}", path.display(), geom.positions.len());
            }
            dipolar_from_geometry(&geom)?
        }
        DipolarSource::RandomGeometry { prefactor } => {
            let positions = (0..k)
                .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                .collect();
            dipolar_from_geometry(&DotGeometry {
                positions,
                prefactor: *prefactor,
            })?
        }
        DipolarSource::Constrained { b_bar } => constrained_dipolar(&alpha, *b_bar)?.b,
    };
    let z = &cfg.zeeman;
    let zeeman = Zeeman {
        g_star: z.g_star,
        mu_b: z.mu_b,
        g_n: z.g_n,
        mu_n: z.mu_n,
        b: z.b,
    };
    Ok(SpinBathSpec::new(two_i, alpha, cfg.a_hf, zeeman, b)?)
}
