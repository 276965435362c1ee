//! Per-subcommand configuration documents.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use fgm_core::fem::{NeoHookeanLaw, NewtonConfig, QuadMesh};
use fgm_core::gp::{DatasetConfig, DoeSpec, GpConfig};
use fgm_core::homog::PlaneState;
use fgm_core::micro::SdfDescriptor;
use fgm_core::topopt::{Load, Mode, ObjectiveKind, OuterConfig, Preset, DEFAULT_GAIN, DEFAULT_HIDDEN};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Loads the JSON config (or `{}`), applies `key=value` overrides and the
/// seed, and deserializes.
pub fn resolve<T: for<'de> Deserialize<'de>>(
    text: Option<&str>,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<(T, Value)> {
    let mut v: Value = match text {
        Some(t) => serde_json::from_str(t).context("config is not valid JSON")?,
        None => Value::Object(Default::default()),
    };
    if !v.is_object() {
        bail!("config must be a JSON object");
    }
    for o in overrides {
        let (key, raw) = o.split_once('=').with_context(|| format!("override `{o}` is not key=value"))?;
        let val = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_path(&mut v, key, val)?;
    }
    if let Some(s) = seed {
        set_path(&mut v, "seed", Value::from(s))?;
    }
    let cfg = serde_json::from_value(v.clone()).context("invalid configuration")?;
    Ok((cfg, v))
}

fn set_path(v: &mut Value, key: &str, val: Value) -> Result<()> {
    let mut cur = v;
    let parts: Vec<&str> = key.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .with_context(|| format!("cannot set `{key}`: `{part}` is inside a non-object"))?;
        if k + 1 == parts.len() {
            obj.insert(part.to_string(), val);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    pub rho_m: f64,
    pub r_out: f64,
    pub d_r: f64,
    /// Pixels per side.
    pub n: usize,
    pub seed: u64,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            rho_m: 0.5,
            r_out: 20.0,
            d_r: 5.0,
            n: 64,
            seed: 0,
        }
    }
}

impl ReconstructConfig {
    pub fn descriptor(&self) -> SdfDescriptor {
        SdfDescriptor {
            rho_m: self.rho_m,
            r_out: self.r_out,
            d_r: self.d_r,
            n: self.n,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomogenizeConfig {
    /// P2 image (black = constituent A); reconstructed from `descriptor` when absent.
    pub image: Option<PathBuf>,
    pub descriptor: ReconstructConfig,
    pub law_a: NeoHookeanLaw,
    pub law_b: NeoHookeanLaw,
    pub plane: PlaneState,
    pub seed: u64,
}

impl Default for HomogenizeConfig {
    fn default() -> Self {
        Self {
            image: None,
            descriptor: ReconstructConfig::default(),
            law_a: NeoHookeanLaw::A,
            law_b: NeoHookeanLaw::B,
            plane: PlaneState::Strain,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoeConfig {
    pub doe: DoeSpec,
    pub dataset: DatasetConfig,
    /// Seeds both the sampling plan and the reconstructions.
    pub seed: u64,
}

impl Default for DoeConfig {
    fn default() -> Self {
        Self {
            doe: DoeSpec {
                n_rho: 8,
                count: Some(250),
                ..DoeSpec::default()
            },
            dataset: DatasetConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub dataset: PathBuf,
    pub n_train: usize,
    pub gp: GpConfig,
    /// Seeds the train/test split.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("dataset.csv"),
            n_train: 200,
            gp: GpConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Cantilever,
    DoubleClamped,
    SquareBeam,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

/// Boundary conditions of the `custom` preset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomBc {
    pub clamped: Vec<Edge>,
    /// Grid coordinates (i, j) of the loaded node.
    pub load_node: [usize; 2],
}

/// Everything `optimize`, `transfer`, `render` and `fields` need.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: PresetName,
    /// Element counts; preset defaults when absent.
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    /// Preset default when absent.
    pub load: Option<Load>,
    pub custom: Option<CustomBc>,
    pub objective: ObjectiveKind,
    pub mode: Mode,
    pub rho_t: f64,
    pub law_a: NeoHookeanLaw,
    /// Fitted surrogate pair, required for multiscale runs.
    pub gp_model: Option<PathBuf>,
    pub hidden: usize,
    pub gain: f64,
    pub optimizer: OuterConfig,
    pub newton: NewtonConfig,
    /// Network weights for `transfer`.
    pub weights: Option<PathBuf>,
    /// Design table for `render` and `fields`.
    pub theta: Option<PathBuf>,
    /// SIMP exponent used by `fields`.
    pub p: f64,
    /// Microstructure pixels per element in assembled images.
    pub tile: usize,
    /// Pixels per element in density and field images.
    pub scale: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: PresetName::Cantilever,
            nx: None,
            ny: None,
            load: None,
            custom: None,
            objective: ObjectiveKind::J1,
            mode: Mode::SingleScale,
            rho_t: 0.3,
            law_a: NeoHookeanLaw::A,
            gp_model: None,
            hidden: DEFAULT_HIDDEN,
            gain: DEFAULT_GAIN,
            optimizer: OuterConfig::default(),
            newton: NewtonConfig::default(),
            weights: None,
            theta: None,
            p: 3.0,
            tile: 64,
            scale: 8,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    fn preset(&self) -> Option<Preset> {
        match self.preset {
            PresetName::Cantilever => Some(Preset::Cantilever),
            PresetName::DoubleClamped => Some(Preset::DoubleClamped),
            PresetName::SquareBeam => Some(Preset::SquareBeam),
            PresetName::Custom => None,
        }
    }

    pub fn dims(&self) -> Result<(usize, usize)> {
        let d = match self.preset() {
            Some(p) => p.default_dims(),
            None => (0, 0),
        };
        match (self.nx.unwrap_or(d.0), self.ny.unwrap_or(d.1)) {
            (0, _) | (_, 0) => bail!("mesh dimensions nx, ny are required"),
            dims => Ok(dims),
        }
    }

    pub fn load(&self) -> Result<Load> {
        match (self.load, self.preset()) {
            (Some(l), _) => Ok(l),
            (None, Some(p)) => Ok(p.default_load()),
            (None, None) => bail!("the custom preset needs an explicit load"),
        }
    }

    pub fn mesh(&self) -> Result<QuadMesh> {
        let (nx, ny) = self.dims()?;
        let load = self.load()?;
        if let Some(p) = self.preset() {
            return Ok(p.build(nx, ny, load)?);
        }
        let bc = self.custom.as_ref().context("the custom preset needs a `custom` section")?;
        let mut mesh = QuadMesh::unit(nx, ny)?;
        for edge in &bc.clamped {
            let nodes: Vec<usize> = match edge {
                Edge::Left => mesh.left_edge(),
                Edge::Right => mesh.right_edge(),
                Edge::Bottom => (0..=nx).map(|i| mesh.node(i, 0)).collect(),
                Edge::Top => (0..=nx).map(|i| mesh.node(i, ny)).collect(),
            };
            for n in nodes {
                mesh.fix(n, 0, 0.0)?;
                mesh.fix(n, 1, 0.0)?;
            }
        }
        let [i, j] = bc.load_node;
        if i > nx || j > ny {
            bail!("load node ({i}, {j}) outside the {nx}x{ny} mesh");
        }
        let node = mesh.node(i, j);
        match load {
            Load::Force(f) => mesh.load(node, 1, -f)?,
            Load::Displacement(d) => mesh.fix(node, 1, -d)?,
        }
        Ok(mesh)
    }
}
