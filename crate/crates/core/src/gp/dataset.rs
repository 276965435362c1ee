//! Design of experiments and the homogenized material dataset.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::Matrix3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sobol::sobol_points;
use crate::error::{Error, Result};
use crate::fem::NeoHookeanLaw;
use crate::homog::{extract_lame_with, homogenize, HomogenizedTensor, PlaneState};
use crate::micro::{mix_seed, reconstruct, SdfDescriptor};

/// Sampling plan over (ρ_m, R_out, ΔR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DoeSpec {
    pub rho_range: [f64; 2],
    pub r_out_range: [i64; 2],
    pub d_r_range: [i64; 2],
    /// Number of Sobol levels for ρ_m.
    pub n_rho: usize,
    /// Subsample the full crossing down to this many rows.
    pub count: Option<usize>,
    pub seed: u64,
}

impl Default for DoeSpec {
    fn default() -> Self {
        Self {
            rho_range: [0.3, 0.7],
            r_out_range: [15, 25],
            d_r_range: [0, 25],
            n_rho: 1,
            count: None,
            seed: 0,
        }
    }
}

impl DoeSpec {
    pub fn validate(&self) -> Result<()> {
        let [r0, r1] = self.rho_range;
        if !(r0.is_finite() && r1.is_finite() && r0 < r1) {
            return Err(Error::domain(format!("empty rho_m range [{r0}, {r1}]")));
        }
        if !(0.0..=1.0).contains(&r0) || !(0.0..=1.0).contains(&r1) {
            return Err(Error::domain("rho_m range must lie in [0, 1]"));
        }
        if self.r_out_range[0] > self.r_out_range[1] || self.d_r_range[0] > self.d_r_range[1] {
            return Err(Error::domain("empty integer range"));
        }
        if self.r_out_range[0] < 0 || self.d_r_range[0] < 0 {
            return Err(Error::domain("ring radii must be non-negative"));
        }
        if self.n_rho == 0 {
            return Err(Error::domain("n_rho must be positive"));
        }
        Ok(())
    }

    pub fn normalization(&self) -> Normalization {
        Normalization {
            lower: [
                self.rho_range[0],
                self.r_out_range[0] as f64,
                self.d_r_range[0] as f64,
            ],
            upper: [
                self.rho_range[1],
                self.r_out_range[1] as f64,
                self.d_r_range[1] as f64,
            ],
        }
    }
}

/// Per-dimension affine map from raw parameters to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl Default for Normalization {
    fn default() -> Self {
        DoeSpec::default().normalization()
    }
}

impl Normalization {
    /// ds/dx per dimension (zero for a degenerate range).
    pub fn scale(&self) -> [f64; 3] {
        std::array::from_fn(|k| {
            let w = self.upper[k] - self.lower[k];
            if w > 0.0 {
                1.0 / w
            } else {
                0.0
            }
        })
    }

    pub fn normalize(&self, x: [f64; 3]) -> [f64; 3] {
        let sc = self.scale();
        std::array::from_fn(|k| (x[k] - self.lower[k]) * sc[k])
    }

    pub fn denormalize(&self, s: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|k| self.lower[k] + s[k] * (self.upper[k] - self.lower[k]))
    }
}

/// Sobol ρ_m levels crossed with the full integer (R_out, ΔR) grid, rows
/// ordered level-major. With `count` set, a seeded random subset is kept in
/// its original order.
pub fn generate_doe(spec: &DoeSpec) -> Result<Vec<[f64; 3]>> {
    spec.validate()?;
    let [r0, r1] = spec.rho_range;
    let levels: Vec<f64> = sobol_points(spec.n_rho, 1, spec.seed)?
        .into_iter()
        .map(|p| r0 + (r1 - r0) * p[0])
        .collect();
    let mut rows = Vec::new();
    for &rho in &levels {
        for r_out in spec.r_out_range[0]..=spec.r_out_range[1] {
            for d_r in spec.d_r_range[0]..=spec.d_r_range[1] {
                rows.push([rho, r_out as f64, d_r as f64]);
            }
        }
    }
    if let Some(count) = spec.count {
        if count < rows.len() {
            let mut idx: Vec<usize> = (0..rows.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, u64::MAX));
            idx.shuffle(&mut rng);
            idx.truncate(count);
            idx.sort_unstable();
            rows = idx.into_iter().map(|i| rows[i]).collect();
        }
    }
    Ok(rows)
}

/// Microstructure and homogenization settings for [`build_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    /// Pixels per unit-cell side.
    pub resolution: usize,
    /// Independent reconstructions averaged per row.
    pub realizations: usize,
    pub plane: PlaneState,
    pub law_a: NeoHookeanLaw,
    pub law_b: NeoHookeanLaw,
    pub normalization: Normalization,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            resolution: 64,
            realizations: 4,
            plane: PlaneState::Strain,
            law_a: NeoHookeanLaw::A,
            law_b: NeoHookeanLaw::B,
            normalization: Normalization::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub rho_m: f64,
    pub r_out: f64,
    pub d_r: f64,
    pub s: [f64; 3],
    pub mu_m: f64,
    pub lambda_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialDataset {
    pub rows: Vec<DatasetRow>,
    pub normalization: Normalization,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Averaged effective tensor of one design; realization `k` is seeded with
/// `mix_seed(seed, k)`.
pub fn homogenize_design(x: [f64; 3], cfg: &DatasetConfig, seed: u64) -> Result<HomogenizedTensor> {
    let k = cfg.realizations.max(1);
    let mut acc = Matrix3::zeros();
    for r in 0..k {
        let desc = SdfDescriptor {
            rho_m: x[0],
            r_out: x[1],
            d_r: x[2],
            n: cfg.resolution,
            seed: mix_seed(seed, r as u64),
        };
        let micro = reconstruct(&desc)?;
        acc += homogenize(&micro, &cfg.law_a, &cfg.law_b, cfg.plane)?.tensor.c;
    }
    Ok(HomogenizedTensor { c: acc / k as f64 })
}

/// Reconstructs, homogenizes and projects every design (rows in parallel).
/// Row `i` of the de-duplicated list uses seed `mix_seed(cfg.seed, i)`. All
/// rows start in the training split.
pub fn build_dataset(doe: &[[f64; 3]], cfg: &DatasetConfig) -> Result<MaterialDataset> {
    let mut seen = HashSet::new();
    let mut unique = Vec::with_capacity(doe.len());
    for x in doe {
        if seen.insert(x.map(f64::to_bits)) {
            unique.push(*x);
        } else {
            log::warn!("dropping duplicate design ({}, {}, {})", x[0], x[1], x[2]);
        }
    }
    let rows = unique
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let tensor = homogenize_design(x, cfg, mix_seed(cfg.seed, i as u64)).map_err(|e| e.at_row(i))?;
            let lame = extract_lame_with(&tensor, cfg.plane).map_err(|e| e.at_row(i))?;
            Ok(DatasetRow {
                rho_m: x[0],
                r_out: x[1],
                d_r: x[2],
                s: cfg.normalization.normalize(x),
                mu_m: lame.mu_m,
                lambda_m: lame.lambda_m,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let train = (0..rows.len()).collect();
    Ok(MaterialDataset {
        rows,
        normalization: cfg.normalization,
        train,
        test: Vec::new(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    rho_m: f64,
    r_out: f64,
    d_r: f64,
    s1: f64,
    s2: f64,
    s3: f64,
    mu_m: f64,
    lambda_m: f64,
    split: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    normalization: Normalization,
    n_rows: usize,
}

impl MaterialDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Random train/test partition with `n_train` training rows.
    pub fn split(&mut self, n_train: usize, seed: u64) -> Result<()> {
        if n_train > self.rows.len() {
            return Err(Error::domain(format!(
                "{n_train} training rows requested from {} rows",
                self.rows.len()
            )));
        }
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (tr, te) = idx.split_at(n_train);
        self.train = tr.to_vec();
        self.test = te.to_vec();
        self.train.sort_unstable();
        self.test.sort_unstable();
        Ok(())
    }

    /// Normalized inputs and one output column over a split.
    pub fn columns(&self, split: &[usize], output: Output) -> (Vec<[f64; 3]>, Vec<f64>) {
        split
            .iter()
            .map(|&i| {
                let r = &self.rows[i];
                (r.s, output.of(r))
            })
            .unzip()
    }

    /// Writes `<path>` (CSV) and `<path>.json` (normalization sidecar).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut split = vec!["none"; self.rows.len()];
        for &i in &self.train {
            split[i] = "train";
        }
        for &i in &self.test {
            split[i] = "test";
        }
        let mut w = csv::Writer::from_path(path)?;
        for (r, sp) in self.rows.iter().zip(split) {
            w.serialize(CsvRow {
                rho_m: r.rho_m,
                r_out: r.r_out,
                d_r: r.d_r,
                s1: r.s[0],
                s2: r.s[1],
                s3: r.s[2],
                mu_m: r.mu_m,
                lambda_m: r.lambda_m,
                split: sp.to_string(),
            })?;
        }
        w.flush()?;
        let sidecar = Sidecar {
            normalization: self.normalization,
            n_rows: self.rows.len(),
        };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let sidecar: Sidecar = match std::fs::read_to_string(sidecar_path(path)) {
            Ok(s) => serde_json::from_str(&s)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Sidecar {
                normalization: Normalization::default(),
                n_rows: 0,
            },
            Err(e) => return Err(e.into()),
        };
        let mut ds = MaterialDataset {
            rows: Vec::new(),
            normalization: sidecar.normalization,
            train: Vec::new(),
            test: Vec::new(),
        };
        for (i, rec) in csv::Reader::from_path(path)?.deserialize::<CsvRow>().enumerate() {
            let r = rec?;
            match r.split.as_str() {
                "train" => ds.train.push(i),
                "test" => ds.test.push(i),
                "none" => {}
                other => return Err(Error::domain(format!("row {i}: unknown split '{other}'"))),
            }
            ds.rows.push(DatasetRow {
                rho_m: r.rho_m,
                r_out: r.r_out,
                d_r: r.d_r,
                s: [r.s1, r.s2, r.s3],
                mu_m: r.mu_m,
                lambda_m: r.lambda_m,
            });
        }
        Ok(ds)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    p.into()
}

/// Which effective Lamé parameter a surrogate predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Mu,
    Lambda,
}

impl Output {
    pub fn of(&self, row: &DatasetRow) -> f64 {
        match self {
            Output::Mu => row.mu_m,
            Output::Lambda => row.lambda_m,
        }
    }
}
