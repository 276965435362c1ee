//! Sampling plans, homogenized datasets and Gaussian-process surrogates of
//! the effective Lamé parameters.

mod dataset;
mod model;
mod sobol;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use dataset::{
    build_dataset, generate_doe, homogenize_design, DatasetConfig, DatasetRow, DoeSpec, MaterialDataset,
    Normalization, Output,
};
pub use model::{fit_gp, rrmse, GpConfig, GpModel, DIM};
pub use sobol::{sobol_points, MAX_DIM};

use crate::error::{Error, Result};

/// The μ_m and λ_m surrogates together with the input normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSurrogate {
    pub normalization: Normalization,
    pub mu: GpModel,
    pub lambda: GpModel,
}

/// Held-out accuracy of a fitted pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n_train: usize,
    pub n_test: usize,
    pub rrmse_mu: Option<f64>,
    pub rrmse_lambda: Option<f64>,
}

impl MaterialSurrogate {
    /// Fits both outputs on the training split and scores the test split.
    pub fn fit(ds: &MaterialDataset, cfg: &GpConfig) -> Result<(Self, FitReport)> {
        let (xm, ym) = ds.columns(&ds.train, Output::Mu);
        let (_, yl) = ds.columns(&ds.train, Output::Lambda);
        let s = MaterialSurrogate {
            normalization: ds.normalization,
            mu: fit_gp(&xm, &ym, cfg)?,
            lambda: fit_gp(&xm, &yl, cfg)?,
        };
        let score = |out: Output, m: &GpModel| -> Result<Option<f64>> {
            if ds.test.is_empty() {
                return Ok(None);
            }
            let (xt, yt) = ds.columns(&ds.test, out);
            let pred: Vec<f64> = xt.iter().map(|x| m.predict(x)).collect();
            rrmse(&pred, &yt).map(Some)
        };
        let report = FitReport {
            n_train: ds.train.len(),
            n_test: ds.test.len(),
            rrmse_mu: score(Output::Mu, &s.mu)?,
            rrmse_lambda: score(Output::Lambda, &s.lambda)?,
        };
        Ok((s, report))
    }

    /// (μ_m, λ_m) at raw parameters (ρ_m, R_out, ΔR).
    pub fn predict(&self, x: [f64; 3]) -> (f64, f64) {
        let s = self.normalization.normalize(x);
        (self.mu.predict(&s), self.lambda.predict(&s))
    }

    /// Gradients of μ_m and λ_m with respect to the raw parameters.
    pub fn predict_gradient(&self, x: [f64; 3]) -> ([f64; 3], [f64; 3]) {
        let s = self.normalization.normalize(x);
        let sc = self.normalization.scale();
        let gm = self.mu.predict_gradient(&s);
        let gl = self.lambda.predict_gradient(&s);
        (
            std::array::from_fn(|k| gm[k] * sc[k]),
            std::array::from_fn(|k| gl[k] * sc[k]),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        for m in [&s.mu, &s.lambda] {
            if m.x.len() != m.y.len() || m.alpha.len() != m.y.len() {
                return Err(Error::ShapeMismatch("inconsistent GP training arrays".into()));
            }
        }
        Ok(s)
    }
}
