//! Kriging with a constant mean and a Gaussian correlation
//! r(s, s') = exp(−Σ_k 10^{w_k} (s_k − s'_k)²).

use std::f64::consts::LN_10;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::sobol::sobol_points;
use crate::error::{Error, Result};

pub const DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    /// Starting diagonal nugget.
    pub nugget: f64,
    /// Largest nugget tried before giving up.
    pub nugget_cap: f64,
    pub n_restarts: usize,
    /// Box for each log10 roughness.
    pub w_bounds: [f64; 2],
    pub max_iter: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            nugget: 1e-10,
            nugget_cap: 1e-6,
            n_restarts: 8,
            w_bounds: [-6.0, 6.0],
            max_iter: 200,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nugget > 0.0 && self.nugget <= self.nugget_cap) {
            return Err(Error::domain("need 0 < nugget <= nugget_cap"));
        }
        if self.n_restarts == 0 {
            return Err(Error::domain("at least one restart is required"));
        }
        if !(self.w_bounds[0] < self.w_bounds[1]) {
            return Err(Error::domain("empty roughness box"));
        }
        Ok(())
    }
}

/// Fitted surrogate. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpModel {
    /// log10 roughness per input dimension.
    pub w: [f64; DIM],
    pub beta: f64,
    pub sigma2: f64,
    /// Nugget the correlation matrix was factorized with.
    pub nugget: f64,
    pub log_likelihood: f64,
    /// Best log-likelihood of each restart (−∞ when it failed).
    pub restarts: Vec<f64>,
    pub x: Vec<[f64; DIM]>,
    pub y: Vec<f64>,
    /// C⁻¹(q − 1β̂).
    pub alpha: Vec<f64>,
}

fn sq_dists(x: &[[f64; DIM]]) -> [DMatrix<f64>; DIM] {
    let n = x.len();
    std::array::from_fn(|k| DMatrix::from_fn(n, n, |i, j| (x[i][k] - x[j][k]).powi(2)))
}

fn correlation(d: &[DMatrix<f64>; DIM], w: &[f64; DIM]) -> DMatrix<f64> {
    let theta = w.map(|wk| 10f64.powf(wk));
    let n = d[0].nrows();
    DMatrix::from_fn(n, n, |i, j| {
        (-(theta[0] * d[0][(i, j)] + theta[1] * d[1][(i, j)] + theta[2] * d[2][(i, j)])).exp()
    })
}

struct Profile {
    ll: f64,
    beta: f64,
    sigma2: f64,
    nugget: f64,
    alpha: DVector<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

/// Profiled log-likelihood −(n/2) ln σ̂² − ½ ln|C| at `w`, escalating the
/// nugget ×10 on factorization failure.
fn profile(d: &[DMatrix<f64>; DIM], y: &DVector<f64>, w: &[f64; DIM], cfg: &GpConfig) -> Option<Profile> {
    let n = y.len();
    let r = correlation(d, w);
    let mut nugget = cfg.nugget;
    let chol = loop {
        let mut c = r.clone();
        for i in 0..n {
            c[(i, i)] += nugget;
        }
        if let Some(ch) = c.cholesky() {
            if ch.l_dirty().diagonal().iter().all(|&v| v > 0.0 && v.is_finite()) {
                break ch;
            }
        }
        nugget *= 10.0;
        if nugget > cfg.nugget_cap * (1.0 + 1e-9) {
            return None;
        }
    };
    let ones = DVector::from_element(n, 1.0);
    let c1 = chol.solve(&ones);
    let cy = chol.solve(y);
    let beta = cy.sum() / c1.sum();
    let resid = y - DVector::from_element(n, beta);
    let alpha = &cy - &c1 * beta;
    let sigma2 = resid.dot(&alpha) / n as f64;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return None;
    }
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let ll = -0.5 * n as f64 * sigma2.ln() - 0.5 * log_det;
    ll.is_finite().then_some(Profile {
        ll,
        beta,
        sigma2,
        nugget,
        alpha,
        chol,
    })
}

/// dℓ/dw_k = ½ αᵀ Ṙ_k α / σ̂² − ½ tr(C⁻¹ Ṙ_k), Ṙ_k = −ln10·10^{w_k} D_k ∘ R.
fn profile_gradient(d: &[DMatrix<f64>; DIM], w: &[f64; DIM], p: &Profile) -> [f64; DIM] {
    let n = p.alpha.len();
    let r = correlation(d, w);
    let cinv = p.chol.inverse();
    std::array::from_fn(|k| {
        let scale = -LN_10 * 10f64.powf(w[k]);
        let mut quad = 0.0;
        let mut tr = 0.0;
        for j in 0..n {
            for i in 0..n {
                let dr = scale * d[k][(i, j)] * r[(i, j)];
                quad += p.alpha[i] * dr * p.alpha[j];
                tr += cinv[(j, i)] * dr;
            }
        }
        0.5 * quad / p.sigma2 - 0.5 * tr
    })
}

fn clamp(w: [f64; DIM], b: [f64; 2]) -> [f64; DIM] {
    w.map(|v| v.clamp(b[0], b[1]))
}

/// Projected BFGS ascent on ℓ from `w0`; returns the best point and value.
fn ascend(
    d: &[DMatrix<f64>; DIM],
    y: &DVector<f64>,
    w0: [f64; DIM],
    cfg: &GpConfig,
) -> Option<([f64; DIM], f64)> {
    let b = cfg.w_bounds;
    let mut w = clamp(w0, b);
    let mut p = profile(d, y, &w, cfg)?;
    // minimize f = −ℓ
    let mut f = -p.ll;
    let mut g = profile_gradient(d, &w, &p).map(|v| -v);
    let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut h = DMatrix::<f64>::identity(DIM, DIM) / gnorm.max(1.0);
    for _ in 0..cfg.max_iter {
        // free variables: not pinned at a bound by the gradient
        let free: [bool; DIM] = std::array::from_fn(|k| {
            !((w[k] <= b[0] && g[k] > 0.0) || (w[k] >= b[1] && g[k] < 0.0))
        });
        let pg: f64 = (0..DIM).filter(|&k| free[k]).map(|k| g[k] * g[k]).sum::<f64>().sqrt();
        if pg < 1e-8 * (1.0 + f.abs()) {
            break;
        }
        let gv = DVector::from_fn(DIM, |k, _| if free[k] { g[k] } else { 0.0 });
        let mut dir = -(&h * &gv);
        for k in 0..DIM {
            if !free[k] {
                dir[k] = 0.0;
            }
        }
        if dir.dot(&gv) >= 0.0 {
            h = DMatrix::identity(DIM, DIM) / pg.max(1.0);
            dir = -gv.clone() / pg.max(1.0);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = clamp(std::array::from_fn(|k| w[k] + t * dir[k]), b);
            let step: f64 = (0..DIM).map(|k| g[k] * (trial[k] - w[k])).sum();
            if let Some(pt) = profile(d, y, &trial, cfg) {
                if -pt.ll <= f + 1e-4 * step {
                    accepted = Some((trial, pt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((wn, pn)) = accepted else { break };
        let fn_ = -pn.ll;
        let gn = profile_gradient(d, &wn, &pn).map(|v| -v);
        let s = DVector::from_fn(DIM, |k, _| wn[k] - w[k]);
        let yv = DVector::from_fn(DIM, |k, _| gn[k] - g[k]);
        let sy = s.dot(&yv);
        if sy > 1e-12 * s.norm() * yv.norm() {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(DIM, DIM);
            let a = &i - rho * &s * yv.transpose();
            h = &a * &h * a.transpose() + rho * &s * s.transpose();
        }
        let df = f - fn_;
        w = wn;
        f = fn_;
        g = gn;
        p = pn;
        if df.abs() < 1e-12 * (1.0 + f.abs()) {
            break;
        }
    }
    Some((w, -f)).filter(|_| p.ll.is_finite())
}

fn check_inputs(x: &[[f64; DIM]], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} inputs for {} outputs", x.len(), y.len())));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::domain("training data must be finite"));
    }
    let distinct: std::collections::HashSet<_> = x.iter().map(|r| r.map(f64::to_bits)).collect();
    if distinct.len() < 2 {
        return Err(Error::domain("at least two distinct training inputs are required"));
    }
    Ok(())
}

fn is_constant(y: &[f64]) -> bool {
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    y.iter().all(|v| (v - y[0]).abs() <= 1e-14 * scale)
}

/// φ(e) = e^{−e} − 1 + e without cancellation for small e.
fn exp_remainder(e: f64) -> f64 {
    if e > 0.5 {
        return (-e).exp_m1() + e;
    }
    let mut term = 0.5 * e * e;
    let mut sum = 0.0f64;
    let mut n = 2.0;
    while term.abs() > 1e-18 * sum.abs() && n < 40.0 {
        sum += term;
        n += 1.0;
        term *= -e / n;
    }
    sum
}

/// Maximum-likelihood fit: restarts from the first `n_restarts` points of
/// the Sobol design over the roughness box, keeping the best ascent.
pub fn fit_gp(x: &[[f64; DIM]], y: &[f64], cfg: &GpConfig) -> Result<GpModel> {
    cfg.validate()?;
    check_inputs(x, y)?;
    if is_constant(y) {
        return Ok(GpModel {
            w: [0.0; DIM],
            beta: y[0],
            sigma2: 0.0,
            nugget: cfg.nugget,
            log_likelihood: f64::INFINITY,
            restarts: vec![f64::INFINITY],
            x: x.to_vec(),
            y: y.to_vec(),
            alpha: vec![0.0; y.len()],
        });
    }
    let d = sq_dists(x);
    let yv = DVector::from_column_slice(y);
    let [lo, hi] = cfg.w_bounds;
    let starts = sobol_points(cfg.n_restarts, DIM, 0)?;
    let mut best: Option<([f64; DIM], f64)> = None;
    let mut restarts = Vec::with_capacity(starts.len());
    for s in &starts {
        let w0 = std::array::from_fn(|k| lo + (hi - lo) * s[k]);
        match ascend(&d, &yv, w0, cfg) {
            Some((w, ll)) => {
                log::debug!("restart from {w0:?}: w = {w:?}, ll = {ll:.6}");
                restarts.push(ll);
                if best.is_none_or(|(_, b)| ll > b) {
                    best = Some((w, ll));
                }
            }
            None => restarts.push(f64::NEG_INFINITY),
        }
    }
    let (w, _) = best.ok_or(Error::IllConditioned { nugget: cfg.nugget_cap })?;
    let mut model = GpModel::with_hyperparameters(x, y, w, cfg)?;
    model.restarts = restarts;
    Ok(model)
}

impl GpModel {
    /// Builds the predictor at fixed roughness, profiling β and σ².
    pub fn with_hyperparameters(x: &[[f64; DIM]], y: &[f64], w: [f64; DIM], cfg: &GpConfig) -> Result<Self> {
        cfg.validate()?;
        check_inputs(x, y)?;
        if is_constant(y) {
            let mut m = fit_gp(x, y, cfg)?;
            m.w = w;
            return Ok(m);
        }
        let d = sq_dists(x);
        let p = profile(&d, &DVector::from_column_slice(y), &w, cfg)
            .ok_or(Error::IllConditioned { nugget: cfg.nugget_cap })?;
        Ok(GpModel {
            w,
            beta: p.beta,
            sigma2: p.sigma2,
            nugget: p.nugget,
            log_likelihood: p.ll,
            restarts: vec![p.ll],
            x: x.to_vec(),
            y: y.to_vec(),
            alpha: p.alpha.iter().copied().collect(),
        })
    }

    pub fn n_train(&self) -> usize {
        self.x.len()
    }

    fn warn_outside(s: &[f64; DIM]) {
        if s.iter().any(|v| !(-1e-9..=1.0 + 1e-9).contains(v)) {
            log::warn!("GP extrapolation at s = {s:?}");
        }
    }

    fn exponent(&self, s: &[f64; DIM], xi: &[f64; DIM]) -> f64 {
        (0..DIM).map(|k| 10f64.powf(self.w[k]) * (s[k] - xi[k]).powi(2)).sum()
    }

    /// Σα_i, Σα_i x_ik and Σα_i x_ik².
    fn moments(&self) -> (f64, [f64; DIM], [f64; DIM]) {
        let mut s0 = 0.0;
        let mut a = [0.0; DIM];
        let mut b = [0.0; DIM];
        for (xi, al) in self.x.iter().zip(&self.alpha) {
            s0 += al;
            for k in 0..DIM {
                a[k] += al * xi[k];
                b[k] += al * xi[k] * xi[k];
            }
        }
        (s0, a, b)
    }

    /// q̂(s) = β̂ + c(s)ᵀ C⁻¹(q − 1β̂).
    ///
    /// With long correlation lengths every r_i is close to 1 and the α_i are
    /// huge with alternating signs. Writing r = 1 − e + φ(e), the first two
    /// terms reduce to moments of α, so only the small remainder φ is summed
    /// term by term and the result stays smooth in s.
    pub fn predict(&self, s: &[f64; DIM]) -> f64 {
        Self::warn_outside(s);
        let theta = self.w.map(|wk| 10f64.powf(wk));
        let (s0, a, b) = self.moments();
        let quad: f64 = (0..DIM).map(|k| theta[k] * (s[k] * s[k] * s0 - 2.0 * s[k] * a[k] + b[k])).sum();
        let rest: f64 = self
            .x
            .iter()
            .zip(&self.alpha)
            .map(|(xi, al)| al * exp_remainder(self.exponent(s, xi)))
            .sum();
        self.beta + s0 - quad + rest
    }

    /// ∂q̂/∂s_k = −2·10^{w_k} Σ_i α_i (s_k − x_ik) r(s, x_i), split like
    /// [`GpModel::predict`].
    pub fn predict_gradient(&self, s: &[f64; DIM]) -> [f64; DIM] {
        Self::warn_outside(s);
        let theta = self.w.map(|wk| 10f64.powf(wk));
        let (s0, a, _) = self.moments();
        let mut g: [f64; DIM] = std::array::from_fn(|k| s[k] * s0 - a[k]);
        for (xi, al) in self.x.iter().zip(&self.alpha) {
            let r1 = al * (-self.exponent(s, xi)).exp_m1();
            for k in 0..DIM {
                g[k] += (s[k] - xi[k]) * r1;
            }
        }
        std::array::from_fn(|k| -2.0 * theta[k] * g[k])
    }

    /// Profiled log-likelihood at another roughness vector.
    pub fn log_likelihood_at(&self, w: [f64; DIM], cfg: &GpConfig) -> Option<f64> {
        if is_constant(&self.y) {
            return Some(f64::INFINITY);
        }
        profile(&sq_dists(&self.x), &DVector::from_column_slice(&self.y), &w, cfg).map(|p| p.ll)
    }
}

/// RMSE of the errors over the RMS of the truths.
pub fn rrmse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    if truths.is_empty() {
        return Err(Error::domain("rrmse of an empty set"));
    }
    let n = truths.len() as f64;
    let rms = (truths.iter().map(|t| t * t).sum::<f64>() / n).sqrt();
    if !(rms > 0.0) {
        return Err(Error::domain("truths have zero RMS"));
    }
    let mse = predictions.iter().zip(truths).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n;
    Ok(mse.sqrt() / rms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cosine(s: &[f64; 3]) -> f64 {
        (2.0 * s[0]).cos() + (3.0 * s[1]).cos() * 0.5 + (1.5 * s[2]).cos() + 3.0
    }

    fn design(n: usize, seed: u64) -> Vec<[f64; 3]> {
        sobol_points(n, 3, seed).unwrap().into_iter().map(|p| [p[0], p[1], p[2]]).collect()
    }

    #[test]
    fn synthetic_cosine_is_learned() {
        let x = design(60, 1);
        let y: Vec<f64> = x.iter().map(cosine).collect();
        let m = fit_gp(&x, &y, &GpConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let test: Vec<[f64; 3]> = (0..200).map(|_| rng.random()).collect();
        let pred: Vec<f64> = test.iter().map(|s| m.predict(s)).collect();
        let truth: Vec<f64> = test.iter().map(cosine).collect();
        let e = rrmse(&pred, &truth).unwrap();
        assert!(e < 0.02, "rrmse {e}");
        for (xi, yi) in x.iter().zip(&y) {
            assert!((m.predict(xi) - yi).abs() < 1e-4 * yi.abs(), "interpolation");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = design(40, 2);
        let y: Vec<f64> = x.iter().map(cosine).collect();
        let m = fit_gp(&x, &y, &GpConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let s: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.05..0.95));
            let g = m.predict_gradient(&s);
            for k in 0..3 {
                let h = 1e-5;
                let (mut sp, mut sm) = (s, s);
                sp[k] += h;
                sm[k] -= h;
                let fd = (m.predict(&sp) - m.predict(&sm)) / (2.0 * h);
                let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                assert!((g[k] - fd).abs() <= 1e-6 * scale.max(1e-12), "{k}: {} vs {fd}", g[k]);
            }
        }
    }

    #[test]
    fn constant_outputs_give_a_flat_model() {
        let x = design(10, 0);
        let y = vec![4.2e7; 10];
        let m = fit_gp(&x, &y, &GpConfig::default()).unwrap();
        assert_eq!(m.sigma2, 0.0);
        assert_eq!(m.predict(&[0.3, 0.1, 0.9]), 4.2e7);
        assert_eq!(m.predict_gradient(&[0.3, 0.1, 0.9]), [0.0; 3]);
    }

    #[test]
    fn far_from_data_returns_the_mean() {
        let x = design(12, 0);
        let y: Vec<f64> = x.iter().map(cosine).collect();
        let m = GpModel::with_hyperparameters(&x, &y, [3.0; 3], &GpConfig::default()).unwrap();
        assert!((m.predict(&[20.0, 20.0, 20.0]) - m.beta).abs() <= 1e-9 * m.beta.abs());
    }

    #[test]
    fn one_point_gradient_is_odd() {
        // two points far apart along axis 0 so each acts alone near itself
        let x = [[0.5, 0.5, 0.5], [50.0, 50.0, 50.0]];
        let y = [2.0, 1.0];
        let m = GpModel::with_hyperparameters(&x, &y, [1.0; 3], &GpConfig::default()).unwrap();
        for k in 0..3 {
            for h in [0.01, 0.1, 0.3] {
                let (mut sp, mut sm) = ([0.5; 3], [0.5; 3]);
                sp[k] += h;
                sm[k] -= h;
                let (gp, gm) = (m.predict_gradient(&sp), m.predict_gradient(&sm));
                assert!((gp[k] + gm[k]).abs() <= 1e-12 * gp[k].abs().max(1e-300));
            }
        }
    }

    #[test]
    fn beta_is_the_gls_mean() {
        let x = design(25, 4);
        let y: Vec<f64> = x.iter().map(|s| cosine(s) * 1e8).collect();
        let cfg = GpConfig::default();
        let m = GpModel::with_hyperparameters(&x, &y, [0.8, 1.2, 0.5], &cfg).unwrap();
        let mut c = correlation(&sq_dists(&x), &m.w);
        for i in 0..x.len() {
            c[(i, i)] += m.nugget;
        }
        let ci = c.try_inverse().unwrap();
        let ones = DVector::from_element(x.len(), 1.0);
        let yv = DVector::from_column_slice(&y);
        let gls = (ones.transpose() * &ci * &yv)[0] / (ones.transpose() * &ci * &ones)[0];
        assert!((m.beta - gls).abs() <= 1e-8 * gls.abs());
    }

    #[test]
    fn permutation_leaves_predictions_unchanged() {
        let x = design(30, 6);
        let y: Vec<f64> = x.iter().map(cosine).collect();
        let cfg = GpConfig::default();
        let w = [0.7, 1.1, 0.2];
        let a = GpModel::with_hyperparameters(&x, &y, w, &cfg).unwrap();
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.reverse();
        idx.swap(3, 17);
        let xp: Vec<_> = idx.iter().map(|&i| x[i]).collect();
        let yp: Vec<_> = idx.iter().map(|&i| y[i]).collect();
        let b = GpModel::with_hyperparameters(&xp, &yp, w, &cfg).unwrap();
        for s in design(10, 99) {
            assert!((a.predict(&s) - b.predict(&s)).abs() <= 1e-10 * a.predict(&s).abs());
        }
    }

    #[test]
    fn more_restarts_never_lower_the_best() {
        let x = design(30, 3);
        let y: Vec<f64> = x.iter().map(cosine).collect();
        let m = fit_gp(&x, &y, &GpConfig { n_restarts: 6, ..GpConfig::default() }).unwrap();
        let mut best = f64::NEG_INFINITY;
        for &ll in &m.restarts {
            let next = best.max(ll);
            assert!(next >= best);
            best = next;
        }
        assert!((m.log_likelihood - best).abs() <= 1e-6 * best.abs().max(1.0));
    }

    #[test]
    fn likelihood_gradient_matches_finite_differences() {
        let x = design(20, 8);
        let y: Vec<f64> = x.iter().map(cosine).collect();
        let cfg = GpConfig::default();
        let d = sq_dists(&x);
        let yv = DVector::from_column_slice(&y);
        let w = [0.3, -0.2, 0.6];
        let p = profile(&d, &yv, &w, &cfg).unwrap();
        let g = profile_gradient(&d, &w, &p);
        for k in 0..3 {
            let h = 1e-5;
            let (mut wp, mut wm) = (w, w);
            wp[k] += h;
            wm[k] -= h;
            let fd = (profile(&d, &yv, &wp, &cfg).unwrap().ll - profile(&d, &yv, &wm, &cfg).unwrap().ll) / (2.0 * h);
            assert!((g[k] - fd).abs() <= 1e-4 * fd.abs().max(1.0), "{k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn rrmse_definition() {
        let t = [1.0, -2.0, 3.0];
        assert_eq!(rrmse(&t, &t).unwrap(), 0.0);
        let twice: Vec<f64> = t.iter().map(|v| 2.0 * v).collect();
        assert!((rrmse(&twice, &t).unwrap() - 1.0).abs() < 1e-15);
        let c = [5.0; 4];
        let shifted = [5.5; 4];
        assert!((rrmse(&shifted, &c).unwrap() - 0.1).abs() < 1e-15);
        assert!(rrmse(&[1.0], &[0.0]).is_err());
        assert!(rrmse(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn too_few_distinct_rows_are_rejected() {
        let x = [[0.1, 0.2, 0.3]; 3];
        assert!(matches!(fit_gp(&x, &[1.0, 2.0, 3.0], &GpConfig::default()), Err(Error::Domain(_))));
    }
}
