//! Coordinate network Θ = Θ(x, y; τ): one tanh hidden layer, sigmoid
//! outputs mapped affinely onto the physical design ranges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-element design (ρ_M, ρ_m, R_out, ΔR).
pub type Theta = [f64; 4];

pub const N_IN: usize = 2;
pub const N_OUT: usize = 4;
pub const DEFAULT_HIDDEN: usize = 20;
/// Gain on the hidden pre-activation.
pub const DEFAULT_GAIN: f64 = 100.0;

/// Output ranges in the order of [`Theta`].
pub const THETA_RANGES: [[f64; 2]; N_OUT] = [[0.0, 1.0], [0.3, 0.7], [15.0, 25.0], [0.0, 25.0]];

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn default_gain() -> f64 {
    DEFAULT_GAIN
}

fn unit_gain() -> f64 {
    1.0
}

/// Weights τ stored flat as `[W1 (h×2, row-major), b1 (h), W2 (4×h), b2 (4)]`;
/// hidden unit j is tanh(γ(W1_j·x + b1_j)) and output o is
/// sigmoid(γ_o(b2_o + W2_o·h)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignNet {
    pub hidden: usize,
    #[serde(default = "default_gain")]
    pub gain: f64,
    #[serde(default = "unit_gain")]
    pub output_gain: f64,
    pub weights: Vec<f64>,
}

impl DesignNet {
    pub fn n_params(hidden: usize) -> usize {
        hidden * N_IN + hidden + N_OUT * hidden + N_OUT
    }

    pub fn zeros(hidden: usize) -> Self {
        Self {
            hidden,
            gain: DEFAULT_GAIN,
            output_gain: 1.0,
            weights: vec![0.0; Self::n_params(hidden)],
        }
    }

    /// Glorot-uniform hidden weights with each unit's zero level passing
    /// through a random point of the unit square, and a zero output layer,
    /// so the initial design is uniform at the midpoint of every range.
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut net = Self::zeros(hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let limit = (6.0 / (N_IN + hidden) as f64).sqrt();
        for j in 0..hidden {
            let w: [f64; 2] = std::array::from_fn(|_| rng.random_range(-limit..limit));
            let c: [f64; 2] = rng.random();
            net.weights[2 * j] = w[0];
            net.weights[2 * j + 1] = w[1];
            net.weights[hidden * N_IN + j] = -(w[0] * c[0] + w[1] * c[1]);
        }
        net
    }

    /// Sets the ρ_M output bias so a zero output layer gives ρ_M = `rho`.
    pub fn set_base_density(&mut self, rho: f64) -> Result<()> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::domain(format!("base density {rho} outside (0, 1)")));
        }
        let n = self.weights.len();
        self.weights[n - N_OUT] = (rho / (1.0 - rho)).ln() / self.output_gain;
        Ok(())
    }

    /// Glorot-uniform on both layers, zero biases.
    pub fn init_random(hidden: usize, seed: u64) -> Self {
        let mut net = Self::init(hidden, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let limit = (6.0 / (N_OUT + hidden) as f64).sqrt();
        let o = hidden * (N_IN + 1);
        for w in &mut net.weights[o..o + N_OUT * hidden] {
            *w = rng.random_range(-limit..limit);
        }
        net
    }

    pub fn from_weights(hidden: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != Self::n_params(hidden) {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for a net with {hidden} hidden units ({} expected)",
                weights.len(),
                Self::n_params(hidden)
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::domain("network weights must be finite"));
        }
        Ok(Self {
            hidden,
            gain: DEFAULT_GAIN,
            output_gain: 1.0,
            weights,
        })
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let h = self.hidden;
        let (w1, rest) = self.weights.split_at(h * N_IN);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(N_OUT * h);
        (w1, b1, w2, b2)
    }

    fn hidden_layer(&self, x: &[f64; 2]) -> Vec<f64> {
        let (w1, b1, _, _) = self.split();
        (0..self.hidden)
            .map(|j| (self.gain * (w1[2 * j] * x[0] + w1[2 * j + 1] * x[1] + b1[j])).tanh())
            .collect()
    }

    fn output_sigmoids(&self, h: &[f64]) -> [f64; N_OUT] {
        let (_, _, w2, b2) = self.split();
        std::array::from_fn(|o| {
            let z: f64 = b2[o] + (0..self.hidden).map(|j| w2[o * self.hidden + j] * h[j]).sum::<f64>();
            sigmoid(self.output_gain * z)
        })
    }

    pub fn eval(&self, x: &[f64; 2]) -> Theta {
        let s = self.output_sigmoids(&self.hidden_layer(x));
        std::array::from_fn(|o| THETA_RANGES[o][0] + (THETA_RANGES[o][1] - THETA_RANGES[o][0]) * s[o])
    }

    /// Θ at every (normalized) centroid.
    pub fn forward(&self, centroids: &[[f64; 2]]) -> Vec<Theta> {
        centroids.iter().map(|x| self.eval(x)).collect()
    }

    /// Σ_e (∂Θ_e/∂τ)ᵀ bar_e.
    pub fn vjp(&self, centroids: &[[f64; 2]], bar: &[Theta]) -> Vec<f64> {
        let hd = self.hidden;
        let (_, _, w2, _) = self.split();
        let mut g = vec![0.0; self.weights.len()];
        let (o_b1, o_w2, o_b2) = (hd * N_IN, hd * (N_IN + 1), hd * (N_IN + 1) + N_OUT * hd);
        for (x, b) in centroids.iter().zip(bar) {
            let h = self.hidden_layer(x);
            let s = self.output_sigmoids(&h);
            let dz: [f64; N_OUT] = std::array::from_fn(|o| {
                b[o] * (THETA_RANGES[o][1] - THETA_RANGES[o][0]) * s[o] * (1.0 - s[o]) * self.output_gain
            });
            for o in 0..N_OUT {
                g[o_b2 + o] += dz[o];
                for j in 0..hd {
                    g[o_w2 + o * hd + j] += dz[o] * h[j];
                }
            }
            for j in 0..hd {
                let dh: f64 = (0..N_OUT).map(|o| dz[o] * w2[o * hd + j]).sum();
                let da = dh * (1.0 - h[j] * h[j]) * self.gain;
                g[2 * j] += da * x[0];
                g[2 * j + 1] += da * x[1];
                g[o_b1 + j] += da;
            }
        }
        g
    }
}
