//! Outer loop: Adam on the penalized merit with SIMP continuation.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::net::{DesignNet, Theta};
use super::problem::{adjoint_gradient, evaluate, volume_constraint, Evaluation, Mode, ToProblem};
use crate::error::{Error, Result};
use crate::fem::QuadMesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OuterConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Initial quadratic-penalty coefficient.
    pub c_pen: f64,
    /// Factor applied every `pen_every` iterations while g > `g_tol`.
    pub pen_growth: f64,
    pub pen_every: usize,
    /// Final SIMP exponent, reached at half the budget.
    pub p_final: f64,
    /// Stop when the merit changes by less than this (relative) over
    /// `stagnation_window` iterations after the continuation has frozen.
    pub stagnation_tol: f64,
    pub stagnation_window: usize,
    /// Step halvings tried after a failed analysis.
    pub max_halvings: usize,
    /// Constraint tolerance: the penalty stops growing and stagnation may
    /// stop the run once g is below it.
    pub g_tol: f64,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            iterations: 300,
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            c_pen: 2.0,
            pen_growth: 1.2,
            pen_every: 25,
            p_final: 3.0,
            stagnation_tol: 1e-5,
            stagnation_window: 20,
            max_halvings: 6,
            g_tol: 0.02,
        }
    }
}

impl OuterConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.iterations > 0
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.c_pen >= 0.0
            && self.pen_growth >= 1.0
            && self.pen_every > 0
            && self.p_final >= 1.0;
        if !ok {
            return Err(Error::domain(format!("invalid optimizer configuration {self:?}")));
        }
        Ok(())
    }

    /// p(k) = 1 + (p_f − 1)·min(1, 2k/K).
    pub fn penalty_exponent(&self, k: usize) -> f64 {
        1.0 + (self.p_final - 1.0) * (2.0 * k as f64 / self.iterations as f64).min(1.0)
    }

    /// Next penalty coefficient after iteration `k` with constraint value `g`.
    pub fn grow_penalty(&self, c: f64, k: usize, g: f64) -> f64 {
        if (k + 1) % self.pen_every == 0 && g > self.g_tol {
            c * self.pen_growth
        } else {
            c
        }
    }
}

/// One accepted iteration (or the failure that ended the run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub merit: f64,
    pub constraint: f64,
    pub p: f64,
    pub c_pen: f64,
    /// Step halvings needed before the analysis converged.
    pub retries: usize,
    pub fea_status: String,
    pub load_steps: usize,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub rows: Vec<TraceRow>,
    /// |J| at the first iteration.
    pub j_ref: f64,
    pub theta: Vec<Theta>,
    pub net: DesignNet,
    pub termination: String,
}

impl OptimizationTrace {
    pub fn final_objective(&self) -> Option<f64> {
        self.rows.iter().rev().find(|r| r.fea_status == "converged").map(|r| r.objective)
    }

    pub fn final_constraint(&self) -> Option<f64> {
        self.rows.iter().rev().find(|r| r.fea_status == "converged").map(|r| r.constraint)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, g: &[f64], cfg: &OuterConfig) -> Vec<f64> {
        self.t += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        g.iter()
            .enumerate()
            .map(|(i, &gi)| {
                self.m[i] = b1 * self.m[i] + (1.0 - b1) * gi;
                self.v[i] = b2 * self.v[i] + (1.0 - b2) * gi * gi;
                -cfg.learning_rate * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + cfg.epsilon)
            })
            .collect()
    }
}

/// Merit L = sign·J/|J_ref| + c·max(0, g)² and dL/dτ.
fn merit_and_gradient(
    problem: &ToProblem,
    net: &DesignNet,
    eval: &Evaluation,
    j_ref: f64,
    c_pen: f64,
) -> Result<(f64, Vec<f64>)> {
    let sign = problem.objective.sign();
    let centroids = problem.mesh.normalized_centroids();
    let dj = adjoint_gradient(problem, net, eval)?;
    let (g, dg_theta) = volume_constraint(&eval.theta, &problem.mesh, problem.rho_t, problem.mode);
    let viol = g.max(0.0);
    let coef = 2.0 * c_pen * viol;
    let mut grad: Vec<f64> = dj.iter().map(|d| sign * d / j_ref).collect();
    if coef > 0.0 {
        let dg = net.vjp(&centroids, &dg_theta);
        for (gi, d) in grad.iter_mut().zip(dg) {
            *gi += coef * d;
        }
    }
    Ok((sign * eval.objective / j_ref + c_pen * viol * viol, grad))
}

/// Starting network for `problem`: hidden layer from [`DesignNet::init`] and
/// a uniform design at the target volume (ρ_M = ρ_t, or ρ_t over the ρ_m
/// midpoint in multiscale mode, capped at 0.95).
pub fn initial_net(problem: &ToProblem, hidden: usize, seed: u64) -> Result<DesignNet> {
    let mut net = DesignNet::init(hidden, seed);
    let rho = match problem.mode {
        Mode::Multiscale => problem.rho_t / 0.5,
        _ => problem.rho_t,
    };
    net.set_base_density(rho.min(0.95))?;
    Ok(net)
}

/// Runs the outer loop from `net`.
///
/// A failed analysis rejects the step: the previous weights are restored and
/// the step is retried at half length, up to `max_halvings` times.
pub fn optimize(problem: &ToProblem, net: DesignNet, cfg: &OuterConfig) -> Result<OptimizationTrace> {
    cfg.validate()?;
    problem.validate()?;
    let start = Instant::now();
    let mut net = net;
    let mut adam = Adam {
        m: vec![0.0; net.weights.len()],
        v: vec![0.0; net.weights.len()],
        t: 0,
    };
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut j_ref = f64::NAN;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None; // (weights, step)
    let mut termination = "iteration budget".to_string();
    let mut last_theta = net.forward(&problem.mesh.normalized_centroids());

    let mut c_pen = cfg.c_pen;
    for k in 0..cfg.iterations {
        let p = cfg.penalty_exponent(k);
        let mut retries = 0;
        let eval = loop {
            match evaluate(problem, &net, p) {
                Ok(e) => break Ok(e),
                Err(err) => {
                    let Some((w0, step)) = prev.as_ref() else { break Err(err) };
                    if retries >= cfg.max_halvings {
                        break Err(err);
                    }
                    retries += 1;
                    log::warn!("iteration {k}: analysis failed ({err}), halving the step");
                    let scale = 0.5f64.powi(retries as i32);
                    net.weights = w0.iter().zip(step).map(|(w, s)| w + scale * s).collect();
                }
            }
        };
        let eval = match eval {
            Ok(e) => e,
            Err(err) if k == 0 => return Err(err),
            Err(err) => {
                if let Some((w0, _)) = prev.as_ref() {
                    net.weights = w0.clone();
                }
                rows.push(TraceRow {
                    iteration: k,
                    objective: f64::NAN,
                    merit: f64::NAN,
                    constraint: f64::NAN,
                    p,
                    c_pen,
                    retries,
                    fea_status: format!("failed: {err}"),
                    load_steps: 0,
                    wall_time: start.elapsed().as_secs_f64(),
                });
                termination = format!("analysis failure: {err}");
                break;
            }
        };
        if k == 0 {
            j_ref = eval.objective.abs();
            if !(j_ref > 0.0) {
                j_ref = 1.0;
            }
        }
        let (merit, grad) = merit_and_gradient(problem, &net, &eval, j_ref, c_pen)?;
        rows.push(TraceRow {
            iteration: k,
            objective: eval.objective,
            merit,
            constraint: eval.constraint,
            p,
            c_pen,
            retries,
            fea_status: "converged".into(),
            load_steps: eval.solution.accepted_steps(),
            wall_time: start.elapsed().as_secs_f64(),
        });
        log::info!(
            "it {k:4} J = {:.6e} g = {:+.4} p = {p:.3} merit = {merit:.6}",
            eval.objective,
            eval.constraint
        );
        last_theta = eval.theta;
        let frozen = 2 * k >= cfg.iterations;
        let w = cfg.stagnation_window;
        if frozen && rows.len() > w && eval.constraint <= cfg.g_tol {
            let old = rows[rows.len() - 1 - w].merit;
            if (merit - old).abs() <= cfg.stagnation_tol * merit.abs().max(1e-12) {
                termination = "stagnation".into();
                break;
            }
        }
        if k + 1 == cfg.iterations {
            break;
        }
        c_pen = cfg.grow_penalty(c_pen, k, eval.constraint);
        let step = adam.step(&grad, cfg);
        let w0 = net.weights.clone();
        net.weights = w0.iter().zip(&step).map(|(w, s)| w + s).collect();
        prev = Some((w0, step));
    }
    Ok(OptimizationTrace {
        rows,
        j_ref,
        theta: last_theta,
        net,
        termination,
    })
}

/// Θ on another mesh of the same domain, by forward passes only.
pub fn transfer_infer(net: &DesignNet, mesh: &QuadMesh) -> Vec<Theta> {
    net.forward(&mesh.normalized_centroids())
}

/// Averages an `nx × ny` element field over `factor × factor` blocks.
pub fn block_average(field: &[f64], nx: usize, ny: usize, factor: usize) -> Result<Vec<f64>> {
    if factor == 0 || nx % factor != 0 || ny % factor != 0 || field.len() != nx * ny {
        return Err(Error::ShapeMismatch(format!(
            "cannot average a {nx}x{ny} field ({} values) in blocks of {factor}",
            field.len()
        )));
    }
    let (bx, by) = (nx / factor, ny / factor);
    let mut out = vec![0.0; bx * by];
    for j in 0..ny {
        for i in 0..nx {
            out[(j / factor) * bx + i / factor] += field[j * nx + i];
        }
    }
    let n = (factor * factor) as f64;
    Ok(out.into_iter().map(|v| v / n).collect())
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::ShapeMismatch("pearson needs two equal-length series".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::domain("pearson correlation of a constant series"));
    }
    Ok(sab / (saa * sbb).sqrt())
}
