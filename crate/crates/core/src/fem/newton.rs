use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::assembly::{assemble, DofMap};
use super::material::NeoHookeanLaw;
use super::mesh::QuadMesh;
use crate::error::{Error, Result};
use crate::linalg::{norm2, SymmetricMatrix};

/// Residual level below which an iterate counts as exactly balanced,
/// relative to the force scale.
const EXACT_BALANCE: f64 = 1e-8;

/// Pseudo-time stepping and tolerance continuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    pub t0: f64,
    pub tf: f64,
    pub dt0: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub delta0: f64,
    pub delta_f: f64,
    pub grow: f64,
    pub shrink: f64,
    pub max_inner_iters: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            tf: 1.0,
            dt0: 0.01,
            dt_max: 0.05,
            dt_min: 1e-6,
            delta0: 0.1,
            delta_f: 0.001,
            grow: 1.5,
            shrink: 0.25,
            max_inner_iters: 30,
        }
    }
}

impl NewtonConfig {
    /// Checks `0 < dt_min ≤ dt0 ≤ dt_max ≤ tf − t0` and `delta_f ≤ delta0`.
    ///
    /// `dt_max = tf − t0` is allowed so a run can be forced into one step.
    pub fn validate(&self) -> Result<()> {
        let span = self.tf - self.t0;
        let ok = self.dt_min > 0.0
            && self.dt_min <= self.dt0
            && self.dt0 <= self.dt_max
            && self.dt_max <= span
            && self.delta_f > 0.0
            && self.delta_f <= self.delta0
            && self.grow >= 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.max_inner_iters >= 1;
        if !ok {
            return Err(Error::domain(format!("invalid Newton configuration {self:?}")));
        }
        Ok(())
    }

    /// Tolerance at pseudo-time `t`, linear from `delta0` at `t0` to
    /// `delta_f` at `tf`.
    pub fn tolerance(&self, t: f64) -> f64 {
        let w = ((t - self.t0) / (self.tf - self.t0)).clamp(0.0, 1.0);
        w * self.delta_f + (1.0 - w) * self.delta0
    }
}

/// One attempted load step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Pseudo-time at the end of the step.
    pub t: f64,
    pub dt: f64,
    pub iterations: usize,
    pub accepted: bool,
    pub residual_norm: f64,
    pub tolerance: f64,
    /// Force scale the residual was compared against.
    pub force_scale: f64,
    pub failure: Option<String>,
}

/// Converged state at `t = tf`.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub u: Vec<f64>,
    /// Tangent on the free dofs of `dofs`.
    pub k: SymmetricMatrix,
    pub dofs: DofMap,
    pub f_int: Vec<f64>,
    pub energy: f64,
    pub residual_norm: f64,
    pub history: Vec<StepRecord>,
}

impl EquilibriumSolution {
    pub fn accepted_steps(&self) -> usize {
        self.history.iter().filter(|s| s.accepted).count()
    }

    pub fn rejected_steps(&self) -> usize {
        self.history.iter().filter(|s| !s.accepted).count()
    }
}

enum StepOutcome {
    Converged {
        u: Vec<f64>,
        k: SymmetricMatrix,
        f_int: Vec<f64>,
        energy: f64,
        iterations: usize,
        residual: f64,
        scale: f64,
    },
    Failed {
        iterations: usize,
        residual: f64,
        cause: String,
    },
}

struct Problem<'a> {
    mesh: &'a QuadMesh,
    laws: &'a [NeoHookeanLaw],
    kappa: &'a [f64],
    dofs: DofMap,
    f_ext: Vec<f64>,
    ubar: Vec<f64>,
}

impl Problem<'_> {
    fn step(
        &self,
        u_start: &[f64],
        t_new: f64,
        delta: f64,
        max_iters: usize,
        first_solve: &mut bool,
    ) -> Result<StepOutcome> {
        let mut u = u_start.to_vec();
        for b in self.mesh.dirichlet() {
            u[2 * b.node + b.dof] = t_new * b.value;
        }
        let f_ext = self.dofs.restrict(&self.f_ext);
        let f_ext_norm = t_new * norm2(&f_ext);
        let mut du_norm = f64::INFINITY;
        let mut residual = f64::NAN;
        for it in 0..=max_iters {
            let a = match assemble(self.mesh, self.laws, self.kappa, &u, Some(&self.dofs)) {
                Ok(a) => a,
                Err(e @ (Error::InvertedElement { .. } | Error::NonPhysical(_))) => {
                    return Ok(StepOutcome::Failed {
                        iterations: it,
                        residual,
                        cause: e.to_string(),
                    })
                }
                Err(e) => return Err(e),
            };
            let r: Vec<f64> = self
                .dofs
                .free
                .iter()
                .zip(&f_ext)
                .map(|(&d, &fe)| t_new * fe - a.f_int[d])
                .collect();
            residual = norm2(&r);
            // f_int over all dofs includes reactions, so displacement-driven
            // steps get a meaningful force scale
            let scale = f_ext_norm.max(norm2(&a.f_int));
            let u_norm = norm2(&self.dofs.restrict(&u));
            if it > 0
                && residual <= delta * scale
                && (du_norm <= delta * u_norm || residual <= EXACT_BALANCE * scale)
            {
                return Ok(StepOutcome::Converged {
                    u,
                    k: a.tangent.expect("assembled with tangent"),
                    f_int: a.f_int,
                    energy: a.energy,
                    iterations: it,
                    residual,
                    scale,
                });
            }
            if it == max_iters {
                break;
            }
            let k = a.tangent.expect("assembled with tangent");
            let solved = k.factorize().and_then(|f| f.solve(&r));
            let du = match solved {
                Ok(du) => du,
                Err(msg) if *first_solve => return Err(Error::SingularTangent(msg)),
                Err(msg) => {
                    return Ok(StepOutcome::Failed {
                        iterations: it,
                        residual,
                        cause: format!("singular tangent: {msg}"),
                    })
                }
            };
            *first_solve = false;
            du_norm = norm2(&du);
            for (&d, v) in self.dofs.free.iter().zip(&du) {
                u[d] += v;
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Ok(StepOutcome::Failed {
                    iterations: it + 1,
                    residual,
                    cause: "non-finite displacement".into(),
                });
            }
        }
        Ok(StepOutcome::Failed {
            iterations: max_iters,
            residual,
            cause: format!("no convergence in {max_iters} iterations"),
        })
    }
}

/// Incremental-iterative equilibrium solve with adaptive pseudo-time steps.
///
/// Neumann forces and prescribed displacements are scaled by the load factor
/// `t`. Prescribed dofs are eliminated, so they hold exactly.
pub fn newton_solve(
    mesh: &QuadMesh,
    laws: &[NeoHookeanLaw],
    kappa: &[f64],
    cfg: &NewtonConfig,
) -> Result<EquilibriumSolution> {
    cfg.validate()?;
    let prob = Problem {
        mesh,
        laws,
        kappa,
        dofs: DofMap::new(mesh),
        f_ext: mesh.external_force(),
        ubar: mesh.prescribed(),
    };
    let mut u: Vec<f64> = prob.ubar.iter().map(|v| cfg.t0 * v).collect();
    let mut t = cfg.t0;
    let mut dt = cfg.dt0;
    let mut history = Vec::new();
    let mut first_solve = true;
    let mut last = None;
    let span = cfg.tf - cfg.t0;

    while last.is_none() || cfg.tf - t > 1e-12 * span {
        dt = dt.min(cfg.dt_max).min(cfg.tf - t);
        if dt < cfg.dt_min {
            let cause = history
                .iter()
                .rev()
                .find_map(|s: &StepRecord| s.failure.clone())
                .unwrap_or_default();
            return Err(Error::StepUnderflow { t, dt, cause });
        }
        let t_new = if cfg.tf - (t + dt) <= 1e-12 * span {
            cfg.tf
        } else {
            t + dt
        };
        let delta = cfg.tolerance(t_new);
        match prob.step(&u, t_new, delta, cfg.max_inner_iters, &mut first_solve)? {
            StepOutcome::Converged {
                u: un,
                k,
                f_int,
                energy,
                iterations,
                residual,
                scale,
            } => {
                debug!("step to t = {t_new:.4} converged in {iterations} iterations");
                history.push(StepRecord {
                    t: t_new,
                    dt,
                    iterations,
                    accepted: true,
                    residual_norm: residual,
                    tolerance: delta,
                    force_scale: scale,
                    failure: None,
                });
                u = un;
                t = t_new;
                last = Some((k, f_int, energy, residual));
                dt *= cfg.grow;
            }
            StepOutcome::Failed {
                iterations,
                residual,
                cause,
            } => {
                debug!("step to t = {t_new:.4} failed: {cause}");
                history.push(StepRecord {
                    t: t_new,
                    dt,
                    iterations,
                    accepted: false,
                    residual_norm: residual,
                    tolerance: delta,
                    force_scale: f64::NAN,
                    failure: Some(cause),
                });
                dt *= cfg.shrink;
            }
        }
    }
    let (k, f_int, energy, residual_norm) = last.expect("at least one accepted step");
    if history.iter().any(|s| !s.accepted) {
        warn!(
            "{} load steps rejected before convergence",
            history.iter().filter(|s| !s.accepted).count()
        );
    }
    Ok(EquilibriumSolution {
        u,
        k,
        dofs: prob.dofs,
        f_int,
        energy,
        residual_norm,
        history,
    })
}
