//! Forward evaluation (design → moduli → equilibrium → J, g) and the adjoint
//! design gradient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::net::{DesignNet, Theta};
use crate::error::{Error, Result};
use crate::fem::{
    element_response, interp_coefficient, interp_coefficient_derivative, kappa_sensitivity, newton_solve,
    EquilibriumSolution, NeoHookeanLaw, NewtonConfig, QuadMesh, Vec8,
};
use crate::gp::MaterialSurrogate;
use crate::linalg::{dot, solve_tangent};

/// Lower bound of the SIMP interpolation, relative to the full modulus.
pub const C_MIN_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Small-strain analysis (κ = 0 everywhere), constituent A only.
    Linear,
    /// Hyperelastic, constituent A only.
    SingleScale,
    /// Hyperelastic, per-element moduli from the surrogates.
    #[default]
    Multiscale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ObjectiveKind {
    /// End compliance (f_ext)ᵀu, minimized.
    #[default]
    #[serde(rename = "J1", alias = "j1")]
    J1,
    /// Total potential ∫Ψ − (f_ext)ᵀu, maximized.
    #[serde(rename = "J2", alias = "j2")]
    J2,
}

impl ObjectiveKind {
    /// Sign turning the objective into a minimization target.
    pub fn sign(&self) -> f64 {
        match self {
            ObjectiveKind::J1 => 1.0,
            ObjectiveKind::J2 => -1.0,
        }
    }
}

/// A macroscale design problem.
#[derive(Debug, Clone)]
pub struct ToProblem {
    /// Mesh carrying the boundary conditions at full load.
    pub mesh: QuadMesh,
    pub objective: ObjectiveKind,
    pub mode: Mode,
    /// Target volume fraction of constituent A.
    pub rho_t: f64,
    pub law_a: NeoHookeanLaw,
    pub surrogate: Option<MaterialSurrogate>,
    pub newton: NewtonConfig,
}

impl ToProblem {
    pub fn new(mesh: QuadMesh, objective: ObjectiveKind, mode: Mode) -> Self {
        Self {
            mesh,
            objective,
            mode,
            rho_t: 0.3,
            law_a: NeoHookeanLaw::A,
            surrogate: None,
            newton: NewtonConfig::default(),
        }
    }

    pub fn with_surrogate(mut self, s: MaterialSurrogate) -> Self {
        self.surrogate = Some(s);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_t > 0.0 && self.rho_t <= 1.0) {
            return Err(Error::domain(format!("target volume fraction {} outside (0, 1]", self.rho_t)));
        }
        if self.mode == Mode::Multiscale && self.surrogate.is_none() {
            return Err(Error::domain("multiscale mode needs GP surrogates"));
        }
        self.newton.validate()
    }
}

/// SIMP factor 1e-6 + (1 − 1e-6)ρ^p and its derivative.
fn simp(rho: f64, p: f64) -> (f64, f64) {
    let s = C_MIN_RATIO + (1.0 - C_MIN_RATIO) * rho.powf(p);
    let ds = if rho > 0.0 {
        (1.0 - C_MIN_RATIO) * p * rho.powf(p - 1.0)
    } else if p == 1.0 {
        1.0 - C_MIN_RATIO
    } else {
        0.0
    };
    (s, ds)
}

/// C̃ = (C − C_min)ρ^p + C_min with C_min = 1e-6·C, for both Lamé parameters.
pub fn penalize(mu_m: f64, lambda_m: f64, rho_big: f64, p: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&rho_big) {
        return Err(Error::domain(format!("macro density {rho_big} outside [0, 1]")));
    }
    let (s, _) = simp(rho_big, p);
    Ok((s * mu_m, s * lambda_m))
}

/// Volume of constituent A per element: ρ_M·ρ_m in multiscale mode, ρ_M
/// otherwise.
fn solid_fraction(th: &Theta, mode: Mode) -> (f64, [f64; 4]) {
    match mode {
        Mode::Multiscale => (th[0] * th[1], [th[1], th[0], 0.0, 0.0]),
        _ => (th[0], [1.0, 0.0, 0.0, 0.0]),
    }
}

/// g = Σ v_e A_e / (ρ_t Σ A_e) − 1 and ∂g/∂Θ_e.
pub fn volume_constraint(theta: &[Theta], mesh: &QuadMesh, rho_t: f64, mode: Mode) -> (f64, Vec<Theta>) {
    let denom = rho_t * mesh.total_area();
    let mut sum = 0.0;
    let grad = theta
        .iter()
        .zip(&mesh.elem_area)
        .map(|(th, &a)| {
            let (v, dv) = solid_fraction(th, mode);
            sum += v * a;
            dv.map(|d| d * a / denom)
        })
        .collect();
    (sum / denom - 1.0, grad)
}

/// J₁ = (f_ext)ᵀu or J₂ = energy − (f_ext)ᵀu.
pub fn objective(kind: ObjectiveKind, u: &[f64], f_ext: &[f64], energy: f64) -> f64 {
    let work = dot(f_ext, u);
    match kind {
        ObjectiveKind::J1 => work,
        ObjectiveKind::J2 => energy - work,
    }
}

/// Moduli, κ and their design derivatives for one element.
#[derive(Debug, Clone, Copy)]
struct ElementDesign {
    law: NeoHookeanLaw,
    kappa: f64,
    /// Unpenalized moduli.
    base: (f64, f64),
    simp: f64,
    d_simp: f64,
    d_kappa: f64,
    /// ∂(μ0, λ0)/∂(ρ_m, R_out, ΔR).
    d_base: ([f64; 3], [f64; 3]),
}

fn element_design(problem: &ToProblem, th: &Theta, p: f64) -> Result<ElementDesign> {
    let rho = th[0];
    let (base, d_base) = match (problem.mode, &problem.surrogate) {
        (Mode::Multiscale, Some(s)) => {
            let x = [th[1], th[2], th[3]];
            let (mu, lam) = s.predict(x);
            if !(mu > 0.0 && lam > 0.0) {
                return Err(Error::NonPhysical(format!(
                    "surrogate moduli ({mu:.3e}, {lam:.3e}) at {x:?} are not positive"
                )));
            }
            ((mu, lam), s.predict_gradient(x))
        }
        (Mode::Multiscale, None) => return Err(Error::domain("multiscale mode needs GP surrogates")),
        _ => ((problem.law_a.mu0, problem.law_a.lambda0), ([0.0; 3], [0.0; 3])),
    };
    let (s, ds) = simp(rho.clamp(0.0, 1.0), p);
    let (kappa, d_kappa) = match problem.mode {
        Mode::Linear => (0.0, 0.0),
        _ => (interp_coefficient(rho, p)?, interp_coefficient_derivative(rho, p)?),
    };
    Ok(ElementDesign {
        law: NeoHookeanLaw::unchecked(s * base.0, s * base.1),
        kappa,
        base,
        simp: s,
        d_simp: ds,
        d_kappa,
        d_base,
    })
}

/// Converged state of one design.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub theta: Vec<Theta>,
    pub p: f64,
    pub laws: Vec<NeoHookeanLaw>,
    pub kappa: Vec<f64>,
    pub solution: EquilibriumSolution,
    pub f_ext: Vec<f64>,
    pub objective: f64,
    pub constraint: f64,
    designs: Vec<ElementDesign>,
}

/// Solves equilibrium for an explicit per-element design field.
pub fn evaluate_theta(problem: &ToProblem, theta: Vec<Theta>, p: f64) -> Result<Evaluation> {
    problem.validate()?;
    if theta.len() != problem.mesh.n_elems() {
        return Err(Error::ShapeMismatch(format!(
            "{} designs for {} elements",
            theta.len(),
            problem.mesh.n_elems()
        )));
    }
    let designs = theta
        .par_iter()
        .map(|th| element_design(problem, th, p))
        .collect::<Result<Vec<_>>>()?;
    let laws: Vec<_> = designs.iter().map(|d| d.law).collect();
    let kappa: Vec<_> = designs.iter().map(|d| d.kappa).collect();
    let solution = newton_solve(&problem.mesh, &laws, &kappa, &problem.newton)?;
    let f_ext = problem.mesh.external_force();
    let objective = objective(problem.objective, &solution.u, &f_ext, solution.energy);
    let (constraint, _) = volume_constraint(&theta, &problem.mesh, problem.rho_t, problem.mode);
    Ok(Evaluation {
        theta,
        p,
        laws,
        kappa,
        solution,
        f_ext,
        objective,
        constraint,
        designs,
    })
}

pub fn evaluate(problem: &ToProblem, net: &DesignNet, p: f64) -> Result<Evaluation> {
    evaluate_theta(problem, net.forward(&problem.mesh.normalized_centroids()), p)
}

/// dJ/dΘ_e by one adjoint solve K a = −∂J/∂u at the converged state, then
/// dJ/dΘ = ∂J/∂Θ + aᵀ ∂f_int/∂Θ per element.
pub fn theta_gradient(problem: &ToProblem, eval: &Evaluation) -> Result<Vec<Theta>> {
    let mesh = &problem.mesh;
    let sol = &eval.solution;
    let dj_du: Vec<f64> = match problem.objective {
        ObjectiveKind::J1 => eval.f_ext.clone(),
        ObjectiveKind::J2 => sol.f_int.iter().zip(&eval.f_ext).map(|(fi, fe)| fi - fe).collect(),
    };
    let rhs: Vec<f64> = sol.dofs.free.iter().map(|&d| -dj_du[d]).collect();
    let mut a = vec![0.0; mesh.n_dofs()];
    if rhs.iter().any(|&v| v != 0.0) {
        let af = solve_tangent(&sol.k, &rhs)?;
        sol.dofs.scatter(&af, &mut a);
    }
    let explicit_energy = problem.objective == ObjectiveKind::J2;
    let unit_mu = NeoHookeanLaw::unchecked(1.0, 0.0);
    let unit_lambda = NeoHookeanLaw::unchecked(0.0, 1.0);
    (0..mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let d = &eval.designs[e];
            let gps = &mesh.gauss_points[e];
            let ue = mesh.gather(e, &sol.u);
            let ae = Vec8::from(mesh.gather(e, &a));
            let rm = element_response(&ue, gps, &unit_mu, d.kappa)?;
            let rl = element_response(&ue, gps, &unit_lambda, d.kappa)?;
            let mut g_mu = ae.dot(&rm.force);
            let mut g_lam = ae.dot(&rl.force);
            let mut g_kappa = 0.0;
            if explicit_energy {
                g_mu += rm.energy;
                g_lam += rl.energy;
            }
            if problem.mode != Mode::Linear && d.d_kappa != 0.0 {
                let (de, df) = kappa_sensitivity(&ue, gps, &d.law, d.kappa)?;
                g_kappa = ae.dot(&df) + if explicit_energy { de } else { 0.0 };
            }
            let mut g: Theta = [0.0; 4];
            g[0] = (g_mu * d.base.0 + g_lam * d.base.1) * d.d_simp + g_kappa * d.d_kappa;
            if problem.mode == Mode::Multiscale {
                for k in 0..3 {
                    g[k + 1] = d.simp * (g_mu * d.d_base.0[k] + g_lam * d.d_base.1[k]);
                }
            }
            Ok(g)
        })
        .collect()
}

/// dJ/dτ: the adjoint design gradient pulled back through the network.
pub fn adjoint_gradient(problem: &ToProblem, net: &DesignNet, eval: &Evaluation) -> Result<Vec<f64>> {
    let g = theta_gradient(problem, eval)?;
    Ok(net.vjp(&problem.mesh.normalized_centroids(), &g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalization_limits() {
        let (mu, lam) = (NeoHookeanLaw::A.mu0, NeoHookeanLaw::A.lambda0);
        assert_eq!(penalize(mu, lam, 1.0, 3.0).unwrap(), (mu, lam));
        let (m0, l0) = penalize(mu, lam, 0.0, 3.0).unwrap();
        assert!((m0 / mu - 1e-6).abs() < 1e-18 && (l0 / lam - 1e-6).abs() < 1e-18);
        let (mh, _) = penalize(mu, lam, 0.5, 1.0).unwrap();
        assert!((mh / mu - (0.5 + 0.5e-6)).abs() < 1e-15);
        assert!(penalize(mu, lam, 1.5, 3.0).is_err());
    }

    #[test]
    fn constraint_examples() {
        let mesh = QuadMesh::unit(4, 2).unwrap();
        let n = mesh.n_elems();
        let (g, _) = volume_constraint(&vec![[1.0, 0.3, 20.0, 5.0]; n], &mesh, 0.3, Mode::Multiscale);
        assert!(g.abs() < 1e-14);
        let (g, _) = volume_constraint(&vec![[1.0, 0.6, 20.0, 5.0]; n], &mesh, 0.3, Mode::Multiscale);
        assert!((g - 1.0).abs() < 1e-14);
        let (g, _) = volume_constraint(&vec![[0.0, 0.6, 20.0, 5.0]; n], &mesh, 0.3, Mode::SingleScale);
        assert_eq!(g, -1.0);
        let (g, _) = volume_constraint(&vec![[0.6, 0.3, 20.0, 5.0]; n], &mesh, 0.3, Mode::SingleScale);
        assert!((g - 1.0).abs() < 1e-14);
    }

    /// Surrogate pair fitted to smooth analytic moduli.
    pub(crate) fn synthetic_surrogate() -> MaterialSurrogate {
        use crate::gp::{fit_gp, sobol_points, GpConfig, Normalization};
        let x: Vec<[f64; 3]> = sobol_points(40, 3, 11).unwrap().into_iter().map(|p| [p[0], p[1], p[2]]).collect();
        let a = NeoHookeanLaw::A;
        let mu: Vec<f64> = x.iter().map(|s| a.mu0 * (0.2 + 0.5 * s[0] + 0.05 * (2.0 * s[1]).sin() - 0.04 * s[2] * s[0])).collect();
        let lam: Vec<f64> = x.iter().map(|s| a.lambda0 * (0.25 + 0.4 * s[0] - 0.03 * s[1] + 0.06 * s[2] * s[2])).collect();
        let cfg = GpConfig { n_restarts: 2, ..GpConfig::default() };
        MaterialSurrogate {
            normalization: Normalization::default(),
            mu: fit_gp(&x, &mu, &cfg).unwrap(),
            lambda: fit_gp(&x, &lam, &cfg).unwrap(),
        }
    }

    fn tight() -> NewtonConfig {
        NewtonConfig {
            delta0: 1e-10,
            delta_f: 1e-10,
            max_inner_iters: 60,
            ..NewtonConfig::default()
        }
    }

    fn small_mesh(load: &str) -> QuadMesh {
        let mut m = QuadMesh::unit(8, 4).unwrap();
        for n in m.left_edge() {
            m.fix(n, 0, 0.0).unwrap();
            m.fix(n, 1, 0.0).unwrap();
        }
        match load {
            "force" => m.load(m.node(8, 0), 1, -2e7).unwrap(),
            _ => {
                m.fix(m.node(8, 2), 1, -0.4).unwrap();
                m.load(m.node(8, 0), 1, -5e6).unwrap();
            }
        }
        m
    }

    pub(crate) fn directional_check(problem: &ToProblem, seed: u64, n_dir: usize) -> f64 {
        use rand::{Rng, SeedableRng};
        let net = DesignNet::init_random(20, seed);
        let p = 3.0;
        let eval = evaluate(problem, &net, p).unwrap();
        let g = adjoint_gradient(problem, &net, &eval).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 100);
        let mut worst = 0.0f64;
        for _ in 0..n_dir {
            let d: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nd = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let d: Vec<f64> = d.iter().map(|v| v / nd).collect();
            let h = 1e-4;
            let shifted = |s: f64| {
                let w = net.weights.iter().zip(&d).map(|(w, di)| w + s * di).collect();
                let n = DesignNet::from_weights(net.hidden, w).unwrap();
                evaluate(problem, &n, p).unwrap().objective
            };
            // fourth-order central stencil
            let fd = (8.0 * (shifted(h) - shifted(-h)) - (shifted(2.0 * h) - shifted(-2.0 * h))) / (12.0 * h);
            let ad = dot(&g, &d);
            worst = worst.max((ad - fd).abs() / fd.abs().max(1e-30));
        }
        worst
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        for mode in [Mode::Linear, Mode::SingleScale, Mode::Multiscale] {
            for kind in [ObjectiveKind::J1, ObjectiveKind::J2] {
                for load in ["force", "mixed"] {
                    let mut prob = ToProblem::new(small_mesh(load), kind, mode);
                    prob.newton = tight();
                    if mode == Mode::Multiscale {
                        prob.surrogate = Some(synthetic_surrogate());
                    }
                    let err = directional_check(&prob, 1, 2);
                    assert!(err < 1e-4, "{mode:?} {kind:?} {load}: {err:.3e}");
                }
            }
        }
    }

    #[test]
    fn linear_compliance_adjoint_is_minus_u() {
        let mut prob = ToProblem::new(small_mesh("force"), ObjectiveKind::J1, Mode::Linear);
        prob.newton = tight();
        let eval = evaluate(&prob, &DesignNet::init_random(20, 2), 1.0).unwrap();
        let sol = &eval.solution;
        let rhs: Vec<f64> = sol.dofs.free.iter().map(|&d| -eval.f_ext[d]).collect();
        let a = solve_tangent(&sol.k, &rhs).unwrap();
        for (ai, &d) in a.iter().zip(&sol.dofs.free) {
            assert!((ai + sol.u[d]).abs() <= 1e-8 * crate::linalg::norm2(&sol.u));
        }
    }

    #[test]
    fn zero_displacement_gives_zero_compliance() {
        assert_eq!(objective(ObjectiveKind::J1, &[0.0; 4], &[1.0, 2.0, 3.0, 4.0], 0.0), 0.0);
    }
}
