use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::mesh::GaussPoint;
use crate::error::{Error, Result};

/// Sharpness of the energy-interpolation projection.
pub const KAPPA_BETA: f64 = 500.0;
/// Threshold of the energy-interpolation projection.
pub const KAPPA_RHO0: f64 = 0.01;

/// Compressible Neo-Hookean constituent given by its initial Lamé pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeoHookeanLaw {
    pub mu0: f64,
    pub lambda0: f64,
}

impl NeoHookeanLaw {
    /// Stiff constituent A.
    pub const A: NeoHookeanLaw = NeoHookeanLaw {
        mu0: 3.70e8,
        lambda0: 8.64e8,
    };
    /// Soft constituent B.
    pub const B: NeoHookeanLaw = NeoHookeanLaw {
        mu0: 3.70e7,
        lambda0: 8.64e7,
    };

    pub fn new(mu0: f64, lambda0: f64) -> Result<Self> {
        if !(mu0 > 0.0 && lambda0 > 0.0) || !mu0.is_finite() || !lambda0.is_finite() {
            return Err(Error::domain(format!(
                "Lamé parameters must be positive, got mu0 = {mu0}, lambda0 = {lambda0}"
            )));
        }
        Ok(Self { mu0, lambda0 })
    }

    /// No positivity check. Element responses are linear in (μ0, λ0), so unit
    /// laws such as (1, 0) give parameter sensitivities directly.
    pub(crate) const fn unchecked(mu0: f64, lambda0: f64) -> Self {
        Self { mu0, lambda0 }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::unchecked(s * self.mu0, s * self.lambda0)
    }

    /// Plane-strain small-strain modulus in Voigt form (engineering shear).
    pub fn linear_modulus(&self) -> Matrix3<f64> {
        let (m, l) = (self.mu0, self.lambda0);
        Matrix3::new(l + 2.0 * m, l, 0.0, l, l + 2.0 * m, 0.0, 0.0, 0.0, m)
    }
}

/// Kinematic quantities at a material point under plane strain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    pub f: Matrix2<f64>,
    pub j: f64,
    pub c: Matrix2<f64>,
    pub e: Matrix2<f64>,
    pub i1: f64,
}

impl KinematicState {
    pub fn from_deformation_gradient(f: Matrix2<f64>) -> Result<Self> {
        let j = f.determinant();
        if !(j > 0.0) {
            return Err(Error::InvertedElement { det: j, element: None });
        }
        let c = f.transpose() * f;
        let e = 0.5 * (c - Matrix2::identity());
        Ok(Self {
            f,
            j,
            c,
            e,
            i1: c[(0, 0)] + c[(1, 1)] + 1.0,
        })
    }

    /// State reached from Green strain `E` with a symmetric right stretch.
    pub fn from_green_strain(e: Matrix2<f64>) -> Result<Self> {
        let c = Matrix2::identity() + 2.0 * e;
        let eig = c.symmetric_eigen();
        if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvertedElement {
                det: c.determinant(),
                element: None,
            });
        }
        let sq = Matrix2::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
        let u = eig.eigenvectors * sq * eig.eigenvectors.transpose();
        Self::from_deformation_gradient(u)
    }

    fn check(&self) -> Result<()> {
        if !(self.j > 0.0) {
            return Err(Error::InvertedElement {
                det: self.j,
                element: None,
            });
        }
        Ok(())
    }

    fn c_inv(&self) -> Matrix2<f64> {
        let c = &self.c;
        let det = c.determinant();
        Matrix2::new(c[(1, 1)], -c[(0, 1)], -c[(1, 0)], c[(0, 0)]) / det
    }
}

/// F = I + Σ u_a ⊗ ∇N_a at one Gauss point.
pub fn deformation_gradient(u_e: &[f64; 8], gp: &GaussPoint) -> Matrix2<f64> {
    let mut f = Matrix2::identity();
    for a in 0..4 {
        for i in 0..2 {
            for k in 0..2 {
                f[(i, k)] += u_e[2 * a + i] * gp.dndx[a][k];
            }
        }
    }
    f
}

pub fn kinematics_at_gauss(u_e: &[f64; 8], gp: &GaussPoint) -> Result<KinematicState> {
    KinematicState::from_deformation_gradient(deformation_gradient(u_e, gp))
}

pub fn stored_energy(kin: &KinematicState, law: &NeoHookeanLaw) -> Result<f64> {
    kin.check()?;
    let lj = kin.j.ln();
    Ok(0.5 * law.lambda0 * lj * lj - law.mu0 * lj + 0.5 * law.mu0 * (kin.i1 - 3.0))
}

pub fn pk2_stress(kin: &KinematicState, law: &NeoHookeanLaw) -> Result<Matrix2<f64>> {
    kin.check()?;
    let ci = kin.c_inv();
    Ok(law.lambda0 * kin.j.ln() * ci + law.mu0 * (Matrix2::identity() - ci))
}

/// Out-of-plane PK2 component implied by the unit out-of-plane stretch.
pub fn pk2_out_of_plane(kin: &KinematicState, law: &NeoHookeanLaw) -> Result<f64> {
    kin.check()?;
    Ok(law.lambda0 * kin.j.ln())
}

const VOIGT: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];

/// ∂S/∂E in Voigt form, acting on `[E11, E22, 2 E12]`.
pub fn tangent_modulus(kin: &KinematicState, law: &NeoHookeanLaw) -> Result<Matrix3<f64>> {
    kin.check()?;
    let ci = kin.c_inv();
    let lam = law.lambda0;
    let mu = law.mu0 - law.lambda0 * kin.j.ln();
    let mut d = Matrix3::zeros();
    for (p, &(i, j)) in VOIGT.iter().enumerate() {
        for (q, &(k, l)) in VOIGT.iter().enumerate() {
            d[(p, q)] = lam * ci[(i, j)] * ci[(k, l)]
                + mu * (ci[(i, k)] * ci[(j, l)] + ci[(i, l)] * ci[(k, j)]);
        }
    }
    Ok(d)
}

/// σ = J⁻¹ F S Fᵀ.
pub fn pk2_to_cauchy(s: &Matrix2<f64>, kin: &KinematicState) -> Result<Matrix2<f64>> {
    kin.check()?;
    Ok(kin.f * s * kin.f.transpose() / kin.j)
}

/// S = J F⁻¹ σ F⁻ᵀ.
pub fn cauchy_to_pk2(sigma: &Matrix2<f64>, kin: &KinematicState) -> Result<Matrix2<f64>> {
    kin.check()?;
    let fi = kin
        .f
        .try_inverse()
        .ok_or(Error::InvertedElement { det: kin.j, element: None })?;
    Ok(kin.j * fi * sigma * fi.transpose())
}

pub fn voigt_stress(s: &Matrix2<f64>) -> Vector3<f64> {
    Vector3::new(s[(0, 0)], s[(1, 1)], s[(0, 1)])
}

/// Energy-interpolation coefficient κ(ρ_M) with the default projection.
pub fn interp_coefficient(rho_m: f64, p: f64) -> Result<f64> {
    interp_coefficient_with(rho_m, p, KAPPA_BETA, KAPPA_RHO0)
}

pub fn interp_coefficient_with(rho_m: f64, p: f64, beta: f64, rho0: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho_m) {
        return Err(Error::domain(format!("macro density {rho_m} outside [0, 1]")));
    }
    let a = (beta * rho0).tanh();
    let den = a + (beta * (1.0 - rho0)).tanh();
    Ok((a + (beta * (rho_m.powf(p) - rho0)).tanh()) / den)
}

/// dκ/dρ_M with the default projection.
pub fn interp_coefficient_derivative(rho_m: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho_m) {
        return Err(Error::domain(format!("macro density {rho_m} outside [0, 1]")));
    }
    let (beta, rho0) = (KAPPA_BETA, KAPPA_RHO0);
    let den = (beta * rho0).tanh() + (beta * (1.0 - rho0)).tanh();
    let th = (beta * (rho_m.powf(p) - rho0)).tanh();
    let drp = if rho_m == 0.0 {
        if p == 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        p * rho_m.powf(p - 1.0)
    };
    Ok(beta * (1.0 - th * th) * drp / den)
}
