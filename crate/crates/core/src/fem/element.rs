use nalgebra::{Matrix3, SMatrix, SVector};

use super::material::{
    kinematics_at_gauss, pk2_stress, stored_energy, tangent_modulus, voigt_stress, NeoHookeanLaw,
};
use super::mesh::GaussPoint;
use crate::error::Result;

pub type Vec8 = SVector<f64, 8>;
pub type Mat8 = SMatrix<f64, 8, 8>;
type Mat3x8 = SMatrix<f64, 3, 8>;

/// Energy, internal force and tangent of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementResponse {
    pub energy: f64,
    pub force: Vec8,
    pub tangent: Mat8,
}

/// Green-strain displacement matrix at deformation gradient `f`.
fn b_matrix(gp: &GaussPoint, f: &nalgebra::Matrix2<f64>) -> Mat3x8 {
    let mut b = Mat3x8::zeros();
    for a in 0..4 {
        let (n1, n2) = (gp.dndx[a][0], gp.dndx[a][1]);
        for i in 0..2 {
            b[(0, 2 * a + i)] = f[(i, 0)] * n1;
            b[(1, 2 * a + i)] = f[(i, 1)] * n2;
            b[(2, 2 * a + i)] = f[(i, 0)] * n2 + f[(i, 1)] * n1;
        }
    }
    b
}

/// Small-strain stiffness K_L of an element.
pub fn linear_stiffness(gps: &[GaussPoint; 4], law: &NeoHookeanLaw) -> Mat8 {
    let d = law.linear_modulus();
    let id = nalgebra::Matrix2::identity();
    let mut k = Mat8::zeros();
    for gp in gps {
        let b = b_matrix(gp, &id);
        k += b.transpose() * d * b * gp.weight;
    }
    k
}

/// Pure Neo-Hookean response at element displacement `u_e`.
pub fn neo_hookean_response(
    u_e: &[f64; 8],
    gps: &[GaussPoint; 4],
    law: &NeoHookeanLaw,
) -> Result<ElementResponse> {
    let mut energy = 0.0;
    let mut force = Vec8::zeros();
    let mut tangent = Mat8::zeros();
    for gp in gps {
        let kin = kinematics_at_gauss(u_e, gp)?;
        let s = pk2_stress(&kin, law)?;
        let d: Matrix3<f64> = tangent_modulus(&kin, law)?;
        let b = b_matrix(gp, &kin.f);
        energy += stored_energy(&kin, law)? * gp.weight;
        force += b.transpose() * voigt_stress(&s) * gp.weight;
        tangent += b.transpose() * d * b * gp.weight;
        // initial-stress part
        for a in 0..4 {
            for c in 0..4 {
                let mut g = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        g += gp.dndx[a][i] * s[(i, j)] * gp.dndx[c][j];
                    }
                }
                g *= gp.weight;
                tangent[(2 * a, 2 * c)] += g;
                tangent[(2 * a + 1, 2 * c + 1)] += g;
            }
        }
    }
    Ok(ElementResponse {
        energy,
        force,
        tangent,
    })
}

/// Response of the interpolated energy
/// Ψ(u) = Ψ_N(κu) − Ψ_L(κu) + Ψ_L(u).
pub fn element_response(
    u_e: &[f64; 8],
    gps: &[GaussPoint; 4],
    law: &NeoHookeanLaw,
    kappa: f64,
) -> Result<ElementResponse> {
    let kl = linear_stiffness(gps, law);
    let u = Vec8::from_column_slice(u_e);
    let klu = kl * u;
    let w = 1.0 - kappa * kappa;
    if kappa == 0.0 {
        return Ok(ElementResponse {
            energy: 0.5 * u.dot(&klu),
            force: klu,
            tangent: kl,
        });
    }
    let ku = u_e.map(|x| kappa * x);
    let n = neo_hookean_response(&ku, gps, law)?;
    Ok(ElementResponse {
        energy: n.energy + 0.5 * w * u.dot(&klu),
        force: kappa * n.force + w * klu,
        tangent: kappa * kappa * n.tangent + w * kl,
    })
}

/// Derivatives of the interpolated energy and force with respect to κ.
pub fn kappa_sensitivity(
    u_e: &[f64; 8],
    gps: &[GaussPoint; 4],
    law: &NeoHookeanLaw,
    kappa: f64,
) -> Result<(f64, Vec8)> {
    let kl = linear_stiffness(gps, law);
    let u = Vec8::from_column_slice(u_e);
    let klu = kl * u;
    let ku = u_e.map(|x| kappa * x);
    let n = neo_hookean_response(&ku, gps, law)?;
    let de = n.force.dot(&u) - kappa * u.dot(&klu);
    let df = n.force + kappa * (n.tangent * u) - 2.0 * kappa * klu;
    Ok((de, df))
}
