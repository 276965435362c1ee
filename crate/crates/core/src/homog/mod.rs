//! Linear periodic homogenization of pixel microstructures and isotropic
//! projection of the effective tensor.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{linear_stiffness, Mat8, NeoHookeanLaw, QuadMesh, Vec8};
use crate::linalg::SymmetricMatrix;
use crate::micro::BinaryMicrostructure;

/// In-plane constitutive assumption of the unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneState {
    #[default]
    Strain,
    Stress,
}

impl PlaneState {
    /// Lamé pair whose plane-strain modulus equals this state's in-plane
    /// modulus.
    pub fn in_plane_law(&self, law: &NeoHookeanLaw) -> NeoHookeanLaw {
        match self {
            PlaneState::Strain => *law,
            PlaneState::Stress => {
                let (m, l) = (law.mu0, law.lambda0);
                NeoHookeanLaw::unchecked(m, 2.0 * m * l / (l + 2.0 * m))
            }
        }
    }
}

/// Effective stiffness in Voigt order (11, 22, 12) with engineering shear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogenizedTensor {
    pub c: Matrix3<f64>,
}

impl HomogenizedTensor {
    pub fn rows(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.c[(i, j)]))
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Self {
            c: Matrix3::from_fn(|i, j| rows[i][j]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveLame {
    pub mu_m: f64,
    pub lambda_m: f64,
    pub isotropy_error: f64,
}

/// Tensor plus the periodic fluctuation fields of the three load cases.
#[derive(Debug, Clone)]
pub struct Homogenization {
    pub tensor: HomogenizedTensor,
    /// Nodal fluctuation χ for unit strains (1,0,0), (0,1,0), (0,0,1).
    pub fluctuations: [Vec<f64>; 3],
}

/// Plane-strain isotropic Voigt tensor.
pub fn isotropic_tensor(mu: f64, lambda: f64) -> Matrix3<f64> {
    NeoHookeanLaw::unchecked(mu, lambda).linear_modulus()
}

fn unit_pixel_gauss() -> [crate::fem::GaussPoint; 4] {
    QuadMesh::unit(1, 1).expect("unit mesh").gauss_points[0]
}

/// Nodal values of the affine field u = ε·X on the unit pixel.
fn affine_displacement(case: usize) -> Vec8 {
    let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let eps = match case {
        0 => [[1.0, 0.0], [0.0, 0.0]],
        1 => [[0.0, 0.0], [0.0, 1.0]],
        _ => [[0.0, 0.5], [0.5, 0.0]],
    };
    let mut u = Vec8::zeros();
    for (a, x) in corners.iter().enumerate() {
        for i in 0..2 {
            u[2 * a + i] = eps[i][0] * x[0] + eps[i][1] * x[1];
        }
    }
    u
}

/// Periodic pixel grid: node `(i mod n) + (j mod n)·n`, node 0 pinned.
struct Cell<'a> {
    n: usize,
    img: &'a BinaryMicrostructure,
    k: [Mat8; 2],
}

impl Cell<'_> {
    fn node(&self, i: isize, j: isize) -> usize {
        let n = self.n as isize;
        (i.rem_euclid(n) + j.rem_euclid(n) * n) as usize
    }

    fn elem_nodes(&self, i: usize, j: usize) -> [usize; 4] {
        let (i, j) = (i as isize, j as isize);
        [
            self.node(i, j),
            self.node(i + 1, j),
            self.node(i + 1, j + 1),
            self.node(i, j + 1),
        ]
    }

    fn stiffness(&self, i: usize, j: usize) -> &Mat8 {
        &self.k[usize::from(self.img.at(i, j) == 1)]
    }

    /// Reduced system matrix built column by column.
    fn matrix(&self) -> SymmetricMatrix {
        let n = self.n;
        let m = 2 * n * n - 2;
        let mut col_ptr = Vec::with_capacity(m + 1);
        let mut row_idx = Vec::with_capacity(18 * m);
        let mut values = Vec::with_capacity(18 * m);
        col_ptr.push(0);
        let mut col: Vec<(usize, f64)> = Vec::with_capacity(32);
        for dof in 2..2 * n * n {
            let (node, a) = (dof / 2, dof % 2);
            let (i, j) = ((node % n) as isize, (node / n) as isize);
            col.clear();
            // the four pixels sharing this node, with its local index there
            for (di, dj, ln) in [(0, 0, 0), (-1, 0, 1), (-1, -1, 2), (0, -1, 3)] {
                let (ei, ej) = ((i + di).rem_euclid(n as isize) as usize, (j + dj).rem_euclid(n as isize) as usize);
                let k = self.stiffness(ei, ej);
                for (lm, &gm) in self.elem_nodes(ei, ej).iter().enumerate() {
                    for b in 0..2 {
                        let row = 2 * gm + b;
                        if row >= 2 {
                            col.push((row - 2, k[(2 * lm + b, 2 * ln + a)]));
                        }
                    }
                }
            }
            col.sort_by_key(|&(r, _)| r);
            let mut last = usize::MAX;
            for &(r, v) in &col {
                if r == last {
                    *values.last_mut().expect("merged entry") += v;
                } else {
                    row_idx.push(r);
                    values.push(v);
                    last = r;
                }
            }
            col_ptr.push(row_idx.len());
        }
        SymmetricMatrix::from_csc(m, col_ptr, row_idx, values)
    }
}

/// Effective tensor of a periodic two-phase image (pixel value 1 = `law_a`),
/// plane strain.
pub fn homogenize_linear(
    micro: &BinaryMicrostructure,
    law_a: &NeoHookeanLaw,
    law_b: &NeoHookeanLaw,
) -> Result<HomogenizedTensor> {
    Ok(homogenize(micro, law_a, law_b, PlaneState::Strain)?.tensor)
}

/// Three unit-strain periodic solves sharing one factorization;
/// C^H_ij = (1/|X|) Σ_e (u⁰_i + χ_i)ᵀ k_e (u⁰_j + χ_j).
pub fn homogenize(
    micro: &BinaryMicrostructure,
    law_a: &NeoHookeanLaw,
    law_b: &NeoHookeanLaw,
    plane: PlaneState,
) -> Result<Homogenization> {
    if micro.width != micro.height {
        return Err(Error::ShapeMismatch(format!(
            "unit cell must be square, got {}x{}",
            micro.width, micro.height
        )));
    }
    let n = micro.width;
    if n < 2 {
        return Err(Error::domain("unit cell needs at least 2x2 pixels"));
    }
    let gps = unit_pixel_gauss();
    let cell = Cell {
        n,
        img: micro,
        k: [
            linear_stiffness(&gps, &plane.in_plane_law(law_b)),
            linear_stiffness(&gps, &plane.in_plane_law(law_a)),
        ],
    };
    let u0: [Vec8; 3] = std::array::from_fn(affine_displacement);

    let mut rhs = vec![vec![0.0; 2 * n * n]; 3];
    for j in 0..n {
        for i in 0..n {
            let k = cell.stiffness(i, j);
            let nodes = cell.elem_nodes(i, j);
            for (case, r) in rhs.iter_mut().enumerate() {
                let f = k * u0[case];
                for (a, &g) in nodes.iter().enumerate() {
                    r[2 * g] -= f[2 * a];
                    r[2 * g + 1] -= f[2 * a + 1];
                }
            }
        }
    }
    let reduced: Vec<Vec<f64>> = rhs.iter().map(|r| r[2..].to_vec()).collect();
    let kmat = cell.matrix();
    let sol = kmat
        .factorize()
        .and_then(|f| f.solve_many(&reduced))
        .map_err(Error::SingularSystem)?;
    let fluctuations: [Vec<f64>; 3] = std::array::from_fn(|c| {
        let mut chi = vec![0.0; 2 * n * n];
        chi[2..].copy_from_slice(&sol[c]);
        chi
    });

    let mut c = Matrix3::zeros();
    for j in 0..n {
        for i in 0..n {
            let k = cell.stiffness(i, j);
            let nodes = cell.elem_nodes(i, j);
            let ue: [Vec8; 3] = std::array::from_fn(|case| {
                let mut u = u0[case];
                for (a, &g) in nodes.iter().enumerate() {
                    u[2 * a] += fluctuations[case][2 * g];
                    u[2 * a + 1] += fluctuations[case][2 * g + 1];
                }
                u
            });
            for s in 0..3 {
                let ku = k * ue[s];
                for t in s..3 {
                    c[(s, t)] += ue[t].dot(&ku);
                }
            }
        }
    }
    let area = (n * n) as f64;
    for s in 0..3 {
        for t in s..3 {
            c[(s, t)] /= area;
            c[(t, s)] = c[(s, t)];
        }
    }
    Ok(Homogenization {
        tensor: HomogenizedTensor { c },
        fluctuations,
    })
}

/// Weights of the Voigt entries when counted as tensor components.
const COMPONENT_WEIGHTS: [[f64; 3]; 3] = [[1.0, 2.0, 4.0], [2.0, 1.0, 4.0], [4.0, 4.0, 4.0]];

fn weighted_norm(c: &Matrix3<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            // off-diagonal Voigt entries appear twice in the matrix
            let w = if i == j { COMPONENT_WEIGHTS[i][j] } else { COMPONENT_WEIGHTS[i][j] / 2.0 };
            s += w * c[(i, j)] * c[(i, j)];
        }
    }
    s.sqrt()
}

/// Least-squares isotropic projection (over tensor components) read as a
/// plane-strain tensor.
pub fn extract_lame(c_h: &HomogenizedTensor) -> Result<EffectiveLame> {
    extract_lame_with(c_h, PlaneState::Strain)
}

/// Isotropic projection; for plane stress the projected first parameter is
/// converted back to the three-dimensional λ.
pub fn extract_lame_with(c_h: &HomogenizedTensor, plane: PlaneState) -> Result<EffectiveLame> {
    let c = &c_h.c;
    let mu = (c[(0, 0)] + c[(1, 1)] - 2.0 * c[(0, 1)] + 4.0 * c[(2, 2)]) / 8.0;
    let lam = (c[(0, 0)] + c[(1, 1)] + 6.0 * c[(0, 1)] - 4.0 * c[(2, 2)]) / 8.0;
    if !(mu > 0.0) {
        return Err(Error::NonPhysical(format!("projected shear modulus {mu:.4e} is not positive")));
    }
    let iso = isotropic_tensor(mu, lam);
    let norm = weighted_norm(c);
    let isotropy_error = if norm > 0.0 { weighted_norm(&(c - iso)) / norm } else { 0.0 };
    let lambda_m = match plane {
        PlaneState::Strain => lam,
        PlaneState::Stress => {
            if !(2.0 * mu > lam) {
                return Err(Error::NonPhysical(format!(
                    "plane-stress pair (mu = {mu:.4e}, lambda* = {lam:.4e}) has no 3D counterpart"
                )));
            }
            2.0 * mu * lam / (2.0 * mu - lam)
        }
    };
    Ok(EffectiveLame {
        mu_m: mu,
        lambda_m,
        isotropy_error,
    })
}

/// Stored-energy mixture: μ_m = Σ c_i μ0i, λ_m = Σ c_i λ0i.
pub fn mixture_lame(coeffs: &[f64], laws: &[NeoHookeanLaw]) -> Result<EffectiveLame> {
    if coeffs.len() != laws.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} coefficients for {} laws",
            coeffs.len(),
            laws.len()
        )));
    }
    if coeffs.iter().any(|&c| c < 0.0) {
        return Err(Error::domain("mixture coefficients must be non-negative"));
    }
    Ok(EffectiveLame {
        mu_m: coeffs.iter().zip(laws).map(|(c, l)| c * l.mu0).sum(),
        lambda_m: coeffs.iter().zip(laws).map(|(c, l)| c * l.lambda0).sum(),
        isotropy_error: 0.0,
    })
}

/// √(C11² + C22² + C33² + C12² + C13² + C23²).
pub fn tensor_norm(c_h: &HomogenizedTensor) -> f64 {
    let c = &c_h.c;
    (c[(0, 0)].powi(2)
        + c[(1, 1)].powi(2)
        + c[(2, 2)].powi(2)
        + c[(0, 1)].powi(2)
        + c[(0, 2)].powi(2)
        + c[(1, 2)].powi(2))
    .sqrt()
}

/// Voigt (arithmetic) and Reuss (harmonic) mixtures of the constituent
/// tensors at volume fraction `vf` of A.
pub fn voigt_reuss_bounds(
    vf: f64,
    law_a: &NeoHookeanLaw,
    law_b: &NeoHookeanLaw,
    plane: PlaneState,
) -> (Matrix3<f64>, Matrix3<f64>) {
    let ca = plane.in_plane_law(law_a).linear_modulus();
    let cb = plane.in_plane_law(law_b).linear_modulus();
    let voigt = vf * ca + (1.0 - vf) * cb;
    let inv = |m: Matrix3<f64>| m.try_inverse().expect("positive definite modulus");
    let reuss = inv(vf * inv(ca) + (1.0 - vf) * inv(cb));
    (voigt, reuss)
}

/// Whether every diagonal entry of `c` lies in `[Reuss, Voigt]`, with a
/// relative slack `tol`.
pub fn within_bounds(c: &Matrix3<f64>, voigt: &Matrix3<f64>, reuss: &Matrix3<f64>, tol: f64) -> bool {
    (0..3).all(|i| {
        let (lo, hi) = (reuss[(i, i)], voigt[(i, i)]);
        c[(i, i)] >= lo * (1.0 - tol) && c[(i, i)] <= hi * (1.0 + tol)
    })
}
