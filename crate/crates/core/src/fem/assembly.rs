use rayon::prelude::*;

use super::element::{element_response, ElementResponse};
use super::material::NeoHookeanLaw;
use super::mesh::QuadMesh;
use crate::error::{Error, Result};
use crate::linalg::{SymmetricMatrix, TripletBuilder};

/// Split of the global dofs into free and prescribed ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    /// Global index of every free dof, ascending.
    pub free: Vec<usize>,
    /// Reduced index of each global dof, `None` when prescribed.
    pub index: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new(mesh: &QuadMesh) -> Self {
        let fixed = mesh.fixed_mask();
        let mut index = vec![None; fixed.len()];
        let mut free = Vec::new();
        for (d, &is_fixed) in fixed.iter().enumerate() {
            if !is_fixed {
                index[d] = Some(free.len());
                free.push(d);
            }
        }
        Self { free, index }
    }

    /// Every dof free.
    pub fn all(n: usize) -> Self {
        Self {
            free: (0..n).collect(),
            index: (0..n).map(Some).collect(),
        }
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&d| full[d]).collect()
    }

    /// Writes reduced values back into a full-length vector.
    pub fn scatter(&self, reduced: &[f64], full: &mut [f64]) {
        for (r, &d) in self.free.iter().enumerate() {
            full[d] = reduced[r];
        }
    }
}

/// Global quantities at one displacement state.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub energy: f64,
    pub f_int: Vec<f64>,
    /// Tangent restricted to the free dofs of the map it was assembled with.
    pub tangent: Option<SymmetricMatrix>,
}

fn check_fields(mesh: &QuadMesh, laws: &[NeoHookeanLaw], kappa: &[f64]) -> Result<()> {
    if laws.len() != mesh.n_elems() || kappa.len() != mesh.n_elems() {
        return Err(Error::ShapeMismatch(format!(
            "{} laws and {} kappas for {} elements",
            laws.len(),
            kappa.len(),
            mesh.n_elems()
        )));
    }
    Ok(())
}

/// Evaluates all elements (in parallel, result order fixed by element index).
pub fn element_responses(
    mesh: &QuadMesh,
    laws: &[NeoHookeanLaw],
    kappa: &[f64],
    u: &[f64],
) -> Result<Vec<ElementResponse>> {
    check_fields(mesh, laws, kappa)?;
    if u.len() != mesh.n_dofs() {
        return Err(Error::ShapeMismatch(format!(
            "displacement of length {} for {} dofs",
            u.len(),
            mesh.n_dofs()
        )));
    }
    (0..mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let ue = mesh.gather(e, u);
            element_response(&ue, &mesh.gauss_points[e], &laws[e], kappa[e]).map_err(|err| {
                match err {
                    Error::InvertedElement { det, .. } => Error::InvertedElement {
                        det,
                        element: Some(e),
                    },
                    other => other,
                }
            })
        })
        .collect()
}

/// Sums element contributions in element order, so results are bit-identical
/// across runs and thread counts.
pub fn assemble(
    mesh: &QuadMesh,
    laws: &[NeoHookeanLaw],
    kappa: &[f64],
    u: &[f64],
    tangent_map: Option<&DofMap>,
) -> Result<Assembly> {
    let responses = element_responses(mesh, laws, kappa, u)?;
    let mut energy = 0.0;
    let mut f_int = vec![0.0; mesh.n_dofs()];
    let mut trip = tangent_map.map(|m| TripletBuilder::with_capacity(m.n_free(), 64 * mesh.n_elems()));
    for (e, r) in responses.iter().enumerate() {
        let dofs = mesh.elem_dofs(e);
        energy += r.energy;
        for a in 0..8 {
            f_int[dofs[a]] += r.force[a];
        }
        if let (Some(t), Some(map)) = (trip.as_mut(), tangent_map) {
            for a in 0..8 {
                let Some(ra) = map.index[dofs[a]] else { continue };
                for b in 0..8 {
                    if let Some(rb) = map.index[dofs[b]] {
                        t.push(ra, rb, r.tangent[(a, b)]);
                    }
                }
            }
        }
    }
    if f_int.iter().any(|v| !v.is_finite()) || !energy.is_finite() {
        return Err(Error::NonPhysical("non-finite internal force".into()));
    }
    Ok(Assembly {
        energy,
        f_int,
        tangent: trip.map(TripletBuilder::build),
    })
}
