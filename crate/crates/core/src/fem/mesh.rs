use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference coordinate of the 2×2 Gauss rule.
const G: f64 = 0.577_350_269_189_625_8;
/// Natural coordinates of the element corners, counter-clockwise.
const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
/// Gauss points in the same order as the corners.
const GAUSS_XI: [[f64; 2]; 4] = [[-G, -G], [G, -G], [G, G], [-G, G]];

/// Shape-function data at one Gauss point of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussPoint {
    /// Shape-function values N_a.
    pub n: [f64; 4],
    /// Reference gradients ∂N_a/∂X_i, indexed `[a][i]`.
    pub dndx: [[f64; 2]; 4],
    /// Quadrature weight times det(∂X/∂ξ).
    pub weight: f64,
}

/// Prescribed value on one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodalValue {
    pub node: usize,
    pub dof: usize,
    pub value: f64,
}

/// Structured 2D mesh of bilinear quadrilaterals.
///
/// Node `(i, j)` has index `j * (nx + 1) + i`, element `(i, j)` has index
/// `j * nx + i`; element nodes run counter-clockwise from the lower left.
#[derive(Debug, Clone)]
pub struct QuadMesh {
    pub nx: usize,
    pub ny: usize,
    pub node_coords: Vec<[f64; 2]>,
    pub elem_nodes: Vec<[usize; 4]>,
    pub elem_area: Vec<f64>,
    pub gauss_points: Vec<[GaussPoint; 4]>,
    dirichlet: Vec<NodalValue>,
    neumann: Vec<NodalValue>,
}

fn shape(xi: [f64; 2]) -> ([f64; 4], [[f64; 2]; 4]) {
    let mut n = [0.0; 4];
    let mut dn = [[0.0; 2]; 4];
    for (a, c) in CORNERS.iter().enumerate() {
        n[a] = 0.25 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]);
        dn[a][0] = 0.25 * c[0] * (1.0 + c[1] * xi[1]);
        dn[a][1] = 0.25 * c[1] * (1.0 + c[0] * xi[0]);
    }
    (n, dn)
}

fn gauss_data(x: &[[f64; 2]; 4], elem: usize) -> Result<[GaussPoint; 4]> {
    let mut out = [GaussPoint {
        n: [0.0; 4],
        dndx: [[0.0; 2]; 4],
        weight: 0.0,
    }; 4];
    for (g, xi) in GAUSS_XI.iter().enumerate() {
        let (n, dn) = shape(*xi);
        // jac[i][k] = ∂X_i/∂ξ_k
        let mut jac = [[0.0; 2]; 2];
        for a in 0..4 {
            for i in 0..2 {
                for k in 0..2 {
                    jac[i][k] += x[a][i] * dn[a][k];
                }
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det > 0.0) {
            return Err(Error::InvertedElement {
                det,
                element: Some(elem),
            });
        }
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        let mut dndx = [[0.0; 2]; 4];
        for a in 0..4 {
            for i in 0..2 {
                // ∂N/∂X_i = ∂N/∂ξ_k ∂ξ_k/∂X_i
                dndx[a][i] = dn[a][0] * inv[0][i] + dn[a][1] * inv[1][i];
            }
        }
        out[g] = GaussPoint {
            n,
            dndx,
            weight: det,
        };
    }
    Ok(out)
}

impl QuadMesh {
    /// Regular `nx × ny` grid of `hx × hy` rectangles with the origin at the
    /// lower-left corner.
    pub fn rectangular(nx: usize, ny: usize, hx: f64, hy: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::domain("mesh needs at least one element per axis"));
        }
        if !(hx > 0.0 && hy > 0.0) {
            return Err(Error::domain("element sizes must be positive"));
        }
        let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                coords.push([i as f64 * hx, j as f64 * hy]);
            }
        }
        Self::structured(nx, ny, coords)
    }

    /// Unit-size elements, as in all presets.
    pub fn unit(nx: usize, ny: usize) -> Result<Self> {
        Self::rectangular(nx, ny, 1.0, 1.0)
    }

    /// Structured topology over arbitrary node positions.
    pub fn structured(nx: usize, ny: usize, node_coords: Vec<[f64; 2]>) -> Result<Self> {
        if node_coords.len() != (nx + 1) * (ny + 1) {
            return Err(Error::ShapeMismatch(format!(
                "{} node coordinates for a {nx}x{ny} grid",
                node_coords.len()
            )));
        }
        let mut elem_nodes = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let n0 = j * (nx + 1) + i;
                elem_nodes.push([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1]);
            }
        }
        let mut gauss_points = Vec::with_capacity(elem_nodes.len());
        let mut elem_area = Vec::with_capacity(elem_nodes.len());
        for (e, nodes) in elem_nodes.iter().enumerate() {
            let x = nodes.map(|n| node_coords[n]);
            let gp = gauss_data(&x, e)?;
            elem_area.push(gp.iter().map(|g| g.weight).sum());
            gauss_points.push(gp);
        }
        Ok(Self {
            nx,
            ny,
            node_coords,
            elem_nodes,
            elem_area,
            gauss_points,
            dirichlet: Vec::new(),
            neumann: Vec::new(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_elems(&self) -> usize {
        self.elem_nodes.len()
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.n_nodes()
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn elem(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Global dof indices of an element, `[u_x0, u_y0, u_x1, ...]`.
    pub fn elem_dofs(&self, e: usize) -> [usize; 8] {
        let n = self.elem_nodes[e];
        [
            2 * n[0],
            2 * n[0] + 1,
            2 * n[1],
            2 * n[1] + 1,
            2 * n[2],
            2 * n[2] + 1,
            2 * n[3],
            2 * n[3] + 1,
        ]
    }

    pub fn gather(&self, e: usize, u: &[f64]) -> [f64; 8] {
        self.elem_dofs(e).map(|d| u[d])
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let mut c = [0.0; 2];
        for &n in &self.elem_nodes[e] {
            c[0] += 0.25 * self.node_coords[n][0];
            c[1] += 0.25 * self.node_coords[n][1];
        }
        c
    }

    /// Element centroids mapped affinely onto `[0,1]²` by the mesh bounding box.
    pub fn normalized_centroids(&self) -> Vec<[f64; 2]> {
        let (lo, hi) = self.bounding_box();
        (0..self.n_elems())
            .map(|e| {
                let c = self.centroid(e);
                [(c[0] - lo[0]) / (hi[0] - lo[0]), (c[1] - lo[1]) / (hi[1] - lo[1])]
            })
            .collect()
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for x in &self.node_coords {
            for k in 0..2 {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        (lo, hi)
    }

    pub fn total_area(&self) -> f64 {
        self.elem_area.iter().sum()
    }

    pub fn dirichlet(&self) -> &[NodalValue] {
        &self.dirichlet
    }

    pub fn neumann(&self) -> &[NodalValue] {
        &self.neumann
    }

    fn check_dof(&self, node: usize, dof: usize) -> Result<()> {
        if node >= self.n_nodes() || dof > 1 {
            return Err(Error::domain(format!("no dof {dof} on node {node}")));
        }
        Ok(())
    }

    /// Prescribes `u[node, dof] = value` (scaled by pseudo-time in Newton).
    pub fn fix(&mut self, node: usize, dof: usize, value: f64) -> Result<()> {
        self.check_dof(node, dof)?;
        if self.neumann.iter().any(|b| b.node == node && b.dof == dof) {
            return Err(Error::domain(format!(
                "node {node} dof {dof} already carries a load"
            )));
        }
        match self
            .dirichlet
            .iter_mut()
            .find(|b| b.node == node && b.dof == dof)
        {
            Some(b) => b.value = value,
            None => self.dirichlet.push(NodalValue { node, dof, value }),
        }
        Ok(())
    }

    /// Applies a nodal force; repeated loads on the same dof accumulate.
    pub fn load(&mut self, node: usize, dof: usize, value: f64) -> Result<()> {
        self.check_dof(node, dof)?;
        if self.dirichlet.iter().any(|b| b.node == node && b.dof == dof) {
            return Err(Error::domain(format!(
                "node {node} dof {dof} is already prescribed"
            )));
        }
        match self
            .neumann
            .iter_mut()
            .find(|b| b.node == node && b.dof == dof)
        {
            Some(b) => b.value += value,
            None => self.neumann.push(NodalValue { node, dof, value }),
        }
        Ok(())
    }

    pub fn clear_boundary_conditions(&mut self) {
        self.dirichlet.clear();
        self.neumann.clear();
    }

    /// Full-length external force vector at unit load factor.
    pub fn external_force(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.n_dofs()];
        for b in &self.neumann {
            f[2 * b.node + b.dof] += b.value;
        }
        f
    }

    /// Mask of prescribed dofs.
    pub fn fixed_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n_dofs()];
        for b in &self.dirichlet {
            m[2 * b.node + b.dof] = true;
        }
        m
    }

    /// Full-length vector of prescribed values at unit load factor.
    pub fn prescribed(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.n_dofs()];
        for b in &self.dirichlet {
            u[2 * b.node + b.dof] = b.value;
        }
        u
    }

    /// Nodes on the `x = min` edge, bottom to top.
    pub fn left_edge(&self) -> Vec<usize> {
        (0..=self.ny).map(|j| self.node(0, j)).collect()
    }

    pub fn right_edge(&self) -> Vec<usize> {
        (0..=self.ny).map(|j| self.node(self.nx, j)).collect()
    }
}
