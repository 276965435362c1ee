//! Boundary-value problems of the benchmark experiments on unit elements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::QuadMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Left edge clamped, downward force at the bottom-right corner.
    Cantilever,
    /// Both side edges clamped, downward load at the top-edge centre.
    DoubleClamped,
    /// Left edge clamped, downward load at the right-edge centre.
    SquareBeam,
}

/// Downward force F or downward displacement D at the loaded node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "magnitude", rename_all = "snake_case")]
pub enum Load {
    Force(f64),
    Displacement(f64),
}

impl Preset {
    pub fn default_dims(&self) -> (usize, usize) {
        match self {
            Preset::Cantilever => (80, 20),
            Preset::DoubleClamped => (60, 20),
            Preset::SquareBeam => (40, 40),
        }
    }

    pub fn default_load(&self) -> Load {
        match self {
            Preset::Cantilever => Load::Force(1e5),
            Preset::DoubleClamped => Load::Displacement(5.0),
            Preset::SquareBeam => Load::Displacement(5.0),
        }
    }

    /// Grid coordinates (i, j) of the loaded node; ties go to the lower index.
    pub fn load_node(&self, nx: usize, ny: usize) -> (usize, usize) {
        match self {
            Preset::Cantilever => (nx, 0),
            Preset::DoubleClamped => (nx / 2, ny),
            Preset::SquareBeam => (nx, ny / 2),
        }
    }

    pub fn build(&self, nx: usize, ny: usize, load: Load) -> Result<QuadMesh> {
        if nx < 2 || ny < 1 {
            return Err(Error::domain(format!("preset mesh {nx}x{ny} is too small")));
        }
        let mut mesh = QuadMesh::unit(nx, ny)?;
        let clamp = |nodes: Vec<usize>, mesh: &mut QuadMesh| -> Result<()> {
            for n in nodes {
                mesh.fix(n, 0, 0.0)?;
                mesh.fix(n, 1, 0.0)?;
            }
            Ok(())
        };
        clamp(mesh.left_edge(), &mut mesh)?;
        if *self == Preset::DoubleClamped {
            clamp(mesh.right_edge(), &mut mesh)?;
        }
        let (i, j) = self.load_node(nx, ny);
        let node = mesh.node(i, j);
        match load {
            Load::Force(f) => mesh.load(node, 1, -f)?,
            Load::Displacement(d) => mesh.fix(node, 1, -d)?,
        }
        Ok(mesh)
    }
}
