use serde::{Deserialize, Serialize};

use super::{cut_level, reconstruct_phase_field, BinaryMicrostructure, PhaseField, SdfDescriptor};
use crate::error::{Error, Result};

/// Gray level of void pixels in assembled images.
pub const PIXEL_VOID: u8 = 255;
/// Gray level of constituent A.
pub const PIXEL_A: u8 = 0;
/// Gray level of constituent B.
pub const PIXEL_B: u8 = 128;

/// Tile size the default sharpness refers to.
const REFERENCE_TILE: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// Tiles side by side; blending along x.
    Horizontal,
    /// Tiles stacked; blending along y.
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlendConfig {
    pub zeta: f64,
    pub eta: f64,
}

impl Default for BlendConfig {
    fn default() -> Self {
        Self { zeta: 5e-5, eta: 1.0 }
    }
}

impl BlendConfig {
    /// Default sharpness rescaled to tile size `l`, so the blended band
    /// covers the same fraction of a tile as at `l = 500`.
    pub fn for_tile(l: usize) -> Self {
        let s = REFERENCE_TILE / l as f64;
        Self {
            zeta: 5e-5 * s * s,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.eta >= 0.0) {
            return Err(Error::domain(format!("invalid blend config {self:?}")));
        }
        Ok(())
    }

    /// Weight of the second tile at 1-based position `x ∈ [1, 2l]`.
    ///
    /// Written as a logistic function of the exponent difference, which is
    /// the same ratio of Gaussians without underflow.
    pub fn lambda(&self, x: f64, l: usize) -> f64 {
        let l = l as f64;
        let z = self.zeta * (2.0 * l - 1.0) * (2.0 * x - 1.0 - 2.0 * l);
        1.0 / (1.0 + (-z).exp())
    }

    pub fn gamma(&self, x: f64, l: usize) -> f64 {
        let lam = self.lambda(x, l);
        if x <= l as f64 {
            lam
        } else {
            1.0 - lam
        }
    }

    pub fn amplification(&self, x: f64, l: usize) -> f64 {
        self.eta * (1.0 + self.gamma(x, l))
    }
}

/// Interpolated and amplified field over the `2l`-long joint of two square
/// tiles; each tile is periodically extended across the joint.
pub fn blend_interfaces(
    first: &PhaseField,
    second: &PhaseField,
    cfg: &BlendConfig,
    axis: Axis,
) -> Result<PhaseField> {
    cfg.validate()?;
    if first.width != second.width
        || first.height != second.height
        || first.width != first.height
    {
        return Err(Error::ShapeMismatch(format!(
            "cannot blend {}x{} with {}x{} tiles",
            first.width, first.height, second.width, second.height
        )));
    }
    let l = first.width;
    let (w, h) = match axis {
        Axis::Horizontal => (2 * l, l),
        Axis::Vertical => (l, 2 * l),
    };
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let s = match axis {
                Axis::Horizontal => x,
                Axis::Vertical => y,
            } as f64
                + 1.0;
            let lam = cfg.lambda(s, l);
            let (p1, p2) = (first.at(x % l, y % l), second.at(x % l, y % l));
            values.push(cfg.amplification(s, l) * ((1.0 - lam) * p1 + lam * p2));
        }
    }
    PhaseField::new(w, h, values, false)
}

/// Cut level at joint position `s`, interpolated like the fields.
pub fn joint_threshold(c1: f64, c2: f64, cfg: &BlendConfig, s: f64, l: usize) -> f64 {
    let lam = cfg.lambda(s, l);
    if lam == 0.0 {
        c1
    } else if lam == 1.0 {
        c2
    } else {
        (1.0 - lam) * c1 + lam * c2
    }
}

/// Binarizes a blended joint with the interpolated cut levels of its tiles.
pub fn binarize_joint(
    joint: &PhaseField,
    c1: f64,
    c2: f64,
    cfg: &BlendConfig,
    axis: Axis,
) -> Result<BinaryMicrostructure> {
    let l = match axis {
        Axis::Horizontal => joint.height,
        Axis::Vertical => joint.width,
    };
    let mut pixels = Vec::with_capacity(joint.values.len());
    for y in 0..joint.height {
        for x in 0..joint.width {
            let s = match axis {
                Axis::Horizontal => x,
                Axis::Vertical => y,
            } as f64
                + 1.0;
            let thr = joint_threshold(c1, c2, cfg, s, l);
            pixels.push(u8::from(joint.at(x, y) <= thr));
        }
    }
    BinaryMicrostructure::new(joint.width, joint.height, pixels)
}

/// Number of lines crossing the seam between positions `at − 1` and `at`
/// whose two pixels differ.
pub fn seam_mismatch(img: &BinaryMicrostructure, axis: Axis, at: usize) -> usize {
    match axis {
        Axis::Horizontal => (0..img.height)
            .filter(|&y| img.at(at - 1, y) != img.at(at, y))
            .count(),
        Axis::Vertical => (0..img.width)
            .filter(|&x| img.at(x, at - 1) != img.at(x, at))
            .count(),
    }
}

/// Side-by-side juxtaposition of two images without blending.
pub fn juxtapose(a: &BinaryMicrostructure, b: &BinaryMicrostructure, axis: Axis) -> Result<BinaryMicrostructure> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::ShapeMismatch("juxtaposed images differ in size".into()));
    }
    let (w, h) = (a.width, a.height);
    match axis {
        Axis::Horizontal => {
            let mut p = Vec::with_capacity(2 * w * h);
            for y in 0..h {
                p.extend_from_slice(&a.pixels[y * w..(y + 1) * w]);
                p.extend_from_slice(&b.pixels[y * w..(y + 1) * w]);
            }
            BinaryMicrostructure::new(2 * w, h, p)
        }
        Axis::Vertical => {
            let mut p = a.pixels.clone();
            p.extend_from_slice(&b.pixels);
            BinaryMicrostructure::new(w, 2 * h, p)
        }
    }
}

/// Per-element design used for rendering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileDesign {
    pub rho_big: f64,
    pub rho_m: f64,
    pub r_out: f64,
    pub d_r: f64,
}

/// Assembled image with gray levels [`PIXEL_VOID`], [`PIXEL_A`], [`PIXEL_B`];
/// row 0 is the top of the structure.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

struct Tile {
    field: PhaseField,
    cut: f64,
}

/// splitmix64 finalizer, used to derive independent per-item seeds.
pub(crate) fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Renders an `nx × ny` element grid (element `(i, j)` at index `j·nx + i`,
/// `j = 0` at the bottom) as `tile × tile` microstructures.
///
/// Elements with ρ_M < 0.5 are void. Each solid element gets a reconstruction
/// from its rounded (R_out, ΔR). Near tile edges the phase fields and cut
/// levels of solid neighbours are mixed with the interface weights (tensor
/// product in x and y) and amplified before a single binarization.
pub fn render_graded_assembly(
    designs: &[TileDesign],
    nx: usize,
    ny: usize,
    tile: usize,
    cfg: &BlendConfig,
    seed: u64,
) -> Result<GradedImage> {
    cfg.validate()?;
    if designs.len() != nx * ny {
        return Err(Error::ShapeMismatch(format!(
            "{} designs for a {nx}x{ny} grid",
            designs.len()
        )));
    }
    let tiles: Vec<Option<Tile>> = designs
        .iter()
        .enumerate()
        .map(|(e, d)| -> Result<Option<Tile>> {
            if d.rho_big < 0.5 {
                return Ok(None);
            }
            let desc = SdfDescriptor {
                rho_m: d.rho_m,
                r_out: d.r_out.round(),
                d_r: d.d_r.round(),
                n: tile,
                seed: mix_seed(seed, e as u64),
            };
            let field = reconstruct_phase_field(&desc)?;
            let (_, cut) = cut_level(&field, d.rho_m)?;
            Ok(Some(Tile { field, cut }))
        })
        .collect::<Result<_>>()?;

    // tile grid in image orientation: column ti, row tj from the top
    let tile_at = |ti: isize, tj: isize| -> Option<&Tile> {
        if ti < 0 || tj < 0 || ti >= nx as isize || tj >= ny as isize {
            return None;
        }
        let j = ny - 1 - tj as usize;
        tiles[j * nx + ti as usize].as_ref()
    };
    // neighbour offset and its weight at 1-based local position s
    let side = |s: usize| -> (isize, f64) {
        if 2 * s > tile {
            (1, cfg.lambda(s as f64, tile))
        } else {
            (-1, 1.0 - cfg.lambda((tile + s) as f64, tile))
        }
    };

    let (w, h) = (nx * tile, ny * tile);
    let mut pixels = vec![PIXEL_VOID; w * h];
    for tj in 0..ny {
        for ti in 0..nx {
            let Some(own) = tile_at(ti as isize, tj as isize) else {
                continue;
            };
            for y in 0..tile {
                let (dy, wv0) = side(y + 1);
                for x in 0..tile {
                    let (dx, wh0) = side(x + 1);
                    let (ti, tj) = (ti as isize, tj as isize);
                    let nh = tile_at(ti + dx, tj);
                    let nv = tile_at(ti, tj + dy);
                    let nd = tile_at(ti + dx, tj + dy);
                    let wh = if nh.is_some() { wh0 } else { 0.0 };
                    let wv = if nv.is_some() { wv0 } else { 0.0 };
                    let cands = [
                        (Some(own), (1.0 - wh) * (1.0 - wv)),
                        (nh, wh * (1.0 - wv)),
                        (nv, (1.0 - wh) * wv),
                        (nd, wh * wv),
                    ];
                    let (mut phi, mut thr, mut wsum) = (0.0, 0.0, 0.0);
                    for (t, wt) in cands {
                        if let Some(t) = t {
                            if wt > 0.0 {
                                phi += wt * t.field.at(x, y);
                                thr += wt * t.cut;
                                wsum += wt;
                            }
                        }
                    }
                    let amp = cfg.eta * (1.0 + wh) * (1.0 + wv);
                    let solid = amp * phi / wsum <= thr / wsum;
                    pixels[(tj as usize * tile + y) * w + ti as usize * tile + x] =
                        if solid { PIXEL_A } else { PIXEL_B };
                }
            }
        }
    }
    Ok(GradedImage {
        width: w,
        height: h,
        pixels,
    })
}
