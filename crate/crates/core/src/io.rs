//! Artifact formats: ASCII graymaps, CSV tables and JSON documents.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Matrix2;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{kinematics_at_gauss, pk2_stress, NeoHookeanLaw, QuadMesh};
use crate::micro::{BinaryMicrostructure, GradedImage, PIXEL_A, PIXEL_B};
use crate::topopt::{Theta, TraceRow};

/// 8-bit grayscale image, row-major from the top row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Graymap {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    /// Plain "P2" encoding, maxval 255, one image row per line.
    pub fn to_p2(&self) -> String {
        let mut s = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in self.pixels.chunks(self.width.max(1)) {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse_p2(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        if tokens.next() != Some("P2") {
            return Err(Error::Parse("not a P2 graymap".into()));
        }
        let mut num = || -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse("truncated graymap".into()))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("graymap value: {e}")))
        };
        let (w, h, max) = (num()?, num()?, num()?);
        if max != 255 {
            return Err(Error::Parse(format!("unsupported maxval {max}")));
        }
        let pixels = (0..w * h)
            .map(|_| {
                let v = num()?;
                u8::try_from(v).map_err(|_| Error::Parse(format!("pixel value {v} above 255")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(w, h, pixels)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_bytes(path, self.to_p2().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_p2(&fs::read_to_string(path)?)
    }
}

impl From<&GradedImage> for Graymap {
    fn from(img: &GradedImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            pixels: img.pixels.clone(),
        }
    }
}

impl From<&BinaryMicrostructure> for Graymap {
    /// Constituent A black, constituent B mid-gray.
    fn from(img: &BinaryMicrostructure) -> Self {
        Self {
            width: img.width,
            height: img.height,
            pixels: img
                .pixels
                .iter()
                .map(|&p| if p == 1 { PIXEL_A } else { PIXEL_B })
                .collect(),
        }
    }
}

fn gray(t: f64) -> u8 {
    (255.0 * (1.0 - t.clamp(0.0, 1.0))).round() as u8
}

/// Element field in [0, 1] on an `nx × ny` grid (element `j·nx + i`, `j = 0`
/// at the bottom) as a graymap with `scale × scale` pixels per element;
/// 0 is white and 1 black.
pub fn density_image(field: &[f64], nx: usize, ny: usize, scale: usize) -> Result<Graymap> {
    if field.len() != nx * ny || scale == 0 {
        return Err(Error::ShapeMismatch(format!(
            "{} values for a {nx}x{ny} grid at scale {scale}",
            field.len()
        )));
    }
    let (w, h) = (nx * scale, ny * scale);
    let mut pixels = Vec::with_capacity(w * h);
    for y in 0..h {
        let j = ny - 1 - y / scale;
        for x in 0..w {
            pixels.push(gray(field[j * nx + x / scale]));
        }
    }
    Graymap::new(w, h, pixels)
}

/// Like [`density_image`] after mapping the field's range onto [0, 1].
pub fn scalar_image(field: &[f64], nx: usize, ny: usize, scale: usize) -> Result<Graymap> {
    let lo = field.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let t: Vec<f64> = if span > 0.0 && span.is_finite() {
        field.iter().map(|v| (v - lo) / span).collect()
    } else {
        vec![0.0; field.len()]
    };
    density_image(&t, nx, ny, scale)
}

/// Deformed configuration X + u with each element filled by its density;
/// `pixels_per_unit` sets the resolution and `margin` is in pixels.
pub fn deformed_image(
    mesh: &QuadMesh,
    u: &[f64],
    density: &[f64],
    pixels_per_unit: f64,
    margin: usize,
) -> Result<Graymap> {
    if u.len() != mesh.n_dofs() || density.len() != mesh.n_elems() || !(pixels_per_unit > 0.0) {
        return Err(Error::ShapeMismatch("deformed image inputs do not match the mesh".into()));
    }
    let pos: Vec<[f64; 2]> = (0..mesh.n_nodes())
        .map(|n| {
            let x = mesh.node_coords[n];
            [x[0] + u[2 * n], x[1] + u[2 * n + 1]]
        })
        .collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pos {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    if !(lo[0].is_finite() && hi[0].is_finite() && lo[1].is_finite() && hi[1].is_finite()) {
        return Err(Error::domain("non-finite deformed coordinates"));
    }
    let m = margin as f64;
    let w = ((hi[0] - lo[0]) * pixels_per_unit).ceil() as usize + 2 * margin + 1;
    let h = ((hi[1] - lo[1]) * pixels_per_unit).ceil() as usize + 2 * margin + 1;
    let mut pixels = vec![255u8; w * h];
    let to_px = |p: [f64; 2]| -> [f64; 2] {
        [
            (p[0] - lo[0]) * pixels_per_unit + m,
            (hi[1] - p[1]) * pixels_per_unit + m,
        ]
    };
    for e in 0..mesh.n_elems() {
        let q: Vec<[f64; 2]> = mesh.elem_nodes[e].iter().map(|&n| to_px(pos[n])).collect();
        let xmin = q.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
        let xmax = (q.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max).ceil() as usize).min(w - 1);
        let ymin = q.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
        let ymax = (q.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max).ceil() as usize).min(h - 1);
        let g = gray(density[e]);
        for y in ymin..=ymax {
            for x in xmin..=xmax {
                let c = [x as f64 + 0.5, y as f64 + 0.5];
                if in_triangle(c, q[0], q[1], q[2]) || in_triangle(c, q[0], q[2], q[3]) {
                    let px = &mut pixels[y * w + x];
                    *px = (*px).min(g);
                }
            }
        }
    }
    Graymap::new(w, h, pixels)
}

fn in_triangle(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    let cross = |o: [f64; 2], u: [f64; 2], v: [f64; 2]| (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0]);
    let (d1, d2, d3) = (cross(a, b, p), cross(b, c, p), cross(c, a, p));
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

/// Gauss-point averaged Green strain E and Neo-Hookean PK2 stress S per element.
pub fn element_strain_stress(
    mesh: &QuadMesh,
    laws: &[NeoHookeanLaw],
    u: &[f64],
) -> Result<Vec<(Matrix2<f64>, Matrix2<f64>)>> {
    if laws.len() != mesh.n_elems() || u.len() != mesh.n_dofs() {
        return Err(Error::ShapeMismatch("field inputs do not match the mesh".into()));
    }
    (0..mesh.n_elems())
        .map(|e| {
            let ue = mesh.gather(e, u);
            let (mut es, mut ss) = (Matrix2::zeros(), Matrix2::zeros());
            for gp in &mesh.gauss_points[e] {
                let kin = kinematics_at_gauss(&ue, gp)?;
                es += kin.e / 4.0;
                ss += pk2_stress(&kin, &laws[e])? / 4.0;
            }
            Ok((es, ss))
        })
        .collect()
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

pub const TRACE_HEADER: [&str; 10] = [
    "iteration",
    "objective",
    "merit",
    "constraint",
    "p",
    "c_pen",
    "retries",
    "fea_status",
    "load_steps",
    "wall_time",
];

/// Trace as CSV; the header is written even for an empty trace. Without
/// `wall_time` the last column is dropped so the table is reproducible.
pub fn trace_csv(rows: &[TraceRow], wall_time: bool) -> Result<String> {
    let n = if wall_time { TRACE_HEADER.len() } else { TRACE_HEADER.len() - 1 };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(&TRACE_HEADER[..n])?;
    for r in rows {
        let rec = [
            r.iteration.to_string(),
            r.objective.to_string(),
            r.merit.to_string(),
            r.constraint.to_string(),
            r.p.to_string(),
            r.c_pen.to_string(),
            r.retries.to_string(),
            r.fea_status.clone(),
            r.load_steps.to_string(),
            r.wall_time.to_string(),
        ];
        w.write_record(&rec[..n])?;
    }
    finish_csv(w)
}

pub const THETA_HEADER: [&str; 5] = ["element", "rho_big", "rho_m", "r_out", "d_r"];

pub fn theta_csv(theta: &[Theta]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(THETA_HEADER)?;
    for (e, t) in theta.iter().enumerate() {
        w.serialize((e, t[0], t[1], t[2], t[3]))?;
    }
    finish_csv(w)
}

/// Reads a Θ table; rows may come in any order but must cover 0..n exactly once.
pub fn parse_theta_csv(text: &str) -> Result<Vec<Theta>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != THETA_HEADER {
        return Err(Error::Parse(format!("unexpected design header {header:?}")));
    }
    let mut rows: Vec<(usize, Theta)> = Vec::new();
    for rec in r.deserialize::<(usize, f64, f64, f64, f64)>() {
        let (e, a, b, c, d) = rec?;
        rows.push((e, [a, b, c, d]));
    }
    rows.sort_by_key(|(e, _)| *e);
    for (k, (e, _)) in rows.iter().enumerate() {
        if *e != k {
            return Err(Error::Parse(format!("design table misses or repeats element {k}")));
        }
    }
    Ok(rows.into_iter().map(|(_, t)| t).collect())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn save_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn solid_square_is_black() {
        let g = density_image(&[1.0; 4], 2, 2, 1).unwrap();
        assert_eq!(g.to_p2(), "P2\n2 2\n255\n0 0\n0 0\n");
        let v = density_image(&[0.0, 1.0, 0.5, 0.25], 2, 2, 1).unwrap();
        // top row is j = 1
        assert_eq!(v.pixels, vec![128, 191, 255, 0]);
    }

    #[test]
    fn empty_trace_has_header_only() {
        let s = trace_csv(&[], true).unwrap();
        assert_eq!(s, format!("{}\n", TRACE_HEADER.join(",")));
        assert_eq!(trace_csv(&[], false).unwrap(), format!("{}\n", TRACE_HEADER[..9].join(",")));
        assert_eq!(theta_csv(&[]).unwrap(), format!("{}\n", THETA_HEADER.join(",")));
    }

    #[test]
    fn trace_rows_follow_header() {
        let row = TraceRow {
            iteration: 3,
            objective: 1.5,
            merit: 0.25,
            constraint: -0.01,
            p: 2.0,
            c_pen: 10.0,
            retries: 1,
            fea_status: "converged".into(),
            load_steps: 12,
            wall_time: 0.5,
        };
        let s = trace_csv(std::slice::from_ref(&row), true).unwrap();
        assert_eq!(s.lines().nth(1).unwrap(), "3,1.5,0.25,-0.01,2,10,1,converged,12,0.5");
        let s = trace_csv(&[row], false).unwrap();
        assert_eq!(s.lines().nth(1).unwrap(), "3,1.5,0.25,-0.01,2,10,1,converged,12");
    }

    #[test]
    fn theta_table_rejects_gaps() {
        let s = "element,rho_big,rho_m,r_out,d_r\n0,1,0.5,20,10\n2,1,0.5,20,10\n";
        assert!(parse_theta_csv(s).is_err());
        assert!(parse_theta_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn deformed_rigid_mesh_fills_its_box() {
        let mesh = QuadMesh::unit(4, 2).unwrap();
        let g = deformed_image(&mesh, &vec![0.0; mesh.n_dofs()], &[1.0; 8], 4.0, 0).unwrap();
        assert_eq!((g.width, g.height), (17, 9));
        assert_eq!(g.pixels.iter().filter(|p| **p == 0).count(), 16 * 8);
        let shifted: Vec<f64> = (0..mesh.n_dofs()).map(|d| if d % 2 == 1 { -3.0 } else { 0.0 }).collect();
        assert_eq!(deformed_image(&mesh, &shifted, &[1.0; 8], 4.0, 0).unwrap(), g);
    }

    #[test]
    fn undeformed_fields_vanish() {
        let mesh = QuadMesh::unit(2, 1).unwrap();
        let law = NeoHookeanLaw::new(1.0, 2.0).unwrap();
        let f = element_strain_stress(&mesh, &[law; 2], &vec![0.0; mesh.n_dofs()]).unwrap();
        assert!(f.iter().all(|(e, s)| e.norm() < 1e-15 && s.norm() < 1e-12));
    }

    proptest! {
        #[test]
        fn graymap_round_trip(w in 1usize..6, h in 1usize..6, seed in any::<u64>()) {
            let pixels: Vec<u8> = (0..w * h).map(|k| (seed.rotate_left(k as u32) & 0xff) as u8).collect();
            let g = Graymap::new(w, h, pixels).unwrap();
            prop_assert_eq!(Graymap::parse_p2(&g.to_p2()).unwrap(), g);
        }

        #[test]
        fn theta_round_trip(vals in proptest::collection::vec((0.0f64..1.0, 0.3f64..0.7, 15.0f64..25.0, 0.0f64..25.0), 0..20)) {
            let theta: Vec<Theta> = vals.iter().map(|v| [v.0, v.1, v.2, v.3]).collect();
            let back = parse_theta_csv(&theta_csv(&theta).unwrap()).unwrap();
            prop_assert_eq!(back, theta);
        }

        #[test]
        fn density_pixels_darken_with_density(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = (a.min(b), a.max(b));
            let g = density_image(&[lo, hi], 2, 1, 1).unwrap();
            prop_assert!(g.pixels[0] >= g.pixels[1]);
        }
    }
}
