//! Sobol low-discrepancy points in up to three dimensions.
//!
//! Direction numbers follow Joe and Kuo (new-joe-kuo-6.21201): dimension 1
//! is the van der Corput sequence, dimension 2 uses s = 1, a = 0, m = [1],
//! dimension 3 uses s = 2, a = 1, m = [1, 3].

use crate::error::{Error, Result};

const BITS: usize = 32;
pub const MAX_DIM: usize = 3;

struct Primitive {
    s: usize,
    a: u32,
    m: &'static [u32],
}

const PRIMITIVES: [Primitive; 2] = [
    Primitive { s: 1, a: 0, m: &[1] },
    Primitive { s: 2, a: 1, m: &[1, 3] },
];

fn directions(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let p = &PRIMITIVES[dim - 1];
    for k in 0..p.s {
        v[k] = p.m[k] << (BITS - 1 - k);
    }
    for k in p.s..BITS {
        let mut x = v[k - p.s] ^ (v[k - p.s] >> p.s);
        for j in 1..p.s {
            if (p.a >> (p.s - 1 - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    v
}

/// `count` points of the `dim`-dimensional sequence, skipping the origin,
/// each coordinate XOR-scrambled by a seed-derived digital shift
/// (`seed = 0` gives the plain sequence).
pub fn sobol_points(count: usize, dim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::domain(format!("Sobol dimension {dim} not in 1..={MAX_DIM}")));
    }
    let dirs: Vec<[u32; BITS]> = (0..dim).map(directions).collect();
    let shifts: Vec<u32> = (0..dim)
        .map(|d| {
            if seed == 0 {
                0
            } else {
                (crate::micro::mix_seed(seed, d as u64) >> 32) as u32
            }
        })
        .collect();
    let scale = 1.0 / (1u64 << BITS) as f64;
    Ok((1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let mut x = 0u32;
                    let gray = i ^ (i >> 1);
                    for (k, &vk) in dirs[d].iter().enumerate() {
                        if (gray >> k) & 1 == 1 {
                            x ^= vk;
                        }
                    }
                    f64::from(x ^ shifts[d]) * scale
                })
                .collect()
        })
        .collect())
}
