//! Points on the unit torus, the torus metric and fixed-radius queries.

use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::rng::{self, StreamFamily};

pub type Point = [f64; 2];

const DUMP_MAGIC: &[u8; 4] = b"IRPT";
const DUMP_VERSION: u32 = 1;
const POINTS_PER_CHUNK: usize = 4096;

#[inline]
fn axis_gap(a: f64, b: f64) -> f64 {
    let g = (a - b).abs();
    g.min(1.0 - g)
}

/// Euclidean distance on the flat torus `[0,1)²`.
#[inline]
pub fn torus_distance(x: Point, y: Point) -> f64 {
    let dx = axis_gap(x[0], y[0]);
    let dy = axis_gap(x[1], y[1]);
    (dx * dx + dy * dy).sqrt()
}

#[inline]
pub(crate) fn torus_distance_sq(x: Point, y: Point) -> f64 {
    let dx = axis_gap(x[0], y[0]);
    let dy = axis_gap(x[1], y[1]);
    dx * dx + dy * dy
}

/// `n` points of the unit torus together with the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoints {
    coords: Vec<Point>,
    seed: u64,
}

impl TorusPoints {
    /// Wraps hand-placed coordinates. Every coordinate must lie in `[0,1)`.
    pub fn from_coords(coords: Vec<Point>, seed: u64) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("n", "at least one point is required"));
        }
        if let Some(p) = coords
            .iter()
            .find(|p| !p.iter().all(|c| (0.0..1.0).contains(c)))
        {
            return Err(invalid("coords", format!("{p:?} is outside [0,1)²")));
        }
        Ok(Self { coords, seed })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    #[inline]
    pub fn get(&self, i: usize) -> Point {
        self.coords[i]
    }

    /// Writes the binary dump: `"IRPT"`, version `u32`, `n` as `u64`, seed
    /// as `u64`, then `n` little-endian `f64` pairs.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.coords.len() as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for p in &self.coords {
            w.write_all(&p[0].to_le_bytes())?;
            w.write_all(&p[1].to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::Dump(e.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Dump(format!("bad magic {magic:?}")));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4).map_err(io)?;
        let version = u32::from_le_bytes(b4);
        if version != DUMP_VERSION {
            return Err(Error::Dump(format!("unsupported version {version}")));
        }
        r.read_exact(&mut b8).map_err(io)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8).map_err(io)?;
        let seed = u64::from_le_bytes(b8);
        let mut coords = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8).map_err(io)?;
            let x = f64::from_le_bytes(b8);
            r.read_exact(&mut b8).map_err(io)?;
            let y = f64::from_le_bytes(b8);
            coords.push([x, y]);
        }
        Self::from_coords(coords, seed).map_err(|e| Error::Dump(e.to_string()))
    }
}

/// Samples `n` i.i.d. uniform points. Point `i` is read from a fixed offset
/// of the seed's stream, so generation order does not matter.
pub fn sample_points(n: usize, seed: u64) -> Result<TorusPoints> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let family = StreamFamily::new(seed, rng::domain::POINTS);
    let base = family.stream(0);
    let mut coords = vec![[0.0; 2]; n];
    coords
        .par_chunks_mut(POINTS_PER_CHUNK)
        .enumerate()
        .for_each(|(chunk, out)| {
            let mut r = base.clone();
            // each point consumes two u64 draws = four 32-bit words
            r.set_word_pos((chunk * POINTS_PER_CHUNK) as u128 * 4);
            for p in out.iter_mut() {
                *p = [r.random::<f64>(), r.random::<f64>()];
            }
        });
    Ok(TorusPoints { coords, seed })
}

/// Uniform bucket grid over the torus.
#[derive(Debug, Clone)]
pub struct GridIndex {
    cells_per_axis: usize,
    cell_size: f64,
    starts: Vec<u32>,
    entries: Vec<u32>,
}

impl GridIndex {
    /// Builds an index whose buckets are at least `min_cell` wide.
    pub fn build(points: &TorusPoints, min_cell: f64) -> Result<Self> {
        if !(min_cell > 0.0 && min_cell <= 1.0) {
            return Err(invalid("cell_size", format!("{min_cell} not in (0,1]")));
        }
        let g = ((1.0 / min_cell).floor() as usize).max(1);
        let cell_size = 1.0 / g as f64;
        let mut counts = vec![0u32; g * g + 1];
        let keys: Vec<usize> = points
            .coords()
            .iter()
            .map(|p| Self::key_of(g, *p))
            .collect();
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut entries = vec![0u32; keys.len()];
        // indices are pushed in increasing order, so each bucket is sorted
        for (i, &k) in keys.iter().enumerate() {
            entries[fill[k] as usize] = i as u32;
            fill[k] += 1;
        }
        Ok(Self {
            cells_per_axis: g,
            cell_size,
            starts: counts,
            entries,
        })
    }

    /// Index for radius-`r` queries with about one bucket per point.
    pub fn for_radius(points: &TorusPoints, r: f64) -> Result<Self> {
        let floor = 1.0 / (points.len().max(1) as f64).sqrt();
        Self::build(points, r.max(floor).min(1.0))
    }

    #[inline]
    fn key_of(g: usize, p: Point) -> usize {
        let cx = ((p[0] * g as f64) as usize).min(g - 1);
        let cy = ((p[1] * g as f64) as usize).min(g - 1);
        cy * g + cx
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// Point indices stored in bucket `(cx, cy)`.
    pub fn bucket(&self, cx: usize, cy: usize) -> &[u32] {
        let k = cy * self.cells_per_axis + cx;
        &self.entries[self.starts[k] as usize..self.starts[k + 1] as usize]
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if r > self.cell_size {
            return Err(Error::RadiusExceedsCell {
                radius: r,
                cell_size: self.cell_size,
            });
        }
        if r >= 0.5 {
            return Err(invalid("r", "must be below 1/2"));
        }
        Ok(())
    }

    fn visit_candidates(&self, x: Point, mut f: impl FnMut(usize)) {
        let g = self.cells_per_axis;
        let cx = ((x[0] * g as f64) as usize).min(g - 1);
        let cy = ((x[1] * g as f64) as usize).min(g - 1);
        let span = |c: usize| -> Vec<usize> {
            let mut v: Vec<usize> = [g + c - 1, c, c + 1].iter().map(|&t| t % g).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let xs = span(cx);
        let ys = span(cy);
        for &yy in &ys {
            for &xx in &xs {
                for &i in self.bucket(xx, yy) {
                    f(i as usize);
                }
            }
        }
    }
}

/// Indices `j` with `torus_distance(x, X_j) < r`, ascending.
pub fn neighbors_within(idx: &GridIndex, pts: &TorusPoints, x: Point, r: f64) -> Result<Vec<usize>> {
    idx.check_radius(r)?;
    let r2 = r * r;
    let mut out = Vec::new();
    idx.visit_candidates(x, |j| {
        if torus_distance_sq(x, pts.get(j)) < r2 {
            out.push(j);
        }
    });
    out.sort_unstable();
    Ok(out)
}

/// `|B(x, r) ∩ X|`.
pub fn count_in_ball(idx: &GridIndex, pts: &TorusPoints, x: Point, r: f64) -> Result<usize> {
    idx.check_radius(r)?;
    let r2 = r * r;
    let mut c = 0;
    idx.visit_candidates(x, |j| {
        if torus_distance_sq(x, pts.get(j)) < r2 {
            c += 1;
        }
    });
    Ok(c)
}
