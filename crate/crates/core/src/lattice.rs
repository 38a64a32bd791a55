//! Cells, boxes, regularity of the point set, and the discrete disk.
//!
//! The torus is cut into `m × m` cells, each cut into `kd × kd` boxes, so the
//! box grid has `W = m·k·d` boxes per axis. Boxes are addressed either
//! globally as `(bx, by) ∈ [0, W)²` or, inside a cell, by centred
//! coordinates in `{-h, …, h}²` with `h = ⌊kd/2⌋`. Cells `(i, j)` are
//! numbered `i·m + j` (lexicographic).

use serde::Serialize;

use crate::bounds::{delta_good_prob_bound, DeltaGoodBound};
use crate::error::{invalid, Error, Result};
use crate::geometry::{torus_distance, Point, TorusPoints};

pub type Cell = (usize, usize);
pub type BoxId = (usize, usize);

/// `m = ⌈2/(k r)⌉` and `r' = 2/(k m)`.
pub fn cell_params(r: f64, k: usize) -> Result<(usize, f64)> {
    if k == 0 || k % 2 == 0 {
        return Err(invalid("k", format!("{k} must be odd and positive")));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid("r", format!("{r} not in (0,1)")));
    }
    let m = (2.0 / (k as f64 * r)).ceil() as usize;
    let m = m.max(1);
    Ok((m, 2.0 / (k * m) as f64))
}

/// Point-free geometry of the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellGeometry {
    pub k: usize,
    pub d: usize,
    pub r: f64,
    pub m: usize,
    pub r_prime: f64,
}

impl CellGeometry {
    pub fn new(r: f64, k: usize, d: usize) -> Result<Self> {
        if d == 0 || d % 2 == 0 {
            return Err(invalid("d", format!("{d} must be odd and positive")));
        }
        let (m, r_prime) = cell_params(r, k)?;
        Ok(Self { k, d, r, m, r_prime })
    }

    /// Boxes per cell side, `k·d`.
    pub fn kd(&self) -> usize {
        self.k * self.d
    }

    /// `⌊kd/2⌋`.
    pub fn half(&self) -> usize {
        self.kd() / 2
    }

    /// Boxes per torus side, `m·k·d`.
    pub fn boxes_per_axis(&self) -> usize {
        self.m * self.kd()
    }

    pub fn cell_side(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// `1/(mkd) = r'/(2d)`.
    pub fn box_side(&self) -> f64 {
        1.0 / self.boxes_per_axis() as f64
    }

    /// `k·r ≥ 1`: cell-level inequalities do not apply.
    pub fn degenerate(&self) -> bool {
        self.k as f64 * self.r >= 1.0
    }

    /// `(1 - k r) r ≤ r' ≤ r`, checked only outside the degenerate regime.
    pub fn r_prime_in_range(&self) -> Option<bool> {
        if self.degenerate() {
            return None;
        }
        let lo = (1.0 - self.k as f64 * self.r) * self.r;
        Some(lo <= self.r_prime + 1e-15 && self.r_prime <= self.r + 1e-15)
    }

    pub fn global_box_of(&self, x: Point) -> BoxId {
        let w = self.boxes_per_axis();
        let f = |c: f64| ((c * w as f64) as usize).min(w - 1);
        (f(x[0]), f(x[1]))
    }

    pub fn cell_of_box(&self, b: BoxId) -> Cell {
        (b.0 / self.kd(), b.1 / self.kd())
    }

    /// Centred coordinates of a global box inside its cell.
    pub fn centred(&self, b: BoxId) -> (i64, i64) {
        let h = self.half() as i64;
        ((b.0 % self.kd()) as i64 - h, (b.1 % self.kd()) as i64 - h)
    }

    /// Global box of centred coordinates `c` in `cell`.
    pub fn box_at(&self, cell: Cell, c: (i64, i64)) -> BoxId {
        let h = self.half() as i64;
        let kd = self.kd() as i64;
        debug_assert!(c.0.abs() <= h && c.1.abs() <= h);
        (
            (cell.0 as i64 * kd + h + c.0) as usize,
            (cell.1 as i64 * kd + h + c.1) as usize,
        )
    }

    pub fn central_box(&self, cell: Cell) -> BoxId {
        self.box_at(cell, (0, 0))
    }

    pub fn cell_id(&self, cell: Cell) -> usize {
        cell.0 * self.m + cell.1
    }

    pub fn cell_from_id(&self, id: usize) -> Cell {
        (id / self.m, id % self.m)
    }

    pub fn box_index(&self, b: BoxId) -> usize {
        b.1 * self.boxes_per_axis() + b.0
    }

    pub fn neighbour(&self, cell: Cell, dir: Direction) -> Cell {
        let m = self.m;
        match dir {
            Direction::East => ((cell.0 + 1) % m, cell.1),
            Direction::North => (cell.0, (cell.1 + 1) % m),
            Direction::West => ((cell.0 + m - 1) % m, cell.1),
            Direction::South => (cell.0, (cell.1 + m - 1) % m),
        }
    }

    /// All global boxes of `cell`.
    pub fn boxes_of_cell(&self, cell: Cell) -> impl Iterator<Item = BoxId> {
        let kd = self.kd();
        let (x0, y0) = (cell.0 * kd, cell.1 * kd);
        (0..kd).flat_map(move |j| (0..kd).map(move |i| (x0 + i, y0 + j)))
    }
}

/// Face directions between cells; `East` is increasing x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    East,
    North,
    West,
    South,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::East, Direction::North, Direction::West, Direction::South];

    pub fn opposite(self) -> Self {
        match self {
            Direction::East => Direction::West,
            Direction::North => Direction::South,
            Direction::West => Direction::East,
            Direction::South => Direction::North,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Centred coordinates of the seed box on this face, for half-width `h`.
    pub fn seed_offset(self, h: i64) -> (i64, i64) {
        match self {
            Direction::East => (h, 0),
            Direction::North => (0, h),
            Direction::West => (-h, 0),
            Direction::South => (0, -h),
        }
    }
}

/// Decomposition together with per-box point buckets.
#[derive(Debug, Clone)]
pub struct LatticeFrame {
    geom: CellGeometry,
    n: usize,
    box_of_point: Vec<u32>,
    starts: Vec<u32>,
    entries: Vec<u32>,
}

impl LatticeFrame {
    pub fn new(pts: &TorusPoints, r: f64, k: usize, d: usize) -> Result<Self> {
        Self::with_geometry(pts, CellGeometry::new(r, k, d)?)
    }

    pub fn with_geometry(pts: &TorusPoints, geom: CellGeometry) -> Result<Self> {
        let w = geom.boxes_per_axis();
        let total = w
            .checked_mul(w)
            .filter(|&t| t < u32::MAX as usize)
            .ok_or_else(|| invalid("k,d", format!("{w}² boxes is too many")))?;
        let box_of_point: Vec<u32> = pts
            .coords()
            .iter()
            .map(|&p| geom.box_index(geom.global_box_of(p)) as u32)
            .collect();
        let mut starts = vec![0u32; total + 1];
        for &b in &box_of_point {
            starts[b as usize + 1] += 1;
        }
        for i in 1..starts.len() {
            starts[i] += starts[i - 1];
        }
        let mut fill = starts.clone();
        let mut entries = vec![0u32; box_of_point.len()];
        for (i, &b) in box_of_point.iter().enumerate() {
            entries[fill[b as usize] as usize] = i as u32;
            fill[b as usize] += 1;
        }
        Ok(Self {
            geom,
            n: pts.len(),
            box_of_point,
            starts,
            entries,
        })
    }

    pub fn geometry(&self) -> &CellGeometry {
        &self.geom
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Point indices in a box, ascending.
    pub fn points_in_box(&self, b: BoxId) -> &[u32] {
        let k = self.geom.box_index(b);
        &self.entries[self.starts[k] as usize..self.starts[k + 1] as usize]
    }

    pub fn box_count(&self, b: BoxId) -> usize {
        self.points_in_box(b).len()
    }

    pub fn box_of_point(&self, i: usize) -> BoxId {
        let w = self.geom.boxes_per_axis();
        let k = self.box_of_point[i] as usize;
        (k % w, k / w)
    }

    pub fn cell_of_point(&self, i: usize) -> Cell {
        self.geom.cell_of_box(self.box_of_point(i))
    }

    pub fn in_box(&self, i: usize, b: BoxId) -> bool {
        self.box_of_point[i] as usize == self.geom.box_index(b)
    }
}

/// Cell and in-cell box of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub cell: Cell,
    /// In-cell box, `0..kd` per axis.
    pub local_box: (usize, usize),
}

pub fn locate(geom: &CellGeometry, x: Point) -> Location {
    let b = geom.global_box_of(x);
    Location {
        cell: geom.cell_of_box(b),
        local_box: (b.0 % geom.kd(), b.1 % geom.kd()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellGoodness {
    pub cell: Cell,
    pub min_box_count: usize,
    pub max_box_count: usize,
    pub good: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodnessReport {
    pub delta: f64,
    /// Accepted range `[(1-δ) n r²/(4d²), (1+δ) n r²/(4d²)]`.
    pub lower: f64,
    pub upper: f64,
    pub cells: Vec<CellGoodness>,
    pub all_good: bool,
    pub bound: DeltaGoodBound,
    pub degenerate: bool,
}

impl GoodnessReport {
    pub const CSV_HEADER: &'static str = "cell_i,cell_j,min_box_count,max_box_count,good";

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{}",
                c.cell.0, c.cell.1, c.min_box_count, c.max_box_count, c.good as u8
            )?;
        }
        w.flush()
    }
}

/// Checks every box count against `(1 ± δ) n r²/(4d²)`.
pub fn delta_goodness(frame: &LatticeFrame, delta: f64) -> Result<GoodnessReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} not in (0,1)")));
    }
    let g = frame.geometry();
    let n = frame.n() as f64;
    let mean = n * g.r * g.r / (4.0 * (g.d * g.d) as f64);
    let (lower, upper) = ((1.0 - delta) * mean, (1.0 + delta) * mean);
    let mut cells = Vec::with_capacity(g.m * g.m);
    for id in 0..g.m * g.m {
        let cell = g.cell_from_id(id);
        let (mut lo, mut hi) = (usize::MAX, 0usize);
        for b in g.boxes_of_cell(cell) {
            let c = frame.box_count(b);
            lo = lo.min(c);
            hi = hi.max(c);
        }
        let good = lower <= lo as f64 && hi as f64 <= upper;
        cells.push(CellGoodness {
            cell,
            min_box_count: lo,
            max_box_count: hi,
            good,
        });
    }
    let all_good = cells.iter().all(|c| c.good);
    let gamma = g.r * (n / n.ln()).sqrt();
    let bound = delta_good_prob_bound(frame.n(), gamma, delta, g.k, g.d)?;
    Ok(GoodnessReport {
        delta,
        lower,
        upper,
        cells,
        all_good,
        bound,
        degenerate: g.degenerate(),
    })
}

/// Box offsets that lie inside `B(y, r)` for every `y` of the anchor box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDisk {
    /// Sorted offsets.
    pub offsets: Vec<(i32, i32)>,
}

impl DiscreteDisk {
    /// `a`, the number of offsets.
    pub fn a(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// No box fits: the radius is below one box diagonal.
    pub fn degenerate(&self) -> bool {
        self.offsets.len() <= 1
    }

    pub fn contains(&self, o: (i32, i32)) -> bool {
        self.offsets.binary_search(&o).is_ok()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "dx,dy")?;
        for (x, y) in &self.offsets {
            writeln!(w, "{x},{y}")?;
        }
        w.flush()
    }
}

fn box_corners(s: f64, b: (i64, i64)) -> [Point; 4] {
    let wrap = |v: f64| v.rem_euclid(1.0);
    let (x0, x1) = (wrap(b.0 as f64 * s), wrap((b.0 + 1) as f64 * s));
    let (y0, y1) = (wrap(b.1 as f64 * s), wrap((b.1 + 1) as f64 * s));
    [[x0, y0], [x1, y0], [x0, y1], [x1, y1]]
}

/// Offsets contained around a specific anchor box, by four-corner maximisation
/// of the torus distance. Offsets whose unwrapped extent would exceed half the
/// torus are never considered.
pub fn disk_offsets_at(geom: &CellGeometry, anchor: BoxId) -> Vec<(i32, i32)> {
    let s = geom.box_side();
    let w = geom.boxes_per_axis() as i64;
    let reach = (geom.r / s).ceil() as i64 + 1;
    let a = (anchor.0 as i64, anchor.1 as i64);
    let anchor_corners = box_corners(s, a);
    let mut out = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if 2 * (dx.abs() + 1) > w || 2 * (dy.abs() + 1) > w {
                continue;
            }
            let other = box_corners(s, (a.0 + dx, a.1 + dy));
            let far = anchor_corners
                .iter()
                .flat_map(|p| other.iter().map(move |q| torus_distance(*p, *q)))
                .fold(0.0f64, f64::max);
            if far <= geom.r {
                out.push((dx as i32, dy as i32));
            }
        }
    }
    out.sort_unstable();
    out
}

/// The discrete disk, computed once at anchor box `(0, 0)`.
pub fn discrete_disk(geom: &CellGeometry) -> Result<DiscreteDisk> {
    if geom.r >= 0.5 {
        return Err(invalid("r", "must be below 1/2"));
    }
    Ok(DiscreteDisk {
        offsets: disk_offsets_at(geom, (0, 0)),
    })
}

/// Central box and the four seed boxes of a cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedBoxes {
    pub central: BoxId,
    /// Indexed by `Direction::index()`.
    pub seeds: [BoxId; 4],
}

pub fn seed_and_central_boxes(geom: &CellGeometry, cell: Cell) -> SeedBoxes {
    let h = geom.half() as i64;
    SeedBoxes {
        central: geom.central_box(cell),
        seeds: Direction::ALL.map(|dir| geom.box_at(cell, dir.seed_offset(h))),
    }
}

/// Direction from `q` to an adjacent cell `q2`.
pub fn direction_between(geom: &CellGeometry, q: Cell, q2: Cell) -> Result<Direction> {
    Direction::ALL
        .into_iter()
        .find(|&dir| q != q2 && geom.neighbour(q, dir) == q2)
        .ok_or(Error::NotAdjacent { a: q, b: q2 })
}

/// `I(Q, Q')`: the seed box of `q` on the face shared with `q2`.
pub fn infection_box(geom: &CellGeometry, q: Cell, q2: Cell) -> Result<BoxId> {
    let dir = direction_between(geom, q, q2)?;
    Ok(geom.box_at(q, dir.seed_offset(geom.half() as i64)))
}
