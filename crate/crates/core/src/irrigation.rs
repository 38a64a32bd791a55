//! The out-degree law and sampling of the irrigation digraph.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{neighbors_within, GridIndex, TorusPoints};
use crate::rng::{self, StreamFamily};

const PMF_TOLERANCE: f64 = 1e-9;

/// Distribution of the number of requested neighbours, supported on `1..=kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    /// `pmf[j - 1] = P(xi = j)`
    pmf: Vec<f64>,
}

impl OffspringLaw {
    pub fn new(pairs: &[(u32, f64)]) -> Result<Self> {
        let spec = pairs
            .iter()
            .map(|(v, p)| format!("{v}:{p}"))
            .collect::<Vec<_>>()
            .join(",");
        Self::from_pairs(&spec, pairs)
    }

    /// `xi ≡ value`.
    pub fn constant(value: u32) -> Result<Self> {
        Self::new(&[(value, 1.0)])
    }

    fn from_pairs(spec: &str, pairs: &[(u32, f64)]) -> Result<Self> {
        let bad = |reason: String| Error::InvalidLaw {
            spec: spec.to_string(),
            reason,
        };
        if pairs.is_empty() {
            return Err(bad("no value:prob pairs".into()));
        }
        let kappa = pairs.iter().map(|p| p.0).max().unwrap_or(0);
        let mut pmf = vec![0.0; kappa as usize];
        let mut seen = vec![false; kappa as usize];
        for &(v, p) in pairs {
            if v == 0 {
                return Err(bad(format!("pair `{v}:{p}` has value 0; support must be ≥ 1")));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(bad(format!("pair `{v}:{p}` has probability outside [0,1]")));
            }
            let slot = v as usize - 1;
            if seen[slot] {
                return Err(bad(format!("pair `{v}:{p}` repeats value {v}")));
            }
            seen[slot] = true;
            pmf[slot] = p;
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(bad(format!("probabilities sum to {total}, expected 1")));
        }
        while pmf.last() == Some(&0.0) && pmf.len() > 1 {
            pmf.pop();
        }
        Ok(Self { pmf })
    }

    /// Largest value in the support.
    pub fn kappa(&self) -> u32 {
        self.pmf.len() as u32
    }

    /// `P(xi = j)`.
    pub fn prob(&self, j: u32) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.pmf.get(j as usize - 1).copied().unwrap_or(0.0)
    }

    /// Pairs `(j, P(xi = j))` with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.pmf
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (i as u32 + 1, p))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return i as u32 + 1;
            }
        }
        // rounding leaves u above the last partial sum
        self.support().last().map(|(j, _)| j).unwrap_or(1)
    }
}

/// `E xi`.
pub fn mean_offspring(law: &OffspringLaw) -> f64 {
    law.support().map(|(j, p)| j as f64 * p).sum()
}

impl FromStr for OffspringLaw {
    type Err = Error;

    /// Parses `value:prob` pairs separated by commas, e.g. `1:0.8,2:0.2`.
    fn from_str(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let bad = |reason: &str| Error::InvalidLaw {
                spec: s.to_string(),
                reason: format!("pair `{part}` {reason}"),
            };
            let (v, p) = part.split_once(':').ok_or_else(|| bad("is not of the form value:prob"))?;
            let v: u32 = v.trim().parse().map_err(|_| bad("has a non-integer value"))?;
            let p: f64 = p.trim().parse().map_err(|_| bad("has a non-numeric probability"))?;
            pairs.push((v, p));
        }
        Self::from_pairs(s, &pairs)
    }
}

impl fmt::Display for OffspringLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.support().map(|(j, p)| format!("{j}:{p}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Whether a vertex may draw itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SelfSelection {
    /// The vertex is a candidate; drawing it yields no edge.
    #[default]
    Allowed,
    /// The vertex is removed from its own candidate set.
    Excluded,
}

/// Directed graph in which vertex `u` points to its selected neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct IrrigationDigraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    requested: Vec<u32>,
    radius: f64,
    seed: u64,
}

impl IrrigationDigraph {
    /// Hand-built digraph. Lists are sorted; self-loops and duplicates are rejected.
    pub fn from_out_lists(lists: Vec<Vec<usize>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut targets = Vec::new();
        let mut requested = Vec::with_capacity(lists.len());
        offsets.push(0);
        let n = lists.len();
        for (u, mut l) in lists.into_iter().enumerate() {
            l.sort_unstable();
            if l.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid("out", format!("vertex {u} has duplicate out-neighbours")));
            }
            if l.iter().any(|&v| v == u || v >= n) {
                return Err(invalid("out", format!("vertex {u} has a self-loop or out-of-range target")));
            }
            requested.push(l.len().max(1) as u32);
            targets.extend(l.iter().map(|&v| v as u32));
            offsets.push(targets.len());
        }
        Ok(Self {
            offsets,
            targets,
            requested,
            radius: f64::NAN,
            seed: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn out(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    /// The drawn `xi_u`.
    pub fn requested(&self, u: usize) -> u32 {
        self.requested[u]
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| self.out(u).iter().map(move |&v| (u, v as usize)))
    }
}

/// Samples the irrigation digraph: every vertex draws `xi_u` and picks
/// `min(xi_u, rho(X_u))` distinct points of its open ball uniformly.
pub fn sample_irrigation(
    pts: &TorusPoints,
    idx: &GridIndex,
    r: f64,
    law: &OffspringLaw,
    seed: u64,
    self_selection: SelfSelection,
) -> Result<IrrigationDigraph> {
    if !(r > 0.0 && r < 0.5) {
        return Err(invalid("r", format!("{r} not in (0, 1/2)")));
    }
    if r > idx.cell_size() {
        return Err(Error::RadiusExceedsCell {
            radius: r,
            cell_size: idx.cell_size(),
        });
    }
    let family = StreamFamily::new(seed, rng::domain::IRRIGATION);
    let per_vertex: Vec<(u32, Vec<u32>)> = (0..pts.len())
        .into_par_iter()
        .map(|u| {
            let mut rng = family.stream(u as u64);
            let xi = law.sample(&mut rng);
            let mut cand = neighbors_within(idx, pts, pts.get(u), r).expect("radius checked above");
            if self_selection == SelfSelection::Excluded {
                cand.retain(|&j| j != u);
            }
            let take = (xi as usize).min(cand.len());
            for i in 0..take {
                let j = rng.random_range(i..cand.len());
                cand.swap(i, j);
            }
            let mut chosen: Vec<u32> = cand[..take]
                .iter()
                .filter(|&&v| v != u)
                .map(|&v| v as u32)
                .collect();
            chosen.sort_unstable();
            (xi, chosen)
        })
        .collect();

    let mut offsets = Vec::with_capacity(pts.len() + 1);
    let mut targets = Vec::new();
    let mut requested = Vec::with_capacity(pts.len());
    offsets.push(0);
    for (xi, chosen) in per_vertex {
        requested.push(xi);
        targets.extend(chosen);
        offsets.push(targets.len());
    }
    Ok(IrrigationDigraph {
        offsets,
        targets,
        requested,
        radius: r,
        seed,
    })
}

/// The geometric graph `G_n(r)`: all pairs at torus distance below `r`.
pub fn geometric_graph(pts: &TorusPoints, idx: &GridIndex, r: f64) -> Result<UndirectedGraph> {
    let lists: Vec<Vec<usize>> = (0..pts.len())
        .into_par_iter()
        .map(|u| {
            neighbors_within(idx, pts, pts.get(u), r).map(|mut v| {
                v.retain(|&w| w > u);
                v
            })
        })
        .collect::<Result<_>>()?;
    let edges = lists.into_iter().enumerate().flat_map(|(u, v)| v.into_iter().map(move |w| (u, w)));
    Ok(UndirectedGraph::from_edges(pts.len(), edges))
}

/// Undirected simple graph in compressed adjacency form.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedGraph {
    offsets: Vec<usize>,
    adj: Vec<u32>,
}

impl UndirectedGraph {
    /// Builds from an edge list; duplicates and self-loops are dropped.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for (a, b) in edges {
            if a != b {
                pairs.push((a as u32, b as u32));
                pairs.push((b as u32, a as u32));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(a, _) in &pairs {
            offsets[a as usize + 1] += 1;
        }
        for i in 1..=n {
            offsets[i] += offsets[i - 1];
        }
        let adj = pairs.into_iter().map(|(_, b)| b).collect();
        Self { offsets, adj }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.adj[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }

    /// Each edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (v as usize) > u)
                .map(move |&v| (u, v as usize))
        })
    }

    /// Writes the edge list as CSV with a `u,v` header.
    pub fn write_edge_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "u,v")?;
        for (u, v) in self.edges() {
            writeln!(w, "{u},{v}")?;
        }
        w.flush()
    }
}

/// `{u, v}` is an edge when either orientation is an arc.
pub fn undirected_view(g: &IrrigationDigraph) -> UndirectedGraph {
    UndirectedGraph::from_edges(g.n(), g.arcs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeStats {
    pub mean_out_degree: f64,
    pub mean_degree: f64,
    pub edges: usize,
}

pub fn degree_stats(g: &IrrigationDigraph) -> DegreeStats {
    let u = undirected_view(g);
    let n = g.n() as f64;
    DegreeStats {
        mean_out_degree: g.arc_count() as f64 / n,
        mean_degree: 2.0 * u.edge_count() as f64 / n,
        edges: u.edge_count(),
    }
}
