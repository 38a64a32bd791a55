//! Independent reference implementations used as oracles.
#![allow(dead_code)]

use std::collections::VecDeque;

use irrigation_core::percolation::PercConfig;
use irrigation_core::{torus_distance, Point, TorusPoints};

/// Linear scan for points strictly within `r` of `q`.
pub fn brute_force_ball(pts: &TorusPoints, q: Point, r: f64) -> Vec<usize> {
    (0..pts.len()).filter(|&i| torus_distance(pts.get(i), q) < r).collect()
}

/// Component sizes by breadth-first search, sorted non-increasing.
pub fn bfs_component_sizes(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        let mut size = 0;
        while let Some(v) = q.pop_front() {
            size += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Largest open cluster on the m×m torus grid by BFS over explicit
/// coordinates. Horizontal link of (x, y) joins it to (x+1, y); vertical link
/// joins it to (x, y+1).
pub fn bfs_largest_cluster(m: usize, site: &dyn Fn(usize, usize) -> bool, hlink: &dyn Fn(usize, usize) -> bool, vlink: &dyn Fn(usize, usize) -> bool) -> usize {
    let mut seen = vec![vec![false; m]; m];
    let mut best = 0;
    for sx in 0..m {
        for sy in 0..m {
            if seen[sx][sy] || !site(sx, sy) {
                continue;
            }
            seen[sx][sy] = true;
            let mut q = VecDeque::from([(sx, sy)]);
            let mut size = 0;
            while let Some((x, y)) = q.pop_front() {
                size += 1;
                let e = ((x + 1) % m, y);
                let w = ((x + m - 1) % m, y);
                let nn = (x, (y + 1) % m);
                let s = (x, (y + m - 1) % m);
                let steps = [
                    (e, hlink(x, y)),
                    (w, hlink(w.0, w.1)),
                    (nn, vlink(x, y)),
                    (s, vlink(s.0, s.1)),
                ];
                for ((a, b), open) in steps {
                    if open && site(a, b) && !seen[a][b] {
                        seen[a][b] = true;
                        q.push_back((a, b));
                    }
                }
            }
            best = best.max(size);
        }
    }
    best
}

/// Oracle cluster size for a library configuration, reading states by raw index.
pub fn oracle_largest(cfg: &PercConfig) -> usize {
    let m = cfg.m();
    let id = |x: usize, y: usize| x * m + y;
    bfs_largest_cluster(
        m,
        &|x, y| cfg.sites()[id(x, y)],
        &|x, y| cfg.links()[2 * id(x, y)],
        &|x, y| cfg.links()[2 * id(x, y) + 1],
    )
}

/// Binomial pmf by products of ratios.
pub fn binom_pmf(k: u32, p: f64, j: u32) -> f64 {
    let mut log = 0.0;
    for i in 0..j {
        log += ((k - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    (log + j as f64 * p.ln() + (k - j) as f64 * (1.0 - p).ln()).exp()
}

use irrigation_core::lattice::LatticeFrame;
use irrigation_core::web::{forbidden_cap, TestState, TraceStep, WebResult};
use irrigation_core::IrrigationDigraph;

/// Every structural invariant of a finished web build; returns violations.
pub fn web_violations(g: &IrrigationDigraph, frame: &LatticeFrame, w: &WebResult, kappa: u32) -> Vec<String> {
    let geom = frame.geometry();
    let mut bad = Vec::new();
    if w.forbidden_sizes.windows(2).any(|p| p[1] < p[0]) {
        bad.push("forbidden set shrank".to_string());
    }
    if w.forbidden_sizes.last().copied().unwrap_or(0) != w.forbidden.len() {
        bad.push("final forbidden size disagrees with the set".into());
    }
    let per_cell: u32 = (0..geom.m * geom.m).map(|c| w.forbidden.count_in_cell(c)).sum();
    if per_cell as usize != w.forbidden.len() {
        bad.push(format!("per-cell counts sum to {per_cell}, set has {}", w.forbidden.len()));
    }
    if w.forbidden.max_per_cell() as f64 > forbidden_cap(kappa, geom.k) {
        bad.push(format!("per-cell forbidden count {} above cap", w.forbidden.max_per_cell()));
    }
    for v in w.forbidden.members() {
        if v as usize >= g.n() {
            bad.push(format!("forbidden vertex {v} out of range"));
        }
    }
    if let Some(i) = w.exploration.activations.iter().position(|&a| a > 1) {
        bad.push(format!("node {i} activated {} times", w.exploration.activations[i]));
    }
    for (cell, bush) in &w.bushes {
        if let Some(v) = bush.iter().find(|&&v| frame.cell_of_point(v as usize) != *cell) {
            bad.push(format!("bush of {cell:?} leaves the cell at vertex {v}"));
        }
    }
    let pg = w.partial();
    let mut node_steps = 0;
    for step in &w.exploration.trace {
        match *step {
            TraceStep::Node { cell, success } => {
                node_steps += 1;
                let want = if success { TestState::Open } else { TestState::Closed };
                if pg.node(cell) != want {
                    bad.push(format!("node {cell:?} state {:?} disagrees with trace", pg.node(cell)));
                }
                if let Some(x) = pg.x(cell) {
                    if !frame.in_box(x, geom.central_box(cell)) {
                        bad.push(format!("activation point of {cell:?} outside its central box"));
                    }
                }
            }
            TraceStep::Link { from, dir, success, .. } => {
                let want = if success { TestState::Open } else { TestState::Closed };
                if pg.link(from, dir) != want {
                    bad.push(format!("link {from:?} {dir:?} disagrees with trace"));
                }
            }
            TraceStep::Activate { .. } => {}
        }
    }
    if node_steps != w.bushes.len() {
        bad.push(format!("{node_steps} node events but {} bushes", w.bushes.len()));
    }
    let web: std::collections::HashSet<u32> = w.web.iter().copied().collect();
    for (cell, bush) in &w.bushes {
        if pg.node(*cell) == TestState::Open && bush.iter().any(|v| !web.contains(v)) {
            bad.push(format!("open node {cell:?} bush missing from web"));
        }
    }
    let counted: u32 = w.box_counts.iter().sum();
    if counted as usize != w.web.len() {
        bad.push("box counts do not cover the web".into());
    }
    bad
}
