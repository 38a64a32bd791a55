//! Node events, link events and the exploration that chains them into a web.

use std::collections::{BTreeSet, HashSet};
use std::io::Write;

use serde::Serialize;

use crate::components::components;
use crate::error::{invalid, Error, Result};
use crate::irrigation::{mean_offspring, undirected_view, IrrigationDigraph, OffspringLaw};
use crate::lattice::{direction_between, Cell, Direction, LatticeFrame};
use crate::percolation::{grid_neighbour, node_id};

/// Vertices whose out-lists have been read. Membership never shrinks.
#[derive(Debug, Clone, PartialEq)]
pub struct ForbiddenSet {
    member: HashSet<u32>,
    per_cell: Vec<u32>,
    max_per_cell: u32,
}

impl ForbiddenSet {
    pub fn new(cells: usize) -> Self {
        Self {
            member: HashSet::new(),
            per_cell: vec![0; cells],
            max_per_cell: 0,
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.member.contains(&(v as u32))
    }

    /// Returns whether `v` was newly added.
    pub fn insert(&mut self, v: usize, cell_id: usize) -> bool {
        if !self.member.insert(v as u32) {
            return false;
        }
        self.per_cell[cell_id] += 1;
        self.max_per_cell = self.max_per_cell.max(self.per_cell[cell_id]);
        true
    }

    pub fn len(&self) -> usize {
        self.member.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member.is_empty()
    }

    pub fn count_in_cell(&self, cell_id: usize) -> u32 {
        self.per_cell[cell_id]
    }

    pub fn max_per_cell(&self) -> u32 {
        self.max_per_cell
    }

    pub fn members(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.member.iter().copied().collect();
        v.sort_unstable();
        v
    }
}

/// `κ^{2k²}`, the cap on forbidden vertices per cell.
pub fn forbidden_cap(kappa: u32, k: usize) -> f64 {
    (kappa as f64).powf(2.0 * (k * k) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TestState {
    Untested,
    Open,
    Closed,
}

/// Node and oriented-link states of the exploration.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialGridConfig {
    m: usize,
    nodes: Vec<TestState>,
    links: Vec<TestState>,
    x: Vec<Option<u32>>,
}

impl PartialGridConfig {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            nodes: vec![TestState::Untested; m * m],
            links: vec![TestState::Untested; 4 * m * m],
            x: vec![None; m * m],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn node(&self, u: Cell) -> TestState {
        self.nodes[node_id(self.m, u)]
    }

    pub fn set_node(&mut self, u: Cell, s: TestState) {
        let i = node_id(self.m, u);
        self.nodes[i] = s;
    }

    /// State of the oriented link leaving `u` towards `dir`.
    pub fn link(&self, u: Cell, dir: Direction) -> TestState {
        self.links[4 * node_id(self.m, u) + dir.index()]
    }

    pub fn set_link(&mut self, u: Cell, dir: Direction, s: TestState) {
        let i = 4 * node_id(self.m, u) + dir.index();
        self.links[i] = s;
    }

    pub fn tested(&self, u: Cell, dir: Direction) -> bool {
        self.link(u, dir) != TestState::Untested
    }

    pub fn x(&self, u: Cell) -> Option<usize> {
        self.x[node_id(self.m, u)].map(|v| v as usize)
    }

    fn set_x(&mut self, u: Cell, v: usize) {
        let i = node_id(self.m, u);
        debug_assert!(self.x[i].is_none());
        self.x[i] = Some(v as u32);
    }

    pub fn nodes_open(&self) -> usize {
        self.nodes.iter().filter(|&&s| s == TestState::Open).count()
    }

    pub fn links_open(&self) -> usize {
        self.links.iter().filter(|&&s| s == TestState::Open).count()
    }

    /// `x,y,state,x_u` per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,state,x_u")?;
        for i in 0..self.m {
            for j in 0..self.m {
                let s = match self.node((i, j)) {
                    TestState::Untested => "untested",
                    TestState::Open => "open",
                    TestState::Closed => "closed",
                };
                let x = self.x((i, j)).map(|v| v.to_string()).unwrap_or_default();
                writeln!(w, "{i},{j},{s},{x}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeEvent {
    pub success: bool,
    /// Points reached from `x` within `k²` hops, sorted.
    pub bush: Vec<u32>,
}

/// Bounded-hop exploration from `x` inside `cell`.
///
/// Paths use at most `k²` arcs and avoid vertices outside the cell or already
/// forbidden. Succeeds when every box of the cell holds at least `threshold`
/// bush points.
pub fn node_event(
    g: &IrrigationDigraph,
    frame: &LatticeFrame,
    cell: Cell,
    x: usize,
    forbidden: &mut ForbiddenSet,
    threshold: usize,
) -> Result<NodeEvent> {
    let geom = frame.geometry();
    if forbidden.contains(x) {
        return Err(Error::Forbidden(x));
    }
    if !frame.in_box(x, geom.central_box(cell)) {
        return Err(Error::NotInCentralBox { vertex: x, cell });
    }
    let hops = geom.k * geom.k;
    let mut visited: HashSet<u32> = HashSet::from([x as u32]);
    let mut bush = vec![x as u32];
    let mut frontier = vec![x as u32];
    let mut expanded = Vec::new();
    for _ in 0..hops {
        if frontier.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for &v in &frontier {
            expanded.push(v);
            for &w in g.out(v as usize) {
                if visited.contains(&w) || frame.cell_of_point(w as usize) != cell || forbidden.contains(w as usize) {
                    continue;
                }
                visited.insert(w);
                bush.push(w);
                next.push(w);
            }
        }
        frontier = next;
    }
    let cid = geom.cell_id(cell);
    for v in expanded {
        forbidden.insert(v as usize, cid);
    }
    bush.sort_unstable();

    let kd = geom.kd();
    let mut counts = vec![0usize; kd * kd];
    for &v in &bush {
        let b = frame.box_of_point(v as usize);
        counts[(b.1 % kd) * kd + b.0 % kd] += 1;
    }
    Ok(NodeEvent {
        success: counts.iter().all(|&c| c >= threshold),
        bush,
    })
}

/// How a link event explores from its sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum LinkMode {
    /// Breadth-first over every out-arc.
    #[default]
    AllPaths,
    /// Follow only each vertex's lowest-index out-neighbour.
    FirstChoice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkEvent {
    pub success: bool,
    /// Central-box points of the target cell that were reached, sorted.
    pub reached: Vec<u32>,
    /// Every target-cell vertex visited, sorted.
    pub visited: Vec<u32>,
    /// Lowest-index reached point.
    pub x: Option<usize>,
}

/// Search from the seed-box points `sources` of `from` into the neighbour
/// towards `dir`, looking for its central box within `hops` arcs.
///
/// Path vertices other than the source must lie in the target cell and
/// outside the forbidden set. Central-box points end a path and are not
/// expanded, so the returned `x` stays usable for the next node event.
#[allow(clippy::too_many_arguments)]
pub fn link_event(
    g: &IrrigationDigraph,
    frame: &LatticeFrame,
    sources: &[usize],
    from: Cell,
    dir: Direction,
    forbidden: &mut ForbiddenSet,
    hops: usize,
    mode: LinkMode,
) -> Result<LinkEvent> {
    let geom = frame.geometry();
    let to = geom.neighbour(from, dir);
    let seed_box = geom.box_at(from, dir.seed_offset(geom.half() as i64));
    if let Some(&y) = sources.iter().find(|&&y| !frame.in_box(y, seed_box)) {
        return Err(invalid("sources", format!("vertex {y} is not in the seed box of {from:?} towards {dir:?}")));
    }
    let central = geom.central_box(to);
    let mut frontier: Vec<u32> = sources.iter().map(|&y| y as u32).collect();
    frontier.sort_unstable();
    frontier.dedup();
    let mut seen: HashSet<u32> = frontier.iter().copied().collect();
    let mut expanded = Vec::new();
    let mut visited = Vec::new();
    let mut reached = Vec::new();
    for _ in 0..hops {
        if frontier.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for &v in &frontier {
            expanded.push(v);
            let out = g.out(v as usize);
            let out = match mode {
                LinkMode::AllPaths => out,
                LinkMode::FirstChoice => &out[..out.len().min(1)],
            };
            for &w in out {
                if seen.contains(&w) || frame.cell_of_point(w as usize) != to || forbidden.contains(w as usize) {
                    continue;
                }
                seen.insert(w);
                visited.push(w);
                if frame.in_box(w as usize, central) {
                    reached.push(w);
                } else {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    for v in expanded {
        let c = geom.cell_id(frame.cell_of_point(v as usize));
        forbidden.insert(v as usize, c);
    }
    reached.sort_unstable();
    visited.sort_unstable();
    Ok(LinkEvent {
        success: !reached.is_empty(),
        x: reached.first().map(|&v| v as usize),
        reached,
        visited,
    })
}

/// [`link_event`] addressed by the target cell; rejects non-adjacent cells.
#[allow(clippy::too_many_arguments)]
pub fn link_event_between(
    g: &IrrigationDigraph,
    frame: &LatticeFrame,
    sources: &[usize],
    from: Cell,
    to: Cell,
    forbidden: &mut ForbiddenSet,
    hops: usize,
    mode: LinkMode,
) -> Result<LinkEvent> {
    let dir = direction_between(frame.geometry(), from, to)?;
    link_event(g, frame, sources, from, dir, forbidden, hops, mode)
}

/// Outcomes the exploration asks for. Implemented over a real graph by
/// [`build_web`], and by scripted sources in tests.
pub trait EventSource {
    /// Lowest-index eligible point of the central box, if any.
    fn activation_point(&mut self, cell: Cell) -> Result<Option<usize>>;
    fn node_event(&mut self, cell: Cell, x: usize) -> Result<bool>;
    /// Distinguished point of `to` on success.
    fn link_event(&mut self, from: Cell, dir: Direction, to: Cell) -> Result<Option<usize>>;
    /// Called after every step; used to record invariants.
    fn after_step(&mut self) {}
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TraceStep {
    Activate { cell: Cell, x: Option<usize> },
    Node { cell: Cell, success: bool },
    Link { from: Cell, dir: Direction, to: Cell, success: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exploration {
    pub partial: PartialGridConfig,
    pub trace: Vec<TraceStep>,
    /// Times each node was activated, by node id.
    pub activations: Vec<u32>,
    /// Nodes closed because their central box had no eligible point.
    pub closed_without_point: Vec<Cell>,
}

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Unseen,
    Active,
    Explored,
}

/// The lexicographic exploration of the `m × m` grid.
///
/// While some node is active, the lowest one is explored: its node event is
/// run and, on success, a link event towards every still unseen neighbour in
/// the order east, north, west, south. A successful link activates its
/// target. With no active node left, the lowest unseen node is activated at
/// its lowest eligible central-box point.
pub fn explore<S: EventSource>(m: usize, src: &mut S) -> Result<Exploration> {
    let mut status = vec![Status::Unseen; m * m];
    let mut active = BTreeSet::new();
    let mut ex = Exploration {
        partial: PartialGridConfig::new(m),
        trace: Vec::new(),
        activations: vec![0; m * m],
        closed_without_point: Vec::new(),
    };
    let cell_of = |id: usize| (id / m, id % m);
    let mut next_unseen = 0;
    loop {
        if let Some(id) = active.pop_first() {
            let u = cell_of(id);
            let x = ex.partial.x(u).expect("active node has a distinguished point");
            let ok = src.node_event(u, x)?;
            ex.trace.push(TraceStep::Node { cell: u, success: ok });
            ex.partial.set_node(u, if ok { TestState::Open } else { TestState::Closed });
            status[id] = Status::Explored;
            src.after_step();
            if !ok {
                continue;
            }
            for dir in Direction::ALL {
                let v = grid_neighbour(m, u, dir);
                let vid = node_id(m, v);
                if status[vid] != Status::Unseen {
                    continue;
                }
                let hit = src.link_event(u, dir, v)?;
                ex.trace.push(TraceStep::Link {
                    from: u,
                    dir,
                    to: v,
                    success: hit.is_some(),
                });
                ex.partial.set_link(u, dir, if hit.is_some() { TestState::Open } else { TestState::Closed });
                if let Some(xv) = hit {
                    status[vid] = Status::Active;
                    active.insert(vid);
                    ex.partial.set_x(v, xv);
                    ex.activations[vid] += 1;
                    ex.trace.push(TraceStep::Activate { cell: v, x: Some(xv) });
                }
                src.after_step();
            }
        } else {
            while next_unseen < m * m && status[next_unseen] != Status::Unseen {
                next_unseen += 1;
            }
            if next_unseen == m * m {
                break;
            }
            let u = cell_of(next_unseen);
            let x = src.activation_point(u)?;
            ex.trace.push(TraceStep::Activate { cell: u, x });
            match x {
                Some(x) => {
                    status[next_unseen] = Status::Active;
                    active.insert(next_unseen);
                    ex.partial.set_x(u, x);
                    ex.activations[next_unseen] += 1;
                }
                None => {
                    status[next_unseen] = Status::Explored;
                    ex.partial.set_node(u, TestState::Closed);
                    ex.closed_without_point.push(u);
                }
            }
            src.after_step();
        }
    }
    Ok(ex)
}

/// `⌈(E ξ)^{k²/2}⌉`, the node-event threshold.
pub fn default_node_threshold(law: &OffspringLaw, k: usize) -> f64 {
    mean_offspring(law).powf((k * k) as f64 / 2.0).ceil()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WebOptions {
    pub threshold: usize,
    pub link_mode: LinkMode,
}

impl WebOptions {
    pub fn new(threshold: usize) -> Self {
        Self {
            threshold,
            link_mode: LinkMode::AllPaths,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WebResult {
    pub m: usize,
    pub threshold: usize,
    pub seed: u64,
    /// Bushes of open nodes plus vertices visited by successful link events.
    pub web: Vec<u32>,
    pub exploration: Exploration,
    pub forbidden: ForbiddenSet,
    /// Web points per global box, indexed by `CellGeometry::box_index`.
    pub box_counts: Vec<u32>,
    /// Every node event's cell and bush, in exploration order.
    pub bushes: Vec<(Cell, Vec<u32>)>,
    /// Forbidden-set size after each exploration step.
    pub forbidden_sizes: Vec<usize>,
}

impl WebResult {
    pub fn partial(&self) -> &PartialGridConfig {
        &self.exploration.partial
    }
}

struct GraphEvents<'a> {
    g: &'a IrrigationDigraph,
    frame: &'a LatticeFrame,
    opts: WebOptions,
    forbidden: ForbiddenSet,
    in_web: HashSet<u32>,
    last_bush: Vec<u32>,
    bushes: Vec<(Cell, Vec<u32>)>,
    forbidden_sizes: Vec<usize>,
}

impl EventSource for GraphEvents<'_> {
    fn activation_point(&mut self, cell: Cell) -> Result<Option<usize>> {
        let c = self.frame.geometry().central_box(cell);
        Ok(self
            .frame
            .points_in_box(c)
            .iter()
            .map(|&v| v as usize)
            .filter(|&v| !self.forbidden.contains(v))
            .min())
    }

    fn node_event(&mut self, cell: Cell, x: usize) -> Result<bool> {
        let ev = node_event(self.g, self.frame, cell, x, &mut self.forbidden, self.opts.threshold)?;
        if ev.success {
            self.in_web.extend(ev.bush.iter().copied());
        }
        self.bushes.push((cell, ev.bush.clone()));
        self.last_bush = ev.bush;
        Ok(ev.success)
    }

    fn link_event(&mut self, from: Cell, dir: Direction, _to: Cell) -> Result<Option<usize>> {
        let geom = self.frame.geometry();
        let seed_box = geom.box_at(from, dir.seed_offset(geom.half() as i64));
        let sources: Vec<usize> = self
            .last_bush
            .iter()
            .map(|&v| v as usize)
            .filter(|&v| self.frame.in_box(v, seed_box))
            .collect();
        let hops = geom.kd().div_ceil(2);
        let ev = link_event(self.g, self.frame, &sources, from, dir, &mut self.forbidden, hops, self.opts.link_mode)?;
        if ev.success {
            self.in_web.extend(ev.visited.iter().copied());
        }
        Ok(ev.x)
    }

    fn after_step(&mut self) {
        self.forbidden_sizes.push(self.forbidden.len());
    }
}

/// Run the exploration over a sampled graph.
pub fn build_web(g: &IrrigationDigraph, frame: &LatticeFrame, opts: WebOptions, seed: u64) -> Result<WebResult> {
    if g.n() != frame.n() {
        return Err(invalid("frame", format!("{} points but graph has {}", frame.n(), g.n())));
    }
    let geom = frame.geometry();
    let m = geom.m;
    let mut src = GraphEvents {
        g,
        frame,
        opts,
        forbidden: ForbiddenSet::new(m * m),
        in_web: HashSet::new(),
        last_bush: Vec::new(),
        bushes: Vec::new(),
        forbidden_sizes: Vec::new(),
    };
    let exploration = explore(m, &mut src)?;
    let mut web: Vec<u32> = src.in_web.into_iter().collect();
    web.sort_unstable();
    let w = geom.boxes_per_axis();
    let mut box_counts = vec![0u32; w * w];
    for &v in &web {
        box_counts[geom.box_index(frame.box_of_point(v as usize))] += 1;
    }
    Ok(WebResult {
        m,
        threshold: opts.threshold,
        seed,
        web,
        exploration,
        forbidden: src.forbidden,
        box_counts,
        bushes: src.bushes,
        forbidden_sizes: src.forbidden_sizes,
    })
}

/// Fraction of boxes holding at least `threshold` web points.
pub fn web_coverage(w: &WebResult, threshold: usize) -> f64 {
    if w.box_counts.is_empty() {
        return 0.0;
    }
    let hit = w.box_counts.iter().filter(|&&c| c as usize >= threshold).count();
    hit as f64 / w.box_counts.len() as f64
}

/// Fraction of vertices in the component holding most of the web.
pub fn hookup_fraction(g: &IrrigationDigraph, w: &WebResult) -> Result<f64> {
    if w.web.is_empty() {
        return Err(Error::Empty("web"));
    }
    let census = components(&undirected_view(g));
    let mut hits = vec![0usize; census.sizes.len()];
    for &v in &w.web {
        hits[census.component_of[v as usize] as usize] += 1;
    }
    // lowest component id wins ties
    let best = (0..hits.len()).max_by_key(|&c| (hits[c], std::cmp::Reverse(c))).unwrap_or(0);
    Ok(census.sizes[best] as f64 / g.n() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WebRow {
    pub m: usize,
    pub nodes_open: usize,
    pub links_open: usize,
    pub web_size: usize,
    pub coverage: f64,
    pub hookup_fraction: f64,
    pub max_forbidden_per_cell: u32,
}

impl WebRow {
    pub const HEADER: [&'static str; 7] = [
        "m",
        "nodes_open",
        "links_open",
        "web_size",
        "coverage",
        "hookup_fraction",
        "max_forbidden_per_cell",
    ];

    pub fn new(g: &IrrigationDigraph, w: &WebResult, coverage_threshold: usize) -> Self {
        Self {
            m: w.m,
            nodes_open: w.partial().nodes_open(),
            links_open: w.partial().links_open(),
            web_size: w.web.len(),
            coverage: web_coverage(w, coverage_threshold),
            hookup_fraction: hookup_fraction(g, w).unwrap_or(0.0),
            max_forbidden_per_cell: w.forbidden.max_per_cell(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TorusPoints;
    use std::collections::HashMap;

    #[test]
    fn forbidden_set_counts() {
        let mut f = ForbiddenSet::new(4);
        assert!(f.insert(3, 1));
        assert!(!f.insert(3, 1));
        f.insert(5, 1);
        f.insert(7, 2);
        assert_eq!(f.count_in_cell(1), 2);
        assert_eq!(f.max_per_cell(), 2);
        assert_eq!(f.members(), vec![3, 5, 7]);
        assert_eq!(forbidden_cap(2, 3), 262_144.0);
    }

    #[test]
    fn threshold_formula() {
        let law: OffspringLaw = "2:1".parse().unwrap();
        assert_eq!(default_node_threshold(&law, 3), 23.0);
        let law: OffspringLaw = "1:0.5,2:0.5".parse().unwrap();
        assert_eq!(default_node_threshold(&law, 2), 3.0);
    }

    struct Scripted {
        nodes: HashMap<Cell, bool>,
        links: HashMap<(Cell, Direction), bool>,
        no_point: Vec<Cell>,
    }

    impl EventSource for Scripted {
        fn activation_point(&mut self, cell: Cell) -> Result<Option<usize>> {
            Ok((!self.no_point.contains(&cell)).then_some(100 + cell.0 * 3 + cell.1))
        }
        fn node_event(&mut self, cell: Cell, _x: usize) -> Result<bool> {
            Ok(self.nodes[&cell])
        }
        fn link_event(&mut self, from: Cell, dir: Direction, to: Cell) -> Result<Option<usize>> {
            Ok(self.links[&(from, dir)].then_some(200 + to.0 * 3 + to.1))
        }
    }

    #[test]
    fn scripted_three_by_three_trace() {
        use Direction::*;
        use TraceStep::*;
        let nodes = HashMap::from([
            ((0, 0), true),
            ((0, 2), false),
            ((1, 0), true),
            ((2, 0), true),
            ((2, 1), false),
            ((1, 1), true),
            ((1, 2), true),
            ((2, 2), true),
        ]);
        let links = HashMap::from([
            (((0, 0), East), true),
            (((0, 0), North), false),
            (((0, 0), West), false),
            (((0, 0), South), true),
            (((1, 0), East), true),
            (((1, 0), North), false),
            (((1, 0), South), false),
            (((2, 0), North), true),
            (((2, 0), South), false),
            (((1, 1), North), true),
            (((1, 2), East), false),
        ]);
        let mut src = Scripted {
            nodes,
            links,
            no_point: vec![(0, 1)],
        };
        let ex = explore(3, &mut src).unwrap();
        let expected = vec![
            Activate { cell: (0, 0), x: Some(100) },
            Node { cell: (0, 0), success: true },
            Link { from: (0, 0), dir: East, to: (1, 0), success: true },
            Activate { cell: (1, 0), x: Some(203) },
            Link { from: (0, 0), dir: North, to: (0, 1), success: false },
            Link { from: (0, 0), dir: West, to: (2, 0), success: false },
            Link { from: (0, 0), dir: South, to: (0, 2), success: true },
            Activate { cell: (0, 2), x: Some(202) },
            Node { cell: (0, 2), success: false },
            Node { cell: (1, 0), success: true },
            Link { from: (1, 0), dir: East, to: (2, 0), success: true },
            Activate { cell: (2, 0), x: Some(206) },
            Link { from: (1, 0), dir: North, to: (1, 1), success: false },
            Link { from: (1, 0), dir: South, to: (1, 2), success: false },
            Node { cell: (2, 0), success: true },
            Link { from: (2, 0), dir: North, to: (2, 1), success: true },
            Activate { cell: (2, 1), x: Some(207) },
            Link { from: (2, 0), dir: South, to: (2, 2), success: false },
            Node { cell: (2, 1), success: false },
            Activate { cell: (0, 1), x: None },
            Activate { cell: (1, 1), x: Some(104) },
            Node { cell: (1, 1), success: true },
            Link { from: (1, 1), dir: North, to: (1, 2), success: true },
            Activate { cell: (1, 2), x: Some(205) },
            Node { cell: (1, 2), success: true },
            Link { from: (1, 2), dir: East, to: (2, 2), success: false },
            Activate { cell: (2, 2), x: Some(108) },
            Node { cell: (2, 2), success: true },
        ];
        assert_eq!(ex.trace, expected);
        assert_eq!(ex.closed_without_point, vec![(0, 1)]);
        assert!(ex.activations.iter().all(|&a| a <= 1));
        assert_eq!(ex.activations.iter().sum::<u32>(), 8);
        assert_eq!(ex.partial.nodes_open(), 6);
        assert_eq!(ex.partial.links_open(), 5);
        assert_eq!(ex.partial.node((0, 1)), TestState::Closed);
        assert!(!ex.partial.tested((0, 2), East));
    }

    /// One cell of 3×3 boxes (k = 3, d = 1, m = 1); points at box centres.
    fn single_cell_frame(per_box: &[(usize, usize)]) -> (TorusPoints, LatticeFrame) {
        let coords: Vec<[f64; 2]> = per_box
            .iter()
            .map(|&(i, j)| [(i as f64 + 0.5) / 3.0, (j as f64 + 0.5) / 3.0])
            .collect();
        let pts = TorusPoints::from_coords(coords, 0).unwrap();
        let frame = LatticeFrame::new(&pts, 0.7, 3, 1).unwrap();
        (pts, frame)
    }

    #[test]
    fn node_event_reaches_every_box_on_a_chain() {
        // one point per box, chain 0 → 1 → … → 8 from the central box (1, 1)
        let mut order: Vec<(usize, usize)> = vec![(1, 1)];
        for j in 0..3 {
            for i in 0..3 {
                if (i, j) != (1, 1) {
                    order.push((i, j));
                }
            }
        }
        let (_, frame) = single_cell_frame(&order);
        assert_eq!(frame.geometry().m, 1);
        let lists: Vec<Vec<usize>> = (0..9).map(|v| if v < 8 { vec![v + 1] } else { vec![] }).collect();
        let g = IrrigationDigraph::from_out_lists(lists).unwrap();
        let mut f = ForbiddenSet::new(1);
        let ev = node_event(&g, &frame, (0, 0), 0, &mut f, 1).unwrap();
        assert!(ev.success);
        assert_eq!(ev.bush.len(), 9);
        assert_eq!(f.len(), 9);
        assert!(matches!(node_event(&g, &frame, (0, 0), 0, &mut f, 1), Err(Error::Forbidden(0))));
        assert!(matches!(
            node_event(&g, &frame, (0, 0), 3, &mut ForbiddenSet::new(1), 1),
            Err(Error::NotInCentralBox { .. })
        ));
        // two extra central points push box (2,2) to depth 10 > k²
        let mut order2 = order.clone();
        order2.insert(1, (1, 1));
        order2.insert(1, (1, 1));
        let (_, frame) = single_cell_frame(&order2);
        let lists: Vec<Vec<usize>> = (0..11).map(|v| if v < 10 { vec![v + 1] } else { vec![] }).collect();
        let g = IrrigationDigraph::from_out_lists(lists).unwrap();
        let ev = node_event(&g, &frame, (0, 0), 0, &mut ForbiddenSet::new(1), 1).unwrap();
        assert!(!ev.success);
        assert_eq!(ev.bush.len(), 10);
    }

    #[test]
    fn node_event_fails_without_out_arcs() {
        let (_, frame) = single_cell_frame(&[(1, 1), (0, 0), (2, 2)]);
        let g = IrrigationDigraph::from_out_lists(vec![vec![], vec![], vec![]]).unwrap();
        let ev = node_event(&g, &frame, (0, 0), 0, &mut ForbiddenSet::new(1), 1).unwrap();
        assert!(!ev.success);
        assert_eq!(ev.bush, vec![0]);
        let ev = node_event(&g, &frame, (0, 0), 0, &mut ForbiddenSet::new(1), 0).unwrap();
        assert!(ev.success);
    }

    #[test]
    fn node_event_matches_path_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for trial in 0..40 {
            // 10 points in random boxes, point 0 central
            let mut boxes = vec![(1usize, 1usize)];
            for _ in 1..10 {
                boxes.push((rng.random_range(0..3), rng.random_range(0..3)));
            }
            let coords: Vec<[f64; 2]> = boxes
                .iter()
                .map(|&(i, j)| [(i as f64 + rng.random::<f64>()) / 3.0, (j as f64 + rng.random::<f64>()) / 3.0])
                .collect();
            let pts = TorusPoints::from_coords(coords, 0).unwrap();
            let frame = LatticeFrame::new(&pts, 0.7, 3, 1).unwrap();
            let lists: Vec<Vec<usize>> = (0..10)
                .map(|v| {
                    let mut l: Vec<usize> = (0..10).filter(|&w| w != v && rng.random::<f64>() < 0.15).collect();
                    l.truncate(2);
                    l
                })
                .collect();
            let g = IrrigationDigraph::from_out_lists(lists.clone()).unwrap();
            let mut pre = ForbiddenSet::new(1);
            let banned: Vec<usize> = (1..10).filter(|_| rng.random::<f64>() < 0.2).collect();
            for &b in &banned {
                pre.insert(b, 0);
            }
            let mut f = pre.clone();
            let ev = node_event(&g, &frame, (0, 0), 0, &mut f, 1).unwrap();

            // enumerate every simple path of ≤ k² = 9 arcs avoiding banned vertices
            let mut oracle = BTreeSet::from([0usize]);
            fn walk(v: usize, depth: usize, lists: &[Vec<usize>], banned: &[usize], path: &mut Vec<usize>, out: &mut BTreeSet<usize>) {
                if depth == 9 {
                    return;
                }
                for &w in &lists[v] {
                    if banned.contains(&w) || path.contains(&w) {
                        continue;
                    }
                    out.insert(w);
                    path.push(w);
                    walk(w, depth + 1, lists, banned, path, out);
                    path.pop();
                }
            }
            walk(0, 0, &lists, &banned, &mut vec![0], &mut oracle);
            let got: BTreeSet<usize> = ev.bush.iter().map(|&v| v as usize).collect();
            assert_eq!(got, oracle, "trial {trial}");
        }
    }

    /// k = 3, d = 1, r = 0.49: m = 2, boxes of side 1/6, central box of cell
    /// (0,0) is global (1,1) and its east seed box global (2,1).
    fn two_cell_frame(coords: Vec<[f64; 2]>) -> LatticeFrame {
        let pts = TorusPoints::from_coords(coords, 0).unwrap();
        LatticeFrame::new(&pts, 0.49, 3, 1).unwrap()
    }

    #[test]
    fn link_event_straight_chain() {
        let frame = two_cell_frame(vec![[0.4, 0.25], [0.6, 0.25], [0.75, 0.25]]);
        let geom = frame.geometry();
        assert_eq!(geom.m, 2);
        let seed_box = geom.box_at((0, 0), Direction::East.seed_offset(geom.half() as i64));
        assert!(frame.in_box(0, seed_box), "{seed_box:?} vs {:?}", frame.box_of_point(0));
        assert!(frame.in_box(2, geom.central_box((1, 0))));
        let g = IrrigationDigraph::from_out_lists(vec![vec![1], vec![2], vec![]]).unwrap();
        let mut f = ForbiddenSet::new(4);
        let ev = link_event(&g, &frame, &[0], (0, 0), Direction::East, &mut f, 2, LinkMode::AllPaths).unwrap();
        assert!(ev.success);
        assert_eq!(ev.x, Some(2));
        // the central-box endpoint is not expanded
        assert!(!f.contains(2) && f.contains(0) && f.contains(1));

        let ev = link_event(&g, &frame, &[], (0, 0), Direction::East, &mut ForbiddenSet::new(4), 2, LinkMode::AllPaths).unwrap();
        assert!(!ev.success && ev.x.is_none());

        // one hop is not enough
        let ev = link_event(&g, &frame, &[0], (0, 0), Direction::East, &mut ForbiddenSet::new(4), 1, LinkMode::AllPaths).unwrap();
        assert!(!ev.success);

        // a forbidden interior vertex blocks the path
        let mut f = ForbiddenSet::new(4);
        f.insert(1, 2);
        let ev = link_event(&g, &frame, &[0], (0, 0), Direction::East, &mut f, 2, LinkMode::AllPaths).unwrap();
        assert!(!ev.success);
    }

    #[test]
    fn link_event_rejects_bad_inputs() {
        let frame = two_cell_frame(vec![[0.4, 0.25], [0.6, 0.25], [0.1, 0.1]]);
        let g = IrrigationDigraph::from_out_lists(vec![vec![1], vec![], vec![]]).unwrap();
        let mut f = ForbiddenSet::new(4);
        let err = link_event(&g, &frame, &[2], (0, 0), Direction::East, &mut f, 2, LinkMode::AllPaths);
        assert!(err.is_err());
        let err = link_event_between(&g, &frame, &[0], (0, 0), (0, 0), &mut f, 2, LinkMode::AllPaths);
        assert!(matches!(err, Err(Error::NotAdjacent { .. })));
    }

    #[test]
    fn first_choice_follows_lowest_arc() {
        // 0 in the seed box; 1 lies outside the target cell, 2 leads to the central box via 3
        let frame = two_cell_frame(vec![[0.4, 0.25], [0.4, 0.05], [0.6, 0.25], [0.75, 0.25]]);
        let g = IrrigationDigraph::from_out_lists(vec![vec![1, 2], vec![], vec![3], vec![]]).unwrap();
        let all = link_event(&g, &frame, &[0], (0, 0), Direction::East, &mut ForbiddenSet::new(4), 2, LinkMode::AllPaths).unwrap();
        assert!(all.success);
        let first =
            link_event(&g, &frame, &[0], (0, 0), Direction::East, &mut ForbiddenSet::new(4), 2, LinkMode::FirstChoice).unwrap();
        assert!(!first.success);
    }

    #[test]
    fn coverage_and_hookup() {
        let (_, frame) = single_cell_frame(&[(1, 1), (0, 0), (1, 0), (2, 0), (2, 1)]);
        let g = IrrigationDigraph::from_out_lists(vec![vec![1, 2], vec![], vec![], vec![4], vec![]]).unwrap();
        let w = build_web(&g, &frame, WebOptions::new(0), 1).unwrap();
        assert_eq!(w.m, 1);
        assert_eq!(w.partial().nodes_open(), 1);
        assert_eq!(w.web, vec![0, 1, 2]);
        assert_eq!(web_coverage(&w, 1), 3.0 / 9.0);
        assert_eq!(web_coverage(&w, 0), 1.0);
        assert!(web_coverage(&w, 2) <= web_coverage(&w, 1));
        assert!((hookup_fraction(&g, &w).unwrap() - 0.6).abs() < 1e-12);
        let mut empty = w.clone();
        empty.web.clear();
        empty.box_counts.iter_mut().for_each(|c| *c = 0);
        assert_eq!(web_coverage(&empty, 1), 0.0);
        assert!(hookup_fraction(&g, &empty).is_err());
    }
}
