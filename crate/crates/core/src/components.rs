//! Union-find, component census, and statistics of functional (`xi ≡ 1`) digraphs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::irrigation::{IrrigationDigraph, UndirectedGraph};

/// Disjoint sets with path compression and union by size.
///
/// Ties in size go to the smaller root id, so the forest shape depends only
/// on the sequence of unions.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        while self.parent[x] as usize != root {
            let next = self.parent[x] as usize;
            self.parent[x] = root as u32;
            x = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns false if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (sa, sb) = (self.size[ra], self.size[rb]);
        let (root, child) = if sa > sb || (sa == sb && ra < rb) {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[child] = root as u32;
        self.size[root] += self.size[child];
        true
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }
}

/// Connected components of an undirected graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentCensus {
    /// Component id of each vertex; ids are numbered by smallest member.
    pub component_of: Vec<u32>,
    /// Sizes indexed by component id.
    pub size_of: Vec<usize>,
    /// Sizes in non-increasing order.
    pub sizes: Vec<usize>,
}

impl ComponentCensus {
    pub fn from_union_find(uf: &mut UnionFind) -> Self {
        let n = uf.len();
        let mut root_id = vec![u32::MAX; n];
        let mut component_of = Vec::with_capacity(n);
        let mut size_of = Vec::new();
        for v in 0..n {
            let r = uf.find(v);
            if root_id[r] == u32::MAX {
                root_id[r] = size_of.len() as u32;
                size_of.push(0);
            }
            let id = root_id[r];
            size_of[id as usize] += 1;
            component_of.push(id);
        }
        let mut sizes = size_of.clone();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        Self {
            component_of,
            size_of,
            sizes,
        }
    }

    pub fn n(&self) -> usize {
        self.component_of.len()
    }

    pub fn c1(&self) -> usize {
        self.sizes.first().copied().unwrap_or(0)
    }

    pub fn c2(&self) -> usize {
        self.sizes.get(1).copied().unwrap_or(0)
    }

    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    /// Id of a largest component (smallest id among ties).
    pub fn largest_id(&self) -> Option<u32> {
        let c1 = self.c1();
        self.size_of.iter().position(|&s| s == c1).map(|i| i as u32)
    }
}

pub fn components(adj: &UndirectedGraph) -> ComponentCensus {
    components_from_edges(adj.n(), adj.edges())
}

pub fn components_from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> ComponentCensus {
    let mut uf = UnionFind::new(n);
    for (a, b) in edges {
        uf.union(a, b);
    }
    ComponentCensus::from_union_find(&mut uf)
}

/// CSV summary row: `n, edges, C1, C2, components, C1_frac`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensusRow {
    pub n: usize,
    pub edges: usize,
    pub c1: usize,
    pub c2: usize,
    pub components: usize,
    pub c1_frac: f64,
}

impl CensusRow {
    pub const HEADER: [&'static str; 6] = ["n", "edges", "C1", "C2", "components", "C1_frac"];

    pub fn new(census: &ComponentCensus, edges: usize) -> Self {
        Self {
            n: census.n(),
            edges,
            c1: census.c1(),
            c2: census.c2(),
            components: census.component_count(),
            c1_frac: census.c1() as f64 / census.n() as f64,
        }
    }
}

/// Lengths of the maximal first-choice paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalPaths {
    /// `lengths[i]` = number of distinct vertices on the path from `i`.
    pub lengths: Vec<usize>,
    pub max: usize,
}

fn first_choice(g: &IrrigationDigraph, u: usize) -> Option<usize> {
    g.out(u).first().map(|&v| v as usize)
}

/// Follows the first out-neighbour from every vertex until a vertex repeats
/// or the out-list is empty, counting distinct vertices. Linear time.
pub fn functional_paths(g: &IrrigationDigraph) -> FunctionalPaths {
    const UNSEEN: u8 = 0;
    const ON_STACK: u8 = 1;
    const DONE: u8 = 2;
    let n = g.n();
    let mut state = vec![UNSEEN; n];
    let mut len = vec![0usize; n];
    let mut pos = vec![0usize; n];
    let mut stack: Vec<usize> = Vec::new();
    for s in 0..n {
        if state[s] != UNSEEN {
            continue;
        }
        let mut v = s;
        loop {
            state[v] = ON_STACK;
            pos[v] = stack.len();
            stack.push(v);
            match first_choice(g, v) {
                None => {
                    len[v] = 1;
                    state[v] = DONE;
                    stack.pop();
                    break;
                }
                Some(w) if state[w] == UNSEEN => v = w,
                Some(w) if state[w] == ON_STACK => {
                    let cycle = stack.split_off(pos[w]);
                    for &c in &cycle {
                        len[c] = cycle.len();
                        state[c] = DONE;
                    }
                    break;
                }
                Some(_) => break,
            }
        }
        while let Some(v) = stack.pop() {
            let w = first_choice(g, v).expect("tail vertices have a successor");
            len[v] = len[w] + 1;
            state[v] = DONE;
        }
    }
    let max = len.iter().copied().max().unwrap_or(0);
    FunctionalPaths { lengths: len, max }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingComponent {
    pub vertices: usize,
    /// Directed arcs inside the component.
    pub arcs: usize,
    pub has_cycle: bool,
    pub cyclic_vertices: usize,
}

impl MappingComponent {
    /// Vertices hanging in trees off the cycle (all vertices for a tree).
    pub fn tree_vertices(&self) -> usize {
        self.vertices - self.cyclic_vertices
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingCensus {
    pub components: Vec<MappingComponent>,
    pub cycles: usize,
    pub cyclic_vertices: usize,
}

/// Cycle structure of a digraph with out-degrees at most one.
pub fn mapping_census(g: &IrrigationDigraph) -> Result<MappingCensus> {
    let n = g.n();
    if let Some(u) = (0..n).find(|&u| g.out(u).len() > 1) {
        return Err(Error::NotFunctional {
            vertex: u,
            degree: g.out(u).len(),
        });
    }
    let census = components_from_edges(n, g.arcs());
    let k = census.component_count();
    let mut comps: Vec<MappingComponent> = census
        .size_of
        .iter()
        .map(|&s| MappingComponent {
            vertices: s,
            arcs: 0,
            has_cycle: false,
            cyclic_vertices: 0,
        })
        .collect();
    for (u, _) in g.arcs() {
        comps[census.component_of[u] as usize].arcs += 1;
    }

    // colour-walk cycle detection on the partial map
    let mut colour = vec![0u32; n];
    for s in 0..n {
        if colour[s] != 0 {
            continue;
        }
        let tag = s as u32 + 1;
        let mut v = s;
        while colour[v] == 0 {
            colour[v] = tag;
            match first_choice(g, v) {
                Some(w) => v = w,
                None => break,
            }
        }
        if colour[v] == tag && first_choice(g, v).is_some() {
            // v lies on a new cycle
            let comp = &mut comps[census.component_of[v] as usize];
            comp.has_cycle = true;
            let start = v;
            loop {
                comp.cyclic_vertices += 1;
                v = first_choice(g, v).unwrap();
                if v == start {
                    break;
                }
            }
        }
    }
    debug_assert_eq!(comps.len(), k);
    let cycles = comps.iter().filter(|c| c.has_cycle).count();
    let cyclic_vertices = comps.iter().map(|c| c.cyclic_vertices).sum();
    Ok(MappingCensus {
        components: comps,
        cycles,
        cyclic_vertices,
    })
}
