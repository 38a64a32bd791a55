//! Mixed site/bond percolation on the `m × m` torus grid.
//!
//! Node `(x, y)` has id `x·m + y`; each node owns the link to its east and to
//! its north neighbour, so link `2·id` is horizontal and `2·id + 1` vertical.

use rand::Rng;
use serde::Serialize;

use crate::components::UnionFind;
use crate::error::{invalid, Error, Result};
use crate::lattice::Direction;
use crate::rng::{domain, StreamFamily};
use crate::web::{PartialGridConfig, TestState};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercConfig {
    m: usize,
    sites: Vec<bool>,
    links: Vec<bool>,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
}

pub fn node_id(m: usize, u: (usize, usize)) -> usize {
    u.0 * m + u.1
}

pub fn grid_neighbour(m: usize, u: (usize, usize), dir: Direction) -> (usize, usize) {
    match dir {
        Direction::East => ((u.0 + 1) % m, u.1),
        Direction::North => (u.0, (u.1 + 1) % m),
        Direction::West => ((u.0 + m - 1) % m, u.1),
        Direction::South => (u.0, (u.1 + m - 1) % m),
    }
}

/// Index of the unoriented link leaving `u` in direction `dir`.
pub fn link_index(m: usize, u: (usize, usize), dir: Direction) -> usize {
    match dir {
        Direction::East => 2 * node_id(m, u),
        Direction::North => 2 * node_id(m, u) + 1,
        Direction::West => 2 * node_id(m, grid_neighbour(m, u, dir)),
        Direction::South => 2 * node_id(m, grid_neighbour(m, u, dir)) + 1,
    }
}

impl PercConfig {
    pub fn from_states(m: usize, sites: Vec<bool>, links: Vec<bool>) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m", "must be positive"));
        }
        if sites.len() != m * m || links.len() != 2 * m * m {
            return Err(invalid("states", format!("need {} sites and {} links", m * m, 2 * m * m)));
        }
        Ok(Self {
            m,
            sites,
            links,
            p: f64::NAN,
            q: f64::NAN,
            seed: 0,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sites(&self) -> &[bool] {
        &self.sites
    }

    pub fn links(&self) -> &[bool] {
        &self.links
    }

    pub fn site(&self, u: (usize, usize)) -> bool {
        self.sites[node_id(self.m, u)]
    }

    pub fn link(&self, u: (usize, usize), dir: Direction) -> bool {
        self.links[link_index(self.m, u, dir)]
    }

    pub fn set_site(&mut self, u: (usize, usize), open: bool) {
        self.sites[node_id(self.m, u)] = open;
    }

    pub fn set_link(&mut self, u: (usize, usize), dir: Direction, open: bool) {
        let i = link_index(self.m, u, dir);
        self.links[i] = open;
    }

    pub fn open_sites(&self) -> usize {
        self.sites.iter().filter(|&&s| s).count()
    }

    pub fn open_links(&self) -> usize {
        self.links.iter().filter(|&&s| s).count()
    }
}

fn check_prob(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(name, format!("{p} not in [0,1]")))
    }
}

/// Mixed configuration together with the site configuration it dominates.
///
/// Every link is split into two half-links, one per endpoint, each open with
/// probability `√q`; a link is open when both halves are. The site
/// configuration opens a node when the node and its four half-links are open,
/// which happens with probability `p·q²`, independently across nodes. Any
/// open site cluster is then an open bond cluster of the mixed configuration.
pub fn sample_coupled(m: usize, p: f64, q: f64, seed: u64) -> Result<(PercConfig, PercConfig)> {
    if m < 2 {
        return Err(invalid("m", format!("{m} < 2")));
    }
    check_prob("p", p)?;
    check_prob("q", q)?;
    let sq = q.sqrt();
    let fam = StreamFamily::new(seed, domain::MIXED_PERC);
    let mut site_open = vec![false; m * m];
    let mut halves = vec![[false; 4]; m * m];
    for id in 0..m * m {
        let mut rng = fam.stream(id as u64);
        site_open[id] = rng.random::<f64>() < p;
        for h in halves[id].iter_mut() {
            *h = rng.random::<f64>() < sq;
        }
    }
    let mut links = vec![false; 2 * m * m];
    for x in 0..m {
        for y in 0..m {
            let u = (x, y);
            for dir in [Direction::East, Direction::North] {
                let v = grid_neighbour(m, u, dir);
                links[link_index(m, u, dir)] =
                    halves[node_id(m, u)][dir.index()] && halves[node_id(m, v)][dir.opposite().index()];
            }
        }
    }
    let reduced: Vec<bool> = (0..m * m).map(|id| site_open[id] && halves[id].iter().all(|&h| h)).collect();
    let mixed = PercConfig {
        m,
        sites: site_open,
        links,
        p,
        q,
        seed,
    };
    let site = PercConfig {
        m,
        sites: reduced,
        links: vec![true; 2 * m * m],
        p: site_equivalent_prob(p, q),
        q: 1.0,
        seed,
    };
    Ok((mixed, site))
}

/// Independent open sites with probability `p`, open links with probability `q`.
pub fn sample_mixed(m: usize, p: f64, q: f64, seed: u64) -> Result<PercConfig> {
    Ok(sample_coupled(m, p, q, seed)?.0)
}

/// Site percolation at `r` (every link open).
pub fn sample_site(m: usize, r: f64, seed: u64) -> Result<PercConfig> {
    sample_mixed(m, r, 1.0, seed)
}

pub fn site_equivalent_prob(p: f64, q: f64) -> f64 {
    p * q * q
}

/// Size of the largest cluster of open sites joined by open links.
pub fn largest_bond_component(cfg: &PercConfig) -> usize {
    let m = cfg.m;
    let mut uf = UnionFind::new(m * m);
    for x in 0..m {
        for y in 0..m {
            let u = (x, y);
            if !cfg.site(u) {
                continue;
            }
            for dir in [Direction::East, Direction::North] {
                let v = grid_neighbour(m, u, dir);
                if cfg.link(u, dir) && cfg.site(v) {
                    uf.union(node_id(m, u), node_id(m, v));
                }
            }
        }
    }
    (0..m * m)
        .filter(|&id| cfg.sites[id])
        .map(|id| uf.set_size(id))
        .max()
        .unwrap_or(0)
}

/// Fill the untested orientations of a partial configuration.
///
/// Untested oriented links are open with probability `1 - η/2`; an unoriented
/// link is open when both of its orientations are.
pub fn complete_partial(pg: &PartialGridConfig, eta: f64, seed: u64) -> Result<PercConfig> {
    if !(0.0..=2.0).contains(&eta) {
        return Err(invalid("eta", format!("{eta} not in [0,2]")));
    }
    let m = pg.m();
    let keep = 1.0 - eta / 2.0;
    let fam = StreamFamily::new(seed, domain::COMPLETION);
    let mut sites = vec![false; m * m];
    let mut oriented = vec![[false; 4]; m * m];
    for x in 0..m {
        for y in 0..m {
            let u = (x, y);
            let id = node_id(m, u);
            sites[id] = match pg.node(u) {
                TestState::Open => true,
                TestState::Closed => false,
                TestState::Untested => return Err(Error::UntestedNode(u)),
            };
            let mut rng = fam.stream(id as u64);
            for dir in Direction::ALL {
                // always draw, so the stream does not depend on which links were tested
                let fresh = rng.random::<f64>() < keep;
                oriented[id][dir.index()] = match pg.link(u, dir) {
                    TestState::Open => true,
                    TestState::Closed => false,
                    TestState::Untested => fresh,
                };
            }
        }
    }
    let mut links = vec![false; 2 * m * m];
    for x in 0..m {
        for y in 0..m {
            let u = (x, y);
            for dir in [Direction::East, Direction::North] {
                let v = grid_neighbour(m, u, dir);
                links[link_index(m, u, dir)] =
                    oriented[node_id(m, u)][dir.index()] && oriented[node_id(m, v)][dir.opposite().index()];
            }
        }
    }
    Ok(PercConfig {
        m,
        sites,
        links,
        p: 1.0 - eta,
        q: keep * keep,
        seed,
    })
}

/// One row of the percolation comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercRow {
    pub m: usize,
    pub p: f64,
    pub q: f64,
    pub r_equiv: f64,
    pub largest_mixed: usize,
    pub largest_site: usize,
    pub frac_mixed: f64,
    pub frac_site: f64,
    pub seed: u64,
}

impl PercRow {
    pub const HEADER: [&'static str; 9] = [
        "m",
        "p",
        "q",
        "r_equiv",
        "largest_mixed",
        "largest_site",
        "frac_mixed",
        "frac_site",
        "seed",
    ];
}

/// Sample the coupled pair and measure both largest clusters.
pub fn compare_mixed_site(m: usize, p: f64, q: f64, seed: u64) -> Result<PercRow> {
    let (mixed, site) = sample_coupled(m, p, q, seed)?;
    let (lm, ls) = (largest_bond_component(&mixed), largest_bond_component(&site));
    let nodes = (m * m) as f64;
    Ok(PercRow {
        m,
        p,
        q,
        r_equiv: site_equivalent_prob(p, q),
        largest_mixed: lm,
        largest_site: ls,
        frac_mixed: lm as f64 / nodes,
        frac_site: ls as f64 / nodes,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        let c = sample_mixed(10, 1.0, 1.0, 1).unwrap();
        assert_eq!(c.open_sites(), 100);
        assert_eq!(c.open_links(), 200);
        assert_eq!(largest_bond_component(&c), 100);
        let c = sample_mixed(10, 0.0, 0.7, 1).unwrap();
        assert_eq!(c.open_sites(), 0);
        assert_eq!(largest_bond_component(&c), 0);
        assert!(sample_mixed(1, 0.5, 0.5, 1).is_err());
        assert!(sample_mixed(4, 1.5, 0.5, 1).is_err());
    }

    #[test]
    fn site_fraction_within_binomial_ci() {
        for p in [0.3, 0.7] {
            for (m, seed) in [(200, 5u64), (200, 6)] {
                let c = sample_site(m, p, seed).unwrap();
                let frac = c.open_sites() as f64 / (m * m) as f64;
                let sd = (p * (1.0 - p) / (m * m) as f64).sqrt();
                assert!((frac - p).abs() < 3.0 * sd, "p={p}: {frac}");
            }
        }
        let c = sample_mixed(200, 1.0, 0.6, 9).unwrap();
        let frac = c.open_links() as f64 / (2 * 200 * 200) as f64;
        let sd = (0.24f64 / 80_000.0).sqrt();
        assert!((frac - 0.6).abs() < 3.0 * sd, "{frac}");
    }

    #[test]
    fn checkerboard() {
        let m = 10;
        let sites = (0..m * m).map(|id| (id / m + id % m) % 2 == 0).collect();
        let c = PercConfig::from_states(m, sites, vec![true; 2 * m * m]).unwrap();
        assert_eq!(largest_bond_component(&c), 1);
    }

    #[test]
    fn equivalent_prob() {
        assert!((site_equivalent_prob(0.95, 0.9) - 0.7695).abs() < 1e-12);
        assert_eq!(site_equivalent_prob(1.0, 1.0), 1.0);
        assert_eq!(site_equivalent_prob(0.4, 0.0), 0.0);
    }

    #[test]
    fn coupled_pair_is_ordered() {
        for seed in 0..20 {
            let (mixed, site) = sample_coupled(30, 0.9, 0.85, seed).unwrap();
            for id in 0..900 {
                assert!(!site.sites[id] || mixed.sites[id]);
            }
            assert!(largest_bond_component(&mixed) >= largest_bond_component(&site));
        }
    }

    #[test]
    fn reduced_site_density() {
        let (p, q) = (0.9, 0.8);
        let r = site_equivalent_prob(p, q);
        let (_, site) = sample_coupled(200, p, q, 3).unwrap();
        let frac = site.open_sites() as f64 / 40_000.0;
        assert!((frac - r).abs() < 3.0 * (r * (1.0 - r) / 40_000.0).sqrt(), "{frac} vs {r}");
    }

    #[test]
    fn link_indexing_wraps() {
        let m = 3;
        assert_eq!(link_index(m, (0, 0), Direction::West), link_index(m, (2, 0), Direction::East));
        assert_eq!(link_index(m, (1, 0), Direction::South), link_index(m, (1, 2), Direction::North));
    }

    fn partial(m: usize, node: TestState, link: TestState) -> PartialGridConfig {
        let mut pg = PartialGridConfig::new(m);
        for x in 0..m {
            for y in 0..m {
                pg.set_node((x, y), node);
                for dir in Direction::ALL {
                    pg.set_link((x, y), dir, link);
                }
            }
        }
        pg
    }

    #[test]
    fn completion_examples() {
        let c = complete_partial(&partial(4, TestState::Open, TestState::Open), 1.0, 1).unwrap();
        assert_eq!(c.open_links(), 32);
        assert_eq!(c.open_sites(), 16);
        let c = complete_partial(&partial(4, TestState::Closed, TestState::Untested), 2.0, 1).unwrap();
        assert_eq!(c.open_links(), 0);
        assert_eq!(c.open_sites(), 0);
        let err = complete_partial(&partial(4, TestState::Untested, TestState::Open), 0.5, 1);
        assert!(matches!(err, Err(Error::UntestedNode(_))));
    }

    #[test]
    fn completion_product_bernoulli() {
        let eta = 0.6;
        let m = 150;
        let c = complete_partial(&partial(m, TestState::Open, TestState::Untested), eta, 12).unwrap();
        let target = (1.0 - eta / 2.0) * (1.0 - eta / 2.0);
        let links = (2 * m * m) as f64;
        let frac = c.open_links() as f64 / links;
        assert!((frac - target).abs() < 3.0 * (target * (1.0 - target) / links).sqrt(), "{frac}");
    }

    #[test]
    fn completion_keeps_tested_orientations() {
        let mut pg = partial(3, TestState::Open, TestState::Untested);
        pg.set_link((0, 0), Direction::East, TestState::Closed);
        let c = complete_partial(&pg, 0.0, 4).unwrap();
        assert!(!c.link((0, 0), Direction::East));
        assert_eq!(c.open_links(), 17);
    }
}
