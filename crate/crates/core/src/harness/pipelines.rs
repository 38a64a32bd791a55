//! One replicate of each experiment kind.

use std::fs::File;
use std::io::BufWriter;

use crate::bounds::{self, TailBoundInputs};
use crate::components::{components, functional_paths, mapping_census, CensusRow};
use crate::error::{invalid, Error, Result};
use crate::geometry::{sample_points, GridIndex};
use crate::gw::{
    default_fill_threshold, extinction_bound, extinction_exact, extinction_mc, simulate_brw, ThinnedLaw,
};
use crate::irrigation::{geometric_graph, sample_irrigation, undirected_view, OffspringLaw, SelfSelection};
use crate::lattice::{discrete_disk, CellGeometry, DiscreteDisk, LatticeFrame};
use crate::percolation::compare_mixed_site;
use crate::web::{build_web, default_node_threshold, LinkMode, WebOptions, WebRow};

use super::spec::{ExperimentSpec, Kind, Value};
use super::table::Cell;

pub struct Replicate {
    pub index: usize,
    pub seed: u64,
}

struct Params<'a>(&'a ExperimentSpec);

impl Params<'_> {
    fn int(&self, k: &str) -> u64 {
        self.0.int(k)
    }

    fn usize(&self, k: &str) -> usize {
        self.int(k) as usize
    }

    fn signed(&self, k: &str) -> i64 {
        match self.0.params.get(k) {
            Some(Value::SignedInt(v)) => *v,
            other => panic!("`{k}` is not a signed integer: {other:?}"),
        }
    }

    fn float(&self, k: &str) -> f64 {
        match self.0.params.get(k) {
            Some(Value::Float(v)) => *v,
            other => panic!("`{k}` is not a number: {other:?}"),
        }
    }

    fn law(&self, k: &str) -> OffspringLaw {
        match self.0.params.get(k) {
            Some(Value::Law(l)) => l.clone(),
            other => panic!("`{k}` is not a law: {other:?}"),
        }
    }

    fn text(&self, k: &str) -> &str {
        match self.0.params.get(k) {
            Some(Value::Text(s)) => s,
            other => panic!("`{k}` is not text: {other:?}"),
        }
    }

    fn bool(&self, k: &str) -> bool {
        match self.0.params.get(k) {
            Some(Value::Bool(b)) => *b,
            other => panic!("`{k}` is not a flag: {other:?}"),
        }
    }

    fn auto(&self, k: &str) -> Option<u64> {
        match self.0.params.get(k) {
            Some(Value::Int(v)) => Some(*v),
            Some(Value::Auto) => None,
            other => panic!("`{k}` is not an integer: {other:?}"),
        }
    }
}

/// Metric columns of a kind, after the leading `row` column.
pub fn columns(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Points => &["n", "mean_x", "mean_y", "var_x", "var_y", "seed"],
        Kind::RggConnectivity => &["n", "r", "edges", "components", "C1", "connected", "seed"],
        Kind::Giant => &["n", "edges", "C1", "C2", "components", "C1_frac", "seed"],
        Kind::C1Scan => &[
            "n",
            "r",
            "edges",
            "C1",
            "C2",
            "cycles",
            "max_path",
            "threshold",
            "bound",
            "below_threshold",
            "seed",
        ],
        Kind::Web => &[
            "m",
            "threshold",
            "nodes_open",
            "links_open",
            "web_size",
            "coverage",
            "hookup_fraction",
            "max_forbidden_per_cell",
            "seed",
        ],
        Kind::MixedPerc => &[
            "m",
            "p",
            "q",
            "r_equiv",
            "largest_mixed",
            "largest_site",
            "frac_mixed",
            "frac_site",
            "seed",
        ],
        Kind::Gw => &["law", "alpha", "q_exact", "q_bound", "q_mc", "mc_se", "seed"],
        Kind::Brw => &["a", "gens", "population", "occupancy", "threshold", "fill_up", "truncated", "seed"],
        Kind::Bounds => &["formula", "value", "raw", "vacuous", "aux", "seed"],
        Kind::Sweep => &[],
    }
}

fn io_err(path: &str, e: std::io::Error) -> Error {
    invalid("path", format!("{path}: {e}"))
}

pub fn run_replicate(spec: &ExperimentSpec, rep: &Replicate) -> Result<Vec<Cell>> {
    let p = Params(spec);
    let seed = rep.seed;
    let mut row = match spec.pipeline_kind() {
        Kind::Points => {
            let n = p.usize("n");
            let pts = sample_points(n, seed)?;
            let nf = n as f64;
            let mean = |a: usize| pts.coords().iter().map(|c| c[a]).sum::<f64>() / nf;
            let (mx, my) = (mean(0), mean(1));
            let var = |a: usize, m: f64| pts.coords().iter().map(|c| (c[a] - m).powi(2)).sum::<f64>() / nf;
            let dump = p.text("dump");
            if rep.index == 0 && !dump.is_empty() {
                let f = File::create(dump).map_err(|e| io_err(dump, e))?;
                pts.write_dump(BufWriter::new(f)).map_err(|e| io_err(dump, e))?;
            }
            vec![
                Cell::Int(n as i64),
                Cell::Float(mx),
                Cell::Float(my),
                Cell::Float(var(0, mx)),
                Cell::Float(var(1, my)),
            ]
        }
        Kind::RggConnectivity => {
            let n = p.usize("n");
            let r = p.float("gamma") * bounds::rgg_connectivity_radius(n as f64)?;
            let pts = sample_points(n, seed)?;
            let idx = GridIndex::for_radius(&pts, r)?;
            let g = geometric_graph(&pts, &idx, r)?;
            let census = components(&g);
            vec![
                Cell::Int(n as i64),
                Cell::Float(r),
                Cell::Int(g.edge_count() as i64),
                Cell::Int(census.component_count() as i64),
                Cell::Int(census.c1() as i64),
                Cell::Bool(census.component_count() == 1),
            ]
        }
        Kind::Giant => {
            let n = p.usize("n");
            let r = p.float("r");
            let pts = sample_points(n, seed)?;
            let idx = GridIndex::for_radius(&pts, r)?;
            let sel = if p.bool("exclude_self") {
                SelfSelection::Excluded
            } else {
                SelfSelection::Allowed
            };
            let g = sample_irrigation(&pts, &idx, r, &p.law("law"), seed, sel)?;
            let u = undirected_view(&g);
            let row = CensusRow::new(&components(&u), u.edge_count());
            vec![
                Cell::Int(row.n as i64),
                Cell::Int(row.edges as i64),
                Cell::Int(row.c1 as i64),
                Cell::Int(row.c2 as i64),
                Cell::Int(row.components as i64),
                Cell::Float(row.c1_frac),
            ]
        }
        Kind::C1Scan => {
            let n = p.usize("n");
            let r = p.float("r");
            let bound = bounds::c1_tail_bound(&TailBoundInputs::new(n as f64, r, p.float("t"), p.float("eps"))?);
            let pts = sample_points(n, seed)?;
            let idx = GridIndex::for_radius(&pts, r)?;
            let g = sample_irrigation(&pts, &idx, r, &OffspringLaw::constant(1)?, seed, SelfSelection::Allowed)?;
            let u = undirected_view(&g);
            let census = components(&u);
            let mapping = mapping_census(&g)?;
            let paths = functional_paths(&g);
            vec![
                Cell::Int(n as i64),
                Cell::Float(r),
                Cell::Int(u.edge_count() as i64),
                Cell::Int(census.c1() as i64),
                Cell::Int(census.c2() as i64),
                Cell::Int(mapping.cycles as i64),
                Cell::Int(paths.max as i64),
                Cell::Float(bound.threshold),
                Cell::Float(bound.bound.value),
                Cell::Bool((census.c1() as f64) < bound.threshold),
            ]
        }
        Kind::Web => {
            let n = p.usize("n");
            let r = p.float("r");
            let law = p.law("law");
            let (k, d) = (p.usize("k"), p.usize("d"));
            let pts = sample_points(n, seed)?;
            let idx = GridIndex::for_radius(&pts, r)?;
            let g = sample_irrigation(&pts, &idx, r, &law, seed, SelfSelection::Allowed)?;
            let frame = LatticeFrame::new(&pts, r, k, d)?;
            let threshold = match p.auto("threshold") {
                Some(t) => t as usize,
                None => default_node_threshold(&law, k) as usize,
            };
            let coverage = p.auto("coverage_threshold").map_or(threshold, |t| t as usize);
            let link_mode = match p.text("link_mode") {
                "all" => LinkMode::AllPaths,
                "first" => LinkMode::FirstChoice,
                other => return Err(invalid("link_mode", format!("`{other}` is not all or first"))),
            };
            let w = build_web(&g, &frame, WebOptions { threshold, link_mode }, seed)?;
            let dump = p.text("grid_dump");
            if rep.index == 0 && !dump.is_empty() {
                let f = File::create(dump).map_err(|e| io_err(dump, e))?;
                w.partial().write_csv(BufWriter::new(f)).map_err(|e| io_err(dump, e))?;
            }
            let row = WebRow::new(&g, &w, coverage);
            vec![
                Cell::Int(row.m as i64),
                Cell::Int(threshold as i64),
                Cell::Int(row.nodes_open as i64),
                Cell::Int(row.links_open as i64),
                Cell::Int(row.web_size as i64),
                Cell::Float(row.coverage),
                Cell::Float(row.hookup_fraction),
                Cell::Int(row.max_forbidden_per_cell as i64),
            ]
        }
        Kind::MixedPerc => {
            let row = compare_mixed_site(p.usize("m"), p.float("p"), p.float("q"), seed)?;
            vec![
                Cell::Int(row.m as i64),
                Cell::Float(row.p),
                Cell::Float(row.q),
                Cell::Float(row.r_equiv),
                Cell::Int(row.largest_mixed as i64),
                Cell::Int(row.largest_site as i64),
                Cell::Float(row.frac_mixed),
                Cell::Float(row.frac_site),
            ]
        }
        Kind::Gw => {
            let law = p.law("law");
            let t = ThinnedLaw::new(law.clone(), p.float("alpha"))?;
            let q_exact = extinction_exact(&t, p.float("tol"));
            let q_bound = extinction_bound(&t).unwrap_or(f64::NAN);
            let mc = extinction_mc(&t, p.usize("runs"), p.usize("max_gen"), p.int("cap"), seed)?;
            vec![
                Cell::Text(law.to_string()),
                Cell::Float(t.alpha),
                Cell::Float(q_exact),
                Cell::Float(q_bound),
                Cell::Float(mc.p),
                Cell::Float(mc.se),
            ]
        }
        Kind::Brw => {
            let t = ThinnedLaw::new(p.law("law"), p.float("alpha"))?;
            let k = p.usize("k");
            let disk = match p.text("disk") {
                "lattice" => discrete_disk(&CellGeometry::new(p.float("r"), k, p.usize("d"))?)?,
                "point" => DiscreteDisk { offsets: vec![(0, 0)] },
                other => return Err(invalid("disk", format!("`{other}` is not lattice or point"))),
            };
            let gens = p.auto("gens").map_or(k * k, |g| g as usize);
            let threshold = p.auto("threshold").unwrap_or_else(|| default_fill_threshold(&t, gens));
            let site = (p.signed("site_x") as i32, p.signed("site_y") as i32);
            let run = simulate_brw(&t, &disk, gens, p.int("cap"), seed)?;
            vec![
                Cell::Int(disk.a() as i64),
                Cell::Int(gens as i64),
                Cell::Int(run.population(gens) as i64),
                Cell::Int(run.occupancy(gens, site) as i64),
                Cell::Int(threshold as i64),
                Cell::Bool(run.occupancy(gens, site) >= threshold),
                Cell::Bool(run.truncated),
            ]
        }
        Kind::Bounds => bounds_row(&p)?,
        Kind::Sweep => unreachable!("sweeps are expanded before replicates run"),
    };
    row.push(Cell::UInt(seed));
    Ok(row)
}

/// `formula, value, raw, vacuous, aux`.
fn bounds_row(p: &Params) -> Result<Vec<Cell>> {
    let formula = p.text("formula").to_string();
    let n = p.float("n");
    let plain = |v: f64| (v, v, false, f64::NAN);
    let (value, raw, vacuous, aux) = match formula.as_str() {
        "rgg-radius" => plain(bounds::rgg_connectivity_radius(n)?),
        "irrigation-threshold" => plain(bounds::irrigation_connectivity_threshold(n)?),
        "xi-one-limit" => plain(bounds::xi_one_radius_limit(n)),
        "chernoff" => plain(bounds::chernoff_upper(p.float("trials"), p.float("p"), p.float("u"))?),
        "concentration" => {
            let b = bounds::binomial_concentration(n, p.float("p"), p.float("delta"))?;
            (b.value, b.raw, b.vacuous, f64::NAN)
        }
        "c1-tail" => {
            let b = bounds::c1_tail_bound(&TailBoundInputs::new(n, p.float("r"), p.float("t"), p.float("eps"))?);
            (b.bound.value, b.bound.raw, b.bound.vacuous, b.threshold)
        }
        "solve-t" => {
            let t = bounds::solve_t(n, p.float("r"))?;
            (t, t, false, bounds::t_residual(n, p.float("r"), t))
        }
        "t-zero" => plain(bounds::t_zero()),
        "link-event" => plain(bounds::link_event_bound(p.usize("size"), p.usize("k"), p.usize("d"), p.float("delta"))?),
        "delta-good" => {
            let b = bounds::delta_good_prob_bound(n as usize, p.float("gamma"), p.float("delta"), p.usize("k"), p.usize("d"))?;
            (b.bound.value, b.bound.raw, b.bound.vacuous, b.m as f64)
        }
        other => return Err(invalid("formula", format!("unknown formula `{other}`"))),
    };
    Ok(vec![
        Cell::Text(formula),
        Cell::Float(value),
        Cell::Float(raw),
        Cell::Bool(vacuous),
        Cell::Float(aux),
    ])
}
