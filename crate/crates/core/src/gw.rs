//! Galton–Watson processes and branching random walks with thinned offspring.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::irrigation::{mean_offspring, OffspringLaw};
use crate::lattice::DiscreteDisk;
use crate::rng::{domain, StreamFamily};

pub const DEFAULT_POPULATION_CAP: u64 = 1_000_000;

/// `ζ = Bin(ξ, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinnedLaw {
    pub base: OffspringLaw,
    pub alpha: f64,
}

impl ThinnedLaw {
    pub fn new(base: OffspringLaw, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid("alpha", format!("{alpha} not in [0,1]")));
        }
        Ok(Self { base, alpha })
    }

    pub fn mean(&self) -> f64 {
        self.alpha * mean_offspring(&self.base)
    }

    /// `P(ζ = j)` for `j = 0..=κ`.
    pub fn pmf(&self) -> Vec<f64> {
        let kappa = self.base.kappa() as usize;
        let a = self.alpha;
        let mut out = vec![0.0; kappa + 1];
        for (x, px) in self.base.support() {
            let x = x as usize;
            let mut binom = 1.0;
            for (j, slot) in out.iter_mut().enumerate().take(x + 1) {
                *slot += px * binom * a.powi(j as i32) * (1.0 - a).powi((x - j) as i32);
                binom = binom * (x - j) as f64 / (j + 1) as f64;
            }
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let xi = self.base.sample(rng) as u64;
        Binomial::new(xi, self.alpha).expect("alpha validated").sample(rng)
    }

    /// Total offspring of `parents` independent individuals.
    ///
    /// The number of parents requesting each support value is multinomial,
    /// drawn as a chain of conditional binomials, so the cost does not grow
    /// with `parents`.
    pub(crate) fn sample_total<R: Rng + ?Sized>(&self, parents: u64, rng: &mut R) -> u64 {
        let mut left = parents;
        let mut mass = 1.0;
        let mut xi_total = 0u64;
        let support: Vec<(u32, f64)> = self.base.support().collect();
        for (i, &(v, p)) in support.iter().enumerate() {
            if left == 0 {
                break;
            }
            let count = if i + 1 == support.len() {
                left
            } else {
                let share = (p / mass).clamp(0.0, 1.0);
                Binomial::new(left, share).expect("share in [0,1]").sample(rng)
            };
            xi_total += v as u64 * count;
            left -= count;
            mass -= p;
        }
        Binomial::new(xi_total, self.alpha).expect("alpha validated").sample(rng)
    }
}

/// `E[(1 - α + α x)^ξ]`.
pub fn offspring_pgf(t: &ThinnedLaw, x: f64) -> f64 {
    let s = 1.0 - t.alpha + t.alpha * x;
    t.base.support().map(|(j, p)| p * s.powi(j as i32)).sum()
}

/// Smallest fixed point of the pgf, by iteration from 0.
pub fn extinction_exact(t: &ThinnedLaw, tol: f64) -> f64 {
    if t.mean() <= 1.0 {
        return 1.0;
    }
    let mut x = 0.0;
    for _ in 0..10_000_000 {
        let nx = offspring_pgf(t, x);
        if (nx - x).abs() < tol {
            return nx;
        }
        x = nx;
    }
    x
}

/// `(1-α) / (1 - E(1-α)^ξ - E ξα(1-α)^{ξ-1})`, clipped to 1.
pub fn extinction_bound(t: &ThinnedLaw) -> Result<f64> {
    if t.mean() <= 1.0 {
        return Err(Error::BoundInapplicable(format!("mean offspring {} ≤ 1", t.mean())));
    }
    let b = 1.0 - t.alpha;
    let denom: f64 = 1.0
        - t.base
            .support()
            .map(|(j, p)| p * (b.powi(j as i32) + j as f64 * t.alpha * b.powi(j as i32 - 1)))
            .sum::<f64>();
    if denom <= 0.0 {
        return Err(Error::BoundInapplicable(format!("denominator {denom} ≤ 0")));
    }
    Ok((b / denom).min(1.0))
}

/// Lower bound on the retention probability, as printed alongside the
/// thinning argument. `eta` has no fixed meaning there, so it is an input;
/// the value is a diagnostic only.
pub fn alpha_lower_diagnostic(delta: f64, d: usize, eta: f64, n: f64, kappa: u32, k: usize) -> f64 {
    let d2 = (d * d) as f64;
    let pi = std::f64::consts::PI;
    let cap = (kappa as f64).powf(2.0 * (k * k) as f64);
    ((pi - delta) * d2 * (eta - delta) * n.ln() - cap) / ((pi + delta) * d2 * (eta + delta) * n.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwRun {
    pub survived: bool,
    /// Population of generations `0..`, ending at extinction, `max_gen` or the cap.
    pub trajectory: Vec<u64>,
    pub capped: bool,
}

fn run_gw<R: Rng + ?Sized>(t: &ThinnedLaw, max_gen: usize, cap: u64, rng: &mut R) -> GwRun {
    let mut pop = 1u64;
    let mut trajectory = vec![pop];
    for _ in 0..max_gen {
        pop = t.sample_total(pop, rng);
        trajectory.push(pop);
        if pop == 0 {
            return GwRun {
                survived: false,
                trajectory,
                capped: false,
            };
        }
        if pop >= cap {
            return GwRun {
                survived: true,
                trajectory,
                capped: true,
            };
        }
    }
    GwRun {
        survived: true,
        trajectory,
        capped: false,
    }
}

pub fn simulate_gw(t: &ThinnedLaw, max_gen: usize, cap: u64, seed: u64) -> Result<GwRun> {
    if cap == 0 {
        return Err(invalid("cap", "must be at least 1"));
    }
    let mut rng = StreamFamily::new(seed, domain::GALTON_WATSON).stream(0);
    Ok(run_gw(t, max_gen, cap, &mut rng))
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub p: f64,
    pub se: f64,
    pub runs: usize,
}

impl McEstimate {
    pub fn from_count(hits: usize, runs: usize) -> Self {
        let p = hits as f64 / runs as f64;
        Self {
            p,
            se: (p * (1.0 - p) / runs as f64).sqrt(),
            runs,
        }
    }
}

/// Fraction of independent runs that die out within `max_gen` generations.
pub fn extinction_mc(t: &ThinnedLaw, runs: usize, max_gen: usize, cap: u64, seed: u64) -> Result<McEstimate> {
    if runs == 0 || cap == 0 {
        return Err(invalid("runs,cap", "must be positive"));
    }
    let fam = StreamFamily::new(seed, domain::GALTON_WATSON);
    let dead = (0..runs)
        .into_par_iter()
        .filter(|&i| !run_gw(t, max_gen, cap, &mut fam.stream(i as u64)).survived)
        .count();
    Ok(McEstimate::from_count(dead, runs))
}

pub type Site = (i32, i32);

/// Occupancy `M_i(S)` of every generation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrwRun {
    pub generations: Vec<BTreeMap<Site, u64>>,
    /// The population cap was hit and the run stopped early.
    pub truncated: bool,
}

impl BrwRun {
    pub fn population(&self, gen: usize) -> u64 {
        self.generations.get(gen).map_or(0, |g| g.values().sum())
    }

    pub fn occupancy(&self, gen: usize, site: Site) -> u64 {
        self.generations.get(gen).and_then(|g| g.get(&site)).copied().unwrap_or(0)
    }

    /// `M_gen(S) ≥ threshold` in the last simulated generation.
    pub fn fill_up(&self, site: Site, threshold: u64) -> bool {
        self.occupancy(self.generations.len() - 1, site) >= threshold
    }
}

/// `⌈(E ζ)^{2·gens/3}⌉`.
pub fn default_fill_threshold(t: &ThinnedLaw, gens: usize) -> u64 {
    t.mean().powf(2.0 * gens as f64 / 3.0).ceil() as u64
}

fn run_brw<R: Rng + ?Sized>(t: &ThinnedLaw, disk: &DiscreteDisk, gens: usize, cap: u64, rng: &mut R) -> BrwRun {
    let mut generations = vec![BTreeMap::from([((0, 0), 1u64)])];
    let mut total = 1u64;
    for _ in 0..gens {
        let mut next = BTreeMap::new();
        let mut size = 0u64;
        for (&site, &count) in generations.last().expect("generation 0 exists") {
            let children = t.sample_total(count, rng);
            for _ in 0..children {
                let o = disk.offsets[rng.random_range(0..disk.offsets.len())];
                *next.entry((site.0 + o.0, site.1 + o.1)).or_insert(0) += 1;
            }
            size += children;
        }
        generations.push(next);
        total += size;
        if size == 0 {
            break;
        }
        if total >= cap {
            return BrwRun {
                generations,
                truncated: true,
            };
        }
    }
    BrwRun {
        generations,
        truncated: false,
    }
}

pub fn simulate_brw(t: &ThinnedLaw, disk: &DiscreteDisk, gens: usize, cap: u64, seed: u64) -> Result<BrwRun> {
    if disk.is_empty() {
        return Err(Error::Empty("disk"));
    }
    if gens == 0 {
        return Err(invalid("gens", "must be at least 1"));
    }
    let mut rng = StreamFamily::new(seed, domain::BRW).stream(0);
    Ok(run_brw(t, disk, gens, cap, &mut rng))
}

/// Frequency of `M_gens(site) < threshold` over independent runs.
pub fn fill_up_failure_mc(
    t: &ThinnedLaw,
    disk: &DiscreteDisk,
    gens: usize,
    site: Site,
    threshold: u64,
    runs: usize,
    seed: u64,
) -> Result<McEstimate> {
    if disk.is_empty() {
        return Err(Error::Empty("disk"));
    }
    if runs == 0 || gens == 0 {
        return Err(invalid("runs,gens", "must be positive"));
    }
    let fam = StreamFamily::new(seed, domain::BRW);
    let fails = (0..runs)
        .into_par_iter()
        .filter(|&i| {
            let run = run_brw(t, disk, gens, DEFAULT_POPULATION_CAP, &mut fam.stream(i as u64));
            // a run stopped at the cap counts as filled
            run.occupancy(gens, site) < threshold && !run.truncated
        })
        .count();
    Ok(McEstimate::from_count(fails, runs))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSchedule {
    pub alphas: Vec<f64>,
    pub alpha: f64,
    /// Entries above 1 that were clamped.
    pub clamped: usize,
}

/// `α_i = a (c - i) / ρ_i` for each `(i, ρ_i)`, and their minimum.
pub fn alpha_schedule(a: usize, c: usize, steps: &[(usize, f64)]) -> Result<AlphaSchedule> {
    if steps.is_empty() {
        return Err(Error::Empty("alpha schedule"));
    }
    let mut clamped = 0;
    let mut alphas = Vec::with_capacity(steps.len());
    for &(i, rho) in steps {
        if i > c {
            return Err(invalid("i", format!("{i} exceeds c = {c}")));
        }
        if !(rho > 0.0) {
            return Err(invalid("rho", format!("{rho} must be positive")));
        }
        let v = (a * (c - i)) as f64 / rho;
        if v > 1.0 {
            clamped += 1;
        }
        alphas.push(v.min(1.0));
    }
    let alpha = alphas.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AlphaSchedule { alphas, alpha, clamped })
}

/// Probability that a walk with uniform increments in `disk` sits at
/// `target` after exactly `steps` steps without leaving `[-h, h]²`.
pub fn constrained_walk_prob(
    disk: &DiscreteDisk,
    halfwidth: i32,
    start: Site,
    target: Site,
    steps: usize,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    let inside = |s: Site| s.0.abs() <= halfwidth && s.1.abs() <= halfwidth;
    if !inside(start) || !inside(target) {
        return Err(invalid("start,target", format!("must lie in [-{halfwidth}, {halfwidth}]²")));
    }
    if steps == 0 || reps == 0 {
        return Err(invalid("steps,reps", "must be positive"));
    }
    if disk.is_empty() {
        return Err(Error::Empty("disk"));
    }
    const CHUNK: usize = 4096;
    let fam = StreamFamily::new(seed, domain::WALK);
    let hits: usize = (0..reps.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = fam.stream(c as u64);
            let mut hits = 0;
            for _ in c * CHUNK..((c + 1) * CHUNK).min(reps) {
                let mut s = start;
                let mut ok = true;
                for _ in 0..steps {
                    let o = disk.offsets[rng.random_range(0..disk.offsets.len())];
                    s = (s.0 + o.0, s.1 + o.1);
                    if !inside(s) {
                        ok = false;
                        break;
                    }
                }
                hits += (ok && s == target) as usize;
            }
            hits
        })
        .sum();
    Ok(McEstimate::from_count(hits, reps))
}

/// One row of the extinction comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwRow {
    pub law: String,
    pub alpha: f64,
    pub q_exact: f64,
    /// `NaN` when the bound does not apply.
    pub q_bound: f64,
    pub q_mc: f64,
    pub mc_se: f64,
}

impl GwRow {
    pub const HEADER: [&'static str; 6] = ["law", "alpha", "q_exact", "q_bound", "q_mc", "mc_se"];
}
