//! Experiment specifications and the `key=value` config format.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::irrigation::OffspringLaw;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Points,
    RggConnectivity,
    Giant,
    C1Scan,
    Web,
    MixedPerc,
    Gw,
    Brw,
    Bounds,
    Sweep,
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::Points,
        Kind::RggConnectivity,
        Kind::Giant,
        Kind::C1Scan,
        Kind::Web,
        Kind::MixedPerc,
        Kind::Gw,
        Kind::Brw,
        Kind::Bounds,
        Kind::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Points => "points",
            Kind::RggConnectivity => "rgg-connectivity",
            Kind::Giant => "giant",
            Kind::C1Scan => "c1-scan",
            Kind::Web => "web",
            Kind::MixedPerc => "mixed-perc",
            Kind::Gw => "gw",
            Kind::Brw => "brw",
            Kind::Bounds => "bounds",
            Kind::Sweep => "sweep",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Kind::Points => "uniform points on the torus; moments and optional binary dump",
            Kind::RggConnectivity => "connectivity of G_n(r) at r = gamma * sqrt(log n / (n pi))",
            Kind::Giant => "component census of the irrigation graph",
            Kind::C1Scan => "largest component of the xi = 1 graph against its tail bound",
            Kind::Web => "cell exploration: node and link events, web coverage and hook-up",
            Kind::MixedPerc => "mixed site/bond percolation against the coupled site model",
            Kind::Gw => "extinction of the thinned Galton-Watson process: exact, bound, Monte Carlo",
            Kind::Brw => "branching random walk on box offsets; occupancy and fill-up",
            Kind::Bounds => "evaluate one closed-form formula",
            Kind::Sweep => "Cartesian product of --vary.<key> axes over the kind given by `of`",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    Int,
    SignedInt,
    Float,
    Law,
    Text,
    Bool,
    /// Non-negative integer or `auto`.
    IntOrAuto,
}

impl ParamType {
    fn describe(self) -> &'static str {
        match self {
            ParamType::Int => "non-negative integer",
            ParamType::SignedInt => "integer",
            ParamType::Float => "number",
            ParamType::Law => "offspring law like 1:0.8,2:0.2",
            ParamType::Text => "text",
            ParamType::Bool => "true or false",
            ParamType::IntOrAuto => "non-negative integer or auto",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(u64),
    SignedInt(i64),
    Float(f64),
    Law(OffspringLaw),
    Text(String),
    Bool(bool),
    Auto,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::SignedInt(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
            Value::Law(l) => write!(f, "{l}"),
            Value::Text(s) => f.write_str(s),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Auto => f.write_str("auto"),
        }
    }
}

/// Integers may be written as `100000` or `1e5`.
fn parse_integral(raw: &str) -> Option<f64> {
    let v: f64 = raw.parse().ok()?;
    (v.is_finite() && v.fract() == 0.0).then_some(v)
}

impl Value {
    pub fn parse(ty: ParamType, raw: &str) -> Result<Self, String> {
        let raw = raw.trim();
        let mismatch = || format!("expected {}, got `{raw}`", ty.describe());
        match ty {
            ParamType::Int => parse_integral(raw)
                .filter(|&v| v >= 0.0 && v <= u64::MAX as f64)
                .map(|v| Value::Int(v as u64))
                .ok_or_else(mismatch),
            ParamType::SignedInt => parse_integral(raw).map(|v| Value::SignedInt(v as i64)).ok_or_else(mismatch),
            ParamType::Float => raw
                .parse::<f64>()
                .ok()
                .filter(|v| !v.is_nan())
                .map(Value::Float)
                .ok_or_else(mismatch),
            ParamType::Law => raw.parse::<OffspringLaw>().map(Value::Law).map_err(|e| e.to_string()),
            ParamType::Text => Ok(Value::Text(raw.to_string())),
            ParamType::Bool => match raw {
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                _ => Err(mismatch()),
            },
            ParamType::IntOrAuto => {
                if raw == "auto" {
                    Ok(Value::Auto)
                } else {
                    Value::parse(ParamType::Int, raw).map_err(|_| mismatch())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParamDef {
    pub key: &'static str,
    pub ty: ParamType,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn p(key: &'static str, ty: ParamType, default: &'static str, doc: &'static str) -> ParamDef {
    ParamDef { key, ty, default, doc }
}

use ParamType::*;

const POINTS: &[ParamDef] = &[
    p("n", Int, "10000", "number of points"),
    p("dump", Text, "", "write replicate 0 as a binary points dump to this path"),
];
const RGG: &[ParamDef] = &[
    p("n", Int, "20000", "number of points"),
    p("gamma", Float, "1", "radius in units of sqrt(log n / (n pi))"),
];
const GIANT: &[ParamDef] = &[
    p("n", Int, "100000", "number of points"),
    p("r", Float, "0.035", "visibility radius"),
    p("law", Law, "1:0.8,2:0.2", "offspring law of xi"),
    p("exclude_self", Bool, "false", "draw only among the other points of the ball"),
];
const C1_SCAN: &[ParamDef] = &[
    p("n", Int, "200000", "number of points"),
    p("r", Float, "0.006", "visibility radius (xi = 1)"),
    p("t", Float, "4", "t of the tail bound"),
    p("eps", Float, "2", "epsilon of the tail bound"),
];
const WEB: &[ParamDef] = &[
    p("n", Int, "50000", "number of points"),
    p("r", Float, "0.05", "visibility radius"),
    p("k", Int, "3", "boxes per cell side in units of d (odd)"),
    p("d", Int, "1", "box subdivision (odd)"),
    p("law", Law, "2:1", "offspring law of xi"),
    p("threshold", IntOrAuto, "auto", "node-event threshold; auto = ceil(E xi^(k^2/2))"),
    p("coverage_threshold", IntOrAuto, "auto", "web points a box needs to count as covered; auto = threshold"),
    p("link_mode", Text, "all", "link search: all (every path) or first (first-choice path)"),
    p("grid_dump", Text, "", "write replicate 0's node states as CSV to this path"),
];
const MIXED: &[ParamDef] = &[
    p("m", Int, "100", "grid width"),
    p("p", Float, "0.9", "site probability"),
    p("q", Float, "0.9", "link probability"),
];
const GW: &[ParamDef] = &[
    p("law", Law, "2:1", "offspring law of xi"),
    p("alpha", Float, "0.8", "retention probability"),
    p("runs", Int, "100000", "Monte Carlo runs per replicate"),
    p("max_gen", Int, "200", "generations before a run counts as surviving"),
    p("cap", Int, "10000", "population counted as survival"),
    p("tol", Float, "1e-12", "fixed-point tolerance"),
];
const BRW: &[ParamDef] = &[
    p("law", Law, "2:1", "offspring law of xi"),
    p("alpha", Float, "0.8", "retention probability"),
    p("disk", Text, "lattice", "increments: lattice (discrete disk of r, k, d) or point"),
    p("r", Float, "0.2", "radius for the discrete disk"),
    p("k", Int, "3", "k for the discrete disk"),
    p("d", Int, "1", "d for the discrete disk"),
    p("gens", IntOrAuto, "auto", "generations; auto = k^2"),
    p("threshold", IntOrAuto, "auto", "fill-up threshold; auto = ceil(E zeta^(2 gens/3))"),
    p("site_x", SignedInt, "0", "target site x"),
    p("site_y", SignedInt, "0", "target site y"),
    p("cap", Int, "1000000", "population cap"),
];
const BOUNDS: &[ParamDef] = &[
    p(
        "formula",
        Text,
        "t-zero",
        "rgg-radius | irrigation-threshold | xi-one-limit | chernoff | concentration | c1-tail | solve-t | t-zero | link-event | delta-good",
    ),
    p("n", Float, "1e6", "n"),
    p("r", Float, "0.001", "r"),
    p("t", Float, "4", "t"),
    p("eps", Float, "2", "epsilon"),
    p("trials", Float, "100", "binomial trials (chernoff)"),
    p("p", Float, "0.1", "success probability (chernoff, concentration)"),
    p("u", Float, "2", "multiple of the mean (chernoff)"),
    p("delta", Float, "0.1", "relative deviation"),
    p("size", Int, "1000", "|R| (link-event)"),
    p("k", Int, "3", "k"),
    p("d", Int, "1", "d"),
    p("gamma", Float, "20", "gamma (delta-good)"),
];

pub fn schema(kind: Kind) -> &'static [ParamDef] {
    match kind {
        Kind::Points => POINTS,
        Kind::RggConnectivity => RGG,
        Kind::Giant => GIANT,
        Kind::C1Scan => C1_SCAN,
        Kind::Web => WEB,
        Kind::MixedPerc => MIXED,
        Kind::Gw => GW,
        Kind::Brw => BRW,
        Kind::Bounds => BOUNDS,
        Kind::Sweep => &[],
    }
}

const GLOBAL_KEYS: [&str; 5] = ["kind", "seed", "reps", "out", "threads"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: Kind,
    /// Kind run at each grid point of a sweep.
    pub of: Option<Kind>,
    pub params: BTreeMap<String, Value>,
    pub master_seed: u64,
    pub replicates: usize,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    /// Sweep axes in declaration order.
    pub grid: Vec<(String, Vec<Value>)>,
}

impl ExperimentSpec {
    pub fn new(kind: Kind) -> Self {
        let mut spec = Self {
            kind,
            of: None,
            params: BTreeMap::new(),
            master_seed: 1,
            replicates: 1,
            threads: None,
            out: None,
            grid: Vec::new(),
        };
        if kind == Kind::Sweep {
            spec.set_of(Kind::Giant);
        } else {
            spec.fill_defaults();
        }
        spec
    }

    /// Kind whose pipeline produces the rows.
    pub fn pipeline_kind(&self) -> Kind {
        self.of.unwrap_or(self.kind)
    }

    pub fn schema(&self) -> &'static [ParamDef] {
        schema(self.pipeline_kind())
    }

    fn fill_defaults(&mut self) {
        self.params = self
            .schema()
            .iter()
            .map(|d| (d.key.to_string(), Value::parse(d.ty, d.default).expect("defaults parse")))
            .collect();
    }

    fn set_of(&mut self, of: Kind) {
        self.of = Some(of);
        self.grid.clear();
        self.fill_defaults();
    }

    fn def(&self, key: &str) -> Option<&'static ParamDef> {
        self.schema().iter().find(|d| d.key == key)
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), String> {
        let raw = raw.trim();
        match key {
            "kind" => {
                let k: Kind = raw.parse()?;
                if k != self.kind {
                    return Err(format!("kind `{k}` conflicts with `{}`", self.kind));
                }
            }
            "seed" => self.master_seed = raw.parse().map_err(|_| format!("seed: expected unsigned 64-bit integer, got `{raw}`"))?,
            "reps" => {
                let v = match Value::parse(ParamType::Int, raw).map_err(|e| format!("reps: {e}"))? {
                    Value::Int(v) => v as usize,
                    _ => unreachable!(),
                };
                if v == 0 {
                    return Err("reps: must be at least 1".into());
                }
                self.replicates = v;
            }
            "threads" => {
                let v: usize = raw.parse().map_err(|_| format!("threads: expected positive integer, got `{raw}`"))?;
                if v == 0 {
                    return Err("threads: must be at least 1".into());
                }
                self.threads = Some(v);
            }
            "out" => self.out = Some(PathBuf::from(raw)),
            "of" if self.kind == Kind::Sweep => {
                let k: Kind = raw.parse()?;
                if k == Kind::Sweep {
                    return Err("of: a sweep cannot run a sweep".into());
                }
                if self.of != Some(k) {
                    self.set_of(k);
                }
            }
            _ => {
                if let Some(axis) = key.strip_prefix("vary.") {
                    if self.kind != Kind::Sweep {
                        return Err(format!("`{key}` is only valid for sweep"));
                    }
                    let def = self.def(axis).ok_or_else(|| format!("unknown key `{axis}` for {}", self.pipeline_kind()))?;
                    let values = raw
                        .split(';')
                        .map(|v| Value::parse(def.ty, v).map_err(|e| format!("{key}: {e}")))
                        .collect::<Result<Vec<_>, _>>()?;
                    if values.is_empty() || raw.is_empty() {
                        return Err(format!("{key}: empty axis"));
                    }
                    match self.grid.iter_mut().find(|(k, _)| k == axis) {
                        Some(slot) => slot.1 = values,
                        None => self.grid.push((axis.to_string(), values)),
                    }
                    return Ok(());
                }
                let def = self.def(key).ok_or_else(|| format!("unknown key `{key}` for {}", self.pipeline_kind()))?;
                let v = Value::parse(def.ty, raw).map_err(|e| format!("{key}: {e}"))?;
                self.params.insert(key.to_string(), v);
            }
        }
        Ok(())
    }

    /// Canonical config text; parses back to an equal spec.
    pub fn to_config(&self) -> String {
        let mut s = format!("kind={}\n", self.kind);
        if let Some(of) = self.of {
            s += &format!("of={of}\n");
        }
        s += &format!("seed={}\nreps={}\n", self.master_seed, self.replicates);
        if let Some(t) = self.threads {
            s += &format!("threads={t}\n");
        }
        if let Some(o) = &self.out {
            s += &format!("out={}\n", o.display());
        }
        for d in self.schema() {
            s += &format!("{}={}\n", d.key, self.params[d.key]);
        }
        for (k, vs) in &self.grid {
            let vs: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
            s += &format!("vary.{k}={}\n", vs.join(";"));
        }
        s
    }

    pub fn int(&self, key: &str) -> u64 {
        match self.params.get(key) {
            Some(Value::Int(v)) => *v,
            other => panic!("parameter `{key}` is not an integer: {other:?}"),
        }
    }
}

/// Parse `key=value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, HarnessError> {
    let mut entries: Vec<(usize, &str, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(HarnessError::Config {
            line: lineno,
            message: format!("expected key=value, got `{line}`"),
        })?;
        let k = k.trim();
        if let Some(&(first, _, _)) = entries.iter().find(|(_, key, _)| *key == k) {
            return Err(HarnessError::Config {
                line: lineno,
                message: format!("duplicate key `{k}` (first set on line {first})"),
            });
        }
        entries.push((lineno, k, v.trim()));
    }
    let &(kline, _, kraw) = entries
        .iter()
        .find(|(_, k, _)| *k == "kind")
        .ok_or(HarnessError::Config {
            line: 0,
            message: "missing `kind`".into(),
        })?;
    let kind: Kind = kraw.parse().map_err(|message| HarnessError::Config { line: kline, message })?;
    let mut spec = ExperimentSpec::new(kind);
    // `of` decides which keys exist, so it goes first
    let ordered = entries
        .iter()
        .filter(|(_, k, _)| *k == "of")
        .chain(entries.iter().filter(|(_, k, _)| *k != "of" && *k != "kind"));
    for &(line, k, v) in ordered {
        if k == "of" && kind != Kind::Sweep {
            return Err(HarnessError::Config {
                line,
                message: "unknown key `of` (only valid for sweep)".into(),
            });
        }
        spec.set(k, v).map_err(|message| HarnessError::Config { line, message })?;
    }
    Ok(spec)
}

pub fn is_global_key(key: &str) -> bool {
    GLOBAL_KEYS.contains(&key)
}

/// `--help` text listing every kind and its parameters with defaults.
pub fn help_text() -> String {
    let mut s = String::from(
        "usage: irrigation-lab <kind> [--key value]... [--config file] [--out path] [--seed u64] [--reps N] [--threads N]\n\n\
         Writes one CSV row per replicate plus mean, sd and count rows, to --out or stdout.\n\
         With --out, a JSON summary is written next to it (same name, .json).\n\
         Config files hold key=value lines (# comments); command-line flags override them.\n\
         Sweeps take --of <kind> and one or more --vary.<key> 'v1;v2;...' axes.\n\
         Defaults: --seed 1, --reps 1, threads = all cores.\n\
         Exit codes: 0 ok, 2 usage error, 3 runtime error.\n",
    );
    for kind in Kind::ALL {
        s += &format!("\n{kind}: {}\n", kind.about());
        if kind == Kind::Sweep {
            s += "  --of <kind>  (default giant)\n  --vary.<key> 'v1;v2;...'\n";
        }
        for d in schema(kind) {
            let default = if d.default.is_empty() { "\"\"" } else { d.default };
            s += &format!("  --{:<20} {} (default {default})\n", d.key, d.doc);
        }
    }
    s
}
