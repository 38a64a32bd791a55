//! Closed-form thresholds and tail bounds.
//!
//! Probability bounds are reported raw and clipped to `[0, 1]`; a bound whose
//! raw value reaches 1 is flagged vacuous.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::cell_params;

const SOLVER_RESIDUAL: f64 = 1e-10;

/// A probability bound before and after clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bound {
    pub raw: f64,
    pub value: f64,
    pub vacuous: bool,
}

impl Bound {
    /// Upper bound on a probability: vacuous once it reaches 1.
    pub fn upper(raw: f64) -> Self {
        Self {
            raw,
            value: raw.clamp(0.0, 1.0),
            vacuous: raw >= 1.0,
        }
    }

    /// Lower bound on a probability: vacuous once it drops to 0.
    pub fn lower(raw: f64) -> Self {
        Self {
            raw,
            value: raw.clamp(0.0, 1.0),
            vacuous: raw <= 0.0,
        }
    }
}

/// Connectivity radius of the random geometric graph, `√(log n/(nπ))`.
pub fn rgg_connectivity_radius(n: f64) -> Result<f64> {
    if n < 3.0 {
        return Err(invalid("n", format!("{n} < 3")));
    }
    Ok((n.ln() / (n * PI)).sqrt())
}

/// Connectivity threshold of the irrigation graph, `√(2 log n / log log n)`.
pub fn irrigation_connectivity_threshold(n: f64) -> Result<f64> {
    let ll = n.ln().ln();
    if !(ll > 0.0) {
        return Err(invalid("n", format!("{n} too small: log log n ≤ 0")));
    }
    Ok((2.0 * n.ln() / ll).sqrt())
}

/// `(n log n)^{-1/3}`: the radius below which the `xi ≡ 1` component bound applies.
pub fn xi_one_radius_limit(n: f64) -> f64 {
    (n * n.ln()).powf(-1.0 / 3.0)
}

/// `P(Bin(k, p) ≥ u k p) ≤ exp(k p (u - 1 - u log u))` for `u > 1`.
pub fn chernoff_upper(k: f64, p: f64, u: f64) -> Result<f64> {
    if !(u > 1.0) {
        return Err(invalid("u", format!("{u} must exceed 1")));
    }
    if !(k * p > 0.0) {
        return Err(invalid("k,p", "k·p must be positive"));
    }
    Ok((k * p * (u - 1.0 - u * u.ln())).exp())
}

/// `P(|Bin(n, p) - np| ≥ δ np) ≤ 2 exp(-np δ²/3)`.
pub fn binomial_concentration(n: f64, p: f64, delta: f64) -> Result<Bound> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} not in (0,1)")));
    }
    Ok(Bound::upper(2.0 * (-n * p * delta * delta / 3.0).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBoundInputs {
    pub n: f64,
    pub r: f64,
    pub t: f64,
    pub eps: f64,
}

impl TailBoundInputs {
    pub fn new(n: f64, r: f64, t: f64, eps: f64) -> Result<Self> {
        if !(t >= 1.0) {
            return Err(invalid("t", format!("{t} < 1")));
        }
        if !(eps > 0.0) {
            return Err(invalid("eps", format!("{eps} ≤ 0")));
        }
        if !(r > 0.0 && r < 0.5) {
            return Err(invalid("r", format!("{r} not in (0, 1/2)")));
        }
        if !(n >= 2.0) {
            return Err(invalid("n", format!("{n} < 2")));
        }
        Ok(Self { n, r, t, eps })
    }
}

/// Tail bound on the largest component of the `xi ≡ 1` graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C1TailBound {
    /// `2 + (1 + t n r²)³ (1 + ε)² log² n`
    pub threshold: f64,
    /// `n^{-ε + 1/(1 + t n r²)}`
    pub first_term: f64,
    /// `n² exp((n-2) π r² (t - 1 - t log t))`
    pub second_term: f64,
    pub bound: Bound,
    /// `t = 1` makes the second term equal to `n²`.
    pub t_trivial: bool,
}

pub fn c1_tail_bound(inp: &TailBoundInputs) -> C1TailBound {
    let TailBoundInputs { n, r, t, eps } = *inp;
    let tnr2 = t * n * r * r;
    let ln = n.ln();
    let threshold = 2.0 + (1.0 + tnr2).powi(3) * (1.0 + eps).powi(2) * ln * ln;
    let first_term = n.powf(-eps + 1.0 / (1.0 + tnr2));
    let second_term = n * n * ((n - 2.0) * PI * r * r * (t - 1.0 - t * t.ln())).exp();
    C1TailBound {
        threshold,
        first_term,
        second_term,
        bound: Bound::upper(first_term + second_term),
        t_trivial: t == 1.0,
    }
}

fn t_equation(t: f64) -> f64 {
    t * t.ln() + 1.0 - t
}

/// Root `t > 1` of `t log t + 1 - t = rhs`.
pub fn solve_t_rhs(rhs: f64) -> Result<f64> {
    if !(rhs > 0.0 && rhs.is_finite()) {
        return Err(invalid("rhs", format!("{rhs} must be positive and finite")));
    }
    let mut lo = 1.0 + 1e-9;
    let mut hi = t_zero().max(rhs + 2.0);
    while t_equation(lo) > rhs {
        // rhs is tiny; the root sits just above 1
        lo = 1.0 + (lo - 1.0) / 2.0;
        if lo <= 1.0 {
            return Err(invalid("rhs", "root not representable"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_equation(mid) < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..8 {
        let res = t_equation(t) - rhs;
        if res.abs() < SOLVER_RESIDUAL * 1e-2 {
            break;
        }
        t -= res / t.ln();
    }
    Ok(t)
}

/// `t` with `t log t + 1 - t = 3 log n/(π n r²)`.
pub fn solve_t(n: f64, r: f64) -> Result<f64> {
    if !(n > 1.0 && r > 0.0) {
        return Err(invalid("n,r", "need n > 1 and r > 0"));
    }
    solve_t_rhs(3.0 * n.ln() / (PI * n * r * r))
}

/// Residual of [`solve_t`]'s equation at `t`.
pub fn t_residual(n: f64, r: f64, t: f64) -> f64 {
    t_equation(t) - 3.0 * n.ln() / (PI * n * r * r)
}

/// The root `t₀ > 1` of `t log t = t + 1`.
pub fn t_zero() -> f64 {
    let f = |t: f64| t * t.ln() - t - 1.0;
    let (mut lo, mut hi) = (2.0f64, 5.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..3 {
        t -= f(t) / t.ln();
    }
    t
}

/// `1 - exp(-|R| / (10 β d²)^{kd})` with `β = (1+δ)(1/(2d) + k/(16d²))`.
pub fn link_event_bound(r_size: usize, k: usize, d: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.25) {
        return Err(invalid("delta", format!("{delta} not in (0, 1/4)")));
    }
    if k == 0 || d == 0 {
        return Err(invalid("k,d", "must be positive"));
    }
    let (kf, df) = (k as f64, d as f64);
    let beta = (1.0 + delta) * (1.0 / (2.0 * df) + kf / (16.0 * df * df));
    let eta = (10.0 * beta * df * df).powf(-(kf * df));
    Ok(1.0 - (-(r_size as f64) * eta).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaGoodBound {
    pub m: usize,
    /// `γ² δ² / (24 d²)`
    pub exponent: f64,
    /// `2 (m k d)² n^{-exponent}`, kept separately since `1 -` it rounds to 1.
    pub failure_mass: f64,
    pub bound: Bound,
    /// `γ² δ² > 24 d²`: every cell is good with probability tending to one.
    pub all_cells_regime: bool,
}

/// `1 - 2 (m k d)² n^{-γ²δ²/(24d²)}` with `m` from `r = γ √(log n/n)`.
pub fn delta_good_prob_bound(n: usize, gamma: f64, delta: f64, k: usize, d: usize) -> Result<DeltaGoodBound> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} not in (0,1)")));
    }
    if !(gamma > 0.0) || n < 2 || d == 0 {
        return Err(invalid("gamma,n,d", "need gamma > 0, n ≥ 2, d ≥ 1"));
    }
    let nf = n as f64;
    let r = gamma * (nf.ln() / nf).sqrt();
    let (m, _) = cell_params(r, k).map_err(|e| match e {
        Error::InvalidParameter { reason, .. } => invalid("gamma", format!("radius {r}: {reason}")),
        other => other,
    })?;
    let df = d as f64;
    let exponent = gamma * gamma * delta * delta / (24.0 * df * df);
    let mkd = (m * k * d) as f64;
    let failure_mass = 2.0 * mkd * mkd * nf.powf(-exponent);
    Ok(DeltaGoodBound {
        m,
        exponent,
        failure_mass,
        bound: Bound::lower(1.0 - failure_mass),
        all_cells_regime: gamma * gamma * delta * delta > 24.0 * df * df,
    })
}
