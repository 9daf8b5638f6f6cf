//! Distortion and squared distortion, the referee bound checker, and the
//! analytic distortion bounds for favorite-only mechanisms.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mechanisms::{draw_outcome, Mechanism, OutcomeDistribution};
use crate::metric::{MetricInstance, METRIC_TOL};
use crate::random::{derive_seed, seeded};

/// Which power of the cost ratio is averaged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Moment {
    First,
    Second,
}

impl Moment {
    pub fn from_order(k: u32) -> Result<Self> {
        match k {
            1 => Ok(Moment::First),
            2 => Ok(Moment::Second),
            _ => Err(Error::Domain(format!("moment must be 1 or 2, got {k}"))),
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Moment::First => 1,
            Moment::Second => 2,
        }
    }

    fn apply(self, ratio: f64) -> f64 {
        match self {
            Moment::First => ratio,
            Moment::Second => ratio * ratio,
        }
    }
}

/// `SC(a) / SC(a*)` for every alternative.
pub fn cost_ratios(inst: &MetricInstance) -> Result<Vec<f64>> {
    let (_, opt) = inst.optimal_alternative();
    if opt == 0.0 {
        return Err(Error::DegenerateInstance);
    }
    Ok(inst.social_costs().into_iter().map(|c| c / opt).collect())
}

fn check_len(inst: &MetricInstance, dist: &OutcomeDistribution) -> Result<()> {
    if dist.len() != inst.alternatives() {
        return Err(Error::Domain(format!(
            "distribution over {} alternatives for an instance with {}",
            dist.len(),
            inst.alternatives()
        )));
    }
    Ok(())
}

/// `E[(SC(a)/SC(a*))^k]` with `a` drawn from `dist`.
pub fn expected_distortion(inst: &MetricInstance, dist: &OutcomeDistribution, moment: Moment) -> Result<f64> {
    check_len(inst, dist)?;
    let ratios = cost_ratios(inst)?;
    Ok(dist
        .probs()
        .iter()
        .zip(&ratios)
        .map(|(p, r)| p * moment.apply(*r))
        .sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistortionReport {
    pub distortion: f64,
    pub squared_distortion: f64,
    pub opt_alternative: usize,
    pub opt_cost: f64,
}

pub fn distortion_report(inst: &MetricInstance, dist: &OutcomeDistribution) -> Result<DistortionReport> {
    let (opt_alternative, opt_cost) = inst.optimal_alternative();
    Ok(DistortionReport {
        distortion: expected_distortion(inst, dist, Moment::First)?,
        squared_distortion: expected_distortion(inst, dist, Moment::Second)?,
        opt_alternative,
        opt_cost,
    })
}

/// A quadruple `(u, v, w, x)` for which the referee outcome lies further
/// from `x` than the bound `Z_x + 2·α_uvw` allows.
#[derive(Clone, Debug, PartialEq)]
pub struct RefereeBoundViolation {
    pub u: usize,
    pub v: usize,
    pub w: usize,
    pub x: usize,
    pub distance: f64,
    pub bound: f64,
}

/// `α_uvw = min(max(Z_u, Z_v), Z_w + min(Z_u, Z_v))`.
pub fn referee_alpha(zu: f64, zv: f64, zw: f64) -> f64 {
    zu.max(zv).min(zw + zu.min(zv))
}

/// Checks, for every ordered quadruple of agents, that the outcome
/// `C({p_u, p_v}, w)` is within `Z_x + 2·α_uvw` of `x`, where
/// `Z_y = d(y, a*)`. Holds on every metric; returns the violations in
/// lexicographic order.
pub fn referee_bound_violations(inst: &MetricInstance) -> Vec<RefereeBoundViolation> {
    let n = inst.agents();
    let (opt, _) = inst.optimal_alternative();
    let z: Vec<f64> = (0..n).map(|u| inst.cost(u, opt)).collect();
    let fav = inst.favorites();
    (0..n)
        .into_par_iter()
        .flat_map_iter(|u| {
            let mut out = Vec::new();
            for v in 0..n {
                for w in 0..n {
                    let c = if fav[u] == fav[v] {
                        fav[u]
                    } else {
                        inst.compare_unchecked(w, fav[u], fav[v])
                    };
                    let alpha = referee_alpha(z[u], z[v], z[w]);
                    for x in 0..n {
                        let distance = inst.cost(x, c);
                        let bound = z[x] + 2.0 * alpha;
                        if distance > bound + METRIC_TOL {
                            out.push(RefereeBoundViolation { u, v, w, x, distance, bound });
                        }
                    }
                }
            }
            out
        })
        .collect()
}

const COARSE_SCAN: usize = 10_000;
const DENSE_SCAN: usize = 100_000;
const GOLDEN_TOL: f64 = 1e-10;
/// Left end used in place of the open endpoint `p = 0`.
const P_MIN: f64 = 1e-12;

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > GOLDEN_TOL {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let p = 0.5 * (lo + hi);
    (p, f(p))
}

/// Grid scan over `points` evenly spaced abscissae of `[lo, 1]`, then
/// golden-section refinement within one grid step of the best one. Also
/// probes both endpoints, where the supremum may sit.
fn scan_then_refine<F: Fn(f64) -> f64>(f: &F, lo: f64, points: usize) -> f64 {
    let step = (1.0 - lo) / points as f64;
    let mut best = (lo, f(lo));
    for i in 1..=points {
        let p = lo + step * i as f64;
        let v = f(p);
        if v > best.1 {
            best = (p, v);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(1.0);
    let (_, refined) = golden_max(f, a, b);
    best.1.max(refined)
}

/// Inner expression of the Random Oligarchy bound:
/// `1 + p²(p−2) + (p−1)³/(m−1)`.
pub fn oligarchy_objective(m: u64, p: f64) -> f64 {
    1.0 + p * p * (p - 2.0) + (p - 1.0).powi(3) / (m - 1) as f64
}

/// Distortion upper bound of Random Oligarchy with `m ≥ 2` alternatives.
pub fn oligarchy_bound(m: u64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain(format!("need at least 2 alternatives, got {m}")));
    }
    let f = |p: f64| oligarchy_objective(m, p);
    Ok(1.0 + 2.0 * scan_then_refine(&f, 0.0, COARSE_SCAN))
}

/// `1 + 2·sup_{p∈(0,1]} mf(p)(1−p)/p`, where `mf(p)` bounds the largest
/// probability a mechanism gives an alternative that is the favorite of a
/// `p` fraction of the agents.
pub fn mf_bound_distortion<F: Fn(f64) -> f64>(mf: F) -> f64 {
    let g = |p: f64| mf(p) * (1.0 - p) / p;
    1.0 + 2.0 * scan_then_refine(&g, P_MIN, DENSE_SCAN)
}

/// Coarse Random Oligarchy bound on `m_f`: `−p³ + p² + p`.
pub fn oligarchy_mf_coarse(p: f64) -> f64 {
    -p * p * p + p * p + p
}

/// `m_f` bound accounting for `m` alternatives:
/// `−p³ + p² + p − p(p−1)²/(m−1)`.
pub fn oligarchy_mf_refined(m: u64, p: f64) -> f64 {
    oligarchy_mf_coarse(p) - p * (p - 1.0) * (p - 1.0) / (m - 1) as f64
}

const FAVORITE_ONLY_LOWER: [(u64, f64); 9] = [
    (2, 2.0),
    (3, 2.333),
    (4, 2.5),
    (5, 2.6),
    (6, 2.666),
    (7, 2.714),
    (8, 2.75),
    (9, 2.777),
    (10, 2.8),
];

const TWO_AGREE_UPPER: [(u64, f64); 9] = [
    (2, 2.056),
    (3, 2.334),
    (4, 2.551),
    (5, 2.734),
    (6, 2.896),
    (7, 3.043),
    (8, 3.178),
    (9, 3.304),
    (10, 3.422),
];

fn lookup(table: &[(u64, f64)], m: u64, what: &str) -> Result<f64> {
    table
        .iter()
        .find(|(k, _)| *k == m)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::NotAvailable(format!("{what} is tabulated for 2..=10 alternatives only, got {m}")))
}

/// Published lower bound on the distortion of any favorite-only mechanism.
///
/// The tabulated values coincide with `3 − 2/m` to three decimals; only the
/// table is exposed.
pub fn favorite_only_lower_bound(m: u64) -> Result<f64> {
    lookup(&FAVORITE_ONLY_LOWER, m, "favorite-only lower bound")
}

/// Published distortion upper bound of the 2-Agree mechanism (reference data).
pub fn two_agree_upper_bound(m: u64) -> Result<f64> {
    lookup(&TWO_AGREE_UPPER, m, "2-Agree upper bound")
}

/// A bound as a function of the number of alternatives.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCurve {
    pub entries: Vec<(u64, f64)>,
}

impl BoundCurve {
    pub fn oligarchy(m_max: u64) -> Result<Self> {
        if m_max < 2 {
            return Err(Error::Domain(format!("m_max must be at least 2, got {m_max}")));
        }
        let entries = (2..=m_max)
            .into_par_iter()
            .map(|m| oligarchy_bound(m).map(|v| (m, v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundCurve { entries })
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].1 <= w[1].1)
    }

    /// CSV with header `m,lower_bound,random_oligarchy`; the lower bound
    /// column is empty where no value is tabulated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,lower_bound,random_oligarchy\n");
        for &(m, ro) in &self.entries {
            let lower = favorite_only_lower_bound(m)
                .map(|v| v.to_string())
                .unwrap_or_default();
            writeln!(out, "{m},{lower},{ro}").expect("writing to a String");
        }
        out
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    /// `NaN` for a single sample.
    pub std_error: f64,
}

/// Samples per RNG stream; stream `i` is seeded with `derive_seed(seed, i)`
/// so results do not depend on the thread count.
pub const MC_STREAM_LEN: u64 = 1 << 16;

/// Outcome counts from `samples` independent runs of `mechanism`.
pub fn monte_carlo_counts(inst: &MetricInstance, mechanism: Mechanism, samples: u64, seed: u64) -> Vec<u64> {
    let m = inst.alternatives();
    let fav = inst.favorites();
    let streams = samples.div_ceil(MC_STREAM_LEN);
    (0..streams)
        .into_par_iter()
        .map(|i| {
            let len = MC_STREAM_LEN.min(samples - i * MC_STREAM_LEN);
            let mut rng = seeded(derive_seed(seed, i));
            let mut counts = vec![0u64; m];
            for _ in 0..len {
                counts[draw_outcome(inst, &fav, mechanism, &mut rng)] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; m],
            |mut acc, c| {
                for (x, y) in acc.iter_mut().zip(c) {
                    *x += y;
                }
                acc
            },
        )
}

/// Sample mean of `(SC(chosen)/SC(a*))^k` over `samples` seeded runs.
pub fn monte_carlo_distortion(
    inst: &MetricInstance,
    mechanism: Mechanism,
    samples: u64,
    seed: u64,
    moment: Moment,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let ratios = cost_ratios(inst)?;
    let counts = monte_carlo_counts(inst, mechanism, samples, seed);
    let n = samples as f64;
    let values: Vec<f64> = ratios.iter().map(|r| moment.apply(*r)).collect();
    let mean = counts
        .iter()
        .zip(&values)
        .map(|(&c, v)| c as f64 * v)
        .sum::<f64>()
        / n;
    let std_error = if samples == 1 {
        f64::NAN
    } else {
        let ss: f64 = counts
            .iter()
            .zip(&values)
            .map(|(&c, v)| c as f64 * (v - mean) * (v - mean))
            .sum();
        (ss / (n - 1.0) / n).sqrt()
    };
    Ok(McEstimate { estimate: mean, std_error })
}
