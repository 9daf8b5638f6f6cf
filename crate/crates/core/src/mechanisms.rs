//! Random Dictatorship, Random Referee and Random Oligarchy.
//!
//! Each mechanism exists in two forms: an exact outcome distribution, found
//! by enumerating every ordered draw of agents, and a sampler that plays the
//! mechanism out through favorite and comparison queries.
//!
//! Exact enumeration costs `O(n³)` for the three-agent mechanisms and is
//! refused above [`EXACT_AGENT_LIMIT`] agents by callers that accept
//! arbitrary input.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::MetricInstance;
use crate::random::seeded;

pub const EXACT_AGENT_LIMIT: usize = 300;

const PROB_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mechanism {
    RandomDictatorship,
    RandomReferee,
    RandomOligarchy,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [
        Mechanism::RandomDictatorship,
        Mechanism::RandomReferee,
        Mechanism::RandomOligarchy,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Mechanism::RandomDictatorship => "rd",
            Mechanism::RandomReferee => "rr",
            Mechanism::RandomOligarchy => "ro",
        }
    }

    /// Largest number of queries a single run may issue.
    pub fn max_queries(self) -> usize {
        match self {
            Mechanism::RandomDictatorship => 1,
            Mechanism::RandomReferee | Mechanism::RandomOligarchy => 3,
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rd" => Ok(Mechanism::RandomDictatorship),
            "rr" => Ok(Mechanism::RandomReferee),
            "ro" => Ok(Mechanism::RandomOligarchy),
            other => Err(Error::Domain(format!(
                "unknown mechanism `{other}` (expected rd, rr or ro)"
            ))),
        }
    }
}

/// Probability of each alternative being the outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("empty distribution".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Domain(format!("invalid probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Domain(format!("probabilities sum to {total}")));
        }
        Ok(OutcomeDistribution { probs })
    }

    pub fn point_mass(alternatives: usize, a: usize) -> Self {
        let mut probs = vec![0.0; alternatives];
        probs[a] = 1.0;
        OutcomeDistribution { probs }
    }

    fn from_counts(counts: &[u64], total: u64) -> Self {
        let denom = total as f64;
        OutcomeDistribution {
            probs: counts.iter().map(|&c| c as f64 / denom).collect(),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, a: usize) -> f64 {
        self.probs[a]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Alternatives with positive probability, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len()).filter(|&a| self.probs[a] > 0.0).collect()
    }

    pub fn total_variation(&self, other: &OutcomeDistribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
    }
}

pub fn rd_distribution(inst: &MetricInstance) -> OutcomeDistribution {
    let mut counts = vec![0u64; inst.alternatives()];
    for fav in inst.favorites() {
        counts[fav] += 1;
    }
    OutcomeDistribution::from_counts(&counts, inst.agents() as u64)
}

/// Sums per-proposer count vectors; integer addition keeps the result
/// independent of how rayon splits the work.
fn enumerate_first_agent<F>(inst: &MetricInstance, per_u: F) -> Vec<u64>
where
    F: Fn(usize, &mut [u64]) + Sync,
{
    let m = inst.alternatives();
    (0..inst.agents())
        .into_par_iter()
        .map(|u| {
            let mut counts = vec![0u64; m];
            per_u(u, &mut counts);
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

/// Exact Random Referee law: every ordered triple `(u, v, w)` has weight
/// `1/n³`, and `w` picks whichever of `p_u`, `p_v` it is nearer to.
pub fn rr_distribution(inst: &MetricInstance) -> OutcomeDistribution {
    let n = inst.agents();
    let fav = inst.favorites();
    let counts = enumerate_first_agent(inst, |u, counts| {
        for v in 0..n {
            let (pu, pv) = (fav[u], fav[v]);
            for w in 0..n {
                let out = if pu == pv {
                    pu
                } else {
                    inst.compare_unchecked(w, pu, pv)
                };
                counts[out] += 1;
            }
        }
    });
    OutcomeDistribution::from_counts(&counts, (n * n * n) as u64)
}

/// Exact Random Oligarchy law. Counts are kept in thirds so the
/// no-majority split stays integral.
pub fn ro_distribution(inst: &MetricInstance) -> OutcomeDistribution {
    let n = inst.agents();
    let fav = inst.favorites();
    let counts = enumerate_first_agent(inst, |u, counts| {
        for v in 0..n {
            for w in 0..n {
                let (a, b, c) = (fav[u], fav[v], fav[w]);
                if a == b || a == c {
                    counts[a] += 3;
                } else if b == c {
                    counts[b] += 3;
                } else {
                    counts[a] += 1;
                    counts[b] += 1;
                    counts[c] += 1;
                }
            }
        }
    });
    OutcomeDistribution::from_counts(&counts, 3 * (n * n * n) as u64)
}

pub fn distribution(inst: &MetricInstance, mechanism: Mechanism) -> OutcomeDistribution {
    match mechanism {
        Mechanism::RandomDictatorship => rd_distribution(inst),
        Mechanism::RandomReferee => rr_distribution(inst),
        Mechanism::RandomOligarchy => ro_distribution(inst),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Query {
    Favorite { agent: usize, answer: usize },
    Compare { agent: usize, a: usize, b: usize, answer: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MechanismRun {
    pub chosen: usize,
    pub queries_used: usize,
    pub transcript: Vec<Query>,
}

/// One seeded run of `mechanism`, replayable bit-for-bit from `seed`.
pub fn sample(inst: &MetricInstance, mechanism: Mechanism, seed: u64) -> MechanismRun {
    sample_with(inst, mechanism, &mut seeded(seed))
}

pub fn sample_with<R: Rng>(inst: &MetricInstance, mechanism: Mechanism, rng: &mut R) -> MechanismRun {
    let n = inst.agents();
    let mut transcript = Vec::with_capacity(3);
    let ask_favorite = |rng: &mut R, transcript: &mut Vec<Query>| {
        let agent = rng.gen_range(0..n);
        let answer = inst.favorite_unchecked(agent);
        transcript.push(Query::Favorite { agent, answer });
        answer
    };
    let chosen = match mechanism {
        Mechanism::RandomDictatorship => ask_favorite(rng, &mut transcript),
        Mechanism::RandomReferee => {
            let a = ask_favorite(rng, &mut transcript);
            let b = ask_favorite(rng, &mut transcript);
            // The referee is drawn even when the proposals agree so that the
            // RNG stream does not depend on the answers.
            let agent = rng.gen_range(0..n);
            if a == b {
                a
            } else {
                let answer = inst.compare_unchecked(agent, a, b);
                transcript.push(Query::Compare { agent, a, b, answer });
                answer
            }
        }
        Mechanism::RandomOligarchy => {
            let a = ask_favorite(rng, &mut transcript);
            let b = ask_favorite(rng, &mut transcript);
            let c = ask_favorite(rng, &mut transcript);
            let pick = rng.gen_range(0..3);
            if a == b || a == c {
                a
            } else if b == c {
                b
            } else {
                [a, b, c][pick]
            }
        }
    };
    MechanismRun {
        chosen,
        queries_used: transcript.len(),
        transcript,
    }
}

/// Outcome of one run without recording a transcript; `fav` is the
/// precomputed favorite of every agent.
pub(crate) fn draw_outcome<R: Rng>(
    inst: &MetricInstance,
    fav: &[usize],
    mechanism: Mechanism,
    rng: &mut R,
) -> usize {
    let n = fav.len();
    match mechanism {
        Mechanism::RandomDictatorship => fav[rng.gen_range(0..n)],
        Mechanism::RandomReferee => {
            let a = fav[rng.gen_range(0..n)];
            let b = fav[rng.gen_range(0..n)];
            let w = rng.gen_range(0..n);
            if a == b {
                a
            } else {
                inst.compare_unchecked(w, a, b)
            }
        }
        Mechanism::RandomOligarchy => {
            let a = fav[rng.gen_range(0..n)];
            let b = fav[rng.gen_range(0..n)];
            let c = fav[rng.gen_range(0..n)];
            let pick = rng.gen_range(0..3);
            if a == b || a == c {
                a
            } else if b == c {
                b
            } else {
                [a, b, c][pick]
            }
        }
    }
}
