//! Randomized property suites over seeded random instances.

use std::fmt;
use std::str::FromStr;

use crate::analysis::{distortion_report, referee_bound_violations};
use crate::error::{Error, Result};
use crate::mechanisms::{distribution, Mechanism};
use crate::metric::MetricInstance;
use crate::random::{derive_seed, random_instance, seeded};

/// Largest agent and alternative count drawn by the suites.
pub const SUITE_MAX_SIZE: usize = 8;
/// Ceiling on the referee rule's squared distortion.
pub const SQUARED_BOUND: f64 = 21.0;
/// Slack on floating comparisons.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// Every agent quadruple respects the referee outcome bound.
    RefereeBound,
    /// Squared distortion is at least the squared distortion-of-the-mean,
    /// for all three mechanisms.
    Jensen,
    /// Referee squared distortion at most 21 and distortion at most √21.
    SquaredBound,
    All,
}

impl Suite {
    pub fn id(self) -> &'static str {
        match self {
            Suite::RefereeBound => "referee-bound",
            Suite::Jensen => "jensen",
            Suite::SquaredBound => "squared-bound",
            Suite::All => "all",
        }
    }

    fn parts(self) -> &'static [Suite] {
        match self {
            Suite::All => &[Suite::RefereeBound, Suite::Jensen, Suite::SquaredBound],
            Suite::RefereeBound => &[Suite::RefereeBound],
            Suite::Jensen => &[Suite::Jensen],
            Suite::SquaredBound => &[Suite::SquaredBound],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "referee-bound" | "lemma2" => Ok(Suite::RefereeBound),
            "jensen" => Ok(Suite::Jensen),
            "squared-bound" | "theorem2" => Ok(Suite::SquaredBound),
            "all" => Ok(Suite::All),
            _ => Err(Error::Domain(format!(
                "unknown suite {s:?} (expected referee-bound, jensen, squared-bound or all)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteReport {
    pub instances: usize,
    /// Instances whose optimum costs zero, where ratios are undefined.
    pub skipped: usize,
    pub max_squared: f64,
    pub max_distortion: f64,
    pub violations: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The `index`-th instance of a suite run.
pub fn suite_instance(seed: u64, index: u64) -> MetricInstance {
    random_instance(&mut seeded(derive_seed(seed, index)), SUITE_MAX_SIZE)
}

fn check_one(suite: Suite, inst: &MetricInstance, index: usize, report: &mut SuiteReport) -> Result<()> {
    match suite {
        Suite::RefereeBound => {
            if let Some(v) = referee_bound_violations(inst).first() {
                report.violations.push(format!(
                    "instance {index}: agents (u,v,w,x) = ({},{},{},{}) at distance {} > bound {}",
                    v.u, v.v, v.w, v.x, v.distance, v.bound
                ));
            }
        }
        Suite::Jensen => {
            for mech in Mechanism::ALL {
                let r = distortion_report(inst, &distribution(inst, mech))?;
                if r.squared_distortion < r.distortion * r.distortion - CHECK_TOL {
                    report.violations.push(format!(
                        "instance {index}: {mech} squared distortion {} < distortion² {}",
                        r.squared_distortion,
                        r.distortion * r.distortion
                    ));
                }
            }
        }
        Suite::SquaredBound => {
            let r = distortion_report(inst, &distribution(inst, Mechanism::RandomReferee))?;
            report.max_squared = report.max_squared.max(r.squared_distortion);
            report.max_distortion = report.max_distortion.max(r.distortion);
            if r.squared_distortion > SQUARED_BOUND + CHECK_TOL {
                report.violations.push(format!("instance {index}: squared distortion {}", r.squared_distortion));
            }
            if r.distortion > SQUARED_BOUND.sqrt() + CHECK_TOL {
                report.violations.push(format!("instance {index}: distortion {}", r.distortion));
            }
        }
        Suite::All => unreachable!("expanded by the caller"),
    }
    Ok(())
}

/// Runs `suite` on `count` instances drawn from sub-seeds of `seed`.
pub fn run_suite(suite: Suite, seed: u64, count: usize) -> SuiteReport {
    let mut report = SuiteReport::default();
    for index in 0..count {
        let inst = suite_instance(seed, index as u64);
        report.instances += 1;
        if inst.optimal_alternative().1 == 0.0 {
            report.skipped += 1;
            continue;
        }
        for &part in suite.parts() {
            if let Err(e) = check_one(part, &inst, index, &mut report) {
                report.violations.push(format!("instance {index}: {e}"));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_aliases() {
        for s in [Suite::RefereeBound, Suite::Jensen, Suite::SquaredBound, Suite::All] {
            assert_eq!(s.id().parse::<Suite>().unwrap(), s);
        }
        assert_eq!("lemma2".parse::<Suite>().unwrap(), Suite::RefereeBound);
        assert_eq!("theorem2".parse::<Suite>().unwrap(), Suite::SquaredBound);
        assert!("lemma9".parse::<Suite>().is_err());
    }

    #[test]
    fn empty_run_passes() {
        let r = run_suite(Suite::All, 1, 0);
        assert!(r.passed());
        assert_eq!(r.instances, 0);
    }

    #[test]
    fn small_runs_pass_and_repeat() {
        let a = run_suite(Suite::All, 9, 25);
        assert!(a.passed(), "{:?}", a.violations);
        assert_eq!(a, run_suite(Suite::All, 9, 25));
        assert!(a.max_squared >= 1.0);
    }
}
