//! Acceptance criteria, one PASS/FAIL line each. Tolerances are pinned
//! below. Set `REFEREE_LONG=1` to also run the full search at δ = 1/75.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use referee::adversarial::{
    build_star_instance, build_topk_squared_instance, chord, optimal_ordinal_mixture, star_regret, StarFamily,
    StarGeometry, StarVariant,
};
use referee::analysis::{
    expected_distortion, monte_carlo_distortion, mf_bound_distortion, oligarchy_bound, oligarchy_mf_refined,
    Moment,
};
use referee::checks::{run_suite, Suite, SQUARED_BOUND};
use referee::mechanisms::{distribution, rd_distribution, rr_distribution, Mechanism};
use referee::metric::{Geometry, Point};
use referee::plane::{
    certification_threshold, certify_plane_bound, geometric_median, optimality_residual, pessimistic_distortion,
    run_search, PlanarConfig, SearchMode, SearchOptions, SearchOutcome, TARGET_BOUND,
};
use referee::random::{random_colocated_instance, random_instance, random_point};

const REFEREE_BOUND_TOL: f64 = 1e-9;
const MIXTURE_LIMIT_TOL: f64 = 1e-3;
const MIXTURE_GRID_TOL: f64 = 1e-4;
const CIRCLE_CHORD_TOL: f64 = 1e-9;
const CURVE_TOL: f64 = 2e-3;
const CURVE_PATHS_TOL: f64 = 1e-6;
const COLLINEAR_TOL: f64 = 0.01;
const THRESHOLD_TOL: f64 = 5e-4;
const MEDIAN_GRID_TOL: f64 = 1e-4;
const MEDIAN_RESIDUAL_TOL: f64 = 1e-8;
const LINKAGE_TOL: f64 = 1e-9;
const MC_SIGMAS: f64 = 3.0;

const CURVE_VALUES: [f64; 9] = [2.056, 2.359, 2.515, 2.609, 2.673, 2.719, 2.753, 2.780, 2.802];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn referee_bound() -> Outcome {
    let start = Instant::now();
    let r = run_suite(Suite::RefereeBound, 101, 200);
    let t = start.elapsed();
    outcome(
        r.passed() && r.instances == 200 && within(t, 30),
        format!(
            "200 instances, {} violations (tol {REFEREE_BOUND_TOL:e}), {:.2}s",
            r.violations.len(),
            t.as_secs_f64()
        ),
    )
}

fn squared_bound() -> Outcome {
    let start = Instant::now();
    let sq = run_suite(Suite::SquaredBound, 202, 500);
    let jensen = run_suite(Suite::Jensen, 202, 500);
    let t = start.elapsed();
    outcome(
        sq.passed() && jensen.passed() && sq.instances == 500 && within(t, 60),
        format!(
            "500 instances: max squared {:.4} (<= {SQUARED_BOUND}), max distortion {:.4}, {} Jensen violations, {:.2}s",
            sq.max_squared,
            sq.max_distortion,
            jensen.violations.len(),
            t.as_secs_f64()
        ),
    )
}

fn topk_growth() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [10usize, 20, 50] {
        let inst = build_topk_squared_instance(n, 1, 1.0 / (2.0 * n as f64)).expect("valid parameters");
        let sq = expected_distortion(&inst, &rd_distribution(&inst), Moment::Second).expect("nondegenerate");
        let bound = ((n - 1) * (n - 1)) as f64 / (4.0 * n as f64);
        pass &= sq > bound;
        parts.push(format!("n={n}: {sq:.3} > {bound:.3}"));
    }
    let t = start.elapsed();
    outcome(pass && within(t, 10), format!("{}, {:.2}s", parts.join("; "), t.as_secs_f64()))
}

fn star_mixture() -> Outcome {
    let eps = 1e-4;
    let opt = optimal_ordinal_mixture(eps, StarGeometry::Abstract).expect("abstract star");
    let limit_ok = (opt.value - 1.2).abs() <= MIXTURE_LIMIT_TOL;
    // min-max over a 1e-4 grid of leaf probabilities
    let grid_min = (0..=10_000)
        .map(|i| star_regret(eps, i as f64 * 1e-4))
        .fold(f64::INFINITY, f64::min);
    let grid_ok = (grid_min - opt.value).abs() <= MIXTURE_GRID_TOL;
    // the closed form agrees with distortion on the built instances
    let worst = [StarVariant::A, StarVariant::B]
        .into_iter()
        .map(|v| {
            let inst = build_star_instance(&StarFamily::new(v, eps, StarGeometry::Abstract).unwrap()).unwrap();
            let mut probs = vec![opt.p_leaf / 3.0; 3];
            probs.push(opt.p_center);
            let d = referee::OutcomeDistribution::new(probs).unwrap();
            expected_distortion(&inst, &d, Moment::First).unwrap()
        })
        .fold(0.0, f64::max);
    let instances_ok = (worst - opt.value).abs() <= 1e-9;
    let want = (2.0 - 2.0 * 120f64.to_radians().cos()).sqrt();
    let circle = build_star_instance(&StarFamily::new(StarVariant::A, eps, StarGeometry::EuclideanCircle).unwrap())
        .unwrap();
    let Geometry::Planar(p) = circle.geometry() else { unreachable!() };
    let chord_err = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(a, b)| (p[a].dist(&p[b]) - want).abs())
        .fold((chord(2.0 * std::f64::consts::FRAC_PI_3) - want).abs(), f64::max);
    outcome(
        limit_ok && grid_ok && instances_ok && chord_err <= CIRCLE_CHORD_TOL,
        format!(
            "value {:.6} (p_center {:.6}), grid min {:.6}, instance check {:.2e}, chord error {:.1e}",
            opt.value,
            opt.p_center,
            grid_min,
            (worst - opt.value).abs(),
            chord_err
        ),
    )
}

fn oligarchy_curve() -> Outcome {
    let start = Instant::now();
    let mut worst_table: f64 = 0.0;
    let mut worst_paths: f64 = 0.0;
    for (i, want) in CURVE_VALUES.iter().enumerate() {
        let m = i as u64 + 2;
        let b = oligarchy_bound(m).expect("m >= 2");
        worst_table = worst_table.max((b - want).abs());
        let via_mf = mf_bound_distortion(|p| oligarchy_mf_refined(m, p));
        worst_paths = worst_paths.max((b - via_mf).abs());
    }
    let limit = oligarchy_bound(1_000_000_000).expect("m >= 2");
    let t = start.elapsed();
    outcome(
        worst_table <= CURVE_TOL && worst_paths <= CURVE_PATHS_TOL && limit > 2.999 && limit <= 3.0001 && within(t, 5),
        format!(
            "max table error {worst_table:.2e}, max path gap {worst_paths:.2e}, m=1e9 -> {limit:.6}, {:.2}s",
            t.as_secs_f64()
        ),
    )
}

fn collinear_search() -> Outcome {
    let start = Instant::now();
    let opts = SearchOptions { threads: 1, ..SearchOptions::new(75, SearchMode::Collinear) };
    let SearchOutcome::Complete(r) = run_search(&opts).expect("within budget") else { unreachable!() };
    let t = start.elapsed();
    let pts = r.plain_argmax.grid_points(75);
    let collinear = pts.iter().all(|p| p.0 == pts[0].0);
    outcome(
        (r.max_plain_pd - 1.75).abs() <= COLLINEAR_TOL && collinear && within(t, 300),
        format!(
            "max plain PD {:.6} (target 1.75 ± {COLLINEAR_TOL}), argmax {}, {:.1}s",
            r.max_plain_pd,
            r.summary().lines().find(|l| l.starts_with("plain_argmax=")).unwrap_or(""),
            t.as_secs_f64()
        ),
    )
}

fn full_search() -> Outcome {
    let start = Instant::now();
    let run = |threads: usize, checkpoint: Option<std::path::PathBuf>, stop: Option<usize>| {
        let opts = SearchOptions {
            threads,
            checkpoint,
            stop_after_blocks: stop,
            ..SearchOptions::new(10, SearchMode::Full)
        };
        run_search(&opts).expect("within budget")
    };
    let summaries: Vec<_> = [1, 4, 8]
        .iter()
        .map(|&t| match run(t, None, None) {
            SearchOutcome::Complete(r) => r,
            SearchOutcome::Paused { .. } => unreachable!(),
        })
        .collect();
    let base = &summaries[0];
    let same_threads = summaries.iter().all(|r| r.summary() == base.summary());
    let dir = tempfile::tempdir().expect("temp dir");
    let ck = dir.path().join("search.ck");
    let paused = matches!(run(4, Some(ck.clone()), Some(500)), SearchOutcome::Paused { blocks_done: 500, .. });
    let resumed = match run(8, Some(ck), None) {
        SearchOutcome::Complete(r) => r.summary() == base.summary(),
        SearchOutcome::Paused { .. } => false,
    };
    let t = start.elapsed();
    let threshold = certification_threshold(1.0 / 75.0);
    let long = if std::env::var("REFEREE_LONG").as_deref() == Ok("1") {
        let (ok, r) = certify_plane_bound(75, 0, None).expect("search runs");
        format!("; delta=1/75 full: max certified {:.6}, certified={ok}", r.max_pd)
    } else {
        "; delta=1/75 full search skipped (long-running, set REFEREE_LONG=1)".into()
    };
    outcome(
        same_threads
            && paused
            && resumed
            && base.max_pd < TARGET_BOUND
            && (threshold - 1.781).abs() <= THRESHOLD_TOL
            && within(t, 3600),
        format!(
            "delta=1/10: max certified {:.6} (< {TARGET_BOUND}), {} configs, identical across 1/4/8 threads: {same_threads}, \
             resumed identical: {resumed}; threshold(1/75) = {threshold:.6}; {:.1}s{long}",
            base.max_pd,
            base.configs_evaluated,
            t.as_secs_f64()
        ),
    )
}

/// Minimum of the mean distance over a `side × side` lattice on the
/// bounding box.
fn dense_grid_min(points: &[Point], side: usize) -> f64 {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let mut best = f64::INFINITY;
    for i in 0..side {
        let x = x0 + (x1 - x0) * i as f64 / (side - 1) as f64;
        for j in 0..side {
            let y = y0 + (y1 - y0) * j as f64 / (side - 1) as f64;
            let q = Point::new(x, y);
            let c = points.iter().map(|p| p.dist(&q)).sum::<f64>() / points.len() as f64;
            best = best.min(c);
        }
    }
    best
}

fn median_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst_gap: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let mut below = true;
    for _ in 0..50 {
        let pts: Vec<Point> = (0..5).map(|_| random_point(&mut rng)).collect();
        let (m, c) = geometric_median(&pts).expect("finite");
        let grid = dense_grid_min(&pts, 2000);
        below &= c <= grid + 1e-12;
        worst_gap = worst_gap.max((grid - c).abs());
        worst_residual = worst_residual.max(optimality_residual(&pts, m));
    }
    outcome(
        below && worst_gap <= MEDIAN_GRID_TOL && worst_residual <= MEDIAN_RESIDUAL_TOL,
        format!("50 sets: max gap to 2000² grid {worst_gap:.2e}, max optimality residual {worst_residual:.2e}"),
    )
}

fn max_pd_over_multisets(points: &[Point]) -> f64 {
    let n = points.len();
    let mut best: f64 = 0.0;
    let mut idx = [0usize; 5];
    loop {
        let cfg = PlanarConfig::new(idx.map(|i| points[i])).expect("finite");
        best = best.max(pessimistic_distortion(&cfg));
        // next nondecreasing index tuple
        let mut pos = 5;
        while pos > 0 && idx[pos - 1] == n - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return best;
        }
        idx[pos - 1] += 1;
        for q in pos..5 {
            idx[q] = idx[pos - 1];
        }
    }
}

fn linkage() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst_margin = f64::INFINITY;
    let mut pass = true;
    for _ in 0..100 {
        let n = rng.gen_range(1..=6);
        let extra = rng.gen_range(0..3);
        let inst = random_colocated_instance(&mut rng, n, extra);
        let Geometry::Planar(p) = inst.geometry() else { unreachable!() };
        let agents = &p[..n];
        // every agent on the optimum: ratio 1 by convention, as for
        // coincident five-point configurations
        let d = match expected_distortion(&inst, &rr_distribution(&inst), Moment::First) {
            Err(referee::Error::DegenerateInstance) => 1.0,
            other => other.expect("valid instance"),
        };
        let pd = max_pd_over_multisets(agents);
        pass &= d <= pd + LINKAGE_TOL;
        worst_margin = worst_margin.min(pd - d);
    }
    let t = start.elapsed();
    outcome(
        pass && within(t, 120),
        format!("100 instances, smallest max-PD minus distortion {worst_margin:.3e}, {:.2}s", t.as_secs_f64()),
    )
}

fn monte_carlo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..20 {
        let inst = random_instance(&mut rng, 50);
        for mech in Mechanism::ALL {
            let dist = distribution(&inst, mech);
            for moment in [Moment::First, Moment::Second] {
                let exact = expected_distortion(&inst, &dist, moment).expect("nondegenerate");
                let mc = monte_carlo_distortion(&inst, mech, 1_000_000, 5000 + i, moment).expect("samples");
                let z = if mc.std_error > 0.0 {
                    (mc.estimate - exact).abs() / mc.std_error
                } else if (mc.estimate - exact).abs() <= 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
                checked += 1;
            }
        }
    }
    outcome(
        worst <= MC_SIGMAS,
        format!("{checked} comparisons at 1e6 samples, largest deviation {worst:.2} standard errors"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 referee outcome bound", referee_bound),
        ("2 squared distortion <= 21, Jensen", squared_bound),
        ("3 top-k squared distortion growth", topk_growth),
        ("4 star mixture optimum", star_mixture),
        ("5 oligarchy bound curve", oligarchy_curve),
        ("6 collinear search at delta=1/75", collinear_search),
        ("7 full search at delta=1/10", full_search),
        ("8 geometric median oracle", median_oracle),
        ("9 five-point linkage", linkage),
        ("10 Monte-Carlo consistency", monte_carlo),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let r = check();
        println!("[{}] criterion {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        if !r.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    }
}
