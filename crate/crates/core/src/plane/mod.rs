//! Five-point configurations in the plane with every agent on its own
//! alternative.
//!
//! [`pessimistic_distortion`] averages the referee rule's cost over all
//! role assignments of five points and divides by the geometric-median
//! cost. [`certified_pd`] is the grid version that takes the worse outcome
//! whenever the referee is nearly indifferent, and [`search`] enumerates
//! canonical grid configurations to certify an upper bound.

mod median;
pub mod search;

use std::f64::consts::SQRT_2;

pub use median::{avg_cost, geometric_median, optimality_residual, MEDIAN_STEP_TOL};
pub use search::{
    certify_plane_bound, enumeration_count, grid_search, run_search, EnumerationCount, GridConfig, SearchMode,
    SearchOptions, SearchOutcome, SearchReport, DEFAULT_BUDGET,
};

use crate::error::{Error, Result};
use crate::metric::Point;

/// Indifference margin in units of the grid step: `3√2/2`.
pub const INDIFFERENCE_FACTOR: f64 = 1.5 * SQRT_2;
/// Bound the grid search tries to certify.
pub const TARGET_BOUND: f64 = 1.97;
/// Number of ordered role assignments `({i,j}, k, l)` over five points.
pub const ROLE_COUNT: usize = 60;

/// Unordered referee pair `{i, j}` (`i < j`) and referee `k`.
const TRIPLES: [(usize, usize, usize); 30] = {
    let mut out = [(0, 0, 0); 30];
    let mut t = 0;
    let mut i = 0;
    while i < 5 {
        let mut j = i + 1;
        while j < 5 {
            let mut k = 0;
            while k < 5 {
                if k != i && k != j {
                    out[t] = (i, j, k);
                    t += 1;
                }
                k += 1;
            }
            j += 1;
        }
        i += 1;
    }
    out
};

/// The two indices outside `{i, j, k}`.
fn others(i: usize, j: usize, k: usize) -> [usize; 2] {
    let mut out = [0; 2];
    let mut t = 0;
    for l in 0..5 {
        if l != i && l != j && l != k {
            out[t] = l;
            t += 1;
        }
    }
    out
}

pub(crate) type Distances = [[f64; 5]; 5];

pub(crate) fn distances(points: &[Point; 5]) -> Distances {
    let mut d = [[0.0; 5]; 5];
    for a in 0..5 {
        for b in (a + 1)..5 {
            let v = points[a].dist(&points[b]);
            d[a][b] = v;
            d[b][a] = v;
        }
    }
    d
}

/// Sum over all 60 role assignments of `d(x_l, C({x_i, x_j}, x_k))`, the
/// referee choosing the nearer point and, on exact ties, the one whose key
/// is smaller.
pub(crate) fn referee_sum<K: PartialOrd>(d: &Distances, keys: &[K; 5]) -> f64 {
    let mut total = 0.0;
    for &(i, j, k) in &TRIPLES {
        let q = if d[k][i] < d[k][j] {
            i
        } else if d[k][j] < d[k][i] {
            j
        } else if keys[i] <= keys[j] {
            i
        } else {
            j
        };
        let [l1, l2] = others(i, j, k);
        total += d[l1][q] + d[l2][q];
    }
    total
}

/// As [`referee_sum`], but when the referee's two distances differ by at
/// most `margin` the term takes the larger of the two possible outcomes.
pub(crate) fn pessimistic_referee_sum(d: &Distances, margin: f64) -> f64 {
    let mut total = 0.0;
    for &(i, j, k) in &TRIPLES {
        let [l1, l2] = others(i, j, k);
        let si = d[l1][i] + d[l2][i];
        let sj = d[l1][j] + d[l2][j];
        total += if (d[k][i] - d[k][j]).abs() <= margin {
            si.max(sj)
        } else if d[k][i] < d[k][j] {
            si
        } else {
            sj
        };
    }
    total
}

/// Five points in the plane; repeats allowed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarConfig {
    points: [Point; 5],
}

impl PlanarConfig {
    pub fn new(points: [Point; 5]) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::Domain(format!("non-finite point ({}, {})", p.x, p.y)));
        }
        Ok(PlanarConfig { points })
    }

    pub fn from_coords(coords: [(f64, f64); 5]) -> Result<Self> {
        Self::new(coords.map(|(x, y)| Point::new(x, y)))
    }

    pub fn points(&self) -> &[Point; 5] {
        &self.points
    }

    pub fn is_coincident(&self) -> bool {
        self.points.iter().all(|p| *p == self.points[0])
    }

    /// Applies `f` to every point.
    pub fn map<F: Fn(Point) -> Point>(&self, f: F) -> Result<Self> {
        Self::new(self.points.map(f))
    }

    pub fn permuted(&self, perm: [usize; 5]) -> Self {
        PlanarConfig { points: perm.map(|i| self.points[i]) }
    }

    /// Lowest-index pair at maximum distance, and that distance.
    pub fn diameter(&self) -> (usize, usize, f64) {
        let mut best = (0, 1, self.points[0].dist(&self.points[1]));
        for a in 0..5 {
            for b in (a + 1)..5 {
                let d = self.points[a].dist(&self.points[b]);
                if d > best.2 {
                    best = (a, b, d);
                }
            }
        }
        best
    }
}

/// Mean over the 60 role assignments of the distance from the fifth-party
/// point to the referee's choice (nearer of the pair, lexicographically
/// smaller point on exact ties).
pub fn scrr_avg(cfg: &PlanarConfig) -> f64 {
    let pts = cfg.points();
    let keys = pts.map(|p| (p.x, p.y));
    referee_sum(&distances(pts), &keys) / ROLE_COUNT as f64
}

/// Mean distance from the five points to their geometric median.
pub fn opt_avg(cfg: &PlanarConfig) -> f64 {
    geometric_median(cfg.points()).expect("finite points").1
}

/// `scrr_avg / opt_avg`, and exactly 1 when all five points coincide.
pub fn pessimistic_distortion(cfg: &PlanarConfig) -> f64 {
    if cfg.is_coincident() {
        return 1.0;
    }
    scrr_avg(cfg) / opt_avg(cfg)
}

/// Grid of step `δ = 1/k` over `[0, 1+δ]²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    k: u32,
}

impl GridSpec {
    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("grid inverse step must be positive".into()));
        }
        Ok(GridSpec { k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.k as f64
    }

    /// Upper end of each axis, `1 + δ`.
    pub fn extent(&self) -> f64 {
        1.0 + self.delta()
    }

    /// Largest column index for the extreme pair.
    pub fn alpha_max(&self) -> u32 {
        self.k
    }

    /// Grid indices per axis, `0 ..= k+1`.
    pub fn axis_len(&self) -> u32 {
        self.k + 2
    }

    pub fn point(&self, i: i64, j: i64) -> Point {
        let k = self.k as f64;
        Point::new(i as f64 / k, j as f64 / k)
    }

    /// Nearest grid indices, halves rounding toward the lower index.
    pub fn snap(&self, p: Point) -> (i64, i64) {
        let k = self.k as f64;
        let r = |v: f64| (v * k - 0.5).ceil() as i64;
        (r(p.x), r(p.y))
    }

    /// Indices of `p` if it lies within `1e-12` of a grid point.
    pub fn indices_of(&self, p: Point) -> Option<(i64, i64)> {
        let k = self.k as f64;
        let (i, j) = ((p.x * k).round(), (p.y * k).round());
        let on = (p.x - i / k).abs() <= 1e-12 && (p.y - j / k).abs() <= 1e-12;
        on.then_some((i as i64, j as i64))
    }
}

/// A configuration in canonical position: diameter 1, the extreme pair at
/// `(αδ, 0)` and `(αδ, 1)`, everything inside `[0, 1+δ]²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Canonical {
    pub config: PlanarConfig,
    pub alpha: u32,
}

const CANON_TOL: f64 = 1e-12;

fn canonical_alpha(cfg: &PlanarConfig, grid: &GridSpec) -> Option<u32> {
    let (a, b, d) = cfg.diameter();
    if (d - 1.0).abs() > CANON_TOL {
        return None;
    }
    let (pa, pb) = (cfg.points[a], cfg.points[b]);
    let k = grid.k as f64;
    let alpha = (pa.x * k).round();
    if !(0.0..=k).contains(&alpha) {
        return None;
    }
    let col = alpha / k;
    let (lo, hi) = if pa.y < pb.y { (pa, pb) } else { (pb, pa) };
    let ends = (lo.x - col).abs() <= CANON_TOL
        && (hi.x - col).abs() <= CANON_TOL
        && lo.y.abs() <= CANON_TOL
        && (hi.y - 1.0).abs() <= CANON_TOL;
    let ext = grid.extent();
    let inside = cfg
        .points
        .iter()
        .all(|p| p.x >= -CANON_TOL && p.x <= ext + CANON_TOL && p.y >= -CANON_TOL && p.y <= ext + CANON_TOL);
    (ends && inside).then_some(alpha as u32)
}

/// Moves `cfg` into canonical position by a similarity transform. A
/// configuration that is already canonical comes back unchanged.
pub fn canonicalize(cfg: &PlanarConfig, grid: &GridSpec) -> Result<Canonical> {
    if cfg.is_coincident() {
        return Err(Error::DegenerateInstance);
    }
    if let Some(alpha) = canonical_alpha(cfg, grid) {
        return Ok(Canonical { config: *cfg, alpha });
    }
    let (a, b, d) = cfg.diameter();
    let (pa, pb) = (cfg.points[a], cfg.points[b]);
    let (lo, hi) = if (pa.y, pa.x) <= (pb.y, pb.x) { (pa, pb) } else { (pb, pa) };
    let (ux, uy) = ((hi.x - lo.x) / d, (hi.y - lo.y) / d);
    // rotation taking u to (0, 1), then scaling by 1/d
    let place = |p: Point| {
        let (x, y) = ((p.x - lo.x) / d, (p.y - lo.y) / d);
        Point::new(uy * x - ux * y, ux * x + uy * y)
    };
    let placed: Vec<Point> = cfg.points.iter().map(|&p| place(p)).collect();
    let min_x = placed.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let k = grid.k as f64;
    let alpha = ((-min_x * k) - 1e-9).ceil().clamp(0.0, k);
    let shift = alpha / k;
    let mut points = [Point::new(0.0, 0.0); 5];
    for (out, p) in points.iter_mut().zip(&placed) {
        *out = Point::new(p.x + shift, p.y);
    }
    // the extreme pair lands exactly on the column
    points[a] = if cfg.points[a] == lo { Point::new(shift, 0.0) } else { Point::new(shift, 1.0) };
    points[b] = if cfg.points[a] == lo { Point::new(shift, 1.0) } else { Point::new(shift, 0.0) };
    Ok(Canonical { config: PlanarConfig::new(points)?, alpha: alpha as u32 })
}

/// `1.97 / ((1 + 4√2·δ)(1 + (3√2/2)·δ))`: the largest certified value for
/// which the bound extends from the grid to the whole plane.
pub fn certification_threshold(delta: f64) -> f64 {
    TARGET_BOUND / ((1.0 + 4.0 * SQRT_2 * delta) * (1.0 + INDIFFERENCE_FACTOR * delta))
}

/// Integer grid coordinates of five points.
pub type GridPoints = [(i64, i64); 5];

pub(crate) fn grid_distances(pts: &GridPoints) -> Distances {
    let mut d = [[0.0; 5]; 5];
    for a in 0..5 {
        for b in (a + 1)..5 {
            let (di, dj) = (pts[a].0 - pts[b].0, pts[a].1 - pts[b].1);
            let v = ((di * di + dj * dj) as f64).sqrt();
            d[a][b] = v;
            d[b][a] = v;
        }
    }
    d
}

/// Mean geometric-median cost of grid points, in grid units.
pub(crate) fn grid_opt(pts: &GridPoints) -> f64 {
    let points = pts.map(|(i, j)| Point::new(i as f64, j as f64));
    geometric_median(&points).expect("finite points").1
}

/// Plain and pessimistic ratios for grid points (all in grid units, so the
/// step does not enter).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridRatios {
    pub plain: f64,
    pub certified: f64,
}

pub fn grid_ratios(pts: &GridPoints) -> GridRatios {
    if pts.iter().all(|p| *p == pts[0]) {
        return GridRatios { plain: 1.0, certified: 1.0 };
    }
    let d = grid_distances(pts);
    let opt = grid_opt(pts);
    let n = ROLE_COUNT as f64;
    GridRatios {
        plain: referee_sum(&d, pts) / n / opt,
        certified: pessimistic_referee_sum(&d, INDIFFERENCE_FACTOR) / n / opt,
    }
}

/// Pessimistic grid ratio: terms whose referee is within the indifference
/// margin `(3√2/2)δ` of both candidates count the worse candidate.
pub fn certified_pd(cfg: &PlanarConfig, grid: &GridSpec) -> Result<f64> {
    let mut pts = [(0, 0); 5];
    for (out, p) in pts.iter_mut().zip(cfg.points()) {
        *out = grid
            .indices_of(*p)
            .ok_or_else(|| Error::Domain(format!("({}, {}) is not a point of the 1/{} grid", p.x, p.y, grid.k)))?;
    }
    Ok(grid_ratios(&pts).certified)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct enumeration of all 60 ordered role assignments.
    fn scrr_oracle(p: &[Point; 5]) -> f64 {
        let mut total = 0.0;
        let mut terms = 0;
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    for l in 0..5 {
                        if i >= j || k == i || k == j || l == i || l == j || l == k {
                            continue;
                        }
                        let (di, dj) = (p[k].dist(&p[i]), p[k].dist(&p[j]));
                        let c = if di < dj || (di == dj && p[i].lex_cmp(&p[j]).is_le()) { p[i] } else { p[j] };
                        total += p[l].dist(&c);
                        terms += 1;
                    }
                }
            }
        }
        assert_eq!(terms, 60);
        total / 60.0
    }

    fn cfg(c: [(f64, f64); 5]) -> PlanarConfig {
        PlanarConfig::from_coords(c).unwrap()
    }

    #[test]
    fn coincident_points() {
        let c = cfg([(0.2, 0.7); 5]);
        assert_eq!(scrr_avg(&c), 0.0);
        assert_eq!(pessimistic_distortion(&c), 1.0);
        let g = GridSpec::new(10).unwrap();
        let on = cfg([(0.3, 0.4); 5]);
        assert_eq!(certified_pd(&on, &g).unwrap(), 1.0);
        assert!(matches!(canonicalize(&c, &g), Err(Error::DegenerateInstance)));
    }

    #[test]
    fn four_plus_one_by_hand() {
        // Pairs inside the cluster with a cluster referee send the outlier
        // cost 1 (6 pairs, 2 referees, 1 outlier term each); nothing else
        // contributes: 12 / 60. The median sits on the cluster: 1/5.
        let c = cfg([(0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        assert!((scrr_avg(&c) - 0.2).abs() < 1e-15);
        assert!((scrr_oracle(c.points()) - 0.2).abs() < 1e-15);
        assert!((pessimistic_distortion(&c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_two_one() {
        // {0,0,1,1,1} on a line: 3/5 of the weight on 1, median at 1.
        let c = cfg([(0.0, 0.0), (0.0, 0.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]);
        assert!((scrr_avg(&c) - scrr_oracle(c.points())).abs() < 1e-15);
        assert!((opt_avg(&c) - 0.4).abs() < 1e-12);
        let c = cfg([(0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 1.0), (0.0, 1.0)]);
        assert!((pessimistic_distortion(&c) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn grid_snap_and_membership() {
        let g = GridSpec::new(4).unwrap();
        assert_eq!(g.snap(Point::new(0.125, 0.2)), (0, 1));
        assert_eq!(g.snap(Point::new(0.126, 0.37)), (1, 1));
        assert_eq!(g.indices_of(Point::new(0.75, 1.25)), Some((3, 5)));
        assert_eq!(g.indices_of(Point::new(0.75 + 1e-9, 0.0)), None);
        assert!(GridSpec::new(0).is_err());
        let off = cfg([(0.0, 0.0), (0.0, 1.0), (0.1, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        assert!(certified_pd(&off, &g).is_err());
    }

    #[test]
    fn threshold_values() {
        assert!((certification_threshold(1.0 / 75.0) - 1.781).abs() < 5e-4);
        let t10 = certification_threshold(0.1);
        assert!((t10 - 1.97 / ((1.0 + 0.4 * SQRT_2) * (1.0 + 0.15 * SQRT_2))).abs() < 1e-15);
        assert!((t10 - 1.038).abs() < 1e-3);
        assert_eq!(certification_threshold(0.0), 1.97);
    }

    #[test]
    fn certified_without_indifference() {
        // first configuration on a 1/100 grid, scanning along a fixed path,
        // whose referee gaps all exceed the margin
        let no_margin = |pts: &GridPoints| {
            let d = grid_distances(pts);
            TRIPLES.iter().all(|&(i, j, k)| (d[k][i] - d[k][j]).abs() > INDIFFERENCE_FACTOR)
        };
        let found = (0..=100i64)
            .flat_map(|a| (0..=100i64).map(move |b| (a, b)))
            .map(|(a, b)| [(0, 0), (0, 100), (a, 13), (60, b), (97, 41)])
            .find(no_margin)
            .expect("some configuration has no indifferent referee");
        let r = grid_ratios(&found);
        assert_eq!(r.plain, r.certified);
        let g = GridSpec::new(100).unwrap();
        let c = PlanarConfig::new(found.map(|(i, j)| g.point(i, j))).unwrap();
        assert!((certified_pd(&c, &g).unwrap() - pessimistic_distortion(&c)).abs() < 1e-12);
    }

    #[test]
    fn certified_dominates_plain_on_small_grids() {
        let mut indifferent = 0;
        for k in [2i64, 3] {
            let side = k + 2;
            let cells: Vec<(i64, i64)> = (0..side).flat_map(|i| (0..side).map(move |j| (i, j))).collect();
            for alpha in 0..=k {
                for a in 0..cells.len() {
                    for b in a..cells.len() {
                        for c in b..cells.len() {
                            let pts = [(alpha, 0), (alpha, k), cells[a], cells[b], cells[c]];
                            let r = grid_ratios(&pts);
                            assert!(r.certified >= r.plain, "{pts:?}");
                            if r.certified > r.plain {
                                indifferent += 1;
                            }
                        }
                    }
                }
            }
        }
        assert!(indifferent > 0);
    }

    #[test]
    fn canonical_unchanged() {
        let g = GridSpec::new(10).unwrap();
        let c = cfg([(0.3, 0.0), (0.3, 1.0), (0.5, 0.5), (0.0, 0.2), (0.3, 0.6)]);
        let out = canonicalize(&c, &g).unwrap();
        assert_eq!(out.config, c);
        assert_eq!(out.alpha, 3);
    }

    #[test]
    fn canonical_after_rotation_and_scale() {
        let g = GridSpec::new(75).unwrap();
        let base = cfg([(0.1, 0.2), (0.5, 0.9), (0.3, 0.3), (0.2, 0.7), (0.45, 0.4)]);
        let t = 37f64.to_radians();
        let moved = base
            .map(|p| Point::new(5.0 * (p.x * t.cos() - p.y * t.sin()) + 2.0, 5.0 * (p.x * t.sin() + p.y * t.cos()) - 1.0))
            .unwrap();
        let out = canonicalize(&moved, &g).unwrap();
        assert!((pessimistic_distortion(&out.config) - pessimistic_distortion(&base)).abs() < 1e-9);
        assert_canonical(&out, &g);
    }

    fn assert_canonical(out: &Canonical, g: &GridSpec) {
        let (a, b, d) = out.config.diameter();
        assert!((d - 1.0).abs() < 1e-9);
        let col = out.alpha as f64 * g.delta();
        let (pa, pb) = (out.config.points()[a], out.config.points()[b]);
        assert!((pa.x - col).abs() < 1e-9 && (pb.x - col).abs() < 1e-9);
        assert!((pa.y.min(pb.y)).abs() < 1e-9 && (pa.y.max(pb.y) - 1.0).abs() < 1e-9);
        assert!(out.alpha <= g.alpha_max());
        for p in out.config.points() {
            assert!(p.x >= -1e-9 && p.x <= g.extent() + 1e-9, "{p:?}");
            assert!(p.y >= -1e-9 && p.y <= g.extent() + 1e-9, "{p:?}");
        }
    }

    fn arb_config() -> impl Strategy<Value = PlanarConfig> {
        prop::array::uniform5((-3.0f64..3.0, -3.0f64..3.0)).prop_map(|c| PlanarConfig::from_coords(c).unwrap())
    }

    fn arb_perm() -> impl Strategy<Value = [usize; 5]> {
        Just([0usize, 1, 2, 3, 4]).prop_shuffle().prop_map(|v| [v[0], v[1], v[2], v[3], v[4]])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn pd_similarity_invariant(
            c in arb_config(),
            theta in 0.0f64..std::f64::consts::TAU,
            scale in 0.01f64..100.0,
            tx in -10.0f64..10.0,
            ty in -10.0f64..10.0,
        ) {
            let (s, co) = theta.sin_cos();
            let t = c.map(|p| Point::new(scale * (co * p.x - s * p.y) + tx, scale * (s * p.x + co * p.y) + ty)).unwrap();
            prop_assert!((pessimistic_distortion(&t) - pessimistic_distortion(&c)).abs() <= 1e-9);
        }

        #[test]
        fn permutation_invariant(c in arb_config(), perm in arb_perm()) {
            let p = c.permuted(perm);
            prop_assert!((scrr_avg(&p) - scrr_avg(&c)).abs() <= 1e-12);
            prop_assert!((pessimistic_distortion(&p) - pessimistic_distortion(&c)).abs() <= 1e-12);
        }

        #[test]
        fn matches_role_oracle(c in arb_config()) {
            prop_assert!((scrr_avg(&c) - scrr_oracle(c.points())).abs() <= 1e-12);
        }

        #[test]
        fn canonical_form_properties(c in arb_config(), k in 1u32..80) {
            let g = GridSpec::new(k).unwrap();
            let out = canonicalize(&c, &g).unwrap();
            assert_canonical(&out, &g);
            prop_assert!((pessimistic_distortion(&out.config) - pessimistic_distortion(&c)).abs() <= 1e-9);
            prop_assert!(opt_avg(&out.config) >= 0.2 - 1e-9);
            let again = canonicalize(&out.config, &g).unwrap();
            prop_assert_eq!(again, out);
        }
    }
}
