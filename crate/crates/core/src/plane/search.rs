//! Exhaustive search over canonical grid configurations.
//!
//! The extreme pair sits at grid points `(α, 0)` and `(α, k)`; the three
//! free points range over `{0..=k+1}²` (or over column `α` alone in
//! collinear mode) as sorted multisets. Reflections about the column
//! (`H`), about the segment midpoint's horizontal (`V`), and their
//! composition (the half-turn about the midpoint) preserve the extreme pair,
//! so only the lexicographically smallest in-range image of each multiset is
//! evaluated.
//!
//! Work is split into blocks `(α, first free point)`. Block results are
//! reduced in block order, so the report does not depend on the thread
//! count, and completed blocks can be appended to a checkpoint file.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::{
    certification_threshold, geometric_median, grid_distances, pessimistic_referee_sum, referee_sum, GridPoints,
    GridSpec, PlanarConfig, INDIFFERENCE_FACTOR, ROLE_COUNT,
};
use crate::error::{Error, Result};
use crate::metric::Point;

/// Default cap on evaluated configurations; a full search at `k = 20`
/// fits, finer grids need an explicit budget.
pub const DEFAULT_BUDGET: u64 = 200_000_000;
/// Blocks dispatched (and checkpointed) together.
const CHUNK_BLOCKS: usize = 64;
const CHECKPOINT_MAGIC: &str = "# grid-search checkpoint v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SearchMode {
    Full,
    Collinear,
}

impl SearchMode {
    pub fn id(self) -> &'static str {
        match self {
            SearchMode::Full => "full",
            SearchMode::Collinear => "collinear",
        }
    }
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(SearchMode::Full),
            "collinear" => Ok(SearchMode::Collinear),
            _ => Err(Error::Domain(format!("unknown search mode {s:?} (expected full or collinear)"))),
        }
    }
}

/// A grid configuration: column `alpha` and three free points, each a flat
/// index `i·(k+2) + j`, sorted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridConfig {
    pub alpha: u32,
    pub free: [u32; 3],
}

impl GridConfig {
    pub fn grid_points(&self, k: u32) -> GridPoints {
        let side = k + 2;
        let a = self.alpha as i64;
        let f = |c: u32| ((c / side) as i64, (c % side) as i64);
        [(a, 0), (a, k as i64), f(self.free[0]), f(self.free[1]), f(self.free[2])]
    }

    pub fn to_config(&self, k: u32) -> PlanarConfig {
        let g = GridSpec::new(k).expect("positive k");
        let pts = self.grid_points(k).map(|(i, j)| g.point(i, j));
        PlanarConfig::new(pts).expect("grid points are finite")
    }

    fn render(&self, k: u32) -> String {
        let kf = k as f64;
        self.grid_points(k)
            .iter()
            .map(|(i, j)| format!("({},{})", *i as f64 / kf, *j as f64 / kf))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Inverse grid step: `δ = 1/k`.
    pub k: u32,
    pub mode: SearchMode,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    /// Refuse when more configurations than this would be evaluated.
    pub budget: Option<u64>,
    pub checkpoint: Option<PathBuf>,
    /// Return early after completing this many blocks in this run.
    pub stop_after_blocks: Option<usize>,
}

impl SearchOptions {
    pub fn new(k: u32, mode: SearchMode) -> Self {
        SearchOptions {
            k,
            mode,
            threads: 1,
            budget: Some(DEFAULT_BUDGET),
            checkpoint: None,
            stop_after_blocks: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchReport {
    pub k: u32,
    pub mode: SearchMode,
    pub delta: f64,
    /// Largest certified (indifference-pessimistic) ratio.
    pub max_pd: f64,
    pub argmax: GridConfig,
    /// Largest plain ratio, over every in-range symmetric image.
    pub max_plain_pd: f64,
    pub plain_argmax: GridConfig,
    pub configs_evaluated: u64,
    /// Multisets before symmetry pruning.
    pub configs_total: u64,
    pub certified_threshold: f64,
    pub certified: bool,
    pub wall_time: Duration,
}

impl SearchReport {
    /// Machine-readable `key=value` lines. Wall time is left out so equal
    /// searches give byte-identical summaries.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        kv("mode", self.mode.to_string());
        kv("k", self.k.to_string());
        kv("delta", self.delta.to_string());
        kv("max_pd", self.max_pd.to_string());
        kv("argmax", self.argmax.render(self.k));
        kv("max_plain_pd", self.max_plain_pd.to_string());
        kv("plain_argmax", self.plain_argmax.render(self.k));
        kv("threshold", self.certified_threshold.to_string());
        kv("certified", self.certified.to_string());
        kv("configs_evaluated", self.configs_evaluated.to_string());
        kv("configs_total", self.configs_total.to_string());
        s
    }

    pub fn render(&self) -> String {
        let verdict = if self.certified {
            format!("certified: max certified ratio {:.6} < threshold {:.6}", self.max_pd, self.certified_threshold)
        } else {
            format!("not certified: max certified ratio {:.6} >= threshold {:.6}", self.max_pd, self.certified_threshold)
        };
        format!(
            "grid search ({} mode, delta = 1/{})\n\
             configurations evaluated: {} of {} before symmetry pruning\n\
             max certified ratio: {}\n  at {}\n\
             max plain ratio: {}\n  at {}\n\
             {}\n",
            self.mode,
            self.k,
            self.configs_evaluated,
            self.configs_total,
            self.max_pd,
            self.argmax.render(self.k),
            self.max_plain_pd,
            self.plain_argmax.render(self.k),
            verdict,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchOutcome {
    Complete(SearchReport),
    Paused { blocks_done: usize, blocks_total: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationCount {
    /// Multisets before pruning.
    pub total: u64,
    /// Orbit representatives actually evaluated.
    pub kept: u64,
}

fn multisets3(n: u64) -> u64 {
    // C(n+2, 3)
    (n + 2) * (n + 1) * n / 6
}

/// Size-3 multisets fixed by an involution with `c` fixed points and `t`
/// two-cycles.
fn fixed3(c: u64, t: u64) -> u64 {
    multisets3(c) + c * t
}

/// Closed-form number of configurations a search enumerates.
pub fn enumeration_count(k: u32, mode: SearchMode) -> EnumerationCount {
    let k = k as u64;
    let r_all = k + 2;
    let r_in = k + 1;
    let even = k.is_multiple_of(2);
    let mut total = 0;
    let mut kept = 0;
    for alpha in 0..=k {
        let (w, cols) = match mode {
            SearchMode::Full => (2 * alpha.min(k + 1 - alpha) + 1, k + 2),
            SearchMode::Collinear => (1, 1),
        };
        let n_a = multisets3(w * r_in);
        let fix_h_a = fixed3(r_in, (w - 1) * r_in / 2);
        let cv = if even { w } else { 0 };
        let fix_v_a = fixed3(cv, (w * r_in - cv) / 2);
        let cr = u64::from(even);
        let fix_r_a = fixed3(cr, (w * r_in - cr) / 2);
        let orbits_a = (n_a + fix_h_a + fix_v_a + fix_r_a) / 4;

        let n_bh = multisets3(w * r_all) - n_a;
        let fix_h_bh = fixed3(r_all, (w - 1) * r_all / 2) - fix_h_a;
        let orbits_bh = (n_bh + fix_h_bh) / 2;

        let n_bv = multisets3(cols * r_in) - n_a;
        let cv_all = if even { cols } else { 0 };
        let fix_v_bv = fixed3(cv_all, (cols * r_in - cv_all) / 2) - fix_v_a;
        let orbits_bv = (n_bv + fix_v_bv) / 2;

        let all = multisets3(cols * r_all);
        let n_rest = all - n_a - n_bh - n_bv;
        total += all;
        kept += orbits_a + orbits_bh + orbits_bv + n_rest;
    }
    EnumerationCount { total, kept }
}

/// Free-point positions for column `alpha`, as flat indices in increasing
/// order.
fn free_cells(k: u32, alpha: u32, mode: SearchMode) -> Vec<u32> {
    let side = k + 2;
    match mode {
        SearchMode::Full => (0..side * side).collect(),
        SearchMode::Collinear => (0..side).map(|j| alpha * side + j).collect(),
    }
}

#[derive(Clone, Copy)]
enum Sym {
    H,
    V,
    R,
}

/// Image of a flat cell under a symmetry, if it stays on the grid.
fn image(k: u32, alpha: u32, sym: Sym, cell: u32) -> Option<u32> {
    let side = k + 2;
    let (i, j) = (cell / side, cell % side);
    let h = |i: u32| (2 * alpha).checked_sub(i).filter(|&x| x <= k + 1);
    let v = |j: u32| k.checked_sub(j);
    let (i2, j2) = match sym {
        Sym::H => (h(i)?, j),
        Sym::V => (i, v(j)?),
        Sym::R => (h(i)?, v(j)?),
    };
    Some(i2 * side + j2)
}

fn image_set(k: u32, alpha: u32, sym: Sym, free: [u32; 3]) -> Option<[u32; 3]> {
    let mut out = [
        image(k, alpha, sym, free[0])?,
        image(k, alpha, sym, free[1])?,
        image(k, alpha, sym, free[2])?,
    ];
    out.sort_unstable();
    Some(out)
}

/// `free` together with its in-range images, or `None` when an image is
/// lexicographically smaller (another member of the orbit represents it).
fn orbit_if_representative(k: u32, alpha: u32, free: [u32; 3]) -> Option<Vec<[u32; 3]>> {
    let mut members = vec![free];
    for sym in [Sym::H, Sym::V, Sym::R] {
        if let Some(img) = image_set(k, alpha, sym, free) {
            if img < free {
                return None;
            }
            members.push(img);
        }
    }
    Some(members)
}

type Best = Option<(f64, GridConfig)>;

fn improve(best: &mut Best, value: f64, at: GridConfig) {
    let better = match best {
        None => true,
        Some((v, a)) => value > *v || (value == *v && at < *a),
    };
    if better {
        *best = Some((value, at));
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct BlockResult {
    evaluated: u64,
    certified: Best,
    plain: Best,
}

fn evaluate_block(k: u32, mode: SearchMode, block: usize) -> BlockResult {
    let cells_per_alpha = match mode {
        SearchMode::Full => ((k + 2) * (k + 2)) as usize,
        SearchMode::Collinear => (k + 2) as usize,
    };
    let alpha = (block / cells_per_alpha) as u32;
    let first = block % cells_per_alpha;
    let cells = free_cells(k, alpha, mode);
    let mut out = BlockResult { evaluated: 0, certified: None, plain: None };
    let n = ROLE_COUNT as f64;
    for b in first..cells.len() {
        for c in b..cells.len() {
            let free = [cells[first], cells[b], cells[c]];
            let Some(members) = orbit_if_representative(k, alpha, free) else {
                continue;
            };
            out.evaluated += 1;
            let rep = GridConfig { alpha, free };
            let pts = rep.grid_points(k);
            let d = grid_distances(&pts);
            let opt = geometric_median(&pts.map(|(i, j)| Point::new(i as f64, j as f64)))
                .expect("finite points")
                .1;
            improve(&mut out.certified, pessimistic_referee_sum(&d, INDIFFERENCE_FACTOR) / n / opt, rep);
            // Exact ties in the plain rule break by coordinates, which the
            // symmetries do not preserve, so every image is scored.
            for m in members {
                let at = GridConfig { alpha, free: m };
                let pts = at.grid_points(k);
                improve(&mut out.plain, referee_sum(&grid_distances(&pts), &pts) / n / opt, at);
            }
        }
    }
    out
}

fn blocks_total(k: u32, mode: SearchMode) -> usize {
    let per_alpha = match mode {
        SearchMode::Full => ((k + 2) * (k + 2)) as usize,
        SearchMode::Collinear => (k + 2) as usize,
    };
    (k as usize + 1) * per_alpha
}

fn fmt_best(b: &Best) -> String {
    match b {
        None => "- 0 0 0 0".into(),
        Some((v, g)) => format!("{v} {} {} {} {}", g.alpha, g.free[0], g.free[1], g.free[2]),
    }
}

fn checkpoint_header(k: u32, mode: SearchMode) -> String {
    format!("k={k} mode={mode} blocks={}", blocks_total(k, mode))
}

fn parse_best(fields: &[&str]) -> Option<Best> {
    let ints: Option<Vec<u32>> = fields[1..5].iter().map(|f| f.parse().ok()).collect();
    let ints = ints?;
    if fields[0] == "-" {
        return Some(None);
    }
    let v: f64 = fields[0].parse().ok()?;
    Some(Some((v, GridConfig { alpha: ints[0], free: [ints[1], ints[2], ints[3]] })))
}

fn load_checkpoint(path: &Path, k: u32, mode: SearchMode) -> Result<Vec<Option<BlockResult>>> {
    let total = blocks_total(k, mode);
    let mut done = vec![None; total];
    if !path.exists() {
        return Ok(done);
    }
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let bad = |msg: String| Error::Checkpoint(format!("{}: {msg}", path.display()));
    match lines.next().transpose()? {
        Some(l) if l == CHECKPOINT_MAGIC => {}
        None => return Ok(done),
        Some(_) => return Err(bad("not a grid-search checkpoint".into())),
    }
    let header = lines.next().transpose()?.ok_or_else(|| bad("missing header".into()))?;
    if header != checkpoint_header(k, mode) {
        return Err(bad(format!("written for `{header}`, this search is `{}`", checkpoint_header(k, mode))));
    }
    let body: Vec<String> = lines.collect::<std::io::Result<_>>()?;
    for (n, line) in body.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parsed = (|| {
            if fields.len() != 13 || fields[0] != "block" {
                return None;
            }
            let idx: usize = fields[1].parse().ok()?;
            let evaluated: u64 = fields[2].parse().ok()?;
            let certified = parse_best(&fields[3..8])?;
            let plain = parse_best(&fields[8..13])?;
            Some((idx, BlockResult { evaluated, certified, plain }))
        })();
        match parsed {
            Some((idx, r)) if idx < total => done[idx] = Some(r),
            // a torn last line from an interrupted write is redone
            _ if n + 1 == body.len() => {}
            _ => return Err(bad(format!("malformed entry on line {}", n + 3))),
        }
    }
    Ok(done)
}

fn open_checkpoint(path: &Path, k: u32, mode: SearchMode) -> Result<File> {
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "{CHECKPOINT_MAGIC}")?;
        writeln!(f, "{}", checkpoint_header(k, mode))?;
    }
    Ok(f)
}

/// Runs (or resumes) a search as configured.
pub fn run_search(opts: &SearchOptions) -> Result<SearchOutcome> {
    let start = Instant::now();
    let (k, mode) = (opts.k, opts.mode);
    GridSpec::new(k)?;
    let count = enumeration_count(k, mode);
    if let Some(budget) = opts.budget {
        if count.kept > budget {
            return Err(Error::OverBudget { estimate: count.kept, budget });
        }
    }
    let total = blocks_total(k, mode);
    let mut results = match &opts.checkpoint {
        Some(p) => load_checkpoint(p, k, mode)?,
        None => vec![None; total],
    };
    let mut writer = match &opts.checkpoint {
        Some(p) => Some(open_checkpoint(p, k, mode)?),
        None => None,
    };
    let pending: Vec<usize> = (0..total).filter(|&b| results[b].is_none()).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;

    let mut done_now = 0;
    let mut cursor = 0;
    while cursor < pending.len() {
        let mut size = CHUNK_BLOCKS.min(pending.len() - cursor);
        if let Some(stop) = opts.stop_after_blocks {
            if done_now >= stop {
                return Ok(SearchOutcome::Paused { blocks_done: total - pending.len() + done_now, blocks_total: total });
            }
            size = size.min(stop - done_now);
        }
        let chunk = &pending[cursor..cursor + size];
        let out: Vec<BlockResult> = pool.install(|| chunk.par_iter().map(|&b| evaluate_block(k, mode, b)).collect());
        if let Some(w) = writer.as_mut() {
            let mut text = String::new();
            for (&b, r) in chunk.iter().zip(&out) {
                text.push_str(&format!(
                    "block {b} {} {} {}\n",
                    r.evaluated,
                    fmt_best(&r.certified),
                    fmt_best(&r.plain)
                ));
            }
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        for (&b, r) in chunk.iter().zip(out) {
            results[b] = Some(r);
        }
        cursor += size;
        done_now += size;
    }

    let mut evaluated = 0;
    let (mut certified, mut plain): (Best, Best) = (None, None);
    for r in results.iter().map(|r| r.expect("every block done")) {
        evaluated += r.evaluated;
        if let Some((v, a)) = r.certified {
            improve(&mut certified, v, a);
        }
        if let Some((v, a)) = r.plain {
            improve(&mut plain, v, a);
        }
    }
    if evaluated != count.kept {
        return Err(Error::Checkpoint(format!(
            "evaluated {evaluated} configurations but the enumeration has {}",
            count.kept
        )));
    }
    let (max_pd, argmax) = certified.expect("nonempty search");
    let (max_plain_pd, plain_argmax) = plain.expect("nonempty search");
    let delta = 1.0 / k as f64;
    let threshold = certification_threshold(delta);
    Ok(SearchOutcome::Complete(SearchReport {
        k,
        mode,
        delta,
        max_pd,
        argmax,
        max_plain_pd,
        plain_argmax,
        configs_evaluated: evaluated,
        configs_total: count.total,
        certified_threshold: threshold,
        certified: max_pd < threshold,
        wall_time: start.elapsed(),
    }))
}

/// Search with the default budget and no checkpoint.
pub fn grid_search(k: u32, mode: SearchMode, threads: usize) -> Result<SearchReport> {
    let opts = SearchOptions { threads, ..SearchOptions::new(k, mode) };
    match run_search(&opts)? {
        SearchOutcome::Complete(r) => Ok(r),
        SearchOutcome::Paused { .. } => unreachable!("no stop requested"),
    }
}

/// Full search without a budget; true when the largest certified ratio is
/// below the threshold for `δ = 1/k`.
pub fn certify_plane_bound(k: u32, threads: usize, checkpoint: Option<PathBuf>) -> Result<(bool, SearchReport)> {
    let opts = SearchOptions {
        threads,
        budget: None,
        checkpoint,
        ..SearchOptions::new(k, SearchMode::Full)
    };
    match run_search(&opts)? {
        SearchOutcome::Complete(r) => Ok((r.certified, r)),
        SearchOutcome::Paused { .. } => unreachable!("no stop requested"),
    }
}
