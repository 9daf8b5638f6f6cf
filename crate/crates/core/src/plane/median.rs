//! Planar geometric median by Weiszfeld iteration.

use crate::error::{Error, Result};
use crate::metric::Point;

/// Iteration stops once a step is shorter than this, relative to the spread
/// of the input.
pub const MEDIAN_STEP_TOL: f64 = 1e-11;
/// Gradient norm below which a step shorter than [`MEDIAN_STEP_TOL`] ends
/// the iteration.
const GRAD_TOL: f64 = 1e-10;
/// Steps this short (relative) end the iteration regardless.
const STALL_TOL: f64 = 1e-15;
/// An iterate this close (relative) to an input point is treated as on it.
const SNAP_TOL: f64 = 1e-12;
/// Slack on the anchor test `|R| <= multiplicity`.
const ANCHOR_SLACK: f64 = 1e-12;
const MAX_ITER: usize = 200_000;

pub fn avg_cost(points: &[Point], y: Point) -> f64 {
    points.iter().map(|p| p.dist(&y)).sum::<f64>() / points.len() as f64
}

/// Sum of unit vectors from the input points toward `y`, skipping points
/// equal to `y`, together with how many points were skipped.
fn pull(points: &[Point], y: Point) -> ((f64, f64), usize) {
    let (mut rx, mut ry, mut mult) = (0.0, 0.0, 0);
    for p in points {
        let d = p.dist(&y);
        if d == 0.0 {
            mult += 1;
        } else {
            rx += (y.x - p.x) / d;
            ry += (y.y - p.y) / d;
        }
    }
    ((rx, ry), mult)
}

/// Distance from zero to the subdifferential of the summed distance at `y`:
/// the gradient norm off the input points, `max(0, |R| - multiplicity)` on
/// one.
pub fn optimality_residual(points: &[Point], y: Point) -> f64 {
    let ((rx, ry), mult) = pull(points, y);
    (rx.hypot(ry) - mult as f64).max(0.0)
}

fn is_anchor(points: &[Point], p: Point) -> bool {
    let ((rx, ry), mult) = pull(points, p);
    rx.hypot(ry) <= mult as f64 + ANCHOR_SLACK
}

/// Point minimizing the mean Euclidean distance to `points`, and that mean.
///
/// Input points are tried first with the anchor test; otherwise Weiszfeld
/// runs from the centroid, stepping off any input point it lands on along
/// the descent direction. The best of the final iterate and the input points
/// is returned.
pub fn geometric_median(points: &[Point]) -> Result<(Point, f64)> {
    if points.is_empty() {
        return Err(Error::Domain("geometric median of an empty set".into()));
    }
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(Error::Domain(format!("non-finite point ({}, {})", p.x, p.y)));
    }
    let n = points.len() as f64;
    let centroid = Point::new(
        points.iter().map(|p| p.x).sum::<f64>() / n,
        points.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let spread = points.iter().map(|p| p.dist(&centroid)).fold(0.0, f64::max);
    if spread == 0.0 {
        return Ok((points[0], 0.0));
    }

    let mut best = (points[0], f64::INFINITY);
    for &p in points {
        if is_anchor(points, p) {
            return Ok((p, avg_cost(points, p)));
        }
        let c = avg_cost(points, p);
        if c < best.1 {
            best = (p, c);
        }
    }

    let mut y = centroid;
    for _ in 0..MAX_ITER {
        let (mut sx, mut sy, mut w) = (0.0, 0.0, 0.0);
        let (mut gx, mut gy) = (0.0, 0.0);
        let mut on = None;
        for p in points {
            let d = p.dist(&y);
            if d <= SNAP_TOL * spread {
                on = Some(*p);
                continue;
            }
            sx += p.x / d;
            sy += p.y / d;
            w += 1.0 / d;
            gx += (y.x - p.x) / d;
            gy += (y.y - p.y) / d;
        }
        let next = match on {
            // Not an anchor (checked above): move along -R by the
            // Vardi-Zhang step length.
            Some(p) => {
                let ((rx, ry), mult) = pull(points, p);
                let r = rx.hypot(ry);
                let mut wsum = 0.0;
                for q in points {
                    let d = q.dist(&p);
                    if d > 0.0 {
                        wsum += 1.0 / d;
                    }
                }
                let t = (1.0 - mult as f64 / r) / wsum;
                Point::new(p.x - t * rx, p.y - t * ry)
            }
            None => Point::new(sx / w, sy / w),
        };
        let step = next.dist(&y);
        y = next;
        let settled = on.is_none() && gx.hypot(gy) <= GRAD_TOL;
        if (step < MEDIAN_STEP_TOL * spread && settled) || step < STALL_TOL * spread {
            break;
        }
    }
    let c = avg_cost(points, y);
    if c < best.1 {
        best = (y, c);
    }
    Ok(best)
}
