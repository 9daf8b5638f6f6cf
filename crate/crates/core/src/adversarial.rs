//! Lower-bound instances and a checker for their claimed social costs.
//!
//! * the top-k squared-distortion instance: one agent's private alternatives
//!   form a small clique far from everything else;
//! * the three-leaf star, in two metrics that induce the same ordinal
//!   profile, either abstract or embedded on a circle;
//! * the circle instance: an outlier agent at unit distance from a tight
//!   cluster of agents, each with private alternatives.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};

use crate::error::{Error, Result};
use crate::metric::{MetricInstance, Point};

pub const DEFAULT_STAR_EPS: f64 = 1e-3;
pub const DEFAULT_CIRCLE_EPS: f64 = 1e-4;
pub const DEFAULT_CIRCLE_DELTA: f64 = 1e-3;

pub fn default_topk_eps(agents: usize) -> f64 {
    1.0 / (2.0 * agents as f64)
}

/// Agent `u*` of the top-k and circle instances.
pub const TARGET_AGENT: usize = 0;

/// `n` agents, each owning `k` private alternatives (alternatives
/// `u·k .. (u+1)·k` belong to agent `u`). Agent 0 and its alternatives form
/// one clique, everyone else the other; distances are `eps` within a clique
/// and 1 across.
pub fn build_topk_squared_instance(agents: usize, k: usize, eps: f64) -> Result<MetricInstance> {
    if agents < 2 {
        return Err(Error::Domain(format!("need at least 2 agents, got {agents}")));
    }
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if !(eps > 0.0 && eps <= 1.0 / agents as f64) {
        return Err(Error::Domain(format!("eps must lie in (0, 1/n] = (0, {}], got {eps}", 1.0 / agents as f64)));
    }
    let alternatives = k * agents;
    let size = agents + alternatives;
    let in_small = |node: usize| {
        if node < agents {
            node == TARGET_AGENT
        } else {
            (node - agents) / k == TARGET_AGENT
        }
    };
    let mut matrix = vec![0.0; size * size];
    for i in 0..size {
        for j in 0..size {
            if i != j {
                matrix[i * size + j] = if in_small(i) == in_small(j) { eps } else { 1.0 };
            }
        }
    }
    MetricInstance::from_matrix(agents, alternatives, matrix)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarVariant {
    /// Leaves pairwise far apart: the center is optimal.
    A,
    /// Leaves pairwise close: any leaf is optimal.
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarGeometry {
    Abstract,
    EuclideanCircle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarFamily {
    pub variant: StarVariant,
    pub eps: f64,
    pub geometry: StarGeometry,
}

impl StarFamily {
    pub fn new(variant: StarVariant, eps: f64, geometry: StarGeometry) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Domain(format!("eps must lie in (0, 0.5), got {eps}")));
        }
        Ok(StarFamily { variant, eps, geometry })
    }

    /// Leaf-to-leaf distances `d(0,1), d(0,2), d(1,2)`.
    pub fn leaf_distances(&self) -> [f64; 3] {
        let wide = chord(2.0 * FRAC_PI_3);
        match (self.variant, self.geometry) {
            (StarVariant::A, StarGeometry::Abstract) => [2.0; 3],
            (StarVariant::B, StarGeometry::Abstract) => [1.0 + self.eps; 3],
            (StarVariant::A, StarGeometry::EuclideanCircle) => [wide; 3],
            (StarVariant::B, StarGeometry::EuclideanCircle) => [1.0, wide, 1.0],
        }
    }
}

/// Chord of the unit circle subtending `angle`: `√(2 − 2cos angle)`.
pub fn chord(angle: f64) -> f64 {
    (2.0 - 2.0 * angle.cos()).sqrt()
}

/// Alternative index of the star's center `B`; leaves are 0, 1, 2.
pub const STAR_CENTER: usize = 3;

/// Three agents, one on each leaf; alternatives are the three leaves and
/// the center, which is at distance 1 from every leaf.
pub fn build_star_instance(family: &StarFamily) -> Result<MetricInstance> {
    let family = StarFamily::new(family.variant, family.eps, family.geometry)?;
    match family.geometry {
        StarGeometry::Abstract => {
            let [d01, d02, d12] = family.leaf_distances();
            let leaf = [[0.0, d01, d02], [d01, 0.0, d12], [d02, d12, 0.0]];
            // nodes 0..3 agents, 3..6 leaves, 6 center
            let site = |node: usize| if node < 6 { Some(node % 3) } else { None };
            let size = 7;
            let mut matrix = vec![0.0; size * size];
            for i in 0..size {
                for j in 0..size {
                    matrix[i * size + j] = match (site(i), site(j)) {
                        (Some(a), Some(b)) => leaf[a][b],
                        (None, None) => 0.0,
                        _ => 1.0,
                    };
                }
            }
            MetricInstance::from_matrix(3, 4, matrix)
        }
        StarGeometry::EuclideanCircle => {
            let angles = match family.variant {
                StarVariant::A => [FRAC_PI_2, FRAC_PI_2 + 2.0 * FRAC_PI_3, FRAC_PI_2 + 4.0 * FRAC_PI_3],
                StarVariant::B => [0.0, FRAC_PI_3, 2.0 * FRAC_PI_3],
            };
            let leaves: Vec<Point> = angles.iter().map(|t| Point::new(t.cos(), t.sin())).collect();
            let mut alts = leaves.clone();
            alts.push(Point::new(0.0, 0.0));
            MetricInstance::from_planar(&leaves, &alts)
        }
    }
}

/// Best worst-case distortion an ordinal mechanism can achieve on the star
/// pair, and the probabilities that achieve it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureOptimum {
    /// Probability of choosing the center `B`: `(2+2ε)/(5−4ε)`.
    pub p_center: f64,
    /// Probability of choosing some leaf.
    pub p_leaf: f64,
    /// `4/3 − p_center/3`.
    pub value: f64,
}

/// Expected distortion, maximized over the two star metrics, of a mechanism
/// that picks a leaf with probability `p_leaf` and the center otherwise.
pub fn star_regret(eps: f64, p_leaf: f64) -> f64 {
    let p_center = 1.0 - p_leaf;
    let far = p_center + 4.0 / 3.0 * p_leaf;
    let near = 3.0 / (2.0 * (1.0 + eps)) * p_center + p_leaf;
    far.max(near)
}

/// Minimizer of [`star_regret`] in closed form. `eps = 0` is accepted as
/// the limiting case.
pub fn optimal_ordinal_mixture(eps: f64, geometry: StarGeometry) -> Result<MixtureOptimum> {
    if geometry != StarGeometry::Abstract {
        return Err(Error::NotAvailable(
            "closed-form mixture is derived for the abstract star only".into(),
        ));
    }
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::Domain(format!("eps must lie in [0, 0.5), got {eps}")));
    }
    let p_center = (2.0 + 2.0 * eps) / (5.0 - 4.0 * eps);
    Ok(MixtureOptimum {
        p_center,
        p_leaf: 1.0 - p_center,
        value: 4.0 / 3.0 - p_center / 3.0,
    })
}

/// Outlier agent 0 at unit distance from the center of a circle of
/// diameter `delta` carrying the other `n − 1` agents; every agent owns `k`
/// alternatives at distance `eps` (alternatives `u·k .. (u+1)·k`).
///
/// The cluster agents sit at equal angular spacing on the arc of the circle
/// that is within distance 1 of the outlier, and their alternatives are
/// offset toward the outlier (within ±30°). That keeps every alternative
/// outside the outlier's set at social cost at most
/// `1 + eps·delta/2 + (n−2)(delta + 2eps)`.
pub fn build_circle_instance(agents: usize, k: usize, eps: f64, delta: f64) -> Result<MetricInstance> {
    if agents < 2 {
        return Err(Error::Domain(format!("need at least 2 agents, got {agents}")));
    }
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if !(delta > 0.0 && delta <= 1.0 / agents as f64) {
        return Err(Error::Domain(format!("delta must lie in (0, 1/n], got {delta}")));
    }
    if !(eps > 0.0 && eps <= delta / 10.0) {
        return Err(Error::Domain(format!("eps must lie in (0, delta/10], got {eps}")));
    }
    let radius = delta / 2.0;
    let outlier = Point::new(0.0, 1.0);
    let arc = (radius / 2.0).acos();
    let cluster = agents - 1;
    let mut agent_points = vec![outlier];
    for i in 0..cluster {
        let theta = if cluster == 1 {
            0.0
        } else {
            -arc + 2.0 * arc * i as f64 / (cluster - 1) as f64
        };
        agent_points.push(Point::new(radius * theta.sin(), radius * theta.cos()));
    }
    let fan = |t: usize| {
        if k == 1 {
            0.0
        } else {
            -FRAC_PI_6 + 2.0 * FRAC_PI_6 * t as f64 / (k - 1) as f64
        }
    };
    let mut alts = Vec::with_capacity(agents * k);
    for (u, p) in agent_points.iter().enumerate() {
        // away from the cluster for the outlier, toward the outlier otherwise
        let (dx, dy) = if u == TARGET_AGENT {
            (0.0, 1.0)
        } else {
            let (dx, dy) = (outlier.x - p.x, outlier.y - p.y);
            let len = dx.hypot(dy);
            (dx / len, dy / len)
        };
        for t in 0..k {
            let (s, c) = fan(t).sin_cos();
            let (rx, ry) = (dx * c - dy * s, dx * s + dy * c);
            alts.push(Point::new(p.x + eps * rx, p.y + eps * ry));
        }
    }
    MetricInstance::from_planar(&agent_points, &alts)
}

/// A claimed social cost for one alternative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostClaim {
    pub alternative: usize,
    pub cost: f64,
    pub tolerance: f64,
}

impl CostClaim {
    pub fn new(alternative: usize, cost: f64, tolerance: f64) -> Self {
        CostClaim { alternative, cost, tolerance }
    }
}

/// Recomputes each claimed social cost; false if any is off by more than
/// its tolerance or names a nonexistent alternative.
pub fn verify_construction(inst: &MetricInstance, expected: &[CostClaim]) -> bool {
    expected.iter().all(|claim| match inst.social_cost(claim.alternative) {
        Ok(c) => (c - claim.cost).abs() <= claim.tolerance,
        Err(_) => false,
    })
}
