//! Metric instances: agents and alternatives under a validated distance.
//!
//! An instance is either an explicit `(n+m)×(n+m)` distance matrix (agents
//! first, then alternatives) or a planar embedding with Euclidean distance.
//! Agent-to-alternative costs are tabulated once at construction; every
//! other module reads them through [`MetricInstance::cost`].
//!
//! Ties are broken toward the lowest alternative index everywhere.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Slack allowed on the triangle inequality when validating matrices.
pub const METRIC_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Lexicographic order on `(x, y)`.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A participant in the metric: either an agent or an alternative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Agent(usize),
    Alternative(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    /// Row-major `(n+m)²` matrix, agents occupying the first `n` rows.
    Matrix(Vec<f64>),
    /// `n + m` points, agents first.
    Planar(Vec<Point>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricInstance {
    agents: usize,
    alternatives: usize,
    geometry: Geometry,
    /// Agent-major `n×m` table of `d(u, a)`.
    costs: Vec<f64>,
}

/// Checks that `matrix` is a `size×size` metric: finite, nonnegative, zero
/// diagonal, exactly symmetric, triangle inequality within [`METRIC_TOL`].
pub fn validate_matrix(size: usize, matrix: &[f64]) -> Result<()> {
    if matrix.len() != size * size {
        return Err(Error::InvalidInstance(format!(
            "matrix has {} entries, expected {}",
            matrix.len(),
            size * size
        )));
    }
    let at = |i: usize, j: usize| matrix[i * size + j];
    for i in 0..size {
        for j in 0..size {
            let d = at(i, j);
            if !d.is_finite() {
                return Err(Error::InvalidInstance(format!("d({i},{j}) is not finite")));
            }
            if d < 0.0 {
                return Err(Error::InvalidInstance(format!("d({i},{j}) = {d} is negative")));
            }
            if i == j && d != 0.0 {
                return Err(Error::InvalidInstance(format!("d({i},{i}) = {d} is not zero")));
            }
            if d != at(j, i) {
                return Err(Error::InvalidInstance(format!(
                    "asymmetric: d({i},{j}) = {d} but d({j},{i}) = {}",
                    at(j, i)
                )));
            }
        }
    }
    for x in 0..size {
        for y in 0..size {
            let dxy = at(x, y);
            for z in 0..size {
                if at(x, z) > dxy + at(y, z) + METRIC_TOL {
                    return Err(Error::InvalidInstance(format!(
                        "triangle inequality fails: d({x},{z}) = {} > d({x},{y}) + d({y},{z}) = {}",
                        at(x, z),
                        dxy + at(y, z)
                    )));
                }
            }
        }
    }
    Ok(())
}

fn check_sizes(agents: usize, alternatives: usize) -> Result<()> {
    if agents == 0 {
        return Err(Error::InvalidInstance("need at least one agent".into()));
    }
    if alternatives == 0 {
        return Err(Error::InvalidInstance("need at least one alternative".into()));
    }
    Ok(())
}

impl MetricInstance {
    pub fn from_matrix(agents: usize, alternatives: usize, matrix: Vec<f64>) -> Result<Self> {
        check_sizes(agents, alternatives)?;
        let size = agents + alternatives;
        validate_matrix(size, &matrix)?;
        let mut costs = Vec::with_capacity(agents * alternatives);
        for u in 0..agents {
            for a in 0..alternatives {
                costs.push(matrix[u * size + agents + a]);
            }
        }
        Ok(MetricInstance {
            agents,
            alternatives,
            geometry: Geometry::Matrix(matrix),
            costs,
        })
    }

    /// Skips metric validation. Only for demonstrating what breaks on
    /// non-metric inputs; the rest of the crate assumes a metric.
    pub fn from_matrix_unvalidated(agents: usize, alternatives: usize, matrix: Vec<f64>) -> Self {
        let size = agents + alternatives;
        assert_eq!(matrix.len(), size * size, "matrix size");
        let costs = (0..agents)
            .flat_map(|u| (0..alternatives).map(move |a| (u, a)))
            .map(|(u, a)| matrix[u * size + agents + a])
            .collect();
        MetricInstance {
            agents,
            alternatives,
            geometry: Geometry::Matrix(matrix),
            costs,
        }
    }

    /// `points` lists the agents first, then the alternatives.
    pub fn from_points(agents: usize, alternatives: usize, points: Vec<Point>) -> Result<Self> {
        check_sizes(agents, alternatives)?;
        if points.len() != agents + alternatives {
            return Err(Error::InvalidInstance(format!(
                "{} points given for {} agents and {} alternatives",
                points.len(),
                agents,
                alternatives
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInstance(format!("point {i} is not finite")));
        }
        let mut costs = Vec::with_capacity(agents * alternatives);
        for u in 0..agents {
            for a in 0..alternatives {
                costs.push(points[u].dist(&points[agents + a]));
            }
        }
        Ok(MetricInstance {
            agents,
            alternatives,
            geometry: Geometry::Planar(points),
            costs,
        })
    }

    pub fn from_planar(agent_points: &[Point], alternative_points: &[Point]) -> Result<Self> {
        let mut points = agent_points.to_vec();
        points.extend_from_slice(alternative_points);
        Self::from_points(agent_points.len(), alternative_points.len(), points)
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn alternatives(&self) -> usize {
        self.alternatives
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    fn node_index(&self, node: Node) -> Result<usize> {
        match node {
            Node::Agent(u) => {
                self.check_agent(u)?;
                Ok(u)
            }
            Node::Alternative(a) => {
                self.check_alternative(a)?;
                Ok(self.agents + a)
            }
        }
    }

    /// Distance between any two participants.
    pub fn distance(&self, x: Node, y: Node) -> Result<f64> {
        let (i, j) = (self.node_index(x)?, self.node_index(y)?);
        Ok(match &self.geometry {
            Geometry::Matrix(m) => m[i * (self.agents + self.alternatives) + j],
            Geometry::Planar(p) => p[i].dist(&p[j]),
        })
    }

    /// `d(u, a)`. Panics on out-of-range indices; the checked operations
    /// below validate first.
    #[inline]
    pub fn cost(&self, u: usize, a: usize) -> f64 {
        self.costs[u * self.alternatives + a]
    }

    pub fn check_agent(&self, u: usize) -> Result<()> {
        if u < self.agents {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                what: "agent",
                index: u,
                len: self.agents,
            })
        }
    }

    pub fn check_alternative(&self, a: usize) -> Result<()> {
        if a < self.alternatives {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                what: "alternative",
                index: a,
                len: self.alternatives,
            })
        }
    }

    /// `SC(a) = Σ_u d(u, a)`, summed in ascending agent order.
    pub fn social_cost(&self, a: usize) -> Result<f64> {
        self.check_alternative(a)?;
        Ok(self.social_cost_unchecked(a))
    }

    pub(crate) fn social_cost_unchecked(&self, a: usize) -> f64 {
        (0..self.agents).map(|u| self.cost(u, a)).sum()
    }

    pub fn social_costs(&self) -> Vec<f64> {
        (0..self.alternatives)
            .map(|a| self.social_cost_unchecked(a))
            .collect()
    }

    /// The social-cost minimizer and its cost; lowest index on ties.
    pub fn optimal_alternative(&self) -> (usize, f64) {
        let mut best = (0, self.social_cost_unchecked(0));
        for a in 1..self.alternatives {
            let c = self.social_cost_unchecked(a);
            if c < best.1 {
                best = (a, c);
            }
        }
        best
    }

    pub fn favorite(&self, u: usize) -> Result<usize> {
        self.check_agent(u)?;
        Ok(self.favorite_unchecked(u))
    }

    pub(crate) fn favorite_unchecked(&self, u: usize) -> usize {
        let row = &self.costs[u * self.alternatives..(u + 1) * self.alternatives];
        let mut best = 0;
        for (a, &d) in row.iter().enumerate().skip(1) {
            if d < row[best] {
                best = a;
            }
        }
        best
    }

    /// Favorite alternative of every agent, in agent order.
    pub fn favorites(&self) -> Vec<usize> {
        (0..self.agents).map(|u| self.favorite_unchecked(u)).collect()
    }

    /// Answer to a comparison query: whichever of `a`, `b` is nearer to `u`.
    pub fn compare(&self, u: usize, a: usize, b: usize) -> Result<usize> {
        self.check_agent(u)?;
        self.check_alternative(a)?;
        self.check_alternative(b)?;
        Ok(self.compare_unchecked(u, a, b))
    }

    #[inline]
    pub(crate) fn compare_unchecked(&self, u: usize, a: usize, b: usize) -> usize {
        let (da, db) = (self.cost(u, a), self.cost(u, b));
        if da < db || (da == db && a <= b) {
            a
        } else {
            b
        }
    }

    pub fn derive_profile(&self) -> PreferenceProfile {
        let orders = (0..self.agents)
            .map(|u| {
                let mut order: Vec<usize> = (0..self.alternatives).collect();
                order.sort_by(|&a, &b| {
                    self.cost(u, a)
                        .total_cmp(&self.cost(u, b))
                        .then(a.cmp(&b))
                });
                order
            })
            .collect();
        PreferenceProfile { orders }
    }
}

/// Per-agent rankings of the alternatives, nearest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceProfile {
    orders: Vec<Vec<usize>>,
}

impl PreferenceProfile {
    pub fn order(&self, u: usize) -> &[usize] {
        &self.orders[u]
    }

    pub fn orders(&self) -> &[Vec<usize>] {
        &self.orders
    }

    pub fn top(&self, u: usize) -> usize {
        self.orders[u][0]
    }

    /// Position of `a` in agent `u`'s ranking.
    pub fn rank(&self, u: usize, a: usize) -> usize {
        self.orders[u]
            .iter()
            .position(|&x| x == a)
            .expect("orders are permutations")
    }
}
