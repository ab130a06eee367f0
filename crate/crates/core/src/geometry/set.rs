use std::sync::Arc;

use super::{all_finite, distance, dot, min_norm_projection, Point};
use crate::error::{invalid, Result};
use crate::shortest_path::FlowPolytope;

/// Absolute tolerance for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetKind {
    IntervalBox,
    EuclideanBall,
    UnitFlowPolytope,
    VertexHull,
}

/// A non-empty, closed, convex decision region with a Euclidean projection.
#[derive(Clone, Debug)]
pub enum DecisionSet {
    IntervalBox { lo: Vec<f64>, hi: Vec<f64> },
    EuclideanBall { center: Vec<f64>, radius: f64 },
    UnitFlow(Arc<FlowPolytope>),
    VertexHull(Arc<VertexHull>),
}

impl DecisionSet {
    pub fn interval_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return invalid("box bounds must be non-empty and of equal length");
        }
        if !all_finite(&lo) || !all_finite(&hi) || lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return invalid("box bounds must be finite with lo <= hi");
        }
        Ok(Self::IntervalBox { lo, hi })
    }

    /// The cube `[-half_width, half_width]^dim`.
    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::interval_box(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || !all_finite(&center) || !(radius.is_finite() && radius > 0.0) {
            return invalid("ball needs a finite center and a positive radius");
        }
        Ok(Self::EuclideanBall { center, radius })
    }

    pub fn unit_flow(polytope: FlowPolytope) -> Self {
        Self::UnitFlow(Arc::new(polytope))
    }

    pub fn vertex_hull(vertices: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Self::VertexHull(Arc::new(VertexHull::new(vertices)?)))
    }

    pub fn kind(&self) -> SetKind {
        match self {
            Self::IntervalBox { .. } => SetKind::IntervalBox,
            Self::EuclideanBall { .. } => SetKind::EuclideanBall,
            Self::UnitFlow(_) => SetKind::UnitFlowPolytope,
            Self::VertexHull(_) => SetKind::VertexHull,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::IntervalBox { lo, .. } => lo.len(),
            Self::EuclideanBall { center, .. } => center.len(),
            Self::UnitFlow(p) => p.dim(),
            Self::VertexHull(h) => h.dim(),
        }
    }

    /// Euclidean diameter, exact or an upper bound.
    pub fn diameter(&self) -> f64 {
        match self {
            Self::IntervalBox { lo, hi } => distance(lo, hi),
            Self::EuclideanBall { radius, .. } => 2.0 * radius,
            Self::UnitFlow(p) => p.diameter(),
            Self::VertexHull(h) => h.diameter,
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() || !all_finite(x) {
            return false;
        }
        match self {
            Self::IntervalBox { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            Self::EuclideanBall { center, radius } => distance(x, center) <= radius + tol,
            Self::UnitFlow(p) => p.contains(x, tol),
            Self::VertexHull(h) => h
                .project(x, tol.max(1e-12))
                .map(|p| distance(&p, x) <= tol + 1e-12)
                .unwrap_or(false),
        }
    }

    /// Euclidean projection of `y`, exact for boxes and balls and within
    /// distance `tol` for the oracle-based polytopes.
    pub fn project(&self, y: &[f64], tol: f64) -> Result<Point> {
        if y.len() != self.dim() {
            return invalid(format!(
                "dimension mismatch: point has {} coordinates, set has {}",
                y.len(),
                self.dim()
            ));
        }
        if !all_finite(y) {
            return invalid("cannot project a non-finite point");
        }
        if !(tol > 0.0) {
            return invalid("projection tolerance must be positive");
        }
        match self {
            Self::IntervalBox { lo, hi } => Ok(y
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect()),
            Self::EuclideanBall { center, radius } => {
                let r = distance(y, center);
                if r <= *radius {
                    Ok(y.to_vec())
                } else {
                    let s = radius / r;
                    Ok(center.iter().zip(y).map(|(c, v)| c + s * (v - c)).collect())
                }
            }
            Self::UnitFlow(p) => p.project(y, tol),
            Self::VertexHull(h) => h.project(y, tol),
        }
    }

    /// A member minimizing `<c, x>` over the set.
    pub fn linear_minimizer(&self, c: &[f64]) -> Point {
        match self {
            Self::IntervalBox { lo, hi } => c
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(ci, (l, h))| if *ci > 0.0 { *l } else { *h })
                .collect(),
            Self::EuclideanBall { center, radius } => {
                let n = super::norm(c);
                if n == 0.0 {
                    center.clone()
                } else {
                    center
                        .iter()
                        .zip(c)
                        .map(|(m, ci)| m - radius * ci / n)
                        .collect()
                }
            }
            Self::UnitFlow(p) => p.linear_minimizer(c),
            Self::VertexHull(h) => h.linear_minimizer(c).clone(),
        }
    }

    /// Starting action: the origin when it is a member, its projection
    /// otherwise.
    pub fn initial_point(&self) -> Result<Point> {
        let origin = vec![0.0; self.dim()];
        if self.contains(&origin, 0.0) {
            return Ok(origin);
        }
        self.project(&origin, 1e-9)
    }
}

/// Convex hull of an explicit vertex list.
#[derive(Clone, Debug)]
pub struct VertexHull {
    pub vertices: Vec<Vec<f64>>,
    pub diameter: f64,
}

impl VertexHull {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return invalid("vertex hull needs at least one vertex");
        };
        let d = first.len();
        if d == 0 || vertices.iter().any(|v| v.len() != d || !all_finite(v)) {
            return invalid("vertices must be finite and share one dimension");
        }
        let mut diameter = 0.0_f64;
        for (i, a) in vertices.iter().enumerate() {
            for b in &vertices[i + 1..] {
                diameter = diameter.max(distance(a, b));
            }
        }
        Ok(Self { vertices, diameter })
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn linear_minimizer(&self, c: &[f64]) -> &Vec<f64> {
        self.vertices
            .iter()
            .map(|v| (dot(c, v), v))
            .fold((f64::INFINITY, &self.vertices[0]), |acc, cur| {
                if cur.0 < acc.0 {
                    cur
                } else {
                    acc
                }
            })
            .1
    }

    pub fn project(&self, y: &[f64], tol: f64) -> Result<Point> {
        let cap = (10.0 * self.vertices.len() as f64 / tol).min(1e6) as usize;
        min_norm_projection(y, |c| self.linear_minimizer(c).clone(), tol, cap.max(100))
            .map(|p| p.point)
    }
}
