//! Euclidean projection onto the convex hull of a vertex set that is only
//! reachable through a linear minimization oracle.
//!
//! This is Wolfe's minimum-norm-point method: a Frank-Wolfe scheme whose
//! iterate is re-optimized over the affine hull of its active vertices after
//! every oracle call. Plain Frank-Wolfe converges at O(1/k) on this problem,
//! which is far too slow to reach a squared-distance gap near 1e-12; the
//! corrective steps give finite termination instead.

use super::{dot, sub};
use crate::error::{Error, Result};

/// Weight below which an active vertex is dropped.
const WEIGHT_EPS: f64 = 1e-14;

/// Oracle calls without a new best gap before giving up. Targets below the
/// rounding noise of the gap otherwise cycle until `max_iter`.
const STALL_LIMIT: usize = 1000;

#[derive(Clone, Debug)]
pub struct MinNormProjection {
    pub point: Vec<f64>,
    /// Frank-Wolfe duality gap `<x - y, x - v>` at the returned point.
    /// `||x - proj(y)||^2 <= 2 * gap`.
    pub gap: f64,
    pub iterations: usize,
    /// Active vertices and their convex weights; `point` is their combination.
    pub atoms: Vec<(Vec<f64>, f64)>,
}

struct Corral {
    vertices: Vec<Vec<f64>>,
    /// `vertices[i] - y`
    shifted: Vec<Vec<f64>>,
    weights: Vec<f64>,
    /// `gram[i][j] = <shifted[i], shifted[j]>`
    gram: Vec<Vec<f64>>,
}

impl Corral {
    fn new() -> Self {
        Self {
            vertices: Vec::new(),
            shifted: Vec::new(),
            weights: Vec::new(),
            gram: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.vertices.len()
    }

    fn push(&mut self, v: Vec<f64>, y: &[f64], weight: f64) {
        let z = sub(&v, y);
        let row: Vec<f64> = self.shifted.iter().map(|s| dot(s, &z)).collect();
        for (g, r) in self.gram.iter_mut().zip(&row) {
            g.push(*r);
        }
        let mut row = row;
        row.push(dot(&z, &z));
        self.gram.push(row);
        self.vertices.push(v);
        self.shifted.push(z);
        self.weights.push(weight);
    }

    fn remove(&mut self, i: usize) {
        self.vertices.remove(i);
        self.shifted.remove(i);
        self.weights.remove(i);
        self.gram.remove(i);
        for g in &mut self.gram {
            g.remove(i);
        }
    }

    fn contains(&self, v: &[f64]) -> bool {
        self.vertices
            .iter()
            .any(|u| u.iter().zip(v).all(|(a, b)| (a - b).abs() <= 1e-12))
    }

    fn point(&self, dim: usize) -> Vec<f64> {
        let mut x = vec![0.0; dim];
        for (v, w) in self.vertices.iter().zip(&self.weights) {
            super::axpy(&mut x, *w, v);
        }
        x
    }

    /// Coefficients (summing to one) of the minimum-norm point of the affine
    /// hull of the shifted vertices, or `None` if they are numerically
    /// affinely dependent.
    fn affine_minimizer(&self) -> Option<Vec<f64>> {
        let k = self.len();
        // (G + 11^T) beta = 1, alpha = beta / sum(beta). G + 11^T is the Gram
        // matrix of the vertices lifted by a unit coordinate, so it is
        // positive definite exactly when they are affinely independent.
        let mut m: Vec<Vec<f64>> = self
            .gram
            .iter()
            .map(|row| row.iter().map(|v| v + 1.0).collect())
            .collect();
        let max_diag = (0..k).map(|i| m[i][i]).fold(0.0_f64, f64::max);
        // Cholesky in place (lower triangle).
        for j in 0..k {
            let mut d = m[j][j];
            for p in 0..j {
                d -= m[j][p] * m[j][p];
            }
            if d <= 1e-13 * max_diag {
                return None;
            }
            let d = d.sqrt();
            m[j][j] = d;
            for i in (j + 1)..k {
                let mut s = m[i][j];
                for p in 0..j {
                    s -= m[i][p] * m[j][p];
                }
                m[i][j] = s / d;
            }
        }
        let mut beta = vec![1.0; k];
        for i in 0..k {
            let mut s = beta[i];
            for p in 0..i {
                s -= m[i][p] * beta[p];
            }
            beta[i] = s / m[i][i];
        }
        for i in (0..k).rev() {
            let mut s = beta[i];
            for p in (i + 1)..k {
                s -= m[p][i] * beta[p];
            }
            beta[i] = s / m[i][i];
        }
        let total: f64 = beta.iter().sum();
        if !total.is_finite() || total.abs() < f64::MIN_POSITIVE {
            return None;
        }
        Some(beta.into_iter().map(|b| b / total).collect())
    }
}

/// Projects `y` onto the convex hull of the vertices reachable through `lmo`,
/// where `lmo(c)` returns a vertex minimizing `<c, v>`.
///
/// Stops once the duality gap is at most `tol^2 / 2`, which puts the result
/// within Euclidean distance `tol` of the exact projection.
pub fn min_norm_projection<L>(
    y: &[f64],
    mut lmo: L,
    tol: f64,
    max_iter: usize,
) -> Result<MinNormProjection>
where
    L: FnMut(&[f64]) -> Vec<f64>,
{
    let dim = y.len();
    let target_gap = 0.5 * tol * tol;
    let mut corral = Corral::new();
    let neg_y: Vec<f64> = y.iter().map(|v| -v).collect();
    corral.push(lmo(&neg_y), y, 1.0);
    let mut x = corral.point(dim);
    let mut gap = f64::INFINITY;
    let mut best = (f64::INFINITY, 0);

    for iteration in 1..=max_iter {
        let direction = sub(&x, y);
        let v = lmo(&direction);
        gap = dot(&direction, &sub(&x, &v));
        if gap <= target_gap {
            return Ok(finish(corral, x, gap, iteration));
        }
        if gap < best.0 {
            best = (gap, iteration);
        } else if iteration - best.1 >= STALL_LIMIT {
            return Err(Error::Convergence {
                iterations: iteration,
                residual: best.0,
                best: x,
            });
        }
        if corral.contains(&v) {
            // The oracle can no longer improve on the active set, so the gap
            // left over is rounding noise in `x`.
            return Ok(finish(corral, x, gap.max(0.0), iteration));
        }
        corral.push(v, y, 0.0);

        let mut stalled = false;
        loop {
            let Some(alpha) = corral.affine_minimizer() else {
                stalled = true;
                break;
            };
            if alpha.iter().all(|a| *a > WEIGHT_EPS) {
                corral.weights = alpha;
                break;
            }
            let mut theta = 1.0_f64;
            for (w, a) in corral.weights.iter().zip(&alpha) {
                if *a <= WEIGHT_EPS {
                    let denom = w - a;
                    if denom > 0.0 {
                        theta = theta.min(w / denom);
                    } else {
                        theta = 0.0;
                    }
                }
            }
            for (w, a) in corral.weights.iter_mut().zip(&alpha) {
                *w = theta * a + (1.0 - theta) * *w;
            }
            let before = corral.len();
            let mut i = 0;
            while i < corral.len() {
                if corral.weights[i] <= WEIGHT_EPS {
                    corral.remove(i);
                } else {
                    i += 1;
                }
            }
            if corral.len() == before {
                // Pin the weight that hit zero first.
                let (idx, _) = alpha
                    .iter()
                    .zip(&corral.weights)
                    .enumerate()
                    .filter(|(_, (a, _))| **a <= WEIGHT_EPS)
                    .map(|(i, (_, w))| (i, *w))
                    .fold(
                        (0, f64::INFINITY),
                        |acc, c| if c.1 < acc.1 { c } else { acc },
                    );
                corral.remove(idx);
            }
            let total: f64 = corral.weights.iter().sum();
            corral.weights.iter_mut().for_each(|w| *w /= total);
            if corral.len() == 0 {
                stalled = true;
                break;
            }
        }
        if stalled {
            // Drop the vertex that made the active set degenerate and keep
            // the last good point.
            if corral.len() > 0 {
                let last = corral.len() - 1;
                if corral.weights[last] <= WEIGHT_EPS {
                    corral.remove(last);
                }
                let total: f64 = corral.weights.iter().sum();
                corral.weights.iter_mut().for_each(|w| *w /= total);
            }
            if corral.len() == 0 {
                return Err(Error::Convergence {
                    iterations: iteration,
                    residual: gap,
                    best: x,
                });
            }
            let x_new = corral.point(dim);
            let d = sub(&x_new, y);
            let v = lmo(&d);
            let g = dot(&d, &sub(&x_new, &v));
            return Ok(finish(corral, x_new, g.max(0.0), iteration));
        }
        x = corral.point(dim);
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual: gap,
        best: x,
    })
}

fn finish(corral: Corral, point: Vec<f64>, gap: f64, iterations: usize) -> MinNormProjection {
    MinNormProjection {
        point,
        gap,
        iterations,
        atoms: corral.vertices.into_iter().zip(corral.weights).collect(),
    }
}
