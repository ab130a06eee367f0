use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{dot, norm, Affine, DecisionSet, HalfSquaredDistance, Oracle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    AlternatingLinear,
    DriftingOptimum,
    ConstraintPressure,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 3] = [
        AdversaryKind::AlternatingLinear,
        AdversaryKind::DriftingOptimum,
        AdversaryKind::ConstraintPressure,
    ];
}

/// A generated bound-stress instance on the cube `[-1, 1]^d`.
#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    pub set: DecisionSet,
    pub rounds: Vec<(Oracle, Oracle)>,
    /// Common Lipschitz bound of every cost and constraint on the set.
    pub lipschitz: f64,
    /// Per-round constrained optima when they are known in closed form.
    pub optima: Option<Vec<Vec<f64>>>,
}

fn unit_gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `unit(base + spread * xi)` with Gaussian `xi`.
fn jitter(rng: &mut ChaCha8Rng, base: &[f64], spread: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = base
            .iter()
            .map(|b| b + spread * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn affine(coef: Vec<f64>, offset: f64) -> Oracle {
    Arc::new(Affine::new(coef, offset))
}

/// Deterministic adversarial sequences for bound checks.
///
/// * alternating-linear: `f_t = (-1)^t <u, x>` for a fixed unit `u`, with
///   random half-space constraints `<a_t, x> <= b_t`, `b_t` in `[0, 0.2]`.
/// * drifting-optimum: `f_t = ||x - c_t||^2 / 2` with `c_t` travelling along
///   a circle (a segment when `d = 1`) for a total arc length of
///   `path_budget`, and `g_t = <a_t, x - c_t> - m_t` with margin `m_t` in
///   `[0.05, 0.25]`. The sign of `a_t` is chosen so that the origin satisfies
///   every constraint; `c_t` is each round's constrained optimum.
/// * constraint-pressure: costs pull along `+a`, constraints
///   `<a_t, x> <= 0.5 / sqrt(t)` with `a_t` near `a`, so the feasible region
///   keeps shrinking towards the origin.
pub fn synthetic_adversary(
    kind: AdversaryKind,
    d: usize,
    horizon: usize,
    seed: u64,
    path_budget: f64,
) -> Result<SyntheticInstance> {
    if d == 0 {
        return invalid("dimension must be >= 1");
    }
    if horizon == 0 {
        return invalid("horizon must be >= 1");
    }
    if !(path_budget >= 0.0 && path_budget.is_finite()) {
        return invalid("path budget must be finite and >= 0");
    }
    let set = DecisionSet::cube(d, 1.0)?;
    let diameter = set.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rounds = Vec::with_capacity(horizon);
    let mut optima = None;
    let lipschitz;

    match kind {
        AdversaryKind::AlternatingLinear => {
            let u = unit_gaussian(&mut rng, d);
            let a = unit_gaussian(&mut rng, d);
            for t in 1..=horizon {
                let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
                let at = jitter(&mut rng, &a, 0.5);
                let bt = rng.random_range(0.0..0.2);
                rounds.push((
                    affine(u.iter().map(|v| sign * v).collect(), 0.0),
                    affine(at, -bt),
                ));
            }
            lipschitz = 1.0;
        }
        AdversaryKind::ConstraintPressure => {
            let a = unit_gaussian(&mut rng, d);
            for t in 1..=horizon {
                let ct: Vec<f64> = jitter(&mut rng, &a, 0.3).iter().map(|v| -v).collect();
                let at = jitter(&mut rng, &a, 0.3);
                rounds.push((affine(ct, 0.0), affine(at, -0.5 / (t as f64).sqrt())));
            }
            lipschitz = 1.0;
        }
        AdversaryKind::DriftingOptimum => {
            let radius = 0.4;
            let base: Vec<f64> = (0..d).map(|_| rng.random_range(-0.2..0.2)).collect();
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let step = if horizon > 1 {
                path_budget / (horizon - 1) as f64
            } else {
                0.0
            };
            let mut centers = Vec::with_capacity(horizon);
            for t in 0..horizon {
                let s = step * t as f64;
                let mut c = base.clone();
                if d == 1 {
                    // Triangle wave on [base - r, base + r].
                    let period = 4.0 * radius;
                    let u = (s + phase / std::f64::consts::TAU * period) % period;
                    c[0] += if u < 2.0 * radius {
                        u - radius
                    } else {
                        3.0 * radius - u
                    };
                } else {
                    let theta = phase + s / radius;
                    c[0] += radius * theta.cos();
                    c[1] += radius * theta.sin();
                }
                let mut a = unit_gaussian(&mut rng, d);
                if dot(&a, &c) < 0.0 {
                    a.iter_mut().for_each(|v| *v = -*v);
                }
                let margin = rng.random_range(0.05..0.25);
                let offset = -dot(&a, &c) - margin;
                rounds.push((
                    Arc::new(HalfSquaredDistance::new(c.clone(), 1.0, diameter)) as Oracle,
                    affine(a, offset),
                ));
                centers.push(c);
            }
            optima = Some(centers);
            lipschitz = diameter.max(1.0);
        }
    }
    Ok(SyntheticInstance {
        set,
        rounds,
        lipschitz,
        optima,
    })
}
