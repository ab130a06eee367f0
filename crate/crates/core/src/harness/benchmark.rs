//! Offline comparators: the best fixed feasible action in hindsight and the
//! per-round constrained optimum.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::coco::{Comparator, ComparatorSolver};
use crate::error::{Error, Result};
use crate::geometry::{distance, dot, norm, norm_sq, DecisionSet, Oracle, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkMethod {
    /// Unconstrained minimizer that happens to be feasible, or a single
    /// linear minimization.
    Closed,
    /// Simplex with lazily added constraint rows.
    Lp,
    /// Deep-cut ellipsoid method.
    Ellipsoid,
    /// Exact-penalty projected subgradient descent.
    Penalty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkOptions {
    /// Force one method instead of the cheapest applicable one.
    pub method: Option<BenchmarkMethod>,
    /// Target gap, relative to `sum_t Lip(f_t) * D`.
    pub gap_tol: f64,
    /// Accepted constraint value, relative to `max_t Lip(g_t) * D`.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Cross-check against grid search when the dimension is at most 3.
    pub grid_check: bool,
    /// Grid spacing relative to the diameter.
    pub grid_resolution: f64,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            method: None,
            gap_tol: 1e-10,
            feas_tol: 1e-9,
            max_iter: 200_000,
            grid_check: true,
            grid_resolution: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub point: Point,
    /// `sum_t f_t(point)`
    pub value: f64,
    /// `max_t g_t(point)`
    pub residual: f64,
    /// Certified upper bound on `value - optimum`.
    pub gap: f64,
    pub method: BenchmarkMethod,
    /// Best objective over a feasible grid, when the cross-check ran.
    pub grid_value: Option<f64>,
    /// `sum_t Lip(f_t) * D`
    pub objective_scale: f64,
}

impl BenchmarkResult {
    /// Grid search agrees within `resolution * D * sum Lip(f_t)`.
    pub fn grid_agrees(&self, resolution: f64) -> Option<bool> {
        self.grid_value
            .map(|g| (g - self.value).abs() <= resolution * self.objective_scale + self.gap)
    }
}

/// `sum_t f_t` with quadratic and linear parts collapsed.
struct Objective {
    quad: f64,
    lin: Vec<f64>,
    constant: f64,
    rest: Vec<Oracle>,
}

impl Objective {
    fn new<'a>(fs: impl Iterator<Item = &'a Oracle>, d: usize) -> Self {
        let mut obj = Objective {
            quad: 0.0,
            lin: vec![0.0; d],
            constant: 0.0,
            rest: Vec::new(),
        };
        for f in fs {
            if let Some((c, b)) = f.as_affine() {
                obj.lin.iter_mut().zip(c).for_each(|(l, ci)| *l += ci);
                obj.constant += b;
            } else if let Some((center, s)) = f.as_half_squared() {
                obj.quad += s;
                obj.lin
                    .iter_mut()
                    .zip(center)
                    .for_each(|(l, ci)| *l -= s * ci);
                obj.constant += 0.5 * s * norm_sq(center);
            } else {
                obj.rest.push(f.clone());
            }
        }
        obj
    }

    fn is_linear(&self) -> bool {
        self.quad == 0.0 && self.rest.is_empty()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.quad * norm_sq(x)
            + dot(&self.lin, x)
            + self.constant
            + self.rest.iter().map(|f| f.value(x)).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = x
            .iter()
            .zip(&self.lin)
            .map(|(xi, l)| self.quad * xi + l)
            .collect();
        for f in &self.rest {
            g.iter_mut()
                .zip(f.subgradient(x))
                .for_each(|(a, b)| *a += b);
        }
        g
    }
}

/// `max_t g_t`, affine rows kept as plain vectors.
struct Constraints {
    rows: Vec<(Vec<f64>, f64)>,
    rest: Vec<Oracle>,
}

impl Constraints {
    fn new<'a>(gs: impl Iterator<Item = &'a Oracle>) -> Self {
        let mut rows = Vec::new();
        let mut rest = Vec::new();
        for g in gs {
            match g.as_affine() {
                Some((c, b)) => rows.push((c.to_vec(), b)),
                None => rest.push(g.clone()),
            }
        }
        Self { rows, rest }
    }

    fn is_empty(&self) -> bool {
        self.rows.is_empty() && self.rest.is_empty()
    }

    fn max(&self, x: &[f64]) -> f64 {
        let a = self
            .rows
            .iter()
            .map(|(c, b)| dot(c, x) + b)
            .fold(f64::NEG_INFINITY, f64::max);
        self.rest.iter().map(|g| g.value(x)).fold(a, f64::max)
    }

    /// Largest constraint value and a subgradient of the maximizer.
    fn max_with_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut best = f64::NEG_INFINITY;
        let mut arg: Option<Result<usize, usize>> = None;
        for (i, (c, b)) in self.rows.iter().enumerate() {
            let v = dot(c, x) + b;
            if v > best {
                best = v;
                arg = Some(Ok(i));
            }
        }
        for (i, g) in self.rest.iter().enumerate() {
            let v = g.value(x);
            if v > best {
                best = v;
                arg = Some(Err(i));
            }
        }
        let grad = match arg {
            Some(Ok(i)) => self.rows[i].0.clone(),
            Some(Err(i)) => self.rest[i].subgradient(x),
            None => vec![0.0; x.len()],
        };
        (best, grad)
    }
}

struct Instance<'a> {
    obj: Objective,
    cons: Constraints,
    set: &'a DecisionSet,
    diameter: f64,
    obj_scale: f64,
    /// `max_t Lip(g_t) * D`
    g_scale: f64,
    gap_abs: f64,
    feas_abs: f64,
}

impl<'a> Instance<'a> {
    fn new<'b>(
        fs: impl Iterator<Item = &'b Oracle> + Clone,
        gs: impl Iterator<Item = &'b Oracle> + Clone,
        set: &'a DecisionSet,
        opts: &BenchmarkOptions,
    ) -> Self {
        let diameter = set.diameter();
        let obj_scale = fs.clone().map(|f| f.lipschitz()).sum::<f64>() * diameter;
        let g_scale = gs.clone().map(|g| g.lipschitz()).fold(0.0, f64::max) * diameter;
        let obj_scale = if obj_scale > 0.0 { obj_scale } else { 1.0 };
        let g_scale = if g_scale > 0.0 { g_scale } else { 1.0 };
        Self {
            obj: Objective::new(fs, set.dim()),
            cons: Constraints::new(gs),
            set,
            diameter,
            obj_scale,
            g_scale,
            gap_abs: opts.gap_tol * obj_scale,
            feas_abs: opts.feas_tol * g_scale,
        }
    }

    fn lp_applicable(&self) -> bool {
        self.obj.is_linear()
            && self.cons.rest.is_empty()
            && match self.set {
                DecisionSet::IntervalBox { .. } | DecisionSet::VertexHull(_) => true,
                DecisionSet::UnitFlow(p) => p.graph().is_acyclic(),
                DecisionSet::EuclideanBall { .. } => false,
            }
    }
}

/// Where a solver ended up: a feasible point, its objective and a lower
/// bound on the optimum.
struct Solved {
    point: Point,
    lower: f64,
    method: BenchmarkMethod,
}

/// Minimizes `sum_t f_t(x)` over the points of `set` that satisfy every
/// `g_t(x) <= 0`.
///
/// The cheapest exact method that applies is used: a closed form, then
/// linear programming for affine data over boxes, vertex hulls and acyclic
/// flow polytopes, then the ellipsoid method up to dimension 16, and an
/// exact-penalty subgradient method beyond that.
pub fn compute_static_benchmark(
    history: &[(Oracle, Oracle)],
    set: &DecisionSet,
    opts: &BenchmarkOptions,
) -> Result<BenchmarkResult> {
    if history.is_empty() {
        return crate::error::invalid("benchmark needs at least one round");
    }
    let inst = Instance::new(
        history.iter().map(|r| &r.0),
        history.iter().map(|r| &r.1),
        set,
        opts,
    );
    let solved = solve(&inst, opts)?;
    let mut result = finish(&inst, solved, history.iter().map(|r| &r.0));
    if opts.grid_check && set.dim() <= 3 && result.method != BenchmarkMethod::Closed {
        result.grid_value = grid_search(&inst, opts.grid_resolution).map(|(_, v)| v);
    }
    Ok(result)
}

/// Solves `min f(x) s.t. g(x) <= 0` over `set` for a single round.
pub fn compute_dynamic_comparator(
    f: &Oracle,
    g: &Oracle,
    set: &DecisionSet,
    opts: &BenchmarkOptions,
) -> Result<BenchmarkResult> {
    let inst = Instance::new(std::iter::once(f), std::iter::once(g), set, opts);
    let solved = solve(&inst, opts)?;
    Ok(finish(&inst, solved, std::iter::once(f)))
}

/// Per-round comparators for the dynamic policy.
#[derive(Clone, Debug, Default)]
pub struct BenchmarkSolver {
    pub options: BenchmarkOptions,
}

impl ComparatorSolver for BenchmarkSolver {
    fn solve(&self, f: &Oracle, g: &Oracle, set: &DecisionSet) -> Result<Comparator> {
        let r = compute_dynamic_comparator(f, g, set, &self.options)?;
        Ok(Comparator {
            point: r.point,
            value: r.value,
            gap: r.gap,
        })
    }
}

fn finish<'a>(
    inst: &Instance,
    solved: Solved,
    fs: impl Iterator<Item = &'a Oracle>,
) -> BenchmarkResult {
    // Exact sums, independent of the collapsed objective.
    let value: f64 = fs.map(|f| f.value(&solved.point)).sum();
    let residual = inst.cons.max(&solved.point);
    BenchmarkResult {
        gap: (value - solved.lower).max(0.0),
        value,
        residual,
        point: solved.point,
        method: solved.method,
        grid_value: None,
        objective_scale: inst.obj_scale,
    }
}

fn solve(inst: &Instance, opts: &BenchmarkOptions) -> Result<Solved> {
    if opts.method.is_none() {
        if let Some(s) = closed_form(inst) {
            return Ok(s);
        }
    }
    let method = opts.method.unwrap_or(if inst.lp_applicable() {
        BenchmarkMethod::Lp
    } else if inst.set.dim() <= 16 {
        BenchmarkMethod::Ellipsoid
    } else {
        BenchmarkMethod::Penalty
    });
    match method {
        BenchmarkMethod::Closed => closed_form(inst)
            .ok_or_else(|| Error::InvalidInput("no closed form for this instance".into())),
        BenchmarkMethod::Lp => {
            if !inst.lp_applicable() {
                return crate::error::invalid(
                    "LP benchmark needs affine data over a polyhedral set",
                );
            }
            lp(inst, opts)
        }
        BenchmarkMethod::Ellipsoid => ellipsoid(inst, opts),
        BenchmarkMethod::Penalty => penalty(inst, opts),
    }
}

fn closed_form(inst: &Instance) -> Option<Solved> {
    let obj = &inst.obj;
    if !obj.rest.is_empty() {
        return None;
    }
    if obj.quad > 0.0 {
        let z: Vec<f64> = obj.lin.iter().map(|l| -l / obj.quad).collect();
        if inst.set.contains(&z, 0.0) && inst.cons.max(&z) <= 0.0 {
            let lower = obj.value(&z);
            return Some(Solved {
                point: z,
                lower,
                method: BenchmarkMethod::Closed,
            });
        }
    } else if inst.cons.is_empty() {
        let z = inst.set.linear_minimizer(&obj.lin);
        let lower = obj.value(&z);
        return Some(Solved {
            point: z,
            lower,
            method: BenchmarkMethod::Closed,
        });
    }
    None
}

fn lp_error(e: microlp::Error) -> Error {
    match e {
        microlp::Error::Infeasible => Error::Infeasible("linear program is infeasible".into()),
        other => Error::Numerical(format!("simplex failed: {other}")),
    }
}

/// One simplex solve with the rows in `active`; returns the point and the
/// objective without its constant.
fn lp_once(inst: &Instance, active: &[usize]) -> Result<(Point, f64)> {
    let mut prob = Problem::new(OptimizationDirection::Minimize);
    let lin = &inst.obj.lin;
    let rows = &inst.cons.rows;
    match inst.set {
        DecisionSet::IntervalBox { lo, hi } => {
            let vars: Vec<_> = (0..lin.len())
                .map(|i| prob.add_var(lin[i], (lo[i], hi[i])))
                .collect();
            for &r in active {
                let (c, b) = &rows[r];
                let expr: LinearExpr = vars.iter().zip(c).map(|(v, ci)| (*v, *ci)).collect();
                prob.add_constraint(expr, ComparisonOp::Le, -b);
            }
            let sol = prob.solve().map_err(lp_error)?;
            let sol = sol
                .solution()
                .ok_or_else(|| Error::Numerical("simplex interrupted".into()))?;
            let x: Point = vars
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| sol.var_value(*v).clamp(*l, *h))
                .collect();
            Ok((x, sol.objective()))
        }
        DecisionSet::UnitFlow(poly) => {
            let g = poly.graph();
            let vars: Vec<_> = (0..g.edge_count())
                .map(|e| prob.add_var(lin[e], (0.0, 1.0)))
                .collect();
            for v in 0..g.node_count() {
                let mut expr = LinearExpr::empty();
                for &e in g.out_edges(v) {
                    expr.add(vars[e], 1.0);
                }
                for &e in g.in_edges(v) {
                    expr.add(vars[e], -1.0);
                }
                let supply = if v == g.source() {
                    1.0
                } else if v == g.dest() {
                    -1.0
                } else {
                    0.0
                };
                prob.add_constraint(expr, ComparisonOp::Eq, supply);
            }
            for &r in active {
                let (c, b) = &rows[r];
                let expr: LinearExpr = vars
                    .iter()
                    .zip(c)
                    .filter(|(_, ci)| **ci != 0.0)
                    .map(|(v, ci)| (*v, *ci))
                    .collect();
                prob.add_constraint(expr, ComparisonOp::Le, -b);
            }
            let sol = prob.solve().map_err(lp_error)?;
            let sol = sol
                .solution()
                .ok_or_else(|| Error::Numerical("simplex interrupted".into()))?;
            let x: Point = vars
                .iter()
                .map(|v| sol.var_value(*v).clamp(0.0, 1.0))
                .collect();
            Ok((x, sol.objective()))
        }
        DecisionSet::VertexHull(h) => {
            let vars: Vec<_> = h
                .vertices
                .iter()
                .map(|v| prob.add_var(dot(lin, v), (0.0, 1.0)))
                .collect();
            let simplex: LinearExpr = vars.iter().map(|v| (*v, 1.0)).collect();
            prob.add_constraint(simplex, ComparisonOp::Eq, 1.0);
            for &r in active {
                let (c, b) = &rows[r];
                let expr: LinearExpr = vars
                    .iter()
                    .zip(&h.vertices)
                    .map(|(var, v)| (*var, dot(c, v)))
                    .collect();
                prob.add_constraint(expr, ComparisonOp::Le, -b);
            }
            let sol = prob.solve().map_err(lp_error)?;
            let sol = sol
                .solution()
                .ok_or_else(|| Error::Numerical("simplex interrupted".into()))?;
            let mut x = vec![0.0; h.dim()];
            for (var, v) in vars.iter().zip(&h.vertices) {
                let w = sol.var_value(*var).max(0.0);
                x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += w * vi);
            }
            Ok((x, sol.objective()))
        }
        DecisionSet::EuclideanBall { .. } => crate::error::invalid("no LP form for a ball"),
    }
}

/// Row generation: solve with the rows seen so far, add the most violated
/// ones, repeat. Each relaxed optimum is a lower bound.
fn lp(inst: &Instance, opts: &BenchmarkOptions) -> Result<Solved> {
    const BATCH: usize = 16;
    let rows = &inst.cons.rows;
    let mut active = Vec::new();
    let mut in_active = vec![false; rows.len()];
    let rounds = opts.max_iter.min(rows.len() + 1).max(1);
    let mut last_residual = f64::INFINITY;
    let mut last_x = Vec::new();
    for _ in 0..rounds {
        let (x, obj) = lp_once(inst, &active)?;
        let mut violated: Vec<(f64, usize)> = rows
            .iter()
            .enumerate()
            .map(|(i, (c, b))| (dot(c, &x) + b, i))
            .filter(|(v, _)| *v > inst.feas_abs)
            .collect();
        if violated.is_empty() {
            return Ok(Solved {
                point: x,
                lower: obj + inst.obj.constant,
                method: BenchmarkMethod::Lp,
            });
        }
        violated.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        last_residual = violated[0].0;
        last_x = x;
        let before = active.len();
        for &(_, i) in &violated {
            if active.len() - before == BATCH {
                break;
            }
            if !in_active[i] {
                in_active[i] = true;
                active.push(i);
            }
        }
        if active.len() == before {
            break;
        }
    }
    Err(Error::Convergence {
        iterations: active.len(),
        residual: last_residual,
        best: last_x,
    })
}

/// Smallest ball around a point of the set that contains the set.
fn enclosing_ball(set: &DecisionSet) -> Result<(Point, f64)> {
    Ok(match set {
        DecisionSet::IntervalBox { lo, hi } => (
            lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            0.5 * distance(lo, hi),
        ),
        DecisionSet::EuclideanBall { center, radius } => (center.clone(), *radius),
        _ => (set.initial_point()?, set.diameter()),
    })
}

/// Deep-cut ellipsoid method on `{x in X : max_t g_t(x) <= 0}`.
///
/// Every cut keeps all minimizers, so `f(c) - sqrt(s' P s)` at any center is
/// a valid lower bound on the optimum; the best of those certifies the gap.
fn ellipsoid(inst: &Instance, opts: &BenchmarkOptions) -> Result<Solved> {
    let d = inst.set.dim();
    let (mut c, r0) = enclosing_ball(inst.set)?;
    let r0 = r0.max(1e-12);
    let mut p = vec![0.0; d * d];
    for i in 0..d {
        p[i * d + i] = r0 * r0;
    }
    let mut best: Option<(Point, f64)> = None;
    let mut lower = f64::NEG_INFINITY;
    let mut last_residual = f64::INFINITY;
    let proj_tol = 1e-10 * inst.diameter.max(1e-12);

    let quad_form = |p: &[f64], h: &[f64]| -> (Vec<f64>, f64) {
        let ph: Vec<f64> = (0..d).map(|i| dot(&p[i * d..(i + 1) * d], h)).collect();
        let s = dot(h, &ph);
        (ph, s)
    };

    for _ in 0..opts.max_iter {
        let proj = inst.set.project(&c, proj_tol)?;
        let (h, v, objective_cut) = if distance(&c, &proj) > proj_tol {
            let h: Vec<f64> = c.iter().zip(&proj).map(|(a, b)| a - b).collect();
            let v = norm_sq(&h);
            (h, v, false)
        } else {
            let (gv, gg) = inst.cons.max_with_grad(&c);
            let fv = inst.obj.value(&c);
            let fg = inst.obj.gradient(&c);
            let (_, sf) = quad_form(&p, &fg);
            lower = lower.max(fv - sf.max(0.0).sqrt());
            if gv <= inst.feas_abs && best.as_ref().is_none_or(|b| fv < b.1) {
                best = Some((c.clone(), fv));
            }
            if gv > 0.0 {
                last_residual = gv;
                let (_, sg) = quad_form(&p, &gg);
                if best.is_none() && gv - sg.max(0.0).sqrt() > 0.0 {
                    return Err(Error::Infeasible(
                        "constraints cannot all hold on the decision set".into(),
                    ));
                }
                (gg, gv, false)
            } else {
                let fb = best.as_ref().map_or(fv, |b| b.1);
                (fg, (fv - fb).max(0.0), true)
            }
        };
        if let Some((_, fb)) = &best {
            if fb - lower <= inst.gap_abs {
                break;
            }
        }
        let (ph, hph) = quad_form(&p, &h);
        if !(hph > 0.0) || !hph.is_finite() {
            if objective_cut {
                // Zero gradient at a feasible center: it is optimal.
                if norm(&h) == 0.0 {
                    lower = best.as_ref().map_or(lower, |b| b.1);
                }
            }
            break;
        }
        let s = hph.sqrt();
        let alpha = v / s;
        if alpha >= 1.0 {
            if objective_cut {
                lower = lower.max(best.as_ref().map_or(lower, |b| b.1));
            }
            break;
        }
        if d == 1 {
            let r = p[0].sqrt();
            let bound = c[0] - v / h[0];
            let (lo, hi) = if h[0] > 0.0 {
                (c[0] - r, bound.min(c[0] + r))
            } else {
                (bound.max(c[0] - r), c[0] + r)
            };
            c[0] = 0.5 * (lo + hi);
            p[0] = (0.5 * (hi - lo)).powi(2);
        } else {
            let df = d as f64;
            let gt: Vec<f64> = ph.iter().map(|x| x / s).collect();
            let step = (1.0 + df * alpha) / (df + 1.0);
            c.iter_mut().zip(&gt).for_each(|(ci, gi)| *ci -= step * gi);
            let scale = df * df / (df * df - 1.0) * (1.0 - alpha * alpha);
            let shrink = 2.0 * (1.0 + df * alpha) / ((df + 1.0) * (1.0 + alpha));
            for i in 0..d {
                for j in i..d {
                    let val = scale * (p[i * d + j] - shrink * gt[i] * gt[j]);
                    p[i * d + j] = val;
                    p[j * d + i] = val;
                }
            }
        }
    }
    match best {
        Some((point, _)) => Ok(Solved {
            point,
            lower,
            method: BenchmarkMethod::Ellipsoid,
        }),
        None => Err(Error::Convergence {
            iterations: opts.max_iter,
            residual: last_residual,
            best: c,
        }),
    }
}

/// Projected subgradient descent on `F = sum f + mu * max(0, max g)`, with
/// `mu` doubled until the iterates become feasible. Lower bounds come from
/// the linear minimization oracle: `F(x) + min_y <s, y - x>`.
fn penalty(inst: &Instance, opts: &BenchmarkOptions) -> Result<Solved> {
    const PHASES: usize = 40;
    let set = inst.set;
    let proj_tol = 1e-9 * inst.diameter.max(1e-12);
    let per_phase = (opts.max_iter / PHASES).max(100);
    let mut mu = 1.0_f64;
    let mut x = set.initial_point()?;
    let mut best: Option<(Point, f64)> = None;
    let mut lower = f64::NEG_INFINITY;
    let mut last_residual = f64::INFINITY;
    let mut polishing = false;
    let mut k_total = 0usize;

    for _ in 0..PHASES {
        for k in 1..=per_phase {
            k_total += 1;
            let (gv, gg) = inst.cons.max_with_grad(&x);
            let fv = inst.obj.value(&x);
            let mut sgrad = inst.obj.gradient(&x);
            if gv > 0.0 {
                sgrad.iter_mut().zip(&gg).for_each(|(a, b)| *a += mu * b);
            }
            let big_f = fv + mu * gv.max(0.0);
            let y = set.linear_minimizer(&sgrad);
            let lb = big_f + dot(&sgrad, &y) - dot(&sgrad, &x);
            lower = lower.max(lb);
            last_residual = gv;
            if gv <= inst.feas_abs && best.as_ref().is_none_or(|b| fv < b.1) {
                best = Some((x.clone(), fv));
            }
            if let Some((_, fb)) = &best {
                if fb - lower <= inst.gap_abs {
                    return Ok(Solved {
                        point: best.unwrap().0,
                        lower,
                        method: BenchmarkMethod::Penalty,
                    });
                }
            }
            let gn = norm(&sgrad);
            if gn == 0.0 {
                break;
            }
            let step = inst.diameter / (gn * (k as f64).sqrt());
            let y: Vec<f64> = x.iter().zip(&sgrad).map(|(a, b)| a - step * b).collect();
            x = set.project(&y, proj_tol)?;
        }
        if polishing {
            break;
        }
        if inst.cons.max(&x) <= 1e-6 * inst.g_scale {
            polishing = true;
        } else {
            mu *= 2.0;
        }
    }
    match best {
        Some((point, _)) => Ok(Solved {
            point,
            lower,
            method: BenchmarkMethod::Penalty,
        }),
        None => Err(Error::Convergence {
            iterations: k_total,
            residual: last_residual,
            best: x,
        }),
    }
}

/// Coarse-to-fine grid search over a box or ball in dimension at most 3.
/// Returns the best grid point that satisfies every constraint.
fn grid_search(inst: &Instance, resolution: f64) -> Option<(Point, f64)> {
    const BUDGET: f64 = 2e7;
    let d = inst.set.dim();
    if d > 3 {
        return None;
    }
    let (lo, hi) = match inst.set {
        DecisionSet::IntervalBox { lo, hi } => (lo.clone(), hi.clone()),
        DecisionSet::EuclideanBall { center, radius } => (
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        ),
        _ => return None,
    };
    let cost = (inst.cons.rows.len() + inst.cons.rest.len() + inst.obj.rest.len() + 1) as f64;
    let per_axis = ((BUDGET / cost).powf(1.0 / d as f64) as usize).clamp(5, 201);
    let target = resolution * inst.diameter;

    let mut best: Option<(Point, f64)> = None;
    let mut lo = lo;
    let mut hi = hi;
    let mut n = per_axis;
    loop {
        let step: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (h - l) / (n - 1) as f64)
            .collect();
        let total = n.pow(d as u32);
        let mut x = vec![0.0; d];
        for idx in 0..total {
            let mut rem = idx;
            for i in 0..d {
                x[i] = lo[i] + step[i] * (rem % n) as f64;
                rem /= n;
            }
            if !inst.set.contains(&x, 0.0) || inst.cons.max(&x) > 0.0 {
                continue;
            }
            let v = inst.obj.value(&x);
            if best.as_ref().is_none_or(|b| v < b.1) {
                best = Some((x.clone(), v));
            }
        }
        let max_step = step.iter().fold(0.0_f64, |m, s| m.max(*s));
        let Some((center, _)) = &best else {
            return None;
        };
        if max_step <= target || max_step == 0.0 {
            break;
        }
        // Zoom into a window of two coarse cells around the incumbent.
        let (olo, ohi) = match inst.set {
            DecisionSet::IntervalBox { lo, hi } => (lo.clone(), hi.clone()),
            _ => (lo.clone(), hi.clone()),
        };
        lo = (0..d)
            .map(|i| (center[i] - 2.0 * step[i]).max(olo[i]))
            .collect();
        hi = (0..d)
            .map(|i| (center[i] + 2.0 * step[i]).min(ohi[i]))
            .collect();
        n = 41;
    }
    let (x, _) = best?;
    // Report the exact objective rather than the collapsed one.
    let v = inst.obj.value(&x);
    Some((x, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Affine, HalfSquaredDistance};
    use crate::shortest_path::{Edge, FlowPolytope, Graph};
    use std::sync::Arc;

    fn lin(c: Vec<f64>, b: f64) -> Oracle {
        Arc::new(Affine::new(c, b))
    }

    fn interval() -> DecisionSet {
        DecisionSet::interval_box(vec![-1.0], vec![1.0]).unwrap()
    }

    /// `x^2` as a general convex function (no closed-form hooks).
    #[derive(Debug)]
    struct Square;

    impl crate::geometry::ConvexFn for Square {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0] * x[0]
        }
        fn subgradient(&self, x: &[f64]) -> Vec<f64> {
            vec![2.0 * x[0]]
        }
        fn lipschitz(&self) -> f64 {
            4.0
        }
    }

    #[test]
    fn linear_cost_against_halfline_constraint() {
        // f = x, g = -x on [-1, 1] -> x* = 0.
        let h = vec![(lin(vec![1.0], 0.0), lin(vec![-1.0], 0.0)); 5];
        for method in [
            None,
            Some(BenchmarkMethod::Ellipsoid),
            Some(BenchmarkMethod::Penalty),
        ] {
            let opts = BenchmarkOptions {
                method,
                ..Default::default()
            };
            let r = compute_static_benchmark(&h, &interval(), &opts).unwrap();
            assert!(r.point[0].abs() <= 1e-6, "{method:?} {:?}", r.point);
            assert!(r.value.abs() <= 1e-5);
            assert!(r.residual <= 1e-9 * 2.0);
            assert!(
                r.value - r.gap <= 1e-12,
                "gap must cover the true optimum 0"
            );
        }
    }

    #[test]
    fn no_constraint_is_unconstrained_minimizer() {
        let h = vec![(lin(vec![1.0, -2.0], 0.0), lin(vec![0.0, 0.0], 0.0)); 3];
        let set = DecisionSet::cube(2, 1.0).unwrap();
        let r = compute_static_benchmark(&h, &set, &BenchmarkOptions::default()).unwrap();
        assert_eq!(r.point, vec![-1.0, 1.0]);
        assert!((r.value + 9.0).abs() < 1e-9);
    }

    #[test]
    fn dynamic_examples() {
        let opts = BenchmarkOptions::default();
        let set = DecisionSet::interval_box(vec![-2.0], vec![2.0]).unwrap();
        let sq: Oracle = Arc::new(Square);
        let r = compute_dynamic_comparator(&sq, &lin(vec![1.0], -1.0), &set, &opts).unwrap();
        assert!(r.point[0].abs() < 1e-6);

        let r = compute_dynamic_comparator(
            &lin(vec![-1.0], 0.0),
            &lin(vec![1.0], -0.5),
            &interval(),
            &opts,
        )
        .unwrap();
        assert!((r.point[0] - 0.5).abs() < 1e-9);

        let r = compute_dynamic_comparator(
            &lin(vec![-1.0], 0.0),
            &lin(vec![1.0], -0.5),
            &interval(),
            &BenchmarkOptions {
                method: Some(BenchmarkMethod::Ellipsoid),
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r.point[0] - 0.5).abs() < 1e-9);
        assert!(r.residual <= 0.0);
    }

    #[test]
    fn half_squared_center_feasible_is_closed_form() {
        let f: Oracle = Arc::new(HalfSquaredDistance::new(vec![0.3, -0.2], 1.0, 4.0));
        let set = DecisionSet::cube(2, 1.0).unwrap();
        let r =
            compute_dynamic_comparator(&f, &lin(vec![1.0, 0.0], -0.5), &set, &Default::default())
                .unwrap();
        assert_eq!(r.method, BenchmarkMethod::Closed);
        assert_eq!(r.point, vec![0.3, -0.2]);
        assert_eq!(r.gap, 0.0);
    }

    #[test]
    fn half_squared_with_active_constraint_matches_projection() {
        // min ||x - (1, 1)||^2 / 2 s.t. x1 + x2 <= 1 on the cube -> (0.5, 0.5).
        let f: Oracle = Arc::new(HalfSquaredDistance::new(vec![1.0, 1.0], 1.0, 4.0));
        let set = DecisionSet::cube(2, 1.0).unwrap();
        let g = lin(vec![1.0, 1.0], -1.0);
        let r = compute_static_benchmark(&[(f, g)], &set, &Default::default()).unwrap();
        assert_eq!(r.method, BenchmarkMethod::Ellipsoid);
        assert!(distance(&r.point, &[0.5, 0.5]) < 1e-5, "{:?}", r.point);
        assert!((r.value - 0.25).abs() <= r.gap + 1e-9);
        assert!(r.grid_agrees(1e-3).unwrap());
    }

    #[test]
    fn ball_set_uses_ellipsoid() {
        let set = DecisionSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let h = vec![(lin(vec![1.0, 0.0], 0.0), lin(vec![0.0, 1.0], 0.0))];
        // min x1 on the lower half disk -> (-1, 0).
        let r = compute_static_benchmark(&h, &set, &Default::default()).unwrap();
        assert!(distance(&r.point, &[-1.0, 0.0]) < 1e-4, "{:?}", r.point);
        assert!(r.value >= -1.0 - 1e-12 && r.value - r.gap <= -1.0 + 1e-12);
    }

    #[test]
    fn infeasible_is_reported() {
        let h = vec![
            (lin(vec![1.0], 0.0), lin(vec![1.0], 0.5)),
            (lin(vec![1.0], 0.0), lin(vec![-1.0], 0.5)),
        ];
        for method in [Some(BenchmarkMethod::Lp), Some(BenchmarkMethod::Ellipsoid)] {
            let opts = BenchmarkOptions {
                method,
                ..Default::default()
            };
            let e = compute_static_benchmark(&h, &interval(), &opts).unwrap_err();
            assert!(matches!(e, Error::Infeasible(_)), "{method:?}: {e}");
        }
    }

    fn two_paths() -> DecisionSet {
        let e = |latency, bandwidth| Edge {
            tail: 0,
            head: 1,
            latency,
            bandwidth,
        };
        let g = Graph::new(2, vec![e(1.0, 1.0), e(3.0, 5.0)], 0, 1).unwrap();
        DecisionSet::unit_flow(FlowPolytope::new(g))
    }

    #[test]
    fn parallel_edges_lp_matches_vertex_enumeration() {
        // Cost (1, 3); bandwidth (1, 5) must reach 4 on average.
        let set = two_paths();
        let h = vec![(lin(vec![1.0, 3.0], 0.0), lin(vec![-1.0, -5.0], 4.0)); 4];
        let r = compute_static_benchmark(&h, &set, &Default::default()).unwrap();
        assert_eq!(r.method, BenchmarkMethod::Lp);
        // x = (1/4, 3/4): bandwidth 1/4 + 15/4 = 4, cost 1/4 + 9/4 = 2.5 per round.
        assert!(distance(&r.point, &[0.25, 0.75]) < 1e-9);
        assert!((r.value - 10.0).abs() < 1e-9);
        // Loose floor: the cheaper vertex is feasible.
        let h = vec![(lin(vec![1.0, 3.0], 0.0), lin(vec![-1.0, -5.0], 0.5)); 4];
        let r = compute_static_benchmark(&h, &set, &Default::default()).unwrap();
        assert!(distance(&r.point, &[1.0, 0.0]) < 1e-9);
    }

    #[test]
    fn row_generation_handles_many_rows() {
        let set = DecisionSet::cube(2, 1.0).unwrap();
        let h: Vec<_> = (0..2000)
            .map(|t| {
                let th = t as f64 * 0.01;
                (
                    lin(vec![-1.0, -1.0], 0.0),
                    lin(vec![th.cos(), th.sin()], -0.5),
                )
            })
            .collect();
        let r = compute_static_benchmark(&h, &set, &Default::default()).unwrap();
        assert!(r.residual <= 1e-9);
        let e = compute_static_benchmark(
            &h,
            &set,
            &BenchmarkOptions {
                method: Some(BenchmarkMethod::Ellipsoid),
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r.value - e.value).abs() <= r.gap + e.gap + 1e-6);
        assert!(r.grid_agrees(1e-3).unwrap());
    }

    #[test]
    fn vertex_hull_lp() {
        let set =
            DecisionSet::vertex_hull(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let h = vec![(lin(vec![-1.0, -1.0], 0.0), lin(vec![1.0, 0.0], -0.25))];
        let r = compute_static_benchmark(&h, &set, &Default::default()).unwrap();
        assert!((r.value + 1.0).abs() < 1e-9);
        assert!(r.point[0] <= 0.25 + 1e-9);
    }

    #[test]
    fn solver_wraps_dynamic_comparator() {
        let s = BenchmarkSolver::default();
        let c = s
            .solve(&lin(vec![-1.0], 0.0), &lin(vec![1.0], -0.5), &interval())
            .unwrap();
        assert!((c.point[0] - 0.5).abs() < 1e-9);
        assert!((c.value + 0.5).abs() < 1e-9);
    }
}
