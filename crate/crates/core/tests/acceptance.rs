//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion to
//! stderr, bypassing the test harness's output capture.

use std::io::Write;
use std::time::{Duration, Instant};

use anytime_coco::geometry::{
    distance, dot, subgrad_check, Affine, DecisionSet, HalfSquaredDistance, Oracle, PositivePart,
    Scaled,
};
use anytime_coco::harness::{
    emit_outputs, run_many, AdversaryKind, Algorithm, ExperimentConfig, InstanceSpec,
    PredictionMode, RunOutput, ROUNDS_FILE,
};
use anytime_coco::lyapunov::LambdaSchedule;
use anytime_coco::shortest_path::{
    flow_decompose, generate_instance, sample_route, FlowPolytope, GeneratorParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

struct Verdict {
    id: usize,
    ok: bool,
    detail: String,
    elapsed: Duration,
}

fn timed(id: usize, f: impl FnOnce() -> (bool, String)) -> Verdict {
    let start = Instant::now();
    let (ok, detail) = f();
    Verdict {
        id,
        ok,
        detail,
        elapsed: start.elapsed(),
    }
}

fn synthetic(
    algorithm: Algorithm,
    family: AdversaryKind,
    dim: usize,
    horizon: usize,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig::synthetic(algorithm, family, dim, horizon, seed)
}

fn run_all(cfgs: &[ExperimentConfig]) -> Vec<RunOutput> {
    run_many(cfgs)
        .into_iter()
        .zip(cfgs)
        .map(|(r, c)| r.unwrap_or_else(|e| panic!("{c:?}: {e}")))
        .collect()
}

fn c1() -> (bool, String) {
    let start = Instant::now();
    let s = LambdaSchedule::AnytimeStatic;
    let sum: f64 = (1..=1_000_000u64)
        .map(|t| s.lambda_at(t, 0.0).unwrap().powi(2))
        .sum();
    let secs = start.elapsed().as_secs_f64();
    (
        sum <= 0.125 && secs < 1.0,
        format!("sum lambda^2 = {sum:.6} in {secs:.3}s"),
    )
}

fn c2() -> (bool, String) {
    let algorithms = [
        Algorithm::Anytime,
        Algorithm::GradAdaptive,
        Algorithm::FixedHorizon,
        Algorithm::Doubling,
        Algorithm::Optimistic,
    ];
    let cfgs: Vec<_> = (0..100u64)
        .map(|s| {
            let family = AdversaryKind::ALL[s as usize % 3];
            let mut c = synthetic(
                algorithms[(s / 3) as usize % 5],
                family,
                1 + s as usize % 4,
                10_000,
                s,
            );
            if family == AdversaryKind::DriftingOptimum {
                c.instance = InstanceSpec::Synthetic {
                    family,
                    dim: 1 + s as usize % 4,
                    path_budget: (s % 11) as f64,
                };
            }
            c
        })
        .collect();
    let outs = run_all(&cfgs);
    let bad: Vec<_> = outs
        .iter()
        .filter(|o| !(o.summary.bounds.queue_monotone && o.summary.bounds.ccv_dominated))
        .map(|o| format!("seed {}: {:?}", o.summary.seed, o.summary.bounds.violations))
        .collect();
    (
        bad.is_empty(),
        format!("100 runs, {} with queue failures {bad:?}", bad.len()),
    )
}

/// Criteria 3 and 4 share their runs.
fn c3_c4() -> ((bool, String), (bool, String)) {
    let cfgs: Vec<_> = [
        AdversaryKind::ConstraintPressure,
        AdversaryKind::AlternatingLinear,
    ]
    .into_iter()
    .flat_map(|f| (0..20u64).map(move |s| synthetic(Algorithm::Anytime, f, 2, 10_000, 100 + s)))
    .collect();
    let outs = run_all(&cfgs);
    let slowest = outs
        .iter()
        .map(|o| o.summary.wall_time_s)
        .fold(0.0, f64::max);
    let mut c3_bad = Vec::new();
    let mut c4_bad = Vec::new();
    for o in &outs {
        let b = &o.summary.bounds;
        if !(b.regret == Some(true) && b.ccv == Some(true) && b.ccv_consistent) {
            c3_bad.push(format!("seed {}: {:?}", o.summary.seed, b.violations));
        }
        if b.adagrad != Some(true) {
            c4_bad.push(o.summary.seed);
        }
    }
    (
        (
            c3_bad.is_empty() && slowest < 60.0,
            format!("40 runs, slowest {slowest:.2}s, failures {c3_bad:?}"),
        ),
        (c4_bad.is_empty(), format!("40 runs, failures {c4_bad:?}")),
    )
}

fn c5() -> (bool, String) {
    let cfgs: Vec<_> = [0.0, 1.0, 10.0]
        .into_iter()
        .flat_map(|budget| {
            (0..3u64).map(move |s| ExperimentConfig {
                instance: InstanceSpec::Synthetic {
                    family: AdversaryKind::DriftingOptimum,
                    dim: 2,
                    path_budget: budget,
                },
                ..synthetic(
                    Algorithm::Dynamic,
                    AdversaryKind::DriftingOptimum,
                    2,
                    5000,
                    200 + s,
                )
            })
        })
        .collect();
    let outs = run_all(&cfgs);
    let mut bad = Vec::new();
    let mut paths = Vec::new();
    for o in &outs {
        let b = &o.summary.bounds;
        paths.push(format!(
            "{:.3}",
            o.summary.final_path_len.unwrap_or(f64::NAN)
        ));
        if !(b.regret == Some(true) && b.ccv == Some(true) && b.all_ok()) {
            bad.push(format!("seed {}: {:?}", o.summary.seed, b.violations));
        }
    }
    (
        bad.is_empty(),
        format!("9 runs, P_T = {paths:?}, failures {bad:?}"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn c6() -> (bool, String) {
    let horizon = 10_000;
    let families = [
        AdversaryKind::AlternatingLinear,
        AdversaryKind::DriftingOptimum,
        AdversaryKind::ConstraintPressure,
    ];
    let mut cfgs = Vec::new();
    for mode in [PredictionMode::Perfect, PredictionMode::Zero] {
        for family in families {
            let mut c = synthetic(Algorithm::Optimistic, family, 2, horizon, 300);
            c.predictions = Some(mode);
            cfgs.push(c);
        }
    }
    let outs = run_all(&cfgs);
    let mut ok = true;
    let mut notes = Vec::new();
    for (o, family) in outs[..3].iter().zip(families) {
        let r = |t: usize| o.records[t - 1].regret.unwrap();
        let (full, half) = (r(horizon), r(horizon / 2));
        // A regret that is already non-positive cannot grow like sqrt(t).
        let pass = full <= 0.0 || (half > 0.0 && full / half <= 1.1);
        ok &= pass;
        notes.push(format!(
            "perfect {}: R_T={full:.4} R_T/2={half:.4}",
            family_name(family)
        ));
    }
    for (o, family) in outs[3..].iter().zip(families) {
        let ratios: Vec<f64> = o
            .records
            .iter()
            .filter(|r| r.err_f.unwrap() > 0.0 && r.regret.unwrap() > 0.0)
            .map(|r| r.regret.unwrap() / r.err_f.unwrap().sqrt())
            .collect();
        let positive = ratios.len() as f64 / horizon as f64;
        // Rounds with non-positive regret satisfy the scaling for any C >= 0;
        // the growth test needs a positive median to mean anything.
        if positive < 0.5 {
            notes.push(format!(
                "zero {}: n/a (regret > 0 on {:.1}% of rounds)",
                family_name(family),
                positive * 100.0
            ));
            continue;
        }
        let (mx, md) = (ratios.iter().cloned().fold(0.0, f64::max), median(ratios));
        ok &= mx <= 2.0 * md;
        notes.push(format!(
            "zero {}: max {mx:.4} median {md:.4}",
            family_name(family)
        ));
    }
    ok &= outs.iter().all(|o| o.summary.bound_ok);
    (ok, notes.join("; "))
}

fn family_name(k: AdversaryKind) -> String {
    serde_json::to_value(k)
        .unwrap()
        .as_str()
        .unwrap()
        .to_string()
}

fn c7() -> (bool, String) {
    let start = Instant::now();
    let mut cfgs = Vec::new();
    for seed in 1..=5u64 {
        for algorithm in [Algorithm::Anytime, Algorithm::Doubling] {
            cfgs.push(ExperimentConfig {
                instance: InstanceSpec::ShortestPath(GeneratorParams::default()),
                ..synthetic(algorithm, AdversaryKind::AlternatingLinear, 2, 1600, seed)
            });
        }
    }
    let outs = run_all(&cfgs);
    let phase_starts: Vec<usize> = (1..=10).map(|k| 1 << k).collect();
    let mut ok = true;
    let mut notes = Vec::new();
    for pair in outs.chunks(2) {
        let (a, d) = (&pair[0].summary, &pair[1].summary);
        let (ra, rd) = (a.final_regret.unwrap(), d.final_regret.unwrap());
        let pass = a.final_ccv <= d.final_ccv && ra <= rd && d.resets == phase_starts;
        ok &= pass;
        notes.push(format!(
            "seed {}: ccv {:.1}/{:.1} regret {ra:.1}/{rd:.1} resets {}",
            a.seed,
            a.final_ccv,
            d.final_ccv,
            d.resets.len()
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    (
        ok && secs < 300.0,
        format!("anytime/doubling {} ({secs:.1}s)", notes.join("; ")),
    )
}

fn check_projection(
    set: &DecisionSet,
    tol: f64,
    slack: f64,
    scale: f64,
    pairs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(), String> {
    let d = set.dim();
    for i in 0..pairs {
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-scale..scale)).collect();
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-scale..scale)).collect();
        let pa = set.project(&a, tol).map_err(|e| e.to_string())?;
        let pb = set.project(&b, tol).map_err(|e| e.to_string())?;
        let ppa = set.project(&pa, tol).map_err(|e| e.to_string())?;
        if distance(&pa, &ppa) > 2.0 * tol {
            return Err(format!("idempotence pair {i}: {:e}", distance(&pa, &ppa)));
        }
        if distance(&pa, &pb) > distance(&a, &b) + slack {
            return Err(format!("expansive pair {i}"));
        }
    }
    Ok(())
}

fn c8() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut notes = Vec::new();
    let mut ok = true;
    let small = GeneratorParams {
        n: 10,
        m: 24,
        horizon: 1,
        ..Default::default()
    };
    let graph = generate_instance(8, &small).unwrap().graph;
    let vertices: Vec<Vec<f64>> = (0..12)
        .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let sets = [
        (
            "box",
            DecisionSet::interval_box(vec![-1.0, 0.0, -2.0], vec![1.0, 0.5, 3.0]).unwrap(),
            1e-9,
            1e-7,
        ),
        (
            "ball",
            DecisionSet::ball(vec![0.5, -0.5, 0.0], 1.5).unwrap(),
            1e-9,
            1e-7,
        ),
        (
            "hull",
            DecisionSet::vertex_hull(vertices).unwrap(),
            1e-7,
            2e-7,
        ),
        (
            "flow",
            DecisionSet::unit_flow(FlowPolytope::new(graph.clone())),
            1e-6,
            2e-6,
        ),
    ];
    for (name, set, tol, slack) in &sets {
        let r = check_projection(set, *tol, *slack, 3.0, 10_000, &mut rng);
        ok &= r.is_ok();
        notes.push(format!(
            "{name}: {}",
            r.err().unwrap_or_else(|| "ok".into())
        ));
    }

    let flows = DecisionSet::unit_flow(FlowPolytope::new(graph.clone()));
    let m = graph.edge_count();
    let mut worst = 0.0_f64;
    let mut most_paths = 0;
    for _ in 0..1000 {
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = flows.project(&y, 1e-9).unwrap();
        let paths = flow_decompose(&graph, &x, 1e-9).unwrap();
        let mut rebuilt = vec![0.0; m];
        for (p, w) in &paths {
            for &e in p {
                rebuilt[e] += w;
            }
        }
        worst = rebuilt
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(worst, f64::max);
        most_paths = most_paths.max(paths.len());
    }
    ok &= worst <= 1e-9 && most_paths <= m;
    notes.push(format!(
        "decomposition linf {worst:.2e}, max {most_paths} paths of |E| = {m}"
    ));
    (ok, notes.join("; "))
}

fn c9() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let center = vec![0.3, -0.2, 0.7];
    let affine: Oracle = Arc::new(Affine::new(vec![1.5, -2.0, 0.25], 0.4));
    let quad: Oracle = Arc::new(HalfSquaredDistance::new(center, 2.0, 10.0));
    let fns: Vec<(&str, Oracle)> = vec![
        ("affine", affine.clone()),
        ("half-squared", quad.clone()),
        ("scaled", Arc::new(Scaled::new(0.125, quad.clone()))),
        ("positive-part", Arc::new(PositivePart(affine.clone()))),
    ];
    let mut worst = 0.0_f64;
    for (name, f) in &fns {
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            // Skip the kink of the positive part.
            if *name == "positive-part" && affine.value(&x).abs() < 1e-3 {
                continue;
            }
            worst = worst.max(subgrad_check(f.as_ref(), &x, 1e-6));
        }
    }
    let inst = generate_instance(
        9,
        &GeneratorParams {
            n: 20,
            m: 60,
            horizon: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let round = &inst.rounds[0];
    for f in [round.cost(), round.constraint()] {
        let x: Vec<f64> = (0..60).map(|_| rng.random_range(0.0..1.0)).collect();
        worst = worst.max(subgrad_check(f.as_ref(), &x, 1e-6));
    }

    let set = DecisionSet::unit_flow(FlowPolytope::new(inst.graph.clone()));
    let y: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = set.project(&y, 1e-9).unwrap();
    let paths = flow_decompose(&inst.graph, &x, 1e-9).unwrap();
    let draws = 100_000;
    let total: f64 = (0..draws)
        .map(|_| {
            sample_route(&paths, &mut rng)
                .unwrap()
                .iter()
                .map(|&e| round.latency[e])
                .sum::<f64>()
        })
        .sum();
    let mc = total / draws as f64;
    let exact = dot(&round.latency, &x);
    let rel = (mc - exact).abs() / exact;
    (
        worst <= 1e-4 && rel <= 0.01,
        format!(
            "subgradient deviation {worst:.2e}; route cost {mc:.4} vs fractional {exact:.4} ({:.3}%, {} paths)",
            rel * 100.0,
            paths.len()
        ),
    )
}

fn c10() -> (bool, String) {
    let base = std::env::temp_dir().join(format!("coco-acceptance-{}", std::process::id()));
    let mut cfgs = vec![
        synthetic(
            Algorithm::Anytime,
            AdversaryKind::ConstraintPressure,
            3,
            2000,
            10,
        ),
        synthetic(
            Algorithm::Doubling,
            AdversaryKind::AlternatingLinear,
            2,
            2000,
            10,
        ),
        ExperimentConfig {
            instance: InstanceSpec::ShortestPath(GeneratorParams {
                n: 20,
                m: 60,
                ..Default::default()
            }),
            ..synthetic(
                Algorithm::GradAdaptive,
                AdversaryKind::AlternatingLinear,
                2,
                400,
                10,
            )
        },
        ExperimentConfig {
            instance: InstanceSpec::Synthetic {
                family: AdversaryKind::DriftingOptimum,
                dim: 2,
                path_budget: 2.0,
            },
            ..synthetic(
                Algorithm::Dynamic,
                AdversaryKind::DriftingOptimum,
                2,
                1000,
                10,
            )
        },
    ];
    let mut noisy = synthetic(
        Algorithm::Optimistic,
        AdversaryKind::DriftingOptimum,
        2,
        1000,
        10,
    );
    noisy.predictions = Some(PredictionMode::Noisy { sigma: 0.2 });
    cfgs.push(noisy);
    let first = run_all(&cfgs);
    let second = run_all(&cfgs);
    let mut ok = true;
    for (i, (a, b)) in first.iter().zip(&second).enumerate() {
        let (da, db) = (base.join(format!("{i}a")), base.join(format!("{i}b")));
        emit_outputs(a, &da).unwrap();
        emit_outputs(b, &db).unwrap();
        let ba = std::fs::read(da.join(ROUNDS_FILE)).unwrap();
        let bb = std::fs::read(db.join(ROUNDS_FILE)).unwrap();
        ok &= !ba.is_empty() && ba == bb;
    }
    let _ = std::fs::remove_dir_all(&base);
    (ok, format!("{} configs rerun", cfgs.len()))
}

#[test]
fn acceptance_criteria() {
    let mut verdicts = vec![timed(1, c1), timed(2, c2)];
    let start = Instant::now();
    let (v3, v4) = c3_c4();
    let elapsed = start.elapsed();
    verdicts.push(Verdict {
        id: 3,
        ok: v3.0,
        detail: v3.1,
        elapsed,
    });
    verdicts.push(Verdict {
        id: 4,
        ok: v4.0,
        detail: v4.1,
        elapsed,
    });
    verdicts.extend([
        timed(5, c5),
        timed(6, c6),
        timed(7, c7),
        timed(8, c8),
        timed(9, c9),
        timed(10, c10),
    ]);
    let mut err = std::io::stderr().lock();
    for v in &verdicts {
        writeln!(
            err,
            "criterion {:>2}: {} ({:.1}s) {}",
            v.id,
            if v.ok { "PASS" } else { "FAIL" },
            v.elapsed.as_secs_f64(),
            v.detail
        )
        .unwrap();
    }
    let failed: Vec<usize> = verdicts.iter().filter(|v| !v.ok).map(|v| v.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
