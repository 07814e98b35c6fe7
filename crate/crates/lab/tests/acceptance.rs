//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use awdr_core::detloss::{total_detection_loss, LossWeights};
use awdr_core::harness::{
    bench_function, run_grad_check, train_toy, tune_lr, GradCheckTarget, SyntheticSpec,
    TestFunction, TrainHistory, GRAD_CHECK_TOLERANCE, ROSENBROCK_LR_GRID, TARGET_ACCURACY,
};
use awdr_core::metrics::{auc_roc, f1_score, recall, Confusion};
use awdr_core::netblocks::{
    backbone_ladder, conv2d, max_pool_same, pointwise_conv, sppf_stages, BACKBONE_STAGES,
};
use awdr_core::optim::{
    adamw_delta, awdr_step, rmsprop_delta, HyperParams, OptimState, OptimizerKind,
};
use awdr_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn endpoint_equivalence() -> Outcome {
    let mut mismatches = 0;
    for case in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let dim = rng.random_range(1..9);
        let horizon = rng.random_range(1..200);
        let hp = HyperParams::default()
            .with_lr(rng.random_range(1e-4..1e-1))
            .with_weight_decay(rng.random_range(0.0..0.1))
            .with_horizon(horizon);
        let p0 = Tensor::from_vec(random_vec(&mut rng, dim, 5.0)).unwrap();
        let grads: Vec<Tensor> = (0..rng.random_range(1..8))
            .map(|_| Tensor::from_vec(random_vec(&mut rng, dim, 3.0)).unwrap())
            .collect();
        for (epoch, rms) in [(0, true), (horizon, false)] {
            let (mut pa, mut pr) = (p0.clone(), p0.clone());
            let mut sa = OptimState::for_params(&p0);
            let mut sr = OptimState::for_params(&p0);
            sa.epoch = epoch;
            for g in &grads {
                pa = awdr_step(&mut sa, &pa, g, &hp).unwrap();
                let d = if rms {
                    rmsprop_delta(&mut sr, g, &hp).unwrap()
                } else {
                    adamw_delta(&mut sr, &pr, g, &hp).unwrap()
                };
                let next = pr.data().iter().zip(d.data()).map(|(p, d)| p + d).collect();
                pr = Tensor::from_vec(next).unwrap();
                if pa
                    .data()
                    .iter()
                    .zip(pr.data())
                    .any(|(a, b)| a.to_bits() != b.to_bits())
                {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("100 cases, {mismatches} non-identical updates"),
    )
}

fn gradient_verification() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for t in [
        GradCheckTarget::Bce,
        GradCheckTarget::Dfl,
        GradCheckTarget::Ciou,
    ] {
        let r = run_grad_check(t, 100, 0).unwrap();
        pass &= r.max_rel_error <= GRAD_CHECK_TOLERANCE;
        parts.push(format!("{} max {:.2e}", t.name(), r.max_rel_error));
    }
    outcome(
        pass,
        format!("100 cases each, tol 1e-4: {}", parts.join(", ")),
    )
}

fn loss_weight_fidelity() -> Outcome {
    let v = total_detection_loss(1.0, 1.0, 1.0, &LossWeights::default()).unwrap();
    outcome(v == 9.5, format!("total_detection_loss(1,1,1) = {v}"))
}

fn metric_fidelity() -> Outcome {
    let r98 = recall(&Confusion::new(98, 0, 0, 2)).unwrap();
    let r100 = recall(&Confusion::new(100, 0, 0, 0)).unwrap();
    let f1 = f1_score(Some(0.99), Some(0.99)).unwrap();
    let pass =
        (r98 - 0.98).abs() <= 1e-12 && (r100 - 1.0).abs() <= 1e-12 && (f1 - 0.99).abs() <= 1e-12;
    outcome(
        pass,
        format!("recall(98,2)={r98}, recall(100,0)={r100}, f1(0.99,0.99)={f1}"),
    )
}

fn toy_convergence() -> Outcome {
    let hp = HyperParams::default().with_lr(1e-2);
    let converged = |h: &TrainHistory| !h.summary.diverged && h.summary.final_loss < 0.1;
    let mut below_target = Vec::new();
    let mut awdr_misses = Vec::new();
    let mut worst = [1.0f64; 3];
    for seed in 0..10 {
        let spec = SyntheticSpec {
            seed,
            n_per_class: 200,
            dim: 2,
            separation: 6.0,
        };
        let runs: Vec<TrainHistory> = OptimizerKind::ALL
            .iter()
            .map(|&o| train_toy(o, &hp, &spec, 200, 32).unwrap())
            .collect();
        for (i, h) in runs.iter().enumerate() {
            worst[i] = worst[i].min(h.summary.final_accuracy);
            if h.summary.diverged || h.summary.final_accuracy < TARGET_ACCURACY {
                below_target.push(format!("{}@{seed}", h.optimizer.name()));
            }
        }
        if converged(&runs[0]) && converged(&runs[1]) && !converged(&runs[2]) {
            awdr_misses.push(seed);
        }
    }
    outcome(
        below_target.is_empty() && awdr_misses.is_empty(),
        format!(
            "10 seeds, 200 epochs, lr 1e-2: min train acc rmsprop {:.4} adamw {:.4} awdr {:.4}; below 95%: {:?}; awdr misses: {:?}",
            worst[0], worst[1], worst[2], below_target, awdr_misses
        ),
    )
}

fn test_function_convergence() -> Outcome {
    let hp = HyperParams::default().with_lr(1e-2);
    let mut pass = true;
    let mut parts = Vec::new();
    for o in OptimizerKind::ALL {
        let t = bench_function(TestFunction::Quadratic, o, &hp, &[1.0], 10_000).unwrap();
        let ok = !t.diverged && t.final_value() < 1e-6;
        pass &= ok;
        parts.push(format!(
            "quadratic {} f={:.3e}{}",
            o.name(),
            t.final_value(),
            if ok { "" } else { " (FAIL)" }
        ));
    }
    let t = tune_lr(
        TestFunction::Rosenbrock,
        OptimizerKind::Awdr,
        &HyperParams::default(),
        &[-1.2, 1.0],
        50_000,
        &ROSENBROCK_LR_GRID,
    )
    .unwrap();
    let ok = !t.diverged && t.final_value() < 1e-3;
    pass &= ok;
    parts.push(format!(
        "rosenbrock awdr best lr {} f={:.3e}{}",
        t.lr,
        t.final_value(),
        if ok { "" } else { " (FAIL)" }
    ));
    outcome(pass, format!(
        "quadratic from x=1 at lr 1e-2 for 1e4 steps, rosenbrock for 5e4 steps over the lr grid: {}",
        parts.join("; ")
    ))
}

fn shape_ladder() -> Outcome {
    let shapes = backbone_ladder([3, 640, 640], &BACKBONE_STAGES).unwrap();
    let spatial: Vec<usize> = shapes.iter().map(|s| s[1]).collect();
    let channels: Vec<usize> = shapes.iter().map(|s| s[0]).collect();
    // a real stride-2 conv on a dummy tensor agrees with the ladder's first step
    let y = conv2d(
        &Tensor::zeros(&[3, 64, 64]),
        &Tensor::zeros(&[32, 3, 3, 3]),
        &[0.0; 32],
        2,
        1,
    )
    .unwrap();
    let pass = spatial[..6] == [640, 320, 160, 80, 40, 20]
        && channels == [3, 32, 64, 128, 256, 512, 1024]
        && y.shape() == [32, 32, 32];
    outcome(pass, format!("spatial {spatial:?}, channels {channels:?}"))
}

fn pairwise_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                num += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    (pairs > 0.0).then(|| num / pairs)
}

fn oracle_equivalences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut auc_bad = 0usize;
    let mut auc_cases = 0usize;
    for n in 1..=12usize {
        // three score sets per length: distinct, heavily tied, and all equal
        let score_sets = [
            random_vec(&mut rng, n, 1.0),
            (0..n)
                .map(|_| rng.random_range(0..3) as f64)
                .collect::<Vec<_>>(),
            vec![0.5; n],
        ];
        for scores in &score_sets {
            for mask in 0..(1u32 << n) {
                let labels: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                let got = auc_roc(scores, &labels).unwrap();
                let want = pairwise_auc(scores, &labels);
                auc_cases += 1;
                let ok = match (got, want) {
                    (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
                    (None, None) => true,
                    _ => false,
                };
                if !ok {
                    auc_bad += 1;
                }
            }
        }
    }

    let mut conv_bad = 0usize;
    for case in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + case);
        let (c, o) = (rng.random_range(1..6), rng.random_range(1..6));
        let x = Tensor::new(vec![c, 6, 5], random_vec(&mut rng, c * 30, 2.0)).unwrap();
        let w = Tensor::new(vec![o, c], random_vec(&mut rng, o * c, 2.0)).unwrap();
        let a = pointwise_conv(&x, &w).unwrap();
        let b = conv2d(
            &x,
            &w.clone().reshape(&[o, c, 1, 1]).unwrap(),
            &vec![0.0; o],
            1,
            0,
        )
        .unwrap();
        if a.data()
            .iter()
            .zip(b.data())
            .any(|(p, q)| p.to_bits() != q.to_bits())
        {
            conv_bad += 1;
        }
    }

    let mut pool_bad = 0usize;
    for case in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + case);
        let (h, w) = (rng.random_range(1..10), rng.random_range(1..10));
        let k = [1, 3, 5, 7][case as usize % 4];
        let x = Tensor::new(vec![2, h, w], random_vec(&mut rng, 2 * h * w, 2.0)).unwrap();
        let stages = sppf_stages(&x, k).unwrap();
        let mut cur = x.clone();
        for stage in &stages[1..] {
            let r = (k / 2) as isize;
            let mut brute = vec![0.0; 2 * h * w];
            for c in 0..2 {
                for y in 0..h {
                    for xx in 0..w {
                        let mut m = f64::NEG_INFINITY;
                        for dy in -r..=r {
                            for dx in -r..=r {
                                let (yy, xq) = (y as isize + dy, xx as isize + dx);
                                if yy >= 0 && xq >= 0 && (yy as usize) < h && (xq as usize) < w {
                                    m = m.max(cur.data()[(c * h + yy as usize) * w + xq as usize]);
                                }
                            }
                        }
                        brute[(c * h + y) * w + xx] = m;
                    }
                }
            }
            if stage.data() != brute.as_slice() || max_pool_same(&cur, k).unwrap() != *stage {
                pool_bad += 1;
            }
            cur = stage.clone();
        }
    }
    outcome(
        auc_bad + conv_bad + pool_bad == 0,
        format!(
            "AUC vs pairwise: {auc_cases} inputs, {auc_bad} mismatches; pointwise vs 1x1 conv: 50 cases, {conv_bad} mismatches; SPPF vs window max: 150 stages, {pool_bad} mismatches"
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    fs::write(
        dir.path().join("scores.csv"),
        "score,label\n0.9,1\n0.8,0\n0.7,1\n0.4,0\n0.35,1\n",
    )
    .unwrap();
    let runs: [&[&str]; 6] = [
        &[
            "bench",
            "--function",
            "rosenbrock",
            "--optimizer",
            "awdr",
            "--steps",
            "2000",
            "--seed",
            "3",
            "--out",
            "bench.csv",
        ],
        &[
            "bench",
            "--function",
            "quadratic",
            "--optimizer",
            "adamw",
            "--steps",
            "500",
            "--seed",
            "5",
            "--out",
            "bench.json",
        ],
        &[
            "train-toy",
            "--optimizer",
            "awdr",
            "--epochs",
            "30",
            "--seed",
            "2",
            "--out",
            "train.csv",
        ],
        &[
            "grad-check",
            "--loss",
            "dfl",
            "--cases",
            "20",
            "--seed",
            "4",
            "--out",
            "grad.json",
        ],
        &["scale", "--step", "0.05", "--out", "scale.json"],
        &["metrics", "--input", "scores.csv", "--out", "metrics.json"],
    ];
    let files = [
        "bench.csv",
        "bench.summary.json",
        "bench.json",
        "train.csv",
        "train.summary.json",
        "grad.json",
        "scale.json",
        "metrics.json",
    ];
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        for args in runs {
            let status = Command::new(env!("CARGO_BIN_EXE_awdr"))
                .args(args)
                .current_dir(dir.path())
                .env_remove("AWDR_OUT_DIR")
                .stdout(Stdio::null())
                .status()
                .unwrap();
            if !status.success() {
                return outcome(false, format!("{args:?} exited with {status}"));
            }
        }
        let snap: Vec<Vec<u8>> = files
            .iter()
            .map(|f| fs::read(dir.path().join(f)).unwrap())
            .collect();
        for f in files {
            fs::remove_file(dir.path().join(f)).unwrap();
        }
        snapshots.push(snap);
    }
    let differing: Vec<&str> = files
        .iter()
        .zip(snapshots[0].iter().zip(&snapshots[1]))
        .filter(|(_, (a, b))| a != b)
        .map(|(f, _)| *f)
        .collect();
    outcome(
        differing.is_empty() && Path::new(env!("CARGO_BIN_EXE_awdr")).exists(),
        format!(
            "{} artifacts over two runs, differing: {differing:?}",
            files.len()
        ),
    )
}

type Criterion = (u8, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (
            1,
            "AWDR endpoint equivalence",
            Duration::from_secs(1),
            endpoint_equivalence,
        ),
        (
            2,
            "gradient verification",
            Duration::from_secs(5),
            gradient_verification,
        ),
        (
            3,
            "loss-weight fidelity",
            Duration::from_secs(1),
            loss_weight_fidelity,
        ),
        (
            4,
            "metric fidelity",
            Duration::from_secs(1),
            metric_fidelity,
        ),
        (
            5,
            "toy convergence",
            Duration::from_secs(60),
            toy_convergence,
        ),
        (
            6,
            "test-function convergence",
            Duration::from_secs(30),
            test_function_convergence,
        ),
        (7, "shape ladder", Duration::from_secs(1), shape_ladder),
        (
            8,
            "oracle equivalences",
            Duration::from_secs(10),
            oracle_equivalences,
        ),
        (9, "determinism", Duration::from_secs(60), determinism),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let in_budget = took <= budget;
        let pass = out.pass && in_budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{id}] {name} ({:.2}s, budget {}s{}): {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            if in_budget { "" } else { ", over budget" },
            out.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
