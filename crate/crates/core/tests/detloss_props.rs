use awdr_core::detloss::{
    ciou_loss, dfl_bracket, dfl_loss, dfl_loss_raw, finite_diff_grad, iou, relative_error,
    total_detection_loss, BinDistribution, Box2D, LossWeights,
};
use awdr_core::harness::{run_grad_check, GradCheckTarget, GRAD_CHECK_TOLERANCE};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_box(rng: &mut ChaCha8Rng) -> Box2D {
    Box2D::new(
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
        rng.random_range(0.1..4.0),
        rng.random_range(0.1..4.0),
    )
    .unwrap()
}

fn overlaps(a: &Box2D, b: &Box2D) -> bool {
    let (ax0, ay0, ax1, ay1) = (
        a.cx - a.w / 2.0,
        a.cy - a.h / 2.0,
        a.cx + a.w / 2.0,
        a.cy + a.h / 2.0,
    );
    let (bx0, by0, bx1, by1) = (
        b.cx - b.w / 2.0,
        b.cy - b.h / 2.0,
        b.cx + b.w / 2.0,
        b.cy + b.h / 2.0,
    );
    ax0.max(bx0) < ax1.min(bx1) && ay0.max(by0) < ay1.min(by1)
}

#[test]
fn iou_symmetric_bounded_on_seeded_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut disjoint = 0;
    for _ in 0..1000 {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let ab = iou(&a, &b).unwrap();
        let ba = iou(&b, &a).unwrap();
        assert_eq!(ab, ba);
        assert!((0.0..=1.0).contains(&ab));
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(ab == 0.0, !overlaps(&a, &b), "{a:?} {b:?}");
        if ab == 0.0 {
            disjoint += 1;
        }
    }
    assert!(disjoint > 100 && disjoint < 1000);
}

#[test]
fn ciou_nonnegative_and_zero_only_at_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let (p, g) = (random_box(&mut rng), random_box(&mut rng));
        let r = ciou_loss(&p, &g).unwrap();
        assert!(r.loss > 0.0, "{p:?} {g:?} -> {}", r.loss);
        let same = ciou_loss(&p, &p).unwrap();
        assert_eq!(same.loss, 0.0);
        assert_eq!(same.grad, [0.0; 4]);
    }
}

#[test]
fn degenerate_boxes_are_rejected() {
    assert!(Box2D::new(0.0, 0.0, 0.0, 1.0).is_err());
    assert!(Box2D::new(0.0, 0.0, 1.0, -1.0).is_err());
    assert!(Box2D::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for target in [
        GradCheckTarget::Bce,
        GradCheckTarget::Dfl,
        GradCheckTarget::Ciou,
    ] {
        let r = run_grad_check(target, 100, 11).unwrap();
        assert!(r.max_rel_error <= GRAD_CHECK_TOLERANCE, "{target:?}: {r:?}");
    }
}

#[test]
fn dfl_gradient_matches_direct_differences() {
    let probs = [0.1, 0.2, 0.3, 0.4];
    for y in [0.3, 1.5, 2.9] {
        let analytic = dfl_loss_raw(&probs, y).unwrap().grad;
        let fd = finite_diff_grad(|p| dfl_loss_raw(p, y).unwrap().loss, &probs, 1e-6);
        assert!(fd.is_clean());
        assert!(relative_error(&analytic, &fd.grad) < 1e-8);
    }
}

/// Every distribution on the simplex over 4 bins with mass in steps of 1/100.
fn simplex_grid(steps: usize) -> impl Iterator<Item = [f64; 4]> {
    (0..=steps).flat_map(move |a| {
        (0..=steps - a).flat_map(move |b| {
            (0..=steps - a - b).map(move |c| {
                let d = steps - a - b - c;
                [a, b, c, d].map(|k| k as f64 / steps as f64)
            })
        })
    })
}

#[test]
fn dfl_minimum_splits_mass_over_bracket() {
    for y in [0.25, 1.3, 2.0, 2.75, 3.0] {
        let (lo, hi, w_lo, w_hi) = dfl_bracket(4, y).unwrap();
        let mut best = (f64::INFINITY, [0.0; 4]);
        for p in simplex_grid(100) {
            let l = dfl_loss_raw(&p, y).unwrap().loss;
            if l < best.0 {
                best = (l, p);
            }
        }
        let p = best.1;
        assert!((p[lo] - w_lo).abs() <= 0.01 + 1e-12, "y={y}: {p:?}");
        assert!((p[hi] - w_hi).abs() <= 0.01 + 1e-12, "y={y}: {p:?}");
        for (i, v) in p.iter().enumerate() {
            if i != lo && i != hi {
                assert_eq!(*v, 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn dfl_convex_in_bracket_log_probs(
        y in 0.001f64..2.999,
        u in (-6.0f64..-0.01, -6.0f64..-0.01),
        v in (-6.0f64..-0.01, -6.0f64..-0.01),
        t in 0.0f64..=1.0,
    ) {
        let (lo, hi, _, _) = dfl_bracket(4, y).unwrap();
        let loss = |l: (f64, f64)| {
            let mut p = [0.25; 4];
            p[lo] = l.0.exp();
            p[hi] = l.1.exp();
            dfl_loss_raw(&p, y).unwrap().loss
        };
        let mid = (t * u.0 + (1.0 - t) * v.0, t * u.1 + (1.0 - t) * v.1);
        prop_assert!(loss(mid) <= t * loss(u) + (1.0 - t) * loss(v) + 1e-12);
    }

    #[test]
    fn dfl_nonnegative_on_valid_distributions(
        raw in prop::collection::vec(0.01f64..1.0, 2..12),
        frac in 0.0f64..=1.0,
    ) {
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let y = frac * (probs.len() - 1) as f64;
        let dist = BinDistribution::new(probs).unwrap();
        let r = dfl_loss(&dist, y).unwrap();
        prop_assert!(r.loss >= 0.0 && !r.saturated);
    }

    #[test]
    fn total_loss_is_linear(
        a in prop::array::uniform3(0.0f64..10.0),
        b in prop::array::uniform3(0.0f64..10.0),
        k in 0.0f64..5.0,
    ) {
        let w = LossWeights::default();
        let f = |p: [f64; 3]| total_detection_loss(p[0], p[1], p[2], &w).unwrap();
        let sum = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
        prop_assert!((f(sum) - f(a) - f(b)).abs() <= 1e-12 * (1.0 + f(sum)));
        let scaled = [k * a[0], k * a[1], k * a[2]];
        prop_assert!((f(scaled) - k * f(a)).abs() <= 1e-12 * (1.0 + f(scaled)));
    }

    #[test]
    fn iou_invariant_under_shared_translation(
        a in (-5.0f64..5.0, -5.0f64..5.0, 0.1f64..4.0, 0.1f64..4.0),
        b in (-5.0f64..5.0, -5.0f64..5.0, 0.1f64..4.0, 0.1f64..4.0),
        dx in -3.0f64..3.0,
    ) {
        let ba = Box2D::new(a.0, a.1, a.2, a.3).unwrap();
        let bb = Box2D::new(b.0, b.1, b.2, b.3).unwrap();
        let sa = Box2D::new(a.0 + dx, a.1 - dx, a.2, a.3).unwrap();
        let sb = Box2D::new(b.0 + dx, b.1 - dx, b.2, b.3).unwrap();
        prop_assert!((iou(&ba, &bb).unwrap() - iou(&sa, &sb).unwrap()).abs() <= 1e-9);
    }
}

#[test]
fn dfl_zero_probability_saturates() {
    let r = dfl_loss_raw(&[0.0, 0.0, 1.0, 0.0], 2.5).unwrap();
    assert!(r.saturated);
    assert_eq!(r.loss, f64::INFINITY);
    assert!(dfl_loss_raw(&[0.5, 0.5], 1.5).is_err());
    assert!(dfl_loss_raw(&[0.5, 0.5], -0.1).is_err());
}
