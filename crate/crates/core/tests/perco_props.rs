use std::sync::Arc;

use cayperc::cayley::build_ball;
use cayperc::gff::{field_stack, lambda_n, sample_truncated_gff};
use cayperc::group::{standard_generators, GroupModel};
use cayperc::perco::*;
use cayperc::rng::stream;
use proptest::prelude::*;

fn z2_ball(r: u32) -> Arc<cayperc::cayley::CayleyBall> {
    let m = GroupModel::free_abelian(2).unwrap();
    Arc::new(build_ball(&m, &standard_generators(&m), r).unwrap())
}

/// Exact `P_p[o ↔ shell]` and its `p`-derivative on a 13-vertex window by
/// summing over all configurations, against the closed-pivotal sum.
#[test]
fn clock_formula_is_exact_on_a_small_window() {
    let w = PercWindow::from_ball(z2_ball(2));
    let n = w.len();
    assert_eq!(n, 13);
    let ev = Event::origin_to_shell(&w);
    let t = 0.7f64;
    let p = 1.0 - (-t).exp();
    let (mut prob, mut dprob_dp, mut closed_piv) = (0.0, 0.0, 0.0);
    let mut cl = Clusters::new(n);
    for mask in 0u32..(1 << n) {
        let open: Vec<bool> = (0..n).map(|v| mask & (1 << v) != 0).collect();
        let k = open.iter().filter(|&&b| b).count() as i32;
        let weight = p.powi(k) * (1.0 - p).powi(n as i32 - k);
        if event_holds(&w, &open, &ev, &mut cl) {
            prob += weight;
            dprob_dp += weight * (k as f64 / p - (n as i32 - k) as f64 / (1.0 - p));
        }
        let piv = pivotal_set(&w, &PercConfig::from_bits(open), &ev);
        closed_piv += weight * piv.closed_pivotal.len() as f64;
    }
    let dprob_dt = (-t).exp() * dprob_dp;
    assert!(
        (dprob_dt - closed_piv).abs() < 1e-12,
        "{dprob_dt} vs {closed_piv}"
    );

    let cfg = RussoConfig {
        variant: RussoVariant::Clock,
        point: InterpolationPoint::new(t, 1, 0.0).unwrap(),
        delta: 0.05,
        samples: 40_000,
        seed: 77,
    };
    let r = russo_check(&w, None, &ev, &cfg).unwrap();
    for s in &r.sides {
        assert!(
            (s.pivotal - dprob_dt).abs() < 4.0 * s.pivotal_se,
            "{s:?} exact {dprob_dt}"
        );
        assert!(
            (s.derivative - dprob_dt).abs() < 4.0 * s.derivative_se + 0.01,
            "{s:?} exact {dprob_dt}"
        );
    }
    let est = connection_prob(
        &w,
        &ModelSpec::Bernoulli { p },
        None,
        &[w.origin()],
        &w.interior(),
        40_000,
        3,
    )
    .unwrap();
    assert!((est.estimate - prob).abs() < 4.0 * est.stderr);
}

#[test]
fn box_connection_is_monotone_in_p() {
    let w = PercWindow::z_box(2, 32).unwrap();
    let interior = w.interior();
    let o = [w.origin()];
    let lo = connection_prob(
        &w,
        &ModelSpec::Bernoulli { p: 0.55 },
        None,
        &o,
        &interior,
        10_000,
        5,
    )
    .unwrap();
    let hi = connection_prob(
        &w,
        &ModelSpec::Bernoulli { p: 0.70 },
        None,
        &o,
        &interior,
        10_000,
        5,
    )
    .unwrap();
    assert!(
        hi.estimate - lo.estimate > 3.0 * hi.stderr.hypot(lo.stderr),
        "{lo:?} {hi:?}"
    );
}

#[test]
fn high_excursion_level_never_connects() {
    let ball = z2_ball(5);
    let stack = field_stack(&ball, 2).unwrap();
    let w = PercWindow::from_ball(ball);
    let est = connection_prob(
        &w,
        &ModelSpec::Excursion { h: 10.0 },
        Some(&stack),
        &[0],
        &w.interior(),
        500,
        1,
    )
    .unwrap();
    assert_eq!(est.hits, 0);
    let other = PercWindow::from_ball(z2_ball(5));
    assert!(matches!(
        connection_prob(
            &other,
            &ModelSpec::Excursion { h: 0.0 },
            Some(&stack),
            &[0],
            &other.interior(),
            5,
            1
        ),
        Err(cayperc::error::PercoError::BadModel(_))
    ));
}

#[test]
fn hybrid_sample_contents() {
    let ball = z2_ball(4);
    let stack = field_stack(&ball, 3).unwrap();
    let t = 0.4f64;
    let p = 1.0 - (-t).exp();
    let mut open = 0usize;
    let draws = 400;
    for i in 0..draws {
        let f = sample_truncated_gff(&stack, &mut stream(4, "field", i));
        let u = vertex_uniforms(ball.len(), &mut stream(4, "omega0", i));
        let point = InterpolationPoint::new(t, 2, 1.3).unwrap();
        let c = hybrid_config(&point, &u, &f);
        assert!(c.provenance_consistent());
        for (x, &ux) in u.iter().enumerate() {
            if ux < p {
                assert!(c.open[x]);
            }
        }
        // λ → ∞ leaves ω⁰ and the tail scales only
        let far = hybrid_config(&InterpolationPoint::new(t, 2, 1e9).unwrap(), &u, &f);
        let prov = far.provenance.as_ref().unwrap();
        assert!(prov.iter().all(|s| !matches!(s, Provenance::Scale(_))));
        assert!(far.open.iter().zip(&c.open).all(|(a, b)| !a || *b));
        open += c.open_count();
        let sampled = hybrid_sample(&point, &f, &mut stream(4, "omega0", i)).unwrap();
        assert_eq!(sampled, c);
    }
    assert!(open as f64 / (draws as usize * ball.len()) as f64 >= p);
    let f = sample_truncated_gff(&stack, &mut stream(4, "field", 0));
    let below = InterpolationPoint {
        t,
        n: 2,
        lambda: lambda_n(2) - 0.1,
    };
    assert!(hybrid_sample(&below, &f, &mut stream(1, "x", 0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn coupled_sweep_is_monotone(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (p1, p2) = if a < b { (a, b) } else { (b, a) };
        let w = PercWindow::z_box(2, 6).unwrap();
        let ev = Event::origin_to_shell(&w);
        let mut cl = Clusters::new(w.len());
        let c1 = bernoulli_sample(&w, p1, &mut stream(seed, "omega0", 0)).unwrap();
        let c2 = bernoulli_sample(&w, p2, &mut stream(seed, "omega0", 0)).unwrap();
        prop_assert!(c1.open.iter().zip(&c2.open).all(|(x, y)| !x || *y));
        let e1 = event_holds(&w, &c1.open, &ev, &mut cl);
        let e2 = event_holds(&w, &c2.open, &ev, &mut cl);
        prop_assert!(!e1 || e2);
    }

    #[test]
    fn hybrid_is_monotone_in_lambda(seed in any::<u64>(), l1 in -0.5f64..3.0, l2 in -0.5f64..3.0, t in 0.0f64..2.0) {
        let ball = z2_ball(3);
        let stack = field_stack(&ball, 2).unwrap();
        let f = sample_truncated_gff(&stack, &mut stream(seed, "field", 0));
        let u = vertex_uniforms(ball.len(), &mut stream(seed, "omega0", 0));
        let (lo, hi) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
        let c_lo = hybrid_config(&InterpolationPoint::new(t, 1, lo).unwrap(), &u, &f);
        let c_hi = hybrid_config(&InterpolationPoint::new(t, 1, hi).unwrap(), &u, &f);
        prop_assert!(c_hi.open.iter().zip(&c_lo.open).all(|(h, l)| !h || *l));
    }

    #[test]
    fn pivotal_sets_are_disjoint_and_correct(seed in any::<u64>(), p in 0.2f64..0.9) {
        let w = PercWindow::z_box(2, 3).unwrap();
        let ev = Event::origin_to_shell(&w);
        let c = bernoulli_sample(&w, p, &mut stream(seed, "omega0", 0)).unwrap();
        let piv = pivotal_set(&w, &c, &ev);
        let mut cl = Clusters::new(w.len());
        for x in 0..w.len() {
            let mut flipped = c.open.clone();
            flipped[x] = !flipped[x];
            let changes = event_holds(&w, &flipped, &ev, &mut cl) != piv.event;
            prop_assert_eq!(changes, piv.closed_pivotal.contains(&x) || piv.open_pivotal.contains(&x));
            prop_assert!(!(piv.closed_pivotal.contains(&x) && piv.open_pivotal.contains(&x)));
        }
    }
}
