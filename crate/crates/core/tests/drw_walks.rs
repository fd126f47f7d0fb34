use dgff_ballot::drw::*;
use dgff_ballot::seeds::StreamId;
use dgff_ballot::stats::CrossMoments;
use proptest::prelude::*;

#[test]
fn bridge_covariance_matches_law() {
    let spec = DrwSpec::gaussian(Horizon::Finite(20), -1.0, -2.0);
    let means: Vec<f64> = (0..=20).map(|k| spec.mean(k)).collect();
    let mut cm = CrossMoments::new(means.clone(), means);
    for t in 0..100_000 {
        let p = sample_walk(&spec, StreamId::new(21, 0, t)).unwrap();
        cm.push(&p.s, &p.s);
    }
    // Rows 0 and T are deterministic; compare the interior.
    let mut worst = 0.0f64;
    for k in 1..20 {
        for m in 1..20 {
            let z = (cm.estimate(k, m) - spec.covariance(k, m)).abs() / cm.std_error(k, m);
            worst = worst.max(z);
        }
    }
    assert!(worst < 4.0, "max z = {worst}");
}

#[test]
fn mean_ell_for_deep_start() {
    let spec = DrwSpec::gaussian(Horizon::Finite(10_000), -50.0, -50.0);
    let e = ell(&spec, 10, 4000, 22, 0).unwrap();
    let ratio = e.mean / 50.0;
    assert!((0.9..=1.1).contains(&ratio), "ℓ/a⁻ = {ratio}");
}

#[test]
fn ell_barely_depends_on_far_endpoint() {
    let lo = ell(&DrwSpec::gaussian(Horizon::Finite(1_000_000), -2.0, -5.0), 5, 40_000, 23, 0).unwrap();
    let hi = ell(&DrwSpec::gaussian(Horizon::Finite(1_000_000), -2.0, 100.0), 5, 40_000, 23, 0).unwrap();
    assert!(lo.ci.overlaps(&hi.ci), "{lo:?} vs {hi:?}");
}

#[test]
fn ell_decreases_as_start_rises() {
    let deep = ell(&DrwSpec::gaussian(Horizon::Finite(400), -4.0, -6.0), 10, 20_000, 24, 0).unwrap();
    let shallow = ell(&DrwSpec::gaussian(Horizon::Finite(400), -1.0, -6.0), 10, 20_000, 24, 0).unwrap();
    assert!(shallow.mean < deep.mean);
}

#[test]
fn ell_nested_r_agree_for_long_walks() {
    let spec = DrwSpec::gaussian(Horizon::Finite(5000), -3.0, -3.0);
    let a = ell(&spec, 20, 20_000, 25, 0).unwrap();
    let b = ell(&spec, 40, 20_000, 25, 0).unwrap();
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() < 3.0 * se + 0.05 * a.mean, "{a:?} vs {b:?}");
}

#[test]
fn classic_f_values() {
    let trace = classic_f_trace(-20.0, &[250, 1000], 20_000, 26, 0).unwrap();
    let f = trace[1].1.mean;
    assert!((18.0..=22.0).contains(&f), "F(−20) ≈ {f}");
    assert!(classic_f(0.0, 200, 20_000, 26, 1).unwrap().ci.lo > 0.0);
    let fs: Vec<f64> = [-1.0, -5.0, -20.0].iter().map(|w| classic_f(*w, 400, 20_000, 27, 0).unwrap().mean).collect();
    assert!(fs[0] < fs[1] && fs[1] < fs[2], "{fs:?}");
}

#[test]
fn ballot_decreases_under_decoration_shift() {
    let base = DrwSpec::gaussian(Horizon::Finite(100), -3.0, -3.0);
    let w = |shift| base.clone().with_decoration(DecorationModel::Weibull { scale: 0.5, exponent: 1.0, shift });
    let p0 = ballot_prob(&w(0.0), 20_000, None, 28, 0).unwrap();
    let p1 = ballot_prob(&w(0.5), 20_000, None, 28, 0).unwrap();
    let z = ballot_prob(&base, 20_000, None, 28, 0).unwrap();
    assert!(p1.successes <= p0.successes);
    assert!(p0.estimate < z.estimate + 0.05);
}

#[test]
fn control_variable_tail_decays() {
    let spec = DrwSpec::gaussian(Horizon::Finite(200), -2.0, -2.0).with_decoration(DecorationModel::Weibull { scale: 0.5, exponent: 1.0, shift: 0.0 });
    let rs = control_r_sample(&spec, 4000, 29, 0).unwrap();
    assert!(rs.iter().all(|r| *r >= 1));
    let h = r_histogram(&rs);
    let mode = (0..h.len()).max_by_key(|i| h[*i].1).unwrap();
    assert!(h[mode..].windows(2).all(|w| w[1].1 <= w[0].1), "{h:?}");
    assert!(h.last().unwrap().1 * 20 < h[mode].1, "{h:?}");
}

#[test]
fn estimators_do_not_depend_on_thread_count() {
    let spec = DrwSpec::gaussian(Horizon::Finite(50), -2.0, -2.0).with_decoration(DecorationModel::Weibull { scale: 0.3, exponent: 1.0, shift: 0.0 });
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| (ballot_prob(&spec, 20_000, None, 30, 0).unwrap(), ell(&spec, 5, 20_000, 30, 0).unwrap()))
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.0, b.0);
    assert_eq!(a.1.mean.to_bits(), b.1.mean.to_bits());
}

proptest! {
    #[test]
    fn sequential_bridge_has_exact_marginals(v in proptest::collection::vec(0.3f64..3.0, 2..40), a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let t = v.len();
        let spec = DrwSpec { t: Horizon::Finite(t), a, b, sigma2: StepVariances::Sequence(v.clone()), delta: 0.25, decoration: DecorationModel::Zero };
        let s = spec.cumulative_variance();
        // S_k = (1 − g_k) S_{k−1} + g_k b + noise, g_k = σ_k²/(s_T − s_{k−1}).
        let (mut mean, mut var) = (a, 0.0);
        for k in 1..t {
            let g = v[k - 1] / (s[t] - s[k - 1]);
            mean = (1.0 - g) * mean + g * b;
            var = (1.0 - g) * (1.0 - g) * var + spec.conditional_variance(k, &s);
            prop_assert!((mean - spec.mean(k)).abs() < 1e-9 * (1.0 + a.abs() + b.abs()));
            prop_assert!((var - spec.covariance(k, k)).abs() < 1e-9 * s[t]);
        }
    }

    #[test]
    fn control_r_is_at_least_one(s in proptest::collection::vec(-5.0f64..5.0, 2..30), scale in 0.0f64..10.0) {
        let d: Vec<f64> = s.iter().map(|x| x * scale).collect();
        prop_assert!(control_r(&s, &d, Some(s.len() - 1), 0.2) >= 1);
    }
}
