use dgff_ballot::functionals::*;
use dgff_ballot::gff::{AnnulusSpec, BoundarySpec};
use dgff_ballot::solver::SolverTolerances;
use dgff_ballot::ContinuumDomain;

fn ballot_cfg(u: f64, v: f64) -> BallotConfig {
    BallotConfig { annulus: AnnulusSpec::ball(4.0, 1.0, (-0.5f64).exp()).with_bulk(0.1, 0.2), u: BoundarySpec::constant(u), v: BoundarySpec::constant(v) }
}

fn l_cfg(u: BoundarySpec) -> LConfig {
    LConfig { u: ContinuumDomain::unit_disk(), n: 4.0, u_data: u, eta: 0.1, eps: (-0.5f64).exp(), r: None }
}

fn r_cfg(v: f64) -> RConfig {
    RConfig { v: ContinuumDomain::unit_disk(), k: 1.0, v_data: BoundarySpec::constant(v), zeta: 0.5, eps: (-0.5f64).exp(), r: None }
}

#[test]
fn extreme_boundary_data_gives_trivial_ballot() {
    let tol = SolverTolerances::default();
    let low = estimate_ballot(&ballot_cfg(-1e6, -1e6), 500, 40, 0, &tol).unwrap();
    let high = estimate_ballot(&ballot_cfg(1e6, 1e6), 500, 40, 0, &tol).unwrap();
    assert_eq!(low.probability.successes, 500);
    assert_eq!(high.probability.successes, 0);
    assert_eq!(low.config_hash.len(), 64);
    assert_ne!(low.config_hash, high.config_hash);
}

#[test]
fn ballot_is_monotone_in_boundary_data() {
    let tol = SolverTolerances::default();
    let ps: Vec<u64> = [-4.0, -2.0, 0.0].iter().map(|c| estimate_ballot(&ballot_cfg(*c, *c), 4000, 41, 0, &tol).unwrap().probability.successes).collect();
    assert!(ps[0] > ps[1] && ps[1] > ps[2], "{ps:?}");
    assert!(ps[0] < 4000);
}

#[test]
fn empty_bulk_is_rejected() {
    let mut cfg = ballot_cfg(0.0, 0.0);
    cfg.annulus.n = 1.2;
    assert!(estimate_ballot(&cfg, 10, 1, 0, &SolverTolerances::default()).is_err());
}

#[test]
fn deep_boundary_gives_l_near_minus_ubar() {
    let e = estimate_l(&l_cfg(BoundarySpec::constant(-50.0)), &[], 2000, 42, 0, &SolverTolerances::default()).unwrap();
    assert_eq!(e.r, r_sequence(4.0));
    let ratio = e.value / 50.0;
    assert!((0.9..=1.1).contains(&ratio), "L/ū⁻ = {ratio}");
}

#[test]
fn l_is_positive_with_an_r_trace() {
    let e = estimate_l(&l_cfg(BoundarySpec::zero()), &[2], 20_000, 43, 0, &SolverTolerances::default()).unwrap();
    assert!(e.ci.lo > 0.0, "{e:?}");
    assert_eq!(e.trace.iter().map(|t| t.r).collect::<Vec<_>>(), [1, 2]);
    assert_eq!(e.trace[0].value, e.value);
}

#[test]
fn centering_u_at_its_average_only_lowers_l() {
    let tol = SolverTolerances::default();
    let u = BoundarySpec::Affine { c: -2.0, gradient: [1.0, 0.5] };
    let shifted = BoundarySpec::Affine { c: 0.0, gradient: [1.0, 0.5] };
    let (_, ubar) = l_model(&l_cfg(u.clone()), &tol).unwrap();
    assert!((ubar + 2.0).abs() < 1e-6, "ū(0) = {ubar}");
    let a = estimate_l(&l_cfg(u), &[], 3000, 44, 0, &tol).unwrap();
    let b = estimate_l(&l_cfg(shifted), &[], 3000, 44, 0, &tol).unwrap();
    assert!(b.value <= a.value, "{} > {}", b.value, a.value);
}

#[test]
fn l_geometry_violation_is_reported() {
    let mut cfg = l_cfg(BoundarySpec::zero());
    cfg.eta = 0.9;
    let err = estimate_l(&cfg, &[], 10, 1, 0, &SolverTolerances::default()).unwrap_err();
    assert!(matches!(err, FunctionalError::Geometry(_)), "{err}");
}

#[test]
fn deep_inner_data_gives_r_near_minus_v() {
    let e = estimate_r(&r_cfg(-50.0), &[4.0, 5.0], 1000, 45, 0, &SolverTolerances::default()).unwrap();
    assert!(e.trace[0].value < e.trace[1].value && e.value < 50.0);
    let (lim, se) = e.extrapolated.unwrap();
    let ratio = lim / 50.0;
    assert!((0.9..=1.1).contains(&ratio), "R/v⁻ = {ratio} ± {}", se / 50.0);
}

#[test]
fn r_is_positive_and_the_ladder_stabilizes() {
    let e = estimate_r(&r_cfg(0.0), &[3.0, 4.0, 5.0], 6000, 46, 0, &SolverTolerances::default()).unwrap();
    assert!(e.ci.lo > 0.0, "{e:?}");
    assert_eq!(e.trace.len(), 3);
    assert_eq!(e.stabilized, Some(true), "{:?}", e.trace);
    assert_eq!((e.inner_n, e.n), (Some(3.0), 5.0));
    assert!(estimate_r(&r_cfg(0.0), &[4.0], 10, 46, 0, &SolverTolerances::default()).unwrap().extrapolated.is_none());
}

#[test]
fn estimates_are_deterministic() {
    let tol = SolverTolerances::default();
    let a = estimate_l(&l_cfg(BoundarySpec::zero()), &[], 300, 47, 3, &tol).unwrap();
    let b = estimate_l(&l_cfg(BoundarySpec::zero()), &[], 300, 47, 3, &tol).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.config_hash, b.config_hash);
}

#[test]
fn r_sequence_defaults() {
    assert_eq!(r_sequence(0.0), 1);
    assert_eq!(r_sequence(3f64.exp() - 1.0), 3);
    assert!((0..100).map(|n| r_sequence(n as f64)).collect::<Vec<_>>().windows(2).all(|w| w[0] <= w[1]));
    assert!(r_sequence(1e9) > 10);
}

#[test]
fn ring_operator_reproduces_harmonic_data() {
    let op = RingOperator::new(2.5, 0.1, &SolverTolerances::default()).unwrap();
    let c = vec![-1.5; op.ring.len()];
    assert!((op.average(&c) + 1.5).abs() < 1e-12);
    assert!(op.oscillation(&c) < 1e-9);
    // x + 2y is harmonic on Z², so its extension into the ball is exact.
    let lin: Vec<f64> = op.ring.points().iter().map(|p| p[0] as f64 + 2.0 * p[1] as f64 + 0.5).collect();
    assert!((op.average(&lin) - 0.5).abs() < 1e-10);
    let r = 2.5f64.exp();
    let osc = op.oscillation(&lin);
    assert!(osc > 2.0 * 5f64.sqrt() * 0.8 * r && osc < 2.0 * 5f64.sqrt() * 1.1 * r, "{osc}");
    assert!(in_e_set(-2.0, 1.0, 9.0, 2.0, 0.1) && !in_e_set(-0.5, 1.0, 9.0, 2.0, 0.1) && !in_e_set(-2.0, 3.0, 9.0, 2.0, 0.1));
}
