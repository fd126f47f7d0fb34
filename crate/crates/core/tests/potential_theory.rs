use dgff_ballot::harmonic::*;
use dgff_ballot::lattice::{annulus_domain, discretize, norm, DiscreteDomain, LatticeSet, Point};
use dgff_ballot::potential::{self, kernel, potential_asymptotic, potential_kernel, C0, C4, G};
use dgff_ballot::solver::SolverTolerances;
use dgff_ballot::{ContinuumDomain, Shape};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;
use std::f64::consts::PI;

/// Solves `(Pa − a) = δ₀` on the box `max(|x₁|,|x₂|) < 200` with the
/// expansion as boundary data, independently of the crate's solver.
fn box_oracle() -> impl Fn(Point) -> f64 {
    const H: i32 = 200;
    let w = (2 * H - 1) as usize;
    let idx = move |p: Point| ((p[1] + H - 1) as usize) * w + (p[0] + H - 1) as usize;
    let inside = |p: Point| p[0].abs() < H && p[1].abs() < H;
    let n = w * w;
    let mut t = Vec::with_capacity(5 * n);
    let mut b = vec![0.0; n];
    for y in -(H - 1)..H {
        for x in -(H - 1)..H {
            let i = idx([x, y]);
            t.push(Triplet::new(i, i, 4.0));
            if x == 0 && y == 0 {
                b[i] -= 4.0;
            }
            for d in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
                let q = [x + d[0], y + d[1]];
                if inside(q) {
                    t.push(Triplet::new(i, idx(q), -1.0));
                } else {
                    b[i] += potential_asymptotic(q);
                }
            }
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &t).unwrap();
    let llt = a.sp_cholesky(Side::Lower).unwrap();
    llt.solve_in_place(faer::MatMut::from_column_major_slice_mut(&mut b, n, 1));
    move |p| b[idx(p)]
}

#[test]
fn box_oracle_recovers_classical_values() {
    let a = box_oracle();
    assert!(a([0, 0]).abs() < 1e-5);
    assert!((a([1, 0]) - 1.0).abs() < 1e-5);
    assert!((a([1, 1]) - 4.0 / PI).abs() < 1e-5);
    for p in [[1, 0], [1, 1], [3, 2], [10, 0], [25, 17], [60, 60]] {
        assert!((a(p) - potential_kernel(p)).abs() < 1e-5, "{p:?}");
    }
}

#[test]
fn frozen_constants_match_refit() {
    let (c0, c4) = kernel().fit_constants(100.0, 200.0);
    assert!((c0 - C0).abs() < 1e-12, "c0 refit {c0}");
    assert!((c4 - C4).abs() < 1e-9, "c4 refit {c4}");
    let euler_gamma = 0.577_215_664_901_532_9_f64;
    assert!((C0 - (2.0 * euler_gamma + 8f64.ln()) / PI).abs() < 1e-7);
    assert!((C4 + 1.0 / (6.0 * PI)).abs() < 1e-4);
    assert!((G - 2.0 / PI).abs() < 1e-16);
}

#[test]
fn overlap_ring_agreement() {
    assert!(kernel().overlap_error(100.0) <= 1e-6);
    // Continuity across R0 along an axis and a diagonal.
    for p in [[200, 0], [141, 141]] {
        let q = [p[0] + 1, p[1]];
        let lap_jump = (potential_kernel(q) - potential_kernel(p)) - (potential::potential_integral(q) - potential::potential_integral(p));
        assert!(lap_jump.abs() < 1e-8);
    }
}

#[test]
fn kernel_symmetry() {
    for p in [[3, 7], [-12, 5], [150, -40], [250, 13]] {
        let v = potential_kernel(p);
        for q in [[p[1], p[0]], [-p[0], p[1]], [p[0], -p[1]], [-p[1], -p[0]]] {
            assert_eq!(potential_kernel(q), v);
        }
    }
}

#[test]
fn csv_dump_has_header_and_rows() {
    let k = potential::PotentialKernel::new(4);
    let mut out = Vec::new();
    k.write_csv(&mut out).unwrap();
    let s = String::from_utf8(out).unwrap();
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("x1,x2,a"));
    assert!(lines.count() >= 10);
}

fn test_domains() -> Vec<DiscreteDomain> {
    let b = ContinuumDomain::unit_disk();
    let mut v = vec![
        DiscreteDomain::from_points(vec![[0, 0]]),
        DiscreteDomain::from_points(vec![[0, 0], [1, 0]]),
        DiscreteDomain::from_points(vec![[0, 0], [1, 0], [1, 1], [2, 1], [2, 2]]),
        discretize(&b, 1.0).unwrap(),
        discretize(&b, 2.0).unwrap(),
        discretize(&b, 3.0).unwrap(),
        annulus_domain(&b, 2.5, &b, 0.0).unwrap(),
        annulus_domain(&b, 3.0, &b, 1.0).unwrap(),
    ];
    let lens = ContinuumDomain::new(Shape::disk([-0.4, 0.0], 1.0).intersect(Shape::disk([0.4, 0.0], 1.0))).unwrap();
    v.push(discretize(&lens, 2.5).unwrap());
    let slit = ContinuumDomain::new(Shape::unit_disk().intersect(Shape::disk([0.6, 0.0], 0.3).complement())).unwrap();
    v.push(discretize(&slit, 3.0).unwrap());
    let pts: Vec<Point> = (0..30).map(|i| [i, 0]).collect();
    v.push(DiscreteDomain::from_points(pts));
    v
}

#[test]
fn green_solve_matches_kernel_formula() {
    let tol = SolverTolerances::default();
    let mut count = 0;
    for d in test_domains() {
        assert!(d.len() <= 2000);
        let g = GreenOperator::new(&d, &tol).unwrap();
        let solver = g.solver().clone();
        let pts = d.points();
        let picks = [0, pts.len() / 3, pts.len() / 2, pts.len() - 1];
        for &i in &picks {
            let x = pts[i];
            let pk = poisson_kernel_with(&solver, x).unwrap();
            assert!((pk.total() - 1.0).abs() < 1e-10);
            assert!(pk.mass.iter().all(|m| *m >= -1e-15));
            for &j in &picks {
                let y = pts[j];
                let a = g.green(x, y).unwrap();
                let b = green_formula(&pk, x, y);
                assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()), "{x:?} {y:?}: {a} vs {b}");
                assert!((a - g.green(y, x).unwrap()).abs() < 1e-12);
                assert!(a >= 0.0);
            }
        }
        count += 1;
    }
    assert!(count >= 10);
}

#[test]
fn hitting_mass_splits_evenly_at_middle_scale() {
    let b = ContinuumDomain::unit_disk();
    let d = annulus_domain(&b, 2.0, &b, 0.0).unwrap();
    let x = [3, 0];
    let pk = poisson_kernel(&d, x).unwrap();
    let b2 = LatticeSet::scaled(&b, 2.0).unwrap();
    let outer: f64 = pk.support.iter().zip(&pk.mass).filter(|(z, _)| !b2.contains(**z)).map(|(_, m)| m).sum();
    assert!((outer - 0.5).abs() < 0.5 / 2.0 + 0.1, "{outer}");
    let adjoint = hitting_column(&dgff_ballot::solver::LaplaceSolver::new(&d, &SolverTolerances::default()).unwrap(), pk.support[0]).unwrap();
    assert!((adjoint[d.index_of(x).unwrap()] - pk.mass[0]).abs() < 1e-13);
}

#[test]
fn ruin_examples() {
    let b = ContinuumDomain::unit_disk();
    let tol = SolverTolerances::default();
    let f = ruin_field(&b, 6.0, &b, 0.0, &tol).unwrap();
    let x = [3f64.exp().round() as i32, 0];
    let val = f.at(x).unwrap();
    assert!((val - 0.5).abs() < 1.0 / 6.0, "{val}");
    // Monotone in |x| along the positive axis.
    let mut prev = 0.0;
    for r in 2..(6f64.exp() as i32 - 1) {
        if let Some(v) = f.at([r, 0]) {
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }
    // One step from the outer boundary already exits with probability ≥ 1/4.
    let edge = f.domain.points().iter().copied().find(|p| f.domain.outer_boundary().contains([p[0] + 1, p[1]]) && norm(*p) > 100.0).unwrap();
    assert!(f.at(edge).unwrap() >= 0.25);
    assert!(ruin_probability(&b, 1.0, &b, 1.0, [0, 0]).is_err());
}

#[test]
fn equilibrium_measure_matches_far_start() {
    let tol = SolverTolerances::default();
    let hole = DiscreteDomain::from_points(vec![[0, 0], [1, 0], [2, 0], [2, 1], [0, 1]]);
    let exact = poisson_kernel_at_infinity(&hole).unwrap();
    assert!((exact.total() - 1.0).abs() < 1e-12);
    assert!(exact.mass.iter().all(|m| *m > 0.0));
    let (rich, err) = far_start_richardson(&hole, 3.0, 64, &tol).unwrap();
    assert!(rich.tv_distance(&exact) < 3.0 * err + 1e-3, "tv {} err {err}", rich.tv_distance(&exact));
    // Doubling the start radius shrinks the distance to the limit by about half.
    let rk = hole.max_norm();
    let h1 = far_start_kernel(&hole, rk * 10.0, 64, &tol).unwrap();
    let h2 = far_start_kernel(&hole, rk * 20.0, 64, &tol).unwrap();
    let (d1, d2) = (h1.tv_distance(&exact), h2.tv_distance(&exact));
    assert!(d2 <= 0.75 * d1 + 1e-6, "{d1} {d2}");
    assert!(h1.tv_distance(&h2) <= 2.0 * rk / (rk * 10.0) + 1e-3);
}

#[test]
fn harmonic_extension_on_circle() {
    let b = ContinuumDomain::unit_disk();
    let a = discretize(&b, 1.0).unwrap().outer_boundary();
    let ext = HarmonicExtension::new(&a, |p| p[0] as f64).unwrap();
    assert!(ext.eval([0, 0]).abs() < 1e-12);
    let (lo, hi) = ext.min_max();
    for p in [[0, 0], [1, 1], [5, 2], [-40, 7], [300, 0]] {
        let v = ext.eval(p);
        assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        if !a.contains(p) {
            assert!(ext.laplacian_at(p).abs() <= 1e-9);
        }
    }
    assert!(ext.at_infinity().abs() < 1e-12);
    let bumped = HarmonicExtension::new(&a, |p| (p[0] as f64) + if p[1] > 0 { 1.0 } else { 0.0 }).unwrap();
    let v = bumped.at_infinity();
    assert!(v > lo && v < hi + 1.0);
    let (far, err) = bumped.at_infinity_far_start(2.5, 64, &SolverTolerances::default()).unwrap();
    assert!((far - v).abs() <= 3.0 * err + 1e-3, "{far} vs {v} (err {err})");
}

#[test]
fn infinity_start_requires_cofinite_domain() {
    let b = ContinuumDomain::unit_disk();
    let bounded = LatticeSet::scaled(&b, 1.0).unwrap();
    let e = poisson_kernel_set(&bounded, Start::Infinity, &SolverTolerances::default()).unwrap_err();
    assert_eq!(e.to_string(), "infinity start invalid");
    let outside = LatticeSet::scaled(&b.complement(), 1.0).unwrap();
    let pk = poisson_kernel_set(&outside, Start::Infinity, &SolverTolerances::default()).unwrap();
    assert!((pk.total() - 1.0).abs() < 1e-10);
}
