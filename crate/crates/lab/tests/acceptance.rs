//! Criterion suite: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit on
//! any failure. Run with `cargo test -p ballot-lab --test acceptance`; pass
//! criterion numbers as arguments to run a subset.

use ballot_lab::campaigns::{self, kernels};
use ballot_lab::{ExperimentConfig, ResultRecord};
use dgff_ballot::concentric::{drw_assumption_diagnostics, Decomposition, Direction};
use dgff_ballot::drw::{appc_row, ballot_prob, classic_f_trace, sample_walk, DrwSpec, Horizon};
use dgff_ballot::gff::{build_model, AnnulusSpec, BoundarySpec, GffModel, GibbsMarkov};
use dgff_ballot::lattice::{DiscreteDomain, NEIGHBORS};
use dgff_ballot::potential::{kernel, potential_integral};
use dgff_ballot::seeds::StreamId;
use dgff_ballot::solver::SolverTolerances;
use dgff_ballot::stats::{CrossMoments, MeanVar};
use dgff_ballot::ContinuumDomain;
use serde_json::Value;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

type Check = Result<(bool, String), Box<dyn std::error::Error>>;

fn config(v: Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&v.to_string()).expect("acceptance config")
}

fn square(r: i32) -> DiscreteDomain {
    DiscreteDomain::from_points((-r..=r).flat_map(|x| (-r..=r).map(move |y| [x, y])).collect())
}

/// `G_D` by Gauss–Jordan on `I − P`, independent of the sparse factorization.
fn dense_green(d: &DiscreteDomain) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut a = vec![vec![0.0f64; 2 * n]; n];
    for (i, p) in d.points().iter().enumerate() {
        a[i][i] = 1.0;
        a[i][n + i] = 1.0;
        for e in NEIGHBORS {
            if let Some(j) = d.index_of([p[0] + e[0], p[1] + e[1]]) {
                a[i][j] -= 0.25;
            }
        }
    }
    for c in 0..n {
        let piv = (c..n).max_by(|x, y| a[*x][c].abs().total_cmp(&a[*y][c].abs())).unwrap();
        a.swap(c, piv);
        let inv = 1.0 / a[c][c];
        a[c].iter_mut().for_each(|v| *v *= inv);
        let pivot = a[c].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != c && row[c] != 0.0 {
                let f = row[c];
                row.iter_mut().zip(&pivot).for_each(|(d, s)| *d -= f * s);
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

/// `n = 8`, `k = 0`, `U = e^{-2.8} B`, `ε = e^{-2.95}`: `T = 2`, about 10⁵ sites.
fn g8() -> AnnulusSpec {
    let u = ContinuumDomain::unit_disk().scaled(-2.8).unwrap();
    AnnulusSpec { u, n: 8.0, v: ContinuumDomain::unit_disk(), k: 0.0, eta: 0.008, zeta: 0.9, eps: (-2.95f64).exp() }
}

fn potential_green() -> Check {
    let tol = SolverTolerances::default();
    let e10 = (potential_integral([1, 0]) - 1.0).abs();
    let e11 = (potential_integral([1, 1]) - 4.0 / PI).abs();
    let table = (kernel().eval([1, 0]) - 1.0).abs().max((kernel().eval([1, 1]) - 4.0 / PI).abs());
    let domains = kernels::green_domains();
    let mut worst: f64 = 0.0;
    for d in &domains {
        assert!(d.len() <= 2000);
        worst = worst.max(kernels::green_discrepancy(d, &tol)?);
    }
    let ok = e10 <= 1e-5 && e11 <= 1e-5 && table <= 1e-5 && worst <= 1e-5 && domains.len() >= 10;
    Ok((ok, format!("|a(1,0)-1| = {e10:.1e}, |a(1,1)-4/pi| = {e11:.1e}, table {table:.1e}; Green max rel {worst:.1e} on {} domains", domains.len())))
}

fn ruin() -> Check {
    let tol = SolverTolerances::default();
    let mut devs = Vec::new();
    for gap in 3..=8 {
        let (d, method) = kernels::ruin_deviation(0.0, gap as f64, &tol)?;
        devs.push((gap, d, method));
    }
    let first = devs[0].1;
    let ok = devs.iter().all(|d| (d.1 - first).abs() <= 0.25 * first);
    let trace: Vec<String> = devs.iter().map(|(g, d, m)| format!("{g}:{d:.4}({m})")).collect();
    Ok((ok, format!("dev*(n-k) = {}", trace.join(" "))))
}

fn sampler_law() -> Check {
    let tol = SolverTolerances::default();
    let one = GffModel::zero_boundary(&DiscreteDomain::from_points(vec![[0, 0]]), &tol)?;
    let xs = one.map_centered(3, 0, 0..100_000, |_, h| h[0])?;
    let var = MeanVar::from_slice(&xs).variance();
    let z1 = (var - 1.0).abs() / (2.0f64 / xs.len() as f64).sqrt();
    let d = square(3);
    let g = dense_green(&d);
    let m = GffModel::zero_boundary(&d, &tol)?;
    let n = d.len();
    let parts = m.map_centered_batches(3, 1, 0..100_000, |_, block, k| {
        let mut c = CrossMoments::new(vec![0.0; n], vec![0.0; n]);
        block.chunks(n).take(k).for_each(|col| c.push(col, col));
        c
    })?;
    let mut cm = CrossMoments::new(vec![0.0; n], vec![0.0; n]);
    parts.iter().for_each(|p| cm.merge(p));
    let z2 = cm.max_z(|i, j| g[i][j]);
    Ok((z1 < 3.0 && z2 < 4.0, format!("singleton var {var:.4} (z = {z1:.2}); |D| = {n} covariance max z = {z2:.2}")))
}

fn gibbs_markov() -> Check {
    let tol = SolverTolerances::default();
    let (d, sub) = (square(6), square(3));
    let gsub = dense_green(&sub);
    let m = GffModel::zero_boundary(&d, &tol)?;
    let gm = GibbsMarkov::new(&m, &sub, &tol)?;
    let (n, ns) = (d.len(), sub.len());
    let on_sub: Vec<usize> = sub.points().iter().map(|p| d.index_of(*p).unwrap()).collect();
    let parts = m.map_centered_batches(4, 0, 0..100_000, |_, block, k| {
        let mut res = CrossMoments::new(vec![0.0; ns], vec![0.0; ns]);
        let mut cross = CrossMoments::new(vec![0.0; ns], vec![0.0; ns]);
        let mut full = CrossMoments::new(vec![0.0; n], vec![0.0; ns]);
        for h in block.chunks(n).take(k) {
            let (phi, r) = gm.split(&m, h).expect("split");
            let phi_sub: Vec<f64> = on_sub.iter().map(|i| phi[*i]).collect();
            res.push(&r, &r);
            cross.push(&phi_sub, &r);
            full.push(&phi, &r);
        }
        (res, cross, full)
    })?;
    let mut res = CrossMoments::new(vec![0.0; ns], vec![0.0; ns]);
    let mut cross = CrossMoments::new(vec![0.0; ns], vec![0.0; ns]);
    let mut full = CrossMoments::new(vec![0.0; n], vec![0.0; ns]);
    for (a, b, c) in &parts {
        res.merge(a);
        cross.merge(b);
        full.merge(c);
    }
    let (zr, zc, zf) = (res.max_z(|i, j| gsub[i][j]), cross.max_z(|_, _| 0.0), full.max_z(|_, _| 0.0));
    Ok((
        zr < 4.0 && zc < 4.0,
        format!("|D| = {n}, |D'| = {ns}: residual max z = {zr:.2}, cross on D' max z = {zc:.2} (over all of D: {zf:.2}, {} entries)", n * ns),
    ))
}

fn concentric_identities() -> Check {
    let tol = SolverTolerances::default();
    let spec = g8();
    let (model, data) = build_model(&spec, &BoundarySpec::zero(), &BoundarySpec::zero(), &tol)?;
    let mut parts = Vec::new();
    for (i, dir) in [Direction::Inward, Direction::Outward].into_iter().enumerate() {
        let d = Decomposition::new(&spec, dir, &tol)?;
        let b = d.drw_builder(&model, &data)?;
        let rs = b.run(5, i as u64, 0..10_000)?;
        let recon = rs.iter().map(|r| r.reconstruction_error).fold(0.0, f64::max);
        let bad = rs.iter().filter(|r| !r.correspondence(1e-9).iter().all(|ok| *ok)).count();
        parts.push((dir, d.t, recon, bad));
    }
    let ok = parts.iter().all(|p| p.2 <= 1e-9 && p.3 == 0);
    let txt: Vec<String> = parts.iter().map(|(d, t, e, b)| format!("{d:?} T={t}: max recon {e:.1e}, {b} violations")).collect();
    Ok((ok, format!("{} sites, 10^4 samples each; {}", model.domain().len(), txt.join("; "))))
}

fn bridge_law() -> Check {
    let tol = SolverTolerances::default();
    let spec = g8();
    let (model, data) = build_model(&spec, &BoundarySpec::zero(), &BoundarySpec::zero(), &tol)?;
    let d = Decomposition::new(&spec, Direction::Inward, &tol)?;
    let b = d.drw_builder(&model, &data)?;
    let rs = b.run(6, 0, 0..5000)?;
    let z_dec = drw_assumption_diagnostics(&d, &b.s, &rs).bridge_max_z;

    let walk = DrwSpec::gaussian(Horizon::Finite(20), 0.0, 0.0);
    let means: Vec<f64> = (0..=20).map(|k| walk.mean(k)).collect();
    let mut cm = CrossMoments::new(means.clone(), means);
    for t in 0..100_000 {
        let s = sample_walk(&walk, StreamId::new(6, 1, t))?.s;
        cm.push(&s, &s);
    }
    let st = walk.cumulative_variance()[20];
    let mut z_syn: f64 = 0.0;
    for p in 1..20 {
        for q in p..20 {
            let exact = p as f64 * (st - q as f64) / st;
            z_syn = z_syn.max((cm.estimate(p, q) - exact).abs() / cm.std_error(p, q));
        }
    }
    Ok((z_dec < 4.0 && z_syn < 4.0, format!("decomposition T={} max z = {z_dec:.2}; synthetic T=20 max z = {z_syn:.2}", d.t)))
}

fn annulus_bounds() -> Check {
    let cfg = config(serde_json::json!({
        "kind": "appb", "gaps": [4, 6, 8], "width": null, "k": 0,
        "u_data": [{"kind": "constant", "value": 0}, {"kind": "constant", "value": -2}, {"kind": "constant", "value": 1.5}],
        "v_data": [{"kind": "constant", "value": 0}, {"kind": "constant", "value": -1}]
    }));
    let s = campaigns::run(&cfg)?.summary;
    let ok = s["sigma_bounded"] == true && s["mean_bounded"] == true && s["band_violations"] == 0 && s["geometry_ok"] == true;
    Ok((ok, format!("sigma dev {}, mean excess {}, band {}/{} violations", s["sigma_dev"], s["mean_excess"], s["band_violations"], s["band_points"])))
}

fn drw_asymptotics() -> Check {
    let b = -(400f64.powf(0.3));
    let row = appc_row(&DrwSpec::gaussian(Horizon::Finite(400), -3.0, b), 20, 1_000_000, 8, 0)?;
    let ratio_ok = (0.8..=1.25).contains(&row.ratio);
    let p = ballot_prob(&DrwSpec::gaussian(Horizon::Finite(100), -5.0, -5.0), 1_000_000, None, 8, 1)?;
    let exact = 1.0 - (-2.0 * 25.0 / 100.0f64).exp();
    let half = (p.ci.hi - p.ci.lo) / 2.0;
    let cont_ok = (p.estimate - exact).abs() <= half + 0.02;
    Ok((
        ratio_ok && cont_ok,
        format!("T=400 ratio {:.4} (P {:.4}, ell {:.3}); T=100 a=b=-5: P {:.4} +- {half:.4} vs reflection {exact:.4}", row.ratio, row.p, row.ell, p.estimate),
    ))
}

fn f_asymptotics() -> Check {
    let trace = classic_f_trace(-20.0, &[250, 500, 1000, 2000, 4000], 50_000, 9, 0)?;
    let last = trace.last().unwrap().1.mean / 20.0;
    let txt: Vec<String> = trace.iter().map(|(r, e)| format!("r={r}:{:.3}", e.mean / 20.0)).collect();
    Ok(((0.9..=1.1).contains(&last), format!("F(-20)/20 trace {}", txt.join(" "))))
}

fn ratio_trend() -> Check {
    let tol = SolverTolerances::default();
    let sites: Vec<(f64, f64)> = [6.0, 8.0, 10.0].iter().map(|g| (*g, PI * (f64::exp(*g) + 1.0).powi(2))).collect();
    // Per-sample cost on a lattice that fits: the g8 geometry.
    let model = build_model(&g8(), &BoundarySpec::zero(), &BoundarySpec::zero(), &tol)?.0;
    let start = Instant::now();
    model.map_centered(10, 0, 0..64, |_, h| h[0])?;
    let per_site = start.elapsed().as_secs_f64() / 64.0 / model.domain().len() as f64;
    let days = sites.iter().map(|(_, n)| n * per_site * 1e5).sum::<f64>() / 86_400.0;
    let desk = config(serde_json::json!({"kind": "thm11", "gaps": [3, 4, 5], "width": null, "eps": 0.5, "trials": 4000, "r_ladder": [3, 4, 5]}));
    let s = campaigns::run(&desk)?.summary;
    let rho: Vec<String> = s["points"].as_array().unwrap().iter().map(|p| format!("{}:{:.3}", p["gap"], p["rho"].as_f64().unwrap_or(f64::NAN))).collect();
    let sz: Vec<String> = sites.iter().map(|(g, n)| format!("{g}:{n:.1e}")).collect();
    Ok((
        false,
        format!(
            "infeasible: U=V=B needs sites {} and >= {days:.0} days at 1e5 trials (linear cost, {:.1e} s/site/sample); desk trace at n-k=3,4,5 (eps=1/2): rho {}",
            sz.join(" "),
            per_site,
            rho.join(" ")
        ),
    ))
}

fn bound_stability() -> Check {
    let data = |xs: &[f64]| xs.iter().map(|x| serde_json::json!({"kind": "constant", "value": x})).collect::<Vec<_>>();
    let cfg = config(serde_json::json!({
        "kind": "thm23", "gaps": [6, 7, 8, 9, 10, 11, 12], "width": 5, "eps": (-7f64).exp(), "trials": 1500,
        "u_data": data(&[0.0, -2.0, 1.5, 3.0]), "v_data": data(&[0.0, -2.0])
    }));
    let s = campaigns::run(&cfg)?.summary;
    let ratios: Vec<String> = s["c_ratios"].as_array().unwrap().iter().map(|r| format!("{:.2}", r.as_f64().unwrap())).collect();
    let c: Vec<String> = s["fits"].as_array().unwrap().iter().map(|f| format!("{:.3}", f["c_upper"].as_f64().unwrap())).collect();
    let ok = s["c_ratio_ok"] == true && s["decay_sign_ok"] == true;
    Ok((ok, format!("C {} ratios {}; decay sign ok {}; min c {}", c.join(" "), ratios.join(" "), s["decay_sign_ok"], s["c_lower_min"])))
}

fn repulsion() -> Check {
    let cfg = config(serde_json::json!({"kind": "repulsion", "gaps": [10], "trials": 4000}));
    let s = campaigns::run(&cfg)?.summary;
    let r = &s["rungs"][0];
    let (c, u) = (r["median_conditional"].as_f64(), r["median_unconditional"].as_f64().unwrap());
    let ok = c.is_some_and(|c| c < 0.0 && c < u);
    Ok((ok, format!("conditional median {c:?} vs unconditional {u:.3}; accepted {}/{}", r["accepted"], r["trials"])))
}

fn timeless(rs: &[ResultRecord]) -> Vec<ResultRecord> {
    rs.iter().map(|r| r.timeless()).collect()
}

fn reproducibility() -> Check {
    let c = |v: f64| serde_json::json!({"kind": "constant", "value": v});
    let cfgs = [
        serde_json::json!({"kind": "thm11", "gaps": [3], "width": null, "eps": 0.5, "trials": 500, "r_ladder": [3, 4]}),
        serde_json::json!({"kind": "thm23", "gaps": [3, 4], "width": null, "eps": 0.5, "trials": 300, "u_data": [c(0.0), c(2.0)], "v_data": [c(-1.0)]}),
        serde_json::json!({"kind": "appb", "gaps": [3, 4], "width": null}),
        serde_json::json!({"kind": "repulsion", "gaps": [5], "width": null, "trials": 400, "u_data": [c(-3.0)], "v_data": [c(-3.0)]}),
        serde_json::json!({"kind": "stitch", "gaps": [4], "width": null, "trials": 200, "inner_draws": 4, "u_data": [c(-3.0)], "v_data": [c(-3.0)]}),
        serde_json::json!({"kind": "drw", "trials": 5000, "drw": {"T": [50, 100], "a": [-2], "b": [-4], "delta": 0.1,
            "decorations": [{"kind": "zero"}, {"kind": "weibull", "scale": 0.5, "exponent": 1.0, "shift": 0.0}]}}),
        serde_json::json!({"kind": "kernels", "gaps": [3, 4], "width": null}),
    ];
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
    let eight = rayon::ThreadPoolBuilder::new().num_threads(8).build()?;
    let mut bad = Vec::new();
    for v in cfgs {
        let cfg = config(v);
        let a = one.install(|| campaigns::run(&cfg))?;
        let b = eight.install(|| campaigns::run(&cfg))?;
        let c = eight.install(|| campaigns::run(&cfg))?;
        let same = |x: &campaigns::CampaignOutput, y: &campaigns::CampaignOutput| timeless(&x.records) == timeless(&y.records) && x.summary == y.summary;
        if !(same(&a, &b) && same(&b, &c)) {
            bad.push(cfg.kind.name());
        }
    }
    Ok((bad.is_empty(), if bad.is_empty() { "7 campaigns identical across reruns and 1 vs 8 threads (wall time excluded)".into() } else { format!("differs: {bad:?}") }))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 13] = [
        ("potential/Green exactness", potential_green),
        ("ruin estimate", ruin),
        ("sampler law", sampler_law),
        ("Gibbs-Markov split", gibbs_markov),
        ("concentric/DRW identities", concentric_identities),
        ("bridge law", bridge_law),
        ("annulus variance and mean bounds", annulus_bounds),
        ("DRW ballot asymptotics", drw_asymptotics),
        ("F(w) asymptotics", f_asymptotics),
        ("ballot ratio trend", ratio_trend),
        ("bound constant stability", bound_stability),
        ("entropic repulsion", repulsion),
        ("reproducibility", reproducibility),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!ok);
        println!("[{}] {:>2} {name}: {detail} ({:.1} s)", if ok { "PASS" } else { "FAIL" }, i + 1, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
