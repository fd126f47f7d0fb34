use ballot_lab::campaigns::{self, appb, kernels};
use ballot_lab::record::{csv_header, read_csv, write_csv};
use ballot_lab::report::{emit_report, plot_script, PlotSpec, Report};
use ballot_lab::{ExperimentConfig, ExperimentKind, ResultRecord};

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

fn small_thm23() -> ExperimentConfig {
    config(r#"{"kind": "thm23", "gaps": [3, 4], "width": null, "eps": 0.5, "trials": 300,
              "u_data": [{"kind": "constant", "value": 0}, {"kind": "constant", "value": -3}, {"kind": "constant", "value": 2}],
              "v_data": [{"kind": "constant", "value": -2}]}"#)
}

fn timeless(rs: &[ResultRecord]) -> Vec<ResultRecord> {
    rs.iter().map(|r| r.timeless()).collect()
}

#[test]
fn csv_round_trips() {
    let out = campaigns::run(&small_thm23()).unwrap();
    let mut buf = Vec::new();
    write_csv(&out.records, &mut buf).unwrap();
    let back = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, out.records);
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("config_hash,campaign,row,master_seed,seed_label,wall_time_s,warnings,"));
}

#[test]
fn every_row_carries_hash_and_seed_label() {
    let cfg = small_thm23();
    let out = campaigns::run(&cfg).unwrap();
    assert_eq!(out.records.len(), 6);
    for (i, r) in out.records.iter().enumerate() {
        assert_eq!(r.config_hash, cfg.hash());
        assert_eq!(r.row, i);
        assert_eq!(r.master_seed, cfg.seed);
        assert!(r.seed_label.starts_with("thm23/gap="), "{}", r.seed_label);
    }
}

#[test]
fn thm23_bounds_and_decay() {
    let out = campaigns::run(&small_thm23()).unwrap();
    let s = &out.summary;
    assert_eq!(s["fits"].as_array().unwrap().len(), 2);
    assert_eq!(s["c_ratios"].as_array().unwrap().len(), 1);
    // Lower data only helps, so the u = -3 row dominates u = 0.
    let p = |u: usize, gap: f64| out.records.iter().find(|r| r.inputs["u"] == u && r.inputs["gap"] == gap).unwrap().get("p").unwrap();
    assert!(p(1, 3.0) > p(0, 3.0));
    assert!(p(0, 3.0) >= p(2, 3.0));
    let d = s["decay"].as_array().unwrap();
    assert_eq!(d.len(), 2);
    assert!(d.iter().all(|x| x["points"].as_array().unwrap().len() == 2));
}

#[test]
fn plot_scripts_only_use_emitted_columns() {
    let out = campaigns::run(&small_thm23()).unwrap();
    let header = csv_header(&out.records);
    let plot = out.plot.clone().unwrap();
    let script = plot_script(&out.records, "t.csv", &plot).unwrap();
    for part in script.split("using ").skip(1) {
        let cols: Vec<usize> = part.split_whitespace().next().unwrap().split(':').map(|c| c.parse().unwrap()).collect();
        assert!(cols.iter().all(|c| *c >= 1 && *c <= header.len()));
    }
    let missing = PlotSpec { x: "in:gap".into(), ys: vec!["est:nope".into()], logscale_y: false };
    assert!(plot_script(&out.records, "t.csv", &missing).is_none());
}

#[test]
fn reports_are_written_and_empty_ones_rejected() {
    let cfg = small_thm23();
    let out = campaigns::run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let e = emit_report(&out.report(&cfg), dir.path(), "r", out.plot.as_ref()).unwrap();
    let back = read_csv(std::fs::File::open(&e.csv).unwrap()).unwrap();
    assert_eq!(back, out.records);
    let json: Report = serde_json::from_str(&std::fs::read_to_string(&e.json).unwrap()).unwrap();
    assert_eq!(json.records, out.records);
    assert!(e.plot.is_some());
    let empty = Report { campaign: "x".into(), config_hash: "h".into(), records: vec![], summary: serde_json::Value::Null, footer: vec![] };
    assert!(emit_report(&empty, dir.path(), "e", None).is_err());
}

#[test]
fn degenerate_rungs_are_flagged_not_dropped() {
    let cfg = config(r#"{"kind": "thm11", "gaps": [2, 3], "width": null, "eps": 0.5, "trials": 200, "r_ladder": [3, 4]}"#);
    let out = campaigns::run(&cfg).unwrap();
    assert_eq!(out.records.len(), 2);
    assert!(out.records[0].flags["degenerate"]);
    assert!(out.records[0].estimates.is_empty());
    assert!(!out.records[1].flags["degenerate"]);
    assert!(out.records[1].get("l").unwrap() > 0.0 && out.records[1].get("r").unwrap() > 0.0);
    assert_eq!(out.summary["skipped"], serde_json::json!([2.0]));
}

#[test]
fn thm11_ratio_propagates_errors() {
    let (rho, se) = ballot_lab::campaigns::thm11::ratio(0.1, 0.01, 2.0, 0.0, 3.0, 0.0, 6.0);
    assert!((rho - 0.1 * dgff_ballot::potential::G * 6.0 / 12.0).abs() < 1e-15);
    assert!((se / rho - 0.1).abs() < 1e-12);
}

#[test]
fn reruns_and_thread_counts_agree() {
    let cfg = small_thm23();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| campaigns::run(&cfg)).unwrap();
    let b = four.install(|| campaigns::run(&cfg)).unwrap();
    let c = campaigns::run(&cfg).unwrap();
    assert_eq!(timeless(&a.records), timeless(&b.records));
    assert_eq!(timeless(&a.records), timeless(&c.records));
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(timeless(&campaigns::run(&other).unwrap().records), timeless(&a.records));
}

#[test]
fn stitch_matches_direct_and_is_reproducible() {
    let cfg = config(r#"{"kind": "stitch", "gaps": [4], "width": null, "trials": 400, "inner_draws": 4,
                        "u_data": [{"kind": "constant", "value": -3}], "v_data": [{"kind": "constant", "value": -3}]}"#);
    let a = campaigns::run(&cfg).unwrap();
    let b = campaigns::run(&cfg).unwrap();
    assert_eq!(timeless(&a.records), timeless(&b.records));
    let s: &serde_json::Value = &a.summary["rungs"][0];
    assert_eq!(s["agree"], true, "{s}");
    assert!(s["direct"].as_f64().unwrap() > 0.05);
}

#[test]
fn bulk_shrinkage_raises_the_two_stage_estimate() {
    let base = r#""kind": "stitch", "gaps": [4], "width": null, "trials": 300, "inner_draws": 4,
                  "u_data": [{"kind": "constant", "value": -2}], "v_data": [{"kind": "constant", "value": -2}]"#;
    let p = |eta: f64| {
        let cfg = config(&format!("{{{base}, \"eta\": {eta}, \"zeta\": {eta}}}"));
        campaigns::run(&cfg).unwrap().summary["rungs"][0]["two_stage"].as_f64().unwrap()
    };
    let (p0, p1) = (p(0.0), p(0.3));
    assert!(p1 >= p0, "{p0} {p1}");
}

#[test]
fn repulsion_outside_probability_decreases_in_m() {
    let cfg = config(r#"{"kind": "repulsion", "gaps": [5], "width": null, "trials": 600, "m_grid": [0.5, 1, 2, 4, 8],
                        "u_data": [{"kind": "constant", "value": -3}], "v_data": [{"kind": "constant", "value": -3}]}"#);
    let out = campaigns::run(&cfg).unwrap();
    let accepted = out.summary["rungs"][0]["accepted"].as_u64().unwrap();
    assert!(accepted >= 100, "{accepted}");
    let q: Vec<f64> = out.summary["rungs"][0]["outside_e"].as_array().unwrap().iter().map(|x| x[1].as_f64().unwrap()).collect();
    assert_eq!(q.len(), 5);
    assert!(q.windows(2).all(|w| w[1] <= w[0]), "{q:?}");
    let rec = &out.records[0];
    assert!(rec.get("median_unconditional").is_some());
    assert!(rec.intervals["median_unconditional"].contains(rec.get("median_unconditional").unwrap()));
}

#[test]
fn appb_small_rungs() {
    let cfg = config(r#"{"kind": "appb", "gaps": [3, 4], "width": null,
                        "u_data": [{"kind": "constant", "value": 0}, {"kind": "constant", "value": -1}]}"#);
    let out = appb::run(&cfg).unwrap();
    let s = &out.summary;
    assert_eq!(s["band_violations"], 0);
    assert_eq!(s["geometry_ok"], true);
    // One sigma row and two mean rows per rung.
    assert_eq!(out.records.len(), 6);
    for r in out.records.iter().filter(|r| r.inputs["what"] == "sigma") {
        assert!(r.get("sigma").unwrap() > 0.0);
    }
    assert!(appb::bounded(&[0.2, 0.24, 0.1]) && !appb::bounded(&[0.2, 0.3]));
    assert!(appb::bounded(&[0.01, 0.06]));
}

#[test]
fn kernel_values_and_green_domains() {
    let cfg = config(r#"{"kind": "kernels", "gaps": [3, 4], "width": null}"#);
    let out = kernels::run(&cfg).unwrap();
    let s = &out.summary;
    assert!(s["a10_error"].as_f64().unwrap() <= 1e-5);
    assert!(s["a11_error"].as_f64().unwrap() <= 1e-5);
    assert!(s["green_domains"].as_u64().unwrap() >= 10);
    assert!(s["green_max_rel"].as_f64().unwrap() <= 1e-5);
    assert!(kernels::green_domains().iter().all(|d| d.len() <= 2000));
}

#[test]
fn drw_campaign_reports_flags() {
    let cfg = config(
        r#"{"kind": "drw", "trials": 4000,
            "drw": {"T": [50], "a": [-2], "b": [-5], "delta": 0.1, "decorations": [{"kind": "zero"}]}}"#,
    );
    let out = campaigns::run(&cfg).unwrap();
    assert_eq!(out.records.len(), 1);
    let r = &out.records[0];
    assert!(r.flags.contains_key("b_below") && r.flags.contains_key("envelope"));
    assert!(r.get("p").unwrap() > 0.0);
}

#[test]
fn kind_mismatch_and_oversized_rungs_are_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"kind": "appb", "gaps": [10], "width": null}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"kind": "appb", "gaps": [10]}"#).is_ok());
    assert_eq!(ExperimentKind::Stitch.name(), "stitch");
}
