//! The checked-in fuzz corpus parses the way its file names say.

use ballot_lab::ExperimentConfig;
use dgff_ballot::drw::DrwGrid;
use dgff_ballot::field_io::{decode, encode};
use dgff_ballot::solver::SolverTolerances;
use dgff_ballot::ContinuumDomain;
use std::path::PathBuf;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

fn invalid(name: &str) -> bool {
    ["invalid", "truncated", "empty_union"].contains(&name)
}

#[test]
fn shape_seeds() {
    for (name, b) in seeds("shape_json") {
        assert_eq!(ContinuumDomain::from_json(std::str::from_utf8(&b).unwrap()).is_ok(), !invalid(&name), "{name}");
    }
}

#[test]
fn config_seeds() {
    for (name, b) in seeds("experiment_config") {
        let c = ExperimentConfig::from_json(std::str::from_utf8(&b).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(c.kind.name(), name);
    }
}

#[test]
fn grid_seeds() {
    for (name, b) in seeds("drw_grid") {
        assert!(DrwGrid::from_json(std::str::from_utf8(&b).unwrap()).is_ok(), "{name}");
    }
}

#[test]
fn tolerance_seeds() {
    for (name, b) in seeds("solver_tolerances") {
        assert_eq!(SolverTolerances::from_json(std::str::from_utf8(&b).unwrap()).is_ok(), !invalid(&name), "{name}");
    }
}

#[test]
fn column_file_seeds() {
    for (name, b) in seeds("field_decode") {
        match decode(&b) {
            Ok(f) => {
                assert!(!invalid(&name), "{name}");
                assert_eq!(decode(&encode(&f.points, &f.values, f.stream())).unwrap(), f);
            }
            Err(_) => assert!(invalid(&name), "{name}"),
        }
    }
}
