#![no_main]
use dgff_ballot::solver::SolverTolerances;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(t) = SolverTolerances::from_json(s) {
        let back = SolverTolerances::from_json(&t.to_json()).expect("serialized tolerances parse");
        assert_eq!(back.to_json(), t.to_json());
    }
});
