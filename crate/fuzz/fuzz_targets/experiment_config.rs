#![no_main]
use ballot_lab::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(c) = ExperimentConfig::from_json(s) {
        let back = ExperimentConfig::from_json(&c.to_json()).expect("serialized config parses");
        assert_eq!(back.hash(), c.hash());
    }
});
