#![no_main]
use dgff_ballot::ContinuumDomain;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(d) = ContinuumDomain::from_json(s) {
        let back = ContinuumDomain::from_json(&d.to_json()).expect("serialized domain parses");
        assert_eq!(back.to_json(), d.to_json());
        let _ = d.contains([0.0, 0.0]);
        let _ = d.bounding_annulus();
    }
});
