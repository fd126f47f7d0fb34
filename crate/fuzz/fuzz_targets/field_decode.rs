#![no_main]
use dgff_ballot::field_io::{decode, encode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = decode(data) {
        let again = decode(&encode(&f.points, &f.values, f.stream())).expect("re-encoded file decodes");
        assert_eq!(again.points, f.points);
        assert_eq!(again.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), f.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
});
