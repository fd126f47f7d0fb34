#![no_main]
use dgff_ballot::drw::DrwGrid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(g) = DrwGrid::from_json(s) {
        let specs = g.specs().expect("validated grid expands");
        assert_eq!(specs.len(), g.t.len() * g.a.len() * g.b.len() * g.decorations.len());
    }
});
