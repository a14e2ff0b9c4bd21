#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(measure) = truncmom::problem::parse_measure(text) else { return };
    // a parsed measure must serialize and re-parse cleanly
    let rendered = truncmom::problem::write_measure(&measure);
    let again = truncmom::problem::parse_measure(&rendered).expect("round trip");
    assert_eq!(again.len(), measure.len());
});
