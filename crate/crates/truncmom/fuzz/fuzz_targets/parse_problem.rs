#![no_main]

use libfuzzer_sys::fuzz_target;

// The whole ingestion path behind the CLI: parse, validate the truncation and
// the moment table, and when a sequence comes out, build the moment matrix.
// None of it may panic or hang on arbitrary bytes.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = truncmom::problem::parse_problem(text) else { return };
    let Ok(sequence) = doc.to_sequence() else { return };
    let _ = sequence.gram_matrix();
    let _ = sequence.necessary_conditions(1e-9);
});
