#![no_main]
use libfuzzer_sys::fuzz_target;

// Rejecting malformed lines is fine; panicking is not.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = div2vec::io::parse_edge_list(text, "fuzz");
    }
});
