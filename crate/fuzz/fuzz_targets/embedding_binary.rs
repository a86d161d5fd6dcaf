#![no_main]
use libfuzzer_sys::fuzz_target;

// Header-driven allocations must stay bounded by the input length.
fuzz_target!(|data: &[u8]| {
    let _ = div2vec::io::decode_embedding_binary(data);
});
