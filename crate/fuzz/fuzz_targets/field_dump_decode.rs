#![no_main]

use libfuzzer_sys::fuzz_target;
use nsp_stab::report::{decode_fields, encode_fields};

fuzz_target!(|data: &[u8]| {
    if let Ok(dump) = decode_fields(data) {
        assert_eq!(encode_fields(&dump).expect("consistent"), data);
    }
});
