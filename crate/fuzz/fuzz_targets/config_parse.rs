#![no_main]

use libfuzzer_sys::fuzz_target;
use nsp_stab::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_json(text) {
        // an accepted config survives its own echo
        let echo = serde_json::to_string(&cfg).expect("serializable");
        assert_eq!(RunConfig::from_json(&echo).expect("echo parses"), cfg);
    }
});
