//! Fuzzes the run-config JSON parser: no panics on arbitrary input, and any
//! accepted config must survive a serialize/reparse round trip unchanged.
//! Accepted configs must also build their vector field without panicking.

#![no_main]

use jetlag::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = RunConfig::from_json(text) else {
        return;
    };
    let echoed = cfg.to_json();
    let again = RunConfig::from_json(&echoed)
        .unwrap_or_else(|e| panic!("echo failed to reparse: {e}"));
    assert_eq!(cfg, again, "config echo round trip changed the config");
    // building the field may fail (bad expressions) but must not panic
    let _ = cfg.build_field();
});
