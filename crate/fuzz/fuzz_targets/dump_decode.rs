#![no_main]
use libfuzzer_sys::fuzz_target;
use ricci_lab::frame_sde::dump::PathDump;

fuzz_target!(|data: &[u8]| {
    if let Ok(dump) = PathDump::decode(data) {
        assert_eq!(dump.encode(), data);
    }
});
