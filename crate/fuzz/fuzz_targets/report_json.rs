#![no_main]
use libfuzzer_sys::fuzz_target;
use ricci_lab::inequalities::{read_reports, write_reports};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(reports) = read_reports(text) {
        let back = read_reports(&write_reports(&reports)).expect("written reports read back");
        assert_eq!(back.len(), reports.len());
    }
});
