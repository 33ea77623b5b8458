#![no_main]
use libfuzzer_sys::fuzz_target;
use ricci_lab::cli_report::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = ExperimentConfig::parse(text) else { return };
    // Validation may reject, but must not panic.
    let _ = config.validate();
    let again = ExperimentConfig::parse(&config.canonical_json()).expect("canonical JSON parses");
    assert_eq!(again.hash(), config.hash());
});
