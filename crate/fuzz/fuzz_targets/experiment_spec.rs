#![no_main]

use libfuzzer_sys::fuzz_target;
use radgauss_harness::ExperimentSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = ExperimentSpec::parse(text, "fuzz") {
        let _ = spec.validate();
        let again = ExperimentSpec::parse(&spec.to_text(), "fuzz").expect("canonical form parses");
        assert_eq!(again, ExperimentSpec { outputs: None, ..spec });
    }
});
