#![no_main]

use libfuzzer_sys::fuzz_target;
use radgauss_harness::SweepSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = SweepSpec::parse(text, "fuzz") {
        assert_eq!(spec.jobs().len(), spec.run_count());
        let mut again = SweepSpec::parse(&spec.to_text(), "fuzz").expect("canonical form parses");
        again.base.outputs = spec.base.outputs.clone();
        assert_eq!(again, spec);
    }
});
