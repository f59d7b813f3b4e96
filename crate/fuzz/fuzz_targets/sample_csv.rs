#![no_main]

use libfuzzer_sys::fuzz_target;
use radgauss::SampleSet;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(z) = SampleSet::parse_csv(text) {
        // whatever parses must survive a write/read cycle unchanged
        let again = SampleSet::parse_csv(&z.to_csv_string(&[])).expect("own output parses");
        assert_eq!(z, again);
    }
});
