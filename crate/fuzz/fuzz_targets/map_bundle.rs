#![no_main]

use libfuzzer_sys::fuzz_target;
use radgauss::PushforwardMap;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(map) = PushforwardMap::parse_csv(text) {
        let again = PushforwardMap::parse_csv(&map.to_csv_string(&[])).expect("own output parses");
        assert_eq!(map.kind(), again.kind());
        assert_eq!(map.whitener(), again.whitener());
        assert_eq!(map.knots(), again.knots());
    }
});
