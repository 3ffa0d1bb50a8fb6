#![no_main]

use ibmap::Dataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    // Accepted input must survive a write/parse round trip unchanged.
    if let Ok(d) = Dataset::parse_csv(text) {
        let again = Dataset::parse_csv(&d.to_csv_string()).expect("own output parses");
        assert_eq!(again, d);
    }
});
