#![no_main]

use fracball_cli::report::Report;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(report) = Report::decode(data) {
        let bytes = report.encode();
        let again = Report::decode(&bytes).expect("encoded report decodes");
        assert_eq!(again.encode(), bytes);
    }
});
