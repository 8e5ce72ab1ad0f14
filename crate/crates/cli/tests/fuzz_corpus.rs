//! Replays the fuzz seed corpora through the same invariants as the fuzz targets.

use std::path::PathBuf;

use fracball_cli::config::CampaignConfig;
use fracball_cli::report::Report;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let bytes = std::fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn config_seeds_round_trip() {
    let mut accepted = 0;
    for (path, bytes) in seeds("config_parse") {
        let Ok(text) = std::str::from_utf8(&bytes) else {
            continue;
        };
        if let Ok(cfg) = CampaignConfig::parse(text) {
            accepted += 1;
            let again = CampaignConfig::parse(&cfg.to_text())
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(again, cfg, "{}", path.display());
        }
    }
    assert!(accepted >= 3);
}

#[test]
fn report_seeds_round_trip() {
    let mut accepted = 0;
    for (path, bytes) in seeds("report_decode") {
        if let Ok(report) = Report::decode(&bytes) {
            accepted += 1;
            let encoded = report.encode();
            let again =
                Report::decode(&encoded).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(again.encode(), encoded, "{}", path.display());
        }
    }
    assert!(accepted >= 3);
}
