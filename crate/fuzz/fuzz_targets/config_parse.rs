#![no_main]

use fracball_cli::config::CampaignConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(cfg) = CampaignConfig::parse(data) {
        let text = cfg.to_text();
        let again = CampaignConfig::parse(&text).expect("canonical text parses");
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
    }
});
