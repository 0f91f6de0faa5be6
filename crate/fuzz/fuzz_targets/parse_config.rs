#![no_main]

use libfuzzer_sys::fuzz_target;
use wgsqz_cli::config::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            let again = parse_config(&cfg.emit()).expect("emitted configuration parses");
            assert_eq!(again, cfg);
        }
    }
});
