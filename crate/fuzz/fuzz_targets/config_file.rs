#![no_main]

use hofbutter::butterfly::{ButterflyConfig, ConfigFile};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = ConfigFile::parse(text) else { return };
    let mut config = ButterflyConfig::default();
    if file.apply(&mut config).is_ok() {
        assert!(config.validate().is_ok());
        assert_eq!(config.hash().len(), 64);
    }
});
