#![no_main]

use hofbutter::butterfly::{parse_angle, ExclusionReading};
use hofbutter::chern::ChernMethod;
use hofbutter::diophantine::Strategy;
use hofbutter::magnetic_algebra::Flux;
use hofbutter::verify::Suite;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(f) = s.parse::<Flux>() {
        assert_eq!(f.to_string().parse::<Flux>().unwrap(), f);
        assert_eq!((f.p() as u128 * f.s() as u128) % f.q() as u128, 1 % f.q() as u128);
    }
    if let Ok(v) = parse_angle(s) {
        assert!(v.is_finite());
    }
    let _ = s.parse::<Strategy>();
    let _ = s.parse::<ExclusionReading>();
    let _ = s.parse::<ChernMethod>();
    let _ = s.parse::<Suite>();
});
