//! Measure JSON: malformed input is rejected with an error, and accepted
//! measures survive a serialize/parse round trip unchanged.

#![no_main]

use infdiv::CanonicalMeasure;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok(m) = serde_json::from_str::<CanonicalMeasure>(data) else { return };
    let text = serde_json::to_string(&m).unwrap();
    let back: CanonicalMeasure = serde_json::from_str(&text).unwrap();
    assert_eq!(back, m);

    let total = m.total_mass();
    assert!(total.is_finite() && total >= 0.0);
    let _ = m.cdf(0.0);
    let _ = m.integrate_real(|u| u.cos(), &[]);
});
