//! Law JSON in any of the three forms: parse, round trip, and convert
//! without panicking.

#![no_main]

use infdiv::canonical_forms::{Form, Law};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok(law) = serde_json::from_str::<Law>(data) else { return };
    let text = serde_json::to_string(&law).unwrap();
    let back: Law = serde_json::from_str(&text).unwrap();
    assert_eq!(back, law);

    let _ = law.log_cf(1.0);
    for form in [Form::Lk, Form::Kolmogorov, Form::Levy] {
        let _ = law.convert(form);
    }
});
