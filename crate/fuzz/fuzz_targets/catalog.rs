//! Catalog strings: parsing never panics and accepted entries print back to
//! a string that parses to the same entry.

#![no_main]

use infdiv::canonical_forms::catalog::Catalog;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok(entry) = data.parse::<Catalog>() else { return };
    let again: Catalog = entry.to_string().parse().unwrap();
    assert_eq!(again, entry);
    let _ = entry.exact_log_cf(0.5);
});
