#![no_main]

use libfuzzer_sys::fuzz_target;
use nhscatter::bath::BathSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(bath) = BathSpec::from_text(text) else { return };
    let again = BathSpec::from_text(&bath.to_text()).expect("serialized bath parses");
    assert_eq!(again, bath);
    let _ = bath.dispersion(0.3);
});
