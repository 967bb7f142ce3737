use std::fs;
use std::path::Path;

use nhscatter::bath::BathSpec;
use proptest::prelude::*;

fn round_trip(text: &str) {
    let Ok(bath) = BathSpec::from_text(text) else { return };
    let again = BathSpec::from_text(&bath.to_text()).expect("serialized bath parses");
    assert_eq!(again, bath);
    let _ = bath.dispersion(0.3);
}

#[test]
fn fuzz_seeds_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/bath_file");
    let mut parsed = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        if BathSpec::from_text(&text).is_ok() {
            parsed += 1;
        }
        round_trip(&text);
    }
    assert!(parsed >= 3);
}

proptest! {
    #[test]
    fn arbitrary_text_never_panics(text in "(p|q|hop|-?[0-9]|\\.|e|=|,| |\n|#){0,80}") {
        round_trip(&text);
    }

    #[test]
    fn generated_baths_round_trip(hops in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..6)) {
        let mut text = format!("p = 1\nq = {}\n", hops.len() - 2);
        for (i, (re, im)) in hops.iter().enumerate() {
            text += &format!("hop.{} = {re},{im}\n", i as i64 - 1);
        }
        let bath = BathSpec::from_text(&text).unwrap();
        prop_assert_eq!(BathSpec::from_text(&bath.to_text()).unwrap(), bath);
    }
}
