#![no_main]

use libfuzzer_sys::fuzz_target;
use nhscatter_cli::config::{Command, ConfigMap, RunConfig};

const COMMANDS: [Command; 5] = [Command::Spectrum, Command::State, Command::Bound, Command::Scaling, Command::Verify];

fuzz_target!(|data: &[u8]| {
    let Some((&first, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let Ok(mut map) = ConfigMap::parse(text, "fuzz", None) else { return };
    // keep the target hermetic: no reads from arbitrary paths
    map.entries.remove("model.bath_file");
    let command = COMMANDS[first as usize % COMMANDS.len()];
    if let Err(e) = RunConfig::from_map(command, &map) {
        assert_eq!(e.exit_code(), 2, "config errors are input errors: {e}");
    }
});
