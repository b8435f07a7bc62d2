// SPDX-License-Identifier: Apache-2.0

//! Writes the 200-frame synthetic fixture: `make_fixture <dir> [seed]`.

use std::path::PathBuf;
use std::process::ExitCode;

fn main() -> ExitCode {
    let mut args = std::env::args().skip(1);
    let Some(dir) = args.next().map(PathBuf::from) else {
        eprintln!("usage: make_fixture <dir> [seed]");
        return ExitCode::from(1);
    };
    let seed = match args.next().map(|s| s.parse::<u64>()) {
        None => 7,
        Some(Ok(s)) => s,
        Some(Err(_)) => {
            eprintln!("seed must be an unsigned integer");
            return ExitCode::from(1);
        }
    };
    match ethopipe_core::synth::write_fixture(&dir, seed) {
        Ok(fx) => {
            println!("fixture written to {}", fx.root.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
