//! `dfa` — command-line front end of the Dynamic Frame Aloha laboratory.
//!
//! All behavior lives in [`dfa_core::cli`]; this wrapper only forwards the
//! exit code (0: all runs terminated, 1: some run hit the frame cap,
//! 2: usage or configuration error).

fn main() {
    std::process::exit(dfa_core::cli::run());
}
