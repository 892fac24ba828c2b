use std::process::ExitCode;

use clap::Parser;
use idt_lab::{emit::to_stable_json, run, Args, SEED_ENV};

fn main() -> ExitCode {
    let args = Args::parse();
    let env_seed = std::env::var(SEED_ENV).ok();
    match run(&args, env_seed.as_deref()) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            let msg = to_stable_json(&e.report()).unwrap_or_else(|_| format!("{{\"error\": \"{}\"}}\n", e.kind()));
            eprint!("{msg}");
            ExitCode::from(1)
        }
    }
}
