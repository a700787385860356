//! The `solve` subcommand: strict parse, solve, print bindings or the
//! unsolvable reason. Exit 0 solvable, 1 unsolvable, 2 parse error.

use crate::{SolveArgs, EXIT_CONFIG, EXIT_OK, EXIT_UNSOLVABLE};
use bridge_core::equation::{free_variables, parse_system, ParseMode};
use bridge_core::solver::{solve, value_of, RootPolicy, SolveOutcome};
use std::io::Read;

pub fn execute(args: SolveArgs) -> u8 {
    let text = match read_input(&args) {
        Ok(text) => text,
        Err(message) => {
            eprintln!("{message}");
            return EXIT_CONFIG;
        }
    };

    let parsed = match parse_system(&text, ParseMode::Strict) {
        Ok(parsed) => parsed,
        Err(error) => {
            eprintln!("parse error: {error}");
            return EXIT_CONFIG;
        }
    };

    let system = parsed.system;
    let outcome = solve(&system);
    let policy = RootPolicy::NonnegativeFirst;

    match &outcome {
        SolveOutcome::Unique(bindings) => {
            for name in free_variables(&system) {
                if let Some(value) = bindings.get(&name) {
                    println!("{name} = {value}");
                }
            }
            EXIT_OK
        }
        SolveOutcome::MultipleRoots {
            target, candidates, ..
        } => {
            let listed: Vec<String> = candidates.iter().map(|c| c.to_string()).collect();
            println!("{target} in {{{}}}", listed.join(", "));
            if let Some(value) = value_of(&outcome, &args.target, policy) {
                println!("{} = {} (root policy: {policy})", args.target, value);
            }
            if candidates.is_empty() {
                EXIT_UNSOLVABLE
            } else {
                EXIT_OK
            }
        }
        SolveOutcome::Unsolvable(reason) => {
            println!("{reason}");
            EXIT_UNSOLVABLE
        }
    }
}

fn read_input(args: &SolveArgs) -> Result<String, String> {
    match &args.equations {
        Some(path) if path.as_os_str() != "-" => std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display())),
        _ => {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| format!("cannot read stdin: {e}"))?;
            Ok(text)
        }
    }
}
