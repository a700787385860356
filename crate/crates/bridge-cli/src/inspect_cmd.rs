//! The `inspect` subcommand: print per-stage prompts and responses for
//! one recorded example.

use crate::{InspectArgs, EXIT_DATA, EXIT_OK};
use bridge_core::eval::ResultRecord;
use std::io::BufRead;

pub fn execute(args: InspectArgs) -> u8 {
    let file = match std::fs::File::open(&args.results) {
        Ok(file) => file,
        Err(error) => {
            eprintln!("cannot read results {}: {error}", args.results.display());
            return EXIT_DATA;
        }
    };

    let mut found: Option<ResultRecord> = None;
    for line in std::io::BufReader::new(file).lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ResultRecord>(&line) {
            Ok(record) if record.id == args.id => {
                found = Some(record);
                break;
            }
            Ok(_) => {}
            Err(error) => {
                eprintln!("bad results line: {error}");
                return EXIT_DATA;
            }
        }
    }

    let Some(record) = found else {
        eprintln!("id '{}' not found in {}", args.id, args.results.display());
        return EXIT_DATA;
    };
    let Some(traces) = &record.traces else {
        eprintln!("results were written without --traces");
        return EXIT_DATA;
    };

    let stage_filter = args.stage.as_deref();
    println!("id: {}", record.id);
    println!("question: {}", record.question);
    if let Some(prediction) = record.prediction {
        println!("prediction: {prediction}");
    }
    if let Some(failure) = &record.failure {
        println!("failure: {failure}");
    }

    for trace in traces {
        if let Some(filter) = stage_filter {
            if !trace.stage.eq_ignore_ascii_case(filter) {
                continue;
            }
        }
        println!();
        println!(
            "== {} attempt {} (temperature {}) ==",
            trace.stage, trace.attempt, trace.temperature
        );
        println!("-- prompt --");
        println!("{}", trace.prompt);
        println!("-- response --");
        println!("{}", trace.raw_response);
    }
    EXIT_OK
}
