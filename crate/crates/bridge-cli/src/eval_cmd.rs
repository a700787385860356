//! The `eval` subcommand: score a results file against its dataset.

use crate::{EvalArgs, EXIT_DATA, EXIT_OK};
use bridge_core::datasets::{load, DatasetTag};
use bridge_core::eval::{evaluate, ResultRecord};
use std::io::BufRead;

pub fn execute(args: EvalArgs) -> u8 {
    let format: DatasetTag = match args.format.parse() {
        Ok(tag) => tag,
        Err(message) => {
            eprintln!("eval error: {message}");
            return EXIT_DATA;
        }
    };

    let records = match read_records(&args.results) {
        Ok(records) => records,
        Err(message) => {
            eprintln!("eval error: {message}");
            return EXIT_DATA;
        }
    };
    if records.is_empty() {
        eprintln!("eval error: results file is empty");
        return EXIT_DATA;
    }

    let mut examples = match load(&args.dataset, format, None) {
        Ok(examples) => examples,
        Err(error) => {
            eprintln!("dataset error: {error}");
            return EXIT_DATA;
        }
    };
    // A limited run is a prefix of the dataset; id checks catch the rest.
    if examples.len() > records.len() {
        examples.truncate(records.len());
    }

    let report = match evaluate(&records, &examples) {
        Ok(report) => report,
        Err(error) => {
            eprintln!("alignment error: {error}");
            return EXIT_DATA;
        }
    };

    print!("{}", report.render_table());

    let report_path = args.report.unwrap_or_else(|| {
        let mut path = args.results.as_os_str().to_owned();
        path.push(".report.json");
        path.into()
    });
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(error) = std::fs::write(&report_path, json + "\n") {
        eprintln!("cannot write report: {error}");
        return EXIT_DATA;
    }
    eprintln!("report written to {}", report_path.display());
    EXIT_OK
}

fn read_records(path: &std::path::Path) -> Result<Vec<ResultRecord>, String> {
    let file = std::fs::File::open(path)
        .map_err(|e| format!("cannot read results {}: {e}", path.display()))?;
    let mut records = Vec::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ResultRecord = serde_json::from_str(&line)
            .map_err(|e| format!("bad results line {}: {e}", idx + 1))?;
        records.push(record);
    }
    Ok(records)
}
