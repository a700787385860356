//! The `run` subcommand: pipeline over a dataset with a worker pool,
//! results as one JSON object per line.

use crate::config::{resolve, BackendChoice, RunConfig};
use crate::{RunArgs, EXIT_CONFIG, EXIT_DATA, EXIT_OK, EXIT_REPLAY_MISS};
use bridge_core::client::{
    ApiStyle, Backend, LiveBackend, LiveConfig, RecordBackend, ReplayBackend, ScriptedBackend,
};
use bridge_core::datasets::{load, Example};
use bridge_core::eval::ResultRecord;
use bridge_core::pipeline::{ClientFailureKind, Failure, Pipeline, PipelineResult};
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

pub fn execute(args: RunArgs) -> u8 {
    let config = match resolve(&args) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("config error: {message}");
            return EXIT_CONFIG;
        }
    };

    if args.print_config {
        println!(
            "{}",
            serde_json::to_string_pretty(&config).expect("config serializes")
        );
        return EXIT_OK;
    }

    let backend = match build_backend(&config) {
        Ok(backend) => backend,
        Err(message) => {
            eprintln!("config error: {message}");
            return EXIT_CONFIG;
        }
    };

    let examples = match load(&config.dataset, config.format, config.limit) {
        Ok(examples) => examples,
        Err(error) => {
            eprintln!("dataset error: {error}");
            return EXIT_DATA;
        }
    };
    if examples.is_empty() {
        eprintln!("dataset error: no examples loaded");
        return EXIT_DATA;
    }

    let pipeline = match Pipeline::new(backend, config.pipeline_config()) {
        Ok(pipeline) => pipeline,
        Err(error) => {
            eprintln!("config error: {error}");
            return EXIT_CONFIG;
        }
    };

    let results = run_batch(&pipeline, &examples, config.workers);

    let replay_miss = results.iter().any(|r| {
        matches!(
            r.failure,
            Some(Failure::Client {
                kind: ClientFailureKind::ReplayMiss,
                ..
            })
        )
    });

    if let Err(error) = write_results(&config, &examples, &results) {
        eprintln!("cannot write results: {error}");
        return EXIT_DATA;
    }

    let n_predicted = results.iter().filter(|r| r.prediction.is_some()).count();
    eprintln!(
        "{} examples, {} predictions, results in {}",
        results.len(),
        n_predicted,
        config.out.display()
    );

    if replay_miss {
        eprintln!("replay miss: the cache does not cover this run");
        return EXIT_REPLAY_MISS;
    }
    EXIT_OK
}

fn build_backend(config: &RunConfig) -> Result<Arc<dyn Backend>, String> {
    let live = || -> Result<Box<dyn Backend>, String> {
        let live_config = LiveConfig {
            base_url: config.api_base.clone(),
            api_key: config.api_key.clone(),
            api_style: if config.api_style == "completions" {
                ApiStyle::Completions
            } else {
                ApiStyle::Chat
            },
            jitter_seed: config.seed,
            ..LiveConfig::default()
        };
        Ok(Box::new(
            LiveBackend::new(live_config).map_err(|e| e.to_string())?,
        ))
    };

    match config.backend {
        BackendChoice::Live => Ok(Arc::from(live()?)),
        BackendChoice::Replay => {
            let cache = config.cache.as_ref().expect("validated");
            Ok(Arc::new(
                ReplayBackend::open(cache).map_err(|e| e.to_string())?,
            ))
        }
        BackendChoice::Record => {
            let cache = config.cache.as_ref().expect("validated");
            // Recording over a script file supports offline cache builds.
            let inner: Box<dyn Backend> = match &config.script {
                Some(path) => Box::new(load_script(path)?),
                None => live()?,
            };
            Ok(Arc::new(
                RecordBackend::create(inner, cache).map_err(|e| e.to_string())?,
            ))
        }
        BackendChoice::Scripted => {
            let path = config.script.as_ref().expect("validated");
            Ok(Arc::new(load_script(path)?))
        }
    }
}

/// Script file: one JSON string per line, consumed first-in-first-out.
fn load_script(path: &std::path::Path) -> Result<ScriptedBackend, String> {
    let file = std::fs::File::open(path)
        .map_err(|e| format!("cannot read script {}: {e}", path.display()))?;
    let mut responses = Vec::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let text: String = serde_json::from_str(&line)
            .map_err(|e| format!("script line {} is not a JSON string: {e}", idx + 1))?;
        responses.push(text);
    }
    Ok(ScriptedBackend::new(responses))
}

/// Fixed worker pool over an index counter; each worker writes its own
/// slot, so output order always equals input order.
pub fn run_batch(pipeline: &Pipeline, examples: &[Example], workers: usize) -> Vec<PipelineResult> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<PipelineResult>>> =
        examples.iter().map(|_| Mutex::new(None)).collect();
    let n_workers = workers.max(1).min(examples.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..n_workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= examples.len() {
                    break;
                }
                let result = pipeline.run_question(&examples[index].question);
                *slots[index].lock().unwrap() = Some(result);
            });
        }
    });

    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled slot"))
        .collect()
}

fn write_results(
    config: &RunConfig,
    examples: &[Example],
    results: &[PipelineResult],
) -> std::io::Result<()> {
    if let Some(parent) = config.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(&config.out)?);
    let root_policy = config.pipeline_config().root_policy;
    for (example, result) in examples.iter().zip(results) {
        let record = ResultRecord::from_result(&example.id, result, root_policy, config.traces);
        let line = serde_json::to_string(&record).expect("record serializes");
        file.write_all(line.as_bytes())?;
        file.write_all(b"\n")?;
    }
    file.flush()
}
