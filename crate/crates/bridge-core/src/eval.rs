//! Scoring and analysis: exact match under relative tolerance, the
//! equation-usage classifier, and the aggregate report.

use crate::datasets::Example;
use crate::equation::{parse_system, EquationSystem, Expr, ParseMode};
use crate::pipeline::{PipelineResult, StageTrace};
use crate::prompts::Stage;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Relative tolerance of the exact-match metric.
pub const EM_RELATIVE_TOLERANCE: f64 = 1e-3;

/// The metric comparator: |prediction - gold| / |gold| < 1e-3, with an
/// absolute fallback when gold is zero (the relative rule would divide by
/// zero there).
pub fn relative_match(prediction: f64, gold: f64) -> bool {
    if gold == 0.0 {
        prediction.abs() < EM_RELATIVE_TOLERANCE
    } else {
        ((prediction - gold) / gold).abs() < EM_RELATIVE_TOLERANCE
    }
}

/// Exact match: absent predictions never match.
pub fn exact_match(prediction: Option<f64>, gold: f64) -> bool {
    match prediction {
        Some(p) if p.is_finite() => relative_match(p, gold),
        _ => false,
    }
}

/// False iff the system is program-shaped: the equations admit an order in
/// which every equation assigns a bare variable from already-defined
/// variables. True means something needs simultaneous solving.
pub fn uses_equations(system: &EquationSystem) -> bool {
    let mut defined: HashSet<String> = HashSet::new();
    let mut remaining: Vec<&crate::equation::Equation> = system.equations.iter().collect();

    // Greedy is complete here: the defined set only grows, so an
    // assignment that is ever placeable stays placeable.
    loop {
        let placeable = remaining.iter().position(|eq| {
            if !matches!(&eq.lhs, Expr::Variable(_)) {
                return false;
            }
            let mut rhs_vars = Vec::new();
            let mut seen = HashSet::new();
            eq.rhs.collect_variables(&mut rhs_vars, &mut seen);
            rhs_vars.iter().all(|v| defined.contains(v))
        });
        match placeable {
            Some(idx) => {
                let eq = remaining.remove(idx);
                if let Expr::Variable(name) = &eq.lhs {
                    defined.insert(name.clone());
                }
            }
            None => break,
        }
    }
    !remaining.is_empty()
}

/// One line of a results file; the JSON shape written by the run command
/// and read back by eval and inspect.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: String,
    pub question: String,
    pub erased: String,
    pub sub_questions: Vec<String>,
    /// Translate-stage system, canonically formatted.
    pub equations: String,
    /// Final solved system when the answer stage succeeded.
    pub answer_equations: Option<String>,
    pub prediction: Option<f64>,
    pub failure: Option<String>,
    pub parse_skips: usize,
    /// Root-selection policy the prediction was extracted under.
    #[serde(default)]
    pub root_policy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<Vec<TraceRecord>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub stage: String,
    pub attempt: u32,
    pub temperature: f64,
    pub prompt: String,
    pub raw_response: String,
}

impl From<&StageTrace> for TraceRecord {
    fn from(trace: &StageTrace) -> TraceRecord {
        TraceRecord {
            stage: trace.stage.name().to_string(),
            attempt: trace.attempt,
            temperature: trace.temperature,
            prompt: trace.prompt.clone(),
            raw_response: trace.raw_response.clone(),
        }
    }
}

impl ResultRecord {
    pub fn from_result(
        id: &str,
        result: &PipelineResult,
        root_policy: crate::solver::RootPolicy,
        with_traces: bool,
    ) -> ResultRecord {
        ResultRecord {
            id: id.to_string(),
            question: result.question.clone(),
            erased: result.erased.clone(),
            sub_questions: result.sub_questions.clone(),
            equations: crate::equation::format_system(&result.translated),
            answer_equations: result
                .answer_system
                .as_ref()
                .map(crate::equation::format_system),
            prediction: result.prediction,
            failure: result.failure.as_ref().map(|f| f.to_string()),
            parse_skips: result.parse_skips,
            root_policy: root_policy.to_string(),
            traces: with_traces.then(|| result.traces.iter().map(TraceRecord::from).collect()),
        }
    }

    /// The system the analysis counters run on: the final answered system,
    /// falling back to the translate output when the answer stage failed.
    fn analysis_system(&self) -> Option<EquationSystem> {
        let text = self.answer_equations.as_deref().unwrap_or(&self.equations);
        parse_system(text, ParseMode::Lenient)
            .ok()
            .map(|p| p.system)
    }

    /// Equation count of the final system; 0 when absent.
    fn final_equation_count(&self) -> usize {
        match &self.answer_equations {
            Some(text) => text.lines().filter(|l| !l.trim().is_empty()).count(),
            None => 0,
        }
    }

    pub fn answer_trace_temperatures(&self) -> Vec<f64> {
        self.traces
            .as_ref()
            .map(|traces| {
                traces
                    .iter()
                    .filter(|t| t.stage == Stage::Answer.name())
                    .map(|t| t.temperature)
                    .collect()
            })
            .unwrap_or_default()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("results and dataset lengths differ: {results} vs {golds}")]
    LengthMismatch { results: usize, golds: usize },
    #[error("id mismatch at position {position}: result '{result_id}' vs gold '{gold_id}'")]
    IdMismatch {
        position: usize,
        result_id: String,
        gold_id: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerExample {
    pub id: String,
    pub prediction: Option<f64>,
    pub gold: f64,
    pub correct: bool,
    pub used_equations: bool,
    pub n_equations: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Usage {
    pub correct_with_equations: usize,
    pub total_with_equations: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Bucket {
    pub n: usize,
    pub em: f64,
}

/// Difficulty buckets keyed by answer-equation count.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StepBuckets {
    #[serde(rename = "≤4")]
    pub le4: Bucket,
    #[serde(rename = "5-6")]
    pub mid: Bucket,
    #[serde(rename = "≥7")]
    pub ge7: Bucket,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    /// How the usage counters were computed.
    pub usage_basis: String,
    pub n_total: usize,
    pub n_correct: usize,
    pub em: f64,
    pub usage: Usage,
    pub step_buckets: StepBuckets,
    pub unsupported_nonlinear_count: usize,
    pub parse_skip_count: usize,
    pub per_example: Vec<PerExample>,
}

/// Score aligned (results, golds) pairs into a report.
pub fn evaluate(records: &[ResultRecord], golds: &[Example]) -> Result<EvalReport, EvalError> {
    if records.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            results: records.len(),
            golds: golds.len(),
        });
    }
    for (position, (record, gold)) in records.iter().zip(golds).enumerate() {
        if record.id != gold.id {
            return Err(EvalError::IdMismatch {
                position,
                result_id: record.id.clone(),
                gold_id: gold.id.clone(),
            });
        }
    }

    let mut per_example = Vec::with_capacity(records.len());
    let mut usage = Usage::default();
    let mut buckets = [(0usize, 0usize); 3]; // (n, correct) for <=4, 5-6, >=7
    let mut unsupported_nonlinear_count = 0;
    let mut parse_skip_count = 0;

    for (record, gold) in records.iter().zip(golds) {
        let gold_value = gold.gold.to_f64();
        let correct = exact_match(record.prediction, gold_value);
        let used = record
            .analysis_system()
            .map(|s| uses_equations(&s))
            .unwrap_or(false);
        let n_equations = record.final_equation_count();

        if used {
            usage.total_with_equations += 1;
            if correct {
                usage.correct_with_equations += 1;
            }
        }
        let bucket = match n_equations {
            0..=4 => 0,
            5..=6 => 1,
            _ => 2,
        };
        buckets[bucket].0 += 1;
        if correct {
            buckets[bucket].1 += 1;
        }
        if record
            .failure
            .as_deref()
            .is_some_and(|f| f.contains("unsupported_nonlinear"))
        {
            unsupported_nonlinear_count += 1;
        }
        parse_skip_count += record.parse_skips;

        per_example.push(PerExample {
            id: record.id.clone(),
            prediction: record.prediction,
            gold: gold_value,
            correct,
            used_equations: used,
            n_equations,
            failure: record.failure.clone(),
        });
    }

    let n_total = per_example.len();
    let n_correct = per_example.iter().filter(|e| e.correct).count();
    let bucket = |i: usize| Bucket {
        n: buckets[i].0,
        em: if buckets[i].0 == 0 {
            0.0
        } else {
            buckets[i].1 as f64 / buckets[i].0 as f64
        },
    };

    Ok(EvalReport {
        usage_basis: "final answered system; translate output when the answer stage failed"
            .to_string(),
        n_total,
        n_correct,
        em: if n_total == 0 {
            0.0
        } else {
            n_correct as f64 / n_total as f64
        },
        usage,
        step_buckets: StepBuckets {
            le4: bucket(0),
            mid: bucket(1),
            ge7: bucket(2),
        },
        unsupported_nonlinear_count,
        parse_skip_count,
        per_example,
    })
}

impl EvalReport {
    /// Aligned plain-text table for terminal output.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "exact match        {:>6.4}  ({} / {})\n",
            self.em, self.n_correct, self.n_total
        ));
        out.push_str(&format!(
            "equation usage     correct {} / total {}\n",
            self.usage.correct_with_equations, self.usage.total_with_equations
        ));
        out.push_str("steps   n     em\n");
        for (label, bucket) in [
            ("≤4", &self.step_buckets.le4),
            ("5-6", &self.step_buckets.mid),
            ("≥7", &self.step_buckets.ge7),
        ] {
            out.push_str(&format!("{label:<6}{:>4}  {:>6.4}\n", bucket.n, bucket.em));
        }
        out.push_str(&format!(
            "unsupported nonlinear {}   parse skips {}\n",
            self.unsupported_nonlinear_count, self.parse_skip_count
        ));
        out
    }
}
