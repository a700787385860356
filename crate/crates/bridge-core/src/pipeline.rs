//! Four-stage pipeline: erase the asking part, decompose into
//! sub-questions, translate to equations, then generate the `ans` equation
//! under a solvability-checked retry loop with rising temperature.

use crate::client::{Backend, ClientError, CompletionRequest};
use crate::equation::{
    format_system, free_variables, parse_system, EquationSystem, Expr, ParseError, ParseMode,
};
use crate::eval::relative_match;
use crate::prompts::{
    answer_query, clean_response, decompose_query, erase_query, translate_query, Stage, TemplateSet,
};
use crate::solver::{solve, value_of, RootPolicy, SolveOutcome, UnsolvableReason};
use serde::Serialize;
use std::sync::Arc;

/// Temperature used when the whole translation is regenerated after the
/// answer loop exhausts its retries.
const RETRANSLATE_TEMPERATURE: f64 = 0.3;
/// Sampling temperature for the translate stage in voting mode.
const VOTING_TEMPERATURE: f64 = 0.7;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub model: String,
    pub retry_limit: u32,
    pub temperature_step: f64,
    pub shots: usize,
    pub self_consistency_k: u32,
    pub retranslate_passes: u32,
    pub root_policy: RootPolicy,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            model: "gpt-3.5-turbo".to_string(),
            retry_limit: 5,
            temperature_step: 0.1,
            shots: 8,
            self_consistency_k: 1,
            retranslate_passes: 1,
            root_policy: RootPolicy::NonnegativeFirst,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ConfigError {
    #[error("retry_limit must be at least 1")]
    RetryLimit,
    #[error("shots must be within 2..=8 and the shipped templates ({max} available), got {got}")]
    Shots { got: usize, max: usize },
}

/// Audit record of one backend call.
#[derive(Debug, Clone, Serialize)]
pub struct StageTrace {
    pub stage: Stage,
    pub attempt: u32,
    pub temperature: f64,
    pub prompt: String,
    pub raw_response: String,
}

/// Machine-readable classification of a client error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClientFailureKind {
    ReplayMiss,
    Network,
    Provider,
    ScriptExhausted,
    InvalidRequest,
    Io,
}

impl From<&ClientError> for ClientFailureKind {
    fn from(error: &ClientError) -> ClientFailureKind {
        match error {
            ClientError::ReplayMiss(_) => ClientFailureKind::ReplayMiss,
            ClientError::Network(_) => ClientFailureKind::Network,
            ClientError::Provider { .. } => ClientFailureKind::Provider,
            ClientError::ScriptExhausted => ClientFailureKind::ScriptExhausted,
            ClientError::InvalidRequest(_) => ClientFailureKind::InvalidRequest,
            ClientError::Io(_) => ClientFailureKind::Io,
        }
    }
}

impl std::fmt::Display for ClientFailureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ClientFailureKind::ReplayMiss => "replay_miss",
            ClientFailureKind::Network => "network",
            ClientFailureKind::Provider => "provider",
            ClientFailureKind::ScriptExhausted => "script_exhausted",
            ClientFailureKind::InvalidRequest => "invalid_request",
            ClientFailureKind::Io => "io",
        };
        f.write_str(name)
    }
}

/// Why an answer attempt was rejected and retried.
#[derive(Debug, Clone, PartialEq)]
pub enum AnswerRejection {
    Unparseable,
    MissingAnsEquation,
    ForbiddenOperator,
    TargetMissing,
    WrongRootVariable,
    Unsolvable(UnsolvableReason),
}

impl std::fmt::Display for AnswerRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AnswerRejection::Unparseable => write!(f, "unparseable"),
            AnswerRejection::MissingAnsEquation => write!(f, "missing_ans_equation"),
            AnswerRejection::ForbiddenOperator => write!(f, "forbidden_operator"),
            AnswerRejection::TargetMissing => write!(f, "target_missing"),
            AnswerRejection::WrongRootVariable => write!(f, "wrong_root_variable"),
            AnswerRejection::Unsolvable(reason) => write!(f, "unsolvable({reason})"),
        }
    }
}

/// Terminal failure of a question.
#[derive(Debug, Clone)]
pub enum Failure {
    Client {
        kind: ClientFailureKind,
        message: String,
    },
    EmptyResponse(Stage),
    EmptyTranslation,
    RetriesExhausted {
        last_rejection: Option<AnswerRejection>,
    },
    AllVotesFailed,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Client { kind, message } => write!(f, "client_error({kind}): {message}"),
            Failure::EmptyResponse(stage) => write!(f, "empty_response({stage})"),
            Failure::EmptyTranslation => write!(f, "empty_translation"),
            Failure::RetriesExhausted { last_rejection } => match last_rejection {
                Some(rejection) => write!(f, "retries_exhausted(last: {rejection})"),
                None => write!(f, "retries_exhausted"),
            },
            Failure::AllVotesFailed => write!(f, "all_votes_failed"),
        }
    }
}

/// Everything recorded for one question.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub question: String,
    pub erased: String,
    pub sub_questions: Vec<String>,
    pub translated: EquationSystem,
    pub answer_system: Option<EquationSystem>,
    pub prediction: Option<f64>,
    pub traces: Vec<StageTrace>,
    pub failure: Option<Failure>,
    /// Non-blank lines dropped while parsing translate/answer responses.
    pub parse_skips: usize,
}

impl PipelineResult {
    fn empty(question: &str) -> PipelineResult {
        PipelineResult {
            question: question.to_string(),
            erased: String::new(),
            sub_questions: Vec::new(),
            translated: EquationSystem::default(),
            answer_system: None,
            prediction: None,
            traces: Vec::new(),
            failure: None,
            parse_skips: 0,
        }
    }
}

/// Error from a single stage call, before it is folded into a
/// [`Failure`] on the per-question record.
#[derive(Debug)]
pub enum StageError {
    Client(ClientError),
    EmptyResponse(Stage),
    EmptyTranslation,
}

impl StageError {
    fn into_failure(self) -> Failure {
        match self {
            StageError::Client(error) => Failure::Client {
                kind: (&error).into(),
                message: error.to_string(),
            },
            StageError::EmptyResponse(stage) => Failure::EmptyResponse(stage),
            StageError::EmptyTranslation => Failure::EmptyTranslation,
        }
    }
}

pub struct Pipeline {
    backend: Arc<dyn Backend>,
    templates: TemplateSet,
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(backend: Arc<dyn Backend>, config: PipelineConfig) -> Result<Pipeline, ConfigError> {
        let templates = TemplateSet::builtin();
        if config.retry_limit < 1 {
            return Err(ConfigError::RetryLimit);
        }
        let max = templates.max_shots();
        if config.shots < 2 || config.shots > 8 || config.shots > max {
            return Err(ConfigError::Shots {
                got: config.shots,
                max,
            });
        }
        Ok(Pipeline {
            backend,
            templates,
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// One backend call for `stage`; the raw response lands in `traces`,
    /// the cleaned response is returned.
    fn call_stage(
        &self,
        stage: Stage,
        query: &str,
        temperature: f64,
        attempt: u32,
        traces: &mut Vec<StageTrace>,
    ) -> Result<String, StageError> {
        let template = self.templates.for_stage(stage);
        let prompt = template
            .build_prompt(self.config.shots, query)
            .expect("shot count validated in Pipeline::new");
        let request = CompletionRequest::new(&self.config.model, &prompt, temperature)
            .with_stops(template.stop_sequences());
        let response = self
            .backend
            .complete(&request)
            .map_err(StageError::Client)?;
        traces.push(StageTrace {
            stage,
            attempt,
            temperature,
            prompt,
            raw_response: response.text.clone(),
        });
        Ok(clean_response(stage, &response.text))
    }

    /// Erase stage: remove the asking part. Deterministic (temperature 0).
    pub fn erase(
        &self,
        question: &str,
        traces: &mut Vec<StageTrace>,
    ) -> Result<String, StageError> {
        let text = self.call_stage(Stage::Erase, &erase_query(question), 0.0, 1, traces)?;
        if text.is_empty() {
            return Err(StageError::EmptyResponse(Stage::Erase));
        }
        Ok(text)
    }

    /// Decompose stage: one sub-question per response line.
    pub fn decompose(
        &self,
        erased: &str,
        traces: &mut Vec<StageTrace>,
    ) -> Result<Vec<String>, StageError> {
        let text = self.call_stage(Stage::Decompose, &decompose_query(erased), 0.0, 1, traces)?;
        let subs: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        if subs.is_empty() {
            return Err(StageError::EmptyResponse(Stage::Decompose));
        }
        Ok(subs)
    }

    /// Translate stage: erased text plus sub-questions in, lenient-parsed
    /// equation system out.
    pub fn translate(
        &self,
        erased: &str,
        sub_questions: &[String],
        temperature: f64,
        attempt: u32,
        traces: &mut Vec<StageTrace>,
        parse_skips: &mut usize,
    ) -> Result<EquationSystem, StageError> {
        let text = self.call_stage(
            Stage::Translate,
            &translate_query(erased, sub_questions),
            temperature,
            attempt,
            traces,
        )?;
        match parse_system(&text, ParseMode::Lenient) {
            Ok(parsed) => {
                *parse_skips += parsed.content_skips();
                Ok(parsed.system)
            }
            Err(ParseError::EmptySystem) => Err(StageError::EmptyTranslation),
            Err(_) => Err(StageError::EmptyTranslation),
        }
    }

    /// Validate an answer-stage block: it must define the bare unknown
    /// `ans` using only the four arithmetic operators and parentheses.
    fn check_answer_block(parsed: &EquationSystem) -> Result<(), AnswerRejection> {
        let ans = Expr::var("ans");
        let defining: Vec<_> = parsed.equations.iter().filter(|eq| eq.lhs == ans).collect();
        if defining.is_empty() {
            return Err(AnswerRejection::MissingAnsEquation);
        }
        if defining.iter().any(|eq| eq.rhs.contains_pow()) {
            return Err(AnswerRejection::ForbiddenOperator);
        }
        Ok(())
    }

    fn check_solvable(final_system: &EquationSystem) -> Result<(), AnswerRejection> {
        if !free_variables(final_system).iter().any(|v| v == "ans") {
            return Err(AnswerRejection::TargetMissing);
        }
        match solve(final_system) {
            SolveOutcome::Unique(_) => Ok(()),
            SolveOutcome::MultipleRoots {
                target, candidates, ..
            } => {
                if target == "ans" && !candidates.is_empty() {
                    Ok(())
                } else {
                    Err(AnswerRejection::WrongRootVariable)
                }
            }
            SolveOutcome::Unsolvable(reason) => Err(AnswerRejection::Unsolvable(reason)),
        }
    }

    /// Answer-stage retry loop. Temperatures run 0, step, 2*step, ...
    /// within each invocation; attempts are numbered from
    /// `attempt_offset + 1` so retranslate passes stay consecutive.
    #[allow(clippy::too_many_arguments)]
    fn answer_loop(
        &self,
        question: &str,
        translated: &EquationSystem,
        max_attempts: u32,
        attempt_offset: u32,
        traces: &mut Vec<StageTrace>,
        parse_skips: &mut usize,
        last_rejection: &mut Option<AnswerRejection>,
    ) -> Result<Option<EquationSystem>, StageError> {
        let equations_text = format_system(translated);
        let query = answer_query(question, &equations_text);
        for i in 0..max_attempts {
            let temperature = self.config.temperature_step * i as f64;
            let text = self.call_stage(
                Stage::Answer,
                &query,
                temperature,
                attempt_offset + i + 1,
                traces,
            )?;
            let parsed = match parse_system(&text, ParseMode::Lenient) {
                Ok(parsed) => {
                    *parse_skips += parsed.content_skips();
                    parsed.system
                }
                Err(_) => {
                    *last_rejection = Some(AnswerRejection::Unparseable);
                    continue;
                }
            };
            if let Err(rejection) = Self::check_answer_block(&parsed) {
                *last_rejection = Some(rejection);
                continue;
            }
            let final_system = translated.union(&parsed);
            match Self::check_solvable(&final_system) {
                Ok(()) => return Ok(Some(final_system)),
                Err(rejection) => {
                    *last_rejection = Some(rejection);
                }
            }
        }
        Ok(None)
    }

    /// Public entry to the answer stage: runs the retry loop once, exactly
    /// as the pipeline's first pass does.
    pub fn answer_with_retry(
        &self,
        question: &str,
        translated: &EquationSystem,
        traces: &mut Vec<StageTrace>,
    ) -> Result<Option<EquationSystem>, StageError> {
        let mut skips = 0;
        let mut last = None;
        self.answer_loop(
            question,
            translated,
            self.config.retry_limit,
            0,
            traces,
            &mut skips,
            &mut last,
        )
    }

    fn predict(&self, final_system: &EquationSystem) -> Option<f64> {
        let outcome = solve(final_system);
        value_of(&outcome, "ans", self.config.root_policy).map(|v| v.to_f64())
    }

    /// Single reasoning path: erase, decompose, translate, answer loop,
    /// then up to `retranslate_passes` full re-translations when the
    /// answer loop exhausts. Each retranslate pass spends one call on the
    /// translation and `retry_limit - 1` on answers, so per-question calls
    /// stay within 3 + retry_limit * (1 + retranslate_passes).
    pub fn run(&self, question: &str) -> PipelineResult {
        let mut result = PipelineResult::empty(question);

        macro_rules! stage {
            ($call:expr) => {
                match $call {
                    Ok(value) => value,
                    Err(error) => {
                        result.failure = Some(error.into_failure());
                        return result;
                    }
                }
            };
        }

        result.erased = stage!(self.erase(question, &mut result.traces));
        result.sub_questions = stage!(self.decompose(&result.erased, &mut result.traces));
        result.translated = stage!(self.translate(
            &result.erased,
            &result.sub_questions,
            0.0,
            1,
            &mut result.traces,
            &mut result.parse_skips,
        ));

        let mut last_rejection = None;
        let mut answer = stage!(self.answer_loop(
            question,
            &result.translated,
            self.config.retry_limit,
            0,
            &mut result.traces,
            &mut result.parse_skips,
            &mut last_rejection,
        ));

        if answer.is_none() && self.config.retry_limit > 1 {
            let mut attempt_offset = self.config.retry_limit;
            for pass in 0..self.config.retranslate_passes {
                let retranslated = match self.translate(
                    &result.erased,
                    &result.sub_questions,
                    RETRANSLATE_TEMPERATURE,
                    2 + pass,
                    &mut result.traces,
                    &mut result.parse_skips,
                ) {
                    Ok(system) => system,
                    Err(StageError::EmptyTranslation) => continue,
                    Err(error) => {
                        result.failure = Some(error.into_failure());
                        return result;
                    }
                };
                result.translated = retranslated;
                answer = stage!(self.answer_loop(
                    question,
                    &result.translated,
                    self.config.retry_limit - 1,
                    attempt_offset,
                    &mut result.traces,
                    &mut result.parse_skips,
                    &mut last_rejection,
                ));
                attempt_offset += self.config.retry_limit - 1;
                if answer.is_some() {
                    break;
                }
            }
        }

        match answer {
            Some(final_system) => {
                result.prediction = self.predict(&final_system);
                result.answer_system = Some(final_system);
                if result.prediction.is_none() {
                    result.failure = Some(Failure::RetriesExhausted {
                        last_rejection: last_rejection.clone(),
                    });
                }
            }
            None => {
                result.failure = Some(Failure::RetriesExhausted {
                    last_rejection: last_rejection.clone(),
                });
            }
        }
        result
    }

    /// Voting mode: erase and decompose once, then sample the translation
    /// k times at temperature 0.7, run the answer loop per sample, and
    /// majority-vote the predictions grouped by the metric's relative
    /// comparator. Ties go to the earliest group.
    pub fn self_consistency(&self, question: &str) -> PipelineResult {
        let k = self.config.self_consistency_k.max(2);
        let mut result = PipelineResult::empty(question);

        macro_rules! stage {
            ($call:expr) => {
                match $call {
                    Ok(value) => value,
                    Err(error) => {
                        result.failure = Some(error.into_failure());
                        return result;
                    }
                }
            };
        }

        result.erased = stage!(self.erase(question, &mut result.traces));
        result.sub_questions = stage!(self.decompose(&result.erased, &mut result.traces));

        struct Path {
            translated: EquationSystem,
            answer_system: Option<EquationSystem>,
            prediction: Option<f64>,
        }

        let answer_attempts_so_far = |traces: &[StageTrace]| {
            traces.iter().filter(|t| t.stage == Stage::Answer).count() as u32
        };

        let mut paths: Vec<Path> = Vec::with_capacity(k as usize);
        for i in 0..k {
            let translated = match self.translate(
                &result.erased,
                &result.sub_questions,
                VOTING_TEMPERATURE,
                i + 1,
                &mut result.traces,
                &mut result.parse_skips,
            ) {
                Ok(system) => system,
                Err(StageError::EmptyTranslation) => {
                    paths.push(Path {
                        translated: EquationSystem::default(),
                        answer_system: None,
                        prediction: None,
                    });
                    continue;
                }
                Err(error) => {
                    result.failure = Some(error.into_failure());
                    return result;
                }
            };
            let mut last_rejection = None;
            let offset = answer_attempts_so_far(&result.traces);
            let answer = stage!(self.answer_loop(
                question,
                &translated,
                self.config.retry_limit,
                offset,
                &mut result.traces,
                &mut result.parse_skips,
                &mut last_rejection,
            ));
            let prediction = answer.as_ref().and_then(|system| self.predict(system));
            paths.push(Path {
                translated,
                answer_system: answer,
                prediction,
            });
        }

        // Group by the EM comparator, earliest value as representative.
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (idx, path) in paths.iter().enumerate() {
            let Some(p) = path.prediction else { continue };
            match groups
                .iter_mut()
                .find(|(representative, _)| relative_match(p, *representative))
            {
                Some((_, members)) => members.push(idx),
                None => groups.push((p, vec![idx])),
            }
        }

        let winner = groups
            .iter()
            .enumerate()
            .max_by(|(ia, (_, a)), (ib, (_, b))| {
                a.len().cmp(&b.len()).then(ib.cmp(ia)) // tie: earliest group
            })
            .map(|(_, (_, members))| members[0]);

        match winner {
            Some(idx) => {
                let path = &paths[idx];
                result.translated = path.translated.clone();
                result.answer_system = path.answer_system.clone();
                result.prediction = path.prediction;
            }
            None => {
                result.failure = Some(Failure::AllVotesFailed);
            }
        }
        result
    }

    /// Dispatch on the configured mode: voting when k >= 2.
    pub fn run_question(&self, question: &str) -> PipelineResult {
        if self.config.self_consistency_k >= 2 {
            self.self_consistency(question)
        } else {
            self.run(question)
        }
    }
}
