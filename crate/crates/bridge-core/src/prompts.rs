//! Few-shot prompt templates for the four stages.
//!
//! Template files are plain UTF-8: an instruction block, then shot blocks,
//! all separated by blank lines. Field headers (`Question:`, `Erased:`,
//! `Paragraph:`, `Decomposed:`, `Equations:`) sit on their own lines. The
//! stage query is appended as a final partial shot that the model
//! completes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    Erase,
    Decompose,
    Translate,
    Answer,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Erase => "Erase",
            Stage::Decompose => "Decompose",
            Stage::Translate => "Translate",
            Stage::Answer => "Answer",
        }
    }

    /// Header that opens a shot; doubles as a stop sequence so a live
    /// model cannot run on into an invented next shot.
    pub fn first_header(&self) -> &'static str {
        match self {
            Stage::Erase | Stage::Answer => "Question:",
            Stage::Decompose | Stage::Translate => "Paragraph:",
        }
    }

    /// Header whose content the model produces.
    pub fn response_header(&self) -> &'static str {
        match self {
            Stage::Erase => "Erased:",
            Stage::Decompose => "Decomposed:",
            Stage::Translate | Stage::Answer => "Equations:",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum TemplateError {
    #[error("template for {0} has no shots")]
    NoShots(Stage),
    #[error("template for {stage} has {available} shots, {requested} requested")]
    NotEnoughShots {
        stage: Stage,
        available: usize,
        requested: usize,
    },
}

/// Parsed template: instruction plus verbatim shot blocks.
#[derive(Debug, Clone)]
pub struct StageTemplate {
    pub stage: Stage,
    pub instruction: String,
    pub shots: Vec<String>,
}

impl StageTemplate {
    pub fn parse(stage: Stage, text: &str) -> Result<StageTemplate, TemplateError> {
        let blocks: Vec<String> = text
            .split("\n\n")
            .map(|b| b.trim_matches('\n').to_string())
            .filter(|b| !b.trim().is_empty())
            .collect();
        if blocks.len() < 2 {
            return Err(TemplateError::NoShots(stage));
        }
        let mut iter = blocks.into_iter();
        let instruction = iter.next().unwrap();
        Ok(StageTemplate {
            stage,
            instruction,
            shots: iter.collect(),
        })
    }

    pub fn shot_count(&self) -> usize {
        self.shots.len()
    }

    /// Instruction, the first `n_shots` shots, then the partial query shot.
    pub fn build_prompt(&self, n_shots: usize, query: &str) -> Result<String, TemplateError> {
        if n_shots > self.shots.len() {
            return Err(TemplateError::NotEnoughShots {
                stage: self.stage,
                available: self.shots.len(),
                requested: n_shots,
            });
        }
        let mut parts = Vec::with_capacity(n_shots + 2);
        parts.push(self.instruction.as_str());
        for shot in &self.shots[..n_shots] {
            parts.push(shot.as_str());
        }
        parts.push(query);
        Ok(parts.join("\n\n"))
    }

    pub fn stop_sequences(&self) -> Vec<String> {
        vec!["\n\n".to_string(), self.stage.first_header().to_string()]
    }
}

/// The four shipped templates.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub erase: StageTemplate,
    pub decompose: StageTemplate,
    pub translate: StageTemplate,
    pub answer: StageTemplate,
}

impl TemplateSet {
    /// Templates compiled into the binary.
    pub fn builtin() -> TemplateSet {
        let parse = |stage, text| {
            StageTemplate::parse(stage, text).expect("builtin templates are well formed")
        };
        TemplateSet {
            erase: parse(Stage::Erase, include_str!("../assets/prompts/erase.txt")),
            decompose: parse(
                Stage::Decompose,
                include_str!("../assets/prompts/decompose.txt"),
            ),
            translate: parse(
                Stage::Translate,
                include_str!("../assets/prompts/translate.txt"),
            ),
            answer: parse(Stage::Answer, include_str!("../assets/prompts/answer.txt")),
        }
    }

    pub fn for_stage(&self, stage: Stage) -> &StageTemplate {
        match stage {
            Stage::Erase => &self.erase,
            Stage::Decompose => &self.decompose,
            Stage::Translate => &self.translate,
            Stage::Answer => &self.answer,
        }
    }

    /// Largest shot count every stage can serve.
    pub fn max_shots(&self) -> usize {
        [&self.erase, &self.decompose, &self.translate, &self.answer]
            .iter()
            .map(|t| t.shot_count())
            .min()
            .unwrap_or(0)
    }
}

/// Partial query shot for the erase stage.
pub fn erase_query(question: &str) -> String {
    format!("Question:\n{question}\nErased:")
}

pub fn decompose_query(erased: &str) -> String {
    format!("Paragraph:\n{erased}\nDecomposed:")
}

pub fn translate_query(erased: &str, sub_questions: &[String]) -> String {
    format!(
        "Paragraph:\n{erased}\nDecomposed:\n{}\nEquations:",
        sub_questions.join("\n")
    )
}

/// The answer query ends inside the equations block so the model continues
/// with the `ans` line(s).
pub fn answer_query(question: &str, equations_text: &str) -> String {
    format!(
        "Question:\n{question}\nEquations:\n{}",
        equations_text.trim_end()
    )
}

/// Trim template echo from a raw model response: a leading response
/// header, anything after a blank line or a next-shot header, and
/// surrounding whitespace.
pub fn clean_response(stage: Stage, raw: &str) -> String {
    let mut text = raw.trim_start_matches(['\n', ' ', '\t']).to_string();
    if let Some(rest) = text.strip_prefix(stage.response_header()) {
        text = rest.trim_start_matches(['\n', ' ']).to_string();
    }
    let mut cut = text.len();
    if let Some(pos) = text.find("\n\n") {
        cut = cut.min(pos);
    }
    let next_shot = format!("\n{}", stage.first_header());
    if let Some(pos) = text.find(&next_shot) {
        cut = cut.min(pos);
    }
    text.truncate(cut);
    text.trim().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erase_first_shot_removes_the_asking_sentence() {
        let set = TemplateSet::builtin();
        let shot = &set.erase.shots[0];
        assert!(shot.contains("what will her annual pension be?"));
        assert!(shot.trim_end().ends_with("She quits after 30 years."));
    }

    #[test]
    fn builtin_templates_have_eight_shots() {
        let set = TemplateSet::builtin();
        for stage in [
            Stage::Erase,
            Stage::Decompose,
            Stage::Translate,
            Stage::Answer,
        ] {
            assert_eq!(set.for_stage(stage).shot_count(), 8, "{stage}");
        }
        assert_eq!(set.max_shots(), 8);
    }

    #[test]
    fn prompt_layout_instruction_shots_query() {
        let set = TemplateSet::builtin();
        let prompt = set
            .erase
            .build_prompt(2, &erase_query("How many?"))
            .unwrap();
        assert!(prompt.starts_with("Erase the asking part of the question."));
        assert_eq!(prompt.matches("Question:").count(), 3);
        assert!(prompt.ends_with("How many?\nErased:"));
    }

    #[test]
    fn requesting_too_many_shots_fails() {
        let set = TemplateSet::builtin();
        assert!(set.erase.build_prompt(9, "q").is_err());
    }

    #[test]
    fn answer_query_embeds_equations_block() {
        let q = answer_query("Why?", "x = 1\ny = 2\n");
        assert_eq!(q, "Question:\nWhy?\nEquations:\nx = 1\ny = 2");
    }

    #[test]
    fn stop_sequences_include_blank_line_and_next_header() {
        let set = TemplateSet::builtin();
        assert_eq!(set.translate.stop_sequences(), vec!["\n\n", "Paragraph:"]);
        assert_eq!(set.answer.stop_sequences(), vec!["\n\n", "Question:"]);
    }

    #[test]
    fn clean_response_strips_echo_and_run_on() {
        let raw = "Erased:\nShe quits after 30 years.\n\nQuestion:\nnext shot";
        assert_eq!(
            clean_response(Stage::Erase, raw),
            "She quits after 30 years."
        );
        let multiline = "line one\nline two\nParagraph:\nrun on";
        assert_eq!(
            clean_response(Stage::Decompose, multiline),
            "line one\nline two"
        );
    }
}
