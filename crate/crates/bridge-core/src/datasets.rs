//! Dataset loading: normalize gsm8k, svamp, and algebra files into
//! examples with numeric gold answers.

use num::{BigInt, BigRational};
use once_cell::sync::Lazy;
use regex::Regex;
use serde::Deserialize;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetTag {
    Gsm8k,
    Svamp,
    Algebra,
}

impl DatasetTag {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetTag::Gsm8k => "gsm8k",
            DatasetTag::Svamp => "svamp",
            DatasetTag::Algebra => "algebra",
        }
    }
}

impl FromStr for DatasetTag {
    type Err = String;
    fn from_str(s: &str) -> Result<DatasetTag, String> {
        match s.to_ascii_lowercase().as_str() {
            "gsm8k" => Ok(DatasetTag::Gsm8k),
            "svamp" => Ok(DatasetTag::Svamp),
            "algebra" => Ok(DatasetTag::Algebra),
            other => Err(format!("unknown dataset format '{other}'")),
        }
    }
}

impl fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Exact decimal: units / 10^scale, normalized so the fraction part has no
/// trailing zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimal {
    units: i128,
    scale: u32,
}

impl Decimal {
    pub fn new(units: i128, scale: u32) -> Decimal {
        let mut d = Decimal { units, scale };
        while d.scale > 0 && d.units % 10 == 0 {
            d.units /= 10;
            d.scale -= 1;
        }
        d
    }

    pub fn from_int(v: i64) -> Decimal {
        Decimal::new(v as i128, 0)
    }

    pub fn to_f64(&self) -> f64 {
        self.units as f64 / 10f64.powi(self.scale as i32)
    }

    pub fn to_rational(&self) -> BigRational {
        let denom = num::pow::pow(BigInt::from(10), self.scale as usize);
        BigRational::new(BigInt::from(self.units), denom)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.units);
        }
        let sign = if self.units < 0 { "-" } else { "" };
        let digits = self.units.unsigned_abs().to_string();
        let scale = self.scale as usize;
        if digits.len() > scale {
            let (int_part, frac_part) = digits.split_at(digits.len() - scale);
            write!(f, "{sign}{int_part}.{frac_part}")
        } else {
            write!(f, "{sign}0.{}{digits}", "0".repeat(scale - digits.len()))
        }
    }
}

impl FromStr for Decimal {
    type Err = DatasetError;

    /// Parse a cleaned decimal string: optional sign, digits, optional
    /// fraction. No sigils here; those are stripped by [`extract_number`].
    fn from_str(s: &str) -> Result<Decimal, DatasetError> {
        let s = s.trim();
        let (sign, rest) = match s.strip_prefix('-') {
            Some(rest) => (-1i128, rest),
            None => (1i128, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match rest.split_once('.') {
            Some((i, f)) => (i, f),
            None => (rest, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(DatasetError::NoNumberFound);
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(DatasetError::NoNumberFound);
        }
        let digits = format!("{int_part}{frac_part}");
        let units: i128 = digits.parse().map_err(|_| DatasetError::NoNumberFound)?;
        Ok(Decimal::new(sign * units, frac_part.len() as u32))
    }
}

/// One normalized dataset item.
#[derive(Debug, Clone)]
pub struct Example {
    pub id: String,
    pub question: String,
    pub gold: Decimal,
    pub source: DatasetTag,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error at item {index}: {reason}")]
    Format { index: usize, reason: String },
    #[error("no number found")]
    NoNumberFound,
}

static NUMBER_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"-?\$?\d[\d,]*(?:\.\d+)?%?").expect("static regex"));

/// Pull the first number out of free text, stripping `$`, digit-group
/// commas, and a trailing `%` (divide by 100) or period.
pub fn extract_number(text: &str) -> Result<Decimal, DatasetError> {
    let m = NUMBER_RE.find(text).ok_or(DatasetError::NoNumberFound)?;
    let mut token: String = m.as_str().to_string();
    let percent = token.ends_with('%');
    token.retain(|c| c != '$' && c != ',' && c != '%');
    let decimal: Decimal = token.parse()?;
    if percent {
        Ok(Decimal::new(decimal.units, decimal.scale + 2))
    } else {
        Ok(decimal)
    }
}

/// Load one dataset file, normalizing to `Example`s. `limit` caps the
/// number of items for desk-scale runs.
pub fn load(
    path: &Path,
    format: DatasetTag,
    limit: Option<usize>,
) -> Result<Vec<Example>, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    let mut examples = match format {
        DatasetTag::Gsm8k => load_gsm8k(&text)?,
        DatasetTag::Svamp => load_svamp(&text)?,
        DatasetTag::Algebra => load_algebra(&text)?,
    };
    if let Some(n) = limit {
        examples.truncate(n);
    }
    Ok(examples)
}

#[derive(Deserialize)]
struct Gsm8kRecord {
    question: String,
    answer: String,
}

/// JSON-lines with `question` and `answer`; gold follows the final
/// `#### ` marker.
fn load_gsm8k(text: &str) -> Result<Vec<Example>, DatasetError> {
    let mut out = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: Gsm8kRecord = serde_json::from_str(line).map_err(|e| DatasetError::Format {
            index,
            reason: e.to_string(),
        })?;
        let marker = record.answer.rfind("#### ").ok_or(DatasetError::Format {
            index,
            reason: "answer lacks '#### ' marker".to_string(),
        })?;
        let gold_text = &record.answer[marker + 5..];
        let gold = extract_number(gold_text).map_err(|_| DatasetError::Format {
            index,
            reason: format!("unparseable gold '{}'", gold_text.trim()),
        })?;
        out.push(Example {
            id: format!("gsm8k-{index}"),
            question: record.question,
            gold,
            source: DatasetTag::Gsm8k,
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct SvampRecord {
    #[serde(rename = "ID")]
    id: Option<String>,
    #[serde(rename = "Body")]
    body: String,
    #[serde(rename = "Question")]
    question: String,
    #[serde(rename = "Answer")]
    answer: serde_json::Value,
}

/// JSON array with Body/Question/Answer; the question is Body + " " +
/// Question.
fn load_svamp(text: &str) -> Result<Vec<Example>, DatasetError> {
    let records: Vec<SvampRecord> =
        serde_json::from_str(text).map_err(|e| DatasetError::Format {
            index: 0,
            reason: e.to_string(),
        })?;
    records
        .into_iter()
        .enumerate()
        .map(|(index, record)| {
            let gold =
                json_number_to_decimal(&record.answer).map_err(|_| DatasetError::Format {
                    index,
                    reason: format!("unparseable Answer {}", record.answer),
                })?;
            Ok(Example {
                id: record.id.unwrap_or_else(|| format!("svamp-{index}")),
                question: format!("{} {}", record.body.trim(), record.question.trim()),
                gold,
                source: DatasetTag::Svamp,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct AlgebraRecord {
    question: String,
    answer: serde_json::Value,
}

/// JSON-lines with `question` and a numeric `answer`.
fn load_algebra(text: &str) -> Result<Vec<Example>, DatasetError> {
    let mut out = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: AlgebraRecord =
            serde_json::from_str(line).map_err(|e| DatasetError::Format {
                index,
                reason: e.to_string(),
            })?;
        let gold = json_number_to_decimal(&record.answer).map_err(|_| DatasetError::Format {
            index,
            reason: format!("unparseable answer {}", record.answer),
        })?;
        out.push(Example {
            id: format!("algebra-{index}"),
            question: record.question,
            gold,
            source: DatasetTag::Algebra,
        });
    }
    Ok(out)
}

fn json_number_to_decimal(value: &serde_json::Value) -> Result<Decimal, DatasetError> {
    match value {
        serde_json::Value::Number(n) => {
            // Use the literal text of the JSON number so 20.0 parses
            // exactly rather than via a float round trip.
            n.to_string().parse()
        }
        serde_json::Value::String(s) => extract_number(s),
        _ => Err(DatasetError::NoNumberFound),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::ToPrimitive;
    use std::io::Write;

    #[test]
    fn extract_number_examples() {
        assert_eq!(extract_number("$50,000").unwrap(), Decimal::from_int(50000));
        assert_eq!(extract_number("5%").unwrap(), Decimal::new(5, 2));
        assert_eq!(extract_number("5%").unwrap().to_f64(), 0.05);
        assert!(matches!(
            extract_number("no digits"),
            Err(DatasetError::NoNumberFound)
        ));
        assert_eq!(extract_number("72.").unwrap(), Decimal::from_int(72));
        assert_eq!(extract_number("-3.5 apples").unwrap().to_f64(), -3.5);
    }

    #[test]
    fn gsm8k_marker_and_commas() {
        let jsonl = format!(
            "{}\n{}\n",
            serde_json::json!({"question": "Q1?", "answer": "work work\n#### 72"}),
            serde_json::json!({"question": "Q2?", "answer": "steps\n#### 1,080"}),
        );
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(jsonl.as_bytes()).unwrap();
        let examples = load(file.path(), DatasetTag::Gsm8k, None).unwrap();
        assert_eq!(examples.len(), 2);
        assert_eq!(examples[0].gold, Decimal::from_int(72));
        assert_eq!(examples[1].gold, Decimal::from_int(1080));
        assert_eq!(examples[0].id, "gsm8k-0");
    }

    #[test]
    fn svamp_concatenates_body_and_question() {
        let json = r#"[{"Body":"B.","Question":"Q?","Answer":20.0}]"#;
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(json.as_bytes()).unwrap();
        let examples = load(file.path(), DatasetTag::Svamp, None).unwrap();
        assert_eq!(examples[0].question, "B. Q?");
        assert_eq!(examples[0].gold, Decimal::from_int(20));
    }

    #[test]
    fn algebra_jsonl_numeric_answers() {
        let jsonl = r#"{"question":"solve","answer":-4.25}"#;
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(jsonl.as_bytes()).unwrap();
        let examples = load(file.path(), DatasetTag::Algebra, None).unwrap();
        assert_eq!(examples[0].gold.to_f64(), -4.25);
    }

    #[test]
    fn limit_truncates() {
        let jsonl = format!(
            "{}\n{}\n",
            serde_json::json!({"question": "a", "answer": "#### 1"}),
            serde_json::json!({"question": "b", "answer": "#### 2"}),
        );
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(jsonl.as_bytes()).unwrap();
        let examples = load(file.path(), DatasetTag::Gsm8k, Some(1)).unwrap();
        assert_eq!(examples.len(), 1);
    }

    #[test]
    fn loading_is_deterministic() {
        let jsonl = format!(
            "{}\n{}\n",
            serde_json::json!({"question": "a", "answer": "#### 1.5"}),
            serde_json::json!({"question": "b", "answer": "#### 2"}),
        );
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(jsonl.as_bytes()).unwrap();
        let first = load(file.path(), DatasetTag::Gsm8k, None).unwrap();
        let second = load(file.path(), DatasetTag::Gsm8k, None).unwrap();
        assert_eq!(first.len(), second.len());
        for (a, b) in first.iter().zip(&second) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.gold, b.gold);
        }
    }

    #[test]
    fn decimal_round_trips_through_text() {
        for text in ["72", "1.25", "-0.003", "1080", "0.5", "123456789012"] {
            let d: Decimal = text.parse().unwrap();
            let reparsed: Decimal = d.to_string().parse().unwrap();
            assert_eq!(d, reparsed);
            assert_eq!(d.to_string(), text);
        }
    }

    #[test]
    fn decimal_rational_agrees_with_f64() {
        let d: Decimal = "1.25".parse().unwrap();
        assert_eq!(d.to_rational(), BigRational::new(5.into(), 4.into()));
        assert_eq!(d.to_rational().to_f64().unwrap(), 1.25);
    }
}
