//! Hand-checked entailment cases written in English, run through the
//! inverse matcher and the reasoner.

use crate::generator::{DataError, VocabularyPool};
use crate::reasoner::{entails, Verdict};
use crate::syntax::{Axiom, KnowledgeBase};
use crate::verbalize::{parse_sentence, TemplateSet};

const GOLDEN: &str = include_str!("../data/golden.txt");
const GOLDEN_HEADER: &str = "# deltagen golden v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldenCase {
    pub name: String,
    pub context: Vec<String>,
    pub question: String,
    pub answer: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseResult {
    pub name: String,
    pub expected: Verdict,
    /// The reasoner's verdict, or why the case could not be evaluated.
    pub actual: Result<Verdict, String>,
}

impl CaseResult {
    pub fn passed(&self) -> bool {
        self.actual.as_ref() == Ok(&self.expected)
    }
}

fn parse_verdict(s: &str) -> Option<Verdict> {
    match s {
        "true" => Some(Verdict::True),
        "false" => Some(Verdict::False),
        "unknown" => Some(Verdict::Unknown),
        _ => None,
    }
}

/// Parses the golden-case format: `key: value` blocks separated by blank
/// lines.
pub fn parse_golden(text: &str) -> Result<Vec<GoldenCase>, DataError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == GOLDEN_HEADER => {}
        _ => return Err(DataError::MissingHeader(GOLDEN_HEADER)),
    }
    let mut out = Vec::new();
    let mut cur: Vec<(usize, String, String)> = Vec::new();
    let mut flush = |cur: &mut Vec<(usize, String, String)>| -> Result<(), DataError> {
        if cur.is_empty() {
            return Ok(());
        }
        let get = |k: &str| {
            cur.iter()
                .find(|(_, key, _)| key == k)
                .map(|(_, _, v)| v.clone())
                .ok_or_else(|| DataError::Line { line: cur[0].0, message: format!("case lacks `{k}`") })
        };
        let context = get("context")?;
        let answer = get("answer")?;
        out.push(GoldenCase {
            name: get("case")?,
            context: if context == "-" { vec![] } else { context.split(" . ").map(str::to_string).collect() },
            question: get("question")?,
            answer: parse_verdict(&answer)
                .ok_or_else(|| DataError::Line { line: cur[0].0, message: format!("bad answer `{answer}`") })?,
        });
        cur.clear();
        Ok(())
    };
    for (i, raw) in lines {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            flush(&mut cur)?;
            continue;
        }
        let (k, v) = line
            .split_once(": ")
            .ok_or_else(|| DataError::Line { line: i + 1, message: "expected `key: value`".into() })?;
        cur.push((i + 1, k.to_string(), v.trim().to_string()));
    }
    flush(&mut cur)?;
    Ok(out)
}

/// The shipped golden suite.
pub fn golden_cases() -> Vec<GoldenCase> {
    parse_golden(GOLDEN).expect("shipped golden suite is valid")
}

pub fn run_case(case: &GoldenCase, ts: &TemplateSet, pool: &VocabularyPool) -> CaseResult {
    let actual = (|| {
        let context: Vec<Axiom> = case
            .context
            .iter()
            .map(|s| parse_sentence(s, ts, pool).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let q = parse_sentence(&case.question, ts, pool).map_err(|e| e.to_string())?;
        entails(&KnowledgeBase::from_axioms(context), &q).map_err(|e| e.to_string())
    })();
    CaseResult { name: case.name.clone(), expected: case.answer, actual }
}

/// Runs every shipped case against pool A's vocabulary.
pub fn run_golden() -> Vec<CaseResult> {
    let pool = VocabularyPool::pool_a();
    let ts = TemplateSet::for_pool(&pool);
    golden_cases().iter().map(|c| run_case(c, &ts, &pool)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_large_enough_and_passes() {
        let results = run_golden();
        assert!(results.len() >= 25);
        for r in &results {
            assert!(r.passed(), "{}: expected {}, got {:?}", r.name, r.expected, r.actual);
        }
    }

    #[test]
    fn malformed_cases_are_reported() {
        assert!(parse_golden("nope").is_err());
        let text = format!("{GOLDEN_HEADER}\ncase: x\ncontext: -\nquestion: Anne is red\nanswer: maybe\n");
        assert!(matches!(parse_golden(&text), Err(DataError::Line { .. })));
    }
}
