//! Dataset assembly: the per-KB pipeline, example records, statistics,
//! splits, JSONL and OWL functional-syntax output, and the answer audit.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::closure::{JustificationError, Session};
use crate::generator::{child_seed, sample_kb, DataError, GenerationError, GrammarConfig, KbSizeRange, VocabularyPool};
use crate::query::{build_query_set, Balance, QueryBuilder, QuerySet};
use crate::reasoner::{Budget, ReasonerError, Verdict};
use crate::syntax::{parse_axiom, Axiom, Concept, KnowledgeBase};
use crate::verbalize::{has_not, word_count, TemplateSet};

/// One question over one verbalized knowledge base.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub context: Vec<String>,
    pub question: String,
    pub answer: Verdict,
    #[serde(with = "depth_field")]
    pub depth: Option<usize>,
    pub level: u8,
    /// Indices into `context` (and `kb_lf`); empty for Unknown answers.
    pub justification: Vec<usize>,
    pub kb_lf: Vec<String>,
    pub query_lf: String,
    pub pool: String,
    pub seed: u64,
    /// Ordinal of the source KB within its pool.
    pub kb: usize,
}

mod depth_field {
    use super::*;

    pub fn serialize<S: Serializer>(d: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(n) => s.serialize_u64(*n as u64),
            None => s.serialize_str("na"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(usize),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Some(n)),
            Raw::S(s) if s == "na" => Ok(None),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad depth `{s}`"))),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("pool {pool}: no acceptable KB for slot {ordinal} after {attempts} attempts")]
    Exhausted { pool: String, ordinal: usize, attempts: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("split ratios must be non-negative and sum to 1")]
    Ratio,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("internal: {0}")]
    Internal(String),
}

impl From<DataError> for DatasetError {
    fn from(e: DataError) -> Self {
        DatasetError::Config(e.to_string())
    }
}

/// Everything that determines a generated dataset. Serializes to
/// `key=value` lines that replay the run.
#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub level: u8,
    pub depths: Vec<usize>,
    /// KBs per run, split across `pools` (the first gets the remainder).
    pub kbs: usize,
    pub pools: Vec<String>,
    pub seed: u64,
    pub closure_budget_secs: f64,
    pub node_budget: usize,
    pub call_budget_secs: f64,
    pub tweak: Option<String>,
    pub role_assertions: bool,
    pub export_owl: bool,
    /// Replacement KBs tried per slot before giving up.
    pub max_attempts: usize,
    pub not_rate: f64,
    pub false_not_rate: f64,
    pub question_words: (usize, usize),
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            level: 0,
            depths: vec![0, 1, 2, 3, 4, 5],
            kbs: 10,
            pools: vec!["A".into(), "B".into()],
            seed: 0,
            closure_budget_secs: 5.0,
            node_budget: 100_000,
            call_budget_secs: 5.0,
            tweak: None,
            role_assertions: false,
            export_owl: false,
            max_attempts: 200,
            not_rate: 0.5,
            false_not_rate: 0.3,
            question_words: (7, 13),
        }
    }
}

/// Parses `0,1,2`, `0-3` / `0..3` ranges, or a preset name `d0`..`d5`
/// (cumulative sets).
pub fn parse_depths(s: &str) -> Result<Vec<usize>, DatasetError> {
    let bad = || DatasetError::Config(format!("bad depth set `{s}`"));
    let s = s.trim();
    if let Some(n) = s.strip_prefix('d').or_else(|| s.strip_prefix('D')) {
        let n: usize = n.parse().map_err(|_| bad())?;
        return Ok((0..=n).collect());
    }
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let range = part.split_once("..").or_else(|| part.split_once('-'));
        match range {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let err = |m: &str| Err(DatasetError::Config(m.to_string()));
        if self.level > 3 {
            return err("level must be 0..3");
        }
        if self.depths.is_empty() {
            return err("empty depth set");
        }
        if self.pools.is_empty() || self.pools.iter().any(|p| VocabularyPool::by_name(p).is_none()) {
            return err("pools must be A and/or B");
        }
        if !(self.closure_budget_secs > 0.0 && self.call_budget_secs > 0.0) || self.node_budget == 0 {
            return err("budgets must be positive");
        }
        if self.max_attempts == 0 {
            return err("max_attempts must be positive");
        }
        if !(0.0..=1.0).contains(&self.not_rate) || !(0.0..=1.0).contains(&self.false_not_rate) || self.question_words.0 > self.question_words.1 {
            return err("bad balance settings");
        }
        self.grammar()?;
        Ok(())
    }

    pub fn grammar(&self) -> Result<GrammarConfig, DatasetError> {
        let mut g = GrammarConfig::default();
        if let Some(t) = &self.tweak {
            g.apply_tweak(t)?;
        }
        if self.role_assertions && g.prob_role_assertion == 0.0 {
            g.prob_role_assertion = 0.1;
        }
        g.validate()?;
        Ok(g)
    }

    pub fn max_depth(&self) -> usize {
        self.depths.iter().copied().max().unwrap_or(0)
    }

    /// KB count per pool; the first pool gets the remainder.
    pub fn pool_counts(&self) -> Vec<(String, usize)> {
        let n = self.pools.len();
        self.pools
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), self.kbs / n + usize::from(i < self.kbs % n)))
            .collect()
    }

    /// Examples a run yields.
    pub fn expected_examples(&self) -> usize {
        3 * self.depths.len() * self.kbs
    }

    fn budget(&self) -> Budget {
        Budget { max_nodes: self.node_budget, time_limit: Some(Duration::from_secs_f64(self.call_budget_secs)) }
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), DatasetError> {
        let bad = || DatasetError::Config(format!("bad value `{value}` for `{key}`"));
        let v = value.trim();
        match key.trim() {
            "level" => self.level = v.parse().map_err(|_| bad())?,
            "depths" => self.depths = parse_depths(v)?,
            "kbs" => self.kbs = v.parse().map_err(|_| bad())?,
            "pools" => self.pools = v.split(',').map(|p| p.trim().to_uppercase()).filter(|p| !p.is_empty()).collect(),
            "seed" => self.seed = v.parse().map_err(|_| bad())?,
            "closure_budget_secs" => self.closure_budget_secs = v.parse().map_err(|_| bad())?,
            "node_budget" => self.node_budget = v.parse().map_err(|_| bad())?,
            "call_budget_secs" => self.call_budget_secs = v.parse().map_err(|_| bad())?,
            "tweak" => self.tweak = if v.is_empty() { None } else { Some(v.to_string()) },
            "role_assertions" => self.role_assertions = v.parse().map_err(|_| bad())?,
            "export_owl" => self.export_owl = v.parse().map_err(|_| bad())?,
            "max_attempts" => self.max_attempts = v.parse().map_err(|_| bad())?,
            "not_rate" => self.not_rate = v.parse().map_err(|_| bad())?,
            "false_not_rate" => self.false_not_rate = v.parse().map_err(|_| bad())?,
            "question_words" => {
                let (a, b) = v.split_once("..").ok_or_else(bad)?;
                self.question_words = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            }
            other => return Err(DatasetError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let mut c = GenConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), DatasetError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| DatasetError::Parse { line: i + 1, message: "expected key=value".into() })?;
            self.set(k, v).map_err(|e| DatasetError::Parse { line: i + 1, message: e.to_string() })?;
        }
        Ok(())
    }
}

impl fmt::Display for GenConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let depths: Vec<String> = self.depths.iter().map(usize::to_string).collect();
        writeln!(f, "level={}", self.level)?;
        writeln!(f, "depths={}", depths.join(","))?;
        writeln!(f, "kbs={}", self.kbs)?;
        writeln!(f, "pools={}", self.pools.join(","))?;
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "closure_budget_secs={}", self.closure_budget_secs)?;
        writeln!(f, "node_budget={}", self.node_budget)?;
        writeln!(f, "call_budget_secs={}", self.call_budget_secs)?;
        writeln!(f, "tweak={}", self.tweak.as_deref().unwrap_or(""))?;
        writeln!(f, "role_assertions={}", self.role_assertions)?;
        writeln!(f, "export_owl={}", self.export_owl)?;
        writeln!(f, "max_attempts={}", self.max_attempts)?;
        writeln!(f, "not_rate={}", self.not_rate)?;
        writeln!(f, "false_not_rate={}", self.false_not_rate)?;
        writeln!(f, "question_words={}..{}", self.question_words.0, self.question_words.1)
    }
}

/// A generated dataset with its source KBs in output order.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub kbs: Vec<(String, usize, KnowledgeBase)>,
    /// Slots whose first KBs were rejected, summed over the run.
    pub rejected: usize,
}

struct SlotResult {
    examples: Vec<Example>,
    kb: KnowledgeBase,
    rejected: usize,
}

/// Mean word count of `ax` over its applicable templates, and whether it
/// contains "not".
fn describe(ts: &TemplateSet, ax: &Axiom) -> (bool, usize) {
    let ts_all = ts.applicable(ax);
    let lens: Vec<usize> = ts_all.iter().filter_map(|t| ts.render(ax, *t)).map(|s| word_count(&s)).collect();
    let text = ts.render(ax, ts_all[0]).unwrap_or_default();
    (has_not(&text), lens.iter().sum::<usize>() / lens.len().max(1))
}

fn run_slot(
    cfg: &GenConfig,
    grammar: &GrammarConfig,
    pool_index: usize,
    pool: &VocabularyPool,
    ordinal: usize,
) -> Result<SlotResult, DatasetError> {
    let ts = TemplateSet::for_pool(pool);
    let size = KbSizeRange::for_depth(cfg.max_depth());
    let describe_fn = |ax: &Axiom| describe(&ts, ax);
    let slot_seed = child_seed(cfg.seed, pool_index as u64, ordinal as u64);
    for attempt in 0..cfg.max_attempts {
        let seed = child_seed(slot_seed, 1, attempt as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = match sample_kb(cfg.level, pool, grammar, &size, &mut rng, 200) {
            Ok(kb) => kb,
            Err(GenerationError::Exhausted { .. } | GenerationError::Reasoner(ReasonerError::BudgetExceeded)) => continue,
            Err(e) => return Err(DatasetError::Internal(e.to_string())),
        };
        let mut session = Session::with_budget(&kb, cfg.budget());
        let balance = Balance {
            describe: &describe_fn,
            not_rate: cfg.not_rate,
            false_not_rate: cfg.false_not_rate,
            words: cfg.question_words.0..=cfg.question_words.1,
        };
        let mut builder = QueryBuilder::new(&mut session, cfg.max_depth(), Duration::from_secs_f64(cfg.closure_budget_secs))
            .with_balance(balance);
        let queries = match build_query_set(&mut builder, &cfg.depths, cfg.level, pool, grammar, &mut rng) {
            Ok(QuerySet::Accepted(q)) => q,
            Ok(QuerySet::Rejected(_)) => continue,
            Err(e) => return Err(DatasetError::Internal(e.to_string())),
        };
        let sentences: Vec<String> = kb.axioms().map(|a| ts.verbalize(a, &mut rng)).collect();
        let lfs: Vec<String> = kb.axioms().map(Axiom::to_string).collect();
        let mut examples = Vec::with_capacity(queries.len());
        for q in queries {
            let mut perm: Vec<usize> = (0..sentences.len()).collect();
            perm.shuffle(&mut rng);
            // position of original axiom i in the shuffled context
            let mut pos = vec![0; perm.len()];
            for (p, &i) in perm.iter().enumerate() {
                pos[i] = p;
            }
            let mut justification: Vec<usize> =
                q.justification.as_ref().map_or_else(Vec::new, |j| j.indices.iter().map(|&i| pos[i]).collect());
            justification.sort_unstable();
            examples.push(Example {
                context: perm.iter().map(|&i| sentences[i].clone()).collect(),
                question: ts.verbalize(&q.axiom, &mut rng),
                answer: q.answer,
                depth: q.depth,
                level: cfg.level,
                justification,
                kb_lf: perm.iter().map(|&i| lfs[i].clone()).collect(),
                query_lf: q.axiom.to_string(),
                pool: pool.name.clone(),
                seed,
                kb: ordinal,
            });
        }
        return Ok(SlotResult { examples, kb, rejected: attempt });
    }
    Err(DatasetError::Exhausted { pool: pool.name.clone(), ordinal, attempts: cfg.max_attempts })
}

/// Runs the full pipeline. KB slots are independent and run on the
/// current rayon pool; output order is (pool, KB ordinal, depth, answer)
/// regardless of the pool width.
pub fn generate_dataset(cfg: &GenConfig) -> Result<Dataset, DatasetError> {
    cfg.validate()?;
    let grammar = cfg.grammar()?;
    let mut slots = Vec::new();
    for (pi, (name, count)) in cfg.pool_counts().into_iter().enumerate() {
        let pool = VocabularyPool::by_name(&name).expect("validated");
        for k in 0..count {
            slots.push((pi, pool.clone(), k));
        }
    }
    let results: Vec<Result<SlotResult, DatasetError>> =
        slots.par_iter().map(|(pi, pool, k)| run_slot(cfg, &grammar, *pi, pool, *k)).collect();
    let mut out = Dataset::default();
    for ((_, pool, k), r) in slots.iter().zip(results) {
        let r = r?;
        out.examples.extend(r.examples);
        out.rejected += r.rejected;
        out.kbs.push((pool.name.clone(), *k, r.kb));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// statistics

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub mean: f64,
    pub max: usize,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub examples: usize,
    pub answer_counts: BTreeMap<String, usize>,
    /// Percentage of questions containing "not", per answer.
    pub not_frequency: BTreeMap<String, f64>,
    /// Mean question length in words, per answer.
    pub question_length: BTreeMap<String, f64>,
    /// Context sentence length per level.
    pub sentence_length: BTreeMap<u8, LengthStats>,
    pub depth_histogram: BTreeMap<String, usize>,
    /// Share of examples whose question text already appeared in an
    /// earlier example of another KB.
    pub duplicate_rate: f64,
    /// Mean disjunctions / universal quantifiers per context subsumption.
    pub disjunctions_per_subsumption: f64,
    pub universals_per_subsumption: f64,
    /// Chi-square statistic of question template against answer, with its
    /// degrees of freedom.
    pub template_chi_square: f64,
    pub template_dof: usize,
}

fn answer_key(v: Verdict) -> String {
    v.to_string().to_lowercase()
}

/// Coarse template class of a rendered question.
fn template_class(question: &str) -> &'static str {
    let first = question.split_whitespace().next().unwrap_or("");
    let second = question.split_whitespace().nth(1).unwrap_or("");
    match first {
        "If" => "if",
        "All" => "all",
        "Everyone" | "Everything" => "everyone",
        "Someone" | "Something" if second == "can" => "can",
        _ if question.split_whitespace().count() >= 2 && first.chars().next().is_some_and(char::is_uppercase) => {
            // facts start with a capitalized name; plain subsumptions with
            // a capitalized adjective or noun — both read as "other"
            "other"
        }
        _ => "other",
    }
}

fn count_ops(c: &Concept, or: &mut usize, forall: &mut usize) {
    c.walk(&mut |s| match s {
        Concept::Or(..) => *or += 1,
        Concept::Forall(..) => *forall += 1,
        _ => {}
    });
}

pub fn compute_stats(examples: &[Example]) -> DatasetStats {
    let mut st = DatasetStats { examples: examples.len(), ..Default::default() };
    let mut nots: BTreeMap<String, usize> = BTreeMap::new();
    let mut qlen: BTreeMap<String, usize> = BTreeMap::new();
    let mut slen: BTreeMap<u8, (usize, usize, usize)> = BTreeMap::new();
    let mut table: BTreeMap<(&'static str, String), usize> = BTreeMap::new();
    let mut first_kb: HashMap<&str, (&str, usize)> = HashMap::new();
    let mut dups = 0;
    let mut seen_kbs: HashSet<(&str, usize, u64)> = HashSet::new();
    let (mut subs, mut ors, mut foralls) = (0usize, 0usize, 0usize);
    for e in examples {
        let a = answer_key(e.answer);
        *st.answer_counts.entry(a.clone()).or_default() += 1;
        *nots.entry(a.clone()).or_default() += usize::from(has_not(&e.question));
        *qlen.entry(a.clone()).or_default() += word_count(&e.question);
        *table.entry((template_class(&e.question), a)).or_default() += 1;
        let d = e.depth.map_or_else(|| "na".to_string(), |d| d.to_string());
        *st.depth_histogram.entry(d).or_default() += 1;
        let s = slen.entry(e.level).or_default();
        for sentence in &e.context {
            let w = word_count(sentence);
            s.0 += w;
            s.1 = s.1.max(w);
            s.2 += 1;
        }
        match first_kb.get(e.question.as_str()) {
            Some(&(p, k)) if (p, k) != (e.pool.as_str(), e.kb) => dups += 1,
            Some(_) => {}
            None => {
                first_kb.insert(&e.question, (&e.pool, e.kb));
            }
        }
        if seen_kbs.insert((&e.pool, e.kb, e.seed)) {
            for lf in &e.kb_lf {
                if let Ok(Axiom::Subsumption { lhs, rhs }) = parse_axiom(lf) {
                    subs += 1;
                    count_ops(&lhs, &mut ors, &mut foralls);
                    count_ops(&rhs, &mut ors, &mut foralls);
                }
            }
        }
    }
    for (a, n) in &st.answer_counts {
        st.not_frequency.insert(a.clone(), 100.0 * nots[a] as f64 / *n as f64);
        st.question_length.insert(a.clone(), qlen[a] as f64 / *n as f64);
    }
    for (l, (sum, max, count)) in slen {
        let mean = if count == 0 { 0.0 } else { sum as f64 / count as f64 };
        st.sentence_length.insert(l, LengthStats { mean, max, count });
    }
    if !examples.is_empty() {
        st.duplicate_rate = dups as f64 / examples.len() as f64;
    }
    if subs > 0 {
        st.disjunctions_per_subsumption = ors as f64 / subs as f64;
        st.universals_per_subsumption = foralls as f64 / subs as f64;
    }
    let (chi, dof) = chi_square(&table);
    st.template_chi_square = chi;
    st.template_dof = dof;
    st
}

fn chi_square(table: &BTreeMap<(&'static str, String), usize>) -> (f64, usize) {
    let mut rows: BTreeMap<&str, f64> = BTreeMap::new();
    let mut cols: BTreeMap<&str, f64> = BTreeMap::new();
    let mut total = 0.0;
    for ((r, c), n) in table {
        *rows.entry(r).or_default() += *n as f64;
        *cols.entry(c.as_str()).or_default() += *n as f64;
        total += *n as f64;
    }
    if rows.len() < 2 || cols.len() < 2 {
        return (0.0, 0);
    }
    let mut chi = 0.0;
    for (r, rn) in &rows {
        for (c, cn) in &cols {
            let expected = rn * cn / total;
            let observed = table.get(&(*r, c.to_string())).copied().unwrap_or(0) as f64;
            chi += (observed - expected).powi(2) / expected;
        }
    }
    (chi, (rows.len() - 1) * (cols.len() - 1))
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "examples: {}", self.examples)?;
        for (a, n) in &self.answer_counts {
            writeln!(
                f,
                "{a}: {n} examples, not {:.2}%, question length {:.2} words",
                self.not_frequency[a], self.question_length[a]
            )?;
        }
        for (l, s) in &self.sentence_length {
            writeln!(f, "level {l}: sentence length mean {:.2}, max {} over {} sentences", s.mean, s.max, s.count)?;
        }
        let hist: Vec<String> = self.depth_histogram.iter().map(|(d, n)| format!("{d}={n}")).collect();
        writeln!(f, "depths: {}", hist.join(" "))?;
        writeln!(f, "duplicate rate: {:.4}", self.duplicate_rate)?;
        writeln!(
            f,
            "per subsumption: {:.3} disjunctions, {:.3} universals",
            self.disjunctions_per_subsumption, self.universals_per_subsumption
        )?;
        writeln!(f, "template/answer chi-square: {:.3} (dof {})", self.template_chi_square, self.template_dof)
    }
}

// ---------------------------------------------------------------------------
// splits and serialization

/// Splits by KB: all examples of one KB land in the same part. KB order
/// is shuffled with `seed`; part sizes are rounded from the ratios.
pub fn split(examples: &[Example], ratios: [f64; 3], seed: u64) -> Result<[Vec<Example>; 3], DatasetError> {
    if ratios.iter().any(|r| *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DatasetError::Ratio);
    }
    let mut keys: Vec<(&str, usize)> = Vec::new();
    let mut seen = HashSet::new();
    for e in examples {
        if seen.insert((e.pool.as_str(), e.kb)) {
            keys.push((&e.pool, e.kb));
        }
    }
    keys.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = keys.len();
    let train = (ratios[0] * n as f64).round() as usize;
    let valid = ((ratios[0] + ratios[1]) * n as f64).round() as usize - train;
    let part: HashMap<(&str, usize), usize> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| (*k, if i < train { 0 } else if i < train + valid { 1 } else { 2 }))
        .collect();
    let mut out: [Vec<Example>; 3] = Default::default();
    for e in examples {
        out[part[&(e.pool.as_str(), e.kb)]].push(e.clone());
    }
    Ok(out)
}

pub fn write_jsonl(examples: &[Example], mut w: impl Write) -> std::io::Result<()> {
    for e in examples {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_jsonl(r: impl BufRead) -> Result<Vec<Example>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line).map_err(|e| DatasetError::Parse { line: i + 1, message: e.to_string() })?;
        out.push(e);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// OWL functional-style export

const OWL_BASE: &str = "http://example.org/deltagen";

fn owl_concept(c: &Concept) -> String {
    match c {
        Concept::Atomic(a) => format!(":{a}"),
        Concept::Top => "owl:Thing".into(),
        Concept::Bottom => "owl:Nothing".into(),
        Concept::Not(x) => format!("ObjectComplementOf({})", owl_concept(x)),
        Concept::And(l, r) => format!("ObjectIntersectionOf({} {})", owl_concept(l), owl_concept(r)),
        Concept::Or(l, r) => format!("ObjectUnionOf({} {})", owl_concept(l), owl_concept(r)),
        Concept::Exists(r, f) => format!("ObjectSomeValuesFrom(:{r} {})", owl_concept(f)),
        Concept::Forall(r, f) => format!("ObjectAllValuesFrom(:{r} {})", owl_concept(f)),
        Concept::AtLeast(n, r, f) => format!("ObjectMinCardinality({n} :{r} {})", owl_concept(f)),
        Concept::AtMost(n, r, f) => format!("ObjectMaxCardinality({n} :{r} {})", owl_concept(f)),
    }
}

/// One ontology document in OWL 2 functional-style syntax.
pub fn to_owl_functional(kb: &KnowledgeBase, iri: &str) -> String {
    let mut s = format!("Prefix(:=<{OWL_BASE}#>)\nPrefix(owl:=<http://www.w3.org/2002/07/owl#>)\n\nOntology(<{OWL_BASE}/{iri}>\n");
    for c in kb.concept_names() {
        s += &format!("Declaration(Class(:{c}))\n");
    }
    for r in kb.role_names() {
        s += &format!("Declaration(ObjectProperty(:{r}))\n");
    }
    for a in kb.individuals() {
        s += &format!("Declaration(NamedIndividual(:{a}))\n");
    }
    for ax in kb.axioms() {
        s += &match ax {
            Axiom::Subsumption { lhs, rhs } => format!("SubClassOf({} {})\n", owl_concept(lhs), owl_concept(rhs)),
            Axiom::ConceptAssertion { concept, individual } => {
                format!("ClassAssertion({} :{individual})\n", owl_concept(concept))
            }
            Axiom::RoleAssertion { role, subject, object } => {
                format!("ObjectPropertyAssertion(:{role} :{subject} :{object})\n")
            }
        };
    }
    s + ")\n"
}

// ---------------------------------------------------------------------------
// audit

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    /// 1-based example line.
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
}

fn audit_one(e: &Example, session: &mut Session, kb: &KnowledgeBase, index: &[usize]) -> Result<(), String> {
    let query = parse_axiom(&e.query_lf).map_err(|err| format!("query: {err}"))?;
    let verdict = session.reasoner().verdict(&query).map_err(|err| format!("reasoner: {err}"))?;
    if verdict != e.answer {
        return Err(format!("answer {} but recomputed {}", e.answer, verdict));
    }
    match (verdict, e.depth) {
        (Verdict::Unknown, None) if e.justification.is_empty() => return Ok(()),
        (Verdict::Unknown, _) => return Err("unknown answer with a depth or justification".into()),
        (_, None) => return Err("missing depth".into()),
        _ => {}
    }
    let d = e.depth.unwrap();
    match session.justify(&query, verdict, d + 1) {
        Ok(j) if j.depth() == d => {}
        Ok(j) => return Err(format!("depth {d} but minimum justification has depth {}", j.depth())),
        Err(JustificationError::DepthCapExceeded { .. }) => return Err(format!("depth {d} but no justification that small")),
        Err(err) => return Err(format!("justification: {err}")),
    }
    if e.justification.len() != d + 1 || e.justification.iter().any(|&i| i >= kb.len()) {
        return Err("justification does not have depth + 1 valid indices".into());
    }
    let active: Vec<usize> = e.justification.iter().map(|&i| index[i]).collect();
    let r = session.reasoner();
    let holds = match verdict {
        Verdict::True => r.entails_with(&active, &query),
        _ => r.satisfiable(&active, std::slice::from_ref(&query)).map(|o| !o.is_satisfiable()),
    };
    match holds {
        Ok(true) => Ok(()),
        Ok(false) => Err(format!("stored justification does not {}", match verdict {
            Verdict::True => "entail the question",
            _ => "contradict the question",
        })),
        Err(err) => Err(format!("reasoner: {err}")),
    }
}

/// The KB shared by a group of examples, in a canonical axiom order.
struct SharedKb {
    kb: KnowledgeBase,
    index: HashMap<String, usize>,
    session: Session,
}

impl SharedKb {
    fn new(lfs: &[String], budget: Budget) -> Result<Self, String> {
        let axioms: Vec<Axiom> =
            lfs.iter().map(|l| parse_axiom(l).map_err(|err| format!("kb_lf: {err}"))).collect::<Result<_, _>>()?;
        let kb = KnowledgeBase::from_axioms(axioms);
        let index = kb.axioms().enumerate().map(|(i, a)| (a.to_string(), i)).collect();
        let session = Session::with_budget(&kb, budget);
        Ok(SharedKb { kb, index, session })
    }

    /// KB index of every context position of `e`.
    fn positions(&self, e: &Example) -> Result<Vec<usize>, String> {
        e.kb_lf
            .iter()
            .map(|l| {
                let norm = parse_axiom(l).map_err(|err| format!("kb_lf: {err}"))?.to_string();
                self.index.get(&norm).copied().ok_or_else(|| format!("kb_lf entry `{l}` not in the KB"))
            })
            .collect()
    }
}

/// Recomputes every answer, depth and justification. Examples sharing a
/// KB share one reasoning session.
pub fn audit(examples: &[Example], budget: Budget) -> AuditReport {
    let mut groups: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
    for (i, e) in examples.iter().enumerate() {
        let mut key = e.kb_lf.clone();
        key.sort();
        groups.entry(key).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let mut mismatches: Vec<Mismatch> = groups
        .par_iter()
        .flat_map_iter(|idx| {
            let mut out = Vec::new();
            let mut shared = SharedKb::new(&examples[idx[0]].kb_lf, budget);
            for &i in idx {
                let e = &examples[i];
                let checked = match &mut shared {
                    Ok(s) => s.positions(e).and_then(|index| audit_one(e, &mut s.session, &s.kb, &index)),
                    Err(err) => Err(err.clone()),
                };
                if let Err(message) = checked {
                    out.push(Mismatch { line: i + 1, message });
                }
            }
            out
        })
        .collect();
    mismatches.sort_by_key(|m| m.line);
    AuditReport { checked: examples.len(), mismatches }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(q: &str, a: Verdict) -> Example {
        Example {
            context: vec!["Anne is red".into()],
            question: q.into(),
            answer: a,
            depth: None,
            level: 0,
            justification: vec![],
            kb_lf: vec!["red(Anne)".into()],
            query_lf: "red(Anne)".into(),
            pool: "A".into(),
            seed: 1,
            kb: 0,
        }
    }

    #[test]
    fn jsonl_round_trip_and_depth_na() {
        let mut e = example("Anne is red", Verdict::True);
        e.depth = Some(0);
        e.justification = vec![0];
        let u = example("Anne is kind", Verdict::Unknown);
        let mut buf = Vec::new();
        write_jsonl(&[e.clone(), u.clone()], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"depth\":\"na\""));
        assert!(text.contains("\"answer\":\"true\""));
        assert_eq!(read_jsonl(&buf[..]).unwrap(), vec![e, u]);
        assert!(matches!(read_jsonl(&b"{\"context\":1}\n"[..]), Err(DatasetError::Parse { line: 1, .. })));
    }

    #[test]
    fn not_frequency_is_per_answer() {
        let xs = [
            example("Anne is not red", Verdict::True),
            example("Anne is not red", Verdict::False),
            example("Anne is not red", Verdict::Unknown),
        ];
        let st = compute_stats(&xs);
        assert!(st.not_frequency.values().all(|v| (*v - 100.0).abs() < 1e-9));
        assert_eq!(st.answer_counts.values().sum::<usize>(), 3);
        assert_eq!(st.question_length["true"], 4.0);
    }

    #[test]
    fn split_is_per_kb_and_exact() {
        let xs: Vec<Example> = (0..100)
            .flat_map(|k| (0..3).map(move |_| Example { kb: k, ..example("Anne is red", Verdict::True) }))
            .collect();
        let parts = split(&xs, [0.7, 0.1, 0.2], 3).unwrap();
        let kbs = |p: &Vec<Example>| p.iter().map(|e| e.kb).collect::<HashSet<_>>();
        assert_eq!([kbs(&parts[0]).len(), kbs(&parts[1]).len(), kbs(&parts[2]).len()], [70, 10, 20]);
        assert!(kbs(&parts[0]).is_disjoint(&kbs(&parts[2])));
        assert_eq!(split(&xs, [0.7, 0.1, 0.2], 3).unwrap(), parts);
        assert!(matches!(split(&xs, [0.7, 0.1, 0.1], 3), Err(DatasetError::Ratio)));
    }

    #[test]
    fn config_round_trip() {
        let mut c = GenConfig::default();
        c.set("depths", "0..3,5").unwrap();
        c.set("tweak", "forall=0.70,or=0.80").unwrap();
        assert_eq!(c.depths, vec![0, 1, 2, 3, 5]);
        assert_eq!(GenConfig::parse(&c.to_string()).unwrap(), c);
        assert_eq!(parse_depths("d2").unwrap(), vec![0, 1, 2]);
        assert!(GenConfig::parse("colour=red").is_err());
        assert_eq!(GenConfig { kbs: 11, ..c }.pool_counts(), vec![("A".into(), 6), ("B".into(), 5)]);
    }

    #[test]
    fn owl_export() {
        let kb = KnowledgeBase::from_axioms([
            parse_axiom("red subclassof (atleast 2 likes (not kind))").unwrap(),
            parse_axiom("red(Anne)").unwrap(),
        ]);
        let s = to_owl_functional(&kb, "A/0");
        assert!(s.contains("SubClassOf(:red ObjectMinCardinality(2 :likes ObjectComplementOf(:kind)))"));
        assert!(s.contains("ClassAssertion(:red :Anne)"));
        assert!(s.ends_with(")\n"));
    }

    #[test]
    fn small_run_has_formula_count() {
        let cfg = GenConfig { level: 0, depths: vec![0, 1], kbs: 2, seed: 5, ..Default::default() };
        let ds = generate_dataset(&cfg).unwrap();
        assert_eq!(ds.examples.len(), cfg.expected_examples());
        for e in &ds.examples {
            assert_eq!(e.context.len(), e.kb_lf.len());
            assert_eq!(e.justification.len(), e.depth.map_or(0, |d| d + 1));
        }
        let report = audit(&ds.examples, Budget::default());
        assert_eq!(report.mismatches, vec![]);
    }
}
