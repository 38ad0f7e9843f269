//! Level-stratified random generation of ALCQ knowledge bases.
//!
//! Concepts come from a small probabilistic grammar whose choice points and
//! limits live in a plain-text data file; vocabularies come from pool files.
//! A concept of level `L` has exactly `L` Boolean constructors and at most
//! `L + 1` quantifiers.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::reasoner::{check_all_satisfiable, Reasoner, ReasonerError};
use crate::syntax::{linguistic_level, quantifier_count, quantifier_nesting, Axiom, Concept, KnowledgeBase};

const POOL_A: &str = include_str!("../data/pool_a.txt");
const POOL_B: &str = include_str!("../data/pool_b.txt");
const GRAMMAR: &str = include_str!("../data/grammar.txt");
const POOL_HEADER: &str = "# deltagen pool v1";
const GRAMMAR_HEADER: &str = "# deltagen grammar v1";

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum DataError {
    #[error("missing header line `{0}`")]
    MissingHeader(&'static str),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn line_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::Line { line, message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Genre {
    People,
    Things,
}

impl Genre {
    pub fn someone(self) -> &'static str {
        match self {
            Genre::People => "someone",
            Genre::Things => "something",
        }
    }

    pub fn plural(self) -> &'static str {
        match self {
            Genre::People => "people",
            Genre::Things => "things",
        }
    }
}

/// Concept, role and individual names of one vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyPool {
    pub name: String,
    pub genre: Genre,
    pub concepts: Vec<String>,
    pub roles: Vec<String>,
    pub individuals: Vec<String>,
}

impl VocabularyPool {
    pub fn pool_a() -> Self {
        Self::parse(POOL_A).expect("shipped pool A is valid")
    }

    pub fn pool_b() -> Self {
        Self::parse(POOL_B).expect("shipped pool B is valid")
    }

    /// The shipped pool with this name (`A` or `B`).
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "A" | "a" => Some(Self::pool_a()),
            "B" | "b" => Some(Self::pool_b()),
            _ => None,
        }
    }

    /// Parses the `kind: identifier` pool format.
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == POOL_HEADER => {}
            _ => return Err(DataError::MissingHeader(POOL_HEADER)),
        }
        let mut pool = VocabularyPool {
            name: String::new(),
            genre: Genre::People,
            concepts: Vec::new(),
            roles: Vec::new(),
            individuals: Vec::new(),
        };
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kind, value) = line.split_once(':').ok_or_else(|| line_err(i + 1, "expected `kind: identifier`"))?;
            let value = value.trim().to_string();
            if value.is_empty() || !value.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-') {
                return Err(line_err(i + 1, format!("bad identifier `{value}`")));
            }
            match kind.trim() {
                "name" => pool.name = value,
                "genre" => {
                    pool.genre = match value.as_str() {
                        "people" => Genre::People,
                        "things" => Genre::Things,
                        _ => return Err(line_err(i + 1, format!("unknown genre `{value}`"))),
                    }
                }
                "concept" => pool.concepts.push(value),
                "role" => pool.roles.push(value),
                "individual" => pool.individuals.push(value),
                other => return Err(line_err(i + 1, format!("unknown entry kind `{other}`"))),
            }
        }
        if pool.concepts.is_empty() || pool.roles.is_empty() || pool.individuals.is_empty() {
            return Err(DataError::Invalid("a pool needs concepts, roles and individuals".into()));
        }
        Ok(pool)
    }

    /// Whether `word` is one of the pool's names.
    pub fn knows(&self, word: &str) -> bool {
        self.concepts.iter().chain(&self.roles).chain(&self.individuals).any(|w| w == word)
    }

    fn sample_subset(&self, grammar: &GrammarConfig, rng: &mut impl Rng) -> VocabularyPool {
        let pick = |items: &[String], (lo, hi): (usize, usize), rng: &mut ChaCha8Rng| -> Vec<String> {
            let hi = hi.min(items.len()).max(1);
            let lo = lo.clamp(1, hi);
            let n = rng.gen_range(lo..=hi);
            let mut v: Vec<String> = items.choose_multiple(rng, n).cloned().collect();
            v.sort_by_key(|w| items.iter().position(|x| x == w));
            v
        };
        let mut sub_rng = ChaCha8Rng::seed_from_u64(rng.gen());
        VocabularyPool {
            name: self.name.clone(),
            genre: self.genre,
            concepts: pick(&self.concepts, grammar.subset_concepts, &mut sub_rng),
            roles: pick(&self.roles, grammar.subset_roles, &mut sub_rng),
            individuals: pick(&self.individuals, grammar.subset_individuals, &mut sub_rng),
        }
    }
}

/// Production probabilities and structural limits of the concept grammar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrammarConfig {
    pub prob_exists: f64,
    pub prob_forall: f64,
    pub prob_numres: f64,
    pub prob_atleast: f64,
    pub prob_and: f64,
    pub prob_or: f64,
    pub prob_negate_atom: f64,
    /// Probability that a level-0 leaf is a quantifier rather than a literal.
    pub prob_quantified_leaf: f64,
    /// Probability that a compound concept is wrapped in a quantifier.
    pub prob_quantified_compound: f64,
    pub max_atoms: usize,
    pub max_quantifier_nesting: usize,
    pub numres_bounds: (u32, u32),
    /// Probability of taking a subsumption's LHS from the anchors.
    pub anchor_bias: f64,
    /// Per-KB vocabulary subset sizes.
    pub subset_concepts: (usize, usize),
    pub subset_roles: (usize, usize),
    pub subset_individuals: (usize, usize),
    /// Share of facts emitted as role assertions.
    pub prob_role_assertion: f64,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        Self::parse(GRAMMAR).expect("shipped grammar is valid")
    }
}

impl GrammarConfig {
    /// Parses the `nonterminal -> alternative | probability` format on top of
    /// the built-in defaults.
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == GRAMMAR_HEADER => {}
            _ => return Err(DataError::MissingHeader(GRAMMAR_HEADER)),
        }
        let mut g = GrammarConfig::builtin();
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let ln = i + 1;
            if let Some((lhs, rest)) = line.split_once("->") {
                let (alt, p) = rest.split_once('|').ok_or_else(|| line_err(ln, "expected `| probability`"))?;
                let p: f64 = p.trim().parse().map_err(|_| line_err(ln, "bad probability"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(line_err(ln, "probability out of range"));
                }
                let slot = match (lhs.trim(), alt.trim()) {
                    ("quantifier", "exists") => &mut g.prob_exists,
                    ("quantifier", "forall") => &mut g.prob_forall,
                    ("quantifier", "numres") => &mut g.prob_numres,
                    ("numres", "atleast") => &mut g.prob_atleast,
                    ("numres", "atmost") => {
                        g.prob_atleast = 1.0 - p;
                        continue;
                    }
                    ("boolean", "and") => &mut g.prob_and,
                    ("boolean", "or") => &mut g.prob_or,
                    ("literal", "negated") => &mut g.prob_negate_atom,
                    ("literal", "atom") => {
                        g.prob_negate_atom = 1.0 - p;
                        continue;
                    }
                    ("leaf", "quantified") => &mut g.prob_quantified_leaf,
                    ("leaf", "literal") => {
                        g.prob_quantified_leaf = 1.0 - p;
                        continue;
                    }
                    ("compound", "quantified") => &mut g.prob_quantified_compound,
                    ("compound", "boolean") => {
                        g.prob_quantified_compound = 1.0 - p;
                        continue;
                    }
                    (n, a) => return Err(line_err(ln, format!("unknown production `{n} -> {a}`"))),
                };
                *slot = p;
            } else if let Some((key, value)) = line.split_once(':') {
                let value = value.trim();
                let int = |v: &str| v.parse::<usize>().map_err(|_| line_err(ln, format!("bad integer `{v}`")));
                match key.trim() {
                    "max_atoms" => g.max_atoms = int(value)?,
                    "max_quantifier_nesting" => g.max_quantifier_nesting = int(value)?,
                    "numres_min" => g.numres_bounds.0 = int(value)? as u32,
                    "numres_max" => g.numres_bounds.1 = int(value)? as u32,
                    "anchor_bias" => g.anchor_bias = value.parse().map_err(|_| line_err(ln, "bad probability"))?,
                    "role_assertions" => {
                        g.prob_role_assertion = value.parse().map_err(|_| line_err(ln, "bad probability"))?
                    }
                    other => return Err(line_err(ln, format!("unknown setting `{other}`"))),
                }
            } else {
                return Err(line_err(ln, "expected a production or a setting"));
            }
        }
        g.validate()?;
        Ok(g)
    }

    fn builtin() -> Self {
        GrammarConfig {
            prob_exists: 0.34,
            prob_forall: 0.33,
            prob_numres: 0.33,
            prob_atleast: 0.5,
            prob_and: 0.5,
            prob_or: 0.5,
            prob_negate_atom: 0.5,
            prob_quantified_leaf: 0.25,
            prob_quantified_compound: 0.15,
            max_atoms: 7,
            max_quantifier_nesting: 2,
            numres_bounds: (1, 3),
            anchor_bias: 0.8,
            subset_concepts: (6, 10),
            subset_roles: (1, 3),
            subset_individuals: (2, 4),
            prob_role_assertion: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let close = |a: f64, what: &str| {
            if (a - 1.0).abs() > 1e-6 {
                Err(DataError::Invalid(format!("{what} probabilities sum to {a}, not 1")))
            } else {
                Ok(())
            }
        };
        close(self.prob_exists + self.prob_forall + self.prob_numres, "quantifier")?;
        close(self.prob_and + self.prob_or, "boolean")?;
        if self.numres_bounds.0 == 0 || self.numres_bounds.0 > self.numres_bounds.1 {
            return Err(DataError::Invalid("numres bounds must satisfy 1 <= min <= max".into()));
        }
        Ok(())
    }

    /// Sets the universal-quantifier probability, rescaling the other
    /// quantifier alternatives to keep the total at 1.
    pub fn set_forall(&mut self, p: f64) {
        let rest = self.prob_exists + self.prob_numres;
        let scale = if rest > 0.0 { (1.0 - p) / rest } else { 0.0 };
        self.prob_exists *= scale;
        self.prob_numres *= scale;
        self.prob_forall = p;
    }

    pub fn set_or(&mut self, p: f64) {
        self.prob_or = p;
        self.prob_and = 1.0 - p;
    }

    /// Applies overrides such as `forall=0.70,or=0.80`.
    pub fn apply_tweak(&mut self, spec: &str) -> Result<(), DataError> {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| DataError::Invalid(format!("bad tweak `{part}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| DataError::Invalid(format!("bad tweak value `{part}`")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(DataError::Invalid(format!("tweak value out of range `{part}`")));
            }
            match k.trim() {
                "forall" => self.set_forall(v),
                "or" => self.set_or(v),
                "exists" => {
                    let rest = self.prob_forall + self.prob_numres;
                    let scale = if rest > 0.0 { (1.0 - v) / rest } else { 0.0 };
                    self.prob_forall *= scale;
                    self.prob_numres *= scale;
                    self.prob_exists = v;
                }
                "and" => self.set_or(1.0 - v),
                "negate" => self.prob_negate_atom = v,
                "anchor" => self.anchor_bias = v,
                "role_assertions" => self.prob_role_assertion = v,
                other => return Err(DataError::Invalid(format!("unknown tweak key `{other}`"))),
            }
        }
        self.validate()
    }
}

/// Subsumption and fact counts for a target depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KbSizeRange {
    pub depth_target: usize,
    pub subsumptions: RangeInclusive<usize>,
    pub facts: RangeInclusive<usize>,
}

impl KbSizeRange {
    /// Depths without their own row use the next larger one.
    pub fn for_depth(d: usize) -> Self {
        let (s, f) = match d {
            0 => (3..=8, 1..=5),
            1 => (3..=8, 2..=6),
            2 => (3..=8, 3..=8),
            3 => (4..=8, 5..=10),
            _ => (6..=14, 6..=12),
        };
        KbSizeRange { depth_target: d, subsumptions: s, facts: f }
    }
}

/// `(lhs level, rhs level)` shapes introduced at each level.
pub fn forms(level: u8) -> &'static [(u8, u8)] {
    match level {
        0 => &[(0, 0)],
        1 => &[(0, 1), (1, 0), (1, 1)],
        2 => &[(0, 2), (2, 0), (1, 2), (2, 1)],
        _ => &[(0, 3), (1, 3), (2, 3), (3, 0), (3, 1), (3, 2)],
    }
}

/// Every shape a level-`level` KB may contain.
pub fn admissible_forms(level: u8) -> Vec<(u8, u8)> {
    (0..=level.min(3)).flat_map(|l| forms(l).iter().copied()).collect()
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum GenerationError {
    #[error("generation exhausted after {attempts} attempts")]
    Exhausted { attempts: usize },
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
}

/// Derives an independent seed for item `ordinal` of stream `stream`.
pub fn child_seed(master: u64, stream: u64, ordinal: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(ordinal) * 16);
    rng.gen()
}

fn quantifier(pool: &VocabularyPool, g: &GrammarConfig, rng: &mut impl Rng, filler: Concept) -> Concept {
    let role = pool.roles.choose(rng).expect("non-empty roles").clone();
    let x: f64 = rng.gen();
    if x < g.prob_exists {
        Concept::exists(role, filler)
    } else if x < g.prob_exists + g.prob_forall {
        Concept::forall(role, filler)
    } else {
        let n = rng.gen_range(g.numres_bounds.0..=g.numres_bounds.1);
        if rng.gen_bool(g.prob_atleast) {
            Concept::at_least(n, role, filler)
        } else {
            Concept::at_most(n, role, filler)
        }
    }
}

fn literal(pool: &VocabularyPool, g: &GrammarConfig, rng: &mut impl Rng) -> Concept {
    let a = Concept::atom(pool.concepts.choose(rng).expect("non-empty concepts").clone());
    if rng.gen_bool(g.prob_negate_atom) {
        Concept::not(a)
    } else {
        a
    }
}

fn leaf(pool: &VocabularyPool, g: &GrammarConfig, rng: &mut impl Rng, nest: usize) -> Concept {
    if nest < g.max_quantifier_nesting && rng.gen_bool(g.prob_quantified_leaf) {
        let filler = leaf(pool, g, rng, nest + 1);
        quantifier(pool, g, rng, filler)
    } else {
        literal(pool, g, rng)
    }
}

fn grow(level: usize, pool: &VocabularyPool, g: &GrammarConfig, rng: &mut impl Rng, nest: usize) -> Concept {
    if level == 0 {
        return leaf(pool, g, rng, nest);
    }
    if nest < g.max_quantifier_nesting && rng.gen_bool(g.prob_quantified_compound) {
        let filler = grow(level, pool, g, rng, nest + 1);
        return quantifier(pool, g, rng, filler);
    }
    let left = rng.gen_range(0..level);
    let l = grow(left, pool, g, rng, nest);
    let r = grow(level - 1 - left, pool, g, rng, nest);
    if rng.gen_bool(g.prob_or) {
        Concept::or(l, r)
    } else {
        Concept::and(l, r)
    }
}

/// Rejects `X and X`, `X or not X` and similar degenerate Boolean nodes.
fn degenerate(c: &Concept) -> bool {
    let mut bad = false;
    c.walk(&mut |n| {
        if let Concept::And(l, r) | Concept::Or(l, r) = n {
            let comp = |a: &Concept, b: &Concept| matches!(a, Concept::Not(x) if **x == *b);
            if l == r || comp(l, r) || comp(r, l) {
                bad = true;
            }
        }
    });
    bad
}

fn well_formed(c: &Concept, level: usize, g: &GrammarConfig) -> bool {
    linguistic_level(c) == level
        && quantifier_count(c) <= level + 1
        && quantifier_nesting(c) <= g.max_quantifier_nesting
        && c.concept_names().len() <= g.max_atoms
        && !degenerate(c)
}

/// Samples a concept with exactly `level` Boolean constructors.
pub fn sample_concept(level: u8, pool: &VocabularyPool, g: &GrammarConfig, rng: &mut impl Rng) -> Concept {
    let level = level.min(3) as usize;
    loop {
        let c = grow(level, pool, g, rng, 0);
        if well_formed(&c, level, g) {
            return c;
        }
    }
}

/// Samples a subsumption whose shape comes from the form table of `level`.
/// With probability `anchor_bias` the LHS is an anchor of the right level.
pub fn sample_axiom(
    level: u8,
    pool: &VocabularyPool,
    g: &GrammarConfig,
    rng: &mut impl Rng,
    anchors: &[Concept],
) -> Axiom {
    let (ll, rl) = *forms(level).choose(rng).expect("non-empty form table");
    sample_shaped(ll, rl, pool, g, rng, anchors)
}

fn sample_shaped(
    ll: u8,
    rl: u8,
    pool: &VocabularyPool,
    g: &GrammarConfig,
    rng: &mut impl Rng,
    anchors: &[Concept],
) -> Axiom {
    let fitting: Vec<&Concept> = anchors.iter().filter(|a| linguistic_level(a) == ll as usize).collect();
    loop {
        let lhs = if !fitting.is_empty() && rng.gen_bool(g.anchor_bias) {
            (*fitting.choose(rng).unwrap()).clone()
        } else {
            sample_concept(ll, pool, g, rng)
        };
        let rhs = sample_concept(rl, pool, g, rng);
        if lhs != rhs && !syntactically_trivial(&lhs, &rhs) {
            return Axiom::subsumption(lhs, rhs);
        }
    }
}

fn syntactically_trivial(lhs: &Concept, rhs: &Concept) -> bool {
    let conj = |c: &Concept| match c {
        Concept::And(l, r) => vec![(**l).clone(), (**r).clone()],
        other => vec![other.clone()],
    };
    let disj = |c: &Concept| match c {
        Concept::Or(l, r) => vec![(**l).clone(), (**r).clone()],
        other => vec![other.clone()],
    };
    conj(lhs).iter().any(|c| disj(rhs).contains(c))
}

/// A concept assertion at a uniformly chosen level up to `level`, or a role
/// assertion when enabled.
pub fn sample_fact(level: u8, pool: &VocabularyPool, g: &GrammarConfig, rng: &mut impl Rng) -> Axiom {
    if g.prob_role_assertion > 0.0 && rng.gen_bool(g.prob_role_assertion) {
        let role = pool.roles.choose(rng).unwrap().clone();
        let s = pool.individuals.choose(rng).unwrap().clone();
        let o = pool.individuals.choose(rng).unwrap().clone();
        return Axiom::role_fact(role, s, o);
    }
    let l = rng.gen_range(0..=level.min(3));
    let c = sample_concept(l, pool, g, rng);
    Axiom::fact(c, pool.individuals.choose(rng).unwrap().clone())
}

fn linguistic_pair(ax: &Axiom) -> Option<(u8, u8)> {
    match ax {
        Axiom::Subsumption { lhs, rhs } => Some((linguistic_level(lhs) as u8, linguistic_level(rhs) as u8)),
        _ => None,
    }
}

fn anchors_of(c: &Concept, out: &mut Vec<Concept>) {
    if !out.contains(c) {
        out.push(c.clone());
    }
    if let Concept::And(l, r) = c {
        anchors_of(l, out);
        anchors_of(r, out);
    }
}

/// Samples one KB of the given level and size; resamples until it is
/// consistent, every concept in it is satisfiable and no axiom is a
/// tautology.
pub fn sample_kb(
    level: u8,
    pool: &VocabularyPool,
    g: &GrammarConfig,
    size: &KbSizeRange,
    rng: &mut impl Rng,
    retries: usize,
) -> Result<KnowledgeBase, GenerationError> {
    let mut empty = Reasoner::new(&KnowledgeBase::default());
    for _ in 0..retries.max(1) {
        let vocab = pool.sample_subset(g, rng);
        let n_sub = rng.gen_range(size.subsumptions.clone());
        let n_fact = rng.gen_range(size.facts.clone());
        let mut facts: Vec<Axiom> = Vec::new();
        let mut guard = 0;
        while facts.len() < n_fact && guard < 50 * n_fact {
            guard += 1;
            let f = sample_fact(level, &vocab, g, rng);
            if !facts.contains(&f) {
                facts.push(f);
            }
        }
        let mut anchors = Vec::new();
        for f in &facts {
            if let Axiom::ConceptAssertion { concept, .. } = f {
                anchors_of(concept, &mut anchors);
            }
        }
        let all_forms = admissible_forms(level);
        let top_forms = forms(level.min(3));
        let mut tbox: Vec<Axiom> = Vec::new();
        let mut push = |ax: Axiom, tbox: &mut Vec<Axiom>, anchors: &mut Vec<Concept>| -> Result<bool, ReasonerError> {
            let tautology = match empty.entails_with(&[], &ax) {
                Ok(t) => t,
                Err(ReasonerError::BudgetExceeded) => true,
                Err(e) => return Err(e),
            };
            if tbox.contains(&ax) || tautology {
                return Ok(false);
            }
            if let Axiom::Subsumption { rhs, .. } = &ax {
                anchors_of(rhs, anchors);
            }
            tbox.push(ax);
            Ok(true)
        };
        // a backbone chain from a fact makes the target depth reachable
        let backbone = size.depth_target.min(n_sub);
        let mut cur = facts.iter().filter_map(|f| match f {
            Axiom::ConceptAssertion { concept, .. } => Some(concept.clone()),
            _ => None,
        }).collect::<Vec<_>>().choose(rng).cloned();
        let mut chain_atoms: std::collections::BTreeSet<String> =
            cur.iter().flat_map(|c| c.concept_names()).map(str::to_string).collect();
        let mut guard = 0;
        while let Some(lhs) = cur.clone() {
            if tbox.len() >= backbone || guard >= 50 * n_sub {
                break;
            }
            guard += 1;
            let ll = linguistic_level(&lhs) as u8;
            let shapes: Vec<(u8, u8)> = all_forms.iter().copied().filter(|f| f.0 == ll).collect();
            let Some(&(_, rl)) = shapes.choose(rng) else { break };
            let rhs = sample_concept(rl, &vocab, g, rng);
            // each link brings a new atom, so the chain cannot shortcut itself
            let fresh = rhs.concept_names().iter().any(|a| !chain_atoms.contains(*a));
            if !fresh || syntactically_trivial(&lhs, &rhs) {
                continue;
            }
            if push(Axiom::subsumption(lhs, rhs.clone()), &mut tbox, &mut anchors)? {
                chain_atoms.extend(rhs.concept_names().into_iter().map(str::to_string));
                cur = Some(rhs);
            }
        }
        while tbox.len() < n_sub && guard < 100 * n_sub {
            guard += 1;
            // at least one axiom carries the KB's own level
            let own = tbox.iter().any(|a| linguistic_pair(a).is_some_and(|p| top_forms.contains(&p)));
            let (ll, rl) = if own { *all_forms.choose(rng).unwrap() } else { *top_forms.choose(rng).unwrap() };
            let ax = sample_shaped(ll, rl, &vocab, g, rng, &anchors);
            push(ax, &mut tbox, &mut anchors)?;
        }
        if tbox.len() < n_sub || facts.len() < n_fact {
            continue;
        }
        let kb = KnowledgeBase::new(tbox, facts).expect("partitioned by construction").with_meta(pool.name.clone(), level);
        let mut r = Reasoner::new(&kb);
        match r.is_consistent() {
            Ok(true) => {}
            Ok(false) | Err(ReasonerError::BudgetExceeded) => continue,
            Err(e) => return Err(e.into()),
        }
        let concepts: Vec<&Concept> = kb.axioms().flat_map(|a| a.concepts()).collect();
        match check_all_satisfiable(&kb, concepts) {
            Ok(None) => return Ok(kb),
            Ok(Some(_)) | Err(ReasonerError::BudgetExceeded) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(GenerationError::Exhausted { attempts: retries })
}

impl fmt::Display for GrammarConfig {
    /// Renders the config in the grammar file format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{GRAMMAR_HEADER}")?;
        writeln!(f, "quantifier -> exists | {}", self.prob_exists)?;
        writeln!(f, "quantifier -> forall | {}", self.prob_forall)?;
        writeln!(f, "quantifier -> numres | {}", self.prob_numres)?;
        writeln!(f, "numres -> atleast | {}", self.prob_atleast)?;
        writeln!(f, "numres -> atmost | {}", 1.0 - self.prob_atleast)?;
        writeln!(f, "boolean -> and | {}", self.prob_and)?;
        writeln!(f, "boolean -> or | {}", self.prob_or)?;
        writeln!(f, "literal -> atom | {}", 1.0 - self.prob_negate_atom)?;
        writeln!(f, "literal -> negated | {}", self.prob_negate_atom)?;
        writeln!(f, "leaf -> literal | {}", 1.0 - self.prob_quantified_leaf)?;
        writeln!(f, "leaf -> quantified | {}", self.prob_quantified_leaf)?;
        writeln!(f, "compound -> boolean | {}", 1.0 - self.prob_quantified_compound)?;
        writeln!(f, "compound -> quantified | {}", self.prob_quantified_compound)?;
        writeln!(f, "max_atoms: {}", self.max_atoms)?;
        writeln!(f, "max_quantifier_nesting: {}", self.max_quantifier_nesting)?;
        writeln!(f, "numres_min: {}", self.numres_bounds.0)?;
        writeln!(f, "numres_max: {}", self.numres_bounds.1)?;
        writeln!(f, "anchor_bias: {}", self.anchor_bias)?;
        writeln!(f, "role_assertions: {}", self.prob_role_assertion)
    }
}

impl FromStr for GrammarConfig {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn shipped_pools_match_word_lists() {
        let a = VocabularyPool::pool_a();
        assert_eq!((a.concepts.len(), a.roles.len(), a.individuals.len()), (14, 5, 8));
        assert_eq!(a.concepts[..4], ["red", "blue", "green", "kind"]);
        let b = VocabularyPool::pool_b();
        assert_eq!((b.concepts.len(), b.roles.len(), b.individuals.len()), (8, 8, 8));
        assert_eq!(b.genre, Genre::People);
        assert!(VocabularyPool::parse("concept: x").is_err());
    }

    #[test]
    fn grammar_defaults_and_tweak() {
        let mut g = GrammarConfig::default();
        assert!((g.prob_forall - 0.33).abs() < 1e-9);
        assert!((g.prob_or - 0.50).abs() < 1e-9);
        g.apply_tweak("forall=0.70,or=0.80").unwrap();
        assert!((g.prob_forall - 0.70).abs() < 1e-9);
        assert!((g.prob_exists + g.prob_numres - 0.30).abs() < 1e-9);
        assert!((g.prob_and - 0.20).abs() < 1e-9);
        assert!(g.apply_tweak("forall=2").is_err());
        let round: GrammarConfig = g.to_string().parse().unwrap();
        assert!((round.prob_forall - g.prob_forall).abs() < 1e-9);
    }

    #[test]
    fn grammar_rejects_bad_lines() {
        assert!(matches!(GrammarConfig::parse("boolean -> and | 0.5"), Err(DataError::MissingHeader(_))));
        let bad = format!("{GRAMMAR_HEADER}\nboolean -> xor | 0.5\n");
        assert!(matches!(GrammarConfig::parse(&bad), Err(DataError::Line { line: 2, .. })));
        let unbalanced = format!("{GRAMMAR_HEADER}\nboolean -> and | 0.9\n");
        assert!(GrammarConfig::parse(&unbalanced).is_err());
    }

    #[test]
    fn concepts_respect_level_limits() {
        let pool = VocabularyPool::pool_a();
        let g = GrammarConfig::default();
        let mut r = rng(1);
        for level in 0..=3u8 {
            for _ in 0..250 {
                let c = sample_concept(level, &pool, &g, &mut r);
                assert_eq!(linguistic_level(&c), level as usize);
                assert!(quantifier_count(&c) <= level as usize + 1);
                assert!(quantifier_nesting(&c) <= 2);
                assert!(c.concept_names().len() <= 7);
                assert!(c.is_nnf());
            }
        }
    }

    #[test]
    fn level_zero_can_be_existential() {
        let pool = VocabularyPool::pool_b();
        let g = GrammarConfig::default();
        let mut r = rng(3);
        let found = (0..500).any(|_| matches!(sample_concept(0, &pool, &g, &mut r), Concept::Exists(..)));
        assert!(found);
    }

    #[test]
    fn axiom_shapes_follow_form_table() {
        let pool = VocabularyPool::pool_a();
        let g = GrammarConfig::default();
        let mut r = rng(5);
        for level in 0..=3u8 {
            for _ in 0..100 {
                let Axiom::Subsumption { lhs, rhs } = sample_axiom(level, &pool, &g, &mut r, &[]) else { panic!() };
                let shape = (linguistic_level(&lhs) as u8, linguistic_level(&rhs) as u8);
                assert!(forms(level).contains(&shape), "{shape:?} at level {level}");
                assert_ne!(shape, (3, 3));
            }
        }
    }

    #[test]
    fn anchors_are_preferred() {
        let pool = VocabularyPool::pool_a();
        let g = GrammarConfig::default();
        let mut r = rng(9);
        let anchor = Concept::atom("red");
        let hits = (0..1000)
            .filter(|_| match sample_axiom(0, &pool, &g, &mut r, std::slice::from_ref(&anchor)) {
                Axiom::Subsumption { lhs, .. } => lhs == anchor,
                _ => false,
            })
            .count();
        assert!(hits >= 780, "{hits}");
    }

    #[test]
    fn kbs_are_sized_consistent_and_deterministic() {
        let pool = VocabularyPool::pool_a();
        let g = GrammarConfig::default();
        for d in [0usize, 5] {
            let size = KbSizeRange::for_depth(d);
            let kb = sample_kb(1, &pool, &g, &size, &mut rng(11), 200).unwrap();
            assert!(size.subsumptions.contains(&kb.tbox().len()));
            assert!(size.facts.contains(&kb.abox().len()));
            assert!(crate::reasoner::is_consistent(&kb).unwrap());
            for name in kb.concept_names() {
                assert!(pool.concepts.contains(&name));
            }
            let again = sample_kb(1, &pool, &g, &size, &mut rng(11), 200).unwrap();
            assert_eq!(kb, again);
        }
    }

    #[test]
    fn child_seeds_differ() {
        let a = child_seed(7, 0, 0);
        assert_eq!(a, child_seed(7, 0, 0));
        assert_ne!(a, child_seed(7, 0, 1));
        assert_ne!(a, child_seed(7, 1, 0));
        assert_ne!(a, child_seed(8, 0, 0));
    }
}
