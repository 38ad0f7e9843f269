//! Template-based English verbalization of axioms, an inverse matcher, and
//! the SoftSymbolic / HardSymbolic re-encodings.
//!
//! Sentence shapes come from a template file; concept phrases are built
//! compositionally. Coordinations that could attach in two places are
//! marked with "both"/"either", which keeps the rendering injective on the
//! lower levels.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::Example;
use crate::generator::{DataError, Genre, VocabularyPool};
use crate::syntax::{nnf, parse_axiom, Axiom, Concept};

const TEMPLATES: &str = include_str!("../data/templates_en.txt");
const HARD_LEXICON: &str = include_str!("../data/lexicon_hard.txt");
const TEMPLATE_HEADER: &str = "# deltagen templates v1";
const HARD_HEADER: &str = "# deltagen hard lexicon v1";

const NUMBERS: [&str; 11] = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];
const PHRASE_WORDS: [&str; 15] =
    ["is", "are", "not", "and", "or", "both", "either", "that", "only", "none", "no", "at", "least", "most", "can"];

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum VerbalizeError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("unmapped token `{0}`")]
    UnmappedToken(String),
    #[error("no reading of `{0}`")]
    NoReading(String),
    #[error("ambiguous sentence `{0}`")]
    Ambiguous(String),
    #[error("unknown pool `{0}`")]
    UnknownPool(String),
    #[error("bad logical form `{0}`")]
    LogicalForm(String),
}

/// Sentence templates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Template {
    If,
    Plain,
    All,
    Can,
    Everyone,
    Fact,
    RoleFact,
}

impl Template {
    const ALL: [Template; 7] =
        [Template::If, Template::Plain, Template::All, Template::Can, Template::Everyone, Template::Fact, Template::RoleFact];

    fn key(self) -> &'static str {
        match self {
            Template::If => "if",
            Template::Plain => "plain",
            Template::All => "all",
            Template::Can => "can",
            Template::Everyone => "everyone",
            Template::Fact => "fact",
            Template::RoleFact => "role_fact",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Slot {
    Someone,
    Everyone,
    They,
    LhsSg,
    RhsSg,
    RhsThey,
    LhsNp,
    RhsPl,
    Role,
    FillerNp,
    Ind,
    Obj,
    Vp,
    RoleSg,
}

impl Slot {
    fn parse(name: &str) -> Option<Slot> {
        Some(match name {
            "someone" => Slot::Someone,
            "everyone" => Slot::Everyone,
            "they" => Slot::They,
            "lhs_sg" => Slot::LhsSg,
            "rhs_sg" => Slot::RhsSg,
            "rhs_they" => Slot::RhsThey,
            "lhs_np" => Slot::LhsNp,
            "rhs_pl" => Slot::RhsPl,
            "role" => Slot::Role,
            "filler_np" => Slot::FillerNp,
            "ind" => Slot::Ind,
            "obj" => Slot::Obj,
            "vp" => Slot::Vp,
            "role_sg" => Slot::RoleSg,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Slot(Slot),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Num {
    Sg,
    Pl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    And,
    Or,
}

impl Op {
    fn word(self) -> &'static str {
        match self {
            Op::And => "and",
            Op::Or => "or",
        }
    }

    fn marker(self) -> &'static str {
        match self {
            Op::And => "both",
            Op::Or => "either",
        }
    }
}

fn boolean(c: &Concept) -> Option<(Op, &Concept, &Concept)> {
    match c {
        Concept::And(l, r) => Some((Op::And, l, r)),
        Concept::Or(l, r) => Some((Op::Or, l, r)),
        _ => None,
    }
}

fn join(op: Op, l: Concept, r: Concept) -> Concept {
    match op {
        Op::And => Concept::and(l, r),
        Op::Or => Concept::or(l, r),
    }
}

/// Genre-dependent words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenreWords {
    pub someone: String,
    pub everyone: String,
    pub nobody: String,
    pub they: String,
    pub they_plural: bool,
    pub singular: String,
    pub plural: String,
}

/// Sentence templates plus the genre lexicon they are rendered with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateSet {
    pub genre: Genre,
    words: GenreWords,
    sentences: BTreeMap<Template, Vec<Tok>>,
}

impl TemplateSet {
    /// The shipped English templates.
    pub fn english(genre: Genre) -> Self {
        Self::parse(TEMPLATES, genre).expect("shipped templates are valid")
    }

    pub fn for_pool(pool: &VocabularyPool) -> Self {
        Self::english(pool.genre)
    }

    pub fn parse(text: &str, genre: Genre) -> Result<Self, DataError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == TEMPLATE_HEADER => {}
            _ => return Err(DataError::MissingHeader(TEMPLATE_HEADER)),
        }
        let prefix = match genre {
            Genre::People => "people.",
            Genre::Things => "things.",
        };
        let mut sentences = BTreeMap::new();
        let mut words: HashMap<String, String> = HashMap::new();
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: String| DataError::Line { line: i + 1, message: m };
            let (key, value) = line.split_once(':').ok_or_else(|| bad("expected `key: text`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(w) = key.strip_prefix(prefix) {
                words.insert(w.to_string(), value.to_string());
                continue;
            }
            if key.contains('.') {
                continue;
            }
            let t = Template::ALL
                .into_iter()
                .find(|t| t.key() == key)
                .ok_or_else(|| bad(format!("unknown template `{key}`")))?;
            let mut toks = Vec::new();
            for w in value.split_whitespace() {
                match w.strip_prefix('{').and_then(|w| w.strip_suffix('}')) {
                    Some(name) => toks.push(Tok::Slot(Slot::parse(name).ok_or_else(|| bad(format!("unknown slot `{name}`")))?)),
                    None => toks.push(Tok::Word(w.to_string())),
                }
            }
            sentences.insert(t, toks);
        }
        for t in Template::ALL {
            if !sentences.contains_key(&t) {
                return Err(DataError::Invalid(format!("missing template `{}`", t.key())));
            }
        }
        let get = |k: &str| words.get(k).cloned().ok_or_else(|| DataError::Invalid(format!("missing `{prefix}{k}`")));
        let words = GenreWords {
            someone: get("someone")?,
            everyone: get("everyone")?,
            nobody: get("nobody")?,
            they: get("they")?,
            they_plural: get("they_number")? == "plural",
            singular: get("singular")?,
            plural: get("plural")?,
        };
        Ok(TemplateSet { genre, words, sentences })
    }

    pub fn words(&self) -> &GenreWords {
        &self.words
    }

    /// Templates that can render `ax`.
    pub fn applicable(&self, ax: &Axiom) -> Vec<Template> {
        match ax {
            Axiom::Subsumption { lhs: Concept::Top, rhs: Concept::Forall(..) } => vec![Template::Can],
            Axiom::Subsumption { lhs: Concept::Top, .. } => vec![Template::Everyone],
            Axiom::Subsumption { .. } => vec![Template::If, Template::Plain, Template::All],
            Axiom::ConceptAssertion { .. } => vec![Template::Fact],
            Axiom::RoleAssertion { .. } => vec![Template::RoleFact],
        }
    }

    /// Renders `ax` with a template drawn uniformly from the applicable ones.
    pub fn verbalize(&self, ax: &Axiom, rng: &mut impl Rng) -> String {
        let t = *self.applicable(ax).choose(rng).expect("every axiom has a template");
        self.render(ax, t).expect("applicable template")
    }

    /// Renders `ax` with template `t`, or `None` if `t` does not apply.
    pub fn render(&self, ax: &Axiom, t: Template) -> Option<String> {
        if !self.applicable(ax).contains(&t) {
            return None;
        }
        let they = if self.words.they_plural { Num::Pl } else { Num::Sg };
        let mut out: Vec<String> = Vec::new();
        for tok in &self.sentences[&t] {
            let s = match tok {
                Tok::Word(w) => w.clone(),
                Tok::Slot(slot) => match (slot, ax) {
                    (Slot::Someone, _) => self.words.someone.clone(),
                    (Slot::Everyone, _) => self.words.everyone.clone(),
                    (Slot::They, _) => self.words.they.clone(),
                    (Slot::LhsSg, Axiom::Subsumption { lhs, .. }) => self.vp(lhs, Num::Sg),
                    (Slot::LhsNp, Axiom::Subsumption { lhs, .. }) => self.pl_np(lhs, false),
                    (Slot::RhsSg, Axiom::Subsumption { rhs, .. }) => self.vp(rhs, Num::Sg),
                    (Slot::RhsPl, Axiom::Subsumption { rhs, .. }) => self.vp(rhs, Num::Pl),
                    (Slot::RhsThey, Axiom::Subsumption { rhs, .. }) => self.vp(rhs, they),
                    (Slot::Role, Axiom::Subsumption { rhs: Concept::Forall(r, _), .. }) => base_form(r),
                    (Slot::FillerNp, Axiom::Subsumption { rhs: Concept::Forall(_, f), .. }) => self.pl_np(f, false),
                    (Slot::Ind, Axiom::ConceptAssertion { individual, .. }) => individual.clone(),
                    (Slot::Vp, Axiom::ConceptAssertion { concept, .. }) => self.vp(concept, Num::Sg),
                    (Slot::Ind, Axiom::RoleAssertion { subject, .. }) => subject.clone(),
                    (Slot::RoleSg, Axiom::RoleAssertion { role, .. }) => role.clone(),
                    (Slot::Obj, Axiom::RoleAssertion { object, .. }) => object.clone(),
                    _ => return None,
                },
            };
            out.push(s);
        }
        Some(capitalize(&out.join(" ")))
    }

    fn be(num: Num) -> &'static str {
        match num {
            Num::Sg => "is",
            Num::Pl => "are",
        }
    }

    fn verb(role: &str, num: Num) -> String {
        match num {
            Num::Sg => role.to_string(),
            Num::Pl => base_form(role),
        }
    }

    /// Adjectival rendering of Boolean combinations of literals.
    fn adj(&self, c: &Concept, parent: Option<(Op, bool)>) -> Option<String> {
        match c {
            Concept::Atomic(a) => Some(a.clone()),
            Concept::Not(inner) => match &**inner {
                Concept::Atomic(a) => Some(format!("not {a}")),
                _ => None,
            },
            Concept::And(..) | Concept::Or(..) => {
                let (op, l, r) = boolean(c)?;
                let s = format!("{} {} {}", self.adj(l, Some((op, true)))?, op.word(), self.adj(r, Some((op, false)))?);
                Some(if marked(op, parent) { format!("{} {s}", op.marker()) } else { s })
            }
            _ => None,
        }
    }

    fn vp(&self, c: &Concept, num: Num) -> String {
        self.vp_in(c, num, None)
    }

    fn vp_in(&self, c: &Concept, num: Num, parent: Option<(Op, bool)>) -> String {
        if let Some(a) = self.adj(c, parent) {
            return format!("{} {a}", Self::be(num));
        }
        let w = &self.words;
        match c {
            Concept::Top => format!("{} {}", Self::be(num), w.someone),
            Concept::Bottom => format!("{} {}", Self::be(num), w.nobody),
            Concept::Not(_) => self.vp_in(&nnf(c), num, parent),
            Concept::Exists(r, f) => format!("{} {}", Self::verb(r, num), self.some_np(f)),
            Concept::Forall(r, f) if **f == Concept::Bottom => format!("{} none", Self::verb(r, num)),
            Concept::Forall(r, f) => format!("{} only {}", Self::verb(r, num), self.pl_np(f, false)),
            Concept::AtLeast(n, r, f) => {
                format!("{} at least {} {}", Self::verb(r, num), number(*n), self.pl_np(f, *n == 1))
            }
            Concept::AtMost(0, r, f) if **f == Concept::Top => format!("{} {}", Self::verb(r, num), w.nobody),
            Concept::AtMost(0, r, f) => format!("{} no {}", Self::verb(r, num), self.pl_np(f, false)),
            Concept::AtMost(n, r, f) => {
                format!("{} at most {} {}", Self::verb(r, num), number(*n), self.pl_np(f, *n == 1))
            }
            Concept::And(..) | Concept::Or(..) => {
                let (op, l, r) = boolean(c).expect("boolean");
                let s = format!("{} {} {}", self.vp_in(l, num, Some((op, true))), op.word(), self.vp_in(r, num, Some((op, false))));
                if marked(op, parent) || self.open(l) {
                    format!("{} {s}", op.marker())
                } else {
                    s
                }
            }
            Concept::Atomic(_) => unreachable!("atoms are adjectival"),
        }
    }

    /// Whether the phrase for `c` ends in a relative clause or coordination
    /// that a following "and"/"or" could attach to.
    fn open(&self, c: &Concept) -> bool {
        let complex = |f: &Concept| !matches!(f, Concept::Top | Concept::Atomic(_));
        match c {
            Concept::Exists(_, f) => complex(f),
            Concept::Forall(_, f) => complex(f) && **f != Concept::Bottom,
            Concept::AtLeast(_, _, f) | Concept::AtMost(_, _, f) => complex(f),
            Concept::And(_, r) | Concept::Or(_, r) => self.adj(c, None).is_none() && self.open(r),
            Concept::Not(inner) if !matches!(**inner, Concept::Atomic(_)) => self.open(&nnf(c)),
            _ => false,
        }
    }

    /// "someone", "someone red" or "someone that …".
    fn some_np(&self, f: &Concept) -> String {
        let w = &self.words.someone;
        match f {
            Concept::Top => w.clone(),
            Concept::Atomic(a) => format!("{w} {a}"),
            other => format!("{w} that {}", self.vp(other, Num::Sg)),
        }
    }

    /// "people", "red people" or "people that …" (singular when `one`).
    fn pl_np(&self, f: &Concept, one: bool) -> String {
        let (noun, num) = if one { (&self.words.singular, Num::Sg) } else { (&self.words.plural, Num::Pl) };
        match f {
            Concept::Top => noun.clone(),
            Concept::Atomic(a) => format!("{a} {noun}"),
            other => format!("{noun} that {}", self.vp(other, num)),
        }
    }

    fn function_words(&self) -> HashSet<String> {
        let mut out: HashSet<String> = PHRASE_WORDS.iter().chain(NUMBERS.iter()).map(|w| w.to_string()).collect();
        let w = &self.words;
        for x in [&w.someone, &w.everyone, &w.nobody, &w.they, &w.singular, &w.plural] {
            out.insert(x.to_lowercase());
        }
        for toks in self.sentences.values() {
            for t in toks {
                if let Tok::Word(x) = t {
                    out.insert(x.to_lowercase());
                }
            }
        }
        out
    }
}

/// A coordination is marked when it is a left operand or sits under the
/// other operator; an unmarked chain reads right-nested.
fn marked(op: Op, parent: Option<(Op, bool)>) -> bool {
    parent.is_some_and(|(p, left)| left || p != op)
}

/// Third-person singular verb to its bare form.
pub fn base_form(verb: &str) -> String {
    for suffix in ["ches", "shes", "sses", "xes", "zes"] {
        if verb.ends_with(suffix) {
            return verb[..verb.len() - 2].to_string();
        }
    }
    if let Some(stem) = verb.strip_suffix("ies") {
        return format!("{stem}y");
    }
    verb.strip_suffix('s').unwrap_or(verb).to_string()
}

fn number(n: u32) -> String {
    NUMBERS.get(n as usize).map_or_else(|| n.to_string(), |w| w.to_string())
}

fn parse_number(w: &str) -> Option<u32> {
    NUMBERS.iter().position(|x| *x == w).map(|i| i as u32).or_else(|| w.parse().ok())
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Word count as used by the statistics.
pub fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Whether the sentence contains the word "not".
pub fn has_not(s: &str) -> bool {
    s.split_whitespace().any(|w| w.eq_ignore_ascii_case("not"))
}

// ---------------------------------------------------------------------------
// inverse matcher

#[derive(Clone, Debug, Default)]
struct Bind {
    lhs: Option<Concept>,
    rhs: Option<Concept>,
    role: Option<String>,
    ind: Option<String>,
    obj: Option<String>,
}

struct Parser<'a> {
    ts: &'a TemplateSet,
    raw: Vec<&'a str>,
    low: Vec<String>,
    concepts: HashMap<String, String>,
    roles_sg: HashMap<String, String>,
    roles_base: HashMap<String, String>,
    individuals: HashSet<String>,
    memo: HashMap<(u8, usize, bool), Vec<(Concept, usize)>>,
}

impl<'a> Parser<'a> {
    fn new(ts: &'a TemplateSet, pool: &VocabularyPool, text: &'a str) -> Self {
        let raw: Vec<&str> = text.split_whitespace().collect();
        let low = raw.iter().map(|w| w.to_lowercase()).collect();
        Parser {
            ts,
            raw,
            low,
            concepts: pool.concepts.iter().map(|c| (c.to_lowercase(), c.clone())).collect(),
            roles_sg: pool.roles.iter().map(|r| (r.to_lowercase(), r.clone())).collect(),
            roles_base: pool.roles.iter().map(|r| (base_form(r).to_lowercase(), r.clone())).collect(),
            individuals: pool.individuals.iter().cloned().collect(),
            memo: HashMap::new(),
        }
    }

    fn is(&self, i: usize, w: &str) -> bool {
        self.low.get(i).is_some_and(|x| x == &w.to_lowercase())
    }

    fn concept(&self, i: usize) -> Option<Concept> {
        self.low.get(i).and_then(|w| self.concepts.get(w)).map(|c| Concept::atom(c.clone()))
    }

    fn role(&self, i: usize, num: Num) -> Option<String> {
        let table = match num {
            Num::Sg => &self.roles_sg,
            Num::Pl => &self.roles_base,
        };
        self.low.get(i).and_then(|w| table.get(w)).cloned()
    }

    fn adj_item(&mut self, i: usize) -> Vec<(Concept, usize)> {
        let mut out = Vec::new();
        if self.is(i, "not") {
            if let Some(c) = self.concept(i + 1) {
                out.push((Concept::not(c), i + 2));
            }
        }
        if let Some(c) = self.concept(i) {
            out.push((c, i + 1));
        }
        for op in [Op::And, Op::Or] {
            if self.is(i, op.marker()) {
                for (a, j) in self.adj_seq(i + 1) {
                    if self.is(j, op.word()) {
                        for (b, k) in self.adj_seq(j + 1) {
                            out.push((join(op, a.clone(), b), k));
                        }
                    }
                }
            }
        }
        out
    }

    fn adj_seq(&mut self, i: usize) -> Vec<(Concept, usize)> {
        if let Some(r) = self.memo.get(&(0, i, false)) {
            return r.clone();
        }
        let mut out = Vec::new();
        for (a, j) in self.adj_item(i) {
            for op in [Op::And, Op::Or] {
                if self.is(j, op.word()) {
                    for (b, k) in self.adj_seq(j + 1) {
                        out.push((join(op, a.clone(), b), k));
                    }
                }
            }
            out.push((a, j));
        }
        self.memo.insert((0, i, false), out.clone());
        out
    }

    fn np(&mut self, i: usize, one: bool) -> Vec<(Concept, usize)> {
        let w = self.ts.words.clone();
        let (noun, num) = if one { (w.singular, Num::Sg) } else { (w.plural, Num::Pl) };
        let mut out = Vec::new();
        if self.is(i, &noun) {
            out.push((Concept::Top, i + 1));
            if self.is(i + 1, "that") {
                out.extend(self.vp(i + 2, num));
            }
        }
        if let Some(c) = self.concept(i) {
            if self.is(i + 1, &noun) {
                out.push((c, i + 2));
            }
        }
        out
    }

    fn vp(&mut self, i: usize, num: Num) -> Vec<(Concept, usize)> {
        let key = (1, i, num == Num::Sg);
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let w = self.ts.words.clone();
        let mut base: Vec<(Concept, usize)> = Vec::new();
        if self.is(i, TemplateSet::be(num)) {
            base.extend(self.adj_seq(i + 1));
            if self.is(i + 1, &w.someone) {
                base.push((Concept::Top, i + 2));
            }
            if self.is(i + 1, &w.nobody) {
                base.push((Concept::Bottom, i + 2));
            }
        }
        if let Some(r) = self.role(i, num) {
            let j = i + 1;
            if self.is(j, &w.someone) {
                base.push((Concept::exists(r.clone(), Concept::Top), j + 1));
                if let Some(c) = self.concept(j + 1) {
                    base.push((Concept::exists(r.clone(), c), j + 2));
                }
                if self.is(j + 1, "that") {
                    for (f, k) in self.vp(j + 2, Num::Sg) {
                        base.push((Concept::exists(r.clone(), f), k));
                    }
                }
            }
            if self.is(j, "only") {
                for (f, k) in self.np(j + 1, false) {
                    base.push((Concept::forall(r.clone(), f), k));
                }
            }
            if self.is(j, "none") {
                base.push((Concept::forall(r.clone(), Concept::Bottom), j + 1));
            }
            if self.is(j, &w.nobody) {
                base.push((Concept::at_most(0, r.clone(), Concept::Top), j + 1));
            }
            if self.is(j, "no") {
                for (f, k) in self.np(j + 1, false) {
                    base.push((Concept::at_most(0, r.clone(), f), k));
                }
            }
            if self.is(j, "at") {
                let n = self.low.get(j + 2).and_then(|x| parse_number(x));
                if let Some(n) = n {
                    for (f, k) in self.np(j + 3, n == 1) {
                        if self.is(j + 1, "least") && n > 0 {
                            base.push((Concept::at_least(n, r.clone(), f.clone()), k));
                        }
                        if self.is(j + 1, "most") {
                            base.push((Concept::at_most(n, r.clone(), f), k));
                        }
                    }
                }
            }
        }
        for op in [Op::And, Op::Or] {
            if self.is(i, op.marker()) {
                for (a, j) in self.vp(i + 1, num) {
                    if self.is(j, op.word()) {
                        for (b, k) in self.vp(j + 1, num) {
                            base.push((join(op, a.clone(), b), k));
                        }
                    }
                }
                // a marked adjectival coordination after the copula
            }
        }
        let mut out = Vec::new();
        for (a, j) in base {
            for op in [Op::And, Op::Or] {
                if self.is(j, op.word()) {
                    for (b, k) in self.vp(j + 1, num) {
                        out.push((join(op, a.clone(), b), k));
                    }
                }
            }
            out.push((a, j));
        }
        self.memo.insert(key, out.clone());
        out
    }

    fn slot(&mut self, slot: Slot, i: usize) -> Vec<(Bind, usize)> {
        let w = self.ts.words.clone();
        let they = if w.they_plural { Num::Pl } else { Num::Sg };
        let lit = |p: &Self, word: &str| if p.is(i, word) { vec![(Bind::default(), i + 1)] } else { vec![] };
        let concepts = |v: Vec<(Concept, usize)>, lhs: bool| -> Vec<(Bind, usize)> {
            v.into_iter()
                .map(|(c, k)| {
                    let mut b = Bind::default();
                    if lhs {
                        b.lhs = Some(c)
                    } else {
                        b.rhs = Some(c)
                    }
                    (b, k)
                })
                .collect()
        };
        match slot {
            Slot::Someone => lit(self, &w.someone),
            Slot::Everyone => lit(self, &w.everyone),
            Slot::They => lit(self, &w.they),
            Slot::LhsSg => {
                let v = self.vp(i, Num::Sg);
                concepts(v, true)
            }
            Slot::LhsNp => {
                let v = self.np(i, false);
                concepts(v, true)
            }
            Slot::RhsSg | Slot::Vp => {
                let v = self.vp(i, Num::Sg);
                concepts(v, false)
            }
            Slot::RhsPl => {
                let v = self.vp(i, Num::Pl);
                concepts(v, false)
            }
            Slot::RhsThey => {
                let v = self.vp(i, they);
                concepts(v, false)
            }
            Slot::FillerNp => {
                let v = self.np(i, false);
                concepts(v, false)
            }
            Slot::Role | Slot::RoleSg => {
                let num = if slot == Slot::Role { Num::Pl } else { Num::Sg };
                match self.role(i, num) {
                    Some(r) => vec![(Bind { role: Some(r), ..Bind::default() }, i + 1)],
                    None => vec![],
                }
            }
            Slot::Ind | Slot::Obj => match self.raw.get(i) {
                Some(x) if self.individuals.contains(*x) => {
                    let mut b = Bind::default();
                    if slot == Slot::Ind {
                        b.ind = Some(x.to_string())
                    } else {
                        b.obj = Some(x.to_string())
                    }
                    vec![(b, i + 1)]
                }
                _ => vec![],
            },
        }
    }

    fn matches(&mut self, toks: &[Tok], i: usize) -> Vec<Bind> {
        let Some((first, rest)) = toks.split_first() else {
            return if i == self.raw.len() { vec![Bind::default()] } else { vec![] };
        };
        let heads = match first {
            Tok::Word(w) => {
                if self.is(i, w) {
                    vec![(Bind::default(), i + 1)]
                } else {
                    vec![]
                }
            }
            Tok::Slot(s) => self.slot(*s, i),
        };
        let mut out = Vec::new();
        for (h, j) in heads {
            for tail in self.matches(rest, j) {
                out.push(Bind {
                    lhs: h.lhs.clone().or(tail.lhs),
                    rhs: h.rhs.clone().or(tail.rhs),
                    role: h.role.clone().or(tail.role),
                    ind: h.ind.clone().or(tail.ind),
                    obj: h.obj.clone().or(tail.obj),
                });
            }
        }
        out
    }
}

/// Recovers the axiom a sentence was rendered from. Every template is
/// tried; a reading counts only if rendering it with the same template
/// gives back the sentence.
pub fn parse_sentence(text: &str, ts: &TemplateSet, pool: &VocabularyPool) -> Result<Axiom, VerbalizeError> {
    let mut found: Vec<Axiom> = Vec::new();
    for (t, toks) in &ts.sentences {
        let mut p = Parser::new(ts, pool, text);
        for b in p.matches(toks, 0) {
            let ax = match (t, b) {
                (Template::If | Template::Plain | Template::All, Bind { lhs: Some(l), rhs: Some(r), .. }) => {
                    Axiom::subsumption(l, r)
                }
                (Template::Can, Bind { role: Some(role), rhs: Some(f), .. }) => {
                    Axiom::subsumption(Concept::Top, Concept::forall(role, f))
                }
                (Template::Everyone, Bind { rhs: Some(r), .. }) => Axiom::subsumption(Concept::Top, r),
                (Template::Fact, Bind { ind: Some(a), rhs: Some(c), .. }) => Axiom::fact(c, a),
                (Template::RoleFact, Bind { ind: Some(a), role: Some(r), obj: Some(o), .. }) => Axiom::role_fact(r, a, o),
                _ => continue,
            };
            if ts.render(&ax, *t).as_deref() == Some(text) && !found.contains(&ax) {
                found.push(ax);
            }
        }
    }
    match found.len() {
        0 => Err(VerbalizeError::NoReading(text.to_string())),
        1 => Ok(found.pop().unwrap()),
        _ => Err(VerbalizeError::Ambiguous(text.to_string())),
    }
}

// ---------------------------------------------------------------------------
// symbolic re-encodings

/// First-appearance numbering of individuals (`a_i`), concepts (`C_i`) and
/// roles (`R_i`).
#[derive(Clone, Debug, Default)]
pub struct SymbolMap {
    individuals: HashMap<String, usize>,
    concepts: HashMap<String, usize>,
    roles: HashMap<String, usize>,
}

impl SymbolMap {
    fn get(table: &mut HashMap<String, usize>, key: &str, prefix: &str) -> String {
        let n = table.len() + 1;
        let i = *table.entry(key.to_string()).or_insert(n);
        format!("{prefix}_{i}")
    }

    pub fn individual(&mut self, name: &str) -> String {
        Self::get(&mut self.individuals, name, "a")
    }

    pub fn concept(&mut self, name: &str) -> String {
        Self::get(&mut self.concepts, name, "C")
    }

    pub fn role(&mut self, name: &str) -> String {
        Self::get(&mut self.roles, name, "R")
    }
}

fn symbol_class(tok: &str) -> Option<char> {
    let (p, n) = tok.split_once('_')?;
    if !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) && matches!(p, "a" | "C" | "R") {
        p.chars().next()
    } else {
        None
    }
}

/// Replaces every pool word in `sentences` by its symbol, numbering
/// symbols by first appearance across all sentences in order.
pub fn soft_symbolic_sentences(
    sentences: &[String],
    ts: &TemplateSet,
    pool: &VocabularyPool,
) -> Result<Vec<String>, VerbalizeError> {
    let function = ts.function_words();
    let concepts: HashMap<String, &String> = pool.concepts.iter().map(|c| (c.to_lowercase(), c)).collect();
    let mut roles: HashMap<String, &String> = pool.roles.iter().map(|r| (r.to_lowercase(), r)).collect();
    for r in &pool.roles {
        roles.insert(base_form(r).to_lowercase(), r);
    }
    let mut map = SymbolMap::default();
    let mut out = Vec::with_capacity(sentences.len());
    for s in sentences {
        let mut words = Vec::new();
        for tok in s.split_whitespace() {
            let low = tok.to_lowercase();
            let w = if pool.individuals.iter().any(|i| i == tok) {
                map.individual(tok)
            } else if let Some(c) = concepts.get(&low) {
                map.concept(c)
            } else if let Some(r) = roles.get(&low) {
                map.role(r)
            } else if let Some(class) = symbol_class(tok) {
                match class {
                    'a' => map.individual(tok),
                    'C' => map.concept(tok),
                    _ => map.role(tok),
                }
            } else if function.contains(&low) {
                tok.to_string()
            } else {
                return Err(VerbalizeError::UnmappedToken(tok.to_string()));
            };
            words.push(w);
        }
        out.push(words.join(" "));
    }
    Ok(out)
}

/// Description-logic surface forms for the HardSymbolic translation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HardLexicon {
    forms: HashMap<String, String>,
}

impl Default for HardLexicon {
    fn default() -> Self {
        Self::parse(HARD_LEXICON).expect("shipped lexicon is valid")
    }
}

impl HardLexicon {
    const KEYS: [&'static str; 13] = [
        "subsumption", "fact", "role_fact", "top", "bottom", "not", "and", "or", "exists", "forall", "atleast",
        "atmost", "subsumption",
    ];

    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == HARD_HEADER => {}
            _ => return Err(DataError::MissingHeader(HARD_HEADER)),
        }
        let mut forms = HashMap::new();
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(": ")
                .ok_or_else(|| DataError::Line { line: i + 1, message: "expected `key: form`".into() })?;
            if !Self::KEYS.contains(&k.trim()) {
                return Err(DataError::Line { line: i + 1, message: format!("unknown form `{k}`") });
            }
            forms.insert(k.trim().to_string(), v.trim().to_string());
        }
        for k in Self::KEYS {
            if !forms.contains_key(k) {
                return Err(DataError::Invalid(format!("missing form `{k}`")));
            }
        }
        Ok(HardLexicon { forms })
    }

    fn fill(&self, key: &str, args: &[(&str, &str)]) -> String {
        let mut s = self.forms[key].clone();
        for (k, v) in args {
            s = s.replace(&format!("{{{k}}}"), v);
        }
        s
    }

    fn operand(&self, c: &Concept, map: &mut SymbolMap, wrap: bool) -> String {
        let s = self.concept(c, map);
        if wrap {
            format!("({s})")
        } else {
            s
        }
    }

    pub fn concept(&self, c: &Concept, map: &mut SymbolMap) -> String {
        let literal = |c: &Concept| matches!(c, Concept::Atomic(_) | Concept::Top | Concept::Bottom | Concept::Not(_));
        match c {
            Concept::Atomic(a) => map.concept(a),
            Concept::Top => self.fill("top", &[]),
            Concept::Bottom => self.fill("bottom", &[]),
            Concept::Not(x) => {
                let inner = self.operand(x, map, !literal(x));
                self.fill("not", &[("c", &inner)])
            }
            Concept::And(l, r) | Concept::Or(l, r) => {
                let key = if matches!(c, Concept::And(..)) { "and" } else { "or" };
                let l = self.operand(l, map, !literal(l));
                let r = self.operand(r, map, !literal(r));
                self.fill(key, &[("l", &l), ("r", &r)])
            }
            Concept::Exists(r, f) | Concept::Forall(r, f) => {
                let key = if matches!(c, Concept::Exists(..)) { "exists" } else { "forall" };
                let role = map.role(r);
                let f = self.operand(f, map, boolean(f).is_some());
                self.fill(key, &[("role", &role), ("filler", &f)])
            }
            Concept::AtLeast(n, r, f) | Concept::AtMost(n, r, f) => {
                let key = if matches!(c, Concept::AtLeast(..)) { "atleast" } else { "atmost" };
                let role = map.role(r);
                let f = self.operand(f, map, boolean(f).is_some());
                self.fill(key, &[("n", &n.to_string()), ("role", &role), ("filler", &f)])
            }
        }
    }

    pub fn axiom(&self, ax: &Axiom, map: &mut SymbolMap) -> String {
        match ax {
            Axiom::Subsumption { lhs, rhs } => {
                let l = self.concept(lhs, map);
                let r = self.concept(rhs, map);
                self.fill("subsumption", &[("lhs", &l), ("rhs", &r)])
            }
            Axiom::ConceptAssertion { concept, individual } => {
                let a = map.individual(individual);
                let c = self.concept(concept, map);
                self.fill("fact", &[("ind", &a), ("concept", &c)])
            }
            Axiom::RoleAssertion { role, subject, object } => {
                let a = map.individual(subject);
                let r = map.role(role);
                let b = map.individual(object);
                self.fill("role_fact", &[("ind", &a), ("role", &r), ("obj", &b)])
            }
        }
    }
}

/// Renames pool words in context and question to indexed symbols; labels
/// and logical forms are untouched.
pub fn soft_symbolic(example: &Example) -> Result<Example, VerbalizeError> {
    let pool = VocabularyPool::by_name(&example.pool).ok_or_else(|| VerbalizeError::UnknownPool(example.pool.clone()))?;
    let ts = TemplateSet::for_pool(&pool);
    let mut all = example.context.clone();
    all.push(example.question.clone());
    let mut out = soft_symbolic_sentences(&all, &ts, &pool)?;
    let question = out.pop().unwrap();
    Ok(Example { context: out, question, ..example.clone() })
}

/// Re-verbalizes context and question from their logical forms with the
/// description-logic lexicon and SoftSymbolic names.
pub fn hard_symbolic(example: &Example) -> Result<Example, VerbalizeError> {
    hard_symbolic_with(example, &HardLexicon::default())
}

pub fn hard_symbolic_with(example: &Example, lex: &HardLexicon) -> Result<Example, VerbalizeError> {
    let parse = |s: &str| parse_axiom(s).map_err(|_| VerbalizeError::LogicalForm(s.to_string()));
    let mut map = SymbolMap::default();
    let mut context = Vec::with_capacity(example.kb_lf.len());
    for lf in &example.kb_lf {
        context.push(lex.axiom(&parse(lf)?, &mut map));
    }
    let question = lex.axiom(&parse(&example.query_lf)?, &mut map);
    Ok(Example { context, question, ..example.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{sample_axiom, sample_fact, GrammarConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ax(s: &str) -> Axiom {
        parse_axiom(s).unwrap()
    }

    fn people() -> TemplateSet {
        TemplateSet::english(Genre::People)
    }

    #[test]
    fn printed_examples() {
        let ts = people();
        assert_eq!(
            ts.render(&ax("(likes some (likes only kind))(Bob)"), Template::Fact).unwrap(),
            "Bob likes someone that likes only kind people"
        );
        assert_eq!(
            ts.render(&ax("enthusiastic subclassof (supports some enthusiastic)"), Template::Plain).unwrap(),
            "Enthusiastic people support someone enthusiastic"
        );
        assert_eq!(ts.render(&ax("(admires only Nothing)(Anne)"), Template::Fact).unwrap(), "Anne admires none");
        assert_eq!(
            ts.render(&ax("(red and green) subclassof (red or green)"), Template::If).unwrap(),
            "If someone is red and green then they are red or green"
        );
        assert_eq!(
            ts.render(&ax("Thing subclassof (likes only kind)"), Template::Can).unwrap(),
            "Someone can like only kind people"
        );
    }

    #[test]
    fn templates_and_numbers() {
        let ts = people();
        let a = ax("(red and (not big)) subclassof (atleast 2 chases furry)");
        assert_eq!(ts.render(&a, Template::All).unwrap(), "All people that are red and not big chase at least two furry people");
        assert_eq!(ts.render(&a, Template::Fact), None);
        assert_eq!(
            ts.render(&ax("(atmost 1 eats (not cold))(Erin)"), Template::Fact).unwrap(),
            "Erin eats at most one person that is not cold"
        );
        assert_eq!(ts.render(&ax("(atmost 0 eats Thing)(Erin)"), Template::Fact).unwrap(), "Erin eats nobody");
        assert_eq!(ts.render(&ax("likes(Anne, Bob)"), Template::RoleFact).unwrap(), "Anne likes Bob");
        let things = TemplateSet::english(Genre::Things);
        assert_eq!(things.render(&ax("red subclassof kind"), Template::If).unwrap(), "If something is red then it is kind");
    }

    #[test]
    fn markers_disambiguate_attachment() {
        let ts = people();
        let outer = ax("((likes some (not red)) and (loves some (not big)))(Anne)");
        let inner = ax("(likes some ((not red) and (loves some (not big))))(Anne)");
        let (a, b) = (ts.render(&outer, Template::Fact).unwrap(), ts.render(&inner, Template::Fact).unwrap());
        assert_eq!(a, "Anne both likes someone that is not red and loves someone that is not big");
        assert_ne!(a, b);
        let pool = VocabularyPool::pool_a();
        assert_eq!(parse_sentence(&a, &ts, &pool).unwrap(), outer);
        assert_eq!(parse_sentence(&b, &ts, &pool).unwrap(), inner);
        let mixed = ax("(red and (kind or big))(Anne)");
        assert_eq!(ts.render(&mixed, Template::Fact).unwrap(), "Anne is red and either kind or big");
    }

    #[test]
    fn verb_forms() {
        assert_eq!(base_form("likes"), "like");
        assert_eq!(base_form("chases"), "chase");
        assert_eq!(base_form("watches"), "watch");
        assert_eq!(base_form("carries"), "carry");
        assert_eq!(base_form("supervises"), "supervise");
    }

    #[test]
    fn round_trip_low_levels() {
        let g = GrammarConfig::default();
        for pool in [VocabularyPool::pool_a(), VocabularyPool::pool_b()] {
            let ts = TemplateSet::for_pool(&pool);
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            for i in 0..600 {
                let level = (i % 2) as u8;
                let a = if i % 3 == 0 { sample_fact(level, &pool, &g, &mut rng) } else { sample_axiom(level, &pool, &g, &mut rng, &[]) };
                for t in ts.applicable(&a) {
                    let s = ts.render(&a, t).unwrap();
                    assert_eq!(parse_sentence(&s, &ts, &pool), Ok(a.clone()), "{s}");
                }
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let ts = people();
        let a = ax("red subclassof kind");
        let x = ts.verbalize(&a, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(x, ts.verbalize(&a, &mut ChaCha8Rng::seed_from_u64(9)));
    }

    #[test]
    fn soft_symbols_by_first_appearance() {
        let ts = people();
        let pool = VocabularyPool::pool_a();
        let s = vec!["Anne is smart".to_string(), "Bob likes Anne".to_string(), "Smart people like someone red".to_string()];
        let out = soft_symbolic_sentences(&s, &ts, &pool).unwrap();
        assert_eq!(out, ["a_1 is C_1", "a_2 R_1 a_1", "C_1 people R_1 someone C_2"]);
        assert_eq!(soft_symbolic_sentences(&out, &ts, &pool).unwrap(), out);
        let bad = vec!["Anne is purple".to_string()];
        assert_eq!(soft_symbolic_sentences(&bad, &ts, &pool), Err(VerbalizeError::UnmappedToken("purple".into())));
    }

    #[test]
    fn hard_lexicon_forms() {
        let lex = HardLexicon::default();
        let mut m = SymbolMap::default();
        assert_eq!(lex.axiom(&ax("A subclassof B"), &mut m), "C_1 is subsumed by C_2");
        let mut m = SymbolMap::default();
        assert_eq!(lex.axiom(&ax("(likes some A)(Anne)"), &mut m), "a_1: exists R_1 C_1");
        let mut m = SymbolMap::default();
        assert_eq!(
            lex.axiom(&ax("((not A) and (likes only (A or B))) subclassof B"), &mut m),
            "complement C_1 intersection (for all R_1 (C_1 union C_2)) is subsumed by C_2"
        );
    }
}
