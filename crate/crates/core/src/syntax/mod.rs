//! Abstract syntax for ALCQ concepts, axioms and knowledge bases.
//!
//! The textual form is a keyword-based infix language:
//!
//! ```text
//! concept := atom | "Thing" | "Nothing" | "not" concept
//!          | concept ("and" | "or") concept
//!          | role ("some" | "only") concept
//!          | ("atleast" | "atmost") INT role concept
//!          | "(" concept ")"
//! axiom   := concept "subclassof" concept
//!          | concept "(" individual ")"
//!          | role "(" individual "," individual ")"
//! ```
//!
//! `or` binds weakest, then `and`; the prefix operators bind tightest, so
//! `likes some red and green` reads as `(likes some red) and green`.
//! [`Concept`] and [`Axiom`] print fully parenthesized, which makes the
//! printed form reparse to a structurally equal tree.

mod measure;
mod nnf;
mod parse;
mod render;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use measure::{linguistic_level, quantifier_count, quantifier_nesting};
pub use nnf::{negate_fact, nnf, NegateError};
pub use parse::{parse_axiom, parse_concept, ParseError};

/// An ALCQ concept expression.
///
/// Boolean constructors are binary. Cardinalities on [`Concept::AtLeast`]
/// are at least one; [`Concept::AtMost`] accepts zero ("none").
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Concept {
    Atomic(String),
    Top,
    Bottom,
    Not(Box<Concept>),
    And(Box<Concept>, Box<Concept>),
    Or(Box<Concept>, Box<Concept>),
    Forall(String, Box<Concept>),
    Exists(String, Box<Concept>),
    AtLeast(u32, String, Box<Concept>),
    AtMost(u32, String, Box<Concept>),
}

impl Concept {
    pub fn atom(name: impl Into<String>) -> Self {
        Concept::Atomic(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Concept) -> Self {
        Concept::Not(Box::new(c))
    }

    pub fn and(l: Concept, r: Concept) -> Self {
        Concept::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Concept, r: Concept) -> Self {
        Concept::Or(Box::new(l), Box::new(r))
    }

    pub fn forall(role: impl Into<String>, filler: Concept) -> Self {
        Concept::Forall(role.into(), Box::new(filler))
    }

    pub fn exists(role: impl Into<String>, filler: Concept) -> Self {
        Concept::Exists(role.into(), Box::new(filler))
    }

    pub fn at_least(n: u32, role: impl Into<String>, filler: Concept) -> Self {
        assert!(n >= 1, "at-least restriction needs a cardinality of at least one");
        Concept::AtLeast(n, role.into(), Box::new(filler))
    }

    pub fn at_most(n: u32, role: impl Into<String>, filler: Concept) -> Self {
        Concept::AtMost(n, role.into(), Box::new(filler))
    }

    /// Whether negation occurs only directly above atomic concepts.
    pub fn is_nnf(&self) -> bool {
        match self {
            Concept::Atomic(_) | Concept::Top | Concept::Bottom => true,
            Concept::Not(inner) => matches!(**inner, Concept::Atomic(_)),
            Concept::And(l, r) | Concept::Or(l, r) => l.is_nnf() && r.is_nnf(),
            Concept::Forall(_, f)
            | Concept::Exists(_, f)
            | Concept::AtLeast(_, _, f)
            | Concept::AtMost(_, _, f) => f.is_nnf(),
        }
    }

    /// Number of nodes in the expression tree.
    pub fn size(&self) -> usize {
        match self {
            Concept::Atomic(_) | Concept::Top | Concept::Bottom => 1,
            Concept::Not(inner) => 1 + inner.size(),
            Concept::And(l, r) | Concept::Or(l, r) => 1 + l.size() + r.size(),
            Concept::Forall(_, f)
            | Concept::Exists(_, f)
            | Concept::AtLeast(_, _, f)
            | Concept::AtMost(_, _, f) => 1 + f.size(),
        }
    }

    /// Visits every subterm, root first.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Concept)) {
        visit(self);
        match self {
            Concept::Atomic(_) | Concept::Top | Concept::Bottom => {}
            Concept::Not(inner) => inner.walk(visit),
            Concept::And(l, r) | Concept::Or(l, r) => {
                l.walk(visit);
                r.walk(visit);
            }
            Concept::Forall(_, f)
            | Concept::Exists(_, f)
            | Concept::AtLeast(_, _, f)
            | Concept::AtMost(_, _, f) => f.walk(visit),
        }
    }

    /// Atomic concept names occurring in the expression.
    pub fn concept_names(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.walk(&mut |c| {
            if let Concept::Atomic(name) = c {
                out.insert(name.as_str());
            }
        });
        out
    }

    /// Role names occurring in the expression.
    pub fn role_names(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.walk(&mut |c| match c {
            Concept::Forall(r, _)
            | Concept::Exists(r, _)
            | Concept::AtLeast(_, r, _)
            | Concept::AtMost(_, r, _) => {
                out.insert(r.as_str());
            }
            _ => {}
        });
        out
    }

    /// True for `A` and `not A`.
    pub fn is_literal(&self) -> bool {
        match self {
            Concept::Atomic(_) => true,
            Concept::Not(inner) => matches!(**inner, Concept::Atomic(_)),
            _ => false,
        }
    }

    pub fn contains_negation(&self) -> bool {
        let mut found = false;
        self.walk(&mut |c| {
            if matches!(c, Concept::Not(_)) {
                found = true;
            }
        });
        found
    }
}

/// A subsumption axiom, concept assertion or role assertion.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axiom {
    Subsumption { lhs: Concept, rhs: Concept },
    ConceptAssertion { concept: Concept, individual: String },
    RoleAssertion { role: String, subject: String, object: String },
}

impl Axiom {
    pub fn subsumption(lhs: Concept, rhs: Concept) -> Self {
        Axiom::Subsumption { lhs, rhs }
    }

    pub fn fact(concept: Concept, individual: impl Into<String>) -> Self {
        Axiom::ConceptAssertion { concept, individual: individual.into() }
    }

    pub fn role_fact(
        role: impl Into<String>,
        subject: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Axiom::RoleAssertion { role: role.into(), subject: subject.into(), object: object.into() }
    }

    pub fn is_subsumption(&self) -> bool {
        matches!(self, Axiom::Subsumption { .. })
    }

    pub fn is_assertion(&self) -> bool {
        !self.is_subsumption()
    }

    /// Concept expressions appearing directly in the axiom.
    pub fn concepts(&self) -> Vec<&Concept> {
        match self {
            Axiom::Subsumption { lhs, rhs } => vec![lhs, rhs],
            Axiom::ConceptAssertion { concept, .. } => vec![concept],
            Axiom::RoleAssertion { .. } => Vec::new(),
        }
    }

    pub fn individuals(&self) -> Vec<&str> {
        match self {
            Axiom::Subsumption { .. } => Vec::new(),
            Axiom::ConceptAssertion { individual, .. } => vec![individual.as_str()],
            Axiom::RoleAssertion { subject, object, .. } => vec![subject.as_str(), object.as_str()],
        }
    }

    /// Every concept, role and individual name in the axiom, tagged by kind.
    pub fn signature(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for c in self.concepts() {
            out.extend(c.concept_names().into_iter().map(|n| Symbol::Concept(n.to_string())));
            out.extend(c.role_names().into_iter().map(|n| Symbol::Role(n.to_string())));
        }
        if let Axiom::RoleAssertion { role, .. } = self {
            out.insert(Symbol::Role(role.clone()));
        }
        out.extend(self.individuals().into_iter().map(|n| Symbol::Individual(n.to_string())));
        out
    }

    /// Largest linguistic level among the axiom's concept expressions.
    pub fn level(&self) -> usize {
        self.concepts().into_iter().map(linguistic_level).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        self.concepts().into_iter().map(Concept::size).sum::<usize>() + 1
    }
}

/// A vocabulary symbol, tagged with its syntactic category.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Concept(String),
    Role(String),
    Individual(String),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum KbError {
    #[error("tbox entry {0} is not a subsumption axiom")]
    NotSubsumption(usize),
    #[error("abox entry {0} is not an assertion")]
    NotAssertion(usize),
    #[error("axiom index {index} out of range for a knowledge base of {len} axioms")]
    IndexOutOfRange { index: usize, len: usize },
}

/// A TBox of subsumptions plus an ABox of assertions.
///
/// Axioms are addressed by a stable index: TBox entries first, then ABox
/// entries, each in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KnowledgeBase {
    tbox: Vec<Axiom>,
    abox: Vec<Axiom>,
    pub pool_id: String,
    pub level: u8,
}

impl KnowledgeBase {
    pub fn new(tbox: Vec<Axiom>, abox: Vec<Axiom>) -> Result<Self, KbError> {
        if let Some(i) = tbox.iter().position(|a| !a.is_subsumption()) {
            return Err(KbError::NotSubsumption(i));
        }
        if let Some(i) = abox.iter().position(|a| !a.is_assertion()) {
            return Err(KbError::NotAssertion(i));
        }
        Ok(KnowledgeBase { tbox, abox, pool_id: String::new(), level: 0 })
    }

    /// Splits a mixed list into TBox and ABox, keeping relative order.
    pub fn from_axioms(axioms: impl IntoIterator<Item = Axiom>) -> Self {
        let (tbox, abox): (Vec<_>, Vec<_>) = axioms.into_iter().partition(Axiom::is_subsumption);
        KnowledgeBase { tbox, abox, pool_id: String::new(), level: 0 }
    }

    pub fn with_meta(mut self, pool_id: impl Into<String>, level: u8) -> Self {
        self.pool_id = pool_id.into();
        self.level = level;
        self
    }

    pub fn tbox(&self) -> &[Axiom] {
        &self.tbox
    }

    pub fn abox(&self) -> &[Axiom] {
        &self.abox
    }

    pub fn len(&self) -> usize {
        self.tbox.len() + self.abox.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axiom(&self, index: usize) -> Option<&Axiom> {
        if index < self.tbox.len() {
            self.tbox.get(index)
        } else {
            self.abox.get(index - self.tbox.len())
        }
    }

    pub fn axioms(&self) -> impl Iterator<Item = &Axiom> + '_ {
        self.tbox.iter().chain(self.abox.iter())
    }

    pub fn push(&mut self, axiom: Axiom) {
        if axiom.is_subsumption() {
            self.tbox.push(axiom);
        } else {
            self.abox.push(axiom);
        }
    }

    pub fn contains(&self, axiom: &Axiom) -> bool {
        self.axioms().any(|a| a == axiom)
    }

    /// The sub-knowledge-base made of the given indices.
    pub fn subset(&self, indices: &[usize]) -> Result<KnowledgeBase, KbError> {
        let mut out = KnowledgeBase {
            tbox: Vec::new(),
            abox: Vec::new(),
            pool_id: self.pool_id.clone(),
            level: self.level,
        };
        for &i in indices {
            let ax = self.axiom(i).ok_or(KbError::IndexOutOfRange { index: i, len: self.len() })?;
            out.push(ax.clone());
        }
        Ok(out)
    }

    /// Individuals in order of first occurrence.
    pub fn individuals(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for ax in self.axioms() {
            for ind in ax.individuals() {
                if seen.insert(ind) {
                    out.push(ind.to_string());
                }
            }
        }
        out
    }

    /// Atomic concept names used anywhere in the KB, sorted.
    pub fn concept_names(&self) -> BTreeSet<String> {
        self.axioms()
            .flat_map(|a| a.concepts())
            .flat_map(|c| c.concept_names())
            .map(str::to_string)
            .collect()
    }

    pub fn role_names(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self
            .axioms()
            .flat_map(|a| a.concepts())
            .flat_map(|c| c.role_names())
            .map(str::to_string)
            .collect();
        for ax in self.axioms() {
            if let Axiom::RoleAssertion { role, .. } = ax {
                out.insert(role.clone());
            }
        }
        out
    }

    pub fn signature(&self) -> BTreeSet<Symbol> {
        self.axioms().flat_map(Axiom::signature).collect()
    }

    /// Total node count over all axioms.
    pub fn node_count(&self) -> usize {
        self.axioms().map(Axiom::size).sum()
    }
}

/// Every concept occurring in the KB, closed under subterms, in NNF.
///
/// Each axiom side and assertion concept is normalized first, so the set
/// holds only NNF expressions.
pub fn subexpressions(kb: &KnowledgeBase) -> BTreeSet<Concept> {
    let mut out = BTreeSet::new();
    for ax in kb.axioms() {
        for c in ax.concepts() {
            nnf(c).walk(&mut |sub| {
                out.insert(sub.clone());
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Concept {
        Concept::atom(n)
    }

    #[test]
    fn subexpressions_of_single_fact() {
        let kb = KnowledgeBase::from_axioms([Axiom::fact(Concept::and(a("A"), a("B")), "a")]);
        let got = subexpressions(&kb);
        let want: BTreeSet<_> = [Concept::and(a("A"), a("B")), a("A"), a("B")].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn subexpressions_of_subsumption() {
        let kb = KnowledgeBase::from_axioms([Axiom::subsumption(a("A"), Concept::exists("R", a("B")))]);
        let want: BTreeSet<_> = [a("A"), Concept::exists("R", a("B")), a("B")].into_iter().collect();
        assert_eq!(subexpressions(&kb), want);
    }

    #[test]
    fn subexpressions_are_nnf() {
        let kb = KnowledgeBase::from_axioms([Axiom::fact(
            Concept::not(Concept::and(a("A"), Concept::forall("R", a("B")))),
            "a",
        )]);
        let subs = subexpressions(&kb);
        assert!(subs.iter().all(Concept::is_nnf));
        assert!(subs.contains(&Concept::exists("R", Concept::not(a("B")))));
    }

    #[test]
    fn kb_rejects_misplaced_axioms() {
        let err = KnowledgeBase::new(vec![Axiom::fact(a("A"), "x")], vec![]).unwrap_err();
        assert_eq!(err, KbError::NotSubsumption(0));
        let err = KnowledgeBase::new(vec![], vec![Axiom::subsumption(a("A"), a("B"))]).unwrap_err();
        assert_eq!(err, KbError::NotAssertion(0));
    }

    #[test]
    fn indices_run_tbox_then_abox() {
        let kb = KnowledgeBase::from_axioms([
            Axiom::fact(a("A"), "x"),
            Axiom::subsumption(a("A"), a("B")),
        ]);
        assert!(kb.axiom(0).unwrap().is_subsumption());
        assert!(kb.axiom(1).unwrap().is_assertion());
        assert!(kb.axiom(2).is_none());
        assert_eq!(kb.subset(&[1]).unwrap().len(), 1);
        assert!(kb.subset(&[5]).is_err());
    }
}
