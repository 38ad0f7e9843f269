//! Tableau reasoning for ALCQ knowledge bases: consistency and
//! three-valued entailment.
//!
//! ```
//! use deltagen_core::reasoner::{entails, Verdict};
//! use deltagen_core::syntax::{parse_axiom, KnowledgeBase};
//!
//! let kb = KnowledgeBase::from_axioms(
//!     ["red subclassof kind", "red(Anne)"].iter().map(|s| parse_axiom(s).unwrap()),
//! );
//! let q = parse_axiom("kind(Anne)").unwrap();
//! assert_eq!(entails(&kb, &q).unwrap(), Verdict::True);
//! ```

mod model;
mod table;
mod tableau;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use model::FiniteModel;
use table::{Cid, ConceptTable, Term, TOP};
use tableau::{Fail, Limits, Problem, Tableau};

use crate::syntax::{Axiom, Concept, KnowledgeBase};

/// Individual name used to witness a subsumption counterexample.
pub const FRESH_INDIVIDUAL: &str = "_:fresh";
const DOMAIN_WITNESS: &str = "_:dom";

/// Resource limits for a single satisfiability test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_nodes: 100_000, time_limit: Some(Duration::from_secs(5)) }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ReasonerError {
    #[error("reasoning budget exceeded")]
    BudgetExceeded,
    #[error("knowledge base is inconsistent: query and its refutation are both unsatisfiable")]
    InconsistentKb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::True => "True",
            Verdict::False => "False",
            Verdict::Unknown => "Unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Satisfiable; carries a verified finite model when one could be read
    /// off the completion graph.
    Satisfiable(Option<FiniteModel>),
    Unsatisfiable,
}

impl Outcome {
    pub fn is_satisfiable(&self) -> bool {
        matches!(self, Outcome::Satisfiable(_))
    }
}

#[derive(Clone, Debug)]
enum Compiled {
    /// Unfolding rules `(trigger atom, consequent)`; no trigger means the
    /// consequent holds everywhere.
    Tbox(Vec<(Option<u32>, Cid)>),
    Fact(String, Cid),
    Role(u32, String, String),
}

/// A reasoner bound to one knowledge base. Satisfiability tests can be
/// restricted to any subset of the KB's axioms plus extra axioms.
pub struct Reasoner {
    axioms: Vec<Axiom>,
    table: ConceptTable,
    compiled: Vec<Compiled>,
    budget: Budget,
}

impl Reasoner {
    pub fn new(kb: &KnowledgeBase) -> Self {
        Self::with_budget(kb, Budget::default())
    }

    pub fn with_budget(kb: &KnowledgeBase, budget: Budget) -> Self {
        let axioms: Vec<Axiom> = kb.axioms().cloned().collect();
        let mut table = ConceptTable::new();
        let compiled = axioms.iter().map(|a| compile(&mut table, a)).collect();
        Reasoner { axioms, table, compiled, budget }
    }

    pub fn len(&self) -> usize {
        self.axioms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axioms.is_empty()
    }

    pub fn axiom(&self, i: usize) -> &Axiom {
        &self.axioms[i]
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    /// Tests satisfiability of the axioms at `active` together with `extra`.
    pub fn satisfiable(&mut self, active: &[usize], extra: &[Axiom]) -> Result<Outcome, ReasonerError> {
        let extra_compiled: Vec<Compiled> = extra.iter().map(|a| compile(&mut self.table, a)).collect();
        let parts: Vec<&Compiled> =
            active.iter().map(|&i| &self.compiled[i]).chain(extra_compiled.iter()).collect();

        let mut unfold: Vec<Vec<Cid>> = Vec::new();
        let mut internal: Vec<Cid> = Vec::new();
        let mut individuals: Vec<(String, Vec<Cid>)> = Vec::new();
        let mut ind_index: HashMap<String, usize> = HashMap::new();
        let mut role_edges = Vec::new();
        let mut ind = |name: &str, individuals: &mut Vec<(String, Vec<Cid>)>| -> usize {
            *ind_index.entry(name.to_string()).or_insert_with(|| {
                individuals.push((name.to_string(), Vec::new()));
                individuals.len() - 1
            })
        };
        for part in parts {
            match part {
                Compiled::Tbox(rules) => {
                    for &(trigger, cons) in rules {
                        match trigger {
                            Some(a) => {
                                let a = a as usize;
                                if unfold.len() <= a {
                                    unfold.resize(a + 1, Vec::new());
                                }
                                if !unfold[a].contains(&cons) {
                                    unfold[a].push(cons);
                                }
                            }
                            None => {
                                if cons != TOP && !internal.contains(&cons) {
                                    internal.push(cons);
                                }
                            }
                        }
                    }
                }
                Compiled::Fact(name, c) => {
                    let i = ind(name, &mut individuals);
                    individuals[i].1.push(*c);
                }
                Compiled::Role(r, s, o) => {
                    let s = ind(s, &mut individuals);
                    let o = ind(o, &mut individuals);
                    role_edges.push((*r, s, o));
                }
            }
        }
        if individuals.is_empty() {
            individuals.push((DOMAIN_WITNESS.to_string(), Vec::new()));
        }
        let problem = Problem {
            table: &self.table,
            unfold: &unfold,
            internal: &internal,
            individuals: &individuals,
            role_edges: &role_edges,
        };
        let limits = Limits {
            max_nodes: self.budget.max_nodes,
            deadline: self.budget.time_limit.map(|d| Instant::now() + d),
        };
        match Tableau::new(&problem, limits).run() {
            Ok(model) => {
                let ok = active.iter().all(|&i| model.satisfies(&self.axioms[i]))
                    && model.satisfies_all(extra);
                Ok(Outcome::Satisfiable(ok.then_some(model)))
            }
            Err(Fail::Clash(_)) => Ok(Outcome::Unsatisfiable),
            Err(Fail::Budget) => Err(ReasonerError::BudgetExceeded),
        }
    }

    fn all(&self) -> Vec<usize> {
        (0..self.axioms.len()).collect()
    }

    pub fn is_consistent(&mut self) -> Result<bool, ReasonerError> {
        let all = self.all();
        Ok(self.satisfiable(&all, &[])?.is_satisfiable())
    }

    /// Whether the axioms at `active` entail `query`.
    pub fn entails_with(&mut self, active: &[usize], query: &Axiom) -> Result<bool, ReasonerError> {
        match refutation(query) {
            Some(r) => Ok(!self.satisfiable(active, &[r])?.is_satisfiable()),
            None => {
                if active.iter().any(|&i| &self.axioms[i] == query) {
                    return Ok(true);
                }
                Ok(!self.satisfiable(active, &[])?.is_satisfiable())
            }
        }
    }

    /// Three-valued entailment against the whole KB.
    pub fn verdict(&mut self, query: &Axiom) -> Result<Verdict, ReasonerError> {
        let all = self.all();
        let holds = self.entails_with(&all, query)?;
        let refuted = !self.satisfiable(&all, std::slice::from_ref(query))?.is_satisfiable();
        match (holds, refuted) {
            (true, true) => Err(ReasonerError::InconsistentKb),
            (true, false) => Ok(Verdict::True),
            (false, true) => Ok(Verdict::False),
            (false, false) => Ok(Verdict::Unknown),
        }
    }
}

/// The axiom whose satisfiability together with a KB witnesses that the KB
/// does not entail `query`. Role assertions have no such axiom in ALCQ.
pub fn refutation(query: &Axiom) -> Option<Axiom> {
    match query {
        Axiom::Subsumption { lhs, rhs } => Some(Axiom::fact(
            Concept::and(lhs.clone(), Concept::not(rhs.clone())),
            FRESH_INDIVIDUAL,
        )),
        Axiom::ConceptAssertion { concept, individual } => {
            Some(Axiom::fact(Concept::not(concept.clone()), individual.clone()))
        }
        Axiom::RoleAssertion { .. } => None,
    }
}

pub fn is_consistent(kb: &KnowledgeBase) -> Result<bool, ReasonerError> {
    Reasoner::new(kb).is_consistent()
}

pub fn entails(kb: &KnowledgeBase, query: &Axiom) -> Result<Verdict, ReasonerError> {
    Reasoner::new(kb).verdict(query)
}

/// Checks that every concept in `concepts` is satisfiable w.r.t. the KB's
/// TBox; returns the first unsatisfiable one.
pub fn check_all_satisfiable<'a>(
    kb: &KnowledgeBase,
    concepts: impl IntoIterator<Item = &'a Concept>,
) -> Result<Option<&'a Concept>, ReasonerError> {
    let mut r = Reasoner::new(kb);
    let tbox: Vec<usize> = (0..kb.tbox().len()).collect();
    for c in concepts {
        let probe = Axiom::fact(c.clone(), FRESH_INDIVIDUAL);
        if !r.satisfiable(&tbox, &[probe])?.is_satisfiable() {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

fn compile(table: &mut ConceptTable, ax: &Axiom) -> Compiled {
    match ax {
        Axiom::Subsumption { lhs, rhs } => {
            let mut rules = Vec::new();
            let l = table.intern(lhs);
            let r = table.intern(rhs);
            absorb(table, l, r, &mut rules);
            Compiled::Tbox(rules)
        }
        Axiom::ConceptAssertion { concept, individual } => {
            Compiled::Fact(individual.clone(), table.intern(concept))
        }
        Axiom::RoleAssertion { role, subject, object } => {
            Compiled::Role(table.role_id(role), subject.clone(), object.clone())
        }
    }
}

/// Turns `lhs ⊑ rhs` into lazy unfolding rules where possible.
fn absorb(table: &mut ConceptTable, lhs: Cid, rhs: Cid, out: &mut Vec<(Option<u32>, Cid)>) {
    match *table.term(lhs) {
        Term::Bottom => {}
        Term::Top => out.push((None, rhs)),
        Term::Atom(a) => out.push((Some(a), rhs)),
        Term::Or(l, r) => {
            absorb(table, l, rhs, out);
            absorb(table, r, rhs, out);
        }
        Term::And(..) => {
            let mut conjuncts = Vec::new();
            flatten_and(table, lhs, &mut conjuncts);
            match conjuncts.iter().position(|&c| matches!(table.term(c), Term::Atom(_))) {
                Some(pos) => {
                    let Term::Atom(a) = *table.term(conjuncts[pos]) else { unreachable!() };
                    let rest: Vec<Cid> =
                        conjuncts.iter().enumerate().filter(|&(i, _)| i != pos).map(|(_, &c)| c).collect();
                    let mut cons = rhs;
                    for &c in rest.iter().rev() {
                        let nc = table.complement(c);
                        cons = table.or_of(nc, cons);
                    }
                    out.push((Some(a), cons));
                }
                None => {
                    let n = table.complement(lhs);
                    out.push((None, table.or_of(n, rhs)));
                }
            }
        }
        _ => {
            let n = table.complement(lhs);
            out.push((None, table.or_of(n, rhs)));
        }
    }
}

fn flatten_and(table: &ConceptTable, c: Cid, out: &mut Vec<Cid>) {
    match *table.term(c) {
        Term::And(l, r) => {
            flatten_and(table, l, out);
            flatten_and(table, r, out);
        }
        _ => out.push(c),
    }
}
