//! Delta-closure enumeration and minimum justifications.
//!
//! The closure is the set of candidate axioms a KB entails, where candidates
//! are assertions `C(a)` and subsumptions `C ⊑ D` over the KB's (NNF)
//! subexpressions and named concepts. Tautologies are left out.
//!
//! Inference depth is `|S| - 1` for a minimum-cardinality justification `S`.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::reasoner::{refutation, Budget, FiniteModel, Outcome, Reasoner, ReasonerError, Verdict};
use crate::syntax::{subexpressions, Axiom, Concept, KnowledgeBase, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Asserted,
    Inferred,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClosureEntry {
    pub axiom: Axiom,
    pub source: Source,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JustificationMode {
    /// The axioms entail the query.
    SupportsTrue,
    /// The axioms are inconsistent with the query.
    InducesInconsistency,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Justification {
    /// Sorted axiom indices into the knowledge base.
    pub indices: Vec<usize>,
    pub mode: JustificationMode,
}

impl Justification {
    pub fn depth(&self) -> usize {
        depth(self)
    }
}

/// `|S| - 1`: a verbatim lookup has depth 0.
pub fn depth(j: &Justification) -> usize {
    j.indices.len().saturating_sub(1)
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ClosureError {
    #[error("closure budget of {0:?} exceeded")]
    BudgetExceeded(Duration),
    #[error("knowledge base is inconsistent")]
    Inconsistent,
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum JustificationError {
    #[error("no justification with at most {cap} axioms")]
    DepthCapExceeded { cap: usize },
    #[error("query verdict is {actual}, not {expected}")]
    WrongVerdict { expected: Verdict, actual: Verdict },
    #[error("justifications exist only for True or False verdicts")]
    UnknownVerdict,
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
}

/// Per-KB reasoning state shared by closure enumeration, justification
/// search and query generation.
pub struct Session {
    kb: KnowledgeBase,
    reasoner: Reasoner,
    empty: Reasoner,
    symbols: Vec<BTreeSet<Symbol>>,
    /// Verified models of the whole KB, with extensions of `concepts`.
    models: Vec<(FiniteModel, Vec<BitSet>)>,
    concepts: Vec<Concept>,
    closure: Option<Vec<ClosureEntry>>,
    justifications: HashMap<(Axiom, JustificationMode), Result<Justification, JustificationError>>,
}

impl Session {
    pub fn new(kb: &KnowledgeBase) -> Self {
        Self::with_budget(kb, Budget::default())
    }

    pub fn with_budget(kb: &KnowledgeBase, budget: Budget) -> Self {
        let mut concepts: BTreeSet<Concept> = subexpressions(kb);
        concepts.extend(kb.concept_names().into_iter().map(Concept::Atomic));
        Session {
            kb: kb.clone(),
            reasoner: Reasoner::with_budget(kb, budget),
            empty: Reasoner::with_budget(&KnowledgeBase::default(), budget),
            symbols: kb.axioms().map(Axiom::signature).collect(),
            models: Vec::new(),
            concepts: concepts.into_iter().collect(),
            closure: None,
            justifications: HashMap::new(),
        }
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn reasoner(&mut self) -> &mut Reasoner {
        &mut self.reasoner
    }

    /// Candidate concepts: subexpressions plus named concepts, sorted.
    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    fn all(&self) -> Vec<usize> {
        (0..self.kb.len()).collect()
    }

    fn remember(&mut self, model: FiniteModel) {
        let exts = self.concepts.iter().map(|c| model.extension(c)).collect();
        self.models.push((model, exts));
    }

    /// Satisfiability of the whole KB plus `extra`, caching any model.
    fn satisfiable_with(&mut self, extra: &[Axiom]) -> Result<bool, ReasonerError> {
        let all = self.all();
        match self.reasoner.satisfiable(&all, extra)? {
            Outcome::Satisfiable(model) => {
                if let Some(m) = model {
                    self.remember(m);
                }
                Ok(true)
            }
            Outcome::Unsatisfiable => Ok(false),
        }
    }

    fn is_tautology(&mut self, ax: &Axiom) -> Result<bool, ReasonerError> {
        // individuals are irrelevant to validity, so facts reduce to ⊤ ⊑ C
        let probe = match ax {
            Axiom::ConceptAssertion { concept, .. } => Axiom::subsumption(Concept::Top, concept.clone()),
            other => other.clone(),
        };
        self.empty.entails_with(&[], &probe)
    }

    /// Enumerates the Delta-closure within a wall-clock budget. Entries
    /// are sorted by axiom.
    pub fn closure(&mut self, budget: Duration) -> Result<&[ClosureEntry], ClosureError> {
        if self.closure.is_none() {
            let entries = self.compute_closure(budget)?;
            self.closure = Some(entries);
        }
        Ok(self.closure.as_deref().unwrap())
    }

    fn compute_closure(&mut self, budget: Duration) -> Result<Vec<ClosureEntry>, ClosureError> {
        let deadline = Instant::now() + budget;
        let check = |_: ()| -> Result<(), ClosureError> {
            if Instant::now() > deadline {
                Err(ClosureError::BudgetExceeded(budget))
            } else {
                Ok(())
            }
        };
        if !self.satisfiable_with(&[])? {
            return Err(ClosureError::Inconsistent);
        }
        // one witness per satisfiable concept seeds the model cache
        let fresh = crate::reasoner::FRESH_INDIVIDUAL;
        for i in 0..self.concepts.len() {
            check(())?;
            if self.models.iter().any(|(_, e)| !e[i].is_empty()) {
                continue;
            }
            let probe = Axiom::fact(self.concepts[i].clone(), fresh);
            self.satisfiable_with(&[probe])?;
        }

        let individuals = self.kb.individuals();
        let mut out = Vec::new();
        let n = self.concepts.len();
        for i in 0..n {
            for a in &individuals {
                check(())?;
                let ax = Axiom::fact(self.concepts[i].clone(), a.clone());
                let refuted = self.models.iter().any(|(m, e)| m.individual(a).is_some_and(|x| !e[i].contains(x)));
                if refuted {
                    continue;
                }
                let r = refutation(&ax).expect("concept assertion");
                if self.satisfiable_with(&[r])? || self.is_tautology(&ax)? {
                    continue;
                }
                out.push(ax);
            }
        }
        for i in 0..n {
            if self.concepts[i] == Concept::Bottom {
                continue;
            }
            for j in 0..n {
                if i == j || self.concepts[j] == Concept::Top {
                    continue;
                }
                check(())?;
                let refuted = self.models.iter().any(|(_, e)| !e[i].is_subset(&e[j]));
                if refuted {
                    continue;
                }
                let ax = Axiom::subsumption(self.concepts[i].clone(), self.concepts[j].clone());
                let r = refutation(&ax).expect("subsumption");
                let sat = self.satisfiable_with(&[r])?;
                if sat || self.is_tautology(&ax)? {
                    continue;
                }
                out.push(ax);
            }
        }
        let mut entries: Vec<ClosureEntry> = out
            .into_iter()
            .map(|axiom| {
                let source = if self.kb.contains(&axiom) { Source::Asserted } else { Source::Inferred };
                ClosureEntry { axiom, source }
            })
            .collect();
        entries.sort();
        Ok(entries)
    }

    /// A minimum-cardinality justification for `query` having `verdict`,
    /// searching subsets of at most `cap` axioms. Results are memoized.
    pub fn justify(&mut self, query: &Axiom, verdict: Verdict, cap: usize) -> Result<Justification, JustificationError> {
        let mode = match verdict {
            Verdict::True => JustificationMode::SupportsTrue,
            Verdict::False => JustificationMode::InducesInconsistency,
            Verdict::Unknown => return Err(JustificationError::UnknownVerdict),
        };
        let key = (query.clone(), mode);
        if let Some(r) = self.justifications.get(&key) {
            match r {
                Err(JustificationError::DepthCapExceeded { cap: c }) if *c < cap => {}
                other => return other.clone(),
            }
        }
        let r = self.search(query, mode, cap);
        self.justifications.insert(key, r.clone());
        r
    }

    /// Whether the axioms at `subset` have the property; on failure returns
    /// the indices (within `pool`) that a witnessing model satisfies.
    fn test(
        &mut self,
        subset: &[usize],
        query: &Axiom,
        mode: JustificationMode,
        pool: &[usize],
    ) -> Result<Result<(), u128>, ReasonerError> {
        let holds = match mode {
            JustificationMode::SupportsTrue => match refutation(query) {
                Some(r) => self.reasoner.satisfiable(subset, &[r])?,
                None => {
                    // role assertions are entailed only by membership
                    if subset.iter().any(|&i| self.kb.axiom(i) == Some(query)) {
                        return Ok(Ok(()));
                    }
                    self.reasoner.satisfiable(subset, &[])?
                }
            },
            JustificationMode::InducesInconsistency => {
                self.reasoner.satisfiable(subset, std::slice::from_ref(query))?
            }
        };
        match holds {
            Outcome::Unsatisfiable => Ok(Ok(())),
            Outcome::Satisfiable(model) => {
                let mut mask = 0u128;
                for (k, &i) in pool.iter().enumerate() {
                    let sat = match &model {
                        Some(m) => m.satisfies(self.kb.axiom(i).expect("index in range")),
                        None => subset.contains(&i),
                    };
                    if sat {
                        mask |= 1 << k;
                    }
                }
                Ok(Err(mask))
            }
        }
    }

    /// Axioms transitively sharing a symbol with the query, in BFS order.
    fn cone(&self, query: &Axiom) -> Vec<usize> {
        let mut reached: BTreeSet<Symbol> = query.signature();
        let mut order = Vec::new();
        let mut taken = vec![false; self.kb.len()];
        let mut frontier: VecDeque<Symbol> = reached.iter().cloned().collect();
        while let Some(sym) = frontier.pop_front() {
            for (i, syms) in self.symbols.iter().enumerate() {
                if !taken[i] && syms.contains(&sym) {
                    taken[i] = true;
                    order.push(i);
                    for s in syms {
                        if reached.insert(s.clone()) {
                            frontier.push_back(s.clone());
                        }
                    }
                }
            }
        }
        order
    }

    fn search(&mut self, query: &Axiom, mode: JustificationMode, cap: usize) -> Result<Justification, JustificationError> {
        let mut pool = self.cone(query);
        if pool.len() > 128 {
            pool.truncate(128);
        }
        let mut masks: Vec<u128> = Vec::new();
        let all: Vec<usize> = pool.clone();
        match self.test(&all, query, mode, &pool)? {
            Ok(()) => {}
            Err(_) => {
                let all_kb = self.all();
                let holds = match mode {
                    JustificationMode::SupportsTrue => self.reasoner.entails_with(&all_kb, query)?,
                    JustificationMode::InducesInconsistency => {
                        !self.reasoner.satisfiable(&all_kb, std::slice::from_ref(query))?.is_satisfiable()
                    }
                };
                let expected = if mode == JustificationMode::SupportsTrue { Verdict::True } else { Verdict::False };
                if holds {
                    // cannot happen for ALCQ without nominals; be explicit
                    return Err(JustificationError::DepthCapExceeded { cap });
                }
                let actual = self.reasoner.verdict(query)?;
                return Err(JustificationError::WrongVerdict { expected, actual });
            }
        }

        // expand in BFS order, then shrink to a minimal set
        let mut current: Vec<usize> = Vec::new();
        for &i in &pool {
            current.push(i);
            match self.test(&current, query, mode, &pool)? {
                Ok(()) => break,
                Err(mask) => masks.push(mask),
            }
        }
        let mut k = 0;
        while k < current.len() {
            let mut trial = current.clone();
            trial.remove(k);
            match self.test(&trial, query, mode, &pool)? {
                Ok(()) => current = trial,
                Err(mask) => {
                    masks.push(mask);
                    k += 1;
                }
            }
        }
        let mut best = current;

        // staged search for anything smaller, over query-connected subsets
        let qsyms = query.signature();
        let n = pool.len();
        let touches: Vec<bool> = pool.iter().map(|&i| !self.symbols[i].is_disjoint(&qsyms)).collect();
        let adjacent: Vec<u128> = (0..n)
            .map(|a| {
                (0..n)
                    .filter(|&b| b != a && !self.symbols[pool[a]].is_disjoint(&self.symbols[pool[b]]))
                    .fold(0u128, |m, b| m | 1 << b)
            })
            .collect();
        let limit = (best.len() - 1).min(cap);
        let mut level: Vec<u128> = (0..n).filter(|&a| touches[a]).map(|a| 1u128 << a).collect();
        'sizes: for size in 1..=limit {
            if size > 1 {
                let mut next: HashSet<u128> = HashSet::new();
                for &set in &level {
                    let mut frontier = 0u128;
                    for a in 0..n {
                        if set >> a & 1 == 1 {
                            frontier |= adjacent[a];
                        } else if touches[a] {
                            frontier |= 1 << a;
                        }
                    }
                    frontier &= !set;
                    for b in 0..n {
                        if frontier >> b & 1 == 1 {
                            next.insert(set | 1 << b);
                        }
                    }
                }
                level = next.into_iter().collect();
                level.sort_unstable();
            }
            for &set in &level {
                if masks.iter().any(|m| set & !m == 0) {
                    continue;
                }
                let subset: Vec<usize> = (0..n).filter(|&a| set >> a & 1 == 1).map(|a| pool[a]).collect();
                match self.test(&subset, query, mode, &pool)? {
                    Ok(()) => {
                        best = subset;
                        break 'sizes;
                    }
                    Err(mask) => masks.push(mask | set),
                }
            }
        }
        if best.len() > cap {
            return Err(JustificationError::DepthCapExceeded { cap });
        }
        best.sort_unstable();
        Ok(Justification { indices: best, mode })
    }
}

/// Delta-closure of `kb` with the default reasoner budget.
pub fn delta_closure(kb: &KnowledgeBase, budget: Duration) -> Result<Vec<ClosureEntry>, ClosureError> {
    Ok(Session::new(kb).closure(budget)?.to_vec())
}

/// Minimum justification of `query` having `verdict` in `kb`, over subsets
/// of at most `cap` axioms.
pub fn min_justification(
    kb: &KnowledgeBase,
    query: &Axiom,
    verdict: Verdict,
    cap: usize,
) -> Result<Justification, JustificationError> {
    Session::new(kb).justify(query, verdict, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_axiom;

    fn kb(lines: &[&str]) -> KnowledgeBase {
        KnowledgeBase::from_axioms(lines.iter().map(|s| parse_axiom(s).unwrap()))
    }

    fn ax(s: &str) -> Axiom {
        parse_axiom(s).unwrap()
    }

    const LONG: Duration = Duration::from_secs(30);

    #[test]
    fn modus_ponens_in_closure() {
        let c = delta_closure(&kb(&["A(a)", "A subclassof B"]), LONG).unwrap();
        let axioms: Vec<&Axiom> = c.iter().map(|e| &e.axiom).collect();
        assert!(axioms.contains(&&ax("B(a)")));
        let entry = c.iter().find(|e| e.axiom == ax("A(a)")).unwrap();
        assert_eq!(entry.source, Source::Asserted);
    }

    #[test]
    fn existential_consequence() {
        let k = kb(&["Enthusiastic(a)", "Enthusiastic subclassof (supports some Enthusiastic)"]);
        let c = delta_closure(&k, LONG).unwrap();
        assert!(c.iter().any(|e| e.axiom == ax("(supports some Enthusiastic)(a)")));
    }

    #[test]
    fn single_fact_closure() {
        let c = delta_closure(&kb(&["A(a)"]), LONG).unwrap();
        assert_eq!(c.iter().map(|e| e.axiom.clone()).collect::<Vec<_>>(), vec![ax("A(a)")]);
    }

    #[test]
    fn tautologies_are_excluded() {
        let c = delta_closure(&kb(&["(A or (not A))(a)", "B(a)"]), LONG).unwrap();
        assert!(c.iter().all(|e| e.axiom != ax("(A or (not A))(a)")));
    }

    #[test]
    fn chain_justification() {
        let k = kb(&["A(a)", "A subclassof B", "B subclassof C", "D subclassof E"]);
        let j = min_justification(&k, &ax("C(a)"), Verdict::True, 6).unwrap();
        assert_eq!(j.indices.len(), 3);
        assert_eq!(depth(&j), 2);
        let picked: BTreeSet<Axiom> = j.indices.iter().map(|&i| k.axiom(i).unwrap().clone()).collect();
        assert_eq!(picked, [ax("A(a)"), ax("A subclassof B"), ax("B subclassof C")].into_iter().collect());
    }

    #[test]
    fn lookup_has_depth_zero() {
        let k = kb(&["A(a)", "A subclassof B"]);
        let j = min_justification(&k, &ax("A(a)"), Verdict::True, 6).unwrap();
        assert_eq!(depth(&j), 0);
    }

    #[test]
    fn false_query_uses_both_axioms() {
        let k = kb(&["Quiet subclassof (likes only Quiet)", "Quiet(Anne)"]);
        let q = ax("(likes some (not Quiet))(Anne)");
        let j = min_justification(&k, &q, Verdict::False, 6).unwrap();
        assert_eq!(j.indices, vec![0, 1]);
        assert_eq!(j.mode, JustificationMode::InducesInconsistency);
    }

    #[test]
    fn cap_is_enforced() {
        let k = kb(&["A(a)", "A subclassof B", "B subclassof C", "C subclassof D"]);
        assert_eq!(
            min_justification(&k, &ax("D(a)"), Verdict::True, 3),
            Err(JustificationError::DepthCapExceeded { cap: 3 })
        );
    }

    #[test]
    fn picks_minimum_not_just_minimal() {
        // the long route is found first by BFS expansion; the short one wins
        let k = kb(&["A(a)", "A subclassof B", "B subclassof C", "C subclassof D", "A subclassof D"]);
        let j = min_justification(&k, &ax("D(a)"), Verdict::True, 6).unwrap();
        // tbox entries come first: `A subclassof D` is 3, `A(a)` is 4
        assert_eq!(j.indices, vec![3, 4]);
    }
}
