//! Finite interpretations and exact model checking.

use std::collections::HashMap;

use crate::bits::BitSet;
use crate::syntax::{Axiom, Concept};

/// A finite interpretation over the domain `0..size`.
///
/// Concept and role names that are not listed have empty extensions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FiniteModel {
    size: usize,
    concepts: HashMap<String, BitSet>,
    roles: HashMap<String, Vec<Vec<usize>>>,
    individuals: HashMap<String, usize>,
}

impl FiniteModel {
    pub fn new(size: usize) -> Self {
        FiniteModel { size, ..Default::default() }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn add_concept_member(&mut self, concept: &str, element: usize) {
        self.concepts.entry(concept.to_string()).or_insert_with(|| BitSet::new(self.size)).insert(element);
    }

    pub fn add_edge(&mut self, role: &str, from: usize, to: usize) {
        let adj = self.roles.entry(role.to_string()).or_insert_with(|| vec![Vec::new(); self.size]);
        if !adj[from].contains(&to) {
            adj[from].push(to);
        }
    }

    pub fn set_individual(&mut self, name: &str, element: usize) {
        self.individuals.insert(name.to_string(), element);
    }

    pub fn individual(&self, name: &str) -> Option<usize> {
        self.individuals.get(name).copied()
    }

    fn successors(&self, role: &str, x: usize) -> &[usize] {
        self.roles.get(role).map(|adj| adj[x].as_slice()).unwrap_or(&[])
    }

    /// The set of elements satisfying `c`.
    pub fn extension(&self, c: &Concept) -> BitSet {
        match c {
            Concept::Top => BitSet::full(self.size),
            Concept::Bottom => BitSet::new(self.size),
            Concept::Atomic(name) => {
                self.concepts.get(name).cloned().unwrap_or_else(|| BitSet::new(self.size))
            }
            Concept::Not(inner) => {
                let mut all = BitSet::full(self.size);
                all.difference_with(&self.extension(inner));
                all
            }
            Concept::And(l, r) => {
                let mut s = self.extension(l);
                s.intersect_with(&self.extension(r));
                s
            }
            Concept::Or(l, r) => {
                let mut s = self.extension(l);
                s.union_with(&self.extension(r));
                s
            }
            Concept::Forall(role, f) => {
                let inner = self.extension(f);
                self.count_filter(role, &inner, |hits, total| hits == total)
            }
            Concept::Exists(role, f) => {
                let inner = self.extension(f);
                self.count_filter(role, &inner, |hits, _| hits >= 1)
            }
            Concept::AtLeast(n, role, f) => {
                let inner = self.extension(f);
                let n = *n as usize;
                self.count_filter(role, &inner, |hits, _| hits >= n)
            }
            Concept::AtMost(n, role, f) => {
                let inner = self.extension(f);
                let n = *n as usize;
                self.count_filter(role, &inner, |hits, _| hits <= n)
            }
        }
    }

    fn count_filter(&self, role: &str, inner: &BitSet, keep: impl Fn(usize, usize) -> bool) -> BitSet {
        let mut out = BitSet::new(self.size);
        for x in 0..self.size {
            let succ = self.successors(role, x);
            let hits = succ.iter().filter(|&&y| inner.contains(y)).count();
            if keep(hits, succ.len()) {
                out.insert(x);
            }
        }
        out
    }

    /// Whether the model satisfies the axiom. Assertions about individuals
    /// the model does not interpret count as unsatisfied.
    pub fn satisfies(&self, ax: &Axiom) -> bool {
        match ax {
            Axiom::Subsumption { lhs, rhs } => self.extension(lhs).is_subset(&self.extension(rhs)),
            Axiom::ConceptAssertion { concept, individual } => match self.individual(individual) {
                Some(x) => self.extension(concept).contains(x),
                None => false,
            },
            Axiom::RoleAssertion { role, subject, object } => {
                match (self.individual(subject), self.individual(object)) {
                    (Some(s), Some(o)) => self.successors(role, s).contains(&o),
                    _ => false,
                }
            }
        }
    }

    pub fn satisfies_all<'a>(&self, axioms: impl IntoIterator<Item = &'a Axiom>) -> bool {
        axioms.into_iter().all(|a| self.satisfies(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_axiom;

    #[test]
    fn evaluates_number_restrictions() {
        let mut m = FiniteModel::new(3);
        m.set_individual("a", 0);
        m.add_edge("likes", 0, 1);
        m.add_edge("likes", 0, 2);
        m.add_concept_member("Kind", 1);
        m.add_concept_member("Kind", 2);
        assert!(m.satisfies(&parse_axiom("(atleast 2 likes Kind)(a)").unwrap()));
        assert!(!m.satisfies(&parse_axiom("(atmost 1 likes Kind)(a)").unwrap()));
        assert!(m.satisfies(&parse_axiom("(likes only Kind)(a)").unwrap()));
        assert!(m.satisfies(&parse_axiom("Kind subclassof (likes only Nothing)").unwrap()));
        assert!(!m.satisfies(&parse_axiom("Kind(b)").unwrap()));
    }
}
