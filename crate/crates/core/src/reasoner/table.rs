//! Hash-consed NNF concepts for the tableau.

use std::collections::HashMap;

use crate::syntax::{nnf, Concept};

pub(crate) type Cid = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Term {
    Top,
    Bottom,
    Atom(u32),
    NegAtom(u32),
    And(Cid, Cid),
    Or(Cid, Cid),
    All(u32, Cid),
    /// `atleast n R C`; existentials are `Min(1, ..)`.
    Min(u32, u32, Cid),
    Max(u32, u32, Cid),
}

#[derive(Clone, Debug, Default)]
pub(crate) struct ConceptTable {
    terms: Vec<Term>,
    compl: Vec<Cid>,
    index: HashMap<Term, Cid>,
    concept_ids: HashMap<String, u32>,
    concept_names: Vec<String>,
    role_ids: HashMap<String, u32>,
    role_names: Vec<String>,
}

pub(crate) const TOP: Cid = 0;
pub(crate) const BOTTOM: Cid = 1;

impl ConceptTable {
    pub fn new() -> Self {
        let mut t = ConceptTable::default();
        t.terms.push(Term::Top);
        t.compl.push(BOTTOM);
        t.terms.push(Term::Bottom);
        t.compl.push(TOP);
        t.index.insert(Term::Top, TOP);
        t.index.insert(Term::Bottom, BOTTOM);
        t
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    #[inline]
    pub fn term(&self, c: Cid) -> &Term {
        &self.terms[c as usize]
    }

    #[inline]
    pub fn complement(&self, c: Cid) -> Cid {
        self.compl[c as usize]
    }

    pub fn concept_id(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.concept_ids.get(name) {
            return id;
        }
        let id = self.concept_names.len() as u32;
        self.concept_names.push(name.to_string());
        self.concept_ids.insert(name.to_string(), id);
        id
    }

    pub fn role_id(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.role_ids.get(name) {
            return id;
        }
        let id = self.role_names.len() as u32;
        self.role_names.push(name.to_string());
        self.role_ids.insert(name.to_string(), id);
        id
    }

    pub fn concept_name(&self, id: u32) -> &str {
        &self.concept_names[id as usize]
    }

    pub fn role_name(&self, id: u32) -> &str {
        &self.role_names[id as usize]
    }

    /// Interns the NNF of `c`.
    pub fn intern(&mut self, c: &Concept) -> Cid {
        let n = nnf(c);
        self.intern_nnf(&n)
    }

    fn intern_nnf(&mut self, c: &Concept) -> Cid {
        let term = match c {
            Concept::Top => return TOP,
            Concept::Bottom => return BOTTOM,
            Concept::Atomic(name) => Term::Atom(self.concept_id(name)),
            Concept::Not(inner) => match &**inner {
                Concept::Atomic(name) => Term::NegAtom(self.concept_id(name)),
                other => {
                    let id = self.intern_nnf(other);
                    return self.complement(id);
                }
            },
            Concept::And(l, r) => {
                let (l, r) = (self.intern_nnf(l), self.intern_nnf(r));
                if l == r {
                    return l;
                }
                Term::And(l, r)
            }
            Concept::Or(l, r) => {
                let (l, r) = (self.intern_nnf(l), self.intern_nnf(r));
                if l == r {
                    return l;
                }
                Term::Or(l, r)
            }
            Concept::Forall(r, f) => {
                let f = self.intern_nnf(f);
                Term::All(self.role_id(r), f)
            }
            Concept::Exists(r, f) => {
                let f = self.intern_nnf(f);
                Term::Min(1, self.role_id(r), f)
            }
            Concept::AtLeast(0, _, _) => return TOP,
            Concept::AtLeast(n, r, f) => {
                let f = self.intern_nnf(f);
                Term::Min(*n, self.role_id(r), f)
            }
            Concept::AtMost(n, r, f) => {
                let f = self.intern_nnf(f);
                Term::Max(*n, self.role_id(r), f)
            }
        };
        self.intern_term(term)
    }

    pub fn or_of(&mut self, l: Cid, r: Cid) -> Cid {
        if l == r || r == TOP || l == BOTTOM {
            return r;
        }
        if l == TOP || r == BOTTOM {
            return l;
        }
        self.intern_term(Term::Or(l, r))
    }

    /// `atmost 0 R C` is stored as `R only not C`.
    fn normalize(&self, term: Term) -> Term {
        match term {
            Term::Max(0, r, f) => Term::All(r, self.complement(f)),
            t => t,
        }
    }

    fn intern_term(&mut self, term: Term) -> Cid {
        let term = self.normalize(term);
        if let Some(&id) = self.index.get(&term) {
            return id;
        }
        // children are interned together with their complements, so the
        // complement term can be built without further recursion
        let neg = match &term {
            Term::Top => Term::Bottom,
            Term::Bottom => Term::Top,
            Term::Atom(a) => Term::NegAtom(*a),
            Term::NegAtom(a) => Term::Atom(*a),
            Term::And(l, r) => Term::Or(self.complement(*l), self.complement(*r)),
            Term::Or(l, r) => Term::And(self.complement(*l), self.complement(*r)),
            Term::All(r, f) => Term::Min(1, *r, self.complement(*f)),
            Term::Min(n, r, f) => Term::Max(n - 1, *r, *f),
            Term::Max(n, r, f) => Term::Min(n + 1, *r, *f),
        };
        let neg = self.normalize(neg);
        let id = self.terms.len() as Cid;
        self.terms.push(term.clone());
        self.compl.push(Cid::MAX);
        self.index.insert(term, id);
        let neg_id = match self.index.get(&neg) {
            Some(&n) => n,
            None => {
                let n = self.terms.len() as Cid;
                self.terms.push(neg.clone());
                self.compl.push(id);
                self.index.insert(neg, n);
                n
            }
        };
        self.compl[id as usize] = neg_id;
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complements_pair_up() {
        let mut t = ConceptTable::new();
        let c = crate::syntax::parse_concept("(likes some red) and atmost 2 likes (not green)").unwrap();
        let id = t.intern(&c);
        let neg = t.intern(&Concept::not(c));
        assert_eq!(t.complement(id), neg);
        assert_eq!(t.complement(neg), id);
        for i in 0..t.len() as Cid {
            assert_eq!(t.complement(t.complement(i)), i);
        }
    }

    #[test]
    fn exists_is_min_one() {
        let mut t = ConceptTable::new();
        let a = t.intern(&crate::syntax::parse_concept("likes some red").unwrap());
        let b = t.intern(&crate::syntax::parse_concept("atleast 1 likes red").unwrap());
        assert_eq!(a, b);
    }
}
