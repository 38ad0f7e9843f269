//! Independent test oracles: exhaustive finite-model enumeration over tiny
//! vocabularies, and random tiny knowledge bases to feed it.
#![allow(dead_code)]

use deltagen_core::syntax::{Axiom, Concept, KnowledgeBase};
use rand::seq::SliceRandom;
use rand::Rng;

pub const ATOMS: [&str; 2] = ["red", "kind"];
pub const ROLE: &str = "likes";
pub const INDS: [&str; 2] = ["Anne", "Bob"];

/// An interpretation over at most 8 elements, sets as bitmasks.
#[derive(Clone, Copy, Debug)]
pub struct Tiny {
    pub size: u32,
    pub atoms: [u8; 2],
    pub succ: [u8; 8],
    pub inds: [u32; 2],
}

impl Tiny {
    fn full(&self) -> u8 {
        ((1u16 << self.size) - 1) as u8
    }

    pub fn ext(&self, c: &Concept) -> u8 {
        let full = self.full();
        match c {
            Concept::Top => full,
            Concept::Bottom => 0,
            Concept::Atomic(n) => ATOMS.iter().position(|a| a == n).map(|i| self.atoms[i]).unwrap_or(0),
            Concept::Not(x) => !self.ext(x) & full,
            Concept::And(l, r) => self.ext(l) & self.ext(r),
            Concept::Or(l, r) => self.ext(l) | self.ext(r),
            Concept::Forall(r, f) => self.count(r, f, |h, t| h == t),
            Concept::Exists(r, f) => self.count(r, f, |h, _| h >= 1),
            Concept::AtLeast(n, r, f) => self.count(r, f, |h, _| h >= *n),
            Concept::AtMost(n, r, f) => self.count(r, f, |h, _| h <= *n),
        }
    }

    fn count(&self, role: &str, f: &Concept, keep: impl Fn(u32, u32) -> bool) -> u8 {
        let inner = self.ext(f);
        let mut out = 0u8;
        for x in 0..self.size {
            let s = if role == ROLE { self.succ[x as usize] } else { 0 };
            if keep((s & inner).count_ones(), s.count_ones()) {
                out |= 1 << x;
            }
        }
        out
    }

    fn ind(&self, name: &str) -> Option<u32> {
        INDS.iter().position(|i| *i == name).map(|i| self.inds[i])
    }

    pub fn holds(&self, ax: &Axiom) -> bool {
        match ax {
            Axiom::Subsumption { lhs, rhs } => self.ext(lhs) & !self.ext(rhs) == 0,
            Axiom::ConceptAssertion { concept, individual } => {
                let x = self.ind(individual).expect("tiny individual");
                self.ext(concept) & (1 << x) != 0
            }
            Axiom::RoleAssertion { role, subject, object } => {
                let (s, o) = (self.ind(subject).unwrap(), self.ind(object).unwrap());
                role == ROLE && self.succ[s as usize] & (1 << o) != 0
            }
        }
    }
}

/// Every interpretation with domain size `1..=max_size`, up to renaming of
/// elements (Anne is always element 0; Bob is 0 or 1).
pub fn all_models(max_size: u32) -> Vec<Tiny> {
    let mut out = Vec::new();
    for size in 1..=max_size {
        let sets = 1u32 << size;
        let rel = 1u64 << (size * size);
        for a0 in 0..sets {
            for a1 in 0..sets {
                for r in 0..rel {
                    for bob in 0..size.min(2) {
                        let mut succ = [0u8; 8];
                        for x in 0..size {
                            succ[x as usize] = ((r >> (x * size)) & ((1 << size) - 1)) as u8;
                        }
                        out.push(Tiny { size, atoms: [a0 as u8, a1 as u8], succ, inds: [0, bob] });
                    }
                }
            }
        }
    }
    out
}

pub fn random_concept(rng: &mut impl Rng, depth: u32) -> Concept {
    let leaf = depth == 0 || rng.gen_bool(0.35);
    if leaf {
        let a = Concept::atom(*ATOMS.choose(rng).unwrap());
        return match rng.gen_range(0..10) {
            0 => Concept::Top,
            1 => Concept::Bottom,
            2..=4 => Concept::not(a),
            _ => a,
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..8) {
        0 => Concept::not(random_concept(rng, d)),
        1 => Concept::and(random_concept(rng, d), random_concept(rng, d)),
        2 => Concept::or(random_concept(rng, d), random_concept(rng, d)),
        3 => Concept::forall(ROLE, random_concept(rng, d)),
        4 => Concept::exists(ROLE, random_concept(rng, d)),
        5 => Concept::at_least(rng.gen_range(1..=2), ROLE, random_concept(rng, d)),
        _ => Concept::at_most(rng.gen_range(0..=2), ROLE, random_concept(rng, d)),
    }
}

pub fn random_axiom(rng: &mut impl Rng) -> Axiom {
    match rng.gen_range(0..10) {
        0..=3 => Axiom::subsumption(random_concept(rng, 2), random_concept(rng, 2)),
        4 => Axiom::role_fact(ROLE, *INDS.choose(rng).unwrap(), *INDS.choose(rng).unwrap()),
        _ => Axiom::fact(random_concept(rng, 2), *INDS.choose(rng).unwrap()),
    }
}

pub fn random_tiny_kb(rng: &mut impl Rng) -> KnowledgeBase {
    let n = rng.gen_range(1..=4);
    KnowledgeBase::from_axioms((0..n).map(|_| random_axiom(rng)))
}

/// Smallest subset of `kb` that entails `query` (True) or is inconsistent
/// with it (False), by plain enumeration of all subsets.
pub fn exhaustive_min_justification(
    kb: &KnowledgeBase,
    query: &Axiom,
    verdict: deltagen_core::reasoner::Verdict,
) -> Option<usize> {
    use deltagen_core::reasoner::{Reasoner, Verdict};
    let n = kb.len();
    assert!(n <= 16, "exhaustive search over {n} axioms");
    let mut r = Reasoner::new(kb);
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| b <= size) {
            continue;
        }
        let active: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let holds = match verdict {
            Verdict::True => r.entails_with(&active, query).expect("within budget"),
            Verdict::False => !r.satisfiable(&active, std::slice::from_ref(query)).expect("within budget").is_satisfiable(),
            Verdict::Unknown => unreachable!(),
        };
        if holds {
            best = Some(size);
        }
    }
    best
}
