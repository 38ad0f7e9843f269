//! Depth-exact true, false and unknown queries for one knowledge base.
//!
//! True queries come from the Delta-closure. False queries negate a true
//! fact (method a) or, for subsumptions, contradict a closure subsumption
//! `C ⊑ D` that has an instance of `C` by asking `C ⊑ nnf(¬D)` (method b).
//! Unknown queries are sampled from the grammar until the reasoner says
//! Unknown.

use std::collections::{BTreeMap, HashSet};
use std::ops::RangeInclusive;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::closure::{ClosureError, Justification, JustificationError, Session};
use crate::generator::{admissible_forms, sample_axiom, sample_fact, GrammarConfig, VocabularyPool};
use crate::reasoner::{ReasonerError, Verdict};
use crate::syntax::{negate_fact, nnf, Axiom, Concept};

/// A question with its answer; `depth` and `justification` are `None`
/// exactly for Unknown answers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub axiom: Axiom,
    pub answer: Verdict,
    pub depth: Option<usize>,
    pub justification: Option<Justification>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("no candidate at depth {0}")]
    NoCandidate(usize),
    #[error("unknown-query sampling exhausted after {0} attempts")]
    SamplingExhausted(usize),
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error(transparent)]
    Justification(#[from] JustificationError),
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
}

/// How a question reads: whether it contains "not" and its word count.
pub type Describe<'a> = dyn Fn(&Axiom) -> (bool, usize) + 'a;

/// Surface-balance preferences applied when several candidates fit a slot:
/// a per-slot coin with probability `not_rate` decides whether a question
/// with "not" is wanted, and questions within `words` are preferred.
pub struct Balance<'a> {
    pub describe: &'a Describe<'a>,
    pub not_rate: f64,
    /// Coin for false slots, whose negated candidates mostly read "not".
    pub false_not_rate: f64,
    pub words: RangeInclusive<usize>,
}

struct Wish {
    not: bool,
}

impl Balance<'_> {
    fn score(&self, wish: &Wish, ax: &Axiom) -> u8 {
        let (not, words) = (self.describe)(ax);
        2 * u8::from(not == wish.not) + u8::from(self.words.contains(&words))
    }
}

/// Query building state for one KB: the closure session, the depth of
/// every closure entry up to `max_depth`, and the axioms already used.
pub struct QueryBuilder<'s, 'b> {
    session: &'s mut Session,
    max_depth: usize,
    closure_budget: Duration,
    by_depth: Option<BTreeMap<usize, Vec<Axiom>>>,
    closure_set: HashSet<Axiom>,
    used: HashSet<Axiom>,
    balance: Option<Balance<'b>>,
    pub unknown_retries: usize,
    /// Overrides the "not" coin: the other slots of a depth follow the
    /// false query, whose candidates are the scarcest.
    follow: Option<bool>,
}

impl<'s, 'b> QueryBuilder<'s, 'b> {
    pub fn new(session: &'s mut Session, max_depth: usize, closure_budget: Duration) -> Self {
        QueryBuilder {
            session,
            max_depth,
            closure_budget,
            by_depth: None,
            closure_set: HashSet::new(),
            used: HashSet::new(),
            balance: None,
            unknown_retries: 200,
            follow: None,
        }
    }

    pub fn with_balance(mut self, balance: Balance<'b>) -> Self {
        self.balance = Some(balance);
        self
    }

    fn wish(&self, rng: &mut impl Rng) -> Wish {
        let p = self.balance.as_ref().map_or(0.5, |b| b.not_rate);
        self.wish_at(p, rng)
    }

    fn wish_at(&self, p: f64, rng: &mut impl Rng) -> Wish {
        let coin = rng.gen_bool(p);
        Wish { not: self.follow.unwrap_or(coin) }
    }

    /// Whether the question for `ax` contains "not", if a balance is set.
    fn reads_not(&self, ax: &Axiom) -> Option<bool> {
        self.balance.as_ref().map(|b| (b.describe)(ax).0)
    }

    /// Candidates ordered best-first by the balance score, ties shuffled.
    fn rank(&self, mut cands: Vec<Axiom>, wish: &Wish, rng: &mut impl Rng) -> Vec<Axiom> {
        cands.shuffle(rng);
        if let Some(b) = &self.balance {
            cands.sort_by_key(|a| std::cmp::Reverse(b.score(wish, a)));
        }
        cands
    }

    /// Closure entries grouped by depth, each justified with cap
    /// `max_depth + 1`; deeper entries are left out.
    fn depths(&mut self) -> Result<&BTreeMap<usize, Vec<Axiom>>, QueryError> {
        if self.by_depth.is_none() {
            let entries: Vec<Axiom> =
                self.session.closure(self.closure_budget)?.iter().map(|e| e.axiom.clone()).collect();
            let mut map: BTreeMap<usize, Vec<Axiom>> = BTreeMap::new();
            for ax in &entries {
                match self.session.justify(ax, Verdict::True, self.max_depth + 1) {
                    Ok(j) => map.entry(j.depth()).or_default().push(ax.clone()),
                    Err(JustificationError::DepthCapExceeded { .. }) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            self.closure_set = entries.into_iter().collect();
            self.by_depth = Some(map);
        }
        Ok(self.by_depth.as_ref().unwrap())
    }

    fn at_depth(&mut self, d: usize) -> Result<Vec<Axiom>, QueryError> {
        let used = self.used.clone();
        Ok(self.depths()?.get(&d).map_or_else(Vec::new, |v| v.iter().filter(|a| !used.contains(a)).cloned().collect()))
    }

    /// A closure entry whose minimum justification has depth `d`.
    pub fn make_true(&mut self, d: usize, rng: &mut impl Rng) -> Result<Query, QueryError> {
        let wish = self.wish(rng);
        let cands = self.at_depth(d)?;
        let Some(ax) = self.rank(cands, &wish, rng).into_iter().next() else {
            return Err(QueryError::NoCandidate(d));
        };
        let j = self.session.justify(&ax, Verdict::True, d + 1)?;
        self.used.insert(ax.clone());
        Ok(Query { axiom: ax, answer: Verdict::True, depth: Some(d), justification: Some(j) })
    }

    /// A query inconsistent with the KB whose minimum
    /// inconsistency-inducing subset has `d + 1` axioms.
    pub fn make_false(&mut self, d: usize, rng: &mut impl Rng) -> Result<Query, QueryError> {
        let p = self.balance.as_ref().map_or(0.5, |b| b.false_not_rate);
        let wish = self.wish_at(p, rng);
        let cands = self.at_depth(d)?;
        let negated: Vec<Axiom> = cands.iter().filter_map(|a| negate_fact(a).ok()).collect();
        let contradicted = self.method_b_candidates(d)?;
        let mut methods = [negated, contradicted];
        if rng.gen_bool(0.5) {
            methods.swap(0, 1);
        }
        for cands in methods {
            for q in self.rank(cands, &wish, rng) {
                if self.used.contains(&q) {
                    continue;
                }
                if let Some(j) = self.false_at(&q, d)? {
                    self.used.insert(q.clone());
                    return Ok(Query { axiom: q, answer: Verdict::False, depth: Some(d), justification: Some(j) });
                }
            }
        }
        Err(QueryError::NoCandidate(d))
    }

    /// `C ⊑ nnf(¬D)` for closure subsumptions `C ⊑ D` at depth at most
    /// `d` whose left side has a named instance.
    fn method_b_candidates(&mut self, d: usize) -> Result<Vec<Axiom>, QueryError> {
        let mut out = Vec::new();
        let by_depth = self.depths()?.clone();
        for (_, axs) in by_depth.range(..=d) {
            for ax in axs {
                let Axiom::Subsumption { lhs, rhs } = ax else { continue };
                let witnessed = self.session.kb().individuals().into_iter().any(|a| {
                    self.closure_set.contains(&Axiom::fact(lhs.clone(), a))
                });
                if witnessed {
                    out.push(Axiom::subsumption(lhs.clone(), nnf(&Concept::not(rhs.clone()))));
                }
            }
        }
        Ok(out)
    }

    /// The inconsistency justification of `q` if it is a false query of
    /// exactly depth `d`.
    fn false_at(&mut self, q: &Axiom, d: usize) -> Result<Option<Justification>, QueryError> {
        match self.session.reasoner().verdict(q) {
            Ok(Verdict::False) => {}
            Ok(_) | Err(ReasonerError::BudgetExceeded) => return Ok(None),
            Err(e) => return Err(e.into()),
        }
        match self.session.justify(q, Verdict::False, d + 1) {
            Ok(j) if j.depth() == d => Ok(Some(j)),
            Ok(_) | Err(JustificationError::DepthCapExceeded { .. }) => Ok(None),
            Err(JustificationError::Reasoner(ReasonerError::BudgetExceeded)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// A grammar-sampled axiom the KB neither entails nor contradicts.
    /// Facts are about the KB's individuals most of the time, but concepts
    /// and roles range over the whole pool.
    pub fn make_unknown(
        &mut self,
        level: u8,
        pool: &VocabularyPool,
        grammar: &GrammarConfig,
        rng: &mut impl Rng,
    ) -> Result<Query, QueryError> {
        let wish = self.wish(rng);
        let individuals = self.session.kb().individuals();
        let forms = admissible_forms(level);
        let mut fallback: Option<Axiom> = None;
        for attempt in 0..self.unknown_retries {
            let ax = if rng.gen_bool(0.5) {
                let lvl = forms.choose(rng).map_or(0, |f| f.0.max(f.1));
                sample_axiom(lvl, pool, grammar, rng, &[])
            } else {
                let fact = sample_fact(level, pool, grammar, rng);
                match (fact, individuals.choose(rng)) {
                    (Axiom::ConceptAssertion { concept, .. }, Some(a)) if rng.gen_bool(0.8) => Axiom::fact(concept, a.clone()),
                    (f, _) => f,
                }
            };
            if self.used.contains(&ax) {
                continue;
            }
            // prefer well-shaped candidates for the first half of the budget
            let best = self.balance.as_ref().map_or(true, |b| b.score(&wish, &ax) == 3);
            if !best && (attempt < self.unknown_retries / 2 || fallback.is_some()) {
                continue;
            }
            match self.session.reasoner().verdict(&ax) {
                Ok(Verdict::Unknown) => {}
                Ok(_) | Err(ReasonerError::BudgetExceeded) => continue,
                Err(e) => return Err(e.into()),
            }
            if best {
                self.used.insert(ax.clone());
                return Ok(Query { axiom: ax, answer: Verdict::Unknown, depth: None, justification: None });
            }
            fallback = Some(ax);
        }
        match fallback {
            Some(ax) => {
                self.used.insert(ax.clone());
                Ok(Query { axiom: ax, answer: Verdict::Unknown, depth: None, justification: None })
            }
            None => Err(QueryError::SamplingExhausted(self.unknown_retries)),
        }
    }
}

/// Outcome of [`build_query_set`]: a KB either yields every slot or is
/// rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuerySet {
    Accepted(Vec<Query>),
    Rejected(String),
}

/// One true, one false and one unknown query for every depth in `depths`
/// that is at most `max_depth`, ordered by depth then answer.
#[allow(clippy::too_many_arguments)]
pub fn build_query_set(
    builder: &mut QueryBuilder<'_, '_>,
    depths: &[usize],
    level: u8,
    pool: &VocabularyPool,
    grammar: &GrammarConfig,
    rng: &mut impl Rng,
) -> Result<QuerySet, QueryError> {
    let mut out = Vec::new();
    let mut ds: Vec<usize> = depths.iter().copied().filter(|&d| d <= builder.max_depth).collect();
    ds.sort_unstable();
    ds.dedup();
    for d in ds {
        builder.follow = None;
        let f = match builder.make_false(d, rng) {
            Ok(q) => q,
            Err(e) => return reject(e),
        };
        builder.follow = builder.reads_not(&f.axiom);
        let t = match builder.make_true(d, rng) {
            Ok(q) => q,
            Err(e) => return reject(e),
        };
        let u = match builder.make_unknown(level, pool, grammar, rng) {
            Ok(q) => q,
            Err(e) => return reject(e),
        };
        out.extend([t, f, u]);
    }
    builder.follow = None;
    Ok(QuerySet::Accepted(out))
}

fn reject(e: QueryError) -> Result<QuerySet, QueryError> {
    let budget = ReasonerError::BudgetExceeded;
    let rejectable = match &e {
        QueryError::NoCandidate(_) | QueryError::SamplingExhausted(_) => true,
        QueryError::Closure(ClosureError::BudgetExceeded(_)) => true,
        QueryError::Closure(ClosureError::Reasoner(r)) | QueryError::Reasoner(r) => *r == budget,
        QueryError::Justification(JustificationError::Reasoner(r)) => *r == budget,
        QueryError::Justification(JustificationError::DepthCapExceeded { .. }) => true,
        _ => false,
    };
    if rejectable {
        Ok(QuerySet::Rejected(e.to_string()))
    } else {
        Err(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_axiom, KnowledgeBase};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kb(lines: &[&str]) -> KnowledgeBase {
        KnowledgeBase::from_axioms(lines.iter().map(|l| parse_axiom(l).unwrap()))
    }

    fn budget() -> Duration {
        Duration::from_secs(5)
    }

    #[test]
    fn true_query_at_depth_one() {
        let k = kb(&["A(a)", "A subclassof B"]);
        let mut s = Session::new(&k);
        let mut b = QueryBuilder::new(&mut s, 3, budget());
        let q = b.make_true(1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(q.axiom, parse_axiom("B(a)").unwrap());
        assert_eq!(q.depth, Some(1));
        assert_eq!(q.justification.unwrap().indices.len(), 2);
    }

    #[test]
    fn lookup_and_missing_depth() {
        let k = kb(&["A(a)"]);
        let mut s = Session::new(&k);
        let mut b = QueryBuilder::new(&mut s, 5, budget());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = b.make_true(0, &mut rng).unwrap();
        assert_eq!(q.axiom, parse_axiom("A(a)").unwrap());
        assert_eq!(b.make_true(5, &mut rng), Err(QueryError::NoCandidate(5)));
    }

    #[test]
    fn false_query_negates_a_fact() {
        let k = kb(&["red(Anne)"]);
        let mut s = Session::new(&k);
        let mut b = QueryBuilder::new(&mut s, 3, budget());
        let q = b.make_false(0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(q.axiom, parse_axiom("(not red)(Anne)").unwrap());
        assert_eq!(q.depth, Some(0));
    }

    #[test]
    fn false_subsumption_by_method_b() {
        // the only depth-1 false candidates: not B(a), and A ⊑ not B via the witness
        let k = kb(&["A(a)", "A subclassof B", "C subclassof D"]);
        let mut s = Session::new(&k);
        let mut seen_sub = false;
        for seed in 0..20 {
            let mut b = QueryBuilder::new(&mut s, 2, budget());
            let q = b.make_false(1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(q.depth, Some(1));
            seen_sub |= q.axiom == parse_axiom("A subclassof (not B)").unwrap();
        }
        assert!(seen_sub);
    }

    #[test]
    fn unknown_queries_are_unknown() {
        let k = kb(&["red(Anne)", "red subclassof kind"]);
        let pool = VocabularyPool::pool_a();
        let g = GrammarConfig::default();
        let mut s = Session::new(&k);
        let mut b = QueryBuilder::new(&mut s, 1, budget());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let q = b.make_unknown(1, &pool, &g, &mut rng).unwrap();
            assert_eq!(q.depth, None);
            assert_eq!(crate::reasoner::entails(&k, &q.axiom).unwrap(), Verdict::Unknown);
        }
    }

    #[test]
    fn query_set_shape_and_rejection() {
        let k = kb(&["A(a)", "A subclassof B", "B subclassof C"]);
        let pool = VocabularyPool::pool_a();
        let g = GrammarConfig::default();
        let mut s = Session::new(&k);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut b = QueryBuilder::new(&mut s, 2, budget());
        let QuerySet::Accepted(qs) = build_query_set(&mut b, &[0, 1, 2], 0, &pool, &g, &mut rng).unwrap() else {
            panic!("expected acceptance")
        };
        assert_eq!(qs.len(), 9);
        let answers: Vec<Verdict> = qs.iter().map(|q| q.answer).collect();
        assert_eq!(&answers[..3], &[Verdict::True, Verdict::False, Verdict::Unknown]);
        let mut s = Session::new(&k);
        let mut b = QueryBuilder::new(&mut s, 3, budget());
        let r = build_query_set(&mut b, &[0, 1, 2, 3], 0, &pool, &g, &mut rng).unwrap();
        assert!(matches!(r, QuerySet::Rejected(_)));
    }

    #[test]
    fn balance_prefers_wanted_shape() {
        let k = kb(&["A(a)", "(not B)(a)", "C(a)"]);
        let describe = |ax: &Axiom| (ax.to_string().contains("not"), 3usize);
        let mut s = Session::new(&k);
        let mut hits = 0;
        for seed in 0..40 {
            let mut b = QueryBuilder::new(&mut s, 0, budget()).with_balance(Balance {
                describe: &describe,
                not_rate: 1.0,
                false_not_rate: 1.0,
                words: 0..=10,
            });
            let q = b.make_true(0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            hits += usize::from(q.axiom.to_string().contains("not"));
        }
        assert_eq!(hits, 40);
    }
}
