mod common;

use common::*;
use deltagen_core::closure::{min_justification, Session};
use deltagen_core::generator::{sample_kb, GrammarConfig, KbSizeRange, VocabularyPool};
use deltagen_core::reasoner::{Reasoner, Verdict};
use deltagen_core::syntax::{negate_fact, parse_axiom, KnowledgeBase};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Duration;

fn kb(lines: &[&str]) -> KnowledgeBase {
    KnowledgeBase::from_axioms(lines.iter().map(|l| parse_axiom(l).unwrap()))
}

#[test]
fn chain_example_matches_enumeration() {
    let k = kb(&["A(a)", "A subclassof B", "B subclassof C", "D subclassof E"]);
    let q = parse_axiom("C(a)").unwrap();
    let j = min_justification(&k, &q, Verdict::True, 4).unwrap();
    assert_eq!(j.indices.len(), 3);
    assert_eq!(exhaustive_min_justification(&k, &q, Verdict::True), Some(3));
}

#[test]
fn k1_false_query_needs_both_axioms() {
    let k = kb(&["(admires only Nothing)(Anne)", "(admires only Nothing) subclassof (likes only quiet)"]);
    let q = parse_axiom("(likes some (not quiet))(Anne)").unwrap();
    assert_eq!(Reasoner::new(&k).verdict(&q).unwrap(), Verdict::False);
    assert_eq!(min_justification(&k, &q, Verdict::False, 3).unwrap().indices, vec![0, 1]);
    assert_eq!(exhaustive_min_justification(&k, &q, Verdict::False), Some(2));
}

/// Minimum justifications of closure facts and their negations agree with
/// unpruned subset enumeration on small generated KBs.
#[test]
fn generated_kbs_agree_with_enumeration() {
    let pool = VocabularyPool::pool_a();
    let g = GrammarConfig::default();
    let size = KbSizeRange { depth_target: 3, subsumptions: 2..=4, facts: 1..=4 };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut compared = 0;
    for i in 0..12 {
        let k = sample_kb((i % 2) as u8, &pool, &g, &size, &mut rng, 200).unwrap();
        let mut s = Session::new(&k);
        let entries: Vec<_> = s.closure(Duration::from_secs(5)).unwrap().iter().map(|e| e.axiom.clone()).collect();
        for q in entries.iter().take(6) {
            let want = exhaustive_min_justification(&k, q, Verdict::True).unwrap();
            assert_eq!(s.justify(q, Verdict::True, 9).unwrap().indices.len(), want, "{q}");
            if let Ok(nq) = negate_fact(q) {
                let want = exhaustive_min_justification(&k, &nq, Verdict::False).unwrap();
                assert_eq!(s.justify(&nq, Verdict::False, 9).unwrap().indices.len(), want, "{nq}");
            }
            compared += 1;
        }
    }
    assert!(compared > 20);
}
