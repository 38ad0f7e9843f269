use std::collections::HashSet;

use deltagen_core::dataset::{audit, compute_stats, generate_dataset, read_jsonl, split, write_jsonl, GenConfig};
use deltagen_core::generator::VocabularyPool;
use deltagen_core::reasoner::{entails, Budget, Verdict};
use deltagen_core::syntax::{parse_axiom, KnowledgeBase};
use deltagen_core::verbalize::{hard_symbolic, parse_sentence, soft_symbolic, TemplateSet};

fn config() -> GenConfig {
    GenConfig { level: 1, depths: vec![0, 1, 2], kbs: 6, seed: 42, ..Default::default() }
}

#[test]
fn examples_are_consistent_records() {
    let cfg = config();
    let ds = generate_dataset(&cfg).unwrap();
    assert_eq!(ds.examples.len(), 3 * 3 * 6);
    let mut per_kb = std::collections::BTreeMap::new();
    for e in &ds.examples {
        *per_kb.entry((e.pool.clone(), e.kb)).or_insert(0) += 1;
        assert_eq!(e.context.len(), e.kb_lf.len());
        // each context sentence reads back as its logical form
        let pool = VocabularyPool::by_name(&e.pool).unwrap();
        let ts = TemplateSet::for_pool(&pool);
        for (s, lf) in e.context.iter().zip(&e.kb_lf) {
            assert_eq!(parse_sentence(s, &ts, &pool).unwrap(), parse_axiom(lf).unwrap(), "{s}");
        }
        let kb = KnowledgeBase::from_axioms(e.kb_lf.iter().map(|l| parse_axiom(l).unwrap()));
        assert_eq!(entails(&kb, &parse_axiom(&e.query_lf).unwrap()).unwrap(), e.answer);
        assert_eq!(e.depth.is_none(), e.answer == Verdict::Unknown);
    }
    assert_eq!(per_kb.len(), 6);
    assert!(per_kb.values().all(|n| *n == 9));
    assert_eq!(audit(&ds.examples, Budget::default()).mismatches, vec![]);
}

#[test]
fn serialization_splits_and_translations() {
    let ds = generate_dataset(&GenConfig { kbs: 10, level: 0, ..config() }).unwrap();
    let mut buf = Vec::new();
    write_jsonl(&ds.examples, &mut buf).unwrap();
    assert_eq!(read_jsonl(&buf[..]).unwrap(), ds.examples);

    let parts = split(&ds.examples, [0.7, 0.1, 0.2], 1).unwrap();
    let ids: Vec<HashSet<(String, usize)>> =
        parts.iter().map(|p| p.iter().map(|e| (e.pool.clone(), e.kb)).collect()).collect();
    assert_eq!(ids.iter().map(HashSet::len).collect::<Vec<_>>(), vec![7, 1, 2]);
    assert!(ids[0].is_disjoint(&ids[1]) && ids[0].is_disjoint(&ids[2]) && ids[1].is_disjoint(&ids[2]));

    for e in &ds.examples {
        let soft = soft_symbolic(e).unwrap();
        assert_eq!((soft.answer, soft.depth, &soft.justification), (e.answer, e.depth, &e.justification));
        assert_eq!(soft_symbolic(&soft).unwrap(), soft);
        assert!(!soft.context.iter().any(|s| s.contains("Anne") || s.contains("Ioanna")));
        let hard = hard_symbolic(e).unwrap();
        assert_eq!(hard.answer, e.answer);
        for (s, lf) in hard.context.iter().zip(&e.kb_lf) {
            assert_eq!(s.contains("is subsumed by"), lf.contains("subclassof"));
        }
    }
    let stats = compute_stats(&ds.examples);
    assert_eq!(stats.answer_counts.values().sum::<usize>(), ds.examples.len());
    assert_eq!(stats.depth_histogram.values().sum::<usize>(), ds.examples.len());
}

#[test]
fn flipped_answer_is_caught() {
    let mut ds = generate_dataset(&GenConfig { kbs: 2, level: 0, depths: vec![0], ..config() }).unwrap();
    ds.examples[1].answer = match ds.examples[1].answer {
        Verdict::True => Verdict::Unknown,
        _ => Verdict::True,
    };
    let report = audit(&ds.examples, Budget::default());
    assert_eq!(report.mismatches.len(), 1);
    assert_eq!(report.mismatches[0].line, 2);
}

#[test]
fn output_independent_of_thread_count() {
    let cfg = GenConfig { kbs: 4, ..config() };
    let run = |n| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        let ds = pool.install(|| generate_dataset(&cfg)).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&ds.examples, &mut buf).unwrap();
        buf
    };
    assert_eq!(run(1), run(3));
}
