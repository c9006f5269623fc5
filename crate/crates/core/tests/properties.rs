use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use proptest::prelude::*;

use earkit::agreement::{cohen_kappa, spans_overlap};
use earkit::annotation::{EarAnnotation, SlotFill, Span, Stage};
use earkit::project::{project_from_json, project_to_json, Project};
use earkit::text::char_slice;
use earkit::{render_explanation, Catalog};

fn label_pairs() -> impl Strategy<Value = Vec<(u8, u8)>> {
    prop::collection::vec((0u8..5, 0u8..5), 1..60)
}

fn naive_kappa(pairs: &[(u8, u8)]) -> f64 {
    let n = pairs.len() as f64;
    let po = pairs.iter().filter(|(a, b)| a == b).count() as f64 / n;
    let pe: f64 = (0u8..5)
        .map(|l| {
            let a = pairs.iter().filter(|p| p.0 == l).count() as f64;
            let b = pairs.iter().filter(|p| p.1 == l).count() as f64;
            a * b / (n * n)
        })
        .sum();
    if (1.0 - pe).abs() < 1e-12 {
        if po == 1.0 { 1.0 } else { 0.0 }
    } else {
        (po - pe) / (1.0 - pe)
    }
}

fn fill(spans: Vec<(u8, usize, usize)>, text: String) -> SlotFill {
    SlotFill {
        slot: earkit::SlotName::X,
        implicit: spans.is_empty(),
        spans: spans
            .into_iter()
            .map(|(seg, start, len)| Span {
                segment: format!("a{seg}"),
                start,
                end: start + len,
            })
            .collect(),
        text,
    }
}

fn fills() -> impl Strategy<Value = SlotFill> {
    (
        prop::collection::vec((0u8..2, 0usize..40, 1usize..10), 0..3),
        "[a-c ]{1,8}",
    )
        .prop_map(|(spans, text)| fill(spans, text))
}

proptest! {
    #[test]
    fn kappa_matches_definition(pairs in label_pairs()) {
        let k = cohen_kappa(&pairs).unwrap();
        prop_assert!((k - naive_kappa(&pairs)).abs() < 1e-9);
        prop_assert!(k <= 1.0 + 1e-12);
    }

    #[test]
    fn kappa_ignores_order_and_names(pairs in label_pairs(), rotate in 0usize..60, shift in 1u8..5) {
        let k = cohen_kappa(&pairs).unwrap();
        let mut rotated = pairs.clone();
        let len = rotated.len();
        rotated.rotate_left(rotate % len);
        prop_assert!((k - cohen_kappa(&rotated).unwrap()).abs() < 1e-9);
        let renamed: Vec<(String, String)> = pairs
            .iter()
            .map(|(a, b)| (format!("L{}", (a + shift) % 5), format!("L{}", (b + shift) % 5)))
            .collect();
        prop_assert!((k - cohen_kappa(&renamed).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn kappa_swapping_annotators_is_symmetric(pairs in label_pairs()) {
        let swapped: Vec<(u8, u8)> = pairs.iter().map(|(a, b)| (*b, *a)).collect();
        prop_assert!((cohen_kappa(&pairs).unwrap() - cohen_kappa(&swapped).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn char_slice_matches_collect(s in "\\PC{0,20}", start in 0usize..25, len in 0usize..25) {
        let chars: Vec<char> = s.chars().collect();
        let end = start + len;
        let want = (end <= chars.len()).then(|| chars[start..end].iter().collect::<String>());
        prop_assert_eq!(char_slice(&s, start, end).map(str::to_string), want);
    }

    #[test]
    fn overlap_is_symmetric(a in fills(), b in fills()) {
        prop_assert_eq!(spans_overlap(&a, &b), spans_overlap(&b, &a));
    }

    #[test]
    fn overlap_is_reflexive_for_nonblank(a in fills()) {
        prop_assume!(!a.spans.is_empty() || a.text.chars().any(char::is_alphanumeric));
        prop_assert!(spans_overlap(&a, &a));
    }

    #[test]
    fn render_keeps_fill_text_verbatim(x in "[{}a-z ]{0,12}", y in "[{}a-z ]{0,12}") {
        let cat = Catalog::shipped();
        for p in cat.patterns().iter().filter(|p| !p.is_other()) {
            let fills: BTreeMap<_, _> = p
                .slot_names()
                .enumerate()
                .map(|(i, s)| (s, if i % 2 == 0 { x.clone() } else { y.clone() }))
                .collect();
            let out = render_explanation(p, &fills).unwrap();
            let braces_in = |t: &str| t.matches('{').count();
            let fill_open: usize = p
                .template
                .split('{')
                .skip(1)
                .map(|rest| rest.split('}').next().unwrap())
                .filter_map(|name| name.parse().ok().and_then(|n| fills.get(&n)))
                .map(|t| braces_in(t))
                .sum();
            // Every placeholder is consumed and fill text is never expanded again.
            prop_assert_eq!(braces_in(&out), fill_open, "{}", p.id);
        }
    }

    #[test]
    fn project_json_round_trips(
        notes in prop::collection::vec(prop::option::of("\\PC{0,16}"), 0..6),
        seed in any::<u64>(),
        texts in prop::collection::vec("\\PC{1,10}", 0..6),
    ) {
        let mut project = Project::new("p", Vec::new(), vec!["a".into(), "b".into()]);
        project.rng_seed = seed;
        for (i, note) in notes.into_iter().enumerate() {
            project.annotations.push(EarAnnotation {
                text_id: format!("t{i}"),
                relation_id: "c1".into(),
                annotator: if i % 2 == 0 { "a".into() } else { "b".into() },
                stage: Stage::One,
                pattern_id: "S01".into(),
                fills: texts
                    .iter()
                    .map(|t| SlotFill::implicit(earkit::SlotName::Y, t.clone()))
                    .collect(),
                note,
            });
        }
        let json = project_to_json(&project);
        let back = project_from_json(&json, Path::new("mem.json")).unwrap();
        prop_assert_eq!(back, project);
    }
}

#[test]
fn kappa_label_set_is_union_of_both_sides() {
    let pairs = [("A", "B"), ("B", "C"), ("C", "A")];
    let labels: BTreeSet<&str> = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
    assert_eq!(labels.len(), 3);
    assert!(cohen_kappa(&pairs).unwrap() < 0.0);
}
