//! Property checks of text measurement, constraints and metrics.

use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;
use serde_json::Value;
use turnwise::constraint::{
    conflicts_with, render_fragment, sample_constraint, verify, ConstraintSpec, Group, Instruction, SamplerConfig,
};
use turnwise::metrics::{survival_curve, DialogueScore};
use turnwise::rng::DrawStream;
use turnwise::session::compose_passing;
use turnwise::text::{compute_stats, keyword_occurrences, validate_format, FormatKind};

fn naive_occurrences(text: &str, keyword: &str) -> usize {
    let strip = |t: &str| t.trim_matches(|c: char| c.is_ascii_punctuation()).to_string();
    let hay: Vec<String> = text.split_whitespace().map(strip).filter(|t| !t.is_empty()).collect();
    let needle: Vec<String> = keyword.split_whitespace().map(strip).filter(|t| !t.is_empty()).collect();
    let mut count = 0;
    for i in 0..hay.len() {
        if i + needle.len() <= hay.len() && !needle.is_empty() && (0..needle.len()).all(|j| hay[i + j] == needle[j]) {
            count += 1;
        }
    }
    count
}

fn token() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("data".to_string()),
        Just("Data".to_string()),
        Just("data,".to_string()),
        Just("(data)".to_string()),
        Just("database".to_string()),
        Just("big".to_string()),
        Just("big-data".to_string()),
        Just("...".to_string()),
        "[a-c]{1,3}",
    ]
}

fn text_of_tokens() -> impl Strategy<Value = String> {
    prop::collection::vec((token(), prop_oneof![Just(" "), Just("  "), Just("\n"), Just("\t")]), 0..30)
        .prop_map(|parts| parts.into_iter().map(|(t, s)| t + s).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn keyword_count_matches_naive_scan(
        text in text_of_tokens(),
        keyword in prop_oneof![Just("data"), Just("Data"), Just("big data"), Just("a"), Just("big-data")],
    ) {
        prop_assert_eq!(keyword_occurrences(&text, keyword), naive_occurrences(&text, keyword));
    }
}

proptest! {
    #[test]
    fn stats_grow_under_concatenation(a in "[a-zA-Z .!?,\n-]{0,80}", b in "[a-zA-Z .!?,\n-]{0,80}") {
        let whole = format!("{a}\n\n{b}");
        let (sa, sw) = (compute_stats(&a), compute_stats(&whole));
        prop_assert!(sw.words >= sa.words);
        prop_assert!(sw.characters >= sa.characters);
        prop_assert!(sw.sentences >= sa.sentences);
        prop_assert!(sw.uppercase_letters <= sw.cased_letters);
    }

    #[test]
    fn survival_is_non_increasing(lengths in prop::collection::vec(1usize..60, 1..20), cap in 1u32..70) {
        let dialogues: Vec<DialogueScore> =
            lengths.iter().map(|n| DialogueScore::from_flags(&vec![true; *n])).collect();
        let curve = survival_curve(&dialogues, cap).unwrap();
        prop_assert_eq!(curve[0], 1.0);
        prop_assert!(curve.windows(2).all(|w| w[0] >= w[1]));
    }
}

fn random_json(rng: &mut DrawStream, depth: u32) -> Value {
    let pick = if depth > 3 { rng.below(4) } else { rng.below(6) };
    match pick {
        0 => Value::Null,
        1 => Value::Bool(rng.chance(0.5)),
        2 => serde_json::json!(rng.below(2000) as i64 - 1000),
        3 => Value::String((0..rng.below(6)).map(|_| *rng.pick(&['a', 'é', '"', '\\', '\n', ' ', '🌊'])).collect()),
        4 => Value::Array((0..rng.below(4)).map(|_| random_json(rng, depth + 1)).collect()),
        _ => Value::Object((0..rng.below(4)).map(|i| (format!("k{i}"), random_json(rng, depth + 1))).collect()),
    }
}

fn mutate(rng: &mut DrawStream, s: &str) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    let at = rng.index(chars.len() + 1);
    match rng.below(3) {
        0 if !chars.is_empty() => {
            chars.remove(at.min(chars.len() - 1));
        }
        1 => chars.insert(at, *rng.pick(&[',', '{', ']', '"', ':', '1', 'x', ' '])),
        _ => chars.truncate(at),
    }
    chars.into_iter().collect()
}

#[test]
fn json_validator_agrees_with_serde_json() {
    let mut rng = DrawStream::from_seed(41);
    let mut corpus = vec!["1e5".to_string(), "-0.5".into(), "01".into(), "1.".into(), "\"\\u00e9\"".into(), " [ ] ".into()];
    while corpus.len() < 100 {
        let doc = serde_json::to_string_pretty(&random_json(&mut rng, 0)).unwrap();
        if rng.chance(0.5) {
            corpus.push(doc);
        } else {
            corpus.push(mutate(&mut rng, &doc));
        }
    }
    let mut valid = 0;
    for doc in &corpus {
        let ours = validate_format(FormatKind::Json, doc).valid;
        let theirs = serde_json::from_str::<Value>(doc).is_ok();
        assert_eq!(ours, theirs, "{doc:?}");
        valid += usize::from(ours);
    }
    assert!(valid > 20 && valid < 90, "{valid} valid documents");
}

fn pool() -> Vec<String> {
    ["Paris", "ocean", "data", "machine learning", "Data", "waves", "x,y", "say \"hi\""]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[test]
fn fragments_are_injective() {
    let mut rng = DrawStream::from_seed(7);
    let config = SamplerConfig::default();
    let pool = pool();
    let mut seen: BTreeMap<String, ConstraintSpec> = BTreeMap::new();
    let mut distinct = HashSet::new();
    for _ in 0..10_000 {
        let group = *rng.pick(&Group::ALL);
        let spec = sample_constraint(group, &pool, &mut rng, &config).unwrap();
        distinct.insert(serde_json::to_string(&spec).unwrap());
        if let Some(other) = seen.insert(render_fragment(&spec), spec.clone()) {
            assert_eq!(other, spec, "two specs render the same");
        }
    }
    assert_eq!(seen.len(), distinct.len());
}

const PIECES: &[&str] = &[
    "Paris", "ocean", "data", "machine", "learning", "Data", "- ", "* ", "1. ", "\n", "\n\n", " ", "\"", ",", ".",
    "!", ";", "{", "}", "[", "]", "<a>", "</a>", "🌊", "A", "z", "WORD", "word", "```", "#",
];

fn candidates(a: &ConstraintSpec, b: &ConstraintSpec, rng: &mut DrawStream) -> Vec<String> {
    let mut out = Vec::new();
    for spec in [a, b] {
        if let Ok(r) = compose_passing(&Instruction::from_constraints([spec.clone()]).unwrap()) {
            out.push(r.to_uppercase());
            out.push(r.to_lowercase());
            out.push(r);
        }
    }
    let composed = out.clone();
    for x in &composed {
        for y in &composed {
            out.push(format!("{x}\n\n{y}"));
        }
    }
    let literals: Vec<String> = [a, b].iter().filter_map(|s| s.keyword().map(str::to_string)).collect();
    while out.len() < 1000 {
        let mut s = String::new();
        if !composed.is_empty() && rng.chance(0.5) {
            s.push_str(rng.pick(&composed));
        }
        for _ in 0..rng.below(12) {
            if !literals.is_empty() && rng.chance(0.3) {
                s.push_str(rng.pick(&literals));
            } else {
                s.push_str(rng.pick(PIECES));
            }
        }
        out.push(s);
    }
    out
}

#[test]
fn flagged_pairs_are_unsatisfiable() {
    let mut rng = DrawStream::from_seed(2024);
    let config = SamplerConfig::default();
    let pool = pool();
    let mut flagged = 0;
    for _ in 0..20_000 {
        let (ga, gb) = (*rng.pick(&Group::ALL), *rng.pick(&Group::ALL));
        if ga == gb {
            continue;
        }
        let a = sample_constraint(ga, &pool, &mut rng, &config).unwrap();
        let b = sample_constraint(gb, &pool, &mut rng, &config).unwrap();
        if !conflicts_with(&a, &b) {
            continue;
        }
        flagged += 1;
        for r in candidates(&a, &b, &mut rng) {
            assert!(
                !(verify(&a, &r).satisfied && verify(&b, &r).satisfied),
                "{a} and {b} are flagged but both hold on {r:?}"
            );
        }
        if flagged == 200 {
            break;
        }
    }
    assert_eq!(flagged, 200);
}
