//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p turnwise --test acceptance`. Set
//! `UPDATE_GOLDENS=1` to rewrite the end-to-end golden files.

mod support;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Deserialize;
use serde_json::Value;
use support::{serve, user_turns, Reply};
use turnwise::chat::{ChatClient, EndpointConfig};
use turnwise::constraint::{
    conflicts_with, verify, verify_instruction, CaseRule, ConstraintSpec, Group, Instruction, LengthUnit, Relation,
};
use turnwise::metrics::{rec, report, report_csv, report_transcripts, DialogueScore, MetricsReport, TurnScore};
use turnwise::rng::DrawStream;
use turnwise::script::{
    generate_script, qc_filter, sample_corpus, write_script_jsonl, Evolution, EvolutionConfig, QcOutcome,
    Transition, TurnPlan,
};
use turnwise::session::{
    compose_passing, run_session, ChatAdapter, OracleAgent, SessionConfig, SessionTranscript, Termination,
};
use turnwise::text::{compute_stats, keyword_occurrences};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = thread::available_parallelism().map_or(4, |n| n.get());
    let chunk = items.len().div_ceil(threads).max(1);
    let f = &f;
    thread::scope(|s| {
        let handles: Vec<_> =
            items.chunks(chunk).map(|c| s.spawn(move || c.iter().map(f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn session_config(patience: u32, cap: u32) -> SessionConfig {
    SessionConfig {
        patience_max: patience,
        evolution: EvolutionConfig { max_turns_cap: cap, ..EvolutionConfig::default() },
        ..SessionConfig::default()
    }
}

fn run_oracle(config: &SessionConfig, agent: &OracleAgent, seed: u64) -> SessionTranscript {
    run_session(&sample_corpus(), config, seed, agent, None).expect("oracle session runs")
}

fn transcript_bytes(t: &SessionTranscript) -> Vec<u8> {
    let mut out = Vec::new();
    t.write_jsonl(&mut out).unwrap();
    out
}

// ---------------------------------------------------------------------------
// 1. Patience protocol
// ---------------------------------------------------------------------------

fn patience_trace(t: &SessionTranscript) -> Vec<u32> {
    t.records.iter().map(|r| r.patience_after).collect()
}

fn patience_protocol() -> Outcome {
    for (patience, expected) in [(3, vec![2, 1, 0]), (1, vec![0]), (2, vec![1, 0])] {
        let config = session_config(patience, 50);
        let seeds: Vec<u64> = (1..=100).collect();
        let transcripts = par_map(&seeds, |s| run_oracle(&config, &OracleAgent::AlwaysFail, *s));
        for t in &transcripts {
            ensure(patience_trace(t) == expected, || {
                format!("P={patience} seed {}: trace {:?}", t.header.seed, patience_trace(t))
            })?;
            ensure(*t.termination() == Termination::PatienceExhausted, || {
                format!("P={patience} seed {}: {:?}", t.header.seed, t.termination())
            })?;
            ensure(t.records.iter().all(|r| !r.turn_success), || "AlwaysFail turn passed".into())?;
        }
    }
    // Successes restore patience, so only consecutive failures end a run.
    let agent = OracleAgent::parse("pattern:SFSFF").unwrap();
    for (patience, len) in [(1, 2), (2, 5)] {
        let t = run_oracle(&session_config(patience, 50), &agent, 5);
        ensure(t.records.len() == len, || format!("pattern SFSFF, P={patience}: {} turns", t.records.len()))?;
    }
    Ok("AlwaysFail traces [2,1,0], [0], [1,0] on 100 seeds each".into())
}

// ---------------------------------------------------------------------------
// 2. Metric oracle equivalence
// ---------------------------------------------------------------------------

fn random_dialogues(rng: &mut DrawStream) -> Vec<DialogueScore> {
    let count = rng.between(1, 6);
    (0..count)
        .map(|_| {
            let len = rng.between(1, 60);
            let quality = rng.unit();
            let turns = (0..len)
                .map(|_| {
                    let mut pool = Group::ALL.to_vec();
                    let n = rng.between(1, 6) as usize;
                    let groups: Vec<(Group, bool)> = (0..n)
                        .map(|_| {
                            let g = pool.remove(rng.index(pool.len()));
                            (g, rng.chance(quality.max(0.05)))
                        })
                        .collect();
                    let satisfied = groups.iter().filter(|(_, ok)| *ok).count();
                    TurnScore { constraints: n, satisfied, success: satisfied == n, groups }
                })
                .collect();
            DialogueScore { turns }
        })
        .collect()
}

/// Straightforward recomputation of every metric by index loops.
fn reference_report(d: &[DialogueScore], cap: u32) -> MetricsReport {
    let n_d = d.len();
    let mut n_t = 0usize;
    for x in d {
        n_t += x.turns.len();
    }
    let ok = |t: &TurnScore| t.satisfied == t.constraints;

    let mut csr_sum = 0.0;
    let mut isr_count = 0usize;
    for x in d {
        for t in &x.turns {
            csr_sum += t.satisfied as f64 / t.constraints as f64;
            if ok(t) {
                isr_count += 1;
            }
        }
    }

    let (mut len_sum, mut acc_sum, mut succ_sum, mut lss_sum, mut rob_sum) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut rec_sum, mut rec_defined) = (0.0, 0usize);
    for x in d {
        let turns = &x.turns;
        let mut acc = 0.0;
        let mut succ = 0usize;
        for t in turns {
            acc += t.satisfied as f64 / t.constraints as f64;
            if ok(t) {
                succ += 1;
            }
        }
        let mut longest = 0usize;
        for start in 0..turns.len() {
            let mut end = start;
            while end < turns.len() && ok(&turns[end]) {
                end += 1;
            }
            longest = longest.max(end - start);
        }
        let (mut num, mut den) = (0usize, 0usize);
        for i in 1..turns.len() {
            if !ok(&turns[i - 1]) {
                den += 1;
                if ok(&turns[i]) {
                    num += 1;
                }
            }
        }
        len_sum += turns.len() as f64;
        acc_sum += acc;
        succ_sum += succ as f64;
        lss_sum += longest as f64;
        rob_sum += succ as f64 / turns.len() as f64;
        if den > 0 {
            rec_sum += num as f64 / den as f64;
            rec_defined += 1;
        }
    }

    let mut per_group_isr = BTreeMap::new();
    for g in Group::ALL {
        let (mut hit, mut seen) = (0usize, 0usize);
        for x in d {
            for t in &x.turns {
                for (h, sat) in &t.groups {
                    if *h == g {
                        seen += 1;
                        if *sat {
                            hit += 1;
                        }
                    }
                }
            }
        }
        if seen > 0 {
            per_group_isr.insert(g, hit as f64 / seen as f64);
        }
    }

    let mut survival = Vec::new();
    for k in 1..=cap as usize {
        let mut alive = 0usize;
        for x in d {
            if x.turns.len() >= k {
                alive += 1;
            }
        }
        survival.push(alive as f64 / n_d as f64);
    }

    let dn = n_d as f64;
    MetricsReport {
        csr: csr_sum / n_t as f64,
        isr: isr_count as f64 / n_t as f64,
        act_len: len_sum / dn,
        act_acc: acc_sum / dn,
        act_succ: succ_sum / dn,
        lss: lss_sum / dn,
        rob: rob_sum / dn,
        rec: if rec_defined == 0 { 0.0 } else { rec_sum / rec_defined as f64 },
        rec_defined_dialogues: rec_defined,
        per_group_isr,
        survival,
        n_dialogues: n_d,
        n_turns_total: n_t,
    }
}

fn metric_oracle() -> Outcome {
    let mut rng = DrawStream::from_seed(0x5EED_0002);
    for case in 0..1000 {
        let dialogues = random_dialogues(&mut rng);
        let cap = rng.between(1, 60);
        let got = report(&dialogues, cap).map_err(|e| format!("set {case}: {e}"))?;
        let want = reference_report(&dialogues, cap);
        ensure(got == want, || format!("set {case}: module {got:?}\nreference {want:?}"))?;
    }
    Ok("1000 randomized sets, bit-identical to the reference".into())
}

// ---------------------------------------------------------------------------
// 3. Robustness bound
// ---------------------------------------------------------------------------

fn robustness_bound() -> Outcome {
    let mut rng = DrawStream::from_seed(0x5EED_0003);
    let jobs: Vec<(OracleAgent, u32, u64)> = (0..500)
        .map(|i| {
            let agent = OracleAgent::Bernoulli { p: 0.3 + 0.65 * rng.unit(), seed: rng.next_u64() };
            (agent, rng.between(1, 4), 20_000 + i)
        })
        .collect();
    let transcripts = par_map(&jobs, |(agent, patience, seed)| run_oracle(&session_config(*patience, 50), agent, *seed));
    let mut exhausted = 0;
    for (t, (_, patience, _)) in transcripts.iter().zip(&jobs) {
        if *t.termination() != Termination::PatienceExhausted {
            continue;
        }
        exhausted += 1;
        let n = t.records.len();
        let successes = t.records.iter().filter(|r| r.turn_success).count();
        ensure(successes + *patience as usize <= n, || {
            format!("seed {}: {successes} successes in {n} turns with P={patience}", t.header.seed)
        })?;
    }
    ensure(exhausted > 0, || "no session exhausted its patience".into())?;
    Ok(format!("{exhausted} of 500 sessions exhausted patience, all within the bound"))
}

// ---------------------------------------------------------------------------
// 4. Recovery hand case
// ---------------------------------------------------------------------------

fn recovery_hand_case() -> Outcome {
    // Failures at turns 2, 4 and 5 are followed by 1, 0 and 1.
    let d = DialogueScore::from_flags(&[true, false, true, false, false, true]);
    let (value, defined) = rec(&[d]).map_err(|e| e.to_string())?;
    ensure(value == 2.0 / 3.0 && defined == 1, || format!("REC = {value}, defined = {defined}"))?;
    Ok("REC(1,0,1,0,0,1) = 2/3".into())
}

// ---------------------------------------------------------------------------
// 5. Verifier conformance
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct GoldenCase {
    constraint: ConstraintSpec,
    response: String,
    satisfied: bool,
}

fn is_ref_punct(c: char) -> bool {
    c.is_ascii_punctuation() || c == '—'
}

fn ref_tokens(text: &str) -> Vec<String> {
    let mut raw: Vec<String> = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !cur.is_empty() {
                raw.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        raw.push(cur);
    }
    let mut out = Vec::new();
    for tok in raw {
        let chars: Vec<char> = tok.chars().collect();
        let mut a = 0;
        let mut b = chars.len();
        while a < b && is_ref_punct(chars[a]) {
            a += 1;
        }
        while b > a && is_ref_punct(chars[b - 1]) {
            b -= 1;
        }
        if a < b {
            out.push(chars[a..b].iter().collect());
        }
    }
    out
}

fn ref_sentences(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let term = |c: char| c == '.' || c == '!' || c == '?';
    let mut count = 0;
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if term(chars[i]) {
            let mut j = i;
            while j + 1 < chars.len() && term(chars[j + 1]) {
                j += 1;
            }
            if j + 1 == chars.len() || chars[j + 1].is_whitespace() {
                let seg: String = chars[start..=j].iter().collect();
                if !ref_tokens(&seg).is_empty() {
                    count += 1;
                }
                start = j + 1;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    let tail: String = chars[start..].iter().collect();
    if !ref_tokens(&tail).is_empty() {
        count += 1;
    }
    count
}

fn ref_paragraphs(text: &str) -> usize {
    let mut count = 0;
    let mut prev_blank = true;
    for line in text.split('\n') {
        let blank = line.chars().all(char::is_whitespace);
        if !blank && prev_blank {
            count += 1;
        }
        prev_blank = blank;
    }
    count
}

fn ref_bullets(text: &str) -> usize {
    let mut count = 0;
    for line in text.split('\n') {
        let t: Vec<char> = line.chars().skip_while(|c| c.is_whitespace()).collect();
        let marker = t.len() >= 2 && matches!(t[0], '-' | '*' | '+') && t[1] == ' ';
        let mut k = 0;
        while k < t.len() && t[k].is_ascii_digit() {
            k += 1;
        }
        let numbered = k > 0 && k + 1 < t.len() && t[k] == '.' && t[k + 1] == ' ';
        if marker || numbered {
            count += 1;
        }
    }
    count
}

fn ref_keyword(text: &str, keyword: &str) -> usize {
    let hay = ref_tokens(text);
    let needle = ref_tokens(keyword);
    let mut count = 0;
    if needle.is_empty() || hay.len() < needle.len() {
        return 0;
    }
    for i in 0..=hay.len() - needle.len() {
        let mut all = true;
        for j in 0..needle.len() {
            if hay[i + j] != needle[j] {
                all = false;
            }
        }
        if all {
            count += 1;
        }
    }
    count
}

const ATOMS: &[&str] = &[
    "alpha", "Beta", "GAMMA", "data", "database", "data,", "(data)", "well-known", "—", "...", "!", "?", ".",
    "2.5", "- ", "* ", "+ ", "1. ", "12. ", "\n", "\n\n", "  ", "\t", "🌊", "Éclair", "straße", "x", "Data",
    "machine", "learning", "\"quoted\"", "end.", "Yes!", "a;b", " - ", "why?!", "3.", "-x",
];

fn fuzz_text(rng: &mut DrawStream) -> String {
    let n = rng.between(0, 40);
    let mut out = String::new();
    for _ in 0..n {
        out.push_str(rng.pick(ATOMS));
        out.push_str(*rng.pick(&[" ", " ", " ", "", "\n"]));
    }
    out
}

fn found(detail: &str) -> usize {
    detail
        .split_whitespace()
        .skip_while(|w| *w != "found")
        .nth(1)
        .and_then(|w| w.trim_end_matches(',').parse().ok())
        .unwrap_or(usize::MAX)
}

fn verifier_conformance() -> Outcome {
    let text = fs::read_to_string(data_dir().join("data/verifier_golden.jsonl")).map_err(|e| e.to_string())?;
    let cases: Vec<GoldenCase> =
        text.lines().map(serde_json::from_str).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let mut per_variant: BTreeMap<String, usize> = BTreeMap::new();
    for (i, case) in cases.iter().enumerate() {
        let v = verify(&case.constraint, &case.response);
        ensure(v.satisfied == case.satisfied, || {
            format!("golden {}: {} on {:?} gave {} ({})", i + 1, case.constraint, case.response, v.satisfied, v.detail)
        })?;
        *per_variant.entry(format!("{}.{}", case.constraint.group().code(), case.constraint.variant())).or_default() += 1;
    }
    ensure(cases.len() >= 135, || format!("only {} golden cases", cases.len()))?;
    ensure(per_variant.len() == 25 && per_variant.values().all(|n| *n >= 3), || format!("coverage {per_variant:?}"))?;

    let mut rng = DrawStream::from_seed(0x5EED_0005);
    for i in 0..200 {
        let t = fuzz_text(&mut rng);
        let stats = compute_stats(&t);
        let (mut cased, mut upper) = (0, 0);
        for c in t.chars() {
            if c.is_uppercase() {
                upper += 1;
            }
            if c.is_uppercase() || c.is_lowercase() {
                cased += 1;
            }
        }
        let expect = [
            ("words", stats.words, ref_tokens(&t).len()),
            ("sentences", stats.sentences, ref_sentences(&t)),
            ("paragraphs", stats.paragraphs, ref_paragraphs(&t)),
            ("characters", stats.characters, t.chars().count()),
            ("bullets", stats.bullets, ref_bullets(&t)),
            ("cased", stats.cased_letters, cased),
            ("uppercase", stats.uppercase_letters, upper),
        ];
        for (name, got, want) in expect {
            ensure(got == want, || format!("text {i} {t:?}: {name} {got} vs reference {want}"))?;
        }
        for (unit, want) in [
            (LengthUnit::Word, ref_tokens(&t).len()),
            (LengthUnit::Sentence, ref_sentences(&t)),
            (LengthUnit::Paragraph, ref_paragraphs(&t)),
            (LengthUnit::Character, t.chars().count()),
        ] {
            let v = verify(&ConstraintSpec::Length { unit, relation: Relation::MoreThan, bound: 1 }, &t);
            ensure(found(&v.detail) == want, || format!("text {i}: LEN.{} {:?} vs {want}", unit.name(), v.detail))?;
        }
        let v = verify(&ConstraintSpec::BulletPoints { count: 1 }, &t);
        ensure(found(&v.detail) == ref_bullets(&t), || format!("text {i}: CTI {:?}", v.detail))?;
        for keyword in ["data", "machine learning", "alpha", "end", "Data"] {
            let want = ref_keyword(&t, keyword);
            ensure(keyword_occurrences(&t, keyword) == want, || format!("text {i}: keyword {keyword:?}"))?;
            let v = verify(&ConstraintSpec::KeywordCount { keyword: keyword.into(), count: 1 }, &t);
            ensure(found(&v.detail) == want, || format!("text {i}: EXT {keyword:?} {:?} vs {want}", v.detail))?;
        }
        let v = verify(&ConstraintSpec::Case(CaseRule::AllUpper), &t);
        ensure(v.detail == format!("{upper} of {cased} cased letters are uppercase"), || {
            format!("text {i}: CS {:?}", v.detail)
        })?;
    }
    Ok(format!("{} golden cases over {} variants; 200 fuzzed texts match the naive scanner", cases.len(), per_variant.len()))
}

// ---------------------------------------------------------------------------
// 6. Generation invariants
// ---------------------------------------------------------------------------

fn check_plans(seed: u64, plans: &[TurnPlan], config: &EvolutionConfig) -> Result<(), String> {
    let mut stored: BTreeMap<String, Instruction> = BTreeMap::new();
    let mut current: Option<String> = None;
    for plan in plans {
        let at = format!("seed {seed} turn {}", plan.turn);
        let groups: Vec<Group> = plan.instruction.groups().collect();
        let distinct: HashSet<Group> = groups.iter().copied().collect();
        ensure(distinct.len() == groups.len(), || format!("{at}: repeated group"))?;
        let size = plan.instruction.len() as u32;
        ensure(size >= 1 && size <= config.max_constraints_per_instruction, || format!("{at}: size {size}"))?;
        let specs: Vec<&ConstraintSpec> = plan.instruction.iter().collect();
        for (i, a) in specs.iter().enumerate() {
            for b in &specs[i + 1..] {
                ensure(!conflicts_with(a, b), || format!("{at}: {a} conflicts with {b}"))?;
            }
        }
        let known = stored.contains_key(&plan.topic);
        match plan.transition {
            Transition::New => ensure(!known && plan.prev_instruction.is_none(), || format!("{at}: New on a known topic"))?,
            Transition::Continue => ensure(current.as_deref() == Some(plan.topic.as_str()), || {
                format!("{at}: Continue switched topic")
            })?,
            Transition::Backtrack => ensure(known && current.as_deref() != Some(plan.topic.as_str()), || {
                format!("{at}: Backtrack to an unvisited or current topic")
            })?,
        }
        ensure(plan.turn != 1 || plan.transition == Transition::New, || format!("{at}: first turn not New"))?;
        ensure(plan.prev_instruction.as_ref() == stored.get(&plan.topic), || format!("{at}: stale previous instruction"))?;
        let before: HashSet<Group> = plan.prev_instruction.iter().flat_map(|i| i.groups()).collect();
        let g = plan.evolution.group();
        let expected: HashSet<Group> = match &plan.evolution {
            Evolution::Add { .. } => {
                ensure(!before.contains(&g), || format!("{at}: Add of a present group"))?;
                before.iter().copied().chain([g]).collect()
            }
            Evolution::Remove { .. } => {
                ensure(before.contains(&g), || format!("{at}: Remove of an absent group"))?;
                before.iter().copied().filter(|h| *h != g).collect()
            }
            Evolution::Modify { .. } => {
                ensure(before.contains(&g), || format!("{at}: Modify of an absent group"))?;
                before.clone()
            }
        };
        ensure(distinct == expected, || format!("{at}: groups {distinct:?}, expected {expected:?}"))?;
        stored.insert(plan.topic.clone(), plan.instruction.clone());
        current = Some(plan.topic.clone());

        let response = compose_passing(&plan.instruction).map_err(|e| format!("{at}: {e}"))?;
        ensure(verify_instruction(&plan.instruction, &response).all_satisfied, || {
            format!("{at}: AlwaysPass response failed: {response:?}")
        })?;
    }
    Ok(())
}

fn generation_invariants() -> Outcome {
    let corpus = sample_corpus();
    let config = EvolutionConfig { max_turns_cap: 100, ..EvolutionConfig::default() };
    let seeds: Vec<u64> = (0..100).collect();
    let results = par_map(&seeds, |seed| {
        let plans = generate_script(&corpus, &config, *seed, 100).map_err(|e| e.to_string())?;
        check_plans(*seed, &plans, &config).map(|()| plans.len())
    });
    let mut total = 0;
    for r in results {
        total += r?;
    }
    ensure(total == 10_000, || format!("{total} plans"))?;
    Ok("10000 plans: exclusivity, transitions, sizes, evolution steps and AlwaysPass all hold".into())
}

// ---------------------------------------------------------------------------
// 7. Determinism
// ---------------------------------------------------------------------------

fn script_bytes(seed: u64) -> Vec<u8> {
    let plans = generate_script(&sample_corpus(), &EvolutionConfig::default(), seed, 50).unwrap();
    let mut out = Vec::new();
    write_script_jsonl(&plans, &mut out).unwrap();
    out
}

fn offline_reports(agents: &[OracleAgent], transcripts: &[Vec<SessionTranscript>]) -> (String, String) {
    let reports: Vec<(String, MetricsReport)> = agents
        .iter()
        .zip(transcripts)
        .map(|(a, ts)| (turnwise::session::ModelAdapter::id(a), report_transcripts(ts, 50).unwrap()))
        .collect();
    (serde_json::to_string_pretty(&reports).unwrap(), report_csv(&reports))
}

fn determinism() -> Outcome {
    ensure(script_bytes(7) == script_bytes(7), || "seed 7 scripts differ".into())?;
    ensure(script_bytes(7) != script_bytes(8), || "seeds 7 and 8 coincide".into())?;

    let agents = [
        OracleAgent::AlwaysPass,
        OracleAgent::Bernoulli { p: 0.8, seed: 7 },
        OracleAgent::parse("pattern:SFF").unwrap(),
    ];
    let config = SessionConfig::default();
    let seeds: Vec<u64> = (1..=12).collect();
    let first: Vec<Vec<SessionTranscript>> =
        agents.iter().map(|a| seeds.iter().map(|s| run_oracle(&config, a, *s)).collect()).collect();
    let reversed: Vec<u64> = seeds.iter().rev().copied().collect();
    let second: Vec<Vec<SessionTranscript>> = agents
        .iter()
        .map(|a| {
            let mut ts = par_map(&reversed, |s| run_oracle(&config, a, *s));
            ts.reverse();
            ts
        })
        .collect();
    for (a, b) in first.iter().flatten().zip(second.iter().flatten()) {
        let bytes = transcript_bytes(a);
        ensure(bytes == transcript_bytes(b), || format!("{} differs between runs", a.header.session_id))?;
        let back = SessionTranscript::read_jsonl(bytes.as_slice()).map_err(|e| e.to_string())?;
        ensure(transcript_bytes(&back) == bytes, || "transcript does not round-trip".into())?;
        for r in &back.records {
            ensure(verify_instruction(&r.plan.instruction, &r.response) == r.verdicts, || {
                format!("{} turn {}: stored verdicts do not replay", a.header.session_id, r.turn)
            })?;
        }
    }
    ensure(offline_reports(&agents, &first) == offline_reports(&agents, &second), || "reports differ".into())?;
    Ok("seed 7 scripts byte-identical; 36 offline transcripts and reports identical and replayable".into())
}

// ---------------------------------------------------------------------------
// 8. Quality-control filter
// ---------------------------------------------------------------------------

fn sized(n: usize) -> Instruction {
    let specs = [
        ConstraintSpec::Length { unit: LengthUnit::Word, relation: Relation::MoreThan, bound: 20 },
        ConstraintSpec::ForbiddenKeyword { keyword: "spam".into() },
        ConstraintSpec::Case(CaseRule::AllLower),
    ];
    Instruction::from_constraints(specs.into_iter().take(n)).unwrap()
}

fn with_sizes(base: &[TurnPlan], sizes: &[usize]) -> Vec<TurnPlan> {
    base.iter()
        .zip(sizes)
        .map(|(p, n)| TurnPlan { instruction: sized(*n), ..p.clone() })
        .collect()
}

fn qc_filter_criterion() -> Outcome {
    let base = generate_script(&sample_corpus(), &EvolutionConfig::default(), 1, 50).unwrap();
    let mut sizes_1 = vec![1; 20];
    let cases: Vec<(&str, Vec<usize>, bool, f64)> = vec![
        ("all ones", vec![1; 20], false, 1.0),
        ("all twos", vec![2; 20], true, 2.0),
        ("alternating 1 and 3", (0..20).map(|i| if i % 2 == 0 { 1 } else { 3 }).collect(), true, 2.0),
        ("one short of 2.0", [vec![2; 19], vec![1]].concat(), false, 1.95),
        ("large tail after turn 20", {
            sizes_1.extend(vec![3; 30]);
            sizes_1
        }, false, 1.0),
    ];
    for (name, sizes, pass, mean) in cases {
        let outcome = qc_filter(&with_sizes(&base, &sizes)).map_err(|e| e.to_string())?;
        ensure(outcome.passed() == pass && outcome.mean() == mean, || format!("{name}: {outcome:?}"))?;
        if !pass {
            ensure(matches!(outcome, QcOutcome::Reject { .. }), || format!("{name}: not a rejection"))?;
        }
    }
    ensure(qc_filter(&with_sizes(&base, &[2; 19])).is_err(), || "19-turn script accepted".into())?;
    Ok("mean 1.0 rejected, mean 2.0 passes, only turns 1-20 count".into())
}

// ---------------------------------------------------------------------------
// 9. Survival statistics and patience sweep
// ---------------------------------------------------------------------------

/// Monte-Carlo survival of the patience chain with i.i.d. turn outcomes.
fn markov_survival(p: f64, patience: u32, cap: usize, runs: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0009);
    let mut alive = vec![0usize; cap];
    for _ in 0..runs {
        let mut left = patience;
        for slot in alive.iter_mut() {
            *slot += 1;
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            left = if u < p { patience } else { left - 1 };
            if left == 0 {
                break;
            }
        }
    }
    alive.iter().map(|a| *a as f64 / runs as f64).collect()
}

fn survival_statistics() -> Outcome {
    let agent = OracleAgent::Bernoulli { p: 0.8, seed: 0 };
    let seeds: Vec<u64> = (1..=2000).collect();
    let mut acts = Vec::new();
    let mut worst = 0.0f64;
    for patience in [1, 2, 3] {
        let config = session_config(patience, 50);
        let transcripts = par_map(&seeds, |s| run_oracle(&config, &agent, *s));
        let r = report_transcripts(&transcripts, 50).map_err(|e| e.to_string())?;
        if patience == 3 {
            let oracle = markov_survival(0.8, 3, 50, 200_000);
            for (k, (got, want)) in r.survival.iter().zip(&oracle).enumerate() {
                worst = worst.max((got - want).abs());
                ensure((got - want).abs() <= 0.03, || format!("turn {}: {got:.4} vs oracle {want:.4}", k + 1))?;
            }
        }
        acts.push((r.act_len, r.act_acc, r.act_succ));
    }
    for w in acts.windows(2) {
        ensure(w[0].0 <= w[1].0 && w[0].1 <= w[1].1 && w[0].2 <= w[1].2, || format!("ACT not monotone: {acts:?}"))?;
    }
    let shown: Vec<String> = acts.iter().map(|(l, a, s)| format!("({l:.2}, {a:.2}, {s:.2})")).collect();
    Ok(format!("max survival gap {worst:.4}; ACT by P=1,2,3: {}", shown.join(" <= ")))
}

// ---------------------------------------------------------------------------
// 10. End-to-end against a stub endpoint
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct Fixtures {
    model: String,
    seed: u64,
    cap: u32,
    responses: Vec<FixtureResponse>,
}

#[derive(Deserialize)]
struct FixtureResponse {
    text: String,
}

fn check_request(model: &str, fixtures: &[String], path: &str, req: &Value) -> Result<(), String> {
    ensure(path == "/v1/chat/completions", || format!("path {path}"))?;
    ensure(req["model"] == model, || format!("model {}", req["model"]))?;
    let messages = req["messages"].as_array().ok_or("no messages")?;
    ensure(messages.first().is_some_and(|m| m["role"] == "system"), || "missing system prompt".into())?;
    for (i, m) in messages[1..].iter().enumerate() {
        let role = if i % 2 == 0 { "user" } else { "assistant" };
        ensure(m["role"] == role, || format!("message {} has role {}", i + 1, m["role"]))?;
        if role == "assistant" {
            ensure(m["content"] == fixtures[i / 2].as_str(), || format!("history entry {} altered", i / 2 + 1))?;
        }
    }
    ensure(messages.len() % 2 == 0, || "conversation does not end with a user message".into())
}

fn golden(name: &str, actual: &str, update: bool) -> Result<(), String> {
    let path = data_dir().join("golden").join(name);
    if update {
        fs::create_dir_all(path.parent().unwrap()).map_err(|e| e.to_string())?;
        fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = fs::read_to_string(&path).map_err(|e| format!("{}: {e} (run with UPDATE_GOLDENS=1)", path.display()))?;
    ensure(expected == actual, || format!("{name} differs from the checked-in golden"))
}

fn end_to_end() -> Outcome {
    let raw = fs::read_to_string(data_dir().join("data/e2e_fixtures.json")).map_err(|e| e.to_string())?;
    let fixtures: Fixtures = serde_json::from_str(&raw).map_err(|e| e.to_string())?;
    let texts: Arc<Vec<String>> = Arc::new(fixtures.responses.into_iter().map(|r| r.text).collect());
    let problems = Arc::new(Mutex::new(Vec::<String>::new()));
    let seen = Mutex::new(HashSet::<String>::new());
    let injected = Arc::new(Mutex::new(0usize));
    let base_url = {
        let (texts, problems, model) = (Arc::clone(&texts), Arc::clone(&problems), fixtures.model.clone());
        let injected = Arc::clone(&injected);
        serve(move |path, req| {
            if let Err(e) = check_request(&model, &texts, path, req) {
                problems.lock().unwrap().push(e);
                return Reply::Status(400);
            }
            let n = user_turns(req);
            // The first attempt at turn 3 fails once to exercise retries.
            if n == 3 && seen.lock().unwrap().insert(req.to_string()) {
                *injected.lock().unwrap() += 1;
                return Reply::Status(503);
            }
            match texts.get(n - 1) {
                Some(t) => Reply::Text(t.clone()),
                None => Reply::Status(400),
            }
        })
    };
    let endpoint =
        EndpointConfig { retries: 2, backoff_ms: 1, timeout_secs: 10, ..EndpointConfig::new(base_url, &fixtures.model) };
    let adapter = ChatAdapter(ChatClient::new(endpoint));

    // Hand-derived outcomes of the fixture responses against the seed's plans.
    let expected: [(u32, &[bool], Termination); 2] = [
        (2, &[true, false, true, false, true, false, false], Termination::PatienceExhausted),
        (3, &[true, false, true, false, true, false, false, true], Termination::CapReached),
    ];
    let update = std::env::var_os("UPDATE_GOLDENS").is_some();
    let mut transcripts = Vec::new();
    for (patience, flags, termination) in expected {
        let config = session_config(patience, fixtures.cap);
        let t = run_session(&sample_corpus(), &config, fixtures.seed, &adapter, None).map_err(|e| e.to_string())?;
        let problems = problems.lock().unwrap();
        ensure(problems.is_empty(), || format!("bad requests: {problems:?}"))?;
        ensure(t.success_flags() == flags, || format!("P={patience}: flags {:?}", t.success_flags()))?;
        ensure(*t.termination() == termination, || format!("P={patience}: {:?}", t.termination()))?;
        let bytes = String::from_utf8(transcript_bytes(&t)).unwrap();
        golden(&format!("e2e-patience-{patience}.jsonl"), &bytes, update)?;
        transcripts.push(t);
    }
    ensure(*injected.lock().unwrap() == 1, || "the injected server error was not retried".into())?;
    let r = report_transcripts(&transcripts, fixtures.cap).map_err(|e| e.to_string())?;
    golden("e2e-report.json", &(serde_json::to_string_pretty(&r).unwrap() + "\n"), update)?;
    golden("e2e-report.csv", &report_csv(&[(fixtures.model.clone(), r)]), update)?;
    Ok(if update { "goldens rewritten".into() } else { "2 transcripts and the report match the goldens".into() })
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("patience protocol exactness", patience_protocol),
        ("metric oracle equivalence", metric_oracle),
        ("robustness bound", robustness_bound),
        ("recovery hand case", recovery_hand_case),
        ("verifier conformance", verifier_conformance),
        ("generation invariants", generation_invariants),
        ("determinism", determinism),
        ("quality-control filter", qc_filter_criterion),
        ("survival statistics and patience sweep", survival_statistics),
        ("end-to-end against a stub endpoint", end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2}. {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2}. {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
