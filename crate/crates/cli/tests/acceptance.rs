//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;
#[path = "../../core/tests/common/mod.rs"]
mod core_common;
#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{fixtures, run_cli, StubServer};
use d4l_core::analysis::lint_units;
use d4l_core::context::ContextConfig;
use d4l_core::dataset::{validate_manifest, BenchmarkInstance, Manifest, Provenance};
use d4l_core::evaluator::{
    fmt1, load_judgments, load_predictions, macro_average, quadrant_table, PredictionRecord, ReasonJudgment,
};
use d4l_core::log_extractor::LogExtractor;
use d4l_core::prompt::{PromptConfig, PromptEngine, PromptSettings, PromptTemplates, Strategy};
use d4l_core::rules::RulesConfig;
use d4l_core::taxonomy::{Label, PatternCode, Taxonomy};
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_macro_average() -> Outcome {
    let avg = |cells: [f64; 7]| {
        let m: BTreeMap<usize, f64> = cells.into_iter().enumerate().collect();
        macro_average(&m).unwrap()
    };
    let a = avg([56.4, 68.2, 15.4, 42.1, 65.2, 28.6, 57.1]);
    let b = avg([46.2, 9.1, 3.8, 0.0, 34.8, 14.3, 14.3]);
    let (ra, rb) = (fmt1(a), fmt1(b));
    ensure((ra.parse::<f64>().unwrap() - 47.6).abs() <= 0.05, || format!("got {ra}, want 47.6"))?;
    ensure((rb.parse::<f64>().unwrap() - 17.5).abs() <= 0.05, || format!("got {rb}, want 17.5"))?;
    Ok(format!("{ra} and {rb}"))
}

const TABLE: [(PatternCode, usize); 7] = [
    (PatternCode::Rd, 39),
    (PatternCode::Vr, 22),
    (PatternCode::Lv, 26),
    (PatternCode::Sm, 19),
    (PatternCode::Ss, 23),
    (PatternCode::Is, 28),
    (PatternCode::Pf, 7),
];

fn instance(id: &str, label: Label) -> BenchmarkInstance {
    BenchmarkInstance {
        id: id.into(),
        project: "p".into(),
        provenance: Provenance::Issue(id.into()),
        file_path: "A.java".into(),
        function_source: "void f() {\n  LOG.info(\"x\");\n}".into(),
        log_line: 2,
        label,
        scenario: None,
        developer_explanation: String::new(),
        context: None,
    }
}

fn with_counts(counts: &[(PatternCode, usize)]) -> Vec<BenchmarkInstance> {
    counts.iter().flat_map(|(c, n)| (0..*n).map(move |i| instance(&format!("{c}-{i}"), Label::Pattern(*c)))).collect()
}

fn c2_manifest() -> Outcome {
    let m = Manifest::load(&fixtures().join("manifest.json")).map_err(|e| e.to_string())?;
    let exact = validate_manifest(&with_counts(&TABLE), &m).map_err(|e| e.to_string())?;
    ensure(exact.passed(), || format!("reference counts rejected:\n{exact}"))?;
    // Moving one instance between patterns must fail with both deltas listed.
    let mut off = TABLE;
    off[0].1 -= 1;
    off[3].1 += 1;
    let moved = validate_manifest(&with_counts(&off), &m).map_err(|e| e.to_string())?;
    let deltas: Vec<(PatternCode, i64)> = moved.mismatches().map(|r| (r.pattern, r.delta())).collect();
    ensure(!moved.passed() && deltas == [(PatternCode::Rd, -1), (PatternCode::Sm, 1)], || {
        format!("unexpected report:\n{moved}")
    })?;
    let fixtures_report = validate_manifest(&core_common::dataset(), &m).map_err(|e| e.to_string())?;
    ensure(!fixtures_report.passed() && fixtures_report.mismatches().count() == 7, || {
        format!("fixture report:\n{fixtures_report}")
    })?;
    ensure(Manifest::parse(r#"{"counts":{"RD":1},"total":2}"#).is_err(), || "bad total accepted".into())?;
    Ok("164 passes; shifted and fixture counts fail with per-pattern deltas".into())
}

fn c3_rules() -> Outcome {
    let lint = |dir: &str| {
        let units = core_common::units(dir);
        lint_units(&units, &LogExtractor::default(), &ContextConfig::default(), &RulesConfig::default(), true)
            .into_iter()
            .map(|f| format!("{} {}{}", f.file, f.scenario, if f.candidate { " candidate" } else { "" }))
            .collect::<Vec<_>>()
    };
    let got = lint("java/defects");
    let want = [
        "automq/ElectionState.java VR-2",
        "hdfs/DataStreamer.java LV-1 candidate",
        "hdfs/DatasetVolumeChecker.java VR-2",
        "hdfs/ObserverReadProxyProvider.java LV-1 candidate",
        "hive/HiveInputFormat.java PF-2",
    ];
    ensure(got == want, || format!("defect findings {got:?}"))?;
    let clean = lint("java/clean");
    ensure(clean.is_empty(), || format!("clean findings {clean:?}"))?;
    Ok("5 expected findings, none on HIVE-20796, none on the clean set".into())
}

fn c4_slicing() -> Outcome {
    let mut nontrivial = 0;
    let seeds = 100u64;
    for seed in 0..seeds {
        if oracles::slicing::check_seed(seed)? > 2 {
            nontrivial += 1;
        }
    }
    ensure(nontrivial >= 10, || format!("only {nontrivial} programs with chains longer than two"))?;
    Ok(format!("{seeds} programs equal, {nontrivial} with chains longer than two"))
}

fn c5_flow() -> Outcome {
    let cases = 256;
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner
        .run(&oracles::flow::case(), |(cfg, node, lo, hi)| oracles::flow::check(&cfg, node, lo, hi))
        .map_err(|e| e.to_string())?;
    Ok(format!("{cases} random graphs"))
}

fn is_subsequence(small: &str, big: &str) -> bool {
    let mut it = big.chars();
    small.chars().all(|c| it.any(|b| b == c))
}

fn c6_prompts() -> Outcome {
    let fixtures = core_common::analyzed();
    let engine = || PromptEngine::new(PromptTemplates::builtin(), Taxonomy::builtin(), &PromptConfig::default());
    let (a, b) = (engine(), engine());
    let mut built = 0;
    for (inst, an) in &fixtures {
        let mut text = BTreeMap::new();
        for s in PromptSettings::ALL {
            let p = a.build_prompt(inst, &an.bundle, s).map_err(|e| e.to_string())?;
            let q = b.build_prompt(inst, &an.bundle, s).map_err(|e| e.to_string())?;
            ensure(p == q, || format!("{} {s}: prompts differ between runs", inst.id))?;
            let back = a.parse_response(&format!("reasoning\nANSWER: {}", inst.label)).map_err(|e| e.to_string())?;
            ensure(back.label == inst.label, || format!("{}: marker round trip failed", inst.id))?;
            text.insert(s, p.user_text);
            built += 1;
        }
        for strategy in [Strategy::Direct, Strategy::Cot] {
            let t = |k, i| &text[&PromptSettings::new(strategy, k, i)];
            for (small, big) in [
                ((false, false), (true, false)),
                ((false, false), (false, true)),
                ((true, false), (true, true)),
                ((false, true), (true, true)),
            ] {
                ensure(is_subsequence(t(small.0, small.1), t(big.0, big.1)), || {
                    format!("{} {strategy:?}: {small:?} not contained in {big:?}", inst.id)
                })?;
            }
        }
    }
    Ok(format!("{} fixtures x 8 settings, {built} prompts", fixtures.len()))
}

fn c7_replay() -> Outcome {
    let f = fixtures();
    let stub = StubServer::start(|_| (500, String::new()));
    let args = [
        "evaluate".to_string(),
        f.join("fixtures.d4l.jsonl").display().to_string(),
        "--source-root".into(),
        f.join("java").display().to_string(),
        "--mode".into(),
        "replay".into(),
        "--cassette".into(),
        f.join("cassettes/fixtures-stub.jsonl").display().to_string(),
        "--model".into(),
        "stub-model".into(),
        "--endpoint".into(),
        stub.url.clone(),
    ];
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let first = run_cli(&refs);
    let second = run_cli(&refs);
    ensure(first.code == 0, || format!("exit {}: {}", first.code, first.stderr))?;
    ensure(first.stdout == second.stdout, || "reports differ between runs".into())?;
    let rows = first.stdout.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| Setting")).count();
    ensure(rows == 8, || format!("{rows} report rows"))?;
    let hits = stub.connection_count();
    ensure(hits == 0, || format!("{hits} connection(s) reached the endpoint"))?;
    Ok(format!("identical {}-byte reports, 0 connections", first.stdout.len()))
}

fn other(l: Label) -> Label {
    if l == Label::Pattern(PatternCode::Rd) {
        Label::Pattern(PatternCode::Vr)
    } else {
        Label::Pattern(PatternCode::Rd)
    }
}

fn pred(id: &str, label: Option<Label>) -> PredictionRecord {
    PredictionRecord {
        instance_id: id.into(),
        predicted: label,
        explanation: String::new(),
        settings: "Direct+K".into(),
        error: None,
    }
}

fn judgment(id: &str, ok: bool) -> ReasonJudgment {
    ReasonJudgment { instance_id: id.into(), reason_correct: ok, judge: "acceptance".into(), note: String::new() }
}

fn c8_quadrants() -> Outcome {
    let truth = core_common::dataset();
    let check = |preds: &[PredictionRecord], judged: &[ReasonJudgment]| -> Result<(), String> {
        let t = quadrant_table(preds, &truth, judged, true).map_err(|e| e.to_string())?;
        for (l, c) in t.rows.iter().map(|(l, c)| (l.as_str(), c)).chain([("average", &t.average)]) {
            ensure((c.sum() - 100.0).abs() <= 0.1, || format!("{l} sums to {}", c.sum()))?;
        }
        Ok(())
    };

    // The committed judgments against replayed predictions.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let f = fixtures();
    let out = run_cli(&[
        "evaluate",
        f.join("fixtures.d4l.jsonl").to_str().unwrap(),
        "--source-root",
        f.join("java").to_str().unwrap(),
        "--cassette",
        f.join("cassettes/fixtures-stub.jsonl").to_str().unwrap(),
        "--model",
        "stub-model",
        "--settings",
        "Direct+K",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    ensure(out.code == 0, || out.stderr.clone())?;
    let preds = load_predictions(&dir.path().join("predictions-Direct_K.jsonl")).map_err(|e| e.to_string())?;
    let judged = load_judgments(&f.join("judgments.jsonl")).map_err(|e| e.to_string())?;
    check(&preds, &judged)?;

    // Random judgment files over the fixtures.
    let cases = 256;
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    let strategy =
        (proptest::collection::vec(proptest::bool::ANY, 12), proptest::collection::vec(proptest::bool::ANY, 12));
    runner
        .run(&strategy, |(hits, reasons)| {
            let preds: Vec<_> = truth
                .iter()
                .zip(&hits)
                .map(|(t, h)| pred(&t.id, Some(if *h { t.label } else { other(t.label) })))
                .collect();
            let judged: Vec<_> = truth.iter().zip(&reasons).map(|(t, r)| judgment(&t.id, *r)).collect();
            check(&preds, &judged).map_err(proptest::test_runner::TestCaseError::fail)
        })
        .map_err(|e| e.to_string())?;

    // Ten instances with cells worked out by hand.
    let (rd, vr, pf) =
        (Label::Pattern(PatternCode::Rd), Label::Pattern(PatternCode::Vr), Label::Pattern(PatternCode::Pf));
    let rows = [
        ("r1", rd, true, true),
        ("r2", rd, true, false),
        ("r3", rd, false, false),
        ("r4", rd, false, false),
        ("v1", vr, true, true),
        ("v2", vr, false, true),
        ("v3", vr, false, false),
        ("p1", pf, true, true),
        ("p2", pf, true, true),
        ("n1", Label::NoDefect, false, false),
    ];
    let small: Vec<_> = rows.iter().map(|(id, l, _, _)| instance(id, *l)).collect();
    let preds: Vec<_> = rows.iter().map(|(id, l, ok, _)| pred(id, Some(if *ok { *l } else { other(*l) }))).collect();
    let judged: Vec<_> = rows.iter().map(|(id, _, _, r)| judgment(id, *r)).collect();
    let t = quadrant_table(&preds, &small, &judged, true).map_err(|e| e.to_string())?;
    let third = 100.0 / 3.0;
    let want: [(Label, [f64; 4]); 4] = [
        (rd, [25.0, 25.0, 0.0, 50.0]),
        (vr, [third, 0.0, third, third]),
        (pf, [100.0, 0.0, 0.0, 0.0]),
        (Label::NoDefect, [0.0, 0.0, 0.0, 100.0]),
    ];
    for (l, w) in want {
        let c = t.rows[&l];
        ensure([c.pcrc, c.pcri, c.pirc, c.piri] == w, || format!("{l}: {c:?}, want {w:?}"))?;
    }
    Ok(format!("committed file, {cases} random files and the 10-instance table"))
}

fn c9_statement() -> Outcome {
    Ok("live model accuracies and reasoning rates depend on external model behaviour and are not \
        reproduced here; the model path is accepted on prompt determinism (6) and offline replay (7)"
        .into())
}

type Criterion = (u8, &'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "macro-average arithmetic", c1_macro_average, Some(Duration::from_secs(1))),
        (2, "manifest contract", c2_manifest, Some(Duration::from_secs(1))),
        (3, "fixture rule suite", c3_rules, Some(Duration::from_secs(5))),
        (4, "slicing oracle equivalence", c4_slicing, None),
        (5, "control-flow properties", c5_flow, None),
        (6, "prompt determinism and monotonicity", c6_prompts, None),
        (7, "replay determinism without network", c7_replay, Some(Duration::from_secs(30))),
        (8, "quadrant consistency", c8_quadrants, None),
        (9, "non-reproducibility statement", c9_statement, None),
    ];
    let mut failed = 0;
    for (n, name, run, budget) in criteria {
        let start = Instant::now();
        let mut result = run();
        let took = start.elapsed();
        if let (Ok(_), Some(b)) = (&result, budget) {
            if took > b {
                result = Err(format!("took {took:?}, budget {b:?}"));
            }
        }
        match result {
            Ok(detail) => println!("criterion {n} PASS {name}: {detail} ({} ms)", took.as_millis()),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} FAIL {name}: {detail} ({} ms)", took.as_millis());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
