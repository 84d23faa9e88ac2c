mod common;

use std::collections::BTreeMap;

use d4l_core::dataset::{BenchmarkInstance, Provenance};
use d4l_core::evaluator::{
    fmt1, macro_average, per_pattern_accuracy, quadrant_table, render_report, EvalError, PredictionRecord,
    ReasonJudgment, ReportFormat, SettingResult,
};
use d4l_core::taxonomy::{Label, PatternCode};
use proptest::prelude::*;

/// Pattern sizes of the full benchmark.
const COUNTS: [(PatternCode, usize); 7] = [
    (PatternCode::Rd, 39),
    (PatternCode::Vr, 22),
    (PatternCode::Lv, 26),
    (PatternCode::Sm, 19),
    (PatternCode::Ss, 23),
    (PatternCode::Is, 28),
    (PatternCode::Pf, 7),
];

fn inst(id: &str, label: Label) -> BenchmarkInstance {
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

fn pred(id: &str, label: Option<Label>, setting: &str) -> PredictionRecord {
    PredictionRecord {
        instance_id: id.into(),
        predicted: label,
        explanation: String::new(),
        settings: setting.into(),
        error: None,
    }
}

fn judgment(id: &str, ok: bool) -> ReasonJudgment {
    ReasonJudgment { instance_id: id.into(), reason_correct: ok, judge: "t".into(), note: String::new() }
}

fn other(l: Label) -> Label {
    if l == Label::Pattern(PatternCode::Rd) {
        Label::Pattern(PatternCode::Vr)
    } else {
        Label::Pattern(PatternCode::Rd)
    }
}

/// The full benchmark with `correct[p]` instances of each pattern labelled
/// correctly and the rest labelled as some other pattern.
fn synthetic(correct: &[usize; 7], setting: &str) -> (Vec<BenchmarkInstance>, Vec<PredictionRecord>) {
    let mut truth = Vec::new();
    let mut preds = Vec::new();
    for ((code, n), &k) in COUNTS.iter().zip(correct) {
        let l = Label::Pattern(*code);
        for i in 0..*n {
            let id = format!("{code}-{i}");
            truth.push(inst(&id, l));
            preds.push(pred(&id, Some(if i < k { l } else { other(l) }), setting));
        }
    }
    (truth, preds)
}

/// Smallest count whose percentage prints as `cell`.
fn count_for(cell: f64, n: usize) -> usize {
    (0..=n).find(|&k| (100.0 * k as f64 / n as f64 - cell).abs() < 0.05 + 1e-9).unwrap()
}

#[test]
fn macro_average_of_reference_rows() {
    let avg = |cells: [f64; 7]| {
        let m: BTreeMap<usize, f64> = cells.into_iter().enumerate().collect();
        fmt1(macro_average(&m).unwrap())
    };
    assert_eq!(avg([56.4, 68.2, 15.4, 42.1, 65.2, 28.6, 57.1]), "47.6");
    assert_eq!(avg([46.2, 9.1, 3.8, 0.0, 34.8, 14.3, 14.3]), "17.5");
}

#[test]
fn per_pattern_accuracy_by_hand() {
    let vr = Label::Pattern(PatternCode::Vr);
    let truth: Vec<_> = (0..4).map(|i| inst(&format!("v{i}"), vr)).collect();
    let preds = vec![
        pred("v0", Some(vr), "Direct"),
        pred("v1", Some(vr), "Direct"),
        pred("v2", Some(vr), "Direct"),
        pred("v3", None, "Direct"),
    ];
    let acc = per_pattern_accuracy(&preds, &truth, true).unwrap();
    assert_eq!(acc, BTreeMap::from([(vr, 75.0)]));
}

#[test]
fn predicting_one_pattern_everywhere() {
    let (truth, _) = synthetic(&[0; 7], "Direct");
    let rd = Label::Pattern(PatternCode::Rd);
    let preds: Vec<_> = truth.iter().map(|t| pred(&t.id, Some(rd), "Direct")).collect();
    let r = SettingResult::compute("Direct", &preds, &truth, true).unwrap();
    assert_eq!(r.accuracies[&rd], 100.0);
    assert!(r.accuracies.iter().filter(|(l, _)| **l != rd).all(|(_, a)| *a == 0.0));
    assert_eq!(fmt1(r.average), "14.3");
}

#[test]
fn no_defect_bucket_is_optional() {
    let rd = Label::Pattern(PatternCode::Rd);
    let truth = vec![inst("a", rd), inst("b", Label::NoDefect), inst("c", Label::NoDefect)];
    let preds =
        vec![pred("a", Some(rd), "Direct"), pred("b", Some(Label::NoDefect), "Direct"), pred("c", Some(rd), "Direct")];
    let with = per_pattern_accuracy(&preds, &truth, true).unwrap();
    assert_eq!(with, BTreeMap::from([(rd, 100.0), (Label::NoDefect, 50.0)]));
    let without = per_pattern_accuracy(&preds, &truth, false).unwrap();
    assert_eq!(without, BTreeMap::from([(rd, 100.0)]));
    // Without the bucket the clean instances need no prediction.
    assert!(per_pattern_accuracy(&preds[..1], &truth, false).is_ok());
}

#[test]
fn prediction_set_must_match_truth() {
    let rd = Label::Pattern(PatternCode::Rd);
    let truth = vec![inst("a", rd), inst("b", rd)];
    let one = vec![pred("a", Some(rd), "Direct")];
    assert_eq!(per_pattern_accuracy(&one, &truth, true), Err(EvalError::MissingPrediction("b".into())));
    let dup = vec![pred("a", Some(rd), "Direct"), pred("a", Some(rd), "Direct")];
    assert_eq!(per_pattern_accuracy(&dup, &truth, true), Err(EvalError::DuplicatePrediction("a".into())));
    let stray = vec![pred("z", Some(rd), "Direct")];
    assert_eq!(per_pattern_accuracy(&stray, &truth, true), Err(EvalError::UnknownInstance("z".into())));
}

/// Reference GPT-4o rows: cells then average and delta.
const GPT4O: [(&str, [f64; 7], &str, &str); 7] = [
    ("Direct", [46.2, 9.1, 3.8, 0.0, 34.8, 14.3, 14.3], "17.5", ""),
    ("Direct+K", [41.0, 36.4, 15.4, 0.0, 52.2, 39.3, 14.3], "28.4", "(+10.9)"),
    ("Direct+I", [46.2, 0.0, 3.8, 0.0, 43.5, 14.3, 28.6], "19.5", "(+2.0)"),
    ("Direct+K+I", [41.0, 27.3, 7.7, 0.0, 52.2, 39.3, 0.0], "23.9", "(+6.4)"),
    ("CoT", [43.6, 13.6, 3.8, 0.0, 47.8, 14.3, 14.3], "19.6", ""),
    ("CoT+K", [41.0, 27.3, 15.4, 5.3, 52.2, 50.0, 0.0], "27.3", "(+7.7)"),
    ("CoT+K+I", [41.0, 27.3, 7.7, 15.8, 52.2, 39.3, 0.0], "26.2", "(+6.6)"),
];

#[test]
fn reference_rows_rebuild_from_counts() {
    let mut results = Vec::new();
    for (setting, cells, _, _) in GPT4O {
        let mut correct = [0usize; 7];
        for (i, ((_, n), cell)) in COUNTS.iter().zip(cells).enumerate() {
            correct[i] = count_for(cell, *n);
        }
        let (truth, preds) = synthetic(&correct, setting);
        let r = SettingResult::compute(setting, &preds, &truth, true).unwrap();
        for (code, cell) in COUNTS.iter().map(|(c, _)| c).zip(cells) {
            assert_eq!(fmt1(r.accuracies[&Label::Pattern(*code)]), format!("{cell:.1}"), "{setting} {code}");
        }
        results.push(r);
    }
    let csv = render_report(&results, &[], ReportFormat::Csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "Setting,RD,VR,LV,SM,SS,IS,PF,Average,Delta");
    for (line, (setting, _, avg, delta)) in lines[1..].iter().zip(GPT4O) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], setting);
        assert_eq!(cols[8], avg, "{setting}");
        assert_eq!(cols[9], delta, "{setting}");
    }
}

#[test]
fn markdown_and_csv_carry_the_same_numbers() {
    let (truth, preds) = synthetic(&[18, 2, 1, 0, 8, 4, 1], "Direct");
    let (_, preds_k) = synthetic(&[16, 8, 4, 0, 12, 11, 1], "Direct+K");
    let base = |s| SettingResult::compute(s, if s == "Direct" { &preds } else { &preds_k }, &truth, true).unwrap();
    let results = vec![base("Direct+K"), base("Direct")];
    let header = vec![("dataset".to_string(), "synthetic".to_string())];
    let md = render_report(&results, &header, ReportFormat::Markdown);
    let csv = render_report(&results, &header, ReportFormat::Csv);
    assert!(md.starts_with("# dataset: synthetic\n") && csv.starts_with("# dataset: synthetic\n"));
    let md_rows: Vec<Vec<String>> = md
        .lines()
        .filter(|l| l.starts_with("| "))
        .map(|l| l.trim_matches('|').split('|').map(|c| c.trim().to_string()).collect())
        .collect();
    let csv_rows: Vec<Vec<String>> =
        csv.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(md_rows, csv_rows);
    assert_eq!(csv_rows[1][0], "Direct");
    assert_eq!(csv_rows[2][0], "Direct+K");
}

proptest! {
    #[test]
    fn average_ignores_order_and_stays_in_range(correct in prop::array::uniform7(0usize..=7), seed in any::<u64>()) {
        let (truth, mut preds) = synthetic(&correct, "Direct");
        let a = SettingResult::compute("Direct", &preds, &truth, true).unwrap();
        // Deterministic shuffle from the seed.
        let n = preds.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            preds.swap(i, (s >> 33) as usize % (i + 1));
        }
        let b = SettingResult::compute("Direct", &preds, &truth, true).unwrap();
        prop_assert_eq!(&a, &b);
        let lo = a.accuracies.values().cloned().fold(f64::INFINITY, f64::min);
        let hi = a.accuracies.values().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo - 1e-9 <= a.average && a.average <= hi + 1e-9);
    }

    #[test]
    fn quadrants_sum_to_one_hundred(
        hits in prop::collection::vec(any::<bool>(), 12),
        reasons in prop::collection::vec(any::<bool>(), 12),
    ) {
        let truth = common::dataset();
        let preds: Vec<_> = truth
            .iter()
            .zip(&hits)
            .map(|(t, h)| pred(&t.id, Some(if *h { t.label } else { other(t.label) }), "Direct+K"))
            .collect();
        let judged: Vec<_> = truth.iter().zip(&reasons).map(|(t, r)| judgment(&t.id, *r)).collect();
        let table = quadrant_table(&preds, &truth, &judged, true).unwrap();
        for c in table.rows.values().chain([&table.average]) {
            prop_assert!((c.sum() - 100.0).abs() <= 0.1);
        }
    }
}

#[test]
fn quadrants_by_hand() {
    let rd = Label::Pattern(PatternCode::Rd);
    let vr = Label::Pattern(PatternCode::Vr);
    let pf = Label::Pattern(PatternCode::Pf);
    // (id, truth, predicted correctly, reason correct)
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
    let truth: Vec<_> = rows.iter().map(|(id, l, _, _)| inst(id, *l)).collect();
    let preds: Vec<_> =
        rows.iter().map(|(id, l, ok, _)| pred(id, Some(if *ok { *l } else { other(*l) }), "Direct+K")).collect();
    let judged: Vec<_> = rows.iter().map(|(id, _, _, r)| judgment(id, *r)).collect();
    let t = quadrant_table(&preds, &truth, &judged, true).unwrap();
    let third = 100.0 / 3.0;
    let cells = |l: Label| {
        let c = t.rows[&l];
        [c.pcrc, c.pcri, c.pirc, c.piri]
    };
    assert_eq!(cells(rd), [25.0, 25.0, 0.0, 50.0]);
    assert_eq!(cells(vr), [third, 0.0, third, third]);
    assert_eq!(cells(pf), [100.0, 0.0, 0.0, 0.0]);
    assert_eq!(cells(Label::NoDefect), [0.0, 0.0, 0.0, 100.0]);
    let avg = [t.average.pcrc, t.average.pcri, t.average.pirc, t.average.piri];
    let want = [(25.0 + third + 100.0) / 4.0, 25.0 / 4.0, third / 4.0, (50.0 + third + 100.0) / 4.0];
    for (a, w) in avg.iter().zip(want) {
        assert!((a - w).abs() < 1e-9, "{avg:?} vs {want:?}");
    }

    assert_eq!(
        quadrant_table(&preds, &truth, &judged[1..], true).unwrap_err(),
        EvalError::MissingJudgment("r1".into())
    );
}

#[test]
fn cot_plus_i_cells_round_above_the_reference_average() {
    // The reference average for this row is 20.2; its own cells give 20.3.
    let cells = [43.6, 4.5, 19.2, 5.3, 47.8, 7.1, 14.3];
    let mut correct = [0usize; 7];
    for (i, ((_, n), cell)) in COUNTS.iter().zip(cells).enumerate() {
        correct[i] = count_for(cell, *n);
    }
    let (truth, preds) = synthetic(&correct, "CoT+I");
    assert_eq!(fmt1(SettingResult::compute("CoT+I", &preds, &truth, true).unwrap().average), "20.3");
}
