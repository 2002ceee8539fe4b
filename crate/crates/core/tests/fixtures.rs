//! Checks on the shipped fixture files.

use std::path::PathBuf;

use proxysel::correlation::{relevance_ranking, CorrelationMetric};
use proxysel::data::{load_checkpoints, load_matrix, Format, Manifest, ScoreMatrix, Variant};
use proxysel::normalize::normalize_pipeline;
use proxysel::robustness::{robustness_from_matrix, sample_variance};
use proxysel::synth::{generate, SynthConfig};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn small_models() -> ScoreMatrix<f64> {
    let m = load_matrix::<f64>(fixture("table4_small_models.csv"), Format::Csv).unwrap();
    m.with_manifest(&Manifest::load(fixture("table4_groups.json")).unwrap()).unwrap()
}

/// (task, noise variance, data variance, ratio) from exact rational
/// arithmetic over the small-model table.
const ORACLE: [(&str, f64, f64, f64); 6] = [
    ("C3", 0.9081333333333333, 54.6974, 60.230582880634266),
    ("CMNLI", 0.4034333333333333, 27.08513, 67.136569445592),
    ("OCNLI", 1.4108333333333334, 43.56503, 30.87893443591258),
    ("CHID", 1.8907, 95.19665, 50.349949754059345),
    ("RTE", 1.7902333333333333, 11.77312, 6.5763047647420265),
    ("CMMLU", 0.03663333333333333, 0.39522, 10.788535031847134),
];

#[test]
fn robustness_matches_exact_oracle() {
    let report = robustness_from_matrix(&small_models()).unwrap();
    assert_eq!(report.entries.len(), 6);
    for (task, vr, vd, ratio) in ORACLE {
        let e = report.get(task).unwrap();
        assert!((e.variance_noise - vr).abs() < 1e-9 * vr.max(1.0), "{task}");
        assert!((e.variance_data - vd).abs() < 1e-9 * vd.max(1.0), "{task}");
        assert!((e.ratio.unwrap() - ratio).abs() < 1e-9 * ratio, "{task}");
        assert_eq!((e.n_data, e.n_noise), (5, 3));
    }
}

#[test]
fn published_noise_variances_within_rounding() {
    let m = small_models();
    let noise_rows = ["A", "B", "C"];
    for (task, published) in [("C3", 0.91), ("CMNLI", 0.40), ("CMMLU", 0.04)] {
        let v: Vec<f64> = noise_rows.iter().map(|r| m.score(r, task).unwrap().unwrap()).collect();
        assert!((sample_variance(&v).unwrap() - published).abs() <= 0.005, "{task}");
    }
}

#[test]
fn model_list_has_seventeen_pairs() {
    let manifest = Manifest::load(fixture("table2_models.json")).unwrap();
    assert_eq!(manifest.models.len(), 34);
    assert_eq!(manifest.models.iter().filter(|m| m.variant == Variant::Chat).count(), 17);
    assert_eq!(manifest.pairs.len(), 17);
    for (base, chat) in &manifest.pairs {
        assert!(manifest.models.iter().any(|m| &m.name == base && m.variant == Variant::Base));
        assert!(manifest.models.iter().any(|m| &m.name == chat && m.variant == Variant::Chat));
    }
}

#[test]
fn synthetic_leaderboard_regenerates_exactly() {
    let cfg: SynthConfig =
        serde_json::from_str(&std::fs::read_to_string(fixture("leaderboard_synth.json")).unwrap()).unwrap();
    let (m, truth) = generate::<f64>(&cfg).unwrap();
    let shipped = std::fs::read_to_string(fixture("leaderboard_synthetic.csv")).unwrap();
    assert_eq!(m.to_csv_string(), shipped);
    assert_eq!((m.n_models(), m.n_tasks()), (34, 43));
    let board = m.with_manifest(&Manifest::load(fixture("table2_models.json")).unwrap()).unwrap();
    assert!(board.is_complete());
    let shipped_truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("leaderboard_truth.json")).unwrap()).unwrap();
    assert_eq!(serde_json::to_value(&truth).unwrap(), shipped_truth);
}

#[test]
fn reasoning_share_of_top_ten() {
    // Reported, not asserted: the leaderboard is synthetic.
    let m = load_matrix::<f64>(fixture("leaderboard_synthetic.csv"), Format::Csv).unwrap();
    let cats: std::collections::BTreeMap<String, Vec<String>> =
        serde_json::from_str(&std::fs::read_to_string(fixture("task_categories.json")).unwrap()).unwrap();
    let p = normalize_pipeline(&m).unwrap();
    for metric in CorrelationMetric::ALL {
        let r = relevance_ranking::<f64, &str>(&p, "T-eval", metric, None).unwrap();
        let reasoning = r.top(10).filter(|t| cats["reasoning"].iter().any(|c| c == t.as_str())).count();
        println!("{metric}: {reasoning} reasoning tasks in the top 10");
    }
}

#[test]
fn checkpoint_tables_agree() {
    let joint = load_checkpoints::<f64>(fixture("table9_checkpoints.csv"), Format::Csv).unwrap();
    let mixture = load_checkpoints::<f64>(fixture("table7_data_mixture.csv"), Format::Csv).unwrap();
    let annealing = load_checkpoints::<f64>(fixture("table6_annealing.csv"), Format::Csv).unwrap();
    for c in &mixture {
        let j = joint.iter().find(|x| x.checkpoint.name == c.checkpoint.name).unwrap();
        assert_eq!(j.scores, c.scores);
    }
    for (short, long) in [("A", "A-t2"), ("NA", "NA-t2")] {
        let j = joint.iter().find(|x| x.checkpoint.name == short).unwrap();
        let a = annealing.iter().find(|x| x.checkpoint.name == long).unwrap();
        assert_eq!(j.scores, a.scores);
    }
    // A weighted mean can reach the reported aggregate: it lies inside
    // the range of the first annealing row.
    let first = &annealing[0].scores;
    let (lo, hi) = first.values().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(lo <= 48.03 && 48.03 <= hi);
}
