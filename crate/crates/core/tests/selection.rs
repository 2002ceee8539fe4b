mod common;

use common::*;
use proptest::prelude::*;
use proxysel::data::CheckpointScores;
use proxysel::selection::{
    count_discordant_pairs, predict, select_from_scores, Candidate, Orientation, ProxySet, ScoredRanking, SelectionConfig,
};
use rand::Rng;

fn select(c: &[(f64, f64)], config: &SelectionConfig<f64>) -> ProxySet<f64> {
    let cands: Vec<_> =
        c.iter().enumerate().map(|(i, &(rel, rob))| Candidate::new(&format!("t{i:02}"), rel, rob).unwrap()).collect();
    select_from_scores(&cands, config).unwrap()
}

fn weight(set: &ProxySet<f64>, i: usize) -> f64 {
    set.weight_of(&format!("t{i:02}")).unwrap()
}

fn permissive() -> SelectionConfig<f64> {
    SelectionConfig { eps_c: 0.0, eps_r: 0.0, sigmoid_k: 1.0, log_robustness: false }
}

#[test]
fn weights_sum_to_one_on_random_draws() {
    let mut r = rng(21);
    for _ in 0..1000 {
        let n = r.random_range(1..12);
        let c: Vec<(f64, f64)> = (0..n).map(|_| (r.random_range(0.001..1.0), r.random_range(0.01..80.0))).collect();
        let k = r.random_range(0.05..3.0);
        let set = select(&c, &SelectionConfig { sigmoid_k: k, ..permissive() });
        let total: f64 = set.entries.iter().map(|e| e.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(set.entries.iter().all(|e| e.weight > 0.0));
    }
}

#[test]
fn weights_monotone_under_perturbation() {
    let mut r = rng(22);
    // One ulp-scale slack for the final division.
    let slack = 1e-15;
    for _ in 0..500 {
        let n = r.random_range(2..8);
        let c: Vec<(f64, f64)> = (0..n).map(|_| (r.random_range(0.01..1.0), r.random_range(0.01..10.0))).collect();
        let cfg = SelectionConfig { sigmoid_k: r.random_range(0.1..2.0), ..permissive() };
        let before = select(&c, &cfg);
        let i = r.random_range(0..n);
        let mut more_r = c.clone();
        more_r[i].1 += r.random_range(0.0..5.0);
        assert!(weight(&select(&more_r, &cfg), i) >= weight(&before, i) - slack);
        let mut more_c = c.clone();
        more_c[i].0 = (more_c[i].0 + r.random_range(0.0..0.5)).min(1.0);
        assert!(weight(&select(&more_c, &cfg), i) >= weight(&before, i) - slack);
    }
}

#[test]
fn equal_relevance_orders_by_robustness() {
    let set = select(&[(0.4, 0.5), (0.4, 3.0), (0.4, 1.2)], &permissive());
    let order: Vec<_> = set.entries.iter().map(|e| e.task.as_str()).collect();
    assert_eq!(order, ["t01", "t02", "t00"]);
}

proptest! {
    #[test]
    fn predict_is_linear(
        c in prop::collection::vec((0.01f64..1.0, 0.1f64..20.0), 1..6),
        s in prop::collection::vec(0.0f64..100.0, 6),
        u in prop::collection::vec(0.0f64..100.0, 6),
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
    ) {
        let set = select(&c, &permissive());
        let ck = |v: &[f64]| {
            let pairs: Vec<(String, f64)> = (0..c.len()).map(|i| (format!("t{i:02}"), v[i])).collect();
            CheckpointScores::from_pairs("x", &pairs).unwrap()
        };
        let mix: Vec<f64> = s.iter().zip(&u).map(|(a, b)| alpha * a + beta * b).collect();
        let lhs = predict(&set, &ck(&mix)).unwrap().predicted_score;
        let rhs = alpha * predict(&set, &ck(&s)).unwrap().predicted_score + beta * predict(&set, &ck(&u)).unwrap().predicted_score;
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn discordant_pair_identities(scores in prop::collection::hash_set(-1000i32..1000, 2..12), other in prop::collection::vec(-1000i32..1000, 12)) {
        let v: Vec<f64> = scores.into_iter().map(f64::from).collect();
        let names: Vec<String> = (0..v.len()).map(|i| format!("m{i}")).collect();
        let pairs = |xs: &[f64]| names.iter().cloned().zip(xs.iter().copied()).collect::<Vec<_>>();
        let a = ScoredRanking::new(Orientation::Higher, &pairs(&v));
        let total = v.len() * (v.len() - 1) / 2;
        prop_assert_eq!(count_discordant_pairs(&a, &a).unwrap().discordant_pairs, 0.0);
        let reversed = ScoredRanking::new(Orientation::Lower, &pairs(&v));
        prop_assert_eq!(count_discordant_pairs(&a, &reversed).unwrap().discordant_pairs, total as f64);
        let b = ScoredRanking::new(Orientation::Higher, &pairs(&other.iter().map(|&x| f64::from(x)).collect::<Vec<_>>()[..v.len()]));
        prop_assert_eq!(
            count_discordant_pairs(&a, &b).unwrap().discordant_pairs,
            count_discordant_pairs(&b, &a).unwrap().discordant_pairs
        );
    }
}
