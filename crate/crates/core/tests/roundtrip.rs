use proptest::prelude::*;
use proxysel::data::{ModelId, ScoreMatrix, TaskId};
use proxysel::normalize::{normalize_pipeline, NormalizedMatrix};

fn cell() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![4 => (-1e6f64..1e6).prop_map(Some), 1 => Just(None)]
}

fn matrix() -> impl Strategy<Value = ScoreMatrix<f64>> {
    (2usize..8, 1usize..6).prop_flat_map(|(m, t)| {
        prop::collection::vec(prop::collection::vec(cell(), t), m).prop_map(move |scores| {
            let models = (0..m).map(|i| ModelId::new(format!("model {i}, \"q\"")).unwrap()).collect();
            let tasks = (0..t).map(|j| TaskId::new(format!("task-{j}")).unwrap()).collect();
            ScoreMatrix::new(models, tasks, scores).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn csv_roundtrip_is_exact(m in matrix()) {
        let back = ScoreMatrix::<f64>::from_csv_str(&m.to_csv_string()).unwrap();
        prop_assert_eq!(back.tasks(), m.tasks());
        prop_assert_eq!(back.n_models(), m.n_models());
        for i in 0..m.n_models() {
            prop_assert_eq!(&back.models()[i].name, &m.models()[i].name);
            for j in 0..m.n_tasks() {
                prop_assert_eq!(back.get(i, j).map(f64::to_bits), m.get(i, j).map(f64::to_bits));
            }
        }
    }

    #[test]
    fn json_roundtrip_is_exact(m in matrix()) {
        let back = ScoreMatrix::<f64>::from_json_str(&m.to_json_string()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn normalized_json_roundtrip(rows in prop::collection::vec(prop::collection::vec(0.0f64..100.0, 4), 3..7)) {
        let models: Vec<String> = (0..rows.len()).map(|i| format!("m{i}")).collect();
        let m = ScoreMatrix::from_labels(&models, &["a", "b", "c", "d"], rows).unwrap();
        if let Ok(p) = normalize_pipeline(&m) {
            let back = NormalizedMatrix::<f64>::from_json_str(&p.to_json_string()).unwrap();
            prop_assert_eq!(back, p);
        }
    }

    #[test]
    fn f32_csv_roundtrip(vals in prop::collection::vec(-1e4f32..1e4, 6)) {
        let rows = vec![vals[..3].to_vec(), vals[3..].to_vec()];
        let m = ScoreMatrix::from_labels(&["a", "b"], &["x", "y", "z"], rows).unwrap();
        let back = ScoreMatrix::<f32>::from_csv_str(&m.to_csv_string()).unwrap();
        prop_assert_eq!(back, m);
    }
}
