use std::collections::HashSet;

use bmfpp::data::{
    load_csv_triplets_with_dims, load_matrix_market, write_csv_triplets, write_matrix_market,
    Rating, SparseRatings,
};
use bmfpp::posterior::{GaussianRowSummary, SummaryRecord};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn ratings() -> impl Strategy<Value = SparseRatings> {
    (1usize..30, 1usize..30).prop_flat_map(|(n, d)| {
        proptest::collection::vec((0..n, 0..d, -1e6f64..1e6), 0..80).prop_map(move |raw| {
            let mut seen = HashSet::new();
            let entries = raw
                .into_iter()
                .filter(|&(r, c, _)| seen.insert((r, c)))
                .map(|(r, c, v)| Rating::new(r, c, v))
                .collect();
            SparseRatings::new(n, d, entries, None).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_market_and_csv_round_trip(data in ratings()) {
        let dir = tempfile::tempdir().unwrap();
        let mm = dir.path().join("r.mtx");
        write_matrix_market(&data, &mm).unwrap();
        let back = load_matrix_market(&mm).unwrap();
        prop_assert_eq!(back.entries(), data.entries());
        prop_assert_eq!((back.n_rows(), back.n_cols()), (data.n_rows(), data.n_cols()));

        let csv = dir.path().join("r.csv");
        write_csv_triplets(&data, &csv, true).unwrap();
        let dims = Some((data.n_rows(), data.n_cols()));
        let back = load_csv_triplets_with_dims(&csv, true, dims).unwrap();
        prop_assert_eq!(back.entries(), data.entries());
    }

    #[test]
    fn summary_records_survive_json(
        k in 1usize..6,
        values in proptest::collection::vec(-1e3f64..1e3, 42),
    ) {
        let mean = DVector::from_iterator(k, values.iter().copied().take(k));
        let a = DMatrix::from_iterator(k, k, values[6..].iter().copied().take(k * k));
        let summary = GaussianRowSummary {
            mean,
            covariance: &a * a.transpose() + DMatrix::identity(k, k),
            n_samples: 3,
        };
        let json = serde_json::to_string(&SummaryRecord::new(5, &summary)).unwrap();
        let back: SummaryRecord = serde_json::from_str(&json).unwrap();
        let restored = back.to_summary().unwrap();
        prop_assert_eq!(&restored.mean, &summary.mean);
        // The record stores the lower triangle; the product above is symmetric
        // only up to rounding, so compare against the mirrored lower half.
        for r in 0..k {
            for c in 0..=r {
                prop_assert_eq!(restored.covariance[(r, c)], summary.covariance[(r, c)]);
                prop_assert_eq!(restored.covariance[(c, r)], summary.covariance[(r, c)]);
            }
        }
    }
}
