use commaudit::community::{kmeans, wcss, KMeansConfig};
use commaudit::Matrix;
use proptest::prelude::*;

fn arb_points() -> impl Strategy<Value = Matrix> {
    (1usize..60, 1usize..5).prop_flat_map(|(n, d)| {
        prop::collection::vec(-10.0f64..10.0, n * d).prop_map(move |v| Matrix::from_vec(n, d, v))
    })
}

fn wcss_oracle(points: &Matrix, assignment: &[usize]) -> f64 {
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..points.rows()).filter(|&i| assignment[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        for j in 0..points.cols() {
            let mean = members.iter().map(|&i| points[(i, j)]).sum::<f64>() / members.len() as f64;
            for &i in &members {
                total += (points[(i, j)] - mean).powi(2);
            }
        }
    }
    total
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lloyd_never_increases_wcss(points in arb_points(), k in 1usize..6, seed in any::<u64>()) {
        let k = k.min(points.rows());
        let cfg = KMeansConfig { k, ..KMeansConfig::default() };
        let r = kmeans(&points, &cfg, seed).unwrap();
        for w in r.wcss_trace.windows(2) {
            prop_assert!(w[1] <= w[0], "trace {:?}", r.wcss_trace);
        }
        prop_assert!(r.sizes().iter().all(|&s| s > 0));
        prop_assert_eq!(r, kmeans(&points, &cfg, seed).unwrap());
    }

    #[test]
    fn wcss_matches_double_loop(
        points in (50usize..51, 2usize..4).prop_flat_map(|(n, d)| {
            prop::collection::vec(-3.0f64..3.0, n * d).prop_map(move |v| Matrix::from_vec(n, d, v))
        }),
        labels in prop::collection::vec(0usize..4, 50),
    ) {
        let got = wcss(&points, &labels);
        let want = wcss_oracle(&points, &labels);
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn separated_example_ignores_point_order(perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(), seed in any::<u64>()) {
        let base = [0.0, 1.0, 10.0, 11.0];
        let points = Matrix::from_rows(&perm.iter().map(|&i| vec![base[i]]).collect::<Vec<_>>());
        let r = kmeans(&points, &KMeansConfig { k: 2, ..KMeansConfig::default() }, seed).unwrap();
        // map back to the original point order
        let mut original = [0usize; 4];
        for (pos, &i) in perm.iter().enumerate() {
            original[i] = r.assignment[pos];
        }
        prop_assert!(same_partition(&original, &[0, 0, 1, 1]));
        let mut cents = vec![r.centroids[(0, 0)], r.centroids[(1, 0)]];
        cents.sort_by(f64::total_cmp);
        prop_assert_eq!(cents, vec![0.5, 10.5]);
    }
}
