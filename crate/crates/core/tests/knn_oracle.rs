//! Randomized equivalence of the k-NN classifier against an independent
//! brute-force oracle: compute every distance, sort, vote with the same
//! tie-break contract.

use curveface_core::knn::{knn_distance, KnnClassifier, LabeledSet, Metric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight-line reimplementation of the prediction contract, kept separate
/// from the classifier on purpose: rank by metric distance, vote, break
/// label ties by summed Euclidean distance, then lowest index, then label.
fn brute_force_predict(
    points: &[Vec<f64>],
    labels: &[usize],
    query: &[f64],
    k: usize,
    metric: Metric,
) -> usize {
    let mut dists: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (knn_distance(metric, query, p).unwrap(), i))
        .collect();
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nearest = &dists[..k];

    let mut candidates: Vec<(usize, usize, f64, usize)> = Vec::new(); // label, votes, sum, min idx
    for &(_, i) in nearest {
        let euclid = knn_distance(Metric::Euclidean, query, &points[i]).unwrap();
        match candidates.iter_mut().find(|c| c.0 == labels[i]) {
            Some(c) => {
                c.1 += 1;
                c.2 += euclid;
                c.3 = c.3.min(i);
            }
            None => candidates.push((labels[i], 1, euclid, i)),
        }
    }
    let mut best = candidates[0];
    for c in candidates.into_iter().skip(1) {
        let better = c.1 > best.1
            || (c.1 == best.1 && c.2 < best.2)
            || (c.1 == best.1 && c.2 == best.2 && c.3 < best.3)
            || (c.1 == best.1 && c.2 == best.2 && c.3 == best.3 && c.0 < best.0);
        if better {
            best = c;
        }
    }
    best.0
}

fn random_instance(
    rng: &mut ChaCha8Rng,
) -> (Vec<Vec<f64>>, Vec<usize>, Vec<f64>, usize) {
    let dim = rng.random_range(1..=16);
    let n = rng.random_range(3..=50);
    let classes = rng.random_range(2..=5usize);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
    let query: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    (points, labels, query, n)
}

#[test]
fn matches_brute_force_oracle_on_a_thousand_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..1000 {
        let (points, labels, query, n) = random_instance(&mut rng);
        let mut k = [1usize, 3, 5][case % 3];
        if k > n {
            k = 1;
        }

        let expected = brute_force_predict(&points, &labels, &query, k, Metric::Euclidean);
        let classifier = KnnClassifier::new(
            LabeledSet::new(points, labels).unwrap(),
            k,
            Metric::Euclidean,
        )
        .unwrap();
        let actual = classifier.predict(&query).unwrap();
        assert_eq!(actual, expected, "case {case} with k={k}");
    }
}

#[test]
fn gaussian_and_euclidean_agree_on_a_thousand_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for case in 0..1000 {
        let (points, labels, query, n) = random_instance(&mut rng);
        let mut k = [1usize, 3, 5][case % 3];
        if k > n {
            k = 1;
        }
        let set = LabeledSet::new(points, labels).unwrap();

        // Coordinates live in [-1, 1], so distances stay below 8 and a unit
        // sigma keeps the Gaussian dissimilarity far from saturation.
        let euclid = KnnClassifier::new(set.clone(), k, Metric::Euclidean).unwrap();
        let gauss =
            KnnClassifier::new(set, k, Metric::Gaussian { sigma: 2.0 }).unwrap();
        assert_eq!(
            euclid.predict(&query).unwrap(),
            gauss.predict(&query).unwrap(),
            "case {case} with k={k}"
        );
    }
}

#[test]
fn permuting_training_order_keeps_predictions_when_distances_are_distinct() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..100 {
        let (points, labels, query, n) = random_instance(&mut rng);
        // Random reals make exact distance ties measure-zero; verify anyway.
        let mut dists: Vec<f64> = points
            .iter()
            .map(|p| knn_distance(Metric::Euclidean, &query, p).unwrap())
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if dists.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        let k = 3.min(n);

        let base = KnnClassifier::new(
            LabeledSet::new(points.clone(), labels.clone()).unwrap(),
            k,
            Metric::Euclidean,
        )
        .unwrap()
        .predict(&query)
        .unwrap();

        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let permuted_points: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();
        let permuted_labels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
        let permuted = KnnClassifier::new(
            LabeledSet::new(permuted_points, permuted_labels).unwrap(),
            k,
            Metric::Euclidean,
        )
        .unwrap()
        .predict(&query)
        .unwrap();

        assert_eq!(base, permuted);
    }
}
