//! k-nearest-neighbour classification over labeled feature vectors, with the
//! plain Euclidean metric or a Gaussian dissimilarity.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{argument_err, dimension_err};
use crate::Result;

/// Class identifier. The harness maps these to subject names.
pub type Label = usize;

/// Feature vectors with parallel class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    points: Vec<Vec<f64>>,
    labels: Vec<Label>,
    dim: usize,
}

impl LabeledSet {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if points.is_empty() {
            return Err(argument_err!("labeled set must contain at least one point"));
        }
        if points.len() != labels.len() {
            return Err(dimension_err!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            ));
        }
        let dim = points[0].len();
        for p in &points {
            if p.len() != dim {
                return Err(dimension_err!(
                    "point length {} does not match first point length {dim}",
                    p.len()
                ));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(argument_err!("points must be finite"));
            }
        }
        Ok(LabeledSet { points, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Sorted, deduplicated labels.
    pub fn classes(&self) -> Vec<Label> {
        let mut classes = self.labels.clone();
        classes.sort_unstable();
        classes.dedup();
        classes
    }
}

/// Distance used to rank neighbours.
///
/// The Gaussian kernel `exp(-d^2 / 2 sigma^2)` is a similarity, so it is
/// folded into the dissimilarity `1 - exp(-d^2 / 2 sigma^2)`; that keeps
/// "nearest" meaningful and, being monotone in the Euclidean distance,
/// ranks neighbours identically for every sigma. In f64 arithmetic the
/// dissimilarity saturates to exactly 1.0 once `d^2` exceeds roughly
/// `73 * sigma^2`; sigma must be on the scale of the data (see
/// [`median_pairwise_distance`]) for the ranking to stay strict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Euclidean,
    Gaussian { sigma: f64 },
}

/// Distance between two equally long vectors under `metric`.
pub fn knn_distance(metric: Metric, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(dimension_err!("vector lengths differ: {} vs {}", x.len(), y.len()));
    }
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    match metric {
        Metric::Euclidean => Ok(libm::sqrt(sq)),
        Metric::Gaussian { sigma } => {
            if sigma <= 0.0 || !sigma.is_finite() {
                return Err(argument_err!("sigma must be a positive finite number, got {sigma}"));
            }
            Ok(1.0 - libm::exp(-sq / (2.0 * sigma * sigma)))
        }
    }
}

/// Median Euclidean distance over all point pairs; the stock choice for the
/// Gaussian sigma when none is configured. Falls back to 1.0 when every
/// pairwise distance is zero.
pub fn median_pairwise_distance(set: &LabeledSet) -> f64 {
    let n = set.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = knn_distance(Metric::Euclidean, &set.points[i], &set.points[j])
                .expect("uniform dimensions");
            dists.push(d);
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 0 {
        0.5 * (dists[mid - 1] + dists[mid])
    } else {
        dists[mid]
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Plurality vote among the k nearest training points.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnClassifier {
    set: LabeledSet,
    k: usize,
    metric: Metric,
}

impl KnnClassifier {
    pub fn new(set: LabeledSet, k: usize, metric: Metric) -> Result<Self> {
        if k == 0 || k > set.len() {
            return Err(argument_err!("k = {k} out of range 1..={}", set.len()));
        }
        if let Metric::Gaussian { sigma } = metric {
            if sigma <= 0.0 || !sigma.is_finite() {
                return Err(argument_err!("sigma must be a positive finite number, got {sigma}"));
            }
        }
        Ok(KnnClassifier { set, k, metric })
    }

    pub fn set(&self) -> &LabeledSet {
        &self.set
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Predict the query's label.
    ///
    /// Neighbour order is by (metric distance, training index). Label ties
    /// among the k nearest break by the smaller summed Euclidean distance
    /// (Euclidean rather than the ranking metric, so Gaussian and Euclidean
    /// classifiers answer identically), then by the lowest training index
    /// inside the tied group, then by label.
    pub fn predict(&self, query: &[f64]) -> Result<Label> {
        if query.len() != self.set.dim() {
            return Err(dimension_err!(
                "query length {} does not match training dimension {}",
                query.len(),
                self.set.dim()
            ));
        }
        if query.iter().any(|v| !v.is_finite()) {
            return Err(argument_err!("query must be finite"));
        }

        let mut order: Vec<(f64, usize, f64)> = self
            .set
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let euclid = knn_distance(Metric::Euclidean, query, p).expect("validated");
                let ranked = match self.metric {
                    Metric::Euclidean => euclid,
                    m => knn_distance(m, query, p).expect("validated"),
                };
                (ranked, i, euclid)
            })
            .collect();
        order.sort_unstable_by(|a, b| {
            (a.0, a.1).partial_cmp(&(b.0, b.1)).expect("finite distances")
        });

        // label -> (votes, summed Euclidean distance, lowest index)
        let mut tally: BTreeMap<Label, (usize, f64, usize)> = BTreeMap::new();
        for &(_, i, euclid) in order.iter().take(self.k) {
            let entry = tally.entry(self.set.labels()[i]).or_insert((0, 0.0, i));
            entry.0 += 1;
            entry.1 += euclid;
            entry.2 = entry.2.min(i);
        }

        let mut winner: Option<(Label, (usize, f64, usize))> = None;
        for (&label, &stats) in &tally {
            let better = match &winner {
                None => true,
                Some((_, best)) => {
                    stats.0 > best.0
                        || (stats.0 == best.0 && stats.1 < best.1)
                        || (stats.0 == best.0 && stats.1 == best.1 && stats.2 < best.2)
                }
            };
            if better {
                winner = Some((label, stats));
            }
        }
        Ok(winner.expect("k >= 1").0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_set() -> LabeledSet {
        LabeledSet::new(
            vec![vec![0.0, 0.0], vec![10.0, 0.0], vec![0.0, 10.0]],
            vec![0, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(knn_distance(Metric::Euclidean, &[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(
            knn_distance(Metric::Gaussian { sigma: 2.0 }, &[1.0, 2.0], &[1.0, 2.0]).unwrap(),
            0.0
        );
        assert_eq!(knn_distance(Metric::Euclidean, &[3.0, 0.0], &[0.0, 4.0]).unwrap(), 5.0);
        assert!(knn_distance(Metric::Euclidean, &[1.0], &[1.0, 2.0]).is_err());
        assert!(knn_distance(Metric::Gaussian { sigma: 0.0 }, &[1.0], &[2.0]).is_err());
    }

    #[test]
    fn nearest_neighbour_examples() {
        let c = KnnClassifier::new(small_set(), 1, Metric::Euclidean).unwrap();
        // A training point is its own nearest neighbour.
        assert_eq!(c.predict(&[10.0, 0.0]).unwrap(), 1);
        assert_eq!(c.predict(&[1.0, 0.0]).unwrap(), 0);

        let c3 = KnnClassifier::new(small_set(), 3, Metric::Euclidean).unwrap();
        assert_eq!(c3.predict(&[4.0, 4.0]).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(KnnClassifier::new(small_set(), 0, Metric::Euclidean).is_err());
        assert!(KnnClassifier::new(small_set(), 4, Metric::Euclidean).is_err());
        let c = KnnClassifier::new(small_set(), 1, Metric::Euclidean).unwrap();
        assert!(c.predict(&[1.0]).is_err());
        assert!(c.predict(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn exact_tie_breaks_by_lowest_training_index() {
        let set = LabeledSet::new(
            vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            vec![7, 3],
        )
        .unwrap();
        let c = KnnClassifier::new(set, 1, Metric::Euclidean).unwrap();
        assert_eq!(c.predict(&[0.0, 0.0]).unwrap(), 7);
    }

    #[test]
    fn median_pairwise_distance_on_degenerate_sets() {
        let set = LabeledSet::new(vec![vec![1.0], vec![1.0]], vec![0, 1]).unwrap();
        assert_eq!(median_pairwise_distance(&set), 1.0);
        let set = LabeledSet::new(vec![vec![0.0], vec![3.0]], vec![0, 1]).unwrap();
        assert_eq!(median_pairwise_distance(&set), 3.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gaussian_never_reverses_euclidean_order(sigma in 0.05f64..50.0, d1 in 0.0f64..10.0, d2 in 0.0f64..10.0) {
                let e1 = knn_distance(Metric::Euclidean, &[d1], &[0.0]).unwrap();
                let e2 = knn_distance(Metric::Euclidean, &[d2], &[0.0]).unwrap();
                let g1 = knn_distance(Metric::Gaussian { sigma }, &[d1], &[0.0]).unwrap();
                let g2 = knn_distance(Metric::Gaussian { sigma }, &[d2], &[0.0]).unwrap();
                if e1 < e2 {
                    prop_assert!(g1 <= g2);
                }
            }

            #[test]
            fn gaussian_ranking_is_strict_away_from_saturation(sigma in 1.7f64..50.0, d1 in 0.0f64..9.0, gap in 1e-3f64..1.0) {
                let d2 = d1 + gap;
                let g1 = knn_distance(Metric::Gaussian { sigma }, &[d1], &[0.0]).unwrap();
                let g2 = knn_distance(Metric::Gaussian { sigma }, &[d2], &[0.0]).unwrap();
                prop_assert!(g1 < g2, "g({d1}) = {g1}, g({d2}) = {g2}");
            }

            #[test]
            fn uniform_scaling_keeps_predictions(scale in 0.01f64..100.0) {
                let pts = vec![vec![0.0, 1.0], vec![5.0, 2.0], vec![-3.0, -1.0], vec![2.0, 2.0]];
                let labels = vec![0, 1, 2, 1];
                let query = [1.5, 0.5];
                let base = KnnClassifier::new(
                    LabeledSet::new(pts.clone(), labels.clone()).unwrap(),
                    3,
                    Metric::Euclidean,
                ).unwrap();
                let scaled_pts: Vec<Vec<f64>> = pts
                    .iter()
                    .map(|p| p.iter().map(|v| v * scale).collect())
                    .collect();
                let scaled_query: Vec<f64> = query.iter().map(|v| v * scale).collect();
                let scaled = KnnClassifier::new(
                    LabeledSet::new(scaled_pts, labels).unwrap(),
                    3,
                    Metric::Euclidean,
                ).unwrap();
                prop_assert_eq!(base.predict(&query).unwrap(), scaled.predict(&scaled_query).unwrap());
            }
        }
    }
}
