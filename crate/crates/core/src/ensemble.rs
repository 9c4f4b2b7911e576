//! Majority-vote ensemble over per-scale classifiers.
//!
//! Training transforms every image exactly once, then fits one
//! (PCA, classifier) pair per configured curvelet scale. Prediction runs one
//! transform, lets every scale vote and takes the strict plurality winner;
//! plurality ties fall to the tie-break scale's vote when that vote is one
//! of the tied labels, otherwise the image is rejected.
//!
//! An alternative quantized mode votes across bit-depth versions of the
//! image (one transform per version) instead of across scales, reusing the
//! same fusion machinery with `quantize` as the preprocessor. It is off by
//! default: it triples the transform cost for no accuracy gain.

use alloc::vec::Vec;

use crate::error::{argument_err, dimension_err};
use crate::fdct::{build_windows, coefficient_magnitudes, fdct_forward, WindowFamily};
use crate::image::{quantize, Image};
use crate::knn::{median_pairwise_distance, KnnClassifier, Label, LabeledSet, Metric};
use crate::pca::{pca_fit, PcaModel};
use crate::svm::{OaaSvm, SvmConfig};
use crate::Result;

/// Metric selection for the k-NN path; a missing sigma means "median of
/// pairwise training distances in the projected space".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricSpec {
    Euclidean,
    Gaussian { sigma: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    Knn { k: usize, metric: MetricSpec },
    Svm(SvmConfig),
}

/// Configuration of the quantized-ensemble mode: voters are bit-depth
/// versions of the image, all classified from one scale's features. With no
/// tie-break depth, plurality ties reject outright.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedConfig {
    pub scale: usize,
    pub bit_depths: Vec<u8>,
    pub tie_break_depth: Option<u8>,
}

impl Default for QuantizedConfig {
    fn default() -> Self {
        QuantizedConfig { scale: 3, bit_depths: alloc::vec![8, 4, 2], tie_break_depth: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub num_scales: usize,
    pub angles_coarse: usize,
    /// Scales that get a voter in the default (per-scale) mode.
    pub voter_scales: Vec<usize>,
    pub pca_components: usize,
    pub classifier: ClassifierSpec,
    /// Scale whose vote settles plurality ties; scale 3 carries the most
    /// discriminative single-scale features.
    pub tie_break_scale: Option<usize>,
    pub quantized: Option<QuantizedConfig>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            num_scales: 4,
            angles_coarse: 8,
            voter_scales: alloc::vec![1, 2, 3, 4],
            pca_components: crate::pca::DEFAULT_COMPONENTS,
            classifier: ClassifierSpec::Knn { k: 1, metric: MetricSpec::Euclidean },
            tie_break_scale: Some(3),
            quantized: None,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_scales < 3 {
            return Err(argument_err!(
                "pipeline needs at least 3 scales, got {}",
                self.num_scales
            ));
        }
        if self.pca_components == 0 {
            return Err(argument_err!("PCA component count must be at least 1"));
        }
        match &self.classifier {
            ClassifierSpec::Knn { k, metric } => {
                if *k == 0 {
                    return Err(argument_err!("k must be at least 1"));
                }
                if let MetricSpec::Gaussian { sigma: Some(s) } = metric {
                    if *s <= 0.0 || !s.is_finite() {
                        return Err(argument_err!("sigma must be a positive finite number"));
                    }
                }
            }
            ClassifierSpec::Svm(cfg) => {
                if cfg.c <= 0.0 || !cfg.c.is_finite() {
                    return Err(argument_err!("C must be a positive finite number"));
                }
            }
        }
        if let Some(q) = &self.quantized {
            if q.scale == 0 || q.scale > self.num_scales {
                return Err(argument_err!(
                    "quantized-mode scale {} out of range 1..={}",
                    q.scale,
                    self.num_scales
                ));
            }
            if q.bit_depths.is_empty() {
                return Err(argument_err!("quantized mode needs at least one bit depth"));
            }
            let mut seen = q.bit_depths.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != q.bit_depths.len() {
                return Err(argument_err!("duplicate bit depths in quantized mode"));
            }
            for &b in &q.bit_depths {
                if !matches!(b, 2 | 4 | 8) {
                    return Err(argument_err!("bit depth must be 2, 4 or 8, got {b}"));
                }
            }
            if let Some(tb) = q.tie_break_depth {
                if !q.bit_depths.contains(&tb) {
                    return Err(argument_err!("tie-break depth {tb} is not a voter"));
                }
            }
        } else {
            if self.voter_scales.is_empty() {
                return Err(argument_err!("at least one voter scale required"));
            }
            let mut seen = self.voter_scales.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != self.voter_scales.len() {
                return Err(argument_err!("duplicate voter scales"));
            }
            for &s in &self.voter_scales {
                if s == 0 || s > self.num_scales {
                    return Err(argument_err!(
                        "voter scale {s} out of range 1..={}",
                        self.num_scales
                    ));
                }
            }
        }
        Ok(())
    }

    fn tie_break_key(&self) -> Option<VoterKey> {
        match &self.quantized {
            Some(q) => q.tie_break_depth.map(VoterKey::BitDepth),
            None => self.tie_break_scale.map(VoterKey::Scale),
        }
    }
}

/// Identity of one voter in the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VoterKey {
    Scale(usize),
    BitDepth(u8),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedClassifier {
    Knn(KnnClassifier),
    Svm(OaaSvm),
}

impl TrainedClassifier {
    fn vote(&self, x: &[f64]) -> Result<Label> {
        match self {
            TrainedClassifier::Knn(c) => c.predict(x),
            TrainedClassifier::Svm(c) => Ok(c.predict(x)?.0),
        }
    }
}

/// One voter: where its features come from and how it classifies them.
#[derive(Debug, Clone, PartialEq)]
pub struct VoterEntry {
    pub key: VoterKey,
    /// Scale whose coefficient magnitudes feed this voter.
    pub scale: usize,
    /// Bit depth the image is quantized to first, if any.
    pub quantize_bits: Option<u8>,
    pub pca: PcaModel,
    pub classifier: TrainedClassifier,
}

/// Trained per-scale ensemble, immutable after construction.
pub struct ScaleEnsembleModel {
    windows: WindowFamily,
    voters: Vec<VoterEntry>,
    tie_break: Option<VoterKey>,
    classes: Vec<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Label(Label),
    Rejected,
}

/// Ensemble answer for one image: the fused outcome plus every voter's vote
/// and the label tally behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub outcome: Outcome,
    pub votes: Vec<(VoterKey, Label)>,
    pub tally: Vec<(Label, usize)>,
}

impl Prediction {
    pub fn label(&self) -> Option<Label> {
        match self.outcome {
            Outcome::Label(l) => Some(l),
            Outcome::Rejected => None,
        }
    }

    pub fn is_rejected(&self) -> bool {
        matches!(self.outcome, Outcome::Rejected)
    }
}

/// Training phases reported to a [`TrainObserver`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainPhase {
    Transform,
    PcaFit,
    ClassifierFit,
}

/// Hook for timing or progress reporting around training phases; phases can
/// be entered several times (once per voter for the fitting phases).
pub trait TrainObserver {
    fn enter(&mut self, _phase: TrainPhase) {}
    fn exit(&mut self, _phase: TrainPhase) {}
}

/// Observer that ignores every event.
pub struct NoopObserver;

impl TrainObserver for NoopObserver {}

/// Fuse votes into an outcome. Returns the outcome and the label tally.
///
/// The strict plurality winner is taken when unique. On a tie, the
/// tie-break voter's vote wins if it belongs to the tied set; otherwise the
/// input is rejected.
pub fn fuse_votes(
    votes: &[(VoterKey, Label)],
    tie_break: Option<VoterKey>,
) -> (Outcome, Vec<(Label, usize)>) {
    let mut tally: Vec<(Label, usize)> = Vec::new();
    for &(_, label) in votes {
        match tally.iter_mut().find(|(l, _)| *l == label) {
            Some((_, count)) => *count += 1,
            None => tally.push((label, 1)),
        }
    }
    tally.sort_unstable();
    let top = tally.iter().map(|&(_, c)| c).max().unwrap_or(0);
    let tied: Vec<Label> =
        tally.iter().filter(|&&(_, c)| c == top).map(|&(l, _)| l).collect();

    let outcome = if tied.len() == 1 {
        Outcome::Label(tied[0])
    } else if let Some(tb_vote) = tie_break
        .and_then(|tb| votes.iter().find(|(k, _)| *k == tb))
        .map(|&(_, l)| l)
    {
        if tied.contains(&tb_vote) {
            Outcome::Label(tb_vote)
        } else {
            Outcome::Rejected
        }
    } else {
        Outcome::Rejected
    };
    (outcome, tally)
}

/// Train the ensemble on uniformly sized images.
pub fn ensemble_train(
    data: &[(Image, Label)],
    config: &EnsembleConfig,
) -> Result<ScaleEnsembleModel> {
    ensemble_train_observed(data, config, &mut NoopObserver)
}

/// [`ensemble_train`] with phase callbacks.
pub fn ensemble_train_observed(
    data: &[(Image, Label)],
    config: &EnsembleConfig,
    observer: &mut dyn TrainObserver,
) -> Result<ScaleEnsembleModel> {
    config.validate()?;
    if data.len() < 2 {
        return Err(argument_err!("training needs at least 2 images, got {}", data.len()));
    }
    let (width, height) = (data[0].0.width(), data[0].0.height());
    for (img, _) in data {
        if img.width() != width || img.height() != height {
            return Err(dimension_err!(
                "training images must share one geometry; found {}x{} and {width}x{height}",
                img.width(),
                img.height()
            ));
        }
    }

    let windows = build_windows(width, height, config.num_scales, config.angles_coarse)?;
    let voter_sources = voter_sources(config);

    observer.enter(TrainPhase::Transform);
    let mut per_voter: Vec<Vec<Vec<f64>>> =
        voter_sources.iter().map(|_| Vec::with_capacity(data.len())).collect();
    for (img, _) in data {
        if config.quantized.is_none() {
            // One transform per image feeds every scale's voter.
            let coeffs = fdct_forward(img, &windows)?;
            for (features, source) in per_voter.iter_mut().zip(&voter_sources) {
                features.push(coefficient_magnitudes(&coeffs, source.scale)?);
            }
        } else {
            for (features, source) in per_voter.iter_mut().zip(&voter_sources) {
                features.push(extract_quantized(img, source, &windows)?);
            }
        }
    }
    observer.exit(TrainPhase::Transform);

    let labels: Vec<Label> = data.iter().map(|&(_, l)| l).collect();
    let mut voters = Vec::with_capacity(voter_sources.len());
    for (source, features) in voter_sources.iter().zip(per_voter) {
        observer.enter(TrainPhase::PcaFit);
        let dim = features[0].len();
        let k = config.pca_components.min(dim).min(features.len());
        let fit = pca_fit(&features, k)?;
        let projected: Vec<Vec<f64>> = features
            .iter()
            .map(|f| fit.model.project(f))
            .collect::<Result<_>>()?;
        observer.exit(TrainPhase::PcaFit);

        observer.enter(TrainPhase::ClassifierFit);
        let set = LabeledSet::new(projected, labels.clone())?;
        let classifier = match &config.classifier {
            ClassifierSpec::Knn { k, metric } => {
                let metric = match metric {
                    MetricSpec::Euclidean => Metric::Euclidean,
                    MetricSpec::Gaussian { sigma: Some(s) } => Metric::Gaussian { sigma: *s },
                    MetricSpec::Gaussian { sigma: None } => {
                        Metric::Gaussian { sigma: median_pairwise_distance(&set) }
                    }
                };
                TrainedClassifier::Knn(KnnClassifier::new(set, *k, metric)?)
            }
            ClassifierSpec::Svm(svm_cfg) => TrainedClassifier::Svm(OaaSvm::train(&set, svm_cfg)?),
        };
        observer.exit(TrainPhase::ClassifierFit);

        voters.push(VoterEntry {
            key: source.key,
            scale: source.scale,
            quantize_bits: source.quantize_bits,
            pca: fit.model,
            classifier,
        });
    }

    let mut classes = labels;
    classes.sort_unstable();
    classes.dedup();

    Ok(ScaleEnsembleModel { windows, voters, tie_break: config.tie_break_key(), classes })
}

struct VoterSource {
    key: VoterKey,
    scale: usize,
    quantize_bits: Option<u8>,
}

fn voter_sources(config: &EnsembleConfig) -> Vec<VoterSource> {
    match &config.quantized {
        Some(q) => q
            .bit_depths
            .iter()
            .map(|&b| VoterSource {
                key: VoterKey::BitDepth(b),
                scale: q.scale,
                quantize_bits: Some(b),
            })
            .collect(),
        None => config
            .voter_scales
            .iter()
            .map(|&s| VoterSource { key: VoterKey::Scale(s), scale: s, quantize_bits: None })
            .collect(),
    }
}

fn extract_quantized(
    img: &Image,
    source: &VoterSource,
    windows: &WindowFamily,
) -> Result<Vec<f64>> {
    let bits = source.quantize_bits.expect("quantized voters carry a bit depth");
    let q = quantize(img, bits)?;
    let coeffs = fdct_forward(&q, windows)?;
    coefficient_magnitudes(&coeffs, source.scale)
}

impl ScaleEnsembleModel {
    /// Reassemble a model from stored parts (deserialization).
    pub fn from_parts(
        windows: WindowFamily,
        voters: Vec<VoterEntry>,
        tie_break: Option<VoterKey>,
        classes: Vec<Label>,
    ) -> Result<Self> {
        if voters.is_empty() {
            return Err(argument_err!("model needs at least one voter"));
        }
        for v in &voters {
            if v.scale == 0 || v.scale > windows.num_scales() {
                return Err(argument_err!(
                    "voter scale {} out of range 1..={}",
                    v.scale,
                    windows.num_scales()
                ));
            }
        }
        if classes.is_empty() {
            return Err(argument_err!("model needs at least one class"));
        }
        Ok(ScaleEnsembleModel { windows, voters, tie_break, classes })
    }

    pub fn windows(&self) -> &WindowFamily {
        &self.windows
    }

    pub fn voters(&self) -> &[VoterEntry] {
        &self.voters
    }

    pub fn tie_break(&self) -> Option<VoterKey> {
        self.tie_break
    }

    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    pub fn width(&self) -> usize {
        self.windows.width()
    }

    pub fn height(&self) -> usize {
        self.windows.height()
    }

    /// Raw magnitude features per voter; one forward transform per distinct
    /// preprocessed version of the image (exactly one in per-scale mode).
    pub fn voter_features(&self, img: &Image) -> Result<Vec<Vec<f64>>> {
        if img.width() != self.width() || img.height() != self.height() {
            return Err(dimension_err!(
                "image {}x{} does not match model geometry {}x{}",
                img.width(),
                img.height(),
                self.width(),
                self.height()
            ));
        }
        if self.voters.iter().all(|v| v.quantize_bits.is_none()) {
            let coeffs = fdct_forward(img, &self.windows)?;
            self.voters
                .iter()
                .map(|v| coefficient_magnitudes(&coeffs, v.scale))
                .collect()
        } else {
            self.voters
                .iter()
                .map(|v| {
                    let source = VoterSource {
                        key: v.key,
                        scale: v.scale,
                        quantize_bits: v.quantize_bits,
                    };
                    extract_quantized(img, &source, &self.windows)
                })
                .collect()
        }
    }

    /// PCA projections of per-voter features.
    pub fn project_features(&self, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if features.len() != self.voters.len() {
            return Err(dimension_err!(
                "{} feature vectors for {} voters",
                features.len(),
                self.voters.len()
            ));
        }
        self.voters
            .iter()
            .zip(features)
            .map(|(v, f)| v.pca.project(f))
            .collect()
    }

    /// Vote and fuse already-projected features.
    pub fn classify_projected(&self, projected: &[Vec<f64>]) -> Result<Prediction> {
        if projected.len() != self.voters.len() {
            return Err(dimension_err!(
                "{} projections for {} voters",
                projected.len(),
                self.voters.len()
            ));
        }
        let mut votes = Vec::with_capacity(self.voters.len());
        for (voter, x) in self.voters.iter().zip(projected) {
            votes.push((voter.key, voter.classifier.vote(x)?));
        }
        let (outcome, tally) = fuse_votes(&votes, self.tie_break);
        Ok(Prediction { outcome, votes, tally })
    }

    /// Full pipeline for one image: transform, project, vote, fuse.
    pub fn predict(&self, img: &Image) -> Result<Prediction> {
        let features = self.voter_features(img)?;
        let projected = self.project_features(&features)?;
        self.classify_projected(&projected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: Label = 0;
    const B: Label = 1;
    const C: Label = 2;

    fn scale_votes(labels: &[Label]) -> Vec<(VoterKey, Label)> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (VoterKey::Scale(i + 1), l))
            .collect()
    }

    #[test]
    fn unanimity_wins() {
        let (outcome, tally) = fuse_votes(&scale_votes(&[A, A, A, A]), Some(VoterKey::Scale(3)));
        assert_eq!(outcome, Outcome::Label(A));
        assert_eq!(tally, vec![(A, 4)]);
    }

    #[test]
    fn plurality_wins_without_majority() {
        let (outcome, _) = fuse_votes(&scale_votes(&[A, A, B, C]), Some(VoterKey::Scale(3)));
        assert_eq!(outcome, Outcome::Label(A));
    }

    #[test]
    fn tie_breaks_by_the_configured_scale() {
        // Scales 1..4 vote A, A, B, B; scale 3 voted B.
        let (outcome, _) = fuse_votes(&scale_votes(&[A, A, B, B]), Some(VoterKey::Scale(3)));
        assert_eq!(outcome, Outcome::Label(B));
        // Same votes, tie-break on scale 1 (voted A).
        let (outcome, _) = fuse_votes(&scale_votes(&[A, A, B, B]), Some(VoterKey::Scale(1)));
        assert_eq!(outcome, Outcome::Label(A));
    }

    #[test]
    fn unresolved_ties_reject() {
        // Tie-break voter absent from the ensemble.
        let votes = vec![
            (VoterKey::Scale(1), A),
            (VoterKey::Scale(2), B),
            (VoterKey::Scale(4), C),
        ];
        let (outcome, _) = fuse_votes(&votes, Some(VoterKey::Scale(3)));
        assert_eq!(outcome, Outcome::Rejected);

        // No tie-break policy at all.
        let (outcome, _) = fuse_votes(&scale_votes(&[A, B]), None);
        assert_eq!(outcome, Outcome::Rejected);

        // Tie-break voter present but its vote is outside the tied set.
        let votes = scale_votes(&[A, A, C, B, B]);
        let (outcome, _) = fuse_votes(&votes, Some(VoterKey::Scale(3)));
        assert_eq!(outcome, Outcome::Rejected);
    }

    #[test]
    fn config_validation_catches_misuse() {
        let cfg = EnsembleConfig { num_scales: 2, ..EnsembleConfig::default() };
        assert!(cfg.validate().is_err());

        let cfg =
            EnsembleConfig { voter_scales: alloc::vec![1, 1], ..EnsembleConfig::default() };
        assert!(cfg.validate().is_err());

        let cfg = EnsembleConfig { voter_scales: alloc::vec![5], ..EnsembleConfig::default() };
        assert!(cfg.validate().is_err());

        let cfg = EnsembleConfig {
            quantized: Some(QuantizedConfig {
                scale: 3,
                bit_depths: alloc::vec![8, 3],
                tie_break_depth: None,
            }),
            ..EnsembleConfig::default()
        };
        assert!(cfg.validate().is_err());

        assert!(EnsembleConfig::default().validate().is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn identical_votes_never_reject(n in 1usize..8, label in 0usize..5) {
                let votes = scale_votes(&vec![label; n]);
                let (outcome, _) = fuse_votes(&votes, None);
                prop_assert_eq!(outcome, Outcome::Label(label));
            }

            #[test]
            fn removing_a_winner_vote_cannot_flip_a_surviving_plurality(
                labels in proptest::collection::vec(0usize..4, 2..9),
                tb in proptest::option::of(1usize..9),
            ) {
                let votes = scale_votes(&labels);
                let tie_break = tb.map(VoterKey::Scale);
                let (outcome, _) = fuse_votes(&votes, tie_break);
                if let Outcome::Label(winner) = outcome {
                    for drop_idx in 0..votes.len() {
                        if votes[drop_idx].1 != winner {
                            continue;
                        }
                        let remaining: Vec<_> = votes
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| i != drop_idx)
                            .map(|(_, v)| *v)
                            .collect();
                        let (after, tally) = fuse_votes(&remaining, tie_break);
                        let top = tally.iter().map(|&(_, c)| c).max().unwrap_or(0);
                        let still_strict = tally.iter().filter(|&&(_, c)| c == top).count() == 1
                            && tally.iter().any(|&(l, c)| l == winner && c == top);
                        if still_strict {
                            prop_assert_eq!(after, Outcome::Label(winner));
                        }
                    }
                }
            }
        }
    }
}
