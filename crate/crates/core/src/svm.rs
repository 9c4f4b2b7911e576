//! Soft-margin linear SVMs trained on the primal hinge objective
//! `0.5*||w||^2 + C * sum_i max(0, 1 - y_i (w.x_i + b))`.
//!
//! Each epoch takes a full-batch subgradient direction and minimizes the
//! objective exactly along it; the objective is piecewise quadratic in the
//! step, so the line search walks the hinge breakpoints. Epoch objectives
//! are therefore non-increasing by construction, and training stops once
//! the relative decrease over an epoch falls below the tolerance or the
//! epoch cap is hit (reported through `converged`).
//!
//! Multiclass goes through one-against-all: one hyperplane per class over
//! z-score standardized features, prediction by decision-value argmax with
//! an `accepted` flag that records whether exactly one machine fired.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{argument_err, dimension_err};
use crate::knn::{Label, LabeledSet};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// Hinge penalty weight.
    pub c: f64,
    pub max_epochs: usize,
    /// Relative per-epoch objective decrease below which training stops.
    pub tol: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, max_epochs: 1000, tol: 1e-6 }
    }
}

/// A trained separating hyperplane.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// False when the epoch cap stopped training before the tolerance did.
    pub converged: bool,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

/// Outcome of one binary fit, with the per-epoch objective trace.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTraining {
    pub svm: BinarySvm,
    pub objective_history: Vec<f64>,
    pub epochs: usize,
}

/// Train a binary max-margin classifier on two point sets.
pub fn svm_train_binary(
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
    config: &SvmConfig,
) -> Result<BinaryTraining> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(argument_err!("both classes need at least one sample"));
    }
    if config.c <= 0.0 || !config.c.is_finite() {
        return Err(argument_err!("C must be a positive finite number, got {}", config.c));
    }
    if config.max_epochs == 0 {
        return Err(argument_err!("epoch cap must be at least 1"));
    }
    let dim = positives[0].len();
    if dim == 0 {
        return Err(dimension_err!("samples must not be empty vectors"));
    }
    let mut points: Vec<&[f64]> = Vec::with_capacity(positives.len() + negatives.len());
    let mut signs: Vec<f64> = Vec::with_capacity(points.capacity());
    for p in positives {
        points.push(p);
        signs.push(1.0);
    }
    for n in negatives {
        points.push(n);
        signs.push(-1.0);
    }
    for p in &points {
        if p.len() != dim {
            return Err(dimension_err!(
                "sample length {} does not match first sample length {dim}",
                p.len()
            ));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(argument_err!("samples must be finite"));
        }
    }

    let c = config.c;
    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut objective = eval_objective(&w, b, &points, &signs, c);
    let mut history = Vec::new();
    let mut converged = false;
    let mut epochs = 0;

    for _ in 0..config.max_epochs {
        epochs += 1;
        let previous = objective;

        // Hinge arguments h_i = 1 - y_i (w.x_i + b) and the subgradient.
        let mut grad_w = w.clone();
        let mut grad_b = 0.0f64;
        let mut hinge = Vec::with_capacity(points.len());
        for (p, &y) in points.iter().zip(&signs) {
            let h = 1.0 - y * (dot(&w, p) + b);
            hinge.push(h);
            if h > 0.0 {
                for (g, &v) in grad_w.iter_mut().zip(p.iter()) {
                    *g -= c * y * v;
                }
                grad_b -= c * y;
            }
        }

        let dir_w: Vec<f64> = grad_w.iter().map(|g| -g).collect();
        let dir_b = -grad_b;
        let step = line_search(&w, &dir_w, dir_b, &points, &signs, &hinge, c);

        if step > 0.0 {
            let cand_w: Vec<f64> = w.iter().zip(&dir_w).map(|(wi, di)| wi + step * di).collect();
            let cand_b = b + step * dir_b;
            let cand_obj = eval_objective(&cand_w, cand_b, &points, &signs, c);
            if cand_obj <= objective {
                w = cand_w;
                b = cand_b;
                objective = cand_obj;
            }
        }
        history.push(objective);

        let relative = (previous - objective) / previous.max(f64::MIN_POSITIVE);
        if relative < config.tol {
            converged = true;
            break;
        }
    }

    Ok(BinaryTraining {
        svm: BinarySvm { weights: w, bias: b, converged },
        objective_history: history,
        epochs,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn eval_objective(w: &[f64], b: f64, points: &[&[f64]], signs: &[f64], c: f64) -> f64 {
    let reg = 0.5 * dot(w, w);
    let loss: f64 = points
        .iter()
        .zip(signs)
        .map(|(p, &y)| (1.0 - y * (dot(w, p) + b)).max(0.0))
        .sum();
    reg + c * loss
}

/// Exact minimizer of `t -> objective(w + t*dir_w, b + t*dir_b)` over t >= 0.
///
/// The objective is convex piecewise quadratic in t; hinge terms switch at
/// `t_i = h_i / s_i` where `s_i = y_i (dir_w.x_i + dir_b)`. Walking the
/// breakpoints in order, the first segment whose derivative reaches zero
/// holds the minimum.
fn line_search(
    w: &[f64],
    dir_w: &[f64],
    dir_b: f64,
    points: &[&[f64]],
    signs: &[f64],
    hinge: &[f64],
    c: f64,
) -> f64 {
    let quad = dot(dir_w, dir_w);
    let lin = dot(w, dir_w);

    // slope_active = sum of s_i over hinges active on the current segment.
    let mut slope_active = 0.0f64;
    // (time, s_i, joins) events where a hinge activates or deactivates.
    let mut events: Vec<(f64, f64, bool)> = Vec::new();
    for (i, (p, &y)) in points.iter().zip(signs).enumerate() {
        let s = y * (dot(dir_w, p) + dir_b);
        let h = hinge[i];
        if h > 0.0 {
            slope_active += s;
            if s > 0.0 {
                events.push((h / s, s, false));
            }
        } else if s < 0.0 {
            if h == 0.0 {
                slope_active += s;
            } else {
                events.push((h / s, s, true));
            }
        }
    }
    events.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite breakpoints"));

    let mut t_start = 0.0f64;
    let mut idx = 0;
    loop {
        let derivative_at_start = quad * t_start + lin - c * slope_active;
        if derivative_at_start >= 0.0 {
            return t_start;
        }
        let t_end = events.get(idx).map(|e| e.0);
        if quad > 0.0 {
            let root = (c * slope_active - lin) / quad;
            if t_end.is_none_or(|te| root <= te) {
                return root.max(t_start);
            }
        } else if t_end.is_none() {
            // Flat direction with negative slope and no more breakpoints:
            // every remaining hinge shrinks forever, so the objective is
            // minimized in the limit; stepping to the last breakpoint is
            // exact because the slope past it is zero for hinge-free data.
            return t_start;
        }
        let (te, s, joins) = events[idx];
        if joins {
            slope_active += s;
        } else {
            slope_active -= s;
        }
        t_start = te;
        idx += 1;
    }
}

/// One-against-all multiclass SVM with per-feature z-score standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct OaaSvm {
    classes: Vec<Label>,
    machines: Vec<BinarySvm>,
    feature_mean: Vec<f64>,
    feature_scale: Vec<f64>,
    c: f64,
}

impl OaaSvm {
    /// Train one machine per class (positives vs. everything else), in
    /// ascending class order.
    pub fn train(set: &LabeledSet, config: &SvmConfig) -> Result<OaaSvm> {
        let classes = set.classes();
        let dim = set.dim();
        if dim == 0 {
            return Err(dimension_err!("labeled set has zero-length points"));
        }

        let n = set.len() as f64;
        let mut mean = vec![0.0f64; dim];
        for p in set.points() {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v / n;
            }
        }
        let mut scale = vec![0.0f64; dim];
        for p in set.points() {
            for (s, (v, m)) in scale.iter_mut().zip(p.iter().zip(&mean)) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in scale.iter_mut() {
            *s = libm::sqrt(*s);
            if *s == 0.0 {
                *s = 1.0;
            }
        }

        let standardized: Vec<Vec<f64>> = set
            .points()
            .iter()
            .map(|p| {
                p.iter()
                    .zip(mean.iter().zip(&scale))
                    .map(|(v, (m, s))| (v - m) / s)
                    .collect()
            })
            .collect();

        let mut machines = Vec::with_capacity(classes.len());
        if classes.len() > 1 {
            for &class in &classes {
                let mut pos = Vec::new();
                let mut neg = Vec::new();
                for (p, &label) in standardized.iter().zip(set.labels()) {
                    if label == class {
                        pos.push(p.clone());
                    } else {
                        neg.push(p.clone());
                    }
                }
                machines.push(svm_train_binary(&pos, &neg, config)?.svm);
            }
        }

        Ok(OaaSvm { classes, machines, feature_mean: mean, feature_scale: scale, c: config.c })
    }

    /// Reassemble from stored parts (deserialization and tests).
    pub fn from_parts(
        classes: Vec<Label>,
        machines: Vec<BinarySvm>,
        feature_mean: Vec<f64>,
        feature_scale: Vec<f64>,
        c: f64,
    ) -> Result<OaaSvm> {
        if classes.is_empty() {
            return Err(argument_err!("at least one class required"));
        }
        if classes.len() > 1 && machines.len() != classes.len() {
            return Err(dimension_err!(
                "{} machines for {} classes",
                machines.len(),
                classes.len()
            ));
        }
        if feature_mean.len() != feature_scale.len() {
            return Err(dimension_err!("standardization vectors disagree in length"));
        }
        for m in &machines {
            if m.weights.len() != feature_mean.len() {
                return Err(dimension_err!("machine dimension does not match standardizer"));
            }
        }
        Ok(OaaSvm { classes, machines, feature_mean, feature_scale, c })
    }

    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    pub fn machines(&self) -> &[BinarySvm] {
        &self.machines
    }

    pub fn feature_mean(&self) -> &[f64] {
        &self.feature_mean
    }

    pub fn feature_scale(&self) -> &[f64] {
        &self.feature_scale
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn all_converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }

    /// Standardized decision value per class, in class order.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.feature_mean.len() {
            return Err(dimension_err!(
                "query length {} does not match training dimension {}",
                x.len(),
                self.feature_mean.len()
            ));
        }
        let standardized: Vec<f64> = x
            .iter()
            .zip(self.feature_mean.iter().zip(&self.feature_scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        Ok(self.machines.iter().map(|m| m.decision(&standardized)).collect())
    }

    /// Argmax class plus an acceptance flag that is true only when exactly
    /// one machine reports a positive decision value.
    pub fn predict(&self, x: &[f64]) -> Result<(Label, bool)> {
        if self.classes.len() == 1 {
            if x.len() != self.feature_mean.len() {
                return Err(dimension_err!(
                    "query length {} does not match training dimension {}",
                    x.len(),
                    self.feature_mean.len()
                ));
            }
            return Ok((self.classes[0], true));
        }
        let scores = self.decision_values(x)?;
        let mut best = 0usize;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        let positive = scores.iter().filter(|&&s| s > 0.0).count();
        Ok((self.classes[best], positive == 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_problem_reaches_the_analytic_optimum() {
        let cfg = SvmConfig { c: 1000.0, ..SvmConfig::default() };
        let out = svm_train_binary(&[vec![1.0, 0.0]], &[vec![-1.0, 0.0]], &cfg).unwrap();
        assert!(out.svm.converged);
        assert!((out.svm.weights[0] - 1.0).abs() < 1e-6, "w = {:?}", out.svm.weights);
        assert!(out.svm.weights[1].abs() < 1e-9);
        assert!(out.svm.bias.abs() < 1e-6);
        // Optimal objective is 0.5 * ||w||^2 with zero hinge.
        let last = *out.objective_history.last().unwrap();
        assert!((last - 0.5).abs() < 1e-6, "objective {last}");
    }

    #[test]
    fn objective_history_is_monotone_nonincreasing() {
        let pos = vec![vec![1.0, 2.0], vec![2.0, 1.5], vec![1.5, 3.0]];
        let neg = vec![vec![-1.0, -2.0], vec![-2.0, -0.5], vec![-1.5, -1.0]];
        let out = svm_train_binary(&pos, &neg, &SvmConfig::default()).unwrap();
        for pair in out.objective_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }

    #[test]
    fn margin_constraints_hold_on_separable_data_with_large_c() {
        let pos: Vec<Vec<f64>> = (0..8).map(|i| vec![2.0 + (i % 3) as f64 * 0.2, i as f64 * 0.1]).collect();
        let neg: Vec<Vec<f64>> = (0..8).map(|i| vec![-2.0 - (i % 3) as f64 * 0.2, i as f64 * 0.1]).collect();
        let cfg = SvmConfig { c: 1e4, max_epochs: 5000, ..SvmConfig::default() };
        let out = svm_train_binary(&pos, &neg, &cfg).unwrap();
        for p in &pos {
            assert!(out.svm.decision(p) >= 1.0 - 1e-3, "violated at {p:?}: {}", out.svm.decision(p));
        }
        for n in &neg {
            assert!(-out.svm.decision(n) >= 1.0 - 1e-3, "violated at {n:?}: {}", out.svm.decision(n));
        }
    }

    #[test]
    fn epoch_cap_reports_non_convergence() {
        let pos = vec![vec![1.0, 0.3], vec![0.5, 1.0], vec![0.9, 0.8]];
        let neg = vec![vec![-1.0, -0.3], vec![-0.5, -1.2], vec![0.8, 0.7]];
        let cfg = SvmConfig { c: 100.0, max_epochs: 1, tol: 1e-12 };
        let out = svm_train_binary(&pos, &neg, &cfg).unwrap();
        assert!(!out.svm.converged);
        assert_eq!(out.epochs, 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(svm_train_binary(&[], &[vec![1.0]], &SvmConfig::default()).is_err());
        assert!(svm_train_binary(&[vec![1.0]], &[], &SvmConfig::default()).is_err());
        assert!(svm_train_binary(&[vec![1.0, 2.0]], &[vec![1.0]], &SvmConfig::default()).is_err());
        assert!(
            svm_train_binary(&[vec![f64::INFINITY]], &[vec![0.0]], &SvmConfig::default()).is_err()
        );
        let bad_c = SvmConfig { c: 0.0, ..SvmConfig::default() };
        assert!(svm_train_binary(&[vec![1.0]], &[vec![-1.0]], &bad_c).is_err());
    }

    #[test]
    fn single_class_model_always_answers_that_class() {
        let set = LabeledSet::new(vec![vec![1.0, 2.0], vec![1.5, 2.5]], vec![9, 9]).unwrap();
        let model = OaaSvm::train(&set, &SvmConfig::default()).unwrap();
        assert_eq!(model.predict(&[100.0, -3.0]).unwrap(), (9, true));
        assert!(model.predict(&[1.0]).is_err());
    }

    #[test]
    fn unanimity_flag_drops_when_two_machines_fire() {
        // Hand-built model: both hyperplanes positive at the query.
        let model = OaaSvm::from_parts(
            vec![1, 2],
            vec![
                BinarySvm { weights: vec![1.0], bias: 0.5, converged: true },
                BinarySvm { weights: vec![0.5], bias: 0.6, converged: true },
            ],
            vec![0.0],
            vec![1.0],
            1.0,
        )
        .unwrap();
        let (label, accepted) = model.predict(&[1.0]).unwrap();
        assert_eq!(label, 1);
        assert!(!accepted);
    }

    #[test]
    fn separated_clusters_classify_cleanly() {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let centers = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)];
        for (ci, &(cx, cy)) in centers.iter().enumerate() {
            for j in 0..6 {
                let dx = (j as f64 * 0.37).sin() * 0.5;
                let dy = (j as f64 * 0.83).cos() * 0.5;
                points.push(vec![cx + dx, cy + dy]);
                labels.push(ci);
            }
        }
        let set = LabeledSet::new(points.clone(), labels.clone()).unwrap();
        let model = OaaSvm::train(&set, &SvmConfig::default()).unwrap();
        for (p, &l) in points.iter().zip(&labels) {
            let (pred, _) = model.predict(p).unwrap();
            assert_eq!(pred, l);
        }
        let (pred, accepted) = model.predict(&[10.0, 0.0]).unwrap();
        assert_eq!(pred, 1);
        assert!(accepted);
    }
}
