use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_training_input, single_class_diagnostic, ModelBody, TrainedModel};
use crate::corpus::N_CLASSES;
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::rng::rng;

const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub l2_penalty: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams { l2_penalty: 1e-4, epochs: 30, learning_rate: 1.0, batch_size: 32, seed: 0 }
    }
}

fn logits(weights: &[f64], bias: &[f64], dims: usize, x: &SparseVector) -> Vec<f64> {
    bias.iter()
        .enumerate()
        .map(|(k, b)| b + x.iter().map(|(j, v)| weights[k * dims + j] * v).sum::<f64>())
        .collect()
}

fn softmax(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

pub(super) fn probabilities(weights: &[f64], bias: &[f64], dims: usize, x: &SparseVector) -> Vec<f64> {
    let mut z = logits(weights, bias, dims, x);
    softmax(&mut z);
    z
}

/// Mean cross-entropy plus `l2/2 * ||W||^2` (bias unpenalized) and its
/// gradient with respect to `(weights, bias)`.
pub fn softmax_loss_and_grad(
    x: &[SparseVector],
    y: &[usize],
    n_classes: usize,
    weights: &[f64],
    bias: &[f64],
    l2: f64,
) -> (f64, Vec<f64>, Vec<f64>) {
    let dims = weights.len() / n_classes;
    let n = x.len() as f64;
    let mut gw: Vec<f64> = weights.iter().map(|w| l2 * w).collect();
    let mut gb = vec![0.0; n_classes];
    let mut loss = 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    for (xi, &yi) in x.iter().zip(y) {
        let p = probabilities(weights, bias, dims, xi);
        loss -= p[yi].max(f64::MIN_POSITIVE).ln() / n;
        for k in 0..n_classes {
            let g = (p[k] - if k == yi { 1.0 } else { 0.0 }) / n;
            gb[k] += g;
            for (j, v) in xi.iter() {
                gw[k * dims + j] += g * v;
            }
        }
    }
    (loss, gw, gb)
}

fn full_loss(x: &[SparseVector], y: &[usize], w: &[f64], b: &[f64], dims: usize, l2: f64) -> f64 {
    let ce: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| -probabilities(w, b, dims, xi)[yi].max(f64::MIN_POSITIVE).ln())
        .sum();
    ce / x.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Fits multinomial logistic regression by mini-batch gradient descent.
///
/// An epoch that raises the training loss is undone and retried at half the
/// learning rate, so the returned loss trace is non-increasing.
pub fn train_logreg(x: &[SparseVector], y: &[usize], params: &LogRegParams) -> Result<(TrainedModel, Vec<f64>)> {
    let dims = check_training_input(x, y)?;
    if params.learning_rate.is_nan() || params.learning_rate <= 0.0 || params.batch_size == 0 || params.l2_penalty < 0.0 {
        return Err(Error::Config(format!("invalid logistic-regression parameters {params:?}")));
    }
    let k = N_CLASSES;
    let mut w = vec![0.0; k * dims];
    let mut b = vec![0.0; k];
    let mut lr = params.learning_rate;
    let mut r = rng(params.seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut prev = full_loss(x, y, &w, &b, dims, params.l2_penalty);
    let mut losses = vec![prev];
    let mut diagnostics: Vec<String> = single_class_diagnostic(y).into_iter().collect();
    let mut halvings = 0;

    let mut epoch = 0;
    while epoch < params.epochs {
        let (w0, b0) = (w.clone(), b.clone());
        order.shuffle(&mut r);
        for batch in order.chunks(params.batch_size) {
            let bx: Vec<SparseVector> = batch.iter().map(|&i| x[i].clone()).collect();
            let by: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let (_, gw, gb) = softmax_loss_and_grad(&bx, &by, k, &w, &b, params.l2_penalty);
            w.iter_mut().zip(&gw).for_each(|(v, g)| *v -= lr * g);
            b.iter_mut().zip(&gb).for_each(|(v, g)| *v -= lr * g);
        }
        let loss = full_loss(x, y, &w, &b, dims, params.l2_penalty);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, learning_rate: lr });
        }
        if loss > prev + 1e-12 {
            w = w0;
            b = b0;
            lr /= 2.0;
            halvings += 1;
            if halvings > MAX_HALVINGS {
                diagnostics.push(format!("stopped at epoch {epoch}: loss kept rising down to learning rate {lr:e}"));
                break;
            }
            continue;
        }
        prev = loss;
        losses.push(loss);
        epoch += 1;
    }
    let model = TrainedModel {
        n_classes: k,
        dims,
        body: ModelBody::LogisticRegression { params: *params, weights: w, bias: b },
        diagnostics,
    };
    Ok((model, losses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::tests::separable;

    #[test]
    fn zero_epochs_is_uniform() {
        let (x, y) = separable();
        let (m, _) = train_logreg(&x, &y, &LogRegParams { epochs: 0, ..Default::default() }).unwrap();
        for p in m.predict_proba(&x[0]).unwrap() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn separable_fit_with_monotone_loss() {
        let (x, y) = separable();
        let (m, losses) = train_logreg(&x, &y, &LogRegParams { epochs: 200, l2_penalty: 0.0, ..Default::default() }).unwrap();
        assert_eq!(m.predict_batch(&x).unwrap(), y);
        assert!(losses.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn huge_learning_rate_reports_or_recovers() {
        let (x, y) = separable();
        let p = LogRegParams { learning_rate: 1e300, epochs: 3, ..Default::default() };
        match train_logreg(&x, &y, &p) {
            Ok((_, losses)) => assert!(losses.windows(2).all(|w| w[1] <= w[0] + 1e-12)),
            Err(Error::NonFiniteLoss { learning_rate, .. }) => assert!(learning_rate > 0.0),
            Err(e) => panic!("{e}"),
        }
    }
}
