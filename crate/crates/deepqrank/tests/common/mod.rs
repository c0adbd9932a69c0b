//! Helpers shared by the integration suites: independent brute-force metric
//! oracles and hand-built scoring networks.

#![allow(dead_code)]

use deepqrank::letor::FEATURE_DIM;
use deepqrank::metrics::GainMode;
use deepqrank::neural::QNetwork;

/// Independent DCG: straight summation from the formula, no shared code
/// with the library implementation.
pub fn oracle_dcg(labels: &[u32], k: usize, mode: GainMode) -> f64 {
    let mut acc = 0.0;
    for (i, &rel) in labels.iter().enumerate() {
        if i + 1 > k {
            break;
        }
        let gain = match mode {
            GainMode::Linear => rel as f64,
            GainMode::Exponential => 2f64.powi(rel as i32) - 1.0,
        };
        acc += gain / ((i + 2) as f64).log2();
    }
    acc
}

/// Independent NDCG: the ideal value is found by enumerating *all*
/// permutations rather than sorting.
pub fn oracle_ndcg(labels: &[u32], k: usize, mode: GainMode) -> f64 {
    let mut best = 0.0f64;
    for perm in permutations(labels) {
        best = best.max(oracle_dcg(&perm, k, mode));
    }
    if best == 0.0 {
        0.0
    } else {
        oracle_dcg(labels, k, mode) / best
    }
}

/// All permutations of a slice (n! of them; keep n small).
pub fn permutations(items: &[u32]) -> Vec<Vec<u32>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// A network that outputs `w . x` for non-negative feature vectors: the
/// hidden chain is a single pass-through unit, timestep weight zero.
pub fn linear_scorer(w: &[f64; FEATURE_DIM]) -> QNetwork {
    let mut net = QNetwork::zeros();
    for (c, &wi) in w.iter().enumerate() {
        net.layer_mut(0).set_weight(0, c, wi);
    }
    net.layer_mut(1).set_weight(0, 0, 1.0);
    net.layer_mut(2).set_weight(0, 0, 1.0);
    net
}

/// A network with the same constant output for every input.
pub fn constant_scorer(value: f64) -> QNetwork {
    let mut net = QNetwork::zeros();
    net.layer_mut(2).set_bias(0, value);
    net
}
