//! Ranking-quality metrics (DCG@k, NDCG@k and dataset-level means) plus the
//! moving-average log10 loss series used for training diagnostics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::agent::get_ranking;
use crate::error::{Error, Result};
use crate::letor::Dataset;
use crate::model_file::fmt_sig17;
use crate::neural::QNetwork;

/// Gain applied to a relevance label inside DCG.
///
/// `Exponential` is the classic `2^rel - 1`; it overflows loudly for labels
/// above 62, which listwise rank labels easily exceed, so `Linear` (`rel`)
/// is provided for fully-ranked data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    Exponential,
    Linear,
}

impl GainMode {
    fn gain(self, rel: u32) -> Result<f64> {
        match self {
            GainMode::Linear => Ok(f64::from(rel)),
            GainMode::Exponential => {
                if rel > 62 {
                    Err(Error::GainOverflow(rel))
                } else {
                    Ok((1u64 << rel) as f64 - 1.0)
                }
            }
        }
    }
}

impl fmt::Display for GainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GainMode::Exponential => write!(f, "exp"),
            GainMode::Linear => write!(f, "linear"),
        }
    }
}

impl FromStr for GainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(GainMode::Exponential),
            "linear" => Ok(GainMode::Linear),
            other => Err(Error::InvalidArgument(format!(
                "unknown gain mode `{other}` (expected exp or linear)"
            ))),
        }
    }
}

/// Discounted cumulative gain at cutoff `k` over labels listed in ranked
/// order: `sum_{i=1..min(k,n)} gain(rel_i) / log2(i + 1)`.
pub fn dcg_at_k(labels: &[u32], k: usize, mode: GainMode) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let mut acc = 0.0;
    for (i, &rel) in labels.iter().take(k).enumerate() {
        acc += mode.gain(rel)? / ((i + 2) as f64).log2();
    }
    Ok(acc)
}

/// Normalized DCG at cutoff `k`: DCG divided by the DCG of the labels sorted
/// descending. All-zero labels yield 0 by convention. Always in `[0, 1]`.
pub fn ndcg_at_k(labels: &[u32], k: usize, mode: GainMode) -> Result<f64> {
    let dcg = dcg_at_k(labels, k, mode)?;
    let mut ideal: Vec<u32> = labels.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg_at_k(&ideal, k, mode)?;
    if idcg == 0.0 {
        Ok(0.0)
    } else {
        Ok(dcg / idcg)
    }
}

/// Labels of a group's documents in the order the network ranks them.
fn ranked_labels(net: &QNetwork, group: &crate::letor::QueryGroup) -> Vec<u32> {
    get_ranking(net, group)
        .into_iter()
        .map(|doc_index| {
            group
                .document(doc_index)
                .expect("get_ranking returns members of the group")
                .rank_label
        })
        .collect()
}

/// Mean NDCG@1 over every query of a dataset, ranking each group greedily
/// with the given network.
pub fn mean_ndcg_at_1(net: &QNetwork, dataset: &Dataset, mode: GainMode) -> Result<f64> {
    mean_ndcg_at_k(net, dataset, 1, mode)
}

/// Mean NDCG@k over every query of a dataset. Rankings for distinct queries
/// run in parallel (the model is only read); the mean is reduced in query
/// order, so results stay bit-deterministic.
pub fn mean_ndcg_at_k(net: &QNetwork, dataset: &Dataset, k: usize, mode: GainMode) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let per_group: Vec<Vec<u32>> = dataset
        .groups()
        .par_iter()
        .map(|group| ranked_labels(net, group))
        .collect();
    let mut acc = 0.0;
    for labels in &per_group {
        acc += ndcg_at_k(labels, k, mode)?;
    }
    Ok(acc / dataset.num_queries() as f64)
}

/// Moving average over `log10` of a positive series. Element `i` averages
/// the trailing `min(i+1, window)` entries. Zeros are clamped to 1e-300
/// before the log.
pub fn moving_avg_log10(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be >= 1");
    let logs: Vec<f64> = series.iter().map(|&v| v.max(1e-300).log10()).collect();
    logs.iter()
        .enumerate()
        .map(|(i, _)| {
            let start = (i + 1).saturating_sub(window);
            let span = &logs[start..=i];
            span.iter().sum::<f64>() / span.len() as f64
        })
        .collect()
}

/// Per-query evaluation over a dataset: NDCG at cutoffs 1, 5, 10.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub rows: Vec<QueryEval>,
    pub mean_ndcg_at_1: f64,
    pub mean_ndcg_at_5: f64,
    pub mean_ndcg_at_10: f64,
    pub gain_mode: GainMode,
}

#[derive(Debug, Clone)]
pub struct QueryEval {
    pub query_id: String,
    pub n_docs: usize,
    pub ndcg_at_1: f64,
    pub ndcg_at_5: f64,
    pub ndcg_at_10: f64,
}

/// Ranks every query with the network and collects the NDCG report. Queries
/// are ranked in parallel; rows keep dataset order.
pub fn evaluate_dataset(net: &QNetwork, dataset: &Dataset, mode: GainMode) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let per_group: Vec<Vec<u32>> = dataset
        .groups()
        .par_iter()
        .map(|group| ranked_labels(net, group))
        .collect();
    let mut rows = Vec::with_capacity(dataset.num_queries());
    for (group, labels) in dataset.groups().iter().zip(&per_group) {
        rows.push(QueryEval {
            query_id: group.query_id().to_string(),
            n_docs: group.len(),
            ndcg_at_1: ndcg_at_k(labels, 1, mode)?,
            ndcg_at_5: ndcg_at_k(labels, 5, mode)?,
            ndcg_at_10: ndcg_at_k(labels, 10, mode)?,
        });
    }
    let n = rows.len() as f64;
    Ok(EvalReport {
        mean_ndcg_at_1: rows.iter().map(|r| r.ndcg_at_1).sum::<f64>() / n,
        mean_ndcg_at_5: rows.iter().map(|r| r.ndcg_at_5).sum::<f64>() / n,
        mean_ndcg_at_10: rows.iter().map(|r| r.ndcg_at_10).sum::<f64>() / n,
        gain_mode: mode,
        rows,
    })
}

impl EvalReport {
    /// One CSV row per query plus a MEAN summary row.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "query_id,n_docs,ndcg_at_1,ndcg_at_5,ndcg_at_10")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                row.query_id,
                row.n_docs,
                fmt_sig17(row.ndcg_at_1),
                fmt_sig17(row.ndcg_at_5),
                fmt_sig17(row.ndcg_at_10)
            )?;
        }
        let total_docs: usize = self.rows.iter().map(|r| r.n_docs).sum();
        writeln!(
            out,
            "MEAN,{},{},{},{}",
            total_docs,
            fmt_sig17(self.mean_ndcg_at_1),
            fmt_sig17(self.mean_ndcg_at_5),
            fmt_sig17(self.mean_ndcg_at_10)
        )?;
        Ok(())
    }
}
