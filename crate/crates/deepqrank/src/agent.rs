//! The ranking agent: minibatch Q-learning over a pre-filled replay buffer
//! with per-step Polyak target averaging, and the greedy inference policy
//! that builds a ranking by repeatedly taking the argmax-Q document.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::letor::{Dataset, QueryGroup};
use crate::mdp::{fill_buffer, RankAction, RankingState, RewardParams, Transition};
use crate::metrics::{mean_ndcg_at_1, GainMode};
use crate::model_file::fmt_sig17;
use crate::neural::{init_network, GradientSet, QInput, QNetwork, TargetPair};
use crate::substream_seed;

/// All training hyperparameters. Defaults are the published DeepQRank
/// settings: learning rate 3e-4, discount 0.99, Polyak factor 0.999,
/// batch 32.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Number of gradient steps.
    pub steps: usize,
    pub batch_size: usize,
    /// SGD learning rate applied to the summed minibatch gradient.
    pub alpha: f64,
    /// Discount on the bootstrapped next-state value.
    pub gamma: f64,
    /// Polyak averaging factor for the target network.
    pub tau: f64,
    /// Episodes sampled into the replay buffer before the loop starts.
    pub buffer_episodes: usize,
    pub seed: u64,
    /// Steps between validation NDCG@1 evaluations.
    pub eval_every: usize,
    /// Window of the moving-average log10 loss column.
    pub loss_window: usize,
    /// Reward log offset; see [`RewardParams`].
    pub position_offset: u32,
    /// Gain used for the validation NDCG column.
    pub gain_mode: GainMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 2000,
            batch_size: 32,
            alpha: 3e-4,
            gamma: 0.99,
            tau: 0.999,
            buffer_episodes: 100,
            seed: 0,
            eval_every: 100,
            loss_window: 10,
            position_offset: 2,
            gain_mode: GainMode::Exponential,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::InvalidArgument("steps must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument("alpha must be > 0".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidArgument("gamma must lie in (0, 1]".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidArgument("tau must lie in (0, 1)".into()));
        }
        if self.buffer_episodes < 1 {
            return Err(Error::InvalidArgument("buffer_episodes must be >= 1".into()));
        }
        if self.eval_every < 1 {
            return Err(Error::InvalidArgument("eval_every must be >= 1".into()));
        }
        if self.loss_window < 1 {
            return Err(Error::InvalidArgument("loss_window must be >= 1".into()));
        }
        RewardParams::new(self.position_offset).map(|_| ())
    }
}

/// Per-step loss records and per-evaluation validation records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub losses: Vec<LossRecord>,
    pub evals: Vec<EvalRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub step: usize,
    pub mse: f64,
    pub log10_mse_moving_avg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub step: usize,
    pub mean_ndcg_at_1: f64,
}

impl TrainTrace {
    /// `loss.csv`: step, minibatch MSE, moving-average log10 MSE.
    pub fn write_loss_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "step,mse,log10_mse_moving_avg")?;
        for r in &self.losses {
            writeln!(
                out,
                "{},{},{}",
                r.step,
                fmt_sig17(r.mse),
                fmt_sig17(r.log10_mse_moving_avg)
            )?;
        }
        Ok(())
    }

    /// `ndcg.csv`: step, mean validation NDCG@1.
    pub fn write_ndcg_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "step,mean_ndcg_at_1")?;
        for r in &self.evals {
            writeln!(out, "{},{}", r.step, fmt_sig17(r.mean_ndcg_at_1))?;
        }
        Ok(())
    }
}

/// Everything a training run produces. `model` is the target network (the
/// production artifact); the online network is kept for analysis.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: QNetwork,
    pub online: QNetwork,
    pub trace: TrainTrace,
}

/// Encodes the Q-network input for taking `action` in `state` and returns
/// the network's value estimate. Features are resolved through the dataset.
pub fn q_value(
    net: &QNetwork,
    dataset: &Dataset,
    state: &RankingState,
    action: RankAction,
) -> Result<f64> {
    if !state.remaining().contains(&action.doc_index) {
        return Err(Error::ActionNotAvailable {
            doc_index: action.doc_index,
        });
    }
    let doc = dataset.document(action.doc_index).ok_or_else(|| {
        Error::InvalidArgument(format!("doc_index {} not in dataset", action.doc_index))
    })?;
    let input = QInput::encode(&doc.features, state.t(), state.group_size())?;
    Ok(net.forward(&input))
}

/// The Bellman target `y = r + gamma * max_a' Q_target(s', a')`, collapsing
/// to `y = r` on terminal next states.
pub fn compute_target(
    pair: &TargetPair,
    dataset: &Dataset,
    transition: &Transition,
    gamma: f64,
) -> Result<f64> {
    if transition.next_state.is_terminal() {
        return Ok(transition.reward);
    }
    let mut best = f64::NEG_INFINITY;
    for &doc_index in transition.next_state.remaining() {
        let q = q_value(
            &pair.target,
            dataset,
            &transition.next_state,
            RankAction { doc_index },
        )?;
        if q > best {
            best = q;
        }
    }
    Ok(transition.reward + gamma * best)
}

/// Trains the agent: fills the buffer with random-policy episodes from the
/// training split, then runs `cfg.steps` iterations of minibatch target
/// regression with a summed-gradient SGD step and a Polyak target update,
/// evaluating validation NDCG@1 with the target network every
/// `cfg.eval_every` steps. Fully deterministic per `cfg.seed`.
pub fn train(train_ds: &Dataset, valid_ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_ds.is_empty() || valid_ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let params = RewardParams::new(cfg.position_offset)?;

    let online = init_network(substream_seed(cfg.seed, "init"));
    let mut pair = TargetPair::new(online, cfg.tau)?;

    let mut fill_rng = ChaCha8Rng::seed_from_u64(substream_seed(cfg.seed, "buffer"));
    let mut buffer = fill_buffer(train_ds, cfg.buffer_episodes, &params, &mut fill_rng)?;
    buffer.reseed_sampling(substream_seed(cfg.seed, "minibatch"));
    log::info!(
        "buffer holds {} transitions from {} episodes",
        buffer.len(),
        cfg.buffer_episodes
    );

    let mut trace = TrainTrace::default();
    let mut log_losses: Vec<f64> = Vec::with_capacity(cfg.steps);

    for step in 1..=cfg.steps {
        let batch = buffer.sample_minibatch(cfg.batch_size)?;

        let mut grad_sum = GradientSet::zeros_like(&pair.online);
        let mut squared_error_sum = 0.0;
        for transition in &batch {
            let y = compute_target(&pair, train_ds, transition, cfg.gamma)?;
            let doc = train_ds
                .document(transition.action.doc_index)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "doc_index {} not in dataset",
                        transition.action.doc_index
                    ))
                })?;
            let input = QInput::encode(
                &doc.features,
                transition.state.t(),
                transition.state.group_size(),
            )?;
            let (loss, grads) = pair.online.backward(&input, y);
            grad_sum.add(&grads)?;
            squared_error_sum += loss;
        }
        pair.online.apply_sgd(&grad_sum, cfg.alpha)?;
        pair.polyak_update();

        let mse = squared_error_sum / batch.len() as f64;
        log_losses.push(mse.max(1e-300).log10());
        let start = log_losses.len().saturating_sub(cfg.loss_window);
        let span = &log_losses[start..];
        let moving = span.iter().sum::<f64>() / span.len() as f64;
        trace.losses.push(LossRecord {
            step,
            mse,
            log10_mse_moving_avg: moving,
        });

        if step % cfg.eval_every == 0 {
            let ndcg = mean_ndcg_at_1(&pair.target, valid_ds, cfg.gain_mode)?;
            log::info!("step {step}: mse {mse:.4}, validation NDCG@1 {ndcg:.4}");
            trace.evals.push(EvalRecord {
                step,
                mean_ndcg_at_1: ndcg,
            });
        }
    }

    Ok(TrainOutcome {
        model: pair.target,
        online: pair.online,
        trace,
    })
}

/// Greedy ranking: at each timestep, run the network on every remaining
/// document and append the one with the highest value, breaking ties toward
/// the lowest `doc_index`. Performs exactly `n + (n-1) + ... + 1` forward
/// passes for an `n`-document group, which is what makes inference
/// quadratic in the group size.
pub fn get_ranking(net: &QNetwork, group: &QueryGroup) -> Vec<usize> {
    let n = group.len();
    let mut remaining: Vec<&crate::letor::DocumentRecord> = group.documents().iter().collect();
    remaining.sort_by_key(|d| d.doc_index);
    let mut ranked = Vec::with_capacity(n);
    for t in 0..n {
        let mut best_slot = 0;
        let mut best_q = f64::NEG_INFINITY;
        for (slot, doc) in remaining.iter().enumerate() {
            let input = QInput::encode(&doc.features, t, n)
                .expect("group documents have finite features and t < n");
            let q = net.forward(&input);
            if q > best_q {
                best_q = q;
                best_slot = slot;
            }
        }
        ranked.push(remaining.remove(best_slot).doc_index);
    }
    ranked
}
