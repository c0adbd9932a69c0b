//! The ranking MDP: states over partially built rankings, document-selection
//! actions, a DCG-style per-step reward, random-policy episode sampling, and
//! the replay buffer consumed by training.
//!
//! States carry document identities (`doc_index`), not feature copies;
//! features are resolved through the [`Dataset`](crate::letor::Dataset).

use std::collections::BTreeSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::letor::{Dataset, QueryGroup};

/// Reward shape parameters. `position_offset` is the constant added to the
/// state timestep inside the log; the default 2 makes the first selection
/// DCG position 1 (denominator `log2(2) = 1`) and keeps every denominator
/// positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParams {
    position_offset: u32,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams { position_offset: 2 }
    }
}

impl RewardParams {
    pub fn new(position_offset: u32) -> Result<Self> {
        if position_offset < 2 {
            return Err(Error::InvalidArgument(
                "position_offset must be >= 2 so log2(t + offset) > 0 for all t >= 0".into(),
            ));
        }
        Ok(RewardParams { position_offset })
    }

    pub fn position_offset(&self) -> u32 {
        self.position_offset
    }
}

/// Per-step reward: `rank_value / log2(t + position_offset)`.
///
/// Strictly increasing in `rank_value` and strictly decreasing in `t`, so
/// picking strong documents late is penalized. A zero label (graded-relevance
/// datasets) yields zero reward.
pub fn reward(rank_value: u32, t: usize, params: &RewardParams) -> f64 {
    f64::from(rank_value) / (t as f64 + f64::from(params.position_offset)).log2()
}

/// An MDP state: `t` documents ranked so far, the rest still to place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingState {
    t: usize,
    ranked: Vec<usize>,
    remaining: BTreeSet<usize>,
    query_id: String,
}

impl RankingState {
    /// The initial state for a query group: nothing ranked, everything
    /// remaining, `t = 0`.
    pub fn initial(group: &QueryGroup) -> Self {
        RankingState {
            t: 0,
            ranked: Vec::new(),
            remaining: group.documents().iter().map(|d| d.doc_index).collect(),
            query_id: group.query_id().to_string(),
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Documents ranked so far, in selection order.
    pub fn ranked(&self) -> &[usize] {
        &self.ranked
    }

    /// Documents still unranked, ascending by `doc_index`.
    pub fn remaining(&self) -> &BTreeSet<usize> {
        &self.remaining
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn is_terminal(&self) -> bool {
        self.remaining.is_empty()
    }

    pub fn is_initial(&self) -> bool {
        self.t == 0 && self.ranked.is_empty()
    }

    /// Total documents in the episode this state belongs to.
    pub fn group_size(&self) -> usize {
        self.t + self.remaining.len()
    }

    /// Moves the selected document from the remaining set to the end of the
    /// ranked list and advances the timestep. The original state is
    /// untouched.
    pub fn apply_action(&self, action: RankAction) -> Result<RankingState> {
        if !self.remaining.contains(&action.doc_index) {
            return Err(Error::ActionNotAvailable {
                doc_index: action.doc_index,
            });
        }
        let mut next = self.clone();
        next.remaining.remove(&action.doc_index);
        next.ranked.push(action.doc_index);
        next.t += 1;
        Ok(next)
    }
}

/// Selection of one document from the remaining set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankAction {
    pub doc_index: usize,
}

/// One `(s, a, s', r)` tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: RankingState,
    pub action: RankAction,
    pub next_state: RankingState,
    pub reward: f64,
}

/// Samples one complete episode for a query under the uniform random policy:
/// documents are popped from the remaining pool without replacement until it
/// is empty, yielding exactly `group.len()` transitions. The reward of the
/// i-th transition uses the pre-action timestep `i`.
pub fn sample_episode(
    group: &QueryGroup,
    params: &RewardParams,
    rng: &mut impl Rng,
) -> Vec<Transition> {
    let mut pool: Vec<&crate::letor::DocumentRecord> = group.documents().iter().collect();
    let mut state = RankingState::initial(group);
    let mut episode = Vec::with_capacity(group.len());
    while !pool.is_empty() {
        let pick = rng.gen_range(0..pool.len());
        let doc = pool.swap_remove(pick);
        let action = RankAction {
            doc_index: doc.doc_index,
        };
        let next_state = state
            .apply_action(action)
            .expect("pool documents are always in the remaining set");
        let r = reward(doc.rank_label, state.t(), params);
        episode.push(Transition {
            state,
            action,
            next_state: next_state.clone(),
            reward: r,
        });
        state = next_state;
    }
    episode
}

/// Experience store for minibatch Q-learning. Unbounded; sampling is uniform
/// with replacement over everything stored. The buffer owns its sampling RNG
/// so repeated draws are reproducible from one seed.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    transitions: Vec<Transition>,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(transitions: Vec<Transition>, sample_seed: u64) -> Self {
        ReplayBuffer {
            transitions,
            rng: ChaCha8Rng::seed_from_u64(sample_seed),
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Restarts the sampling stream. The trainer uses this to give minibatch
    /// draws their own named seed sub-stream.
    pub fn reseed_sampling(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    /// Uniform sample of `size` transitions, with replacement.
    pub fn sample_minibatch(&mut self, size: usize) -> Result<Vec<Transition>> {
        if self.transitions.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        if size < 1 {
            return Err(Error::InvalidArgument("minibatch size must be >= 1".into()));
        }
        Ok((0..size)
            .map(|_| self.transitions[self.rng.gen_range(0..self.transitions.len())].clone())
            .collect())
    }

    /// Debug dump: one CSV row per transition, in storage order.
    pub fn dump_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "query_id,t,action_doc_index,reward")?;
        for tr in &self.transitions {
            writeln!(
                out,
                "{},{},{},{:.16e}",
                tr.state.query_id(),
                tr.state.t(),
                tr.action.doc_index,
                tr.reward
            )?;
        }
        Ok(())
    }
}

/// Fills a replay buffer with `episodes` random-policy episodes, each from a
/// uniformly chosen query of `dataset`. The buffer's minibatch-sampling
/// stream is derived from the tail of `rng` unless reseeded afterwards.
pub fn fill_buffer(
    dataset: &Dataset,
    episodes: usize,
    params: &RewardParams,
    rng: &mut ChaCha8Rng,
) -> Result<ReplayBuffer> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if episodes < 1 {
        return Err(Error::InvalidArgument("episodes must be >= 1".into()));
    }
    let mut transitions = Vec::new();
    for _ in 0..episodes {
        let group = &dataset.groups()[rng.gen_range(0..dataset.num_queries())];
        transitions.extend(sample_episode(group, params, rng));
    }
    let sample_seed = rng.gen::<u64>();
    Ok(ReplayBuffer::new(transitions, sample_seed))
}
