//! Walk through the ranking MDP: sample one random-policy episode, then
//! fill a replay buffer and dump it as CSV.
//!
//! ```bash
//! cargo run -p deepqrank --example sample_episodes
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use deepqrank::letor::generate_synthetic;
use deepqrank::mdp::{fill_buffer, sample_episode, RewardParams};

fn main() -> deepqrank::Result<()> {
    let dataset = generate_synthetic(3, 4, 0.0, 21)?;
    let params = RewardParams::default();

    let group = &dataset.groups()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    println!("one episode over query {} ({} documents):", group.query_id(), group.len());
    for tr in sample_episode(group, &params, &mut rng) {
        let label = group.document(tr.action.doc_index).unwrap().rank_label;
        println!(
            "  t={} pick doc {} (label {}) -> reward {:.4}, {} remaining",
            tr.state.t(),
            tr.action.doc_index,
            label,
            tr.reward,
            tr.next_state.remaining().len()
        );
    }

    let buffer = fill_buffer(&dataset, 5, &params, &mut rng)?;
    println!("\nbuffer filled with 5 episodes = {} transitions", buffer.len());
    println!("CSV dump:");
    let mut csv = Vec::new();
    buffer.dump_csv(&mut csv).expect("vec write");
    for line in String::from_utf8(csv).unwrap().lines().take(6) {
        println!("  {line}");
    }
    println!("  ...");
    Ok(())
}
