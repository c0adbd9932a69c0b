//! Rank one query group with a trained agent and show the greedy selection
//! order next to the true labels, including the quadratic forward-pass cost
//! of inference.
//!
//! ```bash
//! cargo run --release -p deepqrank --example rank_documents
//! ```

use deepqrank::agent::{get_ranking, train, TrainConfig};
use deepqrank::letor::{generate_synthetic, split_dataset};
use deepqrank::metrics::GainMode;
use deepqrank::neural::{forward_pass_count, reset_forward_pass_count};
use deepqrank::substream_seed;

fn main() -> deepqrank::Result<()> {
    let seed = 7;
    let dataset = generate_synthetic(30, 10, 0.05, seed)?;
    let (train_ds, valid_ds, _test) =
        split_dataset(&dataset, (0.7, 0.15, 0.15), substream_seed(seed, "split"))?;

    let cfg = TrainConfig {
        steps: 4000,
        buffer_episodes: 150,
        seed,
        eval_every: 1000,
        gain_mode: GainMode::Linear,
        ..TrainConfig::default()
    };
    let outcome = train(&train_ds, &valid_ds, &cfg)?;

    let group = &valid_ds.groups()[0];
    reset_forward_pass_count();
    let ranking = get_ranking(&outcome.model, group);
    let passes = forward_pass_count();

    println!(
        "query {} ({} documents) ranked with {passes} forward passes (= n(n+1)/2):\n",
        group.query_id(),
        group.len()
    );
    println!("position  doc_index  true label");
    for (pos, doc_index) in ranking.iter().enumerate() {
        let label = group.document(*doc_index).unwrap().rank_label;
        println!("{:>8}  {:>9}  {:>10}", pos + 1, doc_index, label);
    }
    println!("\n(a perfect agent lists labels in descending order)");
    Ok(())
}
