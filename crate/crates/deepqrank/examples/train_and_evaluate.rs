//! The full pipeline in memory: synthesize a listwise dataset, split it by
//! query, train the agent with the published hyperparameters, and report
//! NDCG on the held-out test split against a random-ranking baseline.
//!
//! ```bash
//! cargo run --release -p deepqrank --example train_and_evaluate
//! ```

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use deepqrank::agent::{train, TrainConfig};
use deepqrank::letor::{generate_synthetic, split_dataset, Dataset};
use deepqrank::metrics::{evaluate_dataset, ndcg_at_k, GainMode};
use deepqrank::substream_seed;

fn random_baseline(ds: &Dataset, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..trials {
        for group in ds.groups() {
            let mut labels: Vec<u32> = group.documents().iter().map(|d| d.rank_label).collect();
            labels.shuffle(&mut rng);
            acc += ndcg_at_k(&labels, 1, GainMode::Linear).unwrap();
        }
    }
    acc / (trials * ds.num_queries()) as f64
}

fn main() -> deepqrank::Result<()> {
    let seed = 7;
    let dataset = generate_synthetic(50, 20, 0.1, seed)?;
    let (train_ds, valid_ds, test_ds) =
        split_dataset(&dataset, (0.6, 0.2, 0.2), substream_seed(seed, "split"))?;
    println!(
        "queries: {} train / {} valid / {} test",
        train_ds.num_queries(),
        valid_ds.num_queries(),
        test_ds.num_queries()
    );

    let cfg = TrainConfig {
        steps: 2000,
        buffer_episodes: 200,
        seed,
        eval_every: 400,
        gain_mode: GainMode::Linear,
        ..TrainConfig::default()
    };
    let outcome = train(&train_ds, &valid_ds, &cfg)?;

    println!("\nvalidation NDCG@1 during training:");
    for record in &outcome.trace.evals {
        println!("  step {:>4}: {:.4}", record.step, record.mean_ndcg_at_1);
    }

    let report = evaluate_dataset(&outcome.model, &test_ds, GainMode::Linear)?;
    let baseline = random_baseline(&test_ds, 100, substream_seed(seed, "baseline"));
    println!("\nheld-out test split:");
    println!("  mean NDCG@1  {:.4} (random baseline {:.4})", report.mean_ndcg_at_1, baseline);
    println!("  mean NDCG@5  {:.4}", report.mean_ndcg_at_5);
    println!("  mean NDCG@10 {:.4}", report.mean_ndcg_at_10);
    Ok(())
}
