//! Generate a synthetic fully-ranked LETOR dataset and write it to disk.
//!
//! ```bash
//! cargo run -p deepqrank --example generate_dataset
//! ```

use deepqrank::letor::generate_synthetic;

fn main() -> deepqrank::Result<()> {
    let dataset = generate_synthetic(10, 5, 0.1, 7)?;
    println!(
        "{} queries, {} documents, features per document: {}",
        dataset.num_queries(),
        dataset.num_documents(),
        dataset.feature_dim()
    );

    let text = dataset.to_letor_string();
    println!("\nfirst three rows:");
    for line in text.lines().take(3) {
        let head: String = line.chars().take(72).collect();
        println!("  {head}...");
    }

    let path = std::env::temp_dir().join("deepqrank_example_data.txt");
    dataset.write_letor_file(&path)?;
    println!("\nwrote the dataset to {}", path.display());

    // labels within each query are exactly 1..=docs_per_query
    let group = &dataset.groups()[0];
    let labels: Vec<u32> = group.documents().iter().map(|d| d.rank_label).collect();
    println!("labels of query {}: {labels:?}", group.query_id());
    Ok(())
}
