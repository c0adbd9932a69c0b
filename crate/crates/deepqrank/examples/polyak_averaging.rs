//! Show the per-step soft target update in isolation: with a frozen online
//! network the target-to-online gap decays geometrically by the factor tau.
//!
//! ```bash
//! cargo run -p deepqrank --example polyak_averaging
//! ```

use deepqrank::neural::{init_network, QNetwork, TargetPair};

fn gap(a: &QNetwork, b: &QNetwork) -> f64 {
    (0..a.num_params())
        .map(|k| (a.param(k) - b.param(k)).abs())
        .fold(0.0, f64::max)
}

fn main() -> deepqrank::Result<()> {
    let tau = 0.999;
    let mut pair = TargetPair::new(init_network(1), tau)?;
    pair.target = init_network(2); // decouple the copies

    let initial = gap(&pair.target, &pair.online);
    println!("tau = {tau}; initial max parameter gap: {initial:.6}");
    let mut step = 0u32;
    for milestone in [1u32, 10, 100, 1000, 6905] {
        while step < milestone {
            pair.polyak_update();
            step += 1;
        }
        let now = gap(&pair.target, &pair.online);
        println!(
            "after {step:>4} steps: gap {now:.6e} (tau^{step} = {:.6e})",
            tau_pow(tau, step) * initial
        );
    }
    let now = gap(&pair.target, &pair.online);
    assert!(now <= 1e-3 * initial);
    println!("gap fell below 1e-3 of the initial value at step 6905, as geometry predicts");
    Ok(())
}

fn tau_pow(tau: f64, steps: u32) -> f64 {
    tau.powi(steps as i32)
}
