//! Validate the analytic backpropagation against central finite
//! differences on every parameter of a randomly initialized network.
//!
//! ```bash
//! cargo run -p deepqrank --example gradient_check
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use deepqrank::neural::{init_network, QInput, INPUT_DIM};

fn main() -> deepqrank::Result<()> {
    let net = init_network(42);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut raw = [0.0; INPUT_DIM];
    for v in &mut raw {
        *v = rng.gen_range(0.0..1.0);
    }
    let x = QInput::from_raw(raw)?;
    let target = 1.25;

    let (loss, grads) = net.backward(&x, target);
    println!("loss at the probe point: {loss:.6}");

    let eps = 1e-5;
    let mut worst = 0.0f64;
    let mut live = 0usize;
    for k in 0..net.num_params() {
        let orig = net.param(k);
        let mut plus = net.clone();
        plus.set_param(k, orig + eps);
        let mut minus = net.clone();
        minus.set_param(k, orig - eps);
        let numeric = (plus.backward(&x, target).0 - minus.backward(&x, target).0) / (2.0 * eps);
        let analytic = grads.param(k);
        let scale = numeric.abs().max(analytic.abs());
        if scale < 1e-7 {
            continue; // dead rectifier path: both sides are zero
        }
        live += 1;
        worst = worst.max((numeric - analytic).abs() / scale);
    }
    println!(
        "checked {live} live parameters of {}: max relative error {worst:.3e}",
        net.num_params()
    );
    assert!(worst < 1e-4);
    println!("analytic gradients agree with finite differences");
    Ok(())
}
