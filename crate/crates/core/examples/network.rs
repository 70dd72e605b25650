//! Train the two-headed network on a toy problem, then save and reload it in the text format.
//!
//! cargo run --release --example network

use hmec::net::{Mlp, Sample, Sgd};
use hmec::rng_for;
use rand::Rng;

fn main() -> hmec::Result<()> {
    // Two nodes: inputs are 2 * 2 + 2 = 6 features, outputs 3 association classes plus a fraction.
    let mut rng = rng_for(1, 0);
    let data: Vec<Sample> = (0..400)
        .map(|_| {
            let input: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let target_assoc = if input[0] > input[1] { 1 } else { 2 };
            Sample { target_fraction: 0.5 + 0.4 * input[2].tanh(), input, target_assoc }
        })
        .collect();

    let mut net = Mlp::new(2, &[32, 16], 3);
    let mut opt = Sgd::new(0.05, 0.9, 1.0);
    println!("initial loss {:.4}", net.loss(&data, 1.0));
    for pass in 1..=30 {
        let mut total = 0.0;
        for batch in data.chunks(32) {
            total += opt.train_step(&mut net, batch)? * batch.len() as f64;
        }
        if pass % 10 == 0 {
            println!("pass {pass}: loss {:.4}", total / data.len() as f64);
        }
    }
    let out = net.forward(&data[0].input);
    println!("sample 0: probs {:.3?}, argmax {}, fraction {:.3}", out.assoc_probs, out.argmax(), out.fraction);

    let dir = std::env::temp_dir().join("hmec-network-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("net.txt");
    net.save(&path)?;
    let back = Mlp::load(&path)?;
    println!("reloaded from {}: identical = {}", path.display(), back == net);
    Ok(())
}
