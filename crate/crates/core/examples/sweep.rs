//! Compare schedulers across UE counts and seeds, as the `hmec sweep` subcommand does.
//!
//! cargo run --release --example sweep

use hmec::harness::{sweep_ues, Config, Preset, SchedulerKind};

fn main() -> hmec::Result<()> {
    let mut cfg = Config::preset(Preset::Desk);
    cfg.sweep.ue_counts = vec![10, 20];
    cfg.sweep.seeds = vec![1, 2];
    cfg.sweep.warmup_epochs = 5;
    cfg.sweep.measure_epochs = 10;
    cfg.sweep.schedulers = vec![SchedulerKind::Oracle, SchedulerKind::Greedy, SchedulerKind::Random, SchedulerKind::Local];

    let out = sweep_ues(&cfg, None)?;
    for c in &out.cells {
        println!("N={:<3} {:<7} {:8.4} ± {:.4} s over {} seeds", c.n_ues, c.scheduler, c.mean_objective, c.std_objective, c.seeds);
    }
    let dir = std::env::temp_dir().join("hmec-sweep-example");
    out.write(&dir)?;
    println!("wrote {}", dir.display());
    Ok(())
}
