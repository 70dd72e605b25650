//! Pre-train the supervised controller, run it online while the UE population grows, and
//! checkpoint it. The entropy gate decides when the global optimizer labels new samples.
//!
//! cargo run --release --example dnn_are

use hmec::harness::{build_scheduler, pretrain, trajectory, Config, Preset, SchedulerKind};
use hmec::sched::{load_checkpoint, save_checkpoint, DnnAre, DnnCheckpoint, Scheduler};

fn main() -> hmec::Result<()> {
    let mut cfg = Config::preset(Preset::Desk);
    cfg.experiment.epochs = 60;
    cfg.experiment.ue_count = 10;
    cfg.experiment.ue_count_end = Some(30);

    let pre = pretrain(&cfg)?;
    let r = &pre.report;
    println!("pre-trained on {} samples from {} worlds: loss {:.3} -> {:.3}", r.samples, r.worlds, r.initial_loss, r.final_loss);

    let mut ctl = DnnAre::new(pre.clone(), cfg.net.clone(), cfg.dnn.clone(), cfg.optimizer.clone(), 1);
    let mut frozen = build_scheduler(SchedulerKind::DnnFrozen, &cfg, &mut Some(pre))?;
    println!("entropy threshold {:.3}", ctl.threshold());

    for world in trajectory(&cfg)? {
        let snap = ctl.decide(&world)?;
        let report = ctl.learn(&world, &snap)?;
        let base = frozen.decide(&world)?;
        if world.epoch % 10 == 0 {
            println!(
                "epoch {:>2} N={:>2}: objective {:.3} (frozen {:.3}), entropy {:.3}, updated {}",
                world.epoch,
                world.n_ues(),
                snap.objective,
                base.objective,
                snap.mean_entropy().unwrap_or(0.0),
                report.updated
            );
        }
    }
    println!("{} incremental updates, memory holds {} samples", ctl.updates(), ctl.memory().len());

    let path = std::env::temp_dir().join("hmec-dnn-checkpoint.json");
    save_checkpoint(&path, &ctl.checkpoint())?;
    let back: DnnCheckpoint = load_checkpoint(&path)?;
    println!("checkpoint round trip identical: {}", back == ctl.checkpoint());
    Ok(())
}
