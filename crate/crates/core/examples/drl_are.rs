//! Run the reinforcement controller from a fresh policy, once with action refinement and once
//! with uniform random exploration, and compare the reward curves.
//!
//! cargo run --release --example drl_are

use hmec::harness::{trajectory, Config, Preset};
use hmec::sched::{DrlAre, DrlConfig, Exploration, Scheduler};

fn main() -> hmec::Result<()> {
    let mut cfg = Config::preset(Preset::Desk);
    cfg.experiment.epochs = 80;
    cfg.experiment.ue_count = 20;
    cfg.experiment.ue_count_end = None;
    let worlds = trajectory(&cfg)?;

    for exploration in [Exploration::Refine, Exploration::RandomSearch] {
        let drl = DrlConfig { exploration, ..cfg.drl.clone() };
        let mut ctl = DrlAre::new(&cfg.sampler(), cfg.net.clone(), drl, cfg.optimizer.clone(), 2)?;
        let mut window = Vec::new();
        for world in &worlds {
            let snap = ctl.decide(world)?;
            ctl.learn(world, &snap)?;
            window.push(snap.reward());
            if window.len() == 20 {
                println!("{:<10} epochs {:>2}-{:>2}: mean reward {:.4}", ctl.name(), world.epoch - 19, world.epoch, window.iter().sum::<f64>() / 20.0);
                window.clear();
            }
        }
        println!("{:<10} replay buffer holds {} transitions", ctl.name(), ctl.buffer().len());
    }
    Ok(())
}
