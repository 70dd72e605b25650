//! Run a learning controller next to its ablation on one shared trajectory and print the paired
//! per-epoch table written to `ablation_<mode>.csv`.
//!
//! cargo run --release --example ablation [dnn_no_incremental|drl_no_refinement]

use hmec::harness::{ablation, AblationMode, Config, Preset};

fn main() -> hmec::Result<()> {
    let mode: AblationMode = std::env::args().nth(1).as_deref().unwrap_or("drl_no_refinement").parse()?;
    let mut cfg = Config::preset(Preset::Desk);
    cfg.experiment.epochs = 40;

    let out = ablation(&cfg, mode)?;
    let (header, rows) = out.paired_table();
    println!("{}", header.join(","));
    for row in rows.iter().step_by(5) {
        println!("{}", row.join(","));
    }
    for s in &out.run.summary {
        println!("{}: final reward {:.4}, mean test loss {:?}", s.scheduler, s.final_reward, s.mean_test_loss);
    }
    Ok(())
}
