use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hmec::harness::{read_csv, Config, MetricsRow, Preset, SchedulerKind, SweepRow, WORKERS_ENV};

fn hmec(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hmec"));
    cmd.args(args).env_remove(WORKERS_ENV);
    if let Some(w) = workers {
        cmd.env(WORKERS_ENV, w);
    }
    cmd.output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let mut cfg = Config::preset(Preset::Desk);
    cfg.experiment.epochs = 8;
    cfg.experiment.ue_count = 5;
    cfg.experiment.ue_count_end = Some(9);
    cfg.experiment.schedulers = vec![SchedulerKind::DnnAre, SchedulerKind::DrlAre, SchedulerKind::Greedy, SchedulerKind::Local];
    cfg.net.hidden = vec![12];
    cfg.net.iterations = 20;
    cfg.dnn.pretrain_worlds = 6;
    cfg.dnn.min_samples = 0;
    cfg.dnn.rollout_rounds = 1;
    cfg.drl.norm_worlds = 4;
    cfg.optimizer.population = 16;
    cfg.optimizer.generations = 10;
    cfg.optimizer.sa_steps = 60;
    cfg.sweep.ue_counts = vec![4, 6];
    cfg.sweep.seeds = vec![1, 2];
    cfg.sweep.schedulers = vec![SchedulerKind::Greedy, SchedulerKind::Random, SchedulerKind::DrlAre];
    cfg.sweep.warmup_epochs = 2;
    cfg.sweep.measure_epochs = 3;
    let path = dir.join("small.toml");
    fs::write(&path, cfg.to_toml()).unwrap();
    path.to_str().unwrap().to_string()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_is_byte_identical_across_repeats() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        ok(&hmec(&["run", "--config", &config, "--seed", "4", "--out", d.to_str().unwrap()], None));
    }
    for file in ["metrics.csv", "summary.csv", "placement.csv"] {
        let a = fs::read(dirs[0].join(file)).unwrap();
        let b = fs::read(dirs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
    let rows: Vec<MetricsRow> = read_csv(&dirs[0].join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 8 * 4);
    assert!(rows.iter().all(|r| r.seed == 4));
}

#[test]
fn seed_flag_changes_the_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let runs: Vec<Vec<MetricsRow>> = ["1", "2"]
        .iter()
        .map(|s| {
            let d = tmp.path().join(s);
            ok(&hmec(&["run", "--config", &config, "--seed", s, "--scheduler", "local", "--out", d.to_str().unwrap()], None));
            read_csv(&d.join("metrics.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0].len(), 8);
    assert_ne!(runs[0][0].world_digest, runs[1][0].world_digest);
}

#[test]
fn sweep_output_does_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let mut texts = Vec::new();
    for w in ["1", "3"] {
        let d = tmp.path().join(w);
        ok(&hmec(&["sweep", "--config", &config, "--out", d.to_str().unwrap()], Some(w)));
        texts.push((fs::read(d.join("sweep.csv")).unwrap(), fs::read(d.join("sweep_summary.csv")).unwrap()));
    }
    assert_eq!(texts[0], texts[1]);
    let rows: Vec<SweepRow> = read_csv(&tmp.path().join("1").join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 2 * 3 * 2);
}

#[test]
fn ablate_writes_the_paired_table() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let d = tmp.path().join("abl");
    ok(&hmec(&["ablate", "--config", &config, "--mode", "dnn_no_incremental", "--out", d.to_str().unwrap()], None));
    let text = fs::read_to_string(d.join("ablation_dnn_no_incremental.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("config_hash,seed,epoch,n_ues,world_digest,dnn_are_objective"));
    assert!(header.contains("dnn_frozen_test_loss"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn pretrain_writes_network_and_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let d = tmp.path().join("pre");
    ok(&hmec(&["pretrain", "--config", &config, "--out", d.to_str().unwrap()], None));
    for file in ["net.txt", "dnn_checkpoint.json", "pretrain.csv"] {
        assert!(d.join(file).is_file(), "{file} missing");
    }
    let net = hmec::net::Mlp::load(&d.join("net.txt")).unwrap();
    assert_eq!(net.input_dim(), 2 * 4 + 2);
}

#[test]
fn config_subcommand_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = hmec(&["config", "--preset", "paper", "--seed", "9"], None);
    ok(&out);
    let path = tmp.path().join("paper.toml");
    fs::write(&path, &out.stdout).unwrap();
    let cfg = Config::load(&path).unwrap();
    let mut expected = Config::preset(Preset::Paper);
    expected.experiment.seed = 9;
    assert_eq!(cfg, expected);
}

#[test]
fn bad_config_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    fs::write(&path, "[experiment]\nseed = 1\nepochs = 5\nue_count = 3\nbogus = true\n").unwrap();
    let out = hmec(&["run", "--config", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let out = hmec(&["run", "--scheduler", "nope"], None);
    assert!(!out.status.success());
}
