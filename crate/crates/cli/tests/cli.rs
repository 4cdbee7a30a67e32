//! End-to-end checks of the subcommands through the library API and the
//! compiled binary, on runs small enough for test time.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use seads_cli::commands::{
    cmd_baseline, cmd_count_skills, cmd_eval_success, cmd_gen_boards, cmd_train,
};
use seads_cli::config::{load_file, resolve, Overrides, RunConfig};
use seads_core::GameSpec;

fn tiny_config(seed: u64, steps: u64, extra: &str) -> String {
    format!(
        "game = \"lights_out\"\nboard_size = 3\nnum_skills = 4\nseed = {seed}\n\
         total_env_steps = {steps}\nmax_depth = 2\nepisodes_per_epoch = 4\n\
         buffer_capacity = 64\nrecent_capacity = 16\nbuffer_sample = 16\n\
         model_updates_per_epoch = 2\nmodel_batch = 8\nmodel_hidden = [16]\n\
         policy_updates_per_epoch = 2\npolicy_batch = 16\ncheckpoint_interval = 1\n\
         eval_tasks_per_depth = 3\ncount_states = 5\n{extra}\n[sac]\nhidden = [16]\n"
    )
}

fn write_run(dir: &Path, name: &str, text: &str, out: &Path) -> RunConfig {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    let file = load_file(&path).unwrap();
    let ov = Overrides {
        out_flag: Some(out.to_path_buf()),
        ..Overrides::default()
    };
    resolve(&file, &ov).unwrap()
}

#[test]
fn gen_boards_export_is_stable_and_correctly_labelled() {
    let dir = tempfile::tempdir().unwrap();
    let game = GameSpec::lights_out(3).unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    let lines = cmd_gen_boards(game, 2, &a).unwrap();
    assert_eq!(lines, 9 + 36);
    cmd_gen_boards(game, 2, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    for line in fs::read_to_string(&a).unwrap().lines() {
        let mut parts = line.splitn(4, ',');
        let token = parts.next().unwrap();
        let depth: u32 = parts.next().unwrap().parse().unwrap();
        let split = parts.next().unwrap();
        let board = game.parse_board(parts.next().unwrap()).unwrap();
        assert_eq!(token, "lights_out:3");
        assert_eq!(depth, game.solution_depth(&board).unwrap());
        let expect = match game.split_of(&board) {
            seads_core::SplitLabel::Train => "train",
            seads_core::SplitLabel::Val => "val",
            seads_core::SplitLabel::Test => "test",
        };
        assert_eq!(split, expect);
    }
}

#[test]
fn full_size_depth_one_export_has_one_line_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d1.txt");
    let lines = cmd_gen_boards(GameSpec::lights_out(5).unwrap(), 1, &out).unwrap();
    assert_eq!(lines, 25);
}

#[test]
fn train_writes_metrics_and_a_loadable_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let run = write_run(dir.path(), "run.toml", &tiny_config(3, 150, ""), &out);
    let summary = cmd_train(&run, None).unwrap();
    assert!(summary.env_steps >= 150);
    assert!(summary.epochs_run > 0);

    let metrics = fs::read_to_string(&summary.metrics).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(lines.next().unwrap(), seads_cli::metrics::TRAIN_HEADER);
    assert_eq!(lines.count() as u64, summary.epochs_run);

    let saved = seads_core::checkpoint::load(&summary.checkpoint).unwrap();
    assert!(matches!(
        saved.payload,
        seads_core::checkpoint::SavedPayload::Skill(_)
    ));
}

#[test]
fn identical_config_and_seed_give_byte_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("one");
    let out2 = dir.path().join("two");
    let text = tiny_config(5, 120, "");
    let run1 = write_run(dir.path(), "a.toml", &text, &out1);
    let run2 = write_run(dir.path(), "b.toml", &text, &out2);
    cmd_train(&run1, None).unwrap();
    cmd_train(&run2, None).unwrap();
    let m1 = fs::read(out1.join("metrics.csv")).unwrap();
    let m2 = fs::read(out2.join("metrics.csv")).unwrap();
    assert!(!m1.is_empty());
    assert_eq!(m1, m2);
}

#[test]
fn resumed_training_matches_the_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let split_out = dir.path().join("split");
    let full_out = dir.path().join("full");

    let first = write_run(dir.path(), "first.toml", &tiny_config(7, 120, ""), &split_out);
    let summary = cmd_train(&first, None).unwrap();

    let extended = write_run(dir.path(), "ext.toml", &tiny_config(7, 260, ""), &split_out);
    cmd_train(&extended, Some(&summary.checkpoint)).unwrap();

    let full = write_run(dir.path(), "full.toml", &tiny_config(7, 260, ""), &full_out);
    cmd_train(&full, None).unwrap();

    let split_csv = fs::read(split_out.join("metrics.csv")).unwrap();
    let full_csv = fs::read(full_out.join("metrics.csv")).unwrap();
    assert_eq!(split_csv, full_csv);
}

#[test]
fn resume_rejects_a_changed_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let run = write_run(dir.path(), "a.toml", &tiny_config(9, 100, ""), &out);
    let summary = cmd_train(&run, None).unwrap();

    let changed = write_run(
        dir.path(),
        "b.toml",
        &tiny_config(9, 200, "model_lr = 0.002"),
        &out,
    );
    let err = cmd_train(&changed, Some(&summary.checkpoint)).unwrap_err();
    assert!(err.to_string().contains("total_env_steps"), "{err}");
}

#[test]
fn count_skills_and_eval_success_read_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let run = write_run(dir.path(), "run.toml", &tiny_config(11, 150, ""), &out);
    let summary = cmd_train(&run, None).unwrap();

    let counts_dir = dir.path().join("counts");
    let report = cmd_count_skills(&summary.checkpoint, 5, 0, &counts_dir).unwrap();
    assert_eq!(report.per_state.len(), 5);
    assert!(report.mean_unique_moves >= 0.0 && report.mean_unique_moves <= 4.0);
    let counts = fs::read_to_string(counts_dir.join("counts.csv")).unwrap();
    assert_eq!(counts.lines().count(), 6);

    let eval_dir = dir.path().join("eval");
    let report = cmd_eval_success(&summary.checkpoint, true, 0, 3, &eval_dir).unwrap();
    assert_eq!(report.per_depth.len(), 2);
    for d in &report.per_depth {
        assert_eq!(d.attempts, 3);
    }
    assert!(eval_dir.join("eval.csv").exists());
    assert!(eval_dir.join("traces.csv").exists());
}

#[test]
fn discriminator_checkpoints_cannot_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let run = write_run(
        dir.path(),
        "run.toml",
        &tiny_config(
            13,
            100,
            "[ablation]\nno_novelty = true\nvic_discriminator = true",
        ),
        &out,
    );
    let summary = cmd_train(&run, None).unwrap();
    let err = cmd_eval_success(&summary.checkpoint, true, 0, 2, &out).unwrap_err();
    assert!(err.to_string().contains("discriminator"), "{err}");
    // Skill counting still works; it needs no successor predictions.
    cmd_count_skills(&summary.checkpoint, 3, 0, &out).unwrap();
}

#[test]
fn baseline_trains_evaluates_and_rejects_skill_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let text = "game = \"lights_out\"\nboard_size = 2\nseed = 15\ntotal_env_steps = 300\n\
                max_depth = 2\ncheckpoint_interval = 10\neval_tasks_per_depth = 2\n\
                [sac]\nhidden = [16]\n";
    let run = write_run(dir.path(), "run.toml", text, &out);
    let summary = cmd_baseline(&run, None).unwrap();

    let metrics = fs::read_to_string(&summary.metrics).unwrap();
    assert_eq!(
        metrics.lines().next().unwrap(),
        seads_cli::metrics::BASELINE_HEADER
    );
    assert!(out.join("eval.csv").exists());
    assert!(out.join("traces.csv").exists());

    let err = cmd_count_skills(&summary.checkpoint, 3, 0, &out).unwrap_err();
    assert!(err.to_string().contains("baseline"), "{err}");
    let err = cmd_train(&run, Some(&summary.checkpoint)).unwrap_err();
    assert!(err.to_string().contains("baseline"), "{err}");
}

fn seads_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seads"))
}

#[test]
fn binary_gen_boards_runs_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("boards.txt");
    let result = seads_bin()
        .args(["gen-boards", "--game", "lights_out", "--board-size", "3"])
        .args(["--max-depth", "1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(result.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 9);
    assert!(String::from_utf8_lossy(&result.stdout).contains("wrote 9 boards"));
}

#[test]
fn binary_train_requires_config_or_profile() {
    let result = seads_bin().arg("train").output().unwrap();
    assert!(!result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).contains("--config or --profile"));
}

#[test]
fn binary_rejects_a_missing_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "profile = \"fast\"\n").unwrap();
    let result = seads_bin()
        .arg("train")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).contains("seed"));
}

#[test]
fn binary_honors_the_out_dir_env_var() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("from-env");
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, tiny_config(17, 60, "")).unwrap();
    let result = seads_bin()
        .arg("train")
        .arg("--config")
        .arg(&cfg)
        .env("SEADS_OUT_DIR", &env_out)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    assert!(env_out.join("metrics.csv").exists());
    assert!(env_out.join("checkpoint.ckpt").exists());
}

#[test]
fn binary_count_skills_prints_the_mean() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let run = write_run(dir.path(), "run.toml", &tiny_config(19, 100, ""), &out);
    let summary = cmd_train(&run, None).unwrap();
    let result = seads_bin()
        .args(["count-skills", "--num-states", "3", "--checkpoint"])
        .arg(&summary.checkpoint)
        .arg("--out")
        .arg(dir.path().join("counts"))
        .output()
        .unwrap();
    assert!(result.status.success());
    assert!(String::from_utf8_lossy(&result.stdout).contains("mean unique game moves"));
}

#[test]
fn library_and_binary_paths_share_one_out_dir_default() {
    // The default artifact directory is fixed, not timestamped, so the docs
    // can point at one place.
    let file = load_file(&write_config_for_default()).unwrap();
    let run = resolve(&file, &Overrides::default()).unwrap();
    assert_eq!(run.out_dir, PathBuf::from("seads-out"));
}

fn write_config_for_default() -> PathBuf {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    fs::write(&path, "profile = \"fast\"\nseed = 1\n").unwrap();
    // Leak the tempdir so the file survives until read.
    std::mem::forget(dir);
    path
}
