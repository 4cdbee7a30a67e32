//! CSV artifacts with fixed headers. Every value is formatted
//! deterministically, so repeat runs with one config and seed produce
//! byte-identical files. Wall-clock timings never enter a CSV for the same
//! reason; they go to the human log only.

use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use seads_core::baseline::BaselineEpochMetrics;
use seads_core::eval::{EvalReport, SkillCountReport, TaskTrace};
use seads_core::planner::TaskOutcome;
use seads_core::trainer::EpochMetrics;
use seads_core::SplitLabel;

pub const TRAIN_HEADER: &str = "epoch,env_steps,episodes,buffer,mean_episode_len,\
frac_symbolic_change,mean_final_reward,model_loss,model_relabelled,policy_relabelled,\
critic1_loss,critic2_loss,actor_loss,mean_q,mean_log_prob";
pub const BASELINE_HEADER: &str =
    "epoch,env_steps,episodes,recent_success,replay,critic1_loss,critic2_loss,actor_loss,\
mean_q,updates";
pub const EVAL_HEADER: &str = "depth,split,attempts,successes,rate";
pub const TRACE_HEADER: &str =
    "task,depth,outcome,first_plan_len,replans,skills_executed,env_steps,board";
pub const COUNT_HEADER: &str = "state,unique_moves";

/// Shortest round-trip float text; bit-identical inputs give identical text.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

pub fn split_token(split: SplitLabel) -> &'static str {
    match split {
        SplitLabel::Train => "train",
        SplitLabel::Val => "val",
        SplitLabel::Test => "test",
    }
}

pub fn outcome_token(outcome: TaskOutcome) -> &'static str {
    match outcome {
        TaskOutcome::Success => "success",
        TaskOutcome::NoPlanFound => "no_plan",
        TaskOutcome::WallTimeExceeded => "wall_time",
        TaskOutcome::ExecutionFailed => "execution_failed",
    }
}

pub struct CsvFile {
    w: BufWriter<File>,
}

impl CsvFile {
    /// Truncate and start fresh with the header.
    pub fn create(path: &Path, header: &str) -> io::Result<Self> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{header}")?;
        Ok(CsvFile { w })
    }

    /// Continue an existing file, or start one; the header is written only
    /// when the file is new or empty.
    pub fn append_or_create(path: &Path, header: &str) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let fresh = file.metadata()?.len() == 0;
        let mut w = BufWriter::new(file);
        if fresh {
            writeln!(w, "{header}")?;
        }
        Ok(CsvFile { w })
    }

    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        writeln!(self.w, "{}", fields.join(","))
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.w.flush()
    }
}

pub fn train_row(m: &EpochMetrics) -> Vec<String> {
    vec![
        m.epoch.to_string(),
        m.env_steps.to_string(),
        m.episodes_collected.to_string(),
        m.buffer_len.to_string(),
        num(m.mean_episode_len),
        num(m.frac_symbolic_change),
        num(m.mean_final_reward),
        num(m.model_loss),
        m.model_relabelled.to_string(),
        m.policy_relabelled.to_string(),
        num(m.critic1_loss),
        num(m.critic2_loss),
        num(m.actor_loss),
        num(m.mean_q),
        num(m.mean_log_prob),
    ]
}

pub fn baseline_row(m: &BaselineEpochMetrics) -> Vec<String> {
    vec![
        m.epoch.to_string(),
        m.env_steps.to_string(),
        m.episodes_finished.to_string(),
        num(m.recent_success),
        m.replay_len.to_string(),
        num(m.critic1_loss),
        num(m.critic2_loss),
        num(m.actor_loss),
        num(m.mean_q),
        m.updates_run.to_string(),
    ]
}

fn trace_row(task: usize, t: &TaskTrace) -> Vec<String> {
    vec![
        task.to_string(),
        t.depth.to_string(),
        outcome_token(t.outcome).to_string(),
        t.first_plan_len.map_or(String::new(), |v| v.to_string()),
        t.replans.to_string(),
        t.skills_executed.to_string(),
        t.env_steps.to_string(),
        t.board.clone(),
    ]
}

/// Write `eval.csv` (per-depth rates) and `traces.csv` (per-task rows)
/// into the directory.
pub fn write_eval_report(dir: &Path, report: &EvalReport) -> io::Result<()> {
    let mut eval = CsvFile::create(&dir.join("eval.csv"), EVAL_HEADER)?;
    for d in &report.per_depth {
        eval.row(&[
            d.depth.to_string(),
            split_token(d.split).to_string(),
            d.attempts.to_string(),
            d.successes.to_string(),
            num(d.rate()),
        ])?;
    }
    eval.finish()?;
    let mut traces = CsvFile::create(&dir.join("traces.csv"), TRACE_HEADER)?;
    for (i, t) in report.traces.iter().enumerate() {
        traces.row(&trace_row(i, t))?;
    }
    traces.finish()
}

/// Write `counts.csv`: one row per evaluated initial state.
pub fn write_skill_counts(dir: &Path, report: &SkillCountReport) -> io::Result<()> {
    let mut csv = CsvFile::create(&dir.join("counts.csv"), COUNT_HEADER)?;
    for (i, &c) in report.per_state.iter().enumerate() {
        csv.row(&[i.to_string(), c.to_string()])?;
    }
    csv.finish()
}
