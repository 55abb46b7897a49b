use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skyforge::commands::{
    cmd_curate, cmd_evaluate, cmd_generate, cmd_reward, cmd_score, cmd_synth, CurateArgs, EvaluateArgs, GenerateArgs,
    RewardArgs, ScoreArgs, SynthArgs,
};
use skyforge::error::CliResult;

#[derive(Parser)]
#[command(name = "skyforge", version, about = "Spatial-reasoning QA datasets from UAV scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate QA records from scene directories.
    Generate(GenerateArgs),
    /// Split a dataset into a benchmark and a frame-disjoint training set.
    Curate(CurateArgs),
    /// Run a model (or a mock) on a benchmark and score it.
    Evaluate(EvaluateArgs),
    /// Score existing predictions.
    Score(ScoreArgs),
    /// Compute training rewards for prediction/reference pairs.
    Reward(RewardArgs),
    /// Write synthetic scenes with ground-truth sheets.
    Synth(SynthArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => {
            let m = cmd_generate(&a)?;
            eprintln!("{} records from {} scenes, {} skipped", m.records, m.scenes, m.skipped.len());
            for (task, n) in &m.per_task {
                eprintln!("  {task:<18} {n}");
            }
        }
        Command::Curate(a) => {
            let s = cmd_curate(&a)?;
            eprintln!("bench {} records over {} frames, train {}", s.bench, s.bench_frames, s.train);
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Evaluate(a) => print!("{}", cmd_evaluate(&a)?.report.render_table()),
        Command::Score(a) => print!("{}", cmd_score(&a)?.report.render_table()),
        Command::Reward(a) => {
            let out = cmd_reward(&a)?;
            let failed = out.iter().filter(|o| o.error.is_some()).count();
            eprintln!("{} lines, {failed} with errors", out.len());
        }
        Command::Synth(a) => {
            let n = cmd_synth(&a)?;
            eprintln!("wrote {n} scenes to {}", a.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("skyforge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
