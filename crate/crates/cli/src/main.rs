//! Command-line pipeline for name-based demographic classification and
//! fairness auditing: ingest -> train -> evaluate -> audit -> report.

mod commands;
mod config;
mod files;

use clap::Parser;
use namefair_core::ErrorCategory;

#[derive(Parser)]
#[command(
    name = "namefair",
    version,
    about = "Classify gender and caste category from full Indian names and audit demographic representation"
)]
enum Cli {
    /// Read a raw CSV into the canonical corpus format with stats.
    Ingest(commands::data::IngestArgs),
    /// Generate a synthetic corpus with a known Bayes-optimal accuracy.
    Synth(commands::data::SynthArgs),
    /// Train one model family on a corpus.
    Train(commands::train::TrainArgs),
    /// Predict labels for a name or a list of names.
    Predict(commands::score::PredictArgs),
    /// Score a model on a labeled test split.
    Eval(commands::score::EvalArgs),
    /// Score every model on every test split (transfer matrix).
    CrossEval(commands::score::CrossEvalArgs),
    /// Partition names by the correctness of two prediction sources.
    Buckets(commands::score::BucketsArgs),
    /// Export gender predictions from a commercial API under quota.
    BaselineExport(commands::baseline::BaselineExportArgs),
    /// Run one research-question audit over a corpus.
    Audit(commands::audit::AuditArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli {
        Cli::Ingest(args) => commands::data::cmd_ingest(args),
        Cli::Synth(args) => commands::data::cmd_synth(args),
        Cli::Train(args) => commands::train::cmd_train(args),
        Cli::Predict(args) => commands::score::cmd_predict(args),
        Cli::Eval(args) => commands::score::cmd_eval(args),
        Cli::CrossEval(args) => commands::score::cmd_cross_eval(args),
        Cli::Buckets(args) => commands::score::cmd_buckets(args),
        Cli::BaselineExport(args) => commands::baseline::cmd_baseline_export(args),
        Cli::Audit(args) => commands::audit::cmd_audit(args),
    }
}

/// 0 success, 1 usage/config, 2 data, 3 quota/network.
fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<namefair_core::Error>() {
            return match core.category() {
                ErrorCategory::Config => 1,
                ErrorCategory::Data => 2,
                ErrorCategory::Quota | ErrorCategory::Network => 3,
            };
        }
    }
    2
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}
