//! `baseline-export`: query a commercial gender service for a list of
//! names under the daily quota, writing the scoreable prediction CSV.

use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use namefair_core::baselines::{batch_export, ApiClient, ApiClientConfig, Service};
use namefair_core::corpus::{ingest_csv, ColumnMap, IngestOptions};
use namefair_core::eval::holdout_sample;

use crate::config::RunConfig;

#[derive(Debug, clap::Args)]
pub struct BaselineExportArgs {
    /// gender-api, onograph or genderize.
    #[arg(long)]
    pub service: Option<String>,
    #[arg(long)]
    pub base_url: Option<String>,
    /// Environment variable holding the API credential.
    #[arg(long)]
    pub credential_env: Option<String>,
    /// CSV of names to query (column `name`).
    #[arg(long)]
    pub names: PathBuf,
    /// Query a seeded uniform sample of this size instead of every name.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long)]
    pub sample_seed: Option<u64>,
    #[arg(long)]
    pub quota: Option<u32>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output prediction CSV.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_baseline_export(args: BaselineExportArgs) -> Result<()> {
    let config = RunConfig::load_opt(args.config.as_ref())?;
    let service: Service = args
        .service
        .as_deref()
        .or(config.api.service.as_deref())
        .context("no service: pass --service")?
        .parse()?;
    let base_url = args
        .base_url
        .or(config.api.base_url.clone())
        .context("no endpoint: pass --base-url")?;
    let cache = args
        .cache
        .or(config.api.cache.clone())
        .context("no cache file: pass --cache")?;

    let mut client_config = ApiClientConfig::new(service, base_url, cache);
    if let Some(quota) = args.quota.or(config.api.daily_quota) {
        client_config.daily_quota = quota;
    }
    if let Some(secs) = args.timeout_secs.or(config.api.timeout_secs) {
        client_config.timeout = Duration::from_secs(secs);
    }
    if let Some(max) = args.max_in_flight.or(config.api.max_in_flight) {
        client_config.max_in_flight = max;
    }
    if let Some(var) = args.credential_env.or(config.api.credential_env.clone()) {
        client_config.credential = Some(
            std::env::var(&var).with_context(|| format!("credential env {var} not set"))?,
        );
    }

    let report = ingest_csv(
        &args.names,
        &ColumnMap::name_only("name"),
        &IngestOptions::default(),
    )?;
    let mut names: Vec<String> = report.records.into_iter().map(|r| r.raw_name).collect();
    if let Some(k) = args.sample {
        names = holdout_sample(&names, k, args.sample_seed.unwrap_or(0))?;
    }

    let client = ApiClient::open(client_config)?;
    let export = batch_export(&client, &names, &args.out)?;
    println!(
        "wrote {} rows ({} live calls, {} cache hits, {} invalid names skipped) to {}",
        export.rows_written,
        export.live_calls,
        export.cache_hits,
        export.skipped_invalid,
        args.out.display()
    );
    Ok(())
}
