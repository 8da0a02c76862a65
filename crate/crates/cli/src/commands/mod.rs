pub mod audit;
pub mod baseline;
pub mod data;
pub mod score;
pub mod train;

use anyhow::{Context, Result};
use namefair_core::corpus::Task;

pub fn parse_task(raw: Option<&str>, from_config: Option<&str>) -> Result<Task> {
    let text = raw.or(from_config).unwrap_or("gender");
    text.parse::<Task>().context("bad task")
}
