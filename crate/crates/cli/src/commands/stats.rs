use sage_core::corpus::corpus_stats;

use super::{args, display, load};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::run::Run;

pub fn stats(cfg: RunConfig) -> Result<()> {
    let corpus = load(&cfg)?;
    let mut run = Run::start("stats", cfg.clone(), args(&[("corpus", cfg.corpus.as_deref().map(display))]))?;
    let table = corpus_stats(&corpus);
    let tsv = table.to_tsv();
    let mut json = serde_json::to_string_pretty(&table).map_err(|e| CliError::Internal(e.to_string()))?;
    json.push('\n');
    run.write("stats.tsv", tsv.as_bytes())?;
    run.write("stats.json", json.as_bytes())?;
    print!("{tsv}");
    run.finish()?;
    Ok(())
}
