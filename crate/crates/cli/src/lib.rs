//! The `sage` command-line driver.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod run;

use cli::{Cli, Command, GlobalArgs};
use config::RunConfig;
use error::Result;

/// Config file (or defaults) with the global flags applied on top.
pub fn resolve_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &g.corpus {
        cfg.corpus = Some(c.clone());
    }
    if let Some(o) = &g.outdir {
        cfg.outdir = o.clone();
    }
    if let Some(r) = &g.run_id {
        cfg.run_id = Some(r.clone());
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(w) = g.workers {
        cfg.workers = w;
    }
    cfg.mock_llm |= g.mock_llm;
    cfg.mock_coref |= g.mock_coref;
    cfg.check()?;
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli.global)?;
    match cli.command {
        Command::Ingest { input } => commands::ingest(cfg, &input),
        Command::Align {
            methods,
            model,
            alignments,
        } => commands::align(cfg, methods, model, alignments),
        Command::TrainEnsemble { alignments } => commands::train_ensemble(cfg, &alignments),
        Command::Score {
            predictor,
            alignments,
            partition,
        } => commands::score(cfg, predictor, alignments, partition),
        Command::Eval {
            pred,
            compare,
            partition,
            salient_only,
            resamples,
        } => {
            let mut cfg = cfg;
            cfg.eval.salient_only |= salient_only;
            if let Some(r) = resamples {
                cfg.eval.resamples = r;
            }
            cfg.check()?;
            commands::eval(cfg, &pred, compare.as_deref(), partition)
        }
        Command::Stats => commands::stats(cfg),
        Command::Sumqual {
            embedder,
            embed_endpoint,
        } => {
            let mut cfg = cfg;
            if let Some(k) = embedder {
                cfg.embedder.kind = k;
            }
            if let Some(e) = embed_endpoint {
                cfg.embedder.endpoint = Some(e);
            }
            commands::sumqual(cfg)
        }
    }
}
