use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use sage_core::alignment::Method;
use sage_core::corpus::Partition;

use crate::config::EmbedderKind;

#[derive(Debug, Parser)]
#[command(name = "sage", version, about = "Graded entity salience from summary alignment")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command; each overrides the config file.
#[derive(Debug, Args, Default)]
pub struct GlobalArgs {
    /// JSON run configuration; `${VAR}` is replaced from the environment.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    pub outdir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub run_id: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Answer LLM requests with the deterministic in-process mock.
    #[arg(long, global = true)]
    pub mock_llm: bool,
    /// Use the in-process coreference mock instead of the sidecar.
    #[arg(long, global = true)]
    pub mock_coref: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate documents and write them in canonical form.
    Ingest {
        /// A document file, a corpus directory, or a JSON-lines file of documents.
        #[arg(long)]
        input: PathBuf,
    },
    /// Run aligners and write one record file per method.
    Align {
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        /// Trained ensemble model, needed for the `ensemble` method.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Directory with existing base-method records, for `ensemble` alone.
        #[arg(long)]
        alignments: Option<PathBuf>,
    },
    /// Fit the alignment ensemble on manually corrected dev labels.
    TrainEnsemble {
        /// Directory holding string, coref and llm record files.
        #[arg(long)]
        alignments: PathBuf,
    },
    /// Score every entity with one predictor.
    Score {
        /// aggregate:<method>, baseline, llm-zero or llm-3shot
        #[arg(long)]
        predictor: Predictor,
        #[arg(long)]
        alignments: Option<PathBuf>,
        #[arg(long)]
        partition: Option<Partition>,
    },
    /// Compare a score file against gold scores.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        /// Second score file for a paired significance test.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long)]
        partition: Option<Partition>,
        #[arg(long)]
        salient_only: bool,
        #[arg(long)]
        resamples: Option<usize>,
    },
    /// Per-genre corpus statistics.
    Stats,
    /// ROUGE, Self-BLEU and embedding similarity of each document's summaries.
    Sumqual {
        #[arg(long)]
        embedder: Option<EmbedderKind>,
        #[arg(long)]
        embed_endpoint: Option<String>,
    },
}

impl FromStr for EmbedderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tfidf" => Ok(EmbedderKind::Tfidf),
            "remote" => Ok(EmbedderKind::Remote),
            _ => Err(format!("unknown embedder `{s}` (tfidf or remote)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    Aggregate(Method),
    Baseline,
    LlmZero,
    LlmThreeShot,
}

impl Predictor {
    /// File-name-safe form.
    pub fn slug(&self) -> String {
        self.to_string().replace(':', "-")
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predictor::Aggregate(m) => write!(f, "aggregate:{m}"),
            Predictor::Baseline => f.write_str("baseline"),
            Predictor::LlmZero => f.write_str("llm-zero"),
            Predictor::LlmThreeShot => f.write_str("llm-3shot"),
        }
    }
}

impl FromStr for Predictor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Predictor::Baseline),
            "llm-zero" => Ok(Predictor::LlmZero),
            "llm-3shot" => Ok(Predictor::LlmThreeShot),
            _ => match s.strip_prefix("aggregate:") {
                Some(m) => Ok(Predictor::Aggregate(m.parse()?)),
                None => Err(format!(
                    "unknown predictor `{s}` (aggregate:<method>, baseline, llm-zero, llm-3shot)"
                )),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn predictor_round_trip() {
        for s in ["aggregate:ensemble", "aggregate:manual", "baseline", "llm-zero", "llm-3shot"] {
            assert_eq!(s.parse::<Predictor>().unwrap().to_string(), s);
        }
        assert_eq!("aggregate:llm".parse::<Predictor>().unwrap().slug(), "aggregate-llm");
        assert!("aggregate:bogus".parse::<Predictor>().is_err());
        assert!("oracle".parse::<Predictor>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["sage", "align", "--methods", "string,llm", "--mock-llm", "--seed", "7"]).unwrap();
        assert!(cli.global.mock_llm);
        assert_eq!(cli.global.seed, Some(7));
        match cli.command {
            Command::Align { methods, .. } => assert_eq!(methods.unwrap(), [Method::String, Method::Llm]),
            other => panic!("{other:?}"),
        }
    }
}
