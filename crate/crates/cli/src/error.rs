use sage_core::coref::CorefError;
use sage_core::corpus::CorpusError;
use sage_core::ensemble::EnsembleError;
use sage_core::llm::LlmError;
use sage_core::metrics::MetricsError;
use sage_core::salience::SalienceError;
use sage_core::sumqual::EmbedError;

/// Every failure maps to one process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config, or unreadable input.
    #[error("{0}")]
    Config(String),
    /// A remote model or the coreference sidecar failed.
    #[error("{0}")]
    Service(String),
    /// Inputs disagree with each other (entity sets, labels, keys).
    #[error("{0}")]
    Mismatch(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Service(_) => 3,
            CliError::Mismatch(_) => 4,
            CliError::Internal(_) => 5,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{}: {e}", path.display()))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::GoldMismatch { .. } => CliError::Mismatch(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::Transport { .. } | LlmError::BatchUnparseable { .. } | LlmError::PredictionUnparseable(_) => {
                CliError::Service(e.to_string())
            }
            LlmError::Cache { .. } | LlmError::BatchSize(_) | LlmError::NoExamples(_) => CliError::Config(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<CorefError> for CliError {
    fn from(e: CorefError) -> Self {
        CliError::Service(e.to_string())
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::UnknownGenre(_)
            | EnsembleError::UnknownType(_)
            | EnsembleError::BadParams(_)
            | EnsembleError::Io { .. } => CliError::Config(e.to_string()),
            EnsembleError::NonFiniteLoss(_) | EnsembleError::RawSchema => CliError::Internal(e.to_string()),
            _ => CliError::Mismatch(e.to_string()),
        }
    }
}

impl From<SalienceError> for CliError {
    fn from(e: SalienceError) -> Self {
        match e {
            SalienceError::InvalidTable(_) => CliError::Config(e.to_string()),
            _ => CliError::Mismatch(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::KeyMismatch { .. }
            | MetricsError::DuplicateKey(_)
            | MetricsError::LengthMismatch(..)
            | MetricsError::Empty
            | MetricsError::ScoreOutOfRange { .. } => CliError::Mismatch(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::Transport(_) | EmbedError::Count { .. } | EmbedError::Dimension { .. } => {
                CliError::Service(e.to_string())
            }
            _ => CliError::Mismatch(e.to_string()),
        }
    }
}

impl CliError {
    /// Prefix the message, keeping the exit code.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{ctx}: {m}")),
            CliError::Service(m) => CliError::Service(format!("{ctx}: {m}")),
            CliError::Mismatch(m) => CliError::Mismatch(format!("{ctx}: {m}")),
            CliError::Internal(m) => CliError::Internal(format!("{ctx}: {m}")),
        }
    }
}
