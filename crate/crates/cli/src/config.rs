//! Run configuration: a JSON file with `${VAR}` interpolation, then flag
//! overrides on top.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use sage_core::alignment::Method;
use sage_core::coref::ConcatOrder;
use sage_core::corpus::Vocabulary;
use sage_core::ensemble::{TrainParams, DEFAULT_THRESHOLD};
use sage_core::llm::LlmConfig;
use sage_core::metrics::{EvalOptions, DEFAULT_RESAMPLES};
use sage_core::salience::SegmentTable;
use sage_core::string_match::MatchConfig;
use sage_core::text::parse_word_list;

use crate::error::{CliError, Result};

pub const API_KEY_VAR: &str = "SAGE_API_KEY";
pub const COREF_CMD_VAR: &str = "SAGE_COREF_CMD";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    /// Entity-type and genre enumerations; the built-in sets when absent.
    pub vocabulary: Option<PathBuf>,
    pub outdir: PathBuf,
    pub run_id: Option<String>,
    pub seed: u64,
    pub workers: usize,
    pub methods: Vec<Method>,
    pub mock_llm: bool,
    pub mock_coref: bool,
    pub llm: LlmConfig,
    /// Falls back to the `SAGE_API_KEY` environment variable. Never written out.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    /// Response caches live here; `<outdir>/cache` when absent.
    pub cache_dir: Option<PathBuf>,
    pub coref: CorefSettings,
    pub string_match: StringMatchSettings,
    pub ensemble: EnsembleSettings,
    /// (upper sentence fraction, score) pairs for the position baseline.
    pub segments: Vec<(f64, u32)>,
    pub shots: usize,
    pub eval: EvalSettings,
    pub embedder: EmbedderSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            vocabulary: None,
            outdir: PathBuf::from("runs"),
            run_id: None,
            seed: 0,
            workers: 4,
            methods: Method::BASE.to_vec(),
            mock_llm: false,
            mock_coref: false,
            llm: LlmConfig::default(),
            api_key: None,
            cache_dir: None,
            coref: CorefSettings::default(),
            string_match: StringMatchSettings::default(),
            ensemble: EnsembleSettings::default(),
            segments: SegmentTable::default().entries().to_vec(),
            shots: 3,
            eval: EvalSettings::default(),
            embedder: EmbedderSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorefSettings {
    /// Sidecar launch command; falls back to `SAGE_COREF_CMD`.
    pub command: Option<String>,
    pub timeout_secs: u64,
    pub order: ConcatOrder,
}

impl Default for CorefSettings {
    fn default() -> Self {
        Self {
            command: None,
            timeout_secs: 60,
            order: ConcatOrder::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StringMatchSettings {
    pub stopwords: Option<PathBuf>,
    pub pronouns: Option<PathBuf>,
    pub partial_min_hits: usize,
    pub partial_len_threshold: usize,
}

impl Default for StringMatchSettings {
    fn default() -> Self {
        let d = MatchConfig::default();
        Self {
            stopwords: None,
            pronouns: None,
            partial_min_hits: d.partial_min_hits,
            partial_len_threshold: d.partial_len_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSettings {
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    pub threshold: f64,
    /// Share of dev documents held out when reporting dev metrics.
    pub holdout_fraction: f64,
    /// Trained model to apply when `ensemble` is among the align methods.
    pub model: Option<PathBuf>,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        let t = TrainParams::default();
        Self {
            learning_rate: t.learning_rate,
            l2_lambda: t.l2_lambda,
            max_iters: t.max_iters,
            tolerance: t.tolerance,
            threshold: DEFAULT_THRESHOLD,
            holdout_fraction: 0.2,
            model: None,
        }
    }
}

impl EnsembleSettings {
    pub fn train_params(&self) -> TrainParams {
        TrainParams {
            learning_rate: self.learning_rate,
            l2_lambda: self.l2_lambda,
            max_iters: self.max_iters,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub salient_only: bool,
    pub resamples: usize,
    pub confidence: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            salient_only: false,
            resamples: DEFAULT_RESAMPLES,
            confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    #[default]
    Tfidf,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderSettings {
    pub kind: EmbedderKind,
    pub endpoint: Option<String>,
    pub batch_size: usize,
}

impl Default for EmbedderSettings {
    fn default() -> Self {
        Self {
            kind: EmbedderKind::Tfidf,
            endpoint: None,
            batch_size: 32,
        }
    }
}

/// Replace `${NAME}` in every string of `v` using `lookup`.
pub fn interpolate(v: &mut Value, lookup: &dyn Fn(&str) -> Option<String>) -> Result<()> {
    match v {
        Value::String(s) => *s = interpolate_str(s, lookup)?,
        Value::Array(items) => {
            for x in items {
                interpolate(x, lookup)?;
            }
        }
        Value::Object(map) => {
            for x in map.values_mut() {
                interpolate(x, lookup)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn interpolate_str(s: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find("${") {
        out.push_str(&rest[..i]);
        let after = &rest[i + 2..];
        let end = after
            .find('}')
            .ok_or_else(|| CliError::Config(format!("unterminated `${{` in config value `{s}`")))?;
        let name = &after[..end];
        let value =
            lookup(name).ok_or_else(|| CliError::Config(format!("config references unset variable `{name}`")))?;
        out.push_str(&value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn env_lookup(name: &str) -> Option<String> {
    std::env::var(name).ok()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, &env_lookup).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Result<Self> {
        let mut v: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        interpolate(&mut v, lookup)?;
        serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        let uniq: BTreeSet<_> = self.methods.iter().collect();
        if uniq.len() != self.methods.len() || self.methods.contains(&Method::Manual) {
            return bad("methods must be distinct and may not include `manual`".into());
        }
        if !(0.0..1.0).contains(&self.ensemble.holdout_fraction) {
            return bad(format!("holdout_fraction {} outside [0,1)", self.ensemble.holdout_fraction));
        }
        if !(0.0 < self.eval.confidence && self.eval.confidence < 1.0) || self.eval.resamples == 0 {
            return bad("eval needs confidence in (0,1) and at least one resample".into());
        }
        self.segment_table()?;
        Ok(())
    }

    pub fn corpus_path(&self) -> Result<&Path> {
        let p = self
            .corpus
            .as_deref()
            .ok_or_else(|| CliError::Config("no corpus given (--corpus or `corpus` in config)".into()))?;
        if !p.exists() {
            return Err(CliError::Config(format!("corpus path {} does not exist", p.display())));
        }
        Ok(p)
    }

    pub fn vocabulary(&self) -> Result<Vocabulary> {
        match &self.vocabulary {
            None => Ok(Vocabulary::default()),
            Some(p) => Ok(Vocabulary::from_json_file(p)?),
        }
    }

    pub fn match_config(&self) -> Result<MatchConfig> {
        let list = |p: &Path| {
            fs::read_to_string(p)
                .map(|t| parse_word_list(&t))
                .map_err(|e| CliError::io(p, e))
        };
        let mut cfg = MatchConfig {
            partial_min_hits: self.string_match.partial_min_hits,
            partial_len_threshold: self.string_match.partial_len_threshold,
            ..MatchConfig::default()
        };
        if let Some(p) = &self.string_match.stopwords {
            cfg.stopwords = list(p)?;
        }
        if let Some(p) = &self.string_match.pronouns {
            cfg.pronouns = list(p)?;
        }
        cfg.check().map_err(CliError::Config)?;
        Ok(cfg)
    }

    pub fn segment_table(&self) -> Result<SegmentTable> {
        Ok(SegmentTable::new(self.segments.clone())?)
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            seed: self.seed,
            resamples: self.eval.resamples,
            salient_only: self.eval.salient_only,
            confidence: self.eval.confidence,
        }
    }

    pub fn api_key(&self) -> Option<String> {
        self.api_key.clone().or_else(|| env_lookup(API_KEY_VAR)).filter(|k| !k.is_empty())
    }

    pub fn coref_command(&self) -> Option<String> {
        self.coref.command.clone().or_else(|| env_lookup(COREF_CMD_VAR)).filter(|c| !c.trim().is_empty())
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.outdir.join("cache"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(name: &str) -> Option<String> {
        match name {
            "KEY" => Some("sk-123".into()),
            "HOME_DIR" => Some("/data".into()),
            _ => None,
        }
    }

    #[test]
    fn interpolates_nested_strings() {
        let cfg = RunConfig::from_json(
            r#"{"api_key": "${KEY}", "corpus": "${HOME_DIR}/toy", "llm": {"model": "m-${KEY}"}}"#,
            &vars,
        )
        .unwrap();
        assert_eq!(cfg.api_key.as_deref(), Some("sk-123"));
        assert_eq!(cfg.corpus, Some(PathBuf::from("/data/toy")));
        assert_eq!(cfg.llm.model, "m-sk-123");
    }

    #[test]
    fn unset_variable_and_unknown_field_are_config_errors() {
        assert!(matches!(RunConfig::from_json(r#"{"api_key": "${NOPE}"}"#, &vars), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"colour": 1}"#, &vars), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"api_key": "${KEY"}"#, &vars), Err(CliError::Config(_))));
    }

    #[test]
    fn api_key_never_serialized() {
        let cfg = RunConfig {
            api_key: Some("secret".into()),
            ..RunConfig::default()
        };
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(!json.contains("secret"));
        assert!(!json.contains("api_key"));
    }

    #[test]
    fn defaults_check_and_bad_values_fail() {
        RunConfig::default().check().unwrap();
        let mut c = RunConfig::default();
        c.methods.push(Method::String);
        assert!(c.check().is_err());
        let c = RunConfig {
            segments: vec![(0.5, 1), (1.0, 2)],
            ..RunConfig::default()
        };
        assert!(c.check().is_err());
    }
}
