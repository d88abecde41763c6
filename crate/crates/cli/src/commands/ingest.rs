use std::path::Path;

use sage_core::alignment::to_jsonl;
use sage_core::corpus::{
    corpus_stats, document_from_json, document_to_json, load_corpus, Corpus, CorpusError, MANUAL_ALIGNMENTS_FILE,
};

use super::{args, display};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::run::{read_input, Run};

/// Documents from a directory, a single `.json` file, or a `.jsonl` file
/// with one document per line.
fn read_documents(cfg: &RunConfig, input: &Path) -> Result<Corpus> {
    let vocab = cfg.vocabulary()?;
    if input.extension().is_some_and(|x| x == "jsonl") {
        let text = read_input(input)?;
        let mut documents = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let doc = document_from_json(line, &vocab)
                .map_err(|e| CliError::from(e).context(format!("{} line {}", input.display(), i + 1)))?;
            documents.push(doc);
        }
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = documents.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(CorpusError::DuplicateDocument(w[0].id.clone()).into());
        }
        return Ok(Corpus {
            documents,
            manual: Vec::new(),
            vocabulary: vocab,
        });
    }
    Ok(load_corpus(input, &vocab)?)
}

pub fn ingest(cfg: RunConfig, input: &Path) -> Result<()> {
    if !input.exists() {
        return Err(CliError::Config(format!("input {} does not exist", input.display())));
    }
    let corpus = read_documents(&cfg, input)?;
    if corpus.documents.is_empty() {
        return Err(CliError::Config(format!("no documents found in {}", input.display())));
    }
    let mut run = Run::start("ingest", cfg, args(&[("input", Some(display(input)))]))?;
    for doc in &corpus.documents {
        run.write(&format!("corpus/{}.json", doc.id), document_to_json(doc).as_bytes())?;
    }
    if !corpus.manual.is_empty() {
        run.write(&format!("corpus/{MANUAL_ALIGNMENTS_FILE}"), to_jsonl(&corpus.manual).as_bytes())?;
    }
    run.write("stats.tsv", corpus_stats(&corpus).to_tsv().as_bytes())?;
    println!("ingested {} documents into {}", corpus.documents.len(), run.dir.join("corpus").display());
    run.finish()?;
    Ok(())
}
