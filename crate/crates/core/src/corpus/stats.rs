use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::Corpus;

/// One column group of the corpus overview: a genre, or the total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub genre: String,
    pub documents: usize,
    pub tokens: usize,
    pub mentions: usize,
    pub entities: usize,
    pub avg_entities_per_doc: f64,
    /// Percentages (0-100); `None` when any entity in the group lacks a gold score.
    pub pct_salient: Option<f64>,
    pub pct_top1: Option<f64>,
    pub pct_top3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsTable {
    /// Sorted by genre name.
    pub genres: Vec<StatsRow>,
    pub total: StatsRow,
}

#[derive(Default)]
struct Acc {
    documents: usize,
    tokens: usize,
    mentions: usize,
    entities: usize,
    scored: usize,
    unscored: usize,
    salient: usize,
    top1: usize,
    top3: usize,
}

impl Acc {
    fn add(&mut self, o: &Acc) {
        self.documents += o.documents;
        self.tokens += o.tokens;
        self.mentions += o.mentions;
        self.entities += o.entities;
        self.scored += o.scored;
        self.unscored += o.unscored;
        self.salient += o.salient;
        self.top1 += o.top1;
        self.top3 += o.top3;
    }

    fn row(&self, genre: &str) -> StatsRow {
        let pct = |n: usize| {
            (self.unscored == 0 && self.entities > 0).then(|| 100.0 * n as f64 / self.entities as f64)
        };
        StatsRow {
            genre: genre.to_owned(),
            documents: self.documents,
            tokens: self.tokens,
            mentions: self.mentions,
            entities: self.entities,
            avg_entities_per_doc: if self.documents == 0 {
                0.0
            } else {
                self.entities as f64 / self.documents as f64
            },
            pct_salient: pct(self.salient),
            pct_top1: pct(self.top1),
            pct_top3: pct(self.top3),
        }
    }
}

/// Per-genre and total descriptive statistics. Salient means gold score
/// 1..=N, top-1 means score 5, top-3 means score 3..=5.
pub fn corpus_stats(corpus: &Corpus) -> StatsTable {
    let mut per_genre: BTreeMap<&str, Acc> = BTreeMap::new();
    for doc in &corpus.documents {
        let acc = per_genre.entry(doc.genre.as_str()).or_default();
        acc.documents += 1;
        acc.tokens += doc.tokens.len();
        for e in &doc.entities {
            acc.entities += 1;
            acc.mentions += e.mentions.len();
            match e.gold_score {
                None => acc.unscored += 1,
                Some(g) => {
                    acc.scored += 1;
                    acc.salient += usize::from(g >= 1);
                    acc.top1 += usize::from(g == 5);
                    acc.top3 += usize::from((3..=5).contains(&g));
                }
            }
        }
    }
    let mut total = Acc::default();
    for acc in per_genre.values() {
        total.add(acc);
    }
    StatsTable {
        genres: per_genre.iter().map(|(g, a)| a.row(g)).collect(),
        total: total.row("TOTAL"),
    }
}

impl StatsTable {
    /// Tab-separated rendering, one row per genre plus a TOTAL row.
    pub fn to_tsv(&self) -> String {
        let fmt_pct = |p: Option<f64>| p.map_or_else(|| "NA".to_string(), |v| format!("{v:.2}"));
        let mut out = String::from("genre\tdocuments\ttokens\tmentions\tentities\tavg_entities_per_doc\tpct_salient\tpct_top1\tpct_top3\n");
        for r in self.genres.iter().chain(std::iter::once(&self.total)) {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.2}\t{}\t{}\t{}",
                r.genre,
                r.documents,
                r.tokens,
                r.mentions,
                r.entities,
                r.avg_entities_per_doc,
                fmt_pct(r.pct_salient),
                fmt_pct(r.pct_top1),
                fmt_pct(r.pct_top3)
            );
        }
        out
    }
}
