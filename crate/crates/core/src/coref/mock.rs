use std::collections::HashMap;

use super::{CorefCluster, CorefError, Resolver, SEPARATOR};
use crate::corpus::Span;
use crate::string_match::MatchConfig;
use crate::text::strip_punct;

/// Clusters every repeated normalized single token that is neither a
/// stopword nor a pronoun. Clusters are ordered by first occurrence.
#[derive(Debug, Clone, Default)]
pub struct MockResolver {
    cfg: MatchConfig,
}

impl MockResolver {
    pub fn new(cfg: MatchConfig) -> Self {
        Self { cfg }
    }

    pub fn clusters(&self, tokens: &[String]) -> Vec<CorefCluster> {
        let mut groups: Vec<Vec<Span>> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if t == SEPARATOR {
                continue;
            }
            let w = strip_punct(t).to_lowercase();
            if w.is_empty() || self.cfg.stopwords.contains(&w) || self.cfg.pronouns.contains(&w) {
                continue;
            }
            let g = *index.entry(w).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(Span::new(i, i + 1));
        }
        groups
            .into_iter()
            .filter(|g| g.len() >= 2)
            .map(|spans| CorefCluster { spans })
            .collect()
    }
}

impl Resolver for MockResolver {
    fn resolve(&self, tokens: &[String]) -> Result<Vec<CorefCluster>, CorefError> {
        Ok(self.clusters(tokens))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn repeated_name_forms_one_cluster() {
        let c = MockResolver::default().clusters(&toks(&["Einstein", "met", "Bohr", ".", "Einstein", "won"]));
        assert_eq!(
            c,
            [CorefCluster {
                spans: vec![Span::new(0, 1), Span::new(4, 5)]
            }]
        );
    }

    #[test]
    fn no_repeats_no_clusters() {
        assert!(MockResolver::default().clusters(&toks(&["a", "cat", "sat"])).is_empty());
    }

    #[test]
    fn stopwords_pronouns_and_separator_ignored() {
        let c = MockResolver::default().clusters(&toks(&["the", "he", SEPARATOR, "the", "He", SEPARATOR, "A", "a"]));
        assert!(c.is_empty());
    }

    #[test]
    fn case_and_punctuation_folded_in_first_occurrence_order() {
        let c = MockResolver::default().clusters(&toks(&["Zeta", "alpha", "zeta.", "ALPHA", "alpha"]));
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].spans, [Span::new(0, 1), Span::new(2, 3)]);
        assert_eq!(c[1].spans, [Span::new(1, 2), Span::new(3, 4), Span::new(4, 5)]);
    }
}
