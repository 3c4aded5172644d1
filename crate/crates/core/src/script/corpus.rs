use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ScriptError;
use crate::text;

const SAMPLE_TOPICS: &str = include_str!("../../assets/sample_topics.json");

/// Minimum keyword pool size per topic.
pub const MIN_KEYWORDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicSpec {
    pub id: String,
    pub description: String,
    #[serde(rename = "keywords")]
    pub keyword_pool: Vec<String>,
}

fn check(corpus: &[TopicSpec]) -> Result<(), ScriptError> {
    if corpus.is_empty() {
        return Err(ScriptError::EmptyCorpus);
    }
    let mut ids = BTreeSet::new();
    for topic in corpus {
        let bad = |msg: String| Err(ScriptError::InvalidCorpus(format!("topic {:?}: {msg}", topic.id)));
        if topic.id.trim().is_empty() {
            return bad("empty id".into());
        }
        if !ids.insert(topic.id.as_str()) {
            return bad("duplicate id".into());
        }
        if topic.description.trim().is_empty() {
            return bad("empty description".into());
        }
        if topic.keyword_pool.len() < MIN_KEYWORDS {
            return bad(format!("needs at least {MIN_KEYWORDS} keywords, has {}", topic.keyword_pool.len()));
        }
        let mut seen = BTreeSet::new();
        for k in &topic.keyword_pool {
            if k.is_empty() || k.trim() != k || text::words(k).next().is_none() {
                return bad(format!("invalid keyword {k:?}"));
            }
            if !seen.insert(k.to_lowercase()) {
                return bad(format!("duplicate keyword {k:?}"));
            }
        }
    }
    Ok(())
}

pub fn parse_corpus(json: &str) -> Result<Vec<TopicSpec>, ScriptError> {
    let corpus: Vec<TopicSpec> =
        serde_json::from_str(json).map_err(|e| ScriptError::InvalidCorpus(e.to_string()))?;
    check(&corpus)?;
    Ok(corpus)
}

pub fn load_corpus(path: &Path) -> Result<Vec<TopicSpec>, ScriptError> {
    parse_corpus(&std::fs::read_to_string(path)?)
}

/// The bundled 25-topic sample corpus.
pub fn sample_corpus() -> Vec<TopicSpec> {
    parse_corpus(SAMPLE_TOPICS).expect("bundled corpus is valid")
}
