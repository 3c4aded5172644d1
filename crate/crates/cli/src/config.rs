//! The run configuration file.
//!
//! A single TOML document. `${NAME}` anywhere in the text is replaced by
//! the value of environment variable `NAME` before parsing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use turnwise::chat::EndpointConfig;
use turnwise::script::{load_corpus, sample_corpus, TopicSpec};
use turnwise::session::SessionConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { count: u64, base: u64 },
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::Range { count: 50, base: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Topic corpus file; the bundled sample corpus when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    pub seeds: Seeds,
    /// Concurrent sessions for `run` and `sweep`.
    pub workers: usize,
    pub session: SessionConfig,
    /// Named chat-completion endpoints usable as `--adapter NAME`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub adapters: BTreeMap<String, EndpointConfig>,
    /// Endpoint used when `session.synthesis = "paraphrase"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paraphrase_endpoint: Option<EndpointConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            seeds: Seeds::default(),
            workers: 4,
            session: SessionConfig::default(),
            adapters: BTreeMap::new(),
            paraphrase_endpoint: None,
        }
    }
}

/// Replaces every `${NAME}` with the environment variable's value.
pub fn interpolate(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find('}').ok_or_else(|| anyhow!("unterminated ${{ in config"))?;
        let name = &after[..end];
        let value = lookup(name).ok_or_else(|| anyhow!("environment variable {name} is not set"))?;
        out.push_str(&value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let text = interpolate(text, |name| std::env::var(name).ok())?;
        let config: RunConfig = toml::from_str(&text).context("invalid config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config = RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))?;
        if let Some(corpus) = &config.corpus {
            if corpus.is_relative() {
                config.corpus = Some(path.parent().unwrap_or(Path::new(".")).join(corpus));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.session.validate()?;
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        match &self.seeds {
            Seeds::List(list) if list.is_empty() => bail!("seed list is empty"),
            Seeds::Range { count: 0, .. } => bail!("seed count must be at least 1"),
            _ => Ok(()),
        }
    }

    pub fn corpus(&self) -> Result<Vec<TopicSpec>> {
        match &self.corpus {
            Some(path) => load_corpus(path).with_context(|| format!("loading corpus {}", path.display())),
            None => Ok(sample_corpus()),
        }
    }

    /// Initial seeds, plus the first replacement seed for QC rejects.
    pub fn seed_plan(&self) -> (Vec<u64>, u64) {
        match &self.seeds {
            Seeds::List(list) => (list.clone(), list.iter().max().map_or(0, |m| m + 1)),
            Seeds::Range { count, base } => ((*base..base + count).collect(), base + count),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}
