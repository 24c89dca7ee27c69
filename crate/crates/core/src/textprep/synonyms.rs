use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::stemmer::stem;
use crate::{Error, Result};

const BUILTIN: &str = include_str!("../../data/synonyms.txt");

/// Collapses groups of similar words onto one canonical word.
///
/// Every member of a group maps to the group's first word, and the first word
/// maps to itself, so lookups are idempotent. Stemmed spellings of the members
/// are registered as well, since collapsing runs after stemming.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymMap {
    mapping: BTreeMap<String, String>,
}

impl SynonymMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// The dictionary shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("builtin synonym file is well formed")
    }

    /// One group per line, whitespace separated, first word canonical. Blank
    /// lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let groups: Vec<Vec<&str>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.split_whitespace().collect())
            .collect();
        Self::from_groups(&groups)
    }

    pub fn from_groups<S: AsRef<str>>(groups: &[Vec<S>]) -> Result<Self> {
        let mut mapping: BTreeMap<String, String> = BTreeMap::new();
        let mut insert = |word: &str, canonical: &str| -> Result<()> {
            match mapping.get(word) {
                Some(existing) if existing != canonical => Err(Error::SynonymConflict {
                    word: word.to_string(),
                    first: existing.clone(),
                    second: canonical.to_string(),
                }),
                Some(_) => Ok(()),
                None => {
                    mapping.insert(word.to_string(), canonical.to_string());
                    Ok(())
                }
            }
        };
        for group in groups {
            let Some(canonical) = group.first() else { continue };
            let canonical = canonical.as_ref();
            for word in group {
                insert(word.as_ref(), canonical)?;
            }
        }
        let raw: Vec<(String, String)> = mapping.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        for (word, canonical) in raw {
            mapping.entry(stem(&word)).or_insert(canonical);
        }
        Ok(Self { mapping })
    }

    pub fn collapse<'a>(&'a self, token: &'a str) -> &'a str {
        self.mapping.get(token).map(String::as_str).unwrap_or(token)
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }
}

pub fn collapse_synonyms(token: &str, map: &SynonymMap) -> String {
    map.collapse(token).to_string()
}
