//! Vocabulary import.
//!
//! One item per line, three tab-separated fields: `id`, `prompt`, `answer`.
//! Blank lines and lines starting with `#` are skipped. Surrounding
//! whitespace of each field is trimmed.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The vocabulary shipped with the crate.
pub const SAMPLE_VOCABULARY: &str = include_str!("../../data/sample_vocabulary.tsv");

/// Number of items in [`SAMPLE_VOCABULARY`].
pub const SAMPLE_VOCABULARY_LEN: usize = 120;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyItem {
    pub id: String,
    pub prompt: String,
    pub answer: String,
}

/// Parses a whole document. Any malformed line or repeated id rejects the
/// document.
pub fn parse_vocabulary(text: &str) -> Result<Vec<VocabularyItem>> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Parse { line, message };
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        for (name, value) in ["id", "prompt", "answer"].iter().zip(&fields) {
            if value.is_empty() {
                return Err(bad(format!("empty {name}")));
            }
        }
        if !seen.insert(fields[0].to_string()) {
            return Err(bad(format!("duplicate id {:?}", fields[0])));
        }
        items.push(VocabularyItem { id: fields[0].into(), prompt: fields[1].into(), answer: fields[2].into() });
    }
    Ok(items)
}

/// Imported items in import order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    items: Vec<VocabularyItem>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[VocabularyItem] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&VocabularyItem> {
        self.index.get(id).map(|&k| &self.items[k])
    }

    /// Rejects the batch if any id is already present.
    pub fn check_new(&self, batch: &[VocabularyItem]) -> Result<()> {
        if let Some(dup) = batch.iter().find(|i| self.index.contains_key(&i.id)) {
            return Err(Error::Config(format!("vocabulary already contains id {:?}", dup.id)));
        }
        Ok(())
    }

    pub fn extend(&mut self, batch: Vec<VocabularyItem>) -> Result<()> {
        self.check_new(&batch)?;
        for item in batch {
            self.index.insert(item.id.clone(), self.items.len());
            self.items.push(item);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_lines() {
        let items = parse_vocabulary("a\t犬\tdog\nb\t猫\tcat\n\n# note\nc\t鳥\tbird\n").unwrap();
        assert_eq!(items.len(), 3);
        assert_eq!(items[2], VocabularyItem { id: "c".into(), prompt: "鳥".into(), answer: "bird".into() });
    }

    #[test]
    fn empty_answer_names_line() {
        let err = parse_vocabulary("a\t犬\tdog\nb\t猫\t \n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("answer"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = parse_vocabulary("a\tx\ty\na\tz\tw\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn wrong_field_count() {
        assert!(matches!(parse_vocabulary("a,b,c\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn sample_has_documented_count() {
        let items = parse_vocabulary(SAMPLE_VOCABULARY).unwrap();
        assert_eq!(items.len(), SAMPLE_VOCABULARY_LEN);
        let answers: HashSet<_> = items.iter().map(|i| &i.answer).collect();
        assert_eq!(answers.len(), items.len());
    }

    #[test]
    fn extend_is_atomic() {
        let mut v = Vocabulary::default();
        v.extend(parse_vocabulary("a\tx\ty\n").unwrap()).unwrap();
        let batch = parse_vocabulary("b\tx\ty\na\tz\tw\n").unwrap();
        assert!(v.extend(batch).is_err());
        assert_eq!(v.len(), 1);
        assert!(v.get("b").is_none());
    }
}
