use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BLANK_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const SOS_EOS_ID: usize = 2;
/// First id available to content symbols.
pub const FIRST_CONTENT_ID: usize = 3;

const SPECIAL_SYMBOLS: [&str; 3] = ["<blank>", "<unk>", "<sos/eos>"];

/// Token inventory with fixed special ids: blank 0, unk 1, sos/eos 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary from content symbols; specials are prepended.
    pub fn new<S: AsRef<str>>(content: &[S]) -> Result<Self> {
        let mut symbols: Vec<String> = SPECIAL_SYMBOLS.iter().map(|s| s.to_string()).collect();
        symbols.extend(content.iter().map(|s| s.as_ref().to_string()));
        Self::from_symbols(symbols)
    }

    /// Default printable symbols for a synthetic vocabulary of total size `size`.
    pub fn synthetic(size: usize) -> Result<Self> {
        if size <= FIRST_CONTENT_ID {
            return Err(Error::Config(format!("vocab size {size} leaves no room for content tokens after 3 specials")));
        }
        let content: Vec<String> = (0..size - FIRST_CONTENT_ID)
            .map(|i| if i < 26 { char::from(b'a' + i as u8).to_string() } else { format!("t{i}") })
            .collect();
        Self::new(&content)
    }

    fn from_symbols(symbols: Vec<String>) -> Result<Self> {
        for (id, special) in SPECIAL_SYMBOLS.iter().enumerate() {
            if symbols.get(id).map(String::as_str) != Some(*special) {
                return Err(Error::Config(format!("vocab line {id} must be {special}")));
            }
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (id, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("vocab symbol {id} is empty or has whitespace")));
            }
            if index.insert(s.clone(), id).is_some() {
                return Err(Error::Config(format!("duplicate vocab symbol {s:?}")));
            }
        }
        Ok(Vocab { symbols, index })
    }

    /// Reads a vocab file: one symbol per line, line number = token id.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_symbols(text.lines().map(str::to_string).collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.symbols.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn blank_id(&self) -> usize {
        BLANK_ID
    }

    pub fn unk_id(&self) -> usize {
        UNK_ID
    }

    pub fn sos_eos_id(&self) -> usize {
        SOS_EOS_ID
    }

    pub fn content_ids(&self) -> std::ops::Range<usize> {
        FIRST_CONTENT_ID..self.size()
    }

    pub fn symbol(&self, id: usize) -> Option<&str> {
        self.symbols.get(id).map(String::as_str)
    }

    pub fn id(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    /// Maps a space-separated transcript to ids. Unknown symbols become
    /// `unk` when `allow_unk` is set and are an error otherwise.
    pub fn encode(&self, transcript: &str, allow_unk: bool) -> Result<LabelSequence> {
        let mut tokens = Vec::new();
        for sym in transcript.split_whitespace() {
            match self.id(sym) {
                Some(id) if id == BLANK_ID || id == SOS_EOS_ID => {
                    return Err(Error::Ingest(format!("special symbol {sym:?} in transcript")))
                }
                Some(id) => tokens.push(id),
                None if allow_unk => tokens.push(UNK_ID),
                None => return Err(Error::Ingest(format!("out-of-vocabulary symbol {sym:?}"))),
            }
        }
        Ok(LabelSequence(tokens))
    }

    pub fn decode(&self, labels: &LabelSequence) -> Vec<String> {
        labels.iter().map(|&t| self.symbol(t).unwrap_or("<?>").to_string()).collect()
    }

    pub fn render(&self, labels: &LabelSequence) -> String {
        self.decode(labels).join(" ")
    }
}

/// Sequence of token ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSequence(Vec<usize>);

impl LabelSequence {
    pub fn new(tokens: Vec<usize>) -> Self {
        LabelSequence(tokens)
    }

    /// Rejects blank, sos/eos and out-of-range tokens.
    pub fn checked(tokens: Vec<usize>, vocab_size: usize) -> Result<Self> {
        if let Some(&bad) = tokens.iter().find(|&&t| t == BLANK_ID || t == SOS_EOS_ID || t >= vocab_size) {
            return Err(Error::Usage(format!("token {bad} is not a valid label for vocab size {vocab_size}")));
        }
        Ok(LabelSequence(tokens))
    }

    pub fn tokens(&self) -> &[usize] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// Copy of this prefix extended by one token.
    pub fn extended(&self, token: usize) -> Self {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(token);
        LabelSequence(v)
    }
}

impl From<Vec<usize>> for LabelSequence {
    fn from(v: Vec<usize>) -> Self {
        LabelSequence(v)
    }
}

impl fmt::Display for LabelSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specials_fixed() {
        let v = Vocab::synthetic(12).unwrap();
        assert_eq!(v.size(), 12);
        assert_eq!(v.symbol(0), Some("<blank>"));
        assert_eq!(v.id("a"), Some(3));
        assert_eq!(v.content_ids(), 3..12);
    }

    #[test]
    fn too_small_is_config_error() {
        assert!(matches!(Vocab::synthetic(3), Err(Error::Config(_))));
    }

    #[test]
    fn encode_unk_policy() {
        let v = Vocab::synthetic(6).unwrap();
        assert_eq!(v.encode("a zz c", true).unwrap().tokens(), &[3, 1, 5]);
        assert!(v.encode("a zz", false).is_err());
        assert!(v.encode("<blank>", true).is_err());
    }

    #[test]
    fn checked_rejects_specials() {
        assert!(LabelSequence::checked(vec![3, 0], 5).is_err());
        assert!(LabelSequence::checked(vec![2], 5).is_err());
        assert!(LabelSequence::checked(vec![5], 5).is_err());
        assert!(LabelSequence::checked(vec![1, 4], 5).is_ok());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let v = Vocab::synthetic(8).unwrap();
        v.save(&path).unwrap();
        assert_eq!(Vocab::load(&path).unwrap(), v);
    }

    #[test]
    fn bad_special_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        std::fs::write(&path, "<unk>\n<blank>\n<sos/eos>\na\n").unwrap();
        assert!(Vocab::load(&path).is_err());
    }
}
