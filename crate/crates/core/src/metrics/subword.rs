use super::MetricError;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

/// Word-boundary marker prefixed to every word.
pub const BOUNDARY: char = '\u{2581}';
/// Required unknown-token entry in a vocabulary file.
pub const UNK: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubwordToken {
    pub piece: String,
    /// Vocabulary rank; `None` for characters outside the vocabulary.
    pub id: Option<u32>,
}

/// Ranked subword vocabulary: one token per line, rank = 0-based line number.
#[derive(Debug, Clone)]
pub struct SubwordVocab {
    ranks: HashMap<String, u32>,
    max_chars: usize,
    unk_id: u32,
}

impl SubwordVocab {
    pub fn parse(text: &str, origin: &str) -> Result<Self, MetricError> {
        let mut ranks = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let tok = line.trim_end_matches('\r');
            if tok.is_empty() {
                continue;
            }
            ranks.entry(tok.to_string()).or_insert(i as u32);
        }
        let unk_id = *ranks.get(UNK).ok_or_else(|| MetricError::VocabMissing {
            path: origin.to_string(),
            reason: format!("no {UNK} entry"),
        })?;
        let max_chars = ranks.keys().map(|k| k.chars().count()).max().unwrap_or(1);
        Ok(SubwordVocab {
            ranks,
            max_chars,
            unk_id,
        })
    }

    pub fn load(path: &Path) -> Result<Self, MetricError> {
        let text = std::fs::read_to_string(path).map_err(|e| MetricError::VocabMissing {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    pub fn rank(&self, piece: &str) -> Option<u32> {
        self.ranks.get(piece).copied()
    }

    /// Greedy longest-match segmentation. Spaces become boundary markers
    /// and the text is prefixed with one.
    pub fn encode(&self, text: &str) -> Vec<SubwordToken> {
        if text.is_empty() {
            return Vec::new();
        }
        let chars: Vec<char> = std::iter::once(BOUNDARY)
            .chain(text.chars().map(|c| if c == ' ' { BOUNDARY } else { c }))
            .collect();
        let mut out = Vec::new();
        let mut i = 0;
        let mut buf = String::new();
        while i < chars.len() {
            let longest = self.max_chars.min(chars.len() - i);
            let mut hit = None;
            for len in (1..=longest).rev() {
                buf.clear();
                buf.extend(&chars[i..i + len]);
                if let Some(&id) = self.ranks.get(buf.as_str()) {
                    hit = Some((len, id));
                    break;
                }
            }
            match hit {
                Some((len, id)) => {
                    out.push(SubwordToken {
                        piece: chars[i..i + len].iter().collect(),
                        id: Some(id),
                    });
                    i += len;
                }
                None => {
                    out.push(SubwordToken {
                        piece: chars[i].to_string(),
                        id: None,
                    });
                    i += 1;
                }
            }
        }
        out
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.encode(text).into_iter().map(|t| t.piece).collect()
    }
}

/// Inverse of [`SubwordVocab::tokenize`].
pub fn detokenize<S: AsRef<str>>(pieces: &[S]) -> String {
    let joined: String = pieces.iter().map(|p| p.as_ref()).collect();
    let spaced = joined.replace(BOUNDARY, " ");
    spaced.strip_prefix(' ').unwrap_or(&spaced).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> SubwordVocab {
        SubwordVocab::parse("<unk>\n▁mo\nien\n▁\nm\no\ni\ne\nn\n", "test").unwrap()
    }

    #[test]
    fn longest_match() {
        let v = vocab();
        assert_eq!(v.tokenize("moien"), ["▁mo", "ien"]);
        assert_eq!(v.rank("▁mo"), Some(1));
        assert_eq!(v.encode("moien")[1].id, Some(2));
    }

    #[test]
    fn unknown_characters() {
        let toks = vocab().encode("xy");
        assert_eq!(toks.len(), 3);
        assert_eq!(toks[1], SubwordToken { piece: "x".into(), id: None });
        assert_eq!(detokenize(&vocab().tokenize("xy")), "xy");
    }

    #[test]
    fn empty_and_roundtrip() {
        let v = vocab();
        assert!(v.tokenize("").is_empty());
        for s in ["moien moien", "  mo ", "nie", " "] {
            assert_eq!(detokenize(&v.tokenize(s)), s);
        }
    }

    #[test]
    fn missing_unk() {
        assert!(matches!(SubwordVocab::parse("a\nb\n", "x"), Err(MetricError::VocabMissing { .. })));
        assert!(matches!(
            SubwordVocab::load(Path::new("/nonexistent/vocab.txt")),
            Err(MetricError::VocabMissing { .. })
        ));
    }
}
