use serde::{Deserialize, Serialize};

/// Rule-based sentence splitter: a sentence ends at a whitespace-delimited
/// token ending in `.`, `!`, `?` or `…` (optionally followed by closing
/// quotes or brackets), unless the token is a guarded abbreviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceSplitter {
    pub abbreviations: Vec<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        let abbreviations = [
            "z.B.", "e.g.", "i.e.", "etc.", "cf.", "vs.", "viz.", "Mr.", "Mrs.", "Ms.", "Dr.",
            "Prof.", "St.", "d.h.", "u.a.", "bzw.", "vgl.", "ca.", "Nr.", "no.", "p.", "pp.",
            "fig.", "ch.", "sg.", "pl.", "nom.", "acc.", "dat.", "gen.", "masc.", "fem.", "neut.",
        ];
        SentenceSplitter {
            abbreviations: abbreviations.iter().map(|s| s.to_string()).collect(),
        }
    }
}

const CLOSERS: &[char] = &['"', '\'', '\u{201d}', '\u{2019}', '\u{bb}', ')', ']'];
const OPENERS: &[char] = &['"', '\'', '\u{201c}', '\u{2018}', '\u{ab}', '(', '['];
const TERMINALS: &[char] = &['.', '!', '?', '\u{2026}'];

impl SentenceSplitter {
    fn is_abbreviation(&self, token: &str) -> bool {
        let t = token.trim_start_matches(OPENERS);
        self.abbreviations.iter().any(|a| a.eq_ignore_ascii_case(t))
    }

    fn ends_sentence(&self, token: &str) -> bool {
        let core = token.trim_end_matches(CLOSERS);
        core.ends_with(TERMINALS) && !self.is_abbreviation(core)
    }

    pub fn split(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut current: Vec<&str> = Vec::new();
        for token in text.split_whitespace() {
            current.push(token);
            if self.ends_sentence(token) {
                out.push(current.join(" "));
                current.clear();
            }
        }
        if !current.is_empty() {
            out.push(current.join(" "));
        }
        out
    }
}

/// Split with the default abbreviation guards.
pub fn split_sentences(text: &str) -> Vec<String> {
    SentenceSplitter::default().split(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_sentences() {
        assert_eq!(
            split_sentences("D'Kaz schléift. De Muppe spillt."),
            vec!["D'Kaz schléift.", "De Muppe spillt."]
        );
    }

    #[test]
    fn abbreviation_guard() {
        assert_eq!(split_sentences("z.B. hei"), vec!["z.B. hei"]);
        assert_eq!(
            split_sentences("Articles (e.g. den) vary. Done!"),
            vec!["Articles (e.g. den) vary.", "Done!"]
        );
    }

    #[test]
    fn empty_and_quotes() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   \n ").is_empty());
        assert_eq!(
            split_sentences("He said \"Moien.\" Then left"),
            vec!["He said \"Moien.\"", "Then left"]
        );
    }

    proptest! {
        #[test]
        fn concatenation_preserves_text(s in "[a-zA-Z .!?\n]{0,80}") {
            let joined = split_sentences(&s).join(" ");
            let expect: Vec<&str> = s.split_whitespace().collect();
            prop_assert_eq!(joined, expect.join(" "));
        }
    }
}
