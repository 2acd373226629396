//! Flesch reading ease with a vowel-group syllable heuristic.
//!
//! Words are whitespace-separated tokens containing at least one letter,
//! trimmed of surrounding punctuation. Sentences end at `.`, `!`, `?` or a
//! newline; a segment without words is not a sentence.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Readability {
    pub score: f64,
    pub words: u64,
    pub sentences: u64,
    pub syllables: u64,
}

impl Readability {
    /// Support is the word count.
    pub fn support(&self) -> u64 {
        self.words
    }
}

pub fn text_readability(body: &str) -> Readability {
    let mut words = 0u64;
    let mut sentences = 0u64;
    let mut syllables = 0u64;
    for segment in body.split(['.', '!', '?', '\n']) {
        let mut in_segment = 0u64;
        for token in segment.split_whitespace() {
            let word = token.trim_matches(|c: char| !c.is_alphanumeric());
            if !word.chars().any(char::is_alphabetic) {
                continue;
            }
            in_segment += 1;
            syllables += count_syllables(word);
        }
        if in_segment > 0 {
            words += in_segment;
            sentences += 1;
        }
    }
    if words == 0 {
        return Readability::default();
    }
    let w = words as f64;
    let score = 206.835 - 1.015 * (w / sentences as f64) - 84.6 * (syllables as f64 / w);
    Readability {
        score,
        words,
        sentences,
        syllables,
    }
}

/// Vowel groups (`aeiouy`), minus one for a silent trailing `e`, at least 1.
pub fn count_syllables(word: &str) -> u64 {
    let lower: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0u64;
    let mut prev = false;
    for &c in &lower {
        let v = is_vowel(c);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    let silent_e = lower.len() > 1
        && lower.last() == Some(&'e')
        && !is_vowel(lower[lower.len() - 2]);
    if silent_e && groups > 1 {
        groups -= 1;
    }
    groups.max(1)
}
