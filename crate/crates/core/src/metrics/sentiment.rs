//! Lexicon sentiment. A student's score is the summed valence of every
//! matched token across their messages divided by the number of matched
//! tokens, so it always lies in `[-1, 1]`.

use std::collections::HashMap;

const DEFAULT_LEXICON: &str = include_str!("../../data/lexicon.tsv");

/// Summed valence and the number of tokens that contributed to it.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Valence {
    pub sum: f64,
    pub matched: u64,
}

impl Valence {
    pub fn add(self, other: Valence) -> Valence {
        Valence {
            sum: self.sum + other.sum,
            matched: self.matched + other.matched,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.matched == 0 {
            0.0
        } else {
            (self.sum / self.matched as f64).clamp(-1.0, 1.0)
        }
    }
}

/// Replaceable scorer; a model-backed analyzer can stand in for the lexicon.
pub trait SentimentAnalyzer: Send + Sync {
    fn valence(&self, text: &str) -> Valence;
}

#[derive(Clone, Debug)]
pub struct LexiconAnalyzer {
    entries: HashMap<String, f64>,
}

impl LexiconAnalyzer {
    /// Parses `token<TAB>valence` lines. Blank lines and `#` comments are
    /// skipped; valences are clamped to `[-1, 1]`.
    pub fn parse(tsv: &str) -> Result<Self, String> {
        let mut entries = HashMap::new();
        for (i, line) in tsv.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (token, value) = line
                .split_once('\t')
                .ok_or_else(|| format!("lexicon line {}: expected token<TAB>valence", i + 1))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| format!("lexicon line {}: bad valence {value:?}", i + 1))?;
            entries.insert(token.trim().to_lowercase(), v.clamp(-1.0, 1.0));
        }
        Ok(Self { entries })
    }

    pub fn shipped() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("shipped lexicon parses")
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }
}

impl SentimentAnalyzer for LexiconAnalyzer {
    fn valence(&self, text: &str) -> Valence {
        let mut out = Valence::default();
        for token in text.split(|c: char| !(c.is_alphanumeric() || c == '\'')) {
            let token = token.trim_matches('\'').to_lowercase();
            if let Some(v) = self.entries.get(&token) {
                out.sum += v;
                out.matched += 1;
            }
        }
        out
    }
}

/// Sentiment over a set of texts; 0 when nothing matched.
pub fn sentiment_score<'a>(
    analyzer: &dyn SentimentAnalyzer,
    texts: impl IntoIterator<Item = &'a str>,
) -> (f64, Valence) {
    let total = texts
        .into_iter()
        .map(|t| analyzer.valence(t))
        .fold(Valence::default(), Valence::add);
    (total.mean(), total)
}
