use std::collections::{HashMap, HashSet};
use std::path::Path;

use thiserror::Error;

use super::{EmotionClass, EmotionScores, Scorer, ScoringError, ToxicityScores};

const BUILTIN_LEXICON: &str = include_str!("../../data/emotion_lexicon.tsv");
const BUILTIN_FLAGS: &str = include_str!("../../data/toxic_flags.txt");

/// Multiplier applied to the flagged-token fraction before clamping.
pub const TOXICITY_GAIN: f64 = 5.0;
const NEUTRAL_PRIOR: f64 = 1.0;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Lower-cases, strips punctuation and splits on whitespace.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().filter_map(|raw| {
        let t: String = raw
            .chars()
            .filter(|c| !c.is_ascii_punctuation())
            .flat_map(char::to_lowercase)
            .collect();
        (!t.is_empty()).then_some(t)
    })
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    emotion: HashMap<String, Vec<(EmotionClass, f64)>>,
    flags: HashSet<String>,
}

impl Lexicon {
    pub fn builtin() -> Self {
        Lexicon::parse(BUILTIN_LEXICON, BUILTIN_FLAGS).expect("builtin lexicon parses")
    }

    pub fn load(lexicon: &Path, flags: &Path) -> Result<Self, LexiconError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| LexiconError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        Lexicon::parse(&read(lexicon)?, &read(flags)?)
    }

    /// Parses `token<TAB>class<TAB>weight` lines plus a one-token-per-line
    /// flag list. Blank lines and `#` comments are skipped in both.
    pub fn parse(lexicon: &str, flags: &str) -> Result<Self, LexiconError> {
        let mut emotion: HashMap<String, Vec<(EmotionClass, f64)>> = HashMap::new();
        for (i, line) in lexicon.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| LexiconError::Parse { line: line_no, msg };
            let fields: Vec<&str> = line.split('\t').collect();
            let [token, class, weight] = fields[..] else {
                return Err(err(format!("expected 3 tab-separated fields, got {}", fields.len())));
            };
            let class: EmotionClass = class.trim().parse().map_err(err)?;
            let weight: f64 = weight
                .trim()
                .parse()
                .map_err(|e| err(format!("bad weight {weight:?}: {e}")))?;
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(err(format!("weight must be non-negative, got {weight}")));
            }
            let token = tokenize(token).next().ok_or_else(|| err("empty token".to_string()))?;
            emotion.entry(token).or_default().push((class, weight));
        }
        let flags = flags
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| tokenize(l).next())
            .collect();
        Ok(Lexicon { emotion, flags })
    }

    pub fn is_flagged(&self, token: &str) -> bool {
        self.flags.contains(token)
    }

    pub fn weights(&self, token: &str) -> &[(EmotionClass, f64)] {
        self.emotion.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Tokens whose single entry is `class` with weight 1.
    pub fn pure_words(&self, class: EmotionClass) -> Vec<&str> {
        let mut words: Vec<&str> = self
            .emotion
            .iter()
            .filter(|(_, w)| w.len() == 1 && w[0] == (class, 1.0))
            .map(|(t, _)| t.as_str())
            .collect();
        words.sort_unstable();
        words
    }

    pub fn flags(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.flags.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

/// Deterministic lexicon-based stand-in for model scorers.
#[derive(Debug, Clone)]
pub struct StubScorer {
    lexicon: Lexicon,
}

impl StubScorer {
    pub fn new(lexicon: Lexicon) -> Self {
        StubScorer { lexicon }
    }

    pub fn builtin() -> Self {
        StubScorer::new(Lexicon::builtin())
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// Summed lexicon weights per class plus a neutral prior of one, normalized.
    pub fn score_emotion(&self, text: &str) -> EmotionScores {
        let mut acc = [0.0; 7];
        acc[EmotionClass::Neutral.index()] = NEUTRAL_PRIOR;
        for token in tokenize(text) {
            for &(class, w) in self.lexicon.weights(&token) {
                acc[class.index()] += w;
            }
        }
        EmotionScores::normalized(acc)
    }

    /// Flagged-token fraction times [`TOXICITY_GAIN`], clamped to [0, 1].
    pub fn score_toxicity(&self, text: &str) -> ToxicityScores {
        let (mut total, mut flagged) = (0usize, 0usize);
        for token in tokenize(text) {
            total += 1;
            if self.lexicon.is_flagged(&token) {
                flagged += 1;
            }
        }
        let frac = flagged as f64 / total.max(1) as f64;
        ToxicityScores {
            toxicity: (frac * TOXICITY_GAIN).clamp(0.0, 1.0),
        }
    }
}

impl Scorer for StubScorer {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<(EmotionScores, ToxicityScores)>, ScoringError> {
        Ok(texts
            .iter()
            .map(|t| (self.score_emotion(t), self.score_toxicity(t)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn emotion_examples() {
        let s = StubScorer::builtin();
        assert_eq!(s.score_emotion(""), EmotionScores::NEUTRAL);
        assert_eq!(s.score_emotion("qwzx blorp fnord"), EmotionScores::NEUTRAL);
        let joy = s.score_emotion("happy");
        assert_eq!(joy.joy, 0.5);
        assert_eq!(joy.neutral, 0.5);
        assert_eq!(joy.anger, 0.0);
    }

    #[test]
    fn tokenizer_is_case_and_punctuation_insensitive() {
        let s = StubScorer::builtin();
        assert_eq!(s.score_emotion("HAPPY!!!"), s.score_emotion("happy"));
        let toks: Vec<_> = tokenize("Hello, World... it's -- fine").collect();
        assert_eq!(toks, vec!["hello", "world", "its", "fine"]);
    }

    #[test]
    fn toxicity_examples() {
        let s = StubScorer::builtin();
        assert_eq!(s.score_toxicity("").toxicity, 0.0);
        assert_eq!(s.score_toxicity("idiot moron trash").toxicity, 1.0);
        let ten = "idiot a b c d e f g h i";
        assert_eq!(s.score_toxicity(ten).toxicity, 0.5);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Lexicon::parse("# c\nhappy\tjoy\t1\nbad line\n", "").unwrap_err();
        assert!(matches!(err, LexiconError::Parse { line: 3, .. }), "{err}");
        let err = Lexicon::parse("happy\tglee\t1\n", "").unwrap_err();
        assert!(matches!(err, LexiconError::Parse { line: 1, .. }));
        let err = Lexicon::parse("happy\tjoy\t-1\n", "").unwrap_err();
        assert!(matches!(err, LexiconError::Parse { line: 1, .. }));
    }

    #[test]
    fn builtin_has_every_non_neutral_class() {
        let lex = Lexicon::builtin();
        for c in EmotionClass::ALL {
            if c != EmotionClass::Neutral {
                assert!(lex.pure_words(c).len() >= 5, "{c}");
            }
        }
        assert!(lex.flags().len() >= 10);
    }

    proptest! {
        #[test]
        fn stub_scores_are_distributions(text in ".{0,200}") {
            let s = StubScorer::builtin();
            let e = s.score_emotion(&text);
            prop_assert!((e.sum() - 1.0).abs() < 1e-9);
            prop_assert!(e.to_array().iter().all(|v| (0.0..=1.0).contains(v)));
            let t = s.score_toxicity(&text).toxicity;
            prop_assert!((0.0..=1.0).contains(&t));
            prop_assert_eq!(e, s.score_emotion(&text));
        }

        #[test]
        fn appending_flag_never_lowers_toxicity(
            words in proptest::collection::vec("(idiot|river|boat|happy|trash|map)", 0..30),
        ) {
            let s = StubScorer::builtin();
            let text = words.join(" ");
            let before = s.score_toxicity(&text).toxicity;
            let after = s.score_toxicity(&format!("{text} idiot")).toxicity;
            prop_assert!(after >= before);
        }
    }
}
