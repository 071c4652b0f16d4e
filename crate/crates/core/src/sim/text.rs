//! Phrase bank used to synthesize titles, descriptions, transcripts and
//! comments. Emotion words are the single-class, unit-weight entries of the
//! builtin scoring lexicon, so the stub scorer reads back exactly what the
//! generator wrote.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::scoring::{EmotionClass, Lexicon};

/// Words with no lexicon entry and no flag.
pub const FILLER: &[&str] = &[
    "video", "today", "about", "channel", "update", "news", "the", "and", "with", "river", "island", "report",
    "season", "coast", "policy", "market", "ship", "court", "talk", "episode", "review", "guide", "plan", "map",
    "city", "harbor", "week", "story", "people", "water", "line", "north", "south", "trade", "team", "part", "history",
    "live", "full",
];

/// Ad copy: filler only, so ads score as fully neutral.
pub const AD_WORDS: &[&str] = &[
    "sponsored",
    "offer",
    "shop",
    "now",
    "deal",
    "free",
    "shipping",
    "order",
    "limited",
    "app",
];

#[derive(Debug, Clone)]
pub struct PhraseBank {
    words: [Vec<String>; 7],
    flags: Vec<String>,
}

impl PhraseBank {
    pub fn from_lexicon(lexicon: &Lexicon) -> Self {
        let words = EmotionClass::ALL.map(|c| {
            if c == EmotionClass::Neutral {
                FILLER.iter().map(|w| w.to_string()).collect()
            } else {
                lexicon.pure_words(c).into_iter().map(str::to_string).collect()
            }
        });
        let flags = lexicon.flags().into_iter().map(str::to_string).collect();
        PhraseBank { words, flags }
    }

    pub fn builtin() -> Self {
        PhraseBank::from_lexicon(&Lexicon::builtin())
    }

    pub fn words(&self, class: EmotionClass) -> &[String] {
        &self.words[class.index()]
    }

    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    /// `n` tokens; each is a flagged word with probability `toxic_density`,
    /// otherwise a word of a class drawn in proportion to `weights`.
    pub fn sentence<R: Rng>(&self, rng: &mut R, n: usize, weights: &[f64; 7], toxic_density: f64) -> String {
        let total: f64 = weights.iter().sum();
        let mut out: Vec<&str> = Vec::with_capacity(n);
        for _ in 0..n {
            let flag_draw: f64 = rng.gen();
            let class_draw: f64 = rng.gen::<f64>() * total;
            if flag_draw < toxic_density && !self.flags.is_empty() {
                out.push(self.flags.choose(rng).unwrap());
                continue;
            }
            let class = pick_class(weights, class_draw);
            let bank = &self.words[class.index()];
            out.push(bank.choose(rng).map(String::as_str).unwrap_or("video"));
        }
        out.join(" ")
    }

    pub fn ad_copy<R: Rng>(&self, rng: &mut R, n: usize) -> String {
        (0..n)
            .map(|_| *AD_WORDS.choose(rng).unwrap())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn pick_class(weights: &[f64; 7], mut draw: f64) -> EmotionClass {
    for c in EmotionClass::ALL {
        let w = weights[c.index()];
        if draw < w {
            return c;
        }
        draw -= w;
    }
    EmotionClass::Neutral
}
