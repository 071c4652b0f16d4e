//! Emotion and toxicity scoring of video text channels.
//!
//! Two scorers sit behind [`Scorer`]: the hermetic lexicon stub and a client
//! for an external scoring service speaking a small JSON protocol.

mod lexicon;
mod service;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::model::{CrawlFormat, VideoId, VideoMeta};

pub use lexicon::{tokenize, Lexicon, LexiconError, StubScorer, TOXICITY_GAIN};
pub use service::{ServiceClient, ServiceConfig, SCORER_URL_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionClass {
    Anger,
    Disgust,
    Fear,
    Joy,
    Neutral,
    Sadness,
    Surprise,
}

impl EmotionClass {
    pub const ALL: [EmotionClass; 7] = [
        EmotionClass::Anger,
        EmotionClass::Disgust,
        EmotionClass::Fear,
        EmotionClass::Joy,
        EmotionClass::Neutral,
        EmotionClass::Sadness,
        EmotionClass::Surprise,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionClass::Anger => "anger",
            EmotionClass::Disgust => "disgust",
            EmotionClass::Fear => "fear",
            EmotionClass::Joy => "joy",
            EmotionClass::Neutral => "neutral",
            EmotionClass::Sadness => "sadness",
            EmotionClass::Surprise => "surprise",
        }
    }
}

impl fmt::Display for EmotionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmotionClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EmotionClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown emotion class {s:?}"))
    }
}

/// Distribution over the seven emotion classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionScores {
    pub anger: f64,
    pub disgust: f64,
    pub fear: f64,
    pub joy: f64,
    pub neutral: f64,
    pub sadness: f64,
    pub surprise: f64,
}

impl EmotionScores {
    pub const NEUTRAL: EmotionScores = EmotionScores {
        anger: 0.0,
        disgust: 0.0,
        fear: 0.0,
        joy: 0.0,
        neutral: 1.0,
        sadness: 0.0,
        surprise: 0.0,
    };

    pub fn from_array(v: [f64; 7]) -> Self {
        EmotionScores {
            anger: v[0],
            disgust: v[1],
            fear: v[2],
            joy: v[3],
            neutral: v[4],
            sadness: v[5],
            surprise: v[6],
        }
    }

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.anger,
            self.disgust,
            self.fear,
            self.joy,
            self.neutral,
            self.sadness,
            self.surprise,
        ]
    }

    pub fn get(&self, class: EmotionClass) -> f64 {
        self.to_array()[class.index()]
    }

    pub fn sum(&self) -> f64 {
        self.to_array().iter().sum()
    }

    /// Scales non-negative weights to a distribution. All-zero weights give
    /// the neutral distribution.
    pub fn normalized(weights: [f64; 7]) -> Self {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return EmotionScores::NEUTRAL;
        }
        EmotionScores::from_array(weights.map(|w| w / total))
    }

    /// Component-wise mean; neutral for an empty slice.
    pub fn mean(items: &[EmotionScores]) -> Self {
        if items.is_empty() {
            return EmotionScores::NEUTRAL;
        }
        let mut acc = [0.0; 7];
        for s in items {
            for (a, v) in acc.iter_mut().zip(s.to_array()) {
                *a += v;
            }
        }
        EmotionScores::from_array(acc.map(|a| a / items.len() as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToxicityScores {
    pub toxicity: f64,
}

impl ToxicityScores {
    pub fn mean(items: &[ToxicityScores]) -> Self {
        if items.is_empty() {
            return ToxicityScores { toxicity: 0.0 };
        }
        ToxicityScores {
            toxicity: items.iter().map(|t| t.toxicity).sum::<f64>() / items.len() as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Title,
    Description,
    Transcript,
    Comments,
    /// Title and description concatenated; the only channel scored for shorts.
    TitleDescription,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::Title,
        Channel::Description,
        Channel::Transcript,
        Channel::Comments,
        Channel::TitleDescription,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Title => "title",
            Channel::Description => "description",
            Channel::Transcript => "transcript",
            Channel::Comments => "comments",
            Channel::TitleDescription => "title_description",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Channel::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown channel {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScores {
    pub video_id: VideoId,
    pub channel: Channel,
    pub emotion: EmotionScores,
    pub toxicity: ToxicityScores,
}

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("scoring service unavailable after {attempts} attempts: {cause}")]
    ServiceUnavailable { attempts: usize, cause: String },
    #[error("scoring service protocol error: {0}")]
    Protocol(String),
    #[error("batch of {got} texts exceeds the configured maximum of {max}")]
    BatchTooLarge { got: usize, max: usize },
}

/// Anything that can score a batch of texts.
pub trait Scorer: Sync {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<(EmotionScores, ToxicityScores)>, ScoringError>;
}

/// Which channels to score for a video of the given crawl format.
///
/// Shorts are scored on title plus description only: their audio is mostly
/// music, so transcripts and comment pools are not used.
pub fn channel_texts(meta: &VideoMeta, format: CrawlFormat) -> Vec<(Channel, Vec<String>)> {
    match format {
        CrawlFormat::Shorts => vec![(
            Channel::TitleDescription,
            vec![format!("{} {}", meta.title, meta.description)],
        )],
        CrawlFormat::LongForm => {
            let mut out = vec![
                (Channel::Title, vec![meta.title.clone()]),
                (Channel::Description, vec![meta.description.clone()]),
            ];
            if let Some(t) = &meta.transcript {
                out.push((Channel::Transcript, vec![t.clone()]));
            }
            if !meta.comments.is_empty() {
                out.push((Channel::Comments, meta.comments.clone()));
            }
            out
        }
    }
}

/// Scores every channel of every video. Multi-text channels (comments) are
/// scored per text and averaged. Output order follows `videos`, then channel.
pub fn score_videos<S: Scorer + ?Sized>(
    scorer: &S,
    videos: &[(VideoMeta, CrawlFormat)],
    exec: Exec,
) -> Result<Vec<ChannelScores>, ScoringError> {
    let per_video = exec.try_map(videos, |(meta, format)| {
        channel_texts(meta, *format)
            .into_iter()
            .map(|(channel, texts)| {
                let scored = scorer.score_batch(&texts)?;
                let (emotions, toxicities): (Vec<_>, Vec<_>) = scored.into_iter().unzip();
                Ok(ChannelScores {
                    video_id: meta.id.clone(),
                    channel,
                    emotion: EmotionScores::mean(&emotions),
                    toxicity: ToxicityScores::mean(&toxicities),
                })
            })
            .collect::<Result<Vec<_>, ScoringError>>()
    })?;
    Ok(per_video.into_iter().flatten().collect())
}
