//! Shared domain types: video identity, crawl configuration, harvested records
//! and the crawl-time arithmetic every other module leans on.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Origin that relative hrefs are resolved against.
pub const ORIGIN: &str = "https://www.youtube.com";
const WATCH_PREFIX: &str = "/watch?v=";
const SHORTS_PREFIX: &str = "/shorts/";

pub const VIDEO_ID_MIN_LEN: usize = 5;
pub const VIDEO_ID_MAX_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VideoIdError {
    #[error("video id has length {0}, expected {VIDEO_ID_MIN_LEN}..={VIDEO_ID_MAX_LEN}")]
    Length(usize),
    #[error("video id contains invalid character {0:?}")]
    Char(char),
}

/// A platform video identifier: 5 to 32 URL-safe characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VideoId(String);

impl VideoId {
    pub fn new(value: impl Into<String>) -> Result<Self, VideoIdError> {
        let value = value.into();
        let len = value.chars().count();
        if !(VIDEO_ID_MIN_LEN..=VIDEO_ID_MAX_LEN).contains(&len) {
            return Err(VideoIdError::Length(len));
        }
        if let Some(c) = value.chars().find(|c| !is_id_char(*c)) {
            return Err(VideoIdError::Char(c));
        }
        Ok(VideoId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn is_id_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '-' || c == '_'
}

impl fmt::Display for VideoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for VideoId {
    type Err = VideoIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VideoId::new(s)
    }
}

impl TryFrom<String> for VideoId {
    type Error = VideoIdError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        VideoId::new(value)
    }
}

impl From<VideoId> for String {
    fn from(id: VideoId) -> Self {
        id.0
    }
}

impl AsRef<str> for VideoId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Absolute long-form watch URL for `id`.
pub fn watch_url(id: &VideoId) -> String {
    format!("{ORIGIN}{WATCH_PREFIX}{id}")
}

/// Absolute short-form URL for `id`.
pub fn shorts_url(id: &VideoId) -> String {
    format!("{ORIGIN}{SHORTS_PREFIX}{id}")
}

/// Pulls the video id out of a watch or shorts URL, absolute or relative.
///
/// Anything after the id (further query parameters, fragments, path
/// segments) is dropped. Returns `None` for any other link shape, including
/// playlist links, or when the token is not a valid [`VideoId`].
pub fn extract_video_id(url: &str) -> Option<VideoId> {
    let url = url.trim();
    let path = if url.starts_with('/') {
        url
    } else {
        url.strip_prefix(ORIGIN)?
    };
    let token = if let Some(rest) = path.strip_prefix(WATCH_PREFIX) {
        rest.split(['&', '#']).next()?
    } else {
        let rest = path.strip_prefix(SHORTS_PREFIX)?;
        rest.split(['?', '#', '/', '&']).next()?
    };
    VideoId::new(token).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VideoKind {
    Regular,
    Short,
    Ad,
    Playlist,
    LiveStream,
}

impl VideoKind {
    pub const ALL: [VideoKind; 5] = [
        VideoKind::Regular,
        VideoKind::Short,
        VideoKind::Ad,
        VideoKind::Playlist,
        VideoKind::LiveStream,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VideoKind::Regular => "regular",
            VideoKind::Short => "short",
            VideoKind::Ad => "ad",
            VideoKind::Playlist => "playlist",
            VideoKind::LiveStream => "live",
        }
    }
}

impl fmt::Display for VideoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VideoKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VideoKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown video kind {s:?}"))
    }
}

/// Identity, text channels and engagement counters of one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub id: VideoId,
    pub kind: VideoKind,
    pub title: String,
    pub description: String,
    pub transcript: Option<String>,
    pub comments: Vec<String>,
    pub views: u64,
    pub likes: u64,
    pub comment_count: u64,
    /// Set when the uploader turned comments off. Distinct from a video that
    /// simply has no comments yet.
    pub comments_disabled: bool,
    pub duration_s: f64,
}

impl VideoMeta {
    /// Checks the cross-field invariants.
    pub fn check(&self) -> Result<(), String> {
        if self.comments_disabled && (self.comment_count != 0 || !self.comments.is_empty()) {
            return Err(format!("{}: comments disabled but comments present", self.id));
        }
        if self.duration_s <= 0.0 || !self.duration_s.is_finite() {
            return Err(format!("{}: non-positive duration", self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrawlFormat {
    Shorts,
    #[serde(rename = "long")]
    LongForm,
}

impl CrawlFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            CrawlFormat::Shorts => "shorts",
            CrawlFormat::LongForm => "long",
        }
    }
}

impl fmt::Display for CrawlFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CrawlFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shorts" => Ok(CrawlFormat::Shorts),
            "long" | "longform" => Ok(CrawlFormat::LongForm),
            other => Err(format!("unknown crawl format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stagger {
    #[serde(rename = "sync")]
    Synchronized,
    #[serde(rename = "even")]
    EvenOffset,
}

impl FromStr for Stagger {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sync" => Ok(Stagger::Synchronized),
            "even" => Ok(Stagger::EvenOffset),
            other => Err(format!("unknown stagger mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Sim,
    #[serde(rename = "live")]
    LiveAdapter,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sim" => Ok(BackendKind::Sim),
            "live" => Ok(BackendKind::LiveAdapter),
            other => Err(format!("unknown backend {other:?}")),
        }
    }
}

/// Longest recommendation list a long-form crawl may ask for without
/// scrolling the column.
pub const MAX_BREADTH: usize = 10;
pub const DEFAULT_BREADTH: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("workers must be at least 1")]
    ZeroWorkers,
    #[error("max_retries must be at least 1")]
    ZeroRetries,
    #[error("shorts crawls walk a chain; breadth must be 1, got {0}")]
    ShortsBreadth(usize),
    #[error("long-form breadth must be in 1..={MAX_BREADTH}, got {0}")]
    LongFormBreadth(usize),
    #[error("dwell must be a finite non-negative number of seconds")]
    Dwell,
    #[error("no root videos")]
    NoRoots,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlConfig {
    pub format: CrawlFormat,
    pub roots: Vec<VideoId>,
    pub depth: usize,
    pub breadth: usize,
    pub dwell_s: f64,
    pub workers: usize,
    pub stagger: Stagger,
    pub max_retries: usize,
    pub backend: BackendKind,
    /// Nominal per-page load time used for the long-form estimate. When
    /// unset, the runner takes it from the backend.
    pub page_load_s: Option<f64>,
}

impl CrawlConfig {
    pub fn shorts(roots: Vec<VideoId>, depth: usize, dwell_s: f64, workers: usize) -> Self {
        CrawlConfig {
            format: CrawlFormat::Shorts,
            roots,
            depth,
            breadth: 1,
            dwell_s,
            workers,
            stagger: Stagger::Synchronized,
            max_retries: 3,
            backend: BackendKind::Sim,
            page_load_s: None,
        }
    }

    pub fn long_form(roots: Vec<VideoId>, depth: usize, breadth: usize, workers: usize) -> Self {
        CrawlConfig {
            format: CrawlFormat::LongForm,
            roots,
            depth,
            breadth,
            dwell_s: 0.0,
            workers,
            stagger: Stagger::Synchronized,
            max_retries: 3,
            backend: BackendKind::Sim,
            page_load_s: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.roots.is_empty() {
            return Err(ConfigError::NoRoots);
        }
        if self.depth == 0 {
            return Err(ConfigError::ZeroDepth);
        }
        if self.workers == 0 {
            return Err(ConfigError::ZeroWorkers);
        }
        if self.max_retries == 0 {
            return Err(ConfigError::ZeroRetries);
        }
        if !(self.dwell_s.is_finite() && self.dwell_s >= 0.0) {
            return Err(ConfigError::Dwell);
        }
        match self.format {
            CrawlFormat::Shorts if self.breadth != 1 => Err(ConfigError::ShortsBreadth(self.breadth)),
            CrawlFormat::LongForm if !(1..=MAX_BREADTH).contains(&self.breadth) => {
                Err(ConfigError::LongFormBreadth(self.breadth))
            }
            _ => Ok(()),
        }
    }

    pub fn dwell(&self) -> Duration {
        Duration::from_secs_f64(self.dwell_s.max(0.0))
    }
}

/// Lower bound on crawl wall time, in seconds, assuming perfect parallelism.
///
/// Shorts: `ceil(R/N) * D * W`. Long-form: `ceil(R/N) * (1 + B + ... + B^(D-1)) * L`,
/// where `L` is the nominal page load (`page_load_s`, zero when unset).
pub fn theoretical_duration(config: &CrawlConfig) -> f64 {
    let workers = config.workers.max(1);
    let roots_per_worker = config.roots.len().div_ceil(workers) as f64;
    match config.format {
        CrawlFormat::Shorts => roots_per_worker * config.depth as f64 * config.dwell_s,
        CrawlFormat::LongForm => {
            let load = config.page_load_s.unwrap_or(0.0);
            roots_per_worker * pages_per_root(config.breadth, config.depth) as f64 * load
        }
    }
}

/// Pages opened per long-form root: every node above the last level.
pub fn pages_per_root(breadth: usize, depth: usize) -> u64 {
    (0..depth).map(|d| (breadth as u64).pow(d as u32)).sum()
}

/// One harvested edge of the recommendation graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationRecord {
    pub crawl_type: CrawlFormat,
    pub root_id: VideoId,
    pub parent_id: VideoId,
    pub video_id: VideoId,
    pub depth: usize,
    pub position: usize,
    pub worker_id: usize,
    pub dwell_s: f64,
    pub is_ad: bool,
    #[serde(rename = "fetched_at_ms")]
    pub fetched_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub wall_s: f64,
    pub theoretical_s: f64,
    pub overhead_ratio: f64,
    pub workers: usize,
    pub speedup_vs_single: f64,
}

impl TimingReport {
    /// `single_worker_s` is the theoretical single-worker time the speedup is
    /// measured against.
    pub fn new(wall_s: f64, theoretical_s: f64, workers: usize, single_worker_s: f64) -> Self {
        let overhead_ratio = if theoretical_s > 0.0 {
            (wall_s / theoretical_s - 1.0).max(0.0)
        } else {
            0.0
        };
        let speedup_vs_single = if wall_s > 0.0 && single_worker_s > 0.0 {
            single_worker_s / wall_s
        } else {
            1.0
        };
        TimingReport {
            wall_s,
            theoretical_s,
            overhead_ratio,
            workers,
            speedup_vs_single,
        }
    }
}
