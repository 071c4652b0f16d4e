//! On-disk formats of a run directory.
//!
//! ```text
//! out/
//!   records.csv     one row per harvested recommendation
//!   metadata.csv    one row per distinct video
//!   scores.csv      one row per (video, text channel)
//!   timing.json     crawl timing and per-worker stats
//!   report/         analysis tables and plot data
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crawl::WorkerStats;
use crate::model::{extract_video_id, CrawlFormat, RecommendationRecord, TimingReport, VideoId, VideoKind, VideoMeta};
use crate::scoring::{Channel, ChannelScores, EmotionScores, ToxicityScores};

pub const RECORDS_FILE: &str = "records.csv";
pub const METADATA_FILE: &str = "metadata.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const TIMING_FILE: &str = "timing.json";
pub const REPORT_DIR: &str = "report";

pub const RECORDS_HEADER: [&str; 10] = [
    "crawl_type",
    "root_id",
    "parent_id",
    "video_id",
    "depth",
    "position",
    "worker_id",
    "dwell_s",
    "is_ad",
    "fetched_at_ms",
];

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("{}: invalid roots on lines {}", path.display(), render_lines(.lines))]
    InvalidRoots { path: PathBuf, lines: Vec<(u64, String)> },
}

fn render_lines(lines: &[(u64, String)]) -> String {
    lines
        .iter()
        .map(|(n, v)| format!("{n} ({v:?})"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl PersistError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PersistError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn csv(path: &Path, source: csv::Error) -> Self {
        PersistError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Writes `header` and one serialized row per item; LF line endings.
pub fn write_csv_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<usize, PersistError> {
    let file = File::create(path).map_err(|e| PersistError::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| PersistError::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| PersistError::csv(path, e))?;
    }
    w.flush().map_err(|e| PersistError::io(path, e))?;
    Ok(rows.len())
}

/// Reads rows after checking the header matches `header` exactly.
pub fn read_csv_rows<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>, PersistError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| PersistError::csv(path, e))?;
    let got = r.headers().map_err(|e| PersistError::csv(path, e))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(PersistError::Format {
            path: path.to_path_buf(),
            msg: format!("unexpected header {:?}", got.iter().collect::<Vec<_>>()),
        });
    }
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| PersistError::csv(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PersistError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| PersistError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| PersistError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PersistError> {
    let text = fs::read_to_string(path).map_err(|e| PersistError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| PersistError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_records_csv(records: &[RecommendationRecord], path: &Path) -> Result<usize, PersistError> {
    write_csv_rows(path, &RECORDS_HEADER, records)
}

pub fn read_records_csv(path: &Path) -> Result<Vec<RecommendationRecord>, PersistError> {
    read_csv_rows(path, &RECORDS_HEADER)
}

/// Reads root ids from a one-column CSV (optionally headed `video_id`) or a
/// plain one-per-line list. Watch and shorts URLs are accepted. Blank lines
/// and lines starting with `#` are skipped. Any invalid line rejects the
/// whole file, with every offending line listed.
pub fn read_roots(path: &Path) -> Result<Vec<VideoId>, PersistError> {
    let text = fs::read_to_string(path).map_err(|e| PersistError::io(path, e))?;
    let mut roots = Vec::new();
    let mut bad = Vec::new();
    let mut seen_data = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = first_csv_field(line);
        if !seen_data && field.eq_ignore_ascii_case("video_id") {
            seen_data = true;
            continue;
        }
        seen_data = true;
        match VideoId::new(field.as_str()).ok().or_else(|| extract_video_id(&field)) {
            Some(id) => roots.push(id),
            None => bad.push((line_no, field)),
        }
    }
    if !bad.is_empty() {
        return Err(PersistError::InvalidRoots {
            path: path.to_path_buf(),
            lines: bad,
        });
    }
    Ok(roots)
}

fn first_csv_field(line: &str) -> String {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(line.as_bytes());
    r.records()
        .next()
        .and_then(Result::ok)
        .and_then(|rec| rec.get(0).map(|f| f.trim().to_string()))
        .unwrap_or_else(|| line.to_string())
}

pub fn write_roots(roots: &[VideoId], path: &Path) -> Result<usize, PersistError> {
    let rows: Vec<(&str,)> = roots.iter().map(|r| (r.as_str(),)).collect();
    write_csv_rows(path, &["video_id"], &rows)
}

pub const METADATA_HEADER: [&str; 11] = [
    "video_id",
    "kind",
    "title",
    "description",
    "transcript",
    "comments_json",
    "views",
    "likes",
    "comment_count",
    "comments_disabled",
    "duration_s",
];

#[derive(Serialize, Deserialize)]
struct MetaRow {
    video_id: VideoId,
    kind: VideoKind,
    title: String,
    description: String,
    transcript: Option<String>,
    comments_json: String,
    views: u64,
    likes: u64,
    comment_count: u64,
    comments_disabled: bool,
    duration_s: f64,
}

pub fn write_metadata_csv(metadata: &[VideoMeta], path: &Path) -> Result<usize, PersistError> {
    let rows: Vec<MetaRow> = metadata
        .iter()
        .map(|m| MetaRow {
            video_id: m.id.clone(),
            kind: m.kind,
            title: m.title.clone(),
            description: m.description.clone(),
            transcript: m.transcript.clone(),
            comments_json: serde_json::to_string(&m.comments).expect("strings serialize"),
            views: m.views,
            likes: m.likes,
            comment_count: m.comment_count,
            comments_disabled: m.comments_disabled,
            duration_s: m.duration_s,
        })
        .collect();
    write_csv_rows(path, &METADATA_HEADER, &rows)
}

pub fn read_metadata_csv(path: &Path) -> Result<Vec<VideoMeta>, PersistError> {
    let rows: Vec<MetaRow> = read_csv_rows(path, &METADATA_HEADER)?;
    rows.into_iter()
        .map(|r| {
            let comments = serde_json::from_str(&r.comments_json).map_err(|source| PersistError::Json {
                path: path.to_path_buf(),
                source,
            })?;
            Ok(VideoMeta {
                id: r.video_id,
                kind: r.kind,
                title: r.title,
                description: r.description,
                transcript: r.transcript,
                comments,
                views: r.views,
                likes: r.likes,
                comment_count: r.comment_count,
                comments_disabled: r.comments_disabled,
                duration_s: r.duration_s,
            })
        })
        .collect()
}

pub const SCORES_HEADER: [&str; 10] = [
    "video_id", "channel", "anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise", "toxicity",
];

#[derive(Serialize, Deserialize)]
struct ScoreRow {
    video_id: VideoId,
    channel: Channel,
    anger: f64,
    disgust: f64,
    fear: f64,
    joy: f64,
    neutral: f64,
    sadness: f64,
    surprise: f64,
    toxicity: f64,
}

pub fn write_scores_csv(scores: &[ChannelScores], path: &Path) -> Result<usize, PersistError> {
    let rows: Vec<ScoreRow> = scores
        .iter()
        .map(|s| {
            let e = &s.emotion;
            ScoreRow {
                video_id: s.video_id.clone(),
                channel: s.channel,
                anger: e.anger,
                disgust: e.disgust,
                fear: e.fear,
                joy: e.joy,
                neutral: e.neutral,
                sadness: e.sadness,
                surprise: e.surprise,
                toxicity: s.toxicity.toxicity,
            }
        })
        .collect();
    write_csv_rows(path, &SCORES_HEADER, &rows)
}

pub fn read_scores_csv(path: &Path) -> Result<Vec<ChannelScores>, PersistError> {
    let rows: Vec<ScoreRow> = read_csv_rows(path, &SCORES_HEADER)?;
    Ok(rows
        .into_iter()
        .map(|r| ChannelScores {
            video_id: r.video_id,
            channel: r.channel,
            emotion: EmotionScores::from_array([r.anger, r.disgust, r.fear, r.joy, r.neutral, r.sadness, r.surprise]),
            toxicity: ToxicityScores { toxicity: r.toxicity },
        })
        .collect())
}

/// Contents of `timing.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingFile {
    pub format: CrawlFormat,
    pub roots: usize,
    pub depth: usize,
    pub breadth: usize,
    pub dwell_s: f64,
    #[serde(flatten)]
    pub timing: TimingReport,
    pub per_worker: Vec<WorkerStats>,
    pub failed_roots: Vec<VideoId>,
}

pub fn write_timing_json(timing: &TimingFile, path: &Path) -> Result<(), PersistError> {
    write_json(path, timing)
}

pub fn read_timing_json(path: &Path) -> Result<TimingFile, PersistError> {
    read_json(path)
}

/// Appends `line` (plus newline) to a text file, creating it if absent.
pub fn append_line(path: &Path, line: &str) -> Result<(), PersistError> {
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| PersistError::io(path, e))?;
    writeln!(f, "{line}").map_err(|e| PersistError::io(path, e))
}
