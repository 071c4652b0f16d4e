//! Depth-wise summaries of a crawl: engagement box statistics on a log
//! scale, emotion and toxicity series per text channel, trend detection and
//! ad periodicity.
//!
//! Every aggregate counts record occurrences, so a video recommended twice at
//! one depth weighs twice.

mod ads;
mod report;
pub mod stats;

use std::collections::{BTreeMap, HashMap};

use log::warn;
use serde::Serialize;
use thiserror::Error;

use crate::exec::Exec;
use crate::model::{RecommendationRecord, VideoId, VideoKind, VideoMeta};
use crate::scoring::{Channel, ChannelScores, EmotionClass};

pub use ads::{detect_ad_period, detect_ad_period_scored, MIN_MATCH};
pub use report::{build_report, write_report, AdChainRow, Report, REPORT_FILES};
pub use stats::BoxStats;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no metadata for video {0}")]
    MissingMetadata(VideoId),
    #[error("trend needs at least 3 points, got {0}")]
    SeriesTooShort(usize),
    #[error("tail quantile must be in (0, 1), got {0}")]
    BadQuantile(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Count ad records in the engagement aggregates.
    pub include_ads: bool,
    pub tail_q: f64,
    /// `|rho|` below this is a flat trend.
    pub flat_threshold: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            include_ads: false,
            tail_q: 0.9,
            flat_threshold: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngagementMetric {
    Views,
    Likes,
    Comments,
}

impl EngagementMetric {
    pub const ALL: [EngagementMetric; 3] = [
        EngagementMetric::Views,
        EngagementMetric::Likes,
        EngagementMetric::Comments,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EngagementMetric::Views => "views",
            EngagementMetric::Likes => "likes",
            EngagementMetric::Comments => "comments",
        }
    }

    pub fn value(self, meta: &VideoMeta) -> u64 {
        match self {
            EngagementMetric::Views => meta.views,
            EngagementMetric::Likes => meta.likes,
            EngagementMetric::Comments => meta.comment_count,
        }
    }
}

/// Box statistics of one metric at one depth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthAggregate {
    pub depth: usize,
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub min: f64,
    pub max: f64,
    pub outlier_count: usize,
}

impl DepthAggregate {
    fn new(depth: usize, metric: &str, b: BoxStats) -> Self {
        DepthAggregate {
            depth,
            metric: metric.to_string(),
            n: b.n,
            mean: b.mean,
            median: b.median,
            q1: b.q1,
            q3: b.q3,
            whisker_lo: b.whisker_lo,
            whisker_hi: b.whisker_hi,
            min: b.min,
            max: b.max,
            outlier_count: b.outlier_count,
        }
    }
}

fn by_depth(records: &[RecommendationRecord]) -> BTreeMap<usize, Vec<&RecommendationRecord>> {
    let mut out: BTreeMap<usize, Vec<&RecommendationRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.depth).or_default().push(r);
    }
    out
}

pub fn log_engagement(x: u64) -> f64 {
    (x as f64 + 1.0).log10()
}

/// Per depth and metric, box statistics of `log10(x + 1)`. Ordered by depth,
/// then views, likes, comments. Depths with no included record are omitted.
pub fn engagement_by_depth(
    records: &[RecommendationRecord],
    metadata: &[VideoMeta],
    include_ads: bool,
    exec: Exec,
) -> Result<Vec<DepthAggregate>, AnalysisError> {
    let meta: HashMap<&VideoId, &VideoMeta> = metadata.iter().map(|m| (&m.id, m)).collect();
    let mut buckets: BTreeMap<usize, Vec<&VideoMeta>> = BTreeMap::new();
    for r in records {
        let m = *meta
            .get(&r.video_id)
            .ok_or_else(|| AnalysisError::MissingMetadata(r.video_id.clone()))?;
        if !include_ads && (r.is_ad || m.kind == VideoKind::Ad) {
            continue;
        }
        buckets.entry(r.depth).or_default().push(m);
    }
    let max_depth = records.iter().map(|r| r.depth).max().unwrap_or(0);
    for d in 1..=max_depth {
        if !buckets.contains_key(&d) {
            warn!("engagement: depth {d} has no records, omitted");
        }
    }
    let buckets: Vec<(usize, Vec<&VideoMeta>)> = buckets.into_iter().collect();
    let per_depth = exec.map(&buckets, |(depth, metas)| {
        EngagementMetric::ALL
            .iter()
            .map(|metric| {
                let values: Vec<f64> = metas.iter().map(|m| log_engagement(metric.value(m))).collect();
                DepthAggregate::new(
                    *depth,
                    metric.as_str(),
                    BoxStats::from_values(&values).expect("bucket is non-empty"),
                )
            })
            .collect::<Vec<_>>()
    });
    Ok(per_depth.into_iter().flatten().collect())
}

fn channel_index(scores: &[ChannelScores], channel: Channel) -> HashMap<&VideoId, &ChannelScores> {
    scores
        .iter()
        .filter(|s| s.channel == channel)
        .map(|s| (&s.video_id, s))
        .collect()
}

/// Mean emotion distribution per depth for one channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmotionSeries {
    pub channel: Channel,
    pub depths: Vec<usize>,
    pub n: Vec<usize>,
    /// Indexed like [`EmotionClass::ALL`], each aligned with `depths`.
    pub classes: Vec<Vec<f64>>,
}

impl EmotionSeries {
    pub fn class(&self, class: EmotionClass) -> &[f64] {
        &self.classes[class.index()]
    }
}

/// Mean of each emotion class per depth, over the records whose video has a
/// score on `channel`. `None` when no record does.
pub fn emotion_by_depth(
    scores: &[ChannelScores],
    records: &[RecommendationRecord],
    channel: Channel,
) -> Option<EmotionSeries> {
    let index = channel_index(scores, channel);
    let mut series = EmotionSeries {
        channel,
        depths: Vec::new(),
        n: Vec::new(),
        classes: vec![Vec::new(); EmotionClass::ALL.len()],
    };
    for (depth, recs) in by_depth(records) {
        let hits: Vec<&ChannelScores> = recs.iter().filter_map(|r| index.get(&r.video_id).copied()).collect();
        if hits.is_empty() {
            continue;
        }
        series.depths.push(depth);
        series.n.push(hits.len());
        for class in EmotionClass::ALL {
            let m = hits.iter().map(|s| s.emotion.get(class)).sum::<f64>() / hits.len() as f64;
            series.classes[class.index()].push(m);
        }
    }
    (!series.depths.is_empty()).then_some(series)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToxicitySeries {
    pub channel: Channel,
    pub depths: Vec<usize>,
    pub n: Vec<usize>,
    pub mean: Vec<f64>,
    pub tail_mean: Vec<f64>,
    /// Bucket too small for the tail quantile; tail mean is the bucket max.
    pub low_n: Vec<bool>,
}

/// Mean of the `ceil((1 - q) n)` largest values, or the maximum with a
/// low-n flag when `n < 1 / (1 - q)`.
///
/// Taking the top share rather than "everything at or above the quantile"
/// keeps the tail the same size when most scores tie at zero.
pub fn tail_mean(values: &[f64], q: f64) -> (f64, bool) {
    if values.is_empty() {
        return (0.0, true);
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let share = 1.0 - q;
    if (v.len() as f64) + 1e-9 < 1.0 / share {
        return (v[0], true);
    }
    let k = ((share * v.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    (stats::mean(&v[..k]), false)
}

/// Overall and tail toxicity per depth for one channel.
pub fn toxicity_by_depth(
    scores: &[ChannelScores],
    records: &[RecommendationRecord],
    channel: Channel,
    tail_q: f64,
) -> Result<Option<ToxicitySeries>, AnalysisError> {
    if !(tail_q > 0.0 && tail_q < 1.0) {
        return Err(AnalysisError::BadQuantile(tail_q));
    }
    let index = channel_index(scores, channel);
    let mut series = ToxicitySeries {
        channel,
        depths: Vec::new(),
        n: Vec::new(),
        mean: Vec::new(),
        tail_mean: Vec::new(),
        low_n: Vec::new(),
    };
    for (depth, recs) in by_depth(records) {
        let values: Vec<f64> = recs
            .iter()
            .filter_map(|r| index.get(&r.video_id).map(|s| s.toxicity.toxicity))
            .collect();
        if values.is_empty() {
            continue;
        }
        let (tail, low) = tail_mean(&values, tail_q);
        if low {
            warn!("toxicity {channel}: depth {depth} has only {} scores", values.len());
        }
        series.depths.push(depth);
        series.n.push(values.len());
        series.mean.push(stats::mean(&values));
        series.tail_mean.push(tail);
        series.low_n.push(low);
    }
    Ok((!series.depths.is_empty()).then_some(series))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
    Flat,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Increasing => "increasing",
            Direction::Decreasing => "decreasing",
            Direction::Flat => "flat",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendSummary {
    pub metric: String,
    pub channel: Option<Channel>,
    pub slope_per_depth: f64,
    pub spearman_rho: f64,
    pub direction: Direction,
}

/// Least-squares slope and Spearman correlation of `values` against
/// `depths`. A constant series is flat with rho 0.
pub fn trend(
    metric: &str,
    channel: Option<Channel>,
    depths: &[usize],
    values: &[f64],
    flat_threshold: f64,
) -> Result<TrendSummary, AnalysisError> {
    if values.len() < 3 {
        return Err(AnalysisError::SeriesTooShort(values.len()));
    }
    let x: Vec<f64> = depths.iter().map(|&d| d as f64).collect();
    let rho = stats::spearman(&x, values);
    let direction = if rho.abs() < flat_threshold {
        Direction::Flat
    } else if rho > 0.0 {
        Direction::Increasing
    } else {
        Direction::Decreasing
    };
    Ok(TrendSummary {
        metric: metric.to_string(),
        channel,
        slope_per_depth: stats::ols_slope(&x, values),
        spearman_rho: rho,
        direction,
    })
}

/// [`trend`] over consecutive depths starting at 1.
pub fn trend_of(values: &[f64]) -> Result<TrendSummary, AnalysisError> {
    let depths: Vec<usize> = (1..=values.len()).collect();
    trend(
        "series",
        None,
        &depths,
        values,
        AnalysisOptions::default().flat_threshold,
    )
}

/// Ad flags of every shorts chain in `records`, keyed by root and ordered by
/// depth.
pub fn ad_flags_by_chain(records: &[RecommendationRecord]) -> BTreeMap<VideoId, Vec<bool>> {
    let mut chains: BTreeMap<VideoId, Vec<(usize, bool)>> = BTreeMap::new();
    for r in records {
        chains.entry(r.root_id.clone()).or_default().push((r.depth, r.is_ad));
    }
    chains
        .into_iter()
        .map(|(root, mut steps)| {
            steps.sort_by_key(|s| s.0);
            (root, steps.into_iter().map(|s| s.1).collect())
        })
        .collect()
}
