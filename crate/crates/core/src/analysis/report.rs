//! Report tables and plot data.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{
    ad_flags_by_chain, detect_ad_period_scored, emotion_by_depth, engagement_by_depth, toxicity_by_depth, trend,
    AnalysisError, AnalysisOptions, DepthAggregate, EmotionSeries, ToxicitySeries, TrendSummary,
};
use crate::exec::Exec;
use crate::model::{CrawlFormat, RecommendationRecord, VideoId, VideoMeta};
use crate::persist::{write_csv_rows, write_json, PersistError};
use crate::scoring::{Channel, ChannelScores, EmotionClass};

/// Files written by [`write_report`], in writing order.
pub const REPORT_FILES: [&str; 6] = [
    "engagement.csv",
    "emotion.csv",
    "toxicity.csv",
    "trends.csv",
    "ad_periods.csv",
    "plot_data.json",
];

const ENGAGEMENT_HEADER: [&str; 12] = [
    "depth",
    "metric",
    "n",
    "mean",
    "median",
    "q1",
    "q3",
    "whisker_lo",
    "whisker_hi",
    "min",
    "max",
    "outlier_count",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdChainRow {
    pub root_id: VideoId,
    pub length: usize,
    pub ads: usize,
    /// Empty when no period was detected.
    pub period: Option<usize>,
    pub match_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub engagement: Vec<DepthAggregate>,
    pub emotion: Vec<EmotionSeries>,
    pub toxicity: Vec<ToxicitySeries>,
    pub trends: Vec<TrendSummary>,
    pub ad_chains: Vec<AdChainRow>,
}

pub fn build_report(
    records: &[RecommendationRecord],
    metadata: &[VideoMeta],
    scores: &[ChannelScores],
    opts: &AnalysisOptions,
    exec: Exec,
) -> Result<Report, AnalysisError> {
    let engagement = engagement_by_depth(records, metadata, opts.include_ads, exec)?;
    let emotion: Vec<EmotionSeries> = Channel::ALL
        .into_iter()
        .filter_map(|c| emotion_by_depth(scores, records, c))
        .collect();
    let mut toxicity = Vec::new();
    for c in Channel::ALL {
        if let Some(t) = toxicity_by_depth(scores, records, c, opts.tail_q)? {
            toxicity.push(t);
        }
    }

    let mut trends = Vec::new();
    let mut push = |metric: &str, channel: Option<Channel>, depths: &[usize], values: &[f64]| {
        if values.len() >= 3 {
            trends.push(trend(metric, channel, depths, values, opts.flat_threshold).expect("length checked"));
        }
    };
    for metric in ["views", "likes", "comments"] {
        let rows: Vec<&DepthAggregate> = engagement.iter().filter(|a| a.metric == metric).collect();
        let depths: Vec<usize> = rows.iter().map(|a| a.depth).collect();
        let means: Vec<f64> = rows.iter().map(|a| a.mean).collect();
        push(metric, None, &depths, &means);
    }
    for s in &emotion {
        for class in EmotionClass::ALL {
            push(class.as_str(), Some(s.channel), &s.depths, s.class(class));
        }
    }
    for t in &toxicity {
        push("toxicity_mean", Some(t.channel), &t.depths, &t.mean);
        push("toxicity_tail", Some(t.channel), &t.depths, &t.tail_mean);
    }

    let shorts: Vec<RecommendationRecord> = records
        .iter()
        .filter(|r| r.crawl_type == CrawlFormat::Shorts)
        .cloned()
        .collect();
    let ad_chains = ad_flags_by_chain(&shorts)
        .into_iter()
        .map(|(root_id, flags)| {
            let scored = detect_ad_period_scored(&flags);
            AdChainRow {
                root_id,
                length: flags.len(),
                ads: flags.iter().filter(|&&f| f).count(),
                period: scored.map(|s| s.0),
                match_fraction: scored.map(|s| s.1),
            }
        })
        .collect();

    Ok(Report {
        engagement,
        emotion,
        toxicity,
        trends,
        ad_chains,
    })
}

#[derive(Serialize)]
struct EmotionRow {
    channel: Channel,
    depth: usize,
    n: usize,
    anger: f64,
    disgust: f64,
    fear: f64,
    joy: f64,
    neutral: f64,
    sadness: f64,
    surprise: f64,
}

#[derive(Serialize)]
struct ToxicityRow {
    channel: Channel,
    depth: usize,
    n: usize,
    mean: f64,
    tail_mean: f64,
    low_n: bool,
}

#[derive(Serialize)]
struct TrendRow<'a> {
    metric: &'a str,
    channel: Option<Channel>,
    slope_per_depth: f64,
    spearman_rho: f64,
    direction: &'static str,
}

#[derive(Serialize)]
struct PlotSeries {
    metric: String,
    channel: Option<Channel>,
    points: Vec<(usize, f64)>,
}

#[derive(Serialize)]
struct PlotData {
    series: Vec<PlotSeries>,
}

fn plot_data(report: &Report) -> PlotData {
    let mut series = Vec::new();
    for metric in ["views", "likes", "comments"] {
        for (stat, pick) in [
            ("mean", (|a: &DepthAggregate| a.mean) as fn(&DepthAggregate) -> f64),
            ("median", |a| a.median),
            ("q1", |a| a.q1),
            ("q3", |a| a.q3),
            ("whisker_lo", |a| a.whisker_lo),
            ("whisker_hi", |a| a.whisker_hi),
        ] {
            series.push(PlotSeries {
                metric: format!("{metric}_{stat}"),
                channel: None,
                points: report
                    .engagement
                    .iter()
                    .filter(|a| a.metric == metric)
                    .map(|a| (a.depth, pick(a)))
                    .collect(),
            });
        }
    }
    for s in &report.emotion {
        for class in EmotionClass::ALL {
            series.push(PlotSeries {
                metric: class.as_str().to_string(),
                channel: Some(s.channel),
                points: s.depths.iter().copied().zip(s.class(class).iter().copied()).collect(),
            });
        }
    }
    for t in &report.toxicity {
        for (name, values) in [("toxicity_mean", &t.mean), ("toxicity_tail", &t.tail_mean)] {
            series.push(PlotSeries {
                metric: name.to_string(),
                channel: Some(t.channel),
                points: t.depths.iter().copied().zip(values.iter().copied()).collect(),
            });
        }
    }
    PlotData { series }
}

/// Writes every file in [`REPORT_FILES`] into `dir`, creating it if needed.
pub fn write_report(dir: &Path, report: &Report) -> Result<(), PersistError> {
    fs::create_dir_all(dir).map_err(|e| PersistError::io(dir, e))?;
    write_csv_rows(&dir.join(REPORT_FILES[0]), &ENGAGEMENT_HEADER, &report.engagement)?;

    let emotion: Vec<EmotionRow> = report
        .emotion
        .iter()
        .flat_map(|s| {
            s.depths.iter().enumerate().map(move |(i, &depth)| {
                let c = |class: EmotionClass| s.class(class)[i];
                EmotionRow {
                    channel: s.channel,
                    depth,
                    n: s.n[i],
                    anger: c(EmotionClass::Anger),
                    disgust: c(EmotionClass::Disgust),
                    fear: c(EmotionClass::Fear),
                    joy: c(EmotionClass::Joy),
                    neutral: c(EmotionClass::Neutral),
                    sadness: c(EmotionClass::Sadness),
                    surprise: c(EmotionClass::Surprise),
                }
            })
        })
        .collect();
    write_csv_rows(
        &dir.join(REPORT_FILES[1]),
        &[
            "channel", "depth", "n", "anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise",
        ],
        &emotion,
    )?;

    let toxicity: Vec<ToxicityRow> = report
        .toxicity
        .iter()
        .flat_map(|t| {
            t.depths.iter().enumerate().map(move |(i, &depth)| ToxicityRow {
                channel: t.channel,
                depth,
                n: t.n[i],
                mean: t.mean[i],
                tail_mean: t.tail_mean[i],
                low_n: t.low_n[i],
            })
        })
        .collect();
    write_csv_rows(
        &dir.join(REPORT_FILES[2]),
        &["channel", "depth", "n", "mean", "tail_mean", "low_n"],
        &toxicity,
    )?;

    let trends: Vec<TrendRow> = report
        .trends
        .iter()
        .map(|t| TrendRow {
            metric: &t.metric,
            channel: t.channel,
            slope_per_depth: t.slope_per_depth,
            spearman_rho: t.spearman_rho,
            direction: t.direction.as_str(),
        })
        .collect();
    write_csv_rows(
        &dir.join(REPORT_FILES[3]),
        &["metric", "channel", "slope_per_depth", "spearman_rho", "direction"],
        &trends,
    )?;
    write_csv_rows(
        &dir.join(REPORT_FILES[4]),
        &["root_id", "length", "ads", "period", "match_fraction"],
        &report.ad_chains,
    )?;
    write_json(&dir.join(REPORT_FILES[5]), &plot_data(report))
}
