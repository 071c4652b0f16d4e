//! Parallel harvesting of recommendation graphs and depth-wise bias audits.
//!
//! The crate crawls short-form recommendation chains and long-form
//! breadth-first recommendation trees with a pool of worker sessions, then
//! scores the harvested videos for emotion and toxicity and summarizes how
//! engagement, emotion and toxicity drift with recommendation depth. All of
//! it runs against [`sim::Platform`], a seeded simulated platform.

pub mod analysis;
pub mod cli;
pub mod crawl;
pub mod exec;
pub mod model;
pub mod parser;
pub mod persist;
pub mod scoring;
pub mod session;
pub mod sim;

pub use exec::Exec;
pub use model::{
    extract_video_id, theoretical_duration, CrawlConfig, CrawlFormat, RecommendationRecord, TimingReport, VideoId,
    VideoKind, VideoMeta,
};
