//! Deterministic simulated video platform.
//!
//! The catalog is never materialized: every video's metadata, recommendation
//! column and chain successor are derived from a seeded hash of the platform
//! seed and the video's id. Identical [`SimParams`] give identical pages,
//! chains and metadata for the same sequence of calls.

mod gate;
mod ids;
mod params;
mod render;
mod text;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::{VideoId, VideoKind, VideoMeta};

pub use gate::{LoadGate, LoadPermit};
pub use ids::{mix, mix_all, unit, NodeRef};
pub use params::SimParams;
pub use render::{error_page, escape, short_page, watch_page, ColumnEntry, Document};
pub use text::{PhraseBank, AD_WORDS, FILLER};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid sim params: {0}")]
    InvalidParams(String),
    #[error("video {0} not found")]
    NotFound(VideoId),
    #[error("transient render failure for {0}")]
    TransientFailure(VideoId),
    #[error("catalog has {available} roots, {requested} requested")]
    CatalogTooSmall { requested: usize, available: usize },
}

const SALT_ROOT: u64 = 0x7200_7400;
const SALT_CHILD: u64 = 0xc41d;
const SALT_META: u64 = 0x3e7a;
const SALT_NOISE: u64 = 0x9015e;
const SALT_FAIL: u64 = 0xfa11;
const SALT_AD: u64 = 0xad;

const TITLE_TOKENS: usize = 8;
const DESCRIPTION_TOKENS: usize = 30;
const TRANSCRIPT_TOKENS: usize = 60;
const COMMENT_TOKENS: usize = 10;
const MAX_COMMENT_TEXTS: u64 = 8;

/// Per-session chain position for shorts advancement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortsChainState {
    pub current: VideoId,
    /// Consecutive advances observed at or above the ad dwell threshold.
    pub streak: u32,
}

impl ShortsChainState {
    pub fn new(start: VideoId) -> Self {
        ShortsChainState {
            current: start,
            streak: 0,
        }
    }
}

#[derive(Debug)]
pub struct Platform {
    params: SimParams,
    bank: PhraseBank,
    gate: LoadGate,
}

impl Platform {
    pub fn build(params: SimParams) -> Result<Self, SimError> {
        params.validate()?;
        let gate = LoadGate::new(
            params.seed,
            params.latency_base_ms,
            params.latency_jitter_ms,
            params.capacity,
            params.latency_penalty_ms,
        );
        Ok(Platform {
            bank: PhraseBank::builtin(),
            gate,
            params,
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn phrase_bank(&self) -> &PhraseBank {
        &self.bank
    }

    pub fn gate(&self) -> &LoadGate {
        &self.gate
    }

    /// Admits one page load through the capacity model.
    pub fn load_gate(&self) -> LoadPermit<'_> {
        self.gate.enter()
    }

    pub fn resolve(&self, id: &VideoId) -> Result<NodeRef, SimError> {
        NodeRef::decode(id).ok_or_else(|| SimError::NotFound(id.clone()))
    }

    /// The `index`-th designated root of the given kind.
    pub fn root(&self, index: usize, kind: VideoKind) -> Result<VideoId, SimError> {
        if index >= self.params.catalog_size {
            return Err(SimError::CatalogTooSmall {
                requested: index + 1,
                available: self.params.catalog_size,
            });
        }
        let node = mix_all(&[self.params.seed, SALT_ROOT, index as u64]);
        Ok(NodeRef::new(0, kind, node).encode())
    }

    pub fn roots(&self, count: usize, kind: VideoKind) -> Result<Vec<VideoId>, SimError> {
        if count > self.params.catalog_size {
            return Err(SimError::CatalogTooSmall {
                requested: count,
                available: self.params.catalog_size,
            });
        }
        (0..count).map(|i| self.root(i, kind)).collect()
    }

    fn child_node(&self, parent: NodeRef, rank: usize) -> NodeRef {
        let kind = match parent.kind {
            VideoKind::Short | VideoKind::Ad => VideoKind::Short,
            _ => VideoKind::Regular,
        };
        let node = mix_all(&[
            self.params.seed,
            SALT_CHILD,
            parent.node,
            parent.level as u64,
            rank as u64,
        ]);
        NodeRef::new(parent.level + 1, kind, node)
    }

    /// Ranked recommendations of `id` (rank 1 first), noise excluded.
    pub fn recommendations(&self, id: &VideoId) -> Result<Vec<VideoId>, SimError> {
        let parent = self.resolve(id)?;
        Ok((1..=self.params.breadth_served)
            .map(|r| self.child_node(parent, r).encode())
            .collect())
    }

    fn noise_node(&self, parent: NodeRef, kind: VideoKind, attempt: u64, slot: usize) -> NodeRef {
        let node = mix_all(&[self.params.seed, SALT_NOISE, parent.node, attempt, slot as u64]);
        NodeRef::new(parent.level + 1, kind, node)
    }

    /// Recommendation column as served on load number `attempt` of `id`.
    ///
    /// Each of the `breadth_served` slots is independently an ad, playlist or
    /// live entry with the configured rates, otherwise the next-ranked
    /// regular recommendation. Noise placement varies per attempt; the
    /// regular ranking does not.
    pub fn column(&self, id: &VideoId, attempt: u64) -> Result<Vec<ColumnEntry>, SimError> {
        let parent = self.resolve(id)?;
        let p = &self.params;
        let (a, pl, l) = (p.noise_ad_rate, p.noise_playlist_rate, p.noise_live_rate);
        let mut rank = 0;
        let mut out = Vec::with_capacity(p.breadth_served);
        for slot in 0..p.breadth_served {
            let u = unit(mix_all(&[p.seed, SALT_NOISE, parent.node, attempt, slot as u64, 1]));
            let entry = if u < a {
                let n = self.noise_node(parent, VideoKind::Ad, attempt, slot);
                ColumnEntry::Ad {
                    id: n.encode(),
                    title: self.title_of(n),
                }
            } else if u < a + pl {
                let n = self.noise_node(parent, VideoKind::Playlist, attempt, slot);
                ColumnEntry::Playlist {
                    list_id: format!("PL{}", n.encode()),
                    title: self.title_of(n),
                }
            } else if u < a + pl + l {
                let n = self.noise_node(parent, VideoKind::LiveStream, attempt, slot);
                ColumnEntry::LiveStream {
                    id: n.encode(),
                    title: self.title_of(n),
                }
            } else {
                rank += 1;
                let n = self.child_node(parent, rank);
                ColumnEntry::Regular {
                    id: n.encode(),
                    title: self.title_of(n),
                }
            };
            out.push(entry);
        }
        Ok(out)
    }

    /// Watch page for load number `attempt` of `id`. Loads fail transiently
    /// with probability `transient_failure_rate`, decided per (id, attempt).
    pub fn render_watch_page(&self, id: &VideoId, attempt: u64) -> Result<Document, SimError> {
        let node = self.resolve(id)?;
        if self.fails(node, attempt) {
            return Err(SimError::TransientFailure(id.clone()));
        }
        let column = self.column(id, attempt)?;
        Ok(watch_page(&self.title_of(node), &column))
    }

    pub fn render_short_page(&self, id: &VideoId, attempt: u64) -> Result<Document, SimError> {
        let node = self.resolve(id)?;
        if self.fails(node, attempt) {
            return Err(SimError::TransientFailure(id.clone()));
        }
        Ok(short_page(&self.title_of(node), node.kind == VideoKind::Ad))
    }

    fn fails(&self, node: NodeRef, attempt: u64) -> bool {
        let rate = self.params.transient_failure_rate;
        rate > 0.0
            && unit(mix_all(&[
                self.params.seed,
                SALT_FAIL,
                node.node,
                node.level as u64,
                attempt,
            ])) < rate
    }

    /// Whether an advance key-event on attempt `attempt` gets swallowed.
    pub fn drops_key(&self, current: &VideoId, attempt: u64) -> bool {
        let rate = self.params.key_drop_rate;
        if rate <= 0.0 {
            return false;
        }
        let node = NodeRef::decode(current).map_or(0, |n| n.node);
        unit(mix_all(&[self.params.seed, 0xd209, node, attempt])) < rate
    }

    /// Next video in a shorts chain.
    ///
    /// The session's streak counts consecutive advances watched for at least
    /// `ad_dwell_threshold_s`; when it reaches `ad_period` the platform serves
    /// an ad and resets the streak. Otherwise it serves the rank-1
    /// recommendation of the current video.
    pub fn next_short(&self, state: &mut ShortsChainState, observed_dwell_s: f64) -> Result<VideoId, SimError> {
        let current = self.resolve(&state.current)?;
        if observed_dwell_s >= self.params.ad_dwell_threshold_s {
            state.streak += 1;
        } else {
            state.streak = 0;
        }
        let next = if state.streak >= self.params.ad_period {
            state.streak = 0;
            let node = mix_all(&[self.params.seed, SALT_AD, current.node, current.level as u64]);
            NodeRef::new(current.level + 1, VideoKind::Ad, node)
        } else {
            let mut child = self.child_node(current, 1);
            child.kind = VideoKind::Short;
            child
        };
        state.current = next.encode();
        Ok(state.current.clone())
    }

    fn node_rng(&self, node: NodeRef) -> ChaCha8Rng {
        let kind = VideoKind::ALL.iter().position(|k| *k == node.kind).unwrap() as u64;
        ChaCha8Rng::seed_from_u64(mix_all(&[
            self.params.seed,
            SALT_META,
            node.node,
            node.level as u64,
            kind,
        ]))
    }

    /// Same draws as the start of [`Platform::metadata`], so column titles
    /// match metadata titles.
    fn title_of(&self, node: NodeRef) -> String {
        let mut rng = self.node_rng(node);
        if node.kind == VideoKind::Ad {
            return self.bank.ad_copy(&mut rng, TITLE_TOKENS);
        }
        let tail_draw: f64 = rng.gen();
        let density = self.tail_density(tail_draw, node.level);
        let weights = self.params.emotion_weights_at(node.level);
        self.bank.sentence(&mut rng, TITLE_TOKENS, &weights, density)
    }

    fn tail_density(&self, tail_draw: f64, level: u32) -> f64 {
        if tail_draw < self.params.toxicity_tail_rate {
            self.params.toxic_density_at(level)
        } else {
            0.0
        }
    }

    /// Metadata for any valid id. Views scale as `base_views * g^level` with
    /// log-normal noise; `views >= likes >= comment_count` always holds.
    pub fn metadata(&self, id: &VideoId) -> Result<VideoMeta, SimError> {
        let node = self.resolve(id)?;
        let p = &self.params;
        let mut rng = self.node_rng(node);
        if node.kind == VideoKind::Ad {
            let title = self.bank.ad_copy(&mut rng, TITLE_TOKENS);
            let description = self.bank.ad_copy(&mut rng, DESCRIPTION_TOKENS);
            return Ok(VideoMeta {
                id: id.clone(),
                kind: VideoKind::Ad,
                title,
                description,
                transcript: None,
                comments: Vec::new(),
                views: 0,
                likes: 0,
                comment_count: 0,
                comments_disabled: true,
                duration_s: 15.0,
            });
        }
        let tail_draw: f64 = rng.gen();
        let density = self.tail_density(tail_draw, node.level);
        let weights = p.emotion_weights_at(node.level);
        let title = self.bank.sentence(&mut rng, TITLE_TOKENS, &weights, density);
        let description = self.bank.sentence(&mut rng, DESCRIPTION_TOKENS, &weights, density);
        let transcript = match node.kind {
            VideoKind::Regular | VideoKind::LiveStream => {
                Some(self.bank.sentence(&mut rng, TRANSCRIPT_TOKENS, &weights, density))
            }
            _ => None,
        };

        let z: f64 = rng.sample(StandardNormal);
        let noise = 10f64.powf(p.engagement_noise_sigma * z);
        let views = (p.expected_views(node.level) * noise).round().max(0.0) as u64;
        let like_ratio = rng.gen_range(0.02..0.08);
        let likes = ((views as f64) * like_ratio).round() as u64;
        let comment_ratio = rng.gen_range(0.05..0.2);
        let comments_disabled = rng.gen::<f64>() < p.comments_disabled_rate;
        let (comment_count, comments) = if comments_disabled {
            (0, Vec::new())
        } else {
            let count = ((likes as f64) * comment_ratio).round() as u64;
            let texts = (0..count.min(MAX_COMMENT_TEXTS))
                .map(|_| {
                    self.bank
                        .sentence(&mut rng, COMMENT_TOKENS, &p.comment_emotion, p.comment_toxic_density)
                })
                .collect();
            (count, texts)
        };
        let duration_s = match node.kind {
            VideoKind::Short => rng.gen_range(10.0..60.0),
            _ => rng.gen_range(120.0..1200.0),
        };
        Ok(VideoMeta {
            id: id.clone(),
            kind: node.kind,
            title,
            description,
            transcript,
            comments,
            views,
            likes: likes.min(views),
            comment_count: comment_count.min(likes),
            comments_disabled,
            duration_s,
        })
    }
}
