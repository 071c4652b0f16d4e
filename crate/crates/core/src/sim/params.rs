use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Knobs of the simulated platform. Loadable from a TOML file; every key is
/// optional and falls back to [`SimParams::default`].
///
/// Emotion vectors are relative token weights in class order
/// `[anger, disgust, fear, joy, neutral, sadness, surprise]`; the neutral slot
/// weights filler words that carry no emotion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub seed: u64,
    /// Number of designated root videos the catalog offers.
    pub catalog_size: usize,
    /// Entries rendered in a watch page's recommendation column.
    pub breadth_served: usize,
    pub base_views: f64,
    /// Multiplicative engagement growth per graph level.
    pub engagement_drift: f64,
    /// Standard deviation of engagement noise, in log10 units.
    pub engagement_noise_sigma: f64,
    pub comments_disabled_rate: f64,
    pub emotion_base: [f64; 7],
    /// Added to `emotion_base` once per graph level (clamped at zero).
    pub emotion_drift: [f64; 7],
    pub comment_emotion: [f64; 7],
    /// Fraction of videos whose own text carries flagged tokens.
    pub toxicity_tail_rate: f64,
    pub toxic_density_base: f64,
    pub toxic_density_drift: f64,
    /// Per-token flag probability in comments, constant across levels.
    pub comment_toxic_density: f64,
    pub ad_period: u32,
    pub ad_dwell_threshold_s: f64,
    pub latency_base_ms: f64,
    pub latency_jitter_ms: f64,
    /// Concurrent page loads served at base latency; `None` is unlimited.
    pub capacity: Option<usize>,
    /// Extra latency per concurrent load beyond `capacity`.
    pub latency_penalty_ms: f64,
    pub noise_ad_rate: f64,
    pub noise_playlist_rate: f64,
    pub noise_live_rate: f64,
    pub transient_failure_rate: f64,
    /// Probability that an advance key-event is swallowed.
    pub key_drop_rate: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            seed: 42,
            catalog_size: 10_000,
            breadth_served: 14,
            base_views: 1000.0,
            engagement_drift: 1.2,
            engagement_noise_sigma: 0.5,
            comments_disabled_rate: 0.05,
            emotion_base: [0.3, 0.15, 0.2, 0.4, 4.0, 0.25, 0.2],
            emotion_drift: [-0.03, 0.0, 0.0, 0.0, 0.3, 0.0, 0.03],
            comment_emotion: [0.5, 0.2, 0.2, 0.5, 3.0, 0.3, 0.3],
            toxicity_tail_rate: 0.05,
            toxic_density_base: 0.02,
            toxic_density_drift: 0.01,
            comment_toxic_density: 0.05,
            ad_period: 5,
            ad_dwell_threshold_s: 60.0,
            latency_base_ms: 50.0,
            latency_jitter_ms: 5.0,
            capacity: None,
            latency_penalty_ms: 10.0,
            noise_ad_rate: 0.05,
            noise_playlist_rate: 0.05,
            noise_live_rate: 0.05,
            transient_failure_rate: 0.02,
            key_drop_rate: 0.0,
        }
    }
}

impl SimParams {
    /// A quiet platform for tests: no latency, noise entries, failures or
    /// engagement noise.
    pub fn quiet(seed: u64) -> Self {
        SimParams {
            seed,
            engagement_noise_sigma: 0.0,
            latency_base_ms: 0.0,
            latency_jitter_ms: 0.0,
            noise_ad_rate: 0.0,
            noise_playlist_rate: 0.0,
            noise_live_rate: 0.0,
            transient_failure_rate: 0.0,
            ..SimParams::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let params: SimParams = toml::from_str(text).map_err(|e| SimError::InvalidParams(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| SimError::InvalidParams(format!("{}: {e}", path.display())))?;
        SimParams::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidParams(msg.to_string()));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.catalog_size == 0 {
            return bad("catalog_size must be positive");
        }
        if self.breadth_served == 0 {
            return bad("breadth_served must be positive");
        }
        if !(self.base_views.is_finite() && self.base_views > 0.0) {
            return bad("base_views must be positive");
        }
        if !(self.engagement_drift.is_finite() && self.engagement_drift > 0.0) {
            return bad("engagement_drift must be positive");
        }
        if !(self.engagement_noise_sigma.is_finite() && self.engagement_noise_sigma >= 0.0) {
            return bad("engagement_noise_sigma must be non-negative");
        }
        if self.ad_period < 2 {
            return bad("ad_period must be at least 2");
        }
        for (name, v) in [
            ("latency_base_ms", self.latency_base_ms),
            ("latency_jitter_ms", self.latency_jitter_ms),
            ("latency_penalty_ms", self.latency_penalty_ms),
            ("ad_dwell_threshold_s", self.ad_dwell_threshold_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::InvalidParams(format!("{name} must be non-negative")));
            }
        }
        if self.latency_jitter_ms > self.latency_base_ms {
            return bad("latency_jitter_ms may not exceed latency_base_ms");
        }
        for (name, p) in [
            ("comments_disabled_rate", self.comments_disabled_rate),
            ("toxicity_tail_rate", self.toxicity_tail_rate),
            ("toxic_density_base", self.toxic_density_base),
            ("comment_toxic_density", self.comment_toxic_density),
            ("noise_ad_rate", self.noise_ad_rate),
            ("noise_playlist_rate", self.noise_playlist_rate),
            ("noise_live_rate", self.noise_live_rate),
            ("transient_failure_rate", self.transient_failure_rate),
            ("key_drop_rate", self.key_drop_rate),
        ] {
            if !prob(p) {
                return Err(SimError::InvalidParams(format!("{name} must be in [0, 1]")));
            }
        }
        if self.noise_ad_rate + self.noise_playlist_rate + self.noise_live_rate > 1.0 {
            return bad("noise rates must sum to at most 1");
        }
        for v in self
            .emotion_base
            .iter()
            .chain(&self.emotion_drift)
            .chain(&self.comment_emotion)
        {
            if !v.is_finite() {
                return bad("emotion weights must be finite");
            }
        }
        if self.emotion_base.iter().any(|v| *v < 0.0) || self.comment_emotion.iter().any(|v| *v < 0.0) {
            return bad("emotion base weights must be non-negative");
        }
        if self.capacity == Some(0) {
            return bad("capacity must be positive when set");
        }
        Ok(())
    }

    /// Token weights at graph level `level`.
    pub fn emotion_weights_at(&self, level: u32) -> [f64; 7] {
        let mut w = [0.0; 7];
        for (i, slot) in w.iter_mut().enumerate() {
            *slot = (self.emotion_base[i] + self.emotion_drift[i] * level as f64).max(0.0);
        }
        w
    }

    /// Flag probability per token for tail videos at `level`.
    pub fn toxic_density_at(&self, level: u32) -> f64 {
        (self.toxic_density_base + self.toxic_density_drift * level as f64).clamp(0.0, 1.0)
    }

    /// Mean views at `level` before noise.
    pub fn expected_views(&self, level: u32) -> f64 {
        self.base_views * self.engagement_drift.powi(level as i32)
    }
}
