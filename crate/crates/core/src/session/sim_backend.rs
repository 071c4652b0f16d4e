use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use super::{Backend, BackendFactory, DriverError};
use crate::model::{extract_video_id, VideoId};
use crate::parser::{has_title, Dom};
use crate::sim::{error_page, Document, Platform, ShortsChainState, SimError};

/// A browser session against the simulated platform.
///
/// Navigation blocks for the load gate's latency. Each session counts its
/// own loads per video, so a reload of a transiently failing page gets a
/// fresh draw. Observed dwell is the wall time since the current short
/// appeared.
pub struct SimBackend {
    platform: Arc<Platform>,
    url: String,
    page: Option<Document>,
    attempts: HashMap<VideoId, u64>,
    chain: Option<ShortsChainState>,
    shown_at: Instant,
    key_attempts: u64,
}

impl SimBackend {
    pub fn new(platform: Arc<Platform>) -> Self {
        SimBackend {
            platform,
            url: "about:blank".to_string(),
            page: None,
            attempts: HashMap::new(),
            chain: None,
            shown_at: Instant::now(),
            key_attempts: 0,
        }
    }

    fn load(&mut self, id: &VideoId, short: bool) -> Result<Document, DriverError> {
        let permit = self.platform.load_gate();
        permit.wait();
        let attempt = self.attempts.entry(id.clone()).or_insert(0);
        let n = *attempt;
        *attempt += 1;
        let rendered = if short {
            self.platform.render_short_page(id, n)
        } else {
            self.platform.render_watch_page(id, n)
        };
        match rendered {
            Ok(doc) => Ok(doc),
            Err(SimError::TransientFailure(_)) => Ok(error_page()),
            Err(SimError::NotFound(id)) => Err(DriverError::NotFound(id.to_string())),
            Err(e) => Err(DriverError::Backend(e.to_string())),
        }
    }
}

impl Backend for SimBackend {
    fn open(&mut self, url: &str) -> Result<(), DriverError> {
        let id = extract_video_id(url).ok_or_else(|| DriverError::NotFound(url.to_string()))?;
        self.platform
            .resolve(&id)
            .map_err(|_| DriverError::NotFound(id.to_string()))?;
        let short = url.contains("/shorts/");
        let doc = self.load(&id, short)?;
        self.page = Some(doc);
        self.url = url.to_string();
        self.chain = short.then(|| ShortsChainState::new(id));
        self.shown_at = Instant::now();
        Ok(())
    }

    fn send_advance_key(&mut self) -> Result<(), DriverError> {
        let Some(chain) = self.chain.as_mut() else {
            return Err(DriverError::Backend("advance key sent outside a shorts feed".into()));
        };
        let attempt = self.key_attempts;
        self.key_attempts += 1;
        if self.platform.drops_key(&chain.current, attempt) {
            return Ok(());
        }
        let observed = self.shown_at.elapsed().as_secs_f64();
        let next = self
            .platform
            .next_short(chain, observed)
            .map_err(|e| DriverError::Backend(e.to_string()))?;
        let doc = self.load(&next, true)?;
        self.page = Some(doc);
        self.url = crate::model::shorts_url(&next);
        self.shown_at = Instant::now();
        Ok(())
    }

    fn current_url(&self) -> String {
        self.url.clone()
    }

    fn query_title_present(&mut self) -> bool {
        self.page.as_ref().is_some_and(has_title)
    }

    fn fetch_document(&mut self) -> Result<Document, DriverError> {
        self.page
            .clone()
            .ok_or_else(|| DriverError::Backend("no page loaded".into()))
    }

    fn current_is_ad(&mut self) -> bool {
        self.page
            .as_ref()
            .and_then(|d| Dom::parse(&d.text).ok())
            .is_some_and(|dom| dom.by_id("ad-badge").is_some())
    }
}

#[derive(Clone)]
pub struct SimBackendFactory {
    platform: Arc<Platform>,
}

impl SimBackendFactory {
    pub fn new(platform: Arc<Platform>) -> Self {
        SimBackendFactory { platform }
    }

    pub fn platform(&self) -> &Arc<Platform> {
        &self.platform
    }
}

impl BackendFactory for SimBackendFactory {
    type Backend = SimBackend;

    fn connect(&self, _session_key: u64) -> Result<SimBackend, DriverError> {
        Ok(SimBackend::new(self.platform.clone()))
    }

    fn nominal_page_load_s(&self) -> f64 {
        self.platform.params().latency_base_ms / 1000.0
    }

    fn logical_clock(&self) -> bool {
        true
    }
}
