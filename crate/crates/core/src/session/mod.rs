//! Browsing sessions.
//!
//! A [`Session`] drives one [`Backend`] (a browser, or the simulated
//! platform) through the two interactions a crawl needs: opening a video and
//! waiting until it has really loaded, and advancing a shorts chain with a
//! key-event while watching the URL for the change.

mod sim_backend;

use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{extract_video_id, shorts_url, watch_url, CrawlFormat, VideoId};
use crate::parser::ParseError;
use crate::sim::Document;

pub use sim_backend::{SimBackend, SimBackendFactory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriverError {
    #[error("page {url} did not finish loading within {budget:?}")]
    LoadTimeout { url: String, budget: Duration },
    #[error("video {0} not found")]
    NotFound(String),
    #[error("advance from {from} not registered after {sends} key-events")]
    AdvanceStuck { from: VideoId, sends: usize },
    #[error("current url {0:?} names no video")]
    DriverDesync(String),
    #[error("malformed page: {0}")]
    Parse(#[from] ParseError),
    #[error("backend: {0}")]
    Backend(String),
}

/// What a session needs from a browser. A live-browser adapter would
/// implement this over a WebDriver connection; the crate ships the sim one.
pub trait Backend: Send {
    /// Navigates to `url`, returning once the navigation has been issued and
    /// the backend's own load event fired.
    fn open(&mut self, url: &str) -> Result<(), DriverError>;
    /// Sends one "next video" key-event to the page root.
    fn send_advance_key(&mut self) -> Result<(), DriverError>;
    fn current_url(&self) -> String;
    fn query_title_present(&mut self) -> bool;
    fn fetch_document(&mut self) -> Result<Document, DriverError>;
    /// Whether the video currently shown is a sponsored item.
    fn current_is_ad(&mut self) -> bool;
}

/// Opens fresh backend sessions; shared by all crawl workers.
pub trait BackendFactory: Sync {
    type Backend: Backend;

    fn connect(&self, session_key: u64) -> Result<Self::Backend, DriverError>;

    /// Nominal seconds one page load takes on this backend.
    fn nominal_page_load_s(&self) -> f64;

    /// Whether records should carry logical sequence numbers instead of
    /// wall-clock timestamps (true for reproducible simulated runs).
    fn logical_clock(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    /// How long to wait for the title element before giving up.
    pub load_budget: Duration,
    pub title_poll: Duration,
    /// Extra pause after the title appears on long-form pages.
    pub grace: Duration,
    /// URL polling interval while waiting for an advance to register.
    pub poll_interval: Duration,
    /// Time without a URL change before the key-event is sent again.
    pub resend_budget: Duration,
    /// Re-sends allowed before an advance counts as stuck.
    pub max_resends: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            load_budget: Duration::from_secs(10),
            title_poll: Duration::from_millis(50),
            grace: Duration::from_secs(1),
            poll_interval: Duration::from_millis(100),
            resend_budget: Duration::from_secs(2),
            max_resends: 3,
        }
    }
}

impl SessionConfig {
    /// No grace pause and short budgets; for tests and desk-scale runs.
    pub fn fast() -> Self {
        SessionConfig {
            load_budget: Duration::from_millis(300),
            title_poll: Duration::from_millis(5),
            grace: Duration::ZERO,
            poll_interval: Duration::from_millis(5),
            resend_budget: Duration::from_millis(50),
            max_resends: 3,
        }
    }
}

pub struct Session<B: Backend> {
    pub session_id: u64,
    backend: B,
    config: SessionConfig,
    history: Vec<VideoId>,
    clean: bool,
    last_key_sent: Option<Instant>,
    key_events: usize,
}

impl<B: Backend> Session<B> {
    pub fn new(session_id: u64, backend: B, config: SessionConfig) -> Self {
        Session {
            session_id,
            backend,
            config,
            history: Vec::new(),
            clean: true,
            last_key_sent: None,
            key_events: 0,
        }
    }

    /// True until the session has navigated anywhere.
    pub fn is_clean(&self) -> bool {
        self.clean
    }

    pub fn history(&self) -> &[VideoId] {
        &self.history
    }

    pub fn backend_mut(&mut self) -> &mut B {
        &mut self.backend
    }

    /// When the most recent advance key-event went out.
    pub fn last_key_sent(&self) -> Option<Instant> {
        self.last_key_sent
    }

    /// Total key-events sent, re-sends included.
    pub fn key_events(&self) -> usize {
        self.key_events
    }

    /// Opens `id` and waits until it has loaded: navigate, poll for the title
    /// element within the load budget, then (long-form pages only) pause for
    /// the grace period so secondary components can render.
    pub fn open_video(&mut self, id: &VideoId, format: CrawlFormat) -> Result<(), DriverError> {
        let url = match format {
            CrawlFormat::Shorts => shorts_url(id),
            CrawlFormat::LongForm => watch_url(id),
        };
        let started = Instant::now();
        self.clean = false;
        self.backend.open(&url)?;
        self.history.push(id.clone());
        let deadline = started + self.config.load_budget;
        while !self.backend.query_title_present() {
            let now = Instant::now();
            if now >= deadline {
                return Err(DriverError::LoadTimeout {
                    url,
                    budget: self.config.load_budget,
                });
            }
            thread::sleep(self.config.title_poll.min(deadline - now));
        }
        if format == CrawlFormat::LongForm && !self.config.grace.is_zero() {
            thread::sleep(self.config.grace);
        }
        Ok(())
    }

    pub fn current_video_id(&self) -> Result<VideoId, DriverError> {
        let url = self.backend.current_url();
        extract_video_id(&url).ok_or(DriverError::DriverDesync(url))
    }

    pub fn fetch_document(&mut self) -> Result<Document, DriverError> {
        self.backend.fetch_document()
    }

    pub fn current_is_ad(&mut self) -> bool {
        self.backend.current_is_ad()
    }

    /// Watches the current short for `dwell`, sends the advance key and
    /// returns the next video's id as soon as the URL changes.
    ///
    /// The URL is checked right after each key-event and then every
    /// `poll_interval`; if it has not changed after `resend_budget` the key is
    /// sent again, up to `max_resends` times.
    pub fn advance_short(&mut self, dwell: Duration) -> Result<VideoId, DriverError> {
        let from = self.current_video_id()?;
        if !dwell.is_zero() {
            thread::sleep(dwell);
        }
        let mut sends = 0;
        loop {
            let sent_at = Instant::now();
            self.last_key_sent = Some(sent_at);
            self.backend.send_advance_key()?;
            sends += 1;
            self.key_events += 1;
            loop {
                let now_id = self.current_video_id()?;
                if now_id != from {
                    self.history.push(now_id.clone());
                    return Ok(now_id);
                }
                if sent_at.elapsed() >= self.config.resend_budget {
                    break;
                }
                thread::sleep(self.config.poll_interval);
            }
            if sends > self.config.max_resends {
                return Err(DriverError::AdvanceStuck { from, sends });
            }
        }
    }
}
