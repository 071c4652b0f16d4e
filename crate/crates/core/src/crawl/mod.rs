//! Worker pool that harvests recommendation graphs.
//!
//! Roots are split into contiguous sublists, one per worker. Each worker runs
//! on its own thread with its own browser session(s); a collector on the
//! calling thread receives per-root batches over a channel, prints progress
//! and merges everything in (worker, root, sequence) order at the end.

mod partition;

use std::collections::BTreeSet;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::model::{
    theoretical_duration, ConfigError, CrawlConfig, CrawlFormat, RecommendationRecord, TimingReport, VideoId, VideoMeta,
};
use crate::parser::extract_recommendations;
use crate::session::{Backend, BackendFactory, DriverError, Session, SessionConfig};
use crate::sim::{Platform, SimError};

pub use partition::{partition_roots, stagger_offsets};

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("expected a {expected} crawl config, got {got}")]
    WrongFormat { expected: CrawlFormat, got: CrawlFormat },
    #[error("all {0} roots failed")]
    AllRootsFailed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Worker finished its stagger delay.
    Start,
    RootOpened,
    PageLoaded,
    /// Advance key-event sent (timestamp is the send time).
    Advance,
    RootDone,
    RootFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub worker_id: usize,
    pub kind: EventKind,
    /// Seconds since the crawl started.
    pub at_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerStats {
    pub worker_id: usize,
    pub roots_assigned: usize,
    pub records_emitted: usize,
    pub retries: usize,
    pub failures: usize,
    /// Recommendations missing from pages that stayed short after retries.
    pub deficit: usize,
}

#[derive(Debug, Clone)]
pub struct CrawlResult {
    pub records: Vec<RecommendationRecord>,
    pub timing: TimingReport,
    pub per_worker: Vec<WorkerStats>,
    /// All events, ordered by timestamp.
    pub event_log: Vec<Event>,
    pub failed_roots: Vec<VideoId>,
}

impl CrawlResult {
    pub fn advance_times(&self) -> Vec<f64> {
        self.event_log
            .iter()
            .filter(|e| e.kind == EventKind::Advance)
            .map(|e| e.at_s)
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub session: SessionConfig,
    /// Print `worker=i root=v done=k/K` to stderr after every root.
    pub progress: bool,
}

struct RootBatch {
    worker_id: usize,
    index: usize,
    root: VideoId,
    failed: bool,
    records: Vec<RecommendationRecord>,
    events: Vec<Event>,
}

struct Ctx<'a, F> {
    config: &'a CrawlConfig,
    factory: &'a F,
    opts: &'a RunOptions,
    start: Instant,
}

impl<F> Ctx<'_, F> {
    fn event(&self, worker_id: usize, kind: EventKind, at: Instant) -> Event {
        Event {
            worker_id,
            kind,
            at_s: at.saturating_duration_since(self.start).as_secs_f64(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        root: &VideoId,
        parent: &VideoId,
        video: VideoId,
        depth: usize,
        position: usize,
        worker_id: usize,
        is_ad: bool,
    ) -> RecommendationRecord {
        RecommendationRecord {
            crawl_type: self.config.format,
            root_id: root.clone(),
            parent_id: parent.clone(),
            video_id: video,
            depth,
            position,
            worker_id,
            dwell_s: self.config.dwell_s,
            is_ad,
            fetched_at: epoch_ms(),
        }
    }
}

fn epoch_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Runs whichever crawl `config.format` asks for.
pub fn run_crawl<F: BackendFactory>(
    config: &CrawlConfig,
    factory: &F,
    opts: &RunOptions,
) -> Result<CrawlResult, CrawlError> {
    match config.format {
        CrawlFormat::Shorts => run_shorts_crawl(config, factory, opts),
        CrawlFormat::LongForm => run_longform_crawl(config, factory, opts),
    }
}

/// Shorts chain-walk: per root, a fresh session opens the root and then
/// dwells and advances `depth` times, recording each video reached.
pub fn run_shorts_crawl<F: BackendFactory>(
    config: &CrawlConfig,
    factory: &F,
    opts: &RunOptions,
) -> Result<CrawlResult, CrawlError> {
    expect_format(config, CrawlFormat::Shorts)?;
    run_pool(config, factory, opts, shorts_worker)
}

/// Long-form BFS: per root, the worker expands its subtree level by level,
/// reloading short pages up to `max_retries` times.
pub fn run_longform_crawl<F: BackendFactory>(
    config: &CrawlConfig,
    factory: &F,
    opts: &RunOptions,
) -> Result<CrawlResult, CrawlError> {
    expect_format(config, CrawlFormat::LongForm)?;
    run_pool(config, factory, opts, longform_worker)
}

fn expect_format(config: &CrawlConfig, expected: CrawlFormat) -> Result<(), CrawlError> {
    config.validate()?;
    if config.format != expected {
        return Err(CrawlError::WrongFormat {
            expected,
            got: config.format,
        });
    }
    Ok(())
}

type WorkerFn<F> = fn(&Ctx<'_, F>, usize, &[VideoId], Duration, &mpsc::Sender<RootBatch>) -> WorkerStats;

fn run_pool<F: BackendFactory>(
    config: &CrawlConfig,
    factory: &F,
    opts: &RunOptions,
    worker: WorkerFn<F>,
) -> Result<CrawlResult, CrawlError> {
    let parts = partition_roots(&config.roots, config.workers);
    let offsets = stagger_offsets(config.workers, config.dwell_s, config.stagger);
    let ctx = Ctx {
        config,
        factory,
        opts,
        start: Instant::now(),
    };

    let (tx, rx) = mpsc::channel::<RootBatch>();
    let (mut batches, mut per_worker) = thread::scope(|scope| {
        let handles: Vec<_> = parts
            .iter()
            .enumerate()
            .map(|(w, roots)| {
                let tx = tx.clone();
                let ctx = &ctx;
                let offset = Duration::from_secs_f64(offsets[w]);
                scope.spawn(move || worker(ctx, w, roots, offset, &tx))
            })
            .collect();
        drop(tx);

        let mut done = vec![0usize; parts.len()];
        let mut batches = Vec::new();
        for batch in rx {
            done[batch.worker_id] += 1;
            if opts.progress {
                eprintln!(
                    "worker={} root={} done={}/{}",
                    batch.worker_id,
                    batch.root,
                    done[batch.worker_id],
                    parts[batch.worker_id].len()
                );
            }
            batches.push(batch);
        }
        let stats: Vec<WorkerStats> = handles
            .into_iter()
            .map(|h| h.join().expect("crawl worker panicked"))
            .collect();
        (batches, stats)
    });
    let wall_s = ctx.start.elapsed().as_secs_f64();

    batches.sort_by_key(|b| (b.worker_id, b.index));
    let failed_roots: Vec<VideoId> = batches.iter().filter(|b| b.failed).map(|b| b.root.clone()).collect();
    let mut event_log: Vec<Event> = batches.iter_mut().flat_map(|b| b.events.drain(..)).collect();
    event_log.sort_by(|a, b| a.at_s.total_cmp(&b.at_s));
    let mut records: Vec<RecommendationRecord> = batches.into_iter().flat_map(|b| b.records).collect();
    if factory.logical_clock() {
        for (i, r) in records.iter_mut().enumerate() {
            r.fetched_at = i as u64;
        }
    }
    per_worker.sort_by_key(|s| s.worker_id);

    if failed_roots.len() == config.roots.len() {
        return Err(CrawlError::AllRootsFailed(failed_roots.len()));
    }

    let mut estimate = config.clone();
    if estimate.page_load_s.is_none() {
        estimate.page_load_s = Some(factory.nominal_page_load_s() + opts.session.grace.as_secs_f64());
    }
    let theoretical = theoretical_duration(&estimate);
    estimate.workers = 1;
    let single = theoretical_duration(&estimate);
    Ok(CrawlResult {
        records,
        timing: TimingReport::new(wall_s, theoretical, config.workers, single),
        per_worker,
        event_log,
        failed_roots,
    })
}

fn session_key(worker_id: usize, index: usize) -> u64 {
    ((worker_id as u64) << 32) | index as u64
}

/// Opens `id`, retrying load timeouts. Returns the number of retries used,
/// or the error that ended the attempts.
fn open_with_retries<B: Backend>(
    session: &mut Session<B>,
    id: &VideoId,
    format: CrawlFormat,
    max_retries: usize,
    retries: &mut usize,
) -> Result<(), DriverError> {
    let mut last = None;
    for attempt in 0..=max_retries {
        if attempt > 0 {
            *retries += 1;
        }
        match session.open_video(id, format) {
            Ok(()) => return Ok(()),
            Err(e @ DriverError::LoadTimeout { .. }) => {
                debug!("load timeout on {id}, attempt {}", attempt + 1);
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn shorts_worker<F: BackendFactory>(
    ctx: &Ctx<'_, F>,
    worker_id: usize,
    roots: &[VideoId],
    offset: Duration,
    tx: &mpsc::Sender<RootBatch>,
) -> WorkerStats {
    let mut stats = WorkerStats {
        worker_id,
        roots_assigned: roots.len(),
        ..WorkerStats::default()
    };
    if !offset.is_zero() {
        thread::sleep(offset);
    }
    let start_event = ctx.event(worker_id, EventKind::Start, Instant::now());

    for (index, root) in roots.iter().enumerate() {
        let mut events = Vec::new();
        if index == 0 {
            events.push(start_event.clone());
        }
        let mut records = Vec::new();
        let failed = match walk_chain(ctx, worker_id, index, root, &mut records, &mut events, &mut stats) {
            Ok(()) => false,
            Err(e) => {
                warn!("worker {worker_id}: root {root} failed: {e}");
                true
            }
        };
        let kind = if failed {
            EventKind::RootFailed
        } else {
            EventKind::RootDone
        };
        events.push(ctx.event(worker_id, kind, Instant::now()));
        stats.failures += failed as usize;
        stats.records_emitted += records.len();
        let _ = tx.send(RootBatch {
            worker_id,
            index,
            root: root.clone(),
            failed,
            records,
            events,
        });
    }
    stats
}

fn walk_chain<F: BackendFactory>(
    ctx: &Ctx<'_, F>,
    worker_id: usize,
    index: usize,
    root: &VideoId,
    records: &mut Vec<RecommendationRecord>,
    events: &mut Vec<Event>,
    stats: &mut WorkerStats,
) -> Result<(), DriverError> {
    let config = ctx.config;
    let backend = ctx.factory.connect(session_key(worker_id, index))?;
    let mut session = Session::new(session_key(worker_id, index), backend, ctx.opts.session.clone());
    open_with_retries(
        &mut session,
        root,
        CrawlFormat::Shorts,
        config.max_retries,
        &mut stats.retries,
    )?;
    events.push(ctx.event(worker_id, EventKind::RootOpened, Instant::now()));

    let dwell = config.dwell();
    let mut parent = root.clone();
    let mut advances = 0;
    let result = (|| {
        for depth in 1..=config.depth {
            let next = session.advance_short(dwell)?;
            advances += 1;
            if let Some(sent) = session.last_key_sent() {
                events.push(ctx.event(worker_id, EventKind::Advance, sent));
            }
            let is_ad = session.current_is_ad();
            records.push(ctx.record(root, &parent, next.clone(), depth, 1, worker_id, is_ad));
            parent = next;
        }
        Ok(())
    })();
    stats.retries += session.key_events().saturating_sub(advances);
    result
}

fn longform_worker<F: BackendFactory>(
    ctx: &Ctx<'_, F>,
    worker_id: usize,
    roots: &[VideoId],
    offset: Duration,
    tx: &mpsc::Sender<RootBatch>,
) -> WorkerStats {
    let mut stats = WorkerStats {
        worker_id,
        roots_assigned: roots.len(),
        ..WorkerStats::default()
    };
    if !offset.is_zero() {
        thread::sleep(offset);
    }
    let start_event = ctx.event(worker_id, EventKind::Start, Instant::now());
    // One session per worker, reused across its whole subtree.
    let mut session = match ctx.factory.connect(session_key(worker_id, 0)) {
        Ok(b) => Some(Session::new(session_key(worker_id, 0), b, ctx.opts.session.clone())),
        Err(e) => {
            warn!("worker {worker_id}: cannot connect: {e}");
            None
        }
    };

    for (index, root) in roots.iter().enumerate() {
        let mut events = Vec::new();
        if index == 0 {
            events.push(start_event.clone());
        }
        let mut records = Vec::new();
        let outcome = match session.as_mut() {
            Some(s) => expand_root(ctx, s, worker_id, root, &mut records, &mut events, &mut stats),
            None => Err(DriverError::Backend("no session".into())),
        };
        let failed = match outcome {
            Ok(()) => false,
            Err(e) => {
                warn!("worker {worker_id}: root {root} failed: {e}");
                true
            }
        };
        let kind = if failed {
            EventKind::RootFailed
        } else {
            EventKind::RootDone
        };
        events.push(ctx.event(worker_id, kind, Instant::now()));
        stats.failures += failed as usize;
        stats.records_emitted += records.len();
        let _ = tx.send(RootBatch {
            worker_id,
            index,
            root: root.clone(),
            failed,
            records,
            events,
        });
    }
    stats
}

fn expand_root<F: BackendFactory, B: Backend>(
    ctx: &Ctx<'_, F>,
    session: &mut Session<B>,
    worker_id: usize,
    root: &VideoId,
    records: &mut Vec<RecommendationRecord>,
    events: &mut Vec<Event>,
    stats: &mut WorkerStats,
) -> Result<(), DriverError> {
    let config = ctx.config;
    let mut frontier = vec![root.clone()];
    for depth in 1..=config.depth {
        let mut next = Vec::with_capacity(frontier.len() * config.breadth);
        for parent in &frontier {
            let children = match fetch_children(ctx, session, worker_id, parent, events, stats) {
                Ok(c) => c,
                // The root page itself is the only load whose failure sinks the root.
                Err(e) if depth == 1 => return Err(e),
                Err(e) => {
                    warn!("worker {worker_id}: giving up on {parent}: {e}");
                    stats.deficit += config.breadth;
                    continue;
                }
            };
            stats.deficit += config.breadth - children.len();
            for (i, child) in children.into_iter().enumerate() {
                records.push(ctx.record(root, parent, child.clone(), depth, i + 1, worker_id, false));
                next.push(child);
            }
        }
        frontier = next;
    }
    Ok(())
}

/// Loads `parent` and returns its first `breadth` recommendations, reloading
/// while the list comes back short. After `max_retries` reloads the longest
/// list seen is returned.
fn fetch_children<F: BackendFactory, B: Backend>(
    ctx: &Ctx<'_, F>,
    session: &mut Session<B>,
    worker_id: usize,
    parent: &VideoId,
    events: &mut Vec<Event>,
    stats: &mut WorkerStats,
) -> Result<Vec<VideoId>, DriverError> {
    let config = ctx.config;
    let mut best: Option<Vec<VideoId>> = None;
    let mut last_err = None;
    for attempt in 0..=config.max_retries {
        if attempt > 0 {
            stats.retries += 1;
        }
        match session.open_video(parent, CrawlFormat::LongForm) {
            Ok(()) => {}
            Err(e @ DriverError::LoadTimeout { .. }) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        }
        events.push(ctx.event(worker_id, EventKind::PageLoaded, Instant::now()));
        let doc = session.fetch_document()?;
        match extract_recommendations(&doc, config.breadth) {
            Ok(ids) if ids.len() >= config.breadth => return Ok(ids),
            Ok(ids) => {
                debug!(
                    "{parent}: {} of {} recommendations, reloading",
                    ids.len(),
                    config.breadth
                );
                if best.as_ref().is_none_or(|b| ids.len() > b.len()) {
                    best = Some(ids);
                }
            }
            Err(e) => last_err = Some(e.into()),
        }
    }
    best.ok_or_else(|| last_err.expect("failed attempts leave an error"))
}

/// Metadata for every distinct video in `records`, sorted by id. Each id is
/// fetched once however often it occurs.
pub fn collect_metadata(
    platform: &Platform,
    records: &[RecommendationRecord],
    exec: Exec,
) -> Result<Vec<VideoMeta>, SimError> {
    let ids: Vec<VideoId> = records
        .iter()
        .map(|r| r.video_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    exec.try_map(&ids, |id| platform.metadata(id))
}
