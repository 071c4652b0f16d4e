//! Page-load latency with a concurrency capacity.
//!
//! Up to `capacity` simultaneous loads see the base latency (plus jitter);
//! each load beyond that adds `penalty` to the latency of the load that
//! crossed the line. This gives the flattening speedup curve that shows up
//! once a fixed network link is saturated.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::time::Duration;

use super::ids::{mix_all, unit};

#[derive(Debug)]
pub struct LoadGate {
    seed: u64,
    base_ms: f64,
    jitter_ms: f64,
    capacity: Option<usize>,
    penalty_ms: f64,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
    draws: AtomicU64,
}

/// An admitted page load. Holding it counts toward the in-flight total.
#[must_use]
#[derive(Debug)]
pub struct LoadPermit<'a> {
    gate: &'a LoadGate,
    latency: Duration,
    in_flight: usize,
}

impl LoadPermit<'_> {
    pub fn latency(&self) -> Duration {
        self.latency
    }

    /// In-flight loads (this one included) at admission.
    pub fn in_flight(&self) -> usize {
        self.in_flight
    }

    /// Sleeps for the sampled latency, then releases the slot.
    pub fn wait(self) -> Duration {
        let latency = self.latency;
        if !latency.is_zero() {
            std::thread::sleep(latency);
        }
        latency
    }
}

impl Drop for LoadPermit<'_> {
    fn drop(&mut self) {
        self.gate.in_flight.fetch_sub(1, Ordering::AcqRel);
    }
}

impl LoadGate {
    pub fn new(seed: u64, base_ms: f64, jitter_ms: f64, capacity: Option<usize>, penalty_ms: f64) -> Self {
        LoadGate {
            seed,
            base_ms,
            jitter_ms,
            capacity,
            penalty_ms,
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            draws: AtomicU64::new(0),
        }
    }

    /// Closed-form latency in milliseconds for `in_flight` concurrent loads
    /// and a jitter draw `u` in [0, 1).
    pub fn latency_ms(&self, in_flight: usize, u: f64) -> f64 {
        let jitter = self.jitter_ms * (2.0 * u - 1.0);
        let excess = self.capacity.map_or(0, |c| in_flight.saturating_sub(c));
        (self.base_ms + jitter + self.penalty_ms * excess as f64).max(0.0)
    }

    pub fn enter(&self) -> LoadPermit<'_> {
        let in_flight = self.in_flight.fetch_add(1, Ordering::AcqRel) + 1;
        self.peak.fetch_max(in_flight, Ordering::AcqRel);
        let draw = self.draws.fetch_add(1, Ordering::Relaxed);
        let u = unit(mix_all(&[self.seed, 0x6a7e, draw]));
        let ms = self.latency_ms(in_flight, u);
        LoadPermit {
            gate: self,
            latency: Duration::from_secs_f64(ms / 1000.0),
            in_flight,
        }
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.load(Ordering::Acquire)
    }

    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::Acquire)
    }

    pub fn base_ms(&self) -> f64 {
        self.base_ms
    }
}
