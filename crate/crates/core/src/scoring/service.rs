use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmotionScores, Scorer, ScoringError, ToxicityScores};

pub const SCORER_URL_ENV: &str = "SCORER_URL";

/// Emotion rows may be off by this much and still get re-normalized.
const RENORMALIZE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub endpoint: String,
    pub max_batch: usize,
    pub in_flight: usize,
    pub attempts: usize,
    pub backoff: Duration,
    pub timeout: Duration,
}

impl ServiceConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        ServiceConfig {
            endpoint: endpoint.into(),
            max_batch: 64,
            in_flight: 4,
            attempts: 3,
            backoff: Duration::from_millis(200),
            timeout: Duration::from_secs(30),
        }
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(SCORER_URL_ENV).ok().map(ServiceConfig::new)
    }
}

#[derive(Serialize)]
struct Request<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct Response {
    emotions: Vec<Vec<f64>>,
    toxicity: Vec<f64>,
}

/// Blocking client for an external emotion/toxicity service.
pub struct ServiceClient {
    config: ServiceConfig,
    agent: ureq::Agent,
}

impl ServiceClient {
    pub fn new(config: ServiceConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        ServiceClient { config, agent }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    /// Sends one batch of at most `max_batch` texts.
    pub fn score_via_service(&self, texts: &[String]) -> Result<Vec<(EmotionScores, ToxicityScores)>, ScoringError> {
        if texts.len() > self.config.max_batch {
            return Err(ScoringError::BatchTooLarge {
                got: texts.len(),
                max: self.config.max_batch,
            });
        }
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let attempts = self.config.attempts.max(1);
        let mut cause = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.config.backoff * 2u32.pow(attempt as u32 - 1));
            }
            match self.agent.post(&self.config.endpoint).send_json(Request { texts }) {
                Ok(resp) => {
                    let body: Response = resp
                        .into_json()
                        .map_err(|e| ScoringError::Protocol(format!("undecodable body: {e}")))?;
                    return validate_response(body, texts.len());
                }
                Err(ureq::Error::Status(code, _)) if code >= 500 => {
                    cause = format!("HTTP {code}");
                }
                Err(ureq::Error::Status(code, _)) => {
                    return Err(ScoringError::Protocol(format!("HTTP {code}")));
                }
                Err(ureq::Error::Transport(t)) => {
                    cause = t.to_string();
                }
            }
            log::warn!("scorer attempt {} failed: {cause}", attempt + 1);
        }
        Err(ScoringError::ServiceUnavailable { attempts, cause })
    }
}

fn validate_response(body: Response, expected: usize) -> Result<Vec<(EmotionScores, ToxicityScores)>, ScoringError> {
    if body.emotions.len() != expected || body.toxicity.len() != expected {
        return Err(ScoringError::Protocol(format!(
            "expected {expected} rows, got {} emotion rows and {} toxicity values",
            body.emotions.len(),
            body.toxicity.len()
        )));
    }
    body.emotions
        .into_iter()
        .zip(body.toxicity)
        .enumerate()
        .map(|(i, (row, tox))| Ok((validate_emotion_row(i, &row)?, validate_toxicity(i, tox)?)))
        .collect()
}

fn validate_emotion_row(i: usize, row: &[f64]) -> Result<EmotionScores, ScoringError> {
    let row: [f64; 7] = row
        .try_into()
        .map_err(|_| ScoringError::Protocol(format!("row {i}: expected 7 emotion values, got {}", row.len())))?;
    if row.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
        return Err(ScoringError::Protocol(format!("row {i}: emotion value outside [0, 1]")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
        return Err(ScoringError::Protocol(format!("row {i}: emotions sum to {sum}")));
    }
    Ok(EmotionScores::normalized(row))
}

fn validate_toxicity(i: usize, tox: f64) -> Result<ToxicityScores, ScoringError> {
    if !(0.0..=1.0).contains(&tox) {
        return Err(ScoringError::Protocol(format!(
            "row {i}: toxicity {tox} outside [0, 1]"
        )));
    }
    Ok(ToxicityScores { toxicity: tox })
}

impl Scorer for ServiceClient {
    /// Splits into `max_batch` chunks and keeps up to `in_flight` requests
    /// open at once.
    fn score_batch(&self, texts: &[String]) -> Result<Vec<(EmotionScores, ToxicityScores)>, ScoringError> {
        let chunks: Vec<&[String]> = texts.chunks(self.config.max_batch.max(1)).collect();
        if chunks.len() <= 1 {
            return self.score_via_service(texts);
        }
        let results: Vec<Mutex<Option<Result<_, ScoringError>>>> = chunks.iter().map(|_| Mutex::new(None)).collect();
        let next = Mutex::new(0usize);
        thread::scope(|s| {
            for _ in 0..self.config.in_flight.clamp(1, chunks.len()) {
                s.spawn(|| loop {
                    let i = {
                        let mut n = next.lock().unwrap();
                        let i = *n;
                        *n += 1;
                        i
                    };
                    let Some(chunk) = chunks.get(i) else { break };
                    *results[i].lock().unwrap() = Some(self.score_via_service(chunk));
                });
            }
        });
        let mut out = Vec::with_capacity(texts.len());
        for r in results {
            out.extend(r.into_inner().unwrap().expect("every chunk scored")?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resp(rows: Vec<Vec<f64>>, tox: Vec<f64>) -> Response {
        Response {
            emotions: rows,
            toxicity: tox,
        }
    }

    #[test]
    fn uniform_rows_pass_through() {
        let out = validate_response(resp(vec![vec![1.0 / 7.0; 7]], vec![0.2]), 1).unwrap();
        for v in out[0].0.to_array() {
            assert!((v - 1.0 / 7.0).abs() < 1e-12);
        }
        assert_eq!(out[0].1.toxicity, 0.2);
    }

    #[test]
    fn slightly_off_rows_are_renormalized() {
        let mut row = vec![0.0; 7];
        row[4] = 1.0005;
        let out = validate_response(resp(vec![row], vec![0.0]), 1);
        // 1.0005 is outside [0, 1] as a single component; spread it instead.
        assert!(out.is_err());
        let row = vec![0.2, 0.1, 0.1, 0.2, 0.2005, 0.1, 0.1];
        let out = validate_response(resp(vec![row], vec![0.0]), 1).unwrap();
        assert!((out[0].0.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_rows() {
        let row = vec![0.5, 0.1, 0.1, 0.2, 0.3, 0.2, 0.1];
        assert!(matches!(
            validate_response(resp(vec![row], vec![0.0]), 1),
            Err(ScoringError::Protocol(_))
        ));
        assert!(validate_response(resp(vec![vec![0.5; 6]], vec![0.0]), 1).is_err());
        assert!(validate_response(resp(vec![vec![1.0 / 7.0; 7]], vec![1.5]), 1).is_err());
        assert!(validate_response(resp(vec![], vec![]), 1).is_err());
    }
}
