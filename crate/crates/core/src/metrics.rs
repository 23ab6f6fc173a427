//! Training and evaluation logs as newline-delimited JSON, one line per
//! scalar: `run_id, step, episode, key, value, timestamp`.
//!
//! Timestamps come from a [`Clock`]. The default frozen clock writes 0 so that
//! identical runs produce byte-identical files; wall-clock stamping is opt-in.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clock {
    #[default]
    Frozen,
    Wall,
}

impl Clock {
    /// Seconds since the Unix epoch, or 0 when frozen.
    pub fn now(self) -> f64 {
        match self {
            Clock::Frozen => 0.0,
            Clock::Wall => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0.0, |d| d.as_secs_f64()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsEvent {
    pub run_id: String,
    pub step: u64,
    pub episode: u64,
    pub scalars: BTreeMap<String, f64>,
    pub timestamp: f64,
}

/// Collects events for one run; steps must not decrease.
#[derive(Debug, Clone)]
pub struct RunLog {
    run_id: String,
    clock: Clock,
    events: Vec<MetricsEvent>,
}

impl RunLog {
    pub fn new(run_id: impl Into<String>, clock: Clock) -> Self {
        RunLog {
            run_id: run_id.into(),
            clock,
            events: Vec::new(),
        }
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn record<'a>(
        &mut self,
        step: u64,
        episode: u64,
        scalars: impl IntoIterator<Item = (&'a str, f64)>,
    ) {
        debug_assert!(self.events.last().is_none_or(|e| e.step <= step));
        self.events.push(MetricsEvent {
            run_id: self.run_id.clone(),
            step,
            episode,
            scalars: scalars.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            timestamp: self.clock.now(),
        });
    }

    pub fn events(&self) -> &[MetricsEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<MetricsEvent> {
        self.events
    }
}

#[derive(Serialize, Deserialize)]
struct Line {
    run_id: String,
    step: u64,
    episode: u64,
    key: String,
    value: f64,
    timestamp: f64,
}

/// Appends `events` to `path`, creating it if needed. The whole batch goes
/// out in a single write.
pub fn write_metrics(events: &[MetricsEvent], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for event in events {
        for (key, &value) in &event.scalars {
            if !value.is_finite() {
                return Err(Error::Precondition(format!(
                    "metric `{key}` at step {} is not finite",
                    event.step
                )));
            }
            let line = Line {
                run_id: event.run_id.clone(),
                step: event.step,
                episode: event.episode,
                key: key.clone(),
                value,
                timestamp: event.timestamp,
            };
            serde_json::to_writer(&mut buf, &line).expect("metric lines serialize");
            buf.push(b'\n');
        }
    }
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Reads a metrics file back. Consecutive lines sharing run, step, episode
/// and timestamp, with distinct keys, form one event.
pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsEvent>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut events: Vec<MetricsEvent> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line: Line = serde_json::from_str(raw).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        match events.last_mut() {
            Some(last)
                if last.run_id == line.run_id
                    && last.step == line.step
                    && last.episode == line.episode
                    && last.timestamp == line.timestamp
                    && !last.scalars.contains_key(&line.key) =>
            {
                last.scalars.insert(line.key, line.value);
            }
            _ => events.push(MetricsEvent {
                run_id: line.run_id,
                step: line.step,
                episode: line.episode,
                scalars: BTreeMap::from([(line.key, line.value)]),
                timestamp: line.timestamp,
            }),
        }
    }
    Ok(events)
}
