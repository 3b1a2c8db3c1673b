use chrono::{DateTime, Utc};

use super::{MotionEvent, Trigger};
use crate::error::{Error, Result};

/// Edge detector over a live presence signal.
#[derive(Debug, Clone, Default)]
pub struct PirTrigger {
    previous: bool,
}

impl PirTrigger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns an event when presence switches from absent to present.
    pub fn step(&mut self, frame_index: u64, timestamp: DateTime<Utc>, present: bool) -> Option<MotionEvent> {
        let rising = present && !self.previous;
        self.previous = present;
        rising.then_some(MotionEvent {
            frame_index,
            timestamp,
            trigger: Trigger::Pir,
            mean_abs_diff: 0.0,
            foreground_ratio: 0.0,
        })
    }

    pub fn reset(&mut self) {
        self.previous = false;
    }
}

/// Replays a presence schedule and yields one event per rising edge.
#[derive(Debug, Clone)]
pub struct PirSource {
    schedule: Vec<(DateTime<Utc>, bool)>,
    next: usize,
    edge: PirTrigger,
}

impl PirSource {
    pub fn new(schedule: Vec<(DateTime<Utc>, bool)>) -> Result<Self> {
        for (i, pair) in schedule.windows(2).enumerate() {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::NonMonotoneTimestamps { index: i + 1 });
            }
        }
        Ok(Self {
            schedule,
            next: 0,
            edge: PirTrigger::new(),
        })
    }
}

impl Iterator for PirSource {
    type Item = MotionEvent;

    fn next(&mut self) -> Option<MotionEvent> {
        while self.next < self.schedule.len() {
            let index = self.next;
            let (t, present) = self.schedule[index];
            self.next += 1;
            if let Some(event) = self.edge.step(index as u64, t, present) {
                return Some(event);
            }
        }
        None
    }
}

/// All rising-edge events of a presence schedule.
pub fn pir_source(schedule: &[(DateTime<Utc>, bool)]) -> Result<Vec<MotionEvent>> {
    Ok(PirSource::new(schedule.to_vec())?.collect())
}
