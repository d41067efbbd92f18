use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::Mode;
use crate::fabric::PitCounters;

/// Segment delivery and decryption counts for one consumer.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConsumerMetrics {
    pub segments_requested: u64,
    pub segments_delivered: u64,
    /// Publisher answered with a refusal instead of a segment.
    pub segments_refused: u64,
    pub segments_timed_out: u64,
    /// Delivering node -> segment count.
    pub served_by: BTreeMap<String, u64>,
    pub cache_hits: u64,
    pub publisher_served: u64,
    pub decrypt_ok: u64,
    pub decrypt_fail: u64,
    pub total_hops: u64,
    pub mean_hops: f64,
}

impl ConsumerMetrics {
    pub fn finalize(&mut self) {
        self.mean_hops = if self.segments_delivered == 0 {
            0.0
        } else {
            self.total_hops as f64 / self.segments_delivered as f64
        };
    }

    /// Internal consistency of the counters; returns a description of the
    /// first broken relation.
    pub fn check(&self) -> Result<(), String> {
        let served: u64 = self.served_by.values().sum();
        if served != self.segments_delivered {
            return Err(format!(
                "served_by sums to {served}, delivered {}",
                self.segments_delivered
            ));
        }
        if self.cache_hits + self.publisher_served != self.segments_delivered {
            return Err("cache hits + publisher served != delivered".into());
        }
        if self.decrypt_ok + self.decrypt_fail != self.segments_delivered {
            return Err("decrypt outcomes != delivered".into());
        }
        let accounted = self.segments_delivered + self.segments_refused + self.segments_timed_out;
        if accounted != self.segments_requested {
            return Err(format!(
                "{accounted} segments accounted for, {} requested",
                self.segments_requested
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunOutcome {
    pub run_id: String,
    pub consumer: String,
    pub op: String,
    pub content: String,
    pub started: u64,
    pub finished: u64,
    pub outcome: String,
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        self.outcome == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StolenTicket {
    pub publisher: String,
    pub consumer: String,
    pub content: String,
    pub protocol: String,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mode: Mode,
    pub seed: u64,
    pub consumers: BTreeMap<String, ConsumerMetrics>,
    pub runs: Vec<RunOutcome>,
    pub stolen_tickets: Vec<StolenTicket>,
    /// Segments each publisher sent itself.
    pub publisher_load: BTreeMap<String, u64>,
    pub cache_hit_ratio: f64,
    pub mean_hops: f64,
    pub pit: PitCounters,
    pub final_tick: u64,
    pub events: u64,
}

impl MetricsReport {
    pub fn totals(&self) -> ConsumerMetrics {
        let mut t = ConsumerMetrics::default();
        for m in self.consumers.values() {
            t.segments_requested += m.segments_requested;
            t.segments_delivered += m.segments_delivered;
            t.segments_refused += m.segments_refused;
            t.segments_timed_out += m.segments_timed_out;
            for (k, v) in &m.served_by {
                *t.served_by.entry(k.clone()).or_default() += v;
            }
            t.cache_hits += m.cache_hits;
            t.publisher_served += m.publisher_served;
            t.decrypt_ok += m.decrypt_ok;
            t.decrypt_fail += m.decrypt_fail;
            t.total_hops += m.total_hops;
        }
        t.finalize();
        t
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "mode {} seed {}: cache-hit ratio {:.3}, mean hops {:.3}, final tick {}\n",
            self.mode.as_str(),
            self.seed,
            self.cache_hit_ratio,
            self.mean_hops,
            self.final_tick
        );
        for (id, m) in &self.consumers {
            out.push_str(&format!(
                "  {id}: requested {} delivered {} (cache {} / publisher {}) decrypted {}/{} mean hops {:.2}\n",
                m.segments_requested,
                m.segments_delivered,
                m.cache_hits,
                m.publisher_served,
                m.decrypt_ok,
                m.segments_delivered,
                m.mean_hops
            ));
        }
        for r in &self.runs {
            out.push_str(&format!(
                "  run {} {} {} {}: {}\n",
                r.run_id, r.op, r.consumer, r.content, r.outcome
            ));
        }
        for s in &self.stolen_tickets {
            out.push_str(&format!(
                "  ticket of {} at {} marked stolen at tick {}\n",
                s.consumer, s.publisher, s.tick
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_catches_inconsistent_counts() {
        let mut m = ConsumerMetrics {
            segments_requested: 3,
            segments_delivered: 2,
            segments_timed_out: 1,
            ..Default::default()
        };
        m.served_by.insert("R1".into(), 2);
        m.cache_hits = 2;
        m.decrypt_ok = 2;
        assert_eq!(m.check(), Ok(()));
        m.decrypt_fail = 1;
        assert!(m.check().is_err());
    }

    #[test]
    fn mean_hops_of_nothing_is_zero() {
        let mut m = ConsumerMetrics::default();
        m.finalize();
        assert_eq!(m.mean_hops, 0.0);
    }
}
