//! Hosts protocol roles on fabric nodes and drives consumer scripts.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use log::{debug, info};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use sdpc_core::content::{
    decrypt_segment, decrypt_segment_with_key, encrypt_segment, segment_content, ContentObject, Segment,
};
use sdpc_core::crypto::{hash_concat, Digest, KeyPair};
use sdpc_core::protocol::{
    decode_message, encode_message, Consumer, ConsumerIdentity, Manager, ProtocolConfig, ProtocolMessage, Publisher,
    SessionState, Transcript,
};

use crate::config::{ActionSpec, Mode, Op, ScenarioConfig};
use crate::fabric::{Action, Endpoint};
use crate::metrics::{ConsumerMetrics, RunOutcome, StolenTicket};
use crate::packet::{Data, Interest, Meta, Payload};
use crate::topology::Role;

/// Per-consumer segment key used by the baseline modes.
pub fn baseline_key(session_key: &Digest, index: u64) -> Digest {
    hash_concat(&[session_key.as_bytes(), &index.to_be_bytes()])
}

/// Consumer-specific opaque name used when meta is encrypted.
pub fn opaque_name(consumer: &str, content: &str) -> String {
    let tag = hash_concat(&[consumer.as_bytes(), b"|", content.as_bytes()]).to_hex();
    format!("{content}/enc-{}", &tag[..16])
}

fn content_of(name: &str) -> &str {
    name.find("/enc-").map_or(name, |i| &name[..i])
}

#[derive(Debug, Clone)]
enum TimerKind {
    Start(String),
    Deadline { consumer: String, run_id: String },
    Tickets(String),
}

#[derive(Debug)]
struct Current {
    run_id: String,
    action: ActionSpec,
    publisher: String,
    started: u64,
    fetch_name: String,
    outstanding: BTreeSet<u64>,
    refused: u64,
}

pub(crate) struct ConsumerHost {
    pub(crate) consumer: Consumer,
    queue: VecDeque<ActionSpec>,
    current: Option<Current>,
    /// Content name -> key protecting per-consumer segments (baseline modes).
    keys: BTreeMap<String, Digest>,
    runs: u64,
}

pub struct World {
    pub(crate) config: ScenarioConfig,
    pub(crate) consumers: BTreeMap<String, ConsumerHost>,
    pub(crate) publishers: BTreeMap<String, Publisher>,
    pub(crate) manager: Manager,
    pub(crate) manager_id: String,
    pub(crate) objects: BTreeMap<String, ContentObject>,
    plain: BTreeMap<String, Vec<Segment>>,
    roles: BTreeMap<String, Role>,
    pub(crate) transcript: Transcript,
    pub(crate) metrics: BTreeMap<String, ConsumerMetrics>,
    pub(crate) runs: Vec<RunOutcome>,
    pub(crate) stolen: Vec<StolenTicket>,
    pub(crate) publisher_load: BTreeMap<String, u64>,
    pub(crate) violations: Vec<String>,
    /// Plaintext each consumer recovered: (consumer, content) -> index -> bytes.
    pub(crate) recovered: BTreeMap<(String, String), BTreeMap<u64, Vec<u8>>>,
    pending: BTreeMap<(String, String), Interest>,
    timers: BTreeMap<u64, TimerKind>,
    next_token: u64,
}

/// A timer the scenario runner must schedule before starting the fabric.
pub(crate) struct InitialTimer {
    pub node: String,
    pub at: u64,
    pub token: u64,
}

impl World {
    pub(crate) fn build(config: &ScenarioConfig) -> Result<(Self, Vec<InitialTimer>), String> {
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let protocol = ProtocolConfig {
            stolen_ticket_timeout: config.ticket_timeout,
            ..ProtocolConfig::default()
        };
        let manager_id = config.manager_id().ok_or("no manager node")?.to_owned();

        let manager_keys = KeyPair::generate(&mut rng);
        let mut manager = Manager::new(manager_id.clone(), manager_keys, protocol, rng.next_u64());

        let mut publishers = BTreeMap::new();
        for n in config.nodes.iter().filter(|n| n.role == Role::Publisher) {
            let keys = KeyPair::generate(&mut rng);
            let mut p = Publisher::new(n.id.clone(), keys.clone(), protocol, rng.next_u64());
            p.set_manager_key(*manager.public_key());
            manager.register_publisher(n.id.clone(), *p.public_key(), Some(keys));
            publishers.insert(n.id.clone(), p);
        }

        let mut objects = BTreeMap::new();
        let mut plain = BTreeMap::new();
        for c in &config.content {
            let mut payload = vec![0u8; c.size];
            rng.fill_bytes(&mut payload);
            let publish_time = c
                .publish_time
                .unwrap_or_else(|| rng.gen_range(1_500_000_000..1_800_000_000));
            let obj = ContentObject::new(c.name.clone(), c.version.clone(), publish_time, payload, c.segment_size)
                .map_err(|e| format!("content {}: {e}", c.name))?;
            let publisher = publishers.get_mut(c.publisher().unwrap()).unwrap();
            publisher
                .publish(&obj)
                .map_err(|e| format!("content {}: {e}", c.name))?;
            plain.insert(c.name.clone(), segment_content(&obj).map_err(|e| e.to_string())?);
            objects.insert(c.name.clone(), obj);
        }

        let mut consumers = BTreeMap::new();
        let mut metrics = BTreeMap::new();
        for n in config.nodes.iter().filter(|n| n.role == Role::Consumer) {
            let mut secret = vec![0u8; 32];
            rng.fill_bytes(&mut secret);
            if n.registered {
                let profile = n.profile.clone().unwrap_or_else(|| format!("profile-of-{}", n.id));
                manager.register_consumer(n.id.clone(), secret.clone(), profile);
            }
            let identity = ConsumerIdentity::new(n.id.clone(), secret).map_err(|e| e.to_string())?;
            let mut consumer = Consumer::new(identity, rng.next_u64());
            for (pid, p) in &publishers {
                consumer.learn_publisher_key(pid.clone(), *p.public_key());
            }
            let queue = config.actions.iter().filter(|a| a.consumer == n.id).cloned().collect();
            consumers.insert(
                n.id.clone(),
                ConsumerHost {
                    consumer,
                    queue,
                    current: None,
                    keys: BTreeMap::new(),
                    runs: 0,
                },
            );
            metrics.insert(n.id.clone(), ConsumerMetrics::default());
        }

        let mut world = World {
            config: config.clone(),
            consumers,
            publishers,
            manager,
            manager_id,
            objects,
            plain,
            roles: config.nodes.iter().map(|n| (n.id.clone(), n.role)).collect(),
            transcript: Transcript::new(),
            metrics,
            runs: Vec::new(),
            stolen: Vec::new(),
            publisher_load: BTreeMap::new(),
            violations: Vec::new(),
            recovered: BTreeMap::new(),
            pending: BTreeMap::new(),
            timers: BTreeMap::new(),
            next_token: 0,
        };
        let starts: Vec<(String, u64)> = world
            .consumers
            .iter()
            .filter_map(|(id, h)| h.queue.front().map(|a| (id.clone(), a.tick)))
            .collect();
        let initial = starts
            .into_iter()
            .map(|(id, at)| {
                let token = world.token(TimerKind::Start(id.clone()));
                InitialTimer { node: id, at, token }
            })
            .collect();
        Ok((world, initial))
    }

    fn token(&mut self, kind: TimerKind) -> u64 {
        self.next_token += 1;
        self.timers.insert(self.next_token, kind);
        self.next_token
    }

    fn timer(&mut self, at: u64, kind: TimerKind) -> Action {
        Action::Timer {
            at,
            token: self.token(kind),
        }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn publisher(&self, id: &str) -> Option<&Publisher> {
        self.publishers.get(id)
    }

    pub fn consumer(&self, id: &str) -> Option<&Consumer> {
        self.consumers.get(id).map(|h| &h.consumer)
    }

    pub fn manager(&self) -> &Manager {
        &self.manager
    }

    /// Concatenated plaintext a consumer decrypted for `content`, in index order.
    pub fn recovered(&self, consumer: &str, content: &str) -> Option<Vec<u8>> {
        let parts = self.recovered.get(&(consumer.to_owned(), content.to_owned()))?;
        Some(parts.values().flatten().copied().collect())
    }

    fn send(&mut self, from: &str, to: &str, run_id: &str, msg: ProtocolMessage, now: u64) -> Action {
        let bytes = encode_message(&msg);
        self.transcript.record(now, from, to, run_id, &msg, bytes.len());
        Action::Interest(Interest {
            name: format!("/{to}/_proto/{run_id}/{}", msg.tag()),
            segment_index: None,
            auth_payload: Some(bytes),
            run_id: run_id.to_owned(),
            origin: from.to_owned(),
        })
    }

    fn reply(&mut self, from: &str, interest: &Interest, msg: ProtocolMessage, now: u64) -> Action {
        let bytes = encode_message(&msg);
        self.transcript
            .record(now, from, &interest.origin, &interest.run_id, &msg, bytes.len());
        Action::Data(Data::reply(interest, Payload::Protocol(bytes), from))
    }

    fn nack(from: &str, interest: &Interest, reason: impl ToString) -> Action {
        debug!("{from} refuses {}: {}", interest.name, reason.to_string());
        Action::Data(Data::reply(interest, Payload::Nack(reason.to_string()), from))
    }

    fn ack(from: &str, interest: &Interest) -> Action {
        Action::Data(Data::reply(interest, Payload::Ack, from))
    }

    fn arm_ticket_timer(&mut self, publisher: &str) -> Option<Action> {
        let at = self.publishers[publisher].next_deadline()?;
        Some(self.timer(at, TimerKind::Tickets(publisher.to_owned())))
    }

    // ---- consumer side ----

    fn start_next(&mut self, c: &str, now: u64) -> Vec<Action> {
        let host = self.consumers.get_mut(c).unwrap();
        if host.current.is_some() {
            return vec![];
        }
        let Some(action) = host.queue.pop_front() else {
            return vec![];
        };
        if action.tick > now {
            let at = action.tick;
            host.queue.push_front(action);
            return vec![self.timer(at, TimerKind::Start(c.to_owned()))];
        }
        host.runs += 1;
        let run_id = format!("{c}-{}", host.runs);
        let spec = self
            .config
            .content_spec(&action.content)
            .expect("validated content")
            .clone();
        let publisher = spec.publisher().unwrap().to_owned();
        let fetch_name = if self.config.mode == Mode::BaselineEncryptedMeta {
            opaque_name(c, &spec.name)
        } else {
            spec.name.clone()
        };
        info!("t={now} {c} starts {:?} {} as {run_id}", action.op, action.content);

        let mut actions = vec![self.timer(
            now + self.config.action_timeout,
            TimerKind::Deadline {
                consumer: c.into(),
                run_id: run_id.clone(),
            },
        )];
        let consumer = &mut self.consumers.get_mut(c).unwrap().consumer;
        let first = match action.op {
            Op::Subscribe => consumer.subp_init(&publisher, &spec.name).map(ProtocolMessage::SubpM1),
            Op::Access => consumer
                .apsub_init(&publisher, &spec.name)
                .map(ProtocolMessage::ApsubM1),
            Op::Access3 => consumer
                .apsub3_init(action.home.as_deref().unwrap(), &publisher, &spec.name)
                .map(ProtocolMessage::Apsub3M1),
            Op::Fetch => {
                let count = spec.segment_count();
                let m = self.metrics.get_mut(c).unwrap();
                m.segments_requested += count;
                for k in 1..=count {
                    actions.push(Action::Interest(Interest {
                        name: fetch_name.clone(),
                        segment_index: Some(k),
                        auth_payload: None,
                        run_id: run_id.clone(),
                        origin: c.to_owned(),
                    }));
                }
                self.consumers.get_mut(c).unwrap().current = Some(Current {
                    run_id,
                    action,
                    publisher,
                    started: now,
                    fetch_name,
                    outstanding: (1..=count).collect(),
                    refused: 0,
                });
                return actions;
            }
        };
        let host = self.consumers.get_mut(c).unwrap();
        host.current = Some(Current {
            run_id: run_id.clone(),
            action,
            publisher: publisher.clone(),
            started: now,
            fetch_name,
            outstanding: BTreeSet::new(),
            refused: 0,
        });
        match first {
            Ok(msg) => {
                actions.push(self.send(c, &publisher, &run_id, msg, now));
                actions
            }
            Err(e) => {
                actions.extend(self.finish(c, now, format!("failed: {e}")));
                actions
            }
        }
    }

    fn finish(&mut self, c: &str, now: u64, outcome: String) -> Vec<Action> {
        let host = self.consumers.get_mut(c).unwrap();
        let Some(cur) = host.current.take() else {
            return vec![];
        };
        if cur.action.op == Op::Fetch && outcome == "timeout" {
            self.metrics.get_mut(c).unwrap().segments_timed_out += cur.outstanding.len() as u64;
        }
        info!(
            "t={now} {} {:?} {}: {outcome}",
            cur.run_id, cur.action.op, cur.action.content
        );
        self.runs.push(RunOutcome {
            run_id: cur.run_id,
            consumer: c.to_owned(),
            op: format!("{:?}", cur.action.op).to_lowercase(),
            content: cur.action.content,
            started: cur.started,
            finished: now,
            outcome,
        });
        self.start_next(c, now)
    }

    fn protocol_done(&mut self, c: &str, now: u64) -> Vec<Action> {
        let host = self.consumers.get_mut(c).unwrap();
        let cur = host.current.as_ref().unwrap();
        let (content, publisher, op) = (cur.action.content.clone(), cur.publisher.clone(), cur.action.op);
        let consumer_key = match op {
            Op::Subscribe | Op::Access => host.consumer.subscription(&publisher).map(|s| s.session_key),
            Op::Access3 => host.consumer.temp_key(&publisher).copied(),
            Op::Fetch => None,
        };
        let publisher_side = self.publishers[&publisher]
            .session(c, &content)
            .filter(|s| s.state == SessionState::Established)
            .map(|s| s.key);
        match (consumer_key, publisher_side) {
            (Some(a), Some(b)) if a == b => {
                self.consumers.get_mut(c).unwrap().keys.insert(content, a);
            }
            _ => self
                .violations
                .push(format!("{c}: {op:?} {content} acknowledged without matching keys")),
        }
        self.finish(c, now, "ok".into())
    }

    fn consumer_data(&mut self, c: &str, data: &Data, now: u64) -> Vec<Action> {
        let host = self.consumers.get_mut(c).unwrap();
        let Some(cur) = host.current.as_mut() else {
            return vec![];
        };
        if cur.action.op == Op::Fetch {
            let Some(idx) = data.segment_index else { return vec![] };
            if data.name != cur.fetch_name || !cur.outstanding.remove(&idx) {
                return vec![];
            }
            let content = cur.action.content.clone();
            let done = cur.outstanding.is_empty();
            if !matches!(data.payload, Payload::Segment(_)) {
                cur.refused += 1;
            }
            let all_delivered = cur.refused == 0;
            let m = self.metrics.get_mut(c).unwrap();
            match &data.payload {
                Payload::Segment(seg) => {
                    m.segments_delivered += 1;
                    *m.served_by.entry(data.served_by.clone()).or_default() += 1;
                    m.total_hops += data.hops;
                    if self.roles.get(&data.served_by) == Some(&Role::Router) {
                        m.cache_hits += 1;
                    } else {
                        m.publisher_served += 1;
                    }
                    let host = &self.consumers[c];
                    let opened = match self.config.mode {
                        Mode::Sdpc => host.consumer.key_msg(&content).map(|km| decrypt_segment(seg, km)),
                        _ => host
                            .keys
                            .get(&content)
                            .map(|k| decrypt_segment_with_key(seg, &baseline_key(k, idx))),
                    };
                    let m = self.metrics.get_mut(c).unwrap();
                    match opened {
                        Some(Ok(pt)) => {
                            m.decrypt_ok += 1;
                            if self.plain[&content].get(idx as usize - 1).map(|s| &s.body) != Some(&pt) {
                                self.violations
                                    .push(format!("{c} decrypted wrong plaintext for {content}#{idx}"));
                            }
                            self.recovered
                                .entry((c.to_owned(), content.clone()))
                                .or_default()
                                .insert(idx, pt);
                        }
                        other => {
                            m.decrypt_fail += 1;
                            if self.config.mode == Mode::Sdpc && other.is_some() {
                                self.violations
                                    .push(format!("{c} holds the key message but failed on {content}#{idx}"));
                            }
                        }
                    }
                }
                _ => m.segments_refused += 1,
            }
            if done {
                let outcome = if all_delivered { "ok" } else { "partial" };
                return self.finish(c, now, outcome.into());
            }
            return vec![];
        }

        if data.run_id != cur.run_id {
            return vec![];
        }
        let (run_id, publisher) = (cur.run_id.clone(), cur.publisher.clone());
        match &data.payload {
            Payload::Ack => self.protocol_done(c, now),
            Payload::Nack(reason) => self.finish(c, now, format!("failed: {reason}")),
            Payload::Segment(_) | Payload::Gop(_) => vec![],
            Payload::Protocol(bytes) => {
                let consumer = &mut self.consumers.get_mut(c).unwrap().consumer;
                let next = match decode_message(bytes) {
                    Ok(ProtocolMessage::SubpM4(m4)) => consumer.subp_finish(&m4).map(ProtocolMessage::SubpM5),
                    Ok(ProtocolMessage::ApsubM2(m2)) => consumer.apsub_finish(&m2).map(ProtocolMessage::ApsubM3),
                    Ok(ProtocolMessage::Apsub3M4(m4)) => consumer.apsub3_finish(&m4).map(ProtocolMessage::Apsub3M5),
                    Ok(other) => return self.finish(c, now, format!("failed: unexpected {}", other.tag())),
                    Err(e) => return self.finish(c, now, format!("failed: {e}")),
                };
                match next {
                    Ok(msg) => vec![self.send(c, &publisher, &run_id, msg, now)],
                    Err(e) => self.finish(c, now, format!("failed: {e}")),
                }
            }
        }
    }

    // ---- publisher side ----

    fn serve_segment(&mut self, p: &str, interest: &Interest) -> Action {
        let content = content_of(&interest.name).to_owned();
        let Some(idx) = interest.segment_index else {
            return Self::nack(p, interest, "segment index required");
        };
        let publisher = &self.publishers[p];
        let version = publisher.content(&content).map(|c| c.version.clone());
        let (segment, cacheable, meta) = match self.config.mode {
            Mode::Sdpc => match publisher.segment(&content, idx) {
                Some(s) => (s.clone(), true, true),
                None => return Self::nack(p, interest, "no such segment"),
            },
            mode => {
                let key = match publisher.session(&interest.origin, &content) {
                    Some(s) if s.state == SessionState::Established => s.key,
                    _ => return Self::nack(p, interest, "no session for requester"),
                };
                let Some(plain) = self
                    .plain
                    .get(&content)
                    .and_then(|s| s.get((idx as usize).wrapping_sub(1)))
                else {
                    return Self::nack(p, interest, "no such segment");
                };
                let clear = mode == Mode::BaselineClearMeta;
                (encrypt_segment(plain, &baseline_key(&key, idx)), clear, clear)
            }
        };
        *self.publisher_load.entry(p.to_owned()).or_default() += 1;
        Action::Data(Data {
            name: interest.name.clone(),
            segment_index: Some(idx),
            payload: Payload::Segment(segment),
            cacheable,
            meta: meta.then(|| Meta {
                name: content,
                version: version.unwrap_or_default(),
                index: idx,
            }),
            run_id: interest.run_id.clone(),
            served_by: p.to_owned(),
            hops: 0,
        })
    }

    fn publisher_interest(&mut self, p: &str, interest: &Interest, now: u64) -> Vec<Action> {
        let Some(bytes) = &interest.auth_payload else {
            return vec![self.serve_segment(p, interest)];
        };
        let msg = match decode_message(bytes) {
            Ok(m) => m,
            Err(e) => return vec![Self::nack(p, interest, e)],
        };
        let m_id = self.manager_id.clone();
        let run_id = interest.run_id.clone();
        let publisher = self.publishers.get_mut(p).unwrap();
        match msg {
            ProtocolMessage::SubpM1(m1) => {
                let m2 = publisher.subp_forward(&m1);
                self.pending.insert((p.to_owned(), run_id.clone()), interest.clone());
                vec![self.send(p, &m_id, &run_id, ProtocolMessage::SubpM2(m2), now)]
            }
            ProtocolMessage::SubpM5(m5) => match publisher.subp_confirm(&m5, now) {
                Ok(m6) => vec![
                    Self::ack(p, interest),
                    self.send(p, &m_id, &run_id, ProtocolMessage::SubpM6(m6), now),
                ],
                Err(e) => vec![Self::nack(p, interest, e)],
            },
            ProtocolMessage::ApsubM1(m1) => match publisher.apsub_respond(&m1, now) {
                Ok(m2) => {
                    let mut out = vec![self.reply(p, interest, ProtocolMessage::ApsubM2(m2), now)];
                    out.extend(self.arm_ticket_timer(p));
                    out
                }
                Err(e) => vec![Self::nack(p, interest, e)],
            },
            ProtocolMessage::ApsubM3(m3) => match publisher.apsub_confirm(&m3, now) {
                Ok(()) => vec![Self::ack(p, interest)],
                Err(e) => vec![Self::nack(p, interest, e)],
            },
            ProtocolMessage::Apsub3M1(m1) => match publisher.apsub3_forward(&m1) {
                Ok(m2) => {
                    self.pending.insert((p.to_owned(), run_id.clone()), interest.clone());
                    vec![self.send(p, &m_id, &run_id, ProtocolMessage::Apsub3M2(m2), now)]
                }
                Err(e) => vec![Self::nack(p, interest, e)],
            },
            ProtocolMessage::Apsub3M5(m5) => match publisher.apsub3_confirm(&m5, now) {
                Ok(m6) => vec![
                    Self::ack(p, interest),
                    self.send(p, &m_id, &run_id, ProtocolMessage::Apsub3M6(m6), now),
                ],
                Err(e) => vec![Self::nack(p, interest, e)],
            },
            other => vec![Self::nack(p, interest, format!("unexpected {}", other.tag()))],
        }
    }

    fn publisher_data(&mut self, p: &str, data: &Data, now: u64) -> Vec<Action> {
        let Some(orig) = self.pending.remove(&(p.to_owned(), data.run_id.clone())) else {
            return vec![];
        };
        let bytes = match &data.payload {
            Payload::Protocol(b) => b,
            Payload::Nack(reason) => return vec![Self::nack(p, &orig, reason)],
            _ => return vec![Self::nack(p, &orig, "unexpected reply from manager")],
        };
        let publisher = self.publishers.get_mut(p).unwrap();
        let reply = match decode_message(bytes) {
            Ok(ProtocolMessage::SubpM3(m3)) => publisher.subp_relay(&m3, now).map(ProtocolMessage::SubpM4),
            Ok(ProtocolMessage::Apsub3M3(m3)) => publisher.apsub3_relay(&m3, now).map(ProtocolMessage::Apsub3M4),
            Ok(other) => return vec![Self::nack(p, &orig, format!("unexpected {}", other.tag()))],
            Err(e) => return vec![Self::nack(p, &orig, e)],
        };
        match reply {
            Ok(msg) => {
                let mut out = vec![self.reply(p, &orig, msg, now)];
                out.extend(self.arm_ticket_timer(p));
                out
            }
            Err(e) => vec![Self::nack(p, &orig, e)],
        }
    }

    fn manager_interest(&mut self, interest: &Interest, now: u64) -> Vec<Action> {
        let m = self.manager_id.clone();
        let Some(bytes) = &interest.auth_payload else {
            return vec![Self::nack(&m, interest, "manager serves no content")];
        };
        let msg = match decode_message(bytes) {
            Ok(msg) => msg,
            Err(e) => return vec![Self::nack(&m, interest, e)],
        };
        let out = match msg {
            ProtocolMessage::SubpM2(m2) => self
                .manager
                .subp_process(&m2, now)
                .map(|m3| Some(ProtocolMessage::SubpM3(m3))),
            ProtocolMessage::SubpM6(m6) => self.manager.subp_complete(&m6).map(|()| None),
            ProtocolMessage::Apsub3M2(m2) => self
                .manager
                .apsub3_process(&m2, now)
                .map(|m3| Some(ProtocolMessage::Apsub3M3(m3))),
            ProtocolMessage::Apsub3M6(m6) => self.manager.apsub3_complete(&m6).map(|()| None),
            other => return vec![Self::nack(&m, interest, format!("unexpected {}", other.tag()))],
        };
        match out {
            Ok(Some(reply)) => vec![self.reply(&m, interest, reply, now)],
            Ok(None) => vec![Self::ack(&m, interest)],
            Err(e) => vec![Self::nack(&m, interest, e)],
        }
    }
}

impl Endpoint for World {
    fn on_interest(&mut self, node: &str, interest: &Interest, now: u64) -> Vec<Action> {
        match self.roles.get(node) {
            Some(Role::Publisher) => self.publisher_interest(node, interest, now),
            Some(Role::Manager) => self.manager_interest(interest, now),
            _ => vec![],
        }
    }

    fn on_data(&mut self, node: &str, data: &Data, now: u64) -> Vec<Action> {
        match self.roles.get(node) {
            Some(Role::Consumer) => self.consumer_data(node, data, now),
            Some(Role::Publisher) => self.publisher_data(node, data, now),
            _ => vec![],
        }
    }

    fn on_timer(&mut self, node: &str, token: u64, now: u64) -> Vec<Action> {
        match self.timers.remove(&token) {
            Some(TimerKind::Start(c)) => self.start_next(&c, now),
            Some(TimerKind::Deadline { consumer, run_id }) => {
                let live = self.consumers[&consumer]
                    .current
                    .as_ref()
                    .is_some_and(|cur| cur.run_id == run_id);
                if live {
                    self.finish(&consumer, now, "timeout".into())
                } else {
                    vec![]
                }
            }
            Some(TimerKind::Tickets(p)) => {
                debug_assert_eq!(node, p);
                let expired = self.publishers.get_mut(&p).unwrap().tick_timers(now);
                for e in expired {
                    info!("t={now} {p} marks ticket of {} stolen", e.consumer_id);
                    self.stolen.push(StolenTicket {
                        publisher: p.clone(),
                        consumer: e.consumer_id,
                        content: e.content_name,
                        protocol: e.protocol.as_str().to_owned(),
                        tick: now,
                    });
                }
                self.arm_ticket_timer(&p).into_iter().collect()
            }
            None => vec![],
        }
    }
}
