//! Deterministic named-data forwarding.
//!
//! Every node runs the same pipeline: content store lookup, PIT aggregation,
//! FIB forwarding for interests; PIT fan-out and cache insertion for data.
//! Endpoint applications (consumers, publishers, the manager) sit behind the
//! `App` face of their node and talk to the fabric through [`Endpoint`].

use std::collections::BTreeMap;

use log::{debug, trace};
use serde::Serialize;
use thiserror::Error;

use crate::packet::{Data, Interest, PacketKey};
use crate::topology::{NodeId, Role, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FabricConfig {
    pub pit_lifetime: u64,
    pub max_ticks: u64,
}

impl Default for FabricConfig {
    fn default() -> Self {
        Self {
            pit_lifetime: 100,
            max_ticks: 1_000_000,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FabricError {
    #[error("simulation exceeded {max_ticks} ticks (next event at {tick})")]
    Livelock { tick: u64, max_ticks: u64 },
    #[error("unknown node {0:?}")]
    UnknownNode(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Face {
    App,
    Node(NodeId),
}

/// What an endpoint asks its node to do.
#[derive(Debug, Clone)]
pub enum Action {
    Interest(Interest),
    Data(Data),
    Timer { at: u64, token: u64 },
}

pub trait Endpoint {
    fn on_interest(&mut self, node: &str, interest: &Interest, now: u64) -> Vec<Action>;
    fn on_data(&mut self, node: &str, data: &Data, now: u64) -> Vec<Action>;
    fn on_timer(&mut self, node: &str, token: u64, now: u64) -> Vec<Action>;
}

/// Capacity-bounded LRU cache of data packets keyed by name and index.
#[derive(Debug, Clone, Serialize)]
pub struct ContentStore {
    capacity: usize,
    #[serde(skip)]
    entries: BTreeMap<PacketKey, (Data, u64)>,
    #[serde(skip)]
    order: BTreeMap<u64, PacketKey>,
    clock: u64,
    pub hits: u64,
    pub misses: u64,
    pub evictions: u64,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: BTreeMap::new(),
            order: BTreeMap::new(),
            clock: 0,
            hits: 0,
            misses: 0,
            evictions: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: &PacketKey) -> bool {
        self.entries.contains_key(key)
    }

    fn touch(&mut self, key: &PacketKey) {
        self.clock += 1;
        if let Some((_, stamp)) = self.entries.get_mut(key) {
            self.order.remove(stamp);
            *stamp = self.clock;
            self.order.insert(self.clock, key.clone());
        }
    }

    pub fn get(&mut self, key: &PacketKey) -> Option<Data> {
        if self.entries.contains_key(key) {
            self.hits += 1;
            self.touch(key);
            self.entries.get(key).map(|(d, _)| d.clone())
        } else {
            self.misses += 1;
            None
        }
    }

    /// Insert or refresh. Returns the evicted key, if any.
    pub fn insert(&mut self, data: Data) -> Option<PacketKey> {
        if self.capacity == 0 {
            return None;
        }
        let key = data.key();
        if let Some(entry) = self.entries.get_mut(&key) {
            entry.0 = data;
            self.touch(&key);
            return None;
        }
        let mut evicted = None;
        if self.entries.len() >= self.capacity {
            let (_, victim) = self.order.pop_first().expect("non-empty store has an LRU entry");
            self.entries.remove(&victim);
            self.evictions += 1;
            evicted = Some(victim);
        }
        self.clock += 1;
        self.order.insert(self.clock, key.clone());
        self.entries.insert(key, (data, self.clock));
        evicted
    }

    /// Keys from least to most recently used.
    pub fn lru_order(&self) -> Vec<PacketKey> {
        self.order.values().cloned().collect()
    }
}

#[derive(Debug, Clone, Serialize)]
struct PitEntry {
    faces: Vec<Face>,
    expiry: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PitCounters {
    pub registered: u64,
    pub satisfied: u64,
    pub expired: u64,
}

#[derive(Debug, Clone)]
enum FibEntry {
    Local,
    Next(NodeId),
}

struct NodeState {
    role: Role,
    fib: BTreeMap<String, FibEntry>,
    pit: BTreeMap<PacketKey, PitEntry>,
    cs: ContentStore,
}

impl NodeState {
    /// Longest component-wise prefix match.
    fn route(&self, name: &str) -> Option<&FibEntry> {
        self.fib
            .iter()
            .filter(|(prefix, _)| name == prefix.as_str() || name.starts_with(&format!("{prefix}/")))
            .max_by_key(|(prefix, _)| prefix.len())
            .map(|(_, e)| e)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LogRecord {
    pub tick: u64,
    pub node: String,
    pub event: &'static str,
    pub name: String,
    pub index: Option<u64>,
    pub extra: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WirePacket {
    Interest(Interest),
    Data(Data),
}

/// A packet observed crossing a link.
#[derive(Debug, Clone, Serialize)]
pub struct WireRecord {
    pub tick: u64,
    pub from: String,
    pub to: String,
    pub packet: WirePacket,
}

#[derive(Debug)]
enum EventKind {
    Interest { face: Face, interest: Interest },
    Data(Data),
    AppInterest(Interest),
    AppData(Data),
    Timer(u64),
}

#[derive(Debug)]
struct Event {
    node: NodeId,
    kind: EventKind,
}

pub struct Fabric {
    topology: Topology,
    config: FabricConfig,
    nodes: BTreeMap<NodeId, NodeState>,
    queue: BTreeMap<(u64, u64), Event>,
    seq: u64,
    now: u64,
    log: Vec<LogRecord>,
    wiretap: Vec<WireRecord>,
    counters: PitCounters,
}

impl Fabric {
    /// Build node state and install a route to `/<id>` for every producer.
    pub fn new(topology: Topology, config: FabricConfig) -> Self {
        let mut nodes: BTreeMap<NodeId, NodeState> = topology
            .nodes()
            .map(|n| {
                let cs = ContentStore::new(if n.role == Role::Router { n.cs_capacity } else { 0 });
                (
                    n.id.clone(),
                    NodeState {
                        role: n.role,
                        fib: BTreeMap::new(),
                        pit: BTreeMap::new(),
                        cs,
                    },
                )
            })
            .collect();
        let producers: Vec<NodeId> = topology
            .nodes()
            .filter(|n| n.role.is_producer())
            .map(|n| n.id.clone())
            .collect();
        for p in producers {
            let prefix = format!("/{p}");
            for (node, next) in topology.next_hops_toward(&p) {
                nodes
                    .get_mut(&node)
                    .unwrap()
                    .fib
                    .insert(prefix.clone(), FibEntry::Next(next));
            }
            nodes.get_mut(&p).unwrap().fib.insert(prefix, FibEntry::Local);
        }
        Self {
            topology,
            config,
            nodes,
            queue: BTreeMap::new(),
            seq: 0,
            now: 0,
            log: Vec::new(),
            wiretap: Vec::new(),
            counters: PitCounters::default(),
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn log_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.log {
            out.push_str(&serde_json::to_string(r).expect("log record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn wiretap(&self) -> &[WireRecord] {
        &self.wiretap
    }

    pub fn pit_counters(&self) -> PitCounters {
        self.counters
    }

    pub fn pit_len(&self, node: &str) -> usize {
        self.nodes.get(node).map_or(0, |n| n.pit.len())
    }

    /// PIT faces still waiting for data.
    pub fn pending_faces(&self) -> u64 {
        self.nodes
            .values()
            .flat_map(|n| n.pit.values())
            .map(|e| e.faces.len() as u64)
            .sum()
    }

    pub fn content_store(&self, node: &str) -> Option<&ContentStore> {
        self.nodes.get(node).map(|n| &n.cs)
    }

    pub fn schedule_timer(&mut self, node: &str, at: u64, token: u64) -> Result<(), FabricError> {
        if !self.nodes.contains_key(node) {
            return Err(FabricError::UnknownNode(node.to_owned()));
        }
        self.push(at.max(self.now), node, EventKind::Timer(token));
        Ok(())
    }

    /// Have the application at `node` issue an interest right now.
    pub fn inject_interest(&mut self, node: &str, interest: Interest) -> Result<(), FabricError> {
        if !self.nodes.contains_key(node) {
            return Err(FabricError::UnknownNode(node.to_owned()));
        }
        self.forward_interest(node, interest, Face::App);
        Ok(())
    }

    fn push(&mut self, tick: u64, node: &str, kind: EventKind) {
        self.seq += 1;
        self.queue.insert(
            (tick, self.seq),
            Event {
                node: node.to_owned(),
                kind,
            },
        );
    }

    fn record(&mut self, node: &str, event: &'static str, key: &PacketKey, extra: impl Into<String>) {
        let extra = extra.into();
        trace!("t={} {} {} {}#{:?} {}", self.now, node, event, key.0, key.1, extra);
        self.log.push(LogRecord {
            tick: self.now,
            node: node.to_owned(),
            event,
            name: key.0.clone(),
            index: key.1,
            extra,
        });
    }

    fn send_over_link(&mut self, from: &str, to: &str, kind: EventKind) {
        let latency = self
            .topology
            .latency(from, to)
            .expect("forwarding only over existing links");
        let packet = match &kind {
            EventKind::Interest { interest, .. } => WirePacket::Interest(interest.clone()),
            EventKind::Data(data) => WirePacket::Data(data.clone()),
            _ => unreachable!("only packets cross links"),
        };
        self.wiretap.push(WireRecord {
            tick: self.now,
            from: from.to_owned(),
            to: to.to_owned(),
            packet,
        });
        self.push(self.now + latency, to, kind);
    }

    fn forward_interest(&mut self, node: &str, interest: Interest, face: Face) {
        let key = interest.key();
        let now = self.now;
        let state = self.nodes.get_mut(node).unwrap();

        if !interest.is_auth_bearing() {
            if let Some(mut data) = state.cs.get(&key) {
                data.served_by = node.to_owned();
                data.hops = 0;
                self.record(node, "cs_hit", &key, "");
                self.deliver_data(node, data, face);
                return;
            }
        }

        let state = self.nodes.get_mut(node).unwrap();
        let mut expired = 0;
        if let Some(entry) = state.pit.get_mut(&key) {
            if entry.expiry > now {
                if !entry.faces.contains(&face) {
                    entry.faces.push(face);
                    self.counters.registered += 1;
                }
                self.record(node, "pit_aggregate", &key, "");
                return;
            }
            expired = entry.faces.len() as u64;
            state.pit.remove(&key);
        }
        if expired > 0 {
            self.counters.expired += expired;
            self.record(node, "pit_expired", &key, "");
        }

        let state = self.nodes.get_mut(node).unwrap();
        let route = state.route(&interest.name).cloned();
        match route {
            None => {
                self.record(node, "no_route", &key, "dropped");
            }
            Some(route) => {
                state.pit.insert(
                    key.clone(),
                    PitEntry {
                        faces: vec![face],
                        expiry: now + self.config.pit_lifetime,
                    },
                );
                self.counters.registered += 1;
                match route {
                    FibEntry::Local => {
                        self.record(node, "to_app", &key, "");
                        self.push(now, node, EventKind::AppInterest(interest));
                    }
                    FibEntry::Next(next) => {
                        self.record(node, "forward", &key, next.clone());
                        self.send_over_link(
                            node,
                            &next,
                            EventKind::Interest {
                                face: Face::Node(node.to_owned()),
                                interest,
                            },
                        );
                    }
                }
            }
        }
    }

    fn deliver_data(&mut self, node: &str, data: Data, face: Face) {
        match face {
            Face::App => self.push(self.now, node, EventKind::AppData(data)),
            Face::Node(down) => self.send_over_link(node, &down, EventKind::Data(data)),
        }
    }

    fn forward_data(&mut self, node: &str, data: Data) {
        let key = data.key();
        let now = self.now;
        let state = self.nodes.get_mut(node).unwrap();
        let entry = match state.pit.remove(&key) {
            Some(e) if e.expiry > now => e,
            Some(e) => {
                self.counters.expired += e.faces.len() as u64;
                self.record(node, "pit_expired", &key, "data dropped");
                return;
            }
            None => {
                self.record(node, "unsolicited", &key, "dropped");
                return;
            }
        };
        if data.cacheable && data.meta.is_some() && state.role == Role::Router && state.cs.capacity() > 0 {
            if let Some(victim) = state.cs.insert(data.clone()) {
                self.record(node, "cs_evict", &victim, "");
            }
            self.record(node, "cs_insert", &key, "");
        }
        self.counters.satisfied += entry.faces.len() as u64;
        for face in entry.faces {
            self.deliver_data(node, data.clone(), face);
        }
    }

    fn apply(&mut self, node: &str, actions: Vec<Action>) {
        for action in actions {
            match action {
                Action::Interest(i) => self.forward_interest(node, i, Face::App),
                Action::Data(d) => self.forward_data(node, d),
                Action::Timer { at, token } => self.push(at.max(self.now), node, EventKind::Timer(token)),
            }
        }
    }

    /// Process events in `(tick, insertion)` order until the queue drains.
    pub fn run_until_idle(&mut self, endpoint: &mut dyn Endpoint) -> Result<u64, FabricError> {
        let mut processed = 0;
        while let Some((&(tick, _), _)) = self.queue.first_key_value() {
            if tick > self.config.max_ticks {
                return Err(FabricError::Livelock {
                    tick,
                    max_ticks: self.config.max_ticks,
                });
            }
            let (_, event) = self.queue.pop_first().unwrap();
            self.now = tick;
            processed += 1;
            let node = event.node;
            match event.kind {
                EventKind::Interest { face, interest } => self.forward_interest(&node, interest, face),
                EventKind::Data(mut data) => {
                    data.hops += 1;
                    self.forward_data(&node, data)
                }
                EventKind::AppInterest(interest) => {
                    let actions = endpoint.on_interest(&node, &interest, tick);
                    self.apply(&node, actions);
                }
                EventKind::AppData(data) => {
                    let key = data.key();
                    self.record(&node, "app_data", &key, data.served_by.clone());
                    let actions = endpoint.on_data(&node, &data, tick);
                    self.apply(&node, actions);
                }
                EventKind::Timer(token) => {
                    let actions = endpoint.on_timer(&node, token, tick);
                    self.apply(&node, actions);
                }
            }
        }
        debug!("fabric idle at tick {} after {} events", self.now, processed);
        Ok(processed)
    }
}
