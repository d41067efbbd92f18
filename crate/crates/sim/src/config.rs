use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{Link, Node, Role, Topology, TopologyError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unsupported config extension {0:?} (use .json or .toml)")]
    Extension(String),
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Encryption regime applied fabric-wide.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Sdpc,
    /// Per-consumer segment keys, clear meta: routers cache copies that only
    /// the first requester can open.
    BaselineClearMeta,
    /// Per-consumer segment keys and encrypted meta: nothing is cacheable.
    BaselineEncryptedMeta,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Sdpc, Mode::BaselineClearMeta, Mode::BaselineEncryptedMeta];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sdpc => "sdpc",
            Mode::BaselineClearMeta => "baseline_clear_meta",
            Mode::BaselineEncryptedMeta => "baseline_encrypted_meta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub role: Role,
    #[serde(default)]
    pub cs_capacity: usize,
    /// Consumer profile stored by the manager.
    #[serde(default)]
    pub profile: Option<String>,
    /// Consumers registered with the manager; an unregistered one fails SubP.
    #[serde(default = "yes")]
    pub registered: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
    #[serde(default = "one")]
    pub latency: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentSpec {
    /// `/<publisher id>/...`
    pub name: String,
    #[serde(default = "default_version")]
    pub version: String,
    pub size: usize,
    pub segment_size: usize,
    /// Drawn from the seed when absent.
    #[serde(default)]
    pub publish_time: Option<u64>,
}

fn default_version() -> String {
    "v1".into()
}

impl ContentSpec {
    pub fn publisher(&self) -> Option<&str> {
        self.name.strip_prefix('/')?.split('/').next().filter(|s| !s.is_empty())
    }

    pub fn segment_count(&self) -> u64 {
        self.size.div_ceil(self.segment_size) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    /// SubP with the content's publisher.
    Subscribe,
    /// APSub with the content's publisher, reusing an existing ticket.
    Access,
    /// APSub3 with the content's publisher as third party; needs `home`.
    Access3,
    /// Request every segment of the content.
    Fetch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    #[serde(default)]
    pub tick: u64,
    pub consumer: String,
    pub op: Op,
    pub content: String,
    #[serde(default)]
    pub home: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    Replay,
    Eavesdrop,
    StolenTicket,
    ImpersonatePublisher,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 4] = [
        AdversaryKind::Replay,
        AdversaryKind::Eavesdrop,
        AdversaryKind::StolenTicket,
        AdversaryKind::ImpersonatePublisher,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AdversaryKind::Replay => "replay",
            AdversaryKind::Eavesdrop => "eavesdrop",
            AdversaryKind::StolenTicket => "stolen_ticket",
            AdversaryKind::ImpersonatePublisher => "impersonate_publisher",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    pub kind: AdversaryKind,
    /// Consumer whose traffic or ticket is targeted; defaults to the first
    /// consumer that subscribes.
    #[serde(default)]
    pub target: Option<String>,
    /// Mutation hook: turn off nonce registries before the attack.
    #[serde(default)]
    pub disable_nonce_registry: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_max_ticks")]
    pub max_ticks: u64,
    #[serde(default = "default_pit_lifetime")]
    pub pit_lifetime: u64,
    /// Ticks a consumer waits for one action before giving up on it.
    #[serde(default = "default_action_timeout")]
    pub action_timeout: u64,
    /// Stolen-ticket timer, in ticks.
    #[serde(default = "default_ticket_timeout")]
    pub ticket_timeout: u64,
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
    pub content: Vec<ContentSpec>,
    #[serde(default)]
    pub actions: Vec<ActionSpec>,
    #[serde(default)]
    pub adversary: Option<AdversarySpec>,
}

fn default_max_ticks() -> u64 {
    1_000_000
}
fn default_pit_lifetime() -> u64 {
    100
}
fn default_action_timeout() -> u64 {
    2_000
}
fn default_ticket_timeout() -> u64 {
    5_000
}

impl ScenarioConfig {
    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load by extension: `.json` or `.toml`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            Some("toml") => Self::from_toml(&text),
            other => Err(ConfigError::Extension(other.unwrap_or("").to_owned())),
        }
    }

    pub fn topology(&self) -> Result<Topology, ConfigError> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id.clone(),
                role: n.role,
                cs_capacity: n.cs_capacity,
            })
            .collect();
        let links = self
            .links
            .iter()
            .map(|l| Link {
                a: l.a.clone(),
                b: l.b.clone(),
                latency: l.latency,
            })
            .collect();
        Ok(Topology::new(nodes, links)?)
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn content_spec(&self, name: &str) -> Option<&ContentSpec> {
        self.content.iter().find(|c| c.name == name)
    }

    pub fn manager_id(&self) -> Option<&str> {
        self.nodes
            .iter()
            .find(|n| n.role == Role::Manager)
            .map(|n| n.id.as_str())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id.is_empty() || n.id.contains('/') {
                return Err(invalid(
                    format!("nodes[{i}].id"),
                    "must be non-empty and contain no '/'",
                ));
            }
        }
        let managers = self.nodes.iter().filter(|n| n.role == Role::Manager).count();
        if managers != 1 {
            return Err(invalid(
                "nodes",
                format!("exactly one manager required, found {managers}"),
            ));
        }
        for (i, l) in self.links.iter().enumerate() {
            if l.latency == 0 {
                return Err(invalid(format!("links[{i}].latency"), "must be at least 1"));
            }
        }
        self.topology()?;
        if self.pit_lifetime == 0 {
            return Err(invalid("pit_lifetime", "must be positive"));
        }

        let mut names = BTreeSet::new();
        for (i, c) in self.content.iter().enumerate() {
            let field = |f: &str| format!("content[{i}].{f}");
            let publisher = c
                .publisher()
                .ok_or_else(|| invalid(field("name"), "must look like /<publisher>/..."))?;
            match self.node(publisher) {
                Some(n) if n.role == Role::Publisher => {}
                _ => return Err(invalid(field("name"), format!("{publisher:?} is not a publisher node"))),
            }
            if c.name.trim_start_matches('/').split('/').count() < 2 {
                return Err(invalid(field("name"), "needs a path below the publisher prefix"));
            }
            if c.size == 0 {
                return Err(invalid(field("size"), "must be positive"));
            }
            if c.segment_size == 0 {
                return Err(invalid(field("segment_size"), "must be positive"));
            }
            if !names.insert(c.name.as_str()) {
                return Err(invalid(field("name"), "duplicate content name"));
            }
        }

        for (i, a) in self.actions.iter().enumerate() {
            let field = |f: &str| format!("actions[{i}].{f}");
            match self.node(&a.consumer) {
                Some(n) if n.role == Role::Consumer => {}
                _ => {
                    return Err(invalid(
                        field("consumer"),
                        format!("{:?} is not a consumer node", a.consumer),
                    ))
                }
            }
            if self.content_spec(&a.content).is_none() {
                return Err(invalid(field("content"), format!("unknown content {:?}", a.content)));
            }
            match (a.op, &a.home) {
                (Op::Access3, None) => return Err(invalid(field("home"), "access3 needs a home publisher")),
                (Op::Access3, Some(h)) if self.node(h).map(|n| n.role) != Some(Role::Publisher) => {
                    return Err(invalid(field("home"), format!("{h:?} is not a publisher node")));
                }
                (Op::Subscribe | Op::Access | Op::Fetch, Some(_)) => {
                    return Err(invalid(field("home"), "only access3 takes a home publisher"));
                }
                _ => {}
            }
        }
        if let Some(adv) = &self.adversary {
            if let Some(t) = &adv.target {
                if self.node(t).map(|n| n.role) != Some(Role::Consumer) {
                    return Err(invalid("adversary.target", format!("{t:?} is not a consumer node")));
                }
            }
        }
        Ok(())
    }
}

/// The six-node example network: two consumers behind a shared edge router,
/// one core router, the publisher and the subscription manager.
pub fn six_node_topology() -> (Vec<NodeSpec>, Vec<LinkSpec>) {
    let node = |id: &str, role, cs| NodeSpec {
        id: id.into(),
        role,
        cs_capacity: cs,
        profile: None,
        registered: true,
    };
    let link = |a: &str, b: &str| LinkSpec {
        a: a.into(),
        b: b.into(),
        latency: 1,
    };
    (
        vec![
            NodeSpec {
                profile: Some("tier=premium;region=eu".into()),
                ..node("N_A", Role::Consumer, 0)
            },
            NodeSpec {
                profile: Some("tier=basic;region=eu".into()),
                ..node("N_B", Role::Consumer, 0)
            },
            node("R1", Role::Router, 64),
            node("R2", Role::Router, 64),
            node("P", Role::Publisher, 0),
            node("M", Role::Manager, 0),
        ],
        vec![
            link("N_A", "R1"),
            link("N_B", "R1"),
            link("R1", "R2"),
            link("R2", "P"),
            link("R2", "M"),
        ],
    )
}

/// N_A subscribes and fetches, then N_B does the same.
pub fn six_node_scenario(seed: u64, mode: Mode) -> ScenarioConfig {
    let (nodes, links) = six_node_topology();
    let act = |tick, consumer: &str, op| ActionSpec {
        tick,
        consumer: consumer.into(),
        op,
        content: "/P/movie".into(),
        home: None,
    };
    ScenarioConfig {
        seed,
        mode,
        max_ticks: default_max_ticks(),
        pit_lifetime: default_pit_lifetime(),
        action_timeout: default_action_timeout(),
        ticket_timeout: default_ticket_timeout(),
        nodes,
        links,
        content: vec![
            ContentSpec {
                name: "/P/movie".into(),
                version: "v1".into(),
                size: 4096,
                segment_size: 256,
                publish_time: None,
            },
            ContentSpec {
                name: "/P/series".into(),
                version: "v1".into(),
                size: 1024,
                segment_size: 256,
                publish_time: None,
            },
        ],
        actions: vec![
            act(0, "N_A", Op::Subscribe),
            act(0, "N_A", Op::Fetch),
            ActionSpec {
                content: "/P/series".into(),
                ..act(0, "N_A", Op::Access)
            },
            act(200, "N_B", Op::Subscribe),
            act(200, "N_B", Op::Fetch),
        ],
        adversary: None,
    }
}
