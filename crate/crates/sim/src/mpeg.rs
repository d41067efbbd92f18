use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use sdpc_core::content::{
    decrypt_gop_stream, encrypt_gop_stream, DependentFrame, DependentKind, Gop, GopStream, IntraFrame,
};

use crate::config::{six_node_scenario, ActionSpec, ContentSpec, Mode, Op};
use crate::fabric::{Action, Endpoint, Fabric, FabricConfig};
use crate::packet::{Data, Interest, Meta, Payload};
use crate::scenario::{run_scenario, SimError};

const STREAM: &str = "/P/clip";
const GOP_NAME: &str = "/P/clip/gop";
const SUBSCRIBER: &str = "N_A";
const PUBLISHER: &str = "P";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MpegReport {
    pub gops: usize,
    pub keys_derived: usize,
    pub commitments_exchanged: usize,
    pub i_frame_envelopes: usize,
    /// Dependent-frame bytes that differ between the source and the wire.
    pub modified_dependent_bytes: usize,
    pub decrypted_i_frames: usize,
    pub gops_delivered: usize,
}

impl MpegReport {
    pub fn fully_decrypted(&self) -> bool {
        self.decrypted_i_frames == self.gops && self.gops_delivered == self.gops
    }
}

/// Deterministic stand-in for an encoded video: one I-frame and a few P/B
/// frames per group.
pub fn synthetic_stream(gops: usize, seed: u64) -> GopStream {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x6d70_6567);
    let bytes = |rng: &mut ChaCha20Rng, n: usize| {
        let mut v = vec![0u8; n];
        rng.fill_bytes(&mut v);
        v
    };
    let gops = (0..gops)
        .map(|_| {
            let i_len = rng.gen_range(256..1024);
            let i_frame = IntraFrame::Clear(bytes(&mut rng, i_len));
            let dependents = (0..rng.gen_range(2..8))
                .map(|k| {
                    let kind = if k % 3 == 0 { DependentKind::P } else { DependentKind::B };
                    let len = rng.gen_range(32..256);
                    DependentFrame {
                        kind,
                        data: bytes(&mut rng, len),
                    }
                })
                .collect();
            Gop { i_frame, dependents }
        })
        .collect();
    GopStream {
        name: STREAM.into(),
        version: "v1".into(),
        gops,
    }
}

/// Serves GOPs from the publisher and collects them at the subscriber.
struct GopDelivery {
    stream: GopStream,
    received: BTreeMap<u64, Gop>,
}

impl Endpoint for GopDelivery {
    fn on_interest(&mut self, node: &str, interest: &Interest, _now: u64) -> Vec<Action> {
        if node != PUBLISHER || interest.name != GOP_NAME {
            return vec![];
        }
        let idx = interest.segment_index.unwrap_or(0);
        let Some(gop) = (idx as usize).checked_sub(1).and_then(|i| self.stream.gops.get(i)) else {
            return vec![Action::Data(Data::reply(
                interest,
                Payload::Nack("no such gop".into()),
                node,
            ))];
        };
        vec![Action::Data(Data {
            name: interest.name.clone(),
            segment_index: Some(idx),
            payload: Payload::Gop(gop.clone()),
            cacheable: true,
            meta: Some(Meta {
                name: STREAM.into(),
                version: self.stream.version.clone(),
                index: idx,
            }),
            run_id: interest.run_id.clone(),
            served_by: node.to_owned(),
            hops: 0,
        })]
    }

    fn on_data(&mut self, node: &str, data: &Data, _now: u64) -> Vec<Action> {
        if let (SUBSCRIBER, Payload::Gop(g), Some(i)) = (node, &data.payload, data.segment_index) {
            self.received.insert(i, g.clone());
        }
        vec![]
    }

    fn on_timer(&mut self, _node: &str, _token: u64, _now: u64) -> Vec<Action> {
        vec![]
    }
}

fn frame_diff(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len())
}

/// Subscribe once over the six-node network, then stream `gops` groups with
/// only their I-frames encrypted under successive chain keys.
pub fn run_mpeg_demo(gops: usize, seed: u64) -> Result<MpegReport, SimError> {
    if gops == 0 {
        return Err(SimError::Setup("the stream needs at least one GOP".into()));
    }
    let mut cfg = six_node_scenario(seed, Mode::Sdpc);
    cfg.content = vec![ContentSpec {
        name: STREAM.into(),
        version: "v1".into(),
        size: gops,
        segment_size: 1,
        publish_time: None,
    }];
    cfg.actions = vec![ActionSpec {
        tick: 0,
        consumer: SUBSCRIBER.into(),
        op: Op::Subscribe,
        content: STREAM.into(),
        home: None,
    }];
    let run = run_scenario(&cfg)?;
    if let Some(bad) = run.report.runs.iter().find(|r| !r.succeeded()) {
        return Err(SimError::Setup(format!("subscription failed: {}", bad.outcome)));
    }
    let commitments_exchanged = run
        .transcript()
        .entries()
        .iter()
        .filter(|e| e.to == SUBSCRIBER && e.msg_tag == "SubP.M4")
        .count();

    let published = run
        .world
        .publisher(PUBLISHER)
        .and_then(|p| p.content(STREAM))
        .expect("stream was published");
    let chain = published
        .key_msg
        .key_chain(gops)
        .map_err(|e| SimError::Setup(e.to_string()))?;
    let source = synthetic_stream(gops, seed);
    let wire = encrypt_gop_stream(&source, &chain).map_err(|e| SimError::Setup(e.to_string()))?;

    let mut fabric = Fabric::new(
        cfg.topology()?,
        FabricConfig {
            pit_lifetime: cfg.pit_lifetime,
            max_ticks: cfg.max_ticks,
        },
    );
    for i in 1..=gops as u64 {
        fabric.inject_interest(
            SUBSCRIBER,
            Interest {
                name: GOP_NAME.into(),
                segment_index: Some(i),
                auth_payload: None,
                run_id: "gop".into(),
                origin: SUBSCRIBER.into(),
            },
        )?;
    }
    let mut delivery = GopDelivery {
        stream: wire,
        received: BTreeMap::new(),
    };
    fabric.run_until_idle(&mut delivery)?;

    let received = GopStream {
        name: STREAM.into(),
        version: "v1".into(),
        gops: delivery.received.into_values().collect(),
    };
    let modified_dependent_bytes = source
        .dependent_bytes()
        .iter()
        .zip(received.dependent_bytes())
        .map(|(a, b)| frame_diff(a, b))
        .sum();

    let key_msg = run
        .world
        .consumer(SUBSCRIBER)
        .and_then(|c| c.key_msg(STREAM))
        .expect("subscriber holds the key message");
    let derived = key_msg.key_chain(gops).map_err(|e| SimError::Setup(e.to_string()))?;
    if derived != chain {
        return Err(SimError::Violations(vec![
            "subscriber chain differs from publisher chain".into(),
        ]));
    }
    let decrypted_i_frames = match decrypt_gop_stream(&received, key_msg) {
        Ok(clear) => clear
            .gops
            .iter()
            .zip(&source.gops)
            .filter(|(got, want)| got.i_frame == want.i_frame)
            .count(),
        Err(e) => {
            log::warn!("stream decryption failed: {e}");
            0
        }
    };

    Ok(MpegReport {
        gops,
        keys_derived: derived.len(),
        commitments_exchanged,
        i_frame_envelopes: received.encrypted_i_frames(),
        modified_dependent_bytes,
        decrypted_i_frames,
        gops_delivered: received.gops.len(),
    })
}
