//! Adversaries run against a completed honest scenario.
//!
//! The adversary only uses what crossed the wire (the fabric's wiretap),
//! public keys, and its own key material. It never reads honest node memory;
//! the harness uses node state only to score the outcome.

use std::collections::{BTreeMap, BTreeSet};

use log::info;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use sdpc_core::content::{decrypt_segment, encrypt_object, ContentObject, Segment};
use sdpc_core::crypto::{
    aead_decrypt, aead_encrypt, build_key_chain, derive_subscription_key, encode_id, hash, AeadEnvelope, Digest,
    KeyPair,
};
use sdpc_core::protocol::{
    decode_message, AccessRequest, ApsubM2, Nonce, ProtocolError, ProtocolMessage, SessionState, SubpM4, Ticket,
};

use crate::config::{six_node_scenario, AdversaryKind, AdversarySpec, Mode, Op, ScenarioConfig};
use crate::fabric::WirePacket;
use crate::packet::Payload;
use crate::scenario::{execute, ScenarioRun, SimError};
use crate::world::World;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Defeated,
    Succeeded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackReport {
    pub kind: AdversaryKind,
    pub verdict: Verdict,
    pub attempts: u64,
    pub accepted: u64,
    pub evidence: Vec<String>,
}

impl AttackReport {
    fn new(kind: AdversaryKind) -> Self {
        Self {
            kind,
            verdict: Verdict::Defeated,
            attempts: 0,
            accepted: 0,
            evidence: Vec::new(),
        }
    }

    fn attempt(&mut self, what: impl Into<String>, accepted: bool) {
        self.attempts += 1;
        let what = what.into();
        if accepted {
            self.accepted += 1;
            self.verdict = Verdict::Succeeded;
            self.evidence.push(format!("ACCEPTED: {what}"));
        } else {
            self.evidence.push(format!("rejected: {what}"));
        }
    }

    fn fail(&mut self, why: impl Into<String>) {
        self.verdict = Verdict::Succeeded;
        self.evidence.push(format!("FAILED: {}", why.into()));
    }
}

/// The canonical network and script with the given adversary attached.
pub fn canonical_config(kind: AdversaryKind, seed: u64, disable_nonce_registry: bool) -> ScenarioConfig {
    ScenarioConfig {
        adversary: Some(AdversarySpec {
            kind,
            target: None,
            disable_nonce_registry,
        }),
        ..six_node_scenario(seed, Mode::Sdpc)
    }
}

/// Run the honest scenario, then let the configured adversary loose on it.
pub fn run_attack(config: &ScenarioConfig) -> Result<AttackReport, SimError> {
    let spec = config
        .adversary
        .clone()
        .ok_or_else(|| SimError::Setup("scenario has no adversary".into()))?;
    let mut run = execute(config)?;
    if !run.violations.is_empty() {
        return Err(SimError::Violations(run.violations));
    }
    let target = spec
        .target
        .clone()
        .or_else(|| {
            config
                .actions
                .iter()
                .find(|a| a.op == Op::Subscribe)
                .map(|a| a.consumer.clone())
        })
        .ok_or_else(|| SimError::Setup("no consumer subscribes; nothing to attack".into()))?;
    if spec.disable_nonce_registry {
        for p in run.world.publishers.values_mut() {
            p.registry_mut().set_enabled(false);
        }
        run.world.manager.registry_mut().set_enabled(false);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed ^ 0xadd5_eed5);
    let report = match spec.kind {
        AdversaryKind::Replay => replay(&mut run),
        AdversaryKind::Eavesdrop => eavesdrop(&run),
        AdversaryKind::StolenTicket => stolen_ticket(&mut run, &target, &mut rng)?,
        AdversaryKind::ImpersonatePublisher => impersonate_publisher(&mut run, &target, &mut rng)?,
    };
    info!(
        "{} adversary: {:?} after {} attempts",
        spec.kind.as_str(),
        report.verdict,
        report.attempts
    );
    Ok(report)
}

/// Protocol messages seen on the wire, each once, in first-seen order.
pub fn captured_messages(run: &ScenarioRun) -> Vec<(Vec<u8>, ProtocolMessage)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for rec in run.fabric.wiretap() {
        let bytes = match &rec.packet {
            WirePacket::Interest(i) => i.auth_payload.clone(),
            WirePacket::Data(d) => match &d.payload {
                Payload::Protocol(b) => Some(b.clone()),
                _ => None,
            },
        };
        if let Some(b) = bytes {
            if seen.insert(b.clone()) {
                if let Ok(msg) = decode_message(&b) {
                    out.push((b, msg));
                }
            }
        }
    }
    out
}

fn captured_segments(run: &ScenarioRun) -> BTreeMap<(String, u64), Segment> {
    let mut out = BTreeMap::new();
    for rec in run.fabric.wiretap() {
        if let WirePacket::Data(d) = &rec.packet {
            if let Payload::Segment(s) = &d.payload {
                out.entry((s.content_name.clone(), s.index))
                    .or_insert_with(|| s.clone());
            }
        }
    }
    out
}

fn publisher_of(world: &World, content: &str) -> Option<String> {
    world
        .config
        .content_spec(content)
        .and_then(|c| c.publisher())
        .map(str::to_owned)
}

/// Hand a captured message to the role it was addressed to.
fn redeliver(world: &mut World, msg: &ProtocolMessage, now: u64) -> Result<(), String> {
    let p = publisher_of(world, msg.content_name()).ok_or("unknown content")?;
    let publisher = world.publishers.get_mut(&p).ok_or("unknown publisher")?;
    let manager = &mut world.manager;
    let e = |e: ProtocolError| e.to_string();
    match msg {
        ProtocolMessage::SubpM1(m1) => {
            let m2 = publisher.subp_forward(m1);
            manager.subp_process(&m2, now).map(drop).map_err(e)
        }
        ProtocolMessage::SubpM2(m2) => manager.subp_process(m2, now).map(drop).map_err(e),
        ProtocolMessage::SubpM3(m3) => publisher.subp_relay(m3, now).map(drop).map_err(e),
        ProtocolMessage::SubpM5(m5) => publisher.subp_confirm(m5, now).map(drop).map_err(e),
        ProtocolMessage::SubpM6(m6) => manager.subp_complete(m6).map_err(e),
        ProtocolMessage::ApsubM1(m1) => publisher.apsub_respond(m1, now).map(drop).map_err(e),
        ProtocolMessage::ApsubM3(m3) => publisher.apsub_confirm(m3, now).map_err(e),
        ProtocolMessage::Apsub3M1(m1) => {
            let m2 = publisher.apsub3_forward(m1).map_err(e)?;
            manager.apsub3_process(&m2, now).map(drop).map_err(e)
        }
        ProtocolMessage::Apsub3M2(m2) => manager.apsub3_process(m2, now).map(drop).map_err(e),
        ProtocolMessage::Apsub3M3(m3) => publisher.apsub3_relay(m3, now).map(drop).map_err(e),
        ProtocolMessage::Apsub3M5(m5) => publisher.apsub3_confirm(m5, now).map(drop).map_err(e),
        ProtocolMessage::Apsub3M6(m6) => manager.apsub3_complete(m6).map_err(e),
        ProtocolMessage::SubpM4(_) | ProtocolMessage::ApsubM2(_) | ProtocolMessage::Apsub3M4(_) => {
            let consumer = world.consumers.get_mut(msg.consumer_id()).ok_or("unknown consumer")?;
            let c = &mut consumer.consumer;
            match msg {
                ProtocolMessage::SubpM4(m4) => c.subp_finish(m4).map(drop).map_err(e),
                ProtocolMessage::ApsubM2(m2) => c.apsub_finish(m2).map(drop).map_err(e),
                ProtocolMessage::Apsub3M4(m4) => c.apsub3_finish(m4).map(drop).map_err(e),
                _ => unreachable!(),
            }
        }
    }
}

fn established(world: &World) -> usize {
    world.publishers.values().map(|p| p.established_count()).sum()
}

fn replay(run: &mut ScenarioRun) -> AttackReport {
    let mut report = AttackReport::new(AdversaryKind::Replay);
    let captured = captured_messages(run);
    let sessions_before = established(&run.world);
    let completed_before = run.world.manager.completed_runs().len();
    let start = run.fabric.now() + 1;
    for (now, (_, msg)) in (start..).zip(&captured) {
        let outcome = redeliver(&mut run.world, msg, now);
        let label = format!("{} from {}", msg.tag(), msg.consumer_id());
        report.attempt(
            match &outcome {
                Ok(()) => label,
                Err(why) => format!("{label} ({why})"),
            },
            outcome.is_ok(),
        );
    }
    let sessions_after = established(&run.world);
    let completed_after = run.world.manager.completed_runs().len();
    if sessions_after != sessions_before || completed_after != completed_before {
        report.fail(format!(
            "sessions {sessions_before} -> {sessions_after}, completed runs {completed_before} -> {completed_after}"
        ));
    }
    report
}

/// All 32-byte windows of every captured protocol message.
fn candidate_keys(captured: &[(Vec<u8>, ProtocolMessage)]) -> BTreeSet<[u8; 32]> {
    let mut out = BTreeSet::new();
    for (bytes, _) in captured {
        for w in bytes.windows(32) {
            out.insert(<[u8; 32]>::try_from(w).unwrap());
        }
    }
    out
}

fn envelopes(msg: &ProtocolMessage) -> Vec<&AeadEnvelope> {
    match msg {
        ProtocolMessage::SubpM1(m) => vec![&m.request],
        ProtocolMessage::SubpM2(m) => vec![&m.m1.request],
        ProtocolMessage::SubpM3(m) => vec![&m.u0],
        ProtocolMessage::SubpM4(m) => vec![&m.u0, &m.key_msg],
        ProtocolMessage::SubpM5(m) => vec![&m.response],
        ProtocolMessage::ApsubM1(m) | ProtocolMessage::Apsub3M1(m) => vec![&m.access],
        ProtocolMessage::ApsubM2(m) => vec![&m.reply],
        ProtocolMessage::ApsubM3(m) => vec![&m.response],
        ProtocolMessage::Apsub3M2(m) => vec![&m.request.access],
        ProtocolMessage::Apsub3M3(m) => vec![&m.u0],
        ProtocolMessage::Apsub3M4(m) => std::iter::once(&m.u0).chain(m.identity_proof.as_ref()).collect(),
        ProtocolMessage::Apsub3M5(m) => vec![&m.response],
        ProtocolMessage::SubpM6(_) | ProtocolMessage::Apsub3M6(_) => vec![],
    }
}

/// Passive global eavesdropper: try every captured 32-byte string, its hash,
/// and key chains seeded from it, against every captured envelope.
fn eavesdrop(run: &ScenarioRun) -> AttackReport {
    let mut report = AttackReport::new(AdversaryKind::Eavesdrop);
    let captured = captured_messages(run);
    let segments = captured_segments(run);
    let candidates = candidate_keys(&captured);
    let mut protocol_envs: Vec<&AeadEnvelope> = captured.iter().flat_map(|(_, m)| envelopes(m)).collect();
    protocol_envs.dedup();
    let public_keys: Vec<_> = run.world.publishers.values().map(|p| *p.public_key()).collect();
    let max_index = segments.keys().map(|(_, i)| *i).max().unwrap_or(0) as usize;

    let mut opened = Vec::new();
    for c in &candidates {
        let raw = Digest::from_slice(c).unwrap();
        for key in [raw, hash(c)] {
            for env in &protocol_envs {
                report.attempts += 1;
                if aead_decrypt(&key, env).is_ok() {
                    opened.push(format!("protocol envelope under {}", key.to_hex()));
                }
            }
        }
        if max_index == 0 {
            continue;
        }
        for pk in &public_keys {
            let chain = build_key_chain(raw, max_index, pk.as_bytes()).unwrap();
            for ((name, idx), seg) in &segments {
                let Some(env) = &seg.envelope else { continue };
                report.attempts += 1;
                if aead_decrypt(chain.segment_key(*idx).unwrap(), env).is_ok() {
                    opened.push(format!("segment {name}#{idx} with chain seeded by {}", raw.to_hex()));
                }
            }
        }
    }
    report.evidence.push(format!(
        "{} messages, {} segments, {} candidate strings, {} protocol envelopes",
        captured.len(),
        segments.len(),
        candidates.len(),
        protocol_envs.len()
    ));
    for o in opened {
        report.accepted += 1;
        report.fail(o);
    }
    report
}

fn ad(label: &str, consumer: &str, content: &str) -> Vec<u8> {
    let mut v = encode_id(label);
    v.extend(encode_id(consumer));
    v.extend(encode_id(content));
    v
}

fn random_key(rng: &mut ChaCha20Rng) -> Digest {
    let mut b = [0u8; 32];
    rng.fill_bytes(&mut b);
    Digest::from_slice(&b).unwrap()
}

fn stolen_ticket(run: &mut ScenarioRun, target: &str, rng: &mut ChaCha20Rng) -> Result<AttackReport, SimError> {
    let mut report = AttackReport::new(AdversaryKind::StolenTicket);
    let captured = captured_messages(run);
    let Some(original) = captured.iter().find_map(|(_, m)| match m {
        ProtocolMessage::ApsubM1(r) if r.consumer_id == target => Some(r.clone()),
        _ => None,
    }) else {
        return Err(SimError::Setup(format!(
            "no ticket of {target} was presented on the wire"
        )));
    };
    let ticket: Ticket = original.ticket.clone();
    let p = ticket.issuer_publisher.clone();
    let content = original.content_name.clone();
    let mut now = run.fabric.now() + 1;
    let world = &mut run.world;

    // 1. Present the stolen ticket under the adversary's own identity.
    let forged = AccessRequest {
        consumer_id: "E".into(),
        content_name: content.clone(),
        access: aead_encrypt(&random_key(rng), b"E", &ad("APSub.M1", "E", &content), [0; 12]),
        ticket: ticket.clone(),
    };
    let r = world.publishers.get_mut(&p).unwrap().apsub_respond(&forged, now);
    report.attempt(format!("ticket under identity E: {r:?}"), r.is_ok());

    // 2. Claim the victim's identity without knowing K_s.
    let mut guess = Vec::new();
    guess.extend(encode_id(target));
    guess.extend(Nonce::random(rng).to_bytes());
    let forged = AccessRequest {
        consumer_id: target.into(),
        content_name: content.clone(),
        access: aead_encrypt(&random_key(rng), &guess, &ad("APSub.M1", target, &content), [1; 12]),
        ticket: ticket.clone(),
    };
    now += 1;
    let r = world.publishers.get_mut(&p).unwrap().apsub_respond(&forged, now);
    report.attempt(format!("ticket with guessed session key: {r:?}"), r.is_ok());

    // 3. Replay the victim's own request.
    now += 1;
    let r = world.publishers.get_mut(&p).unwrap().apsub_respond(&original, now);
    report.attempt(format!("verbatim replay of {target}'s request: {r:?}"), r.is_ok());

    // 4. Let the victim start a run and drop its final response.
    now += 1;
    let consumer = &mut world.consumers.get_mut(target).unwrap().consumer;
    let m1 = consumer
        .apsub_init(&p, &content)
        .map_err(|e| SimError::Setup(e.to_string()))?;
    let publisher = world.publishers.get_mut(&p).unwrap();
    let m2 = publisher
        .apsub_respond(&m1, now)
        .map_err(|e| SimError::Setup(format!("honest access refused: {e}")))?;
    let consumer = &mut world.consumers.get_mut(target).unwrap().consumer;
    let dropped = consumer.apsub_finish(&m2).map_err(|e| SimError::Setup(e.to_string()))?;
    let deadline = now + world.config.ticket_timeout;
    let publisher = world.publishers.get_mut(&p).unwrap();
    let expired = publisher.tick_timers(deadline);
    let marked = publisher.is_stolen(&ticket)
        && publisher.session(target, &content).map(|s| s.state) == Some(SessionState::MarkedStolen);
    if marked {
        report.evidence.push(format!(
            "dropped M3; ticket marked stolen at tick {deadline} ({} expired)",
            expired.len()
        ));
    } else {
        report.fail("unanswered challenge did not mark the ticket stolen");
    }

    // 5. Every later presentation fails, including the late response.
    let late = publisher.apsub_confirm(&dropped, deadline + 1);
    report.attempt(format!("late M3 after marking: {late:?}"), late.is_ok());
    let consumer = &mut world.consumers.get_mut(target).unwrap().consumer;
    let again = consumer
        .apsub_init(&p, &content)
        .map_err(|e| SimError::Setup(e.to_string()))?;
    let r = world
        .publishers
        .get_mut(&p)
        .unwrap()
        .apsub_respond(&again, deadline + 2);
    report.attempt(format!("fresh request with the stolen ticket: {r:?}"), r.is_ok());
    Ok(report)
}

fn impersonate_publisher(run: &mut ScenarioRun, target: &str, rng: &mut ChaCha20Rng) -> Result<AttackReport, SimError> {
    let mut report = AttackReport::new(AdversaryKind::ImpersonatePublisher);
    let world = &mut run.world;
    let (content, p) = world
        .config
        .actions
        .iter()
        .find(|a| a.consumer == target && a.op == Op::Subscribe)
        .map(|a| (a.content.clone(), publisher_of(world, &a.content).unwrap()))
        .ok_or_else(|| SimError::Setup(format!("{target} never subscribes")))?;
    let impostor = KeyPair::generate(rng);

    // 1. Answer a fresh SubP request with a forged M4 built from the
    //    impostor's own keys.
    let consumer = &mut world.consumers.get_mut(target).unwrap().consumer;
    consumer
        .subp_init(&p, &content)
        .map_err(|e| SimError::Setup(e.to_string()))?;
    let fake_k_ts = derive_subscription_key(impostor.public().as_bytes(), target.as_bytes()).unwrap();
    let mut body = Nonce::random(rng).to_bytes().to_vec();
    body.extend(Nonce::random(rng).to_bytes());
    let m4 = SubpM4 {
        consumer_id: target.into(),
        content_name: content.clone(),
        u0: aead_encrypt(&fake_k_ts, &body, &ad("SubP.u0", target, &content), [2; 12]),
        key_msg: aead_encrypt(
            &random_key(rng),
            impostor.public().as_bytes(),
            &ad("SubP.keymsg", target, &content),
            [3; 12],
        ),
    };
    let r = consumer.subp_finish(&m4);
    report.attempt(format!("forged SubP M4: {r:?}"), r.is_ok());

    // 2. Answer a fresh APSub request with a forged M2.
    let content_b = world
        .config
        .content
        .iter()
        .find(|c| c.publisher() == Some(p.as_str()) && c.name != content)
        .map(|c| c.name.clone())
        .unwrap_or_else(|| content.clone());
    let consumer = &mut world.consumers.get_mut(target).unwrap().consumer;
    if consumer.apsub_init(&p, &content_b).is_ok() {
        let m2 = ApsubM2 {
            consumer_id: target.into(),
            content_name: content_b.clone(),
            reply: aead_encrypt(&random_key(rng), &body, &ad("APSub.M2", target, &content_b), [4; 12]),
        };
        let r = consumer.apsub_finish(&m2);
        report.attempt(format!("forged APSub M2: {r:?}"), r.is_ok());
    }

    // 3. Serve segments under a chain keyed to the impostor. Worst case: the
    //    impostor even knows the genuine commitment.
    let genuine = world.objects[&content].clone();
    let key_msg = world.consumers[target]
        .consumer
        .key_msg(&content)
        .cloned()
        .ok_or_else(|| SimError::Setup(format!("{target} holds no key message for {content}")))?;
    let mut fake_payload = vec![0u8; genuine.payload.len()];
    rng.fill_bytes(&mut fake_payload);
    let fake = ContentObject {
        payload: fake_payload,
        ..genuine.clone()
    };
    let chain = build_key_chain(key_msg.commitment, fake.segment_count(), impostor.public().as_bytes()).unwrap();
    let forged_segments = encrypt_object(&fake, &chain).map_err(|e| SimError::Setup(e.to_string()))?;
    let accepted = forged_segments
        .iter()
        .filter(|s| decrypt_segment(s, &key_msg).is_ok())
        .count();
    report.attempts += forged_segments.len() as u64;
    report.accepted += accepted as u64;
    if accepted > 0 {
        report.fail(format!("{accepted} forged segments authenticated"));
    } else {
        report.evidence.push(format!(
            "all {} forged segments failed authentication",
            forged_segments.len()
        ));
    }
    Ok(report)
}

/// Run every adversary kind against the canonical network.
pub fn run_suite(
    kinds: &[AdversaryKind],
    seed: u64,
    disable_nonce_registry: bool,
) -> Result<Vec<AttackReport>, SimError> {
    kinds
        .iter()
        .map(|k| run_attack(&canonical_config(*k, seed, disable_nonce_registry)))
        .collect()
}
