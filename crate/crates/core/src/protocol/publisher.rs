use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::content::{encrypt_gop_stream, encrypt_object, ContentManifest, ContentObject, GopStream, Segment};
use crate::crypto::{aead_decrypt, aead_encrypt_random, seal, unseal, Digest, KeyMsg, KeyPair, PublicKey};

use super::consumer::decode_nonce_response;
use super::messages::*;
use super::nonce::{Nonce, NonceRegistry};
use super::{
    encode_key_msg, envelope_ad, role_rng, PendingChallenge, ProtocolConfig, ProtocolError, Reader, Result, Session,
    SessionState, TicketContents, Writer,
};

/// A content object as held by its publisher.
#[derive(Debug, Clone, Serialize)]
pub struct PublishedContent {
    pub name: String,
    pub version: String,
    pub key_msg: KeyMsg,
    pub segments: Vec<Segment>,
    pub manifest: Option<ContentManifest>,
}

/// A challenge that went unanswered; its ticket is now marked stolen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpiredRun {
    pub consumer_id: String,
    pub content_name: String,
    pub protocol: ProtocolKind,
    pub ticket_id: Digest,
}

#[derive(Debug, Clone, Serialize)]
struct PendingForward {
    protocol: ProtocolKind,
    challenge: Nonce,
    ticket_id: Option<Digest>,
}

type RunKey = (String, String);

#[derive(Debug, Clone, Serialize)]
pub struct Publisher {
    id: String,
    #[serde(skip)]
    keypair: KeyPair,
    public_key: PublicKey,
    manager_key: Option<PublicKey>,
    #[serde(skip)]
    rng: ChaCha20Rng,
    config: ProtocolConfig,
    catalog: BTreeMap<String, PublishedContent>,
    #[serde(serialize_with = "super::map_entries")]
    pending_forward: BTreeMap<RunKey, PendingForward>,
    #[serde(serialize_with = "super::map_entries")]
    sessions: BTreeMap<RunKey, Session>,
    stolen: BTreeSet<Digest>,
    registry: NonceRegistry,
    registered_consumers: BTreeSet<String>,
}

impl Publisher {
    pub fn new(id: impl Into<String>, keypair: KeyPair, config: ProtocolConfig, seed: u64) -> Self {
        Self {
            id: id.into(),
            public_key: *keypair.public(),
            keypair,
            manager_key: None,
            rng: role_rng(seed),
            config,
            catalog: BTreeMap::new(),
            pending_forward: BTreeMap::new(),
            sessions: BTreeMap::new(),
            stolen: BTreeSet::new(),
            registry: NonceRegistry::new(config.nonce_retention),
            registered_consumers: BTreeSet::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.public_key
    }

    pub fn keypair(&self) -> &KeyPair {
        &self.keypair
    }

    pub fn set_manager_key(&mut self, key: PublicKey) {
        self.manager_key = Some(key);
    }

    pub fn registry_mut(&mut self) -> &mut NonceRegistry {
        &mut self.registry
    }

    /// Segment, derive the commitment and key chain, and encrypt `object`.
    pub fn publish(&mut self, object: &ContentObject) -> Result<&PublishedContent> {
        let key_msg = KeyMsg {
            commitment: object.commitment()?,
            publisher_public_key: self.public_key,
        };
        let chain = key_msg.key_chain(object.segment_count())?;
        let segments = encrypt_object(object, &chain)?;
        let manifest = ContentManifest::from_segments(object, &segments);
        let entry = PublishedContent {
            name: object.name.clone(),
            version: object.version.clone(),
            key_msg,
            segments,
            manifest: Some(manifest),
        };
        self.catalog.insert(object.name.clone(), entry);
        Ok(&self.catalog[&object.name])
    }

    /// Selectively encrypt a GOP stream: one chain key per I-frame.
    pub fn publish_stream(&mut self, stream: &GopStream, publish_time: u64) -> Result<GopStream> {
        let commitment =
            crate::crypto::derive_commitment(publish_time, &format!("{}/{}", stream.name, stream.version))?;
        let key_msg = KeyMsg {
            commitment,
            publisher_public_key: self.public_key,
        };
        let chain = key_msg.key_chain(stream.gops.len().max(1))?;
        let encrypted = encrypt_gop_stream(stream, &chain)?;
        self.catalog.insert(
            stream.name.clone(),
            PublishedContent {
                name: stream.name.clone(),
                version: stream.version.clone(),
                key_msg,
                segments: Vec::new(),
                manifest: None,
            },
        );
        Ok(encrypted)
    }

    pub fn content(&self, name: &str) -> Option<&PublishedContent> {
        self.catalog.get(name)
    }

    pub fn segment(&self, name: &str, index: u64) -> Option<&Segment> {
        let idx = usize::try_from(index.checked_sub(1)?).ok()?;
        self.catalog.get(name)?.segments.get(idx)
    }

    fn key_msg_for(&self, content_name: &str) -> Result<KeyMsg> {
        self.catalog
            .get(content_name)
            .map(|c| c.key_msg)
            .ok_or_else(|| ProtocolError::UnknownContent(content_name.to_owned()))
    }

    pub fn session(&self, consumer_id: &str, content_name: &str) -> Option<&Session> {
        self.sessions.get(&(consumer_id.to_owned(), content_name.to_owned()))
    }

    pub fn sessions(&self) -> impl Iterator<Item = &Session> {
        self.sessions.values()
    }

    pub fn established_count(&self) -> usize {
        self.sessions
            .values()
            .filter(|s| s.state == SessionState::Established)
            .count()
    }

    pub fn is_stolen(&self, ticket: &Ticket) -> bool {
        self.stolen.contains(&ticket.id())
    }

    pub fn is_registered(&self, consumer_id: &str) -> bool {
        self.registered_consumers.contains(consumer_id)
    }

    fn arm(&mut self, key: RunKey, mut session: Session, n1: Nonce, now: u64) {
        session.pending_challenge = Some(PendingChallenge {
            expected: n1.succ(),
            deadline: now.saturating_add(self.config.stolen_ticket_timeout),
        });
        session.state = SessionState::AwaitingChallenge;
        self.sessions.insert(key, session);
    }

    /// Common checks before a final challenge response is evaluated; on
    /// success returns the session key and the expected response.
    fn awaiting(&mut self, key: &RunKey, protocol: ProtocolKind, now: u64) -> Result<(Digest, Nonce)> {
        let session = self.sessions.get_mut(key).ok_or(ProtocolError::NoPendingRun)?;
        match session.state {
            SessionState::MarkedStolen => return Err(ProtocolError::TicketStolen),
            SessionState::AwaitingChallenge if session.protocol == protocol => {}
            _ => return Err(ProtocolError::NoPendingRun),
        }
        let pending = session.pending_challenge.ok_or(ProtocolError::NoPendingRun)?;
        if now >= pending.deadline {
            session.state = SessionState::MarkedStolen;
            session.pending_challenge = None;
            let ticket_id = session.ticket_id;
            self.stolen.insert(ticket_id);
            return Err(ProtocolError::TimerExpired);
        }
        Ok((session.key, pending.expected))
    }

    fn settle(&mut self, key: &RunKey, expected: Nonce, got: Nonce) -> Result<()> {
        let session = self.sessions.get_mut(key).expect("session checked by awaiting");
        session.pending_challenge = None;
        if got != expected {
            session.state = SessionState::Closed;
            return Err(ProtocolError::ChallengeMismatch("n1+1"));
        }
        session.state = SessionState::Established;
        Ok(())
    }

    /// SubP M1 -> M2: attach our id and a fresh challenge `n2`. The request
    /// payload is opaque to us.
    pub fn subp_forward(&mut self, m1: &SubpM1) -> SubpM2 {
        let challenge = Nonce::random(&mut self.rng);
        self.pending_forward.insert(
            (m1.consumer_id.clone(), m1.content_name.clone()),
            PendingForward {
                protocol: ProtocolKind::Subp,
                challenge,
                ticket_id: None,
            },
        );
        SubpM2 {
            m1: m1.clone(),
            publisher_id: self.id.clone(),
            challenge,
        }
    }

    /// SubP M3 -> M4: verify `n2`, store `n1`, `K_s` and the profile, and
    /// forward `u0` with the KEY_MSG.
    pub fn subp_relay(&mut self, m3: &SubpM3, now: u64) -> Result<SubpM4> {
        let key = (m3.consumer_id.clone(), m3.content_name.clone());
        let pending = match self.pending_forward.get(&key) {
            Some(p) if p.protocol == ProtocolKind::Subp => p.challenge,
            _ => return Err(ProtocolError::NoPendingRun),
        };
        let key_msg = self.key_msg_for(&m3.content_name)?;

        let opened = match unseal(&self.keypair, &m3.for_publisher) {
            Ok(pt) => pt,
            Err(e) => {
                self.pending_forward.remove(&key);
                return Err(e.into());
            }
        };
        let parsed = (|| {
            let mut r = Reader::new(&opened);
            let n1 = r.nonce()?;
            let n2 = r.nonce()?;
            let session_key = r.digest()?;
            let issue_time = r.u64()?;
            let ticket = r.ticket()?;
            r.finish()?;
            Ok::<_, ProtocolError>((n1, n2, session_key, issue_time, ticket))
        })();
        let (n1, n2, session_key, issue_time, ticket) = match parsed {
            Ok(v) => v,
            Err(e) => {
                self.pending_forward.remove(&key);
                return Err(e);
            }
        };
        if n2 != pending {
            self.pending_forward.remove(&key);
            return Err(ProtocolError::ChallengeMismatch("n2"));
        }
        let contents = TicketContents::decode(&unseal(&self.keypair, &ticket.sealed)?)?;
        if contents.session_key != session_key || contents.consumer_id != m3.consumer_id {
            self.pending_forward.remove(&key);
            return Err(ProtocolError::AuthenticationFailed("ticket does not match M3"));
        }
        self.pending_forward.remove(&key);

        let session = Session {
            consumer_id: m3.consumer_id.clone(),
            publisher_id: self.id.clone(),
            content_name: m3.content_name.clone(),
            protocol: ProtocolKind::Subp,
            key: session_key,
            issue_time,
            state: SessionState::AwaitingChallenge,
            pending_challenge: None,
            ticket_id: ticket.id(),
            profile: Some(contents.profile),
        };
        self.arm(key, session, n1, now);

        let mut w = Writer::new();
        encode_key_msg(&mut w, &key_msg);
        let ad = envelope_ad("SubP.keymsg", &m3.consumer_id, &m3.content_name);
        let sealed_key_msg = aead_encrypt_random(&session_key, &w.finish(), &ad, &mut self.rng);
        Ok(SubpM4 {
            consumer_id: m3.consumer_id.clone(),
            content_name: m3.content_name.clone(),
            u0: m3.u0.clone(),
            key_msg: sealed_key_msg,
        })
    }

    /// SubP M5 -> M6: verify `n1+1` under `K_s` and confirm to the manager.
    pub fn subp_confirm(&mut self, m5: &SubpM5, now: u64) -> Result<SubpM6> {
        let key = (m5.consumer_id.clone(), m5.content_name.clone());
        let (session_key, expected) = self.awaiting(&key, ProtocolKind::Subp, now)?;
        if m5.response.associated_data != envelope_ad("SubP.M5", &m5.consumer_id, &m5.content_name) {
            return Err(ProtocolError::AuthenticationFailed("SubP.M5 headers"));
        }
        let got = decode_nonce_response(&session_key, &m5.response, "SubP.M5")?;
        self.settle(&key, expected, got)?;
        self.registered_consumers.insert(m5.consumer_id.clone());
        Ok(SubpM6 {
            consumer_id: m5.consumer_id.clone(),
            publisher_id: self.id.clone(),
            content_name: m5.content_name.clone(),
            response: got,
        })
    }

    /// APSub M1 -> M2. Requests whose ticket we cannot open, or whose inner
    /// identity does not match, are ignored.
    pub fn apsub_respond(&mut self, m1: &AccessRequest, now: u64) -> Result<ApsubM2> {
        let ticket_id = m1.ticket.id();
        if self.stolen.contains(&ticket_id) {
            return Err(ProtocolError::TicketStolen);
        }
        let contents = unseal(&self.keypair, &m1.ticket.sealed)
            .ok()
            .and_then(|pt| TicketContents::decode(&pt).ok())
            .ok_or(ProtocolError::Ignored("ticket not issued by this publisher"))?;
        if m1.access.associated_data != envelope_ad("APSub.M1", &m1.consumer_id, &m1.content_name) {
            return Err(ProtocolError::Ignored("access request headers"));
        }
        let access = aead_decrypt(&contents.session_key, &m1.access)
            .map_err(|_| ProtocolError::Ignored("access request not under the ticket's session key"))?;
        let mut r = Reader::new(&access);
        let inner_id = r.string()?;
        let n0 = r.nonce()?;
        r.finish()?;
        if inner_id != contents.consumer_id || m1.consumer_id != contents.consumer_id {
            return Err(ProtocolError::Ignored("consumer identity mismatch"));
        }
        self.registry
            .check_and_insert(&contents.consumer_id, n0, now)
            .map_err(|_| ProtocolError::Replay)?;
        let key_msg = self.key_msg_for(&m1.content_name)?;

        let n1 = Nonce::random(&mut self.rng);
        let session = Session {
            consumer_id: m1.consumer_id.clone(),
            publisher_id: self.id.clone(),
            content_name: m1.content_name.clone(),
            protocol: ProtocolKind::Apsub,
            key: contents.session_key,
            issue_time: self.config.epoch_seconds(now),
            state: SessionState::AwaitingChallenge,
            pending_challenge: None,
            ticket_id,
            profile: Some(contents.profile),
        };
        self.arm((m1.consumer_id.clone(), m1.content_name.clone()), session, n1, now);

        let mut w = Writer::new();
        w.nonce(n0.succ()).nonce(n1);
        encode_key_msg(&mut w, &key_msg);
        let ad = envelope_ad("APSub.M2", &m1.consumer_id, &m1.content_name);
        let reply = aead_encrypt_random(&contents.session_key, &w.finish(), &ad, &mut self.rng);
        Ok(ApsubM2 {
            consumer_id: m1.consumer_id.clone(),
            content_name: m1.content_name.clone(),
            reply,
        })
    }

    /// APSub M3: verify `n1+1`.
    pub fn apsub_confirm(&mut self, m3: &ApsubM3, now: u64) -> Result<()> {
        let key = (m3.consumer_id.clone(), m3.content_name.clone());
        let (session_key, expected) = self.awaiting(&key, ProtocolKind::Apsub, now)?;
        if m3.response.associated_data != envelope_ad("APSub.M3", &m3.consumer_id, &m3.content_name) {
            return Err(ProtocolError::AuthenticationFailed("APSub.M3 headers"));
        }
        let got = decode_nonce_response(&session_key, &m3.response, "APSub.M3")?;
        self.settle(&key, expected, got)
    }

    /// APSub3 M1 -> M2: we cannot open the ticket (it is sealed to the
    /// consumer's home publisher), so the request goes to the manager along
    /// with the KEY_MSG sealed to the manager.
    pub fn apsub3_forward(&mut self, m1: &AccessRequest) -> Result<Apsub3M2> {
        let ticket_id = m1.ticket.id();
        if self.stolen.contains(&ticket_id) {
            return Err(ProtocolError::TicketStolen);
        }
        let manager_key = self
            .manager_key
            .ok_or_else(|| ProtocolError::UnknownPublisher("manager".into()))?;
        let key_msg = self.key_msg_for(&m1.content_name)?;
        let mut w = Writer::new();
        encode_key_msg(&mut w, &key_msg);
        let sealed_key_msg = seal(&manager_key, &w.finish(), &mut self.rng);

        let challenge = Nonce::random(&mut self.rng);
        self.pending_forward.insert(
            (m1.consumer_id.clone(), m1.content_name.clone()),
            PendingForward {
                protocol: ProtocolKind::Apsub3,
                challenge,
                ticket_id: Some(ticket_id),
            },
        );
        Ok(Apsub3M2 {
            request: m1.clone(),
            publisher_id: self.id.clone(),
            challenge,
            key_msg: sealed_key_msg,
        })
    }

    /// APSub3 M3 -> M4: verify `n2`, keep `K_TS` and `n1`, and prove our
    /// identity to the consumer under `K_TS`.
    pub fn apsub3_relay(&mut self, m3: &Apsub3M3, now: u64) -> Result<Apsub3M4> {
        let key = (m3.consumer_id.clone(), m3.content_name.clone());
        let (pending, ticket_id) = match self.pending_forward.get(&key) {
            Some(p) if p.protocol == ProtocolKind::Apsub3 => (p.challenge, p.ticket_id.unwrap_or_default()),
            _ => return Err(ProtocolError::NoPendingRun),
        };
        let parsed = unseal(&self.keypair, &m3.for_publisher)
            .map_err(ProtocolError::from)
            .and_then(|pt| {
                let mut r = Reader::new(&pt);
                let k_ts = r.digest()?;
                let n1 = r.nonce()?;
                let n2 = r.nonce()?;
                r.finish()?;
                Ok((k_ts, n1, n2))
            });
        self.pending_forward.remove(&key);
        let (k_ts, n1, n2) = parsed?;
        if n2 != pending {
            return Err(ProtocolError::ChallengeMismatch("n2"));
        }

        let session = Session {
            consumer_id: m3.consumer_id.clone(),
            publisher_id: self.id.clone(),
            content_name: m3.content_name.clone(),
            protocol: ProtocolKind::Apsub3,
            key: k_ts,
            issue_time: self.config.epoch_seconds(now),
            state: SessionState::AwaitingChallenge,
            pending_challenge: None,
            ticket_id,
            profile: None,
        };
        self.arm(key, session, n1, now);

        let ad = envelope_ad("APSub3.identity", &m3.consumer_id, &m3.content_name);
        let proof = aead_encrypt_random(&k_ts, self.id.as_bytes(), &ad, &mut self.rng);
        Ok(Apsub3M4 {
            consumer_id: m3.consumer_id.clone(),
            content_name: m3.content_name.clone(),
            u0: m3.u0.clone(),
            identity_proof: Some(proof),
        })
    }

    /// APSub3 M5 -> M6: verify `n1+1` under `K_TS` and confirm to the manager.
    pub fn apsub3_confirm(&mut self, m5: &Apsub3M5, now: u64) -> Result<Apsub3M6> {
        let key = (m5.consumer_id.clone(), m5.content_name.clone());
        let (k_ts, expected) = self.awaiting(&key, ProtocolKind::Apsub3, now)?;
        if m5.response.associated_data != envelope_ad("APSub3.M5", &m5.consumer_id, &m5.content_name) {
            return Err(ProtocolError::AuthenticationFailed("APSub3.M5 headers"));
        }
        let got = decode_nonce_response(&k_ts, &m5.response, "APSub3.M5")?;
        self.settle(&key, expected, got)?;
        Ok(Apsub3M6 {
            consumer_id: m5.consumer_id.clone(),
            publisher_id: self.id.clone(),
            content_name: m5.content_name.clone(),
            response: got,
        })
    }

    /// Expire every challenge whose deadline has passed and mark its ticket stolen.
    pub fn tick_timers(&mut self, now: u64) -> Vec<ExpiredRun> {
        let mut expired = Vec::new();
        for session in self.sessions.values_mut() {
            let Some(pending) = session.pending_challenge else {
                continue;
            };
            if session.state == SessionState::AwaitingChallenge && now >= pending.deadline {
                session.state = SessionState::MarkedStolen;
                session.pending_challenge = None;
                self.stolen.insert(session.ticket_id);
                expired.push(ExpiredRun {
                    consumer_id: session.consumer_id.clone(),
                    content_name: session.content_name.clone(),
                    protocol: session.protocol,
                    ticket_id: session.ticket_id,
                });
            }
        }
        expired
    }

    /// Earliest pending challenge deadline, if any.
    pub fn next_deadline(&self) -> Option<u64> {
        self.sessions
            .values()
            .filter(|s| s.state == SessionState::AwaitingChallenge)
            .filter_map(|s| s.pending_challenge.map(|p| p.deadline))
            .min()
    }

    /// Serialized view of everything this role holds except its private key.
    pub fn state_dump(&self) -> String {
        serde_json::to_string(self).expect("publisher state serializes")
    }
}
