use std::collections::BTreeMap;

use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::crypto::{
    self, aead_decrypt, aead_encrypt_random, derive_session_key, derive_subscription_key, derive_temp_session_key,
    seal, unseal, Digest, KeyPair, PublicKey,
};

use super::messages::*;
use super::nonce::{Nonce, NonceRegistry};
use super::{
    encode_key_msg, envelope_ad, read_key_msg, role_rng, ProtocolConfig, ProtocolError, Reader, Result, TicketContents,
    Writer,
};

#[derive(Debug, Clone, Serialize)]
struct ConsumerRecord {
    #[serde(with = "crypto::hex_bytes")]
    secret: Vec<u8>,
    profile: String,
}

#[derive(Debug, Clone, Serialize)]
struct PublisherRecord {
    public_key: PublicKey,
    /// The publisher's key pair, held so tickets it issued can be opened
    /// during third-party access.
    #[serde(skip)]
    unseal: Option<KeyPair>,
}

#[derive(Debug, Clone, Serialize)]
struct IssuedRun {
    protocol: ProtocolKind,
    expected: Nonce,
}

/// A run whose final confirmation reached the manager.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompletedRun {
    pub protocol: ProtocolKind,
    pub consumer_id: String,
    pub publisher_id: String,
    pub content_name: String,
}

type IssueKey = (String, String, String);

#[derive(Debug, Clone, Serialize)]
pub struct Manager {
    id: String,
    #[serde(skip)]
    keypair: KeyPair,
    #[serde(skip)]
    rng: ChaCha20Rng,
    config: ProtocolConfig,
    consumers: BTreeMap<String, ConsumerRecord>,
    publishers: BTreeMap<String, PublisherRecord>,
    registry: NonceRegistry,
    #[serde(serialize_with = "super::map_entries")]
    issued: BTreeMap<IssueKey, IssuedRun>,
    completed: Vec<CompletedRun>,
}

impl Manager {
    pub fn new(id: impl Into<String>, keypair: KeyPair, config: ProtocolConfig, seed: u64) -> Self {
        Self {
            id: id.into(),
            keypair,
            rng: role_rng(seed),
            config,
            consumers: BTreeMap::new(),
            publishers: BTreeMap::new(),
            registry: NonceRegistry::new(config.nonce_retention),
            issued: BTreeMap::new(),
            completed: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn public_key(&self) -> &PublicKey {
        self.keypair.public()
    }

    pub fn registry_mut(&mut self) -> &mut NonceRegistry {
        &mut self.registry
    }

    pub fn register_consumer(&mut self, consumer_id: impl Into<String>, secret: Vec<u8>, profile: impl Into<String>) {
        self.consumers.insert(
            consumer_id.into(),
            ConsumerRecord {
                secret,
                profile: profile.into(),
            },
        );
    }

    /// Register an affiliated publisher. Passing its key pair grants the
    /// manager the ability to open that publisher's tickets.
    pub fn register_publisher(
        &mut self,
        publisher_id: impl Into<String>,
        public_key: PublicKey,
        unseal: Option<KeyPair>,
    ) {
        self.publishers
            .insert(publisher_id.into(), PublisherRecord { public_key, unseal });
    }

    pub fn completed_runs(&self) -> &[CompletedRun] {
        &self.completed
    }

    fn publisher_key(&self, id: &str) -> Result<PublicKey> {
        self.publishers
            .get(id)
            .map(|p| p.public_key)
            .ok_or_else(|| ProtocolError::UnknownPublisher(id.to_owned()))
    }

    /// SubP M2 -> M3: authenticate the consumer by its registration secret,
    /// issue `K_s = H(T_m xor n_s)` and a ticket sealed to the publisher.
    pub fn subp_process(&mut self, m2: &SubpM2, now: u64) -> Result<SubpM3> {
        let m1 = &m2.m1;
        let record = self
            .consumers
            .get(&m1.consumer_id)
            .ok_or_else(|| ProtocolError::UnknownConsumer(m1.consumer_id.clone()))?
            .clone();
        let publisher_key = self.publisher_key(&m2.publisher_id)?;

        let k_ts = derive_subscription_key(publisher_key.as_bytes(), &record.secret)?;
        if m1.request.associated_data != envelope_ad("SubP.M1", &m1.consumer_id, &m1.content_name) {
            return Err(ProtocolError::AuthenticationFailed("SubP.M1 headers"));
        }
        let pt = aead_decrypt(&k_ts, &m1.request).map_err(|_| ProtocolError::AuthenticationFailed("SubP.M1"))?;
        let mut r = Reader::new(&pt);
        let n0 = r.nonce()?;
        let claimed_secret = r.bytes()?;
        r.finish()?;
        if claimed_secret != record.secret {
            return Err(ProtocolError::SecretMismatch);
        }
        self.registry
            .check_and_insert(&m1.consumer_id, n0, now)
            .map_err(|_| ProtocolError::Replay)?;

        let issue_time = self.config.epoch_seconds(now);
        let session_key = derive_session_key(issue_time, &record.secret)?;
        let contents = TicketContents {
            consumer_id: m1.consumer_id.clone(),
            session_key,
            profile: record.profile.clone(),
        };
        let ticket = Ticket {
            issuer_publisher: m2.publisher_id.clone(),
            sealed: seal(&publisher_key, &contents.encode(), &mut self.rng),
        };
        let n1 = Nonce::random(&mut self.rng);

        let mut w = Writer::new();
        w.nonce(n1)
            .nonce(m2.challenge)
            .digest(&session_key)
            .u64(issue_time)
            .ticket(&ticket);
        let for_publisher = seal(&publisher_key, &w.finish(), &mut self.rng);

        let mut w = Writer::new();
        w.nonce(n0.succ()).nonce(n1).ticket(&ticket).digest(&session_key);
        let ad = envelope_ad("SubP.u0", &m1.consumer_id, &m1.content_name);
        let u0 = aead_encrypt_random(&k_ts, &w.finish(), &ad, &mut self.rng);

        self.issued.insert(
            (m1.consumer_id.clone(), m2.publisher_id.clone(), m1.content_name.clone()),
            IssuedRun {
                protocol: ProtocolKind::Subp,
                expected: n1.succ(),
            },
        );
        Ok(SubpM3 {
            consumer_id: m1.consumer_id.clone(),
            content_name: m1.content_name.clone(),
            for_publisher,
            u0,
        })
    }

    fn complete(
        &mut self,
        protocol: ProtocolKind,
        consumer: &str,
        publisher: &str,
        content: &str,
        got: Nonce,
    ) -> Result<()> {
        let key = (consumer.to_owned(), publisher.to_owned(), content.to_owned());
        match self.issued.get(&key) {
            Some(run) if run.protocol == protocol && run.expected == got => {}
            Some(run) if run.protocol == protocol => return Err(ProtocolError::ChallengeMismatch("n1+1")),
            _ => return Err(ProtocolError::NoPendingRun),
        }
        self.issued.remove(&key);
        self.completed.push(CompletedRun {
            protocol,
            consumer_id: consumer.to_owned(),
            publisher_id: publisher.to_owned(),
            content_name: content.to_owned(),
        });
        Ok(())
    }

    /// SubP M6: the publisher reports `n1+1`; log the run as complete.
    pub fn subp_complete(&mut self, m6: &SubpM6) -> Result<()> {
        self.complete(
            ProtocolKind::Subp,
            &m6.consumer_id,
            &m6.publisher_id,
            &m6.content_name,
            m6.response,
        )
    }

    /// APSub3 M2 -> M3: open the ticket on behalf of its issuer, derive
    /// `K_TS = H(K_s xor n0)` and hand the third party only `K_TS`.
    pub fn apsub3_process(&mut self, m2: &Apsub3M2, now: u64) -> Result<Apsub3M3> {
        let req = &m2.request;
        let issuer = &req.ticket.issuer_publisher;
        let capability = self
            .publishers
            .get(issuer)
            .and_then(|p| p.unseal.clone())
            .ok_or_else(|| ProtocolError::NoUnsealCapability(issuer.clone()))?;
        let third_party_key = self.publisher_key(&m2.publisher_id)?;

        let contents = TicketContents::decode(&unseal(&capability, &req.ticket.sealed)?)?;
        if contents.consumer_id != req.consumer_id {
            return Err(ProtocolError::AuthenticationFailed("ticket holder"));
        }
        if !self.consumers.contains_key(&contents.consumer_id) {
            return Err(ProtocolError::UnknownConsumer(contents.consumer_id));
        }
        if req.access.associated_data != envelope_ad("APSub3.M1", &req.consumer_id, &req.content_name) {
            return Err(ProtocolError::AuthenticationFailed("APSub3.M1 headers"));
        }
        let access = aead_decrypt(&contents.session_key, &req.access)
            .map_err(|_| ProtocolError::AuthenticationFailed("APSub3.M1"))?;
        let mut r = Reader::new(&access);
        let inner_id = r.string()?;
        let n0 = r.nonce()?;
        r.finish()?;
        if inner_id != contents.consumer_id {
            return Err(ProtocolError::AuthenticationFailed("consumer identity"));
        }
        self.registry
            .check_and_insert(&contents.consumer_id, n0, now)
            .map_err(|_| ProtocolError::Replay)?;

        let key_msg_bytes = unseal(&self.keypair, &m2.key_msg)?;
        let mut r = Reader::new(&key_msg_bytes);
        let key_msg = read_key_msg(&mut r)?;
        r.finish()?;

        let k_ts = derive_temp_session_key(&contents.session_key, &n0.to_bytes());
        let n1 = Nonce::random(&mut self.rng);

        let mut w = Writer::new();
        w.digest(&k_ts).nonce(n1).nonce(m2.challenge);
        let for_publisher = seal(&third_party_key, &w.finish(), &mut self.rng);

        let mut w = Writer::new();
        w.nonce(n0.succ()).nonce(n1);
        encode_key_msg(&mut w, &key_msg);
        let ad = envelope_ad("APSub3.u0", &req.consumer_id, &req.content_name);
        let u0 = aead_encrypt_random(&contents.session_key, &w.finish(), &ad, &mut self.rng);

        self.issued.insert(
            (
                req.consumer_id.clone(),
                m2.publisher_id.clone(),
                req.content_name.clone(),
            ),
            IssuedRun {
                protocol: ProtocolKind::Apsub3,
                expected: n1.succ(),
            },
        );
        Ok(Apsub3M3 {
            consumer_id: req.consumer_id.clone(),
            content_name: req.content_name.clone(),
            for_publisher,
            u0,
        })
    }

    /// APSub3 M6: the third-party publisher reports `n1+1`.
    pub fn apsub3_complete(&mut self, m6: &Apsub3M6) -> Result<()> {
        self.complete(
            ProtocolKind::Apsub3,
            &m6.consumer_id,
            &m6.publisher_id,
            &m6.content_name,
            m6.response,
        )
    }

    /// `K_TS` the manager would derive for a given session key and nonce;
    /// exposed for transcript checks.
    pub fn temp_key_for(session_key: &Digest, n0: Nonce) -> Digest {
        derive_temp_session_key(session_key, &n0.to_bytes())
    }

    pub fn state_dump(&self) -> String {
        serde_json::to_string(self).expect("manager state serializes")
    }
}
