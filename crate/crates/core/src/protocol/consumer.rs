use std::collections::BTreeMap;

use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::crypto::{
    self, aead_decrypt, aead_encrypt_random, derive_subscription_key, derive_temp_session_key, Digest, KeyMsg,
    PublicKey,
};

use super::messages::*;
use super::nonce::Nonce;
use super::{envelope_ad, read_key_msg, read_single_nonce, role_rng, ProtocolError, Reader, Result, Writer};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsumerIdentity {
    pub id: String,
    /// `n_s`, shared only with the manager.
    #[serde(with = "crypto::hex_bytes")]
    pub registration_secret: Vec<u8>,
}

impl ConsumerIdentity {
    pub const MIN_SECRET_LEN: usize = 16;

    pub fn new(id: impl Into<String>, registration_secret: Vec<u8>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(ProtocolError::Malformed("consumer id must not be empty"));
        }
        if registration_secret.len() < Self::MIN_SECRET_LEN {
            return Err(ProtocolError::Malformed("registration secret shorter than 16 bytes"));
        }
        Ok(Self {
            id,
            registration_secret,
        })
    }
}

/// What a consumer holds after SubP with a publisher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subscription {
    pub publisher_id: String,
    pub ticket: Ticket,
    pub session_key: Digest,
}

#[derive(Debug, Clone, Serialize)]
struct PendingSubp {
    publisher_id: String,
    n0: Nonce,
    k_ts: Digest,
}

#[derive(Debug, Clone, Serialize)]
struct PendingAccess {
    publisher_id: String,
    /// Set for APSub3: the publisher whose ticket is being presented.
    home_publisher: Option<String>,
    n0: Nonce,
}

#[derive(Debug, Clone, Serialize)]
pub struct Consumer {
    identity: ConsumerIdentity,
    #[serde(skip)]
    rng: ChaCha20Rng,
    publisher_keys: BTreeMap<String, PublicKey>,
    pending_subp: BTreeMap<String, PendingSubp>,
    pending_access: BTreeMap<String, PendingAccess>,
    subscriptions: BTreeMap<String, Subscription>,
    key_msgs: BTreeMap<String, KeyMsg>,
    /// `K_TS` per third-party publisher, established by APSub3.
    temp_keys: BTreeMap<String, Digest>,
}

impl Consumer {
    pub fn new(identity: ConsumerIdentity, seed: u64) -> Self {
        Self {
            identity,
            rng: role_rng(seed),
            publisher_keys: BTreeMap::new(),
            pending_subp: BTreeMap::new(),
            pending_access: BTreeMap::new(),
            subscriptions: BTreeMap::new(),
            key_msgs: BTreeMap::new(),
            temp_keys: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.identity.id
    }

    pub fn identity(&self) -> &ConsumerIdentity {
        &self.identity
    }

    pub fn learn_publisher_key(&mut self, publisher_id: impl Into<String>, key: PublicKey) {
        self.publisher_keys.insert(publisher_id.into(), key);
    }

    pub fn subscription(&self, publisher_id: &str) -> Option<&Subscription> {
        self.subscriptions.get(publisher_id)
    }

    pub fn key_msg(&self, content_name: &str) -> Option<&KeyMsg> {
        self.key_msgs.get(content_name)
    }

    pub fn temp_key(&self, publisher_id: &str) -> Option<&Digest> {
        self.temp_keys.get(publisher_id)
    }

    /// SubP M1: request a subscription for `content_name` from `publisher_id`.
    pub fn subp_init(&mut self, publisher_id: &str, content_name: &str) -> Result<SubpM1> {
        let pk = self
            .publisher_keys
            .get(publisher_id)
            .ok_or_else(|| ProtocolError::UnknownPublisher(publisher_id.to_owned()))?;
        let k_ts = derive_subscription_key(pk.as_bytes(), &self.identity.registration_secret)?;
        let n0 = Nonce::random(&mut self.rng);

        let mut pt = Writer::new();
        pt.nonce(n0).bytes(&self.identity.registration_secret);
        let ad = envelope_ad("SubP.M1", &self.identity.id, content_name);
        let request = aead_encrypt_random(&k_ts, &pt.finish(), &ad, &mut self.rng);

        self.pending_subp.insert(
            content_name.to_owned(),
            PendingSubp {
                publisher_id: publisher_id.to_owned(),
                n0,
                k_ts,
            },
        );
        Ok(SubpM1 {
            consumer_id: self.identity.id.clone(),
            content_name: content_name.to_owned(),
            request,
        })
    }

    /// SubP M4 -> M5: verify `n0+1`, accept the ticket and session key, and
    /// recover the KEY_MSG.
    pub fn subp_finish(&mut self, m4: &SubpM4) -> Result<SubpM5> {
        if m4.consumer_id != self.identity.id {
            return Err(ProtocolError::NoPendingRun);
        }
        let pending = self
            .pending_subp
            .get(&m4.content_name)
            .ok_or(ProtocolError::NoPendingRun)?;

        if m4.u0.associated_data != envelope_ad("SubP.u0", &m4.consumer_id, &m4.content_name) {
            return Err(ProtocolError::AuthenticationFailed("u0 headers"));
        }
        let u0 = aead_decrypt(&pending.k_ts, &m4.u0).map_err(|_| ProtocolError::AuthenticationFailed("u0"))?;
        let mut r = Reader::new(&u0);
        let echo = r.nonce()?;
        let n1 = r.nonce()?;
        let ticket = r.ticket()?;
        let session_key = r.digest()?;
        r.finish()?;
        if !pending.n0.answered_by(echo) {
            self.pending_subp.remove(&m4.content_name);
            return Err(ProtocolError::ChallengeMismatch("n0+1"));
        }

        if m4.key_msg.associated_data != envelope_ad("SubP.keymsg", &m4.consumer_id, &m4.content_name) {
            return Err(ProtocolError::AuthenticationFailed("key message headers"));
        }
        let km_bytes =
            aead_decrypt(&session_key, &m4.key_msg).map_err(|_| ProtocolError::AuthenticationFailed("key message"))?;
        let mut r = Reader::new(&km_bytes);
        let key_msg = read_key_msg(&mut r)?;
        r.finish()?;

        let pending = self.pending_subp.remove(&m4.content_name).expect("checked above");
        self.subscriptions.insert(
            pending.publisher_id.clone(),
            Subscription {
                publisher_id: pending.publisher_id,
                ticket,
                session_key,
            },
        );
        self.key_msgs.insert(m4.content_name.clone(), key_msg);

        let mut pt = Writer::new();
        pt.nonce(n1.succ());
        let ad = envelope_ad("SubP.M5", &self.identity.id, &m4.content_name);
        let response = aead_encrypt_random(&session_key, &pt.finish(), &ad, &mut self.rng);
        Ok(SubpM5 {
            consumer_id: self.identity.id.clone(),
            content_name: m4.content_name.clone(),
            response,
        })
    }

    fn access_request(&mut self, label: &str, home: &str, content_name: &str) -> Result<(AccessRequest, Nonce)> {
        let sub = self
            .subscriptions
            .get(home)
            .ok_or_else(|| ProtocolError::NotSubscribed(home.to_owned()))?;
        let n0 = Nonce::random(&mut self.rng);
        let mut pt = Writer::new();
        pt.str(&self.identity.id).nonce(n0);
        let ad = envelope_ad(label, &self.identity.id, content_name);
        let access = aead_encrypt_random(&sub.session_key, &pt.finish(), &ad, &mut self.rng);
        let req = AccessRequest {
            consumer_id: self.identity.id.clone(),
            content_name: content_name.to_owned(),
            access,
            ticket: sub.ticket.clone(),
        };
        Ok((req, n0))
    }

    /// APSub M1: present the ticket issued by `publisher_id` to access another
    /// of its content objects.
    pub fn apsub_init(&mut self, publisher_id: &str, content_name: &str) -> Result<AccessRequest> {
        let (req, n0) = self.access_request("APSub.M1", publisher_id, content_name)?;
        self.pending_access.insert(
            content_name.to_owned(),
            PendingAccess {
                publisher_id: publisher_id.to_owned(),
                home_publisher: None,
                n0,
            },
        );
        Ok(req)
    }

    /// APSub M2 -> M3.
    pub fn apsub_finish(&mut self, m2: &ApsubM2) -> Result<ApsubM3> {
        if m2.consumer_id != self.identity.id {
            return Err(ProtocolError::NoPendingRun);
        }
        let pending = self
            .pending_access
            .get(&m2.content_name)
            .ok_or(ProtocolError::NoPendingRun)?;
        if pending.home_publisher.is_some() {
            return Err(ProtocolError::NoPendingRun);
        }
        let session_key = self
            .subscriptions
            .get(&pending.publisher_id)
            .ok_or_else(|| ProtocolError::NotSubscribed(pending.publisher_id.clone()))?
            .session_key;
        if m2.reply.associated_data != envelope_ad("APSub.M2", &m2.consumer_id, &m2.content_name) {
            return Err(ProtocolError::AuthenticationFailed("APSub.M2 headers"));
        }
        let pt = aead_decrypt(&session_key, &m2.reply).map_err(|_| ProtocolError::AuthenticationFailed("APSub.M2"))?;
        let mut r = Reader::new(&pt);
        let echo = r.nonce()?;
        let n1 = r.nonce()?;
        let key_msg = read_key_msg(&mut r)?;
        r.finish()?;
        if !pending.n0.answered_by(echo) {
            self.pending_access.remove(&m2.content_name);
            return Err(ProtocolError::ChallengeMismatch("n0+1"));
        }
        self.pending_access.remove(&m2.content_name);
        self.key_msgs.insert(m2.content_name.clone(), key_msg);

        let mut w = Writer::new();
        w.nonce(n1.succ());
        let ad = envelope_ad("APSub.M3", &self.identity.id, &m2.content_name);
        let response = aead_encrypt_random(&session_key, &w.finish(), &ad, &mut self.rng);
        Ok(ApsubM3 {
            consumer_id: self.identity.id.clone(),
            content_name: m2.content_name.clone(),
            response,
        })
    }

    /// APSub3 M1: present the ticket issued by `home_publisher` to the
    /// third-party publisher `third_party`.
    pub fn apsub3_init(
        &mut self,
        home_publisher: &str,
        third_party: &str,
        content_name: &str,
    ) -> Result<AccessRequest> {
        let (req, n0) = self.access_request("APSub3.M1", home_publisher, content_name)?;
        self.pending_access.insert(
            content_name.to_owned(),
            PendingAccess {
                publisher_id: third_party.to_owned(),
                home_publisher: Some(home_publisher.to_owned()),
                n0,
            },
        );
        Ok(req)
    }

    /// APSub3 M4 -> M5: verify `n0+1`, derive `K_TS`, check the third-party
    /// publisher's identity proof, and answer `n1+1` under `K_TS`.
    pub fn apsub3_finish(&mut self, m4: &Apsub3M4) -> Result<Apsub3M5> {
        if m4.consumer_id != self.identity.id {
            return Err(ProtocolError::NoPendingRun);
        }
        let pending = self
            .pending_access
            .get(&m4.content_name)
            .ok_or(ProtocolError::NoPendingRun)?;
        let home = pending.home_publisher.clone().ok_or(ProtocolError::NoPendingRun)?;
        let Some(proof) = &m4.identity_proof else {
            self.pending_access.remove(&m4.content_name);
            return Err(ProtocolError::IdentityProofMissing);
        };
        let session_key = self
            .subscriptions
            .get(&home)
            .ok_or_else(|| ProtocolError::NotSubscribed(home.clone()))?
            .session_key;

        if m4.u0.associated_data != envelope_ad("APSub3.u0", &m4.consumer_id, &m4.content_name) {
            return Err(ProtocolError::AuthenticationFailed("u0 headers"));
        }
        let pt = aead_decrypt(&session_key, &m4.u0).map_err(|_| ProtocolError::AuthenticationFailed("u0"))?;
        let mut r = Reader::new(&pt);
        let echo = r.nonce()?;
        let n1 = r.nonce()?;
        let key_msg = read_key_msg(&mut r)?;
        r.finish()?;
        if !pending.n0.answered_by(echo) {
            self.pending_access.remove(&m4.content_name);
            return Err(ProtocolError::ChallengeMismatch("n0+1"));
        }

        let k_ts = derive_temp_session_key(&session_key, &pending.n0.to_bytes());
        let proved = aead_decrypt(&k_ts, proof).map_err(|_| ProtocolError::IdentityProofInvalid)?;
        if proved != pending.publisher_id.as_bytes()
            || proof.associated_data != envelope_ad("APSub3.identity", &m4.consumer_id, &m4.content_name)
        {
            self.pending_access.remove(&m4.content_name);
            return Err(ProtocolError::IdentityProofInvalid);
        }

        let pending = self.pending_access.remove(&m4.content_name).expect("checked above");
        self.key_msgs.insert(m4.content_name.clone(), key_msg);
        self.temp_keys.insert(pending.publisher_id, k_ts);

        let mut w = Writer::new();
        w.nonce(n1.succ());
        let ad = envelope_ad("APSub3.M5", &self.identity.id, &m4.content_name);
        let response = aead_encrypt_random(&k_ts, &w.finish(), &ad, &mut self.rng);
        Ok(Apsub3M5 {
            consumer_id: self.identity.id.clone(),
            content_name: m4.content_name.clone(),
            response,
        })
    }

    /// Serialized view of everything this role holds, for secrecy inspection.
    pub fn state_dump(&self) -> String {
        serde_json::to_string(self).expect("consumer state serializes")
    }
}

pub(crate) fn decode_nonce_response(key: &Digest, env: &crypto::AeadEnvelope, what: &'static str) -> Result<Nonce> {
    let pt = aead_decrypt(key, env).map_err(|_| ProtocolError::AuthenticationFailed(what))?;
    read_single_nonce(&pt)
}
