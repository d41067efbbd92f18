//! Subscription (SubP) and content access (APSub, APSub3) protocols.
//!
//! Three roles take part: a [`Consumer`], a [`Publisher`] and the trusted
//! subscription [`Manager`]. Each role is a single-owner state machine that
//! consumes one message and produces the next; nothing is shared between
//! roles except [`ProtocolMessage`] values.
//!
//! SubP flow:
//!
//! ```text
//! M1 N -> P   N, name, {n0 || ns}K_TS              K_TS = H(K_p xor ns)
//! M2 P -> M   M1, P, n2
//! M3 M -> P   seal_P(n1 || n2 || K_s || T_m || T_k), u0 = {n0+1 || n1 || T_k || K_s}K_TS
//! M4 P -> N   u0, {KEY_MSG}K_s
//! M5 N -> P   {n1+1}K_s
//! M6 P -> M   n1+1
//! ```
//!
//! APSub is `M1 N->P {N || n0}K_s || T_k`, `M2 P->N {n0+1 || n1 || KEY_MSG}K_s`,
//! `M3 N->P {n1+1}K_s`. APSub3 routes the ticket through the manager, which
//! hands the third-party publisher only `K_TS = H(K_s xor n0)`.

mod codec;
mod consumer;
pub mod flows;
mod manager;
mod messages;
mod nonce;
mod publisher;
mod transcript;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::ContentError;
use crate::crypto::{encode_id, CryptoError, Digest, KeyMsg, PublicKey};

pub use codec::{decode_message, encode_message, CodecError, Reader, Writer, MAX_FIELD_LEN, WIRE_VERSION};
pub use consumer::{Consumer, ConsumerIdentity, Subscription};
pub use manager::{CompletedRun, Manager};
pub use messages::*;
pub use nonce::{Nonce, NonceRegistry, ReplayDetected};
pub use publisher::{ExpiredRun, PublishedContent, Publisher};
pub use transcript::{Transcript, TranscriptEntry};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("unknown publisher {0}")]
    UnknownPublisher(String),
    #[error("unknown consumer {0}")]
    UnknownConsumer(String),
    #[error("unknown content {0}")]
    UnknownContent(String),
    #[error("no subscription with publisher {0}")]
    NotSubscribed(String),
    #[error("no unseal capability for tickets of {0}")]
    NoUnsealCapability(String),
    #[error("authentication failed: {0}")]
    AuthenticationFailed(&'static str),
    #[error("registration secret mismatch")]
    SecretMismatch,
    #[error("nonce replay detected")]
    Replay,
    #[error("challenge response mismatch: {0}")]
    ChallengeMismatch(&'static str),
    #[error("no pending run for this message")]
    NoPendingRun,
    #[error("request ignored: {0}")]
    Ignored(&'static str),
    #[error("challenge timer expired")]
    TimerExpired,
    #[error("ticket is marked stolen")]
    TicketStolen,
    #[error("identity proof missing")]
    IdentityProofMissing,
    #[error("identity proof does not match the responding publisher")]
    IdentityProofInvalid,
    #[error("malformed plaintext: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Content(#[from] ContentError),
}

pub type Result<T, E = ProtocolError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Ticks a publisher waits for the final challenge response before
    /// marking the ticket stolen.
    pub stolen_ticket_timeout: u64,
    pub ticks_per_second: u64,
    /// Wall-clock seconds corresponding to tick 0.
    pub epoch_base: u64,
    /// Ticks a nonce stays in a replay registry.
    pub nonce_retention: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            stolen_ticket_timeout: 5_000,
            ticks_per_second: 1_000,
            epoch_base: 1_700_000_000,
            nonce_retention: 86_400_000,
        }
    }
}

impl ProtocolConfig {
    pub fn epoch_seconds(&self, now: u64) -> u64 {
        self.epoch_base + now / self.ticks_per_second.max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionState {
    AwaitingChallenge,
    Established,
    Closed,
    MarkedStolen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingChallenge {
    /// The response that will be accepted, i.e. `n1 + 1`.
    pub expected: Nonce,
    pub deadline: u64,
}

/// A publisher's view of one consumer's access to one content object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub consumer_id: String,
    pub publisher_id: String,
    pub content_name: String,
    pub protocol: ProtocolKind,
    /// `K_s` for SubP and APSub, `K_TS` for APSub3.
    pub key: Digest,
    pub issue_time: u64,
    pub state: SessionState,
    pub pending_challenge: Option<PendingChallenge>,
    pub ticket_id: Digest,
    pub profile: Option<String>,
}

/// Plaintext of a ticket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TicketContents {
    pub consumer_id: String,
    pub session_key: Digest,
    pub profile: String,
}

impl TicketContents {
    pub(crate) fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.str(&self.consumer_id).digest(&self.session_key).str(&self.profile);
        w.finish()
    }

    pub(crate) fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let out = Self {
            consumer_id: r.string()?,
            session_key: r.digest()?,
            profile: r.string()?,
        };
        r.finish()?;
        Ok(out)
    }
}

pub(crate) fn encode_key_msg(w: &mut Writer, km: &KeyMsg) {
    w.digest(&km.commitment).raw(km.publisher_public_key.as_bytes());
}

pub(crate) fn read_key_msg(r: &mut Reader) -> Result<KeyMsg> {
    let commitment = r.digest()?;
    let publisher_public_key = PublicKey::from_slice(r.take(32)?)?;
    Ok(KeyMsg {
        commitment,
        publisher_public_key,
    })
}

/// Associated data for protocol envelopes: binds the step label and the
/// clear headers of the carrying message.
pub(crate) fn envelope_ad(label: &str, consumer_id: &str, content_name: &str) -> Vec<u8> {
    let mut ad = encode_id(label);
    ad.extend_from_slice(&encode_id(consumer_id));
    ad.extend_from_slice(&encode_id(content_name));
    ad
}

/// Decrypts to a single nonce, rejecting anything else.
pub(crate) fn read_single_nonce(bytes: &[u8]) -> Result<Nonce> {
    let mut r = Reader::new(bytes);
    let n = r.nonce()?;
    r.finish()?;
    Ok(n)
}

pub(crate) fn role_rng(seed: u64) -> rand_chacha::ChaCha20Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha20Rng::seed_from_u64(seed)
}

/// Serialize a map with composite keys as a list of `[key, value]` pairs.
pub(crate) fn map_entries<K, V, S>(map: &std::collections::BTreeMap<K, V>, s: S) -> std::result::Result<S::Ok, S::Error>
where
    K: Serialize,
    V: Serialize,
    S: serde::Serializer,
{
    s.collect_seq(map.iter())
}
