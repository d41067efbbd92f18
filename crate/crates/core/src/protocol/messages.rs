//! Wire messages of the three protocols.
//!
//! Field comments name the key protecting each encrypted field and the
//! plaintext layout inside it. Plaintext headers carry only routable ids and
//! content names.

use serde::{Deserialize, Serialize};

use crate::crypto::{AeadEnvelope, Digest, SealedBox};

use super::nonce::Nonce;

/// A publisher-sealed credential. The bearer cannot open it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ticket {
    pub issuer_publisher: String,
    /// Sealed to the issuer: `consumer_id || K_s || profile`.
    pub sealed: SealedBox,
}

impl Ticket {
    /// Stable identifier used for stolen-ticket bookkeeping.
    pub fn id(&self) -> Digest {
        crate::crypto::hash(&self.sealed.ciphertext)
    }
}

/// SubP M1, consumer to publisher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubpM1 {
    pub consumer_id: String,
    pub content_name: String,
    /// Under `K_TS = H(K_p xor n_s)`: `n_0 || n_s`.
    pub request: AeadEnvelope,
}

/// SubP M2, publisher to manager.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubpM2 {
    pub m1: SubpM1,
    pub publisher_id: String,
    /// `n_2`, the publisher's challenge to the manager.
    pub challenge: Nonce,
}

/// SubP M3, manager to publisher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubpM3 {
    pub consumer_id: String,
    pub content_name: String,
    /// Sealed to the publisher: `n_1 || n_2 || K_s || T_m || ticket`.
    pub for_publisher: SealedBox,
    /// `u_0`, under `K_TS`: `n_0+1 || n_1 || ticket || K_s`.
    pub u0: AeadEnvelope,
}

/// SubP M4, publisher to consumer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubpM4 {
    pub consumer_id: String,
    pub content_name: String,
    pub u0: AeadEnvelope,
    /// Under `K_s`: the KEY_MSG `z0 || K_p`.
    pub key_msg: AeadEnvelope,
}

/// SubP M5, consumer to publisher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubpM5 {
    pub consumer_id: String,
    pub content_name: String,
    /// Under `K_s`: `n_1+1`.
    pub response: AeadEnvelope,
}

/// SubP M6, publisher to manager: run confirmation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubpM6 {
    pub consumer_id: String,
    pub publisher_id: String,
    pub content_name: String,
    /// `n_1+1`.
    pub response: Nonce,
}

/// First message of both APSub and APSub3.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRequest {
    pub consumer_id: String,
    pub content_name: String,
    /// Under `K_s`: `consumer_id || n_0`.
    pub access: AeadEnvelope,
    pub ticket: Ticket,
}

/// APSub M2, publisher to consumer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApsubM2 {
    pub consumer_id: String,
    pub content_name: String,
    /// Under `K_s`: `n_0+1 || n_1 || KEY_MSG`.
    pub reply: AeadEnvelope,
}

/// APSub M3, consumer to publisher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApsubM3 {
    pub consumer_id: String,
    pub content_name: String,
    /// Under `K_s`: `n_1+1`.
    pub response: AeadEnvelope,
}

/// APSub3 M2, third-party publisher to manager.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Apsub3M2 {
    pub request: AccessRequest,
    pub publisher_id: String,
    pub challenge: Nonce,
    /// Sealed to the manager: the KEY_MSG for the requested content.
    pub key_msg: SealedBox,
}

/// APSub3 M3, manager to third-party publisher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Apsub3M3 {
    pub consumer_id: String,
    pub content_name: String,
    /// Sealed to the third-party publisher: `K_TS || n_1 || n_2`.
    pub for_publisher: SealedBox,
    /// `u_0`, under `K_s`: `n_0+1 || n_1 || KEY_MSG`.
    pub u0: AeadEnvelope,
}

/// APSub3 M4, third-party publisher to consumer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Apsub3M4 {
    pub consumer_id: String,
    pub content_name: String,
    pub u0: AeadEnvelope,
    /// Under `K_TS = H(K_s xor n_0)`: the third-party publisher's id.
    pub identity_proof: Option<AeadEnvelope>,
}

/// APSub3 M5, consumer to third-party publisher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Apsub3M5 {
    pub consumer_id: String,
    pub content_name: String,
    /// Under `K_TS`: `n_1+1`.
    pub response: AeadEnvelope,
}

/// APSub3 M6, third-party publisher to manager: run confirmation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Apsub3M6 {
    pub consumer_id: String,
    pub publisher_id: String,
    pub content_name: String,
    pub response: Nonce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolKind {
    #[serde(rename = "SubP")]
    Subp,
    #[serde(rename = "APSub")]
    Apsub,
    #[serde(rename = "APSub3")]
    Apsub3,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Subp => "SubP",
            ProtocolKind::Apsub => "APSub",
            ProtocolKind::Apsub3 => "APSub3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolMessage {
    SubpM1(SubpM1),
    SubpM2(SubpM2),
    SubpM3(SubpM3),
    SubpM4(SubpM4),
    SubpM5(SubpM5),
    SubpM6(SubpM6),
    ApsubM1(AccessRequest),
    ApsubM2(ApsubM2),
    ApsubM3(ApsubM3),
    Apsub3M1(AccessRequest),
    Apsub3M2(Apsub3M2),
    Apsub3M3(Apsub3M3),
    Apsub3M4(Apsub3M4),
    Apsub3M5(Apsub3M5),
    Apsub3M6(Apsub3M6),
}

impl ProtocolMessage {
    pub fn protocol(&self) -> ProtocolKind {
        use ProtocolMessage::*;
        match self {
            SubpM1(_) | SubpM2(_) | SubpM3(_) | SubpM4(_) | SubpM5(_) | SubpM6(_) => ProtocolKind::Subp,
            ApsubM1(_) | ApsubM2(_) | ApsubM3(_) => ProtocolKind::Apsub,
            _ => ProtocolKind::Apsub3,
        }
    }

    /// Message label within its protocol, e.g. `M3`.
    pub fn step(&self) -> &'static str {
        use ProtocolMessage::*;
        match self {
            SubpM1(_) | ApsubM1(_) | Apsub3M1(_) => "M1",
            SubpM2(_) | ApsubM2(_) | Apsub3M2(_) => "M2",
            SubpM3(_) | ApsubM3(_) | Apsub3M3(_) => "M3",
            SubpM4(_) | Apsub3M4(_) => "M4",
            SubpM5(_) | Apsub3M5(_) => "M5",
            SubpM6(_) | Apsub3M6(_) => "M6",
        }
    }

    /// `SubP.M1` style tag.
    pub fn tag(&self) -> String {
        format!("{}.{}", self.protocol().as_str(), self.step())
    }

    pub fn consumer_id(&self) -> &str {
        use ProtocolMessage::*;
        match self {
            SubpM1(m) => &m.consumer_id,
            SubpM2(m) => &m.m1.consumer_id,
            SubpM3(m) => &m.consumer_id,
            SubpM4(m) => &m.consumer_id,
            SubpM5(m) => &m.consumer_id,
            SubpM6(m) => &m.consumer_id,
            ApsubM1(m) | Apsub3M1(m) => &m.consumer_id,
            ApsubM2(m) => &m.consumer_id,
            ApsubM3(m) => &m.consumer_id,
            Apsub3M2(m) => &m.request.consumer_id,
            Apsub3M3(m) => &m.consumer_id,
            Apsub3M4(m) => &m.consumer_id,
            Apsub3M5(m) => &m.consumer_id,
            Apsub3M6(m) => &m.consumer_id,
        }
    }

    pub fn content_name(&self) -> &str {
        use ProtocolMessage::*;
        match self {
            SubpM1(m) => &m.content_name,
            SubpM2(m) => &m.m1.content_name,
            SubpM3(m) => &m.content_name,
            SubpM4(m) => &m.content_name,
            SubpM5(m) => &m.content_name,
            SubpM6(m) => &m.content_name,
            ApsubM1(m) | Apsub3M1(m) => &m.content_name,
            ApsubM2(m) => &m.content_name,
            ApsubM3(m) => &m.content_name,
            Apsub3M2(m) => &m.request.content_name,
            Apsub3M3(m) => &m.content_name,
            Apsub3M4(m) => &m.content_name,
            Apsub3M5(m) => &m.content_name,
            Apsub3M6(m) => &m.content_name,
        }
    }
}
