use serde::Serialize;

use sdpc_core::content::{Gop, Segment};

/// Clear header that lets routers index a cached data packet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Meta {
    pub name: String,
    pub version: String,
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interest {
    pub name: String,
    pub segment_index: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_hex")]
    pub auth_payload: Option<Vec<u8>>,
    pub run_id: String,
    /// Node that issued the interest.
    pub origin: String,
}

impl Interest {
    pub fn key(&self) -> PacketKey {
        (self.name.clone(), self.segment_index)
    }

    pub fn is_auth_bearing(&self) -> bool {
        self.auth_payload.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum Payload {
    Segment(Segment),
    #[serde(with = "sdpc_core::crypto::hex_bytes")]
    Protocol(Vec<u8>),
    /// One group of pictures from a selectively encrypted stream.
    Gop(Gop),
    Ack,
    Nack(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Data {
    pub name: String,
    pub segment_index: Option<u64>,
    pub payload: Payload,
    pub cacheable: bool,
    pub meta: Option<Meta>,
    pub run_id: String,
    /// Node that produced this copy: the publisher or a caching router.
    pub served_by: String,
    /// Links traversed since `served_by`.
    pub hops: u64,
}

impl Data {
    pub fn key(&self) -> PacketKey {
        (self.name.clone(), self.segment_index)
    }

    /// Reply to `interest` that must never be cached.
    pub fn reply(interest: &Interest, payload: Payload, served_by: &str) -> Self {
        Data {
            name: interest.name.clone(),
            segment_index: interest.segment_index,
            payload,
            cacheable: false,
            meta: None,
            run_id: interest.run_id.clone(),
            served_by: served_by.to_owned(),
            hops: 0,
        }
    }
}

pub type PacketKey = (String, Option<u64>);

mod opt_hex {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(b) => s.serialize_str(&hex::encode(b)),
            None => s.serialize_none(),
        }
    }
}
