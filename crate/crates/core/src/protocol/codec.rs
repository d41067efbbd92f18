//! Tagged binary encoding of [`ProtocolMessage`].
//!
//! Layout: `version:u8 || tag:u8 || body`. Variable-length fields are a
//! 4-byte big-endian length followed by the bytes; nonces (16), digests (32)
//! and IVs/tags are fixed width. Optional fields carry a `0`/`1` presence
//! byte. Decoding is strict: every accepted input re-encodes to itself.

use thiserror::Error;

use crate::crypto::{AeadEnvelope, Digest, SealedBox, DIGEST_LEN, IV_LEN, TAG_LEN};

use super::messages::*;
use super::nonce::Nonce;

pub const WIRE_VERSION: u8 = 1;
/// Upper bound on any single length-prefixed field.
pub const MAX_FIELD_LEN: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("input truncated")]
    Truncated,
    #[error("unknown message tag 0x{0:02x}")]
    UnknownTag(u8),
    #[error("unsupported wire version {0}")]
    UnsupportedVersion(u8),
    #[error("field length {0} exceeds limit")]
    LengthOverflow(usize),
    #[error("{0} trailing bytes after message")]
    TrailingBytes(usize),
    #[error("field is not valid UTF-8")]
    InvalidUtf8,
    #[error("invalid presence flag {0}")]
    InvalidFlag(u8),
}

#[derive(Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn raw(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(&(v.len() as u32).to_be_bytes());
        self.buf.extend_from_slice(v);
        self
    }

    pub fn str(&mut self, v: &str) -> &mut Self {
        self.bytes(v.as_bytes())
    }

    pub fn nonce(&mut self, n: Nonce) -> &mut Self {
        self.raw(&n.to_bytes())
    }

    pub fn digest(&mut self, d: &Digest) -> &mut Self {
        self.raw(d.as_bytes())
    }

    pub fn envelope(&mut self, e: &AeadEnvelope) -> &mut Self {
        self.raw(&e.nonce_iv)
            .bytes(&e.ciphertext)
            .raw(&e.tag)
            .bytes(&e.associated_data)
    }

    pub fn sealed(&mut self, s: &SealedBox) -> &mut Self {
        self.digest(&s.recipient_fingerprint).bytes(&s.ciphertext)
    }

    pub fn ticket(&mut self, t: &Ticket) -> &mut Self {
        self.str(&t.issuer_publisher).sealed(&t.sealed)
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len()
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.buf.len() < n {
            return Err(CodecError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>, CodecError> {
        let len = u32::from_be_bytes(self.array()?) as usize;
        if len > MAX_FIELD_LEN {
            return Err(CodecError::LengthOverflow(len));
        }
        Ok(self.take(len)?.to_vec())
    }

    pub fn string(&mut self) -> Result<String, CodecError> {
        String::from_utf8(self.bytes()?).map_err(|_| CodecError::InvalidUtf8)
    }

    pub fn nonce(&mut self) -> Result<Nonce, CodecError> {
        Ok(Nonce::from_bytes(self.array()?))
    }

    pub fn digest(&mut self) -> Result<Digest, CodecError> {
        Ok(Digest::from_bytes(self.array::<DIGEST_LEN>()?))
    }

    pub fn envelope(&mut self) -> Result<AeadEnvelope, CodecError> {
        Ok(AeadEnvelope {
            nonce_iv: self.array::<IV_LEN>()?,
            ciphertext: self.bytes()?,
            tag: self.array::<TAG_LEN>()?,
            associated_data: self.bytes()?,
        })
    }

    pub fn sealed(&mut self) -> Result<SealedBox, CodecError> {
        let recipient_fingerprint = self.digest()?;
        Ok(SealedBox {
            recipient_fingerprint,
            ciphertext: self.bytes()?,
        })
    }

    pub fn ticket(&mut self) -> Result<Ticket, CodecError> {
        Ok(Ticket {
            issuer_publisher: self.string()?,
            sealed: self.sealed()?,
        })
    }

    pub fn finish(self) -> Result<(), CodecError> {
        match self.buf.len() {
            0 => Ok(()),
            n => Err(CodecError::TrailingBytes(n)),
        }
    }
}

mod tag {
    pub const SUBP_M1: u8 = 0x11;
    pub const SUBP_M2: u8 = 0x12;
    pub const SUBP_M3: u8 = 0x13;
    pub const SUBP_M4: u8 = 0x14;
    pub const SUBP_M5: u8 = 0x15;
    pub const SUBP_M6: u8 = 0x16;
    pub const APSUB_M1: u8 = 0x21;
    pub const APSUB_M2: u8 = 0x22;
    pub const APSUB_M3: u8 = 0x23;
    pub const APSUB3_M1: u8 = 0x31;
    pub const APSUB3_M2: u8 = 0x32;
    pub const APSUB3_M3: u8 = 0x33;
    pub const APSUB3_M4: u8 = 0x34;
    pub const APSUB3_M5: u8 = 0x35;
    pub const APSUB3_M6: u8 = 0x36;
}

fn write_subp_m1(w: &mut Writer, m: &SubpM1) {
    w.str(&m.consumer_id).str(&m.content_name).envelope(&m.request);
}

fn read_subp_m1(r: &mut Reader) -> Result<SubpM1, CodecError> {
    Ok(SubpM1 {
        consumer_id: r.string()?,
        content_name: r.string()?,
        request: r.envelope()?,
    })
}

fn write_access(w: &mut Writer, m: &AccessRequest) {
    w.str(&m.consumer_id)
        .str(&m.content_name)
        .envelope(&m.access)
        .ticket(&m.ticket);
}

fn read_access(r: &mut Reader) -> Result<AccessRequest, CodecError> {
    Ok(AccessRequest {
        consumer_id: r.string()?,
        content_name: r.string()?,
        access: r.envelope()?,
        ticket: r.ticket()?,
    })
}

pub fn encode_message(msg: &ProtocolMessage) -> Vec<u8> {
    use ProtocolMessage::*;
    let mut w = Writer::new();
    w.u8(WIRE_VERSION);
    match msg {
        SubpM1(m) => {
            w.u8(tag::SUBP_M1);
            write_subp_m1(&mut w, m);
        }
        SubpM2(m) => {
            w.u8(tag::SUBP_M2);
            write_subp_m1(&mut w, &m.m1);
            w.str(&m.publisher_id).nonce(m.challenge);
        }
        SubpM3(m) => {
            w.u8(tag::SUBP_M3)
                .str(&m.consumer_id)
                .str(&m.content_name)
                .sealed(&m.for_publisher)
                .envelope(&m.u0);
        }
        SubpM4(m) => {
            w.u8(tag::SUBP_M4)
                .str(&m.consumer_id)
                .str(&m.content_name)
                .envelope(&m.u0)
                .envelope(&m.key_msg);
        }
        SubpM5(m) => {
            w.u8(tag::SUBP_M5)
                .str(&m.consumer_id)
                .str(&m.content_name)
                .envelope(&m.response);
        }
        SubpM6(m) => {
            w.u8(tag::SUBP_M6)
                .str(&m.consumer_id)
                .str(&m.publisher_id)
                .str(&m.content_name)
                .nonce(m.response);
        }
        ApsubM1(m) => {
            w.u8(tag::APSUB_M1);
            write_access(&mut w, m);
        }
        ApsubM2(m) => {
            w.u8(tag::APSUB_M2)
                .str(&m.consumer_id)
                .str(&m.content_name)
                .envelope(&m.reply);
        }
        ApsubM3(m) => {
            w.u8(tag::APSUB_M3)
                .str(&m.consumer_id)
                .str(&m.content_name)
                .envelope(&m.response);
        }
        Apsub3M1(m) => {
            w.u8(tag::APSUB3_M1);
            write_access(&mut w, m);
        }
        Apsub3M2(m) => {
            w.u8(tag::APSUB3_M2);
            write_access(&mut w, &m.request);
            w.str(&m.publisher_id).nonce(m.challenge).sealed(&m.key_msg);
        }
        Apsub3M3(m) => {
            w.u8(tag::APSUB3_M3)
                .str(&m.consumer_id)
                .str(&m.content_name)
                .sealed(&m.for_publisher)
                .envelope(&m.u0);
        }
        Apsub3M4(m) => {
            w.u8(tag::APSUB3_M4)
                .str(&m.consumer_id)
                .str(&m.content_name)
                .envelope(&m.u0);
            match &m.identity_proof {
                Some(p) => w.u8(1).envelope(p),
                None => w.u8(0),
            };
        }
        Apsub3M5(m) => {
            w.u8(tag::APSUB3_M5)
                .str(&m.consumer_id)
                .str(&m.content_name)
                .envelope(&m.response);
        }
        Apsub3M6(m) => {
            w.u8(tag::APSUB3_M6)
                .str(&m.consumer_id)
                .str(&m.publisher_id)
                .str(&m.content_name)
                .nonce(m.response);
        }
    }
    w.finish()
}

pub fn decode_message(bytes: &[u8]) -> Result<ProtocolMessage, CodecError> {
    use ProtocolMessage::*;
    let mut r = Reader::new(bytes);
    let version = r.u8()?;
    if version != WIRE_VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    let msg = match r.u8()? {
        tag::SUBP_M1 => SubpM1(read_subp_m1(&mut r)?),
        tag::SUBP_M2 => SubpM2(super::messages::SubpM2 {
            m1: read_subp_m1(&mut r)?,
            publisher_id: r.string()?,
            challenge: r.nonce()?,
        }),
        tag::SUBP_M3 => SubpM3(super::messages::SubpM3 {
            consumer_id: r.string()?,
            content_name: r.string()?,
            for_publisher: r.sealed()?,
            u0: r.envelope()?,
        }),
        tag::SUBP_M4 => SubpM4(super::messages::SubpM4 {
            consumer_id: r.string()?,
            content_name: r.string()?,
            u0: r.envelope()?,
            key_msg: r.envelope()?,
        }),
        tag::SUBP_M5 => SubpM5(super::messages::SubpM5 {
            consumer_id: r.string()?,
            content_name: r.string()?,
            response: r.envelope()?,
        }),
        tag::SUBP_M6 => SubpM6(super::messages::SubpM6 {
            consumer_id: r.string()?,
            publisher_id: r.string()?,
            content_name: r.string()?,
            response: r.nonce()?,
        }),
        tag::APSUB_M1 => ApsubM1(read_access(&mut r)?),
        tag::APSUB_M2 => ApsubM2(super::messages::ApsubM2 {
            consumer_id: r.string()?,
            content_name: r.string()?,
            reply: r.envelope()?,
        }),
        tag::APSUB_M3 => ApsubM3(super::messages::ApsubM3 {
            consumer_id: r.string()?,
            content_name: r.string()?,
            response: r.envelope()?,
        }),
        tag::APSUB3_M1 => Apsub3M1(read_access(&mut r)?),
        tag::APSUB3_M2 => Apsub3M2(super::messages::Apsub3M2 {
            request: read_access(&mut r)?,
            publisher_id: r.string()?,
            challenge: r.nonce()?,
            key_msg: r.sealed()?,
        }),
        tag::APSUB3_M3 => Apsub3M3(super::messages::Apsub3M3 {
            consumer_id: r.string()?,
            content_name: r.string()?,
            for_publisher: r.sealed()?,
            u0: r.envelope()?,
        }),
        tag::APSUB3_M4 => {
            let consumer_id = r.string()?;
            let content_name = r.string()?;
            let u0 = r.envelope()?;
            let identity_proof = match r.u8()? {
                0 => None,
                1 => Some(r.envelope()?),
                other => return Err(CodecError::InvalidFlag(other)),
            };
            Apsub3M4(super::messages::Apsub3M4 {
                consumer_id,
                content_name,
                u0,
                identity_proof,
            })
        }
        tag::APSUB3_M5 => Apsub3M5(super::messages::Apsub3M5 {
            consumer_id: r.string()?,
            content_name: r.string()?,
            response: r.envelope()?,
        }),
        tag::APSUB3_M6 => Apsub3M6(super::messages::Apsub3M6 {
            consumer_id: r.string()?,
            publisher_id: r.string()?,
            content_name: r.string()?,
            response: r.nonce()?,
        }),
        other => return Err(CodecError::UnknownTag(other)),
    };
    r.finish()?;
    Ok(msg)
}
