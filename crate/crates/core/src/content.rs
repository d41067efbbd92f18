//! Content objects, segmentation, per-segment encryption, and the abstract
//! GOP stream used for selective (I-frame only) video encryption.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{
    self, aead_decrypt, aead_encrypt, encode_id, hash, hash_concat, AeadEnvelope, CryptoError, Digest, KeyChain,
    KeyMsg, IV_LEN,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContentError {
    #[error("content name must not be empty")]
    EmptyName,
    #[error("payload must not be empty")]
    EmptyPayload,
    #[error("segment size must be at least 1")]
    ZeroSegmentSize,
    #[error("key chain has {have} keys but {need} are required")]
    ChainTooShort { have: usize, need: usize },
    #[error("segment index {0} out of range")]
    IndexOutOfRange(u64),
    #[error("segment {0} is not encrypted")]
    NotEncrypted(u64),
    #[error("authentication failed for segment {0}")]
    AuthenticationFailed(u64),
    #[error("GOP {0} failed to decrypt")]
    GopDecryptFailed(u64),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

pub type Result<T, E = ContentError> = std::result::Result<T, E>;

/// A named, versioned content object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentObject {
    pub name: String,
    pub version: String,
    pub publish_time: u64,
    #[serde(with = "crypto::hex_bytes")]
    pub payload: Vec<u8>,
    pub segment_size: usize,
}

impl ContentObject {
    pub fn new(
        name: impl Into<String>,
        version: impl Into<String>,
        publish_time: u64,
        payload: Vec<u8>,
        segment_size: usize,
    ) -> Result<Self> {
        let obj = Self {
            name: name.into(),
            version: version.into(),
            publish_time,
            payload,
            segment_size,
        };
        obj.validate()?;
        Ok(obj)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(ContentError::EmptyName);
        }
        if self.payload.is_empty() {
            return Err(ContentError::EmptyPayload);
        }
        if self.segment_size == 0 {
            return Err(ContentError::ZeroSegmentSize);
        }
        Ok(())
    }

    /// `name/version`, the identifier hashed into the commitment.
    pub fn content_id(&self) -> String {
        format!("{}/{}", self.name, self.version)
    }

    pub fn segment_count(&self) -> usize {
        self.payload.len().div_ceil(self.segment_size.max(1))
    }

    pub fn commitment(&self) -> Result<Digest> {
        Ok(crypto::derive_commitment(self.publish_time, &self.content_id())?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub content_name: String,
    pub version: String,
    /// 1-based.
    pub index: u64,
    #[serde(with = "crypto::hex_bytes")]
    pub body: Vec<u8>,
    pub encrypted: bool,
    pub envelope: Option<AeadEnvelope>,
}

/// Associated data binding a ciphertext to `(name, version, index)`.
pub fn segment_associated_data(name: &str, version: &str, index: u64) -> Vec<u8> {
    let mut ad = encode_id(name);
    ad.extend_from_slice(&encode_id(version));
    ad.extend_from_slice(&index.to_be_bytes());
    ad
}

/// IV for a segment: the first 12 bytes of the hash of its associated data.
/// Each segment key encrypts exactly one segment, so the pair never repeats.
pub fn segment_iv(name: &str, version: &str, index: u64) -> [u8; IV_LEN] {
    let d = hash(&segment_associated_data(name, version, index));
    let mut iv = [0u8; IV_LEN];
    iv.copy_from_slice(&d.as_bytes()[..IV_LEN]);
    iv
}

pub fn segment_content(object: &ContentObject) -> Result<Vec<Segment>> {
    object.validate()?;
    Ok(object
        .payload
        .chunks(object.segment_size)
        .enumerate()
        .map(|(i, chunk)| Segment {
            content_name: object.name.clone(),
            version: object.version.clone(),
            index: i as u64 + 1,
            body: chunk.to_vec(),
            encrypted: false,
            envelope: None,
        })
        .collect())
}

pub fn encrypt_segment(segment: &Segment, key: &Digest) -> Segment {
    let ad = segment_associated_data(&segment.content_name, &segment.version, segment.index);
    let iv = segment_iv(&segment.content_name, &segment.version, segment.index);
    Segment {
        content_name: segment.content_name.clone(),
        version: segment.version.clone(),
        index: segment.index,
        body: Vec::new(),
        encrypted: true,
        envelope: Some(aead_encrypt(key, &segment.body, &ad, iv)),
    }
}

pub fn encrypt_object(object: &ContentObject, chain: &KeyChain) -> Result<Vec<Segment>> {
    let plain = segment_content(object)?;
    if chain.len() < plain.len() {
        return Err(ContentError::ChainTooShort {
            have: chain.len(),
            need: plain.len(),
        });
    }
    Ok(plain
        .iter()
        .zip(&chain.segment_keys)
        .map(|(seg, key)| encrypt_segment(seg, key))
        .collect())
}

/// Decrypt with an explicit segment key, checking the envelope is bound to
/// this segment's identity.
pub fn decrypt_segment_with_key(segment: &Segment, key: &Digest) -> Result<Vec<u8>> {
    if segment.index == 0 {
        return Err(ContentError::IndexOutOfRange(0));
    }
    let env = match (&segment.envelope, segment.encrypted) {
        (Some(env), true) => env,
        _ => return Err(ContentError::NotEncrypted(segment.index)),
    };
    let expected_ad = segment_associated_data(&segment.content_name, &segment.version, segment.index);
    if env.associated_data != expected_ad {
        return Err(ContentError::AuthenticationFailed(segment.index));
    }
    aead_decrypt(key, env).map_err(|_| ContentError::AuthenticationFailed(segment.index))
}

/// Rebuild `K_k` from `(z0, K_p, k)` and decrypt. A failure means the segment
/// was altered or the key message names a different publisher key.
pub fn decrypt_segment(segment: &Segment, key_msg: &KeyMsg) -> Result<Vec<u8>> {
    if segment.index == 0 {
        return Err(ContentError::IndexOutOfRange(0));
    }
    let key = key_msg.segment_key(segment.index)?;
    decrypt_segment_with_key(segment, &key)
}

/// Decrypt every segment and concatenate the bodies in index order.
pub fn reassemble(segments: &[Segment], key_msg: &KeyMsg) -> Result<Vec<u8>> {
    let mut sorted: Vec<&Segment> = segments.iter().collect();
    sorted.sort_by_key(|s| s.index);
    let Some(last) = sorted.last() else {
        return Ok(Vec::new());
    };
    let chain = key_msg.key_chain(last.index as usize)?;
    let mut out = Vec::new();
    for seg in sorted {
        let key = chain
            .segment_key(seg.index)
            .ok_or(ContentError::IndexOutOfRange(seg.index))?;
        out.extend(decrypt_segment_with_key(seg, key)?);
    }
    Ok(out)
}

/// Advertised description of an encrypted content object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentManifest {
    pub name: String,
    pub version: String,
    pub publish_time: u64,
    pub segment_size: usize,
    pub segment_count: usize,
    /// Hash of `ciphertext || tag` for each segment, in index order.
    pub segment_digests: Vec<Digest>,
}

impl ContentManifest {
    pub fn from_segments(object: &ContentObject, segments: &[Segment]) -> Self {
        let segment_digests = segments
            .iter()
            .map(|s| match &s.envelope {
                Some(env) => hash_concat(&[&env.ciphertext, &env.tag]),
                None => hash(&s.body),
            })
            .collect();
        Self {
            name: object.name.clone(),
            version: object.version.clone(),
            publish_time: object.publish_time,
            segment_size: object.segment_size,
            segment_count: segments.len(),
            segment_digests,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameKind {
    I,
    P,
    B,
}

/// A predicted or bidirectional frame. These are never encrypted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependentFrame {
    pub kind: DependentKind,
    #[serde(with = "crypto::hex_bytes")]
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DependentKind {
    P,
    B,
}

impl From<DependentKind> for FrameKind {
    fn from(k: DependentKind) -> Self {
        match k {
            DependentKind::P => FrameKind::P,
            DependentKind::B => FrameKind::B,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntraFrame {
    Clear(#[serde(with = "crypto::hex_bytes")] Vec<u8>),
    Encrypted(AeadEnvelope),
}

/// One group of pictures: exactly one I-frame followed by P/B frames.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gop {
    pub i_frame: IntraFrame,
    pub dependents: Vec<DependentFrame>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GopStream {
    pub name: String,
    pub version: String,
    pub gops: Vec<Gop>,
}

impl GopStream {
    pub fn encrypted_i_frames(&self) -> usize {
        self.gops
            .iter()
            .filter(|g| matches!(g.i_frame, IntraFrame::Encrypted(_)))
            .count()
    }

    /// All P/B frame payloads in stream order.
    pub fn dependent_bytes(&self) -> Vec<&[u8]> {
        self.gops
            .iter()
            .flat_map(|g| g.dependents.iter().map(|f| f.data.as_slice()))
            .collect()
    }
}

/// Encrypt the I-frame of GOP `g` (1-based) under `K_g`; P/B frames pass through untouched.
pub fn encrypt_gop_stream(stream: &GopStream, chain: &KeyChain) -> Result<GopStream> {
    if chain.len() < stream.gops.len() {
        return Err(ContentError::ChainTooShort {
            have: chain.len(),
            need: stream.gops.len(),
        });
    }
    let gops = stream
        .gops
        .iter()
        .zip(&chain.segment_keys)
        .enumerate()
        .map(|(i, (gop, key))| {
            let index = i as u64 + 1;
            let i_frame = match &gop.i_frame {
                IntraFrame::Clear(data) => {
                    let ad = segment_associated_data(&stream.name, &stream.version, index);
                    let iv = segment_iv(&stream.name, &stream.version, index);
                    IntraFrame::Encrypted(aead_encrypt(key, data, &ad, iv))
                }
                already @ IntraFrame::Encrypted(_) => already.clone(),
            };
            Gop {
                i_frame,
                dependents: gop.dependents.clone(),
            }
        })
        .collect();
    Ok(GopStream {
        name: stream.name.clone(),
        version: stream.version.clone(),
        gops,
    })
}

/// Inverse of [`encrypt_gop_stream`]. A stream holding only a prefix of the
/// encrypted GOPs decrypts that prefix; the first failure is reported by its
/// 1-based GOP index.
pub fn decrypt_gop_stream(stream: &GopStream, key_msg: &KeyMsg) -> Result<GopStream> {
    if stream.gops.is_empty() {
        return Ok(stream.clone());
    }
    let chain = key_msg.key_chain(stream.gops.len())?;
    let mut gops = Vec::with_capacity(stream.gops.len());
    for (i, (gop, key)) in stream.gops.iter().zip(&chain.segment_keys).enumerate() {
        let index = i as u64 + 1;
        let i_frame = match &gop.i_frame {
            IntraFrame::Encrypted(env) => {
                let ad = segment_associated_data(&stream.name, &stream.version, index);
                if env.associated_data != ad {
                    return Err(ContentError::GopDecryptFailed(index));
                }
                IntraFrame::Clear(aead_decrypt(key, env).map_err(|_| ContentError::GopDecryptFailed(index))?)
            }
            clear @ IntraFrame::Clear(_) => clear.clone(),
        };
        gops.push(Gop {
            i_frame,
            dependents: gop.dependents.clone(),
        });
    }
    Ok(GopStream {
        name: stream.name.clone(),
        version: stream.version.clone(),
        gops,
    })
}
