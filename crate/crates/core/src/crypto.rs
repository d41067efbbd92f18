//! Cryptographic primitives and the content key schedule.
//!
//! Everything here is a pure function of its inputs. The hash is SHA-256
//! throughout, symmetric encryption is AES-256-GCM, and public-key sealing is
//! a hybrid of X25519 key agreement with an AES-256-GCM payload.
//!
//! The commitment key chain works as follows. A publisher derives a single
//! commitment `z0 = H(T_p || O_j)` for a content object, then hashes it
//! forward to obtain generators `z1 = H(z0)`, `z(k+1) = H(zk)`. Segment `k`
//! (1-based) is encrypted under `Kk = H(zk || K_p)` where `K_p` is the
//! publisher's public key. Anyone holding `(z0, K_p)` recomputes the whole
//! chain, and a wrong `K_p` yields keys that fail AEAD authentication.

use std::fmt;

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Nonce as GcmNonce};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use thiserror::Error;
use x25519_dalek::{PublicKey as XPublicKey, StaticSecret};

pub const DIGEST_LEN: usize = 32;
pub const IV_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
pub const PUBLIC_KEY_LEN: usize = 32;

const SEAL_DOMAIN: &[u8] = b"sdpc-seal-v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("content id must not be empty")]
    EmptyContentId,
    #[error("key chain length must be at least 1")]
    EmptyChain,
    #[error("derivation operand must not be empty")]
    EmptyOperand,
    #[error("authentication failed")]
    AuthenticationFailed,
    #[error("sealed box is addressed to a different key")]
    WrongKey,
    #[error("malformed input: {0}")]
    Malformed(&'static str),
    #[error("public key must be {PUBLIC_KEY_LEN} bytes, got {0}")]
    InvalidPublicKey(usize),
}

pub type Result<T, E = CryptoError> = std::result::Result<T, E>;

/// A 256-bit hash output. Also used as the representation of every
/// symmetric key in the system.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest([u8; DIGEST_LEN]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; DIGEST_LEN]);

    pub const fn from_bytes(bytes: [u8; DIGEST_LEN]) -> Self {
        Self(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let arr: [u8; DIGEST_LEN] = bytes
            .try_into()
            .map_err(|_| CryptoError::Malformed("digest must be 32 bytes"))?;
        Ok(Self(arr))
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let raw = hex::decode(s).map_err(|_| CryptoError::Malformed("invalid hex"))?;
        Self::from_slice(&raw)
    }
}

impl AsRef<[u8]> for Digest {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({}..)", &self.to_hex()[..16])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter rendering byte vectors as lowercase hex strings.
pub mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer, T: AsRef<[u8]>>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v.as_ref()))
    }

    pub fn deserialize<'de, D, T>(d: D) -> Result<T, D::Error>
    where
        D: Deserializer<'de>,
        T: TryFrom<Vec<u8>>,
    {
        let s = String::deserialize(d)?;
        let raw = hex::decode(s).map_err(serde::de::Error::custom)?;
        T::try_from(raw).map_err(|_| serde::de::Error::custom("unexpected byte length"))
    }
}

pub fn hash(data: &[u8]) -> Digest {
    Digest(Sha256::digest(data).into())
}

/// Hash of the plain concatenation of `parts`.
pub fn hash_concat(parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    Digest(h.finalize().into())
}

/// Canonical 8-byte big-endian encoding of a timestamp in seconds.
pub fn encode_time(seconds: u64) -> [u8; 8] {
    seconds.to_be_bytes()
}

/// Canonical encoding of a UTF-8 identifier: 4-byte big-endian length, then bytes.
pub fn encode_id(id: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + id.len());
    out.extend_from_slice(&(id.len() as u32).to_be_bytes());
    out.extend_from_slice(id.as_bytes());
    out
}

/// Commitment `z0` for the content identified by `content_id` published at `publish_time`.
pub fn derive_commitment(publish_time: u64, content_id: &str) -> Result<Digest> {
    if content_id.is_empty() {
        return Err(CryptoError::EmptyContentId);
    }
    Ok(hash_concat(&[&encode_time(publish_time), &encode_id(content_id)]))
}

/// An X25519 public key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublicKey([u8; PUBLIC_KEY_LEN]);

impl PublicKey {
    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let arr: [u8; PUBLIC_KEY_LEN] = bytes
            .try_into()
            .map_err(|_| CryptoError::InvalidPublicKey(bytes.len()))?;
        Ok(Self(arr))
    }

    pub const fn from_bytes(bytes: [u8; PUBLIC_KEY_LEN]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; PUBLIC_KEY_LEN] {
        &self.0
    }

    pub fn fingerprint(&self) -> Digest {
        hash(&self.0)
    }
}

impl AsRef<[u8]> for PublicKey {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({}..)", hex::encode(&self.0[..8]))
    }
}

impl Serialize for PublicKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.0))
    }
}

impl<'de> Deserialize<'de> for PublicKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let raw = hex::decode(s).map_err(serde::de::Error::custom)?;
        PublicKey::from_slice(&raw).map_err(serde::de::Error::custom)
    }
}

/// An X25519 key pair. The secret never leaves this type except through
/// [`KeyPair::secret_bytes`], which exists so a trusted manager can be
/// provisioned with a publisher's unseal capability.
#[derive(Clone)]
pub struct KeyPair {
    secret: StaticSecret,
    public: PublicKey,
}

impl KeyPair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut raw = [0u8; 32];
        rng.fill_bytes(&mut raw);
        Self::from_secret_bytes(raw)
    }

    pub fn from_secret_bytes(raw: [u8; 32]) -> Self {
        let secret = StaticSecret::from(raw);
        let public = PublicKey(XPublicKey::from(&secret).to_bytes());
        Self { secret, public }
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.secret.to_bytes()
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

/// Generators `z1..zL` and segment keys `K1..KL` derived from one commitment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyChain {
    pub commitment: Digest,
    pub generators: Vec<Digest>,
    pub segment_keys: Vec<Digest>,
    pub publisher_key_fingerprint: Digest,
}

impl KeyChain {
    pub fn len(&self) -> usize {
        self.segment_keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segment_keys.is_empty()
    }

    /// Key for segment `index` (1-based).
    pub fn segment_key(&self, index: u64) -> Option<&Digest> {
        index
            .checked_sub(1)
            .and_then(|i| self.segment_keys.get(usize::try_from(i).ok()?))
    }

    pub fn generator(&self, index: u64) -> Option<&Digest> {
        index
            .checked_sub(1)
            .and_then(|i| self.generators.get(usize::try_from(i).ok()?))
    }
}

pub fn build_key_chain(commitment: Digest, length: usize, publisher_public_key: &[u8]) -> Result<KeyChain> {
    if length == 0 {
        return Err(CryptoError::EmptyChain);
    }
    let mut generators = Vec::with_capacity(length);
    let mut segment_keys = Vec::with_capacity(length);
    let mut current = commitment;
    for _ in 0..length {
        current = hash(current.as_bytes());
        generators.push(current);
        segment_keys.push(hash_concat(&[current.as_bytes(), publisher_public_key]));
    }
    Ok(KeyChain {
        commitment,
        generators,
        segment_keys,
        publisher_key_fingerprint: hash(publisher_public_key),
    })
}

/// Key for a single segment without materializing the chain.
pub fn segment_key(commitment: &Digest, index: u64, publisher_public_key: &[u8]) -> Result<Digest> {
    if index == 0 {
        return Err(CryptoError::EmptyChain);
    }
    let mut current = *commitment;
    for _ in 0..index {
        current = hash(current.as_bytes());
    }
    Ok(hash_concat(&[current.as_bytes(), publisher_public_key]))
}

/// The key-generation message `(z0, K_p)`: everything a subscriber needs to
/// rebuild a content object's key chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyMsg {
    pub commitment: Digest,
    pub publisher_public_key: PublicKey,
}

impl KeyMsg {
    pub fn key_chain(&self, length: usize) -> Result<KeyChain> {
        build_key_chain(self.commitment, length, self.publisher_public_key.as_bytes())
    }

    pub fn segment_key(&self, index: u64) -> Result<Digest> {
        segment_key(&self.commitment, index, self.publisher_public_key.as_bytes())
    }
}

/// XOR of two byte strings after left-padding the shorter with zero bytes.
pub fn xor_left_padded(a: &[u8], b: &[u8]) -> Vec<u8> {
    let n = a.len().max(b.len());
    let mut out = vec![0u8; n];
    for (dst, src) in out[n - a.len()..].iter_mut().zip(a) {
        *dst = *src;
    }
    for (dst, src) in out[n - b.len()..].iter_mut().zip(b) {
        *dst ^= *src;
    }
    out
}

/// `K_TS = H(K_p xor n_s)`, the key protecting the consumer's subscription request.
pub fn derive_subscription_key(publisher_public_key: &[u8], secret_number: &[u8]) -> Result<Digest> {
    if publisher_public_key.is_empty() || secret_number.is_empty() {
        return Err(CryptoError::EmptyOperand);
    }
    Ok(hash(&xor_left_padded(publisher_public_key, secret_number)))
}

/// `K_s = H(T_m xor n_s)`.
pub fn derive_session_key(issue_time: u64, secret_number: &[u8]) -> Result<Digest> {
    if secret_number.is_empty() {
        return Err(CryptoError::EmptyOperand);
    }
    Ok(hash(&xor_left_padded(&encode_time(issue_time), secret_number)))
}

/// `K_TS = H(K_s xor n_0)`, the temporary key between a consumer and a third-party publisher.
pub fn derive_temp_session_key(session_key: &Digest, nonce: &[u8; 16]) -> Digest {
    hash(&xor_left_padded(session_key.as_bytes(), nonce))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AeadEnvelope {
    #[serde(with = "hex_bytes")]
    pub nonce_iv: [u8; IV_LEN],
    #[serde(with = "hex_bytes")]
    pub ciphertext: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub tag: [u8; TAG_LEN],
    #[serde(with = "hex_bytes")]
    pub associated_data: Vec<u8>,
}

impl AeadEnvelope {
    /// Total bytes carried on the wire.
    pub fn wire_len(&self) -> usize {
        IV_LEN + self.ciphertext.len() + TAG_LEN + self.associated_data.len()
    }
}

pub fn aead_encrypt(key: &Digest, plaintext: &[u8], associated_data: &[u8], iv: [u8; IV_LEN]) -> AeadEnvelope {
    let cipher = Aes256Gcm::new(key.as_bytes().into());
    let mut sealed = cipher
        .encrypt(
            GcmNonce::from_slice(&iv),
            Payload {
                msg: plaintext,
                aad: associated_data,
            },
        )
        .expect("AES-GCM input within size limits");
    let tag_start = sealed.len() - TAG_LEN;
    let mut tag = [0u8; TAG_LEN];
    tag.copy_from_slice(&sealed[tag_start..]);
    sealed.truncate(tag_start);
    AeadEnvelope {
        nonce_iv: iv,
        ciphertext: sealed,
        tag,
        associated_data: associated_data.to_vec(),
    }
}

pub fn aead_decrypt(key: &Digest, envelope: &AeadEnvelope) -> Result<Vec<u8>> {
    let cipher = Aes256Gcm::new(key.as_bytes().into());
    let mut joined = Vec::with_capacity(envelope.ciphertext.len() + TAG_LEN);
    joined.extend_from_slice(&envelope.ciphertext);
    joined.extend_from_slice(&envelope.tag);
    cipher
        .decrypt(
            GcmNonce::from_slice(&envelope.nonce_iv),
            Payload {
                msg: &joined,
                aad: &envelope.associated_data,
            },
        )
        .map_err(|_| CryptoError::AuthenticationFailed)
}

/// Encrypt with a fresh random IV drawn from `rng`.
pub fn aead_encrypt_random<R: RngCore + CryptoRng>(
    key: &Digest,
    plaintext: &[u8],
    associated_data: &[u8],
    rng: &mut R,
) -> AeadEnvelope {
    let mut iv = [0u8; IV_LEN];
    rng.fill_bytes(&mut iv);
    aead_encrypt(key, plaintext, associated_data, iv)
}

/// Payload encrypted to a recipient's public key.
///
/// `ciphertext` is `ephemeral_public || iv || aead_ciphertext || tag`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SealedBox {
    #[serde(with = "hex_bytes")]
    pub ciphertext: Vec<u8>,
    pub recipient_fingerprint: Digest,
}

const SEAL_OVERHEAD: usize = PUBLIC_KEY_LEN + IV_LEN + TAG_LEN;

fn seal_key(shared: &[u8; 32], ephemeral: &[u8; 32], recipient: &[u8; 32]) -> Digest {
    hash_concat(&[SEAL_DOMAIN, shared, ephemeral, recipient])
}

pub fn seal<R: RngCore + CryptoRng>(recipient: &PublicKey, plaintext: &[u8], rng: &mut R) -> SealedBox {
    let ephemeral = KeyPair::generate(rng);
    let shared = ephemeral.secret.diffie_hellman(&XPublicKey::from(recipient.0));
    let key = seal_key(shared.as_bytes(), ephemeral.public.as_bytes(), recipient.as_bytes());
    let fingerprint = recipient.fingerprint();
    let env = aead_encrypt_random(&key, plaintext, fingerprint.as_bytes(), rng);

    let mut ciphertext = Vec::with_capacity(SEAL_OVERHEAD + plaintext.len());
    ciphertext.extend_from_slice(ephemeral.public.as_bytes());
    ciphertext.extend_from_slice(&env.nonce_iv);
    ciphertext.extend_from_slice(&env.ciphertext);
    ciphertext.extend_from_slice(&env.tag);
    SealedBox {
        ciphertext,
        recipient_fingerprint: fingerprint,
    }
}

pub fn unseal(keypair: &KeyPair, sealed: &SealedBox) -> Result<Vec<u8>> {
    if sealed.recipient_fingerprint != keypair.public.fingerprint() {
        return Err(CryptoError::WrongKey);
    }
    if sealed.ciphertext.len() < SEAL_OVERHEAD {
        return Err(CryptoError::Malformed("sealed box too short"));
    }
    let (eph, rest) = sealed.ciphertext.split_at(PUBLIC_KEY_LEN);
    let (iv, rest) = rest.split_at(IV_LEN);
    let (body, tag) = rest.split_at(rest.len() - TAG_LEN);
    let eph: [u8; 32] = eph.try_into().expect("split length");

    let shared = keypair.secret.diffie_hellman(&XPublicKey::from(eph));
    let key = seal_key(shared.as_bytes(), &eph, keypair.public.as_bytes());
    let env = AeadEnvelope {
        nonce_iv: iv.try_into().expect("split length"),
        ciphertext: body.to_vec(),
        tag: tag.try_into().expect("split length"),
        associated_data: sealed.recipient_fingerprint.as_bytes().to_vec(),
    };
    aead_decrypt(&key, &env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(7)
    }

    #[test]
    fn hash_is_deterministic() {
        assert_eq!(hash(b"segment"), hash(b"segment"));
        assert_ne!(hash(b"segment"), hash(b"segmenT"));
    }

    #[test]
    fn commitment_rejects_empty_id_and_separates_versions() {
        assert_eq!(derive_commitment(1, ""), Err(CryptoError::EmptyContentId));
        let a = derive_commitment(1_700_000_000, "movie/v1").unwrap();
        let b = derive_commitment(1_700_000_000, "movie/v2").unwrap();
        assert_ne!(a, b);
        assert_eq!(a, derive_commitment(1_700_000_000, "movie/v1").unwrap());
    }

    #[test]
    fn chain_of_length_one_unrolls_definition() {
        let z0 = hash(b"z0");
        let pk = [9u8; 32];
        let chain = build_key_chain(z0, 1, &pk).unwrap();
        let g1 = hash(z0.as_bytes());
        assert_eq!(chain.generators, vec![g1]);
        assert_eq!(chain.segment_keys, vec![hash_concat(&[g1.as_bytes(), &pk])]);
        assert_eq!(chain.publisher_key_fingerprint, hash(&pk));
    }

    #[test]
    fn chain_generators_compose() {
        let z0 = hash(b"z0");
        let chain = build_key_chain(z0, 5, b"pk").unwrap();
        let g3 = hash(hash(hash(z0.as_bytes()).as_bytes()).as_bytes());
        assert_eq!(chain.generator(3), Some(&g3));
        assert_eq!(chain.generator(0), None);
        assert_eq!(chain.segment_key(6), None);
        for k in 1..=5 {
            assert_eq!(
                chain.segment_key(k).copied().unwrap(),
                segment_key(&z0, k, b"pk").unwrap()
            );
        }
    }

    #[test]
    fn empty_chain_rejected() {
        assert_eq!(build_key_chain(Digest::ZERO, 0, b"pk"), Err(CryptoError::EmptyChain));
    }

    #[test]
    fn xor_pads_on_the_left() {
        assert_eq!(xor_left_padded(&[0xff, 0x01], &[0x01]), vec![0xff, 0x00]);
        assert_eq!(xor_left_padded(&[0x01], &[0xff, 0x01]), vec![0xff, 0x00]);
        assert_eq!(xor_left_padded(&[], &[]), Vec::<u8>::new());
    }

    #[test]
    fn subscription_key_identities() {
        let pk = [0x5au8; 32];
        assert_eq!(derive_subscription_key(&pk, &[0u8; 32]).unwrap(), hash(&pk));
        let ns = [0x11u8; 16];
        assert_eq!(
            derive_subscription_key(&pk, &ns).unwrap(),
            derive_subscription_key(&ns, &pk).unwrap()
        );
        assert_eq!(derive_subscription_key(&[], &ns), Err(CryptoError::EmptyOperand));
        assert_eq!(derive_subscription_key(&pk, &[]), Err(CryptoError::EmptyOperand));
    }

    #[test]
    fn session_key_self_xor_is_zero() {
        let t = 1_700_000_123u64;
        assert_eq!(derive_session_key(t, &t.to_be_bytes()).unwrap(), hash(&[0u8; 8]));
        assert_eq!(
            derive_session_key(t, b"0123456789abcdef"),
            derive_session_key(t, b"0123456789abcdef")
        );
        assert_eq!(derive_session_key(t, &[]), Err(CryptoError::EmptyOperand));
    }

    #[test]
    fn temp_session_key_identities() {
        let ks = hash(b"ks");
        assert_eq!(derive_temp_session_key(&ks, &[0u8; 16]), hash(ks.as_bytes()));
        assert_ne!(
            derive_temp_session_key(&ks, &[1u8; 16]),
            derive_temp_session_key(&ks, &[2u8; 16])
        );
    }

    #[test]
    fn aead_roundtrip_and_tamper() {
        let key = hash(b"k");
        let env = aead_encrypt(&key, b"payload", b"ad", [3u8; 12]);
        assert_eq!(aead_decrypt(&key, &env).unwrap(), b"payload");

        let mut bad = env.clone();
        bad.ciphertext[0] ^= 1;
        assert_eq!(aead_decrypt(&key, &bad), Err(CryptoError::AuthenticationFailed));
        let mut bad = env.clone();
        bad.tag[15] ^= 0x80;
        assert_eq!(aead_decrypt(&key, &bad), Err(CryptoError::AuthenticationFailed));
        let mut bad = env.clone();
        bad.associated_data.push(0);
        assert_eq!(aead_decrypt(&key, &bad), Err(CryptoError::AuthenticationFailed));
        assert_eq!(
            aead_decrypt(&hash(b"other"), &env),
            Err(CryptoError::AuthenticationFailed)
        );
    }

    #[test]
    fn seal_roundtrip_and_failures() {
        let mut rng = rng();
        let alice = KeyPair::generate(&mut rng);
        let mallory = KeyPair::generate(&mut rng);
        let sealed = seal(alice.public(), b"ticket body", &mut rng);
        assert_eq!(unseal(&alice, &sealed).unwrap(), b"ticket body");
        assert_eq!(unseal(&mallory, &sealed), Err(CryptoError::WrongKey));

        // Re-addressing the box to the wrong key still fails: the AEAD binds the fingerprint.
        let mut readdressed = sealed.clone();
        readdressed.recipient_fingerprint = mallory.public().fingerprint();
        assert_eq!(unseal(&mallory, &readdressed), Err(CryptoError::AuthenticationFailed));

        let mut tampered = sealed.clone();
        let last = tampered.ciphertext.len() - 1;
        tampered.ciphertext[last] ^= 1;
        assert_eq!(unseal(&alice, &tampered), Err(CryptoError::AuthenticationFailed));

        let mut short = sealed;
        short.ciphertext.truncate(10);
        assert!(matches!(unseal(&alice, &short), Err(CryptoError::Malformed(_))));
    }

    #[test]
    fn keypair_from_secret_is_stable() {
        let kp = KeyPair::generate(&mut rng());
        let again = KeyPair::from_secret_bytes(kp.secret_bytes());
        assert_eq!(kp.public(), again.public());
    }

    #[test]
    fn digest_serde_is_hex() {
        let d = hash(b"abc");
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, format!("\"{}\"", d.to_hex()));
        assert_eq!(serde_json::from_str::<Digest>(&json).unwrap(), d);
    }
}
