use std::collections::BTreeMap;
use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

/// A 128-bit protocol nonce. Challenge arithmetic wraps mod 2^128.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Nonce(pub u128);

impl Nonce {
    pub const LEN: usize = 16;

    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut raw = [0u8; 16];
        rng.fill_bytes(&mut raw);
        Nonce(u128::from_be_bytes(raw))
    }

    /// The expected challenge response `n + 1`.
    pub fn succ(self) -> Self {
        Nonce(self.0.wrapping_add(1))
    }

    pub fn to_bytes(self) -> [u8; 16] {
        self.0.to_be_bytes()
    }

    pub fn from_bytes(b: [u8; 16]) -> Self {
        Nonce(u128::from_be_bytes(b))
    }

    /// True iff `response` is exactly `self + 1`.
    pub fn answered_by(self, response: Nonce) -> bool {
        response == self.succ()
    }
}

impl fmt::Debug for Nonce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonce({:032x})", self.0)
    }
}

impl Serialize for Nonce {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.to_bytes()))
    }
}

impl<'de> Deserialize<'de> for Nonce {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let raw = hex::decode(s).map_err(serde::de::Error::custom)?;
        let arr: [u8; 16] = raw
            .try_into()
            .map_err(|_| serde::de::Error::custom("nonce must be 16 bytes"))?;
        Ok(Nonce::from_bytes(arr))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayDetected;

/// Remembers `(origin, nonce)` pairs so each is accepted at most once within
/// the retention window.
#[derive(Debug, Clone, Serialize)]
pub struct NonceRegistry {
    #[serde(serialize_with = "super::map_entries")]
    seen: BTreeMap<(String, Nonce), u64>,
    retention: u64,
    enabled: bool,
}

impl NonceRegistry {
    pub fn new(retention: u64) -> Self {
        Self {
            seen: BTreeMap::new(),
            retention,
            enabled: true,
        }
    }

    /// A registry that accepts everything. Only for mutation tests that need
    /// to prove replay detection is what stops a replay.
    pub fn disabled() -> Self {
        Self {
            seen: BTreeMap::new(),
            retention: 0,
            enabled: false,
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn set_enabled(&mut self, enabled: bool) {
        self.enabled = enabled;
    }

    pub fn check_and_insert(&mut self, origin: &str, nonce: Nonce, now: u64) -> Result<(), ReplayDetected> {
        if !self.enabled {
            return Ok(());
        }
        self.prune(now);
        let key = (origin.to_owned(), nonce);
        if self.seen.contains_key(&key) {
            return Err(ReplayDetected);
        }
        self.seen.insert(key, now);
        Ok(())
    }

    pub fn prune(&mut self, now: u64) {
        let retention = self.retention;
        self.seen.retain(|_, seen_at| now.saturating_sub(*seen_at) < retention);
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}
