//! Secure distribution of protected content over cache-enabled
//! information-centric networks.
//!
//! A publisher encrypts each segment of a content object under a key taken
//! from a one-way hash chain seeded by a single commitment. Subscribers that
//! complete the subscription protocol receive the commitment and rebuild the
//! same chain, so one encrypted copy in a router cache serves every
//! authorized consumer.
//!
//! - [`crypto`]: hashing, the key chain, key derivations, AEAD and sealing.
//! - [`content`]: segmentation, per-segment encryption, GOP streams.
//! - [`protocol`]: consumer, publisher and manager state machines for SubP,
//!   APSub and APSub3, plus the wire codec and transcript log.

pub mod content;
pub mod crypto;
pub mod protocol;
