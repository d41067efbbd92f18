//! Complete protocol runs driven directly between role objects.
//!
//! Every message is encoded, recorded in the transcript, and decoded again
//! before the receiving role sees it, so these runs exercise the wire codec
//! exactly as a network transport would.

use serde::Serialize;

use super::codec::{decode_message, encode_message};
use super::messages::*;
use super::{Consumer, Manager, ProtocolError, Publisher, Result, Transcript};

/// A message as it crossed the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CapturedMessage {
    pub from: String,
    pub to: String,
    pub tag: String,
    #[serde(with = "crate::crypto::hex_bytes")]
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub run_id: String,
    pub protocol: ProtocolKind,
    pub captured: Vec<CapturedMessage>,
}

struct Wire<'t> {
    transcript: &'t mut Transcript,
    now: u64,
    record: RunRecord,
}

impl<'t> Wire<'t> {
    fn new(transcript: &'t mut Transcript, now: u64, protocol: ProtocolKind, consumer: &str, content: &str) -> Self {
        let run_id = format!("{}:{}:{}:{}", protocol.as_str(), consumer, content, transcript.len());
        Self {
            transcript,
            now,
            record: RunRecord {
                run_id,
                protocol,
                captured: Vec::new(),
            },
        }
    }

    fn send(&mut self, from: &str, to: &str, msg: ProtocolMessage) -> Result<ProtocolMessage> {
        let bytes = encode_message(&msg);
        self.transcript
            .record(self.now, from, to, &self.record.run_id, &msg, bytes.len());
        self.record.captured.push(CapturedMessage {
            from: from.to_owned(),
            to: to.to_owned(),
            tag: msg.tag(),
            bytes: bytes.clone(),
        });
        self.now += 1;
        Ok(decode_message(&bytes)?)
    }
}

macro_rules! expect_variant {
    ($msg:expr, $variant:ident) => {
        match $msg {
            ProtocolMessage::$variant(m) => m,
            _ => return Err(ProtocolError::Malformed(concat!("expected ", stringify!($variant)))),
        }
    };
}

/// SubP between `consumer`, `publisher` and `manager` for `content_name`.
pub fn subp_run(
    consumer: &mut Consumer,
    publisher: &mut Publisher,
    manager: &mut Manager,
    content_name: &str,
    now: u64,
    transcript: &mut Transcript,
) -> Result<RunRecord> {
    let (c, p, m) = (
        consumer.id().to_owned(),
        publisher.id().to_owned(),
        manager.id().to_owned(),
    );
    let mut wire = Wire::new(transcript, now, ProtocolKind::Subp, &c, content_name);

    let m1 = consumer.subp_init(&p, content_name)?;
    let m1 = expect_variant!(wire.send(&c, &p, ProtocolMessage::SubpM1(m1))?, SubpM1);
    let m2 = publisher.subp_forward(&m1);
    let m2 = expect_variant!(wire.send(&p, &m, ProtocolMessage::SubpM2(m2))?, SubpM2);
    let m3 = manager.subp_process(&m2, wire.now)?;
    let m3 = expect_variant!(wire.send(&m, &p, ProtocolMessage::SubpM3(m3))?, SubpM3);
    let m4 = publisher.subp_relay(&m3, wire.now)?;
    let m4 = expect_variant!(wire.send(&p, &c, ProtocolMessage::SubpM4(m4))?, SubpM4);
    let m5 = consumer.subp_finish(&m4)?;
    let m5 = expect_variant!(wire.send(&c, &p, ProtocolMessage::SubpM5(m5))?, SubpM5);
    let m6 = publisher.subp_confirm(&m5, wire.now)?;
    let m6 = expect_variant!(wire.send(&p, &m, ProtocolMessage::SubpM6(m6))?, SubpM6);
    manager.subp_complete(&m6)?;
    Ok(wire.record)
}

/// APSub: `consumer` presents the ticket `publisher` issued to access another
/// of its content objects.
pub fn apsub_run(
    consumer: &mut Consumer,
    publisher: &mut Publisher,
    content_name: &str,
    now: u64,
    transcript: &mut Transcript,
) -> Result<RunRecord> {
    let (c, p) = (consumer.id().to_owned(), publisher.id().to_owned());
    let mut wire = Wire::new(transcript, now, ProtocolKind::Apsub, &c, content_name);

    let m1 = consumer.apsub_init(&p, content_name)?;
    let m1 = expect_variant!(wire.send(&c, &p, ProtocolMessage::ApsubM1(m1))?, ApsubM1);
    let m2 = publisher.apsub_respond(&m1, wire.now)?;
    let m2 = expect_variant!(wire.send(&p, &c, ProtocolMessage::ApsubM2(m2))?, ApsubM2);
    let m3 = consumer.apsub_finish(&m2)?;
    let m3 = expect_variant!(wire.send(&c, &p, ProtocolMessage::ApsubM3(m3))?, ApsubM3);
    publisher.apsub_confirm(&m3, wire.now)?;
    Ok(wire.record)
}

/// APSub3: `consumer`, subscribed with `home_publisher`, accesses content of
/// `third_party` with the manager vouching for its ticket.
pub fn apsub3_run(
    consumer: &mut Consumer,
    third_party: &mut Publisher,
    manager: &mut Manager,
    home_publisher: &str,
    content_name: &str,
    now: u64,
    transcript: &mut Transcript,
) -> Result<RunRecord> {
    let (c, p, m) = (
        consumer.id().to_owned(),
        third_party.id().to_owned(),
        manager.id().to_owned(),
    );
    let mut wire = Wire::new(transcript, now, ProtocolKind::Apsub3, &c, content_name);

    let m1 = consumer.apsub3_init(home_publisher, &p, content_name)?;
    let m1 = expect_variant!(wire.send(&c, &p, ProtocolMessage::Apsub3M1(m1))?, Apsub3M1);
    let m2 = third_party.apsub3_forward(&m1)?;
    let m2 = expect_variant!(wire.send(&p, &m, ProtocolMessage::Apsub3M2(m2))?, Apsub3M2);
    let m3 = manager.apsub3_process(&m2, wire.now)?;
    let m3 = expect_variant!(wire.send(&m, &p, ProtocolMessage::Apsub3M3(m3))?, Apsub3M3);
    let m4 = third_party.apsub3_relay(&m3, wire.now)?;
    let m4 = expect_variant!(wire.send(&p, &c, ProtocolMessage::Apsub3M4(m4))?, Apsub3M4);
    let m5 = consumer.apsub3_finish(&m4)?;
    let m5 = expect_variant!(wire.send(&c, &p, ProtocolMessage::Apsub3M5(m5))?, Apsub3M5);
    let m6 = third_party.apsub3_confirm(&m5, wire.now)?;
    let m6 = expect_variant!(wire.send(&p, &m, ProtocolMessage::Apsub3M6(m6))?, Apsub3M6);
    manager.apsub3_complete(&m6)?;
    Ok(wire.record)
}
