use sdpc_core::content::{decrypt_segment, ContentObject};
use sdpc_core::crypto::{
    aead_decrypt, aead_encrypt, derive_session_key, derive_subscription_key, unseal, CryptoError, KeyPair,
};
use sdpc_core::protocol::flows::{apsub3_run, apsub_run, subp_run};
use sdpc_core::protocol::*;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const SECRET_A: &[u8] = b"registration-secret-of-N_A";
const PROFILE_A: &str = "tier=gold;region=kr";

struct World {
    consumer: Consumer,
    p: Publisher,
    q: Publisher,
    m: Manager,
    cfg: ProtocolConfig,
    transcript: Transcript,
}

fn world(seed: u64) -> World {
    let cfg = ProtocolConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let p_keys = KeyPair::generate(&mut rng);
    let q_keys = KeyPair::generate(&mut rng);
    let m_keys = KeyPair::generate(&mut rng);

    let mut p = Publisher::new("P", p_keys.clone(), cfg, seed ^ 1);
    let mut q = Publisher::new("Q", q_keys.clone(), cfg, seed ^ 2);
    let mut m = Manager::new("M", m_keys, cfg, seed ^ 3);
    p.set_manager_key(*m.public_key());
    q.set_manager_key(*m.public_key());
    m.register_publisher("P", *p.public_key(), Some(p_keys));
    m.register_publisher("Q", *q.public_key(), Some(q_keys));
    m.register_consumer("N_A", SECRET_A.to_vec(), PROFILE_A);

    for name in ["/P/movie", "/P/series", "/Q/news"] {
        let payload: Vec<u8> = (0..200u32).map(|i| (i * 7 + name.len() as u32) as u8).collect();
        let obj = ContentObject::new(name, "v1", 1_700_000_000, payload, 32).unwrap();
        if name.starts_with("/P/") {
            p.publish(&obj)
        } else {
            q.publish(&obj)
        }
        .unwrap();
    }

    let mut consumer = Consumer::new(ConsumerIdentity::new("N_A", SECRET_A.to_vec()).unwrap(), seed ^ 4);
    consumer.learn_publisher_key("P", *p.public_key());
    consumer.learn_publisher_key("Q", *q.public_key());
    World {
        consumer,
        p,
        q,
        m,
        cfg,
        transcript: Transcript::new(),
    }
}

fn subscribed(seed: u64) -> World {
    let mut w = world(seed);
    subp_run(&mut w.consumer, &mut w.p, &mut w.m, "/P/movie", 10, &mut w.transcript).unwrap();
    w
}

#[test]
fn subp_establishes_one_shared_session_key() {
    let w = subscribed(1);
    let consumer_key = w.consumer.subscription("P").unwrap().session_key;
    let session = w.p.session("N_A", "/P/movie").unwrap();
    assert_eq!(session.state, SessionState::Established);
    assert_eq!(session.key, consumer_key);
    // The manager processed M2 at tick 12 (M1 at 10, M2 at 11).
    let oracle = derive_session_key(w.cfg.epoch_seconds(12), SECRET_A).unwrap();
    assert_eq!(consumer_key, oracle);
    assert_eq!(session.profile.as_deref(), Some(PROFILE_A));
}

#[test]
fn subp_consumer_and_publisher_chains_agree() {
    let w = subscribed(2);
    let km = w.consumer.key_msg("/P/movie").unwrap();
    let published = w.p.content("/P/movie").unwrap();
    assert_eq!(km, &published.key_msg);
    assert_eq!(km.key_chain(7).unwrap(), published.key_msg.key_chain(7).unwrap());
    for seg in &published.segments {
        assert!(decrypt_segment(seg, km).is_ok());
    }
}

#[test]
fn transcript_shows_all_parties_took_part() {
    let w = subscribed(3);
    let run_id = &w.transcript.entries()[0].run_id;
    let tags: Vec<_> = w
        .transcript
        .run(run_id)
        .map(|e| (e.msg_tag.as_str(), e.from.as_str(), e.to.as_str()))
        .collect();
    assert_eq!(
        tags,
        vec![
            ("SubP.M1", "N_A", "P"),
            ("SubP.M2", "P", "M"),
            ("SubP.M3", "M", "P"),
            ("SubP.M4", "P", "N_A"),
            ("SubP.M5", "N_A", "P"),
            ("SubP.M6", "P", "M"),
        ]
    );
    assert_eq!(w.m.completed_runs().len(), 1);
    let parsed = Transcript::from_jsonl(&w.transcript.to_jsonl()).unwrap();
    assert_eq!(parsed, w.transcript);
}

#[test]
fn m1_is_fresh_per_run_and_deterministic_per_seed() {
    let mut a = world(4);
    let mut b = world(4);
    let a1 = a.consumer.subp_init("P", "/P/movie").unwrap();
    let b1 = b.consumer.subp_init("P", "/P/movie").unwrap();
    assert_eq!(
        encode_message(&ProtocolMessage::SubpM1(a1.clone())),
        encode_message(&ProtocolMessage::SubpM1(b1))
    );

    let a2 = a.consumer.subp_init("P", "/P/movie").unwrap();
    let k_ts = derive_subscription_key(a.p.public_key().as_bytes(), SECRET_A).unwrap();
    let n0_first = &aead_decrypt(&k_ts, &a1.request).unwrap()[..16];
    let n0_second = &aead_decrypt(&k_ts, &a2.request).unwrap()[..16];
    assert_ne!(n0_first, n0_second);
}

#[test]
fn m1_payload_carries_secret_under_k_ts() {
    let mut w = world(5);
    let m1 = w.consumer.subp_init("P", "/P/movie").unwrap();
    let k_ts = derive_subscription_key(w.p.public_key().as_bytes(), SECRET_A).unwrap();
    let pt = aead_decrypt(&k_ts, &m1.request).unwrap();
    // n0 (16) || len (4) || secret
    assert_eq!(&pt[20..], SECRET_A);
    assert_eq!(m1.consumer_id, "N_A");
}

#[test]
fn publisher_forwards_m1_verbatim_and_never_learns_secret() {
    let mut w = world(6);
    let m1 = w.consumer.subp_init("P", "/P/movie").unwrap();
    let m2a = w.p.subp_forward(&m1);
    let m2b = w.p.subp_forward(&m1);
    assert_eq!(m2a.m1, m1);
    assert_eq!(m2a.publisher_id, "P");
    assert_ne!(m2a.challenge, m2b.challenge);
    let dump = w.p.state_dump();
    assert!(!dump.contains(&hex::encode(SECRET_A)));
}

#[test]
fn unregistered_consumer_rejected() {
    let mut w = world(7);
    let mut stranger = Consumer::new(ConsumerIdentity::new("N_X", vec![9; 16]).unwrap(), 99);
    stranger.learn_publisher_key("P", *w.p.public_key());
    let m1 = stranger.subp_init("P", "/P/movie").unwrap();
    let m2 = w.p.subp_forward(&m1);
    assert_eq!(
        w.m.subp_process(&m2, 0),
        Err(ProtocolError::UnknownConsumer("N_X".into()))
    );
}

#[test]
fn wrong_secret_rejected() {
    let mut w = world(8);
    let mut impostor = Consumer::new(ConsumerIdentity::new("N_A", vec![1; 32]).unwrap(), 5);
    impostor.learn_publisher_key("P", *w.p.public_key());
    let m2 = w.p.subp_forward(&impostor.subp_init("P", "/P/movie").unwrap());
    assert!(matches!(
        w.m.subp_process(&m2, 0),
        Err(ProtocolError::AuthenticationFailed(_))
    ));
}

#[test]
fn replayed_m1_rejected_by_manager() {
    let mut w = world(9);
    let m1 = w.consumer.subp_init("P", "/P/movie").unwrap();
    let m2 = w.p.subp_forward(&m1);
    w.m.subp_process(&m2, 0).unwrap();
    let again = w.p.subp_forward(&m1);
    assert_eq!(w.m.subp_process(&again, 5), Err(ProtocolError::Replay));
}

#[test]
fn tampered_m3_aborts_the_run() {
    let mut w = world(10);
    let m2 = w.p.subp_forward(&w.consumer.subp_init("P", "/P/movie").unwrap());
    let m3 = w.m.subp_process(&m2, 0).unwrap();
    let mut bad = m3.clone();
    let n = bad.for_publisher.ciphertext.len();
    bad.for_publisher.ciphertext[n - 3] ^= 0x10;
    assert_eq!(
        w.p.subp_relay(&bad, 1),
        Err(ProtocolError::Crypto(CryptoError::AuthenticationFailed))
    );
    // The run is gone: even the genuine M3 no longer produces an M4.
    assert_eq!(w.p.subp_relay(&m3, 2), Err(ProtocolError::NoPendingRun));
}

#[test]
fn wrong_n2_echo_aborts() {
    let mut w = world(11);
    let mut m2 = w.p.subp_forward(&w.consumer.subp_init("P", "/P/movie").unwrap());
    m2.challenge = m2.challenge.succ();
    let m3 = w.m.subp_process(&m2, 0).unwrap();
    assert_eq!(w.p.subp_relay(&m3, 1), Err(ProtocolError::ChallengeMismatch("n2")));
}

#[test]
fn consumer_rejects_off_by_one_challenge() {
    let mut w = world(12);
    let m2 = w.p.subp_forward(&w.consumer.subp_init("P", "/P/movie").unwrap());
    let m3 = w.m.subp_process(&m2, 0).unwrap();
    let mut m4 = w.p.subp_relay(&m3, 1).unwrap();

    let k_ts = derive_subscription_key(w.p.public_key().as_bytes(), SECRET_A).unwrap();
    let mut pt = aead_decrypt(&k_ts, &m4.u0).unwrap();
    let echo = Nonce::from_bytes(pt[..16].try_into().unwrap());
    pt[..16].copy_from_slice(&echo.succ().to_bytes()); // n0 + 2
    m4.u0 = aead_encrypt(&k_ts, &pt, &m4.u0.associated_data, [0; 12]);
    assert_eq!(
        w.consumer.subp_finish(&m4),
        Err(ProtocolError::ChallengeMismatch("n0+1"))
    );
    assert!(w.consumer.subscription("P").is_none());
}

#[test]
fn consumer_cannot_open_its_ticket() {
    let w = subscribed(13);
    let ticket = &w.consumer.subscription("P").unwrap().ticket;
    let own = KeyPair::generate(&mut ChaCha20Rng::seed_from_u64(1));
    assert_eq!(unseal(&own, &ticket.sealed), Err(CryptoError::WrongKey));
    assert_eq!(ticket.issuer_publisher, "P");
}

#[test]
fn final_response_under_wrong_key_fails() {
    let mut w = world(14);
    let m2 = w.p.subp_forward(&w.consumer.subp_init("P", "/P/movie").unwrap());
    let m3 = w.m.subp_process(&m2, 0).unwrap();
    let m4 = w.p.subp_relay(&m3, 1).unwrap();
    let mut m5 = w.consumer.subp_finish(&m4).unwrap();
    let good = m5.clone();
    let pt = aead_decrypt(&w.consumer.subscription("P").unwrap().session_key, &m5.response).unwrap();
    m5.response = aead_encrypt(
        &sdpc_core::crypto::hash(b"wrong"),
        &pt,
        &m5.response.associated_data,
        [1; 12],
    );
    assert!(matches!(
        w.p.subp_confirm(&m5, 2),
        Err(ProtocolError::AuthenticationFailed(_))
    ));
    // A forged response does not disturb the honest one.
    let m6 = w.p.subp_confirm(&good, 3).unwrap();
    w.m.subp_complete(&m6).unwrap();
    assert_eq!(w.p.session("N_A", "/P/movie").unwrap().state, SessionState::Established);
}

fn pending_subp(w: &mut World, now: u64) -> SubpM5 {
    let m2 = w.p.subp_forward(&w.consumer.subp_init("P", "/P/movie").unwrap());
    let m3 = w.m.subp_process(&m2, now).unwrap();
    let m4 = w.p.subp_relay(&m3, now).unwrap();
    w.consumer.subp_finish(&m4).unwrap()
}

#[test]
fn silent_consumer_gets_ticket_marked_stolen() {
    let mut w = world(15);
    let m5 = pending_subp(&mut w, 100);
    let deadline = 100 + w.cfg.stolen_ticket_timeout;
    assert!(w.p.tick_timers(deadline - 1).is_empty());
    let expired = w.p.tick_timers(deadline);
    assert_eq!(expired.len(), 1);
    assert_eq!(expired[0].consumer_id, "N_A");
    assert_eq!(
        w.p.session("N_A", "/P/movie").unwrap().state,
        SessionState::MarkedStolen
    );
    assert!(w.p.is_stolen(&w.consumer.subscription("P").unwrap().ticket));
    // A response after marking is refused.
    assert_eq!(w.p.subp_confirm(&m5, deadline + 1), Err(ProtocolError::TicketStolen));
    // And the ticket can no longer be used for access.
    let req = w.consumer.apsub_init("P", "/P/series").unwrap();
    assert_eq!(w.p.apsub_respond(&req, deadline + 2), Err(ProtocolError::TicketStolen));
}

#[test]
fn response_one_tick_before_deadline_is_accepted() {
    let mut w = world(16);
    let m5 = pending_subp(&mut w, 100);
    let deadline = 100 + w.cfg.stolen_ticket_timeout;
    w.p.subp_confirm(&m5, deadline - 1).unwrap();
    assert_eq!(w.p.session("N_A", "/P/movie").unwrap().state, SessionState::Established);
}

#[test]
fn response_at_deadline_without_tick_is_refused() {
    let mut w = world(17);
    let m5 = pending_subp(&mut w, 0);
    assert_eq!(
        w.p.subp_confirm(&m5, w.cfg.stolen_ticket_timeout),
        Err(ProtocolError::TimerExpired)
    );
    assert_eq!(
        w.p.session("N_A", "/P/movie").unwrap().state,
        SessionState::MarkedStolen
    );
}

#[test]
fn apsub_grants_access_to_second_content() {
    let mut w = subscribed(18);
    apsub_run(&mut w.consumer, &mut w.p, "/P/series", 200, &mut w.transcript).unwrap();
    let km = w.consumer.key_msg("/P/series").unwrap();
    let content = w.p.content("/P/series").unwrap();
    assert_eq!(km, &content.key_msg);
    for seg in &content.segments {
        decrypt_segment(seg, km).unwrap();
    }
    assert_eq!(
        w.p.session("N_A", "/P/series").unwrap().state,
        SessionState::Established
    );
}

#[test]
fn apsub_ticket_from_other_publisher_is_ignored() {
    let mut w = subscribed(19);
    let req = w.consumer.apsub_init("P", "/Q/news").unwrap();
    assert!(matches!(w.q.apsub_respond(&req, 300), Err(ProtocolError::Ignored(_))));
}

#[test]
fn apsub_replayed_request_rejected() {
    let mut w = subscribed(20);
    let req = w.consumer.apsub_init("P", "/P/series").unwrap();
    w.p.apsub_respond(&req, 300).unwrap();
    assert_eq!(w.p.apsub_respond(&req, 301), Err(ProtocolError::Replay));
}

#[test]
fn apsub_identity_mismatch_ignored() {
    let mut w = subscribed(21);
    let mut req = w.consumer.apsub_init("P", "/P/series").unwrap();
    req.consumer_id = "N_B".into();
    assert!(matches!(w.p.apsub_respond(&req, 300), Err(ProtocolError::Ignored(_))));
}

#[test]
fn apsub_missing_m3_marks_ticket_stolen() {
    let mut w = subscribed(22);
    let req = w.consumer.apsub_init("P", "/P/series").unwrap();
    let m2 = w.p.apsub_respond(&req, 300).unwrap();
    let m3 = w.consumer.apsub_finish(&m2).unwrap();
    let expired = w.p.tick_timers(300 + w.cfg.stolen_ticket_timeout);
    assert_eq!(expired.len(), 1);
    assert_eq!(
        w.p.apsub_confirm(&m3, 300 + w.cfg.stolen_ticket_timeout + 1),
        Err(ProtocolError::TicketStolen)
    );
}

#[test]
fn apsub3_keeps_consumer_secrets_from_third_party() {
    let mut w = subscribed(23);
    apsub3_run(
        &mut w.consumer,
        &mut w.q,
        &mut w.m,
        "P",
        "/Q/news",
        400,
        &mut w.transcript,
    )
    .unwrap();

    let km = w.consumer.key_msg("/Q/news").unwrap();
    assert_eq!(km, &w.q.content("/Q/news").unwrap().key_msg);
    let session = w.q.session("N_A", "/Q/news").unwrap();
    assert_eq!(session.state, SessionState::Established);
    assert_eq!(session.profile, None);
    // Consumer-side K_TS equals the K_TS the manager delivered to Q.
    assert_eq!(w.consumer.temp_key("Q"), Some(&session.key));

    let k_s = w.consumer.subscription("P").unwrap().session_key;
    let dump = w.q.state_dump();
    assert!(!dump.contains(&k_s.to_hex()));
    assert!(!dump.contains(PROFILE_A));
    assert!(!dump.contains(&hex::encode(SECRET_A)));
    assert!(w
        .m
        .completed_runs()
        .iter()
        .any(|r| r.protocol == ProtocolKind::Apsub3 && r.publisher_id == "Q"));
}

#[test]
fn apsub3_missing_identity_proof_aborts() {
    let mut w = subscribed(24);
    let m1 = w.consumer.apsub3_init("P", "Q", "/Q/news").unwrap();
    let m2 = w.q.apsub3_forward(&m1).unwrap();
    let m3 = w.m.apsub3_process(&m2, 500).unwrap();
    let mut m4 = w.q.apsub3_relay(&m3, 501).unwrap();
    m4.identity_proof = None;
    assert_eq!(w.consumer.apsub3_finish(&m4), Err(ProtocolError::IdentityProofMissing));
}

#[test]
fn apsub3_proof_from_wrong_key_rejected() {
    let mut w = subscribed(25);
    let m1 = w.consumer.apsub3_init("P", "Q", "/Q/news").unwrap();
    let m2 = w.q.apsub3_forward(&m1).unwrap();
    let m3 = w.m.apsub3_process(&m2, 500).unwrap();
    let mut m4 = w.q.apsub3_relay(&m3, 501).unwrap();
    let ad = m4.identity_proof.as_ref().unwrap().associated_data.clone();
    m4.identity_proof = Some(aead_encrypt(&sdpc_core::crypto::hash(b"guess"), b"Q", &ad, [0; 12]));
    assert_eq!(w.consumer.apsub3_finish(&m4), Err(ProtocolError::IdentityProofInvalid));
}

#[test]
fn apsub3_replayed_request_rejected() {
    let mut w = subscribed(26);
    let m1 = w.consumer.apsub3_init("P", "Q", "/Q/news").unwrap();
    let m2 = w.q.apsub3_forward(&m1).unwrap();
    w.m.apsub3_process(&m2, 500).unwrap();
    let again = w.q.apsub3_forward(&m1).unwrap();
    assert_eq!(w.m.apsub3_process(&again, 501), Err(ProtocolError::Replay));
}

#[test]
fn replaying_a_completed_subp_run_establishes_nothing() {
    let mut w = world(27);
    let record = subp_run(&mut w.consumer, &mut w.p, &mut w.m, "/P/movie", 10, &mut w.transcript).unwrap();
    let before = w.p.established_count();
    for captured in &record.captured {
        let msg = decode_message(&captured.bytes).unwrap();
        let accepted = match &msg {
            ProtocolMessage::SubpM1(m1) => {
                let m2 = w.p.subp_forward(m1);
                w.m.subp_process(&m2, 50).is_ok()
            }
            ProtocolMessage::SubpM2(m2) => w.m.subp_process(m2, 50).is_ok(),
            ProtocolMessage::SubpM3(m3) => w.p.subp_relay(m3, 50).is_ok(),
            ProtocolMessage::SubpM4(m4) => w.consumer.subp_finish(m4).is_ok(),
            ProtocolMessage::SubpM5(m5) => w.p.subp_confirm(m5, 50).is_ok(),
            ProtocolMessage::SubpM6(m6) => w.m.subp_complete(m6).is_ok(),
            other => panic!("unexpected {}", other.tag()),
        };
        assert!(!accepted, "replayed {} was accepted", captured.tag);
    }
    assert_eq!(w.p.established_count(), before);
}

#[test]
fn session_key_only_changes_with_the_manager_second() {
    let mut w = subscribed(30);
    let first = w.consumer.subscription("P").unwrap().session_key;
    subp_run(&mut w.consumer, &mut w.p, &mut w.m, "/P/series", 500, &mut w.transcript).unwrap();
    let same_second = w.consumer.subscription("P").unwrap().session_key;
    assert_eq!(first, same_second, "K_s depends only on T_m in seconds and n_s");
    subp_run(
        &mut w.consumer,
        &mut w.p,
        &mut w.m,
        "/P/series",
        5_000,
        &mut w.transcript,
    )
    .unwrap();
    assert_ne!(w.consumer.subscription("P").unwrap().session_key, first);
}
