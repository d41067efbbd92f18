use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use sdpc_core::content::*;
use sdpc_core::crypto::*;
use sdpc_core::protocol::flows::{apsub3_run, apsub_run, subp_run};
use sdpc_core::protocol::*;

fn digest() -> impl Strategy<Value = Digest> {
    any::<[u8; 32]>().prop_map(|b| Digest::from_slice(&b).unwrap())
}

fn key_msg_for(obj: &ContentObject, seed: u64) -> KeyMsg {
    let kp = KeyPair::generate(&mut ChaCha20Rng::seed_from_u64(seed));
    KeyMsg {
        commitment: obj.commitment().unwrap(),
        publisher_public_key: *kp.public(),
    }
}

fn object() -> impl Strategy<Value = ContentObject> {
    (
        "[a-z]{1,8}",
        "v[0-9]",
        any::<u32>(),
        prop::collection::vec(any::<u8>(), 1..600),
        1usize..97,
    )
        .prop_map(|(name, version, t, payload, seg)| {
            ContentObject::new(format!("/{name}"), version, t as u64, payload, seg).unwrap()
        })
}

proptest! {
    #[test]
    fn chains_agree_and_extend_as_prefixes(z0 in digest(), pk in any::<[u8; 32]>(), len in 1usize..64, extra in 0usize..16) {
        let short = build_key_chain(z0, len, &pk).unwrap();
        let long = build_key_chain(z0, len + extra, &pk).unwrap();
        prop_assert_eq!(short.len(), len);
        prop_assert_eq!(&long.segment_keys[..len], &short.segment_keys[..]);
        prop_assert_eq!(&long.generators[..len], &short.generators[..]);
        for k in 1..=len as u64 {
            prop_assert_eq!(short.segment_key(k).unwrap(), &segment_key(&z0, k, &pk).unwrap());
        }
    }

    #[test]
    fn distinct_publisher_keys_give_distinct_chains(z0 in digest(), a in any::<[u8; 32]>(), b in any::<[u8; 32]>()) {
        prop_assume!(a != b);
        let ca = build_key_chain(z0, 3, &a).unwrap();
        let cb = build_key_chain(z0, 3, &b).unwrap();
        prop_assert_eq!(&ca.generators, &cb.generators);
        for k in 0..3 {
            prop_assert_ne!(ca.segment_keys[k], cb.segment_keys[k]);
        }
    }

    #[test]
    fn xor_is_commutative_and_self_inverse(a in prop::collection::vec(any::<u8>(), 0..48), b in prop::collection::vec(any::<u8>(), 0..48)) {
        let ab = xor_left_padded(&a, &b);
        prop_assert_eq!(&ab, &xor_left_padded(&b, &a));
        prop_assert_eq!(ab.len(), a.len().max(b.len()));
        let back = xor_left_padded(&ab, &b);
        let mut padded = vec![0u8; ab.len() - a.len()];
        padded.extend_from_slice(&a);
        prop_assert_eq!(back, padded);
    }

    #[test]
    fn derived_keys_are_32_bytes(pk in prop::collection::vec(any::<u8>(), 1..64), secret in prop::collection::vec(any::<u8>(), 1..64), t in any::<u64>(), n in any::<[u8; 16]>()) {
        let k_ts = derive_subscription_key(&pk, &secret).unwrap();
        let k_s = derive_session_key(t, &secret).unwrap();
        let temp = derive_temp_session_key(&k_s, &n);
        for k in [k_ts, k_s, temp] {
            prop_assert_eq!(k.as_bytes().len(), 32);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn aead_roundtrip_and_tamper_detection(
        key in digest(),
        pt in prop::collection::vec(any::<u8>(), 0..128),
        ad in prop::collection::vec(any::<u8>(), 0..32),
        iv in any::<[u8; 12]>(),
        flip in any::<prop::sample::Index>(),
        bit in 0u8..8,
    ) {
        let env = aead_encrypt(&key, &pt, &ad, iv);
        prop_assert_eq!(aead_decrypt(&key, &env).unwrap(), pt.clone());

        // Flip one bit somewhere in ciphertext || tag || ad.
        let mut bad = env.clone();
        let total = bad.ciphertext.len() + bad.tag.len() + bad.associated_data.len();
        let i = flip.index(total);
        if i < bad.ciphertext.len() {
            bad.ciphertext[i] ^= 1 << bit;
        } else if i < bad.ciphertext.len() + 16 {
            bad.tag[i - bad.ciphertext.len()] ^= 1 << bit;
        } else {
            bad.associated_data[i - bad.ciphertext.len() - 16] ^= 1 << bit;
        }
        prop_assert_eq!(aead_decrypt(&key, &bad), Err(CryptoError::AuthenticationFailed));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reassembly_restores_payload_in_any_order(obj in object(), seed in any::<u64>(), shuffle in any::<u64>()) {
        let km = key_msg_for(&obj, seed);
        let chain = km.key_chain(obj.segment_count()).unwrap();
        let mut segs = encrypt_object(&obj, &chain).unwrap();
        prop_assert_eq!(segs.len(), obj.payload.len().div_ceil(obj.segment_size));
        let mut rng = ChaCha20Rng::seed_from_u64(shuffle);
        rand::seq::SliceRandom::shuffle(segs.as_mut_slice(), &mut rng);
        prop_assert_eq!(reassemble(&segs, &km).unwrap(), obj.payload);
    }

    #[test]
    fn corrupted_segment_is_detected(obj in object(), seed in any::<u64>(), which in any::<prop::sample::Index>(), pos in any::<prop::sample::Index>(), bit in 0u8..8) {
        let km = key_msg_for(&obj, seed);
        let chain = km.key_chain(obj.segment_count()).unwrap();
        let mut segs = encrypt_object(&obj, &chain).unwrap();
        let victim = which.index(segs.len());
        let env = segs[victim].envelope.as_mut().unwrap();
        let p = pos.index(env.ciphertext.len());
        env.ciphertext[p] ^= 1 << bit;
        let idx = segs[victim].index;
        prop_assert_eq!(decrypt_segment(&segs[victim], &km), Err(ContentError::AuthenticationFailed(idx)));
        prop_assert!(reassemble(&segs, &km).is_err());
    }

    #[test]
    fn segment_moved_to_another_index_is_rejected(obj in object(), seed in any::<u64>()) {
        prop_assume!(obj.segment_count() >= 2);
        let km = key_msg_for(&obj, seed);
        let chain = km.key_chain(obj.segment_count()).unwrap();
        let segs = encrypt_object(&obj, &chain).unwrap();
        let mut moved = segs[0].clone();
        moved.index = 2;
        prop_assert!(decrypt_segment(&moved, &km).is_err());
    }

    #[test]
    fn wrong_publisher_key_fails_every_segment(obj in object(), a in any::<u64>(), b in any::<u64>()) {
        prop_assume!(a != b);
        let km = key_msg_for(&obj, a);
        let forged = key_msg_for(&obj, b);
        let segs = encrypt_object(&obj, &km.key_chain(obj.segment_count()).unwrap()).unwrap();
        for s in &segs {
            prop_assert!(decrypt_segment(s, &forged).is_err());
        }
    }

    #[test]
    fn gop_encryption_leaves_dependents_clear(
        frames in prop::collection::vec((prop::collection::vec(any::<u8>(), 1..40), prop::collection::vec(prop::collection::vec(any::<u8>(), 1..20), 0..5)), 1..12),
        seed in any::<u64>(),
    ) {
        let stream = GopStream {
            name: "/video".into(),
            version: "v1".into(),
            gops: frames
                .iter()
                .map(|(i, deps)| Gop {
                    i_frame: IntraFrame::Clear(i.clone()),
                    dependents: deps.iter().map(|d| DependentFrame { kind: DependentKind::P, data: d.clone() }).collect(),
                })
                .collect(),
        };
        let obj = ContentObject::new("/video", "v1", 7, vec![0], 1).unwrap();
        let km = key_msg_for(&obj, seed);
        let chain = km.key_chain(stream.gops.len()).unwrap();
        let enc = encrypt_gop_stream(&stream, &chain).unwrap();
        prop_assert_eq!(enc.encrypted_i_frames(), stream.gops.len());
        prop_assert_eq!(enc.dependent_bytes(), stream.dependent_bytes());
        prop_assert_eq!(decrypt_gop_stream(&enc, &km).unwrap(), stream);
    }
}

/// Every wire message produced by honest runs of all three protocols.
fn captured_corpus() -> Vec<Vec<u8>> {
    let cfg = ProtocolConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    let (pk, qk, mk) = (
        KeyPair::generate(&mut rng),
        KeyPair::generate(&mut rng),
        KeyPair::generate(&mut rng),
    );
    let mut p = Publisher::new("P", pk.clone(), cfg, 1);
    let mut q = Publisher::new("Q", qk.clone(), cfg, 2);
    let mut m = Manager::new("M", mk, cfg, 3);
    p.set_manager_key(*m.public_key());
    q.set_manager_key(*m.public_key());
    m.register_publisher("P", *p.public_key(), Some(pk));
    m.register_publisher("Q", *q.public_key(), Some(qk));
    m.register_consumer("N", vec![5; 24], "basic");
    for name in ["/P/a", "/P/b"] {
        p.publish(&ContentObject::new(name, "v1", 1, vec![1; 50], 16).unwrap())
            .unwrap();
    }
    q.publish(&ContentObject::new("/Q/c", "v1", 1, vec![2; 50], 16).unwrap())
        .unwrap();
    let mut c = Consumer::new(ConsumerIdentity::new("N", vec![5; 24]).unwrap(), 4);
    c.learn_publisher_key("P", *p.public_key());
    c.learn_publisher_key("Q", *q.public_key());
    let mut t = Transcript::new();
    let mut out = Vec::new();
    for rec in [
        subp_run(&mut c, &mut p, &mut m, "/P/a", 0, &mut t).unwrap(),
        apsub_run(&mut c, &mut p, "/P/b", 10, &mut t).unwrap(),
        apsub3_run(&mut c, &mut q, &mut m, "P", "/Q/c", 20, &mut t).unwrap(),
    ] {
        out.extend(rec.captured.into_iter().map(|c| c.bytes));
    }
    out
}

#[test]
fn corpus_covers_all_fifteen_messages() {
    let tags: std::collections::BTreeSet<_> = captured_corpus()
        .iter()
        .map(|b| decode_message(b).unwrap().tag())
        .collect();
    assert_eq!(tags.len(), 15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn decoding_random_bytes_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        if let Ok(msg) = decode_message(&bytes) {
            prop_assert_eq!(encode_message(&msg), bytes);
        }
    }

    #[test]
    fn mutated_messages_decode_canonically_or_fail(
        pick in any::<prop::sample::Index>(),
        edits in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..4),
        cut in any::<Option<prop::sample::Index>>(),
    ) {
        thread_local!(static CORPUS: Vec<Vec<u8>> = captured_corpus());
        let mut bytes = CORPUS.with(|c| c[pick.index(c.len())].clone());
        for (at, v) in edits {
            let i = at.index(bytes.len());
            bytes[i] = v;
        }
        if let Some(c) = cut {
            bytes.truncate(c.index(bytes.len()));
        }
        if let Ok(msg) = decode_message(&bytes) {
            prop_assert_eq!(encode_message(&msg), bytes);
        }
    }
}

#[test]
fn honest_messages_roundtrip_exactly() {
    for bytes in captured_corpus() {
        let msg = decode_message(&bytes).unwrap();
        assert_eq!(encode_message(&msg), bytes, "{}", msg.tag());
        let mut extended = bytes.clone();
        extended.push(0);
        assert!(decode_message(&extended).is_err());
    }
}
