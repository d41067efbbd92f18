use sdpc_sim::attack::{canonical_config, run_attack, run_suite, Verdict};
use sdpc_sim::AdversaryKind;

#[test]
fn every_adversary_is_defeated_on_the_canonical_network() {
    for r in run_suite(&AdversaryKind::ALL, 7, false).unwrap() {
        assert_eq!(r.verdict, Verdict::Defeated, "{:?}: {:#?}", r.kind, r.evidence);
        assert!(r.attempts > 0, "{:?} tried nothing", r.kind);
        assert_eq!(r.accepted, 0);
    }
}

#[test]
fn replay_succeeds_once_nonces_are_forgotten() {
    let r = run_attack(&canonical_config(AdversaryKind::Replay, 7, true)).unwrap();
    assert_eq!(r.verdict, Verdict::Succeeded, "{:#?}", r.evidence);
    assert!(r.evidence.iter().any(|e| e.starts_with("ACCEPTED: SubP.M1")));
}

#[test]
fn other_adversaries_do_not_depend_on_the_registry_alone() {
    for kind in [AdversaryKind::Eavesdrop, AdversaryKind::ImpersonatePublisher] {
        let r = run_attack(&canonical_config(kind, 7, true)).unwrap();
        assert_eq!(r.verdict, Verdict::Defeated, "{kind:?}");
    }
}

#[test]
fn stolen_ticket_is_marked_and_then_refused() {
    let r = run_attack(&canonical_config(AdversaryKind::StolenTicket, 3, false)).unwrap();
    assert_eq!(r.verdict, Verdict::Defeated, "{:#?}", r.evidence);
    assert!(r.evidence.iter().any(|e| e.contains("stolen")), "{:#?}", r.evidence);
}

#[test]
fn verdicts_hold_across_seeds() {
    for seed in [1, 2, 99] {
        for r in run_suite(
            &[
                AdversaryKind::Replay,
                AdversaryKind::StolenTicket,
                AdversaryKind::ImpersonatePublisher,
            ],
            seed,
            false,
        )
        .unwrap()
        {
            assert_eq!(r.verdict, Verdict::Defeated, "seed {seed} {:?}", r.kind);
        }
    }
}
