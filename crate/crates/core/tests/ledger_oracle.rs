//! The ledger checked against a naive latest-vote model.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rating_core::validation::check_history;
use rating_core::{LedgerState, RateOutcome, ResourceId, ResourceRating, UserId, Vote};
use sha2::{Digest, Sha256};

fn user(n: usize) -> UserId {
    UserId::parse(format!("{:032x}", 0x5eed_0000 + n)).unwrap()
}

fn resource(n: usize) -> ResourceId {
    ResourceId::parse(&format!("https://www.youtube.com/watch?v=clip{n}")).unwrap()
}

/// Keeps only each user's latest vote per resource plus first-seen order.
#[derive(Default)]
struct Reference {
    order: Vec<ResourceId>,
    votes: BTreeMap<ResourceId, BTreeMap<UserId, bool>>,
}

impl Reference {
    fn rate(&mut self, u: &UserId, r: &ResourceId, v: bool) {
        if !self.votes.contains_key(r) {
            self.order.push(r.clone());
        }
        self.votes.entry(r.clone()).or_default().insert(u.clone(), v);
    }

    fn counts(&self, r: &ResourceId) -> ResourceRating {
        let votes = self.votes.get(r);
        let likes = votes.map_or(0, |m| m.values().filter(|v| **v).count()) as u64;
        let dislikes = votes.map_or(0, |m| m.values().filter(|v| !**v).count()) as u64;
        ResourceRating::new(likes, dislikes)
    }

    /// Encodes the state following the documented canonical layout, written
    /// out independently of the ledger's own encoder.
    fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"rating-ledger/v1");
        h.update((self.order.len() as u64).to_be_bytes());
        for r in &self.order {
            let c = self.counts(r);
            h.update((r.as_str().len() as u64).to_be_bytes());
            h.update(r.as_str());
            h.update(c.likes.to_be_bytes());
            h.update(c.dislikes.to_be_bytes());
            let votes = &self.votes[r];
            h.update((votes.len() as u64).to_be_bytes());
            for (u, v) in votes {
                h.update(u.as_str());
                h.update([*v as u8]);
            }
        }
        h.finalize().into()
    }
}

fn assert_matches_reference(state: &LedgerState, reference: &Reference) {
    assert_eq!(state.resources(), reference.order.as_slice());
    for r in &reference.order {
        assert_eq!(state.get_resource_information(r), reference.counts(r), "{r}");
        for (u, v) in &reference.votes[r] {
            assert_eq!(state.vote_of(u, r), Some(Vote(*v)));
        }
    }
    assert_eq!(state.state_digest(), reference.digest());
}

#[test]
fn ten_thousand_random_ratings_match_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a7e);
    let users: Vec<_> = (0..8).map(user).collect();
    let resources: Vec<_> = (0..8).map(resource).collect();
    let mut state = LedgerState::new();
    let mut reference = Reference::default();
    for _ in 0..10_000 {
        let u = &users[rng.gen_range(0..8)];
        let r = &resources[rng.gen_range(0..8)];
        let v = rng.gen_bool(0.5);
        state.apply_rate(u, r, Vote(v));
        reference.rate(u, r, v);
    }
    assert_matches_reference(&state, &reference);
    state.check_invariants().unwrap();
}

#[test]
fn counts_after_two_raters() {
    let (s, _) = LedgerState::new().rate(&user(0), &resource(0), Vote::LIKE);
    let (s, _) = s.rate(&user(1), &resource(0), Vote::DISLIKE);
    let mut reference = Reference::default();
    reference.rate(&user(0), &resource(0), true);
    reference.rate(&user(1), &resource(0), false);
    assert_eq!(s.get_resource_information(&resource(0)), reference.counts(&resource(0)));
    assert_eq!(reference.counts(&resource(0)), ResourceRating::new(1, 1));
}

#[test]
fn three_distinct_resources_counted_once() {
    let mut s = LedgerState::new();
    for (u, r) in [(0, 0), (1, 1), (2, 2), (3, 0), (0, 1)] {
        s.apply_rate(&user(u), &resource(r), Vote::LIKE);
    }
    assert_eq!(s.get_number_of_rated_resources(), 3);
    let listed: Vec<_> = (0..3).map(|i| s.get_rated_resource(i).unwrap().clone()).collect();
    let mut sorted = listed.clone();
    sorted.sort();
    let keys: Vec<_> = (0..3).map(resource).collect();
    assert_eq!(sorted, keys);
}

/// Enumerates every ledger reachable with at most two ratings over two users,
/// two resources; distinct reference states must have distinct digests.
#[test]
fn digest_has_no_collisions_on_small_space() {
    let ops: Vec<(usize, usize, bool)> =
        (0..2).flat_map(|u| (0..2).flat_map(move |r| [(u, r, true), (u, r, false)])).collect();
    let mut seen: BTreeMap<[u8; 32], Vec<u8>> = BTreeMap::new();
    let mut sequences: Vec<Vec<(usize, usize, bool)>> = vec![vec![]];
    for a in &ops {
        sequences.push(vec![*a]);
        for b in &ops {
            sequences.push(vec![*a, *b]);
            for c in &ops {
                sequences.push(vec![*a, *b, *c]);
            }
        }
    }
    for seq in sequences {
        let mut s = LedgerState::new();
        for &(u, r, v) in &seq {
            s.apply_rate(&user(u), &resource(r), Vote(v));
        }
        let canon = s.canonical_bytes();
        let prior = seen.entry(s.state_digest()).or_insert_with(|| canon.clone());
        assert_eq!(*prior, canon, "digest collision between distinct states");
    }
    assert!(seen.len() > 20);
}

fn op() -> impl Strategy<Value = (usize, usize, bool)> {
    (0..4usize, 0..4usize, any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn conservation_and_non_negativity(seq in prop::collection::vec(op(), 0..80)) {
        let mut s = LedgerState::new();
        let mut reference = Reference::default();
        for (u, r, v) in seq {
            s.apply_rate(&user(u), &resource(r), Vote(v));
            reference.rate(&user(u), &resource(r), v);
            for res in s.resources() {
                let c = s.get_resource_information(res);
                let raters = (0..4).filter(|&x| s.has_rated(&user(x), res)).count() as u64;
                prop_assert_eq!(c.likes + c.dislikes, raters);
            }
            prop_assert!(s.check_invariants().is_ok());
        }
        assert_matches_reference(&s, &reference);
    }

    #[test]
    fn repeated_vote_is_idempotent(seq in prop::collection::vec(op(), 0..30), last in op()) {
        let mut s = LedgerState::new();
        for (u, r, v) in seq {
            s.apply_rate(&user(u), &resource(r), Vote(v));
        }
        let (u, r, v) = last;
        let (once, _) = s.rate(&user(u), &resource(r), Vote(v));
        let (twice, outcome) = once.rate(&user(u), &resource(r), Vote(v));
        prop_assert_eq!(outcome, RateOutcome::NoOp);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn flip_twice_restores_counts(seq in prop::collection::vec(op(), 0..30), last in op()) {
        let mut s = LedgerState::new();
        for (u, r, v) in seq {
            s.apply_rate(&user(u), &resource(r), Vote(v));
        }
        let (u, r, v) = last;
        let (once, _) = s.rate(&user(u), &resource(r), Vote(v));
        let (flipped, o1) = once.rate(&user(u), &resource(r), Vote(!v));
        let (back, o2) = flipped.rate(&user(u), &resource(r), Vote(v));
        prop_assert_eq!(o1, RateOutcome::Flipped);
        prop_assert_eq!(o2, RateOutcome::Flipped);
        prop_assert_eq!(back.get_resource_information(&resource(r)), once.get_resource_information(&resource(r)));
        prop_assert_eq!(back, once);
    }

    #[test]
    fn one_user_contributes_exactly_one_unit(votes in prop::collection::vec(any::<bool>(), 1..20)) {
        let mut s = LedgerState::new();
        for v in &votes {
            s.apply_rate(&user(0), &resource(0), Vote(*v));
        }
        let c = s.get_resource_information(&resource(0));
        prop_assert_eq!(c.total(), 1);
        prop_assert_eq!(c.likes == 1, *votes.last().unwrap());
    }

    #[test]
    fn regrouping_users_only_reorders_resources(seq in prop::collection::vec(op(), 0..60)) {
        let mut a = LedgerState::new();
        for &(u, r, v) in &seq {
            a.apply_rate(&user(u), &resource(r), Vote(v));
        }
        // a stable sort by user keeps each user's own order
        let mut grouped = seq.clone();
        grouped.sort_by_key(|&(u, _, _)| u);
        let mut b = LedgerState::new();
        for &(u, r, v) in &grouped {
            b.apply_rate(&user(u), &resource(r), Vote(v));
        }
        let mut ra = a.resources().to_vec();
        let mut rb = b.resources().to_vec();
        ra.sort();
        rb.sort();
        prop_assert_eq!(&ra, &rb);
        for r in &ra {
            prop_assert_eq!(a.get_resource_information(r), b.get_resource_information(r));
            for u in 0..4 {
                prop_assert_eq!(a.vote_of(&user(u), r), b.vote_of(&user(u), r));
            }
        }
    }

    #[test]
    fn history_check_matches_noop_branch(seq in prop::collection::vec(op(), 0..40), probe in op()) {
        let mut s = LedgerState::new();
        for (u, r, v) in seq {
            s.apply_rate(&user(u), &resource(r), Vote(v));
        }
        let (u, r, v) = probe;
        let allowed = check_history(&s, &user(u), &resource(r), Vote(v)).is_ok();
        let (_, outcome) = s.rate(&user(u), &resource(r), Vote(v));
        prop_assert_eq!(allowed, outcome != RateOutcome::NoOp);
    }
}
