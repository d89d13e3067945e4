//! The rating contract: storage layout, the `rate` transition and read helpers.
//!
//! Storage mirrors the five contract structures plus the ordered list of rated
//! resources. Boolean maps treat "absent" and `false` as the same value, the
//! way contract storage does, so two states that differ only in explicitly
//! stored defaults compare equal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use url::Url;

/// Version tag prefixed to the canonical state encoding.
pub const STATE_ENCODING_TAG: &[u8] = b"rating-ledger/v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("user id must be 32 lowercase hex characters, got {0:?}")]
    MalformedUserId(String),
    #[error("resource id is not an absolute http(s) URL: {0:?}")]
    MalformedResourceId(String),
    #[error("index {index} out of range for {len} rated resources")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Hashed account identifier, exactly 32 lowercase hex characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct UserId(String);

impl UserId {
    pub const LEN: usize = 32;

    pub fn parse(value: impl Into<String>) -> Result<Self, LedgerError> {
        let value = value.into();
        let well_formed = value.len() == Self::LEN
            && value.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
        if well_formed {
            Ok(Self(value))
        } else {
            Err(LedgerError::MalformedUserId(value))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for UserId {
    type Error = LedgerError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::parse(value)
    }
}

impl From<UserId> for String {
    fn from(id: UserId) -> Self {
        id.0
    }
}

impl FromStr for UserId {
    type Err = LedgerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Canonical URL of a rated resource.
///
/// Canonical form is `scheme://host[:port][path][?query]` with scheme and host
/// lowercased, the fragment dropped, and no trailing slash when the path is
/// empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ResourceId(String);

impl ResourceId {
    pub fn parse(raw: &str) -> Result<Self, LedgerError> {
        let malformed = || LedgerError::MalformedResourceId(raw.to_string());
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Err(malformed());
        }
        let url = Url::parse(trimmed).map_err(|_| malformed())?;
        Self::from_url(&url).ok_or_else(malformed)
    }

    /// Canonicalizes an already parsed URL. Returns `None` for non-http(s)
    /// schemes, host-less URLs and URLs carrying credentials.
    pub fn from_url(url: &Url) -> Option<Self> {
        if !matches!(url.scheme(), "http" | "https") {
            return None;
        }
        if !url.username().is_empty() || url.password().is_some() {
            return None;
        }
        let host = url.host_str()?;
        if host.is_empty() {
            return None;
        }
        let mut out = format!("{}://{}", url.scheme(), host.to_ascii_lowercase());
        if let Some(port) = url.port() {
            out.push(':');
            out.push_str(&port.to_string());
        }
        let path = url.path();
        if path != "/" {
            out.push_str(path);
        }
        if let Some(query) = url.query() {
            out.push('?');
            out.push_str(query);
        }
        Some(Self(out))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Host component of the canonical URL.
    pub fn host(&self) -> &str {
        let rest = self.0.split_once("://").map(|(_, r)| r).unwrap_or(&self.0);
        let end = rest.find(['/', '?', ':']).unwrap_or(rest.len());
        &rest[..end]
    }
}

impl TryFrom<String> for ResourceId {
    type Error = LedgerError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        let parsed = Self::parse(&value)?;
        if parsed.0 != value {
            return Err(LedgerError::MalformedResourceId(value));
        }
        Ok(parsed)
    }
}

impl From<ResourceId> for String {
    fn from(id: ResourceId) -> Self {
        id.0
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `true` is a like, `false` a dislike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vote(pub bool);

impl Vote {
    pub const LIKE: Vote = Vote(true);
    pub const DISLIKE: Vote = Vote(false);

    pub fn is_like(self) -> bool {
        self.0
    }

    pub fn flipped(self) -> Vote {
        Vote(!self.0)
    }
}

impl fmt::Display for Vote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.0 { "like" } else { "dislike" })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceRating {
    pub likes: u64,
    pub dislikes: u64,
}

impl ResourceRating {
    pub fn new(likes: u64, dislikes: u64) -> Self {
        Self { likes, dislikes }
    }

    pub fn total(&self) -> u64 {
        self.likes + self.dislikes
    }
}

/// Which branch of `rate` a call took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateOutcome {
    /// First rating ever recorded for the resource.
    NewResource,
    /// Known resource, first rating from this user.
    NewRater,
    /// The user reversed their earlier vote.
    Flipped,
    /// The user repeated their earlier vote; nothing changes.
    NoOp,
}

impl RateOutcome {
    pub const ALL: [RateOutcome; 4] = [Self::NewResource, Self::NewRater, Self::Flipped, Self::NoOp];

    /// Storage slots read and written by the branch. Every branch touches a
    /// constant number of slots regardless of how much is already stored.
    pub fn storage_touches(self) -> StorageTouches {
        match self {
            // reads: usersToResources, ratedResources
            // new: ratedResources, resources[len], usersToResources,
            //      resourcesInformation, ratingsInformation
            // update: resources.length
            Self::NewResource => StorageTouches::new(2, 5, 1),
            // reads: usersToResources, ratedResources, the counter
            // new: usersToResources, ratingsInformation
            // update: the counter
            Self::NewRater => StorageTouches::new(3, 2, 1),
            // reads: usersToResources, ratingsInformation, likes, dislikes
            // update: ratingsInformation, likes, dislikes
            Self::Flipped => StorageTouches::new(4, 0, 3),
            // reads: usersToResources, ratingsInformation
            Self::NoOp => StorageTouches::new(2, 0, 0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NewResource => "new_resource",
            Self::NewRater => "new_rater",
            Self::Flipped => "flipped",
            Self::NoOp => "no_op",
        }
    }
}

impl fmt::Display for RateOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RateOutcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| format!("unknown rate branch {s:?}"))
    }
}

/// Storage-touch summary of a single call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StorageTouches {
    pub reads: u64,
    pub writes_new: u64,
    pub writes_update: u64,
}

impl StorageTouches {
    pub const fn new(reads: u64, writes_new: u64, writes_update: u64) -> Self {
        Self { reads, writes_new, writes_update }
    }
}

/// A `mapping(bytes32 => mapping(string => bool))` where unset reads `false`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFlags {
    set: BTreeMap<UserId, BTreeSet<ResourceId>>,
}

impl PairFlags {
    pub fn get(&self, user: &UserId, res: &ResourceId) -> bool {
        self.set.get(user).is_some_and(|r| r.contains(res))
    }

    pub fn set(&mut self, user: &UserId, res: &ResourceId, value: bool) {
        if value {
            self.set.entry(user.clone()).or_default().insert(res.clone());
        } else if let Some(resources) = self.set.get_mut(user) {
            resources.remove(res);
            if resources.is_empty() {
                self.set.remove(user);
            }
        }
    }

    /// All `(user, resource)` pairs currently set to `true`.
    pub fn iter_true(&self) -> impl Iterator<Item = (&UserId, &ResourceId)> {
        self.set.iter().flat_map(|(u, rs)| rs.iter().map(move |r| (u, r)))
    }

    pub fn resources_of<'a>(&'a self, user: &UserId) -> impl Iterator<Item = &'a ResourceId> + 'a {
        self.set.get(user).into_iter().flatten()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerState {
    resources_information: BTreeMap<ResourceId, ResourceRating>,
    resources: Vec<ResourceId>,
    rated_resources: BTreeSet<ResourceId>,
    ratings_information: PairFlags,
    users_to_resources: PairFlags,
}

impl LedgerState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies a rating and returns the new state with the branch taken.
    pub fn rate(&self, cred: &UserId, res: &ResourceId, vote: Vote) -> (LedgerState, RateOutcome) {
        let mut next = self.clone();
        let outcome = next.apply_rate(cred, res, vote);
        (next, outcome)
    }

    /// In-place form of [`LedgerState::rate`].
    pub fn apply_rate(&mut self, cred: &UserId, res: &ResourceId, vote: Vote) -> RateOutcome {
        if self.users_to_resources.get(cred, res) {
            let previous = self.ratings_information.get(cred, res);
            if previous == vote.0 {
                return RateOutcome::NoOp;
            }
            let counts = self
                .resources_information
                .get_mut(res)
                .expect("rated pair always has a counter entry");
            if vote.0 {
                counts.dislikes -= 1;
                counts.likes += 1;
            } else {
                counts.likes -= 1;
                counts.dislikes += 1;
            }
            self.ratings_information.set(cred, res, vote.0);
            return RateOutcome::Flipped;
        }

        self.users_to_resources.set(cred, res, true);
        // Written in both first-time branches. Without it a later opposite
        // vote from the same user would be misread and underflow a counter.
        self.ratings_information.set(cred, res, vote.0);

        if !self.rated_resources.contains(res) {
            self.rated_resources.insert(res.clone());
            self.resources.push(res.clone());
            let counts = if vote.0 { ResourceRating::new(1, 0) } else { ResourceRating::new(0, 1) };
            self.resources_information.insert(res.clone(), counts);
            RateOutcome::NewResource
        } else {
            let counts = self.resources_information.entry(res.clone()).or_default();
            if vote.0 {
                counts.likes += 1;
            } else {
                counts.dislikes += 1;
            }
            RateOutcome::NewRater
        }
    }

    /// The branch `rate` would take, without changing anything.
    pub fn classify(&self, cred: &UserId, res: &ResourceId, vote: Vote) -> RateOutcome {
        if self.users_to_resources.get(cred, res) {
            if self.ratings_information.get(cred, res) == vote.0 {
                RateOutcome::NoOp
            } else {
                RateOutcome::Flipped
            }
        } else if self.rated_resources.contains(res) {
            RateOutcome::NewRater
        } else {
            RateOutcome::NewResource
        }
    }

    pub fn get_resource_information(&self, res: &ResourceId) -> ResourceRating {
        self.resources_information.get(res).copied().unwrap_or_default()
    }

    pub fn get_number_of_rated_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn get_rated_resource(&self, index: usize) -> Result<&ResourceId, LedgerError> {
        self.resources
            .get(index)
            .ok_or(LedgerError::IndexOutOfRange { index, len: self.resources.len() })
    }

    pub fn resources(&self) -> &[ResourceId] {
        &self.resources
    }

    pub fn is_rated(&self, res: &ResourceId) -> bool {
        self.rated_resources.contains(res)
    }

    pub fn has_rated(&self, user: &UserId, res: &ResourceId) -> bool {
        self.users_to_resources.get(user, res)
    }

    /// Stored vote for the pair; `false` (the storage default) when unrated.
    pub fn stored_vote(&self, user: &UserId, res: &ResourceId) -> Vote {
        Vote(self.ratings_information.get(user, res))
    }

    /// The user's current vote on the resource, if any.
    pub fn vote_of(&self, user: &UserId, res: &ResourceId) -> Option<Vote> {
        self.has_rated(user, res).then(|| self.stored_vote(user, res))
    }

    /// Current votes of one user, in the order the resources were first rated.
    pub fn history_of(&self, user: &UserId) -> Vec<(ResourceId, Vote)> {
        let mine: BTreeSet<&ResourceId> = self.users_to_resources.resources_of(user).collect();
        self.resources
            .iter()
            .filter(|r| mine.contains(r))
            .map(|r| (r.clone(), self.stored_vote(user, r)))
            .collect()
    }

    /// Raters of each resource with their current vote, sorted by user id.
    pub fn raters(&self) -> BTreeMap<&ResourceId, Vec<(&UserId, Vote)>> {
        let mut out: BTreeMap<&ResourceId, Vec<(&UserId, Vote)>> = BTreeMap::new();
        // iter_true walks users in ascending order, so each list comes out sorted.
        for (user, res) in self.users_to_resources.iter_true() {
            out.entry(res).or_default().push((user, self.stored_vote(user, res)));
        }
        out
    }

    /// Byte-stable encoding of the whole state.
    ///
    /// Layout, all integers big-endian `u64`:
    /// tag, resource count, then per resource in insertion order:
    /// url length, url bytes, likes, dislikes, rater count, then per rater in
    /// ascending user id order: the 32 ASCII id bytes and one vote byte.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let raters = self.raters();
        let mut out = Vec::with_capacity(64 + self.resources.len() * 96);
        out.extend_from_slice(STATE_ENCODING_TAG);
        put_u64(&mut out, self.resources.len() as u64);
        for res in &self.resources {
            let counts = self.get_resource_information(res);
            put_u64(&mut out, res.as_str().len() as u64);
            out.extend_from_slice(res.as_str().as_bytes());
            put_u64(&mut out, counts.likes);
            put_u64(&mut out, counts.dislikes);
            let list = raters.get(res).map(Vec::as_slice).unwrap_or(&[]);
            put_u64(&mut out, list.len() as u64);
            for (user, vote) in list {
                out.extend_from_slice(user.as_str().as_bytes());
                out.push(vote.0 as u8);
            }
        }
        out
    }

    pub fn state_digest(&self) -> [u8; 32] {
        Sha256::digest(self.canonical_bytes()).into()
    }

    /// Checks the cross-structure invariants. Used by tests and replay.
    pub fn check_invariants(&self) -> Result<(), String> {
        let listed: BTreeSet<&ResourceId> = self.resources.iter().collect();
        if listed.len() != self.resources.len() {
            return Err("duplicate entry in resources".into());
        }
        if !listed.iter().copied().eq(self.rated_resources.iter()) {
            return Err("resources and rated_resources disagree".into());
        }
        if !listed.iter().copied().eq(self.resources_information.keys()) {
            return Err("resources and resources_information disagree".into());
        }
        let raters = self.raters();
        for res in &self.resources {
            let counts = self.get_resource_information(res);
            let list = raters.get(res).map(Vec::as_slice).unwrap_or(&[]);
            if counts.total() != list.len() as u64 {
                return Err(format!("{res}: counts {counts:?} vs {} raters", list.len()));
            }
            let likes = list.iter().filter(|(_, v)| v.0).count() as u64;
            if likes != counts.likes {
                return Err(format!("{res}: {likes} liking raters vs {} likes", counts.likes));
            }
        }
        for (user, res) in self.ratings_information.iter_true() {
            if !self.users_to_resources.get(user, res) {
                return Err(format!("vote recorded for ({user}, {res}) without rater flag"));
            }
        }
        Ok(())
    }
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_be_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn user(n: u8) -> UserId {
        UserId::parse(format!("{:032x}", n as u128 + 0xabc)).unwrap()
    }

    fn res(path: &str) -> ResourceId {
        ResourceId::parse(&format!("https://www.youtube.com/watch?v={path}")).unwrap()
    }

    #[test]
    fn user_id_rejects_bad_shapes() {
        assert!(UserId::parse("0123456789abcdef0123456789abcdef").is_ok());
        assert!(UserId::parse("0123456789ABCDEF0123456789abcdef").is_err());
        assert!(UserId::parse("0123").is_err());
        assert!(UserId::parse("g123456789abcdef0123456789abcdef").is_err());
    }

    #[test]
    fn resource_canonical_form() {
        let r = ResourceId::parse("HTTPS://WWW.YouTube.com/watch?v=abc#t=10").unwrap();
        assert_eq!(r.as_str(), "https://www.youtube.com/watch?v=abc");
        assert_eq!(ResourceId::parse("https://open.spotify.com/").unwrap().as_str(), "https://open.spotify.com");
        assert_eq!(ResourceId::parse("http://host:8080/").unwrap().as_str(), "http://host:8080");
        assert_eq!(ResourceId::parse("https://github.com/a/b/").unwrap().as_str(), "https://github.com/a/b/");
        assert_eq!(r.host(), "www.youtube.com");
        assert!(ResourceId::parse("").is_err());
        assert!(ResourceId::parse("notaurl").is_err());
        assert!(ResourceId::parse("ftp://host/file").is_err());
        assert!(ResourceId::parse("https://bob:pw@host/x").is_err());
    }

    #[test]
    fn resource_id_serde_requires_canonical_form() {
        let ok: ResourceId = serde_json::from_str("\"https://a.com/x\"").unwrap();
        assert_eq!(ok.as_str(), "https://a.com/x");
        assert!(serde_json::from_str::<ResourceId>("\"HTTPS://A.com/x\"").is_err());
    }

    #[test]
    fn first_like_creates_resource() {
        let (s, o) = LedgerState::new().rate(&user(1), &res("a"), Vote::LIKE);
        assert_eq!(o, RateOutcome::NewResource);
        assert_eq!(s.resources(), &[res("a")]);
        assert_eq!(s.get_resource_information(&res("a")), ResourceRating::new(1, 0));
        assert_eq!(s.vote_of(&user(1), &res("a")), Some(Vote::LIKE));
    }

    #[test]
    fn like_then_dislike_flips() {
        let (s, _) = LedgerState::new().rate(&user(1), &res("a"), Vote::LIKE);
        let (s, o) = s.rate(&user(1), &res("a"), Vote::DISLIKE);
        assert_eq!(o, RateOutcome::Flipped);
        assert_eq!(s.get_resource_information(&res("a")), ResourceRating::new(0, 1));
    }

    #[test]
    fn repeated_like_is_noop() {
        let (s, _) = LedgerState::new().rate(&user(1), &res("a"), Vote::LIKE);
        let (t, o) = s.rate(&user(1), &res("a"), Vote::LIKE);
        assert_eq!(o, RateOutcome::NoOp);
        assert_eq!(s, t);
    }

    #[test]
    fn new_rater_records_vote() {
        // The branch the amended contract fixes: second user on a known
        // resource, who later changes their mind.
        let s = LedgerState::new();
        let (s, _) = s.rate(&user(1), &res("a"), Vote::DISLIKE);
        let (s, o) = s.rate(&user(2), &res("a"), Vote::DISLIKE);
        assert_eq!(o, RateOutcome::NewRater);
        assert_eq!(s.stored_vote(&user(2), &res("a")), Vote::DISLIKE);
        let (s, o) = s.rate(&user(2), &res("a"), Vote::LIKE);
        assert_eq!(o, RateOutcome::Flipped);
        assert_eq!(s.get_resource_information(&res("a")), ResourceRating::new(1, 1));
        let (s2, _) = LedgerState::new().rate(&user(1), &res("b"), Vote::LIKE);
        let (s2, o) = s2.rate(&user(2), &res("b"), Vote::LIKE);
        assert_eq!(o, RateOutcome::NewRater);
        let (s2, o) = s2.rate(&user(2), &res("b"), Vote::LIKE);
        assert_eq!(o, RateOutcome::NoOp);
        assert_eq!(s2.get_resource_information(&res("b")), ResourceRating::new(2, 0));
        s.check_invariants().unwrap();
        s2.check_invariants().unwrap();
    }

    type OriginalState = (BTreeMap<(u8, u8), bool>, BTreeMap<(u8, u8), bool>, BTreeMap<u8, (i64, i64)>);

    /// Direct transcription of the original contract's rate, counters widened to
    /// signed so the defect is observable instead of panicking.
    #[allow(clippy::map_entry)]
    fn original_rate(
        state: &mut OriginalState,
        cred: u8,
        r: u8,
        vote: bool,
    ) {
        let (users_to_resources, ratings_information, info) = state;
        if *users_to_resources.get(&(cred, r)).unwrap_or(&false) {
            if *ratings_information.get(&(cred, r)).unwrap_or(&false) && !vote {
                ratings_information.insert((cred, r), false);
                info.get_mut(&r).unwrap().0 -= 1;
                info.get_mut(&r).unwrap().1 += 1;
            }
            if !*ratings_information.get(&(cred, r)).unwrap_or(&false) && vote {
                ratings_information.insert((cred, r), true);
                info.get_mut(&r).unwrap().0 += 1;
                info.get_mut(&r).unwrap().1 -= 1;
            }
        } else if !info.contains_key(&r) {
            users_to_resources.insert((cred, r), true);
            info.insert(r, if vote { (1, 0) } else { (0, 1) });
            ratings_information.insert((cred, r), vote);
        } else {
            users_to_resources.insert((cred, r), true);
            if vote {
                info.get_mut(&r).unwrap().0 += 1;
            } else {
                info.get_mut(&r).unwrap().1 += 1;
            }
        }
    }

    #[test]
    fn original_rate_underflows_where_amended_rate_does_not() {
        let mut literal = Default::default();
        original_rate(&mut literal, 1, 0, true);
        original_rate(&mut literal, 2, 0, true);
        // second user repeats the like: misread as a flip from dislike
        original_rate(&mut literal, 2, 0, true);
        assert_eq!(literal.2[&0], (3, -1));

        let s = LedgerState::new();
        let (s, _) = s.rate(&user(1), &res("a"), Vote::LIKE);
        let (s, _) = s.rate(&user(2), &res("a"), Vote::LIKE);
        let (s, o) = s.rate(&user(2), &res("a"), Vote::LIKE);
        assert_eq!(o, RateOutcome::NoOp);
        assert_eq!(s.get_resource_information(&res("a")), ResourceRating::new(2, 0));
    }

    #[test]
    fn read_helpers() {
        let s = LedgerState::new();
        assert_eq!(s.get_resource_information(&res("zzz")), ResourceRating::default());
        assert_eq!(s.get_number_of_rated_resources(), 0);
        let (s, _) = s.rate(&user(1), &res("a"), Vote::LIKE);
        let (s, _) = s.rate(&user(2), &res("b"), Vote::DISLIKE);
        let (s, _) = s.rate(&user(2), &res("a"), Vote::DISLIKE);
        assert_eq!(s.get_number_of_rated_resources(), 2);
        assert_eq!(s.get_rated_resource(0).unwrap(), &res("a"));
        assert_eq!(s.get_rated_resource(1).unwrap(), &res("b"));
        assert_eq!(s.get_rated_resource(2), Err(LedgerError::IndexOutOfRange { index: 2, len: 2 }));
        assert_eq!(s.get_resource_information(&res("a")), ResourceRating::new(1, 1));
        assert_eq!(s.history_of(&user(2)), vec![(res("a"), Vote::DISLIKE), (res("b"), Vote::DISLIKE)]);
    }

    #[test]
    fn classify_agrees_with_rate() {
        let mut s = LedgerState::new();
        for (u, r, v) in [(1, "a", true), (1, "a", true), (2, "a", false), (1, "a", false), (3, "b", true)] {
            let predicted = s.classify(&user(u), &res(r), Vote(v));
            assert_eq!(s.apply_rate(&user(u), &res(r), Vote(v)), predicted);
        }
    }

    #[test]
    fn digest_distinguishes_single_vote() {
        let a = LedgerState::new().rate(&user(1), &res("a"), Vote::LIKE).0;
        let b = LedgerState::new().rate(&user(1), &res("a"), Vote::DISLIKE).0;
        assert_ne!(a.state_digest(), b.state_digest());
        assert_eq!(LedgerState::new().state_digest(), LedgerState::default().state_digest());
    }
}
