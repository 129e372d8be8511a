//! Influencer ranking by distinct-retweeter count and the engaged-user set.
//!
//! An account's `rt_score` is the number of distinct users that retweeted it
//! at least once. The top `p` accounts by score form the Influencer set;
//! every user with at least one retweet of an Influencer belongs to the
//! engaged-user set.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::ingest::Corpus;

/// Top-`p` accounts ordered by `rt_score` descending, ties broken by id
/// ascending so feature column order is reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluencerSet {
    ranked: Vec<(String, usize)>,
    rank_of: HashMap<String, usize>,
}

impl InfluencerSet {
    /// Rebuild a set from `(influencer_id, rt_score)` pairs already in rank
    /// order, e.g. read back from a stage artifact.
    pub fn from_ranked(ranked: Vec<(String, usize)>) -> InfluencerSet {
        let rank_of = ranked
            .iter()
            .enumerate()
            .map(|(rank, (id, _))| (id.clone(), rank))
            .collect();
        InfluencerSet { ranked, rank_of }
    }

    /// `(influencer_id, rt_score)` pairs in rank order.
    pub fn ranked(&self) -> &[(String, usize)] {
        &self.ranked
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }

    pub fn rank_of(&self, influencer_id: &str) -> Option<usize> {
        self.rank_of.get(influencer_id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.ranked.iter().map(|(id, _)| id.as_str())
    }
}

/// Users with at least one retweet of some Influencer. Ordered so that row
/// order of downstream matrices is deterministic.
pub type EngagedUserSet = BTreeSet<String>;

/// The three per-rank series behind the influencer-selection trade-off:
/// rt_score by rank, cumulative engaged-user count and its marginal growth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluencerCurves {
    pub rt_score: Vec<usize>,
    pub cumulative_users: Vec<usize>,
    pub marginal_users: Vec<usize>,
}

/// Distinct-retweeter count per retweeted account. Accounts never retweeted
/// are absent from the map.
pub fn compute_rt_scores(corpus: &Corpus) -> HashMap<String, usize> {
    let mut retweeters: HashMap<&str, HashSet<&str>> = HashMap::new();
    for tweet in corpus.tweets() {
        if let Some(rt) = &tweet.retweet_of {
            retweeters
                .entry(rt.original_user_id.as_str())
                .or_default()
                .insert(tweet.user_id.as_str());
        }
    }
    retweeters
        .into_iter()
        .map(|(id, users)| (id.to_string(), users.len()))
        .collect()
}

/// Take the top `p` accounts by score. When fewer than `p` accounts have a
/// score, all of them are returned with a warning.
pub fn select_top_influencers(scores: &HashMap<String, usize>, p: usize) -> InfluencerSet {
    assert!(p >= 1, "p must be at least 1");
    let mut ranked: Vec<(String, usize)> = scores
        .iter()
        .map(|(id, &score)| (id.clone(), score))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if p < ranked.len() {
        ranked.truncate(p);
    } else if p > ranked.len() {
        log::warn!(
            "requested top {p} influencers but only {} accounts were ever retweeted",
            ranked.len()
        );
    }
    let rank_of = ranked
        .iter()
        .enumerate()
        .map(|(rank, (id, _))| (id.clone(), rank))
        .collect();
    InfluencerSet { ranked, rank_of }
}

/// Exactly the users with at least one retweet of any Influencer.
pub fn build_user_set(corpus: &Corpus, influencers: &InfluencerSet) -> EngagedUserSet {
    assert!(!influencers.is_empty(), "influencer set must be nonempty");
    let mut users = EngagedUserSet::new();
    for id in influencers.ids() {
        for retweet in corpus.retweets_of(id) {
            users.insert(retweet.user_id.clone());
        }
    }
    users
}

/// The three aligned series over ranks `0..max_p`. `cumulative_users[k]` is
/// `|U|` when the Influencer set is the top `k+1` accounts.
pub fn influencer_curves(corpus: &Corpus, max_p: usize) -> InfluencerCurves {
    assert!(max_p >= 1, "max_p must be at least 1");
    let scores = compute_rt_scores(corpus);
    let top = select_top_influencers(&scores, max_p);

    let mut rt_score = Vec::with_capacity(top.len());
    let mut cumulative_users = Vec::with_capacity(top.len());
    let mut marginal_users = Vec::with_capacity(top.len());
    let mut seen: HashSet<&str> = HashSet::new();
    for (id, score) in top.ranked() {
        let before = seen.len();
        for retweet in corpus.retweets_of(id) {
            seen.insert(retweet.user_id.as_str());
        }
        rt_score.push(*score);
        cumulative_users.push(seen.len());
        marginal_users.push(seen.len() - before);
    }
    InfluencerCurves {
        rt_score,
        cumulative_users,
        marginal_users,
    }
}
