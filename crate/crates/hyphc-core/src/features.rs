//! Interaction features `F`, the 13 user-level features, and
//! standardization.
//!
//! For every (user, influencer) pair, `F` carries the median retweet delay
//! and the retweet count, interleaved in influencer rank order:
//! `[delta_1, n_1, delta_2, n_2, ...]`. Pairs with no retweets get
//! `(SENTINEL, 0)`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::influencers::{EngagedUserSet, InfluencerSet};
use crate::ingest::{Corpus, UserProfile};

/// Median delay stand-in for user–influencer pairs with no retweets. Large
/// and negative so it can never collide with a real delay.
pub const SENTINEL: f64 = -1e6;

/// Median retweet delay and retweet count for one (user, influencer) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionPair {
    pub delay_median: f64,
    pub retweet_count: usize,
}

impl InteractionPair {
    pub const EMPTY: InteractionPair = InteractionPair {
        delay_median: SENTINEL,
        retweet_count: 0,
    };
}

/// Absolute gap in seconds between a retweet and its original tweet. The
/// absolute value guards against clock skew in the source data.
pub fn delay(retweet_time: i64, original_time: i64) -> u64 {
    retweet_time.abs_diff(original_time)
}

/// Median of a sorted slice; even counts take the mean of the two middle
/// values.
fn median_sorted(values: &[u64]) -> f64 {
    let n = values.len();
    assert!(n > 0);
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] as f64 + values[n / 2] as f64) / 2.0
    }
}

/// Median delay and count of `user`'s retweets of `influencer`.
pub fn interaction_pair(corpus: &Corpus, user: &str, influencer: &str) -> InteractionPair {
    let mut delays: Vec<u64> = corpus
        .retweets_by(user)
        .filter_map(|t| {
            let rt = t.retweet_of.as_ref().expect("retweets_by yields retweets");
            (rt.original_user_id == influencer).then(|| delay(t.created_at, rt.original_created_at))
        })
        .collect();
    if delays.is_empty() {
        return InteractionPair::EMPTY;
    }
    delays.sort_unstable();
    InteractionPair {
        delay_median: median_sorted(&delays),
        retweet_count: delays.len(),
    }
}

/// The `|U| x 2p` interaction matrix. Rows follow the engaged-user set's
/// order; columns interleave `(delta, n)` in influencer rank order.
pub fn build_feature_matrix(
    corpus: &Corpus,
    users: &EngagedUserSet,
    influencers: &InfluencerSet,
) -> FeatureMatrix {
    let p = influencers.len();
    let ids: Vec<String> = users.iter().cloned().collect();
    let mut columns = Vec::with_capacity(2 * p);
    for rank in 0..p {
        columns.push(format!("delta_{:03}", rank + 1));
        columns.push(format!("n_{:03}", rank + 1));
    }

    let rows: Vec<Vec<f64>> = ids
        .par_iter()
        .map(|user| {
            // Group this user's retweet delays by influencer rank.
            let mut delays: Vec<Vec<u64>> = vec![Vec::new(); p];
            for t in corpus.retweets_by(user) {
                let rt = t.retweet_of.as_ref().expect("retweets_by yields retweets");
                if let Some(rank) = influencers.rank_of(&rt.original_user_id) {
                    delays[rank].push(delay(t.created_at, rt.original_created_at));
                }
            }
            let mut row = Vec::with_capacity(2 * p);
            for d in &mut delays {
                if d.is_empty() {
                    row.push(SENTINEL);
                    row.push(0.0);
                } else {
                    d.sort_unstable();
                    row.push(median_sorted(d));
                    row.push(d.len() as f64);
                }
            }
            row
        })
        .collect();

    let mut values = Array2::zeros((ids.len(), 2 * p));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    FeatureMatrix::new(ids, columns, values)
}

pub const USER_LEVEL_COLUMNS: [&str; 13] = [
    "total_tweets",
    "retweet_count",
    "friends",
    "followers",
    "total_likes",
    "friends_followers_ratio",
    "account_age_seconds",
    "screen_name_chars",
    "bio_chars",
    "bio_words",
    "mean_tweet_chars",
    "mean_tweet_words",
    "screen_name_words",
];

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// The 13 user-level features in [`USER_LEVEL_COLUMNS`] order. Aggregates
/// over zero tweets default to 0.
pub fn user_level_features(
    corpus: &Corpus,
    profiles: &HashMap<String, UserProfile>,
    user: &str,
    reference_time: i64,
) -> Result<[f64; 13]> {
    let profile = profiles
        .get(user)
        .ok_or_else(|| Error::MissingProfile(user.to_string()))?;

    let mut total_tweets = 0usize;
    let mut retweets = 0usize;
    let mut chars = 0u64;
    let mut words = 0u64;
    for t in corpus.tweets_by(user) {
        total_tweets += 1;
        if t.is_retweet() {
            retweets += 1;
        }
        chars += t.text_chars;
        words += t.text_words;
    }
    let mean_chars = if total_tweets == 0 { 0.0 } else { chars as f64 / total_tweets as f64 };
    let mean_words = if total_tweets == 0 { 0.0 } else { words as f64 / total_tweets as f64 };

    Ok([
        total_tweets as f64,
        retweets as f64,
        profile.friends as f64,
        profile.followers as f64,
        profile.likes as f64,
        profile.friends as f64 / (profile.followers as f64 + 1.0),
        (reference_time - profile.account_created_at) as f64,
        profile.screen_name.chars().count() as f64,
        profile.bio.chars().count() as f64,
        word_count(&profile.bio) as f64,
        mean_chars,
        mean_words,
        word_count(&profile.screen_name) as f64,
    ])
}

/// User-level feature matrix over the engaged-user set, in set order.
pub fn build_user_level_matrix(
    corpus: &Corpus,
    profiles: &HashMap<String, UserProfile>,
    users: &EngagedUserSet,
    reference_time: i64,
) -> Result<FeatureMatrix> {
    let ids: Vec<String> = users.iter().cloned().collect();
    let rows = ids
        .iter()
        .map(|u| user_level_features(corpus, profiles, u, reference_time))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Array2::zeros((ids.len(), 13));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    let columns = USER_LEVEL_COLUMNS.iter().map(|c| c.to_string()).collect();
    Ok(FeatureMatrix::new(ids, columns, values))
}

/// Per-column mean and standard deviation; constant columns keep std 1 so
/// they standardize to 0 instead of NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(matrix: &FeatureMatrix) -> Scaler {
        let n = matrix.n_rows().max(1) as f64;
        let mut mean = Vec::with_capacity(matrix.n_cols());
        let mut std = Vec::with_capacity(matrix.n_cols());
        for col in matrix.values().columns() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            mean.push(m);
            std.push(if s > 0.0 { s } else { 1.0 });
        }
        Scaler {
            columns: matrix.columns().to_vec(),
            mean,
            std,
        }
    }

    pub fn apply(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        if matrix.columns() != self.columns.as_slice() {
            return Err(Error::RowMismatch("scaler fitted on different columns".into()));
        }
        let mut values = matrix.values().clone();
        for (j, mut col) in values.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - self.mean[j]) / self.std[j]);
        }
        Ok(matrix.with_values(matrix.columns().to_vec(), values))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "column,mean,std")?;
        for ((c, m), s) in self.columns.iter().zip(&self.mean).zip(&self.std) {
            writeln!(out, "{c},{m},{s}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Scaler> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        match lines.next().transpose()? {
            Some(h) if h.trim() == "column,mean,std" => {}
            other => {
                return Err(Error::MalformedRecord {
                    line: 1,
                    reason: format!("expected `column,mean,std` header, got {other:?}"),
                })
            }
        }
        let mut columns = Vec::new();
        let mut mean = Vec::new();
        let mut std = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::MalformedRecord {
                    line: i + 2,
                    reason: "expected 3 fields".into(),
                });
            }
            columns.push(parts[0].to_string());
            mean.push(parts[1].parse().map_err(|_| Error::MalformedRecord {
                line: i + 2,
                reason: "bad mean".into(),
            })?);
            std.push(parts[2].parse().map_err(|_| Error::MalformedRecord {
                line: i + 2,
                reason: "bad std".into(),
            })?);
        }
        Ok(Scaler { columns, mean, std })
    }
}

/// Column-wise z-scores plus the fitted scaler.
pub fn standardize(matrix: &FeatureMatrix) -> (FeatureMatrix, Scaler) {
    let scaler = Scaler::fit(matrix);
    let standardized = scaler.apply(matrix).expect("scaler fitted on same columns");
    (standardized, scaler)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{RetweetOf, TweetRecord};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn retweet(k: usize, user: &str, influencer: &str, orig_time: i64, rt_time: i64) -> TweetRecord {
        TweetRecord {
            tweet_id: format!("rt{k}"),
            user_id: user.to_string(),
            created_at: rt_time,
            text_chars: 0,
            text_words: 0,
            retweet_of: Some(RetweetOf {
                original_tweet_id: format!("orig-{influencer}-{orig_time}"),
                original_user_id: influencer.to_string(),
                original_created_at: orig_time,
            }),
        }
    }

    fn influencer_set(ids: &[&str]) -> InfluencerSet {
        // Descending fake scores keep the given order.
        let scores: HashMap<String, usize> = ids
            .iter()
            .enumerate()
            .map(|(k, id)| (id.to_string(), 100 - k))
            .collect();
        crate::influencers::select_top_influencers(&scores, ids.len())
    }

    #[test]
    fn delay_is_absolute() {
        assert_eq!(delay(1005, 1000), 5);
        assert_eq!(delay(1000, 1000), 0);
        assert_eq!(delay(999, 1000), 1);
    }

    #[test]
    fn odd_count_median() {
        let corpus = Corpus::from_records(vec![
            retweet(0, "u1", "i1", 1000, 1002),
            retweet(1, "u1", "i1", 1000, 1004),
            retweet(2, "u1", "i1", 1000, 1010),
        ])
        .unwrap();
        let pair = interaction_pair(&corpus, "u1", "i1");
        assert_eq!(pair.delay_median, 4.0);
        assert_eq!(pair.retweet_count, 3);
    }

    #[test]
    fn even_count_median_is_mean_of_middles() {
        let corpus = Corpus::from_records(vec![
            retweet(0, "u1", "i1", 1000, 1002),
            retweet(1, "u1", "i1", 1000, 1004),
        ])
        .unwrap();
        let pair = interaction_pair(&corpus, "u1", "i1");
        assert_eq!(pair.delay_median, 3.0);
        assert_eq!(pair.retweet_count, 2);
    }

    #[test]
    fn no_retweets_gives_sentinel() {
        let corpus = Corpus::from_records(vec![]).unwrap();
        let pair = interaction_pair(&corpus, "u1", "i1");
        assert_eq!(pair.delay_median, SENTINEL);
        assert_eq!(pair.retweet_count, 0);
        assert_eq!(SENTINEL, -1e6);
    }

    #[test]
    fn matrix_row_hand_computed() {
        // p=2: user retweeted i1 at delays {10, 20, 60}, never i2.
        let corpus = Corpus::from_records(vec![
            retweet(0, "u1", "i1", 1000, 1010),
            retweet(1, "u1", "i1", 1000, 1020),
            retweet(2, "u1", "i1", 1000, 1060),
        ])
        .unwrap();
        let influencers = influencer_set(&["i1", "i2"]);
        let users: EngagedUserSet = ["u1".to_string()].into();
        let f = build_feature_matrix(&corpus, &users, &influencers);
        assert_eq!(f.row(0).to_vec(), vec![20.0, 3.0, SENTINEL, 0.0]);
    }

    #[test]
    fn matrix_respects_column_order() {
        let corpus = Corpus::from_records(vec![retweet(0, "u1", "i2", 1000, 1007)]).unwrap();
        let influencers = influencer_set(&["i1", "i2"]);
        let users: EngagedUserSet = ["u1".to_string()].into();
        let f = build_feature_matrix(&corpus, &users, &influencers);
        assert_eq!(f.row(0).to_vec(), vec![SENTINEL, 0.0, 7.0, 1.0]);
    }

    #[test]
    fn user_level_features_hand_computed() {
        let mut tweets = vec![retweet(0, "u1", "i1", 1000, 1010)];
        tweets[0].text_chars = 10;
        tweets[0].text_words = 2;
        tweets.push(TweetRecord {
            tweet_id: "t1".into(),
            user_id: "u1".into(),
            created_at: 2000,
            text_chars: 20,
            text_words: 4,
            retweet_of: None,
        });
        let corpus = Corpus::from_records(tweets).unwrap();
        let profiles = HashMap::from([(
            "u1".to_string(),
            UserProfile {
                user_id: "u1".into(),
                followers: 0,
                friends: 7,
                likes: 3,
                account_created_at: 500,
                screen_name: "some user".into(),
                bio: "a short bio".into(),
            },
        )]);
        let f = user_level_features(&corpus, &profiles, "u1", 10_500).unwrap();
        assert_eq!(f[0], 2.0); // total tweets
        assert_eq!(f[1], 1.0); // retweets
        assert_eq!(f[2], 7.0); // friends
        assert_eq!(f[3], 0.0); // followers
        assert_eq!(f[5], 7.0); // 7 / (0 + 1)
        assert_eq!(f[6], 10_000.0); // account age
        assert_eq!(f[7], 9.0); // screen name chars
        assert_eq!(f[9], 3.0); // bio words
        assert_eq!(f[10], 15.0); // mean tweet chars
        assert_eq!(f[11], 3.0); // mean tweet words
        assert_eq!(f[12], 2.0); // screen name words
    }

    #[test]
    fn zero_tweets_default_to_zero_aggregates() {
        let corpus = Corpus::from_records(vec![]).unwrap();
        let profiles = HashMap::from([(
            "u1".to_string(),
            UserProfile {
                user_id: "u1".into(),
                followers: 5,
                friends: 5,
                likes: 0,
                account_created_at: 0,
                screen_name: "x".into(),
                bio: String::new(),
            },
        )]);
        let f = user_level_features(&corpus, &profiles, "u1", 100).unwrap();
        assert_eq!(f[0], 0.0);
        assert_eq!(f[1], 0.0);
        assert_eq!(f[10], 0.0);
        assert_eq!(f[11], 0.0);
    }

    #[test]
    fn missing_profile_errors() {
        let corpus = Corpus::from_records(vec![]).unwrap();
        let profiles = HashMap::new();
        assert!(matches!(
            user_level_features(&corpus, &profiles, "ghost", 0),
            Err(Error::MissingProfile(_))
        ));
    }

    #[test]
    fn standardize_zero_means_and_constant_columns() {
        let m = FeatureMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["x".into(), "k".into()],
            array![[1.0, 5.0], [2.0, 5.0], [6.0, 5.0]],
        );
        let (std, scaler) = standardize(&m);
        for col in std.values().columns() {
            assert_abs_diff_eq!(col.sum() / 3.0, 0.0, epsilon = 1e-12);
        }
        // Constant column maps to exact zeros.
        assert_eq!(std.values().column(1).to_vec(), vec![0.0, 0.0, 0.0]);
        // Re-applying the fitted scaler reproduces standardize.
        assert_eq!(scaler.apply(&m).unwrap(), std);
    }

    #[test]
    fn scaler_csv_round_trip() {
        let m = FeatureMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            array![[1.0, -3.5], [2.0, 4.25]],
        );
        let (_, scaler) = standardize(&m);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scaler.csv");
        scaler.write_csv(&path).unwrap();
        assert_eq!(Scaler::read_csv(&path).unwrap(), scaler);
    }

    /// Random retweet events: (user, influencer, orig_time, delay).
    fn random_retweets() -> impl Strategy<Value = Vec<(usize, usize, i64, i64)>> {
        prop::collection::vec((0usize..15, 0usize..5, 0i64..10_000, 0i64..5_000), 1..120)
    }

    proptest! {
        #[test]
        fn tweet_order_does_not_change_matrix(events in random_retweets(), rotate in 0usize..120) {
            let build = |records: Vec<TweetRecord>| {
                let corpus = Corpus::from_records(records).unwrap();
                let influencers = influencer_set(&["i0", "i1", "i2", "i3", "i4"]);
                let users = crate::influencers::build_user_set(&corpus, &influencers);
                build_feature_matrix(&corpus, &users, &influencers)
            };
            let records: Vec<TweetRecord> = events
                .iter()
                .enumerate()
                .map(|(k, &(u, i, t0, d))| {
                    retweet(k, &format!("u{u}"), &format!("i{i}"), t0, t0 + d)
                })
                .collect();
            let mut rotated = records.clone();
            rotated.rotate_left(rotate % records.len().max(1));
            prop_assert_eq!(build(records), build(rotated));
        }

        #[test]
        fn sentinel_pairs_with_zero_counts(events in random_retweets()) {
            let records: Vec<TweetRecord> = events
                .iter()
                .enumerate()
                .map(|(k, &(u, i, t0, d))| {
                    retweet(k, &format!("u{u}"), &format!("i{i}"), t0, t0 + d)
                })
                .collect();
            let corpus = Corpus::from_records(records).unwrap();
            let influencers = influencer_set(&["i0", "i1", "i2", "i3", "i4"]);
            let users = crate::influencers::build_user_set(&corpus, &influencers);
            let f = build_feature_matrix(&corpus, &users, &influencers);
            for row in f.values().rows() {
                for pair in row.to_vec().chunks(2) {
                    let (delta, n) = (pair[0], pair[1]);
                    prop_assert_eq!(delta == SENTINEL, n == 0.0);
                    if n > 0.0 {
                        prop_assert!(delta >= 0.0);
                    }
                }
            }
        }
    }
}
