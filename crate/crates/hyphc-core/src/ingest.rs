//! Parsing of tweet, profile and label files into an indexed corpus.
//!
//! Input formats (documented with examples in the README):
//! - `tweets.jsonl`: one JSON object per line with `tweet_id`, `user_id`,
//!   `created_at` (epoch seconds UTC) and an optional `retweet_of` object
//!   carrying `original_tweet_id`, `original_user_id`,
//!   `original_created_at`.
//! - `profiles.jsonl`: one JSON object per line with the [`UserProfile`]
//!   fields.
//! - `labels.csv`: header `user_id,label` where label is one of `regular`,
//!   `suspended`, `deleted`.
//!
//! Loading is single-threaded streaming; the resulting [`Corpus`] is
//! immutable and safe to share read-only across threads.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The original tweet behind a retweet. Twitter embeds the original tweet's
/// metadata in retweet payloads, so a retweet is usable even when the
/// original tweet itself is absent from the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetweetOf {
    pub original_tweet_id: String,
    pub original_user_id: String,
    pub original_created_at: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub user_id: String,
    /// Epoch seconds UTC.
    pub created_at: i64,
    /// Tweet length in Unicode scalar values. Tweet text itself is never
    /// stored; when an input line carries a `text` field the lengths are
    /// computed at parse time and the text is dropped.
    #[serde(default)]
    pub text_chars: u64,
    /// Tweet length in whitespace-delimited tokens.
    #[serde(default)]
    pub text_words: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweet_of: Option<RetweetOf>,
}

impl TweetRecord {
    pub fn is_retweet(&self) -> bool {
        self.retweet_of.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub followers: u64,
    pub friends: u64,
    pub likes: u64,
    /// Epoch seconds UTC.
    pub account_created_at: i64,
    pub screen_name: String,
    pub bio: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UserClass {
    Regular,
    Suspended,
    Deleted,
}

impl UserClass {
    pub const ALL: [UserClass; 3] = [UserClass::Regular, UserClass::Suspended, UserClass::Deleted];

    pub fn as_str(self) -> &'static str {
        match self {
            UserClass::Regular => "regular",
            UserClass::Suspended => "suspended",
            UserClass::Deleted => "deleted",
        }
    }
}

impl fmt::Display for UserClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UserClass {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "regular" => Ok(UserClass::Regular),
            "suspended" => Ok(UserClass::Suspended),
            "deleted" => Ok(UserClass::Deleted),
            _ => Err(()),
        }
    }
}

/// user id → class.
pub type LabelMap = HashMap<String, UserClass>;

/// All tweets plus the retweet indices the rest of the pipeline works from.
/// Indices store positions into `tweets`.
#[derive(Debug, Default, Clone)]
pub struct Corpus {
    tweets: Vec<TweetRecord>,
    by_original_user: HashMap<String, Vec<usize>>,
    by_retweeter: HashMap<String, Vec<usize>>,
    by_author: HashMap<String, Vec<usize>>,
    originals: HashMap<String, usize>,
}

impl Corpus {
    pub fn from_records(records: Vec<TweetRecord>) -> Result<Corpus> {
        let mut corpus = Corpus {
            tweets: Vec::with_capacity(records.len()),
            ..Corpus::default()
        };
        for record in records {
            corpus.push(record)?;
        }
        Ok(corpus)
    }

    fn push(&mut self, record: TweetRecord) -> Result<()> {
        let idx = self.tweets.len();
        if self.originals.insert(record.tweet_id.clone(), idx).is_some() {
            return Err(Error::DuplicateTweetId(record.tweet_id));
        }
        if let Some(rt) = &record.retweet_of {
            self.by_original_user
                .entry(rt.original_user_id.clone())
                .or_default()
                .push(idx);
            self.by_retweeter
                .entry(record.user_id.clone())
                .or_default()
                .push(idx);
        }
        self.by_author
            .entry(record.user_id.clone())
            .or_default()
            .push(idx);
        self.tweets.push(record);
        Ok(())
    }

    pub fn tweets(&self) -> &[TweetRecord] {
        &self.tweets
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn tweet_by_id(&self, tweet_id: &str) -> Option<&TweetRecord> {
        self.originals.get(tweet_id).map(|&i| &self.tweets[i])
    }

    /// Retweet records targeting the given account.
    pub fn retweets_of(&self, original_user_id: &str) -> impl Iterator<Item = &TweetRecord> {
        self.by_original_user
            .get(original_user_id)
            .into_iter()
            .flatten()
            .map(|&i| &self.tweets[i])
    }

    /// Retweet records made by the given user.
    pub fn retweets_by(&self, user_id: &str) -> impl Iterator<Item = &TweetRecord> {
        self.by_retweeter
            .get(user_id)
            .into_iter()
            .flatten()
            .map(|&i| &self.tweets[i])
    }

    /// Accounts that have been retweeted at least once.
    pub fn retweeted_accounts(&self) -> impl Iterator<Item = &str> {
        self.by_original_user.keys().map(String::as_str)
    }

    /// Users that have retweeted at least once.
    pub fn retweeters(&self) -> impl Iterator<Item = &str> {
        self.by_retweeter.keys().map(String::as_str)
    }

    /// All tweets authored by the given user (retweets included).
    pub fn tweets_by(&self, user_id: &str) -> impl Iterator<Item = &TweetRecord> {
        self.by_author
            .get(user_id)
            .into_iter()
            .flatten()
            .map(|&i| &self.tweets[i])
    }

    /// Canonical re-serialization, one JSON object per line in input order.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = BufWriter::new(file);
        for t in &self.tweets {
            serde_json::to_writer(&mut out, t).map_err(std::io::Error::other)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Deserialize)]
struct RawTweetRecord {
    #[serde(flatten)]
    record: TweetRecord,
    #[serde(default)]
    text: Option<String>,
}

/// Parse one JSONL line into a tweet record. A `text` field, when present,
/// is reduced to character/word counts and discarded.
pub fn parse_tweet_record(line: &str, lineno: usize) -> Result<TweetRecord> {
    let raw: RawTweetRecord = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
        line: lineno,
        reason: e.to_string(),
    })?;
    let mut record = raw.record;
    if let Some(text) = raw.text {
        record.text_chars = text.chars().count() as u64;
        record.text_words = text.split_whitespace().count() as u64;
    }
    if record.created_at < 0 {
        return Err(Error::MalformedRecord {
            line: lineno,
            reason: format!("negative created_at {}", record.created_at),
        });
    }
    if let Some(rt) = &record.retweet_of {
        if rt.original_created_at < 0 {
            return Err(Error::MalformedRecord {
                line: lineno,
                reason: format!("negative original_created_at {}", rt.original_created_at),
            });
        }
    }
    Ok(record)
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut corpus = Corpus::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        corpus.push(parse_tweet_record(&line, i + 1)?)?;
    }
    Ok(corpus)
}

pub fn load_profiles(path: &Path) -> Result<HashMap<String, UserProfile>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut profiles = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let profile: UserProfile =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: i + 1,
                reason: e.to_string(),
            })?;
        let user_id = profile.user_id.clone();
        if profiles.insert(user_id.clone(), profile).is_some() {
            return Err(Error::DuplicateUser(user_id));
        }
    }
    Ok(profiles)
}

pub fn load_labels(path: &Path) -> Result<LabelMap> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    match lines.next().transpose()? {
        Some(header) if header.trim() == "user_id,label" => {}
        other => {
            return Err(Error::MalformedRecord {
                line: 1,
                reason: format!("expected `user_id,label` header, got {other:?}"),
            })
        }
    }
    let mut labels = LabelMap::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (user_id, label) = line.split_once(',').ok_or(Error::MalformedRecord {
            line: i + 2,
            reason: "expected `user_id,label`".into(),
        })?;
        let class = UserClass::from_str(label.trim()).map_err(|()| Error::UnknownLabel {
            user_id: user_id.to_string(),
            label: label.to_string(),
        })?;
        if labels.insert(user_id.to_string(), class).is_some() {
            return Err(Error::DuplicateUser(user_id.to_string()));
        }
    }
    Ok(labels)
}
