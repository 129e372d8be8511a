//! Deterministic synthetic corpora with planted organic and collusive
//! populations.
//!
//! Organic users spread their retweets across all influencers with slow
//! log-normal delays; collusive groups fixate on a couple of targets and
//! react fast. Profiles are drawn from class-independent distributions on
//! purpose: the profile-only feature set is supposed to be the weak
//! baseline, so the signal lives in the interaction patterns.

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};

use crate::error::{Error, Result};
use crate::ingest::{RetweetOf, TweetRecord, UserClass, UserProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub horizon_seconds: i64,
    pub n_influencers: usize,
    /// Poisson mean of original tweets per influencer.
    pub tweets_per_influencer: f64,
    pub n_regular: usize,
    pub n_collusive_groups: usize,
    pub group_size: usize,
    /// Own-pool influencers fixated on by a collusive group: its camp's
    /// beacon plus `targets_per_group - 1` rotating group-specific ones.
    pub targets_per_group: usize,
    /// Log-normal delay parameters, in log-seconds.
    pub mu_organic: f64,
    pub sigma_organic: f64,
    pub mu_collusive: f64,
    pub sigma_collusive: f64,
    /// Per-tweet retweet probability of an organic user for the top-ranked
    /// influencer; decays linearly with rank.
    pub p_organic: f64,
    /// Per-target-tweet retweet probability of a collusive member for its
    /// camp's targets.
    pub p_collusive: f64,
    /// Fraction of collusive groups labeled suspended; the rest deleted.
    pub suspended_fraction: f64,
    /// Multiplier on `p_organic` for the background browsing collusive
    /// accounts keep up inside their own pool beside the target fixation.
    /// May exceed 1: a narrow niche gets more attention per influencer.
    /// The per-tweet probability is capped at 1 regardless.
    pub background_rate: f64,
    /// The first influencers are "mainstream": collusive accounts never
    /// touch them, which gives the regular class its own signature columns
    /// instead of only lacking the collusive ones.
    pub mainstream_influencers: usize,
    /// Influencers right after the mainstream block that every collusive
    /// group fixates on regardless of camp. They make the two collusive
    /// classes genuinely related instead of merely non-regular.
    pub shared_targets: usize,
    /// Log-std of the per-user activity multiplier. Spreads retweet counts
    /// within every class so count features alone stay weak.
    pub activity_sigma: f64,
    /// Home-pool lean of the collusive background: a member browses its own
    /// camp's pool at `background_rate * (1 + camp_bias)` and the other
    /// camp's at `background_rate * (1 - camp_bias)`. Spreads the camp
    /// signal thinly over every pool column instead of concentrating it in
    /// the fixation targets.
    pub camp_bias: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            horizon_seconds: 30 * 24 * 3600,
            n_influencers: 20,
            tweets_per_influencer: 60.0,
            n_regular: 1250,
            n_collusive_groups: 26,
            group_size: 50,
            targets_per_group: 1,
            mu_organic: 8.0,
            sigma_organic: 0.8,
            mu_collusive: 4.0,
            sigma_collusive: 0.5,
            p_organic: 0.25,
            p_collusive: 0.9,
            suspended_fraction: 0.5,
            background_rate: 0.66,
            mainstream_influencers: 2,
            shared_targets: 2,
            activity_sigma: 0.2,
            camp_bias: 0.8,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon_seconds <= 0 {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        if self.n_influencers == 0 {
            return Err(Error::InvalidConfig("need at least one influencer".into()));
        }
        for (name, p) in [
            ("p_organic", self.p_organic),
            ("p_collusive", self.p_collusive),
            ("suspended_fraction", self.suspended_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if self.background_rate < 0.0 {
            return Err(Error::InvalidConfig("background_rate must be nonnegative".into()));
        }
        for (name, s) in [
            ("sigma_organic", self.sigma_organic),
            ("sigma_collusive", self.sigma_collusive),
        ] {
            if s <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {s}")));
            }
        }
        if self.activity_sigma < 0.0 {
            return Err(Error::InvalidConfig("activity_sigma must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.camp_bias) {
            return Err(Error::InvalidConfig(format!(
                "camp_bias must be in [0, 1], got {}",
                self.camp_bias
            )));
        }
        if !(1..=3).contains(&self.targets_per_group) {
            return Err(Error::InvalidConfig(format!(
                "targets_per_group must be 1..=3, got {}",
                self.targets_per_group
            )));
        }
        if self.targets_per_group > self.n_influencers {
            return Err(Error::InvalidConfig(
                "targets_per_group exceeds the influencer count".into(),
            ));
        }
        if self.n_collusive_groups > 0
            && self.n_influencers < self.mainstream_influencers + self.shared_targets + 2
        {
            return Err(Error::InvalidConfig(
                "collusive groups need at least two influencers beyond the mainstream and shared blocks".into(),
            ));
        }
        Ok(())
    }
}

/// A complete generated corpus ready to be written or fed to the pipeline.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub tweets: Vec<TweetRecord>,
    pub profiles: Vec<UserProfile>,
    /// (user id, class), in generation order.
    pub labels: Vec<(String, UserClass)>,
}

impl SynthOutput {
    /// Write `tweets.jsonl`, `profiles.jsonl` and `labels.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut out = BufWriter::new(std::fs::File::create(dir.join("tweets.jsonl"))?);
        for t in &self.tweets {
            serde_json::to_writer(&mut out, t).map_err(|e| Error::Io(e.into()))?;
            writeln!(out)?;
        }
        out.flush()?;

        let mut out = BufWriter::new(std::fs::File::create(dir.join("profiles.jsonl"))?);
        for p in &self.profiles {
            serde_json::to_writer(&mut out, p).map_err(|e| Error::Io(e.into()))?;
            writeln!(out)?;
        }
        out.flush()?;

        let mut out = BufWriter::new(std::fs::File::create(dir.join("labels.csv"))?);
        writeln!(out, "user_id,label")?;
        for (id, class) in &self.labels {
            writeln!(out, "{id},{class}")?;
        }
        out.flush()?;
        Ok(())
    }
}

const WORDS: [&str; 24] = [
    "coffee", "runner", "photos", "daily", "news", "fan", "music", "travel", "dog", "games",
    "opinions", "mine", "retired", "student", "writer", "local", "sports", "crypto", "artist",
    "parent", "reader", "hiker", "foodie", "gardener",
];

fn random_name(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(5..=12);
    (0..len)
        .map(|_| (b'a' + rng.gen_range(0..26u8)) as char)
        .collect()
}

fn random_bio(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(0..=12);
    (0..n)
        .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_profile(rng: &mut ChaCha8Rng, user_id: &str) -> UserProfile {
    let followers = LogNormal::new(6.0, 1.5).expect("valid params").sample(rng) as u64;
    let friends = LogNormal::new(5.5, 1.2).expect("valid params").sample(rng) as u64;
    let likes = LogNormal::new(4.0, 2.0).expect("valid params").sample(rng) as u64;
    UserProfile {
        user_id: user_id.to_string(),
        followers,
        friends,
        likes,
        // Accounts opened up to five years before the horizon start.
        account_created_at: -rng.gen_range(1..5 * 365 * 24 * 3600i64),
        screen_name: random_name(rng),
        bio: random_bio(rng),
    }
}

struct TweetCounter(usize);

impl TweetCounter {
    fn next(&mut self) -> String {
        let id = format!("t{:08}", self.0);
        self.0 += 1;
        id
    }
}

fn tweet_lengths(rng: &mut ChaCha8Rng) -> (u64, u64) {
    let chars = rng.gen_range(10..280u64);
    (chars, (chars / 6).max(1))
}

/// Generate the full corpus. Stream order is fixed, so a seed pins every
/// byte of the output files.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut counter = TweetCounter(0);
    let mut tweets = Vec::new();
    let mut profiles = Vec::new();
    let mut labels = Vec::new();

    // Influencer originals, uniform over the horizon. Influencer 0 is the
    // intended top rank; organic attention decays with the index.
    let poisson = Poisson::new(config.tweets_per_influencer).map_err(|_| {
        Error::InvalidConfig("tweets_per_influencer must be positive".into())
    })?;
    let mut originals: Vec<Vec<(String, i64)>> = Vec::with_capacity(config.n_influencers);
    for i in 0..config.n_influencers {
        let user_id = format!("inf_{i:03}");
        let count = poisson.sample(&mut rng) as usize;
        let mut own = Vec::with_capacity(count);
        for _ in 0..count {
            let tweet_id = counter.next();
            let created_at = rng.gen_range(0..config.horizon_seconds);
            let (text_chars, text_words) = tweet_lengths(&mut rng);
            tweets.push(TweetRecord {
                tweet_id: tweet_id.clone(),
                user_id: user_id.clone(),
                created_at,
                text_chars,
                text_words,
                retweet_of: None,
            });
            own.push((tweet_id, created_at));
        }
        profiles.push(random_profile(&mut rng, &user_id));
        labels.push((user_id, UserClass::Regular));
        originals.push(own);
    }

    let organic_delay = LogNormal::new(config.mu_organic, config.sigma_organic)
        .expect("sigma checked positive");
    let collusive_delay = LogNormal::new(config.mu_collusive, config.sigma_collusive)
        .expect("sigma checked positive");
    let activity = LogNormal::new(0.0, config.activity_sigma.max(1e-12))
        .expect("sigma checked nonnegative");

    let emit_retweet = |rng: &mut ChaCha8Rng,
                            counter: &mut TweetCounter,
                            tweets: &mut Vec<TweetRecord>,
                            user_id: &str,
                            influencer: usize,
                            original: &(String, i64),
                            delay: &LogNormal<f64>| {
        let gap = delay.sample(rng).round().max(1.0) as i64;
        let (text_chars, text_words) = tweet_lengths(rng);
        tweets.push(TweetRecord {
            tweet_id: counter.next(),
            user_id: user_id.to_string(),
            created_at: original.1 + gap,
            text_chars,
            text_words,
            retweet_of: Some(RetweetOf {
                original_tweet_id: original.0.clone(),
                original_user_id: format!("inf_{influencer:03}"),
                original_created_at: original.1,
            }),
        });
    };

    // Background browsing, scaled per influencer by the user's activity
    // multiplier and a per-influencer scale (zero skips the influencer).
    let emit_background = |rng: &mut ChaCha8Rng,
                               counter: &mut TweetCounter,
                               tweets: &mut Vec<TweetRecord>,
                               user_id: &str,
                               act: f64,
                               scales: &[f64],
                               delay: &LogNormal<f64>| {
        // Attention decays gently with rank so even the last influencer
        // keeps half the top one's pull; a steeper decay would leave the
        // tail columns dominated by empty-pair noise.
        for (i, &scale) in scales.iter().enumerate() {
            if scale == 0.0 {
                continue;
            }
            let rank_weight = 1.0 - i as f64 / (2 * config.n_influencers) as f64;
            let p = (config.p_organic * rank_weight * act * scale).min(1.0);
            for original in &originals[i] {
                if rng.gen_bool(p) {
                    emit_retweet(rng, counter, tweets, user_id, i, original, delay);
                }
            }
        }
    };

    let organic_scales = vec![1.0; config.n_influencers];
    for u in 0..config.n_regular {
        let user_id = format!("reg_{u:05}");
        let act = activity.sample(&mut rng);
        emit_background(
            &mut rng,
            &mut counter,
            &mut tweets,
            &user_id,
            act,
            &organic_scales,
            &organic_delay,
        );
        profiles.push(random_profile(&mut rng, &user_id));
        labels.push((user_id, UserClass::Regular));
    }

    // Collusive groups. The first `suspended_fraction` of them form the
    // suspended camp, the rest the deleted one. The camps' pools interleave
    // over the non-mainstream influencers by parity, so the organic rank
    // decay burdens both camps equally. Every group fixates on tiers of
    // targets: the shared block all collusive accounts amplify, its camp's
    // beacon (the camp's first pool influencer), and optional rotating
    // group-specific targets. That layers group inside camp inside the
    // collusive population, which is the hierarchy the pipeline is meant
    // to recover.
    let n_suspended =
        (config.suspended_fraction * config.n_collusive_groups as f64).round() as usize;
    let mainstream = config.mainstream_influencers;
    let shared = mainstream..(mainstream + config.shared_targets);
    let pool_base = shared.end;
    let camp_scales: Vec<Vec<f64>> = (0..2)
        .map(|camp| {
            (0..config.n_influencers)
                .map(|i| {
                    if i < mainstream {
                        0.0
                    } else if i < pool_base {
                        config.background_rate
                    } else if (i - pool_base) % 2 == camp {
                        config.background_rate * (1.0 + config.camp_bias)
                    } else {
                        config.background_rate * (1.0 - config.camp_bias)
                    }
                })
                .collect()
        })
        .collect();
    let pool_len = |camp: usize| (config.n_influencers - pool_base + (1 - camp)) / 2;
    let mut camp_counts = [0usize; 2];
    for g in 0..config.n_collusive_groups {
        let class = if g < n_suspended { UserClass::Suspended } else { UserClass::Deleted };
        let camp = if class == UserClass::Suspended { 0 } else { 1 };
        let p_base = config.p_collusive;
        let beacon = pool_base + camp;
        let rotating: Vec<usize> = (0..config.targets_per_group - 1)
            .map(|t| pool_base + camp + 2 * (1 + (camp_counts[camp] + t) % (pool_len(camp) - 1)))
            .collect();
        camp_counts[camp] += 1;
        let targets: Vec<usize> =
            shared.clone().chain([beacon]).chain(rotating).collect();
        for m in 0..config.group_size {
            let user_id = format!("grp_{g:03}_{m:03}");
            let act = activity.sample(&mut rng);
            // Collusive accounts keep a dialed-down organic footprint over
            // everything but the mainstream, leaning toward the home pool.
            // Their background reactions come from the fast delay
            // distribution too: automation is quick regardless of what it
            // amplifies.
            emit_background(
                &mut rng,
                &mut counter,
                &mut tweets,
                &user_id,
                act,
                &camp_scales[camp],
                &collusive_delay,
            );
            let p = (p_base * act).min(1.0);
            for &t in &targets {
                for original in &originals[t] {
                    if rng.gen_bool(p) {
                        emit_retweet(
                            &mut rng,
                            &mut counter,
                            &mut tweets,
                            &user_id,
                            t,
                            original,
                            &collusive_delay,
                        );
                    }
                }
            }
            profiles.push(random_profile(&mut rng, &user_id));
            labels.push((user_id, class));
        }
    }

    Ok(SynthOutput { tweets, profiles, labels })
}

/// Per-class retweet delays of a generated corpus, for inspection.
pub fn delays_by_class(output: &SynthOutput) -> BTreeMap<UserClass, Vec<u64>> {
    let class_of: std::collections::HashMap<&str, UserClass> = output
        .labels
        .iter()
        .map(|(id, c)| (id.as_str(), *c))
        .collect();
    let mut by_class: BTreeMap<UserClass, Vec<u64>> = BTreeMap::new();
    for t in &output.tweets {
        if let Some(rt) = &t.retweet_of {
            let class = class_of[t.user_id.as_str()];
            by_class
                .entry(class)
                .or_default()
                .push(t.created_at.abs_diff(rt.original_created_at));
        }
    }
    by_class
}
