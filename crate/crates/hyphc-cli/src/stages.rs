//! Stage implementations behind the subcommands.
//!
//! Every stage reads prior-stage artifacts from the run directory when
//! they exist and only computes what is missing in memory; artifacts on
//! disk are never recomputed. Each run appends a manifest entry with input
//! and output hashes and rewrites `resolved.cfg`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use hyphc_core::baselines::{reduce, ReducerMethod, ReducerSpec};
use hyphc_core::eval::run_experiments;
use hyphc_core::features::{build_feature_matrix, build_user_level_matrix, standardize};
use hyphc_core::hyphc::{optimize, SimilarityConfig, TrainingLog};
use hyphc_core::influencers::{
    build_user_set, compute_rt_scores, influencer_curves, select_top_influencers, EngagedUserSet,
    InfluencerSet,
};
use hyphc_core::ingest::{load_corpus, load_labels, load_profiles, Corpus, LabelMap, UserProfile};
use hyphc_core::learn::{all_separations, run_separation};
use hyphc_core::synth::generate;
use hyphc_core::FeatureMatrix;

use crate::config::PipelineConfig;
use crate::manifest::{sha256_hex, Manifest};
use crate::CliError;

pub struct Ctx<'a> {
    pub config: &'a PipelineConfig,
    pub run_dir: &'a Path,
}

impl Ctx<'_> {
    fn artifact(&self, name: &str) -> PathBuf {
        self.run_dir.join(name)
    }

    /// Write `resolved.cfg` and return its hash for the manifest entry.
    fn log_resolved(&self) -> Result<String, CliError> {
        let resolved = self.config.resolved();
        std::fs::write(self.artifact("resolved.cfg"), &resolved)
            .map_err(|e| CliError::Usage(format!("cannot write resolved config: {e}")))?;
        Ok(sha256_hex(resolved.as_bytes()))
    }

    fn record(
        &self,
        stage: &str,
        inputs: &[&Path],
        outputs: &[&Path],
    ) -> Result<(), CliError> {
        let config_hash = self.log_resolved()?;
        let mut manifest = Manifest::load(self.run_dir)?;
        manifest.record(self.run_dir, stage, &config_hash, inputs, outputs)
    }

    // Artifact loaders with in-memory fallback. Each returns the data plus
    // the paths actually read, for manifest bookkeeping.

    fn corpus(&self, read: &mut Vec<PathBuf>) -> Result<Corpus, CliError> {
        let canonical = self.artifact("corpus.jsonl");
        let path = if canonical.exists() {
            canonical
        } else {
            self.config.input_path("tweets", self.run_dir, "tweets.jsonl")
        };
        let corpus = load_corpus(&path).map_err(CliError::Data)?;
        read.push(path);
        Ok(corpus)
    }

    fn profiles(
        &self,
        read: &mut Vec<PathBuf>,
    ) -> Result<HashMap<String, UserProfile>, CliError> {
        let path = self.config.input_path("profiles", self.run_dir, "profiles.jsonl");
        let profiles = load_profiles(&path).map_err(CliError::Data)?;
        read.push(path);
        Ok(profiles)
    }

    fn labels(&self, read: &mut Vec<PathBuf>) -> Result<LabelMap, CliError> {
        let path = self.config.input_path("labels", self.run_dir, "labels.csv");
        let labels = load_labels(&path).map_err(CliError::Data)?;
        read.push(path);
        Ok(labels)
    }

    fn influencers(
        &self,
        corpus: &Corpus,
        read: &mut Vec<PathBuf>,
    ) -> Result<InfluencerSet, CliError> {
        let path = self.artifact("influencers.csv");
        if path.exists() {
            let set = read_influencers_csv(&path)?;
            read.push(path);
            return Ok(set);
        }
        let scores = compute_rt_scores(corpus);
        Ok(select_top_influencers(&scores, self.config.get_usize("p")?))
    }

    fn interaction_matrix(
        &self,
        corpus: &Corpus,
        read: &mut Vec<PathBuf>,
    ) -> Result<FeatureMatrix, CliError> {
        let path = self.artifact("features.csv");
        if path.exists() {
            let matrix = FeatureMatrix::read_csv(&path).map_err(CliError::Data)?;
            read.push(path);
            return Ok(matrix);
        }
        let influencers = self.influencers(corpus, read)?;
        if influencers.is_empty() {
            return Err(CliError::Data(hyphc_core::Error::DegenerateData(
                "corpus has no retweeted accounts".into(),
            )));
        }
        let users = build_user_set(corpus, &influencers);
        Ok(build_feature_matrix(corpus, &users, &influencers))
    }

    fn user_matrix(
        &self,
        corpus: &Corpus,
        users: &EngagedUserSet,
        read: &mut Vec<PathBuf>,
    ) -> Result<FeatureMatrix, CliError> {
        let path = self.artifact("user_features.csv");
        if path.exists() {
            let matrix = FeatureMatrix::read_csv(&path).map_err(CliError::Data)?;
            read.push(path);
            return Ok(matrix);
        }
        let profiles = self.profiles(read)?;
        let reference_time = corpus.tweets().iter().map(|t| t.created_at).max().unwrap_or(0);
        build_user_level_matrix(corpus, &profiles, users, reference_time).map_err(CliError::Data)
    }

    fn ball_matrix(
        &self,
        f_std: &FeatureMatrix,
        read: &mut Vec<PathBuf>,
    ) -> Result<FeatureMatrix, CliError> {
        let path = self.artifact("embeddings.csv");
        if path.exists() {
            let matrix = FeatureMatrix::read_csv(&path).map_err(CliError::Data)?;
            read.push(path);
            return Ok(matrix);
        }
        let (embedding, _) = optimize(f_std, &SimilarityConfig::default(), &self.config.hyphc_config()?)
            .map_err(CliError::Data)?;
        Ok(embedding.export())
    }

    fn reduced_matrix(
        &self,
        method: ReducerMethod,
        f_std: &FeatureMatrix,
        read: &mut Vec<PathBuf>,
    ) -> Result<FeatureMatrix, CliError> {
        let path = self.artifact(&format!("reduced_{}.csv", method_tag(method)));
        if path.exists() {
            let matrix = FeatureMatrix::read_csv(&path).map_err(CliError::Data)?;
            read.push(path);
            return Ok(matrix);
        }
        let spec = ReducerSpec {
            method,
            dim: self.config.get_usize("dim")?,
            se_neighbors: self.config.get_usize("se_neighbors")?,
        };
        reduce(f_std, &spec).map_err(CliError::Data)
    }

    /// The five classifier feature sets plus the raw `{name}.reduced`
    /// reducer outputs, assembled from whatever artifacts are on disk.
    fn feature_sets(
        &self,
        read: &mut Vec<PathBuf>,
    ) -> Result<HashMap<String, FeatureMatrix>, CliError> {
        let corpus = self.corpus(read)?;
        let f = self.interaction_matrix(&corpus, read)?;
        let users: EngagedUserSet = f.ids().iter().cloned().collect();
        let u = self.user_matrix(&corpus, &users, read)?;

        let (f_std, _) = standardize(&f);
        let (u_std, _) = standardize(&u);
        let uf = f_std.concat(&u_std).map_err(CliError::Data)?;

        let ball = self.ball_matrix(&f_std, read)?;
        let se = self.reduced_matrix(ReducerMethod::Se, &f_std, read)?;
        let fa = self.reduced_matrix(ReducerMethod::Fa, &f_std, read)?;

        let mut sets = HashMap::new();
        sets.insert("U".to_string(), u_std.clone());
        sets.insert("U+F".to_string(), uf);
        for (name, reduced) in [("HypHC", ball), ("SE", se), ("FA", fa)] {
            let (reduced_std, _) = standardize(&reduced);
            sets.insert(name.to_string(), reduced_std.concat(&u_std).map_err(CliError::Data)?);
            sets.insert(format!("{name}.reduced"), reduced);
        }
        Ok(sets)
    }
}

fn method_tag(method: ReducerMethod) -> &'static str {
    match method {
        ReducerMethod::Pca => "pca",
        ReducerMethod::Se => "se",
        ReducerMethod::Fa => "fa",
    }
}

fn read_influencers_csv(path: &Path) -> Result<InfluencerSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut ranked = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CliError::Data(hyphc_core::Error::MalformedRecord {
                line: i + 1,
                reason: "expected rank,user_id,rt_score".into(),
            }));
        }
        let score = fields[2].parse().map_err(|_| {
            CliError::Data(hyphc_core::Error::MalformedRecord {
                line: i + 1,
                reason: format!("bad rt_score `{}`", fields[2]),
            })
        })?;
        ranked.push((fields[1].to_string(), score));
    }
    Ok(InfluencerSet::from_ranked(ranked))
}

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    let mut out = std::io::BufWriter::new(file);
    for line in lines {
        writeln!(out, "{line}").map_err(|e| CliError::Data(e.into()))?;
    }
    out.flush().map_err(|e| CliError::Data(e.into()))
}

pub fn synth(ctx: &Ctx<'_>) -> Result<(), CliError> {
    let output = generate(&ctx.config.synth_config()?).map_err(CliError::Data)?;
    output.write(ctx.run_dir).map_err(CliError::Data)?;
    let outputs = ["tweets.jsonl", "profiles.jsonl", "labels.csv"];
    let paths: Vec<PathBuf> = outputs.iter().map(|n| ctx.artifact(n)).collect();
    println!(
        "synth: {} tweets, {} users -> {}",
        output.tweets.len(),
        output.profiles.len(),
        ctx.run_dir.display()
    );
    ctx.record("synth", &[], &paths.iter().map(PathBuf::as_path).collect::<Vec<_>>())
}

pub fn ingest(ctx: &Ctx<'_>) -> Result<(), CliError> {
    let tweets_path = ctx.config.input_path("tweets", ctx.run_dir, "tweets.jsonl");
    let corpus = load_corpus(&tweets_path).map_err(CliError::Data)?;
    let mut read = vec![tweets_path];
    let profiles = ctx.profiles(&mut read)?;
    let labels = ctx.labels(&mut read)?;

    // Canonical re-serialization; sorted where the source order is a map.
    let corpus_path = ctx.artifact("corpus.jsonl");
    corpus.write_jsonl(&corpus_path).map_err(CliError::Data)?;

    let sorted_profiles: BTreeMap<&String, &UserProfile> = profiles.iter().collect();
    let profiles_path = ctx.artifact("profiles.jsonl");
    write_lines(
        &profiles_path,
        sorted_profiles
            .values()
            .map(|p| serde_json::to_string(p).expect("profile serializes")),
    )?;

    let sorted_labels: BTreeMap<&String, _> = labels.iter().collect();
    let labels_path = ctx.artifact("labels.csv");
    write_lines(
        &labels_path,
        std::iter::once("user_id,label".to_string())
            .chain(sorted_labels.iter().map(|(id, class)| format!("{id},{class}"))),
    )?;

    println!(
        "ingest: {} tweets, {} profiles, {} labels",
        corpus.len(),
        profiles.len(),
        labels.len()
    );
    ctx.record(
        "ingest",
        &read.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        &[&corpus_path, &profiles_path, &labels_path],
    )
}

pub fn influencers(ctx: &Ctx<'_>) -> Result<(), CliError> {
    let mut read = Vec::new();
    let corpus = ctx.corpus(&mut read)?;
    let scores = compute_rt_scores(&corpus);
    let set = select_top_influencers(&scores, ctx.config.get_usize("p")?);

    let path = ctx.artifact("influencers.csv");
    write_lines(
        &path,
        std::iter::once("rank,user_id,rt_score".to_string()).chain(
            set.ranked()
                .iter()
                .enumerate()
                .map(|(rank, (id, score))| format!("{rank},{id},{score}")),
        ),
    )?;
    println!("influencers: top {} written to {}", set.len(), path.display());
    ctx.record(
        "influencers",
        &read.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        &[&path],
    )
}

pub fn curves(ctx: &Ctx<'_>) -> Result<(), CliError> {
    let mut read = Vec::new();
    let corpus = ctx.corpus(&mut read)?;
    let curves = influencer_curves(&corpus, ctx.config.get_usize("max_p")?);

    let path = ctx.artifact("curves.csv");
    write_lines(
        &path,
        std::iter::once("rank,rt_score,cumulative_users,marginal_users".to_string()).chain(
            (0..curves.rt_score.len()).map(|k| {
                format!(
                    "{k},{},{},{}",
                    curves.rt_score[k], curves.cumulative_users[k], curves.marginal_users[k]
                )
            }),
        ),
    )?;
    println!("curves: {} ranks written to {}", curves.rt_score.len(), path.display());
    ctx.record(
        "curves",
        &read.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        &[&path],
    )
}

pub fn features(ctx: &Ctx<'_>) -> Result<(), CliError> {
    let mut read = Vec::new();
    let corpus = ctx.corpus(&mut read)?;
    let influencers = ctx.influencers(&corpus, &mut read)?;
    if influencers.is_empty() {
        return Err(CliError::Data(hyphc_core::Error::DegenerateData(
            "corpus has no retweeted accounts".into(),
        )));
    }
    let users = build_user_set(&corpus, &influencers);
    let f = build_feature_matrix(&corpus, &users, &influencers);
    let u = ctx.user_matrix(&corpus, &users, &mut read)?;

    let f_path = ctx.artifact("features.csv");
    let u_path = ctx.artifact("user_features.csv");
    f.write_csv(&f_path).map_err(CliError::Data)?;
    u.write_csv(&u_path).map_err(CliError::Data)?;
    println!("features: {} users x {} interaction columns", f.n_rows(), f.n_cols());
    ctx.record(
        "features",
        &read.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        &[&f_path, &u_path],
    )
}

pub fn embed(ctx: &Ctx<'_>) -> Result<(), CliError> {
    let mut read = Vec::new();
    let corpus = ctx.corpus(&mut read)?;
    let f = ctx.interaction_matrix(&corpus, &mut read)?;
    let (f_std, _) = standardize(&f);
    let (embedding, log) = optimize(
        &f_std,
        &SimilarityConfig::default(),
        &ctx.config.hyphc_config()?,
    )
    .map_err(CliError::Data)?;

    let emb_path = ctx.artifact("embeddings.csv");
    embedding.export().write_csv(&emb_path).map_err(CliError::Data)?;
    let log_path = ctx.artifact("training_log.csv");
    write_training_log(&log_path, &log)?;
    println!(
        "embed: {} points in dimension {}, final loss {:.6}",
        embedding.len(),
        embedding.dim(),
        log.final_loss().unwrap_or(f64::NAN)
    );
    ctx.record(
        "embed",
        &read.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        &[&emb_path, &log_path],
    )
}

fn write_training_log(path: &Path, log: &TrainingLog) -> Result<(), CliError> {
    write_lines(
        path,
        std::iter::once("epoch,loss,tau".to_string())
            .chain(log.epochs.iter().map(|e| format!("{},{},{}", e.epoch, e.loss, e.tau))),
    )
}

pub fn reduce_stage(ctx: &Ctx<'_>, methods: &[ReducerMethod]) -> Result<(), CliError> {
    let mut read = Vec::new();
    let corpus = ctx.corpus(&mut read)?;
    let f = ctx.interaction_matrix(&corpus, &mut read)?;
    let (f_std, _) = standardize(&f);

    let mut written = Vec::new();
    for &method in methods {
        let spec = ReducerSpec {
            method,
            dim: ctx.config.get_usize("dim")?,
            se_neighbors: ctx.config.get_usize("se_neighbors")?,
        };
        let reduced = reduce(&f_std, &spec).map_err(CliError::Data)?;
        let path = ctx.artifact(&format!("reduced_{}.csv", method_tag(method)));
        reduced.write_csv(&path).map_err(CliError::Data)?;
        println!("reduce: {} -> {}", method.as_str(), path.display());
        written.push(path);
    }
    ctx.record(
        "reduce",
        &read.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        &written.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
    )
}

pub fn classify(ctx: &Ctx<'_>, separation: &str, feature_set: &str) -> Result<(), CliError> {
    let spec = all_separations()
        .into_iter()
        .find(|s| s.name() == separation)
        .ok_or_else(|| {
            let known: Vec<String> = all_separations().iter().map(|s| s.name()).collect();
            CliError::Usage(format!(
                "unknown separation `{separation}`; expected one of {}",
                known.join(", ")
            ))
        })?;
    let mut read = Vec::new();
    let sets = ctx.feature_sets(&mut read)?;
    let labels = ctx.labels(&mut read)?;
    let score = run_separation(&sets, feature_set, &labels, &spec, &ctx.config.run_config()?)
        .map_err(CliError::Data)?;

    let path = ctx.artifact(&format!("classify_{feature_set}_{separation}.json"));
    let body = serde_json::json!({
        "separation": separation,
        "feature_set": feature_set,
        "f1": score,
    });
    std::fs::write(&path, serde_json::to_string_pretty(&body).expect("serializes") + "\n")
        .map_err(|e| CliError::Data(e.into()))?;
    println!("classify: {separation} on {feature_set}: F1 {score:.4}");
    ctx.record(
        "classify",
        &read.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        &[&path],
    )
}

pub fn evaluate(ctx: &Ctx<'_>) -> Result<(), CliError> {
    let mut read = Vec::new();
    let sets = ctx.feature_sets(&mut read)?;
    let labels = ctx.labels(&mut read)?;
    let output = run_experiments(sets, &labels, &ctx.config.experiment_config()?)
        .map_err(CliError::Data)?;

    let results_path = ctx.artifact("results.csv");
    output.write_results_csv(&results_path).map_err(CliError::Data)?;
    let mut written = vec![results_path];
    for report in &output.centroid_reports {
        let path = ctx.artifact(&format!("centroids_{}.csv", report.reducer.to_lowercase()));
        report.write_csv(&path).map_err(CliError::Data)?;
        written.push(path);
    }

    for row in &output.scores {
        let cells: Vec<String> =
            row.f1.iter().map(|(set, v)| format!("{set} {v:.4}")).collect();
        println!("evaluate: {:22} {}", row.separation, cells.join("  "));
    }
    ctx.record(
        "evaluate",
        &read.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        &written.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
    )
}
