//! Subcommand implementations. Each returns a [`CliError`] whose exit code
//! tells config, data and endpoint failures apart.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use skyforge_core::metrics::{
    aggregate, bleu, parse_answer, score_boxes, score_record, EvalReport, Judge, MockJudge, StructuredAnswer, Verdict,
};
use skyforge_core::qa::{
    balance_counting, curate_benchmark_with_quotas, generate_frame, generate_multi_frame, QaRecord,
    Task, TemplateBank,
};
use skyforge_core::responder::{offline_reference, resolve_reference, OracleResponder, RandomResponder, Responder};
use skyforge_core::rewards::{choice_reward, group_advantage_or_zero, grpo_loss, grpo_loss_grad, point_reward_within, GrpoSample};
use skyforge_core::synth::{random_spec, synth_scene};
use skyforge_core::SceneFrame;

use crate::client::{encode_png_base64, ChatClient, ChatRequest, HttpJudge};
use crate::config::{parse_tasks, RunConfig};
use crate::dataset::{read_jsonl, write_bytes, write_json, write_jsonl, Prediction, RewardRequest};
use crate::error::{CliError, CliResult};
use crate::io::{discover_scenes, load_scene, save_scene};

/// Flags shared by commands that may call a model endpoint.
#[derive(Args, Clone, Debug, Default)]
pub struct EndpointArgs {
    /// Base URL of a chat-completions endpoint.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name sent with each request.
    #[arg(long)]
    pub model: Option<String>,
    /// Maximum concurrent requests.
    #[arg(long)]
    pub concurrency: Option<usize>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Root seed for every random choice.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn run_config(common: &CommonArgs, endpoint: Option<&EndpointArgs>) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(e) = endpoint {
        if let Some(u) = &e.endpoint {
            cfg.endpoint.url = Some(u.clone());
        }
        if let Some(m) = &e.model {
            cfg.endpoint.model = m.clone();
        }
        if let Some(c) = e.concurrency {
            cfg.endpoint.concurrency = c;
        }
    }
    Ok(cfg)
}

fn pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))
}

pub fn load_scene_root(root: &Path) -> CliResult<Vec<SceneFrame>> {
    let dirs = discover_scenes(root)?;
    if dirs.is_empty() {
        return Err(CliError::Data(format!("{}: no scene directories found", root.display())));
    }
    let frames: Vec<SceneFrame> = dirs.par_iter().map(|d| load_scene(d)).collect::<Result<_, _>>()?;
    let mut ids = BTreeSet::new();
    for f in &frames {
        if !ids.insert(f.frame_id.as_str()) {
            return Err(CliError::Data(format!("duplicate frame id {}", f.frame_id)));
        }
    }
    Ok(frames)
}

// ---------------------------------------------------------------- generate

#[derive(Args, Clone, Debug)]
pub struct GenerateArgs {
    /// Directory of scene directories.
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    /// Output dataset (JSON lines); the manifest is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated task names, or `all`.
    #[arg(long)]
    pub tasks: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkipEntry {
    pub frame_id: String,
    pub task: Task,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub scenes: usize,
    pub records: usize,
    pub per_task: BTreeMap<String, usize>,
    pub skipped: Vec<SkipEntry>,
    /// `offline` or the model that wrote caption and landing references.
    pub references: String,
    pub generated_at_unix: u64,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn frame_images(frames: &BTreeMap<&str, &SceneFrame>, ids: &[String]) -> Vec<String> {
    ids.iter()
        .filter_map(|id| frames.get(id.as_str()))
        .map(|f| encode_png_base64(&f.rgb))
        .collect()
}

const REFERENCE_SYSTEM: &str =
    "You describe aerial images captured by a UAV. Follow the requested output format exactly.";

pub fn cmd_generate(args: &GenerateArgs) -> CliResult<Manifest> {
    let mut cfg = run_config(&args.common, Some(&args.endpoint))?;
    if let Some(t) = &args.tasks {
        cfg.tasks = parse_tasks(t)?;
    }
    if let Some(s) = &args.scenes {
        cfg.scenes = Some(s.clone());
    }
    cfg.validate()?;
    let root = cfg
        .scenes
        .clone()
        .ok_or_else(|| CliError::Config("--scenes (or `scenes` in the config) is required".into()))?;
    let frames = load_scene_root(&root)?;
    let bank = TemplateBank::default();
    let gen = &cfg.generation;

    let outputs: Vec<_> = frames
        .par_iter()
        .map(|f| generate_frame(f, &cfg.tasks, gen, &bank, cfg.seed))
        .collect();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for o in outputs {
        records.extend(o.records);
        skipped.extend(o.skipped);
    }
    if cfg.tasks.contains(&Task::CaptionMulti) {
        let refs: Vec<&SceneFrame> = frames.iter().collect();
        let multi = generate_multi_frame(&refs, gen, &bank, cfg.seed);
        records.extend(multi.records);
        skipped.extend(multi.skipped);
    }
    let mut records = balance_counting(records, gen, &bank, cfg.seed);

    let references = match &cfg.endpoint.url {
        None => {
            for r in records.iter_mut().filter(|r| r.is_pending()) {
                let text = offline_reference(r.meta.context.as_ref().expect("pending records carry context"));
                resolve_reference(r, &text);
            }
            String::from("offline")
        }
        Some(_) => {
            let client = ChatClient::from_settings(&cfg.endpoint)?;
            let by_id: BTreeMap<&str, &SceneFrame> = frames.iter().map(|f| (f.frame_id.as_str(), f)).collect();
            let texts: Vec<(usize, String)> = pool(cfg.endpoint.concurrency)?.install(|| {
                records
                    .par_iter()
                    .enumerate()
                    .filter(|(_, r)| r.is_pending())
                    .map(|(i, r)| {
                        let ctx = r.meta.context.as_ref().expect("pending records carry context");
                        let req = ChatRequest::vision(
                            &cfg.endpoint,
                            Some(REFERENCE_SYSTEM),
                            &ctx.prompt,
                            frame_images(&by_id, &r.frame_ids),
                        );
                        client.complete(&req).map(|t| (i, t))
                    })
                    .collect::<Result<_, _>>()
            })?;
            for (i, t) in texts {
                resolve_reference(&mut records[i], &t);
            }
            cfg.endpoint.model.clone()
        }
    };

    if records.is_empty() {
        return Err(CliError::Data("no records were generated".into()));
    }
    write_jsonl(&args.out, &records)?;
    let mut per_task = BTreeMap::new();
    for r in &records {
        *per_task.entry(r.task.as_str().to_string()).or_insert(0) += 1;
    }
    let manifest = Manifest {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        scenes: frames.len(),
        records: records.len(),
        per_task,
        skipped: skipped
            .into_iter()
            .map(|s| SkipEntry {
                frame_id: s.frame_id,
                task: s.task,
                reason: s.reason,
            })
            .collect(),
        references,
        generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    write_json(&manifest_path(&args.out), &manifest)?;
    Ok(manifest)
}

// ---------------------------------------------------------------- curate

#[derive(Args, Clone, Debug)]
pub struct CurateArgs {
    /// Dataset produced by `generate`.
    pub dataset: PathBuf,
    /// Output directory for bench.jsonl and train.jsonl.
    #[arg(long)]
    pub out: PathBuf,
    /// Benchmark size.
    #[arg(long)]
    pub size: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurateSummary {
    pub bench: usize,
    pub train: usize,
    pub bench_frames: usize,
    pub pending_excluded: usize,
    pub per_task: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

pub fn cmd_curate(args: &CurateArgs) -> CliResult<CurateSummary> {
    let mut cfg = run_config(&args.common, None)?;
    if let Some(n) = args.size {
        cfg.bench_size = n;
    }
    cfg.validate()?;
    let records: Vec<QaRecord> = read_jsonl(&args.dataset)?;
    let out = curate_benchmark_with_quotas(&records, cfg.bench_size, &cfg.quotas()?, cfg.seed)
        .map_err(|e| CliError::Data(e.to_string()))?;
    write_jsonl(&args.out.join("bench.jsonl"), &out.bench)?;
    write_jsonl(&args.out.join("train.jsonl"), &out.train)?;
    let mut per_task = BTreeMap::new();
    for r in &out.bench {
        *per_task.entry(r.task.as_str().to_string()).or_insert(0) += 1;
    }
    let summary = CurateSummary {
        bench: out.bench.len(),
        train: out.train.len(),
        bench_frames: out.bench_frames().len(),
        pending_excluded: out.pending_excluded,
        per_task,
        warnings: out.warnings.clone(),
    };
    write_json(&args.out.join("curate.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- evaluate / score

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MockModel {
    Oracle,
    Random,
}

#[derive(Args, Clone, Debug)]
pub struct EvaluateArgs {
    /// Benchmark records (JSON lines).
    pub bench: PathBuf,
    /// Scene root; needed to send images to an endpoint.
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    /// Answer offline instead of calling an endpoint.
    #[arg(long, value_enum)]
    pub mock: Option<MockModel>,
    /// Where to write the predictions (JSON lines).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report path (JSON); a `.txt` table is written beside it.
    #[arg(long)]
    pub report: PathBuf,
    /// Image size assumed by the random model when no scenes are given.
    #[arg(long, default_value_t = 512)]
    pub size: u32,
    /// Restrict to these tasks and require each of them in the report.
    #[arg(long)]
    pub tasks: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

#[derive(Args, Clone, Debug)]
pub struct ScoreArgs {
    pub bench: PathBuf,
    /// Predictions (JSON lines of {record_id, raw_text}).
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub tasks: Option<String>,
    /// Judge open answers offline even when an endpoint is configured.
    #[arg(long)]
    pub mock_judge: bool,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportFile {
    #[serde(flatten)]
    pub report: EvalReport,
    pub records: usize,
    pub missing_predictions: usize,
    /// Records left unscored because the model request failed.
    pub endpoint_failures: usize,
    pub missing_tasks: Vec<Task>,
}

fn load_bench(path: &Path, tasks: Option<&str>) -> CliResult<(Vec<QaRecord>, Vec<Task>)> {
    let mut records: Vec<QaRecord> = read_jsonl(path)?;
    let expected = match tasks {
        Some(t) => {
            let wanted = parse_tasks(t)?;
            records.retain(|r| wanted.contains(&r.task));
            wanted
        }
        None => Task::ALL.iter().copied().filter(|t| records.iter().any(|r| r.task == *t)).collect(),
    };
    if records.is_empty() {
        return Err(CliError::Data(format!("{}: no benchmark records", path.display())));
    }
    Ok((records, expected))
}

fn judge_for(cfg: &RunConfig, offline: bool) -> CliResult<Box<dyn Judge + Sync>> {
    if offline || cfg.endpoint.url.is_none() {
        return Ok(Box::new(MockJudge));
    }
    Ok(Box::new(HttpJudge {
        client: Arc::new(ChatClient::from_settings(&cfg.endpoint)?),
    }))
}

fn score_all(
    records: &[QaRecord],
    predictions: &[Prediction],
    expected: &[Task],
    failed: &BTreeMap<String, String>,
    judge: &(dyn Judge + Sync),
    threads: usize,
    report_path: &Path,
) -> CliResult<ReportFile> {
    let by_id: BTreeMap<&str, &str> = predictions.iter().map(|p| (p.record_id.as_str(), p.raw_text.as_str())).collect();
    let verdicts: Vec<Verdict> = pool(threads)?.install(|| {
        records
            .par_iter()
            .map(|r| match failed.get(&r.id) {
                Some(why) => Verdict {
                    record_id: r.id.clone(),
                    task: r.task,
                    value: None,
                    parse_failure: false,
                    hit_rate: None,
                    bleu: None,
                    note: Some(why.clone()),
                },
                None => score_record(r, by_id.get(r.id.as_str()).copied().unwrap_or(""), judge),
            })
            .collect()
    });
    let report = aggregate(&verdicts);
    let file = ReportFile {
        missing_tasks: report.missing(expected),
        missing_predictions: records
            .iter()
            .filter(|r| !by_id.contains_key(r.id.as_str()) && !failed.contains_key(&r.id))
            .count(),
        endpoint_failures: failed.len(),
        records: records.len(),
        report,
    };
    write_json(report_path, &file)?;
    write_bytes(&report_path.with_extension("txt"), file.report.render_table().as_bytes())?;
    if !failed.is_empty() {
        return Err(CliError::Endpoint(format!(
            "{} of {} requests failed; partial report written to {}",
            failed.len(),
            records.len(),
            report_path.display()
        )));
    }
    if !file.missing_tasks.is_empty() {
        let names: Vec<&str> = file.missing_tasks.iter().map(|t| t.as_str()).collect();
        return Err(CliError::Data(format!("no scored records for: {}", names.join(", "))));
    }
    Ok(file)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CliResult<ReportFile> {
    let cfg = run_config(&args.common, Some(&args.endpoint))?;
    cfg.validate()?;
    let (records, expected) = load_bench(&args.bench, args.tasks.as_deref())?;
    let frames = match &args.scenes {
        Some(root) => load_scene_root(root)?,
        None => Vec::new(),
    };
    let dims: BTreeMap<&str, (u32, u32)> = frames.iter().map(|f| (f.frame_id.as_str(), (f.width(), f.height()))).collect();

    let mut failed = BTreeMap::new();
    let predictions: Vec<Prediction> = match args.mock {
        Some(MockModel::Oracle) => records
            .iter()
            .map(|r| Prediction {
                record_id: r.id.clone(),
                raw_text: OracleResponder.respond(r),
            })
            .collect(),
        Some(MockModel::Random) => records
            .iter()
            .map(|r| {
                let (w, h) = r
                    .frame_ids
                    .first()
                    .and_then(|f| dims.get(f.as_str()).copied())
                    .unwrap_or((args.size, args.size));
                Prediction {
                    record_id: r.id.clone(),
                    raw_text: RandomResponder::new(cfg.seed, w, h).respond(r),
                }
            })
            .collect(),
        None => {
            if cfg.endpoint.url.is_none() {
                return Err(CliError::Config("choose --mock or give --endpoint".into()));
            }
            if frames.is_empty() {
                return Err(CliError::Config("--scenes is required to send images to an endpoint".into()));
            }
            let client = ChatClient::from_settings(&cfg.endpoint)?;
            let by_id: BTreeMap<&str, &SceneFrame> = frames.iter().map(|f| (f.frame_id.as_str(), f)).collect();
            let replies: Vec<_> = pool(cfg.endpoint.concurrency)?.install(|| {
                records
                    .par_iter()
                    .map(|r| {
                        let req = ChatRequest::vision(&cfg.endpoint, None, &r.prompt_text(), frame_images(&by_id, &r.frame_ids));
                        (r.id.clone(), client.complete(&req))
                    })
                    .collect()
            });
            let mut predictions = Vec::new();
            for (record_id, reply) in replies {
                match reply {
                    Ok(raw_text) => predictions.push(Prediction { record_id, raw_text }),
                    Err(e) => {
                        failed.insert(record_id, e.to_string());
                    }
                }
            }
            predictions
        }
    };
    if let Some(out) = &args.out {
        write_jsonl(out, &predictions)?;
    }
    let judge = judge_for(&cfg, args.mock.is_some())?;
    score_all(&records, &predictions, &expected, &failed, judge.as_ref(), cfg.endpoint.concurrency, &args.report)
}

pub fn cmd_score(args: &ScoreArgs) -> CliResult<ReportFile> {
    let cfg = run_config(&args.common, Some(&args.endpoint))?;
    cfg.validate()?;
    let (records, expected) = load_bench(&args.bench, args.tasks.as_deref())?;
    let predictions: Vec<Prediction> = read_jsonl(&args.predictions)?;
    let judge = judge_for(&cfg, args.mock_judge)?;
    score_all(&records, &predictions, &expected, &BTreeMap::new(), judge.as_ref(), cfg.endpoint.concurrency, &args.report)
}

// ---------------------------------------------------------------- reward

#[derive(Args, Clone, Debug)]
pub struct RewardArgs {
    /// JSON lines of {task, pred, gt}, or {group: [{reward, logp_policy, logp_ref}]}.
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupSample {
    pub reward: f64,
    pub logp_policy: f64,
    pub logp_ref: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RewardLine {
    Answer(RewardRequest),
    Group { group: Vec<GroupSample>, beta: Option<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardOutput {
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advantages: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Reward of a raw prediction against a serialized reference. A prediction
/// that does not parse earns zero; a reference that does not parse is an error.
pub fn answer_reward(req: &RewardRequest, point_radius: f64) -> Result<f64, String> {
    let format = req.task.answer_format();
    let gt = parse_answer(&req.gt, format).map_err(|e| format!("reference: {e}"))?;
    let pred = parse_answer(&req.pred, format).ok();
    Ok(match (gt, pred) {
        (_, None) => 0.0,
        (StructuredAnswer::Boxes(g), Some(StructuredAnswer::Boxes(p))) => score_boxes(&p, &g).miou,
        (StructuredAnswer::Points(g), Some(StructuredAnswer::Points(p))) => {
            point_reward_within(&p, &g, point_radius).map_err(|e| e.to_string())?
        }
        (StructuredAnswer::Choice(g), Some(StructuredAnswer::Choice(p))) => choice_reward(p, g),
        (StructuredAnswer::Open(g), Some(StructuredAnswer::Open(p))) => bleu(&p, &g, 4).iter().sum::<f64>() / 4.0,
        _ => 0.0,
    })
}

pub fn cmd_reward(args: &RewardArgs) -> CliResult<Vec<RewardOutput>> {
    let cfg = run_config(&args.common, None)?;
    cfg.validate()?;
    let lines: Vec<RewardLine> = read_jsonl(&args.input)?;
    let empty = RewardOutput {
        line: 0,
        reward: None,
        loss: None,
        grad: None,
        advantages: None,
        error: None,
    };
    let out: Vec<RewardOutput> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let base = RewardOutput { line: i + 1, ..empty.clone() };
            match l {
                RewardLine::Answer(req) => match answer_reward(req, cfg.rewards.point_radius) {
                    Ok(r) => RewardOutput { reward: Some(r), ..base },
                    Err(e) => RewardOutput { error: Some(e), ..base },
                },
                RewardLine::Group { group, beta } => {
                    let beta = beta.unwrap_or(cfg.rewards.beta);
                    let batch: Vec<GrpoSample> = group
                        .iter()
                        .map(|g| GrpoSample {
                            reward: g.reward,
                            logp_policy: g.logp_policy,
                            logp_ref: g.logp_ref,
                        })
                        .collect();
                    let rewards: Vec<f64> = group.iter().map(|g| g.reward).collect();
                    match (grpo_loss(&batch, beta), grpo_loss_grad(&batch, beta)) {
                        (Ok(loss), Ok(grad)) => RewardOutput {
                            loss: Some(loss),
                            grad: Some(grad),
                            advantages: group_advantage_or_zero(&rewards).ok(),
                            ..base
                        },
                        (Err(e), _) | (_, Err(e)) => RewardOutput {
                            error: Some(e.to_string()),
                            ..base
                        },
                    }
                }
            }
        })
        .collect();
    write_jsonl(&args.out, &out)?;
    Ok(out)
}

// ---------------------------------------------------------------- synth

#[derive(Args, Clone, Debug)]
pub struct SynthArgs {
    /// Output root; one directory per scene.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of scenes.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Square image side in pixels.
    #[arg(long, default_value_t = 256)]
    pub size: u32,
    /// Omit LiDAR, camera and pose from every n-th scene (0: never).
    #[arg(long, default_value_t = 0)]
    pub no_lidar_every: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<usize> {
    let cfg = run_config(&args.common, None)?;
    if args.size < 32 {
        return Err(CliError::Config("--size must be at least 32".into()));
    }
    (0..args.count).into_par_iter().try_for_each(|i| {
        let id = format!("s{i:04}");
        let mut spec = random_spec(&id, args.size, cfg.seed);
        if args.no_lidar_every > 0 && (i + 1) % args.no_lidar_every == 0 {
            spec.lidar_density = 0.0;
        }
        let (frame, sheet) = synth_scene(&spec).map_err(|e| CliError::Data(e.to_string()))?;
        let dir = args.out.join(&id);
        save_scene(&frame, &dir)?;
        write_json(&dir.join("sheet.json"), &sheet)
    })?;
    Ok(args.count)
}
