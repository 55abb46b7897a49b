use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::context::gen_semantic_context;
use super::{
    runs_from_pixels, serialize_answer, GenConfig, GroundTruth, OpenGrading,
    QaError, QaRecord, RecordMeta, RecordStatus, Task, TemplateBank, CHOICE_LETTERS,
};
use crate::color::{dominant_color, ColorDescriptor};
use crate::geometry::{classify_relation, extract_free_space, extract_instances, sample_distinct, RelationClass};
use crate::projection::{compare_heights, object_mean_depth, object_mean_height, HeightVerdict};
use crate::rng::{derive_seed, stream, StreamRng};
use crate::scene::{ObjectInstance, Pixel, SceneFrame};

/// Why a frame produced no records for a task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkipReason {
    pub frame_id: String,
    pub task: Task,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameOutput {
    pub records: Vec<QaRecord>,
    pub skipped: Vec<SkipReason>,
}

/// Everything the per-task generators share for one frame.
struct FrameFacts<'a> {
    frame: &'a SceneFrame,
    cfg: &'a GenConfig,
    bank: &'a TemplateBank,
    instances: Vec<ObjectInstance>,
    seed: u64,
}

impl<'a> FrameFacts<'a> {
    fn new(frame: &'a SceneFrame, cfg: &'a GenConfig, bank: &'a TemplateBank, seed: u64) -> Self {
        let instances = extract_instances(&frame.mask, cfg.background, cfg.connectivity)
            .into_iter()
            .filter(|i| i.area >= cfg.min_instance_area.max(1))
            .collect();
        Self {
            frame,
            cfg,
            bank,
            instances,
            seed,
        }
    }

    fn class_name(&self, id: u16) -> String {
        self.frame
            .mask
            .class_name(id)
            .map_or_else(|| format!("class {id}"), ToString::to_string)
    }

    fn object_ref(&self, inst: &ObjectInstance) -> String {
        let b = inst.bbox;
        format!("the {} at [{}, {}, {}, {}]", self.class_name(inst.class_id), b.x1, b.y1, b.x2, b.y2)
    }

    /// Distinct instance classes, ascending.
    fn classes(&self) -> Vec<u16> {
        let mut c: Vec<u16> = self.instances.iter().map(|i| i.class_id).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    fn of_class(&self, class: u16) -> impl Iterator<Item = &ObjectInstance> {
        self.instances.iter().filter(move |i| i.class_id == class)
    }

    fn stream_seed(&self, task: Task) -> u64 {
        derive_seed(self.seed, &[&self.frame.frame_id, task.as_str()])
    }
}

/// Assembles a record, rendering the question from a random template.
#[allow(clippy::too_many_arguments)]
fn build_record(
    bank: &TemplateBank,
    frame_ids: Vec<String>,
    task: Task,
    k: usize,
    slots: BTreeMap<String, String>,
    ground_truth: GroundTruth,
    choices: Option<Vec<String>>,
    class_ids: Vec<u16>,
    seed: u64,
    rng: &mut StreamRng,
) -> QaRecord {
    let template_id = rng.random_range(0..bank.len(task));
    let answer = serialize_answer(&ground_truth, task.answer_format()).unwrap_or_default();
    let id = format!("{}-{}-{:03}", frame_ids.join("+"), task.as_str(), k);
    QaRecord {
        id,
        frame_ids,
        task,
        question: bank.render(task, template_id, &slots),
        answer_format: task.answer_format(),
        ground_truth,
        answer,
        choices,
        meta: RecordMeta {
            class_ids,
            template_id,
            seed,
            status: RecordStatus::Ready,
            slots,
            context: None,
        },
    }
}

fn slots(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Picks the option count, draws distractors from `pool`, and shuffles.
/// Returns the options and the index of `correct`.
fn build_choices(
    correct: String,
    mut pool: Vec<String>,
    range: (usize, usize),
    rng: &mut StreamRng,
) -> Result<(Vec<String>, usize), QaError> {
    pool.retain(|p| *p != correct);
    pool.sort();
    pool.dedup();
    let (lo, hi) = (range.0.clamp(2, 6), range.1.clamp(2, 6));
    let hi = hi.max(lo).min(pool.len() + 1);
    if hi < lo {
        return Err(QaError::NothingToAsk(format!(
            "only {} distractors for a {}-option question",
            pool.len(),
            lo
        )));
    }
    let n = rng.random_range(lo..=hi);
    pool.shuffle(rng);
    pool.truncate(n - 1);
    pool.push(correct.clone());
    pool.shuffle(rng);
    let index = pool.iter().position(|p| *p == correct).unwrap_or(0);
    Ok((pool, index))
}

fn choice_truth(index: usize) -> GroundTruth {
    GroundTruth::Choice {
        index,
        letter: CHOICE_LETTERS[index],
    }
}

/// `n ± 1`, `n ± 2`, `2n`, without negatives or repeats.
pub(crate) fn counting_distractors(n: usize) -> Vec<usize> {
    let n = n as i64;
    let mut out: Vec<usize> = Vec::new();
    for v in [n - 1, n + 1, n - 2, n + 2, 2 * n] {
        if v >= 0 && v != n && !out.contains(&(v as usize)) {
            out.push(v as usize);
        }
    }
    out
}

fn pick_subset<T: Clone>(items: &[T], cap: usize, rng: &mut StreamRng) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(rng);
    v.truncate(cap);
    v
}

fn nothing(why: &str) -> QaError {
    QaError::NothingToAsk(why.to_string())
}

fn gen_box(f: &FrameFacts, rng: &mut StreamRng) -> Result<Vec<QaRecord>, QaError> {
    let classes = f.classes();
    if classes.is_empty() {
        return Err(nothing("no object instances"));
    }
    let seed = f.stream_seed(Task::Box);
    Ok(pick_subset(&classes, f.cfg.max_records_per_task, rng)
        .into_iter()
        .enumerate()
        .map(|(k, class)| {
            let boxes = f.of_class(class).map(|i| i.bbox).collect();
            build_record(
                f.bank,
                alloc::vec![f.frame.frame_id.clone()],
                Task::Box,
                k,
                slots(&[("class", f.class_name(class))]),
                GroundTruth::Boxes { boxes },
                None,
                alloc::vec![class],
                seed,
                rng,
            )
        })
        .collect())
}

fn class_region(f: &FrameFacts, class: u16) -> Vec<super::RowRun> {
    let mut px: Vec<Pixel> = f.of_class(class).flat_map(|i| i.pixels.iter().copied()).collect();
    px.sort_unstable();
    runs_from_pixels(&px)
}

fn gen_point(f: &FrameFacts, rng: &mut StreamRng) -> Result<Vec<QaRecord>, QaError> {
    let classes: Vec<u16> = f
        .classes()
        .into_iter()
        .filter(|&c| f.of_class(c).any(|i| i.area >= 5))
        .collect();
    if classes.is_empty() {
        return Err(nothing("no instance with at least 5 pixels"));
    }
    let seed = f.stream_seed(Task::Point);
    let mut out = Vec::new();
    for (k, class) in pick_subset(&classes, f.cfg.max_records_per_task, rng).into_iter().enumerate() {
        let candidates: Vec<&ObjectInstance> = f.of_class(class).filter(|i| i.area >= 5).collect();
        let inst = candidates[rng.random_range(0..candidates.len())];
        let count = rng.random_range(5..=inst.area.min(8));
        let points = sample_distinct(&inst.pixels, count, rng).map_err(|e| nothing(&e.to_string()))?;
        out.push(build_record(
            f.bank,
            alloc::vec![f.frame.frame_id.clone()],
            Task::Point,
            k,
            slots(&[("class", f.class_name(class))]),
            GroundTruth::Points {
                points,
                region: class_region(f, class),
            },
            None,
            alloc::vec![class],
            seed,
            rng,
        ));
    }
    Ok(out)
}

fn gen_reverse_point(f: &FrameFacts, rng: &mut StreamRng) -> Result<Vec<QaRecord>, QaError> {
    if f.instances.is_empty() {
        return Err(nothing("no object instances"));
    }
    let seed = f.stream_seed(Task::ReversePoint);
    let idx: Vec<usize> = (0..f.instances.len()).collect();
    let mut out = Vec::new();
    for (k, i) in pick_subset(&idx, f.cfg.max_records_per_task, rng).into_iter().enumerate() {
        let inst = &f.instances[i];
        let p = sample_distinct(&inst.pixels, 1, rng).map_err(|e| nothing(&e.to_string()))?[0];
        let name = f.class_name(inst.class_id);
        out.push(build_record(
            f.bank,
            alloc::vec![f.frame.frame_id.clone()],
            Task::ReversePoint,
            k,
            slots(&[("x", p.x.to_string()), ("y", p.y.to_string())]),
            GroundTruth::Open {
                text: name.clone(),
                grading: OpenGrading::ClassName { name },
            },
            None,
            alloc::vec![inst.class_id],
            seed,
            rng,
        ));
    }
    Ok(out)
}

/// Regions contributing sample points to a free-space record.
const FREESPACE_MAX_REGIONS: usize = 5;

fn gen_freespace(f: &FrameFacts, rng: &mut StreamRng) -> Result<Vec<QaRecord>, QaError> {
    let mut regions = extract_free_space(
        &f.frame.mask,
        f.cfg.background,
        f.cfg.free_space_min_area,
        f.cfg.connectivity,
        rng,
    )
    .map_err(|e| nothing(&e.to_string()))?;
    if regions.is_empty() {
        return Err(nothing("no free region above the area threshold"));
    }
    let mut all: Vec<Pixel> = regions.iter().flat_map(|r| r.pixels.iter().copied()).collect();
    all.sort_unstable();
    regions.sort_by_key(|r| core::cmp::Reverse(r.area));
    let mut points: Vec<Pixel> = regions
        .iter()
        .take(FREESPACE_MAX_REGIONS)
        .flat_map(|r| r.sample_points.iter().copied())
        .collect();
    points.sort_unstable();
    let seed = f.stream_seed(Task::Freespace);
    Ok(alloc::vec![build_record(
        f.bank,
        alloc::vec![f.frame.frame_id.clone()],
        Task::Freespace,
        0,
        BTreeMap::new(),
        GroundTruth::Points {
            points,
            region: runs_from_pixels(&all),
        },
        None,
        f.cfg.background.into_iter().collect(),
        seed,
        rng,
    )])
}

fn gen_relation(f: &FrameFacts, rng: &mut StreamRng) -> Result<Vec<QaRecord>, QaError> {
    let mut pairs = Vec::new();
    for (i, a) in f.instances.iter().enumerate() {
        for (j, b) in f.instances.iter().enumerate() {
            if i == j {
                continue;
            }
            if let Ok(Some(rel)) = classify_relation(a.centroid, b.centroid, f.cfg.relation_min_dist) {
                pairs.push((i, j, rel.class));
            }
        }
    }
    if pairs.is_empty() {
        return Err(nothing("no instance pair beyond the relation distance threshold"));
    }
    let seed = f.stream_seed(Task::Relation);
    let mut out = Vec::new();
    for (k, (i, j, class)) in pick_subset(&pairs, f.cfg.max_records_per_task, rng).into_iter().enumerate() {
        let (subject, object) = (&f.instances[i], &f.instances[j]);
        let pool = RelationClass::ALL.iter().map(|c| c.phrase().to_string()).collect();
        let (choices, index) = build_choices(class.phrase().to_string(), pool, f.cfg.choice_options, rng)?;
        out.push(build_record(
            f.bank,
            alloc::vec![f.frame.frame_id.clone()],
            Task::Relation,
            k,
            slots(&[("subject", f.object_ref(subject)), ("object", f.object_ref(object))]),
            choice_truth(index),
            Some(choices),
            alloc::vec![subject.class_id, object.class_id],
            seed,
            rng,
        ));
    }
    Ok(out)
}

fn gen_counting(f: &FrameFacts, rng: &mut StreamRng) -> Result<Vec<QaRecord>, QaError> {
    let classes = f.classes();
    if classes.is_empty() {
        return Err(nothing("no object instances"));
    }
    let seed = f.stream_seed(Task::Counting);
    let mut out = Vec::new();
    for (k, class) in classes.into_iter().enumerate() {
        let n = f.of_class(class).count();
        let pool = counting_distractors(n).into_iter().map(|v| v.to_string()).collect();
        let (choices, index) = build_choices(n.to_string(), pool, f.cfg.choice_options, rng)?;
        out.push(build_record(
            f.bank,
            alloc::vec![f.frame.frame_id.clone()],
            Task::Counting,
            k,
            slots(&[("class", f.class_name(class))]),
            choice_truth(index),
            Some(choices),
            alloc::vec![class],
            seed,
            rng,
        ));
    }
    Ok(out)
}

fn gen_color(f: &FrameFacts, rng: &mut StreamRng) -> Result<Vec<QaRecord>, QaError> {
    if f.instances.is_empty() {
        return Err(nothing("no object instances"));
    }
    let seed = f.stream_seed(Task::Color);
    let idx: Vec<usize> = (0..f.instances.len()).collect();
    let mut out = Vec::new();
    for (k, i) in pick_subset(&idx, f.cfg.max_records_per_task, rng).into_iter().enumerate() {
        let inst = &f.instances[i];
        let color = dominant_color(&f.frame.rgb, inst, &f.cfg.color);
        let pool = ColorDescriptor::all()
            .into_iter()
            .filter(|d| d.base != color.base)
            .map(|d| d.render())
            .collect();
        let (choices, index) = build_choices(color.render(), pool, f.cfg.choice_options, rng)?;
        out.push(build_record(
            f.bank,
            alloc::vec![f.frame.frame_id.clone()],
            Task::Color,
            k,
            slots(&[("object", f.object_ref(inst))]),
            choice_truth(index),
            Some(choices),
            alloc::vec![inst.class_id],
            seed,
            rng,
        ));
    }
    Ok(out)
}

fn round2(v: f64) -> f64 {
    libm::round(v * 100.0) / 100.0
}

fn gen_distance(f: &FrameFacts, rng: &mut StreamRng) -> Result<Vec<QaRecord>, QaError> {
    if !f.frame.supports_metric() {
        return Err(nothing("frame lacks LiDAR or camera calibration"));
    }
    let measured: Vec<(usize, f64)> = f
        .instances
        .iter()
        .enumerate()
        .filter_map(|(i, inst)| object_mean_depth(f.frame, inst).ok().map(|d| (i, d)))
        .collect();
    if measured.is_empty() {
        return Err(nothing("no LiDAR coverage on any instance"));
    }
    let seed = f.stream_seed(Task::Distance);
    Ok(pick_subset(&measured, f.cfg.max_records_per_task, rng)
        .into_iter()
        .enumerate()
        .map(|(k, (i, depth))| {
            let inst = &f.instances[i];
            let meters = round2(depth);
            let text = format!(
                "The {} is approximately {:.2} meters from the camera.",
                f.class_name(inst.class_id),
                meters
            );
            build_record(
                f.bank,
                alloc::vec![f.frame.frame_id.clone()],
                Task::Distance,
                k,
                slots(&[("object", f.object_ref(inst))]),
                GroundTruth::Open {
                    text,
                    grading: OpenGrading::Distance { meters },
                },
                None,
                alloc::vec![inst.class_id],
                seed,
                rng,
            )
        })
        .collect())
}

fn gen_height(f: &FrameFacts, rng: &mut StreamRng) -> Result<Vec<QaRecord>, QaError> {
    if !f.frame.supports_height() {
        return Err(nothing("frame lacks LiDAR, camera calibration or pose"));
    }
    let measured: Vec<(usize, f64)> = f
        .instances
        .iter()
        .enumerate()
        .filter_map(|(i, inst)| object_mean_height(f.frame, inst).ok().map(|h| (i, h)))
        .collect();
    let mut pairs = Vec::new();
    for (x, &(i, hi)) in measured.iter().enumerate() {
        for &(j, hj) in &measured[x + 1..] {
            if f.instances[i].class_id == f.instances[j].class_id {
                continue;
            }
            let verdict = compare_heights(hi, hj, f.cfg.height_tolerance);
            if verdict != HeightVerdict::Comparable {
                pairs.push((i, j, hi, hj, verdict));
            }
        }
    }
    if pairs.is_empty() {
        return Err(nothing("no pair of distinct classes with a clear height difference"));
    }
    let seed = f.stream_seed(Task::Height);
    let mut out = Vec::new();
    for (k, (i, j, hi, hj, verdict)) in pick_subset(&pairs, f.cfg.max_records_per_task, rng).into_iter().enumerate() {
        // Randomize which object the question names first.
        let (a, b, ha, hb, verdict) = if rng.random::<bool>() {
            (i, j, hi, hj, verdict)
        } else {
            let flipped = match verdict {
                HeightVerdict::AHigher => HeightVerdict::BHigher,
                HeightVerdict::BHigher => HeightVerdict::AHigher,
                HeightVerdict::Comparable => HeightVerdict::Comparable,
            };
            (j, i, hj, hi, flipped)
        };
        let (ia, ib) = (&f.instances[a], &f.instances[b]);
        let (a_name, b_name) = (f.class_name(ia.class_id), f.class_name(ib.class_id));
        let (ha, hb) = (round2(ha), round2(hb));
        let text = match verdict {
            HeightVerdict::AHigher => format!(
                "The {a_name} is higher, at about {ha:.2} m versus {hb:.2} m for the {b_name}."
            ),
            _ => format!(
                "The {b_name} is higher, at about {hb:.2} m versus {ha:.2} m for the {a_name}."
            ),
        };
        out.push(build_record(
            f.bank,
            alloc::vec![f.frame.frame_id.clone()],
            Task::Height,
            k,
            slots(&[("a", f.object_ref(ia)), ("b", f.object_ref(ib))]),
            GroundTruth::Open {
                text,
                grading: OpenGrading::Height {
                    a_name,
                    b_name,
                    a_height: ha,
                    b_height: hb,
                    verdict,
                },
            },
            None,
            alloc::vec![ia.class_id, ib.class_id],
            seed,
            rng,
        ));
    }
    Ok(out)
}

fn gen_function(f: &FrameFacts, rng: &mut StreamRng) -> Result<Vec<QaRecord>, QaError> {
    if f.cfg.functions.0.is_empty() {
        return Err(QaError::MissingFunctionTable);
    }
    let idx: Vec<usize> = (0..f.instances.len())
        .filter(|&i| f.cfg.functions.descriptions(&f.class_name(f.instances[i].class_id)).is_some())
        .collect();
    if idx.is_empty() {
        return Err(nothing("no instance with a functional description"));
    }
    let seed = f.stream_seed(Task::Function);
    let mut out = Vec::new();
    for (k, i) in pick_subset(&idx, f.cfg.max_records_per_task, rng).into_iter().enumerate() {
        let inst = &f.instances[i];
        let descriptions = f.cfg.functions.descriptions(&f.class_name(inst.class_id)).unwrap_or_default();
        let p = sample_distinct(&inst.pixels, 1, rng).map_err(|e| nothing(&e.to_string()))?[0];
        let text = descriptions[rng.random_range(0..descriptions.len())].clone();
        out.push(build_record(
            f.bank,
            alloc::vec![f.frame.frame_id.clone()],
            Task::Function,
            k,
            slots(&[("x", p.x.to_string()), ("y", p.y.to_string())]),
            GroundTruth::Open {
                text,
                grading: OpenGrading::Text,
            },
            None,
            alloc::vec![inst.class_id],
            seed,
            rng,
        ));
    }
    Ok(out)
}

fn pending_record(
    bank: &TemplateBank,
    frames: &[&SceneFrame],
    task: Task,
    cfg: &GenConfig,
    seed: u64,
    rng: &mut StreamRng,
) -> Result<QaRecord, QaError> {
    let context = gen_semantic_context(frames, task, cfg)?;
    let grading = if task == Task::Landing {
        OpenGrading::Landing
    } else {
        OpenGrading::Text
    };
    let frame_ids: Vec<String> = frames.iter().map(|f| f.frame_id.clone()).collect();
    let slot_values = if task == Task::CaptionMulti {
        slots(&[("n", frames.len().to_string())])
    } else {
        BTreeMap::new()
    };
    let mut class_ids: Vec<u16> = frames.iter().flat_map(|f| f.mask.present_classes()).collect();
    class_ids.sort_unstable();
    class_ids.dedup();
    let mut rec = build_record(
        bank,
        frame_ids,
        task,
        0,
        slot_values,
        GroundTruth::Open {
            text: String::new(),
            grading,
        },
        None,
        class_ids,
        seed,
        rng,
    );
    rec.meta.status = RecordStatus::Pending;
    rec.meta.context = Some(context);
    Ok(rec)
}

fn dispatch(f: &FrameFacts, task: Task, rng: &mut StreamRng) -> Result<Vec<QaRecord>, QaError> {
    match task {
        Task::Box => gen_box(f, rng),
        Task::Point => gen_point(f, rng),
        Task::ReversePoint => gen_reverse_point(f, rng),
        Task::Freespace => gen_freespace(f, rng),
        Task::Relation => gen_relation(f, rng),
        Task::Counting => gen_counting(f, rng),
        Task::Color => gen_color(f, rng),
        Task::Distance => gen_distance(f, rng),
        Task::Height => gen_height(f, rng),
        Task::Function => gen_function(f, rng),
        Task::CaptionSingle | Task::Landing => {
            let seed = f.stream_seed(task);
            pending_record(f.bank, &[f.frame], task, f.cfg, seed, rng).map(|r| alloc::vec![r])
        }
        Task::CaptionMulti => Err(QaError::UnsupportedTask(task)),
    }
}

fn run_one(
    frame: &SceneFrame,
    task: Task,
    cfg: &GenConfig,
    bank: &TemplateBank,
    rng: &mut StreamRng,
) -> Result<Vec<QaRecord>, QaError> {
    // The public entry points take an explicit rng; the record seed field
    // records the root seed of that generator only when called via
    // `generate_frame`.
    let facts = FrameFacts::new(frame, cfg, bank, 0);
    dispatch(&facts, task, rng)
}

/// Geometric tasks: box, point, reverse_point, freespace, relation, counting.
pub fn gen_geometric_qa(
    frame: &SceneFrame,
    task: Task,
    cfg: &GenConfig,
    bank: &TemplateBank,
    rng: &mut StreamRng,
) -> Result<Vec<QaRecord>, QaError> {
    match task {
        Task::Box | Task::Point | Task::ReversePoint | Task::Freespace | Task::Relation | Task::Counting => {
            run_one(frame, task, cfg, bank, rng)
        }
        other => Err(QaError::UnsupportedTask(other)),
    }
}

/// LiDAR tasks: distance and height.
pub fn gen_metric_qa(
    frame: &SceneFrame,
    task: Task,
    cfg: &GenConfig,
    bank: &TemplateBank,
    rng: &mut StreamRng,
) -> Result<Vec<QaRecord>, QaError> {
    match task {
        Task::Distance | Task::Height => run_one(frame, task, cfg, bank, rng),
        other => Err(QaError::UnsupportedTask(other)),
    }
}

pub fn gen_color_qa(
    frame: &SceneFrame,
    cfg: &GenConfig,
    bank: &TemplateBank,
    rng: &mut StreamRng,
) -> Result<Vec<QaRecord>, QaError> {
    run_one(frame, Task::Color, cfg, bank, rng)
}

/// Runs every requested single-frame task on `frame`, each on its own
/// `(seed, frame_id, task)` stream. `caption_multi` is ignored here.
pub fn generate_frame(
    frame: &SceneFrame,
    tasks: &[Task],
    cfg: &GenConfig,
    bank: &TemplateBank,
    seed: u64,
) -> FrameOutput {
    let facts = FrameFacts::new(frame, cfg, bank, seed);
    let mut out = FrameOutput::default();
    for &task in tasks {
        if task == Task::CaptionMulti {
            continue;
        }
        let mut rng = stream(seed, &[&frame.frame_id, task.as_str()]);
        match dispatch(&facts, task, &mut rng) {
            Ok(records) => out.records.extend(records),
            Err(e) => out.skipped.push(SkipReason {
                frame_id: frame.frame_id.clone(),
                task,
                reason: e.to_string(),
            }),
        }
    }
    out
}

/// Multi-image captions over consecutive windows of `cfg.multi_frame_len`
/// frames (a trailing window needs at least two frames).
pub fn generate_multi_frame(
    frames: &[&SceneFrame],
    cfg: &GenConfig,
    bank: &TemplateBank,
    seed: u64,
) -> FrameOutput {
    let mut out = FrameOutput::default();
    for window in frames.chunks(cfg.multi_frame_len.max(2)) {
        let first = &window[0].frame_id;
        if window.len() < 2 {
            out.skipped.push(SkipReason {
                frame_id: first.clone(),
                task: Task::CaptionMulti,
                reason: "trailing window has a single frame".to_string(),
            });
            continue;
        }
        let stream_seed = derive_seed(seed, &[first, Task::CaptionMulti.as_str()]);
        let mut rng = stream(seed, &[first, Task::CaptionMulti.as_str()]);
        match pending_record(bank, window, Task::CaptionMulti, cfg, stream_seed, &mut rng) {
            Ok(r) => out.records.push(r),
            Err(e) => out.skipped.push(SkipReason {
                frame_id: first.clone(),
                task: Task::CaptionMulti,
                reason: e.to_string(),
            }),
        }
    }
    out
}

/// Dataset-level class balancing for counting records: class `c` gets weight
/// `min(cap, mean / count_c)`. Weights below one thin the class; weights
/// above one add copies phrased with other templates.
pub fn balance_counting(records: Vec<QaRecord>, cfg: &GenConfig, bank: &TemplateBank, seed: u64) -> Vec<QaRecord> {
    let mut per_class: BTreeMap<u16, usize> = BTreeMap::new();
    for r in records.iter().filter(|r| r.task == Task::Counting) {
        if let Some(&c) = r.meta.class_ids.first() {
            *per_class.entry(c).or_default() += 1;
        }
    }
    if per_class.is_empty() {
        return records;
    }
    let mean = per_class.values().sum::<usize>() as f64 / per_class.len() as f64;
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let class = match (r.task, r.meta.class_ids.first()) {
            (Task::Counting, Some(&c)) => c,
            _ => {
                out.push(r);
                continue;
            }
        };
        let weight = (mean / per_class[&class] as f64).min(cfg.counting_weight_cap);
        let mut rng = stream(seed, &[&r.id, "balance"]);
        let whole = libm::floor(weight);
        let copies = whole as usize + usize::from(rng.random::<f64>() < weight - whole);
        for k in 0..copies {
            if k == 0 {
                out.push(r.clone());
                continue;
            }
            let mut dup = r.clone();
            dup.id = format!("{}-os{}", r.id, k);
            dup.meta.template_id = (r.meta.template_id + 7 * k) % bank.len(Task::Counting);
            dup.question = bank.render(Task::Counting, dup.meta.template_id, &dup.meta.slots);
            out.push(dup);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qa::AnswerFormat;

    #[test]
    fn counting_distractor_rule() {
        assert_eq!(counting_distractors(3), alloc::vec![2, 4, 1, 5, 6]);
        assert_eq!(counting_distractors(1), alloc::vec![0, 2, 3]);
        assert_eq!(counting_distractors(2), alloc::vec![1, 3, 0, 4]);
    }

    #[test]
    fn choices_contain_correct_once() {
        let mut rng = stream(5, &[]);
        for _ in 0..50 {
            let pool = (0..10).map(|i| i.to_string()).collect();
            let (choices, idx) = build_choices("3".into(), pool, (4, 6), &mut rng).unwrap();
            assert!((4..=6).contains(&choices.len()));
            assert_eq!(choices[idx], "3");
            assert_eq!(choices.iter().filter(|c| *c == "3").count(), 1);
        }
        let err = build_choices("a".into(), alloc::vec!["b".into()], (4, 6), &mut rng);
        assert!(matches!(err, Err(QaError::NothingToAsk(_))));
    }

    #[test]
    fn answer_format_matches_task() {
        assert_eq!(Task::Counting.answer_format(), AnswerFormat::Choice);
        assert_eq!(Task::Freespace.answer_format(), AnswerFormat::Points);
    }
}
