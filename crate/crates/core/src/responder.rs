//! Offline stand-ins for a model: an oracle, a seeded random guesser, and a
//! template writer for caption and landing references.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::catalog::RiskLevel;
use crate::qa::{
    serialize_boxes, serialize_choice, serialize_points, AnswerFormat, GroundTruth, QaRecord, RecordStatus,
    SemanticContext, Task, CHOICE_LETTERS,
};
use crate::rng::stream;
use crate::scene::{BBox, Pixel};

/// Something that answers a record's prompt with raw text.
pub trait Responder {
    fn respond(&self, record: &QaRecord) -> String;
}

/// Replies with the serialized reference answer.
#[derive(Clone, Copy, Debug, Default)]
pub struct OracleResponder;

impl Responder for OracleResponder {
    fn respond(&self, record: &QaRecord) -> String {
        record.answer.clone()
    }
}

/// Uniformly random answers, deterministic in `(seed, record id)`.
#[derive(Clone, Copy, Debug)]
pub struct RandomResponder {
    pub seed: u64,
    pub width: u32,
    pub height: u32,
}

impl RandomResponder {
    pub fn new(seed: u64, width: u32, height: u32) -> Self {
        Self {
            seed,
            width: width.max(1),
            height: height.max(1),
        }
    }
}

impl Responder for RandomResponder {
    fn respond(&self, record: &QaRecord) -> String {
        let mut rng = stream(self.seed, &["random-responder", &record.id]);
        let (w, h) = (self.width, self.height);
        match record.answer_format {
            AnswerFormat::Choice => {
                let n = record.choices.as_ref().map_or(4, Vec::len).clamp(1, CHOICE_LETTERS.len());
                serialize_choice(CHOICE_LETTERS[rng.random_range(0..n)])
            }
            AnswerFormat::Boxes => {
                let x = [rng.random_range(0..w), rng.random_range(0..w)];
                let y = [rng.random_range(0..h), rng.random_range(0..h)];
                serialize_boxes(&[BBox::new(x[0].into(), y[0].into(), x[1].into(), y[1].into()).normalized()])
            }
            AnswerFormat::Points => {
                let pts: Vec<Pixel> = (0..5)
                    .map(|_| Pixel::new(rng.random_range(0..w), rng.random_range(0..h)))
                    .collect();
                serialize_points(&pts)
            }
            AnswerFormat::Open => String::from("It is hard to tell from this view."),
        }
    }
}

/// Deterministic reference text built from a semantic context, used when no
/// model endpoint is configured.
pub fn offline_reference(ctx: &SemanticContext) -> String {
    use crate::qa::context_layout as layout;
    match ctx.task {
        Task::Landing => {
            let Some(l) = &ctx.landing else {
                return String::from("feasibility: unsafe\nconfidence: 0.5\nregion: none\nhazards: none\nreasoning: no context.");
            };
            let high = l.hazards.iter().any(|h| h.risk == RiskLevel::High);
            let (feasibility, confidence) = match (l.free_areas.first(), high) {
                (None, _) => ("unsafe", 0.9),
                (Some(_), true) => ("cautious", 0.6),
                (Some(_), false) => ("safe", 0.8),
            };
            let region = l.free_areas.first().map_or_else(
                || String::from("none"),
                |a| format!("{} area of {} pixels at [{}, {}, {}, {}]", a.location, a.area, a.bbox.x1, a.bbox.y1, a.bbox.x2, a.bbox.y2),
            );
            let hazards: Vec<String> = l
                .hazards
                .iter()
                .map(|h| format!("{} ({} risk)", h.class, h.risk.as_str()))
                .collect();
            let hazards = if hazards.is_empty() { String::from("none") } else { hazards.join(", ") };
            format!(
                "feasibility: {feasibility}\nconfidence: {confidence:.1}\nregion: {region}\nhazards: {hazards}\n\
                 reasoning: {} open areas are large enough to land; surface shows {}.",
                l.free_areas.len(),
                l.surface_features.join(", ")
            )
        }
        Task::CaptionMulti => {
            let parts: Vec<String> = ctx
                .frames
                .iter()
                .enumerate()
                .map(|(i, f)| format!("frame {} shows {}", i + 1, layout(f)))
                .collect();
            format!("An aerial sequence in which {}.", parts.join("; "))
        }
        _ => match ctx.frames.first() {
            Some(f) => format!("An aerial view showing {}.", layout(f)),
            None => String::from("An aerial view."),
        },
    }
}

/// Fills a pending record's reference text and marks it ready.
pub fn resolve_reference(record: &mut QaRecord, text: &str) {
    if let GroundTruth::Open { text: t, .. } = &mut record.ground_truth {
        t.clear();
        t.push_str(text.trim());
        record.answer = t.clone();
    }
    record.meta.status = RecordStatus::Ready;
}
