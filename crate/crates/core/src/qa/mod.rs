//! Question–answer records for the 13 spatial-reasoning tasks, their
//! generators, answer tags and benchmark curation.

mod context;
mod curate;
mod format;
mod generate;
mod templates;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{FunctionTable, HazardTable};
use crate::color::ColorTable;
use crate::geometry::{Connectivity, FREE_SPACE_MIN_AREA, RELATION_MIN_DIST};
use crate::projection::{HeightVerdict, HEIGHT_TOLERANCE};
use crate::scene::{BBox, Pixel};

pub use context::{
    gen_semantic_context, ClassLayout, FrameSummary, FreeArea, Hazard, LandingContext,
    SemanticContext, LANDING_MIN_AREA,
};
pub use context::describe_layout as context_layout;
pub use curate::{curate_benchmark, curate_benchmark_with_quotas, CurateOutcome};
pub use format::{serialize_answer, serialize_boxes, serialize_choice, serialize_points};
pub use generate::{
    balance_counting, gen_color_qa, gen_geometric_qa, gen_metric_qa, generate_frame,
    generate_multi_frame, FrameOutput, SkipReason,
};
pub use templates::{TemplateBank, MIN_TEMPLATES_PER_TASK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Box,
    Color,
    Distance,
    Height,
    Point,
    ReversePoint,
    Freespace,
    Relation,
    CaptionSingle,
    CaptionMulti,
    Counting,
    Function,
    Landing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    EnvironmentalPerception,
    SceneUnderstanding,
}

impl Category {
    pub fn label(self) -> &'static str {
        match self {
            Self::EnvironmentalPerception => "Environmental Perception",
            Self::SceneUnderstanding => "Scene Understanding",
        }
    }
}

impl Task {
    /// Report column order: eight perception tasks, then five understanding tasks.
    pub const ALL: [Self; 13] = [
        Self::Box,
        Self::Color,
        Self::Distance,
        Self::Height,
        Self::Point,
        Self::ReversePoint,
        Self::Freespace,
        Self::Relation,
        Self::CaptionSingle,
        Self::CaptionMulti,
        Self::Counting,
        Self::Function,
        Self::Landing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Box => "box",
            Self::Color => "color",
            Self::Distance => "distance",
            Self::Height => "height",
            Self::Point => "point",
            Self::ReversePoint => "reverse_point",
            Self::Freespace => "freespace",
            Self::Relation => "relation",
            Self::CaptionSingle => "caption_single",
            Self::CaptionMulti => "caption_multi",
            Self::Counting => "counting",
            Self::Function => "function",
            Self::Landing => "landing",
        }
    }

    pub fn category(self) -> Category {
        match self {
            Self::Box
            | Self::Color
            | Self::Distance
            | Self::Height
            | Self::Point
            | Self::ReversePoint
            | Self::Freespace
            | Self::Relation => Category::EnvironmentalPerception,
            _ => Category::SceneUnderstanding,
        }
    }

    pub fn answer_format(self) -> AnswerFormat {
        match self {
            Self::Box => AnswerFormat::Boxes,
            Self::Point | Self::Freespace => AnswerFormat::Points,
            Self::Color | Self::Relation | Self::Counting => AnswerFormat::Choice,
            _ => AnswerFormat::Open,
        }
    }

    /// Tasks whose reference answer needs a model call at generation time.
    pub fn needs_model_reference(self) -> bool {
        matches!(self, Self::CaptionSingle | Self::CaptionMulti | Self::Landing)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerFormat {
    Boxes,
    Points,
    Choice,
    Open,
}

/// Inclusive horizontal pixel run `x0..=x1` on row `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowRun {
    pub y: u32,
    pub x0: u32,
    pub x1: u32,
}

/// Run-length encodes raster-sorted, duplicate-free pixels.
pub fn runs_from_pixels(pixels: &[Pixel]) -> Vec<RowRun> {
    let mut runs: Vec<RowRun> = Vec::new();
    for p in pixels {
        match runs.last_mut() {
            Some(r) if r.y == p.y && r.x1 + 1 == p.x => r.x1 = p.x,
            _ => runs.push(RowRun {
                y: p.y,
                x0: p.x,
                x1: p.x,
            }),
        }
    }
    runs
}

/// Membership in sorted runs.
pub fn runs_contain(runs: &[RowRun], p: Pixel) -> bool {
    let idx = runs.partition_point(|r| (r.y, r.x1) < (p.y, p.x));
    runs.get(idx).is_some_and(|r| r.y == p.y && r.x0 <= p.x && p.x <= r.x1)
}

pub fn runs_area(runs: &[RowRun]) -> usize {
    runs.iter().map(|r| (r.x1 - r.x0 + 1) as usize).sum()
}

/// How an open answer is graded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpenGrading {
    /// Correct iff the answer names the class.
    ClassName { name: String },
    /// Correct iff the first number is within the relative tolerance.
    Distance { meters: f64 },
    /// Correct iff the answer names the higher object first.
    Height {
        a_name: String,
        b_name: String,
        a_height: f64,
        b_height: f64,
        verdict: HeightVerdict,
    },
    /// Text overlap (BLEU) against the reference.
    Text,
    /// Judge-scored structured assessment.
    Landing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case")]
pub enum GroundTruth {
    Boxes { boxes: Vec<BBox> },
    Points { points: Vec<Pixel>, region: Vec<RowRun> },
    Choice { index: usize, letter: char },
    Open { text: String, grading: OpenGrading },
}

impl GroundTruth {
    pub fn format(&self) -> AnswerFormat {
        match self {
            Self::Boxes { .. } => AnswerFormat::Boxes,
            Self::Points { .. } => AnswerFormat::Points,
            Self::Choice { .. } => AnswerFormat::Choice,
            Self::Open { .. } => AnswerFormat::Open,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    #[default]
    Ready,
    /// Reference text still needs a model call.
    Pending,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub class_ids: Vec<u16>,
    pub template_id: usize,
    pub seed: u64,
    #[serde(default)]
    pub status: RecordStatus,
    /// Slot values the question was rendered with.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub slots: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<SemanticContext>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaRecord {
    pub id: String,
    pub frame_ids: Vec<String>,
    pub task: Task,
    pub question: String,
    pub answer_format: AnswerFormat,
    pub ground_truth: GroundTruth,
    /// Serialized reference answer, ready for supervised training.
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    pub meta: RecordMeta,
}

pub const CHOICE_LETTERS: [char; 6] = ['A', 'B', 'C', 'D', 'E', 'F'];

impl QaRecord {
    pub fn is_pending(&self) -> bool {
        self.meta.status == RecordStatus::Pending
    }

    /// Question text as sent to a model: stem, lettered options, format hint.
    pub fn prompt_text(&self) -> String {
        let mut s = self.question.clone();
        if let Some(choices) = &self.choices {
            for (letter, option) in CHOICE_LETTERS.iter().zip(choices) {
                s.push_str(&format!("\n{letter}. {option}"));
            }
        }
        let hint = match self.answer_format {
            AnswerFormat::Boxes => {
                "\nAnswer with bounding boxes in the form <box>[[x1,y1,x2,y2],...]</box>."
            }
            AnswerFormat::Points => "\nAnswer with pixel coordinates in the form <point>[[x,y],...]</point>.",
            AnswerFormat::Choice => "\nAnswer with the option letter in the form <choice>X</choice>.",
            AnswerFormat::Open => "",
        };
        s.push_str(hint);
        s
    }

    /// Re-checks internal consistency: option counts, letter/index agreement,
    /// format agreement, payload bounds.
    pub fn check(&self, width: u32, height: u32) -> Result<(), String> {
        if self.ground_truth.format() != self.answer_format {
            return Err(format!("{}: ground truth format mismatch", self.id));
        }
        if self.frame_ids.is_empty() || (self.frame_ids.len() > 1 && self.task != Task::CaptionMulti) {
            return Err(format!("{}: bad frame list", self.id));
        }
        let (w, h) = (i64::from(width), i64::from(height));
        match &self.ground_truth {
            GroundTruth::Choice { index, letter } => {
                let choices = self.choices.as_ref().ok_or_else(|| format!("{}: no options", self.id))?;
                if !(4..=6).contains(&choices.len()) {
                    return Err(format!("{}: {} options", self.id, choices.len()));
                }
                let mut sorted = choices.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != choices.len() {
                    return Err(format!("{}: duplicate options", self.id));
                }
                if *index >= choices.len() || CHOICE_LETTERS[*index] != *letter {
                    return Err(format!("{}: answer letter out of range", self.id));
                }
            }
            GroundTruth::Boxes { boxes } => {
                if boxes.iter().any(|b| b.x1 < 0 || b.y1 < 0 || b.x2 >= w || b.y2 >= h || b.x1 > b.x2 || b.y1 > b.y2) {
                    return Err(format!("{}: box outside image", self.id));
                }
            }
            GroundTruth::Points { points, region } => {
                if points.iter().any(|p| i64::from(p.x) >= w || i64::from(p.y) >= h) {
                    return Err(format!("{}: point outside image", self.id));
                }
                if points.iter().any(|p| !runs_contain(region, *p)) {
                    return Err(format!("{}: point outside its region", self.id));
                }
            }
            GroundTruth::Open { .. } => {}
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QaError {
    /// The frame has nothing to ask for this task; skip it.
    NothingToAsk(String),
    MissingFunctionTable,
    FormatMismatch { expected: AnswerFormat, found: AnswerFormat },
    InsufficientRecords { available: usize, target: usize },
    UnsupportedTask(Task),
}

impl fmt::Display for QaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NothingToAsk(why) => write!(f, "nothing to ask: {why}"),
            Self::MissingFunctionTable => write!(f, "function-description table is empty"),
            Self::FormatMismatch { expected, found } => {
                write!(f, "payload is {found:?} but format is {expected:?}")
            }
            Self::InsufficientRecords { available, target } => {
                write!(f, "only {available} eligible records for a benchmark of {target}")
            }
            Self::UnsupportedTask(t) => write!(f, "task {t} is not handled by this generator"),
        }
    }
}

/// Generation thresholds and tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub background: Option<u16>,
    pub connectivity: Connectivity,
    pub free_space_min_area: usize,
    pub relation_min_dist: f64,
    pub landing_min_area: usize,
    pub height_tolerance: f64,
    /// Inclusive range of option counts for multiple-choice records.
    pub choice_options: (usize, usize),
    /// Smallest instance considered by any task.
    pub min_instance_area: usize,
    /// Cap on records of one task from one frame (counting: per class).
    pub max_records_per_task: usize,
    pub multi_frame_len: usize,
    /// Cap on oversampling weight for rare counting classes.
    pub counting_weight_cap: f64,
    pub color: ColorTable,
    pub functions: FunctionTable,
    pub hazards: HazardTable,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            background: Some(crate::catalog::DEFAULT_BACKGROUND),
            connectivity: Connectivity::Four,
            free_space_min_area: FREE_SPACE_MIN_AREA,
            relation_min_dist: RELATION_MIN_DIST,
            landing_min_area: LANDING_MIN_AREA,
            height_tolerance: HEIGHT_TOLERANCE,
            choice_options: (4, 6),
            min_instance_area: 1,
            max_records_per_task: 3,
            multi_frame_len: 3,
            counting_weight_cap: 10.0,
            color: ColorTable::default(),
            functions: FunctionTable::default(),
            hazards: HazardTable::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_encode_membership() {
        let px = alloc::vec![
            Pixel::new(1, 0),
            Pixel::new(2, 0),
            Pixel::new(4, 0),
            Pixel::new(0, 2),
        ];
        let runs = runs_from_pixels(&px);
        assert_eq!(runs.len(), 3);
        assert_eq!(runs_area(&runs), 4);
        for p in &px {
            assert!(runs_contain(&runs, *p));
        }
        assert!(!runs_contain(&runs, Pixel::new(3, 0)));
        assert!(!runs_contain(&runs, Pixel::new(0, 1)));
        assert!(!runs_contain(&runs, Pixel::new(5, 2)));
    }

    #[test]
    fn task_names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.as_str().parse::<Task>(), Ok(t));
        }
        assert!("nope".parse::<Task>().is_err());
        let perception = Task::ALL
            .iter()
            .filter(|t| t.category() == Category::EnvironmentalPerception)
            .count();
        assert_eq!(perception, 8);
    }
}
