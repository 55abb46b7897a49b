//! Deterministic prompt context for tasks whose reference text comes from a
//! vision-language model (captions, landing) plus the function inventory.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{GenConfig, QaError, Task};
use crate::catalog::RiskLevel;
use crate::color::dominant_color;
use crate::geometry::{background_regions, extract_instances};
use crate::scene::{BBox, ObjectInstance, SceneFrame};

/// Free areas listed for landing must be strictly larger than this.
pub const LANDING_MIN_AREA: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassLayout {
    pub class: String,
    pub instances: usize,
    /// Fraction of the image covered, rounded to 4 decimals.
    pub area_fraction: f64,
    /// Coarse 3×3 location of the area-weighted centroid.
    pub location: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub frame_id: String,
    /// Class names present (background included), ascending by class id.
    pub classes: Vec<String>,
    pub layout: Vec<ClassLayout>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeArea {
    pub bbox: BBox,
    pub area: usize,
    pub location: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hazard {
    pub class: String,
    pub bbox: BBox,
    pub risk: RiskLevel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandingContext {
    pub target_distribution: Vec<ClassLayout>,
    /// Background regions with area above the landing threshold, largest first.
    pub free_areas: Vec<FreeArea>,
    pub hazards: Vec<Hazard>,
    pub surface_features: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticContext {
    pub task: Task,
    pub frames: Vec<FrameSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landing: Option<LandingContext>,
    /// Class → functional descriptions, for classes present (function task).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, Vec<String>>,
    /// Instruction for the model that writes the reference answer.
    pub prompt: String,
}

fn round4(v: f64) -> f64 {
    libm::round(v * 1e4) / 1e4
}

fn location_name(x: f64, y: f64, w: u32, h: u32) -> String {
    let col = ((3.0 * x / f64::from(w)) as usize).min(2);
    let row = ((3.0 * y / f64::from(h)) as usize).min(2);
    let name = match (row, col) {
        (0, 0) => "top-left",
        (0, 1) => "top",
        (0, _) => "top-right",
        (1, 0) => "left",
        (1, 1) => "center",
        (1, _) => "right",
        (_, 0) => "bottom-left",
        (_, 1) => "bottom",
        _ => "bottom-right",
    };
    name.to_string()
}

fn class_name(frame: &SceneFrame, id: u16) -> String {
    frame
        .mask
        .class_name(id)
        .map_or_else(|| format!("class {id}"), ToString::to_string)
}

fn summarize(frame: &SceneFrame, cfg: &GenConfig, instances: &[ObjectInstance]) -> FrameSummary {
    let (w, h) = (frame.width(), frame.height());
    let total = f64::from(w) * f64::from(h);
    let present = frame.mask.present_classes();
    let layout = present
        .iter()
        .map(|&id| {
            let (mut n, mut sx, mut sy, mut count) = (0usize, 0.0, 0.0, 0usize);
            if Some(id) == cfg.background {
                for y in 0..h {
                    for x in 0..w {
                        if frame.mask.get(x, y) == id {
                            sx += f64::from(x);
                            sy += f64::from(y);
                            count += 1;
                        }
                    }
                }
            } else {
                for inst in instances.iter().filter(|i| i.class_id == id) {
                    n += 1;
                    sx += inst.centroid.0 * inst.area as f64;
                    sy += inst.centroid.1 * inst.area as f64;
                    count += inst.area;
                }
            }
            let c = count.max(1) as f64;
            ClassLayout {
                class: class_name(frame, id),
                instances: n,
                area_fraction: round4(count as f64 / total),
                location: location_name(sx / c, sy / c, w, h),
            }
        })
        .collect();
    FrameSummary {
        frame_id: frame.frame_id.clone(),
        classes: present.iter().map(|&id| class_name(frame, id)).collect(),
        layout,
    }
}

pub fn describe_layout(summary: &FrameSummary) -> String {
    summary
        .layout
        .iter()
        .map(|l| {
            if l.instances > 0 {
                format!(
                    "{} ({} instance(s), {:.1}% of the view, {})",
                    l.class,
                    l.instances,
                    l.area_fraction * 100.0,
                    l.location
                )
            } else {
                format!("{} ({:.1}% of the view, {})", l.class, l.area_fraction * 100.0, l.location)
            }
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn landing_context(
    frame: &SceneFrame,
    cfg: &GenConfig,
    instances: &[ObjectInstance],
    summary: &FrameSummary,
) -> LandingContext {
    let (w, h) = (frame.width(), frame.height());
    let mut free_areas: Vec<FreeArea> =
        background_regions(&frame.mask, cfg.background, cfg.landing_min_area, cfg.connectivity)
            .unwrap_or_default()
            .into_iter()
            .filter_map(|px| {
                let area = px.len();
                ObjectInstance::from_pixels(0, px).map(|r| FreeArea {
                    bbox: r.bbox,
                    area,
                    location: location_name(r.centroid.0, r.centroid.1, w, h),
                })
            })
            .collect();
    free_areas.sort_by(|a, b| b.area.cmp(&a.area).then(a.bbox.y1.cmp(&b.bbox.y1)).then(a.bbox.x1.cmp(&b.bbox.x1)));

    let hazards = instances
        .iter()
        .filter_map(|inst| {
            let class = class_name(frame, inst.class_id);
            cfg.hazards.risk(&class).map(|risk| Hazard {
                class,
                bbox: inst.bbox,
                risk,
            })
        })
        .collect();

    let mut surfaces: Vec<&ClassLayout> = summary.layout.iter().collect();
    surfaces.sort_by(|a, b| {
        b.area_fraction
            .partial_cmp(&a.area_fraction)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| a.class.cmp(&b.class))
    });
    let surface_features = surfaces
        .into_iter()
        .take(3)
        .map(|l| {
            let id = frame
                .mask
                .class_table
                .iter()
                .find(|(_, n)| **n == l.class)
                .map(|(id, _)| *id);
            let color = id.and_then(|id| {
                let px: Vec<_> = instances
                    .iter()
                    .filter(|i| i.class_id == id)
                    .flat_map(|i| i.pixels.iter().copied())
                    .collect();
                ObjectInstance::from_pixels(id, px)
                    .map(|merged| dominant_color(&frame.rgb, &merged, &cfg.color).render())
            });
            match color {
                Some(c) => format!("{} surface ({}), {:.1}% of the view", l.class, c, l.area_fraction * 100.0),
                None => format!("{} surface, {:.1}% of the view", l.class, l.area_fraction * 100.0),
            }
        })
        .collect();

    LandingContext {
        target_distribution: summary.layout.iter().filter(|l| l.instances > 0).cloned().collect(),
        free_areas,
        hazards,
        surface_features,
    }
}

fn landing_prompt(summary: &FrameSummary, ctx: &LandingContext) -> String {
    let mut s = String::from(
        "You are assessing whether a UAV can land in the area shown in this aerial image.\n",
    );
    s.push_str(&format!("Objects: {}.\n", describe_layout(summary)));
    if ctx.free_areas.is_empty() {
        s.push_str("Available airspace: none larger than the minimum landing area.\n");
    } else {
        let areas: Vec<String> = ctx
            .free_areas
            .iter()
            .map(|a| {
                format!(
                    "{} px at [{},{},{},{}] ({})",
                    a.area, a.bbox.x1, a.bbox.y1, a.bbox.x2, a.bbox.y2, a.location
                )
            })
            .collect();
        s.push_str(&format!("Available airspace: {}.\n", areas.join("; ")));
    }
    if ctx.hazards.is_empty() {
        s.push_str("Potential hazards: none detected.\n");
    } else {
        let hz: Vec<String> = ctx
            .hazards
            .iter()
            .map(|h| {
                format!(
                    "{} at [{},{},{},{}] ({} risk)",
                    h.class,
                    h.bbox.x1,
                    h.bbox.y1,
                    h.bbox.x2,
                    h.bbox.y2,
                    h.risk.as_str()
                )
            })
            .collect();
        s.push_str(&format!("Potential hazards: {}.\n", hz.join("; ")));
    }
    s.push_str(&format!("Surface features: {}.\n", ctx.surface_features.join("; ")));
    s.push_str(
        "Reply with lines `feasibility: safe|cautious|unsafe`, `confidence: 0-1`, \
         `region: ...`, `hazards: ...`, `reasoning: ...`.",
    );
    s
}

/// Builds the prompt context for a caption, function or landing task.
pub fn gen_semantic_context(
    frames: &[&SceneFrame],
    task: Task,
    cfg: &GenConfig,
) -> Result<SemanticContext, QaError> {
    let first = frames
        .first()
        .ok_or_else(|| QaError::NothingToAsk("no frames".to_string()))?;
    let per_frame: Vec<(Vec<ObjectInstance>, FrameSummary)> = frames
        .iter()
        .map(|f| {
            let inst = extract_instances(&f.mask, cfg.background, cfg.connectivity);
            let summary = summarize(f, cfg, &inst);
            (inst, summary)
        })
        .collect();
    let summaries: Vec<FrameSummary> = per_frame.iter().map(|(_, s)| s.clone()).collect();
    let mut ctx = SemanticContext {
        task,
        frames: summaries,
        landing: None,
        functions: BTreeMap::new(),
        prompt: String::new(),
    };
    match task {
        Task::CaptionSingle => {
            ctx.prompt = format!(
                "This aerial image was captured by a UAV looking down at the scene. It contains: {}. \
                 Write a caption covering the scene composition, the spatial distribution of objects \
                 and the environmental context, emphasizing what is distinctive about the aerial perspective.",
                describe_layout(&ctx.frames[0])
            );
        }
        Task::CaptionMulti => {
            let mut s = format!(
                "These {} aerial images were captured in sequence by a UAV.",
                frames.len()
            );
            for (i, f) in ctx.frames.iter().enumerate() {
                s.push_str(&format!(" Frame {}: {}.", i + 1, describe_layout(f)));
            }
            for pair in ctx.frames.windows(2) {
                let appeared: Vec<&String> = pair[1].classes.iter().filter(|c| !pair[0].classes.contains(c)).collect();
                let vanished: Vec<&String> = pair[0].classes.iter().filter(|c| !pair[1].classes.contains(c)).collect();
                if !appeared.is_empty() || !vanished.is_empty() {
                    s.push_str(&format!(
                        " Between {} and {}: appeared [{}], disappeared [{}].",
                        pair[0].frame_id,
                        pair[1].frame_id,
                        appeared.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", "),
                        vanished.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", ")
                    ));
                }
            }
            s.push_str(
                " Write one caption describing the scene composition, spatial object distribution, \
                 environmental context and the spatial variations across the sequence.",
            );
            ctx.prompt = s;
        }
        Task::Landing => {
            let (inst, summary) = &per_frame[0];
            let landing = landing_context(first, cfg, inst, summary);
            ctx.prompt = landing_prompt(summary, &landing);
            ctx.landing = Some(landing);
        }
        Task::Function => {
            if cfg.functions.0.is_empty() {
                return Err(QaError::MissingFunctionTable);
            }
            for name in &ctx.frames[0].classes {
                if let Some(d) = cfg.functions.descriptions(name) {
                    ctx.functions.insert(name.clone(), d.to_vec());
                }
            }
            ctx.prompt = format!(
                "Objects in this aerial image: {}. Explain the function of the object at the queried point.",
                describe_layout(&ctx.frames[0])
            );
        }
        other => return Err(QaError::UnsupportedTask(other)),
    }
    Ok(ctx)
}
