//! Answer parsing and scoring.

mod judge;
mod overlap;
mod parse;
mod report;
mod text;

pub use judge::{judge_prompt, parse_judge_reply, Judge, JudgeError, MockJudge};
pub use overlap::{iou, score_boxes, score_points, score_points_in_runs, BoxScore, HIT_IOU};
pub use parse::{first_number, parse_answer, ParseFailure, StructuredAnswer};
pub use report::{aggregate, score_record, CategoryScore, EvalReport, TaskScore, Verdict, DISTANCE_REL_TOL};
pub use text::{bleu, mentions, position_of, token_f1, tokenize};
