use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::judge::{Judge, JudgeError};
use super::overlap::{score_boxes, score_points_in_runs};
use super::parse::{first_number, parse_answer, StructuredAnswer};
use super::text::{bleu, mentions, position_of, tokenize};
use crate::projection::HeightVerdict;
use crate::qa::{Category, GroundTruth, OpenGrading, QaRecord, Task};

/// Largest relative error accepted for a distance answer.
pub const DISTANCE_REL_TOL: f64 = 0.2;

/// Outcome of scoring one prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub record_id: String,
    pub task: Task,
    /// In `[0, 1]`; `None` when the record could not be scored (judge down).
    pub value: Option<f64>,
    #[serde(default)]
    pub parse_failure: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hit_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    fn new(record: &QaRecord, value: Option<f64>) -> Self {
        Self {
            record_id: record.id.clone(),
            task: record.task,
            value,
            parse_failure: false,
            hit_rate: None,
            bleu: None,
            note: None,
        }
    }
}

fn judged(record: &QaRecord, reference: &str, raw: &str, judge: &dyn Judge) -> Verdict {
    match judge.score(&record.prompt_text(), reference, raw) {
        Ok(s) => Verdict::new(record, Some(f64::from(s.clamp(1, 10)) / 10.0)),
        Err(e @ (JudgeError::Unavailable(_) | JudgeError::UnparseableReply(_))) => {
            let mut v = Verdict::new(record, None);
            v.note = Some(format!("{e}"));
            v
        }
    }
}

fn binary(ok: bool) -> Option<f64> {
    Some(if ok { 1.0 } else { 0.0 })
}

/// Scores a raw model reply against a record's reference.
///
/// Unparseable structured answers score zero and are flagged. Open answers
/// are graded by class-name match, numeric tolerance, first-named object,
/// BLEU, or the judge, depending on the record.
pub fn score_record(record: &QaRecord, raw: &str, judge: &dyn Judge) -> Verdict {
    let parsed = match parse_answer(raw, record.answer_format) {
        Ok(p) => p,
        Err(e) => {
            let mut v = Verdict::new(record, Some(0.0));
            v.parse_failure = true;
            v.note = Some(format!("{e}"));
            return v;
        }
    };
    match (&record.ground_truth, parsed) {
        (GroundTruth::Boxes { boxes }, StructuredAnswer::Boxes(pred)) => {
            let s = score_boxes(&pred, boxes);
            let mut v = Verdict::new(record, Some(s.miou));
            v.hit_rate = Some(s.hit_rate);
            v
        }
        (GroundTruth::Points { region, .. }, StructuredAnswer::Points(pred)) => {
            Verdict::new(record, Some(score_points_in_runs(&pred, region)))
        }
        (GroundTruth::Choice { letter, .. }, StructuredAnswer::Choice(c)) => {
            Verdict::new(record, binary(c.eq_ignore_ascii_case(letter)))
        }
        (GroundTruth::Open { text, grading }, StructuredAnswer::Open(pred)) => match grading {
            OpenGrading::ClassName { name } => Verdict::new(record, binary(mentions(&pred, name))),
            OpenGrading::Distance { meters } => match first_number(&pred) {
                Some(x) if *meters > 0.0 => {
                    Verdict::new(record, binary(libm::fabs(x - meters) / meters <= DISTANCE_REL_TOL))
                }
                _ => judged(record, text, &pred, judge),
            },
            OpenGrading::Height {
                a_name, b_name, verdict, ..
            } => {
                let tokens = tokenize(&pred);
                let (pa, pb) = (position_of(&tokens, a_name), position_of(&tokens, b_name));
                let first_is_a = match (pa, pb) {
                    (Some(a), Some(b)) => Some(a <= b),
                    (Some(_), None) => Some(true),
                    (None, Some(_)) => Some(false),
                    (None, None) => None,
                };
                match first_is_a {
                    Some(a_first) => Verdict::new(record, binary(a_first == (*verdict == HeightVerdict::AHigher))),
                    None => judged(record, text, &pred, judge),
                }
            }
            OpenGrading::Text => {
                let b = bleu(&pred, text, 4);
                let scores = [b[0], b[1], b[2], b[3]];
                let mut v = Verdict::new(record, Some(scores.iter().sum::<f64>() / 4.0));
                v.bleu = Some(scores);
                v
            }
            OpenGrading::Landing => judged(record, text, &pred, judge),
        },
        _ => {
            let mut v = Verdict::new(record, Some(0.0));
            v.parse_failure = true;
            v.note = Some("answer kind does not match the record".into());
            v
        }
    }
}

/// Per-task summary on a 0–100 scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub task: Task,
    pub category: Category,
    pub score: f64,
    pub scored: usize,
    pub unscored: usize,
    pub parse_failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hit_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu: Option<[f64; 4]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub category: Category,
    pub score: f64,
    pub tasks: usize,
}

/// Results laid out task by task, then per category, then overall.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tasks: Vec<TaskScore>,
    pub categories: Vec<CategoryScore>,
    pub total: f64,
    /// Tasks with records but no scored verdict, with their record counts.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub unscored_only: BTreeMap<Task, usize>,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Folds verdicts into per-task means (×100), then unweighted category and
/// total means over the tasks that have at least one scored verdict.
pub fn aggregate(verdicts: &[Verdict]) -> EvalReport {
    let mut by_task: BTreeMap<Task, Vec<&Verdict>> = BTreeMap::new();
    for v in verdicts {
        by_task.entry(v.task).or_default().push(v);
    }
    let mut tasks = Vec::new();
    let mut unscored_only = BTreeMap::new();
    for task in Task::ALL {
        let Some(vs) = by_task.get(&task) else { continue };
        let scored: Vec<&&Verdict> = vs.iter().filter(|v| v.value.is_some()).collect();
        let Some(score) = mean(scored.iter().filter_map(|v| v.value)) else {
            unscored_only.insert(task, vs.len());
            continue;
        };
        let hit_rate = mean(scored.iter().filter_map(|v| v.hit_rate)).map(|h| h * 100.0);
        let bleu_rows: Vec<[f64; 4]> = scored.iter().filter_map(|v| v.bleu).collect();
        let bleu = (!bleu_rows.is_empty()).then(|| {
            let mut b = [0.0; 4];
            for (n, slot) in b.iter_mut().enumerate() {
                *slot = bleu_rows.iter().map(|r| r[n]).sum::<f64>() / bleu_rows.len() as f64 * 100.0;
            }
            b
        });
        tasks.push(TaskScore {
            task,
            category: task.category(),
            score: score * 100.0,
            scored: scored.len(),
            unscored: vs.len() - scored.len(),
            parse_failures: vs.iter().filter(|v| v.parse_failure).count(),
            hit_rate,
            bleu,
        });
    }
    let categories = [Category::EnvironmentalPerception, Category::SceneUnderstanding]
        .into_iter()
        .filter_map(|c| {
            let members: Vec<f64> = tasks.iter().filter(|t| t.category == c).map(|t| t.score).collect();
            mean(members.iter().copied()).map(|score| CategoryScore {
                category: c,
                score,
                tasks: members.len(),
            })
        })
        .collect();
    let total = mean(tasks.iter().map(|t| t.score)).unwrap_or(0.0);
    EvalReport {
        tasks,
        categories,
        total,
        unscored_only,
    }
}

impl EvalReport {
    pub fn task(&self, task: Task) -> Option<&TaskScore> {
        self.tasks.iter().find(|t| t.task == task)
    }

    /// Tasks from `expected` with no scored verdict.
    pub fn missing(&self, expected: &[Task]) -> Vec<Task> {
        expected.iter().copied().filter(|t| self.task(*t).is_none()).collect()
    }

    /// Fixed-width text table.
    pub fn render_table(&self) -> String {
        let mut s = format!(
            "{:<16} {:>8} {:>8} {:>6} {:>6} {:>6}\n",
            "task", "score", "hit@0.5", "n", "parse!", "skip"
        );
        for c in &self.categories {
            s.push_str(&format!("-- {} --\n", c.category.label()));
            for t in self.tasks.iter().filter(|t| t.category == c.category) {
                let hit = t.hit_rate.map_or_else(|| String::from("-"), |h| format!("{h:.2}"));
                s.push_str(&format!(
                    "{:<16} {:>8.2} {:>8} {:>6} {:>6} {:>6}\n",
                    t.task.as_str(),
                    t.score,
                    hit,
                    t.scored,
                    t.parse_failures,
                    t.unscored
                ));
            }
            s.push_str(&format!("{:<16} {:>8.2}\n", "average", c.score));
        }
        s.push_str(&format!("{:<16} {:>8.2}\n", "total", self.total));
        for (t, n) in &self.unscored_only {
            s.push_str(&format!("{:<16} {:>8} {:>8} {:>6} {:>6} {:>6}\n", t.as_str(), "-", "-", 0, 0, n));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v(task: Task, value: f64) -> Verdict {
        Verdict {
            record_id: String::from("r"),
            task,
            value: Some(value),
            parse_failure: false,
            hit_rate: None,
            bleu: None,
            note: None,
        }
    }

    #[test]
    fn aggregate_examples() {
        let r = aggregate(&[v(Task::Box, 1.0), v(Task::Box, 1.0)]);
        assert_eq!(r.task(Task::Box).unwrap().score, 100.0);
        assert_eq!(r.total, 100.0);
        let r = aggregate(&[v(Task::Box, 0.4), v(Task::Landing, 0.6)]);
        assert!((r.total - 50.0).abs() < 1e-12);
        assert_eq!(r.categories.len(), 2);
    }

    #[test]
    fn unscored_only_task_is_missing() {
        let mut u = v(Task::Landing, 0.0);
        u.value = None;
        let r = aggregate(&[v(Task::Box, 1.0), u]);
        assert_eq!(r.missing(&[Task::Box, Task::Landing]), vec![Task::Landing]);
        assert_eq!(r.unscored_only[&Task::Landing], 1);
        assert!(r.render_table().lines().last().unwrap().starts_with("landing"));
    }

    #[test]
    fn order_invariant() {
        let a = vec![v(Task::Box, 0.1), v(Task::Color, 0.7), v(Task::Box, 0.3)];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(aggregate(&a), aggregate(&b));
    }
}
