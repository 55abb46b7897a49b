use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{QaError, QaRecord, Task};
use crate::rng::stream;

/// A benchmark split plus the training pool that shares no frame with it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CurateOutcome {
    pub bench: Vec<QaRecord>,
    pub train: Vec<QaRecord>,
    /// Records left out because their reference answer is still pending.
    pub pending_excluded: usize,
    pub warnings: Vec<String>,
}

impl CurateOutcome {
    pub fn bench_frames(&self) -> BTreeSet<&str> {
        self.bench.iter().flat_map(|r| r.frame_ids.iter().map(String::as_str)).collect()
    }
}

/// Orders a task's records so consecutive picks rotate through classes.
fn round_robin<'a>(records: Vec<&'a QaRecord>, rng: &mut crate::rng::StreamRng) -> Vec<&'a QaRecord> {
    let mut by_class: BTreeMap<Option<u16>, Vec<&QaRecord>> = BTreeMap::new();
    for r in records {
        by_class.entry(r.meta.class_ids.first().copied()).or_default().push(r);
    }
    let mut queues: Vec<Vec<&QaRecord>> = by_class.into_values().collect();
    queues.shuffle(rng);
    for q in &mut queues {
        q.shuffle(rng);
        q.reverse();
    }
    let mut out = Vec::new();
    loop {
        let mut progressed = false;
        for q in &mut queues {
            if let Some(r) = q.pop() {
                out.push(r);
                progressed = true;
            }
        }
        if !progressed {
            return out;
        }
    }
}

/// Picks `target` ready records with equal per-task quotas (tasks short of
/// their quota give the remainder to the others) and class round-robin
/// within each task. Every record touching a benchmark frame is dropped from
/// the training pool. Both outputs are sorted by id.
pub fn curate_benchmark(records: &[QaRecord], target: usize, seed: u64) -> Result<CurateOutcome, QaError> {
    curate_benchmark_with_quotas(records, target, &BTreeMap::new(), seed)
}

/// [`curate_benchmark`] where tasks listed in `fixed` take exactly that many
/// records (or all they have) and the rest share what remains.
pub fn curate_benchmark_with_quotas(
    records: &[QaRecord],
    target: usize,
    fixed: &BTreeMap<Task, usize>,
    seed: u64,
) -> Result<CurateOutcome, QaError> {
    let ready: Vec<&QaRecord> = records.iter().filter(|r| !r.is_pending()).collect();
    let pending_excluded = records.len() - ready.len();
    if ready.len() < target {
        return Err(QaError::InsufficientRecords {
            available: ready.len(),
            target,
        });
    }
    let mut by_task: BTreeMap<Task, Vec<&QaRecord>> = BTreeMap::new();
    for r in &ready {
        by_task.entry(r.task).or_default().push(r);
    }
    let mut warnings = Vec::new();
    if by_task.len() == 1 {
        warnings.push(format!(
            "benchmark covers a single task ({})",
            by_task.keys().next().map_or("", |t| t.as_str())
        ));
    }

    let mut tasks: Vec<(Task, Vec<&QaRecord>)> = by_task
        .into_iter()
        .map(|(task, recs)| {
            let mut rng = stream(seed, &["curate", task.as_str()]);
            (task, round_robin(recs, &mut rng))
        })
        .collect();
    // Fixed quotas first, then the others from scarcest to most plentiful.
    tasks.sort_by_key(|(t, recs)| (!fixed.contains_key(t), recs.len(), *t));

    let mut bench: Vec<QaRecord> = Vec::with_capacity(target);
    let mut remaining = target;
    let n_shared = tasks.iter().filter(|(t, _)| !fixed.contains_key(t)).count();
    let mut shared_seen = 0;
    for (task, recs) in &tasks {
        let quota = match fixed.get(task) {
            Some(&q) => q.min(recs.len()).min(remaining),
            None => {
                let left = n_shared - shared_seen;
                shared_seen += 1;
                remaining.div_ceil(left).min(recs.len())
            }
        };
        bench.extend(recs[..quota].iter().map(|r| (*r).clone()));
        remaining -= quota;
    }
    bench.sort_by(|a, b| a.id.cmp(&b.id));

    let frames: BTreeSet<&str> = bench.iter().flat_map(|r| r.frame_ids.iter().map(String::as_str)).collect();
    let mut train: Vec<QaRecord> = ready
        .iter()
        .filter(|r| r.frame_ids.iter().all(|f| !frames.contains(f.as_str())))
        .map(|r| (*r).clone())
        .collect();
    train.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(CurateOutcome {
        bench,
        train,
        pending_excluded,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qa::{AnswerFormat, GroundTruth, RecordMeta};
    use alloc::string::ToString;
    use alloc::vec;

    fn rec(id: usize, task: Task, frame: usize, class: u16) -> QaRecord {
        QaRecord {
            id: format!("r{id:04}"),
            frame_ids: vec![format!("f{frame:03}")],
            task,
            question: "q".to_string(),
            answer_format: AnswerFormat::Choice,
            ground_truth: GroundTruth::Choice { index: 0, letter: 'A' },
            answer: "<choice>A</choice>".to_string(),
            choices: None,
            meta: RecordMeta {
                class_ids: vec![class],
                ..RecordMeta::default()
            },
        }
    }

    fn pool() -> Vec<QaRecord> {
        let mut v = Vec::new();
        for i in 0..300 {
            let task = [Task::Counting, Task::Color, Task::Relation][i % 3];
            v.push(rec(i, task, i / 4, (i % 5) as u16));
        }
        // A scarce task.
        v.push(rec(900, Task::Box, 200, 1));
        v
    }

    #[test]
    fn quotas_fill_target_and_split_is_disjoint() {
        let out = curate_benchmark(&pool(), 40, 3).unwrap();
        assert_eq!(out.bench.len(), 40);
        let counts = out.bench.iter().fold(BTreeMap::new(), |mut m, r| {
            *m.entry(r.task).or_insert(0) += 1;
            m
        });
        assert_eq!(counts[&Task::Box], 1);
        assert_eq!(counts[&Task::Counting] + counts[&Task::Color] + counts[&Task::Relation], 39);
        assert!(counts.values().all(|&c| c <= 13));
        let frames = out.bench_frames();
        assert!(out.train.iter().all(|r| r.frame_ids.iter().all(|f| !frames.contains(f.as_str()))));
        assert!(!out.train.is_empty());
    }

    #[test]
    fn classes_rotate_within_a_task() {
        let out = curate_benchmark(&pool(), 30, 9).unwrap();
        let classes: BTreeSet<u16> = out
            .bench
            .iter()
            .filter(|r| r.task == Task::Color)
            .map(|r| r.meta.class_ids[0])
            .collect();
        assert_eq!(classes.len(), 5);
    }

    #[test]
    fn insufficient_and_pending() {
        let mut v = pool();
        v[0].meta.status = crate::qa::RecordStatus::Pending;
        let err = curate_benchmark(&v, 1000, 0).unwrap_err();
        assert_eq!(
            err,
            QaError::InsufficientRecords {
                available: 300,
                target: 1000
            }
        );
        let out = curate_benchmark(&v, 10, 0).unwrap();
        assert_eq!(out.pending_excluded, 1);
        assert!(out.bench.iter().all(|r| !r.is_pending()));
    }

    #[test]
    fn fixed_quotas_take_precedence() {
        let fixed = BTreeMap::from([(Task::Color, 20)]);
        let out = curate_benchmark_with_quotas(&pool(), 40, &fixed, 1).unwrap();
        assert_eq!(out.bench.len(), 40);
        assert_eq!(out.bench.iter().filter(|r| r.task == Task::Color).count(), 20);
    }

    #[test]
    fn single_task_warns() {
        let v: Vec<QaRecord> = (0..10).map(|i| rec(i, Task::Color, i, 1)).collect();
        assert_eq!(curate_benchmark(&v, 5, 0).unwrap().warnings.len(), 1);
    }
}
