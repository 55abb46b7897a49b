use std::collections::BTreeSet;

use skyforge_core::geometry::{classify_relation, extract_instances, Connectivity};
use skyforge_core::metrics::{aggregate, score_record, MockJudge};
use skyforge_core::projection::{object_mean_depth, object_mean_height};
use skyforge_core::qa::{
    balance_counting, curate_benchmark, generate_frame, generate_multi_frame, GenConfig, QaRecord, Task,
    TemplateBank,
};
use skyforge_core::responder::{offline_reference, resolve_reference, OracleResponder, Responder};
use skyforge_core::synth::{random_spec, synth_scene};
use skyforge_core::SceneFrame;

fn frames(n: usize, size: u32, seed: u64) -> Vec<SceneFrame> {
    (0..n)
        .map(|i| synth_scene(&random_spec(&format!("s{i:03}"), size, seed)).unwrap().0)
        .collect()
}

fn dataset(frames: &[SceneFrame], seed: u64) -> Vec<QaRecord> {
    let cfg = GenConfig::default();
    let bank = TemplateBank::default();
    let mut records = Vec::new();
    for f in frames {
        records.extend(generate_frame(f, &Task::ALL, &cfg, &bank, seed).records);
    }
    let refs: Vec<&SceneFrame> = frames.iter().collect();
    records.extend(generate_multi_frame(&refs, &cfg, &bank, seed).records);
    let mut records = balance_counting(records, &cfg, &bank, seed);
    for r in &mut records {
        if r.is_pending() {
            let text = offline_reference(r.meta.context.as_ref().unwrap());
            resolve_reference(r, &text);
        }
    }
    records
}

#[test]
fn every_task_is_generated_and_records_are_consistent() {
    let fs = frames(8, 128, 11);
    let records = dataset(&fs, 11);
    let tasks: BTreeSet<Task> = records.iter().map(|r| r.task).collect();
    assert_eq!(tasks.len(), 13, "{tasks:?}");
    for r in &records {
        r.check(128, 128).unwrap();
        assert!(!r.question.contains('{'), "unfilled slot in {}", r.question);
    }
    let ids: BTreeSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids.len(), records.len());
}

#[test]
fn generation_is_deterministic() {
    let fs = frames(4, 96, 3);
    assert_eq!(dataset(&fs, 3), dataset(&fs, 3));
    assert_ne!(dataset(&fs, 3), dataset(&fs, 4));
}

#[test]
fn oracle_scores_full_marks() {
    let fs = frames(8, 128, 5);
    let records = dataset(&fs, 5);
    let verdicts: Vec<_> = records
        .iter()
        .map(|r| score_record(r, &OracleResponder.respond(r), &MockJudge))
        .collect();
    let report = aggregate(&verdicts);
    for t in &report.tasks {
        assert!((t.score - 100.0).abs() < 1e-9, "{:?} scored {}", t.task, t.score);
        if t.task == Task::Box {
            assert_eq!(t.hit_rate, Some(100.0));
        }
    }
    assert!((report.total - 100.0).abs() < 1e-9);
}

#[test]
fn synthetic_sheet_matches_pipeline() {
    for seed in 0..10 {
        let spec = random_spec("sheet", 128, seed);
        let (frame, sheet) = synth_scene(&spec).unwrap();
        let inst = extract_instances(&frame.mask, Some(0), Connectivity::Four);
        assert_eq!(inst.len(), sheet.objects.len());
        for o in &sheet.objects {
            let i = inst.iter().find(|i| i.bbox == o.bbox).expect("instance for sheet object");
            assert_eq!(i.class_id, o.class_id);
            assert_eq!(i.area, o.area);
            assert!((object_mean_depth(&frame, i).unwrap() - o.depth).abs() < 1e-6);
            assert!((object_mean_height(&frame, i).unwrap() - o.world_height).abs() < 1e-6);
        }
        for rel in &sheet.relations {
            let (a, b) = (&sheet.objects[rel.subject], &sheet.objects[rel.object]);
            let got = classify_relation(a.centroid, b.centroid, 50.0).unwrap().unwrap();
            assert_eq!(got.class, rel.relation);
        }
    }
}

#[test]
fn curated_bench_shares_no_frame_with_train() {
    let fs = frames(12, 96, 8);
    let records = dataset(&fs, 8);
    let out = curate_benchmark(&records, 60, 8).unwrap();
    assert_eq!(out.bench.len(), 60);
    let bench = out.bench_frames();
    for r in &out.train {
        assert!(r.frame_ids.iter().all(|f| !bench.contains(f.as_str())));
    }
}
