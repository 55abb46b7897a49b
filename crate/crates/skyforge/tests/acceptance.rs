//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skyforge::commands::{
    cmd_curate, cmd_evaluate, cmd_generate, cmd_synth, CommonArgs, CurateArgs, EndpointArgs, EvaluateArgs,
    GenerateArgs, MockModel, SynthArgs,
};
use skyforge::dataset::read_jsonl;
use skyforge_core::geometry::{background_regions, classify_relation, extract_instances};
use skyforge_core::metrics::{bleu, iou, score_boxes, score_points, HIT_IOU};
use skyforge_core::projection::{in_mask_camera_points, object_mean_depth, object_mean_height};
use skyforge_core::qa::{QaRecord, Task};
use skyforge_core::rewards::{
    box_reward, choice_reward, grpo_loss, grpo_loss_grad, point_reward, sft_loss, GrpoSample, DEFAULT_BETA,
};
use skyforge_core::scene::round_to_pixel;
use skyforge_core::synth::{synth_scene, Placement, Shape, SynthSpec};
use skyforge_core::{BBox, Connectivity, PoseTransform, RelationClass, SemanticMask};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ------------------------------------------------------------------ 1

fn flood_fill_oracle(mask: &SemanticMask) -> BTreeSet<(u16, Vec<(u32, u32)>)> {
    let (w, h) = (mask.width as i64, mask.height as i64);
    let mut seen = vec![false; (w * h) as usize];
    let mut out = BTreeSet::new();
    for start in 0..(w * h) {
        if seen[start as usize] {
            continue;
        }
        let class = mask.class_ids[start as usize];
        let mut stack = vec![start];
        let mut comp = Vec::new();
        seen[start as usize] = true;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            comp.push((x as u32, y as u32));
            for (nx, ny) in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = ny * w + nx;
                if !seen[j as usize] && mask.class_ids[j as usize] == class {
                    seen[j as usize] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_by_key(|&(x, y)| (y, x));
        out.insert((class, comp));
    }
    out
}

fn criterion_geometry() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let classes = rng.random_range(2u16..5);
        let mut mask = SemanticMask::filled(32, 32, 0, BTreeMap::new());
        // Random blocks so that components have some size.
        for y in 0..32 {
            for x in 0..32 {
                let v = if rng.random_bool(0.7) && x > 0 { mask.get(x - 1, y) } else { rng.random_range(0..classes) };
                mask.set(x, y, v);
            }
        }
        let oracle = flood_fill_oracle(&mask);
        let instances = extract_instances(&mask, None, Connectivity::Four);
        let got: BTreeSet<(u16, Vec<(u32, u32)>)> = instances
            .iter()
            .map(|inst| {
                let mut px: Vec<(u32, u32)> = inst.pixels.iter().map(|p| (p.x, p.y)).collect();
                px.sort_by_key(|&(x, y)| (y, x));
                (inst.class_id, px)
            })
            .collect();
        assert_eq!(got, oracle);
        for inst in &instances {
            let xs = inst.pixels.iter().map(|p| i64::from(p.x));
            let ys = inst.pixels.iter().map(|p| i64::from(p.y));
            let want = BBox::new(xs.clone().min().unwrap(), ys.clone().min().unwrap(), xs.max().unwrap(), ys.max().unwrap());
            assert_eq!(inst.bbox, want);
            let n = inst.pixels.len() as f64;
            let cx = inst.pixels.iter().map(|p| f64::from(p.x)).sum::<f64>() / n;
            let cy = inst.pixels.iter().map(|p| f64::from(p.y)).sum::<f64>() / n;
            assert_eq!(inst.centroid, (cx, cy));
            assert_eq!(inst.area, inst.pixels.len());
        }
        let min_area = 20;
        let free: BTreeSet<Vec<(u32, u32)>> = background_regions(&mask, Some(0), min_area, Connectivity::Four)
            .unwrap()
            .into_iter()
            .map(|px| {
                let mut px: Vec<(u32, u32)> = px.iter().map(|p| (p.x, p.y)).collect();
                px.sort_by_key(|&(x, y)| (y, x));
                px
            })
            .collect();
        let want: BTreeSet<Vec<(u32, u32)>> =
            oracle.into_iter().filter(|(c, px)| *c == 0 && px.len() > min_area).map(|(_, px)| px).collect();
        assert_eq!(free, want);
    }
    assert!(start.elapsed() < Duration::from_secs(10), "took {:?}", start.elapsed());
}

// ------------------------------------------------------------------ 2

fn criterion_relations() {
    use RelationClass::*;
    type Case = ((f64, f64), (f64, f64), Option<RelationClass>);
    let labelled: [Case; 24] = [
        ((100.0, 100.0), (200.0, 100.0), Some(Right)),
        ((100.0, 100.0), (200.0, 200.0), Some(DownRight)),
        ((100.0, 100.0), (100.0, 200.0), Some(Down)),
        ((100.0, 100.0), (0.0, 200.0), Some(DownLeft)),
        ((100.0, 100.0), (0.0, 100.0), Some(Left)),
        ((100.0, 100.0), (0.0, 0.0), Some(UpLeft)),
        ((100.0, 100.0), (100.0, 0.0), Some(Up)),
        ((100.0, 100.0), (200.0, 0.0), Some(UpRight)),
        // Off-axis, still well inside each sector.
        ((0.0, 0.0), (90.0, 30.0), Some(Right)),
        ((0.0, 0.0), (60.0, 80.0), Some(DownRight)),
        ((0.0, 0.0), (-30.0, 90.0), Some(Down)),
        ((0.0, 0.0), (-80.0, 60.0), Some(DownLeft)),
        ((0.0, 0.0), (-90.0, -30.0), Some(Left)),
        ((0.0, 0.0), (-60.0, -80.0), Some(UpLeft)),
        ((0.0, 0.0), (30.0, -90.0), Some(Up)),
        ((0.0, 0.0), (80.0, -60.0), Some(UpRight)),
        // Around the 50 px threshold.
        ((10.0, 10.0), (60.0, 10.0), None),
        ((10.0, 10.0), (60.5, 10.0), Some(Right)),
        ((10.0, 10.0), (10.0, 59.0), None),
        ((10.0, 10.0), (10.0, 61.0), Some(Down)),
        ((0.0, 0.0), (30.0, 40.0), None),
        ((0.0, 0.0), (30.0, 40.1), Some(DownRight)),
        ((50.0, 50.0), (15.0, 15.0), None),
        ((50.0, 50.0), (10.0, 10.0), Some(UpLeft)),
    ];
    for (ci, cj, want) in labelled {
        let got = classify_relation(ci, cj, 50.0).unwrap().map(|r| r.class);
        assert_eq!(got, want, "{ci:?} -> {cj:?}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < 1000 {
        let a = (rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0));
        let b = (rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0));
        let (Some(ab), Some(ba)) = (classify_relation(a, b, 50.0).unwrap(), classify_relation(b, a, 50.0).unwrap())
        else {
            continue;
        };
        let exactly_on_boundary = ((ab.theta / (std::f64::consts::PI / 8.0)).fract()).abs() < 1e-12;
        if !exactly_on_boundary {
            assert_eq!(ba.class, ab.class.antipode(), "{a:?} {b:?}");
        }
        checked += 1;
    }
}

// ------------------------------------------------------------------ 3

fn projection_spec(seed: u64) -> SynthSpec {
    let mut spec = SynthSpec::new("proj", 128, 128, seed);
    let classes: Vec<u16> = spec.class_table.keys().copied().filter(|&c| c != spec.background_class).collect();
    for (i, (x, y, h)) in [(8u32, 8u32, 2.5), (70, 10, 11.0), (12, 70, 0.0), (72, 74, 27.25)].into_iter().enumerate() {
        spec.placements.push(Placement {
            class_id: classes[i % classes.len()],
            shape: if i % 2 == 0 { Shape::Rectangle } else { Shape::Ellipse },
            x,
            y,
            w: 40,
            h: 36,
            rgb: [40 * i as u8, 200, 90],
            height: h,
        });
    }
    spec
}

fn rodrigues(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn criterion_projection() {
    let spec = projection_spec(3);
    let (frame, _) = synth_scene(&spec).unwrap();
    let instances = extract_instances(&frame.mask, Some(spec.background_class), Connectivity::Four);
    assert_eq!(instances.len(), spec.placements.len());
    for inst in &instances {
        let placement = spec
            .placements
            .iter()
            .find(|p| inst.bbox.x1 >= p.x as i64 && inst.bbox.y1 >= p.y as i64 && inst.bbox.x2 < (p.x + p.w) as i64)
            .unwrap();
        let depth = object_mean_depth(&frame, inst).unwrap();
        assert!(close(depth, spec.altitude - placement.height, 1e-6), "{depth} vs {}", spec.altitude - placement.height);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let axis = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0)];
        let r = rodrigues(axis, rng.random_range(-3.0..3.0));
        let t = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(0.0..120.0)];
        let mut posed = frame.clone();
        posed.pose = Some(PoseTransform::from_rigid(&r, &t));
        let m = [
            [r[0][0], r[0][1], r[0][2], t[0]],
            [r[1][0], r[1][1], r[1][2], t[1]],
            [r[2][0], r[2][1], r[2][2], t[2]],
            [0.0, 0.0, 0.0, 1.0],
        ];
        for inst in &instances {
            let pts = in_mask_camera_points(&posed, inst).unwrap();
            let oracle = pts
                .iter()
                .map(|p| {
                    let hom = [p[0], p[1], p[2], 1.0];
                    let world: Vec<f64> = m.iter().map(|row| row.iter().zip(hom).map(|(a, b)| a * b).sum()).collect();
                    world[2] / world[3]
                })
                .sum::<f64>()
                / pts.len() as f64;
            let got = object_mean_height(&posed, inst).unwrap();
            assert!(close(got, oracle, 1e-9), "{got} vs {oracle}");
        }
    }
}

// ------------------------------------------------------------------ 4

fn enumerated_iou(a: &BBox, b: &BBox) -> f64 {
    let cells = |q: &BBox| -> BTreeSet<(i64, i64)> {
        let q = q.normalized();
        (q.x1..=q.x2).flat_map(|x| (q.y1..=q.y2).map(move |y| (x, y))).collect()
    };
    let (sa, sb) = (cells(a), cells(b));
    sa.intersection(&sb).count() as f64 / sa.union(&sb).count() as f64
}

fn criterion_metrics() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rbox = |rng: &mut ChaCha8Rng| {
        BBox::new(rng.random_range(-5..30), rng.random_range(-5..30), rng.random_range(-5..30), rng.random_range(-5..30))
    };
    for _ in 0..500 {
        let (a, b) = (rbox(&mut rng), rbox(&mut rng));
        assert!(close(iou(&a, &b), enumerated_iou(&a, &b), 1e-12), "{a:?} {b:?}");
    }

    let (frame, _) = synth_scene(&projection_spec(6)).unwrap();
    let target = frame.mask.get(20, 20);
    for _ in 0..200 {
        let pts: Vec<(f64, f64)> =
            (0..rng.random_range(1..8)).map(|_| (rng.random_range(-2.0..130.0), rng.random_range(-2.0..130.0))).collect();
        let direct = pts
            .iter()
            .filter(|&&(x, y)| {
                let (rx, ry) = (x.round(), y.round());
                rx >= 0.0 && ry >= 0.0 && rx < 128.0 && ry < 128.0 && frame.mask.get(rx as u32, ry as u32) == target
            })
            .count() as f64
            / pts.len() as f64;
        let got = score_points(&pts, |p| p.x < 128 && p.y < 128 && frame.mask.get(p.x, p.y) == target);
        assert_eq!(got, direct);
    }
    assert_eq!(round_to_pixel(2.5, 0.49).map(|p| (p.x, p.y)), Some((3, 0)));

    let fixtures: [(&str, &str, [f64; 4]); 5] = [
        ("the red car is parked near the building", "the red car is parked near the building", [1.0; 4]),
        ("the car is red", "the red car is parked", [0.7788007830714049, 0.4496408417513669, 0.3744083649132689, 0.3781013719803872]),
        ("A Truck, parked!", "a truck parked", [1.0; 4]),
        ("the the the the", "the cat", [0.25, 0.25, 0.27516060407455223, 0.31947155212313627]),
        ("blue", "red car", [0.0; 4]),
    ];
    for (c, r, want) in fixtures {
        let got = bleu(c, r, 4);
        for (g, w) in got.iter().zip(want) {
            assert!(close(*g, w, 1e-9), "{c:?}/{r:?}: {got:?}");
        }
    }

    let gt = BBox::new(0, 0, 9, 9);
    assert_eq!(iou(&gt, &BBox::new(0, 0, 9, 19)), HIT_IOU);
    assert_eq!(score_boxes(&[BBox::new(0, 0, 9, 19)], &[gt]).hit_rate, 1.0);
    assert_eq!(score_boxes(&[BBox::new(0, 0, 9, 20)], &[gt]).hit_rate, 0.0);
}

// ------------------------------------------------------------------ 5

fn criterion_rewards() {
    assert_eq!(point_reward(&[(30.0, 70.0)], &[(0.0, 50.0)]).unwrap(), 1.0);
    assert_eq!(point_reward(&[(31.0, 70.0)], &[(0.0, 50.0)]).unwrap(), 0.0);
    assert_eq!(choice_reward('B', 'B'), 1.0);
    assert_eq!(choice_reward('B', 'C'), 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let a = BBox::new(rng.random_range(0..40), rng.random_range(0..40), rng.random_range(0..40), rng.random_range(0..40));
        let b = BBox::new(rng.random_range(0..40), rng.random_range(0..40), rng.random_range(0..40), rng.random_range(0..40));
        assert_eq!(box_reward(&a, &b), iou(&a, &b));
    }

    let lp = [-0.5, -1.0, -2.0, -4.0];
    assert!(close(sft_loss(&lp, 1).unwrap(), 1.875, 1e-12));
    assert!(close(sft_loss(&lp, 3).unwrap(), 3.0, 1e-12));
    assert!(close(sft_loss(&lp, 4).unwrap(), 4.0, 1e-12));
    assert!(sft_loss(&lp, 0).is_err() && sft_loss(&lp, 5).is_err() && sft_loss(&[], 1).is_err());

    assert_eq!(DEFAULT_BETA, 0.01);
    for _ in 0..20 {
        let batch: Vec<GrpoSample> = (0..rng.random_range(1..9))
            .map(|_| GrpoSample {
                reward: rng.random_range(-2.0..2.0),
                logp_policy: rng.random_range(-30.0..0.0),
                logp_ref: rng.random_range(-30.0..0.0),
            })
            .collect();
        let grad = grpo_loss_grad(&batch, DEFAULT_BETA).unwrap();
        for i in 0..batch.len() {
            let h = 1e-4;
            let shifted = |d: f64| {
                let mut b = batch.clone();
                b[i].logp_policy += d;
                grpo_loss(&b, DEFAULT_BETA).unwrap()
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / grad[i].abs().max(1e-12);
            assert!(rel <= 1e-6, "grad {} vs fd {fd}", grad[i]);
        }
    }
}

// ------------------------------------------------------------------ 6, 7, 8

fn common(seed: u64, config: Option<&Path>) -> CommonArgs {
    CommonArgs {
        config: config.map(Path::to_path_buf),
        seed: Some(seed),
    }
}

fn synth(out: &Path, count: usize, size: u32, seed: u64) {
    cmd_synth(&SynthArgs {
        out: out.to_path_buf(),
        count,
        size,
        no_lidar_every: 0,
        common: common(seed, None),
    })
    .unwrap();
}

fn generate(scenes: &Path, out: &Path, seed: u64, config: Option<&Path>) {
    cmd_generate(&GenerateArgs {
        scenes: Some(scenes.to_path_buf()),
        out: out.to_path_buf(),
        tasks: None,
        common: common(seed, config),
        endpoint: EndpointArgs::default(),
    })
    .unwrap();
}

fn evaluate(bench: &Path, report: &Path, mock: MockModel, seed: u64) -> skyforge::commands::ReportFile {
    cmd_evaluate(&EvaluateArgs {
        bench: bench.to_path_buf(),
        scenes: None,
        mock: Some(mock),
        out: None,
        report: report.to_path_buf(),
        size: 128,
        tasks: None,
        common: common(seed, None),
        endpoint: EndpointArgs::default(),
    })
    .unwrap()
}

fn criterion_end_to_end() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    synth(&root.join("scenes"), 30, 128, 11);
    generate(&root.join("scenes"), &root.join("ds.jsonl"), 11, None);
    let summary = cmd_curate(&CurateArgs {
        dataset: root.join("ds.jsonl"),
        out: root.join("cur"),
        size: Some(100),
        common: common(11, None),
    })
    .unwrap();
    assert!((95..=105).contains(&summary.bench), "bench {}", summary.bench);
    let oracle = evaluate(&root.join("cur/bench.jsonl"), &root.join("oracle.json"), MockModel::Oracle, 11).report;
    assert_eq!(oracle.task(Task::Box).unwrap().hit_rate, Some(100.0));
    for t in [Task::Point, Task::Relation, Task::Color, Task::Counting, Task::Freespace] {
        assert_eq!(oracle.task(t).map(|s| s.score), Some(100.0), "{t}");
    }

    // Choice-only run with four options everywhere, for the random baseline.
    let cfg = root.join("choice.toml");
    std::fs::write(&cfg, "tasks = [\"relation\", \"color\", \"counting\"]\n[generation]\nchoice_options = [4, 4]\nmax_records_per_task = 64\n").unwrap();
    synth(&root.join("many"), 240, 128, 12);
    generate(&root.join("many"), &root.join("choice.jsonl"), 12, Some(&cfg));
    let records: Vec<QaRecord> = read_jsonl(&root.join("choice.jsonl")).unwrap();
    let random = evaluate(&root.join("choice.jsonl"), &root.join("random.json"), MockModel::Random, 12).report;
    for t in [Task::Relation, Task::Color, Task::Counting] {
        let n = records.iter().filter(|r| r.task == t).count();
        let s = random.task(t).unwrap();
        assert!(n >= 500, "{t}: only {n} records");
        assert!(close(s.score, 25.0, 5.0), "{t}: {}", s.score);
    }
    assert!(start.elapsed() < Duration::from_secs(60), "took {:?}", start.elapsed());
}

fn criterion_leakage() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    synth(&root.join("scenes"), 40, 96, 21);
    generate(&root.join("scenes"), &root.join("ds.jsonl"), 21, None);
    for size in [20, 60, 150] {
        let out = root.join(format!("cur{size}"));
        cmd_curate(&CurateArgs {
            dataset: root.join("ds.jsonl"),
            out: out.clone(),
            size: Some(size),
            common: common(21, None),
        })
        .unwrap();
        let frames = |f: &str| -> BTreeSet<String> {
            read_jsonl::<QaRecord>(&out.join(f)).unwrap().into_iter().flat_map(|r| r.frame_ids).collect()
        };
        let (bench, train) = (frames("bench.jsonl"), frames("train.jsonl"));
        assert!(!bench.is_empty());
        assert!(size > 20 || !train.is_empty(), "a small bench should leave frames for training");
        assert!(bench.is_disjoint(&train), "size {size}");
    }
}

fn criterion_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    synth(&root.join("a"), 10, 96, 31);
    synth(&root.join("b"), 10, 96, 31);
    let mut outputs = Vec::new();
    for (scenes, threads) in [("a", 1), ("b", 4), ("a", 3)] {
        let out = root.join(format!("{scenes}{threads}.jsonl"));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| generate(&root.join(scenes), &out, 31, None));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    for f in ["s0000/mask.png", "s0004/cloud.bin", "s0009/rgb.png"] {
        assert_eq!(std::fs::read(root.join("a").join(f)).unwrap(), std::fs::read(root.join("b").join(f)).unwrap());
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn()); 8] = [
        ("geometry: instances, boxes, centroids, free regions vs flood fill", criterion_geometry),
        ("relations: 24 labelled pairs and antipodal symmetry", criterion_relations),
        ("projection: nadir depth and posed heights", criterion_projection),
        ("metrics: IoU, points, BLEU fixtures, hit boundary", criterion_metrics),
        ("rewards: point, choice, box, SFT, GRPO gradient, beta", criterion_rewards),
        ("end to end: generate, curate, evaluate with mocks", criterion_end_to_end),
        ("leakage: bench and train frames are disjoint", criterion_leakage),
        ("determinism: generate is byte-identical", criterion_determinism),
    ];
    std::panic::set_hook(Box::new(|info| eprintln!("  {info}")));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(f)).is_ok();
        failed += usize::from(!ok);
        println!("criterion {} {}: {} ({:.2}s)", i + 1, name, if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
