use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use skyforge_core::geometry::{classify_relation, extract_instances, Connectivity};
use skyforge_core::metrics::{aggregate, bleu, iou, parse_answer, StructuredAnswer, Verdict};
use skyforge_core::qa::{runs_contain, runs_from_pixels, serialize_boxes, serialize_points, AnswerFormat, Task};
use skyforge_core::rewards::{group_advantage, point_reward, sft_loss};
use skyforge_core::{BBox, Pixel, SemanticMask};

fn bbox() -> impl Strategy<Value = BBox> {
    (0i64..40, 0i64..40, 0i64..40, 0i64..40).prop_map(|(a, b, c, d)| BBox::new(a, b, c, d).normalized())
}

fn enumerated_iou(a: &BBox, b: &BBox) -> f64 {
    let (mut inter, mut union) = (0u32, 0u32);
    for y in 0..40 {
        for x in 0..40 {
            let ia = a.x1 <= x && x <= a.x2 && a.y1 <= y && y <= a.y2;
            let ib = b.x1 <= x && x <= b.x2 && b.y1 <= y && y <= b.y2;
            inter += u32::from(ia && ib);
            union += u32::from(ia || ib);
        }
    }
    f64::from(inter) / f64::from(union)
}

/// Component labels by repeated neighbour relaxation, as a set of pixel sets.
fn relaxation_components(mask: &SemanticMask) -> BTreeSet<(u16, Vec<(u32, u32)>)> {
    let (w, h) = (mask.width as usize, mask.height as usize);
    let mut label: Vec<usize> = (0..w * h).collect();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                for (nx, ny) in [(x + 1, y), (x, y + 1)] {
                    if nx < w && ny < h {
                        let j = ny * w + nx;
                        if mask.class_ids[i] == mask.class_ids[j] && label[i] != label[j] {
                            let m = label[i].min(label[j]);
                            label[i] = m;
                            label[j] = m;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: BTreeMap<usize, (u16, Vec<(u32, u32)>)> = BTreeMap::new();
    for (i, &l) in label.iter().enumerate() {
        let c = mask.class_ids[i];
        if c == 0 {
            continue;
        }
        let e = groups.entry(l).or_insert((c, Vec::new()));
        e.1.push(((i / w) as u32, (i % w) as u32));
    }
    groups.into_values().collect()
}

proptest! {
    #[test]
    fn iou_is_symmetric_bounded_and_exact(a in bbox(), b in bbox()) {
        let v = iou(&a, &b);
        prop_assert_eq!(v, iou(&b, &a));
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v == 1.0, a == b);
        prop_assert!((v - enumerated_iou(&a, &b)).abs() <= 1e-12);
    }

    #[test]
    fn instances_match_relaxation_oracle(cells in proptest::collection::vec(0u16..3, 16 * 16)) {
        let table = (0..3).map(|c| (c, format!("c{c}"))).collect();
        let mut mask = SemanticMask::filled(16, 16, 0, table);
        mask.class_ids = cells;
        let got: BTreeSet<(u16, Vec<(u32, u32)>)> = extract_instances(&mask, Some(0), Connectivity::Four)
            .into_iter()
            .map(|i| (i.class_id, i.pixels.iter().map(|p| (p.y, p.x)).collect()))
            .collect();
        prop_assert_eq!(got, relaxation_components(&mask));
    }

    #[test]
    fn relations_are_antipodal(ax in 0.0f64..500.0, ay in 0.0f64..500.0, bx in 0.0f64..500.0, by in 0.0f64..500.0) {
        let ab = classify_relation((ax, ay), (bx, by), 50.0);
        let ba = classify_relation((bx, by), (ax, ay), 50.0);
        match (ab, ba) {
            (Ok(Some(x)), Ok(Some(y))) => {
                let boundary = (x.theta / std::f64::consts::FRAC_PI_8).fract().abs() < 1e-9;
                prop_assert!(boundary || x.class.antipode() == y.class);
            }
            (Ok(None), Ok(None)) | (Err(_), Err(_)) => {}
            other => prop_assert!(false, "asymmetric outcome {:?}", other),
        }
    }

    #[test]
    fn bleu_ignores_case(words in proptest::collection::vec("[a-z]{1,6}", 1..12), refw in proptest::collection::vec("[a-z]{1,6}", 1..12)) {
        let c = words.join(" ");
        let r = refw.join(" ");
        prop_assert_eq!(bleu(&c, &r, 4), bleu(&c.to_uppercase(), &r, 4));
        for v in bleu(&c, &r, 4) {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn point_reward_ignores_order(
        preds in proptest::collection::vec((0.0f64..300.0, 0.0f64..300.0), 0..8),
        gts in proptest::collection::vec((0.0f64..300.0, 0.0f64..300.0), 1..8),
    ) {
        let a = point_reward(&preds, &gts).unwrap();
        let (mut p2, mut g2) = (preds.clone(), gts.clone());
        p2.reverse();
        g2.rotate_left(1);
        prop_assert_eq!(a, point_reward(&p2, &g2).unwrap());
    }

    #[test]
    fn sft_ignores_prompt_tokens(lp in proptest::collection::vec(-5.0f64..0.0, 2..20), noise in -5.0f64..0.0) {
        let k = lp.len() / 2 + 1;
        let mut changed = lp.clone();
        changed[0] = noise;
        prop_assert_eq!(sft_loss(&lp, k).unwrap(), sft_loss(&changed, k).unwrap());
    }

    #[test]
    fn advantages_are_centered(r in proptest::collection::vec(-10.0f64..10.0, 2..32)) {
        if let Ok(a) = group_advantage(&r) {
            let mean = a.iter().sum::<f64>() / a.len() as f64;
            prop_assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn aggregate_ignores_order(vals in proptest::collection::vec((0usize..13, 0.0f64..1.0), 1..40)) {
        let vs: Vec<Verdict> = vals.iter().enumerate().map(|(i, &(t, v))| Verdict {
            record_id: i.to_string(),
            task: Task::ALL[t],
            value: Some(v),
            parse_failure: false,
            hit_rate: None,
            bleu: None,
            note: None,
        }).collect();
        let mut rev = vs.clone();
        rev.reverse();
        let (a, b) = (aggregate(&vs), aggregate(&rev));
        prop_assert!((a.total - b.total).abs() < 1e-9);
        for (x, y) in a.tasks.iter().zip(&b.tasks) {
            prop_assert!((x.score - y.score).abs() < 1e-9);
        }
    }

    #[test]
    fn tags_round_trip(boxes in proptest::collection::vec(bbox(), 0..5), pts in proptest::collection::vec((0u32..500, 0u32..500), 0..8)) {
        let parsed = parse_answer(&format!("ok {}", serialize_boxes(&boxes)), AnswerFormat::Boxes).unwrap();
        prop_assert_eq!(parsed, StructuredAnswer::Boxes(boxes));
        let pixels: Vec<Pixel> = pts.iter().map(|&(x, y)| Pixel::new(x, y)).collect();
        let parsed = parse_answer(&serialize_points(&pixels), AnswerFormat::Points).unwrap();
        let expect: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (f64::from(x), f64::from(y))).collect();
        prop_assert_eq!(parsed, StructuredAnswer::Points(expect));
    }

    #[test]
    fn row_runs_preserve_membership(pts in proptest::collection::btree_set((0u32..30, 0u32..30), 0..120)) {
        let mut pixels: Vec<Pixel> = pts.iter().map(|&(x, y)| Pixel::new(x, y)).collect();
        pixels.sort();
        let runs = runs_from_pixels(&pixels);
        for y in 0..30 {
            for x in 0..30 {
                prop_assert_eq!(runs_contain(&runs, Pixel::new(x, y)), pts.contains(&(x, y)));
            }
        }
    }
}
