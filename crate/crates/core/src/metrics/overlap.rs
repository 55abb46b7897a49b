use alloc::vec::Vec;

use crate::qa::{runs_contain, RowRun};
use crate::scene::{round_to_pixel, BBox, Pixel};

/// IoU threshold at which a predicted box counts as a hit.
pub const HIT_IOU: f64 = 0.5;

/// Intersection over union of two boxes on the inclusive pixel grid.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let (a, b) = (a.normalized(), b.normalized());
    let w = (a.x2.min(b.x2) - a.x1.max(b.x1) + 1).max(0);
    let h = (a.y2.min(b.y2) - a.y1.max(b.y1) + 1).max(0);
    let inter = w * h;
    let union = a.area() + b.area() - inter;
    if union <= 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxScore {
    /// Matched IoU summed over ground-truth boxes, divided by their count.
    pub miou: f64,
    /// Share of ground-truth boxes matched with IoU at or above [`HIT_IOU`].
    pub hit_rate: f64,
    /// `(pred, gt, iou)` for each accepted match.
    pub matches: Vec<(usize, usize, f64)>,
}

/// Greedy one-to-one matching by descending IoU.
pub fn score_boxes(preds: &[BBox], gts: &[BBox]) -> BoxScore {
    if gts.is_empty() {
        let perfect = if preds.is_empty() { 1.0 } else { 0.0 };
        return BoxScore {
            miou: perfect,
            hit_rate: perfect,
            matches: Vec::new(),
        };
    }
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        for (j, g) in gts.iter().enumerate() {
            let v = iou(p, g);
            if v > 0.0 {
                pairs.push((i, j, v));
            }
        }
    }
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut pred_used = alloc::vec![false; preds.len()];
    let mut gt_used = alloc::vec![false; gts.len()];
    let mut matches = Vec::new();
    for (i, j, v) in pairs {
        if !pred_used[i] && !gt_used[j] {
            pred_used[i] = true;
            gt_used[j] = true;
            matches.push((i, j, v));
        }
    }
    let n = gts.len() as f64;
    BoxScore {
        miou: matches.iter().map(|m| m.2).sum::<f64>() / n,
        hit_rate: matches.iter().filter(|m| m.2 >= HIT_IOU).count() as f64 / n,
        matches,
    }
}

/// Fraction of predicted points whose rounded pixel satisfies `inside`.
pub fn score_points(points: &[(f64, f64)], inside: impl Fn(Pixel) -> bool) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let hits = points
        .iter()
        .filter(|&&(x, y)| round_to_pixel(x, y).is_some_and(&inside))
        .count();
    hits as f64 / points.len() as f64
}

/// [`score_points`] against a region stored as row runs.
pub fn score_points_in_runs(points: &[(f64, f64)], region: &[RowRun]) -> f64 {
    score_points(points, |p| runs_contain(region, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn iou_examples() {
        let a = BBox::new(0, 0, 9, 9);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &BBox::new(20, 20, 30, 30)), 0.0);
        assert!((iou(&a, &BBox::new(5, 5, 14, 14)) - 25.0 / 175.0).abs() < 1e-15);
    }

    #[test]
    fn box_matching_examples() {
        let g = BBox::new(0, 0, 9, 9);
        let s = score_boxes(&[g], &[g]);
        assert_eq!((s.miou, s.hit_rate), (1.0, 1.0));
        let s = score_boxes(&[], &[g, BBox::new(50, 50, 60, 60)]);
        assert_eq!((s.miou, s.hit_rate), (0.0, 0.0));
        // 10x10 gt, 10x6 prediction inside it: IoU 0.6.
        let s = score_boxes(&[BBox::new(0, 0, 9, 5)], &[g, BBox::new(50, 50, 60, 60)]);
        assert!((s.miou - 0.3).abs() < 1e-12);
        assert_eq!(s.hit_rate, 0.5);
    }

    #[test]
    fn one_prediction_matches_once() {
        let g = BBox::new(0, 0, 9, 9);
        let s = score_boxes(&[g], &[g, g]);
        assert_eq!(s.matches.len(), 1);
        assert_eq!(s.hit_rate, 0.5);
    }

    #[test]
    fn hit_boundary() {
        // 10x10 gt, 10x5 prediction: IoU exactly 0.5.
        let s = score_boxes(&[BBox::new(0, 0, 9, 4)], &[BBox::new(0, 0, 9, 9)]);
        assert_eq!(s.matches[0].2, 0.5);
        assert_eq!(s.hit_rate, 1.0);
    }

    #[test]
    fn point_examples() {
        let inside = |p: Pixel| p.x < 10 && p.y < 10;
        assert_eq!(score_points(&[(1.0, 1.0), (2.2, 3.4)], inside), 1.0);
        assert_eq!(score_points(&[(11.0, 1.0), (-3.0, 2.0)], inside), 0.0);
        assert_eq!(score_points(&[(1.0, 1.0), (20.0, 0.0), (30.0, 0.0), (0.0, 40.0)], inside), 0.25);
        assert_eq!(score_points(&[], inside), 0.0);
        let runs = vec![RowRun { y: 2, x0: 3, x1: 5 }];
        assert_eq!(score_points_in_runs(&[(4.4, 1.6), (6.0, 2.0)], &runs), 0.5);
    }
}
