use alloc::format;
use alloc::string::String;

use super::{AnswerFormat, GroundTruth, QaError};
use crate::scene::{BBox, Pixel};

/// `<box>[[x1,y1,x2,y2],…]</box>`
pub fn serialize_boxes(boxes: &[BBox]) -> String {
    let body: alloc::vec::Vec<String> = boxes
        .iter()
        .map(|b| format!("[{},{},{},{}]", b.x1, b.y1, b.x2, b.y2))
        .collect();
    format!("<box>[{}]</box>", body.join(","))
}

/// `<point>[[x,y],…]</point>`
pub fn serialize_points(points: &[Pixel]) -> String {
    let body: alloc::vec::Vec<String> = points.iter().map(|p| format!("[{},{}]", p.x, p.y)).collect();
    format!("<point>[{}]</point>", body.join(","))
}

pub fn serialize_choice(letter: char) -> String {
    format!("<choice>{letter}</choice>")
}

/// Renders a reference payload in its answer tag format.
pub fn serialize_answer(payload: &GroundTruth, format: AnswerFormat) -> Result<String, QaError> {
    if payload.format() != format {
        return Err(QaError::FormatMismatch {
            expected: format,
            found: payload.format(),
        });
    }
    Ok(match payload {
        GroundTruth::Boxes { boxes } => serialize_boxes(boxes),
        GroundTruth::Points { points, .. } => serialize_points(points),
        GroundTruth::Choice { letter, .. } => serialize_choice(*letter),
        GroundTruth::Open { text, .. } => text.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qa::OpenGrading;
    use alloc::vec;

    #[test]
    fn tag_formats() {
        let b = GroundTruth::Boxes {
            boxes: vec![BBox::new(10, 20, 30, 40)],
        };
        assert_eq!(serialize_answer(&b, AnswerFormat::Boxes).unwrap(), "<box>[[10,20,30,40]]</box>");
        let p = GroundTruth::Points {
            points: vec![Pixel::new(5, 6)],
            region: vec![],
        };
        assert_eq!(serialize_answer(&p, AnswerFormat::Points).unwrap(), "<point>[[5,6]]</point>");
        let c = GroundTruth::Choice { index: 1, letter: 'B' };
        assert_eq!(serialize_answer(&c, AnswerFormat::Choice).unwrap(), "<choice>B</choice>");
        let o = GroundTruth::Open {
            text: "A road.".into(),
            grading: OpenGrading::Text,
        };
        assert_eq!(serialize_answer(&o, AnswerFormat::Open).unwrap(), "A road.");
    }

    #[test]
    fn multiple_boxes_and_mismatch() {
        assert_eq!(
            serialize_boxes(&[BBox::new(0, 0, 1, 1), BBox::new(2, 3, 4, 5)]),
            "<box>[[0,0,1,1],[2,3,4,5]]</box>"
        );
        let c = GroundTruth::Choice { index: 0, letter: 'A' };
        assert_eq!(
            serialize_answer(&c, AnswerFormat::Boxes),
            Err(QaError::FormatMismatch {
                expected: AnswerFormat::Boxes,
                found: AnswerFormat::Choice
            })
        );
    }
}
