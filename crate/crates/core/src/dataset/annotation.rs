//! Line-oriented box files: one `x,y,w,h` record per frame, empty line when
//! the target is absent. Used for ground truth and for tracker predictions.

use super::BoundingBox;
use crate::error::{Error, Result};

const ABSENT_NAN: &str = "NaN,NaN,NaN,NaN";

/// Parses one record. `line_no` is 1-based and only used for diagnostics.
pub fn parse_box_line(line: &str, line_no: usize) -> Result<Option<BoundingBox>> {
    let line = line.trim_end_matches('\r');
    if line.trim().is_empty() || line.trim() == ABSENT_NAN {
        return Ok(None);
    }
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 4 {
        return Err(Error::parse(
            line_no,
            format!("expected 4 comma-separated fields, found {}", fields.len()),
        ));
    }
    let mut v = [0.0f64; 4];
    for (slot, tok) in v.iter_mut().zip(&fields) {
        let tok = tok.trim();
        *slot = tok
            .parse::<f64>()
            .map_err(|_| Error::parse(line_no, format!("non-numeric token `{tok}`")))?;
        if !slot.is_finite() {
            return Err(Error::parse(line_no, format!("non-finite token `{tok}`")));
        }
    }
    BoundingBox::new(v[0], v[1], v[2], v[3])
        .map(Some)
        .map_err(|e| Error::parse(line_no, e.to_string()))
}

/// Parses a whole file. A single trailing newline terminates the last record
/// rather than adding an empty one.
pub fn parse_boxes(text: &str) -> Result<Vec<Option<BoundingBox>>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n')
        .enumerate()
        .map(|(i, line)| parse_box_line(line, i + 1))
        .collect()
}

/// Canonical serialization: LF terminated, shortest round-trip decimals,
/// empty line for absent frames.
pub fn serialize_boxes(boxes: &[Option<BoundingBox>]) -> String {
    let mut out = String::new();
    for b in boxes {
        if let Some(b) = b {
            out.push_str(&b.to_string());
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_plain_record() {
        let b = parse_box_line("10.5,20.0,30.0,40.0", 1).unwrap().unwrap();
        assert_eq!(b.to_array(), [10.5, 20.0, 30.0, 40.0]);
    }

    #[test]
    fn empty_and_nan_records_are_absent() {
        assert_eq!(parse_box_line("", 1).unwrap(), None);
        assert_eq!(parse_box_line("NaN,NaN,NaN,NaN", 1).unwrap(), None);
        assert_eq!(parse_box_line("\r", 1).unwrap(), None);
    }

    #[test]
    fn rejects_bad_records_with_line_number() {
        for (line, needle) in [
            ("1,2,0,5", "extent"),
            ("1,2,3", "4 comma-separated"),
            ("1,2,3,4,5", "4 comma-separated"),
            ("1,a,3,4", "non-numeric"),
            ("1,2,inf,4", "non-finite"),
        ] {
            let err = parse_box_line(line, 7).unwrap_err().to_string();
            assert!(err.starts_with("line 7:"), "{err}");
            assert!(err.contains(needle), "{err}");
        }
    }

    #[test]
    fn file_with_gap() {
        let boxes = parse_boxes("0,0,10,10\n\n5,5,10,10\n").unwrap();
        assert_eq!(boxes.len(), 3);
        assert!(boxes[0].is_some() && boxes[1].is_none() && boxes[2].is_some());
    }

    #[test]
    fn trailing_absent_frame_survives() {
        let text = "0,0,10,10\n\n";
        let boxes = parse_boxes(text).unwrap();
        assert_eq!(boxes.len(), 2);
        assert_eq!(serialize_boxes(&boxes), text);
    }

    fn arb_box() -> impl Strategy<Value = Option<BoundingBox>> {
        prop_oneof![
            1 => Just(None),
            6 => (-1e4f64..1e4, -1e4f64..1e4, 1e-3f64..1e4, 1e-3f64..1e4)
                .prop_map(|(x, y, w, h)| Some(BoundingBox::new(x, y, w, h).unwrap())),
        ]
    }

    proptest! {
        #[test]
        fn canonical_files_round_trip_byte_identically(
            boxes in proptest::collection::vec(arb_box(), 1..40)
        ) {
            let text = serialize_boxes(&boxes);
            let parsed = parse_boxes(&text).unwrap();
            prop_assert_eq!(&parsed, &boxes);
            prop_assert_eq!(serialize_boxes(&parsed), text);
        }
    }
}
