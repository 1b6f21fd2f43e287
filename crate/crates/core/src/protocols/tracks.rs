//! Tracker-in-the-loop scoring of hand-object interactions: detections are
//! grouped into tracks, and a tracker started from each track's first
//! detection is scored against the ground truth until the track ends.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{BoundingBox, Sequence};
use crate::error::{Error, Result};
use crate::metrics::iou;
use crate::tracker::Tracker;

/// A detection more than this many frames after the previous one starts a
/// new track.
pub const TRACK_GAP: usize = 30;

/// Minimum overlap for a frame to count as tracked.
pub const TRACK_IOU: f64 = 0.5;

/// Which hands are in contact with the object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandState {
    Left,
    Right,
    Both,
}

impl fmt::Display for HandState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HandState::Left => "left",
            HandState::Right => "right",
            HandState::Both => "both",
        })
    }
}

impl FromStr for HandState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(HandState::Left),
            "right" => Ok(HandState::Right),
            "both" => Ok(HandState::Both),
            _ => Err(Error::Protocol(format!("unknown hand state `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub frame: usize,
    pub bbox: BoundingBox,
    pub state: HandState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTrack {
    pub start: usize,
    pub end: usize,
    /// Box per frame of `start..=end`: the detection where there is one,
    /// the ground truth elsewhere.
    pub boxes: Vec<Option<BoundingBox>>,
    /// Most frequent state among the detections (earliest wins ties).
    pub state: HandState,
}

impl InteractionTrack {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Groups detections (sorted by frame, one per frame) into tracks.
pub fn interaction_tracks(
    detections: &[Detection],
    seq: &Sequence,
) -> Result<Vec<InteractionTrack>> {
    if detections.is_empty() {
        return Err(Error::Undefined(format!(
            "no detections for `{}`",
            seq.name()
        )));
    }
    for w in detections.windows(2) {
        if w[1].frame <= w[0].frame {
            return Err(Error::Protocol(format!(
                "detections for `{}` not strictly ordered by frame at frame {}",
                seq.name(),
                w[1].frame
            )));
        }
    }
    if let Some(d) = detections.iter().find(|d| d.frame >= seq.len()) {
        return Err(Error::Protocol(format!(
            "detection at frame {} beyond the end of `{}`",
            d.frame,
            seq.name()
        )));
    }

    let mut groups: Vec<Vec<&Detection>> = vec![vec![&detections[0]]];
    for pair in detections.windows(2) {
        if pair[1].frame - pair[0].frame > TRACK_GAP {
            groups.push(Vec::new());
        }
        groups.last_mut().expect("non-empty").push(&pair[1]);
    }

    Ok(groups
        .into_iter()
        .map(|g| {
            let (start, end) = (g[0].frame, g[g.len() - 1].frame);
            let mut boxes: Vec<_> = (start..=end).map(|f| seq.gt(f)).collect();
            for d in &g {
                boxes[d.frame - start] = Some(d.bbox);
            }
            let mut counts: Vec<(HandState, usize)> = Vec::new();
            for d in &g {
                match counts.iter_mut().find(|(s, _)| *s == d.state) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((d.state, 1)),
                }
            }
            // max_by_key keeps the last maximum, so scan in reverse
            let state = counts
                .iter()
                .rev()
                .max_by_key(|(_, c)| *c)
                .expect("non-empty")
                .0;
            InteractionTrack {
                start,
                end,
                boxes,
                state,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackScores {
    /// Fraction of tracked frames per scored track, in track order.
    pub per_track: Vec<f64>,
    /// Tracks without any frame to score (single detection, or no ground
    /// truth after the first frame).
    pub skipped: usize,
    pub overall: f64,
}

/// Runs a fresh tracker over every track and scores the frames after the
/// first one that carry ground truth.
pub fn interaction_track_score<T, F>(
    seq: &Sequence,
    tracks: &[InteractionTrack],
    mut factory: F,
) -> Result<TrackScores>
where
    T: Tracker,
    F: FnMut(&InteractionTrack) -> Result<T>,
{
    let mut per_track = Vec::new();
    let mut skipped = 0;
    for track in tracks {
        let scored: Vec<usize> = (track.start + 1..=track.end)
            .filter(|&f| seq.gt(f).is_some())
            .collect();
        if scored.is_empty() {
            skipped += 1;
            continue;
        }
        let mut tracker = factory(track)?;
        let frames: Vec<usize> = (track.start..=track.end).collect();
        let init = track.boxes[0].expect("first track frame is a detection");
        let run = run_from_box(&mut tracker, seq, &frames, init)?;
        let hits = scored
            .iter()
            .filter(|&&f| iou(&run[f - track.start], &seq.gt(f).expect("filtered")) >= TRACK_IOU)
            .count();
        per_track.push(hits as f64 / scored.len() as f64);
    }
    if per_track.is_empty() {
        return Err(Error::Undefined(format!(
            "no scorable interaction track in `{}`",
            seq.name()
        )));
    }
    let overall = per_track.iter().sum::<f64>() / per_track.len() as f64;
    Ok(TrackScores {
        per_track,
        skipped,
        overall,
    })
}

fn run_from_box<T: Tracker>(
    tracker: &mut T,
    seq: &Sequence,
    frames: &[usize],
    init: BoundingBox,
) -> Result<Vec<BoundingBox>> {
    use crate::tracker::Frame;
    let wrap = |name: &str, frame: usize| {
        let name = name.to_string();
        move |e: Error| Error::Tracker {
            tracker: name,
            frame,
            message: e.to_string(),
        }
    };
    let source = seq.frames().as_ref();
    let first = Frame::new(frames[0], source);
    tracker
        .prepare(&first)
        .map_err(wrap(tracker.name(), frames[0]))?;
    tracker
        .init(&first, init)
        .map_err(wrap(tracker.name(), frames[0]))?;
    let mut out = vec![init];
    for &f in &frames[1..] {
        let frame = Frame::new(f, source);
        tracker.prepare(&frame).map_err(wrap(tracker.name(), f))?;
        out.push(tracker.update(&frame).map_err(wrap(tracker.name(), f))?);
    }
    Ok(out)
}

/// Parses `sequence,frame,x,y,w,h,state` lines (an optional header line
/// starting with `sequence` is skipped) into per-sequence detection lists
/// in file order.
pub fn parse_detections(text: &str) -> Result<BTreeMap<String, Vec<Detection>>> {
    let mut out: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("sequence")) {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 7 {
            return Err(Error::parse(
                line_no,
                format!("expected 7 fields, found {}", f.len()),
            ));
        }
        let frame = f[1]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad frame index `{}`", f[1])))?;
        let bbox = crate::dataset::parse_box_line(&f[2..6].join(","), line_no)?
            .ok_or_else(|| Error::parse(line_no, "detection without a box"))?;
        let state = f[6]
            .parse()
            .map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
        out.entry(f[0].to_string())
            .or_default()
            .push(Detection { frame, bbox, state });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracker::{OracleTracker, StaticTracker};

    fn bx(x: f64) -> BoundingBox {
        BoundingBox::new(x, 0.0, 10.0, 10.0).unwrap()
    }

    fn seq(n: usize) -> Sequence {
        Sequence::builder("s", (0..n).map(|i| Some(bx(i as f64 * 2.0))).collect())
            .build()
            .unwrap()
    }

    fn det(frame: usize, state: HandState) -> Detection {
        Detection {
            frame,
            bbox: bx(frame as f64 * 2.0),
            state,
        }
    }

    #[test]
    fn gap_rule() {
        let s = seq(100);
        let two =
            interaction_tracks(&[det(0, HandState::Left), det(40, HandState::Left)], &s).unwrap();
        assert_eq!(two.len(), 2);
        let one =
            interaction_tracks(&[det(0, HandState::Left), det(30, HandState::Left)], &s).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].len(), 31);
        assert_eq!(one[0].boxes[10], s.gt(10));
    }

    #[test]
    fn majority_state_with_earliest_tie_break() {
        let s = seq(100);
        use HandState::*;
        let t = interaction_tracks(
            &[det(0, Right), det(1, Left), det(2, Left), det(3, Right)],
            &s,
        )
        .unwrap();
        assert_eq!(t[0].state, Right);
        let t = interaction_tracks(&[det(0, Both), det(1, Left), det(2, Left)], &s).unwrap();
        assert_eq!(t[0].state, Left);
    }

    #[test]
    fn rejects_unsorted_and_empty() {
        let s = seq(100);
        assert!(interaction_tracks(&[], &s).is_err());
        assert!(
            interaction_tracks(&[det(5, HandState::Left), det(2, HandState::Left)], &s).is_err()
        );
        assert!(interaction_tracks(&[det(100, HandState::Left)], &s).is_err());
    }

    #[test]
    fn oracle_scores_one_and_static_decays() {
        let s = seq(100);
        let dets = [
            det(0, HandState::Left),
            det(20, HandState::Left),
            det(60, HandState::Both),
            det(70, HandState::Both),
        ];
        let tracks = interaction_tracks(&dets, &s).unwrap();
        let r = interaction_track_score(&s, &tracks, |_| Ok(OracleTracker::new(&s))).unwrap();
        assert_eq!(r.overall, 1.0);
        assert_eq!(r.per_track.len(), 2);

        // static box of width 10 on a target moving 2 px/frame: IoU >= 0.5
        // while the shift is at most 10/3 px, i.e. one frame after init
        let r = interaction_track_score(&s, &tracks, |_| Ok(StaticTracker::new())).unwrap();
        assert_eq!(r.per_track, [1.0 / 20.0, 1.0 / 10.0]);
    }

    #[test]
    fn single_detection_tracks_are_skipped() {
        let s = seq(100);
        let tracks = interaction_tracks(
            &[
                det(0, HandState::Left),
                det(50, HandState::Left),
                det(60, HandState::Left),
            ],
            &s,
        )
        .unwrap();
        let r = interaction_track_score(&s, &tracks, |_| Ok(OracleTracker::new(&s))).unwrap();
        assert_eq!((r.per_track.len(), r.skipped), (1, 1));
        let lone = interaction_tracks(&[det(3, HandState::Left)], &s).unwrap();
        assert!(interaction_track_score(&s, &lone, |_| Ok(StaticTracker::new())).is_err());
    }

    #[test]
    fn parses_detection_csv() {
        let text =
            "sequence,frame,x,y,w,h,state\na,0,1,2,3,4,left\na,5,1,2,3,4,both\nb,1,0,0,1,1,right\n";
        let d = parse_detections(text).unwrap();
        assert_eq!(d["a"].len(), 2);
        assert_eq!(d["b"][0].state, HandState::Right);
        assert!(parse_detections("a,0,1,2,3,4,none\n").is_err());
        assert!(parse_detections("a,0,1,2,3\n").is_err());
    }
}
