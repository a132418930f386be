//! 2D keypoint sequences: loading detector exports, validation, torso
//! normalisation, motion-based trimming and the core-interval heuristic.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linguistic::Hand;

pub const BODY_KEYPOINTS: usize = 25;
pub const HAND_KEYPOINTS: usize = 21;
pub const KEYPOINTS_PER_FRAME: usize = BODY_KEYPOINTS + 2 * HAND_KEYPOINTS;

/// BODY-25 indices used by the pipeline.
pub mod body {
    pub const NOSE: usize = 0;
    pub const NECK: usize = 1;
    pub const RIGHT_WRIST: usize = 4;
    pub const LEFT_WRIST: usize = 7;
    pub const MID_HIP: usize = 8;
    /// Big toe, small toe and heel of both feet.
    pub const FEET: [usize; 6] = [19, 20, 21, 22, 23, 24];
}

/// Index of the wrist inside a 21-point hand array.
pub const HAND_WRIST: usize = 0;

/// Name of the optional per-directory metadata file.
pub const META_FILE: &str = "meta.json";

pub const DEFAULT_IMAGE_SIZE: (u32, u32) = (1920, 1080);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Keypoint2D {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Keypoint2D {
    pub const UNDETECTED: Keypoint2D = Keypoint2D {
        x: 0.0,
        y: 0.0,
        confidence: 0.0,
    };

    pub fn new(x: f64, y: f64, confidence: f64) -> Self {
        Keypoint2D { x, y, confidence }
    }

    pub fn is_detected(&self) -> bool {
        self.confidence > 0.0
    }
}

/// Which keypoint array of a frame an index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeypointArray {
    Body,
    LeftHand,
    RightHand,
}

impl KeypointArray {
    /// Number of keypoints in the array.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        match self {
            KeypointArray::Body => BODY_KEYPOINTS,
            _ => HAND_KEYPOINTS,
        }
    }

    pub fn hand(hand: Hand) -> Self {
        match hand {
            Hand::Left => KeypointArray::LeftHand,
            Hand::Right => KeypointArray::RightHand,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointFrame {
    pub body: Vec<Keypoint2D>,
    pub left_hand: Vec<Keypoint2D>,
    pub right_hand: Vec<Keypoint2D>,
    pub timestamp_index: usize,
}

impl KeypointFrame {
    /// A frame in which nothing was detected.
    pub fn undetected(timestamp_index: usize) -> Self {
        KeypointFrame {
            body: vec![Keypoint2D::UNDETECTED; BODY_KEYPOINTS],
            left_hand: vec![Keypoint2D::UNDETECTED; HAND_KEYPOINTS],
            right_hand: vec![Keypoint2D::UNDETECTED; HAND_KEYPOINTS],
            timestamp_index,
        }
    }

    pub fn array(&self, which: KeypointArray) -> &[Keypoint2D] {
        match which {
            KeypointArray::Body => &self.body,
            KeypointArray::LeftHand => &self.left_hand,
            KeypointArray::RightHand => &self.right_hand,
        }
    }

    pub fn array_mut(&mut self, which: KeypointArray) -> &mut Vec<Keypoint2D> {
        match which {
            KeypointArray::Body => &mut self.body,
            KeypointArray::LeftHand => &mut self.left_hand,
            KeypointArray::RightHand => &mut self.right_hand,
        }
    }

    pub fn hand(&self, hand: Hand) -> &[Keypoint2D] {
        self.array(KeypointArray::hand(hand))
    }

    pub fn get(&self, which: KeypointArray, index: usize) -> Keypoint2D {
        self.array(which)[index]
    }

    /// Wrist keypoint of one hand: the body-array wrist when detected,
    /// otherwise the hand-array wrist.
    pub fn wrist(&self, hand: Hand) -> Option<Keypoint2D> {
        let body_index = match hand {
            Hand::Left => body::LEFT_WRIST,
            Hand::Right => body::RIGHT_WRIST,
        };
        [self.body[body_index], self.hand(hand)[HAND_WRIST]]
            .into_iter()
            .find(Keypoint2D::is_detected)
    }

    /// Mean confidence over the 21 keypoints of a hand.
    pub fn mean_hand_confidence(&self, hand: Hand) -> f64 {
        let kps = self.hand(hand);
        kps.iter().map(|k| k.confidence).sum::<f64>() / kps.len() as f64
    }

    /// Neck-to-mid-hip distance, when both are detected.
    pub fn torso_length(&self) -> Option<f64> {
        let neck = self.body[body::NECK];
        let hip = self.body[body::MID_HIP];
        (neck.is_detected() && hip.is_detected())
            .then(|| (neck.x - hip.x).hypot(neck.y - hip.y))
    }

    pub fn feet_detected(&self, conf_floor: f64) -> bool {
        body::FEET.iter().any(|&i| {
            let k = self.body[i];
            k.is_detected() && k.confidence >= conf_floor
        })
    }

    fn validate(&self) -> Result<()> {
        for which in [
            KeypointArray::Body,
            KeypointArray::LeftHand,
            KeypointArray::RightHand,
        ] {
            let arr = self.array(which);
            if arr.len() != which.len() {
                return Err(Error::Invalid(format!(
                    "frame {}: {:?} has {} keypoints, expected {}",
                    self.timestamp_index,
                    which,
                    arr.len(),
                    which.len()
                )));
            }
            if let Some(k) = arr.iter().find(|k| !(0.0..=1.0).contains(&k.confidence)) {
                return Err(Error::Invalid(format!(
                    "frame {}: confidence {} outside [0, 1]",
                    self.timestamp_index, k.confidence
                )));
            }
        }
        Ok(())
    }
}

/// Coordinate convention of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateFrame {
    /// Pixels, y grows downward.
    #[default]
    Image,
    /// Torso-length units, y grows upward.
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointSequence {
    frames: Vec<KeypointFrame>,
    pub fps: f64,
    pub image_size: (u32, u32),
    #[serde(default)]
    pub coordinates: CoordinateFrame,
}

impl KeypointSequence {
    pub fn new(frames: Vec<KeypointFrame>, fps: f64, image_size: (u32, u32)) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Empty("keypoint sequence"));
        }
        for f in &frames {
            f.validate()?;
        }
        if frames
            .windows(2)
            .any(|w| w[1].timestamp_index <= w[0].timestamp_index)
        {
            return Err(Error::Invalid(
                "timestamp indices must be strictly increasing".into(),
            ));
        }
        Ok(KeypointSequence {
            frames,
            fps,
            image_size,
            coordinates: CoordinateFrame::Image,
        })
    }

    pub fn frames(&self) -> &[KeypointFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, i: usize) -> &KeypointFrame {
        &self.frames[i]
    }

    /// Frames `start..=end` as a new sequence.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end >= self.len() {
            return Err(Error::Invalid(format!(
                "slice {start}..={end} out of range for {} frames",
                self.len()
            )));
        }
        Ok(KeypointSequence {
            frames: self.frames[start..=end].to_vec(),
            fps: self.fps,
            image_size: self.image_size,
            coordinates: self.coordinates,
        })
    }

    /// Median neck-to-mid-hip length over frames where both are detected.
    pub fn median_torso_length(&self) -> Result<f64> {
        let lengths: Vec<f64> = self.frames.iter().filter_map(|f| f.torso_length()).collect();
        median(&lengths).ok_or(Error::TorsoUndetected)
    }

    /// Swaps left and right: hand arrays, BODY-25 left/right keypoints, and
    /// mirrors x about the image centre.
    pub fn mirrored(&self) -> Self {
        const PAIRS: [(usize, usize); 11] = [
            (2, 5),
            (3, 6),
            (4, 7),
            (9, 12),
            (10, 13),
            (11, 14),
            (15, 16),
            (17, 18),
            (19, 22),
            (20, 23),
            (21, 24),
        ];
        let width = match self.coordinates {
            CoordinateFrame::Image => self.image_size.0 as f64,
            CoordinateFrame::Normalized => 0.0,
        };
        let flip = |k: Keypoint2D| Keypoint2D::new(width - k.x, k.y, k.confidence);
        let frames = self
            .frames
            .iter()
            .map(|f| {
                let mut body: Vec<Keypoint2D> = f.body.iter().copied().map(flip).collect();
                for (a, b) in PAIRS {
                    body.swap(a, b);
                }
                KeypointFrame {
                    body,
                    left_hand: f.right_hand.iter().copied().map(flip).collect(),
                    right_hand: f.left_hand.iter().copied().map(flip).collect(),
                    timestamp_index: f.timestamp_index,
                }
            })
            .collect();
        KeypointSequence {
            frames,
            ..self.clone()
        }
    }
}

/// Median of a slice (mean of the two central values for even lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

// ---------------------------------------------------------------------------
// Detector export I/O

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct SequenceMeta {
    image_width: u32,
    image_height: u32,
    #[serde(default)]
    fps: Option<f64>,
}

#[derive(Serialize)]
struct PersonOut<'a> {
    pose_keypoints_2d: &'a [f64],
    hand_left_keypoints_2d: &'a [f64],
    hand_right_keypoints_2d: &'a [f64],
}

#[derive(Serialize)]
struct FrameOut<'a> {
    version: f64,
    people: Vec<PersonOut<'a>>,
}

fn frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingDirectory(dir.to_path_buf()));
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_json = path.extension().is_some_and(|e| e == "json");
        let is_meta = path.file_name().is_some_and(|n| n == META_FILE);
        if path.is_file() && is_json && !is_meta {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn parse_array(
    file: &str,
    person: &serde_json::Map<String, Value>,
    field: &str,
    expected: usize,
) -> Result<Vec<Keypoint2D>> {
    let values = match person.get(field) {
        None | Some(Value::Null) => return Ok(vec![Keypoint2D::UNDETECTED; expected]),
        Some(Value::Array(values)) => values,
        Some(_) => return Err(Error::malformed(file, format!("field {field}: expected an array"))),
    };
    if values.is_empty() {
        return Ok(vec![Keypoint2D::UNDETECTED; expected]);
    }
    if values.len() != 3 * expected {
        return Err(Error::malformed(
            file,
            format!(
                "field {field}: expected {expected} keypoints ({} numbers), found {} numbers",
                3 * expected,
                values.len()
            ),
        ));
    }
    let mut nums = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let x = v.as_f64().ok_or_else(|| {
            Error::malformed(file, format!("field {field}: entry {i} is not a number"))
        })?;
        nums.push(x);
    }
    let kps: Vec<Keypoint2D> = nums
        .chunks_exact(3)
        .map(|c| Keypoint2D::new(c[0], c[1], c[2]))
        .collect();
    if let Some(i) = kps.iter().position(|k| !(0.0..=1.0).contains(&k.confidence)) {
        return Err(Error::malformed(
            file,
            format!("field {field}: keypoint {i} confidence outside [0, 1]"),
        ));
    }
    Ok(kps)
}

/// Parses one detector frame file. Only the first person is read.
pub fn parse_frame(file: &str, text: &str, timestamp_index: usize) -> Result<KeypointFrame> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::malformed(file, format!("invalid JSON: {e}")))?;
    let people = doc
        .get("people")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::malformed(file, "field people: missing or not a list"))?;
    let Some(person) = people.first() else {
        return Ok(KeypointFrame::undetected(timestamp_index));
    };
    let person = person
        .as_object()
        .ok_or_else(|| Error::malformed(file, "field people[0]: not an object"))?;
    Ok(KeypointFrame {
        body: parse_array(file, person, "pose_keypoints_2d", BODY_KEYPOINTS)?,
        left_hand: parse_array(file, person, "hand_left_keypoints_2d", HAND_KEYPOINTS)?,
        right_hand: parse_array(file, person, "hand_right_keypoints_2d", HAND_KEYPOINTS)?,
        timestamp_index,
    })
}

/// Loads a directory of per-frame detector exports, ordered by file name.
///
/// The image size is read from an optional `meta.json` in the same directory
/// and defaults to [`DEFAULT_IMAGE_SIZE`].
pub fn load_keypoint_sequence(dir: impl AsRef<Path>, fps: f64) -> Result<KeypointSequence> {
    let dir = dir.as_ref();
    let files = frame_files(dir)?;
    if files.is_empty() {
        return Err(Error::Empty("keypoint directory contains no frame files"));
    }
    let meta_path = dir.join(META_FILE);
    let image_size = if meta_path.is_file() {
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: SequenceMeta = serde_json::from_str(&text)
            .map_err(|e| Error::malformed(meta_path.display().to_string(), e.to_string()))?;
        (meta.image_width, meta.image_height)
    } else {
        DEFAULT_IMAGE_SIZE
    };
    let mut frames = Vec::with_capacity(files.len());
    for (i, path) in files.iter().enumerate() {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        frames.push(parse_frame(&name, &text, i)?);
    }
    KeypointSequence::new(frames, fps, image_size)
}

fn flatten(kps: &[Keypoint2D]) -> Vec<f64> {
    kps.iter().flat_map(|k| [k.x, k.y, k.confidence]).collect()
}

/// Serialises one frame in the detector export layout.
pub fn frame_to_json(frame: &KeypointFrame) -> String {
    let pose = flatten(&frame.body);
    let left = flatten(&frame.left_hand);
    let right = flatten(&frame.right_hand);
    let out = FrameOut {
        version: 1.3,
        people: vec![PersonOut {
            pose_keypoints_2d: &pose,
            hand_left_keypoints_2d: &left,
            hand_right_keypoints_2d: &right,
        }],
    };
    serde_json::to_string(&out).expect("frame serialisation cannot fail")
}

/// Writes a sequence as one detector-style file per frame plus `meta.json`.
pub fn save_keypoint_sequence(seq: &KeypointSequence, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, frame) in seq.frames().iter().enumerate() {
        let path = dir.join(format!("frame_{i:06}_keypoints.json"));
        fs::write(&path, frame_to_json(frame)).map_err(|e| Error::io(&path, e))?;
    }
    let meta = SequenceMeta {
        image_width: seq.image_size.0,
        image_height: seq.image_size.1,
        fps: Some(seq.fps),
    };
    let path = dir.join(META_FILE);
    let text = serde_json::to_string_pretty(&meta).expect("meta serialisation cannot fail");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

// ---------------------------------------------------------------------------
// Trimming and intervals

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrimConfig {
    /// Wrist displacement threshold as a fraction of the torso length.
    pub motion_threshold: f64,
    /// Number of leading detected frames whose median defines the rest position.
    pub rest_frames: usize,
    /// Consecutive above-threshold frames required at both ends.
    pub hysteresis: usize,
}

impl Default for TrimConfig {
    fn default() -> Self {
        TrimConfig {
            motion_threshold: 0.15,
            rest_frames: 5,
            hysteresis: 3,
        }
    }
}

/// Finds the first and last frame (inclusive) in which the hands have left
/// their rest position.
pub fn trim_sequence(seq: &KeypointSequence, cfg: &TrimConfig) -> Result<(usize, usize)> {
    let n = seq.len();
    let mut moving = vec![false; n];
    let mut any_wrist = false;
    let torso = seq.median_torso_length();
    for hand in [Hand::Right, Hand::Left] {
        let track: Vec<Option<Keypoint2D>> = seq.frames().iter().map(|f| f.wrist(hand)).collect();
        let detected: Vec<Keypoint2D> = track.iter().flatten().copied().collect();
        if detected.is_empty() {
            continue;
        }
        any_wrist = true;
        let head = &detected[..detected.len().min(cfg.rest_frames.max(1))];
        let xs: Vec<f64> = head.iter().map(|k| k.x).collect();
        let ys: Vec<f64> = head.iter().map(|k| k.y).collect();
        let (rx, ry) = (median(&xs).unwrap(), median(&ys).unwrap());
        let torso = *torso.as_ref().map_err(|_| Error::TorsoUndetected)?;
        let threshold = cfg.motion_threshold * torso;
        for (i, k) in track.iter().enumerate() {
            if let Some(k) = k {
                if (k.x - rx).hypot(k.y - ry) > threshold {
                    moving[i] = true;
                }
            }
        }
    }
    if !any_wrist {
        return Err(Error::UntrackableSequence);
    }
    let h = cfg.hysteresis.max(1);
    let start = (0..n).find(|&i| moving[i..(i + h).min(n)].iter().all(|&m| m));
    let end = (0..n)
        .rev()
        .find(|&i| moving[(i + 1).saturating_sub(h)..=i].iter().all(|&m| m));
    match (start, end) {
        (Some(s), Some(e)) if s < e => Ok((s, e)),
        _ => Err(Error::NoSignMotion),
    }
}

/// Portion of a trimmed sign in which the sign proper is articulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub frame_count: usize,
}

impl CoreInterval {
    /// Frames strictly inside `(lo, hi)`.
    pub fn frames_between(lo: f64, hi: f64, frame_count: usize) -> impl Iterator<Item = usize> {
        (0..frame_count).filter(move |&f| (f as f64) > lo && (f as f64) < hi)
    }

    pub fn frames(&self) -> impl Iterator<Item = usize> {
        Self::frames_between(self.t_start, self.t_end, self.frame_count)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t_start + self.t_end)
    }

    pub fn length(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// `(0.5·T/8, 7·T/8)` for a sequence of `T` frames.
pub fn core_interval(frame_count: usize) -> Result<CoreInterval> {
    if frame_count < 8 {
        return Err(Error::SequenceTooShort(frame_count));
    }
    let t = frame_count as f64;
    Ok(CoreInterval {
        t_start: 0.5 * t / 8.0,
        t_end: 7.0 * t / 8.0,
        frame_count,
    })
}

/// Divides coordinates by the median torso length and flips y so that height
/// grows upward. Confidences are untouched. A sequence that is already
/// normalised is only rescaled.
pub fn normalize_sequence(seq: &KeypointSequence) -> Result<KeypointSequence> {
    let torso = seq.median_torso_length()?;
    if torso <= 0.0 {
        return Err(Error::TorsoUndetected);
    }
    let flip = seq.coordinates == CoordinateFrame::Image;
    let height = seq.image_size.1 as f64;
    let map = |k: &Keypoint2D| {
        let y = if flip { height - k.y } else { k.y };
        Keypoint2D::new(k.x / torso, y / torso, k.confidence)
    };
    let frames = seq
        .frames()
        .iter()
        .map(|f| KeypointFrame {
            body: f.body.iter().map(map).collect(),
            left_hand: f.left_hand.iter().map(map).collect(),
            right_hand: f.right_hand.iter().map(map).collect(),
            timestamp_index: f.timestamp_index,
        })
        .collect();
    Ok(KeypointSequence {
        frames,
        fps: seq.fps,
        image_size: seq.image_size,
        coordinates: CoordinateFrame::Normalized,
    })
}
