use std::f64::consts::PI;
use std::path::Path;

use super::{BODY_DIMS, BODY_KEYPOINT_DIMS, FACE_DIMS, HAND_DIMS};
use crate::audio::FRAME_RATE;
use crate::error::{Error, Result};
use crate::formats::GftFile;

fn check_row(v: &[f64], dims: usize, what: &str) -> Result<()> {
    if v.len() != dims {
        return Err(Error::InvalidInput(format!("{what} has {} values, expected {dims}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} has non-finite values")));
    }
    Ok(())
}

/// Expression blendshape weights for one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceParams(pub [f64; FACE_DIMS]);

/// 13 root-relative upper-body joints (XYZ) followed by an axis-angle head rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyParams(pub [f64; BODY_DIMS]);

/// 2 x 21 wrist-relative hand joints (XYZ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HandParams(pub [f64; HAND_DIMS]);

impl FaceParams {
    pub fn new(v: &[f64]) -> Result<Self> {
        check_row(v, FACE_DIMS, "face parameters")?;
        Ok(Self(v.try_into().unwrap()))
    }
}

impl BodyParams {
    pub fn new(v: &[f64]) -> Result<Self> {
        check_row(v, BODY_DIMS, "body parameters")?;
        let b = Self(v.try_into().unwrap());
        let angle = b.head_rotation().iter().map(|x| x * x).sum::<f64>().sqrt();
        if angle >= PI + 1e-6 {
            return Err(Error::InvalidInput(format!("head rotation angle {angle} exceeds pi")));
        }
        Ok(b)
    }

    pub fn keypoints(&self) -> &[f64] {
        &self.0[..BODY_KEYPOINT_DIMS]
    }

    pub fn head_rotation(&self) -> [f64; 3] {
        [self.0[39], self.0[40], self.0[41]]
    }
}

impl HandParams {
    pub fn new(v: &[f64]) -> Result<Self> {
        check_row(v, HAND_DIMS, "hand parameters")?;
        Ok(Self(v.try_into().unwrap()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    Face,
    Body,
    Hand,
}

impl Stream {
    pub const ALL: [Stream; 3] = [Stream::Face, Stream::Body, Stream::Hand];

    pub fn dims(self) -> usize {
        match self {
            Stream::Face => FACE_DIMS,
            Stream::Body => BODY_DIMS,
            Stream::Hand => HAND_DIMS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stream::Face => "face",
            Stream::Body => "body",
            Stream::Hand => "hand",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MissingMask {
    pub face: bool,
    pub body: bool,
    pub hand: bool,
}

impl MissingMask {
    pub fn get(&self, s: Stream) -> bool {
        match s {
            Stream::Face => self.face,
            Stream::Body => self.body,
            Stream::Hand => self.hand,
        }
    }

    pub fn set(&mut self, s: Stream, v: bool) {
        match s {
            Stream::Face => self.face = v,
            Stream::Body => self.body = v,
            Stream::Hand => self.hand = v,
        }
    }

    pub fn any(&self) -> bool {
        self.face || self.body || self.hand
    }
}

/// Per-frame face, body and hand parameters at 15 Hz.
///
/// Missing frames hold zeros and are flagged in `missing`.
#[derive(Clone, Debug, PartialEq)]
pub struct GestureSequence {
    face: Vec<FaceParams>,
    body: Vec<BodyParams>,
    hand: Vec<HandParams>,
    confidence: Vec<f64>,
    missing: Vec<MissingMask>,
}

impl GestureSequence {
    pub fn new(
        face: Vec<FaceParams>,
        body: Vec<BodyParams>,
        hand: Vec<HandParams>,
        confidence: Vec<f64>,
        missing: Vec<MissingMask>,
    ) -> Result<Self> {
        let t = face.len();
        if [body.len(), hand.len(), confidence.len(), missing.len()].iter().any(|&l| l != t) {
            return Err(Error::Alignment(format!(
                "stream lengths differ: face {t}, body {}, hand {}, confidence {}, mask {}",
                body.len(),
                hand.len(),
                confidence.len(),
                missing.len()
            )));
        }
        if t == 0 {
            return Err(Error::InvalidInput("gesture sequence has no frames".into()));
        }
        if let Some(c) = confidence.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidInput(format!("confidence {c} outside [0, 1]")));
        }
        Ok(Self { face, body, hand, confidence, missing })
    }

    /// Fully observed sequence with confidence 1 everywhere.
    pub fn complete(face: Vec<FaceParams>, body: Vec<BodyParams>, hand: Vec<HandParams>) -> Result<Self> {
        let t = face.len();
        Self::new(face, body, hand, vec![1.0; t], vec![MissingMask::default(); t])
    }

    pub fn len(&self) -> usize {
        self.face.len()
    }

    pub fn is_empty(&self) -> bool {
        self.face.is_empty()
    }

    pub fn frame_rate(&self) -> f64 {
        FRAME_RATE
    }

    pub fn face(&self) -> &[FaceParams] {
        &self.face
    }

    pub fn body(&self) -> &[BodyParams] {
        &self.body
    }

    pub fn hand(&self) -> &[HandParams] {
        &self.hand
    }

    pub fn confidence(&self) -> &[f64] {
        &self.confidence
    }

    pub fn missing(&self) -> &[MissingMask] {
        &self.missing
    }

    pub fn row(&self, s: Stream, t: usize) -> &[f64] {
        match s {
            Stream::Face => &self.face[t].0,
            Stream::Body => &self.body[t].0,
            Stream::Hand => &self.hand[t].0,
        }
    }

    pub(crate) fn row_mut(&mut self, s: Stream, t: usize) -> &mut [f64] {
        match s {
            Stream::Face => &mut self.face[t].0,
            Stream::Body => &mut self.body[t].0,
            Stream::Hand => &mut self.hand[t].0,
        }
    }

    pub fn is_missing(&self, s: Stream, t: usize) -> bool {
        self.missing[t].get(s)
    }

    pub(crate) fn set_missing(&mut self, s: Stream, t: usize, v: bool) {
        self.missing[t].set(s, v);
    }

    pub fn has_gaps(&self) -> bool {
        self.missing.iter().any(MissingMask::any)
    }

    /// Number of missing frames in `s`.
    pub fn missing_count(&self, s: Stream) -> usize {
        self.missing.iter().filter(|m| m.get(s)).count()
    }

    /// Frame-major values of one stream.
    pub fn stream_values(&self, s: Stream) -> Vec<f64> {
        (0..self.len()).flat_map(|t| self.row(s, t).iter().copied()).collect()
    }

    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let end = start
            .checked_add(len)
            .filter(|&e| e <= self.len())
            .ok_or_else(|| Error::Alignment(format!("slice {start}+{len} exceeds {} frames", self.len())))?;
        Self::new(
            self.face[start..end].to_vec(),
            self.body[start..end].to_vec(),
            self.hand[start..end].to_vec(),
            self.confidence[start..end].to_vec(),
            self.missing[start..end].to_vec(),
        )
    }

    /// Stream as a GFT matrix with NaN rows for missing frames.
    pub fn stream_gft(&self, s: Stream) -> GftFile {
        let rows: Vec<Vec<f64>> = (0..self.len())
            .map(|t| if self.is_missing(s, t) { vec![f64::NAN; s.dims()] } else { self.row(s, t).to_vec() })
            .collect();
        GftFile::from_rows(s.dims(), FRAME_RATE as f32, &rows).expect("rows match stream dims")
    }

    pub fn confidence_gft(&self) -> GftFile {
        let rows: Vec<[f64; 1]> = self.confidence.iter().map(|c| [*c]).collect();
        GftFile::from_rows(1, FRAME_RATE as f32, &rows).expect("one value per row")
    }

    /// Builds from per-stream GFT matrices; any NaN in a row marks that frame missing.
    ///
    /// A missing confidence file means every frame has confidence 1.
    pub fn from_gft(
        face: &GftFile,
        body: &GftFile,
        hand: &GftFile,
        confidence: Option<&GftFile>,
        origin: &Path,
    ) -> Result<Self> {
        let t = face.frame_count();
        for (f, s) in [(face, Stream::Face), (body, Stream::Body), (hand, Stream::Hand)] {
            if f.dims != s.dims() {
                return Err(Error::format(
                    origin,
                    format!("{} stream has {} dims, expected {}", s.name(), f.dims, s.dims()),
                ));
            }
            if f.frame_count() != t {
                return Err(Error::Alignment(format!(
                    "{} stream has {} frames, face has {t}",
                    s.name(),
                    f.frame_count()
                )));
            }
            if f.frame_rate != FRAME_RATE as f32 {
                return Err(Error::format(origin, format!("{} stream is {} Hz, expected 15", s.name(), f.frame_rate)));
            }
        }
        let conf: Vec<f64> = match confidence {
            Some(c) => {
                if c.dims != 1 || c.frame_count() != t {
                    return Err(Error::format(origin, "confidence must be one value per frame"));
                }
                c.data.iter().map(|&v| if v.is_nan() { 0.0 } else { v as f64 }).collect()
            }
            None => vec![1.0; t],
        };
        let mut missing = vec![MissingMask::default(); t];
        let mut read = |f: &GftFile, s: Stream| -> Vec<Vec<f64>> {
            (0..t)
                .map(|i| {
                    let r = f.row(i);
                    if r.iter().any(|v| v.is_nan()) {
                        missing[i].set(s, true);
                        vec![0.0; s.dims()]
                    } else {
                        r.iter().map(|&v| v as f64).collect()
                    }
                })
                .collect()
        };
        let face_rows = read(face, Stream::Face);
        let body_rows = read(body, Stream::Body);
        let hand_rows = read(hand, Stream::Hand);
        let wrap = |e: Error, s: Stream, i: usize| Error::format(origin, format!("{} frame {i}: {e}", s.name()));
        let face = face_rows
            .iter()
            .enumerate()
            .map(|(i, r)| FaceParams::new(r).map_err(|e| wrap(e, Stream::Face, i)))
            .collect::<Result<_>>()?;
        let body = body_rows
            .iter()
            .enumerate()
            .map(|(i, r)| BodyParams::new(r).map_err(|e| wrap(e, Stream::Body, i)))
            .collect::<Result<_>>()?;
        let hand = hand_rows
            .iter()
            .enumerate()
            .map(|(i, r)| HandParams::new(r).map_err(|e| wrap(e, Stream::Hand, i)))
            .collect::<Result<_>>()?;
        Self::new(face, body, hand, conf, missing).map_err(|e| Error::format(origin, e.to_string()))
    }
}
