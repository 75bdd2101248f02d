use std::f64::consts::PI;
use std::path::Path;

use gesture_autograd::AutogradError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::annotation::{GestureSequence, Stream, FACE_DIMS};
use crate::error::{Error, Result};
use crate::formats::{ArrayContainer, NamedArray};

pub const DEFAULT_LIP_VERTICES: usize = 20;
const BASIS_VERSION: u32 = 1;
const HARMONICS: usize = 3;

/// Linear lip model: `neutral + sum_i theta_i * basis_i`, in millimeters.
#[derive(Clone, Debug, PartialEq)]
pub struct LipBlendshapeBasis {
    neutral: Vec<[f64; 3]>,
    /// `FACE_DIMS` components of `L` displacement vectors each.
    basis: Vec<Vec<[f64; 3]>>,
}

impl LipBlendshapeBasis {
    pub fn new(neutral: Vec<[f64; 3]>, basis: Vec<Vec<[f64; 3]>>) -> Result<Self> {
        if neutral.is_empty() {
            return Err(Error::InvalidInput("lip basis needs at least one vertex".into()));
        }
        if basis.len() != FACE_DIMS {
            return Err(Error::InvalidInput(format!("lip basis needs {FACE_DIMS} components, got {}", basis.len())));
        }
        if let Some(c) = basis.iter().position(|b| b.len() != neutral.len()) {
            return Err(Error::InvalidInput(format!(
                "component {c} has {} vertices, neutral has {}",
                basis[c].len(),
                neutral.len()
            )));
        }
        let finite = neutral.iter().chain(basis.iter().flatten()).flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("lip basis contains non-finite values".into()));
        }
        Ok(Self { neutral, basis })
    }

    /// Seeded stand-in for the face model: `vertices` points on an ellipse
    /// around the mouth with displacements that vary smoothly along it.
    pub fn synthetic(seed: u64, vertices: usize) -> Result<Self> {
        if vertices == 0 {
            return Err(Error::InvalidParameter("lip basis needs at least one vertex".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angle = |v: usize| 2.0 * PI * v as f64 / vertices as f64;
        let neutral = (0..vertices).map(|v| [25.0 * angle(v).cos(), 10.0 * angle(v).sin(), 0.0]).collect();
        let mut basis = Vec::with_capacity(FACE_DIMS);
        for _ in 0..FACE_DIMS {
            let mut coef = [[0.0; 3]; HARMONICS];
            let mut phase = [[0.0; 3]; HARMONICS];
            for h in 0..HARMONICS {
                for a in 0..3 {
                    coef[h][a] = rng.random_range(-0.1..0.1) / (h + 1) as f64;
                    phase[h][a] = rng.random_range(0.0..2.0 * PI);
                }
            }
            let comp = (0..vertices)
                .map(|v| {
                    let mut d = [0.0; 3];
                    for h in 0..HARMONICS {
                        for a in 0..3 {
                            d[a] += coef[h][a] * (h as f64 * angle(v) + phase[h][a]).cos();
                        }
                    }
                    d
                })
                .collect();
            basis.push(comp);
        }
        Self::new(neutral, basis)
    }

    pub fn vertex_count(&self) -> usize {
        self.neutral.len()
    }

    pub fn neutral(&self) -> &[[f64; 3]] {
        &self.neutral
    }

    pub fn component(&self, i: usize) -> &[[f64; 3]] {
        &self.basis[i]
    }

    /// Multiplies every displacement by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let basis = self.basis.iter().map(|c| c.iter().map(|d| d.map(|x| x * factor)).collect()).collect();
        Self { neutral: self.neutral.clone(), basis }
    }

    /// Reads a GCK1 container with arrays `neutral` `[L, 3]` and
    /// `basis` `[64, L, 3]`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let c = ArrayContainer::read(path)?;
        let get = |name: &str| c.get(name).ok_or_else(|| Error::format(path, format!("missing array {name}")));
        let neutral = get("neutral")?;
        let basis = get("basis")?;
        let l = match neutral.shape[..] {
            [l, 3] if l > 0 => l,
            _ => return Err(Error::format(path, format!("neutral must be [L, 3], got {:?}", neutral.shape))),
        };
        if basis.shape != [FACE_DIMS, l, 3] {
            return Err(Error::format(path, format!("basis must be [{FACE_DIMS}, {l}, 3], got {:?}", basis.shape)));
        }
        let triples = |d: &[f64]| d.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect::<Vec<_>>();
        let comps = basis.data.chunks_exact(3 * l).map(triples).collect();
        Self::new(triples(&neutral.data), comps)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let l = self.vertex_count();
        let flat = |v: &[[f64; 3]]| v.iter().flatten().copied().collect::<Vec<_>>();
        let container = ArrayContainer {
            version: BASIS_VERSION,
            header: json!({ "kind": "lip_basis", "vertices": l }),
            arrays: vec![
                NamedArray::new("neutral", vec![l, 3], flat(&self.neutral)),
                NamedArray::new("basis", vec![FACE_DIMS, l, 3], self.basis.iter().flat_map(|c| flat(c)).collect()),
            ],
        };
        container.write(path)
    }
}

/// Lip vertex positions for one frame of face coefficients.
pub fn lip_vertices(theta: &[f64], basis: &LipBlendshapeBasis) -> Result<Vec<[f64; 3]>> {
    if theta.len() != FACE_DIMS {
        return Err(AutogradError::Shape(format!("expected {FACE_DIMS} face coefficients, got {}", theta.len())).into());
    }
    let mut out = basis.neutral.clone();
    for (c, &w) in basis.basis.iter().zip(theta) {
        for (v, d) in out.iter_mut().zip(c) {
            for a in 0..3 {
                v[a] += w * d[a];
            }
        }
    }
    Ok(out)
}

/// Mean Euclidean distance over frames and lip vertices between two
/// frame-major face coefficient sequences.
pub fn lip_error(pred: &[f64], gt: &[f64], basis: &LipBlendshapeBasis) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::Alignment(format!("{} vs {} face frames", pred.len() / FACE_DIMS, gt.len() / FACE_DIMS)));
    }
    if !pred.len().is_multiple_of(FACE_DIMS) {
        return Err(
            AutogradError::Shape(format!("face data length {} is not a multiple of {FACE_DIMS}", pred.len())).into()
        );
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("lip error of an empty sequence".into()));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (p, g) in pred.chunks_exact(FACE_DIMS).zip(gt.chunks_exact(FACE_DIMS)) {
        let (vp, vg) = (lip_vertices(p, basis)?, lip_vertices(g, basis)?);
        for (a, b) in vp.iter().zip(&vg) {
            total += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Face rows observed in both sequences over their common prefix.
fn paired_faces(a: &GestureSequence, b: &GestureSequence) -> (Vec<f64>, Vec<f64>) {
    let (mut pa, mut pb) = (Vec::new(), Vec::new());
    for t in 0..a.len().min(b.len()) {
        if !a.is_missing(Stream::Face, t) && !b.is_missing(Stream::Face, t) {
            pa.extend_from_slice(a.row(Stream::Face, t));
            pb.extend_from_slice(b.row(Stream::Face, t));
        }
    }
    (pa, pb)
}

/// Lip error between each sequence and a uniformly chosen different one,
/// truncated to their common length and averaged over sequences.
pub fn random_baseline(corpus: &[GestureSequence], basis: &LipBlendshapeBasis, seed: u64) -> Result<f64> {
    if corpus.len() < 2 {
        return Err(Error::Contract("random baseline needs at least two sequences".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for (i, seq) in corpus.iter().enumerate() {
        let mut j = rng.random_range(0..corpus.len() - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = paired_faces(seq, &corpus[j]);
        sum += lip_error(&b, &a, basis)?;
    }
    Ok(sum / corpus.len() as f64)
}
