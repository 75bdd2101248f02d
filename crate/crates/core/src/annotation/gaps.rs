use super::{GestureSequence, Stream};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_GAP: usize = 8;
/// Known frames used on each side of a gap.
pub const SPLINE_SUPPORT: usize = 4;

/// Natural cubic spline through strictly increasing knots.
#[derive(Clone, Debug)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidInput("spline needs at least two knots with one value each".into()));
        }
        if xs.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidInput("spline knots must be strictly increasing".into()));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives
            let k = n - 2;
            let h: Vec<f64> = xs.windows(2).map(|p| p[1] - p[0]).collect();
            let mut diag = vec![0.0; k];
            let mut sup = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                sup[i] = h[i + 1];
                rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
            }
            for i in 1..k {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * sup[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - sup[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { xs: xs.to_vec(), ys: ys.to_vec(), m })
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.m
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.iter().position(|&k| k > x) {
            Some(0) => 0,
            Some(p) => (p - 1).min(n - 2),
            None => n - 2,
        };
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Fills missing runs of at most `max_gap` frames that have known frames on
/// both sides, using a natural cubic spline through up to four known frames
/// per side. Longer or unbounded runs stay missing.
pub fn fill_gaps_cubic(seq: &GestureSequence, max_gap: usize) -> GestureSequence {
    let mut out = seq.clone();
    let t = seq.len();
    for s in Stream::ALL {
        let mut i = 0;
        while i < t {
            if !seq.is_missing(s, i) {
                i += 1;
                continue;
            }
            let start = i;
            while i < t && seq.is_missing(s, i) {
                i += 1;
            }
            let end = i;
            if start == 0 || end == t || end - start > max_gap {
                continue;
            }
            let before = (0..start).rev().filter(|&j| !seq.is_missing(s, j)).take(SPLINE_SUPPORT);
            let mut knots: Vec<usize> = before.collect();
            knots.reverse();
            knots.extend((end..t).filter(|&j| !seq.is_missing(s, j)).take(SPLINE_SUPPORT));
            let xs: Vec<f64> = knots.iter().map(|&k| k as f64).collect();
            for c in 0..s.dims() {
                let ys: Vec<f64> = knots.iter().map(|&k| seq.row(s, k)[c]).collect();
                let spline = NaturalSpline::new(&xs, &ys).expect("knots are distinct frame indices");
                for f in start..end {
                    out.row_mut(s, f)[c] = spline.eval(f as f64);
                }
            }
            for f in start..end {
                out.set_missing(s, f, false);
            }
        }
    }
    out
}
