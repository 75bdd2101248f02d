use super::{GestureSequence, Stream};
use crate::error::{Error, Result};

pub const DEFAULT_SIGMA: f64 = 1.5;

/// Normalized Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let r = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-r..=r).map(|o| (-((o * o) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let z: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= z);
    Ok(k)
}

// half-sample symmetric: x[-1] = x[0], x[n] = x[n-1], repeating with period 2n
fn reflect(i: i64, n: usize) -> usize {
    let p = 2 * n as i64;
    let m = i.rem_euclid(p) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

fn smooth_channel(x: &[f64], kernel: &[f64], out: &mut [f64]) {
    let n = x.len();
    let r = (kernel.len() / 2) as i64;
    for (t, o) in out.iter_mut().enumerate() {
        *o = kernel.iter().enumerate().map(|(j, w)| w * x[reflect(t as i64 + j as i64 - r, n)]).sum();
    }
}

/// Convolves every channel of a channel-major matrix with a Gaussian kernel,
/// mirroring the signal at both ends.
pub fn gaussian_smooth(channels: &[Vec<f64>], sigma: f64) -> Result<Vec<Vec<f64>>> {
    let kernel = gaussian_kernel(sigma)?;
    Ok(channels
        .iter()
        .map(|c| {
            let mut out = vec![0.0; c.len()];
            if !c.is_empty() {
                smooth_channel(c, &kernel, &mut out);
            }
            out
        })
        .collect())
}

/// Smooths the body (including head rotation) and hand streams; the face
/// stream is left as is. Each run of observed frames is smoothed on its own.
pub fn smooth_body_and_hand(seq: &GestureSequence, sigma: f64) -> Result<GestureSequence> {
    let kernel = gaussian_kernel(sigma)?;
    let mut out = seq.clone();
    let t = seq.len();
    for s in [Stream::Body, Stream::Hand] {
        let mut i = 0;
        while i < t {
            if seq.is_missing(s, i) {
                i += 1;
                continue;
            }
            let start = i;
            while i < t && !seq.is_missing(s, i) {
                i += 1;
            }
            let mut x = vec![0.0; i - start];
            let mut y = vec![0.0; i - start];
            for c in 0..s.dims() {
                for (k, f) in (start..i).enumerate() {
                    x[k] = seq.row(s, f)[c];
                }
                smooth_channel(&x, &kernel, &mut y);
                for (k, f) in (start..i).enumerate() {
                    out.row_mut(s, f)[c] = y[k];
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_radius_and_sum() {
        let k = gaussian_kernel(1.5).unwrap();
        assert_eq!(k.len(), 11);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(gaussian_kernel(0.2).unwrap().len(), 3);
    }

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-4..8).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(reflect(-1, 1), 0);
    }

    #[test]
    fn non_positive_sigma_is_rejected() {
        assert!(gaussian_smooth(&[vec![1.0; 4]], 0.0).is_err());
        assert!(gaussian_smooth(&[vec![1.0; 4]], -1.0).is_err());
        assert!(gaussian_smooth(&[vec![1.0; 4]], f64::NAN).is_err());
    }

    #[test]
    fn very_short_channels_are_handled() {
        let out = gaussian_smooth(&[vec![2.0], vec![1.0, 3.0]], 1.5).unwrap();
        assert!((out[0][0] - 2.0).abs() < 1e-12);
        assert!((out[1].iter().sum::<f64>() - 4.0).abs() < 1e-12);
    }
}
