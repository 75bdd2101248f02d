//! Slice-level numeric kernels behind the graph ops.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

#[inline]
pub(crate) fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

#[inline]
pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `out[n, o, t] = b[o] + sum_{i, k} w[o, i, k] * x[n, i, t + k - 1]`, zero padded.
pub(crate) fn conv1d_forward(x: &[f64], w: &[f64], b: &[f64], n: usize, cin: usize, cout: usize, t: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * cout * t];
    for bi in 0..n {
        for o in 0..cout {
            let orow = &mut out[(bi * cout + o) * t..(bi * cout + o + 1) * t];
            orow.fill(b[o]);
            for i in 0..cin {
                let xrow = &x[(bi * cin + i) * t..(bi * cin + i + 1) * t];
                let k = &w[(o * cin + i) * 3..(o * cin + i) * 3 + 3];
                axpy(k[1], xrow, orow);
                if t > 1 {
                    axpy(k[0], &xrow[..t - 1], &mut orow[1..]);
                    axpy(k[2], &xrow[1..], &mut orow[..t - 1]);
                }
            }
        }
    }
    out
}

pub(crate) fn conv1d_backward_input(
    gy: &[f64],
    w: &[f64],
    gx: &mut [f64],
    n: usize,
    cin: usize,
    cout: usize,
    t: usize,
) {
    for bi in 0..n {
        for i in 0..cin {
            let grow = &mut gx[(bi * cin + i) * t..(bi * cin + i + 1) * t];
            for o in 0..cout {
                let gyrow = &gy[(bi * cout + o) * t..(bi * cout + o + 1) * t];
                let k = &w[(o * cin + i) * 3..(o * cin + i) * 3 + 3];
                axpy(k[1], gyrow, grow);
                if t > 1 {
                    axpy(k[0], &gyrow[1..], &mut grow[..t - 1]);
                    axpy(k[2], &gyrow[..t - 1], &mut grow[1..]);
                }
            }
        }
    }
}

pub(crate) fn conv1d_backward_weight(
    gy: &[f64],
    x: &[f64],
    gw: &mut [f64],
    n: usize,
    cin: usize,
    cout: usize,
    t: usize,
) {
    for bi in 0..n {
        for o in 0..cout {
            let gyrow = &gy[(bi * cout + o) * t..(bi * cout + o + 1) * t];
            for i in 0..cin {
                let xrow = &x[(bi * cin + i) * t..(bi * cin + i + 1) * t];
                let k = &mut gw[(o * cin + i) * 3..(o * cin + i) * 3 + 3];
                k[1] += dot(gyrow, xrow);
                if t > 1 {
                    k[0] += dot(&gyrow[1..], &xrow[..t - 1]);
                    k[2] += dot(&gyrow[..t - 1], &xrow[1..]);
                }
            }
        }
    }
}

/// Per-channel mean and biased variance over batch and time.
pub(crate) fn channel_moments(x: &[f64], n: usize, c: usize, t: usize) -> (Vec<f64>, Vec<f64>) {
    let count = (n * t) as f64;
    let mut mean = vec![0.0; c];
    for bi in 0..n {
        for ch in 0..c {
            let off = (bi * c + ch) * t;
            mean[ch] += x[off..off + t].iter().sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![0.0; c];
    for bi in 0..n {
        for ch in 0..c {
            let off = (bi * c + ch) * t;
            var[ch] += x[off..off + t].iter().map(|v| (v - mean[ch]).powi(2)).sum::<f64>();
        }
    }
    var.iter_mut().for_each(|v| *v /= count);
    (mean, var)
}
