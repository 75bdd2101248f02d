//! Brute-force reference implementations used only by tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Direct-loop MFCC: pre-emphasis, Hamming, naive DFT power spectrum,
/// triangular HTK mel filters, natural log, orthonormal DCT-II.
pub fn mfcc_brute_force(window: &[f64], sample_rate: f64) -> (Vec<f64>, f64) {
    let n = window.len();
    let n_fft = n.next_power_of_two();
    let n_mels = 40;
    let floor = 1e-10;

    let mut energy = 0.0;
    for x in window {
        energy += x * x;
    }
    let log_energy = (energy / n as f64 + floor).ln();

    let mut frame = vec![0.0; n_fft];
    for i in 0..n {
        let prev = if i == 0 { 0.0 } else { 0.97 * window[i - 1] };
        let hamming = 0.54 - 0.46 * (2.0 * PI * i as f64 / (n as f64 - 1.0)).cos();
        frame[i] = (window[i] - prev) * hamming;
    }

    let mut power = vec![0.0; n_fft / 2 + 1];
    for (k, p) in power.iter_mut().enumerate() {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, x) in frame.iter().enumerate() {
            let ang = -2.0 * PI * (k * j) as f64 / n_fft as f64;
            re += x * ang.cos();
            im += x * ang.sin();
        }
        *p = re * re + im * im;
    }

    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let inv = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let top = mel(sample_rate / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2).map(|i| inv(top * i as f64 / (n_mels + 1) as f64)).collect();
    let mut log_mel = vec![0.0; n_mels];
    for m in 0..n_mels {
        let mut e = 0.0;
        for (k, p) in power.iter().enumerate() {
            let f = k as f64 * sample_rate / n_fft as f64;
            let w = if f >= edges[m] && f <= edges[m + 1] {
                (f - edges[m]) / (edges[m + 1] - edges[m])
            } else if f > edges[m + 1] && f <= edges[m + 2] {
                (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1])
            } else {
                0.0
            };
            e += w * p;
        }
        log_mel[m] = if e > floor { e.ln() } else { floor.ln() };
    }

    let mut cep = vec![0.0; 13];
    for (k, c) in cep.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, v) in log_mel.iter().enumerate() {
            s += v * (PI * k as f64 * (2 * j + 1) as f64 / (2 * n_mels) as f64).cos();
        }
        let norm = if k == 0 { (1.0 / n_mels as f64).sqrt() } else { (2.0 / n_mels as f64).sqrt() };
        *c = norm * s;
    }
    (cep, log_energy)
}

/// Natural cubic spline through `(xs, ys)` evaluated at `x`, built by
/// assembling the full second-derivative system and solving it with
/// dense Gaussian elimination.
pub fn natural_spline_dense(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    assert!(n >= 2);
    let mut a = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    a[0][0] = 1.0;
    a[n - 1][n - 1] = 1.0;
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        a[i][i - 1] = h0 / 6.0;
        a[i][i] = (h0 + h1) / 3.0;
        a[i][i + 1] = h1 / 6.0;
        rhs[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
    }
    // Gaussian elimination with partial pivoting
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut m = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for k in row + 1..n {
            s -= a[row][k] * m[k];
        }
        m[row] = s / a[row][row];
    }
    let i = (0..n - 1).find(|&i| x <= xs[i + 1]).unwrap_or(n - 2);
    let h = xs[i + 1] - xs[i];
    let (u, v) = ((xs[i + 1] - x) / h, (x - xs[i]) / h);
    u * ys[i] + v * ys[i + 1] + ((u.powi(3) - u) * m[i] + (v.powi(3) - v) * m[i + 1]) * h * h / 6.0
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}
