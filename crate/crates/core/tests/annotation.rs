mod oracles;

use gesture_core::annotation::*;
use gesture_core::audio::AudioFeatureSequence;
use oracles::{natural_spline_dense, pearson};
use proptest::prelude::*;

fn sequence_from_fn(t: usize, f: impl Fn(usize, usize) -> f64) -> GestureSequence {
    let face = (0..t).map(|i| FaceParams::new(&(0..64).map(|c| f(i, c)).collect::<Vec<_>>()).unwrap()).collect();
    let body = (0..t).map(|i| BodyParams::new(&(0..42).map(|c| 0.01 * f(i, c)).collect::<Vec<_>>()).unwrap()).collect();
    let hand = (0..t).map(|i| HandParams::new(&(0..126).map(|c| f(i, c)).collect::<Vec<_>>()).unwrap()).collect();
    GestureSequence::complete(face, body, hand).unwrap()
}

fn with_confidence(seq: &GestureSequence, conf: Vec<f64>) -> GestureSequence {
    GestureSequence::new(seq.face().to_vec(), seq.body().to_vec(), seq.hand().to_vec(), conf, seq.missing().to_vec())
        .unwrap()
}

fn with_missing(seq: &GestureSequence, s: Stream, frames: impl IntoIterator<Item = usize>) -> GestureSequence {
    let mut mask = seq.missing().to_vec();
    for f in frames {
        match s {
            Stream::Face => mask[f].face = true,
            Stream::Body => mask[f].body = true,
            Stream::Hand => mask[f].hand = true,
        }
    }
    GestureSequence::new(seq.face().to_vec(), seq.body().to_vec(), seq.hand().to_vec(), seq.confidence().to_vec(), mask)
        .unwrap()
}

fn qualifies(c: &[f64], a: usize, b: usize, thr: f64, w: usize) -> bool {
    b - a >= w && (a..=b - w).all(|s| c[s..s + w].iter().sum::<f64>() / w as f64 >= thr)
}

/// All maximal qualifying segments by exhaustive enumeration.
fn maximal_segments_oracle(c: &[f64], thr: f64, w: usize) -> Vec<(usize, usize)> {
    let n = c.len();
    let mut all = Vec::new();
    for a in 0..n {
        for b in a + 1..=n {
            if qualifies(c, a, b, thr, w) {
                all.push((a, b));
            }
        }
    }
    all.iter().copied().filter(|&(a, b)| !all.iter().any(|&(x, y)| x <= a && b <= y && (x, y) != (a, b))).collect()
}

#[test]
fn confidence_filter_trivial_cases() {
    let seq = sequence_from_fn(100, |t, c| (t + c) as f64 * 0.01);
    let kept = confidence_filter(&seq, 0.5, DEFAULT_CONFIDENCE_WINDOW).unwrap();
    assert_eq!(kept, vec![seq.clone()]);
    let dark = with_confidence(&seq, vec![0.0; 100]);
    assert!(confidence_filter(&dark, 0.5, DEFAULT_CONFIDENCE_WINDOW).unwrap().is_empty());
}

#[test]
fn confidence_filter_matches_span_enumeration() {
    let conf: Vec<f64> = [vec![1.0; 100], vec![0.0; 10], vec![1.0; 100]].concat();
    let oracle = maximal_segments_oracle(&conf, 0.9, 5);
    assert_eq!(oracle, vec![(0, 100), (110, 210)]);
    let got = confidence_segments(&conf, 0.9, 5, MIN_SEGMENT_FRAMES).unwrap();
    let got: Vec<(usize, usize)> = got.iter().map(|r| (r.start, r.end)).collect();
    assert_eq!(got, oracle);
    let seq = with_confidence(&sequence_from_fn(210, |t, _| t as f64 * 0.01), conf);
    let segs = confidence_filter(&seq, 0.9, 5).unwrap();
    assert_eq!(segs.len(), 2);
    assert!(segs.iter().all(|s| s.len() >= 96));
    assert_eq!(segs[1].face()[0], seq.face()[110]);
}

proptest! {
    #[test]
    fn confidence_segments_are_ordered_disjoint_and_valid(
        conf in prop::collection::vec(prop_oneof![Just(1.0), Just(0.0), 0.0f64..1.0], 1..120),
        thr in 0.0f64..1.0,
        w in 1usize..12,
        min_len in 1usize..20,
    ) {
        let segs = confidence_segments(&conf, thr, w, min_len).unwrap();
        for p in segs.windows(2) {
            prop_assert!(p[0].end <= p[1].start);
        }
        let oracle = maximal_segments_oracle(&conf, thr, w.min(conf.len()));
        for r in &segs {
            prop_assert!(r.len() >= min_len.max(w.min(conf.len())));
            prop_assert!(qualifies(&conf, r.start, r.end, thr, w.min(conf.len())));
            prop_assert!(oracle.iter().any(|&(a, b)| a <= r.start && r.end <= b));
        }
        // every long maximal segment is represented
        for &(a, b) in &oracle {
            if b - a >= min_len + w {
                prop_assert!(segs.iter().any(|r| r.start < b && a < r.end));
            }
        }
    }
}

#[test]
fn gap_on_a_line_is_filled_on_the_line() {
    let seq = sequence_from_fn(30, |t, c| 0.5 * t as f64 - 0.1 * c as f64);
    let holed = with_missing(&seq, Stream::Hand, 10..13);
    let filled = fill_gaps_cubic(&holed, DEFAULT_MAX_GAP);
    assert_eq!(filled.missing_count(Stream::Hand), 0);
    for t in 10..13 {
        for c in 0..126 {
            assert!((filled.row(Stream::Hand, t)[c] - seq.row(Stream::Hand, t)[c]).abs() < 1e-9);
        }
    }
}

#[test]
fn long_gaps_stay_missing() {
    let seq = sequence_from_fn(40, |t, _| (t as f64).sin());
    let holed = with_missing(&seq, Stream::Body, 10..19);
    let filled = fill_gaps_cubic(&holed, DEFAULT_MAX_GAP);
    assert_eq!(filled, holed);
    let eight = with_missing(&seq, Stream::Body, 10..18);
    assert_eq!(fill_gaps_cubic(&eight, DEFAULT_MAX_GAP).missing_count(Stream::Body), 0);
}

#[test]
fn edge_gaps_stay_missing() {
    let seq = sequence_from_fn(40, |t, _| t as f64);
    let holed = with_missing(&seq, Stream::Face, (0..3).chain(37..40));
    assert_eq!(fill_gaps_cubic(&holed, DEFAULT_MAX_GAP), holed);
}

#[test]
fn cubic_gap_matches_dense_spline_oracle() {
    let cubic = |t: f64| t * t * t - 2.0 * t;
    let x = |t: usize| t as f64 * 0.1 - 1.0;
    let seq = sequence_from_fn(25, |t, _| cubic(x(t)));
    let holed = with_missing(&seq, Stream::Face, 11..16);
    let filled = fill_gaps_cubic(&holed, DEFAULT_MAX_GAP);
    let knots = [7usize, 8, 9, 10, 16, 17, 18, 19];
    let xs: Vec<f64> = knots.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = knots.iter().map(|&k| cubic(x(k))).collect();
    for t in 11..16 {
        let want = natural_spline_dense(&xs, &ys, t as f64);
        assert!((filled.row(Stream::Face, t)[0] - want).abs() < 1e-9, "frame {t}");
    }
}

#[test]
fn spline_support_shrinks_near_other_gaps() {
    let seq = sequence_from_fn(30, |t, _| ((t as f64) * 0.3).cos());
    let holed = with_missing(&seq, Stream::Hand, [5, 12, 13, 14]);
    let filled = fill_gaps_cubic(&holed, DEFAULT_MAX_GAP);
    // frame 5 is still missing when frame 12..15 is filled, so it is skipped
    let knots = [8usize, 9, 10, 11, 15, 16, 17, 18];
    let xs: Vec<f64> = knots.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = knots.iter().map(|&k| seq.row(Stream::Hand, k)[3]).collect();
    let want = natural_spline_dense(&xs, &ys, 13.0);
    assert!((filled.row(Stream::Hand, 13)[3] - want).abs() < 1e-9);
}

proptest! {
    #[test]
    fn gap_filling_never_touches_known_frames(
        holes in prop::collection::btree_set(0usize..50, 0..25),
    ) {
        let seq = sequence_from_fn(50, |t, c| ((t * 7 + c * 3) % 11) as f64 * 0.1);
        let holed = with_missing(&seq, Stream::Hand, holes.iter().copied());
        let filled = fill_gaps_cubic(&holed, DEFAULT_MAX_GAP);
        for t in 0..50 {
            for s in Stream::ALL {
                if !holed.is_missing(s, t) {
                    prop_assert_eq!(filled.row(s, t), holed.row(s, t));
                    prop_assert!(!filled.is_missing(s, t));
                }
            }
        }
    }
}

#[test]
fn smoothing_keeps_constants() {
    let out = gaussian_smooth(&[vec![3.25; 40], vec![-1.0; 5]], DEFAULT_SIGMA).unwrap();
    assert!(out.iter().flatten().zip([3.25; 40].iter().chain(&[-1.0; 5])).all(|(a, b)| (a - b).abs() < 1e-9));
}

#[test]
fn impulse_response_is_the_analytic_kernel() {
    let mut x = vec![0.0; 41];
    x[20] = 1.0;
    let out = gaussian_smooth(&[x], 1.5).unwrap();
    let g = |k: i64| (-(k * k) as f64 / (2.0 * 1.5 * 1.5)).exp();
    let z: f64 = (-5..=5).map(g).sum();
    for (t, v) in out[0].iter().enumerate() {
        let k = t as i64 - 20;
        let want = if k.abs() <= 5 { g(k) / z } else { 0.0 };
        assert!((v - want).abs() < 1e-12, "offset {k}");
    }
}

#[test]
fn default_sigma_is_one_and_a_half() {
    assert_eq!(DEFAULT_SIGMA, 1.5);
}

#[test]
fn smoothing_skips_the_face() {
    let seq = sequence_from_fn(30, |t, c| ((t * 5 + c) % 7) as f64);
    let out = smooth_body_and_hand(&seq, 1.5).unwrap();
    assert_eq!(out.face(), seq.face());
    assert_ne!(out.hand(), seq.hand());
}

proptest! {
    #[test]
    fn smoothing_preserves_channel_means(
        x in prop::collection::vec(-10.0f64..10.0, 1..80),
        sigma in 0.1f64..6.0,
    ) {
        let out = gaussian_smooth(std::slice::from_ref(&x), sigma).unwrap();
        let m0 = x.iter().sum::<f64>() / x.len() as f64;
        let m1 = out[0].iter().sum::<f64>() / x.len() as f64;
        prop_assert!((m0 - m1).abs() < 1e-6);
    }
}

fn aligned(t: usize) -> (AudioFeatureSequence, GestureSequence) {
    let rows: Vec<Vec<f64>> = (0..t).map(|i| (0..28).map(|c| (i * 28 + c) as f64).collect()).collect();
    (AudioFeatureSequence::from_rows(&rows).unwrap(), sequence_from_fn(t, |i, c| (i + c) as f64 * 0.01))
}

fn window_starts_oracle(t: usize, overlap: usize) -> Vec<usize> {
    (0..t).filter(|s| s % (64 - overlap) == 0 && s + 64 <= t).collect()
}

#[test]
fn window_enumeration() {
    let (f, g) = aligned(64);
    for overlap in 1..=5 {
        assert_eq!(make_training_windows(&f, &g, overlap, "s").unwrap().len(), 1);
    }
    let (f, g) = aligned(128);
    let w = make_training_windows(&f, &g, 4, "s").unwrap();
    assert_eq!(window_starts_oracle(128, 4), vec![0, 60]);
    assert_eq!(w.len(), 2);
    assert_eq!(w[1].features[0], (60 * 28) as f64);
    assert_eq!(WINDOW_LEN, 64);
    assert_eq!(DEFAULT_OVERLAP, 4);
    let (f, g) = aligned(63);
    assert!(make_training_windows(&f, &g, 4, "s").unwrap().is_empty());
}

#[test]
fn windows_carry_the_right_frames() {
    let (f, g) = aligned(300);
    for overlap in 1..=5 {
        let w = make_training_windows(&f, &g, overlap, "subj").unwrap();
        let starts = window_starts_oracle(300, overlap);
        assert_eq!(w.len(), starts.len());
        for (win, &s) in w.iter().zip(&starts) {
            assert_eq!(win.len(), 64);
            assert_eq!(win.subject_id, "subj");
            assert_eq!(win.hand.len(), 64 * 126);
            assert_eq!(&win.body[..42], g.row(Stream::Body, s));
            assert_eq!(&win.face[63 * 64..], g.row(Stream::Face, s + 63));
        }
        // consecutive windows share exactly `overlap` frames
        for p in w.windows(2) {
            assert_eq!(&p[0].features[(64 - overlap) * 28..], &p[1].features[..overlap * 28]);
        }
    }
}

#[test]
fn windows_skip_gaps_and_reject_misalignment() {
    let (f, g) = aligned(200);
    let holed = with_missing(&g, Stream::Hand, [70]);
    let w = make_training_windows(&f, &holed, 4, "s").unwrap();
    // starts 0, 60, 120; only the middle window covers frame 70
    assert_eq!(w.len(), 2);
    assert_eq!(w[1].features[0], (120 * 28) as f64);
    let (f2, _) = aligned(199);
    assert!(matches!(make_training_windows(&f2, &g, 4, "s"), Err(gesture_core::Error::Alignment(_))));
    assert!(make_training_windows(&f, &g, 0, "s").is_err());
    assert!(make_training_windows(&f, &g, 6, "s").is_err());
}

#[test]
fn synthetic_corpus_is_deterministic() {
    let a = generate_synthetic_corpus(42, 3, 100).unwrap();
    let b = generate_synthetic_corpus(42, 3, 100).unwrap();
    assert_eq!(a.len(), 3);
    for ((fa, ga), (fb, gb)) in a.iter().zip(&b) {
        assert_eq!(fa, fb);
        assert_eq!(ga, gb);
        assert!(ga.confidence().iter().all(|&c| c == 1.0));
    }
    let c = generate_synthetic_corpus(43, 1, 100).unwrap();
    assert_ne!(a[0].1, c[0].1);
    assert!(generate_synthetic_corpus(1, 0, 100).is_err());
    assert!(generate_synthetic_corpus(1, 1, 63).is_err());
}

#[test]
fn synthetic_pose_follows_its_own_audio() {
    let corpus = generate_synthetic_corpus(7, 21, 600).unwrap();
    let mapping = SyntheticMapping::new(7);
    let channel = |g: &GestureSequence, s: Stream, c: usize| (0..g.len()).map(|t| g.row(s, t)[c]).collect::<Vec<f64>>();
    let (f, g) = &corpus[0];
    assert_eq!(&mapping.gestures(f).unwrap(), g);

    let drive = mapping.drive(f, Stream::Body, 0);
    let r = pearson(&channel(g, Stream::Body, 0), &drive);
    assert!(r.abs() > 0.9, "r = {r}");

    let mut total = 0.0;
    for i in 0..20 {
        let (_, gi) = &corpus[i];
        let (fj, _) = &corpus[i + 1];
        total += pearson(&channel(gi, Stream::Body, 0), &mapping.drive(fj, Stream::Body, 0)).abs();
    }
    assert!(total / 20.0 < 0.3, "mean |r| = {}", total / 20.0);
}

#[test]
fn corpus_round_trips_through_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_synthetic_corpus(3, 2, 80).unwrap();
    let seqs: Vec<LabeledSequence> = corpus
        .into_iter()
        .enumerate()
        .map(|(i, (features, gestures))| LabeledSequence {
            id: format!("seq{i}"),
            subject_id: format!("subj{}", i % 2),
            features,
            gestures,
        })
        .collect();
    let path = write_corpus(dir.path(), &seqs).unwrap();
    let back = load_sequences(&path, &Default::default()).unwrap();
    assert_eq!(back.len(), 2);
    assert_eq!(back[1].subject_id, "subj1");
    assert_eq!(back[0].gestures.len(), 80);
    let orig = seqs[0].gestures.row(Stream::Hand, 5)[7];
    assert!((back[0].gestures.row(Stream::Hand, 5)[7] - orig).abs() < 1e-6);
    assert_eq!(Manifest::read(&path).unwrap().subjects(), vec!["subj0", "subj1"]);
}

#[test]
fn manifest_with_wrong_stream_dims_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_synthetic_corpus(3, 1, 64).unwrap();
    let seqs = vec![LabeledSequence {
        id: "a".into(),
        subject_id: "s".into(),
        features: corpus[0].0.clone(),
        gestures: corpus[0].1.clone(),
    }];
    let path = write_corpus(dir.path(), &seqs).unwrap();
    gesture_core::formats::GftFile::new(42, 15.0, vec![0.0; 42 * 64])
        .unwrap()
        .write(dir.path().join("a.hand.gft"))
        .unwrap();
    assert!(load_sequences(&path, &Default::default()).is_err());
}
