use std::fs;
use std::path::Path;

use gesture_autograd::{Graph, Mode, Tensor};
use gesture_core::annotation::{
    confidence_segments, fill_gaps_cubic, gaussian_smooth, generate_synthetic_corpus, load_sequences,
    make_training_windows, to_channel_major, to_frame_major, write_corpus, LabeledSequence, Stream, MIN_SEGMENT_FRAMES,
    WINDOW_LEN,
};
use gesture_core::audio::{
    extract_features, normalize_signal, read_wav, AudioFeatureSequence, FEATURE_DIMS, FRAME_RATE,
};
use gesture_core::evaluation::{
    lip_error, random_baseline, EvaluationReport, LipBlendshapeBasis, SubjectReport, METHOD_DIRECT_REGRESSION,
    METHOD_OURS, METHOD_RANDOM,
};
use gesture_core::formats::GftFile;
use gesture_core::model::{load_checkpoint, save_checkpoint, ModelBundle, TEMPORAL_FACTOR};
use gesture_core::training::{train_sync_classifier, write_metrics_csv};
use gesture_core::{Error, Result};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

fn read_features(path: &Path, config: &RunConfig) -> Result<AudioFeatureSequence> {
    let is_wav = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"));
    if is_wav {
        extract_features(&normalize_signal(&read_wav(path)?)?, &config.mfcc)
    } else {
        AudioFeatureSequence::read(path)
    }
}

pub fn extract(config: &RunConfig, input: &Path, output: &Path) -> Result<()> {
    extract_features(&normalize_signal(&read_wav(input)?)?, &config.mfcc)?.write(output)
}

/// Splits every sequence into confident segments, fills short gaps and
/// writes the result as a new corpus.
pub fn preprocess(config: &RunConfig, manifest: &Path, out_dir: &Path) -> Result<()> {
    let p = &config.preprocess;
    let mut out = Vec::new();
    for seq in load_sequences(manifest, &config.mfcc)? {
        let segments = confidence_segments(
            seq.gestures.confidence(),
            p.confidence_threshold,
            p.confidence_window,
            MIN_SEGMENT_FRAMES,
        )?;
        for (k, r) in segments.into_iter().enumerate() {
            out.push(LabeledSequence {
                id: format!("{}_{k:03}", seq.id),
                subject_id: seq.subject_id.clone(),
                features: seq.features.slice(r.start, r.len())?,
                gestures: fill_gaps_cubic(&seq.gestures.slice(r.start, r.len())?, p.max_gap),
            });
        }
    }
    if out.is_empty() {
        return Err(Error::Contract("no segment passed the confidence filter".into()));
    }
    write_corpus(out_dir, &out)?;
    Ok(())
}

fn subject_sequences(
    config: &RunConfig,
    manifest: &Path,
    default: Option<&str>,
) -> Result<(String, Vec<LabeledSequence>)> {
    let all = load_sequences(manifest, &config.mfcc)?;
    let subject = match config.subject.as_deref().or(default) {
        Some(s) => s.to_string(),
        None => {
            let mut subjects: Vec<&str> = all.iter().map(|s| s.subject_id.as_str()).collect();
            subjects.sort_unstable();
            subjects.dedup();
            match subjects[..] {
                [one] => one.to_string(),
                _ => {
                    return Err(Error::Config(format!(
                        "manifest holds subjects {subjects:?}; choose one with --subject"
                    )))
                }
            }
        }
    };
    let seqs: Vec<LabeledSequence> = all.into_iter().filter(|s| s.subject_id == subject).collect();
    if seqs.is_empty() {
        return Err(Error::Contract(format!("no sequences for subject {subject}")));
    }
    Ok((subject, seqs))
}

pub fn train(config: &RunConfig, output: &Path) -> Result<()> {
    let manifest = config.manifest.as_deref().ok_or_else(|| Error::Config("configuration names no manifest".into()))?;
    if config.train.adversarial && config.discriminator.window_length != WINDOW_LEN {
        return Err(Error::Config(format!(
            "adversarial training uses {WINDOW_LEN}-frame windows, discriminator expects {}",
            config.discriminator.window_length
        )));
    }
    let (subject, seqs) = subject_sequences(config, manifest, None)?;
    let mut windows = Vec::new();
    for s in &seqs {
        windows.extend(make_training_windows(&s.features, &s.gestures, config.overlap, &subject)?);
    }
    let mut model = ModelBundle::new(config.generator, config.discriminator, subject, config.seed)?;
    let log = gesture_core::training::train(&mut model, &windows, &config.weights, &config.train, Some(output))?;
    if config.train.max_iterations == 0 {
        save_checkpoint(&model, output)?;
    }
    if let Some(path) = &config.metrics {
        write_metrics_csv(path, &log.metrics)?;
    }
    if let (Some(first), Some(last)) = (log.first(), log.last()) {
        println!(
            "{} windows, {} iterations, l_reg {:.4} -> {:.4}",
            windows.len(),
            last.iteration,
            first.l_reg,
            last.l_reg
        );
    }
    Ok(())
}

pub fn synthesize(config: &RunConfig, model: &Path, input: &Path, out_dir: &Path) -> Result<()> {
    let mut model = load_checkpoint(model)?;
    let features = read_features(input, config)?;
    if features.len() < TEMPORAL_FACTOR {
        return Err(Error::TooShort(format!("{} feature frames, need at least {TEMPORAL_FACTOR}", features.len())));
    }
    let t = features.len();
    let streams = model.generator.predict(&features)?;
    create_dir(out_dir)?;
    for (s, rows) in Stream::ALL.into_iter().zip(streams) {
        let rows = if s == Stream::Face {
            rows
        } else {
            let channels: Vec<Vec<f64>> =
                to_channel_major(&rows, t, s.dims()).chunks_exact(t).map(|c| c.to_vec()).collect();
            let smoothed: Vec<f64> = gaussian_smooth(&channels, config.smoothing_sigma)?.concat();
            to_frame_major(&smoothed, t, s.dims())
        };
        let frames: Vec<&[f64]> = rows.chunks_exact(s.dims()).collect();
        GftFile::from_rows(s.dims(), FRAME_RATE as f32, &frames)?.write(out_dir.join(format!("{}.gft", s.name())))?;
    }
    Ok(())
}

fn face_pairs(model: &mut ModelBundle, seqs: &[LabeledSequence]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut pred, mut gt) = (Vec::new(), Vec::new());
    for s in seqs {
        if s.features.len() < TEMPORAL_FACTOR {
            continue;
        }
        let [face, _, _] = model.generator.predict(&s.features)?;
        for (t, row) in face.chunks_exact(Stream::Face.dims()).enumerate() {
            if !s.gestures.is_missing(Stream::Face, t) {
                pred.extend_from_slice(row);
                gt.extend_from_slice(s.gestures.row(Stream::Face, t));
            }
        }
    }
    if pred.is_empty() {
        return Err(Error::Contract("no observed face frames to evaluate".into()));
    }
    Ok((pred, gt))
}

pub fn evaluate(config: &RunConfig, model_path: &Path, manifest: &Path, report: &Path) -> Result<()> {
    let mut model = load_checkpoint(model_path)?;
    let (subject, seqs) = subject_sequences(config, manifest, Some(&model.subject_id.clone()))?;
    let basis = match &config.evaluation.lip_basis {
        Some(path) => LipBlendshapeBasis::load(path)?,
        None => LipBlendshapeBasis::synthetic(config.seed, config.evaluation.lip_vertices)?,
    };
    let adversarial = model.discriminator.store.params().iter().any(|p| p.step_count > 0);
    let method = if adversarial { METHOD_OURS } else { METHOD_DIRECT_REGRESSION };
    let (pred, gt) = face_pairs(&mut model, &seqs)?;

    let mut entry = SubjectReport { subject, ..SubjectReport::default() };
    entry.lip_error_mm.insert(method.to_string(), lip_error(&pred, &gt, &basis)?);
    let gestures: Vec<_> = seqs.iter().map(|s| s.gestures.clone()).collect();
    entry.lip_error_mm.insert(METHOD_RANDOM.to_string(), random_baseline(&gestures, &basis, config.seed)?);

    let corpus: Vec<_> = seqs.into_iter().map(|s| (s.features, s.gestures)).collect();
    for &l in &config.evaluation.sync_window_lengths {
        let outcome = train_sync_classifier(&corpus, l, &config.sync)?;
        entry.sync.insert(format!("{l} frames"), outcome.accuracy);
    }
    EvaluationReport::new(vec![entry]).write(report)
}

/// Scores windows at a quarter-window stride, the last one flush with the
/// end, and averages the probabilities.
pub fn sync_score(model: &Path, features: &Path, body: &Path, hand: &Path) -> Result<f64> {
    let mut model = load_checkpoint(model)?;
    let features = AudioFeatureSequence::read(features)?;
    let body = GftFile::read_expecting(body, Stream::Body.dims())?;
    let hand = GftFile::read_expecting(hand, Stream::Hand.dims())?;
    let t = features.len();
    if body.frame_count() != t || hand.frame_count() != t {
        return Err(Error::Alignment(format!(
            "{t} feature frames, {} body frames, {} hand frames",
            body.frame_count(),
            hand.frame_count()
        )));
    }
    let l = model.discriminator.config().window_length;
    if t < l {
        return Err(Error::TooShort(format!("{t} frames, the classifier needs {l}")));
    }
    let mut starts: Vec<usize> = (0..=t - l).step_by((l / 4).max(1)).collect();
    if starts.last() != Some(&(t - l)) {
        starts.push(t - l);
    }
    let feature_rows: Vec<f64> = features.rows().iter().flatten().copied().collect();
    let body_rows: Vec<f64> = (0..t).flat_map(|i| body.row(i).iter().map(|&v| v as f64)).collect();
    let hand_rows: Vec<f64> = (0..t).flat_map(|i| hand.row(i).iter().map(|&v| v as f64)).collect();
    let stack = |rows: &[f64], dims: usize| -> Result<Tensor> {
        let mut data = Vec::with_capacity(starts.len() * dims * l);
        for &s in &starts {
            data.extend(to_channel_major(&rows[s * dims..(s + l) * dims], l, dims));
        }
        Ok(Tensor::new(vec![starts.len(), dims, l], data)?)
    };
    let mut g = Graph::new();
    let f = g.constant(stack(&feature_rows, FEATURE_DIMS)?);
    let b = g.constant(stack(&body_rows, Stream::Body.dims())?);
    let h = g.constant(stack(&hand_rows, Stream::Hand.dims())?);
    let p = model.discriminator.forward(&mut g, f, b, h, Mode::Eval)?;
    let probs = g.value(p).data();
    Ok(probs.iter().sum::<f64>() / probs.len() as f64)
}

pub fn generate_corpus(config: &RunConfig, out_dir: &Path, sequences: usize, length: usize) -> Result<()> {
    let subject = config.subject.clone().unwrap_or_else(|| "synthetic".to_string());
    let seqs: Vec<LabeledSequence> = generate_synthetic_corpus(config.seed, sequences, length)?
        .into_iter()
        .enumerate()
        .map(|(i, (features, gestures))| LabeledSequence {
            id: format!("seq{i:03}"),
            subject_id: subject.clone(),
            features,
            gestures,
        })
        .collect();
    write_corpus(out_dir, &seqs)?;
    Ok(())
}
