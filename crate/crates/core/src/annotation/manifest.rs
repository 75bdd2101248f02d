use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GestureSequence, Stream};
use crate::audio::{extract_features, normalize_signal, read_wav, AudioFeatureSequence, MfccConfig};
use crate::error::{Error, Result};
use crate::formats::GftFile;

/// One sequence; paths are relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub subject_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<String>,
    pub face: String,
    pub body: String,
    pub hand: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub sequences: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if m.sequences.is_empty() {
            return Err(Error::format(path, "manifest lists no sequences"));
        }
        Ok(m)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn subjects(&self) -> Vec<String> {
        let mut s: Vec<String> = self.sequences.iter().map(|e| e.subject_id.clone()).collect();
        s.sort();
        s.dedup();
        s
    }
}

#[derive(Clone, Debug)]
pub struct LabeledSequence {
    pub id: String,
    pub subject_id: String,
    pub features: AudioFeatureSequence,
    pub gestures: GestureSequence,
}

fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Loads every sequence of a manifest. Features come from a precomputed GFT
/// file when listed, otherwise they are extracted from the WAV file.
pub fn load_sequences(manifest_path: impl AsRef<Path>, mfcc: &MfccConfig) -> Result<Vec<LabeledSequence>> {
    let manifest_path = manifest_path.as_ref();
    let manifest = Manifest::read(manifest_path)?;
    let dir = base_dir(manifest_path);
    manifest
        .sequences
        .iter()
        .map(|e| {
            let features = match (&e.features, &e.audio) {
                (Some(f), _) => AudioFeatureSequence::read(dir.join(f))?,
                (None, Some(a)) => extract_features(&normalize_signal(&read_wav(dir.join(a))?)?, mfcc)?,
                (None, None) => {
                    return Err(Error::format(
                        manifest_path,
                        format!("sequence {} has neither features nor audio", e.id),
                    ))
                }
            };
            let face_path = dir.join(&e.face);
            let face = GftFile::read(&face_path)?;
            let body = GftFile::read(dir.join(&e.body))?;
            let hand = GftFile::read(dir.join(&e.hand))?;
            let conf = e.confidence.as_ref().map(|c| GftFile::read(dir.join(c))).transpose()?;
            let gestures = GestureSequence::from_gft(&face, &body, &hand, conf.as_ref(), &face_path)?;
            if features.len() != gestures.len() {
                return Err(Error::Alignment(format!(
                    "sequence {}: {} feature frames vs {} gesture frames",
                    e.id,
                    features.len(),
                    gestures.len()
                )));
            }
            Ok(LabeledSequence { id: e.id.clone(), subject_id: e.subject_id.clone(), features, gestures })
        })
        .collect()
}

/// Writes each sequence as GFT files plus `manifest.json` into `dir`, returning
/// the manifest path.
pub fn write_corpus(dir: impl AsRef<Path>, sequences: &[LabeledSequence]) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest::default();
    for s in sequences {
        let name = |kind: &str| format!("{}.{kind}.gft", s.id);
        s.features.write(dir.join(name("features")))?;
        for st in Stream::ALL {
            s.gestures.stream_gft(st).write(dir.join(name(st.name())))?;
        }
        s.gestures.confidence_gft().write(dir.join(name("confidence")))?;
        manifest.sequences.push(ManifestEntry {
            id: s.id.clone(),
            subject_id: s.subject_id.clone(),
            features: Some(name("features")),
            audio: None,
            face: name("face"),
            body: name("body"),
            hand: name("hand"),
            confidence: Some(name("confidence")),
        });
    }
    let path = dir.join("manifest.json");
    manifest.write(&path)?;
    Ok(path)
}
