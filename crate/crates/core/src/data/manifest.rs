//! WAV manifests: one `path,speaker,emotion,domain` line per utterance.
//! Relative paths resolve against the manifest's directory; `#` starts a comment.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{Dataset, Domain, Emotion, FeatureVector};
use crate::error::{Error, Result};
use crate::features::{extract_features, read_wav, FrameConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub utterance_id: String,
    pub speaker_id: String,
    pub emotion: Emotion,
    pub domain: Domain,
}

pub fn parse_manifest(path: &Path, text: &str) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                i + 1,
                "expected `wav_path,speaker,emotion,domain`",
            ));
        }
        let wav = Path::new(fields[0]);
        let wav = if wav.is_absolute() {
            wav.to_owned()
        } else {
            base.join(wav)
        };
        let utterance_id = wav
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| Error::parse(path, i + 1, "wav path has no file name"))?;
        if !seen.insert(utterance_id.clone()) {
            return Err(Error::Schema(format!(
                "{}:{}: duplicate utterance id `{utterance_id}`",
                path.display(),
                i + 1
            )));
        }
        let emotion = fields[2]
            .parse()
            .map_err(|e: Error| Error::Schema(format!("{}:{}: {e}", path.display(), i + 1)))?;
        let domain = fields[3]
            .parse()
            .map_err(|e: Error| Error::Schema(format!("{}:{}: {e}", path.display(), i + 1)))?;
        entries.push(ManifestEntry {
            path: wav,
            utterance_id,
            speaker_id: fields[1].to_owned(),
            emotion,
            domain,
        });
    }
    Ok(entries)
}

/// Extracts the raw (unstandardized) 64-dim descriptor for every entry.
pub fn extract_manifest(name: &str, entries: &[ManifestEntry], config: &FrameConfig) -> Result<Dataset> {
    let vectors = entries
        .par_iter()
        .map(|e| {
            let clip = read_wav(&e.path)?;
            Ok(FeatureVector {
                utterance_id: e.utterance_id.clone(),
                speaker_id: e.speaker_id.clone(),
                emotion: e.emotion,
                domain: e.domain,
                values: extract_features(&clip, config)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let role = entries.first().map_or(Domain::Target, |e| e.domain);
    Dataset::new(name, role, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_relative_paths() {
        let m = parse_manifest(
            Path::new("/data/list.txt"),
            "# header\na/u1.wav, spk1, anger, target\n/abs/u2.wav,spk2,sadness,source\n",
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].path, PathBuf::from("/data/a/u1.wav"));
        assert_eq!(m[0].utterance_id, "u1");
        assert_eq!(m[1].path, PathBuf::from("/abs/u2.wav"));
        assert_eq!(m[1].domain, Domain::Source);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse_manifest(Path::new("m"), "u.wav,spk,anger\n").is_err());
        assert!(parse_manifest(Path::new("m"), "u.wav,spk,joy,target\n").is_err());
        assert!(parse_manifest(Path::new("m"), "u.wav,a,anger,target\nx/u.wav,b,anger,target\n").is_err());
    }
}
