//! Feature CSV: `utterance_id,speaker_id,emotion,domain,f0,...,f{d-1}`.

use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, Domain, Emotion, FeatureVector};
use crate::error::{Error, Result};

const META_COLUMNS: [&str; 4] = ["utterance_id", "speaker_id", "emotion", "domain"];

fn header(dim: usize) -> Vec<String> {
    META_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((0..dim).map(|i| format!("f{i}")))
        .collect()
}

/// Loads a feature CSV; the dataset name is the file stem.
pub fn load_feature_csv(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    read_feature_csv(path, &name, file)
}

pub fn read_feature_csv<R: Read>(path: &Path, name: &str, reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let head = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    let n_features = head.len().saturating_sub(META_COLUMNS.len());
    let expected = header(n_features);
    if n_features == 0 || head.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::parse(
            path,
            1,
            format!(
                "header must be `{},f0..f<d-1>`",
                META_COLUMNS.join(",")
            ),
        ));
    }

    let mut vectors = Vec::new();
    let mut role: Option<Domain> = None;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != expected.len() {
            return Err(Error::parse(
                path,
                line,
                format!(
                    "expected {} feature columns, found {}",
                    n_features,
                    record.len().saturating_sub(META_COLUMNS.len())
                ),
            ));
        }
        let emotion: Emotion = record[2]
            .parse()
            .map_err(|e: Error| Error::Schema(format!("{}:{line}: {e}", path.display())))?;
        let domain: Domain = record[3]
            .parse()
            .map_err(|e: Error| Error::Schema(format!("{}:{line}: {e}", path.display())))?;
        match role {
            None => role = Some(domain),
            Some(r) if r != domain => {
                return Err(Error::Schema(format!(
                    "{}:{line}: mixed domains in one dataset",
                    path.display()
                )))
            }
            _ => {}
        }
        let values = record
            .iter()
            .skip(META_COLUMNS.len())
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(path, line, format!("bad feature value: {e}")))?;
        vectors.push(FeatureVector {
            utterance_id: record[0].to_owned(),
            speaker_id: record[1].to_owned(),
            emotion,
            domain,
            values,
        });
    }
    Dataset::new(name, role.unwrap_or(Domain::Target), vectors)
}

pub fn write_feature_csv<W: Write>(writer: W, dataset: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::Export(e.to_string());
    w.write_record(header(dataset.dim())).map_err(io_err)?;
    for v in &dataset.vectors {
        let mut row = vec![
            v.utterance_id.clone(),
            v.speaker_id.clone(),
            v.emotion.to_string(),
            v.domain.to_string(),
        ];
        row.extend(v.values.iter().map(|x| format!("{x:?}")));
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Export(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        read_feature_csv(Path::new("mem.csv"), "mem", text.as_bytes())
    }

    fn header_line(dim: usize) -> String {
        header(dim).join(",")
    }

    #[test]
    fn reads_valid_rows() {
        let text = format!(
            "{}\nu1,s1,anger,target,1,2\nu2,s1,sadness,target,3,4\nu3,s2,happiness,target,5,6\n",
            header_line(2)
        );
        let ds = parse(&text).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.vectors[2].emotion, Emotion::Happiness);
        assert_eq!(ds.role, Domain::Target);
    }

    #[test]
    fn short_row_names_its_line() {
        let mut row = String::from("u1,s1,anger,source");
        for i in 0..63 {
            row.push_str(&format!(",{i}"));
        }
        let good: String = (0..64).map(|i| format!(",{i}")).collect();
        let text = format!("{}\nu0,s1,anger,source{good}\n{row}\n", header_line(64));
        match parse(&text) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("63"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_emotion_is_schema_error() {
        let text = format!("{}\nu1,s1,fear,target,1\n", header_line(1));
        assert_eq!(parse(&text).unwrap_err().category(), "schema");
    }

    #[test]
    fn bad_header() {
        assert_eq!(parse("id,spk,emo,dom,f0\n").unwrap_err().category(), "parse");
    }

    #[test]
    fn round_trip() {
        let text = format!(
            "{}\nu1,s1,anger,source,0.1,-2.5e-7\nu2,s2,happiness,source,3.3333333333333335,4\n",
            header_line(2)
        );
        let ds = parse(&text).unwrap();
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &ds).unwrap();
        let back = read_feature_csv(Path::new("mem.csv"), "mem", buf.as_slice()).unwrap();
        assert_eq!(ds, back);
    }
}
