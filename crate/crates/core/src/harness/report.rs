//! Report directories.
//!
//! `run` writes `trials.csv` (one row per trial with its confusion counts),
//! `summary.csv`, and optional `pca__<method>__<source>__k<k>.csv` and
//! `pi__<source>__k<k>.csv` files. `report` re-reads a directory and derives
//! plot-ready tables from it.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::metrics::{uar, ConfusionMatrix};
use super::protocol::ExperimentReport;
use super::spec::Method;
use crate::error::{Error, Result};

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

const CONFUSION_COLUMNS: [&str; 9] = [
    "anger_anger",
    "anger_happiness",
    "anger_sadness",
    "happiness_anger",
    "happiness_happiness",
    "happiness_sadness",
    "sadness_anger",
    "sadness_happiness",
    "sadness_sadness",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub method: Method,
    pub source: String,
    pub k: usize,
    pub repetition: usize,
    pub seed: u64,
    pub uar: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub source: String,
    pub k: usize,
    pub repetitions: usize,
    /// Mean of per-repetition UARs.
    pub mean_uar: f64,
    /// Sample standard deviation of per-repetition UARs (0 for one repetition).
    pub std_uar: f64,
    /// UAR of the summed confusion matrix.
    pub pooled_uar: f64,
}

fn export_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Export(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn trial_rows(report: &ExperimentReport) -> Vec<TrialRow> {
    report
        .trials
        .iter()
        .map(|t| TrialRow {
            method: t.method,
            source: t.source.clone(),
            k: t.k,
            repetition: t.repetition,
            seed: t.seed,
            uar: t.uar,
            confusion: t.confusion,
        })
        .collect()
}

/// Groups by (method, source, k) in first-appearance order.
pub fn summarize(rows: &[TrialRow]) -> Result<Vec<SummaryRow>> {
    let mut order: Vec<(Method, String, usize)> = Vec::new();
    let mut groups: BTreeMap<(Method, String, usize), Vec<&TrialRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.method, r.source.clone(), r.k);
        let g = groups.entry(key.clone()).or_default();
        if g.is_empty() {
            order.push(key);
        }
        g.push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let n = g.len() as f64;
            let mean = g.iter().map(|r| r.uar).sum::<f64>() / n;
            let std = if g.len() > 1 {
                (g.iter().map(|r| (r.uar - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let mut pooled = ConfusionMatrix::new();
            for r in g {
                pooled.merge(&r.confusion);
            }
            Ok(SummaryRow {
                method: key.0,
                source: key.1,
                k: key.2,
                repetitions: g.len(),
                mean_uar: mean,
                std_uar: std,
                pooled_uar: uar(&pooled)?,
            })
        })
        .collect()
}

pub fn write_trials<W: Write>(out: W, rows: &[TrialRow], path: &Path) -> Result<()> {
    let err = export_err(path);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["method", "source", "k", "repetition", "seed", "uar"];
    header.extend(CONFUSION_COLUMNS);
    w.write_record(&header).map_err(&err)?;
    for r in rows {
        let mut rec = vec![
            r.method.to_string(),
            r.source.clone(),
            r.k.to_string(),
            r.repetition.to_string(),
            r.seed.to_string(),
            format!("{:?}", r.uar),
        ];
        rec.extend(r.confusion.flat().iter().map(u64::to_string));
        w.write_record(&rec).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow], path: &Path) -> Result<()> {
    let err = export_err(path);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "source", "k", "repetitions", "mean_uar", "std_uar", "pooled_uar"])
        .map_err(&err)?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.source.clone(),
            r.k.to_string(),
            r.repetitions.to_string(),
            format!("{:?}", r.mean_uar),
            format!("{:?}", r.std_uar),
            format!("{:?}", r.pooled_uar),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes every report file into `dir` (created if missing); returns the paths.
pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let rows = trial_rows(report);
    let path = dir.join(TRIALS_FILE);
    write_trials(create(&path)?, &rows, &path)?;
    written.push(path);
    let path = dir.join(SUMMARY_FILE);
    write_summary(create(&path)?, &summarize(&rows)?, &path)?;
    written.push(path);
    for t in &report.trials {
        if let Some(rows) = &t.pca {
            let path = dir.join(format!("pca__{}__{}__k{}.csv", t.method, sanitize(&t.source), t.k));
            super::pca::write_pca_csv(create(&path)?, rows)?;
            written.push(path);
        }
        if let Some(h) = &t.pi_history {
            let path = dir.join(format!("pi__{}__k{}.csv", sanitize(&t.source), t.k));
            h.write_csv(create(&path)?)?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        if rec.len() != 6 + CONFUSION_COLUMNS.len() {
            return Err(Error::parse(path, line, format!("expected 15 columns, found {}", rec.len())));
        }
        let field = |j: usize| rec.get(j).unwrap_or("");
        let num = |j: usize| -> Result<u64> {
            field(j)
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad integer `{}`", field(j))))
        };
        let flat = (6..15).map(num).collect::<Result<Vec<u64>>>()?;
        rows.push(TrialRow {
            method: field(0).parse().map_err(|e: Error| Error::parse(path, line, e.to_string()))?,
            source: field(1).to_string(),
            k: num(2)? as usize,
            repetition: num(3)? as usize,
            seed: num(4)?,
            uar: field(5)
                .parse()
                .map_err(|_| Error::parse(path, line, "bad uar"))?,
            confusion: ConfusionMatrix::from_flat(&flat)?,
        });
    }
    Ok(rows)
}

const PI_BIN_WIDTH: f64 = 0.25;

/// Derives plot-ready tables from a run directory:
/// `table_summary.csv`, `fig_uar_by_k.csv` (wide: one column per method/source),
/// `fig_pi_histogram.csv` (first and last snapshot of every π file) and
/// `fig_pca.csv` (all PCA files stacked).
pub fn build_report(dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = read_trials(&dir.join(TRIALS_FILE))?;
    let summary = summarize(&rows)?;
    let mut written = Vec::new();

    let path = dir.join("table_summary.csv");
    write_summary(create(&path)?, &summary, &path)?;
    written.push(path);

    // wide table; in/out-of-domain baselines (k = 0) repeat on every k row
    let mut columns: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(usize, String), f64> = BTreeMap::new();
    let mut baselines: BTreeMap<String, f64> = BTreeMap::new();
    let mut ks: Vec<usize> = Vec::new();
    for s in &summary {
        let col = format!("{}@{}", s.method, s.source);
        if !columns.contains(&col) {
            columns.push(col.clone());
        }
        if s.k == 0 {
            baselines.insert(col, s.mean_uar);
        } else {
            if !ks.contains(&s.k) {
                ks.push(s.k);
            }
            cells.insert((s.k, col), s.mean_uar);
        }
    }
    ks.sort_unstable();
    if ks.is_empty() {
        ks.push(0);
    }
    let path = dir.join("fig_uar_by_k.csv");
    {
        let err = export_err(&path);
        let mut w = csv::Writer::from_writer(create(&path)?);
        let mut header = vec!["k".to_string()];
        header.extend(columns.iter().cloned());
        w.write_record(&header).map_err(&err)?;
        for &k in &ks {
            let mut rec = vec![k.to_string()];
            for c in &columns {
                let v = cells.get(&(k, c.clone())).or_else(|| baselines.get(c));
                rec.push(v.map(|v| format!("{v:?}")).unwrap_or_default());
            }
            w.write_record(&rec).map_err(&err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    written.push(path);

    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    let name_of = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();

    let path = dir.join("fig_pi_histogram.csv");
    {
        let err = export_err(&path);
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["file", "iteration", "bin_low", "bin_high", "count"]).map_err(&err)?;
        for p in entries.iter().filter(|p| name_of(p).starts_with("pi__")) {
            let mut by_iter: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            let mut r = csv::Reader::from_path(p).map_err(export_err(p))?;
            for rec in r.records() {
                let rec = rec.map_err(export_err(p))?;
                let it: usize = rec.get(0).unwrap_or("").parse().map_err(|_| Error::Export(format!("{}: bad iteration", p.display())))?;
                let pi: f64 = rec.get(2).unwrap_or("").parse().map_err(|_| Error::Export(format!("{}: bad pi", p.display())))?;
                by_iter.entry(it).or_default().push(pi);
            }
            let firsts = by_iter.keys().next().copied();
            let lasts = by_iter.keys().next_back().copied();
            for it in [firsts, lasts].into_iter().flatten().collect::<std::collections::BTreeSet<_>>() {
                let mut bins: BTreeMap<i64, u64> = BTreeMap::new();
                for &v in &by_iter[&it] {
                    *bins.entry(((v - 1.0) / PI_BIN_WIDTH).floor() as i64).or_default() += 1;
                }
                for (b, c) in bins {
                    let lo = 1.0 + b as f64 * PI_BIN_WIDTH;
                    w.write_record([
                        name_of(p),
                        it.to_string(),
                        format!("{lo:?}"),
                        format!("{:?}", lo + PI_BIN_WIDTH),
                        c.to_string(),
                    ])
                    .map_err(&err)?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    written.push(path);

    let path = dir.join("fig_pca.csv");
    {
        let err = export_err(&path);
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["file", "utterance_id", "emotion", "pc1", "pc2"]).map_err(&err)?;
        for p in entries.iter().filter(|p| name_of(p).starts_with("pca__")) {
            let mut r = csv::Reader::from_path(p).map_err(export_err(p))?;
            for rec in r.records() {
                let rec = rec.map_err(export_err(p))?;
                let mut out = vec![name_of(p)];
                out.extend(rec.iter().map(str::to_string));
                w.write_record(&out).map_err(&err)?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Emotion;

    fn row(method: Method, k: usize, rep: usize, correct: u64) -> TrialRow {
        let mut cm = ConfusionMatrix::new();
        for e in Emotion::ALL {
            cm.counts[e.index()][e.index()] = correct;
            cm.counts[e.index()][(e.index() + 1) % 3] = 4 - correct;
        }
        TrialRow {
            method,
            source: "src".into(),
            k,
            repetition: rep,
            seed: 1,
            uar: uar(&cm).unwrap(),
            confusion: cm,
        }
    }

    #[test]
    fn summary_mean_and_pooled() {
        let rows = vec![row(Method::MelS, 2, 0, 4), row(Method::MelS, 2, 1, 2), row(Method::Mel, 2, 0, 1)];
        let s = summarize(&rows).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].method, Method::MelS);
        assert_eq!(s[0].mean_uar, 0.75);
        assert_eq!(s[0].pooled_uar, 0.75);
        assert!((s[0].std_uar - (0.125f64).sqrt()).abs() < 1e-15);
        assert_eq!(s[1].std_uar, 0.0);
    }

    #[test]
    fn trials_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row(Method::FnnFinetune, 3, 0, 3), row(Method::InDomain, 0, 5, 2)];
        let path = dir.path().join(TRIALS_FILE);
        write_trials(File::create(&path).unwrap(), &rows, &path).unwrap();
        assert_eq!(read_trials(&path).unwrap(), rows);
        let out = build_report(dir.path()).unwrap();
        assert_eq!(out.len(), 4);
        let wide = std::fs::read_to_string(dir.path().join("fig_uar_by_k.csv")).unwrap();
        assert_eq!(wide.lines().next().unwrap(), "k,fnn_finetune@src,in_domain@src");
        assert_eq!(wide.lines().nth(1).unwrap(), "3,0.75,0.5");
    }
}
