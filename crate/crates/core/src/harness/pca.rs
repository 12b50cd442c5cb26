use std::io::Write;

use crate::data::Emotion;
use crate::error::{Error, Result};

/// Top-2 principal projection of a point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Eigenvalues of the covariance, descending.
    pub eigenvalues: Vec<f64>,
    pub components: [Vec<f64>; 2],
    pub coords: Vec<[f64; 2]>,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (descending) and the matching unit eigenvectors.
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    (values, vectors)
}

/// Mean-centers `points`, then projects onto the two leading eigenvectors of
/// the (population) covariance. Each component is flipped so that its
/// largest-magnitude loading is positive.
pub fn pca(points: &[Vec<f64>]) -> Result<Pca> {
    if points.len() < 2 {
        return Err(Error::Export(format!("PCA needs at least 2 samples, got {}", points.len())));
    }
    let d = points[0].len();
    if d < 2 || points.iter().any(|p| p.len() != d) {
        return Err(Error::Export("PCA needs points of one dimension >= 2".into()));
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x / n;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for p in points {
        for i in 0..d {
            let di = p[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (p[j] - mean[j]) / n;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[i][j] = cov[j][i];
        }
    }
    let (eigenvalues, vectors) = symmetric_eigen(&cov);
    let orient = |mut v: Vec<f64>| {
        let lead = v.iter().copied().fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    let components = [orient(vectors[0].clone()), orient(vectors[1].clone())];
    let coords = points
        .iter()
        .map(|p| {
            let proj = |c: &Vec<f64>| p.iter().zip(&mean).zip(c).map(|((x, m), w)| (x - m) * w).sum();
            [proj(&components[0]), proj(&components[1])]
        })
        .collect();
    Ok(Pca {
        mean,
        eigenvalues,
        components,
        coords,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaRow {
    pub utterance_id: String,
    pub emotion: Emotion,
    pub pc: [f64; 2],
}

/// PCA of per-sample activations; `rows` carries (id, emotion, activation).
pub fn pca_export(rows: &[(String, Emotion, Vec<f64>)]) -> Result<Vec<PcaRow>> {
    let points: Vec<Vec<f64>> = rows.iter().map(|r| r.2.clone()).collect();
    let p = pca(&points)?;
    Ok(rows
        .iter()
        .zip(p.coords)
        .map(|((id, e, _), pc)| PcaRow {
            utterance_id: id.clone(),
            emotion: *e,
            pc,
        })
        .collect())
}

/// Columns `utterance_id,emotion,pc1,pc2`.
pub fn write_pca_csv<W: Write>(out: W, rows: &[PcaRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Export(e.to_string());
    w.write_record(["utterance_id", "emotion", "pc1", "pc2"]).map_err(err)?;
    for r in rows {
        w.write_record([
            r.utterance_id.clone(),
            r.emotion.to_string(),
            format!("{:?}", r.pc[0]),
            format!("{:?}", r.pc[1]),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Export(e.to_string()))
}
