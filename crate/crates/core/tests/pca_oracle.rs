//! PCA against nalgebra's symmetric eigen-solver.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use emoshot::harness::{pca, symmetric_eigen};

fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    // anisotropic so the top eigenvalues are well apart
    (0..n)
        .map(|_| (0..d).map(|j| rng.random_range(-1.0..1.0) * (d - j) as f64).collect())
        .collect()
}

fn covariance(points: &[Vec<f64>]) -> DMatrix<f64> {
    let n = points.len();
    let d = points[0].len();
    let x = DMatrix::from_fn(n, d, |i, j| points[i][j]);
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    centered.transpose() * &centered / n as f64
}

#[test]
fn eigenvalues_match_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..30 {
        let d = rng.random_range(2..=12);
        let pts = random_points(&mut rng, 40, d);
        let cov = covariance(&pts);
        let rows: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| cov[(i, j)]).collect()).collect();
        let (vals, _) = symmetric_eigen(&rows);
        let mut want: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
        want.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in vals.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9 * want[0].max(1.0), "{vals:?} vs {want:?}");
        }
    }
}

#[test]
fn projections_match_nalgebra_up_to_sign() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..30 {
        let d = rng.random_range(2..=10);
        let pts = random_points(&mut rng, 25, d);
        let got = pca(&pts).unwrap();
        let eig = SymmetricEigen::new(covariance(&pts));
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for (c, &col) in order.iter().take(2).enumerate() {
            let v = eig.eigenvectors.column(col);
            let dot: f64 = got.components[c].iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8, "component {c} not aligned: {dot}");
            let sign = dot.signum();
            for (p, coord) in pts.iter().zip(&got.coords) {
                let proj: f64 = p.iter().zip(&got.mean).zip(v.iter()).map(|((x, m), w)| (x - m) * w).sum();
                assert!((coord[c] - sign * proj).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn coordinates_are_centered_and_uncorrelated() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = random_points(&mut rng, 60, 6);
    let got = pca(&pts).unwrap();
    let n = got.coords.len() as f64;
    let m0 = got.coords.iter().map(|c| c[0]).sum::<f64>() / n;
    let m1 = got.coords.iter().map(|c| c[1]).sum::<f64>() / n;
    let cross = got.coords.iter().map(|c| c[0] * c[1]).sum::<f64>() / n;
    let var0 = got.coords.iter().map(|c| c[0] * c[0]).sum::<f64>() / n;
    assert!(m0.abs() < 1e-10 && m1.abs() < 1e-10);
    assert!(cross.abs() < 1e-9);
    assert!((var0 - got.eigenvalues[0]).abs() < 1e-9);
}
