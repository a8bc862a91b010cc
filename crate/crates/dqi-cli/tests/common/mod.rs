#![allow(clippy::needless_range_loop)]

//! Shared acceptance-test support: an independent dense symmetric
//! eigensolver (cyclic Jacobi rotations) used as the oracle for the
//! tridiagonal solver, plus a deterministic instance sampler.

use dqi_core::spectral::TridiagonalMatrix;

/// Cyclic Jacobi eigendecomposition of a dense symmetric matrix.
/// Returns eigenvalues (ascending) and matching eigenvectors (rows of the
/// returned matrix, normalized). Independent of the tridiagonal solver:
/// no Sturm counts, no recurrences.
pub fn jacobi_eigen(a_in: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a_in.len();
    let mut a: Vec<Vec<f64>> = a_in.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let frob: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(1.0);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off.sqrt() <= 1e-14 * frob {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p][j];
                    let aqj = a[q][j];
                    a[p][j] = c * apj - s * aqj;
                    a[q][j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i][p];
                    let viq = v[i][q];
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| {
            let mut vec: Vec<f64> = (0..n).map(|row| v[row][col]).collect();
            let norm: f64 = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in vec.iter_mut() {
                *x /= norm;
            }
            vec
        })
        .collect();
    (eigenvalues, eigenvectors)
}

/// Densify a tridiagonal matrix for the oracle.
pub fn densify(matrix: &TridiagonalMatrix) -> Vec<Vec<f64>> {
    let n = matrix.dim();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = matrix.diag()[i];
        if i + 1 < n {
            a[i][i + 1] = matrix.offdiag()[i];
            a[i + 1][i] = matrix.offdiag()[i];
        }
    }
    a
}

/// Largest eigenvalue and its |eigenvector| from the oracle.
pub fn oracle_top_pair(matrix: &TridiagonalMatrix) -> (f64, Vec<f64>, f64) {
    let (vals, vecs) = jacobi_eigen(&densify(matrix));
    let n = vals.len();
    let gap = if n > 1 {
        vals[n - 1] - vals[n - 2]
    } else {
        f64::INFINITY
    };
    let w_abs: Vec<f64> = vecs[n - 1].iter().map(|x| x.abs()).collect();
    (vals[n - 1], w_abs, gap)
}

/// Small multiplicative congruential generator for reproducible random
/// instances.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_add(0x9E37_79B9_7F4A_7C15))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        self.0
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform integer in [lo, hi].
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }
}

/// Deterministic random instances with dim ≤ 50: m ≤ 200, q ∈ {2,3,5},
/// d ∈ [−2, 2].
pub fn random_instances(count: usize, seed: u64) -> Vec<dqi_core::DqiParams> {
    let mut rng = Lcg::new(seed);
    let qs = [2u32, 3, 5];
    (0..count)
        .map(|_| {
            let m = rng.range(2, 200);
            let ell = rng.range(1, m.min(49));
            let q = qs[rng.range(0, 2)];
            let d = -2.0 + 4.0 * rng.uniform();
            dqi_core::DqiParams::new(m, ell, q, d).expect("sampled instance is valid")
        })
        .collect()
}
