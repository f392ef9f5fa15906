//! Matrix square roots `R Rᵀ = Σ` by Cholesky, symmetric eigen and SVD.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::types::{FactorizationMethod, ScaleMatrix, PD_TOLERANCE};

/// Jacobi stops once every off-diagonal entry is below this fraction of the
/// Frobenius norm.
const JACOBI_TOLERANCE: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// A square root `R` of `Σ`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFactor {
    dim: usize,
    entries: Vec<f64>,
    method: FactorizationMethod,
}

impl MatrixFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn method(&self) -> FactorizationMethod {
        self.method
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Writes `R z` into `out`.
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        let k = self.dim;
        let lower = self.method == FactorizationMethod::Cholesky;
        for i in 0..k {
            let end = if lower { i + 1 } else { k };
            out[i] = self.entries[i * k..i * k + end]
                .iter()
                .zip(z)
                .map(|(r, z)| r * z)
                .sum();
        }
    }

    /// `R Rᵀ`, row-major.
    pub fn reconstruct(&self) -> Vec<f64> {
        let k = self.dim;
        let mut out = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                out[i * k + j] = (0..k).map(|m| self.get(i, m) * self.get(j, m)).sum();
            }
        }
        out
    }
}

/// Lower Cholesky factor of a row-major symmetric matrix. Fails when a
/// pivot is not above `PD_TOLERANCE` times the largest diagonal entry.
pub(crate) fn cholesky_lower_raw(dim: usize, a: &[f64]) -> Result<Vec<f64>> {
    let max_diag = (0..dim).map(|i| a[i * dim + i]).fold(0.0_f64, f64::max);
    let threshold = PD_TOLERANCE * max_diag;
    let mut l = vec![0.0; dim * dim];
    for j in 0..dim {
        let mut d = a[j * dim + j];
        for m in 0..j {
            d -= l[j * dim + m] * l[j * dim + m];
        }
        if !(d > threshold) || !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = sqrt(d);
        l[j * dim + j] = ljj;
        for i in (j + 1)..dim {
            let mut s = a[i * dim + j];
            for m in 0..j {
                s -= l[i * dim + m] * l[j * dim + m];
            }
            l[i * dim + j] = s / ljj;
        }
    }
    Ok(l)
}

/// Lower-triangular `L` with `L Lᵀ = Σ` and a strictly positive diagonal.
pub fn cholesky_lower(sigma: &ScaleMatrix) -> MatrixFactor {
    MatrixFactor {
        dim: sigma.dim(),
        entries: sigma.cholesky().to_vec(),
        method: FactorizationMethod::Cholesky,
    }
}

/// Square root of `Σ` by the requested method.
///
/// `Eigen` returns `V diag(√λ)`; `Svd` returns `U diag(√s)`, which for a
/// symmetric positive-definite matrix is computed through the same
/// symmetric eigensolver.
pub fn matrix_sqrt(sigma: &ScaleMatrix, method: FactorizationMethod) -> Result<MatrixFactor> {
    match method {
        FactorizationMethod::Cholesky => Ok(cholesky_lower(sigma)),
        FactorizationMethod::Eigen | FactorizationMethod::Svd => {
            let k = sigma.dim();
            let (values, vectors) = symmetric_eigen(k, sigma.entries());
            let max_diag = (0..k).map(|i| sigma.get(i, i)).fold(0.0_f64, f64::max);
            if let Some(pivot) = values.iter().position(|&v| !(v > PD_TOLERANCE * max_diag)) {
                return Err(Error::NotPositiveDefinite { pivot });
            }
            let mut entries = vectors;
            for (j, &v) in values.iter().enumerate() {
                let root = sqrt(v);
                for i in 0..k {
                    entries[i * k + j] *= root;
                }
            }
            Ok(MatrixFactor {
                dim: k,
                entries,
                method,
            })
        }
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric row-major matrix.
///
/// Returns eigenvalues in descending order and the row-major matrix whose
/// columns are the matching unit eigenvectors. Ties are ordered by the
/// position of each vector's largest component, and every vector is signed
/// so that component is positive.
pub fn symmetric_eigen(dim: usize, matrix: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = dim;
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; k * k];
    for i in 0..k {
        v[i * k + i] = 1.0;
    }
    let frob = sqrt(a.iter().map(|x| x * x).sum::<f64>());
    let threshold = JACOBI_TOLERANCE * frob;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let max_off = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * k + j].abs())
            .fold(0.0_f64, f64::max);
        if max_off < threshold || max_off == 0.0 {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let apq = a[p * k + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * k + q] - a[p * k + p]) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + sqrt(theta * theta + 1.0));
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for m in 0..k {
                    let amp = a[m * k + p];
                    let amq = a[m * k + q];
                    a[m * k + p] = c * amp - s * amq;
                    a[m * k + q] = s * amp + c * amq;
                }
                for m in 0..k {
                    let apm = a[p * k + m];
                    let aqm = a[q * k + m];
                    a[p * k + m] = c * apm - s * aqm;
                    a[q * k + m] = s * apm + c * aqm;
                }
                a[p * k + q] = 0.0;
                a[q * k + p] = 0.0;
                for m in 0..k {
                    let vmp = v[m * k + p];
                    let vmq = v[m * k + q];
                    v[m * k + p] = c * vmp - s * vmq;
                    v[m * k + q] = s * vmp + c * vmq;
                }
            }
        }
    }

    let lead = |j: usize| -> usize {
        let mut best = 0;
        for i in 1..k {
            if v[i * k + j].abs() > v[best * k + j].abs() {
                best = i;
            }
        }
        best
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| {
        a[y * k + y]
            .total_cmp(&a[x * k + x])
            .then_with(|| lead(x).cmp(&lead(y)))
    });

    let mut values = Vec::with_capacity(k);
    let mut vectors = vec![0.0; k * k];
    for (dst, &src) in order.iter().enumerate() {
        values.push(a[src * k + src]);
        let sign = if v[lead(src) * k + src] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..k {
            vectors[i * k + dst] = sign * v[i * k + src];
        }
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_cholesky() {
        let f = cholesky_lower(&ScaleMatrix::identity(2).unwrap());
        assert_eq!(f.entries(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn correlated_cholesky() {
        let s = ScaleMatrix::new(2, vec![1.0, 0.5, 0.5, 1.0]).unwrap();
        let f = cholesky_lower(&s);
        assert_eq!(f.get(0, 0), 1.0);
        assert_eq!(f.get(0, 1), 0.0);
        assert_eq!(f.get(1, 0), 0.5);
        assert!((f.get(1, 1) - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((f.get(1, 1) - 0.866_025).abs() < 1e-6);
        assert!(max_abs_diff(&f.reconstruct(), s.entries()) < 1e-15);
    }

    #[test]
    fn diagonal_cholesky() {
        let s = ScaleMatrix::new(2, vec![4.0, 0.0, 0.0, 9.0]).unwrap();
        assert_eq!(cholesky_lower(&s).entries(), &[2.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn eigen_and_svd_reconstruct() {
        let id = ScaleMatrix::identity(3).unwrap();
        let f = matrix_sqrt(&id, FactorizationMethod::Eigen).unwrap();
        assert!(max_abs_diff(&f.reconstruct(), id.entries()) < 1e-15);

        let s = ScaleMatrix::new(2, vec![1.0, 0.5, 0.5, 1.0]).unwrap();
        for method in [FactorizationMethod::Eigen, FactorizationMethod::Svd] {
            let f = matrix_sqrt(&s, method).unwrap();
            assert_eq!(f.method(), method);
            assert!(max_abs_diff(&f.reconstruct(), s.entries()) < 1e-10);
        }
    }

    #[test]
    fn eigenvalues_descending_and_deterministic() {
        let s = ScaleMatrix::new(2, vec![1.0, 0.5, 0.5, 1.0]).unwrap();
        let (values, vectors) = symmetric_eigen(2, s.entries());
        assert!((values[0] - 1.5).abs() < 1e-14);
        assert!((values[1] - 0.5).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // (1, 1)/√2 and (1, -1)/√2 with the leading component positive
        assert!(max_abs_diff(&vectors, &[r, r, r, -r]) < 1e-14);
        // tied eigenvalues keep the identity ordering
        let (values, vectors) = symmetric_eigen(3, ScaleMatrix::identity(3).unwrap().entries());
        assert_eq!(values, vec![1.0, 1.0, 1.0]);
        assert_eq!(vectors, ScaleMatrix::identity(3).unwrap().entries());
    }

    fn spd_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
        (1usize..7).prop_flat_map(|k| {
            (
                Just(k),
                proptest::collection::vec(-2.0f64..2.0, k * k),
                0.01f64..1.0,
            )
                .prop_map(|(k, a, eps)| {
                    let mut s = vec![0.0; k * k];
                    for i in 0..k {
                        for j in 0..k {
                            s[i * k + j] = (0..k).map(|m| a[i * k + m] * a[j * k + m]).sum();
                        }
                        s[i * k + i] += eps;
                    }
                    (k, s)
                })
        })
    }

    proptest! {
        #[test]
        fn reconstruction_within_tolerance((k, entries) in spd_strategy()) {
            let sigma = ScaleMatrix::new(k, entries.clone()).unwrap();
            let scale = entries.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for method in [FactorizationMethod::Cholesky, FactorizationMethod::Eigen, FactorizationMethod::Svd] {
                let f = matrix_sqrt(&sigma, method).unwrap();
                prop_assert!(max_abs_diff(&f.reconstruct(), &entries) <= 1e-10 * scale);
            }
            let l = cholesky_lower(&sigma);
            for i in 0..k {
                prop_assert!(l.get(i, i) > 0.0);
                for j in (i + 1)..k {
                    prop_assert_eq!(l.get(i, j), 0.0);
                }
            }
        }
    }
}
