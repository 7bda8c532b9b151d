//! Dense linear algebra and seeded random streams shared by the rest of the crate.
//!
//! Matrices and vectors are `nalgebra` dynamic types in 64-bit floating point.
//! Random streams are ChaCha8 keyed by a 64-bit seed, which gives the same
//! sequence on every platform. Child streams are derived with a SplitMix64
//! mix of `(parent, tag)` so that parallel jobs never share a generator.

use nalgebra::{DMatrix, DVector};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ElmError, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// The single random generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Generator seeded from a 64-bit value.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Deterministic child seed for job `tag` under `parent` (SplitMix64 finalizer).
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    let mut z = parent
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(tag.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Thin singular value decomposition `a = U diag(s) Vᵀ` with `k = min(rows, cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinSvd {
    /// rows × k, orthonormal columns.
    pub u: Mat,
    /// Length k, non-increasing, non-negative.
    pub singular_values: Vector,
    /// cols × k, orthonormal columns.
    pub v: Mat,
}

impl ThinSvd {
    pub fn reconstruct(&self) -> Mat {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    pub fn rank_ratio(&self) -> f64 {
        let k = self.singular_values.len();
        if k == 0 || self.singular_values[0] == 0.0 {
            return 0.0;
        }
        self.singular_values[k - 1] / self.singular_values[0]
    }
}

/// Thin SVD, computed with `faer`. nalgebra's bidiagonal SVD occasionally
/// returns factors that reconstruct the input only to ~1e-5 when U and V are
/// requested, which is far too loose for the leverages and `z` vectors.
pub fn thin_svd(a: &Mat) -> Result<ThinSvd> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(ElmError::NonFinite("matrix passed to thin_svd"));
    }
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Err(ElmError::Dimension(format!("cannot decompose a {rows}x{cols} matrix")));
    }
    let k = rows.min(cols);
    let svd = faer::MatRef::from_column_major_slice(a.as_slice(), rows, cols)
        .thin_svd()
        .map_err(|_| ElmError::SvdNonConvergence)?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let s = s.column_vector();
    Ok(ThinSvd {
        u: Mat::from_fn(rows, k, |i, j| u[(i, j)]),
        singular_values: Vector::from_fn(k, |j, _| s[j]),
        v: Mat::from_fn(cols, k, |i, j| v[(i, j)]),
    })
}

/// `rows × cols` matrix of i.i.d. uniform draws on `[lo, hi)`, consumed from the
/// stream in row-major order.
pub fn uniform_fill(rng: &mut Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Result<Mat> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(ElmError::InvalidParameter(format!(
            "uniform interval [{lo}, {hi}) is empty or not finite"
        )));
    }
    let dist = Uniform::new(lo, hi)
        .map_err(|e| ElmError::InvalidParameter(format!("uniform interval: {e}")))?;
    let entries: Vec<f64> = (0..rows * cols).map(|_| dist.sample(rng)).collect();
    Ok(Mat::from_row_slice(rows, cols, &entries))
}

/// Solve `a x = b` for symmetric positive definite `a` through a Cholesky factorization.
pub fn solve_spd(a: &Mat, b: &Vector) -> Result<Vector> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(ElmError::Dimension(format!(
            "solve_spd: matrix {}x{}, right-hand side {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                return Err(ElmError::NotPositiveDefinite);
            }
        }
    }
    let chol = a.clone().cholesky().ok_or(ElmError::NotPositiveDefinite)?;
    Ok(chol.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn svd_identity_and_diagonal() {
        let s = thin_svd(&Mat::identity(2, 2)).unwrap();
        assert_relative_eq!(s.singular_values[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.singular_values[1], 1.0, epsilon = 1e-14);

        let d = Mat::from_diagonal(&Vector::from_vec(vec![2.0, 3.0]));
        let s = thin_svd(&d).unwrap();
        assert_relative_eq!(s.singular_values[0], 3.0, epsilon = 1e-14);
        assert_relative_eq!(s.singular_values[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn svd_reconstructs_random_rectangular() {
        let mut rng = rng_from_seed(11);
        for &(r, c) in &[(5, 3), (3, 5), (40, 7), (6, 6)] {
            let a = uniform_fill(&mut rng, r, c, -1.0, 1.0).unwrap();
            let svd = thin_svd(&a).unwrap();
            assert_eq!(svd.singular_values.len(), r.min(c));
            let err = (svd.reconstruct() - &a).norm() / a.norm();
            assert!(err < 1e-10, "{r}x{c}: {err}");
            let k = r.min(c);
            let utu = svd.u.transpose() * &svd.u;
            let vtv = svd.v.transpose() * &svd.v;
            assert!((utu - Mat::identity(k, k)).amax() < 1e-8);
            assert!((vtv - Mat::identity(k, k)).amax() < 1e-8);
            for w in svd.singular_values.as_slice().windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut a = Mat::identity(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(thin_svd(&a), Err(ElmError::NonFinite(_))));
    }

    #[test]
    fn uniform_fill_is_deterministic_and_centered() {
        let a = uniform_fill(&mut rng_from_seed(5), 2, 2, -1.0, 1.0).unwrap();
        let b = uniform_fill(&mut rng_from_seed(5), 2, 2, -1.0, 1.0).unwrap();
        assert_eq!(a, b);

        let big = uniform_fill(&mut rng_from_seed(6), 1, 100_000, -1.0, 1.0).unwrap();
        assert!(big.mean().abs() < 0.02);
        assert!(big.iter().all(|&x| (-1.0..1.0).contains(&x)));
    }

    #[test]
    fn uniform_fill_rejects_empty_interval() {
        assert!(uniform_fill(&mut rng_from_seed(0), 2, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, 0);
        let b = derive_seed(1, 1);
        let c = derive_seed(2, 0);
        assert!(a != b && a != c && b != c);
        assert_eq!(a, derive_seed(1, 0));
    }

    #[test]
    fn spd_identity_and_diagonal() {
        let b = Vector::from_vec(vec![1.0, -2.0, 3.0]);
        let x = solve_spd(&Mat::identity(3, 3), &b).unwrap();
        assert_eq!(x, b);

        let a = Mat::from_diagonal(&Vector::from_vec(vec![2.0, 4.0]));
        let x = solve_spd(&a, &Vector::from_vec(vec![2.0, 4.0])).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn spd_rejects_indefinite() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let b = Vector::from_vec(vec![1.0, 1.0]);
        assert_eq!(solve_spd(&a, &b), Err(ElmError::NotPositiveDefinite));
    }

    #[test]
    fn spd_residual_bound_on_random_instances() {
        let mut rng = rng_from_seed(99);
        for trial in 0..1000 {
            let n = 2 + trial % 7;
            let g = uniform_fill(&mut rng, n + 2, n, -1.0, 1.0).unwrap();
            let a = g.transpose() * &g + Mat::identity(n, n) * 1e-3;
            let b = uniform_fill(&mut rng, n, 1, -1.0, 1.0).unwrap().column(0).into_owned();
            let x = solve_spd(&a, &b).unwrap();
            let residual = (&a * &x - &b).norm();
            assert!(residual <= 1e-8 * (a.norm() * x.norm() + b.norm()), "trial {trial}");
        }
    }
}
