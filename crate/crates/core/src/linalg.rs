//! Small dense linear-algebra and combinatorics kernels.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

/// Dense complex matrix.
pub type CMat = DMatrix<C64>;
/// Dense complex vector.
pub type CVec = DVector<C64>;

/// Binomial coefficient as `f64` (exact for the small arguments used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// `n!` as `f64`.
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, i| a * i as f64)
}

/// Elementary symmetric polynomial `σ_k(λ)`, with `σ_0 = 1`.
pub fn elementary_symmetric(lams: &[f64], k: usize) -> f64 {
    if k > lams.len() {
        0.0
    } else {
        all_elementary_symmetric(lams)[k]
    }
}

/// `[σ_0, …, σ_n]` of the given values.
pub fn all_elementary_symmetric(lams: &[f64]) -> Vec<f64> {
    let n = lams.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (i, &l) in lams.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += l * e[k - 1];
        }
    }
    e
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Largest absolute entry of `m − m†`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.nrows() {
        for k in 0..m.ncols() {
            worst = worst.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    worst
}

/// `(m + m†)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Largest absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a: f64, x| a.max(x.norm()))
}

/// Ascending eigenvalues of a Hermitian matrix (the Hermitian part is used).
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let eig = hermitian_part(m).symmetric_eigenvalues();
    let mut v: Vec<f64> = eig.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Ascending generalized eigenvalues of `H` against a positive definite `G`,
/// via the Cholesky congruence `L⁻¹ H L⁻†`.
pub fn generalized_eigenvalues(g: &CMat, h: &CMat) -> Result<Vec<f64>> {
    let n = g.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let l = cholesky(&hermitian_part(g))?;
    let linv = l
        .solve_lower_triangular(&CMat::identity(n, n))
        .ok_or(Error::NotPositiveDefinite)?;
    let m = &linv * hermitian_part(h) * linv.adjoint();
    Ok(hermitian_eigenvalues(&m))
}

/// Lower Cholesky factor of a Hermitian matrix; fails unless every pivot is
/// strictly positive.
pub fn cholesky(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Determinant by the Leibniz expansion for `n ≤ 3` (no pivoting, so graded
/// matrices keep their relative accuracy) and LU otherwise.
pub fn determinant(m: &CMat) -> C64 {
    let n = m.nrows();
    match n {
        0 => C64::new(1.0, 0.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => m.clone().determinant(),
    }
}

/// `[σ_0, …, σ_n]` of the eigenvalues of `G⁻¹M` for Hermitian `M` and positive
/// definite `G`, read off `det(xG + M) = det G · Σ_j σ_j x^{n−j}` by expanding
/// into mixed determinants. Unlike an eigen-decomposition this keeps the
/// small eigenvalues of strongly graded matrices.
pub fn generalized_symmetric_functions(g: &CMat, m: &CMat) -> Result<Vec<f64>> {
    let n = g.nrows();
    cholesky(&hermitian_part(g))?;
    let dg = determinant(g).re;
    let mut sig = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let c = CMat::from_fn(n, n, |i, j| {
            if mask >> j & 1 == 1 {
                m[(i, j)]
            } else {
                g[(i, j)]
            }
        });
        sig[mask.count_ones() as usize] += determinant(&c).re;
    }
    Ok(sig.into_iter().map(|s| s / dg).collect())
}

/// Real multiple of the identity as a complex matrix.
pub fn scaled_identity(n: usize, s: f64) -> CMat {
    CMat::identity(n, n).scale(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials_and_symmetric_functions() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(3, 4), 0.0);
        let e = all_elementary_symmetric(&[1.0, 2.0, 3.0]);
        assert_eq!(e, vec![1.0, 6.0, 11.0, 6.0]);
        assert_eq!(elementary_symmetric(&[1.0, 2.0], 3), 0.0);
        assert_eq!(elementary_symmetric(&[1.0, 2.0], 2), 2.0);
    }

    #[test]
    fn generalized_eigenvalues_of_scaled_pair() {
        let g = scaled_identity(2, 0.5);
        let h = CMat::from_diagonal(&CVec::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
        ]));
        let e = generalized_eigenvalues(&g, &h).unwrap();
        assert!((e[0] - 2.0).abs() < 1e-14 && (e[1] - 4.0).abs() < 1e-14);
        assert_eq!(
            generalized_eigenvalues(&scaled_identity(2, -1.0), &h),
            Err(Error::NotPositiveDefinite)
        );
    }

    #[test]
    fn mixed_determinants_match_eigenvalues() {
        let g = CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(0.5, 0.0),
                C64::new(0.1, 0.2),
                C64::new(0.1, -0.2),
                C64::new(0.7, 0.0),
            ],
        );
        let h = CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(2.0, 0.0),
                C64::new(-0.3, 0.4),
                C64::new(-0.3, -0.4),
                C64::new(-1.0, 0.0),
            ],
        );
        let e = generalized_eigenvalues(&g, &h).unwrap();
        let s = generalized_symmetric_functions(&g, &h).unwrap();
        let want = all_elementary_symmetric(&e);
        for k in 0..3 {
            assert!((s[k] - want[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499500.0);
    }
}
