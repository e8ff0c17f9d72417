//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{cabs, lit, Real};

/// Operator 2-norm (largest singular value).
pub fn spectral_norm<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.singular_values()
        .iter()
        .copied()
        .fold(T::zero(), |a, b| a.max(b))
}

/// Smallest singular value.
pub fn min_singular_value<T: Real>(m: &DMatrix<T>) -> T {
    m.singular_values()
        .iter()
        .copied()
        .fold(T::max_value().unwrap(), |a, b| a.min(b))
}

pub fn vec_norm<T: Real>(v: &DVector<T>) -> T {
    v.norm()
}

/// Replaces `m` by `(m + mᵀ)/2`.
pub fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    let half = lit::<T>(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Largest absolute entry of `a - aᵀ`.
pub fn asymmetry<T: Real>(a: &DMatrix<T>) -> T {
    let n = a.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Clipping threshold for slightly negative covariance eigenvalues.
pub const PSD_CLIP: f64 = 1e-12;

/// Symmetric positive semidefinite square root via eigendecomposition.
///
/// Eigenvalues in `[-PSD_CLIP·max(1,‖c‖), 0)` are clipped to zero; more
/// negative ones are rejected.
pub fn sym_sqrt<T: Real>(c: &DMatrix<T>) -> Result<DMatrix<T>> {
    let mut s = c.clone();
    symmetrize(&mut s);
    let eig = s.symmetric_eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .fold(T::one(), |a, &b| a.max(b.abs()));
    let floor = -lit::<T>(PSD_CLIP) * scale;
    let mut roots = eig.eigenvalues.clone();
    for v in roots.iter_mut() {
        if *v < floor {
            return Err(Error::Domain(format!(
                "covariance has a negative eigenvalue {:e}",
                *v
            )));
        }
        *v = if *v < T::zero() { T::zero() } else { v.sqrt() };
    }
    let q = &eig.eigenvectors;
    let mut out = q * DMatrix::from_diagonal(&roots) * q.transpose();
    symmetrize(&mut out);
    Ok(out)
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse<T: Real>(c: &DMatrix<T>) -> Result<DMatrix<T>> {
    let mut s = c.clone();
    symmetrize(&mut s);
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    let mut inv = chol.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

/// `m^k` by binary powering.
pub fn matrix_power<T: Real>(m: &DMatrix<T>, mut k: u64) -> DMatrix<T> {
    let n = m.nrows();
    let mut result = DMatrix::<T>::identity(n, n);
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

pub fn to_complex<T: Real>(m: &DMatrix<T>) -> DMatrix<Complex<T>> {
    m.map(|x| Complex::new(x, T::zero()))
}

/// Numerical rank of a complex matrix: number of singular values above `tol`.
pub fn numerical_rank<T: Real>(m: &DMatrix<Complex<T>>, tol: T) -> usize {
    m.clone()
        .singular_values()
        .iter()
        .filter(|&&s| s > tol)
        .count()
}

/// Right singular vectors of `m` with singular values at most `tol`,
/// ordered by increasing singular value. When none qualifies, the single
/// vector of the smallest singular value is returned.
pub fn null_vectors<T: Real>(m: &DMatrix<Complex<T>>, tol: T) -> Vec<DVector<Complex<T>>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Vec<DVector<Complex<T>>> = order
        .iter()
        .filter(|&&i| svd.singular_values[i] <= tol)
        .map(|&i| v_t.row(i).adjoint())
        .collect();
    if out.is_empty() {
        out.push(v_t.row(order[0]).adjoint());
    }
    out
}

/// Rescales a complex vector to unit norm with its largest-modulus entry
/// real and positive, giving a canonical representative of its ray.
pub fn canonical_phase<T: Real>(v: &DVector<Complex<T>>) -> DVector<Complex<T>> {
    let mut best = 0;
    for i in 0..v.len() {
        if cabs(v[i]) > cabs(v[best]) {
            best = i;
        }
    }
    let pivot = v[best];
    let m = cabs(pivot);
    if m == T::zero() {
        return v.clone();
    }
    let phase = Complex::new(pivot.re / m, -pivot.im / m);
    let norm = v.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
    v.map(|z| z * phase / Complex::new(norm, T::zero()))
}

/// Groups eigenvalues that agree within `tol·max(1,|λ|)` and replaces each
/// group by its mean. A defective eigenvalue of multiplicity `m` is computed
/// with an `O(ε^{1/m})` spread whereas the group mean is accurate to `O(ε)`.
pub fn cluster_eigenvalues<T: Real>(values: &[Complex<T>], tol: T) -> Vec<Complex<T>> {
    let mut out = values.to_vec();
    let n = values.len();
    let mut group = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if group[i] != usize::MAX {
            continue;
        }
        group[i] = next;
        // Single-linkage closure.
        let mut changed = true;
        while changed {
            changed = false;
            for j in 0..n {
                if group[j] != usize::MAX {
                    continue;
                }
                let near = (0..n).any(|k| {
                    group[k] == next
                        && cabs(values[j] - values[k]) <= tol * T::one().max(cabs(values[k]))
                });
                if near {
                    group[j] = next;
                    changed = true;
                }
            }
        }
        next += 1;
    }
    for g in 0..next {
        let members: Vec<usize> = (0..n).filter(|&i| group[i] == g).collect();
        let mut mean = Complex::new(T::zero(), T::zero());
        for &i in &members {
            mean += values[i];
        }
        let count = Complex::new(lit::<T>(members.len() as f64), T::zero());
        mean /= count;
        for &i in &members {
            out[i] = mean;
        }
    }
    out
}

/// Sorts complex numbers by decreasing modulus, then decreasing real part,
/// then decreasing imaginary part.
pub fn sort_by_modulus_desc<T: Real>(values: &mut [Complex<T>]) {
    values.sort_by(|a, b| {
        cabs(*b)
            .partial_cmp(&cabs(*a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal))
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}
