//! Monte-Carlo oracle: Euler–Maruyama paths of
//! `dX = (A(t)X + f(t))dt + B(t)dW` and an exact Gaussian sampler.
//!
//! Every path draws from its own ChaCha8 stream (`seed`, stream = path id),
//! so results do not depend on how paths are scheduled across threads.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::kernel::Observable;
use crate::linalg::sym_sqrt;
use crate::measures::TransitionKernel;
use crate::scalar::{is_finite, lit, to_f64, Real};

/// Terminal samples of an ensemble of paths started at `x0` at time `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble<T: Real> {
    pub s: T,
    pub t: T,
    pub x0: DVector<T>,
    /// Step actually used (`(t-s)/⌈(t-s)/dt⌉`); `t - s` for exact sampling.
    pub dt: T,
    pub n_paths: usize,
    pub seed: u64,
    /// `n_paths × n`.
    pub terminal_samples: DMatrix<T>,
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn normal<T: Real>(rng: &mut ChaCha8Rng) -> T {
    lit(rng.sample::<f64, _>(StandardNormal))
}

/// Euler–Maruyama simulation from `(s, x0)` to `t`.
pub fn simulate<T: Real>(
    field: &CoefficientField<T>,
    s: T,
    t: T,
    x0: &DVector<T>,
    dt: T,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble<T>> {
    let n = field.dim;
    if x0.len() != n {
        return Err(Error::Usage("x0 has the wrong dimension".into()));
    }
    if !is_finite(s) || !is_finite(t) || s >= t {
        return Err(Error::Usage("simulation needs finite s < t".into()));
    }
    if !(dt > T::zero()) || dt > (t - s) / lit(10.0) {
        return Err(Error::Usage("dt must lie in (0, (t-s)/10]".into()));
    }
    if n_paths < 2 {
        return Err(Error::Usage("at least two paths are required".into()));
    }
    let steps = to_f64(((t - s) / dt).ceil()) as usize;
    let h = (t - s) / lit::<T>(steps as f64);
    let sqrt_h = h.sqrt();
    // Coefficients at the left end of each step, flattened row-major.
    let mut a_tab = Vec::with_capacity(steps * n * n);
    let mut b_tab = Vec::with_capacity(steps * n * n);
    let mut f_tab = Vec::with_capacity(steps * n);
    for k in 0..steps {
        let (a, b, f) = field.eval(s + h * lit::<T>(k as f64))?;
        for i in 0..n {
            for j in 0..n {
                a_tab.push(a[(i, j)]);
                b_tab.push(b[(i, j)] * sqrt_h);
            }
            f_tab.push(f[i]);
        }
    }
    let rows: Vec<Vec<T>> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(seed, path);
            let mut x: Vec<T> = x0.iter().copied().collect();
            let mut next = vec![T::zero(); n];
            let mut z = vec![T::zero(); n];
            for k in 0..steps {
                for zi in z.iter_mut() {
                    *zi = normal(&mut rng);
                }
                let a = &a_tab[k * n * n..(k + 1) * n * n];
                let b = &b_tab[k * n * n..(k + 1) * n * n];
                let f = &f_tab[k * n..(k + 1) * n];
                for i in 0..n {
                    let mut drift = f[i];
                    let mut noise = T::zero();
                    for j in 0..n {
                        drift += a[i * n + j] * x[j];
                        noise += b[i * n + j] * z[j];
                    }
                    next[i] = x[i] + drift * h + noise;
                }
                std::mem::swap(&mut x, &mut next);
            }
            x
        })
        .collect();
    Ok(PathEnsemble {
        s,
        t,
        x0: x0.clone(),
        dt: h,
        n_paths,
        seed,
        terminal_samples: DMatrix::from_fn(n_paths, n, |r, c| rows[r][c]),
    })
}

/// Draws `n_paths` exact samples of the transition law `N(Ux0 + g, Q)`.
pub fn sample_exact<T: Real>(
    kern: &TransitionKernel<T>,
    x0: &DVector<T>,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble<T>> {
    let n = kern.dim();
    if x0.len() != n {
        return Err(Error::Usage("x0 has the wrong dimension".into()));
    }
    if n_paths < 2 {
        return Err(Error::Usage("at least two paths are required".into()));
    }
    let mean = &kern.u * x0 + &kern.g;
    let root = sym_sqrt(&kern.q)?;
    let rows: Vec<DVector<T>> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(seed, path);
            let z = DVector::from_fn(n, |_, _| normal::<T>(&mut rng));
            &mean + &root * z
        })
        .collect();
    Ok(PathEnsemble {
        s: kern.s,
        t: kern.t,
        x0: x0.clone(),
        dt: kern.t - kern.s,
        n_paths,
        seed,
        terminal_samples: DMatrix::from_fn(n_paths, n, |r, c| rows[r][c]),
    })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T: Real> {
    pub estimate: T,
    pub stderr: T,
}

impl<T: Real> McEstimate<T> {
    /// `|estimate - reference|` in units of the standard error.
    pub fn z_score(&self, reference: T) -> T {
        let d = (self.estimate - reference).abs();
        if self.stderr == T::zero() {
            if d == T::zero() {
                T::zero()
            } else {
                T::max_value().unwrap_or_else(|| lit(f64::MAX))
            }
        } else {
            d / self.stderr
        }
    }
}

fn mean_and_stderr<T: Real>(values: &[T]) -> McEstimate<T> {
    let count: T = lit(values.len() as f64);
    let mean = values.iter().fold(T::zero(), |a, &v| a + v) / count;
    let ss = values
        .iter()
        .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean));
    let var = ss / (count - T::one());
    McEstimate {
        estimate: mean,
        stderr: (var / count).sqrt(),
    }
}

impl<T: Real> PathEnsemble<T> {
    pub fn sample(&self, i: usize) -> DVector<T> {
        self.terminal_samples.row(i).transpose()
    }

    /// Bit pattern of the ensemble, for reproducibility checks.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.terminal_samples.len() * 8 + 16);
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.n_paths as u64).to_le_bytes());
        for v in self.terminal_samples.iter() {
            out.extend_from_slice(&to_f64(*v).to_bits().to_le_bytes());
        }
        out
    }

    /// Entrywise sample mean with standard errors.
    pub fn mean(&self) -> Vec<McEstimate<T>> {
        (0..self.terminal_samples.ncols())
            .map(|c| {
                let col: Vec<T> = self.terminal_samples.column(c).iter().copied().collect();
                mean_and_stderr(&col)
            })
            .collect()
    }

    /// Entrywise sample covariance; the standard error of entry `(i, j)` is
    /// the plug-in standard error of the mean of the centred products.
    pub fn covariance(&self) -> DMatrix<McEstimate<T>> {
        let n = self.terminal_samples.ncols();
        let means: Vec<T> = self.mean().iter().map(|m| m.estimate).collect();
        let rows = self.terminal_samples.nrows();
        let corr: T = lit::<T>(rows as f64) / lit::<T>((rows - 1) as f64);
        DMatrix::from_fn(n, n, |i, j| {
            let prods: Vec<T> = (0..rows)
                .map(|r| {
                    (self.terminal_samples[(r, i)] - means[i])
                        * (self.terminal_samples[(r, j)] - means[j])
                })
                .collect();
            let e = mean_and_stderr(&prods);
            McEstimate {
                estimate: e.estimate * corr,
                stderr: e.stderr * corr,
            }
        })
    }

    /// Writes `path_id, x_1, …, x_n`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let n = self.terminal_samples.ncols();
        let mut header = vec!["path_id".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        w.write_record(&header)?;
        for r in 0..self.n_paths {
            let mut rec = vec![r.to_string()];
            rec.extend((0..n).map(|c| format!("{:e}", self.terminal_samples[(r, c)])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Monte-Carlo estimate of `E[φ(X_t)]` (real part for complex observables).
pub fn mc_expectation<T: Real>(
    ens: &PathEnsemble<T>,
    phi: &Observable<T>,
) -> Result<McEstimate<T>> {
    if phi.dim() != ens.terminal_samples.ncols() {
        return Err(Error::Usage(
            "observable dimension does not match the ensemble".into(),
        ));
    }
    let values: Vec<T> = (0..ens.n_paths)
        .into_par_iter()
        .map(|r| phi.eval(&ens.sample(r)).re)
        .collect();
    Ok(mean_and_stderr(&values))
}
