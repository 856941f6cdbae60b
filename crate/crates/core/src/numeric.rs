//! Small numerical kernels shared by the norm and spectral code: compensated
//! summation, seeded random vectors and the two top-singular-value solvers
//! (dense SVD and Lanczos on the normal operator).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub fn compensated_sum_c<I: IntoIterator<Item = Complex64>>(values: I) -> Complex64 {
    let mut re = Vec::new();
    let mut im = Vec::new();
    for v in values {
        re.push(v.re);
        im.push(v.im);
    }
    Complex64::new(compensated_sum(re), compensated_sum(im))
}

/// Deterministic RNG for a (seed, stream) pair.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable 64-bit FNV-1a hash, used to derive per-check RNG streams from names.
pub fn stream_id(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Entries uniform on the square [-1, 1] x [-1, 1].
pub fn random_complex_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
        .collect()
}

pub fn l2(v: &[Complex64]) -> f64 {
    compensated_sum(v.iter().map(|z| z.norm_sqr())).sqrt()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Largest singular value with its right singular vector.
#[derive(Debug, Clone)]
pub struct TopSingular {
    pub value: f64,
    pub vector: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Full dense SVD; returns the top singular triple's value and right vector.
pub fn top_singular_dense(matrix: &DMatrix<Complex64>) -> TopSingular {
    let svd = matrix.clone().svd(false, true);
    let (k, &value) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty matrix");
    let v_t = svd.v_t.expect("requested right singular vectors");
    let vector = v_t.row(k).iter().map(|z| z.conj()).collect();
    TopSingular {
        value,
        vector,
        iterations: 1,
        converged: true,
    }
}

/// Lanczos with full reorthogonalisation on the Hermitian operator `normal`
/// (typically `A^* A`). Returns `sqrt` of the top Ritz value.
pub fn top_singular_lanczos<F>(
    n: usize,
    normal: F,
    start: Vec<Complex64>,
    max_steps: usize,
    rel_tol: f64,
) -> TopSingular
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let max_steps = max_steps.min(n).max(1);
    let norm0 = l2(&start);
    let mut basis: Vec<Vec<Complex64>> = vec![start.iter().map(|z| z / norm0).collect()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut best = (0.0f64, vec![1.0f64]);
    let mut converged = false;

    for step in 0..max_steps {
        let q = &basis[step];
        let mut w = normal(q);
        let alpha = inner(q, &w).re;
        for (wi, qi) in w.iter_mut().zip(q) {
            *wi -= qi * alpha;
        }
        if step > 0 {
            let beta = betas[step - 1];
            for (wi, qi) in w.iter_mut().zip(&basis[step - 1]) {
                *wi -= qi * beta;
            }
        }
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= bi * c;
                }
            }
        }
        alphas.push(alpha);
        let beta = l2(&w);

        let last = step + 1 == max_steps;
        let breakdown = beta <= 1e-14 * alphas.iter().fold(1e-300f64, |m, a| m.max(a.abs()));
        if step % 4 == 3 || last || breakdown {
            let (theta, s) = tridiagonal_top(&alphas, &betas);
            let residual = beta * s.last().copied().unwrap_or(0.0).abs();
            best = (theta, s);
            if breakdown || residual <= rel_tol * theta.abs().max(1e-300) {
                converged = true;
                break;
            }
        }
        if last {
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|z| z / beta).collect());
    }

    let (theta, s) = best;
    let mut vector = vec![Complex64::new(0.0, 0.0); n];
    for (coef, b) in s.iter().zip(&basis) {
        for (vi, bi) in vector.iter_mut().zip(b) {
            *vi += bi * *coef;
        }
    }
    let vn = l2(&vector);
    if vn > 0.0 {
        vector.iter_mut().for_each(|z| *z /= vn);
    }
    TopSingular {
        value: theta.max(0.0).sqrt(),
        vector,
        iterations: alphas.len(),
        converged,
    }
}

fn tridiagonal_top(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    let col: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
    (theta, col.iter().copied().collect())
}

/// In-place unnormalized multi-dimensional DFT over a row-major array with
/// the first axis most significant. Forward uses `e^{-2πi jk/n}`.
pub fn fft_nd(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let total: usize = dims.iter().product();
    assert_eq!(data.len(), total, "array does not match dims");
    let mut planner = rustfft::FftPlanner::new();
    let mut stride = total;
    let mut line = Vec::new();
    for &len in dims {
        stride /= len;
        if len == 1 {
            continue;
        }
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        let block = len * stride;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                line.clear();
                line.extend((0..len).map(|k| data[outer + inner + k * stride]));
                fft.process(&mut line);
                for (k, v) in line.iter().enumerate() {
                    data[outer + inner + k * stride] = *v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn lanczos_matches_dense_svd() {
        let mut rng = seeded_rng(3, 0);
        let n = 40;
        let entries = random_complex_vec(&mut rng, n * n);
        let m = DMatrix::from_row_slice(n, n, &entries);
        let dense = top_singular_dense(&m);
        let mh = m.adjoint();
        let normal = |x: &[Complex64]| {
            let v = DVector::from_column_slice(x);
            (&mh * (&m * v)).iter().copied().collect::<Vec<_>>()
        };
        let start = random_complex_vec(&mut rng, n);
        let lz = top_singular_lanczos(n, normal, start, n, 1e-13);
        assert!((dense.value - lz.value).abs() < 1e-9 * dense.value);
        // singular vectors agree up to phase
        let overlap = inner(&dense.vector, &lz.vector).norm();
        assert!((overlap - 1.0).abs() < 1e-6, "overlap {overlap}");
    }

    #[test]
    fn fft_nd_matches_direct_character_sum() {
        let dims = [2usize, 3, 4];
        let n: usize = dims.iter().product();
        let mut rng = seeded_rng(3, 0);
        let x = random_complex_vec(&mut rng, n);
        let mut y = x.clone();
        fft_nd(&mut y, &dims, false);
        let digits = |i: usize| [i / 12, (i / 4) % 3, i % 4];
        for k in 0..n {
            let kd = digits(k);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                let jd = digits(j);
                let phase: f64 = (0..3).map(|a| (jd[a] * kd[a]) as f64 / dims[a] as f64).sum();
                acc += xj * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase);
            }
            assert!((acc - y[k]).norm() < 1e-12);
        }
        fft_nd(&mut y, &dims, true);
        for (a, b) in y.iter().zip(&x) {
            assert!((a / n as f64 - b).norm() < 1e-14);
        }
    }
}
