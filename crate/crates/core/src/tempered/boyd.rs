//! Nonlinear power iteration for `‖A‖_{p→p}` (Boyd's method), with
//! `A = D^{1/p} M D^{-1/p}` acting on unweighted `ℓᵖ`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::WeightedOperator;
use crate::numeric::{random_complex_vec, seeded_rng};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub(crate) fn pnorm(v: &[Complex64], p: f64) -> f64 {
    let mut terms: Vec<f64> = v.iter().map(|z| z.norm().powf(p)).collect();
    terms.sort_by(f64::total_cmp);
    crate::numeric::compensated_sum(terms).powf(1.0 / p)
}

/// `v ↦ |v|^{r-1} sgn(v)`, normalized to unit `ℓ^{r'}` norm where `r'` is
/// conjugate to `r`.
fn dual_map(v: &[Complex64], r: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = v
        .iter()
        .map(|z| {
            let m = z.norm();
            if m == 0.0 {
                ZERO
            } else {
                z / m * m.powf(r - 1.0)
            }
        })
        .collect();
    let r_conj = r / (r - 1.0);
    let n = pnorm(&out, r_conj);
    if n > 0.0 {
        out.iter_mut().for_each(|z| *z /= n);
    }
    out
}

#[derive(Debug, Clone)]
pub(crate) struct BoydRun {
    pub ratio: f64,
    pub x: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
}

fn normalize(mut x: Vec<Complex64>, p: f64) -> Vec<Complex64> {
    let n = pnorm(&x, p);
    if n > 0.0 {
        x.iter_mut().for_each(|z| *z /= n);
    }
    x
}

/// Ratio `‖Ax‖_p / ‖x‖_p` evaluated from scratch.
pub(crate) fn ratio(op: &WeightedOperator, x: &[Complex64], p: f64) -> f64 {
    let nx = pnorm(x, p);
    if nx == 0.0 {
        0.0
    } else {
        pnorm(&op.apply(x), p) / nx
    }
}

fn run(op: &WeightedOperator, start: Vec<Complex64>, p: f64, tol: f64, max_iters: usize) -> BoydRun {
    let q = p / (p - 1.0);
    let mut x = normalize(start, p);
    let mut best = BoydRun {
        ratio: ratio(op, &x, p),
        x: x.clone(),
        iterations: 0,
        converged: false,
    };
    let mut prev = best.ratio;
    for it in 1..=max_iters {
        let y = op.apply(&x);
        if pnorm(&y, p) == 0.0 {
            best.converged = true;
            break;
        }
        let s = dual_map(&y, p);
        let z = op.apply_adjoint(&s);
        if pnorm(&z, q) == 0.0 {
            best.converged = true;
            break;
        }
        x = dual_map(&z, q);
        let r = ratio(op, &x, p);
        best.iterations = it;
        if r > best.ratio {
            best.ratio = r;
            best.x = x.clone();
        }
        if (r - prev).abs() <= tol * r.max(f64::MIN_POSITIVE) {
            best.converged = true;
            break;
        }
        prev = r;
    }
    best
}

/// Runs the deterministic starts followed by `restarts` seeded random
/// starts; the best ratio wins, ties going to the earliest start.
pub(crate) fn boyd(
    op: &WeightedOperator,
    p: f64,
    extra_starts: Vec<Vec<Complex64>>,
    restarts: usize,
    seed: u64,
    tol: f64,
    max_iters: usize,
) -> BoydRun {
    let n = op.size();
    let mut starts = extra_starts;
    for r in 0..restarts {
        let mut rng = seeded_rng(seed, 1 + r as u64);
        starts.push(random_complex_vec(&mut rng, n));
    }
    let runs: Vec<BoydRun> = starts
        .into_par_iter()
        .map(|s| run(op, s, p, tol, max_iters))
        .collect();
    let total: usize = runs.iter().map(|r| r.iterations).sum();
    let mut best = runs
        .into_iter()
        .reduce(|a, b| if b.ratio > a.ratio { b } else { a })
        .expect("at least one start");
    best.iterations = total;
    best
}
