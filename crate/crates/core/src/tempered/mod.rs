//! The tempered norm `‖f‖ₚᵀ = sup{‖g∗f‖_p : ‖g‖_p ≤ 1}`.
//!
//! Weighted norms are handled through the similarity `A = D^{1/p} M D^{-1/p}`
//! with `D = diag(w)`, after which `‖f‖ₚᵀ = ‖A‖_{p→p}` on unweighted `ℓᵖ`.
//! Exact routes: `p = 1` (weighted column sums), `p = 2` (characters on finite
//! abelian groups, the Fourier symbol on lattices, SVD or Lanczos elsewhere).
//! Other exponents get a Boyd-iteration lower bound and the weighted-L¹
//! upper bound.

mod boyd;
mod symbol;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convolution::{conv_operator, ConvOperator, Realization};
use crate::error::{LtpError, Result};
use crate::group::{translate, Element, GroupKind, GroupModel, TranslateSide};
use crate::harness::{CheckResult, Expected};
use crate::lp::{im, re, weighted_l1_norm, Exponent, GFunction};
use crate::numeric::{fft_nd, random_complex_vec, seeded_rng, top_singular_dense, top_singular_lanczos};

/// Largest carrier for which `p = 2` uses a full dense SVD.
pub const SVD_CAP: usize = 256;
const LANCZOS_STEPS: usize = 300;
const LANCZOS_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    ExactSvd,
    SpectralAbelian,
    ExactL1,
    BoydIteration,
    BoundWeightedL1,
    /// Lanczos on `AᴴA`; a converged lower bound for `p = 2` above the SVD cap.
    Lanczos,
}

impl NormMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormMethod::ExactSvd => "exact_svd",
            NormMethod::SpectralAbelian => "spectral_abelian",
            NormMethod::ExactL1 => "exact_l1",
            NormMethod::BoydIteration => "boyd_iteration",
            NormMethod::BoundWeightedL1 => "bound_weighted_l1",
            NormMethod::Lanczos => "lanczos",
        }
    }
}

/// Certified bracket for `‖f‖ₚᵀ`.
#[derive(Debug, Clone)]
pub struct NormEstimate {
    pub lower: f64,
    pub upper: f64,
    pub method: NormMethod,
    pub iterations: usize,
    pub converged: bool,
    /// A `g` with `‖g∗f‖_p / ‖g‖_p ≈ lower`.
    pub witness: Option<GFunction>,
}

impl NormEstimate {
    fn exact(value: f64, method: NormMethod, witness: Option<GFunction>) -> Self {
        NormEstimate {
            lower: value,
            upper: value,
            method,
            iterations: 1,
            converged: true,
            witness,
        }
    }

    /// Whether both bounds coincide (an exact route).
    pub fn is_exact(&self) -> bool {
        matches!(
            self.method,
            NormMethod::ExactSvd | NormMethod::SpectralAbelian | NormMethod::ExactL1
        )
    }

    /// Best point value: the lower bound, which is exact on exact routes.
    pub fn value(&self) -> f64 {
        self.lower
    }
}

/// Settings for the iterative routes. Field names are the config-file keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for IterConfig {
    fn default() -> Self {
        IterConfig {
            tol: 1e-8,
            max_iters: 500,
            restarts: 8,
            seed: 0,
        }
    }
}

/// `A = D^{1/p} M D^{-1/p}` as a matrix-free operator on unweighted vectors.
pub(crate) struct WeightedOperator {
    op: ConvOperator,
    fwd: Vec<f64>,
    back: Vec<f64>,
}

impl WeightedOperator {
    pub(crate) fn new(op: ConvOperator, p: f64) -> Self {
        let w = op.group().weights();
        let fwd: Vec<f64> = w.iter().map(|x| x.powf(1.0 / p)).collect();
        let back = fwd.iter().map(|x| 1.0 / x).collect();
        WeightedOperator { op, fwd, back }
    }

    pub(crate) fn size(&self) -> usize {
        self.op.size()
    }

    pub(crate) fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let g: Vec<Complex64> = x.iter().zip(&self.back).map(|(v, s)| v * s).collect();
        let mut y = self.op.apply(&g);
        y.iter_mut().zip(&self.fwd).for_each(|(v, s)| *v *= s);
        y
    }

    pub(crate) fn apply_adjoint(&self, s: &[Complex64]) -> Vec<Complex64> {
        let t: Vec<Complex64> = s.iter().zip(&self.fwd).map(|(v, c)| v * c).collect();
        let mut z = self.op.apply_adjoint(&t);
        z.iter_mut().zip(&self.back).for_each(|(v, c)| *v *= c);
        z
    }

    fn dense(&self) -> Result<DMatrix<Complex64>> {
        let mut m = self.op.to_dense()?;
        let n = m.nrows();
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] *= self.fwd[i] * self.back[j];
            }
        }
        Ok(m)
    }

    /// Carrier function `D^{-1/p} x`, so that `‖g‖_p = ‖x‖_p`.
    fn to_function(&self, x: &[Complex64]) -> GFunction {
        let values = x.iter().zip(&self.back).map(|(v, s)| v * s).collect();
        GFunction::new_unchecked(&self.op.group_arc(), values)
    }
}

/// `‖f‖ₚᵀ` by the best available route for the model and exponent.
pub fn tempered_norm(f: &GFunction, p: Exponent, cfg: &IterConfig) -> Result<NormEstimate> {
    if f.is_zero() {
        let method = match p.p() {
            x if x == 1.0 => NormMethod::ExactL1,
            x if x == 2.0 => NormMethod::ExactSvd,
            _ => NormMethod::BoydIteration,
        };
        return Ok(NormEstimate::exact(0.0, method, None));
    }
    if p.p() == 1.0 {
        return Ok(exact_l1(f));
    }
    let group = f.group();
    if p.p() == 2.0 {
        if group.kind() == GroupKind::LatticeTruncated {
            return Ok(lattice_symbol(f));
        }
        if group.cyclic_factors().is_some() {
            return abelian_spectral(f);
        }
        if group.size() <= SVD_CAP {
            return svd_norm(f);
        }
        return Ok(lanczos_norm(f, cfg));
    }
    Ok(boyd_norm(f, p, cfg))
}

/// Exact `p = 2` norm by dense SVD of the weighted operator matrix.
pub fn svd_norm(f: &GFunction) -> Result<NormEstimate> {
    let op = WeightedOperator::new(crate::convolution::dense_operator(f)?, 2.0);
    let top = top_singular_dense(&op.dense()?);
    let witness = op.to_function(&top.vector);
    Ok(NormEstimate::exact(top.value, NormMethod::ExactSvd, Some(witness)))
}

fn lanczos_norm(f: &GFunction, cfg: &IterConfig) -> NormEstimate {
    let op = WeightedOperator::new(conv_operator(f), 2.0);
    let n = op.size();
    let mut rng = seeded_rng(cfg.seed, 0);
    let start: Vec<Complex64> = random_complex_vec(&mut rng, n)
        .into_iter()
        .map(|z| z + Complex64::new(1.0, 0.0))
        .collect();
    let top = top_singular_lanczos(
        n,
        |v| op.apply_adjoint(&op.apply(v)),
        start,
        LANCZOS_STEPS,
        LANCZOS_TOL,
    );
    let witness_ratio = boyd::ratio(&op, &top.vector, 2.0);
    let lower = witness_ratio.max(0.0);
    NormEstimate {
        lower,
        upper: upper_bound_weighted_l1(f, Exponent::new(2.0).expect("valid")).max(lower),
        method: NormMethod::Lanczos,
        iterations: top.iterations,
        converged: top.converged,
        witness: Some(op.to_function(&top.vector)),
    }
}

fn abelian_spectral(f: &GFunction) -> Result<NormEstimate> {
    let group = f.group();
    let dims = group.cyclic_factors().ok_or_else(|| {
        LtpError::NotAbelian(format!("`{}` is not a product of cyclic groups", group.spec()))
    })?;
    let mut hat = f.values().to_vec();
    fft_nd(&mut hat, &dims, false);
    let w = group.weight(0);
    let (k, value) = hat
        .iter()
        .map(|z| z.norm() * w)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    // the character χ_k is an eigenfunction of g ↦ g∗f with eigenvalue f̂(χ_k)
    let witness = crate::spectral::character(&f.group_arc(), &dims, k);
    Ok(NormEstimate::exact(value, NormMethod::SpectralAbelian, Some(witness)))
}

fn lattice_symbol(f: &GFunction) -> NormEstimate {
    let group = f.group();
    let dim = group.lattice_dim().expect("lattice model");
    let support = f.support();
    let coords: Vec<Vec<i64>> = support
        .iter()
        .map(|&i| group.lattice_coords(i).expect("lattice point"))
        .collect();
    let values: Vec<Complex64> = support.iter().map(|&i| f.values()[i]).collect();
    let sup = symbol::symbol_sup(dim, &coords, &values);
    let l1 = upper_bound_weighted_l1(f, Exponent::new(2.0).expect("valid"));
    NormEstimate {
        lower: sup.lower,
        upper: sup.upper.min(l1).max(sup.lower),
        method: NormMethod::SpectralAbelian,
        iterations: 1,
        converged: true,
        witness: None,
    }
}

/// Column sums `Σ_x |M[x,i]| w_x / w_i` of the weighted matrix; the `p = 1`
/// operator norm is their max, attained at a point mass.
fn exact_l1(f: &GFunction) -> NormEstimate {
    let group = f.group();
    let n = group.size();
    let op = conv_operator(f);
    let w = group.weights();
    let sums: Vec<f64> = match op.realization() {
        Realization::Dense(m) => (0..n)
            .into_par_iter()
            .map(|i| {
                let col = m.column(i);
                let s: Vec<f64> = col.iter().zip(w).map(|(a, wx)| a.norm() * wx).collect();
                crate::numeric::compensated_sum(s) / w[i]
            })
            .collect(),
        _ => column_sums_sparse(group, f, w),
    };
    let (best, value) = sums
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, v)| if v > b.1 { (i, v) } else { b });
    let witness = GFunction::indicator(&f.group_arc(), [best]);
    NormEstimate::exact(value, NormMethod::ExactL1, Some(witness))
}

fn column_sums_sparse(group: &GroupModel, f: &GFunction, w: &[f64]) -> Vec<f64> {
    let n = group.size();
    let taps: Vec<(usize, Complex64)> = f
        .support()
        .into_iter()
        .map(|z| (z, f.values()[z] * (group.weight(z) / group.modular(z))))
        .collect();
    let blocks = (((1usize << 22) / n.max(1)).clamp(1, 64)).min(n);
    let chunk = n.div_ceil(blocks);
    let partials: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0.0; n];
            let mut row: Vec<(usize, Complex64)> = Vec::new();
            for x in b * chunk..((b + 1) * chunk).min(n) {
                row.clear();
                for &(z, c) in &taps {
                    if let Some(st) = group.stencil_x_zinv(x, z) {
                        row.extend(st.iter().map(|(i, wt)| (i, c * wt)));
                    }
                }
                row.sort_by_key(|e| e.0);
                let mut k = 0;
                while k < row.len() {
                    let i = row[k].0;
                    let mut v = Complex64::new(0.0, 0.0);
                    while k < row.len() && row[k].0 == i {
                        v += row[k].1;
                        k += 1;
                    }
                    acc[i] += v.norm() * w[x];
                }
            }
            acc
        })
        .collect();
    let mut sums = vec![0.0; n];
    for part in partials {
        for (s, v) in sums.iter_mut().zip(part) {
            *s += v;
        }
    }
    sums.iter_mut().zip(w).for_each(|(s, wi)| *s /= wi);
    sums
}

fn boyd_norm(f: &GFunction, p: Exponent, cfg: &IterConfig) -> NormEstimate {
    let op = WeightedOperator::new(conv_operator(f), p.p());
    let n = op.size();
    // deterministic starts: the constant vector, and on small models the top
    // right singular vector of the same weighted matrix
    let mut starts = vec![vec![Complex64::new(1.0, 0.0); n]];
    if n <= SVD_CAP {
        if let Ok(m) = op.dense() {
            starts.push(top_singular_dense(&m).vector);
        }
    }
    let run = boyd::boyd(&op, p.p(), starts, cfg.restarts, cfg.seed, cfg.tol, cfg.max_iters);
    let upper = upper_bound_weighted_l1(f, p);
    NormEstimate {
        lower: run.ratio,
        upper: upper.max(run.ratio),
        method: NormMethod::BoydIteration,
        iterations: run.iterations,
        converged: run.converged,
        witness: Some(op.to_function(&run.x)),
    }
}

/// Upper bound `∫|f| Δ^{-1/q}` on `‖f‖ₚᵀ`.
pub fn upper_bound_weighted_l1(f: &GFunction, p: Exponent) -> f64 {
    weighted_l1_norm(f, p)
}

/// `(‖f∗δ_x‖ₚᵀ / ‖f‖ₚᵀ, Δ(x)^{-1/q})`, using the lower bounds of both
/// estimates (exact for `p ∈ {1, 2}`).
pub fn dirac_scaling_check(
    f: &GFunction,
    x: &Element,
    p: Exponent,
    cfg: &IterConfig,
) -> Result<(f64, f64)> {
    let group = f.group();
    let expected = if p.p() == 1.0 {
        1.0
    } else {
        group.modular_at(x)?.powf(-1.0 / p.q())
    };
    if is_identity(group, x) {
        return Ok((1.0, expected));
    }
    let moved = translate(group, f, x, TranslateSide::RightDirac)?;
    let base = tempered_norm(f, p, cfg)?.lower;
    if base == 0.0 {
        return Err(LtpError::InvalidArgument("f has zero tempered norm".into()));
    }
    Ok((tempered_norm(&moved, p, cfg)?.lower / base, expected))
}

fn is_identity(g: &GroupModel, x: &Element) -> bool {
    match x {
        Element::Index(i) => *i == g.identity(),
        Element::Line(v) => *v == 0.0,
        Element::Affine { u, b } => *u == 0.0 && *b == 0.0,
    }
}

/// Checks `‖Re f‖ₚᵀ ≤ 2‖f‖ₚᵀ` and `‖Im f‖ₚᵀ ≤ 2‖f‖ₚᵀ`; `observed` is the larger
/// of the two ratios.
pub fn re_im_closure_check(f: &GFunction, p: Exponent, cfg: &IterConfig, tol: f64) -> Result<CheckResult> {
    let base = tempered_norm(f, p, cfg)?;
    let nr = tempered_norm(&re(f), p, cfg)?;
    let ni = tempered_norm(&im(f), p, cfg)?;
    let observed = if base.lower == 0.0 {
        0.0
    } else {
        nr.lower.max(ni.lower) / base.lower
    };
    let mut result = CheckResult::compare(
        "re_im_closure",
        "real and imaginary parts of a tempered function are tempered",
        observed,
        Expected::Interval([0.0, 2.0]),
        tol,
    );
    result.notes = format!(
        "method {}; |Re f| {:.6e}, |Im f| {:.6e}, |f| {:.6e}",
        base.method.as_str(),
        nr.lower,
        ni.lower,
        base.lower
    );
    Ok(result)
}

/// Lower bounds `n^{1-1/p}/K`, `n = 1..=count`, on the `Lᵖ` norm of a left
/// quasi identity with constant `K`, each backed by a grid neighbourhood `U_n`
/// of the identity with `λ(U_n) < 1/n`.
pub fn quasi_identity_blowup(group: &Arc<GroupModel>, p: Exponent, k: f64, count: usize) -> Result<Vec<f64>> {
    if group.is_discrete() {
        return Err(LtpError::Domain(format!(
            "`{}` is discrete and has a genuine identity",
            group.spec()
        )));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(LtpError::InvalidArgument(format!("constant K = {k} must be positive")));
    }
    let cell = group.weight(group.identity());
    let mut bounds = Vec::with_capacity(count);
    for n in 1..=count {
        let target = 1.0 / n as f64;
        // the smallest neighbourhood on the grid is the identity cell
        if cell >= target {
            return Err(LtpError::GridTooCoarse {
                step: cell,
                target,
            });
        }
        bounds.push((n as f64).powf(1.0 - 1.0 / p.p()) / k);
    }
    Ok(bounds)
}
