//! Convolution `(g∗f)(x) = ∫ g(y) f(y⁻¹x) dλ(y)` on group models and the
//! operator `g ↦ g∗f`.
//!
//! Discrete models sum over the Cayley table (or the lattice window).
//! Finite abelian models above a small size go through the FFT. Quadrature
//! models use the equivalent form `∫ g(xz⁻¹) f(z) Δ(z)⁻¹ dz`: `z` runs over
//! grid nodes and `g` is interpolated at the exact product `xz⁻¹`. This keeps
//! every discrete right translate `g ↦ Δ(z)⁻¹ g(·z⁻¹)` a contraction-scaled
//! map with norm at most `Δ(z)^{-1/q}` on the grid, so the weighted-L¹ bound
//! on the operator norm survives discretization.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{LtpError, Result};
use crate::group::{GroupKind, GroupModel, LEAK_THRESHOLD};
use crate::lp::{lp_norm, Exponent, GFunction};
use crate::numeric::{compensated_sum, fft_nd};

/// Largest carrier for which the dense operator matrix is materialized.
pub const DENSE_CAP: usize = 4096;
/// Finite abelian groups at least this large convolve through the FFT.
const SPECTRAL_MIN: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvPath {
    /// Cayley-table or lattice-window summation.
    Direct,
    /// Multi-dimensional FFT on a product of cyclic groups.
    Spectral,
    /// Interpolated summation on a coordinate grid.
    Quadrature,
}

/// A convolution result with its truncation diagnostics.
#[derive(Debug, Clone)]
pub struct Convolution {
    pub value: GFunction,
    /// Fraction of `∫|g|·∫|f|` whose product lands outside the window.
    pub leak: f64,
    pub path: ConvPath,
}

impl Convolution {
    /// The value, or `WindowLeak` when more than the tolerated mass was lost.
    pub fn checked(self) -> Result<GFunction> {
        if self.leak > LEAK_THRESHOLD {
            Err(LtpError::WindowLeak {
                fraction: self.leak,
                threshold: LEAK_THRESHOLD,
            })
        } else {
            Ok(self.value)
        }
    }
}

/// `g∗f` on the default path for the model.
pub fn convolve(g: &GFunction, f: &GFunction) -> Result<Convolution> {
    let group = g.group();
    let path = match group.kind() {
        GroupKind::Quadrature => ConvPath::Quadrature,
        GroupKind::Finite if group.cyclic_factors().is_some() && group.size() >= SPECTRAL_MIN => {
            ConvPath::Spectral
        }
        _ => ConvPath::Direct,
    };
    convolve_via(g, f, path)
}

/// `g∗f` along an explicit path; used to cross-check the paths.
pub fn convolve_via(g: &GFunction, f: &GFunction, path: ConvPath) -> Result<Convolution> {
    g.expect_same(f)?;
    let group = g.group();
    let value = match path {
        ConvPath::Spectral => {
            let dims = group.cyclic_factors().ok_or_else(|| {
                LtpError::NotAbelian(format!("`{}` is not a product of cyclic groups", group.spec()))
            })?;
            spectral_convolve(g, f, &dims)
        }
        ConvPath::Direct if group.kind() == GroupKind::Quadrature => {
            return Err(LtpError::InvalidArgument(
                "quadrature models have no Cayley table".into(),
            ))
        }
        ConvPath::Quadrature if group.kind() != GroupKind::Quadrature => {
            return Err(LtpError::InvalidArgument(
                "interpolated summation needs a quadrature model".into(),
            ))
        }
        ConvPath::Direct | ConvPath::Quadrature => direct_convolve(g, f),
    };
    Ok(Convolution {
        value,
        leak: leak_fraction(g, f),
        path,
    })
}

/// Coefficients `w_z f_z / Δ(z)` over the support of `f`.
fn taps(f: &GFunction) -> Vec<(usize, Complex64)> {
    let group = f.group();
    f.support()
        .into_iter()
        .map(|z| (z, f.values()[z] * (group.weight(z) / group.modular(z))))
        .collect()
}

fn direct_convolve(g: &GFunction, f: &GFunction) -> GFunction {
    let group = g.group();
    let taps = taps(f);
    let gv = g.values();
    let out: Vec<Complex64> = (0..group.size())
        .into_par_iter()
        .map(|x| row_value(group, &taps, gv, x))
        .collect();
    GFunction::new_unchecked(&g.group_arc(), out)
}

#[inline]
fn row_value(group: &GroupModel, taps: &[(usize, Complex64)], gv: &[Complex64], x: usize) -> Complex64 {
    let mut acc = ZERO;
    for &(z, c) in taps {
        if let Some(st) = group.stencil_x_zinv(x, z) {
            let mut v = ZERO;
            for (i, wt) in st.iter() {
                v += gv[i] * wt;
            }
            acc += c * v;
        }
    }
    acc
}

fn spectral_convolve(g: &GFunction, f: &GFunction, dims: &[usize]) -> GFunction {
    // finite groups carry a constant weight
    let w = g.group().weight(0);
    let n = g.len() as f64;
    let mut a = g.values().to_vec();
    let mut b = f.values().to_vec();
    fft_nd(&mut a, dims, false);
    fft_nd(&mut b, dims, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft_nd(&mut a, dims, true);
    let scale = w / n;
    a.iter_mut().for_each(|z| *z *= scale);
    GFunction::new_unchecked(&g.group_arc(), a)
}

/// Fraction of the product mass `∫∫|g(y)||f(z)| dy dz` with `y·z` outside the
/// window. Always zero on finite models.
pub fn leak_fraction(g: &GFunction, f: &GFunction) -> f64 {
    let group = g.group();
    if group.kind() == GroupKind::Finite {
        return 0.0;
    }
    let fs: Vec<(usize, f64)> = f
        .support()
        .into_iter()
        .map(|z| (z, group.weight(z) * f.values()[z].norm()))
        .collect();
    let f_mass = compensated_sum(fs.iter().map(|p| p.1));
    let per_y: Vec<(f64, f64)> = g
        .support()
        .into_par_iter()
        .map(|y| {
            let gy = group.weight(y) * g.values()[y].norm();
            let lost = compensated_sum(
                fs.iter()
                    .filter(|(z, _)| !group.product_in_window(y, *z))
                    .map(|p| p.1),
            );
            (gy * f_mass, gy * lost)
        })
        .collect();
    let total = compensated_sum(per_y.iter().map(|p| p.0));
    let lost = compensated_sum(per_y.iter().map(|p| p.1));
    if total > 0.0 {
        lost / total
    } else {
        0.0
    }
}

/// `‖(f∗g)∗h − f∗(g∗h)‖₂`.
pub fn associativity_check(f: &GFunction, g: &GFunction, h: &GFunction) -> Result<f64> {
    let fg = convolve(f, g)?.value;
    let gh = convolve(g, h)?.value;
    let left = convolve(&fg, h)?.value;
    let right = convolve(f, &gh)?.value;
    Ok(lp_norm(&left.sub(&right)?, Exponent::new(2.0)?))
}

#[derive(Debug, Clone)]
pub enum Realization {
    /// `M[x, y]`, so that `(Mg)[x] = (g∗f)(x)`.
    Dense(DMatrix<Complex64>),
    /// Eigenvalues of the circulant on a product of cyclic groups.
    Spectral {
        dims: Vec<usize>,
        symbol: Vec<Complex64>,
    },
    MatrixFree {
        taps: Vec<(usize, Complex64)>,
    },
}

/// The operator `g ↦ g∗f` on the carrier of `f`.
#[derive(Debug, Clone)]
pub struct ConvOperator {
    f: GFunction,
    realization: Realization,
}

/// Spectral on finite abelian models with at least `SPECTRAL_MIN` elements;
/// otherwise matrix-free when `f` is sparse, dense below [`DENSE_CAP`] and
/// matrix-free above it.
pub fn conv_operator(f: &GFunction) -> ConvOperator {
    let group = f.group();
    let n = group.size();
    if group.cyclic_factors().is_some() && n >= SPECTRAL_MIN {
        if let Ok(op) = spectral_operator(f) {
            return op;
        }
    }
    // a stencil touches at most four nodes
    if 16 * f.support().len() <= n {
        return matrix_free_operator(f);
    }
    dense_operator(f).unwrap_or_else(|_| matrix_free_operator(f))
}

pub fn dense_operator(f: &GFunction) -> Result<ConvOperator> {
    let group = f.group();
    let n = group.size();
    if n > DENSE_CAP {
        return Err(LtpError::Resource {
            what: "dense convolution operator".into(),
            requested: n,
            cap: DENSE_CAP,
        });
    }
    let taps = taps(f);
    let rows: Vec<Vec<(usize, Complex64)>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut row = Vec::new();
            for &(z, c) in &taps {
                if let Some(st) = group.stencil_x_zinv(x, z) {
                    for (i, wt) in st.iter() {
                        row.push((i, c * wt));
                    }
                }
            }
            row
        })
        .collect();
    let mut m = DMatrix::from_element(n, n, ZERO);
    for (x, row) in rows.into_iter().enumerate() {
        for (i, v) in row {
            m[(x, i)] += v;
        }
    }
    Ok(ConvOperator {
        f: f.clone(),
        realization: Realization::Dense(m),
    })
}

pub fn spectral_operator(f: &GFunction) -> Result<ConvOperator> {
    let group = f.group();
    let dims = group.cyclic_factors().ok_or_else(|| {
        LtpError::NotAbelian(format!("`{}` is not a product of cyclic groups", group.spec()))
    })?;
    let mut symbol = f.values().to_vec();
    fft_nd(&mut symbol, &dims, false);
    let w = group.weight(0);
    symbol.iter_mut().for_each(|z| *z *= w);
    Ok(ConvOperator {
        f: f.clone(),
        realization: Realization::Spectral { dims, symbol },
    })
}

pub fn matrix_free_operator(f: &GFunction) -> ConvOperator {
    ConvOperator {
        f: f.clone(),
        realization: Realization::MatrixFree { taps: taps(f) },
    }
}

impl ConvOperator {
    pub fn f(&self) -> &GFunction {
        &self.f
    }

    pub fn group(&self) -> &GroupModel {
        self.f.group()
    }

    pub fn group_arc(&self) -> Arc<GroupModel> {
        self.f.group_arc()
    }

    pub fn size(&self) -> usize {
        self.f.len()
    }

    pub fn realization(&self) -> &Realization {
        &self.realization
    }

    pub fn matrix(&self) -> Option<&DMatrix<Complex64>> {
        match &self.realization {
            Realization::Dense(m) => Some(m),
            _ => None,
        }
    }

    /// `g ↦ g∗f` on raw carrier vectors.
    pub fn apply(&self, g: &[Complex64]) -> Vec<Complex64> {
        match &self.realization {
            Realization::Dense(m) => dense_apply(m, g, false),
            Realization::Spectral { dims, symbol } => circulant_apply(dims, symbol, g, false),
            Realization::MatrixFree { taps } => {
                let group = self.group();
                (0..group.size())
                    .into_par_iter()
                    .map(|x| row_value(group, taps, g, x))
                    .collect()
            }
        }
    }

    /// The conjugate transpose in the unweighted inner product on the carrier.
    pub fn apply_adjoint(&self, s: &[Complex64]) -> Vec<Complex64> {
        match &self.realization {
            Realization::Dense(m) => dense_apply(m, s, true),
            Realization::Spectral { dims, symbol } => circulant_apply(dims, symbol, s, true),
            Realization::MatrixFree { taps } => matrix_free_adjoint(self.group(), taps, s),
        }
    }

    /// The dense matrix, building it when the operator is not dense already.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        match &self.realization {
            Realization::Dense(m) => Ok(m.clone()),
            _ => Ok(dense_operator(&self.f)?
                .matrix()
                .expect("dense realization")
                .clone()),
        }
    }
}

fn dense_apply(m: &DMatrix<Complex64>, v: &[Complex64], adjoint: bool) -> Vec<Complex64> {
    let n = m.nrows();
    if adjoint {
        // columns are contiguous in column-major storage
        (0..n)
            .into_par_iter()
            .map(|i| {
                let col = m.column(i);
                col.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
            })
            .collect()
    } else {
        let mut out = vec![ZERO; n];
        for (i, vi) in v.iter().enumerate() {
            if *vi == ZERO {
                continue;
            }
            for (o, a) in out.iter_mut().zip(m.column(i).iter()) {
                *o += a * vi;
            }
        }
        out
    }
}

fn circulant_apply(dims: &[usize], symbol: &[Complex64], v: &[Complex64], adjoint: bool) -> Vec<Complex64> {
    let mut a = v.to_vec();
    fft_nd(&mut a, dims, false);
    for (x, s) in a.iter_mut().zip(symbol) {
        *x *= if adjoint { s.conj() } else { *s };
    }
    fft_nd(&mut a, dims, true);
    let n = v.len() as f64;
    a.iter_mut().for_each(|z| *z /= n);
    a
}

/// Scatter form of the adjoint. Rows are split into a fixed number of blocks
/// independent of the thread pool, and block partials are added in order, so
/// results do not depend on the thread count.
fn matrix_free_adjoint(group: &GroupModel, taps: &[(usize, Complex64)], s: &[Complex64]) -> Vec<Complex64> {
    let n = group.size();
    let blocks = (((1usize << 22) / n.max(1)).clamp(1, 64)).min(n.max(1));
    let chunk = n.div_ceil(blocks);
    let partials: Vec<Vec<Complex64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![ZERO; n];
            for x in b * chunk..((b + 1) * chunk).min(n) {
                if s[x] == ZERO {
                    continue;
                }
                for &(z, c) in taps {
                    if let Some(st) = group.stencil_x_zinv(x, z) {
                        let cs = c.conj() * s[x];
                        for (i, wt) in st.iter() {
                            acc[i] += cs * wt;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![ZERO; n];
    for p in partials {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}
