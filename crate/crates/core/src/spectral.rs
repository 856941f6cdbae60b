//! Fourier analysis on finite abelian models `ℤ_{n₁}×…×ℤ_{n_d}`.
//!
//! Characters are indexed in the same mixed radix as the carrier:
//! `χ_k(j) = exp(2πi Σ_a k_a j_a / n_a)`. The dual group is modelled as the
//! same product with the paired Haar normalization (counting ↔ `1/|G|`
//! weights), which makes `‖f‖₂ = ‖f̂‖₂` exact:
//!
//! * `f̂(χ_k) = Σ_j w_j f(j) χ̄_k(j)`
//! * `f̆(j) = Σ_k w'_k g(χ_k) χ_k(j)`

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::convolution::convolve;
use crate::error::{LtpError, Result};
use crate::group::{build_group, GroupModel, GroupShape, GroupSpec, HaarNormalization};
use crate::lp::{ess_sup, inner, lp_norm, Exponent, GFunction};
use crate::numeric::fft_nd;
use crate::tempered::{svd_norm, SVD_CAP};

/// Largest group for which the orthogonality check forms the full Gram matrix.
const GRAM_CAP: usize = 2048;

/// `Ĝ` for a finite abelian model, with its own [`GroupModel`] carrying the
/// dual Haar weights.
#[derive(Debug, Clone)]
pub struct DualModel {
    base: Arc<GroupModel>,
    dual: Arc<GroupModel>,
    dims: Vec<usize>,
}

pub fn build_dual(base: &Arc<GroupModel>) -> Result<DualModel> {
    let dims = base.cyclic_factors().ok_or_else(|| {
        LtpError::NotAbelian(format!(
            "`{}` is not a declared product of cyclic groups",
            base.spec()
        ))
    })?;
    let shape = if dims.len() == 1 {
        GroupShape::Cyclic(dims[0])
    } else {
        GroupShape::Product(dims.iter().map(|&n| GroupShape::Cyclic(n)).collect())
    };
    let normalization = match base.normalization() {
        HaarNormalization::Counting => HaarNormalization::Probability,
        HaarNormalization::Probability => HaarNormalization::Counting,
    };
    let dual = build_group(&GroupSpec::new(shape, normalization))?;
    Ok(DualModel {
        base: Arc::clone(base),
        dual,
        dims,
    })
}

/// `χ_k` as a function on `G`.
pub(crate) fn character(base: &Arc<GroupModel>, dims: &[usize], k: usize) -> GFunction {
    let kd = digits(dims, k);
    let values = (0..base.size())
        .map(|j| phase(dims, &kd, &digits(dims, j)))
        .collect();
    GFunction::new_unchecked(base, values)
}

fn digits(dims: &[usize], mut i: usize) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &n) in out.iter_mut().zip(dims).rev() {
        *slot = i % n;
        i /= n;
    }
    out
}

/// `exp(2πi Σ_a k_a j_a / n_a)` with the phase reduced exactly per factor.
fn phase(dims: &[usize], k: &[usize], j: &[usize]) -> Complex64 {
    let turns: f64 = dims
        .iter()
        .zip(k.iter().zip(j))
        .map(|(&n, (&ka, &ja))| ((ka * ja) % n) as f64 / n as f64)
        .sum();
    Complex64::from_polar(1.0, 2.0 * PI * turns.fract())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Group,
    Dual,
}

/// Residuals of the four transform identities, each `‖LHS − RHS‖₂`
/// (Parseval: absolute difference of the two pairings).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityResiduals {
    /// `(f∗g)^ = f̂ ĝ`
    pub convolution: f64,
    /// `(fg)^ = f̂ ∗ ĝ` on the dual
    pub product: f64,
    /// `⟨f, ǧ⟩ = ⟨f̂, g⟩`
    pub parseval: f64,
    /// `(FG)ˇ = F̌ ∗ Ǧ` for `F, G` on the dual
    pub inverse_product: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.convolution
            .max(self.product)
            .max(self.parseval)
            .max(self.inverse_product)
    }
}

/// Both sides of `‖f‖₂ᵀ + ‖f‖_∞ = ‖f̂‖_∞ + ‖f̂‖₂ᵀ` and the two cross identities.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IsometryCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `|‖f‖₂ᵀ − ‖f̂‖_∞|`
    pub group_cross: f64,
    /// `|‖f̂‖₂ᵀ − ‖f‖_∞|`
    pub dual_cross: f64,
}

/// `‖M_f‖` on `L²` with an attaining witness.
#[derive(Debug, Clone)]
pub struct MultiplicationNorm {
    pub value: f64,
    pub witness: GFunction,
    /// `‖f·witness‖₂ / ‖witness‖₂`
    pub witness_ratio: f64,
}

impl DualModel {
    pub fn base(&self) -> &Arc<GroupModel> {
        &self.base
    }

    pub fn dual(&self) -> &Arc<GroupModel> {
        &self.dual
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn size(&self) -> usize {
        self.base.size()
    }

    pub fn dual_weight(&self, k: usize) -> f64 {
        self.dual.weight(k)
    }

    /// `χ_k(x_j)`.
    pub fn character_value(&self, k: usize, j: usize) -> Complex64 {
        phase(&self.dims, &digits(&self.dims, k), &digits(&self.dims, j))
    }

    pub fn character(&self, k: usize) -> GFunction {
        character(&self.base, &self.dims, k)
    }

    /// Table with rows `j` (group elements) and columns `k` (characters).
    pub fn character_table(&self) -> DMatrix<Complex64> {
        let n = self.size();
        let cols: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|k| self.character(k).into_values())
            .collect();
        DMatrix::from_fn(n, n, |j, k| cols[k][j])
    }

    pub fn fourier(&self, f: &GFunction) -> Result<GFunction> {
        f.expect_group(&self.base)?;
        let mut v = f.values().to_vec();
        fft_nd(&mut v, &self.dims, false);
        let w = self.base.weight(0);
        v.iter_mut().for_each(|z| *z *= w);
        GFunction::new(Arc::clone(&self.dual), v)
    }

    pub fn inverse_fourier(&self, g: &GFunction) -> Result<GFunction> {
        g.expect_group(&self.dual)?;
        let mut v = g.values().to_vec();
        fft_nd(&mut v, &self.dims, true);
        let w = self.dual.weight(0);
        v.iter_mut().for_each(|z| *z *= w);
        GFunction::new(Arc::clone(&self.base), v)
    }

    pub fn convolution_theorem_check(&self, f: &GFunction, g: &GFunction) -> Result<f64> {
        let lhs = self.fourier(&convolve(f, g)?.value)?;
        let rhs = self.fourier(f)?.mul(&self.fourier(g)?)?;
        l2_distance(&lhs, &rhs)
    }

    pub fn product_theorem_check(&self, f: &GFunction, g: &GFunction) -> Result<f64> {
        let lhs = self.fourier(&f.mul(g)?)?;
        let rhs = convolve(&self.fourier(f)?, &self.fourier(g)?)?.value;
        l2_distance(&lhs, &rhs)
    }

    /// `f` on `G`, `g` on `Ĝ`.
    pub fn parseval_check(&self, f: &GFunction, g: &GFunction) -> Result<f64> {
        let lhs = inner(f, &self.inverse_fourier(g)?)?;
        let rhs = inner(&self.fourier(f)?, g)?;
        Ok((lhs - rhs).norm())
    }

    /// `F, G` on `Ĝ`.
    pub fn inverse_product_check(&self, big_f: &GFunction, big_g: &GFunction) -> Result<f64> {
        let lhs = self.inverse_fourier(&big_f.mul(big_g)?)?;
        let rhs = convolve(&self.inverse_fourier(big_f)?, &self.inverse_fourier(big_g)?)?.value;
        l2_distance(&lhs, &rhs)
    }

    /// All four identities; `f, g` live on `G` and are carried to `Ĝ` for the
    /// dual-side identities by the transform.
    pub fn identity_residuals(&self, f: &GFunction, g: &GFunction) -> Result<IdentityResiduals> {
        let (fh, gh) = (self.fourier(f)?, self.fourier(g)?);
        Ok(IdentityResiduals {
            convolution: self.convolution_theorem_check(f, g)?,
            product: self.product_theorem_check(f, g)?,
            parseval: self.parseval_check(f, &gh)?,
            inverse_product: self.inverse_product_check(&fh, &gh)?,
        })
    }

    /// `max|f̂|` for `f` on `G`, or `max|ǧ|` for `g` on `Ĝ`.
    pub fn tempered_norm_spectral(&self, f: &GFunction, side: Side) -> Result<f64> {
        let image = match side {
            Side::Group => self.fourier(f)?,
            Side::Dual => self.inverse_fourier(f)?,
        };
        Ok(ess_sup(&image))
    }

    /// Evaluates both sides of the restricted-isometry identity. The two
    /// `‖·‖₂ᵀ` terms come from SVD of the convolution operators on `G` and `Ĝ`
    /// when the group is small enough, independently of the transform.
    pub fn plancherel_restricted_isometry(&self, f: &GFunction) -> Result<IsometryCheck> {
        let fh = self.fourier(f)?;
        let (t_group, t_dual) = if self.size() <= SVD_CAP {
            (svd_norm(f)?.lower, svd_norm(&fh)?.lower)
        } else {
            (
                self.tempered_norm_spectral(f, Side::Group)?,
                self.tempered_norm_spectral(&fh, Side::Dual)?,
            )
        };
        let (sup_f, sup_fh) = (ess_sup(f), ess_sup(&fh));
        Ok(IsometryCheck {
            lhs: t_group + sup_f,
            rhs: sup_fh + t_dual,
            group_cross: (t_group - sup_fh).abs(),
            dual_cross: (t_dual - sup_f).abs(),
        })
    }

    /// `max_{k,l} |Σ_j w_j χ_k(j) χ̄_l(j) − δ_{kl}·w·|G||`.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.size();
        let w = self.base.weight(0);
        let c = w * n as f64;
        if n <= GRAM_CAP {
            let t = self.character_table();
            let gram = t.adjoint() * &t * Complex64::new(w, 0.0);
            let mut worst = 0.0f64;
            for k in 0..n {
                for l in 0..n {
                    let target = if k == l { c } else { 0.0 };
                    worst = worst.max((gram[(l, k)] - target).norm());
                }
            }
            worst
        } else {
            // χ_k χ̄_l = χ_{k−l}, so the Gram matrix is determined by single sums
            (0..n)
                .into_par_iter()
                .map(|m| {
                    let s: Complex64 = self.character(m).values().iter().sum::<Complex64>() * w;
                    let target = if m == 0 { c } else { 0.0 };
                    (s - target).norm()
                })
                .reduce(|| 0.0, f64::max)
        }
    }

    /// `Plancherel`: `|‖f‖₂ − ‖f̂‖₂|`.
    pub fn plancherel_residual(&self, f: &GFunction) -> Result<f64> {
        let two = Exponent::new(2.0)?;
        Ok((lp_norm(f, two) - lp_norm(&self.fourier(f)?, two)).abs())
    }

    /// `max_j |f̆(f̂)(j) − f(j)|`.
    pub fn round_trip_error(&self, f: &GFunction) -> Result<f64> {
        let back = self.inverse_fourier(&self.fourier(f)?)?;
        Ok(back
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// Builds the dual on the fly and transforms.
pub fn fourier(f: &GFunction) -> Result<GFunction> {
    build_dual(&f.group_arc())?.fourier(f)
}

fn l2_distance(a: &GFunction, b: &GFunction) -> Result<f64> {
    Ok(lp_norm(&a.sub(b)?, Exponent::new(2.0)?))
}

/// `‖M_f‖ = ‖f‖_∞`, attained by the normalized indicator of an argmax cell.
pub fn mult_operator_norm(f: &GFunction) -> MultiplicationNorm {
    let g = f.group();
    let value = ess_sup(f);
    let best = (0..f.len())
        .find(|&i| f.values()[i].norm() == value)
        .unwrap_or(0);
    let witness = GFunction::indicator(&f.group_arc(), [best]).scale(Complex64::new(1.0 / g.weight(best).sqrt(), 0.0));
    let two = Exponent::new(2.0).expect("valid");
    let product = f.mul(&witness).expect("same model");
    let witness_ratio = lp_norm(&product, two) / lp_norm(&witness, two);
    MultiplicationNorm {
        value,
        witness,
        witness_ratio,
    }
}
