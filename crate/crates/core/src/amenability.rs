//! Følner sets on discrete amenable models and the averaging inequality
//! behind the positive-cone equality `L¹(G, ω_q) ∩ Lᵖ(G)⁺ = L_pᵀ(G)⁺`.
//!
//! Only boxes `[-L, L]^d` on truncated lattices are searched; finite groups
//! get the trivial certificate `K = G`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::convolution::convolve;
use crate::error::{LtpError, Result};
use crate::group::{GroupKind, GroupModel};
use crate::harness::{default_tolerance, CheckResult, Expected};
use crate::lp::{inner, lp_norm, tilde, weighted_l1_norm, Exponent, GFunction};
use crate::numeric::compensated_sum;
use crate::tempered::{tempered_norm, IterConfig};

/// A finite `K` with `|xK ∩ K| / |K| > 1 − ε` for every `x ∈ C`.
#[derive(Debug, Clone)]
pub struct FolnerCertificate {
    group: Arc<GroupModel>,
    c: Vec<usize>,
    epsilon: f64,
    k: Vec<usize>,
    half_side: Option<usize>,
    /// `|xK ∩ K|` for each `x ∈ C`, in the order of `c`.
    counts: Vec<usize>,
}

impl FolnerCertificate {
    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn c(&self) -> &[usize] {
        &self.c
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn k(&self) -> &[usize] {
        &self.k
    }

    /// `L` for a box certificate `K = [-L, L]^d`.
    pub fn half_side(&self) -> Option<usize> {
        self.half_side
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// The smallest `|xK ∩ K|` over `x ∈ C`, with `|K|`.
    pub fn worst_count(&self) -> (usize, usize) {
        (self.counts.iter().copied().min().unwrap_or(self.k.len()), self.k.len())
    }

    /// `min_{x∈C} |xK ∩ K| / |K|`.
    pub fn worst_ratio(&self) -> f64 {
        let (num, den) = self.worst_count();
        num as f64 / den as f64
    }

    /// Counts `|xK ∩ K|` again by brute force.
    pub fn recount(&self) -> Vec<usize> {
        intersection_counts(&self.group, &self.c, &self.k)
    }
}

/// `|xK ∩ K|` for each `x ∈ C`, by testing every `xk`.
pub fn intersection_counts(group: &GroupModel, c: &[usize], k: &[usize]) -> Vec<usize> {
    let mut member = vec![false; group.size()];
    for &i in k {
        member[i] = true;
    }
    c.par_iter()
        .map(|&x| {
            k.iter()
                .filter(|&&y| group.op(x, y).is_some_and(|xy| member[xy]))
                .count()
        })
        .collect()
}

/// Indices of the box `[-r, r]^d` on a truncated lattice.
pub fn lattice_box(group: &GroupModel, r: usize) -> Result<Vec<usize>> {
    let (dim, radius) = lattice_shape(group)?;
    if r > radius {
        return Err(LtpError::WindowTooSmall {
            required: r,
            available: radius,
        });
    }
    let r = r as i64;
    let mut out = Vec::new();
    if dim == 1 {
        for a in -r..=r {
            out.extend(group.lattice_index(&[a]));
        }
    } else {
        for a in -r..=r {
            for b in -r..=r {
                out.extend(group.lattice_index(&[a, b]));
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

fn lattice_shape(group: &GroupModel) -> Result<(usize, usize)> {
    match (group.lattice_dim(), group.lattice_radius()) {
        (Some(d), Some(r)) => Ok((d, r)),
        _ => Err(LtpError::Domain(format!(
            "box Følner sets need a truncated lattice, got `{}`",
            group.spec()
        ))),
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(LtpError::InvalidArgument(format!("epsilon = {epsilon} must lie in (0, 1)")))
    }
}

/// `|xK ∩ K|` for `K = [-L, L]^d`: `Π_i (2L + 1 − |x_i|)`, zero once `|x_i| > 2L`.
fn box_count(x: &[i64], l: usize) -> usize {
    let side = 2 * l as i64 + 1;
    x.iter().map(|&xi| (side - xi.abs()).max(0) as usize).product()
}

/// Smallest box `K = [-L, L]^d` certifying `ε` for `C` on a truncated lattice.
///
/// `L` comes from the closed form; the certificate is then confirmed by
/// exhaustive counting. Fails with `WindowTooSmall` when `C·K` would leave
/// the window.
pub fn find_folner(group: &Arc<GroupModel>, c: &[usize], epsilon: f64) -> Result<FolnerCertificate> {
    let (dim, radius) = lattice_shape(group)?;
    check_epsilon(epsilon)?;
    if c.is_empty() {
        return Err(LtpError::InvalidArgument("C must be nonempty".into()));
    }
    let coords: Vec<Vec<i64>> = c
        .iter()
        .map(|&i| {
            group
                .lattice_coords(i)
                .ok_or_else(|| LtpError::InvalidArgument(format!("index {i} is outside the carrier")))
        })
        .collect::<Result<_>>()?;
    let reach = coords
        .iter()
        .flat_map(|x| x.iter().map(|v| v.unsigned_abs() as usize))
        .max()
        .unwrap_or(0);

    let certifies = |l: usize| {
        let size = (2 * l + 1).pow(dim as u32) as f64;
        coords.iter().all(|x| box_count(x, l) as f64 / size > 1.0 - epsilon)
    };
    let mut l = 0;
    while !certifies(l) {
        l += 1;
        if l + reach > radius {
            return Err(LtpError::WindowTooSmall {
                required: l + reach,
                available: radius,
            });
        }
    }
    if l + reach > radius {
        return Err(LtpError::WindowTooSmall {
            required: l + reach,
            available: radius,
        });
    }

    let k = lattice_box(group, l)?;
    let counts = intersection_counts(group, c, &k);
    let closed: Vec<usize> = coords.iter().map(|x| box_count(x, l)).collect();
    if counts != closed {
        return Err(LtpError::ModelValidation(format!(
            "box recount {counts:?} disagrees with closed form {closed:?}"
        )));
    }
    Ok(FolnerCertificate {
        group: group.clone(),
        c: c.to_vec(),
        epsilon,
        k,
        half_side: Some(l),
        counts,
    })
}

/// `K = G` on a finite group: every translate is `G` itself.
pub fn whole_group_certificate(group: &Arc<GroupModel>, c: &[usize], epsilon: f64) -> Result<FolnerCertificate> {
    if group.kind() != GroupKind::Finite {
        return Err(LtpError::Domain(format!("`{}` is not finite", group.spec())));
    }
    check_epsilon(epsilon)?;
    let k: Vec<usize> = (0..group.size()).collect();
    let counts = intersection_counts(group, c, &k);
    Ok(FolnerCertificate {
        group: group.clone(),
        c: c.to_vec(),
        epsilon,
        k,
        half_side: None,
        counts,
    })
}

/// The three terms of `(1−ε)∫_C f̃ ≤ ⟨f̃∗g, h⟩ ≤ ‖f‖ₚᵀ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingChain {
    pub lower: f64,
    pub pairing: f64,
    /// Certified upper estimate of `‖f‖ₚᵀ`.
    pub upper: f64,
}

impl AveragingChain {
    /// The smaller of the two gaps; nonnegative iff the chain holds.
    pub fn slack(&self) -> f64 {
        (self.pairing - self.lower).min(self.upper - self.pairing)
    }
}

fn expect_positive(f: &GFunction) -> Result<()> {
    if f.is_positive() {
        Ok(())
    } else {
        Err(LtpError::NotPositive("f must be real and nonnegative".into()))
    }
}

/// Evaluates the chain with `g = χ_K / |K|^{1/p}` and `h = χ_K / |K|^{1/q}`.
pub fn averaging_chain(f: &GFunction, cert: &FolnerCertificate, p: Exponent) -> Result<AveragingChain> {
    expect_positive(f)?;
    let group = f.group_arc();
    if !Arc::ptr_eq(&group, &cert.group) && group.spec() != cert.group.spec() {
        return Err(LtpError::ModelMismatch {
            left: group.spec().to_string(),
            right: cert.group.spec().to_string(),
        });
    }
    let measure_k = compensated_sum(cert.k.iter().map(|&i| group.weight(i)).collect::<Vec<_>>());
    let chi = GFunction::indicator(&group, cert.k.iter().copied());
    let g = chi.scale(Complex64::new(measure_k.powf(-1.0 / p.p()), 0.0));
    let h = if p.q().is_infinite() {
        chi
    } else {
        chi.scale(Complex64::new(measure_k.powf(-1.0 / p.q()), 0.0))
    };

    let ft = tilde(f, p)?;
    let pairing = inner(&convolve(&ft, &g)?.checked()?, &h)?.re;
    let on_c = compensated_sum(cert.c.iter().map(|&y| group.weight(y) * ft.values()[y].re).collect::<Vec<_>>());
    let upper = tempered_norm(f, p, &IterConfig::default())?.upper;
    Ok(AveragingChain {
        lower: (1.0 - cert.epsilon) * on_c,
        pairing,
        upper,
    })
}

/// Checks `(1−ε)∫_C f̃ ≤ ⟨f̃∗g, h⟩ ≤ ‖f‖ₚᵀ`: `observed` is the pairing and
/// `expected` the interval between the outer terms.
pub fn averaging_inequality_check(f: &GFunction, cert: &FolnerCertificate, p: Exponent) -> Result<CheckResult> {
    let chain = averaging_chain(f, cert, p)?;
    let tol = default_tolerance(f.group().kind());
    Ok(CheckResult::compare(
        "averaging_inequality",
        "averaging over a Følner set bounds the integral of f-tilde over C by the tempered norm",
        chain.pairing,
        Expected::Interval([chain.lower, chain.upper]),
        tol,
    )
    .with_notes(format!(
        "|K| = {}, worst ratio {:.6}, slack {:.3e}",
        cert.k.len(),
        cert.worst_ratio(),
        chain.slack()
    )))
}

/// Checks `‖f‖ₚᵀ = ∫ f ω_q` for positive `f` (`= ‖f‖₁` on unimodular
/// models).
///
/// Truncated lattices are compared at `p ∈ {1, 2}` only, where the norm is
/// computed on all of `ℤᵈ`; for other `p` the finite window section
/// underestimates it and the check is skipped.
pub fn positive_norm_equality(f: &GFunction, p: Exponent) -> Result<CheckResult> {
    expect_positive(f)?;
    const NAME: &str = "positive_norm_equality";
    const REF: &str = "positive tempered functions are exactly the positive weighted-integrable ones";
    let group = f.group();
    if group.kind() == GroupKind::LatticeTruncated && p.p() != 1.0 && p.p() != 2.0 {
        return Ok(CheckResult::skipped(
            NAME,
            REF,
            "window sections underestimate lattice norms for p other than 1 and 2",
        ));
    }
    let est = tempered_norm(f, p, &IterConfig::default())?;
    let expected = weighted_l1_norm(f, p);
    let mut notes = format!("method {}, |f|_p = {:.6e}", est.method.as_str(), lp_norm(f, p));
    if group.kind() == GroupKind::Quadrature {
        notes.push_str("; experimental on quadrature grids");
    }
    Ok(CheckResult::compare(NAME, REF, est.lower, Expected::Value(expected), default_tolerance(group.kind())).with_notes(notes))
}
