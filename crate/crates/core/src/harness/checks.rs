//! The check registry: every statement the suite verifies, the model
//! properties it needs, and how it is measured.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::amenability::{averaging_chain, find_folner, lattice_box, positive_norm_equality, whole_group_certificate};
use crate::convolution::{associativity_check, convolve};
use crate::error::{LtpError, Result};
use crate::group::{estimate_modular, gaussian_probe, translate, Element, GroupKind, GroupModel, HaarNormalization, TranslateSide};
use crate::lp::{decompose_l1_linf, ess_sup, lp_norm, weighted_l1_norm, Exponent, GFunction};
use crate::numeric::{random_complex_vec, seeded_rng};
use crate::spectral::{build_dual, mult_operator_norm};
use crate::tempered::{
    dirac_scaling_check, quasi_identity_blowup, re_im_closure_check, svd_norm, tempered_norm, IterConfig, NormEstimate,
    SVD_CAP,
};

use super::Expected;

/// Statements of the theory the registry must cover, one label each.
pub const ANCHORS: &[&str] = &[
    "convolution algebra",
    "tempered norm",
    "bounded-integrable decomposition",
    "dirac scaling",
    "unimodular iff l1-bounded",
    "compact iff lp equals tempered",
    "discrete iff banach algebra",
    "finite iff norms equivalent",
    "p = 1 and l1 inclusion",
    "identity and quasi identity",
    "real and imaginary parts",
    "weighted l1 inclusion",
    "positive cone equality",
    "folner averaging",
    "convolution theorem",
    "parseval",
    "product theorem",
    "inverse transform of products",
    "multiplication operator",
    "spectral tempered norm",
    "restricted plancherel isometry",
];

/// A model property a check depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Need {
    Abelian,
    Unimodular,
    Discrete,
    NonDiscrete,
    Finite,
    Normalization(HaarNormalization),
    Kinds(&'static [GroupKind]),
    MaxSize(usize),
    /// Lattice norms are computed on all of `ℤᵈ` only for `p ∈ {1, 2}`.
    WholeLatticeNorm,
}

impl Need {
    fn unmet(&self, g: &GroupModel, p: Exponent) -> Option<String> {
        let ok = match self {
            Need::Abelian => g.cyclic_factors().is_some(),
            Need::Unimodular => g.is_unimodular(),
            Need::Discrete => g.is_discrete(),
            Need::NonDiscrete => !g.is_discrete(),
            Need::Finite => g.kind() == GroupKind::Finite,
            Need::Normalization(n) => g.normalization() == *n,
            Need::Kinds(kinds) => kinds.contains(&g.kind()),
            Need::MaxSize(n) => g.size() <= *n,
            Need::WholeLatticeNorm => {
                g.kind() != GroupKind::LatticeTruncated || p.p() == 1.0 || p.p() == 2.0
            }
        };
        if ok {
            return None;
        }
        Some(match self {
            Need::Abelian => "needs a product of cyclic groups".into(),
            Need::Unimodular => "needs a unimodular model".into(),
            Need::Discrete => "needs a discrete model".into(),
            Need::NonDiscrete => "needs a non-discrete model".into(),
            Need::Finite => "needs a finite model".into(),
            Need::Normalization(n) => format!("needs {n} normalization"),
            Need::Kinds(kinds) => {
                let names: Vec<String> = kinds.iter().map(kind_name).collect();
                format!("needs a model of kind {}", names.join(" or "))
            }
            Need::MaxSize(n) => format!("needs at most {n} elements"),
            Need::WholeLatticeNorm => "window sections underestimate lattice norms for p other than 1 and 2".into(),
        })
    }
}

fn kind_name(k: &GroupKind) -> String {
    match k {
        GroupKind::Finite => "finite",
        GroupKind::LatticeTruncated => "lattice-truncated",
        GroupKind::Quadrature => "quadrature",
    }
    .into()
}

/// Which exponents a check runs at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponents {
    /// Once per requested exponent.
    Each,
    /// Once, at the given exponent.
    Fixed(f64),
    /// Once; the exponent is irrelevant.
    None,
}

/// What a check reports before the harness applies the tolerance.
#[derive(Debug, Clone)]
pub struct Measured {
    pub observed: f64,
    pub expected: Expected,
    pub notes: String,
}

impl Measured {
    fn zero(observed: f64, notes: impl Into<String>) -> Self {
        Measured {
            observed,
            expected: Expected::Value(0.0),
            notes: notes.into(),
        }
    }
}

/// Inputs shared by every check run.
pub struct CheckContext<'a> {
    pub group: &'a Arc<GroupModel>,
    pub p: Exponent,
    pub seed: u64,
    pub stream: u64,
    pub cfg: IterConfig,
}

impl CheckContext<'_> {
    fn rng(&self) -> ChaCha8Rng {
        seeded_rng(self.seed, self.stream)
    }
}

pub struct CheckDef {
    pub name: &'static str,
    pub anchor: &'static str,
    pub paper_ref: &'static str,
    pub needs: &'static [Need],
    pub exponents: Exponents,
    /// Overrides the per-kind default tolerance.
    pub tolerance: Option<f64>,
    pub run: fn(&CheckContext) -> Result<Measured>,
}

impl CheckDef {
    /// Reason to skip on this model, if any.
    pub fn skip_reason(&self, g: &GroupModel, p: Exponent) -> Option<String> {
        self.needs.iter().find_map(|n| n.unmet(g, p))
    }
}

const SAMPLES: usize = 4;
const DISCRETE_KINDS: &[GroupKind] = &[GroupKind::Finite, GroupKind::LatticeTruncated];

/// All checks, in report order.
pub fn registry() -> &'static [CheckDef] {
    REGISTRY
}

static REGISTRY: &[CheckDef] = &[
    CheckDef {
        name: "modular_function",
        anchor: "convolution algebra",
        paper_ref: "modular function from right translates of a probe",
        needs: &[],
        exponents: Exponents::None,
        tolerance: None,
        run: modular_function,
    },
    CheckDef {
        name: "associativity",
        anchor: "convolution algebra",
        paper_ref: "convolution is associative",
        needs: &[Need::Kinds(DISCRETE_KINDS)],
        exponents: Exponents::None,
        tolerance: None,
        run: associativity,
    },
    CheckDef {
        name: "tempered_norm_bracket",
        anchor: "tempered norm",
        paper_ref: "tempered norm as the operator norm of right convolution",
        needs: &[Need::Kinds(DISCRETE_KINDS)],
        exponents: Exponents::Each,
        tolerance: None,
        run: tempered_norm_bracket,
    },
    CheckDef {
        name: "l1_linf_decomposition",
        anchor: "bounded-integrable decomposition",
        paper_ref: "f = f chi_A + f chi_(G minus A) with A = {|f| <= 1}",
        needs: &[],
        exponents: Exponents::None,
        tolerance: None,
        run: l1_linf_decomposition,
    },
    CheckDef {
        name: "dirac_scaling",
        anchor: "dirac scaling",
        paper_ref: "right Dirac translates scale the tempered norm by a power of the modular function",
        needs: &[Need::WholeLatticeNorm],
        exponents: Exponents::Each,
        tolerance: None,
        run: dirac_scaling,
    },
    CheckDef {
        name: "unimodular_l1_bound",
        anchor: "unimodular iff l1-bounded",
        paper_ref: "tempered norm bounded by the L1 norm exactly on unimodular groups",
        needs: &[],
        exponents: Exponents::Each,
        tolerance: None,
        run: unimodular_l1_bound,
    },
    CheckDef {
        name: "compact_lp_bound",
        anchor: "compact iff lp equals tempered",
        paper_ref: "on compact groups the tempered norm is dominated by the Lp norm",
        needs: &[Need::Finite, Need::Normalization(HaarNormalization::Probability)],
        exponents: Exponents::Each,
        tolerance: None,
        run: compact_lp_bound,
    },
    CheckDef {
        name: "discrete_lp_bound",
        anchor: "discrete iff banach algebra",
        paper_ref: "on discrete groups the Lp norm is dominated by the tempered norm",
        needs: &[Need::Discrete, Need::Normalization(HaarNormalization::Counting)],
        exponents: Exponents::Each,
        tolerance: None,
        run: discrete_lp_bound,
    },
    CheckDef {
        name: "tempered_submultiplicative",
        anchor: "discrete iff banach algebra",
        paper_ref: "the tempered norm is submultiplicative under convolution",
        needs: &[Need::Discrete, Need::Normalization(HaarNormalization::Counting)],
        exponents: Exponents::Each,
        tolerance: None,
        run: tempered_submultiplicative,
    },
    CheckDef {
        name: "finite_norm_equivalence",
        anchor: "finite iff norms equivalent",
        paper_ref: "Lp and tempered norms are equivalent on finite groups",
        needs: &[Need::Finite],
        exponents: Exponents::Each,
        tolerance: None,
        run: finite_norm_equivalence,
    },
    CheckDef {
        name: "p1_equals_l1",
        anchor: "p = 1 and l1 inclusion",
        paper_ref: "for p = 1 the tempered norm is the L1 norm",
        needs: &[Need::Unimodular],
        exponents: Exponents::Fixed(1.0),
        tolerance: None,
        run: p1_equals_l1,
    },
    CheckDef {
        name: "l1_inclusion_discrete",
        anchor: "p = 1 and l1 inclusion",
        paper_ref: "on discrete groups L1 embeds in the tempered space contractively",
        needs: &[Need::Discrete, Need::Normalization(HaarNormalization::Counting)],
        exponents: Exponents::Each,
        tolerance: None,
        run: l1_inclusion_discrete,
    },
    CheckDef {
        name: "identity_dirac_norm",
        anchor: "identity and quasi identity",
        paper_ref: "the Dirac mass at the identity has tempered norm one",
        needs: &[Need::Discrete, Need::Normalization(HaarNormalization::Counting)],
        exponents: Exponents::Each,
        tolerance: None,
        run: identity_dirac_norm,
    },
    CheckDef {
        name: "quasi_identity_blowup",
        anchor: "identity and quasi identity",
        paper_ref: "a left quasi identity would need Lp norm at least n^(1-1/p)/K",
        needs: &[Need::NonDiscrete],
        exponents: Exponents::Each,
        tolerance: None,
        run: quasi_identity,
    },
    CheckDef {
        name: "re_im_closure",
        anchor: "real and imaginary parts",
        paper_ref: "real and imaginary parts are tempered with norm at most twice",
        needs: &[Need::Finite],
        exponents: Exponents::Each,
        tolerance: None,
        run: re_im_closure,
    },
    CheckDef {
        name: "weighted_l1_upper_bound",
        anchor: "weighted l1 inclusion",
        paper_ref: "tempered norm bounded by the omega_q-weighted L1 norm",
        needs: &[],
        exponents: Exponents::Each,
        tolerance: Some(1e-9),
        run: weighted_l1_upper_bound,
    },
    CheckDef {
        name: "positive_norm_equality",
        anchor: "positive cone equality",
        paper_ref: "positive tempered functions are exactly the positive weighted-integrable ones",
        needs: &[Need::WholeLatticeNorm],
        exponents: Exponents::Each,
        tolerance: None,
        run: positive_equality,
    },
    CheckDef {
        name: "folner_averaging",
        anchor: "folner averaging",
        paper_ref: "averaging over a Folner set bounds the integral of f-tilde over C by the tempered norm",
        needs: &[Need::Kinds(DISCRETE_KINDS)],
        exponents: Exponents::Each,
        tolerance: None,
        run: folner_averaging,
    },
    CheckDef {
        name: "convolution_theorem",
        anchor: "convolution theorem",
        paper_ref: "Fourier transform of a convolution is the product of transforms",
        needs: &[Need::Abelian],
        exponents: Exponents::None,
        tolerance: None,
        run: convolution_theorem,
    },
    CheckDef {
        name: "parseval",
        anchor: "parseval",
        paper_ref: "Parseval pairing between a group and its dual",
        needs: &[Need::Abelian],
        exponents: Exponents::None,
        tolerance: None,
        run: parseval,
    },
    CheckDef {
        name: "plancherel",
        anchor: "parseval",
        paper_ref: "the Fourier transform preserves L2 norms",
        needs: &[Need::Abelian],
        exponents: Exponents::None,
        tolerance: None,
        run: plancherel,
    },
    CheckDef {
        name: "character_orthogonality",
        anchor: "parseval",
        paper_ref: "characters are orthogonal with the dual normalization",
        needs: &[Need::Abelian],
        exponents: Exponents::None,
        tolerance: None,
        run: character_orthogonality,
    },
    CheckDef {
        name: "fourier_round_trip",
        anchor: "parseval",
        paper_ref: "inverse transform undoes the transform",
        needs: &[Need::Abelian],
        exponents: Exponents::None,
        tolerance: None,
        run: fourier_round_trip,
    },
    CheckDef {
        name: "product_theorem",
        anchor: "product theorem",
        paper_ref: "Fourier transform of a product is the convolution of transforms",
        needs: &[Need::Abelian],
        exponents: Exponents::None,
        tolerance: None,
        run: product_theorem,
    },
    CheckDef {
        name: "inverse_product_theorem",
        anchor: "inverse transform of products",
        paper_ref: "inverse transform of a product on the dual is a convolution",
        needs: &[Need::Abelian],
        exponents: Exponents::None,
        tolerance: None,
        run: inverse_product_theorem,
    },
    CheckDef {
        name: "multiplication_operator_norm",
        anchor: "multiplication operator",
        paper_ref: "the multiplication operator by f has norm equal to the sup norm of f",
        needs: &[Need::Kinds(DISCRETE_KINDS)],
        exponents: Exponents::None,
        tolerance: None,
        run: multiplication_operator,
    },
    CheckDef {
        name: "spectral_norm_agreement",
        anchor: "spectral tempered norm",
        paper_ref: "the p = 2 tempered norm equals the sup of the Fourier transform",
        needs: &[Need::Abelian, Need::MaxSize(SVD_CAP)],
        exponents: Exponents::Fixed(2.0),
        tolerance: None,
        run: spectral_norm_agreement,
    },
    CheckDef {
        name: "restricted_isometry",
        anchor: "restricted plancherel isometry",
        paper_ref: "tempered plus sup norm is preserved by the Fourier transform",
        needs: &[Need::Abelian],
        exponents: Exponents::Fixed(2.0),
        tolerance: None,
        run: restricted_isometry,
    },
];

// ---------------------------------------------------------------------------
// test functions

/// Radius inside which lattice test functions live, leaving room for a few
/// convolutions inside the window.
fn lattice_support(g: &GroupModel) -> f64 {
    (g.lattice_radius().unwrap_or(0) / 4).max(1) as f64
}

/// Random complex functions: full support on finite groups, supported in a
/// quarter of the window on lattices, and Gaussian-damped on grids.
fn random_functions(ctx: &CheckContext, rng: &mut ChaCha8Rng, count: usize) -> Result<Vec<GFunction>> {
    let g = ctx.group;
    (0..count)
        .map(|_| {
            let mut v = random_complex_vec(rng, g.size());
            match g.kind() {
                GroupKind::Finite => {}
                GroupKind::LatticeTruncated => {
                    let r = lattice_support(g);
                    for (i, z) in v.iter_mut().enumerate() {
                        if g.chart_distance(i) > r {
                            *z = Complex64::new(0.0, 0.0);
                        }
                    }
                }
                GroupKind::Quadrature => {
                    let probe = smooth_bump(g);
                    for (z, w) in v.iter_mut().zip(probe.values()) {
                        *z = Complex64::new(1.0, 0.0) + 0.25 * *z;
                        *z *= w;
                    }
                }
            }
            GFunction::new(g.clone(), v)
        })
        .collect()
}

fn positive_functions(ctx: &CheckContext, rng: &mut ChaCha8Rng, count: usize) -> Result<Vec<GFunction>> {
    Ok(random_functions(ctx, rng, count)?
        .into_iter()
        .map(|f| f.map(|z| Complex64::new(z.norm(), 0.0)))
        .collect())
}

/// Compactly supported bump `(1 − r²)³` on a grid model, placed so that
/// moderate Dirac translates stay inside the window. Other kinds get the
/// Gaussian probe.
pub fn smooth_bump(g: &Arc<GroupModel>) -> GFunction {
    if g.kind() != GroupKind::Quadrature {
        return gaussian_probe(g);
    }
    let radii = crate::group::window_radii(g);
    let (centre, axes): (Vec<f64>, Vec<f64>) = if radii.len() == 2 {
        (
            vec![-0.175 * radii[0], -0.125 * radii[1]],
            vec![0.3 * radii[0], 0.25 * radii[1]],
        )
    } else {
        (vec![0.0], vec![0.3 * radii[0]])
    };
    let values = (0..g.size())
        .map(|i| {
            let c = g.coordinates(i);
            let r2: f64 = c
                .iter()
                .zip(&centre)
                .zip(&axes)
                .map(|((x, m), s)| ((x - m) / s).powi(2))
                .sum();
            let v = if r2 < 1.0 { (1.0 - r2).powi(3) } else { 0.0 };
            Complex64::new(v, 0.0)
        })
        .collect();
    GFunction::new(g.clone(), values).expect("carrier-sized")
}

/// Non-identity test elements for translation checks.
fn test_elements(ctx: &CheckContext, rng: &mut ChaCha8Rng) -> Vec<Element> {
    let g = ctx.group;
    match g.kind() {
        GroupKind::Finite => {
            let n = g.size();
            if n == 1 {
                return vec![Element::Index(0)];
            }
            (0..2)
                .map(|_| {
                    let mut x = rng.gen_range(0..n);
                    if x == g.identity() {
                        x = (x + 1) % n;
                    }
                    Element::Index(x)
                })
                .collect()
        }
        GroupKind::LatticeTruncated => {
            let dim = g.lattice_dim().unwrap_or(1);
            let mut out = Vec::new();
            let unit: Vec<i64> = (0..dim).map(|a| i64::from(a == 0)).collect();
            out.extend(g.lattice_index(&unit).map(Element::Index));
            let diag: Vec<i64> = vec![-1; dim];
            out.extend(g.lattice_index(&diag).map(Element::Index));
            out
        }
        GroupKind::Quadrature => match g.line_step() {
            Some(h) => vec![Element::Line(2.0 * h), Element::Line(-3.0 * h)],
            None => vec![Element::affine(2.0, 0.0), Element::affine(0.5, 1.0)],
        },
    }
}

fn estimate(f: &GFunction, ctx: &CheckContext) -> Result<NormEstimate> {
    tempered_norm(f, ctx.p, &ctx.cfg)
}

/// Best certified lower bound on `‖f‖ₚᵀ`; the upper bound when the route is
/// not exact and a lower bound would be too weak for the comparison.
fn certified(est: &NormEstimate) -> f64 {
    if est.is_exact() {
        est.lower
    } else {
        est.upper
    }
}

fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

// ---------------------------------------------------------------------------
// checks

fn modular_function(ctx: &CheckContext) -> Result<Measured> {
    let g = ctx.group;
    let mut rng = ctx.rng();
    let probe = smooth_bump(g);
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for x in test_elements(ctx, &mut rng) {
        let est = estimate_modular(g, &x, &probe)?;
        let model = g.modular_at(&x)?;
        worst = worst.max((est / model - 1.0).abs());
        notes.push(format!("{est:.6}/{model:.6}"));
    }
    Ok(Measured::zero(worst, format!("estimate/model: {}", notes.join(", "))))
}

fn associativity(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let mut worst = 0.0f64;
    for _ in 0..2 {
        let fs = random_functions(ctx, &mut rng, 3)?;
        let residual = associativity_check(&fs[0], &fs[1], &fs[2])?;
        let fg = convolve(&fs[0], &fs[1])?.value;
        let scale = lp_norm(&convolve(&fg, &fs[2])?.value, two()).max(1.0);
        worst = worst.max(residual / scale);
    }
    Ok(Measured::zero(worst, "relative L2 residual of (f*g)*h - f*(g*h)"))
}

fn tempered_norm_bracket(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let fs = random_functions(ctx, &mut rng, SAMPLES)?;
    let gs = random_functions(ctx, &mut rng, SAMPLES)?;
    let mut worst = 0.0f64;
    let mut method = "";
    for (f, g) in fs.iter().zip(&gs) {
        let est = estimate(f, ctx)?;
        method = est.method.as_str();
        let action = lp_norm(&convolve(g, f)?.checked()?, ctx.p) / lp_norm(g, ctx.p);
        worst = worst
            .max(positive_part(est.lower - est.upper) / est.upper.max(1.0))
            .max(positive_part(action - est.upper) / est.upper.max(1.0));
    }
    Ok(Measured::zero(
        worst,
        format!("method {method}; excess of lower bound and of |g*f|_p/|g|_p over the upper bound"),
    ))
}

fn l1_linf_decomposition(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let mut worst = 0.0f64;
    for f in random_functions(ctx, &mut rng, SAMPLES)? {
        let f = f.scale(Complex64::new(2.0, 0.0));
        let (bounded, large) = decompose_l1_linf(&f);
        let rebuilt = f.sub(&bounded.add(&large)?)?;
        worst = worst
            .max(ess_sup(&rebuilt))
            .max(positive_part(ess_sup(&bounded) - 1.0));
        for (z, l) in f.values().iter().zip(large.values()) {
            if z.norm() <= 1.0 && l.norm() > 0.0 {
                worst = worst.max(l.norm());
            }
        }
    }
    Ok(Measured::zero(worst, "reassembly error and bound violations"))
}

fn dirac_scaling(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let f = match ctx.group.kind() {
        GroupKind::Quadrature => smooth_bump(ctx.group),
        _ => random_functions(ctx, &mut rng, 1)?.remove(0),
    };
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for x in test_elements(ctx, &mut rng) {
        let (ratio, expected) = dirac_scaling_check(&f, &x, ctx.p, &ctx.cfg)?;
        worst = worst.max((ratio / expected - 1.0).abs());
        notes.push(format!("{ratio:.6} vs {expected:.6}"));
    }
    Ok(Measured::zero(worst, format!("relative error; ratio vs expected: {}", notes.join(", "))))
}

fn unimodular_l1_bound(ctx: &CheckContext) -> Result<Measured> {
    let g = ctx.group;
    let mut rng = ctx.rng();
    if g.is_unimodular() {
        let mut worst = 0.0f64;
        for f in random_functions(ctx, &mut rng, SAMPLES)? {
            let l1 = lp_norm(&f, one());
            worst = worst.max(positive_part(estimate(&f, ctx)?.lower - l1) / l1.max(1.0));
        }
        return Ok(Measured::zero(worst, "excess of the tempered norm over the L1 norm"));
    }
    // the bound must fail: translates by elements with Δ(x) < 1 push the
    // tempered norm above the (translation-invariant) L1 norm
    let base = smooth_bump(g);
    let mut best = 0.0f64;
    for a in [2.0, 4.0] {
        let moved = translate(g, &base, &Element::affine(a, 0.0), TranslateSide::RightDirac)?;
        best = best.max(estimate(&moved, ctx)?.lower / lp_norm(&moved, one()));
    }
    if ctx.p.p() == 1.0 {
        return Ok(Measured {
            observed: best,
            expected: Expected::Interval([0.0, 1.0]),
            notes: "p = 1: the bound holds on every group".into(),
        });
    }
    Ok(Measured {
        observed: best,
        expected: Expected::Interval([1.0, f64::MAX]),
        notes: "non-unimodular: some translate has tempered norm above its L1 norm".into(),
    })
}

fn compact_lp_bound(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let mut worst = 0.0f64;
    for f in random_functions(ctx, &mut rng, SAMPLES)? {
        let est = estimate(&f, ctx)?;
        worst = worst.max(positive_part(est.upper - lp_norm(&f, ctx.p)));
    }
    Ok(Measured::zero(worst, "excess of the tempered upper bound over the Lp norm"))
}

fn discrete_lp_bound(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let mut worst = 0.0f64;
    for f in random_functions(ctx, &mut rng, SAMPLES)? {
        let est = estimate(&f, ctx)?;
        worst = worst.max(positive_part(lp_norm(&f, ctx.p) - certified(&est)));
    }
    Ok(Measured::zero(worst, "excess of the Lp norm over the tempered norm"))
}

fn tempered_submultiplicative(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let mut worst = 0.0f64;
    for _ in 0..2 {
        let fs = random_functions(ctx, &mut rng, 2)?;
        let prod = convolve(&fs[0], &fs[1])?.checked()?;
        let lhs = estimate(&prod, ctx)?.lower;
        let rhs = estimate(&fs[0], ctx)?.upper * estimate(&fs[1], ctx)?.upper;
        worst = worst.max(positive_part(lhs / rhs - 1.0));
    }
    Ok(Measured::zero(worst, "relative excess of |f*g| over |f||g| in tempered norm"))
}

fn finite_norm_equivalence(ctx: &CheckContext) -> Result<Measured> {
    let g = ctx.group;
    let mut rng = ctx.rng();
    let q = ctx.p.q();
    let w = g.weight(0);
    let total = w * g.size() as f64;
    let (lo, hi) = if q.is_infinite() {
        (1.0, 1.0)
    } else {
        (w.powf(1.0 / q), total.powf(1.0 / q))
    };
    let mut worst = 0.0f64;
    for f in random_functions(ctx, &mut rng, SAMPLES)? {
        let est = estimate(&f, ctx)?;
        let np = lp_norm(&f, ctx.p);
        worst = worst
            .max(positive_part(lo * np - certified(&est)) / np)
            .max(positive_part(est.upper - hi * np) / np);
    }
    Ok(Measured::zero(
        worst,
        format!("band [{lo:.6}, {hi:.6}] for the tempered-to-Lp ratio"),
    ))
}

fn p1_equals_l1(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let mut worst = 0.0f64;
    for f in random_functions(ctx, &mut rng, SAMPLES)? {
        let est = estimate(&f, ctx)?;
        let l1 = lp_norm(&f, one());
        worst = worst.max((est.lower - l1).abs() / l1.max(1.0));
    }
    Ok(Measured::zero(worst, "relative gap between the p = 1 tempered norm and the L1 norm"))
}

fn l1_inclusion_discrete(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let mut worst = 0.0f64;
    for f in random_functions(ctx, &mut rng, SAMPLES)? {
        let l1 = lp_norm(&f, one());
        worst = worst.max(positive_part(estimate(&f, ctx)?.lower - l1) / l1.max(1.0));
    }
    Ok(Measured::zero(worst, "excess of the tempered norm over the L1 norm"))
}

fn identity_dirac_norm(ctx: &CheckContext) -> Result<Measured> {
    let g = ctx.group;
    let est = estimate(&GFunction::dirac(g, g.identity()), ctx)?;
    Ok(Measured {
        observed: est.lower,
        expected: Expected::Value(1.0),
        notes: format!("method {}", est.method.as_str()),
    })
}

fn quasi_identity(ctx: &CheckContext) -> Result<Measured> {
    let g = ctx.group;
    let cell = g.weight(g.identity());
    let count = ((1.0 / cell).ceil() as usize).saturating_sub(1).clamp(1, 16);
    let bounds = quasi_identity_blowup(g, ctx.p, 1.0, count)?;
    let mut worst = 0.0f64;
    for (n, b) in bounds.iter().enumerate() {
        let n = (n + 1) as f64;
        worst = worst.max((b - n.powf(1.0 - 1.0 / ctx.p.p())).abs());
    }
    let monotone = bounds.windows(2).all(|w| w[1] >= w[0]);
    if !monotone {
        worst = f64::INFINITY;
    }
    Ok(Measured::zero(
        worst,
        format!("{count} shrinking neighbourhoods, last bound {:.6}", bounds.last().copied().unwrap_or(0.0)),
    ))
}

fn re_im_closure(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let mut worst = 0.0f64;
    for f in random_functions(ctx, &mut rng, SAMPLES)? {
        worst = worst.max(re_im_closure_check(&f, ctx.p, &ctx.cfg, 0.0)?.observed);
    }
    Ok(Measured {
        observed: worst,
        expected: Expected::Interval([0.0, 2.0]),
        notes: "largest ratio of |Re f| or |Im f| to |f| in tempered norm".into(),
    })
}

fn weighted_l1_upper_bound(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let mut fs = random_functions(ctx, &mut rng, SAMPLES)?;
    if ctx.group.kind() == GroupKind::Quadrature {
        fs.truncate(1);
    }
    let mut worst = 0.0f64;
    for f in fs {
        worst = worst.max(positive_part(estimate(&f, ctx)?.lower - weighted_l1_norm(&f, ctx.p)));
    }
    Ok(Measured::zero(worst, "excess of the lower bound over the weighted L1 norm"))
}

fn positive_equality(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let fs = match ctx.group.kind() {
        GroupKind::Quadrature => vec![smooth_bump(ctx.group)],
        _ => positive_functions(ctx, &mut rng, SAMPLES)?,
    };
    let mut worst = 0.0f64;
    let mut notes = String::new();
    for f in fs {
        let r = positive_norm_equality(&f, ctx.p)?;
        let Expected::Value(expected) = r.expected else {
            unreachable!("equality check has a point target")
        };
        let dev = (r.observed - expected).abs();
        if ctx.group.kind() == GroupKind::Quadrature {
            worst = worst.max(dev / expected);
        } else {
            worst = worst.max(dev);
        }
        notes = r.notes;
    }
    Ok(Measured::zero(worst, format!("gap to the weighted L1 norm; {notes}")))
}

fn folner_averaging(ctx: &CheckContext) -> Result<Measured> {
    let g = ctx.group;
    let mut rng = ctx.rng();
    let cert = if g.kind() == GroupKind::Finite {
        let c: Vec<usize> = (0..g.size().min(3)).collect();
        whole_group_certificate(g, &c, 0.1)?
    } else {
        let c = lattice_box(g, 1)?;
        let mut found = None;
        for eps in [0.1, 0.25, 0.5, 0.9] {
            match find_folner(g, &c, eps) {
                Ok(cert) => {
                    found = Some(cert);
                    break;
                }
                Err(LtpError::WindowTooSmall { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        found.ok_or(LtpError::WindowTooSmall {
            required: 2,
            available: g.lattice_radius().unwrap_or(0),
        })?
    };
    let mut fs = positive_functions(ctx, &mut rng, SAMPLES)?;
    if let Some(l) = cert.half_side() {
        // keep f̃ ∗ χ_K inside the window
        let room = g.lattice_radius().unwrap_or(0).saturating_sub(l) as f64;
        for f in fs.iter_mut() {
            *f = GFunction::from_fn(g, |i| {
                if g.chart_distance(i) <= room {
                    f.values()[i]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })?;
        }
    }
    let mut worst = 0.0f64;
    let mut min_slack = f64::INFINITY;
    for f in &fs {
        let chain = averaging_chain(f, &cert, ctx.p)?;
        let scale = chain.upper.max(1.0);
        worst = worst.max(positive_part(-chain.slack()) / scale);
        min_slack = min_slack.min(chain.slack());
    }
    Ok(Measured::zero(
        worst,
        format!(
            "epsilon {}, |K| = {}, worst ratio {:.6}, smallest slack {:.3e}",
            cert.epsilon(),
            cert.k().len(),
            cert.worst_ratio(),
            min_slack
        ),
    ))
}

fn pair(ctx: &CheckContext) -> Result<(GFunction, GFunction)> {
    let mut rng = ctx.rng();
    let mut fs = random_functions(ctx, &mut rng, 2)?;
    let g = fs.pop().expect("two samples");
    Ok((fs.pop().expect("two samples"), g))
}

fn relative(residual: f64, scale: f64) -> f64 {
    residual / scale.max(1.0)
}

fn convolution_theorem(ctx: &CheckContext) -> Result<Measured> {
    let dual = build_dual(ctx.group)?;
    let (f, g) = pair(ctx)?;
    let scale = lp_norm(&dual.fourier(&convolve(&f, &g)?.value)?, two());
    Ok(Measured::zero(
        relative(dual.convolution_theorem_check(&f, &g)?, scale),
        "relative L2 residual of (f*g)^ - f^ g^",
    ))
}

fn product_theorem(ctx: &CheckContext) -> Result<Measured> {
    let dual = build_dual(ctx.group)?;
    let (f, g) = pair(ctx)?;
    let scale = lp_norm(&dual.fourier(&f.mul(&g)?)?, two());
    Ok(Measured::zero(
        relative(dual.product_theorem_check(&f, &g)?, scale),
        "relative L2 residual of (fg)^ - f^ * g^",
    ))
}

fn parseval(ctx: &CheckContext) -> Result<Measured> {
    let dual = build_dual(ctx.group)?;
    let (f, g) = pair(ctx)?;
    let gh = dual.fourier(&g)?;
    let scale = lp_norm(&f, two()) * lp_norm(&g, two());
    Ok(Measured::zero(
        relative(dual.parseval_check(&f, &gh)?, scale),
        "relative gap between the pairings on the group and on the dual",
    ))
}

fn plancherel(ctx: &CheckContext) -> Result<Measured> {
    let dual = build_dual(ctx.group)?;
    let (f, _) = pair(ctx)?;
    Ok(Measured::zero(
        relative(dual.plancherel_residual(&f)?, lp_norm(&f, two())),
        "relative gap between |f|_2 and |f^|_2",
    ))
}

fn character_orthogonality(ctx: &CheckContext) -> Result<Measured> {
    let dual = build_dual(ctx.group)?;
    let scale = ctx.group.weight(0) * ctx.group.size() as f64;
    Ok(Measured::zero(
        relative(dual.orthogonality_residual(), scale),
        "largest Gram-matrix deviation relative to the diagonal",
    ))
}

fn fourier_round_trip(ctx: &CheckContext) -> Result<Measured> {
    let dual = build_dual(ctx.group)?;
    let (f, _) = pair(ctx)?;
    Ok(Measured::zero(
        relative(dual.round_trip_error(&f)?, ess_sup(&f)),
        "sup-norm error of inverse(fourier(f)) - f",
    ))
}

fn inverse_product_theorem(ctx: &CheckContext) -> Result<Measured> {
    let dual = build_dual(ctx.group)?;
    let (f, g) = pair(ctx)?;
    let (fh, gh) = (dual.fourier(&f)?, dual.fourier(&g)?);
    let scale = lp_norm(&dual.inverse_fourier(&fh.mul(&gh)?)?, two());
    Ok(Measured::zero(
        relative(dual.inverse_product_check(&fh, &gh)?, scale),
        "relative L2 residual of (FG)v - Fv * Gv",
    ))
}

fn multiplication_operator(ctx: &CheckContext) -> Result<Measured> {
    let mut rng = ctx.rng();
    let mut worst = 0.0f64;
    for f in random_functions(ctx, &mut rng, SAMPLES)? {
        let m = mult_operator_norm(&f);
        let sup = ess_sup(&f);
        worst = worst
            .max(relative((m.value - sup).abs(), sup))
            .max(relative((m.witness_ratio - sup).abs(), sup));
    }
    Ok(Measured::zero(worst, "relative gap of |M_f| and its witness ratio to |f|_inf"))
}

fn spectral_norm_agreement(ctx: &CheckContext) -> Result<Measured> {
    let dual = build_dual(ctx.group)?;
    let mut rng = ctx.rng();
    let mut worst = 0.0f64;
    for f in random_functions(ctx, &mut rng, SAMPLES)? {
        let svd = svd_norm(&f)?.lower;
        let spectral = ess_sup(&dual.fourier(&f)?);
        worst = worst.max(relative((svd - spectral).abs(), svd));
    }
    Ok(Measured::zero(worst, "relative gap between the SVD norm and sup |f^|"))
}

fn restricted_isometry(ctx: &CheckContext) -> Result<Measured> {
    let dual = build_dual(ctx.group)?;
    let mut rng = ctx.rng();
    let mut worst = 0.0f64;
    for f in random_functions(ctx, &mut rng, SAMPLES)? {
        let iso = dual.plancherel_restricted_isometry(&f)?;
        worst = worst.max(relative((iso.lhs - iso.rhs).abs(), iso.lhs));
    }
    Ok(Measured::zero(worst, "relative gap between the two sides"))
}

fn one() -> Exponent {
    Exponent::new(1.0).expect("valid")
}

fn two() -> Exponent {
    Exponent::new(2.0).expect("valid")
}
