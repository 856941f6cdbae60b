//! Haar-weighted Lebesgue norms and the elementary function transforms
//! (inversion, tilde, real/imaginary/positive parts, L¹ + L∞ splitting).

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LtpError, Result};
use crate::group::{Element, GroupModel, LEAK_THRESHOLD};
use crate::numeric::compensated_sum;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A complex-valued function on the carrier of a [`GroupModel`].
#[derive(Debug, Clone)]
pub struct GFunction {
    group: Arc<GroupModel>,
    values: Vec<Complex64>,
}

impl GFunction {
    pub fn new(group: Arc<GroupModel>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != group.size() {
            return Err(LtpError::InvalidArgument(format!(
                "{} values for a carrier of size {}",
                values.len(),
                group.size()
            )));
        }
        if let Some(i) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(LtpError::Domain(format!("non-finite value at index {i}")));
        }
        Ok(GFunction { group, values })
    }

    pub(crate) fn new_unchecked(group: &Arc<GroupModel>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), group.size());
        GFunction {
            group: Arc::clone(group),
            values,
        }
    }

    pub fn from_real(group: Arc<GroupModel>, values: &[f64]) -> Result<Self> {
        Self::new(group, values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(group: &Arc<GroupModel>) -> Self {
        Self::new_unchecked(group, vec![ZERO; group.size()])
    }

    pub fn from_fn<F: FnMut(usize) -> Complex64>(group: &Arc<GroupModel>, f: F) -> Result<Self> {
        Self::new(Arc::clone(group), (0..group.size()).map(f).collect())
    }

    /// `δ_x` as a function: `1 / w_x` at `x`, so that it acts as the Dirac
    /// measure under convolution.
    pub fn dirac(group: &Arc<GroupModel>, x: usize) -> Self {
        let mut v = vec![ZERO; group.size()];
        v[x] = Complex64::new(1.0 / group.weight(x), 0.0);
        Self::new_unchecked(group, v)
    }

    pub fn indicator<I: IntoIterator<Item = usize>>(group: &Arc<GroupModel>, set: I) -> Self {
        let mut v = vec![ZERO; group.size()];
        for i in set {
            v[i] = Complex64::new(1.0, 0.0);
        }
        Self::new_unchecked(group, v)
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn group_arc(&self) -> Arc<GroupModel> {
        Arc::clone(&self.group)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| *z == ZERO)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0)
    }

    /// Real and nonnegative everywhere.
    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0 && z.re >= 0.0)
    }

    /// Indices carrying nonzero values.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] != ZERO).collect()
    }

    pub(crate) fn expect_group(&self, g: &GroupModel) -> Result<()> {
        if std::ptr::eq(self.group(), g) || self.group.spec() == g.spec() {
            Ok(())
        } else {
            Err(LtpError::ModelMismatch {
                left: self.group.spec().to_string(),
                right: g.spec().to_string(),
            })
        }
    }

    pub(crate) fn expect_same(&self, other: &GFunction) -> Result<()> {
        other.expect_group(self.group())
    }

    pub fn map<F: FnMut(Complex64) -> Complex64>(&self, f: F) -> GFunction {
        Self::new_unchecked(&self.group, self.values.iter().copied().map(f).collect())
    }

    fn zip_with<F: FnMut(Complex64, Complex64) -> Complex64>(
        &self,
        other: &GFunction,
        mut f: F,
    ) -> Result<GFunction> {
        self.expect_same(other)?;
        Ok(Self::new_unchecked(
            &self.group,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &GFunction) -> Result<GFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GFunction) -> Result<GFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &GFunction) -> Result<GFunction> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> GFunction {
        self.map(|z| z * c)
    }
}

/// A Lebesgue exponent `1 <= p < ∞` with its conjugate `q` (`q = ∞` when `p = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    p: f64,
    q: f64,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(LtpError::InvalidExponent(p));
        }
        let q = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
        Ok(Exponent { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The conjugate exponent; `f64::INFINITY` for `p = 1`.
    pub fn q(&self) -> f64 {
        self.q
    }
}

/// Terms are sorted before compensated summation, so the result does not
/// depend on the order of the carrier.
fn haar_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    compensated_sum(terms)
}

/// `(Σ w_i |f_i|^p)^{1/p}`.
pub fn lp_norm(f: &GFunction, p: Exponent) -> f64 {
    let w = f.group().weights();
    let terms: Vec<f64> = if p.p == 2.0 {
        f.values.iter().zip(w).map(|(z, wi)| wi * z.norm_sqr()).collect()
    } else if p.p == 1.0 {
        f.values.iter().zip(w).map(|(z, wi)| wi * z.norm()).collect()
    } else {
        f.values.iter().zip(w).map(|(z, wi)| wi * z.norm().powf(p.p)).collect()
    };
    let s = haar_sum(terms);
    if p.p == 1.0 {
        s
    } else if p.p == 2.0 {
        s.sqrt()
    } else {
        s.powf(1.0 / p.p)
    }
}

/// Max modulus over cells of positive Haar weight.
pub fn ess_sup(f: &GFunction) -> f64 {
    f.values
        .iter()
        .zip(f.group().weights())
        .filter(|(_, w)| **w > 0.0)
        .map(|(z, _)| z.norm())
        .fold(0.0, f64::max)
}

/// `Σ w_i |f_i| Δ(x_i)^{-1/q}`, the norm of `L¹(G, ω_q)`.
pub fn weighted_l1_norm(f: &GFunction, p: Exponent) -> f64 {
    let g = f.group();
    let exponent = -1.0 / p.q;
    haar_sum(
        f.values
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let omega = if exponent == 0.0 { 1.0 } else { g.modular(i).powf(exponent) };
                g.weight(i) * z.norm() * omega
            })
            .collect(),
    )
}

/// `Σ w_i f_i conj(g_i)`.
pub fn inner(f: &GFunction, g: &GFunction) -> Result<Complex64> {
    f.expect_same(g)?;
    let w = f.group().weights();
    let terms: Vec<Complex64> = f
        .values
        .iter()
        .zip(&g.values)
        .zip(w)
        .map(|((a, b), wi)| a * b.conj() * wi)
        .collect();
    Ok(crate::numeric::compensated_sum_c(terms))
}

/// Split `f = f χ_A + f χ_{G∖A}` with `A = {|f| <= 1}`: a bounded part and an
/// integrable part.
pub fn decompose_l1_linf(f: &GFunction) -> (GFunction, GFunction) {
    let (mut bounded, mut large) = (vec![ZERO; f.len()], vec![ZERO; f.len()]);
    for (i, z) in f.values.iter().enumerate() {
        if z.norm() <= 1.0 {
            bounded[i] = *z;
        } else {
            large[i] = *z;
        }
    }
    (
        GFunction::new_unchecked(&f.group, bounded),
        GFunction::new_unchecked(&f.group, large),
    )
}

/// `f̌(x) = f(x⁻¹)`, interpolated on quadrature grids.
pub fn check(f: &GFunction) -> Result<GFunction> {
    let g = f.group();
    let mut lost = 0.0;
    let mut total = 0.0;
    for s in f.support() {
        let mass = g.weight(s) * f.values[s].norm();
        total += mass;
        let inv = g.inverse_element(&Element::Index(s))?;
        if g.locate(&inv)?.is_none() {
            lost += mass;
        }
    }
    if total > 0.0 && lost / total > LEAK_THRESHOLD {
        return Err(LtpError::WindowLeak {
            fraction: lost / total,
            threshold: LEAK_THRESHOLD,
        });
    }
    let mut out = vec![ZERO; f.len()];
    for (x, slot) in out.iter_mut().enumerate() {
        let inv = g.inverse_element(&Element::Index(x))?;
        if let Some(st) = g.locate(&inv)? {
            *slot = st.iter().map(|(i, c)| f.values[i] * c).sum();
        }
    }
    Ok(GFunction::new_unchecked(&f.group, out))
}

/// `f̃ = Δ^{-1/p} f̌`.
pub fn tilde(f: &GFunction, p: Exponent) -> Result<GFunction> {
    let checked = check(f)?;
    let g = f.group();
    let values = checked
        .values
        .iter()
        .enumerate()
        .map(|(i, z)| z * g.modular(i).powf(-1.0 / p.p))
        .collect();
    Ok(GFunction::new_unchecked(&f.group, values))
}

pub fn re(f: &GFunction) -> GFunction {
    f.map(|z| Complex64::new(z.re, 0.0))
}

pub fn im(f: &GFunction) -> GFunction {
    f.map(|z| Complex64::new(z.im, 0.0))
}

fn expect_real(f: &GFunction, what: &str) -> Result<()> {
    if f.is_real() {
        Ok(())
    } else {
        Err(LtpError::Domain(format!("{what} needs a real-valued function")))
    }
}

/// Positive part `max(f, 0)` of a real function.
pub fn pos(f: &GFunction) -> Result<GFunction> {
    expect_real(f, "positive part")?;
    Ok(f.map(|z| Complex64::new(z.re.max(0.0), 0.0)))
}

/// Negative part `max(-f, 0)` of a real function.
pub fn neg(f: &GFunction) -> Result<GFunction> {
    expect_real(f, "negative part")?;
    Ok(f.map(|z| Complex64::new((-z.re).max(0.0), 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::build_group;
    use crate::numeric::{random_complex_vec, seeded_rng};
    use proptest::prelude::*;

    fn group(text: &str) -> Arc<GroupModel> {
        build_group(&text.parse().unwrap()).unwrap()
    }

    fn real(g: &Arc<GroupModel>, v: &[f64]) -> GFunction {
        GFunction::from_real(Arc::clone(g), v).unwrap()
    }

    #[test]
    fn norms_on_z4() {
        let g = group("cyclic:4");
        let one = Exponent::new(1.0).unwrap();
        let two = Exponent::new(2.0).unwrap();
        assert_eq!(lp_norm(&real(&g, &[1.0, 1.0, 0.0, 0.0]), one), 2.0);
        assert_eq!(lp_norm(&real(&g, &[3.0, 4.0, 0.0, 0.0]), two), 5.0);
    }

    #[test]
    fn constant_one_on_probability_circle() {
        let g = group("circle:8@probability");
        let f = real(&g, &[1.0; 8]);
        for p in [1.0, 1.5, 2.0, 3.0, 7.0] {
            assert!((lp_norm(&f, Exponent::new(p).unwrap()) - 1.0).abs() < 1e-15);
        }
        assert_eq!(ess_sup(&f), 1.0);
    }

    #[test]
    fn conjugate_exponents() {
        for p in [1.0, 1.2, 1.5, 2.0, 3.0, 10.0] {
            let e = Exponent::new(p).unwrap();
            assert!((1.0 / e.p() + 1.0 / e.q() - 1.0).abs() <= 1e-15);
        }
        assert_eq!(Exponent::new(1.0).unwrap().q(), f64::INFINITY);
        assert!(Exponent::new(0.5).is_err());
        assert!(Exponent::new(f64::INFINITY).is_err());
    }

    #[test]
    fn weighted_l1_reduces_to_l1_on_unimodular() {
        let g = group("dihedral:3");
        let f = real(&g, &[1.0, -2.0, 0.5, 0.0, 3.0, -1.0]);
        for p in [1.0, 2.0, 4.0] {
            let e = Exponent::new(p).unwrap();
            assert_eq!(weighted_l1_norm(&f, e), lp_norm(&f, Exponent::new(1.0).unwrap()));
        }
        assert_eq!(weighted_l1_norm(&GFunction::zeros(&g), Exponent::new(2.0).unwrap()), 0.0);
    }

    #[test]
    fn weighted_l1_single_affine_cell() {
        let g = group("affine:0.25:2:0.25:4");
        let cell = g
            .locate(&Element::Affine { u: 2.0, b: 0.0 })
            .unwrap()
            .unwrap()
            .exact()
            .unwrap();
        // Δ = e^{-2} there, so ω_2 = Δ^{-1/2} = e
        assert!((g.modular(cell) - (-2f64).exp()).abs() < 1e-15);
        let f = GFunction::indicator(&g, [cell]);
        let got = weighted_l1_norm(&f, Exponent::new(2.0).unwrap());
        let expected = g.weight(cell) * 1f64.exp();
        assert!((got - expected).abs() < 1e-15 * expected);
    }

    #[test]
    fn threshold_split() {
        let g = group("cyclic:4");
        let (a, b) = decompose_l1_linf(&real(&g, &[0.5, 2.0, 1.0, 3.0]));
        assert_eq!(a.values(), real(&g, &[0.5, 0.0, 1.0, 0.0]).values());
        assert_eq!(b.values(), real(&g, &[0.0, 2.0, 0.0, 3.0]).values());
        let small = real(&g, &[0.5, -1.0, 0.25, 0.0]);
        let (a, b) = decompose_l1_linf(&small);
        assert_eq!(a.values(), small.values());
        assert!(b.is_zero());
    }

    #[test]
    fn tilde_preserves_norm_on_unimodular() {
        let g = group("symmetric:3");
        let mut rng = seeded_rng(11, 0);
        let f = GFunction::new(g.clone(), random_complex_vec(&mut rng, 6)).unwrap();
        let p = Exponent::new(3.0).unwrap();
        let t = tilde(&f, p).unwrap();
        let c = check(&f).unwrap();
        assert!((lp_norm(&t, p) - lp_norm(&f, p)).abs() < 1e-15);
        assert!((lp_norm(&c, p) - lp_norm(&f, p)).abs() < 1e-15);
    }

    #[test]
    fn tilde_is_an_involution_on_finite_models() {
        let g = group("product:dihedral:3+cyclic:2");
        let mut rng = seeded_rng(12, 0);
        let f = GFunction::new(g.clone(), random_complex_vec(&mut rng, g.size())).unwrap();
        let p = Exponent::new(1.7).unwrap();
        let back = tilde(&tilde(&f, p).unwrap(), p).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn tilde_preserves_norm_on_affine_grid() {
        // f supported near the identity so that inversion stays in the window
        let g = group("affine:0.125:2:0.125:4");
        let f = GFunction::from_fn(&g, |i| {
            let c = g.coordinates(i);
            let (u, b) = (c[0], c[1]);
            Complex64::new((-(u * u) / 0.08 - b * b / 0.08).exp(), 0.0)
        })
        .unwrap();
        for p in [1.5, 2.0, 3.0] {
            let e = Exponent::new(p).unwrap();
            let rel = (lp_norm(&tilde(&f, e).unwrap(), e) / lp_norm(&f, e) - 1.0).abs();
            assert!(rel < 5e-3, "p = {p}: relative error {rel}");
        }
    }

    #[test]
    fn positive_and_negative_parts() {
        let g = group("cyclic:5");
        let f = real(&g, &[1.0, -2.0, 0.0, 3.5, -0.25]);
        let (p, n) = (pos(&f).unwrap(), neg(&f).unwrap());
        assert_eq!(p.sub(&n).unwrap().values(), f.values());
        for (a, b) in p.values().iter().zip(n.values()) {
            assert_eq!(a * b, ZERO);
        }
        let complex = f.map(|z| z * Complex64::new(0.0, 1.0));
        assert!(matches!(pos(&complex), Err(LtpError::Domain(_))));
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = group("cyclic:2");
        assert!(GFunction::from_real(g.clone(), &[1.0, f64::NAN]).is_err());
        assert!(GFunction::from_real(g, &[1.0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn holder_inequality(seed in any::<u64>(), p in 1.05f64..6.0) {
            let g = group("cyclic:12");
            let mut rng = seeded_rng(seed, 1);
            let f = GFunction::new(g.clone(), random_complex_vec(&mut rng, 12)).unwrap();
            let h = GFunction::new(g.clone(), random_complex_vec(&mut rng, 12)).unwrap();
            let e = Exponent::new(p).unwrap();
            let q = Exponent::new(e.q()).unwrap();
            let lhs = inner(&f, &h).unwrap().norm();
            prop_assert!(lhs <= lp_norm(&f, e) * lp_norm(&h, q) + 1e-12);
        }

        #[test]
        fn real_and_imaginary_parts_are_dominated(seed in any::<u64>(), p in 1.0f64..5.0) {
            let g = group("cyclic:9");
            let mut rng = seeded_rng(seed, 2);
            let f = GFunction::new(g.clone(), random_complex_vec(&mut rng, 9)).unwrap();
            let e = Exponent::new(p).unwrap();
            prop_assert!(lp_norm(&re(&f), e) <= lp_norm(&f, e) + 1e-15);
            prop_assert!(lp_norm(&im(&f), e) <= lp_norm(&f, e) + 1e-15);
        }

        #[test]
        fn decomposition_parts(values in proptest::collection::vec(-4.0f64..4.0, 10)) {
            let g = group("cyclic:10");
            let f = GFunction::from_real(g.clone(), &values).unwrap();
            let (small, large) = decompose_l1_linf(&f);
            let sum = small.add(&large).unwrap();
            prop_assert_eq!(sum.values(), f.values());
            prop_assert!(ess_sup(&small) <= 1.0);
            for (i, z) in large.values().iter().enumerate() {
                prop_assert!(*z == ZERO || f.values()[i].norm() > 1.0);
            }
        }
    }
}
