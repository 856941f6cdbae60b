//! Desk-scale models of locally compact groups.
//!
//! A [`GroupModel`] is an indexed carrier with a group product, left Haar
//! weights and modular-function values. Finite groups are exact. Truncated
//! lattices are exact inside the window and send everything else to an
//! absorbing out-of-window state. Quadrature models (`r`, `affine`) live on
//! coordinate grids; products are computed in exact coordinates and located
//! on the grid through an interpolation [`Stencil`].

mod finite;
mod ops;
pub mod spec;

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

pub use ops::{estimate_modular, gaussian_probe, translate, TranslateSide};
pub(crate) use ops::window_radii;
pub use spec::{GroupShape, GroupSpec, HaarNormalization};

use crate::error::{LtpError, Result};
use crate::numeric::seeded_rng;
use finite::{Factor, FiniteProduct};

/// Largest carrier `build_group` accepts by default.
pub const DEFAULT_SIZE_CAP: usize = 1 << 20;
/// Fraction of mass that may leave a truncation window before an operation fails.
pub const LEAK_THRESHOLD: f64 = 1e-6;

const TABLE_CAP: usize = 1024;
const EXHAUSTIVE_AXIOM_CAP: usize = 512;
const SAMPLED_AXIOM_TRIPLES: usize = 20_000;
const SNAP_TOL: f64 = 1e-9;
/// Relative tolerance for `Δ(xy) = Δ(x)Δ(y)` on quadrature models.
pub const MODULAR_MULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKind {
    Finite,
    LatticeTruncated,
    Quadrature,
}

/// A group element: a carrier index, or a point in the coordinate chart of a
/// quadrature model (which need not lie on the grid).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    Index(usize),
    Line(f64),
    /// `(a, b)` with `u = ln a`.
    Affine { u: f64, b: f64 },
}

impl Element {
    /// The affine element `(a, b)`.
    pub fn affine(a: f64, b: f64) -> Self {
        Element::Affine { u: a.ln(), b }
    }
}

/// Interpolation stencil: at most four `(index, weight)` pairs, weights
/// summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    idx: [usize; 4],
    wt: [f64; 4],
    len: usize,
}

impl Stencil {
    fn single(i: usize) -> Self {
        Stencil {
            idx: [i, 0, 0, 0],
            wt: [1.0, 0.0, 0.0, 0.0],
            len: 1,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |k| (self.idx[k], self.wt[k]))
    }

    /// The grid index when the point sits exactly on a node.
    pub fn exact(&self) -> Option<usize> {
        (self.len == 1).then_some(self.idx[0])
    }

    /// Node carrying the largest interpolation weight.
    pub fn nearest(&self) -> usize {
        let mut best = 0;
        for k in 1..self.len {
            if self.wt[k] > self.wt[best] {
                best = k;
            }
        }
        self.idx[best]
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Coord {
    Fin(usize),
    Lat([i64; 2]),
    Line(f64),
    Aff { u: f64, b: f64 },
}

#[derive(Debug, Clone)]
enum Carrier {
    Finite(FiniteProduct),
    Lattice { dim: usize, radius: i64 },
    Line { step: f64, half: i64 },
    Affine(AffineGrid),
}

#[derive(Debug, Clone)]
struct AffineGrid {
    u_step: f64,
    b_step: f64,
    u_half: i64,
    b_half: i64,
}

impl AffineGrid {
    fn b_count(&self) -> usize {
        (2 * self.b_half + 1) as usize
    }
}

/// Immutable model of `(G, λ, Δ)`.
#[derive(Debug, Clone)]
pub struct GroupModel {
    spec: GroupSpec,
    kind: GroupKind,
    carrier: Carrier,
    size: usize,
    identity: usize,
    weights: Vec<f64>,
    modular: Vec<f64>,
    inverse: Vec<Option<usize>>,
    table: Option<Vec<u32>>,
}

/// Build a model from its spec with the default size cap.
pub fn build_group(spec: &GroupSpec) -> Result<Arc<GroupModel>> {
    build_group_with_cap(spec, DEFAULT_SIZE_CAP)
}

pub fn build_group_with_cap(spec: &GroupSpec, cap: usize) -> Result<Arc<GroupModel>> {
    let size = carrier_size(&spec.shape)?;
    if size > cap {
        return Err(LtpError::Resource {
            what: format!("group `{spec}`"),
            requested: size,
            cap,
        });
    }
    let model = Arc::new(GroupModel::assemble(spec.clone(), size)?);
    model.validate()?;
    Ok(model)
}

fn half_count(radius: f64, step: f64) -> i64 {
    (radius / step + SNAP_TOL).floor() as i64
}

fn carrier_size(shape: &GroupShape) -> Result<usize> {
    let overflow = || LtpError::Resource {
        what: format!("group `{shape}`"),
        requested: usize::MAX,
        cap: DEFAULT_SIZE_CAP,
    };
    let size = match shape {
        GroupShape::Cyclic(n) | GroupShape::Circle(n) => *n,
        GroupShape::Dihedral(n) => n.checked_mul(2).ok_or_else(overflow)?,
        GroupShape::Symmetric(m) => finite::symmetric_order(*m).ok_or_else(overflow)?,
        GroupShape::Product(parts) => parts.iter().try_fold(1usize, |acc, p| {
            acc.checked_mul(carrier_size(p)?).ok_or_else(overflow)
        })?,
        GroupShape::Lattice { dim, radius } => {
            let side = radius.checked_mul(2).and_then(|s| s.checked_add(1));
            side.and_then(|s| s.checked_pow(*dim as u32)).ok_or_else(overflow)?
        }
        GroupShape::RealLine { step, radius } => {
            let half = half_count(*radius, *step);
            usize::try_from(2 * half + 1).map_err(|_| overflow())?
        }
        GroupShape::Affine {
            u_step,
            u_radius,
            b_step,
            b_radius,
        } => {
            let nu = 2 * half_count(*u_radius, *u_step) + 1;
            let nb = 2 * half_count(*b_radius, *b_step) + 1;
            usize::try_from(nu)
                .ok()
                .and_then(|a| a.checked_mul(usize::try_from(nb).ok()?))
                .ok_or_else(overflow)?
        }
    };
    Ok(size)
}

fn factor_of(shape: &GroupShape) -> Factor {
    match shape {
        GroupShape::Cyclic(n) | GroupShape::Circle(n) => Factor::cyclic(*n),
        GroupShape::Dihedral(n) => Factor::dihedral(*n),
        GroupShape::Symmetric(m) => Factor::symmetric(*m),
        other => unreachable!("non-finite factor {other}"),
    }
}

impl GroupModel {
    fn assemble(spec: GroupSpec, size: usize) -> Result<Self> {
        let (kind, carrier) = match &spec.shape {
            GroupShape::Product(parts) => (
                GroupKind::Finite,
                Carrier::Finite(FiniteProduct::new(parts.iter().map(factor_of).collect())?),
            ),
            shape if shape.is_finite() => (
                GroupKind::Finite,
                Carrier::Finite(FiniteProduct::new(vec![factor_of(shape)])?),
            ),
            GroupShape::Lattice { dim, radius } => (
                GroupKind::LatticeTruncated,
                Carrier::Lattice {
                    dim: *dim,
                    radius: *radius as i64,
                },
            ),
            GroupShape::RealLine { step, radius } => (
                GroupKind::Quadrature,
                Carrier::Line {
                    step: *step,
                    half: half_count(*radius, *step),
                },
            ),
            GroupShape::Affine {
                u_step,
                u_radius,
                b_step,
                b_radius,
            } => (
                GroupKind::Quadrature,
                Carrier::Affine(AffineGrid {
                    u_step: *u_step,
                    b_step: *b_step,
                    u_half: half_count(*u_radius, *u_step),
                    b_half: half_count(*b_radius, *b_step),
                }),
            ),
            _ => unreachable!(),
        };

        let mut model = GroupModel {
            spec,
            kind,
            carrier,
            size,
            identity: 0,
            weights: Vec::new(),
            modular: Vec::new(),
            inverse: Vec::new(),
            table: None,
        };
        model.identity = model.locate_coord(model.identity_coord()).and_then(|s| s.exact()).ok_or_else(
            || LtpError::ModelValidation("identity is not a grid node".into()),
        )?;

        let probability = model.spec.normalization == HaarNormalization::Probability;
        model.weights = (0..size)
            .map(|i| match (&model.carrier, model.coord_of_index(i)) {
                (Carrier::Finite(_), _) if probability => 1.0 / size as f64,
                (Carrier::Finite(_), _) | (Carrier::Lattice { .. }, _) => 1.0,
                (Carrier::Line { step, .. }, _) => *step,
                (Carrier::Affine(g), Coord::Aff { u, .. }) => (-u).exp() * g.u_step * g.b_step,
                _ => unreachable!(),
            })
            .collect();
        model.modular = (0..size)
            .map(|i| model.modular_coord(model.coord_of_index(i)))
            .collect();
        model.inverse = (0..size)
            .map(|i| {
                let c = model.inv_coord(model.coord_of_index(i));
                model.locate_coord(c).map(|s| s.nearest())
            })
            .collect();
        if let Carrier::Finite(fp) = &model.carrier {
            if size <= TABLE_CAP {
                let mut table = Vec::with_capacity(size * size);
                for a in 0..size {
                    for b in 0..size {
                        table.push(fp.mul(a, b) as u32);
                    }
                }
                model.table = Some(table);
            }
        }
        Ok(model)
    }

    fn validate(self: &Arc<Self>) -> Result<()> {
        let fail = |msg: String| Err(LtpError::ModelValidation(msg));
        for i in 0..self.size {
            if !(self.weights[i] > 0.0 && self.weights[i].is_finite()) {
                return fail(format!("Haar weight at {i} is {}", self.weights[i]));
            }
            if !(self.modular[i] > 0.0 && self.modular[i].is_finite()) {
                return fail(format!("modular value at {i} is {}", self.modular[i]));
            }
        }
        if self.modular[self.identity] != 1.0 {
            return fail("modular function is not 1 at the identity".into());
        }
        match self.kind {
            GroupKind::Finite => self.validate_finite(),
            GroupKind::LatticeTruncated => {
                for i in 0..self.size {
                    let j = self.inverse[i].ok_or_else(|| {
                        LtpError::ModelValidation(format!("lattice point {i} has no inverse"))
                    })?;
                    if self.op(i, j) != Some(self.identity) {
                        return fail(format!("inverse of lattice point {i} is wrong"));
                    }
                }
                Ok(())
            }
            GroupKind::Quadrature => self.validate_quadrature(),
        }
    }

    fn validate_finite(&self) -> Result<()> {
        let n = self.size;
        let e = self.identity;
        for i in 0..n {
            if self.op(e, i) != Some(i) || self.op(i, e) != Some(i) {
                return Err(LtpError::ModelValidation(format!("identity fails at {i}")));
            }
            let j = self.inverse[i].expect("finite inverses are total");
            if self.op(i, j) != Some(e) || self.op(j, i) != Some(e) {
                return Err(LtpError::ModelValidation(format!("inverse fails at {i}")));
            }
            if self.modular[i] != 1.0 {
                return Err(LtpError::ModelValidation("finite group is not unimodular".into()));
            }
        }
        let assoc = |a: usize, b: usize, c: usize| {
            let ab = self.op_exact(a, b);
            let bc = self.op_exact(b, c);
            self.op_exact(ab, c) == self.op_exact(a, bc)
        };
        if n <= EXHAUSTIVE_AXIOM_CAP {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if !assoc(a, b, c) {
                            return Err(LtpError::ModelValidation(format!(
                                "associativity fails at ({a}, {b}, {c})"
                            )));
                        }
                    }
                }
            }
        } else {
            let mut rng = seeded_rng(0x5eed, n as u64);
            for _ in 0..SAMPLED_AXIOM_TRIPLES {
                let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                if !assoc(a, b, c) {
                    return Err(LtpError::ModelValidation(format!(
                        "associativity fails at ({a}, {b}, {c})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn validate_quadrature(self: &Arc<Self>) -> Result<()> {
        let mut rng = seeded_rng(0x5eed, self.size as u64);
        for _ in 0..256 {
            let a = self.coord_of_index(rng.gen_range(0..self.size));
            let b = self.coord_of_index(rng.gen_range(0..self.size));
            let lhs = self.modular_coord(self.mul_coord(a, b));
            let rhs = self.modular_coord(a) * self.modular_coord(b);
            if (lhs - rhs).abs() > MODULAR_MULT_TOL * rhs {
                return Err(LtpError::ModelValidation(format!(
                    "modular function is not multiplicative: {lhs} vs {rhs}"
                )));
            }
        }
        // Cross-check the closed-form modular function against translation.
        // The tolerance is a quarter of the gap to the reciprocal convention;
        // windows too small to hold the translated probe skip the check.
        let probe = gaussian_probe(self);
        let shift = match &self.carrier {
            Carrier::Line { step, .. } => Element::Line(*step),
            Carrier::Affine(g) => Element::Affine {
                u: g.u_step,
                b: g.b_step,
            },
            _ => unreachable!(),
        };
        let stored = self.modular_at(&shift)?;
        let estimated = match estimate_modular(self, &shift, &probe) {
            Ok(v) => v,
            Err(LtpError::WindowLeak { .. }) => return Ok(()),
            Err(e) => return Err(e),
        };
        let gap = (stored - 1.0 / stored).abs();
        let tol = if gap > 0.0 { 0.25 * gap } else { 1e-2 };
        if (estimated - stored).abs() > tol {
            return Err(LtpError::ModelValidation(format!(
                "estimated modular value {estimated} disagrees with closed form {stored}"
            )));
        }
        Ok(())
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn modular_values(&self) -> &[f64] {
        &self.modular
    }

    pub fn modular(&self, i: usize) -> f64 {
        self.modular[i]
    }

    pub fn normalization(&self) -> HaarNormalization {
        self.spec.normalization
    }

    pub fn is_discrete(&self) -> bool {
        self.kind != GroupKind::Quadrature
    }

    pub fn is_compact(&self) -> bool {
        self.kind == GroupKind::Finite
    }

    pub fn is_unimodular(&self) -> bool {
        !matches!(self.carrier, Carrier::Affine(_))
    }

    pub fn is_abelian(&self) -> bool {
        match &self.carrier {
            Carrier::Finite(fp) => fp.cyclic_orders().is_some(),
            Carrier::Affine(_) => false,
            _ => true,
        }
    }

    /// Orders `(n_1, ..., n_d)` when the model is a declared product of cyclic groups.
    pub fn cyclic_factors(&self) -> Option<Vec<usize>> {
        match &self.carrier {
            Carrier::Finite(fp) => fp.cyclic_orders(),
            _ => None,
        }
    }

    /// Integer coordinates of a lattice point.
    pub fn lattice_coords(&self, i: usize) -> Option<Vec<i64>> {
        match (&self.carrier, self.coord_of_index(i)) {
            (Carrier::Lattice { dim, .. }, Coord::Lat(c)) => Some(c[..*dim].to_vec()),
            _ => None,
        }
    }

    pub fn lattice_index(&self, coords: &[i64]) -> Option<usize> {
        match &self.carrier {
            Carrier::Lattice { dim, .. } if coords.len() == *dim => {
                let mut c = [0i64; 2];
                c[..*dim].copy_from_slice(coords);
                self.locate_coord(Coord::Lat(c)).and_then(|s| s.exact())
            }
            _ => None,
        }
    }

    pub fn lattice_dim(&self) -> Option<usize> {
        match &self.carrier {
            Carrier::Lattice { dim, .. } => Some(*dim),
            _ => None,
        }
    }

    pub fn lattice_radius(&self) -> Option<usize> {
        match &self.carrier {
            Carrier::Lattice { radius, .. } => Some(*radius as usize),
            _ => None,
        }
    }

    /// Grid step of a real-line model.
    pub fn line_step(&self) -> Option<f64> {
        match &self.carrier {
            Carrier::Line { step, .. } => Some(*step),
            _ => None,
        }
    }

    /// Chart coordinates of a carrier index: mixed-radix digits for finite
    /// groups, integer tuple for lattices, `x` for the line, `(u, b)` for affine.
    pub fn coordinates(&self, i: usize) -> Vec<f64> {
        match (&self.carrier, self.coord_of_index(i)) {
            (Carrier::Finite(fp), _) => fp.digits(i).into_iter().map(|d| d as f64).collect(),
            (Carrier::Lattice { dim, .. }, Coord::Lat(c)) => {
                c[..*dim].iter().map(|&v| v as f64).collect()
            }
            (_, Coord::Line(x)) => vec![x],
            (_, Coord::Aff { u, b }) => vec![u, b],
            _ => unreachable!(),
        }
    }

    /// Distance from the identity in the model's chart (sup over coordinates).
    pub fn chart_distance(&self, i: usize) -> f64 {
        match (&self.carrier, self.coord_of_index(i)) {
            (Carrier::Finite(fp), _) => fp.distance(i),
            (_, Coord::Lat(c)) => c[0].abs().max(c[1].abs()) as f64,
            (_, Coord::Line(x)) => x.abs(),
            (_, Coord::Aff { u, b }) => u.abs().max(b.abs()),
            _ => unreachable!(),
        }
    }

    /// Group product of two carrier indices; `None` is the out-of-window state.
    /// Quadrature products are snapped to the nearest grid node.
    pub fn op(&self, a: usize, b: usize) -> Option<usize> {
        if let Some(t) = &self.table {
            return Some(t[a * self.size + b] as usize);
        }
        let c = self.mul_coord(self.coord_of_index(a), self.coord_of_index(b));
        self.locate_coord(c).map(|s| s.nearest())
    }

    fn op_exact(&self, a: usize, b: usize) -> usize {
        self.op(a, b).expect("finite products stay in the carrier")
    }

    /// Inverse index (snapped on quadrature models); `None` when outside the window.
    pub fn inv(&self, a: usize) -> Option<usize> {
        self.inverse[a]
    }

    /// Interpolation stencil of `a·b`, or `None` when it leaves the window.
    pub fn product_stencil(&self, a: &Element, b: &Element) -> Result<Option<Stencil>> {
        let c = self.mul_coord(self.coord_of(a)?, self.coord_of(b)?);
        Ok(self.locate_coord(c))
    }

    pub fn inverse_element(&self, a: &Element) -> Result<Element> {
        let c = self.inv_coord(self.coord_of(a)?);
        Ok(self.element_of_coord(c))
    }

    pub fn locate(&self, a: &Element) -> Result<Option<Stencil>> {
        Ok(self.locate_coord(self.coord_of(a)?))
    }

    pub fn modular_at(&self, a: &Element) -> Result<f64> {
        Ok(self.modular_coord(self.coord_of(a)?))
    }

    /// Stencil of `x·z⁻¹` for carrier indices; the hot path of convolution.
    pub(crate) fn stencil_x_zinv(&self, x: usize, z: usize) -> Option<Stencil> {
        if let Some(t) = &self.table {
            let zi = self.inverse[z].expect("finite inverses are total");
            return Some(Stencil::single(t[x * self.size + zi] as usize));
        }
        let c = self.mul_coord(
            self.coord_of_index(x),
            self.inv_coord(self.coord_of_index(z)),
        );
        self.locate_coord(c)
    }

    /// Whether the exact product `a·b` of two carrier indices stays in the window.
    pub(crate) fn product_in_window(&self, a: usize, b: usize) -> bool {
        if self.table.is_some() || matches!(self.carrier, Carrier::Finite(_)) {
            return true;
        }
        let c = self.mul_coord(self.coord_of_index(a), self.coord_of_index(b));
        self.locate_coord(c).is_some()
    }

    fn identity_coord(&self) -> Coord {
        match &self.carrier {
            Carrier::Finite(_) => Coord::Fin(0),
            Carrier::Lattice { .. } => Coord::Lat([0, 0]),
            Carrier::Line { .. } => Coord::Line(0.0),
            Carrier::Affine(_) => Coord::Aff { u: 0.0, b: 0.0 },
        }
    }

    pub(crate) fn coord_of_index(&self, i: usize) -> Coord {
        match &self.carrier {
            Carrier::Finite(_) => Coord::Fin(i),
            Carrier::Lattice { dim, radius } => {
                let side = (2 * radius + 1) as usize;
                if *dim == 1 {
                    Coord::Lat([i as i64 - radius, 0])
                } else {
                    Coord::Lat([(i / side) as i64 - radius, (i % side) as i64 - radius])
                }
            }
            Carrier::Line { step, half } => Coord::Line((i as i64 - half) as f64 * step),
            Carrier::Affine(g) => {
                let nb = g.b_count();
                let j = (i / nb) as i64 - g.u_half;
                let k = (i % nb) as i64 - g.b_half;
                Coord::Aff {
                    u: j as f64 * g.u_step,
                    b: k as f64 * g.b_step,
                }
            }
        }
    }

    fn coord_of(&self, e: &Element) -> Result<Coord> {
        match (e, &self.carrier) {
            (Element::Index(i), _) if *i < self.size => Ok(self.coord_of_index(*i)),
            (Element::Index(i), _) => Err(LtpError::InvalidArgument(format!(
                "index {i} outside a carrier of size {}",
                self.size
            ))),
            (Element::Line(x), Carrier::Line { .. }) => Ok(Coord::Line(*x)),
            (Element::Affine { u, b }, Carrier::Affine(_)) => Ok(Coord::Aff { u: *u, b: *b }),
            (other, _) => Err(LtpError::InvalidArgument(format!(
                "element {other:?} does not belong to `{}`",
                self.spec
            ))),
        }
    }

    fn element_of_coord(&self, c: Coord) -> Element {
        match c {
            Coord::Fin(i) => Element::Index(i),
            Coord::Lat(_) => match self.locate_coord(c) {
                Some(s) => Element::Index(s.nearest()),
                // lattice windows are symmetric, so inverses of in-window points stay inside
                None => unreachable!("lattice inverse left the window"),
            },
            Coord::Line(x) => Element::Line(x),
            Coord::Aff { u, b } => Element::Affine { u, b },
        }
    }

    pub(crate) fn mul_coord(&self, a: Coord, b: Coord) -> Coord {
        match (a, b, &self.carrier) {
            (Coord::Fin(x), Coord::Fin(y), Carrier::Finite(fp)) => match &self.table {
                Some(t) => Coord::Fin(t[x * self.size + y] as usize),
                None => Coord::Fin(fp.mul(x, y)),
            },
            (Coord::Lat(x), Coord::Lat(y), _) => Coord::Lat([x[0] + y[0], x[1] + y[1]]),
            (Coord::Line(x), Coord::Line(y), _) => Coord::Line(x + y),
            (Coord::Aff { u: u1, b: b1 }, Coord::Aff { u: u2, b: b2 }, _) => Coord::Aff {
                u: u1 + u2,
                b: u1.exp() * b2 + b1,
            },
            _ => unreachable!("mixed coordinate kinds"),
        }
    }

    pub(crate) fn inv_coord(&self, a: Coord) -> Coord {
        match (a, &self.carrier) {
            (Coord::Fin(x), Carrier::Finite(fp)) => Coord::Fin(fp.inv(x)),
            (Coord::Lat(x), _) => Coord::Lat([-x[0], -x[1]]),
            (Coord::Line(x), _) => Coord::Line(-x),
            (Coord::Aff { u, b }, _) => Coord::Aff {
                u: -u,
                b: -(-u).exp() * b,
            },
            _ => unreachable!(),
        }
    }

    pub(crate) fn modular_coord(&self, a: Coord) -> f64 {
        match a {
            Coord::Aff { u, .. } => (-u).exp(),
            _ => 1.0,
        }
    }

    pub(crate) fn locate_coord(&self, c: Coord) -> Option<Stencil> {
        match (c, &self.carrier) {
            (Coord::Fin(i), _) => Some(Stencil::single(i)),
            (Coord::Lat(x), Carrier::Lattice { dim, radius }) => {
                let side = 2 * radius + 1;
                if x[0].abs() > *radius || x[1].abs() > *radius {
                    return None;
                }
                let idx = if *dim == 1 {
                    x[0] + radius
                } else {
                    (x[0] + radius) * side + (x[1] + radius)
                };
                Some(Stencil::single(idx as usize))
            }
            (Coord::Line(x), Carrier::Line { step, half }) => {
                let (j, t) = grid_position(x / step, *half)?;
                Some(match t {
                    None => Stencil::single(j),
                    Some(t) => Stencil {
                        idx: [j, j + 1, 0, 0],
                        wt: [1.0 - t, t, 0.0, 0.0],
                        len: 2,
                    },
                })
            }
            (Coord::Aff { u, b }, Carrier::Affine(g)) => {
                let (ju, tu) = grid_position(u / g.u_step, g.u_half)?;
                let (kb, tb) = grid_position(b / g.b_step, g.b_half)?;
                let nb = g.b_count();
                let mut st = Stencil {
                    idx: [0; 4],
                    wt: [0.0; 4],
                    len: 0,
                };
                let rows: &[(usize, f64)] = &match tu {
                    None => [(ju, 1.0), (0, 0.0)],
                    Some(t) => [(ju, 1.0 - t), (ju + 1, t)],
                };
                let cols: &[(usize, f64)] = &match tb {
                    None => [(kb, 1.0), (0, 0.0)],
                    Some(t) => [(kb, 1.0 - t), (kb + 1, t)],
                };
                let nr = if tu.is_none() { 1 } else { 2 };
                let nc = if tb.is_none() { 1 } else { 2 };
                for &(r, wr) in &rows[..nr] {
                    for &(c, wc) in &cols[..nc] {
                        st.idx[st.len] = r * nb + c;
                        st.wt[st.len] = wr * wc;
                        st.len += 1;
                    }
                }
                Some(st)
            }
            _ => unreachable!("coordinate does not match carrier"),
        }
    }
}

/// Position of `scaled` (in units of the grid step) on the grid `[-half, half]`:
/// the lower node offset from the left edge and the fractional part, `None`
/// fraction meaning an exact node. Returns `None` outside the window.
fn grid_position(scaled: f64, half: i64) -> Option<(usize, Option<f64>)> {
    if !scaled.is_finite() {
        return None;
    }
    let h = half as f64;
    if scaled < -h - SNAP_TOL || scaled > h + SNAP_TOL {
        return None;
    }
    let nearest = scaled.round();
    if (scaled - nearest).abs() <= SNAP_TOL {
        return Some(((nearest as i64 + half) as usize, None));
    }
    let lower = scaled.floor();
    Some(((lower as i64 + half) as usize, Some(scaled - lower)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(text: &str) -> Arc<GroupModel> {
        build_group(&text.parse().unwrap()).unwrap()
    }

    #[test]
    fn cyclic_four_counting() {
        let g = model("cyclic:4@counting");
        assert_eq!(g.size(), 4);
        assert_eq!(g.kind(), GroupKind::Finite);
        assert!(g.weights().iter().all(|&w| w == 1.0));
        assert!(g.modular_values().iter().all(|&d| d == 1.0));
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(g.op(a, b), Some((a + b) % 4));
            }
        }
    }

    #[test]
    fn circle_probability_weights() {
        let g = model("circle:8@probability");
        assert_eq!(g.size(), 8);
        assert!(g.weights().iter().all(|&w| w == 1.0 / 8.0));
        assert!(g.modular_values().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn affine_modular_closed_form() {
        let g = model("affine:0.25:2:0.25:4");
        assert_eq!(g.size(), 17 * 33);
        let d = g.modular_at(&Element::affine(1f64.exp(), 0.0)).unwrap();
        assert!((d - (-1f64).exp()).abs() < 1e-15);
        // grid node (u=1, b=0) carries the same value
        let node = g.locate(&Element::Affine { u: 1.0, b: 0.0 }).unwrap().unwrap();
        let i = node.exact().unwrap();
        assert!((g.modular(i) - 0.36787944117144233).abs() < 1e-15);
        assert!((g.weight(i) - (-1f64).exp() * 0.0625).abs() < 1e-15);
    }

    #[test]
    fn finite_inverse_is_two_sided() {
        for text in ["dihedral:5", "symmetric:4", "product:cyclic:2+dihedral:3", "cyclic:12"] {
            let g = model(text);
            for i in 0..g.size() {
                let j = g.inv(i).unwrap();
                assert_eq!(g.op(i, j), Some(g.identity()));
                assert_eq!(g.op(j, i), Some(g.identity()));
            }
        }
    }

    #[test]
    fn lattice_products_leave_window() {
        let g = model("z:3");
        let three = g.lattice_index(&[3]).unwrap();
        let one = g.lattice_index(&[1]).unwrap();
        assert_eq!(g.op(three, one), None);
        assert_eq!(g.op(one, one), g.lattice_index(&[2]));
        let g2 = model("z2:2");
        assert_eq!(g2.size(), 25);
        assert_eq!(g2.lattice_coords(g2.identity()), Some(vec![0, 0]));
    }

    #[test]
    fn affine_product_is_exact_in_u() {
        let g = model("affine:0.25:2:0.25:4");
        let a = Element::Affine { u: 0.5, b: 0.25 };
        let b = Element::Affine { u: 0.25, b: 0.5 };
        let st = g.product_stencil(&a, &b).unwrap().unwrap();
        // u = 0.75 is a node; b = e^0.5 * 0.5 + 0.25 is not
        assert_eq!(st.iter().count(), 2);
        let total: f64 = st.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn size_cap_is_enforced() {
        let spec: GroupSpec = "cyclic:100".parse().unwrap();
        let err = build_group_with_cap(&spec, 64).unwrap_err();
        assert!(matches!(err, LtpError::Resource { requested: 100, cap: 64, .. }));
        assert!(matches!(
            build_group(&"symmetric:11".parse().unwrap()),
            Err(LtpError::Resource { .. })
        ));
    }
}
