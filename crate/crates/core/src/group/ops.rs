use std::sync::Arc;

use num_complex::Complex64;

use super::{Element, GroupKind, GroupModel, GroupShape, LEAK_THRESHOLD};
use crate::error::{LtpError, Result};
use crate::lp::GFunction;
use crate::numeric::compensated_sum_c;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranslateSide {
    /// `δ_x ∗ f`, i.e. `t ↦ f(x⁻¹t)`.
    LeftDirac,
    /// `f ∗ δ_x`, i.e. `t ↦ Δ(x)⁻¹ f(t x⁻¹)`.
    RightDirac,
}

fn is_identity(g: &GroupModel, x: &Element) -> bool {
    match x {
        Element::Index(i) => *i == g.identity(),
        Element::Line(v) => *v == 0.0,
        Element::Affine { u, b } => *u == 0.0 && *b == 0.0,
    }
}

/// Fraction of `|f|`-mass sitting at nodes `s` whose image `moved(s)` leaves
/// the window.
fn leak_fraction<F>(f: &GFunction, mut escapes: F) -> Result<f64>
where
    F: FnMut(usize) -> Result<bool>,
{
    let g = f.group();
    let mut total = 0.0;
    let mut lost = 0.0;
    for (s, v) in f.values().iter().enumerate() {
        if *v == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mass = g.weight(s) * v.norm();
        total += mass;
        if escapes(s)? {
            lost += mass;
        }
    }
    Ok(if total > 0.0 { lost / total } else { 0.0 })
}

fn check_leak(fraction: f64) -> Result<()> {
    if fraction > LEAK_THRESHOLD {
        Err(LtpError::WindowLeak {
            fraction,
            threshold: LEAK_THRESHOLD,
        })
    } else {
        Ok(())
    }
}

/// Empirical modular value `Σ w probe(t) / Σ w probe(t·x)`.
///
/// Discrete models are unimodular and return exactly `1` once the window
/// check passes.
pub fn estimate_modular(g: &GroupModel, x: &Element, probe: &GFunction) -> Result<f64> {
    probe.expect_group(g)?;
    let x_inv = g.inverse_element(x)?;
    let leak = leak_fraction(probe, |s| {
        Ok(g.product_stencil(&Element::Index(s), &x_inv)?.is_none())
    })?;
    check_leak(leak)?;
    if g.kind() != GroupKind::Quadrature {
        return Ok(1.0);
    }
    let values = probe.values();
    let w = g.weights();
    let numerator = compensated_sum_c((0..g.size()).map(|t| values[t] * w[t]));
    let mut shifted = Vec::with_capacity(g.size());
    for t in 0..g.size() {
        if let Some(st) = g.product_stencil(&Element::Index(t), x)? {
            let v: Complex64 = st.iter().map(|(i, c)| values[i] * c).sum();
            shifted.push(v * w[t]);
        }
    }
    let denominator = compensated_sum_c(shifted);
    if denominator.norm() == 0.0 {
        return Err(LtpError::InvalidArgument(
            "probe translate has zero integral".into(),
        ));
    }
    Ok((numerator / denominator).re)
}

/// Left or right Dirac translate of `f` by `x`.
pub fn translate(g: &GroupModel, f: &GFunction, x: &Element, side: TranslateSide) -> Result<GFunction> {
    f.expect_group(g)?;
    if is_identity(g, x) {
        return Ok(f.clone());
    }
    let x_inv = g.inverse_element(x)?;
    let leak = match side {
        TranslateSide::LeftDirac => leak_fraction(f, |s| {
            Ok(g.product_stencil(x, &Element::Index(s))?.is_none())
        })?,
        TranslateSide::RightDirac => leak_fraction(f, |s| {
            Ok(g.product_stencil(&Element::Index(s), x)?.is_none())
        })?,
    };
    check_leak(leak)?;

    let scale = match side {
        TranslateSide::LeftDirac => 1.0,
        TranslateSide::RightDirac => 1.0 / g.modular_at(x)?,
    };
    let values = f.values();
    let mut out = vec![Complex64::new(0.0, 0.0); g.size()];
    for (t, slot) in out.iter_mut().enumerate() {
        let t_el = Element::Index(t);
        let st = match side {
            TranslateSide::LeftDirac => g.product_stencil(&x_inv, &t_el)?,
            TranslateSide::RightDirac => g.product_stencil(&t_el, &x_inv)?,
        };
        if let Some(st) = st {
            let v: Complex64 = st.iter().map(|(i, c)| values[i] * c).sum();
            *slot = v * scale;
        }
    }
    GFunction::new(f.group_arc(), out)
}

/// Smooth bump centred at the identity, used to probe the modular function.
/// On grids the width per axis is a tenth of the window radius, but at least
/// two grid steps.
pub fn gaussian_probe(g: &Arc<GroupModel>) -> GFunction {
    let widths: Vec<f64> = match g.kind() {
        GroupKind::Quadrature => window_radii(g)
            .iter()
            .zip(grid_steps(g))
            .map(|(r, h)| (r / 10.0).max(2.0 * h))
            .collect(),
        _ => Vec::new(),
    };
    let values = (0..g.size())
        .map(|i| {
            let c = g.coordinates(i);
            let r2 = match g.kind() {
                GroupKind::Quadrature => c
                    .iter()
                    .zip(&widths)
                    .map(|(x, s)| (x / s).powi(2))
                    .sum::<f64>(),
                _ => {
                    let d = g.chart_distance(i);
                    let scale = g.lattice_radius().map(|r| r as f64 / 6.0).unwrap_or(1.0);
                    (d / scale).powi(2)
                }
            };
            Complex64::new((-0.5 * r2).exp(), 0.0)
        })
        .collect();
    GFunction::new_unchecked(g, values)
}

/// Grid steps per chart axis of a quadrature model.
pub(crate) fn grid_steps(g: &GroupModel) -> Vec<f64> {
    match &g.spec().shape {
        GroupShape::RealLine { step, .. } => vec![*step],
        GroupShape::Affine { u_step, b_step, .. } => vec![*u_step, *b_step],
        _ => Vec::new(),
    }
}

/// Half-widths of the coordinate window of a quadrature model.
pub(crate) fn window_radii(g: &GroupModel) -> Vec<f64> {
    let mut radii: Vec<f64> = Vec::new();
    for i in 0..g.size() {
        let c = g.coordinates(i);
        if radii.is_empty() {
            radii = vec![0.0; c.len()];
        }
        for (r, x) in radii.iter_mut().zip(c) {
            *r = r.max(x.abs());
        }
    }
    radii
}
