//! `‖f‖₂ᵀ` on `ℤᵈ` as the sup of the symbol `F(θ) = Σ_k f_k e^{-ik·θ}`.
//!
//! The symbol is sampled by a zero-padded FFT. The sampled max, polished by a
//! local search, is the lower bound. For the upper bound: at the true
//! maximizer `θ*`, `t ↦ Re(ū F(θ* + t(θ_s − θ*)))` with `u = F(θ*)/|F(θ*)|`
//! peaks at `t = 0`, so the nearest sample `θ_s` satisfies
//! `|F(θ_s)| ≥ sup|F| − ½ M₂ δ²` with `M₂ = Σ|k|²|f_k|` and `δ` the covering
//! radius of the sample grid.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::numeric::fft_nd;

const SAMPLES_1D: usize = 1 << 18;
const SAMPLES_2D: usize = 1 << 11;
const POLISH_SEEDS: usize = 8;

#[derive(Debug, Clone, Copy)]
pub(crate) struct SymbolSup {
    pub lower: f64,
    pub upper: f64,
}

struct Symbol {
    taps: Vec<([f64; 2], Complex64)>,
}

impl Symbol {
    fn eval(&self, theta: [f64; 2]) -> f64 {
        self.taps
            .iter()
            .map(|(k, c)| c * Complex64::from_polar(1.0, -(k[0] * theta[0] + k[1] * theta[1])))
            .sum::<Complex64>()
            .norm()
    }
}

/// `coords[i]` are the lattice coordinates of the support points.
pub(crate) fn symbol_sup(dim: usize, coords: &[Vec<i64>], values: &[Complex64]) -> SymbolSup {
    let n = if dim == 1 { SAMPLES_1D } else { SAMPLES_2D };
    let dims = vec![n; dim];
    let total = n.pow(dim as u32);
    let mut grid = vec![Complex64::new(0.0, 0.0); total];
    let mut taps = Vec::with_capacity(coords.len());
    let mut m2 = 0.0;
    let mut l1 = 0.0;
    for (k, v) in coords.iter().zip(values) {
        let mut idx = 0usize;
        for &c in k {
            idx = idx * n + c.rem_euclid(n as i64) as usize;
        }
        grid[idx] += v;
        let mut kk = [0.0; 2];
        for (slot, &c) in kk.iter_mut().zip(k) {
            *slot = c as f64;
        }
        m2 += (kk[0] * kk[0] + kk[1] * kk[1]) * v.norm();
        l1 += v.norm();
        taps.push((kk, *v));
    }
    fft_nd(&mut grid, &dims, false);

    // sample index j ↔ θ = 2πj/n per axis
    let mut order: Vec<usize> = (0..total).collect();
    let mags: Vec<f64> = grid.iter().map(|z| z.norm()).collect();
    let sampled = mags.iter().copied().fold(0.0, f64::max);
    let seeds = POLISH_SEEDS.min(total);
    order.select_nth_unstable_by(seeds - 1, |a, b| mags[*b].total_cmp(&mags[*a]));
    order.truncate(seeds);
    order.sort_unstable();

    let h = 2.0 * PI / n as f64;
    let delta = 0.5 * h * (dim as f64).sqrt();
    let symbol = Symbol { taps };
    let mut lower = sampled;
    for j in order {
        let mut theta = [0.0; 2];
        let mut rest = j;
        for axis in (0..dim).rev() {
            theta[axis] = (rest % n) as f64 * h;
            rest /= n;
        }
        lower = lower.max(polish(&symbol, theta, dim, h));
    }
    // allow for FFT rounding in the sampled values
    let upper = (sampled + 0.5 * m2 * delta * delta + 1e-13 * l1).max(lower);
    SymbolSup { lower, upper }
}

/// Coordinate-wise golden-section refinement inside one grid cell.
fn polish(symbol: &Symbol, mut theta: [f64; 2], dim: usize, h: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = symbol.eval(theta);
    for _ in 0..3 {
        for axis in 0..dim {
            let (mut a, mut b) = (theta[axis] - h, theta[axis] + h);
            let at = |t: f64| {
                let mut th = theta;
                th[axis] = t;
                symbol.eval(th)
            };
            let mut c = b - inv_phi * (b - a);
            let mut d = a + inv_phi * (b - a);
            let (mut fc, mut fd) = (at(c), at(d));
            for _ in 0..60 {
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - inv_phi * (b - a);
                    fc = at(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + inv_phi * (b - a);
                    fd = at(d);
                }
            }
            let t = 0.5 * (a + b);
            let v = at(t);
            if v > best {
                best = v;
                theta[axis] = t;
            }
        }
    }
    best
}
