//! Exact arithmetic for the finite constructors. Every factor numbers its
//! elements so that index 0 is the identity; products use mixed-radix
//! indexing with the first factor most significant.

use crate::error::{LtpError, Result};

#[derive(Debug, Clone)]
pub(crate) enum Factor {
    Cyclic(usize),
    /// `r^k s^e` stored at `k + n*e`.
    Dihedral(usize),
    Symmetric(Permutations),
}

/// All permutations of `{0..m}` in lexicographic order; index = Lehmer rank.
#[derive(Debug, Clone)]
pub(crate) struct Permutations {
    degree: usize,
    images: Vec<u8>,
    factorials: Vec<usize>,
}

impl Permutations {
    fn new(degree: usize) -> Self {
        let mut factorials = vec![1usize; degree + 1];
        for i in 1..=degree {
            factorials[i] = factorials[i - 1] * i;
        }
        let count = factorials[degree];
        let mut images = Vec::with_capacity(count * degree);
        let mut pool = Vec::with_capacity(degree);
        for rank in 0..count {
            pool.clear();
            pool.extend(0..degree as u8);
            let mut r = rank;
            for pos in 0..degree {
                let f = factorials[degree - 1 - pos];
                let pick = r / f;
                r %= f;
                images.push(pool.remove(pick));
            }
        }
        Permutations {
            degree,
            images,
            factorials,
        }
    }

    fn perm(&self, i: usize) -> &[u8] {
        &self.images[i * self.degree..(i + 1) * self.degree]
    }

    fn rank(&self, p: &[u8]) -> usize {
        let m = self.degree;
        let mut rank = 0;
        for i in 0..m {
            let smaller = p[i + 1..].iter().filter(|&&x| x < p[i]).count();
            rank += smaller * self.factorials[m - 1 - i];
        }
        rank
    }

    fn compose(&self, a: usize, b: usize) -> usize {
        let (pa, pb) = (self.perm(a), self.perm(b));
        let mut out = [0u8; 16];
        for i in 0..self.degree {
            out[i] = pa[pb[i] as usize];
        }
        self.rank(&out[..self.degree])
    }

    fn inverse(&self, a: usize) -> usize {
        let pa = self.perm(a);
        let mut out = [0u8; 16];
        for (i, &img) in pa.iter().enumerate() {
            out[img as usize] = i as u8;
        }
        self.rank(&out[..self.degree])
    }

    /// Cayley distance to the identity: degree minus number of cycles.
    fn cayley_distance(&self, a: usize) -> usize {
        let p = self.perm(a);
        let mut seen = [false; 16];
        let mut cycles = 0;
        for start in 0..self.degree {
            if !seen[start] {
                cycles += 1;
                let mut j = start;
                while !seen[j] {
                    seen[j] = true;
                    j = p[j] as usize;
                }
            }
        }
        self.degree - cycles
    }
}

impl Factor {
    pub(crate) fn cyclic(n: usize) -> Self {
        Factor::Cyclic(n)
    }

    pub(crate) fn dihedral(n: usize) -> Self {
        Factor::Dihedral(n)
    }

    pub(crate) fn symmetric(degree: usize) -> Self {
        Factor::Symmetric(Permutations::new(degree))
    }

    pub(crate) fn order(&self) -> usize {
        match self {
            Factor::Cyclic(n) => *n,
            Factor::Dihedral(n) => 2 * n,
            Factor::Symmetric(p) => p.factorials[p.degree],
        }
    }

    fn mul(&self, a: usize, b: usize) -> usize {
        match self {
            Factor::Cyclic(n) => (a + b) % n,
            Factor::Dihedral(n) => {
                let (ka, ea) = (a % n, a / n);
                let (kb, eb) = (b % n, b / n);
                let k = if ea == 0 { (ka + kb) % n } else { (ka + n - kb) % n };
                k + n * ((ea + eb) % 2)
            }
            Factor::Symmetric(p) => p.compose(a, b),
        }
    }

    fn inv(&self, a: usize) -> usize {
        match self {
            Factor::Cyclic(n) => (n - a) % n,
            Factor::Dihedral(n) => {
                if a < *n {
                    (n - a) % n
                } else {
                    a
                }
            }
            Factor::Symmetric(p) => p.inverse(a),
        }
    }

    fn distance(&self, a: usize) -> f64 {
        match self {
            Factor::Cyclic(n) => a.min(n - a) as f64,
            Factor::Dihedral(n) => {
                let k = a % n;
                (k.min(n - k) + a / n) as f64
            }
            Factor::Symmetric(p) => p.cayley_distance(a) as f64,
        }
    }
}

/// Upper bound on the order of `symmetric:m` before enumerating it.
pub(crate) fn symmetric_order(degree: usize) -> Option<usize> {
    if degree > 16 {
        return None;
    }
    (1..=degree).try_fold(1usize, |acc, k| acc.checked_mul(k))
}

#[derive(Debug, Clone)]
pub(crate) struct FiniteProduct {
    factors: Vec<Factor>,
    strides: Vec<usize>,
}

impl FiniteProduct {
    pub(crate) fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(LtpError::InvalidArgument("empty product".into()));
        }
        let mut strides = vec![1usize; factors.len()];
        for i in (0..factors.len() - 1).rev() {
            strides[i] = strides[i + 1] * factors[i + 1].order();
        }
        Ok(FiniteProduct { factors, strides })
    }

    #[cfg(test)]
    fn size(&self) -> usize {
        self.strides[0] * self.factors[0].order()
    }

    fn digit(&self, i: usize, k: usize) -> usize {
        (i / self.strides[k]) % self.factors[k].order()
    }

    pub(crate) fn mul(&self, a: usize, b: usize) -> usize {
        if self.factors.len() == 1 {
            return self.factors[0].mul(a, b);
        }
        (0..self.factors.len())
            .map(|k| self.factors[k].mul(self.digit(a, k), self.digit(b, k)) * self.strides[k])
            .sum()
    }

    pub(crate) fn inv(&self, a: usize) -> usize {
        (0..self.factors.len())
            .map(|k| self.factors[k].inv(self.digit(a, k)) * self.strides[k])
            .sum()
    }

    /// Orders of the cyclic factors when every factor is cyclic.
    pub(crate) fn cyclic_orders(&self) -> Option<Vec<usize>> {
        self.factors
            .iter()
            .map(|f| match f {
                Factor::Cyclic(n) => Some(*n),
                _ => None,
            })
            .collect()
    }

    pub(crate) fn digits(&self, a: usize) -> Vec<usize> {
        (0..self.factors.len()).map(|k| self.digit(a, k)).collect()
    }

    /// Sup over factors of the word-type distance to the identity.
    pub(crate) fn distance(&self, a: usize) -> f64 {
        (0..self.factors.len())
            .map(|k| self.factors[k].distance(self.digit(a, k)))
            .fold(0.0, f64::max)
    }
}
