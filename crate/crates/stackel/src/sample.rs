//! Deterministic sampling of coordinate boxes and momenta.
//!
//! Configuration points come from a Halton low-discrepancy sequence and
//! momenta from a counter-based RNG, both derived from a fixed default seed,
//! so every check is reproducible run to run and machine to machine.

use std::sync::Arc;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::Binding;

/// Default sampling seed. An arbitrary fixed constant; changing it changes
/// every sampled point in every check, so it is part of the reproducibility
/// contract.
pub const DEFAULT_SEED: u64 = 0x5EB0_C41D_2A7F_9E33;

/// Default relative margin by which boxes are shrunk before sampling, keeping
/// samples away from potentially singular box faces.
pub const DEFAULT_MARGIN: f64 = 0.05;

const HALTON_PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// An axis-aligned coordinate box.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    names: Vec<Arc<str>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    /// Build from `(name, lo, hi)` triples. Panics if `lo >= hi` for some
    /// axis; domain data is author-provided, not runtime input.
    pub fn new<'a>(axes: impl IntoIterator<Item = (&'a str, f64, f64)>) -> Self {
        let mut names = Vec::new();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for (n, a, b) in axes {
            assert!(
                a < b,
                "invalid domain axis '{}': [{}, {}] is empty",
                n,
                a,
                b
            );
            names.push(Arc::from(n));
            lo.push(a);
            hi.push(b);
        }
        DomainBox { names, lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[Arc<str>] {
        &self.names
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Center of the box.
    pub fn midpoint(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Shrink each axis toward its center by the relative `margin` on both
    /// ends.
    pub fn shrink(&self, margin: f64) -> DomainBox {
        let mut out = self.clone();
        for i in 0..self.dim() {
            let w = self.hi[i] - self.lo[i];
            out.lo[i] = self.lo[i] + margin * w;
            out.hi[i] = self.hi[i] - margin * w;
        }
        out
    }

    /// `n` Halton points in the (margin-shrunk) box. The seed offsets the
    /// start index of the sequence, so different seeds give different but
    /// equally well-distributed point sets.
    pub fn sample(&self, n: usize, seed: u64, margin: f64) -> Vec<Vec<f64>> {
        let inner = self.shrink(margin);
        let start = 13 + (seed % 8192);
        (0..n)
            .map(|k| {
                (0..self.dim())
                    .map(|axis| {
                        let t = radical_inverse(start + k as u64, HALTON_PRIMES[axis % 8]);
                        inner.lo[axis] + t * (inner.hi[axis] - inner.lo[axis])
                    })
                    .collect()
            })
            .collect()
    }

    /// Bind a point to the box's coordinate names.
    pub fn binding(&self, point: &[f64]) -> Binding {
        let mut b = Binding::new();
        for (name, v) in self.names.iter().zip(point) {
            b.set(&**name, *v);
        }
        b
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 0.0;
    let mut scale = 1.0 / base as f64;
    while i > 0 {
        inv += (i % base) as f64 * scale;
        i /= base;
        scale /= base as f64;
    }
    inv
}

/// `n` momentum vectors of length `dim`, uniform in `[-1.5, 1.5]` per
/// component, from a ChaCha stream seeded by `seed`.
pub fn momenta(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-1.5, 1.5);
    (0..n)
        .map(|_| (0..dim).map(|_| dist.sample(&mut rng)).collect())
        .collect()
}

/// A dedicated ChaCha stream for checks that need scalar draws.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
