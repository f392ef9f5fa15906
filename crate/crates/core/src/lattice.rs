//! Randomly shifted rank-1 Korobov lattice rules on the unit cube.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math::floor;

/// Upper bound on `candidates * points * dim` work spent choosing the
/// Korobov generator.
const SEARCH_BUDGET: usize = 4_000_000;
const MIN_CANDIDATES: usize = 16;

/// Uniform in [0, 1) with 53 random bits.
#[inline]
pub(crate) fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Smallest prime `>= n` (and `>= 2`).
pub fn next_prime(n: u32) -> u32 {
    let mut c = n.max(2);
    loop {
        if is_prime(c) {
            return c;
        }
        c += 1;
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Korobov generating vector `(1, g, g², …) mod n` for `n` prime, with `g`
/// minimizing the weighted `P₂` figure of merit (weights `1/j`).
///
/// Deterministic: the same `(n, dim)` always yields the same vector.
pub fn korobov_vector(n: u32, dim: usize) -> Vec<u32> {
    if dim == 0 {
        return Vec::new();
    }
    if n < 5 || dim == 1 {
        return powers(1, n, dim);
    }
    let nn = n as usize;
    // 2π² B₂(r/n), B₂(x) = x² - x + 1/6
    let b2: Vec<f64> = (0..nn)
        .map(|r| {
            let x = r as f64 / n as f64;
            2.0 * PI * PI * (x * x - x + 1.0 / 6.0)
        })
        .collect();
    let weights: Vec<f64> = (0..dim).map(|j| 1.0 / (j + 1) as f64).collect();

    let max_g = (n / 2) as usize;
    let budget = (SEARCH_BUDGET / (nn * dim)).max(MIN_CANDIDATES);
    let count = budget.min(max_g - 1);
    let mut best_g = 2u32;
    let mut best = f64::INFINITY;
    let mut residues = vec![0usize; dim];
    for c in 0..count {
        // spread the candidates evenly over 2..=n/2
        let g = 2 + (c * (max_g - 1) / count) as u32;
        let z = powers(g, n, dim);
        residues.iter_mut().for_each(|r| *r = 0);
        let mut total = 0.0;
        for _ in 1..nn {
            let mut prod = 1.0;
            for j in 0..dim {
                let r = residues[j] + z[j] as usize;
                let r = if r >= nn { r - nn } else { r };
                residues[j] = r;
                prod *= 1.0 + weights[j] * b2[r];
            }
            total += prod;
            if total >= best {
                break;
            }
        }
        if total < best {
            best = total;
            best_g = g;
        }
    }
    powers(best_g, n, dim)
}

fn powers(g: u32, n: u32, dim: usize) -> Vec<u32> {
    let mut z = Vec::with_capacity(dim);
    let mut cur = 1u64;
    for _ in 0..dim {
        z.push(cur as u32);
        cur = cur * g as u64 % n as u64;
    }
    z
}

/// A lattice rule with `points` nodes per shift and one uniform random
/// shift per replication, drawn from a ChaCha8 stream seeded by `seed`.
#[derive(Debug, Clone)]
pub struct LatticeRule {
    dim: usize,
    points: u32,
    generator: Vec<u32>,
    shift_count: usize,
    shifts: Vec<f64>,
}

impl LatticeRule {
    /// `samples` is rounded up to the next prime.
    pub fn new(dim: usize, samples: u32, shifts: u32, seed: u64) -> Self {
        let points = next_prime(samples);
        let generator = korobov_vector(points, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift_count = shifts as usize;
        let shifts = (0..shift_count * dim)
            .map(|_| unit_f64(&mut rng))
            .collect();
        LatticeRule {
            dim,
            points,
            generator,
            shift_count,
            shifts,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> u32 {
        self.points
    }

    pub fn shift_count(&self) -> usize {
        self.shift_count
    }

    pub fn generator(&self) -> &[u32] {
        &self.generator
    }

    pub fn shift(&self, j: usize) -> &[f64] {
        &self.shifts[j * self.dim..(j + 1) * self.dim]
    }

    /// Node `m` of shift `j` after the baker's transform `|2w - 1|`.
    #[inline]
    pub fn point(&self, j: usize, m: u32, out: &mut [f64]) {
        let n = self.points as u64;
        let shift = self.shift(j);
        for ((o, &z), &d) in out.iter_mut().zip(&self.generator).zip(shift) {
            let base = (m as u64 * z as u64 % n) as f64 / n as f64;
            let w = base + d;
            let w = w - floor(w);
            *o = (2.0 * w - 1.0).abs();
        }
    }
}
