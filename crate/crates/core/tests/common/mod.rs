#![allow(dead_code)]

use mvdist_core::{ExtendedBounds, LocationVector, ScaleMatrix};
use proptest::prelude::*;

pub const INF: f64 = f64::INFINITY;

pub fn bounds(a: &[f64], b: &[f64]) -> ExtendedBounds {
    ExtendedBounds::new(a.to_vec(), b.to_vec()).unwrap()
}

pub fn zeros(k: usize) -> LocationVector {
    LocationVector::zeros(k).unwrap()
}

/// `A Aᵀ + 0.5 I` from a flat `k × k` block of entries in [-1, 1].
pub fn spd_from(k: usize, a: &[f64]) -> ScaleMatrix {
    let mut s = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            s[i * k + j] = (0..k).map(|m| a[i * k + m] * a[j * k + m]).sum::<f64>();
        }
        s[i * k + i] += 0.5;
    }
    // symmetrize exactly
    for i in 0..k {
        for j in 0..i {
            s[i * k + j] = s[j * k + i];
        }
    }
    ScaleMatrix::new(k, s).unwrap()
}

/// A rectangle problem: dimension, location, scale entries, lower and upper
/// limits (either side may be infinite).
#[derive(Debug, Clone)]
pub struct Problem {
    pub k: usize,
    pub delta: Vec<f64>,
    pub a: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Problem {
    pub fn sigma(&self) -> ScaleMatrix {
        spd_from(self.k, &self.a)
    }

    pub fn delta(&self) -> LocationVector {
        LocationVector::new(self.delta.clone()).unwrap()
    }

    pub fn bounds(&self) -> ExtendedBounds {
        bounds(&self.lower, &self.upper)
    }
}

pub fn problem(kmin: usize, kmax: usize) -> impl Strategy<Value = Problem> {
    (kmin..=kmax).prop_flat_map(|k| {
        (
            prop::collection::vec(-1.0..1.0f64, k),
            prop::collection::vec(-1.0..1.0f64, k * k),
            prop::collection::vec((-2.5..1.0f64, 0.3..3.0f64, 0u8..6), k),
        )
            .prop_map(move |(delta, a, limits)| {
                let mut lower = Vec::with_capacity(k);
                let mut upper = Vec::with_capacity(k);
                for (lo, width, kind) in limits {
                    // kind 0: (-inf, hi], kind 1: [lo, inf), otherwise finite
                    match kind {
                        0 => {
                            lower.push(-INF);
                            upper.push(lo + width);
                        }
                        1 => {
                            lower.push(lo);
                            upper.push(INF);
                        }
                        _ => {
                            lower.push(lo);
                            upper.push(lo + width);
                        }
                    }
                }
                Problem {
                    k,
                    delta,
                    a,
                    lower,
                    upper,
                }
            })
    })
}
