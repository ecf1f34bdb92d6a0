//! Random instance generators shared by the integration tests.

#![allow(dead_code)]

use ipsinv::lattice2d::SquareJrm;
use ipsinv::word::decode;
use ipsinv::{BoundaryRates, Exact, JumpRateMatrix, MarkovKernel, Scalar, StationaryLaw};
use proptest::prelude::*;
use rand::Rng;

pub type Q = Exact;

pub fn q(n: i64, d: i64) -> Q {
    Q::from_ratio(n, d)
}

/// Sparse JRM with at most `max_entries` positive rates `n/d`, `n <= 5`,
/// `d <= 3`.
pub fn sparse_jrm(kappa: usize, range: usize, max_entries: usize) -> impl Strategy<Value = JumpRateMatrix<Q>> {
    let size = kappa.pow(range as u32);
    prop::collection::vec((0..size, 1..size, 1i64..=5, 1i64..=3), 0..=max_entries).prop_map(move |raw| {
        let entries = raw.into_iter().map(|(f, off, n, d)| (f, (f + off) % size, q(n, d)));
        let alphabet = ipsinv::Alphabet::new(kappa).unwrap();
        JumpRateMatrix::from_codes(alphabet, range, entries).unwrap()
    })
}

/// Positive kernel of memory `memory` with rows proportional to integers in
/// `1..=6`.
pub fn positive_kernel(kappa: usize, memory: usize) -> impl Strategy<Value = MarkovKernel<Q>> {
    let rows = kappa.pow(memory.max(1) as u32);
    let rows = if memory == 0 { 1 } else { rows };
    prop::collection::vec(prop::collection::vec(1i64..=6, kappa), rows)
        .prop_map(move |raw| MarkovKernel::new(kappa, memory, raw.iter().map(|r| normalize(r)).collect()).unwrap())
}

pub fn positive_law(kappa: usize, memory: usize) -> impl Strategy<Value = StationaryLaw<Q>> {
    positive_kernel(kappa, memory).prop_map(|k| StationaryLaw::new(k).unwrap())
}

/// Full-support probability vector with weights in `1..=9`.
pub fn positive_rho(kappa: usize) -> impl Strategy<Value = Vec<Q>> {
    prop::collection::vec(1i64..=9, kappa).prop_map(|w| normalize(&w))
}

pub fn normalize(w: &[i64]) -> Vec<Q> {
    let total: i64 = w.iter().sum();
    w.iter().map(|&v| q(v, total)).collect()
}

pub fn boundary(kappa: usize, max_entries: usize) -> impl Strategy<Value = BoundaryRates<Q>> {
    (sparse_jrm(kappa, 1, max_entries), sparse_jrm(kappa, 1, max_entries))
        .prop_map(|(l, r)| BoundaryRates::new(l, r).unwrap())
}

/// Square JRM on `κ = 2` with at most `max_entries` rates.
pub fn square_jrm(max_entries: usize) -> impl Strategy<Value = SquareJrm<Q>> {
    sparse_jrm(2, 4, max_entries).prop_map(|t| SquareJrm::from_jrm(t).unwrap())
}

// Seeded generators for the acceptance suite.

pub fn rand_jrm<R: Rng>(rng: &mut R, kappa: usize, range: usize, max_entries: usize) -> JumpRateMatrix<Q> {
    let size = kappa.pow(range as u32);
    let count = rng.gen_range(0..=max_entries);
    let entries: Vec<_> = (0..count)
        .map(|_| {
            let f = rng.gen_range(0..size);
            let t = (f + rng.gen_range(1..size)) % size;
            (f, t, q(rng.gen_range(1..=5), rng.gen_range(1..=3)))
        })
        .collect();
    JumpRateMatrix::from_codes(ipsinv::Alphabet::new(kappa).unwrap(), range, entries).unwrap()
}

pub fn rand_kernel<R: Rng>(rng: &mut R, kappa: usize) -> MarkovKernel<Q> {
    let rows = (0..kappa).map(|_| normalize(&(0..kappa).map(|_| rng.gen_range(1..=6)).collect::<Vec<_>>())).collect();
    MarkovKernel::new(kappa, 1, rows).unwrap()
}

pub fn rand_rho<R: Rng>(rng: &mut R, kappa: usize) -> Vec<Q> {
    normalize(&(0..kappa).map(|_| rng.gen_range(1..=9)).collect::<Vec<_>>())
}

pub fn word(kappa: usize, len: usize, code: usize) -> Vec<usize> {
    decode(kappa, len, code)
}
