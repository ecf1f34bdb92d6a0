//! Explicit finite generators on cycles, segments and tori.
//!
//! These are built directly from the window rates and never touch the `Z`
//! table, so they serve as ground truth for every criterion.

use petgraph::algo::condensation;
use petgraph::graph::DiGraph;
use petgraph::visit::EdgeRef;
use petgraph::Direction;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jrm::{BoundaryRates, JumpRateMatrix};
use crate::kernel::{MarkovKernel, StationaryLaw};
use crate::lattice2d::{SquareJrm, SQUARE};
use crate::scalar::Scalar;
use crate::word::{decode, encode, Words};

/// Default cap on the number of configurations.
pub const DEFAULT_MAX_STATES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Space {
    Cycle { n: usize },
    Segment { n: usize },
    Torus { n: usize },
    PairCycle { n: usize },
}

/// Sparse generator `Q` on all `κ^sites` configurations, site 0 most
/// significant in the state code.
#[derive(Debug, Clone)]
pub struct FiniteGenerator<S> {
    space: Space,
    kappa: usize,
    sites: usize,
    rows: Vec<Vec<(usize, S)>>,
    diagonal: Vec<S>,
}

impl<S: Scalar> FiniteGenerator<S> {
    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn states(&self) -> usize {
        self.rows.len()
    }

    /// Off-diagonal positive rates out of `x`, sorted by target.
    pub fn row(&self, x: usize) -> &[(usize, S)] {
        &self.rows[x]
    }

    pub fn diagonal(&self, x: usize) -> &S {
        &self.diagonal[x]
    }

    pub fn rate(&self, x: usize, y: usize) -> S {
        if x == y {
            return self.diagonal[x].clone();
        }
        self.rows[x].iter().find(|(t, _)| *t == y).map_or_else(S::zero, |(_, r)| r.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.is_empty())
    }

    fn assemble(space: Space, kappa: usize, sites: usize, raw: Vec<Vec<(usize, S)>>) -> Self {
        let mut rows = Vec::with_capacity(raw.len());
        let mut diagonal = Vec::with_capacity(raw.len());
        for mut r in raw {
            r.sort_by_key(|(t, _)| *t);
            let mut merged: Vec<(usize, S)> = Vec::with_capacity(r.len());
            for (t, v) in r {
                match merged.last_mut() {
                    Some((lt, lv)) if *lt == t => *lv = lv.clone() + v,
                    _ => merged.push((t, v)),
                }
            }
            let out = merged.iter().fold(S::zero(), |acc, (_, v)| acc + v.clone());
            diagonal.push(-out);
            rows.push(merged);
        }
        FiniteGenerator { space, kappa, sites, rows, diagonal }
    }
}

fn state_count(kappa: usize, sites: usize, cap: usize) -> Result<usize> {
    let needed = (kappa as u128).checked_pow(sites as u32).unwrap_or(u128::MAX);
    if needed > cap as u128 {
        return Err(Error::StateCap { needed, cap });
    }
    Ok(needed as usize)
}

/// Applies the window jump `from -> to` on `positions` of `x`; `None` when
/// the configuration does not read `from` or a repeated site would need two
/// letters.
fn apply(x: &[usize], positions: &[usize], to: &[usize]) -> Option<Vec<usize>> {
    let mut y = x.to_vec();
    let mut written = vec![false; x.len()];
    for (&p, &b) in positions.iter().zip(to) {
        if written[p] && y[p] != b {
            return None;
        }
        y[p] = b;
        written[p] = true;
    }
    Some(y)
}

/// Adds every jump of `t` acting on the given window positions.
fn window_jumps<S: Scalar>(
    t: &JumpRateMatrix<S>,
    x: &[usize],
    positions: &[usize],
    scale: Option<&S>,
    out: &mut Vec<(usize, S)>,
) {
    let k = t.kappa();
    let l = positions.len();
    let from: Vec<usize> = positions.iter().map(|&p| x[p]).collect();
    for (to, rate) in t.outgoing(encode(k, &from)) {
        let target = decode(k, l, *to);
        if let Some(y) = apply(x, positions, &target) {
            let r = scale.map_or_else(|| rate.clone(), |c| rate.clone() * c.clone());
            out.push((encode(k, &y), r));
        }
    }
}

/// Generator on ℤ/nℤ with wrapped windows.
pub fn build_cycle_generator<S: Scalar>(t: &JumpRateMatrix<S>, n: usize, cap: usize) -> Result<FiniteGenerator<S>> {
    if n == 0 {
        return Err(Error::Parameter("cycle length must be positive".into()));
    }
    let (k, l) = (t.kappa(), t.range());
    let states = state_count(k, n, cap)?;
    let raw = (0..states)
        .into_par_iter()
        .map(|code| {
            let x = decode(k, n, code);
            let mut out = Vec::new();
            for a in 0..n {
                let positions: Vec<usize> = (0..l).map(|j| (a + j) % n).collect();
                window_jumps(t, &x, &positions, None, &mut out);
            }
            out
        })
        .collect();
    Ok(FiniteGenerator::assemble(Space::Cycle { n }, k, n, raw))
}

/// Generator on the segment `0..n` with bulk windows and the boundary
/// rates acting on the first and last `L - 1` sites.
pub fn build_segment_generator<S: Scalar>(
    t: &JumpRateMatrix<S>,
    beta: &BoundaryRates<S>,
    n: usize,
    cap: usize,
) -> Result<FiniteGenerator<S>> {
    let (k, l) = (t.kappa(), t.range());
    if beta.range() + 1 != l || beta.left.kappa() != k {
        return Err(Error::Inconsistent("boundary rates must have range L - 1 over the same alphabet".into()));
    }
    if n < l {
        return Err(Error::Parameter(format!("segment of length {n} is shorter than the range")));
    }
    let states = state_count(k, n, cap)?;
    let raw = (0..states)
        .into_par_iter()
        .map(|code| {
            let x = decode(k, n, code);
            let mut out = Vec::new();
            for a in 0..=n - l {
                let positions: Vec<usize> = (a..a + l).collect();
                window_jumps(t, &x, &positions, None, &mut out);
            }
            let left: Vec<usize> = (0..l - 1).collect();
            window_jumps(&beta.left, &x, &left, None, &mut out);
            let right: Vec<usize> = (n + 1 - l..n).collect();
            window_jumps(&beta.right, &x, &right, None, &mut out);
            out
        })
        .collect();
    Ok(FiniteGenerator::assemble(Space::Segment { n }, k, n, raw))
}

/// Generator on the `n x n` torus; site `(i, j)` has index `i * n + j`.
pub fn build_torus_generator<S: Scalar>(t: &SquareJrm<S>, n: usize, cap: usize) -> Result<FiniteGenerator<S>> {
    if n < 2 {
        return Err(Error::Parameter("torus side must be at least 2".into()));
    }
    let k = t.kappa();
    let sites = n * n;
    let states = state_count(k, sites, cap)?;
    let raw = (0..states)
        .into_par_iter()
        .map(|code| {
            let x = decode(k, sites, code);
            let mut out = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let positions: Vec<usize> =
                        SQUARE.iter().map(|&(di, dj)| ((i + di as usize) % n) * n + (j + dj as usize) % n).collect();
                    window_jumps(t.as_jrm(), &x, &positions, None, &mut out);
                }
            }
            out
        })
        .collect();
    Ok(FiniteGenerator::assemble(Space::Torus { n }, k, sites, raw))
}

/// Generator on ℤ/nℤ where every ordered pair `(i, i + δ)` jumps with rate
/// `p(δ) T[(η_i, η_{i+δ}) -> (a, b)]`.
pub fn build_pair_generator<S: Scalar>(
    t: &JumpRateMatrix<S>,
    p: &[(i64, S)],
    n: usize,
    cap: usize,
) -> Result<FiniteGenerator<S>> {
    if t.range() != 2 {
        return Err(Error::Precondition("pair dynamics need range 2".into()));
    }
    let k = t.kappa();
    let states = state_count(k, n, cap)?;
    let raw = (0..states)
        .into_par_iter()
        .map(|code| {
            let x = decode(k, n, code);
            let mut out = Vec::new();
            for i in 0..n {
                for (delta, rate) in p {
                    let j = (i as i64 + delta).rem_euclid(n as i64) as usize;
                    if j != i && !rate.is_zero() {
                        window_jumps(t, &x, &[i, j], Some(rate), &mut out);
                    }
                }
            }
            out
        })
        .collect();
    Ok(FiniteGenerator::assemble(Space::PairCycle { n }, k, n, raw))
}

/// The vector `μQ`.
pub fn balance<S: Scalar>(g: &FiniteGenerator<S>, mu: &[S]) -> Result<Vec<S>> {
    if mu.len() != g.states() {
        return Err(Error::Length { expected: g.states(), got: mu.len() });
    }
    let mut out: Vec<S> = mu.iter().zip(&g.diagonal).map(|(m, d)| m.clone() * d.clone()).collect();
    for (x, row) in g.rows.iter().enumerate() {
        if mu[x].is_zero() {
            continue;
        }
        for (y, r) in row {
            out[*y] = out[*y].clone() + mu[x].clone() * r.clone();
        }
    }
    Ok(out)
}

/// `max_y |(μQ)(y)|`.
pub fn stationarity_residual<S: Scalar>(g: &FiniteGenerator<S>, mu: &[S]) -> Result<S> {
    Ok(balance(g, mu)?.into_iter().map(|v| v.abs()).fold(S::zero(), |a, b| if b > a { b } else { a }))
}

/// First state (in code order) with nonzero balance.
pub fn first_unbalanced<S: Scalar>(g: &FiniteGenerator<S>, mu: &[S], tol: f64) -> Result<Option<(usize, S)>> {
    Ok(balance(g, mu)?.into_iter().enumerate().find(|(_, v)| !v.is_negligible(tol)))
}

/// Normalized cyclic weights of the kernel on ℤ/nℤ.
pub fn gibbs_measure<S: Scalar>(kernel: &MarkovKernel<S>, n: usize) -> Result<Vec<S>> {
    let weights: Vec<S> = Words::new(kernel.kappa(), n).map(|x| kernel.cyclic_weight(&x)).collect();
    normalize(weights)
}

/// Cylinder probabilities of the stationary chain on `n` sites.
pub fn markov_measure<S: Scalar>(law: &StationaryLaw<S>, n: usize) -> Vec<S> {
    Words::new(law.kappa(), n).map(|x| law.measure(&x)).collect()
}

/// `ρ^{⊗ sites}` in state-code order.
pub fn product_measure<S: Scalar>(rho: &[S], sites: usize) -> Vec<S> {
    Words::new(rho.len(), sites)
        .map(|x| x.iter().fold(S::one(), |acc, &a| acc * rho[a].clone()))
        .collect()
}

fn normalize<S: Scalar>(weights: Vec<S>) -> Result<Vec<S>> {
    let total = weights.iter().fold(S::zero(), |acc, v| acc + v.clone());
    if total.is_zero() {
        return Err(Error::Inconsistent("zero trace".into()));
    }
    Ok(weights.into_iter().map(|v| v / total.clone()).collect())
}

/// Unnormalized line balance of the cylinder `x`: in-flow minus out-flow of
/// probability into `{z : z(C) = x}` summed over every window of the
/// domain `C` extended by `L - 1` sites on each side.
pub fn line_balance<S: Scalar>(t: &JumpRateMatrix<S>, law: &StationaryLaw<S>, x: &[usize]) -> Result<S> {
    t.alphabet().check(x)?;
    let (k, l) = (t.kappa(), t.range());
    let pad = l - 1;
    let d = x.len() + 2 * pad;
    let mut total = S::zero();
    for left in Words::new(k, pad) {
        for right in Words::new(k, pad) {
            let mut z = left.clone();
            z.extend_from_slice(x);
            z.extend_from_slice(&right);
            let mu_z = law.measure(&z);
            for a in 0..=d - l {
                let code = encode(k, &z[a..a + l]);
                let exit = t.exit_rate_code(code);
                if !exit.is_zero() {
                    total = total - mu_z.clone() * exit;
                }
                for (u, rate) in t.incoming(code) {
                    let mut w = z.clone();
                    w[a..a + l].copy_from_slice(&decode(k, l, *u));
                    total = total + law.measure(&w) * rate.clone();
                }
            }
        }
    }
    Ok(total)
}

/// Closed classes of the accessibility relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbsorbingReport {
    /// Union of the sink strongly connected components, sorted.
    pub absorbing: Vec<usize>,
    pub sink_components: Vec<Vec<usize>>,
    pub is_proper: bool,
    pub reaches_all: bool,
}

/// Sink components of the jump graph, via SCC condensation.
pub fn absorbing_analysis<S: Scalar>(g: &FiniteGenerator<S>) -> AbsorbingReport {
    let mut graph: DiGraph<usize, ()> = DiGraph::with_capacity(g.states(), 0);
    let nodes: Vec<_> = (0..g.states()).map(|x| graph.add_node(x)).collect();
    for (x, row) in g.rows.iter().enumerate() {
        for (y, r) in row {
            if r.is_positive() {
                graph.add_edge(nodes[x], nodes[*y], ());
            }
        }
    }
    let reversed = {
        let mut rev = graph.clone();
        rev.reverse();
        rev
    };
    let cond = condensation(graph, true);
    let mut sink_components: Vec<Vec<usize>> = cond
        .node_indices()
        .filter(|&c| cond.edges_directed(c, Direction::Outgoing).next().is_none())
        .map(|c| {
            let mut comp = cond[c].clone();
            comp.sort_unstable();
            comp
        })
        .collect();
    sink_components.sort();
    let mut absorbing: Vec<usize> = sink_components.iter().flatten().copied().collect();
    absorbing.sort_unstable();
    let mut seen = vec![false; g.states()];
    let mut stack: Vec<usize> = absorbing.clone();
    for &x in &absorbing {
        seen[x] = true;
    }
    while let Some(x) = stack.pop() {
        for e in reversed.edges(nodes[x]) {
            let y = e.target().index();
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    AbsorbingReport {
        is_proper: absorbing.len() < g.states(),
        reaches_all: seen.into_iter().all(|s| s),
        absorbing,
        sink_components,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FsVerdict {
    /// Proper absorbing sets for every tested `n`: no full-support Markov
    /// law with memory `m <= max_memory`; the pattern persisting over all
    /// tested lengths suggests every memory is excluded.
    NoMarkovLaw { max_memory: usize, pattern_persists: bool },
    Inconclusive { failing_n: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsReport {
    pub per_n: Vec<(usize, AbsorbingReport)>,
    pub verdict: FsVerdict,
}

/// Absorbing-set analysis over a list of cycle lengths. A proper absorbing
/// set on ℤ/nℤ excludes memories `m` with `m + L <= n`.
pub fn theorem_fs_conclusion<S: Scalar>(t: &JumpRateMatrix<S>, ns: &[usize], cap: usize) -> Result<FsReport> {
    if t.is_zero() {
        return Err(Error::Precondition("the rate matrix is identically zero".into()));
    }
    let mut per_n = Vec::new();
    for &n in ns {
        let g = build_cycle_generator(t, n, cap)?;
        per_n.push((n, absorbing_analysis(&g)));
    }
    let failing: Vec<usize> = per_n.iter().filter(|(_, r)| !r.is_proper).map(|(n, _)| *n).collect();
    let l = t.range();
    let verdict = match ns.iter().max() {
        Some(&nmax) if failing.is_empty() && nmax >= l => {
            FsVerdict::NoMarkovLaw { max_memory: nmax - l, pattern_persists: ns.len() > 1 }
        }
        _ => FsVerdict::Inconclusive { failing_n: failing },
    };
    Ok(FsReport { per_n, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    fn tasep() -> JumpRateMatrix<Q> {
        JumpRateMatrix::new(2, 2, [(vec![1, 0], vec![0, 1], q(1, 1))]).unwrap()
    }

    #[test]
    fn tasep_cycle_generator() {
        let g = build_cycle_generator(&tasep(), 3, DEFAULT_MAX_STATES).unwrap();
        assert_eq!(g.states(), 8);
        assert_eq!(g.rate(encode(2, &[1, 0, 0]), encode(2, &[0, 1, 0])), q(1, 1));
        for x in 0..8 {
            let s = g.row(x).iter().fold(g.diagonal(x).clone(), |a, (_, r)| a + r.clone());
            assert_eq!(s, q(0, 1));
        }
        let mu = product_measure(&[q(3, 4), q(1, 4)], 3);
        assert_eq!(stationarity_residual(&g, &mu).unwrap(), q(0, 1));
    }

    #[test]
    fn zero_rates() {
        let t = JumpRateMatrix::<Q>::zero(2, 2).unwrap();
        let g = build_cycle_generator(&t, 3, DEFAULT_MAX_STATES).unwrap();
        assert!(g.is_zero());
        let uniform = vec![q(1, 8); 8];
        assert_eq!(stationarity_residual(&g, &uniform).unwrap(), q(0, 1));
        let r = absorbing_analysis(&g);
        assert_eq!(r.absorbing.len(), 8);
        assert!(!r.is_proper);
        assert!(theorem_fs_conclusion(&t, &[3], DEFAULT_MAX_STATES).is_err());
    }

    #[test]
    fn state_cap_is_enforced() {
        assert!(matches!(build_cycle_generator(&tasep(), 5, 16), Err(Error::StateCap { needed: 32, cap: 16 })));
    }

    #[test]
    fn gibbs_of_uniform_kernel() {
        let k = MarkovKernel::<Q>::uniform(2, 1).unwrap();
        assert_eq!(gibbs_measure(&k, 3).unwrap(), vec![q(1, 8); 8]);
        let p = MarkovKernel::new(2, 1, vec![vec![q(1, 3), q(2, 3)], vec![q(1, 3), q(2, 3)]]).unwrap();
        assert_eq!(gibbs_measure(&p, 2).unwrap(), product_measure(&[q(1, 3), q(2, 3)], 2));
    }

    #[test]
    fn tasep_line_balance_vanishes() {
        let law = StationaryLaw::product(vec![q(1, 3), q(2, 3)]).unwrap();
        for n in 1..=4 {
            for x in Words::new(2, n) {
                assert_eq!(line_balance(&tasep(), &law, &x).unwrap(), q(0, 1));
            }
        }
    }

    #[test]
    fn tasep_fs_is_not_proper() {
        let r = theorem_fs_conclusion(&tasep(), &[4], DEFAULT_MAX_STATES).unwrap();
        assert!(!r.per_n[0].1.is_proper);
        assert_eq!(r.per_n[0].1.sink_components.len(), 5);
        assert!(matches!(r.verdict, FsVerdict::Inconclusive { .. }));
    }
}
