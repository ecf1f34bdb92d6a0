//! Product measures on ℤ² under rates indexed by 2x2 squares.
//!
//! A square pattern lists its cells in cyclic order
//! `(0,0), (1,0), (1,1), (0,1)`, so rotating a pattern rotates the square.
//! Patterns over a general [`Shape`] follow the lexicographic cell order.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::criteria::CriterionReport;
use crate::error::{Error, Result};
use crate::jrm::JumpRateMatrix;
use crate::scalar::{Scalar, Tolerance};
use crate::word::{decode, encode, Word, Words};

/// Cell offsets of the square window, in pattern order.
pub const SQUARE: [(i64, i64); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];

pub type Cell = (i64, i64);

/// A finite set of cells, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    cells: Vec<Cell>,
}

impl Shape {
    pub fn new<I: IntoIterator<Item = Cell>>(cells: I) -> Result<Self> {
        let set: BTreeSet<Cell> = cells.into_iter().collect();
        if set.is_empty() {
            return Err(Error::Parameter("a shape needs at least one cell".into()));
        }
        Ok(Shape { cells: set.into_iter().collect() })
    }

    pub fn gamma0() -> Self {
        Shape::new([(0, 0), (0, 1), (1, 0)]).expect("nonempty")
    }

    pub fn gamma1() -> Self {
        Shape::new([(0, 0), (0, 1), (1, 0), (2, 0)]).expect("nonempty")
    }

    pub fn gamma2() -> Self {
        Shape::new([(0, 0), (0, 1), (1, 0), (2, 0), (1, 1)]).expect("nonempty")
    }

    /// `⟦0, side-1⟧²`.
    pub fn hypercube(side: usize) -> Result<Self> {
        let s = side as i64;
        Shape::new((0..s).flat_map(|i| (0..s).map(move |j| (i, j))))
    }

    pub fn square() -> Self {
        Shape::hypercube(2).expect("nonempty")
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn index_of(&self, c: Cell) -> Option<usize> {
        self.cells.binary_search(&c).ok()
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.index_of(c).is_some()
    }

    pub fn with(&self, c: Cell) -> Self {
        Shape::new(self.cells.iter().copied().chain([c])).expect("nonempty")
    }

    /// Corners `c` such that the square `c + Sq` meets the shape.
    pub fn touching_squares(&self) -> Vec<Cell> {
        let set: BTreeSet<Cell> = self
            .cells
            .iter()
            .flat_map(|&(i, j)| SQUARE.iter().map(move |&(di, dj)| (i - di, j - dj)))
            .collect();
        set.into_iter().collect()
    }
}

/// Rates between square patterns: a range-4 [`JumpRateMatrix`] read in
/// [`SQUARE`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareJrm<S> {
    inner: JumpRateMatrix<S>,
}

impl<S: Scalar> SquareJrm<S> {
    pub fn new<I>(kappa: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, Word, S)>,
    {
        Ok(SquareJrm { inner: JumpRateMatrix::new(kappa, 4, entries)? })
    }

    pub fn from_jrm(inner: JumpRateMatrix<S>) -> Result<Self> {
        if inner.range() != 4 {
            return Err(Error::Length { expected: 4, got: inner.range() });
        }
        Ok(SquareJrm { inner })
    }

    pub fn zero(kappa: usize) -> Result<Self> {
        Self::new(kappa, std::iter::empty())
    }

    pub fn as_jrm(&self) -> &JumpRateMatrix<S> {
        &self.inner
    }

    pub fn kappa(&self) -> usize {
        self.inner.kappa()
    }

    pub fn rate(&self, from: &[usize], to: &[usize]) -> S {
        self.inner.rate(from, to)
    }

    pub fn cast<T: Scalar>(&self) -> SquareJrm<T> {
        SquareJrm { inner: self.inner.cast() }
    }
}

fn check_rho<S: Scalar>(kappa: usize, rho: &[S]) -> Result<()> {
    if rho.len() != kappa {
        return Err(Error::Length { expected: kappa, got: rho.len() });
    }
    if rho.iter().any(|r| !r.is_positive()) {
        return Err(Error::Precondition("product marginal must have full support".into()));
    }
    Ok(())
}

/// `Z(x) = Σ_y ρ(y)/ρ(x) T[y -> x] - T_out(x)` for a square pattern `x`.
pub fn boldz<S: Scalar>(t: &SquareJrm<S>, rho: &[S], x: &[usize]) -> Result<S> {
    check_rho(t.kappa(), rho)?;
    if x.len() != 4 {
        return Err(Error::Length { expected: 4, got: x.len() });
    }
    t.inner.alphabet().check(x)?;
    Ok(boldz_unchecked(t, rho, encode(t.kappa(), x)))
}

fn weight<S: Scalar>(rho: &[S], w: &[usize]) -> S {
    w.iter().fold(S::one(), |acc, &a| acc * rho[a].clone())
}

fn boldz_unchecked<S: Scalar>(t: &SquareJrm<S>, rho: &[S], code: usize) -> S {
    let k = t.kappa();
    let x = decode(k, 4, code);
    let wx = weight(rho, &x);
    let mut z = -t.inner.exit_rate_code(code);
    for (u, r) in t.inner.incoming(code) {
        z = z + weight(rho, &decode(k, 4, *u)) / wx.clone() * r.clone();
    }
    z
}

/// Precomputed [`boldz`] over all `κ⁴` square patterns.
#[derive(Debug, Clone)]
pub struct SquareBalance<S> {
    t: SquareJrm<S>,
    rho: Vec<S>,
    z: Vec<S>,
    /// Partial sums indexed base `κ + 1`, digit 0 marking a free cell.
    partials: Vec<S>,
}

impl<S: Scalar> SquareBalance<S> {
    pub fn new(t: &SquareJrm<S>, rho: &[S]) -> Result<Self> {
        check_rho(t.kappa(), rho)?;
        let k = t.kappa();
        let z: Vec<S> = (0..k.pow(4)).map(|c| boldz_unchecked(t, rho, c)).collect();
        let partials = Words::new(k + 1, 4)
            .map(|d| {
                let pattern = [0, 1, 2, 3].map(|i| d[i].checked_sub(1));
                partial_sum(k, rho, &z, &pattern)
            })
            .collect();
        Ok(SquareBalance { t: t.clone(), rho: rho.to_vec(), z, partials })
    }

    pub fn z(&self, x: &[usize]) -> &S {
        &self.z[encode(self.t.kappa(), x)]
    }

    pub fn values(&self) -> &[S] {
        &self.z
    }

    pub fn rho(&self) -> &[S] {
        &self.rho
    }

    /// `Z^{h∩C,h}`: free cells (`None`) are summed with weight ρ.
    pub fn partial(&self, pattern: &[Option<usize>; 4]) -> &S {
        let k = self.t.kappa();
        let code = pattern.iter().fold(0, |acc, p| acc * (k + 1) + p.map_or(0, |a| a + 1));
        &self.partials[code]
    }

    /// Normalized line balance of `x` on `shape`, decomposed over the
    /// squares meeting the shape.
    pub fn nline(&self, shape: &Shape, x: &[usize]) -> S {
        debug_assert_eq!(shape.len(), x.len());
        let mut total = S::zero();
        for (ci, cj) in shape.touching_squares() {
            let mut pattern = [None; 4];
            for (slot, &(di, dj)) in SQUARE.iter().enumerate() {
                pattern[slot] = shape.index_of((ci + di, cj + dj)).map(|p| x[p]);
            }
            total = total + self.partial(&pattern).clone();
        }
        total
    }

    fn is_zero(&self, v: &S, tol: Tolerance) -> bool {
        tol.is_zero(v, self.t.inner.norm_inf())
    }
}

fn partial_sum<S: Scalar>(k: usize, rho: &[S], z: &[S], pattern: &[Option<usize>; 4]) -> S {
    let free: Vec<usize> = (0..4).filter(|&i| pattern[i].is_none()).collect();
    let mut total = S::zero();
    for fill in Words::new(k, free.len()) {
        let mut w = [0usize; 4];
        let mut wt = S::one();
        for i in 0..4 {
            w[i] = match pattern[i] {
                Some(a) => a,
                None => {
                    let a = fill[free.iter().position(|&f| f == i).expect("free cell")];
                    wt = wt * rho[a].clone();
                    a
                }
            };
        }
        total = total + z[encode(k, &w)].clone() * wt;
    }
    total
}

/// Free function form of [`SquareBalance::partial`].
pub fn boldz_partial<S: Scalar>(t: &SquareJrm<S>, rho: &[S], pattern: &[Option<usize>; 4]) -> Result<S> {
    if pattern.iter().all(|p| p.is_none()) {
        return Err(Error::Precondition("the overlap with the domain is empty".into()));
    }
    Ok(SquareBalance::new(t, rho)?.partial(pattern).clone())
}

pub fn nline_2d<S: Scalar>(t: &SquareJrm<S>, rho: &[S], shape: &Shape, x: &[usize]) -> Result<S> {
    if x.len() != shape.len() {
        return Err(Error::Length { expected: shape.len(), got: x.len() });
    }
    t.inner.alphabet().check(x)?;
    Ok(SquareBalance::new(t, rho)?.nline(shape, x))
}

fn restrict(from: &Shape, to: &Shape, x: &[usize]) -> Vec<usize> {
    to.cells().iter().map(|&c| x[from.index_of(c).expect("sub-shape")]).collect()
}

/// Condition (i): NLine ≡ 0 on `E^{Γ0}`; condition (ii): NLine(x) equals
/// NLine(x restricted to Γ1) for every `x` on Γ2.
pub fn check_product_2d<S: Scalar>(t: &SquareJrm<S>, rho: &[S], tol: Tolerance) -> Result<CriterionReport<S>> {
    let bal = SquareBalance::new(t, rho)?;
    let k = t.kappa();
    let mut words = 0;
    let g0 = Shape::gamma0();
    for x in Words::new(k, g0.len()) {
        words += 1;
        let v = bal.nline(&g0, &x);
        if !bal.is_zero(&v, tol) {
            return Ok(CriterionReport::violated("nline-gamma0", words, x, None, v));
        }
    }
    let (g1, g2) = (Shape::gamma1(), Shape::gamma2());
    let codes: Vec<usize> = (0..k.pow(g2.len() as u32)).collect();
    let first = codes
        .par_iter()
        .map(|&c| {
            let x = decode(k, g2.len(), c);
            let v = bal.nline(&g2, &x) - bal.nline(&g1, &restrict(&g2, &g1, &x));
            (c, v)
        })
        .filter(|(_, v)| !bal.is_zero(v, tol))
        .min_by_key(|(c, _)| *c);
    words += codes.len();
    Ok(match first {
        Some((c, v)) => CriterionReport::violated("nline-gamma2-gamma1", words, decode(k, g2.len(), c), None, v),
        None => {
            let mut r = CriterionReport::invariant("square-window", words);
            r.criteria_evaluated = vec!["nline-gamma0".into(), "nline-gamma2-gamma1".into()];
            r
        }
    })
}

/// The general hypercube condition set: NLine(x(C ∪ {c})) = NLine(x(C)) for
/// all `C ⊂ ⟦0,2⟧²` and `c ∉ C`, the case `C = ∅` giving the single-vertex
/// condition.
pub fn check_product_qdq<S: Scalar>(t: &SquareJrm<S>, rho: &[S], tol: Tolerance) -> Result<CriterionReport<S>> {
    let bal = SquareBalance::new(t, rho)?;
    let k = t.kappa();
    let box3 = Shape::hypercube(3)?;
    let cells = box3.cells().to_vec();
    let mut pairs = Vec::new();
    for mask in 0u32..(1 << cells.len()) {
        for (ci, &c) in cells.iter().enumerate() {
            if mask & (1 << ci) == 0 {
                pairs.push((mask, c));
            }
        }
    }
    let results: Vec<(usize, Option<(Vec<usize>, S)>)> = pairs
        .par_iter()
        .map(|&(mask, c)| {
            let base: Vec<Cell> = cells.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &c)| c).collect();
            let bigger = Shape::new(base.iter().copied().chain([c])).expect("nonempty");
            let smaller = Shape::new(base).ok();
            let mut count = 0;
            for x in Words::new(k, bigger.len()) {
                count += 1;
                let lhs = bal.nline(&bigger, &x);
                let rhs = smaller.as_ref().map_or_else(S::zero, |s| bal.nline(s, &restrict(&bigger, s, &x)));
                let v = lhs - rhs;
                if !bal.is_zero(&v, tol) {
                    let mut labelled = vec![0usize; 9];
                    for (p, &cell) in bigger.cells().iter().enumerate() {
                        labelled[box3.index_of(cell).expect("inside")] = x[p] + 1;
                    }
                    return (count, Some((labelled, v)));
                }
            }
            (count, None)
        })
        .collect();
    let words = results.iter().map(|(c, _)| c).sum();
    Ok(match results.into_iter().find_map(|(_, w)| w) {
        // The witness lists the 3x3 box in lexicographic order, 0 marking
        // cells outside C ∪ {c} and a + 1 marking letter a.
        Some((word, v)) => CriterionReport::violated("nline-increment", words, word, None, v),
        None => CriterionReport::invariant("nline-increment", words),
    })
}

/// `Z ≡ 0` on every square pattern, a sufficient condition.
pub fn check_boldz_sufficient<S: Scalar>(t: &SquareJrm<S>, rho: &[S], tol: Tolerance) -> Result<bool> {
    let bal = SquareBalance::new(t, rho)?;
    Ok(bal.values().iter().all(|v| bal.is_zero(v, tol)))
}

/// Truncated Poisson(λ) on `0..κ`.
pub fn truncated_poisson<S: Scalar>(lambda: &S, kappa: usize) -> Vec<S> {
    let mut w = vec![S::one()];
    for k in 1..kappa {
        let next = w[k - 1].clone() * lambda.clone() / S::from_i64(k as i64);
        w.push(next);
    }
    let total = w.iter().fold(S::zero(), |a, b| a + b.clone());
    w.into_iter().map(|v| v / total.clone()).collect()
}

#[derive(Debug, Clone)]
pub struct MultinomialReport<S> {
    pub mass_preserving: bool,
    /// `(λ, Z ≡ 0, square criterion report)` for each sampled intensity.
    pub per_lambda: Vec<(S, bool, CriterionReport<S>)>,
}

impl<S: Scalar> MultinomialReport<S> {
    pub fn all_invariant(&self) -> bool {
        self.mass_preserving && self.per_lambda.iter().all(|(_, _, r)| r.is_invariant())
    }
}

/// Checks a truncated mass-preserving square model against truncated
/// Poisson products.
pub fn check_mass_preserving_multinomial<S: Scalar>(
    t: &SquareJrm<S>,
    lambdas: &[S],
    tol: Tolerance,
) -> Result<MultinomialReport<S>> {
    let mut per_lambda = Vec::new();
    for l in lambdas {
        if !l.is_positive() {
            return Err(Error::Parameter(format!("intensity {l} must be positive")));
        }
        let rho = truncated_poisson(l, t.kappa());
        let zero = check_boldz_sufficient(t, &rho, tol)?;
        per_lambda.push((l.clone(), zero, check_product_2d(t, &rho, tol)?));
    }
    Ok(MultinomialReport { mass_preserving: t.inner.is_mass_preserving(), per_lambda })
}
