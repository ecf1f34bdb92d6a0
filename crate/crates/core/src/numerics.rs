//! Dense linear algebra over [`Scalar`]: elimination, nullspaces,
//! stationary laws and Perron pairs.

use crate::error::{Error, Result};
use crate::kernel::{MarkovKernel, StationaryLaw};
use crate::scalar::{Scalar, Tolerance};

/// Power iteration stops when successive eigenvalue estimates agree to this
/// relative tolerance.
pub const PERRON_REL_TOL: f64 = 1e-13;
pub const PERRON_MAX_ITER: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Length { expected: c, got: row.len() });
            }
            data.extend(row);
        }
        Ok(DenseMatrix { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone()))
            .collect()
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[S]) -> Vec<S> {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(S::zero(), |acc, i| acc + v[i].clone() * self.get(i, j).clone()))
            .collect()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> DenseMatrix<T> {
        DenseMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
}

/// Solution set of `A x = b`.
#[derive(Debug, Clone, PartialEq)]
pub enum SolutionSet<S> {
    Unique(Vec<S>),
    /// `particular + span(basis)`.
    Affine { particular: Vec<S>, basis: Vec<Vec<S>> },
    Empty,
}

impl<S: Scalar> SolutionSet<S> {
    pub fn dimension(&self) -> Option<usize> {
        match self {
            SolutionSet::Unique(_) => Some(0),
            SolutionSet::Affine { basis, .. } => Some(basis.len()),
            SolutionSet::Empty => None,
        }
    }

    pub fn particular(&self) -> Option<&[S]> {
        match self {
            SolutionSet::Unique(x) | SolutionSet::Affine { particular: x, .. } => Some(x),
            SolutionSet::Empty => None,
        }
    }

    pub fn basis(&self) -> &[Vec<S>] {
        match self {
            SolutionSet::Affine { basis, .. } => basis,
            _ => &[],
        }
    }
}

/// Reduced row echelon form of the augmented matrix `[A | b]` in place.
/// Returns pivot columns. Float mode uses partial pivoting and treats
/// entries below `tol` as zero.
fn rref<S: Scalar>(m: &mut Vec<Vec<S>>, ncols: usize, tol: f64) -> Vec<usize> {
    let nrows = m.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let pick = if S::EXACT {
            (r..nrows).find(|&i| !m[i][c].is_zero())
        } else {
            (r..nrows)
                .filter(|&i| !m[i][c].is_negligible(tol))
                .max_by(|&a, &b| m[a][c].abs().partial_cmp(&m[b][c].abs()).unwrap_or(std::cmp::Ordering::Equal))
        };
        let Some(p) = pick else { continue };
        m.swap(r, p);
        let inv = S::one() / m[r][c].clone();
        for v in m[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        for i in 0..nrows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..m[i].len() {
                    let d = f.clone() * m[r][j].clone();
                    m[i][j] = m[i][j].clone() - d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Gaussian elimination for `A x = b`.
pub fn solve_linear<S: Scalar>(a: &DenseMatrix<S>, b: &[S], tol: Tolerance) -> Result<SolutionSet<S>> {
    if b.len() != a.rows() {
        return Err(Error::Length { expected: a.rows(), got: b.len() });
    }
    let n = a.cols();
    let mut aug: Vec<Vec<S>> = (0..a.rows())
        .map(|i| {
            let mut row = a.row(i).to_vec();
            row.push(b[i].clone());
            row
        })
        .collect();
    let pivots = rref(&mut aug, n, tol.abs);
    for row in aug.iter().skip(pivots.len()) {
        if !tol.is_zero(&row[n], 0.0) {
            return Ok(SolutionSet::Empty);
        }
    }
    let mut particular = vec![S::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        particular[c] = aug[r][n].clone();
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    if free.is_empty() {
        return Ok(SolutionSet::Unique(particular));
    }
    let basis = free
        .iter()
        .map(|&f| {
            let mut v = vec![S::zero(); n];
            v[f] = S::one();
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = -aug[r][f].clone();
            }
            v
        })
        .collect();
    Ok(SolutionSet::Affine { particular, basis })
}

/// Basis of `{x : A x = 0}`.
pub fn nullspace<S: Scalar>(a: &DenseMatrix<S>, tol: Tolerance) -> Vec<Vec<S>> {
    let zero = vec![S::zero(); a.rows()];
    match solve_linear(a, &zero, tol).expect("dimensions match") {
        SolutionSet::Affine { basis, .. } => basis,
        _ => Vec::new(),
    }
}

/// Transition matrix of the chain on length-`m` blocks driven by a memory-`m`
/// kernel (`κ x κ` kernel itself for `m = 1`).
pub fn block_chain<S: Scalar>(kernel: &MarkovKernel<S>) -> DenseMatrix<S> {
    let k = kernel.kappa();
    let m = kernel.memory().max(1);
    let n = k.pow(m as u32);
    let mut p = DenseMatrix::zeros(n, n);
    for a in 0..n {
        for y in 0..k {
            let v = if kernel.memory() == 0 { kernel.get(0, y) } else { kernel.get(a, y) };
            p.set(a, (a * k) % n + y, v.clone());
        }
    }
    p
}

/// Unique stationary ρ of the block chain of `kernel`.
pub fn stationary_distribution<S: Scalar>(kernel: &MarkovKernel<S>) -> Result<StationaryLaw<S>> {
    if kernel.memory() == 0 {
        return Ok(StationaryLaw::from_parts(kernel.clone(), kernel.row(0).to_vec()));
    }
    let p = block_chain(kernel);
    let n = p.rows();
    // ρ (P - I) = 0 and Σρ = 1, written as (P - I)^t ρ = 0 plus a row of ones.
    let mut a = DenseMatrix::zeros(n + 1, n);
    for i in 0..n {
        for j in 0..n {
            let mut v = p.get(j, i).clone();
            if i == j {
                v = v - S::one();
            }
            a.set(i, j, v);
        }
        a.set(n, i, S::one());
    }
    let mut b = vec![S::zero(); n + 1];
    b[n] = S::one();
    let tol = Tolerance::new(1e-12);
    match solve_linear(&a, &b, tol)? {
        SolutionSet::Unique(rho) => {
            let rho: Vec<S> = rho.into_iter().map(|v| if v.is_negative() && v.is_negligible(tol.abs) { S::zero() } else { v }).collect();
            crate::kernel::check_probability(&rho, tol)?;
            Ok(StationaryLaw::from_parts(kernel.clone(), rho))
        }
        SolutionSet::Affine { basis, .. } => Err(Error::NonUniqueStationary(basis.len() + 1)),
        SolutionSet::Empty => Err(Error::Inconsistent("no stationary law".into())),
    }
}

/// Perron eigenvalue with left and right eigenvectors, normalized by
/// `ℓ·1 = 1` and `ℓ·r = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<S> {
    pub value: S,
    pub left: Vec<S>,
    pub right: Vec<S>,
}

/// Strong connectivity of the support graph of a square matrix.
pub fn is_irreducible<S: Scalar>(a: &DenseMatrix<S>) -> bool {
    let n = a.rows();
    if n == 0 {
        return false;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let e = if forward { a.get(i, j) } else { a.get(j, i) };
                if !seen[j] && !e.is_zero() {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

fn check_perron_input<S: Scalar>(a: &DenseMatrix<S>) -> Result<()> {
    if a.rows() != a.cols() {
        return Err(Error::Length { expected: a.rows(), got: a.cols() });
    }
    if a.data.iter().any(|v| v.is_negative()) {
        return Err(Error::NegativeEntry);
    }
    if !is_irreducible(a) {
        return Err(Error::Reducible);
    }
    Ok(())
}

/// Power iteration on `A + I` (aperiodic even when `A` is periodic).
fn power_vector(a: &DenseMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let n = a.rows();
    let mut v = vec![1.0 / n as f64; n];
    let mut lambda = 0.0;
    for it in 0..PERRON_MAX_ITER {
        let mut w = a.mul_vec(&v);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += vi;
        }
        let norm: f64 = w.iter().sum();
        let next = norm - 1.0;
        for wi in w.iter_mut() {
            *wi /= norm;
        }
        let delta = w.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        v = w;
        if it > 0 && (next - lambda).abs() <= PERRON_REL_TOL * next.abs().max(1.0) && delta <= PERRON_REL_TOL {
            return Ok((next, v));
        }
        lambda = next;
    }
    Err(Error::NoConvergence(PERRON_MAX_ITER))
}

/// One refinement solve: fixes the largest component and solves the
/// remaining rows of `(A - λI) x = 0`.
fn refine(a: &DenseMatrix<f64>, lambda: f64, v: &[f64]) -> Vec<f64> {
    let n = a.rows();
    let fix = (0..n).max_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap()).unwrap_or(0);
    let mut m = DenseMatrix::zeros(n, n);
    let mut b = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let mut x = *a.get(i, j);
            if i == j {
                x -= lambda;
            }
            if j == fix {
                b[i] -= x * v[fix];
            } else {
                m.set(i, j, x);
            }
        }
    }
    m.set(fix, fix, 1.0);
    for j in 0..n {
        if j != fix {
            m.set(fix, j, 0.0);
        }
    }
    b[fix] = v[fix];
    match solve_linear(&m, &b, Tolerance::new(1e-14)) {
        Ok(SolutionSet::Unique(x)) if x.iter().all(|&t| t > 0.0) => x,
        _ => v.to_vec(),
    }
}

fn normalize_pair<S: Scalar>(value: S, left: Vec<S>, right: Vec<S>) -> EigenPair<S> {
    let s = left.iter().fold(S::zero(), |acc, x| acc + x.clone());
    let left: Vec<S> = left.into_iter().map(|x| x / s.clone()).collect();
    let dot = left.iter().zip(&right).fold(S::zero(), |acc, (l, r)| acc + l.clone() * r.clone());
    let right = right.into_iter().map(|x| x / dot.clone()).collect();
    EigenPair { value, left, right }
}

fn float_pair(a: &DenseMatrix<f64>) -> Result<EigenPair<f64>> {
    let (lambda, r) = power_vector(a)?;
    let (_, l) = power_vector(&a.transpose())?;
    let r = refine(a, lambda, &r);
    let l = refine(&a.transpose(), lambda, &l);
    Ok(normalize_pair(lambda, l, r))
}

/// Perron pair of a nonnegative irreducible matrix.
///
/// Float scalars use power iteration. Exact scalars rationalize the float
/// eigenvalue and take exact nullspaces; [`Error::NotRational`] is returned
/// when the eigen data is not rational.
pub fn perron_pair<S: Scalar>(a: &DenseMatrix<S>) -> Result<EigenPair<S>> {
    check_perron_input(a)?;
    let af = a.map(|v| v.to_f64());
    let fp = float_pair(&af)?;
    if !S::EXACT {
        return Ok(EigenPair {
            value: S::from_f64_approx(fp.value),
            left: fp.left.iter().map(|&x| S::from_f64_approx(x)).collect(),
            right: fp.right.iter().map(|&x| S::from_f64_approx(x)).collect(),
        });
    }
    let lambda = S::from_f64_approx(fp.value);
    let n = a.rows();
    let mut shifted = a.clone();
    for i in 0..n {
        shifted.set(i, i, a.get(i, i).clone() - lambda.clone());
    }
    let exact = Tolerance::default();
    let right = nullspace(&shifted, exact);
    let left = nullspace(&shifted.transpose(), exact);
    if right.len() != 1 || left.len() != 1 {
        return Err(Error::NotRational);
    }
    let orient = |v: &Vec<S>| {
        let neg = v.iter().any(|x| x.is_negative());
        let v: Vec<S> = if neg { v.iter().map(|x| -x.clone()).collect() } else { v.clone() };
        v.iter().all(|x| x.is_positive()).then_some(v)
    };
    let (Some(l), Some(r)) = (orient(&left[0]), orient(&right[0])) else {
        return Err(Error::NotRational);
    };
    Ok(normalize_pair(lambda, l, r))
}
