//! Markov kernels with memory `m` and their stationary laws.

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tolerance};
use crate::word::{cyclic_window, encode, Alphabet, Words};

/// `M[u -> y]` for contexts `u` of length `m`; `m = 0` is a product measure
/// whose single row is the marginal ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel<S> {
    alphabet: Alphabet,
    memory: usize,
    entries: Vec<S>,
}

impl<S: Scalar> MarkovKernel<S> {
    /// Rows are indexed by the base-κ code of the context.
    pub fn new(kappa: usize, memory: usize, rows: Vec<Vec<S>>) -> Result<Self> {
        Self::with_tolerance(kappa, memory, rows, Tolerance::default())
    }

    pub fn with_tolerance(
        kappa: usize,
        memory: usize,
        rows: Vec<Vec<S>>,
        tol: Tolerance,
    ) -> Result<Self> {
        let alphabet = Alphabet::new(kappa)?;
        let nrows = alphabet.count(memory);
        if rows.len() != nrows {
            return Err(Error::Length { expected: nrows, got: rows.len() });
        }
        let mut entries = Vec::with_capacity(nrows * kappa);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != kappa {
                return Err(Error::Length { expected: kappa, got: row.len() });
            }
            let mut sum = S::zero();
            for v in &row {
                if v.is_negative() && !tol.is_zero(v, 0.0) || *v > S::one() && !tol.is_zero(&(v.clone() - S::one()), 0.0) {
                    return Err(Error::KernelEntry(v.to_string()));
                }
                sum = sum + v.clone();
            }
            if !tol.is_zero(&(sum.clone() - S::one()), 0.0) {
                return Err(Error::RowSum { row: i, sum: sum.to_string() });
            }
            entries.extend(row);
        }
        Ok(MarkovKernel { alphabet, memory, entries })
    }

    /// Memory-0 kernel of the product measure with marginal `rho`.
    pub fn product(rho: Vec<S>) -> Result<Self> {
        let kappa = rho.len();
        Self::new(kappa, 0, vec![rho])
    }

    pub fn uniform(kappa: usize, memory: usize) -> Result<Self> {
        let p = S::from_ratio(1, kappa as i64);
        let nrows = Alphabet::new(kappa)?.count(memory);
        Self::new(kappa, memory, vec![vec![p; kappa]; nrows])
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn kappa(&self) -> usize {
        self.alphabet.kappa()
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn get(&self, context: usize, y: usize) -> &S {
        &self.entries[context * self.kappa() + y]
    }

    pub fn row(&self, context: usize) -> &[S] {
        let k = self.kappa();
        &self.entries[context * k..(context + 1) * k]
    }

    pub fn rows(&self) -> Vec<Vec<S>> {
        self.entries.chunks(self.kappa()).map(|r| r.to_vec()).collect()
    }

    /// Weight of a window of length `m + 1`: `M[w[..m] -> w[m]]`.
    pub fn factor(&self, window: &[usize]) -> &S {
        let m = self.memory;
        debug_assert_eq!(window.len(), m + 1);
        self.get(encode(self.kappa(), &window[..m]), window[m])
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().all(|v| v.is_positive())
    }

    /// `Π_j M(x[j..=j+m])` over the windows inside `x` (empty product is 1).
    pub fn chain_weight(&self, x: &[usize]) -> S {
        let m = self.memory;
        let mut w = S::one();
        if x.len() > m {
            for j in 0..x.len() - m {
                w = w * self.factor(&x[j..=j + m]).clone();
            }
        }
        w
    }

    /// Cyclic weight `Π_{j<n} M(x[j..=j+m] mod n)` of a word on ℤ/nℤ.
    pub fn cyclic_weight(&self, x: &[usize]) -> S {
        let m = self.memory;
        (0..x.len()).fold(S::one(), |acc, j| acc * self.factor(&cyclic_window(x, j, m + 1)).clone())
    }

    pub fn cast<T: Scalar>(&self) -> MarkovKernel<T> {
        MarkovKernel {
            alphabet: self.alphabet,
            memory: self.memory,
            entries: self.entries.iter().map(|v| v.cast::<T>()).collect(),
        }
    }
}

/// A kernel together with its stationary block distribution ρ, indexed by
/// words of length `max(m, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryLaw<S> {
    kernel: MarkovKernel<S>,
    rho: Vec<S>,
}

impl<S: Scalar> StationaryLaw<S> {
    /// Computes ρ from the kernel.
    pub fn new(kernel: MarkovKernel<S>) -> Result<Self> {
        crate::numerics::stationary_distribution(&kernel)
    }

    /// Product law with marginal `rho`.
    pub fn product(rho: Vec<S>) -> Result<Self> {
        let kernel = MarkovKernel::product(rho.clone())?;
        Ok(StationaryLaw { kernel, rho })
    }

    /// Pairs a kernel with a given ρ after checking it is a stationary
    /// probability vector.
    pub fn with_rho(kernel: MarkovKernel<S>, rho: Vec<S>, tol: Tolerance) -> Result<Self> {
        let k = kernel.kappa();
        let m = kernel.memory();
        let blocks = k.pow(m.max(1) as u32);
        if rho.len() != blocks {
            return Err(Error::Length { expected: blocks, got: rho.len() });
        }
        check_probability(&rho, tol)?;
        if m == 0 {
            if kernel.row(0) != rho.as_slice()
                && !rho.iter().zip(kernel.row(0)).all(|(a, b)| tol.is_zero(&(a.clone() - b.clone()), 0.0))
            {
                return Err(Error::Inconsistent("rho differs from the product kernel row".into()));
            }
        } else {
            for b in 0..blocks {
                let mut v = S::zero();
                for y in 0..k {
                    let a = y * blocks / k + b / k;
                    v = v + rho[a].clone() * kernel.get(a, b % k).clone();
                }
                if !tol.is_zero(&(v - rho[b].clone()), 0.0) {
                    return Err(Error::Inconsistent(format!("rho is not stationary at block {b}")));
                }
            }
        }
        Ok(StationaryLaw { kernel, rho })
    }

    pub(crate) fn from_parts(kernel: MarkovKernel<S>, rho: Vec<S>) -> Self {
        StationaryLaw { kernel, rho }
    }

    pub fn kernel(&self) -> &MarkovKernel<S> {
        &self.kernel
    }

    pub fn rho(&self) -> &[S] {
        &self.rho
    }

    pub fn memory(&self) -> usize {
        self.kernel.memory()
    }

    pub fn kappa(&self) -> usize {
        self.kernel.kappa()
    }

    /// Probability of the cylinder `w` under the stationary chain.
    pub fn measure(&self, w: &[usize]) -> S {
        let m = self.memory();
        let k = self.kappa();
        if m == 0 {
            return w.iter().fold(S::one(), |acc, &a| acc * self.rho[a].clone());
        }
        if w.len() < m {
            let mut total = S::zero();
            for ext in Words::new(k, m - w.len()) {
                let mut full = w.to_vec();
                full.extend(ext);
                total = total + self.rho[encode(k, &full)].clone();
            }
            return total;
        }
        self.rho[encode(k, &w[..m])].clone() * self.kernel.chain_weight(w)
    }

    pub fn cast<T: Scalar>(&self) -> StationaryLaw<T> {
        StationaryLaw {
            kernel: self.kernel.cast(),
            rho: self.rho.iter().map(|v| v.cast::<T>()).collect(),
        }
    }
}

pub fn check_probability<S: Scalar>(p: &[S], tol: Tolerance) -> Result<()> {
    let mut sum = S::zero();
    for v in p {
        if v.is_negative() && !tol.is_zero(v, 0.0) {
            return Err(Error::NotProbability(format!("negative entry {v}")));
        }
        sum = sum + v.clone();
    }
    if !tol.is_zero(&(sum.clone() - S::one()), 0.0) {
        return Err(Error::NotProbability(format!("sum is {sum}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    #[test]
    fn kernel_validation() {
        assert!(MarkovKernel::new(2, 1, vec![vec![q(1, 2), q(1, 2)], vec![q(1, 3), q(2, 3)]]).is_ok());
        assert!(MarkovKernel::new(2, 1, vec![vec![q(1, 2), q(1, 3)], vec![q(1, 3), q(2, 3)]]).is_err());
        assert!(MarkovKernel::new(2, 1, vec![vec![q(3, 2), q(-1, 2)], vec![q(1, 3), q(2, 3)]]).is_err());
        assert!(MarkovKernel::new(2, 1, vec![vec![q(1, 2), q(1, 2)]]).is_err());
    }

    #[test]
    fn measure_of_short_and_long_words() {
        let k = MarkovKernel::new(2, 1, vec![vec![q(1, 2), q(1, 2)], vec![q(1, 4), q(3, 4)]]).unwrap();
        let law = StationaryLaw::new(k).unwrap();
        assert_eq!(law.rho(), &[q(1, 3), q(2, 3)]);
        assert_eq!(law.measure(&[1, 1]), q(2, 3) * q(3, 4));
        assert_eq!(law.measure(&[]), q(1, 1));
        let total: Q = Words::new(2, 3).map(|w| law.measure(&w)).sum();
        assert_eq!(total, q(1, 1));
    }

    #[test]
    fn product_law_and_weights() {
        let law = StationaryLaw::product(vec![q(1, 4), q(3, 4)]).unwrap();
        assert_eq!(law.measure(&[1, 0, 1]), q(9, 64));
        assert_eq!(law.kernel().chain_weight(&[1, 0]), q(3, 16));
        assert_eq!(law.kernel().cyclic_weight(&[1, 0]), q(3, 16));
        assert!(StationaryLaw::with_rho(law.kernel().clone(), vec![q(1, 2), q(1, 2)], Tolerance::default()).is_err());
    }
}
