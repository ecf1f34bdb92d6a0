//! Jump rate matrices and the rates they induce on longer words.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::word::{decode, encode, Alphabet, Word};

/// Sparse rates `T[w -> w']` between words of length `range`.
///
/// Keys are base-κ codes; iteration is lexicographic in (source, target).
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRateMatrix<S> {
    alphabet: Alphabet,
    range: usize,
    rates: BTreeMap<(usize, usize), S>,
    exit: Vec<S>,
    incoming: Vec<Vec<(usize, S)>>,
    outgoing: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> JumpRateMatrix<S> {
    /// Builds a matrix from `(from, to, rate)` triples. Duplicate pairs are
    /// summed and zero rates dropped.
    pub fn new<I>(kappa: usize, range: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, Word, S)>,
    {
        let alphabet = Alphabet::new(kappa)?;
        let mut coded = Vec::new();
        for (from, to, rate) in entries {
            for w in [&from, &to] {
                if w.len() != range {
                    return Err(Error::Length { expected: range, got: w.len() });
                }
                alphabet.check(w)?;
            }
            coded.push((encode(kappa, &from), encode(kappa, &to), rate));
        }
        Self::from_codes(alphabet, range, coded)
    }

    pub fn from_codes<I>(alphabet: Alphabet, range: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, S)>,
    {
        if range == 0 {
            return Err(Error::Parameter("range must be at least 1".into()));
        }
        let kappa = alphabet.kappa();
        let size = alphabet.count(range);
        let mut rates: BTreeMap<(usize, usize), S> = BTreeMap::new();
        for (f, t, r) in entries {
            if f >= size || t >= size {
                return Err(Error::Length { expected: size, got: f.max(t) });
            }
            if r.is_negative() {
                return Err(Error::NegativeRate(r.to_string()));
            }
            if r.is_zero() {
                continue;
            }
            if f == t {
                return Err(Error::Diagonal(decode(kappa, range, f)));
            }
            let slot = rates.entry((f, t)).or_insert_with(S::zero);
            *slot = slot.clone() + r;
        }
        let mut exit = vec![S::zero(); size];
        let mut incoming = vec![Vec::new(); size];
        let mut outgoing = vec![Vec::new(); size];
        for (&(f, t), r) in &rates {
            exit[f] = exit[f].clone() + r.clone();
            incoming[t].push((f, r.clone()));
            outgoing[f].push((t, r.clone()));
        }
        Ok(JumpRateMatrix { alphabet, range, rates, exit, incoming, outgoing })
    }

    pub fn zero(kappa: usize, range: usize) -> Result<Self> {
        Self::new(kappa, range, std::iter::empty())
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn kappa(&self) -> usize {
        self.alphabet.kappa()
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn rate(&self, from: &[usize], to: &[usize]) -> S {
        let k = self.kappa();
        self.rate_code(encode(k, from), encode(k, to))
    }

    pub fn rate_code(&self, from: usize, to: usize) -> S {
        self.rates.get(&(from, to)).cloned().unwrap_or_else(S::zero)
    }

    /// `T_out(w) = Σ_{w'} T[w -> w']`.
    pub fn exit_rate(&self, w: &[usize]) -> S {
        self.exit[encode(self.kappa(), w)].clone()
    }

    pub fn exit_rate_code(&self, code: usize) -> S {
        self.exit[code].clone()
    }

    /// Sources `u` with `T[u -> target] > 0`.
    pub fn incoming(&self, target: usize) -> &[(usize, S)] {
        &self.incoming[target]
    }

    pub fn outgoing(&self, source: usize) -> &[(usize, S)] {
        &self.outgoing[source]
    }

    /// Positive entries as coded `((from, to), rate)` pairs.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &S)> {
        self.rates.iter().map(|(&(f, t), r)| (f, t, r))
    }

    pub fn entry_words(&self) -> Vec<(Word, Word, S)> {
        let (k, l) = (self.kappa(), self.range);
        self.entries().map(|(f, t, r)| (decode(k, l, f), decode(k, l, t), r.clone())).collect()
    }

    pub fn nnz(&self) -> usize {
        self.rates.len()
    }

    pub fn is_zero(&self) -> bool {
        self.rates.is_empty()
    }

    /// Largest exit rate, the ‖T‖∞ used by float tolerances.
    pub fn norm_inf(&self) -> f64 {
        self.exit.iter().map(|r| r.to_f64()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: &S) -> Result<Self> {
        Self::from_codes(
            self.alphabet,
            self.range,
            self.entries().map(|(f, t, r)| (f, t, r.clone() * c.clone())),
        )
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        if other.alphabet != self.alphabet || other.range != self.range {
            return Err(Error::Inconsistent("summing matrices of different shapes".into()));
        }
        let all = self.entries().chain(other.entries()).map(|(f, t, r)| (f, t, r.clone()));
        Self::from_codes(self.alphabet, self.range, all)
    }

    pub fn cast<T: Scalar>(&self) -> JumpRateMatrix<T> {
        JumpRateMatrix::from_codes(
            self.alphabet,
            self.range,
            self.entries().map(|(f, t, r)| (f, t, r.cast::<T>())),
        )
        .expect("casting preserves validity")
    }

    /// True when every positive rate conserves the letter sum.
    pub fn is_mass_preserving(&self) -> bool {
        let (k, l) = (self.kappa(), self.range);
        self.entries().all(|(f, t, _)| {
            decode(k, l, f).iter().sum::<usize>() == decode(k, l, t).iter().sum::<usize>()
        })
    }
}

fn check_pair(alphabet: Alphabet, w: &[usize], z: &[usize]) -> Result<()> {
    if w.len() != z.len() {
        return Err(Error::Length { expected: w.len(), got: z.len() });
    }
    alphabet.check(w)?;
    alphabet.check(z)
}

/// Rate of the single jump `w -> z` on a segment: sum over windows lying
/// inside the word outside of which `w` and `z` agree.
pub fn induced_rate<S: Scalar>(t: &JumpRateMatrix<S>, w: &[usize], z: &[usize]) -> Result<S> {
    check_pair(t.alphabet(), w, z)?;
    let n = w.len();
    let l = t.range();
    let diffs: Vec<usize> = (0..n).filter(|&i| w[i] != z[i]).collect();
    let (Some(&lo), Some(&hi)) = (diffs.first(), diffs.last()) else {
        return Ok(S::zero());
    };
    if n < l || hi - lo + 1 > l {
        return Ok(S::zero());
    }
    let mut total = S::zero();
    let first = (hi + 1).saturating_sub(l);
    for a in first..=lo.min(n - l) {
        total = total + t.rate(&w[a..a + l], &z[a..a + l]);
    }
    Ok(total)
}

/// Same as [`induced_rate`] on the cycle ℤ/nℤ: all `n` wrapped windows are
/// used, even when `n < L` and a window covers a site twice.
pub fn induced_rate_cyclic<S: Scalar>(
    t: &JumpRateMatrix<S>,
    w: &[usize],
    z: &[usize],
    n: usize,
) -> Result<S> {
    check_pair(t.alphabet(), w, z)?;
    if w.len() != n {
        return Err(Error::Length { expected: n, got: w.len() });
    }
    let l = t.range();
    let k = t.kappa();
    let mut total = S::zero();
    if w == z {
        return Ok(total);
    }
    for a in 0..n {
        let mut covered = vec![false; n];
        let (mut from, mut to) = (0, 0);
        for j in 0..l {
            let p = (a + j) % n;
            covered[p] = true;
            from = from * k + w[p];
            to = to * k + z[p];
        }
        if (0..n).all(|p| covered[p] || w[p] == z[p]) {
            total = total + t.rate_code(from, to);
        }
    }
    Ok(total)
}

/// Boundary rates `β^ℓ`, `β^r` acting on the first and last `L-1` sites of
/// a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRates<S> {
    pub left: JumpRateMatrix<S>,
    pub right: JumpRateMatrix<S>,
}

impl<S: Scalar> BoundaryRates<S> {
    pub fn new(left: JumpRateMatrix<S>, right: JumpRateMatrix<S>) -> Result<Self> {
        if left.alphabet() != right.alphabet() || left.range() != right.range() {
            return Err(Error::Inconsistent("left and right boundary shapes differ".into()));
        }
        Ok(BoundaryRates { left, right })
    }

    pub fn zero(kappa: usize, range: usize) -> Result<Self> {
        Self::new(JumpRateMatrix::zero(kappa, range)?, JumpRateMatrix::zero(kappa, range)?)
    }

    pub fn range(&self) -> usize {
        self.left.range()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn tasep() -> JumpRateMatrix<Q> {
        JumpRateMatrix::new(2, 2, [(vec![1, 0], vec![0, 1], Q::from_i64(1))]).unwrap()
    }

    #[test]
    fn induced_rate_examples() {
        let t = tasep();
        assert_eq!(induced_rate(&t, &[1, 1, 0], &[1, 0, 1]).unwrap(), Q::from_i64(1));
        assert_eq!(induced_rate(&t, &[1, 0], &[0, 1]).unwrap(), Q::from_i64(1));
        assert_eq!(induced_rate(&t, &[1, 0, 1], &[1, 0, 1]).unwrap(), Q::from_i64(0));
        assert_eq!(induced_rate(&t, &[1, 0, 0], &[0, 0, 1]).unwrap(), Q::from_i64(0));
        assert!(induced_rate(&t, &[1, 0], &[0]).is_err());
    }

    #[test]
    fn cyclic_rate_wraps() {
        let t = tasep();
        assert_eq!(induced_rate_cyclic(&t, &[1, 0], &[0, 1], 2).unwrap(), Q::from_i64(1));
        assert_eq!(induced_rate_cyclic(&t, &[0, 1, 0], &[0, 0, 1], 3).unwrap(), Q::from_i64(1));
        assert_eq!(induced_rate_cyclic(&t, &[0, 0, 1], &[1, 0, 0], 3).unwrap(), Q::from_i64(1));
        assert_eq!(induced_rate_cyclic(&t, &[1], &[1], 1).unwrap(), Q::from_i64(0));
    }

    #[test]
    fn rejects_bad_entries() {
        let one = Q::from_i64(1);
        assert!(JumpRateMatrix::new(2, 2, [(vec![1, 0], vec![1, 0], one.clone())]).is_err());
        assert!(JumpRateMatrix::new(2, 2, [(vec![1, 0], vec![0, 1], -one.clone())]).is_err());
        assert!(JumpRateMatrix::new(2, 2, [(vec![2, 0], vec![0, 1], one.clone())]).is_err());
        assert!(JumpRateMatrix::new(2, 2, [(vec![1], vec![0], one)]).is_err());
    }

    #[test]
    fn duplicates_accumulate() {
        let one = Q::from_i64(1);
        let t = JumpRateMatrix::new(
            2,
            2,
            [(vec![1, 0], vec![0, 1], one.clone()), (vec![1, 0], vec![0, 1], one)],
        )
        .unwrap();
        assert_eq!(t.rate(&[1, 0], &[0, 1]), Q::from_i64(2));
        assert_eq!(t.exit_rate(&[1, 0]), Q::from_i64(2));
        assert_eq!(t.nnz(), 1);
    }
}
