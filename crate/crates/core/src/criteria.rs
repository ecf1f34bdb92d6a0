//! Local balance table `Z` and the finite criteria built on it.
//!
//! With window width `s = 2m + L` and critical length `h = 4m + 2L - 1`,
//! `Z(a b c)` is the normalized in-minus-out rate of the middle block `b`
//! (length `L`) given `m` letters of context on each side.

use std::fmt;

use crate::error::{Error, Result};
use crate::jrm::{induced_rate_cyclic, JumpRateMatrix};
use crate::kernel::{MarkovKernel, StationaryLaw};
use crate::scalar::{Scalar, Tolerance};
use crate::word::{decode, encode, remove_at, replace_at, Word, Words};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalBalanceTable<S> {
    kappa: usize,
    memory: usize,
    range: usize,
    values: Vec<S>,
}

impl<S: Scalar> LocalBalanceTable<S> {
    pub fn width(&self) -> usize {
        2 * self.memory + self.range
    }

    pub fn get(&self, w: &[usize]) -> &S {
        debug_assert_eq!(w.len(), self.width());
        &self.values[encode(self.kappa, w)]
    }

    pub fn get_code(&self, code: usize) -> &S {
        &self.values[code]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// `(word, value)` pairs in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (Word, &S)> + '_ {
        let (k, s) = (self.kappa, self.width());
        self.values.iter().enumerate().map(move |(i, v)| (decode(k, s, i), v))
    }
}

/// Builds `Z` for a positive kernel.
pub fn z_table<S: Scalar>(t: &JumpRateMatrix<S>, law: &StationaryLaw<S>) -> Result<LocalBalanceTable<S>> {
    let kernel = law.kernel();
    if kernel.kappa() != t.kappa() {
        return Err(Error::Inconsistent("kernel and rates use different alphabets".into()));
    }
    if !kernel.is_positive() {
        return Err(Error::NonPositiveKernel);
    }
    let (k, m, l) = (t.kappa(), kernel.memory(), t.range());
    let s = 2 * m + l;
    let mut values = Vec::with_capacity(k.pow(s as u32));
    for w in Words::new(k, s) {
        let b = encode(k, &w[m..m + l]);
        let base = window_weight(kernel, &w, m, l);
        let mut z = -t.exit_rate_code(b);
        let mut wp = w.clone();
        for (u, rate) in t.incoming(b) {
            wp[m..m + l].copy_from_slice(&decode(k, l, *u));
            z = z + rate.clone() * window_weight(kernel, &wp, m, l) / base.clone();
        }
        values.push(z);
    }
    Ok(LocalBalanceTable { kappa: k, memory: m, range: l, values })
}

/// Product of the `m + L` kernel factors of `w` touching the middle block.
fn window_weight<S: Scalar>(kernel: &MarkovKernel<S>, w: &[usize], m: usize, l: usize) -> S {
    (0..m + l).fold(S::one(), |acc, j| acc * kernel.factor(&w[j..=j + m]).clone())
}

/// Rates, law and the derived `Z` table.
#[derive(Debug, Clone)]
pub struct CriterionContext<S> {
    t: JumpRateMatrix<S>,
    law: StationaryLaw<S>,
    tol: Tolerance,
    z: LocalBalanceTable<S>,
}

impl<S: Scalar> CriterionContext<S> {
    pub fn new(t: JumpRateMatrix<S>, law: StationaryLaw<S>, tol: Tolerance) -> Result<Self> {
        let z = z_table(&t, &law)?;
        Ok(CriterionContext { t, law, tol, z })
    }

    pub fn product(t: JumpRateMatrix<S>, rho: Vec<S>, tol: Tolerance) -> Result<Self> {
        crate::kernel::check_probability(&rho, tol)?;
        Self::new(t, StationaryLaw::product(rho)?, tol)
    }

    pub fn t(&self) -> &JumpRateMatrix<S> {
        &self.t
    }

    pub fn law(&self) -> &StationaryLaw<S> {
        &self.law
    }

    pub fn z(&self) -> &LocalBalanceTable<S> {
        &self.z
    }

    pub fn tol(&self) -> Tolerance {
        self.tol
    }

    pub fn kappa(&self) -> usize {
        self.t.kappa()
    }

    pub fn memory(&self) -> usize {
        self.law.memory()
    }

    pub fn range(&self) -> usize {
        self.t.range()
    }

    /// Window width `2m + L`.
    pub fn s(&self) -> usize {
        2 * self.memory() + self.range()
    }

    /// Critical length `4m + 2L - 1`.
    pub fn h(&self) -> usize {
        2 * self.s() - 1
    }

    pub fn is_zero(&self, v: &S) -> bool {
        self.tol.is_zero(v, self.t.norm_inf())
    }

    fn line_sum(&self, x: &[usize]) -> S {
        let s = self.s();
        if x.len() < s {
            return S::zero();
        }
        (0..=x.len() - s).fold(S::zero(), |acc, k| acc + self.z.get(&x[k..k + s]).clone())
    }

    fn cyclic_sum(&self, x: &[usize]) -> S {
        let (k, s, n) = (self.kappa(), self.s(), x.len());
        let mut total = S::zero();
        for start in 0..n {
            let code = (0..s).fold(0, |acc, j| acc * k + x[(start + j) % n]);
            total = total + self.z.get_code(code).clone();
        }
        total
    }
}

/// Normalized cyclic balance of `x` on ℤ/nℤ under the Gibbs measure of the
/// kernel. Uses the `Z` window sum when `n >= m + L`, direct summation
/// otherwise.
pub fn ncycle<S: Scalar>(ctx: &CriterionContext<S>, x: &[usize]) -> S {
    if x.len() >= ctx.memory() + ctx.range() {
        ctx.cyclic_sum(x)
    } else {
        ncycle_direct(ctx.t(), ctx.law().kernel(), x)
    }
}

/// `Cycle_n(x) / ν_n(x)` by summation over all configurations of ℤ/nℤ.
pub fn ncycle_direct<S: Scalar>(t: &JumpRateMatrix<S>, kernel: &MarkovKernel<S>, x: &[usize]) -> S {
    let n = x.len();
    let nx = kernel.cyclic_weight(x);
    let mut total = S::zero();
    for w in Words::new(t.kappa(), n) {
        if w == x {
            continue;
        }
        let inflow = induced_rate_cyclic(t, &w, x, n).expect("valid words");
        let outflow = induced_rate_cyclic(t, x, &w, n).expect("valid words");
        if !inflow.is_zero() {
            total = total + kernel.cyclic_weight(&w) * inflow / nx.clone();
        }
        total = total - outflow;
    }
    total
}

/// `Σ_{Sub(x,s)} Z - Σ_{Sub(x without its middle letter, s)} Z` for `|x| = h`.
pub fn master<S: Scalar>(ctx: &CriterionContext<S>, x: &[usize]) -> Result<S> {
    let h = ctx.h();
    if x.len() != h {
        return Err(Error::Length { expected: h, got: x.len() });
    }
    Ok(ctx.line_sum(x) - ctx.line_sum(&remove_at(x, ctx.s() - 1)))
}

/// Difference of the line sums of `x` and of `x` with its middle letter set
/// to `y`; equal to `ncycle(x) - ncycle(x')`.
pub fn replace<S: Scalar>(ctx: &CriterionContext<S>, x: &[usize], y: usize) -> Result<S> {
    let h = ctx.h();
    if x.len() != h {
        return Err(Error::Length { expected: h, got: x.len() });
    }
    if y >= ctx.kappa() {
        return Err(Error::Letter { letter: y, kappa: ctx.kappa() });
    }
    Ok(ctx.line_sum(x) - ctx.line_sum(&replace_at(x, ctx.s() - 1, y)))
}

/// Normalized line balance of the cylinder `x` (any `n >= 1`): the boundary
/// summed `Z` expression divided by the chain weight of `x`.
pub fn nline<S: Scalar>(ctx: &CriterionContext<S>, x: &[usize]) -> S {
    let (k, m, l, s) = (ctx.kappa(), ctx.memory(), ctx.range(), ctx.s());
    let q = l - 1 + m;
    let n = x.len();
    let chain = ctx.law().kernel().chain_weight(x);
    let mut total = S::zero();
    for left in Words::new(k, q) {
        for right in Words::new(k, q) {
            let mut y = left.clone();
            y.extend_from_slice(x);
            y.extend_from_slice(&right);
            let mut zsum = S::zero();
            for p in (q + 1 - l)..(q + n) {
                zsum = zsum + ctx.z.get(&y[p - m..p - m + s]).clone();
            }
            if !zsum.is_zero() {
                total = total + ctx.law().measure(&y) * zsum;
            }
        }
    }
    total / chain
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Invariant,
    NotInvariant,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Invariant => "invariant",
            Verdict::NotInvariant => "not-invariant",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness<S> {
    pub criterion: String,
    pub word: Word,
    /// Replacement letter for replace-type criteria.
    pub letter: Option<usize>,
    pub residual: S,
}

/// `W` on words of length `s - 1` with `Z(w) = W(suffix) - W(prefix)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCertificate<S> {
    kappa: usize,
    len: usize,
    values: Vec<S>,
}

impl<S: Scalar> PotentialCertificate<S> {
    /// Telescoping construction from `Z`, anchored at the constant word of
    /// `anchor`: `W(y) = Σ_k Z(anchor^{s-k} y[..k])`.
    pub fn from_table(table: &LocalBalanceTable<S>, anchor: usize) -> Self {
        let s = table.width();
        let k = table.kappa;
        let values = Words::new(k, s - 1)
            .map(|y| {
                (1..s).fold(S::zero(), |acc, j| {
                    let mut w = vec![anchor; s - j];
                    w.extend_from_slice(&y[..j]);
                    acc + table.get(&w).clone()
                })
            })
            .collect();
        PotentialCertificate { kappa: k, len: s - 1, values }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, y: &[usize]) -> &S {
        &self.values[encode(self.kappa, y)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Word, &S)> + '_ {
        let (k, len) = (self.kappa, self.len);
        self.values.iter().enumerate().map(move |(i, v)| (decode(k, len, i), v))
    }

    /// First word where `Z(w) != W(suffix) - W(prefix)`.
    pub fn first_violation(&self, table: &LocalBalanceTable<S>, tol: Tolerance, scale: f64) -> Option<(Word, S)> {
        table.iter().find_map(|(w, z)| {
            let d = z.clone() - (self.get(&w[1..]).clone() - self.get(&w[..self.len]).clone());
            (!tol.is_zero(&d, scale)).then_some((w, d))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport<S> {
    pub verdict: Verdict,
    pub criterion: String,
    pub witness: Option<Witness<S>>,
    pub certificate: Option<PotentialCertificate<S>>,
    pub criteria_evaluated: Vec<String>,
    pub words_enumerated: usize,
}

impl<S: Scalar> CriterionReport<S> {
    pub(crate) fn invariant(criterion: &str, words: usize) -> Self {
        CriterionReport {
            verdict: Verdict::Invariant,
            criterion: criterion.into(),
            witness: None,
            certificate: None,
            criteria_evaluated: vec![criterion.into()],
            words_enumerated: words,
        }
    }

    pub(crate) fn violated(criterion: &str, words: usize, word: Word, letter: Option<usize>, residual: S) -> Self {
        CriterionReport {
            verdict: Verdict::NotInvariant,
            criterion: criterion.into(),
            witness: Some(Witness { criterion: criterion.into(), word, letter, residual }),
            certificate: None,
            criteria_evaluated: vec![criterion.into()],
            words_enumerated: words,
        }
    }

    pub fn is_invariant(&self) -> bool {
        self.verdict == Verdict::Invariant
    }
}

fn probe_word(a: &[usize], s: usize) -> Word {
    let mut x = a.to_vec();
    x.extend(std::iter::repeat(0).take(s - 1));
    x
}

/// Decision on the line: `NCycle_h(a·0^{s-1}) = 0` for every `a` of length
/// `s`, followed by construction and verification of the potential `W`.
pub fn check_markov_line<S: Scalar>(ctx: &CriterionContext<S>) -> CriterionReport<S> {
    let s = ctx.s();
    let mut count = 0;
    for a in Words::new(ctx.kappa(), s) {
        count += 1;
        let x = probe_word(&a, s);
        let v = ncycle(ctx, &x);
        if !ctx.is_zero(&v) {
            return CriterionReport::violated("ncycle-probe", count, x, None, v);
        }
    }
    let w = PotentialCertificate::from_table(ctx.z(), 0);
    let mut report = CriterionReport::invariant("ncycle-probe", count);
    report.criteria_evaluated.push("potential".into());
    if let Some((word, d)) = w.first_violation(ctx.z(), ctx.tol(), ctx.t().norm_inf()) {
        return CriterionReport {
            verdict: Verdict::NotInvariant,
            criterion: "potential".into(),
            witness: Some(Witness { criterion: "potential".into(), word, letter: None, residual: d }),
            ..report
        };
    }
    report.certificate = Some(w);
    report
}

/// `NCycle_n ≡ 0` over every word of length `n`.
pub fn check_markov_cycle<S: Scalar>(ctx: &CriterionContext<S>, n: usize) -> CriterionReport<S> {
    let name = format!("ncycle-{n}");
    let mut count = 0;
    for x in Words::new(ctx.kappa(), n) {
        count += 1;
        let v = ncycle(ctx, &x);
        if !ctx.is_zero(&v) {
            return CriterionReport::violated(&name, count, x, None, v);
        }
    }
    CriterionReport::invariant(&name, count)
}

/// `NCycle_n ≡ 0` for every `1 <= n <= κ^m`.
pub fn check_markov_small_cycles<S: Scalar>(ctx: &CriterionContext<S>) -> CriterionReport<S> {
    let bound = ctx.kappa().pow(ctx.memory() as u32);
    let mut total = 0;
    let mut evaluated = Vec::new();
    for n in 1..=bound {
        let r = check_markov_cycle(ctx, n);
        total += r.words_enumerated;
        evaluated.push(r.criterion.clone());
        if !r.is_invariant() {
            return CriterionReport { criteria_evaluated: evaluated, words_enumerated: total, ..r };
        }
    }
    CriterionReport {
        criteria_evaluated: evaluated,
        ..CriterionReport::invariant("small-cycles", total)
    }
}

/// Product measure `ρ^ℤ` on the line; memory-0 instance of
/// [`check_markov_line`].
pub fn check_product_line<S: Scalar>(t: &JumpRateMatrix<S>, rho: &[S], tol: Tolerance) -> Result<CriterionReport<S>> {
    full_support(rho)?;
    let ctx = CriterionContext::product(t.clone(), rho.to_vec(), tol)?;
    Ok(check_markov_line(&ctx))
}

pub fn check_product_cycle<S: Scalar>(t: &JumpRateMatrix<S>, rho: &[S], n: usize, tol: Tolerance) -> Result<CriterionReport<S>> {
    full_support(rho)?;
    let ctx = CriterionContext::product(t.clone(), rho.to_vec(), tol)?;
    Ok(check_markov_cycle(&ctx, n))
}

fn full_support<S: Scalar>(rho: &[S]) -> Result<()> {
    if rho.iter().any(|v| !v.is_positive()) {
        return Err(Error::Precondition("rho must have full support; restrict the support first".into()));
    }
    Ok(())
}

/// The nine equivalent statements for a positive kernel, plus the
/// three-way cycle equivalence available for `(L, m) = (2, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    /// (i) `NLine_n ≡ 0` for `1 <= n <= line_max`, by the direct line oracle.
    pub line: bool,
    /// (ii) `Replace_h(a·0^{s-1}; 0) = 0`.
    pub replace_probe: bool,
    /// (iii) `Replace_h ≡ 0`.
    pub replace_all: bool,
    /// (iv) `Master_h(a·0^{s-1}) = 0`.
    pub master_probe: bool,
    /// (v) `Master_h ≡ 0`.
    pub master_all: bool,
    /// (vi) `NCycle_n ≡ 0` for `m + L <= n <= cycle_max`.
    pub cycles: bool,
    /// (vii) `NCycle_h ≡ 0`.
    pub cycle_h: bool,
    /// (viii) `NCycle_h(a·0^{s-1}) = 0`.
    pub cycle_probe: bool,
    /// (ix) a potential `W` exists.
    pub potential: bool,
    /// `[NCycle_7, NCycle_6 ∧ NCycle_5, NCycle_6 ∧ NCycle_4]` when `(L, m) = (2, 1)`.
    pub short_cycles: Option<[bool; 3]>,
    pub line_max: usize,
    pub cycle_max: usize,
}

impl EquivalenceReport {
    pub fn predicates(&self) -> [bool; 9] {
        [
            self.line,
            self.replace_probe,
            self.replace_all,
            self.master_probe,
            self.master_all,
            self.cycles,
            self.cycle_h,
            self.cycle_probe,
            self.potential,
        ]
    }

    pub fn all_agree(&self) -> bool {
        let p = self.predicates();
        p.iter().all(|&b| b == p[0])
    }

    pub fn short_cycles_agree(&self) -> bool {
        self.short_cycles.map_or(true, |[a, b, c]| a == b && b == c)
    }
}

fn all_words<S: Scalar>(ctx: &CriterionContext<S>, len: usize, f: impl Fn(&[usize]) -> S) -> bool {
    Words::new(ctx.kappa(), len).all(|x| ctx.is_zero(&f(&x)))
}

/// Evaluates every predicate independently. `line_max` bounds the lengths
/// used for (i); the default `h` suffices to expose any failure.
pub fn check_master_replace_equivalences<S: Scalar>(ctx: &CriterionContext<S>, line_max: Option<usize>) -> EquivalenceReport {
    let (k, s, h) = (ctx.kappa(), ctx.s(), ctx.h());
    let line_max = line_max.unwrap_or(h);
    let cycle_min = ctx.memory() + ctx.range();
    let cycle_max = h + 1;
    let line = (1..=line_max).all(|n| {
        all_words(ctx, n, |x| crate::oracle::line_balance(ctx.t(), ctx.law(), x).expect("valid word"))
    });
    let probes: Vec<Word> = Words::new(k, s).map(|a| probe_word(&a, s)).collect();
    let replace_probe = probes.iter().all(|x| ctx.is_zero(&replace(ctx, x, 0).expect("length h")));
    let replace_all = Words::new(k, h).all(|x| (0..k).all(|y| ctx.is_zero(&replace(ctx, &x, y).expect("length h"))));
    let master_probe = probes.iter().all(|x| ctx.is_zero(&master(ctx, x).expect("length h")));
    let master_all = all_words(ctx, h, |x| master(ctx, x).expect("length h"));
    let cycle_ok = |n: usize| all_words(ctx, n, |x| ncycle(ctx, x));
    let cycles = (cycle_min..=cycle_max).all(cycle_ok);
    let cycle_h = cycle_ok(h);
    let cycle_probe = probes.iter().all(|x| ctx.is_zero(&ncycle(ctx, x)));
    let potential = PotentialCertificate::from_table(ctx.z(), 0)
        .first_violation(ctx.z(), ctx.tol(), ctx.t().norm_inf())
        .is_none();
    let short_cycles = (ctx.range() == 2 && ctx.memory() == 1).then(|| {
        let c4 = cycle_ok(4);
        let c5 = cycle_ok(5);
        let c6 = cycle_ok(6);
        [cycle_h, c6 && c5, c6 && c4]
    });
    EquivalenceReport {
        line,
        replace_probe,
        replace_all,
        master_probe,
        master_all,
        cycles,
        cycle_h,
        cycle_probe,
        potential,
        short_cycles,
        line_max,
        cycle_max,
    }
}

/// Pair rates `p(δ)` on ℤ^d with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRateField<S> {
    offsets: Vec<(Vec<i64>, S)>,
}

impl<S: Scalar> PairRateField<S> {
    pub fn new(offsets: Vec<(Vec<i64>, S)>) -> Result<Self> {
        let d = offsets.first().map_or(0, |o| o.0.len());
        for (delta, p) in &offsets {
            if delta.len() != d {
                return Err(Error::Length { expected: d, got: delta.len() });
            }
            if delta.iter().all(|&c| c == 0) {
                return Err(Error::Parameter("offset 0 is not a pair".into()));
            }
            if p.is_negative() {
                return Err(Error::NegativeRate(p.to_string()));
            }
        }
        Ok(PairRateField { offsets })
    }

    pub fn offsets(&self) -> &[(Vec<i64>, S)] {
        &self.offsets
    }

    pub fn get(&self, delta: &[i64]) -> S {
        self.offsets
            .iter()
            .filter(|(d, _)| d == delta)
            .fold(S::zero(), |acc, (_, p)| acc + p.clone())
    }

    /// Smallest `N` with `p(δ) = 0` whenever `‖δ‖₁ >= N`.
    pub fn radius(&self) -> i64 {
        self.offsets
            .iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|(d, _)| d.iter().map(|c| c.abs()).sum::<i64>() + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.offsets.iter().all(|(d, _)| {
            let neg: Vec<i64> = d.iter().map(|c| -c).collect();
            self.get(d) == self.get(&neg)
        })
    }

    pub fn is_zero(&self) -> bool {
        self.offsets.iter().all(|(_, p)| p.is_zero())
    }
}

/// Product invariance on a lattice with pair rates `p(x, y) T`.
pub fn check_product_general_graph<S: Scalar>(
    t: &JumpRateMatrix<S>,
    rho: &[S],
    p: &PairRateField<S>,
    tol: Tolerance,
) -> Result<CriterionReport<S>> {
    if t.range() != 2 {
        return Err(Error::Precondition("pair rates need range 2".into()));
    }
    full_support(rho)?;
    if p.is_zero() {
        return Ok(CriterionReport::invariant("zero-pair-rates", 0));
    }
    if p.is_symmetric() {
        let ctx = CriterionContext::product(t.clone(), rho.to_vec(), tol)?;
        return Ok(check_markov_cycle(&ctx, 2));
    }
    check_product_line(t, rho, tol)
}

/// `S[(a,b) -> (c,d)] = T[(a,b) -> (c,d)] + T[(b,a) -> (d,c)]`.
pub fn symmetrize<S: Scalar>(t: &JumpRateMatrix<S>) -> Result<JumpRateMatrix<S>> {
    if t.range() != 2 {
        return Err(Error::Precondition("symmetrization needs range 2".into()));
    }
    let mut entries = Vec::new();
    for (from, to, r) in t.entry_words() {
        entries.push((from.clone(), to.clone(), r.clone()));
        entries.push((vec![from[1], from[0]], vec![to[1], to[0]], r));
    }
    JumpRateMatrix::new(t.kappa(), 2, entries)
}

/// Detailed balance of every window against the kernel weights, a
/// sufficient condition for `Z ≡ 0`.
pub fn is_reversible<S: Scalar>(t: &JumpRateMatrix<S>, kernel: &MarkovKernel<S>, tol: Tolerance) -> bool {
    let (k, m, l) = (t.kappa(), kernel.memory(), t.range());
    let scale = t.norm_inf();
    for a in Words::new(k, m) {
        for c in Words::new(k, m) {
            for (u, b, r) in t.entry_words() {
                let wrap = |mid: &[usize]| {
                    let mut w = a.clone();
                    w.extend_from_slice(mid);
                    w.extend_from_slice(&c);
                    window_weight(kernel, &w, m, l)
                };
                let lhs = r * wrap(&u);
                let rhs = wrap(&b) * t.rate(&b, &u);
                if !tol.is_zero(&(lhs - rhs), scale) {
                    return false;
                }
            }
        }
    }
    true
}

/// Result of restricting a system to a sub-alphabet.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportRestriction<S> {
    /// Closed support of size at least 2, re-indexed as `0..|S|`.
    Restricted { support: Vec<usize>, t: JumpRateMatrix<S>, law: Option<StationaryLaw<S>> },
    /// Closed single letter `a`: the constant configuration is invariant.
    Constant { letter: usize },
    /// A positive rate leaves the support.
    Escape { from: Word, to: Word, rate: S },
}

/// Checks closure of `support` under `T` and re-indexes the instance.
pub fn restrict_support<S: Scalar>(
    t: &JumpRateMatrix<S>,
    law: Option<&StationaryLaw<S>>,
    support: &[usize],
) -> Result<SupportRestriction<S>> {
    let k = t.kappa();
    let mut sup = support.to_vec();
    sup.sort_unstable();
    sup.dedup();
    if sup.is_empty() || sup.len() >= k || sup.iter().any(|&a| a >= k) {
        return Err(Error::Precondition("support must be a nonempty strict subset of the alphabet".into()));
    }
    let inside = |w: &[usize]| w.iter().all(|a| sup.contains(a));
    for (from, to, rate) in t.entry_words() {
        if inside(&from) && !inside(&to) {
            return Ok(SupportRestriction::Escape { from, to, rate });
        }
    }
    if sup.len() == 1 {
        return Ok(SupportRestriction::Constant { letter: sup[0] });
    }
    let index = |a: usize| sup.iter().position(|&b| b == a).expect("letter in support");
    let entries = t
        .entry_words()
        .into_iter()
        .filter(|(f, _, _)| inside(f))
        .map(|(f, to, r)| (f.into_iter().map(index).collect(), to.into_iter().map(index).collect(), r));
    let t2 = JumpRateMatrix::new(sup.len(), t.range(), entries)?;
    let law2 = law.map(|law| restrict_law(law, &sup)).transpose()?;
    Ok(SupportRestriction::Restricted { support: sup, t: t2, law: law2 })
}

fn restrict_law<S: Scalar>(law: &StationaryLaw<S>, sup: &[usize]) -> Result<StationaryLaw<S>> {
    let kernel = law.kernel();
    let (k, m) = (kernel.kappa(), kernel.memory());
    let k2 = sup.len();
    let mut rows = Vec::new();
    for ctx2 in Words::new(k2, m) {
        let ctx: Word = ctx2.iter().map(|&i| sup[i]).collect();
        let code = encode(k, &ctx);
        for (y, v) in kernel.row(code).iter().enumerate() {
            if !sup.contains(&y) && !v.is_zero() {
                return Err(Error::Inconsistent(format!("kernel leaves the support from context {ctx:?}")));
            }
        }
        rows.push(sup.iter().map(|&y| kernel.get(code, y).clone()).collect());
    }
    StationaryLaw::new(MarkovKernel::new(k2, m, rows)?)
}
