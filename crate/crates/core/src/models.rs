//! Catalog of concrete particle systems with their expected verdicts.
//!
//! Every model is available as a typed constructor and through [`build`],
//! which takes named scalar parameters. Models on infinite alphabets
//! (zero-range, PushTASEP blocks) live on the truncation `⟦0,κ-1⟧` with the
//! jumps leaving it removed.

use std::collections::{BTreeMap, BTreeSet};

use crate::criteria::{check_markov_line, check_product_line, ncycle, z_table, CriterionContext};
use crate::error::{Error, Result};
use crate::jrm::JumpRateMatrix;
use crate::kernel::{MarkovKernel, StationaryLaw};
use crate::lattice2d::{check_mass_preserving_multinomial, check_product_2d, SquareJrm};
use crate::oracle::{theorem_fs_conclusion, FsVerdict, DEFAULT_MAX_STATES};
use crate::scalar::{Scalar, Tolerance};
use crate::search::find_product;
use crate::word::{encode, Alphabet, Word, Words};

pub type Params<S> = BTreeMap<String, S>;

/// Names accepted by [`build`].
pub const MODEL_NAMES: &[&str] = &[
    "tasep",
    "contact",
    "contact3",
    "voter",
    "stochastic_ising",
    "tasep3",
    "tasep3_cyclic",
    "tasep3_exchange",
    "zero_range",
    "pushtasep_blocks",
    "hmc_example",
    "kappa2_general",
    "square_flip",
    "square_pair_flip",
    "square_shift",
    "square_rotation",
    "square_free",
    "square_three_colour",
    "square_ball_move",
    "square_urn_shift",
];

#[derive(Debug, Clone, PartialEq)]
pub enum System<S> {
    Line(JumpRateMatrix<S>),
    Square(SquareJrm<S>),
}

impl<S: Scalar> System<S> {
    pub fn kappa(&self) -> usize {
        match self {
            System::Line(t) => t.kappa(),
            System::Square(t) => t.kappa(),
        }
    }

    pub fn as_jrm(&self) -> &JumpRateMatrix<S> {
        match self {
            System::Line(t) => t,
            System::Square(t) => t.as_jrm(),
        }
    }
}

/// A checkable statement about a model.
#[derive(Debug, Clone, PartialEq)]
pub enum Claim<S> {
    /// `Z ≡ 0` for the law.
    BalanceVanishes(StationaryLaw<S>),
    LineInvariant(StationaryLaw<S>),
    LineNotInvariant(StationaryLaw<S>),
    ProductInvariant(Vec<S>),
    ProductNotInvariant(Vec<S>),
    /// `NCycle_3 ≡ 0` for the product on words with letters at most
    /// `max_letter`, the part of a truncation that no removed jump reaches.
    ProductInvariantInterior { rho: Vec<S>, max_letter: usize },
    /// Every full-support product measure is invariant on the line.
    AllProducts,
    /// Proper absorbing sets on every listed cycle length.
    NoFullSupportMarkov { ns: Vec<usize> },
    /// The absorbing set on ℤ/nℤ contains the constant configurations of
    /// `letters` (and nothing else when `exact`).
    AbsorbingConstants { letters: Vec<usize>, exact: bool, ns: Vec<usize> },
    /// The kernel's stationary vector.
    StationaryVector { kernel: MarkovKernel<S>, rho: Vec<S> },
    /// The π-projection exists and has exactly these entries.
    Projection { pi: Vec<usize>, entries: Vec<(Word, Word, S)> },
    /// `μ(111)/μ(11)` and `μ(11)/μ(1)` for the projected law.
    ProjectedRatios { law: StationaryLaw<S>, pi: Vec<usize>, triple: S, pair: S },
    SquareInvariant(Vec<S>),
    SquareNotInvariant(Vec<S>),
    /// Truncated Poisson products invariant for each intensity.
    PoissonInvariant(Vec<S>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expected<S> {
    pub claim: Claim<S>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec<S> {
    pub name: String,
    pub params: Params<S>,
    pub system: System<S>,
    pub expected: Vec<Expected<S>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub note: String,
    pub holds: bool,
    pub detail: String,
}

impl<S: Scalar> ModelSpec<S> {
    fn new(name: &str, params: Params<S>, system: System<S>) -> Self {
        ModelSpec { name: name.into(), params, system, expected: Vec::new() }
    }

    fn expect(mut self, claim: Claim<S>, note: &str) -> Self {
        self.expected.push(Expected { claim, note: note.into() });
        self
    }

    /// Evaluates every expected claim.
    pub fn evaluate(&self, tol: Tolerance) -> Result<Vec<Outcome>> {
        self.expected.iter().map(|e| self.evaluate_one(e, tol)).collect()
    }

    fn line(&self) -> Result<&JumpRateMatrix<S>> {
        match &self.system {
            System::Line(t) => Ok(t),
            System::Square(_) => Err(Error::Precondition(format!("{} is a square model", self.name))),
        }
    }

    fn square(&self) -> Result<&SquareJrm<S>> {
        match &self.system {
            System::Square(t) => Ok(t),
            System::Line(_) => Err(Error::Precondition(format!("{} is a line model", self.name))),
        }
    }

    fn evaluate_one(&self, e: &Expected<S>, tol: Tolerance) -> Result<Outcome> {
        let (holds, detail) = match &e.claim {
            Claim::BalanceVanishes(law) => {
                let z = z_table(self.line()?, law)?;
                let bad = z.iter().find(|(_, v)| !v.is_zero()).map(|(w, v)| format!("Z{w:?} = {v}"));
                (bad.is_none(), bad.unwrap_or_else(|| format!("{} values vanish", z.values().len())))
            }
            Claim::LineInvariant(law) | Claim::LineNotInvariant(law) => {
                let ctx = CriterionContext::new(self.line()?.clone(), law.clone(), tol)?;
                let r = check_markov_line(&ctx);
                let want = matches!(e.claim, Claim::LineInvariant(_));
                (r.is_invariant() == want, format!("{}: {}", r.criterion, r.verdict))
            }
            Claim::ProductInvariant(rho) | Claim::ProductNotInvariant(rho) => {
                let r = check_product_line(self.line()?, rho, tol)?;
                let want = matches!(e.claim, Claim::ProductInvariant(_));
                (r.is_invariant() == want, format!("{}: {}", r.criterion, r.verdict))
            }
            Claim::ProductInvariantInterior { rho, max_letter } => {
                let ctx = CriterionContext::product(self.line()?.clone(), rho.clone(), tol)?;
                let bad = Words::new(max_letter + 1, 3).map(|x| (ncycle(&ctx, &x), x)).find(|(v, _)| !ctx.is_zero(v));
                match bad {
                    Some((v, x)) => (false, format!("NCycle_3{x:?} = {v}")),
                    None => (true, format!("letters <= {max_letter}")),
                }
            }
            Claim::AllProducts => {
                let s = find_product(self.line()?, tol)?;
                (s.all_products, format!("all products invariant: {}", s.all_products))
            }
            Claim::NoFullSupportMarkov { ns } => {
                let r = theorem_fs_conclusion(self.line()?, ns, DEFAULT_MAX_STATES)?;
                match r.verdict {
                    FsVerdict::NoMarkovLaw { max_memory, .. } => (true, format!("memory <= {max_memory} excluded")),
                    FsVerdict::Inconclusive { failing_n } => (false, format!("no proper absorbing set for n in {failing_n:?}")),
                }
            }
            Claim::AbsorbingConstants { letters, exact, ns } => {
                let t = self.line()?;
                let r = theorem_fs_conclusion(t, ns, DEFAULT_MAX_STATES)?;
                let mut ok = true;
                let mut detail = String::new();
                for (n, a) in &r.per_n {
                    let want: BTreeSet<usize> = letters.iter().map(|&c| encode(t.kappa(), &vec![c; *n])).collect();
                    let got: BTreeSet<usize> = a.absorbing.iter().copied().collect();
                    let good = a.is_proper && if *exact { want == got } else { want.is_subset(&got) };
                    if !good {
                        ok = false;
                        detail = format!("n = {n}: absorbing set has {} configurations", got.len());
                        break;
                    }
                }
                (ok, if ok { format!("checked n in {ns:?}") } else { detail })
            }
            Claim::StationaryVector { kernel, rho } => {
                let law = StationaryLaw::new(kernel.clone())?;
                let ok = law.rho().iter().zip(rho).all(|(a, b)| tol.is_zero(&(a.clone() - b.clone()), 1.0));
                (ok, format!("rho = {}", join(law.rho())))
            }
            Claim::Projection { pi, entries } => match project_jrm(self.line()?, pi)? {
                Projection::Projected(tp) => {
                    let ok = tp.entry_words().len() == entries.len()
                        && entries.iter().all(|(u, v, r)| tp.rate(u, v) == *r);
                    (ok, format!("{} projected entries", tp.nnz()))
                }
                Projection::Inconsistent(w) => (false, format!("{w:?}")),
            },
            Claim::ProjectedRatios { law, pi, triple, pair } => {
                let m1 = projected_measure(law, pi, &[1])?;
                let m2 = projected_measure(law, pi, &[1, 1])?;
                let m3 = projected_measure(law, pi, &[1, 1, 1])?;
                let (r3, r2) = (m3 / m2.clone(), m2 / m1);
                let ok = tol.is_zero(&(r3.clone() - triple.clone()), 1.0) && tol.is_zero(&(r2.clone() - pair.clone()), 1.0);
                (ok, format!("mu(111)/mu(11) = {r3}, mu(11)/mu(1) = {r2}"))
            }
            Claim::SquareInvariant(rho) | Claim::SquareNotInvariant(rho) => {
                let r = check_product_2d(self.square()?, rho, tol)?;
                let want = matches!(e.claim, Claim::SquareInvariant(_));
                (r.is_invariant() == want, format!("{}: {}", r.criterion, r.verdict))
            }
            Claim::PoissonInvariant(lambdas) => {
                let r = check_mass_preserving_multinomial(self.square()?, lambdas, tol)?;
                (r.all_invariant(), format!("mass preserving: {}", r.mass_preserving))
            }
        };
        Ok(Outcome { note: e.note.clone(), holds, detail })
    }
}

fn join<S: Scalar>(v: &[S]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn q<S: Scalar>(n: i64, d: i64) -> S {
    S::from_ratio(n, d)
}

fn powi<S: Scalar>(x: &S, e: i32) -> S {
    let p = num_traits::pow(x.clone(), e.unsigned_abs() as usize);
    if e < 0 {
        S::one() / p
    } else {
        p
    }
}

fn line<S: Scalar>(kappa: usize, range: usize, entries: Vec<(Word, Word, S)>) -> Result<JumpRateMatrix<S>> {
    JumpRateMatrix::new(kappa, range, entries)
}

/// `κ = 2` samples used for "every product" style claims.
fn bernoulli_samples<S: Scalar>() -> Vec<Vec<S>> {
    [(1, 2), (1, 3), (4, 5)].iter().map(|&(n, d)| vec![q(d - n, d), q(n, d)]).collect()
}

// Line models.

pub fn tasep<S: Scalar>() -> Result<JumpRateMatrix<S>> {
    line(2, 2, vec![(vec![1, 0], vec![0, 1], S::one())])
}

/// Range 2 encoding of the contact process.
pub fn contact<S: Scalar>(lambda: &S) -> Result<JumpRateMatrix<S>> {
    line(
        2,
        2,
        vec![
            (vec![1, 0], vec![1, 1], lambda.clone()),
            (vec![0, 1], vec![1, 1], lambda.clone()),
            (vec![1, 1], vec![0, 1], S::one()),
            (vec![1, 0], vec![0, 0], S::one()),
        ],
    )
}

/// Range 3 encoding: recovery at rate 1, infection at rate `λ(a+b)`.
pub fn contact_range3<S: Scalar>(lambda: &S) -> Result<JumpRateMatrix<S>> {
    let mut e = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            e.push((vec![a, 1, b], vec![a, 0, b], S::one()));
            e.push((vec![a, 0, b], vec![a, 1, b], lambda.clone() * S::from_i64((a + b) as i64)));
        }
    }
    line(2, 3, e)
}

pub fn voter<S: Scalar>() -> Result<JumpRateMatrix<S>> {
    let mut e = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                let r = (c == b) as i64 + (c == a) as i64;
                e.push((vec![a, 1 - c, b], vec![a, c, b], S::from_i64(r)));
            }
        }
    }
    line(2, 3, e)
}

/// Flip rates `x^{(2b-1)(2a+2c-2)}` with `x = e^{-β}`.
pub fn stochastic_ising<S: Scalar>(x: &S) -> Result<JumpRateMatrix<S>> {
    if !x.is_positive() {
        return Err(Error::Parameter(format!("x = {x} must be positive")));
    }
    let mut e = Vec::new();
    for a in 0..2i32 {
        for b in 0..2i32 {
            for c in 0..2i32 {
                let r = powi(x, (2 * b - 1) * (2 * a + 2 * c - 2));
                e.push((vec![a as usize, b as usize, c as usize], vec![a as usize, 1 - b as usize, c as usize], r));
            }
        }
    }
    line(2, 3, e)
}

/// Symmetric kernel with `M_01 = x²/(1+x²)`.
pub fn ising_kernel<S: Scalar>(x: &S) -> Result<MarkovKernel<S>> {
    let x2 = x.clone() * x.clone();
    let d = S::one() + x2.clone();
    let stay = S::one() / d.clone();
    let flip = x2 / d;
    MarkovKernel::new(2, 1, vec![vec![stay.clone(), flip.clone()], vec![flip, stay]])
}

/// Three colours where larger colours overtake smaller ones.
pub fn tasep3<S: Scalar>(r10: &S, r20: &S, r21: &S) -> Result<JumpRateMatrix<S>> {
    line(
        3,
        2,
        vec![
            (vec![1, 0], vec![0, 1], r10.clone()),
            (vec![2, 0], vec![0, 2], r20.clone()),
            (vec![2, 1], vec![1, 2], r21.clone()),
        ],
    )
}

/// Colour `i` overtakes `i-1 mod 3` only.
pub fn tasep3_cyclic<S: Scalar>(r02: &S, r10: &S, r21: &S) -> Result<JumpRateMatrix<S>> {
    line(
        3,
        2,
        vec![
            (vec![0, 2], vec![2, 0], r02.clone()),
            (vec![1, 0], vec![0, 1], r10.clone()),
            (vec![2, 1], vec![1, 2], r21.clone()),
        ],
    )
}

/// `T[ab -> ba] = r[a][b]`; the diagonal of `r` is ignored.
pub fn tasep3_exchange<S: Scalar>(r: &[[S; 3]; 3]) -> Result<JumpRateMatrix<S>> {
    let mut e = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            if a != b {
                e.push((vec![a, b], vec![b, a], r[a][b].clone()));
            }
        }
    }
    line(3, 2, e)
}

/// Zero-range mass migration on `⟦0,κ-1⟧`: `T[(a,b) -> (a-k,b+k)] = g(a,k)`
/// for `1 <= k <= a`, jumps with `b+k >= κ` dropped.
pub fn zero_range<S: Scalar, G: Fn(usize, usize) -> S>(kappa: usize, g: G) -> Result<JumpRateMatrix<S>> {
    let mut e = Vec::new();
    for a in 0..kappa {
        for b in 0..kappa {
            for k in 1..=a {
                if b + k < kappa {
                    e.push((vec![a, b], vec![a - k, b + k], g(a, k)));
                }
            }
        }
    }
    line(kappa, 2, e)
}

/// Block process of PushTASEP. Letter `j` is a block of `j` particles
/// followed by an empty site. The last particle of a block steps right
/// (`(j,j') -> (j-1,j'+1)`) and any of the `j'` particles of the next block
/// jumps to the hole on its left (`(j,j') -> (j+p,j'-p)`), all at rate 1.
pub fn pushtasep_blocks<S: Scalar>(kappa: usize) -> Result<JumpRateMatrix<S>> {
    let mut e = Vec::new();
    for j in 0..kappa {
        for jp in 0..kappa {
            if j >= 1 && jp + 1 < kappa {
                e.push((vec![j, jp], vec![j - 1, jp + 1], S::one()));
            }
            for p in 1..=jp {
                if j + p < kappa {
                    e.push((vec![j, jp], vec![j + p, jp - p], S::one()));
                }
            }
        }
    }
    line(kappa, 2, e)
}

pub fn hmc_rates<S: Scalar>() -> Result<JumpRateMatrix<S>> {
    let r = |v: i64| S::from_i64(v);
    line(
        3,
        3,
        vec![
            (vec![0, 0, 0], vec![0, 1, 0], r(255)),
            (vec![0, 0, 0], vec![0, 2, 0], r(15)),
            (vec![0, 1, 0], vec![0, 0, 0], r(294)),
            (vec![0, 2, 0], vec![0, 0, 0], r(294)),
            (vec![0, 1, 0], vec![0, 2, 0], r(49)),
            (vec![0, 2, 0], vec![0, 1, 0], r(49)),
        ],
    )
}

pub fn hmc_kernel<S: Scalar>() -> Result<MarkovKernel<S>> {
    MarkovKernel::new(
        3,
        1,
        vec![vec![q(7, 15), q(1, 3), q(1, 5)], vec![q(1, 2), q(1, 6), q(1, 3)], vec![q(1, 6), q(1, 2), q(1, 3)]],
    )
}

pub fn hmc_law<S: Scalar>() -> Result<StationaryLaw<S>> {
    StationaryLaw::with_rho(hmc_kernel()?, vec![q(35, 89), q(29, 89), q(25, 89)], Tolerance::default())
}

/// Projection merging colours 1 and 2.
pub const HMC_PROJECTION: [usize; 3] = [0, 1, 1];

/// `T[(a,b) -> (c,d)] = t[x][y]` with `x = 2a+b`, `y = 2c+d`.
pub fn kappa2_general<S: Scalar>(t: &[[S; 4]; 4]) -> Result<JumpRateMatrix<S>> {
    let mut e = Vec::new();
    for x in 0..4 {
        for y in 0..4 {
            if x != y {
                e.push((vec![x / 2, x % 2], vec![y / 2, y % 2], t[x][y].clone()));
            }
        }
    }
    line(2, 2, e)
}

// Square models, words in cyclic order around the square.

fn square<S: Scalar>(kappa: usize, e: Vec<(Word, Word, S)>) -> Result<SquareJrm<S>> {
    SquareJrm::new(kappa, e)
}

/// `1110 -> 0001` at rate `a`, back at rate 1.
pub fn square_flip<S: Scalar>(a: &S) -> Result<SquareJrm<S>> {
    square(2, vec![(vec![1, 1, 1, 0], vec![0, 0, 0, 1], a.clone()), (vec![0, 0, 0, 1], vec![1, 1, 1, 0], S::one())])
}

pub fn square_pair_flip<S: Scalar>(a: &S, b: &S) -> Result<SquareJrm<S>> {
    square(2, vec![(vec![1, 0, 1, 0], vec![0, 1, 0, 1], a.clone()), (vec![0, 1, 0, 1], vec![1, 0, 1, 0], b.clone())])
}

/// The single jump `1100 -> 0110`.
pub fn square_shift<S: Scalar>(a: &S) -> Result<SquareJrm<S>> {
    square(2, vec![(vec![1, 1, 0, 0], vec![0, 1, 1, 0], a.clone())])
}

/// A pair of adjacent particles turning around the square.
pub fn square_rotation<S: Scalar>(r: &[S; 4]) -> Result<SquareJrm<S>> {
    let w = [vec![1, 1, 0, 0], vec![0, 1, 1, 0], vec![0, 0, 1, 1], vec![1, 0, 0, 1]];
    square(2, (0..4).map(|i| (w[i].clone(), w[(i + 1) % 4].clone(), r[i].clone())).collect())
}

/// `abcd -> a(1-b)(1-c)d` at rate `t[abcd]` (index `8a+4b+2c+d`).
pub fn square_free<S: Scalar>(t: &[S; 16]) -> Result<SquareJrm<S>> {
    let mut e = Vec::new();
    for x in Words::new(2, 4) {
        let y = vec![x[0], 1 - x[1], 1 - x[2], x[3]];
        e.push((x.clone(), y, t[encode(2, &x)].clone()));
    }
    square(2, e)
}

/// `iiii -> jjjj` with `j = i+1 mod 3` at rate `a[i]`.
pub fn square_three_colour<S: Scalar>(a: &[S; 3]) -> Result<SquareJrm<S>> {
    square(3, (0..3).map(|i| (vec![i; 4], vec![(i + 1) % 3; 4], a[i].clone())).collect())
}

/// A ball picked uniformly moves to one of the three other urns:
/// `W(m) x_i / 3` for `m = |x|`. Jumps leaving `⟦0,κ-1⟧` are dropped.
pub fn square_ball_move<S: Scalar, W: Fn(usize) -> S>(kappa: usize, w: W) -> Result<SquareJrm<S>> {
    let mut e = Vec::new();
    for x in Words::new(kappa, 4) {
        let m: usize = x.iter().sum();
        for i in 0..4 {
            for j in 0..4 {
                if i == j || x[i] == 0 || x[j] + 1 >= kappa {
                    continue;
                }
                let mut y = x.clone();
                y[i] -= 1;
                y[j] += 1;
                e.push((x.clone(), y, w(m) * S::from_ratio(x[i] as i64, 3)));
            }
        }
    }
    square(kappa, e)
}

/// Shifts the four urns one step around the square at rate `W(m)`.
pub fn square_urn_shift<S: Scalar, W: Fn(usize) -> S>(kappa: usize, w: W) -> Result<SquareJrm<S>> {
    let mut e = Vec::new();
    for x in Words::new(kappa, 4) {
        let y = vec![x[3], x[0], x[1], x[2]];
        if y != x {
            let m: usize = x.iter().sum();
            e.push((x, y, w(m)));
        }
    }
    square(kappa, e)
}

// Distributions.

/// `ρ_k ∝ q^k` on `⟦0,κ-1⟧`.
pub fn geometric<S: Scalar>(q: &S, kappa: usize) -> Result<Vec<S>> {
    if !q.is_positive() {
        return Err(Error::Parameter(format!("q = {q} must be positive")));
    }
    almost_geometric(kappa, &(0..kappa).collect::<Vec<_>>(), |s| powi(q, s as i32))
}

/// Normalized ρ on `support` with `ρ_u ρ_v ∝ g(u+v)` for `u, v` in the
/// support (and zero elsewhere).
pub fn almost_geometric<S: Scalar, G: Fn(usize) -> S>(kappa: usize, support: &[usize], g: G) -> Result<Vec<S>> {
    let set: BTreeSet<usize> = support.iter().copied().collect();
    let Some(&u0) = set.iter().next() else {
        return Err(Error::Parameter("empty support".into()));
    };
    Alphabet::new(kappa)?.check(&set.iter().copied().collect::<Vec<_>>())?;
    let base = g(2 * u0);
    if !base.is_positive() {
        return Err(Error::Inconsistent(format!("g({}) must be positive", 2 * u0)));
    }
    let mut rho = vec![S::zero(); kappa];
    for &u in &set {
        let v = g(u0 + u);
        if !v.is_positive() {
            return Err(Error::Inconsistent(format!("g({}) must be positive", u0 + u)));
        }
        rho[u] = v;
    }
    for &u in &set {
        for &v in &set {
            let lhs = rho[u].clone() * rho[v].clone();
            let rhs = g(u + v) * base.clone();
            if lhs != rhs && !Tolerance::default().is_zero(&(lhs - rhs), 1.0) {
                return Err(Error::Inconsistent(format!("g is not log-linear at ({u}, {v})")));
            }
        }
    }
    let total = rho.iter().fold(S::zero(), |a, b| a + b.clone());
    Ok(rho.into_iter().map(|v| v / total.clone()).collect())
}

// Projection.

/// Two representatives of the same projected word with different total
/// rates towards `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionWitness<S> {
    pub source: Word,
    pub target: Word,
    pub first: (Word, S),
    pub second: (Word, S),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Projection<S> {
    Projected(JumpRateMatrix<S>),
    Inconsistent(ProjectionWitness<S>),
}

fn check_surjection(kappa: usize, pi: &[usize]) -> Result<usize> {
    if pi.len() != kappa {
        return Err(Error::Length { expected: kappa, got: pi.len() });
    }
    let image: BTreeSet<usize> = pi.iter().copied().collect();
    let target = image.len();
    if image.iter().copied().ne(0..target) {
        return Err(Error::Parameter(format!("{pi:?} is not a surjection onto 0..{target}")));
    }
    if target < 2 {
        return Err(Error::Alphabet(target));
    }
    Ok(target)
}

/// Projects `T` along the colour map `π`. The total rate from a word `A`
/// to the preimage of a projected word must only depend on `π(A)`; jumps
/// inside a preimage are not jumps of the projection and are dropped.
pub fn project_jrm<S: Scalar>(t: &JumpRateMatrix<S>, pi: &[usize]) -> Result<Projection<S>> {
    let k = t.kappa();
    let f = check_surjection(k, pi)?;
    let l = t.range();
    let project = |w: &[usize]| w.iter().map(|&a| pi[a]).collect::<Word>();
    let mut totals: BTreeMap<Word, Vec<(Word, BTreeMap<Word, S>)>> = BTreeMap::new();
    for a in Words::new(k, l) {
        let mut out: BTreeMap<Word, S> = BTreeMap::new();
        for (c, r) in t.outgoing(encode(k, &a)) {
            let img = project(&crate::word::decode(k, l, *c));
            let slot = out.entry(img).or_insert_with(S::zero);
            *slot = slot.clone() + r.clone();
        }
        totals.entry(project(&a)).or_default().push((a, out));
    }
    let mut entries = Vec::new();
    for (src, reps) in &totals {
        let targets: BTreeSet<&Word> = reps.iter().flat_map(|(_, m)| m.keys()).filter(|w| *w != src).collect();
        for tgt in targets {
            let get = |m: &BTreeMap<Word, S>| m.get(tgt).cloned().unwrap_or_else(S::zero);
            let (a0, m0) = &reps[0];
            let r0 = get(m0);
            for (a, m) in &reps[1..] {
                let r = get(m);
                if r != r0 {
                    return Ok(Projection::Inconsistent(ProjectionWitness {
                        source: src.clone(),
                        target: tgt.clone(),
                        first: (a0.clone(), r0),
                        second: (a.clone(), r),
                    }));
                }
            }
            entries.push((src.clone(), tgt.clone(), r0));
        }
    }
    Ok(Projection::Projected(JumpRateMatrix::new(f, l, entries)?))
}

/// Law of the projected word `y` under `π`.
pub fn projected_measure<S: Scalar>(law: &StationaryLaw<S>, pi: &[usize], y: &[usize]) -> Result<S> {
    let k = law.kappa();
    check_surjection(k, pi)?;
    let fibres: Vec<Vec<usize>> = y.iter().map(|&b| (0..k).filter(|&a| pi[a] == b).collect()).collect();
    let mut total = S::zero();
    let mut idx = vec![0usize; y.len()];
    if fibres.iter().any(|f| f.is_empty()) {
        return Ok(total);
    }
    loop {
        let x: Word = idx.iter().zip(&fibres).map(|(&i, f)| f[i]).collect();
        total = total + law.measure(&x);
        let mut p = y.len();
        loop {
            if p == 0 {
                return Ok(total);
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < fibres[p].len() {
                break;
            }
            idx[p] = 0;
        }
    }
}

// Named construction.

struct Reader<'a, S> {
    params: &'a Params<S>,
    used: BTreeSet<String>,
    resolved: Params<S>,
}

impl<'a, S: Scalar> Reader<'a, S> {
    fn new(params: &'a Params<S>) -> Self {
        Reader { params, used: BTreeSet::new(), resolved: BTreeMap::new() }
    }

    fn get(&mut self, key: &str, default: S) -> Result<S> {
        self.used.insert(key.into());
        let v = self.params.get(key).cloned().unwrap_or(default);
        if v.is_negative() {
            return Err(Error::Parameter(format!("{key} = {v} must be nonnegative")));
        }
        self.resolved.insert(key.into(), v.clone());
        Ok(v)
    }

    fn positive(&mut self, key: &str, default: S) -> Result<S> {
        let v = self.get(key, default)?;
        if !v.is_positive() {
            return Err(Error::Parameter(format!("{key} must be positive")));
        }
        Ok(v)
    }

    fn size(&mut self, key: &str, default: usize, min: usize, max: usize) -> Result<usize> {
        let v = self.get(key, S::from_i64(default as i64))?;
        let f = v.to_f64();
        if f.fract() != 0.0 || f < min as f64 || f > max as f64 {
            return Err(Error::Parameter(format!("{key} = {v} must be an integer in {min}..={max}")));
        }
        Ok(f as usize)
    }

    fn finish(self) -> Result<Params<S>> {
        if let Some(k) = self.params.keys().find(|k| !self.used.contains(*k)) {
            return Err(Error::Parameter(format!("unknown parameter {k}")));
        }
        Ok(self.resolved)
    }
}

const FS_LENGTHS: [usize; 6] = [3, 4, 5, 6, 7, 8];

/// Builds a catalog model by name. Missing parameters take their defaults;
/// unknown ones are rejected.
pub fn build<S: Scalar>(name: &str, params: &Params<S>) -> Result<ModelSpec<S>> {
    let mut rd = Reader::new(params);
    let fs_ns = FS_LENGTHS.to_vec();
    let spec = match name {
        "tasep" => {
            let p = rd.get("p", q(1, 2))?;
            let rho = vec![S::one() - p.clone(), p];
            let t = tasep()?;
            ModelSpec::new(name, BTreeMap::new(), System::Line(t))
                .expect(Claim::AllProducts, "every Bernoulli product is invariant")
                .expect(Claim::ProductInvariant(rho), "Bernoulli(p) product is invariant")
        }
        "contact" | "contact3" => {
            let lambda = rd.positive("lambda", S::from_i64(2))?;
            let t = if name == "contact" { contact(&lambda)? } else { contact_range3(&lambda)? };
            ModelSpec::new(name, BTreeMap::new(), System::Line(t))
                .expect(Claim::AbsorbingConstants { letters: vec![0], exact: false, ns: fs_ns.clone() }, "the empty configuration is absorbing")
                .expect(Claim::NoFullSupportMarkov { ns: fs_ns }, "no full-support Markov law")
        }
        "voter" => ModelSpec::new(name, BTreeMap::new(), System::Line(voter()?))
            .expect(Claim::AbsorbingConstants { letters: vec![0, 1], exact: true, ns: fs_ns.clone() }, "consensus configurations are absorbing")
            .expect(Claim::NoFullSupportMarkov { ns: fs_ns }, "no full-support Markov law"),
        "stochastic_ising" => {
            let x = rd.positive("x", q(1, 2))?;
            let law = StationaryLaw::new(ising_kernel(&x)?)?;
            ModelSpec::new(name, BTreeMap::new(), System::Line(stochastic_ising(&x)?))
                .expect(Claim::BalanceVanishes(law.clone()), "local balance vanishes for the symmetric kernel")
                .expect(Claim::LineInvariant(law), "the Markov law is invariant on the line")
        }
        "tasep3" => {
            let r10 = rd.get("r10", S::one())?;
            let r20 = rd.get("r20", S::from_i64(2))?;
            let r21 = rd.get("r21", S::one())?;
            let t = tasep3(&r10, &r20, &r21)?;
            let uniform = vec![q(1, 3); 3];
            let spec = ModelSpec::new(name, BTreeMap::new(), System::Line(t));
            if r20 == r10.clone() + r21.clone() {
                spec.expect(Claim::AllProducts, "r20 = r10 + r21: every product is invariant")
                    .expect(Claim::ProductInvariant(uniform), "uniform product is invariant")
            } else {
                spec.expect(Claim::ProductNotInvariant(uniform), "r20 != r10 + r21: products fail")
            }
        }
        "tasep3_cyclic" => {
            let r02 = rd.get("r02", S::one())?;
            let r10 = rd.get("r10", S::one())?;
            let r21 = rd.get("r21", S::one())?;
            let t = tasep3_cyclic(&r02, &r10, &r21)?;
            let spec = ModelSpec::new(name, BTreeMap::new(), System::Line(t));
            if t_is_zero(&[&r02, &r10, &r21]) {
                spec
            } else {
                spec.expect(Claim::ProductNotInvariant(vec![q(1, 3); 3]), "moving particles exclude positive Markov laws")
                    .expect(Claim::ProductNotInvariant(vec![q(1, 2), q(1, 3), q(1, 6)]), "moving particles exclude positive Markov laws")
            }
        }
        "tasep3_exchange" => {
            let mut r: [[S; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| S::zero()));
            for a in 0..3 {
                for b in 0..3 {
                    if a != b {
                        r[a][b] = rd.get(&format!("r{a}{b}"), S::zero())?;
                    }
                }
            }
            ModelSpec::new(name, BTreeMap::new(), System::Line(tasep3_exchange(&r)?))
        }
        "zero_range" => {
            let kappa = rd.size("kappa", 4, 2, 12)?;
            let c = rd.positive("c", S::one())?;
            let t = zero_range(kappa, |_, _| c.clone())?;
            let mut spec = ModelSpec::new(name, BTreeMap::new(), System::Line(t));
            for g in [q(1, 2), q(1, 3), q(2, 3), q(3, 4), S::from_i64(2)] {
                spec = spec.expect(Claim::ProductInvariant(geometric(&g, kappa)?), "geometric product is invariant");
            }
            spec
        }
        "pushtasep_blocks" => {
            let kappa = rd.size("kappa", 7, 2, 12)?;
            let t = pushtasep_blocks(kappa)?;
            let mut spec = ModelSpec::new(name, BTreeMap::new(), System::Line(t));
            for g in [q(1, 2), q(1, 3), q(3, 4)] {
                let rho = geometric(&g, kappa)?;
                spec = spec.expect(
                    Claim::ProductInvariantInterior { rho: rho.clone(), max_letter: (kappa - 1) / 2 },
                    "geometric product balances away from the truncation",
                );
                if kappa >= 3 {
                    spec = spec.expect(Claim::ProductNotInvariant(rho), "the truncation boundary breaks invariance");
                }
            }
            spec
        }
        "hmc_example" => {
            let law = hmc_law()?;
            let pi = HMC_PROJECTION.to_vec();
            let r = |v: i64| S::from_i64(v);
            ModelSpec::new(name, BTreeMap::new(), System::Line(hmc_rates()?))
                .expect(Claim::BalanceVanishes(law.clone()), "local balance vanishes")
                .expect(Claim::LineInvariant(law.clone()), "the Markov law is invariant on the line")
                .expect(
                    Claim::StationaryVector { kernel: hmc_kernel()?, rho: vec![q(35, 89), q(29, 89), q(25, 89)] },
                    "stationary vector (35, 29, 25)/89",
                )
                .expect(
                    Claim::Projection {
                        pi: pi.clone(),
                        entries: vec![(vec![0, 0, 0], vec![0, 1, 0], r(270)), (vec![0, 1, 0], vec![0, 0, 0], r(294))],
                    },
                    "projected rates 270 and 294",
                )
                .expect(
                    Claim::ProjectedRatios { law, pi, triple: q(71, 106), pair: q(53, 81) },
                    "the projected law is not Markov",
                )
        }
        "kappa2_general" => {
            let mut t: [[S; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| S::zero()));
            for x in 0..4 {
                for y in 0..4 {
                    if x != y {
                        t[x][y] = rd.get(&format!("t{x}{y}"), S::zero())?;
                    }
                }
            }
            ModelSpec::new(name, BTreeMap::new(), System::Line(kappa2_general(&t)?))
        }
        "square_flip" => {
            let a = rd.positive("a", S::from_i64(4))?;
            let spec = ModelSpec::new(name, BTreeMap::new(), System::Square(square_flip(&a)?));
            match a.sqrt_checked() {
                Some(r) => {
                    let rho1 = S::one() / (r + S::one());
                    let rho = vec![S::one() - rho1.clone(), rho1];
                    let spec = spec.expect(Claim::SquareInvariant(rho), "Bernoulli(1/(sqrt(a)+1)) is invariant");
                    if a == S::one() {
                        spec
                    } else {
                        spec.expect(Claim::SquareNotInvariant(vec![q(1, 2), q(1, 2)]), "Bernoulli(1/2) is not invariant")
                    }
                }
                None => spec,
            }
        }
        "square_pair_flip" => {
            let a = rd.positive("a", S::one())?;
            let b = rd.positive("b", S::from_i64(2))?;
            let eq = a == b;
            let mut spec = ModelSpec::new(name, BTreeMap::new(), System::Square(square_pair_flip(&a, &b)?));
            for rho in bernoulli_samples() {
                spec = if eq {
                    spec.expect(Claim::SquareInvariant(rho), "a = b: every product is invariant")
                } else {
                    spec.expect(Claim::SquareNotInvariant(rho), "a != b: no product is invariant")
                };
            }
            spec
        }
        "square_shift" => {
            let a = rd.positive("a", S::one())?;
            let mut spec = ModelSpec::new(name, BTreeMap::new(), System::Square(square_shift(&a)?));
            for rho in bernoulli_samples() {
                spec = spec.expect(Claim::SquareNotInvariant(rho), "no full-support product is invariant");
            }
            spec
        }
        "square_rotation" => {
            let r = [rd.positive("a", S::one())?, rd.positive("b", S::one())?, rd.positive("c", S::one())?, rd.positive("d", S::one())?];
            let eq = r.iter().all(|v| *v == r[0]);
            let mut spec = ModelSpec::new(name, BTreeMap::new(), System::Square(square_rotation(&r)?));
            for rho in bernoulli_samples() {
                spec = if eq {
                    spec.expect(Claim::SquareInvariant(rho), "equal rates: every product is invariant")
                } else {
                    spec.expect(Claim::SquareNotInvariant(rho), "unequal rates: no product is invariant")
                };
            }
            spec
        }
        "square_free" => {
            let mut t: [S; 16] = std::array::from_fn(|_| S::zero());
            for x in Words::new(2, 4) {
                let key = format!("t{}{}{}{}", x[0], x[1], x[2], x[3]);
                t[encode(2, &x)] = rd.get(&key, S::zero())?;
            }
            ModelSpec::new(name, BTreeMap::new(), System::Square(square_free(&t)?))
        }
        "square_three_colour" => {
            let a = [rd.positive("a0", S::one())?, rd.positive("a1", S::from_i64(16))?, rd.positive("a2", S::one())?];
            let mut spec = ModelSpec::new(name, BTreeMap::new(), System::Square(square_three_colour(&a)?));
            let roots: Option<Vec<S>> = a.iter().map(|v| v.sqrt_checked().and_then(|s| s.sqrt_checked())).collect();
            if let Some(roots) = roots {
                let w: Vec<S> = roots.iter().map(|r| S::one() / r.clone()).collect();
                let total = w.iter().fold(S::zero(), |x, y| x + y.clone());
                let rho = w.into_iter().map(|v| v / total.clone()).collect();
                spec = spec.expect(Claim::SquareInvariant(rho), "a_i rho_i^4 constant: invariant");
            }
            if !a.iter().all(|v| *v == a[0]) {
                spec = spec.expect(Claim::SquareNotInvariant(vec![q(1, 3); 3]), "uniform product is not invariant");
            }
            spec
        }
        "square_ball_move" | "square_urn_shift" => {
            let kappa = rd.size("kappa", 3, 2, 6)?;
            let w = rd.positive("w", S::one())?;
            let t = if name == "square_ball_move" {
                square_ball_move(kappa, |_| w.clone())?
            } else {
                square_urn_shift(kappa, |_| w.clone())?
            };
            ModelSpec::new(name, BTreeMap::new(), System::Square(t))
                .expect(Claim::PoissonInvariant(vec![q(1, 2), S::one(), S::from_i64(2)]), "truncated Poisson products are invariant")
        }
        _ => return Err(Error::Parameter(format!("unknown model {name}"))),
    };
    let resolved = rd.finish()?;
    Ok(ModelSpec { params: resolved, ..spec })
}

fn t_is_zero<S: Scalar>(v: &[&S]) -> bool {
    v.iter().all(|x| x.is_zero())
}
