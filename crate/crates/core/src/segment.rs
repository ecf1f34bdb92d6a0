//! Markov laws on a segment `⟦1,n⟧` with boundary rates, for `L = 2` and
//! memory 1.

use crate::criteria::{check_markov_line, master, z_table, CriterionContext, CriterionReport, LocalBalanceTable};
use crate::error::{Error, Result};
use crate::jrm::{BoundaryRates, JumpRateMatrix};
use crate::kernel::StationaryLaw;
use crate::scalar::{Scalar, Tolerance};
use crate::word::{remove_at, Word, Words};

/// Segment length used to validate constructed boundaries.
pub const VALIDATION_LENGTH: usize = 7;

fn check_shape<S: Scalar>(t: &JumpRateMatrix<S>, law: &StationaryLaw<S>, beta: &BoundaryRates<S>) -> Result<()> {
    if t.range() != 2 || law.memory() != 1 {
        return Err(Error::Precondition("segments are handled for range 2 and memory 1".into()));
    }
    if beta.range() != 1 || beta.left.kappa() != t.kappa() {
        return Err(Error::Inconsistent("boundary rates must act on single sites of the same alphabet".into()));
    }
    if law.kappa() != t.kappa() {
        return Err(Error::Inconsistent("kernel and rates use different alphabets".into()));
    }
    if !law.kernel().is_positive() {
        return Err(Error::NonPositiveKernel);
    }
    Ok(())
}

struct SegmentBalance<'a, S> {
    t: &'a JumpRateMatrix<S>,
    law: &'a StationaryLaw<S>,
    beta: &'a BoundaryRates<S>,
    z: LocalBalanceTable<S>,
}

impl<'a, S: Scalar> SegmentBalance<'a, S> {
    fn new(t: &'a JumpRateMatrix<S>, law: &'a StationaryLaw<S>, beta: &'a BoundaryRates<S>) -> Result<Self> {
        check_shape(t, law, beta)?;
        Ok(SegmentBalance { t, law, beta, z: z_table(t, law)? })
    }

    fn m(&self, a: usize, b: usize) -> S {
        self.law.kernel().get(a, b).clone()
    }

    fn nline(&self, x: &[usize]) -> S {
        let n = x.len();
        let k = self.t.kappa();
        let rho = self.law.rho();
        let mut total = S::zero();
        for a in 0..(n + 1).saturating_sub(4) {
            total = total + self.z.get(&x[a..a + 4]).clone();
        }
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        total = total - self.beta.left.exit_rate(&[x1]) - self.t.exit_rate(&[x1, x2]);
        let left_den = rho[x1].clone() * self.m(x1, x2) * self.m(x2, x3);
        for u1 in 0..k {
            for u2 in 0..k {
                let mut rate = self.t.rate(&[u1, u2], &[x1, x2]);
                if u2 == x2 {
                    rate = rate + self.beta.left.rate(&[u1], &[x1]);
                }
                if !rate.is_zero() {
                    let w = rho[u1].clone() * self.m(u1, u2) * self.m(u2, x3);
                    total = total + w / left_den.clone() * rate;
                }
            }
        }
        let (y0, y1, y2) = (x[n - 3], x[n - 2], x[n - 1]);
        total = total - self.beta.right.exit_rate(&[y2]) - self.t.exit_rate(&[y1, y2]);
        let right_den = self.m(y0, y1) * self.m(y1, y2);
        for u in 0..k {
            for v in 0..k {
                let mut rate = self.t.rate(&[u, v], &[y1, y2]);
                if u == y1 {
                    rate = rate + self.beta.right.rate(&[v], &[y2]);
                }
                if !rate.is_zero() {
                    total = total + self.m(y0, u) * self.m(u, v) / right_den.clone() * rate;
                }
            }
        }
        total
    }

    fn first_violation(&self, n: usize, tol: Tolerance) -> Option<(Word, S)> {
        let scale = self.t.norm_inf() + self.beta.left.norm_inf() + self.beta.right.norm_inf();
        Words::new(self.t.kappa(), n).map(|x| {
            let v = self.nline(&x);
            (x, v)
        }).find(|(_, v)| !tol.is_zero(v, scale))
    }
}

/// Segment line balance of `x` divided by `ρ_{x_1} Π M_{x_i,x_{i+1}}`:
/// interior `Z` windows plus one block per boundary.
pub fn nline_segment<S: Scalar>(
    t: &JumpRateMatrix<S>,
    law: &StationaryLaw<S>,
    beta: &BoundaryRates<S>,
    x: &[usize],
) -> Result<S> {
    if x.len() < 3 {
        return Err(Error::Parameter(format!("segment length {} is below 3", x.len())));
    }
    t.alphabet().check(x)?;
    Ok(SegmentBalance::new(t, law, beta)?.nline(x))
}

/// Consequences drawn from two consecutive vanishing lengths `n₀ ≥ 7`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConclusions<S> {
    /// Invariance on the line and on every longer segment follow.
    pub line_invariant: bool,
    pub all_longer_segments: bool,
    /// `Master₇ ≡ 0`, the identity linking consecutive lengths.
    pub master7_vanishes: bool,
    pub line_report: CriterionReport<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentReport<S> {
    pub n: usize,
    pub report: CriterionReport<S>,
    pub next: Option<CriterionReport<S>>,
    pub conclusions: Option<SegmentConclusions<S>>,
}

impl<S: Scalar> SegmentReport<S> {
    pub fn is_invariant(&self) -> bool {
        self.report.is_invariant()
    }
}

fn segment_report<S: Scalar>(bal: &SegmentBalance<'_, S>, n: usize, tol: Tolerance) -> CriterionReport<S> {
    let words = bal.t.kappa().pow(n as u32);
    match bal.first_violation(n, tol) {
        Some((x, v)) => CriterionReport::violated(&format!("nline-segment-{n}"), words, x, None, v),
        None => CriterionReport::invariant(&format!("nline-segment-{n}"), words),
    }
}

/// `NLine ≡ 0` on `E^n`; when `n ≥ 7` and `n + 1` also vanishes, the line
/// and longer-segment conclusions are attached together with the `Master₇`
/// evidence.
pub fn check_segment<S: Scalar>(
    t: &JumpRateMatrix<S>,
    law: &StationaryLaw<S>,
    beta: &BoundaryRates<S>,
    n: usize,
    tol: Tolerance,
) -> Result<SegmentReport<S>> {
    if n < 3 {
        return Err(Error::Parameter(format!("segment length {n} is below 3")));
    }
    let bal = SegmentBalance::new(t, law, beta)?;
    let report = segment_report(&bal, n, tol);
    if !report.is_invariant() || n < 7 {
        return Ok(SegmentReport { n, report, next: None, conclusions: None });
    }
    let next = segment_report(&bal, n + 1, tol);
    let conclusions = if next.is_invariant() {
        let ctx = CriterionContext::new(t.clone(), law.clone(), tol)?;
        let master7_vanishes = Words::new(t.kappa(), 7).all(|x| ctx.is_zero(&master(&ctx, &x).expect("length 7")));
        let line_report = check_markov_line(&ctx);
        Some(SegmentConclusions {
            line_invariant: master7_vanishes,
            all_longer_segments: master7_vanishes,
            master7_vanishes,
            line_report,
        })
    } else {
        None
    };
    Ok(SegmentReport { n, report, next: Some(next), conclusions })
}

/// `NLine_{n+1}(x) - NLine_n(x without its fourth letter)`, which equals
/// `Master₇(x[..7])` for `n ≥ 7`.
pub fn consecutive_difference<S: Scalar>(
    t: &JumpRateMatrix<S>,
    law: &StationaryLaw<S>,
    beta: &BoundaryRates<S>,
    x: &[usize],
) -> Result<S> {
    let bal = SegmentBalance::new(t, law, beta)?;
    if x.len() < 4 {
        return Err(Error::Parameter("need at least four letters".into()));
    }
    Ok(bal.nline(x) - bal.nline(&remove_at(x, 3)))
}

/// Which outside-site kernel weights the right boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RightWeight {
    /// `β^r_{x,a} = Σ_{v,b} T[(x,v)→(a,b)] M_{x,b}`.
    Target,
    /// `β^r_{x,a} = Σ_{v,b} T[(x,v)→(a,b)] M_{x,v}`.
    Outside,
}

/// Boundary rates emulating the outside of the segment:
/// `β^ℓ_{z,a} = Σ_{u,v} ρ_u M_{u,z} T[(u,z)→(v,a)] / ρ_z` and `β^r` per
/// `weight`. Entries with `z = a` are dropped.
pub fn boundary_rates<S: Scalar>(t: &JumpRateMatrix<S>, law: &StationaryLaw<S>, weight: RightWeight) -> Result<BoundaryRates<S>> {
    if t.range() != 2 || law.memory() != 1 {
        return Err(Error::Precondition("segments are handled for range 2 and memory 1".into()));
    }
    let k = t.kappa();
    let rho = law.rho();
    let m = |a: usize, b: usize| law.kernel().get(a, b).clone();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for z in 0..k {
        for a in 0..k {
            if z == a {
                continue;
            }
            let mut l = S::zero();
            let mut r = S::zero();
            for u in 0..k {
                for v in 0..k {
                    l = l + rho[u].clone() * m(u, z) * t.rate(&[u, z], &[v, a]);
                    let tr = t.rate(&[z, u], &[a, v]);
                    if !tr.is_zero() {
                        let w = match weight {
                            RightWeight::Target => m(z, v),
                            RightWeight::Outside => m(z, u),
                        };
                        r = r + tr * w;
                    }
                }
            }
            left.push((vec![z], vec![a], l / rho[z].clone()));
            right.push((vec![z], vec![a], r));
        }
    }
    BoundaryRates::new(JumpRateMatrix::new(k, 1, left)?, JumpRateMatrix::new(k, 1, right)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConstruction<S> {
    pub target: BoundaryRates<S>,
    pub target_report: SegmentReport<S>,
    pub outside: BoundaryRates<S>,
    pub outside_report: SegmentReport<S>,
}

impl<S: Scalar> BoundaryConstruction<S> {
    /// Witness where the target-weighted rates fail, if they do.
    pub fn discrepancy(&self) -> Option<(&Word, &S)> {
        self.target_report.report.witness.as_ref().map(|w| (&w.word, &w.residual))
    }
}

/// Builds both boundary variants for a line-invariant law and validates
/// each at length [`VALIDATION_LENGTH`].
pub fn construct_boundaries<S: Scalar>(
    t: &JumpRateMatrix<S>,
    law: &StationaryLaw<S>,
    tol: Tolerance,
) -> Result<BoundaryConstruction<S>> {
    let ctx = CriterionContext::new(t.clone(), law.clone(), tol)?;
    if t.range() != 2 || law.memory() != 1 {
        return Err(Error::Precondition("segments are handled for range 2 and memory 1".into()));
    }
    if !check_markov_line(&ctx).is_invariant() {
        return Err(Error::Precondition("the law is not invariant on the line".into()));
    }
    let target = boundary_rates(t, law, RightWeight::Target)?;
    let outside = boundary_rates(t, law, RightWeight::Outside)?;
    let target_report = check_segment(t, law, &target, VALIDATION_LENGTH, tol)?;
    let outside_report = check_segment(t, law, &outside, VALIDATION_LENGTH, tol)?;
    Ok(BoundaryConstruction { target, target_report, outside, outside_report })
}
