//! Searching for invariant Markov kernels and product measures when `L = 2`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use rayon::prelude::*;

use crate::criteria::{check_markov_line, check_product_line, symmetrize, CriterionContext, CriterionReport};
use crate::error::{Error, Result};
use crate::jrm::JumpRateMatrix;
use crate::kernel::{MarkovKernel, StationaryLaw};
use crate::numerics::{perron_pair, solve_linear, DenseMatrix, SolutionSet};
use crate::scalar::{rationalize, Scalar, Tolerance, RATIONALIZE_MAX_DEN};
use crate::word::{decode, encode, rotate, Word, Words};

/// Relative tolerance for comparing main eigenvalues on the float path.
pub const EIGEN_REL_TOL: f64 = 1e-9;
/// Cap on vertices collected from an affine family.
pub const MAX_VERTICES: usize = 64;
/// Cap on the constraint subsets tried during vertex enumeration.
pub const MAX_VERTEX_TRIALS: usize = 20_000;

/// A rotation-invariant probability on words of length 3.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleMeasure<S> {
    kappa: usize,
    values: Vec<S>,
}

impl<S: Scalar> TripleMeasure<S> {
    pub fn new(kappa: usize, values: Vec<S>, tol: Tolerance) -> Result<Self> {
        let n = kappa.pow(3);
        if values.len() != n {
            return Err(Error::Length { expected: n, got: values.len() });
        }
        crate::kernel::check_probability(&values, tol)?;
        for code in 0..n {
            let w = decode(kappa, 3, code);
            let r = encode(kappa, &rotate(&w, 1));
            if !tol.is_zero(&(values[code].clone() - values[r].clone()), 0.0) {
                return Err(Error::Inconsistent(format!("not rotation invariant at {w:?}")));
            }
        }
        Ok(TripleMeasure { kappa, values })
    }

    /// `ν(a,b,c) = M_ab M_bc M_ca / Tr(M³)`.
    pub fn from_kernel(m: &MarkovKernel<S>) -> Result<Self> {
        if m.memory() != 1 {
            return Err(Error::Precondition("triple measures need memory 1".into()));
        }
        let k = m.kappa();
        let raw: Vec<S> = Words::new(k, 3).map(|w| m.cyclic_weight(&w)).collect();
        let trace = raw.iter().fold(S::zero(), |a, b| a + b.clone());
        if trace.is_zero() {
            return Err(Error::Inconsistent("Tr(M^3) vanishes".into()));
        }
        Ok(TripleMeasure { kappa: k, values: raw.into_iter().map(|v| v / trace.clone()).collect() })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> &S {
        &self.values[(a * self.kappa + b) * self.kappa + c]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|v| v.is_positive())
    }
}

/// Rotation classes of words of length 3, by smallest representative.
pub fn necklaces(kappa: usize) -> Vec<(Word, usize)> {
    let mut out: BTreeMap<Word, usize> = BTreeMap::new();
    for w in Words::new(kappa, 3) {
        let rep = (0..3).map(|k| rotate(&w, k)).min().expect("three rotations");
        *out.entry(rep).or_default() += 1;
    }
    out.into_iter().collect()
}

fn necklace_index(kappa: usize) -> Vec<usize> {
    let reps: Vec<Word> = necklaces(kappa).into_iter().map(|(w, _)| w).collect();
    Words::new(kappa, 3)
        .map(|w| {
            let rep = (0..3).map(|k| rotate(&w, k)).min().expect("three rotations");
            reps.binary_search(&rep).expect("listed")
        })
        .collect()
}

/// Affine family of rotation-invariant solutions of `Cycle₃ ≡ 0` written in
/// `ν`, one unknown per necklace.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle3Family<S> {
    pub kappa: usize,
    pub necklaces: Vec<(Word, usize)>,
    pub solutions: SolutionSet<S>,
}

impl<S: Scalar> Cycle3Family<S> {
    pub fn dimension(&self) -> Option<usize> {
        self.solutions.dimension()
    }

    /// Triple measure at the family point `particular + Σ t_i basis_i`.
    pub fn point(&self, t: &[S]) -> Option<Vec<S>> {
        let p = self.solutions.particular()?;
        let mut v = p.to_vec();
        for (ti, b) in t.iter().zip(self.solutions.basis()) {
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi = vi.clone() + ti.clone() * bi.clone();
            }
        }
        Some(v)
    }

    pub fn measure(&self, orbit_values: &[S]) -> TripleMeasure<S> {
        let idx = necklace_index(self.kappa);
        TripleMeasure { kappa: self.kappa, values: idx.into_iter().map(|i| orbit_values[i].clone()).collect() }
    }

    /// Vertices of `{ν ≥ 0}` within the family, capped at [`MAX_VERTICES`].
    pub fn vertices(&self, tol: Tolerance) -> Vec<Vec<S>> {
        match &self.solutions {
            SolutionSet::Empty => vec![],
            SolutionSet::Unique(p) => {
                if p.iter().all(|v| !v.is_negative() || tol.is_zero(v, 0.0)) {
                    vec![p.clone()]
                } else {
                    vec![]
                }
            }
            SolutionSet::Affine { particular, basis } => polytope_vertices(particular, basis, tol),
        }
    }
}

/// Vertices of `{p + B t ≥ 0}`: every choice of `dim` tight coordinates
/// with a unique feasible solution.
fn polytope_vertices<S: Scalar>(p: &[S], basis: &[Vec<S>], tol: Tolerance) -> Vec<Vec<S>> {
    let d = basis.len();
    let n = p.len();
    let mut out: Vec<Vec<S>> = Vec::new();
    let mut trials = 0;
    let mut combo: Vec<usize> = (0..d).collect();
    if d > n {
        return out;
    }
    loop {
        trials += 1;
        let rows: Vec<Vec<S>> = combo.iter().map(|&i| basis.iter().map(|b| b[i].clone()).collect()).collect();
        let rhs: Vec<S> = combo.iter().map(|&i| -p[i].clone()).collect();
        if let Ok(SolutionSet::Unique(t)) = DenseMatrix::from_rows(rows).and_then(|a| solve_linear(&a, &rhs, tol)) {
            let mut v = p.to_vec();
            for (ti, b) in t.iter().zip(basis) {
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi = vi.clone() + ti.clone() * bi.clone();
                }
            }
            let feasible = v.iter().all(|x| !x.is_negative() || tol.is_zero(x, 0.0));
            let fresh = !out.iter().any(|o| o.iter().zip(&v).all(|(a, b)| tol.is_zero(&(a.clone() - b.clone()), 0.0)));
            if feasible && fresh {
                out.push(v);
                if out.len() >= MAX_VERTICES {
                    break;
                }
            }
        }
        if trials >= MAX_VERTEX_TRIALS || !next_combination(&mut combo, n) {
            break;
        }
    }
    out
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn centroid<S: Scalar>(points: &[Vec<S>]) -> Option<Vec<S>> {
    let first = points.first()?;
    let n = S::from_i64(points.len() as i64);
    let mut c = vec![S::zero(); first.len()];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci = ci.clone() + pi.clone();
        }
    }
    Some(c.into_iter().map(|v| v / n.clone()).collect())
}

fn require_range_two<S: Scalar>(t: &JumpRateMatrix<S>) -> Result<()> {
    if t.range() != 2 {
        return Err(Error::Precondition(format!("range {} given, the search needs range 2", t.range())));
    }
    Ok(())
}

/// Linear system for rotation-invariant `ν` with
/// `Σ_{u,v} ν(c,u,v) T[uv→ab] + ν(a,u,v) T[uv→bc] + ν(b,u,v) T[uv→ca]
///  = ν(a,b,c) (T_out(ab) + T_out(bc) + T_out(ca))` and total mass 1.
pub fn solve_cycle3_system<S: Scalar>(t: &JumpRateMatrix<S>, tol: Tolerance) -> Result<Cycle3Family<S>> {
    require_range_two(t)?;
    let k = t.kappa();
    let orbits = necklaces(k);
    let idx = necklace_index(k);
    let nvar = orbits.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for w in Words::new(k, 3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let mut row = vec![S::zero(); nvar];
        for (lead, target) in [(c, [a, b]), (a, [b, c]), (b, [c, a])] {
            for (u, r) in t.incoming(encode(k, &target)) {
                let uv = decode(k, 2, *u);
                let j = idx[encode(k, &[lead, uv[0], uv[1]])];
                row[j] = row[j].clone() + r.clone();
            }
        }
        let out = t.exit_rate(&[a, b]) + t.exit_rate(&[b, c]) + t.exit_rate(&[c, a]);
        let j = idx[encode(k, &w)];
        row[j] = row[j].clone() - out;
        rows.push(row);
        rhs.push(S::zero());
    }
    rows.push(orbits.iter().map(|(_, size)| S::from_i64(*size as i64)).collect());
    rhs.push(S::one());
    let solutions = solve_linear(&DenseMatrix::from_rows(rows)?, &rhs, tol)?;
    Ok(Cycle3Family { kappa: k, necklaces: orbits, solutions })
}

/// A kernel recovered from a triple measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<S> {
    pub kernel: MarkovKernel<S>,
    pub law: StationaryLaw<S>,
    /// Rounded from a float computation without an exact re-check.
    pub numeric: bool,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet<S> {
    pub candidates: Vec<(Candidate<S>, Option<CriterionReport<S>>)>,
    /// Every positive kernel qualifies (the zero rate matrix).
    pub all_kernels: bool,
    /// False when the sampled family may hide further solutions.
    pub exhausted: bool,
}

fn kernel_from_products<S: Scalar>(k: usize, joint: Vec<Vec<S>>, tol: Tolerance) -> Option<(MarkovKernel<S>, Vec<S>)> {
    let rho: Vec<S> = joint.iter().map(|r| r.iter().fold(S::zero(), |a, b| a + b.clone())).collect();
    let total = rho.iter().fold(S::zero(), |a, b| a + b.clone());
    if rho.iter().any(|r| !r.is_positive()) || !total.is_positive() {
        return None;
    }
    let rows: Vec<Vec<S>> = joint.iter().zip(&rho).map(|(r, s)| r.iter().map(|v| v.clone() / s.clone()).collect()).collect();
    let rho = rho.into_iter().map(|r| r / total.clone()).collect();
    let m = MarkovKernel::with_tolerance(k, 1, rows, tol).ok()?;
    Some((m, rho))
}

fn matches_nu<S: Scalar>(m: &MarkovKernel<S>, nu: &TripleMeasure<S>, tol: Tolerance) -> bool {
    match TripleMeasure::from_kernel(m) {
        Ok(mu) => mu.values.iter().zip(&nu.values).all(|(a, b)| tol.is_zero(&(a.clone() - b.clone()), 0.0)),
        Err(_) => false,
    }
}

/// Eigen step in scalar `S`: `N'_a = [ν(a,x,y)/ν(a,x,a)]` has main
/// eigenvalue `μ_a` with `λ_a³ = μ_a³ ν(a,a,a)`; on agreement
/// `ρ_a M_ab = (Σ_x ν(a,b,x) r_a(x)) / λ³`.
fn eigen_step<S: Scalar>(nu: &TripleMeasure<S>, same: impl Fn(&S, &S) -> bool) -> Option<Vec<Vec<S>>> {
    let k = nu.kappa;
    let mut cubes = Vec::with_capacity(k);
    let mut rights = Vec::with_capacity(k);
    for a in 0..k {
        let rows = (0..k)
            .map(|x| (0..k).map(|y| nu.get(a, x, y).clone() / nu.get(a, x, a).clone()).collect())
            .collect();
        let pair = perron_pair(&DenseMatrix::from_rows(rows).ok()?).ok()?;
        let mu = pair.value;
        cubes.push(mu.clone() * mu.clone() * mu * nu.get(a, a, a).clone());
        rights.push(pair.right);
    }
    if !cubes.iter().all(|c| same(c, &cubes[0])) {
        return None;
    }
    let lambda3 = cubes[0].clone();
    Some(
        (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| {
                        let s = (0..k).fold(S::zero(), |acc, x| acc + nu.get(a, b, x).clone() * rights[a][x].clone());
                        s / lambda3.clone()
                    })
                    .collect()
            })
            .collect(),
    )
}

fn float_same(a: &f64, b: &f64) -> bool {
    (a - b).abs() <= EIGEN_REL_TOL * a.abs().max(b.abs())
}

/// Recovers the unique kernel compatible with `ν`, if any.
///
/// Exact scalars first try rational eigen data; otherwise the eigen step
/// runs in `f64`, the kernel is rounded to denominators at most
/// [`RATIONALIZE_MAX_DEN`] and re-checked exactly, and a kernel failing the
/// exact re-check is kept only if it matches `ν` to `1e-9`, flagged numeric.
pub fn candidate_kernels<S: Scalar>(nu: &TripleMeasure<S>, tol: Tolerance) -> CandidateSet<S> {
    let mut out = CandidateSet { candidates: vec![], all_kernels: false, exhausted: true };
    if !nu.is_positive() {
        return out;
    }
    let k = nu.kappa;
    if S::EXACT {
        if let Some(joint) = eigen_step(nu, |a, b| a == b) {
            if let Some((m, rho)) = kernel_from_products(k, joint, tol) {
                if matches_nu(&m, nu, tol) {
                    let law = StationaryLaw::from_parts(m.clone(), rho);
                    out.candidates.push((Candidate { kernel: m, law, numeric: false, source: "cand3".into() }, None));
                }
                return out;
            }
        }
    }
    let nf = TripleMeasure { kappa: k, values: nu.values.iter().map(|v| v.to_f64()).collect() };
    let ftol = Tolerance::new(tol.abs.max(1e-9));
    let Some(joint) = eigen_step(&nf, float_same) else { return out };
    let Some((mf, _)) = kernel_from_products(k, joint, ftol) else { return out };
    if !matches_nu(&mf, &nf, ftol) {
        return out;
    }
    let rounded: Vec<Vec<S>> = mf
        .rows()
        .into_iter()
        .map(|r| {
            let q: Vec<BigRational> = r.iter().map(|&x| rationalize(x, RATIONALIZE_MAX_DEN)).collect();
            let last: BigRational = BigRational::from_i64(1) - q[..k - 1].iter().fold(BigRational::from_i64(0), |a, b| a + b);
            q[..k - 1].iter().chain([&last]).map(S::from_rational).collect()
        })
        .collect();
    let Ok(m) = MarkovKernel::with_tolerance(k, 1, rounded, tol) else { return out };
    let exact_match = matches_nu(&m, nu, tol);
    if !exact_match && !S::EXACT && !matches_nu(&m, nu, ftol) {
        return out;
    }
    let Ok(law) = crate::numerics::stationary_distribution(&m) else { return out };
    out.candidates.push((Candidate { kernel: m, law, numeric: !exact_match, source: "cand3".into() }, None));
    out
}

/// Full search: `Cycle₃` family, eigen reconstruction on sampled points,
/// product candidates, and a final line check of every survivor.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSearch<S> {
    pub family: Cycle3Family<S>,
    pub samples: Vec<Vec<S>>,
    /// Kernels with `NCycle₃ ≡ 0`, each with its line verdict.
    pub found: CandidateSet<S>,
}

impl<S: Scalar> MarkovSearch<S> {
    pub fn invariant(&self) -> impl Iterator<Item = &Candidate<S>> {
        self.found.candidates.iter().filter(|(_, r)| r.as_ref().is_some_and(|r| r.is_invariant())).map(|(c, _)| c)
    }
}

pub fn find_markov<S: Scalar>(t: &JumpRateMatrix<S>, tol: Tolerance) -> Result<MarkovSearch<S>> {
    let family = solve_cycle3_system(t, tol)?;
    let k = t.kappa();
    let mut samples = family.vertices(tol);
    let dim = family.dimension().unwrap_or(0);
    if let Some(c) = centroid(&samples) {
        let halfway: Vec<Vec<S>> = samples
            .iter()
            .map(|v| v.iter().zip(&c).map(|(a, b)| (a.clone() + b.clone()) / S::from_i64(2)).collect())
            .collect();
        if samples.len() > 1 {
            samples.push(c);
            if dim <= 3 {
                samples.extend(halfway);
            }
        }
    }
    let mut found = CandidateSet { candidates: vec![], all_kernels: t.is_zero(), exhausted: dim == 0 };
    let recovered: Vec<Candidate<S>> = samples
        .par_iter()
        .flat_map(|p| candidate_kernels(&family.measure(p), tol).candidates.into_iter().map(|(c, _)| c).collect::<Vec<_>>())
        .collect();
    let products = find_product(t, tol)?;
    let from_products = products.candidates.into_iter().map(|pc| {
        let kernel = MarkovKernel::new(k, 1, vec![pc.rho.clone(); k]).expect("product rows");
        let law = StationaryLaw::from_parts(kernel.clone(), pc.rho);
        Candidate { kernel, law, numeric: pc.numeric, source: "product".into() }
    });
    for cand in recovered.into_iter().chain(from_products) {
        if found.candidates.iter().any(|(c, _)| c.kernel == cand.kernel) {
            continue;
        }
        let report = CriterionContext::new(t.clone(), cand.law.clone(), tol).ok().map(|ctx| check_markov_line(&ctx));
        found.candidates.push((cand, report));
    }
    Ok(MarkovSearch { family, samples, found })
}

/// A product marginal surviving the symmetric linearization.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCandidate<S> {
    pub rho: Vec<S>,
    pub numeric: bool,
    pub report: CriterionReport<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductSearch<S> {
    /// Solutions `ρ_{uv}` of the linearized `Z^{ρ,S} ≡ 0`, upper-triangular
    /// pair order.
    pub linearized: SolutionSet<S>,
    /// `ρ_aρ_bρ_c NCycle₃(a,b,c)` vanishes as a polynomial: every product
    /// is invariant.
    pub all_products: bool,
    pub candidates: Vec<ProductCandidate<S>>,
    /// False when the candidate list comes from sampling a family.
    pub complete: bool,
}

fn pair_index(k: usize, u: usize, v: usize) -> usize {
    let (a, b) = if u <= v { (u, v) } else { (v, u) };
    a * k - a * (a + 1) / 2 + b
}

/// Cubic form `ρ_aρ_bρ_c NCycle₃(a,b,c)` as monomial coefficients, keyed
/// by sorted letter triples.
pub fn cycle3_polynomial<S: Scalar>(t: &JumpRateMatrix<S>, a: usize, b: usize, c: usize) -> BTreeMap<[usize; 3], S> {
    let k = t.kappa();
    let mut poly: BTreeMap<[usize; 3], S> = BTreeMap::new();
    let mut add = |mut key: [usize; 3], v: S| {
        key.sort_unstable();
        let e = poly.entry(key).or_insert_with(S::zero);
        *e = e.clone() + v;
    };
    for (x, y, other) in [(a, b, c), (b, c, a), (c, a, b)] {
        for (u, r) in t.incoming(encode(k, &[x, y])) {
            let uv = decode(k, 2, *u);
            add([uv[0], uv[1], other], r.clone());
        }
        add([x, y, other], -t.exit_rate(&[x, y]));
    }
    poly.retain(|_, v| !v.is_zero());
    poly
}

fn all_products_invariant<S: Scalar>(t: &JumpRateMatrix<S>, tol: Tolerance) -> bool {
    let scale = t.norm_inf();
    Words::new(t.kappa(), 3).all(|w| cycle3_polynomial(t, w[0], w[1], w[2]).values().all(|v| tol.is_zero(v, scale)))
}

fn rank_one<S: Scalar>(k: usize, pairs: &[S], tol: Tolerance) -> Option<(Vec<S>, bool)> {
    let mut numeric = false;
    let mut rho = Vec::with_capacity(k);
    for u in 0..k {
        let d = &pairs[pair_index(k, u, u)];
        if !d.is_positive() {
            return None;
        }
        match d.sqrt_checked() {
            Some(r) if S::EXACT => rho.push(r),
            _ => {
                numeric |= S::EXACT;
                rho.push(S::from_f64_approx(d.to_f64().sqrt()));
            }
        }
    }
    let ftol = Tolerance::new(tol.abs.max(1e-9));
    let check = if numeric { ftol } else { tol };
    for u in 0..k {
        for v in u..k {
            let diff = rho[u].clone() * rho[v].clone() - pairs[pair_index(k, u, v)].clone();
            if !check.is_zero(&diff, 0.0) {
                return None;
            }
        }
    }
    let total = rho.iter().fold(S::zero(), |a, b| a + b.clone());
    Some((rho.into_iter().map(|r| r / total.clone()).collect(), numeric))
}

/// Roots in `(0,1)` of a polynomial of degree at most 2, coefficients low
/// first; the flag marks irrational roots given in floating point.
fn unit_roots<S: Scalar>(c: &[S]) -> Vec<(S, bool)> {
    let (c0, c1, c2) = (c[0].clone(), c[1].clone(), c[2].clone());
    let inside = |p: &S| p.is_positive() && *p < S::one();
    let mut roots = Vec::new();
    if c2.is_zero() {
        if !c1.is_zero() {
            roots.push((-c0 / c1, false));
        }
    } else {
        let disc = c1.clone() * c1.clone() - S::from_i64(4) * c2.clone() * c0;
        if disc.is_negative() {
            return vec![];
        }
        let two_a = S::from_i64(2) * c2;
        match disc.sqrt_checked() {
            Some(sq) if S::EXACT => {
                roots.push(((-c1.clone() + sq.clone()) / two_a.clone(), false));
                roots.push(((-c1 - sq) / two_a, false));
            }
            _ => {
                let (b, d, a2) = (c1.to_f64(), disc.to_f64().sqrt(), two_a.to_f64());
                roots.push((S::from_f64_approx((-b + d) / a2), S::EXACT));
                roots.push((S::from_f64_approx((-b - d) / a2), S::EXACT));
            }
        }
    }
    roots.retain(|(p, _)| inside(p));
    roots.dedup_by(|x, y| x.0 == y.0);
    roots
}

/// Product candidates: symmetrize, linearize `ρ_xρ_y → ρ_{xy}`, solve,
/// keep rank-one points and verify each on the line.
pub fn find_product<S: Scalar>(t: &JumpRateMatrix<S>, tol: Tolerance) -> Result<ProductSearch<S>> {
    require_range_two(t)?;
    let k = t.kappa();
    let sym = symmetrize(t)?;
    let npairs = k * (k + 1) / 2;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for w in Words::new(k, 2) {
        let mut row = vec![S::zero(); npairs];
        for (u, r) in sym.incoming(encode(k, &w)) {
            let uv = decode(k, 2, *u);
            let j = pair_index(k, uv[0], uv[1]);
            row[j] = row[j].clone() + r.clone();
        }
        let j = pair_index(k, w[0], w[1]);
        row[j] = row[j].clone() - sym.exit_rate(&w);
        rows.push(row);
        rhs.push(S::zero());
    }
    let mut norm = vec![S::zero(); npairs];
    for u in 0..k {
        for v in 0..k {
            let j = pair_index(k, u, v);
            norm[j] = norm[j].clone() + S::one();
        }
    }
    rows.push(norm);
    rhs.push(S::one());
    let linearized = solve_linear(&DenseMatrix::from_rows(rows)?, &rhs, tol)?;
    let all_products = all_products_invariant(t, tol);
    let mut points: Vec<(Vec<S>, bool)> = Vec::new();
    let mut complete = true;
    if all_products {
        points.extend(product_samples(k).into_iter().map(|r| (r, false)));
    } else if k == 2 {
        // ρ = (1-p, p): each linear equation becomes a quadratic in p.
        let polys: Vec<[S; 3]> = (0..k * k).map(|i| linear_in_p(&linearized_row(&sym, i))).collect();
        match polys.iter().find(|c| c.iter().any(|v| !tol.is_zero(v, t.norm_inf()))) {
            None => complete = false,
            Some(first) => {
                for (p, numeric) in unit_roots(first) {
                    let ok = polys.iter().all(|c| {
                        let v = c[0].clone() + c[1].clone() * p.clone() + c[2].clone() * p.clone() * p.clone();
                        let check = if numeric { Tolerance::new(tol.abs.max(1e-9)) } else { tol };
                        check.is_zero(&v, t.norm_inf())
                    });
                    if ok {
                        points.push((vec![S::one() - p.clone(), p], numeric));
                    }
                }
            }
        }
    } else {
        let samples: Vec<Vec<S>> = match &linearized {
            SolutionSet::Empty => vec![],
            SolutionSet::Unique(p) => vec![p.clone()],
            SolutionSet::Affine { particular, basis } => {
                complete = false;
                let mut v = polytope_vertices(particular, basis, tol);
                if let Some(c) = centroid(&v) {
                    v.push(c);
                }
                v
            }
        };
        points.extend(samples.iter().filter_map(|s| rank_one(k, s, tol)));
    }
    let mut candidates = Vec::new();
    for (rho, numeric) in points {
        if candidates.iter().any(|c: &ProductCandidate<S>| c.rho == rho) {
            continue;
        }
        let report = check_product_line(t, &rho, if numeric { Tolerance::new(tol.abs.max(1e-9)) } else { tol })?;
        if report.is_invariant() {
            candidates.push(ProductCandidate { rho, numeric, report });
        }
    }
    Ok(ProductSearch { linearized, all_products, candidates, complete })
}

/// Deterministic marginals standing in for a whole family: uniform,
/// increasing and decreasing weights.
pub fn product_samples<S: Scalar>(k: usize) -> Vec<Vec<S>> {
    let total = S::from_i64((k * (k + 1) / 2) as i64);
    let up: Vec<S> = (1..=k).map(|i| S::from_i64(i as i64) / total.clone()).collect();
    let down: Vec<S> = up.iter().rev().cloned().collect();
    vec![vec![S::from_ratio(1, k as i64); k], up, down]
}

/// Coefficients of pair unknowns in equation `i` of the symmetric system.
fn linearized_row<S: Scalar>(sym: &JumpRateMatrix<S>, i: usize) -> Vec<S> {
    let k = sym.kappa();
    let w = decode(k, 2, i);
    let mut row = vec![S::zero(); k * (k + 1) / 2];
    for (u, r) in sym.incoming(i) {
        let uv = decode(k, 2, *u);
        let j = pair_index(k, uv[0], uv[1]);
        row[j] = row[j].clone() + r.clone();
    }
    let j = pair_index(k, w[0], w[1]);
    row[j] = row[j].clone() - sym.exit_rate(&w);
    row
}

/// Substitutes `ρ_00 = (1-p)², ρ_01 = p(1-p), ρ_11 = p²`.
fn linear_in_p<S: Scalar>(row: &[S]) -> [S; 3] {
    let two = S::from_i64(2);
    let (a, b, c) = (row[0].clone(), row[1].clone(), row[2].clone());
    [a.clone(), -two * a.clone() + b.clone(), a - b + c]
}

/// `F_{(a,u,v,d),(b,c)} = M_au M_uv M_vd / (M_ab M_bc M_cd)`, indexed by
/// the code of `[a,u,v,d,b,c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTable<S> {
    kappa: usize,
    values: Vec<S>,
}

impl<S: Scalar> RatioTable<S> {
    pub fn new(kappa: usize, values: Vec<S>) -> Result<Self> {
        let n = kappa.pow(6);
        if values.len() != n {
            return Err(Error::Length { expected: n, got: values.len() });
        }
        if values.iter().any(|v| !v.is_positive()) {
            return Err(Error::Precondition("ratios must be positive".into()));
        }
        Ok(RatioTable { kappa, values })
    }

    pub fn from_kernel(m: &MarkovKernel<S>) -> Result<Self> {
        if m.memory() != 1 || !m.is_positive() {
            return Err(Error::Precondition("a positive memory-1 kernel is required".into()));
        }
        let k = m.kappa();
        let path = |a: usize, b: usize, c: usize, d: usize| m.get(a, b).clone() * m.get(b, c).clone() * m.get(c, d).clone();
        let values = Words::new(k, 6).map(|w| path(w[0], w[1], w[2], w[3]) / path(w[0], w[4], w[5], w[3])).collect();
        Ok(RatioTable { kappa: k, values })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn get(&self, a: usize, u: usize, v: usize, d: usize, b: usize, c: usize) -> &S {
        &self.values[encode(self.kappa, &[a, u, v, d, b, c])]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }
}

/// The unique positive kernel with ratio table `f`.
///
/// Gauge-fixing `A_{0b} = 1` gives `A_{vd} = F_{(0,0,v,d),(0,0)}`; the
/// kernel is the stochastic normalization `A_ab r_b / (λ r_a)` of `A`, which
/// is then checked against every entry of `f`.
pub fn kernel_from_ratios<S: Scalar>(f: &RatioTable<S>, tol: Tolerance) -> Result<MarkovKernel<S>> {
    let k = f.kappa;
    let a: Vec<Vec<S>> = (0..k).map(|v| (0..k).map(|d| f.get(0, 0, v, d, 0, 0).clone()).collect()).collect();
    let pair = match perron_pair(&DenseMatrix::from_rows(a.clone())?) {
        Ok(p) => p,
        Err(Error::NotRational) if S::EXACT => {
            return Err(Error::NotRational);
        }
        Err(e) => return Err(e),
    };
    let rows: Vec<Vec<S>> = (0..k)
        .map(|i| {
            let row: Vec<S> =
                (0..k).map(|j| a[i][j].clone() * pair.right[j].clone() / (pair.value.clone() * pair.right[i].clone())).collect();
            row
        })
        .collect();
    let m = MarkovKernel::with_tolerance(k, 1, rows, Tolerance::new(tol.abs.max(if S::EXACT { 0.0 } else { 1e-9 })))?;
    let back = RatioTable::from_kernel(&m)?;
    let scale = f.values.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
    if let Some((i, _)) = back
        .values
        .iter()
        .zip(&f.values)
        .enumerate()
        .find(|(_, (x, y))| !tol.is_zero(&((*x).clone() - (*y).clone()), scale))
    {
        return Err(Error::Inconsistent(format!("ratio table violates the path cocycle at {:?}", decode(k, 6, i))));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    fn tasep() -> JumpRateMatrix<Q> {
        JumpRateMatrix::new(2, 2, [(vec![1, 0], vec![0, 1], q(1, 1))]).unwrap()
    }

    fn kernel() -> MarkovKernel<Q> {
        MarkovKernel::new(2, 1, vec![vec![q(1, 3), q(2, 3)], vec![q(3, 4), q(1, 4)]]).unwrap()
    }

    #[test]
    fn necklace_counts() {
        assert_eq!(necklaces(2).len(), 4);
        assert_eq!(necklaces(3).len(), 11);
        assert_eq!(pair_index(3, 2, 1), 4);
        assert_eq!(pair_index(3, 2, 2), 5);
    }

    #[test]
    fn round_trip_and_uniform() {
        let tol = Tolerance::default();
        let nu = TripleMeasure::from_kernel(&kernel()).unwrap();
        let got = candidate_kernels(&nu, tol);
        assert_eq!(got.candidates.len(), 1);
        assert_eq!(got.candidates[0].0.kernel, kernel());
        assert!(!got.candidates[0].0.numeric);
        let uniform = TripleMeasure::new(2, vec![q(1, 8); 8], tol).unwrap();
        let got = candidate_kernels(&uniform, tol);
        assert_eq!(got.candidates[0].0.kernel, MarkovKernel::uniform(2, 1).unwrap());
    }

    #[test]
    fn tasep_family_contains_products() {
        let tol = Tolerance::default();
        let fam = solve_cycle3_system(&tasep(), tol).unwrap();
        let p = q(1, 3);
        let rho = MarkovKernel::new(2, 1, vec![vec![q(2, 3), p.clone()], vec![q(2, 3), p]]).unwrap();
        let nu = TripleMeasure::from_kernel(&rho).unwrap();
        let orbit: Vec<Q> = fam.necklaces.iter().map(|(w, _)| nu.get(w[0], w[1], w[2]).clone()).collect();
        let (part, basis) = (fam.solutions.particular().unwrap(), fam.solutions.basis());
        // ν - particular must lie in the span of the basis.
        let diff: Vec<Q> = orbit.iter().zip(part).map(|(a, b)| a - b).collect();
        let mut rows: Vec<Vec<Q>> = (0..diff.len()).map(|i| basis.iter().map(|b| b[i].clone()).collect()).collect();
        if rows[0].is_empty() {
            rows.iter_mut().for_each(|r| r.push(q(0, 1)));
        }
        let sol = solve_linear(&DenseMatrix::from_rows(rows).unwrap(), &diff, tol).unwrap();
        assert_ne!(sol, SolutionSet::Empty);
    }

    #[test]
    fn tasep_products() {
        let tol = Tolerance::default();
        let found = find_product(&tasep(), tol).unwrap();
        assert!(found.all_products);
        let zero = JumpRateMatrix::<Q>::zero(3, 2).unwrap();
        assert!(find_product(&zero, tol).unwrap().all_products);
        let m = find_markov(&zero, tol).unwrap();
        assert!(m.found.all_kernels);
    }

    #[test]
    fn range_is_checked() {
        let t = JumpRateMatrix::<Q>::zero(2, 3).unwrap();
        assert!(solve_cycle3_system(&t, Tolerance::default()).is_err());
    }

    #[test]
    fn ratios_round_trip() {
        let tol = Tolerance::default();
        let f = RatioTable::from_kernel(&kernel()).unwrap();
        assert_eq!(kernel_from_ratios(&f, tol).unwrap(), kernel());
        let ones = RatioTable::new(2, vec![q(1, 1); 64]).unwrap();
        assert_eq!(kernel_from_ratios(&ones, tol).unwrap(), MarkovKernel::uniform(2, 1).unwrap());
        let mut bad = f.values().to_vec();
        bad[encode(2, &[0, 1, 1, 0, 0, 0])] = bad[encode(2, &[0, 1, 1, 0, 0, 0])].clone() * q(2, 1);
        assert!(matches!(kernel_from_ratios(&RatioTable::new(2, bad).unwrap(), tol), Err(Error::Inconsistent(_))));
    }
}
