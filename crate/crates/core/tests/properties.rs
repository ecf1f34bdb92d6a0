//! Property tests: algebraic identities of the criteria and agreement with
//! the brute-force generators.

mod common;

use common::*;
use ipsinv::criteria::{
    check_markov_cycle, check_markov_line, check_markov_small_cycles, check_master_replace_equivalences,
    check_product_line, master, ncycle, symmetrize, z_table,
};
use ipsinv::lattice2d::check_product_2d;
use ipsinv::models::{almost_geometric, geometric, tasep, zero_range};
use ipsinv::oracle::{
    balance, build_cycle_generator, build_segment_generator, build_torus_generator, gibbs_measure, markov_measure,
    product_measure, stationarity_residual, DEFAULT_MAX_STATES,
};
use ipsinv::search::{candidate_kernels, TripleMeasure};
use ipsinv::segment::{consecutive_difference, nline_segment};
use ipsinv::word::{encode, rotate, Words};
use ipsinv::{
    induced_rate, induced_rate_cyclic, CriterionContext, JumpRateMatrix, MarkovKernel, StationaryLaw,
    Tolerance,
};
use num_traits::Zero;
use proptest::prelude::*;

fn exact() -> Tolerance {
    Tolerance::default()
}

fn ctx(t: &JumpRateMatrix<Q>, law: &StationaryLaw<Q>) -> CriterionContext<Q> {
    CriterionContext::new(t.clone(), law.clone(), exact()).unwrap()
}

/// Product law written as a memory-1 kernel with constant rows.
fn constant_rows(rho: &[Q]) -> StationaryLaw<Q> {
    let k = MarkovKernel::new(rho.len(), 1, vec![rho.to_vec(); rho.len()]).unwrap();
    StationaryLaw::new(k).unwrap()
}

/// Adds `c ρ(v)` on `u -> v` and `c ρ(u)` on `v -> u`: detailed balance for
/// the product measure, so the sum stays invariant whenever `base` is.
fn reversible(base: &JumpRateMatrix<Q>, rho: &[Q], pairs: &[(usize, usize, i64)]) -> JumpRateMatrix<Q> {
    let (k, l) = (base.kappa(), base.range());
    let weight = |c: usize| ipsinv::word::decode(k, l, c).iter().fold(q(1, 1), |a, &x| a * rho[x].clone());
    let mut e: Vec<_> = base.entries().map(|(f, t, r)| (f, t, r.clone())).collect();
    for &(u, v, c) in pairs {
        if u != v {
            e.push((u, v, q(c, 1) * weight(v)));
            e.push((v, u, q(c, 1) * weight(u)));
        }
    }
    JumpRateMatrix::from_codes(base.alphabet(), l, e).unwrap()
}

/// Either a random sparse instance or an invariant one (TASEP-like drift
/// plus a reversible part under a product law).
fn instance(kappa: usize, range: usize) -> impl Strategy<Value = (JumpRateMatrix<Q>, StationaryLaw<Q>)> {
    let size = kappa.pow(range as u32);
    let random = (sparse_jrm(kappa, range, 6), positive_law(kappa, 1));
    let invariant = (
        positive_rho(kappa),
        prop::collection::vec((0..size, 0..size, 1i64..=3), 0..=3),
        0i64..=2,
    )
        .prop_map(move |(rho, pairs, drift)| {
            let base = if range == 2 && kappa == 2 && drift > 0 {
                tasep::<Q>().unwrap().scaled(&q(drift, 1)).unwrap()
            } else {
                JumpRateMatrix::zero(kappa, range).unwrap()
            };
            (reversible(&base, &rho, &pairs), constant_rows(&rho))
        });
    prop_oneof![random, invariant]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn induced_rates_are_additive_and_rotation_invariant(
        t1 in sparse_jrm(2, 2, 5),
        t2 in sparse_jrm(2, 2, 5),
        w in 0usize..32,
        z in 0usize..32,
        k in 0usize..5,
    ) {
        let (w, z) = (word(2, 5, w), word(2, 5, z));
        let sum = t1.sum(&t2).unwrap();
        let cyc = |t: &JumpRateMatrix<Q>, a: &[usize], b: &[usize]| induced_rate_cyclic(t, a, b, 5).unwrap();
        prop_assert_eq!(cyc(&sum, &w, &z), cyc(&t1, &w, &z) + cyc(&t2, &w, &z));
        prop_assert_eq!(cyc(&t1, &rotate(&w, k), &rotate(&z, k)), cyc(&t1, &w, &z));
        let line = induced_rate(&sum, &w, &z).unwrap();
        prop_assert_eq!(line, induced_rate(&t1, &w, &z).unwrap() + induced_rate(&t2, &w, &z).unwrap());
    }

    #[test]
    fn local_balance_is_linear_and_scaling_keeps_verdicts(
        t1 in sparse_jrm(2, 2, 5),
        t2 in sparse_jrm(2, 2, 5),
        law in positive_law(2, 1),
        c in 1i64..=7,
    ) {
        let z1 = z_table(&t1, &law).unwrap();
        let z2 = z_table(&t2, &law).unwrap();
        let zs = z_table(&t1.sum(&t2).unwrap(), &law).unwrap();
        for i in 0..zs.values().len() {
            prop_assert_eq!(zs.get_code(i).clone(), z1.get_code(i).clone() + z2.get_code(i).clone());
        }
        let scaled = t1.scaled(&q(c, 1)).unwrap();
        prop_assert_eq!(
            check_markov_line(&ctx(&scaled, &law)).verdict,
            check_markov_line(&ctx(&t1, &law)).verdict
        );
        let x = [0, 1, 1, 0, 1];
        prop_assert_eq!(ncycle(&ctx(&scaled, &law), &x), q(c, 1) * ncycle(&ctx(&t1, &law), &x));
    }

    #[test]
    fn ncycle_is_rotation_invariant((t, law) in instance(2, 2), code in 0usize..64, k in 0usize..6) {
        let c = ctx(&t, &law);
        let x = word(2, 6, code);
        prop_assert_eq!(ncycle(&c, &rotate(&x, k)), ncycle(&c, &x));
    }

    /// Σ_{b,c} Z(a,b,c,d) M_ab M_bc M_cd = 0 for every a, d.
    #[test]
    fn balanced_sums_vanish(kappa in 2usize..=3, seed in any::<u64>()) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let t = rand_jrm(&mut rng, kappa, 2, 6);
        let m = rand_kernel(&mut rng, kappa);
        let law = StationaryLaw::new(m.clone()).unwrap();
        let z = z_table(&t, &law).unwrap();
        for a in 0..kappa {
            for d in 0..kappa {
                let mut total = q(0, 1);
                for b in 0..kappa {
                    for c in 0..kappa {
                        total += z.get(&[a, b, c, d]).clone() * m.get(a, b).clone() * m.get(b, c).clone() * m.get(c, d).clone();
                    }
                }
                prop_assert_eq!(total, q(0, 1));
            }
        }
    }

    #[test]
    fn certificate_telescopes((t, law) in instance(2, 2), code in 0usize..1024) {
        let c = ctx(&t, &law);
        let r = check_markov_line(&c);
        if let Some(w) = r.certificate {
            let s = c.s();
            for (word, z) in c.z().iter() {
                prop_assert_eq!(z.clone(), w.get(&word[1..]).clone() - w.get(&word[..s - 1]).clone());
            }
            let x = word(2, 10, code);
            let sum = (0..=x.len() - s).fold(q(0, 1), |a, i| a + c.z().get(&x[i..i + s]).clone());
            prop_assert_eq!(sum, w.get(&x[x.len() - s + 1..]).clone() - w.get(&x[..s - 1]).clone());
        } else {
            prop_assert!(r.witness.is_some());
        }
    }

    #[test]
    fn cycle_criterion_matches_generator((t, law) in prop_oneof![instance(2, 2), instance(3, 2), instance(2, 3)]) {
        let c = ctx(&t, &law);
        for n in 3..=6 {
            let g = build_cycle_generator(&t, n, DEFAULT_MAX_STATES).unwrap();
            let mu = gibbs_measure(law.kernel(), n).unwrap();
            let oracle = stationarity_residual(&g, &mu).unwrap().is_zero();
            prop_assert_eq!(check_markov_cycle(&c, n).is_invariant(), oracle, "n = {}", n);
        }
    }

    #[test]
    fn cand3_round_trip(m in (2usize..=3).prop_flat_map(|k| positive_kernel(k, 1))) {
        let nu = TripleMeasure::from_kernel(&m).unwrap();
        let found = candidate_kernels(&nu, exact());
        prop_assert!(found.candidates.iter().any(|(c, _)| c.kernel == m && !c.numeric));
    }

    #[test]
    fn symmetrization_keeps_invariant_products(t in sparse_jrm(2, 2, 4), rho in positive_rho(2)) {
        let s = symmetrize(&t).unwrap();
        if check_product_line(&t, &rho, exact()).unwrap().is_invariant() {
            prop_assert!(check_product_line(&s, &rho, exact()).unwrap().is_invariant());
        }
        let law = ipsinv::StationaryLaw::product(rho.clone()).unwrap();
        let zero = z_table(&s, &law).unwrap().values().iter().all(|v| v.is_zero());
        prop_assert_eq!(check_product_line(&s, &rho, exact()).unwrap().is_invariant(), zero);
    }

    #[test]
    fn segment_balance_matches_generator(
        t in sparse_jrm(2, 2, 5),
        law in positive_law(2, 1),
        beta in boundary(2, 2),
        n in 3usize..=6,
    ) {
        let g = build_segment_generator(&t, &beta, n, DEFAULT_MAX_STATES).unwrap();
        let b = balance(&g, &markov_measure(&law, n)).unwrap();
        for x in Words::new(2, n) {
            let v = nline_segment(&t, &law, &beta, &x).unwrap();
            prop_assert_eq!(v * law.measure(&x), b[encode(2, &x)].clone());
        }
    }

    #[test]
    fn consecutive_segments_differ_by_master(
        t in sparse_jrm(2, 2, 5),
        law in positive_law(2, 1),
        beta in boundary(2, 2),
        code in 0usize..256,
    ) {
        let c = ctx(&t, &law);
        let x = word(2, 8, code);
        let d = consecutive_difference(&t, &law, &beta, &x).unwrap();
        prop_assert_eq!(d, master(&c, &x[..7]).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn equivalence_panel_agrees((t, law) in prop_oneof![instance(2, 2), instance(3, 2)]) {
        let r = check_master_replace_equivalences(&ctx(&t, &law), None);
        prop_assert!(r.all_agree(), "{:?}", r);
        prop_assert!(r.short_cycles_agree(), "{:?}", r);
        prop_assert_eq!(r.cycle_probe, check_markov_line(&ctx(&t, &law)).is_invariant());
    }

    #[test]
    fn torus_matches_square_criterion(t in square_jrm(4), p in 1i64..=4) {
        let rho = vec![q(5 - p, 5), q(p, 5)];
        let verdict = check_product_2d(&t, &rho, exact()).unwrap().is_invariant();
        let g = build_torus_generator(&t, 3, DEFAULT_MAX_STATES).unwrap();
        let residual = stationarity_residual(&g, &product_measure(&rho, 9)).unwrap();
        prop_assert_eq!(verdict, residual.is_zero());
    }

    /// Mass-preserving rates with one invariant geometric product keep every
    /// geometric product of the same support invariant.
    #[test]
    fn almost_geometric_family(
        kappa in 2usize..=5,
        c in 0i64..=3,
        pairs in prop::collection::vec((0usize..25, 0usize..25, 1i64..=3), 0..=4),
        qs in prop::collection::vec((1i64..=5, 1i64..=5), 5),
    ) {
        let zr = zero_range(kappa, |_, _| q(c, 1)).unwrap();
        let mut e: Vec<_> = zr.entries().map(|(f, t, r)| (f, t, r.clone())).collect();
        for (u, v, r) in pairs {
            let (u, v) = (u % (kappa * kappa), v % (kappa * kappa));
            let (su, sv) = (u / kappa + u % kappa, v / kappa + v % kappa);
            if u != v && su == sv {
                e.push((u, v, q(r, 1)));
                e.push((v, u, q(r, 1)));
            }
        }
        let t = JumpRateMatrix::from_codes(zr.alphabet(), 2, e).unwrap();
        prop_assert!(t.is_mass_preserving());
        let first = geometric(&q(1, 2), kappa).unwrap();
        prop_assume!(check_product_line(&t, &first, exact()).unwrap().is_invariant());
        for (n, d) in qs {
            let rho = almost_geometric(kappa, &(0..kappa).collect::<Vec<_>>(), |s| {
                num_traits::pow(q(n, d), s)
            }).unwrap();
            prop_assert!(check_product_line(&t, &rho, exact()).unwrap().is_invariant());
        }
    }
}

/// The small-cycle criterion (`NCycle_n ≡ 0` for `n <= κ^m`) is weaker than
/// line invariance: TASEP with a non-product kernel passes it, yet the Gibbs
/// measure stops being stationary on some short cycle and the line
/// decision fails.
#[test]
fn small_cycles_miss_tasep_with_markov_kernel() {
    let t = tasep::<Q>().unwrap();
    let m = MarkovKernel::new(2, 1, vec![vec![q(2, 3), q(1, 3)], vec![q(1, 2), q(1, 2)]]).unwrap();
    let law = StationaryLaw::new(m.clone()).unwrap();
    let c = ctx(&t, &law);
    assert!(check_markov_small_cycles(&c).is_invariant());
    assert!(!check_markov_line(&c).is_invariant());
    let failing: Vec<usize> = (3..=8)
        .filter(|&n| {
            let g = build_cycle_generator(&t, n, DEFAULT_MAX_STATES).unwrap();
            !stationarity_residual(&g, &gibbs_measure(&m, n).unwrap()).unwrap().is_zero()
        })
        .collect();
    assert_eq!(failing, vec![4, 5, 6, 7, 8]);
}

#[test]
fn torus_four_by_four_matches_square_criterion() {
    let flip = ipsinv::models::square_flip::<Q>(&q(4, 1)).unwrap();
    for (rho, expected) in [(vec![q(2, 3), q(1, 3)], true), (vec![q(1, 2), q(1, 2)], false)] {
        assert_eq!(check_product_2d(&flip, &rho, exact()).unwrap().is_invariant(), expected);
        let g = build_torus_generator(&flip, 4, DEFAULT_MAX_STATES).unwrap();
        let residual = stationarity_residual(&g, &product_measure(&rho, 16)).unwrap();
        assert_eq!(residual.is_zero(), expected);
    }
}
