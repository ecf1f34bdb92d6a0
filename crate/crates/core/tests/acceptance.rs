//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use common::*;
use ipsinv::criteria::{check_markov_cycle, check_markov_line, check_master_replace_equivalences, check_product_line, z_table};
use ipsinv::lattice2d::check_product_2d;
use ipsinv::models::{
    almost_geometric, contact, geometric, hmc_kernel, hmc_law, hmc_rates, ising_kernel, project_jrm, projected_measure,
    square_flip, square_pair_flip, stochastic_ising, tasep, tasep3, voter, zero_range, Projection, HMC_PROJECTION,
};
use ipsinv::oracle::{
    balance, build_cycle_generator, build_segment_generator, build_torus_generator, gibbs_measure, markov_measure,
    product_measure, stationarity_residual, theorem_fs_conclusion, FsVerdict, DEFAULT_MAX_STATES,
};
use ipsinv::search::{candidate_kernels, TripleMeasure};
use ipsinv::segment::{construct_boundaries, nline_segment};
use ipsinv::word::{encode, Words};
use ipsinv::{CriterionContext, JumpRateMatrix, MarkovKernel, Scalar, StationaryLaw, Tolerance};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Float path tolerance for kernels recovered from triple measures.
const CAND3_FLOAT_TOL: f64 = 1e-9;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn exact() -> Tolerance {
    Tolerance::default()
}

fn ctx(t: &JumpRateMatrix<Q>, law: &StationaryLaw<Q>) -> CriterionContext<Q> {
    CriterionContext::new(t.clone(), law.clone(), exact()).unwrap()
}

fn gibbs_residual(t: &JumpRateMatrix<Q>, m: &MarkovKernel<Q>, n: usize) -> Q {
    let g = build_cycle_generator(t, n, DEFAULT_MAX_STATES).unwrap();
    stationarity_residual(&g, &gibbs_measure(m, n).unwrap()).unwrap()
}

fn ising() -> Check {
    let x = q(1, 2);
    let t = stochastic_ising(&x).unwrap();
    let m = ising_kernel(&x).unwrap();
    ensure(m.get(0, 1) == &q(1, 5) && m.get(1, 1) == &q(4, 5), "kernel differs from (1/5, 4/5)")?;
    let law = StationaryLaw::new(m.clone()).unwrap();
    let z = z_table(&t, &law).unwrap();
    ensure(z.values().len() == 32, format!("{} Z values", z.values().len()))?;
    ensure(z.values().iter().all(|v| v.is_zero()), "nonzero Z value")?;
    ensure(check_markov_cycle(&ctx(&t, &law), 9).is_invariant(), "NCycle_9 does not vanish")?;
    for n in 3..=5 {
        ensure(gibbs_residual(&t, &m, n).is_zero(), format!("Gibbs residual nonzero at n = {n}"))?;
    }
    Ok("32 Z values are 0, NCycle_9 = 0, Gibbs residual 0 for n = 3..5".into())
}

fn hmc() -> Check {
    let t = hmc_rates::<Q>().unwrap();
    let law = hmc_law::<Q>().unwrap();
    ensure(z_table(&t, &law).unwrap().values().iter().all(|v| v.is_zero()), "Z does not vanish")?;
    let rho = StationaryLaw::new(hmc_kernel::<Q>().unwrap()).unwrap().rho().to_vec();
    ensure(rho == vec![q(35, 89), q(29, 89), q(25, 89)], format!("stationary vector {rho:?}"))?;
    let Projection::Projected(tp) = project_jrm(&t, &HMC_PROJECTION).unwrap() else {
        return Err("projection is inconsistent".into());
    };
    ensure(tp.nnz() == 2, "projection has extra entries")?;
    ensure(tp.rate(&[0, 0, 0], &[0, 1, 0]) == q(270, 1), "T'[000->010] != 270")?;
    ensure(tp.rate(&[0, 1, 0], &[0, 0, 0]) == q(294, 1), "T'[010->000] != 294")?;
    let mu = |y: &[usize]| projected_measure(&law, &HMC_PROJECTION, y).unwrap();
    let r3 = mu(&[1, 1, 1]) / mu(&[1, 1]);
    let r2 = mu(&[1, 1]) / mu(&[1]);
    ensure(r3 == q(71, 106) && r2 == q(53, 81), format!("ratios {r3} and {r2}"))?;
    Ok(format!("Z = 0, rho = (35, 29, 25)/89, T' = 270/294, ratios {r3} vs {r2}"))
}

fn tasep_products() -> Check {
    let t = tasep::<Q>().unwrap();
    for p in [q(1, 4), q(1, 2), q(9, 10)] {
        let rho = vec![q(1, 1) - p.clone(), p.clone()];
        ensure(check_product_line(&t, &rho, exact()).unwrap().is_invariant(), format!("p = {p} not invariant"))?;
        for n in 3..=6 {
            let g = build_cycle_generator(&t, n, DEFAULT_MAX_STATES).unwrap();
            let r = stationarity_residual(&g, &product_measure(&rho, n)).unwrap();
            ensure(r.is_zero(), format!("p = {p}, n = {n}: residual {r}"))?;
        }
    }
    Ok("p in {1/4, 1/2, 9/10} invariant, residual 0 for n = 3..6".into())
}

fn tasep3_colours() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let samples: Vec<Vec<Q>> = (0..10).map(|_| rand_rho(&mut rng, 3)).collect();
    let condition = |r10: i64, r20: i64, r21: i64| -r20 + r21 + r10;
    let good = tasep3(&q(1, 1), &q(2, 1), &q(1, 1)).unwrap();
    ensure(condition(1, 2, 1) == 0, "condition should vanish at (1,2,1)")?;
    for rho in &samples {
        ensure(check_product_line(&good, rho, exact()).unwrap().is_invariant(), format!("(1,2,1) fails at {rho:?}"))?;
    }
    let bad = tasep3(&q(1, 1), &q(1, 1), &q(1, 1)).unwrap();
    ensure(condition(1, 1, 1) != 0, "condition should not vanish at (1,1,1)")?;
    let mut witness = None;
    for rho in &samples {
        let r = check_product_line(&bad, rho, exact()).unwrap();
        ensure(!r.is_invariant(), format!("(1,1,1) invariant at {rho:?}"))?;
        let w = r.witness.ok_or("missing witness")?;
        ensure(!w.residual.is_zero(), "zero residual in witness")?;
        witness.get_or_insert(w.word);
    }
    Ok(format!("(1,2,1): 10/10 invariant; (1,1,1): 10/10 violated, first witness {:?}", witness.unwrap()))
}

fn absorbing() -> Check {
    let ns: Vec<usize> = (3..=8).collect();
    let mut out = Vec::new();
    for (name, t, exact_set) in [("voter", voter::<Q>().unwrap(), true), ("contact", contact::<Q>(&q(2, 1)).unwrap(), false)] {
        let r = theorem_fs_conclusion(&t, &ns, DEFAULT_MAX_STATES).unwrap();
        for (n, a) in &r.per_n {
            ensure(a.is_proper, format!("{name}: not proper at n = {n}"))?;
            let zero = encode(2, &vec![0; *n]);
            let one = encode(2, &vec![1; *n]);
            let ok = if exact_set { a.absorbing == vec![zero, one] } else { a.absorbing.contains(&zero) };
            ensure(ok, format!("{name}: absorbing set {:?} at n = {n}", a.absorbing))?;
        }
        match r.verdict {
            FsVerdict::NoMarkovLaw { max_memory, pattern_persists: true } => out.push(format!("{name} m <= {max_memory}")),
            v => return Err(format!("{name}: {v:?}")),
        }
    }
    Ok(format!("proper absorbing sets for n = 3..8; no full-support Markov law ({})", out.join(", ")))
}

fn equivalence_panel() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut invariant = 0;
    for i in 0..200 {
        let kappa = if i % 2 == 0 { 2 } else { 3 };
        let t = rand_jrm(&mut rng, kappa, 2, 6);
        let m = rand_kernel(&mut rng, kappa);
        let law = StationaryLaw::new(m.clone()).unwrap();
        let c = ctx(&t, &law);
        let r = check_master_replace_equivalences(&c, None);
        ensure(r.all_agree(), format!("instance {i}: predicates {:?}", r.predicates()))?;
        ensure(r.short_cycles_agree(), format!("instance {i}: cycle equalities {:?}", r.short_cycles))?;
        let verdict = check_markov_line(&c).is_invariant();
        let mut all_cycles = true;
        for n in 3..=6 {
            let oracle = gibbs_residual(&t, &m, n).is_zero();
            ensure(check_markov_cycle(&c, n).is_invariant() == oracle, format!("instance {i}: n = {n} disagrees"))?;
            all_cycles &= oracle;
        }
        ensure(verdict == all_cycles, format!("instance {i}: line verdict {verdict} vs cycles {all_cycles}"))?;
        invariant += verdict as usize;
    }
    Ok(format!("200 instances agree ({invariant} invariant)"))
}

fn cand3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut exact_hits, mut float_hits) = (0, 0);
    for i in 0..50 {
        let kappa = rng.gen_range(2..=3);
        let m = rand_kernel(&mut rng, kappa);
        let nu = TripleMeasure::from_kernel(&m).unwrap();
        let found = candidate_kernels(&nu, exact());
        let hit = found.candidates.iter().find_map(|(c, _)| {
            let err = c
                .kernel
                .rows()
                .iter()
                .flatten()
                .zip(m.rows().iter().flatten())
                .map(|(a, b)| (a.clone() - b.clone()).to_f64().abs())
                .fold(0.0, f64::max);
            (err <= CAND3_FLOAT_TOL).then_some((err, c.numeric))
        });
        match hit {
            Some((err, false)) if err == 0.0 => exact_hits += 1,
            Some(_) => float_hits += 1,
            None => return Err(format!("instance {i}: kernel not recovered")),
        }
    }
    Ok(format!("50/50 recovered ({exact_hits} exact, {float_hits} float)"))
}

fn balanced() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..100 {
        let kappa = rng.gen_range(2..=3);
        let t = rand_jrm(&mut rng, kappa, 2, 6);
        let m = rand_kernel(&mut rng, kappa);
        let z = z_table(&t, &StationaryLaw::new(m.clone()).unwrap()).unwrap();
        for a in 0..kappa {
            for d in 0..kappa {
                let mut total = q(0, 1);
                for b in 0..kappa {
                    for c in 0..kappa {
                        total += z.get(&[a, b, c, d]).clone() * m.get(a, b).clone() * m.get(b, c).clone() * m.get(c, d).clone();
                    }
                }
                ensure(total.is_zero(), format!("instance {i}: (a, d) = ({a}, {d}) gives {total}"))?;
            }
        }
    }
    Ok("100 instances, every (a, d) exactly 0".into())
}

fn square() -> Check {
    let flip = square_flip(&q(4, 1)).unwrap();
    let rho = vec![q(2, 3), q(1, 3)];
    ensure(check_product_2d(&flip, &rho, exact()).unwrap().is_invariant(), "flip model not invariant")?;
    let g = build_torus_generator(&flip, 3, DEFAULT_MAX_STATES).unwrap();
    ensure(g.states() == 512, "torus size")?;
    let r = stationarity_residual(&g, &product_measure(&rho, 9)).unwrap();
    ensure(r.is_zero(), format!("torus residual {r}"))?;
    let pair = square_pair_flip(&q(1, 1), &q(2, 1)).unwrap();
    for p in 1..=9 {
        let rho = vec![q(10 - p, 10), q(p, 10)];
        ensure(!check_product_2d(&pair, &rho, exact()).unwrap().is_invariant(), format!("pair flip invariant at {p}/10"))?;
    }
    Ok("flip a = 4 invariant at rho_1 = 1/3 (torus residual 0); pair flip a != b never invariant".into())
}

fn segment() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..20 {
        let t = rand_jrm(&mut rng, 2, 2, 5);
        let law = StationaryLaw::new(rand_kernel(&mut rng, 2)).unwrap();
        let beta = ipsinv::BoundaryRates::new(rand_jrm(&mut rng, 2, 1, 2), rand_jrm(&mut rng, 2, 1, 2)).unwrap();
        let n = rng.gen_range(3..=6);
        let g = build_segment_generator(&t, &beta, n, DEFAULT_MAX_STATES).unwrap();
        let b = balance(&g, &markov_measure(&law, n)).unwrap();
        for x in Words::new(2, n) {
            let v = nline_segment(&t, &law, &beta, &x).unwrap() * law.measure(&x);
            ensure(v == b[encode(2, &x)], format!("instance {i}: mismatch at {x:?}"))?;
        }
    }
    let rho = vec![q(2, 3), q(1, 3)];
    let law = StationaryLaw::new(MarkovKernel::new(2, 1, vec![rho.clone(), rho]).unwrap()).unwrap();
    let c = construct_boundaries(&tasep::<Q>().unwrap(), &law, exact()).unwrap();
    ensure(c.outside_report.is_invariant(), "outside-weighted boundaries fail")?;
    let note = match c.discrepancy() {
        Some((w, r)) => format!("target-weighted right boundary: discrepancy at {w:?} (residual {r})"),
        None => "target-weighted right boundary validates".into(),
    };
    Ok(format!("20 segment instances match the generator; TASEP boundaries: {note}"))
}

fn zero_range_family() -> Check {
    let kappa = 4;
    let t = zero_range(kappa, |_, _| q(1, 1)).unwrap();
    ensure(t.is_mass_preserving(), "not mass preserving")?;
    let first = geometric(&q(1, 2), kappa).unwrap();
    ensure(check_product_line(&t, &first, exact()).unwrap().is_invariant(), "geometric(1/2) not invariant")?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let r = q(rng.gen_range(1..=7), rng.gen_range(1..=7));
        let rho = almost_geometric(kappa, &[0, 1, 2, 3], |s| num_traits::pow(r.clone(), s)).unwrap();
        ensure(check_product_line(&t, &rho, exact()).unwrap().is_invariant(), format!("ratio {r} fails"))?;
    }
    Ok("geometric(1/2) invariant; 5/5 sampled almost-geometric products invariant".into())
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 11] = [
        ("Ising exactness", ising, Duration::from_secs(1)),
        ("HMC instance", hmc, Duration::from_secs(1)),
        ("TASEP products", tasep_products, Duration::MAX),
        ("3-colour TASEP", tasep3_colours, Duration::MAX),
        ("absorbing sets", absorbing, Duration::MAX),
        ("equivalence panel", equivalence_panel, Duration::from_secs(300)),
        ("cand3 round trip", cand3, Duration::MAX),
        ("balanced sums", balanced, Duration::MAX),
        ("2D square models", square, Duration::from_secs(30)),
        ("segment", segment, Duration::MAX),
        ("zero-range family", zero_range_family, Duration::MAX),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > *budget => Err(format!("{detail}; took {elapsed:?}, budget {budget:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{:.2?}]", i + 1, elapsed),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {e} [{:.2?}]", i + 1, elapsed);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
