//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use axfi::adv::{
    compute_weights, cover_count, covered_points, CoverMethod, WeightMode,
};
use axfi::compare::{rbo, Ranking};
use axfi::forest::{build_forest, CXpForest};
use axfi::model::{ExplanationProblem, Model};
use axfi::scores::{
    axfi_banzhaf, axfi_shapley, banzhaf_exhaustive, check_properties, deegan_packel_cxp,
    shapley_exhaustive,
};
use axfi::synth::{gadget_dt, relabel_outputs, running_example};
use axfi::xp::{
    enumerate_axps, enumerate_cxps, minimal_hitting_sets, AxpMethod, CxpMethod, FeatureSet,
    XpFamily, XpKind,
};
use axfi::{Caps, Error};

fn caps() -> Caps {
    Caps::default()
}

fn fs(members: &[usize]) -> FeatureSet {
    FeatureSet::new(members.iter().copied())
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn criterion(n: u32, name: &str, body: impl FnOnce() -> Result<String, String>) {
    match body() {
        Ok(detail) => println!("ACCEPTANCE {n} ({name}): PASS — {detail}"),
        Err(msg) => {
            println!("ACCEPTANCE {n} ({name}): FAIL — {msg}");
            panic!("acceptance criterion {n} ({name}) failed: {msg}");
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

#[test]
fn criterion_01_running_example_exact() {
    criterion(1, "running example, exact", || {
        let start = Instant::now();
        let (_, problem) = running_example();
        let cxps = enumerate_cxps(&problem, CxpMethod::Brute, &caps()).map_err(|e| e.to_string())?;
        ensure!(
            cxps.sets == vec![fs(&[1, 2]), fs(&[1, 3]), fs(&[2, 3])],
            "CXp family mismatch: {:?}",
            cxps.sets
        );
        let weights = compute_weights(&problem, &cxps, WeightMode::Count, 0, 0, &caps())
            .map_err(|e| e.to_string())?;
        let counts: Vec<BigUint> = weights.iter().map(|w| w.count.clone()).collect();
        ensure!(
            counts == vec![BigUint::from(1u32), BigUint::from(4u32), BigUint::from(2u32)],
            "weights mismatch: {counts:?}"
        );
        let forest = build_forest(&problem, WeightMode::Count, 0, 0, &caps())
            .map_err(|e| e.to_string())?;
        let chi_cases: [(&[usize], BigRational); 8] = [
            (&[], int(0)),
            (&[1], ratio(5, 3)),
            (&[2], int(1)),
            (&[3], int(2)),
            (&[1, 2], ratio(7, 3)),
            (&[1, 3], ratio(7, 3)),
            (&[2, 3], ratio(7, 3)),
            (&[1, 2, 3], ratio(7, 3)),
        ];
        for (s, want) in chi_cases {
            let got = forest.chi(&fs(s)).map_err(|e| e.to_string())?;
            ensure!(got == want, "chi({s:?}) = {got}, want {want}");
        }
        let phi_s = axfi_shapley(&forest);
        let phi_b = axfi_banzhaf(&forest);
        let want = vec![ratio(5, 6), ratio(1, 2), int(1)];
        ensure!(phi_s.values == want, "phi_S mismatch: {:?}", phi_s.values);
        ensure!(phi_b.values == want, "phi_B mismatch: {:?}", phi_b.values);
        let elapsed = start.elapsed();
        let in_budget = elapsed.as_secs_f64() < 1.0;
        ensure!(in_budget, "took {elapsed:?}, budget 1 s");
        Ok(format!("chi table, weights (1,4,2), phi_S = phi_B = (5/6,1/2,1) in {elapsed:?}"))
    });
}

#[test]
fn criterion_02_oracle_equivalence() {
    criterion(2, "closed form equals exhaustive engines", || {
        let start = Instant::now();
        let corpus = common::corpus(204);
        for (i, (_, problem)) in corpus.iter().enumerate() {
            let forest = build_forest(problem, WeightMode::Count, 0, 0, &caps())
                .map_err(|e| format!("problem {i}: {e}"))?;
            let phi_s = axfi_shapley(&forest);
            let phi_b = axfi_banzhaf(&forest);
            let ex_s = shapley_exhaustive(&forest, &caps()).map_err(|e| e.to_string())?;
            let ex_b = banzhaf_exhaustive(&forest, &caps()).map_err(|e| e.to_string())?;
            ensure!(
                phi_s.values == ex_s.values,
                "problem {i}: Shapley closed form diverges from the exhaustive engine"
            );
            ensure!(
                phi_b.values == ex_b.values,
                "problem {i}: Banzhaf closed form diverges from the exhaustive engine"
            );
        }
        let elapsed = start.elapsed();
        let in_budget = elapsed.as_secs_f64() < 60.0;
        ensure!(in_budget, "took {elapsed:?}, budget 60 s");
        Ok(format!("{} problems in {elapsed:?}", corpus.len()))
    });
}

#[test]
fn criterion_03_duality() {
    criterion(3, "hitting-set duality", || {
        let corpus = common::corpus(204);
        let mut tree_cases = 0usize;
        for (i, (model, problem)) in corpus.iter().enumerate() {
            let cxps = enumerate_cxps(problem, CxpMethod::Brute, &caps())
                .map_err(|e| format!("problem {i}: {e}"))?;
            if model.is_tree() {
                let by_paths = enumerate_cxps(problem, CxpMethod::DtPaths, &caps())
                    .map_err(|e| e.to_string())?;
                ensure!(by_paths == cxps, "problem {i}: dt_paths and brute CXps differ");
                tree_cases += 1;
            }
            let axps = enumerate_axps(problem, AxpMethod::Brute, &caps())
                .map_err(|e| format!("problem {i}: {e}"))?;
            ensure!(!cxps.is_empty(), "problem {i}: no CXps for a non-constant model");
            let mhs_of_cxps = minimal_hitting_sets(&cxps.sets).map_err(|e| e.to_string())?;
            ensure!(mhs_of_cxps == axps.sets, "problem {i}: MHS(C) != A");
            let mhs_of_axps = minimal_hitting_sets(&axps.sets).map_err(|e| e.to_string())?;
            ensure!(mhs_of_axps == cxps.sets, "problem {i}: MHS(A) != C");
        }
        Ok(format!("{} problems, {} tree cases", corpus.len(), tree_cases))
    });
}

#[test]
fn criterion_04_gadget_scaling() {
    criterion(4, "gadget scaling", || {
        for k in 1..=10usize {
            let (_, problem) = gadget_dt(k).map_err(|e| e.to_string())?;
            let cxps = enumerate_cxps(&problem, CxpMethod::DtPaths, &caps())
                .map_err(|e| e.to_string())?;
            ensure!(cxps.len() == 2 * k, "k={k}: |C| = {}, want {}", cxps.len(), 2 * k);
            let axps = enumerate_axps(&problem, AxpMethod::MhsDual, &caps())
                .map_err(|e| e.to_string())?;
            ensure!(axps.len() == 1 << k, "k={k}: |A| = {}, want {}", axps.len(), 1 << k);
        }
        let (_, problem) = gadget_dt(10).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let cxps =
            enumerate_cxps(&problem, CxpMethod::DtPaths, &caps()).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        ensure!(cxps.len() == 20, "k=10 CXp count");
        let in_budget = elapsed.as_secs_f64() < 1.0;
        ensure!(in_budget, "dt_paths at k=10 took {elapsed:?}, budget 1 s");
        match enumerate_axps(&problem, AxpMethod::Brute, &caps()) {
            Err(Error::CapExceeded { .. }) => {}
            other => {
                return Err(format!(
                    "brute AXp enumeration at k=10 should hit the subset cap, got {other:?}"
                ))
            }
        }
        Ok(format!("k=1..10 counts exact; dt_paths at k=10 in {elapsed:?}; brute capped"))
    });
}

#[test]
fn criterion_05_counterexample_reproduction() {
    criterion(5, "AXp-minimal monotonicity counterexample", || {
        let cxps = vec![fs(&[1]), fs(&[2, 3])];
        let forest =
            CXpForest::new(3, cxps.clone(), vec![int(1), int(5)]).map_err(|e| e.to_string())?;
        let phi_s = axfi_shapley(&forest);
        ensure!(
            phi_s.values == vec![ratio(1, 2), ratio(5, 4), ratio(5, 4)],
            "phi_S mismatch: {:?}",
            phi_s.values
        );
        let axps = minimal_hitting_sets(&cxps).map_err(|e| e.to_string())?;
        ensure!(axps == vec![fs(&[1, 2]), fs(&[1, 3])], "A(E) mismatch: {axps:?}");
        let family = XpFamily::new(XpKind::Axp, axps).map_err(|e| e.to_string())?;
        let a1 = family.containing(1);
        let a2 = family.containing(2);
        ensure!(
            a2.iter().all(|i| a1.contains(i)),
            "A_2 should be included in A_1"
        );
        ensure!(
            phi_s.value(1) < phi_s.value(2),
            "expected phi_S(1) < phi_S(2)"
        );
        let report = check_properties(&forest, None, &caps()).map_err(|e| e.to_string())?;
        let axp_check = report
            .get("axp_minimal_monotonicity")
            .ok_or("missing axp_minimal_monotonicity check")?;
        ensure!(!axp_check.holds, "the violation should be flagged");
        ensure!(report.all_guaranteed_hold(), "guaranteed properties must still hold");
        Ok("phi_S(1)=1/2 < phi_S(2)=5/4 with A_2 ⊆ A_1, flagged as violated".into())
    });
}

fn cyclic_class_map(model: &Model) -> BTreeMap<i64, i64> {
    let classes: Vec<i64> = model.class_set().unwrap().into_iter().collect();
    classes
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, classes[(i + 1) % classes.len()]))
        .collect()
}

#[test]
fn criterion_06_property_suite() {
    criterion(6, "score properties and relabel invariance", || {
        let corpus = common::corpus(204);
        for (i, (model, problem)) in corpus.iter().enumerate() {
            let forest = build_forest(problem, WeightMode::Count, 0, 0, &caps())
                .map_err(|e| format!("problem {i}: {e}"))?;
            let report = check_properties(&forest, Some(problem), &caps())
                .map_err(|e| e.to_string())?;
            ensure!(
                report.all_guaranteed_hold(),
                "problem {i}: {:?}",
                report
                    .checks
                    .iter()
                    .filter(|c| c.guaranteed && !c.holds)
                    .map(|c| (c.name, c.witness.clone()))
                    .collect::<Vec<_>>()
            );

            // output relabeling: a class bijection leaves the CXp family,
            // the cover counts, and both score vectors unchanged
            let relabeled = relabel_outputs(model, &cyclic_class_map(model))
                .map_err(|e| e.to_string())?;
            let relabeled_problem = ExplanationProblem::new(
                relabeled,
                problem.v().to_vec(),
                BigRational::zero(),
                problem.epsilon(),
            )
            .map_err(|e| e.to_string())?;
            let relabeled_forest =
                build_forest(&relabeled_problem, WeightMode::Count, 0, 0, &caps())
                    .map_err(|e| e.to_string())?;
            ensure!(
                relabeled_forest.cxps() == forest.cxps(),
                "problem {i}: relabeling changed the CXp family"
            );
            ensure!(
                relabeled_forest.weights() == forest.weights(),
                "problem {i}: relabeling changed the cover counts"
            );
            ensure!(
                axfi_shapley(&relabeled_forest).values == axfi_shapley(&forest).values
                    && axfi_banzhaf(&relabeled_forest).values == axfi_banzhaf(&forest).values,
                "problem {i}: relabeling changed the scores"
            );
        }
        Ok(format!("{} problems, all guaranteed properties + relabel invariance", corpus.len()))
    });
}

#[test]
fn criterion_07_unweighted_equivalence() {
    criterion(7, "unweighted Shapley-like equals Deegan-Packel", || {
        let corpus = common::corpus(204);
        for (i, (_, problem)) in corpus.iter().enumerate() {
            let forest = build_forest(problem, WeightMode::Unweighted, 0, 0, &caps())
                .map_err(|e| format!("problem {i}: {e}"))?;
            let phi = axfi_shapley(&forest);
            let dp = deegan_packel_cxp(&forest.cxp_family(), problem.m())
                .map_err(|e| e.to_string())?;
            ensure!(phi.values == dp.values, "problem {i}: vectors differ");
        }
        Ok(format!("{} forests", corpus.len()))
    });
}

#[test]
fn criterion_08_cover_counting() {
    criterion(8, "dt_restrict vs brute covers, disjointness", || {
        let corpus = common::corpus(204);
        let mut pairs = 0usize;
        let mut disjoint_checked = 0usize;
        for (i, (model, problem)) in corpus.iter().enumerate() {
            if !model.is_tree() {
                continue;
            }
            let cxps = enumerate_cxps(problem, CxpMethod::DtPaths, &caps())
                .map_err(|e| format!("problem {i}: {e}"))?;
            for cxp in &cxps.sets {
                let brute = cover_count(problem, cxp, CoverMethod::Brute, &caps())
                    .map_err(|e| e.to_string())?;
                let restrict = cover_count(problem, cxp, CoverMethod::DtRestrict, &caps())
                    .map_err(|e| e.to_string())?;
                ensure!(
                    brute.count == restrict.count && brute.ratio == restrict.ratio,
                    "problem {i}, CXp {cxp}: brute {} vs dt_restrict {}",
                    brute.count,
                    restrict.count
                );
                pairs += 1;
            }
            // pairwise disjointness by enumeration on small problems
            let total: u128 = cxps
                .sets
                .iter()
                .map(|c| model.space().subspace_size(c.members()))
                .sum();
            if total <= 100_000 {
                let mut seen = std::collections::BTreeSet::new();
                for cxp in &cxps.sets {
                    for p in covered_points(problem, cxp, &caps()).map_err(|e| e.to_string())? {
                        ensure!(
                            seen.insert(p.clone()),
                            "problem {i}: point {p:?} covered by two CXps"
                        );
                    }
                }
                disjoint_checked += 1;
            }
        }
        ensure!(pairs >= 200, "only {pairs} DT/CXp pairs, need 200");
        Ok(format!("{pairs} DT/CXp pairs exact, disjointness on {disjoint_checked} problems"))
    });
}

#[test]
fn criterion_09_sampled_weights() {
    criterion(9, "sampled weights within the binomial bound", || {
        let samples = 5000u64;
        let bound_factor = ratio(9, 5000); // (3 sigma)^2 = 9 * r(1-r) / 5000
        let mut trials = 0usize;
        let mut within = 0usize;
        let mut seed_stream = 0u64;
        'outer: for i in 0.. {
            let spec = axfi::synth::RandomSpec::new(
                6,
                vec![2],
                axfi::synth::ModelKind::Tree,
                vec![1, 1],
            );
            let (_, problem) =
                axfi::synth::random_problem(&spec, 5000 + i).map_err(|e| e.to_string())?;
            let cxps = enumerate_cxps(&problem, CxpMethod::DtPaths, &caps())
                .map_err(|e| e.to_string())?;
            seed_stream += 1;
            let measures = compute_weights(
                &problem,
                &cxps,
                WeightMode::Sampled,
                samples,
                seed_stream,
                &caps(),
            )
            .map_err(|e| e.to_string())?;
            for m in measures {
                let s = m.sampled.as_ref().ok_or("missing sampled ratio")?;
                let r = &m.ratio;
                let err = &s.ratio - r;
                let bound = &bound_factor * r * (BigRational::one() - r);
                if &err * &err <= bound {
                    within += 1;
                }
                trials += 1;
                if trials == 100 {
                    break 'outer;
                }
            }
        }
        ensure!(
            within * 100 >= trials * 95,
            "{within}/{trials} trials within 3 sigma, need 95%"
        );
        Ok(format!("{within}/{trials} trials within the bound"))
    });
}

#[test]
fn criterion_10_rbo() {
    criterion(10, "rank-biased overlap", || {
        let p = ratio(1, 2);
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for m in 5..=12usize {
            for _ in 0..5 {
                let mut ordered: Vec<usize> = (1..=m).collect();
                ordered.shuffle(&mut rng);
                let a = Ranking { ordered, source: "random".into() };
                let v = rbo(&a, &a, &p, 5).map_err(|e| e.to_string())?;
                ensure!(v == ratio(31, 32), "rbo(a,a) = {v} for m={m}, want 31/32");
            }
        }
        let a = Ranking { ordered: (1..=9).collect(), source: "a".into() };
        let b = Ranking { ordered: vec![1, 6, 7, 8, 9, 2, 3, 4, 5], source: "b".into() };
        let v = rbo(&a, &b, &p, 5).map_err(|e| e.to_string())?;
        ensure!(v == ratio(661, 960), "prefix example = {v}, want 661/960");
        Ok("identity ceiling 31/32 on 40 rankings; prefix case 661/960".into())
    });
}
