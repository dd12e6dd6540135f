//! Adversarial examples and CXp cover measures: the l0 norm, exhaustive
//! AEx enumeration, exact counting of the points each CXp covers (by scan
//! or by decision-tree restriction), and seeded sampling of cover ratios.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::model::{for_each_in_subspace, DecisionTree, ExplanationProblem, Node, Value};
use crate::num::format_ratio;
use crate::xp::{enumerate_cxps, is_wcxp, CxpMethod, FeatureSet, XpFamily, XpKind};
use crate::{Caps, Error, Result};

/// Number of coordinates on which two points differ.
pub fn l0_distance(x: &[Value], y: &[Value]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::ArityMismatch { expected: x.len(), got: y.len() });
    }
    Ok(x.iter().zip(y).filter(|(a, b)| a != b).count())
}

/// The adversarial examples of a problem: every point within l0 radius
/// epsilon of the instance whose output is distinguishable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AexSet {
    pub points: Vec<Vec<Value>>,
}

impl AexSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Enumerate all adversarial examples by scanning the feature space.
pub fn enumerate_aexs(problem: &ExplanationProblem, caps: &Caps) -> Result<AexSet> {
    let space = problem.model().space();
    caps.check_space("adversarial-example enumeration", space.size())?;
    let eps = problem.epsilon_effective();
    let all: Vec<usize> = (1..=problem.m()).collect();
    let mut points = Vec::new();
    let mut err = None;
    for_each_in_subspace(space, problem.v(), &all, |x| {
        let dist = x.iter().zip(problem.v()).filter(|(a, b)| a != b).count();
        if dist == 0 || dist > eps {
            return true;
        }
        match problem.similar(x) {
            Ok(true) => true,
            Ok(false) => {
                points.push(x.to_vec());
                true
            }
            Err(e) => {
                err = Some(e);
                false
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(AexSet { points }),
    }
}

/// How the number of covered points is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverMethod {
    Brute,
    DtRestrict,
}

/// Which weights a forest carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Count,
    Ratio,
    Sampled,
    Unweighted,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count" => Ok(WeightMode::Count),
            "ratio" => Ok(WeightMode::Ratio),
            "sampled" => Ok(WeightMode::Sampled),
            "unweighted" => Ok(WeightMode::Unweighted),
            other => Err(Error::InvalidArgument(format!("unknown weight mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledCover {
    pub ratio: BigRational,
    pub samples: u64,
    pub seed: u64,
}

/// The cover of one CXp: how many points of its restricted subspace are
/// distinguishable, exactly and (optionally) by sampling.
///
/// `ratio * |restricted subspace| == count` exactly. When the problem's
/// epsilon is smaller than the CXp (covered points sit at l0 distance
/// exactly `|cxp|`), the measure is reported as zero with
/// `epsilon_clipped` set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverMeasure {
    pub cxp: FeatureSet,
    pub count: BigUint,
    pub ratio: BigRational,
    pub sampled: Option<SampledCover>,
    pub epsilon_clipped: bool,
}

impl CoverMeasure {
    pub fn to_json_value(&self) -> serde_json::Value {
        let mut obj = serde_json::json!({
            "cxp": self.cxp.members(),
            "count": self.count.to_string(),
            "ratio": format_ratio(&self.ratio),
        });
        if let Some(s) = &self.sampled {
            obj["sampled"] = serde_json::json!({
                "ratio": format_ratio(&s.ratio),
                "samples": s.samples,
                "seed": s.seed,
            });
        }
        if self.epsilon_clipped {
            obj["epsilon_clipped"] = serde_json::json!(true);
        }
        obj
    }
}

/// Render a weight list as the wire JSON array.
pub fn weights_to_json(measures: &[CoverMeasure]) -> String {
    let arr: Vec<serde_json::Value> = measures.iter().map(|m| m.to_json_value()).collect();
    serde_json::to_string_pretty(&arr).expect("weights serialization")
}

fn check_is_cxp(problem: &ExplanationProblem, set: &FeatureSet, caps: &Caps) -> Result<()> {
    set.check_in_range(problem.m())?;
    let ok = if let Some(_tree) = problem.model().as_tree() {
        let family = enumerate_cxps(problem, CxpMethod::DtPaths, caps)?;
        family.sets.contains(set)
    } else {
        is_wcxp(problem, set, caps)?
            && set
                .iter()
                .map(|t| is_wcxp(problem, &set.without(t), caps))
                .collect::<Result<Vec<bool>>>()?
                .iter()
                .all(|sub| !sub)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{set} is not a CXp of the problem")))
    }
}

/// Exact cover of one CXp. Verifies that `cxp` really is a CXp first.
pub fn cover_count(
    problem: &ExplanationProblem,
    cxp: &FeatureSet,
    method: CoverMethod,
    caps: &Caps,
) -> Result<CoverMeasure> {
    check_is_cxp(problem, cxp, caps)?;
    cover_count_unchecked(problem, cxp, method, caps)
}

fn cover_count_unchecked(
    problem: &ExplanationProblem,
    cxp: &FeatureSet,
    method: CoverMethod,
    caps: &Caps,
) -> Result<CoverMeasure> {
    let space = problem.model().space();
    let space_size = space.subspace_size(cxp.members());
    if problem.epsilon_effective() < cxp.len() {
        return Ok(CoverMeasure {
            cxp: cxp.clone(),
            count: BigUint::zero(),
            ratio: BigRational::zero(),
            sampled: None,
            epsilon_clipped: true,
        });
    }
    let count = match method {
        CoverMethod::Brute => {
            caps.check_space("cover counting", space_size)?;
            let mut n: u64 = 0;
            let mut err = None;
            for_each_in_subspace(space, problem.v(), cxp.members(), |x| {
                match problem.similar(x) {
                    Ok(true) => true,
                    Ok(false) => {
                        n += 1;
                        true
                    }
                    Err(e) => {
                        err = Some(e);
                        false
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            BigUint::from(n)
        }
        CoverMethod::DtRestrict => {
            let tree = problem
                .model()
                .as_tree()
                .ok_or(Error::MethodMismatch { method: "dt_restrict" })?;
            dt_restrict_count(problem, tree, cxp)
        }
    };
    let ratio = BigRational::new(
        BigInt::from(count.clone()),
        BigInt::from(space_size),
    );
    Ok(CoverMeasure {
        cxp: cxp.clone(),
        count,
        ratio,
        sampled: None,
        epsilon_clipped: false,
    })
}

/// Count the distinguishable points of the CXp-restricted subspace without
/// enumerating it: fix the features outside the CXp to the instance values,
/// prune the tree, and sum per-path products of the surviving literal sizes.
/// Paths partition the restricted space, so nothing is counted twice.
fn dt_restrict_count(
    problem: &ExplanationProblem,
    tree: &DecisionTree,
    cxp: &FeatureSet,
) -> BigUint {
    let mut allowed: Vec<BTreeSet<Value>> = tree
        .space()
        .domains()
        .iter()
        .map(|d| d.iter().copied().collect())
        .collect();
    let mut total = BigUint::zero();
    restrict_walk(problem, tree, cxp, tree.root_id(), &mut allowed, &mut total);
    total
}

fn restrict_walk(
    problem: &ExplanationProblem,
    tree: &DecisionTree,
    cxp: &FeatureSet,
    id: usize,
    allowed: &mut [BTreeSet<Value>],
    total: &mut BigUint,
) {
    match tree.node(id) {
        Node::Leaf(out) => {
            if !problem.similar_output(out) {
                let mut product = BigUint::one();
                for f in cxp.iter() {
                    product *= BigUint::from(allowed[f - 1].len());
                }
                *total += product;
            }
        }
        Node::Internal { feature, edges } => {
            let f = *feature;
            if cxp.contains(f) {
                for e in edges {
                    let saved = std::mem::take(&mut allowed[f - 1]);
                    allowed[f - 1] =
                        e.values.iter().copied().filter(|v| saved.contains(v)).collect();
                    if !allowed[f - 1].is_empty() {
                        restrict_walk(problem, tree, cxp, e.child, allowed, total);
                    }
                    allowed[f - 1] = saved;
                }
            } else {
                // feature fixed to its instance value: follow the one
                // consistent edge, if any
                let v = problem.v()[f - 1];
                if let Some(e) = edges.iter().find(|e| e.values.contains(&v)) {
                    restrict_walk(problem, tree, cxp, e.child, allowed, total);
                }
            }
        }
    }
}

/// The points a CXp covers, materialized (small problems only; used by the
/// disjointness checks).
pub fn covered_points(
    problem: &ExplanationProblem,
    cxp: &FeatureSet,
    caps: &Caps,
) -> Result<Vec<Vec<Value>>> {
    let space = problem.model().space();
    caps.check_space("cover enumeration", space.subspace_size(cxp.members()))?;
    let mut points = Vec::new();
    let mut err = None;
    for_each_in_subspace(space, problem.v(), cxp.members(), |x| match problem.similar(x) {
        Ok(true) => true,
        Ok(false) => {
            points.push(x.to_vec());
            true
        }
        Err(e) => {
            err = Some(e);
            false
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(points),
    }
}

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for the i-th CXp: the (i+1)-th output of a SplitMix64 stream
/// seeded with `seed`. Each CXp then gets an independent ChaCha12 generator,
/// so per-CXp sampling is reproducible regardless of evaluation order.
pub fn sub_seed(seed: u64, index: usize) -> u64 {
    let mut state = seed;
    let mut out = 0;
    for _ in 0..=index {
        out = splitmix64(&mut state);
    }
    out
}

fn sample_cover_ratio(
    problem: &ExplanationProblem,
    cxp: &FeatureSet,
    samples: u64,
    rng_seed: u64,
) -> Result<BigRational> {
    let space = problem.model().space();
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut point = problem.v().to_vec();
    let mut hits: u64 = 0;
    for _ in 0..samples {
        for f in cxp.iter() {
            let dom = space.domain(f);
            point[f - 1] = dom[rng.random_range(0..dom.len())];
        }
        if !problem.similar(&point)? {
            hits += 1;
        }
    }
    Ok(BigRational::new(BigInt::from(hits), BigInt::from(samples)))
}

/// One cover measure per CXp, in family order. `Sampled` mode draws uniform
/// points from each CXp-restricted subspace with a per-CXp seeded generator
/// and records the distinguishable fraction next to the exact measure.
pub fn compute_weights(
    problem: &ExplanationProblem,
    cxps: &XpFamily,
    mode: WeightMode,
    samples: u64,
    seed: u64,
    caps: &Caps,
) -> Result<Vec<CoverMeasure>> {
    if cxps.kind != XpKind::Cxp {
        return Err(Error::InvalidArgument("compute_weights expects a CXp family".into()));
    }
    if mode == WeightMode::Sampled && samples == 0 {
        return Err(Error::InvalidArgument("sampled mode needs at least one sample".into()));
    }
    // verify once against the problem's own family where that is cheap
    if problem.model().is_tree() {
        let family = enumerate_cxps(problem, CxpMethod::DtPaths, caps)?;
        for set in &cxps.sets {
            if !family.sets.contains(set) {
                return Err(Error::InvalidArgument(format!("{set} is not a CXp of the problem")));
            }
        }
    } else {
        for set in &cxps.sets {
            check_is_cxp(problem, set, caps)?;
        }
    }
    let method = if problem.model().is_tree() {
        CoverMethod::DtRestrict
    } else {
        CoverMethod::Brute
    };
    let mut measures = Vec::with_capacity(cxps.len());
    for (i, set) in cxps.sets.iter().enumerate() {
        let mut measure = cover_count_unchecked(problem, set, method, caps)?;
        if mode == WeightMode::Sampled && !measure.epsilon_clipped {
            let ratio = sample_cover_ratio(problem, set, samples, sub_seed(seed, i))?;
            measure.sampled = Some(SampledCover { ratio, samples, seed });
        }
        measures.push(measure);
    }
    Ok(measures)
}
