//! Feature-importance scores: exhaustive Shapley/Banzhaf engines over any
//! characteristic function, the closed forms for CXp-Forests, the
//! AXp-frequency baselines (FFA, WFFA, Responsibility), CXp-based
//! Deegan-Packel, exact SHAP under uniform product distributions, and the
//! property checker.
//!
//! All arithmetic is exact rational; decimals appear only at the output
//! boundary.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::forest::CXpForest;
use crate::model::{for_each_in_subspace, ExplanationProblem, Output, Task};
use crate::num::{decimal_f64, format_ratio, parse_ratio};
use crate::xp::{minimal_hitting_sets, relevant_features, FeatureSet, XpFamily, XpKind};
use crate::{Caps, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    AxfiShapley,
    AxfiBanzhaf,
    ShapleyExhaustive,
    BanzhafExhaustive,
    Ffa,
    Wffa,
    Responsibility,
    DeeganPackelCxp,
    ShapExact,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::AxfiShapley,
        Method::AxfiBanzhaf,
        Method::ShapleyExhaustive,
        Method::BanzhafExhaustive,
        Method::Ffa,
        Method::Wffa,
        Method::Responsibility,
        Method::DeeganPackelCxp,
        Method::ShapExact,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::AxfiShapley => "axfi_shapley",
            Method::AxfiBanzhaf => "axfi_banzhaf",
            Method::ShapleyExhaustive => "shapley_exhaustive",
            Method::BanzhafExhaustive => "banzhaf_exhaustive",
            Method::Ffa => "ffa",
            Method::Wffa => "wffa",
            Method::Responsibility => "responsibility",
            Method::DeeganPackelCxp => "deegan_packel_cxp",
            Method::ShapExact => "shap_exact",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown score method {s:?}")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-feature scores of one method, indexed by feature (entry 0 holds
/// feature 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub method: Method,
    pub values: Vec<BigRational>,
}

impl ScoreVector {
    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, feature: usize) -> &BigRational {
        &self.values[feature - 1]
    }

    pub fn decimals(&self) -> Vec<f64> {
        self.values.iter().map(decimal_f64).collect()
    }

    pub fn sum(&self) -> BigRational {
        self.values.iter().sum()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "method": self.method.as_str(),
            "values": self.values.iter().map(format_ratio).collect::<Vec<_>>(),
            "decimal": self.decimals(),
        })
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<ScoreVector> {
        let method: Method = v
            .get("method")
            .and_then(|m| m.as_str())
            .ok_or_else(|| Error::Schema("score vector needs a \"method\" string".into()))?
            .parse()?;
        let values = v
            .get("values")
            .and_then(|x| x.as_array())
            .ok_or_else(|| Error::Schema("score vector needs a \"values\" array".into()))?
            .iter()
            .map(|s| {
                s.as_str()
                    .ok_or_else(|| Error::Schema("score values must be \"p/q\" strings".into()))
                    .and_then(parse_ratio)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScoreVector { method, values })
    }
}

/// A set function over coalitions of `1..=m`, the engine input.
pub trait CharacteristicFn {
    fn feature_count(&self) -> usize;
    fn eval(&self, coalition: &FeatureSet) -> BigRational;
}

impl CharacteristicFn for CXpForest {
    fn feature_count(&self) -> usize {
        CXpForest::feature_count(self)
    }

    fn eval(&self, coalition: &FeatureSet) -> BigRational {
        self.chi(coalition).expect("coalition within the forest's feature range")
    }
}

/// An explicit table over all 2^m coalitions, indexed by bitmask
/// (bit k set means feature k+1 is in the coalition).
#[derive(Debug, Clone)]
pub struct TableCharFn {
    m: usize,
    values: Vec<BigRational>,
}

impl TableCharFn {
    pub fn new(m: usize, values: Vec<BigRational>) -> Result<Self> {
        if values.len() != 1usize << m {
            return Err(Error::InvalidArgument(format!(
                "characteristic table needs {} entries for m={m}, got {}",
                1usize << m,
                values.len()
            )));
        }
        Ok(TableCharFn { m, values })
    }
}

impl CharacteristicFn for TableCharFn {
    fn feature_count(&self) -> usize {
        self.m
    }

    fn eval(&self, coalition: &FeatureSet) -> BigRational {
        self.values[set_to_mask(coalition)].clone()
    }
}

fn set_to_mask(set: &FeatureSet) -> usize {
    set.iter().fold(0usize, |acc, f| acc | (1usize << (f - 1)))
}

fn mask_to_set(mask: usize) -> FeatureSet {
    FeatureSet::new((0..usize::BITS as usize).filter(|b| mask >> b & 1 == 1).map(|b| b + 1))
}

/// Tabulate 2^m coalition values and bring them to a common denominator so
/// the hot loops run on integers.
fn integer_table(cf: &dyn CharacteristicFn, m: usize) -> (Vec<BigInt>, BigInt) {
    let size = 1usize << m;
    let mut table = Vec::with_capacity(size);
    for mask in 0..size {
        table.push(cf.eval(&mask_to_set(mask)));
    }
    let mut den = BigInt::one();
    for v in &table {
        den = den.lcm(v.denom());
    }
    let nums = table.iter().map(|v| v.numer() * (&den / v.denom())).collect();
    (nums, den)
}

/// The Shapley value of every feature, by direct evaluation of the marginal
/// contribution over all coalitions per feature.
pub fn shapley_exhaustive(cf: &dyn CharacteristicFn, caps: &Caps) -> Result<ScoreVector> {
    let m = cf.feature_count();
    caps.check_exhaustive("exhaustive Shapley engine", m)?;
    let (nums, den) = integer_table(cf, m);
    let mut factorial = vec![BigInt::one(); m + 1];
    for k in 1..=m {
        factorial[k] = &factorial[k - 1] * BigInt::from(k);
    }
    let full_den = &factorial[m] * &den;
    let mut values = Vec::with_capacity(m);
    for i in 0..m {
        let bit = 1usize << i;
        let mut acc = BigInt::zero();
        for mask in 0..nums.len() {
            if mask & bit != 0 {
                continue;
            }
            let k = mask.count_ones() as usize;
            let delta = &nums[mask | bit] - &nums[mask];
            acc += delta * (&factorial[k] * &factorial[m - 1 - k]);
        }
        values.push(BigRational::new(acc, full_den.clone()));
    }
    Ok(ScoreVector { method: Method::ShapleyExhaustive, values })
}

/// The Banzhaf index of every feature: the uniform-coefficient analogue.
pub fn banzhaf_exhaustive(cf: &dyn CharacteristicFn, caps: &Caps) -> Result<ScoreVector> {
    let m = cf.feature_count();
    caps.check_exhaustive("exhaustive Banzhaf engine", m)?;
    let (nums, den) = integer_table(cf, m);
    let full_den = &den * (BigInt::one() << (m - 1));
    let mut values = Vec::with_capacity(m);
    for i in 0..m {
        let bit = 1usize << i;
        let mut acc = BigInt::zero();
        for mask in 0..nums.len() {
            if mask & bit == 0 {
                acc += &nums[mask | bit] - &nums[mask];
            }
        }
        values.push(BigRational::new(acc, full_den.clone()));
    }
    Ok(ScoreVector { method: Method::BanzhafExhaustive, values })
}

/// Closed-form Shapley-like score on a forest:
/// `(1/n) * Σ_{Y_i ∋ j} w_i / |Y_i|`; zero for features in no CXp.
pub fn axfi_shapley(forest: &CXpForest) -> ScoreVector {
    let n = BigRational::from_integer(BigInt::from(forest.n()));
    let mut values = vec![BigRational::zero(); forest.feature_count()];
    for (cxp, w) in forest.cxps().iter().zip(forest.weights()) {
        let share = w / BigRational::from_integer(BigInt::from(cxp.len()));
        for f in cxp.iter() {
            values[f - 1] += &share;
        }
    }
    for v in &mut values {
        *v /= &n;
    }
    ScoreVector { method: Method::AxfiShapley, values }
}

/// Closed-form Banzhaf-like score on a forest:
/// `(1/n) * Σ_{Y_i ∋ j} w_i / 2^(|Y_i|-1)`.
pub fn axfi_banzhaf(forest: &CXpForest) -> ScoreVector {
    let n = BigRational::from_integer(BigInt::from(forest.n()));
    let mut values = vec![BigRational::zero(); forest.feature_count()];
    for (cxp, w) in forest.cxps().iter().zip(forest.weights()) {
        let share = w / BigRational::from_integer(BigInt::one() << (cxp.len() - 1));
        for f in cxp.iter() {
            values[f - 1] += &share;
        }
    }
    for v in &mut values {
        *v /= &n;
    }
    ScoreVector { method: Method::AxfiBanzhaf, values }
}

/// The constant the Banzhaf-like scores sum to. Summing the per-feature
/// closed form over the relevant features collapses to a single pass over
/// the CXps: `γ = (1/n) * Σ_i w_i * |Y_i| / 2^(|Y_i|-1)`.
pub fn gamma(forest: &CXpForest) -> BigRational {
    let n = BigRational::from_integer(BigInt::from(forest.n()));
    let mut total = BigRational::zero();
    for (cxp, w) in forest.cxps().iter().zip(forest.weights()) {
        total += w * BigRational::new(BigInt::from(cxp.len()), BigInt::one() << (cxp.len() - 1));
    }
    total / n
}

fn expect_kind(family: &XpFamily, kind: XpKind, what: &str) -> Result<()> {
    if family.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} needs a non-empty family")));
    }
    if family.kind != kind {
        return Err(Error::InvalidArgument(format!("{what} expects a {kind:?} family")));
    }
    Ok(())
}

/// Formal feature attribution: the fraction of AXps containing each feature.
pub fn ffa(axps: &XpFamily, m: usize) -> Result<ScoreVector> {
    expect_kind(axps, XpKind::Axp, "ffa")?;
    let total = BigInt::from(axps.len());
    let values = (1..=m)
        .map(|f| BigRational::new(BigInt::from(axps.containing(f).len()), total.clone()))
        .collect();
    Ok(ScoreVector { method: Method::Ffa, values })
}

/// Weighted FFA: each AXp contributes `1/(|S| * |A|)` to its members.
pub fn wffa(axps: &XpFamily, m: usize) -> Result<ScoreVector> {
    expect_kind(axps, XpKind::Axp, "wffa")?;
    let total = BigInt::from(axps.len());
    let mut values = vec![BigRational::zero(); m];
    for s in &axps.sets {
        let share = BigRational::new(BigInt::one(), BigInt::from(s.len()) * &total);
        for f in s.iter() {
            values[f - 1] += &share;
        }
    }
    Ok(ScoreVector { method: Method::Wffa, values })
}

/// Responsibility: `max 1/|S|` over a feature's AXps, zero when absent.
pub fn responsibility(axps: &XpFamily, m: usize) -> Result<ScoreVector> {
    expect_kind(axps, XpKind::Axp, "responsibility")?;
    let values = (1..=m)
        .map(|f| {
            axps.sets
                .iter()
                .filter(|s| s.contains(f))
                .map(|s| BigRational::new(BigInt::one(), BigInt::from(s.len())))
                .max()
                .unwrap_or_else(BigRational::zero)
        })
        .collect();
    Ok(ScoreVector { method: Method::Responsibility, values })
}

/// CXp-based Deegan-Packel: `(1/n) * Σ_{Y_i ∋ j} 1/|Y_i|`. Coincides with
/// the unweighted Shapley-like closed form.
pub fn deegan_packel_cxp(cxps: &XpFamily, m: usize) -> Result<ScoreVector> {
    expect_kind(cxps, XpKind::Cxp, "deegan_packel_cxp")?;
    let n = BigInt::from(cxps.len());
    let mut values = vec![BigRational::zero(); m];
    for s in &cxps.sets {
        let share = BigRational::new(BigInt::one(), BigInt::from(s.len()) * &n);
        for f in s.iter() {
            values[f - 1] += &share;
        }
    }
    Ok(ScoreVector { method: Method::DeeganPackelCxp, values })
}

/// The SHAP expectation table: `χ_e(S) = E[τ | x_S = v_S]` under uniform
/// independent feature distributions, with classification outputs mapped to
/// the indicator of the predicted class.
pub fn shap_char_table(problem: &ExplanationProblem, caps: &Caps) -> Result<TableCharFn> {
    let m = problem.m();
    let space = problem.model().space();
    caps.check_exhaustive("exact SHAP", m)?;
    caps.check_space("exact SHAP expectation", space.size())?;
    let size = 1usize << m;
    let mut bucket_cnt = vec![0u64; size];
    let mut bucket_sum = vec![BigRational::zero(); size];
    let all: Vec<usize> = (1..=m).collect();
    let mut err = None;
    for_each_in_subspace(space, problem.v(), &all, |x| {
        let out = match problem.model().evaluate(x) {
            Ok(o) => o,
            Err(e) => {
                err = Some(e);
                return false;
            }
        };
        let tau = match (problem.model().task(), &out) {
            (Task::Classification, o) => {
                if o == problem.q() {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }
            (Task::Regression, Output::Real(r)) => r.clone(),
            (Task::Regression, Output::Class(_)) => unreachable!("task checked at construction"),
        };
        let agree = x
            .iter()
            .zip(problem.v())
            .enumerate()
            .fold(0usize, |acc, (k, (a, b))| if a == b { acc | (1 << k) } else { acc });
        bucket_cnt[agree] += 1;
        bucket_sum[agree] += tau;
        true
    });
    if let Some(e) = err {
        return Err(e);
    }
    // superset sums: entry S accumulates every point agreeing on S or more
    for b in 0..m {
        let bit = 1usize << b;
        for mask in 0..size {
            if mask & bit == 0 {
                bucket_cnt[mask] += bucket_cnt[mask | bit];
                let add = bucket_sum[mask | bit].clone();
                bucket_sum[mask] += add;
            }
        }
    }
    let values = bucket_sum
        .into_iter()
        .zip(&bucket_cnt)
        .map(|(sum, &cnt)| sum / BigRational::from_integer(BigInt::from(cnt)))
        .collect();
    TableCharFn::new(m, values)
}

/// Exact SHAP scores by exhaustive expectation.
pub fn shap_exact(problem: &ExplanationProblem, caps: &Caps) -> Result<ScoreVector> {
    let table = shap_char_table(problem, caps)?;
    let mut scores = shapley_exhaustive(&table, caps)?;
    scores.method = Method::ShapExact;
    Ok(scores)
}

/// One property evaluation. `guaranteed` marks the properties the scores
/// provably satisfy; AXp-minimal monotonicity is reported but not
/// guaranteed (it fails on some forests).
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub holds: bool,
    pub guaranteed: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_guaranteed_hold(&self) -> bool {
        self.checks.iter().filter(|c| c.guaranteed).all(|c| c.holds)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.checks
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "property": c.name,
                        "holds": c.holds,
                        "guaranteed": c.guaranteed,
                        "witness": c.witness,
                    })
                })
                .collect(),
        )
    }
}

/// Evaluate the score properties on a forest: efficiency of the
/// Shapley-like scores, γ-efficiency of the Banzhaf-like scores, null
/// player, symmetry, CXp-minimal monotonicity, consistency with relevancy
/// (when the problem is supplied), an additivity spot-check against the
/// unweighted twin forest, and the (non-guaranteed) AXp-minimal
/// monotonicity. Scores are evaluated through the closed forms.
pub fn check_properties(
    forest: &CXpForest,
    problem: Option<&ExplanationProblem>,
    caps: &Caps,
) -> Result<PropertyReport> {
    let m = forest.feature_count();
    let phi_s = axfi_shapley(forest);
    let phi_b = axfi_banzhaf(forest);
    let mut checks = Vec::new();

    // efficiency of the Shapley-like scores
    {
        let lhs = phi_s.sum();
        let rhs = forest.chi(&FeatureSet::full(m))? - forest.chi(&FeatureSet::empty())?;
        checks.push(PropertyCheck {
            name: "efficiency_shapley",
            holds: lhs == rhs,
            guaranteed: true,
            witness: (lhs != rhs)
                .then(|| format!("sum {} != chi(F)-chi(0) {}", format_ratio(&lhs), format_ratio(&rhs))),
        });
    }

    // γ-efficiency of the Banzhaf-like scores
    {
        let lhs = phi_b.sum();
        let rhs = gamma(forest);
        checks.push(PropertyCheck {
            name: "gamma_efficiency_banzhaf",
            holds: lhs == rhs,
            guaranteed: true,
            witness: (lhs != rhs)
                .then(|| format!("sum {} != gamma {}", format_ratio(&lhs), format_ratio(&rhs))),
        });
    }

    // null player: features in no CXp score zero
    {
        let relevant = forest.cxp_family().union();
        let offender = (1..=m).find(|&f| {
            !relevant.contains(f) && (!phi_s.value(f).is_zero() || !phi_b.value(f).is_zero())
        });
        checks.push(PropertyCheck {
            name: "null_player",
            holds: offender.is_none(),
            guaranteed: true,
            witness: offender.map(|f| format!("feature {f} is in no CXp but scores nonzero")),
        });
    }

    // symmetry: identical CXp membership means identical scores
    {
        let membership: Vec<Vec<usize>> =
            (1..=m).map(|f| forest.cxp_family().containing(f)).collect();
        let mut witness = None;
        'outer: for i in 1..=m {
            for j in (i + 1)..=m {
                if membership[i - 1] == membership[j - 1]
                    && (phi_s.value(i) != phi_s.value(j) || phi_b.value(i) != phi_b.value(j))
                {
                    witness = Some(format!("features {i} and {j} are symmetric but score differently"));
                    break 'outer;
                }
            }
        }
        checks.push(PropertyCheck {
            name: "symmetry",
            holds: witness.is_none(),
            guaranteed: true,
            witness,
        });
    }

    // CXp-minimal monotonicity
    {
        let membership: Vec<Vec<usize>> =
            (1..=m).map(|f| forest.cxp_family().containing(f)).collect();
        let witness = monotonicity_witness(&membership, &phi_s, &phi_b, "C");
        checks.push(PropertyCheck {
            name: "cxp_minimal_monotonicity",
            holds: witness.is_none(),
            guaranteed: true,
            witness,
        });
    }

    // consistency with relevancy, against the problem's own explanations
    if let Some(problem) = problem {
        let relevant = relevant_features(problem, caps)?;
        let offender = (1..=m).find(|&f| {
            let positive = phi_s.value(f).is_positive() && phi_b.value(f).is_positive();
            positive != relevant.contains(f)
        });
        checks.push(PropertyCheck {
            name: "consistency_with_relevancy",
            holds: offender.is_none(),
            guaranteed: true,
            witness: offender.map(|f| {
                format!(
                    "feature {f}: relevant={} but phi_S={}, phi_B={}",
                    relevant.contains(f),
                    format_ratio(phi_s.value(f)),
                    format_ratio(phi_b.value(f))
                )
            }),
        });
    }

    // additivity spot-check against the unweighted twin
    {
        let twin = forest.unweighted();
        let summed = forest.weight_sum(&twin)?;
        let ok_s = axfi_shapley(&summed)
            .values
            .iter()
            .zip(phi_s.values.iter().zip(&axfi_shapley(&twin).values))
            .all(|(s, (a, b))| s == &(a + b));
        let ok_b = axfi_banzhaf(&summed)
            .values
            .iter()
            .zip(phi_b.values.iter().zip(&axfi_banzhaf(&twin).values))
            .all(|(s, (a, b))| s == &(a + b));
        checks.push(PropertyCheck {
            name: "additivity",
            holds: ok_s && ok_b,
            guaranteed: true,
            witness: (!(ok_s && ok_b)).then(|| "weight-summed forest scores differ from the sum".into()),
        });
    }

    // AXp-minimal monotonicity: reported, not guaranteed
    {
        let axps = minimal_hitting_sets(forest.cxps())?;
        let family = XpFamily::new(XpKind::Axp, axps)?;
        let membership: Vec<Vec<usize>> = (1..=m).map(|f| family.containing(f)).collect();
        let witness = monotonicity_witness(&membership, &phi_s, &phi_b, "A");
        checks.push(PropertyCheck {
            name: "axp_minimal_monotonicity",
            holds: witness.is_none(),
            guaranteed: false,
            witness,
        });
    }

    Ok(PropertyReport { checks })
}

fn monotonicity_witness(
    membership: &[Vec<usize>],
    phi_s: &ScoreVector,
    phi_b: &ScoreVector,
    family_symbol: &str,
) -> Option<String> {
    let m = membership.len();
    let included =
        |a: &[usize], b: &[usize]| a.iter().all(|x| b.binary_search(x).is_ok());
    for i in 1..=m {
        for j in 1..=m {
            if i == j || !included(&membership[i - 1], &membership[j - 1]) {
                continue;
            }
            if phi_s.value(i) > phi_s.value(j) {
                return Some(format!(
                    "{family_symbol}_{i} ⊆ {family_symbol}_{j} but phi_S({i})={} > phi_S({j})={}",
                    format_ratio(phi_s.value(i)),
                    format_ratio(phi_s.value(j))
                ));
            }
            if phi_b.value(i) > phi_b.value(j) {
                return Some(format!(
                    "{family_symbol}_{i} ⊆ {family_symbol}_{j} but phi_B({i})={} > phi_B({j})={}",
                    format_ratio(phi_b.value(i)),
                    format_ratio(phi_b.value(j))
                ));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adv::WeightMode;
    use crate::forest::build_forest;
    use crate::synth;

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

    fn running_forest() -> CXpForest {
        let (_, problem) = synth::running_example();
        build_forest(&problem, WeightMode::Count, 0, 0, &caps()).unwrap()
    }

    /// A forest where AXp-minimal monotonicity breaks.
    fn counterexample_forest() -> CXpForest {
        CXpForest::new(3, vec![fs(&[1]), fs(&[2, 3])], vec![int(1), int(5)]).unwrap()
    }

    #[test]
    fn exhaustive_shapley_on_the_running_forest() {
        let forest = running_forest();
        let scores = shapley_exhaustive(&forest, &caps()).unwrap();
        assert_eq!(scores.values, vec![ratio(5, 6), ratio(1, 2), int(1)]);
    }

    #[test]
    fn exhaustive_banzhaf_on_the_running_forest() {
        let forest = running_forest();
        let scores = banzhaf_exhaustive(&forest, &caps()).unwrap();
        assert_eq!(scores.values, vec![ratio(5, 6), ratio(1, 2), int(1)]);
    }

    #[test]
    fn constant_characteristic_scores_zero() {
        let table = TableCharFn::new(3, vec![ratio(7, 3); 8]).unwrap();
        let s = shapley_exhaustive(&table, &caps()).unwrap();
        let b = banzhaf_exhaustive(&table, &caps()).unwrap();
        assert!(s.values.iter().all(|v| v.is_zero()));
        assert!(b.values.iter().all(|v| v.is_zero()));
    }

    #[test]
    fn single_pair_cxp_splits_evenly() {
        let forest = CXpForest::new(3, vec![fs(&[1, 2])], vec![int(1)]).unwrap();
        let s = shapley_exhaustive(&forest, &caps()).unwrap();
        assert_eq!(s.values, vec![ratio(1, 2), ratio(1, 2), int(0)]);
    }

    #[test]
    fn single_triple_cxp_banzhaf() {
        let forest = CXpForest::new(3, vec![fs(&[1, 2, 3])], vec![int(1)]).unwrap();
        let b = banzhaf_exhaustive(&forest, &caps()).unwrap();
        assert_eq!(b.values, vec![ratio(1, 4), ratio(1, 4), ratio(1, 4)]);
        let closed = axfi_banzhaf(&forest);
        assert_eq!(closed.values, b.values);
        assert_eq!(gamma(&forest), ratio(3, 4));
    }

    #[test]
    fn closed_forms_on_the_running_forest() {
        let forest = running_forest();
        let s = axfi_shapley(&forest);
        let b = axfi_banzhaf(&forest);
        assert_eq!(s.values, vec![ratio(5, 6), ratio(1, 2), int(1)]);
        assert_eq!(b.values, s.values); // all CXps have size < 3
        assert_eq!(gamma(&forest), ratio(7, 3));
    }

    #[test]
    fn counterexample_forest_scores() {
        let forest = counterexample_forest();
        let s = axfi_shapley(&forest);
        assert_eq!(s.values, vec![ratio(1, 2), ratio(5, 4), ratio(5, 4)]);
        // agrees with the exhaustive engine
        let e = shapley_exhaustive(&forest, &caps()).unwrap();
        assert_eq!(e.values, s.values);
    }

    #[test]
    fn unweighted_triangle_scores() {
        let forest = running_forest().unweighted();
        let s = axfi_shapley(&forest);
        assert_eq!(s.values, vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)]);
        let dp = deegan_packel_cxp(&forest.cxp_family(), 3).unwrap();
        assert_eq!(dp.values, s.values);
    }

    #[test]
    fn baseline_scores_on_the_triangle() {
        let axps = XpFamily::new(
            XpKind::Axp,
            vec![fs(&[1, 2]), fs(&[1, 3]), fs(&[2, 3])],
        )
        .unwrap();
        assert_eq!(ffa(&axps, 3).unwrap().values, vec![ratio(2, 3); 3]);
        assert_eq!(wffa(&axps, 3).unwrap().values, vec![ratio(1, 3); 3]);
        assert_eq!(responsibility(&axps, 3).unwrap().values, vec![ratio(1, 2); 3]);
    }

    #[test]
    fn baseline_scores_on_singletons_and_pairs() {
        let single = XpFamily::new(XpKind::Axp, vec![fs(&[1])]).unwrap();
        assert_eq!(ffa(&single, 3).unwrap().values, vec![int(1), int(0), int(0)]);
        assert_eq!(wffa(&single, 3).unwrap().values, vec![int(1), int(0), int(0)]);
        assert_eq!(responsibility(&single, 3).unwrap().values, vec![int(1), int(0), int(0)]);

        let pair = XpFamily::new(XpKind::Axp, vec![fs(&[1, 2]), fs(&[1, 3])]).unwrap();
        assert_eq!(ffa(&pair, 3).unwrap().values, vec![int(1), ratio(1, 2), ratio(1, 2)]);
        assert_eq!(
            responsibility(&pair, 3).unwrap().values,
            vec![ratio(1, 2), ratio(1, 2), ratio(1, 2)]
        );
        assert!(ffa(&XpFamily { kind: XpKind::Axp, sets: vec![] }, 3).is_err());
    }

    #[test]
    fn deegan_packel_examples() {
        let single = XpFamily::new(XpKind::Cxp, vec![fs(&[1])]).unwrap();
        assert_eq!(deegan_packel_cxp(&single, 3).unwrap().values, vec![int(1), int(0), int(0)]);
        let two = XpFamily::new(XpKind::Cxp, vec![fs(&[1]), fs(&[2, 3])]).unwrap();
        assert_eq!(
            deegan_packel_cxp(&two, 3).unwrap().values,
            vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)]
        );
    }

    #[test]
    fn shap_on_a_one_feature_model() {
        use crate::model::{FeatureSpace, Model, TabularModel};
        let space = FeatureSpace::binary(1).unwrap();
        let model =
            TabularModel::from_fn(space, Task::Classification, |x| Output::Class(x[0])).unwrap();
        let problem =
            ExplanationProblem::new(Model::Tabular(model), vec![1], BigRational::zero(), None)
                .unwrap();
        let scores = shap_exact(&problem, &caps()).unwrap();
        assert_eq!(scores.values, vec![ratio(1, 2)]);
    }

    #[test]
    fn shap_ignores_untouched_features() {
        use crate::model::{FeatureSpace, Model, TabularModel};
        let space = FeatureSpace::binary(2).unwrap();
        let model =
            TabularModel::from_fn(space, Task::Classification, |x| Output::Class(x[0])).unwrap();
        let problem =
            ExplanationProblem::new(Model::Tabular(model), vec![1, 0], BigRational::zero(), None)
                .unwrap();
        let scores = shap_exact(&problem, &caps()).unwrap();
        assert_eq!(scores.values[1], int(0));
    }

    #[test]
    fn shap_golden_values_on_the_running_example() {
        let (_, problem) = synth::running_example();
        let scores = shap_exact(&problem, &caps()).unwrap();
        assert_eq!(
            scores.values,
            vec![ratio(13, 108), ratio(7, 108), ratio(11, 54)]
        );
        // efficiency: scores sum to chi_e(F) - chi_e(empty) = 1 - 11/18
        assert_eq!(scores.sum(), ratio(7, 18));
    }

    /// Independent oracle for the golden values: conditional expectations by
    /// plain point filtering and the Shapley sum written out term by term.
    #[test]
    fn shap_oracle_recomputes_the_golden_values() {
        use crate::model::for_each_in_subspace;
        let (model, problem) = synth::running_example();
        let mut points: Vec<(Vec<i64>, bool)> = Vec::new();
        for_each_in_subspace(model.space(), problem.v(), &[1, 2, 3], |x| {
            points.push((x.to_vec(), model.evaluate(x).unwrap() == Output::Class(1)));
            true
        });
        assert_eq!(points.len(), 18);
        let chi_e = |coalition: &[usize]| -> BigRational {
            let consistent: Vec<&(Vec<i64>, bool)> = points
                .iter()
                .filter(|(x, _)| coalition.iter().all(|&f| x[f - 1] == problem.v()[f - 1]))
                .collect();
            let ones = consistent.iter().filter(|(_, one)| *one).count();
            ratio(ones as i64, consistent.len() as i64)
        };
        let subsets_without = |i: usize| -> Vec<Vec<usize>> {
            let rest: Vec<usize> = (1..=3).filter(|&f| f != i).collect();
            vec![
                vec![],
                vec![rest[0]],
                vec![rest[1]],
                vec![rest[0], rest[1]],
            ]
        };
        let factorial = [1i64, 1, 2, 6];
        let mut oracle = Vec::new();
        for i in 1..=3usize {
            let mut phi = BigRational::zero();
            for s in subsets_without(i) {
                let mut with_i: Vec<usize> = s.clone();
                with_i.push(i);
                let delta = chi_e(&with_i) - chi_e(&s);
                let coeff = ratio(factorial[s.len()] * factorial[2 - s.len()], factorial[3]);
                phi += delta * coeff;
            }
            oracle.push(phi);
        }
        assert_eq!(oracle, vec![ratio(13, 108), ratio(7, 108), ratio(11, 54)]);
        assert_eq!(shap_exact(&problem, &caps()).unwrap().values, oracle);
    }

    #[test]
    fn properties_hold_on_the_running_forest() {
        let (_, problem) = synth::running_example();
        let forest = running_forest();
        let report = check_properties(&forest, Some(&problem), &caps()).unwrap();
        assert!(report.all_guaranteed_hold(), "{:?}", report.checks);
        assert!(report.get("axp_minimal_monotonicity").unwrap().holds);
        assert!(report.get("consistency_with_relevancy").is_some());
    }

    #[test]
    fn axp_monotonicity_fails_on_the_counterexample() {
        let forest = counterexample_forest();
        let report = check_properties(&forest, None, &caps()).unwrap();
        assert!(report.all_guaranteed_hold(), "{:?}", report.checks);
        let axp = report.get("axp_minimal_monotonicity").unwrap();
        assert!(!axp.holds);
        assert!(axp.witness.is_some());
    }

    #[test]
    fn zero_weight_forest_scores_zero_and_stays_efficient() {
        let forest =
            CXpForest::new(3, vec![fs(&[1, 2]), fs(&[3])], vec![int(0), int(0)]).unwrap();
        let s = axfi_shapley(&forest);
        assert!(s.values.iter().all(|v| v.is_zero()));
        let report = check_properties(&forest, None, &caps()).unwrap();
        assert!(report.get("efficiency_shapley").unwrap().holds);
        assert!(report.get("gamma_efficiency_banzhaf").unwrap().holds);
    }

    #[test]
    fn score_vector_json_round_trips() {
        let forest = running_forest();
        let s = axfi_shapley(&forest);
        let v = s.to_json_value();
        assert_eq!(v["decimal"], serde_json::json!([0.833333, 0.5, 1.0]));
        let back = ScoreVector::from_json_value(&v).unwrap();
        assert_eq!(back, s);
    }
}
