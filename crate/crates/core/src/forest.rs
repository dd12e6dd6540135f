//! The CXp-Forest: a weighted family of CXps evaluated as a characteristic
//! function. `chi(S)` is the weight mass of the CXps that `S` intersects,
//! divided by the family size.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::adv::{compute_weights, WeightMode};
use crate::model::ExplanationProblem;
use crate::num::{format_ratio, parse_ratio};
use crate::xp::{enumerate_cxps, default_cxp_method, FeatureSet, XpFamily, XpKind};
use crate::{Caps, Error, Result};

/// A weighted CXp family over features `1..=m`, in canonical lexicographic
/// order so weight indices line up across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CXpForest {
    m: usize,
    cxps: Vec<FeatureSet>,
    weights: Vec<BigRational>,
}

impl CXpForest {
    pub fn new(m: usize, cxps: Vec<FeatureSet>, weights: Vec<BigRational>) -> Result<Self> {
        if cxps.is_empty() {
            return Err(Error::InvalidArgument("a forest needs at least one CXp".into()));
        }
        if cxps.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} CXps but {} weights",
                cxps.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| w.is_negative()) {
            return Err(Error::InvalidArgument(format!(
                "weights must be nonnegative, got {}",
                format_ratio(w)
            )));
        }
        if cxps.iter().any(|c| c.is_empty()) {
            return Err(Error::InvalidArgument("forest CXps must be non-empty".into()));
        }
        for c in &cxps {
            c.check_in_range(m)?;
        }
        let mut pairs: Vec<(FeatureSet, BigRational)> =
            cxps.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidArgument(format!("duplicate CXp {}", w[0].0)));
            }
        }
        let (cxps, weights): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        for (i, a) in cxps.iter().enumerate() {
            for b in cxps.iter().skip(i + 1) {
                if a.is_subset_of(b) || b.is_subset_of(a) {
                    return Err(Error::InvalidArgument(format!(
                        "CXps must form an antichain: {a} and {b} are comparable"
                    )));
                }
            }
        }
        Ok(CXpForest { m, cxps, weights })
    }

    pub fn n(&self) -> usize {
        self.cxps.len()
    }

    pub fn feature_count(&self) -> usize {
        self.m
    }

    pub fn cxps(&self) -> &[FeatureSet] {
        &self.cxps
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn cxp_family(&self) -> XpFamily {
        XpFamily { kind: XpKind::Cxp, sets: self.cxps.clone() }
    }

    /// The characteristic function: `(1/n) * Σ_i [S ∩ Y_i ≠ ∅] * w_i`.
    pub fn chi(&self, coalition: &FeatureSet) -> Result<BigRational> {
        coalition.check_in_range(self.m)?;
        let mut sum = BigRational::zero();
        for (cxp, w) in self.cxps.iter().zip(&self.weights) {
            if coalition.intersects(cxp) {
                sum += w;
            }
        }
        Ok(sum / BigRational::from_integer(BigInt::from(self.n())))
    }

    /// `Σ_i w_i`, so `chi(F) = total_weight() / n`.
    pub fn total_weight(&self) -> BigRational {
        self.weights.iter().sum()
    }

    /// Same CXps, every weight 1.
    pub fn unweighted(&self) -> CXpForest {
        CXpForest {
            m: self.m,
            cxps: self.cxps.clone(),
            weights: vec![BigRational::from_integer(1.into()); self.n()],
        }
    }

    /// Same CXps, weights added pairwise. Errors if the families differ.
    pub fn weight_sum(&self, other: &CXpForest) -> Result<CXpForest> {
        if self.m != other.m || self.cxps != other.cxps {
            return Err(Error::InvalidArgument(
                "weight_sum needs two forests over the same CXp family".into(),
            ));
        }
        Ok(CXpForest {
            m: self.m,
            cxps: self.cxps.clone(),
            weights: self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn to_json(&self) -> String {
        let wire = ForestJson {
            m: self.m,
            cxps: self.cxps.clone(),
            weights: self.weights.iter().map(format_ratio).collect(),
        };
        serde_json::to_string_pretty(&wire).expect("forest serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: ForestJson =
            serde_json::from_str(s).map_err(|e| Error::Schema(format!("forest json: {e}")))?;
        let weights = wire
            .weights
            .iter()
            .map(|w| parse_ratio(w))
            .collect::<Result<Vec<_>>>()?;
        CXpForest::new(wire.m, wire.cxps, weights)
    }

    /// Graphviz rendering of the forest as one chain-shaped binary tree per
    /// CXp: each internal node asks "is feature j in the coalition?", the
    /// yes-edge ends in a 1-leaf, and the last no-edge ends in a 0-leaf.
    pub fn to_dot(&self) -> String {
        use std::fmt::Write;
        let mut out = String::from("digraph cxp_forest {\n  rankdir=TB;\n");
        for (i, (cxp, w)) in self.cxps.iter().zip(&self.weights).enumerate() {
            writeln!(out, "  subgraph cluster_{i} {{").unwrap();
            writeln!(out, "    label=\"T{} (w={})\";", i + 1, format_ratio(w)).unwrap();
            let members: Vec<usize> = cxp.iter().collect();
            for (d, f) in members.iter().enumerate() {
                writeln!(out, "    t{i}_n{d} [shape=circle,label=\"{f}\"];").unwrap();
                writeln!(out, "    t{i}_y{d} [shape=box,label=\"1\"];").unwrap();
                writeln!(out, "    t{i}_n{d} -> t{i}_y{d} [label=\"in\"];").unwrap();
                if d + 1 < members.len() {
                    writeln!(out, "    t{i}_n{d} -> t{i}_n{} [label=\"out\"];", d + 1).unwrap();
                } else {
                    writeln!(out, "    t{i}_z [shape=box,label=\"0\"];").unwrap();
                    writeln!(out, "    t{i}_n{d} -> t{i}_z [label=\"out\"];").unwrap();
                }
            }
            writeln!(out, "  }}").unwrap();
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Serialize, Deserialize)]
struct ForestJson {
    m: usize,
    cxps: Vec<FeatureSet>,
    weights: Vec<String>,
}

/// Enumerate the CXps of a problem and attach weights in the requested mode.
pub fn build_forest(
    problem: &ExplanationProblem,
    mode: WeightMode,
    samples: u64,
    seed: u64,
    caps: &Caps,
) -> Result<CXpForest> {
    let cxps = enumerate_cxps(problem, default_cxp_method(problem), caps)?;
    if cxps.is_empty() {
        return Err(Error::InvalidArgument(
            "the model output is similar everywhere, so there are no CXps to build on".into(),
        ));
    }
    let weights: Vec<BigRational> = match mode {
        WeightMode::Unweighted => {
            vec![BigRational::from_integer(1.into()); cxps.len()]
        }
        _ => {
            let measures = compute_weights(problem, &cxps, mode, samples, seed, caps)?;
            measures
                .iter()
                .map(|m| match mode {
                    WeightMode::Count => BigRational::from_integer(BigInt::from(m.count.clone())),
                    WeightMode::Ratio => m.ratio.clone(),
                    WeightMode::Sampled => {
                        m.sampled.as_ref().map(|s| s.ratio.clone()).unwrap_or_else(BigRational::zero)
                    }
                    WeightMode::Unweighted => unreachable!(),
                })
                .collect()
        }
    };
    CXpForest::new(problem.m(), cxps.sets, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
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

    #[test]
    fn running_example_forest() {
        let (_, problem) = synth::running_example();
        let forest = build_forest(&problem, WeightMode::Count, 0, 0, &caps()).unwrap();
        assert_eq!(forest.n(), 3);
        assert_eq!(forest.cxps(), &[fs(&[1, 2]), fs(&[1, 3]), fs(&[2, 3])]);
        assert_eq!(forest.weights(), &[int(1), int(4), int(2)]);

        let unweighted = build_forest(&problem, WeightMode::Unweighted, 0, 0, &caps()).unwrap();
        assert_eq!(unweighted.weights(), &[int(1), int(1), int(1)]);
    }

    #[test]
    fn gadget_forest_counts() {
        let (_, problem) = synth::gadget_dt(2).unwrap();
        let forest = build_forest(&problem, WeightMode::Unweighted, 0, 0, &caps()).unwrap();
        assert_eq!(forest.n(), 4);
    }

    #[test]
    fn chi_matches_the_worked_table() {
        let (_, problem) = synth::running_example();
        let forest = build_forest(&problem, WeightMode::Count, 0, 0, &caps()).unwrap();
        let chi = |s: &[usize]| forest.chi(&fs(s)).unwrap();
        assert_eq!(chi(&[]), int(0));
        assert_eq!(chi(&[1]), ratio(5, 3));
        assert_eq!(chi(&[2]), int(1));
        assert_eq!(chi(&[3]), int(2));
        assert_eq!(chi(&[1, 2]), ratio(7, 3));
        assert_eq!(chi(&[1, 3]), ratio(7, 3));
        assert_eq!(chi(&[2, 3]), ratio(7, 3));
        assert_eq!(chi(&[1, 2, 3]), ratio(7, 3));
    }

    #[test]
    fn chi_of_the_full_set_is_the_mean_weight() {
        let forest = CXpForest::new(
            4,
            vec![fs(&[1, 2]), fs(&[3])],
            vec![ratio(1, 2), int(5)],
        )
        .unwrap();
        assert_eq!(forest.chi(&FeatureSet::empty()).unwrap(), int(0));
        assert_eq!(
            forest.chi(&FeatureSet::full(4)).unwrap(),
            forest.total_weight() / int(2)
        );
        assert!(forest.chi(&fs(&[9])).is_err());
    }

    #[test]
    fn constructor_rejects_bad_families() {
        assert!(CXpForest::new(3, vec![], vec![]).is_err());
        assert!(CXpForest::new(3, vec![fs(&[1])], vec![]).is_err());
        assert!(CXpForest::new(3, vec![fs(&[1])], vec![int(-1)]).is_err());
        assert!(CXpForest::new(3, vec![fs(&[1]), fs(&[1, 2])], vec![int(1), int(1)]).is_err());
        assert!(CXpForest::new(2, vec![fs(&[5])], vec![int(1)]).is_err());
    }

    #[test]
    fn forest_json_round_trips() {
        let forest =
            CXpForest::new(3, vec![fs(&[1]), fs(&[2, 3])], vec![int(1), int(5)]).unwrap();
        let back = CXpForest::from_json(&forest.to_json()).unwrap();
        assert_eq!(back, forest);
    }

    #[test]
    fn dot_export_mentions_every_cxp_tree() {
        let forest =
            CXpForest::new(3, vec![fs(&[1]), fs(&[2, 3])], vec![int(1), int(5)]).unwrap();
        let dot = forest.to_dot();
        assert!(dot.contains("cluster_0"));
        assert!(dot.contains("cluster_1"));
        assert!(dot.contains("w=5"));
    }
}
