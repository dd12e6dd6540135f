//! Abductive and contrastive explanations: WAXp/WCXp decision procedures,
//! exhaustive and tree-path enumeration, and minimal-hitting-set duality.

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::model::{for_each_in_subspace, DecisionTree, ExplanationProblem, Node, Value};
use crate::{Caps, Error, Result};

/// A set of 1-based feature indices in canonical (sorted, deduplicated) form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSet(Vec<usize>);

impl FeatureSet {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        FeatureSet(v)
    }

    pub fn empty() -> Self {
        FeatureSet(Vec::new())
    }

    /// The full feature set `{1..m}`.
    pub fn full(m: usize) -> Self {
        FeatureSet((1..=m).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.0.binary_search(&feature).is_ok()
    }

    pub fn is_subset_of(&self, other: &FeatureSet) -> bool {
        self.0.iter().all(|f| other.contains(*f))
    }

    pub fn intersects(&self, other: &FeatureSet) -> bool {
        // both sorted: linear merge
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        while let (Some(&x), Some(&y)) = (a.peek(), b.peek()) {
            match x.cmp(y) {
                std::cmp::Ordering::Equal => return true,
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
            }
        }
        false
    }

    pub fn union(&self, other: &FeatureSet) -> FeatureSet {
        FeatureSet::new(self.iter().chain(other.iter()))
    }

    pub fn without(&self, feature: usize) -> FeatureSet {
        FeatureSet(self.0.iter().copied().filter(|&f| f != feature).collect())
    }

    /// `{1..m} \ self`.
    pub fn complement(&self, m: usize) -> FeatureSet {
        FeatureSet((1..=m).filter(|f| !self.contains(*f)).collect())
    }

    pub fn check_in_range(&self, m: usize) -> Result<()> {
        for &f in &self.0 {
            if f == 0 || f > m {
                return Err(Error::FeatureOutOfRange { feature: f, m });
            }
        }
        Ok(())
    }
}

impl FromIterator<usize> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        FeatureSet::new(iter)
    }
}

impl std::fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{}}}", self.0.iter().join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XpKind {
    Axp,
    Cxp,
}

/// A family of explanations: an antichain of feature sets in canonical
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XpFamily {
    pub kind: XpKind,
    pub sets: Vec<FeatureSet>,
}

impl XpFamily {
    /// Sorts the sets and checks the antichain invariant.
    pub fn new(kind: XpKind, mut sets: Vec<FeatureSet>) -> Result<Self> {
        sets.sort();
        sets.dedup();
        for (i, a) in sets.iter().enumerate() {
            for b in sets.iter().skip(i + 1) {
                if a.is_subset_of(b) || b.is_subset_of(a) {
                    return Err(Error::InvalidArgument(format!(
                        "family is not an antichain: {a} and {b} are comparable"
                    )));
                }
            }
        }
        Ok(XpFamily { kind, sets })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// The sets containing a given feature.
    pub fn containing(&self, feature: usize) -> Vec<usize> {
        self.sets
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contains(feature))
            .map(|(i, _)| i)
            .collect()
    }

    /// Union of all member sets (the relevant features, for AXp/CXp families).
    pub fn union(&self) -> FeatureSet {
        FeatureSet::new(self.sets.iter().flat_map(|s| s.iter()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("xp family serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: XpFamily =
            serde_json::from_str(s).map_err(|e| Error::Schema(format!("xp family json: {e}")))?;
        XpFamily::new(raw.kind, raw.sets)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CxpMethod {
    Brute,
    DtPaths,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxpMethod {
    Brute,
    MhsDual,
}

/// Decide whether fixing the features in `set` to their instance values
/// forces a similar output everywhere, by scanning the free subspace.
pub fn is_waxp(problem: &ExplanationProblem, set: &FeatureSet, caps: &Caps) -> Result<bool> {
    let m = problem.m();
    set.check_in_range(m)?;
    let free = set.complement(m);
    exists_unsimilar_varying(problem, &free, caps).map(|found| !found)
}

/// Decide whether letting only the features in `set` vary can produce a
/// distinguishable output. Equals `!is_waxp(problem, F \ set)`.
pub fn is_wcxp(problem: &ExplanationProblem, set: &FeatureSet, caps: &Caps) -> Result<bool> {
    set.check_in_range(problem.m())?;
    exists_unsimilar_varying(problem, set, caps)
}

fn exists_unsimilar_varying(
    problem: &ExplanationProblem,
    vary: &FeatureSet,
    caps: &Caps,
) -> Result<bool> {
    let space = problem.model().space();
    caps.check_space("subspace scan", space.subspace_size(vary.members()))?;
    let mut found = false;
    let mut err = None;
    for_each_in_subspace(space, problem.v(), vary.members(), |x| {
        match problem.similar(x) {
            Ok(true) => true,
            Ok(false) => {
                found = true;
                false
            }
            Err(e) => {
                err = Some(e);
                false
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(found),
    }
}

/// Enumerate all CXps: the subset-minimal sets whose free variation can
/// flip the output.
pub fn enumerate_cxps(
    problem: &ExplanationProblem,
    method: CxpMethod,
    caps: &Caps,
) -> Result<XpFamily> {
    let sets = match method {
        CxpMethod::Brute => enumerate_minimal(problem, caps, is_wcxp)?,
        CxpMethod::DtPaths => {
            let tree = problem
                .model()
                .as_tree()
                .ok_or(Error::MethodMismatch { method: "dt_paths" })?;
            dt_path_cxps(problem, tree)
        }
    };
    XpFamily::new(XpKind::Cxp, sets)
}

/// Enumerate all AXps, either by the subset scan or as the minimal hitting
/// sets of the CXp family.
pub fn enumerate_axps(
    problem: &ExplanationProblem,
    method: AxpMethod,
    caps: &Caps,
) -> Result<XpFamily> {
    let sets = match method {
        AxpMethod::Brute => enumerate_minimal(problem, caps, is_waxp)?,
        AxpMethod::MhsDual => {
            let cxps = enumerate_cxps(problem, default_cxp_method(problem), caps)?;
            if cxps.is_empty() {
                // no point flips the output at all: the empty set is the
                // unique (weak) abductive explanation
                vec![FeatureSet::empty()]
            } else {
                minimal_hitting_sets(&cxps.sets)?
            }
        }
    };
    XpFamily::new(XpKind::Axp, sets)
}

/// The method a caller gets when they do not care: tree paths for trees,
/// the subset scan otherwise.
pub fn default_cxp_method(problem: &ExplanationProblem) -> CxpMethod {
    if problem.model().is_tree() {
        CxpMethod::DtPaths
    } else {
        CxpMethod::Brute
    }
}

/// Subset scan in (cardinality, lexicographic) order keeping an antichain of
/// minimal sets. Works for any monotone predicate (supersets of a hit stay
/// hits), which holds for both WAXp and WCXp.
fn enumerate_minimal(
    problem: &ExplanationProblem,
    caps: &Caps,
    pred: impl Fn(&ExplanationProblem, &FeatureSet, &Caps) -> Result<bool>,
) -> Result<Vec<FeatureSet>> {
    let m = problem.m();
    caps.check_subsets("subset enumeration", m)?;
    let mut minimal: Vec<FeatureSet> = Vec::new();
    for k in 0..=m {
        for combo in (1..=m).combinations(k) {
            let set = FeatureSet(combo);
            if minimal.iter().any(|kept| kept.is_subset_of(&set)) {
                continue;
            }
            if pred(problem, &set, caps)? {
                minimal.push(set);
            }
        }
    }
    Ok(minimal)
}

/// CXps of a decision tree, in time polynomial in the number of paths:
/// walk every root-to-leaf path, keep the distinguishable leaves, record
/// which tested features exclude the instance value, and take the
/// subset-minimal difference sets.
fn dt_path_cxps(problem: &ExplanationProblem, tree: &DecisionTree) -> Vec<FeatureSet> {
    let m = tree.space().m();
    let mut diff_sets: Vec<FeatureSet> = Vec::new();
    // literal[i] = running intersection of edge value sets for feature i+1,
    // None when untested on the current path
    let mut literal: Vec<Option<BTreeSet<Value>>> = vec![None; m];
    walk_paths(problem, tree, tree.root_id(), &mut literal, &mut diff_sets);
    minimal_antichain(diff_sets)
}

fn walk_paths(
    problem: &ExplanationProblem,
    tree: &DecisionTree,
    id: usize,
    literal: &mut Vec<Option<BTreeSet<Value>>>,
    diff_sets: &mut Vec<FeatureSet>,
) {
    match tree.node(id) {
        Node::Leaf(out) => {
            if !problem.similar_output(out) {
                let set = FeatureSet::new((1..=literal.len()).filter(|&f| {
                    literal[f - 1]
                        .as_ref()
                        .is_some_and(|vals| !vals.contains(&problem.v()[f - 1]))
                }));
                diff_sets.push(set);
            }
        }
        Node::Internal { feature, edges } => {
            let f = *feature;
            for e in edges {
                let saved = literal[f - 1].clone();
                let next: BTreeSet<Value> = match &saved {
                    Some(prev) => e.values.iter().copied().filter(|v| prev.contains(v)).collect(),
                    None => e.values.iter().copied().collect(),
                };
                if next.is_empty() {
                    // repeated tests with disjoint literals: dead path
                    continue;
                }
                literal[f - 1] = Some(next);
                walk_paths(problem, tree, e.child, literal, diff_sets);
                literal[f - 1] = saved;
            }
        }
    }
}

/// Keep only the subset-minimal sets, sorted canonically.
pub(crate) fn minimal_antichain(mut sets: Vec<FeatureSet>) -> Vec<FeatureSet> {
    sets.sort_by_key(|s| s.len());
    let mut kept: Vec<FeatureSet> = Vec::new();
    for s in sets {
        if !kept.iter().any(|k| k.is_subset_of(&s)) {
            kept.push(s);
        }
    }
    kept.sort();
    kept
}

/// All subset-minimal sets intersecting every member of `family`, by
/// sequential cross-multiplication with antichain reduction after each step.
pub fn minimal_hitting_sets(family: &[FeatureSet]) -> Result<Vec<FeatureSet>> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("hitting sets of an empty family".into()));
    }
    if family.iter().any(|s| s.is_empty()) {
        return Err(Error::InvalidArgument(
            "family contains an empty member, which no set can hit".into(),
        ));
    }
    // compress the universe into bit positions
    let universe: Vec<usize> = {
        let mut u: Vec<usize> = family.iter().flat_map(|s| s.iter()).collect();
        u.sort_unstable();
        u.dedup();
        u
    };
    if universe.len() > 128 {
        return Err(Error::CapExceeded {
            what: "hitting-set universe",
            needed: universe.len() as u128,
            cap: 128,
        });
    }
    let bit_of = |f: usize| universe.binary_search(&f).unwrap();
    let masks: Vec<u128> = family
        .iter()
        .map(|s| s.iter().fold(0u128, |acc, f| acc | (1u128 << bit_of(f))))
        .collect();

    let mut transversals: Vec<u128> = vec![0];
    for &s in &masks {
        let mut next: Vec<u128> = Vec::with_capacity(transversals.len());
        for &t in &transversals {
            if t & s != 0 {
                next.push(t);
            } else {
                let mut rest = s;
                while rest != 0 {
                    let bit = rest & rest.wrapping_neg();
                    next.push(t | bit);
                    rest ^= bit;
                }
            }
        }
        transversals = minimize_masks(next);
    }

    let mut out: Vec<FeatureSet> = transversals
        .into_iter()
        .map(|t| {
            FeatureSet::new(
                universe.iter().enumerate().filter(|(b, _)| t >> *b & 1 == 1).map(|(_, &f)| f),
            )
        })
        .collect();
    out.sort();
    Ok(out)
}

fn submask(a: u128, b: u128) -> bool {
    a & b == a
}

fn minimize_masks(mut masks: Vec<u128>) -> Vec<u128> {
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks.dedup();
    let mut kept: Vec<u128> = Vec::new();
    for m in masks {
        if !kept.iter().any(|&k| submask(k, m)) {
            kept.push(m);
        }
    }
    kept
}

/// The relevant features: the union of all CXps (equivalently of all AXps).
pub fn relevant_features(problem: &ExplanationProblem, caps: &Caps) -> Result<FeatureSet> {
    let cxps = enumerate_cxps(problem, default_cxp_method(problem), caps)?;
    Ok(cxps.union())
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

    #[test]
    fn waxp_on_the_running_example() {
        let (_, problem) = synth::running_example();
        assert!(is_waxp(&problem, &fs(&[1, 2, 3]), &caps()).unwrap());
        assert!(is_waxp(&problem, &fs(&[1, 2]), &caps()).unwrap());
        assert!(!is_waxp(&problem, &fs(&[1]), &caps()).unwrap());
    }

    #[test]
    fn wcxp_on_the_running_example() {
        let (_, problem) = synth::running_example();
        assert!(is_wcxp(&problem, &fs(&[1, 2]), &caps()).unwrap());
        assert!(!is_wcxp(&problem, &FeatureSet::empty(), &caps()).unwrap());
        assert!(!is_wcxp(&problem, &fs(&[1]), &caps()).unwrap());
    }

    #[test]
    fn running_example_families() {
        let (_, problem) = synth::running_example();
        let cxps = enumerate_cxps(&problem, CxpMethod::Brute, &caps()).unwrap();
        assert_eq!(cxps.sets, vec![fs(&[1, 2]), fs(&[1, 3]), fs(&[2, 3])]);
        let axps = enumerate_axps(&problem, AxpMethod::Brute, &caps()).unwrap();
        assert_eq!(axps.sets, vec![fs(&[1, 2]), fs(&[1, 3]), fs(&[2, 3])]);
        let dual = enumerate_axps(&problem, AxpMethod::MhsDual, &caps()).unwrap();
        assert_eq!(dual, axps);
    }

    #[test]
    fn gadget_families() {
        let (_, problem) = synth::gadget_dt(2).unwrap();
        let cxps = enumerate_cxps(&problem, CxpMethod::DtPaths, &caps()).unwrap();
        assert_eq!(
            cxps.sets,
            vec![fs(&[1, 2]), fs(&[2, 5]), fs(&[3, 4]), fs(&[4, 6])]
        );
        let axps = enumerate_axps(&problem, AxpMethod::MhsDual, &caps()).unwrap();
        assert_eq!(axps.len(), 4);
        assert_eq!(
            axps.sets,
            vec![fs(&[1, 3, 5, 6]), fs(&[1, 4, 5]), fs(&[2, 3, 6]), fs(&[2, 4])]
        );
        // matches the subset scan
        let brute = enumerate_axps(&problem, AxpMethod::Brute, &caps()).unwrap();
        assert_eq!(brute, axps);
    }

    #[test]
    fn single_feature_dependence() {
        use crate::model::{FeatureSpace, Model, Output, TabularModel, Task};
        let space = FeatureSpace::binary(3).unwrap();
        let model = TabularModel::from_fn(space, Task::Classification, |x| Output::Class(x[0]))
            .unwrap();
        let problem = ExplanationProblem::new(
            Model::Tabular(model),
            vec![1, 0, 0],
            num_rational::BigRational::from_integer(0.into()),
            None,
        )
        .unwrap();
        let cxps = enumerate_cxps(&problem, CxpMethod::Brute, &caps()).unwrap();
        assert_eq!(cxps.sets, vec![fs(&[1])]);
        assert_eq!(relevant_features(&problem, &caps()).unwrap(), fs(&[1]));
    }

    #[test]
    fn hitting_sets_match_the_quoted_cases() {
        let triangle = vec![fs(&[1, 2]), fs(&[1, 3]), fs(&[2, 3])];
        assert_eq!(minimal_hitting_sets(&triangle).unwrap(), triangle);
        assert_eq!(minimal_hitting_sets(&[fs(&[1])]).unwrap(), vec![fs(&[1])]);
        assert_eq!(
            minimal_hitting_sets(&[fs(&[1]), fs(&[2, 3])]).unwrap(),
            vec![fs(&[1, 2]), fs(&[1, 3])]
        );
        assert!(minimal_hitting_sets(&[]).is_err());
        assert!(minimal_hitting_sets(&[fs(&[1]), FeatureSet::empty()]).is_err());
    }

    #[test]
    fn relevant_features_of_the_running_example() {
        let (_, problem) = synth::running_example();
        assert_eq!(relevant_features(&problem, &caps()).unwrap(), fs(&[1, 2, 3]));
    }

    #[test]
    fn five_feature_problem_with_irrelevant_tail() {
        let (_, problem) = synth::two_route_example();
        let cxps = enumerate_cxps(&problem, CxpMethod::Brute, &caps()).unwrap();
        assert_eq!(cxps.sets, vec![fs(&[1]), fs(&[2, 3])]);
        assert_eq!(relevant_features(&problem, &caps()).unwrap(), fs(&[1, 2, 3]));
        let axps = enumerate_axps(&problem, AxpMethod::MhsDual, &caps()).unwrap();
        assert_eq!(axps.sets, vec![fs(&[1, 2]), fs(&[1, 3])]);
    }

    #[test]
    fn brute_enumeration_respects_the_subset_cap() {
        let (_, problem) = synth::gadget_dt(8).unwrap(); // m = 24 > 22
        let err = enumerate_cxps(&problem, CxpMethod::Brute, &caps());
        assert!(matches!(err, Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn dt_paths_rejects_tabular_models() {
        let (_, problem) = synth::running_example();
        let err = enumerate_cxps(&problem, CxpMethod::DtPaths, &caps());
        assert!(matches!(err, Err(Error::MethodMismatch { .. })));
    }

    #[test]
    fn family_json_round_trips() {
        let family = XpFamily::new(XpKind::Cxp, vec![fs(&[1, 2]), fs(&[3])]).unwrap();
        let json = family.to_json();
        assert_eq!(XpFamily::from_json(&json).unwrap(), family);
        // non-antichain input is rejected
        let bad = r#"{"kind":"cxp","sets":[[1],[1,2]]}"#;
        assert!(XpFamily::from_json(bad).is_err());
    }
}
