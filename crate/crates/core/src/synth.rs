//! Fixture builders and synthetic model families used by tests, benchmarks,
//! and the `gen` subcommand.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::adv::{compute_weights, WeightMode};
use crate::model::{
    DecisionTree, Edge, ExplanationProblem, FeatureSpace, Model, Node, Output, TabularModel,
    Task, Value,
};
use crate::xp::{enumerate_cxps, CxpMethod, FeatureSet};
use crate::{Caps, Error, Result};

/// The chained-gadget family: `k` gadgets over `m = 3k` binary features,
/// with `2k` CXps and `2^k` AXps at the all-ones instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GadgetSpec {
    pub k: usize,
}

impl GadgetSpec {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("gadget count k must be at least 1".into()));
        }
        Ok(GadgetSpec { k })
    }

    pub fn m(&self) -> usize {
        3 * self.k
    }

    /// Expected CXp count.
    pub fn cxp_count(&self) -> usize {
        2 * self.k
    }

    /// Expected AXp count.
    pub fn axp_count(&self) -> BigUint {
        BigUint::from(1u32) << self.k
    }
}

/// Build the gadget decision tree and its all-ones explanation problem.
///
/// Gadget `i` tests `x_{2i-1}`, `x_{2i}` and `y_i` (feature `2k+i`): it
/// classifies 1 when `x_{2i-1}=0, x_{2i}=1` or `x_{2i-1}=1, x_{2i}=0,
/// y_i=1`, classifies 0 when `x_{2i-1}=0, x_{2i}=0` or `x_{2i-1}=1,
/// x_{2i}=0, y_i=0`, and chains into gadget `i+1` when both x-features are
/// 1; the last gadget chains into a 1-leaf.
pub fn gadget_dt(k: usize) -> Result<(Model, ExplanationProblem)> {
    let spec = GadgetSpec::new(k)?;
    let m = spec.m();
    let space = FeatureSpace::binary(m)?;
    let mut arena: Vec<Node> = Vec::new();
    let push = |node: Node, arena: &mut Vec<Node>| -> usize {
        arena.push(node);
        arena.len() - 1
    };
    // built back to front so each gadget can point at its successor
    let mut next_entry = push(Node::Leaf(Output::Class(1)), &mut arena);
    for i in (1..=k).rev() {
        let a = 2 * i - 1;
        let b = 2 * i;
        let y = 2 * k + i;
        let zero_ab = push(Node::Leaf(Output::Class(0)), &mut arena);
        let one_ab = push(Node::Leaf(Output::Class(1)), &mut arena);
        let left_b = push(
            Node::Internal {
                feature: b,
                edges: vec![
                    Edge { values: vec![0], child: zero_ab },
                    Edge { values: vec![1], child: one_ab },
                ],
            },
            &mut arena,
        );
        let zero_y = push(Node::Leaf(Output::Class(0)), &mut arena);
        let one_y = push(Node::Leaf(Output::Class(1)), &mut arena);
        let y_node = push(
            Node::Internal {
                feature: y,
                edges: vec![
                    Edge { values: vec![0], child: zero_y },
                    Edge { values: vec![1], child: one_y },
                ],
            },
            &mut arena,
        );
        let right_b = push(
            Node::Internal {
                feature: b,
                edges: vec![
                    Edge { values: vec![0], child: y_node },
                    Edge { values: vec![1], child: next_entry },
                ],
            },
            &mut arena,
        );
        next_entry = push(
            Node::Internal {
                feature: a,
                edges: vec![
                    Edge { values: vec![0], child: left_b },
                    Edge { values: vec![1], child: right_b },
                ],
            },
            &mut arena,
        );
    }
    let tree = DecisionTree::new(space, Task::Classification, next_entry, arena)?;
    let model = Model::Tree(tree);
    let problem = ExplanationProblem::new(model.clone(), vec![1; m], BigRational::zero(), None)?;
    Ok((model, problem))
}

/// The seven distinguishable points of the worked classifier example.
const RUNNING_AEXS: [[Value; 3]; 7] = [
    [1, 0, 2],
    [0, 1, 0],
    [0, 1, 1],
    [1, 1, 0],
    [1, 1, 1],
    [2, 0, 0],
    [2, 0, 1],
];

/// The worked classifier example: three features with domains
/// {0,1,2} x {0,1} x {0,1,2}, instance (2,1,2) classified 1, class 0 at
/// exactly the seven points each CXp covers. The builder re-derives the
/// CXp family {{1,2},{1,3},{2,3}} and the cover counts (1,4,2) and panics
/// if the construction ever drifts.
pub fn running_example() -> (Model, ExplanationProblem) {
    let space = FeatureSpace::new(vec![vec![0, 1, 2], vec![0, 1], vec![0, 1, 2]])
        .expect("running-example space");
    let table = TabularModel::from_fn(space, Task::Classification, |x| {
        let zero = RUNNING_AEXS.iter().any(|p| p == x);
        Output::Class(if zero { 0 } else { 1 })
    })
    .expect("running-example table");
    let model = Model::Tabular(table);
    let problem =
        ExplanationProblem::new(model.clone(), vec![2, 1, 2], BigRational::zero(), None)
            .expect("running-example instance");

    let caps = Caps::default();
    let cxps = enumerate_cxps(&problem, CxpMethod::Brute, &caps).expect("running-example cxps");
    let expected: Vec<FeatureSet> = vec![
        FeatureSet::new([1, 2]),
        FeatureSet::new([1, 3]),
        FeatureSet::new([2, 3]),
    ];
    assert_eq!(cxps.sets, expected, "running-example CXp family drifted");
    let weights =
        compute_weights(&problem, &cxps, WeightMode::Count, 0, 0, &caps).expect("weights");
    let counts: Vec<BigUint> = weights.iter().map(|w| w.count.clone()).collect();
    assert_eq!(
        counts,
        vec![BigUint::from(1u32), BigUint::from(4u32), BigUint::from(2u32)],
        "running-example cover counts drifted"
    );
    (model, problem)
}

/// A 5-feature classifier whose CXps are {1} and {2,3}; features 4 and 5
/// are irrelevant. Classifies 1 iff `x1 = 1` and (`x2 = 1` or `x3 = 1`).
pub fn two_route_example() -> (Model, ExplanationProblem) {
    let space = FeatureSpace::binary(5).expect("space");
    let table = TabularModel::from_fn(space, Task::Classification, |x| {
        Output::Class(i64::from(x[0] == 1 && (x[1] == 1 || x[2] == 1)))
    })
    .expect("table");
    let model = Model::Tabular(table);
    let problem =
        ExplanationProblem::new(model.clone(), vec![1, 1, 1, 0, 0], BigRational::zero(), None)
            .expect("instance");
    (model, problem)
}

/// A small regression tree with a repeated feature test and exact rational
/// leaves. At v = (1,0) with delta = 1/2 the CXps are {1} and {2}.
pub fn regression_example() -> (Model, ExplanationProblem) {
    let ratio = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let space = FeatureSpace::new(vec![vec![0, 1, 2], vec![0, 1]]).expect("space");
    let arena = vec![
        // 0: root, tests feature 1
        Node::Internal {
            feature: 1,
            edges: vec![
                Edge { values: vec![0], child: 1 },
                Edge { values: vec![1, 2], child: 4 },
            ],
        },
        // 1: f2 under f1=0
        Node::Internal {
            feature: 2,
            edges: vec![
                Edge { values: vec![0], child: 2 },
                Edge { values: vec![1], child: 3 },
            ],
        },
        Node::Leaf(Output::Real(ratio(0, 1))),
        Node::Leaf(Output::Real(ratio(3, 2))),
        // 4: f2 under f1 in {1,2}
        Node::Internal {
            feature: 2,
            edges: vec![
                Edge { values: vec![0], child: 5 },
                Edge { values: vec![1], child: 6 },
            ],
        },
        Node::Leaf(Output::Real(ratio(1, 1))),
        // 6: a repeated test of feature 1, now over the remaining {1,2}
        Node::Internal {
            feature: 1,
            edges: vec![
                Edge { values: vec![1], child: 7 },
                Edge { values: vec![2], child: 8 },
            ],
        },
        Node::Leaf(Output::Real(ratio(2, 1))),
        Node::Leaf(Output::Real(ratio(1, 2))),
    ];
    let tree = DecisionTree::new(space, Task::Regression, 0, arena).expect("tree");
    let model = Model::Tree(tree);
    let problem =
        ExplanationProblem::new(model.clone(), vec![1, 0], ratio(1, 2), None).expect("instance");
    (model, problem)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Tabular,
    Tree,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tabular" => Ok(ModelKind::Tabular),
            "dt" | "tree" => Ok(ModelKind::Tree),
            other => Err(Error::InvalidArgument(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Shape of a random problem. `domain_sizes` is either one entry applied to
/// every feature or one entry per feature; `leaf_bias` gives relative
/// weights for drawing class ids `0..leaf_bias.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSpec {
    pub m: usize,
    pub domain_sizes: Vec<usize>,
    pub model_kind: ModelKind,
    pub leaf_bias: Vec<u32>,
}

impl RandomSpec {
    pub fn new(m: usize, domain_sizes: Vec<usize>, model_kind: ModelKind, leaf_bias: Vec<u32>) -> Self {
        RandomSpec { m, domain_sizes, model_kind, leaf_bias }
    }

    fn resolved_sizes(&self) -> Result<Vec<usize>> {
        let sizes = if self.domain_sizes.len() == 1 {
            vec![self.domain_sizes[0]; self.m]
        } else if self.domain_sizes.len() == self.m {
            self.domain_sizes.clone()
        } else {
            return Err(Error::InvalidArgument(format!(
                "domain_sizes must have 1 or {} entries, got {}",
                self.m,
                self.domain_sizes.len()
            )));
        };
        if self.m == 0 {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidArgument("domain sizes must be positive".into()));
        }
        if !sizes.iter().any(|&s| s >= 2) {
            return Err(Error::InvalidArgument(
                "at least one domain needs two values, or every model is constant".into(),
            ));
        }
        if self.leaf_bias.len() < 2 || self.leaf_bias.iter().all(|&w| w == 0) {
            return Err(Error::InvalidArgument(
                "leaf_bias needs at least two classes with positive total weight".into(),
            ));
        }
        Ok(sizes)
    }
}

const RANDOM_RETRIES: usize = 64;

/// Deterministic random problem: same spec and seed, same model and
/// instance. Construction retries (continuing the seeded stream) until the
/// model validates and is non-constant, then draws a uniform instance.
pub fn random_problem(spec: &RandomSpec, seed: u64) -> Result<(Model, ExplanationProblem)> {
    let sizes = spec.resolved_sizes()?;
    let space_size: u128 = sizes.iter().map(|&s| s as u128).product();
    if spec.model_kind == ModelKind::Tabular && space_size > 10_000_000 {
        return Err(Error::CapExceeded {
            what: "random tabular model",
            needed: space_size,
            cap: 10_000_000,
        });
    }
    let domains: Vec<Vec<Value>> = sizes.iter().map(|&s| (0..s as Value).collect()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_RETRIES {
        let space = FeatureSpace::new(domains.clone())?;
        let model = match spec.model_kind {
            ModelKind::Tabular => {
                let table = TabularModel::from_fn(space, Task::Classification, |_| {
                    Output::Class(weighted_class(&mut rng, &spec.leaf_bias))
                })?;
                Model::Tabular(table)
            }
            ModelKind::Tree => {
                let mut arena = Vec::new();
                let mut current = domains.clone();
                let root =
                    grow_tree(&mut rng, &spec.leaf_bias, &mut current, 0, true, &mut arena);
                Model::Tree(DecisionTree::new(space, Task::Classification, root, arena)?)
            }
        };
        if !model.validate().is_empty() {
            continue;
        }
        let v: Vec<Value> = domains
            .iter()
            .map(|d| d[rng.random_range(0..d.len())])
            .collect();
        let problem = ExplanationProblem::new(model.clone(), v, BigRational::zero(), None)?;
        return Ok((model, problem));
    }
    Err(Error::InvalidArgument(format!(
        "could not draw a non-constant model for spec {spec:?} within {RANDOM_RETRIES} tries"
    )))
}

fn weighted_class(rng: &mut ChaCha12Rng, bias: &[u32]) -> i64 {
    let total: u32 = bias.iter().sum();
    let mut pick = rng.random_range(0..total);
    for (class, &w) in bias.iter().enumerate() {
        if pick < w {
            return class as i64;
        }
        pick -= w;
    }
    (bias.len() - 1) as i64
}

fn grow_tree(
    rng: &mut ChaCha12Rng,
    bias: &[u32],
    current: &mut Vec<Vec<Value>>,
    depth: usize,
    force_split: bool,
    arena: &mut Vec<Node>,
) -> usize {
    let testable: Vec<usize> =
        (1..=current.len()).filter(|&f| current[f - 1].len() >= 2).collect();
    let make_leaf = testable.is_empty()
        || depth >= current.len() + 2
        || (!force_split && rng.random_range(0..100) < 35);
    if make_leaf {
        arena.push(Node::Leaf(Output::Class(weighted_class(rng, bias))));
        return arena.len() - 1;
    }
    let feature = testable[rng.random_range(0..testable.len())];
    // random partition of the remaining domain into 2..=3 blocks
    let mut values = current[feature - 1].clone();
    for i in (1..values.len()).rev() {
        values.swap(i, rng.random_range(0..=i));
    }
    let max_blocks = values.len().min(3);
    let blocks = rng.random_range(2..=max_blocks.max(2));
    let mut partition: Vec<Vec<Value>> = vec![Vec::new(); blocks];
    for (i, v) in values.iter().enumerate() {
        partition[i % blocks].push(*v);
    }
    let mut edges = Vec::with_capacity(blocks);
    for mut block in partition {
        block.sort_unstable();
        let saved = std::mem::replace(&mut current[feature - 1], block.clone());
        let child = grow_tree(rng, bias, current, depth + 1, false, arena);
        current[feature - 1] = saved;
        edges.push(Edge { values: block, child });
    }
    arena.push(Node::Internal { feature, edges });
    arena.len() - 1
}

/// Relabel the classes of a classification model through a bijection given
/// as an explicit map covering every class the model uses.
pub fn relabel_outputs(model: &Model, map: &BTreeMap<i64, i64>) -> Result<Model> {
    if model.task() != Task::Classification {
        return Err(Error::InvalidArgument(
            "relabel_outputs applies to classification models".into(),
        ));
    }
    let classes = model.class_set()?;
    for c in &classes {
        if !map.contains_key(c) {
            return Err(Error::InvalidArgument(format!("bijection misses class {c}")));
        }
    }
    let mut images: Vec<i64> = classes.iter().map(|c| map[c]).collect();
    images.sort_unstable();
    if images.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("class map is not injective".into()));
    }
    model.map_outputs(&mut |o| match o {
        Output::Class(c) => Ok(Output::Class(map[c])),
        Output::Real(_) => Err(Error::InvalidArgument("unexpected regression output".into())),
    })
}
