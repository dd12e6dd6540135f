//! Feature spaces, tabular and decision-tree models, target instances, and
//! the similarity predicate.
//!
//! Feature indices are 1-based everywhere (sets, tree node labels, JSON);
//! points are plain `Vec<i64>` with position `k` holding feature `k+1`.
//! Outputs are exact: integer class ids for classification, rationals for
//! regression, so similarity thresholds compare exactly.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::num::{format_ratio, parse_ratio};
use crate::{Error, Result};

pub type Value = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

/// A model output: a class id or an exact regression value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Output {
    Class(i64),
    Real(BigRational),
}

impl Output {
    pub fn matches(&self, task: Task) -> bool {
        matches!(
            (self, task),
            (Output::Class(_), Task::Classification) | (Output::Real(_), Task::Regression)
        )
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Output::Class(c) => write!(f, "{c}"),
            Output::Real(r) => write!(f, "{}", format_ratio(r)),
        }
    }
}

/// The product space `D_1 × … × D_m` of finite per-feature domains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpace {
    domains: Vec<Vec<Value>>,
}

impl FeatureSpace {
    pub fn new(domains: Vec<Vec<Value>>) -> Result<Self> {
        if domains.is_empty() {
            return Err(Error::InvalidModel("feature space needs at least one feature".into()));
        }
        for (k, d) in domains.iter().enumerate() {
            if d.is_empty() {
                return Err(Error::InvalidModel(format!("domain of feature {} is empty", k + 1)));
            }
            let mut seen = BTreeSet::new();
            for &v in d {
                if !seen.insert(v) {
                    return Err(Error::InvalidModel(format!(
                        "domain of feature {} repeats value {v}",
                        k + 1
                    )));
                }
            }
        }
        Ok(FeatureSpace { domains })
    }

    /// Uniform binary domains, the common synthetic case.
    pub fn binary(m: usize) -> Result<Self> {
        FeatureSpace::new(vec![vec![0, 1]; m])
    }

    pub fn m(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[Vec<Value>] {
        &self.domains
    }

    /// Domain of a 1-based feature index.
    pub fn domain(&self, feature: usize) -> &[Value] {
        &self.domains[feature - 1]
    }

    pub fn check_feature(&self, feature: usize) -> Result<()> {
        if feature == 0 || feature > self.m() {
            return Err(Error::FeatureOutOfRange { feature, m: self.m() });
        }
        Ok(())
    }

    /// Errors unless `point` has the right arity and every coordinate lies
    /// in its feature's domain.
    pub fn check_point(&self, point: &[Value]) -> Result<()> {
        if point.len() != self.m() {
            return Err(Error::ArityMismatch { expected: self.m(), got: point.len() });
        }
        for (k, &x) in point.iter().enumerate() {
            if !self.domains[k].contains(&x) {
                return Err(Error::OutsideDomain { feature: k + 1, value: x });
            }
        }
        Ok(())
    }

    /// `|𝔽|` as an exact count.
    pub fn size(&self) -> u128 {
        self.domains.iter().map(|d| d.len() as u128).product()
    }

    /// Size of the subspace spanned by the given (1-based) features.
    pub fn subspace_size(&self, vary: &[usize]) -> u128 {
        vary.iter().map(|&i| self.domain(i).len() as u128).product()
    }

    /// Mixed-radix rank of a point, feature 1 most significant.
    pub fn index_of(&self, point: &[Value]) -> Result<usize> {
        self.check_point(point)?;
        let mut idx = 0usize;
        for (k, &x) in point.iter().enumerate() {
            let pos = self.domains[k].iter().position(|&v| v == x).unwrap();
            idx = idx * self.domains[k].len() + pos;
        }
        Ok(idx)
    }
}

/// Visit every point of the subspace where the (1-based) features in `vary`
/// range over their domains and all other coordinates stay as in `base`.
/// Stops early when the visitor returns `false`. Iteration order is the
/// odometer order with the last varied feature fastest.
pub fn for_each_in_subspace(
    space: &FeatureSpace,
    base: &[Value],
    vary: &[usize],
    mut visit: impl FnMut(&[Value]) -> bool,
) {
    let mut point = base.to_vec();
    let mut cursor = vec![0usize; vary.len()];
    for (slot, &f) in vary.iter().enumerate() {
        point[f - 1] = space.domain(f)[0];
        cursor[slot] = 0;
    }
    loop {
        if !visit(&point) {
            return;
        }
        // advance the odometer
        let mut slot = vary.len();
        loop {
            if slot == 0 {
                return;
            }
            slot -= 1;
            let f = vary[slot];
            cursor[slot] += 1;
            if cursor[slot] < space.domain(f).len() {
                point[f - 1] = space.domain(f)[cursor[slot]];
                break;
            }
            cursor[slot] = 0;
            point[f - 1] = space.domain(f)[0];
        }
    }
}

/// A model given as an explicit output table over the whole feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularModel {
    space: FeatureSpace,
    task: Task,
    outputs: Vec<Option<Output>>,
}

impl TabularModel {
    /// Build from explicit rows. Rows may leave gaps (reported by
    /// [`Model::validate`]); duplicate or out-of-domain rows are rejected.
    pub fn new(space: FeatureSpace, task: Task, rows: Vec<(Vec<Value>, Output)>) -> Result<Self> {
        let size = space.size();
        if size > (u32::MAX as u128) {
            return Err(Error::InvalidModel(format!(
                "feature space has {size} points, too large to tabulate"
            )));
        }
        let mut outputs = vec![None; size as usize];
        for (x, y) in rows {
            if !y.matches(task) {
                return Err(Error::InvalidModel(format!(
                    "row output {y} does not match task"
                )));
            }
            let idx = space.index_of(&x)?;
            if outputs[idx].is_some() {
                return Err(Error::InvalidModel(format!("duplicate row for point {x:?}")));
            }
            outputs[idx] = Some(y);
        }
        Ok(TabularModel { space, task, outputs })
    }

    /// Build a total table by evaluating `f` on every point.
    pub fn from_fn(
        space: FeatureSpace,
        task: Task,
        mut f: impl FnMut(&[Value]) -> Output,
    ) -> Result<Self> {
        let size = space.size();
        if size > (u32::MAX as u128) {
            return Err(Error::InvalidModel(format!(
                "feature space has {size} points, too large to tabulate"
            )));
        }
        let mut rows = Vec::with_capacity(size as usize);
        let vary: Vec<usize> = (1..=space.m()).collect();
        let base: Vec<Value> = space.domains().iter().map(|d| d[0]).collect();
        for_each_in_subspace(&space, &base, &vary, |x| {
            rows.push((x.to_vec(), f(x)));
            true
        });
        TabularModel::new(space, task, rows)
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn evaluate(&self, point: &[Value]) -> Result<Output> {
        let idx = self.space.index_of(point)?;
        self.outputs[idx]
            .clone()
            .ok_or_else(|| Error::InvalidModel(format!("table has no entry for point {point:?}")))
    }

    fn missing_count(&self) -> usize {
        self.outputs.iter().filter(|o| o.is_none()).count()
    }

    pub(crate) fn map_outputs(&self, f: &mut impl FnMut(&Output) -> Result<Output>) -> Result<Self> {
        let mut outputs = Vec::with_capacity(self.outputs.len());
        for o in &self.outputs {
            outputs.push(match o {
                Some(out) => Some(f(out)?),
                None => None,
            });
        }
        Ok(TabularModel { space: self.space.clone(), task: self.task, outputs })
    }
}

/// Arena node of a decision tree. Edges carry explicit value sets; a range
/// literal must be expanded into its values before construction.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Internal { feature: usize, edges: Vec<Edge> },
    Leaf(Output),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub values: Vec<Value>,
    pub child: usize,
}

/// A decision tree over a finite feature space. Repeated tests of one
/// feature along a path are allowed; the effective literal is the
/// intersection of the literals seen on the path.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    space: FeatureSpace,
    task: Task,
    root: usize,
    arena: Vec<Node>,
}

impl DecisionTree {
    pub fn new(space: FeatureSpace, task: Task, root: usize, arena: Vec<Node>) -> Result<Self> {
        if arena.is_empty() || root >= arena.len() {
            return Err(Error::InvalidModel("tree root is not a valid node id".into()));
        }
        for (id, node) in arena.iter().enumerate() {
            match node {
                Node::Internal { feature, edges } => {
                    space.check_feature(*feature)?;
                    if edges.is_empty() {
                        return Err(Error::InvalidModel(format!("node {id} has no edges")));
                    }
                    for e in edges {
                        if e.child >= arena.len() {
                            return Err(Error::InvalidModel(format!(
                                "node {id} references missing child {}",
                                e.child
                            )));
                        }
                    }
                }
                Node::Leaf(out) => {
                    if !out.matches(task) {
                        return Err(Error::InvalidModel(format!(
                            "leaf {id} output {out} does not match task"
                        )));
                    }
                }
            }
        }
        Ok(DecisionTree { space, task, root, arena })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn root_id(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.arena[id]
    }

    pub fn arena(&self) -> &[Node] {
        &self.arena
    }

    pub fn evaluate(&self, point: &[Value]) -> Result<Output> {
        self.space.check_point(point)?;
        let mut id = self.root;
        let mut hops = 0usize;
        loop {
            match &self.arena[id] {
                Node::Leaf(out) => return Ok(out.clone()),
                Node::Internal { feature, edges } => {
                    let x = point[*feature - 1];
                    let edge = edges.iter().find(|e| e.values.contains(&x)).ok_or_else(|| {
                        Error::InvalidModel(format!(
                            "node {id} has no edge for feature {feature} value {x}"
                        ))
                    })?;
                    id = edge.child;
                }
            }
            hops += 1;
            if hops > self.arena.len() {
                return Err(Error::InvalidModel("tree walk does not terminate (cycle)".into()));
            }
        }
    }

    pub(crate) fn map_outputs(&self, f: &mut impl FnMut(&Output) -> Result<Output>) -> Result<Self> {
        let mut arena = Vec::with_capacity(self.arena.len());
        for node in &self.arena {
            arena.push(match node {
                Node::Leaf(out) => Node::Leaf(f(out)?),
                other => other.clone(),
            });
        }
        Ok(DecisionTree { space: self.space.clone(), task: self.task, root: self.root, arena })
    }
}

/// Any supported model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Tabular(TabularModel),
    Tree(DecisionTree),
}

impl Model {
    pub fn space(&self) -> &FeatureSpace {
        match self {
            Model::Tabular(t) => t.space(),
            Model::Tree(t) => t.space(),
        }
    }

    pub fn task(&self) -> Task {
        match self {
            Model::Tabular(t) => t.task(),
            Model::Tree(t) => t.task(),
        }
    }

    pub fn m(&self) -> usize {
        self.space().m()
    }

    pub fn is_tree(&self) -> bool {
        matches!(self, Model::Tree(_))
    }

    pub fn as_tree(&self) -> Option<&DecisionTree> {
        match self {
            Model::Tree(t) => Some(t),
            Model::Tabular(_) => None,
        }
    }

    pub fn evaluate(&self, point: &[Value]) -> Result<Output> {
        match self {
            Model::Tabular(t) => t.evaluate(point),
            Model::Tree(t) => t.evaluate(point),
        }
    }

    /// The set of class ids appearing in a classification model.
    pub fn class_set(&self) -> Result<BTreeSet<i64>> {
        if self.task() != Task::Classification {
            return Err(Error::InvalidArgument("class_set needs a classification model".into()));
        }
        let mut classes = BTreeSet::new();
        self.for_each_output(&mut |o| {
            if let Output::Class(c) = o {
                classes.insert(*c);
            }
        });
        Ok(classes)
    }

    pub(crate) fn for_each_output(&self, f: &mut impl FnMut(&Output)) {
        match self {
            Model::Tabular(t) => {
                for o in t.outputs.iter().flatten() {
                    f(o);
                }
            }
            Model::Tree(t) => {
                for node in &t.arena {
                    if let Node::Leaf(out) = node {
                        f(out);
                    }
                }
            }
        }
    }

    pub(crate) fn map_outputs(&self, f: &mut impl FnMut(&Output) -> Result<Output>) -> Result<Model> {
        Ok(match self {
            Model::Tabular(t) => Model::Tabular(t.map_outputs(f)?),
            Model::Tree(t) => Model::Tree(t.map_outputs(f)?),
        })
    }

    /// Check every type invariant and return the violations found.
    pub fn validate(&self) -> Diagnostics {
        let mut d = Diagnostics::default();
        match self {
            Model::Tabular(t) => validate_tabular(t, &mut d),
            Model::Tree(t) => validate_tree(t, &mut d),
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectKind {
    NonTotalTable,
    ConstantModel,
    OverlappingLiterals,
    IncompleteLiterals,
    EmptyEdgeLiteral,
    ValueOutsideDomain,
    NodeRevisited,
    UnreachableNode,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub kind: DefectKind,
    pub detail: String,
}

/// Output of [`Model::validate`]: empty iff the model satisfies every
/// invariant (total non-constant table; tree paths partition the space).
#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub violations: Vec<Violation>,
}

impl Diagnostics {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: DefectKind, detail: String) {
        self.violations.push(Violation { kind, detail });
    }

    pub fn has(&self, kind: DefectKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{:?}: {}", v.kind, v.detail)?;
        }
        Ok(())
    }
}

fn validate_tabular(t: &TabularModel, d: &mut Diagnostics) {
    let missing = t.missing_count();
    if missing > 0 {
        d.push(
            DefectKind::NonTotalTable,
            format!("table is missing {missing} of {} points", t.outputs.len()),
        );
    }
    let mut distinct = BTreeSet::new();
    for o in t.outputs.iter().flatten() {
        distinct.insert(o.clone());
    }
    if distinct.len() <= 1 {
        d.push(DefectKind::ConstantModel, "model is constant".into());
    }
}

fn validate_tree(t: &DecisionTree, d: &mut Diagnostics) {
    let mut visits = vec![0u32; t.arena.len()];
    let mut current: Vec<BTreeSet<Value>> = t
        .space
        .domains()
        .iter()
        .map(|dom| dom.iter().copied().collect())
        .collect();
    let mut leaf_outputs = BTreeSet::new();
    walk_validate(t, t.root, &mut visits, &mut current, &mut leaf_outputs, d);
    let unreachable: Vec<usize> =
        (0..t.arena.len()).filter(|&id| visits[id] == 0).collect();
    if !unreachable.is_empty() {
        d.push(DefectKind::UnreachableNode, format!("unreachable node ids {unreachable:?}"));
    }
    if leaf_outputs.len() <= 1 {
        d.push(DefectKind::ConstantModel, "model is constant".into());
    }
}

fn walk_validate(
    t: &DecisionTree,
    id: usize,
    visits: &mut [u32],
    current: &mut [BTreeSet<Value>],
    leaf_outputs: &mut BTreeSet<Output>,
    d: &mut Diagnostics,
) {
    visits[id] += 1;
    if visits[id] > 1 {
        d.push(
            DefectKind::NodeRevisited,
            format!("node {id} is reachable along more than one edge"),
        );
        return;
    }
    match &t.arena[id] {
        Node::Leaf(out) => {
            leaf_outputs.insert(out.clone());
        }
        Node::Internal { feature, edges } => {
            let f = *feature;
            let dom = &current[f - 1];
            let mut seen: BTreeSet<Value> = BTreeSet::new();
            for e in edges {
                if e.values.is_empty() {
                    d.push(DefectKind::EmptyEdgeLiteral, format!("empty literal at node {id}"));
                }
                for &v in &e.values {
                    if !t.space.domain(f).contains(&v) {
                        d.push(
                            DefectKind::ValueOutsideDomain,
                            format!("edge value {v} at node {id} is outside the domain of feature {f}"),
                        );
                    } else if !dom.contains(&v) {
                        d.push(
                            DefectKind::ValueOutsideDomain,
                            format!(
                                "edge value {v} at node {id} was already excluded by an ancestor test of feature {f}"
                            ),
                        );
                    } else if !seen.insert(v) {
                        d.push(
                            DefectKind::OverlappingLiterals,
                            format!("overlapping literals at node {id}: value {v} appears on two edges"),
                        );
                    }
                }
            }
            let uncovered: Vec<Value> = dom.iter().copied().filter(|v| !seen.contains(v)).collect();
            if !uncovered.is_empty() {
                d.push(
                    DefectKind::IncompleteLiterals,
                    format!("node {id} covers no edge for values {uncovered:?} of feature {f}"),
                );
            }
            for e in edges {
                let saved = std::mem::take(&mut current[f - 1]);
                current[f - 1] = e.values.iter().copied().filter(|v| saved.contains(v)).collect();
                if !current[f - 1].is_empty() {
                    walk_validate(t, e.child, visits, current, leaf_outputs, d);
                }
                current[f - 1] = saved;
            }
        }
    }
}

/// An explanation problem: a model plus a target instance `(v, q)`, the
/// regression similarity threshold `delta`, and the adversarial-example
/// radius `epsilon` (defaults to the feature count).
#[derive(Debug, Clone)]
pub struct ExplanationProblem {
    model: Model,
    v: Vec<Value>,
    q: Output,
    delta: BigRational,
    epsilon: Option<usize>,
}

impl ExplanationProblem {
    pub fn new(
        model: Model,
        v: Vec<Value>,
        delta: BigRational,
        epsilon: Option<usize>,
    ) -> Result<Self> {
        model.space().check_point(&v)?;
        if delta.is_negative() {
            return Err(Error::InvalidArgument("delta must be nonnegative".into()));
        }
        if model.task() == Task::Classification && !delta.is_zero() {
            return Err(Error::InvalidArgument(
                "delta must be 0 for classification problems".into(),
            ));
        }
        let q = model.evaluate(&v)?;
        Ok(ExplanationProblem { model, v, q, delta, epsilon })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn v(&self) -> &[Value] {
        &self.v
    }

    pub fn q(&self) -> &Output {
        &self.q
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn epsilon(&self) -> Option<usize> {
        self.epsilon
    }

    /// The radius actually used: the explicit `epsilon`, or `m`.
    pub fn epsilon_effective(&self) -> usize {
        self.epsilon.unwrap_or_else(|| self.m())
    }

    pub fn m(&self) -> usize {
        self.model.m()
    }

    /// Whether an output is similar to `q`: same class, or within `delta`
    /// for regression.
    pub fn similar_output(&self, out: &Output) -> bool {
        match (out, &self.q) {
            (Output::Class(a), Output::Class(b)) => a == b,
            (Output::Real(a), Output::Real(b)) => (a - b).abs() <= self.delta,
            _ => false,
        }
    }

    /// The similarity predicate at a point.
    pub fn similar(&self, point: &[Value]) -> Result<bool> {
        let out = self.model.evaluate(point)?;
        Ok(self.similar_output(&out))
    }
}

// ---------------------------------------------------------------------------
// JSON wire formats
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ModelJson {
    #[serde(rename = "type")]
    kind: String,
    task: Task,
    domains: Vec<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<Vec<RowJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<NodeJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    leaves: Option<Vec<LeafJson>>,
}

#[derive(Serialize, Deserialize)]
struct RowJson {
    x: Vec<Value>,
    y: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: usize,
    feature: usize,
    edges: Vec<EdgeJson>,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    values: Vec<Value>,
    child: usize,
}

#[derive(Serialize, Deserialize)]
struct LeafJson {
    id: usize,
    value: serde_json::Value,
}

fn output_from_json(v: &serde_json::Value, task: Task) -> Result<Output> {
    match task {
        Task::Classification => v
            .as_i64()
            .map(Output::Class)
            .ok_or_else(|| Error::Schema(format!("classification output must be an integer, got {v}"))),
        Task::Regression => match v {
            serde_json::Value::Number(n) if n.is_i64() => {
                Ok(Output::Real(BigRational::from_integer(n.as_i64().unwrap().into())))
            }
            serde_json::Value::String(s) => Ok(Output::Real(parse_ratio(s)?)),
            other => Err(Error::Schema(format!(
                "regression output must be an integer or a \"p/q\" string, got {other}"
            ))),
        },
    }
}

fn output_to_json(out: &Output) -> serde_json::Value {
    match out {
        Output::Class(c) => serde_json::json!(c),
        Output::Real(r) => serde_json::json!(format_ratio(r)),
    }
}

impl Model {
    /// Parse the model JSON schema without running [`Model::validate`].
    pub fn from_json_lenient(s: &str) -> Result<Model> {
        let wire: ModelJson =
            serde_json::from_str(s).map_err(|e| Error::Schema(format!("model json: {e}")))?;
        let space = FeatureSpace::new(wire.domains)?;
        match wire.kind.as_str() {
            "tabular" => {
                let rows = wire
                    .rows
                    .ok_or_else(|| Error::Schema("tabular model needs \"rows\"".into()))?;
                let mut table = Vec::with_capacity(rows.len());
                for r in rows {
                    table.push((r.x, output_from_json(&r.y, wire.task)?));
                }
                Ok(Model::Tabular(TabularModel::new(space, wire.task, table)?))
            }
            "dt" => {
                let root_id = wire.root.ok_or_else(|| Error::Schema("dt model needs \"root\"".into()))?;
                let nodes = wire.nodes.unwrap_or_default();
                let leaves = wire.leaves.unwrap_or_default();
                // map external ids onto a dense arena
                let mut ids: Vec<usize> = Vec::new();
                for n in &nodes {
                    ids.push(n.id);
                }
                for l in &leaves {
                    ids.push(l.id);
                }
                ids.sort_unstable();
                if ids.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Schema("duplicate node/leaf id in dt model".into()));
                }
                let slot = |id: usize| -> Result<usize> {
                    ids.binary_search(&id)
                        .map_err(|_| Error::Schema(format!("dt model references unknown id {id}")))
                };
                let mut arena: Vec<Option<Node>> = vec![None; ids.len()];
                for n in &nodes {
                    let mut edges = Vec::with_capacity(n.edges.len());
                    for e in &n.edges {
                        let mut values = e.values.clone();
                        values.sort_unstable();
                        values.dedup();
                        edges.push(Edge { values, child: slot(e.child)? });
                    }
                    arena[slot(n.id)?] = Some(Node::Internal { feature: n.feature, edges });
                }
                for l in &leaves {
                    arena[slot(l.id)?] = Some(Node::Leaf(output_from_json(&l.value, wire.task)?));
                }
                let arena: Vec<Node> = arena.into_iter().map(|n| n.unwrap()).collect();
                Ok(Model::Tree(DecisionTree::new(space, wire.task, slot(root_id)?, arena)?))
            }
            other => Err(Error::Schema(format!("unknown model type {other:?}"))),
        }
    }

    /// Parse and validate; a model with any invariant violation is rejected.
    pub fn from_json(s: &str) -> Result<Model> {
        let model = Model::from_json_lenient(s)?;
        let diag = model.validate();
        if !diag.is_empty() {
            return Err(Error::InvalidModel(diag.to_string()));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let wire = match self {
            Model::Tabular(t) => {
                let mut rows = Vec::new();
                let vary: Vec<usize> = (1..=t.space.m()).collect();
                let base: Vec<Value> = t.space.domains().iter().map(|d| d[0]).collect();
                for_each_in_subspace(&t.space, &base, &vary, |x| {
                    if let Ok(y) = t.evaluate(x) {
                        rows.push(RowJson { x: x.to_vec(), y: output_to_json(&y) });
                    }
                    true
                });
                ModelJson {
                    kind: "tabular".into(),
                    task: t.task,
                    domains: t.space.domains().to_vec(),
                    rows: Some(rows),
                    root: None,
                    nodes: None,
                    leaves: None,
                }
            }
            Model::Tree(t) => {
                let mut nodes = Vec::new();
                let mut leaves = Vec::new();
                for (id, node) in t.arena.iter().enumerate() {
                    match node {
                        Node::Internal { feature, edges } => nodes.push(NodeJson {
                            id,
                            feature: *feature,
                            edges: edges
                                .iter()
                                .map(|e| EdgeJson { values: e.values.clone(), child: e.child })
                                .collect(),
                        }),
                        Node::Leaf(out) => {
                            leaves.push(LeafJson { id, value: output_to_json(out) })
                        }
                    }
                }
                ModelJson {
                    kind: "dt".into(),
                    task: t.task,
                    domains: t.space.domains().to_vec(),
                    rows: None,
                    root: Some(t.root),
                    nodes: Some(nodes),
                    leaves: Some(leaves),
                }
            }
        };
        serde_json::to_string_pretty(&wire).expect("model serialization")
    }
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    point: Vec<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<usize>,
}

/// Parse the instance JSON (`{"point":…,"delta":"p/q","epsilon":n}`) against
/// a loaded model. `delta` defaults to 0.
pub fn problem_from_json(model: Model, s: &str) -> Result<ExplanationProblem> {
    let wire: ProblemJson =
        serde_json::from_str(s).map_err(|e| Error::Schema(format!("instance json: {e}")))?;
    let delta = match wire.delta {
        Some(d) => parse_ratio(&d)?,
        None => BigRational::zero(),
    };
    ExplanationProblem::new(model, wire.point, delta, wire.epsilon)
}

pub fn problem_to_json(p: &ExplanationProblem) -> String {
    let wire = ProblemJson {
        point: p.v().to_vec(),
        delta: if p.delta().is_zero() { None } else { Some(format_ratio(p.delta())) },
        epsilon: p.epsilon(),
    };
    serde_json::to_string_pretty(&wire).expect("problem serialization")
}
