//! Python bindings: `Problem` (a model plus target instance) and `Forest`
//! (the weighted CXp family), with exact values crossing the boundary as
//! `"p/q"` strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use axfi::adv::{compute_weights, enumerate_aexs, WeightMode};
use axfi::compare::{ranking, rbo, Ranking, Transform};
use axfi::forest::{build_forest, CXpForest};
use axfi::model::{problem_from_json, problem_to_json, Model, Output};
use axfi::num::{decimal_f64, format_ratio, parse_ratio};
use axfi::scores::{
    axfi_banzhaf, axfi_shapley, banzhaf_exhaustive, check_properties, deegan_packel_cxp, ffa,
    gamma, responsibility, shap_exact, shapley_exhaustive, wffa, ScoreVector,
};
use axfi::synth::{gadget_dt, random_problem, running_example, RandomSpec};
use axfi::xp::{
    default_cxp_method, enumerate_axps, enumerate_cxps, minimal_hitting_sets, AxpMethod,
    FeatureSet,
};
use axfi::Caps;

fn err(e: axfi::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    match v {
        serde_json::Value::Null => py.None().into_py_any(py),
        serde_json::Value::Bool(b) => b.into_py_any(py),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)
            } else if let Some(u) = n.as_u64() {
                u.into_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)
            }
        }
        serde_json::Value::String(s) => s.into_py_any(py),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn sets_out(sets: &[FeatureSet]) -> Vec<Vec<usize>> {
    sets.iter().map(|s| s.members().to_vec()).collect()
}

fn ratios_out(values: &[num_rational::BigRational]) -> Vec<String> {
    values.iter().map(format_ratio).collect()
}

fn weight_mode(mode: &str) -> PyResult<WeightMode> {
    mode.parse().map_err(err)
}

/// An explanation problem: a model plus the target instance.
#[pyclass(name = "Problem")]
struct PyProblem {
    problem: axfi::model::ExplanationProblem,
    caps: Caps,
}

#[pymethods]
impl PyProblem {
    /// Load from model and instance JSON strings.
    #[staticmethod]
    fn from_json(model_json: &str, instance_json: &str) -> PyResult<Self> {
        let model = Model::from_json(model_json).map_err(err)?;
        let problem = problem_from_json(model, instance_json).map_err(err)?;
        Ok(PyProblem { problem, caps: Caps::default() })
    }

    /// The worked three-feature classifier fixture.
    #[staticmethod]
    fn running_example() -> Self {
        let (_, problem) = running_example();
        PyProblem { problem, caps: Caps::default() }
    }

    /// The k-gadget decision tree at the all-ones instance.
    #[staticmethod]
    fn gadget(k: usize) -> PyResult<Self> {
        let (_, problem) = gadget_dt(k).map_err(err)?;
        Ok(PyProblem { problem, caps: Caps::default() })
    }

    /// A seeded random problem over `m` features.
    #[staticmethod]
    #[pyo3(signature = (m, seed, domain_sizes=None, model_kind="dt", leaf_bias=None))]
    fn random(
        m: usize,
        seed: u64,
        domain_sizes: Option<Vec<usize>>,
        model_kind: &str,
        leaf_bias: Option<Vec<u32>>,
    ) -> PyResult<Self> {
        let spec = RandomSpec::new(
            m,
            domain_sizes.unwrap_or_else(|| vec![2]),
            model_kind.parse().map_err(err)?,
            leaf_bias.unwrap_or_else(|| vec![1, 1]),
        );
        let (_, problem) = random_problem(&spec, seed).map_err(err)?;
        Ok(PyProblem { problem, caps: Caps::default() })
    }

    #[getter]
    fn m(&self) -> usize {
        self.problem.m()
    }

    #[getter]
    fn instance(&self) -> Vec<i64> {
        self.problem.v().to_vec()
    }

    /// Model output at a point: a class id or a "p/q" string.
    fn evaluate(&self, py: Python<'_>, point: Vec<i64>) -> PyResult<Py<PyAny>> {
        match self.problem.model().evaluate(&point).map_err(err)? {
            Output::Class(c) => c.into_py_any(py),
            Output::Real(r) => format_ratio(&r).into_py_any(py),
        }
    }

    fn similar(&self, point: Vec<i64>) -> PyResult<bool> {
        self.problem.similar(&point).map_err(err)
    }

    fn cxps(&self) -> PyResult<Vec<Vec<usize>>> {
        let family = enumerate_cxps(&self.problem, default_cxp_method(&self.problem), &self.caps)
            .map_err(err)?;
        Ok(sets_out(&family.sets))
    }

    fn axps(&self) -> PyResult<Vec<Vec<usize>>> {
        let family =
            enumerate_axps(&self.problem, AxpMethod::MhsDual, &self.caps).map_err(err)?;
        Ok(sets_out(&family.sets))
    }

    fn relevant(&self) -> PyResult<Vec<usize>> {
        let set = axfi::xp::relevant_features(&self.problem, &self.caps).map_err(err)?;
        Ok(set.members().to_vec())
    }

    /// All adversarial examples within the problem's radius.
    fn aexs(&self) -> PyResult<Vec<Vec<i64>>> {
        Ok(enumerate_aexs(&self.problem, &self.caps).map_err(err)?.points)
    }

    /// Per-CXp cover measures as dicts.
    #[pyo3(signature = (mode="count", samples=5000, seed=0))]
    fn weights(
        &self,
        py: Python<'_>,
        mode: &str,
        samples: u64,
        seed: u64,
    ) -> PyResult<Py<PyAny>> {
        let cxps = enumerate_cxps(&self.problem, default_cxp_method(&self.problem), &self.caps)
            .map_err(err)?;
        let measures =
            compute_weights(&self.problem, &cxps, weight_mode(mode)?, samples, seed, &self.caps)
                .map_err(err)?;
        let arr = serde_json::Value::Array(measures.iter().map(|m| m.to_json_value()).collect());
        json_to_py(py, &arr)
    }

    /// Build the weighted CXp-Forest.
    #[pyo3(signature = (mode="count", samples=5000, seed=0))]
    fn forest(&self, mode: &str, samples: u64, seed: u64) -> PyResult<PyForest> {
        let forest = build_forest(&self.problem, weight_mode(mode)?, samples, seed, &self.caps)
            .map_err(err)?;
        Ok(PyForest { forest })
    }

    /// Exact SHAP values under uniform product distributions.
    fn shap(&self) -> PyResult<Vec<String>> {
        Ok(ratios_out(&shap_exact(&self.problem, &self.caps).map_err(err)?.values))
    }

    /// AXp-based baselines: {"ffa": [...], "wffa": [...], "responsibility": [...]}.
    fn baselines(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let axps =
            enumerate_axps(&self.problem, AxpMethod::MhsDual, &self.caps).map_err(err)?;
        let m = self.problem.m();
        let dict = PyDict::new(py);
        dict.set_item("ffa", ratios_out(&ffa(&axps, m).map_err(err)?.values))?;
        dict.set_item("wffa", ratios_out(&wffa(&axps, m).map_err(err)?.values))?;
        dict.set_item(
            "responsibility",
            ratios_out(&responsibility(&axps, m).map_err(err)?.values),
        )?;
        dict.into_py_any(py)
    }

    fn model_json(&self) -> String {
        self.problem.model().to_json()
    }

    fn instance_json(&self) -> String {
        problem_to_json(&self.problem)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(m={}, v={:?}, kind={})",
            self.problem.m(),
            self.problem.v(),
            if self.problem.model().is_tree() { "dt" } else { "tabular" }
        )
    }
}

/// A weighted CXp family with its characteristic function and scores.
#[pyclass(name = "Forest")]
struct PyForest {
    forest: CXpForest,
}

#[pymethods]
impl PyForest {
    #[staticmethod]
    fn from_parts(m: usize, cxps: Vec<Vec<usize>>, weights: Vec<String>) -> PyResult<Self> {
        let sets = cxps.into_iter().map(FeatureSet::new).collect();
        let parsed = weights
            .iter()
            .map(|w| parse_ratio(w))
            .collect::<axfi::Result<Vec<_>>>()
            .map_err(err)?;
        Ok(PyForest { forest: CXpForest::new(m, sets, parsed).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(PyForest { forest: CXpForest::from_json(s).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.forest.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.forest.feature_count()
    }

    fn cxps(&self) -> Vec<Vec<usize>> {
        sets_out(self.forest.cxps())
    }

    fn weights(&self) -> Vec<String> {
        ratios_out(self.forest.weights())
    }

    /// The characteristic function at a coalition, as "p/q".
    fn chi(&self, coalition: Vec<usize>) -> PyResult<String> {
        let value = self.forest.chi(&FeatureSet::new(coalition)).map_err(err)?;
        Ok(format_ratio(&value))
    }

    fn shapley(&self) -> Vec<String> {
        ratios_out(&axfi_shapley(&self.forest).values)
    }

    fn banzhaf(&self) -> Vec<String> {
        ratios_out(&axfi_banzhaf(&self.forest).values)
    }

    /// Six-place decimal renderings of the Shapley-like scores.
    fn shapley_decimal(&self) -> Vec<f64> {
        axfi_shapley(&self.forest).values.iter().map(decimal_f64).collect()
    }

    fn banzhaf_decimal(&self) -> Vec<f64> {
        axfi_banzhaf(&self.forest).values.iter().map(decimal_f64).collect()
    }

    fn shapley_exhaustive(&self) -> PyResult<Vec<String>> {
        Ok(ratios_out(
            &shapley_exhaustive(&self.forest, &Caps::default()).map_err(err)?.values,
        ))
    }

    fn banzhaf_exhaustive(&self) -> PyResult<Vec<String>> {
        Ok(ratios_out(
            &banzhaf_exhaustive(&self.forest, &Caps::default()).map_err(err)?.values,
        ))
    }

    fn deegan_packel(&self) -> PyResult<Vec<String>> {
        let dp = deegan_packel_cxp(&self.forest.cxp_family(), self.forest.feature_count())
            .map_err(err)?;
        Ok(ratios_out(&dp.values))
    }

    fn gamma(&self) -> String {
        format_ratio(&gamma(&self.forest))
    }

    /// The property report as a list of dicts.
    fn properties(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let report = check_properties(&self.forest, None, &Caps::default()).map_err(err)?;
        json_to_py(py, &report.to_json_value())
    }

    fn to_json(&self) -> String {
        self.forest.to_json()
    }

    fn to_dot(&self) -> String {
        self.forest.to_dot()
    }

    fn __repr__(&self) -> String {
        format!("Forest(n={}, m={})", self.forest.n(), self.forest.feature_count())
    }
}

/// Truncated rank-biased overlap of two rankings (permutations of 1..m),
/// returned as "p/q".
#[pyfunction]
#[pyo3(signature = (a, b, p="1/2", d=5))]
fn rbo_exact(a: Vec<usize>, b: Vec<usize>, p: &str, d: usize) -> PyResult<String> {
    let pa = Ranking { ordered: a, source: "a".into() };
    let pb = Ranking { ordered: b, source: "b".into() };
    let value = rbo(&pa, &pb, &parse_ratio(p).map_err(err)?, d).map_err(err)?;
    Ok(format_ratio(&value))
}

/// Rank features by a vector of "p/q" scores, descending, ties toward the
/// smaller index.
#[pyfunction]
#[pyo3(signature = (values, absolute=false))]
fn rank_features(values: Vec<String>, absolute: bool) -> PyResult<Vec<usize>> {
    let parsed = values
        .iter()
        .map(|v| parse_ratio(v))
        .collect::<axfi::Result<Vec<_>>>()
        .map_err(err)?;
    let vector = ScoreVector { method: axfi::scores::Method::AxfiShapley, values: parsed };
    let transform = if absolute { Transform::Absolute } else { Transform::Identity };
    Ok(ranking(&vector, transform).ordered)
}

/// All subset-minimal hitting sets of a family of feature sets.
#[pyfunction]
fn mhs(family: Vec<Vec<usize>>) -> PyResult<Vec<Vec<usize>>> {
    let sets: Vec<FeatureSet> = family.into_iter().map(FeatureSet::new).collect();
    Ok(sets_out(&minimal_hitting_sets(&sets).map_err(err)?))
}

/// Number of coordinates on which two points differ.
#[pyfunction]
fn l0(a: Vec<i64>, b: Vec<i64>) -> PyResult<usize> {
    axfi::adv::l0_distance(&a, &b).map_err(err)
}

#[pymodule]
fn axfi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyForest>()?;
    m.add_function(wrap_pyfunction!(rbo_exact, m)?)?;
    m.add_function(wrap_pyfunction!(rank_features, m)?)?;
    m.add_function(wrap_pyfunction!(mhs, m)?)?;
    m.add_function(wrap_pyfunction!(l0, m)?)?;
    Ok(())
}
