//! Library side of the command-line front end: configuration, input
//! loading, and one function per subcommand. Every command is a pure
//! function of its inputs and the configuration, so outputs are
//! byte-identical across runs for identical (input, flags, seed).

use std::collections::BTreeMap;
use std::path::Path;

use num_rational::BigRational;

use crate::adv::{compute_weights, weights_to_json, WeightMode};
use crate::compare::{ranking, rbo_matrix, RboReport, Ranking, Transform};
use crate::forest::{build_forest, CXpForest};
use crate::model::{problem_from_json, problem_to_json, ExplanationProblem, Model};
use crate::num::{decimal_string, format_ratio};
use crate::scores::{
    axfi_banzhaf, axfi_shapley, banzhaf_exhaustive, check_properties, deegan_packel_cxp, ffa,
    gamma, responsibility, shap_exact, shapley_exhaustive, wffa, Method, ScoreVector,
};
use crate::synth::{gadget_dt, random_problem, running_example, ModelKind, RandomSpec};
use crate::xp::{
    default_cxp_method, enumerate_axps, enumerate_cxps, minimal_hitting_sets, AxpMethod,
    CxpMethod, FeatureSet, XpFamily, XpKind,
};
use crate::{Caps, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Resolved flag set shared by the subcommands. Defaults: count weights,
/// 5000 samples, seed 0, persistence 1/2, depth 5, JSON output.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub weight_mode: WeightMode,
    pub samples: u64,
    pub seed: u64,
    pub epsilon: Option<usize>,
    pub delta: Option<BigRational>,
    pub persistence: BigRational,
    pub depth: usize,
    pub methods: Vec<Method>,
    pub format: OutputFormat,
    pub caps: Caps,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            weight_mode: WeightMode::Count,
            samples: 5000,
            seed: 0,
            epsilon: None,
            delta: None,
            persistence: BigRational::new(1.into(), 2.into()),
            depth: 5,
            methods: vec![
                Method::AxfiShapley,
                Method::AxfiBanzhaf,
                Method::Ffa,
                Method::Wffa,
                Method::Responsibility,
                Method::DeeganPackelCxp,
                Method::ShapExact,
            ],
            format: OutputFormat::Json,
            caps: Caps::default(),
        }
    }
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<Model> {
    Model::from_json(&read_file(path)?)
}

/// Load model + instance and apply the `--epsilon` / `--delta` overrides.
pub fn load_problem(
    model_path: &Path,
    instance_path: &Path,
    cfg: &RunConfig,
) -> Result<ExplanationProblem> {
    let model = load_model(model_path)?;
    let problem = problem_from_json(model, &read_file(instance_path)?)?;
    apply_overrides(problem, cfg)
}

fn apply_overrides(problem: ExplanationProblem, cfg: &RunConfig) -> Result<ExplanationProblem> {
    if cfg.epsilon.is_none() && cfg.delta.is_none() {
        return Ok(problem);
    }
    let delta = cfg.delta.clone().unwrap_or_else(|| problem.delta().clone());
    let epsilon = cfg.epsilon.or(problem.epsilon());
    ExplanationProblem::new(
        problem.model().clone(),
        problem.v().to_vec(),
        delta,
        epsilon,
    )
}

/// `explain`: both explanation families plus the relevant-feature set.
pub fn cmd_explain(problem: &ExplanationProblem, caps: &Caps) -> Result<serde_json::Value> {
    let cxps = enumerate_cxps(problem, default_cxp_method(problem), caps)?;
    let axps = enumerate_axps(problem, AxpMethod::MhsDual, caps)?;
    let relevant = cxps.union();
    Ok(serde_json::json!({
        "axps": serde_json::to_value(&axps).unwrap(),
        "cxps": serde_json::to_value(&cxps).unwrap(),
        "relevant": relevant.members(),
    }))
}

/// `weights`: the cover measure of every CXp under the configured mode.
pub fn cmd_weights(problem: &ExplanationProblem, cfg: &RunConfig) -> Result<String> {
    let cxps = enumerate_cxps(problem, default_cxp_method(problem), &cfg.caps)?;
    let measures = compute_weights(
        problem,
        &cxps,
        cfg.weight_mode,
        cfg.samples,
        cfg.seed,
        &cfg.caps,
    )?;
    match cfg.format {
        OutputFormat::Json => Ok(weights_to_json(&measures)),
        OutputFormat::Csv => {
            let mut out = String::from("cxp,count,ratio,sampled_ratio\n");
            for m in &measures {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    m.cxp
                        .iter()
                        .map(|f| f.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                    m.count,
                    decimal_string(&m.ratio, 6),
                    m.sampled
                        .as_ref()
                        .map(|s| decimal_string(&s.ratio, 6))
                        .unwrap_or_default(),
                ));
            }
            Ok(out)
        }
    }
}

fn score_one(
    method: Method,
    problem: &ExplanationProblem,
    forest: &CXpForest,
    axps: &mut Option<XpFamily>,
    cfg: &RunConfig,
) -> Result<ScoreVector> {
    let m = problem.m();
    let need_axps = matches!(method, Method::Ffa | Method::Wffa | Method::Responsibility);
    if need_axps && axps.is_none() {
        *axps = Some(enumerate_axps(problem, AxpMethod::MhsDual, &cfg.caps)?);
    }
    match method {
        Method::AxfiShapley => Ok(axfi_shapley(forest)),
        Method::AxfiBanzhaf => Ok(axfi_banzhaf(forest)),
        Method::ShapleyExhaustive => shapley_exhaustive(forest, &cfg.caps),
        Method::BanzhafExhaustive => banzhaf_exhaustive(forest, &cfg.caps),
        Method::Ffa => ffa(axps.as_ref().unwrap(), m),
        Method::Wffa => wffa(axps.as_ref().unwrap(), m),
        Method::Responsibility => responsibility(axps.as_ref().unwrap(), m),
        Method::DeeganPackelCxp => deegan_packel_cxp(&forest.cxp_family(), m),
        Method::ShapExact => shap_exact(problem, &cfg.caps),
    }
}

/// `scores`: the requested score vectors plus the property report of the
/// built forest.
pub fn cmd_scores(problem: &ExplanationProblem, cfg: &RunConfig) -> Result<String> {
    let forest = build_forest(problem, cfg.weight_mode, cfg.samples, cfg.seed, &cfg.caps)?;
    let mut axps = None;
    let mut vectors = Vec::new();
    for &method in &cfg.methods {
        vectors.push(score_one(method, problem, &forest, &mut axps, cfg)?);
    }
    match cfg.format {
        OutputFormat::Json => {
            let report = check_properties(&forest, Some(problem), &cfg.caps)?;
            let value = serde_json::json!({
                "scores": vectors.iter().map(|v| v.to_json_value()).collect::<Vec<_>>(),
                "properties": report.to_json_value(),
                "gamma": format_ratio(&gamma(&forest)),
            });
            Ok(serde_json::to_string_pretty(&value).unwrap())
        }
        OutputFormat::Csv => {
            let mut out = String::from("feature");
            for v in &vectors {
                out.push(',');
                out.push_str(v.method.as_str());
            }
            out.push('\n');
            for f in 1..=problem.m() {
                out.push_str(&f.to_string());
                for v in &vectors {
                    out.push(',');
                    out.push_str(&decimal_string(v.value(f), 6));
                }
                out.push('\n');
            }
            Ok(out)
        }
    }
}

/// Parse a score file: either one score-vector object, an array of them, or
/// the `scores` envelope written by [`cmd_scores`].
pub fn parse_score_file(contents: &str) -> Result<Vec<ScoreVector>> {
    let value: serde_json::Value =
        serde_json::from_str(contents).map_err(|e| Error::Schema(format!("score file: {e}")))?;
    let items: Vec<&serde_json::Value> = if let Some(arr) = value.as_array() {
        arr.iter().collect()
    } else if let Some(arr) = value.get("scores").and_then(|s| s.as_array()) {
        arr.iter().collect()
    } else {
        vec![&value]
    };
    if items.is_empty() {
        return Err(Error::Schema("score file holds no score vectors".into()));
    }
    items.into_iter().map(ScoreVector::from_json_value).collect()
}

/// `compare`: pairwise RBO over the rankings of the given score vectors.
/// With `absolute`, vectors containing negative values additionally
/// contribute an `abs(...)` ranking.
pub fn cmd_compare(
    score_sets: &[Vec<ScoreVector>],
    absolute: bool,
    cfg: &RunConfig,
) -> Result<RboReport> {
    let mut rankings: Vec<Ranking> = Vec::new();
    for vectors in score_sets {
        for v in vectors {
            rankings.push(ranking(v, Transform::Identity));
            if absolute && v.values.iter().any(|x| x < &BigRational::from_integer(0.into())) {
                rankings.push(ranking(v, Transform::Absolute));
            }
        }
    }
    if rankings.len() < 2 {
        return Err(Error::InvalidArgument(
            "compare needs at least two score vectors".into(),
        ));
    }
    rbo_matrix(&rankings, &cfg.persistence, cfg.depth)
}

/// Generator selector for `gen`.
#[derive(Debug, Clone)]
pub enum GenKind {
    RunningExample,
    Gadget { k: usize },
    Random(RandomSpec, u64),
}

/// `gen`: write a model/instance pair and return their paths.
pub fn cmd_gen(kind: &GenKind, out_model: &Path, out_instance: &Path) -> Result<serde_json::Value> {
    let (model, problem) = match kind {
        GenKind::RunningExample => running_example(),
        GenKind::Gadget { k } => gadget_dt(*k)?,
        GenKind::Random(spec, seed) => random_problem(spec, *seed)?,
    };
    write_file(out_model, &model.to_json())?;
    write_file(out_instance, &problem_to_json(&problem))?;
    Ok(serde_json::json!({
        "model": out_model.display().to_string(),
        "instance": out_instance.display().to_string(),
    }))
}

pub fn parse_model_kind(s: &str) -> Result<ModelKind> {
    s.parse()
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad list entry {p:?}")))
        })
        .collect()
}

pub fn parse_u32_list(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<u32>()
                .map_err(|_| Error::InvalidArgument(format!("bad list entry {p:?}")))
        })
        .collect()
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',').map(|p| p.trim().parse::<Method>()).collect()
}

struct VerifyOutcome {
    checks: Vec<serde_json::Value>,
    all_pass: bool,
}

impl VerifyOutcome {
    fn new() -> Self {
        VerifyOutcome { checks: Vec::new(), all_pass: true }
    }

    fn record(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(serde_json::json!({ "check": name, "pass": pass, "detail": detail }));
        self.all_pass &= pass;
    }

    fn skip(&mut self, name: &str, why: String) {
        self.checks
            .push(serde_json::json!({ "check": name, "pass": true, "skipped": true, "detail": why }));
    }
}

/// `verify`: run the invariant suite on one problem. Returns the report and
/// whether every executed check passed.
pub fn cmd_verify(
    model: &Model,
    problem: &ExplanationProblem,
    cfg: &RunConfig,
) -> Result<(serde_json::Value, bool)> {
    let caps = &cfg.caps;
    let mut out = VerifyOutcome::new();

    let diag = model.validate();
    out.record("model_valid", diag.is_empty(), diag.to_string());
    if !diag.is_empty() {
        return Ok((finish_verify(out, None, None), false));
    }

    // CXp enumeration, with method agreement where both paths apply
    let primary = default_cxp_method(problem);
    let cxps = enumerate_cxps(problem, primary, caps)?;
    if model.is_tree() {
        match enumerate_cxps(problem, CxpMethod::Brute, caps) {
            Ok(brute) => out.record(
                "cxp_methods_agree",
                brute == cxps,
                format!("dt_paths found {} CXps", cxps.len()),
            ),
            Err(Error::CapExceeded { .. }) => {
                out.skip("cxp_methods_agree", "brute enumeration above the subset cap".into())
            }
            Err(e) => return Err(e),
        }
    }

    // duality in both directions
    let axps = if cxps.is_empty() {
        XpFamily::new(XpKind::Axp, vec![FeatureSet::empty()])?
    } else {
        XpFamily::new(XpKind::Axp, minimal_hitting_sets(&cxps.sets)?)?
    };
    match enumerate_axps(problem, AxpMethod::Brute, caps) {
        Ok(brute) => out.record(
            "axps_are_mhs_of_cxps",
            brute == axps,
            format!("{} AXps", axps.len()),
        ),
        Err(Error::CapExceeded { .. }) => {
            out.skip("axps_are_mhs_of_cxps", "brute enumeration above the subset cap".into())
        }
        Err(e) => return Err(e),
    }
    if !cxps.is_empty() {
        if axps.len() <= 4096 {
            let back = minimal_hitting_sets(&axps.sets)?;
            out.record(
                "cxps_are_mhs_of_axps",
                back == cxps.sets,
                format!("{} CXps", cxps.len()),
            );
        } else {
            out.skip("cxps_are_mhs_of_axps", format!("AXp family too large ({})", axps.len()));
        }
    }

    // relevancy agrees across the two families
    out.record(
        "relevant_features_agree",
        cxps.union() == axps.union() || cxps.is_empty(),
        format!("{}", cxps.union()),
    );

    if cxps.is_empty() {
        out.record("no_cxps", false, "model output is similar everywhere".into());
        return Ok((finish_verify(out, Some(&cxps), Some(&axps)), false));
    }

    // cover counting: method agreement and pairwise disjointness
    if model.is_tree() {
        let mut agree = true;
        let mut detail = String::new();
        for cxp in &cxps.sets {
            let a = crate::adv::cover_count(problem, cxp, crate::adv::CoverMethod::DtRestrict, caps)?;
            match crate::adv::cover_count(problem, cxp, crate::adv::CoverMethod::Brute, caps) {
                Ok(b) => {
                    if a.count != b.count {
                        agree = false;
                        detail = format!("cover of {cxp} differs between methods");
                        break;
                    }
                }
                Err(Error::CapExceeded { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        out.record("cover_methods_agree", agree, detail);
    }
    let total_cover_space: u128 = cxps
        .sets
        .iter()
        .map(|c| model.space().subspace_size(c.members()))
        .sum();
    if total_cover_space <= caps.space as u128 {
        let mut seen: std::collections::BTreeSet<Vec<i64>> = Default::default();
        let mut disjoint = true;
        for cxp in &cxps.sets {
            for p in crate::adv::covered_points(problem, cxp, caps)? {
                if !seen.insert(p) {
                    disjoint = false;
                }
            }
        }
        out.record("covers_disjoint", disjoint, format!("{} covered points", seen.len()));
    } else {
        out.skip("covers_disjoint", "restricted spaces above the point cap".into());
    }

    // forest + scores
    let forest = build_forest(problem, cfg.weight_mode, cfg.samples, cfg.seed, caps)?;
    let phi_s = axfi_shapley(&forest);
    let phi_b = axfi_banzhaf(&forest);
    let efficiency = phi_s.sum()
        == forest.chi(&FeatureSet::full(problem.m()))? - forest.chi(&FeatureSet::empty())?;
    out.record("efficiency_shapley", efficiency, format_ratio(&phi_s.sum()));
    out.record(
        "gamma_efficiency_banzhaf",
        phi_b.sum() == gamma(&forest),
        format_ratio(&gamma(&forest)),
    );

    if problem.m() <= caps.exhaustive {
        let es = shapley_exhaustive(&forest, caps)?;
        let eb = banzhaf_exhaustive(&forest, caps)?;
        out.record(
            "closed_form_matches_exhaustive",
            es.values == phi_s.values && eb.values == phi_b.values,
            String::new(),
        );
    } else {
        out.skip(
            "closed_form_matches_exhaustive",
            format!("m={} above the exhaustive cap", problem.m()),
        );
    }

    let unweighted = axfi_shapley(&forest.unweighted());
    let dp = deegan_packel_cxp(&forest.cxp_family(), problem.m())?;
    out.record("unweighted_equals_deegan_packel", unweighted.values == dp.values, String::new());

    let report = check_properties(&forest, Some(problem), caps)?;
    out.record(
        "score_properties",
        report.all_guaranteed_hold(),
        report
            .checks
            .iter()
            .filter(|c| c.guaranteed && !c.holds)
            .map(|c| c.name)
            .collect::<Vec<_>>()
            .join(","),
    );

    let pass = out.all_pass;
    Ok((finish_verify(out, Some(&cxps), Some(&axps)), pass))
}

fn finish_verify(
    out: VerifyOutcome,
    cxps: Option<&XpFamily>,
    axps: Option<&XpFamily>,
) -> serde_json::Value {
    let mut stats = BTreeMap::new();
    if let Some(c) = cxps {
        stats.insert("cxps", serde_json::json!(c.len()));
        stats.insert("relevant", serde_json::json!(c.union().members()));
    }
    if let Some(a) = axps {
        stats.insert("axps", serde_json::json!(a.len()));
    }
    serde_json::json!({
        "pass": out.all_pass,
        "checks": out.checks,
        "stats": stats,
    })
}

/// Map an error to the CLI exit code. 2 is reserved for usage errors and 7
/// for failed verification.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Schema(_) | Error::InvalidModel(_) => 3,
        Error::CapExceeded { .. } => 4,
        Error::MethodMismatch { .. } => 5,
        Error::InvalidArgument(_)
        | Error::OutsideDomain { .. }
        | Error::ArityMismatch { .. }
        | Error::FeatureOutOfRange { .. } => 6,
        Error::Io(_) => 1,
    }
}

/// The structured error document printed on stderr.
pub fn error_json(err: &Error) -> String {
    serde_json::to_string(&serde_json::json!({
        "error": { "kind": err.kind(), "message": err.to_string() }
    }))
    .unwrap()
}
