//! Command-line surface: JSON problem/report schemas, schema validation with
//! JSON-path error locations, and the runners behind the `divide`,
//! `identities`, `residue` and `size-check` subcommands.
//!
//! Complex numbers are [re, im] pairs throughout; polynomials are lists of
//! `{"coeff": [re, im], "exp": [e1, .., en]}` records in lexicographic
//! exponent order, round-tripping bit-exactly. Reports embed the resolved
//! semantic configuration (worker count is an execution parameter and is
//! deliberately not part of it), so reruns produce byte-identical files for
//! any worker count.

pub mod identities;

use crate::division::{
    self, DivisionMode, DivisionProblem, DivisionReport, SizeConditionReport, Verdict,
};
use crate::kernel::KernelConfig;
use crate::poly::{C64, CPolynomial, ComplexPoint};
use crate::quadrature::{
    self, QuadratureConfig, QuadratureError, RegularizationSchedule, Scheme,
};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value, json};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Problem(String),
}

impl CliError {
    fn schema(path: &str, message: impl Into<String>) -> Self {
        CliError::Schema {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

// ---------------------------------------------------------------------------
// polynomial literals

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermRecord {
    pub coeff: [f64; 2],
    pub exp: Vec<u32>,
}

pub fn poly_to_records(p: &CPolynomial) -> Vec<TermRecord> {
    p.terms()
        .map(|(e, c)| TermRecord {
            coeff: [c.re, c.im],
            exp: e.clone(),
        })
        .collect()
}

pub fn poly_from_value(v: &Value, n_vars: usize, path: &str) -> Result<CPolynomial, CliError> {
    let arr = v
        .as_array()
        .ok_or_else(|| CliError::schema(path, "polynomial must be an array of term records"))?;
    let mut p = CPolynomial::zero(n_vars);
    for (i, term) in arr.iter().enumerate() {
        let tpath = format!("{}[{}]", path, i);
        let obj = term
            .as_object()
            .ok_or_else(|| CliError::schema(&tpath, "term must be an object"))?;
        let coeff = obj
            .get("coeff")
            .ok_or_else(|| CliError::schema(&format!("{}.coeff", tpath), "missing"))?;
        let pair = complex_from_value(coeff, &format!("{}.coeff", tpath))?;
        let exp_v = obj
            .get("exp")
            .ok_or_else(|| CliError::schema(&format!("{}.exp", tpath), "missing"))?;
        let epath = format!("{}.exp", tpath);
        let exp_arr = exp_v
            .as_array()
            .ok_or_else(|| CliError::schema(&epath, "exponent vector must be an array"))?;
        if exp_arr.len() != n_vars {
            return Err(CliError::schema(
                &epath,
                format!("exponent vector has {} entries, expected {}", exp_arr.len(), n_vars),
            ));
        }
        let mut exp = Vec::with_capacity(n_vars);
        for (j, e) in exp_arr.iter().enumerate() {
            let val = e.as_u64().ok_or_else(|| {
                CliError::schema(&format!("{}[{}]", epath, j), "exponent must be a nonnegative integer")
            })?;
            if val > 64 {
                return Err(CliError::schema(
                    &format!("{}[{}]", epath, j),
                    "exponent out of range",
                ));
            }
            exp.push(val as u32);
        }
        for key in obj.keys() {
            if key != "coeff" && key != "exp" {
                return Err(CliError::schema(&tpath, format!("unknown field `{}`", key)));
            }
        }
        p.add_term(exp, pair);
    }
    Ok(p)
}

fn complex_from_value(v: &Value, path: &str) -> Result<C64, CliError> {
    let arr = v
        .as_array()
        .ok_or_else(|| CliError::schema(path, "complex number must be [re, im]"))?;
    if arr.len() != 2 {
        return Err(CliError::schema(path, "complex number must be [re, im]"));
    }
    let re = arr[0]
        .as_f64()
        .ok_or_else(|| CliError::schema(&format!("{}[0]", path), "must be a number"))?;
    let im = arr[1]
        .as_f64()
        .ok_or_else(|| CliError::schema(&format!("{}[1]", path), "must be a number"))?;
    Ok(C64::new(re, im))
}

fn point_from_value(v: &Value, n: usize, path: &str) -> Result<ComplexPoint, CliError> {
    let arr = v
        .as_array()
        .ok_or_else(|| CliError::schema(path, "point must be an array of [re, im] pairs"))?;
    if arr.len() != n {
        return Err(CliError::schema(
            path,
            format!("point has {} coordinates, expected {}", arr.len(), n),
        ));
    }
    let mut coords = Vec::with_capacity(n);
    for (i, c) in arr.iter().enumerate() {
        coords.push(complex_from_value(c, &format!("{}[{}]", path, i))?);
    }
    Ok(ComplexPoint(coords))
}

// ---------------------------------------------------------------------------
// problem schema

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub nodes: Option<usize>,
    pub scheme: Option<Scheme>,
    pub seed: Option<u64>,
    pub lambda_schedule: Option<Vec<f64>>,
    pub r0: Option<f64>,
    pub r1: Option<f64>,
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str, parent: &str) -> Result<&'a Value, CliError> {
    obj.get(key)
        .ok_or_else(|| CliError::schema(&format!("{}.{}", parent, key), "missing required field"))
}

fn parse_quadrature(v: Option<&Value>, path: &str) -> Result<QuadratureConfig, CliError> {
    let mut cfg = QuadratureConfig::default();
    let Some(v) = v else { return Ok(cfg) };
    let obj = v
        .as_object()
        .ok_or_else(|| CliError::schema(path, "must be an object"))?;
    for (key, val) in obj {
        match key.as_str() {
            "scheme" => {
                cfg.scheme = match val.as_str() {
                    Some("gauss-polar") => Scheme::GaussPolar,
                    Some("qmc-halton") => Scheme::QmcHalton,
                    _ => {
                        return Err(CliError::schema(
                            &format!("{}.scheme", path),
                            "must be \"gauss-polar\" or \"qmc-halton\"",
                        ))
                    }
                }
            }
            "nodes" => {
                cfg.nodes = val
                    .as_u64()
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| CliError::schema(&format!("{}.nodes", path), "positive integer"))?
                    as usize
            }
            "seed" => {
                cfg.seed = val
                    .as_u64()
                    .ok_or_else(|| CliError::schema(&format!("{}.seed", path), "nonnegative integer"))?
            }
            "near_z_refinement" => {
                cfg.near_z_refinement = val.as_bool().ok_or_else(|| {
                    CliError::schema(&format!("{}.near_z_refinement", path), "boolean")
                })?
            }
            other => {
                return Err(CliError::schema(
                    &format!("{}.{}", path, other),
                    "unknown field",
                ))
            }
        }
    }
    Ok(cfg)
}

fn parse_kernel(v: Option<&Value>, path: &str) -> Result<KernelConfig, CliError> {
    let mut r0 = 1.05f64;
    let mut r1 = 1.2f64;
    if let Some(v) = v {
        let obj = v
            .as_object()
            .ok_or_else(|| CliError::schema(path, "must be an object"))?;
        for (key, val) in obj {
            match key.as_str() {
                "r0" => {
                    r0 = val
                        .as_f64()
                        .ok_or_else(|| CliError::schema(&format!("{}.r0", path), "number"))?
                }
                "r1" => {
                    r1 = val
                        .as_f64()
                        .ok_or_else(|| CliError::schema(&format!("{}.r1", path), "number"))?
                }
                other => {
                    return Err(CliError::schema(
                        &format!("{}.{}", path, other),
                        "unknown field",
                    ))
                }
            }
        }
    }
    if !(1.0 < r0 && r0 < r1) {
        return Err(CliError::schema(path, "need 1 < r0 < r1"));
    }
    Ok(KernelConfig::new(r0, r1))
}

fn parse_schedule(v: Option<&Value>, path: &str) -> Result<RegularizationSchedule, CliError> {
    let mut sched = RegularizationSchedule::default();
    if let Some(v) = v {
        let arr = v
            .as_array()
            .ok_or_else(|| CliError::schema(path, "must be an array of numbers"))?;
        let mut lambdas = Vec::with_capacity(arr.len());
        for (i, x) in arr.iter().enumerate() {
            lambdas.push(x.as_f64().ok_or_else(|| {
                CliError::schema(&format!("{}[{}]", path, i), "must be a number")
            })?);
        }
        sched.lambdas = lambdas;
    }
    sched
        .validate()
        .map_err(|m| CliError::schema(path, m))?;
    Ok(sched)
}

/// Parses a DivisionProblem document, reporting schema violations with their
/// JSON path.
pub fn parse_division_problem(v: &Value, overrides: &Overrides) -> Result<DivisionProblem, CliError> {
    let root = v
        .as_object()
        .ok_or_else(|| CliError::schema("$", "problem must be an object"))?;
    let n = required(root, "n", "$")?
        .as_u64()
        .filter(|&n| (1..=8).contains(&n))
        .ok_or_else(|| CliError::schema("$.n", "must be an integer in 1..=8"))?
        as usize;
    let mode = match required(root, "mode", "$")?.as_str() {
        Some("determinant") => DivisionMode::Determinant,
        Some("product") => DivisionMode::Product,
        Some("power") => DivisionMode::Power,
        Some("koszul") => DivisionMode::Koszul,
        _ => {
            return Err(CliError::schema(
                "$.mode",
                "must be one of \"determinant\", \"product\", \"power\", \"koszul\"",
            ))
        }
    };
    let blocks_v = required(root, "blocks", "$")?
        .as_array()
        .ok_or_else(|| CliError::schema("$.blocks", "must be an array"))?;
    if blocks_v.is_empty() {
        return Err(CliError::schema("$.blocks", "must not be empty"));
    }
    let mut blocks: Vec<Vec<Vec<CPolynomial>>> = Vec::new();
    for (bi, block) in blocks_v.iter().enumerate() {
        let bpath = format!("$.blocks[{}]", bi);
        let obj = block
            .as_object()
            .ok_or_else(|| CliError::schema(&bpath, "block must be an object"))?;
        let m = required(obj, "m", &bpath)?
            .as_u64()
            .filter(|&m| m >= 1)
            .ok_or_else(|| CliError::schema(&format!("{}.m", bpath), "positive integer"))?
            as usize;
        let rows_v = required(obj, "rows", &bpath)?
            .as_array()
            .ok_or_else(|| CliError::schema(&format!("{}.rows", bpath), "must be an array"))?;
        let mut rows = Vec::new();
        for (ri, row) in rows_v.iter().enumerate() {
            let rpath = format!("{}.rows[{}]", bpath, ri);
            let row_arr = row
                .as_array()
                .ok_or_else(|| CliError::schema(&rpath, "row must be an array of polynomials"))?;
            if row_arr.len() != m {
                return Err(CliError::schema(
                    &rpath,
                    format!("row has {} entries, expected m = {}", row_arr.len(), m),
                ));
            }
            let mut entries = Vec::new();
            for (ci, poly) in row_arr.iter().enumerate() {
                entries.push(poly_from_value(poly, n, &format!("{}[{}]", rpath, ci))?);
            }
            rows.push(entries);
        }
        if rows.is_empty() {
            return Err(CliError::schema(&format!("{}.rows", bpath), "must not be empty"));
        }
        blocks.push(rows);
    }
    let phi = poly_from_value(required(root, "phi", "$")?, n, "$.phi")?;

    let mut problem = match mode {
        DivisionMode::Determinant => {
            if blocks.len() != 1 {
                return Err(CliError::schema("$.blocks", "determinant mode needs one block"));
            }
            DivisionProblem::determinant(n, blocks.remove(0), phi)
        }
        DivisionMode::Koszul => {
            if blocks.len() != 1 || blocks[0].len() != 1 {
                return Err(CliError::schema(
                    "$.blocks",
                    "koszul mode needs one block with one row",
                ));
            }
            DivisionProblem::koszul(n, blocks.remove(0).remove(0), phi)
        }
        DivisionMode::Product => {
            let mut tuples = Vec::new();
            for (bi, mut rows) in blocks.into_iter().enumerate() {
                if rows.len() != 1 {
                    return Err(CliError::schema(
                        &format!("$.blocks[{}].rows", bi),
                        "product mode blocks carry one row each",
                    ));
                }
                tuples.push(rows.remove(0));
            }
            DivisionProblem::product(n, tuples, phi)
        }
        DivisionMode::Power => {
            if blocks.len() != 1 || blocks[0].len() != 1 {
                return Err(CliError::schema(
                    "$.blocks",
                    "power mode needs one block with one row",
                ));
            }
            let r = required(root, "r", "$")?
                .as_u64()
                .filter(|&r| (1..=8).contains(&r))
                .ok_or_else(|| CliError::schema("$.r", "must be an integer in 1..=8"))?
                as usize;
            DivisionProblem::power(n, blocks.remove(0).remove(0), r, phi)
        }
    }
    .map_err(|e| CliError::Problem(e.to_string()))?;

    if let Some(pv) = root.get("pattern") {
        let arr = pv
            .as_array()
            .ok_or_else(|| CliError::schema("$.pattern", "must be an array of integers"))?;
        let mut pattern = Vec::new();
        for (i, x) in arr.iter().enumerate() {
            pattern.push(x.as_u64().ok_or_else(|| {
                CliError::schema(&format!("$.pattern[{}]", i), "must be a nonnegative integer")
            })? as u32);
        }
        problem.pattern = Some(pattern);
    }
    if let Some(tv) = root.get("test_points") {
        let arr = tv
            .as_array()
            .ok_or_else(|| CliError::schema("$.test_points", "must be an array of points"))?;
        let mut pts = Vec::new();
        for (i, p) in arr.iter().enumerate() {
            pts.push(point_from_value(p, n, &format!("$.test_points[{}]", i))?);
        }
        if pts.is_empty() {
            return Err(CliError::schema("$.test_points", "must not be empty"));
        }
        problem.test_points = pts;
    }
    problem.quad = parse_quadrature(root.get("quadrature"), "$.quadrature")?;
    problem.kernel = parse_kernel(root.get("kernel"), "$.kernel")?;
    problem.schedule = parse_schedule(root.get("lambda_schedule"), "$.lambda_schedule")?;
    if let Some(v) = root.get("residual_threshold") {
        problem.residual_threshold = v
            .as_f64()
            .filter(|&t| t > 0.0)
            .ok_or_else(|| CliError::schema("$.residual_threshold", "positive number"))?;
    }
    if let Some(v) = root.get("convergence_curve") {
        problem.convergence_curve = v
            .as_bool()
            .ok_or_else(|| CliError::schema("$.convergence_curve", "boolean"))?;
    }
    if let Some(v) = root.get("lambda_crosscheck") {
        problem.lambda_crosscheck = v
            .as_bool()
            .ok_or_else(|| CliError::schema("$.lambda_crosscheck", "boolean"))?;
    }
    if let Some(v) = root.get("psi_fit_degree") {
        problem.psi_fit_degree = Some(
            v.as_u64()
                .filter(|&d| d <= 8)
                .ok_or_else(|| CliError::schema("$.psi_fit_degree", "integer in 0..=8"))?
                as u32,
        );
    }

    if let Some(nodes) = overrides.nodes {
        problem.quad.nodes = nodes;
    }
    if let Some(s) = overrides.scheme {
        problem.quad.scheme = s;
    }
    if let Some(seed) = overrides.seed {
        problem.quad.seed = seed;
    }
    if let Some(ls) = &overrides.lambda_schedule {
        problem.schedule.lambdas = ls.clone();
        problem
            .schedule
            .validate()
            .map_err(|m| CliError::schema("$.lambda_schedule", m))?;
    }
    if overrides.r0.is_some() || overrides.r1.is_some() {
        let r0 = overrides.r0.unwrap_or(problem.kernel.r0);
        let r1 = overrides.r1.unwrap_or(problem.kernel.r1);
        if !(1.0 < r0 && r0 < r1) {
            return Err(CliError::schema("$.kernel", "need 1 < r0 < r1"));
        }
        problem.kernel = KernelConfig::new(r0, r1);
    }
    problem
        .validate()
        .map_err(|e| CliError::Problem(e.to_string()))?;
    Ok(problem)
}

/// The resolved semantic configuration embedded in every report.
pub fn resolved_config(problem: &DivisionProblem) -> Value {
    let blocks: Vec<Value> = match problem.mode {
        DivisionMode::Determinant => vec![json!({
            "m": problem.matrix.m,
            "rows": problem.tuples.iter().map(|row| {
                Value::Array(row.iter().map(|p| serde_json::to_value(poly_to_records(p)).unwrap()).collect())
            }).collect::<Vec<_>>(),
        })],
        _ => problem
            .tuples
            .iter()
            .map(|tuple| {
                json!({
                    "m": tuple.len(),
                    "rows": [Value::Array(tuple.iter().map(|p| serde_json::to_value(poly_to_records(p)).unwrap()).collect::<Vec<_>>())],
                })
            })
            .collect(),
    };
    let mut cfg = Map::new();
    cfg.insert("n".into(), json!(problem.n));
    cfg.insert("mode".into(), serde_json::to_value(problem.mode).unwrap());
    cfg.insert("blocks".into(), Value::Array(blocks));
    if let Some(r) = problem.power_exponent {
        cfg.insert("r".into(), json!(r));
    }
    cfg.insert(
        "phi".into(),
        serde_json::to_value(poly_to_records(&problem.phi)).unwrap(),
    );
    if let Some(p) = &problem.pattern {
        cfg.insert("pattern".into(), json!(p));
    }
    cfg.insert(
        "test_points".into(),
        Value::Array(
            problem
                .test_points
                .iter()
                .map(|z| {
                    Value::Array(
                        z.0.iter()
                            .map(|c| json!([c.re, c.im]))
                            .collect(),
                    )
                })
                .collect(),
        ),
    );
    cfg.insert(
        "quadrature".into(),
        serde_json::to_value(&problem.quad).unwrap(),
    );
    cfg.insert(
        "kernel".into(),
        serde_json::to_value(problem.kernel).unwrap(),
    );
    cfg.insert(
        "lambda_schedule".into(),
        serde_json::to_value(&problem.schedule).unwrap(),
    );
    cfg.insert(
        "residual_threshold".into(),
        json!(problem.residual_threshold),
    );
    cfg.insert("convergence_curve".into(), json!(problem.convergence_curve));
    cfg.insert("lambda_crosscheck".into(), json!(problem.lambda_crosscheck));
    if let Some(d) = problem.psi_fit_degree {
        cfg.insert("psi_fit_degree".into(), json!(d));
    }
    Value::Object(cfg)
}

// ---------------------------------------------------------------------------
// subcommand runners

pub struct CommandOutput {
    pub exit_code: i32,
    pub report_json: String,
}

pub fn run_divide(input_json: &str, overrides: &Overrides) -> CommandOutput {
    let parsed: Value = match serde_json::from_str(input_json) {
        Ok(v) => v,
        Err(e) => return error_output(&CliError::Json(e)),
    };
    let problem = match parse_division_problem(&parsed, overrides) {
        Ok(p) => p,
        Err(e) => return error_output(&e),
    };
    let report = match division::solve_division(&problem) {
        Ok(r) => r,
        Err(e) => return error_output(&CliError::Problem(e.to_string())),
    };
    let exit = match report.verdict {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    };
    let file = divide_report_value(&problem, &report);
    CommandOutput {
        exit_code: exit,
        report_json: pretty(&file),
    }
}

pub fn divide_report_value(problem: &DivisionProblem, report: &DivisionReport) -> Value {
    let mut out = Map::new();
    out.insert("config".into(), resolved_config(problem));
    let report_v = serde_json::to_value(report).unwrap();
    if let Value::Object(fields) = report_v {
        for (k, v) in fields {
            out.insert(k, v);
        }
    }
    Value::Object(out)
}

pub fn run_size_check(input_json: &str, overrides: &Overrides) -> CommandOutput {
    let parsed: Value = match serde_json::from_str(input_json) {
        Ok(v) => v,
        Err(e) => return error_output(&CliError::Json(e)),
    };
    let problem = match parse_division_problem(&parsed, overrides) {
        Ok(p) => p,
        Err(e) => return error_output(&e),
    };
    let report: SizeConditionReport = division::size_condition_estimate(&problem);
    let mut out = Map::new();
    out.insert("config".into(), resolved_config(&problem));
    out.insert(
        "size_condition".into(),
        serde_json::to_value(&report).unwrap(),
    );
    let exit = if report.holds { EXIT_PASS } else { EXIT_FAIL };
    CommandOutput {
        exit_code: exit,
        report_json: pretty(&Value::Object(out)),
    }
}

#[derive(Debug, Clone, Serialize)]
struct ResiduePairOut {
    k: u32,
    phi: Vec<TermRecord>,
    lambda_table: Vec<(f64, [f64; 2])>,
    extrapolated: [f64; 2],
    error_estimate: f64,
    nodes_in_region: usize,
    nodes_skipped: usize,
}

/// Residue subcommand input: the same matrix schema plus
/// `"pairs": [{"k": int, "phi": poly}]` and
/// `"testform": {"profile": "bump", "scale": s, "dz": [1, .., n]}`.
pub fn run_residue(input_json: &str, overrides: &Overrides) -> CommandOutput {
    let parsed: Value = match serde_json::from_str(input_json) {
        Ok(v) => v,
        Err(e) => return error_output(&CliError::Json(e)),
    };
    match run_residue_inner(&parsed, overrides) {
        Ok(out) => out,
        Err(e) => error_output(&e),
    }
}

fn run_residue_inner(parsed: &Value, overrides: &Overrides) -> Result<CommandOutput, CliError> {
    let root = parsed
        .as_object()
        .ok_or_else(|| CliError::schema("$", "problem must be an object"))?;
    // Reuse the division schema for the matrix part; pairs drive the runs.
    let mut shim = root.clone();
    shim.remove("pairs");
    shim.remove("testform");
    if !shim.contains_key("phi") {
        shim.insert("phi".into(), json!([]));
    }
    let problem = parse_division_problem(&Value::Object(shim), overrides)?;
    let n = problem.n;

    let (scale, dz_mask) = match root.get("testform") {
        None => (0.9f64, (1u32 << n) - 1),
        Some(v) => {
            let obj = v
                .as_object()
                .ok_or_else(|| CliError::schema("$.testform", "must be an object"))?;
            if let Some(p) = obj.get("profile") {
                if p.as_str() != Some("bump") {
                    return Err(CliError::schema("$.testform.profile", "only \"bump\" is available"));
                }
            }
            let scale = obj
                .get("scale")
                .and_then(|s| s.as_f64())
                .unwrap_or(0.9);
            if !(0.0 < scale && scale <= 1.0) {
                return Err(CliError::schema("$.testform.scale", "must be in (0, 1]"));
            }
            let mask = match obj.get("dz") {
                None => (1u32 << n) - 1,
                Some(d) => {
                    let arr = d
                        .as_array()
                        .ok_or_else(|| CliError::schema("$.testform.dz", "array of indices"))?;
                    let mut mask = 0u32;
                    for (i, x) in arr.iter().enumerate() {
                        let idx = x.as_u64().filter(|&v| v >= 1 && v <= n as u64).ok_or_else(
                            || {
                                CliError::schema(
                                    &format!("$.testform.dz[{}]", i),
                                    format!("index must be in 1..={}", n),
                                )
                            },
                        )?;
                        mask |= 1u32 << (idx - 1);
                    }
                    mask
                }
            };
            (scale, mask)
        }
    };

    let pairs_v = required(root, "pairs", "$")?
        .as_array()
        .ok_or_else(|| CliError::schema("$.pairs", "must be an array"))?;
    let dims = problem.dims();
    let mut pair_outs = Vec::new();
    let mut any_diverged = false;
    for (pi, pair) in pairs_v.iter().enumerate() {
        let ppath = format!("$.pairs[{}]", pi);
        let obj = pair
            .as_object()
            .ok_or_else(|| CliError::schema(&ppath, "pair must be an object"))?;
        let k = required(obj, "k", &ppath)?
            .as_u64()
            .filter(|&k| k >= 1)
            .ok_or_else(|| CliError::schema(&format!("{}.k", ppath), "positive integer"))?
            as u32;
        let phi = poly_from_value(required(obj, "phi", &ppath)?, n, &format!("{}.phi", ppath))?;
        let testform = move |zeta: &ComplexPoint| -> crate::graded::GradedElement {
            let mut el = crate::graded::GradedElement::scalar(
                dims,
                C64::new(quadrature::bump_test_factor(scale, zeta), 0.0),
            );
            for l in 0..n {
                if dz_mask & (1u32 << l) != 0 {
                    el = el
                        .wedge(&crate::graded::GradedElement::dz_gen(
                            dims,
                            l + 1,
                            C64::new(1.0, 0.0),
                        ))
                        .expect("same dims");
                }
            }
            el
        };
        match quadrature::residue_pair(
            &problem.matrix,
            k,
            &phi,
            &testform,
            &problem.schedule,
            &problem.quad,
        ) {
            Ok(pairing) => pair_outs.push(ResiduePairOut {
                k,
                phi: poly_to_records(&phi),
                lambda_table: pairing
                    .lambda_table
                    .iter()
                    .map(|(l, v)| (*l, [v.re, v.im]))
                    .collect(),
                extrapolated: [pairing.value.re, pairing.value.im],
                error_estimate: pairing.error_estimate,
                nodes_in_region: pairing.nodes_in_region,
                nodes_skipped: pairing.nodes_skipped,
            }),
            Err(QuadratureError::ExtrapolationDiverged { gap, tol }) => {
                any_diverged = true;
                pair_outs.push(ResiduePairOut {
                    k,
                    phi: poly_to_records(&phi),
                    lambda_table: Vec::new(),
                    extrapolated: [f64::NAN, f64::NAN],
                    error_estimate: gap.max(tol),
                    nodes_in_region: 0,
                    nodes_skipped: 0,
                });
            }
            Err(e) => return Err(CliError::Problem(e.to_string())),
        }
    }
    let mut out = Map::new();
    out.insert("config".into(), resolved_config(&problem));
    out.insert(
        "testform".into(),
        json!({"profile": "bump", "scale": scale, "dz": (0..n).filter(|l| dz_mask & (1u32 << l) != 0).map(|l| l + 1).collect::<Vec<_>>() }),
    );
    out.insert("pairs".into(), serde_json::to_value(&pair_outs).unwrap());
    Ok(CommandOutput {
        exit_code: if any_diverged { EXIT_FAIL } else { EXIT_PASS },
        report_json: pretty(&Value::Object(out)),
    })
}

pub fn run_identities(mutation: Option<identities::Mutation>) -> CommandOutput {
    let report = identities::run_suite(mutation);
    let exit = if report.all_pass { EXIT_PASS } else { EXIT_FAIL };
    CommandOutput {
        exit_code: exit,
        report_json: pretty(&serde_json::to_value(&report).unwrap()),
    }
}

fn error_output(err: &CliError) -> CommandOutput {
    let v = match err {
        CliError::Schema { path, message } => json!({
            "error": "schema",
            "path": path,
            "message": message,
        }),
        other => json!({
            "error": "invalid-input",
            "message": other.to_string(),
        }),
    };
    CommandOutput {
        exit_code: EXIT_ERROR,
        report_json: pretty(&v),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
