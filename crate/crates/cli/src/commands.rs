//! One function per subcommand. Each reads its inputs from a
//! [`RunManifest`] and returns a JSON document, optional CSV rows and a
//! verdict.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use lempert::linalg::{c, parse_complex, CVec, C64};
use lempert::metrics::{carath_lower, lempert_upper_with, LempertOptions};
use lempert::retractions::{verify_retraction, RetractionSpec, VERIFY_TOL};
use lempert::verify::{
    admissible_planes, generic_planes, l3_obstruction, l3_obstruction_closed_form, l3_obstruction_direct,
    lemma41_battery, linear_retract_feasibility, remfzero_decay_check, Feasibility, PlaneSpec,
};
use lempert::DomainDescriptor;
use serde::Serialize;
use serde_json::{json, Value};

use crate::json::fmt_f64;
use crate::manifest::RunManifest;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Negative,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

pub struct Outcome {
    pub json: Value,
    pub table: Table,
    pub verdict: Verdict,
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Negative
    }
}

pub fn execute(m: &RunManifest) -> Result<Outcome, CliError> {
    let p = Params(&m.parameters);
    match m.subcommand.as_str() {
        "membership" => membership(&p),
        "verify-retraction" => verify(m, &p),
        "lemma-suite" => match p.str("suite")?.as_str() {
            "lemma41" => lemma41(m, &p),
            "l3-obstruction" => l3(m, &p),
            "linret-classify" => linret(m, &p),
            "remfzero" => remfzero(m, &p),
            other => Err(CliError::Usage(format!(
                "unknown suite `{other}` (expected lemma41, l3-obstruction, linret-classify or remfzero)"
            ))),
        },
        "metric" => metric(m, &p),
        "" => Err(CliError::Usage("manifest has no subcommand".into())),
        other => Err(CliError::Usage(format!("unknown subcommand `{other}`"))),
    }
}

struct Params<'a>(&'a BTreeMap<String, Value>);

impl Params<'_> {
    fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    fn require(&self, key: &str) -> Result<&Value, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Usage(format!("missing parameter `{key}`")))
    }

    fn str(&self, key: &str) -> Result<String, CliError> {
        match self.require(key)? {
            Value::String(s) => Ok(s.clone()),
            v => Err(CliError::Usage(format!("parameter `{key}` must be a string, got {v}"))),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| CliError::Usage(format!("parameter `{key}` must be a non-negative integer"))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| CliError::Usage(format!("parameter `{key}` must be a number"))),
        }
    }

    fn domain(&self, key: &str) -> Result<DomainDescriptor, CliError> {
        let d: DomainDescriptor = self.str(key)?.parse()?;
        d.validate()?;
        Ok(d)
    }

    fn point(&self, key: &str) -> Result<CVec, CliError> {
        to_cvec(self.require(key)?).map_err(|e| CliError::Usage(format!("parameter `{key}`: {e}")))
    }
}

/// A point given as a literal string (`"0.5, -i/2, 0"`) or as an array of
/// numbers or `[re, im]` pairs.
fn to_cvec(v: &Value) -> Result<CVec, String> {
    match v {
        Value::String(s) => s.parse::<CVec>().map_err(|e| e.to_string()),
        Value::Array(items) => items.iter().map(to_complex).collect::<Result<Vec<_>, _>>().map(CVec::new),
        other => Err(format!("expected a point, got {other}")),
    }
}

fn to_complex(v: &Value) -> Result<C64, String> {
    match v {
        Value::Number(n) => n.as_f64().map(|x| c(x, 0.0)).ok_or_else(|| "bad number".into()),
        Value::String(s) => parse_complex(s).map_err(|e| e.to_string()),
        Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
            (Some(re), Some(im)) => Ok(c(re, im)),
            _ => Err(format!("bad complex pair {v}")),
        },
        other => Err(format!("expected a complex number, got {other}")),
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn cvec_cell(z: &CVec) -> String {
    z.iter()
        .map(|x| {
            let sign = if x.im.is_sign_negative() { "" } else { "+" };
            format!("{}{sign}{}i", fmt_f64(x.re), fmt_f64(x.im))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn complex_cell(z: C64) -> (String, String) {
    (fmt_f64(z.re), fmt_f64(z.im))
}

fn membership(p: &Params) -> Result<Outcome, CliError> {
    let domain = p.domain("domain")?;
    let point = p.point("point")?;
    let member = domain.contains(&point)?;
    let gauge = domain.gauge(&point)?;
    let mut table = Table::new(&["domain", "point", "member", "gauge"]);
    table
        .rows
        .push(vec![domain.name(), cvec_cell(&point), member.to_string(), fmt_f64(gauge)]);
    Ok(Outcome {
        json: json!({
            "subcommand": "membership",
            "domain": domain.name(),
            "point": to_json(&point),
            "member": member,
            "gauge_or_witness": gauge,
        }),
        table,
        verdict: verdict(member),
    })
}

/// A retraction parameter is either a family name (`"tetra_royal"`) or a
/// full object with a `family` tag.
fn retraction_spec(v: &Value) -> Result<RetractionSpec, CliError> {
    let obj = match v {
        Value::String(s) => json!({ "family": s }),
        other => other.clone(),
    };
    let spec: RetractionSpec =
        serde_json::from_value(obj).map_err(|e| CliError::Usage(format!("bad retraction: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

fn verify(m: &RunManifest, p: &Params) -> Result<Outcome, CliError> {
    let spec = retraction_spec(p.require("retraction")?)?;
    let domain = match p.get("domain") {
        Some(_) => p.domain("domain")?,
        None => spec.domain(),
    };
    let samples = m.samples.unwrap_or(10_000);
    let seed = m.seed.unwrap_or(0);
    let tol = m.tolerance.unwrap_or(VERIFY_TOL);
    let report = verify_retraction(&spec, &domain, samples, seed, tol)?;
    let mut table = Table::new(&["check", "max_violation", "tolerance", "samples", "passed", "witness"]);
    for ch in &report.checks {
        table.rows.push(vec![
            ch.name.clone(),
            fmt_f64(ch.max_violation),
            fmt_f64(ch.tolerance),
            ch.samples.to_string(),
            ch.passed.to_string(),
            cvec_cell(&ch.witness),
        ]);
    }
    Ok(Outcome {
        json: json!({
            "subcommand": "verify-retraction",
            "retraction": to_json(&spec),
            "domain": domain.name(),
            "seed": seed,
            "samples": samples,
            "tolerance": tol,
            "passed": report.passed(),
            "report": to_json(&report),
        }),
        table,
        verdict: verdict(report.passed()),
    })
}

fn lemma41(m: &RunManifest, p: &Params) -> Result<Outcome, CliError> {
    let grid = p.usize_or("grid", 64)?;
    let failing = p.usize_or("failing", 100)?;
    let seed = m.seed.unwrap_or(0);
    let cases = lemma41_battery(seed, failing, grid)?;
    let consistent = cases.iter().all(|c| c.consistent);
    let holding_max = cases
        .iter()
        .filter(|c| c.expected_holds)
        .map(|c| c.max_violation)
        .fold(0.0, f64::max);
    let failing_min = cases
        .iter()
        .filter(|c| !c.expected_holds)
        .map(|c| c.max_violation)
        .fold(f64::INFINITY, f64::min);
    let mut table = Table::new(&[
        "alpha_re", "alpha_im", "beta_re", "beta_im", "expected_holds", "max_violation", "consistent",
    ]);
    for case in &cases {
        let (ar, ai) = complex_cell(case.alpha);
        let (br, bi) = complex_cell(case.beta);
        table.rows.push(vec![
            ar,
            ai,
            br,
            bi,
            case.expected_holds.to_string(),
            fmt_f64(case.max_violation),
            case.consistent.to_string(),
        ]);
    }
    Ok(Outcome {
        json: json!({
            "subcommand": "lemma-suite",
            "suite": "lemma41",
            "seed": seed,
            "grid": grid,
            "consistent": consistent,
            "holding_max_violation": holding_max,
            "failing_min_violation": failing_min,
            "cases": to_json(&cases),
        }),
        table,
        verdict: verdict(consistent),
    })
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// `r` on `[0.05, 0.95]`, `|a|` on `[0, 0.95]` with phases spread by the
/// golden ratio; the identity is checked against the closed form and, on
/// every case, against the minimum computed from the projection itself.
fn l3(m: &RunManifest, p: &Params) -> Result<Outcome, CliError> {
    let grid = p.usize_or("grid", 50)?.max(2);
    let tol = m.tolerance.unwrap_or(1e-12);
    let direct_tol = p.f64_or("direct_tol", 1e-9)?;
    let direct_grid = p.usize_or("direct_grid", 256)?;
    let mut max_dev: f64 = 0.0;
    let mut max_direct_dev: f64 = 0.0;
    let mut min_value = f64::INFINITY;
    let mut table = Table::new(&["a_re", "a_im", "r", "value", "closed_form", "direct"]);
    for i in 0..grid {
        let r = 0.05 + 0.9 * i as f64 / (grid - 1) as f64;
        for j in 0..grid {
            let modulus = 0.95 * j as f64 / (grid - 1) as f64;
            let a = C64::from_polar(modulus, TAU * (j as f64 * GOLDEN).fract());
            let v = l3_obstruction(a, r)?;
            let cf = l3_obstruction_closed_form(a, r);
            let direct = l3_obstruction_direct(a, r, direct_grid)?;
            max_dev = max_dev.max((v - cf).abs());
            max_direct_dev = max_direct_dev.max((direct - cf).abs());
            min_value = min_value.min(v);
            let (ar, ai) = complex_cell(a);
            table
                .rows
                .push(vec![ar, ai, fmt_f64(r), fmt_f64(v), fmt_f64(cf), fmt_f64(direct)]);
        }
    }
    let ok = max_dev <= tol && max_direct_dev <= direct_tol && min_value > 0.0;
    Ok(Outcome {
        json: json!({
            "subcommand": "lemma-suite",
            "suite": "l3-obstruction",
            "grid": grid,
            "tolerance": tol,
            "direct_tolerance": direct_tol,
            "cases": grid * grid,
            "max_deviation": max_dev,
            "max_direct_deviation": max_direct_dev,
            "min_value": min_value,
            "consistent": ok,
        }),
        table,
        verdict: verdict(ok),
    })
}

fn linret(m: &RunManifest, p: &Params) -> Result<Outcome, CliError> {
    let tol = m.tolerance.unwrap_or(1e-6);
    let seed = m.seed.unwrap_or(0);
    let budget = p.usize_or("budget", 20_000)?;
    let planes: Vec<PlaneSpec> = match p.get("plane") {
        Some(v) => {
            let vector = |key: &str| {
                v.get(key)
                    .ok_or_else(|| format!("missing `{key}`"))
                    .and_then(to_cvec)
                    .map_err(|e| CliError::Usage(format!("bad plane: {e}")))
            };
            vec![PlaneSpec::new(vector("u")?, vector("v")?)?]
        }
        None => {
            let alphas: Vec<C64> = match p.get("alphas") {
                Some(Value::Array(items)) => items
                    .iter()
                    .map(to_complex)
                    .collect::<Result<_, _>>()
                    .map_err(|e| CliError::Usage(format!("parameter `alphas`: {e}")))?,
                Some(_) => return Err(CliError::Usage("parameter `alphas` must be an array".into())),
                None => vec![c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0), c(0.0, 1.0), C64::from_polar(1.0, 2.0)],
            };
            let mut v = admissible_planes(&alphas);
            v.extend(generic_planes(p.usize_or("generic", 4)?, seed));
            v
        }
    };
    let mut results = Vec::new();
    let mut table = Table::new(&["plane", "admissible", "status", "norm", "lipschitz_estimate", "consistent"]);
    let mut all_ok = true;
    for (k, plane) in planes.iter().enumerate() {
        let res = linear_retract_feasibility(plane, tol, budget, seed.wrapping_add(k as u64))?;
        let admissible = plane.is_admissible();
        let expected = if admissible { Feasibility::Feasible } else { Feasibility::Infeasible };
        let consistent = res.status == expected;
        all_ok &= consistent;
        table.rows.push(vec![
            format!("{} | {}", cvec_cell(&plane.u), cvec_cell(&plane.v)),
            admissible.to_string(),
            format!("{:?}", res.status).to_lowercase(),
            fmt_f64(res.norm),
            fmt_f64(res.lipschitz_estimate),
            consistent.to_string(),
        ]);
        results.push(json!({
            "plane": to_json(plane),
            "admissible": admissible,
            "consistent": consistent,
            "result": to_json(&res),
        }));
    }
    Ok(Outcome {
        json: json!({
            "subcommand": "lemma-suite",
            "suite": "linret-classify",
            "seed": seed,
            "tolerance": tol,
            "budget": budget,
            "consistent": all_ok,
            "planes": results,
        }),
        table,
        verdict: verdict(all_ok),
    })
}

/// Candidate third coordinate: `"zero"` or a constant complex value.
fn remfzero(m: &RunManifest, p: &Params) -> Result<Outcome, CliError> {
    let tol = m.tolerance.unwrap_or(1e-12);
    let points = m.samples.unwrap_or(256);
    let shells: Vec<f64> = match p.get("shells") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| CliError::Usage(format!("bad shells: {e}")))?,
        None => vec![0.1, 0.01, 0.001],
    };
    let (label, value) = match p.get("f") {
        None => ("zero".to_string(), C64::new(0.0, 0.0)),
        Some(Value::String(s)) if s == "zero" => ("zero".to_string(), C64::new(0.0, 0.0)),
        Some(v) => {
            let z = to_complex(v).map_err(|e| CliError::Usage(format!("parameter `f`: {e}")))?;
            (format!("constant {}", z), z)
        }
    };
    let out = remfzero_decay_check(|_| value, &shells, points, tol)?;
    let mut table = Table::new(&["eps", "allowed_bound", "max_violation", "passed"]);
    for ((eps, bound), check) in out.bounds.iter().zip(&out.report.checks) {
        table.rows.push(vec![
            fmt_f64(*eps),
            fmt_f64(*bound),
            fmt_f64(check.max_violation),
            check.passed.to_string(),
        ]);
    }
    let passed = out.report.passed();
    Ok(Outcome {
        json: json!({
            "subcommand": "lemma-suite",
            "suite": "remfzero",
            "f": label,
            "points_per_shell": points,
            "tolerance": tol,
            "passed": passed,
            "bounds": to_json(&out.bounds),
            "report": to_json(&out.report),
        }),
        table,
        verdict: verdict(passed),
    })
}

fn metric(m: &RunManifest, p: &Params) -> Result<Outcome, CliError> {
    let domain = p.domain("domain")?;
    let z = p.point("z")?;
    let w = p.point("w")?;
    let opts = LempertOptions {
        degree: p.usize_or("degree", 4)?,
        budget: p.usize_or("budget", 10_000)?,
        restarts: p.usize_or("restarts", 6)?,
        seed: m.seed.unwrap_or(0),
        ..LempertOptions::default()
    };
    let family_size = p.usize_or("family_size", 64)?;
    let tol = m.tolerance.unwrap_or(1e-6);
    let lower = carath_lower(&domain, &z, &w, family_size)?;
    let up = lempert_upper_with(&domain, &z, &w, &opts)?;
    let gap = up.value - lower;
    let ok = gap <= tol;
    let mut table = Table::new(&["domain", "z", "w", "lower", "upper", "gap"]);
    table.rows.push(vec![
        domain.name(),
        cvec_cell(&z),
        cvec_cell(&w),
        fmt_f64(lower),
        fmt_f64(up.value),
        fmt_f64(gap),
    ]);
    Ok(Outcome {
        json: json!({
            "subcommand": "metric",
            "domain": domain.name(),
            "z": to_json(&z),
            "w": to_json(&w),
            "lower": lower,
            "upper": up.value,
            "gap": gap,
            "budget": opts.budget,
            "degree": opts.degree,
            "family_size": family_size,
            "seed": opts.seed,
            "tolerance": tol,
            "disc_source": up.source,
            "diagnostics": up.diagnostics,
        }),
        table,
        verdict: verdict(ok),
    })
}
