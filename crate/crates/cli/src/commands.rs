use std::io::Write;
use std::path::Path;

use serde::Serialize;

use qsp_core::dynamics::{
    limit_estimate, trajectory, trajectory_chained, Distribution, LimitReport, Omega, StepMode,
};
use qsp_core::families::{classify_m7_type, FamilyValue, MatrixFamily, Shape, TimeDomain, Violation};
use qsp_core::kce::{square_kce_residual, verify_grid, KceReport, TimeGrid};
use qsp_core::stochasticity::{classify as classify_cubic, square_class};
use qsp_core::{CubicMatrix, SquareMatrix, StochKind};

use crate::config::{parse_grid, parse_list, parse_op, FamilySource, Params};
use crate::files::{matrix_json, read_matrix, trajectory_csv, trajectory_json, write_file, MatrixData};
use crate::{
    ClassifyArgs, CliError, EvalArgs, FamilyArgs, Format, Mode, SimulateArgs, Status, VerifyArgs,
};

const SHOWN_VIOLATIONS: usize = 5;

fn grid_or_default(spec: Option<&str>) -> Result<(TimeGrid, TimeDomain), CliError> {
    match spec {
        Some(s) => parse_grid(s),
        None => Ok((TimeGrid::default_continuous(), TimeDomain::Continuous)),
    }
}

fn build_family(args: &FamilyArgs, domain: TimeDomain) -> Result<MatrixFamily, CliError> {
    let family = args
        .family
        .as_deref()
        .ok_or_else(|| CliError::Usage("--family is required".into()))?;
    let params = Params::parse(&args.params)?;
    FamilySource {
        family,
        b_family: args.b_family.as_deref(),
        c_family: args.c_family.as_deref(),
        params: &params,
        domain,
    }
    .build()
}

fn write_violations(out: &mut dyn Write, violations: &[Violation]) -> std::io::Result<()> {
    if violations.is_empty() {
        return writeln!(out, "domain: no violations");
    }
    writeln!(out, "domain: {} violation(s)", violations.len())?;
    for v in violations.iter().take(SHOWN_VIOLATIONS) {
        writeln!(out, "  at (s={}, t={}): {} (value {})", v.s, v.t, v.inequality, v.value)?;
    }
    if violations.len() > SHOWN_VIOLATIONS {
        writeln!(out, "  ... {} more", violations.len() - SHOWN_VIOLATIONS)?;
    }
    Ok(())
}

fn verdict_line(out: &mut dyn Write, ok: bool) -> std::io::Result<()> {
    writeln!(out, "verdict: {}", if ok { "PASS" } else { "FAIL" })
}

fn json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

#[derive(Serialize)]
struct SquareReport {
    family: String,
    tol: f64,
    worst_residual: f64,
    worst_triple: (f64, f64, f64),
    domain_violations: Vec<Violation>,
    errors: Vec<String>,
    verdict: bool,
}

pub fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    let (grid, domain) = grid_or_default(args.grid.as_deref())?;
    let fam = build_family(&args.family, domain)?;
    if fam.shape() == Shape::Cubic {
        let sigma = args
            .sigma
            .ok_or_else(|| CliError::Usage("--sigma is required for cubic families".into()))?;
        let op = parse_op(&args.op, fam.m())?;
        let report = verify_grid(&fam, &op, &grid, sigma, args.tol)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        write_cubic_report(out, &report, grid.times().len())?;
        if let Some(path) = &args.out {
            write_file(path, &json(&report))?;
        }
        return Ok(Status::from_ok(report.verdict));
    }

    let mut errors = Vec::new();
    let mut worst = (0.0_f64, (f64::NAN, f64::NAN, f64::NAN));
    for (s, tau, t) in grid.triples() {
        let r = match square_kce_residual(&fam, s, tau, t) {
            Ok(r) if !r.is_nan() => r,
            Ok(_) => f64::INFINITY,
            Err(e) => {
                errors.push(format!("(s={s}, tau={tau}, t={t}): {e}"));
                f64::INFINITY
            }
        };
        if r > worst.0 || worst.1 .0.is_nan() {
            worst = (r, (s, tau, t));
        }
    }
    let domain_violations = fam.validate_domain(&grid.pairs());
    let verdict = worst.0 <= args.tol && domain_violations.is_empty() && errors.is_empty();
    let report = SquareReport {
        family: fam.id().to_string(),
        tol: args.tol,
        worst_residual: worst.0,
        worst_triple: worst.1,
        domain_violations,
        errors,
        verdict,
    };
    writeln!(
        out,
        "family {} ({:?}), {} grid points",
        report.family,
        fam.shape(),
        grid.times().len()
    )?;
    let (s, tau, t) = report.worst_triple;
    writeln!(out, "worst residual {:.3e} at (s={s}, tau={tau}, t={t})", report.worst_residual)?;
    for e in report.errors.iter().take(SHOWN_VIOLATIONS) {
        writeln!(out, "error {e}")?;
    }
    write_violations(out, &report.domain_violations)?;
    verdict_line(out, report.verdict)?;
    if let Some(path) = &args.out {
        write_file(path, &json(&report))?;
    }
    Ok(Status::from_ok(report.verdict))
}

fn write_cubic_report(out: &mut dyn Write, r: &KceReport, points: usize) -> std::io::Result<()> {
    writeln!(
        out,
        "family {}, op {}, sigma {}, {} grid points, tol {:e}",
        r.family, r.op, r.sigma, points, r.tol
    )?;
    let (s, tau, t) = r.worst_triple;
    writeln!(
        out,
        "worst residual {:.3e} at (s={s}, tau={tau}, t={t}) over {} triples",
        r.worst_residual,
        r.triples.len()
    )?;
    let held = r.stochasticity.iter().filter(|p| p.holds).count();
    write!(out, "stochasticity: holds on {held}/{} pairs", r.stochasticity.len())?;
    if let Some(worst) = r
        .stochasticity
        .iter()
        .filter(|p| !p.holds)
        .max_by(|a, b| a.max_violation.total_cmp(&b.max_violation))
    {
        write!(
            out,
            ", worst violation {:.3e} at (s={}, t={})",
            worst.max_violation, worst.s, worst.t
        )?;
    }
    writeln!(out)?;
    for e in r.errors.iter().take(SHOWN_VIOLATIONS) {
        writeln!(out, "error {e}")?;
    }
    write_violations(out, &r.domain_violations)?;
    verdict_line(out, r.verdict)
}

fn kind_label(kind: StochKind) -> String {
    format!("S{}", kind.code()).to_ascii_uppercase().replace("STWICE", "TWICE")
}

fn write_cubic_class(out: &mut dyn Write, p: &CubicMatrix, tol: f64) -> std::io::Result<()> {
    let report = classify_cubic(p, tol);
    let kinds: Vec<String> = report.kinds.iter().map(|k| kind_label(*k)).collect();
    writeln!(out, "m = {}", p.m())?;
    if kinds.is_empty() {
        writeln!(out, "kinds: none")?;
    } else {
        writeln!(out, "kinds: {}", kinds.join(","))?;
    }
    writeln!(out, "violations:")?;
    for (kind, v) in &report.violations {
        writeln!(out, "  {:<6} {:.3e}", kind_label(*kind), v)?;
    }
    Ok(())
}

fn fmt_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    format!("[{}]", parts.join(", "))
}

fn write_square_class(out: &mut dyn Write, q: &SquareMatrix, tol: f64) -> std::io::Result<()> {
    let c = square_class(q, tol);
    writeln!(out, "m = {}", q.m())?;
    let summary = if c.doubly {
        "doubly stochastic".to_string()
    } else if c.left {
        "left stochastic (unit column sums)".to_string()
    } else if c.right {
        "right stochastic (unit row sums)".to_string()
    } else if !c.nonnegative {
        "not stochastic (negative entry)".to_string()
    } else {
        "not stochastic (sums differ from 1)".to_string()
    };
    writeln!(out, "{summary}")?;
    writeln!(out, "min entry {}", c.min_entry)?;
    writeln!(out, "row sums {}", fmt_list(&c.row_sums))?;
    writeln!(out, "column sums {}", fmt_list(&c.col_sums))?;
    writeln!(out, "total {}", c.total_sum)
}

pub fn classify(args: &ClassifyArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    if let Some(path) = &args.input {
        if args.m7 || args.family.family.is_some() {
            return Err(CliError::Usage("--input excludes --family and --m7".into()));
        }
        match read_matrix(path)? {
            MatrixData::Cubic(_) if args.square => {
                return Err(CliError::Usage(format!(
                    "{}: --square given but the file holds a cubic matrix",
                    path.display()
                )))
            }
            MatrixData::Cubic(p) => write_cubic_class(out, &p, args.tol)?,
            MatrixData::Square(q) => write_square_class(out, &q, args.tol)?,
        }
        return Ok(Status::Success);
    }

    if args.m7 {
        if args.family.family.is_some() {
            return Err(CliError::Usage("--m7 takes --b-family and --c-family, not --family".into()));
        }
        let (grid, domain) = grid_or_default(args.grid.as_deref())?;
        let params = Params::parse(&args.family.params)?;
        let spec = FamilySource {
            family: "M7",
            b_family: args.family.b_family.as_deref(),
            c_family: args.family.c_family.as_deref(),
            params: &params,
            domain,
        }
        .build_m7_spec()?;
        let pairs = grid.pairs();
        let types = classify_m7_type(&spec, &pairs, args.tol);
        let labels: Vec<&str> = types.iter().map(|t| t.label()).collect();
        writeln!(out, "B = {}, C = {}, {} grid pairs", spec.b.id(), spec.c.id(), pairs.len())?;
        writeln!(out, "types: {{{}}}", labels.join(", "))?;
        let violations = MatrixFamily::M7(spec).validate_domain(&pairs);
        write_violations(out, &violations)?;
        return Ok(Status::Success);
    }

    let domain = if args.grid.as_deref().is_some_and(|g| g.starts_with("int:")) {
        TimeDomain::Discrete
    } else {
        TimeDomain::Continuous
    };
    let fam = build_family(&args.family, domain)?;
    let value = match fam.eval_checked(args.s, args.t) {
        Ok(v) => v,
        Err(e) => {
            writeln!(out, "family {} at (s={}, t={}): {e}", fam.id(), args.s, args.t)?;
            return Ok(Status::Failure);
        }
    };
    writeln!(out, "family {} at (s={}, t={})", fam.id(), args.s, args.t)?;
    match value {
        FamilyValue::Cubic(p) => write_cubic_class(out, &p, args.tol)?,
        FamilyValue::Square(q) => write_square_class(out, &q, args.tol)?,
        FamilyValue::Scalar(x) => writeln!(out, "scalar value {x}")?,
    }
    Ok(Status::Success)
}

fn initial(args: &SimulateArgs, m: usize) -> Result<Distribution, CliError> {
    let x0 = match &args.x0 {
        Some(text) => {
            let probs = parse_list("--x0", text)?;
            if probs.len() != m {
                return Err(CliError::Usage(format!(
                    "--x0 has {} entries, the family has m = {m}",
                    probs.len()
                )));
            }
            Distribution::new(probs)
        }
        None => Distribution::uniform(m),
    };
    x0.map_err(|e| CliError::Usage(format!("--x0: {e}")))
}

#[derive(Serialize)]
struct LimitOutput<'a> {
    limit: &'a LimitReport,
}

fn write_limit(out: &mut dyn Write, rep: &LimitReport) -> std::io::Result<()> {
    match rep.omega {
        Omega::Converged(w) => writeln!(out, "omega {w:.16e}")?,
        Omega::Divergent => writeln!(out, "omega divergent")?,
    }
    writeln!(
        out,
        "admissible {} (|omega| <= {:.16e})",
        if rep.admissible { "yes" } else { "no" },
        rep.bound
    )?;
    match &rep.limit_distribution {
        Some(d) => {
            let parts: Vec<String> = d.probs().iter().map(|p| format!("{p:.16e}")).collect();
            writeln!(out, "limit {}", parts.join(","))
        }
        None => writeln!(out, "limit none"),
    }
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Status, CliError> {
    let (grid, domain) = grid_or_default(args.grid.as_deref())?;
    let fam = build_family(&args.family, domain)?;
    if fam.shape() != Shape::Cubic {
        return Err(CliError::Usage(format!("family {} is not cubic", fam.id())));
    }
    let x0 = initial(args, fam.m())?;
    let times = match &args.times {
        Some(text) => parse_list("--times", text)?,
        None => grid.times().iter().copied().filter(|t| *t > args.s).collect(),
    };
    if times.is_empty() {
        return Err(CliError::Usage("no sample times after s".into()));
    }
    if let Some(t) = times.iter().find(|t| t.partial_cmp(&&args.s) != Some(std::cmp::Ordering::Greater)) {
        return Err(CliError::Usage(format!("--times: {t} is not after s = {}", args.s)));
    }
    if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(format!("--times must increase, got {} then {}", w[0], w[1])));
    }

    let mode = match args.mode {
        Mode::Split => StepMode::Split,
        Mode::Quadratic => StepMode::Quadratic,
    };
    let result = if args.chained {
        trajectory_chained(&fam, mode, &x0, args.s, &times)
    } else {
        trajectory(&fam, mode, &x0, args.s, &times)
    };
    let tr = match result {
        Ok(tr) => tr,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(Status::Failure);
        }
    };

    let mode_name = match args.mode {
        Mode::Split => "split",
        Mode::Quadratic => "quadratic",
    };
    let family = fam.id().to_string();
    let text = match args.format {
        Format::Csv => trajectory_csv(&tr),
        Format::Json => trajectory_json(&tr, &family, mode_name, args.chained),
    };
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }

    if args.limit {
        let rep = limit_estimate(&fam, args.s, &times, &x0)
            .map_err(|e| CliError::Usage(format!("--limit: {e}")))?;
        let sink: &mut dyn Write = if args.out.is_some() { out } else { err };
        write_limit(sink, &rep)?;
        if let Some(path) = &args.out {
            let side = path.with_extension("limit.json");
            write_file(&side, &json(&LimitOutput { limit: &rep }))?;
        }
    }
    Ok(Status::Success)
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    let domain = if args.discrete {
        TimeDomain::Discrete
    } else {
        TimeDomain::Continuous
    };
    let fam = build_family(&args.family, domain)?;
    let value = match fam.eval_checked(args.s, args.t) {
        Ok(v) => v,
        Err(e) => {
            writeln!(out, "family {} at (s={}, t={}): {e}", fam.id(), args.s, args.t)?;
            return Ok(Status::Failure);
        }
    };
    let data = match value {
        FamilyValue::Cubic(p) => MatrixData::Cubic(p),
        FamilyValue::Square(q) => MatrixData::Square(q),
        FamilyValue::Scalar(x) => MatrixData::Square(SquareMatrix::filled(1, x)),
    };
    let text = matrix_json(&data);
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(Status::Success)
}

/// Writes `matrix` to `path` as JSON.
pub fn export_matrix(path: &Path, matrix: &MatrixData) -> Result<(), CliError> {
    write_file(path, &matrix_json(matrix))
}
