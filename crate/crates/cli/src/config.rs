//! Turning command-line strings into library values.

use std::collections::BTreeMap;
use std::path::Path;

use qsp_core::families::{CantorSolution, FamilyId, M7Spec, MatrixFamily, ParamFn, TimeDomain};
use qsp_core::fnexpr::Expr;
use qsp_core::kce::TimeGrid;
use qsp_core::{BinaryOp, OpName};

use crate::files::read_op_table;
use crate::CliError;

/// `--param NAME=expr` bindings, keyed by upper-cased name.
#[derive(Debug, Clone, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn parse(raw: &[String]) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for item in raw {
            let (name, expr) = item.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("--param expects NAME=expr, got '{item}'"))
            })?;
            let name = name.trim().to_ascii_uppercase();
            if name.is_empty() {
                return Err(CliError::Usage(format!("--param has an empty name in '{item}'")));
            }
            if values.insert(name.clone(), expr.trim().to_string()).is_some() {
                return Err(CliError::Usage(format!("--param {name} given twice")));
            }
        }
        Ok(Self { values })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Looks parameters up under an optional prefix (`B.` or `C.` for the
/// slices of an M7 spec), falling back to the bare name, and records what
/// was used.
struct Lookup<'a> {
    params: &'a Params,
    prefix: &'a str,
    domain: TimeDomain,
    used: &'a mut Vec<String>,
}

impl Lookup<'_> {
    fn raw(&mut self, names: &[&str]) -> Option<(String, String)> {
        for name in names {
            let prefixed = format!("{}{name}", self.prefix);
            for key in [prefixed.as_str(), name] {
                if let Some(v) = self.params.values.get(key) {
                    self.used.push(key.to_string());
                    return Some((key.to_string(), v.clone()));
                }
            }
        }
        None
    }

    fn missing(&self, family: FamilyId, names: &[&str]) -> CliError {
        CliError::Usage(format!(
            "family {family} needs --param {}{}=<expr>",
            self.prefix,
            names.join("|")
        ))
    }

    fn function(&mut self, family: FamilyId, name: &str) -> Result<ParamFn, CliError> {
        let Some((key, text)) = self.raw(&[name]) else {
            return Err(self.missing(family, &[name]));
        };
        let expr = Expr::parse(&text)
            .map_err(|e| CliError::Usage(format!("--param {key}: {e}")))?;
        Ok(ParamFn::new(qsp_core::families::ParamBody::Expr(expr), self.domain))
    }

    fn scalar(&mut self, family: FamilyId, names: &[&str]) -> Result<f64, CliError> {
        let Some((key, text)) = self.raw(names) else {
            return Err(self.missing(family, names));
        };
        let expr = Expr::parse(&text)
            .map_err(|e| CliError::Usage(format!("--param {key}: {e}")))?;
        if expr.has_var() {
            return Err(CliError::Usage(format!(
                "--param {key} is a constant and must not depend on t"
            )));
        }
        expr.eval(0.0)
            .map_err(|e| CliError::Usage(format!("--param {key}: {e}")))
    }
}

/// Where family parameters come from.
pub struct FamilySource<'a> {
    pub family: &'a str,
    pub b_family: Option<&'a str>,
    pub c_family: Option<&'a str>,
    pub params: &'a Params,
    pub domain: TimeDomain,
}

impl FamilySource<'_> {
    /// Builds the family and rejects parameters it does not use.
    pub fn build(&self) -> Result<MatrixFamily, CliError> {
        let mut used = Vec::new();
        let id = parse_id(self.family, "--family")?;
        let fam = if id == FamilyId::M7 {
            let b = self
                .b_family
                .ok_or_else(|| CliError::Usage("family M7 needs --b-family".into()))?;
            let c = self
                .c_family
                .ok_or_else(|| CliError::Usage("family M7 needs --c-family".into()))?;
            self.m7(b, c, &mut used)?
        } else {
            if self.b_family.is_some() || self.c_family.is_some() {
                return Err(CliError::Usage(
                    "--b-family and --c-family apply to family M7 only".into(),
                ));
            }
            self.single(id, "", &mut used)?
        };
        self.reject_unused(&used)?;
        Ok(fam)
    }

    /// Builds only the M7 spec from `--b-family` and `--c-family`.
    pub fn build_m7_spec(&self) -> Result<M7Spec, CliError> {
        let mut used = Vec::new();
        let (b, c) = match (self.b_family, self.c_family) {
            (Some(b), Some(c)) => (b, c),
            _ => return Err(CliError::Usage("--m7 needs --b-family and --c-family".into())),
        };
        let fam = self.m7(b, c, &mut used)?;
        self.reject_unused(&used)?;
        match fam {
            MatrixFamily::M7(spec) => Ok(spec),
            _ => unreachable!("m7 builds an M7 family"),
        }
    }

    fn m7(&self, b: &str, c: &str, used: &mut Vec<String>) -> Result<MatrixFamily, CliError> {
        let b_id = parse_id(b, "--b-family")?;
        let c_id = parse_id(c, "--c-family")?;
        let b = self.single(b_id, "B.", used)?;
        let c = self.single(c_id, "C.", used)?;
        let spec = M7Spec::new(b, c).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(MatrixFamily::M7(spec))
    }

    fn reject_unused(&self, used: &[String]) -> Result<(), CliError> {
        if let Some(extra) = self.params.names().find(|n| !used.iter().any(|u| u == n)) {
            return Err(CliError::Usage(format!(
                "--param {extra} is not used by family {}",
                self.family.to_ascii_uppercase()
            )));
        }
        Ok(())
    }

    fn single(&self, id: FamilyId, prefix: &str, used: &mut Vec<String>) -> Result<MatrixFamily, CliError> {
        let mut p = Lookup {
            params: self.params,
            prefix,
            domain: self.domain,
            used,
        };
        let usage = |e: qsp_core::Error| CliError::Usage(e.to_string());
        let fam = match id {
            FamilyId::Q1 => MatrixFamily::Q1 {
                g: p.function(id, "G")?,
            },
            FamilyId::Q2 => MatrixFamily::Q2 {
                psi: p.function(id, "PSI")?,
            },
            FamilyId::Q3 => MatrixFamily::q3(p.scalar(id, &["B"])?).map_err(usage)?,
            FamilyId::Q4 => MatrixFamily::Q4 {
                psi: p.function(id, "PSI")?,
            },
            FamilyId::Q5 => MatrixFamily::Q5 {
                f: p.function(id, "F")?,
            },
            FamilyId::Q6 => {
                let lambda = p.scalar(id, &["LAMBDA"])?;
                let mu = p.scalar(id, &["MU"])?;
                MatrixFamily::q6(lambda, mu, p.function(id, "THETA")?).map_err(usage)?
            }
            FamilyId::Q7 => {
                let a = p.scalar(id, &["A"])?;
                MatrixFamily::q7(a, p.function(id, "G")?).map_err(usage)?
            }
            FamilyId::Rot => MatrixFamily::Rot,
            FamilyId::Zero => MatrixFamily::Zero,
            FamilyId::CantorA => MatrixFamily::Cantor(CantorSolution::Zero),
            FamilyId::CantorB => MatrixFamily::Cantor(CantorSolution::Ratio(p.function(id, "PHI")?)),
            FamilyId::CantorC => MatrixFamily::cantor_step(p.scalar(id, &["C"])?).map_err(usage)?,
            FamilyId::M1 => MatrixFamily::M1,
            FamilyId::M2 => MatrixFamily::M2 {
                h: CantorSolution::Ratio(p.function(id, "PHI")?),
            },
            FamilyId::M3 => MatrixFamily::M3,
            FamilyId::M4 => MatrixFamily::M4 {
                psi: p.function(id, "PSI")?,
            },
            FamilyId::M5 => MatrixFamily::M5 {
                phi: p.function(id, "PHI")?,
            },
            FamilyId::M6 => MatrixFamily::m6(p.scalar(id, &["A", "C"])?).map_err(usage)?,
            FamilyId::Uniform => {
                let m = p.scalar(id, &["M"])?;
                if m < 1.0 || m.fract() != 0.0 {
                    return Err(CliError::Usage(format!("--param M must be a positive integer, got {m}")));
                }
                MatrixFamily::uniform(m as usize).map_err(usage)?
            }
            FamilyId::M7 => {
                return Err(CliError::Usage("M7 cannot be nested inside an M7 spec".into()))
            }
            FamilyId::Tabulated => {
                return Err(CliError::Usage(
                    "TABULATED families are supplied through the library, use classify --input for matrix files".into(),
                ))
            }
        };
        Ok(fam)
    }
}

fn parse_id(text: &str, flag: &str) -> Result<FamilyId, CliError> {
    text.parse::<FamilyId>().map_err(|e| CliError::Usage(format!("{flag}: {e}")))
}

/// `start:stop:count` or `int:n`; the second selects discrete time.
pub fn parse_grid(spec: &str) -> Result<(TimeGrid, TimeDomain), CliError> {
    let bad = |why: String| CliError::Usage(format!("--grid '{spec}': {why}"));
    if let Some(n) = spec.strip_prefix("int:") {
        let n: usize = n.trim().parse().map_err(|_| bad("expected int:<n>".into()))?;
        let grid = TimeGrid::integers(n).map_err(|e| bad(e.to_string()))?;
        return Ok((grid, TimeDomain::Discrete));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected start:stop:count or int:<n>".into()));
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("'{s}' is not a number")));
    let (start, stop) = (num(parts[0])?, num(parts[1])?);
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| bad(format!("'{}' is not a point count", parts[2])))?;
    let grid = TimeGrid::uniform(start, stop, count).map_err(|e| bad(e.to_string()))?;
    Ok((grid, TimeDomain::Continuous))
}

/// `mod`, `max` or `table:<path>`.
pub fn parse_op(spec: &str, m: usize) -> Result<BinaryOp, CliError> {
    match spec {
        "mod" => Ok(BinaryOp::modular(m)),
        "max" => Ok(BinaryOp::max(m)),
        _ => {
            let path = spec.strip_prefix("table:").ok_or_else(|| {
                CliError::Usage(format!("--op expects mod, max or table:<path>, got '{spec}'"))
            })?;
            let (table_m, table) = read_op_table(Path::new(path))?;
            if table_m != m {
                return Err(CliError::Usage(format!(
                    "--op table has m = {table_m}, the family has m = {m}"
                )));
            }
            BinaryOp::from_table(&table, OpName::Custom(path.to_string()))
                .map_err(|e| CliError::Usage(format!("--op {path}: {e}")))
        }
    }
}

/// Comma-separated reals.
pub fn parse_list(flag: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{flag}: '{s}' is not a number")))
        })
        .collect()
}
