//! Closed-form two-time families `(s, t) ↦ matrix`.
//!
//! Square families `Q1`..`Q7` and the rotation family solve the ordinary
//! Kolmogorov-Chapman equation; the scalar Cantor solutions solve
//! `P(s,t) = P(s,τ) P(τ,t)`; the cubic families `M1`..`M7` are candidate
//! quadratic stochastic processes for `m = 2`.
//!
//! Cubic `m = 2` families are written as two block rows,
//!
//! ```text
//! [ P000 P001 | P100 P101 ]
//! [ P010 P011 | P110 P111 ]
//! ```
//!
//! i.e. the block selects `i`, the row `j` and the column within the block
//! `k` (all 0-based). See [`from_block_rows`].
//!
//! Piecewise families use the half-open convention: `t < threshold` selects
//! the first branch, `t >= threshold` the second.

mod m7;
mod param;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

pub use m7::{build_m7, classify_m7_type, negative_example_gq, GqDemo, M7Spec, M7Type};
pub use param::{ParamBody, ParamFn, TimeDomain};

use crate::algebra::{CubicMatrix, SquareMatrix};
use crate::error::{Error, Result};

/// Family tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyId {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
    Q7,
    Rot,
    Zero,
    CantorA,
    CantorB,
    CantorC,
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    M7,
    Uniform,
    Tabulated,
}

impl FamilyId {
    pub const ALL: [FamilyId; 21] = [
        FamilyId::Q1,
        FamilyId::Q2,
        FamilyId::Q3,
        FamilyId::Q4,
        FamilyId::Q5,
        FamilyId::Q6,
        FamilyId::Q7,
        FamilyId::Rot,
        FamilyId::Zero,
        FamilyId::CantorA,
        FamilyId::CantorB,
        FamilyId::CantorC,
        FamilyId::M1,
        FamilyId::M2,
        FamilyId::M3,
        FamilyId::M4,
        FamilyId::M5,
        FamilyId::M6,
        FamilyId::M7,
        FamilyId::Uniform,
        FamilyId::Tabulated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyId::Q1 => "Q1",
            FamilyId::Q2 => "Q2",
            FamilyId::Q3 => "Q3",
            FamilyId::Q4 => "Q4",
            FamilyId::Q5 => "Q5",
            FamilyId::Q6 => "Q6",
            FamilyId::Q7 => "Q7",
            FamilyId::Rot => "ROT",
            FamilyId::Zero => "ZERO",
            FamilyId::CantorA => "CANTOR_A",
            FamilyId::CantorB => "CANTOR_B",
            FamilyId::CantorC => "CANTOR_C",
            FamilyId::M1 => "M1",
            FamilyId::M2 => "M2",
            FamilyId::M3 => "M3",
            FamilyId::M4 => "M4",
            FamilyId::M5 => "M5",
            FamilyId::M6 => "M6",
            FamilyId::M7 => "M7",
            FamilyId::Uniform => "UNIFORM",
            FamilyId::Tabulated => "TABULATED",
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        FamilyId::ALL
            .into_iter()
            .find(|id| id.name() == upper)
            .ok_or_else(|| format!("unknown family '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Shape {
    Cubic,
    Square,
    Scalar,
}

/// A family member at one time pair.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyValue {
    Cubic(CubicMatrix),
    Square(SquareMatrix),
    Scalar(f64),
}

impl FamilyValue {
    pub fn shape(&self) -> Shape {
        match self {
            FamilyValue::Cubic(_) => Shape::Cubic,
            FamilyValue::Square(_) => Shape::Square,
            FamilyValue::Scalar(_) => Shape::Scalar,
        }
    }

    pub fn into_cubic(self) -> Option<CubicMatrix> {
        match self {
            FamilyValue::Cubic(c) => Some(c),
            _ => None,
        }
    }

    pub fn into_square(self) -> Option<SquareMatrix> {
        match self {
            FamilyValue::Square(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            FamilyValue::Scalar(x) => Some(*x),
            _ => None,
        }
    }
}

/// The three solutions of `h(s,t) = h(s,τ) h(τ,t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CantorSolution {
    /// `h ≡ 0`
    Zero,
    /// `h = Φ(t) / Φ(s)`
    Ratio(ParamFn),
    /// `h = 1` for `t < c`, `0` for `t >= c`
    Step { c: f64 },
}

impl CantorSolution {
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        match self {
            CantorSolution::Zero => Ok(0.0),
            CantorSolution::Ratio(phi) => ratio(phi, "Phi", s, t),
            CantorSolution::Step { c } => Ok(if t < *c { 1.0 } else { 0.0 }),
        }
    }
}

pub type TabulatedFn = dyn Fn(f64, f64) -> Result<FamilyValue> + Send + Sync;

/// A caller-supplied family.
#[derive(Clone)]
pub struct Tabulated {
    pub label: String,
    pub shape: Shape,
    pub m: usize,
    pub eval: Arc<TabulatedFn>,
}

impl fmt::Debug for Tabulated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tabulated")
            .field("label", &self.label)
            .field("shape", &self.shape)
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl Tabulated {
    pub fn new(
        label: impl Into<String>,
        shape: Shape,
        m: usize,
        eval: impl Fn(f64, f64) -> Result<FamilyValue> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            shape,
            m,
            eval: Arc::new(eval),
        }
    }
}

/// A built-in family with its parameters, or a tabulated one.
///
/// Ratio parameters (`psi`, `theta`, `phi`) enter as `X(t) / X(s)`.
#[derive(Debug, Clone)]
pub enum MatrixFamily {
    /// `[[g(s), g(s)], [1-g(s), 1-g(s)]]`, `g ∈ [0,1]`.
    Q1 { g: ParamFn },
    /// `½[[1+r, 1-r], [1-r, 1+r]]`, `r = Ψ(t)/Ψ(s)`, `Ψ > 0` decreasing.
    Q2 { psi: ParamFn },
    /// Identity for `t < b`, `½·ones` for `t >= b`.
    Q3 { b: f64 },
    /// `[[1, 0], [1-r, r]]`, `r = ψ(t)/ψ(s)`, `ψ > 0` decreasing.
    Q4 { psi: ParamFn },
    /// `[[f(t), 1-f(t)], [f(t), 1-f(t)]]`, `f ∈ [0,1]`.
    Q5 { f: ParamFn },
    /// Two-state chain with rates `λ, μ`, `0 < 2μ < λ`, and `θ > 0` decreasing.
    Q6 { lambda: f64, mu: f64, theta: ParamFn },
    /// Identity for `t < a`, rows `(g(t), 1-g(t))` for `t >= a`.
    Q7 { a: f64, g: ParamFn },
    /// Rotation by the angle `t - s`; not stochastic.
    Rot,
    /// The `2 x 2` zero matrix.
    Zero,
    Cantor(CantorSolution),
    /// All entries `1/4`; type `(13|a)`.
    M1,
    /// `f = (h + 1)/4` with `h` a Cantor solution; rows
    /// `(f, f | f, 1-3f)` and `(½-f, ½-f | ½-f, 3f-½)`.
    M2 { h: CantorSolution },
    /// All entries `1/4`; type `(12|a)`.
    M3,
    /// `P101 = ¼ + r/2`, `P111 = ¼ - r/2`, others `1/4`; `r = ψ(t)/ψ(s)`.
    M4 { psi: ParamFn },
    /// `g = (r + 1)/4`, `r = φ(t)/φ(s)`; rows `(g, g | g, g)`, `(½-g, ..)`.
    M5 { phi: ParamFn },
    /// Rows `(½, ½ | ½, ½)`, `(0, 0 | 0, 0)` for `t < c`; all `1/4` after.
    M6 { c: f64 },
    /// Built from a pair of square solutions, see [`M7Spec`].
    M7(M7Spec),
    /// All entries `1/m²`.
    Uniform { m: usize },
    Tabulated(Tabulated),
}

/// Writes the two block rows `[P0j0, P0j1, P1j0, P1j1]` for `j = 0, 1`.
pub fn from_block_rows(top: [f64; 4], bottom: [f64; 4]) -> CubicMatrix {
    let mut p = CubicMatrix::zeros(2);
    for (j, row) in [top, bottom].into_iter().enumerate() {
        p.set(0, j, 0, row[0]);
        p.set(0, j, 1, row[1]);
        p.set(1, j, 0, row[2]);
        p.set(1, j, 1, row[3]);
    }
    p
}

pub fn to_block_rows(p: &CubicMatrix) -> [[f64; 4]; 2] {
    assert_eq!(p.m(), 2, "block rows are defined for m = 2");
    let row = |j| [p.get(0, j, 0), p.get(0, j, 1), p.get(1, j, 0), p.get(1, j, 1)];
    [row(0), row(1)]
}

fn ratio(x: &ParamFn, name: &str, s: f64, t: f64) -> Result<f64> {
    let denom = x.eval(s)?;
    if denom == 0.0 {
        return Err(Error::Domain {
            s,
            t,
            inequality: format!("{name}(s) != 0"),
            value: denom,
        });
    }
    Ok(x.eval(t)? / denom)
}

fn check_time_order(s: f64, t: f64) -> Result<()> {
    if s >= 0.0 && s < t && t.is_finite() {
        Ok(())
    } else {
        Err(Error::TimeOrder(format!("0 <= s < t, got s = {s}, t = {t}")))
    }
}

/// A failed domain condition at one time pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub s: f64,
    pub t: f64,
    pub inequality: String,
    pub value: f64,
}

// Entries of probability families may be off [0, 1] by roundoff only.
const RANGE_SLACK: f64 = 1e-12;

impl MatrixFamily {
    pub fn q3(b: f64) -> Result<Self> {
        positive("b", b)?;
        Ok(Self::Q3 { b })
    }

    pub fn q6(lambda: f64, mu: f64, theta: ParamFn) -> Result<Self> {
        check_q6(lambda, mu)?;
        Ok(Self::Q6 { lambda, mu, theta })
    }

    pub fn q7(a: f64, g: ParamFn) -> Result<Self> {
        positive("a", a)?;
        Ok(Self::Q7 { a, g })
    }

    pub fn cantor_step(c: f64) -> Result<Self> {
        positive("c", c)?;
        Ok(Self::Cantor(CantorSolution::Step { c }))
    }

    pub fn m6(c: f64) -> Result<Self> {
        positive("c", c)?;
        Ok(Self::M6 { c })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self::Uniform { m })
    }

    pub fn id(&self) -> FamilyId {
        match self {
            MatrixFamily::Q1 { .. } => FamilyId::Q1,
            MatrixFamily::Q2 { .. } => FamilyId::Q2,
            MatrixFamily::Q3 { .. } => FamilyId::Q3,
            MatrixFamily::Q4 { .. } => FamilyId::Q4,
            MatrixFamily::Q5 { .. } => FamilyId::Q5,
            MatrixFamily::Q6 { .. } => FamilyId::Q6,
            MatrixFamily::Q7 { .. } => FamilyId::Q7,
            MatrixFamily::Rot => FamilyId::Rot,
            MatrixFamily::Zero => FamilyId::Zero,
            MatrixFamily::Cantor(CantorSolution::Zero) => FamilyId::CantorA,
            MatrixFamily::Cantor(CantorSolution::Ratio(_)) => FamilyId::CantorB,
            MatrixFamily::Cantor(CantorSolution::Step { .. }) => FamilyId::CantorC,
            MatrixFamily::M1 => FamilyId::M1,
            MatrixFamily::M2 { .. } => FamilyId::M2,
            MatrixFamily::M3 => FamilyId::M3,
            MatrixFamily::M4 { .. } => FamilyId::M4,
            MatrixFamily::M5 { .. } => FamilyId::M5,
            MatrixFamily::M6 { .. } => FamilyId::M6,
            MatrixFamily::M7(_) => FamilyId::M7,
            MatrixFamily::Uniform { .. } => FamilyId::Uniform,
            MatrixFamily::Tabulated(_) => FamilyId::Tabulated,
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            MatrixFamily::Q1 { .. }
            | MatrixFamily::Q2 { .. }
            | MatrixFamily::Q3 { .. }
            | MatrixFamily::Q4 { .. }
            | MatrixFamily::Q5 { .. }
            | MatrixFamily::Q6 { .. }
            | MatrixFamily::Q7 { .. }
            | MatrixFamily::Rot
            | MatrixFamily::Zero => Shape::Square,
            MatrixFamily::Cantor(_) => Shape::Scalar,
            MatrixFamily::Tabulated(tab) => tab.shape,
            _ => Shape::Cubic,
        }
    }

    /// Size of the index set.
    pub fn m(&self) -> usize {
        match self {
            MatrixFamily::Cantor(_) => 1,
            MatrixFamily::Uniform { m } => *m,
            MatrixFamily::Tabulated(tab) => tab.m,
            _ => 2,
        }
    }

    /// Whether the family is meant to take values in probability matrices;
    /// those get the `[0, 1]` entry-range check.
    fn is_probabilistic(&self) -> bool {
        !matches!(
            self,
            MatrixFamily::Rot | MatrixFamily::Cantor(_) | MatrixFamily::Tabulated(_)
        )
    }

    fn check_constraints(&self) -> Result<()> {
        match self {
            MatrixFamily::Q3 { b } => positive("b", *b),
            MatrixFamily::Q6 { lambda, mu, .. } => check_q6(*lambda, *mu),
            MatrixFamily::Q7 { a, .. } => positive("a", *a),
            MatrixFamily::M6 { c } => positive("c", *c),
            MatrixFamily::Cantor(CantorSolution::Step { c })
            | MatrixFamily::M2 {
                h: CantorSolution::Step { c },
            } => positive("c", *c),
            MatrixFamily::Uniform { m } if *m == 0 => Err(Error::ZeroDimension),
            MatrixFamily::M7(spec) => spec.check_shapes(),
            _ => Ok(()),
        }
    }

    /// Evaluates the closed form at `(s, t)` without checking the parameter
    /// domain; only `0 <= s < t` and evaluability are required.
    pub fn eval(&self, s: f64, t: f64) -> Result<FamilyValue> {
        check_time_order(s, t)?;
        self.check_constraints()?;
        let sq = |rows: [[f64; 2]; 2]| {
            FamilyValue::Square(SquareMatrix::from_rows(&rows).expect("2x2 rows"))
        };
        let value = match self {
            MatrixFamily::Q1 { g } => {
                let g = g.eval(s)?;
                sq([[g, g], [1.0 - g, 1.0 - g]])
            }
            MatrixFamily::Q2 { psi } => {
                let r = ratio(psi, "Psi", s, t)?;
                sq([[0.5 * (1.0 + r), 0.5 * (1.0 - r)], [0.5 * (1.0 - r), 0.5 * (1.0 + r)]])
            }
            MatrixFamily::Q3 { b } => {
                if t < *b {
                    sq([[1.0, 0.0], [0.0, 1.0]])
                } else {
                    sq([[0.5, 0.5], [0.5, 0.5]])
                }
            }
            MatrixFamily::Q4 { psi } => {
                let r = ratio(psi, "psi", s, t)?;
                sq([[1.0, 0.0], [1.0 - r, r]])
            }
            MatrixFamily::Q5 { f } => {
                let f = f.eval(t)?;
                sq([[f, 1.0 - f], [f, 1.0 - f]])
            }
            MatrixFamily::Q6 { lambda, mu, theta } => {
                let kappa = 1.0 - ratio(theta, "theta", s, t)?;
                let alpha = (lambda - 2.0 * mu) / (2.0 * (lambda - mu));
                let beta = lambda / (2.0 * (lambda - mu));
                sq([
                    [1.0 - alpha * kappa, alpha * kappa],
                    [beta * kappa, 1.0 - beta * kappa],
                ])
            }
            MatrixFamily::Q7 { a, g } => {
                if t < *a {
                    sq([[1.0, 0.0], [0.0, 1.0]])
                } else {
                    let g = g.eval(t)?;
                    sq([[g, 1.0 - g], [g, 1.0 - g]])
                }
            }
            MatrixFamily::Rot => {
                let (sin, cos) = (t - s).sin_cos();
                sq([[cos, sin], [-sin, cos]])
            }
            MatrixFamily::Zero => FamilyValue::Square(SquareMatrix::zeros(2)),
            MatrixFamily::Cantor(h) => FamilyValue::Scalar(h.eval(s, t)?),
            MatrixFamily::M1 | MatrixFamily::M3 => FamilyValue::Cubic(CubicMatrix::filled(2, 0.25)),
            MatrixFamily::M2 { h } => {
                let f = 0.25 * (h.eval(s, t)? + 1.0);
                FamilyValue::Cubic(from_block_rows(
                    [f, f, f, 1.0 - 3.0 * f],
                    [0.5 - f, 0.5 - f, 0.5 - f, 3.0 * f - 0.5],
                ))
            }
            MatrixFamily::M4 { psi } => {
                let r = ratio(psi, "psi", s, t)?;
                FamilyValue::Cubic(from_block_rows(
                    [0.25, 0.25, 0.25, 0.25 + 0.5 * r],
                    [0.25, 0.25, 0.25, 0.25 - 0.5 * r],
                ))
            }
            MatrixFamily::M5 { phi } => {
                let g = 0.25 * (ratio(phi, "phi", s, t)? + 1.0);
                FamilyValue::Cubic(from_block_rows([g; 4], [0.5 - g; 4]))
            }
            MatrixFamily::M6 { c } => {
                if t < *c {
                    FamilyValue::Cubic(from_block_rows([0.5; 4], [0.0; 4]))
                } else {
                    FamilyValue::Cubic(CubicMatrix::filled(2, 0.25))
                }
            }
            MatrixFamily::M7(spec) => FamilyValue::Cubic(spec.assemble(s, t)?),
            MatrixFamily::Uniform { m } => {
                FamilyValue::Cubic(CubicMatrix::filled(*m, 1.0 / (*m * *m) as f64))
            }
            MatrixFamily::Tabulated(tab) => {
                let value = (tab.eval)(s, t)?;
                if value.shape() != tab.shape {
                    return Err(Error::Parameter(format!(
                        "tabulated family '{}' returned a {:?} value, declared {:?}",
                        tab.label,
                        value.shape(),
                        tab.shape
                    )));
                }
                value
            }
        };
        Ok(value)
    }

    /// Evaluates at `(s, t)` after checking the parameter domain there.
    pub fn eval_checked(&self, s: f64, t: f64) -> Result<FamilyValue> {
        check_time_order(s, t)?;
        if let Some(v) = self.violations_at(s, t).into_iter().next() {
            return Err(Error::Domain {
                s: v.s,
                t: v.t,
                inequality: v.inequality,
                value: v.value,
            });
        }
        self.eval(s, t)
    }

    pub fn eval_cubic(&self, s: f64, t: f64) -> Result<CubicMatrix> {
        self.eval(s, t)?.into_cubic().ok_or_else(|| self.unsupported("cubic evaluation"))
    }

    pub fn eval_square(&self, s: f64, t: f64) -> Result<SquareMatrix> {
        self.eval(s, t)?.into_square().ok_or_else(|| self.unsupported("square evaluation"))
    }

    pub(crate) fn unsupported(&self, what: &str) -> Error {
        Error::Unsupported {
            family: self.id().to_string(),
            what: what.to_string(),
        }
    }

    /// Every domain condition that fails on the given pairs. An empty list
    /// means the family is a valid generator on those pairs.
    pub fn validate_domain(&self, pairs: &[(f64, f64)]) -> Vec<Violation> {
        pairs
            .iter()
            .flat_map(|&(s, t)| self.violations_at(s, t))
            .collect()
    }

    fn violations_at(&self, s: f64, t: f64) -> Vec<Violation> {
        let mut found: Vec<(String, f64)> = Vec::new();
        self.collect_violations(s, t, &mut found);
        found
            .into_iter()
            .map(|(inequality, value)| Violation {
                s,
                t,
                inequality,
                value,
            })
            .collect()
    }

    fn collect_violations(&self, s: f64, t: f64, out: &mut Vec<(String, f64)>) {
        if !(s >= 0.0 && s < t) {
            out.push(("0 <= s < t".into(), t - s));
            return;
        }
        if let Err(e) = self.check_constraints() {
            out.push((e.to_string(), f64::NAN));
            return;
        }

        match self {
            MatrixFamily::Q1 { g } => absorb(out, "g", unit_interval("g(s)", g.eval(s))),
            MatrixFamily::Q2 { psi } => absorb(out, "Psi", decreasing_positive("Psi", psi, s, t)),
            MatrixFamily::Q4 { psi } => absorb(out, "psi", decreasing_positive("psi", psi, s, t)),
            MatrixFamily::Q5 { f } => absorb(out, "f", unit_interval("f(t)", f.eval(t))),
            MatrixFamily::Q6 { theta, .. } => {
                absorb(out, "theta", decreasing_positive("theta", theta, s, t))
            }
            MatrixFamily::Q7 { a, g } if t >= *a => {
                absorb(out, "g", unit_interval("g(t)", g.eval(t)))
            }
            MatrixFamily::Cantor(CantorSolution::Ratio(phi)) => {
                absorb(out, "Phi", ratio(phi, "Phi", s, t).map(|_| Vec::new()))
            }
            MatrixFamily::M2 { h } => {
                let found = match h {
                    CantorSolution::Ratio(phi) => ratio_bound("Phi", phi, s, t, 1.0 / 3.0),
                    other => other.eval(s, t).map(|h| {
                        let f = 0.25 * (h + 1.0);
                        if (1.0 / 6.0 - RANGE_SLACK..=1.0 / 3.0 + RANGE_SLACK).contains(&f) {
                            Vec::new()
                        } else {
                            vec![("1/6 <= f(s,t) <= 1/3".to_string(), f)]
                        }
                    }),
                };
                absorb(out, "h", found)
            }
            MatrixFamily::M4 { psi } => absorb(out, "psi", ratio_bound("psi", psi, s, t, 0.5)),
            MatrixFamily::M5 { phi } => absorb(out, "phi", ratio_bound("phi", phi, s, t, 1.0)),
            MatrixFamily::M7(spec) => {
                for v in spec.b.violations_at(s, t) {
                    out.push((format!("B: {}", v.inequality), v.value));
                }
                for v in spec.c.violations_at(s, t) {
                    out.push((format!("C: {}", v.inequality), v.value));
                }
                match spec.slices(s, t) {
                    Ok((b, c)) => out.extend(m7::range_witness(&b, &c)),
                    Err(e) => out.push((format!("B, C evaluate: {e}"), f64::NAN)),
                }
                return;
            }
            _ => {}
        }

        if self.is_probabilistic() {
            match self.eval(s, t) {
                Ok(value) => out.extend(range_witness(&value)),
                Err(e) if out.is_empty() => out.push((format!("family evaluates: {e}"), f64::NAN)),
                Err(_) => {}
            }
        }
    }

    /// The parameter function entering through a ratio `X(t)/X(s)` and the
    /// bound `|X(t)/X(s)| <= bound` the family needs, for the families whose
    /// dynamics are driven by such a ratio.
    pub fn ratio_parameter(&self) -> Option<(&ParamFn, f64)> {
        match self {
            MatrixFamily::M2 {
                h: CantorSolution::Ratio(phi),
            } => Some((phi, 1.0 / 3.0)),
            MatrixFamily::M4 { psi } => Some((psi, 0.5)),
            MatrixFamily::M5 { phi } => Some((phi, 1.0)),
            _ => None,
        }
    }
}

fn absorb(out: &mut Vec<(String, f64)>, label: &str, result: Result<Vec<(String, f64)>>) {
    match result {
        Ok(found) => out.extend(found),
        Err(Error::Domain {
            inequality, value, ..
        }) => out.push((inequality, value)),
        Err(e) => out.push((format!("{label} evaluates: {e}"), f64::NAN)),
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("threshold {name} must be positive, got {value}")))
    }
}

fn check_q6(lambda: f64, mu: f64) -> Result<()> {
    if 0.0 < 2.0 * mu && 2.0 * mu < lambda {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "Q6 requires 0 < 2 mu < lambda, got lambda = {lambda}, mu = {mu}"
        )))
    }
}

fn unit_interval(name: &str, value: Result<f64>) -> Result<Vec<(String, f64)>> {
    let value = value?;
    Ok(if (0.0..=1.0).contains(&value) {
        Vec::new()
    } else {
        vec![(format!("0 <= {name} <= 1"), value)]
    })
}

fn decreasing_positive(name: &str, x: &ParamFn, s: f64, t: f64) -> Result<Vec<(String, f64)>> {
    let (xs, xt) = (x.eval(s)?, x.eval(t)?);
    let mut out = Vec::new();
    if xs <= 0.0 {
        out.push((format!("{name}(s) > 0"), xs));
    }
    if xt <= 0.0 {
        out.push((format!("{name}(t) > 0"), xt));
    }
    if xt >= xs {
        out.push((format!("{name}(t) < {name}(s)"), xt - xs));
    }
    Ok(out)
}

fn ratio_bound(name: &str, x: &ParamFn, s: f64, t: f64, bound: f64) -> Result<Vec<(String, f64)>> {
    let r = ratio(x, name, s, t)?;
    Ok(if r.abs() <= bound + RANGE_SLACK {
        Vec::new()
    } else {
        let b = match bound {
            b if b == 1.0 / 3.0 => "1/3".to_string(),
            0.5 => "1/2".to_string(),
            b => b.to_string(),
        };
        vec![(format!("-{b} <= {name}(t)/{name}(s) <= {b}"), r)]
    })
}

fn range_witness(value: &FamilyValue) -> Option<(String, f64)> {
    let out_of_range = |x: f64| !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&x);
    match value {
        FamilyValue::Cubic(p) => {
            let m = p.m();
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        let x = p.get(i, j, k);
                        if out_of_range(x) {
                            return Some((format!("0 <= P[{i},{j},{k}] <= 1"), x));
                        }
                    }
                }
            }
            None
        }
        FamilyValue::Square(q) => {
            let m = q.m();
            for i in 0..m {
                for j in 0..m {
                    let x = q.get(i, j);
                    if out_of_range(x) {
                        return Some((format!("0 <= Q[{i},{j}] <= 1"), x));
                    }
                }
            }
            None
        }
        FamilyValue::Scalar(x) => out_of_range(*x).then(|| ("0 <= P <= 1".to_string(), *x)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m2_pow3() -> MatrixFamily {
        MatrixFamily::M2 {
            h: CantorSolution::Ratio(ParamFn::pow_decay(3.0).discrete()),
        }
    }

    fn int_pairs(n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for s in 0..n {
            for t in s + 1..n {
                out.push((s as f64, t as f64));
            }
        }
        out
    }

    #[test]
    fn m1_is_quarter_everywhere() {
        for (s, t) in [(0.0, 0.1), (1.0, 3.0), (2.5, 100.0)] {
            let p = MatrixFamily::M1.eval_cubic(s, t).unwrap();
            assert_eq!(p, CubicMatrix::filled(2, 0.25));
        }
    }

    #[test]
    fn m2_at_zero_two() {
        let p = m2_pow3().eval_checked(0.0, 2.0).unwrap().into_cubic().unwrap();
        let [top, bottom] = to_block_rows(&p);
        let f = 5.0 / 18.0;
        let expected = [[f, f, f, 1.0 / 6.0], [2.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 1.0 / 3.0]];
        for (got, want) in top.iter().chain(&bottom).zip(expected.iter().flatten()) {
            assert_abs_diff_eq!(*got, *want, epsilon = 1e-15);
        }
    }

    #[test]
    fn m2_marginal_is_half_matrix() {
        // the rows of the block layout sum to q_ir = 1/2 whatever f is
        for (s, t) in int_pairs(6) {
            let p = m2_pow3().eval_cubic(s, t).unwrap();
            let oracle = SquareMatrix::from_fn(2, |i, r| p.get(i, 0, r) + p.get(i, 1, r));
            let q = p.marginal_q();
            assert_eq!(q, oracle);
            assert!(q.max_abs_diff(&SquareMatrix::filled(2, 0.5)).unwrap() < 1e-15);
        }
    }

    #[test]
    fn cantor_ratio_value() {
        let fam = MatrixFamily::Cantor(CantorSolution::Ratio(ParamFn::exp_decay(1.0)));
        let v = fam.eval(1.0, 3.0).unwrap().as_scalar().unwrap();
        assert_abs_diff_eq!(v, (-2.0f64).exp(), epsilon = 1e-16);
        assert_eq!(fam.id(), FamilyId::CantorB);
    }

    #[test]
    fn eval_rejects_bad_order() {
        assert!(matches!(MatrixFamily::M1.eval(2.0, 2.0), Err(Error::TimeOrder(_))));
        assert!(matches!(MatrixFamily::M1.eval(3.0, 2.0), Err(Error::TimeOrder(_))));
    }

    #[test]
    fn m2_pow3_valid_on_integers() {
        assert!(m2_pow3().validate_domain(&int_pairs(8)).is_empty());
    }

    #[test]
    fn m2_exp_decay_violates_ratio_bound() {
        let fam = MatrixFamily::M2 {
            h: CantorSolution::Ratio(ParamFn::exp_decay(1.0)),
        };
        let v = fam.validate_domain(&[(0.0, 0.5)]);
        assert!(!v.is_empty());
        assert_eq!(v[0].inequality, "-1/3 <= Phi(t)/Phi(s) <= 1/3");
        assert_abs_diff_eq!(v[0].value, (-0.5f64).exp(), epsilon = 1e-15);
        let err = fam.eval_checked(0.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn m2_step_solution_is_excluded() {
        let fam = MatrixFamily::M2 {
            h: CantorSolution::Step { c: 2.0 },
        };
        let v = fam.validate_domain(&[(0.0, 1.0)]);
        assert_eq!(v[0].inequality, "1/6 <= f(s,t) <= 1/3");
        assert_eq!(v[0].value, 0.5);
        // past the threshold f = 1/4 is fine
        assert!(fam.validate_domain(&[(0.0, 3.0)]).is_empty());
    }

    #[test]
    fn m4_pow2_valid_on_integers() {
        let fam = MatrixFamily::M4 {
            psi: ParamFn::pow_decay(2.0).discrete(),
        };
        assert!(fam.validate_domain(&int_pairs(8)).is_empty());
    }

    #[test]
    fn q6_constraint() {
        assert!(MatrixFamily::q6(1.0, 0.5, ParamFn::exp_decay(1.0)).is_err());
        assert!(MatrixFamily::q6(1.0, 0.0, ParamFn::exp_decay(1.0)).is_err());
        let q6 = MatrixFamily::q6(3.0, 1.0, ParamFn::exp_decay(1.0)).unwrap();
        let q = q6.eval_square(0.0, 1.0).unwrap();
        for r in q.row_sums() {
            assert_abs_diff_eq!(r, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn thresholds_must_be_positive() {
        assert!(MatrixFamily::q3(0.0).is_err());
        assert!(MatrixFamily::m6(-1.0).is_err());
        assert!(MatrixFamily::cantor_step(0.0).is_err());
        assert!(MatrixFamily::q7(0.0, ParamFn::constant(0.5)).is_err());
        assert!(MatrixFamily::M6 { c: 0.0 }.eval(0.0, 1.0).is_err());
    }

    #[test]
    fn piecewise_half_open() {
        let q3 = MatrixFamily::q3(2.0).unwrap();
        assert_eq!(q3.eval_square(0.0, 1.999).unwrap(), SquareMatrix::identity(2));
        assert_eq!(q3.eval_square(0.0, 2.0).unwrap(), SquareMatrix::filled(2, 0.5));
        let m6 = MatrixFamily::m6(2.0).unwrap();
        assert_eq!(m6.eval_cubic(0.0, 2.0).unwrap(), CubicMatrix::filled(2, 0.25));
        let c = MatrixFamily::cantor_step(5.0).unwrap();
        assert_eq!(c.eval(1.0, 4.9).unwrap().as_scalar(), Some(1.0));
        assert_eq!(c.eval(1.0, 5.0).unwrap().as_scalar(), Some(0.0));
    }

    #[test]
    fn decreasing_checks() {
        let q2 = MatrixFamily::Q2 {
            psi: ParamFn::expr("1 + t").unwrap(),
        };
        let v = q2.validate_domain(&[(0.0, 1.0)]);
        assert!(v.iter().any(|v| v.inequality == "Psi(t) < Psi(s)"));
        let q4 = MatrixFamily::Q4 {
            psi: ParamFn::exp_decay(1.0),
        };
        assert!(q4.validate_domain(&[(0.0, 1.0), (1.0, 4.0)]).is_empty());
    }

    #[test]
    fn rotation_is_not_range_checked() {
        assert!(MatrixFamily::Rot.validate_domain(&[(0.0, 2.0)]).is_empty());
    }

    #[test]
    fn uniform_entries() {
        let p = MatrixFamily::uniform(3).unwrap().eval_cubic(0.0, 1.0).unwrap();
        assert_eq!(p, CubicMatrix::filled(3, 1.0 / 9.0));
    }

    #[test]
    fn tabulated_shape_is_enforced() {
        let tab = Tabulated::new("bad", Shape::Cubic, 2, |_, _| Ok(FamilyValue::Scalar(1.0)));
        assert!(MatrixFamily::Tabulated(tab).eval(0.0, 1.0).is_err());
    }

    #[test]
    fn block_rows_round_trip() {
        let top = [1.0, 2.0, 3.0, 4.0];
        let bottom = [5.0, 6.0, 7.0, 8.0];
        let p = from_block_rows(top, bottom);
        assert_eq!(p.get(1, 0, 1), 4.0);
        assert_eq!(p.get(0, 1, 0), 5.0);
        assert_eq!(to_block_rows(&p), [top, bottom]);
    }

    #[test]
    fn family_names_parse() {
        for id in FamilyId::ALL {
            assert_eq!(id.name().parse::<FamilyId>().unwrap(), id);
        }
        assert_eq!("cantor_b".parse::<FamilyId>().unwrap(), FamilyId::CantorB);
    }
}
