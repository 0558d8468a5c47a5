//! Kolmogorov-Chapman checks on sampled time grids.

use serde::Serialize;

use crate::algebra::BinaryOp;
use crate::error::{Error, Result};
use crate::families::{FamilyValue, MatrixFamily, Shape, Violation};
use crate::stochasticity::{check_kind, StochKind};

/// Strictly increasing nonnegative sample times, at least three of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {}",
                times.len()
            )));
        }
        if let Some(t) = times.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::InvalidGrid(format!("time {t} is negative or not finite")));
        }
        if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "times must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { times })
    }

    /// `count` evenly spaced points from `start` to `stop` inclusive.
    pub fn uniform(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points, got {count}")));
        }
        let step = (stop - start) / (count - 1) as f64;
        let times = (0..count)
            .map(|i| if i == count - 1 { stop } else { start + step * i as f64 })
            .collect();
        Self::new(times)
    }

    /// `0, 1, ..., n - 1`.
    pub fn integers(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i as f64).collect())
    }

    /// 8 points on `[0, 4]`.
    pub fn default_continuous() -> Self {
        Self::uniform(0.0, 4.0, 8).expect("valid default grid")
    }

    /// Integers `0..7`.
    pub fn default_discrete() -> Self {
        Self::integers(8).expect("valid default grid")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Every `(s, t)` with `s < t`.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let ts = &self.times;
        let mut out = Vec::new();
        for (a, &s) in ts.iter().enumerate() {
            for &t in &ts[a + 1..] {
                out.push((s, t));
            }
        }
        out
    }

    /// Every `(s, τ, t)` with `s < τ < t`.
    pub fn triples(&self) -> Vec<(f64, f64, f64)> {
        let ts = &self.times;
        let mut out = Vec::new();
        for a in 0..ts.len() {
            for b in a + 1..ts.len() {
                for c in b + 1..ts.len() {
                    out.push((ts[a], ts[b], ts[c]));
                }
            }
        }
        out
    }
}

fn check_triple(s: f64, tau: f64, t: f64) -> Result<()> {
    if 0.0 <= s && s < tau && tau < t {
        Ok(())
    } else {
        Err(Error::TimeOrder(format!(
            "0 <= s < tau < t, got s = {s}, tau = {tau}, t = {t}"
        )))
    }
}

/// `max |M(s,t) - M(s,τ) *_a M(τ,t)|` for a cubic family.
pub fn kce_residual(fam: &MatrixFamily, op: &BinaryOp, s: f64, tau: f64, t: f64) -> Result<f64> {
    check_triple(s, tau, t)?;
    let whole = fam.eval_cubic(s, t)?;
    let first = fam.eval_cubic(s, tau)?;
    let second = fam.eval_cubic(tau, t)?;
    whole.max_abs_diff(&first.star(&second, op)?)
}

/// `max |Q(s,t) - Q(s,τ) Q(τ,t)|` for a square family, or
/// `|P(s,t) - P(s,τ) P(τ,t)|` for a scalar one.
pub fn square_kce_residual(fam: &MatrixFamily, s: f64, tau: f64, t: f64) -> Result<f64> {
    check_triple(s, tau, t)?;
    match (fam.eval(s, t)?, fam.eval(s, tau)?, fam.eval(tau, t)?) {
        (FamilyValue::Square(whole), FamilyValue::Square(a), FamilyValue::Square(b)) => {
            whole.max_abs_diff(&a.matmul(&b)?)
        }
        (FamilyValue::Scalar(whole), FamilyValue::Scalar(a), FamilyValue::Scalar(b)) => {
            Ok((whole - a * b).abs())
        }
        _ => Err(fam.unsupported("the square Kolmogorov-Chapman equation")),
    }
}

/// Square residual of the marginal family `(s, t) ↦ marginal_q(M(s,t))`.
pub fn marginal_kce_residual(fam: &MatrixFamily, s: f64, tau: f64, t: f64) -> Result<f64> {
    check_triple(s, tau, t)?;
    let q = |a, b| fam.eval_cubic(a, b).map(|p| p.marginal_q());
    let (whole, first, second) = (q(s, t)?, q(s, tau)?, q(tau, t)?);
    whole.max_abs_diff(&first.matmul(&second)?)
}

/// Worst square residual over all triples of a grid, with the triple.
pub fn square_worst_residual(fam: &MatrixFamily, grid: &TimeGrid) -> Result<(f64, (f64, f64, f64))> {
    let mut worst = (0.0, (f64::NAN, f64::NAN, f64::NAN));
    for (s, tau, t) in grid.triples() {
        let r = square_kce_residual(fam, s, tau, t)?;
        if r > worst.0 || worst.1 .0.is_nan() {
            worst = (r, (s, tau, t));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleResidual {
    pub s: f64,
    pub tau: f64,
    pub t: f64,
    /// Infinite when the family could not be evaluated at the triple.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheck {
    pub s: f64,
    pub t: f64,
    pub holds: bool,
    pub max_violation: f64,
}

/// Outcome of [`verify_grid`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KceReport {
    pub family: String,
    pub op: String,
    pub sigma: StochKind,
    pub tol: f64,
    pub worst_residual: f64,
    pub worst_triple: (f64, f64, f64),
    pub triples: Vec<TripleResidual>,
    pub stochasticity: Vec<PairCheck>,
    pub domain_violations: Vec<Violation>,
    pub errors: Vec<String>,
    pub verdict: bool,
}

impl KceReport {
    pub fn stochasticity_ok(&self) -> bool {
        self.stochasticity.iter().all(|p| p.holds)
    }
}

/// Checks the equation on every triple of the grid and `σ`-stochasticity on
/// every pair. The verdict also requires the family's parameter domain to
/// hold on the grid.
pub fn verify_grid(
    fam: &MatrixFamily,
    op: &BinaryOp,
    grid: &TimeGrid,
    sigma: StochKind,
    tol: f64,
) -> Result<KceReport> {
    if fam.shape() != Shape::Cubic {
        return Err(fam.unsupported("cubic verification"));
    }
    if fam.m() != op.m() {
        return Err(Error::DimensionMismatch {
            left: fam.m(),
            right: op.m(),
        });
    }

    let mut errors = Vec::new();
    let mut triples = Vec::new();
    let mut worst_residual = 0.0_f64;
    let mut worst_triple = (f64::NAN, f64::NAN, f64::NAN);
    for (s, tau, t) in grid.triples() {
        let residual = match kce_residual(fam, op, s, tau, t) {
            Ok(r) if r.is_nan() => f64::INFINITY,
            Ok(r) => r,
            Err(e) => {
                errors.push(format!("(s={s}, tau={tau}, t={t}): {e}"));
                f64::INFINITY
            }
        };
        if residual > worst_residual || worst_triple.0.is_nan() {
            worst_residual = residual;
            worst_triple = (s, tau, t);
        }
        triples.push(TripleResidual { s, tau, t, residual });
    }

    let pairs = grid.pairs();
    let mut stochasticity = Vec::with_capacity(pairs.len());
    for &(s, t) in &pairs {
        let check = match fam.eval_cubic(s, t) {
            Ok(p) => {
                let c = check_kind(&p, sigma, tol);
                PairCheck {
                    s,
                    t,
                    holds: c.holds,
                    max_violation: c.max_violation,
                }
            }
            Err(e) => {
                errors.push(format!("(s={s}, t={t}): {e}"));
                PairCheck {
                    s,
                    t,
                    holds: false,
                    max_violation: f64::INFINITY,
                }
            }
        };
        stochasticity.push(check);
    }

    let domain_violations = fam.validate_domain(&pairs);
    let verdict = worst_residual <= tol
        && stochasticity.iter().all(|p| p.holds)
        && domain_violations.is_empty()
        && errors.is_empty();
    Ok(KceReport {
        family: fam.id().to_string(),
        op: op.name().to_string(),
        sigma,
        tol,
        worst_residual,
        worst_triple,
        triples,
        stochasticity,
        domain_violations,
        errors,
        verdict,
    })
}

/// Integer certificate that no process of the given single-index kind
/// solves the equation for a uniquely solvable operation when `m > 1`.
///
/// The marginal `Q` of such a process has all column sums `m` (`S1`), all
/// row sums `m` (`S3`) or all entries `1` (`S2`); the marginal of a
/// solution must equal `Q·Q`, whose sums are `m²`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImpossibilityCertificate {
    pub kind: StochKind,
    pub m: usize,
    pub witness: Vec<Vec<i64>>,
    pub product: Vec<Vec<i64>>,
    /// The sum (or entry for `S2`) the marginal must have.
    pub required: i64,
    /// What the product gives instead.
    pub obtained: i64,
    /// Row or column sums: `m` for the witness vs `m²` for the product.
    pub sum_required: i64,
    pub sum_obtained: i64,
}

pub fn impossibility_demo(kind: StochKind, m: usize) -> Result<ImpossibilityCertificate> {
    if !matches!(kind, StochKind::S1 | StochKind::S2 | StochKind::S3) {
        return Err(Error::Parameter(format!(
            "impossibility certificates exist for single-index kinds only, got {kind}"
        )));
    }
    if m < 2 {
        return Err(Error::Parameter(format!("need m > 1, got m = {m}")));
    }
    let witness = vec![vec![1_i64; m]; m];
    let product: Vec<Vec<i64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|r| (0..m).map(|k| witness[i][k] * witness[k][r]).sum())
                .collect()
        })
        .collect();
    let col_sum = |a: &[Vec<i64>], r: usize| a.iter().map(|row| row[r]).sum::<i64>();
    let row_sum = |a: &[Vec<i64>], i: usize| a[i].iter().sum::<i64>();
    let (sum_required, sum_obtained) = match kind {
        StochKind::S3 => (row_sum(&witness, 0), row_sum(&product, 0)),
        _ => (col_sum(&witness, 0), col_sum(&product, 0)),
    };
    let (required, obtained) = match kind {
        StochKind::S2 => (witness[0][0], product[0][0]),
        _ => (sum_required, sum_obtained),
    };
    Ok(ImpossibilityCertificate {
        kind,
        m,
        witness,
        product,
        required,
        obtained,
        sum_required,
        sum_obtained,
    })
}
