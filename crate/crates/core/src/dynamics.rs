//! Evolution of type distributions on the simplex.

use serde::Serialize;

use crate::algebra::CubicMatrix;
use crate::error::{Error, Result};
use crate::families::{CantorSolution, MatrixFamily};
use crate::stochasticity::{check_kind, StochKind};

/// Kernel stochasticity tolerance for the step maps.
pub const STEP_TOL: f64 = 1e-9;
/// Accepted deviation of an input distribution's sum from 1.
pub const SUM_TOL: f64 = 1e-9;
/// Negative entries down to this are treated as roundoff and clamped.
pub const CLAMP_TOL: f64 = 1e-12;

/// A point of the simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates and renormalizes `probs`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if probs.is_empty() {
            return Err(Error::Distribution("empty distribution".into()));
        }
        if !sum.is_finite() || (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::Distribution(format!("entries sum to {sum}, not 1")));
        }
        Self::clamped(probs)
    }

    fn clamped(mut probs: Vec<f64>) -> Result<Self> {
        if let Some((i, x)) = probs
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || **x < -CLAMP_TOL)
        {
            return Err(Error::Distribution(format!("entry {i} is {x}")));
        }
        for x in &mut probs {
            *x = x.max(0.0);
        }
        let sum: f64 = probs.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Distribution("all entries are zero".into()));
        }
        if sum != 1.0 {
            for x in &mut probs {
                *x /= sum;
            }
        }
        Ok(Self { probs })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self {
            probs: vec![1.0 / m as f64; m],
        })
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn require_kind(p: &CubicMatrix, x: &Distribution, kind: StochKind) -> Result<()> {
    if p.m() != x.m() {
        return Err(Error::DimensionMismatch {
            left: p.m(),
            right: x.m(),
        });
    }
    let check = check_kind(p, kind, STEP_TOL);
    if check.holds {
        Ok(())
    } else {
        Err(Error::NotStochastic {
            kind,
            violation: check.max_violation,
            context: String::new(),
        })
    }
}

/// `x'_k = Σ_ij P(i,j,k) x_i x_j`; needs a `(3)`-stochastic kernel.
pub fn step_quadratic(p: &CubicMatrix, x: &Distribution) -> Result<Distribution> {
    require_kind(p, x, StochKind::S3)?;
    let m = p.m();
    let out = (0..m)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    acc += p.get(i, j, k) * x.get(i) * x.get(j);
                }
            }
            acc
        })
        .collect();
    Distribution::clamped(out)
}

/// Which pair kind a linear splitting step relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SplitAxes {
    /// `x'_k = ½ Σ_ij (P(k,i,j) + P(i,k,j)) x_j`
    S12,
    /// `x'_k = ½ Σ_ij (P(k,j,i) + P(i,j,k)) x_j`
    S13,
    /// `x'_k = ½ Σ_ij (P(j,k,i) + P(j,i,k)) x_j`
    S23,
}

impl SplitAxes {
    pub fn kind(self) -> StochKind {
        match self {
            SplitAxes::S12 => StochKind::S12,
            SplitAxes::S13 => StochKind::S13,
            SplitAxes::S23 => StochKind::S23,
        }
    }
}

pub fn step_split_with(p: &CubicMatrix, x: &Distribution, axes: SplitAxes) -> Result<Distribution> {
    require_kind(p, x, axes.kind())?;
    let m = p.m();
    let term = |k: usize, i: usize, j: usize| match axes {
        SplitAxes::S12 => p.get(k, i, j) + p.get(i, k, j),
        SplitAxes::S13 => p.get(k, j, i) + p.get(i, j, k),
        SplitAxes::S23 => p.get(j, k, i) + p.get(j, i, k),
    };
    let out = (0..m)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    acc += term(k, i, j) * x.get(j);
                }
            }
            0.5 * acc
        })
        .collect();
    Distribution::clamped(out)
}

/// The `(1,2)` splitting step.
pub fn step_split(p: &CubicMatrix, x: &Distribution) -> Result<Distribution> {
    step_split_with(p, x, SplitAxes::S12)
}

/// Splitting step along the first pair kind the kernel has, in the order
/// `(1,2)`, `(1,3)`, `(2,3)`.
pub fn step_split_auto(p: &CubicMatrix, x: &Distribution) -> Result<(SplitAxes, Distribution)> {
    for axes in [SplitAxes::S12, SplitAxes::S13, SplitAxes::S23] {
        if check_kind(p, axes.kind(), STEP_TOL).holds {
            return step_split_with(p, x, axes).map(|d| (axes, d));
        }
    }
    let check = check_kind(p, StochKind::S12, STEP_TOL);
    Err(Error::NotStochastic {
        kind: StochKind::S12,
        violation: check.max_violation,
        context: " (nor (1,3)- or (2,3)-stochastic)".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepMode {
    Quadratic,
    Split,
}

impl StepMode {
    pub fn step(self, p: &CubicMatrix, x: &Distribution) -> Result<Distribution> {
        match self {
            StepMode::Quadratic => step_quadratic(p, x),
            StepMode::Split => step_split(p, x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub start: f64,
    pub samples: Vec<(f64, Distribution)>,
}

fn at_pair(e: Error, s: f64, t: f64) -> Error {
    match e {
        Error::NotStochastic {
            kind,
            violation,
            context,
        } => Error::NotStochastic {
            kind,
            violation,
            context: format!("{context} at (s={s}, t={t})"),
        },
        Error::DimensionMismatch { .. } | Error::Domain { .. } => e,
        other => Error::Parameter(format!("at (s={s}, t={t}): {other}")),
    }
}

fn check_times(s: f64, times: &[f64]) -> Result<()> {
    if let Some(t) = times.iter().find(|t| t.partial_cmp(&&s) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::TimeOrder(format!("sample times after s = {s}, got {t}")));
    }
    if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::TimeOrder(format!(
            "increasing sample times, got {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `x(t) = step(M(s,t), x0)` for each sample time.
pub fn trajectory(
    fam: &MatrixFamily,
    mode: StepMode,
    x0: &Distribution,
    s: f64,
    times: &[f64],
) -> Result<Trajectory> {
    check_times(s, times)?;
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let x = fam
            .eval_checked(s, t)
            .and_then(|v| v.into_cubic().ok_or_else(|| fam.unsupported("dynamics")))
            .and_then(|p| mode.step(&p, x0))
            .map_err(|e| at_pair(e, s, t))?;
        samples.push((t, x));
    }
    Ok(Trajectory { start: s, samples })
}

/// `x(t_k) = step(M(t_{k-1}, t_k), x(t_{k-1}))` with `t_{-1} = s`.
pub fn trajectory_chained(
    fam: &MatrixFamily,
    mode: StepMode,
    x0: &Distribution,
    s: f64,
    times: &[f64],
) -> Result<Trajectory> {
    check_times(s, times)?;
    let mut samples = Vec::with_capacity(times.len());
    let (mut prev, mut x) = (s, x0.clone());
    for &t in times {
        x = fam
            .eval_checked(prev, t)
            .and_then(|v| v.into_cubic().ok_or_else(|| fam.unsupported("dynamics")))
            .and_then(|p| mode.step(&p, &x))
            .map_err(|e| at_pair(e, prev, t))?;
        samples.push((t, x.clone()));
        prev = t;
    }
    Ok(Trajectory { start: s, samples })
}

fn two_state(x0: f64) -> Result<Distribution> {
    Distribution::clamped(vec![x0, 1.0 - x0])
}

fn ratio_value(fam: &MatrixFamily, s: f64, t: f64) -> Result<f64> {
    match fam {
        MatrixFamily::M2 { h } => h.eval(s, t),
        _ => {
            let (x, _) = fam
                .ratio_parameter()
                .ok_or_else(|| fam.unsupported("a ratio parameter"))?;
            CantorSolution::Ratio(x.clone()).eval(s, t)
        }
    }
}

/// Direct evaluation of the known state maps of `M1`..`M7` (splitting step
/// for `M1`..`M6`, quadratic step for `M7`).
pub fn closed_form(fam: &MatrixFamily, x_s: &Distribution, s: f64, t: f64) -> Result<Distribution> {
    if x_s.m() != 2 {
        return Err(Error::DimensionMismatch {
            left: 2,
            right: x_s.m(),
        });
    }
    let (x0, x1) = (x_s.get(0), x_s.get(1));
    match fam {
        MatrixFamily::M1 | MatrixFamily::M3 => two_state(0.5),
        MatrixFamily::M2 { .. } => {
            let rho = ratio_value(fam, s, t)?;
            two_state((0.5 + rho / 4.0) * x0 + (0.5 - rho / 4.0) * x1)
        }
        MatrixFamily::M4 { .. } => {
            let r = ratio_value(fam, s, t)?;
            two_state(0.5 * x0 + (0.5 + r / 4.0) * x1)
        }
        MatrixFamily::M5 { .. } => two_state(0.5 + ratio_value(fam, s, t)? / 4.0),
        MatrixFamily::M6 { c } => two_state(if t < *c { 0.75 } else { 0.5 }),
        MatrixFamily::M7(spec) => {
            let (b, c) = spec.slices(s, t)?;
            let y0 = c.get(0, 0) * x0 * x0
                + (b.get(0, 0) - c.get(0, 0) + c.get(1, 0)) * x0 * x1
                + (b.get(1, 0) - c.get(1, 0)) * x1 * x1;
            let y1 = c.get(0, 1) * x0 * x0
                + (b.get(0, 1) - c.get(0, 1) + c.get(1, 1)) * x0 * x1
                + (b.get(1, 1) - c.get(1, 1)) * x1 * x1;
            Distribution::new(vec![y0, y1])
        }
        _ => Err(fam.unsupported("a closed-form state map")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Omega {
    Converged(f64),
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub omega: Omega,
    /// `|ω|` bound for which the limit map stays stochastic.
    pub bound: f64,
    pub admissible: bool,
    /// `(t, X(t) / (4 X(s)))` at every horizon time.
    pub estimates: Vec<(f64, f64)>,
    pub limit_distribution: Option<Distribution>,
}

/// Successive tail estimates closer than this count as converged.
pub const CAUCHY_TOL: f64 = 1e-9;
const TAIL: usize = 3;

/// Estimates `ω = lim X(t) / (4 X(s))` for ratio-driven families and the
/// limit of `x(t)` it implies.
pub fn limit_estimate(
    fam: &MatrixFamily,
    s: f64,
    horizon: &[f64],
    x_s: &Distribution,
) -> Result<LimitReport> {
    let (x, bound) = fam
        .ratio_parameter()
        .ok_or_else(|| fam.unsupported("limit estimation"))?;
    check_times(s, horizon).map_err(|e| Error::InvalidGrid(e.to_string()))?;
    if horizon.len() < TAIL {
        return Err(Error::InvalidGrid(format!("need at least {TAIL} horizon times")));
    }
    let (first, last) = (horizon[0] - s, horizon[horizon.len() - 1] - s);
    if last < 10.0 * first {
        return Err(Error::InvalidGrid(format!(
            "horizon must span a decade of t - s, got {first} to {last}"
        )));
    }

    let xs = x.eval(s)?;
    if xs == 0.0 {
        return Err(Error::Domain {
            s,
            t: horizon[0],
            inequality: "X(s) != 0".into(),
            value: xs,
        });
    }
    let estimates = horizon
        .iter()
        .map(|&t| x.eval(t).map(|xt| (t, xt / (4.0 * xs))))
        .collect::<Result<Vec<_>>>()?;
    let tail = &estimates[estimates.len() - TAIL..];
    let cauchy = tail.windows(2).all(|w| (w[1].1 - w[0].1).abs() <= CAUCHY_TOL);
    let omega_bound = bound / 4.0;

    let (omega, admissible, limit_distribution) = if cauchy {
        let omega = tail[TAIL - 1].1;
        let admissible = omega.abs() <= omega_bound + 1e-15;
        let limit = if admissible {
            let (x0, x1) = (x_s.get(0), x_s.get(1));
            Some(match fam {
                MatrixFamily::M2 { .. } => two_state((0.5 + omega) * x0 + (0.5 - omega) * x1)?,
                MatrixFamily::M4 { .. } => two_state(0.5 * x0 + (0.5 + omega) * x1)?,
                _ => two_state(0.5 + omega)?,
            })
        } else {
            None
        };
        (Omega::Converged(omega), admissible, limit)
    } else {
        (Omega::Divergent, false, None)
    };
    Ok(LimitReport {
        omega,
        bound: omega_bound,
        admissible,
        estimates,
        limit_distribution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{M7Spec, ParamFn};
    use approx::assert_abs_diff_eq;

    fn dist(p: &[f64]) -> Distribution {
        Distribution::new(p.to_vec()).unwrap()
    }

    fn m2(phi: ParamFn) -> MatrixFamily {
        MatrixFamily::M2 {
            h: CantorSolution::Ratio(phi),
        }
    }

    #[test]
    fn distribution_rules() {
        assert!(Distribution::new(vec![0.5, 0.4]).is_err());
        assert!(Distribution::new(vec![1.1, -0.1]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        let d = Distribution::new(vec![1.0 + 1e-13, -1e-13]).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn constant_kernel() {
        let p = CubicMatrix::filled(3, 1.0 / 3.0);
        let y = step_quadratic(&p, &dist(&[0.2, 0.3, 0.5])).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(y.get(k), 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn absorbing_type() {
        let p = CubicMatrix::from_fn(2, |_, _, k| if k == 0 { 1.0 } else { 0.0 });
        let y = step_quadratic(&p, &dist(&[0.3, 0.7])).unwrap();
        assert_eq!(y.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn quadratic_rejects_non_3_stochastic() {
        let half = || MatrixFamily::Q5 {
            f: ParamFn::constant(0.5),
        };
        let fam = MatrixFamily::M7(M7Spec::new(half(), half()).unwrap());
        let p = fam.eval_cubic(0.0, 1.0).unwrap();
        let err = step_quadratic(&p, &dist(&[0.5, 0.5])).unwrap_err();
        assert!(matches!(err, Error::NotStochastic { kind: StochKind::S3, .. }));
    }

    #[test]
    fn m3_split_is_half() {
        let p = MatrixFamily::M3.eval_cubic(0.0, 1.0).unwrap();
        let y = step_split(&p, &dist(&[0.9, 0.1])).unwrap();
        assert_eq!(y.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn m2_third() {
        let fam = m2(ParamFn::pow_decay(3.0).discrete());
        let p = fam.eval_cubic(0.0, 1.0).unwrap();
        let y = step_split(&p, &dist(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(y.get(0), 7.0 / 12.0, epsilon = 1e-12);
        let z = closed_form(&fam, &dist(&[1.0, 0.0]), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(z.get(0), 7.0 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.get(1), 5.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn m5_closed_form_half_ratio() {
        let fam = MatrixFamily::M5 {
            phi: ParamFn::pow_decay(2.0),
        };
        let z = closed_form(&fam, &dist(&[0.2, 0.8]), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(z.get(0), 5.0 / 8.0, epsilon = 1e-15);
    }

    #[test]
    fn auto_axes() {
        let p = MatrixFamily::M1.eval_cubic(0.0, 1.0).unwrap();
        let (axes, _) = step_split_auto(&p, &dist(&[0.5, 0.5])).unwrap();
        assert_eq!(axes, SplitAxes::S12);
        // (1,3)-stochastic only
        let q = CubicMatrix::from_fn(2, |i, _, k| if i == 0 && k == 0 { 1.0 } else { 0.0 });
        assert!(step_split(&q, &dist(&[0.5, 0.5])).is_err());
        let (axes, y) = step_split_auto(&q, &dist(&[0.5, 0.5])).unwrap();
        assert_eq!(axes, SplitAxes::S13);
        assert_abs_diff_eq!(y.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        let z = CubicMatrix::zeros(2);
        assert!(step_split_auto(&z, &dist(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn m6_jumps() {
        let fam = MatrixFamily::m6(2.0).unwrap();
        let tr = trajectory(&fam, StepMode::Split, &dist(&[0.9, 0.1]), 0.0, &[0.5, 1.0, 2.0, 3.0])
            .unwrap();
        let x0: Vec<f64> = tr.samples.iter().map(|(_, d)| d.get(0)).collect();
        assert_eq!(x0, vec![0.75, 0.75, 0.5, 0.5]);
    }

    #[test]
    fn m4_at_one() {
        let fam = MatrixFamily::M4 {
            psi: ParamFn::pow_decay(2.0).discrete(),
        };
        let tr = trajectory(&fam, StepMode::Split, &dist(&[0.0, 1.0]), 0.0, &[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(tr.samples[0].1.get(0), 0.625, epsilon = 1e-15);
        for (t, d) in &tr.samples {
            let want = closed_form(&fam, &dist(&[0.0, 1.0]), 0.0, *t).unwrap();
            assert!(d.max_abs_diff(&want) <= 1e-12);
        }
    }

    #[test]
    fn trajectory_time_checks() {
        let x = dist(&[0.5, 0.5]);
        assert!(trajectory(&MatrixFamily::M1, StepMode::Split, &x, 1.0, &[1.0, 2.0]).is_err());
        assert!(trajectory(&MatrixFamily::M1, StepMode::Split, &x, 0.0, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn stochasticity_error_names_pair() {
        let err = trajectory(&MatrixFamily::M1, StepMode::Quadratic, &dist(&[0.5, 0.5]), 0.0, &[1.0])
            .unwrap_err();
        assert!(err.to_string().contains("(s=0, t=1)"), "{err}");
    }

    #[test]
    fn limit_pow3() {
        let fam = m2(ParamFn::pow_decay(3.0).discrete());
        let horizon: Vec<f64> = (1..=40).map(f64::from).collect();
        let rep = limit_estimate(&fam, 0.0, &horizon, &dist(&[1.0, 0.0])).unwrap();
        match rep.omega {
            Omega::Converged(w) => assert!(w.abs() < 1e-15),
            Omega::Divergent => panic!("expected convergence"),
        }
        assert!(rep.admissible);
        let lim = rep.limit_distribution.unwrap();
        assert_abs_diff_eq!(lim.get(0), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn limit_constant_not_admissible() {
        let fam = m2(ParamFn::constant(2.0));
        let horizon: Vec<f64> = (1..=20).map(f64::from).collect();
        let rep = limit_estimate(&fam, 0.0, &horizon, &dist(&[1.0, 0.0])).unwrap();
        assert_eq!(rep.omega, Omega::Converged(0.25));
        assert!(!rep.admissible);
        assert!(rep.limit_distribution.is_none());
    }

    #[test]
    fn limit_oscillation_diverges() {
        let fam = m2(ParamFn::expr("cos(pi*t)").unwrap());
        let horizon: Vec<f64> = (1..=20).map(f64::from).collect();
        let rep = limit_estimate(&fam, 0.0, &horizon, &dist(&[1.0, 0.0])).unwrap();
        assert_eq!(rep.omega, Omega::Divergent);
        assert!(rep.limit_distribution.is_none());
    }

    #[test]
    fn limit_rejects() {
        let horizon: Vec<f64> = (1..=20).map(f64::from).collect();
        let x = dist(&[1.0, 0.0]);
        assert!(limit_estimate(&MatrixFamily::M1, 0.0, &horizon, &x).is_err());
        let fam = m2(ParamFn::pow_decay(3.0));
        assert!(limit_estimate(&fam, 0.0, &[1.0, 2.0, 3.0], &x).is_err());
    }
}
