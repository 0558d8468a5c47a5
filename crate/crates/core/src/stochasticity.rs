//! Stochasticity kinds for cubic matrices and the usual ones for square
//! matrices.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::{CubicMatrix, SquareMatrix};

/// Classification tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Kinds of cubic stochastic matrices `P = (p_ijk)`.
///
/// All kinds require `p_ijk >= 0`. The pair kinds sum over two indices for
/// each fixed value of the third, the single kinds over one index for each
/// fixed pair of the other two. `Twice` is `S23` with `Σ_i p_ijk = 1/m` for
/// all `j, k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StochKind {
    S12,
    S13,
    S23,
    S1,
    S2,
    S3,
    Twice,
}

impl StochKind {
    pub const ALL: [StochKind; 7] = [
        StochKind::S12,
        StochKind::S13,
        StochKind::S23,
        StochKind::S1,
        StochKind::S2,
        StochKind::S3,
        StochKind::Twice,
    ];

    /// Short code used on the command line: `12`, `13`, `23`, `1`, `2`, `3`, `twice`.
    pub fn code(self) -> &'static str {
        match self {
            StochKind::S12 => "12",
            StochKind::S13 => "13",
            StochKind::S23 => "23",
            StochKind::S1 => "1",
            StochKind::S2 => "2",
            StochKind::S3 => "3",
            StochKind::Twice => "twice",
        }
    }
}

impl fmt::Display for StochKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StochKind::S12 => f.write_str("(1,2)-stochastic"),
            StochKind::S13 => f.write_str("(1,3)-stochastic"),
            StochKind::S23 => f.write_str("(2,3)-stochastic"),
            StochKind::S1 => f.write_str("1-stochastic"),
            StochKind::S2 => f.write_str("2-stochastic"),
            StochKind::S3 => f.write_str("3-stochastic"),
            StochKind::Twice => f.write_str("twice stochastic"),
        }
    }
}

impl FromStr for StochKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let s = s.trim_start_matches('s');
        StochKind::ALL
            .into_iter()
            .find(|k| k.code() == s)
            .ok_or_else(|| format!("unknown stochasticity kind '{s}' (expected 12|13|23|1|2|3|twice)"))
    }
}

/// Outcome of [`check_kind`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KindCheck {
    pub holds: bool,
    /// Worst deviation: either a defining sum off its target or the
    /// magnitude of a negative entry.
    pub max_violation: f64,
}

fn negativity(a: &CubicMatrix) -> f64 {
    (-a.min_entry()).max(0.0)
}

// Worst |sum - target| where sums run over the free indices for every
// value of the fixed ones. `fixed` selects which axes are held fixed.
fn worst_sum_deviation(a: &CubicMatrix, fixed: [bool; 3], target: f64) -> f64 {
    let m = a.m();
    let groups = m.pow(fixed.iter().filter(|f| **f).count() as u32);
    let mut sums = vec![0.0; groups];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let mut key = 0;
                for (idx, is_fixed) in [i, j, k].into_iter().zip(fixed) {
                    if is_fixed {
                        key = key * m + idx;
                    }
                }
                sums[key] += a.get(i, j, k);
            }
        }
    }
    sums.iter().map(|s| (s - target).abs()).fold(0.0, f64::max)
}

fn violation(a: &CubicMatrix, kind: StochKind) -> f64 {
    let neg = negativity(a);
    let sums = match kind {
        StochKind::S12 => worst_sum_deviation(a, [false, false, true], 1.0),
        StochKind::S13 => worst_sum_deviation(a, [false, true, false], 1.0),
        StochKind::S23 => worst_sum_deviation(a, [true, false, false], 1.0),
        StochKind::S1 => worst_sum_deviation(a, [false, true, true], 1.0),
        StochKind::S2 => worst_sum_deviation(a, [true, false, true], 1.0),
        StochKind::S3 => worst_sum_deviation(a, [true, true, false], 1.0),
        StochKind::Twice => {
            let rows = worst_sum_deviation(a, [true, false, false], 1.0);
            let cols = worst_sum_deviation(a, [false, true, true], 1.0 / a.m() as f64);
            rows.max(cols)
        }
    };
    neg.max(sums)
}

/// Checks nonnegativity (entries `>= -tol`) and the defining sums of `kind`.
pub fn check_kind(a: &CubicMatrix, kind: StochKind, tol: f64) -> KindCheck {
    debug_assert!(tol > 0.0);
    let max_violation = violation(a, kind);
    KindCheck {
        holds: max_violation <= tol,
        max_violation,
    }
}

/// Every kind that holds, and the worst violation of every kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub kinds: Vec<StochKind>,
    pub violations: BTreeMap<StochKind, f64>,
}

impl ClassReport {
    pub fn has(&self, kind: StochKind) -> bool {
        self.kinds.contains(&kind)
    }
}

pub fn classify(a: &CubicMatrix, tol: f64) -> ClassReport {
    let violations: BTreeMap<_, _> = StochKind::ALL
        .into_iter()
        .map(|k| (k, violation(a, k)))
        .collect();
    let kinds = violations
        .iter()
        .filter(|(_, v)| **v <= tol)
        .map(|(k, _)| *k)
        .collect();
    ClassReport { kinds, violations }
}

/// Row/column stochasticity of a square matrix plus the raw sums.
///
/// `left` means nonnegative with unit column sums, `right` nonnegative with
/// unit row sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareClass {
    pub nonnegative: bool,
    pub left: bool,
    pub right: bool,
    pub doubly: bool,
    pub min_entry: f64,
    pub total_sum: f64,
    pub row_sums: Vec<f64>,
    pub col_sums: Vec<f64>,
}

pub fn square_class(q: &SquareMatrix, tol: f64) -> SquareClass {
    let min_entry = q.min_entry();
    let nonnegative = min_entry >= -tol;
    let row_sums = q.row_sums();
    let col_sums = q.col_sums();
    let unit = |sums: &[f64]| sums.iter().all(|s| (s - 1.0).abs() <= tol);
    let left = nonnegative && unit(&col_sums);
    let right = nonnegative && unit(&row_sums);
    SquareClass {
        nonnegative,
        left,
        right,
        doubly: left && right,
        min_entry,
        total_sum: q.total(),
        row_sums,
        col_sums,
    }
}

/// Builds a cubic matrix of the given kind by normalizing nonnegative
/// weights drawn from `uniform` (expected to yield values in `[0, 1)`).
pub fn sample(kind: StochKind, m: usize, uniform: &mut dyn FnMut() -> f64) -> CubicMatrix {
    assert!(m > 0, "dimension must be positive");
    let fixed = match kind {
        StochKind::S12 => [false, false, true],
        StochKind::S13 => [false, true, false],
        StochKind::S23 => [true, false, false],
        StochKind::S1 => [false, true, true],
        StochKind::S2 => [true, false, true],
        StochKind::S3 => [true, true, false],
        StochKind::Twice => return sample_twice(m, uniform),
    };
    let mut a = CubicMatrix::from_fn(m, |_, _, _| uniform() + 1e-3);
    let groups = m.pow(fixed.iter().filter(|f| **f).count() as u32);
    let key = |i: usize, j: usize, k: usize| {
        [i, j, k]
            .into_iter()
            .zip(fixed)
            .filter(|(_, f)| *f)
            .fold(0, |acc, (idx, _)| acc * m + idx)
    };
    let mut sums = vec![0.0; groups];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                sums[key(i, j, k)] += a.get(i, j, k);
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let v = a.get(i, j, k) / sums[key(i, j, k)];
                a.set(i, j, k, v);
            }
        }
    }
    a
}

// A convex mixture of balanced assignments: each assignment sends every
// pair (j, k) to one first index i, with every i receiving exactly m pairs,
// contributing 1/m to p_ijk. Each assignment is twice stochastic, and so is
// any convex combination.
fn sample_twice(m: usize, uniform: &mut dyn FnMut() -> f64) -> CubicMatrix {
    let count = 3;
    let weights: Vec<f64> = (0..count).map(|_| uniform() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut a = CubicMatrix::zeros(m);
    for w in weights {
        let mut slots: Vec<usize> = (0..m * m).map(|x| x / m).collect();
        for x in (1..slots.len()).rev() {
            let y = ((uniform() * (x + 1) as f64) as usize).min(x);
            slots.swap(x, y);
        }
        for (pair, &i) in slots.iter().enumerate() {
            let (j, k) = (pair / m, pair % m);
            let v = a.get(i, j, k) + w / total / m as f64;
            a.set(i, j, k, v);
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laid_out(top: [f64; 4], bottom: [f64; 4]) -> CubicMatrix {
        // [[P000, P001 | P100, P101], [P010, P011 | P110, P111]]
        let mut p = CubicMatrix::zeros(2);
        for (row, values) in [top, bottom].into_iter().enumerate() {
            p.set(0, row, 0, values[0]);
            p.set(0, row, 1, values[1]);
            p.set(1, row, 0, values[2]);
            p.set(1, row, 1, values[3]);
        }
        p
    }

    #[test]
    fn uniform_m2_kinds() {
        let report = classify(&CubicMatrix::filled(2, 0.25), DEFAULT_TOL);
        assert_eq!(
            report.kinds,
            vec![StochKind::S12, StochKind::S13, StochKind::S23, StochKind::Twice]
        );
        assert!((report.violations[&StochKind::S3] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn top_half_slice_is_12_stochastic() {
        let p = laid_out([0.5; 4], [0.0; 4]);
        assert!(check_kind(&p, StochKind::S12, DEFAULT_TOL).holds);
        assert!(check_kind(&p, StochKind::S23, DEFAULT_TOL).holds);
        assert!(!check_kind(&p, StochKind::S13, DEFAULT_TOL).holds);
    }

    #[test]
    fn basis_has_no_kind_for_m2() {
        let e = CubicMatrix::basis(2, 0, 0, 0).unwrap();
        assert!(classify(&e, DEFAULT_TOL).kinds.is_empty());
        let e = CubicMatrix::basis(1, 0, 0, 0).unwrap();
        assert_eq!(classify(&e, DEFAULT_TOL).kinds.len(), StochKind::ALL.len());
    }

    #[test]
    fn normalized_random_is_23_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = sample(StochKind::S23, 3, &mut || rng.gen());
        assert_eq!(classify(&a, DEFAULT_TOL).kinds, vec![StochKind::S23]);
    }

    #[test]
    fn samples_have_their_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in 1..=4 {
            for kind in StochKind::ALL {
                let a = sample(kind, m, &mut || rng.gen());
                let check = check_kind(&a, kind, 1e-12);
                assert!(check.holds, "{kind} m={m}: {}", check.max_violation);
            }
        }
    }

    #[test]
    fn negativity_counts_as_violation() {
        let mut p = CubicMatrix::filled(2, 0.25);
        p.set(0, 0, 0, -0.01);
        p.set(0, 0, 1, 0.51);
        let check = check_kind(&p, StochKind::S23, DEFAULT_TOL);
        assert!(!check.holds);
        assert!((check.max_violation - 0.01).abs() < 1e-12);
        // roundoff-sized negatives are tolerated
        let mut p = CubicMatrix::filled(2, 0.25);
        p.set(0, 0, 0, 0.25 - 1e-12);
        p.set(0, 0, 1, 0.25 + 1e-12);
        assert!(check_kind(&p, StochKind::S23, DEFAULT_TOL).holds);
    }

    #[test]
    fn square_class_examples() {
        let half = SquareMatrix::filled(2, 0.5);
        let c = square_class(&half, DEFAULT_TOL);
        assert!(c.left && c.right && c.doubly);
        assert_eq!(c.total_sum, 2.0);

        let g = 0.3;
        let q1 = SquareMatrix::from_rows(&[[g, g], [1.0 - g, 1.0 - g]]).unwrap();
        let c = square_class(&q1, DEFAULT_TOL);
        assert!(c.left && !c.right && !c.doubly);

        let a = std::f64::consts::FRAC_PI_4;
        let rot = SquareMatrix::from_rows(&[[a.cos(), a.sin()], [-a.sin(), a.cos()]]).unwrap();
        let c = square_class(&rot, DEFAULT_TOL);
        assert!(!c.nonnegative && !c.left && !c.right);
    }

    #[test]
    fn kind_codes_round_trip() {
        for kind in StochKind::ALL {
            assert_eq!(kind.code().parse::<StochKind>().unwrap(), kind);
        }
        assert!("14".parse::<StochKind>().is_err());
    }
}
