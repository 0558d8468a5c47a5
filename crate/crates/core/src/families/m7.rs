use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{MatrixFamily, Shape};
use crate::algebra::{CubicMatrix, SquareMatrix};
use crate::error::{Error, Result};

/// A pair of square `m = 2` solutions used to build a cubic process for the
/// max multiplication: `a_{i0j} = c_ij`, `a_{i1j} = b_ij - c_ij`.
///
/// The resulting cubic has marginal `B` and slice `C`.
#[derive(Debug, Clone)]
pub struct M7Spec {
    pub b: Box<MatrixFamily>,
    pub c: Box<MatrixFamily>,
}

impl M7Spec {
    pub fn new(b: MatrixFamily, c: MatrixFamily) -> Result<Self> {
        let spec = Self {
            b: Box::new(b),
            c: Box::new(c),
        };
        spec.check_shapes()?;
        Ok(spec)
    }

    pub(super) fn check_shapes(&self) -> Result<()> {
        for (name, fam) in [("B", &self.b), ("C", &self.c)] {
            if fam.shape() != Shape::Square || fam.m() != 2 {
                return Err(Error::Parameter(format!(
                    "{name} must be a 2x2 square family, got {} ({:?}, m = {})",
                    fam.id(),
                    fam.shape(),
                    fam.m()
                )));
            }
        }
        Ok(())
    }

    /// `(B, C)` at `(s, t)`.
    pub fn slices(&self, s: f64, t: f64) -> Result<(SquareMatrix, SquareMatrix)> {
        Ok((self.b.eval_square(s, t)?, self.c.eval_square(s, t)?))
    }

    pub(super) fn assemble(&self, s: f64, t: f64) -> Result<CubicMatrix> {
        let (b, c) = self.slices(s, t)?;
        if let Some((inequality, value)) = range_witness(&b, &c) {
            return Err(Error::Domain {
                s,
                t,
                inequality,
                value,
            });
        }
        Ok(CubicMatrix::from_fn(2, |i, j, k| {
            if j == 0 {
                c.get(i, k)
            } else {
                b.get(i, k) - c.get(i, k)
            }
        }))
    }
}

/// First entry with `c ∉ [0,1]` or `b - c ∉ [0,1]`.
pub(super) fn range_witness(b: &SquareMatrix, c: &SquareMatrix) -> Option<(String, f64)> {
    let bad = |x: f64| !(-1e-12..=1.0 + 1e-12).contains(&x);
    for i in 0..2 {
        for j in 0..2 {
            let cij = c.get(i, j);
            if bad(cij) {
                return Some((format!("0 <= c[{i},{j}] <= 1"), cij));
            }
            let d = b.get(i, j) - cij;
            if bad(d) {
                return Some((format!("0 <= b[{i},{j}] - c[{i},{j}] <= 1"), d));
            }
        }
    }
    None
}

/// Cubic matrix of an [`M7Spec`] at `(s, t)`.
pub fn build_m7(spec: &M7Spec, s: f64, t: f64) -> Result<CubicMatrix> {
    spec.check_shapes()?;
    spec.assemble(s, t)
}

/// Stochasticity type of a max-multiplication process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum M7Type {
    T12,
    T13,
    T23,
    T1,
    /// Listed for completeness; no `B` solving the square equation has unit
    /// middle sums, so [`classify_m7_type`] never returns it.
    T2,
    T3,
}

impl M7Type {
    pub fn label(self) -> &'static str {
        match self {
            M7Type::T12 => "(12|max)",
            M7Type::T13 => "(13|max)",
            M7Type::T23 => "(23|max)",
            M7Type::T1 => "(1|max)",
            M7Type::T2 => "(2|max)",
            M7Type::T3 => "(3|max)",
        }
    }
}

impl fmt::Display for M7Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn all_close(values: &[f64], target: f64, tol: f64) -> bool {
    values.iter().all(|v| (v - target).abs() <= tol)
}

fn types_at(b: &SquareMatrix, c: &SquareMatrix, tol: f64) -> BTreeSet<M7Type> {
    let b_nonneg = b.min_entry() >= -tol;
    let c_nonneg = c.min_entry() >= -tol;
    let b_left = b_nonneg && all_close(&b.col_sums(), 1.0, tol);
    let b_right = b_nonneg && all_close(&b.row_sums(), 1.0, tol);
    let c_left = c_nonneg && all_close(&c.col_sums(), 1.0, tol);
    let c_right = c_nonneg && all_close(&c.row_sums(), 1.0, tol);

    let mut out = BTreeSet::new();
    if b_left {
        out.insert(M7Type::T12);
    }
    if b_nonneg && c_nonneg && (b.total() - 2.0).abs() <= tol && (c.total() - 1.0).abs() <= tol {
        out.insert(M7Type::T13);
    }
    if b_right {
        out.insert(M7Type::T23);
    }
    if b_nonneg && all_close(&b.col_sums(), 2.0, tol) && c_left {
        out.insert(M7Type::T1);
    }
    if b_nonneg && all_close(&b.row_sums(), 2.0, tol) && c_right {
        out.insert(M7Type::T3);
    }
    out
}

/// Types whose condition on `(B, C)` holds at every pair. A pair where the
/// spec cannot be evaluated admits no type.
pub fn classify_m7_type(spec: &M7Spec, pairs: &[(f64, f64)], tol: f64) -> BTreeSet<M7Type> {
    let mut held: Option<BTreeSet<M7Type>> = None;
    for &(s, t) in pairs {
        let here = match spec.slices(s, t) {
            Ok((b, c)) => types_at(&b, &c, tol),
            Err(_) => BTreeSet::new(),
        };
        held = Some(match held {
            None => here,
            Some(prev) => prev.intersection(&here).copied().collect(),
        });
    }
    held.unwrap_or_default()
}

/// Why `g ≡ 1/2` with `Q = [[0,0],[1,1]]` does not give a process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GqDemo {
    pub q: [[f64; 2]; 2],
    pub g: f64,
    /// `g(s,t) - (4 g(s,τ) g(τ,t) - g(s,τ))` at `g ≡ 1/2`.
    pub residual: f64,
    /// `Q·Q - Q` in max norm.
    pub q_idempotent_residual: f64,
    /// Forced by `P000 + P010 = q00 = 0` with nonnegative entries.
    pub required_p000: f64,
    pub assumed_p000: f64,
    pub contradiction: bool,
}

pub fn negative_example_gq() -> GqDemo {
    let rows = [[0.0, 0.0], [1.0, 1.0]];
    let q = SquareMatrix::from_rows(&rows).expect("2x2 rows");
    let g = 0.5;
    let residual = g - (4.0 * g * g - g);
    let q_idempotent_residual = q.matmul(&q).expect("same size").max_abs_diff(&q).expect("same size");
    let required_p000 = q.get(0, 0);
    GqDemo {
        q: rows,
        g,
        residual,
        q_idempotent_residual,
        required_p000,
        assumed_p000: g,
        contradiction: required_p000 != g,
    }
}
