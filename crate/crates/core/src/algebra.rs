//! Cubic and square matrices over the reals and the multiplications on them.
//!
//! A cubic matrix `A = (a_ijk)` on the index set `I = {0, .., m-1}` is stored
//! densely in row-major `(i, j, k)` order. Two products are provided:
//!
//! * [`CubicMatrix::star0`], induced by `E_ijk *0 E_lnr = δ_kl δ_jn E_ijr`;
//! * [`CubicMatrix::star`], the Maksimov product for a binary operation `a`,
//!   induced by `E_ijk *a E_lnr = δ_kl E_{i a(j,n) r}`.
//!
//! Summing out the middle index gives the marginal square matrix
//! ([`CubicMatrix::marginal_q`]), which turns the cubic Kolmogorov-Chapman
//! equation into the ordinary one for square matrices.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `m x m x m` real array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicMatrix {
    m: usize,
    data: Vec<f64>,
}

impl CubicMatrix {
    pub fn new(m: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroDimension);
        }
        if data.len() != m * m * m {
            return Err(Error::WrongLength {
                expected: m * m * m,
                got: data.len(),
            });
        }
        Ok(Self { m, data })
    }

    pub fn zeros(m: usize) -> Self {
        assert!(m > 0, "dimension must be positive");
        Self {
            m,
            data: vec![0.0; m * m * m],
        }
    }

    /// Every entry equal to `value`.
    pub fn filled(m: usize, value: f64) -> Self {
        assert!(m > 0, "dimension must be positive");
        Self {
            m,
            data: vec![value; m * m * m],
        }
    }

    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        assert!(m > 0, "dimension must be positive");
        let mut data = Vec::with_capacity(m * m * m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { m, data }
    }

    /// The basis matrix `E_ijk`: a single one at `(i, j, k)`.
    pub fn basis(m: usize, i: usize, j: usize, k: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroDimension);
        }
        if i >= m || j >= m || k >= m {
            return Err(Error::IndexOutOfRange { m, i, j, k });
        }
        let mut out = Self::zeros(m);
        out.data[(i * m + j) * m + k] = 1.0;
        Ok(out)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let at = self.offset(i, j, k);
        self.data[at] = value;
    }

    /// Flat entries in `(i, j, k)` row-major order.
    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.m && j < self.m && k < self.m);
        (i * self.m + j) * self.m + k
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            m: self.m,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// `max |self - other|` over all entries.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dims(self.m, other.m)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// The product `c_ijr = Σ_k a_ijk b_kjr`.
    pub fn star0(&self, other: &Self) -> Result<Self> {
        check_dims(self.m, other.m)?;
        let m = self.m;
        let mut out = Self::zeros(m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let a = self.get(i, j, k);
                    if a == 0.0 {
                        continue;
                    }
                    for r in 0..m {
                        let at = out.offset(i, j, r);
                        out.data[at] += a * other.get(k, j, r);
                    }
                }
            }
        }
        Ok(out)
    }

    /// The Maksimov product for the operation `op`:
    /// `c_ijr = Σ_{(l,n): a(l,n) = j} Σ_k a_ilk b_knr`.
    ///
    /// Middle indices with an empty preimage under `op` get zero entries.
    /// Non-associative tables are accepted; the product is then not
    /// associative either.
    pub fn star(&self, other: &Self, op: &BinaryOp) -> Result<Self> {
        check_dims(self.m, other.m)?;
        check_dims(self.m, op.m())?;
        let m = self.m;
        let mut out = Self::zeros(m);
        for i in 0..m {
            for j in 0..m {
                for &(l, n) in op.preimage(j) {
                    for k in 0..m {
                        let a = self.get(i, l, k);
                        if a == 0.0 {
                            continue;
                        }
                        for r in 0..m {
                            let at = out.offset(i, j, r);
                            out.data[at] += a * other.get(k, n, r);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `q_ir = Σ_j a_ijr`.
    pub fn marginal_q(&self) -> SquareMatrix {
        let m = self.m;
        SquareMatrix::from_fn(m, |i, r| (0..m).map(|j| self.get(i, j, r)).sum())
    }

    /// The slice at middle index `j`: `(i, k) ↦ a_ijk`.
    pub fn middle_slice(&self, j: usize) -> SquareMatrix {
        assert!(j < self.m, "middle index out of range");
        SquareMatrix::from_fn(self.m, |i, k| self.get(i, j, k))
    }

    /// `c_ij = a_i0j`, the first middle slice.
    pub fn slice_c(&self) -> SquareMatrix {
        self.middle_slice(0)
    }
}

impl Index<(usize, usize, usize)> for CubicMatrix {
    type Output = f64;

    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[self.offset(i, j, k)]
    }
}

impl Add for &CubicMatrix {
    type Output = CubicMatrix;

    fn add(self, rhs: &CubicMatrix) -> CubicMatrix {
        assert_eq!(self.m, rhs.m, "dimension mismatch");
        CubicMatrix {
            m: self.m,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CubicMatrix {
    type Output = CubicMatrix;

    fn sub(self, rhs: &CubicMatrix) -> CubicMatrix {
        assert_eq!(self.m, rhs.m, "dimension mismatch");
        CubicMatrix {
            m: self.m,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&CubicMatrix> for f64 {
    type Output = CubicMatrix;

    fn mul(self, rhs: &CubicMatrix) -> CubicMatrix {
        rhs.scale(self)
    }
}

impl fmt::Display for CubicMatrix {
    /// Prints the slices `M_i = (p_ijk)_{j,k}` side by side, separated by `|`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.m {
            for i in 0..self.m {
                if i > 0 {
                    write!(f, " |")?;
                }
                for k in 0..self.m {
                    write!(f, " {:>10.6}", self.get(i, j, k))?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// An `m x m` real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    m: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(m: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroDimension);
        }
        if data.len() != m * m {
            return Err(Error::WrongLength {
                expected: m * m,
                got: data.len(),
            });
        }
        Ok(Self { m, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let mut data = Vec::with_capacity(m * m);
        for row in rows {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::WrongLength {
                    expected: m,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(m, data)
    }

    pub fn zeros(m: usize) -> Self {
        assert!(m > 0, "dimension must be positive");
        Self {
            m,
            data: vec![0.0; m * m],
        }
    }

    pub fn identity(m: usize) -> Self {
        Self::from_fn(m, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn filled(m: usize, value: f64) -> Self {
        assert!(m > 0, "dimension must be positive");
        Self {
            m,
            data: vec![value; m * m],
        }
    }

    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(m > 0, "dimension must be positive");
        let mut data = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                data.push(f(i, j));
            }
        }
        Self { m, data }
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.m)
    }

    /// Ordinary matrix product.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dims(self.m, other.m)?;
        let m = self.m;
        let mut out = Self::zeros(m);
        for i in 0..m {
            for k in 0..m {
                let a = self.get(i, k);
                for j in 0..m {
                    out.data[i * m + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.m)
            .map(|j| (0..self.m).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dims(self.m, other.m)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.m + j]
    }
}

impl Sub for &SquareMatrix {
    type Output = SquareMatrix;

    fn sub(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.m, rhs.m, "dimension mismatch");
        SquareMatrix {
            m: self.m,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Display for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            for x in row {
                write!(f, " {:>10.6}", x)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left, right })
    }
}

/// Label carried by a [`BinaryOp`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpName {
    /// `a(j, n) = (j + n) mod m`
    Mod,
    /// `a(j, n) = max(j, n)`
    Max,
    Custom(String),
}

impl fmt::Display for OpName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpName::Mod => f.write_str("mod"),
            OpName::Max => f.write_str("max"),
            OpName::Custom(s) => f.write_str(s),
        }
    }
}

/// A binary operation `a: I x I -> I` given by its table `a(j, n)`.
///
/// The preimages `{(l, n): a(l, n) = j}` are bucketed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryOp {
    m: usize,
    table: Vec<usize>,
    name: OpName,
    preimages: Vec<Vec<(usize, usize)>>,
}

impl BinaryOp {
    /// Builds an operation from `table[j][n] = a(j, n)`.
    pub fn from_table(table: &[Vec<usize>], name: OpName) -> Result<Self> {
        let m = table.len();
        if m == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut flat = Vec::with_capacity(m * m);
        for (j, row) in table.iter().enumerate() {
            if row.len() != m {
                return Err(Error::WrongLength {
                    expected: m,
                    got: row.len(),
                });
            }
            for (n, &value) in row.iter().enumerate() {
                if value >= m {
                    return Err(Error::InvalidTable { m, j, n, value });
                }
                flat.push(value);
            }
        }
        Ok(Self::from_flat(m, flat, name))
    }

    fn from_flat(m: usize, table: Vec<usize>, name: OpName) -> Self {
        let mut preimages = vec![Vec::new(); m];
        for j in 0..m {
            for n in 0..m {
                preimages[table[j * m + n]].push((j, n));
            }
        }
        Self {
            m,
            table,
            name,
            preimages,
        }
    }

    /// Addition modulo `m`: the cyclic group on `{0, .., m-1}`.
    pub fn modular(m: usize) -> Self {
        assert!(m > 0, "dimension must be positive");
        let table = (0..m * m).map(|x| (x / m + x % m) % m).collect();
        Self::from_flat(m, table, OpName::Mod)
    }

    pub fn max(m: usize) -> Self {
        assert!(m > 0, "dimension must be positive");
        let table = (0..m * m).map(|x| (x / m).max(x % m)).collect();
        Self::from_flat(m, table, OpName::Max)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn name(&self) -> &OpName {
        &self.name
    }

    #[inline]
    pub fn apply(&self, j: usize, n: usize) -> usize {
        self.table[j * self.m + n]
    }

    /// All pairs `(l, n)` with `a(l, n) = j`.
    pub fn preimage(&self, j: usize) -> &[(usize, usize)] {
        &self.preimages[j]
    }

    pub fn table(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.m).map(<[usize]>::to_vec).collect()
    }

    /// Exhaustive check of associativity and unique solvability.
    pub fn analyze(&self) -> OpAnalysis {
        let m = self.m;
        let mut associativity_witness = None;
        'outer: for x in 0..m {
            for y in 0..m {
                for z in 0..m {
                    if self.apply(self.apply(x, y), z) != self.apply(x, self.apply(y, z)) {
                        associativity_witness = Some([x, y, z]);
                        break 'outer;
                    }
                }
            }
        }
        OpAnalysis {
            associative: associativity_witness.is_none(),
            associativity_witness,
            right_solvable: self.solvability_witness(Side::Right).is_none(),
            right_witness: self.solvability_witness(Side::Right),
            left_solvable: self.solvability_witness(Side::Left).is_none(),
            left_witness: self.solvability_witness(Side::Left),
        }
    }

    fn solvability_witness(&self, side: Side) -> Option<SolvabilityWitness> {
        for u in 0..self.m {
            for v in 0..self.m {
                let solutions = (0..self.m)
                    .filter(|&x| {
                        let value = match side {
                            Side::Right => self.apply(x, u),
                            Side::Left => self.apply(u, x),
                        };
                        value == v
                    })
                    .count();
                if solutions != 1 {
                    return Some(SolvabilityWitness { u, v, solutions });
                }
            }
        }
        None
    }
}

#[derive(Clone, Copy)]
enum Side {
    Right,
    Left,
}

/// `(u, v)` for which the solvability equation does not have exactly one
/// solution, with the number of solutions found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SolvabilityWitness {
    pub u: usize,
    pub v: usize,
    pub solutions: usize,
}

/// Result of [`BinaryOp::analyze`].
///
/// Right solvability: `a(x, u) = v` has exactly one solution `x` for all
/// `u, v`. Left solvability: the same for `a(u, x) = v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpAnalysis {
    pub associative: bool,
    /// `[x, y, z]` with `a(a(x,y),z) != a(x,a(y,z))`.
    pub associativity_witness: Option<[usize; 3]>,
    pub right_solvable: bool,
    pub right_witness: Option<SolvabilityWitness>,
    pub left_solvable: bool,
    pub left_witness: Option<SolvabilityWitness>,
}

impl OpAnalysis {
    pub fn uniquely_solvable(&self) -> bool {
        self.left_solvable || self.right_solvable
    }
}
