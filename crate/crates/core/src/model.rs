//! Second-order response-surface model on the coded hypercube.
//!
//! The expansion vector of a point `x` in `[-1, 1]^K` is laid out as
//! intercept, the `K` linear terms, the `K(K-1)/2` two-way interactions in
//! lexicographic pair order, then the `K` pure quadratics.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};

/// Number of parameters of the full second-order model in `k` factors.
pub fn num_params(k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidDimension(k));
    }
    Ok((k + 1) * (k + 2) / 2)
}

/// Box-shaped factor region. Everything in this crate assumes the coded cube.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl FactorSpace {
    /// The coded cube `[-1, 1]^k`.
    pub fn coded(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDimension(k));
        }
        Ok(Self {
            lower: vec![-1.0; k],
            upper: vec![1.0; k],
        })
    }

    pub fn factors(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }
}

/// One column of the model matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Intercept,
    Linear(usize),
    Interaction(usize, usize),
    Quadratic(usize),
}

impl Term {
    /// Exponent of each factor in this monomial.
    pub fn exponents(&self, k: usize) -> Vec<u32> {
        let mut e = vec![0; k];
        match *self {
            Term::Intercept => {}
            Term::Linear(i) => e[i] = 1,
            Term::Interaction(i, j) => {
                e[i] = 1;
                e[j] = 1;
            }
            Term::Quadratic(i) => e[i] = 2,
        }
        e
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Term::Intercept => 1.0,
            Term::Linear(i) => x[i],
            Term::Interaction(i, j) => x[i] * x[j],
            Term::Quadratic(i) => x[i] * x[i],
        }
    }

    /// Human-readable label with 1-based factor indices, e.g. `x1x2`.
    pub fn label(&self) -> String {
        match *self {
            Term::Intercept => "1".to_string(),
            Term::Linear(i) => format!("x{}", i + 1),
            Term::Interaction(i, j) => format!("x{}x{}", i + 1, j + 1),
            Term::Quadratic(i) => format!("x{}^2", i + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecondOrderModel {
    k: usize,
    terms: Vec<Term>,
}

impl SecondOrderModel {
    pub fn new(k: usize) -> Result<Self> {
        let p = num_params(k)?;
        let mut terms = Vec::with_capacity(p);
        terms.push(Term::Intercept);
        terms.extend((0..k).map(Term::Linear));
        for i in 0..k {
            for j in i + 1..k {
                terms.push(Term::Interaction(i, j));
            }
        }
        terms.extend((0..k).map(Term::Quadratic));
        debug_assert_eq!(terms.len(), p);
        Ok(Self { k, terms })
    }

    pub fn factors(&self) -> usize {
        self.k
    }

    pub fn num_params(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Expansion vector `f(x)` in the fixed term order.
    pub fn expand_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                actual: x.len(),
            });
        }
        let mut out = vec![0.0; self.terms.len()];
        self.expand_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn expand_into(&self, x: &[f64], out: &mut [f64]) {
        let k = self.k;
        out[0] = 1.0;
        out[1..=k].copy_from_slice(x);
        let mut c = k + 1;
        for i in 0..k {
            for j in i + 1..k {
                out[c] = x[i] * x[j];
                c += 1;
            }
        }
        for i in 0..k {
            out[c + i] = x[i] * x[i];
        }
    }

    pub fn build_model_matrix(&self, design: &DesignMatrix) -> Result<ModelMatrix> {
        if design.factors() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                actual: design.factors(),
            });
        }
        let n = design.points();
        let p = self.num_params();
        let mut f = DMatrix::zeros(n, p);
        let mut row = vec![0.0; p];
        let mut x = vec![0.0; self.k];
        for i in 0..n {
            design.copy_row(i, &mut x);
            self.expand_into(&x, &mut row);
            for (a, v) in row.iter().enumerate() {
                f[(i, a)] = *v;
            }
        }
        Ok(ModelMatrix(f))
    }
}

/// `N x K` matrix of coded factor settings, stored column-major so that the
/// backing slice is exactly the vectorized design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix(DMatrix<f64>);

impl DesignMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyDesign);
        }
        let k = rows[0].len();
        if k == 0 {
            return Err(Error::InvalidDimension(0));
        }
        for r in rows {
            if r.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    actual: r.len(),
                });
            }
        }
        Self::checked(DMatrix::from_fn(n, k, |i, j| rows[i][j]))
    }

    /// Inverse of [`DesignMatrix::vectorize`]: slot `k*N + i` holds entry `(i, k)`.
    pub fn from_column_major(n: usize, k: usize, data: &[f64]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDesign);
        }
        if k == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if data.len() != n * k {
            return Err(Error::DimensionMismatch {
                expected: n * k,
                actual: data.len(),
            });
        }
        Self::checked(DMatrix::from_column_slice(n, k, data))
    }

    fn checked(m: DMatrix<f64>) -> Result<Self> {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::OutOfBounds {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn points(&self) -> usize {
        self.0.nrows()
    }

    pub fn factors(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.0[(i, k)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    fn copy_row(&self, i: usize, out: &mut [f64]) {
        for (k, v) in out.iter_mut().enumerate() {
            *v = self.0[(i, k)];
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.points()).map(|i| self.row(i)).collect()
    }

    /// Column-major stacking of the design into an `N*K` vector.
    pub fn vectorize(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    pub fn as_column_major(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stack(&self, other: &DesignMatrix) -> Result<DesignMatrix> {
        if other.factors() != self.factors() {
            return Err(Error::DimensionMismatch {
                expected: self.factors(),
                actual: other.factors(),
            });
        }
        let mut rows = self.to_rows();
        rows.extend(other.to_rows());
        DesignMatrix::from_rows(&rows)
    }
}

/// `N x p` model matrix `F` whose rows are expansion vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrix(DMatrix<f64>);

impl ModelMatrix {
    pub fn points(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_params(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> DMatrixView<'_, f64> {
        self.0.as_view()
    }

    pub fn get(&self, i: usize, a: usize) -> f64 {
        self.0[(i, a)]
    }

    /// Information matrix `F'F`.
    ///
    /// `F'F`. Rows are accumulated in order of their absolute values, so the
    /// result is bitwise unchanged by row permutations and by negating a factor
    /// (up to the signs of the affected entries).
    pub fn information_matrix(&self) -> DMatrix<f64> {
        let (n, p) = self.0.shape();
        let f = &self.0;
        let by_magnitude = |r: usize, s: usize| {
            (0..p)
                .map(|a| f[(r, a)].abs().total_cmp(&f[(s, a)].abs()))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&r, &s| by_magnitude(r, s));
        // rows equal up to sign are summed as signed counts times one magnitude
        let mut m = DMatrix::zeros(p, p);
        let mut start = 0;
        while start < n {
            let lead = order[start];
            let mut end = start + 1;
            while end < n && by_magnitude(lead, order[end]) == Ordering::Equal {
                end += 1;
            }
            let group = &order[start..end];
            for a in 0..p {
                for b in a..p {
                    let count: i64 = group
                        .iter()
                        .map(|&i| {
                            if (f[(i, a)] < 0.0) != (f[(i, b)] < 0.0) {
                                -1
                            } else {
                                1
                            }
                        })
                        .sum();
                    m[(a, b)] += count as f64 * (f[(lead, a)].abs() * f[(lead, b)].abs());
                }
            }
            start = end;
        }
        for a in 0..p {
            for b in 0..a {
                m[(a, b)] = m[(b, a)];
            }
        }
        m
    }
}
