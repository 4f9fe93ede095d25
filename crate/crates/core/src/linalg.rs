//! Dense matrices over `K` with exact Gaussian elimination.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::numfield::{Field, FieldElement, Valuation};

#[derive(Clone, PartialEq, Eq)]
pub struct KMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

/// A `K`-linear operator on a flattened module basis.
pub type KLinearOp = KMatrix;

impl KMatrix {
    pub fn zero(field: &Field, rows: usize, cols: usize) -> Self {
        KMatrix {
            field: field.clone(),
            rows,
            cols,
            data: vec![FieldElement::zero(field); rows * cols],
        }
    }

    pub fn identity(field: &Field, n: usize) -> Self {
        Self::scalar(&FieldElement::one(field), n)
    }

    pub fn scalar(c: &FieldElement, n: usize) -> Self {
        let mut out = Self::zero(c.field(), n, n);
        for i in 0..n {
            out.set(i, i, c.clone());
        }
        out
    }

    pub fn from_rows(field: &Field, rows: Vec<Vec<FieldElement>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DegreeMismatch("ragged matrix rows".into()));
        }
        let data: Vec<FieldElement> = rows.into_iter().flatten().collect();
        if data.iter().any(|x| x.field() != field) {
            return Err(Error::RingMismatch("matrix entry from another field".into()));
        }
        Ok(KMatrix {
            field: field.clone(),
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &FieldElement {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: FieldElement) {
        self.data[i * self.cols + j] = x;
    }

    pub fn row(&self, i: usize) -> &[FieldElement] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<FieldElement> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(FieldElement::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let x = self.get(i, j);
                    if i == j {
                        x.is_one()
                    } else {
                        x.is_zero()
                    }
                })
            })
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(&self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &FieldElement) -> Self {
        KMatrix {
            data: self.data.iter().map(|x| x * c).collect(),
            ..self.clone()
        }
    }

    pub fn apply(&self, v: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = FieldElement::zero(&self.field);
                for (x, y) in self.row(i).iter().zip(v) {
                    if !x.is_zero() && !y.is_zero() {
                        acc += &(x * y);
                    }
                }
                acc
            })
            .collect()
    }

    /// Minimum entry valuation.
    pub fn gauss_val(&self) -> Valuation {
        self.data
            .iter()
            .map(FieldElement::val)
            .min()
            .unwrap_or(Valuation::Infinity)
    }

    pub fn trace(&self) -> FieldElement {
        let mut acc = FieldElement::zero(&self.field);
        for i in 0..self.rows.min(self.cols) {
            acc += self.get(i, i);
        }
        acc
    }

    /// Kronecker product.
    pub fn kron(&self, other: &KMatrix) -> Self {
        let mut out = Self::zero(&self.field, self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let x = self.get(i, j);
                if x.is_zero() {
                    continue;
                }
                for r in 0..other.rows {
                    for s in 0..other.cols {
                        out.set(i * other.rows + r, j * other.cols + s, x * other.get(r, s));
                    }
                }
            }
        }
        out
    }

    /// Reduced row echelon form and its pivot columns, pivots chosen
    /// left to right.
    pub fn rref(&self) -> (KMatrix, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(p) = (r..a.rows).find(|&i| !a.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..a.cols {
                    a.data.swap(p * a.cols + j, r * a.cols + j);
                }
            }
            let inv = a.get(r, c).invert().expect("pivot is nonzero");
            for j in c..a.cols {
                let x = a.get(r, j) * &inv;
                a.set(r, j, x);
            }
            for i in 0..a.rows {
                if i == r || a.get(i, c).is_zero() {
                    continue;
                }
                let f = a.get(i, c).clone();
                for j in c..a.cols {
                    if a.get(r, j).is_zero() {
                        continue;
                    }
                    let x = a.get(i, j) - &(&f * a.get(r, j));
                    a.set(i, j, x);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel, one vector per free column, in column order.
    pub fn kernel(&self) -> Vec<Vec<FieldElement>> {
        let (r, pivots) = self.rref();
        let zero = FieldElement::zero(&self.field);
        let mut out = Vec::new();
        for free in (0..self.cols).filter(|c| !pivots.contains(c)) {
            let mut v = vec![zero.clone(); self.cols];
            v[free] = FieldElement::one(&self.field);
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -r.get(row, free);
            }
            out.push(v);
        }
        out
    }

    /// Characteristic polynomial `det(xI − A)`, low-to-high coefficients,
    /// by the Faddeev–LeVerrier recursion (valid in characteristic zero).
    pub fn charpoly(&self) -> Vec<FieldElement> {
        assert!(self.is_square());
        let n = self.rows;
        let mut coeffs = vec![FieldElement::zero(&self.field); n + 1];
        coeffs[n] = FieldElement::one(&self.field);
        let mut mk = KMatrix::zero(&self.field, n, n);
        for k in 1..=n {
            let prev = &coeffs[n - k + 1];
            mk = &(self * &mk) + &KMatrix::scalar(prev, n);
            let am = self * &mk;
            let c = am.trace().scale(&num_rational::BigRational::new(
                (-1).into(),
                (k as i64).into(),
            ));
            coeffs[n - k] = c;
        }
        coeffs
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::identity(&self.field, self.rows);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }
}

impl Add for &KMatrix {
    type Output = KMatrix;

    fn add(self, rhs: &KMatrix) -> KMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        KMatrix {
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
            ..self.clone()
        }
    }
}

impl Sub for &KMatrix {
    type Output = KMatrix;

    fn sub(self, rhs: &KMatrix) -> KMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        KMatrix {
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
            ..self.clone()
        }
    }
}

impl Neg for &KMatrix {
    type Output = KMatrix;

    fn neg(self) -> KMatrix {
        KMatrix {
            data: self.data.iter().map(|a| -a).collect(),
            ..self.clone()
        }
    }
}

impl Mul for &KMatrix {
    type Output = KMatrix;

    fn mul(self, rhs: &KMatrix) -> KMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = KMatrix::zero(&self.field, self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let x = self.get(i, k);
                if x.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let y = rhs.get(k, j);
                    if !y.is_zero() {
                        out.data[i * rhs.cols + j] += &(x * y);
                    }
                }
            }
        }
        out
    }
}

impl fmt::Debug for KMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numfield::FieldSpec;

    fn m(f: &Field, rows: &[&[i64]]) -> KMatrix {
        KMatrix::from_rows(
            f,
            rows.iter()
                .map(|r| r.iter().map(|&x| FieldElement::from_int(f, x)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn rank_and_kernel() {
        let f = FieldSpec::from_ints(3, &[-3, 1]).unwrap();
        let a = m(&f, &[&[1, 2, 3], &[2, 4, 6], &[0, 1, 1]]);
        assert_eq!(a.rank(), 2);
        let ker = a.kernel();
        assert_eq!(ker.len(), 1);
        assert!(a.apply(&ker[0]).iter().all(FieldElement::is_zero));
        assert_eq!(KMatrix::identity(&f, 4).rank(), 4);
        assert_eq!(KMatrix::zero(&f, 2, 3).kernel().len(), 3);
    }

    #[test]
    fn charpoly_matches_cayley_hamilton() {
        let f = FieldSpec::from_ints(3, &[-3, 0, 1]).unwrap();
        let a = m(&f, &[&[0, 3], &[1, 0]]);
        let chi = a.charpoly();
        // x² − 3
        assert_eq!(chi[0], FieldElement::from_int(&f, -3));
        assert!(chi[1].is_zero());
        let b = m(&f, &[&[2, 1, 0], &[0, -1, 4], &[5, 0, 1]]);
        let chi = b.charpoly();
        let mut acc = KMatrix::zero(&f, 3, 3);
        for (k, c) in chi.iter().enumerate() {
            acc = &acc + &b.pow(k as u32).scale(c);
        }
        assert!(acc.is_zero());
    }
}
