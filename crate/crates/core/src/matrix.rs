//! Dense matrices over F_q.

use std::fmt;

use crate::error::{Error, Result};
use crate::gf::{Field, FieldElem};

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<FieldElem>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} over GF({})", self.rows, self.cols, self.field.q())?;
        for i in 0..self.rows {
            let row: Vec<u32> = self.row(i).iter().map(|e| e.0).collect();
            writeln!(f, "  {row:?}")?;
        }
        Ok(())
    }
}

/// Output of Gaussian elimination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Echelon {
    pub reduced: Matrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl Matrix {
    pub fn zeros(field: &Field, rows: usize, cols: usize) -> Matrix {
        Matrix { field: field.clone(), rows, cols, data: vec![FieldElem::ZERO; rows * cols] }
    }

    pub fn identity(field: &Field, n: usize) -> Matrix {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m[(i, i)] = FieldElem::ONE;
        }
        m
    }

    /// Builds a matrix from rows of integer encodings, validating every entry.
    pub fn from_rows(field: &Field, cols: usize, rows: &[Vec<u32>]) -> Result<Matrix> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!("row of length {} in a {cols}-column matrix", row.len())));
            }
            for &x in row {
                data.push(field.elem(x)?);
            }
        }
        Ok(Matrix { field: field.clone(), rows: rows.len(), cols, data })
    }

    pub fn from_elems(field: &Field, rows: usize, cols: usize, data: Vec<FieldElem>) -> Matrix {
        assert_eq!(data.len(), rows * cols);
        Matrix { field: field.clone(), rows, cols, data }
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

    pub fn row(&self, i: usize) -> &[FieldElem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<FieldElem>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn to_u32_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|i| self.row(i).iter().map(|e| e.0).collect()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(&self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = Matrix::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = f.add(out[(i, j)], f.mul(a, other[(l, j)]));
                }
            }
        }
        Ok(out)
    }

    /// `v * self` for a row vector `v` of length `rows`.
    pub fn left_mul_vec(&self, v: &[FieldElem]) -> Vec<FieldElem> {
        let f = &self.field;
        let mut out = vec![FieldElem::ZERO; self.cols];
        for (i, &c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (o, &g) in out.iter_mut().zip(self.row(i)) {
                *o = f.add(*o, f.mul(c, g));
            }
        }
        out
    }

    /// Keeps the listed columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Matrix { field: self.field.clone(), rows: self.rows, cols: cols.len(), data }
    }

    /// Drops the listed columns. `cols` need not be sorted.
    pub fn delete_columns(&self, cols: &[usize]) -> Matrix {
        let mut drop = vec![false; self.cols];
        for &c in cols {
            drop[c] = true;
        }
        let keep: Vec<usize> = (0..self.cols).filter(|&c| !drop[c]).collect();
        self.select_columns(&keep)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix { field: self.field.clone(), rows: rows.len(), cols: self.cols, data }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    /// Reduced row echelon form by Gauss-Jordan elimination, taking the first
    /// nonzero entry in each column as pivot.
    pub fn rref(&self) -> Echelon {
        let f = &self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut lead = 0;
        for col in 0..m.cols {
            if lead == m.rows {
                break;
            }
            let Some(pr) = (lead..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(lead, pr);
            let inv = f.inv(m[(lead, col)]).expect("pivot is nonzero");
            for j in col..m.cols {
                m[(lead, j)] = f.mul(m[(lead, j)], inv);
            }
            for r in 0..m.rows {
                if r == lead {
                    continue;
                }
                let factor = m[(r, col)];
                if factor.is_zero() {
                    continue;
                }
                let neg = f.neg(factor);
                for j in col..m.cols {
                    let v = f.mul(neg, m[(lead, j)]);
                    m[(r, j)] = f.add(m[(r, j)], v);
                }
            }
            pivots.push(col);
            lead += 1;
        }
        Echelon { reduced: m, rank: pivots.len(), pivots }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// Basis (as rows) of `{x : self * x^T = 0}`.
    pub fn nullspace(&self) -> Matrix {
        let f = &self.field;
        let ech = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &ech.pivots {
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..self.cols).filter(|&c| !is_pivot[c]).collect();
        let mut basis = Matrix::zeros(f, free.len(), self.cols);
        for (b, &fc) in free.iter().enumerate() {
            basis[(b, fc)] = FieldElem::ONE;
            for (r, &pc) in ech.pivots.iter().enumerate() {
                basis[(b, pc)] = f.neg(ech.reduced[(r, fc)]);
            }
        }
        basis
    }

    /// Row echelon form with zero rows removed.
    pub fn row_space_basis(&self) -> Matrix {
        let ech = self.rref();
        ech.reduced.select_rows(&(0..ech.rank).collect::<Vec<_>>())
    }

    pub fn same_row_space(&self, other: &Matrix) -> bool {
        self.cols == other.cols && self.row_space_basis() == other.row_space_basis()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = FieldElem;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &FieldElem {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut FieldElem {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f2() -> Field {
        Field::new(2, 1, None).unwrap()
    }

    fn brute_nullspace_size(m: &Matrix) -> usize {
        let q = m.field().q() as usize;
        let total = q.pow(m.cols() as u32);
        let mt = m.transpose();
        (0..total)
            .filter(|&enc| {
                let x: Vec<FieldElem> =
                    (0..m.cols()).map(|i| FieldElem(((enc / q.pow(i as u32)) % q) as u32)).collect();
                // m * x^T == x * m^T
                mt.left_mul_vec(&x).iter().all(|e| e.is_zero())
            })
            .count()
    }

    #[test]
    fn rref_examples() {
        let f = f2();
        let id = Matrix::identity(&f, 4);
        let e = id.rref();
        assert_eq!((e.reduced, e.rank, e.pivots), (id.clone(), 4, vec![0, 1, 2, 3]));

        let m = Matrix::from_rows(&f, 3, &[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let e = m.rref();
        assert_eq!(e.rank, 2);
        assert_eq!(e.pivots, vec![0, 1]);
        assert_eq!(e.reduced.to_u32_rows(), vec![vec![1, 0, 1], vec![0, 1, 1]]);

        let z = Matrix::zeros(&f, 3, 4);
        let e = z.rref();
        assert_eq!((e.rank, e.pivots.len()), (0, 0));
        assert!(e.reduced.is_zero());
    }

    #[test]
    fn nullspace_examples() {
        let f = f2();
        let m = Matrix::from_rows(&f, 3, &[vec![1, 1, 1]]).unwrap();
        let b = m.nullspace();
        assert_eq!(b.rows(), 2);
        let even = Matrix::from_rows(&f, 3, &[vec![1, 1, 0], vec![1, 0, 1]]).unwrap();
        assert!(b.same_row_space(&even));
        assert_eq!(brute_nullspace_size(&m), 4);

        let inv = Matrix::from_rows(&f, 2, &[vec![1, 1], vec![0, 1]]).unwrap();
        assert_eq!(inv.nullspace().rows(), 0);

        let m = Matrix::from_rows(&f, 3, &[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        assert_eq!(m.nullspace().to_u32_rows(), vec![vec![1, 1, 1]]);
    }

    fn arb_matrix() -> impl Strategy<Value = Matrix> {
        (prop::sample::select(vec![2u64, 3, 4]), 1usize..=8, 1usize..=8).prop_flat_map(|(q, r, c)| {
            prop::collection::vec(0u32..q as u32, r * c).prop_map(move |v| {
                let f = Field::with_order(q).unwrap();
                Matrix::from_elems(&f, r, c, v.into_iter().map(FieldElem).collect())
            })
        })
    }

    proptest! {
        #[test]
        fn rank_nullity(m in arb_matrix()) {
            let ns = m.nullspace();
            prop_assert_eq!(m.rank() + ns.rows(), m.cols());
            prop_assert_eq!(ns.rank(), ns.rows());
            let prod = m.mul(&ns.transpose()).unwrap();
            prop_assert!(prod.is_zero());
        }

        #[test]
        fn rref_idempotent_and_pivots_increasing(m in arb_matrix()) {
            let e = m.rref();
            prop_assert_eq!(&e.reduced.rref().reduced, &e.reduced);
            prop_assert!(e.pivots.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(e.reduced.same_row_space(&m));
        }
    }

    #[test]
    fn nullspace_size_matches_brute_force() {
        let f3 = Field::with_order(3).unwrap();
        let m = Matrix::from_rows(&f3, 4, &[vec![1, 2, 0, 1], vec![2, 1, 0, 2]]).unwrap();
        assert_eq!(brute_nullspace_size(&m), 3usize.pow(m.nullspace().rows() as u32));
    }
}
