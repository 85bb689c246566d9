//! Small dense integer matrices: products, Bareiss determinants, adjugates,
//! Smith and Hermite normal forms. All arithmetic is checked `i128`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i128>,
}

fn ck(v: Option<i128>) -> Result<i128> {
    v.ok_or(Error::Overflow("integer matrix arithmetic"))
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.as_ref().len(), c, "ragged matrix");
            for (j, &v) in row.as_ref().iter().enumerate() {
                m[(i, j)] = v as i128;
            }
        }
        m
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

    pub fn row(&self, i: usize) -> &[i128] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows_i64(&self) -> Result<Vec<Vec<i64>>> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(|&v| i64::try_from(v).map_err(|_| Error::Overflow("matrix entry")))
                    .collect()
            })
            .collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let t = ck(a.checked_mul(other[(k, j)]))?;
                    out[(i, j)] = ck(out[(i, j)].checked_add(t))?;
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Result<IntMatrix> {
        let mut acc = IntMatrix::identity(self.rows);
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    pub fn apply(&self, v: &[i64]) -> Result<Vec<i64>> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = 0i128;
                for (j, &x) in v.iter().enumerate() {
                    acc = ck(acc.checked_add(ck(self[(i, j)].checked_mul(x as i128))?))?;
                }
                i64::try_from(acc).map_err(|_| Error::Overflow("matrix-vector product"))
            })
            .collect()
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, c: i128) -> Result<IntMatrix> {
        let data = self
            .data
            .iter()
            .map(|&v| ck(v.checked_mul(c)))
            .collect::<Result<_>>()?;
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Exact division of every entry; `None` if some entry is not divisible.
    pub fn div_exact(&self, c: i128) -> Option<IntMatrix> {
        if c == 0 || self.data.iter().any(|&v| v % c != 0) {
            return None;
        }
        Some(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v / c).collect(),
        })
    }

    /// Fraction-free Gaussian elimination.
    pub fn det(&self) -> Result<i128> {
        assert!(self.is_square());
        let n = self.rows;
        if n == 0 {
            return Ok(1);
        }
        let mut a = self.data.clone();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if a[k * n + k] == 0 {
                match (k + 1..n).find(|&r| a[r * n + k] != 0) {
                    Some(r) => {
                        for c in 0..n {
                            a.swap(k * n + c, r * n + c);
                        }
                        sign = -sign;
                    }
                    None => return Ok(0),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t1 = ck(a[i * n + j].checked_mul(a[k * n + k]))?;
                    let t2 = ck(a[i * n + k].checked_mul(a[k * n + j]))?;
                    a[i * n + j] = ck(t1.checked_sub(t2))? / prev;
                }
                a[i * n + k] = 0;
            }
            prev = a[k * n + k];
        }
        Ok(sign * a[n * n - 1])
    }

    fn minor(&self, skip_r: usize, skip_c: usize) -> IntMatrix {
        let n = self.rows;
        let mut out = IntMatrix::zeros(n - 1, n - 1);
        let mut oi = 0;
        for i in (0..n).filter(|&i| i != skip_r) {
            let mut oj = 0;
            for j in (0..n).filter(|&j| j != skip_c) {
                out[(oi, oj)] = self[(i, j)];
                oj += 1;
            }
            oi += 1;
        }
        out
    }

    /// `adj(A)` with `A adj(A) = det(A) I`.
    pub fn adjugate(&self) -> Result<IntMatrix> {
        assert!(self.is_square());
        let n = self.rows;
        if n == 1 {
            return Ok(IntMatrix::identity(1));
        }
        let mut out = IntMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let c = self.minor(i, j).det()?;
                out[(j, i)] = if (i + j) % 2 == 0 { c } else { -c };
            }
        }
        Ok(out)
    }

    /// Integer solution of `A x = b` for square nonsingular `A`, if one exists.
    pub fn solve_integral(&self, b: &[i64]) -> Result<Option<Vec<i64>>> {
        let det = self.det()?;
        if det == 0 {
            return Ok(None);
        }
        let adj = self.adjugate()?;
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = 0i128;
            for (j, &x) in b.iter().enumerate() {
                acc = ck(acc.checked_add(ck(adj[(i, j)].checked_mul(x as i128))?))?;
            }
            if acc % det != 0 {
                return Ok(None);
            }
            out.push(i64::try_from(acc / det).map_err(|_| Error::Overflow("solve"))?);
        }
        Ok(Some(out))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// row[dst] -= q * row[src]
    fn row_axpy(&mut self, dst: usize, src: usize, q: i128) -> Result<()> {
        for c in 0..self.cols {
            let t = ck(q.checked_mul(self[(src, c)]))?;
            self[(dst, c)] = ck(self[(dst, c)].checked_sub(t))?;
        }
        Ok(())
    }

    fn col_axpy(&mut self, dst: usize, src: usize, q: i128) -> Result<()> {
        for r in 0..self.rows {
            let t = ck(q.checked_mul(self[(r, src)]))?;
            self[(r, dst)] = ck(self[(r, dst)].checked_sub(t))?;
        }
        Ok(())
    }

    /// Invariant factors `d_1 | d_2 | ... | d_r` (positive, nonzero ones only).
    pub fn smith_invariants(&self) -> Result<Vec<i128>> {
        let mut a = self.clone();
        let (m, n) = (a.rows, a.cols);
        let mut diag = Vec::new();
        for t in 0..m.min(n) {
            // smallest nonzero entry of the trailing block as pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..m {
                for j in t..n {
                    let v = a[(i, j)];
                    if v != 0 && best.is_none_or(|(bi, bj)| v.abs() < a[(bi, bj)].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            a.swap_rows(t, pi);
            a.swap_cols(t, pj);
            loop {
                let mut dirty = false;
                for i in t + 1..m {
                    let q = a[(i, t)].div_euclid(a[(t, t)]);
                    a.row_axpy(i, t, q)?;
                    if a[(i, t)] != 0 {
                        dirty = true;
                    }
                }
                for j in t + 1..n {
                    let q = a[(t, j)].div_euclid(a[(t, t)]);
                    a.col_axpy(j, t, q)?;
                    if a[(t, j)] != 0 {
                        dirty = true;
                    }
                }
                if !dirty {
                    // pivot must divide the whole trailing block
                    let bad = (t + 1..m)
                        .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                        .find(|&(i, j)| a[(i, j)] % a[(t, t)] != 0);
                    match bad {
                        None => break,
                        Some((i, _)) => {
                            a.row_axpy(t, i, -1)?;
                            continue;
                        }
                    }
                }
                // move the smallest nonzero entry of row/column t onto the pivot
                let mut best = (t, t);
                for i in t + 1..m {
                    if a[(i, t)] != 0 && a[(i, t)].abs() < a[best].abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..n {
                    if a[(t, j)] != 0 && a[(t, j)].abs() < a[best].abs() {
                        best = (t, j);
                    }
                }
                a.swap_rows(t, best.0);
                a.swap_cols(t, best.1);
            }
            diag.push(a[(t, t)].abs());
        }
        Ok(diag)
    }

    /// Row-style Hermite normal form of the lattice spanned by the rows:
    /// upper triangular, positive pivots, entries above each pivot reduced into
    /// `[0, pivot)`. Zero rows are dropped.
    pub fn hermite_rows(&self) -> Result<IntMatrix> {
        let mut a = self.clone();
        let (m, n) = (a.rows, a.cols);
        let mut r = 0;
        for c in 0..n {
            if r == m {
                break;
            }
            // Euclid down the column until a single nonzero remains at row r
            loop {
                let mut piv: Option<usize> = None;
                for i in r..m {
                    if a[(i, c)] != 0 && piv.is_none_or(|p| a[(i, c)].abs() < a[(p, c)].abs())
                    {
                        piv = Some(i);
                    }
                }
                let Some(pv) = piv else { break };
                a.swap_rows(r, pv);
                let mut done = true;
                for i in r + 1..m {
                    if a[(i, c)] != 0 {
                        let q = a[(i, c)].div_euclid(a[(r, c)]);
                        a.row_axpy(i, r, q)?;
                        if a[(i, c)] != 0 {
                            done = false;
                        }
                    }
                }
                if done {
                    break;
                }
            }
            if a[(r, c)] == 0 {
                continue;
            }
            if a[(r, c)] < 0 {
                for j in 0..n {
                    a[(r, j)] = -a[(r, j)];
                }
            }
            for i in 0..r {
                let q = a[(i, c)].div_euclid(a[(r, c)]);
                a.row_axpy(i, r, q)?;
            }
            r += 1;
        }
        let mut out = IntMatrix::zeros(r, n);
        out.data.copy_from_slice(&a.data[..r * n]);
        Ok(out)
    }

    /// Membership of `v` in the row lattice, given `self` in Hermite form.
    pub fn hermite_contains(&self, v: &[i64]) -> Result<bool> {
        let mut w: Vec<i128> = v.iter().map(|&x| x as i128).collect();
        let mut col = 0;
        for r in 0..self.rows {
            while col < self.cols && self[(r, col)] == 0 {
                if w[col] != 0 {
                    return Ok(false);
                }
                col += 1;
            }
            if col == self.cols {
                break;
            }
            if w[col] % self[(r, col)] != 0 {
                return Ok(false);
            }
            let q = w[col] / self[(r, col)];
            for j in 0..self.cols {
                w[j] = ck(w[j].checked_sub(ck(q.checked_mul(self[(r, j)]))?))?;
            }
            col += 1;
        }
        Ok(w.iter().all(|&x| x == 0))
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = i128;
    fn index(&self, (i, j): (usize, usize)) -> &i128 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i128 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[i128]> = (0..self.rows).map(|i| self.row(i)).collect();
        write!(f, "{rows:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn det_and_adjugate() {
        let a = IntMatrix::from_rows(&[[-1i64, 5], [1, -1]]);
        assert_eq!(a.det().unwrap(), -4);
        let adj = a.adjugate().unwrap();
        assert_eq!(a.mul(&adj).unwrap(), IntMatrix::identity(2).scale(-4).unwrap());
        let b = IntMatrix::from_rows(&[[2i64, 0, 1], [1, 3, 2], [1, 1, 1]]);
        assert_eq!(b.det().unwrap(), 2 + (1 - 3));
    }

    #[test]
    fn smith_of_small_matrices() {
        let a = IntMatrix::from_rows(&[[2i64, 4, 4], [-6, 6, 12], [10, -4, -16]]);
        assert_eq!(a.smith_invariants().unwrap(), vec![2, 6, 12]);
        let b = IntMatrix::from_rows(&[[-1i64, 5], [1, -1]]);
        assert_eq!(b.smith_invariants().unwrap(), vec![1, 4]);
        let z = IntMatrix::zeros(2, 3);
        assert!(z.smith_invariants().unwrap().is_empty());
    }

    #[test]
    fn hermite_membership() {
        let a = IntMatrix::from_rows(&[[2i64, 0], [0, 3]]);
        let h = a.hermite_rows().unwrap();
        assert!(h.hermite_contains(&[4, 9]).unwrap());
        assert!(!h.hermite_contains(&[1, 3]).unwrap());
        let b = IntMatrix::from_rows(&[[-1i64, 5], [1, -1]]);
        let h = b.hermite_rows().unwrap();
        assert!(h.hermite_contains(&[0, 4]).unwrap());
        assert!(!h.hermite_contains(&[0, 1]).unwrap());
    }

    #[test]
    fn solve_integral_detects_divisibility() {
        let p = IntMatrix::from_rows(&[[2i64, 2], [1, 2]]);
        assert_eq!(p.solve_integral(&[2, 1]).unwrap(), Some(vec![1, 0]));
        assert_eq!(p.solve_integral(&[1, 0]).unwrap(), None);
    }

    proptest! {
        #[test]
        fn smith_product_is_abs_det(rows in proptest::collection::vec(
            proptest::collection::vec(-6i64..=6, 4), 4)) {
            let a = IntMatrix::from_rows(&rows);
            let det = a.det().unwrap();
            let inv = a.smith_invariants().unwrap();
            if det == 0 {
                prop_assert!(inv.len() < 4);
            } else {
                prop_assert_eq!(inv.iter().product::<i128>(), det.abs());
                for w in inv.windows(2) {
                    prop_assert_eq!(w[1] % w[0], 0);
                }
            }
        }

        #[test]
        fn hermite_contains_generators_and_combinations(
            rows in proptest::collection::vec(proptest::collection::vec(-5i64..=5, 3), 3),
            coeffs in proptest::collection::vec(-3i64..=3, 3)) {
            let a = IntMatrix::from_rows(&rows);
            let h = a.hermite_rows().unwrap();
            let mut v = vec![0i64; 3];
            for (r, c) in rows.iter().zip(&coeffs) {
                prop_assert!(h.hermite_contains(r).unwrap());
                for j in 0..3 {
                    v[j] += c * r[j];
                }
            }
            prop_assert!(h.hermite_contains(&v).unwrap());
            let det = a.det().unwrap().abs();
            if det > 1 {
                // index > 1 means some unit vector misses the lattice
                let misses = (0..3).any(|j| {
                    let mut e = vec![0i64; 3];
                    e[j] = 1;
                    !h.hermite_contains(&e).unwrap()
                });
                prop_assert!(misses);
            }
        }
    }
}
