//! Dense square matrices and row reduction over a small finite field.

use serde::{Deserialize, Serialize};

use crate::field::{FieldError, FqElement, FqField};

/// An `n x n` matrix over a finite field, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix {
  n:       usize,
  entries: Vec<FqElement>,
}

/// Text form of a matrix: row-major list of element coefficient strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixJson {
  pub n:       usize,
  pub entries: Vec<String>,
}

impl Matrix {
  pub fn zero(n: usize) -> Self { Self { n, entries: vec![FqElement::ZERO; n * n] } }

  pub fn identity(n: usize) -> Self {
    let mut m = Self::zero(n);
    for i in 0..n {
      m.set(i, i, FqElement::ONE);
    }
    m
  }

  pub fn from_rows(rows: &[Vec<FqElement>]) -> Self {
    let n = rows.len();
    assert!(rows.iter().all(|r| r.len() == n), "matrix rows must be square");
    Self { n, entries: rows.concat() }
  }

  /// Matrix whose `j`-th column is `cols[j]`.
  pub fn from_columns(cols: &[Vec<FqElement>]) -> Self { Self::from_rows(cols).transpose() }

  /// `I + c E_ij`.
  pub fn elementary(n: usize, i: usize, j: usize, c: FqElement) -> Self {
    assert_ne!(i, j);
    let mut m = Self::identity(n);
    m.set(i, j, c);
    m
  }

  pub fn diagonal(diag: &[FqElement]) -> Self {
    let mut m = Self::zero(diag.len());
    for (i, &d) in diag.iter().enumerate() {
      m.set(i, i, d);
    }
    m
  }

  /// Permutation matrix sending basis vector `e_k` to `e_{perm[k]}`.
  pub fn permutation(perm: &[usize]) -> Self {
    let mut m = Self::zero(perm.len());
    for (k, &pk) in perm.iter().enumerate() {
      m.set(pk, k, FqElement::ONE);
    }
    m
  }

  pub fn n(&self) -> usize { self.n }

  pub fn entries(&self) -> &[FqElement] { &self.entries }

  #[inline]
  pub fn get(&self, i: usize, j: usize) -> FqElement { self.entries[i * self.n + j] }

  #[inline]
  pub fn set(&mut self, i: usize, j: usize, v: FqElement) { self.entries[i * self.n + j] = v; }

  pub fn row(&self, i: usize) -> &[FqElement] { &self.entries[i * self.n..(i + 1) * self.n] }

  pub fn column(&self, j: usize) -> Vec<FqElement> { (0..self.n).map(|i| self.get(i, j)).collect() }

  pub fn is_identity(&self) -> bool { *self == Self::identity(self.n) }

  pub fn transpose(&self) -> Self {
    let mut t = Self::zero(self.n);
    for i in 0..self.n {
      for j in 0..self.n {
        t.set(j, i, self.get(i, j));
      }
    }
    t
  }

  pub fn mul(&self, other: &Matrix, f: &FqField) -> Matrix {
    assert_eq!(self.n, other.n);
    let n = self.n;
    let mut out = Self::zero(n);
    for i in 0..n {
      for k in 0..n {
        let a = self.get(i, k);
        if a.is_zero() {
          continue;
        }
        for j in 0..n {
          let v = f.add(out.get(i, j), f.mul(a, other.get(k, j)));
          out.set(i, j, v);
        }
      }
    }
    out
  }

  /// `self * v` for a column vector `v`.
  pub fn apply(&self, v: &[FqElement], f: &FqField) -> Vec<FqElement> {
    (0..self.n)
      .map(|i| {
        self.row(i).iter().zip(v).fold(FqElement::ZERO, |acc, (&a, &b)| f.add(acc, f.mul(a, b)))
      })
      .collect()
  }

  pub fn scale(&self, c: FqElement, f: &FqField) -> Matrix {
    Matrix { n: self.n, entries: self.entries.iter().map(|&x| f.mul(c, x)).collect() }
  }

  /// Entrywise `x -> x^(p^m)`.
  pub fn frobenius(&self, m: u32, f: &FqField) -> Matrix {
    Matrix { n: self.n, entries: self.entries.iter().map(|&x| f.frobenius(x, m)).collect() }
  }

  pub fn det(&self, f: &FqField) -> FqElement {
    let mut a = self.clone();
    let n = self.n;
    let mut det = FqElement::ONE;
    for col in 0..n {
      let Some(pivot) = (col..n).find(|&r| !a.get(r, col).is_zero()) else {
        return FqElement::ZERO;
      };
      if pivot != col {
        for j in 0..n {
          let (x, y) = (a.get(col, j), a.get(pivot, j));
          a.set(col, j, y);
          a.set(pivot, j, x);
        }
        det = f.neg(det);
      }
      let p = a.get(col, col);
      det = f.mul(det, p);
      let p_inv = f.inv(p).unwrap();
      for r in col + 1..n {
        let factor = f.mul(a.get(r, col), p_inv);
        if factor.is_zero() {
          continue;
        }
        for j in col..n {
          let v = f.sub(a.get(r, j), f.mul(factor, a.get(col, j)));
          a.set(r, j, v);
        }
      }
    }
    det
  }

  pub fn inverse(&self, f: &FqField) -> Option<Matrix> {
    let n = self.n;
    let mut a = self.clone();
    let mut inv = Self::identity(n);
    for col in 0..n {
      let pivot = (col..n).find(|&r| !a.get(r, col).is_zero())?;
      for j in 0..n {
        let (x, y) = (a.get(col, j), a.get(pivot, j));
        a.set(col, j, y);
        a.set(pivot, j, x);
        let (x, y) = (inv.get(col, j), inv.get(pivot, j));
        inv.set(col, j, y);
        inv.set(pivot, j, x);
      }
      let p_inv = f.inv(a.get(col, col)).unwrap();
      for j in 0..n {
        a.set(col, j, f.mul(a.get(col, j), p_inv));
        inv.set(col, j, f.mul(inv.get(col, j), p_inv));
      }
      for r in 0..n {
        if r == col {
          continue;
        }
        let factor = a.get(r, col);
        if factor.is_zero() {
          continue;
        }
        for j in 0..n {
          a.set(r, j, f.sub(a.get(r, j), f.mul(factor, a.get(col, j))));
          inv.set(r, j, f.sub(inv.get(r, j), f.mul(factor, inv.get(col, j))));
        }
      }
    }
    Some(inv)
  }

  /// `self * other * self^-1`.
  pub fn conjugate(&self, other: &Matrix, f: &FqField) -> Matrix {
    let inv = self.inverse(f).expect("conjugating matrix must be invertible");
    self.mul(other, f).mul(&inv, f)
  }

  /// `a b a^-1 b^-1`.
  pub fn commutator(a: &Matrix, b: &Matrix, f: &FqField) -> Matrix {
    let ai = a.inverse(f).expect("invertible");
    let bi = b.inverse(f).expect("invertible");
    a.mul(b, f).mul(&ai, f).mul(&bi, f)
  }

  /// Transpose-inverse, the duality automorphism of the special linear group.
  pub fn transpose_inverse(&self, f: &FqField) -> Matrix {
    self.inverse(f).expect("invertible").transpose()
  }

  /// Projective normal form: scaled so that the first nonzero entry is 1.
  pub fn projective_normal_form(&self, f: &FqField) -> Matrix {
    match self.entries.iter().find(|x| !x.is_zero()) {
      Some(&lead) => self.scale(f.inv(lead).unwrap(), f),
      None => self.clone(),
    }
  }

  pub fn to_json(&self, f: &FqField) -> MatrixJson {
    MatrixJson { n: self.n, entries: self.entries.iter().map(|&x| f.format_element(x)).collect() }
  }

  pub fn from_json(json: &MatrixJson, f: &FqField) -> Result<Matrix, FieldError> {
    if json.entries.len() != json.n * json.n {
      return Err(FieldError::TableSize { got: json.entries.len(), expected: json.n * json.n });
    }
    let entries = json.entries.iter().map(|s| f.parse_element(s)).collect::<Result<_, _>>()?;
    Ok(Matrix { n: json.n, entries })
  }
}

/// Reduced row echelon form of the given rows, zero rows dropped.
pub fn rref(rows: &[Vec<FqElement>], f: &FqField) -> Vec<Vec<FqElement>> {
  let mut a: Vec<Vec<FqElement>> = rows.to_vec();
  let ncols = a.first().map_or(0, |r| r.len());
  let mut rank = 0;
  for col in 0..ncols {
    let Some(pivot) = (rank..a.len()).find(|&r| !a[r][col].is_zero()) else {
      continue;
    };
    a.swap(rank, pivot);
    let p_inv = f.inv(a[rank][col]).unwrap();
    for x in a[rank].iter_mut() {
      *x = f.mul(*x, p_inv);
    }
    for r in 0..a.len() {
      if r == rank || a[r][col].is_zero() {
        continue;
      }
      let factor = a[r][col];
      for c in 0..ncols {
        let v = f.sub(a[r][c], f.mul(factor, a[rank][c]));
        a[r][c] = v;
      }
    }
    rank += 1;
  }
  a.truncate(rank);
  a
}

/// Basis of `{ x : rows . x = 0 }` for vectors of length `ncols`.
pub fn nullspace(rows: &[Vec<FqElement>], ncols: usize, f: &FqField) -> Vec<Vec<FqElement>> {
  let reduced = if rows.is_empty() { Vec::new() } else { rref(rows, f) };
  let pivots: Vec<usize> =
    reduced.iter().map(|r| r.iter().position(|x| !x.is_zero()).unwrap()).collect();
  (0..ncols)
    .filter(|c| !pivots.contains(c))
    .map(|free| {
      let mut v = vec![FqElement::ZERO; ncols];
      v[free] = FqElement::ONE;
      for (row, &pc) in reduced.iter().zip(&pivots) {
        v[pc] = f.neg(row[free]);
      }
      v
    })
    .collect()
}
