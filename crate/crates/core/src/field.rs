//! Arithmetic in small finite fields `GF(p^e)`.
//!
//! Elements are stored as their index `c0 + c1 p + ... + c_{e-1} p^{e-1}` in the
//! coefficient basis `1, x, ..., x^{e-1}` of `F_p[x] / (modulus)`. All arithmetic goes
//! through tables computed once at construction, so every operation is a lookup.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the field order. Exhaustive verifiers are quadratic or worse in `q`.
pub const DEFAULT_FIELD_BOUND: usize = 16;

/// Absolute cap on the field order; element indices are stored in a `u16` and the
/// tables are `q^2` entries each.
pub const MAX_FIELD_BOUND: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
  #[error("{0} is not prime")]
  NotPrime(u32),
  #[error("field degree must be at least 1")]
  ZeroDegree,
  #[error("field order {p}^{e} exceeds the configured bound {bound}")]
  BoundExceeded { p: u32, e: u32, bound: usize },
  #[error("table has {got} entries but the field has {expected} elements")]
  TableSize { got: usize, expected: usize },
  #[error("table entry {index} = {value} is not an element of the field")]
  NotAnElement { index: usize, value: u16 },
  #[error("map is not unital: 1 maps to {image}")]
  NotUnital { image: String },
  #[error("map is not additive: f({x} + {y}) != f({x}) + f({y})")]
  NotAdditive { x: String, y: String },
  #[error("map is not multiplicative: f({x} * {y}) != f({x}) * f({y})")]
  NotMultiplicative { x: String, y: String },
  #[error("ring homomorphism matches no Frobenius power")]
  NoFrobeniusMatch,
  #[error("cannot parse field element {0:?}")]
  Parse(String),
}

/// An element of a finite field, identified by its coefficient index.
///
/// The index only has meaning together with the [`FqField`] it came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FqElement(pub u16);

impl FqElement {
  pub const ZERO: FqElement = FqElement(0);
  pub const ONE: FqElement = FqElement(1);

  pub fn index(self) -> usize { self.0 as usize }

  pub fn is_zero(self) -> bool { self.0 == 0 }
}

/// The finite field `F_p[x] / (modulus)` of order `q = p^e`.
#[derive(Clone, PartialEq, Eq)]
pub struct FqField {
  p:       u32,
  e:       u32,
  q:       usize,
  /// Monic modulus, lowest coefficient first, length `e + 1`.
  modulus: Vec<u32>,
  add:     Vec<u16>,
  mul:     Vec<u16>,
  neg:     Vec<u16>,
  inv:     Vec<u16>,
}

impl fmt::Debug for FqField {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result { f.write_str(&self.header()) }
}

impl fmt::Display for FqField {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result { f.write_str(&self.header()) }
}

fn is_prime(p: u32) -> bool {
  if p < 2 {
    return false;
  }
  let mut d = 2;
  while d * d <= p {
    if p % d == 0 {
      return false;
    }
    d += 1;
  }
  true
}

/// Coefficients of index `k` as a polynomial of the given length over `F_p`.
fn digits(mut k: usize, p: u32, len: usize) -> Vec<u32> {
  let mut out = vec![0; len];
  for c in out.iter_mut() {
    *c = (k % p as usize) as u32;
    k /= p as usize;
  }
  out
}

fn trim(poly: &mut Vec<u32>) {
  while poly.last() == Some(&0) {
    poly.pop();
  }
}

/// Remainder of `a` modulo the monic polynomial `m` over `F_p`.
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
  let mut r = a.to_vec();
  trim(&mut r);
  let dm = m.len() - 1;
  while r.len() > dm {
    let lead = *r.last().unwrap();
    let shift = r.len() - 1 - dm;
    for (i, &mc) in m.iter().enumerate() {
      let v = &mut r[shift + i];
      *v = (*v + p - (lead * mc) % p) % p;
    }
    trim(&mut r);
  }
  r
}

/// Monic irreducibility by trial division against every monic polynomial of degree at
/// most `deg / 2`.
fn is_irreducible(poly: &[u32], p: u32) -> bool {
  let deg = poly.len() - 1;
  for d in 1..=deg / 2 {
    let count = (p as usize).pow(d as u32);
    for k in 0..count {
      let mut factor = digits(k, p, d);
      factor.push(1);
      if poly_rem(poly, &factor, p).is_empty() {
        return false;
      }
    }
  }
  true
}

impl FqField {
  pub fn p(&self) -> u32 { self.p }

  pub fn e(&self) -> u32 { self.e }

  pub fn q(&self) -> usize { self.q }

  pub fn modulus(&self) -> &[u32] { &self.modulus }

  pub fn zero(&self) -> FqElement { FqElement::ZERO }

  pub fn one(&self) -> FqElement { FqElement::ONE }

  /// All elements in index order; exactly `q` entries.
  pub fn elements(&self) -> impl Iterator<Item = FqElement> + '_ {
    (0..self.q).map(|i| FqElement(i as u16))
  }

  /// Nonzero elements in index order.
  pub fn units(&self) -> impl Iterator<Item = FqElement> + '_ {
    (1..self.q).map(|i| FqElement(i as u16))
  }

  pub fn contains(&self, x: FqElement) -> bool { x.index() < self.q }

  #[inline]
  pub fn add(&self, a: FqElement, b: FqElement) -> FqElement {
    FqElement(self.add[a.index() * self.q + b.index()])
  }

  #[inline]
  pub fn neg(&self, a: FqElement) -> FqElement { FqElement(self.neg[a.index()]) }

  #[inline]
  pub fn sub(&self, a: FqElement, b: FqElement) -> FqElement { self.add(a, self.neg(b)) }

  #[inline]
  pub fn mul(&self, a: FqElement, b: FqElement) -> FqElement {
    FqElement(self.mul[a.index() * self.q + b.index()])
  }

  /// Multiplicative inverse; `None` for zero.
  pub fn inv(&self, a: FqElement) -> Option<FqElement> {
    if a.is_zero() {
      None
    } else {
      Some(FqElement(self.inv[a.index()]))
    }
  }

  pub fn pow(&self, a: FqElement, mut k: u64) -> FqElement {
    let mut base = a;
    let mut acc = self.one();
    while k > 0 {
      if k & 1 == 1 {
        acc = self.mul(acc, base);
      }
      base = self.mul(base, base);
      k >>= 1;
    }
    acc
  }

  /// `x^(p^m)`.
  pub fn frobenius(&self, x: FqElement, m: u32) -> FqElement {
    let mut y = x;
    for _ in 0..m {
      y = self.pow(y, self.p as u64);
    }
    y
  }

  /// Image of an integer under `Z -> F_p -> F_q`.
  pub fn from_int(&self, k: i64) -> FqElement {
    FqElement(k.rem_euclid(self.p as i64) as u16)
  }

  pub fn coeffs(&self, x: FqElement) -> Vec<u32> { digits(x.index(), self.p, self.e as usize) }

  pub fn from_coeffs(&self, coeffs: &[u32]) -> Option<FqElement> {
    if coeffs.len() != self.e as usize || coeffs.iter().any(|&c| c >= self.p) {
      return None;
    }
    let idx = coeffs.iter().rev().fold(0usize, |acc, &c| acc * self.p as usize + c as usize);
    Some(FqElement(idx as u16))
  }

  /// Coefficient-list serialization `"c0,c1,...,c_{e-1}"`.
  pub fn format_element(&self, x: FqElement) -> String {
    self.coeffs(x).iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
  }

  pub fn parse_element(&self, s: &str) -> Result<FqElement, FieldError> {
    let coeffs: Result<Vec<u32>, _> = s.split(',').map(|t| t.trim().parse::<u32>()).collect();
    coeffs
      .ok()
      .and_then(|c| self.from_coeffs(&c))
      .ok_or_else(|| FieldError::Parse(s.to_string()))
  }

  /// Report header `"GF(p^e;modulus=m0,m1,...,me)"`, modulus lowest coefficient first.
  pub fn header(&self) -> String {
    let m = self.modulus.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
    format!("GF({}^{};modulus={})", self.p, self.e, m)
  }

  /// A generator of the multiplicative group.
  pub fn primitive_element(&self) -> FqElement {
    let order = (self.q - 1) as u64;
    self
      .units()
      .find(|&x| (1..order).all(|k| order % k != 0 || self.pow(x, k) != self.one()))
      .expect("multiplicative group of a finite field is cyclic")
  }
}

/// Builds `GF(p^e)` with the default order bound.
pub fn make_field(p: u32, e: u32) -> Result<FqField, FieldError> {
  make_field_with_bound(p, e, DEFAULT_FIELD_BOUND)
}

/// Builds `GF(p^e)`, rejecting fields with more than `bound` elements.
///
/// The modulus is the least monic irreducible polynomial of degree `e`, ordered by its
/// coefficient list `(c0, c1, ..., c_{e-1})` compared lexicographically.
pub fn make_field_with_bound(p: u32, e: u32, bound: usize) -> Result<FqField, FieldError> {
  if !is_prime(p) {
    return Err(FieldError::NotPrime(p));
  }
  if e == 0 {
    return Err(FieldError::ZeroDegree);
  }
  let bound = bound.min(MAX_FIELD_BOUND);
  let q = (p as u128).checked_pow(e).filter(|&q| q <= bound as u128);
  let Some(q) = q else {
    return Err(FieldError::BoundExceeded { p, e, bound });
  };
  let q = q as usize;
  let e_us = e as usize;

  // Lexicographic order on (c0, ..., c_{e-1}) with c0 most significant.
  let mut candidates: Vec<Vec<u32>> = (0..q)
    .map(|k| {
      let mut c = digits(k, p, e_us);
      c.reverse();
      c
    })
    .collect();
  candidates.sort();
  let modulus = candidates
    .into_iter()
    .map(|mut c| {
      c.push(1);
      c
    })
    .find(|m| is_irreducible(m, p))
    .expect("irreducible polynomials exist in every degree");

  let mut add = vec![0u16; q * q];
  let mut mul = vec![0u16; q * q];
  let polys: Vec<Vec<u32>> = (0..q).map(|k| digits(k, p, e_us)).collect();
  let index_of = |c: &[u32]| -> u16 {
    let mut full = c.to_vec();
    full.resize(e_us, 0);
    full.iter().rev().fold(0usize, |acc, &x| acc * p as usize + x as usize) as u16
  };
  for a in 0..q {
    for b in 0..q {
      let sum: Vec<u32> = polys[a].iter().zip(&polys[b]).map(|(x, y)| (x + y) % p).collect();
      let mut prod = vec![0u32; 2 * e_us - 1];
      for (i, x) in polys[a].iter().enumerate() {
        for (j, y) in polys[b].iter().enumerate() {
          prod[i + j] = (prod[i + j] + x * y) % p;
        }
      }
      add[a * q + b] = index_of(&sum);
      mul[a * q + b] = index_of(&poly_rem(&prod, &modulus, p));
    }
  }
  let neg = (0..q).map(|a| (0..q).find(|&b| add[a * q + b] == 0).unwrap() as u16).collect();
  let inv = (0..q)
    .map(|a| if a == 0 { 0 } else { (1..q).find(|&b| mul[a * q + b] == 1).unwrap() as u16 })
    .collect();

  Ok(FqField { p, e, q, modulus, add, mul, neg, inv })
}

/// The field endomorphism `x -> x^(p^m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldHom {
  pub exponent: u32,
}

impl FieldHom {
  pub const IDENTITY: FieldHom = FieldHom { exponent: 0 };

  pub fn apply(&self, field: &FqField, x: FqElement) -> FqElement {
    field.frobenius(x, self.exponent)
  }

  pub fn table(&self, field: &FqField) -> Vec<FqElement> {
    field.elements().map(|x| self.apply(field, x)).collect()
  }

  pub fn compose(&self, other: &FieldHom, field: &FqField) -> FieldHom {
    FieldHom { exponent: (self.exponent + other.exponent) % field.e() }
  }
}

/// Exhaustive ring-homomorphism check of a total table `x -> table[x]`.
fn check_ring_hom(field: &FqField, table: &[FqElement]) -> Result<(), FieldError> {
  if table.len() != field.q() {
    return Err(FieldError::TableSize { got: table.len(), expected: field.q() });
  }
  if let Some((index, x)) = table.iter().enumerate().find(|(_, x)| !field.contains(**x)) {
    return Err(FieldError::NotAnElement { index, value: x.0 });
  }
  let f = |x: FqElement| table[x.index()];
  if f(field.one()) != field.one() {
    return Err(FieldError::NotUnital { image: field.format_element(f(field.one())) });
  }
  for x in field.elements() {
    for y in field.elements() {
      if f(field.add(x, y)) != field.add(f(x), f(y)) {
        return Err(FieldError::NotAdditive {
          x: field.format_element(x),
          y: field.format_element(y),
        });
      }
      if f(field.mul(x, y)) != field.mul(f(x), f(y)) {
        return Err(FieldError::NotMultiplicative {
          x: field.format_element(x),
          y: field.format_element(y),
        });
      }
    }
  }
  Ok(())
}

/// The `e` endomorphisms of `GF(p^e)`, each checked on all pairs.
pub fn all_field_endomorphisms(field: &FqField) -> Vec<FieldHom> {
  (0..field.e())
    .map(|exponent| FieldHom { exponent })
    .filter(|h| check_ring_hom(field, &h.table(field)).is_ok())
    .collect()
}

/// Identifies a total self-map of the field as a Frobenius power.
pub fn classify_as_field_hom(field: &FqField, table: &[FqElement]) -> Result<FieldHom, FieldError> {
  check_ring_hom(field, table)?;
  (0..field.e())
    .map(|exponent| FieldHom { exponent })
    .find(|h| h.table(field) == table)
    .ok_or(FieldError::NoFrobeniusMatch)
}

#[cfg(test)]
mod tests {
  use super::*;

  #[test]
  fn prime_fields() {
    let f2 = make_field(2, 1).unwrap();
    assert_eq!(f2.q(), 2);
    assert_eq!(f2.modulus(), &[0, 1]);
    let f5 = make_field(5, 1).unwrap();
    assert_eq!(f5.mul(f5.from_int(3), f5.from_int(4)), f5.from_int(2));
  }

  #[test]
  fn canonical_moduli() {
    assert_eq!(make_field(2, 2).unwrap().modulus(), &[1, 1, 1]);
    assert_eq!(make_field(3, 2).unwrap().modulus(), &[1, 0, 1]);
    assert_eq!(make_field(2, 3).unwrap().modulus(), &[1, 0, 1, 1]);
    assert_eq!(make_field(2, 4).unwrap().modulus(), &[1, 0, 0, 1, 1]);
  }

  #[test]
  fn construction_errors() {
    assert_eq!(make_field(4, 1).unwrap_err(), FieldError::NotPrime(4));
    assert_eq!(make_field(1, 1).unwrap_err(), FieldError::NotPrime(1));
    assert!(matches!(make_field(2, 5), Err(FieldError::BoundExceeded { .. })));
    assert!(make_field_with_bound(2, 5, 32).is_ok());
    assert_eq!(make_field(2, 0).unwrap_err(), FieldError::ZeroDegree);
  }

  #[test]
  fn header_and_element_text() {
    let f4 = make_field(2, 2).unwrap();
    assert_eq!(f4.header(), "GF(2^2;modulus=1,1,1)");
    let x = f4.from_coeffs(&[0, 1]).unwrap();
    assert_eq!(f4.format_element(x), "0,1");
    assert_eq!(f4.parse_element("0,1").unwrap(), x);
    assert!(f4.parse_element("2,0").is_err());
    assert!(f4.parse_element("1").is_err());
  }

  #[test]
  fn inverse_and_primitive() {
    for (p, e) in [(2, 2), (3, 2), (2, 3), (5, 1)] {
      let f = make_field(p, e).unwrap();
      for x in f.units() {
        assert_eq!(f.mul(x, f.inv(x).unwrap()), f.one());
      }
      assert_eq!(f.inv(f.zero()), None);
      let g = f.primitive_element();
      let mut seen: Vec<_> = (0..f.q() as u64 - 1).map(|k| f.pow(g, k)).collect();
      seen.sort();
      seen.dedup();
      assert_eq!(seen.len(), f.q() - 1);
    }
  }

  #[test]
  fn classification_examples() {
    let f4 = make_field(2, 2).unwrap();
    let id: Vec<_> = f4.elements().collect();
    assert_eq!(classify_as_field_hom(&f4, &id).unwrap(), FieldHom { exponent: 0 });
    let sq: Vec<_> = f4.elements().map(|x| f4.mul(x, x)).collect();
    assert_eq!(classify_as_field_hom(&f4, &sq).unwrap(), FieldHom { exponent: 1 });

    let f2 = make_field(2, 1).unwrap();
    let swap = vec![FqElement(1), FqElement(0)];
    assert!(matches!(classify_as_field_hom(&f2, &swap), Err(FieldError::NotUnital { .. })));
    assert!(matches!(
      classify_as_field_hom(&f2, &[FqElement(0)]),
      Err(FieldError::TableSize { .. })
    ));
  }

  #[test]
  fn non_additive_table_rejected() {
    let f9 = make_field(3, 2).unwrap();
    let mut table: Vec<_> = f9.elements().collect();
    table.swap(3, 4);
    assert!(classify_as_field_hom(&f9, &table).is_err());
  }
}
