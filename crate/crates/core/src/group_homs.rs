//! Homomorphisms of `SL_n(F_q)` given on root groups: Steinberg relations, big-cell
//! factorization, local homomorphisms and their classification.
//!
//! Roots are ordered index pairs `(i, j)`, `i != j`, with root group `x_ij(c) = I + c E_ij`
//! taken in the coordinates of a basis matrix `P` (so the actual element is `P x_ij(c) P^-1`).
//! Positive roots have `i < j`; the simple root `(k, k+1)` corresponds to generator `k`.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{
  coxeter::{enumerate_group, CoxeterMatrix},
  field::{FieldError, FqElement, FqField},
  matrix::{nullspace, Matrix},
};

pub type Root = (usize, usize);

pub const DEFAULT_CLOSURE_BOUND: usize = 1_000_000;
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomError {
  #[error("relation {relation} fails at {witness}")]
  RelationViolation { relation: String, witness: String },
  #[error("local homomorphism property fails for x = {x}, y = {y}")]
  LocalViolation { x: String, y: String },
  #[error("domain lacks root group element x_{}{}({c})", root.0, root.1)]
  IncompleteRootGroup { root: Root, c: u16 },
  #[error("domain does not contain the identity")]
  MissingIdentity,
  #[error("extension disagrees with the local map at {0}")]
  Disagreement(String),
  #[error("range generates a group of order {got}, expected {expected}")]
  RangeNotGenerating { got: usize, expected: usize },
  #[error("group closure exceeded {0} elements")]
  ClosureBound(usize),
  #[error("coordinate subset for factor {0} is not the full root group")]
  PartialRootGroup(usize),
  #[error("matrix is not in the special linear group")]
  NotSpecial,
  #[error(transparent)]
  Field(#[from] FieldError),
}

/// Type `A_{n-1}` root data. Every root is reduced, so `Ψ = Φ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootSystemData {
  pub n:       usize,
  pub roots:   Vec<Root>,
  pub reduced: Vec<Root>,
  pub simple:  Vec<Root>,
}

impl RootSystemData {
  pub fn type_a(n: usize) -> Self {
    let roots: Vec<Root> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    Self { n, reduced: roots.clone(), roots, simple: (0..n.saturating_sub(1)).map(|k| (k, k + 1)).collect() }
  }

  pub fn is_positive(r: Root) -> bool { r.0 < r.1 }

  /// Coefficients in the simple roots: `e_i - e_j = sum_{k in [i, j)} α_k` up to sign.
  pub fn simple_coefficients(&self, r: Root) -> Vec<i32> {
    let mut v = vec![0; self.simple.len()];
    let (lo, hi, sign) = if r.0 < r.1 { (r.0, r.1, 1) } else { (r.1, r.0, -1) };
    for slot in &mut v[lo..hi] {
      *slot = sign;
    }
    v
  }

  /// `β_i = s_1 .. s_{i-1}(α_{s_i})` for a reduced word of `w_0`: each positive root once.
  pub fn inversion_roots(&self, word: &[usize]) -> Vec<Root> {
    let mut perm: Vec<usize> = (0..self.n).collect();
    word
      .iter()
      .map(|&k| {
        let root = (perm[k], perm[k + 1]);
        perm.swap(k, k + 1);
        root
      })
      .collect()
  }
}

/// Lexicographically least reduced word of the longest element of `S_n`.
pub fn default_w0_word(n: usize) -> Vec<usize> {
  let g = enumerate_group(&CoxeterMatrix::type_a(n - 1)).expect("finite type A");
  g.word(g.longest_element()).iter().map(|&s| s as usize).collect()
}

pub fn root_element(n: usize, r: Root, c: FqElement) -> Matrix { Matrix::elementary(n, r.0, r.1, c) }

/// Writes `m` (determinant 1) as a product of elementary transvections `x_ij(c)`.
pub fn transvection_word(m: &Matrix, f: &FqField) -> Result<Vec<(Root, FqElement)>, HomError> {
  if m.det(f) != FqElement::ONE {
    return Err(HomError::NotSpecial);
  }
  let n = m.n();
  let mut a = m.clone();
  let mut ops: Vec<(Root, FqElement)> = Vec::new();
  let mut add_row = |a: &mut Matrix, target: usize, src: usize, c: FqElement| {
    for col in 0..n {
      let v = f.add(a.get(target, col), f.mul(c, a.get(src, col)));
      a.set(target, col, v);
    }
    ops.push(((target, src), c));
  };
  for j in 0..n {
    if j + 1 < n {
      if a.get(j, j).is_zero() {
        let r = (j + 1..n).find(|&r| !a.get(r, j).is_zero()).expect("invertible");
        add_row(&mut a, j, r, f.one());
      }
      let p = a.get(j, j);
      if p != f.one() {
        let r = j + 1;
        let c = f.mul(f.sub(f.sub(f.one(), p), a.get(r, j)), f.inv(p).unwrap());
        add_row(&mut a, r, j, c);
        add_row(&mut a, j, r, f.one());
      }
    }
    for i in 0..n {
      if i != j && !a.get(i, j).is_zero() {
        let c = f.neg(a.get(i, j));
        add_row(&mut a, i, j, c);
      }
    }
  }
  debug_assert!(a.is_identity());
  Ok(ops.into_iter().map(|(r, c)| (r, f.neg(c))).collect())
}

/// Every element of the group generated by `gens`, breadth-first from the identity.
pub fn group_closure(gens: &[Matrix], f: &FqField, bound: usize) -> Result<Vec<Matrix>, HomError> {
  let n = gens.first().map_or(0, |g| g.n());
  let id = Matrix::identity(n);
  let mut seen: HashSet<Matrix> = HashSet::from([id.clone()]);
  let mut out = vec![id.clone()];
  let mut queue = VecDeque::from([id]);
  while let Some(x) = queue.pop_front() {
    for g in gens {
      let y = x.mul(g, f);
      if seen.insert(y.clone()) {
        if out.len() >= bound {
          return Err(HomError::ClosureBound(bound));
        }
        out.push(y.clone());
        queue.push_back(y);
      }
    }
  }
  Ok(out)
}

pub fn sl_generators(n: usize, f: &FqField) -> Vec<Matrix> {
  let mut out = Vec::new();
  for (i, j) in RootSystemData::type_a(n).roots {
    for c in f.units() {
      out.push(root_element(n, (i, j), c));
    }
  }
  out
}

pub fn sl_order(n: usize, q: usize) -> u128 {
  let (n32, q) = (n as u32, q as u128);
  (0..n32).map(|i| q.pow(n32) - q.pow(i)).product::<u128>() / (q - 1)
}

/// Factors of an element of `U^- U^+` along the inversion roots of a reduced word of `w_0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigCellElement {
  pub roots: Vec<Root>,
  /// Coordinates of `x_{-β_1} .. x_{-β_N}`.
  pub lower: Vec<FqElement>,
  /// Coordinates of `x_{β_1} .. x_{β_N}`.
  pub upper: Vec<FqElement>,
}

impl BigCellElement {
  pub fn product(&self, n: usize, f: &FqField) -> Matrix {
    let mut m = Matrix::identity(n);
    for (&(i, j), &c) in self.roots.iter().zip(&self.lower) {
      m = m.mul(&root_element(n, (j, i), c), f);
    }
    for (&r, &c) in self.roots.iter().zip(&self.upper) {
      m = m.mul(&root_element(n, r, c), f);
    }
    m
  }
}

/// Big-cell factorization for a reduced word of `w_0`; `None` outside `U^- U^+`.
pub fn big_cell_factor(g: &Matrix, word: &[usize], f: &FqField) -> Option<BigCellElement> {
  let n = g.n();
  let roots = RootSystemData::type_a(n).inversion_roots(word);
  let mut l = Matrix::identity(n);
  let mut u = Matrix::zero(n);
  for i in 0..n {
    for j in i..n {
      let sum = (0..i).fold(FqElement::ZERO, |acc, k| f.add(acc, f.mul(l.get(i, k), u.get(k, j))));
      u.set(i, j, f.sub(g.get(i, j), sum));
    }
    if u.get(i, i) != f.one() {
      return None;
    }
    for j in i + 1..n {
      let sum = (0..i).fold(FqElement::ZERO, |acc, k| f.add(acc, f.mul(l.get(j, k), u.get(k, i))));
      l.set(j, i, f.sub(g.get(j, i), sum));
    }
  }
  let mut lower = Vec::with_capacity(roots.len());
  let mut cur = l;
  for &(a, b) in &roots {
    let c = cur.get(b, a);
    lower.push(c);
    cur = root_element(n, (b, a), f.neg(c)).mul(&cur, f);
  }
  let mut upper = Vec::with_capacity(roots.len());
  let mut cur = u;
  for &(a, b) in &roots {
    let c = cur.get(a, b);
    upper.push(c);
    cur = root_element(n, (a, b), f.neg(c)).mul(&cur, f);
  }
  let out = BigCellElement { roots, lower, upper };
  (out.product(n, f) == *g).then_some(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BigCellMeasure {
  pub n:        usize,
  pub q:        usize,
  pub order:    usize,
  pub big_cell: usize,
  pub expected: usize,
}

/// Counts elements of `SL_n(F_q)` admitting a big-cell factorization.
pub fn big_cell_measure(n: usize, f: &FqField) -> Result<BigCellMeasure, HomError> {
  let group = group_closure(&sl_generators(n, f), f, DEFAULT_CLOSURE_BOUND)?;
  let word = default_w0_word(n);
  let big_cell = group.iter().filter(|g| big_cell_factor(g, &word, f).is_some()).count();
  Ok(BigCellMeasure {
    n,
    q: f.q(),
    order: group.len(),
    big_cell,
    expected: f.q().pow((n * (n - 1)) as u32),
  })
}

/// A homomorphism of `SL_n` given by the images of all root groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalHom {
  n:        usize,
  q:        usize,
  basis:    Matrix,
  basis_inv: Matrix,
  images:   HashMap<Root, Vec<Matrix>>,
}

impl GlobalHom {
  /// From images of the simple root groups and their opposites (in `basis` coordinates),
  /// indexed by coordinate. Other roots are filled in by commutators.
  pub fn from_simple(
    basis: Matrix,
    upper: &[Vec<Matrix>],
    lower: &[Vec<Matrix>],
    f: &FqField,
  ) -> Self {
    let n = basis.n();
    let mut images: HashMap<Root, Vec<Matrix>> = HashMap::new();
    for k in 0..n - 1 {
      images.insert((k, k + 1), upper[k].clone());
      images.insert((k + 1, k), lower[k].clone());
    }
    for gap in 2..n {
      for i in 0..n - gap {
        let j = i + gap;
        let up: Vec<Matrix> = f
          .elements()
          .map(|c| Matrix::commutator(&images[&(i, i + 1)][c.index()], &images[&(i + 1, j)][1], f))
          .collect();
        images.insert((i, j), up);
        let down: Vec<Matrix> = f
          .elements()
          .map(|c| Matrix::commutator(&images[&(j, j - 1)][c.index()], &images[&(j - 1, i)][1], f))
          .collect();
        images.insert((j, i), down);
      }
    }
    let basis_inv = basis.inverse(f).expect("basis must be invertible");
    Self { n, q: f.q(), basis, basis_inv, images }
  }

  /// The identity homomorphism in standard coordinates.
  pub fn identity(n: usize, f: &FqField) -> Self {
    let table = |r: Root| f.elements().map(|c| root_element(n, r, c)).collect::<Vec<_>>();
    let upper: Vec<_> = (0..n - 1).map(|k| table((k, k + 1))).collect();
    let lower: Vec<_> = (0..n - 1).map(|k| table((k + 1, k))).collect();
    Self::from_simple(Matrix::identity(n), &upper, &lower, f)
  }

  pub fn n(&self) -> usize { self.n }

  pub fn basis(&self) -> &Matrix { &self.basis }

  /// Image of `P x_r(c) P^-1`.
  pub fn root_image(&self, r: Root, c: FqElement) -> &Matrix { &self.images[&r][c.index()] }

  pub fn source_root_element(&self, r: Root, c: FqElement, f: &FqField) -> Matrix {
    self.basis.mul(&root_element(self.n, r, c), f).mul(&self.basis_inv, f)
  }

  pub fn apply(&self, g: &Matrix, f: &FqField) -> Result<Matrix, HomError> {
    let local = self.basis_inv.mul(g, f).mul(&self.basis, f);
    let mut out = Matrix::identity(self.n);
    for (r, c) in transvection_word(&local, f)? {
      out = out.mul(self.root_image(r, c), f);
    }
    Ok(out)
  }

  fn violation(relation: &str, witness: String) -> HomError {
    HomError::RelationViolation { relation: relation.to_string(), witness }
  }

  /// Steinberg relations of type `A_{n-1}` plus the rank-one relations.
  pub fn verify_relations(&self, f: &FqField) -> Result<(), HomError> {
    let roots = RootSystemData::type_a(self.n).roots;
    let id = Matrix::identity(self.n);
    let x = |r: Root, c: FqElement| self.root_image(r, c);
    for &r in &roots {
      if !x(r, FqElement::ZERO).is_identity() {
        return Err(Self::violation("x(0) = 1", format!("root {r:?}")));
      }
      for a in f.elements() {
        for b in f.elements() {
          if x(r, a).mul(x(r, b), f) != *x(r, f.add(a, b)) {
            return Err(Self::violation(
              "x(a) x(b) = x(a+b)",
              format!("root {r:?}, a = {}, b = {}", f.format_element(a), f.format_element(b)),
            ));
          }
        }
      }
    }
    for &(i, j) in &roots {
      for &(k, l) in &roots {
        if (k, l) == (j, i) || (k, l) == (i, j) {
          continue;
        }
        for a in f.elements() {
          for b in f.elements() {
            let lhs = Matrix::commutator(x((i, j), a), x((k, l), b), f);
            let rhs = if j == k && i != l {
              x((i, l), f.mul(a, b)).clone()
            } else if i == l && j != k {
              x((k, j), f.neg(f.mul(a, b))).clone()
            } else {
              id.clone()
            };
            if lhs != rhs {
              return Err(Self::violation(
                "commutator",
                format!(
                  "[x{:?}({}), x{:?}({})]",
                  (i, j),
                  f.format_element(a),
                  (k, l),
                  f.format_element(b)
                ),
              ));
            }
          }
        }
      }
    }
    for &r in &roots {
      let neg = (r.1, r.0);
      let w = |t: FqElement| {
        let ti = f.inv(t).unwrap();
        x(r, t).mul(x(neg, f.neg(ti)), f).mul(x(r, t), f)
      };
      let h = |t: FqElement| w(t).mul(&w(f.one()).inverse(f).unwrap(), f);
      for t in f.units() {
        let wt = w(t);
        let wt_inv = wt.inverse(f).unwrap();
        let t2 = f.inv(f.mul(t, t)).unwrap();
        for c in f.elements() {
          if wt.mul(x(r, c), f).mul(&wt_inv, f) != *x(neg, f.neg(f.mul(t2, c))) {
            return Err(Self::violation(
              "w(t) x(c) w(t)^-1 = x_-(-t^-2 c)",
              format!("root {r:?}, t = {}, c = {}", f.format_element(t), f.format_element(c)),
            ));
          }
        }
        for u in f.units() {
          if h(t).mul(&h(u), f) != h(f.mul(t, u)) {
            return Err(Self::violation(
              "h(t) h(u) = h(tu)",
              format!("root {r:?}, t = {}, u = {}", f.format_element(t), f.format_element(u)),
            ));
          }
        }
      }
    }
    Ok(())
  }

  /// Images of the transvection generators, in standard source coordinates.
  pub fn generator_images(&self, f: &FqField) -> Result<Vec<(Matrix, Matrix)>, HomError> {
    sl_generators(self.n, f).into_iter().map(|g| Ok((g.clone(), self.apply(&g, f)?))).collect()
  }

  /// Whether the image of the generators generates all of `SL_n(F_q)`.
  pub fn check_range_generates(&self, f: &FqField) -> Result<(), HomError> {
    let gens: Vec<Matrix> = self.generator_images(f)?.into_iter().map(|(_, h)| h).collect();
    let got = group_closure(&gens, f, DEFAULT_CLOSURE_BOUND)?.len();
    let expected = sl_order(self.n, self.q) as usize;
    if got != expected {
      return Err(HomError::RangeNotGenerating { got, expected });
    }
    Ok(())
  }
}

/// How exhaustively to check the local homomorphism property.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckMode {
  Exhaustive,
  Sampled { pairs: usize, seed: u64 },
}

/// A map defined on a subset of `SL_n(F_q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalHom {
  pub n:      usize,
  pub domain: Vec<Matrix>,
  pub values: HashMap<Matrix, Matrix>,
}

/// Per-factor coordinate subsets of a basic open subset `N_{-β_1}..N_{-β_N} N_{β_1}..N_{β_N}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicOpenSubset {
  pub n:     usize,
  pub word:  Vec<usize>,
  pub lower: Vec<Vec<FqElement>>,
  pub upper: Vec<Vec<FqElement>>,
}

impl BasicOpenSubset {
  pub fn full(n: usize, f: &FqField) -> Self {
    let word = default_w0_word(n);
    let all: Vec<FqElement> = f.elements().collect();
    Self { n, lower: vec![all.clone(); word.len()], upper: vec![all; word.len()], word }
  }

  /// Elements of the subset; errors when some factor is not a full root group.
  pub fn elements(&self, f: &FqField) -> Result<Vec<Matrix>, HomError> {
    for (k, set) in self.lower.iter().chain(&self.upper).enumerate() {
      let distinct: HashSet<_> = set.iter().collect();
      if distinct.len() != f.q() {
        return Err(HomError::PartialRootGroup(k));
      }
    }
    let roots = RootSystemData::type_a(self.n).inversion_roots(&self.word);
    let mut out = vec![Matrix::identity(self.n)];
    for (k, &(a, b)) in roots.iter().enumerate() {
      out = out
        .iter()
        .flat_map(|m| self.lower[k].iter().map(move |&c| (m, c)))
        .map(|(m, c)| m.mul(&root_element(self.n, (b, a), c), f))
        .collect();
    }
    for (k, &r) in roots.iter().enumerate() {
      out = out
        .iter()
        .flat_map(|m| self.upper[k].iter().map(move |&c| (m, c)))
        .map(|(m, c)| m.mul(&root_element(self.n, r, c), f))
        .collect();
    }
    Ok(out)
  }
}

impl LocalHom {
  pub fn restrict(domain: Vec<Matrix>, map: impl Fn(&Matrix) -> Matrix) -> Self {
    let n = domain.first().map_or(0, |m| m.n());
    let values = domain.iter().map(|x| (x.clone(), map(x))).collect();
    Self { n, domain, values }
  }

  pub fn value(&self, x: &Matrix) -> Option<&Matrix> { self.values.get(x) }

  fn check_pair(&self, x: &Matrix, y: &Matrix, f: &FqField) -> Result<(), HomError> {
    let xy = x.mul(y, f);
    if let Some(v) = self.values.get(&xy) {
      if *v != self.values[x].mul(&self.values[y], f) {
        return Err(HomError::LocalViolation { x: format!("{:?}", x.to_json(f).entries), y: format!("{:?}", y.to_json(f).entries) });
      }
    }
    Ok(())
  }

  /// `L(xy) = L(x) L(y)` whenever `x, y, xy` all lie in the domain.
  pub fn check_local_property(&self, mode: CheckMode, f: &FqField) -> Result<usize, HomError> {
    let mut checked = 0;
    match mode {
      CheckMode::Exhaustive => {
        for x in &self.domain {
          for y in &self.domain {
            self.check_pair(x, y, f)?;
            checked += 1;
          }
        }
      }
      CheckMode::Sampled { pairs, seed } => {
        let gens: Vec<&Matrix> =
          self.domain.iter().filter(|m| (m.entries().iter().filter(|x| !x.is_zero()).count()) == self.n + 1).collect();
        for x in &gens {
          for y in &gens {
            self.check_pair(x, y, f)?;
            checked += 1;
          }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..pairs {
          let x = &self.domain[rng.gen_range(0..self.domain.len())];
          let y = &self.domain[rng.gen_range(0..self.domain.len())];
          self.check_pair(x, y, f)?;
          checked += 1;
        }
      }
    }
    Ok(checked)
  }
}

/// Extends a local homomorphism defined on a basic open subset to all of `SL_n(F_q)`.
pub fn extend_local_hom(l: &LocalHom, mode: CheckMode, f: &FqField) -> Result<GlobalHom, HomError> {
  let n = l.n;
  let id = Matrix::identity(n);
  if !l.values.contains_key(&id) {
    return Err(HomError::MissingIdentity);
  }
  l.check_local_property(mode, f)?;
  let table = |r: Root| -> Result<Vec<Matrix>, HomError> {
    f.elements()
      .map(|c| {
        l.values.get(&root_element(n, r, c)).cloned().ok_or(HomError::IncompleteRootGroup { root: r, c: c.0 })
      })
      .collect()
  };
  let mut upper = Vec::new();
  let mut lower = Vec::new();
  for k in 0..n - 1 {
    upper.push(table((k, k + 1))?);
    lower.push(table((k + 1, k))?);
  }
  for r in RootSystemData::type_a(n).roots {
    table(r)?;
  }
  let hom = GlobalHom::from_simple(Matrix::identity(n), &upper, &lower, f);
  hom.verify_relations(f)?;
  let agree = |x: &Matrix| -> Result<(), HomError> {
    if hom.apply(x, f)? != l.values[x] {
      return Err(HomError::Disagreement(format!("{:?}", x.to_json(f).entries)));
    }
    Ok(())
  };
  match mode {
    CheckMode::Exhaustive => l.domain.iter().try_for_each(agree)?,
    CheckMode::Sampled { pairs, seed } => {
      let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
      for _ in 0..pairs.min(l.domain.len()) {
        agree(&l.domain[rng.gen_range(0..l.domain.len())])?;
      }
    }
  }
  hom.check_range_generates(f)?;
  Ok(hom)
}

/// `H = θ^ε ∘ Ad(M) ∘ F^m` with `θ` the transpose-inverse.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
  pub found:      bool,
  pub duality:    bool,
  pub frobenius:  u32,
  /// Projective representative, first nonzero entry 1.
  pub conjugator: Option<Vec<Vec<u16>>>,
  pub witness:    Option<String>,
}

impl Classification {
  pub fn conjugator_matrix(&self) -> Option<Matrix> {
    self.conjugator.as_ref().map(|rows| {
      Matrix::from_rows(&rows.iter().map(|r| r.iter().map(|&x| FqElement(x)).collect()).collect::<Vec<_>>())
    })
  }
}

/// Solves `M F^m(x) = θ^ε(H(x)) M` over the generators for each `(ε, m)`, trying `ε = 0` first.
pub fn classify_hom(h: &GlobalHom, f: &FqField) -> Result<Classification, HomError> {
  let n = h.n();
  let pairs = h.generator_images(f)?;
  for duality in [false, true] {
    for m in 0..f.e() {
      let mut rows: Vec<Vec<FqElement>> = Vec::new();
      for (x, hx) in &pairs {
        let k = if duality { hx.transpose_inverse(f) } else { hx.clone() };
        let fx = x.frobenius(m, f);
        for r in 0..n {
          for c in 0..n {
            let mut row = vec![FqElement::ZERO; n * n];
            for t in 0..n {
              row[r * n + t] = f.sub(row[r * n + t], fx.get(t, c));
              row[t * n + c] = f.add(row[t * n + c], k.get(r, t));
            }
            rows.push(row);
          }
        }
      }
      let solutions = nullspace(&rows, n * n, f);
      let Some(m_mat) = solutions.iter().map(|v| Matrix::from_rows(&v.chunks(n).map(|r| r.to_vec()).collect::<Vec<_>>())).find(|mm| !mm.det(f).is_zero()) else {
        continue;
      };
      let m_mat = m_mat.projective_normal_form(f);
      let m_inv = m_mat.inverse(f).unwrap();
      let ok = pairs.iter().all(|(x, hx)| {
        let inner = m_mat.mul(&x.frobenius(m, f), f).mul(&m_inv, f);
        let inner = if duality { inner.transpose_inverse(f) } else { inner };
        inner == *hx
      });
      if ok {
        return Ok(Classification {
          found: true,
          duality,
          frobenius: m,
          conjugator: Some((0..n).map(|r| m_mat.row(r).iter().map(|x| x.0).collect()).collect()),
          witness: None,
        });
      }
    }
  }
  Ok(Classification {
    found: false,
    duality: false,
    frobenius: 0,
    conjugator: None,
    witness: Some("no (duality, conjugator, Frobenius) decomposition matches the generator images".into()),
  })
}
