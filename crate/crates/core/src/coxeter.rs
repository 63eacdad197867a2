//! Finite Coxeter systems `(W, S)`.
//!
//! The group is enumerated once by breadth-first closure under right multiplication by
//! the generators, using the reflection representation to decide when two words give
//! the same element. Each element is then identified by its position in shortlex order
//! of normal forms, where the normal form is the lexicographically least reduced word.
//! Everything else is table lookups.

use std::{
  collections::{BTreeSet, HashMap},
  f64::consts::PI,
  sync::Arc,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on `|W|`; `A_7` has 40320 elements.
pub const DEFAULT_GROUP_BOUND: usize = 40320;

/// A subset of the generating set, as a bitmask over generator indices.
pub type TypeMask = u32;

pub fn mask_of(gens: impl IntoIterator<Item = usize>) -> TypeMask {
  gens.into_iter().fold(0, |m, s| m | (1 << s))
}

pub fn mask_members(mask: TypeMask) -> impl Iterator<Item = usize> {
  (0..32).filter(move |s| mask & (1 << s) != 0)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoxeterError {
  #[error("Coxeter matrix must be square")]
  NotSquare,
  #[error("diagonal entry m[{0}][{0}] must be 1")]
  BadDiagonal(usize),
  #[error("entry m[{i}][{j}] = {value} must be at least 2, or 0 for infinity")]
  BadEntry { i: usize, j: usize, value: u32 },
  #[error("Coxeter matrix is not symmetric at ({i}, {j})")]
  NotSymmetric { i: usize, j: usize },
  #[error("m[{i}][{j}] is infinite; only finite Coxeter groups are supported")]
  Infinite { i: usize, j: usize },
  #[error("group has more than {bound} elements")]
  BoundExceeded { bound: usize },
  #[error("rank {0} exceeds the supported maximum of 16")]
  RankTooLarge(usize),
  #[error("cannot parse Coxeter matrix: {0}")]
  Parse(String),
  #[error("element index {0} does not belong to this group")]
  ForeignElement(u32),
  #[error("generator {gen} out of range for rank {rank}")]
  BadGenerator { gen: usize, rank: usize },
}

/// A Coxeter matrix `m_ij`; entry 0 encodes infinity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoxeterMatrix {
  entries: Vec<Vec<u32>>,
}

impl CoxeterMatrix {
  pub fn new(entries: Vec<Vec<u32>>) -> Result<Self, CoxeterError> {
    let n = entries.len();
    if n > 16 {
      return Err(CoxeterError::RankTooLarge(n));
    }
    if entries.iter().any(|r| r.len() != n) {
      return Err(CoxeterError::NotSquare);
    }
    for i in 0..n {
      if entries[i][i] != 1 {
        return Err(CoxeterError::BadDiagonal(i));
      }
      for j in 0..n {
        if i == j {
          continue;
        }
        let v = entries[i][j];
        if v == 1 {
          return Err(CoxeterError::BadEntry { i, j, value: v });
        }
        if v != entries[j][i] {
          return Err(CoxeterError::NotSymmetric { i, j });
        }
      }
    }
    Ok(Self { entries })
  }

  /// The type `A_rank` matrix: a path diagram with all bonds of order 3.
  pub fn type_a(rank: usize) -> Self {
    let entries = (0..rank)
      .map(|i| {
        (0..rank)
          .map(|j| match i.abs_diff(j) {
            0 => 1,
            1 => 3,
            _ => 2,
          })
          .collect()
      })
      .collect();
    Self { entries }
  }

  /// Accepts `"A1"`..`"A4"` (any `A_n` actually) or a JSON array of arrays.
  pub fn parse(text: &str) -> Result<Self, CoxeterError> {
    let t = text.trim();
    if let Some(rest) = t.strip_prefix('A').or_else(|| t.strip_prefix('a')) {
      let rank: usize = rest.parse().map_err(|_| CoxeterError::Parse(t.to_string()))?;
      if rank == 0 || rank > 16 {
        return Err(CoxeterError::Parse(t.to_string()));
      }
      return Ok(Self::type_a(rank));
    }
    let entries: Vec<Vec<u32>> =
      serde_json::from_str(t).map_err(|e| CoxeterError::Parse(e.to_string()))?;
    Self::new(entries)
  }

  pub fn rank(&self) -> usize { self.entries.len() }

  pub fn get(&self, i: usize, j: usize) -> u32 { self.entries[i][j] }

  pub fn entries(&self) -> &[Vec<u32>] { &self.entries }

  /// Generators commuting with every other generator.
  pub fn isolated_nodes(&self) -> Vec<usize> {
    let n = self.rank();
    (0..n).filter(|&i| (0..n).all(|j| i == j || self.entries[i][j] == 2)).collect()
  }

  pub fn has_isolated_nodes(&self) -> bool { !self.isolated_nodes().is_empty() }

  /// Connectedness of the Coxeter diagram (edges where `m_ij != 2`).
  pub fn is_irreducible(&self) -> bool {
    let n = self.rank();
    if n == 0 {
      return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
      for j in 0..n {
        if !seen[j] && i != j && self.entries[i][j] != 2 {
          seen[j] = true;
          stack.push(j);
        }
      }
    }
    seen.into_iter().all(|x| x)
  }

  /// Submatrix on the generators in `gens`, re-indexed in increasing order.
  pub fn restrict(&self, gens: &[usize]) -> Self {
    Self { entries: gens.iter().map(|&i| gens.iter().map(|&j| self.entries[i][j]).collect()).collect() }
  }

  /// Whether `perm` is an automorphism of the diagram.
  pub fn is_diagram_automorphism(&self, perm: &[usize]) -> bool {
    let n = self.rank();
    perm.len() == n
      && perm.iter().collect::<BTreeSet<_>>().len() == n
      && perm.iter().all(|&p| p < n)
      && (0..n).all(|i| (0..n).all(|j| self.entries[i][j] == self.entries[perm[i]][perm[j]]))
  }
}

/// An element of a finite Coxeter group, by its shortlex index. Index 0 is the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeylElement(pub u32);

impl WeylElement {
  pub const IDENTITY: WeylElement = WeylElement(0);

  pub fn index(self) -> usize { self.0 as usize }
}

/// A coset `w W_J` by its minimal-length representative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StandardCoset {
  pub rep:   WeylElement,
  pub types: TypeMask,
}

/// A double coset `W_J w W_K` by its minimal-length representative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DoubleCosetDistance {
  pub left:  TypeMask,
  pub rep:   WeylElement,
  pub right: TypeMask,
}

/// The enumerated group with multiplication tables.
#[derive(Debug)]
pub struct CoxeterGroup {
  matrix:  CoxeterMatrix,
  words:   Vec<Vec<u8>>,
  right:   Vec<u32>,
  left:    Vec<u32>,
  inverse: Vec<u32>,
  longest: WeylElement,
}

type Key = Vec<i64>;

fn key_of(m: &[f64]) -> Key { m.iter().map(|x| (x * 1e6).round() as i64).collect() }

fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
  let mut out = vec![0.0; n * n];
  for i in 0..n {
    for k in 0..n {
      let x = a[i * n + k];
      if x == 0.0 {
        continue;
      }
      for j in 0..n {
        out[i * n + j] += x * b[k * n + j];
      }
    }
  }
  out
}

/// Enumerates `W` for a finite Coxeter matrix, with the default element bound.
pub fn enumerate_group(matrix: &CoxeterMatrix) -> Result<Arc<CoxeterGroup>, CoxeterError> {
  enumerate_group_with_bound(matrix, DEFAULT_GROUP_BOUND)
}

pub fn enumerate_group_with_bound(
  matrix: &CoxeterMatrix,
  bound: usize,
) -> Result<Arc<CoxeterGroup>, CoxeterError> {
  let n = matrix.rank();
  for i in 0..n {
    for j in 0..n {
      if matrix.get(i, j) == 0 {
        return Err(CoxeterError::Infinite { i, j });
      }
    }
  }
  // Reflection representation: B(a_i, a_j) = -cos(pi / m_ij).
  let bilinear = |i: usize, j: usize| -(PI / matrix.get(i, j) as f64).cos();
  let gens: Vec<Vec<f64>> = (0..n)
    .map(|s| {
      let mut m = vec![0.0; n * n];
      for k in 0..n {
        m[k * n + k] = 1.0;
      }
      for j in 0..n {
        m[s * n + j] -= 2.0 * bilinear(s, j);
      }
      m
    })
    .collect();

  let mut identity = vec![0.0; n * n];
  for k in 0..n {
    identity[k * n + k] = 1.0;
  }
  let mut mats: Vec<Vec<f64>> = vec![identity.clone()];
  let mut words: Vec<Vec<u8>> = vec![Vec::new()];
  let mut index: HashMap<Key, u32> = HashMap::from([(key_of(&identity), 0)]);
  let mut level: Vec<u32> = vec![0];

  while !level.is_empty() {
    let mut fresh: HashMap<Key, (Vec<f64>, Vec<u8>)> = HashMap::new();
    for &w in &level {
      for s in 0..n {
        let m = mat_mul(&mats[w as usize], &gens[s], n);
        let key = key_of(&m);
        if index.contains_key(&key) {
          continue;
        }
        let mut word = words[w as usize].clone();
        word.push(s as u8);
        fresh
          .entry(key)
          .and_modify(|(_, best)| {
            if word < *best {
              *best = word.clone();
            }
          })
          .or_insert((m, word));
      }
    }
    if index.len() + fresh.len() > bound {
      return Err(CoxeterError::BoundExceeded { bound });
    }
    let mut fresh: Vec<(Key, (Vec<f64>, Vec<u8>))> = fresh.into_iter().collect();
    fresh.sort_by(|a, b| a.1 .1.cmp(&b.1 .1));
    level = Vec::with_capacity(fresh.len());
    for (key, (m, word)) in fresh {
      let idx = mats.len() as u32;
      index.insert(key, idx);
      mats.push(m);
      words.push(word);
      level.push(idx);
    }
  }

  let size = mats.len();
  let mut right = vec![0u32; size * n];
  let mut left = vec![0u32; size * n];
  for w in 0..size {
    for s in 0..n {
      right[w * n + s] = index[&key_of(&mat_mul(&mats[w], &gens[s], n))];
      left[w * n + s] = index[&key_of(&mat_mul(&gens[s], &mats[w], n))];
    }
  }
  let inverse = (0..size)
    .map(|w| words[w].iter().rev().fold(0u32, |acc, &s| right[acc as usize * n + s as usize]))
    .collect();
  let longest = WeylElement((size - 1) as u32);
  Ok(Arc::new(CoxeterGroup { matrix: matrix.clone(), words, right, left, inverse, longest }))
}

impl CoxeterGroup {
  pub fn matrix(&self) -> &CoxeterMatrix { &self.matrix }

  pub fn rank(&self) -> usize { self.matrix.rank() }

  pub fn order(&self) -> usize { self.words.len() }

  pub fn elements(&self) -> impl Iterator<Item = WeylElement> {
    (0..self.order() as u32).map(WeylElement)
  }

  pub fn generator(&self, s: usize) -> WeylElement { self.right_mul(WeylElement::IDENTITY, s) }

  /// Normal form: the lexicographically least reduced word.
  pub fn word(&self, w: WeylElement) -> &[u8] { &self.words[w.index()] }

  pub fn length(&self, w: WeylElement) -> usize { self.words[w.index()].len() }

  pub fn contains(&self, w: WeylElement) -> bool { w.index() < self.order() }

  #[inline]
  pub fn right_mul(&self, w: WeylElement, s: usize) -> WeylElement {
    WeylElement(self.right[w.index() * self.rank() + s])
  }

  #[inline]
  pub fn left_mul(&self, s: usize, w: WeylElement) -> WeylElement {
    WeylElement(self.left[w.index() * self.rank() + s])
  }

  pub fn inverse(&self, w: WeylElement) -> WeylElement { WeylElement(self.inverse[w.index()]) }

  pub fn multiply(&self, a: WeylElement, b: WeylElement) -> WeylElement {
    self.word(b).iter().fold(a, |acc, &s| self.right_mul(acc, s as usize))
  }

  /// [`multiply`](Self::multiply) with a check that both operands belong to this group.
  pub fn try_multiply(&self, a: WeylElement, b: WeylElement) -> Result<WeylElement, CoxeterError> {
    for w in [a, b] {
      if !self.contains(w) {
        return Err(CoxeterError::ForeignElement(w.0));
      }
    }
    Ok(self.multiply(a, b))
  }

  pub fn from_word(&self, word: &[usize]) -> Result<WeylElement, CoxeterError> {
    let rank = self.rank();
    word.iter().try_fold(WeylElement::IDENTITY, |acc, &s| {
      if s >= rank {
        Err(CoxeterError::BadGenerator { gen: s, rank })
      } else {
        Ok(self.right_mul(acc, s))
      }
    })
  }

  pub fn is_reduced(&self, word: &[usize]) -> bool {
    self.from_word(word).map(|w| self.length(w) == word.len()).unwrap_or(false)
  }

  pub fn longest_element(&self) -> WeylElement { self.longest }

  pub fn right_descents(&self, w: WeylElement) -> TypeMask {
    mask_of((0..self.rank()).filter(|&s| self.length(self.right_mul(w, s)) < self.length(w)))
  }

  pub fn left_descents(&self, w: WeylElement) -> TypeMask {
    mask_of((0..self.rank()).filter(|&s| self.length(self.left_mul(s, w)) < self.length(w)))
  }

  /// Every reduced word of `w`.
  pub fn reduced_decompositions(&self, w: WeylElement) -> BTreeSet<Vec<usize>> {
    let mut memo: HashMap<WeylElement, BTreeSet<Vec<usize>>> = HashMap::new();
    self.reduced_words_memo(w, &mut memo)
  }

  fn reduced_words_memo(
    &self,
    w: WeylElement,
    memo: &mut HashMap<WeylElement, BTreeSet<Vec<usize>>>,
  ) -> BTreeSet<Vec<usize>> {
    if let Some(found) = memo.get(&w) {
      return found.clone();
    }
    let out = if w == WeylElement::IDENTITY {
      BTreeSet::from([Vec::new()])
    } else {
      let mut out = BTreeSet::new();
      for s in mask_members(self.right_descents(w)) {
        for mut word in self.reduced_words_memo(self.right_mul(w, s), memo) {
          word.push(s);
          out.insert(word);
        }
      }
      out
    };
    memo.insert(w, out.clone());
    out
  }

  /// Elements of the standard parabolic subgroup `W_J`.
  pub fn parabolic(&self, types: TypeMask) -> Vec<WeylElement> {
    let mut seen = BTreeSet::from([WeylElement::IDENTITY]);
    let mut stack = vec![WeylElement::IDENTITY];
    while let Some(w) = stack.pop() {
      for s in mask_members(types) {
        let x = self.right_mul(w, s);
        if seen.insert(x) {
          stack.push(x);
        }
      }
    }
    seen.into_iter().collect()
  }

  /// The minimal-length element of `w W_J`.
  pub fn min_coset_rep(&self, w: WeylElement, types: TypeMask) -> WeylElement {
    let mut w = w;
    'outer: loop {
      for s in mask_members(types) {
        let x = self.right_mul(w, s);
        if self.length(x) < self.length(w) {
          w = x;
          continue 'outer;
        }
      }
      return w;
    }
  }

  pub fn coset(&self, w: WeylElement, types: TypeMask) -> StandardCoset {
    StandardCoset { rep: self.min_coset_rep(w, types), types }
  }

  /// The minimal-length element of `W_J w W_K`, found by descent reduction on both sides.
  pub fn double_coset_rep(&self, left: TypeMask, w: WeylElement, right: TypeMask) -> DoubleCosetDistance {
    let mut w = w;
    'outer: loop {
      for s in mask_members(left) {
        let x = self.left_mul(s, w);
        if self.length(x) < self.length(w) {
          w = x;
          continue 'outer;
        }
      }
      for s in mask_members(right) {
        let x = self.right_mul(w, s);
        if self.length(x) < self.length(w) {
          w = x;
          continue 'outer;
        }
      }
      return DoubleCosetDistance { left, rep: w, right };
    }
  }

  /// Whether `x` lies in `W_J w W_K` for the given double coset.
  pub fn double_coset_contains(&self, d: &DoubleCosetDistance, x: WeylElement) -> bool {
    self.double_coset_rep(d.left, x, d.right).rep == d.rep
  }

  /// The reflection `w s w^-1`.
  pub fn reflection(&self, w: WeylElement, s: usize) -> WeylElement {
    self.multiply(self.right_mul(w, s), self.inverse(w))
  }

  /// All reflections, sorted.
  pub fn reflections(&self) -> Vec<WeylElement> {
    let set: BTreeSet<_> =
      self.elements().flat_map(|w| (0..self.rank()).map(move |s| (w, s))).map(|(w, s)| self.reflection(w, s)).collect();
    set.into_iter().collect()
  }

  /// Position of `x` relative to the wall of reflection `t`: true on the side of the
  /// identity.
  pub fn on_positive_side(&self, t: WeylElement, x: WeylElement) -> bool {
    self.length(self.multiply(t, x)) > self.length(x)
  }

  /// Image of each element under the generator permutation `perm`, as a table.
  pub fn diagram_action(&self, perm: &[usize]) -> Vec<WeylElement> {
    self
      .elements()
      .map(|w| self.word(w).iter().fold(WeylElement::IDENTITY, |acc, &s| self.right_mul(acc, perm[s as usize])))
      .collect()
  }
}

/// The Coxeter complex `Sigma(W, S)`: all standard cosets under reverse inclusion.
#[derive(Debug, Clone)]
pub struct CoxeterComplex {
  group:     Arc<CoxeterGroup>,
  simplices: Vec<StandardCoset>,
}

impl CoxeterComplex {
  pub fn group(&self) -> &Arc<CoxeterGroup> { &self.group }

  pub fn simplices(&self) -> &[StandardCoset] { &self.simplices }

  /// Chambers are the cosets of the trivial subgroup.
  pub fn chambers(&self) -> impl Iterator<Item = StandardCoset> + '_ {
    self.simplices.iter().copied().filter(|c| c.types == 0)
  }

  /// Vertices are cosets of maximal proper standard parabolics `W_{S \ {s}}`.
  pub fn vertices(&self) -> impl Iterator<Item = StandardCoset> + '_ {
    let full: TypeMask = (1 << self.group.rank()) - 1;
    self.simplices.iter().copied().filter(move |c| c.types.count_ones() + 1 == full.count_ones() && c.types & full == c.types)
  }

  /// `a <= b` in the face order, i.e. `b` is contained in `a` as a set.
  pub fn is_face(&self, a: &StandardCoset, b: &StandardCoset) -> bool {
    b.types & !a.types == 0 && self.group.min_coset_rep(b.rep, a.types) == a.rep
  }

  /// Number of chambers containing each panel.
  pub fn panel_degrees(&self) -> Vec<usize> {
    let mut counts: HashMap<StandardCoset, usize> = HashMap::new();
    for c in self.chambers() {
      for s in 0..self.group.rank() {
        *counts.entry(self.group.coset(c.rep, 1 << s)).or_default() += 1;
      }
    }
    counts.into_values().collect()
  }

  pub fn is_thin(&self) -> bool { self.panel_degrees().iter().all(|&d| d == 2) }
}

pub fn coxeter_complex(group: &Arc<CoxeterGroup>) -> CoxeterComplex {
  let full: TypeMask = (1 << group.rank()) - 1;
  let mut simplices = BTreeSet::new();
  for types in 0..=full {
    for w in group.elements() {
      simplices.insert(group.coset(w, types));
    }
  }
  CoxeterComplex { group: group.clone(), simplices: simplices.into_iter().collect() }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FoldingError {
  #[error("chambers {0:?} and {1:?} are not adjacent")]
  NotAdjacent(WeylElement, WeylElement),
}

/// The folding of `Sigma(W, S)` onto the root containing `keep` that sends `fold` to `keep`.
#[derive(Debug, Clone)]
pub struct FoldingMap {
  pub keep:       WeylElement,
  pub fold:       WeylElement,
  pub reflection: WeylElement,
  chamber_map:    Vec<WeylElement>,
}

impl FoldingMap {
  pub fn apply(&self, w: WeylElement) -> WeylElement { self.chamber_map[w.index()] }

  pub fn apply_simplex(&self, group: &CoxeterGroup, a: &StandardCoset) -> StandardCoset {
    let keep_side = group.on_positive_side(self.reflection, self.keep);
    if group.on_positive_side(self.reflection, a.rep) == keep_side {
      *a
    } else {
      group.coset(group.multiply(self.reflection, a.rep), a.types)
    }
  }

  /// The root: chambers fixed by the folding, sorted.
  pub fn image(&self) -> Vec<WeylElement> {
    let set: BTreeSet<_> = self.chamber_map.iter().copied().collect();
    set.into_iter().collect()
  }
}

pub fn folding_along(
  group: &CoxeterGroup,
  keep: WeylElement,
  fold: WeylElement,
) -> Result<FoldingMap, FoldingError> {
  let x = group.multiply(group.inverse(keep), fold);
  if group.length(x) != 1 {
    return Err(FoldingError::NotAdjacent(keep, fold));
  }
  let reflection = group.multiply(fold, group.inverse(keep));
  let keep_side = group.on_positive_side(reflection, keep);
  let chamber_map = group
    .elements()
    .map(|w| if group.on_positive_side(reflection, w) == keep_side { w } else { group.multiply(reflection, w) })
    .collect();
  Ok(FoldingMap { keep, fold, reflection, chamber_map })
}
