//! The building of `SL_n(F_q)`: complete flags of `F_q^n` with frame apartments.

use std::collections::{HashMap, HashSet, VecDeque};

use itertools::Itertools;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{
  building::{BuildingError, BuildingStructure, ChamberId, VertexId},
  coxeter::{enumerate_group, CoxeterError, CoxeterMatrix, WeylElement},
  field::{make_field, FieldError, FqElement, FqField},
  matrix::{nullspace, rref, Matrix},
};

pub const MIN_N: usize = 2;
pub const MAX_N: usize = 4;
pub const MAX_Q: usize = 4;
/// Frame apartments are stored explicitly; `(4, 4)` would need about 1.5 million.
pub const MAX_APARTMENTS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlagError {
  #[error("parameters n={n}, q={q} are outside the supported range ({reason})")]
  OutOfRange { n: usize, q: usize, reason: String },
  #[error("frame {0:?} is not in general position")]
  DegenerateFrame(Vec<VertexId>),
  #[error("chamber set is not a root of apartment {0}")]
  NotARoot(usize),
  #[error("chambers {0} and {1} are not opposite")]
  NotOpposite(ChamberId, ChamberId),
  #[error("chamber {chamber} is not in apartment {apartment}")]
  NotInApartment { chamber: ChamberId, apartment: usize },
  #[error("element at position {position} is not in the root group for that position")]
  NotInRootGroup { position: usize },
  #[error("coordinate set for generator {0} must contain zero and lie in the field")]
  BadCoordinateSet(usize),
  #[error("matrix is singular")]
  Singular,
  #[error("matrix has size {got}, building needs {expected}")]
  DimensionMismatch { got: usize, expected: usize },
  #[error("permutation closure exceeded {0} elements")]
  ClosureBound(usize),
  #[error(transparent)]
  Field(#[from] FieldError),
  #[error(transparent)]
  Building(#[from] BuildingError),
  #[error(transparent)]
  Coxeter(#[from] CoxeterError),
}

/// A subspace of `F_q^n` stored as its reduced row echelon basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
  n:    usize,
  rows: Vec<Vec<FqElement>>,
}

impl Subspace {
  pub fn span(vectors: &[Vec<FqElement>], n: usize, f: &FqField) -> Self {
    Self { n, rows: if vectors.is_empty() { Vec::new() } else { rref(vectors, f) } }
  }

  pub fn dim(&self) -> usize { self.rows.len() }

  pub fn ambient_dim(&self) -> usize { self.n }

  pub fn rows(&self) -> &[Vec<FqElement>] { &self.rows }

  pub fn contains_vector(&self, v: &[FqElement], f: &FqField) -> bool {
    let mut rows = self.rows.clone();
    rows.push(v.to_vec());
    rref(&rows, f).len() == self.dim()
  }

  pub fn contains(&self, other: &Subspace, f: &FqField) -> bool {
    other.rows.iter().all(|v| self.contains_vector(v, f))
  }

  /// Orthogonal complement for the standard bilinear form.
  pub fn orthogonal(&self, f: &FqField) -> Subspace {
    Subspace::span(&nullspace(&self.rows, self.n, f), self.n, f)
  }

  /// Image under `x -> g F^m(x)`.
  pub fn image(&self, g: &Matrix, frobenius: u32, f: &FqField) -> Subspace {
    let vectors: Vec<Vec<FqElement>> =
      self.rows.iter().map(|r| g.apply(&r.iter().map(|&x| f.frobenius(x, frobenius)).collect::<Vec<_>>(), f)).collect();
    Subspace::span(&vectors, self.n, f)
  }

  fn key(&self) -> Vec<FqElement> { self.rows.concat() }
}

/// A map of the form `D^e o g o F^m` on subspaces: Frobenius twist, linear map, then
/// optionally the orthogonal-complement duality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlantMap {
  pub matrix:    Matrix,
  pub frobenius: u32,
  pub duality:   bool,
}

impl PlantMap {
  pub fn identity(n: usize) -> Self { Self::linear(Matrix::identity(n)) }

  pub fn linear(matrix: Matrix) -> Self { Self { matrix, frobenius: 0, duality: false } }

  /// A uniformly random invertible matrix with the given twist and duality flag.
  pub fn random(n: usize, f: &FqField, frobenius: u32, duality: bool, rng: &mut impl Rng) -> Self {
    Self { matrix: random_invertible(n, f, rng), frobenius, duality }
  }
}

/// Rejection sampling over all `n x n` matrices.
pub fn random_invertible(n: usize, f: &FqField, rng: &mut impl Rng) -> Matrix {
  loop {
    let rows: Vec<Vec<FqElement>> = (0..n).map(|_| (0..n).map(|_| FqElement(rng.gen_range(0..f.q() as u16))).collect()).collect();
    let m = Matrix::from_rows(&rows);
    if !m.det(f).is_zero() {
      return m;
    }
  }
}

pub type ChamberPermutation = Vec<ChamberId>;

#[derive(Debug)]
pub struct FlagBuilding {
  n:         usize,
  field:     FqField,
  subspaces: Vec<Subspace>,
  by_key:    HashMap<Vec<FqElement>, VertexId>,
  frames:    Vec<Vec<VertexId>>,
  building:  BuildingStructure,
}

/// `|{frames of F_q^n}| = |GL_n(F_q)| / ((q-1)^n n!)`.
pub fn frame_count(n: usize, q: usize) -> u128 {
  let (n32, q) = (n as u32, q as u128);
  let gl: u128 = (0..n32).map(|i| q.pow(n32) - q.pow(i)).product();
  let fact: u128 = (1..=n as u128).product();
  gl / ((q - 1).pow(n32) * fact)
}

fn check_range(n: usize, q: usize) -> Result<FqField, FlagError> {
  let err = |reason: &str| FlagError::OutOfRange { n, q, reason: reason.to_string() };
  if !(MIN_N..=MAX_N).contains(&n) {
    return Err(err("n must be between 2 and 4"));
  }
  if !(2..=MAX_Q).contains(&q) {
    return Err(err("q must be 2, 3 or 4"));
  }
  let (p, e) = match q {
    2 => (2, 1),
    3 => (3, 1),
    4 => (2, 2),
    _ => unreachable!(),
  };
  if frame_count(n, q) > MAX_APARTMENTS as u128 {
    return Err(err("frame apartment system too large"));
  }
  Ok(make_field(p, e)?)
}

/// All `d`-dimensional subspaces, in order of pivot set then free entries.
fn subspaces_of_dim(n: usize, d: usize, f: &FqField) -> Vec<Subspace> {
  let q = f.q();
  let mut out = Vec::new();
  for pivots in (0..n).combinations(d) {
    let free: Vec<(usize, usize)> = pivots
      .iter()
      .enumerate()
      .flat_map(|(r, &p)| (p + 1..n).filter(|c| !pivots.contains(c)).map(move |c| (r, c)))
      .collect();
    let total = q.pow(free.len() as u32);
    for mut code in 0..total {
      let mut rows = vec![vec![FqElement::ZERO; n]; d];
      for (r, &p) in pivots.iter().enumerate() {
        rows[r][p] = FqElement::ONE;
      }
      for &(r, c) in &free {
        rows[r][c] = FqElement((code % q) as u16);
        code /= q;
      }
      out.push(Subspace { n, rows });
    }
  }
  out
}

impl FlagBuilding {
  pub fn new(n: usize, q: usize) -> Result<Self, FlagError> {
    let field = check_range(n, q)?;
    let group = enumerate_group(&CoxeterMatrix::type_a(n - 1))?;
    let mut subspaces = Vec::new();
    let mut vertex_types = Vec::new();
    for d in 1..n {
      for s in subspaces_of_dim(n, d, &field) {
        subspaces.push(s);
        vertex_types.push(d - 1);
      }
    }
    let by_key: HashMap<Vec<FqElement>, VertexId> = subspaces.iter().enumerate().map(|(i, s)| (s.key(), i)).collect();

    let mut above: Vec<Vec<VertexId>> = vec![Vec::new(); subspaces.len()];
    for (i, small) in subspaces.iter().enumerate() {
      for (j, big) in subspaces.iter().enumerate() {
        if big.dim() == small.dim() + 1 && big.contains(small, &field) {
          above[i].push(j);
        }
      }
    }
    let mut chambers = Vec::new();
    let mut stack: Vec<Vec<VertexId>> =
      (0..subspaces.len()).rev().filter(|&v| subspaces[v].dim() == 1).map(|v| vec![v]).collect();
    while let Some(flag) = stack.pop() {
      if flag.len() == n - 1 {
        chambers.push(flag);
        continue;
      }
      for &next in above[*flag.last().unwrap()].iter().rev() {
        let mut longer = flag.clone();
        longer.push(next);
        stack.push(longer);
      }
    }
    let chamber_index: HashMap<Vec<VertexId>, ChamberId> =
      chambers.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();

    let points: Vec<VertexId> = (0..subspaces.len()).filter(|&v| subspaces[v].dim() == 1).collect();
    let mut frames = Vec::new();
    let mut apartments = Vec::new();
    for combo in points.iter().copied().combinations(n) {
      let vectors: Vec<Vec<FqElement>> = combo.iter().map(|&v| subspaces[v].rows[0].clone()).collect();
      if rref(&vectors, &field).len() != n {
        continue;
      }
      let mut set = Vec::with_capacity(group.order());
      for perm in (0..n).permutations(n) {
        let flag: Vec<VertexId> = (1..n)
          .map(|k| {
            let span: Vec<Vec<FqElement>> = perm[..k].iter().map(|&i| vectors[i].clone()).collect();
            by_key[&Subspace::span(&span, n, &field).key()]
          })
          .collect();
        set.push(chamber_index[&flag]);
      }
      frames.push(combo);
      apartments.push(set);
    }
    let building = BuildingStructure::from_parts(group, vertex_types, chambers, apartments)?;
    Ok(Self { n, field, subspaces, by_key, frames, building })
  }

  pub fn n(&self) -> usize { self.n }

  pub fn q(&self) -> usize { self.field.q() }

  pub fn field(&self) -> &FqField { &self.field }

  pub fn building(&self) -> &BuildingStructure { &self.building }

  pub fn subspace(&self, v: VertexId) -> &Subspace { &self.subspaces[v] }

  pub fn vertex_of(&self, s: &Subspace) -> Option<VertexId> { self.by_key.get(&s.key()).copied() }

  /// Frame point vertices of each apartment, parallel to `building().apartments()`.
  pub fn frames(&self) -> &[Vec<VertexId>] { &self.frames }

  /// Vector (first nonzero entry 1) spanning a point vertex.
  pub fn point_vector(&self, v: VertexId) -> &[FqElement] {
    assert_eq!(self.subspaces[v].dim(), 1);
    &self.subspaces[v].rows[0]
  }

  /// The chamber with flag `V_k = span(vectors[..k])`.
  pub fn chamber_of_vectors(&self, vectors: &[Vec<FqElement>]) -> Option<ChamberId> {
    let flag: Option<Vec<VertexId>> =
      (1..self.n).map(|k| self.vertex_of(&Subspace::span(&vectors[..k], self.n, &self.field))).collect();
    self.building.chamber_by_vertices(&flag?)
  }

  /// Apartment of the frame spanned by the given points.
  pub fn apartment_from_frame(&self, points: &[VertexId]) -> Result<usize, FlagError> {
    let mut key = points.to_vec();
    key.sort_unstable();
    key.dedup();
    if key.len() != self.n
      || key.iter().any(|&v| v >= self.subspaces.len() || self.subspaces[v].dim() != 1)
      || rref(&key.iter().map(|&v| self.point_vector(v).to_vec()).collect::<Vec<_>>(), &self.field).len()
        != self.n
    {
      return Err(FlagError::DegenerateFrame(points.to_vec()));
    }
    Ok(self.frames.binary_search(&key).expect("frames are enumerated in sorted order"))
  }

  fn check_matrix(&self, g: &Matrix) -> Result<(), FlagError> {
    if g.n() != self.n {
      return Err(FlagError::DimensionMismatch { got: g.n(), expected: self.n });
    }
    if g.det(&self.field).is_zero() {
      return Err(FlagError::Singular);
    }
    Ok(())
  }

  /// Vertex permutation induced by a plant map.
  pub fn plant_vertex_map(&self, plant: &PlantMap) -> Result<Vec<VertexId>, FlagError> {
    self.check_matrix(&plant.matrix)?;
    let f = &self.field;
    Ok(
      self
        .subspaces
        .iter()
        .map(|s| {
          let img = s.image(&plant.matrix, plant.frobenius, f);
          let img = if plant.duality { img.orthogonal(f) } else { img };
          self.by_key[&img.key()]
        })
        .collect(),
    )
  }

  /// Chamber permutation induced by a plant map.
  pub fn plant_action(&self, plant: &PlantMap) -> Result<ChamberPermutation, FlagError> {
    let vmap = self.plant_vertex_map(plant)?;
    Ok(
      self
        .building
        .chamber_ids()
        .map(|c| {
          let mut tuple: Vec<VertexId> = self.building.chamber_vertices(c).iter().map(|&v| vmap[v]).collect();
          if plant.duality {
            tuple.reverse();
          }
          self.building.chamber_by_vertices(&tuple).expect("plant maps flags to flags")
        })
        .collect(),
    )
  }

  /// Chamber permutation of an invertible matrix.
  pub fn group_action(&self, g: &Matrix) -> Result<ChamberPermutation, FlagError> {
    self.plant_action(&PlantMap::linear(g.clone()))
  }

  /// Elementary transvections `I + c E_ij`, `c != 0`; they generate `SL_n(F_q)`.
  pub fn transvection_generators(&self) -> Vec<Matrix> {
    let mut out = Vec::new();
    for i in 0..self.n {
      for j in 0..self.n {
        if i != j {
          for c in self.field.units() {
            out.push(Matrix::elementary(self.n, i, j, c));
          }
        }
      }
    }
    out
  }

  /// Generators of the full type-preserving automorphism group: transvections, a
  /// diagonal element and the Frobenius.
  pub fn type_preserving_generators(&self) -> Vec<PlantMap> {
    let mut out: Vec<PlantMap> = self.transvection_generators().into_iter().map(PlantMap::linear).collect();
    let mut diag = vec![FqElement::ONE; self.n];
    diag[0] = self.field.primitive_element();
    out.push(PlantMap::linear(Matrix::diagonal(&diag)));
    if self.field.e() > 1 {
      out.push(PlantMap { matrix: Matrix::identity(self.n), frobenius: 1, duality: false });
    }
    out
  }

  /// Every chamber permutation in the group generated by `gens`.
  pub fn permutation_closure(
    gens: &[ChamberPermutation],
    bound: usize,
  ) -> Result<Vec<ChamberPermutation>, FlagError> {
    let Some(first) = gens.first() else {
      return Ok(Vec::new());
    };
    let identity: ChamberPermutation = (0..first.len()).collect();
    let mut seen: HashSet<ChamberPermutation> = HashSet::from([identity.clone()]);
    let mut out = vec![identity.clone()];
    let mut queue = VecDeque::from([identity]);
    while let Some(p) = queue.pop_front() {
      for g in gens {
        let next: ChamberPermutation = p.iter().map(|&c| g[c]).collect();
        if seen.insert(next.clone()) {
          if out.len() >= bound {
            return Err(FlagError::ClosureBound(bound));
          }
          out.push(next.clone());
          queue.push_back(next);
        }
      }
    }
    Ok(out)
  }

  /// Whether the group generated by the permutations acts transitively on chamber
  /// pairs at each Weyl distance. Returns the first failing distance otherwise.
  pub fn weyl_transitivity(&self, gens: &[ChamberPermutation]) -> Result<(), WeylElement> {
    let b = &self.building;
    let n = b.chamber_count();
    let g = b.group();
    let mut class_size = vec![0usize; g.order()];
    let mut representative: Vec<Option<(ChamberId, ChamberId)>> = vec![None; g.order()];
    for x in b.chamber_ids() {
      for y in b.chamber_ids() {
        let w = b.delta(x, y);
        class_size[w.index()] += 1;
        representative[w.index()].get_or_insert((x, y));
      }
    }
    for w in g.elements() {
      let (x, y) = representative[w.index()].unwrap();
      let mut seen = vec![false; n * n];
      seen[x * n + y] = true;
      let mut count = 1;
      let mut queue = VecDeque::from([(x, y)]);
      while let Some((a, c)) = queue.pop_front() {
        for p in gens {
          let (a2, c2) = (p[a], p[c]);
          if !seen[a2 * n + c2] {
            seen[a2 * n + c2] = true;
            count += 1;
            queue.push_back((a2, c2));
          }
        }
      }
      if count != class_size[w.index()] {
        return Err(w);
      }
    }
    Ok(())
  }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagSummary {
  pub n:          usize,
  pub q:          usize,
  pub chambers:   usize,
  pub vertices:   usize,
  pub apartments: usize,
}

impl FlagBuilding {
  pub fn summary(&self) -> FlagSummary {
    FlagSummary {
      n:          self.n,
      q:          self.q(),
      chambers:   self.building.chamber_count(),
      vertices:   self.building.vertex_count(),
      apartments: self.building.apartments().len(),
    }
  }
}
