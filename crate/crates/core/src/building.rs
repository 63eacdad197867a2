//! Abstract spherical buildings as typed chamber complexes with an apartment system.
//!
//! A chamber is stored as its vertex tuple indexed by type, so two chambers are
//! `s`-adjacent exactly when their tuples differ only in position `s`. The Weyl distance
//! from a chamber is computed by one breadth-first pass over the colored chamber graph
//! and cached per source chamber.

use std::{
  collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque},
  sync::{Arc, OnceLock},
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coxeter::{
  enumerate_group, mask_members, mask_of, CoxeterError, CoxeterGroup, CoxeterMatrix, DoubleCosetDistance,
  TypeMask, WeylElement,
};

pub type ChamberId = usize;
pub type VertexId = usize;

const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildingError {
  #[error("chamber {0} is not in the building")]
  UnknownChamber(ChamberId),
  #[error("vertex {0} is not in the building")]
  UnknownVertex(VertexId),
  #[error("vertices {0:?} do not form a simplex")]
  NotASimplex(Vec<VertexId>),
  #[error("neighborhood index {n} exceeds rank {rank}")]
  OutOfRange { n: usize, rank: usize },
  #[error("word {0:?} is not reduced")]
  WordNotReduced(Vec<usize>),
  #[error("word {word:?} does not spell the Weyl distance of the chambers")]
  WordMismatch { word: Vec<usize> },
  #[error("chambers {0} and {1} are not connected by a gallery")]
  Unreachable(ChamberId, ChamberId),
  #[error("invalid building data: {0}")]
  Invalid(String),
  #[error(transparent)]
  Coxeter(#[from] CoxeterError),
}

/// A simplex given by its vertices, one per type, sorted by vertex id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Simplex {
  vertices: Vec<VertexId>,
}

impl Simplex {
  pub fn empty() -> Self { Self { vertices: Vec::new() } }

  pub fn vertices(&self) -> &[VertexId] { &self.vertices }

  pub fn len(&self) -> usize { self.vertices.len() }

  pub fn is_empty(&self) -> bool { self.vertices.is_empty() }

  pub fn is_face_of(&self, other: &Simplex) -> bool {
    self.vertices.iter().all(|v| other.vertices.binary_search(v).is_ok())
  }

  fn from_unsorted(mut vertices: Vec<VertexId>) -> Self {
    vertices.sort_unstable();
    vertices.dedup();
    Self { vertices }
  }
}

/// A chamber walk, with the color of each step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gallery {
  pub chambers: Vec<ChamberId>,
  pub colors:   Vec<usize>,
}

impl Gallery {
  pub fn len(&self) -> usize { self.colors.len() }

  pub fn is_empty(&self) -> bool { self.colors.is_empty() }

  pub fn is_stammering(&self) -> bool { self.chambers.windows(2).any(|w| w[0] == w[1]) }
}

/// An apartment: its chamber set plus, when it is thin, a chart `W -> chambers`
/// satisfying `chart[w s]` s-adjacent to `chart[w]`.
#[derive(Clone, Debug)]
pub struct Apartment {
  chambers: Vec<ChamberId>,
  chart:    Option<Vec<ChamberId>>,
}

impl Apartment {
  /// Sorted chamber ids.
  pub fn chambers(&self) -> &[ChamberId] { &self.chambers }

  pub fn chart(&self) -> Option<&[ChamberId]> { self.chart.as_deref() }

  pub fn contains(&self, c: ChamberId) -> bool { self.chambers.binary_search(&c).is_ok() }
}

#[derive(Debug)]
pub struct BuildingStructure {
  group:        Arc<CoxeterGroup>,
  vertex_types: Vec<usize>,
  chambers:     Vec<Vec<VertexId>>,
  index:        HashMap<Vec<VertexId>, ChamberId>,
  panels:       Vec<Vec<ChamberId>>,
  panel_of:     Vec<usize>,
  vertex_star:  Vec<Vec<ChamberId>>,
  apartments:   Vec<Apartment>,
  by_chamber:   OnceLock<Vec<Vec<usize>>>,
  by_set:       OnceLock<HashMap<Vec<ChamberId>, usize>>,
  distances:    Vec<OnceLock<Vec<u32>>>,
}

/// Result of a single axiom check, with a witness on failure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomCheck {
  pub name:    String,
  pub passed:  bool,
  pub checked: usize,
  pub witness: Option<String>,
}

impl AxiomCheck {
  fn new(name: &str) -> Self { Self { name: name.to_string(), passed: true, checked: 0, witness: None } }

  fn fail(&mut self, witness: String) {
    if self.passed {
      self.passed = false;
      self.witness = Some(witness);
    }
  }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
  pub rank:            usize,
  pub chambers:        usize,
  pub vertices:        usize,
  pub apartments:      usize,
  /// Exact panel degree -> number of panels with that degree.
  pub panel_degrees:   BTreeMap<usize, usize>,
  pub checks:          Vec<AxiomCheck>,
}

impl AxiomReport {
  pub fn all_passed(&self) -> bool { self.checks.iter().all(|c| c.passed) }

  pub fn check(&self, name: &str) -> Option<&AxiomCheck> { self.checks.iter().find(|c| c.name == name) }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexJson {
  pub id:     VertexId,
  #[serde(rename = "type")]
  pub vtype:  usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelEdgeJson {
  pub a:     ChamberId,
  pub b:     ChamberId,
  pub color: usize,
}

/// File schema for a building.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildingJson {
  pub coxeter:         CoxeterMatrix,
  pub vertices:        Vec<VertexJson>,
  pub chambers:        Vec<Vec<VertexId>>,
  pub panel_adjacency: Vec<PanelEdgeJson>,
  pub apartments:      Vec<Vec<ChamberId>>,
}

pub const ISOMORPHISM_SAMPLE: usize = 400;
pub const COHERENCE_BUDGET: usize = 4_000_000;

impl BuildingStructure {
  /// Assembles a building from vertex types, chamber vertex tuples (indexed by type)
  /// and apartment chamber sets. Structural consistency is checked here; the building
  /// axioms are checked by [`verify_building_axioms`](Self::verify_building_axioms).
  pub fn from_parts(
    group: Arc<CoxeterGroup>,
    vertex_types: Vec<usize>,
    chambers: Vec<Vec<VertexId>>,
    apartments: Vec<Vec<ChamberId>>,
  ) -> Result<Self, BuildingError> {
    let rank = group.rank();
    if vertex_types.iter().any(|&t| t >= rank) {
      return Err(BuildingError::Invalid("vertex type out of range".into()));
    }
    let mut index = HashMap::with_capacity(chambers.len());
    for (id, c) in chambers.iter().enumerate() {
      if c.len() != rank {
        return Err(BuildingError::Invalid(format!("chamber {id} has {} vertices, rank is {rank}", c.len())));
      }
      for (t, &v) in c.iter().enumerate() {
        if vertex_types.get(v) != Some(&t) {
          return Err(BuildingError::Invalid(format!("chamber {id} has vertex {v} in position {t}")));
        }
      }
      if index.insert(c.clone(), id).is_some() {
        return Err(BuildingError::Invalid(format!("chamber {id} is duplicated")));
      }
    }
    if chambers.is_empty() {
      return Err(BuildingError::Invalid("no chambers".into()));
    }

    let mut panel_keys: HashMap<(usize, Vec<VertexId>), usize> = HashMap::new();
    let mut panels: Vec<Vec<ChamberId>> = Vec::new();
    let mut panel_of = vec![0; chambers.len() * rank];
    for (id, c) in chambers.iter().enumerate() {
      for s in 0..rank {
        let mut key = c.clone();
        key[s] = usize::MAX;
        let pid = *panel_keys.entry((s, key)).or_insert_with(|| {
          panels.push(Vec::new());
          panels.len() - 1
        });
        panels[pid].push(id);
        panel_of[id * rank + s] = pid;
      }
    }
    let mut vertex_star = vec![Vec::new(); vertex_types.len()];
    for (id, c) in chambers.iter().enumerate() {
      for &v in c {
        vertex_star[v].push(id);
      }
    }

    let n = chambers.len();
    let mut b = Self {
      group,
      vertex_types,
      chambers,
      index,
      panels,
      panel_of,
      vertex_star,
      apartments: Vec::new(),
      by_chamber: OnceLock::new(),
      by_set: OnceLock::new(),
      distances: (0..n).map(|_| OnceLock::new()).collect(),
    };
    let mut built = Vec::with_capacity(apartments.len());
    for mut set in apartments {
      set.sort_unstable();
      set.dedup();
      if let Some(&bad) = set.iter().find(|&&c| c >= n) {
        return Err(BuildingError::UnknownChamber(bad));
      }
      let chart = b.chart_of(&set);
      built.push(Apartment { chambers: set, chart });
    }
    b.apartments = built;
    Ok(b)
  }

  /// The Coxeter complex of `group`, presented as a (thin) building with one apartment.
  pub fn from_coxeter_complex(group: Arc<CoxeterGroup>) -> Result<Self, BuildingError> {
    let rank = group.rank();
    let full: TypeMask = (1 << rank) - 1;
    let mut vertex_ids: HashMap<(usize, WeylElement), VertexId> = HashMap::new();
    let mut vertex_types = Vec::new();
    let mut chambers = Vec::new();
    for w in group.elements() {
      let mut c = Vec::with_capacity(rank);
      for t in 0..rank {
        let rep = group.min_coset_rep(w, full & !(1 << t));
        let id = *vertex_ids.entry((t, rep)).or_insert_with(|| {
          vertex_types.push(t);
          vertex_types.len() - 1
        });
        c.push(id);
      }
      chambers.push(c);
    }
    let all: Vec<ChamberId> = (0..chambers.len()).collect();
    Self::from_parts(group, vertex_types, chambers, vec![all])
  }

  fn chart_of(&self, set: &[ChamberId]) -> Option<Vec<ChamberId>> {
    let g = &self.group;
    let rank = g.rank();
    if set.len() != g.order() {
      return None;
    }
    let mut chart = vec![usize::MAX; g.order()];
    chart[0] = set[0];
    let mut queue = VecDeque::from([WeylElement::IDENTITY]);
    let mut seen = vec![false; g.order()];
    seen[0] = true;
    while let Some(w) = queue.pop_front() {
      let c = chart[w.index()];
      for s in 0..rank {
        let mut inside = self.panel_members(c, s).iter().filter(|&&d| d != c && set.binary_search(&d).is_ok());
        let (Some(&d), None) = (inside.next(), inside.next()) else {
          return None;
        };
        let ws = g.right_mul(w, s);
        if seen[ws.index()] {
          if chart[ws.index()] != d {
            return None;
          }
        } else {
          seen[ws.index()] = true;
          chart[ws.index()] = d;
          queue.push_back(ws);
        }
      }
    }
    let mut sorted = chart.clone();
    sorted.sort_unstable();
    (sorted == set).then_some(chart)
  }

  pub fn group(&self) -> &Arc<CoxeterGroup> { &self.group }

  pub fn rank(&self) -> usize { self.group.rank() }

  pub fn chamber_count(&self) -> usize { self.chambers.len() }

  pub fn vertex_count(&self) -> usize { self.vertex_types.len() }

  pub fn chamber_ids(&self) -> std::ops::Range<ChamberId> { 0..self.chambers.len() }

  pub fn vertex_type(&self, v: VertexId) -> usize { self.vertex_types[v] }

  pub fn vertex_types(&self) -> &[usize] { &self.vertex_types }

  /// Vertex tuple of a chamber, indexed by type.
  pub fn chamber_vertices(&self, c: ChamberId) -> &[VertexId] { &self.chambers[c] }

  pub fn chamber_by_vertices(&self, vertices: &[VertexId]) -> Option<ChamberId> { self.index.get(vertices).copied() }

  pub fn chamber_simplex(&self, c: ChamberId) -> Simplex { Simplex::from_unsorted(self.chambers[c].clone()) }

  /// The face of `c` with the given type set.
  pub fn face_of_type(&self, c: ChamberId, types: TypeMask) -> Simplex {
    Simplex::from_unsorted(mask_members(types).map(|t| self.chambers[c][t]).collect())
  }

  pub fn apartments(&self) -> &[Apartment] { &self.apartments }

  pub fn panels(&self) -> &[Vec<ChamberId>] { &self.panels }

  pub fn panel_id(&self, c: ChamberId, s: usize) -> usize { self.panel_of[c * self.rank() + s] }

  /// Chambers sharing the panel of cotype `{s}` with `c`, including `c`.
  pub fn panel_members(&self, c: ChamberId, s: usize) -> &[ChamberId] { &self.panels[self.panel_id(c, s)] }

  /// All chambers adjacent to `c`, with colors.
  pub fn neighbors(&self, c: ChamberId) -> impl Iterator<Item = (usize, ChamberId)> + '_ {
    (0..self.rank()).flat_map(move |s| self.panel_members(c, s).iter().filter(move |&&d| d != c).map(move |&d| (s, d)))
  }

  /// Color of the panel shared by two distinct chambers, if they are adjacent.
  pub fn adjacency_color(&self, c: ChamberId, d: ChamberId) -> Option<usize> {
    if c == d {
      return None;
    }
    let diff: Vec<usize> = (0..self.rank()).filter(|&t| self.chambers[c][t] != self.chambers[d][t]).collect();
    (diff.len() == 1).then(|| diff[0])
  }

  /// `codim(C ∩ D)`: the number of types on which the chambers differ.
  pub fn codim_intersection(&self, c: ChamberId, d: ChamberId) -> usize {
    (0..self.rank()).filter(|&t| self.chambers[c][t] != self.chambers[d][t]).count()
  }

  pub fn simplex_type(&self, x: &Simplex) -> TypeMask { mask_of(x.vertices.iter().map(|&v| self.vertex_types[v])) }

  /// Complement of the type: the generators of the residue `St X`.
  pub fn simplex_cotype(&self, x: &Simplex) -> TypeMask { ((1 << self.rank()) - 1) & !self.simplex_type(x) }

  /// Validated simplex from a vertex set; it must be a face of some chamber.
  pub fn simplex(&self, vertices: &[VertexId]) -> Result<Simplex, BuildingError> {
    if let Some(&v) = vertices.iter().find(|&&v| v >= self.vertex_types.len()) {
      return Err(BuildingError::UnknownVertex(v));
    }
    let s = Simplex::from_unsorted(vertices.to_vec());
    let types: BTreeSet<_> = s.vertices.iter().map(|&v| self.vertex_types[v]).collect();
    if types.len() != s.len() || self.star(&s).is_empty() {
      return Err(BuildingError::NotASimplex(vertices.to_vec()));
    }
    Ok(s)
  }

  fn check_chamber(&self, c: ChamberId) -> Result<(), BuildingError> {
    if c < self.chamber_count() {
      Ok(())
    } else {
      Err(BuildingError::UnknownChamber(c))
    }
  }

  fn check_simplex(&self, x: &Simplex) -> Result<(), BuildingError> {
    if x.vertices.iter().any(|&v| v >= self.vertex_count()) || self.star(x).is_empty() {
      return Err(BuildingError::NotASimplex(x.vertices.clone()));
    }
    Ok(())
  }

  /// Chambers containing `x` (all chambers for the empty simplex), sorted.
  pub fn star(&self, x: &Simplex) -> Vec<ChamberId> {
    let Some((&first, rest)) = x.vertices.split_first() else {
      return self.chamber_ids().collect();
    };
    let Some(base) = self.vertex_star.get(first) else {
      return Vec::new();
    };
    base
      .iter()
      .copied()
      .filter(|&c| rest.iter().all(|&v| v < self.vertex_count() && self.chambers[c][self.vertex_types[v]] == v))
      .collect()
  }

  fn distance_row(&self, c: ChamberId) -> &[u32] {
    self.distances[c].get_or_init(|| {
      let g = &self.group;
      let mut row = vec![UNREACHED; self.chamber_count()];
      row[c] = 0;
      let mut queue = VecDeque::from([c]);
      while let Some(x) = queue.pop_front() {
        let wx = WeylElement(row[x]);
        for s in 0..self.rank() {
          for &y in self.panel_members(x, s) {
            if row[y] == UNREACHED {
              row[y] = g.right_mul(wx, s).0;
              queue.push_back(y);
            }
          }
        }
      }
      row
    })
  }

  /// Weyl distance without bounds checks; panics on invalid or disconnected input.
  #[inline]
  pub fn delta(&self, c: ChamberId, d: ChamberId) -> WeylElement {
    let v = self.distance_row(c)[d];
    assert_ne!(v, UNREACHED, "chambers {c} and {d} are not connected");
    WeylElement(v)
  }

  /// Gallery distance `l(delta(c, d))`.
  pub fn gallery_distance(&self, c: ChamberId, d: ChamberId) -> usize { self.group.length(self.delta(c, d)) }

  pub fn weyl_distance(&self, c: ChamberId, d: ChamberId) -> Result<WeylElement, BuildingError> {
    self.check_chamber(c)?;
    self.check_chamber(d)?;
    let v = self.distance_row(c)[d];
    if v == UNREACHED {
      return Err(BuildingError::Unreachable(c, d));
    }
    Ok(WeylElement(v))
  }

  /// Double-coset distance `W_J delta(C, D) W_K` for any chambers `C ⊇ X`, `D ⊇ Y`, where
  /// `J`, `K` are the cotypes of `X`, `Y`.
  pub fn weyl_distance_simplices(&self, x: &Simplex, y: &Simplex) -> Result<DoubleCosetDistance, BuildingError> {
    self.check_simplex(x)?;
    self.check_simplex(y)?;
    let c = self.star(x)[0];
    let d = self.star(y)[0];
    let w = self.weyl_distance(c, d)?;
    Ok(self.group.double_coset_rep(self.simplex_cotype(x), w, self.simplex_cotype(y)))
  }

  /// From `from`, follow `word` greedily toward `toward`, each step moving to the panel
  /// chamber closest to `toward`. Returns the visited chambers.
  fn walk_toward(&self, from: ChamberId, toward: ChamberId, word: &[usize]) -> Option<Vec<ChamberId>> {
    let g = &self.group;
    let mut path = Vec::with_capacity(word.len() + 1);
    path.push(from);
    let mut cur = from;
    for &s in word {
      let len = g.length(self.delta(cur, toward));
      let next = self
        .panel_members(cur, s)
        .iter()
        .copied()
        .find(|&e| e != cur && g.length(self.delta(e, toward)) + 1 == len)?;
      path.push(next);
      cur = next;
    }
    Some(path)
  }

  /// The chamber at Weyl distance `prefix` from `from` on the minimal galleries to
  /// `toward`, when `prefix` is a prefix of `delta(from, toward)` in the weak order.
  pub fn interval_chamber(&self, from: ChamberId, toward: ChamberId, prefix: WeylElement) -> Option<ChamberId> {
    let word: Vec<usize> = self.group.word(prefix).iter().map(|&s| s as usize).collect();
    self.walk_toward(from, toward, &word).map(|p| *p.last().unwrap())
  }

  /// The unique minimal gallery from `c` to `d` of type `word`.
  pub fn minimal_gallery(&self, c: ChamberId, d: ChamberId, word: &[usize]) -> Result<Gallery, BuildingError> {
    let w = self.weyl_distance(c, d)?;
    if !self.group.is_reduced(word) {
      return Err(BuildingError::WordNotReduced(word.to_vec()));
    }
    if self.group.from_word(word)? != w {
      return Err(BuildingError::WordMismatch { word: word.to_vec() });
    }
    let chambers = self.walk_toward(c, d, word).ok_or_else(|| BuildingError::WordMismatch { word: word.to_vec() })?;
    Ok(Gallery { chambers, colors: word.to_vec() })
  }

  /// `proj_X C`: the gate of `St X` seen from `C`.
  ///
  /// Take any `D ⊇ X`, split `delta(C, D) = w1 w2` with `w1` minimal in its `W_J` coset,
  /// and walk distance `w1` from `C` toward `D`.
  pub fn proj_chamber(&self, x: &Simplex, c: ChamberId) -> Result<ChamberId, BuildingError> {
    self.check_simplex(x)?;
    self.check_chamber(c)?;
    let d = self.star(x)[0];
    let w = self.weyl_distance(c, d)?;
    let w1 = self.group.min_coset_rep(w, self.simplex_cotype(x));
    self.interval_chamber(c, d, w1).ok_or_else(|| BuildingError::Invalid("projection walk failed".into()))
  }

  /// `proj_X Y`: the simplex `Z` with `Cham St Z = proj_X (Cham St Y)`.
  ///
  /// With `w` the minimal representative of `delta(X, Y)`, `J`, `K` the cotypes, the
  /// cotype of `Z` is `J ∩ w K w^-1`, and `Z` is that face of `proj_X D` for any `D ⊇ Y`.
  pub fn proj_simplex(&self, x: &Simplex, y: &Simplex) -> Result<Simplex, BuildingError> {
    let dist = self.weyl_distance_simplices(x, y)?;
    let g = &self.group;
    let w_inv = g.inverse(dist.rep);
    let cotype = mask_of(mask_members(dist.left).filter(|&s| {
      let conj = g.multiply(g.multiply(w_inv, g.generator(s)), dist.rep);
      g.length(conj) == 1 && dist.right & (1 << g.word(conj)[0]) != 0
    }));
    let d = self.star(y)[0];
    let e = self.proj_chamber(x, d)?;
    Ok(self.face_of_type(e, ((1 << self.rank()) - 1) & !cotype))
  }

  /// `E_n(C)`: chambers `D` with `codim(C ∩ D) <= n`, sorted.
  pub fn e_neighborhood(&self, c: ChamberId, n: usize) -> Result<Vec<ChamberId>, BuildingError> {
    self.check_chamber(c)?;
    if n > self.rank() {
      return Err(BuildingError::OutOfRange { n, rank: self.rank() });
    }
    Ok(self.chamber_ids().filter(|&d| self.codim_intersection(c, d) <= n).collect())
  }

  pub fn opposite(&self, c: ChamberId, d: ChamberId) -> Result<bool, BuildingError> {
    Ok(self.weyl_distance(c, d)? == self.group.longest_element())
  }

  /// Chambers opposite `c`, sorted.
  pub fn opposite_chambers(&self, c: ChamberId) -> Vec<ChamberId> {
    let w0 = self.group.longest_element();
    self.chamber_ids().filter(|&d| self.delta(c, d) == w0).collect()
  }

  /// Whether some chambers `C ⊇ X`, `D ⊇ Y` are opposite: `w0 ∈ W_J delta W_K`.
  pub fn opposite_simplices(&self, x: &Simplex, y: &Simplex) -> Result<bool, BuildingError> {
    let d = self.weyl_distance_simplices(x, y)?;
    Ok(self.group.double_coset_contains(&d, self.group.longest_element()))
  }

  fn chamber_apartment_index(&self) -> &Vec<Vec<usize>> {
    self.by_chamber.get_or_init(|| {
      let mut idx = vec![Vec::new(); self.chamber_count()];
      for (a, ap) in self.apartments.iter().enumerate() {
        for &c in &ap.chambers {
          idx[c].push(a);
        }
      }
      idx
    })
  }

  /// Apartments whose chamber set contains every chamber in `chambers`.
  pub fn apartments_containing(&self, chambers: &[ChamberId]) -> Vec<usize> {
    let idx = self.chamber_apartment_index();
    let Some((&first, rest)) = chambers.split_first() else {
      return (0..self.apartments.len()).collect();
    };
    idx[first].iter().copied().filter(|&a| rest.iter().all(|&c| self.apartments[a].contains(c))).collect()
  }

  /// Apartment with exactly this chamber set.
  pub fn apartment_by_chambers(&self, chambers: &[ChamberId]) -> Option<usize> {
    let map = self.by_set.get_or_init(|| {
      self.apartments.iter().enumerate().map(|(i, a)| (a.chambers.clone(), i)).collect()
    });
    let mut key = chambers.to_vec();
    key.sort_unstable();
    map.get(&key).copied()
  }

  pub fn verify_building_axioms(&self) -> AxiomReport {
    let g = &self.group;
    let rank = self.rank();
    let full: TypeMask = (1 << rank) - 1;

    let mut panel_degrees = BTreeMap::new();
    let mut thickness = AxiomCheck::new("thickness");
    for (pid, p) in self.panels.iter().enumerate() {
      *panel_degrees.entry(p.len()).or_insert(0) += 1;
      thickness.checked += 1;
      if p.len() < 3 {
        thickness.fail(format!("panel {pid} lies in only {} chambers: {:?}", p.len(), p));
      }
    }
    if rank == 0 && self.chamber_count() != 1 {
      thickness.fail("rank-0 complex must have a single chamber".into());
    }

    let mut coxeter = AxiomCheck::new("apartments are Coxeter complexes");
    if self.apartments.is_empty() {
      coxeter.fail("no apartments".into());
    }
    for (a, ap) in self.apartments.iter().enumerate() {
      coxeter.checked += 1;
      let Some(chart) = &ap.chart else {
        coxeter.fail(format!("apartment {a} is not a thin chamber complex of the Coxeter type"));
        continue;
      };
      'types: for t in 0..rank {
        let mut forward: HashMap<WeylElement, VertexId> = HashMap::new();
        let mut backward: HashMap<VertexId, WeylElement> = HashMap::new();
        for w in g.elements() {
          let coset = g.min_coset_rep(w, full & !(1 << t));
          let v = self.chambers[chart[w.index()]][t];
          if *forward.entry(coset).or_insert(v) != v || *backward.entry(v).or_insert(coset) != coset {
            coxeter.fail(format!("apartment {a}: vertices of type {t} do not match the cosets of W_(S-{{{t}}})"));
            break 'types;
          }
        }
      }
    }

    let mut joint = AxiomCheck::new("any two chambers lie in a common apartment");
    let n = self.chamber_count();
    let mut covered = vec![false; n * n];
    for ap in &self.apartments {
      for &c in &ap.chambers {
        for &d in &ap.chambers {
          covered[c * n + d] = true;
        }
      }
    }
    joint.checked = n * n;
    if let Some(pos) = covered.iter().position(|&x| !x) {
      joint.fail(format!("chambers {} and {} share no apartment", pos / n, pos % n));
    }

    let mut iso = AxiomCheck::new("apartments are isomorphic fixing their intersection");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let index = self.chamber_apartment_index();
    for _ in 0..ISOMORPHISM_SAMPLE.min(n * self.apartments.len()) {
      let c = rng.gen_range(0..n);
      let list = &index[c];
      if list.is_empty() {
        continue;
      }
      let a = list[rng.gen_range(0..list.len())];
      let b = list[rng.gen_range(0..list.len())];
      let (Some(ca), Some(cb)) = (&self.apartments[a].chart, &self.apartments[b].chart) else {
        continue;
      };
      iso.checked += 1;
      let pos_a = ca.iter().position(|&x| x == c).unwrap();
      let pos_b = cb.iter().position(|&x| x == c).unwrap();
      let shift = g.multiply(WeylElement(pos_b as u32), g.inverse(WeylElement(pos_a as u32)));
      let map = |x: usize| cb[g.multiply(shift, WeylElement(x as u32)).index()];
      let verts_b: HashSet<VertexId> = cb.iter().flat_map(|&d| self.chambers[d].iter().copied()).collect();
      for (w, &d) in ca.iter().enumerate() {
        let image = map(w);
        if self.apartments[b].contains(d) && image != d {
          iso.fail(format!("apartments {a}, {b}: isomorphism fixing chamber {c} moves common chamber {d}"));
          break;
        }
        for t in 0..rank {
          let v = self.chambers[d][t];
          if verts_b.contains(&v) && self.chambers[image][t] != v {
            iso.fail(format!("apartments {a}, {b}: isomorphism fixing chamber {c} moves common vertex {v}"));
          }
        }
      }
    }

    let mut coherence = AxiomCheck::new("Weyl distance restricts to the apartment distance");
    let per = g.order() * g.order();
    let stride = (self.apartments.len() * per).div_ceil(COHERENCE_BUDGET).max(1);
    for (a, ap) in self.apartments.iter().enumerate().step_by(stride) {
      let Some(chart) = &ap.chart else { continue };
      coherence.checked += 1;
      'pairs: for u in g.elements() {
        let u_inv = g.inverse(u);
        for v in g.elements() {
          let (c, d) = (chart[u.index()], chart[v.index()]);
          if self.distance_row(c)[d] != g.multiply(u_inv, v).0 {
            coherence.fail(format!("apartment {a}: delta({c}, {d}) differs from the chart distance"));
            break 'pairs;
          }
        }
      }
    }

    AxiomReport {
      rank,
      chambers: n,
      vertices: self.vertex_count(),
      apartments: self.apartments.len(),
      panel_degrees,
      checks: vec![thickness, coxeter, joint, iso, coherence],
    }
  }

  /// The star of `a` as a building of the cotype subsystem.
  pub fn star_building(&self, a: &Simplex) -> Result<BuildingStructure, BuildingError> {
    self.check_simplex(a)?;
    let gens: Vec<usize> = mask_members(self.simplex_cotype(a)).collect();
    let group = enumerate_group(&self.group.matrix().restrict(&gens))?;
    let chambers = self.star(a);
    let mut vid: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let mut vertex_types = Vec::new();
    let mut new_chambers = Vec::with_capacity(chambers.len());
    for &c in &chambers {
      let tuple: Vec<VertexId> = gens
        .iter()
        .enumerate()
        .map(|(new_t, &old_t)| {
          let v = self.chambers[c][old_t];
          *vid.entry(v).or_insert_with(|| {
            vertex_types.push(new_t);
            vertex_types.len() - 1
          })
        })
        .collect();
      new_chambers.push(tuple);
    }
    let local: HashMap<ChamberId, ChamberId> = chambers.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut apartments: BTreeSet<Vec<ChamberId>> = BTreeSet::new();
    for &c in &chambers {
      for &ap in &self.chamber_apartment_index()[c] {
        let set: Vec<ChamberId> =
          self.apartments[ap].chambers.iter().filter_map(|d| local.get(d).copied()).collect();
        apartments.insert(set);
      }
    }
    BuildingStructure::from_parts(group, vertex_types, new_chambers, apartments.into_iter().collect())
  }

  pub fn to_json(&self) -> BuildingJson {
    let mut panel_adjacency = Vec::new();
    for c in self.chamber_ids() {
      for (color, d) in self.neighbors(c) {
        if c < d {
          panel_adjacency.push(PanelEdgeJson { a: c, b: d, color });
        }
      }
    }
    BuildingJson {
      coxeter: self.group.matrix().clone(),
      vertices: self.vertex_types.iter().enumerate().map(|(id, &vtype)| VertexJson { id, vtype }).collect(),
      chambers: self.chambers.clone(),
      panel_adjacency,
      apartments: self.apartments.iter().map(|a| a.chambers.clone()).collect(),
    }
  }

  pub fn from_json(json: &BuildingJson) -> Result<Self, BuildingError> {
    let group = enumerate_group(&json.coxeter)?;
    let mut vertex_types = vec![usize::MAX; json.vertices.len()];
    for v in &json.vertices {
      let slot = vertex_types.get_mut(v.id).ok_or(BuildingError::UnknownVertex(v.id))?;
      *slot = v.vtype;
    }
    if vertex_types.contains(&usize::MAX) {
      return Err(BuildingError::Invalid("vertex ids must be dense".into()));
    }
    let b = Self::from_parts(group, vertex_types, json.chambers.clone(), json.apartments.clone())?;
    let listed: BTreeSet<(ChamberId, ChamberId, usize)> =
      json.panel_adjacency.iter().map(|e| (e.a.min(e.b), e.a.max(e.b), e.color)).collect();
    let actual: BTreeSet<(ChamberId, ChamberId, usize)> =
      b.to_json().panel_adjacency.iter().map(|e| (e.a, e.b, e.color)).collect();
    if listed != actual {
      return Err(BuildingError::Invalid("panel adjacency does not match the chamber vertices".into()));
    }
    Ok(b)
  }
}

#[cfg(test)]
mod tests {
  use super::*;

  fn hexagon() -> BuildingStructure {
    let g = enumerate_group(&CoxeterMatrix::type_a(2)).unwrap();
    BuildingStructure::from_coxeter_complex(g).unwrap()
  }

  #[test]
  fn thin_complex_fails_thickness_only() {
    let b = hexagon();
    assert_eq!(b.chamber_count(), 6);
    assert_eq!(b.vertex_count(), 6);
    let report = b.verify_building_axioms();
    assert!(!report.check("thickness").unwrap().passed);
    assert_eq!(report.panel_degrees, BTreeMap::from([(2, 6)]));
    for name in [
      "apartments are Coxeter complexes",
      "any two chambers lie in a common apartment",
      "Weyl distance restricts to the apartment distance",
    ] {
      assert!(report.check(name).unwrap().passed, "{name}");
    }
  }

  #[test]
  fn distances_in_coxeter_complex() {
    let b = hexagon();
    let g = b.group().clone();
    for c in b.chamber_ids() {
      assert_eq!(b.weyl_distance(c, c).unwrap(), WeylElement::IDENTITY);
      for (s, d) in b.neighbors(c) {
        assert_eq!(b.weyl_distance(c, d).unwrap(), g.generator(s));
      }
      assert_eq!(b.opposite_chambers(c).len(), 1);
      assert!(!b.opposite(c, c).unwrap());
    }
    assert_eq!(b.weyl_distance(0, 99), Err(BuildingError::UnknownChamber(99)));
  }

  #[test]
  fn neighborhoods_and_errors() {
    let b = hexagon();
    assert_eq!(b.e_neighborhood(0, 0).unwrap(), vec![0]);
    assert_eq!(b.e_neighborhood(0, 1).unwrap().len(), 3);
    assert_eq!(b.e_neighborhood(0, 2).unwrap().len(), 6);
    assert_eq!(b.e_neighborhood(0, 3), Err(BuildingError::OutOfRange { n: 3, rank: 2 }));
  }

  #[test]
  fn gallery_errors() {
    let b = hexagon();
    let w0 = b.group().longest_element();
    let d = b.chamber_ids().find(|&d| b.delta(0, d) == w0).unwrap();
    assert!(matches!(b.minimal_gallery(0, d, &[0, 0, 1]), Err(BuildingError::WordNotReduced(_))));
    assert!(matches!(b.minimal_gallery(0, d, &[0, 1]), Err(BuildingError::WordMismatch { .. })));
    let g = b.minimal_gallery(0, d, &[1, 0, 1]).unwrap();
    assert_eq!(g.chambers.len(), 4);
    assert!(!g.is_stammering());
    assert_eq!(b.minimal_gallery(0, 0, &[]).unwrap().chambers, vec![0]);
  }

  #[test]
  fn simplex_validation() {
    let b = hexagon();
    let c = b.chamber_vertices(0).to_vec();
    assert!(b.simplex(&c).is_ok());
    let far = b.chamber_vertices(b.opposite_chambers(0)[0]).to_vec();
    assert!(matches!(b.simplex(&[c[0], far[1]]), Err(BuildingError::NotASimplex(_))));
    assert_eq!(b.simplex(&[999]), Err(BuildingError::UnknownVertex(999)));
  }

  #[test]
  fn json_round_trip_and_tamper() {
    let b = hexagon();
    let json = b.to_json();
    let back = BuildingStructure::from_json(&json).unwrap();
    assert_eq!(back.to_json(), json);
    let mut bad = json.clone();
    bad.panel_adjacency.pop();
    assert!(BuildingStructure::from_json(&bad).is_err());
  }

  #[test]
  fn star_of_chamber_is_trivial() {
    let b = hexagon();
    let star = b.star_building(&b.chamber_simplex(0)).unwrap();
    assert_eq!(star.chamber_count(), 1);
    assert_eq!(star.rank(), 0);
    assert!(star.verify_building_axioms().all_passed());
  }
}
