//! Extending partial chamber maps: rigidity propagation, extension from `E_2`, and the
//! root-group pipeline for flag buildings.
//!
//! The propagation engine uses only Weyl distances. If `φ` is known on `X` and `Y`, every
//! chamber `D` on a minimal gallery from `X` to `Y` has a forced image: the chamber at
//! distance `σ(δ(X, D))` from `φX` on the minimal galleries to `φY`.

use std::{
  collections::{BTreeMap, BTreeSet},
  time::Instant,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{
  building::{BuildingError, BuildingStructure, ChamberId, VertexId},
  coxeter::WeylElement,
  field::{classify_as_field_hom, FieldHom, FqElement, FqField},
  flag::{ChamberPermutation, FlagBuilding, FlagError},
  group_homs::{default_w0_word, sl_generators, GlobalHom, HomError, Root},
  matrix::Matrix,
  region::{is_gallery_connected, Connectivity},
  roots::{FrameBasis, RootGroup, RootGroupElement},
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtendError {
  #[error("rank {0} is below 3")]
  RankTooSmall(usize),
  #[error("Coxeter diagram is not irreducible")]
  Reducible,
  #[error("Coxeter diagram has isolated nodes {0:?}")]
  IsolatedNode(Vec<usize>),
  #[error("source and target have different Coxeter types")]
  TypeMismatch,
  #[error("source and target fields differ")]
  FieldMismatch,
  #[error("chamber {0} is out of range")]
  UnknownChamber(ChamberId),
  #[error("chambers {a} and {b} both map to {image}")]
  NotInjective { a: ChamberId, b: ChamberId, image: ChamberId },
  #[error("adjacent chambers {a} and {b} have non-adjacent images")]
  NotAdjacencyPreserving { a: ChamberId, b: ChamberId },
  #[error("adjacency colors are not induced by one diagram automorphism")]
  NotTypeCompatible,
  #[error("vertex {0} has inconsistent images")]
  NotVertexConsistent(VertexId),
  #[error("domain is not E2 of chamber {0}, or its image is not E2 of the image chamber")]
  NotE2Domain(ChamberId),
  #[error("chambers {0} and {1} are not opposite")]
  NotOpposite(ChamberId, ChamberId),
  #[error("map does not extend: {0}")]
  Inconsistent(String),
  #[error("propagation reached {reached} of {total} chambers")]
  Incomplete { reached: usize, total: usize },
  #[error("domain is not gallery connected")]
  NotGalleryConnected,
  #[error("domain contains no apartment A with opposite C, D in A and E1(C), E1(D) inside the domain")]
  NoApartmentInDomain,
  #[error("image of apartment {0} is not an apartment")]
  ApartmentImage(usize),
  #[error("image of a root is not a root of the image apartment")]
  RootImage,
  #[error("root labels are not preserved: {0}")]
  Labeling(String),
  #[error("root element moves chamber {0} out of the domain")]
  OutOfDomain(ChamberId),
  #[error("no target root group element matches for root {root:?}, coordinate {c}")]
  TransportFailure { root: Root, c: u16 },
  #[error("{count} target root group elements match for root {root:?}, coordinate {c}")]
  TransportAmbiguous { root: Root, c: u16, count: usize },
  #[error("coordinate map of root {0:?} is not semilinear")]
  NotSemilinear(Root),
  #[error("roots give different field homomorphisms")]
  InconsistentFrobenius,
  #[error("torus action check fails for root {root:?} at t = {t}")]
  TorusMismatch { root: Root, t: u16 },
  #[error("extension disagrees with the input map at chamber {0}")]
  Disagreement(ChamberId),
  #[error(transparent)]
  Hom(#[from] HomError),
  #[error(transparent)]
  Flag(#[from] FlagError),
  #[error(transparent)]
  Building(#[from] BuildingError),
}

/// A chamber map defined on a set of chambers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialChamberMap {
  pairs: BTreeMap<ChamberId, ChamberId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialChamberMapJson {
  pub source: String,
  pub target: String,
  pub pairs:  Vec<(ChamberId, ChamberId)>,
}

/// Shape of a validated map: the induced permutation of types.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapShape {
  pub type_permutation: Vec<usize>,
  pub vertex_map:       BTreeMap<VertexId, VertexId>,
}

impl PartialChamberMap {
  pub fn new(pairs: impl IntoIterator<Item = (ChamberId, ChamberId)>) -> Self { Self { pairs: pairs.into_iter().collect() } }

  /// Restriction of a total chamber map to `domain`.
  pub fn restrict(total: &[ChamberId], domain: &[ChamberId]) -> Self { Self::new(domain.iter().map(|&c| (c, total[c]))) }

  pub fn get(&self, c: ChamberId) -> Option<ChamberId> { self.pairs.get(&c).copied() }

  pub fn insert(&mut self, c: ChamberId, d: ChamberId) { self.pairs.insert(c, d); }

  pub fn domain(&self) -> Vec<ChamberId> { self.pairs.keys().copied().collect() }

  pub fn len(&self) -> usize { self.pairs.len() }

  pub fn is_empty(&self) -> bool { self.pairs.is_empty() }

  pub fn iter(&self) -> impl Iterator<Item = (ChamberId, ChamberId)> + '_ { self.pairs.iter().map(|(&a, &b)| (a, b)) }

  pub fn to_json(&self, source: &str, target: &str) -> PartialChamberMapJson {
    PartialChamberMapJson { source: source.to_string(), target: target.to_string(), pairs: self.iter().collect() }
  }

  pub fn from_json(json: &PartialChamberMapJson) -> Self { Self::new(json.pairs.iter().copied()) }

  /// Checks injectivity, adjacency and type compatibility, and vertex consistency.
  pub fn validate(&self, src: &BuildingStructure, dst: &BuildingStructure) -> Result<MapShape, ExtendError> {
    if src.group().matrix() != dst.group().matrix() {
      return Err(ExtendError::TypeMismatch);
    }
    let rank = src.rank();
    let mut seen: BTreeMap<ChamberId, ChamberId> = BTreeMap::new();
    for (a, b) in self.iter() {
      if a >= src.chamber_count() {
        return Err(ExtendError::UnknownChamber(a));
      }
      if b >= dst.chamber_count() {
        return Err(ExtendError::UnknownChamber(b));
      }
      if let Some(&prev) = seen.get(&b) {
        return Err(ExtendError::NotInjective { a: prev, b: a, image: b });
      }
      seen.insert(b, a);
    }
    let mut sigma: Vec<Option<usize>> = vec![None; rank];
    for (a, fa) in self.iter() {
      for (s, d) in src.neighbors(a) {
        let Some(fd) = self.get(d) else { continue };
        let Some(t) = dst.adjacency_color(fa, fd) else {
          return Err(ExtendError::NotAdjacencyPreserving { a, b: d });
        };
        if *sigma[s].get_or_insert(t) != t {
          return Err(ExtendError::NotTypeCompatible);
        }
      }
    }
    let mut unused: Vec<usize> = (0..rank).filter(|t| !sigma.contains(&Some(*t))).collect();
    let type_permutation: Vec<usize> = sigma.iter().map(|s| s.unwrap_or_else(|| unused.remove(0))).collect();
    if type_permutation.iter().collect::<BTreeSet<_>>().len() != rank
      || !src.group().matrix().is_diagram_automorphism(&type_permutation)
    {
      return Err(ExtendError::NotTypeCompatible);
    }
    let mut vertex_map = BTreeMap::new();
    for (a, fa) in self.iter() {
      for t in 0..rank {
        let v = src.chamber_vertices(a)[t];
        let image = dst.chamber_vertices(fa)[type_permutation[t]];
        if *vertex_map.entry(v).or_insert(image) != image {
          return Err(ExtendError::NotVertexConsistent(v));
        }
      }
    }
    Ok(MapShape { type_permutation, vertex_map })
  }
}

/// Interval-closure propagation of a partial chamber map.
struct Propagator<'a> {
  src:   &'a BuildingStructure,
  dst:   &'a BuildingStructure,
  sigma: Vec<WeylElement>,
  image: Vec<Option<ChamberId>>,
  used:  Vec<bool>,
  known: Vec<ChamberId>,
}

impl<'a> Propagator<'a> {
  fn new(src: &'a BuildingStructure, dst: &'a BuildingStructure, type_permutation: &[usize]) -> Self {
    Self {
      src,
      dst,
      sigma: src.group().diagram_action(type_permutation),
      image: vec![None; src.chamber_count()],
      used: vec![false; dst.chamber_count()],
      known: Vec::new(),
    }
  }

  fn assign(&mut self, c: ChamberId, d: ChamberId, pending: &mut Vec<ChamberId>) -> Result<(), ExtendError> {
    match self.image[c] {
      Some(prev) if prev == d => Ok(()),
      Some(prev) => Err(ExtendError::Inconsistent(format!("chamber {c} is forced to both {prev} and {d}"))),
      None => {
        if self.used[d] {
          return Err(ExtendError::Inconsistent(format!("chamber {c} is forced onto {d}, which is already an image")));
        }
        self.image[c] = Some(d);
        self.used[d] = true;
        pending.push(c);
        Ok(())
      }
    }
  }

  /// Propagates from the given seeds until no new chamber is forced.
  fn run(&mut self, seeds: impl IntoIterator<Item = (ChamberId, ChamberId)>) -> Result<(), ExtendError> {
    let mut pending = Vec::new();
    for (c, d) in seeds {
      self.assign(c, d, &mut pending)?;
    }
    let g = self.src.group().clone();
    let mut cursor = 0;
    let mut queue: Vec<ChamberId> = pending;
    while cursor < queue.len() {
      let y = queue[cursor];
      cursor += 1;
      let fy = self.image[y].unwrap();
      let known = std::mem::take(&mut self.known);
      for &x in &known {
        let fx = self.image[x].unwrap();
        let w = self.src.delta(x, y);
        if self.dst.delta(fx, fy) != self.sigma[w.index()] {
          return Err(ExtendError::Inconsistent(format!(
            "Weyl distance of images of {x} and {y} is not the transported distance"
          )));
        }
        let len = g.length(w);
        if len < 2 {
          continue;
        }
        for d in self.src.chamber_ids() {
          if self.image[d].is_some() {
            continue;
          }
          let a = self.src.delta(x, d);
          if g.length(a) + g.length(self.src.delta(d, y)) != len {
            continue;
          }
          let target = self
            .dst
            .interval_chamber(fx, fy, self.sigma[a.index()])
            .ok_or_else(|| ExtendError::Inconsistent(format!("no chamber between {fx} and {fy} at the distance of {d}")))?;
          let mut fresh = Vec::new();
          self.assign(d, target, &mut fresh)?;
          queue.extend(fresh);
        }
      }
      self.known = known;
      self.known.push(y);
    }
    Ok(())
  }

  fn is_complete(&self) -> bool { self.image.iter().all(|x| x.is_some()) }

  fn reached(&self) -> usize { self.image.iter().filter(|x| x.is_some()).count() }

  fn into_map(self) -> Option<ChamberPermutation> { self.image.into_iter().collect() }
}

/// Propagates `seed` through the source building. Returns the total map when every
/// chamber is forced, and an error on any contradiction.
pub fn propagate(
  src: &BuildingStructure,
  dst: &BuildingStructure,
  seed: &PartialChamberMap,
) -> Result<Result<ChamberPermutation, usize>, ExtendError> {
  let shape = seed.validate(src, dst)?;
  let mut p = Propagator::new(src, dst, &shape.type_permutation);
  p.run(seed.iter())?;
  if p.is_complete() {
    Ok(Ok(p.into_map().unwrap()))
  } else {
    Ok(Err(p.reached()))
  }
}

/// `E_1(C) ∪ {C'}`, sorted.
pub fn rigidity_seed(b: &BuildingStructure, c: ChamberId, c_opp: ChamberId) -> Result<Vec<ChamberId>, ExtendError> {
  if !b.opposite(c, c_opp)? {
    return Err(ExtendError::NotOpposite(c, c_opp));
  }
  let mut seed = b.e_neighborhood(c, 1)?;
  seed.push(c_opp);
  seed.sort_unstable();
  Ok(seed)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RigidityOutcome {
  /// The maps differ on `E_1(C) ∪ {C'}`.
  Vacuous,
  /// Agreement on the seed forces both maps to coincide everywhere.
  Determined,
  /// The maps agree on the seed but the seed does not force them.
  NotDetermined { witness: Option<ChamberId> },
}

impl RigidityOutcome {
  pub fn holds(&self) -> bool { !matches!(self, RigidityOutcome::NotDetermined { .. }) }
}

/// Whether agreement of `psi1`, `psi2` on `E_1(C) ∪ {C'}` implies agreement everywhere.
pub fn rigidity_unique(
  b: &BuildingStructure,
  psi1: &[ChamberId],
  psi2: &[ChamberId],
  c: ChamberId,
  c_opp: ChamberId,
) -> Result<RigidityOutcome, ExtendError> {
  let seed = rigidity_seed(b, c, c_opp)?;
  if seed.iter().any(|&x| psi1[x] != psi2[x]) {
    return Ok(RigidityOutcome::Vacuous);
  }
  let map = PartialChamberMap::restrict(psi1, &seed);
  match propagate(b, b, &map)? {
    Ok(total) => {
      let witness = b.chamber_ids().find(|&x| total[x] != psi1[x] || total[x] != psi2[x]);
      Ok(match witness {
        None => RigidityOutcome::Determined,
        Some(w) => RigidityOutcome::NotDetermined { witness: Some(w) },
      })
    }
    Err(_) => Ok(RigidityOutcome::NotDetermined { witness: None }),
  }
}

fn check_total_isomorphism(
  src: &BuildingStructure,
  dst: &BuildingStructure,
  map: &[ChamberId],
  type_permutation: &[usize],
) -> Result<(), ExtendError> {
  let mut used = vec![false; dst.chamber_count()];
  for c in src.chamber_ids() {
    if std::mem::replace(&mut used[map[c]], true) {
      return Err(ExtendError::NotInjective { a: c, b: c, image: map[c] });
    }
    for (s, d) in src.neighbors(c) {
      if dst.adjacency_color(map[c], map[d]) != Some(type_permutation[s]) {
        return Err(ExtendError::NotAdjacencyPreserving { a: c, b: d });
      }
    }
  }
  Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct E2Extension {
  /// First extension found; equal to every other one when `extensions.len() == 1`.
  pub map:              ChamberPermutation,
  /// All isomorphisms extending the map, sorted.
  pub extensions:       Vec<ChamberPermutation>,
  pub type_permutation: Vec<usize>,
  /// Whether closure from `E_2(C)` alone reached every chamber.
  pub closure_complete: bool,
  /// Candidates for the image of the opposite chamber that were propagated.
  pub candidates_tried: usize,
  pub opposite:         ChamberId,
  /// Rigidity of `map` from `E_1(C) ∪ {C'}`.
  pub rigidity:         RigidityOutcome,
}

impl E2Extension {
  pub fn is_unique(&self) -> bool { self.extensions.len() == 1 }
}

/// Extends an adjacency-preserving bijection `E_2(C) -> E_2(φC)` to an isomorphism.
///
/// When closure from `E_2(C)` stalls, every image of one chamber opposite `C` that is
/// opposite `φC` is tried, and every complete consistent propagation is returned. For
/// `A_3` the highest root group fixes `E_2(C)` pointwise, so there are `q` of them.
pub fn extend_from_e2(
  src: &BuildingStructure,
  dst: &BuildingStructure,
  c: ChamberId,
  phi: &PartialChamberMap,
) -> Result<E2Extension, ExtendError> {
  let rank = src.rank();
  if rank < 3 {
    return Err(ExtendError::RankTooSmall(rank));
  }
  if !src.group().matrix().is_irreducible() {
    return Err(ExtendError::Reducible);
  }
  let shape = phi.validate(src, dst)?;
  let fc = phi.get(c).ok_or(ExtendError::NotE2Domain(c))?;
  let e2 = src.e_neighborhood(c, 2)?;
  let target_e2 = dst.e_neighborhood(fc, 2)?;
  let mut images: Vec<ChamberId> = phi.iter().map(|(_, b)| b).collect();
  images.sort_unstable();
  if phi.domain() != e2 || images != target_e2 {
    return Err(ExtendError::NotE2Domain(c));
  }

  let opposite = src.opposite_chambers(c)[0];
  let mut p = Propagator::new(src, dst, &shape.type_permutation);
  p.run(phi.iter())?;
  let (mut extensions, closure_complete, candidates_tried) = if p.is_complete() {
    (vec![p.into_map().unwrap()], true, 0)
  } else {
    let candidates = dst.opposite_chambers(fc);
    let mut found = Vec::new();
    for &cand in &candidates {
      let mut trial = Propagator::new(src, dst, &shape.type_permutation);
      if trial.run(phi.iter().chain([(opposite, cand)])).is_ok() && trial.is_complete() {
        found.push(trial.into_map().unwrap());
      }
    }
    if found.is_empty() {
      return Err(ExtendError::Inconsistent("no image of the opposite chamber extends the map".into()));
    }
    (found, false, candidates.len())
  };
  for m in &extensions {
    check_total_isomorphism(src, dst, m, &shape.type_permutation)?;
  }
  let map = extensions[0].clone();
  extensions.sort();
  let rigidity = rigidity_unique_between(src, dst, &map, c, opposite)?;
  Ok(E2Extension {
    map,
    extensions,
    type_permutation: shape.type_permutation,
    closure_complete,
    candidates_tried,
    opposite,
    rigidity,
  })
}

/// Rigidity check for a map between two buildings: propagation from `E_1(C) ∪ {C'}`
/// must reproduce the map.
fn rigidity_unique_between(
  src: &BuildingStructure,
  dst: &BuildingStructure,
  map: &[ChamberId],
  c: ChamberId,
  c_opp: ChamberId,
) -> Result<RigidityOutcome, ExtendError> {
  let seed = rigidity_seed(src, c, c_opp)?;
  let restricted = PartialChamberMap::restrict(map, &seed);
  Ok(match propagate(src, dst, &restricted)? {
    Ok(total) if total == map => RigidityOutcome::Determined,
    Ok(total) => RigidityOutcome::NotDetermined { witness: src.chamber_ids().find(|&x| total[x] != map[x]) },
    Err(_) => RigidityOutcome::NotDetermined { witness: None },
  })
}

/// Coordinate transport `U_β -> U'_{f(β)}` for one root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootTransport {
  pub generator:   usize,
  pub source_root: Root,
  pub target_root: Root,
  /// `table[c]` is the target coordinate of the image of `x_β(c)`.
  pub table:       Vec<FqElement>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootGroupTransport {
  pub source_basis:     FrameBasis,
  pub target_basis:     FrameBasis,
  pub type_permutation: Vec<usize>,
  /// For each generator `k`: the roots `(k+1, k)` and `(k, k+1)`, in that order.
  pub roots:            Vec<RootTransport>,
}

impl RootGroupTransport {
  pub fn get(&self, source_root: Root) -> Option<&RootTransport> {
    self.roots.iter().find(|r| r.source_root == source_root)
  }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldRecovery {
  pub hom:           FieldHom,
  /// `λ = τ(1)` per source root.
  pub scales:        Vec<(Root, FqElement)>,
  pub torus_checks:  usize,
}

/// Finds the unique element of `candidates` agreeing with `φ g φ^-1` on `φ(U_1)`.
pub fn transport_root_element(
  src: &FlagBuilding,
  dst: &FlagBuilding,
  phi: &PartialChamberMap,
  g: &Matrix,
  u1: &[ChamberId],
  candidates: &RootGroup,
) -> Result<RootGroupElement, ExtendError> {
  let perm = src.group_action(g)?;
  let mut pairs = Vec::with_capacity(u1.len());
  for &x in u1 {
    let fx = phi.get(x).ok_or(ExtendError::OutOfDomain(x))?;
    let fgx = phi.get(perm[x]).ok_or(ExtendError::OutOfDomain(x))?;
    pairs.push((fx, fgx));
  }
  let mut hits = Vec::new();
  for u in &candidates.elements {
    let target = dst.group_action(&u.matrix)?;
    if pairs.iter().all(|&(a, b)| target[a] == b) {
      hits.push(u.clone());
    }
  }
  let root = (candidates.i, candidates.j);
  match hits.len() {
    1 => Ok(hits.pop().unwrap()),
    0 => Err(ExtendError::TransportFailure { root, c: u16::MAX }),
    count => Err(ExtendError::TransportAmbiguous { root, c: u16::MAX, count }),
  }
}

/// Recovers the field homomorphism from the coordinate tables: each table must be
/// `c -> λ h(c)` for a single Frobenius power `h`. The torus elements `h_α(t)` built from
/// the transported root groups must act on the image of `U_α` by `t^2`.
pub fn recover_field_hom(transport: &RootGroupTransport, f: &FqField) -> Result<FieldRecovery, ExtendError> {
  let mut hom: Option<FieldHom> = None;
  let mut scales = Vec::new();
  for r in &transport.roots {
    let lambda = r.table.get(1).copied().filter(|x| !x.is_zero()).ok_or(ExtendError::NotSemilinear(r.source_root))?;
    let li = f.inv(lambda).unwrap();
    let normalized: Vec<FqElement> = r.table.iter().map(|&x| f.mul(li, x)).collect();
    let h = classify_as_field_hom(f, &normalized).map_err(|_| ExtendError::NotSemilinear(r.source_root))?;
    if *hom.get_or_insert(h) != h {
      return Err(ExtendError::InconsistentFrobenius);
    }
    scales.push((r.source_root, lambda));
  }
  let hom = hom.ok_or(ExtendError::InconsistentFrobenius)?;

  let n = transport.source_basis.matrix.n();
  let mut torus_checks = 0;
  for k in 0..n - 1 {
    let (Some(pos), Some(neg)) = (transport.get((k + 1, k)), transport.get((k, k + 1))) else {
      return Err(ExtendError::InconsistentFrobenius);
    };
    let xp = |c: FqElement| Matrix::elementary(n, pos.target_root.0, pos.target_root.1, pos.table[c.index()]);
    let xn = |c: FqElement| Matrix::elementary(n, neg.target_root.0, neg.target_root.1, neg.table[c.index()]);
    let w = |t: FqElement| xp(t).mul(&xn(f.neg(f.inv(t).unwrap())), f).mul(&xp(t), f);
    let w1_inv = w(f.one()).inverse(f).unwrap();
    for t in f.units() {
      let h = w(t).mul(&w1_inv, f);
      let h_inv = h.inverse(f).unwrap();
      for c in f.elements() {
        torus_checks += 1;
        if h.mul(&xp(c), f).mul(&h_inv, f) != xp(f.mul(f.mul(t, t), c)) {
          return Err(ExtendError::TorusMismatch { root: pos.source_root, t: t.0 });
        }
      }
    }
  }
  Ok(FieldRecovery { hom, scales, torus_checks })
}

/// Global homomorphism from the transported simple root groups, verified against the
/// Steinberg and rank-one relations.
pub fn assemble_homomorphism(
  transport: &RootGroupTransport,
  hom: FieldHom,
  f: &FqField,
) -> Result<GlobalHom, ExtendError> {
  let n = transport.source_basis.matrix.n();
  let p2 = &transport.target_basis.matrix;
  let p2_inv = &transport.target_basis.inverse;
  let images = |r: &RootTransport| -> Vec<Matrix> {
    r.table
      .iter()
      .map(|&c| p2.mul(&Matrix::elementary(n, r.target_root.0, r.target_root.1, c), f).mul(p2_inv, f))
      .collect()
  };
  let mut upper = Vec::new();
  let mut lower = Vec::new();
  for k in 0..n - 1 {
    let (Some(pos), Some(neg)) = (transport.get((k + 1, k)), transport.get((k, k + 1))) else {
      return Err(ExtendError::InconsistentFrobenius);
    };
    let lambda = pos.table[1];
    if f.elements().any(|c| pos.table[c.index()] != f.mul(lambda, hom.apply(f, c))) {
      return Err(ExtendError::NotSemilinear(pos.source_root));
    }
    lower.push(images(pos));
    upper.push(images(neg));
  }
  let g = GlobalHom::from_simple(transport.source_basis.matrix.clone(), &upper, &lower, f);
  g.verify_relations(f)?;
  Ok(g)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendOptions {
  /// Reduced word of `w_0` for the basic open sets; lexicographically least by default.
  pub word:               Option<Vec<usize>>,
  /// Also check that the image acts Weyl transitively (slow for `n = 4`).
  pub check_transitivity: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTiming {
  pub phase:  String,
  pub micros: u128,
}

#[derive(Clone, Debug)]
pub struct ExtensionResult {
  pub map:              ChamberPermutation,
  pub type_permutation: Vec<usize>,
  pub duality:          bool,
  pub field_hom:        FieldHom,
  pub homomorphism:     GlobalHom,
  pub transport:        RootGroupTransport,
  pub apartment:        usize,
  pub base:             ChamberId,
  pub opposite:         ChamberId,
  pub word:             Vec<usize>,
  pub weyl_transitive:  Option<bool>,
  pub timings:          Vec<PhaseTiming>,
}

/// An apartment inside `u` with opposite chambers `C`, `D` whose `E_1` lie in `u`.
pub fn locate_apartment(b: &BuildingStructure, u: &[ChamberId]) -> Option<(usize, ChamberId, ChamberId)> {
  let mut inside = vec![false; b.chamber_count()];
  for &c in u {
    inside[c] = true;
  }
  let w0 = b.group().longest_element();
  let e1_inside = |c: ChamberId| inside[c] && b.neighbors(c).all(|(_, d)| inside[d]);
  for (a, ap) in b.apartments().iter().enumerate() {
    if !ap.chambers().iter().all(|&c| inside[c]) {
      continue;
    }
    for &c in ap.chambers() {
      let d = *ap.chambers().iter().find(|&&d| b.delta(c, d) == w0).unwrap();
      if e1_inside(c) && e1_inside(d) {
        return Some((a, c, d));
      }
    }
  }
  None
}

/// The chamber map of a flag-building plant restricted to `A ∪ E_1(C) ∪ E_1(D)` for the
/// first apartment `A` and its first chamber `C`. Returns the domain.
pub fn standard_domain(b: &BuildingStructure, apartment: usize) -> Vec<ChamberId> {
  let ap = &b.apartments()[apartment];
  let c = ap.chambers()[0];
  let w0 = b.group().longest_element();
  let d = *ap.chambers().iter().find(|&&d| b.delta(c, d) == w0).unwrap();
  let mut set: BTreeSet<ChamberId> = ap.chambers().iter().copied().collect();
  set.extend(b.e_neighborhood(c, 1).unwrap());
  set.extend(b.e_neighborhood(d, 1).unwrap());
  set.into_iter().collect()
}

/// Extends an injective chamber map defined on a domain containing an apartment and the
/// `E_1` neighborhoods of two of its opposite chambers.
pub fn extend_chamber_map(
  src: &FlagBuilding,
  dst: &FlagBuilding,
  phi: &PartialChamberMap,
  options: &ExtendOptions,
) -> Result<ExtensionResult, ExtendError> {
  let mut timings = Vec::new();
  let mut clock = Instant::now();
  let mut lap = |name: &str, timings: &mut Vec<PhaseTiming>| {
    timings.push(PhaseTiming { phase: name.to_string(), micros: clock.elapsed().as_micros() });
    clock = Instant::now();
  };
  let (sb, tb) = (src.building(), dst.building());
  let f = src.field();
  if src.n() != dst.n() {
    return Err(ExtendError::TypeMismatch);
  }
  if src.q() != dst.q() {
    return Err(ExtendError::FieldMismatch);
  }
  let isolated = sb.group().matrix().isolated_nodes();
  if !isolated.is_empty() {
    return Err(ExtendError::IsolatedNode(isolated));
  }
  let shape = phi.validate(sb, tb)?;
  let domain = phi.domain();
  if !matches!(is_gallery_connected(sb, &domain)?, Connectivity::Connected { .. }) {
    return Err(ExtendError::NotGalleryConnected);
  }
  lap("validate", &mut timings);

  let (apartment, c, d) = locate_apartment(sb, &domain).ok_or(ExtendError::NoApartmentInDomain)?;
  let source_basis = src.frame_basis(apartment, c)?;
  let image_chambers: Vec<ChamberId> = sb.apartments()[apartment].chambers().iter().map(|&x| phi.get(x).unwrap()).collect();
  let target_apartment = tb.apartment_by_chambers(&image_chambers).ok_or(ExtendError::ApartmentImage(apartment))?;
  let target_basis = dst.frame_basis(target_apartment, phi.get(c).unwrap())?;
  let target_roots = dst.roots_of_apartment(&target_basis);
  lap("locate", &mut timings);

  let n = src.n();
  let word = options.word.clone().unwrap_or_else(|| default_w0_word(n));
  let full: Vec<Vec<FqElement>> = vec![f.elements().collect(); n - 1];
  let opposite_d = src.schubert_set(c, d, &full, &word)?.chambers;
  let opposite_c = src.schubert_set(d, c, &full, &word)?.chambers;
  let mut in_domain = vec![false; sb.chamber_count()];
  for &x in &domain {
    in_domain[x] = true;
  }
  let sigma = &shape.type_permutation;
  let mut roots = Vec::new();
  for k in 0..n - 1 {
    for (beta, schubert) in [((k + 1, k), &opposite_d), ((k, k + 1), &opposite_c)] {
      let chambers = src.root_chambers(&source_basis, beta.0, beta.1);
      let mut image: Vec<ChamberId> = chambers.iter().map(|&x| phi.get(x).unwrap()).collect();
      image.sort_unstable();
      let &(ti, tj, _) = target_roots.iter().find(|(_, _, r)| *r == image).ok_or(ExtendError::RootImage)?;
      let expected = if beta.0 > beta.1 { (sigma[k] + 1, sigma[k]) } else { (sigma[k], sigma[k] + 1) };
      if (ti, tj) != expected {
        return Err(ExtendError::Labeling(format!("root {beta:?} maps to {:?}, expected {expected:?}", (ti, tj))));
      }
      let candidates = dst.root_group_at(target_basis.clone(), ti, tj);
      let mut table = Vec::with_capacity(f.q());
      for cval in f.elements() {
        let g = src.root_element(&source_basis, beta.0, beta.1, cval);
        let perm = src.group_action(&g.matrix)?;
        let u1: Vec<ChamberId> = schubert.iter().copied().filter(|&x| in_domain[x] && in_domain[perm[x]]).collect();
        let hit = transport_root_element(src, dst, phi, &g.matrix, &u1, &candidates).map_err(|e| match e {
          ExtendError::TransportFailure { root, .. } => ExtendError::TransportFailure { root, c: cval.0 },
          ExtendError::TransportAmbiguous { root, count, .. } => ExtendError::TransportAmbiguous { root, c: cval.0, count },
          other => other,
        })?;
        table.push(hit.c);
      }
      roots.push(RootTransport { generator: k, source_root: beta, target_root: (ti, tj), table });
    }
  }
  let transport = RootGroupTransport {
    source_basis,
    target_basis,
    type_permutation: shape.type_permutation.clone(),
    roots,
  };
  lap("transport", &mut timings);

  let recovery = recover_field_hom(&transport, f)?;
  lap("field", &mut timings);
  let homomorphism = assemble_homomorphism(&transport, recovery.hom, f)?;
  lap("assemble", &mut timings);

  let generators = sl_generators(n, f);
  let mut source_perms = Vec::with_capacity(generators.len());
  let mut target_perms = Vec::with_capacity(generators.len());
  for g in &generators {
    source_perms.push(src.group_action(g)?);
    target_perms.push(dst.group_action(&homomorphism.apply(g, f)?)?);
  }
  let map = induce_equivariant(sb.chamber_count(), c, phi.get(c).unwrap(), &source_perms, &target_perms)?;
  lap("induce", &mut timings);

  if let Some(x) = domain.iter().copied().find(|&x| map[x] != phi.get(x).unwrap()) {
    return Err(ExtendError::Disagreement(x));
  }
  let weyl_transitive = options.check_transitivity.then(|| dst.weyl_transitivity(&target_perms).is_ok());
  lap("verify", &mut timings);

  Ok(ExtensionResult {
    map,
    duality: shape.type_permutation.iter().enumerate().any(|(i, &t)| i != t),
    type_permutation: shape.type_permutation,
    field_hom: recovery.hom,
    homomorphism,
    transport,
    apartment,
    base: c,
    opposite: d,
    word,
    weyl_transitive,
    timings,
  })
}

/// `Φ(gX) = ψ(g) Φ(X)`, spread from `Φ(C) = image` along the generator permutations.
fn induce_equivariant(
  chambers: usize,
  c: ChamberId,
  image: ChamberId,
  source_perms: &[ChamberPermutation],
  target_perms: &[ChamberPermutation],
) -> Result<ChamberPermutation, ExtendError> {
  let mut map: Vec<Option<ChamberId>> = vec![None; chambers];
  map[c] = Some(image);
  let mut queue = vec![c];
  while let Some(x) = queue.pop() {
    let fx = map[x].unwrap();
    for (sp, tp) in source_perms.iter().zip(target_perms) {
      let y = sp[x];
      let fy = tp[fx];
      match map[y] {
        None => {
          map[y] = Some(fy);
          queue.push(y);
        }
        Some(prev) if prev != fy => {
          return Err(ExtendError::Inconsistent(format!("chamber {y} is reached with images {prev} and {fy}")));
        }
        _ => {}
      }
    }
  }
  let reached = map.iter().filter(|m| m.is_some()).count();
  map.into_iter().collect::<Option<Vec<_>>>().ok_or(ExtendError::Incomplete { reached, total: chambers })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionReport {
  pub restriction:  bool,
  pub injective:    bool,
  pub chamber_map:  bool,
  pub uniqueness:   bool,
  pub witness:      Option<String>,
}

impl ExtensionReport {
  pub fn passed(&self) -> bool { self.restriction && self.injective && self.chamber_map && self.uniqueness }
}

/// Checks a total map against a partial one. Uniqueness is checked by propagating the
/// partial map alone, from `E_1(C) ∪ {C'}` inside its domain.
pub fn verify_extension(
  src: &BuildingStructure,
  dst: &BuildingStructure,
  phi: &PartialChamberMap,
  total: &[ChamberId],
) -> ExtensionReport {
  let mut witness = None;
  let restriction = match phi.iter().find(|&(a, b)| total.get(a) != Some(&b)) {
    Some((a, _)) => {
      witness.get_or_insert(format!("restriction differs at chamber {a}"));
      false
    }
    None => total.len() == src.chamber_count(),
  };
  let mut seen = vec![false; dst.chamber_count()];
  let mut injective = true;
  for (c, &d) in total.iter().enumerate() {
    if d >= dst.chamber_count() || std::mem::replace(&mut seen[d], true) {
      injective = false;
      witness.get_or_insert(format!("chamber {c} maps onto a repeated or invalid image {d}"));
      break;
    }
  }
  let chamber_map = injective
    && match PartialChamberMap::new(total.iter().copied().enumerate()).validate(src, dst) {
      Ok(_) => true,
      Err(e) => {
        witness.get_or_insert(format!("not a chamber map: {e}"));
        false
      }
    };
  let uniqueness = injective && {
    let domain = phi.domain();
    let mut found = None;
    'search: for &c in &domain {
      if !src.neighbors(c).all(|(_, d)| phi.get(d).is_some()) {
        continue;
      }
      for c_opp in src.opposite_chambers(c) {
        if phi.get(c_opp).is_some() {
          found = Some((c, c_opp));
          break 'search;
        }
      }
    }
    match found {
      None => {
        witness.get_or_insert("domain holds no E1(C) together with a chamber opposite C".into());
        false
      }
      Some((c, c_opp)) => {
        let seed = rigidity_seed(src, c, c_opp).unwrap();
        let restricted = PartialChamberMap::new(seed.iter().map(|&x| (x, phi.get(x).unwrap())));
        match propagate(src, dst, &restricted) {
          Ok(Ok(other)) if other == total => true,
          Ok(Ok(other)) => {
            let x = src.chamber_ids().find(|&x| other[x] != total[x]).unwrap();
            witness.get_or_insert(format!("propagation from E1({c}) and {c_opp} gives a different image at chamber {x}"));
            false
          }
          Ok(Err(reached)) => {
            witness.get_or_insert(format!("propagation reached only {reached} chambers"));
            false
          }
          Err(e) => {
            witness.get_or_insert(format!("propagation failed: {e}"));
            false
          }
        }
      }
    }
  };
  ExtensionReport { restriction, injective, chamber_map, uniqueness, witness }
}

/// Greedily removes chambers from `start` while propagation of `total` restricted to the
/// remainder still reaches every chamber. Returns the final domain.
pub fn probe_min_domain(b: &BuildingStructure, total: &[ChamberId], start: &[ChamberId]) -> Vec<ChamberId> {
  let mut domain: Vec<ChamberId> = start.to_vec();
  let mut i = 0;
  while i < domain.len() {
    let mut trial = domain.clone();
    trial.remove(i);
    let restricted = PartialChamberMap::restrict(total, &trial);
    let ok = !trial.is_empty() && matches!(propagate(b, b, &restricted), Ok(Ok(ref m)) if m == total);
    if ok {
      domain = trial;
    } else {
      i += 1;
    }
  }
  domain
}

#[cfg(test)]
mod tests {
  use super::*;
  use crate::flag::PlantMap;

  #[test]
  fn identity_propagates_from_rigidity_seed() {
    for (n, q) in [(3, 2), (3, 3), (4, 2)] {
      let fb = FlagBuilding::new(n, q).unwrap();
      let b = fb.building();
      let id: Vec<ChamberId> = b.chamber_ids().collect();
      let c_opp = b.opposite_chambers(0)[0];
      assert_eq!(rigidity_unique(b, &id, &id, 0, c_opp).unwrap(), RigidityOutcome::Determined, "({n},{q})");
    }
  }

  #[test]
  fn non_opposite_pair_rejected() {
    let fb = FlagBuilding::new(3, 2).unwrap();
    let id: Vec<ChamberId> = fb.building().chamber_ids().collect();
    assert_eq!(rigidity_unique(fb.building(), &id, &id, 0, 0), Err(ExtendError::NotOpposite(0, 0)));
  }

  #[test]
  fn e2_identity_and_rank_gate() {
    let fb = FlagBuilding::new(4, 2).unwrap();
    let b = fb.building();
    let id: Vec<ChamberId> = b.chamber_ids().collect();
    let phi = PartialChamberMap::restrict(&id, &b.e_neighborhood(0, 2).unwrap());
    let ext = extend_from_e2(b, b, 0, &phi).unwrap();
    assert!(ext.extensions.contains(&id));
    assert_eq!(ext.extensions.len(), 2);
    assert!(!ext.closure_complete);
    let mut corrupt = phi.clone();
    let (x, y) = (b.neighbors(0).next().unwrap().1, b.e_neighborhood(0, 2).unwrap()[20]);
    corrupt.insert(x, y);
    corrupt.insert(y, x);
    assert!(extend_from_e2(b, b, 0, &corrupt).is_err());
    let small = FlagBuilding::new(3, 2).unwrap();
    let sid: Vec<ChamberId> = small.building().chamber_ids().collect();
    let sphi = PartialChamberMap::restrict(&sid, &small.building().e_neighborhood(0, 2).unwrap());
    assert_eq!(extend_from_e2(small.building(), small.building(), 0, &sphi).unwrap_err(), ExtendError::RankTooSmall(2));
  }

  #[test]
  fn pipeline_identity_and_frobenius() {
    let fb = FlagBuilding::new(3, 4).unwrap();
    let b = fb.building();
    let domain = standard_domain(b, 0);
    let plant = PlantMap { matrix: Matrix::identity(3), frobenius: 1, duality: false };
    let total = fb.plant_action(&plant).unwrap();
    let phi = PartialChamberMap::restrict(&total, &domain);
    let result = extend_chamber_map(&fb, &fb, &phi, &ExtendOptions::default()).unwrap();
    assert_eq!(result.map, total);
    assert_eq!(result.field_hom.exponent, 1);
    assert!(!result.duality);
    assert!(verify_extension(b, b, &phi, &result.map).passed());
  }

  #[test]
  fn pipeline_rejects_isolated_node() {
    let fb = FlagBuilding::new(2, 3).unwrap();
    let id: Vec<ChamberId> = fb.building().chamber_ids().collect();
    let phi = PartialChamberMap::restrict(&id, &id);
    assert!(matches!(extend_chamber_map(&fb, &fb, &phi, &ExtendOptions::default()), Err(ExtendError::IsolatedNode(_))));
  }
}
