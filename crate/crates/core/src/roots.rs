//! Frame coordinates, root groups, the Moufang check and Schubert sets.
//!
//! In a frame basis `v_0, .., v_{n-1}` (ordered by a base chamber) the chambers of the
//! apartment are the orderings of the frame lines, and the root `α_ij` is the set of
//! orderings in which line `i` precedes line `j`. Its root group is
//! `{ P (I + c E_ij) P^-1 : c ∈ F_q }`, which sends `v_j` to `v_j + c v_i`.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::{
  building::{ChamberId, VertexId},
  field::FqElement,
  flag::{ChamberPermutation, FlagBuilding, FlagError},
  matrix::Matrix,
};

/// Frame lines of an apartment ordered by a base chamber, with the basis matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameBasis {
  pub apartment: usize,
  pub base:      ChamberId,
  /// Point vertices in the order they appear in the base chamber.
  pub lines:     Vec<VertexId>,
  /// Column `k` is the normalized vector of `lines[k]`.
  pub matrix:    Matrix,
  pub inverse:   Matrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootGroupElement {
  pub i:      usize,
  pub j:      usize,
  pub c:      FqElement,
  pub matrix: Matrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusElement {
  pub diagonal: Vec<FqElement>,
  pub matrix:   Matrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootGroup {
  pub basis:    FrameBasis,
  pub i:        usize,
  pub j:        usize,
  /// Indexed by coordinate; entry 0 is the identity.
  pub elements: Vec<RootGroupElement>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoufangReport {
  pub apartment:          usize,
  pub root:               Vec<ChamberId>,
  pub q:                  usize,
  pub containing:         Vec<usize>,
  pub orbit:              Vec<usize>,
  pub count_ok:           bool,
  pub fixes_root:         bool,
  pub stabilizer_trivial: bool,
  pub simply_transitive:  bool,
  pub witness:            Option<String>,
}

impl MoufangReport {
  pub fn passed(&self) -> bool { self.count_ok && self.fixes_root && self.stabilizer_trivial && self.simply_transitive }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchubertSet {
  pub base:      ChamberId,
  pub opposite:  ChamberId,
  pub word:      Vec<usize>,
  pub basis:     FrameBasis,
  /// Root `(i, j)` used at each position of the word.
  pub roots:     Vec<(usize, usize)>,
  /// Sorted chambers of the region.
  pub chambers:  Vec<ChamberId>,
  pub products:  usize,
  pub injective: bool,
  pub collision: Option<(Vec<FqElement>, Vec<FqElement>)>,
}

/// Roots crossed by the minimal gallery from the base chamber (identity ordering) to
/// its opposite along `word`; the root at each step contains the far chamber.
pub fn gallery_roots(n: usize, word: &[usize]) -> Vec<(usize, usize)> {
  let mut order: Vec<usize> = (0..n).collect();
  word
    .iter()
    .map(|&s| {
      let (a, b) = (order[s], order[s + 1]);
      order.swap(s, s + 1);
      (b, a)
    })
    .collect()
}

impl FlagBuilding {
  pub fn frame_basis(&self, apartment: usize, base: ChamberId) -> Result<FrameBasis, FlagError> {
    let b = self.building();
    let ap = b.apartments().get(apartment).ok_or(FlagError::NotInApartment { chamber: base, apartment })?;
    if !ap.contains(base) {
      return Err(FlagError::NotInApartment { chamber: base, apartment });
    }
    let n = self.n();
    let f = self.field();
    let mut remaining = self.frames()[apartment].clone();
    let mut lines = Vec::with_capacity(n);
    for &v in b.chamber_vertices(base) {
      let pos = remaining.iter().position(|&p| self.subspace(v).contains(self.subspace(p), f)).unwrap();
      lines.push(remaining.remove(pos));
    }
    lines.push(remaining[0]);
    let matrix = Matrix::from_columns(&lines.iter().map(|&p| self.point_vector(p).to_vec()).collect::<Vec<_>>());
    let inverse = matrix.inverse(f).expect("frame vectors are independent");
    Ok(FrameBasis { apartment, base, lines, matrix, inverse })
  }

  /// The apartment chamber whose flag follows the given ordering of frame lines.
  pub fn chamber_of_order(&self, basis: &FrameBasis, order: &[usize]) -> ChamberId {
    let vectors: Vec<Vec<_>> = order.iter().map(|&k| basis.matrix.column(k)).collect();
    self.chamber_of_vectors(&vectors).unwrap()
  }

  /// Ordering of frame lines for an apartment chamber.
  pub fn order_of_chamber(&self, basis: &FrameBasis, c: ChamberId) -> Option<Vec<usize>> {
    let f = self.field();
    let mut order = Vec::with_capacity(self.n());
    for &v in self.building().chamber_vertices(c) {
      let k = (0..self.n()).find(|k| !order.contains(k) && self.subspace(v).contains(self.subspace(basis.lines[*k]), f))?;
      order.push(k);
    }
    order.push((0..self.n()).find(|k| !order.contains(k))?);
    (self.chamber_of_order(basis, &order) == c).then_some(order)
  }

  /// `α_ij`: apartment chambers where line `i` precedes line `j`, sorted.
  pub fn root_chambers(&self, basis: &FrameBasis, i: usize, j: usize) -> Vec<ChamberId> {
    let mut out: Vec<ChamberId> = (0..self.n())
      .permutations(self.n())
      .filter(|p| p.iter().position(|&x| x == i) < p.iter().position(|&x| x == j))
      .map(|p| self.chamber_of_order(basis, &p))
      .collect();
    out.sort_unstable();
    out
  }

  /// All `n(n-1)` roots of an apartment as `(i, j, chambers)` in a basis at `base`.
  pub fn roots_of_apartment(&self, basis: &FrameBasis) -> Vec<(usize, usize, Vec<ChamberId>)> {
    (0..self.n())
      .permutations(2)
      .map(|p| (p[0], p[1], self.root_chambers(basis, p[0], p[1])))
      .collect()
  }

  pub fn root_element(&self, basis: &FrameBasis, i: usize, j: usize, c: FqElement) -> RootGroupElement {
    let f = self.field();
    let local = Matrix::elementary(self.n(), i, j, c);
    let matrix = basis.matrix.mul(&local, f).mul(&basis.inverse, f);
    RootGroupElement { i, j, c, matrix }
  }

  pub fn torus_element(&self, basis: &FrameBasis, diagonal: &[FqElement]) -> TorusElement {
    let f = self.field();
    let matrix = basis.matrix.mul(&Matrix::diagonal(diagonal), f).mul(&basis.inverse, f);
    TorusElement { diagonal: diagonal.to_vec(), matrix }
  }

  /// The root group of a root given as a chamber set of an apartment.
  pub fn root_group(&self, apartment: usize, root: &[ChamberId]) -> Result<RootGroup, FlagError> {
    let ap = self.building().apartments().get(apartment).ok_or(FlagError::NotARoot(apartment))?;
    let basis = self.frame_basis(apartment, ap.chambers()[0])?;
    let mut key = root.to_vec();
    key.sort_unstable();
    let (i, j, _) =
      self.roots_of_apartment(&basis).into_iter().find(|(_, _, r)| *r == key).ok_or(FlagError::NotARoot(apartment))?;
    Ok(self.root_group_at(basis, i, j))
  }

  pub fn root_group_at(&self, basis: FrameBasis, i: usize, j: usize) -> RootGroup {
    let elements = self.field().elements().map(|c| self.root_element(&basis, i, j, c)).collect();
    RootGroup { basis, i, j, elements }
  }

  /// Whether `perm` fixes every chamber of the root and every chamber on an interior panel.
  pub fn fixes_root(&self, perm: &ChamberPermutation, apartment: usize, root: &[ChamberId]) -> bool {
    let b = self.building();
    let ap = &b.apartments()[apartment];
    root.iter().all(|&x| {
      perm[x] == x
        && (0..b.rank()).all(|s| {
          let members = b.panel_members(x, s);
          let interior = members.iter().any(|&y| y != x && ap.contains(y) && root.contains(&y));
          !interior || members.iter().all(|&y| perm[y] == y)
        })
    })
  }

  pub fn verify_moufang(&self, apartment: usize, root: &[ChamberId]) -> Result<MoufangReport, FlagError> {
    let group = self.root_group(apartment, root)?;
    let b = self.building();
    let containing = b.apartments_containing(root);
    let mut orbit = Vec::new();
    let mut fixes = true;
    let mut stabilizer = 0;
    let mut witness = None;
    let own = b.apartments()[apartment].chambers();
    for u in &group.elements {
      let perm = self.group_action(&u.matrix)?;
      if !self.fixes_root(&perm, apartment, root) {
        fixes = false;
        witness.get_or_insert(format!("root element with coordinate {} moves the root", u.c.index()));
      }
      let image: Vec<ChamberId> = own.iter().map(|&c| perm[c]).collect();
      let idx = b.apartment_by_chambers(&image);
      match idx {
        Some(i) => {
          if i == apartment {
            stabilizer += 1;
          }
          orbit.push(i);
        }
        None => {
          witness.get_or_insert(format!("image under coordinate {} is not an apartment", u.c.index()));
        }
      }
    }
    let q = self.q();
    let mut sorted_orbit = orbit.clone();
    sorted_orbit.sort_unstable();
    sorted_orbit.dedup();
    let count_ok = containing.len() == q;
    let simply_transitive = orbit.len() == q && sorted_orbit.len() == q && sorted_orbit == containing;
    if !count_ok {
      witness.get_or_insert(format!("{} apartments contain the root, expected {q}", containing.len()));
    }
    if !simply_transitive {
      witness.get_or_insert(format!("orbit {orbit:?} differs from containing apartments {containing:?}"));
    }
    Ok(MoufangReport {
      apartment,
      root: root.to_vec(),
      q,
      containing,
      orbit,
      count_ok,
      fixes_root: fixes,
      stabilizer_trivial: stabilizer == 1,
      simply_transitive,
      witness,
    })
  }

  fn schubert_setup(
    &self,
    c: ChamberId,
    c_opp: ChamberId,
    word: &[usize],
  ) -> Result<(FrameBasis, Vec<(usize, usize)>), FlagError> {
    let b = self.building();
    if !b.opposite(c, c_opp)? {
      return Err(FlagError::NotOpposite(c, c_opp));
    }
    let g = b.group();
    if !g.is_reduced(word) || g.from_word(word)? != g.longest_element() {
      return Err(FlagError::Building(crate::building::BuildingError::WordMismatch { word: word.to_vec() }));
    }
    let apartment = b.apartments_containing(&[c, c_opp])[0];
    let basis = self.frame_basis(apartment, c)?;
    Ok((basis, gallery_roots(self.n(), word)))
  }

  fn schubert_from_products(
    &self,
    basis: FrameBasis,
    roots: Vec<(usize, usize)>,
    c: ChamberId,
    c_opp: ChamberId,
    word: &[usize],
    choices: &[Vec<FqElement>],
  ) -> SchubertSet {
    let f = self.field();
    let n = self.n();
    let mut first: BTreeMap<ChamberId, Vec<FqElement>> = BTreeMap::new();
    let mut collision = None;
    let mut products = 0;
    for coords in choices.iter().map(|v| v.iter().copied()).multi_cartesian_product() {
      products += 1;
      let mut local = Matrix::identity(n);
      for (&(i, j), &x) in roots.iter().zip(&coords) {
        local = local.mul(&Matrix::elementary(n, i, j, x), f);
      }
      let frame = basis.matrix.mul(&local, f);
      let vectors: Vec<Vec<FqElement>> = (0..n).map(|k| frame.column(k)).collect();
      let chamber = self.chamber_of_vectors(&vectors).unwrap();
      if let Some(prev) = first.get(&chamber) {
        collision.get_or_insert((prev.clone(), coords.clone()));
      } else {
        first.insert(chamber, coords);
      }
    }
    if choices.is_empty() {
      products = 1;
      first.insert(c, Vec::new());
    }
    SchubertSet {
      base: c,
      opposite: c_opp,
      word: word.to_vec(),
      basis,
      roots,
      chambers: first.into_keys().collect(),
      products,
      injective: collision.is_none(),
      collision,
    }
  }

  /// `{ u_1 u_2 .. u_N C }` where `u_k` runs over the coordinates `n_sets[word[k]]` of the
  /// root group crossed at step `k` of the minimal gallery from `C` to `C'` of type `word`.
  pub fn schubert_set(
    &self,
    c: ChamberId,
    c_opp: ChamberId,
    n_sets: &[Vec<FqElement>],
    word: &[usize],
  ) -> Result<SchubertSet, FlagError> {
    let (basis, roots) = self.schubert_setup(c, c_opp, word)?;
    let f = self.field();
    for s in 0..self.n() - 1 {
      let set = n_sets.get(s).ok_or(FlagError::BadCoordinateSet(s))?;
      if !set.contains(&FqElement::ZERO) || set.iter().any(|&x| !f.contains(x)) {
        return Err(FlagError::BadCoordinateSet(s));
      }
    }
    let choices: Vec<Vec<FqElement>> = word.iter().map(|&s| n_sets[s].clone()).collect();
    Ok(self.schubert_from_products(basis, roots, c, c_opp, word, &choices))
  }

  /// As [`schubert_set`](Self::schubert_set) with explicit root-group elements per position.
  pub fn schubert_set_elements(
    &self,
    c: ChamberId,
    c_opp: ChamberId,
    elements: &[Vec<Matrix>],
    word: &[usize],
  ) -> Result<SchubertSet, FlagError> {
    let (basis, roots) = self.schubert_setup(c, c_opp, word)?;
    if elements.len() != word.len() {
      return Err(FlagError::NotInRootGroup { position: elements.len().min(word.len()) });
    }
    let f = self.field();
    let mut choices = Vec::with_capacity(word.len());
    for (position, (set, &(i, j))) in elements.iter().zip(&roots).enumerate() {
      let mut coords = Vec::with_capacity(set.len());
      for g in set {
        let local = basis.inverse.mul(g, f).mul(&basis.matrix, f);
        let x = local.get(i, j);
        if local != Matrix::elementary(self.n(), i, j, x) {
          return Err(FlagError::NotInRootGroup { position });
        }
        coords.push(x);
      }
      if !coords.contains(&FqElement::ZERO) {
        return Err(FlagError::NotInRootGroup { position });
      }
      choices.push(coords);
    }
    Ok(self.schubert_from_products(basis, roots, c, c_opp, word, &choices))
  }
}

#[cfg(test)]
mod tests {
  use super::*;

  #[test]
  fn root_groups_fix_their_roots() {
    let fb = FlagBuilding::new(3, 4).unwrap();
    let basis = fb.frame_basis(0, fb.building().apartments()[0].chambers()[0]).unwrap();
    for (i, j, root) in fb.roots_of_apartment(&basis) {
      assert_eq!(root.len(), 3);
      let group = fb.root_group(0, &root).unwrap();
      assert_eq!((group.i, group.j), (i, j));
      assert_eq!(group.elements.len(), 4);
      for u in &group.elements {
        let perm = fb.group_action(&u.matrix).unwrap();
        assert!(fb.fixes_root(&perm, 0, &root));
        let square = u.matrix.mul(&u.matrix, fb.field());
        assert!(square.is_identity(), "characteristic 2 root groups have exponent 2");
      }
    }
    assert_eq!(fb.root_group(0, &[0]), Err(FlagError::NotARoot(0)));
  }

  #[test]
  fn order_round_trip() {
    let fb = FlagBuilding::new(4, 2).unwrap();
    let base = fb.building().apartments()[7].chambers()[3];
    let basis = fb.frame_basis(7, base).unwrap();
    assert_eq!(fb.order_of_chamber(&basis, base).unwrap(), vec![0, 1, 2, 3]);
    for &c in fb.building().apartments()[7].chambers() {
      let order = fb.order_of_chamber(&basis, c).unwrap();
      assert_eq!(fb.chamber_of_order(&basis, &order), c);
    }
  }

  #[test]
  fn moufang_fano() {
    let fb = FlagBuilding::new(3, 2).unwrap();
    let basis = fb.frame_basis(3, fb.building().apartments()[3].chambers()[0]).unwrap();
    for (_, _, root) in fb.roots_of_apartment(&basis) {
      let report = fb.verify_moufang(3, &root).unwrap();
      assert!(report.passed(), "{report:?}");
      assert_eq!(report.containing.len(), 2);
    }
  }

  #[test]
  fn schubert_trivial_and_full() {
    let fb = FlagBuilding::new(3, 2).unwrap();
    let b = fb.building();
    let c_opp = b.opposite_chambers(0)[0];
    let zero = vec![vec![FqElement::ZERO]; 2];
    let s = fb.schubert_set(0, c_opp, &zero, &[0, 1, 0]).unwrap();
    assert_eq!(s.chambers, vec![0]);
    let full: Vec<Vec<FqElement>> = vec![fb.field().elements().collect(); 2];
    let s = fb.schubert_set(0, c_opp, &full, &[0, 1, 0]).unwrap();
    assert_eq!(s.chambers.len(), 8);
    assert!(s.injective);
    assert_eq!(s.chambers, b.opposite_chambers(c_opp));
    assert!(matches!(fb.schubert_set(0, 0, &full, &[0, 1, 0]), Err(FlagError::NotOpposite(0, 0))));
    let no_zero = vec![vec![FqElement::ONE]; 2];
    assert!(matches!(fb.schubert_set(0, c_opp, &no_zero, &[0, 1, 0]), Err(FlagError::BadCoordinateSet(0))));
  }

  #[test]
  fn schubert_elements_validate_membership() {
    let fb = FlagBuilding::new(3, 2).unwrap();
    let c_opp = fb.building().opposite_chambers(0)[0];
    let word = [1, 0, 1];
    let (basis, roots) = fb.schubert_setup(0, c_opp, &word).unwrap();
    let sets: Vec<Vec<Matrix>> = roots
      .iter()
      .map(|&(i, j)| fb.field().elements().map(|x| fb.root_element(&basis, i, j, x).matrix).collect())
      .collect();
    let s = fb.schubert_set_elements(0, c_opp, &sets, &word).unwrap();
    assert_eq!(s.chambers.len(), 8);
    let mut wrong = sets.clone();
    wrong[1] = vec![Matrix::identity(3), sets[0][1].clone()];
    assert_eq!(fb.schubert_set_elements(0, c_opp, &wrong, &word), Err(FlagError::NotInRootGroup { position: 1 }));
  }
}
