//! Chamber regions: gallery connectivity and generated subcomplexes.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::building::{BuildingError, BuildingStructure, ChamberId, Simplex};

/// Certificate for gallery connectivity of a chamber set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
  /// Spanning tree edges `(parent, child, color)` rooted at the smallest chamber.
  Connected { tree: Vec<(ChamberId, ChamberId, usize)> },
  /// A component with no panel shared with the remainder.
  Disconnected { component: Vec<ChamberId>, remainder: Vec<ChamberId> },
}

impl Connectivity {
  pub fn is_connected(&self) -> bool { matches!(self, Connectivity::Connected { .. }) }
}

/// A set of chambers together with the subcomplex of all their faces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChamberRegion {
  pub chambers:     Vec<ChamberId>,
  pub simplices:    BTreeSet<Simplex>,
  pub connectivity: Option<Connectivity>,
}

impl ChamberRegion {
  pub fn contains(&self, c: ChamberId) -> bool { self.chambers.binary_search(&c).is_ok() }

  pub fn vertex_count(&self) -> usize { self.simplices.iter().filter(|s| s.len() == 1).count() }
}

fn normalize(b: &BuildingStructure, u: &[ChamberId]) -> Result<Vec<ChamberId>, BuildingError> {
  let mut set = u.to_vec();
  set.sort_unstable();
  set.dedup();
  if let Some(&bad) = set.iter().find(|&&c| c >= b.chamber_count()) {
    return Err(BuildingError::UnknownChamber(bad));
  }
  Ok(set)
}

/// Connectivity of the panel-adjacency graph restricted to `u`.
pub fn is_gallery_connected(b: &BuildingStructure, u: &[ChamberId]) -> Result<Connectivity, BuildingError> {
  let set = normalize(b, u)?;
  if set.is_empty() {
    return Err(BuildingError::Invalid("chamber region is empty".into()));
  }
  let mut reached = BTreeSet::from([set[0]]);
  let mut tree = Vec::new();
  let mut queue = VecDeque::from([set[0]]);
  while let Some(c) = queue.pop_front() {
    for (s, d) in b.neighbors(c) {
      if set.binary_search(&d).is_ok() && reached.insert(d) {
        tree.push((c, d, s));
        queue.push_back(d);
      }
    }
  }
  if reached.len() == set.len() {
    Ok(Connectivity::Connected { tree })
  } else {
    let remainder = set.iter().copied().filter(|c| !reached.contains(c)).collect();
    Ok(Connectivity::Disconnected { component: reached.into_iter().collect(), remainder })
  }
}

/// `Δ(U)`: all faces of members of `u`, including the empty simplex.
pub fn subcomplex_generated(b: &BuildingStructure, u: &[ChamberId]) -> Result<ChamberRegion, BuildingError> {
  let chambers = normalize(b, u)?;
  let mut simplices = BTreeSet::new();
  let full = (1u32 << b.rank()) - 1;
  for &c in &chambers {
    for mask in 0..=full {
      simplices.insert(b.face_of_type(c, mask));
    }
  }
  let connectivity = if chambers.is_empty() { None } else { Some(is_gallery_connected(b, &chambers)?) };
  Ok(ChamberRegion { chambers, simplices, connectivity })
}

#[cfg(test)]
mod tests {
  use super::*;
  use crate::flag::FlagBuilding;

  #[test]
  fn fano_regions() {
    let fb = FlagBuilding::new(3, 2).unwrap();
    let b = fb.building();
    let single = subcomplex_generated(b, &[0]).unwrap();
    assert_eq!(single.simplices.len(), 4);
    let e1 = b.e_neighborhood(0, 1).unwrap();
    let r = subcomplex_generated(b, &e1).unwrap();
    assert_eq!(r.chambers.len(), 5);
    assert_eq!(r.vertex_count(), 6);
    assert_eq!(r.simplices.len(), 12);
    assert!(r.connectivity.unwrap().is_connected());
    let opp = b.opposite_chambers(0)[0];
    let c = is_gallery_connected(b, &[0, opp]).unwrap();
    assert!(!c.is_connected());
    assert!(is_gallery_connected(b, &[]).is_err());
    let apartment = b.apartments()[0].chambers().to_vec();
    assert!(is_gallery_connected(b, &apartment).unwrap().is_connected());
    let all: Vec<_> = b.chamber_ids().collect();
    assert_eq!(subcomplex_generated(b, &all).unwrap().vertex_count(), 14);
  }
}
