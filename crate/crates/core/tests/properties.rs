use std::sync::OnceLock;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tits::{
  building::ChamberId,
  coxeter::{enumerate_group, CoxeterGroup, CoxeterMatrix, WeylElement},
  extender::{propagate, rigidity_seed, PartialChamberMap},
  field::{make_field, FqElement, FqField},
  flag::{random_invertible, FlagBuilding, PlantMap},
  group_homs::{big_cell_factor, default_w0_word, BigCellElement, RootSystemData},
  matrix::Matrix,
};

const FIELDS: [(u32, u32); 7] = [(2, 1), (3, 1), (5, 1), (7, 1), (2, 2), (3, 2), (2, 3)];

fn field(i: usize) -> FqField {
  let (p, e) = FIELDS[i];
  make_field(p, e).unwrap()
}

fn a3() -> &'static std::sync::Arc<CoxeterGroup> {
  static G: OnceLock<std::sync::Arc<CoxeterGroup>> = OnceLock::new();
  G.get_or_init(|| enumerate_group(&CoxeterMatrix::type_a(3)).unwrap())
}

fn fano3() -> &'static FlagBuilding {
  static B: OnceLock<FlagBuilding> = OnceLock::new();
  B.get_or_init(|| FlagBuilding::new(3, 3).unwrap())
}

fn elem(f: &FqField, k: u16) -> FqElement { FqElement(k % f.q() as u16) }

proptest! {
  #[test]
  fn field_axioms(i in 0..FIELDS.len(), a in any::<u16>(), b in any::<u16>(), c in any::<u16>()) {
    let f = field(i);
    let (a, b, c) = (elem(&f, a), elem(&f, b), elem(&f, c));
    prop_assert_eq!(f.add(a, f.add(b, c)), f.add(f.add(a, b), c));
    prop_assert_eq!(f.mul(a, f.mul(b, c)), f.mul(f.mul(a, b), c));
    prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
    prop_assert_eq!(f.add(a, f.neg(a)), FqElement::ZERO);
    if !a.is_zero() {
      prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), FqElement::ONE);
    }
    for m in 0..f.e() {
      prop_assert_eq!(f.frobenius(f.mul(a, b), m), f.mul(f.frobenius(a, m), f.frobenius(b, m)));
      prop_assert_eq!(f.frobenius(f.add(a, b), m), f.add(f.frobenius(a, m), f.frobenius(b, m)));
    }
    prop_assert_eq!(f.pow(a, f.q() as u64), a);
  }

  #[test]
  fn matrix_inverse_and_det(i in 0..5usize, n in 2..5usize, seed in any::<u64>()) {
    let f = field(i);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_invertible(n, &f, &mut rng);
    let b = random_invertible(n, &f, &mut rng);
    prop_assert!(a.mul(&a.inverse(&f).unwrap(), &f).is_identity());
    prop_assert_eq!(a.mul(&b, &f).det(&f), f.mul(a.det(&f), b.det(&f)));
    prop_assert_eq!(a.transpose_inverse(&f).transpose(), a.inverse(&f).unwrap());
  }

  #[test]
  fn coxeter_words_multiply(u in proptest::collection::vec(0..3usize, 0..10), v in proptest::collection::vec(0..3usize, 0..10)) {
    let g = a3();
    let (x, y) = (g.from_word(&u).unwrap(), g.from_word(&v).unwrap());
    let uv: Vec<usize> = u.iter().chain(&v).copied().collect();
    prop_assert_eq!(g.multiply(x, y), g.from_word(&uv).unwrap());
    prop_assert_eq!(g.length(g.inverse(x)), g.length(x));
    prop_assert!(g.length(x) <= u.len());
    let w: Vec<usize> = g.word(x).iter().map(|&s| s as usize).collect();
    prop_assert!(g.is_reduced(&w));
    prop_assert_eq!(g.from_word(&w).unwrap(), x);
    prop_assert!(g.length(g.multiply(g.longest_element(), x)) == g.length(g.longest_element()) - g.length(x));
  }

  #[test]
  fn weyl_distance_is_a_metric(x in 0..52usize, y in 0..52usize, z in 0..52usize) {
    let b = fano3().building();
    let g = b.group();
    prop_assert_eq!(b.delta(y, x), g.inverse(b.delta(x, y)));
    prop_assert!(b.gallery_distance(x, z) <= b.gallery_distance(x, y) + b.gallery_distance(y, z));
    prop_assert_eq!(b.delta(x, y) == WeylElement::IDENTITY, x == y);
  }

  #[test]
  fn projection_is_a_gate(x in 0..52usize, mask in 0..4u32, c in 0..52usize) {
    let b = fano3().building();
    let s = b.face_of_type(x, mask);
    let p = b.proj_chamber(&s, c).unwrap();
    for d in b.star(&s) {
      prop_assert_eq!(b.gallery_distance(d, c), b.gallery_distance(d, p) + b.gallery_distance(p, c));
    }
  }

  #[test]
  fn plant_actions_compose(seed in any::<u64>()) {
    let fb = fano3();
    let f = fb.field();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (random_invertible(3, f, &mut rng), random_invertible(3, f, &mut rng));
    let (pa, pb) = (fb.group_action(&a).unwrap(), fb.group_action(&b).unwrap());
    let pab = fb.group_action(&a.mul(&b, f)).unwrap();
    let composed: Vec<ChamberId> = (0..pa.len()).map(|c| pa[pb[c]]).collect();
    prop_assert_eq!(pab, composed);
    let scalar = Matrix::identity(3).scale(f.from_int(2), f);
    prop_assert_eq!(fb.group_action(&a.mul(&scalar, f)).unwrap(), pa);
  }

  #[test]
  fn big_cell_round_trip(i in 0..3usize, coords in proptest::collection::vec(any::<u16>(), 6)) {
    let f = field(i);
    let word = default_w0_word(3);
    let roots = RootSystemData::type_a(3).inversion_roots(&word);
    let lower: Vec<FqElement> = coords[..3].iter().map(|&k| elem(&f, k)).collect();
    let upper: Vec<FqElement> = coords[3..].iter().map(|&k| elem(&f, k)).collect();
    let e = BigCellElement { roots, lower: lower.clone(), upper: upper.clone() };
    let g = e.product(3, &f);
    let back = big_cell_factor(&g, &word, &f).unwrap();
    prop_assert_eq!(back.lower, lower);
    prop_assert_eq!(back.upper, upper);
  }

  #[test]
  fn rigidity_seed_determines_plant(seed in any::<u64>(), duality in any::<bool>(), c in 0..52usize) {
    let fb = fano3();
    let b = fb.building();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = fb.plant_action(&PlantMap::random(3, fb.field(), 0, duality, &mut rng)).unwrap();
    let c_opp = b.opposite_chambers(c)[(seed % 27) as usize];
    let seed_set = rigidity_seed(b, c, c_opp).unwrap();
    let phi = PartialChamberMap::restrict(&total, &seed_set);
    prop_assert_eq!(propagate(b, b, &phi).unwrap(), Ok(total));
  }
}
