//! Counts of flag buildings against closed formulas.

use tits::{flag::FlagBuilding, group_homs::sl_order};

fn gl_order(n: u32, q: u128) -> u128 { (0..n).map(|i| q.pow(n) - q.pow(i)).product() }

fn gaussian_binomial(n: u32, k: u32, q: u128) -> u128 {
  let num: u128 = (0..k).map(|i| q.pow(n - i) - 1).product();
  let den: u128 = (0..k).map(|i| q.pow(i + 1) - 1).product();
  num / den
}

fn factorial(n: u32) -> u128 { (1..=n as u128).product() }

#[test]
fn counts_match_formulas() {
  for (n, q) in [(2u32, 2u128), (2, 3), (2, 4), (3, 2), (3, 3), (3, 4), (4, 2)] {
    let fb = FlagBuilding::new(n as usize, q as usize).unwrap();
    let b = fb.building();
    let chambers: u128 = (1..=n).map(|k| (q.pow(k) - 1) / (q - 1)).product();
    let vertices: u128 = (1..n).map(|k| gaussian_binomial(n, k, q)).sum();
    let frames = gl_order(n, q) / ((q - 1).pow(n) * factorial(n));
    let length = n * (n - 1) / 2;
    assert_eq!(b.chamber_count() as u128, chambers, "({n},{q})");
    assert_eq!(b.vertex_count() as u128, vertices, "({n},{q})");
    assert_eq!(b.apartments().len() as u128, frames, "({n},{q})");
    assert_eq!(b.group().order() as u128, factorial(n));
    assert_eq!(b.opposite_chambers(0).len() as u128, q.pow(length));
    assert_eq!(b.e_neighborhood(0, 1).unwrap().len() as u128, 1 + (n as u128 - 1) * q);
    assert!(b.panels().iter().all(|p| p.len() as u128 == q + 1));
    assert_eq!(sl_order(n as usize, q as usize), gl_order(n, q) / (q - 1));
  }
}

#[test]
fn rejected_beyond_caps() {
  assert!(FlagBuilding::new(4, 4).is_err());
  assert!(FlagBuilding::new(5, 2).is_err());
  assert!(FlagBuilding::new(1, 2).is_err());
  assert!(FlagBuilding::new(3, 6).is_err());
}
