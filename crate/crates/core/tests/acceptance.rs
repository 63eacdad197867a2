//! Acceptance suite. Prints one line per criterion and exits nonzero if a criterion that
//! is expected to pass fails.

use std::{
  collections::{BTreeSet, VecDeque},
  process::ExitCode,
  time::{Duration, Instant},
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tits::{
  building::{BuildingStructure, ChamberId, Simplex},
  extender::{extend_chamber_map, extend_from_e2, standard_domain, verify_extension, ExtendOptions, PartialChamberMap},
  field::FqElement,
  flag::{FlagBuilding, PlantMap},
  group_homs::{
    big_cell_measure, classify_hom, extend_local_hom, group_closure, sl_generators, BasicOpenSubset, CheckMode,
    LocalHom,
  },
  matrix::Matrix,
  region::subcomplex_generated,
};

const AXIOM_LIMIT: Duration = Duration::from_secs(60);
const RIGIDITY_LIMIT: Duration = Duration::from_secs(120);
const E2_PLANTS: usize = 50;
const F4_PLANTS: usize = 100;
const LOCAL_SAMPLES: usize = 10_000;

/// Criteria whose literal statement cannot hold. The line is still printed as FAIL, and
/// the suite instead requires that the documented obstruction is what it observes.
const KNOWN_UNATTAINABLE: &[usize] = &[6];

struct Outcome {
  passed: bool,
  detail: String,
}

impl Outcome {
  fn new(passed: bool, detail: impl Into<String>) -> Self { Self { passed, detail: detail.into() } }
}

fn criterion_1() -> Outcome {
  let start = Instant::now();
  let mut notes = Vec::new();
  let mut ok = true;
  for (n, q, chambers, apartments, thickness) in
    [(3, 2, Some(21), Some(28), 3), (3, 3, None, None, 4), (4, 2, Some(315), None, 3)]
  {
    let fb = FlagBuilding::new(n, q).unwrap();
    let b = fb.building();
    let r = b.verify_building_axioms();
    let degrees: Vec<usize> = r.panel_degrees.keys().copied().collect();
    let good = r.all_passed()
      && degrees == [thickness]
      && chambers.map_or(true, |c| b.chamber_count() == c)
      && apartments.map_or(true, |a| b.apartments().len() == a);
    ok &= good;
    notes.push(format!("({n},{q}) {} chambers, {} apartments, thickness {degrees:?}", b.chamber_count(), b.apartments().len()));
  }
  let elapsed = start.elapsed();
  ok &= elapsed < AXIOM_LIMIT;
  Outcome::new(ok, format!("{}; {:.1}s", notes.join("; "), elapsed.as_secs_f64()))
}

/// Breadth-first gallery from `x` to `y`; returns its colors.
fn bfs_gallery(b: &BuildingStructure, x: ChamberId, y: ChamberId) -> Vec<usize> {
  let mut prev: Vec<Option<(ChamberId, usize)>> = vec![None; b.chamber_count()];
  let mut seen = vec![false; b.chamber_count()];
  seen[x] = true;
  let mut queue = VecDeque::from([x]);
  while let Some(c) = queue.pop_front() {
    if c == y {
      break;
    }
    for (s, d) in b.neighbors(c) {
      if !seen[d] {
        seen[d] = true;
        prev[d] = Some((c, s));
        queue.push_back(d);
      }
    }
  }
  let mut colors = Vec::new();
  let mut c = y;
  while let Some((p, s)) = prev[c] {
    colors.push(s);
    c = p;
  }
  colors.reverse();
  colors
}

/// Reduced word of the permutation `w` (positions), peeling right descents.
fn permutation_word(mut w: Vec<usize>) -> Vec<usize> {
  let mut word = Vec::new();
  while let Some(k) = (0..w.len() - 1).find(|&k| w[k] > w[k + 1]) {
    w.swap(k, k + 1);
    word.push(k);
  }
  word.reverse();
  word
}

fn criterion_2() -> Outcome {
  let fb = FlagBuilding::new(3, 2).unwrap();
  let b = fb.building();
  let g = b.group();
  let (mut pairs, mut mismatches, mut apartment_checks) = (0, 0, 0);
  for x in b.chamber_ids() {
    for y in b.chamber_ids() {
      pairs += 1;
      let d = b.delta(x, y);
      let colors = bfs_gallery(b, x, y);
      let via_bfs = g.from_word(&colors).unwrap();
      if via_bfs != d || g.length(d) != colors.len() {
        mismatches += 1;
      }
      for a in b.apartments_containing(&[x, y]) {
        apartment_checks += 1;
        let basis = fb.frame_basis(a, x).unwrap();
        let ox = fb.order_of_chamber(&basis, x).unwrap();
        let oy = fb.order_of_chamber(&basis, y).unwrap();
        let inv: Vec<usize> = (0..ox.len()).map(|i| ox.iter().position(|&v| v == i).unwrap()).collect();
        let w: Vec<usize> = oy.iter().map(|&v| inv[v]).collect();
        if g.from_word(&permutation_word(w)).unwrap() != d {
          mismatches += 1;
        }
      }
    }
  }
  Outcome::new(
    pairs == 441 && mismatches == 0,
    format!("{pairs} pairs, {apartment_checks} apartment computations, {mismatches} mismatches"),
  )
}

fn criterion_3() -> Outcome {
  let fb = FlagBuilding::new(3, 2).unwrap();
  let b = fb.building();
  let all: Vec<ChamberId> = b.chamber_ids().collect();
  let simplices: Vec<Simplex> = subcomplex_generated(b, &all).unwrap().simplices.into_iter().collect();
  let (mut checked, mut mismatches) = (0, 0);
  for x in &simplices {
    let star = b.star(x);
    for c in b.chamber_ids() {
      checked += 1;
      let dist = |d: ChamberId| bfs_gallery(b, d, c).len();
      let best = star.iter().map(|&d| dist(d)).min().unwrap();
      let nearest: Vec<ChamberId> = star.iter().copied().filter(|&d| dist(d) == best).collect();
      let gate = nearest[0];
      let first_entry = star.iter().all(|&d| dist(d) == bfs_gallery(b, d, gate).len() + best);
      if nearest.len() != 1 || !first_entry || b.proj_chamber(x, c).unwrap() != gate {
        mismatches += 1;
      }
    }
  }
  Outcome::new(mismatches == 0, format!("{} simplices, {checked} pairs, {mismatches} mismatches", simplices.len()))
}

fn moufang_roots(fb: &FlagBuilding, apartments: &[usize]) -> (usize, usize) {
  let b = fb.building();
  let (mut roots, mut failures) = (0, 0);
  for &a in apartments {
    let basis = fb.frame_basis(a, b.apartments()[a].chambers()[0]).unwrap();
    for (_, _, chambers) in fb.roots_of_apartment(&basis) {
      roots += 1;
      let r = fb.verify_moufang(a, &chambers).unwrap();
      let containing = b.apartments_containing(&chambers);
      let mut orbit: Vec<usize> = r.orbit.clone();
      orbit.sort_unstable();
      let independent = containing.len() == fb.q() && orbit == containing;
      if !(r.passed() && independent) {
        failures += 1;
      }
    }
  }
  (roots, failures)
}

fn criterion_4() -> Outcome {
  let f2 = FlagBuilding::new(3, 2).unwrap();
  let all: Vec<usize> = (0..f2.building().apartments().len()).collect();
  let (r2, bad2) = moufang_roots(&f2, &all);
  let f3 = FlagBuilding::new(3, 3).unwrap();
  let mut rng = ChaCha8Rng::seed_from_u64(4);
  let sample: Vec<usize> = (0..4).map(|_| rng.gen_range(0..f3.building().apartments().len())).collect();
  let (r3, bad3) = moufang_roots(&f3, &sample);
  Outcome::new(
    r2 == 28 * 6 && r3 >= 10 && bad2 + bad3 == 0,
    format!("(3,2): {r2} roots, {bad2} failures; (3,3): {r3} sampled roots, {bad3} failures"),
  )
}

fn criterion_5() -> Outcome {
  let start = Instant::now();
  let fb = FlagBuilding::new(3, 2).unwrap();
  let b = fb.building();
  let gens: Vec<Vec<ChamberId>> =
    fb.type_preserving_generators().iter().map(|p| fb.plant_action(p).unwrap()).collect();
  let autos = FlagBuilding::permutation_closure(&gens, 1000).unwrap();
  let (mut pairs, mut bad) = (0, 0);
  for c in b.chamber_ids() {
    for c_opp in b.opposite_chambers(c) {
      pairs += 1;
      let mut seed = b.e_neighborhood(c, 1).unwrap();
      seed.push(c_opp);
      let survivors: Vec<_> = autos.iter().filter(|p| seed.iter().all(|&s| p[s] == s)).collect();
      if survivors.len() != 1 || survivors[0].iter().enumerate().any(|(i, &v)| i != v) {
        bad += 1;
      }
    }
  }
  let elapsed = start.elapsed();
  Outcome::new(
    autos.len() == 168 && pairs == 21 * 8 && bad == 0 && elapsed < RIGIDITY_LIMIT,
    format!("{} automorphisms, {pairs} pairs, {bad} with extra survivors; {:.1}s", autos.len(), elapsed.as_secs_f64()),
  )
}

/// Returns the literal outcome and whether the observed behaviour is exactly the documented
/// obstruction: two extensions, the plant among them, corruption rejected.
fn criterion_6() -> (Outcome, bool) {
  let fb = FlagBuilding::new(4, 2).unwrap();
  let b = fb.building();
  let e2 = b.e_neighborhood(0, 2).unwrap();
  let mut rng = ChaCha8Rng::seed_from_u64(6);
  let (mut exact, mut contained, mut pairs_of_two, mut rejected) = (0, 0, 0, 0);
  for i in 0..E2_PLANTS {
    let total = fb.plant_action(&PlantMap::random(4, fb.field(), 0, i % 2 == 1, &mut rng)).unwrap();
    let phi = PartialChamberMap::restrict(&total, &e2);
    let ext = extend_from_e2(b, b, 0, &phi).unwrap();
    exact += usize::from(ext.map == total);
    contained += usize::from(ext.extensions.contains(&total));
    pairs_of_two += usize::from(ext.extensions.len() == 2);
    let mut corrupt = phi.clone();
    let x = e2[1 + i % (e2.len() - 1)];
    let y = e2[1 + (i + 7) % (e2.len() - 1)];
    if x != y {
      corrupt.insert(x, total[y]);
      corrupt.insert(y, total[x]);
    } else {
      corrupt.insert(x, total[0]);
    }
    rejected += usize::from(extend_from_e2(b, b, 0, &corrupt).is_err());
  }
  let literal = exact == E2_PLANTS && rejected == E2_PLANTS;
  let obstruction = contained == E2_PLANTS && pairs_of_two == E2_PLANTS && rejected == E2_PLANTS;
  let detail = format!(
    "{exact}/{E2_PLANTS} exact; plant among extensions {contained}/{E2_PLANTS}; \
     {pairs_of_two}/{E2_PLANTS} restrictions have 2 extensions (highest root group fixes E2(C)); \
     corrupted rejected {rejected}/{E2_PLANTS}"
  );
  (Outcome::new(literal, detail), obstruction)
}

fn recover(fb: &FlagBuilding, plant: &PlantMap, domain: &[ChamberId]) -> Result<(), String> {
  let b = fb.building();
  let total = fb.plant_action(plant).unwrap();
  let phi = PartialChamberMap::restrict(&total, domain);
  let r = extend_chamber_map(fb, fb, &phi, &ExtendOptions::default()).map_err(|e| e.to_string())?;
  if r.map != total {
    return Err("map differs".into());
  }
  if r.field_hom.exponent != plant.frobenius || r.duality != plant.duality {
    return Err(format!("recovered m = {}, duality = {}", r.field_hom.exponent, r.duality));
  }
  let mut alt = r.word.clone();
  alt.reverse();
  let second = extend_chamber_map(fb, fb, &phi, &ExtendOptions { word: Some(alt), ..Default::default() })
    .map_err(|e| e.to_string())?;
  if second.map != r.map || !verify_extension(b, b, &phi, &r.map).passed() {
    return Err("uniqueness check failed".into());
  }
  Ok(())
}

fn criterion_7() -> Outcome {
  let f2 = FlagBuilding::new(3, 2).unwrap();
  let field = f2.field().clone();
  let group = group_closure(&sl_generators(3, &field), &field, 1000).unwrap();
  let domain = standard_domain(f2.building(), 0);
  let (mut runs, mut failures) = (0, Vec::new());
  for g in &group {
    for duality in [false, true] {
      runs += 1;
      if let Err(e) = recover(&f2, &PlantMap { matrix: g.clone(), frobenius: 0, duality }, &domain) {
        failures.push(e);
      }
    }
  }
  let f4 = FlagBuilding::new(3, 4).unwrap();
  let domain4 = standard_domain(f4.building(), 0);
  let mut rng = ChaCha8Rng::seed_from_u64(7);
  let mut twisted = 0;
  for i in 0..F4_PLANTS {
    runs += 1;
    let plant = PlantMap::random(3, f4.field(), (i % 2) as u32, i % 4 >= 2, &mut rng);
    twisted += usize::from(plant.frobenius == 1);
    if let Err(e) = recover(&f4, &plant, &domain4) {
      failures.push(e);
    }
  }
  Outcome::new(
    group.len() == 168 && failures.is_empty(),
    format!(
      "(3,2): {} plants x 2 diagram variants; (3,4): {F4_PLANTS} plants, {twisted} Frobenius-twisted; {runs} runs, {} failures{}",
      group.len(),
      failures.len(),
      failures.first().map(|e| format!(" (first: {e})")).unwrap_or_default()
    ),
  )
}

fn plant_hom<'a>(g: &Matrix, m: u32, duality: bool, f: &'a tits::field::FqField) -> impl Fn(&Matrix) -> Matrix + 'a {
  let g_inv = g.inverse(f).unwrap();
  let g = g.clone();
  move |x: &Matrix| {
    let y = g.mul(&x.frobenius(m, f), f).mul(&g_inv, f);
    if duality {
      y.transpose_inverse(f)
    } else {
      y
    }
  }
}

fn criterion_8() -> Outcome {
  let mut notes = Vec::new();
  let mut ok = true;
  for (p, e) in [(2, 1), (3, 1), (2, 2)] {
    let f = tits::field::make_field(p, e).unwrap();
    let m = big_cell_measure(3, &f).unwrap();
    ok &= m.big_cell == f.q().pow(6) && m.big_cell == m.expected;
    notes.push(format!("big cell ({},{}) {} of {}", 3, f.q(), m.big_cell, m.order));
  }

  let f2 = tits::field::make_field(2, 1).unwrap();
  let group = group_closure(&sl_generators(3, &f2), &f2, 1000).unwrap();
  let cell = BasicOpenSubset::full(3, &f2).elements(&f2).unwrap();
  let mut rng = ChaCha8Rng::seed_from_u64(8);
  let (mut runs, mut bad) = (0, 0);
  for _ in 0..24 {
    let g = &group[rng.gen_range(0..group.len())];
    for duality in [false, true] {
      runs += 1;
      let h = plant_hom(g, 0, duality, &f2);
      let ext = extend_local_hom(&LocalHom::restrict(cell.clone(), &h), CheckMode::Exhaustive, &f2).unwrap();
      let exact = group.iter().all(|x| ext.apply(x, &f2).unwrap() == h(x));
      let cl = classify_hom(&ext, &f2).unwrap();
      let class_ok = cl.found
        && cl.duality == duality
        && cl.frobenius == 0
        && cl.conjugator_matrix() == Some(g.projective_normal_form(&f2));
      bad += usize::from(!(exact && class_ok));
    }
  }
  notes.push(format!("(3,2): {runs} plants compared on all 168 elements"));

  let f4 = tits::field::make_field(2, 2).unwrap();
  let cell4 = BasicOpenSubset::full(3, &f4).elements(&f4).unwrap();
  let gens4 = sl_generators(3, &f4);
  let mut runs4 = 0;
  for i in 0..4u32 {
    runs4 += 1;
    let g = tits::flag::random_invertible(3, &f4, &mut rng);
    let (m, duality) = (i % 2, i >= 2);
    let h = plant_hom(&g, m, duality, &f4);
    let mode = CheckMode::Sampled { pairs: LOCAL_SAMPLES, seed: u64::from(i) };
    let ext = extend_local_hom(&LocalHom::restrict(cell4.clone(), &h), mode, &f4).unwrap();
    let mut exact = gens4.iter().all(|x| ext.apply(x, &f4).unwrap() == h(x));
    for _ in 0..LOCAL_SAMPLES {
      let x = &cell4[rng.gen_range(0..cell4.len())];
      let y = &cell4[rng.gen_range(0..cell4.len())];
      let xy = x.mul(y, &f4);
      exact &= ext.apply(&xy, &f4).unwrap() == h(&xy);
      if !exact {
        break;
      }
    }
    let cl = classify_hom(&ext, &f4).unwrap();
    let class_ok =
      cl.found && cl.duality == duality && cl.frobenius == m && cl.conjugator_matrix() == Some(g.projective_normal_form(&f4));
    bad += usize::from(!(exact && class_ok));
  }
  notes.push(format!("(3,4): {runs4} plants, generators plus {LOCAL_SAMPLES} random products each"));
  ok &= bad == 0;
  notes.push(format!("{bad} failures"));
  Outcome::new(ok, notes.join("; "))
}

fn criterion_9() -> Outcome {
  let mut notes = Vec::new();
  let mut ok = true;
  for q in [2, 3, 4] {
    let fb = FlagBuilding::new(3, q).unwrap();
    let b = fb.building();
    let full: Vec<Vec<FqElement>> = vec![fb.field().elements().collect(); 2];
    let mut pairs = 0;
    let mut bad = 0;
    let bases: Vec<ChamberId> = if q == 4 { (0..b.chamber_count()).step_by(7).collect() } else { b.chamber_ids().collect() };
    for &c in &bases {
      for c_opp in b.opposite_chambers(c) {
        for word in [[0, 1, 0], [1, 0, 1]] {
          pairs += 1;
          let s = fb.schubert_set(c, c_opp, &full, &word).unwrap();
          let opposite: BTreeSet<ChamberId> = b.opposite_chambers(c_opp).into_iter().collect();
          let expected = q.pow(3);
          let chambers: BTreeSet<ChamberId> = s.chambers.iter().copied().collect();
          if !(s.injective && s.products == expected && s.chambers.len() == expected && chambers == opposite) {
            bad += 1;
          }
        }
      }
    }
    ok &= bad == 0;
    notes.push(format!("q={q}: {pairs} (C, C', word) cases, {bad} failures"));
  }
  Outcome::new(ok, notes.join("; "))
}

fn main() -> ExitCode {
  let criteria: Vec<(usize, &str, fn() -> Outcome)> = vec![
    (1, "building axioms", criterion_1),
    (2, "distance oracle equivalence", criterion_2),
    (3, "projection gate property", criterion_3),
    (4, "Moufang property", criterion_4),
    (5, "rigidity", criterion_5),
    (7, "plant-and-recover extension", criterion_7),
    (8, "local Borel-Tits analog", criterion_8),
    (9, "Schubert sets", criterion_9),
  ];
  let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
  for (id, name, run) in criteria {
    let start = Instant::now();
    let out = run();
    results.push((id, name, out, start.elapsed().as_secs_f64()));
  }
  let start = Instant::now();
  let (six, obstruction) = criterion_6();
  results.push((6, "extension from E2", six, start.elapsed().as_secs_f64()));
  results.sort_by_key(|r| r.0);

  let mut failed = false;
  for (id, name, out, secs) in &results {
    let status = if out.passed { "PASS" } else { "FAIL" };
    let note = if !out.passed && KNOWN_UNATTAINABLE.contains(id) { " [known unattainable]" } else { "" };
    println!("criterion {id} {status}{note}: {name} ({secs:.1}s) {}", out.detail);
    if !out.passed && !KNOWN_UNATTAINABLE.contains(id) {
      failed = true;
    }
  }
  if !obstruction {
    println!("criterion 6: observed behaviour differs from the documented obstruction");
    failed = true;
  }
  if failed {
    ExitCode::FAILURE
  } else {
    ExitCode::SUCCESS
  }
}
