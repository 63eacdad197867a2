use std::{collections::BTreeMap, fs, path::PathBuf, process::ExitCode, time::Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use tits::{
  building::ChamberId,
  extender::{
    extend_chamber_map, extend_from_e2, probe_min_domain, standard_domain, verify_extension, ExtendOptions,
    PartialChamberMap,
  },
  flag::{FlagBuilding, FlagError, PlantMap},
  group_homs::{
    big_cell_measure, classify_hom, extend_local_hom, sl_order, BasicOpenSubset, CheckMode, LocalHom,
    DEFAULT_SAMPLES,
  },
  matrix::Matrix,
};

/// Exhaustive automorphism enumeration up to this group order.
const EXHAUSTIVE_AUT_BOUND: u128 = 30_000;
/// Exhaustive pair checks for local homomorphisms up to this domain size.
const EXHAUSTIVE_LOCAL_BOUND: usize = 200;

#[derive(Parser)]
#[command(name = "tits", version, about = "Spherical buildings of SL_n(F_q): construction, checks and extension experiments")]
struct Cli {
  #[command(subcommand)]
  command: Command,
}

#[derive(Subcommand)]
enum Command {
  /// Build the flag building, verify its axioms, optionally write it as JSON to --out.
  Build(Common),
  /// Verify the building axioms.
  VerifyAxioms(Common),
  /// Check that root groups act simply transitively on apartments containing a root.
  Moufang(MoufangArgs),
  /// Count automorphisms that fix E1(C) and an opposite chamber pointwise.
  Rigidity(RigidityArgs),
  /// Plant a map, restrict it, extend it and compare.
  Extend(ExtendArgs),
  /// Counts and group orders.
  Stats(Common),
  /// Shrink the standard domain while propagation still determines the plant.
  ProbeMinDomain(Common),
}

#[derive(Args, Clone)]
struct Common {
  /// Dimension n, positional alternative to --n.
  #[arg(value_name = "N")]
  pos_n:  Option<usize>,
  /// Field size q, positional alternative to --q.
  #[arg(value_name = "Q")]
  pos_q:  Option<usize>,
  #[arg(long)]
  n:      Option<usize>,
  #[arg(long)]
  q:      Option<usize>,
  #[arg(long, default_value_t = 0)]
  seed:   u64,
  /// identity | random | frobenius | duality, comma separated.
  #[arg(long, default_value = "random")]
  plant:  String,
  /// standard | e1 | e2 | all.
  #[arg(long, default_value = "standard")]
  domain: String,
  /// Output path: the building for `build`, the JSON report otherwise.
  #[arg(long)]
  out:    Option<PathBuf>,
  /// Print the JSON report instead of the text summary.
  #[arg(long)]
  json:   bool,
}

impl Common {
  fn n(&self) -> usize { self.n.or(self.pos_n).unwrap_or(3) }

  fn q(&self) -> usize { self.q.or(self.pos_q).unwrap_or(2) }
}

#[derive(Args)]
struct MoufangArgs {
  #[command(flatten)]
  common:  Common,
  /// Number of apartments whose roots are checked; all when omitted.
  #[arg(long)]
  samples: Option<usize>,
}

#[derive(Args)]
struct RigidityArgs {
  #[command(flatten)]
  common:    Common,
  /// Check every opposite pair instead of one.
  #[arg(long)]
  all_pairs: bool,
  /// Random automorphisms tested when the group is too large to enumerate.
  #[arg(long, default_value_t = 200)]
  samples:   usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExtendKind {
  E2,
  Local,
  BorelTits,
}

#[derive(Args)]
struct ExtendArgs {
  kind:   ExtendKind,
  #[command(flatten)]
  common: Common,
}

#[derive(Serialize)]
struct Check {
  name:    String,
  passed:  bool,
  #[serde(skip_serializing_if = "Option::is_none")]
  witness: Option<String>,
}

#[derive(Serialize)]
struct Report {
  command:    String,
  version:    &'static str,
  inputs:     Value,
  checks:     Vec<Check>,
  results:    Value,
  timings_ms: BTreeMap<String, f64>,
}

enum Failure {
  Usage(String),
}

impl From<FlagError> for Failure {
  fn from(e: FlagError) -> Self { Failure::Usage(e.to_string()) }
}

struct Run {
  report: Report,
  clock:  Instant,
}

impl Run {
  fn new(command: &str, c: &Common) -> Self {
    let inputs = json!({ "n": c.n(), "q": c.q(), "seed": c.seed, "plant": c.plant, "domain": c.domain });
    Self {
      report: Report {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION"),
        inputs,
        checks: Vec::new(),
        results: json!({}),
        timings_ms: BTreeMap::new(),
      },
      clock:  Instant::now(),
    }
  }

  fn lap(&mut self, phase: &str) {
    self.report.timings_ms.insert(phase.to_string(), self.clock.elapsed().as_secs_f64() * 1e3);
    self.clock = Instant::now();
  }

  fn check(&mut self, name: &str, passed: bool, witness: Option<String>) {
    self.report.checks.push(Check { name: name.to_string(), passed, witness: if passed { None } else { witness } });
  }

  fn result(&mut self, key: &str, value: impl Serialize) {
    self.report.results[key] = serde_json::to_value(value).unwrap();
  }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct PlantSpec {
  random:    bool,
  frobenius: bool,
  duality:   bool,
}

fn parse_plant(spec: &str) -> Result<PlantSpec, Failure> {
  let mut p = PlantSpec::default();
  for part in spec.split(',').map(str::trim) {
    match part {
      "identity" => {}
      "random" => p.random = true,
      "frobenius" => p.frobenius = true,
      "duality" => p.duality = true,
      other => return Err(Failure::Usage(format!("unknown plant component {other:?}"))),
    }
  }
  Ok(p)
}

fn make_plant(fb: &FlagBuilding, spec: PlantSpec, rng: &mut ChaCha8Rng) -> Result<PlantMap, Failure> {
  let f = fb.field();
  if spec.frobenius && f.e() == 1 {
    return Err(Failure::Usage(format!("F_{} has no nontrivial Frobenius twist", f.q())));
  }
  let frobenius = u32::from(spec.frobenius);
  Ok(if spec.random {
    PlantMap::random(fb.n(), f, frobenius, spec.duality, rng)
  } else {
    PlantMap { matrix: Matrix::identity(fb.n()), frobenius, duality: spec.duality }
  })
}

fn parse_domain(fb: &FlagBuilding, spec: &str) -> Result<Vec<ChamberId>, Failure> {
  let b = fb.building();
  Ok(match spec {
    "standard" => standard_domain(b, 0),
    "e1" => b.e_neighborhood(0, 1).map_err(|e| Failure::Usage(e.to_string()))?,
    "e2" => b.e_neighborhood(0, 2.min(b.rank())).map_err(|e| Failure::Usage(e.to_string()))?,
    "all" => b.chamber_ids().collect(),
    other => return Err(Failure::Usage(format!("unknown domain {other:?}"))),
  })
}

fn cmd_build(c: &Common, write: bool) -> Result<Run, Failure> {
  let mut run = Run::new(if write { "build" } else { "verify-axioms" }, c);
  let fb = FlagBuilding::new(c.n(), c.q())?;
  run.lap("build");
  let report = fb.building().verify_building_axioms();
  run.lap("verify");
  for ch in &report.checks {
    run.check(&ch.name, ch.passed, ch.witness.clone());
  }
  let degrees: BTreeMap<String, usize> = report.panel_degrees.iter().map(|(k, v)| (k.to_string(), *v)).collect();
  let thickness = report.panel_degrees.keys().next().copied().unwrap_or(0);
  run.result("summary", fb.summary());
  run.result("panel_degrees", degrees);
  run.result("thickness", thickness);
  if write {
    if let Some(path) = &c.out {
      let text = serde_json::to_string(&fb.building().to_json()).unwrap();
      fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
      run.result("building_file", path.display().to_string());
    }
  }
  Ok(run)
}

fn cmd_moufang(a: &MoufangArgs) -> Result<Run, Failure> {
  let c = &a.common;
  let mut run = Run::new("moufang", c);
  let fb = FlagBuilding::new(c.n(), c.q())?;
  run.lap("build");
  let b = fb.building();
  let count = a.samples.unwrap_or(b.apartments().len()).min(b.apartments().len());
  let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
  let apartments: Vec<usize> = if count == b.apartments().len() {
    (0..count).collect()
  } else {
    rand::seq::index::sample(&mut rng, b.apartments().len(), count).into_vec()
  };
  let (mut roots, mut failures) = (0usize, Vec::new());
  for &ap in &apartments {
    let basis = fb.frame_basis(ap, b.apartments()[ap].chambers()[0])?;
    for (i, j, chambers) in fb.roots_of_apartment(&basis) {
      let r = fb.verify_moufang(ap, &chambers)?;
      roots += 1;
      if !r.passed() {
        failures.push(format!("apartment {ap}, root ({i},{j}): {}", r.witness.unwrap_or_default()));
      }
    }
  }
  run.lap("verify");
  run.check("root groups act simply transitively", failures.is_empty(), failures.first().cloned());
  run.result("apartments_checked", apartments.len());
  run.result("roots_checked", roots);
  run.result("failures", failures.len());
  Ok(run)
}

fn cmd_rigidity(a: &RigidityArgs) -> Result<Run, Failure> {
  let c = &a.common;
  let mut run = Run::new("rigidity", c);
  let fb = FlagBuilding::new(c.n(), c.q())?;
  let b = fb.building();
  let isolated = b.group().matrix().isolated_nodes();
  if !isolated.is_empty() {
    return Err(Failure::Usage(format!(
      "the Coxeter diagram of rank {} has isolated nodes {isolated:?}; rigidity needs every node to be connected",
      b.rank()
    )));
  }
  run.lap("build");
  let order = sl_order(c.n(), c.q()) * u128::from(fb.field().e());
  let gens: Vec<Vec<ChamberId>> =
    fb.type_preserving_generators().iter().map(|p| fb.plant_action(p)).collect::<Result<_, _>>()?;
  let exhaustive = order <= EXHAUSTIVE_AUT_BOUND;
  let autos = if exhaustive {
    FlagBuilding::permutation_closure(&gens, EXHAUSTIVE_AUT_BOUND as usize + 1)?
  } else {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut out = vec![b.chamber_ids().collect::<Vec<_>>()];
    for _ in 0..a.samples {
      let frob = rand::Rng::gen_range(&mut rng, 0..fb.field().e());
      out.push(fb.plant_action(&PlantMap::random(fb.n(), fb.field(), frob, false, &mut rng))?);
    }
    out
  };
  run.lap("automorphisms");
  let pairs: Vec<(ChamberId, ChamberId)> = if a.all_pairs {
    b.chamber_ids().flat_map(|x| b.opposite_chambers(x).into_iter().map(move |y| (x, y))).collect()
  } else {
    vec![(0, b.opposite_chambers(0)[0])]
  };
  let mut worst: Option<String> = None;
  let mut survivor_counts = BTreeMap::new();
  for &(x, y) in &pairs {
    let mut seed = b.e_neighborhood(x, 1).unwrap();
    seed.push(y);
    let survivors: Vec<&Vec<ChamberId>> = autos.iter().filter(|p| seed.iter().all(|&s| p[s] == s)).collect();
    let identity_only = survivors.iter().all(|p| p.iter().enumerate().all(|(i, &v)| i == v));
    *survivor_counts.entry(survivors.len().to_string()).or_insert(0usize) += 1;
    if !identity_only && worst.is_none() {
      let moved = survivors.iter().find_map(|p| p.iter().enumerate().find(|(i, v)| i != *v)).unwrap();
      worst = Some(format!("pair ({x},{y}): a nontrivial automorphism survives and moves chamber {}", moved.0));
    }
  }
  run.lap("filter");
  let identity_survives = survivor_counts.keys().all(|k| k != "0") || !exhaustive;
  run.check("only the identity fixes E1(C) and C'", worst.is_none(), worst);
  run.check("identity survives", identity_survives, Some("a pair has no survivors".into()));
  run.result("automorphisms_tested", autos.len());
  run.result("exhaustive", exhaustive);
  run.result("pairs", pairs.len());
  run.result("survivor_counts", survivor_counts);
  Ok(run)
}

fn cmd_extend(a: &ExtendArgs) -> Result<Run, Failure> {
  let c = &a.common;
  let spec = parse_plant(&c.plant)?;
  let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
  match a.kind {
    ExtendKind::E2 => {
      let mut run = Run::new("extend e2", c);
      let fb = FlagBuilding::new(c.n(), c.q())?;
      let b = fb.building();
      if b.rank() < 3 {
        return Err(Failure::Usage(format!("extension from E2 needs rank >= 3, got rank {}", b.rank())));
      }
      let plant = make_plant(&fb, spec, &mut rng)?;
      let total = fb.plant_action(&plant)?;
      let e2 = b.e_neighborhood(0, 2).unwrap();
      run.lap("plant");
      let phi = PartialChamberMap::restrict(&total, &e2);
      match extend_from_e2(b, b, 0, &phi) {
        Ok(ext) => {
          run.lap("extend");
          run.check("plant is among the extensions", ext.extensions.contains(&total), Some("plant not found".into()));
          run.check("rigidity certificate", ext.rigidity.holds(), Some(format!("{:?}", ext.rigidity)));
          run.result("exact_match", ext.map == total);
          run.result("extensions", ext.extensions.len());
          run.result("unique", ext.is_unique());
          run.result("closure_complete", ext.closure_complete);
          run.result("type_permutation", &ext.type_permutation);
        }
        Err(e) => run.check("extension exists", false, Some(e.to_string())),
      }
      Ok(run)
    }
    ExtendKind::Local => {
      let mut run = Run::new("extend local", c);
      let fb = FlagBuilding::new(c.n(), c.q())?;
      let b = fb.building();
      let plant = make_plant(&fb, spec, &mut rng)?;
      let total = fb.plant_action(&plant)?;
      let domain = parse_domain(&fb, &c.domain)?;
      let phi = PartialChamberMap::restrict(&total, &domain);
      run.lap("plant");
      match extend_chamber_map(&fb, &fb, &phi, &ExtendOptions::default()) {
        Ok(r) => {
          let report = verify_extension(b, b, &phi, &r.map);
          let mut alt = r.word.clone();
          alt.reverse();
          let second = extend_chamber_map(&fb, &fb, &phi, &ExtendOptions { word: Some(alt.clone()), ..Default::default() });
          run.lap("extend");
          run.check("extension equals plant", r.map == total, Some("maps differ".into()));
          run.check("recovered Frobenius exponent", r.field_hom.exponent == plant.frobenius, Some(format!("got {}", r.field_hom.exponent)));
          run.check("recovered duality flag", r.duality == plant.duality, Some(format!("got {}", r.duality)));
          run.check("verification", report.passed(), report.witness.clone());
          let same = matches!(&second, Ok(s) if s.map == r.map);
          run.check("independent of the w0 word", same, Some(format!("word {alt:?}: {:?}", second.err())));
          run.result("frobenius", r.field_hom.exponent);
          run.result("duality", r.duality);
          run.result("domain_size", domain.len());
          run.result("apartment", r.apartment);
          run.result("word", &r.word);
          run.result("phases", r.timings.iter().map(|t| t.phase.clone()).collect::<Vec<_>>());
          for t in &r.timings {
            run.report.timings_ms.insert(format!("extend.{}", t.phase), t.micros as f64 / 1e3);
          }
        }
        Err(e) => run.check("extension exists", false, Some(e.to_string())),
      }
      Ok(run)
    }
    ExtendKind::BorelTits => {
      let mut run = Run::new("extend borel-tits", c);
      let (n, q) = (c.n(), c.q());
      let fb = FlagBuilding::new(n, q)?;
      let f = fb.field().clone();
      let plant = make_plant(&fb, spec, &mut rng)?;
      let g = plant.matrix.clone();
      let g_inv = g.inverse(&f).unwrap();
      let hom = |x: &Matrix| {
        let y = g.mul(&x.frobenius(plant.frobenius, &f), &f).mul(&g_inv, &f);
        if plant.duality {
          y.transpose_inverse(&f)
        } else {
          y
        }
      };
      let domain = BasicOpenSubset::full(n, &f).elements(&f).map_err(|e| Failure::Usage(e.to_string()))?;
      let size = domain.len();
      let local = LocalHom::restrict(domain, &hom);
      let mode = if size <= EXHAUSTIVE_LOCAL_BOUND {
        CheckMode::Exhaustive
      } else {
        CheckMode::Sampled { pairs: DEFAULT_SAMPLES, seed: c.seed }
      };
      run.lap("plant");
      match extend_local_hom(&local, mode, &f) {
        Ok(h) => {
          run.lap("extend");
          let mut mismatch = None;
          let gens = tits::group_homs::sl_generators(n, &f);
          for x in &gens {
            if h.apply(x, &f).ok().as_ref() != Some(&hom(x)) {
              mismatch = Some(format!("{:?}", x.to_json(&f).entries));
              break;
            }
          }
          run.check("extension agrees with the plant on generators", mismatch.is_none(), mismatch);
          match classify_hom(&h, &f) {
            Ok(cl) => {
              let conj = cl.conjugator_matrix();
              let expected = g.projective_normal_form(&f);
              run.check("classification found", cl.found, cl.witness.clone());
              run.check("recovered Frobenius exponent", cl.frobenius == plant.frobenius, Some(format!("got {}", cl.frobenius)));
              run.check("recovered duality flag", cl.duality == plant.duality, Some(format!("got {}", cl.duality)));
              run.check("recovered conjugator up to scalar", conj.as_ref() == Some(&expected), Some(format!("{:?}", cl.conjugator)));
              run.result("classification", &cl);
            }
            Err(e) => run.check("classification found", false, Some(e.to_string())),
          }
          run.lap("classify");
          run.result("domain_size", size);
          run.result("exhaustive", matches!(mode, CheckMode::Exhaustive));
        }
        Err(e) => run.check("extension exists", false, Some(e.to_string())),
      }
      Ok(run)
    }
  }
}

fn cmd_stats(c: &Common) -> Result<Run, Failure> {
  let mut run = Run::new("stats", c);
  let fb = FlagBuilding::new(c.n(), c.q())?;
  run.lap("build");
  let b = fb.building();
  run.result("summary", fb.summary());
  run.result("weyl_group_order", b.group().order());
  run.result("sl_order", sl_order(c.n(), c.q()).to_string());
  run.result("opposite_per_chamber", b.opposite_chambers(0).len());
  run.result("e1_size", b.e_neighborhood(0, 1).unwrap().len());
  if let Ok(m) = big_cell_measure(c.n(), fb.field()) {
    run.check("big cell has q^(2 l(w0)) elements", m.big_cell == m.expected, Some(format!("{} vs {}", m.big_cell, m.expected)));
    run.result("big_cell", m);
  }
  run.lap("stats");
  Ok(run)
}

fn cmd_probe(c: &Common) -> Result<Run, Failure> {
  let mut run = Run::new("probe-min-domain", c);
  let fb = FlagBuilding::new(c.n(), c.q())?;
  let b = fb.building();
  let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
  let total = fb.plant_action(&make_plant(&fb, parse_plant(&c.plant)?, &mut rng)?)?;
  let start = parse_domain(&fb, &c.domain)?;
  run.lap("plant");
  let min = probe_min_domain(b, &total, &start);
  run.lap("probe");
  let determined = matches!(
    tits::extender::propagate(b, b, &PartialChamberMap::restrict(&total, &min)),
    Ok(Ok(ref m)) if *m == total
  );
  run.check("final domain determines the plant", determined, Some("propagation does not reproduce the plant".into()));
  run.result("start_size", start.len());
  run.result("final_size", min.len());
  run.result("final_domain", min);
  Ok(run)
}

fn print_text(r: &Report) {
  println!("{} (tits {})", r.command, r.version);
  for c in &r.checks {
    match &c.witness {
      Some(w) => println!("  FAIL {}: {w}", c.name),
      None => println!("  {}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name),
    }
  }
  if let Value::Object(map) = &r.results {
    for (k, v) in map {
      println!("  {k}: {v}");
    }
  }
}

fn main() -> ExitCode {
  let cli = Cli::parse();
  let (outcome, common) = match &cli.command {
    Command::Build(c) => (cmd_build(c, true), c),
    Command::VerifyAxioms(c) => (cmd_build(c, false), c),
    Command::Moufang(a) => (cmd_moufang(a), &a.common),
    Command::Rigidity(a) => (cmd_rigidity(a), &a.common),
    Command::Extend(a) => (cmd_extend(a), &a.common),
    Command::Stats(c) => (cmd_stats(c), c),
    Command::ProbeMinDomain(c) => (cmd_probe(c), c),
  };
  let run = match outcome {
    Ok(run) => run,
    Err(Failure::Usage(msg)) => {
      eprintln!("error: {msg}");
      return ExitCode::from(2);
    }
  };
  let report = run.report;
  let text = serde_json::to_string_pretty(&report).unwrap();
  let is_build = matches!(cli.command, Command::Build(_));
  if let (Some(path), false) = (&common.out, is_build) {
    if let Err(e) = fs::write(path, &text) {
      eprintln!("error: cannot write {}: {e}", path.display());
      return ExitCode::from(2);
    }
  }
  if common.json {
    println!("{text}");
  } else {
    print_text(&report);
  }
  if report.checks.iter().all(|c| c.passed) {
    ExitCode::SUCCESS
  } else {
    ExitCode::from(1)
  }
}
