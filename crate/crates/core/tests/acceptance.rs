//! Acceptance run: one PASS/FAIL line per criterion, with timings against the runtime targets.
//! The process exits nonzero only on a mathematical failure; a missed runtime target is
//! reported on its line as FAIL (runtime).

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use operad_bar::action::{Action, ActionBounds, RhoTable};
use operad_bar::bar::{Bar, BarBounds, BarWord, EAlgebra, Elem, Fixture, FixtureKind};
use operad_bar::cli::{pipeline, RunConfig};
use operad_bar::field::{Lin, Prime};
use operad_bar::operad::axioms::{check_operad_axioms, AxiomBounds};
use operad_bar::operad::DgOperad;
use operad_bar::wcon::{WBounds, WOperad};
use operad_bar::zoo::ainf::build_ainf;
use operad_bar::zoo::barratt_eccles::{check_sdr, BarrattEccles};
use operad_bar::zoo::commutative::Commutative;

/// Tuples drawn per (fixture, generator, length pattern) when the pattern has more.
const SAMPLE_PER_PATTERN: usize = 6;

struct Outcome {
    ok: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { ok: true, notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, note: impl Into<String>) {
        let note = note.into();
        if !ok {
            self.ok = false;
            self.notes.push(format!("FAILED {}", note));
        } else {
            self.notes.push(note);
        }
    }
}

struct Run {
    lines: Vec<String>,
    math_failures: usize,
}

impl Run {
    fn criterion(&mut self, n: &str, name: &str, budget: Option<u64>, f: impl FnOnce() -> Outcome) {
        let t = Instant::now();
        let out = f();
        let dt = t.elapsed();
        let late = budget.is_some_and(|b| dt > Duration::from_secs(b));
        let status = match (out.ok, late) {
            (true, false) => "PASS",
            (true, true) => "FAIL (runtime)",
            (false, _) => "FAIL",
        };
        if !out.ok {
            self.math_failures += 1;
        }
        let target = budget.map_or(String::new(), |b| format!(", target < {} s", b));
        let line = format!("criterion {}: {} {} [{:.1} s{}]", n, status, name, dt.as_secs_f64(), target);
        println!("{}", line);
        for note in &out.notes {
            println!("    {}", note);
        }
        self.lines.push(line);
    }
}

fn prime(p: u32) -> Prime {
    Prime::new(p).unwrap()
}

// 1
fn operad_axioms(p: Prime) -> Outcome {
    let mut out = Outcome::new();
    let c = Commutative::new(p, 6);
    let rep = check_operad_axioms(&c, AxiomBounds::new(6, 0));
    out.check(rep.passed(), format!("C arity ≤ 6: {} checks, {} failures", rep.checks, rep.failures.len()));
    let k = build_ainf(p, 6);
    let rep = check_operad_axioms(&k, AxiomBounds::new(6, 4));
    out.check(rep.passed(), format!("K arity ≤ 6: {} checks, {} failures", rep.checks, rep.failures.len()));
    let t = Instant::now();
    let e = BarrattEccles::new(p, 4, 4);
    let rep = check_operad_axioms(&e, AxiomBounds::new(4, 4));
    out.check(
        rep.passed(),
        format!("E arity ≤ 4, degree ≤ 4: {} checks, {} failures ({:.1} s)", rep.checks, rep.failures.len(), t.elapsed().as_secs_f64()),
    );
    let we = WOperad::new(BarrattEccles::new(p, 3, 2), WBounds { arity_max: 3, edges_max: 2, label_degree_max: 2 }).unwrap();
    let rep = check_operad_axioms(&we, AxiomBounds::new(3, 4));
    out.check(
        rep.passed(),
        format!("W(E) arity ≤ 3, ≤ 2 edges, label degree ≤ 2: {} checks, {} failures", rep.checks, rep.failures.len()),
    );
    for f in rep.failures.iter().take(3) {
        out.notes.push(format!("  {}", f));
    }
    out
}

fn bar_fixtures(p: Prime) -> Vec<FixtureKind> {
    let x_degree = if p.get() == 2 { 0 } else { 2 };
    let mut v: Vec<FixtureKind> = (2..=5).map(|n| FixtureKind::TruncatedPolynomial { n, x_degree }).collect();
    v.push(FixtureKind::Exterior { generators: 2 });
    v.push(FixtureKind::FreeE { generator_degrees: vec![0, 1], weight_max: 2 });
    v
}

// 2
fn bar_d_squared(p: Prime) -> Outcome {
    let mut out = Outcome::new();
    for kind in bar_fixtures(p) {
        let fx = Fixture::new(p, kind.clone()).unwrap();
        let bar = Bar::new(&fx, 6).unwrap();
        // the free fixture is infinite; its letters are cut at degree 2
        let bounds = match kind {
            FixtureKind::FreeE { .. } => BarBounds { length_max: 6, weight_max: 6, degree_max: 7 },
            _ => BarBounds { length_max: 6, weight_max: 30, degree_max: 36 },
        };
        let words = bar.words(bounds);
        let mut bad = 0;
        let mut err = None;
        for w in &words {
            match bar.differential(w).and_then(|d| bar.differential_lin(&d)) {
                Ok(dd) => bad += usize::from(!dd.is_zero()),
                Err(e) => err = Some(e.to_string()),
            }
        }
        out.check(bad == 0 && err.is_none(), format!("{}: {} words, {} with d² ≠ 0 {}", kind, words.len(), bad, err.unwrap_or_default()));
    }
    out
}

// 3
fn sdr_and_homology(p: Prime) -> Outcome {
    let mut out = Outcome::new();
    let sdr = check_sdr(p, 4, 5);
    out.check(sdr.failures.is_empty(), format!("SDR on E(r), r ≤ 4, d ≤ 5: {} words, {} failures", sdr.words, sdr.failures.len()));
    let expect = |d: i64| -> Vec<(i64, usize)> { (0..=d).map(|k| (k, usize::from(k == 0))).collect() };
    let e = BarrattEccles::new(p, 3, 6);
    for r in 1..=3 {
        let h = e.complex(r, 4).unwrap().homology_ranks(0, 4).unwrap();
        out.check(h == expect(4), format!("H(E({})) = {:?}", r, h));
    }
    let w = WOperad::new(Commutative::new(p, 3), WBounds { arity_max: 3, edges_max: 1, label_degree_max: 0 }).unwrap();
    for r in 1..=3 {
        let h = w.complex(r, 3).unwrap().homology_ranks(0, 3).unwrap();
        out.check(h == expect(3), format!("H(W(C)({})) = {:?}", r, h));
    }
    out
}

// 4
fn augmentation(p: Prime) -> Outcome {
    let mut out = Outcome::new();
    let we = WOperad::new(BarrattEccles::new(p, 3, 3), WBounds { arity_max: 3, edges_max: 2, label_degree_max: 3 }).unwrap();
    let (n, f) = we.check_augmentation(3, 3);
    out.check(f.is_empty(), format!("ε: W(E) → E, arity ≤ 3, degree ≤ 3: {} checks, {} failures", n, f.len()));
    for x in f.iter().take(3) {
        out.notes.push(format!("  {}", x));
    }
    out
}

fn gate_bounds() -> ActionBounds {
    ActionBounds { r_max: 3, weight_max: 4, bar_length: 4, degree_max: 3, cell_max: 1 }
}

// 5
fn relation_gate(p: Prime, keep: &mut Option<RhoTable>) -> Outcome {
    let mut out = Outcome::new();
    let action = Action::new(p, gate_bounds()).unwrap();
    match action.build_rho() {
        Ok(table) => {
            let rep = action.verify_relations(&table);
            let checks: usize = rep.checks.values().sum();
            out.check(rep.passed(), format!("{} entries, {} relation checks, {} failures", table.entries.len(), checks, rep.failures.len()));
            for f in rep.failures.iter().take(3) {
                out.notes.push(format!("  {}", f));
            }
            *keep = Some(table);
        }
        Err(e) => out.check(false, format!("build failed: {}", e)),
    }
    out
}

/// Input tuples of r words with total length ≤ `len`, grouped by length pattern; patterns
/// with more than SAMPLE_PER_PATTERN tuples are sampled.
fn tuples(words: &[BarWord<Elem>], r: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<BarWord<Elem>>> {
    let mut by_len: BTreeMap<usize, Vec<&BarWord<Elem>>> = BTreeMap::new();
    for w in words {
        by_len.entry(w.len()).or_default().push(w);
    }
    let mut out = Vec::new();
    let mut pattern = vec![0usize; r];
    loop {
        if pattern.iter().sum::<usize>() <= len && pattern.iter().all(|l| by_len.contains_key(l)) {
            let pools: Vec<&Vec<&BarWord<Elem>>> = pattern.iter().map(|l| &by_len[l]).collect();
            let total: usize = pools.iter().map(|v| v.len()).product();
            if total <= SAMPLE_PER_PATTERN {
                for mut k in 0..total {
                    let mut t = Vec::with_capacity(r);
                    for pool in &pools {
                        t.push(pool[k % pool.len()].clone());
                        k /= pool.len();
                    }
                    out.push(t);
                }
            } else {
                for _ in 0..SAMPLE_PER_PATTERN {
                    out.push(pools.iter().map(|pool| (*pool.choose(rng).unwrap()).clone()).collect());
                }
            }
        }
        // next pattern in [0, len]^r
        let mut i = 0;
        while i < r && pattern[i] == len {
            pattern[i] = 0;
            i += 1;
        }
        if i == r {
            break;
        }
        pattern[i] += 1;
    }
    out
}

// 6
fn chain_and_hopf(table: &RhoTable) -> Outcome {
    let mut out = Outcome::new();
    let p = table.prime;
    let action = Action::new(p, table.bounds).unwrap();
    let ev = action.evaluator(table);
    let gens = action.generators().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for kind in bar_fixtures(p) {
        let fx = Fixture::new(p, kind.clone()).unwrap();
        let bar = Bar::new(&fx, table.bounds.bar_length).unwrap();
        let words = bar.words(BarBounds { length_max: 4, weight_max: 4, degree_max: 8 });
        let (mut n_chain, mut n_hopf, mut bad) = (0, 0, Vec::new());
        for g in &gens {
            let r = action.q().arity(g);
            for t in tuples(&words, r, 4, &mut rng) {
                n_chain += 1;
                match ev.chain_map_defect(&bar, g, &t) {
                    Ok(d) if d.is_zero() => {}
                    Ok(d) => bad.push(format!("chain map at {} on {:?}: defect {}", g, t, d)),
                    Err(e) => bad.push(format!("chain map at {}: {}", g, e)),
                }
                if t.iter().map(|w| w.len()).sum::<usize>() <= 3 {
                    n_hopf += 1;
                    match ev.hopf_defect(&bar, g, &t) {
                        Ok(d) if d.is_zero() => {}
                        Ok(_) => bad.push(format!("coalgebra map at {} on {:?}", g, t)),
                        Err(e) => bad.push(format!("coalgebra map at {}: {}", g, e)),
                    }
                }
            }
        }
        out.check(
            bad.is_empty(),
            format!("{}: {} generators, {} chain-map tuples, {} coalgebra tuples, {} failures", kind, gens.len(), n_chain, n_hopf, bad.len()),
        );
        for b in bad.iter().take(3) {
            out.notes.push(format!("  {}", b));
        }
    }
    out
}

// 7
fn commutative_reduction(table: &RhoTable) -> Outcome {
    let mut out = Outcome::new();
    let p = table.prime;
    let action = Action::new(p, table.bounds).unwrap();
    let ev = action.evaluator(table);
    let q = action.q();
    let binary = q.basis(2, 0).unwrap();
    for kind in bar_fixtures(p) {
        let fx = Fixture::new(p, kind.clone()).unwrap();
        if !fx.is_commutative() {
            continue;
        }
        let bar = Bar::new(&fx, 4).unwrap();
        let words = bar.words(BarBounds { length_max: 4, weight_max: 16, degree_max: 16 });
        let (mut n, mut bad) = (0, Vec::new());
        for x in &binary {
            for u in &words {
                for v in words.iter().filter(|v| u.len() + v.len() <= 4) {
                    n += 1;
                    let got = ev.evaluate(&bar, x, &[u.clone(), v.clone()]);
                    let want = bar.shuffle_product(u, v);
                    if got.as_ref() != Ok(&want) {
                        bad.push(format!("{} on {} ⊗ {}: {:?} vs {}", x, u, v, got, want));
                    }
                }
            }
        }
        out.check(bad.is_empty(), format!("{}: {} degree-0 binary operations, {} pairs, {} mismatches", kind, binary.len(), n, bad.len()));
        for b in bad.iter().take(3) {
            out.notes.push(format!("  {}", b));
        }
    }

    // ε-projection of the degree-0 rows: the shuffle datum is ε(ξ) on m = e_i and 0 otherwise
    let e = BarrattEccles::new(p, 4, 0);
    let proj = |x: &Lin<operad_bar::zoo::barratt_eccles::BeWord>| -> u32 {
        x.iter().fold(0, |acc, (w, c)| p.add(acc, p.mul(c, e.augmentation(w))))
    };
    let (mut n, mut bad) = (0, Vec::new());
    for g in action.generators().unwrap().iter().filter(|g| q.degree(g) == 0) {
        let r = q.arity(g);
        let eps = q.augmentation(g).unwrap();
        let eps = proj(&eps);
        for total in 0..=table.bounds.weight_max {
            for m in weight_vectors(r, total) {
                n += 1;
                let unit = m.iter().sum::<usize>() == 1;
                let want = if unit { eps } else { 0 };
                match ev.rho(g, &m) {
                    Ok(v) if proj(&v) == want => {}
                    Ok(v) => bad.push(format!("{} {:?}: projection {} of {}, datum {}", g, m, proj(&v), v, want)),
                    Err(err) => bad.push(format!("{} {:?}: {}", g, m, err)),
                }
            }
        }
    }
    out.check(bad.is_empty(), format!("ε-projection of degree-0 rows: {} components, {} mismatches", n, bad.len()));
    for b in bad.iter().take(3) {
        out.notes.push(format!("  {}", b));
    }
    out
}

fn weight_vectors(r: usize, total: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in weight_vectors(r - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

// 9
fn determinism() -> Outcome {
    let mut out = Outcome::new();
    let dir = std::env::temp_dir().join(format!("operad-bar-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = RunConfig::default();
    let mut files = Vec::new();
    for run in 0..2 {
        match pipeline(&cfg) {
            Ok(map) => {
                for (name, text) in &map {
                    let path = dir.join(format!("{}-{}.txt", name, run));
                    std::fs::write(&path, text).unwrap();
                    files.push((name.clone(), run, path));
                }
            }
            Err(e) => {
                out.check(false, format!("pipeline failed: {}", e));
                return out;
            }
        }
    }
    for name in ["table", "report"] {
        let read = |run| {
            let path = &files.iter().find(|(n, r, _)| n == name && *r == run).unwrap().2;
            std::fs::read(path).unwrap()
        };
        let (a, b) = (read(0), read(1));
        out.check(a == b, format!("{} files: {} bytes, identical: {}", name, a.len(), a == b));
    }
    let _ = std::fs::remove_dir_all(&dir);
    out
}

fn main() {
    let mut run = Run { lines: Vec::new(), math_failures: 0 };
    let p2 = prime(2);
    let p3 = prime(3);
    let mut table2 = None;
    run.criterion("1", "operad axioms for C, K, E, W(E)", Some(60), || operad_axioms(p2));
    run.criterion("2", "bar differential squares to zero", Some(60), || bar_d_squared(p2));
    run.criterion("3", "SDR and acyclicity of E and W(C)", Some(120), || sdr_and_homology(p2));
    run.criterion("4", "ε: W(E) → E is an operad morphism and chain map", None, || augmentation(p2));
    run.criterion("5", "relation gate at r ≤ 3, weight ≤ 4, cells ≤ 1", Some(300), || relation_gate(p2, &mut table2));
    match &table2 {
        Some(t) => {
            run.criterion("6", "chain-map and coalgebra-map checks", Some(300), || chain_and_hopf(t));
            run.criterion("7", "commutative reduction to the shuffle product", None, || commutative_reduction(t));
        }
        None => {
            run.criterion("6", "chain-map and coalgebra-map checks", Some(300), || {
                let mut o = Outcome::new();
                o.check(false, "no table");
                o
            });
            run.criterion("7", "commutative reduction to the shuffle product", None, || {
                let mut o = Outcome::new();
                o.check(false, "no table");
                o
            });
        }
    }
    let mut table3 = None;
    run.criterion("8.1", "p = 3: operad axioms", Some(60), || operad_axioms(p3));
    run.criterion("8.2", "p = 3: bar differential", Some(60), || bar_d_squared(p3));
    run.criterion("8.3", "p = 3: SDR and acyclicity", Some(120), || sdr_and_homology(p3));
    run.criterion("8.4", "p = 3: augmentation", None, || augmentation(p3));
    run.criterion("8.5", "p = 3: relation gate", Some(300), || relation_gate(p3, &mut table3));
    run.criterion("9", "determinism of the default pipeline", None, determinism);

    println!();
    println!("summary");
    for l in &run.lines {
        println!("  {}", l);
    }
    if run.math_failures > 0 {
        std::process::exit(1);
    }
}
