//! Batch front end: run configuration and the subcommands behind the `operad-bar` binary.
//! Every command returns its report text and an exit status (0 success, 1 verification
//! failure, 2 usage or configuration error).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::action::{Action, ActionBounds, QElem, RhoTable};
use crate::bar::{Bar, BarBounds, BarWord, Elem, Fixture, FixtureKind};
use crate::field::{Lin, Prime};
use crate::operad::axioms::{check_hopf, check_operad_axioms, AxiomBounds};
use crate::operad::DgOperad;
use crate::wcon::{WBounds, WOperad};
use crate::zoo::ainf::build_ainf;
use crate::zoo::barratt_eccles::{check_sdr, BarrattEccles};
use crate::zoo::commutative::Commutative;
use crate::zoo::k_to_e::KToE;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub prime: u32,
    pub arity_max: usize,
    pub degree_max: i64,
    pub weight_max: usize,
    pub bar_length: usize,
    pub cell_max: usize,
    pub fixture: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            prime: 2,
            arity_max: 3,
            degree_max: 3,
            weight_max: 4,
            bar_length: 4,
            cell_max: 1,
            fixture: "ext:2".into(),
            seed: 20_240_917,
            out: None,
        }
    }
}

/// The outcome of a command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub text: String,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { code: EXIT_OK, text }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Outcome { code: EXIT_USAGE, text: format!("error: {}\n", msg.into()) }
    }
}

impl RunConfig {
    /// Reads `key = value` lines; `#` starts a comment. Keys mirror the long flags.
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        let mut c = RunConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            c.set(k.trim(), v.trim()).map_err(|e| format!("line {}: {}", n + 1, e))?;
        }
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad value {:?} for {}", v, k))
        }
        match key {
            "prime" => self.prime = num(key, v)?,
            "arity-max" => self.arity_max = num(key, v)?,
            "degree-max" => self.degree_max = num(key, v)?,
            "weight-max" => self.weight_max = num(key, v)?,
            "bar-length" => self.bar_length = num(key, v)?,
            "cell-max" => self.cell_max = num(key, v)?,
            "fixture" => self.fixture = v.to_string(),
            "seed" => self.seed = num(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(format!("unknown key {}", key)),
        }
        Ok(())
    }

    pub fn prime(&self) -> Result<Prime, String> {
        let p = Prime::new(self.prime).map_err(|e| e.to_string())?;
        if p.get() > 3 {
            return Err(format!("only p = 2 and p = 3 are supported, got {}", p));
        }
        Ok(p)
    }

    pub fn action_bounds(&self) -> ActionBounds {
        ActionBounds {
            r_max: self.arity_max,
            weight_max: self.weight_max,
            bar_length: self.bar_length,
            degree_max: self.degree_max,
            cell_max: self.cell_max,
        }
    }

    fn validate(&self) -> Result<Prime, String> {
        let p = self.prime()?;
        if self.arity_max == 0 || self.weight_max == 0 || self.bar_length == 0 || self.degree_max < 0 {
            return Err("bounds must be positive".into());
        }
        self.action_bounds().validate().map_err(|e| e.to_string())?;
        Ok(p)
    }
}

macro_rules! usage {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return Outcome::usage(e.to_string()),
        }
    };
}

/// Axiom, SDR and Hopf checks for C, K, E and W(E), the chain map K → E, ε: W(E) → E, and the
/// relation gate on a freshly built table (optionally corrupted).
pub fn check_operads(cfg: &RunConfig, corrupt: Option<usize>) -> Outcome {
    let p = usage!(cfg.validate());
    let r = cfg.arity_max;
    let d = cfg.degree_max;
    let mut text = String::new();
    let mut failed = false;
    let mut section = |name: &str, ok: bool, body: String| {
        failed |= !ok;
        let _ = writeln!(text, "[{}] {}", if ok { "ok" } else { "FAIL" }, name);
        text.push_str(&body);
    };
    let c = Commutative::new(p, 6);
    let rep = check_operad_axioms(&c, AxiomBounds::new(6, 0));
    section("axioms C", rep.passed(), rep.render());
    let k = build_ainf(p, 6);
    let rep = check_operad_axioms(&k, AxiomBounds::new(6, 4));
    section("axioms K", rep.passed(), rep.render());
    let e = BarrattEccles::new(p, r.max(2), d);
    let rep = check_operad_axioms(&e, AxiomBounds::new(r, d));
    section("axioms E", rep.passed(), rep.render());
    let rep = check_hopf(&e, AxiomBounds::new(r, d));
    section("Hopf E", rep.passed(), rep.render());
    let sdr = check_sdr(p, r, d as usize + 1);
    section(
        "SDR E",
        sdr.failures.is_empty(),
        format!("{} words, {} failures\n{}", sdr.words, sdr.failures.len(), lines(&sdr.failures)),
    );
    let e6 = BarrattEccles::new(p, 6, 4);
    match KToE::build(&k, &e6).and_then(|phi| phi.check_chain_map(&k, &e6)) {
        Ok(f) => section("K → E chain map", f.is_empty(), lines(&f)),
        Err(err) => section("K → E chain map", false, format!("{}\n", err)),
    }
    let wb = WBounds { arity_max: r.max(2), edges_max: r.saturating_sub(2).max(1), label_degree_max: 2.min(d) };
    let we = usage!(WOperad::new(BarrattEccles::new(p, r.max(2), d), wb));
    let rep = check_operad_axioms(&we, AxiomBounds::new(r, d));
    section("axioms W(E)", rep.passed(), rep.render());
    let rep = check_hopf(&we, AxiomBounds::new(r, d.min(3)));
    section("Hopf W(E)", rep.passed(), rep.render());
    let (n, f) = we.check_augmentation(r, d);
    section("ε: W(E) → E", f.is_empty(), format!("{} checks, {} failures\n{}", n, f.len(), lines(&f)));
    let action = usage!(Action::new(p, cfg.action_bounds()));
    match action.build_rho() {
        Ok(mut table) => {
            let mut note = String::new();
            if let Some(i) = corrupt {
                match table.corrupt(i) {
                    Some((g, m)) => note = format!("corrupted entry {} {}\n", g, m),
                    None => return Outcome::usage(format!("table has no nonzero entry number {}", i)),
                }
            }
            let rep = action.verify_relations(&table);
            section("relations of ρ", rep.passed(), note + &rep.render());
        }
        Err(err) => section("relations of ρ", false, format!("{}\n", err)),
    }
    Outcome { code: if failed { EXIT_FAIL } else { EXIT_OK }, text }
}

fn lines(v: &[String]) -> String {
    v.iter().map(|s| format!("  {}\n", s)).collect()
}

pub fn build_rho(cfg: &RunConfig) -> Outcome {
    let p = usage!(cfg.validate());
    let action = usage!(Action::new(p, cfg.action_bounds()));
    match action.build_rho() {
        Ok(t) => Outcome::ok(t.serialize()),
        Err(e) => Outcome { code: EXIT_FAIL, text: format!("error: {}\n", e) },
    }
}

/// Verifies the relations on a table. With a fixture, also samples chain-map and coalgebra-map
/// checks of the evaluated operations, seeded from the configuration.
pub fn verify_rho(cfg: &RunConfig, table_text: &str, corrupt: Option<usize>, fixture: Option<&str>) -> Outcome {
    let mut table = usage!(RhoTable::parse(table_text));
    let action = usage!(Action::new(table.prime, table.bounds));
    let mut text = String::new();
    if let Some(i) = corrupt {
        match table.corrupt(i) {
            Some((g, m)) => text = format!("corrupted entry {} {}\n", g, m),
            None => return Outcome::usage(format!("table has no nonzero entry number {}", i)),
        }
    }
    let rep = action.verify_relations(&table);
    text.push_str(&rep.render());
    let mut ok = rep.passed();
    if let Some(f) = fixture {
        let kind = usage!(FixtureKind::parse(f));
        let fx = usage!(Fixture::new(table.prime, kind));
        let (n, fails) = match sampled_action_checks(&action, &table, &fx, cfg.seed, 6) {
            Ok(v) => v,
            Err(e) => return Outcome { code: EXIT_FAIL, text: text + &format!("error: {}\n", e) },
        };
        let _ = writeln!(text, "sampled chain-map and Hopf checks on {}: {} tuples, {} failures", f, n, fails.len());
        text.push_str(&lines(&fails));
        ok &= fails.is_empty();
    }
    Outcome { code: if ok { EXIT_OK } else { EXIT_FAIL }, text }
}

/// For each generator of the table, `per_generator` seeded random input tuples of total
/// length ≤ min(weight_max, 3).
pub fn sampled_action_checks(
    action: &Action,
    table: &RhoTable,
    fx: &Fixture,
    seed: u64,
    per_generator: usize,
) -> Result<(usize, Vec<String>), crate::operad::OperadError> {
    let b = action.bounds();
    let bar = Bar::new(fx, b.bar_length)?;
    let len = b.weight_max.min(3);
    let words = bar.words(BarBounds { length_max: len, weight_max: 2 * len, degree_max: 3 * len as i64 });
    let ev = action.evaluator(table);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = 0;
    let mut fails = Vec::new();
    for g in action.generators()? {
        let r = action.q().arity(&g);
        let mut drawn = 0;
        let mut attempts = 0;
        while drawn < per_generator && attempts < 50 * per_generator {
            attempts += 1;
            let tuple: Vec<BarWord<Elem>> = (0..r).map(|_| words.choose(&mut rng).expect("nonempty").clone()).collect();
            if tuple.iter().map(|w| w.len()).sum::<usize>() > len {
                continue;
            }
            drawn += 1;
            n += 1;
            let show = || format!("{} on {}", g, tuple.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" ⊗ "));
            if !ev.chain_map_defect(&bar, &g, &tuple)?.is_zero() {
                fails.push(format!("chain map fails for {}", show()));
            }
            if !ev.hopf_defect(&bar, &g, &tuple)?.is_zero() {
                fails.push(format!("coalgebra map fails for {}", show()));
            }
        }
    }
    Ok((n, fails))
}

/// Parses `[a|b|…]` with letters in the fixture's display form.
pub fn parse_bar_word(fx: &Fixture, s: &str) -> Result<BarWord<Elem>, String> {
    let body = s.trim().strip_prefix('[').and_then(|x| x.strip_suffix(']')).ok_or_else(|| format!("bad bar word {:?}", s))?;
    if body.trim().is_empty() {
        return Ok(BarWord::empty());
    }
    let mut out = Vec::new();
    for tok in body.split('|') {
        let x = fx.parse_element(tok).map_err(|e| e.to_string())?;
        let mut it = x.iter();
        match (it.next(), it.next()) {
            (Some((a, 1)), None) => out.push(a.clone()),
            _ => return Err(format!("letter {:?} is not a basis element", tok)),
        }
    }
    Ok(BarWord(out))
}

pub fn act(table_text: &str, fixture: &str, q: &str, inputs: &[String]) -> Outcome {
    let table = usage!(RhoTable::parse(table_text));
    let action = usage!(Action::new(table.prime, table.bounds));
    let kind = usage!(FixtureKind::parse(fixture));
    let fx = usage!(Fixture::new(table.prime, kind));
    let x: QElem = usage!(action.parse_element(q));
    let words: Vec<BarWord<Elem>> = usage!(inputs.iter().map(|s| parse_bar_word(&fx, s)).collect::<Result<Vec<_>, _>>());
    let bar = usage!(Bar::new(&fx, table.bounds.bar_length));
    let ev = action.evaluator(&table);
    match ev.evaluate(&bar, &x, &words) {
        Ok(v) => Outcome::ok(format!("{}\n", v)),
        Err(e) => Outcome { code: EXIT_FAIL, text: format!("error: {}\n", e) },
    }
}

/// Homology ranks of `E:r`, `W(C):r`, `W(E):r` or `bar:<fixture>` in degrees 0..=degree_max.
pub fn homology(cfg: &RunConfig, complex: &str) -> Outcome {
    let p = usage!(cfg.validate());
    let d = cfg.degree_max;
    let (kind, arg) = usage!(complex.split_once(':').ok_or("expected KIND:ARG"));
    let arity = || arg.parse::<usize>().map_err(|_| format!("bad arity {:?}", arg));
    let ranks = match kind {
        "E" => {
            let r = usage!(arity());
            let e = BarrattEccles::new(p, r.max(1), d + 1);
            e.complex(r, d as usize).and_then(|c| c.homology_ranks(0, d)).map_err(|e| e.to_string())
        }
        "W(C)" => {
            let r = usage!(arity());
            let wb = WBounds { arity_max: r.max(2), edges_max: r.saturating_sub(2), label_degree_max: 0 };
            let w = usage!(WOperad::new(Commutative::new(p, r.max(2)), wb));
            w.complex(r, d).map_err(|e| e.to_string()).and_then(|c| c.homology_ranks(0, d).map_err(|e| e.to_string()))
        }
        "W(E)" => {
            let r = usage!(arity());
            let wb = WBounds { arity_max: r.max(2), edges_max: r.saturating_sub(2), label_degree_max: d + 1 };
            let w = usage!(WOperad::new(BarrattEccles::new(p, r.max(2), d + 1), wb));
            w.complex(r, d).map_err(|e| e.to_string()).and_then(|c| c.homology_ranks(0, d).map_err(|e| e.to_string()))
        }
        "bar" => {
            let kind = usage!(FixtureKind::parse(arg));
            let fx = usage!(Fixture::new(p, kind));
            let bar = usage!(Bar::new(&fx, cfg.bar_length));
            let b = BarBounds { length_max: cfg.bar_length, weight_max: cfg.weight_max, degree_max: d + 1 };
            bar.complex(b).and_then(|c| c.homology_ranks(0, d)).map_err(|e| e.to_string())
        }
        _ => return Outcome::usage(format!("unknown complex {:?}", kind)),
    };
    match ranks {
        Ok(r) => {
            let parts: Vec<String> = r.iter().map(|(d, k)| format!("({},{})", d, k)).collect();
            Outcome::ok(format!("[{}]\n", parts.join(",")))
        }
        Err(e) => Outcome { code: EXIT_FAIL, text: format!("error: {}\n", e) },
    }
}

/// DOT for an element of W(E), given as `<element>` or `graft:<x>;<i>;<y>` for x ∘_i y.
pub fn draw(cfg: &RunConfig, object: &str) -> Outcome {
    let p = usage!(cfg.validate());
    let action = usage!(Action::new(p, ActionBounds { degree_max: cfg.degree_max.min(3), ..cfg.action_bounds() }));
    let q = action.q();
    let x: Lin<QElem> = if let Some(rest) = object.strip_prefix("graft:") {
        let parts: Vec<&str> = rest.split(';').collect();
        if parts.len() != 3 {
            return Outcome::usage("expected graft:<x>;<i>;<y>");
        }
        let a = usage!(action.parse_element(parts[0]));
        let i: usize = usage!(parts[1].trim().parse::<usize>());
        let b = usage!(action.parse_element(parts[2]));
        usage!(q.compose(&a, i, &b))
    } else {
        Lin::basis(p, usage!(action.parse_element(object)))
    };
    let mut text = String::new();
    for (k, (y, c)) in x.iter().enumerate() {
        if c != 1 {
            let _ = writeln!(text, "// coefficient {}", p.signed(c));
        }
        text.push_str(&q.to_dot(&format!("w{}", k + 1), y));
    }
    Outcome::ok(text)
}

/// Runs the full default pipeline: table, relation report and a seeded sample of action checks.
pub fn pipeline(cfg: &RunConfig) -> Result<BTreeMap<String, String>, String> {
    let p = cfg.validate()?;
    let action = Action::new(p, cfg.action_bounds()).map_err(|e| e.to_string())?;
    let table = action.build_rho().map_err(|e| e.to_string())?;
    let rep = action.verify_relations(&table);
    let fx = Fixture::new(p, FixtureKind::parse(&cfg.fixture).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let (n, f) = sampled_action_checks(&action, &table, &fx, cfg.seed, 2).map_err(|e| e.to_string())?;
    let mut out = BTreeMap::new();
    out.insert("table".to_string(), table.serialize());
    out.insert("report".to_string(), format!("{}sampled {} tuples, {} failures\n{}", rep.render(), n, f.len(), lines(&f)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_files_mirror_flags() {
        let c = RunConfig::parse("prime = 3\n# comment\narity-max=2\nfixture = poly:3:2 # trailing\n").unwrap();
        assert_eq!((c.prime, c.arity_max, c.fixture.as_str()), (3, 2, "poly:3:2"));
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("prime").is_err());
        let bad = RunConfig { prime: 5, ..RunConfig::default() };
        assert_eq!(homology(&bad, "E:2").code, EXIT_USAGE);
    }

    #[test]
    fn homology_of_wc2() {
        let c = RunConfig { degree_max: 2, ..RunConfig::default() };
        assert_eq!(homology(&c, "W(C):2").text, "[(0,1),(1,0),(2,0)]\n");
        assert_eq!(homology(&c, "E:3").text, "[(0,1),(1,0),(2,0)]\n");
        assert_eq!(homology(&c, "X:3").code, EXIT_USAGE);
    }
}
