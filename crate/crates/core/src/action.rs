//! The Hopf operad action of Q = W(E) on bar complexes of E-algebras.
//!
//! An operation q ∈ Q(r) acts by a coalgebra morphism ∇(q): B(A)^{⊗r} → B(A), determined by
//! its components ρ_m(q) ∈ ΛE(m_1+…+m_r): the corestriction of ∇(q) to inputs of lengths
//! m_1, …, m_r is Θ(ρ_m(q)) applied to the concatenated letters. The components satisfy
//!
//! - (a) ρ_(1)(1) = 1 and ρ_m(1) = 0 otherwise;
//! - (b) ρ_m(w·q) = W·ρ_{m∘w}(q) with W the block permutation, and ρ_m(q) = ρ_m̂(q ∘_i *)
//!   when m_i = 0;
//! - (c) ρ_l(p ∘_i q) = Σ Δ^k(q) · shuffle · γ(ρ_{(l_<,k,l_>)}(p); 1, …, ρ_{n^1}(q^1), …, ρ_{n^k}(q^k), …, 1);
//! - (d) δρ_m(q) = ρ_m(dq) − out_m(q) + (−1)^{|q|} in_m(q), where out_m collects
//!   γ(μ₂; ρ_{m'}(q'), ρ_{m''}(q'')) over Δq and m = m' + m'', and in_m collects ρ_{m−e_i}(q) ∘_t μ₂.
//!
//! Here μ₂ = s⊗id ∈ ΛE(2) is the image of the A∞ product, the only nonzero one. On a cell
//! generator ξ with all m_i ≥ 1, ρ_m(ξ) is defined as ν applied to the right side of (d).

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::bar::{Bar, BarWord, EAlgebra, TensorWord};
use crate::field::{Lin, Prime};
use crate::linear::Pair;
use crate::operad::matching::WeightVector;
use crate::operad::suspension::Suspension;
use crate::operad::{d_lin, full_compose, DgOperad, HopfOperad, OpResult, OperadError};
use crate::perm::{bloc_permutation, Permutation};
use crate::tree::{Len, Tree};
use crate::wcon::{WBounds, WElem, WOperad};
use crate::zoo::barratt_eccles::{BarrattEccles, BeWord, MAX_ARITY, MAX_LEN};

pub type QOperad = WOperad<BarrattEccles>;
pub type QElem = WElem<BeWord>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error("inconsistent bounds: {0}")]
    Bounds(String),
    #[error(transparent)]
    Operad(#[from] OperadError),
    #[error("table line {line}: {why}")]
    Parse { line: usize, why: String },
}

/// Truncation of the action: arity of Q, total weight Σm_i, bar length, degree of the
/// operations of Q, and number of x01 edges of the cell generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActionBounds {
    pub r_max: usize,
    pub weight_max: usize,
    pub bar_length: usize,
    pub degree_max: i64,
    pub cell_max: usize,
}

impl Default for ActionBounds {
    fn default() -> Self {
        ActionBounds { r_max: 3, weight_max: 4, bar_length: 4, degree_max: 2, cell_max: 1 }
    }
}

impl ActionBounds {
    pub fn validate(&self) -> Result<(), ActionError> {
        let bad = |s: &str| Err(ActionError::Bounds(s.to_string()));
        if self.r_max == 0 || self.weight_max == 0 {
            return bad("r_max and weight_max must be positive");
        }
        if self.weight_max > self.bar_length {
            return bad("weight_max must not exceed the bar length");
        }
        if self.bar_length > MAX_ARITY || self.r_max > MAX_ARITY {
            return bad("arities above 8 are not supported");
        }
        if self.degree_max < 0 {
            return bad("degree_max must be nonnegative");
        }
        // ρ_m(q) lives in E-degree |q| + Σm - 1
        if self.degree_max + self.weight_max as i64 > MAX_LEN as i64 - 1 {
            return bad("degree_max + weight_max exceeds the stored Barratt-Eccles degrees");
        }
        Ok(())
    }
}

/// How a table entry was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Unit,
    Nu,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableEntry {
    pub generator: QElem,
    pub weights: WeightVector,
    pub value: Lin<BeWord>,
    pub rule: Rule,
}

/// The components ρ_m(ξ) on orbit representatives ξ of the cell generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhoTable {
    pub prime: Prime,
    pub bounds: ActionBounds,
    pub entries: Vec<TableEntry>,
}

impl RhoTable {
    pub fn get(&self, generator: &QElem, weights: &[usize]) -> Option<&Lin<BeWord>> {
        self.entries.iter().find(|e| &e.generator == generator && e.weights.0 == weights).map(|e| &e.value)
    }

    /// Multiplies the `index`-th nonzero entry by 2. Used as a negative control.
    pub fn corrupt(&mut self, index: usize) -> Option<(QElem, WeightVector)> {
        let p = self.prime;
        let e = self.entries.iter_mut().filter(|e| !e.value.is_zero()).nth(index)?;
        e.value = e.value.scaled(p.reduce(2));
        Some((e.generator.clone(), e.weights.clone()))
    }

    pub fn serialize(&self) -> String {
        let b = &self.bounds;
        let mut s = format!(
            "# prime={} r_max={} weight_max={} bar_length={} degree_max={} cell_max={}\n",
            self.prime, b.r_max, b.weight_max, b.bar_length, b.degree_max, b.cell_max
        );
        for e in &self.entries {
            s.push_str(&format!("{} ; {} ; {}\n", e.generator, e.weights, e.value));
        }
        s
    }

    pub fn parse(text: &str) -> Result<RhoTable, ActionError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, why: &str| ActionError::Parse { line: line + 1, why: why.to_string() };
        let (n0, head) = lines.next().ok_or_else(|| bad(0, "empty table"))?;
        let head = head.strip_prefix('#').ok_or_else(|| bad(n0, "missing header"))?;
        let mut kv = HashMap::new();
        for tok in head.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad(n0, "malformed header"))?;
            let v: i64 = v.parse().map_err(|_| bad(n0, "malformed header"))?;
            kv.insert(k.to_string(), v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(n0, &format!("header lacks {}", k)));
        let prime = Prime::new(get("prime")? as u32).map_err(|e| bad(n0, &e.to_string()))?;
        let bounds = ActionBounds {
            r_max: get("r_max")? as usize,
            weight_max: get("weight_max")? as usize,
            bar_length: get("bar_length")? as usize,
            degree_max: get("degree_max")?,
            cell_max: get("cell_max")? as usize,
        };
        bounds.validate()?;
        let action = Action::new(prime, bounds)?;
        let mut entries = Vec::new();
        for (n, line) in lines {
            let parts: Vec<&str> = line.split(" ; ").collect();
            if parts.len() != 3 {
                return Err(bad(n, "expected `generator ; weights ; value`"));
            }
            let generator = action.parse_element(parts[0]).map_err(|_| bad(n, "bad generator"))?;
            let weights = parts[1]
                .trim()
                .strip_prefix('(')
                .and_then(|x| x.strip_suffix(')'))
                .ok_or_else(|| bad(n, "bad weights"))?
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(n, "bad weights"))?;
            let value = Lin::parse_with(prime, parts[2], |s| BeWord::parse(s).ok()).ok_or_else(|| bad(n, "bad value"))?;
            let rule = if generator == action.q.unit_elem() { Rule::Unit } else { Rule::Nu };
            entries.push(TableEntry { generator, weights: WeightVector(weights), value, rule });
        }
        Ok(RhoTable { prime, bounds, entries })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Clause {
    Unit,
    Permutation,
    Composition,
    Differential,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Clause::Unit => "(a) unit",
            Clause::Permutation => "(b) permutation",
            Clause::Composition => "(c) composition",
            Clause::Differential => "(d) differential",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub clause: Clause,
    pub at: String,
    pub weights: String,
    pub detail: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fails at {} {}: {}", self.clause, self.at, self.weights, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub checks: BTreeMap<String, usize>,
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn count(&mut self, c: Clause) {
        *self.checks.entry(c.to_string()).or_default() += 1;
    }

    fn fail(&mut self, clause: Clause, at: &QElem, m: &[usize], detail: String) {
        self.failures.push(Failure { clause, at: at.to_string(), weights: WeightVector(m.to_vec()).to_string(), detail });
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, n) in &self.checks {
            s.push_str(&format!("{}: {} checks\n", k, n));
        }
        s.push_str(&format!("failures: {}\n", self.failures.len()));
        for f in &self.failures {
            s.push_str(&format!("{}\n", f));
        }
        s
    }
}

/// Q = W(E) and ΛE at compatible bounds.
pub struct Action {
    q: QOperad,
    le: Suspension<BarrattEccles>,
    bounds: ActionBounds,
    m2: BeWord,
}

type Key = (QElem, Vec<usize>);

impl Action {
    pub fn new(prime: Prime, bounds: ActionBounds) -> Result<Action, ActionError> {
        bounds.validate()?;
        let arity = bounds.r_max.max(bounds.bar_length).max(2);
        let e = BarrattEccles::new(prime, arity, MAX_LEN as i64 - 1);
        let wb = WBounds {
            arity_max: bounds.r_max.max(2),
            edges_max: bounds.r_max.saturating_sub(2).max(bounds.cell_max),
            label_degree_max: bounds.degree_max,
        };
        let q = WOperad::new(e, wb)?;
        Ok(Action { q, le: Suspension::new(e), bounds, m2: BeWord::identity(2) })
    }

    pub fn prime(&self) -> Prime {
        self.q.prime()
    }

    pub fn bounds(&self) -> ActionBounds {
        self.bounds
    }

    pub fn q(&self) -> &QOperad {
        &self.q
    }

    pub fn lambda_e(&self) -> &Suspension<BarrattEccles> {
        &self.le
    }

    /// Parses an element of Q in display form.
    pub fn parse_element(&self, s: &str) -> OpResult<QElem> {
        if s.trim() == "1" {
            return Ok(self.q.unit_elem());
        }
        self.q.parse(s, |l| BeWord::parse(l).ok()).map_err(|e| OperadError::Unsupported(e.to_string()))
    }

    fn cell_degree(x: &QElem) -> usize {
        x.tree().map(|t| t.internal_lengths().iter().filter(|l| **l == Len::X01).count()).unwrap_or(0)
    }

    /// Orbit representatives of the cell generators within bounds, in recursion order.
    pub fn generators(&self) -> OpResult<Vec<QElem>> {
        let ev = Rho::new(self, HashMap::new(), false);
        let mut out = Vec::new();
        for d in 0..=self.bounds.cell_max {
            for r in 2..=self.bounds.r_max {
                for x in self.q.cells(d, r)? {
                    if self.q.degree(&x) <= self.bounds.degree_max && ev.orbit(&x)?.2 == x {
                        out.push(x);
                    }
                }
            }
        }
        out.sort_by_cached_key(|x| (Action::cell_degree(x), self.q.degree(x), x.clone()));
        Ok(out)
    }

    /// Table keys in recursion order: cell degree, total weight, degree, generator, weights.
    fn keys(&self) -> OpResult<Vec<Key>> {
        let mut keys = Vec::new();
        for g in self.generators()? {
            let r = self.q.arity(&g);
            for total in r..=self.bounds.weight_max {
                for m in positive_compositions(total, r) {
                    keys.push((g.clone(), m));
                }
            }
        }
        keys.sort_by_cached_key(|(g, m)| {
            (Action::cell_degree(g), m.iter().sum::<usize>(), self.q.degree(g), g.clone(), m.clone())
        });
        Ok(keys)
    }

    /// Runs the recursion over all cell generators within bounds.
    pub fn build_rho(&self) -> OpResult<RhoTable> {
        let p = self.prime();
        let ev = Rho::new(self, HashMap::new(), true);
        let mut entries = vec![TableEntry {
            generator: self.q.unit_elem(),
            weights: WeightVector(vec![1]),
            value: Lin::basis(p, BeWord::identity(1)),
            rule: Rule::Unit,
        }];
        for (g, m) in self.keys()? {
            let value = ev.entry(&g, &m)?;
            entries.push(TableEntry { generator: g, weights: WeightVector(m), value, rule: Rule::Nu });
        }
        Ok(RhoTable { prime: p, bounds: self.bounds, entries })
    }

    /// An evaluator reading generator components from the table, without extending it.
    pub fn evaluator(&self, table: &RhoTable) -> Rho<'_> {
        let mut map = HashMap::new();
        for e in &table.entries {
            if e.rule == Rule::Nu {
                map.insert((e.generator.clone(), e.weights.0.clone()), e.value.clone());
            }
        }
        Rho::new(self, map, false)
    }

    /// Re-checks relations (a)–(d) on the table, recomputing every right-hand side from the
    /// stored entries.
    pub fn verify_relations(&self, table: &RhoTable) -> VerifyReport {
        let mut rep = VerifyReport::default();
        let p = self.prime();
        let ev = self.evaluator(table);
        let le = &self.le;
        let unit = self.q.unit_elem();
        if table.prime != p || table.bounds != self.bounds {
            rep.failures.push(Failure {
                clause: Clause::Unit,
                at: "table".into(),
                weights: String::new(),
                detail: "bounds or prime differ from the verifier".into(),
            });
            return rep;
        }
        // (a)
        for e in table.entries.iter().filter(|e| e.rule == Rule::Unit) {
            rep.count(Clause::Unit);
            let want = if e.weights.0 == [1] { Lin::basis(p, BeWord::identity(1)) } else { Lin::zero(p) };
            if e.generator != unit || e.value != want {
                rep.fail(Clause::Unit, &e.generator, &e.weights.0, format!("stored {}", e.value));
            }
        }
        for total in 1..=self.bounds.weight_max {
            rep.count(Clause::Unit);
            match ev.rho(&unit, &[total]) {
                Ok(v) if v == if total == 1 { Lin::basis(p, BeWord::identity(1)) } else { Lin::zero(p) } => {}
                Ok(v) => rep.fail(Clause::Unit, &unit, &[total], format!("got {}", v)),
                Err(e) => rep.fail(Clause::Unit, &unit, &[total], e.to_string()),
            }
        }
        // (d) on stored entries, in table order so that a corrupted entry is named first
        for e in table.entries.iter().filter(|e| e.rule == Rule::Nu) {
            rep.count(Clause::Differential);
            let m = &e.weights.0;
            let check = (|| -> OpResult<Option<String>> {
                let lhs = d_lin(le, &e.value)?;
                let rhs = ev.bracket(&e.generator, m)?;
                Ok((lhs != rhs).then(|| format!("δρ = {} but the right side is {}", lhs, rhs)))
            })();
            match check {
                Ok(None) => {}
                Ok(Some(w)) => rep.fail(Clause::Differential, &e.generator, m, w),
                Err(err) => rep.fail(Clause::Differential, &e.generator, m, err.to_string()),
            }
        }
        let gens: Vec<QElem> = {
            let mut g: Vec<QElem> = table.entries.iter().filter(|e| e.rule == Rule::Nu).map(|e| e.generator.clone()).collect();
            g.dedup();
            g
        };
        // (b) group law over each orbit, and Λ*-compatibility of (d)
        for g in &gens {
            let r = self.q.arity(g);
            let perms = Permutation::all(r);
            for total in 1..=self.bounds.weight_max {
                for m in crate::operad::matching::compositions(total, r) {
                    for v in &perms {
                        for w in &perms {
                            rep.count(Clause::Permutation);
                            let res = (|| -> OpResult<Option<String>> {
                                let vg = self.q.act(v, g)?;
                                let lhs = ev.rho_lin(&crate::operad::act_lin(&self.q, w, &vg)?, &m)?;
                                // W_w · ρ_{m∘w}(v·g)
                                let mw: Vec<usize> = (0..r).map(|k| m[w.apply(k + 1) - 1]).collect();
                                let inner = ev.rho_lin(&vg, &mw)?;
                                let rhs = crate::operad::act_lin(le, &bloc_permutation(w, &mw), &inner)?;
                                Ok((lhs != rhs).then(|| format!("w={} v={}: {} vs {}", w, v, lhs, rhs)))
                            })();
                            match res {
                                Ok(None) => {}
                                Ok(Some(s)) => rep.fail(Clause::Permutation, g, &m, s),
                                Err(e) => rep.fail(Clause::Permutation, g, &m, e.to_string()),
                            }
                        }
                    }
                    if m.contains(&0) {
                        rep.count(Clause::Permutation);
                        let res = (|| -> OpResult<Option<String>> {
                            let lhs = d_lin(le, &ev.rho(g, &m)?)?;
                            let rhs = ev.bracket(g, &m)?;
                            Ok((lhs != rhs).then(|| format!("Λ*-rule breaks (d): {} vs {}", lhs, rhs)))
                        })();
                        match res {
                            Ok(None) => {}
                            Ok(Some(s)) => rep.fail(Clause::Permutation, g, &m, s),
                            Err(e) => rep.fail(Clause::Permutation, g, &m, e.to_string()),
                        }
                    }
                }
            }
        }
        // (c) on composites of two generators, against the split evaluation
        for a in &gens {
            for b in &gens {
                let (ra, rb) = (self.q.arity(a), self.q.arity(b));
                if ra + rb - 1 > self.bounds.r_max || self.q.degree(a) + self.q.degree(b) > self.bounds.degree_max {
                    continue;
                }
                for i in 1..=ra {
                    let Ok(x) = self.q.compose(a, i, b) else { continue };
                    let r = ra + rb - 1;
                    for total in r..=self.bounds.weight_max {
                        for l in positive_compositions(total, r) {
                            rep.count(Clause::Composition);
                            let res = (|| -> OpResult<Option<String>> {
                                let lhs = ev.rho_lin(&x, &l)?;
                                let rhs =
                                    ev.compose_rule(&Lin::basis(p, a.clone()), ra, i, &Lin::basis(p, b.clone()), rb, &l)?;
                                Ok((lhs != rhs).then(|| format!("∘_{} {}: {} vs {}", i, b, lhs, rhs)))
                            })();
                            match res {
                                Ok(None) => {}
                                Ok(Some(s)) => rep.fail(Clause::Composition, a, &l, s),
                                Err(e) => rep.fail(Clause::Composition, a, &l, e.to_string()),
                            }
                        }
                    }
                }
            }
        }
        // (d) on every other basis element of Q within bounds
        for r in 2..=self.bounds.r_max {
            for deg in 0..=self.bounds.degree_max {
                let Ok(basis) = self.q.basis(r, deg) else { continue };
                for x in basis {
                    if gens.contains(&x) || Action::cell_degree(&x) > self.bounds.cell_max {
                        continue;
                    }
                    for total in r..=self.bounds.weight_max {
                        for m in positive_compositions(total, r) {
                            rep.count(Clause::Differential);
                            let res = (|| -> OpResult<Option<String>> {
                                let lhs = d_lin(le, &ev.rho(&x, &m)?)?;
                                let rhs = ev.bracket(&x, &m)?;
                                Ok((lhs != rhs).then(|| format!("{} vs {}", lhs, rhs)))
                            })();
                            match res {
                                Ok(None) => {}
                                Ok(Some(s)) => rep.fail(Clause::Differential, &x, &m, s),
                                Err(e) => rep.fail(Clause::Differential, &x, &m, e.to_string()),
                            }
                        }
                    }
                }
            }
        }
        rep
    }
}

/// Evaluation of ρ on arbitrary elements of Q, with memoization. In build mode, missing
/// generator components are computed by the ν-recursion and recorded.
pub struct Rho<'a> {
    action: &'a Action,
    entries: RefCell<HashMap<Key, Lin<BeWord>>>,
    build: bool,
    busy: RefCell<HashSet<Key>>,
    memo: RefCell<HashMap<Key, Lin<BeWord>>>,
    orbits: RefCell<HashMap<QElem, (u32, Permutation, QElem)>>,
    diags: RefCell<HashMap<(QElem, usize), Rc<Lin<Vec<QElem>>>>>,
}

impl<'a> Rho<'a> {
    fn new(action: &'a Action, entries: HashMap<Key, Lin<BeWord>>, build: bool) -> Self {
        Rho {
            action,
            entries: RefCell::new(entries),
            build,
            busy: RefCell::new(HashSet::new()),
            memo: RefCell::new(HashMap::new()),
            orbits: RefCell::new(HashMap::new()),
            diags: RefCell::new(HashMap::new()),
        }
    }

    fn p(&self) -> Prime {
        self.action.prime()
    }

    fn q(&self) -> &QOperad {
        &self.action.q
    }

    fn le(&self) -> &Suspension<BarrattEccles> {
        &self.action.le
    }

    /// (c, w, ξ₀) with x = c·w·ξ₀ and ξ₀ the minimal element of the orbit of x.
    fn orbit(&self, x: &QElem) -> OpResult<(u32, Permutation, QElem)> {
        if let Some(o) = self.orbits.borrow().get(x) {
            return Ok(o.clone());
        }
        let p = self.p();
        let r = self.q().arity(x);
        let mut best: Option<(QElem, u32, Permutation)> = None;
        for w in Permutation::all(r) {
            let y = self.q().act(&w, x)?;
            let (yk, yc) = y.iter().next().map(|(k, c)| (k.clone(), c)).ok_or_else(|| {
                OperadError::Unsupported(format!("{} vanishes under the symmetric group", x))
            })?;
            if best.as_ref().is_none_or(|(b, _, _)| yk < *b) {
                best = Some((yk, yc, w));
            }
        }
        let (rep, c, w) = best.expect("Σ_r is nonempty");
        // rep = c·w·x, so x = c⁻¹·w⁻¹·rep
        let out = (p.inv(c), w.inverse(), rep);
        self.orbits.borrow_mut().insert(x.clone(), out.clone());
        Ok(out)
    }

    /// Δ^k(x) as a sum of k-tuples.
    fn diagonal(&self, x: &QElem, k: usize) -> OpResult<Rc<Lin<Vec<QElem>>>> {
        if let Some(d) = self.diags.borrow().get(&(x.clone(), k)) {
            return Ok(d.clone());
        }
        let p = self.p();
        let mut out = Lin::zero(p);
        if k == 1 {
            out.add_term(vec![x.clone()], 1);
        } else {
            for (Pair(a, b), c) in self.q().diagonal(x)?.iter() {
                for (rest, c2) in self.diagonal(b, k - 1)?.iter() {
                    let mut v = Vec::with_capacity(k);
                    v.push(a.clone());
                    v.extend(rest.iter().cloned());
                    out.add_term(v, p.mul(c, c2));
                }
            }
        }
        let out = Rc::new(out);
        self.diags.borrow_mut().insert((x.clone(), k), out.clone());
        Ok(out)
    }

    /// The stored component of an orbit representative, computing it in build mode.
    fn entry(&self, g: &QElem, m: &[usize]) -> OpResult<Lin<BeWord>> {
        let key = (g.clone(), m.to_vec());
        if let Some(v) = self.entries.borrow().get(&key) {
            return Ok(v.clone());
        }
        let b = self.action.bounds;
        let in_bounds = m.iter().sum::<usize>() <= b.weight_max
            && Action::cell_degree(g) <= b.cell_max
            && self.q().degree(g) <= b.degree_max
            && self.q().arity(g) <= b.r_max;
        if !self.build || !in_bounds {
            return Err(OperadError::OutOfTruncation(format!("no table entry for {} {}", g, WeightVector(m.to_vec()))));
        }
        if !self.busy.borrow_mut().insert(key.clone()) {
            return Err(OperadError::Unsupported(format!("cyclic dependency at {} {}", g, WeightVector(m.to_vec()))));
        }
        let bracket = self.bracket(g, m)?;
        let e = self.le().inner();
        let v = self.le().conjugate_odd(&bracket, |x| e.nu(x))?;
        self.busy.borrow_mut().remove(&key);
        self.entries.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    pub fn rho_lin(&self, x: &Lin<QElem>, m: &[usize]) -> OpResult<Lin<BeWord>> {
        let mut out = Lin::zero(self.p());
        for (b, c) in x.iter() {
            out.add_scaled(&self.rho(b, m)?, c);
        }
        Ok(out)
    }

    /// ρ_m(x) for a basis element x of Q.
    pub fn rho(&self, x: &QElem, m: &[usize]) -> OpResult<Lin<BeWord>> {
        let p = self.p();
        let r = self.q().arity(x);
        if m.len() != r {
            return Err(OperadError::Arity(format!("weights {} for {}", WeightVector(m.to_vec()), x)));
        }
        if m.iter().sum::<usize>() == 0 {
            return Ok(Lin::zero(p));
        }
        if let Some(i) = m.iter().position(|&k| k == 0) {
            let y = self.q().partial(x, i + 1)?;
            let mut mh = m.to_vec();
            mh.remove(i);
            return self.rho_lin(&y, &mh);
        }
        if !matches!(x, WElem::T(Tree::Node { .. })) {
            return Ok(if m == [1] { Lin::basis(p, BeWord::identity(1)) } else { Lin::zero(p) });
        }
        let key = (x.clone(), m.to_vec());
        if let Some(v) = self.memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = if self.q().is_generator(x) {
            let (c, w, g) = self.orbit(x)?;
            let mw: Vec<usize> = (0..r).map(|k| m[w.apply(k + 1) - 1]).collect();
            let val = self.entry(&g, &mw)?;
            crate::operad::act_lin(self.le(), &bloc_permutation(&w, &mw), &val)?.scaled(c)
        } else {
            self.rho_decomposable(x, m)?
        };
        self.memo.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    /// Splits x along its x1 edges as w·(A ∘_pos B) and applies (b) and (c).
    fn rho_decomposable(&self, x: &QElem, m: &[usize]) -> OpResult<Lin<BeWord>> {
        let (c, blocks) = self.q().split(x)?;
        let leaves = blocks.leaves();
        let mut sorted = leaves.clone();
        sorted.sort_unstable();
        let ranks: Vec<usize> = leaves.iter().map(|l| sorted.binary_search(l).unwrap() + 1).collect();
        let w = Permutation::from_images(&ranks).expect("leaves are distinct");
        let Tree::Node { label, children } = &blocks else { unreachable!("split returns a node") };
        let last = children.iter().rposition(|(_, c)| !c.is_leaf()).expect("a decomposable has a cut edge");
        let pos = 1 + children[..last].iter().map(|(_, c)| c.arity()).sum::<usize>();
        let mut head_children = children.clone();
        head_children[last].1 = Tree::Leaf(0);
        let a = self.raw_value(&Tree::Node { label: label.clone(), children: head_children })?;
        let b = self.raw_value(&children[last].1)?;
        let r = m.len();
        let rb = children[last].1.arity();
        let mw: Vec<usize> = (0..r).map(|k| m[w.apply(k + 1) - 1]).collect();
        let inner = self.compose_rule(&a, r + 1 - rb, pos, &b, rb, &mw)?;
        Ok(crate::operad::act_lin(self.le(), &bloc_permutation(&w, &mw), &inner)?.scaled(c))
    }

    /// The composite of a tree of generators in preorder, without the final relabeling.
    fn raw_value(&self, t: &Tree<QElem>) -> OpResult<Lin<QElem>> {
        let p = self.p();
        match t {
            Tree::Leaf(_) => Ok(Lin::basis(p, self.q().unit_elem())),
            Tree::Node { label, children } => {
                let mut acc = Lin::basis(p, label.clone());
                let mut pos = 1;
                for (_, c) in children {
                    if c.is_leaf() {
                        pos += 1;
                        continue;
                    }
                    let v = self.raw_value(c)?;
                    acc = crate::operad::operad_compose(self.q(), &acc, pos, &v)?;
                    pos += c.arity();
                }
                Ok(acc)
            }
        }
    }

    /// Relation (c): ρ_l(A ∘_i B) for A of arity `ra` and B of arity `rb`, all l_k ≥ 1.
    pub fn compose_rule(
        &self,
        a: &Lin<QElem>,
        ra: usize,
        i: usize,
        b: &Lin<QElem>,
        rb: usize,
        l: &[usize],
    ) -> OpResult<Lin<BeWord>> {
        let p = self.p();
        let le = self.le();
        if l.len() != ra + rb - 1 || i == 0 || i > ra {
            return Err(OperadError::Arity(format!("ρ_{} of a composite ∘_{} of arities {}, {}", WeightVector(l.to_vec()), i, ra, rb)));
        }
        let lt = &l[..i - 1];
        let n = &l[i - 1..i - 1 + rb];
        let gt = &l[i - 1 + rb..];
        let (sl, sg): (usize, usize) = (lt.iter().sum(), gt.iter().sum());
        let total_n: usize = n.iter().sum();
        let id1 = Lin::basis(p, BeWord::identity(1));
        let mut out = Lin::zero(p);
        for k in 1..=total_n {
            let mut la = lt.to_vec();
            la.push(k);
            la.extend_from_slice(gt);
            let ra_val = self.rho_lin(a, &la)?;
            if ra_val.is_zero() {
                continue;
            }
            let parts = partitions(n, k);
            for (bx, cb) in b.iter() {
                for (comps, cd) in self.diagonal(bx, k)?.iter() {
                    let coef = p.mul(cb, cd);
                    'part: for part in &parts {
                        let mut ys = vec![id1.clone(); sl];
                        for j in 0..k {
                            let v = self.rho(&comps[j], &part[j])?;
                            if v.is_zero() {
                                continue 'part;
                            }
                            ys.push(v);
                        }
                        ys.extend(std::iter::repeat_n(id1.clone(), sg));
                        let val = full_compose(le, &ra_val, &ys)?;
                        if val.is_zero() {
                            continue;
                        }
                        // f reads [l_<][β^1]…[β^k][l_>]; the letters of β_t come as β_t^1 … β_t^k
                        let mut img = Vec::with_capacity(sl + total_n + sg);
                        img.extend(1..=sl);
                        for j in 0..k {
                            for t in 0..rb {
                                let start = sl + n[..t].iter().sum::<usize>() + (0..j).map(|jj| part[jj][t]).sum::<usize>();
                                img.extend(start + 1..=start + part[j][t]);
                            }
                        }
                        img.extend(sl + total_n + 1..=sl + total_n + sg);
                        let sigma = Permutation::from_images(&img).expect("a shuffle");
                        out.add_scaled(&crate::operad::act_lin(le, &sigma, &val)?, coef);
                    }
                }
            }
        }
        Ok(out)
    }

    /// The right side of (d): ρ_m(dq) − out_m(q) + (−1)^{|q|} in_m(q).
    pub fn bracket(&self, x: &QElem, m: &[usize]) -> OpResult<Lin<BeWord>> {
        let p = self.p();
        let q = self.q();
        let le = self.le();
        let mut out = self.rho_lin(&q.differential(x)?, m)?;
        let r = m.len();
        let starts: Vec<usize> = (0..r).map(|i| m[..i].iter().sum()).collect();
        let m2 = Lin::basis(p, self.action.m2);
        // out_m
        for (Pair(x1, x2), c) in q.diagonal(x)?.iter() {
            for m1 in splits(m) {
                let s1: usize = m1.iter().sum();
                let m2v: Vec<usize> = m.iter().zip(&m1).map(|(a, b)| a - b).collect();
                if s1 == 0 || s1 == m.iter().sum::<usize>() {
                    continue;
                }
                let r1 = self.rho(x1, &m1)?;
                if r1.is_zero() {
                    continue;
                }
                let r2 = self.rho(x2, &m2v)?;
                if r2.is_zero() {
                    continue;
                }
                let val = full_compose(le, &m2, &[r1, r2])?;
                let mut img = Vec::new();
                for i in 0..r {
                    img.extend(starts[i] + 1..=starts[i] + m1[i]);
                }
                for i in 0..r {
                    img.extend(starts[i] + m1[i] + 1..=starts[i] + m[i]);
                }
                let sigma = Permutation::from_images(&img).expect("a shuffle");
                out.add_scaled(&crate::operad::act_lin(le, &sigma, &val)?, p.neg(c));
            }
        }
        // in_m
        let sign = p.sign_of(q.degree(x));
        for i in 0..r {
            if m[i] < 2 {
                continue;
            }
            let mut mi = m.to_vec();
            mi[i] -= 1;
            let v = self.rho(x, &mi)?;
            if v.is_zero() {
                continue;
            }
            for t in starts[i] + 1..starts[i] + m[i] {
                out.add_scaled(&crate::operad::operad_compose(le, &v, t, &m2)?, sign);
            }
        }
        Ok(out)
    }

    /// ∇(x)(α_1, …, α_r) in B(A).
    pub fn evaluate<A: EAlgebra>(
        &self,
        bar: &Bar<'_, A>,
        x: &QElem,
        inputs: &[BarWord<A::X>],
    ) -> OpResult<Lin<BarWord<A::X>>> {
        let p = self.p();
        let q = self.q();
        let r = q.arity(x);
        if inputs.len() != r {
            return Err(OperadError::Arity(format!("{} applied to {} bar words", x, inputs.len())));
        }
        let total: usize = inputs.iter().map(|a| a.len()).sum();
        if total > self.action.bounds.weight_max {
            return Err(OperadError::OutOfTruncation(format!("inputs of total length {} > {}", total, self.action.bounds.weight_max)));
        }
        let mut out = Lin::zero(p);
        if total == 0 {
            out.add_term(BarWord::empty(), q.counit(x));
            return Ok(out);
        }
        let alg = bar.algebra();
        let letter_deg = |a: &A::X| alg.degree(a) + 1;
        for n in 1..=total {
            let cuts: Vec<Vec<Vec<usize>>> = inputs.iter().map(|a| cut_points(a.len(), n)).collect();
            for (comps, c) in self.diagonal(x, n)?.iter() {
                let qdeg: Vec<i64> = comps.iter().map(|y| q.degree(y)).collect();
                let mut choice = vec![0usize; r];
                loop {
                    self.evaluate_term(bar, inputs, &cuts, &choice, comps, &qdeg, c, &letter_deg, &mut out)?;
                    // next choice of cuts
                    let mut k = r;
                    let done = loop {
                        if k == 0 {
                            break true;
                        }
                        k -= 1;
                        choice[k] += 1;
                        if choice[k] < cuts[k].len() {
                            break false;
                        }
                        choice[k] = 0;
                    };
                    if done {
                        break;
                    }
                }
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn evaluate_term<A: EAlgebra, F: Fn(&A::X) -> i64>(
        &self,
        bar: &Bar<'_, A>,
        inputs: &[BarWord<A::X>],
        cuts: &[Vec<Vec<usize>>],
        choice: &[usize],
        comps: &[QElem],
        qdeg: &[i64],
        c: u32,
        letter_deg: &F,
        out: &mut Lin<BarWord<A::X>>,
    ) -> OpResult<()> {
        let p = self.p();
        let r = inputs.len();
        let n = comps.len();
        // segment (i, j) = inputs[i][cut[j]..cut[j+1]]
        let seg = |i: usize, j: usize| {
            let cut = &cuts[i][choice[i]];
            &inputs[i].0[cut[j]..cut[j + 1]]
        };
        for j in 0..n {
            if (0..r).all(|i| seg(i, j).is_empty()) {
                return Ok(());
            }
        }
        // Koszul sign of (q^1..q^n, α_1^1..α_1^n, …, α_r^n) → (q^1, α_1^1, …, α_r^1, q^2, …)
        let mut items: Vec<(usize, i64)> = Vec::with_capacity(n * (r + 1));
        for (j, d) in qdeg.iter().enumerate() {
            items.push((j * (r + 1), *d));
        }
        for i in 0..r {
            for j in 0..n {
                let d: i64 = seg(i, j).iter().map(letter_deg).sum();
                items.push((j * (r + 1) + i + 1, d));
            }
        }
        let sign = koszul(&items);
        let mut acc: Lin<Vec<A::X>> = Lin::single(p, Vec::new(), p.mul(c, p.sign_of(sign)));
        for j in 0..n {
            let m: Vec<usize> = (0..r).map(|i| seg(i, j).len()).collect();
            let letters: Vec<A::X> = (0..r).flat_map(|i| seg(i, j).iter().cloned()).collect();
            let op = self.rho(&comps[j], &m)?;
            if op.is_zero() {
                return Ok(());
            }
            let y = bar.theta_lin(&op, &letters)?;
            if y.is_zero() {
                return Ok(());
            }
            let mut next = Lin::zero(p);
            for (w, cw) in acc.iter() {
                for (a, ca) in y.iter() {
                    let mut v = w.clone();
                    v.push(a.clone());
                    next.add_term(v, p.mul(cw, ca));
                }
            }
            acc = next;
        }
        for (w, cw) in acc.into_terms() {
            out.add_term(BarWord(w), cw);
        }
        Ok(())
    }

    pub fn evaluate_lin<A: EAlgebra>(
        &self,
        bar: &Bar<'_, A>,
        x: &Lin<QElem>,
        inputs: &[BarWord<A::X>],
    ) -> OpResult<Lin<BarWord<A::X>>> {
        let mut out = Lin::zero(self.p());
        for (b, c) in x.iter() {
            out.add_scaled(&self.evaluate(bar, b, inputs)?, c);
        }
        Ok(out)
    }

    /// d∇(x)(α) − ∇(dx)(α) − (−1)^{|x|} Σ_i ± ∇(x)(…, dα_i, …); zero for a chain map.
    pub fn chain_map_defect<A: EAlgebra>(
        &self,
        bar: &Bar<'_, A>,
        x: &QElem,
        inputs: &[BarWord<A::X>],
    ) -> OpResult<Lin<BarWord<A::X>>> {
        let p = self.p();
        let q = self.q();
        let mut out = bar.differential_lin(&self.evaluate(bar, x, inputs)?)?;
        out.sub_assign(&self.evaluate_lin(bar, &q.differential(x)?, inputs)?);
        let mut before = 0i64;
        let sx = q.degree(x);
        for i in 0..inputs.len() {
            for (da, c) in bar.differential(&inputs[i])?.iter() {
                let mut v = inputs.to_vec();
                v[i] = da.clone();
                let e = self.evaluate(bar, x, &v)?;
                out.add_scaled(&e, p.neg(p.mul(c, p.sign_of(sx + before))));
            }
            before += bar.degree(&inputs[i]);
        }
        Ok(out)
    }

    /// Δ∇(x)(α) − Σ ± ∇(x')(α') ⊗ ∇(x'')(α''); zero for a coalgebra map.
    pub fn hopf_defect<A: EAlgebra>(
        &self,
        bar: &Bar<'_, A>,
        x: &QElem,
        inputs: &[BarWord<A::X>],
    ) -> OpResult<Lin<TensorWord<A::X>>> {
        let p = self.p();
        let q = self.q();
        let r = inputs.len();
        let mut out = self.evaluate(bar, x, inputs)?.flat_map(|w| bar.diagonal(w, 2));
        let cuts: Vec<Vec<Vec<usize>>> = inputs.iter().map(|a| cut_points(a.len(), 2)).collect();
        for (Pair(x1, x2), c) in q.diagonal(x)?.iter() {
            let mut choice = vec![0usize; r];
            loop {
                let seg = |i: usize, j: usize| {
                    let cut = &cuts[i][choice[i]];
                    BarWord(inputs[i].0[cut[j]..cut[j + 1]].to_vec())
                };
                let a1: Vec<_> = (0..r).map(|i| seg(i, 0)).collect();
                let a2: Vec<_> = (0..r).map(|i| seg(i, 1)).collect();
                let mut items = vec![(0usize, q.degree(x1)), (r + 1, q.degree(x2))];
                for i in 0..r {
                    items.push((i + 1, bar.degree(&a1[i])));
                    items.push((r + 2 + i, bar.degree(&a2[i])));
                }
                let sign = koszul(&items);
                let e1 = self.evaluate(bar, x1, &a1)?;
                if !e1.is_zero() {
                    let e2 = self.evaluate(bar, x2, &a2)?;
                    let k = p.neg(p.mul(c, p.sign_of(sign)));
                    for (u, cu) in e1.iter() {
                        for (v, cv) in e2.iter() {
                            out.add_term(TensorWord(vec![u.clone(), v.clone()]), p.mul(k, p.mul(cu, cv)));
                        }
                    }
                }
                let mut k = r;
                let done = loop {
                    if k == 0 {
                        break true;
                    }
                    k -= 1;
                    choice[k] += 1;
                    if choice[k] < cuts[k].len() {
                        break false;
                    }
                    choice[k] = 0;
                };
                if done {
                    break;
                }
            }
        }
        Ok(out)
    }
}

/// Compositions of `total` into r positive parts.
pub fn positive_compositions(total: usize, r: usize) -> Vec<Vec<usize>> {
    if r == 0 || total < r {
        return Vec::new();
    }
    crate::operad::matching::compositions(total - r, r)
        .into_iter()
        .map(|v| v.into_iter().map(|x| x + 1).collect())
        .collect()
}

/// All m' ≤ m componentwise.
fn splits(m: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &k in m {
        let mut next = Vec::new();
        for v in &out {
            for a in 0..=k {
                let mut w = v.clone();
                w.push(a);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// Ways to write n = n^1 + … + n^k componentwise with each |n^j| ≥ 1.
fn partitions(n: &[usize], k: usize) -> Vec<Vec<Vec<usize>>> {
    let b = n.len();
    let mut out: Vec<Vec<Vec<usize>>> = vec![vec![Vec::with_capacity(b); k]];
    for &nt in n {
        let dists = crate::operad::matching::compositions(nt, k);
        let mut next = Vec::new();
        for cur in &out {
            for d in &dists {
                let mut c = cur.clone();
                for j in 0..k {
                    c[j].push(d[j]);
                }
                next.push(c);
            }
        }
        out = next;
    }
    out.retain(|v| v.iter().all(|nj| nj.iter().sum::<usize>() > 0));
    out
}

/// Cut positions 0 = c_0 ≤ c_1 ≤ … ≤ c_n = len.
fn cut_points(len: usize, n: usize) -> Vec<Vec<usize>> {
    crate::operad::matching::compositions(len, n)
        .into_iter()
        .map(|parts| {
            let mut v = vec![0];
            for x in parts {
                v.push(v.last().unwrap() + x);
            }
            v
        })
        .collect()
}

/// Exponent of the Koszul sign for reordering items (target position, degree) into
/// increasing target order.
fn koszul(items: &[(usize, i64)]) -> i64 {
    let mut s = 0;
    for a in 0..items.len() {
        for b in a + 1..items.len() {
            if items[a].0 > items[b].0 {
                s += items[a].1 * items[b].1;
            }
        }
    }
    s
}
