//! Exhaustive verification of operad laws on truncations.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::field::{Lin, Prime};
use crate::linear::Pair;
use crate::perm::{bloc_permutation, Permutation};

use super::{
    act_lin, coxeter_generators, d_lin, elements_up_to, operad_compose, partial_lin, DgOperad, HopfOperad,
    OpResult, OperadError,
};

/// Operand lists longer than this are re-enumerated rather than kept in memory.
const CACHE_LIMIT: usize = 1 << 18;

/// Bounds for the checker. Unary laws run over basis elements with arity ≤ `arity_max` and
/// degree ≤ `degree_max`; binary and ternary laws run over tuples of such elements whose
/// composite has arity ≤ `output_arity_max` and total degree ≤ `output_degree_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxiomBounds {
    pub arity_max: usize,
    pub degree_max: i64,
    pub output_arity_max: usize,
    pub output_degree_max: i64,
}

impl AxiomBounds {
    pub fn new(arity_max: usize, degree_max: i64) -> Self {
        AxiomBounds { arity_max, degree_max, output_arity_max: arity_max, output_degree_max: degree_max }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub law: String,
    pub witness: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.law, self.witness)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AxiomReport {
    pub operad: String,
    pub checks: usize,
    pub failures: Vec<Failure>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, ok: bool, law: &str, witness: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.failures.len() < 50 {
            self.failures.push(Failure { law: law.to_string(), witness: witness() });
        }
    }

    fn error(&mut self, law: &str, e: OperadError) {
        self.checks += 1;
        if self.failures.len() < 50 {
            self.failures.push(Failure { law: law.to_string(), witness: e.to_string() });
        }
    }

    pub fn render(&self) -> String {
        let mut s = format!("operad {}: {} checks, {} failures\n", self.operad, self.checks, self.failures.len());
        for f in &self.failures {
            s.push_str(&format!("  FAIL {}\n", f));
        }
        s
    }
}

macro_rules! tri {
    ($rep:expr, $law:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => {
                $rep.error($law, err);
                continue;
            }
        }
    };
}

/// Checks associativity, equivariance, unit laws, the derivation property of d, d² = 0
/// and the Λ*-relations of ∂_i on every basis element or tuple within bounds.
/// Equivariance is checked on Coxeter generators, together with the group-action law on pairs of them.
pub fn check_operad_axioms<P: DgOperad>(op: &P, bounds: AxiomBounds) -> AxiomReport {
    let p = op.prime();
    let mut rep = AxiomReport { operad: op.name(), ..Default::default() };
    let degrees = |r: usize| -> Vec<i64> {
        match op.degree_range(r) {
            Some((lo, hi)) => (lo..=hi.min(bounds.degree_max)).collect(),
            None => Vec::new(),
        }
    };
    let fetch = |r: usize, d: i64, rep: &mut AxiomReport| -> Vec<P::B> {
        match op.basis(r, d) {
            Ok(v) => v,
            Err(e) => {
                rep.error("enumeration", e);
                Vec::new()
            }
        }
    };
    let unital = op.star().is_some();
    let unit = op.unit();
    if let Some(u) = &unit {
        match op.differential(u) {
            Ok(du) => rep.record(du.is_zero(), "d1 = 0", || format!("d1 = {}", du)),
            Err(e) => rep.error("differential", e),
        }
    }

    // unary laws
    for r in 0..=bounds.arity_max {
        let gens = coxeter_generators(r);
        for d in degrees(r) {
            for x in fetch(r, d, &mut rep) {
                let x = &x;
                let xl = Lin::basis(p, x.clone());
                let dx = tri!(rep, "differential", op.differential(x));
                let ddx = tri!(rep, "differential", d_lin(op, &dx));
                rep.record(ddx.is_zero(), "d^2 = 0", || format!("x = {}, d^2 x = {}", x, ddx));
                if let Some(u) = &unit {
                    if r >= 1 {
                        let l = tri!(rep, "unit", op.compose(u, 1, x));
                        rep.record(l == xl, "1 ∘_1 x = x", || format!("x = {}, got {}", x, l));
                        for i in 1..=r {
                            let rr = tri!(rep, "unit", op.compose(x, i, u));
                            rep.record(rr == xl, "x ∘_i 1 = x", || format!("x = {}, i = {}, got {}", x, i, rr));
                        }
                    }
                }
                let id = tri!(rep, "action", op.act(&Permutation::identity(r), x));
                rep.record(id == xl, "id·x = x", || format!("x = {}, got {}", x, id));
                let mut moved = Vec::with_capacity(gens.len());
                for s in &gens {
                    let sx = tri!(rep, "action", op.act(s, x));
                    let dsx = tri!(rep, "action", d_lin(op, &sx));
                    let sdx = tri!(rep, "action", act_lin(op, s, &dx));
                    rep.record(dsx == sdx, "d(σ·x) = σ·dx", || format!("σ = {}, x = {}", s, x));
                    moved.push(sx);
                }
                for s in &gens {
                    for (t, tx) in gens.iter().zip(&moved) {
                        let l = tri!(rep, "action", op.act(&s.compose(t), x));
                        let rr = tri!(rep, "action", act_lin(op, s, tx));
                        rep.record(l == rr, "(στ)·x = σ·(τ·x)", || format!("σ = {}, τ = {}, x = {}", s, t, x));
                    }
                }
                if unital && r >= 1 {
                    for i in 1..=r {
                        let di = tri!(rep, "partial", op.partial(x, i));
                        let ddi = tri!(rep, "partial", d_lin(op, &di));
                        let did = tri!(rep, "partial", partial_lin(op, &dx, i));
                        rep.record(ddi == did, "d ∂_i = ∂_i d", || format!("x = {}, i = {}", x, i));
                        for j in i + 1..=r {
                            let dj = tri!(rep, "partial", op.partial(x, j));
                            let a = tri!(rep, "partial", partial_lin(op, &dj, i));
                            let b = tri!(rep, "partial", partial_lin(op, &di, j - 1));
                            rep.record(a == b, "∂_i ∂_j = ∂_{j-1} ∂_i", || format!("x = {}, i = {}, j = {}", x, i, j));
                        }
                    }
                }
            }
        }
    }

    // Tuples containing the unit are covered by the unit laws above.
    let mut cache: HashMap<(usize, i64), Rc<Vec<P::B>>> = HashMap::new();
    let mut operands = |r: usize, d: i64, rep: &mut AxiomReport| -> Rc<Vec<P::B>> {
        if let Some(v) = cache.get(&(r, d)) {
            return v.clone();
        }
        let v: Rc<Vec<P::B>> = Rc::new(fetch(r, d, rep).into_iter().filter(|x| unit.as_ref() != Some(x)).collect());
        if v.len() <= CACHE_LIMIT {
            cache.insert((r, d), v.clone());
        }
        v
    };

    // binary laws
    for s in 1..=bounds.arity_max {
        for t in 0..=bounds.arity_max {
            if s + t - 1 > bounds.output_arity_max {
                continue;
            }
            for db in degrees(t) {
                let ys = operands(t, db, &mut rep);
                if ys.is_empty() {
                    continue;
                }
                for da in degrees(s) {
                    if da + db > bounds.output_degree_max {
                        continue;
                    }
                    let xs = operands(s, da, &mut rep);
                    for a in xs.iter() {
                        for b in ys.iter() {
                            check_pair(op, &mut rep, a, b, s, t);
                        }
                    }
                }
            }
        }
    }

    // ternary laws
    for s in 1..=bounds.arity_max {
        for t in 0..=bounds.arity_max {
            for u in 0..=bounds.arity_max {
                if s + t + u < 2 || s + t + u - 2 > bounds.output_arity_max {
                    continue;
                }
                for dc in degrees(u) {
                    let zs = operands(u, dc, &mut rep);
                    if zs.is_empty() {
                        continue;
                    }
                    for db in degrees(t) {
                        let ys = operands(t, db, &mut rep);
                        if ys.is_empty() {
                            continue;
                        }
                        for da in degrees(s) {
                            if da + db + dc > bounds.output_degree_max {
                                continue;
                            }
                            let xs = operands(s, da, &mut rep);
                            for a in xs.iter() {
                                for b in ys.iter() {
                                    for c in zs.iter() {
                                        check_triple(op, &mut rep, a, b, c, s, t);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    rep
}

fn check_pair<P: DgOperad>(op: &P, rep: &mut AxiomReport, a: &P::B, b: &P::B, s: usize, t: usize) {
    let p = op.prime();
    if let Err((what, e)) = check_pair_inner(op, rep, p, a, b, s, t) {
        rep.error(what, e);
    }
}

fn check_pair_inner<P: DgOperad>(
    op: &P,
    rep: &mut AxiomReport,
    p: Prime,
    a: &P::B,
    b: &P::B,
    s: usize,
    t: usize,
) -> Result<(), (&'static str, OperadError)> {
    let bl = Lin::basis(p, b.clone());
    let al = Lin::basis(p, a.clone());
    let da = op.differential(a).map_err(|e| ("derivation", e))?;
    let db = op.differential(b).map_err(|e| ("derivation", e))?;
    let sign_a = p.sign_of(op.degree(a));
    let comps = (1..=s).map(|i| op.compose(a, i, b)).collect::<OpResult<Vec<_>>>().map_err(|e| ("composition", e))?;
    let sgens = coxeter_generators(s);
    let moved_a = sgens.iter().map(|g| op.act(g, a)).collect::<OpResult<Vec<_>>>().map_err(|e| ("equivariance", e))?;
    let tgens = coxeter_generators(t);
    let moved_b = tgens.iter().map(|g| op.act(g, b)).collect::<OpResult<Vec<_>>>().map_err(|e| ("equivariance", e))?;
    for i in 1..=s {
        let comp = &comps[i - 1];
        let lhs = d_lin(op, comp).map_err(|e| ("derivation", e))?;
        let mut rhs = operad_compose(op, &da, i, &bl).map_err(|e| ("derivation", e))?;
        rhs.add_scaled(&operad_compose(op, &al, i, &db).map_err(|e| ("derivation", e))?, sign_a);
        rep.record(lhs == rhs, "d(a ∘_i b) = da ∘_i b ± a ∘_i db", || format!("a = {}, i = {}, b = {}", a, i, b));

        // equivariance in a: (σ·a) ∘_i b = Π·(a ∘_j b), σ(j) = i
        for (sg, sa) in sgens.iter().zip(&moved_a) {
            let lhs = operad_compose(op, sa, i, &bl).map_err(|e| ("equivariance", e))?;
            let j = sg.inverse().apply(i);
            let mut sizes = vec![1usize; s];
            sizes[j - 1] = t;
            let big = bloc_permutation(sg, &sizes);
            let rhs = act_lin(op, &big, &comps[j - 1]).map_err(|e| ("equivariance", e))?;
            rep.record(lhs == rhs, "(σ·a) ∘_i b = σ'·(a ∘_{σ^-1(i)} b)", || {
                format!("σ = {}, a = {}, i = {}, b = {}: {} vs {}", sg, a, i, b, lhs, rhs)
            });
        }
        // equivariance in b: a ∘_i (τ·b) = (id ∘_i τ)·(a ∘_i b)
        for (tg, tb) in tgens.iter().zip(&moved_b) {
            let lhs = operad_compose(op, &al, i, tb).map_err(|e| ("equivariance", e))?;
            let big = tg.embed(s + t - 1, i);
            let rhs = act_lin(op, &big, comp).map_err(|e| ("equivariance", e))?;
            rep.record(lhs == rhs, "a ∘_i (τ·b) = (id ∘_i τ)·(a ∘_i b)", || {
                format!("τ = {}, a = {}, i = {}, b = {}", tg, a, i, b)
            });
        }
    }
    Ok(())
}

fn check_triple<P: DgOperad>(op: &P, rep: &mut AxiomReport, a: &P::B, b: &P::B, c: &P::B, s: usize, t: usize) {
    let p = op.prime();
    let cl = Lin::basis(p, c.clone());
    let al = Lin::basis(p, a.clone());
    let bcs = match (1..=t).map(|j| op.compose(b, j, c)).collect::<OpResult<Vec<_>>>() {
        Ok(v) => v,
        Err(e) => return rep.error("associativity", e),
    };
    let bl = Lin::basis(p, b.clone());
    let acs = match (1..=s).map(|k| op.compose(a, k, c)).collect::<OpResult<Vec<_>>>() {
        Ok(v) => v,
        Err(e) => return rep.error("associativity", e),
    };
    for i in 1..=s {
        let ab = match op.compose(a, i, b) {
            Ok(v) => v,
            Err(e) => return rep.error("associativity", e),
        };
        for j in 1..=t {
            let lhs = operad_compose(op, &ab, i + j - 1, &cl);
            let rhs = operad_compose(op, &al, i, &bcs[j - 1]);
            match (lhs, rhs) {
                (Ok(l), Ok(r)) => rep.record(l == r, "(a ∘_i b) ∘_{i+j-1} c = a ∘_i (b ∘_j c)", || {
                    format!("a = {}, i = {}, b = {}, j = {}, c = {}: {} vs {}", a, i, b, j, c, l, r)
                }),
                (Err(e), _) | (_, Err(e)) => return rep.error("associativity", e),
            }
        }
        for k in i + 1..=s {
            let lhs = operad_compose(op, &ab, k + t - 1, &cl);
            let rhs = operad_compose(op, &acs[k - 1], i, &bl);
            match (lhs, rhs) {
                (Ok(l), Ok(r)) => {
                    let r = r.scaled(p.sign_of(op.degree(b) * op.degree(c)));
                    rep.record(l == r, "(a ∘_i b) ∘_{k+t-1} c = ±(a ∘_k c) ∘_i b", || {
                        format!("a = {}, i = {}, b = {}, k = {}, c = {}: {} vs {}", a, i, b, k, c, l, r)
                    })
                }
                (Err(e), _) | (_, Err(e)) => return rep.error("associativity", e),
            }
        }
    }
}

/// Checks that the diagonal is counital, coassociative, a chain map, equivariant, and that
/// composites and counit are morphisms of coalgebras, on all elements and pairs within bounds.
pub fn check_hopf<P: HopfOperad>(op: &P, bounds: AxiomBounds) -> AxiomReport {
    let p = op.prime();
    let mut rep = AxiomReport { operad: format!("{} (Hopf)", op.name()), ..Default::default() };
    let mut by_arity: Vec<Vec<P::B>> = Vec::new();
    for r in 0..=bounds.arity_max {
        by_arity.push(elements_up_to(op, r, bounds.degree_max).unwrap_or_default());
    }
    for (r, xs) in by_arity.iter().enumerate() {
        for x in xs {
            let xl = Lin::basis(p, x.clone());
            let dx = tri!(rep, "diagonal", op.diagonal(x));
            // counit
            let mut left = Lin::zero(p);
            let mut right = Lin::zero(p);
            for (Pair(u, v), c) in dx.iter() {
                left.add_term(v.clone(), p.mul(c, op.counit(u)));
                right.add_term(u.clone(), p.mul(c, op.counit(v)));
            }
            rep.record(left == xl && right == xl, "counit", || format!("x = {}", x));
            // coassociativity
            let mut l = Lin::zero(p);
            let mut rr = Lin::zero(p);
            for (Pair(u, v), c) in dx.iter() {
                let du = tri!(rep, "diagonal", op.diagonal(u));
                for (Pair(a, b), e) in du.iter() {
                    l.add_term((a.clone(), b.clone(), v.clone()), p.mul(c, e));
                }
                let dv = tri!(rep, "diagonal", op.diagonal(v));
                for (Pair(a, b), e) in dv.iter() {
                    rr.add_term((u.clone(), a.clone(), b.clone()), p.mul(c, e));
                }
            }
            rep.record(l == rr, "coassociativity", || format!("x = {}", x));
            // chain map: Δd = (d⊗1 + 1⊗d)Δ
            let d = tri!(rep, "diagonal", op.differential(x));
            let mut lhs = Lin::zero(p);
            for (y, c) in d.iter() {
                lhs.add_scaled(&tri!(rep, "diagonal", op.diagonal(y)), c);
            }
            let rhs = tri!(rep, "diagonal", d_tensor(op, &dx));
            rep.record(lhs == rhs, "Δ d = d Δ", || format!("x = {}", x));
            // equivariance
            for s in coxeter_generators(r) {
                let sx = tri!(rep, "diagonal", op.act(&s, x));
                let mut lhs = Lin::zero(p);
                for (y, c) in sx.iter() {
                    lhs.add_scaled(&tri!(rep, "diagonal", op.diagonal(y)), c);
                }
                let mut rhs = Lin::zero(p);
                for (Pair(u, v), c) in dx.iter() {
                    let su = tri!(rep, "diagonal", op.act(&s, u));
                    let sv = tri!(rep, "diagonal", op.act(&s, v));
                    for (a, e) in su.iter() {
                        for (b, f) in sv.iter() {
                            rhs.add_term(Pair(a.clone(), b.clone()), p.mul(c, p.mul(e, f)));
                        }
                    }
                }
                rep.record(lhs == rhs, "Δ(σ·x) = σ·Δx", || format!("σ = {}, x = {}", s, x));
            }
        }
    }
    for (s, xs) in by_arity.iter().enumerate().skip(1) {
        for (t, ys) in by_arity.iter().enumerate() {
            if s + t - 1 > bounds.output_arity_max {
                continue;
            }
            for a in xs {
                for b in ys {
                    if op.degree(a) + op.degree(b) > bounds.output_degree_max {
                        continue;
                    }
                    let da = tri!(rep, "Hopf", op.diagonal(a));
                    let db = tri!(rep, "Hopf", op.diagonal(b));
                    for i in 1..=s {
                        let comp = tri!(rep, "Hopf", op.compose(a, i, b));
                        let mut lhs = Lin::zero(p);
                        for (y, c) in comp.iter() {
                            lhs.add_scaled(&tri!(rep, "Hopf", op.diagonal(y)), c);
                        }
                        let mut rhs = Lin::zero(p);
                        for (Pair(a1, a2), c) in da.iter() {
                            for (Pair(b1, b2), e) in db.iter() {
                                let sign = p.sign_of(op.degree(a2) * op.degree(b1));
                                let l = tri!(rep, "Hopf", op.compose(a1, i, b1));
                                let r = tri!(rep, "Hopf", op.compose(a2, i, b2));
                                let k = p.mul(sign, p.mul(c, e));
                                for (u, f) in l.iter() {
                                    for (v, g) in r.iter() {
                                        rhs.add_term(Pair(u.clone(), v.clone()), p.mul(k, p.mul(f, g)));
                                    }
                                }
                            }
                        }
                        rep.record(lhs == rhs, "Δ(a ∘_i b) = Δa ∘_i Δb", || format!("a = {}, i = {}, b = {}", a, i, b));
                        let mut ec = 0;
                        for (y, c) in comp.iter() {
                            ec = p.add(ec, p.mul(c, op.counit(y)));
                        }
                        rep.record(ec == p.mul(op.counit(a), op.counit(b)), "ε(a ∘_i b) = ε(a)ε(b)", || {
                            format!("a = {}, i = {}, b = {}", a, i, b)
                        });
                    }
                }
            }
        }
    }
    rep
}

/// (d⊗1 + 1⊗d) on a sum of tensors, with the Koszul sign.
pub fn d_tensor<P: DgOperad>(op: &P, x: &Lin<Pair<P::B, P::B>>) -> OpResult<Lin<Pair<P::B, P::B>>> {
    let p = op.prime();
    let mut out = Lin::zero(p);
    for (Pair(u, v), c) in x.iter() {
        for (du, e) in op.differential(u)?.iter() {
            out.add_term(Pair(du.clone(), v.clone()), p.mul(c, e));
        }
        let s = p.sign_of(op.degree(u));
        for (dv, e) in op.differential(v)?.iter() {
            out.add_term(Pair(u.clone(), dv.clone()), p.mul(s, p.mul(c, e)));
        }
    }
    Ok(out)
}

/// An operad whose composite table is corrupted at one triple; used as a negative control.
pub struct Corrupted<'a, P: DgOperad> {
    pub inner: &'a P,
    pub at: (P::B, usize, P::B),
}

impl<'a, P: DgOperad> DgOperad for Corrupted<'a, P> {
    type B = P::B;
    fn prime(&self) -> Prime {
        self.inner.prime()
    }
    fn name(&self) -> String {
        format!("{} (corrupted)", self.inner.name())
    }
    fn degree_range(&self, arity: usize) -> Option<(i64, i64)> {
        self.inner.degree_range(arity)
    }
    fn basis(&self, arity: usize, degree: i64) -> OpResult<Vec<P::B>> {
        self.inner.basis(arity, degree)
    }
    fn degree(&self, x: &P::B) -> i64 {
        self.inner.degree(x)
    }
    fn arity(&self, x: &P::B) -> usize {
        self.inner.arity(x)
    }
    fn unit(&self) -> Option<P::B> {
        self.inner.unit()
    }
    fn star(&self) -> Option<P::B> {
        self.inner.star()
    }
    fn compose(&self, x: &P::B, i: usize, y: &P::B) -> OpResult<Lin<P::B>> {
        let v = self.inner.compose(x, i, y)?;
        if *x == self.at.0 && i == self.at.1 && *y == self.at.2 {
            let mut w = v.clone();
            if let Some(k) = v.keys().next() {
                w.add_term(k.clone(), 1);
            }
            Ok(w)
        } else {
            Ok(v)
        }
    }
    fn act(&self, w: &Permutation, x: &P::B) -> OpResult<Lin<P::B>> {
        self.inner.act(w, x)
    }
    fn differential(&self, x: &P::B) -> OpResult<Lin<P::B>> {
        self.inner.differential(x)
    }
    fn partial(&self, x: &P::B, i: usize) -> OpResult<Lin<P::B>> {
        self.inner.partial(x, i)
    }
}
