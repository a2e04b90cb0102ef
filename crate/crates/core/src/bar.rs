//! The bar complex B(A) = T^c(ΣĀ) of an algebra over the Barratt–Eccles operad, with the
//! coderivation differential induced by the A∞ structure along K → E, the deconcatenation
//! diagonal, the shuffle product, and the test-fixture algebras.
//!
//! An operation s⊗e ∈ ΛE(M) acts on the suspension by
//! Θ(s⊗e)(sa_1,…,sa_M) = (-1)^{M|e| + Σ_i |a_i|(M-i)} s e(a_1,…,a_M).

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::field::{Lin, Prime};
use crate::linear::{ChainComplex, GradedBasedModule, LinearError};
use crate::operad::{full_compose, BasisLabel, DgOperad, OpResult, OperadError};
use crate::perm::Permutation;
use crate::zoo::ainf::build_ainf;
use crate::zoo::barratt_eccles::{for_each_word, BarrattEccles, BeWord, MAX_ARITY, MAX_LEN};
use crate::zoo::k_to_e::KToE;

/// A non-unital algebra over E given on a basis of its augmentation ideal.
pub trait EAlgebra {
    type X: BasisLabel;

    fn prime(&self) -> Prime;
    fn name(&self) -> String;
    fn degree(&self, x: &Self::X) -> i64;
    /// Polynomial weight; products add weights.
    fn weight(&self, _x: &Self::X) -> usize {
        1
    }
    /// Basis elements with degree ≤ `degree_max` and weight ≤ `weight_max`, sorted.
    fn basis(&self, degree_max: i64, weight_max: usize) -> Vec<Self::X>;
    fn d(&self, x: &Self::X) -> Lin<Self::X>;
    /// e(a_1, …, a_r) for a Barratt–Eccles word e of arity r ≥ 1.
    fn evaluate(&self, e: &BeWord, inputs: &[Self::X]) -> OpResult<Lin<Self::X>>;
    /// Whether the action factors through ε: E → C.
    fn is_commutative(&self) -> bool;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixtureError {
    #[error("unsupported fixture: {0}")]
    Unsupported(String),
    #[error("cannot parse element {0:?}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixtureKind {
    /// F_p[x]/(x^n) with |x| = `x_degree`.
    TruncatedPolynomial { n: usize, x_degree: i64 },
    /// Exterior algebra on `generators` generators of degree 1.
    Exterior { generators: usize },
    /// The free E-algebra on generators of the given degrees, modulo weight > `weight_max`.
    FreeE { generator_degrees: Vec<i64>, weight_max: usize },
}

impl FixtureKind {
    /// Parses `poly:N[:DEG]`, `ext:K` or `free:DEG,DEG,...:W`.
    pub fn parse(s: &str) -> Result<FixtureKind, FixtureError> {
        let bad = || FixtureError::Unsupported(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |x: &str| x.trim().parse::<i64>().map_err(|_| bad());
        match parts.as_slice() {
            ["poly", n] => Ok(FixtureKind::TruncatedPolynomial { n: num(n)? as usize, x_degree: 0 }),
            ["poly", n, d] => Ok(FixtureKind::TruncatedPolynomial { n: num(n)? as usize, x_degree: num(d)? }),
            ["ext", k] => Ok(FixtureKind::Exterior { generators: num(k)? as usize }),
            ["free", degs, w] => Ok(FixtureKind::FreeE {
                generator_degrees: degs.split(',').map(num).collect::<Result<_, _>>()?,
                weight_max: num(w)? as usize,
            }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixtureKind::TruncatedPolynomial { n, x_degree } => write!(f, "poly:{}:{}", n, x_degree),
            FixtureKind::Exterior { generators } => write!(f, "ext:{}", generators),
            FixtureKind::FreeE { generator_degrees, weight_max } => {
                let d: Vec<String> = generator_degrees.iter().map(|d| d.to_string()).collect();
                write!(f, "free:{}:{}", d.join(","), weight_max)
            }
        }
    }
}

/// An element of the free E-algebra: u(v_{g_1}, …, v_{g_N}) with g sorted and u minimal in
/// its orbit under the stabilizer of g.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FreeElem {
    pub op: BeWord,
    pub gens: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elem {
    /// x^k
    Pow(u8),
    /// Exterior monomial as a bitmask of generators.
    Ext(u16),
    Free(FreeElem),
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Elem::Pow(1) => write!(f, "x"),
            Elem::Pow(k) => write!(f, "x^{}", k),
            Elem::Ext(m) => {
                for i in 0..16 {
                    if m >> i & 1 == 1 {
                        write!(f, "e{}", i + 1)?;
                    }
                }
                Ok(())
            }
            Elem::Free(x) => {
                let gens: Vec<String> = x.gens.iter().map(|g| format!("v{}", g + 1)).collect();
                if x.gens.len() == 1 {
                    return write!(f, "{}", gens[0]);
                }
                let perms: Vec<String> = x
                    .op
                    .perms()
                    .iter()
                    .map(|p| (0..x.op.arity()).map(|m| char::from(b'1' + p.get(m) as u8)).collect())
                    .collect();
                write!(f, "E[{}]({})", perms.join(","), gens.join(","))
            }
        }
    }
}

/// A desk-scale E-algebra.
#[derive(Clone, Debug)]
pub struct Fixture {
    prime: Prime,
    kind: FixtureKind,
    e: BarrattEccles,
}

impl Fixture {
    pub fn new(prime: Prime, kind: FixtureKind) -> Result<Fixture, FixtureError> {
        let bad = |why: &str| Err(FixtureError::Unsupported(format!("{}: {}", kind, why)));
        match &kind {
            FixtureKind::TruncatedPolynomial { n, x_degree } => {
                if *n < 2 || *n > 64 {
                    return bad("need 2 ≤ n ≤ 64");
                }
                if prime.get() != 2 && x_degree % 2 != 0 {
                    return bad("|x| must be even for odd p");
                }
                if *x_degree < 0 {
                    return bad("|x| must be nonnegative");
                }
            }
            FixtureKind::Exterior { generators } => {
                if *generators == 0 || *generators > 16 {
                    return bad("need 1 to 16 generators");
                }
            }
            FixtureKind::FreeE { generator_degrees, weight_max } => {
                if generator_degrees.is_empty() || generator_degrees.len() > 16 {
                    return bad("need 1 to 16 generators");
                }
                if generator_degrees.iter().any(|d| *d < 0) {
                    return bad("generator degrees must be nonnegative");
                }
                if *weight_max == 0 || *weight_max > MAX_ARITY {
                    return bad("need 1 ≤ W ≤ 8");
                }
            }
        }
        Ok(Fixture { prime, kind, e: BarrattEccles::new(prime, MAX_ARITY, MAX_LEN as i64 - 1) })
    }

    pub fn kind(&self) -> &FixtureKind {
        &self.kind
    }

    /// Parses an element in display form: `x`, `x^3`, `e1e2`, `v1`, `E[12,21](v1,v2)`.
    pub fn parse_element(&self, s: &str) -> Result<Lin<Elem>, FixtureError> {
        let s = s.trim();
        let bad = || FixtureError::Parse(s.to_string());
        let p = self.prime;
        match &self.kind {
            FixtureKind::TruncatedPolynomial { n, .. } => {
                let k: usize = if s == "x" {
                    1
                } else {
                    s.strip_prefix("x^").and_then(|k| k.parse().ok()).ok_or_else(bad)?
                };
                if k == 0 {
                    return Err(bad());
                }
                Ok(if k < *n { Lin::basis(p, Elem::Pow(k as u8)) } else { Lin::zero(p) })
            }
            FixtureKind::Exterior { generators } => {
                let mut gens = Vec::new();
                for part in s.split('e').skip(1) {
                    let i: usize = part.parse().map_err(|_| bad())?;
                    if i == 0 || i > *generators {
                        return Err(bad());
                    }
                    gens.push(i - 1);
                }
                if gens.is_empty() || !s.starts_with('e') {
                    return Err(bad());
                }
                let mut acc = Lin::basis(p, Elem::Ext(1 << gens[0]));
                for g in &gens[1..] {
                    acc = acc.flat_map(|x| {
                        self.evaluate(&BeWord::identity(2), &[x.clone(), Elem::Ext(1 << g)]).expect("product")
                    });
                }
                Ok(acc)
            }
            FixtureKind::FreeE { generator_degrees, .. } => {
                let gen = |v: &str| -> Result<u8, FixtureError> {
                    let i: usize = v.trim().strip_prefix('v').and_then(|k| k.parse().ok()).ok_or_else(bad)?;
                    if i == 0 || i > generator_degrees.len() {
                        return Err(bad());
                    }
                    Ok((i - 1) as u8)
                };
                if s.starts_with('v') {
                    return Ok(Lin::basis(p, Elem::Free(FreeElem { op: BeWord::identity(1), gens: vec![gen(s)?] })));
                }
                let body = s.strip_prefix("E[").ok_or_else(bad)?;
                let (perms, rest) = body.split_once("](").ok_or_else(bad)?;
                let args = rest.strip_suffix(')').ok_or_else(bad)?;
                let word = BeWord::parse(&format!("[{}]", perms.replace(',', "|"))).map_err(|_| bad())?;
                let gens: Vec<u8> = args.split(',').map(gen).collect::<Result<_, _>>()?;
                if gens.len() != word.arity() {
                    return Err(bad());
                }
                Ok(self.normalize_free(word, &gens, 1))
            }
        }
    }

    fn gen_degree(&self, g: u8) -> i64 {
        match &self.kind {
            FixtureKind::FreeE { generator_degrees, .. } => generator_degrees[g as usize],
            _ => 0,
        }
    }

    /// Normal form of c·u(v_{g_1}, …, v_{g_N}).
    fn normalize_free(&self, u: BeWord, g: &[u8], c: u32) -> Lin<Elem> {
        let p = self.prime;
        let n = g.len();
        let odd: Vec<bool> = g.iter().map(|&x| self.gen_degree(x) % 2 != 0).collect();
        // [u; g] = ± [π^{-1}·u; g∘π] with g∘π sorted
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&k| g[k]);
        let mut inversions = 0;
        for i in 0..n {
            for j in i + 1..n {
                if odd[i] && odd[j] && g[i] > g[j] {
                    inversions += 1;
                }
            }
        }
        let pi = Permutation::from_images(&order.iter().map(|k| k + 1).collect::<Vec<_>>()).expect("sorting order");
        let sorted: Vec<u8> = order.iter().map(|&k| g[k]).collect();
        let rep = self.e.act(&pi.inverse(), &u).expect("action within bounds");
        let Some((u0, c0)) = rep.iter().next().map(|(w, c)| (*w, c)) else { return Lin::zero(p) };
        let c = p.mul(p.mul(c, c0), p.sign_of(inversions));
        // minimum over the stabilizer of the sorted generator sequence
        let sorted_odd: Vec<bool> = sorted.iter().map(|&x| self.gen_degree(x) % 2 != 0).collect();
        let mut best: Option<(BeWord, u32)> = None;
        let mut killed = false;
        for tau in stabilizer(&sorted) {
            let sign = odd_block_sign(p, &tau, &sorted_odd);
            let moved = self.e.act(&tau, &u0).expect("action within bounds");
            let (w, cw) = moved.iter().next().map(|(w, c)| (*w, c)).expect("action of a permutation");
            // [u0; g] = sign·[τ·u0; g] up to the action coefficient
            let coeff = p.mul(sign, p.inv(cw));
            if w == u0 && coeff != 1 {
                killed = true;
            }
            match &best {
                Some((b, _)) if *b <= w => {}
                _ => best = Some((w, coeff)),
            }
        }
        if killed {
            return Lin::zero(p);
        }
        let (w, coeff) = best.expect("identity lies in the stabilizer");
        // [u0; g] = ε_τ [τ·u0; g]
        Lin::single(p, Elem::Free(FreeElem { op: w, gens: sorted }), p.mul(c, coeff))
    }

    fn product(&self, inputs: &[Elem]) -> Lin<Elem> {
        let p = self.prime;
        match &self.kind {
            FixtureKind::TruncatedPolynomial { n, .. } => {
                let mut k = 0usize;
                for x in inputs {
                    let Elem::Pow(a) = x else { return Lin::zero(p) };
                    k += *a as usize;
                }
                if k >= *n {
                    Lin::zero(p)
                } else {
                    Lin::basis(p, Elem::Pow(k as u8))
                }
            }
            FixtureKind::Exterior { .. } => {
                let mut mask = 0u16;
                let mut inv = 0u32;
                for x in inputs {
                    let Elem::Ext(b) = x else { return Lin::zero(p) };
                    if mask & b != 0 {
                        return Lin::zero(p);
                    }
                    for i in 0..16 {
                        if b >> i & 1 == 1 {
                            inv += (mask >> i).count_ones();
                        }
                    }
                    mask |= b;
                }
                Lin::single(p, Elem::Ext(mask), p.sign_of(inv as i64))
            }
            FixtureKind::FreeE { .. } => unreachable!("the free algebra is not commutative"),
        }
    }
}

/// Permutations fixing a sorted sequence: products of symmetric groups on its runs.
fn stabilizer(sorted: &[u8]) -> Vec<Permutation> {
    let n = sorted.len();
    let mut out = vec![Permutation::identity(n)];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && sorted[end] == sorted[start] {
            end += 1;
        }
        if end - start > 1 {
            let block = Permutation::all(end - start);
            out = out.iter().flat_map(|w| block.iter().map(move |b| w.compose(&b.embed(n, start + 1)))).collect();
        }
        start = end;
    }
    out
}

/// Koszul sign of a permutation of the entries flagged odd.
fn odd_block_sign(p: Prime, w: &Permutation, odd: &[bool]) -> u32 {
    let imgs = w.images();
    let mut inv = 0;
    for i in 0..imgs.len() {
        for j in i + 1..imgs.len() {
            if odd[i] && odd[j] && imgs[i] > imgs[j] {
                inv += 1;
            }
        }
    }
    p.sign_of(inv)
}

impl EAlgebra for Fixture {
    type X = Elem;

    fn prime(&self) -> Prime {
        self.prime
    }

    fn name(&self) -> String {
        self.kind.to_string()
    }

    fn degree(&self, x: &Elem) -> i64 {
        match (x, &self.kind) {
            (Elem::Pow(k), FixtureKind::TruncatedPolynomial { x_degree, .. }) => *k as i64 * x_degree,
            (Elem::Ext(m), _) => m.count_ones() as i64,
            (Elem::Free(f), _) => f.op.degree() + f.gens.iter().map(|&g| self.gen_degree(g)).sum::<i64>(),
            _ => 0,
        }
    }

    fn weight(&self, x: &Elem) -> usize {
        match x {
            Elem::Pow(k) => *k as usize,
            Elem::Ext(m) => m.count_ones() as usize,
            Elem::Free(f) => f.gens.len(),
        }
    }

    fn basis(&self, degree_max: i64, weight_max: usize) -> Vec<Elem> {
        let mut out = Vec::new();
        match &self.kind {
            FixtureKind::TruncatedPolynomial { n, x_degree } => {
                for k in 1..*n {
                    if k <= weight_max && k as i64 * x_degree <= degree_max {
                        out.push(Elem::Pow(k as u8));
                    }
                }
            }
            FixtureKind::Exterior { generators } => {
                for m in 1u32..(1 << generators) {
                    let w = m.count_ones() as usize;
                    if w <= weight_max && w as i64 <= degree_max {
                        out.push(Elem::Ext(m as u16));
                    }
                }
            }
            FixtureKind::FreeE { generator_degrees, weight_max: wm } => {
                let k = generator_degrees.len() as u8;
                let mut found = BTreeSet::new();
                for n in 1..=weight_max.min(*wm) {
                    for gens in multisets(k, n) {
                        let gdeg: i64 = gens.iter().map(|&g| self.gen_degree(g)).sum();
                        for d in 0..=(degree_max - gdeg).min(MAX_LEN as i64 - 1) {
                            if n == 1 && d > 0 {
                                break;
                            }
                            for_each_word(n, d as usize, |u| {
                                for (x, _) in self.normalize_free(*u, &gens, 1).iter() {
                                    found.insert(x.clone());
                                }
                            });
                        }
                    }
                }
                out.extend(found);
            }
        }
        out.sort();
        out
    }

    fn d(&self, x: &Elem) -> Lin<Elem> {
        let p = self.prime;
        match x {
            Elem::Free(f) => {
                let du = self.e.differential(&f.op).expect("differential within bounds");
                let mut out = Lin::zero(p);
                for (w, c) in du.iter() {
                    out.add_assign(&self.normalize_free(*w, &f.gens, c));
                }
                out
            }
            _ => Lin::zero(p),
        }
    }

    fn evaluate(&self, e: &BeWord, inputs: &[Elem]) -> OpResult<Lin<Elem>> {
        let p = self.prime;
        if e.arity() != inputs.len() || inputs.is_empty() {
            return Err(OperadError::Arity(format!("{} applied to {} inputs", e, inputs.len())));
        }
        match &self.kind {
            FixtureKind::FreeE { weight_max, .. } => {
                let mut us = Vec::with_capacity(inputs.len());
                let mut gens = Vec::new();
                let mut sign = 0i64;
                let mut before = 0i64;
                for x in inputs {
                    let Elem::Free(f) = x else {
                        return Err(OperadError::Unsupported(format!("{} is not in the free algebra", x)));
                    };
                    sign += before * f.op.degree();
                    before += f.gens.iter().map(|&g| self.gen_degree(g)).sum::<i64>();
                    us.push(Lin::basis(p, f.op));
                    gens.extend_from_slice(&f.gens);
                }
                if gens.len() > *weight_max {
                    return Ok(Lin::zero(p));
                }
                let composite = full_compose(&self.e, &Lin::basis(p, *e), &us)?;
                let mut out = Lin::zero(p);
                for (w, c) in composite.iter() {
                    out.add_assign(&self.normalize_free(*w, &gens, p.mul(c, p.sign_of(sign))));
                }
                Ok(out)
            }
            _ => {
                if e.degree() > 0 {
                    return Ok(Lin::zero(p));
                }
                Ok(self.product(inputs))
            }
        }
    }

    fn is_commutative(&self) -> bool {
        !matches!(self.kind, FixtureKind::FreeE { .. })
    }
}

/// Sorted n-element multisets of 0..k.
fn multisets(k: u8, n: usize) -> Vec<Vec<u8>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in multisets(k, n - 1) {
        let lo = rest.last().copied().unwrap_or(0);
        for g in lo..k {
            let mut v = rest.clone();
            v.push(g);
            out.push(v);
        }
    }
    out
}

/// A tensor word [a_1|…|a_n] in ΣĀ; the empty word is the unit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BarWord<X>(pub Vec<X>);

impl<X> BarWord<X> {
    pub fn empty() -> Self {
        BarWord(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<X: fmt::Display> fmt::Display for BarWord<X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "|")?;
            }
            write!(f, "{}", x)?;
        }
        write!(f, "]")
    }
}

/// An element of B(A)^{⊗n}.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TensorWord<X>(pub Vec<BarWord<X>>);

impl<X: fmt::Display> fmt::Display for TensorWord<X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "⊗")?;
            }
            write!(f, "{}", w)?;
        }
        Ok(())
    }
}

/// Bounds of a truncated bar complex: word length, total weight and bar degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BarBounds {
    pub length_max: usize,
    pub weight_max: usize,
    pub degree_max: i64,
}

/// The bar complex of an E-algebra, with the A∞ structure pulled back along φ: K → E.
pub struct Bar<'a, A: EAlgebra> {
    alg: &'a A,
    /// φ(μ_r) for r = 2, …, length_max.
    mu: Vec<Lin<BeWord>>,
    length_max: usize,
}

impl<'a, A: EAlgebra> Bar<'a, A> {
    pub fn new(alg: &'a A, length_max: usize) -> OpResult<Self> {
        if length_max > MAX_ARITY {
            return Err(OperadError::OutOfTruncation(format!("bar length {} exceeds {}", length_max, MAX_ARITY)));
        }
        let p = alg.prime();
        let top = length_max.max(2);
        let k = build_ainf(p, top);
        let e = BarrattEccles::new(p, top, top as i64);
        let phi = KToE::build(&k, &e)?;
        let mu = (2..=length_max).map(|r| phi.image(r).clone()).collect();
        Ok(Bar { alg, mu, length_max })
    }

    pub fn algebra(&self) -> &A {
        self.alg
    }

    pub fn prime(&self) -> Prime {
        self.alg.prime()
    }

    pub fn length_max(&self) -> usize {
        self.length_max
    }

    /// Degree Σ(|a_i| + 1).
    pub fn degree(&self, w: &BarWord<A::X>) -> i64 {
        w.0.iter().map(|a| self.alg.degree(a) + 1).sum()
    }

    pub fn weight(&self, w: &BarWord<A::X>) -> usize {
        w.0.iter().map(|a| self.alg.weight(a)).sum()
    }

    /// Θ(s⊗e)(sa_1, …, sa_M), as the coefficients of s(·).
    pub fn theta(&self, e: &BeWord, inputs: &[A::X]) -> OpResult<Lin<A::X>> {
        let m = inputs.len() as i64;
        let mut exp = m * e.degree();
        for (i, a) in inputs.iter().enumerate() {
            exp += self.alg.degree(a) * (m - 1 - i as i64);
        }
        Ok(self.alg.evaluate(e, inputs)?.scaled(self.prime().sign_of(exp)))
    }

    pub fn theta_lin(&self, x: &Lin<BeWord>, inputs: &[A::X]) -> OpResult<Lin<A::X>> {
        x.try_flat_map(|e| self.theta(e, inputs))
    }

    fn check_length(&self, w: &BarWord<A::X>) -> OpResult<()> {
        if w.len() > self.length_max {
            return Err(OperadError::OutOfTruncation(format!(
                "bar word {} has length {} > {}",
                w,
                w.len(),
                self.length_max
            )));
        }
        Ok(())
    }

    /// The bar differential: internal part plus the coderivation of Σ_r Θ(s⊗φ(μ_r)).
    pub fn differential(&self, w: &BarWord<A::X>) -> OpResult<Lin<BarWord<A::X>>> {
        self.check_length(w)?;
        let p = self.prime();
        let mut out = Lin::zero(p);
        let n = w.len();
        let mut prefix = 0i64;
        for k in 0..n {
            // d(sa) = -s(da)
            let da = self.alg.d(&w.0[k]);
            let c = p.neg(p.sign_of(prefix));
            for (b, cb) in da.iter() {
                let mut v = w.0.clone();
                v[k] = b.clone();
                out.add_term(BarWord(v), p.mul(c, cb));
            }
            for r in 2..=n - k {
                let mu = &self.mu[r - 2];
                if mu.is_zero() {
                    continue;
                }
                let val = self.theta_lin(mu, &w.0[k..k + r])?;
                // μ̃_r has degree -1
                let c = p.sign_of(prefix);
                for (b, cb) in val.iter() {
                    let mut v = w.0[..k].to_vec();
                    v.push(b.clone());
                    v.extend_from_slice(&w.0[k + r..]);
                    out.add_term(BarWord(v), p.mul(c, cb));
                }
            }
            prefix += self.alg.degree(&w.0[k]) + 1;
        }
        Ok(out)
    }

    pub fn differential_lin(&self, x: &Lin<BarWord<A::X>>) -> OpResult<Lin<BarWord<A::X>>> {
        x.try_flat_map(|w| self.differential(w))
    }

    /// The n-fold deconcatenation Δ^n(w).
    pub fn diagonal(&self, w: &BarWord<A::X>, n: usize) -> Lin<TensorWord<A::X>> {
        diagonal(self.prime(), w, n)
    }

    /// (∂ ⊗ id ⊗ … + … + id ⊗ … ⊗ ∂) on a tensor of bar words, with Koszul signs.
    pub fn tensor_differential(&self, t: &TensorWord<A::X>) -> OpResult<Lin<TensorWord<A::X>>> {
        let p = self.prime();
        let mut out = Lin::zero(p);
        let mut before = 0i64;
        for (i, w) in t.0.iter().enumerate() {
            let c = p.sign_of(before);
            for (dw, cd) in self.differential(w)?.iter() {
                let mut v = t.0.clone();
                v[i] = dw.clone();
                out.add_term(TensorWord(v), p.mul(c, cd));
            }
            before += self.degree(w);
        }
        Ok(out)
    }

    /// The shuffle product with Koszul signs on suspended degrees.
    pub fn shuffle_product(&self, u: &BarWord<A::X>, v: &BarWord<A::X>) -> Lin<BarWord<A::X>> {
        shuffle_product(self.prime(), u, v, |a| self.alg.degree(a) + 1)
    }

    pub fn shuffle_lin(&self, x: &Lin<BarWord<A::X>>, y: &Lin<BarWord<A::X>>) -> Lin<BarWord<A::X>> {
        let mut out = Lin::zero(self.prime());
        for (u, a) in x.iter() {
            for (v, b) in y.iter() {
                out.add_scaled(&self.shuffle_product(u, v), self.prime().mul(a, b));
            }
        }
        out
    }

    /// Basis words within the bounds, sorted by (degree, word).
    pub fn words(&self, b: BarBounds) -> Vec<BarWord<A::X>> {
        let letters: Vec<(A::X, i64, usize)> = self
            .alg
            .basis(b.degree_max - 1, b.weight_max)
            .into_iter()
            .map(|a| {
                let d = self.alg.degree(&a) + 1;
                let w = self.alg.weight(&a);
                (a, d, w)
            })
            .collect();
        let mut out = vec![BarWord::empty()];
        let mut frontier: Vec<(Vec<A::X>, i64, usize)> = vec![(Vec::new(), 0, 0)];
        for _ in 0..b.length_max.min(self.length_max) {
            let mut next = Vec::new();
            for (v, d, w) in &frontier {
                for (a, da, wa) in &letters {
                    if d + da <= b.degree_max && w + wa <= b.weight_max {
                        let mut v2 = v.clone();
                        v2.push(a.clone());
                        next.push((v2, d + da, w + wa));
                    }
                }
            }
            out.extend(next.iter().map(|(v, _, _)| BarWord(v.clone())));
            frontier = next;
        }
        out.sort_by_cached_key(|w| (self.degree(w), w.clone()));
        out
    }

    /// The truncated bar complex on the words within the bounds. Length, weight and degree
    /// truncations are all subcomplexes since ∂ lowers degree and does not raise length or weight.
    pub fn complex(&self, b: BarBounds) -> Result<ChainComplex<BarWord<A::X>>, LinearError> {
        let words = self.words(b);
        let module = GradedBasedModule::from_labels(words.into_iter().map(|w| (self.degree(&w), w)));
        ChainComplex::from_fn(self.prime(), module, |w| self.differential(w).expect("word within bounds"))
    }
}

/// All ways of splitting w into n consecutive, possibly empty, segments.
pub fn diagonal<X: BasisLabel>(p: Prime, w: &BarWord<X>, n: usize) -> Lin<TensorWord<X>> {
    assert!(n >= 1);
    let mut out = Lin::zero(p);
    let len = w.len();
    let mut cuts = vec![0usize; n + 1];
    cuts[n] = len;
    fn rec<X: BasisLabel>(w: &BarWord<X>, k: usize, cuts: &mut Vec<usize>, out: &mut Lin<TensorWord<X>>) {
        let n = cuts.len() - 1;
        if k == n {
            let parts = (0..n).map(|i| BarWord(w.0[cuts[i]..cuts[i + 1]].to_vec())).collect();
            out.add_term(TensorWord(parts), 1);
            return;
        }
        for c in cuts[k - 1]..=w.len() {
            cuts[k] = c;
            rec(w, k + 1, cuts, out);
        }
    }
    if n == 1 {
        out.add_term(TensorWord(vec![w.clone()]), 1);
    } else {
        rec(w, 1, &mut cuts, &mut out);
    }
    out
}

/// Σ over (|u|,|v|)-shuffles; each transposition of a letter of v past a letter of u
/// contributes the product of their degrees under `deg`.
pub fn shuffle_product<X: BasisLabel, F: Fn(&X) -> i64>(p: Prime, u: &BarWord<X>, v: &BarWord<X>, deg: F) -> Lin<BarWord<X>> {
    let mut out = Lin::zero(p);
    let du: Vec<i64> = u.0.iter().map(&deg).collect();
    let dv: Vec<i64> = v.0.iter().map(&deg).collect();
    // suffix sums of u's degrees: letters of u not yet placed
    let mut tail = vec![0i64; u.len() + 1];
    for i in (0..u.len()).rev() {
        tail[i] = tail[i + 1] + du[i];
    }
    fn rec<X: Clone + Ord>(
        u: &[X],
        v: &[X],
        i: usize,
        j: usize,
        tail: &[i64],
        dv: &[i64],
        sign: i64,
        cur: &mut Vec<X>,
        out: &mut Vec<(Vec<X>, i64)>,
    ) {
        if i == u.len() && j == v.len() {
            out.push((cur.clone(), sign));
            return;
        }
        if i < u.len() {
            cur.push(u[i].clone());
            rec(u, v, i + 1, j, tail, dv, sign, cur, out);
            cur.pop();
        }
        if j < v.len() {
            cur.push(v[j].clone());
            rec(u, v, i, j + 1, tail, dv, sign + tail[i] * dv[j], cur, out);
            cur.pop();
        }
    }
    let mut terms = Vec::new();
    rec(&u.0, &v.0, 0, 0, &tail, &dv, 0, &mut Vec::new(), &mut terms);
    for (w, s) in terms {
        out.add_term(BarWord(w), p.sign_of(s));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(p: Prime, n: usize) -> Fixture {
        Fixture::new(p, FixtureKind::TruncatedPolynomial { n, x_degree: 0 }).unwrap()
    }

    fn word(xs: &[Elem]) -> BarWord<Elem> {
        BarWord(xs.to_vec())
    }

    #[test]
    fn polynomial_products_and_differential() {
        let a = poly(Prime::TWO, 4);
        let m = BeWord::identity(2);
        assert_eq!(a.evaluate(&m, &[Elem::Pow(1), Elem::Pow(2)]).unwrap(), Lin::basis(Prime::TWO, Elem::Pow(3)));
        assert!(a.evaluate(&m, &[Elem::Pow(2), Elem::Pow(2)]).unwrap().is_zero());
        let a3 = poly(Prime::TWO, 3);
        let bar = Bar::new(&a3, 4).unwrap();
        let d = bar.differential(&word(&[Elem::Pow(1), Elem::Pow(1)])).unwrap();
        assert_eq!(d.render(), "[x^2]");
        let a2 = poly(Prime::TWO, 2);
        let bar2 = Bar::new(&a2, 4).unwrap();
        assert!(bar2.differential(&word(&vec![Elem::Pow(1); 3])).unwrap().is_zero());
        assert!(bar.differential(&word(&vec![Elem::Pow(1); 5])).is_err());
    }

    #[test]
    fn exterior_square_vanishes() {
        let a = Fixture::new(Prime::THREE, FixtureKind::Exterior { generators: 2 }).unwrap();
        let m = BeWord::identity(2);
        assert!(a.evaluate(&m, &[Elem::Ext(1), Elem::Ext(1)]).unwrap().is_zero());
        let ab = a.evaluate(&m, &[Elem::Ext(1), Elem::Ext(2)]).unwrap();
        let ba = a.evaluate(&m, &[Elem::Ext(2), Elem::Ext(1)]).unwrap();
        assert_eq!(ab, ba.neg());
        assert_eq!(a.parse_element("e2e1").unwrap(), ba);
    }

    #[test]
    fn free_algebra_coinvariants() {
        // E(2)_0 ⊗_{Σ_2} (v ⊗ v) is one-dimensional
        for p in [Prime::TWO, Prime::THREE] {
            let a = Fixture::new(p, FixtureKind::FreeE { generator_degrees: vec![0], weight_max: 2 }).unwrap();
            let b = a.basis(0, 2);
            assert_eq!(b.len(), 2, "{:?}", b);
            assert_eq!(b.iter().filter(|x| a.weight(x) == 2).count(), 1);
            // with an odd generator v·v survives only through the sign action
            let odd = Fixture::new(p, FixtureKind::FreeE { generator_degrees: vec![1], weight_max: 2 }).unwrap();
            let n2 = odd.basis(1 + 2, 2).into_iter().filter(|x| odd.weight(x) == 2 && odd.degree(x) == 2).count();
            assert_eq!(n2, 1);
        }
    }

    #[test]
    fn free_algebra_display_and_parse() {
        let p = Prime::THREE;
        let a = Fixture::new(p, FixtureKind::FreeE { generator_degrees: vec![0, 1], weight_max: 3 }).unwrap();
        for x in a.basis(2, 3) {
            let s = x.to_string();
            assert!(!s.contains('|'));
            assert_eq!(a.parse_element(&s).unwrap(), Lin::basis(p, x.clone()), "{}", s);
        }
    }

    #[test]
    fn diagonal_examples() {
        let p = Prime::TWO;
        let w = word(&[Elem::Pow(1), Elem::Pow(2)]);
        assert_eq!(diagonal(p, &word(&[Elem::Pow(1)]), 2).render(), "[]⊗[x] + [x]⊗[]");
        assert_eq!(diagonal(p, &w, 2).len(), 3);
        assert_eq!(diagonal(p, &w, 3).len(), 6);
        assert_eq!(diagonal(p, &w, 1).render(), "[x|x^2]");
    }

    #[test]
    fn shuffle_examples() {
        let p = Prime::TWO;
        let a = poly(p, 5);
        let bar = Bar::new(&a, 4).unwrap();
        let x = |k| word(&[Elem::Pow(k)]);
        assert_eq!(bar.shuffle_product(&x(1), &x(2)).render(), "[x|x^2] + [x^2|x]");
        assert_eq!(bar.shuffle_product(&BarWord::empty(), &x(3)), Lin::basis(p, x(3)));
    }

    #[test]
    fn shuffle_associative_for_odd_suspended_letters() {
        // letters of even degree in A are odd after suspension
        let p = Prime::THREE;
        let a = Fixture::new(p, FixtureKind::TruncatedPolynomial { n: 5, x_degree: 2 }).unwrap();
        let bar = Bar::new(&a, 4).unwrap();
        let (u, v, w) = (word(&[Elem::Pow(1)]), word(&[Elem::Pow(2)]), word(&[Elem::Pow(3)]));
        let l = bar.shuffle_lin(&bar.shuffle_product(&u, &v), &Lin::basis(p, w.clone()));
        let r = bar.shuffle_lin(&Lin::basis(p, u.clone()), &bar.shuffle_product(&v, &w));
        assert_eq!(l, r);
        assert_eq!(l.len(), 6);
        assert_eq!(bar.shuffle_product(&u, &v), bar.shuffle_product(&v, &u).neg());
    }

    #[test]
    fn words_respect_bounds() {
        let a = poly(Prime::TWO, 3);
        let bar = Bar::new(&a, 3).unwrap();
        let ws = bar.words(BarBounds { length_max: 3, weight_max: 10, degree_max: 10 });
        // 1 + 2 + 4 + 8
        assert_eq!(ws.len(), 15);
    }

    type Eval<'a> = dyn Fn(&BeWord, &[Elem]) -> Lin<Elem> + 'a;

    fn eval_multi(p: Prime, eval: &Eval, x: &BeWord, args: &[Lin<Elem>]) -> Lin<Elem> {
        let mut out = Lin::zero(p);
        let mut acc: Vec<(Vec<Elem>, u32)> = vec![(Vec::new(), 1)];
        for a in args {
            acc = acc.iter().flat_map(|(v, c)| a.iter().map(move |(e, ce)| {
                let mut v = v.clone();
                v.push(e.clone());
                (v, p.mul(*c, ce))
            })).collect();
        }
        for (v, c) in acc {
            out.add_scaled(&eval(x, &v), c);
        }
        out
    }

    /// Checks that `eval` is a morphism from `op` to the endomorphism operad of the span of
    /// `letters`, whose elements have degree `deg` and differential `d`.
    fn check_endomorphism_morphism<P: DgOperad<B = BeWord>>(
        op: &P,
        letters: &[Elem],
        deg: &dyn Fn(&Elem) -> i64,
        d: &dyn Fn(&Elem) -> Lin<Elem>,
        eval: &Eval,
    ) -> usize {
        let p = op.prime();
        let tuples = |n: usize| -> Vec<Vec<Elem>> {
            let mut out = vec![Vec::new()];
            for _ in 0..n {
                out = out.iter().flat_map(|v| letters.iter().map(move |a| {
                    let mut v = v.clone();
                    v.push(a.clone());
                    v
                })).collect();
            }
            out
        };
        let mut checks = 0;
        for m in 1..=3 {
            let xs = crate::operad::elements_up_to(op, m, 1).unwrap();
            for x in &xs {
                for a in tuples(m) {
                    // chain map
                    let lhs = eval(x, &a).flat_map(|b| d(b));
                    let mut rhs = Lin::zero(p);
                    for (dx, c) in op.differential(x).unwrap().iter() {
                        rhs.add_scaled(&eval(dx, &a), c);
                    }
                    let mut before = op.degree(x);
                    for k in 0..m {
                        let mut args: Vec<Lin<Elem>> = a.iter().map(|e| Lin::basis(p, e.clone())).collect();
                        args[k] = d(&a[k]);
                        rhs.add_scaled(&eval_multi(p, eval, x, &args), p.sign_of(before));
                        before += deg(&a[k]);
                    }
                    assert_eq!(lhs, rhs, "d({}({:?}))", x, a);
                    // equivariance
                    for w in Permutation::all(m) {
                        let moved: Vec<Elem> = (1..=m).map(|k| a[w.apply(k) - 1].clone()).collect();
                        let mut inv = 0;
                        for k in 1..=m {
                            for l in k + 1..=m {
                                if w.apply(k) > w.apply(l) {
                                    inv += deg(&a[w.apply(k) - 1]) * deg(&a[w.apply(l) - 1]);
                                }
                            }
                        }
                        let lhs = op.act(&w, x).unwrap().flat_map(|y| eval(y, &a));
                        let rhs = eval(x, &moved).scaled(p.sign_of(inv));
                        assert_eq!(lhs, rhs, "({}·{})({:?})", w, x, a);
                    }
                    checks += 1;
                }
                for n in 1..=4 - m {
                    for y in crate::operad::elements_up_to(op, n, 1).unwrap() {
                        for i in 1..=m {
                            for a in tuples(m + n - 1) {
                                let lhs = op.compose(x, i, &y).unwrap().flat_map(|z| eval(z, &a));
                                let inner = eval(&y, &a[i - 1..i - 1 + n]);
                                let mut args: Vec<Lin<Elem>> = a[..i - 1].iter().map(|e| Lin::basis(p, e.clone())).collect();
                                args.push(inner);
                                args.extend(a[i - 1 + n..].iter().map(|e| Lin::basis(p, e.clone())));
                                let sign: i64 = op.degree(&y) * a[..i - 1].iter().map(deg).sum::<i64>();
                                let rhs = eval_multi(p, eval, x, &args).scaled(p.sign_of(sign));
                                assert_eq!(lhs, rhs, "({} ∘_{} {})({:?})", x, i, y, a);
                                checks += 1;
                            }
                        }
                    }
                }
            }
        }
        checks
    }

    fn sign_fixtures(p: Prime) -> Vec<(Fixture, Vec<Elem>)> {
        let free = Fixture::new(p, FixtureKind::FreeE { generator_degrees: vec![0, 1], weight_max: 4 }).unwrap();
        let mut free_letters: Vec<Elem> = free.basis(1, 1);
        free_letters.push(free.parse_element("E[12,21](v1,v2)").unwrap().keys().next().unwrap().clone());
        let ext = Fixture::new(p, FixtureKind::Exterior { generators: 3 }).unwrap();
        let ext_letters = vec![Elem::Ext(1), Elem::Ext(2), Elem::Ext(6)];
        let poly = Fixture::new(p, FixtureKind::TruncatedPolynomial { n: 5, x_degree: 2 }).unwrap();
        vec![(free, free_letters), (ext, ext_letters), (poly, vec![Elem::Pow(1), Elem::Pow(2)])]
    }

    #[test]
    fn fixtures_are_e_algebras() {
        for p in [Prime::TWO, Prime::THREE] {
            let e = BarrattEccles::new(p, 4, 3);
            for (a, letters) in sign_fixtures(p) {
                let eval = |x: &BeWord, v: &[Elem]| a.evaluate(x, v).unwrap();
                let n = check_endomorphism_morphism(&e, &letters, &|x| a.degree(x), &|x| a.d(x), &eval);
                assert!(n > 0);
            }
        }
    }

    #[test]
    fn theta_is_a_morphism_from_the_suspension() {
        for p in [Prime::TWO, Prime::THREE] {
            let le = crate::operad::suspension::Suspension::new(BarrattEccles::new(p, 4, 3));
            for (a, letters) in sign_fixtures(p) {
                let bar = Bar::new(&a, 4).unwrap();
                let eval = |x: &BeWord, v: &[Elem]| bar.theta(x, v).unwrap();
                let d = |x: &Elem| a.d(x).neg();
                let n = check_endomorphism_morphism(&le, &letters, &|x| a.degree(x) + 1, &d, &eval);
                assert!(n > 0);
            }
        }
    }

    fn bar_fixtures(p: Prime) -> Vec<(Fixture, BarBounds)> {
        let mut out = Vec::new();
        let wide = BarBounds { length_max: 5, weight_max: 8, degree_max: 12 };
        for n in 2..=4 {
            let deg = if p.get() == 2 { 1 } else { 2 };
            out.push((Fixture::new(p, FixtureKind::TruncatedPolynomial { n, x_degree: deg }).unwrap(), wide));
        }
        out.push((Fixture::new(p, FixtureKind::Exterior { generators: 2 }).unwrap(), wide));
        out.push((
            Fixture::new(p, FixtureKind::FreeE { generator_degrees: vec![0, 1], weight_max: 3 }).unwrap(),
            BarBounds { length_max: 3, weight_max: 3, degree_max: 4 },
        ));
        out
    }

    #[test]
    fn bar_differential_squares_to_zero_and_is_a_coderivation() {
        for p in [Prime::TWO, Prime::THREE] {
            for (a, b) in bar_fixtures(p) {
                let bar = Bar::new(&a, b.length_max).unwrap();
                for w in bar.words(b) {
                    let d = bar.differential(&w).unwrap();
                    assert!(bar.differential_lin(&d).unwrap().is_zero(), "d² {} in {}", w, a.name());
                    for n in [2, 3] {
                        let lhs = d.flat_map(|v| diagonal(p, v, n));
                        let rhs = diagonal(p, &w, n).try_flat_map(|t| bar.tensor_differential(t)).unwrap();
                        assert_eq!(lhs, rhs, "Δ∂ {} in {}", w, a.name());
                    }
                }
            }
        }
    }

    #[test]
    fn shuffle_product_is_a_chain_map_for_commutative_fixtures() {
        for p in [Prime::TWO, Prime::THREE] {
            for (a, b) in bar_fixtures(p) {
                if !a.is_commutative() {
                    continue;
                }
                let bar = Bar::new(&a, 4).unwrap();
                let words = bar.words(BarBounds { length_max: 2, ..b });
                for u in &words {
                    for v in &words {
                        let uv = bar.shuffle_product(u, v);
                        let lhs = bar.differential_lin(&uv).unwrap();
                        let mut rhs = bar.shuffle_lin(&bar.differential(u).unwrap(), &Lin::basis(p, v.clone()));
                        rhs.add_scaled(
                            &bar.shuffle_lin(&Lin::basis(p, u.clone()), &bar.differential(v).unwrap()),
                            p.sign_of(bar.degree(u)),
                        );
                        assert_eq!(lhs, rhs, "∂({} ⌣ {})", u, v);
                        let vu = bar.shuffle_product(v, u).scaled(p.sign_of(bar.degree(u) * bar.degree(v)));
                        assert_eq!(uv, vu);
                    }
                }
            }
        }
    }
}
