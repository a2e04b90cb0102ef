//! The chain Barratt–Eccles operad E.
//!
//! E(r)_d is spanned by nondegenerate words (w_0, …, w_d) of permutations of r letters
//! (w_k ≠ w_{k+1}). The differential is the alternating sum of vertex deletions, the action
//! is componentwise left multiplication, composites are Eilenberg–Zilber sums over lattice
//! paths of componentwise composites of permutations, and the diagonal is Alexander–Whitney.
//! The contraction ν(w) = (id, w) is part of a strong deformation retract of E(r) onto F.

use std::fmt;

use crate::field::{Lin, Prime};
use crate::linear::{ChainComplex, GradedBasedModule, LinearError, Pair};
use crate::operad::{DgOperad, HopfOperad, OpResult, OperadError};
use crate::perm::{Permutation, PermError};

pub const MAX_ARITY: usize = 8;
pub const MAX_LEN: usize = 8;

/// A permutation of at most 8 letters packed into nibbles, first image in the top nibble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Packed(u32);

impl Packed {
    #[inline]
    pub fn get(self, k: usize) -> usize {
        ((self.0 >> (28 - 4 * k)) & 15) as usize
    }

    #[inline]
    fn with(self, k: usize, v: usize) -> Packed {
        let shift = 28 - 4 * k;
        Packed((self.0 & !(15 << shift)) | ((v as u32) << shift))
    }

    pub fn identity(r: usize) -> Packed {
        (0..r).fold(Packed(0), |p, k| p.with(k, k))
    }

    pub fn from_zero_based(img: &[usize]) -> Packed {
        img.iter().enumerate().fold(Packed(0), |p, (k, &v)| p.with(k, v))
    }

    pub fn from_perm(w: &Permutation) -> Packed {
        Packed::from_zero_based(&w.zero_based().iter().map(|&x| x as usize).collect::<Vec<_>>())
    }

    pub fn to_perm(self, r: usize) -> Permutation {
        Permutation::from_zero_based((0..r).map(|k| self.get(k) as u8).collect())
    }

    /// self ∘ other.
    #[inline]
    pub fn compose(self, other: Packed, r: usize) -> Packed {
        (0..r).fold(Packed(0), |p, k| p.with(k, self.get(other.get(k))))
    }

    pub fn inverse(self, r: usize) -> Packed {
        (0..r).fold(Packed(0), |p, k| p.with(self.get(k), k))
    }

    /// σ ∘_i τ for σ ∈ Σ_s, τ ∈ Σ_t: the bloc permutation of σ (block j = σ^{-1}(i) of size t)
    /// after τ inserted at position j. With t = 0 this deletes the letter i.
    pub fn circ(self, s: usize, i: usize, tau: Packed, t: usize) -> Packed {
        let sigma = self;
        // target start of the block of each value m; value i - 1 carries the block of size t
        let mut start = [0usize; MAX_ARITY + 1];
        let mut acc = 0;
        for (m, st) in start.iter_mut().enumerate().take(s) {
            *st = acc;
            acc += if m == i - 1 { t } else { 1 };
        }
        let mut out = Packed(0);
        let mut x = 0;
        for k in 0..s {
            let v = sigma.get(k);
            let base = start[v];
            if v == i - 1 {
                for o in 0..t {
                    out = out.with(x, base + tau.get(o));
                    x += 1;
                }
            } else {
                out = out.with(x, base);
                x += 1;
            }
        }
        out
    }

    /// All permutations of r letters in lexicographic order.
    pub fn all(r: usize) -> Vec<Packed> {
        Permutation::all(r).iter().map(Packed::from_perm).collect()
    }
}

/// A nondegenerate Barratt–Eccles word.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BeWord {
    r: u8,
    len: u8,
    v: [Packed; MAX_LEN],
}

impl BeWord {
    /// Builds a word, returning None if it is degenerate.
    pub fn new(r: usize, perms: &[Packed]) -> Option<BeWord> {
        assert!(r <= MAX_ARITY && !perms.is_empty() && perms.len() <= MAX_LEN);
        if perms.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        let mut v = [Packed(0); MAX_LEN];
        v[..perms.len()].copy_from_slice(perms);
        Some(BeWord { r: r as u8, len: perms.len() as u8, v })
    }

    pub fn from_perms(perms: &[Permutation]) -> Option<BeWord> {
        let r = perms[0].len();
        assert!(perms.iter().all(|w| w.len() == r));
        BeWord::new(r, &perms.iter().map(Packed::from_perm).collect::<Vec<_>>())
    }

    pub fn identity(r: usize) -> BeWord {
        BeWord::new(r, &[Packed::identity(r)]).unwrap()
    }

    #[inline]
    pub fn arity(&self) -> usize {
        self.r as usize
    }

    #[inline]
    pub fn degree(&self) -> i64 {
        self.len as i64 - 1
    }

    #[inline]
    pub fn perms(&self) -> &[Packed] {
        &self.v[..self.len as usize]
    }

    pub fn permutations(&self) -> Vec<Permutation> {
        self.perms().iter().map(|p| p.to_perm(self.arity())).collect()
    }

    /// Deletes vertex k; None if the result is degenerate or empty.
    pub fn face(&self, k: usize) -> Option<BeWord> {
        let n = self.len as usize;
        if n == 1 {
            return None;
        }
        if k > 0 && k + 1 < n && self.v[k - 1] == self.v[k + 1] {
            return None;
        }
        let mut v = [Packed(0); MAX_LEN];
        let mut x = 0;
        for (m, p) in self.perms().iter().enumerate() {
            if m != k {
                v[x] = *p;
                x += 1;
            }
        }
        Some(BeWord { r: self.r, len: self.len - 1, v })
    }

    /// Parses `[w0|w1|...]` with permutations in one-line image notation.
    pub fn parse(s: &str) -> Result<BeWord, PermError> {
        let err = || PermError::Parse(s.to_string());
        let body = s.trim().strip_prefix('[').and_then(|x| x.strip_suffix(']')).ok_or_else(err)?;
        let perms: Vec<Permutation> =
            body.split('|').map(|x| Permutation::parse_images(x.trim())).collect::<Result<_, _>>()?;
        if perms.is_empty() || perms.len() > MAX_LEN {
            return Err(err());
        }
        let r = perms[0].len();
        if r > MAX_ARITY || perms.iter().any(|w| w.len() != r) {
            return Err(err());
        }
        BeWord::from_perms(&perms).ok_or_else(err)
    }
}

impl fmt::Display for BeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, p) in self.perms().iter().enumerate() {
            if k > 0 {
                write!(f, "|")?;
            }
            if self.r == 0 {
                write!(f, "∅")?;
            }
            for m in 0..self.arity() {
                write!(f, "{}", p.get(m) + 1)?;
            }
        }
        write!(f, "]")
    }
}

impl fmt::Debug for BeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// All nondegenerate words of arity r and degree d, in lexicographic order, passed to a callback.
pub fn for_each_word<F: FnMut(&BeWord)>(r: usize, d: usize, mut f: F) {
    let all = Packed::all(r);
    let mut cur = vec![Packed(0); d + 1];
    fn rec<F: FnMut(&BeWord)>(all: &[Packed], r: usize, k: usize, cur: &mut Vec<Packed>, f: &mut F) {
        if k == cur.len() {
            f(&BeWord::new(r, cur).unwrap());
            return;
        }
        for &p in all {
            if k > 0 && cur[k - 1] == p {
                continue;
            }
            cur[k] = p;
            rec(all, r, k + 1, cur, f);
        }
    }
    rec(&all, r, 0, &mut cur, &mut f);
}

/// Number of nondegenerate words: r!·(r!-1)^d.
pub fn word_count(r: usize, d: usize) -> u64 {
    let f: u64 = (1..=r as u64).product();
    f * (f.saturating_sub(1)).pow(d as u32)
}

#[derive(Clone, Copy, Debug)]
pub struct BarrattEccles {
    prime: Prime,
    arity_max: usize,
    degree_max: i64,
}

impl BarrattEccles {
    pub fn new(prime: Prime, arity_max: usize, degree_max: i64) -> Self {
        assert!(arity_max <= MAX_ARITY);
        BarrattEccles { prime, arity_max, degree_max }
    }

    pub fn bounds(&self) -> (usize, i64) {
        (self.arity_max, self.degree_max)
    }

    pub fn id(&self, r: usize) -> BeWord {
        BeWord::identity(r)
    }

    /// ε: degree-0 words go to 1.
    pub fn augmentation(&self, x: &BeWord) -> u32 {
        u32::from(x.degree() == 0)
    }

    /// η(1) = identity word of E(r).
    pub fn eta(&self, r: usize) -> BeWord {
        BeWord::identity(r)
    }

    /// ν(w) = (id, w_0, …, w_d), zero if w_0 = id.
    pub fn nu(&self, x: &BeWord) -> OpResult<Lin<BeWord>> {
        let p = self.prime;
        let r = x.arity();
        let id = Packed::identity(r);
        if x.v[0] == id {
            return Ok(Lin::zero(p));
        }
        if x.len as usize >= MAX_LEN {
            return Err(OperadError::OutOfTruncation(format!("ν of {} exceeds word length {}", x, MAX_LEN)));
        }
        let mut v = [Packed(0); MAX_LEN];
        v[0] = id;
        v[1..=x.len as usize].copy_from_slice(x.perms());
        Ok(Lin::basis(p, BeWord { r: x.r, len: x.len + 1, v }))
    }

    pub fn nu_lin(&self, x: &Lin<BeWord>) -> OpResult<Lin<BeWord>> {
        x.try_flat_map(|w| self.nu(w))
    }

    /// Chain complex E(r) in degrees 0..=d_max+1.
    pub fn complex(&self, r: usize, d_max: usize) -> Result<ChainComplex<BeWord>, LinearError> {
        let mut labels = Vec::new();
        for d in 0..=d_max + 1 {
            for_each_word(r, d, |w| labels.push((d as i64, *w)));
        }
        let module = GradedBasedModule::from_labels(labels);
        ChainComplex::from_fn(self.prime, module, |w| self.differential(w).expect("differential within bounds"))
    }
}

/// Outcome of the exhaustive contraction check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SdrReport {
    pub words: u64,
    pub failures: Vec<String>,
}

/// Checks dν + νd = id - ηε, εη = id, νη = 0 and νν = 0 on every word of E(r) with r ≤ r_max
/// and degree ≤ d_max. Uses allocation-free term lists.
pub fn check_sdr(prime: Prime, r_max: usize, d_max: usize) -> SdrReport {
    let mut report = SdrReport { words: 0, failures: Vec::new() };
    for r in 1..=r_max {
        let id = Packed::identity(r);
        let e = BeWord::identity(r);
        // εη = id and νη = 0
        if e.degree() != 0 || e.v[0] != id {
            report.failures.push(format!("εη ≠ id in arity {}", r));
        }
        for d in 0..=d_max {
            for_each_word(r, d, |w| {
                report.words += 1;
                let mut terms: [(BeWord, u32); 2 * MAX_LEN + 2] = [(e, 0); 2 * MAX_LEN + 2];
                let mut n = 0;
                let mut push = |x: BeWord, c: u32| {
                    terms[n] = (x, c);
                    n += 1;
                };
                let cone = |x: &BeWord| -> Option<BeWord> {
                    if x.v[0] == id {
                        None
                    } else {
                        let mut v = [Packed(0); MAX_LEN];
                        v[0] = id;
                        v[1..=x.len as usize].copy_from_slice(x.perms());
                        Some(BeWord { r: x.r, len: x.len + 1, v })
                    }
                };
                // dν(w)
                if let Some(nw) = cone(w) {
                    if nw.v[1] == nw.v[0] {
                        unreachable!()
                    }
                    for k in 0..nw.len as usize {
                        if let Some(f) = nw.face(k) {
                            push(f, prime.sign(k % 2 == 1));
                        }
                    }
                    // νν = 0
                    if cone(&nw).is_some() {
                        report.failures.push(format!("νν ≠ 0 at {}", w));
                    }
                }
                // νd(w)
                if w.len > 1 {
                    for k in 0..w.len as usize {
                        if let Some(f) = w.face(k) {
                            if let Some(c) = cone(&f) {
                                push(c, prime.sign(k % 2 == 1));
                            }
                        }
                    }
                }
                // - w + ηε(w)
                push(*w, prime.neg(1));
                if d == 0 {
                    push(e, 1);
                }
                let slice = &mut terms[..n];
                slice.sort_unstable_by_key(|a| a.0);
                let mut k = 0;
                while k < n {
                    let mut c = 0;
                    let mut m = k;
                    while m < n && slice[m].0 == slice[k].0 {
                        c = prime.add(c, slice[m].1);
                        m += 1;
                    }
                    if c != 0 && report.failures.len() < 20 {
                        report.failures.push(format!("dν + νd ≠ id - ηε at {}", w));
                        break;
                    }
                    k = m;
                }
            });
        }
    }
    report
}

impl DgOperad for BarrattEccles {
    type B = BeWord;

    fn prime(&self) -> Prime {
        self.prime
    }

    fn name(&self) -> String {
        "E".to_string()
    }

    fn degree_range(&self, arity: usize) -> Option<(i64, i64)> {
        if arity > self.arity_max {
            None
        } else if arity <= 1 {
            Some((0, 0))
        } else {
            Some((0, self.degree_max.min(MAX_LEN as i64 - 1)))
        }
    }

    fn basis(&self, arity: usize, degree: i64) -> OpResult<Vec<BeWord>> {
        if arity > self.arity_max || degree > self.degree_max {
            return Err(OperadError::OutOfTruncation(format!(
                "E({}) in degree {} (bounds: arity {}, degree {})",
                arity, degree, self.arity_max, self.degree_max
            )));
        }
        if degree < 0 || degree as usize >= MAX_LEN {
            return Ok(Vec::new());
        }
        let mut out = Vec::with_capacity(word_count(arity, degree as usize) as usize);
        for_each_word(arity, degree as usize, |w| out.push(*w));
        Ok(out)
    }

    fn degree(&self, x: &BeWord) -> i64 {
        x.degree()
    }

    fn arity(&self, x: &BeWord) -> usize {
        x.arity()
    }

    fn unit(&self) -> Option<BeWord> {
        Some(BeWord::identity(1))
    }

    fn star(&self) -> Option<BeWord> {
        Some(BeWord::identity(0))
    }

    fn compose(&self, x: &BeWord, i: usize, y: &BeWord) -> OpResult<Lin<BeWord>> {
        let p = self.prime;
        let (s, t) = (x.arity(), y.arity());
        if i == 0 || i > s {
            return Err(OperadError::Arity(format!("∘_{} on E({})", i, s)));
        }
        let n = s + t - 1;
        let (a, b) = (x.degree() as usize, y.degree() as usize);
        if n > MAX_ARITY || a + b >= MAX_LEN {
            return Err(OperadError::OutOfTruncation(format!("{} ∘_{} {} exceeds word bounds", x, i, y)));
        }
        let mut out = Lin::zero(p);
        if a == 0 || b == 0 {
            let mut buf = [Packed(0); MAX_LEN];
            for (k, slot) in buf.iter_mut().enumerate().take(a + b + 1) {
                *slot = x.v[k.min(a)].circ(s, i, y.v[k.min(b)], t);
            }
            if let Some(w) = BeWord::new(n, &buf[..a + b + 1]) {
                out.add_term(w, 1);
            }
            return Ok(out);
        }
        // componentwise composites along each lattice path from (0,0) to (a,b)
        let mut grid = [[Packed(0); MAX_LEN]; MAX_LEN];
        for (xi, row) in grid.iter_mut().enumerate().take(a + 1) {
            for (yi, cell) in row.iter_mut().enumerate().take(b + 1) {
                *cell = x.v[xi].circ(s, i, y.v[yi], t);
            }
        }
        let mut buf = [Packed(0); MAX_LEN];
        buf[0] = grid[0][0];
        for mask in 0u32..(1 << (a + b)) {
            if mask.count_ones() as usize != a {
                continue;
            }
            // bit k set: step k advances x; the sign counts (y-step, later x-step) pairs
            let (mut xi, mut yi, mut inv) = (0, 0, 0);
            for step in 0..a + b {
                if mask >> step & 1 == 1 {
                    xi += 1;
                    inv += yi;
                } else {
                    yi += 1;
                }
                buf[step + 1] = grid[xi][yi];
            }
            if let Some(w) = BeWord::new(n, &buf[..a + b + 1]) {
                out.add_term(w, p.sign(inv % 2 == 1));
            }
        }
        Ok(out)
    }

    fn act(&self, w: &Permutation, x: &BeWord) -> OpResult<Lin<BeWord>> {
        let r = x.arity();
        if w.len() != r {
            return Err(OperadError::Arity(format!("Σ_{} acting on E({})", w.len(), r)));
        }
        let pw = Packed::from_perm(w);
        let mut y = *x;
        for k in 0..x.len as usize {
            y.v[k] = pw.compose(x.v[k], r);
        }
        Ok(Lin::basis(self.prime, y))
    }

    fn differential(&self, x: &BeWord) -> OpResult<Lin<BeWord>> {
        let p = self.prime;
        let mut out = Lin::zero(p);
        if x.len > 1 {
            for k in 0..x.len as usize {
                if let Some(f) = x.face(k) {
                    out.add_term(f, p.sign(k % 2 == 1));
                }
            }
        }
        Ok(out)
    }
}

impl HopfOperad for BarrattEccles {
    fn diagonal(&self, x: &BeWord) -> OpResult<Lin<Pair<BeWord, BeWord>>> {
        let mut out = Lin::zero(self.prime);
        let n = x.len as usize;
        let r = x.arity();
        for k in 0..n {
            let front = BeWord::new(r, &x.perms()[..=k]).expect("subwords are nondegenerate");
            let back = BeWord::new(r, &x.perms()[k..]).expect("subwords are nondegenerate");
            out.add_term(Pair(front, back), 1);
        }
        Ok(out)
    }

    fn counit(&self, x: &BeWord) -> u32 {
        self.augmentation(x)
    }
}
