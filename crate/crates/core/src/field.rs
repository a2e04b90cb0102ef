//! Prime fields and sparse linear combinations over them.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not a prime")]
    NotPrime(u32),
    #[error("scalars over different primes ({0} and {1})")]
    PrimeMismatch(u32, u32),
}

/// A prime modulus. Construction checks primality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u32);

impl Prime {
    pub const TWO: Prime = Prime(2);
    pub const THREE: Prime = Prime(3);

    pub fn new(p: u32) -> Result<Prime, FieldError> {
        if p < 2 || p > 46_337 || (2..p).take_while(|d| d * d <= p).any(|d| p % d == 0) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Prime(p))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn reduce(self, x: i64) -> u32 {
        x.rem_euclid(self.0 as i64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.0 as u64) as u32
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    /// Multiplicative inverse of a nonzero residue.
    pub fn inv(self, a: u32) -> u32 {
        assert!(a % self.0 != 0, "inverse of zero");
        self.pow(a, self.0 - 2)
    }

    pub fn pow(self, mut a: u32, mut e: u32) -> u32 {
        let mut acc = 1 % self.0;
        a %= self.0;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// The scalar (-1)^k for a parity flag.
    #[inline]
    pub fn sign(self, odd: bool) -> u32 {
        if odd {
            self.0 - 1
        } else {
            1
        }
    }

    /// The scalar (-1)^e.
    #[inline]
    pub fn sign_of(self, e: i64) -> u32 {
        self.sign(e.rem_euclid(2) == 1)
    }

    /// Signed representative in (-p/2, p/2], used for printing.
    pub fn signed(self, a: u32) -> i64 {
        if a as u64 * 2 > self.0 as u64 {
            a as i64 - self.0 as i64
        } else {
            a as i64
        }
    }
}

impl Default for Prime {
    fn default() -> Self {
        Prime::TWO
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A residue modulo a prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fp {
    value: u32,
    p: Prime,
}

impl Fp {
    pub fn new(p: Prime, x: i64) -> Fp {
        Fp { value: p.reduce(x), p }
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn prime(self) -> Prime {
        self.p
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn check(self, o: Fp) -> Result<(), FieldError> {
        if self.p != o.p {
            Err(FieldError::PrimeMismatch(self.p.0, o.p.0))
        } else {
            Ok(())
        }
    }

    pub fn try_add(self, o: Fp) -> Result<Fp, FieldError> {
        self.check(o)?;
        Ok(Fp { value: self.p.add(self.value, o.value), p: self.p })
    }

    pub fn try_mul(self, o: Fp) -> Result<Fp, FieldError> {
        self.check(o)?;
        Ok(Fp { value: self.p.mul(self.value, o.value), p: self.p })
    }

    pub fn neg(self) -> Fp {
        Fp { value: self.p.neg(self.value), p: self.p }
    }

    pub fn inv(self) -> Option<Fp> {
        if self.value == 0 {
            None
        } else {
            Some(Fp { value: self.p.inv(self.value), p: self.p })
        }
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Finite formal sum of keys with coefficients in F_p, kept sorted by key with no zero terms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lin<K: Ord> {
    p: Prime,
    terms: Vec<(K, u32)>,
}

impl<K: Ord + Clone> Lin<K> {
    pub fn zero(p: Prime) -> Self {
        Lin { p, terms: Vec::new() }
    }

    pub fn single(p: Prime, k: K, c: u32) -> Self {
        let c = c % p.get();
        Lin { p, terms: if c == 0 { Vec::new() } else { vec![(k, c)] } }
    }

    pub fn basis(p: Prime, k: K) -> Self {
        Lin::single(p, k, 1)
    }

    pub fn from_terms<I: IntoIterator<Item = (K, u32)>>(p: Prime, it: I) -> Self {
        let mut v: Vec<(K, u32)> = it.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(K, u32)> = Vec::with_capacity(v.len());
        for (k, c) in v {
            let c = c % p.get();
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 = p.add(last.1, c),
                _ => out.push((k, c)),
            }
        }
        out.retain(|x| x.1 != 0);
        Lin { p, terms: out }
    }

    #[inline]
    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn add_term(&mut self, k: K, c: u32) {
        let c = c % self.p.get();
        if c == 0 {
            return;
        }
        match self.terms.binary_search_by(|x| x.0.cmp(&k)) {
            Ok(i) => {
                let s = self.p.add(self.terms[i].1, c);
                if s == 0 {
                    self.terms.remove(i);
                } else {
                    self.terms[i].1 = s;
                }
            }
            Err(i) => self.terms.insert(i, (k, c)),
        }
    }

    pub fn add_scaled(&mut self, other: &Lin<K>, c: u32) {
        let c = c % self.p.get();
        if c == 0 || other.terms.is_empty() {
            return;
        }
        let p = self.p;
        if other.terms.len() <= 4 || self.terms.is_empty() {
            if self.terms.is_empty() {
                self.terms = other.terms.iter().map(|(k, v)| (k.clone(), p.mul(*v, c))).collect();
                return;
            }
            for (k, v) in &other.terms {
                self.add_term(k.clone(), p.mul(*v, c));
            }
            return;
        }
        // merge
        let mine = std::mem::take(&mut self.terms);
        let mut out = Vec::with_capacity(mine.len() + other.terms.len());
        let mut b = other.terms.iter().peekable();
        for (k, v) in mine {
            while let Some((k2, v2)) = b.peek() {
                if *k2 < k {
                    out.push((k2.clone(), p.mul(*v2, c)));
                    b.next();
                } else {
                    break;
                }
            }
            match b.peek() {
                Some((k2, v2)) if *k2 == k => {
                    let s = p.add(v, p.mul(*v2, c));
                    if s != 0 {
                        out.push((k, s));
                    }
                    b.next();
                }
                _ => out.push((k, v)),
            }
        }
        for (k2, v2) in b {
            out.push((k2.clone(), p.mul(*v2, c)));
        }
        self.terms = out;
    }

    pub fn add_assign(&mut self, other: &Lin<K>) {
        self.add_scaled(other, 1);
    }

    pub fn sub_assign(&mut self, other: &Lin<K>) {
        self.add_scaled(other, self.p.get() - 1);
    }

    pub fn scaled(&self, c: u32) -> Lin<K> {
        let c = c % self.p.get();
        if c == 0 {
            return Lin::zero(self.p);
        }
        let p = self.p;
        Lin { p, terms: self.terms.iter().map(|(k, v)| (k.clone(), p.mul(*v, c))).collect() }
    }

    pub fn neg(&self) -> Lin<K> {
        self.scaled(self.p.get() - 1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, k: &K) -> u32 {
        match self.terms.binary_search_by(|x| x.0.cmp(k)) {
            Ok(i) => self.terms[i].1,
            Err(_) => 0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, u32)> {
        self.terms.iter().map(|(k, c)| (k, *c))
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.terms.iter().map(|x| &x.0)
    }

    pub fn into_terms(self) -> impl Iterator<Item = (K, u32)> {
        self.terms.into_iter()
    }

    /// Linear extension of a map on keys.
    pub fn flat_map<L: Ord + Clone, F: FnMut(&K) -> Lin<L>>(&self, mut f: F) -> Lin<L> {
        let mut out = Lin::zero(self.p);
        for (k, c) in &self.terms {
            out.add_scaled(&f(k), *c);
        }
        out
    }

    /// Linear extension of a fallible map on keys.
    pub fn try_flat_map<L: Ord + Clone, E, F: FnMut(&K) -> Result<Lin<L>, E>>(
        &self,
        mut f: F,
    ) -> Result<Lin<L>, E> {
        let mut out = Lin::zero(self.p);
        for (k, c) in &self.terms {
            out.add_scaled(&f(k)?, *c);
        }
        Ok(out)
    }

    pub fn map_keys<L: Ord + Clone, F: FnMut(&K) -> L>(&self, mut f: F) -> Lin<L> {
        Lin::from_terms(self.p, self.terms.iter().map(|(k, c)| (f(k), *c)))
    }

    pub fn filter<F: FnMut(&K) -> bool>(&self, mut f: F) -> Lin<K> {
        Lin { p: self.p, terms: self.terms.iter().filter(|(k, _)| f(k)).cloned().collect() }
    }
}

impl<K: Ord + Clone> Lin<K> {
    /// Parses the output of [`Lin::render`], given a parser for keys. Keys must not contain
    /// spaces.
    pub fn parse_with<F: Fn(&str) -> Option<K>>(p: Prime, s: &str, key: F) -> Option<Lin<K>> {
        let s = s.trim();
        let mut out = Lin::zero(p);
        if s == "0" {
            return Some(out);
        }
        let mut sign = 1i64;
        let mut expect_term = true;
        for tok in s.split_whitespace() {
            if !expect_term {
                sign = match tok {
                    "+" => 1,
                    "-" => -1,
                    _ => return None,
                };
                expect_term = true;
                continue;
            }
            let (neg, tok) = match tok.strip_prefix('-') {
                Some(t) => (true, t),
                None => (false, tok),
            };
            let (c, k) = match tok.split_once('*') {
                Some((c, k)) if c.chars().all(|ch| ch.is_ascii_digit()) && !c.is_empty() => (c.parse::<i64>().ok()?, k),
                _ => (1, tok),
            };
            let c = if neg { -c } else { c } * sign;
            out.add_term(key(k)?, p.reduce(c));
            expect_term = false;
        }
        (!expect_term).then_some(out)
    }
}

impl<K: Ord + Clone + fmt::Display> Lin<K> {
    /// Canonical text form: `c*key + c*key`, coefficients as signed representatives.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (i, (k, c)) in self.terms.iter().enumerate() {
            let c = self.p.signed(*c);
            if i > 0 {
                s.push_str(if c < 0 { " - " } else { " + " });
            } else if c < 0 {
                s.push('-');
            }
            let a = c.abs();
            if a != 1 {
                s.push_str(&format!("{}*", a));
            }
            s.push_str(&k.to_string());
        }
        s
    }
}

impl<K: Ord + Clone + fmt::Display> fmt::Display for Lin<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl<K: Ord + fmt::Debug> fmt::Debug for Lin<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lin(p={}) ", self.p)?;
        f.debug_map().entries(self.terms.iter().map(|(k, c)| (k, self.p.signed(*c)))).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality() {
        assert!(Prime::new(2).is_ok());
        assert!(Prime::new(3).is_ok());
        assert!(Prime::new(7).is_ok());
        assert_eq!(Prime::new(1), Err(FieldError::NotPrime(1)));
        assert_eq!(Prime::new(9), Err(FieldError::NotPrime(9)));
    }

    #[test]
    fn field_ops() {
        let p = Prime::new(7).unwrap();
        for a in 1..7 {
            assert_eq!(p.mul(a, p.inv(a)), 1);
            assert_eq!(p.add(a, p.neg(a)), 0);
        }
        assert_eq!(p.sign(true), 6);
        assert_eq!(Prime::TWO.sign(true), 1);
        assert_eq!(p.signed(6), -1);
    }

    #[test]
    fn scalar_prime_mismatch() {
        let a = Fp::new(Prime::TWO, 1);
        let b = Fp::new(Prime::THREE, 1);
        assert!(a.try_add(b).is_err());
        assert_eq!(Fp::new(Prime::THREE, 2).try_mul(Fp::new(Prime::THREE, 2)).unwrap().value(), 1);
    }

    #[test]
    fn lin_cancellation() {
        let p = Prime::THREE;
        let mut l = Lin::single(p, "a", 1);
        l.add_term("b", 2);
        l.add_term("a", 2);
        assert_eq!(l.len(), 1);
        assert_eq!(l.coeff(&"b"), 2);
        assert_eq!(l.render(), "-b");
        let m = l.neg();
        l.add_assign(&m);
        assert!(l.is_zero());
    }
}
