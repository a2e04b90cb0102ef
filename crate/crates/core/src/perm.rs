//! Symmetric groups, bloc permutations, shuffles and the decomposition of injections.
//!
//! A permutation `w` of {1..n} is stored by its images. Composition `w.compose(v)`
//! is `w ∘ v` (apply `v` first). On tensor factors the action is on positions:
//! `(w·f)(x_1,…,x_n) = f(x_{w(1)},…,x_{w(n)})`.

use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

use crate::field::Prime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("images {0:?} do not form a bijection of 1..n")]
    NotBijective(Vec<usize>),
    #[error("images {0:?} are not injective into 1..{1}")]
    NotInjective(Vec<usize>, usize),
    #[error("cannot parse permutation {0:?}")]
    Parse(String),
}

type Images = SmallVec<[u8; 16]>;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    img: Images,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { img: (0..n as u8).collect() }
    }

    /// From 1-based images.
    pub fn from_images(images: &[usize]) -> Result<Self, PermError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in images {
            if x == 0 || x > n || seen[x - 1] {
                return Err(PermError::NotBijective(images.to_vec()));
            }
            seen[x - 1] = true;
        }
        Ok(Permutation { img: images.iter().map(|&x| (x - 1) as u8).collect() })
    }

    /// From 0-based images, unchecked beyond a debug assertion.
    pub fn from_zero_based(img: Vec<u8>) -> Self {
        debug_assert!({
            let mut s = img.clone();
            s.sort_unstable();
            s.iter().enumerate().all(|(i, &x)| x as usize == i)
        });
        Permutation { img: Images::from_vec(img) }
    }

    /// The transposition of i and i+1 (1-based) in Σ_n.
    pub fn adjacent(n: usize, i: usize) -> Self {
        let mut p = Self::identity(n);
        p.img.swap(i - 1, i);
        p
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut p = Self::identity(n);
        p.img.swap(a - 1, b - 1);
        p
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.img.len()
    }

    pub fn is_empty(&self) -> bool {
        self.img.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.img.iter().enumerate().all(|(i, &x)| i == x as usize)
    }

    /// w(i), 1-based.
    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.img[i - 1] as usize + 1
    }

    #[inline]
    pub fn zero_based(&self) -> &[u8] {
        &self.img
    }

    pub fn images(&self) -> Vec<usize> {
        self.img.iter().map(|&x| x as usize + 1).collect()
    }

    /// self ∘ other.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "composing permutations of different sizes");
        Permutation { img: other.img.iter().map(|&x| self.img[x as usize]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv: Images = smallvec::smallvec![0u8; self.len()];
        for (i, &x) in self.img.iter().enumerate() {
            inv[x as usize] = i as u8;
        }
        Permutation { img: inv }
    }

    pub fn is_odd(&self) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut transpositions = 0;
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let mut j = i;
            let mut len = 0;
            while !seen[j] {
                seen[j] = true;
                j = self.img[j] as usize;
                len += 1;
            }
            transpositions += len - 1;
        }
        transpositions % 2 == 1
    }

    /// The sign as a scalar of F_p.
    pub fn sign(&self, p: Prime) -> u32 {
        p.sign(self.is_odd())
    }

    /// All permutations of {1..n} in lexicographic order of images.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut cur: Vec<u8> = (0..n as u8).collect();
        loop {
            out.push(Permutation { img: Images::from_slice(&cur) });
            // next lexicographic permutation
            let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
            let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
            cur.swap(i - 1, j);
            cur[i..].reverse();
        }
        out
    }

    /// Identity on 1..k-1 and k+len.., acting by `self` on the window k..k+len-1 of Σ_n.
    pub fn embed(&self, n: usize, k: usize) -> Permutation {
        let mut img: Images = (0..n as u8).collect();
        for (a, &x) in self.img.iter().enumerate() {
            img[k - 1 + a] = (k - 1) as u8 + x;
        }
        Permutation { img }
    }

    /// Image notation, e.g. `312`; entries are comma-separated when n > 9.
    pub fn image_string(&self) -> String {
        if self.len() > 9 {
            self.images().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        } else {
            self.img.iter().map(|&x| char::from(b'1' + x)).collect()
        }
    }

    pub fn parse_images(s: &str) -> Result<Permutation, PermError> {
        let err = || PermError::Parse(s.to_string());
        let ims: Vec<usize> = if s.contains(',') {
            s.split(',').map(|t| t.trim().parse::<usize>().map_err(|_| err())).collect::<Result<_, _>>()?
        } else {
            s.chars().map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(err)).collect::<Result<_, _>>()?
        };
        Permutation::from_images(&ims)
    }

    /// Cycle notation with fixed points omitted; the identity is `()`.
    pub fn cycle_string(&self) -> String {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut s = String::new();
        for i in 0..n {
            if seen[i] || self.img[i] as usize == i {
                continue;
            }
            s.push('(');
            let mut j = i;
            let mut first = true;
            while !seen[j] {
                seen[j] = true;
                if !first {
                    s.push(' ');
                }
                first = false;
                s.push_str(&(j + 1).to_string());
                j = self.img[j] as usize;
            }
            s.push(')');
        }
        if s.is_empty() {
            s.push_str("()");
        }
        s
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.cycle_string())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.image_string())
    }
}

/// Permutes contiguous blocks: source block k (of size sizes[k-1]) is sent to
/// block position w(k) of the target, whose blocks appear in target order.
pub fn bloc_permutation(w: &Permutation, sizes: &[usize]) -> Permutation {
    let r = w.len();
    assert_eq!(sizes.len(), r, "one size per block");
    let winv = w.inverse();
    let mut target_start = vec![0usize; r];
    let mut acc = 0;
    for j in 0..r {
        target_start[j] = acc;
        acc += sizes[winv.img[j] as usize];
    }
    let mut img = Images::with_capacity(acc);
    for k in 0..r {
        let t = target_start[w.img[k] as usize];
        for o in 0..sizes[k] {
            img.push((t + o) as u8);
        }
    }
    Permutation { img }
}

/// The index permutation (j-1)r+i ↦ (i-1)n+j of Σ_{rn}.
pub fn shuffle_index(r: usize, n: usize) -> Permutation {
    let mut img: Images = smallvec::smallvec![0u8; r * n];
    for j in 0..n {
        for i in 0..r {
            img[j * r + i] = (i * n + j) as u8;
        }
    }
    Permutation { img }
}

/// Bloc permutation of the rn groupings of sizes `sizes[j][i]` (j < n, i < r), listed
/// in the order (j, i), induced by the index rule (j-1)r+i ↦ (i-1)n+j.
///
/// With r = t and n = m this is also the permutation shuffle_i(n^k_j) used for
/// composites, with groupings listed in the order (j, k).
pub fn shuffle_perm(r: usize, n: usize, sizes: &[Vec<usize>]) -> Permutation {
    assert_eq!(sizes.len(), n);
    let flat: Vec<usize> = sizes
        .iter()
        .flat_map(|row| {
            assert_eq!(row.len(), r);
            row.iter().copied()
        })
        .collect();
    bloc_permutation(&shuffle_index(r, n), &flat)
}

/// Strictly injective map {1..r} → {1..s}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InjectiveMap {
    pub s: usize,
    img: Vec<usize>,
}

impl InjectiveMap {
    pub fn new(s: usize, images: &[usize]) -> Result<Self, PermError> {
        let mut seen = vec![false; s + 1];
        for &x in images {
            if x == 0 || x > s || seen[x] {
                return Err(PermError::NotInjective(images.to_vec(), s));
            }
            seen[x] = true;
        }
        Ok(InjectiveMap { s, img: images.to_vec() })
    }

    pub fn r(&self) -> usize {
        self.img.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.img[i - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.img
    }

    pub fn is_monotone(&self) -> bool {
        self.img.windows(2).all(|w| w[0] < w[1])
    }

    /// self ∘ σ.
    pub fn after(&self, sigma: &Permutation) -> InjectiveMap {
        InjectiveMap { s: self.s, img: (1..=self.r()).map(|i| self.apply(sigma.apply(i))).collect() }
    }
}

/// The unique factorization u = α∘σ with α monotone and σ a permutation.
pub fn lambda_decompose(u: &InjectiveMap) -> (InjectiveMap, Permutation) {
    let mut sorted = u.img.clone();
    sorted.sort_unstable();
    let alpha = InjectiveMap { s: u.s, img: sorted.clone() };
    let sigma: Vec<usize> = u.img.iter().map(|x| sorted.binary_search(x).unwrap() + 1).collect();
    (alpha, Permutation::from_images(&sigma).unwrap())
}

/// All (p,q)-shuffles with their signs, ordered lexicographically by the images of 1..p.
pub fn pq_shuffles(p: usize, q: usize, prime: Prime) -> Vec<(Permutation, u32)> {
    let n = p + q;
    let mut out = Vec::new();
    let mut choose = Vec::with_capacity(p);
    fn rec(start: usize, n: usize, p: usize, choose: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if choose.len() == p {
            out.push(choose.clone());
            return;
        }
        for x in start..n {
            if n - x < p - choose.len() {
                break;
            }
            choose.push(x);
            rec(x + 1, n, p, choose, out);
            choose.pop();
        }
    }
    let mut firsts = Vec::new();
    rec(0, n, p, &mut choose, &mut firsts);
    for f in firsts {
        let mut img = Vec::with_capacity(n);
        img.extend(f.iter().map(|&x| x as u8));
        img.extend((0..n).filter(|x| !f.contains(x)).map(|x| x as u8));
        let perm = Permutation { img: Images::from_vec(img) };
        let s = perm.sign(prime);
        out.push((perm, s));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn perm(v: &[usize]) -> Permutation {
        Permutation::from_images(v).unwrap()
    }

    #[test]
    fn bloc_examples() {
        assert!(bloc_permutation(&Permutation::identity(3), &[2, 0, 1]).is_identity());
        assert_eq!(bloc_permutation(&perm(&[2, 1]), &[1, 2]).images(), vec![3, 1, 2]);
        let b = bloc_permutation(&perm(&[2, 1]), &[0, 3]);
        assert!(b.is_identity() && b.len() == 3);
    }

    #[test]
    fn shuffle_examples() {
        assert!(shuffle_perm(1, 3, &[vec![2], vec![1], vec![1]]).is_identity());
        assert!(shuffle_perm(3, 1, &[vec![1, 2, 1]]).is_identity());
        let s = shuffle_perm(2, 2, &[vec![1, 1], vec![1, 1]]);
        assert_eq!(s.images(), vec![1, 3, 2, 4]);
        // deleting the grouping (j=1, i=2): groupings (1,1),(2,1),(2,2) of size 1
        let s0 = shuffle_perm(2, 2, &[vec![1, 0], vec![1, 1]]);
        assert_eq!(s0.images(), vec![1, 2, 3]);
        let s1 = shuffle_perm(2, 2, &[vec![1, 1], vec![0, 1]]);
        assert_eq!(s1.images(), vec![1, 2, 3]);
        let s2 = shuffle_perm(2, 2, &[vec![1, 1], vec![1, 0]]);
        assert_eq!(s2.images(), vec![1, 3, 2]);
    }

    #[test]
    fn decompose_examples() {
        let u = InjectiveMap::new(3, &[1, 3]).unwrap();
        let (a, s) = lambda_decompose(&u);
        assert_eq!(a, u);
        assert!(s.is_identity());
        let u = InjectiveMap::new(3, &[3, 1]).unwrap();
        let (a, s) = lambda_decompose(&u);
        assert_eq!(a.images(), &[1, 3]);
        assert_eq!(s.images(), vec![2, 1]);
        let u = InjectiveMap::new(3, &[2, 3, 1]).unwrap();
        let (a, s) = lambda_decompose(&u);
        assert_eq!(a.images(), &[1, 2, 3]);
        assert_eq!(s.images(), vec![2, 3, 1]);
        assert!(InjectiveMap::new(3, &[1, 1]).is_err());
    }

    #[test]
    fn shuffle_signs() {
        let p3 = Prime::THREE;
        let s = pq_shuffles(0, 4, p3);
        assert_eq!(s.len(), 1);
        assert!(s[0].0.is_identity() && s[0].1 == 1);
        let s = pq_shuffles(1, 1, p3);
        assert_eq!(s.iter().map(|x| x.1).collect::<Vec<_>>(), vec![1, 2]);
        let s = pq_shuffles(2, 1, p3);
        assert_eq!(s.len(), 3);
        assert_eq!(s.iter().fold(0, |a, x| p3.add(a, x.1)), 1);
        assert_eq!(pq_shuffles(3, 2, p3).len(), 10);
    }

    #[test]
    fn all_and_sign() {
        assert_eq!(Permutation::all(4).len(), 24);
        let odd = Permutation::all(4).iter().filter(|p| p.is_odd()).count();
        assert_eq!(odd, 12);
        assert_eq!(perm(&[2, 3, 1]).cycle_string(), "(1 2 3)");
        assert_eq!(Permutation::identity(3).cycle_string(), "()");
        assert_eq!(Permutation::parse_images("312").unwrap(), perm(&[3, 1, 2]));
    }

    fn arb_perm(n: usize) -> impl Strategy<Value = Permutation> {
        Just((0..n).collect::<Vec<usize>>()).prop_shuffle().prop_map(|v| {
            Permutation::from_images(&v.iter().map(|x| x + 1).collect::<Vec<_>>()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn bloc_is_functorial(
            (w, w2, sizes) in (1usize..5).prop_flat_map(|n| (arb_perm(n), arb_perm(n), prop::collection::vec(0usize..3, n)))
        ) {
            let lhs = bloc_permutation(&w.compose(&w2), &sizes);
            let w2inv = w2.inverse();
            let permuted: Vec<usize> = (1..=sizes.len()).map(|j| sizes[w2inv.apply(j) - 1]).collect();
            let rhs = bloc_permutation(&w, &permuted).compose(&bloc_permutation(&w2, &sizes));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn unit_sizes_give_index_rule(r in 1usize..4, n in 1usize..4) {
            let ones = vec![vec![1; r]; n];
            prop_assert_eq!(shuffle_perm(r, n, &ones), shuffle_index(r, n));
        }

        #[test]
        fn group_laws((a, b) in (1usize..6).prop_flat_map(|n| (arb_perm(n), arb_perm(n)))) {
            prop_assert!(a.compose(&a.inverse()).is_identity());
            prop_assert_eq!(a.compose(&b).is_odd(), a.is_odd() ^ b.is_odd());
        }
    }

    #[test]
    fn decompose_round_trip_exhaustive() {
        for s in 0..=5usize {
            for r in 0..=s {
                // all injections {1..r} → {1..s}
                let mut stack = vec![Vec::<usize>::new()];
                while let Some(v) = stack.pop() {
                    if v.len() == r {
                        let u = InjectiveMap::new(s, &v).unwrap();
                        let (a, sigma) = lambda_decompose(&u);
                        assert!(a.is_monotone());
                        assert_eq!(a.after(&sigma), u);
                        continue;
                    }
                    for x in 1..=s {
                        if !v.contains(&x) {
                            let mut w = v.clone();
                            w.push(x);
                            stack.push(w);
                        }
                    }
                }
            }
        }
    }
}
