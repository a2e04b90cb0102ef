//! Graded based modules, sparse graded maps, chain complexes and homology over F_p.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Display};

use thiserror::Error;

use crate::field::{Lin, Prime};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinearError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("d^2 != 0 on basis element {witness} (degree {degree})")]
    DSquared { degree: i64, witness: String },
    #[error("label {0} is not in the module")]
    UnknownLabel(String),
}

/// Finite graded module with an ordered basis in each degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedBasedModule<L: Ord> {
    degrees: BTreeMap<i64, Vec<L>>,
    index: BTreeMap<L, (i64, usize)>,
}

impl<L: Ord + Clone> Default for GradedBasedModule<L> {
    fn default() -> Self {
        GradedBasedModule { degrees: BTreeMap::new(), index: BTreeMap::new() }
    }
}

impl<L: Ord + Clone> GradedBasedModule<L> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a module from (degree, label) pairs; labels are sorted within each degree.
    pub fn from_labels<I: IntoIterator<Item = (i64, L)>>(it: I) -> Self {
        let mut degrees: BTreeMap<i64, Vec<L>> = BTreeMap::new();
        for (d, l) in it {
            degrees.entry(d).or_default().push(l);
        }
        for v in degrees.values_mut() {
            v.sort();
            v.dedup();
        }
        let mut index = BTreeMap::new();
        for (d, v) in &degrees {
            for (i, l) in v.iter().enumerate() {
                let prev = index.insert(l.clone(), (*d, i));
                assert!(prev.is_none(), "label listed in two degrees");
            }
        }
        GradedBasedModule { degrees, index }
    }

    pub fn degree_of(&self, l: &L) -> Option<i64> {
        self.index.get(l).map(|x| x.0)
    }

    pub fn position(&self, l: &L) -> Option<usize> {
        self.index.get(l).map(|x| x.1)
    }

    pub fn contains(&self, l: &L) -> bool {
        self.index.contains_key(l)
    }

    pub fn basis(&self, d: i64) -> &[L] {
        self.degrees.get(&d).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn dim(&self, d: i64) -> usize {
        self.basis(d).len()
    }

    pub fn total_dim(&self) -> usize {
        self.index.len()
    }

    pub fn degrees(&self) -> impl Iterator<Item = i64> + '_ {
        self.degrees.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &L)> {
        self.degrees.iter().flat_map(|(d, v)| v.iter().map(move |l| (*d, l)))
    }

    /// Tensor product module with the sum grading.
    pub fn tensor<M: Ord + Clone>(&self, other: &GradedBasedModule<M>) -> GradedBasedModule<Pair<L, M>> {
        GradedBasedModule::from_labels(
            self.iter()
                .flat_map(|(a, x)| other.iter().map(move |(b, y)| (a + b, Pair(x.clone(), y.clone())))),
        )
    }
}

impl<L: Ord + Clone + Display> GradedBasedModule<L> {
    /// One basis element per line as `degree<TAB>label`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        for (d, l) in self.iter() {
            s.push_str(&format!("{}\t{}\n", d, l));
        }
        s
    }
}

/// A linear map of fixed degree between graded based modules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseGradedMap<S: Ord, T: Ord> {
    pub source: GradedBasedModule<S>,
    pub target: GradedBasedModule<T>,
    pub degree_shift: i64,
    pub prime: Prime,
    entries: BTreeMap<S, Lin<T>>,
}

impl<S: Ord + Clone + Display, T: Ord + Clone + Display> SparseGradedMap<S, T> {
    /// Builds a map from a function on basis labels, checking the degree shift.
    pub fn from_fn<F: FnMut(&S) -> Lin<T>>(
        prime: Prime,
        source: GradedBasedModule<S>,
        target: GradedBasedModule<T>,
        degree_shift: i64,
        mut f: F,
    ) -> Result<Self, LinearError> {
        let mut entries = BTreeMap::new();
        for (d, s) in source.iter() {
            let img = f(s);
            for (t, _) in img.iter() {
                match target.degree_of(t) {
                    Some(e) if e == d + degree_shift => {}
                    Some(e) => {
                        return Err(LinearError::Shape(format!(
                            "image {} of {} lies in degree {}, expected {}",
                            t,
                            s,
                            e,
                            d + degree_shift
                        )))
                    }
                    None => return Err(LinearError::UnknownLabel(t.to_string())),
                }
            }
            if !img.is_zero() {
                entries.insert(s.clone(), img);
            }
        }
        Ok(SparseGradedMap { source, target, degree_shift, prime, entries })
    }

    pub fn apply_basis(&self, s: &S) -> Lin<T> {
        self.entries.get(s).cloned().unwrap_or_else(|| Lin::zero(self.prime))
    }

    pub fn apply(&self, x: &Lin<S>) -> Lin<T> {
        x.flat_map(|s| self.apply_basis(s))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// self ∘ other.
    pub fn compose<R: Ord + Clone + Display>(
        &self,
        other: &SparseGradedMap<R, S>,
    ) -> Result<SparseGradedMap<R, T>, LinearError> {
        if other.target != self.source {
            return Err(LinearError::Shape(format!(
                "compose: target of inner map (degrees {:?}) differs from source of outer map (degrees {:?})",
                other.target.degrees().collect::<Vec<_>>(),
                self.source.degrees().collect::<Vec<_>>()
            )));
        }
        SparseGradedMap::from_fn(
            self.prime,
            other.source.clone(),
            self.target.clone(),
            self.degree_shift + other.degree_shift,
            |r| self.apply(&other.apply_basis(r)),
        )
    }

    pub fn add(&self, other: &SparseGradedMap<S, T>) -> Result<SparseGradedMap<S, T>, LinearError> {
        if self.source != other.source || self.target != other.target || self.degree_shift != other.degree_shift {
            return Err(LinearError::Shape(format!(
                "add: degree shifts {} and {} or modules differ",
                self.degree_shift, other.degree_shift
            )));
        }
        SparseGradedMap::from_fn(self.prime, self.source.clone(), self.target.clone(), self.degree_shift, |s| {
            let mut v = self.apply_basis(s);
            v.add_assign(&other.apply_basis(s));
            v
        })
    }

    pub fn scale(&self, c: u32) -> SparseGradedMap<S, T> {
        let entries = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), v.scaled(c)))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        SparseGradedMap { entries, ..self.clone() }
    }

    /// (f⊗g)(x⊗y) = (-1)^{|g||x|} f(x)⊗g(y).
    pub fn tensor<S2, T2>(
        &self,
        g: &SparseGradedMap<S2, T2>,
    ) -> Result<SparseGradedMap<Pair<S, S2>, Pair<T, T2>>, LinearError>
    where
        S2: Ord + Clone + Display,
        T2: Ord + Clone + Display,
    {
        let p = self.prime;
        let source = self.source.tensor(&g.source);
        let target = self.target.tensor(&g.target);
        let shift = self.degree_shift + g.degree_shift;
        SparseGradedMap::from_fn(p, source, target, shift, |Pair(x, y)| {
            let dx = self.source.degree_of(x).unwrap();
            let sign = p.sign_of(g.degree_shift * dx);
            let fx = self.apply_basis(x);
            let gy = g.apply_basis(y);
            let mut out = Lin::zero(p);
            for (a, c) in fx.iter() {
                for (b, e) in gy.iter() {
                    out.add_term(Pair(a.clone(), b.clone()), p.mul(sign, p.mul(c, e)));
                }
            }
            out
        })
    }

    /// Lines `src -> coeff*tgt + ...` in canonical order.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(&format!("{} -> {}\n", k, v));
        }
        s
    }

    /// Matrix of the degree-d component, rows indexed by source basis positions.
    pub fn sparse_rows(&self, d: i64) -> Vec<Vec<(usize, u32)>> {
        self.source
            .basis(d)
            .iter()
            .map(|s| {
                let mut row: Vec<(usize, u32)> = self
                    .apply_basis(s)
                    .iter()
                    .map(|(t, c)| (self.target.position(t).unwrap(), c))
                    .collect();
                row.sort_unstable();
                row
            })
            .collect()
    }
}

/// A graded module with a differential of degree -1.
#[derive(Clone, Debug)]
pub struct ChainComplex<L: Ord> {
    pub module: GradedBasedModule<L>,
    pub differential: SparseGradedMap<L, L>,
}

impl<L: Ord + Clone + Display> ChainComplex<L> {
    pub fn new(module: GradedBasedModule<L>, differential: SparseGradedMap<L, L>) -> Result<Self, LinearError> {
        if differential.degree_shift != -1 {
            return Err(LinearError::Shape(format!("differential has degree {}", differential.degree_shift)));
        }
        if differential.source != module || differential.target != module {
            return Err(LinearError::Shape("differential is not an endomorphism of the module".into()));
        }
        Ok(ChainComplex { module, differential })
    }

    pub fn from_fn<F: FnMut(&L) -> Lin<L>>(p: Prime, module: GradedBasedModule<L>, f: F) -> Result<Self, LinearError> {
        let d = SparseGradedMap::from_fn(p, module.clone(), module.clone(), -1, f)?;
        ChainComplex::new(module, d)
    }

    /// Checks d∘d = 0 on every basis element with degree in the range.
    pub fn check_d_squared(&self, lo: i64, hi: i64) -> Result<(), LinearError> {
        for d in lo..=hi {
            for x in self.module.basis(d) {
                let dd = self.differential.apply(&self.differential.apply_basis(x));
                if !dd.is_zero() {
                    return Err(LinearError::DSquared { degree: d, witness: x.to_string() });
                }
            }
        }
        Ok(())
    }

    /// Homology ranks in degrees lo..=hi.
    pub fn homology_ranks(&self, lo: i64, hi: i64) -> Result<Vec<(i64, usize)>, LinearError> {
        self.check_d_squared(lo, hi + 1)?;
        let p = self.differential.prime;
        let mut ranks: HashMap<i64, usize> = HashMap::new();
        let mut rank_of = |d: i64| -> usize {
            *ranks.entry(d).or_insert_with(|| rank_mod_p(p, self.differential.sparse_rows(d)))
        };
        let mut out = Vec::new();
        for d in lo..=hi {
            let h = self.module.dim(d) - rank_of(d) - rank_of(d + 1);
            out.push((d, h));
        }
        Ok(out)
    }
}

/// Rank of a sparse matrix over F_p given as rows of sorted (column, value) pairs.
pub fn rank_mod_p(p: Prime, rows: Vec<Vec<(usize, u32)>>) -> usize {
    let mut pivots: HashMap<usize, Vec<(usize, u32)>> = HashMap::new();
    for mut row in rows {
        row.retain(|x| x.1 % p.get() != 0);
        loop {
            let Some(&(lead, c)) = row.first() else { break };
            match pivots.get(&lead) {
                Some(piv) => {
                    row = axpy(p, &row, piv, p.neg(c));
                }
                None => {
                    let inv = p.inv(c);
                    for x in row.iter_mut() {
                        x.1 = p.mul(x.1, inv);
                    }
                    pivots.insert(lead, row);
                    break;
                }
            }
        }
    }
    pivots.len()
}

/// Basis of the kernel of the system given by dense rows over `ncols` unknowns.
pub fn kernel_mod_p(p: Prime, ncols: usize, mut rows: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(k) = (r..rows.len()).find(|&k| rows[k][c] % p.get() != 0) else { continue };
        rows.swap(r, k);
        let inv = p.inv(rows[r][c]);
        for x in rows[r].iter_mut() {
            *x = p.mul(*x, inv);
        }
        for k in 0..rows.len() {
            if k != r && rows[k][c] != 0 {
                let f = p.neg(rows[k][c]);
                for j in 0..ncols {
                    rows[k][j] = p.add(rows[k][j], p.mul(f, rows[r][j]));
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let mut out = Vec::new();
    for free in (0..ncols).filter(|c| !pivot_cols.contains(c)) {
        let mut v = vec![0u32; ncols];
        v[free] = 1;
        for (k, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = p.neg(rows[k][free]);
        }
        out.push(v);
    }
    out
}

fn axpy(p: Prime, a: &[(usize, u32)], b: &[(usize, u32)], c: u32) -> Vec<(usize, u32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0, p.mul(b[j].1, c)));
            j += 1;
        } else {
            let v = p.add(a[i].1, p.mul(b[j].1, c));
            if v != 0 {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Basis label of a tensor product.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair<A, B>(pub A, pub B);

impl<A: Display, B: Display> Display for Pair<A, B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}⊗{}", self.0, self.1)
    }
}

/// Label type for small hand-built complexes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag(pub String);

impl Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Tag {
    fn from(s: &str) -> Tag {
        Tag(s.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(s: &str) -> Tag {
        Tag::from(s)
    }

    fn two_term() -> ChainComplex<Tag> {
        let m = GradedBasedModule::from_labels([(1, tag("a")), (0, tag("b"))]);
        ChainComplex::from_fn(Prime::TWO, m, |x| {
            if x.0 == "a" {
                Lin::basis(Prime::TWO, tag("b"))
            } else {
                Lin::zero(Prime::TWO)
            }
        })
        .unwrap()
    }

    #[test]
    fn compose_d_d_is_zero() {
        let c = two_term();
        let dd = c.differential.compose(&c.differential).unwrap();
        assert!(dd.is_zero());
        assert_eq!(dd.degree_shift, -2);
    }

    #[test]
    fn point_homology() {
        let m = GradedBasedModule::from_labels([(0, tag("pt"))]);
        let c = ChainComplex::from_fn(Prime::TWO, m, |_| Lin::zero(Prime::TWO)).unwrap();
        assert_eq!(c.homology_ranks(0, 0).unwrap(), vec![(0, 1)]);
    }

    #[test]
    fn interval_homology() {
        for p in [Prime::TWO, Prime::THREE] {
            let m = GradedBasedModule::from_labels([(0, tag("x0")), (0, tag("x1")), (1, tag("x01"))]);
            let c = ChainComplex::from_fn(p, m, |x| {
                if x.0 == "x01" {
                    Lin::from_terms(p, [(tag("x1"), 1), (tag("x0"), p.get() - 1)])
                } else {
                    Lin::zero(p)
                }
            })
            .unwrap();
            assert_eq!(c.homology_ranks(0, 1).unwrap(), vec![(0, 1), (1, 0)]);
        }
    }

    #[test]
    fn d_squared_witness() {
        let m = GradedBasedModule::from_labels([(2, tag("a")), (1, tag("b")), (0, tag("c"))]);
        let c = ChainComplex::from_fn(Prime::TWO, m, |x| match x.0.as_str() {
            "a" => Lin::basis(Prime::TWO, tag("b")),
            "b" => Lin::basis(Prime::TWO, tag("c")),
            _ => Lin::zero(Prime::TWO),
        })
        .unwrap();
        match c.homology_ranks(0, 2) {
            Err(LinearError::DSquared { witness, .. }) => assert_eq!(witness, "a"),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn tensor_koszul_sign() {
        let x = GradedBasedModule::from_labels([(1, tag("x"))]);
        let y = GradedBasedModule::from_labels([(1, tag("y")), (0, tag("z"))]);
        for p in [Prime::TWO, Prime::THREE] {
            let id = SparseGradedMap::from_fn(p, x.clone(), x.clone(), 0, |l| Lin::basis(p, l.clone())).unwrap();
            let d = SparseGradedMap::from_fn(p, y.clone(), y.clone(), -1, |l| {
                if l.0 == "y" {
                    Lin::basis(p, tag("z"))
                } else {
                    Lin::zero(p)
                }
            })
            .unwrap();
            let t = id.tensor(&d).unwrap();
            let img = t.apply_basis(&Pair(tag("x"), tag("y")));
            let expect = if p == Prime::TWO { 1 } else { p.get() - 1 };
            assert_eq!(img.coeff(&Pair(tag("x"), tag("z"))), expect);
        }
    }

    #[test]
    fn shape_errors() {
        let c = two_term();
        let other = GradedBasedModule::from_labels([(0, tag("q"))]);
        let f = SparseGradedMap::from_fn(Prime::TWO, other.clone(), other, 0, |l| Lin::basis(Prime::TWO, l.clone()))
            .unwrap();
        assert!(matches!(c.differential.compose(&f), Err(LinearError::Shape(_))));
        let dd = c.differential.compose(&c.differential).unwrap();
        assert!(c.differential.add(&c.differential.scale(2)).is_ok());
        assert!(c.differential.add(&c.differential).unwrap().is_zero());
        assert!(dd.source == c.module);
    }

    #[test]
    fn rank_small() {
        let p = Prime::THREE;
        let rows = vec![vec![(0, 1), (1, 2)], vec![(0, 2), (1, 1)], vec![(1, 1)]];
        assert_eq!(rank_mod_p(p, rows), 2);
    }
}
