//! The exterior algebra Λ*ℝⁿ on a bitmask basis.
//!
//! Basis element e_I for I = {i₁ < … < i_p} ⊂ {1..n} is stored as the mask
//! with bit i−1 set for each i ∈ I. Products pick up the Koszul sign of the
//! shuffle that sorts the concatenated index sequence.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Largest ambient dimension representable with the bitmask basis.
pub const MAX_DIM: usize = 32;

/// A strictly increasing subset of {1..n}.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex(u32);

impl MultiIndex {
    pub const EMPTY: MultiIndex = MultiIndex(0);

    /// Build from 1-based indices. They must be strictly increasing and ≤ n.
    pub fn new(indices: &[usize], n: usize) -> Result<Self> {
        check_dim(n)?;
        let mut mask = 0u32;
        let mut prev = 0usize;
        for &i in indices {
            if i == 0 || i > n {
                return Err(Error::Dimension(format!("index {i} outside 1..={n}")));
            }
            if i <= prev {
                return Err(Error::Dimension(format!(
                    "indices must be strictly increasing, got {indices:?}"
                )));
            }
            prev = i;
            mask |= 1 << (i - 1);
        }
        Ok(MultiIndex(mask))
    }

    pub const fn from_mask(mask: u32) -> Self {
        MultiIndex(mask)
    }

    pub const fn mask(self) -> u32 {
        self.0
    }

    pub const fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    /// The full index set {1..n}.
    pub fn volume(n: usize) -> Self {
        MultiIndex(full_mask(n))
    }

    /// 1-based indices in increasing order.
    pub fn indices(self) -> Vec<usize> {
        (0..32).filter(|b| self.0 >> b & 1 == 1).map(|b| b + 1).collect()
    }

    pub const fn contains(self, i: usize) -> bool {
        i >= 1 && i <= 32 && self.0 >> (i - 1) & 1 == 1
    }

    /// Every p-subset of {1..n} in lexicographic order.
    pub fn all_of_degree(n: usize, p: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        if p > n {
            return out;
        }
        let mut idx: Vec<usize> = (1..=p).collect();
        loop {
            out.push(MultiIndex(idx.iter().fold(0, |m, &i| m | 1 << (i - 1))));
            let mut j = p;
            while j > 0 && idx[j - 1] == n - p + j {
                j -= 1;
            }
            if j == 0 {
                return out;
            }
            idx[j - 1] += 1;
            for t in j..p {
                idx[t] = idx[t - 1] + 1;
            }
        }
    }
}

impl Ord for MultiIndex {
    /// Degree first, then lexicographic on the sorted index lists.
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        let diff = self.0 ^ other.0;
        if diff == 0 {
            return Ordering::Equal;
        }
        let low = diff & diff.wrapping_neg();
        if self.0 & low != 0 {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e")?;
        for i in self.indices() {
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n > MAX_DIM {
        return Err(Error::Dimension(format!("ambient dimension {n} exceeds {MAX_DIM}")));
    }
    Ok(())
}

fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Sign of e_A ∧ e_B relative to e_{A∪B}, or `None` when A and B overlap.
/// Counts the pairs (a, b) with a ∈ A, b ∈ B, a > b: the inversions of the
/// concatenated sequence A·B.
pub fn koszul_sign(a: MultiIndex, b: MultiIndex) -> Option<i32> {
    if a.0 & b.0 != 0 {
        return None;
    }
    let mut inversions = 0u32;
    let mut rest = b.0;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        let above = if j >= 31 { 0 } else { a.0 >> (j + 1) };
        inversions += above.count_ones();
    }
    Some(if inversions % 2 == 0 { 1 } else { -1 })
}

/// An element of Λ*ℝⁿ with coefficients in `S`. Zero coefficients are never
/// stored.
#[derive(Clone, PartialEq)]
pub struct ExteriorElement<S: Scalar = f64> {
    n: usize,
    terms: BTreeMap<MultiIndex, S>,
}

impl<S: Scalar> fmt::Debug for ExteriorElement<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Λ(ℝ^{})[", self.n)?;
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c:?}·{k:?}")?;
        }
        write!(f, "]")
    }
}

impl<S: Scalar> ExteriorElement<S> {
    pub fn zero(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(ExteriorElement { n, terms: BTreeMap::new() })
    }

    pub fn scalar(n: usize, c: S) -> Result<Self> {
        let mut e = Self::zero(n)?;
        e.set(MultiIndex::EMPTY, c);
        Ok(e)
    }

    /// The basis element e_I with I given as 1-based indices.
    pub fn basis(n: usize, indices: &[usize]) -> Result<Self> {
        let idx = MultiIndex::new(indices, n)?;
        let mut e = Self::zero(n)?;
        e.set(idx, S::unit());
        Ok(e)
    }

    /// The volume element e_{1…n} with coefficient 1.
    pub fn volume(n: usize) -> Result<Self> {
        let mut e = Self::zero(n)?;
        e.set(MultiIndex::volume(n), S::unit());
        Ok(e)
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (MultiIndex, S)>) -> Result<Self> {
        let mut e = Self::zero(n)?;
        let full = full_mask(n);
        for (k, c) in terms {
            if k.0 & !full != 0 {
                return Err(Error::Dimension(format!("{k:?} outside ambient dimension {n}")));
            }
            let next = e.coefficient(k).add(&c);
            e.set(k, next);
        }
        Ok(e)
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, k: MultiIndex) -> S {
        self.terms.get(&k).cloned().unwrap_or_else(S::nil)
    }

    /// Coefficient of e_{1…n}.
    pub fn volume_coefficient(&self) -> S {
        self.coefficient(MultiIndex::volume(self.n))
    }

    pub fn set(&mut self, k: MultiIndex, c: S) {
        if c.is_nil() {
            self.terms.remove(&k);
        } else {
            self.terms.insert(k, c);
        }
    }

    /// `Some(p)` when every stored term has degree p (zero counts as any degree,
    /// reported as `Some(0)`).
    pub fn degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|k| k.degree());
        let first = it.next().unwrap_or(0);
        it.all(|d| d == first).then_some(first)
    }

    /// The degree-p part.
    pub fn homogeneous_part(&self, p: usize) -> Self {
        ExteriorElement {
            n: self.n,
            terms: self.terms.iter().filter(|(k, _)| k.degree() == p).map(|(k, c)| (*k, c.clone())).collect(),
        }
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "ambient dimensions differ: {} vs {}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_assign_scaled(&S::unit(), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_assign_scaled(&S::unit().neg(), other)?;
        Ok(out)
    }

    /// `self += c · other`.
    pub fn add_assign_scaled(&mut self, c: &S, other: &Self) -> Result<()> {
        self.same_dim(other)?;
        for (k, v) in &other.terms {
            let next = self.coefficient(*k).add(&c.mul(v));
            self.set(*k, next);
        }
        Ok(())
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = ExteriorElement { n: self.n, terms: BTreeMap::new() };
        for (k, v) in &self.terms {
            out.set(*k, v.mul(c));
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&S::unit().neg())
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let mut out: Self = ExteriorElement { n: self.n, terms: BTreeMap::new() };
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                if let Some(s) = koszul_sign(*a, *b) {
                    let k = MultiIndex(a.0 | b.0);
                    let prod = x.mul(y);
                    let prod = if s < 0 { prod.neg() } else { prod };
                    let next = out.coefficient(k).add(&prod);
                    out.set(k, next);
                }
            }
        }
        Ok(out)
    }

    /// Largest coefficient magnitude (the sup norm in the monomial basis).
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.as_f64().abs()).fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> ExteriorElement<f64> {
        let mut out = ExteriorElement { n: self.n, terms: BTreeMap::new() };
        for (k, v) in &self.terms {
            out.set(*k, v.as_f64());
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(k, c)| json!({ "I": k.indices(), "c": c.to_json() }))
            .collect();
        json!({ "n": self.n, "terms": terms })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::parse("$.n", "missing or non-integer ambient dimension"))? as usize;
        let terms = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::parse("$.terms", "missing term list"))?;
        let mut e = Self::zero(n)?;
        for (t, term) in terms.iter().enumerate() {
            let at = format!("$.terms[{t}]");
            let idx: Vec<usize> = term
                .get("I")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::parse(&at, "missing index list \"I\""))?
                .iter()
                .map(|x| x.as_u64().map(|u| u as usize))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::parse(&at, "indices must be positive integers"))?;
            let k = MultiIndex::new(&idx, n)?;
            let c = S::from_json(term.get("c").unwrap_or(&Value::Null), &format!("{at}.c"))?;
            let next = e.coefficient(k).add(&c);
            e.set(k, next);
        }
        Ok(e)
    }
}

impl ExteriorElement<Rational> {
    /// Exact copy of a float element (doubles are dyadic rationals).
    pub fn from_f64_exact(e: &ExteriorElement<f64>) -> Self {
        let mut out = ExteriorElement { n: e.n, terms: BTreeMap::new() };
        for (k, v) in &e.terms {
            out.set(*k, <Rational as Scalar>::of_f64(*v));
        }
        out
    }
}

/// The wedge pairing (α, β) ↦ coefficient of e_{1…n} in α ∧ β on Λᵖℝⁿ with
/// n = 2p, in the lexicographic basis of p-subsets. Entries are 0 or ±1.
#[derive(Clone, Debug)]
pub struct PairingMatrix {
    pub n: usize,
    pub p: usize,
    pub basis: Vec<MultiIndex>,
    entries: Vec<i8>,
}

impl PairingMatrix {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.basis.len() + j]
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        let m = self.size();
        nalgebra::DMatrix::from_fn(m, m, |i, j| self.get(i, j) as f64)
    }

    pub fn to_rational(&self) -> Vec<Vec<Rational>> {
        let m = self.size();
        (0..m).map(|i| (0..m).map(|j| Rational::of_i64(self.get(i, j) as i64)).collect()).collect()
    }
}

/// Rejects n ≠ 2p and odd p (the pairing is then antisymmetric).
pub fn wedge_pairing_matrix(n: usize, p: usize) -> Result<PairingMatrix> {
    check_dim(n)?;
    if 2 * p != n {
        return Err(Error::UnsupportedPairing(format!("need n = 2p, got n = {n}, p = {p}")));
    }
    if p % 2 == 1 {
        return Err(Error::UnsupportedPairing(format!(
            "p = {p} is odd, so the pairing is antisymmetric"
        )));
    }
    let basis = MultiIndex::all_of_degree(n, p);
    let m = basis.len();
    let full = full_mask(n);
    let mut entries = vec![0i8; m * m];
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            if a.0 | b.0 == full {
                entries[i * m + j] = koszul_sign(*a, *b).unwrap_or(0) as i8;
            }
        }
    }
    Ok(PairingMatrix { n, p, basis, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, idx: &[usize]) -> ExteriorElement<f64> {
        ExteriorElement::basis(n, idx).unwrap()
    }

    #[test]
    fn sign_by_brute_force_sorting() {
        // Oracle: bubble-sort the concatenation and count swaps.
        for a in 0u32..64 {
            for b in 0u32..64 {
                let (ma, mb) = (MultiIndex(a), MultiIndex(b));
                let got = koszul_sign(ma, mb);
                if a & b != 0 {
                    assert_eq!(got, None);
                    continue;
                }
                let mut seq: Vec<usize> = ma.indices();
                seq.extend(mb.indices());
                let mut swaps = 0;
                for i in 0..seq.len() {
                    for j in 0..seq.len() - 1 - i {
                        if seq[j] > seq[j + 1] {
                            seq.swap(j, j + 1);
                            swaps += 1;
                        }
                    }
                }
                assert_eq!(got, Some(if swaps % 2 == 0 { 1 } else { -1 }), "{ma:?} {mb:?}");
            }
        }
    }

    #[test]
    fn basic_products() {
        assert_eq!(e(4, &[1, 2]).wedge(&e(4, &[3, 4])).unwrap(), e(4, &[1, 2, 3, 4]));
        assert!(e(4, &[1]).wedge(&e(4, &[1])).unwrap().is_zero());
        assert_eq!(e(4, &[2]).wedge(&e(4, &[1])).unwrap(), e(4, &[1, 2]).neg());
        assert_eq!(e(4, &[1, 3]).wedge(&e(4, &[2, 4])).unwrap(), e(4, &[1, 2, 3, 4]).neg());
    }

    #[test]
    fn self_dual_square_is_volume() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b2 = e(4, &[1, 3]).sub(&e(4, &[2, 4])).unwrap().scale(&h);
        let sq = b2.wedge(&b2).unwrap();
        assert!((sq.volume_coefficient() - 1.0).abs() < 1e-15);
        assert_eq!(sq.terms().count(), 1);
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(matches!(MultiIndex::new(&[2, 1], 4), Err(Error::Dimension(_))));
        assert!(matches!(MultiIndex::new(&[5], 4), Err(Error::Dimension(_))));
        assert!(matches!(ExteriorElement::<f64>::zero(40), Err(Error::Dimension(_))));
        assert!(e(3, &[1]).wedge(&e(4, &[1])).is_err());
    }

    #[test]
    fn lexicographic_enumeration() {
        let b = MultiIndex::all_of_degree(4, 2);
        let idx: Vec<_> = b.iter().map(|m| m.indices()).collect();
        assert_eq!(idx, vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4], vec![3, 4]]);
        let mut sorted = b.clone();
        sorted.sort();
        assert_eq!(sorted, b);
        assert_eq!(MultiIndex::all_of_degree(8, 4).len(), 70);
    }

    #[test]
    fn pairing_rejections() {
        assert!(matches!(wedge_pairing_matrix(2, 1), Err(Error::UnsupportedPairing(_))));
        assert!(matches!(wedge_pairing_matrix(6, 2), Err(Error::UnsupportedPairing(_))));
        let w = wedge_pairing_matrix(4, 2).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(w.get(i, j), w.get(j, i));
            }
        }
    }

    #[test]
    fn json_round_trip_both_modes() {
        let x = e(4, &[1, 2]).scale(&0.5).add(&e(4, &[3])).unwrap();
        let back = ExteriorElement::<f64>::from_json(&x.to_json()).unwrap();
        assert_eq!(back, x);
        let q = ExteriorElement::from_f64_exact(&x);
        let v = q.to_json();
        assert_eq!(v["terms"][1]["c"], json!("1/2"));
        assert_eq!(ExteriorElement::<Rational>::from_json(&v).unwrap(), q);
        let bad = json!({"n": 4, "terms": [{"I": [3, 1], "c": 1}]});
        assert!(ExteriorElement::<f64>::from_json(&bad).is_err());
        let bad = json!({"n": 4, "terms": [{"I": [1], "c": "1/0"}]});
        assert!(matches!(ExteriorElement::<f64>::from_json(&bad), Err(Error::Parse { .. })));
    }
}
