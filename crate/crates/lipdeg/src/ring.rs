//! Presentations of graded-commutative cohomology rings, their evaluation on
//! assignments of forms, and the exponent invariants of self-maps.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exterior::ExteriorElement;
use crate::linalg;
use crate::scalar::{rational_approx, Rational, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub degree: usize,
}

/// `coeff · u_{w₀} u_{w₁} …` with the word sorted by generator index.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub word: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub name: String,
    pub monomials: Vec<Monomial>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RingPresentation {
    pub manifold_dim: usize,
    pub generators: Vec<Generator>,
    pub relations: Vec<Relation>,
    /// Word of the monomial representing the fundamental class.
    pub top: Vec<usize>,
    pub poincare_duality: bool,
}

/// Sort a word into nondecreasing generator order, tracking the sign from
/// transposing odd-degree generators. `None` if an odd generator repeats.
fn canonical_word(word: &[usize], gens: &[Generator]) -> Option<(Vec<usize>, f64)> {
    let mut w = word.to_vec();
    let mut sign = 1.0;
    for i in 0..w.len() {
        for j in 0..w.len() - 1 - i {
            if w[j] > w[j + 1] {
                if gens[w[j]].degree % 2 == 1 && gens[w[j + 1]].degree % 2 == 1 {
                    sign = -sign;
                }
                w.swap(j, j + 1);
            }
        }
    }
    if w.windows(2).any(|p| p[0] == p[1] && gens[p[0]].degree % 2 == 1) {
        return None;
    }
    Some((w, sign))
}

/// Canonicalise and merge like terms, dropping zero monomials.
fn normalize_monomials(raw: &[(f64, Vec<usize>)], gens: &[Generator]) -> Vec<Monomial> {
    let mut acc: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (c, w) in raw {
        if let Some((w, s)) = canonical_word(w, gens) {
            *acc.entry(w).or_insert(0.0) += s * c;
        }
    }
    acc.into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(word, coeff)| Monomial { coeff, word })
        .collect()
}

impl RingPresentation {
    /// Builds and validates a presentation; monomial words are canonicalised.
    pub fn new(
        manifold_dim: usize,
        generators: Vec<Generator>,
        relations: Vec<(String, Vec<(f64, Vec<usize>)>)>,
        top: Vec<usize>,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Validation("no generators".into()));
        }
        for g in &generators {
            if g.degree == 0 {
                return Err(Error::Validation(format!("generator {} has degree 0", g.name)));
            }
        }
        let ng = generators.len();
        let check_word = |w: &[usize], what: &str| -> Result<()> {
            if w.is_empty() {
                return Err(Error::Validation(format!("{what}: empty word")));
            }
            if let Some(&bad) = w.iter().find(|&&i| i >= ng) {
                return Err(Error::Validation(format!("{what}: unknown generator index {bad}")));
            }
            Ok(())
        };
        let mut rels = Vec::with_capacity(relations.len());
        for (name, raw) in relations {
            for (_, w) in &raw {
                check_word(w, &name)?;
            }
            let degs: Vec<usize> =
                raw.iter().map(|(_, w)| w.iter().map(|&i| generators[i].degree).sum()).collect();
            if degs.windows(2).any(|p| p[0] != p[1]) {
                return Err(Error::Validation(format!("relation {name} is not homogeneous")));
            }
            rels.push(Relation { monomials: normalize_monomials(&raw, &generators), name });
        }
        check_word(&top, "top class")?;
        let top_deg: usize = top.iter().map(|&i| generators[i].degree).sum();
        if top_deg != manifold_dim {
            return Err(Error::Validation(format!(
                "top class has degree {top_deg}, manifold dimension is {manifold_dim}"
            )));
        }
        let Some((top, _)) = canonical_word(&top, &generators) else {
            return Err(Error::Validation("top class vanishes (repeated odd generator)".into()));
        };
        Ok(RingPresentation { manifold_dim, generators, relations: rels, top, poincare_duality: true })
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    pub fn monomial_degree(&self, word: &[usize]) -> usize {
        word.iter().map(|&i| self.generators[i].degree).sum()
    }

    /// Degree of a relation (all its monomials share it).
    pub fn relation_degree(&self, r: &Relation) -> Option<usize> {
        r.monomials.first().map(|m| self.monomial_degree(&m.word))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s)?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::parse("$.n", "missing manifold dimension"))? as usize;
        let gens_v = v
            .get("gens")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::parse("$.gens", "missing generator list"))?;
        let mut gens = Vec::new();
        for (i, g) in gens_v.iter().enumerate() {
            let at = format!("$.gens[{i}]");
            let name = g
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::parse(&at, "missing name"))?
                .to_string();
            let degree = g
                .get("deg")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::parse(&at, "missing integer deg"))? as usize;
            if gens.iter().any(|x: &Generator| x.name == name) {
                return Err(Error::parse(&at, format!("duplicate generator {name}")));
            }
            gens.push(Generator { name, degree });
        }
        let lookup = |name: &str, at: &str| -> Result<usize> {
            gens.iter()
                .position(|g| g.name == name)
                .ok_or_else(|| Error::parse(at, format!("unknown generator {name:?}")))
        };
        let mut rels = Vec::new();
        let empty = Vec::new();
        for (r, rel) in v.get("rels").and_then(Value::as_array).unwrap_or(&empty).iter().enumerate() {
            let at = format!("$.rels[{r}]");
            let name = rel.get("name").and_then(Value::as_str).map_or_else(|| format!("r{r}"), str::to_string);
            let monos = rel
                .get("monomials")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::parse(&at, "missing monomials"))?;
            let mut raw = Vec::new();
            for (m, mono) in monos.iter().enumerate() {
                let at = format!("{at}.monomials[{m}]");
                let c = f64::from_json(mono.get("c").unwrap_or(&Value::Null), &format!("{at}.c"))?;
                let word = mono
                    .get("word")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::parse(&at, "missing word"))?
                    .iter()
                    .enumerate()
                    .map(|(w, x)| {
                        let at = format!("{at}.word[{w}]");
                        x.as_str().ok_or_else(|| Error::parse(&at, "expected generator name")).and_then(|s| lookup(s, &at))
                    })
                    .collect::<Result<Vec<_>>>()?;
                raw.push((c, word));
            }
            rels.push((name, raw));
        }
        let top_s = v.get("top").and_then(Value::as_str).ok_or_else(|| Error::parse("$.top", "missing top class"))?;
        let top = parse_word(top_s, &|s| lookup(s, "$.top"))?;
        let mut p = Self::new(n, gens, rels, top)?;
        if let Some(b) = v.get("poincare").and_then(Value::as_bool) {
            p.poincare_duality = b;
        }
        Ok(p)
    }

    pub fn to_json(&self) -> Value {
        let name = |i: usize| self.generators[i].name.clone();
        json!({
            "n": self.manifold_dim,
            "gens": self.generators.iter().map(|g| json!({"name": g.name, "deg": g.degree})).collect::<Vec<_>>(),
            "rels": self.relations.iter().map(|r| json!({
                "name": r.name,
                "monomials": r.monomials.iter().map(|m| json!({
                    "c": m.coeff,
                    "word": m.word.iter().map(|&i| name(i)).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "top": self.top.iter().map(|&i| name(i)).collect::<Vec<_>>().join("*"),
            "poincare": self.poincare_duality,
        })
    }
}

/// `"a*b*c"` with optional powers `"u^2"`.
fn parse_word(s: &str, lookup: &dyn Fn(&str) -> Result<usize>) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for tok in s.split('*').map(str::trim) {
        let (name, pow) = match tok.split_once('^') {
            Some((a, b)) => {
                let k: usize = b.trim().parse().map_err(|_| Error::parse("$.top", format!("bad exponent in {tok:?}")))?;
                (a.trim(), k)
            }
            None => (tok, 1),
        };
        let i = lookup(name)?;
        out.extend(std::iter::repeat_n(i, pow));
    }
    Ok(out)
}

fn gen(name: impl Into<String>, degree: usize) -> Generator {
    Generator { name: name.into(), degree }
}

/// ℂPⁿ: one generator of degree 2, relation u^{n+1}, top u^n.
pub fn cp(n: usize) -> Result<RingPresentation> {
    if n == 0 {
        return Err(Error::Validation("CP^0 is a point".into()));
    }
    RingPresentation::new(2 * n, vec![gen("u", 2)], vec![("u^top+1".into(), vec![(1.0, vec![0; n + 1])])], vec![0; n])
}

/// #ₖℂP²: generators u₁…u_k of degree 2 with uᵢuⱼ = 0 (i < j) and
/// uᵢ² = uⱼ²; top class u₁².
pub fn connected_sum_cp2(k: usize) -> Result<RingPresentation> {
    connected_sum(k, 0)
}

/// #_p ℂP² #_q ℂP̄²: diagonal intersection form with p entries +1 followed by
/// q entries −1, expressed relative to the top class u₁².
pub fn connected_sum(p: usize, q: usize) -> Result<RingPresentation> {
    let k = p + q;
    if k == 0 {
        return Err(Error::Validation("empty connected sum".into()));
    }
    let eps = |i: usize| if i < p { 1.0 } else { -1.0 };
    let gens = (0..k).map(|i| gen(format!("u{}", i + 1), 2)).collect();
    let mut rels = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            rels.push((format!("u{}u{}", i + 1, j + 1), vec![(1.0, vec![i, j])]));
            // uᵢ² εⱼ = uⱼ² εᵢ, normalised so u₁² carries the orientation.
            rels.push((
                format!("u{}^2-u{}^2", i + 1, j + 1),
                vec![(eps(j) * eps(0), vec![i, i]), (-eps(i) * eps(0), vec![j, j])],
            ));
        }
    }
    RingPresentation::new(4, gens, rels, vec![0, 0])
}

pub fn s2xs2() -> Result<RingPresentation> {
    RingPresentation::new(
        4,
        vec![gen("a", 2), gen("b", 2)],
        vec![("a^2".into(), vec![(1.0, vec![0, 0])]), ("b^2".into(), vec![(1.0, vec![1, 1])])],
        vec![0, 1],
    )
}

/// Tⁿ: n generators of degree 1. Graded commutativity already forces
/// xᵢ² = 0, so there are no further relations.
pub fn torus(n: usize) -> Result<RingPresentation> {
    RingPresentation::new(n, (0..n).map(|i| gen(format!("x{}", i + 1), 1)).collect(), vec![], (0..n).collect())
}

/// Look up a preset by name: `CPn`, `Xk`, `S2xS2`, `connected-sum`, `torus`.
/// `a` and `b` are the preset's integer parameters (n, k, p/q, …).
pub fn preset(name: &str, a: usize, b: usize) -> Result<RingPresentation> {
    match name.to_ascii_lowercase().as_str() {
        "cpn" | "cp" => cp(a),
        "xk" | "x" => connected_sum_cp2(a),
        "s2xs2" => s2xs2(),
        "connected-sum" | "connected_sum" => connected_sum(a, b),
        "torus" => torus(a),
        other => Err(Error::Validation(format!("unknown preset {other:?}"))),
    }
}

/// Algebras in which relation words can be evaluated.
pub trait FormAlgebra: Clone {
    fn wedge_form(&self, other: &Self) -> Result<Self>;
    fn scaled(&self, c: f64) -> Self;
    fn add_form(&mut self, other: &Self) -> Result<()>;
}

impl<S: Scalar> FormAlgebra for ExteriorElement<S> {
    fn wedge_form(&self, other: &Self) -> Result<Self> {
        self.wedge(other)
    }
    fn scaled(&self, c: f64) -> Self {
        self.scale(&S::of_f64(c))
    }
    fn add_form(&mut self, other: &Self) -> Result<()> {
        self.add_assign_scaled(&S::unit(), other)
    }
}

pub fn evaluate_word<A: FormAlgebra>(word: &[usize], assignment: &[A]) -> Result<A> {
    let (first, rest) = word.split_first().ok_or_else(|| Error::Validation("empty word".into()))?;
    let mut acc = assignment[*first].clone();
    for &i in rest {
        acc = acc.wedge_form(&assignment[i])?;
    }
    Ok(acc)
}

pub fn evaluate_relation<A: FormAlgebra>(rel: &Relation, assignment: &[A], zero: &A) -> Result<A> {
    let mut acc = zero.clone();
    for m in &rel.monomials {
        acc.add_form(&evaluate_word(&m.word, assignment)?.scaled(m.coeff))?;
    }
    Ok(acc)
}

fn check_assignment<A>(p: &RingPresentation, assignment: &[A]) -> Result<()> {
    if assignment.len() != p.generators.len() {
        return Err(Error::Dimension(format!(
            "assignment has {} entries for {} generators",
            assignment.len(),
            p.generators.len()
        )));
    }
    Ok(())
}

/// R_r(β) for every relation, with `zero` the additive identity of the target.
pub fn evaluate_relations_in<A: FormAlgebra>(p: &RingPresentation, assignment: &[A], zero: &A) -> Result<Vec<A>> {
    check_assignment(p, assignment)?;
    p.relations.iter().map(|r| evaluate_relation(r, assignment, zero)).collect()
}

/// Relation values for an assignment β_j ∈ Λ^{deg u_j}ℝᵐ.
pub fn evaluate_relations<S: Scalar>(
    p: &RingPresentation,
    assignment: &[ExteriorElement<S>],
) -> Result<Vec<ExteriorElement<S>>> {
    check_assignment(p, assignment)?;
    let m = assignment.first().map_or(0, ExteriorElement::ambient_dim);
    for (g, b) in p.generators.iter().zip(assignment) {
        if b.ambient_dim() != m {
            return Err(Error::Dimension("assignment mixes ambient dimensions".into()));
        }
        match b.degree() {
            Some(d) if d == g.degree || b.is_zero() => {}
            _ => {
                return Err(Error::Dimension(format!(
                    "image of {} must be homogeneous of degree {}",
                    g.name, g.degree
                )))
            }
        }
    }
    evaluate_relations_in(p, assignment, &ExteriorElement::zero(m)?)
}

/// Maximum coefficient magnitude over all relation values.
pub fn defect<S: Scalar>(p: &RingPresentation, assignment: &[ExteriorElement<S>]) -> Result<f64> {
    Ok(evaluate_relations(p, assignment)?.iter().map(ExteriorElement::max_abs).fold(0.0, f64::max))
}

/// The middle-dimensional cup-product pairing relative to the top class.
#[derive(Clone, Debug)]
pub struct IntersectionForm {
    pub matrix: DMatrix<f64>,
    pub exact: Vec<Vec<Rational>>,
}

/// Computes Q_ij = ⟨uᵢuⱼ, [M]⟩ when every generator sits in degree n/2. The
/// degree-n quotient of the presented ring must be one-dimensional and
/// spanned by the top class.
pub fn intersection_form(p: &RingPresentation) -> Result<IntersectionForm> {
    let n = p.manifold_dim;
    if n % 2 == 1 || p.generators.iter().any(|g| 2 * g.degree != n) {
        return Err(Error::Dimension("intersection form needs all generators in degree n/2".into()));
    }
    let k = p.generators.len();
    let odd = (n / 2) % 2 == 1;
    // Degree-n monomials: uᵢuⱼ with i ≤ j (i < j for odd generators).
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i..k {
            if !(odd && i == j) {
                pairs.push((i, j));
            }
        }
    }
    let col = |w: &[usize]| pairs.iter().position(|&(a, b)| w == [a, b]);
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let push = |rows: &mut Vec<Vec<Rational>>, monos: &[(f64, Vec<usize>)]| {
        let mut row = vec![Rational::zero(); pairs.len()];
        for m in normalize_monomials(monos, &p.generators) {
            if let Some(c) = col(&m.word) {
                row[c] += <Rational as Scalar>::of_f64(m.coeff);
            }
        }
        rows.push(row);
    };
    for r in &p.relations {
        match p.relation_degree(r) {
            Some(d) if d == n => {
                let monos: Vec<_> = r.monomials.iter().map(|m| (m.coeff, m.word.clone())).collect();
                push(&mut rows, &monos);
            }
            Some(d) if 2 * d == n => {
                for g in 0..k {
                    let monos: Vec<_> = r
                        .monomials
                        .iter()
                        .map(|m| {
                            let mut w = m.word.clone();
                            w.push(g);
                            (m.coeff, w)
                        })
                        .collect();
                    push(&mut rows, &monos);
                }
            }
            _ => {}
        }
    }
    let annihilator = linalg::nullspace(&rows, pairs.len());
    if annihilator.len() != 1 {
        return Err(Error::Validation(format!(
            "degree-{n} part of the ring has dimension {}, expected 1",
            annihilator.len()
        )));
    }
    let phi = &annihilator[0];
    let eval = |w: &[usize]| -> Rational {
        match canonical_word(w, &p.generators) {
            Some((w, s)) => col(&w).map_or_else(Rational::zero, |c| &phi[c] * <Rational as Scalar>::of_f64(s)),
            None => Rational::zero(),
        }
    };
    let top = eval(&p.top);
    if top.is_zero() {
        return Err(Error::Validation("top class is zero in the presented ring".into()));
    }
    let exact: Vec<Vec<Rational>> = (0..k).map(|i| (0..k).map(|j| eval(&[i, j]) / &top).collect()).collect();
    let matrix = DMatrix::from_fn(k, k, |i, j| exact[i][j].to_f64().unwrap_or(f64::NAN));
    Ok(IntersectionForm { matrix, exact })
}

/// The action of a self-map on real cohomology, degree by degree.
#[derive(Clone, Debug)]
pub struct CohomologyAction {
    pub manifold_dim: usize,
    pub matrices: BTreeMap<usize, DMatrix<f64>>,
    pub claimed_degree: Option<f64>,
    pub poincare_duality: bool,
}

impl CohomologyAction {
    /// The degree, from A_n if present, otherwise the claimed value.
    pub fn degree(&self) -> Result<f64> {
        let from_top = match self.matrices.get(&self.manifold_dim) {
            Some(m) if m.nrows() == 1 && m.ncols() == 1 => Some(m[(0, 0)]),
            Some(_) => return Err(Error::Shape("top-degree action must be 1x1".into())),
            None => None,
        };
        match (from_top, self.claimed_degree) {
            (Some(a), Some(b)) if (a - b).abs() > 1e-9 * a.abs().max(1.0) => {
                Err(Error::Validation(format!("A_n gives degree {a} but {b} was claimed")))
            }
            (Some(a), _) | (None, Some(a)) => Ok(a),
            (None, None) => Err(Error::Validation("no degree available".into())),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| Error::parse("$.n", "missing dimension"))? as usize;
        let mut matrices = BTreeMap::new();
        if let Some(obj) = v.get("matrices").and_then(Value::as_object) {
            for (key, m) in obj {
                let at = format!("$.matrices.{key}");
                let k: usize = key.parse().map_err(|_| Error::parse(&at, "degree key must be an integer"))?;
                let rows: Vec<Vec<f64>> = serde_json::from_value(m.clone()).map_err(|e| Error::parse(&at, e.to_string()))?;
                let r = rows.len();
                let c = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|x| x.len() != c) || r != c {
                    return Err(Error::parse(&at, "matrix must be square"));
                }
                matrices.insert(k, DMatrix::from_fn(r, c, |i, j| rows[i][j]));
            }
        }
        Ok(CohomologyAction {
            manifold_dim: n,
            matrices,
            claimed_degree: v.get("degree").and_then(Value::as_f64),
            poincare_duality: v.get("poincare").and_then(Value::as_bool).unwrap_or(true),
        })
    }
}

/// The S³-bundle over S²×S² pulled back from the Hopf fibration, with the
/// scaling automorphism of parameter t: t on H², t³ on H⁵ (basis
/// b₁₁a₂ − a₁b₁₂, b₁₂a₂ − a₁b₂₂), t⁴ on H⁷.
pub fn s3_bundle_action(t: f64) -> CohomologyAction {
    let mut matrices = BTreeMap::new();
    matrices.insert(2, DMatrix::identity(2, 2) * t);
    matrices.insert(5, DMatrix::identity(2, 2) * t.powi(3));
    matrices.insert(7, DMatrix::from_element(1, 1, t.powi(4)));
    CohomologyAction { manifold_dim: 7, matrices, claimed_degree: Some(t.powi(4)), poincare_duality: true }
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzExponent {
    /// ρ = max n·ln|λ| / (k·ln|d|).
    pub rho: f64,
    /// n/ρ: a Lipschitz-L self-map has degree O(L^{n/ρ}).
    pub degree_exponent: f64,
    /// `degree_exponent` recognised as a small rational, when it is one.
    pub degree_exponent_rational: Option<String>,
    pub attained_in_degree: usize,
}

const EIGEN_MODULUS_TOL: f64 = 1e-9;

/// ρ = max over degrees k and eigenvalues λ of A_k of n·ln|λ| / (k·ln|d|).
/// An L-Lipschitz map with this action has |λ| = O(L^k), hence degree
/// O(L^{n/ρ}).
pub fn lipschitz_lower_exponent(action: &CohomologyAction) -> Result<LipschitzExponent> {
    let n = action.manifold_dim;
    let d = action.degree()?;
    if d == 0.0 {
        return Err(Error::Undefined("degree is zero".into()));
    }
    if (d.abs() - 1.0).abs() <= EIGEN_MODULUS_TOL {
        return Err(Error::Undefined("|degree| = 1 makes ln|d| vanish".into()));
    }
    let ln_d = d.abs().ln();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (&k, m) in &action.matrices {
        if k == 0 || k > n {
            continue;
        }
        if m.nrows() != m.ncols() {
            return Err(Error::Shape(format!("A_{k} is not square")));
        }
        for lam in m.complex_eigenvalues().iter() {
            let modulus = lam.norm();
            if modulus <= EIGEN_MODULUS_TOL {
                continue;
            }
            let r = n as f64 * modulus.ln() / (k as f64 * ln_d);
            if r > best.0 {
                best = (r, k);
            }
            // Poincaré duality pairs λ in degree k with d/λ in degree n − k.
            if action.poincare_duality && k < n {
                let r = n as f64 * (d.abs() / modulus).ln() / ((n - k) as f64 * ln_d);
                if r > best.0 {
                    best = (r, n - k);
                }
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Undefined("no nonzero eigenvalues".into()));
    }
    let degree_exponent = n as f64 / best.0;
    Ok(LipschitzExponent {
        rho: best.0,
        degree_exponent,
        degree_exponent_rational: rational_approx(degree_exponent, 10_000, 1e-9).map(|r| format!("{}/{}", r.numer(), r.denom())),
        attained_in_degree: best.1,
    })
}

/// Weighted homology basis: (dimension, weight) of each class z_i, meaning
/// the scaling automorphism sends z_i ↦ t^{weight} z_i.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightData {
    pub classes: Vec<(u32, u32)>,
}

pub fn s3_bundle_weights() -> WeightData {
    WeightData { classes: vec![(2, 1), (2, 1), (5, 3), (5, 3), (7, 4)] }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightExponents {
    pub alpha: String,
    pub alpha_f64: f64,
    /// Number of dimensions where γ_n attains α.
    pub d: usize,
    pub attained_in: Vec<u32>,
    pub gamma: BTreeMap<u32, String>,
}

/// γ_n = max weight/n over classes of dimension n; α = max γ_n; d counts
/// the dimensions attaining α. Computed exactly.
pub fn positive_weight_exponents(w: &WeightData) -> Result<WeightExponents> {
    if w.classes.is_empty() {
        return Err(Error::Validation("no weighted classes".into()));
    }
    let mut gamma: BTreeMap<u32, Ratio<i64>> = BTreeMap::new();
    for &(dim, weight) in &w.classes {
        if dim == 0 || weight == 0 {
            return Err(Error::Validation(format!("class ({dim}, {weight}) needs positive dimension and weight")));
        }
        let r = Ratio::new(weight as i64, dim as i64);
        let e = gamma.entry(dim).or_insert(r);
        if r > *e {
            *e = r;
        }
    }
    let alpha = *gamma.values().max().expect("nonempty");
    let attained_in: Vec<u32> = gamma.iter().filter(|(_, g)| **g == alpha).map(|(k, _)| *k).collect();
    Ok(WeightExponents {
        alpha: alpha.to_string(),
        alpha_f64: alpha.to_f64().unwrap_or(f64::NAN),
        d: attained_in.len(),
        attained_in,
        gamma: gamma.into_iter().map(|(k, g)| (k, g.to_string())).collect(),
    })
}
