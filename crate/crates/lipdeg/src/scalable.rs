//! Deciding whether a cohomology ring embeds in a sum of exterior algebras.
//!
//! Exact verdicts come from the middle-dimensional signature criterion.
//! Everything else is numerical evidence: a projected-gradient search for
//! an embedding, a Monte Carlo estimate of the constant in the k ≥ 4
//! inequality, and a penalty-method fit of how fast the top class must
//! shrink when the relations only hold up to ε.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exec;
use crate::exterior::{koszul_sign, wedge_pairing_matrix, ExteriorElement, MultiIndex};
use crate::linalg::{self, Signature};
use crate::ring::{self, RingPresentation};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Scalable,
    NotScalable,
    /// The exact criterion does not apply and the search found nothing.
    EvidenceOnly,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub signature: Option<Signature>,
    pub threshold: Option<usize>,
    pub reason: String,
    pub witness: Option<SearchOutcome>,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Q of signature (k, ℓ) on a closed 2n-manifold is realisable in Λⁿℝ²ⁿ iff
/// k, ℓ ≤ C(2n, n)/2. When `search` is given and the form passes, a witness
/// embedding is searched for and attached.
pub fn check_middle_form(q: &DMatrix<f64>, n: usize, tol: f64, search: Option<&SearchConfig>) -> Result<Verdict> {
    if n % 2 == 1 {
        return Err(Error::UnsupportedPairing(format!("n = {n} is odd: the middle pairing is antisymmetric")));
    }
    let sig = linalg::signature(q, tol)?;
    if sig.zero > 0 {
        return Err(Error::Degenerate(format!("intersection form has {} null directions", sig.zero)));
    }
    let threshold = binomial(2 * n, n) / 2;
    let ok = sig.pos <= threshold && sig.neg <= threshold;
    let reason = format!(
        "signature ({}, {}) against the {threshold}-dimensional positive and negative parts of the wedge pairing on Λ^{n}ℝ^{}",
        sig.pos,
        sig.neg,
        2 * n
    );
    let witness = match (ok, search) {
        (true, Some(cfg)) => Some(search_embedding(&presentation_from_form(q, n)?, &[2 * n], cfg)?),
        _ => None,
    };
    Ok(Verdict {
        status: if ok { Status::Scalable } else { Status::NotScalable },
        signature: Some(sig),
        threshold: Some(threshold),
        reason,
        witness,
    })
}

/// A presentation whose degree-2n products realise Q up to a nonzero scalar:
/// uᵢuⱼ − (Qᵢⱼ/Q_ab) u_a u_b for a fixed pivot entry Q_ab.
fn presentation_from_form(q: &DMatrix<f64>, n: usize) -> Result<RingPresentation> {
    let k = q.nrows();
    let mut pivot = None;
    for i in 0..k {
        if q[(i, i)] != 0.0 {
            pivot = Some((i, i));
            break;
        }
    }
    if pivot.is_none() {
        'outer: for i in 0..k {
            for j in i + 1..k {
                if q[(i, j)] != 0.0 {
                    pivot = Some((i, j));
                    break 'outer;
                }
            }
        }
    }
    let (a, b) = pivot.ok_or_else(|| Error::Degenerate("zero form".into()))?;
    let gens = (0..k).map(|i| ring::Generator { name: format!("u{}", i + 1), degree: n }).collect();
    let mut rels = Vec::new();
    for i in 0..k {
        for j in i..k {
            if (i, j) != (a, b) {
                rels.push((format!("u{}u{}", i + 1, j + 1), vec![(1.0, vec![i, j]), (-q[(i, j)] / q[(a, b)], vec![a, b])]));
            }
        }
    }
    RingPresentation::new(2 * n, gens, rels, vec![a, b])
}

/// Decide a presentation: the exact signature test when all generators sit
/// in the middle degree, otherwise an embedding search in Λ*ℝⁿ.
pub fn check_presentation(p: &RingPresentation, tol: f64, cfg: &SearchConfig) -> Result<Verdict> {
    let n = p.manifold_dim;
    if n % 4 == 0 && p.generators.iter().all(|g| 2 * g.degree == n) {
        let q = ring::intersection_form(p)?;
        let mut v = check_middle_form(&q.matrix, n / 2, tol, None)?;
        if v.status == Status::Scalable {
            v.witness = Some(search_embedding(p, &[n], cfg)?);
        }
        return Ok(v);
    }
    let outcome = search_embedding(p, &[n], cfg)?;
    let found = outcome.defect < cfg.accept;
    Ok(Verdict {
        status: if found { Status::Scalable } else { Status::EvidenceOnly },
        signature: None,
        threshold: None,
        reason: if found {
            format!("embedding into Λ*ℝ^{n} found with defect {:.3e}", outcome.defect)
        } else {
            format!("no embedding found; best defect {:.3e}", outcome.defect)
        },
        witness: Some(outcome),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_initial: f64,
    pub step_final: f64,
    /// Stop a restart once its defect falls below this.
    pub target: f64,
    /// Defect below which an embedding counts as found.
    pub accept: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 16,
            max_iters: 4000,
            step_initial: 0.1,
            step_final: 1e-3,
            target: 1e-10,
            accept: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    /// max over relations and summands of the largest coefficient of R_r(β).
    pub defect: f64,
    pub best_restart: usize,
    pub restart_defects: Vec<f64>,
    /// Defect after each accepted iteration of the best restart.
    #[serde(skip)]
    pub trace: Vec<f64>,
    /// `assignment[s][j]` is the image of generator j in summand s.
    #[serde(serialize_with = "ser_assignment")]
    pub assignment: Vec<Vec<ExteriorElement<f64>>>,
    pub seed: u64,
}

fn ser_assignment<S: serde::Serializer>(a: &[Vec<ExteriorElement<f64>>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<Vec<Value>> = a.iter().map(|sum| sum.iter().map(ExteriorElement::to_json).collect()).collect();
    v.serialize(s)
}

/// Dense Λ*ℝᵐ with a precomputed sign table, for the inner loops.
struct Dense {
    m: usize,
    size: usize,
    sign: Vec<i8>,
}

impl Dense {
    fn new(m: usize) -> Self {
        let size = 1usize << m;
        let mut sign = vec![0i8; size * size];
        for a in 0..size {
            for b in 0..size {
                sign[a * size + b] = koszul_sign(MultiIndex::from_mask(a as u32), MultiIndex::from_mask(b as u32)).unwrap_or(0) as i8;
            }
        }
        Dense { m, size, sign }
    }

    fn wedge(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for (a, &xa) in x.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            let row = &self.sign[a * self.size..(a + 1) * self.size];
            for (b, &yb) in y.iter().enumerate() {
                if yb != 0.0 && row[b] != 0 {
                    out[a | b] += row[b] as f64 * xa * yb;
                }
            }
        }
        out
    }

    fn unit(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.size];
        u[0] = 1.0;
        u
    }
}

struct Block {
    offset: usize,
    masks: Vec<u32>,
}

/// Flattened parameterisation of an assignment into ⊕ Λ*ℝ^{mₛ}.
struct Problem<'a> {
    pres: &'a RingPresentation,
    algebras: Vec<Dense>,
    blocks: Vec<Vec<Block>>,
    dim: usize,
    norm_summand: usize,
}

const MAX_SUMMAND_DIM: usize = 10;

impl<'a> Problem<'a> {
    fn new(pres: &'a RingPresentation, ambient: &[usize]) -> Result<Self> {
        if ambient.is_empty() {
            return Err(Error::Dimension("empty ambient list".into()));
        }
        if let Some(&m) = ambient.iter().find(|&&m| m > MAX_SUMMAND_DIM || m == 0) {
            return Err(Error::Dimension(format!("summand dimension {m} outside 1..={MAX_SUMMAND_DIM}")));
        }
        let norm_summand = ambient
            .iter()
            .position(|&m| m == pres.manifold_dim)
            .ok_or_else(|| Error::Dimension(format!("no summand of dimension {} to carry the top class", pres.manifold_dim)))?;
        let mut dim = 0;
        let mut blocks = Vec::new();
        for &m in ambient {
            let mut row = Vec::new();
            for g in &pres.generators {
                let masks: Vec<u32> = MultiIndex::all_of_degree(m, g.degree).iter().map(|k| k.mask()).collect();
                row.push(Block { offset: dim, masks });
                dim += row.last().map_or(0, |b: &Block| b.masks.len());
            }
            blocks.push(row);
        }
        Ok(Problem { pres, algebras: ambient.iter().map(|&m| Dense::new(m)).collect(), blocks, dim, norm_summand })
    }

    fn beta(&self, x: &[f64], s: usize, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.algebras[s].size];
        let b = &self.blocks[s][j];
        for (t, &mask) in b.masks.iter().enumerate() {
            v[mask as usize] = x[b.offset + t];
        }
        v
    }

    fn word(&self, betas: &[Vec<f64>], alg: &Dense, w: &[usize]) -> Vec<f64> {
        w.iter().fold(alg.unit(), |acc, &j| alg.wedge(&acc, &betas[j]))
    }

    /// Relation residuals (dense blocks, summand-major) and the top coefficient.
    fn eval(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let mut res = Vec::new();
        let mut top = 0.0;
        for (s, alg) in self.algebras.iter().enumerate() {
            let betas: Vec<Vec<f64>> = (0..self.pres.generators.len()).map(|j| self.beta(x, s, j)).collect();
            for r in &self.pres.relations {
                let mut acc = vec![0.0; alg.size];
                for mono in &r.monomials {
                    let v = self.word(&betas, alg, &mono.word);
                    for (a, b) in acc.iter_mut().zip(v) {
                        *a += mono.coeff * b;
                    }
                }
                res.extend(acc);
            }
            if s == self.norm_summand {
                top = self.word(&betas, alg, &self.pres.top)[alg.size - 1];
            }
        }
        (res, top)
    }

    /// Gradient of ⟨w_res, res(x)⟩ + w_top · top(x).
    fn grad(&self, x: &[f64], w_res: &[f64], w_top: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        let mut cursor = 0;
        for (s, alg) in self.algebras.iter().enumerate() {
            let betas: Vec<Vec<f64>> = (0..self.pres.generators.len()).map(|j| self.beta(x, s, j)).collect();
            let mut terms: Vec<(&[usize], f64, Vec<f64>)> = Vec::new();
            for r in &self.pres.relations {
                let w = w_res[cursor..cursor + alg.size].to_vec();
                cursor += alg.size;
                if w.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for mono in &r.monomials {
                    terms.push((&mono.word, mono.coeff, w.clone()));
                }
            }
            if s == self.norm_summand && w_top != 0.0 {
                let mut w = vec![0.0; alg.size];
                w[alg.size - 1] = w_top;
                terms.push((&self.pres.top, 1.0, w));
            }
            for (word, coeff, w) in terms {
                self.accumulate_word_grad(&mut g, s, alg, &betas, word, coeff, &w);
            }
        }
        g
    }

    #[allow(clippy::too_many_arguments)]
    fn accumulate_word_grad(&self, g: &mut [f64], s: usize, alg: &Dense, betas: &[Vec<f64>], word: &[usize], coeff: f64, w: &[f64]) {
        let len = word.len();
        let mut prefix = vec![alg.unit()];
        for &j in word {
            let next = alg.wedge(prefix.last().expect("nonempty"), &betas[j]);
            prefix.push(next);
        }
        let mut suffix = vec![alg.unit(); len + 1];
        for p in (0..len).rev() {
            suffix[p] = alg.wedge(&betas[word[p]], &suffix[p + 1]);
        }
        for (p, &j) in word.iter().enumerate() {
            let block = &self.blocks[s][j];
            for (t, &mask) in block.masks.iter().enumerate() {
                let mut e = vec![0.0; alg.size];
                e[mask as usize] = 1.0;
                let v = alg.wedge(&alg.wedge(&prefix[p], &e), &suffix[p + 1]);
                let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                g[block.offset + t] += coeff * dot;
            }
        }
    }

    /// Rescale the normalising summand's top-word generators so the top
    /// coefficient is 1. Impossible (and skipped) when it is not positive.
    fn project(&self, x: &mut [f64]) {
        let (_, top) = self.eval(x);
        if top <= 0.0 || !top.is_finite() {
            return;
        }
        let f = top.powf(-1.0 / self.pres.top.len() as f64);
        let mut seen = Vec::new();
        for &j in &self.pres.top {
            if seen.contains(&j) {
                continue;
            }
            seen.push(j);
            let b = &self.blocks[self.norm_summand][j];
            for v in &mut x[b.offset..b.offset + b.masks.len()] {
                *v *= f;
            }
        }
    }

    fn assignment(&self, x: &[f64]) -> Result<Vec<Vec<ExteriorElement<f64>>>> {
        self.algebras
            .iter()
            .enumerate()
            .map(|(s, alg)| {
                (0..self.pres.generators.len())
                    .map(|j| {
                        let b = &self.blocks[s][j];
                        ExteriorElement::from_terms(
                            alg.m,
                            b.masks.iter().enumerate().map(|(t, &mask)| (MultiIndex::from_mask(mask), x[b.offset + t])),
                        )
                    })
                    .collect()
            })
            .collect()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Normalised defect: the relation defect, or the normalisation error if larger.
fn merit(res: &[f64], top: f64) -> f64 {
    max_abs(res).max((top - 1.0).abs())
}

fn objective(res: &[f64], top: f64) -> f64 {
    res.iter().map(|r| r * r).sum::<f64>() + (top - 1.0).powi(2)
}

fn cosine_step(cfg: &SearchConfig, t: usize) -> f64 {
    let frac = t as f64 / cfg.max_iters.max(1) as f64;
    cfg.step_final + 0.5 * (cfg.step_initial - cfg.step_final) * (1.0 + (std::f64::consts::PI * frac).cos())
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

struct RestartResult {
    defect: f64,
    x: Vec<f64>,
    trace: Vec<f64>,
}

fn run_restart(pb: &Problem, cfg: &SearchConfig, restart: usize) -> RestartResult {
    let mut rng = restart_rng(cfg.seed, restart);
    // Draw until the top class is positive, so the projection applies.
    let mut x: Vec<f64> = Vec::new();
    for _ in 0..1000 {
        x = (0..pb.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if pb.eval(&x).1 > 0.0 {
            break;
        }
    }
    pb.project(&mut x);
    let (mut res, mut top) = pb.eval(&x);
    let mut cur = merit(&res, top);
    let mut obj = objective(&res, top);
    let mut trace = vec![cur];
    for t in 0..cfg.max_iters {
        if cur <= cfg.target {
            break;
        }
        let w: Vec<f64> = res.iter().map(|r| 2.0 * r).collect();
        let mut g = pb.grad(&x, &w, 2.0 * (top - 1.0));
        // Keep the step tangent to {top = 1}; the projection then only
        // corrects at second order.
        let zeros = vec![0.0; res.len()];
        let n = pb.grad(&x, &zeros, 1.0);
        let nn: f64 = n.iter().map(|v| v * v).sum();
        if nn > 0.0 {
            let c = g.iter().zip(&n).map(|(a, b)| a * b).sum::<f64>() / nn;
            for (gi, ni) in g.iter_mut().zip(&n) {
                *gi -= c * ni;
            }
        }
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gn == 0.0 || !gn.is_finite() {
            break;
        }
        let mut eta = cosine_step(cfg, t) / gn.max(1.0);
        let mut accepted = false;
        for _ in 0..40 {
            let mut cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - eta * b).collect();
            pb.project(&mut cand);
            let (r2, t2) = pb.eval(&cand);
            let (m2, o2) = (merit(&r2, t2), objective(&r2, t2));
            if m2 <= cur && o2 < obj {
                x = cand;
                res = r2;
                top = t2;
                cur = m2;
                obj = o2;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
        trace.push(cur);
    }
    RestartResult { defect: cur, x, trace }
}

/// Random-restart projected gradient descent for β_j ∈ ⊕ₛ Λ^{deg u_j}ℝ^{mₛ}
/// with every relation vanishing and the top class normalised to
/// coefficient 1 on the volume element of the first summand of dimension
/// n. Restarts are seeded per index from `cfg.seed` and merged by minimum
/// defect, ties going to the lowest index, so the result does not depend on
/// the thread count.
pub fn search_embedding(p: &RingPresentation, ambient: &[usize], cfg: &SearchConfig) -> Result<SearchOutcome> {
    if cfg.restarts == 0 {
        return Err(Error::Validation("need at least one restart".into()));
    }
    let pb = Problem::new(p, ambient)?;
    let runs = exec::map_range(cfg.restarts, |r| run_restart(&pb, cfg, r));
    let (best, run) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.defect.total_cmp(&b.1.defect).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    Ok(SearchOutcome {
        defect: run.defect,
        best_restart: best,
        restart_defects: runs.iter().map(|r| r.defect).collect(),
        trace: run.trace.clone(),
        assignment: pb.assignment(&run.x)?,
        seed: cfg.seed,
    })
}

/// Analytic and central-difference gradients of the search objective at a
/// random point, for testing.
pub fn gradient_check(p: &RingPresentation, ambient: &[usize], seed: u64, h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let pb = Problem::new(p, ambient)?;
    let mut rng = restart_rng(seed, 0);
    let x: Vec<f64> = (0..pb.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let f = |x: &[f64]| {
        let (r, t) = pb.eval(x);
        objective(&r, t)
    };
    let (res, top) = pb.eval(&x);
    let w: Vec<f64> = res.iter().map(|r| 2.0 * r).collect();
    let analytic = pb.grad(&x, &w, 2.0 * (top - 1.0));
    let numeric = (0..pb.dim)
        .map(|i| {
            let mut a = x.clone();
            let mut b = x.clone();
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect();
    Ok((analytic, numeric))
}

/// The self-dual basis of Λ²ℝ⁴ without the 1/√2: e12+e34, e13−e24, e14+e23.
/// Each squares to 2·e1234 and distinct ones wedge to zero.
pub fn self_dual_triple<S: Scalar>() -> Vec<ExteriorElement<S>> {
    let e = |i: usize, j: usize| ExteriorElement::<S>::basis(4, &[i, j]).expect("valid index");
    vec![
        e(1, 2).add(&e(3, 4)).expect("same dim"),
        e(1, 3).sub(&e(2, 4)).expect("same dim"),
        e(1, 4).add(&e(2, 3)).expect("same dim"),
    ]
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kge4Outcome {
    /// LHS > 0 = RHS: no constant can work.
    Counterexample { lhs: String, rhs: String, tuple: Vec<Value> },
    Certified { c_est: f64, samples: usize, violations: usize, worst_tuple: Vec<Value>, seed: u64 },
}

/// |b₁∧b₁| and Σ_{i≠j} (|bᵢ∧bᵢ − bⱼ∧bⱼ| + |bᵢ∧bⱼ|) over ordered pairs, as
/// volume coefficients.
pub fn kge4_sides<S: Scalar>(b: &[ExteriorElement<S>]) -> Result<(S, S)> {
    let vol = |x: &ExteriorElement<S>, y: &ExteriorElement<S>| -> Result<S> { Ok(x.wedge(y)?.volume_coefficient()) };
    let abs = |v: S| if v.as_f64() < 0.0 { v.neg() } else { v };
    let lhs = abs(vol(&b[0], &b[0])?);
    let mut rhs = S::nil();
    for i in 0..b.len() {
        for j in 0..b.len() {
            if i != j {
                rhs = rhs.add(&abs(vol(&b[i], &b[i])?.sub(&vol(&b[j], &b[j])?)));
                rhs = rhs.add(&abs(vol(&b[i], &b[j])?));
            }
        }
    }
    Ok((lhs, rhs))
}

/// Gram-matrix form of the two sides for fast sampling: G = Bᵀ W B.
fn kge4_ratio(w: &DMatrix<f64>, b: &DMatrix<f64>) -> (f64, f64) {
    let g = b.transpose() * w * b;
    let k = g.nrows();
    let lhs = g[(0, 0)].abs();
    let mut rhs = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                rhs += (g[(i, i)] - g[(j, j)]).abs() + g[(i, j)].abs();
            }
        }
    }
    (lhs, rhs)
}

/// For k < 4, exhibits the self-dual counterexample exactly. For k ≥ 4,
/// estimates the best constant C in |b₁∧b₁| ≤ C·RHS over ‖bᵢ‖ ≤ 1 by
/// sampling plus local ascent, and rechecks every sample against C.
pub fn kge4_certificate(k: usize, samples: usize, seed: u64) -> Result<Kge4Outcome> {
    if k == 0 {
        return Err(Error::Validation("need at least one form".into()));
    }
    if k < 4 {
        let triple: Vec<ExteriorElement<Rational>> = self_dual_triple::<Rational>().into_iter().take(k).collect();
        let (lhs, rhs) = kge4_sides(&triple)?;
        // Both sides are quadratic in b; scaling b by 1/√LHS normalises LHS to 1.
        let rhs = rhs / &lhs;
        let lhs = &lhs / &lhs;
        return Ok(Kge4Outcome::Counterexample {
            lhs: crate::scalar::format_rational(&lhs),
            rhs: crate::scalar::format_rational(&rhs),
            tuple: triple.iter().map(ExteriorElement::to_json).collect(),
        });
    }
    if samples == 0 {
        return Err(Error::Validation("need at least one sample".into()));
    }
    let w = wedge_pairing_matrix(4, 2)?.to_dmatrix();
    let draw = |rng: &mut ChaCha8Rng| DMatrix::from_fn(6, k, |_, _| rng.random_range(-1.0..1.0));
    let chunks = 64usize;
    let per = samples.div_ceil(chunks);
    let sampled: Vec<Vec<(f64, DMatrix<f64>)>> = exec::map_range(chunks, |c| {
        let mut rng = restart_rng(seed, c);
        (0..per.min(samples.saturating_sub(c * per)))
            .map(|_| {
                let b = draw(&mut rng);
                let (l, r) = kge4_ratio(&w, &b);
                (if r > 0.0 { l / r } else { f64::INFINITY }, b)
            })
            .collect()
    });
    let all: Vec<(f64, DMatrix<f64>)> = sampled.into_iter().flatten().collect();
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.sort_by(|&a, &b| all[b].0.total_cmp(&all[a].0).then(a.cmp(&b)));
    // Local ascent from the best few samples.
    let starts: Vec<usize> = order.iter().copied().take(8).collect();
    let climbed = exec::map_range(starts.len(), |i| {
        let mut rng = restart_rng(seed ^ 0x9e37_79b9_7f4a_7c15, i);
        let mut b = all[starts[i]].1.clone();
        let mut best = all[starts[i]].0;
        let mut sigma = 0.1;
        for _ in 0..4000 {
            let cand = DMatrix::from_fn(6, k, |r, c| (b[(r, c)] + sigma * rng.random_range(-1.0..1.0)).clamp(-1.0, 1.0));
            let (l, r) = kge4_ratio(&w, &cand);
            let q = if r > 0.0 { l / r } else { f64::INFINITY };
            if q > best {
                best = q;
                b = cand;
            } else {
                sigma = (sigma * 0.999).max(1e-4);
            }
        }
        (best, b)
    });
    let (c_est, worst) = climbed
        .into_iter()
        .chain(std::iter::once(all[order[0]].clone()))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("nonempty");
    if !c_est.is_finite() {
        return Err(Error::Degenerate("sampled tuple with RHS = 0 and LHS > 0".into()));
    }
    let violations = all
        .iter()
        .filter(|(_, b)| {
            let (l, r) = kge4_ratio(&w, b);
            l > c_est * r + 1e-12
        })
        .count();
    let basis = MultiIndex::all_of_degree(4, 2);
    let worst_tuple = (0..k)
        .map(|j| {
            ExteriorElement::<f64>::from_terms(4, basis.iter().enumerate().map(|(i, m)| (*m, worst[(i, j)])))
                .map(|e| e.to_json())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Kge4Outcome::Certified { c_est, samples: all.len(), violations, worst_tuple, seed })
}

#[derive(Clone, Debug, Serialize)]
pub struct TopclassFit {
    /// The presentation embeds (up to the acceptance tolerance), so the top
    /// class need not shrink at all.
    pub scalable: bool,
    pub theta: Option<f64>,
    /// (ε, best |β_top| found with defect ≤ ε and ‖β_j‖ ≤ 1).
    pub points: Vec<(f64, f64)>,
    pub seed: u64,
}

/// Fits |β_top| ≈ C ε^θ from the penalty-method maxima over an ε grid.
pub fn estimate_topclass_exponent(p: &RingPresentation, ambient: usize, eps_grid: &[f64], cfg: &SearchConfig) -> Result<TopclassFit> {
    if eps_grid.len() < 2 {
        return Err(Error::Fit("ε grid needs at least two values".into()));
    }
    if eps_grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Fit("ε values must be positive".into()));
    }
    let found = search_embedding(p, &[ambient], cfg)?;
    if found.defect < cfg.accept {
        return Ok(TopclassFit { scalable: true, theta: None, points: Vec::new(), seed: cfg.seed });
    }
    let pb = Problem::new(p, &[ambient])?;
    let points: Vec<(f64, f64)> = eps_grid.iter().map(|&eps| (eps, max_top_at(&pb, eps, cfg))).collect();
    if points.iter().any(|&(_, t)| t <= 0.0) {
        return Err(Error::Fit("top class vanished at some ε".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (theta, _) = linalg::linear_fit(&xs, &ys)?;
    Ok(TopclassFit { scalable: false, theta: Some(theta), points, seed: cfg.seed })
}

fn defect_of(pb: &Problem, x: &[f64]) -> (f64, f64) {
    let (res, top) = pb.eval(x);
    (max_abs(&res), top)
}

/// Largest |top| over box-constrained β with defect ≤ ε.
fn max_top_at(pb: &Problem, eps: f64, cfg: &SearchConfig) -> f64 {
    let runs = exec::map_range(cfg.restarts, |r| {
        let mut rng = restart_rng(cfg.seed.wrapping_add(eps.to_bits()), r);
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        // Near-feasible points of quadratic relations have size ~√ε; start
        // and step at that scale.
        let scale = eps.sqrt().min(1.0);
        let mut x: Vec<f64> = (0..pb.dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let mut mu = 1.0 / eps;
        for stage in 0..6 {
            let step = 0.05 * scale / (1.0 + stage as f64);
            for _ in 0..cfg.max_iters / 6 {
                let (res, _) = pb.eval(&x);
                let w: Vec<f64> = res
                    .iter()
                    .map(|&v| {
                        let over = v.abs() - eps;
                        if over > 0.0 {
                            -2.0 * mu * over * v.signum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let g = pb.grad(&x, &w, sign);
                let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
                for (xi, gi) in x.iter_mut().zip(&g) {
                    *xi = (*xi + step * gi / gn).clamp(-1.0, 1.0);
                }
            }
            mu *= 10.0;
        }
        // Shrink uniformly until feasible; bisection on the scale factor.
        let scaled = |s: f64| x.iter().map(|v| v * s).collect::<Vec<f64>>();
        let (d, top) = defect_of(pb, &x);
        if d <= eps {
            return top.abs();
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if defect_of(pb, &scaled(mid)).0 <= eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        defect_of(pb, &scaled(lo)).1.abs()
    });
    runs.into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{connected_sum_cp2, evaluate_relations, s2xs2};

    #[test]
    fn binomial_thresholds() {
        assert_eq!(binomial(4, 2) / 2, 3);
        assert_eq!(binomial(8, 4) / 2, 35);
    }

    #[test]
    fn self_dual_triple_satisfies_x3_exactly() {
        let p = connected_sum_cp2(3).unwrap();
        let b = self_dual_triple::<Rational>();
        for r in evaluate_relations(&p, &b).unwrap() {
            assert!(r.is_zero());
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for p in [connected_sum_cp2(3).unwrap(), s2xs2().unwrap()] {
            let (a, n) = gradient_check(&p, &[4], 7, 1e-6).unwrap();
            for (x, y) in a.iter().zip(&n) {
                assert!((x - y).abs() < 1e-6 * (1.0 + x.abs()), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn degenerate_and_odd_forms_rejected() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(check_middle_form(&q, 2, 1e-9, None), Err(Error::Degenerate(_))));
        assert!(matches!(check_middle_form(&DMatrix::identity(2, 2), 1, 1e-9, None), Err(Error::UnsupportedPairing(_))));
    }

    #[test]
    fn single_epsilon_grid_is_rejected() {
        let p = connected_sum_cp2(4).unwrap();
        assert!(matches!(estimate_topclass_exponent(&p, 4, &[0.1], &SearchConfig::default()), Err(Error::Fit(_))));
    }
}
