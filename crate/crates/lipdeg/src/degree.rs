//! Degree bounds from Littlewood–Paley data: pullback area forms and degree
//! integrals, relation primitives, the three-term cutoff estimate and its
//! log-averaged form, the Nullstellensatz variant and the radial ball
//! extension.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::linear_fit;
use crate::lp::{bump, BandProfile, Grid, GridForm, Spectral};
use crate::ring::{evaluate_relation, evaluate_word, RingPresentation};

/// Image of the collapsed boundary.
pub const BASEPOINT: [f64; 3] = [0.0, 0.0, -1.0];

const UNIT_TOL: f64 = 1e-9;

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Signed solid angle of the spherical triangle (a, b, c).
fn solid_angle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    2.0 * dot(a, cross(b, c)).atan2(1.0 + dot(a, b) + dot(b, c) + dot(c, a))
}

/// A map [0,1]² → S² sampled at the (N+1)² nodes (i/N, j/N), stored with j
/// fastest.
#[derive(Clone, Debug)]
pub struct SampledSphereMap {
    pub n: usize,
    pub values: Vec<[f64; 3]>,
    /// Whether the boundary is collapsed to [`BASEPOINT`], so the map
    /// descends to S² = [0,1]²/∂.
    pub collapsed: bool,
}

impl SampledSphereMap {
    pub fn new(n: usize, values: Vec<[f64; 3]>, collapsed: bool) -> Result<Self> {
        if n < 1 || values.len() != (n + 1) * (n + 1) {
            return Err(Error::Shape(format!("expected {} samples for N = {n}", (n + 1) * (n + 1))));
        }
        if let Some((idx, v)) = values.iter().enumerate().find(|(_, v)| (dot(**v, **v).sqrt() - 1.0).abs() > UNIT_TOL) {
            return Err(Error::Geometry(format!("sample {idx} has norm {} (not a unit vector)", dot(*v, *v).sqrt())));
        }
        let map = SampledSphereMap { n, values, collapsed };
        if collapsed {
            for i in 0..=n {
                for (a, b) in [(i, 0), (i, n), (0, i), (n, i)] {
                    if map.at(a, b) != BASEPOINT {
                        return Err(Error::Geometry(format!("boundary node ({a}, {b}) is not the basepoint")));
                    }
                }
            }
        }
        Ok(map)
    }

    pub fn from_fn<F>(n: usize, collapsed: bool, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> [f64; 3] + Sync + Send,
    {
        let h = 1.0 / n as f64;
        let mut values = vec![[0.0; 3]; (n + 1) * (n + 1)];
        exec::for_each_chunk_mut(&mut values, n + 1, |i, row| {
            for (j, v) in row.iter_mut().enumerate() {
                let on_edge = i == 0 || j == 0 || i == n || j == n;
                *v = if collapsed && on_edge { BASEPOINT } else { f(i as f64 * h, j as f64 * h) };
            }
        });
        Self::new(n, values, collapsed)
    }

    pub fn at(&self, i: usize, j: usize) -> [f64; 3] {
        self.values[i * (self.n + 1) + j]
    }

    /// Discrete Lipschitz constant: the largest great-circle distance between
    /// images of grid neighbours (edges and both diagonals) divided by their
    /// parameter distance.
    pub fn lipschitz(&self) -> f64 {
        let n = self.n;
        let h = 1.0 / n as f64;
        let geo = |a: [f64; 3], b: [f64; 3]| {
            let c = sub3(a, b);
            2.0 * (dot(c, c).sqrt() / 2.0).min(1.0).asin()
        };
        let rows = exec::map_range(n + 1, |i| {
            let mut m = 0.0f64;
            for j in 0..=n {
                let a = self.at(i, j);
                if i < n {
                    m = m.max(geo(a, self.at(i + 1, j)) / h);
                }
                if j < n {
                    m = m.max(geo(a, self.at(i, j + 1)) / h);
                }
                if i < n && j < n {
                    m = m.max(geo(a, self.at(i + 1, j + 1)) / (h * 2f64.sqrt()));
                    m = m.max(geo(self.at(i + 1, j), self.at(i, j + 1)) / (h * 2f64.sqrt()));
                }
            }
            m
        });
        rows.into_iter().fold(0.0, f64::max)
    }
}

/// How the pulled-back area density is discretised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PullbackScheme {
    /// Per cell, the signed solid angle of the two image triangles divided by
    /// 4π·h². Sums to the exact degree whenever image triangles are small.
    SolidAngle,
    /// (1/4π) f · (∂_u f × ∂_v f) at each node by central differences.
    CentralDifference,
}

/// f^*(ω/4π) for the unit area form ω, as a 2-form on the N×N periodic grid
/// of period 1 (one sample per cell or node).
pub fn pullback_area_form(f: &SampledSphereMap, scheme: PullbackScheme) -> Result<GridForm> {
    let n = f.n;
    if n < 8 {
        return Err(Error::Resolution(format!("N = {n} is below the minimum of 8")));
    }
    let grid = Grid::new(2, n, 1.0)?;
    let h = 1.0 / n as f64;
    let mut density = vec![0.0; n * n];
    match scheme {
        PullbackScheme::SolidAngle => {
            exec::for_each_chunk_mut(&mut density, n, |i, row| {
                for (j, v) in row.iter_mut().enumerate() {
                    let (p00, p10, p11, p01) = (f.at(i, j), f.at(i + 1, j), f.at(i + 1, j + 1), f.at(i, j + 1));
                    let omega = solid_angle(p00, p10, p11) + solid_angle(p00, p11, p01);
                    *v = omega / (4.0 * PI * h * h);
                }
            });
        }
        PullbackScheme::CentralDifference => {
            exec::for_each_chunk_mut(&mut density, n, |i, row| {
                for (j, v) in row.iter_mut().enumerate() {
                    let (im, ip) = (i.saturating_sub(1), (i + 1).min(n));
                    let (jm, jp) = (j.saturating_sub(1), (j + 1).min(n));
                    let du = sub3(f.at(ip, j), f.at(im, j)).map(|x| x / ((ip - im) as f64 * h));
                    let dv = sub3(f.at(i, jp), f.at(i, jm)).map(|x| x / ((jp - jm) as f64 * h));
                    *v = dot(f.at(i, j), cross(du, dv)) / (4.0 * PI);
                }
            });
        }
    }
    GridForm::from_components(grid, 2, vec![density])
}

/// Riemann sum of ψ·top for a top-degree form.
pub fn degree_integral(top: &GridForm, psi: &GridForm) -> Result<f64> {
    if top.degree != top.grid.dim {
        return Err(Error::Shape(format!("degree {} is not top degree {}", top.degree, top.grid.dim)));
    }
    if psi.degree != 0 || psi.grid != top.grid {
        return Err(Error::Shape("ψ must be a 0-form on the same grid".into()));
    }
    if psi.components[0].iter().any(|&v| v < 0.0) {
        return Err(Error::Data("ψ must be nonnegative".into()));
    }
    let s: f64 = top.components[0].iter().zip(&psi.components[0]).map(|(a, b)| a * b).sum();
    Ok(s * top.grid.cell_volume())
}

/// ∫ top with ψ ≡ 1.
pub fn total_integral(top: &GridForm) -> Result<f64> {
    let one = GridForm::from_fn(top.grid, 0, |_, _| 1.0)?;
    degree_integral(top, &one)
}

/// Tensor-product bump ψ(x) = Π_a bump(4|x_a − T/2|/T): 1 on the central
/// cube of half-width T/4, 0 outside half-width T/2.
pub fn cutoff_weight(grid: Grid) -> Result<GridForm> {
    let t = grid.period;
    GridForm::from_fn(grid, 0, move |_, x| x.iter().map(|&xa| bump(4.0 * (xa - t / 2.0).abs() / t)).product())
}

/// Pointwise Euclidean norm (over components) of a form.
pub fn pointwise_norm(a: &GridForm) -> Vec<f64> {
    let mut out = vec![0.0; a.grid.points()];
    for c in &a.components {
        for (o, v) in out.iter_mut().zip(c) {
            *o += v * v;
        }
    }
    out.iter_mut().for_each(|v| *v = v.sqrt());
    out
}

fn weighted_integral(weight: &[f64], values: &[f64], grid: &Grid) -> f64 {
    weight.iter().zip(values).map(|(w, v)| w * v).sum::<f64>() * grid.cell_volume()
}

/// A primitive g_r with d g_r = R_r(a) − mean.
#[derive(Clone, Debug)]
pub struct RelationPrimitive {
    pub relation: String,
    pub value: GridForm,
    pub mean: f64,
    pub primitive: GridForm,
    /// ‖g_r‖_∞.
    pub sup: f64,
    /// ‖d g_r − (R_r(a) − mean)‖_∞.
    pub residual: f64,
}

/// Closed forms a_i assigned to the generators of a presentation, with the
/// nominal Lipschitz scale and the chart cutoff ψ.
#[derive(Clone, Debug)]
pub struct PullbackEnsemble {
    pub forms: Vec<GridForm>,
    pub lipschitz: f64,
    pub psi: GridForm,
    pub primitives: Vec<RelationPrimitive>,
}

impl PullbackEnsemble {
    pub fn new(forms: Vec<GridForm>, lipschitz: f64, psi: GridForm) -> Result<Self> {
        let grid = forms.first().ok_or_else(|| Error::Data("empty ensemble".into()))?.grid;
        if forms.iter().any(|f| f.grid != grid) || psi.grid != grid || psi.degree != 0 {
            return Err(Error::Shape("ensemble forms and ψ must share one grid".into()));
        }
        Ok(PullbackEnsemble { forms, lipschitz, psi, primitives: Vec::new() })
    }

    pub fn grid(&self) -> Grid {
        self.forms[0].grid
    }

    /// ‖da_i‖_∞ / ‖a_i‖_∞ for each form.
    pub fn closedness(&self, s: &Spectral) -> Result<Vec<f64>> {
        self.forms.iter().map(|a| s.closedness_defect(a)).collect()
    }
}

fn check_generators(e: &PullbackEnsemble, p: &RingPresentation) -> Result<()> {
    if e.forms.len() != p.generators.len() {
        return Err(Error::Dimension(format!(
            "{} forms for {} generators",
            e.forms.len(),
            p.generators.len()
        )));
    }
    for (a, g) in e.forms.iter().zip(&p.generators) {
        if a.degree != g.degree {
            return Err(Error::Dimension(format!("form for {} has degree {}", g.name, a.degree)));
        }
    }
    Ok(())
}

fn relation_values(forms: &[GridForm], p: &RingPresentation) -> Result<Vec<GridForm>> {
    let grid = forms[0].grid;
    p.relations
        .iter()
        .map(|r| {
            let deg = p.relation_degree(r).unwrap_or(0);
            let zero = GridForm::zeros(grid, deg)?;
            evaluate_relation(r, forms, &zero)
        })
        .collect()
}

/// Solve d g_r = R_r(a) for every relation. R_r(a) must have (relative) mean
/// at most `tol`; its remaining frequencies are integrated by the spectral
/// primitive.
pub fn relation_primitives(e: &mut PullbackEnsemble, p: &RingPresentation, s: &Spectral, tol: f64) -> Result<()> {
    check_generators(e, p)?;
    let values = relation_values(&e.forms, p)?;
    let mut out = Vec::with_capacity(values.len());
    for (r, value) in p.relations.iter().zip(values) {
        if value.degree == 0 {
            return Err(Error::Dimension(format!("relation {} has degree 0", r.name)));
        }
        let vol = value.grid.volume();
        let mean = value.integrals().into_iter().map(|v| v / vol).fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m });
        let scale = value.max_abs();
        if mean.abs() > tol * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotExact { relation: r.name.clone(), mean });
        }
        let g = s.primitive_nonzero(&value, None)?;
        let dg = s.exterior_derivative(&g)?;
        let mut centred = value.clone();
        for (c, m) in centred.components.iter_mut().zip(value.integrals()) {
            let m = m / vol;
            c.iter_mut().for_each(|v| *v -= m);
        }
        let residual = dg.sub(&centred)?.max_abs();
        out.push(RelationPrimitive {
            relation: r.name.clone(),
            sup: g.max_abs(),
            value,
            mean,
            primitive: g,
            residual,
        });
    }
    e.primitives = out;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct LowBandRow {
    pub relation: String,
    pub k: i32,
    /// ‖P_{≤k} R_r(a)‖_∞.
    pub value: f64,
    /// value / (2^k ‖g_r‖_∞); 0 when both vanish.
    pub ratio: f64,
}

/// Low-frequency size of each relation against the integration-by-parts
/// scale 2^k‖g_r‖_∞. Requires [`relation_primitives`] to have run.
pub fn low_band_relation_check(e: &PullbackEnsemble, s: &Spectral, k: i32) -> Result<Vec<LowBandRow>> {
    if e.primitives.is_empty() {
        return Err(Error::Data("relation primitives have not been computed".into()));
    }
    e.primitives
        .iter()
        .map(|rp| {
            let value = s.project_upto(&rp.value, k)?.max_abs();
            let scale = (k as f64).exp2() * rp.sup;
            let ratio = if value == 0.0 { 0.0 } else { value / scale };
            Ok(LowBandRow { relation: rp.relation.clone(), k, value, ratio })
        })
        .collect()
}

/// Band masses of one form: ‖P_k a‖_{L¹} (and optionally ‖P_k a‖_{L²}) for
/// k = k_min, k_min + 1, ….
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleProfile {
    pub k_min: i32,
    pub l1: Vec<f64>,
    pub l2: Option<Vec<f64>>,
    pub volume: f64,
}

impl ScaleProfile {
    pub fn new(k_min: i32, l1: Vec<f64>) -> Self {
        ScaleProfile { k_min, l1, l2: None, volume: 1.0 }
    }

    pub fn uniform(k_min: i32, k_max: i32, value: f64) -> Self {
        Self::new(k_min, vec![value; (k_max - k_min + 1).max(0) as usize])
    }

    pub fn k_max(&self) -> i32 {
        self.k_min + self.l1.len() as i32 - 1
    }

    pub fn l1_at(&self, k: i32) -> f64 {
        if k < self.k_min || k > self.k_max() {
            0.0
        } else {
            self.l1[(k - self.k_min) as usize]
        }
    }

    /// The Cauchy–Schwarz mass max(‖P_k a‖₁, √vol·‖P_k a‖₂), never below the L¹ mass.
    pub fn cs_mass(&self, k: i32) -> f64 {
        let l1 = self.l1_at(k);
        match &self.l2 {
            Some(l2) if k >= self.k_min && k <= self.k_max() => l1.max(self.volume.sqrt() * l2[(k - self.k_min) as usize]),
            _ => l1,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        ScaleProfile {
            k_min: self.k_min,
            l1: self.l1.iter().map(|v| v * c).collect(),
            l2: self.l2.as_ref().map(|l2| l2.iter().map(|v| v * c).collect()),
            volume: self.volume,
        }
    }
}

impl From<&BandProfile> for ScaleProfile {
    fn from(b: &BandProfile) -> Self {
        let totals = b.totals();
        ScaleProfile {
            k_min: totals.first().map_or(0, |r| r.k),
            l1: totals.iter().map(|r| r.l1).collect(),
            l2: Some(totals.iter().map(|r| r.l2).collect()),
            volume: b.grid.volume(),
        }
    }
}

/// How the cross-term sum continues past the last recorded band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TailPolicy {
    /// Stop at the last band.
    Truncate,
    /// Bound the missing bands by the largest recorded mass:
    /// Σ_{k > k_max} 2^{ℓ̄−k} L² m = 2^{ℓ̄−k_max} L² m.
    Extend,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffTerms {
    pub cutoff: i32,
    /// 2^{−ℓ̄} L⁴.
    pub high: f64,
    /// 2^{ℓ̄} L³.
    pub low: f64,
    /// Σ_{k > ℓ̄} 2^{ℓ̄−k} L² ‖P_k a‖₁, worst over the profiles.
    pub cross: f64,
    pub total: f64,
}

fn cross_term(p: &ScaleProfile, lip: f64, cutoff: i32, tail: TailPolicy) -> f64 {
    let l2 = lip * lip;
    let mut s = 0.0;
    for k in (cutoff + 1).max(p.k_min)..=p.k_max() {
        s += (cutoff as f64 - k as f64).exp2() * l2 * p.l1_at(k);
    }
    if tail == TailPolicy::Extend && cutoff <= p.k_max() {
        let m = p.l1.iter().cloned().fold(0.0, f64::max);
        s += (cutoff as f64 - p.k_max() as f64).exp2() * l2 * m;
    }
    s
}

/// The three terms of the cutoff estimate with all constants equal to 1.
pub fn finalbound_terms(profiles: &[ScaleProfile], lip: f64, cutoff: i32, tail: TailPolicy) -> Result<CutoffTerms> {
    if profiles.is_empty() || profiles.iter().all(|p| p.l1.is_empty()) {
        return Err(Error::Data("no band profile supplied".into()));
    }
    let lo = profiles.iter().map(|p| p.k_min).min().unwrap_or(0);
    let hi = profiles.iter().map(|p| p.k_max()).max().unwrap_or(0);
    if cutoff < lo || cutoff > hi {
        return Err(Error::Window(format!("cutoff {cutoff} outside band range [{lo}, {hi}]")));
    }
    let c = (cutoff as f64).exp2();
    let high = lip.powi(4) / c;
    let low = c * lip.powi(3);
    let cross = profiles.iter().map(|p| cross_term(p, lip, cutoff, tail)).fold(0.0, f64::max);
    Ok(CutoffTerms { cutoff, high, low, cross, total: high + low + cross })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundConfig {
    /// Cutoffs ℓ̄ with L^{lo} ≤ 2^ℓ̄ ≤ L^{hi}.
    pub window: (f64, f64),
    /// Cauchy–Schwarz bands run up to 2^k ≤ L^{band_top}; higher bands are absorbed.
    pub band_top: f64,
    pub tail: TailPolicy,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig { window: (0.1, 0.9), band_top: 1.0, tail: TailPolicy::Extend }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CsSplit {
    /// Bands k with L^{lo} ≤ 2^k ≤ L^{band_top}.
    pub bands: Vec<i32>,
    /// L²·√|K|·(Σ_{k∈K} m_k²)^{1/2} / |C|.
    pub polylog: f64,
    /// Window-averaged cross contributions from 2^k > L^{band_top} and the tail.
    pub absorbed: f64,
    /// Window average of the first two terms.
    pub two_term_mean: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub lipschitz: f64,
    pub config: BoundConfig,
    pub cutoffs: Vec<CutoffTerms>,
    pub chosen_cutoff: i32,
    /// Minimum over admissible cutoffs of the term sum.
    pub min_bound: f64,
    /// Average of the term sums over the window.
    pub averaged_direct: f64,
    /// two_term_mean + polylog + absorbed; never below `averaged_direct`.
    pub averaged_cs: f64,
    pub cs: CsSplit,
}

impl BoundReport {
    pub fn final_bound(&self) -> f64 {
        self.min_bound
    }
}

fn window_cutoffs(lip: f64, lo: f64, hi: f64, k_lo: i32, k_hi: i32) -> Vec<i32> {
    let l = lip.log2();
    let eps = 1e-9;
    ((lo * l - eps).ceil() as i32..=(hi * l + eps).floor() as i32).filter(|c| (k_lo..=k_hi).contains(c)).collect()
}

/// Evaluate the cutoff estimate over the window, take its minimum and its
/// average, and split the average into the two-term part, the
/// Cauchy–Schwarz polylog part and the absorbed high bands.
pub fn averaged_bound(profiles: &[ScaleProfile], lip: f64, cfg: &BoundConfig) -> Result<BoundReport> {
    if profiles.is_empty() || profiles.iter().all(|p| p.l1.is_empty()) {
        return Err(Error::Data("no band profile supplied".into()));
    }
    if !(lip > 1.0) {
        return Err(Error::Window(format!("Lipschitz scale {lip} must exceed 1")));
    }
    let k_lo = profiles.iter().map(|p| p.k_min).min().unwrap_or(0);
    let k_hi = profiles.iter().map(|p| p.k_max()).max().unwrap_or(0);
    let cutoffs = window_cutoffs(lip, cfg.window.0, cfg.window.1, k_lo, k_hi);
    if cutoffs.len() < 2 {
        return Err(Error::Window(format!(
            "window [L^{}, L^{}] holds {} admissible cutoffs at L = {lip}",
            cfg.window.0,
            cfg.window.1,
            cutoffs.len()
        )));
    }
    let terms: Vec<CutoffTerms> =
        cutoffs.iter().map(|&c| finalbound_terms(profiles, lip, c, cfg.tail)).collect::<Result<_>>()?;
    let best = terms.iter().min_by(|a, b| a.total.total_cmp(&b.total)).expect("nonempty window");
    let nc = terms.len() as f64;
    let averaged_direct = terms.iter().map(|t| t.total).sum::<f64>() / nc;
    let two_term_mean = terms.iter().map(|t| t.high + t.low).sum::<f64>() / nc;

    let l = lip.log2();
    let eps = 1e-9;
    let k_first = (cfg.window.0 * l - eps).ceil() as i32;
    let k_last = (cfg.band_top * l + eps).floor() as i32;
    let bands: Vec<i32> = (k_first..=k_last).collect();
    let l2 = lip * lip;
    let mut polylog = 0.0f64;
    let mut absorbed = 0.0f64;
    for p in profiles {
        let mass: f64 = bands.iter().map(|&k| p.cs_mass(k).powi(2)).sum::<f64>().sqrt();
        polylog = polylog.max(l2 * (bands.len() as f64).sqrt() * mass / nc);
        let mut abs = 0.0;
        for &c in &cutoffs {
            let full = cross_term(p, lip, c, cfg.tail);
            let inside: f64 = bands
                .iter()
                .filter(|&&k| k > c)
                .map(|&k| (c as f64 - k as f64).exp2() * l2 * p.l1_at(k))
                .sum();
            abs += full - inside;
        }
        absorbed = absorbed.max(abs / nc);
    }
    let averaged_cs = (two_term_mean + polylog + absorbed).max(averaged_direct);
    Ok(BoundReport {
        lipschitz: lip,
        config: *cfg,
        chosen_cutoff: best.cutoff,
        min_bound: best.total,
        cutoffs: terms,
        averaged_direct,
        averaged_cs,
        cs: CsSplit { bands, polylog, absorbed, two_term_mean },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub lipschitz: f64,
    pub min_bound: f64,
    pub averaged_cs: f64,
    pub polylog: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolylogFit {
    pub points: Vec<SweepPoint>,
    /// Slope of ln(polylog/L⁴) against ln ln L.
    pub exponent: f64,
    pub intercept: f64,
}

/// Run [`averaged_bound`] over an L-sweep and fit the (log L) exponent of
/// the Cauchy–Schwarz part relative to L⁴.
pub fn polylog_sweep<F>(lips: &[f64], profiles: F, cfg: &BoundConfig) -> Result<PolylogFit>
where
    F: Fn(f64) -> Vec<ScaleProfile>,
{
    let mut points = Vec::with_capacity(lips.len());
    for &lip in lips {
        let r = averaged_bound(&profiles(lip), lip, cfg)?;
        points.push(SweepPoint { lipschitz: lip, min_bound: r.min_bound, averaged_cs: r.averaged_cs, polylog: r.cs.polylog });
    }
    let (exponent, intercept) = fit_polylog_exponent(&points)?;
    Ok(PolylogFit { points, exponent, intercept })
}

pub fn fit_polylog_exponent(points: &[SweepPoint]) -> Result<(f64, f64)> {
    if points.iter().any(|p| p.polylog <= 0.0 || p.lipschitz <= 1.0) {
        return Err(Error::Fit("polylog terms must be positive with L > 1".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.lipschitz.ln().ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| (p.polylog / p.lipschitz.powi(4)).ln()).collect();
    linear_fit(&x, &y)
}

/// η = min(β₁, β₂ − β₁, γ).
pub fn allfreq_exponent(beta1: f64, beta2: f64, gamma: f64) -> Result<f64> {
    if !(0.0 < beta1 && beta1 < beta2 && beta2 < 1.0) || !(gamma > 0.0) {
        return Err(Error::Ordering(format!("need 0 < β₁ < β₂ < 1 and γ > 0, got ({beta1}, {beta2}, {gamma})")));
    }
    Ok(beta1.min(beta2 - beta1).min(gamma))
}

/// What a band profile does on the frequency gap L^{β₁} < 2^k < L^{β₂}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GapModel {
    /// The gap bands carry no mass.
    Vanishing,
    /// The gap bands carry exactly the hypothesis bound L^{2−γ}.
    Saturated,
}

/// Bands k = 0..=log₂L with ‖P_k a‖₁ = L² outside the gap and the gap
/// treatment of `model` inside.
pub fn spectral_gap_profile(lip: f64, beta1: f64, beta2: f64, gamma: f64, model: GapModel) -> Result<ScaleProfile> {
    allfreq_exponent(beta1, beta2, gamma)?;
    let l = lip.log2();
    let top = l.round() as i32;
    let l1 = (0..=top)
        .map(|k| {
            let in_gap = beta1 * l < k as f64 && (k as f64) < beta2 * l;
            match (in_gap, model) {
                (false, _) => lip * lip,
                (true, GapModel::Vanishing) => 0.0,
                (true, GapModel::Saturated) => lip.powf(2.0 - gamma),
            }
        })
        .collect();
    Ok(ScaleProfile::new(0, l1))
}

#[derive(Clone, Debug, Serialize)]
pub struct NullstellensatzReport {
    pub m: u32,
    pub k: i32,
    /// Per relation: (∫ψ)^{(2m−1)/2m} (∫ψ|R_r(P_{≤k}a)|)^{1/2m}.
    pub relation_terms: Vec<f64>,
    pub low: f64,
    /// Σ_{ℓ>k} ∫|dψ||Prim P_ℓ a_top|.
    pub high: f64,
    pub bound: f64,
}

/// Bound on ∫ψ a_top from a certificate exponent m: the low-frequency part
/// through the relations of the projected forms, the high bands through
/// their primitives. Forms are expected normalised to unit size.
pub fn nullstellensatz_bound(
    e: &PullbackEnsemble,
    p: &RingPresentation,
    s: &Spectral,
    m: u32,
    k: i32,
) -> Result<NullstellensatzReport> {
    if m < 1 {
        return Err(Error::Parameter("certificate exponent m must be at least 1".into()));
    }
    check_generators(e, p)?;
    let grid = e.grid();
    let psi = &e.psi.components[0];
    let psi_int = psi.iter().sum::<f64>() * grid.cell_volume();
    let q = 1.0 / (2.0 * m as f64);

    let projected: Vec<GridForm> = e.forms.iter().map(|a| s.project_upto(a, k)).collect::<Result<_>>()?;
    let relation_terms: Vec<f64> = relation_values(&projected, p)?
        .iter()
        .map(|r| {
            let mass = weighted_integral(psi, &pointwise_norm(r), &grid);
            if mass == 0.0 {
                0.0
            } else {
                psi_int.powf(1.0 - q) * mass.powf(q)
            }
        })
        .collect();
    let low = relation_terms.iter().sum();

    let top = evaluate_word(&p.top, &e.forms)?;
    let dpsi = pointwise_norm(&s.exterior_derivative(&e.psi)?);
    let mut high = 0.0;
    if dpsi.iter().any(|&v| v != 0.0) {
        for l in (k + 1).max(s.bands().k_min)..=s.bands().k_max {
            let prim = s.primitive_nonzero(&top, Some(l))?;
            high += weighted_integral(&dpsi, &pointwise_norm(&prim), &grid);
        }
    }
    Ok(NullstellensatzReport { m, k, relation_terms, low, high, bound: low + high })
}

/// x ↦ f(x) on the closed unit ball and f(x/|x|) outside it.
pub fn radial_extension<F>(f: F) -> impl Fn(&[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    move |x: &[f64]| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r <= 1.0 {
            f(x)
        } else {
            let y: Vec<f64> = x.iter().map(|v| v / r).collect();
            f(&y)
        }
    }
}

/// Samples of the radial extension on the grid of [−2, 2]^dim with spacing
/// 2/(n−1) (so the [−1, 1]^dim grid with n points per axis is a subgrid).
#[derive(Clone, Debug)]
pub struct BallExtension {
    pub dim: usize,
    pub points_per_axis: usize,
    pub spacing: f64,
    /// Values at points of radius ≤ 2, `None` outside; axis 0 slowest.
    pub values: Vec<Option<Vec<f64>>>,
    /// Discrete Lipschitz constant over edges with both ends in the unit ball.
    pub lipschitz_inner: f64,
    /// Discrete Lipschitz constant over edges with both ends in the radius-2 ball.
    pub lipschitz_outer: f64,
}

impl BallExtension {
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let m = self.points_per_axis;
        let mut idx = flat;
        let mut x = vec![0.0; self.dim];
        for a in (0..self.dim).rev() {
            x[a] = -2.0 + (idx % m) as f64 * self.spacing;
            idx /= m;
        }
        x
    }
}

pub fn ball_extension<F>(f: F, dim: usize, n: usize) -> Result<BallExtension>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync + Send,
{
    if dim == 0 || n < 3 || n % 2 == 0 {
        return Err(Error::Resolution("ball grid needs dim ≥ 1 and an odd n ≥ 3".into()));
    }
    let spacing = 2.0 / (n - 1) as f64;
    let m = 2 * n - 1;
    let total = m.pow(dim as u32);
    let ext = radial_extension(&f);
    let coord = |flat: usize| {
        let mut idx = flat;
        let mut x = vec![0.0; dim];
        for a in (0..dim).rev() {
            x[a] = -2.0 + (idx % m) as f64 * spacing;
            idx /= m;
        }
        x
    };
    let radius = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let values: Vec<Option<Vec<f64>>> = exec::map_range(total, |i| {
        let x = coord(i);
        (radius(&x) <= 2.0 + 1e-12).then(|| ext(&x))
    });
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let (mut inner, mut outer) = (0.0f64, 0.0f64);
    for i in 0..total {
        let Some(vi) = &values[i] else { continue };
        let xi = coord(i);
        let mut stride = 1;
        for _ in 0..dim {
            let ia = (i / stride) % m;
            if ia + 1 < m {
                let j = i + stride;
                if let Some(vj) = &values[j] {
                    let q = dist(vi, vj) / spacing;
                    outer = outer.max(q);
                    if radius(&xi) <= 1.0 && radius(&coord(j)) <= 1.0 {
                        inner = inner.max(q);
                    }
                }
            }
            stride *= m;
        }
    }
    Ok(BallExtension { dim, points_per_axis: m, spacing, values, lipschitz_inner: inner, lipschitz_outer: outer })
}

fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).expect("nonempty");
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

/// Largest |pulled-back volume density| of the extension at grid points with
/// 1 + margin < |x| ≤ 2, from central differences with step `step`. For
/// f: ℝ^d → ℝ^d the density is det Df; for sphere-valued f: ℝ^d → S^d ⊂
/// ℝ^{d+1} it is det[f, ∂₁f, …, ∂_d f].
pub fn extension_jacobian_max<F>(f: F, dim: usize, n: usize, step: f64, margin: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync + Send,
{
    let spacing = 2.0 / (n.max(3) - 1) as f64;
    let m = 2 * n.max(3) - 1;
    let ext = radial_extension(&f);
    let target = ext(&vec![0.0; dim]).len();
    if target != dim && target != dim + 1 {
        return Err(Error::Dimension(format!("target dimension {target} must be {dim} or {}", dim + 1)));
    }
    let dets = exec::map_range(m.pow(dim as u32), |flat| {
        let mut idx = flat;
        let mut x = vec![0.0; dim];
        for a in (0..dim).rev() {
            x[a] = -2.0 + (idx % m) as f64 * spacing;
            idx /= m;
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r <= 1.0 + margin || r > 2.0 {
            return 0.0;
        }
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(target);
        if target == dim + 1 {
            cols.push(ext(&x));
        }
        for a in 0..dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[a] += step;
            xm[a] -= step;
            let (fp, fm) = (ext(&xp), ext(&xm));
            cols.push(fp.iter().zip(&fm).map(|(p, q)| (p - q) / (2.0 * step)).collect());
        }
        determinant(cols).abs()
    });
    Ok(dets.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::connected_sum_cp2;

    fn cap(u: f64, v: f64) -> [f64; 3] {
        let (x, y) = (u - 0.5, v - 0.5);
        let r = (2.0 * (x * x + y * y).sqrt()).min(1.0);
        let rho = (x * x + y * y).sqrt();
        if rho == 0.0 {
            return [0.0, 0.0, 1.0];
        }
        let s = (PI * r).sin() / rho;
        [s * x, s * y, (PI * r).cos()]
    }

    #[test]
    fn solid_angle_of_octant() {
        let o = solid_angle([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
        assert!((o - PI / 2.0).abs() < 1e-14);
        let r = solid_angle([0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        assert!((r + PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn validation() {
        let bad = SampledSphereMap::from_fn(8, false, |_, _| [0.0, 0.0, 2.0]);
        assert!(matches!(bad, Err(Error::Geometry(_))));
        let f = SampledSphereMap::from_fn(4, true, cap).unwrap();
        assert!(matches!(pullback_area_form(&f, PullbackScheme::SolidAngle), Err(Error::Resolution(_))));
    }

    #[test]
    fn constant_map_pulls_back_to_zero() {
        let f = SampledSphereMap::from_fn(16, true, |_, _| BASEPOINT).unwrap();
        let a = pullback_area_form(&f, PullbackScheme::SolidAngle).unwrap();
        assert_eq!(a.max_abs(), 0.0);
    }

    #[test]
    fn cap_map_has_degree_one() {
        let f = SampledSphereMap::from_fn(256, true, cap).unwrap();
        let a = pullback_area_form(&f, PullbackScheme::SolidAngle).unwrap();
        let deg = total_integral(&a).unwrap();
        assert!((deg.abs() - 1.0).abs() < 1e-6, "{deg}");
        let cd = total_integral(&pullback_area_form(&f, PullbackScheme::CentralDifference).unwrap()).unwrap();
        assert!((cd - deg).abs() < 1e-2, "{cd}");
        // Linearity in ψ.
        let half = GridForm::from_fn(a.grid, 0, |_, _| 0.5).unwrap();
        assert!((degree_integral(&a, &half).unwrap() - deg / 2.0).abs() < 1e-12);
        assert!(degree_integral(&a, &half.scale(-1.0)).is_err());
    }

    #[test]
    fn cutoff_weight_shape() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let psi = cutoff_weight(g).unwrap();
        assert_eq!(psi.components[0][8 * 16 + 8], 1.0);
        assert_eq!(psi.components[0][0], 0.0);
        assert!(psi.components[0].iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn zero_profile_two_terms() {
        let lip = 2f64.powi(20);
        let p = ScaleProfile::uniform(0, 20, 0.0);
        let r = averaged_bound(&[p.clone()], lip, &BoundConfig::default()).unwrap();
        assert_eq!(r.chosen_cutoff, 10);
        assert!((r.min_bound / lip.powf(3.5) - 2.0).abs() < 1e-12);
        let t = finalbound_terms(&[p], lip, 4, TailPolicy::Extend).unwrap();
        assert_eq!((t.high, t.low, t.cross), (lip.powi(4) / 16.0, 16.0 * lip.powi(3), 0.0));
    }

    #[test]
    fn cross_term_of_uniform_profile() {
        let lip = 2f64.powi(16);
        let m = lip * lip / lip.ln().sqrt();
        let p = ScaleProfile::uniform(0, 60, m);
        let t = finalbound_terms(&[p], lip, 8, TailPolicy::Truncate).unwrap();
        let expect = lip.powi(4) / lip.ln().sqrt();
        assert!((t.cross / expect - 1.0).abs() < 1e-6);
    }

    #[test]
    fn two_shell_cross_term() {
        let lip = 64.0;
        let mut l1 = vec![0.0; 7];
        l1[0] = 5.0;
        l1[6] = 3.0;
        let p = ScaleProfile::new(0, l1);
        let t = finalbound_terms(&[p], lip, 1, TailPolicy::Truncate).unwrap();
        assert!((t.cross - 2f64.powi(1 - 6) * lip * lip * 3.0).abs() < 1e-9);
        assert!(finalbound_terms(&[], lip, 1, TailPolicy::Truncate).is_err());
    }

    #[test]
    fn window_errors() {
        let p = ScaleProfile::uniform(0, 3, 1.0);
        assert!(matches!(averaged_bound(&[p], 4.0, &BoundConfig::default()), Err(Error::Window(_))));
    }

    #[test]
    fn allfreq_cases() {
        assert_eq!(allfreq_exponent(0.3, 0.6, 0.2).unwrap(), 0.2);
        assert_eq!(allfreq_exponent(0.1, 0.9, 1.0).unwrap(), 0.1);
        assert!((allfreq_exponent(0.4, 0.5, 0.3).unwrap() - 0.1).abs() < 1e-15);
        assert!(matches!(allfreq_exponent(0.6, 0.3, 0.2), Err(Error::Ordering(_))));
    }

    #[test]
    fn saturated_gap_exponent_is_close() {
        let lip = 2f64.powi(20);
        let p = spectral_gap_profile(lip, 0.3, 0.6, 0.2, GapModel::Saturated).unwrap();
        let r = averaged_bound(&[p], lip, &BoundConfig::default()).unwrap();
        assert!((r.min_bound.log(lip) - 3.8).abs() < 0.05);
    }

    fn witness_forms(grid: Grid) -> Vec<GridForm> {
        // a₁ = dx₁₂ + dx₃₄ and a₂ = dx₁₃ − dx₂₄: a₁a₂ = 0 and a₁² = a₂².
        let a1 = GridForm::from_fn(grid, 2, |c, _| [1.0, 0.0, 0.0, 0.0, 0.0, 1.0][c]).unwrap();
        let a2 = GridForm::from_fn(grid, 2, |c, _| [0.0, 1.0, 0.0, 0.0, -1.0, 0.0][c]).unwrap();
        vec![a1, a2]
    }

    #[test]
    fn witness_ensemble_has_zero_relations() {
        let g = Grid::new(4, 8, 1.0).unwrap();
        let s = Spectral::new(g);
        let p = connected_sum_cp2(2).unwrap();
        let mut e = PullbackEnsemble::new(witness_forms(g), 1.0, cutoff_weight(g).unwrap()).unwrap();
        relation_primitives(&mut e, &p, &s, 1e-9).unwrap();
        assert!(e.primitives.iter().all(|r| r.sup == 0.0));
        for k in s.bands().range() {
            assert!(low_band_relation_check(&e, &s, k).unwrap().iter().all(|r| r.value < 1e-14));
        }
        let ns = nullstellensatz_bound(&e, &p, &s, 1, 1).unwrap();
        assert_eq!(ns.low, 0.0);
        assert_eq!(ns.bound, ns.high);
        assert!(matches!(nullstellensatz_bound(&e, &p, &s, 0, 1), Err(Error::Parameter(_))));
        let mut zero_psi = e.clone();
        zero_psi.psi = GridForm::zeros(g, 0).unwrap();
        assert_eq!(nullstellensatz_bound(&zero_psi, &p, &s, 2, 1).unwrap().bound, 0.0);
    }

    #[test]
    fn non_exact_relation_is_rejected() {
        let g = Grid::new(4, 8, 1.0).unwrap();
        let s = Spectral::new(g);
        let p = connected_sum_cp2(2).unwrap();
        let mut forms = witness_forms(g);
        forms[1] = forms[0].clone();
        let mut e = PullbackEnsemble::new(forms, 1.0, cutoff_weight(g).unwrap()).unwrap();
        assert!(matches!(relation_primitives(&mut e, &p, &s, 1e-9), Err(Error::NotExact { .. })));
    }

    #[test]
    fn exact_band_limited_relation_recovers_primitive() {
        use std::f64::consts::TAU;
        let g = Grid::new(4, 8, 1.0).unwrap();
        let s = Spectral::new(g);
        // a₁ = dx₁₂ + d(sin 2πx₃ dx₄), a₂ = dx₁₃: a₁a₂ = −(2π cos 2πx₃) dx₁₃∧dx₃₄ = 0 and
        // a₁² = 2·2π cos(2πx₃) dx₁₂₃₄ is exact; the relation u₁² − u₂² then has mean zero.
        let a1 = GridForm::from_fn(g, 2, |c, x| match c {
            0 => 1.0,
            5 => TAU * (TAU * x[2]).cos(),
            _ => 0.0,
        })
        .unwrap();
        let a2 = GridForm::from_fn(g, 2, |c, _| if c == 1 { 1.0 } else { 0.0 }).unwrap();
        let p = connected_sum_cp2(2).unwrap();
        let mut e = PullbackEnsemble::new(vec![a1, a2], 1.0, cutoff_weight(g).unwrap()).unwrap();
        relation_primitives(&mut e, &p, &s, 1e-9).unwrap();
        assert!(e.primitives.iter().all(|r| r.residual < 1e-8 * r.value.max_abs().max(1.0)));
        assert!(e.primitives.iter().any(|r| r.sup > 0.1));
        let top = s.bands().k_max;
        for row in low_band_relation_check(&e, &s, top).unwrap() {
            assert!(row.ratio.is_finite());
        }
    }

    #[test]
    fn radial_extension_properties() {
        let id = |x: &[f64]| x.to_vec();
        let ext = ball_extension(id, 2, 9).unwrap();
        for (i, v) in ext.values.iter().enumerate() {
            let x = ext.point(i);
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if let Some(v) = v {
                if r <= 1.0 {
                    assert_eq!(v, &x);
                }
            }
        }
        assert!(ext.lipschitz_outer <= 2.0 * ext.lipschitz_inner + 1e-12);
        let j = extension_jacobian_max(id, 2, 9, 1e-6, 1e-3).unwrap();
        assert!(j < 1e-8, "{j}");
        let j3 = extension_jacobian_max(id, 3, 5, 1e-6, 1e-3).unwrap();
        assert!(j3 < 1e-8, "{j3}");
        let c = ball_extension(|_| vec![0.0, 0.0, 1.0], 2, 5).unwrap();
        assert!(c.values.iter().flatten().all(|v| v == &vec![0.0, 0.0, 1.0]));
    }
}
