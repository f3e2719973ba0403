//! Explicit constructions behind the lower bounds: grid realisations of the
//! sphere maps f_d, the Lipschitz recursion for the self-maps r_{p^ℓ}, and
//! synthetic closed-form ensembles with activity at every scale.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::degree::{SampledSphereMap, ScaleProfile};
use crate::error::{Error, Result};
use crate::exterior::MultiIndex;
use crate::lp::{Grid, GridForm};

/// The degree-one cap map on the unit square: radius r = min(1, 2|x − c|)
/// about the centre c goes to (sin(πr)·û, cos(πr)), so the centre hits the
/// north pole and the inscribed circle and everything outside it the south
/// pole.
pub fn cap_map(u: f64, v: f64) -> [f64; 3] {
    let (x, y) = (u - 0.5, v - 0.5);
    let rho = (x * x + y * y).sqrt();
    if rho == 0.0 {
        return [0.0, 0.0, 1.0];
    }
    let r = (2.0 * rho).min(1.0);
    if r >= 1.0 {
        return crate::degree::BASEPOINT;
    }
    let s = (PI * r).sin() / rho;
    [s * x, s * y, (PI * r).cos()]
}

/// f_d: the unit square cut into d×d blocks, each running a rescaled cap map.
/// The boundary of every block goes to the basepoint, so the map has degree d².
pub fn sphere_map(d: usize, n: usize) -> Result<SampledSphereMap> {
    if d == 0 || n % d != 0 {
        return Err(Error::Resolution(format!("N = {n} is not divisible by d = {d}")));
    }
    let df = d as f64;
    SampledSphereMap::from_fn(n, true, move |u, v| {
        let (su, sv) = (u * df, v * df);
        cap_map(su - su.floor(), sv - sv.floor())
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereMapPlan {
    pub n: usize,
    pub d: usize,
    pub blocks_per_axis: usize,
    pub subcubes: u64,
    pub degree: u64,
    pub c1: f64,
    pub lipschitz_bound: f64,
}

pub fn sphere_map_plan(n: usize, d: usize, geom: &GeometryConstants) -> SphereMapPlan {
    let subcubes = (d as u64).pow(n as u32);
    SphereMapPlan {
        n,
        d,
        blocks_per_axis: d,
        subcubes,
        degree: subcubes,
        c1: geom.c1(),
        lipschitz_bound: geom.c1() * d as f64,
    }
}

/// Inputs of the recursion. C₀ compares the cube-boundary metric with the
/// round one, `lip_g` is the Lipschitz constant of the cap map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometryConstants {
    pub c0: f64,
    pub lip_g: f64,
    /// Subcube side D of the homothetic grid region is `d_scale / p`.
    pub d_scale: f64,
    /// Lip(r_p) = `rp_factor · p · C₂`.
    pub rp_factor: f64,
}

/// Resolution used to measure the cap map's Lipschitz constant.
pub const CAP_RESOLUTION: usize = 256;

impl GeometryConstants {
    /// C₀ = √3 and the cap map's Lipschitz constant measured on the grid.
    pub fn measured() -> Result<Self> {
        let lip_g = sphere_map(1, CAP_RESOLUTION)?.lipschitz();
        Ok(GeometryConstants { c0: 3f64.sqrt(), lip_g, d_scale: 0.49, rp_factor: 2.0 })
    }

    /// C₁ = C₀²·Lip g.
    pub fn c1(&self) -> f64 {
        self.c0.powi(2) * self.lip_g
    }

    /// C₂ = C₀⁴·(Lip g)².
    pub fn c2(&self) -> f64 {
        self.c0.powi(4) * self.lip_g.powi(2)
    }

    pub fn side(&self, p: usize) -> f64 {
        self.d_scale / p as f64
    }

    pub fn lip_rp(&self, p: usize) -> f64 {
        self.rp_factor * p as f64 * self.c2()
    }
}

/// Lipschitz bound C₂·p·d of the homotopy between f_{pd} and f_d ∘ f_p.
pub fn homotopy_bound(_n: usize, p: usize, d: usize, geom: &GeometryConstants) -> f64 {
    geom.c2() * (p * d) as f64
}

/// One level of the layered construction.
#[derive(Clone, Debug, Serialize)]
pub struct LayerSpec {
    pub level: u32,
    /// Fractions of the unit interval taken by the homotopy shell, the
    /// interstitial region and the homothetic grid; they sum to 1.
    pub widths: [f64; 3],
    pub side: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub bound: f64,
}

impl LayerSpec {
    /// Widths measured from the centre line, summing to 1/2.
    pub fn half_widths(&self) -> [f64; 3] {
        self.widths.map(|w| w / 2.0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RecursionPlan {
    pub p: usize,
    pub levels: u32,
    pub cohomology_degrees: usize,
    pub geometry: GeometryConstants,
    /// Levels of the top cohomology degree, ℓ = 1..=levels.
    pub layers: Vec<LayerSpec>,
    pub lipschitz_bound: f64,
    /// Self-map degree p^{nℓ} recorded for each top dimension n = 2..=2d.
    pub degrees: Vec<(usize, f64)>,
    /// C with bound(ℓ) ≤ C·ℓ^{d−1}p^ℓ for every level, derived from the base data.
    pub guaranteed_constant: f64,
    /// bound(ℓ)/(ℓ^{d−1}p^ℓ) per level.
    pub normalized: Vec<f64>,
}

/// Lipschitz bounds B(j, ℓ) of r_{p^ℓ} on the part of the space built from
/// the first j cohomology degrees, and H(j, ℓ) of the matching homotopy.
///
/// B(1, ℓ) = C₁p^ℓ and H(1, ℓ) = C₂p^ℓ come from the sphere maps. For j ≥ 2
/// each level splits a cell into a homotopy shell (L₁ = 2H(j−1, ℓ)), an
/// interstitial region running r_p over the previous level
/// (L₂ = 2·Lip(r_p)·B(j−1, ℓ−1)) and a grid of subcubes of side D rescaling
/// the previous level (L₃ = B(j, ℓ−1)/D). Stretching the regions to equalise
/// these gives B = pD·L₃ + (1/2 − pD)·L₂ + L₁/2 and H = max(L₁, L₂, L₃).
pub fn recursion_plan(p: usize, levels: u32, d: usize, geom: &GeometryConstants) -> Result<RecursionPlan> {
    if p < 2 || levels < 1 || d < 1 {
        return Err(Error::Parameter(format!("need p ≥ 2, ℓ ≥ 1, d ≥ 1 (got {p}, {levels}, {d})")));
    }
    let side = geom.side(p);
    let pd = p as f64 * side;
    if !(side > 0.0) || pd > 0.5 {
        return Err(Error::Geometry(format!("subcube side D = {side} must satisfy 0 < pD ≤ 1/2")));
    }
    let pf = p as f64;
    let lip_rp = geom.lip_rp(p);
    let n_levels = levels as usize;
    // b[j][ℓ], h[j][ℓ] for j = 1..=d, ℓ = 1..=levels (index 0 unused).
    let mut b = vec![vec![0.0; n_levels + 1]; d + 1];
    let mut h = vec![vec![0.0; n_levels + 1]; d + 1];
    let mut layers = Vec::new();
    for l in 1..=n_levels {
        b[1][l] = geom.c1() * pf.powi(l as i32);
        h[1][l] = geom.c2() * pf.powi(l as i32);
    }
    for j in 2..=d {
        b[j][1] = lip_rp;
        h[j][1] = 2f64.max(1.0 / pd) * lip_rp;
        if j == d {
            layers.push(LayerSpec {
                level: 1,
                widths: [0.5, 0.5 - pd, pd],
                side,
                l1: 0.0,
                l2: 0.0,
                l3: 0.0,
                bound: b[j][1],
            });
        }
        for l in 2..=n_levels {
            let l1 = 2.0 * h[j - 1][l];
            let l2 = 2.0 * lip_rp * b[j - 1][l - 1];
            let l3 = b[j][l - 1] / side;
            b[j][l] = pd * l3 + (0.5 - pd) * l2 + l1 / 2.0;
            h[j][l] = l1.max(l2).max(l3);
            if j == d {
                layers.push(LayerSpec {
                    level: l as u32,
                    widths: [0.5, 0.5 - pd, pd],
                    side,
                    l1,
                    l2,
                    l3,
                    bound: b[j][l],
                });
            }
        }
    }
    if d == 1 {
        layers = (1..=n_levels)
            .map(|l| LayerSpec { level: l as u32, widths: [0.0, 0.0, 1.0], side: 1.0, l1: 0.0, l2: 0.0, l3: 0.0, bound: b[1][l] })
            .collect();
    }

    let (mut c, mut c_prime) = (geom.c1(), geom.c2());
    for _ in 2..=d {
        let next_c = (lip_rp / pf).max((1.0 - 2.0 * pd) * lip_rp * c / pf + c_prime);
        let next_cp = (2.0 * c_prime).max(2.0 * lip_rp * c / pf).max(next_c / pd);
        c = next_c;
        c_prime = next_cp;
    }
    let normalized: Vec<f64> =
        (1..=n_levels).map(|l| b[d][l] / ((l as f64).powi(d as i32 - 1) * pf.powi(l as i32))).collect();
    if let Some((i, v)) = normalized.iter().enumerate().find(|(_, &v)| v > c * (1.0 + 1e-12)) {
        return Err(Error::Geometry(format!("level {} exceeds the guaranteed constant: {v} > {c}", i + 1)));
    }
    let lipschitz_bound = b[d][n_levels];
    let degrees = (1..=d).map(|j| (2 * j, pf.powi((2 * j * n_levels) as i32))).collect();
    Ok(RecursionPlan {
        p,
        levels,
        cohomology_degrees: d,
        geometry: *geom,
        layers,
        lipschitz_bound,
        degrees,
        guaranteed_constant: c,
        normalized,
    })
}

/// The first level ℓ* ≤ `max_level` from which the naive iterate
/// base^ℓ exceeds ℓ^{d−1}p^ℓ at every level up to `max_level`.
pub fn naive_crossover(base: f64, p: usize, d: usize, max_level: u32) -> Option<u32> {
    let plan = |l: u32| (l as f64).powi(d as i32 - 1) * (p as f64).powi(l as i32);
    let wins: Vec<bool> = (1..=max_level).map(|l| base.powi(l as i32) > plan(l)).collect();
    let last_loss = wins.iter().rposition(|w| !w);
    match last_loss {
        None => Some(1),
        Some(i) if i + 1 < wins.len() => Some(i as u32 + 2),
        _ => None,
    }
}

/// Request for a layered ensemble: ℓ + 1 layers, layer j at band
/// ⌊j·log₂p⌋, each with ‖P_k a‖_{L¹} = L²/√(ℓ+1).
#[derive(Clone, Debug, Serialize)]
pub struct LayeredProfile {
    pub p: usize,
    pub levels: u32,
    pub l_squared: f64,
    pub bands: Vec<i32>,
    pub profile: ScaleProfile,
}

pub fn layered_profile(p: usize, levels: u32, l_squared: f64) -> Result<LayeredProfile> {
    if p < 2 {
        return Err(Error::Parameter("layered profiles need p ≥ 2".into()));
    }
    let bands: Vec<i32> = (0..=levels).map(|j| (j as f64 * (p as f64).log2()).floor() as i32).collect();
    let top = *bands.last().expect("at least one layer");
    let mass = l_squared / ((levels + 1) as f64).sqrt();
    let mut l1 = vec![0.0; top as usize + 1];
    for &k in &bands {
        l1[k as usize] = mass;
    }
    Ok(LayeredProfile { p, levels, l_squared, bands, profile: ScaleProfile::new(0, l1) })
}

/// Grid realisation of a layered profile on the 4-torus of period 1: each
/// layer of each form is A·sin(2π·2^k x_c + φ) dx_c∧dx_e with random axes and
/// phase, closed because its coefficient depends on x_c alone, and supported
/// on the lattice sphere |m| = 2^k where only η_k is nonzero.
#[derive(Clone, Debug, Serialize)]
pub struct LayeredEnsemble {
    pub request: LayeredProfile,
    pub grid: Grid,
    pub forms: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug)]
struct Wave {
    axis: usize,
    other: usize,
    freq: f64,
    phase: f64,
    amplitude: f64,
}

impl LayeredEnsemble {
    pub fn new(request: LayeredProfile, n: usize, forms: usize, seed: u64) -> Result<Self> {
        let grid = Grid::new(4, n, 1.0)?;
        let top = *request.bands.last().expect("at least one layer");
        if (1usize << top) >= n / 2 {
            return Err(Error::Resolution(format!("band {top} does not fit below the Nyquist frequency of N = {n}")));
        }
        Ok(LayeredEnsemble { request, grid, forms, seed })
    }

    fn waves(&self, index: usize) -> Vec<Wave> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let n = self.grid.n;
        let mass = self.request.profile.l1_at(self.request.bands[0]);
        self.request
            .bands
            .iter()
            .map(|&k| {
                let axis = rng.random_range(0..4);
                let other = (axis + rng.random_range(1..4)) % 4;
                let phase = rng.random_range(0.0..TAU);
                let freq = (1u64 << k) as f64;
                // Discrete mean of |sin| over the lattice line, so the
                // Riemann-sum L¹ norm comes out exact.
                let mean = (0..n).map(|j| (TAU * freq * j as f64 / n as f64 + phase).sin().abs()).sum::<f64>() / n as f64;
                Wave { axis, other, freq, phase, amplitude: mass / (mean * self.grid.volume()) }
            })
            .collect()
    }

    /// The `index`-th form of the ensemble.
    pub fn form(&self, index: usize) -> Result<GridForm> {
        let waves = self.waves(index);
        let comps = MultiIndex::all_of_degree(4, 2);
        let slot = |a: usize, b: usize| {
            let (lo, hi, s) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
            let m = MultiIndex::from_mask((1 << lo) | (1 << hi));
            (comps.iter().position(|&c| c == m).expect("2-index"), s)
        };
        let placed: Vec<(usize, f64, Wave)> = waves
            .iter()
            .map(|w| {
                let (c, s) = slot(w.axis, w.other);
                (c, s, *w)
            })
            .collect();
        GridForm::from_fn(self.grid, 2, move |c, x| {
            placed
                .iter()
                .filter(|(pc, _, _)| *pc == c)
                .map(|(_, s, w)| s * w.amplitude * (TAU * w.freq * x[w.axis] + w.phase).sin())
                .sum()
        })
    }
}
