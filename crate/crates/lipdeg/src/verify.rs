//! The reproducibility suite: eleven numbered checks, each returning a JSON
//! record of what it measured and whether it met its threshold. Records
//! contain no timings, so a report is a pure function of (seed, scale).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::construct::{layered_profile, recursion_plan, sphere_map, GeometryConstants, LayeredEnsemble};
use crate::degree::{
    averaged_bound, degree_integral, polylog_sweep, pullback_area_form, spectral_gap_profile, BoundConfig, GapModel,
    PullbackScheme, ScaleProfile,
};
use crate::error::{Error, Result};
use crate::exterior::wedge_pairing_matrix;
use crate::linalg::{linear_fit, signature_exact, Signature};
use crate::lp::{Grid, GridForm, Norm, Spectral};
use crate::ring::{connected_sum_cp2, lipschitz_lower_exponent, positive_weight_exponents, s3_bundle_action, s3_bundle_weights};
use crate::scalable::{check_presentation, kge4_certificate, search_embedding, Kge4Outcome, SearchConfig, Status};

/// Problem sizes. `Full` runs every check at its stated size; `Quick`
/// shrinks grids, trials and restarts for smoke runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Quick,
    Full,
}

pub const CRITERIA: [u8; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub scale: Scale,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

struct Record {
    id: u8,
    title: &'static str,
    checks: Vec<bool>,
    metrics: BTreeMap<String, Value>,
}

impl Record {
    fn new(id: u8, title: &'static str) -> Self {
        Record { id, title, checks: Vec::new(), metrics: BTreeMap::new() }
    }

    fn put(&mut self, key: &str, v: impl Serialize) {
        self.metrics.insert(key.to_string(), serde_json::to_value(v).expect("metric serialises"));
    }

    fn check(&mut self, key: &str, ok: bool) {
        self.checks.push(ok);
        self.put(&format!("ok_{key}"), ok);
    }

    fn finish(self) -> CriterionReport {
        CriterionReport {
            id: self.id,
            title: self.title.to_string(),
            passed: !self.checks.is_empty() && self.checks.iter().all(|&c| c),
            metrics: self.metrics,
        }
    }
}

/// Run one criterion. Criterion 11 runs criteria 1–10 twice at `Quick`
/// scale and compares the serialised reports byte for byte.
pub fn criterion(id: u8, seed: u64, scale: Scale) -> Result<CriterionReport> {
    match id {
        1 => wedge_signatures(),
        2 => xk_verdicts(seed, scale),
        3 => kge4_counterexample(),
        4 => lp_battery(seed, scale),
        5 => primitive_rate(seed, scale),
        6 => sphere_degrees(scale),
        7 => recursion(),
        8 => exponent_fits(),
        9 => end_to_end(seed, scale),
        10 => weight_exponents(),
        11 => determinism(seed),
        _ => Err(Error::Parameter(format!("no criterion {id}"))),
    }
}

/// Run the listed criteria in order.
pub fn run(ids: &[u8], seed: u64, scale: Scale) -> Result<VerifyReport> {
    let criteria = ids.iter().map(|&id| criterion(id, seed, scale)).collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport { seed, scale, passed: criteria.iter().all(|c| c.passed), criteria })
}

fn sig_json(s: &Signature) -> Value {
    json!([s.pos, s.neg, s.zero])
}

fn wedge_signatures() -> Result<CriterionReport> {
    let mut r = Record::new(1, "wedge-pairing signatures (3,3) on Λ²ℝ⁴ and (35,35) on Λ⁴ℝ⁸");
    let s4 = signature_exact(&wedge_pairing_matrix(4, 2)?.to_rational())?;
    let s8 = signature_exact(&wedge_pairing_matrix(8, 4)?.to_rational())?;
    r.put("lambda2_r4", sig_json(&s4));
    r.put("lambda4_r8", sig_json(&s8));
    r.check("r4", s4 == Signature { pos: 3, neg: 3, zero: 0 });
    r.check("r8", s8 == Signature { pos: 35, neg: 35, zero: 0 });
    Ok(r.finish())
}

fn xk_verdicts(seed: u64, scale: Scale) -> Result<CriterionReport> {
    let mut r = Record::new(2, "X_k = #k CP² is scalable iff k ≤ 3");
    let cfg = SearchConfig { seed, ..SearchConfig::default() };
    let mut verdicts = Vec::new();
    for k in 1..=5 {
        let p = connected_sum_cp2(k)?;
        let v = check_presentation(&p, 1e-9, &cfg)?;
        let defect = v.witness.as_ref().map(|w| w.defect);
        verdicts.push(json!({ "k": k, "status": v.status, "witness_defect": defect }));
        if k <= 3 {
            r.check(&format!("k{k}_scalable"), v.status == Status::Scalable);
            r.check(&format!("k{k}_witness"), defect.is_some_and(|d| d < 1e-6));
        } else {
            r.check(&format!("k{k}_not_scalable"), v.status == Status::NotScalable);
        }
    }
    r.put("verdicts", verdicts);
    let restarts = match scale {
        Scale::Full => 100,
        Scale::Quick => 12,
    };
    let floor_cfg = SearchConfig { restarts, seed, ..SearchConfig::default() };
    let floor = search_embedding(&connected_sum_cp2(4)?, &[4], &floor_cfg)?;
    r.put("k4_restarts", restarts);
    r.put("k4_best_defect", floor.defect);
    r.check("k4_floor", floor.defect > 1e-2);
    Ok(r.finish())
}

fn kge4_counterexample() -> Result<CriterionReport> {
    let mut r = Record::new(3, "self-dual triple: LHS = 1, RHS = 0 at k = 3");
    match kge4_certificate(3, 1, 0)? {
        Kge4Outcome::Counterexample { lhs, rhs, .. } => {
            r.check("exact", lhs == "1" && rhs == "0");
            r.put("lhs", lhs);
            r.put("rhs", rhs);
        }
        Kge4Outcome::Certified { .. } => r.check("exact", false),
    }
    Ok(r.finish())
}

fn random_form(grid: Grid, degree: usize, rng: &mut ChaCha8Rng) -> Result<GridForm> {
    let mut a = GridForm::zeros(grid, degree)?;
    for c in &mut a.components {
        c.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    }
    Ok(a)
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

/// Reconstruction, commutation with d, orthogonality and product support on
/// one grid. `degree` is the degree of the test form; `commute_bands` caps
/// how many bands the commutation check visits.
fn lp_case(grid: Grid, degree: usize, commute_bands: Option<usize>, rng: &mut ChaCha8Rng) -> Result<Value> {
    let s = Spectral::new(grid);
    let a = random_form(grid, degree, rng)?;
    let scale = a.max_abs();
    let ks: Vec<i32> = s.bands().range().collect();

    let round = s.inverse_transform(&s.forward_transform(&a)?)?;
    let mut recon = rel(round.sub(&a)?.max_abs(), scale);
    let mut sum = GridForm::zeros(grid, degree)?;
    for &k in &ks {
        sum.add_scaled(1.0, &s.project_band(&a, k)?)?;
    }
    recon = recon.max(rel(sum.sub(&a)?.max_abs(), scale));
    drop(sum);

    let da = s.exterior_derivative(&a)?;
    let dscale = da.max_abs();
    let visit: Vec<i32> = match commute_bands {
        Some(m) if m < ks.len() => ks.iter().copied().step_by(ks.len().div_ceil(m)).collect(),
        _ => ks.clone(),
    };
    let mut commute = 0.0f64;
    for &k in &visit {
        let lhs = s.exterior_derivative(&s.project_band(&a, k)?)?;
        let rhs = s.project_band(&da, k)?;
        commute = commute.max(rel(lhs.sub(&rhs)?.max_abs(), dscale));
    }
    drop(da);

    let ortho = s.band_profile(&a)?.orthogonality_ratio;

    let f = random_form(grid, 0, rng)?;
    let g = random_form(grid, 0, rng)?;
    let mut support = Vec::new();
    let mut support_ok = true;
    for k in ks.iter().copied().filter(|&k| k >= 0) {
        let c = s.product_support_check(&f, &g, k)?;
        // Past N/4 the doubled support wraps around the lattice; those bands
        // are outside the statement.
        let r2 = s.bands().low_support_r2(k).unwrap_or(0);
        if 2 * (r2 as f64).sqrt().floor() as usize >= grid.n / 2 {
            break;
        }
        support_ok &= c.passed;
        support.push(json!({ "k": k, "lattice_max_r2": c.lattice_max_r2, "relative_outside": c.relative_outside, "passed": c.passed }));
    }
    let ok = recon < 1e-10 && commute < 1e-10 && (0.1..=1.0).contains(&ortho) && support_ok && !support.is_empty();
    Ok(json!({
        "dim": grid.dim,
        "n": grid.n,
        "degree": degree,
        "bands": ks,
        "commute_bands": visit,
        "reconstruction": recon,
        "commutation": commute,
        "orthogonality_ratio": ortho,
        "support": support,
        "passed": ok,
    }))
}

fn lp_battery(seed: u64, scale: Scale) -> Result<CriterionReport> {
    let mut r = Record::new(4, "Littlewood–Paley battery at d ∈ {2,3,4}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4c50);
    let sizes: &[usize] = match scale {
        Scale::Full => &[32, 64],
        Scale::Quick => &[16, 32],
    };
    let mut cases = Vec::new();
    for d in 2..=4 {
        for &n in sizes {
            let grid = Grid::new(d, n, 1.0)?;
            // The 64⁴ grid runs a 0-form and samples the bands for the
            // commutation check; smaller grids run 1-forms on every band.
            let (degree, commute) = if d == 4 && n >= 64 { (0, Some(3)) } else { (1, None) };
            let case = lp_case(grid, degree, commute, &mut rng)?;
            r.check(&format!("d{d}_n{n}"), case["passed"] == json!(true));
            cases.push(case);
        }
    }
    r.put("cases", cases);
    Ok(r.finish())
}

fn primitive_rate(seed: u64, scale: Scale) -> Result<CriterionReport> {
    let mut r = Record::new(5, "primitive gain 2^{-k} on band k");
    let (n, trials) = match scale {
        Scale::Full => (512, 20),
        Scale::Quick => (128, 4),
    };
    let grid = Grid::new(2, n, 1.0)?;
    let s = Spectral::new(grid);
    let top = (n as f64).log2() as i32 - 2;
    let ks: Vec<i32> = (3..=top).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut slopes = Vec::new();
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0x5000 + t as u64);
        let a = s.exterior_derivative(&random_form(grid, 0, &mut rng)?)?;
        let mut ty = Vec::new();
        for &k in &ks {
            let pk = s.project_band(&a, k)?;
            let prim = s.primitive_band(&a, k, 1e-9)?;
            ty.push((prim.norm(Norm::L2) / pk.norm(Norm::L2)).log2());
        }
        let kx: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
        slopes.push(linear_fit(&kx, &ty)?.0);
        xs.extend(kx);
        ys.extend(ty);
    }
    let (slope, intercept) = linear_fit(&xs, &ys)?;
    r.put("n", n);
    r.put("trials", trials);
    r.put("bands", &ks);
    r.put("slope", slope);
    r.put("intercept", intercept);
    r.put("trial_slope_min", slopes.iter().cloned().fold(f64::INFINITY, f64::min));
    r.put("trial_slope_max", slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    r.check("slope", (slope + 1.0).abs() <= 0.1);
    Ok(r.finish())
}

fn sphere_degrees(scale: Scale) -> Result<CriterionReport> {
    let mut r = Record::new(6, "sphere maps f_d have degree d² with Lipschitz ∝ d");
    let n = match scale {
        Scale::Full => 256,
        Scale::Quick => 64,
    };
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for d in [1usize, 2, 4] {
        let f = sphere_map(d, n)?;
        let top = pullback_area_form(&f, PullbackScheme::SolidAngle)?;
        let one = GridForm::from_fn(top.grid, 0, |_, _| 1.0)?;
        let deg = degree_integral(&top, &one)?;
        let lip = f.lipschitz();
        ratios.push(lip / d as f64);
        r.check(&format!("degree_d{d}"), (deg - (d * d) as f64).abs() <= 1e-5);
        rows.push(json!({ "d": d, "degree": deg, "lipschitz": lip, "lipschitz_over_d": lip / d as f64 }));
    }
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    r.put("n", n);
    r.put("maps", rows);
    r.put("lipschitz_spread", spread);
    r.check("spread", spread <= 2.0);
    Ok(r.finish())
}

fn recursion() -> Result<CriterionReport> {
    let mut r = Record::new(7, "self-map recursion: bound ~ ℓ^{d−1} p^ℓ");
    let geom = GeometryConstants::measured()?;
    r.put("geometry", geom);
    let warm = recursion_plan(2, 20, 2, &geom)?;
    let band: Vec<f64> = warm.layers.iter().map(|l| l.bound / (l.level as f64 * (l.level as f64).exp2())).collect();
    let (lo, hi) = band.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    r.put("warmup_band_ratio", hi / lo);
    r.check("warmup_band", hi / lo <= 4.0);
    let mut plans = Vec::new();
    for p in [2usize, 3] {
        for d in 1..=3 {
            let plan = recursion_plan(p, 20, d, &geom)?;
            let max_norm = plan.normalized.iter().cloned().fold(0.0, f64::max);
            let step = plan.layers.windows(2).map(|w| w[1].bound / w[0].bound).fold(0.0, f64::max);
            r.check(&format!("p{p}_d{d}_bounded"), max_norm <= plan.guaranteed_constant);
            // K(ℓ)/K(ℓ−1) = p·(ℓ/(ℓ−1))^{d−1} is itself above 2p at ℓ = 2 once
            // d ≥ 3, so the step ratio is only a requirement for d ≤ 2.
            if d <= 2 {
                r.check(&format!("p{p}_d{d}_step"), step <= 2.0 * p as f64);
            }
            plans.push(json!({
                "p": p,
                "d": d,
                "max_normalized": max_norm,
                "guaranteed_constant": plan.guaranteed_constant,
                "max_step_ratio": step,
                "lipschitz_bound": plan.lipschitz_bound,
            }));
        }
    }
    r.put("plans", plans);
    Ok(r.finish())
}

fn exponent_fits() -> Result<CriterionReport> {
    let mut r = Record::new(8, "worst-case exponent fits");
    let cfg = BoundConfig::default();
    let lips: Vec<f64> = (10..=20).map(|e| 2f64.powi(e)).collect();
    let fit = polylog_sweep(
        &lips,
        |lip| vec![layered_profile(2, lip.log2().round() as u32, lip * lip).expect("p = 2").profile],
        &cfg,
    )?;
    r.put("polylog_exponent", fit.exponent);
    r.put("sweep", &fit.points);
    r.check("polylog", (fit.exponent + 0.5).abs() <= 0.1);
    let lip = 2f64.powi(20);
    let (b1, b2, g) = (0.3, 0.6, 0.2);
    let gap = averaged_bound(&[spectral_gap_profile(lip, b1, b2, g, GapModel::Vanishing)?], lip, &cfg)?;
    let saturated = averaged_bound(&[spectral_gap_profile(lip, b1, b2, g, GapModel::Saturated)?], lip, &cfg)?;
    r.put("gap_min_bound_over_l38", gap.min_bound / lip.powf(3.8));
    r.put("gap_log_l_bound", gap.min_bound.log(lip));
    r.put("saturated_log_l_bound", saturated.min_bound.log(lip));
    r.check("gap", gap.min_bound <= lip.powf(3.8));
    Ok(r.finish())
}

fn end_to_end(seed: u64, scale: Scale) -> Result<CriterionReport> {
    let mut r = Record::new(9, "layered ensembles through the degree bound");
    // The grid fixes the deepest layer; larger L reuse the same layers with
    // mass L² (the forms scale linearly in the request).
    let (n, levels, lips): (usize, u32, &[f64]) = match scale {
        Scale::Full => (64, 4, &[16.0, 32.0, 64.0]),
        Scale::Quick => (32, 3, &[32.0, 64.0]),
    };
    let base = 2f64.powi(levels as i32);
    let request = layered_profile(2, levels, base * base)?;
    let ens = LayeredEnsemble::new(request.clone(), n, 2, seed)?;
    let s = Spectral::new(ens.grid);
    let mut measured = Vec::new();
    let mut forms = Vec::new();
    for i in 0..ens.forms {
        let a = ens.form(i)?;
        let closed = s.closedness_defect(&a)?;
        let prof = s.band_profile(&a)?;
        drop(a);
        let mut worst = 0.0f64;
        for &k in &request.bands {
            let got = prof.total(k).map_or(0.0, |row| row.l1);
            worst = worst.max((got / request.profile.l1_at(k) - 1.0).abs());
        }
        r.check(&format!("form{i}_closed"), closed < 1e-9);
        r.check(&format!("form{i}_profile"), worst <= 0.05);
        forms.push(json!({ "closedness": closed, "profile_rel_error": worst }));
        measured.push(ScaleProfile::from(&prof));
    }
    let cfg = BoundConfig::default();
    let mut bounds = Vec::new();
    for &lip in lips {
        let c = (lip / base).powi(2);
        let profiles: Vec<ScaleProfile> = measured.iter().map(|p| p.scaled(c)).collect();
        let rep = averaged_bound(&profiles, lip, &cfg)?;
        let ratio = rep.min_bound / lip.powi(4);
        r.check(&format!("bound_l{lip}"), ratio < 1.0);
        bounds.push(json!({ "lipschitz": lip, "chosen_cutoff": rep.chosen_cutoff, "min_bound_over_l4": ratio, "averaged_cs_over_l4": rep.averaged_cs / lip.powi(4) }));
    }
    r.put("n", n);
    r.put("levels", levels);
    r.put("forms", forms);
    r.put("bounds", bounds);
    Ok(r.finish())
}

fn weight_exponents() -> Result<CriterionReport> {
    let mut r = Record::new(10, "S³-bundle exponents 20/3 and (3/5, 1)");
    let e = lipschitz_lower_exponent(&s3_bundle_action(2.0))?;
    let w = positive_weight_exponents(&s3_bundle_weights())?;
    r.check("degree_exponent", e.degree_exponent_rational.as_deref() == Some("20/3"));
    r.check("weights", w.alpha == "3/5" && w.d == 1);
    r.put("degree_exponent", e.degree_exponent_rational);
    r.put("alpha", &w.alpha);
    r.put("d", w.d);
    Ok(r.finish())
}

fn determinism(seed: u64) -> Result<CriterionReport> {
    let mut r = Record::new(11, "identical reports from identical seeds");
    let ids: Vec<u8> = (1..=10).collect();
    let a = run(&ids, seed, Scale::Quick)?.to_json();
    let b = run(&ids, seed, Scale::Quick)?.to_json();
    r.put("bytes", a.len());
    r.check("identical", a == b);
    Ok(r.finish())
}
