//! `lipdeg`: scalability verdicts, Littlewood–Paley diagnostics, degree
//! bounds, recursion plans, synthetic ensembles and the verification suite.
//!
//! Every command prints one JSON document to stdout carrying the seed and
//! tolerance it ran with; `--out DIR` also writes it (plus any CSV tables)
//! to disk. Exit status is 0 on success, 1 on a domain error or failed
//! check, 2 on a usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use lipdeg::construct::{layered_profile, recursion_plan, sphere_map_plan, GeometryConstants, LayeredEnsemble};
use lipdeg::degree::{averaged_bound, polylog_sweep, spectral_gap_profile, BoundConfig, GapModel, ScaleProfile, TailPolicy};
use lipdeg::lp::{read_container, write_container, Grid, GridForm, Spectral};
use lipdeg::ring::{
    lipschitz_lower_exponent, positive_weight_exponents, preset, s3_bundle_action, s3_bundle_weights, CohomologyAction,
    RingPresentation, WeightData,
};
use lipdeg::scalable::{check_presentation, estimate_topclass_exponent, kge4_certificate, SearchConfig, Status};
use lipdeg::verify::{self, Scale};

#[derive(Parser, Debug)]
#[command(name = "lipdeg", version, about = "Degrees and Lipschitz constants of maps between manifolds")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Numerical tolerance (signature zero test, closedness, exactness).
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Directory for JSON/CSV/container outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for data-parallel kernels (0: all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether a cohomology ring embeds in a sum of exterior algebras.
    Scalable(ScalableArgs),
    /// Littlewood–Paley diagnostics of a grid form.
    Lp(LpArgs),
    /// Degree bound from band profiles at one Lipschitz scale.
    Bound(BoundArgs),
    /// Sweep the bound over L and fit the polylog exponent.
    Profile(ProfileArgs),
    /// Lipschitz recursion plan for the self-maps r_{p^ℓ}.
    Plan(PlanArgs),
    /// Write a synthetic layered ensemble as grid-form containers.
    Synth(SynthArgs),
    /// Lipschitz, weight and top-class exponents.
    Exponent(ExponentArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct PresetArgs {
    /// Preset ring: CPn, Xk, S2xS2, connected-sum, torus.
    #[arg(long)]
    preset: Option<String>,
    /// First preset parameter (n for CPn and torus, k for Xk, p for connected-sum).
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Second preset parameter (q for connected-sum).
    #[arg(long, default_value_t = 0)]
    q: usize,
    /// Presentation JSON file.
    #[arg(long, conflicts_with = "preset")]
    presentation: Option<PathBuf>,
}

impl PresetArgs {
    fn load(&self) -> Result<RingPresentation> {
        match (&self.preset, &self.presentation) {
            (Some(name), _) => Ok(preset(name, self.k, self.q)?),
            (None, Some(path)) => {
                let text = read_text(path)?;
                RingPresentation::from_json_str(&text).with_context(|| format!("parsing {}", path.display()))
            }
            (None, None) => bail!("give --preset or --presentation"),
        }
    }
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = 4000)]
    max_iters: usize,
    /// Defect below which an embedding counts as found.
    #[arg(long, default_value_t = 1e-6)]
    accept: f64,
}

impl SearchArgs {
    fn config(&self, seed: u64) -> SearchConfig {
        SearchConfig { restarts: self.restarts, max_iters: self.max_iters, accept: self.accept, seed, ..SearchConfig::default() }
    }
}

#[derive(Args, Debug)]
struct ScalableArgs {
    #[command(flatten)]
    ring: PresetArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Instead of a ring, test the k ≥ 4 inequality for this many 2-forms on ℝ⁴.
    #[arg(long, conflicts_with_all = ["preset", "presentation"])]
    kge4: Option<usize>,
    /// Samples for the k ≥ 4 constant estimate.
    #[arg(long, default_value_t = 20000)]
    samples: usize,
}

#[derive(Args, Debug)]
struct LpArgs {
    /// Grid-form container to analyse; otherwise a random form is drawn.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    period: f64,
    #[arg(long, default_value_t = 1)]
    degree: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Tail {
    Truncate,
    Extend,
}

#[derive(Args, Debug)]
struct WindowArgs {
    #[arg(long, default_value_t = 0.1)]
    window_lo: f64,
    #[arg(long, default_value_t = 0.9)]
    window_hi: f64,
    /// Cauchy–Schwarz bands run up to 2^k ≤ L^band_top.
    #[arg(long, default_value_t = 1.0)]
    band_top: f64,
    #[arg(long, value_enum, default_value_t = Tail::Extend)]
    tail: Tail,
}

impl WindowArgs {
    fn config(&self) -> BoundConfig {
        BoundConfig {
            window: (self.window_lo, self.window_hi),
            band_top: self.band_top,
            tail: match self.tail {
                Tail::Truncate => TailPolicy::Truncate,
                Tail::Extend => TailPolicy::Extend,
            },
        }
    }
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Grid-form containers whose band profiles enter the bound.
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Use the layered profile p:levels instead of containers.
    #[arg(long, value_parser = parse_pair, conflicts_with = "input")]
    layered: Option<(usize, u32)>,
    #[arg(long)]
    lipschitz: f64,
    /// Multiply every band mass by this factor before bounding.
    #[arg(long, default_value_t = 1.0)]
    mass_scale: f64,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    Layered,
    GapVanishing,
    GapSaturated,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long, value_enum, default_value_t = Model::Layered)]
    model: Model,
    /// Sweep L = 2^from ..= 2^to.
    #[arg(long, default_value_t = 10)]
    from: i32,
    #[arg(long, default_value_t = 20)]
    to: i32,
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 0.3)]
    beta1: f64,
    #[arg(long, default_value_t = 0.6)]
    beta2: f64,
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 10)]
    levels: u32,
    /// Number of cohomology degrees d.
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Subcube side D = d_scale / p.
    #[arg(long)]
    d_scale: Option<f64>,
    /// Also plan the sphere map f_d of degree d^n on S^n for this n.
    #[arg(long)]
    sphere_n: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 3)]
    levels: u32,
    /// Layer mass L²; defaults to (p^levels)².
    #[arg(long)]
    l_squared: Option<f64>,
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    forms: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExponentKind {
    Lipschitz,
    Weights,
    Topclass,
}

#[derive(Args, Debug)]
struct ExponentArgs {
    #[arg(long, value_enum, default_value_t = ExponentKind::Lipschitz)]
    kind: ExponentKind,
    /// Cohomology action JSON (lipschitz); defaults to the S³-bundle over S²×S².
    #[arg(long)]
    action: Option<PathBuf>,
    /// Scaling parameter of the default action.
    #[arg(long, default_value_t = 2.0)]
    t: f64,
    /// Weight data JSON (weights); defaults to the S³-bundle weights.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[command(flatten)]
    ring: PresetArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Ambient dimension for the top-class fit.
    #[arg(long, default_value_t = 4)]
    ambient: usize,
    /// Defect levels ε for the top-class fit.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.03,0.01")]
    eps: Vec<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScaleArg {
    Quick,
    Full,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = ScaleArg::Full)]
    scale: ScaleArg,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, u32), String> {
    let (a, b) = s.split_once(':').ok_or("expected p:levels")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_json(path: &Path) -> Result<Value> {
    let text = read_text(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_form(path: &Path) -> Result<GridForm> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    read_container(&mut bytes.as_slice()).with_context(|| format!("parsing {}", path.display()))
}

/// Collected outputs of one command.
struct Output {
    name: &'static str,
    result: Value,
    passed: bool,
    tables: Vec<(String, String)>,
    blobs: Vec<(String, Vec<u8>)>,
}

impl Output {
    fn new(name: &'static str, result: impl Serialize) -> Result<Self> {
        Ok(Output { name, result: serde_json::to_value(result)?, passed: true, tables: Vec::new(), blobs: Vec::new() })
    }
}

fn csv_table<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn scalable(a: &ScalableArgs, cli: &Cli) -> Result<Output> {
    if let Some(k) = a.kge4 {
        return Output::new("scalable", kge4_certificate(k, a.samples, cli.seed)?);
    }
    let ring = a.ring.load()?;
    let cfg = a.search.config(cli.seed);
    let v = check_presentation(&ring, cli.tol, &cfg)?;
    let trace = v.witness.as_ref().map(|w| w.trace.clone());
    let mut out = Output::new(
        "scalable",
        json!({ "verdict": v, "restarts": cfg.restarts, "defect_trace": trace }),
    )?;
    out.passed = v.status != Status::EvidenceOnly || v.witness.is_some();
    Ok(out)
}

fn lp(a: &LpArgs, cli: &Cli) -> Result<Output> {
    let form = match &a.input {
        Some(p) => load_form(p)?,
        None => {
            let grid = Grid::new(a.dim, a.n, a.period)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let mut f = GridForm::zeros(grid, a.degree)?;
            for c in &mut f.components {
                c.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            }
            f
        }
    };
    let s = Spectral::new(form.grid);
    let profile = s.band_profile(&form)?;
    let closedness = s.closedness_defect(&form)?;
    let kernels = s.kernel_l1_diagnostics();
    let mut recon = form.clone();
    for k in s.bands().range() {
        recon.add_scaled(-1.0, &s.project_band(&form, k)?)?;
    }
    let scale = form.max_abs();
    let reconstruction = if scale == 0.0 { 0.0 } else { recon.max_abs() / scale };
    let mut out = Output::new(
        "lp",
        json!({
            "grid": form.grid,
            "degree": form.degree,
            "bands": [s.bands().k_min, s.bands().k_max],
            "reconstruction_error": reconstruction,
            "closedness_defect": closedness,
            "orthogonality_ratio": profile.orthogonality_ratio,
            "dominant_band": profile.dominant(),
            "kernels": kernels,
            "profile": profile.rows,
        }),
    )?;
    out.tables.push(("profile.csv".into(), profile.to_csv()));
    Ok(out)
}

fn bound(a: &BoundArgs) -> Result<Output> {
    let profiles: Vec<ScaleProfile> = match a.layered {
        Some((p, levels)) => vec![layered_profile(p, levels, a.lipschitz * a.lipschitz)?.profile],
        None => {
            if a.input.is_empty() {
                bail!("give --input or --layered");
            }
            a.input
                .iter()
                .map(|p| {
                    let f = load_form(p)?;
                    let prof = Spectral::new(f.grid).band_profile(&f)?;
                    Ok(ScaleProfile::from(&prof))
                })
                .collect::<Result<_>>()?
        }
    };
    let profiles: Vec<ScaleProfile> = profiles.iter().map(|p| p.scaled(a.mass_scale)).collect();
    let report = averaged_bound(&profiles, a.lipschitz, &a.window.config())?;
    let rows: Vec<_> = report.cutoffs.iter().map(|t| (t.cutoff, t.high, t.low, t.cross, t.total)).collect();
    let mut out = Output::new("bound", &report)?;
    out.tables.push(("cutoffs.csv".into(), csv_table(&["cutoff", "high", "low", "cross", "total"], rows)?));
    Ok(out)
}

fn profile(a: &ProfileArgs) -> Result<Output> {
    if a.from > a.to || a.from < 1 {
        bail!("need 1 ≤ --from ≤ --to");
    }
    let lips: Vec<f64> = (a.from..=a.to).map(|e| 2f64.powi(e)).collect();
    let (p, b1, b2, g) = (a.p, a.beta1, a.beta2, a.gamma);
    let model = a.model;
    // Build every profile up front so bad parameters surface as errors.
    let table: Vec<ScaleProfile> = lips
        .iter()
        .map(|&lip| -> Result<ScaleProfile> {
            Ok(match model {
                Model::Layered => layered_profile(p, (lip.log2() / (p as f64).log2()).round() as u32, lip * lip)?.profile,
                Model::GapVanishing => spectral_gap_profile(lip, b1, b2, g, GapModel::Vanishing)?,
                Model::GapSaturated => spectral_gap_profile(lip, b1, b2, g, GapModel::Saturated)?,
            })
        })
        .collect::<Result<_>>()?;
    let fit = polylog_sweep(
        &lips,
        |lip| {
            let i = lips.iter().position(|&l| l == lip).expect("swept value");
            vec![table[i].clone()]
        },
        &a.window.config(),
    )?;
    let rows: Vec<_> = fit.points.iter().map(|pt| (pt.lipschitz, pt.min_bound, pt.averaged_cs, pt.polylog, fit.exponent)).collect();
    let mut out = Output::new("profile", &fit)?;
    out.tables.push((
        "sweep.csv".into(),
        csv_table(&["lipschitz", "min_bound", "averaged_cs", "polylog", "fitted_exponent"], rows)?,
    ));
    Ok(out)
}

fn plan(a: &PlanArgs) -> Result<Output> {
    let mut geom = GeometryConstants::measured()?;
    if let Some(s) = a.d_scale {
        geom.d_scale = s;
    }
    let plan = recursion_plan(a.p, a.levels, a.d, &geom)?;
    let sphere = a.sphere_n.map(|n| sphere_map_plan(n, a.p, &geom));
    let rows: Vec<_> = plan.layers.iter().zip(&plan.normalized).map(|(l, v)| (l.level, l.bound, *v)).collect();
    let mut out = Output::new("plan", json!({ "recursion": plan, "sphere_map": sphere }))?;
    out.tables.push(("plan.csv".into(), csv_table(&["level", "bound", "normalized"], rows)?));
    Ok(out)
}

fn synth(a: &SynthArgs, cli: &Cli) -> Result<Output> {
    if cli.out.is_none() {
        bail!("synth needs --out");
    }
    let top = (a.p as f64).powi(a.levels as i32);
    let request = layered_profile(a.p, a.levels, a.l_squared.unwrap_or(top * top))?;
    let ens = LayeredEnsemble::new(request, a.n, a.forms, cli.seed)?;
    let s = Spectral::new(ens.grid);
    let mut out = Output::new("synth", &ens)?;
    let mut files = Vec::new();
    for i in 0..ens.forms {
        let f = ens.form(i)?;
        let name = format!("form_{i}.gfrm");
        files.push(json!({ "file": name, "closedness": s.closedness_defect(&f)? }));
        let mut bytes = Vec::new();
        write_container(&mut bytes, &f)?;
        out.blobs.push((name, bytes));
    }
    out.result = json!({ "ensemble": out.result, "files": files });
    Ok(out)
}

fn exponent(a: &ExponentArgs, cli: &Cli) -> Result<Output> {
    match a.kind {
        ExponentKind::Lipschitz => {
            let action = match &a.action {
                Some(p) => CohomologyAction::from_json(&read_json(p)?)?,
                None => s3_bundle_action(a.t),
            };
            Output::new("exponent", lipschitz_lower_exponent(&action)?)
        }
        ExponentKind::Weights => {
            let w: WeightData = match &a.weights {
                Some(p) => serde_json::from_value(read_json(p)?).with_context(|| format!("parsing {}", p.display()))?,
                None => s3_bundle_weights(),
            };
            Output::new("exponent", positive_weight_exponents(&w)?)
        }
        ExponentKind::Topclass => {
            let ring = a.ring.load()?;
            Output::new("exponent", estimate_topclass_exponent(&ring, a.ambient, &a.eps, &a.search.config(cli.seed))?)
        }
    }
}

fn verify_cmd(a: &VerifyArgs, cli: &Cli) -> Result<Output> {
    let scale = match a.scale {
        ScaleArg::Quick => Scale::Quick,
        ScaleArg::Full => Scale::Full,
    };
    let ids: Vec<u8> = if a.only.is_empty() { verify::CRITERIA.to_vec() } else { a.only.clone() };
    let report = verify::run(&ids, cli.seed, scale)?;
    for c in &report.criteria {
        eprintln!("criterion {:>2}: {} {}", c.id, if c.passed { "PASS" } else { "FAIL" }, c.title);
    }
    let mut out = Output::new("verify", &report)?;
    out.passed = report.passed;
    Ok(out)
}

fn dispatch(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Scalable(a) => scalable(a, cli),
        Command::Lp(a) => lp(a, cli),
        Command::Bound(a) => bound(a),
        Command::Profile(a) => profile(a),
        Command::Plan(a) => plan(a),
        Command::Synth(a) => synth(a, cli),
        Command::Exponent(a) => exponent(a, cli),
        Command::Verify(a) => verify_cmd(a, cli),
    }
}

fn emit(cli: &Cli, out: &Output) -> Result<()> {
    let doc = json!({
        "command": out.name,
        "seed": cli.seed,
        "tol": cli.tol,
        "passed": out.passed,
        "result": out.result,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    print!("{text}");
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join(format!("{}.json", out.name)), &text)?;
        for (name, body) in &out.tables {
            // Seed and tolerance ride along as a comment line above the header.
            fs::write(dir.join(name), format!("# seed={} tol={}\n{body}", cli.seed, cli.tol))?;
        }
        for (name, bytes) in &out.blobs {
            fs::write(dir.join(name), bytes)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = lipdeg::exec::with_threads(cli.threads, || dispatch(&cli)).and_then(|out| {
        emit(&cli, &out)?;
        Ok(out.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
