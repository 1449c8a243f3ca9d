//! Experiment driver behind the `corrdyn` binary: config ingestion, command
//! orchestration and run manifests.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::BiPoly;
use crate::correspondence::{
    critical_orbit_report, critical_values, delta_bound, ComponentRecord, CorrespondenceRecord, CriticalData,
    CriticalOrbitReport, HypothesisStatus,
};
use crate::correspondence::Correspondence;
use crate::dynamics::{backward_cloud, operator_norm_estimate, Direction, NormEstimate};
use crate::measures::{
    dual_lip_distance, invariance_residual, linear_fit, mixing_correlation, rate_fit, render_density, LinearFit,
    PointCloudMeasure, RateOptions, RateReport, TestDictionary,
};
use crate::periodic::{periodic_points, repelling_summary, PeriodicClass, RepellingSummary};
use crate::{Chart, Error, NumericPolicy, SpherePoint};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "CORRDYN_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Analyze,
    Equidistribute,
    Spectra,
    Mixing,
    Periodic,
    Render,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Equidistribute => "equidistribute",
            Command::Spectra => "spectra",
            Command::Mixing => "mixing",
            Command::Periodic => "periodic",
            Command::Render => "render",
        }
    }
}

/// The graph polynomial, given by exactly one of: dense `coeffs` with
/// `bidegree = [deg_x, deg_y]` (row-major by x-power), sparse `terms`
/// `[i, j, re, im]` for `c x^i y^j`, or a `factors` list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bidegree: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<(usize, usize, f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<ComponentRecord>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Infinity {
    #[serde(rename = "inf")]
    Inf,
}

/// A point given as `[re, im]` or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointInput {
    Affine([f64; 2]),
    Infinity(Infinity),
}

impl PointInput {
    pub fn point(&self) -> SpherePoint {
        match self {
            PointInput::Affine([re, im]) => SpherePoint::from_re_im(*re, *im),
            PointInput::Infinity(_) => SpherePoint::INFINITY,
        }
    }
}

/// Which canonical measure to approximate: `plus` pulls back, `minus`
/// pushes forward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixingConfig {
    /// Dictionary indices `(φ, ψ)`.
    pub pairs: Vec<[usize; 2]>,
    pub ns: Vec<usize>,
    pub measure_depth: usize,
    pub measure_atoms: usize,
    pub per_atom_budget: usize,
}

impl Default for MixingConfig {
    fn default() -> Self {
        Self { pairs: vec![[1, 4]], ns: (2..=8).collect(), measure_depth: 14, measure_atoms: 2000, per_atom_budget: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeriodicConfig {
    pub max_period: usize,
    /// Depth of the reference cloud for the repelling-point comparison.
    pub reference_depth: Option<usize>,
}

impl Default for PeriodicConfig {
    fn default() -> Self {
        Self { max_period: 1, reference_depth: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    pub n: usize,
    pub resolution: usize,
    /// Gaussian width in pixels.
    pub bandwidth: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { n: 12, resolution: 256, bandwidth: 1.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub correspondence: CorrespondenceInput,
    #[serde(default)]
    pub policy: NumericPolicy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::grid_resolution")]
    pub grid_resolution: usize,
    #[serde(default = "defaults::norm_iters")]
    pub norm_iters: usize,
    /// Forward steps explored by the critical orbit check.
    #[serde(default = "defaults::horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub sign: Sign,
    #[serde(default = "defaults::starts")]
    pub starts: Vec<PointInput>,
    #[serde(default = "defaults::n_min")]
    pub n_min: usize,
    #[serde(default = "defaults::n_max")]
    pub n_max: usize,
    /// Atom budget per cloud.
    #[serde(default = "defaults::budget")]
    pub budget: usize,
    #[serde(default)]
    pub mixing: MixingConfig,
    #[serde(default)]
    pub periodic: PeriodicConfig,
    #[serde(default)]
    pub render: RenderConfig,
}

mod defaults {
    use super::PointInput;
    pub fn grid_resolution() -> usize {
        256
    }
    pub fn norm_iters() -> usize {
        30
    }
    pub fn horizon() -> usize {
        10
    }
    pub fn starts() -> Vec<PointInput> {
        vec![PointInput::Affine([0.5, 0.0])]
    }
    pub fn n_min() -> usize {
        2
    }
    pub fn n_max() -> usize {
        10
    }
    pub fn budget() -> usize {
        200_000
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io { .. } => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {msg}"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

impl Config {
    /// Parses a config, or the config embedded in a run manifest.
    pub fn parse(text: &str) -> CliResult<Self> {
        let located = |e: serde_json::Error| {
            CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(located)?;
        let cfg: Config = if value.get("manifest_hash").is_some() {
            let m: RunManifest = serde_json::from_str(text).map_err(located)?;
            m.config
        } else {
            serde_json::from_str(text).map_err(located)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.grid_resolution < 8 {
            return Err(config_err("grid_resolution", "must be at least 8"));
        }
        if self.norm_iters < 10 {
            return Err(config_err("norm_iters", "must be at least 10"));
        }
        if self.starts.is_empty() {
            return Err(config_err("starts", "needs at least one point"));
        }
        if self.n_min == 0 || self.n_max < self.n_min + 2 {
            return Err(config_err("n_max", "need 1 ≤ n_min and n_max ≥ n_min + 2"));
        }
        if self.budget == 0 {
            return Err(config_err("budget", "must be positive"));
        }
        if self.mixing.ns.is_empty() || self.mixing.ns.contains(&0) {
            return Err(config_err("mixing.ns", "needs positive depths"));
        }
        if self.periodic.max_period == 0 {
            return Err(config_err("periodic.max_period", "must be positive"));
        }
        if self.render.resolution == 0 || !(self.render.bandwidth >= 0.0) {
            return Err(config_err("render", "resolution must be positive and bandwidth nonnegative"));
        }
        Ok(())
    }

    pub fn correspondence(&self) -> CliResult<Correspondence> {
        let c = &self.correspondence;
        let given = [c.coeffs.is_some(), c.terms.is_some(), c.factors.is_some()];
        if given.iter().filter(|g| **g).count() != 1 {
            return Err(config_err("correspondence", "give exactly one of `coeffs`, `terms`, `factors`"));
        }
        let bad = |e: Error| config_err("correspondence", e);
        let policy = &self.policy;
        if let Some(coeffs) = &c.coeffs {
            let [dx, dy] = c.bidegree.ok_or_else(|| config_err("correspondence.bidegree", "required with `coeffs`"))?;
            let p = BiPoly::new(dx, dy, coeffs.iter().map(|z| Complex64::new(z[0], z[1])).collect()).map_err(bad)?;
            Correspondence::from_bipoly(&p, policy).map_err(bad)
        } else if let Some(terms) = &c.terms {
            let t: Vec<_> = terms.iter().map(|&(i, j, re, im)| (i, j, Complex64::new(re, im))).collect();
            Correspondence::from_bipoly(&BiPoly::from_terms(&t), policy).map_err(bad)
        } else {
            let factors = c.factors.as_ref().expect("checked above");
            let parts = factors
                .iter()
                .map(|r| {
                    let p = BiPoly::new(r.bidegree[0], r.bidegree[1], r.coeffs.iter().map(|z| Complex64::new(z[0], z[1])).collect())?;
                    Ok((p, r.multiplicity))
                })
                .collect::<crate::Result<Vec<_>>>()
                .map_err(bad)?;
            Correspondence::from_components(&parts, policy).map_err(bad)
        }
    }
}

/// Provenance of one run. Everything but the timing fields enters the hash
/// that names the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: Config,
    pub correspondence: CorrespondenceRecord,
    pub correspondence_hash: String,
    pub serial: bool,
    pub manifest_hash: String,
    pub threads: usize,
    pub hypothesis: Option<HypothesisStatus>,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
}

#[derive(Serialize)]
struct HashedPart<'a> {
    tool: &'a str,
    version: &'a str,
    command: Command,
    config: &'a Config,
    correspondence_hash: &'a str,
    serial: bool,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub command: Command,
    pub out: PathBuf,
    pub serial: bool,
    pub seed: Option<u64>,
    pub strict: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    /// Lines for the terminal.
    pub summary: Vec<String>,
}

impl RunOutcome {
    /// 4 under `--strict` when the hypothesis could not be confirmed.
    pub fn exit_code(&self, strict: bool) -> i32 {
        match self.manifest.hypothesis {
            Some(h) if strict && h != HypothesisStatus::Holds => 4,
            _ => 0,
        }
    }
}

fn thread_count(serial: bool) -> CliResult<usize> {
    if serial {
        return Ok(1);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Runs `opts.command` on `config` and persists everything under
/// `opts.out/<manifest hash>`.
pub fn run(mut config: Config, opts: &RunOptions) -> CliResult<RunOutcome> {
    if let Some(s) = opts.seed {
        config.seed = s;
    }
    config.validate()?;
    let f = config.correspondence()?;
    let threads = thread_count(opts.serial)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;

    let tool = env!("CARGO_PKG_NAME");
    let version = env!("CARGO_PKG_VERSION");
    let correspondence_hash = f.hash();
    let hashed = HashedPart {
        tool,
        version,
        command: opts.command,
        config: &config,
        correspondence_hash: &correspondence_hash,
        serial: opts.serial,
    };
    let manifest_hash = hex::encode(Sha256::digest(serde_json::to_vec(&hashed).expect("serializes")));
    let dir = opts.out.join(&manifest_hash[..16]);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    log::info!("{} on {} into {}", opts.command.name(), correspondence_hash, dir.display());
    let mut out = Outputs { dir: dir.clone(), files: Vec::new(), summary: Vec::new() };
    let ctx = Context { f: &f, config: &config, hash: &manifest_hash };
    let hypothesis = pool.install(|| match opts.command {
        Command::Analyze => analyze(&ctx, &mut out),
        Command::Equidistribute => equidistribute(&ctx, &mut out),
        Command::Spectra => spectra(&ctx, &mut out).map(|_| None),
        Command::Mixing => mixing(&ctx, &mut out),
        Command::Periodic => periodic(&ctx, &mut out).map(|_| None),
        Command::Render => render(&ctx, &mut out).map(|_| None),
    })?;

    let manifest = RunManifest {
        tool: tool.into(),
        version: version.into(),
        command: opts.command,
        config: config.clone(),
        correspondence: f.to_record(),
        correspondence_hash,
        serial: opts.serial,
        manifest_hash,
        threads,
        hypothesis,
        outputs: out.files.clone(),
        started_unix,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes")).map_err(io_err(&path))?;
    Ok(RunOutcome { dir, manifest, summary: out.summary })
}

struct Context<'a> {
    f: &'a Correspondence,
    config: &'a Config,
    hash: &'a str,
}

impl Context<'_> {
    fn policy(&self) -> &NumericPolicy {
        &self.config.policy
    }

    /// The correspondence whose backward orbits approximate the chosen measure.
    fn oriented(&self) -> Correspondence {
        match self.config.sign {
            Sign::Plus => self.f.clone(),
            Sign::Minus => self.f.adjoint(),
        }
    }

    fn hypothesis(&self, g: &Correspondence) -> CliResult<(CriticalData, CriticalOrbitReport)> {
        let data = critical_values(g, self.policy())?;
        let report = critical_orbit_report(g, &data, self.config.horizon, self.policy())?;
        Ok((data, report))
    }
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    summary: Vec<String>,
}

impl Outputs {
    fn json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(value).expect("report serializes")).map_err(io_err(&path))?;
        self.files.push(name.into());
        Ok(())
    }

    fn cloud(&mut self, name: &str, mu: &PointCloudMeasure) -> CliResult<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        mu.write_to(BufWriter::new(file))?;
        self.files.push(name.into());
        Ok(())
    }

    fn raster(&mut self, name: &str, mu: &PointCloudMeasure, cfg: &RenderConfig) -> CliResult<()> {
        let image = render_density(mu, cfg.resolution, cfg.bandwidth)?;
        let path = self.dir.join(name);
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        image.write_pgm(BufWriter::new(file))?;
        self.files.push(name.into());
        Ok(())
    }

    fn say(&mut self, line: String) {
        self.summary.push(line);
    }
}

fn flag_suffix(h: HypothesisStatus) -> &'static str {
    match h {
        HypothesisStatus::Holds => "",
        HypothesisStatus::Unverified => "_unverified",
        HypothesisStatus::Violated => "_violated",
    }
}

fn verdict(e: &NormEstimate) -> &'static str {
    if e.weak_modularity_suspected {
        "weak-modularity suspected"
    } else if e.norm_estimate < 0.99 {
        "contracting"
    } else {
        "inconclusive"
    }
}

fn point_list(values: &[crate::correspondence::CriticalValue]) -> String {
    values.iter().map(|v| v.value.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    operation: &'static str,
    inputs_hash: &'a str,
    d1: usize,
    d2: usize,
    critical: &'a CriticalData,
    orbits: &'a CriticalOrbitReport,
    hypothesis: HypothesisStatus,
    delta_bound: u64,
    norm: &'a NormEstimate,
    verdict: &'static str,
}

fn analyze(ctx: &Context, out: &mut Outputs) -> CliResult<Option<HypothesisStatus>> {
    let f = ctx.f;
    let (data, orbits) = ctx.hypothesis(f)?;
    let hypothesis = orbits.hypothesis();
    let cfg = ctx.config;
    let norm = operator_norm_estimate(f, Direction::Pullback, cfg.norm_iters, cfg.grid_resolution, cfg.seed, ctx.policy())?;
    let report = AnalyzeReport {
        operation: "analyze",
        inputs_hash: ctx.hash,
        d1: f.d1(),
        d2: f.d2(),
        critical: &data,
        orbits: &orbits,
        hypothesis,
        delta_bound: delta_bound(f, &data),
        norm: &norm,
        verdict: verdict(&norm),
    };
    out.json("report.json", &report)?;
    out.say(format!("d1 = {}, d2 = {}", f.d1(), f.d2()));
    out.say(format!("B1 = {{{}}}", point_list(&data.b1)));
    out.say(format!("B2 = {{{}}}", point_list(&data.b2)));
    out.say(format!("critical orbits: {hypothesis:?} (horizon {}), delta bound {}", cfg.horizon, report.delta_bound));
    out.say(format!("‖d⁻¹f*‖ ≈ {:.4} ({})", norm.norm_estimate, report.verdict));
    Ok(Some(hypothesis))
}

#[derive(Serialize)]
struct EquidistributeReport<'a> {
    operation: &'static str,
    inputs_hash: &'a str,
    sign: Sign,
    hypothesis: HypothesisStatus,
    ns: Vec<usize>,
    /// `invariance_residual` of the first start's cloud per n.
    invariance: Vec<f64>,
    /// Largest pairwise distance between the starts' clouds per n.
    uniformity: Option<Vec<f64>>,
    monte_carlo: Vec<bool>,
    rate: &'a RateReport,
}

fn equidistribute(ctx: &Context, out: &mut Outputs) -> CliResult<Option<HypothesisStatus>> {
    let cfg = ctx.config;
    let g = ctx.oriented();
    let (_, orbits) = ctx.hypothesis(&g)?;
    let hypothesis = orbits.hypothesis();
    let suffix = flag_suffix(hypothesis);
    let dict = TestDictionary::standard();
    let starts: Vec<SpherePoint> = cfg.starts.iter().map(PointInput::point).collect();
    let ns: Vec<usize> = (cfg.n_min..=cfg.n_max).collect();
    let (mut invariance, mut uniformity, mut monte_carlo) = (Vec::new(), Vec::new(), Vec::new());
    let mut last = None;
    for &n in &ns {
        let clouds = starts
            .iter()
            .enumerate()
            .map(|(i, a)| backward_cloud(&g, *a, n, cfg.budget, cfg.seed.wrapping_add(i as u64), ctx.policy()))
            .collect::<crate::Result<Vec<_>>>()?;
        for (i, c) in clouds.iter().enumerate() {
            out.cloud(&format!("clouds/start{i}_n{n:02}{suffix}.cloud"), c)?;
        }
        invariance.push(invariance_residual(&g, &clouds[0], &dict, ctx.policy())?);
        monte_carlo.push(clouds.iter().any(|c| c.meta.monte_carlo));
        let mut worst: f64 = 0.0;
        for i in 0..clouds.len() {
            for j in i + 1..clouds.len() {
                worst = worst.max(dual_lip_distance(&clouds[i], &clouds[j], &dict)?);
            }
        }
        uniformity.push(worst);
        last = clouds.into_iter().next();
    }
    let opts = RateOptions { n_min: cfg.n_min, n_max: cfg.n_max, budget: cfg.budget, seed: cfg.seed, horizon: cfg.horizon };
    let rate = rate_fit(&g, starts[0], &opts, &dict, ctx.policy())?;
    if let Some(mu) = &last {
        out.raster(&format!("density{suffix}.pgm"), mu, &cfg.render)?;
    }
    let report = EquidistributeReport {
        operation: "equidistribute",
        inputs_hash: ctx.hash,
        sign: cfg.sign,
        hypothesis,
        ns: ns.clone(),
        invariance,
        uniformity: (starts.len() > 1).then_some(uniformity),
        monte_carlo,
        rate: &rate,
    };
    out.json(&format!("report{suffix}.json"), &report)?;
    out.say(format!("hypothesis {hypothesis:?}"));
    out.say(format!(
        "rate λ = {:.4} [{:.4}, {:.4}], fit residual {:.3}, reliable {}",
        rate.lambda, rate.lambda_band[0], rate.lambda_band[1], rate.fit.residual, rate.reliable
    ));
    if let Some(mu) = &last {
        let peak = mu.atoms.iter().fold((SpherePoint::ZERO, 0.0), |b, a| if a.weight > b.1 { (a.point, a.weight) } else { b });
        out.say(format!("n = {}: {} atoms, heaviest at {} ({:.3})", cfg.n_max, mu.len(), peak.0, peak.1));
    }
    Ok(Some(hypothesis))
}

#[derive(Serialize)]
struct SpectraReport<'a> {
    operation: &'static str,
    inputs_hash: &'a str,
    resolution: usize,
    pullback: &'a NormEstimate,
    pullback_verdict: &'static str,
    pushforward: &'a NormEstimate,
    pushforward_verdict: &'static str,
}

fn spectra(ctx: &Context, out: &mut Outputs) -> CliResult<()> {
    let cfg = ctx.config;
    let est = |d| operator_norm_estimate(ctx.f, d, cfg.norm_iters, cfg.grid_resolution, cfg.seed, ctx.policy());
    let (pull, push) = (est(Direction::Pullback)?, est(Direction::Pushforward)?);
    out.json(
        "spectra.json",
        &SpectraReport {
            operation: "spectra",
            inputs_hash: ctx.hash,
            resolution: cfg.grid_resolution,
            pullback: &pull,
            pullback_verdict: verdict(&pull),
            pushforward: &push,
            pushforward_verdict: verdict(&push),
        },
    )?;
    out.say(format!("‖d⁻¹f*‖ ≈ {:.4} ({})", pull.norm_estimate, verdict(&pull)));
    out.say(format!("‖d⁻¹f_*‖ ≈ {:.4} ({})", push.norm_estimate, verdict(&push)));
    Ok(())
}

#[derive(Serialize)]
struct MixingEntry {
    phi: String,
    psi: String,
    ns: Vec<usize>,
    values: Vec<f64>,
    /// Fit of `log |I_n|`; absent when some `I_n` vanishes.
    fit: Option<LinearFit>,
    monte_carlo: bool,
}

#[derive(Serialize)]
struct MixingReport<'a> {
    operation: &'static str,
    inputs_hash: &'a str,
    hypothesis: HypothesisStatus,
    measure_atoms: usize,
    series: Vec<MixingEntry>,
}

fn mixing(ctx: &Context, out: &mut Outputs) -> CliResult<Option<HypothesisStatus>> {
    let cfg = ctx.config;
    let m = &cfg.mixing;
    let g = ctx.oriented();
    let (_, orbits) = ctx.hypothesis(&g)?;
    let hypothesis = orbits.hypothesis();
    let dict = TestDictionary::standard();
    let mu = backward_cloud(&g, cfg.starts[0].point(), m.measure_depth, m.measure_atoms, cfg.seed, ctx.policy())?;
    let mut series = Vec::new();
    for (k, [i, j]) in m.pairs.iter().enumerate() {
        let get = |idx: usize| {
            dict.get(idx).ok_or_else(|| config_err("mixing.pairs", format!("index {idx} outside 0..{}", dict.len())))
        };
        let (phi, psi) = (get(*i)?, get(*j)?);
        let seed = cfg.seed.wrapping_add(1 + k as u64);
        let s = mixing_correlation(&g, &mu, phi, psi, &m.ns, m.per_atom_budget, seed, ctx.policy())?;
        let fit = if s.values.iter().all(|v| *v != 0.0) && s.ns.len() >= 2 {
            let xs: Vec<f64> = s.ns.iter().map(|n| *n as f64).collect();
            let ys: Vec<f64> = s.values.iter().map(|v| v.abs().ln()).collect();
            linear_fit(&xs, &ys).ok()
        } else {
            None
        };
        out.say(format!(
            "({}, {}): I = [{}]{}",
            phi.name(),
            psi.name(),
            s.values.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(", "),
            fit.as_ref().map(|f| format!(", log-slope {:.3}", f.slope)).unwrap_or_default()
        ));
        series.push(MixingEntry { phi: phi.name(), psi: psi.name(), ns: s.ns, values: s.values, fit, monte_carlo: s.monte_carlo });
    }
    let suffix = flag_suffix(hypothesis);
    out.json(
        &format!("mixing{suffix}.json"),
        &MixingReport { operation: "mixing", inputs_hash: ctx.hash, hypothesis, measure_atoms: mu.len(), series },
    )?;
    Ok(Some(hypothesis))
}

/// One row of a periodic-point table; coordinates are in the named chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicRow {
    pub re: f64,
    pub im: f64,
    pub chart: String,
    pub period: usize,
    pub multiplier_re: Option<f64>,
    pub multiplier_im: Option<f64>,
    pub multiplicity: usize,
    pub class: PeriodicClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicTable {
    pub operation: String,
    pub inputs_hash: String,
    pub period: usize,
    pub rows: Vec<PeriodicRow>,
    pub count: usize,
    pub diagonal_factors: usize,
    pub expected: usize,
    pub repelling: usize,
    pub attracting: usize,
    pub neutral: usize,
    pub repelling_summary: Option<RepellingSummary>,
}

fn periodic(ctx: &Context, out: &mut Outputs) -> CliResult<()> {
    let cfg = ctx.config;
    let dict = TestDictionary::standard();
    let reference = match cfg.periodic.reference_depth {
        Some(depth) => Some(backward_cloud(ctx.f, cfg.starts[0].point(), depth, cfg.budget, cfg.seed, ctx.policy())?),
        None => None,
    };
    for n in 1..=cfg.periodic.max_period {
        let set = periodic_points(ctx.f, n, ctx.policy())?;
        let rows: Vec<PeriodicRow> = set
            .points
            .iter()
            .map(|p| PeriodicRow {
                re: p.point.coord.re,
                im: p.point.coord.im,
                chart: match p.point.chart {
                    Chart::Zero => "zero".into(),
                    Chart::Infinity => "infinity".into(),
                },
                period: p.period,
                multiplier_re: p.multiplier.map(|m| m.re),
                multiplier_im: p.multiplier.map(|m| m.im),
                multiplicity: p.multiplicity,
                class: p.class,
            })
            .collect();
        let [(_, rep), (_, att), (_, neu)] = set.class_counts();
        let summary = match &reference {
            Some(r) => Some(repelling_summary(&set, r, &dict)?),
            None => None,
        };
        out.say(format!(
            "period {n}: {} points with multiplicity (+{} diagonal factors, expected {}); repelling {rep}, attracting {att}, neutral {neu}",
            set.count, set.diagonal_factors, set.expected
        ));
        for p in &set.points {
            let mult = p.multiplier.map(|m| format!("{:.6}{:+.6}i", m.re, m.im)).unwrap_or_else(|| "∞".into());
            out.say(format!("  {}  ×{}  multiplier {}  {:?}", p.point, p.multiplicity, mult, p.class));
        }
        out.json(
            &format!("periodic_n{n}.json"),
            &PeriodicTable {
                operation: "periodic".into(),
                inputs_hash: ctx.hash.into(),
                period: n,
                rows,
                count: set.count,
                diagonal_factors: set.diagonal_factors,
                expected: set.expected,
                repelling: rep,
                attracting: att,
                neutral: neu,
                repelling_summary: summary,
            },
        )?;
    }
    Ok(())
}

fn render(ctx: &Context, out: &mut Outputs) -> CliResult<()> {
    let cfg = ctx.config;
    let g = ctx.oriented();
    let mu = backward_cloud(&g, cfg.starts[0].point(), cfg.render.n, cfg.budget, cfg.seed, ctx.policy())?;
    out.cloud("cloud.cloud", &mu)?;
    out.raster("density.pgm", &mu, &cfg.render)?;
    out.say(format!("{} atoms at depth {}, {}×{} raster", mu.len(), cfg.render.n, 2 * cfg.render.resolution, cfg.render.resolution));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR_PAIR: &str = r#"{"correspondence": {"terms": [[0, 2, 1, 0], [1, 1, -5, 0], [2, 0, 6, 0]]}}"#;

    #[test]
    fn defaults_fill_in() {
        let c = Config::parse(LINEAR_PAIR).unwrap();
        assert_eq!(c.grid_resolution, 256);
        assert_eq!(c.starts, vec![PointInput::Affine([0.5, 0.0])]);
        assert_eq!(c.policy, NumericPolicy::default());
        let f = c.correspondence().unwrap();
        assert_eq!((f.d1(), f.d2()), (2, 2));
    }

    #[test]
    fn round_trip_is_identity() {
        let text = r#"{
            "correspondence": {"bidegree": [2, 2], "coeffs": [[-1,0],[0,0],[1,0],[0,0],[0,0],[0,0],[-1,0],[0,0],[0,0]]},
            "policy": {"tol_neutral": 0.1},
            "seed": 7,
            "starts": [[0.5, 0.25], "inf"],
            "sign": "minus",
            "mixing": {"pairs": [[1, 4], [7, 1]]},
            "periodic": {"max_period": 2, "reference_depth": 8}
        }"#;
        let a = Config::parse(text).unwrap();
        let b = Config::parse(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.starts[1].point(), SpherePoint::INFINITY);
        assert_eq!(a.policy.tol_neutral, 0.1);
    }

    #[test]
    fn factored_input() {
        let text = r#"{"correspondence": {"factors": [
            {"bidegree": [1, 1], "coeffs": [[0,0],[1,0],[-2,0],[0,0]], "multiplicity": 1},
            {"bidegree": [1, 1], "coeffs": [[0,0],[1,0],[-3,0],[0,0]], "multiplicity": 1}
        ]}}"#;
        let f = Config::parse(text).unwrap().correspondence().unwrap();
        assert_eq!(f.components().map(|c| c.len()), Some(2));
        let g = Config::parse(LINEAR_PAIR).unwrap().correspondence().unwrap();
        assert!(f.poly().distance_up_to_scale(g.poly()) < 1e-12);
    }

    #[test]
    fn errors_name_the_location() {
        let e = Config::parse("{\n  \"correspondence\": {\"terms\": []},\n  \"sede\": 3\n}").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 3") && msg.contains("sede"), "{msg}");
        assert_eq!(e.exit_code(), 2);
        let e = Config::parse(r#"{"correspondence": {"terms": [[0,2,1,0]]}, "n_min": 5, "n_max": 6}"#).unwrap_err();
        assert!(e.to_string().contains("n_max"));
    }

    #[test]
    fn fiber_is_a_config_error() {
        // x (y - x)
        let c = Config::parse(r#"{"correspondence": {"terms": [[1, 1, 1, 0], [2, 0, -1, 0]]}}"#).unwrap();
        let e = c.correspondence().unwrap_err();
        assert!(e.to_string().contains("fiber"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn ambiguous_input_rejected() {
        let c = Config::parse(r#"{"correspondence": {"terms": [[0,2,1,0]], "coeffs": [[1,0]], "bidegree": [0,0]}}"#).unwrap();
        assert!(c.correspondence().is_err());
    }
}
