//! Experiment configuration and the drivers behind each CLI subcommand.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::baselines::{exhaustive_search, hovering_baseline, los_design, GridSearchConfig};
use crate::dfo::{optimize, BoxBounds, DfoConfig, OptTrace};
use crate::error::{invalid, Error, Result};
use crate::geostat::{
    construct_ckm, default_neighborhood, fit_variogram_to_samples, mae, CkmMethod, SemivariogramParams, VariogramKind,
    VariogramOptions,
};
use crate::grid::{ChannelSample, GainGrid, GridSpec, Position2D, Rect};
use crate::io::{self, ConfigMap, DEFAULT_HEATMAP_RANGE};
use crate::radio::{LookupMode, PlacementVector, SumRateEvaluator};
use crate::rng::{stream, SeededRng};
use crate::scenario::{Scenario, REFERENCE_GBS};
use crate::truth::{
    generate_layout_avoiding, sample_measurements, sample_random, truth_ckm_with_shadowing, BuildingLayout,
    LinkHeights, ShadowingSampler, TruthParams,
};

/// How constructed CKMs are filled from samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstructMethod {
    Kriging(VariogramKind),
    Knn(usize),
    LosModel,
}

impl ConstructMethod {
    pub fn parse(name: &str, knn_k: usize) -> Result<Self> {
        match name {
            "kriging-exponential" | "kriging" => Ok(Self::Kriging(VariogramKind::Exponential)),
            "kriging-spherical" => Ok(Self::Kriging(VariogramKind::Spherical)),
            "knn" => Ok(Self::Knn(knn_k)),
            "los" => Ok(Self::LosModel),
            other => Err(invalid(format!(
                "unknown method '{other}' (expected kriging-exponential, kriging-spherical, knn or los)"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Kriging(kind) => format!("kriging-{}", kind.name()),
            Self::Knn(_) => "knn".to_string(),
            Self::LosModel => "los".to_string(),
        }
    }
}

/// Placement schemes compared in the power sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    DfoTruth,
    DfoKriging,
    DfoKnn,
    Hovering,
    LosDesign,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::DfoTruth,
        Scheme::DfoKriging,
        Scheme::DfoKnn,
        Scheme::Hovering,
        Scheme::LosDesign,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::DfoTruth => "dfo-truth",
            Scheme::DfoKriging => "dfo-kriging",
            Scheme::DfoKnn => "dfo-knn",
            Scheme::Hovering => "hovering",
            Scheme::LosDesign => "los-design",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scenario: Scenario,
    pub grid_spacing: f64,
    pub n_buildings: usize,
    /// Minimum footprint distance from any GBS, meters.
    pub building_clearance: f64,
    pub truth: TruthParams,
    pub sample_stride_x: usize,
    pub sample_stride_y: usize,
    /// Column stride of the denser pattern feeding the power sweep.
    pub sweep_stride_x: usize,
    pub method: ConstructMethod,
    pub knn_k: usize,
    pub dfo: DfoConfig,
    pub lookup: LookupMode,
    pub sweep_powers: Vec<f64>,
    pub sweep_seeds: Vec<u64>,
    pub mae_sample_counts: Vec<usize>,
    pub mae_seeds: Vec<u64>,
    pub exhaustive_stride: usize,
    pub heatmap_range: (f64, f64),
}

const CONFIG_KEYS: &[&str] = &[
    "seed",
    "num_uavs",
    "gbs",
    "region",
    "grid_spacing",
    "gbs_height",
    "uav_altitude",
    "tx_power_dbm",
    "noise_dbm",
    "rate_weights",
    "n_buildings",
    "building_clearance",
    "beta0_db",
    "n_los",
    "n_nlos",
    "nlos_penalty_db",
    "shadow_std_db",
    "shadow_corr_len",
    "sample_stride_x",
    "sample_stride_y",
    "sweep_stride_x",
    "method",
    "knn_k",
    "dfo_delta0",
    "dfo_beta",
    "dfo_epsilon",
    "dfo_max_iter",
    "lookup",
    "sweep_powers",
    "sweep_seeds",
    "mae_sample_counts",
    "mae_seeds",
    "exhaustive_stride",
    "heatmap_min_db",
    "heatmap_max_db",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            scenario: Scenario::reference(2).expect("reference scenario is valid"),
            grid_spacing: 5.0,
            n_buildings: 12,
            building_clearance: 10.0,
            truth: TruthParams::default(),
            sample_stride_x: 15,
            sample_stride_y: 1,
            sweep_stride_x: 10,
            method: ConstructMethod::Kriging(VariogramKind::Exponential),
            knn_k: 5,
            dfo: DfoConfig::default(),
            lookup: LookupMode::Nearest,
            sweep_powers: vec![20.0, 25.0, 30.0, 35.0, 40.0],
            sweep_seeds: vec![1, 2, 3, 4, 5],
            mae_sample_counts: vec![100, 300, 1000, 2000],
            mae_seeds: (1..=10).collect(),
            exhaustive_stride: 1,
            heatmap_range: DEFAULT_HEATMAP_RANGE,
        }
    }
}

fn per_uav(values: Vec<f64>, k: usize, key: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; k]),
        n if n == k => Ok(values),
        n => Err(invalid(format!("'{key}' needs 1 or {k} values, got {n}"))),
    }
}

impl ExperimentConfig {
    /// Applies the keys present in `map` on top of the defaults.
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        for (key, line) in map.keys() {
            if !CONFIG_KEYS.contains(&key) {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key '{key}'"),
                });
            }
        }
        let mut c = Self::default();
        if let Some(v) = map.u64("seed")? {
            c.seed = v;
        }
        let gbs: Vec<Position2D> = match map.f64_list("gbs")? {
            Some(v) if v.len() % 2 == 0 && !v.is_empty() => v.chunks(2).map(|p| Position2D::new(p[0], p[1])).collect(),
            Some(_) => return Err(invalid("'gbs' needs an even number of coordinates")),
            None => REFERENCE_GBS.to_vec(),
        };
        let k = map.usize("num_uavs")?.unwrap_or(2);
        if k == 0 || k > gbs.len() {
            return Err(invalid(format!("num_uavs must lie in 1..={}, got {k}", gbs.len())));
        }
        let mut region = c.scenario.region;
        if let Some(r) = map.f64_list("region")? {
            if r.len() != 4 {
                return Err(invalid("'region' needs x_min,x_max,y_min,y_max"));
            }
            region = Rect::new(r[0], r[1], r[2], r[3])?;
        }
        let tx = per_uav(map.f64_list("tx_power_dbm")?.unwrap_or(vec![30.0]), k, "tx_power_dbm")?;
        let noise = per_uav(map.f64_list("noise_dbm")?.unwrap_or(vec![-100.0]), k, "noise_dbm")?;
        let weights = per_uav(map.f64_list("rate_weights")?.unwrap_or(vec![1.0]), k, "rate_weights")?;
        c.scenario = Scenario::new(
            gbs[..k].to_vec(),
            map.f64("gbs_height")?.unwrap_or(2.0),
            map.f64("uav_altitude")?.unwrap_or(50.0),
            tx,
            noise,
            weights,
            region,
        )?;
        macro_rules! set {
            ($field:expr, $getter:ident, $key:literal) => {
                if let Some(v) = map.$getter($key)? {
                    $field = v;
                }
            };
        }
        set!(c.grid_spacing, f64, "grid_spacing");
        set!(c.n_buildings, usize, "n_buildings");
        set!(c.building_clearance, f64, "building_clearance");
        set!(c.truth.beta0_db, f64, "beta0_db");
        set!(c.truth.n_los, f64, "n_los");
        set!(c.truth.n_nlos, f64, "n_nlos");
        set!(c.truth.nlos_penalty_db, f64, "nlos_penalty_db");
        set!(c.truth.shadow_std_db, f64, "shadow_std_db");
        set!(c.truth.shadow_corr_len, f64, "shadow_corr_len");
        set!(c.sample_stride_x, usize, "sample_stride_x");
        set!(c.sample_stride_y, usize, "sample_stride_y");
        set!(c.sweep_stride_x, usize, "sweep_stride_x");
        set!(c.knn_k, usize, "knn_k");
        set!(c.dfo.delta0, f64, "dfo_delta0");
        set!(c.dfo.beta, f64, "dfo_beta");
        set!(c.dfo.epsilon, f64, "dfo_epsilon");
        set!(c.dfo.max_iter, usize, "dfo_max_iter");
        set!(c.sweep_powers, f64_list, "sweep_powers");
        set!(c.sweep_seeds, u64_list, "sweep_seeds");
        set!(c.mae_sample_counts, usize_list, "mae_sample_counts");
        set!(c.mae_seeds, u64_list, "mae_seeds");
        set!(c.exhaustive_stride, usize, "exhaustive_stride");
        set!(c.heatmap_range.0, f64, "heatmap_min_db");
        set!(c.heatmap_range.1, f64, "heatmap_max_db");
        c.method = ConstructMethod::parse(map.str("method").unwrap_or("kriging-exponential"), c.knn_k)?;
        c.lookup = match map.str("lookup").unwrap_or("nearest") {
            "nearest" => LookupMode::Nearest,
            "bilinear" => LookupMode::Bilinear,
            other => return Err(invalid(format!("unknown lookup mode '{other}'"))),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_map(&ConfigMap::read(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.truth.validate()?;
        self.dfo.validate()?;
        self.grid_spec()?;
        if self.sample_stride_x == 0 || self.sample_stride_y == 0 || self.sweep_stride_x == 0 {
            return Err(invalid("sampling strides must be at least 1"));
        }
        if self.knn_k == 0 {
            return Err(invalid("knn_k must be at least 1"));
        }
        if self.sweep_powers.is_empty()
            || self.sweep_seeds.is_empty()
            || self.mae_sample_counts.is_empty()
            || self.mae_seeds.is_empty()
        {
            return Err(invalid("sweep lists must be non-empty"));
        }
        for seeds in [&self.sweep_seeds, &self.mae_seeds] {
            let mut s = seeds.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != seeds.len() {
                return Err(invalid("seed lists must not repeat a seed"));
            }
        }
        if !(self.heatmap_range.0 < self.heatmap_range.1) {
            return Err(invalid("heatmap_min_db must be below heatmap_max_db"));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::covering(&self.scenario.region, self.grid_spacing)
    }

    pub fn heights(&self) -> LinkHeights {
        LinkHeights {
            gbs_height: self.scenario.gbs_height,
            uav_altitude: self.scenario.uav_altitude,
        }
    }
}

/// Building layout and one ground-truth CKM per GBS.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub layout: BuildingLayout,
    pub truths: Vec<GainGrid>,
}

/// Generates worlds for one configuration, factorizing the shadowing
/// covariance only once.
pub struct WorldFactory {
    spec: GridSpec,
    sampler: Option<ShadowingSampler>,
}

impl WorldFactory {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let spec = cfg.grid_spec()?;
        let sampler = if cfg.truth.shadow_std_db > 0.0 {
            Some(ShadowingSampler::new(spec, cfg.truth.shadow_corr_len)?)
        } else {
            None
        };
        Ok(Self { spec, sampler })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn world(&self, cfg: &ExperimentConfig, seed: u64) -> Result<World> {
        let s = &cfg.scenario;
        let mut layout_rng = SeededRng::new(seed, stream::LAYOUT);
        let layout = generate_layout_avoiding(
            &s.region,
            cfg.n_buildings,
            &s.gbs_positions,
            cfg.building_clearance,
            &mut layout_rng,
        )?;
        let truths = s
            .gbs_positions
            .iter()
            .enumerate()
            .map(|(k, &gbs)| {
                let shadow = match &self.sampler {
                    Some(sampler) => sampler.sample(
                        cfg.truth.shadow_std_db,
                        &mut SeededRng::substream(seed, stream::SHADOWING, k as u64),
                    )?,
                    None => GainGrid::constant(self.spec, 0.0)?,
                };
                truth_ckm_with_shadowing(&layout, gbs, cfg.heights(), &cfg.truth, &shadow)
            })
            .collect::<Result<_>>()?;
        Ok(World { layout, truths })
    }
}

/// Builds one CKM from `samples` for the GBS at `gbs`.
pub fn construct_with(
    method: ConstructMethod,
    samples: &[ChannelSample],
    spec: GridSpec,
    gbs: Position2D,
    cfg: &ExperimentConfig,
) -> Result<(GainGrid, Option<SemivariogramParams>)> {
    match method {
        ConstructMethod::Kriging(kind) => {
            let params = fit_variogram_to_samples(samples, kind, VariogramOptions::for_grid(&spec))?;
            let m = CkmMethod::Kriging {
                params,
                neighborhood: default_neighborhood(samples.len()),
            };
            Ok((construct_ckm(samples, spec, &m)?, Some(params)))
        }
        ConstructMethod::Knn(k) => Ok((construct_ckm(samples, spec, &CkmMethod::Knn { k })?, None)),
        ConstructMethod::LosModel => {
            let m = CkmMethod::LosModel {
                gbs,
                beta0_db: cfg.truth.beta0_db,
                uav_altitude: cfg.scenario.uav_altitude,
                gbs_height: cfg.scenario.gbs_height,
            };
            Ok((construct_ckm(samples, spec, &m)?, None))
        }
    }
}

/// DFO on `ckms`, started from the hovering placement.
pub fn optimize_placement(
    scenario: &Scenario,
    ckms: &[GainGrid],
    lookup: LookupMode,
    dfo: &DfoConfig,
    rng: &mut SeededRng,
) -> Result<(PlacementVector, OptTrace)> {
    let ev = SumRateEvaluator::new(scenario, ckms, lookup)?;
    let bounds = BoxBounds::from_region(&scenario.region, scenario.num_uavs())?;
    let q0 = bounds.clamp(hovering_baseline(scenario).as_slice());
    let trace = optimize(|q| ev.weighted_sum_rate(q), &bounds, &q0, dfo, rng)?;
    Ok((PlacementVector::new(trace.best_point.clone())?, trace))
}

/// One row of the power sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub power_dbm: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub sum_rate: f64,
}

/// Runs every scheme at every power for one seed; final placements are scored
/// on the ground truth.
pub fn power_sweep_for_seed(cfg: &ExperimentConfig, factory: &WorldFactory, seed: u64) -> Result<Vec<SweepRow>> {
    let world = factory.world(cfg, seed)?;
    let spec = factory.spec();
    let s = &cfg.scenario;
    let mut kriging = Vec::new();
    let mut knn = Vec::new();
    for (k, truth) in world.truths.iter().enumerate() {
        let samples = sample_measurements(truth, cfg.sweep_stride_x, cfg.sample_stride_y)?;
        let gbs = s.gbs_positions[k];
        kriging.push(
            construct_with(
                ConstructMethod::Kriging(VariogramKind::Exponential),
                &samples,
                spec,
                gbs,
                cfg,
            )?
            .0,
        );
        knn.push(construct_with(ConstructMethod::Knn(cfg.knn_k), &samples, spec, gbs, cfg)?.0);
    }
    let mut rows = Vec::new();
    for (pi, &power) in cfg.sweep_powers.iter().enumerate() {
        let sp = s.with_uniform_power(power);
        let truth_eval = SumRateEvaluator::new(&sp, &world.truths, cfg.lookup)?;
        for (si, scheme) in Scheme::ALL.iter().enumerate() {
            let mut rng = SeededRng::substream(seed, stream::EXPERIMENT, (pi * Scheme::ALL.len() + si) as u64);
            let q = match scheme {
                Scheme::DfoTruth => optimize_placement(&sp, &world.truths, cfg.lookup, &cfg.dfo, &mut rng)?.0,
                Scheme::DfoKriging => optimize_placement(&sp, &kriging, cfg.lookup, &cfg.dfo, &mut rng)?.0,
                Scheme::DfoKnn => optimize_placement(&sp, &knn, cfg.lookup, &cfg.dfo, &mut rng)?.0,
                Scheme::Hovering => hovering_baseline(&sp),
                Scheme::LosDesign => los_design(&sp, cfg.truth.beta0_db, &cfg.dfo, &mut rng)?.0,
            };
            rows.push(SweepRow {
                power_dbm: power,
                scheme: *scheme,
                seed,
                sum_rate: truth_eval.weighted_sum_rate(q.as_slice())?,
            });
        }
    }
    Ok(rows)
}

/// One row of the construction-error sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MaeRow {
    pub method: String,
    pub gbs: usize,
    pub n: usize,
    pub seed: u64,
    pub mae: f64,
}

/// Kriging (exponential) and KNN errors for random sample sets of each size.
pub fn mae_sweep_for_seed(cfg: &ExperimentConfig, factory: &WorldFactory, seed: u64) -> Result<Vec<MaeRow>> {
    let world = factory.world(cfg, seed)?;
    let spec = factory.spec();
    let methods = [
        ConstructMethod::Kriging(VariogramKind::Exponential),
        ConstructMethod::Knn(cfg.knn_k),
    ];
    let mut rows = Vec::new();
    for (k, truth) in world.truths.iter().enumerate() {
        for (ni, &n) in cfg.mae_sample_counts.iter().enumerate() {
            let mut rng = SeededRng::substream(seed, stream::SAMPLING, (k * 1000 + ni) as u64);
            let samples = sample_random(truth, n, &mut rng)?;
            for m in methods {
                let (est, _) = construct_with(m, &samples, spec, cfg.scenario.gbs_positions[k], cfg)?;
                rows.push(MaeRow {
                    method: m.name(),
                    gbs: k + 1,
                    n,
                    seed,
                    mae: mae(&est, truth)?,
                });
            }
        }
    }
    Ok(rows)
}

fn truth_file(k: usize) -> String {
    format!("truth_gbs{}.grid", k + 1)
}

fn write_text(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text)?;
    written.push(path);
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn read_grids(paths: &[PathBuf]) -> Result<Vec<GainGrid>> {
    paths.iter().map(|p| io::read_grid(p)).collect()
}

fn check_count(what: &str, got: usize, cfg: &ExperimentConfig) -> Result<()> {
    let k = cfg.scenario.num_uavs();
    if got != k {
        return Err(invalid(format!(
            "scenario has {k} UAVs but {got} {what} files were given"
        )));
    }
    Ok(())
}

/// Writes the layout and one truth grid per GBS.
pub fn cmd_gen_truth(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let world = WorldFactory::new(cfg)?.world(cfg, cfg.seed)?;
    let mut written = Vec::new();
    write_text(
        out_dir.join("layout.csv"),
        &io::format_layout(&world.layout),
        &mut written,
    )?;
    for (k, g) in world.truths.iter().enumerate() {
        write_text(out_dir.join(truth_file(k)), &io::format_grid(g), &mut written)?;
    }
    Ok(written)
}

/// Samples from `truths`: the strided column pattern, or `random_n` random nodes.
fn draw_samples(
    cfg: &ExperimentConfig,
    truths: &[GainGrid],
    random_n: Option<usize>,
) -> Result<Vec<Vec<ChannelSample>>> {
    truths
        .iter()
        .enumerate()
        .map(|(k, t)| match random_n {
            Some(n) => sample_random(t, n, &mut SeededRng::substream(cfg.seed, stream::SAMPLING, k as u64)),
            None => sample_measurements(t, cfg.sample_stride_x, cfg.sample_stride_y),
        })
        .collect()
}

pub fn cmd_sample(
    cfg: &ExperimentConfig,
    truth_paths: &[PathBuf],
    random_n: Option<usize>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let truths = read_grids(truth_paths)?;
    let mut written = Vec::new();
    for (k, s) in draw_samples(cfg, &truths, random_n)?.iter().enumerate() {
        write_text(
            out_dir.join(format!("samples_gbs{}.csv", k + 1)),
            &io::format_samples(s),
            &mut written,
        )?;
    }
    Ok(written)
}

/// Samples each truth grid, constructs a CKM with `cfg.method` and reports MAE.
pub fn cmd_construct(
    cfg: &ExperimentConfig,
    truth_paths: &[PathBuf],
    random_n: Option<usize>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    check_count("truth", truth_paths.len(), cfg)?;
    let truths = read_grids(truth_paths)?;
    let samples = draw_samples(cfg, &truths, random_n)?;
    let name = cfg.method.name();
    let mut report = String::from("method,gbs,n,mae,nugget,sill,range\n");
    let mut written = Vec::new();
    for (k, (truth, s)) in truths.iter().zip(&samples).enumerate() {
        let (est, params) = construct_with(cfg.method, s, *truth.spec(), cfg.scenario.gbs_positions[k], cfg)?;
        let err = mae(&est, truth)?;
        let (nugget, sill, range) = params.map_or((String::new(), String::new(), String::new()), |p| {
            (p.nugget.to_string(), p.sill.to_string(), p.range.to_string())
        });
        let _ = writeln!(report, "{name},{},{},{err},{nugget},{sill},{range}", k + 1, s.len());
        write_text(
            out_dir.join(format!("constructed_{name}_gbs{}.grid", k + 1)),
            &io::format_grid(&est),
            &mut written,
        )?;
    }
    write_text(out_dir.join(format!("construct_{name}.csv")), &report, &mut written)?;
    Ok(written)
}

/// MAE between two grid files.
pub fn cmd_eval_mae_pair(estimate: &Path, truth: &Path) -> Result<f64> {
    mae(&io::read_grid(estimate)?, &io::read_grid(truth)?)
}

/// Construction-error sweep over seeds, GBSs and sample counts.
pub fn cmd_eval_mae_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let factory = WorldFactory::new(cfg)?;
    let mut text = String::from("method,gbs,n,seed,mae\n");
    for &seed in &cfg.mae_seeds {
        for r in mae_sweep_for_seed(cfg, &factory, seed)? {
            let _ = writeln!(text, "{},{},{},{},{}", r.method, r.gbs, r.n, r.seed, r.mae);
        }
    }
    let mut written = Vec::new();
    write_text(out_dir.join("mae_sweep.csv"), &text, &mut written)?;
    Ok(written)
}

fn placement_summary(out: &mut String, prefix: &str, q: &PlacementVector) {
    for (k, p) in q.positions().iter().enumerate() {
        let _ = writeln!(out, "{prefix}uav_{}_x,{}", k + 1, p.x);
        let _ = writeln!(out, "{prefix}uav_{}_y,{}", k + 1, p.y);
    }
}

fn rate_summary(out: &mut String, prefix: &str, ev: &SumRateEvaluator, q: &PlacementVector) -> Result<()> {
    let rates = ev.rates(q.as_slice())?;
    for (k, r) in rates.iter().enumerate() {
        let _ = writeln!(out, "{prefix}rate_{},{r}", k + 1);
    }
    let _ = writeln!(out, "{prefix}sum_rate,{}", ev.weighted_sum_rate(q.as_slice())?);
    Ok(())
}

/// Runs DFO on the given CKMs. Writes the iteration trace and a key/value
/// summary; rates are also reported on `truth_paths` when given.
pub fn cmd_optimize(
    cfg: &ExperimentConfig,
    ckm_paths: &[PathBuf],
    truth_paths: &[PathBuf],
    out_dir: &Path,
) -> Result<(Vec<PathBuf>, OptTrace)> {
    ensure_dir(out_dir)?;
    check_count("CKM", ckm_paths.len(), cfg)?;
    let ckms = read_grids(ckm_paths)?;
    let mut rng = SeededRng::new(cfg.seed, stream::EXPERIMENT);
    let (q, trace) = optimize_placement(&cfg.scenario, &ckms, cfg.lookup, &cfg.dfo, &mut rng)?;

    let mut csv = String::from("iter,delta,f_trial,accepted,f_best\n");
    for r in &trace.records {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.iteration,
            r.delta,
            r.f_trial,
            u8::from(r.accepted),
            r.f_best
        );
    }
    let mut summary = String::from("key,value\n");
    let _ = writeln!(summary, "termination,{}", trace.termination.as_str());
    let _ = writeln!(summary, "iterations,{}", trace.iterations);
    let _ = writeln!(summary, "evaluations,{}", trace.evaluations);
    placement_summary(&mut summary, "", &q);
    let plan = SumRateEvaluator::new(&cfg.scenario, &ckms, cfg.lookup)?;
    rate_summary(&mut summary, "planning_", &plan, &q)?;
    if !truth_paths.is_empty() {
        check_count("truth", truth_paths.len(), cfg)?;
        let truths = read_grids(truth_paths)?;
        let ev = SumRateEvaluator::new(&cfg.scenario, &truths, cfg.lookup)?;
        rate_summary(&mut summary, "truth_", &ev, &q)?;
    }
    let mut written = Vec::new();
    write_text(out_dir.join("trace.csv"), &csv, &mut written)?;
    write_text(out_dir.join("optimize_summary.csv"), &summary, &mut written)?;
    Ok((written, trace))
}

pub fn cmd_exhaustive(cfg: &ExperimentConfig, ckm_paths: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    check_count("CKM", ckm_paths.len(), cfg)?;
    let ckms = read_grids(ckm_paths)?;
    let r = exhaustive_search(
        &cfg.scenario,
        &ckms,
        &GridSearchConfig {
            stride: cfg.exhaustive_stride,
        },
    )?;
    let mut summary = String::from("key,value\n");
    let _ = writeln!(summary, "evaluations,{}", r.evaluations);
    placement_summary(&mut summary, "", &r.placement);
    let ev = SumRateEvaluator::new(&cfg.scenario, &ckms, LookupMode::Nearest)?;
    rate_summary(&mut summary, "", &ev, &r.placement)?;
    let mut written = Vec::new();
    write_text(out_dir.join("exhaustive_summary.csv"), &summary, &mut written)?;
    Ok(written)
}

pub fn cmd_sweep_power(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let factory = WorldFactory::new(cfg)?;
    let mut text = String::from("power_dbm,scheme,seed,sum_rate\n");
    for &seed in &cfg.sweep_seeds {
        for r in power_sweep_for_seed(cfg, &factory, seed)? {
            let _ = writeln!(text, "{},{},{},{}", r.power_dbm, r.scheme.name(), r.seed, r.sum_rate);
        }
    }
    let mut written = Vec::new();
    write_text(out_dir.join("sweep_power.csv"), &text, &mut written)?;
    Ok(written)
}

pub fn cmd_export_heatmap(grid_path: &Path, range: (f64, f64), out_path: &Path) -> Result<PathBuf> {
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    io::write_pgm(out_path, &io::read_grid(grid_path)?, range.0, range.1)?;
    Ok(out_path.to_path_buf())
}
