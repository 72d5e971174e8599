//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ckm::baselines::{exhaustive_search, GridSearchConfig};
use ckm::dfo::{
    interpolation_condition, num_set_points, optimize, optimize_with_set, solve_trust_region_subproblem, BoxBounds,
    DfoConfig, OptTrace, QuadraticSurrogate, Termination, MAX_CONDITION,
};
use ckm::experiments::{
    mae_sweep_for_seed, optimize_placement, power_sweep_for_seed, ExperimentConfig, Scheme, WorldFactory,
};
use ckm::geostat::{
    fit_semivariogram, EmpiricalVariogram, KrigingSystem, SemivariogramParams, VariogramBin, VariogramKind,
};
use ckm::rng::{stream, SeededRng};
use ckm::{ChannelSample, Position2D, SumRateEvaluator};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn random_position(rng: &mut SeededRng) -> Position2D {
    Position2D::new(rng.uniform_in(-200.0, 100.0), rng.uniform_in(-150.0, 150.0))
}

fn random_params(rng: &mut SeededRng, nugget: bool) -> SemivariogramParams {
    let kind = if rng.uniform() < 0.5 {
        VariogramKind::Exponential
    } else {
        VariogramKind::Spherical
    };
    let a = if nugget { rng.uniform_in(0.0, 2.0) } else { 0.0 };
    SemivariogramParams::new(kind, a, rng.uniform_in(1.0, 40.0), rng.uniform_in(10.0, 150.0)).unwrap()
}

fn kriging_unbiasedness() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(101, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 10 + rng.index(291);
        let positions: Vec<Position2D> = (0..n).map(|_| random_position(&mut rng)).collect();
        let system = KrigingSystem::build(&positions, random_params(&mut rng, true)).unwrap();
        for _ in 0..100 {
            let w = system.weights(&random_position(&mut rng));
            worst = worst.max((w.weights.iter().sum::<f64>() - 1.0).abs());
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-9 && t < Duration::from_secs(30),
        format!("max |sum(w) - 1| = {worst:.2e} over 100 sets x 100 targets in {t:.2?} (limits 1e-9, 30 s)"),
    )
}

fn exact_interpolation() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(102, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = 10 + rng.index(291);
        let samples: Vec<ChannelSample> = (0..n)
            .map(|_| ChannelSample {
                position: random_position(&mut rng),
                gain_db: rng.uniform_in(-120.0, -60.0),
            })
            .collect();
        let positions: Vec<Position2D> = samples.iter().map(|s| s.position).collect();
        let system = KrigingSystem::build(&positions, random_params(&mut rng, false)).unwrap();
        let predicted = system.predict_many(&samples, &positions).unwrap();
        for (s, p) in samples.iter().zip(predicted) {
            worst = worst.max((s.gain_db - p).abs());
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-6 && t < Duration::from_secs(10),
        format!("max sample misfit {worst:.2e} dB over 20 configurations in {t:.2?} (limits 1e-6 dB, 10 s)"),
    )
}

/// Nugget in [0, 5], partial sill in [1, 40], range in [5, 60]; 30 lags at
/// 5 m spacing with equal pair counts.
fn variogram_round_trip() -> Outcome {
    let mut rng = SeededRng::new(103, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let truth = SemivariogramParams::new(
            VariogramKind::Exponential,
            rng.uniform_in(0.0, 5.0),
            rng.uniform_in(1.0, 40.0),
            rng.uniform_in(5.0, 60.0),
        )
        .unwrap();
        let emp = EmpiricalVariogram {
            bins: (1..=30)
                .map(|i| {
                    let lag = 5.0 * i as f64;
                    VariogramBin {
                        lag,
                        semivariance: truth.gamma(lag),
                        pairs: 100,
                    }
                })
                .collect(),
        };
        let fit = fit_semivariogram(&emp, VariogramKind::Exponential).unwrap();
        let rel = |got: f64, want: f64| {
            if want.abs() < 1e-3 {
                got.abs()
            } else {
                ((got - want) / want).abs()
            }
        };
        worst = worst
            .max(rel(fit.nugget, truth.nugget))
            .max(rel(fit.sill, truth.sill))
            .max(rel(fit.range, truth.range));
    }
    outcome(
        worst <= 1e-3,
        format!("worst relative parameter error {worst:.2e} over 20 trials (limit 1e-3)"),
    )
}

fn mae_versus_sample_count() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let factory = WorldFactory::new(&cfg).unwrap();
    let mut rows = Vec::new();
    for &seed in &cfg.mae_seeds {
        rows.extend(mae_sweep_for_seed(&cfg, &factory, seed).unwrap());
    }
    let t = start.elapsed();
    let mut pass = t < Duration::from_secs(180);
    let mut detail = String::new();
    let gbs_count = cfg.scenario.num_uavs();
    for gbs in 1..=gbs_count {
        let med = |method: &str, n: usize| {
            median(
                rows.iter()
                    .filter(|r| r.gbs == gbs && r.n == n && r.method == method)
                    .map(|r| r.mae)
                    .collect(),
            )
        };
        let kriging: Vec<f64> = cfg
            .mae_sample_counts
            .iter()
            .map(|&n| med("kriging-exponential", n))
            .collect();
        let knn: Vec<f64> = cfg.mae_sample_counts.iter().map(|&n| med("knn", n)).collect();
        pass &= kriging.windows(2).all(|w| w[1] < w[0]);
        pass &= kriging.iter().zip(&knn).all(|(k, n)| k < n);
        detail += &format!("gbs{gbs} kriging {kriging:.3?} knn {knn:.3?}; ");
    }
    outcome(
        pass,
        format!(
            "median MAE dB at N = {:?}: {detail}{t:.1?} (limit 180 s)",
            cfg.mae_sample_counts
        ),
    )
}

fn trs_attainment() -> Outcome {
    let mut rng = SeededRng::new(105, 0);
    let (mut attained, mut violations) = (0, 0);
    let instances = 200;
    for i in 0..instances {
        let n = if i % 2 == 0 { 4 } else { 6 };
        let g: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let a: Vec<f64> = (0..n * n).map(|_| rng.standard_normal()).collect();
        let h: Vec<f64> = (0..n * n).map(|k| 0.5 * (a[k] + a[(k % n) * n + k / n])).collect();
        let phi = QuadraticSurrogate::new(0.0, g, h).unwrap();
        let delta = rng.uniform_in(0.2, 3.0);
        let q_c: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let lo: Vec<f64> = q_c.iter().map(|q| q - rng.uniform_in(0.1, 3.0)).collect();
        let hi: Vec<f64> = q_c.iter().map(|q| q + rng.uniform_in(0.1, 3.0)).collect();
        let bounds = BoxBounds::new(lo.clone(), hi.clone()).unwrap();
        let s = solve_trust_region_subproblem(&phi, delta, &bounds, &q_c, &mut rng).unwrap();
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let inside = (0..n).all(|k| q_c[k] + s[k] >= lo[k] && q_c[k] + s[k] <= hi[k]);
        if norm > delta * (1.0 + 1e-12) || !inside {
            violations += 1;
        }
        let step_lo: Vec<f64> = (0..n).map(|k| (lo[k] - q_c[k]).max(-delta)).collect();
        let step_hi: Vec<f64> = (0..n).map(|k| (hi[k] - q_c[k]).min(delta)).collect();
        let mut best_probe = f64::NEG_INFINITY;
        let mut probes = 0;
        while probes < 10_000 {
            let p: Vec<f64> = (0..n).map(|k| rng.uniform_in(step_lo[k], step_hi[k])).collect();
            if p.iter().map(|v| v * v).sum::<f64>() <= delta * delta {
                best_probe = best_probe.max(phi.value(&p));
                probes += 1;
            }
        }
        if phi.value(&s) >= best_probe - 1e-6 {
            attained += 1;
        }
    }
    let frac = attained as f64 / instances as f64;
    outcome(
        frac >= 0.95 && violations == 0,
        format!("{attained}/{instances} instances beat the best of 10^4 probes, {violations} constraint violations (limits 95%, 0)"),
    )
}

/// Runs `optimize` while logging every objective value.
fn logged_run<F: Fn(&[f64]) -> f64>(
    f: F,
    bounds: &BoxBounds,
    q0: &[f64],
    config: &DfoConfig,
    seed: u64,
) -> (OptTrace, Vec<f64>) {
    let log = RefCell::new(Vec::new());
    let trace = optimize(
        |q| {
            let v = f(q);
            log.borrow_mut().push(v);
            Ok(v)
        },
        bounds,
        q0,
        config,
        &mut SeededRng::new(seed, 0),
    )
    .unwrap();
    (trace, log.into_inner())
}

fn fidelity_problems(trace: &OptTrace, calls: &[f64], config: &DfoConfig, n: usize) -> Vec<String> {
    let mut problems = Vec::new();
    let m1 = num_set_points(n);
    if trace.records.windows(2).any(|w| w[1].f_best < w[0].f_best) {
        problems.push("best trace decreases".into());
    }
    if trace.records.iter().any(|r| r.set_size != m1) || trace.final_set.len() != m1 {
        problems.push("set size drifted".into());
    }
    if calls.len() != trace.evaluations || trace.evaluations != m1 + 1 + trace.iterations + trace.resample_evaluations {
        problems.push(format!(
            "evaluation count {} for {} iterations",
            calls.len(),
            trace.iterations
        ));
    }
    if trace.resample_evaluations == 0 {
        let trials: Vec<f64> = trace.records.iter().map(|r| r.f_trial).collect();
        if calls[m1 + 1..] != trials[..] {
            problems.push("evaluations do not match one trial per iteration".into());
        }
    }
    let collapsed = trace.final_set.points().iter().all(|p| {
        p.iter()
            .zip(&trace.final_point)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            <= config.epsilon
    });
    match trace.termination {
        Termination::Converged => {
            if !(trace.final_delta < config.epsilon && collapsed) {
                problems.push("converged without delta < epsilon and a collapsed set".into());
            }
        }
        Termination::IterationBudget => {
            if trace.iterations != config.max_iter {
                problems.push("stopped early without converging".into());
            }
        }
    }
    problems
}

fn algorithm_fidelity() -> Outcome {
    let config = DfoConfig::default();
    let mut problems = Vec::new();
    let mut runs = 0;
    let mut terminations = BTreeMap::new();

    let bounds = BoxBounds::new(vec![-100.0; 4], vec![100.0; 4]).unwrap();
    for seed in 0..5 {
        let target = [30.0, -20.0, 5.0, 60.0];
        let bowl = |q: &[f64]| -q.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let (trace, calls) = logged_run(bowl, &bounds, &[0.0; 4], &config, seed);
        problems.extend(fidelity_problems(&trace, &calls, &config, 4));
        *terminations.entry(trace.termination.as_str()).or_insert(0) += 1;
        runs += 1;
    }

    let cfg = ExperimentConfig::default();
    let factory = WorldFactory::new(&cfg).unwrap();
    let s = &cfg.scenario;
    let bounds = BoxBounds::from_region(&s.region, s.num_uavs()).unwrap();
    for seed in 1..=5 {
        let world = factory.world(&cfg, seed).unwrap();
        let ev = SumRateEvaluator::new(s, &world.truths, cfg.lookup).unwrap();
        let q0 = bounds.sample(&mut SeededRng::new(seed, 99));
        let (trace, calls) = logged_run(|q| ev.weighted_sum_rate(q).unwrap(), &bounds, &q0, &config, seed);
        problems.extend(fidelity_problems(&trace, &calls, &config, 4));
        *terminations.entry(trace.termination.as_str()).or_insert(0) += 1;
        runs += 1;
    }
    outcome(
        problems.is_empty(),
        format!("{runs} runs, terminations {terminations:?}, problems {problems:?}"),
    )
}

fn smooth_convergence() -> Outcome {
    let config = DfoConfig {
        max_iter: 200,
        ..DfoConfig::default()
    };
    let bounds = BoxBounds::new(vec![-100.0; 4], vec![100.0; 4]).unwrap();
    let mut ok = 0;
    let mut worst = 0.0f64;
    let mut most_iters = 0;
    for seed in 0..10 {
        let mut rng = SeededRng::new(seed, 7);
        let target: Vec<f64> = (0..4).map(|_| rng.uniform_in(-80.0, 80.0)).collect();
        let bowl = |q: &[f64]| -q.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let (trace, _) = logged_run(bowl, &bounds, &[0.0; 4], &config, seed);
        let err = trace
            .final_point
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(err);
        most_iters = most_iters.max(trace.iterations);
        if err <= 1e-2 {
            ok += 1;
        }
    }
    outcome(
        ok == 10,
        format!("{ok}/10 seeds within 1e-2 m (worst {worst:.2e} m, at most {most_iters} iterations, budget 200)"),
    )
}

fn dfo_versus_exhaustive() -> Outcome {
    let cfg = ExperimentConfig::default();
    let factory = WorldFactory::new(&cfg).unwrap();
    let s = &cfg.scenario;
    let mut ratios = Vec::new();
    let (mut dfo_max, mut ex_max) = (Duration::ZERO, Duration::ZERO);
    for seed in 1..=10 {
        let world = factory.world(&cfg, seed).unwrap();
        let start = Instant::now();
        let mut rng = SeededRng::new(seed, stream::EXPERIMENT);
        let (_, trace) = optimize_placement(s, &world.truths, cfg.lookup, &cfg.dfo, &mut rng).unwrap();
        dfo_max = dfo_max.max(start.elapsed());
        let start = Instant::now();
        let ex = exhaustive_search(s, &world.truths, &GridSearchConfig { stride: 1 }).unwrap();
        ex_max = ex_max.max(start.elapsed());
        ratios.push(trace.best_value / ex.value);
    }
    let med = median(ratios.clone());
    outcome(
        med >= 0.95 && dfo_max < Duration::from_secs(5) && ex_max < Duration::from_secs(600),
        format!(
            "median DFO/exhaustive {med:.3} (per seed {ratios:.3?}), slowest DFO {dfo_max:.2?}, slowest exhaustive {ex_max:.2?} (limits 0.95, 5 s, 10 min)"
        ),
    )
}

fn scheme_ordering() -> Outcome {
    let cfg = ExperimentConfig::default();
    let factory = WorldFactory::new(&cfg).unwrap();
    let mut rows = Vec::new();
    for &seed in &cfg.sweep_seeds {
        rows.extend(power_sweep_for_seed(&cfg, &factory, seed).unwrap());
    }
    let med = |p: f64, scheme: Scheme| {
        median(
            rows.iter()
                .filter(|r| r.power_dbm == p && r.scheme == scheme)
                .map(|r| r.sum_rate)
                .collect(),
        )
    };
    let mut pass = true;
    let mut broken = Vec::new();
    for &p in &cfg.sweep_powers {
        let truth = med(p, Scheme::DfoTruth);
        let kriging = med(p, Scheme::DfoKriging);
        if truth < kriging {
            broken.push(format!("{p} dBm: dfo-truth {truth:.2} < dfo-kriging {kriging:.2}"));
        }
        for other in [Scheme::DfoKnn, Scheme::Hovering, Scheme::LosDesign] {
            let v = med(p, other);
            if kriging < v {
                broken.push(format!("{p} dBm: dfo-kriging {kriging:.2} < {} {v:.2}", other.name()));
            }
        }
    }
    pass &= broken.is_empty();
    let gain = med(30.0, Scheme::DfoTruth) / med(30.0, Scheme::Hovering);
    pass &= gain >= 1.5;
    outcome(
        pass,
        format!("dfo-truth/hovering at 30 dBm {gain:.2} (limit 1.5); ordering violations {broken:?}"),
    )
}

const CLI_CONFIG: &str = "\
region = -100,50,-75,75
gbs = -45,8,-59,-27
n_buildings = 4
grid_spacing = 5
sample_stride_x = 6
sweep_stride_x = 4
sweep_powers = 25,35
sweep_seeds = 1,2
mae_sample_counts = 50,150
mae_seeds = 1,2
";

fn run_cli(dir: &Path, config: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_ckm"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--seed")
        .arg("7")
        .arg("--out-dir")
        .arg(dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "ckm {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn cli_session(dir: &Path, config: &Path) -> (BTreeMap<String, Vec<u8>>, Vec<u8>) {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let (t1, t2) = (p("truth_gbs1.grid"), p("truth_gbs2.grid"));
    run_cli(dir, config, &["gen-truth"]);
    run_cli(dir, config, &["sample", "--truth", &t1, &t2]);
    run_cli(dir, config, &["construct", "--truth", &t1, &t2]);
    let (c1, c2) = (
        p("constructed_kriging-exponential_gbs1.grid"),
        p("constructed_kriging-exponential_gbs2.grid"),
    );
    let mae = run_cli(dir, config, &["eval-mae", "--estimate", &c1, "--truth", &t1]);
    run_cli(dir, config, &["eval-mae"]);
    run_cli(dir, config, &["optimize", "--ckm", &c1, &c2, "--truth", &t1, &t2]);
    run_cli(dir, config, &["exhaustive", "--ckm", &t1, &t2]);
    run_cli(dir, config, &["sweep-power"]);
    run_cli(dir, config, &["export-heatmap", "--grid", &t1]);
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path: PathBuf = entry.unwrap().path();
        files.insert(
            path.file_name().unwrap().to_string_lossy().into_owned(),
            fs::read(&path).unwrap(),
        );
    }
    (files, mae)
}

fn cli_determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("small.conf");
    fs::write(&config, CLI_CONFIG).unwrap();
    let (a, mae_a) = cli_session(&root.path().join("a"), &config);
    let (b, mae_b) = cli_session(&root.path().join("b"), &config);
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    outcome(
        a.len() == b.len() && differing.is_empty() && mae_a == mae_b && a.len() >= 12,
        format!(
            "{} files from 8 subcommands compared byte for byte, differing {differing:?}",
            a.len()
        ),
    )
}

fn planted_degenerate_set() -> Outcome {
    let bounds = BoxBounds::new(vec![-100.0; 4], vec![100.0; 4]).unwrap();
    let planted: Vec<Vec<f64>> = (0..num_set_points(4)).map(|i| vec![5.0 * i as f64 - 30.0; 4]).collect();
    let q0 = [1.0, -2.0, 3.0, -4.0];
    let cond = interpolation_condition(&q0, &planted).unwrap();
    let bowl = |q: &[f64]| Ok(-q.iter().map(|v| (v - 10.0) * (v - 10.0)).sum::<f64>());
    let result = optimize_with_set(
        bowl,
        &bounds,
        &q0,
        Some(planted),
        &DfoConfig::default(),
        &mut SeededRng::new(11, 0),
    );
    match result {
        Ok(t) => outcome(
            cond >= MAX_CONDITION && t.initial_redraws >= 1 && t.iterations > 0,
            format!(
                "planted condition {cond:.1e}, {} redraw(s), finished with {} after {} iterations",
                t.initial_redraws,
                t.termination.as_str(),
                t.iterations
            ),
        ),
        Err(e) => outcome(false, format!("optimization failed: {e}")),
    }
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("kriging unbiasedness", kriging_unbiasedness),
        ("exact interpolation", exact_interpolation),
        ("variogram round trip", variogram_round_trip),
        ("construction error versus sample count", mae_versus_sample_count),
        ("subproblem attainment", trs_attainment),
        ("trust-region loop fidelity", algorithm_fidelity),
        ("smooth-objective convergence", smooth_convergence),
        ("DFO versus exhaustive search", dfo_versus_exhaustive),
        ("scheme ordering over transmit power", scheme_ordering),
        ("CLI determinism", cli_determinism),
        ("degenerate interpolation set", planted_degenerate_set),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {:>2} {name}: {} [{:.1?}]",
            i + 1,
            o.detail,
            start.elapsed()
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: criteria {failed:?} failed");
        std::process::exit(1);
    }
}
