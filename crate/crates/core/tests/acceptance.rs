//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Builds the default response surface once (about a minute in release on
//! one core).

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use levy_attention::attention_flow::{build_network, Node};
use levy_attention::cli::{execute, write_run, RunManifest, RunPlan, SurfacePlan, MANIFEST_FILE};
use levy_attention::empirical::{
    parse_events, session_to_events, sessionize, write_events_csv, DEFAULT_SESSION_GAP,
};
use levy_attention::inference::{argmax_likelihood, infer, ObservedExponents};
use levy_attention::levy_sampler::{sample_polar, step_cdf, step_quantile, StepLawParams};
use levy_attention::scaling::{
    build_response_surface, default_lambda_grid, default_p_grid, sweep_cell, ExponentSet,
    ResponseSurface, SweepSettings,
};
use levy_attention::simulation::{run_session, simulate_lifetimes, SimConfig};

const MIN_R_SQUARED: f64 = 0.95;
const THETA_RANGE: (f64, f64) = (1.3, 1.7);
const ROUND_TRIP_TOL: f64 = 1e-10;
const KS_SAMPLES: usize = 100_000;
const KS_1PCT: f64 = 1.628;
const LIFETIME_REPLICATES: usize = 200;
const BOOTSTRAP_RESAMPLES: usize = 2000;
/// Seed for sweeps at the truths; distinct from the surface's master seed.
const TRUTH_SEED: u64 = 1;
const TRUTHS: [(f64, f64); 5] = [(0.3, 1.7), (0.2, 2.4), (0.5, 2.0), (0.7, 1.4), (0.8, 2.2)];
const P_STEP: f64 = 0.1;
const LAMBDA_STEP: f64 = 0.2;
const GRID_EPS: f64 = 1e-9;

type Outcome = Result<String, String>;

struct Report {
    failed: usize,
}

impl Report {
    fn record(&mut self, id: &str, title: &str, started: Instant, outcome: Outcome) {
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {id} {title}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                self.failed += 1;
                println!("[FAIL] {id} {title}: {detail} ({secs:.1}s)");
            }
        }
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn default_sweep() -> Result<ExponentSet, String> {
    sweep_cell(0.5, 2.0, (0, 0), &SweepSettings::default())
        .map(|o| o.exponents)
        .map_err(err)
}

fn c1(ex: &ExponentSet) -> Outcome {
    let a = ex.alpha;
    check(
        a.exponent > 1.0 && a.r_squared > MIN_R_SQUARED,
        format!("alpha = {:.4} ± {:.4}, r² = {:.4}", a.exponent, a.std_err, a.r_squared),
    )
}

fn c2(ex: &ExponentSet) -> Outcome {
    let b = ex.beta;
    check(
        b.exponent < 1.0 && b.r_squared > MIN_R_SQUARED,
        format!("beta = {:.4} ± {:.4}, r² = {:.4}", b.exponent, b.std_err, b.r_squared),
    )
}

fn c3(ex: &ExponentSet) -> Outcome {
    let t = ex.theta.exponent;
    check(
        (THETA_RANGE.0..=THETA_RANGE.1).contains(&t),
        format!("theta = {t:.4}, required [{}, {}]", THETA_RANGE.0, THETA_RANGE.1),
    )
}

/// Exponents along `p_values` at `λ = 2`; cell `i` is seeded as grid row `i`.
fn p_scan(p_values: &[f64]) -> Result<Vec<ExponentSet>, String> {
    let settings = SweepSettings::default();
    p_values
        .iter()
        .enumerate()
        .map(|(i, &p)| sweep_cell(p, 2.0, (i, 0), &settings).map(|o| o.exponents).map_err(err))
        .collect()
}

/// Adjacent drops larger than the larger of the two slope standard errors,
/// and drops of any size.
fn monotone_violations(fits: &[(f64, f64)]) -> (usize, usize) {
    let mut beyond_se = 0;
    let mut any = 0;
    for w in fits.windows(2) {
        let drop = w[0].0 - w[1].0;
        if drop > 0.0 {
            any += 1;
            if drop > w[0].1.max(w[1].1) {
                beyond_se += 1;
            }
        }
    }
    (beyond_se, any)
}

fn c4() -> Outcome {
    let ps: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let sets = p_scan(&ps)?;
    let gammas: Vec<(f64, f64)> = sets
        .iter()
        .map(|s| (s.gamma.exponent, s.gamma.std_err))
        .collect();
    let (beyond_se, _) = monotone_violations(&gammas);
    let first = gammas[0].0;
    let last = gammas[gammas.len() - 1].0;
    let listing: Vec<String> = gammas.iter().map(|g| format!("{:.3}", g.0)).collect();
    check(
        first < 1.0 && last > 1.0 && beyond_se == 0,
        format!(
            "gamma(p=0.1..0.9) = [{}]; drops beyond SE = {beyond_se}",
            listing.join(", ")
        ),
    )
}

fn c5() -> Outcome {
    let sets = p_scan(&default_p_grid())?;
    let alphas: Vec<(f64, f64)> = sets
        .iter()
        .map(|s| (s.alpha.exponent, s.alpha.std_err))
        .collect();
    let (beyond_se, any) = monotone_violations(&alphas);
    let listing: Vec<String> = alphas.iter().map(|a| format!("{:.3}", a.0)).collect();
    check(
        any <= 1 && beyond_se == 0,
        format!(
            "alpha(p grid) = [{}]; decreasing pairs = {any}, beyond SE = {beyond_se}",
            listing.join(", ")
        ),
    )
}

fn c6() -> Outcome {
    let template = SimConfig::new(1, 0.3, 2.0, 0).map_err(err)?;
    let stats = simulate_lifetimes(&template, &[1, 256], LIFETIME_REPLICATES).map_err(err)?;
    let (solo, crowd) = (&stats[0].t_ends, &stats[1].t_ends);
    let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut resample = |v: &[u64]| {
        (0..v.len())
            .map(|_| v[rng.gen_range(0..v.len())])
            .sum::<u64>() as f64
            / v.len() as f64
    };
    let mut diffs: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| resample(crowd) - resample(solo))
        .collect();
    diffs.sort_by(f64::total_cmp);
    let lo = diffs[(0.025 * BOOTSTRAP_RESAMPLES as f64) as usize];
    let hi = diffs[(0.975 * BOOTSTRAP_RESAMPLES as f64) as usize];
    check(
        lo > 0.0,
        format!(
            "mean T(1) = {:.2}, T(256) = {:.2}, 95% CI of difference [{lo:.2}, {hi:.2}]",
            mean(solo),
            mean(crowd)
        ),
    )
}

fn random_walk_sets(rng: &mut ChaCha8Rng) -> Vec<Vec<u8>> {
    let walkers = rng.gen_range(0..=10);
    (0..walkers)
        .map(|_| {
            let len = rng.gen_range(0..=20);
            (0..len).map(|_| rng.gen_range(0..8u8)).collect()
        })
        .collect()
}

fn c7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..100 {
        let walks = random_walk_sets(&mut rng);
        let sites: HashSet<u8> = walks.iter().flatten().copied().collect();
        let mut oracle = HashMap::new();
        for &x in &sites {
            for &y in &sites {
                let w: u64 = walks
                    .iter()
                    .map(|walk| walk.windows(2).filter(|p| p[0] == x && p[1] == y).count() as u64)
                    .sum();
                if w > 0 {
                    oracle.insert((x, y), w);
                }
            }
        }
        let net = build_network(&walks);
        let mut got = HashMap::new();
        for (from, to, w) in net.edges() {
            if let (Node::Site(a), Node::Site(b)) = (from, to) {
                got.insert((*a, *b), w);
            }
        }
        if got != oracle {
            return Err(format!("case {case}: weights differ from the recount"));
        }
    }
    Ok("100 random trajectory sets match exactly".to_owned())
}

fn c8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    for case in 0..100 {
        let walks = random_walk_sets(&mut rng);
        let net = build_network(&walks);
        let non_empty = walks.iter().filter(|w| !w.is_empty()).count() as u64;
        if !net.check_flow_balance()
            || net.source_efflux() != non_empty
            || net.sink_influx() != non_empty
        {
            return Err(format!("random set {case} unbalanced"));
        }
        checked += 1;
    }
    for (k, (p, lambda)) in [(0.2, 1.2), (0.5, 2.0), (0.9, 2.8), (1.0, 2.0)].into_iter().enumerate() {
        for seed in 0..5 {
            let mut cfg = SimConfig::new(50, p, lambda, 100 * k as u64 + seed).map_err(err)?;
            cfg.max_ticks = 2000;
            let res = run_session(&cfg).map_err(err)?;
            let net = build_network(&res.trajectories);
            let non_empty = res.trajectories.iter().filter(|t| !t.is_empty()).count() as u64;
            if !net.check_flow_balance()
                || net.source_efflux() != non_empty
                || net.sink_influx() != non_empty
            {
                return Err(format!("session p={p} lambda={lambda} seed={seed} unbalanced"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} networks balanced"))
}

fn c9() -> Outcome {
    let mut worst = 0.0f64;
    for lambda in [1.0, 1.25, 1.5, 2.0, 2.5, 3.0] {
        let params = StepLawParams::with_lambda(lambda).map_err(err)?;
        // the quantile is defined on [0, 1)
        for k in 0..1000 {
            let u = k as f64 / 1000.0;
            let l = step_quantile(u, &params).map_err(err)?;
            worst = worst.max((step_cdf(l, &params).map_err(err)? - u).abs());
        }
    }
    if worst > ROUND_TRIP_TOL {
        return Err(format!("round-trip error {worst:e}"));
    }
    let critical = KS_1PCT / (KS_SAMPLES as f64).sqrt();
    let mut stats = Vec::new();
    let mut ok = true;
    for (k, lambda) in [1.0, 1.5, 2.0, 2.5, 3.0].into_iter().enumerate() {
        let params = StepLawParams::with_lambda(lambda).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(900 + k as u64);
        let mut xs: Vec<f64> = (0..KS_SAMPLES).map(|_| sample_polar(&mut rng, &params).0).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let mut d = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let f = step_cdf(x, &params).map_err(err)?;
            d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
        }
        ok &= d < critical;
        stats.push(format!("{d:.4}"));
    }
    check(
        ok,
        format!(
            "round trip {worst:.1e}; KS D = [{}] vs {critical:.4}",
            stats.join(", ")
        ),
    )
}

fn c10(surface: &ResponseSurface) -> Outcome {
    let settings = SweepSettings {
        master_seed: TRUTH_SEED,
        ..SweepSettings::default()
    };
    let mut hits = 0;
    let mut lines = Vec::new();
    for (k, &(p, lambda)) in TRUTHS.iter().enumerate() {
        let ex = sweep_cell(p, lambda, (k, 0), &settings).map_err(err)?.exponents;
        let got = infer(&ObservedExponents::from_exponent_set(&ex), surface).map_err(err)?;
        let hit = (got.p_hat - p).abs() <= P_STEP + GRID_EPS
            && (got.lambda_hat - lambda).abs() <= LAMBDA_STEP + GRID_EPS;
        hits += hit as usize;
        lines.push(format!(
            "({p}, {lambda}) -> ({}, {}){}",
            got.p_hat,
            got.lambda_hat,
            if hit { "" } else { " miss" }
        ));
    }
    check(hits >= 4, format!("{hits}/5 within one step: {}", lines.join("; ")))
}

fn c11(surface: &ResponseSurface) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let obs = ObservedExponents::new(
            rng.gen_range(0.8..2.0),
            rng.gen_range(0.6..1.3),
            rng.gen_range(1.0..2.0),
        )
        .map_err(err)?;
        let nearest = infer(&obs, surface).map_err(err)?.cell_index;
        for sigma in [0.1, 1.0, 10.0] {
            let best = argmax_likelihood(&obs, surface, sigma).map_err(err)?;
            if best != nearest {
                return Err(format!(
                    "case {case}, sigma {sigma}: {best:?} vs distance argmin {nearest:?}"
                ));
            }
        }
    }
    Ok("100 observations, sigma ∈ {0.1, 1, 10}".to_owned())
}

fn c12() -> Outcome {
    for (seed, p, lambda) in [(12, 0.5, 2.0), (13, 0.8, 1.3), (14, 0.3, 2.6)] {
        let cfg = SimConfig::new(200, p, lambda, seed).map_err(err)?;
        let res = run_session(&cfg).map_err(err)?;
        let direct = build_network(&res.trajectories).metrics(cfg.n_walkers);
        let mut csv = Vec::new();
        write_events_csv(&session_to_events(&res, 1e7), &mut csv).map_err(err)?;
        let events = parse_events(csv.as_slice()).map_err(err)?;
        let walks: Vec<Vec<String>> = sessionize(&events, DEFAULT_SESSION_GAP)
            .map_err(err)?
            .into_iter()
            .map(|s| s.resources)
            .collect();
        let back = build_network(&walks).metrics(cfg.n_walkers);
        let a = (direct.activity, direct.diversity, direct.edges);
        let b = (back.activity, back.diversity, back.edges);
        if a != b {
            return Err(format!("seed {seed}: direct {a:?} vs re-ingested {b:?}"));
        }
    }
    Ok("3 sessions identical".to_owned())
}

fn c13() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let small = SweepSettings {
        n_list: vec![4, 8, 16, 32, 64, 128],
        replicates: 3,
        ..SweepSettings::default()
    };
    let surface_dir = dir.path().join("surface");
    let events = dir.path().join("events.csv");
    {
        let res = run_session(&SimConfig::new(300, 0.6, 1.8, 3).map_err(err)?).map_err(err)?;
        let mut f = std::fs::File::create(&events).map_err(err)?;
        write_events_csv(&session_to_events(&res, 3600.0), &mut f).map_err(err)?;
    }
    let plans = vec![
        RunPlan::Simulate(SimConfig::new(100, 0.5, 2.0, 7).map_err(err)?),
        RunPlan::Sweep {
            p: 0.4,
            lambda: 1.6,
            settings: small.clone(),
            svg: true,
        },
        RunPlan::Surface(SurfacePlan {
            p_grid: vec![0.25, 0.75],
            lambda_grid: vec![1.5, 2.5],
            settings: small,
        }),
        RunPlan::Infer {
            observed: ObservedExponents::new(1.27, 0.85, 1.25).map_err(err)?,
            surface: surface_dir.join("surface.json"),
            sigma: 1.0,
        },
        RunPlan::Analyze {
            input: events,
            gap: DEFAULT_SESSION_GAP,
            drop_self_loops: false,
            checkpoints: None,
        },
    ];
    for plan in &plans {
        let name = plan.name();
        let first = if name == "surface" {
            surface_dir.clone()
        } else {
            dir.path().join(name)
        };
        let outputs = execute(plan, Some(1)).map_err(err)?;
        write_run(&first, plan, &outputs).map_err(err)?;
        let manifest = RunManifest::load(&first.join(MANIFEST_FILE)).map_err(err)?;
        for jobs in [None, Some(2), Some(4)] {
            let again = execute(&manifest.plan, jobs).map_err(err)?;
            let rerun_dir = dir.path().join(format!("{name}-{jobs:?}"));
            write_run(&rerun_dir, &manifest.plan, &again).map_err(err)?;
            for file in manifest.outputs.iter().map(String::as_str).chain([MANIFEST_FILE]) {
                let a = std::fs::read(first.join(file)).map_err(err)?;
                let b = std::fs::read(rerun_dir.join(file)).map_err(err)?;
                if a != b {
                    return Err(format!("{name}: {file} differs under jobs {jobs:?}"));
                }
            }
        }
    }
    Ok("simulate, sweep, surface, infer, analyze reproduced under jobs 1/2/4/all".to_owned())
}

fn main() {
    let mut report = Report { failed: 0 };

    let t = Instant::now();
    let sweep = default_sweep();
    for (id, title, f) in [
        ("C1", "super-linear activity", c1 as fn(&ExponentSet) -> Outcome),
        ("C2", "sub-linear diversity", c2),
        ("C3", "densification", c3),
    ] {
        let outcome = sweep.as_ref().map_err(Clone::clone).and_then(f);
        report.record(id, title, t, outcome);
    }

    let t = Instant::now();
    report.record("C4", "gamma transition in p", t, c4());
    let t = Instant::now();
    report.record("C5", "alpha monotone in p", t, c5());
    let t = Instant::now();
    report.record("C6", "lifetime interaction effect", t, c6());
    let t = Instant::now();
    report.record("C7", "edge weights match brute-force recount", t, c7());
    let t = Instant::now();
    report.record("C8", "flow conservation", t, c8());
    let t = Instant::now();
    report.record("C9", "sampler correctness", t, c9());

    let t = Instant::now();
    let surface = build_response_surface(
        &default_p_grid(),
        &default_lambda_grid(),
        &SweepSettings::default(),
    )
    .map(|b| b.surface)
    .map_err(err);
    let surface_secs = t.elapsed().as_secs_f64();
    println!("       default 10x10 surface built in {surface_secs:.1}s");
    let t = Instant::now();
    report.record(
        "C10",
        "inference round trip",
        t,
        surface.as_ref().map_err(Clone::clone).and_then(c10),
    );
    let t = Instant::now();
    report.record(
        "C11",
        "likelihood/distance equivalence",
        t,
        surface.as_ref().map_err(Clone::clone).and_then(c11),
    );
    let t = Instant::now();
    report.record("C12", "pipeline consistency", t, c12());
    let t = Instant::now();
    report.record("C13", "determinism from manifest", t, c13());

    println!("{} of 13 criteria passed", 13 - report.failed);
    if report.failed > 0 {
        std::process::exit(1);
    }
}
