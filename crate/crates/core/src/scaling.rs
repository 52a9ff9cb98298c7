//! Power-law fits of activity, diversity and edge counts against community
//! size, and the exponent response surface over a `(p, λ)` grid.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attention_flow::{build_network, Metrics};
use crate::error::{Error, Result};
use crate::levy_sampler::{StepLawParams, DEFAULT_L_MAX, DEFAULT_L_MIN};
use crate::simulation::{replicate_seed, run_session, SimConfig, DEFAULT_MAX_TICKS};

pub const DEFAULT_N_LIST: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];
pub const DEFAULT_REPLICATES: usize = 5;
pub const DEFAULT_SEED: u64 = 0;
pub const GRID_INTERVALS: usize = 10;

/// Least-squares line in log10-log10 space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Standard error of the slope.
    pub std_err: f64,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::fit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points
        .iter()
        .find(|&&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::fit(format!(
            "coordinates must be positive and finite, got ({x}, {y})"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.log10(), y.log10())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &logs {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx <= 0.0 {
        return Err(Error::fit("all x values are equal"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = logs
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(ScalingFit {
        exponent: slope,
        prefactor: 10f64.powf(intercept),
        r_squared,
        n_points: logs.len(),
        std_err: (ss_res / (n - 2.0) / sxx).sqrt(),
    })
}

/// `α, β, γ` from `A, D, E` against `N`, and `θ` from `E` against `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub alpha: ScalingFit,
    pub beta: ScalingFit,
    pub gamma: ScalingFit,
    pub theta: ScalingFit,
}

/// One `(N, A, D, E)` observation on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRow {
    pub n: f64,
    pub a: f64,
    pub d: f64,
    pub e: f64,
}

impl From<&Metrics> for GrowthRow {
    fn from(m: &Metrics) -> Self {
        GrowthRow {
            n: m.n_walkers as f64,
            a: m.activity as f64,
            d: m.diversity as f64,
            e: m.edges as f64,
        }
    }
}

/// Fits all four exponents from one set of `(N, A, D, E)` observations.
/// Observations with `A = 0` are dropped.
pub fn fit_exponents(observations: &[Metrics]) -> Result<ExponentSet> {
    let rows: Vec<GrowthRow> = observations
        .iter()
        .filter(|m| m.activity > 0)
        .map(GrowthRow::from)
        .collect();
    fit_growth_rows(&rows)
}

/// Fits `α, β, γ, θ`; each fit skips rows with a zero coordinate.
pub fn fit_growth_rows(rows: &[GrowthRow]) -> Result<ExponentSet> {
    let fit = |name: &str, f: fn(&GrowthRow) -> (f64, f64)| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(f)
            .filter(|&(x, y)| x > 0.0 && y > 0.0)
            .collect();
        fit_power_law(&pts).map_err(|e| match e {
            Error::Fit(msg) => Error::Fit(format!("{name}: {msg}")),
            other => other,
        })
    };
    Ok(ExponentSet {
        alpha: fit("alpha", |r| (r.n, r.a))?,
        beta: fit("beta", |r| (r.n, r.d))?,
        gamma: fit("gamma", |r| (r.n, r.e))?,
        theta: fit("theta", |r| (r.d, r.e))?,
    })
}

/// Everything about a sweep except the `(p, λ)` cell it runs in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub n_list: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub l_min: f64,
    pub l_max: f64,
    pub seed_origin: bool,
    pub origin_trial: bool,
    pub max_ticks: u64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            n_list: DEFAULT_N_LIST.to_vec(),
            replicates: DEFAULT_REPLICATES,
            master_seed: DEFAULT_SEED,
            l_min: DEFAULT_L_MIN,
            l_max: DEFAULT_L_MAX,
            seed_origin: true,
            origin_trial: true,
            max_ticks: DEFAULT_MAX_TICKS,
        }
    }
}

impl SweepSettings {
    /// Takes everything but `n_walkers` from `template`; its `rng_seed`
    /// becomes the master seed.
    pub fn from_template(template: &SimConfig, n_list: &[usize], replicates: usize) -> Self {
        SweepSettings {
            n_list: n_list.to_vec(),
            replicates,
            master_seed: template.rng_seed,
            l_min: template.step_law.l_min,
            l_max: template.step_law.l_max,
            seed_origin: template.seed_origin,
            origin_trial: template.origin_trial,
            max_ticks: template.max_ticks,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut distinct = self.n_list.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 4 {
            return Err(Error::param(format!(
                "N list needs at least 4 distinct sizes, got {}",
                distinct.len()
            )));
        }
        if distinct[0] == 0 {
            return Err(Error::param("N list entries must be positive"));
        }
        let span = (*distinct.last().unwrap() as f64 / distinct[0] as f64).log10();
        if span < 1.5 {
            return Err(Error::param(format!(
                "N list must span at least 1.5 decades, spans {span:.2}"
            )));
        }
        if self.replicates < 3 {
            return Err(Error::param(format!(
                "need at least 3 replicates, got {}",
                self.replicates
            )));
        }
        if self.max_ticks == 0 {
            return Err(Error::param("max_ticks must be positive"));
        }
        StepLawParams::new(LAMBDA_PROBE, self.l_min, self.l_max).map(|_| ())
    }

    fn config(&self, p: f64, lambda: f64, n_walkers: usize, rng_seed: u64) -> Result<SimConfig> {
        let cfg = SimConfig {
            n_walkers,
            p,
            step_law: StepLawParams::new(lambda, self.l_min, self.l_max)?,
            seed_origin: self.seed_origin,
            origin_trial: self.origin_trial,
            max_ticks: self.max_ticks,
            rng_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

// Any in-range exponent, used only to validate the support bounds.
const LAMBDA_PROBE: f64 = 2.0;

/// Raw outcome of one session in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: f64,
    pub lambda: f64,
    #[serde(rename = "N")]
    pub n_walkers: usize,
    pub replicate: usize,
    #[serde(rename = "A")]
    pub activity: u64,
    #[serde(rename = "D")]
    pub diversity: u64,
    #[serde(rename = "E")]
    pub edges: u64,
    pub t_end: u64,
}

impl SweepPoint {
    pub fn metrics(&self) -> Metrics {
        Metrics {
            activity: self.activity,
            diversity: self.diversity,
            edges: self.edges,
            n_walkers: self.n_walkers as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub exponents: ExponentSet,
    pub points: Vec<SweepPoint>,
}

/// Runs every `(N, replicate)` session of one grid cell. Replicate `r` at
/// size `N` in cell `(i, j)` is seeded with
/// `replicate_seed(master_seed, i, j, N, r)`.
pub fn sweep_points(
    p: f64,
    lambda: f64,
    cell: (usize, usize),
    settings: &SweepSettings,
) -> Result<Vec<SweepPoint>> {
    settings.validate()?;
    settings.config(p, lambda, 1, 0)?;
    let jobs: Vec<(usize, usize)> = settings
        .n_list
        .iter()
        .flat_map(|&n| (0..settings.replicates).map(move |r| (n, r)))
        .collect();
    jobs.par_iter()
        .map(|&(n, r)| {
            let seed = replicate_seed(settings.master_seed, cell.0, cell.1, n, r);
            let cfg = settings.config(p, lambda, n, seed)?;
            let res = run_session(&cfg)?;
            if res.truncated {
                log::warn!("session p={p} lambda={lambda} N={n} rep={r} hit max_ticks");
            }
            let m = build_network(&res.trajectories).metrics(n);
            Ok(SweepPoint {
                p,
                lambda,
                n_walkers: n,
                replicate: r,
                activity: m.activity,
                diversity: m.diversity,
                edges: m.edges,
                t_end: res.t_end,
            })
        })
        .collect()
}

fn fit_sweep(points: &[SweepPoint]) -> Result<ExponentSet> {
    if points.iter().all(|pt| pt.activity == 0) {
        return Err(Error::Sweep(
            "every session was degenerate (A = 0)".to_owned(),
        ));
    }
    let metrics: Vec<Metrics> = points.iter().map(SweepPoint::metrics).collect();
    fit_exponents(&metrics).map_err(|e| Error::Sweep(e.to_string()))
}

pub fn sweep_cell(
    p: f64,
    lambda: f64,
    cell: (usize, usize),
    settings: &SweepSettings,
) -> Result<SweepOutcome> {
    let points = sweep_points(p, lambda, cell, settings)?;
    Ok(SweepOutcome {
        exponents: fit_sweep(&points)?,
        points,
    })
}

/// Sweep at the template's `(p, λ)`, treated as grid cell `(0, 0)`.
pub fn sweep_exponents(
    template: &SimConfig,
    n_list: &[usize],
    replicates: usize,
) -> Result<SweepOutcome> {
    let settings = SweepSettings::from_template(template, n_list, replicates);
    sweep_cell(template.p, template.step_law.lambda, (0, 0), &settings)
}

/// Cell midpoints of `[0, 1]` split into ten intervals.
pub fn default_p_grid() -> Vec<f64> {
    (0..GRID_INTERVALS)
        .map(|i| (2 * i + 1) as f64 / (2 * GRID_INTERVALS) as f64)
        .collect()
}

/// Cell midpoints of `[1, 3]` split into ten intervals.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..GRID_INTERVALS)
        .map(|i| (GRID_INTERVALS + 2 * i + 1) as f64 / GRID_INTERVALS as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCell {
    pub p_index: usize,
    pub lambda_index: usize,
    pub p: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<ExponentSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceProvenance {
    pub tool_version: String,
    pub settings: SweepSettings,
}

/// Model exponents over the `(p, λ)` grid. Cells are stored p-major:
/// cell `(i, j)` sits at `i * lambda_grid.len() + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSurface {
    pub p_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub cells: Vec<SurfaceCell>,
    pub provenance: SurfaceProvenance,
}

impl ResponseSurface {
    pub fn cell(&self, p_index: usize, lambda_index: usize) -> Option<&SurfaceCell> {
        if p_index >= self.p_grid.len() || lambda_index >= self.lambda_grid.len() {
            return None;
        }
        self.cells.get(p_index * self.lambda_grid.len() + lambda_index)
    }

    pub fn failed_cells(&self) -> impl Iterator<Item = &SurfaceCell> {
        self.cells.iter().filter(|c| c.exponents.is_none())
    }

    /// Checks the shape invariants after deserialization.
    pub fn validate(&self) -> Result<()> {
        check_grid("p", &self.p_grid)?;
        check_grid("lambda", &self.lambda_grid)?;
        if self.cells.len() != self.p_grid.len() * self.lambda_grid.len() {
            return Err(Error::Schema(format!(
                "surface has {} cells for a {}x{} grid",
                self.cells.len(),
                self.p_grid.len(),
                self.lambda_grid.len()
            )));
        }
        for (k, c) in self.cells.iter().enumerate() {
            let (i, j) = (k / self.lambda_grid.len(), k % self.lambda_grid.len());
            if (c.p_index, c.lambda_index) != (i, j) {
                return Err(Error::Schema(format!("cell {k} is out of order")));
            }
            if c.exponents.is_none() == c.error.is_none() {
                return Err(Error::Schema(format!(
                    "cell ({i}, {j}) must carry exactly one of exponents or error"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let surface: ResponseSurface =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        surface.validate()?;
        Ok(surface)
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param(format!("{name} grid is empty")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceBuild {
    pub surface: ResponseSurface,
    pub points: Vec<SweepPoint>,
}

/// Sweeps every grid cell in parallel. A failing cell is recorded with its
/// error instead of aborting the surface.
pub fn build_response_surface(
    p_grid: &[f64],
    lambda_grid: &[f64],
    settings: &SweepSettings,
) -> Result<SurfaceBuild> {
    check_grid("p", p_grid)?;
    check_grid("lambda", lambda_grid)?;
    settings.validate()?;
    for &p in p_grid {
        for &lambda in lambda_grid {
            settings.config(p, lambda, 1, 0)?;
        }
    }
    let coords: Vec<(usize, usize)> = (0..p_grid.len())
        .flat_map(|i| (0..lambda_grid.len()).map(move |j| (i, j)))
        .collect();
    let outcomes: Vec<(SurfaceCell, Vec<SweepPoint>)> = coords
        .par_iter()
        .map(|&(i, j)| {
            let (p, lambda) = (p_grid[i], lambda_grid[j]);
            let mut cell = SurfaceCell {
                p_index: i,
                lambda_index: j,
                p,
                lambda,
                exponents: None,
                error: None,
            };
            let points = match sweep_points(p, lambda, (i, j), settings) {
                Ok(points) => points,
                Err(e) => {
                    cell.error = Some(e.to_string());
                    return (cell, Vec::new());
                }
            };
            match fit_sweep(&points) {
                Ok(ex) => cell.exponents = Some(ex),
                Err(e) => {
                    log::warn!("surface cell ({i}, {j}) failed: {e}");
                    cell.error = Some(e.to_string());
                }
            }
            (cell, points)
        })
        .collect();
    let mut cells = Vec::with_capacity(outcomes.len());
    let mut points = Vec::new();
    for (cell, pts) in outcomes {
        cells.push(cell);
        points.extend(pts);
    }
    Ok(SurfaceBuild {
        surface: ResponseSurface {
            p_grid: p_grid.to_vec(),
            lambda_grid: lambda_grid.to_vec(),
            cells,
            provenance: SurfaceProvenance {
                tool_version: env!("CARGO_PKG_VERSION").to_owned(),
                settings: settings.clone(),
            },
        },
        points,
    })
}

/// `p,lambda,N,replicate,A,D,E,t_end` rows with a header.
pub fn write_points_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for pt in points {
        w.serialize(pt)?;
    }
    if points.is_empty() {
        w.write_record(["p", "lambda", "N", "replicate", "A", "D", "E", "t_end"])?;
    }
    w.flush()?;
    Ok(())
}
