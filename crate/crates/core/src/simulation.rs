//! One session of N interacting walkers, plus replicate seeding.
//!
//! Tick `t` runs in three phases so the outcome does not depend on walker
//! order within the tick:
//!
//! 1. every surviving walker checks its cell against the counts left by
//!    tick `t - 1`; a walker on an empty cell exits for good;
//! 2. every survivor records its cell and jumps;
//! 3. every walker that jumped deposits one unit at its arrival cell with
//!    probability `p`, and all of these deposits land together.
//!
//! Before tick 0 the origin is optionally seeded with one unit, and each
//! walker optionally makes a deposit trial at the origin as if it had just
//! arrived there.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interest_space::{InterestSpace, LatticePoint};
use crate::levy_sampler::{sample_displacement, StepLawParams};

pub const DEFAULT_MAX_TICKS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_walkers: usize,
    pub p: f64,
    pub step_law: StepLawParams,
    pub seed_origin: bool,
    /// Deposit trial at the origin for each walker before tick 0.
    pub origin_trial: bool,
    pub max_ticks: u64,
    pub rng_seed: u64,
}

impl SimConfig {
    pub fn new(n_walkers: usize, p: f64, lambda: f64, rng_seed: u64) -> Result<Self> {
        let cfg = SimConfig {
            n_walkers,
            p,
            step_law: StepLawParams::with_lambda(lambda)?,
            seed_origin: true,
            origin_trial: true,
            max_ticks: DEFAULT_MAX_TICKS,
            rng_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_walkers == 0 {
            return Err(Error::param("n_walkers must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::param(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if self.max_ticks == 0 {
            return Err(Error::param("max_ticks must be positive"));
        }
        self.step_law.validate()
    }
}

/// Active sites a walker jumped from, in visit order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory(pub Vec<LatticePoint>);

impl Trajectory {
    pub fn sites(&self) -> &[LatticePoint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub trajectories: Vec<Trajectory>,
    pub space: InterestSpace,
    pub t_end: u64,
    pub truncated: bool,
}

pub fn run_session(cfg: &SimConfig) -> Result<SessionResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut space = InterestSpace::new();
    let mut trajectories = vec![Trajectory::default(); cfg.n_walkers];

    if cfg.seed_origin {
        space.deposit(LatticePoint::ORIGIN);
    }
    if cfg.origin_trial {
        for _ in 0..cfg.n_walkers {
            if rng.gen_bool(cfg.p) {
                space.deposit(LatticePoint::ORIGIN);
            }
        }
    }

    // (walker id, current cell)
    let mut alive: Vec<(usize, LatticePoint)> =
        (0..cfg.n_walkers).map(|i| (i, LatticePoint::ORIGIN)).collect();
    let mut pending = Vec::with_capacity(cfg.n_walkers);

    for tick in 0..cfg.max_ticks {
        alive.retain(|&(_, at)| space.is_active(at));
        if alive.is_empty() {
            return Ok(SessionResult {
                trajectories,
                space,
                t_end: tick,
                truncated: false,
            });
        }
        for (id, at) in alive.iter_mut() {
            trajectories[*id].0.push(*at);
            *at = at.offset(sample_displacement(&mut rng, &cfg.step_law));
            if rng.gen_bool(cfg.p) {
                pending.push(*at);
            }
        }
        for at in pending.drain(..) {
            space.deposit(at);
        }
    }

    Ok(SessionResult {
        trajectories,
        space,
        t_end: cfg.max_ticks,
        truncated: true,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream seed for one replicate of one sweep cell. Stable across
/// platforms and releases so that sweeps can be rerun from their manifest.
pub fn replicate_seed(
    master: u64,
    p_index: usize,
    lambda_index: usize,
    n_walkers: usize,
    replicate: usize,
) -> u64 {
    [p_index as u64, lambda_index as u64, n_walkers as u64, replicate as u64]
        .into_iter()
        .fold(splitmix64(master), |h, part| splitmix64(h ^ splitmix64(part)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeStat {
    pub n_walkers: usize,
    pub mean_t_end: f64,
    pub t_ends: Vec<u64>,
}

/// Mean termination tick per N over `replicates` independently seeded
/// sessions. Replicate `r` at size `N` uses
/// `replicate_seed(template.rng_seed, 0, 0, N, r)`.
pub fn simulate_lifetimes(
    template: &SimConfig,
    n_list: &[usize],
    replicates: usize,
) -> Result<Vec<LifetimeStat>> {
    template.validate()?;
    if replicates == 0 {
        return Err(Error::param("replicates must be at least 1"));
    }
    let jobs: Vec<(usize, usize)> = n_list
        .iter()
        .flat_map(|&n| (0..replicates).map(move |r| (n, r)))
        .collect();
    let t_ends = jobs
        .par_iter()
        .map(|&(n, r)| {
            let cfg = SimConfig {
                n_walkers: n,
                rng_seed: replicate_seed(template.rng_seed, 0, 0, n, r),
                ..*template
            };
            run_session(&cfg).map(|res| res.t_end)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(n_list
        .iter()
        .zip(t_ends.chunks(replicates))
        .map(|(&n, chunk)| LifetimeStat {
            n_walkers: n,
            mean_t_end: chunk.iter().sum::<u64>() as f64 / chunk.len() as f64,
            t_ends: chunk.to_vec(),
        })
        .collect())
}

#[derive(Serialize)]
struct HeaderRecord<'a> {
    record: &'static str,
    config: &'a SimConfig,
    t_end: u64,
    truncated: bool,
    n_active: usize,
}

#[derive(Serialize)]
struct WalkerRecord {
    walker_id: usize,
    trajectory: Vec<[i64; 2]>,
}

/// JSON-lines export: a header record, then one record per walker.
pub fn write_session_jsonl<W: Write>(
    cfg: &SimConfig,
    result: &SessionResult,
    mut out: W,
) -> Result<()> {
    let header = HeaderRecord {
        record: "header",
        config: cfg,
        t_end: result.t_end,
        truncated: result.truncated,
        n_active: result.space.n_active(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for (walker_id, traj) in result.trajectories.iter().enumerate() {
        let rec = WalkerRecord {
            walker_id,
            trajectory: traj.sites().iter().map(|p| [p.x, p.y]).collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, p: f64, seed: u64) -> SimConfig {
        SimConfig::new(n, p, 2.0, seed).unwrap()
    }

    #[test]
    fn no_resources_means_immediate_exit() {
        for n in [1, 7, 100] {
            let c = SimConfig {
                seed_origin: false,
                ..cfg(n, 0.0, 3)
            };
            let res = run_session(&c).unwrap();
            assert_eq!(res.t_end, 0);
            assert!(!res.truncated);
            assert!(res.trajectories.iter().all(Trajectory::is_empty));
            assert_eq!(res.trajectories.len(), n);
        }
    }

    #[test]
    fn certain_deposit_never_terminates() {
        let c = SimConfig {
            max_ticks: 500,
            ..cfg(1, 1.0, 9)
        };
        let res = run_session(&c).unwrap();
        assert!(res.truncated);
        assert_eq!(res.t_end, 500);
        assert_eq!(res.trajectories[0].len(), 500);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let c = cfg(2, 0.5, 42);
        let a = run_session(&c).unwrap();
        let b = run_session(&c).unwrap();
        assert_eq!(a, b);
        let mut ja = Vec::new();
        let mut jb = Vec::new();
        write_session_jsonl(&c, &a, &mut ja).unwrap();
        write_session_jsonl(&c, &b, &mut jb).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn trajectories_visit_only_active_sites() {
        // deposits only grow counts, so the final space witnesses activity
        for seed in 0..20 {
            let res = run_session(&cfg(30, 0.4, seed)).unwrap();
            for t in &res.trajectories {
                assert!(t.sites().iter().all(|&x| res.space.count(x) >= 1));
                assert_eq!(t.sites().first(), Some(&LatticePoint::ORIGIN));
            }
        }
    }

    #[test]
    fn walker_lifetimes_bounded_by_t_end() {
        let res = run_session(&cfg(50, 0.5, 5)).unwrap();
        let longest = res.trajectories.iter().map(Trajectory::len).max().unwrap();
        assert_eq!(longest as u64, res.t_end);
    }

    #[test]
    fn replicate_seeds_differ() {
        let a = replicate_seed(1, 0, 0, 64, 0);
        assert_eq!(a, replicate_seed(1, 0, 0, 64, 0));
        assert_ne!(a, replicate_seed(1, 0, 0, 64, 1));
        assert_ne!(a, replicate_seed(1, 0, 0, 128, 0));
        assert_ne!(a, replicate_seed(1, 1, 0, 64, 0));
        assert_ne!(a, replicate_seed(1, 0, 1, 64, 0));
        assert_ne!(a, replicate_seed(2, 0, 0, 64, 0));
    }

    #[test]
    fn lifetimes_zero_without_resources() {
        let t = SimConfig {
            seed_origin: false,
            ..cfg(1, 0.0, 0)
        };
        let stats = simulate_lifetimes(&t, &[1, 4], 3).unwrap();
        assert!(stats.iter().all(|s| s.mean_t_end == 0.0));
        assert_eq!(stats, simulate_lifetimes(&t, &[1, 4], 3).unwrap());
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(SimConfig::new(0, 0.5, 2.0, 0).is_err());
        assert!(SimConfig::new(1, 1.5, 2.0, 0).is_err());
        assert!(SimConfig::new(1, 0.5, 0.2, 0).is_err());
    }

    #[test]
    fn jsonl_layout() {
        let c = cfg(3, 0.5, 1);
        let res = run_session(&c).unwrap();
        let mut buf = Vec::new();
        write_session_jsonl(&c, &res, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        let header: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(header["record"], "header");
        assert_eq!(header["t_end"], res.t_end);
        let w: serde_json::Value = serde_json::from_str(lines[2]).unwrap();
        assert_eq!(w["walker_id"], 1);
        assert_eq!(w["trajectory"][0], serde_json::json!([0, 0]));
    }
}
