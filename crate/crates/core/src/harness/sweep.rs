use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blowup::estimate_from_trace;
use crate::diagnostics::{intersection_series, Reference, DEFAULT_ZERO_TOL};
use crate::model::{FlowParams, InitialData, Metric};
use crate::pde::{run_flow, StopReason, StopRule, TimeStepperConfig};
use crate::steady::theta_threshold;

use super::run::RunOutcome;

/// Initial data used across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataFamily {
    /// `theta_0 = b r / R`.
    Linear,
    /// Linear data plus uniform noise of amplitude `amplitude` at `knots`
    /// equally spaced interior points, drawn from `seed` and the index of
    /// `b` in the grid.
    Perturbed { seed: u64, knots: usize, amplitude: f64 },
}

impl DataFamily {
    fn params(&self, m: u32, b: f64, index: usize) -> FlowParams {
        match *self {
            DataFamily::Linear => FlowParams::flat_linear(m, 1.0, b),
            DataFamily::Perturbed { seed, knots, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64));
                let r: Vec<f64> = (0..=knots + 1).map(|i| i as f64 / (knots + 1) as f64).collect();
                let theta = r
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| if i == 0 || i == knots + 1 { b * x } else { b * x + amplitude * rng.gen_range(-1.0..1.0) })
                    .collect();
                FlowParams { m, radius: 1.0, b, metric: Metric::Flat, initial_data: InitialData::Tabulated { r, theta } }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub b: f64,
    pub outcome: RunOutcome,
    pub stop_reason: StopReason,
    pub omega_hat: Option<f64>,
    pub final_time: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub m: u32,
    pub family: DataFamily,
    pub rows: Vec<SweepRow>,
    /// Largest `b` whose run reached a steady state.
    pub b_global_max: Option<f64>,
    /// Smallest `b` whose run resolved a blowup.
    pub b_blowup_min: Option<f64>,
    pub half_pi: f64,
    /// `theta_m` for `3 <= m < 7`.
    pub theta_m: Option<f64>,
}

impl SweepTable {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["b", "outcome", "omega_hat", "final_time", "steps"])?;
        for r in &self.rows {
            let outcome = serde_json::to_value(r.outcome).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            w.write_record([
                format!("{:e}", r.b),
                outcome,
                r.omega_hat.map(|o| format!("{o:e}")).unwrap_or_default(),
                format!("{:e}", r.final_time),
                r.steps.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool")
}

/// Runs one flow per boundary value under identical settings and brackets
/// the global existence / blowup boundary. Rows keep the order of `b_grid`.
pub fn sweep_boundary_map(
    m: u32,
    b_grid: &[f64],
    family: DataFamily,
    config: &TimeStepperConfig,
    stop: StopRule,
    jobs: usize,
) -> SweepTable {
    let rows: Vec<SweepRow> = pool(jobs).install(|| {
        b_grid
            .par_iter()
            .enumerate()
            .map(|(i, &b)| match run_flow(&family.params(m, b, i), config, &stop) {
                Ok(tr) => {
                    let outcome = match tr.stop_reason {
                        StopReason::Steady => RunOutcome::GlobalExistence,
                        StopReason::GradientThreshold => RunOutcome::BlowupResolved,
                        StopReason::TimeReached => RunOutcome::TimeReached,
                        StopReason::Degenerate => RunOutcome::Degenerate,
                        _ => RunOutcome::SolverFailure,
                    };
                    let omega_hat = (outcome == RunOutcome::BlowupResolved)
                        .then(|| estimate_from_trace(&tr).ok().map(|f| f.omega))
                        .flatten()
                        .filter(|o| *o > tr.final_time());
                    SweepRow { b, outcome, omega_hat, final_time: tr.final_time(), steps: tr.monitors.len(), stop_reason: tr.stop_reason }
                }
                Err(e) => SweepRow {
                    b,
                    outcome: RunOutcome::SolverFailure,
                    stop_reason: StopReason::Failed(e.to_string()),
                    omega_hat: None,
                    final_time: 0.0,
                    steps: 0,
                },
            })
            .collect()
    });
    let pick = |o: RunOutcome| rows.iter().filter(move |r| r.outcome == o).map(|r| r.b.abs());
    SweepTable {
        m,
        family,
        b_global_max: pick(RunOutcome::GlobalExistence).reduce(f64::max),
        b_blowup_min: pick(RunOutcome::BlowupResolved).reduce(f64::min),
        rows,
        half_pi: FRAC_PI_2,
        theta_m: theta_threshold(m, 1e-11).ok(),
    }
}

/// Intersection count series of one random pair of solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub m: u32,
    pub b: f64,
    pub times: usize,
    pub counts: Vec<Option<usize>>,
    pub non_increasing: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSuite {
    pub seed: u64,
    pub pairs: Vec<PairResult>,
}

impl PairSuite {
    /// Fraction of pairs whose intersection number never increased.
    pub fn fraction_non_increasing(&self) -> f64 {
        let ok = self.pairs.iter().filter(|p| p.non_increasing && p.error.is_none()).count();
        ok as f64 / self.pairs.len().max(1) as f64
    }
}

fn random_data(rng: &mut ChaCha8Rng, m: u32, b: f64) -> FlowParams {
    let knots = rng.gen_range(2..6);
    let mut r = vec![0.0];
    let mut theta = vec![0.0];
    for i in 1..=knots {
        r.push(i as f64 / (knots + 1) as f64);
        theta.push(rng.gen_range(-1.0..b + 1.0));
    }
    r.push(1.0);
    theta.push(b);
    FlowParams { m, radius: 1.0, b, metric: Metric::Flat, initial_data: InitialData::Tabulated { r, theta } }
}

/// `count` pairs of solutions with shared `m in {3, 5}` and boundary value
/// `b in [0.2, 1.5)` but independent random data, compared through their
/// intersection number at `snapshot_times` (which `config` is made to hit).
pub fn random_pair_suite(seed: u64, count: usize, config: &TimeStepperConfig, snapshot_times: &[f64], jobs: usize) -> PairSuite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<(FlowParams, FlowParams)> = (0..count)
        .map(|k| {
            let m = [3, 5][k % 2];
            let b = rng.gen_range(0.2..1.5);
            (random_data(&mut rng, m, b), random_data(&mut rng, m, b))
        })
        .collect();
    let mut cfg = config.clone();
    cfg.snapshots.times = snapshot_times.to_vec();
    let t_end = snapshot_times.iter().copied().fold(0.0, f64::max);
    let stop = StopRule { t_end, m_stop: Some(1e3), steady_tol: None };
    let pairs = pool(jobs).install(|| {
        inputs
            .par_iter()
            .map(|(a, c)| {
                let mut res = PairResult { m: a.m, b: a.b, times: 0, counts: Vec::new(), non_increasing: false, error: None };
                match (run_flow(a, &cfg, &stop), run_flow(c, &cfg, &stop)) {
                    (Ok(ta), Ok(tc)) => {
                        let z = intersection_series(&ta, Reference::Trace(&tc), DEFAULT_ZERO_TOL);
                        res.times = z.times.len();
                        res.non_increasing = z.is_non_increasing();
                        res.counts = z.counts;
                    }
                    (Err(e), _) | (_, Err(e)) => res.error = Some(e.to_string()),
                }
                res
            })
            .collect()
    });
    PairSuite { seed, pairs }
}
