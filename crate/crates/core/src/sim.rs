//! Seeded Monte Carlo simulation of framed random access with CSV output.
//!
//! Two fidelities share one report format:
//!
//! * `Symbol` runs the full pipeline: sample messages, encode frames, add
//!   them on the channel, run SIC on the received symbols. Requires a
//!   materializable codebook (m in [3, 16]), which bounds the message space
//!   q = M/K and hence how much position randomness a frame can carry.
//! * `Protocol` runs the packet-level T-MPR model the asymptotic analysis
//!   is stated in: degrees are sampled from Λ, slot subsets uniformly at
//!   random, and decoding is graph peeling with the same deferred-
//!   subtraction schedule as the symbol decoder. This is the scalable path
//!   for large K and N_s.
//!
//! Every trial derives its own ChaCha12 generator from (master seed, grid
//! point, trial index), so results are bit-identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::bpr::{BprCode, DecodeBackend};
use crate::channel::transmit;
use crate::encoding::{binomial, encode_frame, IrsaDistribution};
use crate::sic::{empirical_c, per_user_errors, sic_decode};
use crate::{Error, Result};

/// Simulation fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimLevel {
    /// Full symbol-level IRSA-BPR over the adder channel.
    #[default]
    Symbol,
    /// Packet-level T-MPR peeling (no codebook).
    Protocol,
}

impl SimLevel {
    pub fn parse(s: &str) -> Result<SimLevel> {
        match s.to_ascii_lowercase().as_str() {
            "symbol" => Ok(SimLevel::Symbol),
            "protocol" => Ok(SimLevel::Protocol),
            other => Err(Error::InvalidParameter(format!(
                "unknown level '{other}', expected symbol|protocol"
            ))),
        }
    }
}

/// Full description of one simulation point.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub k: usize,
    pub ns: usize,
    /// Per-user contention probability π; the load is G = πK/N_s.
    pub pi: f64,
    pub dist: IrsaDistribution,
    pub t: usize,
    /// Codebook exponent; required at symbol level, ignored otherwise.
    pub m: Option<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub level: SimLevel,
    pub backend: DecodeBackend,
}

impl SimConfig {
    /// Average load G = πK/N_s in packets per slot.
    pub fn load(&self) -> f64 {
        self.pi * self.k as f64 / self.ns as f64
    }

    /// Contention probability realizing load G: π = G·N_s/K.
    pub fn pi_from_load(g: f64, k: usize, ns: usize) -> Result<f64> {
        if g.is_nan() || g < 0.0 || !g.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "load G={g} must be nonnegative"
            )));
        }
        let pi = g * ns as f64 / k as f64;
        if pi > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "load G={g} needs contention probability {pi:.4} > 1 at K={k}, Ns={ns}"
            )));
        }
        Ok(pi.min(1.0))
    }

    /// Hard-check the configuration and collect soft warnings (degree
    /// quantization bias, non-uniform position mapping).
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.k == 0 || self.ns == 0 {
            return Err(Error::InvalidParameter("K and Ns must be positive".into()));
        }
        if self.t == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.pi) {
            return Err(Error::InvalidParameter(format!(
                "contention probability pi={} not in [0, 1]",
                self.pi
            )));
        }
        if self.dist.max_degree() > self.ns {
            return Err(Error::InvalidParameter(format!(
                "maximum degree {} exceeds Ns={}",
                self.dist.max_degree(),
                self.ns
            )));
        }
        let mut warnings = Vec::new();
        if self.level == SimLevel::Symbol {
            let m = self.m.ok_or_else(|| {
                Error::InvalidParameter("symbol-level simulation requires m".into())
            })?;
            let code = BprCode::build(m, self.t, self.k)?;
            let q = code.messages_per_user();
            let mut cum = 0.0;
            for (d, count) in self.dist.degree_counts(q) {
                cum += self.dist.prob(d);
                let exact = q as f64 * self.dist.prob(d);
                if (count as f64 - exact).abs() > 1e-9 {
                    warnings.push(format!(
                        "degree {d}: q*Lambda_{d} = {exact} is not an integer; rounded to \
                         {count} messages (realized probability {:.6}, bias {:+.3e})",
                        count as f64 / q as f64,
                        count as f64 / q as f64 - self.dist.prob(d)
                    ));
                }
                let tuples = binomial(self.ns, d)?;
                if count > 0 && !(count as u128).is_multiple_of(tuples) {
                    warnings.push(format!(
                        "degree {d}: {count} messages do not spread evenly over C({}, {d}) = \
                         {tuples} position tuples; positions are only approximately uniform",
                        self.ns
                    ));
                }
            }
            debug_assert!((cum - 1.0).abs() < 1e-9);
        }
        Ok(warnings)
    }
}

/// Outcome of one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    /// Number of contending users K_c.
    pub contenders: usize,
    /// Messages recovered by the decoder.
    pub decoded: usize,
    /// Premature-stop flag F.
    pub premature: bool,
    /// SIC iterations spent.
    pub iterations: usize,
    /// Contending users missing from the decoded list.
    pub user_errors: usize,
    /// Whether the decoded list differs from the truth at all.
    pub frame_error: bool,
    /// Counting statistic Σ min(l_i, T) on the pre-SIC occupancy.
    pub empirical_c: usize,
}

/// Aggregate over one grid point, one row of the sweep CSV.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub g: f64,
    pub pi: f64,
    pub k: usize,
    pub ns: usize,
    pub t: usize,
    /// Codebook exponent, 0 when the point ran at protocol level without one.
    pub m: usize,
    pub trials: usize,
    /// Per-user error rate over contending users, with its 95% half-width.
    pub puer: f64,
    pub puer_ci: f64,
    /// Frame (decoding) error rate over trials, with its 95% half-width.
    pub fer: f64,
    pub fer_ci: f64,
    pub mean_iterations: f64,
    pub mean_contenders: f64,
    pub mean_c_over_ns: f64,
    pub realized_load: f64,
    pub seed: u64,
}

const Z_95: f64 = 1.96;

fn binomial_ci(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    Z_95 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Per-trial generator: ChaCha12 keyed by master seed, grid point and trial
/// index, so replays are identical across platforms and worker counts.
fn trial_rng(master_seed: u64, point: u64, trial: u64) -> ChaCha12Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&point.to_le_bytes());
    seed[16..24].copy_from_slice(&trial.to_le_bytes());
    seed[24..32].copy_from_slice(&u64::from_le_bytes(*b"IRSABPR!").to_le_bytes());
    ChaCha12Rng::from_seed(seed)
}

fn sample_degree(dist: &IrsaDistribution, rng: &mut ChaCha12Rng) -> usize {
    let r: f64 = rng.gen();
    let mut cum = 0.0;
    for (d, p) in dist.iter() {
        cum += p;
        if r < cum {
            return d;
        }
    }
    dist.max_degree()
}

fn sample_distinct_slots(d: usize, ns: usize, rng: &mut ChaCha12Rng) -> Vec<usize> {
    let mut slots: Vec<usize> = Vec::with_capacity(d);
    while slots.len() < d {
        let s = rng.gen_range(0..ns);
        if !slots.contains(&s) {
            slots.push(s);
        }
    }
    slots.sort_unstable();
    slots
}

fn run_symbol_trial(
    cfg: &SimConfig,
    code: &BprCode,
    point: u64,
    trial: u64,
) -> Result<TrialRecord> {
    let mut rng = trial_rng(cfg.master_seed, point, trial);
    let q = code.messages_per_user();
    let mut truth: Vec<(usize, usize)> = Vec::new();
    let mut codewords = Vec::with_capacity(cfg.k);
    for user in 0..cfg.k {
        let w = if rng.gen_bool(cfg.pi) {
            rng.gen_range(1..=q)
        } else {
            0
        };
        if w > 0 {
            truth.push((user, w));
        }
        codewords.push(encode_frame(code, user, w, &cfg.dist, cfg.ns)?);
    }
    let signal = transmit(&codewords)?;
    let c = empirical_c(&signal, cfg.t);
    let result = sic_decode(&signal, code, &cfg.dist, cfg.backend)?;
    let (user_errors, frame_error) = per_user_errors(&result, &truth);
    Ok(TrialRecord {
        contenders: truth.len(),
        decoded: result.messages.len(),
        premature: result.premature,
        iterations: result.iterations,
        user_errors,
        frame_error,
        empirical_c: c,
    })
}

fn run_protocol_trial(cfg: &SimConfig, point: u64, trial: u64) -> Result<TrialRecord> {
    let mut rng = trial_rng(cfg.master_seed, point, trial);
    let mut user_slots: Vec<Vec<usize>> = Vec::new();
    for _ in 0..cfg.k {
        if rng.gen_bool(cfg.pi) {
            let d = sample_degree(&cfg.dist, &mut rng);
            user_slots.push(sample_distinct_slots(d, cfg.ns, &mut rng));
        }
    }
    let kc = user_slots.len();
    let mut occupancy = vec![0usize; cfg.ns];
    for slots in &user_slots {
        for &s in slots {
            occupancy[s] += 1;
        }
    }
    let c: usize = occupancy.iter().map(|&l| l.min(cfg.t)).sum();

    // Peeling with the iteration-barrier schedule: find every user touching
    // a resolvable slot, then remove all their edges at once.
    let mut decoded = vec![false; kc];
    let mut n_decoded = 0usize;
    let mut iterations = 0usize;
    loop {
        let newly: Vec<usize> = (0..kc)
            .filter(|&u| {
                !decoded[u]
                    && user_slots[u]
                        .iter()
                        .any(|&s| occupancy[s] >= 1 && occupancy[s] <= cfg.t)
            })
            .collect();
        if newly.is_empty() {
            break;
        }
        iterations += 1;
        for &u in &newly {
            decoded[u] = true;
            n_decoded += 1;
            for &s in &user_slots[u] {
                occupancy[s] -= 1;
            }
        }
    }
    Ok(TrialRecord {
        contenders: kc,
        decoded: n_decoded,
        premature: n_decoded < kc,
        iterations,
        user_errors: kc - n_decoded,
        frame_error: n_decoded < kc,
        empirical_c: c,
    })
}

/// Run a single trial; deterministic in (master_seed, trial_index).
pub fn run_trial(cfg: &SimConfig, trial_index: u64) -> Result<TrialRecord> {
    cfg.validate()?;
    match cfg.level {
        SimLevel::Symbol => {
            let code = BprCode::build(cfg.m.unwrap(), cfg.t, cfg.k)?;
            run_symbol_trial(cfg, &code, 0, trial_index)
        }
        SimLevel::Protocol => run_protocol_trial(cfg, 0, trial_index),
    }
}

fn run_trials_at_point(cfg: &SimConfig, point: u64) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    match cfg.level {
        SimLevel::Symbol => {
            let code = BprCode::build(cfg.m.unwrap(), cfg.t, cfg.k)?;
            (0..cfg.trials as u64)
                .into_par_iter()
                .map(|trial| run_symbol_trial(cfg, &code, point, trial))
                .collect()
        }
        SimLevel::Protocol => (0..cfg.trials as u64)
            .into_par_iter()
            .map(|trial| run_protocol_trial(cfg, point, trial))
            .collect(),
    }
}

/// Run every trial of one point on the current worker pool.
pub fn run_trials(cfg: &SimConfig) -> Result<Vec<TrialRecord>> {
    run_trials_at_point(cfg, 0)
}

/// Aggregate trial records into a report row.
pub fn aggregate(cfg: &SimConfig, records: &[TrialRecord]) -> SimReport {
    let trials = records.len();
    let total_contenders: usize = records.iter().map(|r| r.contenders).sum();
    let total_user_errors: usize = records.iter().map(|r| r.user_errors).sum();
    let frame_errors: usize = records.iter().filter(|r| r.frame_error).count();
    let puer = if total_contenders > 0 {
        total_user_errors as f64 / total_contenders as f64
    } else {
        0.0
    };
    let fer = if trials > 0 {
        frame_errors as f64 / trials as f64
    } else {
        0.0
    };
    let mean = |f: &dyn Fn(&TrialRecord) -> f64| -> f64 {
        if trials == 0 {
            return f64::NAN;
        }
        records.iter().map(f).sum::<f64>() / trials as f64
    };
    let mean_contenders = mean(&|r| r.contenders as f64);
    SimReport {
        g: cfg.load(),
        pi: cfg.pi,
        k: cfg.k,
        ns: cfg.ns,
        t: cfg.t,
        m: cfg.m.unwrap_or(0),
        trials,
        puer,
        puer_ci: binomial_ci(puer, total_contenders),
        fer,
        fer_ci: binomial_ci(fer, trials),
        mean_iterations: mean(&|r| r.iterations as f64),
        mean_contenders,
        mean_c_over_ns: mean(&|r| r.empirical_c as f64 / cfg.ns as f64),
        realized_load: mean_contenders / cfg.ns as f64,
        seed: cfg.master_seed,
    }
}

/// Simulate one point and report it.
pub fn run_point(cfg: &SimConfig) -> Result<SimReport> {
    let records = run_trials(cfg)?;
    Ok(aggregate(cfg, &records))
}

/// Bit-exact CSV header shared by `simulate` and `sweep`.
pub const CSV_HEADER: &str =
    "G,pi,K,Ns,T,m,trials,puer,puer_ci,fer,fer_ci,mean_iters,mean_kc,mean_C_over_Ns,seed";

/// 10 significant digits, scientific.
fn fmt10(x: f64) -> String {
    format!("{:.9e}", x)
}

/// One CSV row for a report.
pub fn csv_row(r: &SimReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        fmt10(r.g),
        fmt10(r.pi),
        r.k,
        r.ns,
        r.t,
        r.m,
        r.trials,
        fmt10(r.puer),
        fmt10(r.puer_ci),
        fmt10(r.fer),
        fmt10(r.fer_ci),
        fmt10(r.mean_iterations),
        fmt10(r.mean_contenders),
        fmt10(r.mean_c_over_ns),
        r.seed
    )
}

/// Result of a sweep: one report per load (None for points whose
/// configuration was invalid), the CSV text, and any warnings.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub reports: Vec<Option<SimReport>>,
    pub csv: String,
    pub warnings: Vec<String>,
}

/// Sweep the load grid. Each point derives π from its G; invalid points are
/// flagged as all-NaN rows and the sweep continues. `workers` limits the
/// worker pool (None or Some(0) = default). Output bytes depend only on the
/// configuration and master seed, never on the worker count.
pub fn run_sweep(base: &SimConfig, loads: &[f64], workers: Option<usize>) -> Result<SweepOutput> {
    if loads.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep needs at least one load".into(),
        ));
    }
    match workers {
        Some(w) if w > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Numerical(format!("failed to build worker pool: {e}")))?;
            pool.install(|| sweep_inner(base, loads))
        }
        _ => sweep_inner(base, loads),
    }
}

fn sweep_inner(base: &SimConfig, loads: &[f64]) -> Result<SweepOutput> {
    let mut reports: Vec<Option<SimReport>> = Vec::with_capacity(loads.len());
    let mut warnings = Vec::new();
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for (point, &g) in loads.iter().enumerate() {
        let row = match SimConfig::pi_from_load(g, base.k, base.ns) {
            Ok(pi) => {
                let mut cfg = base.clone();
                cfg.pi = pi;
                for w in cfg.validate()? {
                    warnings.push(format!("G={g}: {w}"));
                }
                let records = run_trials_at_point(&cfg, point as u64)?;
                Some(aggregate(&cfg, &records))
            }
            Err(e) => {
                warnings.push(format!("G={g}: skipped ({e})"));
                None
            }
        };
        match row {
            Some(report) => {
                csv.push_str(&csv_row(&report));
                reports.push(Some(report));
            }
            None => {
                let nan = f64::NAN;
                csv.push_str(&format!(
                    "{},{},{},{},{},{},0,{},{},{},{},{},{},{},{}",
                    fmt10(g),
                    fmt10(nan),
                    base.k,
                    base.ns,
                    base.t,
                    base.m.unwrap_or(0),
                    fmt10(nan),
                    fmt10(nan),
                    fmt10(nan),
                    fmt10(nan),
                    fmt10(nan),
                    fmt10(nan),
                    fmt10(nan),
                    base.master_seed
                ));
                reports.push(None);
            }
        }
        csv.push('\n');
    }
    Ok(SweepOutput {
        reports,
        csv,
        warnings,
    })
}

/// A small frame with a known two-iteration resolution: 11 users of which 7
/// contend, 13 slots, T = 2, all degrees 2. Slots 0, 2, 5 and 7 start
/// resolvable; decoding them releases users 1, 5, 6 and 10, which frees
/// slots 4 and 12 and lets users 0, 3 and 8 decode in the second iteration.
#[derive(Debug)]
pub struct ReferenceScenario {
    pub code: BprCode,
    pub dist: IrsaDistribution,
    pub ns: usize,
    /// Contending (user, message) pairs.
    pub truth: Vec<(usize, usize)>,
    pub initially_resolvable: Vec<usize>,
    pub first_iteration_users: Vec<usize>,
    pub second_iteration_users: Vec<usize>,
}

/// Build the reference scenario. The messages are chosen so that the
/// combinadic position map puts each user exactly on its intended slot pair
/// (m = 10 gives M = 1023 = 93·11, so q = 93 covers every needed rank).
pub fn reference_scenario() -> Result<ReferenceScenario> {
    let code = BprCode::build(10, 2, 11)?;
    let dist = IrsaDistribution::single(2)?;
    let ns = 13;
    // Slot pairs by user: 0:(1,4) 1:(0,12) 3:(1,4) 5:(2,12) 6:(2,5)
    // 8:(1,12) 10:(4,7); message = combinadic rank of the pair + 1.
    let pairs: [(usize, (usize, usize)); 7] = [
        (0, (1, 4)),
        (1, (0, 12)),
        (3, (1, 4)),
        (5, (2, 12)),
        (6, (2, 5)),
        (8, (1, 12)),
        (10, (4, 7)),
    ];
    let mut truth = Vec::with_capacity(pairs.len());
    for (user, (a, b)) in pairs {
        let rank = binomial(a, 1)? + binomial(b, 2)?;
        truth.push((user, rank as usize + 1));
    }
    Ok(ReferenceScenario {
        code,
        dist,
        ns,
        truth,
        initially_resolvable: vec![0, 2, 5, 7],
        first_iteration_users: vec![1, 5, 6, 10],
        second_iteration_users: vec![0, 3, 8],
    })
}

impl ReferenceScenario {
    /// Encode all users (idle ones included) and return the channel output.
    pub fn received_signal(&self) -> Result<crate::channel::FrameSignal> {
        let mut messages = vec![0usize; self.code.users()];
        for &(user, w) in &self.truth {
            messages[user] = w;
        }
        let codewords: Vec<_> = (0..self.code.users())
            .map(|u| encode_frame(&self.code, u, messages[u], &self.dist, self.ns))
            .collect::<Result<_>>()?;
        transmit(&codewords)
    }

    /// Slots with 1..=T active users in a given occupancy vector.
    pub fn resolvable_slots(&self, occupancy: &[usize]) -> Vec<usize> {
        occupancy
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l >= 1 && l <= self.code.t())
            .map(|(i, _)| i)
            .collect()
    }
}
