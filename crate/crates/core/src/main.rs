//! Command-line front end: thresholds, bounds, simulation, sweeps, selftest.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use irsa_bpr::asymptotics::{
    achievable_sum_rate, codebook_exponent, converse_g, converse_sum_rate, load_threshold,
    BoundConfig, Scheme,
};
use irsa_bpr::bpr::{BlockObservation, BprCode, DecodeBackend};
use irsa_bpr::channel::slot_occupancy;
use irsa_bpr::encoding::IrsaDistribution;
use irsa_bpr::sic::sic_decode;
use irsa_bpr::sim::{
    csv_row, reference_scenario, run_point, run_sweep, SimConfig, SimLevel, CSV_HEADER,
};
use irsa_bpr::Error;

#[derive(Parser)]
#[command(
    name = "irsa-bpr",
    about = "IRSA-BPR coded random access: thresholds, sum-rate bounds and Monte Carlo simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density-evolution load threshold G*(Lambda, T)
    Threshold(ThresholdArgs),
    /// Converse load limit and sum-rate bound for an access scheme
    Bounds(BoundsArgs),
    /// Monte Carlo simulation at a single load
    Simulate(SimArgs),
    /// Monte Carlo sweep over a grid of loads, CSV per point
    Sweep(SweepArgs),
    /// Built-in consistency checks (zero-error codebook, reference trace)
    Selftest,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Degree distribution, e.g. 3:1.0 or 2:0.5,3:0.5
    #[arg(long)]
    dist: String,
    #[arg(long = "T", default_value_t = 1)]
    t: usize,
    /// Bracket width for the bisection on G
    #[arg(long = "tol-g", default_value_t = 1e-4)]
    tol_g: f64,
    /// Codebook exponent; also prints the achievable sum-rate bound
    #[arg(long)]
    eps: Option<f64>,
    /// Write the CSV line to this file as well
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// coordinated | irsa | mixed
    #[arg(long)]
    scheme: String,
    #[arg(long = "T", default_value_t = 1)]
    t: usize,
    #[arg(long)]
    eps: f64,
    /// IRSA efficiency eta = 1/Lambda'(1)
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// High-priority user fraction (mixed scheme)
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    /// Reserved slot fraction (mixed scheme)
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Flags shared by `simulate` and `sweep`; every value may also come from a
/// `key=value` config file, with the command line taking precedence.
#[derive(Args, Clone, Default)]
struct SimArgs {
    /// Flat key=value config file (keys match the long flag names)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "Ns")]
    ns: Option<usize>,
    /// Contention probability (alternative to --G)
    #[arg(long)]
    pi: Option<f64>,
    /// Channel load in packets/slot (alternative to --pi)
    #[arg(long = "G")]
    g: Option<f64>,
    #[arg(long)]
    dist: Option<String>,
    #[arg(long = "T")]
    t: Option<usize>,
    /// Codebook exponent m (alternative to --eps)
    #[arg(long)]
    m: Option<usize>,
    /// Target epsilon; m is the smallest integer with m >= (1/eps) log2 K
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// symbol | protocol (default: symbol when m or eps is given)
    #[arg(long)]
    level: Option<String>,
    /// Block decoder: subset | syndrome
    #[arg(long)]
    backend: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Comma-separated loads, e.g. 0.2,0.4,0.6,0.8
    #[arg(long = "g-list")]
    g_list: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Threshold(args) => cmd_threshold(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidParameter(_) => ExitCode::from(1),
                Error::Inconsistent(_) | Error::Numerical(_) => ExitCode::from(2),
            }
        }
    }
}

fn cmd_threshold(args: ThresholdArgs) -> Result<(), Error> {
    let dist = IrsaDistribution::parse(&args.dist)?;
    let g_star = load_threshold(&dist, args.t, args.tol_g)?;
    let eta = dist.efficiency();
    println!("distribution : {dist}");
    println!("T            : {}", args.t);
    println!("eta          : {eta:.10}");
    println!("G*           : {g_star:.10}");
    if let Some(eps) = args.eps {
        let bound = achievable_sum_rate(&dist, args.t, eps)?;
        println!("achievable R_sum (eps={eps}) : {bound:.10}");
    }
    let csv = format!(
        "dist,T,eta,G_star\n\"{dist}\",{},{eta:.10},{g_star:.10}\n",
        args.t
    );
    print!("{csv}");
    write_out(args.out.as_deref(), &csv)?;
    Ok(())
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), Error> {
    let scheme = Scheme::parse(&args.scheme)?;
    let cfg = BoundConfig::new(args.eps, args.t, args.eta, args.nu, args.gamma)?;
    let outcome = converse_g(scheme, cfg.eta, cfg.t, cfg.nu, cfg.gamma, args.tol)?;
    if outcome.sign_changes > 1 {
        eprintln!(
            "warning: {} sign changes on the scan; reported the largest crossing",
            outcome.sign_changes
        );
    }
    let bound = converse_sum_rate(outcome.g, args.eps, args.t);
    println!("scheme       : {}", scheme.name());
    println!("G (converse) : {:.10}", outcome.g);
    println!("R_sum bound  : {bound:.10}");
    let csv = format!(
        "T,scheme,eta,nu,gamma,eps,G_converse,Rsum_bound\n{},{},{},{},{},{},{:.10},{:.10}\n",
        args.t,
        scheme.name(),
        args.eta,
        args.nu,
        args.gamma,
        args.eps,
        outcome.g,
        bound
    );
    print!("{csv}");
    write_out(args.out.as_deref(), &csv)?;
    Ok(())
}

fn cmd_simulate(args: SimArgs) -> Result<(), Error> {
    let resolved = resolve_sim_config(args.clone(), false)?;
    let cfg = resolved.config;
    for w in cfg.validate()? {
        eprintln!("warning: {w}");
    }
    if let Some(realized) = resolved.realized_eps {
        eprintln!(
            "note: eps realized by m={} is {:.6}",
            cfg.m.unwrap_or(0),
            realized
        );
    }
    println!(
        "K={} Ns={} pi={:.10} G={:.10} T={} trials={} seed={}",
        cfg.k,
        cfg.ns,
        cfg.pi,
        cfg.load(),
        cfg.t,
        cfg.trials,
        cfg.master_seed
    );
    let report = match resolved.workers {
        Some(w) if w > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Numerical(format!("failed to build worker pool: {e}")))?
            .install(|| run_point(&cfg)),
        _ => run_point(&cfg),
    }?;
    let csv = format!("{CSV_HEADER}\n{}\n", csv_row(&report));
    print!("{csv}");
    write_out(resolved.out.as_deref(), &csv)?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    let file = load_config_file(args.sim.config.as_deref())?;
    let g_list_raw = args
        .g_list
        .or_else(|| file.get("g-list").or_else(|| file.get("g_list")).cloned())
        .ok_or_else(|| Error::InvalidParameter("sweep requires --g-list".into()))?;
    let loads = g_list_raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad load '{s}' in --g-list")))
        })
        .collect::<Result<Vec<f64>, Error>>()?;
    let resolved = resolve_sim_config(args.sim, true)?;
    let out = run_sweep(&resolved.config, &loads, resolved.workers)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", out.csv);
    write_out(resolved.out.as_deref(), &out.csv)?;
    Ok(())
}

fn cmd_selftest() -> Result<(), Error> {
    let mut failures = 0usize;
    let mut check = |name: &str, pass: bool| {
        println!("{} {name}", if pass { "[pass]" } else { "[FAIL]" });
        if !pass {
            failures += 1;
        }
    };

    // Zero-error property of the (4, 2, 5) codebook: all 121 subsets of at
    // most 2 columns have distinct sums and decode back to themselves.
    let code = BprCode::build(4, 2, 5)?;
    let mut sums = std::collections::HashSet::new();
    let mut subsets: Vec<Vec<usize>> = vec![vec![]];
    for a in 0..code.num_columns() {
        subsets.push(vec![a]);
        for b in (a + 1)..code.num_columns() {
            subsets.push(vec![a, b]);
        }
    }
    check(
        "codebook has 121 subsets of size at most 2",
        subsets.len() == 121,
    );
    let mut distinct = true;
    let mut inverted = true;
    for subset in &subsets {
        let mut sum = vec![0u32; code.codeword_len()];
        for &j in subset {
            for (s, &b) in sum.iter_mut().zip(code.column(j).iter()) {
                *s += b as u32;
            }
        }
        distinct &= sums.insert(sum.clone());
        let obs = BlockObservation {
            sum,
            active_count: subset.len(),
        };
        let decoded = code.decode_block(&obs, DecodeBackend::SubsetSearch)?;
        let expected: Vec<(usize, usize)> = subset
            .iter()
            .map(|&j| (code.user_of_column(j), code.message_of_column(j)))
            .collect();
        inverted &= decoded == expected;
    }
    check("all subset sums are distinct", distinct);
    check("block decoding inverts every subset", inverted);

    // Reference frame: a known configuration that resolves in two
    // iterations with fixed per-iteration user sets.
    let scenario = reference_scenario()?;
    let signal = scenario.received_signal()?;
    let occupancy = slot_occupancy(&signal);
    check(
        "initially resolvable slots are 0, 2, 5, 7",
        scenario.resolvable_slots(&occupancy) == scenario.initially_resolvable,
    );
    let result = sic_decode(
        &signal,
        &scenario.code,
        &scenario.dist,
        DecodeBackend::SubsetSearch,
    )?;
    check("reference frame decodes completely", !result.premature);
    check(
        "reference frame takes exactly 2 iterations",
        result.iterations == 2,
    );
    check(
        "first iteration decodes users 1, 5, 6, 10",
        result.users_in_iteration(1) == scenario.first_iteration_users,
    );
    check(
        "second iteration decodes users 0, 3, 8",
        result.users_in_iteration(2) == scenario.second_iteration_users,
    );

    if failures > 0 {
        Err(Error::Numerical(format!(
            "selftest: {failures} check(s) failed"
        )))
    } else {
        println!("selftest: all checks passed");
        Ok(())
    }
}

struct ResolvedSim {
    config: SimConfig,
    workers: Option<usize>,
    out: Option<PathBuf>,
    realized_eps: Option<f64>,
}

/// Merge config file and flags, then resolve the load and codebook exponent.
/// For sweeps the load comes from the grid, so pi/G may be absent.
fn resolve_sim_config(mut args: SimArgs, load_from_grid: bool) -> Result<ResolvedSim, Error> {
    let file = load_config_file(args.config.as_deref())?;
    merge_file(&mut args, &file)?;

    let k = args.k.ok_or_else(|| missing("--K"))?;
    let ns = args.ns.ok_or_else(|| missing("--Ns"))?;
    let dist = IrsaDistribution::parse(&args.dist.ok_or_else(|| missing("--dist"))?)?;
    let t = args.t.unwrap_or(1);
    let trials = args.trials.unwrap_or(1000);
    let seed = args.seed.unwrap_or(1);

    let pi = match (args.pi, args.g, load_from_grid) {
        (Some(_), Some(_), _) => {
            return Err(Error::InvalidParameter(
                "--pi and --G are mutually exclusive".into(),
            ))
        }
        (Some(pi), None, _) => pi,
        (None, Some(g), _) => SimConfig::pi_from_load(g, k, ns)?,
        (None, None, true) => 0.0,
        (None, None, false) => {
            return Err(Error::InvalidParameter(
                "one of --pi or --G is required".into(),
            ))
        }
    };

    let mut realized_eps = None;
    let m = match (args.m, args.eps) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidParameter(
                "--m and --eps are mutually exclusive".into(),
            ))
        }
        (Some(m), None) => Some(m),
        (None, Some(eps)) => {
            let (m, realized) = codebook_exponent(k, eps)?;
            realized_eps = Some(realized);
            Some(m)
        }
        (None, None) => None,
    };

    let level = match args.level.as_deref() {
        Some(s) => SimLevel::parse(s)?,
        None => {
            if m.is_some() {
                SimLevel::Symbol
            } else {
                SimLevel::Protocol
            }
        }
    };
    let backend = match args.backend.as_deref() {
        None | Some("subset") => DecodeBackend::SubsetSearch,
        Some("syndrome") => DecodeBackend::Syndrome,
        Some(other) => {
            return Err(Error::InvalidParameter(format!(
                "unknown backend '{other}', expected subset|syndrome"
            )))
        }
    };

    Ok(ResolvedSim {
        config: SimConfig {
            k,
            ns,
            pi,
            dist,
            t,
            m,
            trials,
            master_seed: seed,
            level,
            backend,
        },
        workers: args.workers,
        out: args.out,
        realized_eps,
    })
}

fn missing(flag: &str) -> Error {
    Error::InvalidParameter(format!("{flag} is required (flag or config file)"))
}

fn load_config_file(path: Option<&Path>) -> Result<HashMap<String, String>, Error> {
    let mut map = HashMap::new();
    let Some(path) = path else {
        return Ok(map);
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::InvalidParameter(format!("cannot read config {}: {e}", path.display()))
    })?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidParameter(format!(
                "{}:{}: expected key=value",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn merge_file(args: &mut SimArgs, file: &HashMap<String, String>) -> Result<(), Error> {
    fn fill<T: std::str::FromStr>(
        slot: &mut Option<T>,
        file: &HashMap<String, String>,
        key: &str,
    ) -> Result<(), Error> {
        if slot.is_none() {
            if let Some(raw) = file.get(key) {
                let parsed = raw.parse::<T>().map_err(|_| {
                    Error::InvalidParameter(format!("config key {key}: bad value '{raw}'"))
                })?;
                *slot = Some(parsed);
            }
        }
        Ok(())
    }
    fill(&mut args.k, file, "K")?;
    fill(&mut args.ns, file, "Ns")?;
    fill(&mut args.pi, file, "pi")?;
    fill(&mut args.g, file, "G")?;
    fill(&mut args.dist, file, "dist")?;
    fill(&mut args.t, file, "T")?;
    fill(&mut args.m, file, "m")?;
    fill(&mut args.eps, file, "eps")?;
    fill(&mut args.trials, file, "trials")?;
    fill(&mut args.seed, file, "seed")?;
    fill(&mut args.workers, file, "workers")?;
    fill(&mut args.level, file, "level")?;
    fill(&mut args.backend, file, "backend")?;
    if args.out.is_none() {
        if let Some(raw) = file.get("out") {
            args.out = Some(PathBuf::from(raw));
        }
    }
    Ok(())
}

fn write_out(path: Option<&Path>, csv: &str) -> Result<(), Error> {
    if let Some(path) = path {
        std::fs::write(path, csv).map_err(|e| {
            Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))
        })?;
    }
    Ok(())
}
