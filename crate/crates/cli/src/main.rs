//! `mpindex` command-line front end.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 the adaptive-greedy
//! scheme hit zero marginal work, 3 invalid input or configuration,
//! 4 size guard exceeded.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mpindex::active_set::ActiveSet;
use mpindex::bandit::RestlessBandit;
use mpindex::conditions::{check_pcl_with, PclMode, PclVerdict};
use mpindex::experiments::{census, run_sweep, CensusConfig, SweepConfig, SweepReport};
use mpindex::instance::{load_instance, Instance};
use mpindex::oracle::{region_with, test_indexability_with, OracleOptions};
use mpindex::queueing;
use mpindex::reformulate::{embed_finite_horizon, embed_switching, family_horizon, family_switching};
use mpindex::setsys::{family_full, family_nested, SetSystem};
use mpindex::{adaptive_greedy, Error};

const ROUTING_HEADER: &str = "mu1,mu2,rho,optimal,mpi,jsq,ior,gap_mpi,gap_jsq,gap_ior,gain_vs_jsq,gain_vs_ior,sojourn_mpi,sojourn_jsq,sojourn_ior";
const SCHEDULING_HEADER: &str = "instance,optimal,mpi,cmu,src,gap_mpi,gap_cmu,gap_src";
const MAX_STATES_VAR: &str = "RB_MPI_MAX_STATES";

#[derive(Parser)]
#[command(name = "mpindex", version, about = "Marginal productivity indices for restless bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute indices with the adaptive-greedy scheme over a family.
    Mpi {
        instance: PathBuf,
        /// full, switching, horizon, or nested:<chain file>
        #[arg(long, default_value = "full", value_parser = parse_family)]
        family: Family,
        /// Horizon for `--family horizon`, overriding the instance file.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide indexability by brute force.
    Test { instance: PathBuf },
    /// Tabulate the achievable work-reward region.
    Region {
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count nonindexable and non-PCL random instances.
    Census(CensusArgs),
    /// Compare index policies against the optimum over a configured sweep.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Evaluate a closed-form queueing index.
    Qindex {
        #[command(subcommand)]
        which: QIndex,
    },
}

#[derive(Args)]
struct CensusArgs {
    /// State counts; repeat for several.
    #[arg(long = "n", default_values_t = [3])]
    ns: Vec<usize>,
    /// Discount factors; repeat for several.
    #[arg(long = "beta", default_values_t = [0.9])]
    betas: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A state or, with `--to`, an inclusive range of states.
#[derive(Args)]
struct Range {
    /// Last state of a range starting at the given one.
    #[arg(long)]
    to: Option<i64>,
}

#[derive(Subcommand)]
enum QIndex {
    /// M/M/1 admission control under linear holding cost.
    Admission {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        rho: f64,
        /// Customers in system.
        #[arg(long)]
        j: i64,
        #[command(flatten)]
        range: Range,
    },
    /// Make-to-stock production under linear backorder and stock costs.
    Mts {
        #[arg(long)]
        b: f64,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        rho: f64,
        /// Net backorder level.
        #[arg(long, allow_hyphen_values = true)]
        i: i64,
        /// The limiting myopic index instead.
        #[arg(long)]
        myopic: bool,
        #[command(flatten)]
        range: Range,
    },
    /// Second-order index of a pure loss-sensitive class.
    Gamma {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        rho: f64,
        /// Empty buffer spaces.
        #[arg(long)]
        i: i64,
        #[command(flatten)]
        range: Range,
    },
    /// Limiting index of a delay-sensitive class.
    Bias {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        n: usize,
        /// Customers in system.
        #[arg(long)]
        i: i64,
        #[command(flatten)]
        range: Range,
    },
}

#[derive(Clone)]
enum Family {
    Full,
    Nested(PathBuf),
    Switching,
    Horizon,
}

fn parse_family(s: &str) -> Result<Family, String> {
    match s {
        "full" => Ok(Family::Full),
        "switching" => Ok(Family::Switching),
        "horizon" => Ok(Family::Horizon),
        _ => match s.strip_prefix("nested:") {
            Some(p) if !p.is_empty() => Ok(Family::Nested(PathBuf::from(p))),
            _ => Err(format!("unknown family '{s}'; expected full, switching, horizon or nested:<file>")),
        },
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ZeroMarginalWork { .. } => 2,
            Error::Invalid(_) | Error::RowSum { .. } | Error::SetSystem(_) => 3,
            Error::SizeGuard { .. } => 4,
            Error::Numerical(_) | Error::NoConvergence { .. } => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::input(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn csv_writer(w: Box<dyn Write>) -> csv::Writer<Box<dyn Write>> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

/// Enumeration limits, optionally raised or lowered by the environment.
fn limits() -> Result<(OracleOptions, usize), Failure> {
    let max = match std::env::var(MAX_STATES_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&m| m > 0)
            .ok_or_else(|| Failure::input(format!("{MAX_STATES_VAR} must be a positive integer, got '{v}'")))?,
        Err(_) => OracleOptions::default().max_controllable,
    };
    Ok((OracleOptions { max_controllable: max }, 1usize << max.min(40)))
}

fn set_jobs(jobs: Option<usize>) -> CmdResult {
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Failure::input("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::input(e.to_string()))?;
    }
    Ok(())
}

fn set_labels(b: &RestlessBandit, s: &ActiveSet) -> String {
    let parts: Vec<String> = s.iter().map(|i| b.label(i)).collect();
    format!("{{{}}}", parts.join(","))
}

/// Reads a nested chain: a JSON array of sets of 1-based states.
fn read_chain(path: &Path) -> Result<Vec<ActiveSet>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let sets: Vec<Vec<usize>> =
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("chain file {}: {e}", path.display())))?;
    sets.into_iter()
        .map(|s| {
            if s.contains(&0) {
                return Err(Failure::input("chain files number states from 1"));
            }
            Ok(ActiveSet::from_states(s.into_iter().map(|i| i - 1)))
        })
        .collect()
}

fn pcl_line(b: &RestlessBandit, v: &PclVerdict) -> String {
    if let Some(w) = v.witness() {
        format!("PCL: fail (w_{}^{{{}}} < 0)", b.label(w.state), set_labels(b, &w.set))
    } else if v.mpi.is_none() {
        "PCL: fail (zero marginal work)".into()
    } else if !v.monotone {
        "PCL: fail (index not monotone)".into()
    } else {
        "PCL: pass".into()
    }
}

fn cmd_mpi(instance: &Path, family: &Family, horizon: Option<usize>, out: Option<&Path>) -> CmdResult {
    let inst = load_instance(instance)?;
    let (_, member_limit) = limits()?;
    let classic = |what: &str| match &inst {
        Instance::Classic { bandit, horizon } => Ok((bandit.clone(), *horizon)),
        Instance::Restless(_) => Err(Failure::input(format!("--family {what} needs a classic instance"))),
    };
    let (b, sys): (RestlessBandit, Box<dyn SetSystem>) = match family {
        Family::Full => {
            let b = inst.restless()?;
            let sys = Box::new(family_full(b.partition()));
            (b, sys)
        }
        Family::Nested(path) => (inst.restless()?, Box::new(family_nested(&read_chain(path)?)?)),
        Family::Switching => {
            let (cb, _) = classic("switching")?;
            (embed_switching(&cb)?, Box::new(family_switching(cb.n_states())))
        }
        Family::Horizon => {
            let (cb, file_horizon) = classic("horizon")?;
            let t = horizon.or(file_horizon).ok_or_else(|| Failure::input("--family horizon needs a horizon"))?;
            if t == 0 {
                return Err(Failure::input("horizon must be at least 1"));
            }
            (embed_finite_horizon(&cb, t)?, Box::new(family_horizon(cb.n_states(), t)))
        }
    };
    let r = adaptive_greedy(&b, sys.as_ref())?;
    let mut w = csv_writer(output(out)?);
    w.write_record(["rank", "state", "index", "active_set"])?;
    for (k, (&i, &v)) in r.order.iter().zip(&r.values).enumerate() {
        w.write_record([(k + 1).to_string(), b.label(i), v.to_string(), set_labels(&b, &r.family[k + 1])])?;
    }
    let mut w = w.into_inner().map_err(|e| Failure::input(e.to_string()))?;
    writeln!(w, "# family: {}", sys.describe())?;
    writeln!(w, "# monotone: {}", if r.monotone { "yes" } else { "no" })?;
    match check_pcl_with(&b, sys.as_ref(), PclMode::Exhaustive, member_limit) {
        Ok(v) => writeln!(w, "# {}", pcl_line(&b, &v))?,
        Err(Error::SizeGuard { .. }) => match &r.witness {
            Some(x) => writeln!(w, "# PCL: fail (w_{}^{{{}}} < 0)", b.label(x.state), set_labels(&b, &x.set))?,
            None => writeln!(w, "# PCL: unchecked (family too large); positive marginal work along the chain")?,
        },
        Err(e) => return Err(e.into()),
    }
    w.flush()?;
    Ok(())
}

fn cmd_test(instance: &Path) -> CmdResult {
    let b = load_instance(instance)?.restless()?;
    let (opts, member_limit) = limits()?;
    let v = test_indexability_with(&b, &opts)?;
    let mut w = output(None)?;
    if v.indexable {
        writeln!(w, "indexable")?;
        let chain: Vec<String> = v.nested_family.iter().map(|s| set_labels(&b, s)).collect();
        writeln!(w, "nested family: {}", chain.join(" < "))?;
        writeln!(w, "rank,state,index")?;
        for (k, (i, x)) in v.mpi.iter().enumerate() {
            writeln!(w, "{},{},{}", k + 1, b.label(*i), x)?;
        }
    } else {
        writeln!(w, "nonindexable")?;
        if let Some(x) = &v.witness {
            writeln!(
                w,
                "witness: minimal optimal active set {} at wage {} does not contain {} at wage {}",
                set_labels(&b, &x.set_low),
                x.wage_low,
                set_labels(&b, &x.set_high),
                x.wage_high
            )?;
        }
    }
    let borderline = v.borderline_states();
    if !borderline.is_empty() {
        let labels: Vec<String> = borderline.iter().map(|&i| b.label(i)).collect();
        writeln!(w, "borderline states: {}", labels.join(","))?;
    }
    let pcl = check_pcl_with(&b, &family_full(b.partition()), PclMode::Exhaustive, member_limit)?;
    writeln!(w, "{}", pcl_line(&b, &pcl))?;
    w.flush()?;
    Ok(())
}

fn cmd_region(instance: &Path, out: Option<&Path>) -> CmdResult {
    let b = load_instance(instance)?.restless()?;
    let (opts, _) = limits()?;
    let region = region_with(&b, &opts)?;
    let mut w = csv_writer(output(out)?);
    w.write_record(["mask", "members", "g_agg", "f_agg", "on_upper_boundary"])?;
    for (k, p) in region.points.iter().enumerate() {
        w.write_record([
            p.mask.to_string(),
            set_labels(&b, &p.set),
            p.g.to_string(),
            p.f.to_string(),
            region.on_upper_boundary(k).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_census(a: &CensusArgs) -> CmdResult {
    set_jobs(a.jobs)?;
    if let Some(beta) = a.betas.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
        return Err(Failure::input(format!("discount factor {beta} not in (0,1)")));
    }
    if a.samples == 0 {
        return Err(Failure::input("--samples must be at least 1"));
    }
    let rows = census(&CensusConfig { ns: a.ns.clone(), betas: a.betas.clone(), samples: a.samples, seed: a.seed })?;
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_sweep(config: &Path, out: Option<&Path>, jobs: Option<usize>) -> CmdResult {
    set_jobs(jobs)?;
    let text = std::fs::read_to_string(config)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", config.display())))?;
    let cfg = SweepConfig::parse(&text)?;
    let report = run_sweep(&cfg)?;
    if report.is_empty() {
        eprintln!("warning: the sweep has no points");
    }
    let mut w = csv_writer(output(out)?);
    match &report {
        SweepReport::Routing(rows) => {
            w.write_record(ROUTING_HEADER.split(','))?;
            rows.iter().try_for_each(|r| w.serialize(r))?;
        }
        SweepReport::Scheduling(rows) => {
            w.write_record(SCHEDULING_HEADER.split(','))?;
            rows.iter().try_for_each(|r| w.serialize(r))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn states(start: i64, range: &Range) -> Result<Vec<i64>, Failure> {
    match range.to {
        None => Ok(vec![start]),
        Some(end) if end >= start => Ok((start..=end).collect()),
        Some(end) => Err(Failure::input(format!("--to {end} is below the first state {start}"))),
    }
}

fn nonnegative(name: &str, x: i64) -> Result<usize, Failure> {
    usize::try_from(x).map_err(|_| Failure::input(format!("{name} must be nonnegative, got {x}")))
}

fn positive(name: &str, x: f64) -> CmdResult {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Failure::input(format!("{name} must be positive, got {x}")))
    }
}

fn cmd_qindex(q: &QIndex) -> CmdResult {
    let (name, values): (&str, Vec<(i64, f64)>) = match q {
        QIndex::Admission { c, mu, rho, j, range } => {
            positive("mu", *mu)?;
            positive("rho", *rho)?;
            let v = states(*j, range)?
                .into_iter()
                .map(|j| Ok((j, queueing::admission_index(*c, *mu, *rho, nonnegative("j", j)?))))
                .collect::<Result<_, Failure>>()?;
            ("j", v)
        }
        QIndex::Mts { b, h, mu, rho, i, myopic, range } => {
            positive("mu", *mu)?;
            let v = states(*i, range)?
                .into_iter()
                .map(|i| {
                    Ok((i, if *myopic {
                        queueing::mts_index_myopic(*b, *h, *mu, i)
                    } else {
                        queueing::mts_index_linear(*b, *h, *mu, *rho, i)?
                    }))
                })
                .collect::<Result<_, Failure>>()?;
            ("i", v)
        }
        QIndex::Gamma { r, rho, i, range } => {
            positive("rho", *rho)?;
            let v = states(*i, range)?
                .into_iter()
                .map(|i| Ok((i, queueing::second_order_mpi(*r, *rho, nonnegative("i", i)?))))
                .collect::<Result<_, Failure>>()?;
            ("i", v)
        }
        QIndex::Bias { c, r, mu, rho, n, i, range } => {
            positive("mu", *mu)?;
            positive("rho", *rho)?;
            let v = states(*i, range)?
                .into_iter()
                .map(|i| Ok((i, queueing::bias_mpi(*c, *r, *mu, *rho, *n, nonnegative("i", i)?)?)))
                .collect::<Result<_, Failure>>()?;
            ("i", v)
        }
    };
    let mut w = output(None)?;
    if let [(_, v)] = values.as_slice() {
        writeln!(w, "{v}")?;
    } else {
        writeln!(w, "{name},index")?;
        for (s, v) in values {
            writeln!(w, "{s},{v}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Mpi { instance, family, horizon, out } => cmd_mpi(instance, family, *horizon, out.as_deref()),
        Command::Test { instance } => cmd_test(instance),
        Command::Region { instance, out } => cmd_region(instance, out.as_deref()),
        Command::Census(a) => cmd_census(a),
        Command::Sweep { config, out, jobs } => cmd_sweep(config, out.as_deref(), *jobs),
        Command::Qindex { which } => cmd_qindex(which),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
