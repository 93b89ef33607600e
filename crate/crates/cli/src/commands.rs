//! Subcommand implementations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use espopt::auction::{Dataset, GridMode, ReserveGrid};
use espopt::io::Format;
use espopt::{Error, Result};

/// Dataset format from an explicit flag or the file extension.
fn dataset_format(path: &Path, explicit: Option<&str>) -> Result<Format> {
    if let Some(name) = explicit {
        return name.parse();
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        other => Err(Error::InvalidArgument(format!(
            "cannot infer dataset format from extension {other:?}; pass --format"
        ))),
    }
}

fn load_dataset(path: &Path, explicit: Option<&str>) -> Result<Dataset> {
    let format = dataset_format(path, explicit)?;
    espopt::io::parse_dataset(BufReader::new(File::open(path)?), format)
}

/// `own`, `shared`, or `spaced:<count>`.
#[derive(Clone, Debug)]
pub struct GridFlag(pub GridMode);

impl FromStr for GridFlag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<GridFlag, String> {
        if s == "own" {
            Ok(GridFlag(GridMode::OwnBids))
        } else if s == "shared" {
            Ok(GridFlag(GridMode::SharedBids))
        } else if let Some(count) = s.strip_prefix("spaced:") {
            count
                .parse::<usize>()
                .map(|c| GridFlag(GridMode::EquallySpaced(c)))
                .map_err(|e| format!("bad grid point count: {e}"))
        } else {
            Err(format!(
                "unknown grid mode {s:?} (expected own, shared, or spaced:<count>)"
            ))
        }
    }
}

fn write_json(path: &Path, doc: &serde_json::Value) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub mod solve_lp {
    use super::*;
    use espopt::model::{build_profile_lp, to_standard_form, write_solution, LpBuildOptions};
    use espopt::simplex::{solve_simplex, SimplexOptions, SolveStatus};

    #[derive(clap::Args)]
    pub struct Args {
        /// Dataset file (.csv or .json).
        pub dataset: PathBuf,
        /// Dataset format override (csv or json).
        #[arg(long)]
        pub format: Option<String>,
        /// Reserve grid mode: own, shared, or spaced:<count>.
        #[arg(long, default_value = "own")]
        pub grid: GridFlag,
        /// Write the solution JSON here.
        #[arg(long)]
        pub out: Option<PathBuf>,
        /// Dump the standard-form program in fixed MPS layout.
        #[arg(long)]
        pub mps: Option<PathBuf>,
        /// Solver feasibility/optimality tolerance.
        #[arg(long, default_value_t = 1e-7)]
        pub tol: f64,
        /// Pivot cap; 0 means the built-in default.
        #[arg(long, default_value_t = 0)]
        pub max_iters: usize,
        /// Refactorization interval in pivots.
        #[arg(long, default_value_t = 50)]
        pub refactor_every: usize,
        /// Cap on LP variables before refusing to build.
        #[arg(long, default_value_t = LpBuildOptions::default().max_variables)]
        pub max_variables: usize,
    }

    pub fn run(args: Args) -> Result<ExitCode> {
        let ds = load_dataset(&args.dataset, args.format.as_deref())?;
        let grid = ReserveGrid::build(&ds, args.grid.0)?;
        let model = build_profile_lp(
            &ds,
            &grid,
            &LpBuildOptions {
                max_variables: args.max_variables,
            },
        )?;
        let (lp, map) = to_standard_form(&model)?;
        if let Some(path) = &args.mps {
            lp.write_mps("PROFILE", BufWriter::new(File::create(path)?))?;
        }
        let opts = SimplexOptions {
            tol: args.tol,
            max_iters: args.max_iters,
            refactor_every: args.refactor_every,
            ..SimplexOptions::default()
        };
        let report = solve_simplex(&lp, &opts)?;
        if report.status != SolveStatus::Optimal {
            return Err(Error::Solver(format!(
                "solver stopped with status {:?} after {} iterations",
                report.status, report.iterations
            )));
        }
        let sol = map.lp_solution(&model, &report);
        println!(
            "objective {:.9} ({} profiles, {} distribution vars, {} rows, {} iterations, residual {:.2e})",
            sol.objective,
            model.num_s(),
            model.num_q(),
            model.num_rows(),
            report.iterations,
            report.max_residual
        );
        if let Some(path) = &args.out {
            write_solution(&sol, &ds, BufWriter::new(File::create(path)?))?;
            println!("solution written to {}", path.display());
        }
        Ok(ExitCode::SUCCESS)
    }
}

pub mod round {
    use super::*;
    use espopt::model::read_solution;
    use espopt::rounding::{pro_lpr_run, write_rounding_report, RoundingOptions};

    #[derive(clap::Args)]
    pub struct Args {
        pub dataset: PathBuf,
        /// LP solution JSON produced by solve-lp.
        pub solution: PathBuf,
        #[arg(long)]
        pub format: Option<String>,
        /// Number of reserve vectors to draw.
        #[arg(long, default_value_t = 200)]
        pub samples: usize,
        /// Master seed for the draws.
        #[arg(long)]
        pub seed: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        pub out: Option<PathBuf>,
    }

    pub fn run(args: Args) -> Result<ExitCode> {
        let ds = load_dataset(&args.dataset, args.format.as_deref())?;
        let sol = read_solution(BufReader::new(File::open(&args.solution)?), &ds)?;
        let outcome = pro_lpr_run(&ds, &sol, &RoundingOptions::new(args.samples, args.seed))?;
        println!(
            "estimate {:.6} +- {:.6} (rounding mean {:.6} +- {:.6}, zero reserves {:.6}, best {:.6})",
            outcome.estimate,
            outcome.standard_error,
            outcome.rounding_mean,
            outcome.rounding_std_error,
            outcome.zero_revenue,
            outcome.best_revenue
        );
        match &args.out {
            Some(path) => write_rounding_report(&outcome, BufWriter::new(File::create(path)?))?,
            None => write_rounding_report(&outcome, std::io::stdout().lock())?,
        }
        Ok(ExitCode::SUCCESS)
    }
}

pub mod greedy {
    use super::*;
    use espopt::baselines::greedy_lazy_reserves;

    #[derive(clap::Args)]
    pub struct Args {
        pub dataset: PathBuf,
        #[arg(long)]
        pub format: Option<String>,
        #[arg(long, default_value = "own")]
        pub grid: GridFlag,
        #[arg(long)]
        pub out: Option<PathBuf>,
    }

    pub fn run(args: Args) -> Result<ExitCode> {
        let ds = load_dataset(&args.dataset, args.format.as_deref())?;
        let grid = ReserveGrid::build(&ds, args.grid.0)?;
        let reserves = greedy_lazy_reserves(&ds, &grid);
        let revenue = ds.total_revenue(&reserves);
        let doc = serde_json::json!({
            "revenue": revenue,
            "reserves": reserves,
        });
        println!("greedy revenue {revenue:.9}");
        match &args.out {
            Some(path) => write_json(path, &doc)?,
            None => println!("{}", serde_json::to_string_pretty(&doc)?),
        }
        Ok(ExitCode::SUCCESS)
    }
}

pub mod brute_force {
    use super::*;
    use espopt::baselines::brute_force_optimum;

    #[derive(clap::Args)]
    pub struct Args {
        pub dataset: PathBuf,
        #[arg(long)]
        pub format: Option<String>,
        #[arg(long, default_value = "own")]
        pub grid: GridFlag,
        /// Search-space cap; 0 means the default of 10^7.
        #[arg(long, default_value_t = 0)]
        pub cap: usize,
        #[arg(long)]
        pub out: Option<PathBuf>,
    }

    pub fn run(args: Args) -> Result<ExitCode> {
        let ds = load_dataset(&args.dataset, args.format.as_deref())?;
        let grid = ReserveGrid::build(&ds, args.grid.0)?;
        let best = brute_force_optimum(&ds, &grid, args.cap)?;
        let doc = serde_json::json!({
            "value": best.value,
            "reserves": best.reserves,
        });
        println!("grid optimum {:.9}", best.value);
        match &args.out {
            Some(path) => write_json(path, &doc)?,
            None => println!("{}", serde_json::to_string_pretty(&doc)?),
        }
        Ok(ExitCode::SUCCESS)
    }
}

pub mod gen {
    use super::*;
    use espopt::instances::{
        gap_esp_star, gap_esp_star_limit, gap_instance, gap_lp_feasible_value, gap_ratio_limit,
        gen_correlated_lognormal, tight_instance, tight_rounding_value, GapInstanceSpec,
        LogNormalParams, TightInstanceSpec,
    };
    use espopt::model::write_solution;

    #[derive(clap::Subcommand)]
    pub enum Kind {
        /// Two-buyer correlated log-normal bid stream.
        Lognormal {
            #[arg(long)]
            mu: f64,
            #[arg(long, default_value_t = 0.1)]
            sigma: f64,
            #[arg(long, default_value_t = 0.0)]
            w: f64,
            #[arg(long, default_value_t = 100)]
            auctions: u32,
            #[arg(long)]
            seed: u64,
            #[arg(long)]
            out: PathBuf,
            #[arg(long)]
            format: Option<String>,
        },
        /// The integrality-gap family (solo bids versus pair bids).
        Gap {
            #[arg(long)]
            n: u32,
            /// Solo-bid coefficient; defaults to sqrt(2) - 1.
            #[arg(long)]
            lambda: Option<f64>,
            /// Pair auctions carry weight k and bid 1/k.
            #[arg(long, default_value_t = 100)]
            k: u32,
            #[arg(long)]
            out: PathBuf,
            #[arg(long)]
            format: Option<String>,
        },
        /// The weighted three-auction family attaining the guarantee.
        Tight {
            #[arg(long)]
            k: u32,
            #[arg(long, default_value_t = 1e-4)]
            epsilon: f64,
            #[arg(long)]
            out: PathBuf,
            #[arg(long)]
            format: Option<String>,
            /// Also write the hand-crafted optimal LP solution here.
            #[arg(long)]
            solution: Option<PathBuf>,
        },
    }

    fn sidecar_path(out: &Path) -> PathBuf {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".meta.json");
        out.with_file_name(name)
    }

    fn write_out(ds: &Dataset, out: &Path, format: Option<&str>) -> Result<()> {
        let format = dataset_format(out, format)?;
        espopt::io::write_dataset(ds, BufWriter::new(File::create(out)?), format)
    }

    pub fn run(kind: Kind) -> Result<ExitCode> {
        match kind {
            Kind::Lognormal {
                mu,
                sigma,
                w,
                auctions,
                seed,
                out,
                format,
            } => {
                let params = LogNormalParams::new(mu, sigma, w, auctions, seed)?;
                let ds = gen_correlated_lognormal(&params);
                write_out(&ds, &out, format.as_deref())?;
                write_json(
                    &sidecar_path(&out),
                    &serde_json::json!({
                        "kind": "lognormal",
                        "mu": mu, "sigma": sigma, "w": w,
                        "auctions": auctions, "seed": seed,
                        "log_bid_covariance": w * sigma * sigma,
                    }),
                )?;
                println!("wrote {} auctions to {}", auctions, out.display());
            }
            Kind::Gap { n, lambda, k, out, format } => {
                let lambda = lambda.unwrap_or(std::f64::consts::SQRT_2 - 1.0);
                let spec = GapInstanceSpec::new(n, lambda, k)?;
                let ds = gap_instance(&spec);
                write_out(&ds, &out, format.as_deref())?;
                write_json(
                    &sidecar_path(&out),
                    &serde_json::json!({
                        "kind": "gap",
                        "n": n, "lambda": lambda, "k": k, "delta": spec.delta(),
                        "esp_star": gap_esp_star(&spec),
                        "esp_star_delta_limit": gap_esp_star_limit(&spec),
                        "lp_feasible_value": gap_lp_feasible_value(&spec),
                        "ratio_limit": gap_ratio_limit(n, lambda),
                    }),
                )?;
                println!(
                    "wrote {} auctions to {}",
                    ds.auctions().len(),
                    out.display()
                );
            }
            Kind::Tight {
                k,
                epsilon,
                out,
                format,
                solution,
            } => {
                let spec = TightInstanceSpec::new(k, epsilon)?;
                let (ds, sol) = tight_instance(&spec);
                write_out(&ds, &out, format.as_deref())?;
                if let Some(path) = &solution {
                    write_solution(&sol, &ds, BufWriter::new(File::create(path)?))?;
                }
                write_json(
                    &sidecar_path(&out),
                    &serde_json::json!({
                        "kind": "tight",
                        "k": k, "epsilon": epsilon,
                        "theta": spec.theta(), "c": spec.c(),
                        "lp_objective": sol.objective,
                        "zero_revenue_limit": 1.0 / (spec.c() + 1.0),
                        "rounding_value": tight_rounding_value(&spec),
                        "rounding_value_limit": espopt::bounds::approximation_factor(),
                    }),
                )?;
                println!(
                    "wrote {} auctions over {} buyers to {}",
                    ds.auctions().len(),
                    ds.num_buyers(),
                    out.display()
                );
            }
        }
        Ok(ExitCode::SUCCESS)
    }
}

pub mod experiment {
    use super::*;
    use espopt::experiment::{run_experiment, ExperimentConfig};
    use espopt::report::emit_report;

    #[derive(clap::Args)]
    pub struct Args {
        /// Configuration JSON; defaults apply for missing fields.
        #[arg(long)]
        pub config: Option<PathBuf>,
        /// Master seed (mandatory, for reproducibility).
        #[arg(long)]
        pub seed: u64,
        /// Output directory for summary.json and the CSV tables.
        #[arg(long)]
        pub out: PathBuf,
        /// Also emit the box-plot SVGs.
        #[arg(long)]
        pub plots: bool,
        #[arg(long)]
        pub instances_per_w: Option<u32>,
        #[arg(long)]
        pub train_auctions: Option<u32>,
        #[arg(long)]
        pub test_sets: Option<u32>,
        #[arg(long)]
        pub test_auctions: Option<u32>,
        #[arg(long)]
        pub grid_points: Option<u32>,
        #[arg(long)]
        pub samples: Option<u32>,
        /// Correlation values (repeat the flag or pass several).
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        pub w: Option<Vec<f64>>,
    }

    pub fn run(args: Args) -> Result<ExitCode> {
        let mut cfg: ExperimentConfig = match &args.config {
            Some(path) => serde_json::from_reader(BufReader::new(File::open(path)?))?,
            None => ExperimentConfig::default(),
        };
        cfg.seed = args.seed;
        if let Some(v) = args.instances_per_w {
            cfg.instances_per_w = v;
        }
        if let Some(v) = args.train_auctions {
            cfg.train_auctions = v;
        }
        if let Some(v) = args.test_sets {
            cfg.test_sets = v;
        }
        if let Some(v) = args.test_auctions {
            cfg.test_auctions = v;
        }
        if let Some(v) = args.grid_points {
            cfg.grid_points = v;
        }
        if let Some(v) = args.samples {
            cfg.samples = v;
        }
        if let Some(v) = args.w.clone() {
            cfg.w_values = v;
        }
        let result = run_experiment(&cfg)?;
        let written = emit_report(&result, &args.out, args.plots)?;
        for path in &written {
            println!("wrote {}", path.display());
        }
        let failed = result.failed_instances();
        let ratios: Vec<f64> = result
            .records
            .iter()
            .filter(|r| r.failure.is_none())
            .map(|r| r.ratio_estimate)
            .collect();
        let min_ratio = ratios.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        println!(
            "{} instances ({failed} failed), min normalized training revenue {min_ratio:.4}",
            result.records.len()
        );
        if failed > 0 {
            return Err(Error::Solver(format!("{failed} instances failed to solve")));
        }
        Ok(ExitCode::SUCCESS)
    }
}

pub mod verify_theory {
    use super::*;
    use espopt::bounds::{
        central_difference, equal_support_argmax, equal_support_bound, grid_program_max,
        peaked_support_bound, program_objective, split_bound_sides, worst_case_gap_bound,
    };
    use espopt::rng::substream;
    use rand::Rng;

    #[derive(clap::Args)]
    pub struct Args {
        /// Write the per-k table as CSV here (printed to stdout regardless).
        #[arg(long)]
        pub out: Option<PathBuf>,
        /// Largest k in the printed table.
        #[arg(long, default_value_t = 40)]
        pub k_max: u32,
    }

    pub fn run(args: Args) -> Result<ExitCode> {
        let mut table = String::from("k,theta_star,bound\n");
        for k in 2..=args.k_max {
            let theta = equal_support_argmax(k);
            table.push_str(&format!("{k},{theta},{}\n", equal_support_bound(theta, k)));
        }
        print!("{table}");
        if let Some(path) = &args.out {
            std::fs::write(path, &table)?;
        }

        let mut pass = true;
        let mut check = |name: &str, ok: bool, detail: String| {
            println!("{}: {name} ({detail})", if ok { "PASS" } else { "FAIL" });
            pass &= ok;
        };

        // sweep the equal-support envelope on a 1e-4 grid
        let steps = 10_000;
        let mut max_value = f64::NEG_INFINITY;
        let mut max_theta = 0.0;
        for i in 0..=steps {
            let theta = i as f64 / steps as f64;
            let v = equal_support_bound(theta, 2);
            if v > max_value {
                max_value = v;
                max_theta = theta;
            }
        }
        let target = worst_case_gap_bound();
        check(
            "equal-support peak location",
            (max_theta - (std::f64::consts::SQRT_2 - 1.0)).abs() <= 1e-3,
            format!("argmax {max_theta:.5}"),
        );
        check(
            "equal-support peak value",
            (max_value - target).abs() <= 1e-4,
            format!("max {max_value:.6} vs {target:.6}"),
        );
        let mut global = f64::NEG_INFINITY;
        let mut peaked = f64::NEG_INFINITY;
        for k in 2..=200 {
            for i in 0..=steps {
                let theta = i as f64 / steps as f64;
                global = global.max(equal_support_bound(theta, k));
                peaked = peaked.max(peaked_support_bound(theta, k));
            }
        }
        check(
            "equal-support bound over k in [2,200]",
            global <= 0.46121,
            format!("sup {global:.6}"),
        );
        check(
            "peaked-support bound everywhere",
            peaked <= 0.46,
            format!("sup {peaked:.6}"),
        );
        check(
            "closed-form argmax at k = 2",
            (equal_support_argmax(2) - (std::f64::consts::SQRT_2 - 1.0)).abs() <= 1e-12,
            format!("{}", equal_support_argmax(2)),
        );
        let mut worst_derivative = 0.0f64;
        for k in 2..=100 {
            let d = central_difference(|t| equal_support_bound(t, k), equal_support_argmax(k), 1e-5);
            worst_derivative = worst_derivative.max(d.abs());
        }
        check(
            "stationarity of the argmax across k",
            worst_derivative <= 1e-8,
            format!("max |dG/dtheta| {worst_derivative:.2e}"),
        );

        let mut envelope_ok = true;
        let mut interior_ok = true;
        for n in [3usize, 4] {
            for i in 1..=9 {
                let theta = i as f64 / 10.0;
                let result = grid_program_max(n, theta, 400)?;
                let envelope = (2..=n as u32)
                    .map(|k| equal_support_bound(theta, k).max(peaked_support_bound(theta, k)))
                    .fold(f64::NEG_INFINITY, f64::max);
                envelope_ok &= result.value <= envelope + 1e-3;
                let step = theta / 400.0;
                let interior: Vec<f64> = result
                    .argmax
                    .iter()
                    .copied()
                    .filter(|&v| v > step / 2.0 && v < theta - step / 2.0)
                    .collect();
                if interior.len() >= 2 {
                    let lo = interior.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = interior.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    interior_ok &= hi - lo <= step + 1e-12;
                }
            }
        }
        check("grid program within case envelope", envelope_ok, "n in {3, 4}, resolution 400".into());
        check(
            "interior argmax coordinates equal",
            interior_ok,
            "within one grid step".into(),
        );

        let mut rng = substream(0x7EAC, 0);
        let mut split_ok = true;
        for _ in 0..10_000 {
            let n = rng.random_range(2..=5usize);
            let mut x1 = Vec::with_capacity(n);
            let mut x2 = Vec::with_capacity(n);
            for _ in 0..n {
                let a: f64 = rng.random_range(0.0..1.0);
                x1.push(a);
                x2.push(rng.random_range(0.0..(1.0 - a)));
            }
            let (lhs, rhs) = split_bound_sides(&x1, &x2)?;
            split_ok &= lhs <= rhs + 1e-12;
        }
        check("split inequality on random inputs", split_ok, "10000 draws".into());

        // spot identity: the program at a symmetric pair equals the envelope
        let identity = (0..=40)
            .map(|i| i as f64 / 40.0)
            .all(|t| (program_objective(&[t, t], t) - equal_support_bound(t, 2)).abs() <= 1e-12);
        check("pair objective matches envelope", identity, "41-point grid".into());

        if pass {
            Ok(ExitCode::SUCCESS)
        } else {
            Ok(ExitCode::from(1))
        }
    }
}

pub mod check_conditions {
    use super::*;
    use espopt::bounds::worst_case_gap_bound;
    use espopt::model::read_solution;
    use espopt::rounding::{condition_gap, condition_thresholds};

    #[derive(clap::Args)]
    pub struct Args {
        pub dataset: PathBuf,
        pub solution: PathBuf,
        #[arg(long)]
        pub format: Option<String>,
        /// Grid used to derive the threshold set (must match solve-lp).
        #[arg(long, default_value = "own")]
        pub grid: GridFlag,
        /// Tolerance for thresholds above the second-highest bid.
        #[arg(long, default_value_t = 1e-9)]
        pub high_tol: f64,
        /// Allowed gap at or below the second-highest bid; defaults to the
        /// closed-form worst case plus 1e-6.
        #[arg(long)]
        pub bound: Option<f64>,
    }

    pub fn run(args: Args) -> Result<ExitCode> {
        let ds = load_dataset(&args.dataset, args.format.as_deref())?;
        let sol = read_solution(BufReader::new(File::open(&args.solution)?), &ds)?;
        let grid = ReserveGrid::build(&ds, args.grid.0)?;
        let thresholds = condition_thresholds(&grid);
        let bound = args.bound.unwrap_or(worst_case_gap_bound() + 1e-6);

        let mut worst_high: f64 = f64::NEG_INFINITY;
        let mut worst_low: f64 = f64::NEG_INFINITY;
        let mut ok = true;
        for (a, auction) in ds.auctions().iter().enumerate() {
            let second = auction.top_two_bids().1;
            let mut high: f64 = f64::NEG_INFINITY;
            let mut low: f64 = f64::NEG_INFINITY;
            for &t in &thresholds {
                let gap = condition_gap(&ds, a, &sol, t)?.gap;
                if t > second {
                    high = high.max(gap);
                } else {
                    low = low.max(gap);
                }
            }
            let auction_ok = high <= args.high_tol && low <= bound;
            ok &= auction_ok;
            println!(
                "auction {}: worst gap above second bid {:.3e}, at or below {:.6} [{}]",
                auction.id(),
                high.max(-1.0),
                low.max(-1.0),
                if auction_ok { "ok" } else { "VIOLATED" }
            );
            worst_high = worst_high.max(high);
            worst_low = worst_low.max(low);
        }
        println!(
            "{}: worst gaps {:.3e} (above) / {:.6} (below), limits {:.1e} / {:.6}",
            if ok { "PASS" } else { "FAIL" },
            worst_high,
            worst_low,
            args.high_tol,
            bound
        );
        Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
    }
}
