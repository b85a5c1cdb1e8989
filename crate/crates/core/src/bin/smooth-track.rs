use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use smooth_track::harness::{
    arc_sequence_scenario, benchmark_reach, compare_params, compute_metrics, plot_comparison,
    plot_trace, run_closed_loop, sweep, write_metrics_csv, MetricsOptions, ReachBenchConfig,
    Scenario, SweepParam,
};
use smooth_track::plant::KineticParams;
use smooth_track::tuner::{schedule_table, write_schedule_csv, ActuatorLimits, ScheduleOptions};

#[derive(Parser)]
#[command(version, about = "Smooth sliding-mode path tracking experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario file and write its trace and metrics.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write SVG plots of path, errors and steering.
        #[arg(long)]
        plot: bool,
        /// Reaching band on the lead-wheel error [m].
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Print the velocity schedule of the chain parameters.
    Tune {
        /// Vehicle parameters (TOML); only the wheelbase is used.
        #[arg(long)]
        vehicle: PathBuf,
        /// Actuator limits (TOML with delta_max, ddelta_dt_max, dddelta_dt_max).
        #[arg(long)]
        limits: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        v_min: f64,
        #[arg(long, default_value_t = 20.0)]
        v_max: f64,
        #[arg(long, default_value_t = 1.0)]
        v_step: f64,
        #[arg(long, default_value_t = 0.0)]
        k_rob: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance to reach a straight path: optimal, proposed and HOSM.
    BenchmarkReach {
        /// Benchmark settings (TOML); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Baseline against the three parameter variations.
    CompareParams {
        /// Scenario file; the built-in arc sequence when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        plot: bool,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Metrics over a grid of one parameter.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepArg,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SweepArg {
    KappaL,
    LambdaL,
    KRob,
    Rate,
    NoiseE,
    Speed,
}

impl From<SweepArg> for SweepParam {
    fn from(a: SweepArg) -> Self {
        match a {
            SweepArg::KappaL => SweepParam::KappaL,
            SweepArg::LambdaL => SweepParam::LambdaL,
            SweepArg::KRob => SweepParam::KRob,
            SweepArg::Rate => SweepParam::Rate,
            SweepArg::NoiseE => SweepParam::NoiseE,
            SweepArg::Speed => SweepParam::Speed,
        }
    }
}

fn writer(out: Option<&Path>) -> smooth_track::Result<Box<dyn std::io::Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

fn scenario_or_default(file: Option<&Path>) -> smooth_track::Result<Scenario> {
    match file {
        Some(f) => Scenario::load(f),
        None => Ok(arc_sequence_scenario()),
    }
}

fn stem(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() {
        "run".into()
    } else {
        s
    }
}

fn run(cli: Cli) -> smooth_track::Result<()> {
    match cli.cmd {
        Cmd::Simulate {
            scenario,
            out,
            plot,
            eps,
        } => {
            let sc = Scenario::load(&scenario)?;
            let trace = run_closed_loop(&sc)?;
            let opts = MetricsOptions {
                eps_reach: eps,
                ..MetricsOptions::default()
            };
            let m = compute_metrics(&trace, &opts);
            fs::create_dir_all(&out)?;
            let name = stem(&sc.name);
            trace.write_csv(File::create(out.join(format!("{name}_trace.csv")))?)?;
            write_metrics_csv(
                std::slice::from_ref(&m),
                File::create(out.join(format!("{name}_metrics.csv")))?,
            )?;
            if plot {
                plot_trace(&trace, &sc.path.build()?, &out, &name)?;
            }
            eprintln!(
                "{}: {:?}, reached {} at t = {:.3} s, max e_l after = {:.4} m",
                sc.name, trace.outcome, m.reached, m.t_reach, m.max_e_l_post
            );
        }
        Cmd::Tune {
            vehicle,
            limits,
            v_min,
            v_max,
            v_step,
            k_rob,
            out,
        } => {
            let veh = KineticParams::load(&vehicle)?;
            let lim = ActuatorLimits::load(&limits)?;
            if !(v_step > 0.0 && v_min > 0.0 && v_max >= v_min) {
                return Err(smooth_track::Error::InvalidSpec(
                    "velocity grid must be positive and increasing".into(),
                ));
            }
            let n = ((v_max - v_min) / v_step + 1e-9).floor() as usize;
            let vs: Vec<f64> = (0..=n).map(|i| v_min + i as f64 * v_step).collect();
            let opts = ScheduleOptions {
                k_rob,
                ..ScheduleOptions::default()
            };
            let rows = schedule_table(&vs, &lim, veh.wheelbase, &opts)?;
            write_schedule_csv(&rows, writer(out.as_deref())?)?;
        }
        Cmd::BenchmarkReach { config, out } => {
            let cfg = match config {
                Some(f) => toml::from_str(&fs::read_to_string(f)?)?,
                None => ReachBenchConfig::default(),
            };
            let bench = benchmark_reach(&cfg)?;
            bench.write_csv(writer(out.as_deref())?)?;
            for r in &bench.rows {
                eprintln!(
                    "psi0 {:+.3}: optimal {:.3} (grid {:.3}), proposed {:?}, hosm {:?}",
                    r.psi0, r.optimal, r.dp, r.proposed, r.hosm
                );
            }
        }
        Cmd::CompareParams {
            scenario,
            out,
            plot,
            eps,
        } => {
            let sc = scenario_or_default(scenario.as_deref())?;
            let opts = MetricsOptions {
                eps_reach: eps,
                ..MetricsOptions::default()
            };
            let (records, table) = compare_params(&sc, &opts)?;
            fs::create_dir_all(&out)?;
            write_metrics_csv(&records, File::create(out.join("compare_metrics.csv"))?)?;
            table.write_csv(File::create(out.join("compare_ratios.csv"))?)?;
            if plot {
                plot_comparison(&table, &out.join("compare.svg"))?;
            }
            for (name, ratios) in &table.rows {
                let cells: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
                eprintln!("{name:>14}: {}", cells.join(" "));
            }
        }
        Cmd::Sweep {
            param,
            values,
            scenario,
            out,
            eps,
        } => {
            let sc = scenario_or_default(scenario.as_deref())?;
            let opts = MetricsOptions {
                eps_reach: eps,
                ..MetricsOptions::default()
            };
            let mut records = Vec::new();
            for (v, r) in values.iter().zip(sweep(&sc, param.into(), &values, &opts)) {
                match r {
                    Ok(m) => records.push(m),
                    Err(e) => eprintln!("value {v}: {e}"),
                }
            }
            write_metrics_csv(&records, writer(out.as_deref())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
