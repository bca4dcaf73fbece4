use std::io::Read;
use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use trial_resizer_cli::api::{self, Estimator};
use trial_resizer_cli::curves::{curve_rows, default_tau_grid, table1, CurveParameters, CURVE_ETAS};
use trial_resizer_cli::format::{render, round_json, Format};
use trial_resizer_cli::server::{serve, ServeConfig};
use trial_resizer_cli::ApiError;

#[derive(Parser)]
#[command(name = "trial-resizer", version, about = "Power, boundaries and sample-size adjustment for two-look trials")]
struct Cli {
    /// Output format; `table1` and `curves` default to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Design {
    /// One-sided significance level.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Planned power.
    #[arg(long, allow_hyphen_values = true)]
    power: Option<f64>,
}

#[derive(Args)]
struct Look {
    #[arg(long, allow_hyphen_values = true)]
    tau: f64,
    /// pocock, obrien_fleming or kim_demets.
    #[arg(long, allow_hyphen_values = true)]
    scheme: String,
    /// Spending exponent of the kim_demets scheme.
    #[arg(long, allow_hyphen_values = true)]
    rho_spend: Option<f64>,
}

#[derive(Args)]
struct Dilution {
    /// Relative drop of the post-disruption effect.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    /// Post-disruption variance ratio.
    #[arg(long, allow_hyphen_values = true)]
    psi: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Power when only a fraction of the planned patients is analysed.
    PowerAtFraction {
        #[command(flatten)]
        design: Design,
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
    },
    /// Planned sample size of the fixed design.
    SampleSize {
        #[command(flatten)]
        design: Design,
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
        #[arg(long, allow_hyphen_values = true)]
        sigma: Option<f64>,
        /// Allocation ratio treatment : control.
        #[arg(long, allow_hyphen_values = true)]
        r: Option<f64>,
    },
    /// Critical values of a two-look design.
    GsdBoundaries {
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[command(flatten)]
        look: Look,
    },
    /// Stage-one and overall power of a two-look design.
    GsdPower {
        #[command(flatten)]
        design: Design,
        #[command(flatten)]
        look: Look,
        #[command(flatten)]
        dilution: Dilution,
    },
    /// Conditional type-one error given the interim statistic.
    ConditionalError {
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[command(flatten)]
        look: Look,
        #[arg(long, allow_hyphen_values = true)]
        z1: f64,
    },
    /// Conditional power given the interim statistic.
    ConditionalPower {
        #[command(flatten)]
        design: Design,
        #[command(flatten)]
        look: Look,
        #[arg(long, allow_hyphen_values = true)]
        z1: f64,
        /// Expected final statistic; defaults to the planned drift.
        #[arg(long, allow_hyphen_values = true)]
        drift: Option<f64>,
    },
    /// Mean and correlation of the interim, post-disruption and final statistics.
    JointLaw {
        #[command(flatten)]
        design: Design,
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
        #[arg(long, allow_hyphen_values = true)]
        n: Option<f64>,
        #[command(flatten)]
        dilution: Dilution,
    },
    /// Power of the fixed design when later patients respond differently.
    DilutionPower {
        #[command(flatten)]
        design: Design,
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
        #[command(flatten)]
        dilution: Dilution,
    },
    /// Post-disruption sample size restoring the planned power.
    Resize {
        #[command(flatten)]
        design: Design,
        /// Planned total sample size.
        #[arg(long, allow_hyphen_values = true)]
        n: f64,
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
        #[command(flatten)]
        dilution: Dilution,
    },
    /// Post-disruption sample size for a two-look design.
    ResizeGsd {
        #[command(flatten)]
        design: Design,
        #[arg(long, allow_hyphen_values = true)]
        n: f64,
        #[command(flatten)]
        look: Look,
        #[command(flatten)]
        dilution: Dilution,
        /// Largest post-disruption size searched.
        #[arg(long, allow_hyphen_values = true)]
        cap: Option<f64>,
    },
    /// Interim long-term success rates from a short-term endpoint CSV.
    ShorttermEstimate {
        /// CSV with header arm,s,l,x1..xk; `-` reads stdin.
        #[arg(long, allow_hyphen_values = true)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "marschner-becker")]
        estimator: EstimatorArg,
        /// Planned number of patients, to report the information fraction.
        #[arg(long, allow_hyphen_values = true)]
        n_planned: Option<u64>,
    },
    /// Power table over information fraction, dilution and planned power.
    Table1 {
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        power: Option<f64>,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.025)]
        alpha: f64,
    },
    /// Power curves against the information fraction.
    Curves {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eta: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        tau: Option<Vec<f64>>,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.025)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.9)]
        power: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
        psi: f64,
    },
    /// Run the JSON service.
    Serve {
        #[arg(long, allow_hyphen_values = true)]
        port: Option<u16>,
        #[arg(long, allow_hyphen_values = true)]
        bind: Option<IpAddr>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EstimatorArg {
    MarschnerBecker,
    VanLancker,
    Both,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::MarschnerBecker => Estimator::MarschnerBecker,
            EstimatorArg::VanLancker => Estimator::VanLancker,
            EstimatorArg::Both => Estimator::Both,
        }
    }
}

enum Failure {
    Api(ApiError),
    Io(String),
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        Failure::Api(e)
    }
}

/// Collects the given fields into a JSON object, skipping absent ones.
fn params(fields: &[(&str, Option<Value>)]) -> Value {
    let map: Map<String, Value> = fields
        .iter()
        .filter_map(|(k, v)| v.clone().map(|v| ((*k).to_owned(), v)))
        .collect();
    Value::Object(map)
}

fn num(x: f64) -> Option<Value> {
    Some(json!(x))
}

fn opt(x: Option<f64>) -> Option<Value> {
    x.map(|v| json!(v))
}

impl Design {
    fn fields(&self) -> [(&'static str, Option<Value>); 2] {
        [("alpha", opt(self.alpha)), ("power", opt(self.power))]
    }
}

impl Look {
    fn fields(&self) -> [(&'static str, Option<Value>); 3] {
        [
            ("tau", num(self.tau)),
            ("scheme", Some(json!(self.scheme))),
            ("rho_spend", opt(self.rho_spend)),
        ]
    }
}

impl Dilution {
    fn fields(&self) -> [(&'static str, Option<Value>); 2] {
        [("eta", opt(self.eta)), ("psi", opt(self.psi))]
    }
}

fn join<const A: usize, const B: usize>(a: [(&'static str, Option<Value>); A], b: [(&'static str, Option<Value>); B]) -> Vec<(&'static str, Option<Value>)> {
    a.into_iter().chain(b).collect()
}

fn to_value<T: serde::Serialize>(x: T) -> Value {
    round_json(serde_json::to_value(x).expect("outputs serialize"))
}

fn run(command: Command) -> Result<Value, Failure> {
    let out = match command {
        Command::PowerAtFraction { design, tau } => {
            let mut f = design.fields().to_vec();
            f.push(("tau", num(tau)));
            api::dispatch("power_fraction", &params(&f))?
        }
        Command::SampleSize { design, delta, sigma, r } => {
            let mut f = design.fields().to_vec();
            f.extend([("delta", num(delta)), ("sigma", opt(sigma)), ("r", opt(r))]);
            api::dispatch("sample_size", &params(&f))?
        }
        Command::GsdBoundaries { alpha, look } => {
            let f = join([("alpha", opt(alpha))], look.fields());
            api::dispatch("gsd_boundaries", &params(&f))?
        }
        Command::GsdPower { design, look, dilution } => {
            let mut f = join(design.fields(), look.fields());
            f.extend(dilution.fields());
            api::dispatch("gsd_power", &params(&f))?
        }
        Command::ConditionalError { alpha, look, z1 } => {
            let mut f = join([("alpha", opt(alpha))], look.fields());
            f.push(("z1", num(z1)));
            api::dispatch("conditional_error", &params(&f))?
        }
        Command::ConditionalPower { design, look, z1, drift } => {
            let mut f = join(design.fields(), look.fields());
            f.extend([("z1", num(z1)), ("drift", opt(drift))]);
            if drift.is_none() && design.power.is_none() {
                f.push(("power", num(0.9)));
            }
            api::dispatch("conditional_power", &params(&f))?
        }
        Command::JointLaw { design, tau, n, dilution } => {
            let mut f = join(design.fields(), dilution.fields());
            f.extend([("tau", num(tau)), ("n", opt(n))]);
            api::dispatch("joint_law", &params(&f))?
        }
        Command::DilutionPower { design, tau, dilution } => {
            let mut f = join(design.fields(), dilution.fields());
            f.push(("tau", num(tau)));
            api::dispatch("dilution_power", &params(&f))?
        }
        Command::Resize { design, n, tau, dilution } => {
            let mut f = join(design.fields(), dilution.fields());
            f.extend([("n", num(n)), ("tau", num(tau))]);
            api::dispatch("resize_fixed", &params(&f))?
        }
        Command::ResizeGsd { design, n, look, dilution, cap } => {
            let mut f = join(design.fields(), look.fields());
            f.extend(dilution.fields());
            f.extend([("n", num(n)), ("cap", opt(cap))]);
            api::dispatch("resize_gsd", &params(&f))?
        }
        Command::ShorttermEstimate { input, estimator, n_planned } => {
            let mut csv = Vec::new();
            let read = if input.as_os_str() == "-" {
                std::io::stdin().read_to_end(&mut csv).map(|_| ())
            } else {
                std::fs::read(&input).map(|bytes| csv = bytes)
            };
            read.map_err(|e| Failure::Io(format!("{}: {e}", input.display())))?;
            to_value(api::shortterm_estimate(&csv, estimator.into(), n_planned)?)
        }
        Command::Table1 { eta, power, alpha } => to_value(table1(eta, power, alpha).map_err(ApiError::from)?),
        Command::Curves { eta, tau, alpha, power, psi } => {
            let base = CurveParameters {
                alpha,
                power,
                psi,
                ..CurveParameters::default()
            };
            let etas = eta.unwrap_or_else(|| CURVE_ETAS.to_vec());
            let taus = tau.unwrap_or_else(default_tau_grid);
            to_value(curve_rows(&base, &etas, &taus).map_err(ApiError::from)?)
        }
        Command::Serve { .. } => unreachable!("handled before dispatch"),
    };
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Command::Serve { port, bind } = cli.command {
        let config = match ServeConfig::resolve(port, bind, |k| std::env::var(k).ok()) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        };
        let runtime = match tokio::runtime::Runtime::new() {
            Ok(rt) => rt,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        };
        return match runtime.block_on(serve(config)) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        };
    }
    let tabular = matches!(cli.command, Command::Table1 { .. } | Command::Curves { .. });
    let format = cli.format.unwrap_or(if tabular { Format::Csv } else { Format::Json });
    match run(cli.command) {
        Ok(value) => {
            print!("{}", render(&value, format));
            ExitCode::SUCCESS
        }
        Err(Failure::Api(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
