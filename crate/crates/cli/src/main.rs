//! `rhcan`: solve Riemann-Hilbert problems for built-in or custom J-modules and
//! recover the canonical system behind them.
//!
//! Exit codes: 0 success, 2 invalid input, 3 ill-conditioned solve, 4 residual
//! check failed, 5 ODE integration did not converge.

mod commands;
mod custom;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rhcan::examples::{ExampleId, ExampleParams};
use rhcan::{cplx, Complex64, Error};

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::IllConditioned { .. } => 3,
            Error::Residual { .. } | Error::InconsistentHamiltonian(_) => 4,
            Error::OdeDivergence { .. } => 5,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "rhcan",
    version,
    about = "Integrable operators, Riemann-Hilbert problems and canonical systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the Riemann-Hilbert problem: F2, W(z) and residuals.
    Solve(RunArgs),
    /// Recover B, H and M1 and compare the canonical system's monodromy with W.
    Recover(RunArgs),
    /// Run the invariant suite and print a pass/fail table.
    Verify(RunArgs),
    /// List the built-in examples.
    ListExamples,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["example", "custom"])))]
struct RunArgs {
    /// Built-in example tag (see list-examples).
    #[arg(long)]
    example: Option<String>,
    /// JSON file with J, interval and an F1 or R2 table.
    #[arg(long, value_name = "PATH")]
    custom: Option<PathBuf>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    /// Interval length; examples live on [0, r].
    #[arg(long)]
    r: Option<f64>,
    /// Nyström nodes.
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    xi_points: usize,
    /// Evaluation point `re,im`; repeatable. Defaults to 2i, -3+i and 5.
    #[arg(long = "z", value_name = "RE,IM", allow_hyphen_values = true, value_parser = parse_complex)]
    z: Vec<Complex64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Multiplies every acceptance threshold.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected re,im, got '{s}'"))?;
    let re: f64 = re.trim().parse().map_err(|e| format!("bad real part '{re}': {e}"))?;
    let im: f64 = im
        .trim()
        .parse()
        .map_err(|e| format!("bad imaginary part '{im}': {e}"))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(cplx(re, im))
}

pub enum Source {
    Example(ExampleId, ExampleParams),
    Custom(PathBuf),
}

pub struct RunConfig {
    pub source: Source,
    pub n: usize,
    pub xi_points: usize,
    pub z: Vec<Complex64>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub tol_scale: f64,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, Failure> {
        if self.n < 8 {
            return Err(Failure::validation(format!("--n must be at least 8, got {}", self.n)));
        }
        if self.xi_points < 4 {
            return Err(Failure::validation(format!(
                "--xi-points must be at least 4, got {}",
                self.xi_points
            )));
        }
        if !(self.tol_scale > 0.0 && self.tol_scale.is_finite()) {
            return Err(Failure::validation(format!(
                "--tol-scale must be positive, got {}",
                self.tol_scale
            )));
        }
        let given: Vec<&str> = [
            ("u", self.u.is_some()),
            ("gamma", self.gamma.is_some()),
            ("alpha", self.alpha.is_some()),
            ("m", self.m.is_some()),
            ("r", self.r.is_some()),
        ]
        .into_iter()
        .filter_map(|(name, set)| set.then_some(name))
        .collect();
        let source = match (self.example, self.custom) {
            (Some(tag), None) => {
                let id: ExampleId = tag.parse()?;
                if let Some(bad) = given.iter().find(|g| !id.parameters().contains(g)) {
                    return Err(Failure::validation(format!("example {id} does not take --{bad}")));
                }
                let d = ExampleParams::default();
                let params = ExampleParams {
                    u: self.u.unwrap_or(d.u),
                    gamma: self.gamma.unwrap_or(d.gamma),
                    alpha: self.alpha.unwrap_or(d.alpha),
                    m: self.m.unwrap_or(d.m),
                    r: self.r.unwrap_or(d.r),
                };
                Source::Example(id, params)
            }
            (None, Some(path)) => {
                if let Some(bad) = given.first() {
                    return Err(Failure::validation(format!(
                        "--{bad} only applies to built-in examples"
                    )));
                }
                Source::Custom(path)
            }
            _ => return Err(Failure::validation("give exactly one of --example and --custom")),
        };
        let z = if self.z.is_empty() {
            vec![cplx(0.0, 2.0), cplx(-3.0, 1.0), cplx(5.0, 0.0)]
        } else {
            self.z
        };
        Ok(RunConfig {
            source,
            n: self.n,
            xi_points: self.xi_points,
            z,
            format: self.format,
            out: self.out,
            tol_scale: self.tol_scale,
        })
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("RHCAN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::validation(format!("RHCAN_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::validation(format!("cannot size the thread pool: {e}")))
}

fn write_output(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure::validation(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32, Failure> {
    configure_threads()?;
    let (args, kind) = match cli.command {
        Command::ListExamples => {
            print!("{}", commands::list_examples());
            return Ok(0);
        }
        Command::Solve(a) => (a, "solve"),
        Command::Recover(a) => (a, "recover"),
        Command::Verify(a) => (a, "verify"),
    };
    let cfg = args.into_config()?;
    let outcome = match kind {
        "solve" => commands::solve(&cfg)?,
        "recover" => commands::recover(&cfg)?,
        _ => commands::verify(&cfg)?,
    };
    if let Some(table) = &outcome.table {
        print!("{table}");
        if cfg.out.is_some() {
            write_output(&cfg, &outcome.render(cfg.format))?;
        }
    } else {
        write_output(&cfg, &outcome.render(cfg.format))?;
        for c in &outcome.checks {
            eprintln!("{}", c.row());
        }
    }
    Ok(if outcome.passed() { 0 } else { outcome.fail_code })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("-3,1").unwrap(), cplx(-3.0, 1.0));
        assert_eq!(parse_complex(" 0.5 , -2e-1").unwrap(), cplx(0.5, -0.2));
        assert!(parse_complex("1").is_err());
        assert!(parse_complex("a,1").is_err());
        assert!(parse_complex("inf,1").is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(
            Failure::from(Error::IllConditioned {
                condition: 1e13,
                limit: 1e12
            })
            .code,
            3
        );
        assert_eq!(
            Failure::from(Error::OdeDivergence {
                halvings: 12,
                change: 1.0
            })
            .code,
            5
        );
        assert_eq!(Failure::from(Error::InvalidSignature("x".into())).code, 2);
        assert_eq!(
            Failure::from(Error::Residual {
                what: "x".into(),
                residual: 1.0,
                limit: 0.1
            })
            .code,
            4
        );
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
