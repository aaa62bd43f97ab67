//! Command-line grammar and its normalized form, [`RunSpec`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nterm_core::{dyadic_grid, Exponent, WeightSpec};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "nterm", version, about = "Worst-case n-term approximation errors on weighted lp balls")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sandwich bounds on the worst-case squared error, one row per n.
    Bounds {
        #[command(flatten)]
        target: Target,
        /// n, a range `a..b`, a list `a,b,c` or `2^a..2^b:dyadic`.
        #[arg(long)]
        n: String,
        /// Scan limit; defaults to max(1024, 64 n) per row.
        #[arg(long)]
        m_max: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exact n-term error of a concrete sequence.
    Exact {
        /// Comma-separated coefficients.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "x_file", required_unless_present = "x_file")]
        x: Option<String>,
        /// File with one coefficient per line.
        #[arg(long)]
        x_file: Option<PathBuf>,
        /// With --p, also reports the weighted norm of x.
        #[arg(long, requires = "p")]
        weights: Option<String>,
        #[arg(long, allow_hyphen_values = true, requires = "weights")]
        p: Option<String>,
        /// Defaults to 0..support.
        #[arg(long)]
        n: Option<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// The extremal sequence with m entries equal to 1 / W_m.
    Extremal {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Structure and random-search maximizers of the error over the unit ball.
    Oracle {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        n: String,
        #[command(flatten)]
        oracle: OracleArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Cross-checks the bounds against both oracles; exits 1 on failure.
    Certify {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        n: String,
        #[command(flatten)]
        oracle: OracleArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Fits the decay rate of the upper bound and compares it with the prediction.
    Ratefit {
        #[command(flatten)]
        target: Target,
        /// Defaults to 2^6..2^16:dyadic.
        #[arg(long)]
        n: Option<String>,
        /// Defaults to `fixed` when a prediction exists, else `poly`.
        #[arg(long, value_enum)]
        model: Option<FitModel>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct Target {
    /// const, logpow:beta=B, powlog:alpha=A,beta=B or file:PATH.
    #[arg(long)]
    pub weights: String,
    /// Exponent in (0, inf]; `inf` selects the sup-norm branch.
    #[arg(long, allow_hyphen_values = true)]
    pub p: String,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub m_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub refine_tol: Option<f64>,
    #[arg(long)]
    pub max_support: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitModel {
    /// Log exponent held at the predicted value.
    Fixed,
    /// Log exponent held at zero.
    Poly,
    /// Both exponents fitted.
    Polylog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Bounds,
    Exact,
    Extremal,
    Oracle,
    Certify,
    Ratefit,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Bounds => "bounds",
            CommandKind::Exact => "exact",
            CommandKind::Extremal => "extremal",
            CommandKind::Oracle => "oracle",
            CommandKind::Certify => "certify",
            CommandKind::Ratefit => "ratefit",
        }
    }
}

fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

/// Set of `n` values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NRange {
    Single(usize),
    /// `lo..hi`, inclusive.
    Span(usize, usize),
    List(Vec<usize>),
    /// `2^lo..2^hi:dyadic`.
    Dyadic(u32, u32),
}

impl NRange {
    pub fn values(&self) -> Vec<usize> {
        match self {
            NRange::Single(n) => vec![*n],
            NRange::Span(lo, hi) => (*lo..=*hi).collect(),
            NRange::List(v) => v.clone(),
            NRange::Dyadic(lo, hi) => dyadic_grid(*lo, *hi),
        }
    }
}

/// An integer, optionally written `2^k`.
fn parse_count(s: &str) -> Option<usize> {
    let s = s.trim();
    match s.split_once('^') {
        Some(("2", k)) => k.parse::<u32>().ok().and_then(|k| 1usize.checked_shl(k).filter(|_| k < usize::BITS)),
        Some(_) => None,
        None => s.parse().ok(),
    }
}

fn exact_log2(n: usize) -> Option<u32> {
    n.is_power_of_two().then(|| n.trailing_zeros())
}

impl FromStr for NRange {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::parameter(format!("invalid n range {s:?}: {why}"));
        let (body, dyadic) = match s.trim().split_once(':') {
            Some((b, "dyadic")) => (b, true),
            Some(_) => return Err(bad("the only suffix is :dyadic")),
            None => (s.trim(), false),
        };
        if let Some((a, b)) = body.split_once("..") {
            let lo = parse_count(a).ok_or_else(|| bad("bad lower end"))?;
            let hi = parse_count(b).ok_or_else(|| bad("bad upper end"))?;
            if lo > hi {
                return Err(bad("lower end exceeds upper end"));
            }
            if dyadic {
                let (Some(a), Some(b)) = (exact_log2(lo), exact_log2(hi)) else {
                    return Err(bad("dyadic ends must be powers of two"));
                };
                return Ok(NRange::Dyadic(a, b));
            }
            return Ok(NRange::Span(lo, hi));
        }
        if dyadic {
            return Err(bad(":dyadic needs a range"));
        }
        if body.contains(',') {
            let v: Option<Vec<usize>> = body.split(',').map(parse_count).collect();
            let v = v.ok_or_else(|| bad("bad list entry"))?;
            if v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(bad("list must be strictly increasing"));
            }
            return Ok(NRange::List(v));
        }
        parse_count(body).map(NRange::Single).ok_or_else(|| bad("not a count"))
    }
}

impl fmt::Display for NRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NRange::Single(n) => write!(f, "{n}"),
            NRange::Span(a, b) => write!(f, "{a}..{b}"),
            NRange::List(v) => {
                let parts: Vec<String> = v.iter().map(|n| n.to_string()).collect();
                f.write_str(&parts.join(","))
            }
            NRange::Dyadic(a, b) => write!(f, "2^{a}..2^{b}:dyadic"),
        }
    }
}

/// Source of the coefficients for `exact`.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSource {
    Inline(Vec<f64>),
    File(PathBuf),
}

/// Oracle settings left unset fall back to the library defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleOverrides {
    pub m_max: Option<usize>,
    pub seed: Option<u64>,
    pub iters: Option<usize>,
    pub grid_points: Option<usize>,
    pub refine_tol: Option<f64>,
    pub max_support: Option<usize>,
}

/// A fully parsed invocation. `to_string` gives an argument line that parses
/// back to the same spec.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: CommandKind,
    pub weights: Option<WeightSpec>,
    pub p: Option<Exponent>,
    pub n: Option<NRange>,
    pub m: Option<usize>,
    pub m_max: Option<usize>,
    pub oracle: OracleOverrides,
    pub sequence: Option<SequenceSource>,
    pub model: Option<FitModel>,
    pub format: Format,
    pub output: Option<PathBuf>,
}

fn weights(s: &str) -> Result<WeightSpec, CliError> {
    s.parse().map_err(CliError::from_weights)
}

fn exponent(s: &str) -> Result<Exponent, CliError> {
    s.parse::<Exponent>()
        .map_err(|e| CliError::parameter(e.to_string()))
}

fn coefficients(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::parameter(format!("invalid coefficient {t:?}")))
        })
        .collect()
}

impl RunSpec {
    fn base(command: CommandKind, out: OutputArgs) -> Self {
        RunSpec {
            command,
            weights: None,
            p: None,
            n: None,
            m: None,
            m_max: None,
            oracle: OracleOverrides::default(),
            sequence: None,
            model: None,
            format: out.format,
            output: out.output,
        }
    }

    pub fn from_command(cmd: Command) -> Result<Self, CliError> {
        let with_target = |kind, target: Target, out| -> Result<RunSpec, CliError> {
            let mut s = RunSpec::base(kind, out);
            s.weights = Some(weights(&target.weights)?);
            s.p = Some(exponent(&target.p)?);
            Ok(s)
        };
        let oracle = |o: OracleArgs| OracleOverrides {
            m_max: o.m_max,
            seed: o.seed,
            iters: o.iters,
            grid_points: o.grid_points,
            refine_tol: o.refine_tol,
            max_support: o.max_support,
        };
        Ok(match cmd {
            Command::Bounds { target, n, m_max, out } => {
                let mut s = with_target(CommandKind::Bounds, target, out)?;
                s.n = Some(n.parse()?);
                s.m_max = m_max;
                s
            }
            Command::Exact {
                x,
                x_file,
                weights: w,
                p,
                n,
                out,
            } => {
                let mut s = RunSpec::base(CommandKind::Exact, out);
                s.sequence = Some(match (x, x_file) {
                    (Some(x), _) => SequenceSource::Inline(coefficients(&x)?),
                    (None, Some(path)) => SequenceSource::File(path),
                    (None, None) => return Err(CliError::usage("exact needs --x or --x-file")),
                });
                s.weights = w.as_deref().map(weights).transpose()?;
                s.p = p.as_deref().map(exponent).transpose()?;
                s.n = n.map(|n| n.parse()).transpose()?;
                s
            }
            Command::Extremal { target, m, out } => {
                let mut s = with_target(CommandKind::Extremal, target, out)?;
                s.m = Some(m);
                s
            }
            Command::Oracle { target, n, oracle: o, out } => {
                let mut s = with_target(CommandKind::Oracle, target, out)?;
                s.n = Some(n.parse()?);
                s.oracle = oracle(o);
                s
            }
            Command::Certify { target, n, oracle: o, out } => {
                let mut s = with_target(CommandKind::Certify, target, out)?;
                s.n = Some(n.parse()?);
                s.oracle = oracle(o);
                s
            }
            Command::Ratefit { target, n, model, out } => {
                let mut s = with_target(CommandKind::Ratefit, target, out)?;
                s.n = n.map(|n| n.parse()).transpose()?;
                s.model = model;
                s
            }
        })
    }
}

impl FromStr for RunSpec {
    type Err = CliError;

    /// Parses a whitespace-separated argument line such as
    /// `bounds --weights const --p 1 --n 1`. Paths containing spaces are not
    /// representable.
    fn from_str(line: &str) -> Result<Self, CliError> {
        let args = std::iter::once("nterm").chain(line.split_whitespace());
        let cli = Cli::try_parse_from(args).map_err(|e| CliError::usage(e.to_string().trim().to_string()))?;
        RunSpec::from_command(cli.command)
    }
}

impl fmt::Display for RunSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.command.name())?;
        match &self.sequence {
            Some(SequenceSource::Inline(x)) => {
                let parts: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                write!(f, " --x {}", parts.join(","))?;
            }
            Some(SequenceSource::File(path)) => write!(f, " --x-file {}", path.display())?,
            None => {}
        }
        if let Some(w) = &self.weights {
            write!(f, " --weights {w}")?;
        }
        if let Some(p) = &self.p {
            write!(f, " --p {p}")?;
        }
        if let Some(n) = &self.n {
            write!(f, " --n {n}")?;
        }
        if let Some(m) = self.m {
            write!(f, " --m {m}")?;
        }
        if let Some(m) = self.m_max {
            write!(f, " --m-max {m}")?;
        }
        let o = &self.oracle;
        if let Some(v) = o.m_max {
            write!(f, " --m-max {v}")?;
        }
        if let Some(v) = o.seed {
            write!(f, " --seed {v}")?;
        }
        if let Some(v) = o.iters {
            write!(f, " --iters {v}")?;
        }
        if let Some(v) = o.grid_points {
            write!(f, " --grid-points {v}")?;
        }
        if let Some(v) = o.refine_tol {
            write!(f, " --refine-tol {v:e}")?;
        }
        if let Some(v) = o.max_support {
            write!(f, " --max-support {v}")?;
        }
        if let Some(m) = self.model {
            write!(f, " --model {}", value_name(m))?;
        }
        write!(f, " --format {}", value_name(self.format))?;
        if let Some(path) = &self.output {
            write!(f, " --output {}", path.display())?;
        }
        Ok(())
    }
}
