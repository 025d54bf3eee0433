//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::physics::EnergyConvention;
use crate::solver::{solve, BcMode, GaugeMode, SolveOptions};
use crate::spline::ControlNet;

use super::cases::{build_case, CaseDefinition, CaseName, Overrides};
use super::config::load_config;
use super::export::{sample_and_export, FieldSampleGrid};
use super::metrics::ErrorReport;

#[derive(Debug, Parser)]
#[command(name = "airy-spline", version, about = "Plane stress analysis with spline Airy stress functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a built-in case or a TOML case file.
    Solve(SolveArgs),
    /// List the built-in cases.
    List,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["case", "config", "all"])))]
struct SolveArgs {
    /// Built-in case name.
    #[arg(long, value_parser = parse_case)]
    case: Option<CaseName>,
    /// TOML case file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run every built-in case in turn.
    #[arg(long)]
    all: bool,
    /// Beam length-to-half-height ratio.
    #[arg(long)]
    aspect: Option<f64>,
    /// Spline degrees as `p,q`.
    #[arg(long, value_parser = parse_pair)]
    degrees: Option<(usize, usize)>,
    /// Control net size as `n,m`.
    #[arg(long, value_parser = parse_pair)]
    net: Option<(usize, usize)>,
    /// Gauss points per knot span.
    #[arg(long)]
    quadrature: Option<usize>,
    /// `two-stage` or `combined`.
    #[arg(long, value_parser = parse_from_str::<BcMode>)]
    bc_mode: Option<BcMode>,
    /// Penalty factor for combined mode.
    #[arg(long)]
    bc_weight: Option<f64>,
    /// `pin-affine` or `min-norm`.
    #[arg(long, value_parser = parse_from_str::<GaugeMode>)]
    gauge: Option<GaugeMode>,
    /// `as-printed` or `tensor-contraction`.
    #[arg(long, value_parser = parse_from_str::<EnergyConvention>)]
    energy_convention: Option<EnergyConvention>,
    /// Field samples per patch as `nx,ny`.
    #[arg(long, value_parser = parse_pair)]
    samples: Option<(usize, usize)>,
    /// Directory for stress.csv, profiles.csv and report.txt.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated integers, got `{s}`"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((p(a)?, p(b)?))
}

fn parse_case(s: &str) -> std::result::Result<CaseName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_from_str<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 when a
/// case fails to build or solve, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.command {
        Command::List => {
            for c in CaseName::ALL {
                println!("{c}");
            }
            0
        }
        Command::Solve(args) => match run_solve(&args) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
    }
}

fn run_solve(args: &SolveArgs) -> Result<()> {
    let overrides = Overrides {
        degrees: args.degrees,
        net: args.net,
        aspect: args.aspect,
        quadrature: args.quadrature,
    };
    let grid = match args.samples {
        Some((nx, ny)) => FieldSampleGrid { nx, ny },
        None => FieldSampleGrid::default(),
    };
    let jobs: Vec<(CaseDefinition, SolveOptions)> = if let Some(path) = &args.config {
        let loaded = load_config(path)?;
        let def = apply_to_config(loaded.case, &overrides)?;
        vec![(def, loaded.options)]
    } else {
        let names: Vec<CaseName> = match args.case {
            Some(c) => vec![c],
            None => CaseName::ALL.to_vec(),
        };
        names
            .into_iter()
            .map(|n| Ok((build_case(n, &overrides)?, SolveOptions::default())))
            .collect::<Result<_>>()?
    };
    let many = jobs.len() > 1;
    for (def, base) in jobs {
        let options = adjust_options(base, &def, args)?;
        let solution = solve(&def.model, &options)?;
        let report = ErrorReport::new(&def, &solution, &options)?;
        print!("{}", report.to_text());
        if many {
            println!();
        }
        if let Some(dir) = &args.output {
            let dir = if many { dir.join(&def.name) } else { dir.clone() };
            sample_and_export(&def, &solution, &report, grid, &dir)?;
        }
    }
    Ok(())
}

fn adjust_options(mut o: SolveOptions, def: &CaseDefinition, args: &SolveArgs) -> Result<SolveOptions> {
    if let Some(m) = args.bc_mode {
        o.mode = m;
    }
    if let Some(w) = args.bc_weight {
        o.bc_weight = w;
    }
    if let Some(g) = args.gauge {
        o.gauge = g;
    }
    if let Some(c) = args.energy_convention {
        o.assembly.convention = c;
    }
    if def.quadrature.is_some() {
        o.assembly.quadrature = def.quadrature;
    }
    o.validate()?;
    Ok(o)
}

/// Applies degree, net and quadrature overrides to every patch of a file case.
fn apply_to_config(mut def: CaseDefinition, o: &Overrides) -> Result<CaseDefinition> {
    if o.aspect.is_some() {
        return Err(Error::Config("--aspect applies only to the built-in beam case".into()));
    }
    if o.quadrature == Some(0) {
        return Err(Error::Config("quadrature needs at least one point".into()));
    }
    if o.degrees.is_some() || o.net.is_some() {
        for p in &mut def.model.patches {
            let degrees = o.degrees.unwrap_or(p.net.degrees());
            let counts = o.net.unwrap_or(p.net.shape());
            p.net = ControlNet::open_uniform(degrees, counts)?;
        }
        def.model.validate()?;
    }
    if o.quadrature.is_some() {
        def.quadrature = o.quadrature;
    }
    Ok(def)
}
