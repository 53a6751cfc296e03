//! Batch front end: `key=value` configs, grid scans and CSV/JSON output.

pub mod commands;
pub mod config;
pub mod family;
pub mod format;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Arg, ArgAction, Command};
use serde_json::{json, Value};

pub use config::{Config, Grid};
pub use format::{fmt_num, round_sig, Format};

use crate::error::{Error, Result};
use commands::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

type Handler = fn(&mut Config) -> Result<Report>;

struct Spec {
    name: &'static str,
    about: &'static str,
    schema: &'static str,
    flags: &'static [(&'static str, &'static str)],
    run: Handler,
}

const FAMILY: (&str, &str) = ("family", "preset, affine:r,d;..., mobius:a,b,c,d;... or config file");
const LAMBDA: (&str, &str) = ("lambda", "parameter point (comma separated) or grid lo:hi:count");

const COMMANDS: &[Spec] = &[
    Spec {
        name: "sim-dim",
        about: "Similarity dimension from contraction ratios or of a family",
        schema: "JSON result: {s, ...}",
        flags: &[("ratios", "comma separated contraction ratios"), FAMILY, LAMBDA],
        run: commands::sim_dim,
    },
    Spec {
        name: "pressure-curve",
        about: "Geometric pressure t -> P(t) at a parameter",
        schema: "CSV columns: t,depth,pressure,richardson,best",
        flags: &[FAMILY, LAMBDA, ("t", "grid lo:hi:count (default 0:1:11)"), ("depth", "cylinder depth (default 10)")],
        run: commands::pressure_curve,
    },
    Spec {
        name: "gibbs",
        about: "Transfer-operator Gibbs measure of a potential",
        schema: "JSON result: {depth, eigenvalue, log_eigenvalue, weights, residual, truncation, ...}; CSV columns: word,mass",
        flags: &[
            ("potential", "first-symbol:p1,p2,... | geometric[:s] | place-dependent:rho | matrix-norm:q"),
            FAMILY,
            LAMBDA,
            ("depth", "cylinder depth of the output (default 6)"),
            ("truncation", "transfer operator state depth"),
            ("matrices", "matrices a,b,c,d;... for matrix-norm"),
        ],
        run: commands::gibbs,
    },
    Spec {
        name: "dim-scan",
        about: "Entropy, Lyapunov exponent and dimension estimates over a parameter grid",
        schema: "CSV columns: lambda (or lambda_1..lambda_d),h,chi,ratio_dim,cor_dim,box_dim,extrapolation_residual",
        flags: &[
            FAMILY,
            LAMBDA,
            ("depth", "measure depth (default 10)"),
            ("levels", "energy levels (default 10)"),
            ("box-depths", "comma separated box-counting depths"),
            ("measure", "bernoulli[:p1,...] | place-dependent:rho | geometric"),
        ],
        run: commands::dim_scan,
    },
    Spec {
        name: "bc-region",
        about: "Absolute continuity / singularity map of place-dependent Bernoulli convolutions",
        schema: "CSV columns: lambda,rho,A,B,dim_lower,dim_upper,class",
        flags: &[("lambda", "grid (default 0.5:0.67:50)"), ("rho", "grid (default 0:0.45:50)")],
        run: commands::bc_region,
    },
    Spec {
        name: "bc-sample",
        about: "Chaos-game samples of place-dependent Bernoulli convolutions",
        schema: "CSV columns: lambda,rho,seed,n,h_mc,h_std_error,chi_mc,A,B,stationarity; with dump=true: x",
        flags: &[
            ("lambda", "grid (default 0.55)"),
            ("rho", "grid (default 0.1)"),
            ("n", "samples per cell (default 100000)"),
            ("seed", "base seed (default 0)"),
            ("dump", "true to write the samples of a single cell"),
        ],
        run: commands::bc_sample,
    },
    Spec {
        name: "transversality",
        about: "Grid check of the transversality condition",
        schema: "JSON result: report; CSV columns: lambda,i,j,distance,gradient_gap,eta (violations)",
        flags: &[
            FAMILY,
            ("grid", "points per parameter axis, one value or comma list (default 9)"),
            ("depth", "word depth (default 4)"),
            ("gradient-depth", "gradient series terms (default 40)"),
        ],
        run: commands::transversality,
    },
    Spec {
        name: "furstenberg",
        about: "Pressure, Lyapunov exponents and dimension for positive matrix cocycles",
        schema: "JSON result: {m, q, in_u, pressure, lyapunov, gibbs, dimension}",
        flags: &[
            ("matrices", "a,b,c,d;a,b,c,d;... (default 2,1,1,2;1,1,1,2)"),
            ("q", "exponent (default 1)"),
            ("depth", "word depth (default 8)"),
        ],
        run: commands::furstenberg,
    },
    Spec {
        name: "baker",
        about: "Slanted baker map x-marginal against the Bernoulli convolution sampler",
        schema: "CSV columns: lambda,rho,bc_lambda,bc_rho,seed,n,ks; with dump=true: x,y",
        flags: &[
            ("lambda", "grid (default 0.55)"),
            ("rho", "grid (default 0.1)"),
            ("n", "samples per sampler (default 200000)"),
            ("seed", "base seed (default 0)"),
            ("bc-lambda", "override lambda of the comparison sampler"),
            ("bc-rho", "override rho of the comparison sampler"),
            ("dump", "true to write the orbit of a single cell"),
        ],
        run: commands::baker,
    },
];

fn value_arg(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).value_name("VALUE").help(help).allow_hyphen_values(true)
}

fn build() -> Command {
    let mut cmd = Command::new("ifslab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Parametrized interval IFS: pressure, Gibbs measures, dimension and transversality")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(value_arg("config", "key=value config file").global(true))
        .arg(value_arg("out", "output file (stdout if omitted)").global(true))
        .arg(value_arg("format", "csv or json").global(true))
        .arg(
            Arg::new("set")
                .long("set")
                .value_name("KEY=VALUE")
                .help("extra config entry, repeatable")
                .action(ArgAction::Append)
                .global(true),
        );
    for spec in COMMANDS {
        let mut sub = Command::new(spec.name).about(spec.about).after_help(spec.schema);
        for &(flag, help) in spec.flags {
            sub = sub.arg(value_arg(flag, help));
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_CONFIG
    }
}

fn render(name: &str, report: &Report, cfg: &Config, format: Format) -> Result<String> {
    match format {
        Format::Csv => report
            .table
            .as_ref()
            .map(|t| t.to_csv())
            .ok_or_else(|| Error::invalid(format!("{name} has no CSV output"))),
        Format::Json => {
            let echo: serde_json::Map<String, Value> =
                cfg.echo().iter().map(|(k, v)| (k.clone(), Value::from(v.as_str()))).collect();
            let mut doc = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "command": name,
                "config-echo": echo,
                "result": report.result,
            });
            format::round_json(&mut doc);
            let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::invalid(e.to_string()))?;
            text.push('\n');
            Ok(text)
        }
    }
}

fn execute(matches: &clap::ArgMatches) -> Result<()> {
    let (name, sub) = matches.subcommand().ok_or_else(|| Error::invalid("missing subcommand"))?;
    let spec = COMMANDS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::invalid(format!("unknown subcommand {name}")))?;
    let mut cfg = match sub.get_one::<String>("config") {
        Some(p) => Config::from_file(&PathBuf::from(p))?,
        None => Config::default(),
    };
    if let Some(sets) = sub.get_many::<String>("set") {
        for s in sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("--set expects KEY=VALUE, got {s:?}")))?;
            cfg.set(k.trim(), v.trim());
        }
    }
    for &(flag, _) in spec.flags {
        if let Some(v) = sub.get_one::<String>(flag) {
            cfg.set(flag, v);
        }
    }
    let out = sub.get_one::<String>("out").cloned().or_else(|| cfg.peek("out"));
    let format = sub.get_one::<String>("format").cloned().or_else(|| cfg.peek("format"));
    let format = format.map(|f| Format::parse(&f)).transpose()?;

    let report = (spec.run)(&mut cfg)?;
    let text = render(name, &report, &cfg, format.unwrap_or(report.default_format))?;
    let path = out.map(PathBuf::from);
    format::write_output(path.as_deref(), &text)?;
    match path {
        Some(p) => println!("{} -> {}", report.summary, p.display()),
        None => eprintln!("{}", report.summary),
    }
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match build().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    match execute(&matches) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
