mod commands;
mod output;
mod params;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{Arg, ArgMatches, Command};

use params::{flag, Key, Params};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(pinch::Error),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<pinch::Error> for CliError {
    fn from(e: pinch::Error) -> Self {
        match e {
            pinch::Error::Io(m) => CliError::Io(m),
            e => CliError::Compute(e),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type Handler = fn(&Params) -> Result<(), CliError>;

struct Sub {
    name: &'static str,
    about: &'static str,
    keys: &'static [Key],
    run: Handler,
}

fn print_special(p: &Params) -> Result<(), CliError> {
    print!("{}", commands::special(p)?);
    Ok(())
}

const SUBS: &[Sub] = &[
    Sub { name: "spectrum", about: "Joint spectrum (E1, E2) of the radial problem", keys: commands::SPECTRUM, run: commands::spectrum },
    Sub { name: "gaps", about: "Consecutive gaps on one line against the gap formulas", keys: commands::GAPS, run: commands::gaps },
    Sub { name: "smallest-gap", about: "Smallest n = 0 gap over a list of h", keys: commands::SMALLEST_GAP, run: commands::smallest_gap },
    Sub { name: "weyl", about: "Eigenvalue counts in a window against the log-Weyl term", keys: commands::WEYL, run: commands::weyl },
    Sub { name: "dh-volume", about: "Monte Carlo Liouville volume of a scaled window", keys: commands::DH_VOLUME, run: commands::dh },
    Sub { name: "actions", about: "Classical actions, periods and rotation numbers on a grid", keys: commands::ACTIONS, run: commands::actions },
    Sub { name: "monodromy", about: "Classical monodromy along a circle in the (E, L) plane", keys: commands::MONODROMY, run: commands::monodromy },
    Sub { name: "unwind", about: "Unwind one random spectral polygon", keys: commands::UNWIND, run: commands::unwind_cmd },
    Sub { name: "count", about: "Compare eigenvalue and lattice-point counts on random polygons", keys: commands::COUNT, run: commands::count },
    Sub { name: "special", about: "Evaluate a special function", keys: commands::SPECIAL, run: print_special },
];

const BS: &[Sub] = &[
    Sub { name: "fit", about: "Fit B, C and the offset to computed lines", keys: commands::BS_FIT, run: commands::bs_fit },
    Sub { name: "predict", about: "Roots of the quantization condition on one line", keys: commands::BS_PREDICT, run: commands::bs_predict },
];

fn with_keys(mut cmd: Command, keys: &[Key]) -> Command {
    for k in keys {
        cmd = cmd.arg(
            Arg::new(k.name)
                .long(flag(k.name))
                .value_name("VALUE")
                .allow_hyphen_values(true)
                .default_value(k.default)
                .help(k.help),
        );
    }
    cmd.arg(Arg::new("config").long("config").value_name("FILE").help("flat key = value configuration file"))
}

fn cli() -> Command {
    let mut root = Command::new("pinch")
        .version(VERSION)
        .about("Joint spectrum and quantum monodromy of the quantum Champagne bottle")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for s in SUBS {
        root = root.subcommand(with_keys(Command::new(s.name).about(s.about), s.keys));
    }
    let mut bs = Command::new("bs").about("Singular Bohr-Sommerfeld rules").subcommand_required(true);
    for s in BS {
        bs = bs.subcommand(with_keys(Command::new(s.name).about(s.about), s.keys));
    }
    let reproduce = with_keys(
        Command::new("reproduce").about("Regenerate the plot data of a figure and check it").arg(
            Arg::new("figure").required(true).value_parser(reproduce::FIGURES.to_vec()).help("figure id"),
        ),
        reproduce::KEYS,
    );
    root.subcommand(bs).subcommand(reproduce)
}

fn resolve(command: &str, keys: &[Key], m: &ArgMatches) -> Result<Params, CliError> {
    let flags: Vec<(String, String)> = keys
        .iter()
        .filter(|k| m.value_source(k.name) == Some(ValueSource::CommandLine))
        .map(|k| (k.name.to_string(), m.get_one::<String>(k.name).cloned().unwrap_or_default()))
        .collect();
    let file = m.get_one::<String>("config").map(PathBuf::from);
    let p = Params::resolve(command, keys, file.as_deref(), &flags)?;
    eprint!("{}", p.echo());
    Ok(p)
}

fn set_workers() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PINCH_WORKERS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("PINCH_WORKERS = '{v}': expected a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))
}

fn dispatch(m: &ArgMatches) -> Result<bool, CliError> {
    set_workers()?;
    let (name, sub) = m.subcommand().expect("subcommand is required");
    if name == "reproduce" {
        let figure = sub.get_one::<String>("figure").expect("figure is required").clone();
        let p = resolve(&format!("reproduce {figure}"), reproduce::KEYS, sub)?;
        return reproduce::run(&figure, &p);
    }
    let (table, command, sub) = if name == "bs" {
        let (inner, m2) = sub.subcommand().expect("bs subcommand is required");
        (BS, inner, m2)
    } else {
        (SUBS, name, sub)
    };
    let s = table.iter().find(|s| s.name == command).expect("clap only yields declared subcommands");
    let label = if name == "bs" { format!("bs {command}") } else { command.to_string() };
    let p = resolve(&label, s.keys, sub)?;
    (s.run)(&p)?;
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let m = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&m) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pinch: {e}");
            ExitCode::from(e.code())
        }
    }
}
