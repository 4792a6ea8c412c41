//! Command line front end. `run` is the whole program minus process exit.

pub mod cache;
mod commands;
pub use commands::parse_digits;
pub mod config;

use cache::{cache_key, Cache, Lookup};
use clap::{Args, Parser, Subcommand};
pub use config::{OutputFormat, RunConfig};
use serde::Serialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "nprenorm", version, about = "Near-parabolic renormalization numerics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// JSON file with RunConfig fields; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// working precision in bits (>= 64)
    #[arg(long, global = true)]
    pub precision: Option<u32>,
    /// continued fraction depth
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// json or csv
    #[arg(long, global = true)]
    pub output: Option<OutputFormat>,
    #[arg(long = "no-cache", global = true)]
    pub no_cache: bool,
    #[arg(long = "cache-dir", global = true)]
    pub cache_dir: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Modified continued fraction digits of a real number
    CfExpand {
        #[arg(long)]
        value: String,
    },
    /// Value of a digit stream
    Synth {
        #[arg(long)]
        digits: String,
    },
    /// Brjuno profile: alpha_j, beta_j, partial sums, q_n
    Brjuno {
        #[arg(long)]
        digits: String,
    },
    /// Bi-sequence B[k][i] and its closed form
    Bisequence {
        #[arg(long)]
        digits: String,
        #[arg(long = "B")]
        b: Option<f64>,
        /// largest row (default: depth)
        #[arg(long)]
        k: Option<usize>,
    },
    /// Good-level set L(alpha, T, l) up to depth
    GoodLevels {
        #[arg(long)]
        digits: String,
        #[arg(long = "B")]
        b: Option<f64>,
        #[arg(long = "T", allow_hyphen_values = true)]
        t: f64,
        #[arg(long, default_value_t = 0)]
        level: usize,
    },
    /// Interval heights of a chain started at level n
    Heights {
        #[arg(long)]
        digits: String,
        /// starting level n (default: depth)
        #[arg(long)]
        level: Option<usize>,
        #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
        seed: f64,
        #[arg(long = "M4")]
        m4: Option<f64>,
        #[arg(long = "B")]
        b: Option<f64>,
    },
    /// Finite-depth Brjuno / non-Brjuno diagnostics (heuristic)
    Dichotomy {
        #[arg(long)]
        digits: String,
        #[arg(long = "B")]
        b: Option<f64>,
        #[arg(long = "T", allow_hyphen_values = true)]
        t: f64,
        /// largest l reported
        #[arg(long, default_value_t = 5)]
        level: usize,
    },
    /// Orbit of one point
    Orbit {
        #[arg(long)]
        digits: String,
        #[arg(long, default_value = "P")]
        map: crate::dynamics::Variant,
        /// cv, cp, q<k> (f^{q_k}(cv)) or x,y
        #[arg(long, default_value = "cv", allow_hyphen_values = true)]
        seed: String,
        #[arg(long = "N", default_value_t = 1000)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        stride: u64,
    },
    /// Running Birkhoff averages
    Birkhoff {
        #[arg(long)]
        digits: String,
        #[arg(long, default_value = "P")]
        map: crate::dynamics::Variant,
        /// re, im, abs2 or ball:cx,cy,delta; repeatable
        #[arg(long = "observable", default_values_t = ["re".to_string(), "im".to_string()])]
        observables: Vec<String>,
        /// cv, cp, q<k> or x,y; repeatable
        #[arg(long = "seeds", default_values_t = ["cv".to_string()], allow_hyphen_values = true)]
        seeds: Vec<String>,
        #[arg(long = "N", default_value_t = 100_000)]
        n: u64,
        #[arg(long)]
        window: Option<u64>,
    },
    /// Siegel disk estimate
    Siegel {
        #[arg(long)]
        digits: String,
        #[arg(long, default_value = "P")]
        map: crate::dynamics::Variant,
        #[arg(long, default_value_t = 200)]
        terms: usize,
    },
    /// Periodic cycles of period q_level
    Cycles {
        #[arg(long)]
        digits: String,
        #[arg(long, default_value = "P")]
        map: crate::dynamics::Variant,
        #[arg(long)]
        level: usize,
        /// number of Newton seeds on the ring
        #[arg(long)]
        seeds: Option<usize>,
        /// ring radius (default: 1.1 times the Yoccoz lower bound)
        #[arg(long)]
        ring: Option<f64>,
    },
    /// Fraction of the first q_level orbit points near 0 or the Siegel disk
    Density {
        #[arg(long)]
        digits: String,
        #[arg(long, default_value = "Q")]
        map: crate::dynamics::Variant,
        #[arg(long)]
        level: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value = "near_zero")]
        mode: crate::dynamics::DensityMode,
    },
    /// Build and validate a perturbed Fatou coordinate
    FatouChart {
        #[arg(long, default_value = "hiN:50")]
        digits: String,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Multiplier of the renormalized map at 0
    RenormCheck {
        #[arg(long, default_value = "hiN:50")]
        digits: String,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 1e-3)]
        radius: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CfExpand { .. } => "cf-expand",
            Command::Synth { .. } => "synth",
            Command::Brjuno { .. } => "brjuno",
            Command::Bisequence { .. } => "bisequence",
            Command::GoodLevels { .. } => "good-levels",
            Command::Heights { .. } => "heights",
            Command::Dichotomy { .. } => "dichotomy",
            Command::Orbit { .. } => "orbit",
            Command::Birkhoff { .. } => "birkhoff",
            Command::Siegel { .. } => "siegel",
            Command::Cycles { .. } => "cycles",
            Command::Density { .. } => "density",
            Command::FatouChart { .. } => "fatou-chart",
            Command::RenormCheck { .. } => "renorm-check",
        }
    }
}

/// Table for CSV output.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub struct Artifact {
    pub inputs: Value,
    pub result: Value,
    pub table: Table,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render(cmd: &str, cfg: &RunConfig, art: &Artifact) -> Vec<u8> {
    let fp = cfg.fingerprint();
    match cfg.output_format {
        OutputFormat::Json => {
            let v = json!({
                "command": cmd,
                "version": env!("CARGO_PKG_VERSION"),
                "fingerprint": fp,
                "config": cfg,
                "inputs": art.inputs,
                "result": art.result,
            });
            let mut s = serde_json::to_string_pretty(&v).unwrap();
            s.push('\n');
            s.into_bytes()
        }
        OutputFormat::Csv => {
            let mut s = format!("# nprenorm {cmd} fingerprint={fp}\n");
            let line = |r: &[String]| r.iter().map(|x| csv_field(x)).collect::<Vec<_>>().join(",");
            s.push_str(&line(&art.table.header));
            s.push('\n');
            for r in &art.table.rows {
                s.push_str(&line(r));
                s.push('\n');
            }
            s.into_bytes()
        }
    }
}

fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn resolve_config(g: &GlobalArgs) -> crate::error::Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = g.precision {
        cfg.precision_bits = p;
    }
    if let Some(d) = g.depth {
        cfg.depth = d;
    }
    if let Some(o) = g.output {
        cfg.output_format = o;
    }
    if let Some(c) = &g.cache_dir {
        cfg.cache_dir = c.clone();
    }
    Ok(cfg)
}

/// Run with `args` (program name first). Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(out, "{}", e.render());
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            let _ = writeln!(err, "{}", error_json("UsageError", e.render().to_string().trim()));
            return 2;
        }
    };
    let cfg = match resolve_config(&cli.global).and_then(|c| c.validate().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "{}", error_json("UsageError", &e.to_string()));
            return 2;
        }
    };
    let name = cli.command.name();
    let cache = (!cli.global.no_cache).then(|| Cache::new(&cfg.cache_dir));
    let mut key_cfg = serde_json::to_value(&cfg).unwrap();
    key_cfg.as_object_mut().unwrap().remove("cache_dir");
    let key = cache_key(&json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "inputs": commands::key_inputs(&cli.command),
        "config": key_cfg,
    }));
    if let Some(c) = &cache {
        match c.get(&key) {
            Lookup::Hit(body) => {
                let _ = writeln!(err, "{}", json!({"cache": "hit", "key": key}));
                let _ = out.write_all(&body);
                return 0;
            }
            Lookup::Corrupt(e) => {
                let _ = writeln!(err, "{}", json!({"cache": "corrupt", "key": key, "error": {"kind": e.kind(), "message": e.to_string()}}));
            }
            Lookup::Miss => {
                let _ = writeln!(err, "{}", json!({"cache": "miss", "key": key}));
            }
        }
    }
    match commands::execute(&cli.command, &cfg, cache.as_ref()) {
        Ok(art) => {
            let body = render(name, &cfg, &art);
            if let Some(c) = &cache {
                if let Err(e) = c.put(&key, &body) {
                    let _ = writeln!(err, "{}", json!({"cache": "write_failed", "message": e.to_string()}));
                }
            }
            let _ = out.write_all(&body);
            0
        }
        Err(e) => {
            let _ = writeln!(err, "{}", error_json(e.kind(), &e.to_string()));
            1
        }
    }
}

pub fn main_exit_code() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
