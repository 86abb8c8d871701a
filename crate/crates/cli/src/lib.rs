//! Batch front end for the sqclock pipelines.
//!
//! A run reads one scenario file, resolves defaults, executes the
//! command and writes CSV/JSON artifacts with a manifest into the output
//! directory. See the README for the scenario schema.

// NaN must fail validation, which `!(x > 0.0)` guarantees.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod output;
pub mod scenario;

use std::path::{Path, PathBuf};

pub use commands::Failure;
use scenario::{Command, Scenario};

pub const EXIT_IO: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Schema(_) => EXIT_SCHEMA,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Schema(diags) => {
                write!(f, "scenario rejected:")?;
                for d in diags {
                    write!(f, "\n  {d}")?;
                }
                Ok(())
            }
            Failure::Numerical(e) => write!(f, "numerical failure: {e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Request {
    pub scenario: PathBuf,
    /// Command named on the command line; must match the file when set.
    pub command: Option<Command>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub validate_only: bool,
}

#[derive(Debug)]
pub enum Report {
    Valid { scenario: Box<Scenario> },
    Ran { out_dir: PathBuf, content_hash: String, summary: serde_json::Value },
}

/// Loads and checks a scenario without running it.
pub fn load(path: &Path, seed: Option<u64>) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut s = scenario::parse(&text).map_err(Failure::Schema)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    commands::resolve_inputs(&mut s, path);
    let diags = scenario::validate(&s);
    if diags.is_empty() {
        Ok(s)
    } else {
        Err(Failure::Schema(diags))
    }
}

fn out_dir(req: &Request, s: &Scenario) -> PathBuf {
    if let Some(o) = &req.out {
        return o.clone();
    }
    match &s.output_dir {
        Some(d) => scenario::resolve_relative(&req.scenario, d),
        None => PathBuf::from("out").join(&s.name),
    }
}

pub fn execute(req: &Request) -> Result<Report, Failure> {
    let s = load(&req.scenario, req.seed)?;
    if let Some(c) = req.command {
        if c != s.command {
            return Err(Failure::Schema(vec![format!(
                "command: scenario is `{}` but `{}` was requested",
                s.command.name(),
                c.name()
            )]));
        }
    }
    if req.validate_only {
        return Ok(Report::Valid { scenario: Box::new(s) });
    }
    let outcome = match req.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Io(format!("thread pool: {e}")))?;
            pool.install(|| commands::run(&s))?
        }
        None => commands::run(&s)?,
    };
    let dir = out_dir(req, &s);
    let content_hash = output::write_run(&dir, &s, outcome.inputs, outcome.artifacts, &outcome.summary)
        .map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    Ok(Report::Ran { out_dir: dir, content_hash, summary: outcome.summary })
}
