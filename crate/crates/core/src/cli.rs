//! Command-line front end. `cli_run` is the whole program; the binary only
//! forwards its arguments and exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::certify::{cert_verify, CertVerdict, PathCertificate};
use crate::error::{Error, Result};
use crate::instance::{AmbientSpec, Instance, InstanceFile};
use crate::lattice::{lat_det_profile, lat_is_ordinary, LatticePoint};
use crate::moduli::{mod_enumerate, oracle_edges, Enumeration, ModuliGraph, SearchBounds, SearchStatus};
use crate::pathfinder::{pf_connect_traced, pf_edges, PfOptions, PfTrace};
use crate::phimod::MatrixTupleRecord;

pub const VERSION: &str = concat!("flatmodel ", env!("CARGO_PKG_VERSION"));

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_EXHAUSTED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "flatmodel",
    version,
    about = "Moduli of finite flat models: enumeration and connectivity certificates"
)]
struct Cli {
    /// Working precision in coefficients (overrides the instance file).
    #[arg(long, global = true)]
    precision: Option<i64>,
    /// JSON file with search bounds (overrides the instance file).
    #[arg(long, global = true)]
    bounds: Option<PathBuf>,
    /// Worker threads for enumeration and graph construction.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Dump intermediate pathfinder states to standard error.
    #[arg(long, global = true)]
    trace: bool,
    /// Write machine output here instead of standard output.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphFormat {
    Json,
    Dot,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Validate an instance and report its determinant profile.
    Describe { instance: PathBuf },
    /// List the moduli points with their ordinarity.
    Enumerate { instance: PathBuf },
    /// Certified edges and connected components.
    Graph {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: GraphFormat,
        /// Also run the bounded adjacency oracle on every pair.
        #[arg(long)]
        oracle: bool,
    },
    /// Certificate path between two points, given by ID or unique ID prefix.
    Path { instance: PathBuf, from: String, to: String },
    /// Check a certificate against an instance.
    Verify { instance: PathBuf, certificate: PathBuf },
    /// Emit an instance file for the irreducible normal form.
    NormalForm {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        e: i64,
        #[arg(long)]
        s: u64,
        /// Field modulus of degree 2n, lowest coefficient first (comma separated).
        #[arg(long, value_delimiter = ',')]
        modulus: Option<Vec<u32>>,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SearchBudgetExceeded { .. } | Error::PrecisionExhausted(_) => EXIT_EXHAUSTED,
        Error::InternalInvariantViolation(_) => EXIT_VERIFY_FAILED,
        _ => EXIT_INVALID,
    }
}

struct Ctx {
    cli: Cli,
}

#[derive(Serialize)]
struct Header<'a, T: Serialize> {
    version: &'a str,
    instance_hash: &'a str,
    #[serde(flatten)]
    body: T,
}

impl Ctx {
    fn load(&self, path: &Path) -> Result<Instance> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidInstance(format!("cannot read {}: {e}", path.display())))?;
        let mut file: InstanceFile =
            serde_json::from_str(&text).map_err(|e| Error::InvalidInstance(format!("{}: {e}", path.display())))?;
        if let Some(b) = &self.cli.bounds {
            let text = fs::read_to_string(b)
                .map_err(|e| Error::InvalidInstance(format!("cannot read {}: {e}", b.display())))?;
            file.bounds = serde_json::from_str::<SearchBounds>(&text)
                .map_err(|e| Error::InvalidInstance(format!("{}: {e}", b.display())))?;
        }
        if let Some(p) = self.cli.precision {
            file.precision = Some(p);
        }
        file.build()
    }

    fn enumerate(&self, inst: &Instance) -> Result<Enumeration> {
        inst.with_retry(|i| mod_enumerate(&i.params, i.tuple(), &i.file.bounds))
    }

    fn ordinarity(&self, inst: &Instance, pts: &[LatticePoint]) -> Result<Vec<bool>> {
        pts.iter().map(|l| inst.with_retry(|i| lat_is_ordinary(&i.params, l).map(|o| o.is_ordinary()))).collect()
    }

    fn emit(&self, out: &mut dyn Write, text: &str) -> Result<()> {
        match &self.cli.output {
            Some(p) => {
                fs::write(p, text).map_err(|e| Error::InvalidInstance(format!("cannot write {}: {e}", p.display())))
            }
            None => writeln!(out, "{text}").map_err(|e| Error::InvalidInstance(format!("cannot write output: {e}"))),
        }
    }

    fn json<T: Serialize>(&self, out: &mut dyn Write, hash: &str, body: T) -> Result<()> {
        let doc = Header { version: VERSION, instance_hash: hash, body };
        self.emit(out, &serde_json::to_string_pretty(&doc).expect("output serializes"))
    }

    fn trace(&self, err: &mut dyn Write, t: &PfTrace) {
        if self.cli.trace {
            let _ = writeln!(err, "{}", t.to_json());
        }
    }

    fn run(&self, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
        match &self.cli.cmd {
            Cmd::Describe { instance } => {
                let inst = self.load(instance)?;
                let profile = lat_det_profile(&inst.params, inst.tuple())?;
                #[derive(Serialize)]
                struct Body<'a> {
                    p: u32,
                    n: usize,
                    e: i64,
                    field_degree: u32,
                    ambient: &'a str,
                    precision: i64,
                    det_profile: Option<Vec<i64>>,
                    verdict: &'a str,
                }
                let ambient = match inst.file.ambient {
                    AmbientSpec::Irreducible { .. } => "irreducible",
                    AmbientSpec::Reducible { .. } => "reducible",
                    AmbientSpec::Raw { .. } => "raw",
                };
                let verdict = if profile.is_some() { "determinant profile admissible" } else { "empty moduli" };
                self.json(
                    out,
                    &inst.hash,
                    Body {
                        p: inst.file.p,
                        n: inst.file.n,
                        e: inst.file.e,
                        field_degree: inst.ctx().degree(),
                        ambient,
                        precision: inst.params.precision,
                        det_profile: profile,
                        verdict,
                    },
                )?;
                Ok(EXIT_OK)
            }
            Cmd::Enumerate { instance } => {
                let inst = self.load(instance)?;
                let en = self.enumerate(&inst)?;
                let ord = self.ordinarity(&inst, &en.points)?;
                #[derive(Serialize)]
                struct Row {
                    id: String,
                    exponents: Vec<(i64, i64)>,
                    ordinary: bool,
                    basis: MatrixTupleRecord,
                }
                #[derive(Serialize)]
                struct Body {
                    status: SearchStatus,
                    explored: u64,
                    det_profile: Option<Vec<i64>>,
                    points: Vec<Row>,
                }
                let rows = en
                    .points
                    .iter()
                    .zip(&ord)
                    .map(|(l, &o)| Row {
                        id: l.id().into(),
                        exponents: l.exponents(),
                        ordinary: o,
                        basis: l.basis.to_record(),
                    })
                    .collect();
                let status = en.status;
                self.json(
                    out,
                    &inst.hash,
                    Body { status, explored: en.explored, det_profile: en.profile, points: rows },
                )?;
                Ok(if status == SearchStatus::BudgetExceeded { EXIT_EXHAUSTED } else { EXIT_OK })
            }
            Cmd::Graph { instance, format, oracle } => {
                let inst = self.load(instance)?;
                let en = self.enumerate(&inst)?;
                if en.status == SearchStatus::BudgetExceeded {
                    return Err(Error::SearchBudgetExceeded { explored: en.explored });
                }
                let ord = self.ordinarity(&inst, &en.points)?;
                let (mut edges, trace) = pf_edges(&inst, &en.points, &ord)?;
                self.trace(err, &trace);
                if *oracle {
                    edges.extend(inst.with_retry(|i| oracle_edges(&i.params, &en.points, &i.file.bounds.oracle))?);
                }
                let g = ModuliGraph::new(en.points, ord, edges);
                match format {
                    GraphFormat::Dot => self.emit(out, &g.to_dot())?,
                    GraphFormat::Json => {
                        let v: serde_json::Value = serde_json::from_str(&g.to_json()).expect("graph json parses");
                        self.json(out, &inst.hash, v)?
                    }
                }
                Ok(EXIT_OK)
            }
            Cmd::Path { instance, from, to } => {
                let inst = self.load(instance)?;
                let en = self.enumerate(&inst)?;
                let pick = |id: &str| -> Result<LatticePoint> {
                    let m: Vec<&LatticePoint> = en.points.iter().filter(|l| l.id().starts_with(id)).collect();
                    match m.as_slice() {
                        [one] => Ok((*one).clone()),
                        [] => Err(Error::InvalidInstance(format!("no point with ID {id}"))),
                        _ => Err(Error::InvalidInstance(format!("ID prefix {id} is ambiguous"))),
                    }
                };
                let (l1, l2) = (pick(from)?, pick(to)?);
                let opts = PfOptions { bounds: None, points: Some(en.points.clone()) };
                let (cert, trace) = inst.with_retry(|i| pf_connect_traced(i, &l1, &l2, &opts))?;
                self.trace(err, &trace);
                self.emit(out, &cert.to_json())?;
                Ok(EXIT_OK)
            }
            Cmd::Verify { instance, certificate } => {
                let inst = self.load(instance)?;
                let text = fs::read_to_string(certificate)
                    .map_err(|e| Error::InvalidInstance(format!("cannot read {}: {e}", certificate.display())))?;
                let cert = match PathCertificate::from_json(inst.ctx(), &text) {
                    Ok(c) => c,
                    Err(e) => {
                        let _ = writeln!(err, "malformed certificate: {e}");
                        return Ok(EXIT_VERIFY_FAILED);
                    }
                };
                let verdict = cert_verify(&inst.params, inst.tuple(), &inst.hash, &cert);
                #[derive(Serialize)]
                struct Body {
                    ok: bool,
                    failing_step: Option<usize>,
                    reason: Option<String>,
                    steps: usize,
                }
                let body = match &verdict {
                    CertVerdict::Ok => Body { ok: true, failing_step: None, reason: None, steps: cert.steps.len() },
                    CertVerdict::Fail { step, reason } => {
                        let _ = writeln!(err, "certificate rejected: {verdict}");
                        Body { ok: false, failing_step: *step, reason: Some(reason.clone()), steps: cert.steps.len() }
                    }
                };
                self.json(out, &inst.hash, body)?;
                Ok(if verdict.is_ok() { EXIT_OK } else { EXIT_VERIFY_FAILED })
            }
            Cmd::NormalForm { p, n, e, s, modulus } => {
                let mut file = InstanceFile::irreducible(*p, *n, *e, *s);
                if let Some(m) = modulus {
                    file.modulus = m.clone();
                }
                let inst = file.build()?;
                self.emit(out, &inst.to_json())?;
                Ok(EXIT_OK)
            }
            Cmd::Selftest => {
                let results = crate::selftest::run_all();
                let mut ok = true;
                for (name, pass, detail) in &results {
                    ok &= *pass;
                    let _ = writeln!(out, "{} {name}: {detail}", if *pass { "PASS" } else { "FAIL" });
                }
                Ok(if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
            }
        }
    }
}

/// Parse `argv`, run the command, and return the process exit code.
pub fn cli_run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(err, "{e}");
            } else {
                let _ = write!(out, "{e}");
            }
            return code;
        }
    };
    if let Some(j) = cli.jobs {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    let ctx = Ctx { cli };
    match ctx.run(out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
