use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ebx_core::decomp::{km_decompose, verify_decomposition};
use ebx_core::eb::{random_cstar_extreme, random_unital_eb};
use ebx_core::extremality::{
    arveson_derivative, extract_canonical, extremality_witness, rn_derivative, unitary_equivalent,
};
use ebx_core::gallery::{run_all, run_case};
use ebx_core::{Channel, Error, SeededRng, Tolerance};
use serde::Serialize;

use crate::error::CliError;
use crate::format::{self, parse_channel, serialize_channel, Entry, MatrixFile};
use crate::report::{self, AnalysisReport, BlockOut, GalleryReport, KmReport};

#[derive(Debug, Parser)]
#[command(
    name = "ebx",
    version,
    about = "Analyze entanglement-breaking maps between matrix algebras"
)]
pub struct Cli {
    /// Numerical tolerance used for every rank, positivity and equality decision.
    #[arg(long, global = true, env = "EBX_TOL", default_value_t = Tolerance::DEFAULT_VALUE)]
    pub tol: f64,

    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RandomKind {
    /// `X -> sum <u_i, X u_i> R_i` for a random POVM `{R_i}`.
    PovmEnsemble,
    /// A random map in canonical C*-extreme form.
    CstarExtreme,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full structural report for one map.
    Analyze { path: PathBuf },
    /// C*-convex decomposition into C*-extreme maps.
    Km { path: PathBuf },
    /// Radon-Nikodym derivative of the map at PATH with respect to a dominating canonical map.
    Rn {
        path: PathBuf,
        #[arg(long)]
        dominating: PathBuf,
    },
    /// Arveson derivative of the map at PATH with respect to a dominating CP map.
    Arveson {
        path: PathBuf,
        #[arg(long)]
        dominating: PathBuf,
    },
    /// Unitary equivalence of two C*-extreme maps.
    Equiv { a: PathBuf, b: PathBuf },
    /// Print a seeded random map as a channel file.
    Random {
        #[arg(long, value_enum)]
        kind: RandomKind,
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d2: usize,
        /// Ensemble size or number of blocks; defaults to d2.
        #[arg(long)]
        terms: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the scripted reference cases.
    Gallery {
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        case: Option<String>,
        #[arg(long)]
        all: bool,
    },
}

/// Text written to standard output and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, code: 0 }
    }
}

pub fn load(path: &Path) -> Result<Channel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_channel(&text).map_err(|e| CliError::InFile {
        path: path.to_owned(),
        source: Box::new(e),
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = format::to_json(v);
    s.push('\n');
    s
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let tol = Tolerance::uniform(cli.tol).map_err(CliError::from)?;
    let t = cli.tol;
    match &cli.command {
        Command::Analyze { path } => {
            let r = report::analyze(&load(path)?, t, &tol)?;
            Ok(Outcome::ok(if cli.json {
                to_json(&r)
            } else {
                analysis_text(&r)
            }))
        }
        Command::Km { path } => {
            let ch = load(path)?;
            let comb = km_decompose(&ch, &tol)?;
            let check = verify_decomposition(&comb, &ch, &tol)?;
            let r = report::km_report(&comb, check, t);
            Ok(Outcome::ok(if cli.json {
                to_json(&r)
            } else {
                km_text(&r)
            }))
        }
        Command::Rn { path, dominating } => {
            let (phi, psi) = (load(dominating)?, load(path)?);
            let form = extract_canonical(&phi, &tol)?;
            let rn = rn_derivative(&form, &psi, &tol)?;
            let witness = match extremality_witness(&form, &psi, &tol) {
                Ok(z) => Some(z),
                Err(Error::NotInvertible { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let r = report::rn_report(&form, &rn, witness.as_ref(), t);
            Ok(Outcome::ok(if cli.json {
                to_json(&r)
            } else {
                let mut s = String::new();
                writeln!(s, "R = Psi(I):\n{}", matrix_text(&r.r)).unwrap();
                writeln!(s, "blocks: {}", r.per_block.len()).unwrap();
                writeln!(s, "residual: {:e}", r.residual).unwrap();
                match &r.witness {
                    Some(z) => writeln!(s, "witness Z:\n{}", matrix_text(z)).unwrap(),
                    None => writeln!(s, "witness Z: none (R is singular)").unwrap(),
                }
                s
            }))
        }
        Command::Arveson { path, dominating } => {
            let (phi, psi) = (load(dominating)?, load(path)?);
            let a = arveson_derivative(&phi, &psi, &tol)?;
            let r = report::arveson_report(&a, t);
            Ok(Outcome::ok(if cli.json {
                to_json(&r)
            } else {
                format!("T:\n{}\nresidual: {:e}\n", matrix_text(&r.t), r.residual)
            }))
        }
        Command::Equiv { a, b } => {
            let fa = extract_canonical(&load(a)?, &tol)?;
            let fb = extract_canonical(&load(b)?, &tol)?;
            let e = unitary_equivalent(&fa, &fb, &tol)?;
            let r = report::equiv_report(&e, t);
            Ok(Outcome::ok(if cli.json {
                to_json(&r)
            } else {
                let mut s = format!("equivalent: {}\n", r.equivalent);
                if let Some(u) = &r.witness_unitary {
                    writeln!(s, "witness unitary:\n{}", matrix_text(u)).unwrap();
                }
                s
            }))
        }
        Command::Random {
            kind,
            d1,
            d2,
            terms,
            seed,
        } => {
            let n = terms.unwrap_or(*d2);
            let mut rng = SeededRng::new(*seed);
            let (ch, name) = match kind {
                RandomKind::PovmEnsemble => {
                    (random_unital_eb(&mut rng, *d1, *d2, n)?, "povm-ensemble")
                }
                RandomKind::CstarExtreme => (
                    random_cstar_extreme(&mut rng, *d1, *d2, n)?,
                    "cstar-extreme",
                ),
            };
            let ch = ch.with_label(format!(
                "random {name} d1={d1} d2={d2} terms={n} seed={seed}"
            ));
            let mut s = serialize_channel(&ch);
            s.push('\n');
            Ok(Outcome::ok(s))
        }
        Command::Gallery { case, all } => {
            let cases = match (case, all) {
                (Some(name), false) => vec![run_case(name, &tol)?],
                _ => run_all(&tol),
            };
            let r = report::gallery_report(&cases, t);
            let code = if r.passed == r.total { 0 } else { 2 };
            Ok(Outcome {
                stdout: if cli.json {
                    to_json(&r)
                } else {
                    gallery_text(&r)
                },
                code,
            })
        }
    }
}

fn fmt_entry([re, im]: Entry) -> String {
    let clean = |v: f64| if v == 0.0 { 0.0 } else { v };
    let (re, im) = (clean(re), clean(im));
    if im == 0.0 {
        format!("{re:.6}")
    } else {
        format!("{re:.6}{im:+.6}i")
    }
}

fn matrix_text(m: &MatrixFile) -> String {
    m.iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|&e| fmt_entry(e)).collect();
            format!("  [{}]", cells.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn vector_text(v: &[Entry]) -> String {
    let cells: Vec<String> = v.iter().map(|&e| fmt_entry(e)).collect();
    format!("[{}]", cells.join(", "))
}

fn blocks_text(s: &mut String, blocks: &[BlockOut]) {
    for (k, b) in blocks.iter().enumerate() {
        writeln!(s, "  block {k}: rank {} u = {}", b.rank, vector_text(&b.u)).unwrap();
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn analysis_text(r: &AnalysisReport) -> String {
    let mut s = String::new();
    let label = r.label.as_deref().unwrap_or("(unlabelled)");
    writeln!(
        s,
        "map: {label}  M_{} -> M_{}  ({})",
        r.d1, r.d2, r.representation
    )
    .unwrap();
    writeln!(s, "tolerance: {:e}", r.tolerance).unwrap();
    let p = &r.predicates;
    writeln!(
        s,
        "completely positive: {}  unital: {}  trace preserving: {}  hermiticity preserving: {}",
        yes_no(p.is_cp),
        yes_no(p.is_unital),
        yes_no(p.is_tp),
        yes_no(p.is_hermiticity_preserving)
    )
    .unwrap();
    writeln!(s, "ppt: {}", yes_no(r.ppt)).unwrap();
    if let Some(eb) = &r.eb {
        let cert = eb
            .certificate_terms
            .map_or(String::new(), |n| format!(", certificate with {n} terms"));
        writeln!(
            s,
            "entanglement breaking: {} ({}{cert}; {})",
            eb.verdict,
            if eb.conclusive {
                "conclusive"
            } else {
                "inconclusive"
            },
            eb.provenance
        )
        .unwrap();
    }
    if let Some(b) = &r.rank_bounds {
        writeln!(
            s,
            "choi rank: {}  eb rank in [{}, {}]",
            b.choi_rank, b.eb_rank_lower, b.eb_rank_upper
        )
        .unwrap();
    }
    if let Some(x) = &r.extremality {
        writeln!(
            s,
            "c*-extreme: {}  (choi rank {})",
            yes_no(x.is_cstar_extreme),
            x.choi_rank
        )
        .unwrap();
        if let Some(flag) = x.is_cq_linear_extreme_in_ucp {
            writeln!(
                s,
                "linear extreme among unital channels (cq): {}",
                yes_no(flag)
            )
            .unwrap();
        }
        if let Some(blocks) = &x.canonical {
            writeln!(s, "canonical form:").unwrap();
            blocks_text(&mut s, blocks);
        }
    }
    writeln!(
        s,
        "commutant dimension: {}  irreducible: {}",
        r.commutant.dim,
        yes_no(r.commutant.is_irreducible)
    )
    .unwrap();
    if let Some(st) = &r.stinespring {
        writeln!(
            s,
            "stinespring dilation: {}  minimal: {}",
            st.dilation_dim,
            yes_no(st.minimal)
        )
        .unwrap();
    }
    for n in &r.notes {
        writeln!(s, "note: {n}").unwrap();
    }
    s
}

fn km_text(r: &KmReport) -> String {
    let mut s = format!("{} terms for M_{} -> M_{}\n", r.terms.len(), r.d1, r.d2);
    for (k, t) in r.terms.iter().enumerate() {
        writeln!(s, "term {k}: T =\n{}", matrix_text(&t.t)).unwrap();
    }
    writeln!(s, "reconstruction error: {:e}", r.reconstruction_error).unwrap();
    writeln!(
        s,
        "all factors c*-extreme: {}",
        yes_no(r.all_factors_extreme)
    )
    .unwrap();
    writeln!(s, "proper: {}", yes_no(r.proper)).unwrap();
    for d in &r.diagnostics {
        writeln!(s, "note: {d}").unwrap();
    }
    s
}

fn gallery_text(r: &GalleryReport) -> String {
    let mut s = String::new();
    for case in &r.cases {
        writeln!(
            s,
            "{:<20} {}",
            case.name,
            if case.passed { "PASS" } else { "FAIL" }
        )
        .unwrap();
        for c in case.checks.iter().filter(|c| !c.passed) {
            writeln!(s, "    failed {}: {}", c.name, c.detail).unwrap();
        }
    }
    writeln!(s, "{}/{} passed", r.passed, r.total).unwrap();
    s
}
