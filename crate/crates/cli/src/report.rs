//! Serializable result documents.

use ebx_core::decomp::{CStarCombination, DecompositionCheck};
use ebx_core::eb::{eb_verdict, is_ppt, rank_bounds};
use ebx_core::extremality::{is_cstar_extreme, ArvesonDerivative, Equivalence, RNDerivative};
use ebx_core::gallery::CaseReport;
use ebx_core::{CanonicalEBForm, Channel, Error, Tolerance};
use serde::Serialize;

use crate::error::CliError;
use crate::format::{encode_matrix, encode_vector, ChannelFile, Entry, MatrixFile};

pub const TOOL: &str = "ebx";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct PredicatesOut {
    pub is_cp: bool,
    pub is_unital: bool,
    pub is_tp: bool,
    pub is_hermiticity_preserving: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EbOut {
    pub verdict: String,
    pub conclusive: bool,
    pub provenance: String,
    pub certificate_terms: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankBoundsOut {
    pub choi_rank: usize,
    pub eb_rank_lower: usize,
    pub eb_rank_upper: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockOut {
    pub u: Vec<Entry>,
    pub p: MatrixFile,
    pub rank: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtremalityOut {
    pub choi_rank: usize,
    pub is_cstar_extreme: bool,
    pub is_cq_linear_extreme_in_ucp: Option<bool>,
    pub is_irreducible: bool,
    pub canonical: Option<Vec<BlockOut>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutantOut {
    pub dim: usize,
    pub is_irreducible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StinespringOut {
    pub dilation_dim: usize,
    pub minimal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub tolerance: f64,
    pub label: Option<String>,
    pub d1: usize,
    pub d2: usize,
    pub representation: &'static str,
    pub predicates: PredicatesOut,
    pub ppt: bool,
    pub eb: Option<EbOut>,
    pub rank_bounds: Option<RankBoundsOut>,
    pub extremality: Option<ExtremalityOut>,
    pub commutant: CommutantOut,
    pub stinespring: Option<StinespringOut>,
    pub notes: Vec<String>,
}

/// Errors that mean "this analysis does not apply to the map" rather than failure.
fn inapplicable(e: &Error) -> bool {
    matches!(
        e,
        Error::NotCp
            | Error::NotUnital(_)
            | Error::NotUnitalTp
            | Error::NotEb
            | Error::NotExtreme(_)
    )
}

fn optional<T>(
    what: &str,
    r: ebx_core::Result<T>,
    notes: &mut Vec<String>,
) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if inapplicable(&e) => {
            notes.push(format!("{what} skipped: {e}"));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn blocks_out(form: &CanonicalEBForm) -> Vec<BlockOut> {
    form.blocks()
        .iter()
        .map(|b| BlockOut {
            u: encode_vector(&b.u),
            p: encode_matrix(&b.p),
            rank: b.rank(),
        })
        .collect()
}

pub fn analyze(ch: &Channel, tol_value: f64, tol: &Tolerance) -> Result<AnalysisReport, CliError> {
    let mut notes = Vec::new();
    let p = ch.predicates(tol);
    let eb = optional(
        "entanglement-breaking test",
        eb_verdict(ch, tol),
        &mut notes,
    )?;
    let rank_bounds = optional("rank bounds", rank_bounds(ch, tol), &mut notes)?;
    let extremality = optional("extremality", is_cstar_extreme(ch, tol), &mut notes)?;
    let stinespring = optional("Stinespring dilation", ch.stinespring(tol), &mut notes)?;
    let commutant = ch.commutant_dimension(tol);
    Ok(AnalysisReport {
        tool: TOOL,
        version: VERSION,
        tolerance: tol_value,
        label: ch.label().map(str::to_owned),
        d1: ch.d1(),
        d2: ch.d2(),
        representation: ch.representation().name(),
        predicates: PredicatesOut {
            is_cp: p.is_cp,
            is_unital: p.is_unital,
            is_tp: p.is_tp,
            is_hermiticity_preserving: p.is_hermiticity_preserving,
        },
        ppt: is_ppt(ch, tol),
        eb: eb.map(|v| EbOut {
            verdict: v.is_eb.to_string(),
            conclusive: v.conclusive,
            provenance: v.provenance,
            certificate_terms: v.certificate.map(|c| c.terms().len()),
        }),
        rank_bounds: rank_bounds.map(|b| RankBoundsOut {
            choi_rank: b.choi_rank,
            eb_rank_lower: b.eb_rank_lower,
            eb_rank_upper: b.eb_rank_upper,
        }),
        extremality: extremality.map(|r| ExtremalityOut {
            choi_rank: r.choi_rank,
            is_cstar_extreme: r.is_cstar_extreme,
            is_cq_linear_extreme_in_ucp: r.is_cq_linear_extreme_in_ucp,
            is_irreducible: r.is_irreducible,
            canonical: r.canonical.as_ref().map(blocks_out),
        }),
        commutant: CommutantOut {
            dim: commutant.dim,
            is_irreducible: commutant.is_irreducible,
        },
        stinespring: stinespring.map(|s| StinespringOut {
            dilation_dim: s.dilation_dim,
            minimal: s.minimal,
        }),
        notes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KmTermOut {
    #[serde(rename = "T")]
    pub t: MatrixFile,
    pub channel: ChannelFile,
}

#[derive(Debug, Clone, Serialize)]
pub struct KmReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub tolerance: f64,
    pub d1: usize,
    pub d2: usize,
    pub terms: Vec<KmTermOut>,
    pub reconstruction_error: f64,
    pub all_factors_extreme: bool,
    pub proper: bool,
    pub diagnostics: Vec<String>,
}

pub fn km_report(comb: &CStarCombination, check: DecompositionCheck, tol_value: f64) -> KmReport {
    KmReport {
        tool: TOOL,
        version: VERSION,
        tolerance: tol_value,
        d1: comb.d1(),
        d2: comb.d2(),
        terms: comb
            .terms()
            .iter()
            .map(|t| KmTermOut {
                t: encode_matrix(&t.t),
                channel: ChannelFile::from_channel(&t.channel),
            })
            .collect(),
        reconstruction_error: check.reconstruction_error,
        all_factors_extreme: check.all_factors_extreme,
        proper: check.proper,
        diagnostics: check.diagnostics,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RnReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub tolerance: f64,
    #[serde(rename = "R")]
    pub r: MatrixFile,
    pub per_block: Vec<MatrixFile>,
    pub residual: f64,
    pub canonical: Vec<BlockOut>,
    /// `Z` with `Ad_Z o Phi = Psi`, present when `R` is invertible.
    pub witness: Option<MatrixFile>,
}

pub fn rn_report(
    form: &CanonicalEBForm,
    rn: &RNDerivative,
    witness: Option<&ebx_core::CMatrix>,
    tol_value: f64,
) -> RnReport {
    RnReport {
        tool: TOOL,
        version: VERSION,
        tolerance: tol_value,
        r: encode_matrix(&rn.r),
        per_block: rn.per_block.iter().map(encode_matrix).collect(),
        residual: rn.residual,
        canonical: blocks_out(form),
        witness: witness.map(encode_matrix),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArvesonReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub tolerance: f64,
    #[serde(rename = "T")]
    pub t: MatrixFile,
    pub residual: f64,
}

pub fn arveson_report(a: &ArvesonDerivative, tol_value: f64) -> ArvesonReport {
    ArvesonReport {
        tool: TOOL,
        version: VERSION,
        tolerance: tol_value,
        t: encode_matrix(&a.t),
        residual: a.residual,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub tolerance: f64,
    pub equivalent: bool,
    pub witness_unitary: Option<MatrixFile>,
}

pub fn equiv_report(e: &Equivalence, tol_value: f64) -> EquivReport {
    EquivReport {
        tool: TOOL,
        version: VERSION,
        tolerance: tol_value,
        equivalent: e.equivalent,
        witness_unitary: e.witness_unitary.as_ref().map(encode_matrix),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOut {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseOut {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<CheckOut>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GalleryReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub tolerance: f64,
    pub passed: usize,
    pub total: usize,
    pub cases: Vec<CaseOut>,
}

pub fn gallery_report(cases: &[CaseReport], tol_value: f64) -> GalleryReport {
    let cases: Vec<CaseOut> = cases
        .iter()
        .map(|c| CaseOut {
            name: c.name.clone(),
            passed: c.passed(),
            checks: c
                .checks
                .iter()
                .map(|k| CheckOut {
                    name: k.name.clone(),
                    passed: k.passed,
                    detail: k.detail.clone(),
                })
                .collect(),
        })
        .collect();
    GalleryReport {
        tool: TOOL,
        version: VERSION,
        tolerance: tol_value,
        passed: cases.iter().filter(|c| c.passed).count(),
        total: cases.len(),
        cases,
    }
}
