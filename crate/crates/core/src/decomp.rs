//! C*-convex combinations `sum Ad_{T_i} o Phi_i` and the decomposition of a
//! certified unital EB map into C*-extreme factors.

use crate::channel::{Channel, HolevoEnsemble, HolevoTerm, KrausSet};
use crate::error::{Error, Result};
use crate::extremality::is_cstar_extreme;
use crate::numkernel::{c, identity, max_abs_diff, outer, psd_sqrt, svd_rank, CMatrix, Tolerance};

/// Ensemble weights below this are discarded by [`km_decompose`].
pub const MIN_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CStarTerm {
    pub t: CMatrix,
    pub channel: Channel,
}

/// `X -> sum T_i* Phi_i(X) T_i` with `sum T_i* T_i = I` and unital `Phi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CStarCombination {
    d1: usize,
    d2: usize,
    terms: Vec<CStarTerm>,
}

impl CStarCombination {
    pub fn new(
        d1: usize,
        d2: usize,
        terms: Vec<(CMatrix, Channel)>,
        tol: &Tolerance,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument(
                "combination needs at least one term".into(),
            ));
        }
        let mut gram = CMatrix::zeros(d2, d2);
        for (i, (t, ch)) in terms.iter().enumerate() {
            if t.shape() != (d2, d2) || (ch.d1(), ch.d2()) != (d1, d2) {
                return Err(Error::DimensionMismatch(format!(
                    "term {i}: T is {:?}, channel is {}->{}; expected ({d2}, {d2}) and {d1}->{d2}",
                    t.shape(),
                    ch.d1(),
                    ch.d2()
                )));
            }
            if !ch.is_unital(tol) {
                return Err(Error::NotUnital(max_abs_diff(
                    &ch.apply_identity(),
                    &identity(d2),
                )));
            }
            gram += t.adjoint() * t;
        }
        let defect = max_abs_diff(&gram, &identity(d2));
        if defect > tol.eq_abs {
            return Err(Error::CoefficientsNotNormalized(defect));
        }
        Ok(Self {
            d1,
            d2,
            terms: terms
                .into_iter()
                .map(|(t, channel)| CStarTerm { t, channel })
                .collect(),
        })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn terms(&self) -> &[CStarTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The combined map: Holevo form `(F, T* R T)` when every factor carries a
    /// certificate, Kraus form `V T` otherwise.
    pub fn evaluate(&self, tol: &Tolerance) -> Result<Channel> {
        if self.terms.iter().all(|t| t.channel.certificate().is_some()) {
            let mut out = Vec::new();
            for term in &self.terms {
                let cert = term.channel.certificate().expect("checked above");
                out.extend(cert.terms().iter().map(|h| HolevoTerm {
                    f: h.f.clone(),
                    r: term.t.adjoint() * &h.r * &term.t,
                }));
            }
            return Ok(HolevoEnsemble::new(self.d1, self.d2, out)?.into());
        }
        let mut ops = Vec::new();
        for term in &self.terms {
            let kraus = term.channel.to_kraus(tol)?;
            ops.extend(kraus.operators().iter().map(|v| v * &term.t));
        }
        Ok(KrausSet::new(self.d1, self.d2, ops)?.into())
    }

    /// Every `T_i` is invertible.
    pub fn is_proper(&self, tol: &Tolerance) -> bool {
        self.terms.iter().all(|t| svd_rank(&t.t, tol) == self.d2)
    }
}

/// Writes a certified unital EB map as `sum Ad_{T_i} o Phi_i` with
/// `Phi_i = <u_i, . u_i> I` and `T_i = sqrt(lambda_i) |v_i><v_i|`.
pub fn km_decompose(ch: &Channel, tol: &Tolerance) -> Result<CStarCombination> {
    let cert = ch.certificate().ok_or(Error::NoCertificate)?;
    if !ch.is_unital(tol) {
        return Err(Error::NotUnital(max_abs_diff(
            &ch.apply_identity(),
            &identity(ch.d2()),
        )));
    }
    let (d1, d2) = (ch.d1(), ch.d2());
    let mut terms: Vec<(CMatrix, Channel)> = Vec::new();
    let mut weights = Vec::new();
    for piece in cert.rank_one_refinement(tol)? {
        if piece.weight < MIN_WEIGHT {
            continue;
        }
        let t = outer(&piece.v, &piece.v) * c(piece.weight.sqrt());
        let factor = Channel::from_holevo(d1, d2, vec![(outer(&piece.u, &piece.u), identity(d2))])?;
        terms.push((t, factor));
        weights.push(piece.weight);
    }
    if terms.is_empty() {
        return Err(Error::InvalidArgument(
            "certificate has no nonzero terms".into(),
        ));
    }
    let gram = terms
        .iter()
        .fold(CMatrix::zeros(d2, d2), |acc, (t, _)| acc + t.adjoint() * t);
    let defect = identity(d2) - &gram;
    if max_abs_diff(&gram, &identity(d2)) > tol.eq_abs {
        let largest = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .expect("nonempty");
        let t = &terms[largest].0;
        let corrected = t.adjoint() * t + defect;
        terms[largest].0 = psd_sqrt(&((&corrected + corrected.adjoint()) * c(0.5)), tol)?;
        log::debug!("folded a coefficient defect into term {largest}");
    }
    CStarCombination::new(d1, d2, terms, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionCheck {
    pub reconstruction_error: f64,
    pub all_factors_extreme: bool,
    pub proper: bool,
    pub diagnostics: Vec<String>,
}

pub fn verify_decomposition(
    comb: &CStarCombination,
    target: &Channel,
    tol: &Tolerance,
) -> Result<DecompositionCheck> {
    if (comb.d1, comb.d2) != (target.d1(), target.d2()) {
        return Err(Error::DimensionMismatch(format!(
            "combination is {}->{}, target is {}->{}",
            comb.d1,
            comb.d2,
            target.d1(),
            target.d2()
        )));
    }
    let reconstruction_error = comb.evaluate(tol)?.distance(target)?;
    let mut diagnostics = Vec::new();
    let mut all_factors_extreme = true;
    for (i, term) in comb.terms.iter().enumerate() {
        match is_cstar_extreme(&term.channel, tol) {
            Ok(r) if r.is_cstar_extreme => {}
            Ok(r) => {
                all_factors_extreme = false;
                diagnostics.push(format!(
                    "factor {i}: Choi-rank {} != d2 {}",
                    r.choi_rank, comb.d2
                ));
            }
            Err(e) => {
                all_factors_extreme = false;
                diagnostics.push(format!("factor {i}: {e}"));
            }
        }
    }
    Ok(DecompositionCheck {
        reconstruction_error,
        all_factors_extreme,
        proper: comb.is_proper(tol),
        diagnostics,
    })
}
