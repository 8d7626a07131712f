//! Entanglement-breaking detection, PPT tests, EB-rank bounds and seeded
//! generators of certified unital EB maps.

use std::fmt;

use crate::channel::{Channel, HolevoEnsemble};
use crate::error::{Error, Result};
use crate::numkernel::{
    c, herm_eig, identity, is_psd, max_abs, max_abs_diff, outer, svd_rank, CMatrix, CVector,
    Tolerance,
};
use crate::rng::SeededRng;

/// Largest `d1 * d2` for which PPT is equivalent to entanglement breaking.
pub const PPT_WINDOW: usize = 6;

/// Overlap above which two random pure states are treated as colliding.
const DISTINCT_STATE_OVERLAP: f64 = 1.0 - 1e-6;

const MAX_DRAW_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbVerdict {
    pub ppt: bool,
    pub conclusive: bool,
    pub is_eb: Verdict,
    pub certificate: Option<HolevoEnsemble>,
    /// Which rule decided the verdict.
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankBounds {
    pub choi_rank: usize,
    pub eb_rank_lower: usize,
    pub eb_rank_upper: usize,
}

/// Both `C_Phi` and its block-wise partial transpose are positive semidefinite.
pub fn is_ppt(ch: &Channel, tol: &Tolerance) -> bool {
    let choi = ch.to_choi();
    is_psd(choi.matrix(), tol).unwrap_or(false)
        && is_psd(&choi.partial_transpose(), tol).unwrap_or(false)
}

pub fn eb_verdict(ch: &Channel, tol: &Tolerance) -> Result<EbVerdict> {
    if !ch.is_cp(tol) {
        return Err(Error::NotCp);
    }
    let ppt = is_ppt(ch, tol);
    if let Some(cert) = ch.certificate() {
        if cert.validate(tol).is_ok() {
            return Ok(EbVerdict {
                ppt,
                conclusive: true,
                is_eb: Verdict::Yes,
                certificate: Some(cert.clone()),
                provenance: "Holevo certificate".into(),
            });
        }
    }
    if max_abs(ch.to_choi().matrix()) <= tol.eq_abs {
        return Ok(EbVerdict {
            ppt,
            conclusive: true,
            is_eb: Verdict::Yes,
            certificate: Some(HolevoEnsemble::new(ch.d1(), ch.d2(), Vec::new())?),
            provenance: "zero map".into(),
        });
    }
    if !ppt {
        return Ok(EbVerdict {
            ppt,
            conclusive: true,
            is_eb: Verdict::No,
            certificate: None,
            provenance: "partial transpose of the Choi matrix is not PSD".into(),
        });
    }
    if ch.d1() * ch.d2() <= PPT_WINDOW {
        return Ok(EbVerdict {
            ppt,
            conclusive: true,
            is_eb: Verdict::Yes,
            certificate: None,
            provenance: format!(
                "PPT conclusive: d1*d2 = {} <= {PPT_WINDOW}",
                ch.d1() * ch.d2()
            ),
        });
    }
    Ok(EbVerdict {
        ppt,
        conclusive: false,
        is_eb: Verdict::Unknown,
        certificate: None,
        provenance: format!(
            "PPT but d1*d2 = {} > {PPT_WINDOW} and no certificate",
            ch.d1() * ch.d2()
        ),
    })
}

pub fn rank_bounds(ch: &Channel, tol: &Tolerance) -> Result<RankBounds> {
    let verdict = eb_verdict(ch, tol)?;
    if verdict.is_eb != Verdict::Yes {
        return Err(Error::NotEb);
    }
    let choi_rank = svd_rank(ch.to_choi().matrix(), tol);
    let trivial_upper = (ch.d1() * ch.d2()).pow(2);
    if choi_rank == ch.d2() && ch.is_unital(tol) {
        return Ok(RankBounds {
            choi_rank,
            eb_rank_lower: choi_rank,
            eb_rank_upper: choi_rank,
        });
    }
    let eb_rank_upper = match &verdict.certificate {
        Some(cert) => cert.rank_one_refinement(tol)?.len().min(trivial_upper),
        None => trivial_upper,
    };
    Ok(RankBounds {
        choi_rank,
        eb_rank_lower: choi_rank,
        eb_rank_upper: eb_rank_upper.max(choi_rank),
    })
}

/// A random unital EB map `X -> sum <u_i, X u_i> R_i` where `{R_i}` is a
/// random POVM obtained by symmetric square-root normalization.
pub fn random_unital_eb(
    rng: &mut SeededRng,
    d1: usize,
    d2: usize,
    n_terms: usize,
) -> Result<Channel> {
    if d1 == 0 || d2 == 0 || n_terms == 0 {
        return Err(Error::InvalidArgument(format!(
            "need positive d1, d2, n_terms (got {d1}, {d2}, {n_terms})"
        )));
    }
    let tol = Tolerance::default();
    for _ in 0..MAX_DRAW_ATTEMPTS {
        let states: Vec<CVector> = (0..n_terms).map(|_| rng.unit_vector(d1)).collect();
        if n_terms == 1 {
            let u = &states[0];
            return Channel::from_holevo(d1, d2, vec![(outer(u, u), identity(d2))]);
        }
        let effects: Vec<CMatrix> = (0..n_terms)
            .map(|_| {
                let g = rng.gaussian_matrix(d2, d2);
                &g * g.adjoint()
            })
            .collect();
        let total = effects
            .iter()
            .fold(CMatrix::zeros(d2, d2), |acc, a| acc + a);
        let eig = herm_eig(&total, &tol)?;
        if svd_rank(&total, &tol) < d2 || eig.min() <= 1e-8 * eig.max_magnitude() {
            continue;
        }
        let inv_sqrt = eig.map_spectrum(|l| 1.0 / l.sqrt());
        let terms = states
            .iter()
            .zip(&effects)
            .map(|(u, a)| {
                let r = &inv_sqrt * a * &inv_sqrt;
                let r = (&r + r.adjoint()) * c(0.5);
                (outer(u, u), r)
            })
            .collect();
        return Channel::from_holevo(d1, d2, terms);
    }
    Err(Error::DegenerateDraw(format!(
        "POVM normalizer singular in {MAX_DRAW_ATTEMPTS} attempts"
    )))
}

/// A random canonical (C*-extreme) map `X -> sum <u_i, X u_i> P_i` with
/// `n_blocks` distinct pure states and a random orthogonal resolution of the
/// identity into `n_blocks` projections.
pub fn random_cstar_extreme(
    rng: &mut SeededRng,
    d1: usize,
    d2: usize,
    n_blocks: usize,
) -> Result<Channel> {
    if d1 == 0 || n_blocks == 0 || n_blocks > d2 {
        return Err(Error::InvalidArgument(format!(
            "need d1 >= 1 and 1 <= n_blocks <= d2 (got d1={d1}, d2={d2}, n_blocks={n_blocks})"
        )));
    }
    let basis = rng.unitary(d2);
    let mut order: Vec<usize> = (0..d2).collect();
    rng.shuffle(&mut order);
    let mut cuts: Vec<usize> = (1..d2).collect();
    rng.shuffle(&mut cuts);
    let mut cuts: Vec<usize> = cuts.into_iter().take(n_blocks - 1).collect();
    cuts.sort_unstable();
    cuts.insert(0, 0);
    cuts.push(d2);

    let mut states: Vec<CVector> = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        let mut accepted = None;
        for _ in 0..MAX_DRAW_ATTEMPTS {
            let u = rng.unit_vector(d1);
            if states
                .iter()
                .all(|w| w.dotc(&u).norm() <= DISTINCT_STATE_OVERLAP)
            {
                accepted = Some(u);
                break;
            }
        }
        match accepted {
            Some(u) => states.push(u),
            None => {
                return Err(Error::DegenerateDraw(format!(
                    "could not draw {n_blocks} distinct pure states on C^{d1}"
                )))
            }
        }
    }

    let terms = states
        .iter()
        .zip(cuts.windows(2))
        .map(|(u, w)| {
            let p = order[w[0]..w[1]]
                .iter()
                .fold(CMatrix::zeros(d2, d2), |acc, &k| {
                    let v = basis.column(k);
                    acc + v * v.adjoint()
                });
            (outer(u, u), p)
        })
        .collect();
    Channel::from_holevo(d1, d2, terms)
}

/// `Phi(I) = I` within tolerance for a generated map.
pub fn unitality_defect(ch: &Channel) -> f64 {
    max_abs_diff(&ch.apply_identity(), &identity(ch.d2()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::matrix_unit;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn diag_m2() -> Channel {
        Channel::from_kraus(2, 2, vec![matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)]).unwrap()
    }

    #[test]
    fn ppt_examples() {
        assert!(!is_ppt(&Channel::identity(2), &tol()));
        assert!(is_ppt(&diag_m2(), &tol()));
        let trace_state =
            Channel::from_holevo(2, 2, vec![(identity(2) * c(0.5), identity(2))]).unwrap();
        assert!(is_ppt(&trace_state, &tol()));
    }

    #[test]
    fn verdict_from_certificate() {
        let mut rng = SeededRng::new(5);
        let ch = random_unital_eb(&mut rng, 3, 3, 4).unwrap();
        let v = eb_verdict(&ch, &tol()).unwrap();
        assert_eq!(v.is_eb, Verdict::Yes);
        assert!(v.certificate.is_some() && v.conclusive && v.ppt);
    }

    #[test]
    fn verdict_within_window() {
        let v = eb_verdict(&diag_m2(), &tol()).unwrap();
        assert_eq!(v.is_eb, Verdict::Yes);
        assert!(v.conclusive);
        assert!(v.certificate.is_none());
    }

    #[test]
    fn verdict_identity_is_not_eb() {
        let v = eb_verdict(&Channel::identity(2), &tol()).unwrap();
        assert_eq!(v.is_eb, Verdict::No);
        assert!(!v.ppt);
    }

    #[test]
    fn verdict_unknown_outside_window() {
        // A PPT Choi-only map on M_3 -> M_3 without a certificate.
        let ch: Channel = diag_m2().to_choi().into();
        let d3 = Channel::from_kraus(3, 3, (0..3).map(|i| matrix_unit(3, i, i)).collect()).unwrap();
        let d3: Channel = d3.to_choi().into();
        assert_eq!(eb_verdict(&ch, &tol()).unwrap().is_eb, Verdict::Yes);
        let v = eb_verdict(&d3, &tol()).unwrap();
        assert_eq!(v.is_eb, Verdict::Unknown);
        assert!(!v.conclusive && v.ppt);
    }

    #[test]
    fn verdict_rejects_non_cp() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(-1.0), c(0.0), c(0.0)]));
        let ch = Channel::from_choi(2, 2, m).unwrap();
        assert_eq!(eb_verdict(&ch, &tol()), Err(Error::NotCp));
    }

    #[test]
    fn rank_bounds_diagonal() {
        let b = rank_bounds(&diag_m2(), &tol()).unwrap();
        assert_eq!(
            b,
            RankBounds {
                choi_rank: 2,
                eb_rank_lower: 2,
                eb_rank_upper: 2
            }
        );
    }

    #[test]
    fn rank_bounds_depolarizing() {
        for d in [2usize, 3] {
            let ch =
                Channel::from_holevo(d, d, vec![(identity(d), identity(d) * c(1.0 / d as f64))])
                    .unwrap();
            let b = rank_bounds(&ch, &tol()).unwrap();
            assert_eq!(
                b,
                RankBounds {
                    choi_rank: d * d,
                    eb_rank_lower: d * d,
                    eb_rank_upper: d * d
                }
            );
        }
    }

    #[test]
    fn rank_bounds_rejects_non_eb() {
        assert_eq!(
            rank_bounds(&Channel::identity(2), &tol()),
            Err(Error::NotEb)
        );
    }

    #[test]
    fn random_unital_eb_properties() {
        let mut rng = SeededRng::new(42);
        let ch = random_unital_eb(&mut rng, 2, 2, 3).unwrap();
        let p = ch.predicates(&tol());
        assert!(p.is_cp && p.is_unital);
        assert!(is_ppt(&ch, &tol()));
    }

    #[test]
    fn random_unital_eb_single_term() {
        let mut rng = SeededRng::new(1);
        let ch = random_unital_eb(&mut rng, 3, 2, 1).unwrap();
        let cert = ch.certificate().unwrap();
        assert_eq!(cert.terms().len(), 1);
        assert_eq!(cert.terms()[0].r, identity(2));
        let x = CMatrix::from_fn(3, 3, |i, j| c((i + 2 * j) as f64));
        let y = ch.apply(&x).unwrap();
        assert!(max_abs_diff(&y, &(identity(2) * y[(0, 0)])) < 1e-14);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = random_unital_eb(&mut SeededRng::new(11), 3, 2, 4).unwrap();
        let b = random_unital_eb(&mut SeededRng::new(11), 3, 2, 4).unwrap();
        assert_eq!(a, b);
        let a = random_cstar_extreme(&mut SeededRng::new(7), 2, 3, 2).unwrap();
        let b = random_cstar_extreme(&mut SeededRng::new(7), 2, 3, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_cstar_extreme_shapes() {
        let mut rng = SeededRng::new(8);
        let ch = random_cstar_extreme(&mut rng, 3, 3, 3).unwrap();
        for t in ch.certificate().unwrap().terms() {
            assert_eq!(svd_rank(&t.r, &tol()), 1);
        }
        assert_eq!(svd_rank(ch.to_choi().matrix(), &tol()), 3);
        assert!(unitality_defect(&ch) < 1e-12);

        let ch = random_cstar_extreme(&mut rng, 3, 2, 1).unwrap();
        let t = &ch.certificate().unwrap().terms()[0];
        assert!(max_abs_diff(&t.r, &identity(2)) < 1e-12);
    }

    #[test]
    fn random_cstar_extreme_needs_distinct_states() {
        let mut rng = SeededRng::new(8);
        assert!(matches!(
            random_cstar_extreme(&mut rng, 1, 2, 2),
            Err(Error::DegenerateDraw(_))
        ));
        assert!(matches!(
            random_cstar_extreme(&mut rng, 2, 2, 3),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn ppt_preserved_under_ad() {
        let mut rng = SeededRng::new(100);
        for _ in 0..20 {
            let ch = random_unital_eb(&mut rng, 2, 3, 3).unwrap();
            let t = rng.gaussian_matrix(3, 3);
            let composed: Channel = ch.then_ad(&t).unwrap().to_choi().into();
            assert!(is_ppt(&composed, &tol()));
        }
    }
}
