//! Canonical forms `X -> sum <u_i, X u_i> P_i`, the Choi-rank extremality
//! test, Radon-Nikodym and Arveson derivatives, domination and unitary
//! equivalence of canonical maps.

use crate::channel::{Channel, HolevoEnsemble, HolevoTerm};
use crate::eb::{eb_verdict, EbVerdict, Verdict};
use crate::error::{Error, Result};
use crate::numkernel::{
    c, herm_eig, identity, inner, is_psd, matrix_unit, max_abs, max_abs_diff, outer, pinv,
    projection_range, psd_sqrt, svd_rank, trace, CMatrix, CVector, Tolerance,
};
use crate::rng::SeededRng;

/// Seed for the generic coefficients used by [`extract_canonical`].
pub const EXTRACTION_SEED: u64 = 0x5eed_c0de;

const MAX_SPLIT_ATTEMPTS: usize = 8;

/// Relative eigenvalue gap separating joint eigenspaces.
const CLUSTER_GAP: f64 = 1e-8;

/// One block `<u, X u> P`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalBlock {
    pub u: CVector,
    pub p: CMatrix,
}

impl CanonicalBlock {
    pub fn rank(&self) -> usize {
        // P is a projection, so its rank is its trace.
        trace(&self.p).re.round().max(0.0) as usize
    }
}

/// `X -> sum <u_i, X u_i> P_i` with distinct pure states and orthogonal
/// projections summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalEBForm {
    d1: usize,
    d2: usize,
    blocks: Vec<CanonicalBlock>,
}

impl CanonicalEBForm {
    pub fn new(d1: usize, d2: usize, blocks: Vec<CanonicalBlock>, tol: &Tolerance) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument(
                "canonical form needs at least one block".into(),
            ));
        }
        let mut sum = CMatrix::zeros(d2, d2);
        for (i, b) in blocks.iter().enumerate() {
            if b.u.len() != d1 || b.p.shape() != (d2, d2) {
                return Err(Error::DimensionMismatch(format!(
                    "block {i}: u has length {}, P is {:?}; expected {d1} and ({d2}, {d2})",
                    b.u.len(),
                    b.p.shape()
                )));
            }
            if (b.u.norm() - 1.0).abs() > tol.eq_abs {
                return Err(Error::InvalidArgument(format!(
                    "block {i}: |u| = {} is not 1",
                    b.u.norm()
                )));
            }
            let idem = max_abs_diff(&(&b.p * &b.p), &b.p).max(max_abs_diff(&b.p, &b.p.adjoint()));
            if idem > tol.eq_abs || max_abs(&b.p) <= tol.eq_abs {
                return Err(Error::InvalidArgument(format!(
                    "block {i}: P is not a nonzero projection (residual {idem:e})"
                )));
            }
            for (j, other) in blocks.iter().enumerate().skip(i + 1) {
                if inner(&b.u, &other.u).norm() >= 1.0 - tol.eq_abs {
                    return Err(Error::InvalidArgument(format!(
                        "blocks {i} and {j} carry the same state"
                    )));
                }
                if max_abs(&(&b.p * &other.p)) > tol.eq_abs {
                    return Err(Error::InvalidArgument(format!(
                        "projections {i} and {j} are not orthogonal"
                    )));
                }
            }
            sum += &b.p;
        }
        let defect = max_abs_diff(&sum, &identity(d2));
        if defect > tol.eq_abs {
            return Err(Error::InvalidArgument(format!(
                "projections sum to I only within {defect:e}"
            )));
        }
        Ok(Self { d1, d2, blocks })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn blocks(&self) -> &[CanonicalBlock] {
        &self.blocks
    }

    /// The map in Holevo form with terms `(|u_i><u_i|, P_i)`.
    pub fn reconstruct(&self) -> Channel {
        let terms = self
            .blocks
            .iter()
            .map(|b| HolevoTerm {
                f: outer(&b.u, &b.u),
                r: b.p.clone(),
            })
            .collect();
        HolevoEnsemble::new(self.d1, self.d2, terms)
            .expect("validated blocks have consistent shapes")
            .into()
    }

    /// Splits every `P_i` into rank-one projections `|v><v|`, repeating `u_i`.
    pub fn rank_one_pieces(&self, tol: &Tolerance) -> Result<Vec<(CVector, CVector)>> {
        let mut out = Vec::new();
        for b in &self.blocks {
            let basis = projection_range(&b.p, tol)?;
            for k in 0..basis.ncols() {
                out.push((b.u.clone(), basis.column(k).into_owned()));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalityReport {
    pub choi_rank: usize,
    pub is_cstar_extreme: bool,
    pub canonical: Option<CanonicalEBForm>,
    /// Linear extremality within unital CP maps on `M_d`; only for `d1 == d2`
    /// and C*-extreme inputs.
    pub is_cq_linear_extreme_in_ucp: Option<bool>,
    pub is_irreducible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CqRemarkFlags {
    pub all_overlaps_nonzero: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RNDerivative {
    pub r: CMatrix,
    /// `R_i = P_i R P_i`, aligned with the canonical blocks.
    pub per_block: Vec<CMatrix>,
    pub residual: f64,
}

impl RNDerivative {
    /// The Holevo ensemble `{(|u_i><u_i|, R_i)}` of the dominated map.
    pub fn certificate(&self, form: &CanonicalEBForm) -> HolevoEnsemble {
        let terms = form
            .blocks()
            .iter()
            .zip(&self.per_block)
            .map(|(b, r)| HolevoTerm {
                f: outer(&b.u, &b.u),
                r: r.clone(),
            })
            .collect();
        HolevoEnsemble::new(form.d1(), form.d2(), terms).expect("shapes follow the form")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArvesonDerivative {
    pub t: CMatrix,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominatedPiece {
    pub block_index: usize,
    pub r: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equivalence {
    pub equivalent: bool,
    pub witness_unitary: Option<CMatrix>,
}

/// Hermitian basis of `M_d`: `E_kk`, `E_jk + E_kj`, `i (E_jk - E_kj)`.
fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        out.push(matrix_unit(d, k, k));
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let (a, b) = (matrix_unit(d, j, k), matrix_unit(d, k, j));
            out.push(&a + &b);
            out.push((&a - &b) * crate::numkernel::C64::new(0.0, 1.0));
        }
    }
    out
}

fn check_unital_eb(ch: &Channel, tol: &Tolerance) -> Result<()> {
    if !ch.is_cp(tol) {
        return Err(Error::NotCp);
    }
    if !ch.is_unital(tol) {
        return Err(Error::NotUnital(max_abs_diff(
            &ch.apply_identity(),
            &identity(ch.d2()),
        )));
    }
    if eb_verdict(ch, tol)?.is_eb == Verdict::No {
        return Err(Error::NotEb);
    }
    Ok(())
}

/// Common eigenbasis of commuting Hermitian matrices restricted to the
/// span of the columns of `q`.
fn joint_eigenbasis(
    mats: &[CMatrix],
    q: CMatrix,
    rng: &mut SeededRng,
    tol: &Tolerance,
) -> Result<Vec<CVector>> {
    let k = q.ncols();
    if k == 1 {
        return Ok(vec![q.column(0).into_owned()]);
    }
    let restricted: Vec<CMatrix> = mats.iter().map(|b| q.adjoint() * b * &q).collect();
    let scalar = restricted.iter().all(|b| {
        let mean = trace(b) / c(k as f64);
        max_abs_diff(b, &(identity(k) * mean)) <= tol.eq_abs
    });
    if scalar {
        return Ok((0..k).map(|j| q.column(j).into_owned()).collect());
    }
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        let h = restricted
            .iter()
            .fold(CMatrix::zeros(k, k), |acc, b| acc + b * c(rng.normal()));
        let eig = herm_eig(&h, tol)?;
        let gap = CLUSTER_GAP * (1.0 + eig.max_magnitude());
        let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
        for j in 1..k {
            if eig.values[j - 1] - eig.values[j] > gap {
                clusters.push(Vec::new());
            }
            clusters.last_mut().expect("nonempty").push(j);
        }
        if clusters.len() == 1 {
            continue;
        }
        let mut out = Vec::with_capacity(k);
        for cl in clusters {
            let cols: Vec<CVector> = cl.iter().map(|&j| &q * eig.vector(j)).collect();
            out.extend(joint_eigenbasis(
                mats,
                CMatrix::from_columns(&cols),
                rng,
                tol,
            )?);
        }
        return Ok(out);
    }
    Err(Error::InternalInconsistency(
        "generic combinations failed to split a non-scalar joint eigenspace".into(),
    ))
}

/// Index of the first significant entry, then its magnitude descending.
fn block_order_key(u: &CVector) -> (usize, i64) {
    let idx = u.iter().position(|z| z.norm() > 1e-8).unwrap_or(u.len());
    let mag = u.get(idx).map_or(0.0, |z| z.norm());
    (idx, -(mag * 1e9).round() as i64)
}

/// Recovers the canonical form of a C*-extreme unital EB map, with the
/// fixed seed [`EXTRACTION_SEED`] for the generic combination.
pub fn extract_canonical(ch: &Channel, tol: &Tolerance) -> Result<CanonicalEBForm> {
    extract_canonical_with(ch, tol, &mut SeededRng::new(EXTRACTION_SEED))
}

pub fn extract_canonical_with(
    ch: &Channel,
    tol: &Tolerance,
    rng: &mut SeededRng,
) -> Result<CanonicalEBForm> {
    check_unital_eb(ch, tol)?;
    let (d1, d2) = (ch.d1(), ch.d2());

    let images: Vec<CMatrix> = hermitian_basis(d1)
        .iter()
        .map(|h| {
            let b = ch.apply(h)?;
            Ok((&b + b.adjoint()) * c(0.5))
        })
        .collect::<Result<_>>()?;
    let mut worst = 0.0_f64;
    for (i, a) in images.iter().enumerate() {
        for b in &images[i + 1..] {
            worst = worst.max(max_abs(&(a * b - b * a)));
        }
    }
    if worst > tol.eq_abs {
        return Err(Error::NotExtreme(format!(
            "range is not commutative (max commutator {worst:e})"
        )));
    }

    let basis = joint_eigenbasis(&images, identity(d2), rng, tol)?;
    let adjoint = ch.adjoint();
    let mut blocks: Vec<CanonicalBlock> = Vec::new();
    for v in &basis {
        let dm = adjoint.apply(&outer(v, v))?;
        let tr = trace(&dm).re;
        let rank = svd_rank(&dm, tol);
        if rank != 1 || (tr - 1.0).abs() > tol.eq_abs {
            return Err(Error::NotExtreme(format!(
                "induced state is not pure (rank {rank}, trace {tr})"
            )));
        }
        let u = herm_eig(&dm, tol)?.vector(0);
        let vv = outer(v, v);
        match blocks
            .iter_mut()
            .find(|b| inner(&b.u, &u).norm() >= 1.0 - tol.eq_abs)
        {
            Some(b) => b.p += vv,
            None => blocks.push(CanonicalBlock { u, p: vv }),
        }
    }
    blocks.sort_by_key(|b| block_order_key(&b.u));

    let form = CanonicalEBForm::new(d1, d2, blocks, tol)?;
    let residual = form.reconstruct().distance(ch)?;
    if residual > tol.eq_abs {
        return Err(Error::VerificationFailed {
            what: "canonical form does not reproduce the map".into(),
            residual,
        });
    }
    Ok(form)
}

pub fn cq_remark_flags(form: &CanonicalEBForm, tol: &Tolerance) -> Result<CqRemarkFlags> {
    let pieces = form.rank_one_pieces(tol)?;
    let mut min = f64::INFINITY;
    for (a, _) in &pieces {
        for (b, _) in &pieces {
            min = min.min(inner(a, b).norm());
        }
    }
    Ok(CqRemarkFlags {
        all_overlaps_nonzero: pieces.len() <= 1 || min > tol.eq_abs,
    })
}

pub fn is_cstar_extreme(ch: &Channel, tol: &Tolerance) -> Result<ExtremalityReport> {
    check_unital_eb(ch, tol)?;
    let choi_rank = svd_rank(ch.to_choi().matrix(), tol);
    let by_rank = choi_rank == ch.d2();
    let canonical = match extract_canonical(ch, tol) {
        Ok(form) => Some(form),
        Err(Error::NotExtreme(_)) => None,
        Err(e) => return Err(e),
    };
    if by_rank != canonical.is_some() {
        return Err(Error::InternalInconsistency(format!(
            "Choi-rank {choi_rank} vs d2 {} disagrees with canonical extraction ({})",
            ch.d2(),
            if canonical.is_some() {
                "succeeded"
            } else {
                "failed"
            }
        )));
    }
    let is_cq_linear_extreme_in_ucp = match &canonical {
        Some(form) if ch.d1() == ch.d2() => Some(cq_remark_flags(form, tol)?.all_overlaps_nonzero),
        _ => None,
    };
    Ok(ExtremalityReport {
        choi_rank,
        is_cstar_extreme: by_rank,
        canonical,
        is_cq_linear_extreme_in_ucp,
        is_irreducible: ch.commutant_dimension(tol).is_irreducible,
    })
}

/// `C_big - C_small` is positive semidefinite.
pub fn dominates_cp(big: &Channel, small: &Channel, tol: &Tolerance) -> Result<bool> {
    let diff = big.difference(small)?;
    Ok(is_psd(diff.to_choi().matrix(), tol).unwrap_or(false))
}

/// EB verdict for `big - small`. When `big` is canonical and `small` is
/// CP-dominated, the Radon-Nikodym derivative supplies a certificate
/// `{(|u_i><u_i|, P_i - R_i)}` for the difference.
pub fn dominates_eb(big: &Channel, small: &Channel, tol: &Tolerance) -> Result<EbVerdict> {
    let diff = big.difference(small)?;
    if !diff.is_cp(tol) {
        return Ok(EbVerdict {
            ppt: false,
            conclusive: true,
            is_eb: Verdict::No,
            certificate: None,
            provenance: "difference is not CP".into(),
        });
    }
    if max_abs(diff.to_choi().matrix()) <= tol.eq_abs {
        return eb_verdict(&diff, tol);
    }
    if let Ok(form) = extract_canonical(big, tol) {
        if let Ok(rn) = rn_derivative(&form, small, tol) {
            let terms = form
                .blocks()
                .iter()
                .zip(&rn.per_block)
                .map(|(b, r)| HolevoTerm {
                    f: outer(&b.u, &b.u),
                    r: &b.p - r,
                })
                .collect();
            let cert = HolevoEnsemble::new(big.d1(), big.d2(), terms)?;
            let certified: Channel = cert.clone().into();
            if cert.validate(tol).is_ok() && certified.distance(&diff)? <= tol.eq_abs {
                return Ok(EbVerdict {
                    ppt: crate::eb::is_ppt(&diff, tol),
                    conclusive: true,
                    is_eb: Verdict::Yes,
                    certificate: Some(cert),
                    provenance: "Radon-Nikodym certificate of the difference".into(),
                });
            }
        }
    }
    eb_verdict(&diff, tol)
}

pub fn rn_derivative(
    form: &CanonicalEBForm,
    psi: &Channel,
    tol: &Tolerance,
) -> Result<RNDerivative> {
    let phi = form.reconstruct();
    phi.check_same_dims(psi)?;
    if !psi.is_cp(tol) {
        return Err(Error::PreconditionDomination(
            "dominated map is not CP".into(),
        ));
    }
    if !dominates_cp(&phi, psi, tol)? {
        return Err(Error::PreconditionDomination(
            "canonical map does not CP-dominate the second map".into(),
        ));
    }
    let r = psi.apply_identity();
    let r = (&r + r.adjoint()) * c(0.5);
    let per_block: Vec<CMatrix> = form.blocks().iter().map(|b| &b.p * &r * &b.p).collect();

    let mut cross = 0.0_f64;
    for (i, a) in form.blocks().iter().enumerate() {
        for (j, b) in form.blocks().iter().enumerate() {
            if i != j {
                cross = cross.max(max_abs(&(&a.p * &r * &b.p)));
            }
        }
    }
    if cross > tol.eq_abs {
        return Err(Error::VerificationFailed {
            what: "Psi(I) has components between distinct blocks".into(),
            residual: cross,
        });
    }

    let d1 = form.d1();
    let mut residual = 0.0_f64;
    for i in 0..d1 {
        for j in 0..d1 {
            let e = matrix_unit(d1, i, j);
            let lhs = psi.apply(&e)?;
            let rhs = phi.apply(&e)? * &r;
            residual = residual.max(max_abs_diff(&lhs, &rhs));
        }
    }
    if residual > tol.eq_abs {
        return Err(Error::VerificationFailed {
            what: "Psi(X) != Phi(X) Psi(I)".into(),
            residual,
        });
    }
    let complement = identity(form.d2()) - &r;
    if !is_psd(&r, tol)? || !is_psd(&complement, tol)? {
        return Err(Error::VerificationFailed {
            what: "Psi(I) is not a positive contraction".into(),
            residual: herm_eig(&r, tol)?
                .min()
                .min(herm_eig(&complement, tol)?.min()),
        });
    }
    Ok(RNDerivative {
        r,
        per_block,
        residual,
    })
}

/// Block of the canonical form that hosts a CP-dominated piece
/// `X -> <x, X x> |y><y|`.
pub fn locate_dominated_rank_one(
    form: &CanonicalEBForm,
    x: &CVector,
    y: &CVector,
    tol: &Tolerance,
) -> Result<DominatedPiece> {
    if x.len() != form.d1() || y.len() != form.d2() {
        return Err(Error::DimensionMismatch(format!(
            "x has length {}, y has length {}; expected {} and {}",
            x.len(),
            y.len(),
            form.d1(),
            form.d2()
        )));
    }
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::InvalidArgument("x and y must be nonzero".into()));
    }
    let piece = Channel::from_holevo(form.d1(), form.d2(), vec![(outer(x, x), outer(y, y))])?;
    if !dominates_cp(&form.reconstruct(), &piece, tol)? {
        return Err(Error::NotDominated);
    }
    // Domination is only checked up to psd_floor, which admits vector
    // perturbations of order sqrt(psd_floor).
    let slack = tol.psd_floor.sqrt();
    let xn = x / c(nx);
    let r = outer(y, y) * c(nx * nx);
    let scale = max_abs(&r);
    for (j, b) in form.blocks().iter().enumerate() {
        let aligned = inner(&xn, &b.u).norm() >= 1.0 - slack;
        let leak = (y - &b.p * y).norm();
        if aligned && leak <= slack * ny {
            let mut worst = 0.0_f64;
            for (k, other) in form.blocks().iter().enumerate() {
                let target = if k == j {
                    r.clone()
                } else {
                    CMatrix::zeros(form.d2(), form.d2())
                };
                worst = worst
                    .max(max_abs_diff(&(&other.p * &r), &target))
                    .max(max_abs_diff(&(&r * &other.p), &target));
            }
            if worst > slack * scale.max(1.0) {
                return Err(Error::StructureViolation(format!(
                    "block {j} matches but P_k R_j != delta_kj R_j (residual {worst:e})"
                )));
            }
            return Ok(DominatedPiece { block_index: j, r });
        }
    }
    Err(Error::StructureViolation(
        "no block matches the dominated piece".into(),
    ))
}

/// Frame vectors of the Kraus operators as columns.
fn frame_matrix(ops: &[CMatrix]) -> CMatrix {
    let cols: Vec<CVector> = ops.iter().map(crate::channel::frame_vector).collect();
    CMatrix::from_columns(&cols)
}

/// Coefficients `T` with `Psi(X) = sum t_ij V_i* X V_j` over the Kraus
/// operators of `phi`.
pub fn arveson_derivative(
    phi: &Channel,
    psi: &Channel,
    tol: &Tolerance,
) -> Result<ArvesonDerivative> {
    phi.check_same_dims(psi)?;
    if !dominates_cp(phi, psi, tol)? {
        return Err(Error::PreconditionDomination(
            "first map does not CP-dominate the second".into(),
        ));
    }
    let kraus = phi.to_kraus(tol)?;
    let w = frame_matrix(kraus.operators());
    let cpsi = psi.to_choi().into_matrix();
    let wp = pinv(&w, tol);
    let t = &wp * &cpsi * wp.adjoint();
    let t = (&t + t.adjoint()) * c(0.5);
    let residual = max_abs_diff(&(&w * &t * w.adjoint()), &cpsi);
    if residual > 1e-8 * (1.0 + max_abs(&cpsi)) {
        return Err(Error::VerificationFailed {
            what: "Choi of the second map is outside the Kraus span of the first".into(),
            residual,
        });
    }
    let eig = herm_eig(&t, tol)?;
    let band = tol.psd_floor * eig.max_magnitude().max(1.0);
    if eig.min() < -band || eig.values.first().copied().unwrap_or(0.0) > 1.0 + band {
        return Err(Error::VerificationFailed {
            what: "coefficient matrix is not a positive contraction".into(),
            residual: (-eig.min()).max(eig.values[0] - 1.0),
        });
    }
    let t = eig.map_spectrum(|l| l.clamp(0.0, 1.0));
    Ok(ArvesonDerivative { t, residual })
}

/// Invertible `Z` with `Psi = Ad_Z o Phi`, namely `Z = sqrt(Psi(I))`.
pub fn extremality_witness(
    form: &CanonicalEBForm,
    psi: &Channel,
    tol: &Tolerance,
) -> Result<CMatrix> {
    let phi = form.reconstruct();
    phi.check_same_dims(psi)?;
    let r = psi.apply_identity();
    let rank = svd_rank(&r, tol);
    if rank < form.d2() {
        return Err(Error::NotInvertible {
            rank,
            dim: form.d2(),
        });
    }
    if !dominates_cp(&phi, psi, tol)? {
        return Err(Error::PreconditionDomination(
            "canonical map does not dominate the second map".into(),
        ));
    }
    let z = psd_sqrt(&r, tol)?;
    let residual = phi.then_ad(&z)?.distance(psi)?;
    if residual > tol.eq_abs {
        return Err(Error::VerificationFailed {
            what: "Ad_Z o Phi does not reproduce Psi".into(),
            residual,
        });
    }
    Ok(z)
}

/// Decides whether `b = Ad_U o a` for a unitary `U`, matching blocks by state
/// and projection rank.
pub fn unitary_equivalent(
    a: &CanonicalEBForm,
    b: &CanonicalEBForm,
    tol: &Tolerance,
) -> Result<Equivalence> {
    let no = Equivalence {
        equivalent: false,
        witness_unitary: None,
    };
    if (a.d1, a.d2) != (b.d1, b.d2) || a.blocks.len() != b.blocks.len() {
        return Ok(no);
    }
    let mut used = vec![false; b.blocks.len()];
    let mut u = CMatrix::zeros(a.d2, a.d2);
    for ba in &a.blocks {
        let found = b.blocks.iter().enumerate().find(|(k, bb)| {
            !used[*k] && inner(&ba.u, &bb.u).norm() >= 1.0 - tol.eq_abs && ba.rank() == bb.rank()
        });
        let Some((k, bb)) = found else {
            return Ok(no);
        };
        used[k] = true;
        let ra = projection_range(&ba.p, tol)?;
        let rb = projection_range(&bb.p, tol)?;
        if ra.ncols() != rb.ncols() {
            return Ok(no);
        }
        u += &ra * rb.adjoint();
    }
    // A state overlap of 1 - eps moves the map by at most 2 sqrt(2 eps).
    let bound = tol.eq_abs + 2.0 * (2.0 * tol.eq_abs).sqrt();
    let residual = a.reconstruct().then_ad(&u)?.distance(&b.reconstruct())?;
    if residual > bound {
        return Ok(no);
    }
    Ok(Equivalence {
        equivalent: true,
        witness_unitary: Some(u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eb::{random_cstar_extreme, random_unital_eb};
    use crate::numkernel::basis_vector;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn e(d: usize, i: usize) -> CVector {
        basis_vector(d, i)
    }

    fn diag_m2() -> Channel {
        Channel::from_kraus(2, 2, vec![matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)]).unwrap()
    }

    fn example_5_3() -> Channel {
        Channel::from_holevo(
            3,
            3,
            vec![
                (
                    matrix_unit(3, 0, 0),
                    matrix_unit(3, 0, 0) + matrix_unit(3, 1, 1),
                ),
                (matrix_unit(3, 2, 2), matrix_unit(3, 2, 2)),
            ],
        )
        .unwrap()
    }

    fn trace_state_m2() -> Channel {
        Channel::from_holevo(2, 2, vec![(identity(2) * c(0.5), identity(2))]).unwrap()
    }

    #[test]
    fn extract_example_5_3() {
        let form = extract_canonical(&example_5_3(), &tol()).unwrap();
        assert_eq!(form.blocks().len(), 2);
        assert!((form.blocks()[0].u.clone() - e(3, 0)).norm() < 1e-12);
        assert!(
            max_abs_diff(
                &form.blocks()[0].p,
                &(matrix_unit(3, 0, 0) + matrix_unit(3, 1, 1))
            ) < 1e-12
        );
        assert!((form.blocks()[1].u.clone() - e(3, 2)).norm() < 1e-12);
        assert!(max_abs_diff(&form.blocks()[1].p, &matrix_unit(3, 2, 2)) < 1e-12);
    }

    #[test]
    fn extract_diag_m2() {
        let form = extract_canonical(&diag_m2(), &tol()).unwrap();
        assert_eq!(form.blocks().len(), 2);
        for (k, b) in form.blocks().iter().enumerate() {
            assert!((b.u.clone() - e(2, k)).norm() < 1e-12);
            assert!(max_abs_diff(&b.p, &matrix_unit(2, k, k)) < 1e-12);
        }
    }

    #[test]
    fn extract_mixed_state_fails() {
        assert!(matches!(
            extract_canonical(&trace_state_m2(), &tol()),
            Err(Error::NotExtreme(_))
        ));
    }

    #[test]
    fn extract_rejects_non_unital() {
        let ch = Channel::from_holevo(2, 2, vec![(identity(2), identity(2) * c(0.25))]).unwrap();
        assert!(matches!(
            extract_canonical(&ch, &tol()),
            Err(Error::NotUnital(_))
        ));
    }

    #[test]
    fn extract_rejects_non_eb() {
        assert_eq!(
            extract_canonical(&Channel::identity(2), &tol()),
            Err(Error::NotEb)
        );
    }

    #[test]
    fn extremality_reports() {
        let r = is_cstar_extreme(&diag_m2(), &tol()).unwrap();
        assert!(r.is_cstar_extreme && r.canonical.is_some());
        assert_eq!(r.choi_rank, 2);
        assert_eq!(r.is_cq_linear_extreme_in_ucp, Some(false));
        assert!(!r.is_irreducible);

        let r = is_cstar_extreme(&trace_state_m2(), &tol()).unwrap();
        assert!(!r.is_cstar_extreme && r.canonical.is_none());
        assert_eq!(r.choi_rank, 4);
        assert_eq!(r.is_cq_linear_extreme_in_ucp, None);
    }

    #[test]
    fn pure_state_is_irreducible() {
        let u = CVector::from_vec(vec![c(0.6), c(0.8)]);
        let ch = Channel::from_holevo(2, 1, vec![(outer(&u, &u), identity(1))]).unwrap();
        let r = is_cstar_extreme(&ch, &tol()).unwrap();
        assert!(r.is_cstar_extreme && r.is_irreducible);
    }

    #[test]
    fn overlap_flags() {
        let form = extract_canonical(&diag_m2(), &tol()).unwrap();
        assert!(!cq_remark_flags(&form, &tol()).unwrap().all_overlaps_nonzero);

        let s = 0.5_f64.sqrt();
        let u2 = CVector::from_vec(vec![c(s), c(s)]);
        let form = CanonicalEBForm::new(
            2,
            2,
            vec![
                CanonicalBlock {
                    u: e(2, 0),
                    p: matrix_unit(2, 0, 0),
                },
                CanonicalBlock {
                    u: u2,
                    p: matrix_unit(2, 1, 1),
                },
            ],
            &tol(),
        )
        .unwrap();
        assert!(cq_remark_flags(&form, &tol()).unwrap().all_overlaps_nonzero);

        let single = CanonicalEBForm::new(
            2,
            3,
            vec![CanonicalBlock {
                u: e(2, 1),
                p: identity(3),
            }],
            &tol(),
        )
        .unwrap();
        assert!(
            cq_remark_flags(&single, &tol())
                .unwrap()
                .all_overlaps_nonzero
        );
    }

    #[test]
    fn form_validation() {
        let bad = CanonicalEBForm::new(
            2,
            2,
            vec![
                CanonicalBlock {
                    u: e(2, 0),
                    p: matrix_unit(2, 0, 0),
                },
                CanonicalBlock {
                    u: e(2, 0),
                    p: matrix_unit(2, 1, 1),
                },
            ],
            &tol(),
        );
        assert!(matches!(bad, Err(Error::InvalidArgument(_))));
        let bad = CanonicalEBForm::new(
            2,
            2,
            vec![CanonicalBlock {
                u: e(2, 0),
                p: matrix_unit(2, 0, 0),
            }],
            &tol(),
        );
        assert!(matches!(bad, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn dominates_cp_examples() {
        let phi = diag_m2();
        let half: Channel = Channel::from_choi(2, 2, phi.to_choi().into_matrix() * c(0.5)).unwrap();
        assert!(dominates_cp(&phi, &half, &tol()).unwrap());
        assert!(!dominates_cp(&phi, &Channel::identity(2), &tol()).unwrap());
        assert!(dominates_cp(&phi, &Channel::identity(3), &tol()).is_err());
    }

    #[test]
    fn dominates_eb_self() {
        let v = dominates_eb(&diag_m2(), &diag_m2(), &tol()).unwrap();
        assert_eq!(v.is_eb, Verdict::Yes);
    }

    #[test]
    fn dominates_eb_via_derivative_outside_window() {
        let mut rng = SeededRng::new(3);
        let phi = random_cstar_extreme(&mut rng, 3, 3, 2).unwrap();
        let psi = phi.then_ad(&(identity(3) * c(0.5_f64.sqrt()))).unwrap();
        let psi: Channel = psi.to_choi().into();
        let v = dominates_eb(&phi, &psi, &tol()).unwrap();
        assert_eq!(v.is_eb, Verdict::Yes);
        assert!(v.certificate.is_some());
    }

    #[test]
    fn rn_identity_derivative() {
        let form = extract_canonical(&example_5_3(), &tol()).unwrap();
        let rn = rn_derivative(&form, &example_5_3(), &tol()).unwrap();
        assert!(max_abs_diff(&rn.r, &identity(3)) < 1e-12);
    }

    #[test]
    fn rn_rejects_undominated() {
        let form = extract_canonical(&diag_m2(), &tol()).unwrap();
        assert!(matches!(
            rn_derivative(&form, &Channel::identity(2), &tol()),
            Err(Error::PreconditionDomination(_))
        ));
    }

    #[test]
    fn rn_certificate_reproduces_psi() {
        let form = extract_canonical(&example_5_3(), &tol()).unwrap();
        let r0 = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.5),
                c(0.2),
                c(0.0),
                c(0.2),
                c(0.4),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.3),
            ],
        );
        let psi = form
            .reconstruct()
            .then_ad(&psd_sqrt(&r0, &tol()).unwrap())
            .unwrap();
        let rn = rn_derivative(&form, &psi, &tol()).unwrap();
        assert!(max_abs_diff(&rn.r, &r0) < 1e-12);
        let cert: Channel = rn.certificate(&form).into();
        assert!(cert.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn locate_examples() {
        let form = extract_canonical(&example_5_3(), &tol()).unwrap();
        let p = locate_dominated_rank_one(&form, &e(3, 2), &e(3, 2), &tol()).unwrap();
        assert_eq!(p.block_index, 1);
        assert!(max_abs_diff(&p.r, &matrix_unit(3, 2, 2)) < 1e-12);

        let p = locate_dominated_rank_one(&form, &e(3, 0), &e(3, 1), &tol()).unwrap();
        assert_eq!(p.block_index, 0);
        assert!(max_abs_diff(&p.r, &matrix_unit(3, 1, 1)) < 1e-12);

        let s = 0.5_f64.sqrt();
        let x = CVector::from_vec(vec![c(s), c(0.0), c(s)]);
        assert_eq!(
            locate_dominated_rank_one(&form, &x, &e(3, 0), &tol()),
            Err(Error::NotDominated)
        );
    }

    #[test]
    fn arveson_examples() {
        let phi = diag_m2();
        let half = Channel::from_kraus(
            2,
            2,
            vec![
                matrix_unit(2, 0, 0) * c(s2()),
                matrix_unit(2, 1, 1) * c(s2()),
            ],
        )
        .unwrap();
        let a = arveson_derivative(&phi, &half, &tol()).unwrap();
        assert!(max_abs_diff(&a.t, &(identity(2) * c(0.5))) < 1e-12);

        let corner = Channel::from_kraus(2, 2, vec![matrix_unit(2, 0, 0)]).unwrap();
        let a = arveson_derivative(&phi, &corner, &tol()).unwrap();
        let expect = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(0.0)]));
        assert!(max_abs_diff(&a.t, &expect) < 1e-12);
    }

    fn s2() -> f64 {
        0.5_f64.sqrt()
    }

    #[test]
    fn arveson_rejects_undominated() {
        assert!(matches!(
            arveson_derivative(&diag_m2(), &Channel::identity(2), &tol()),
            Err(Error::PreconditionDomination(_))
        ));
    }

    #[test]
    fn witness_examples() {
        let form = extract_canonical(&example_5_3(), &tol()).unwrap();
        let z = extremality_witness(&form, &example_5_3(), &tol()).unwrap();
        assert!(max_abs_diff(&z, &identity(3)) < 1e-12);

        let singular =
            Channel::from_holevo(3, 3, vec![(matrix_unit(3, 0, 0), matrix_unit(3, 0, 0))]).unwrap();
        assert!(matches!(
            extremality_witness(&form, &singular, &tol()),
            Err(Error::NotInvertible { rank: 1, dim: 3 })
        ));
    }

    #[test]
    fn equivalence_of_swapped_diagonals() {
        let a = extract_canonical(&diag_m2(), &tol()).unwrap();
        let swapped = Channel::from_holevo(
            2,
            2,
            vec![
                (matrix_unit(2, 1, 1), matrix_unit(2, 0, 0)),
                (matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)),
            ],
        )
        .unwrap();
        let b = extract_canonical(&swapped, &tol()).unwrap();
        let eq = unitary_equivalent(&a, &b, &tol()).unwrap();
        assert!(eq.equivalent);
        let u = eq.witness_unitary.unwrap();
        let perm = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        assert!(max_abs_diff(&u.map(|z| c(z.norm())), &perm) < 1e-12);
    }

    #[test]
    fn equivalence_detects_different_states() {
        let s = s2();
        let a = CanonicalEBForm::new(
            2,
            1,
            vec![CanonicalBlock {
                u: e(2, 0),
                p: identity(1),
            }],
            &tol(),
        )
        .unwrap();
        let b = CanonicalEBForm::new(
            2,
            1,
            vec![CanonicalBlock {
                u: CVector::from_vec(vec![c(s), c(s)]),
                p: identity(1),
            }],
            &tol(),
        )
        .unwrap();
        assert!(!unitary_equivalent(&a, &b, &tol()).unwrap().equivalent);
    }

    #[test]
    fn random_families_agree_with_rank_test() {
        let mut rng = SeededRng::new(77);
        for k in 0..40 {
            let (d1, d2) = (2 + k % 2, 2 + (k / 2) % 2);
            let ch = if k % 3 == 0 {
                random_cstar_extreme(&mut rng, d1, d2, 1 + k % d2).unwrap()
            } else {
                random_unital_eb(&mut rng, d1, d2, 1 + k % 4).unwrap()
            };
            let report = is_cstar_extreme(&ch, &tol()).unwrap();
            assert_eq!(report.is_cstar_extreme, report.choi_rank == d2);
        }
    }
}
