//! Linear maps `M_{d1} -> M_{d2}` in Kraus, Choi and Holevo form.
//!
//! Conventions:
//! - A Kraus operator `V` is a `d1 x d2` matrix and acts as `X -> V* X V`.
//! - The Choi matrix is the `d1 x d1` grid of `d2 x d2` blocks whose `(i, j)`
//!   block is `Phi(E_ij)`.
//! - A Holevo term `(F, R)` acts as `X -> tr(X F) R`.
//!
//! An eigenvector `w` of the Choi matrix unflattens to the Kraus operator
//! `V[i, a] = conj(w[i * d2 + a])`; with this choice `to_choi` and
//! `choi_to_kraus` are mutually inverse.

use crate::error::{Error, Result};
use crate::numkernel::{
    self, c, check_finite, herm_eig, identity, is_psd, kron, matrix_unit, max_abs, max_abs_diff,
    nullspace, svd_rank, trace, CMatrix, CVector, Tolerance, C64,
};

/// Kraus operators `V_i` (each `d1 x d2`) of `X -> sum V_i* X V_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    d1: usize,
    d2: usize,
    operators: Vec<CMatrix>,
}

impl KrausSet {
    pub fn new(d1: usize, d2: usize, operators: Vec<CMatrix>) -> Result<Self> {
        check_dims(d1, d2)?;
        if operators.is_empty() {
            return Err(Error::InvalidArgument(
                "a Kraus set needs at least one operator".into(),
            ));
        }
        for (k, v) in operators.iter().enumerate() {
            if v.shape() != (d1, d2) {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {k} is {}x{}, expected {d1}x{d2}",
                    v.nrows(),
                    v.ncols()
                )));
            }
            check_finite(v)?;
        }
        Ok(Self { d1, d2, operators })
    }

    /// The zero map, carried as a single zero operator.
    pub fn zero(d1: usize, d2: usize) -> Self {
        Self {
            d1,
            d2,
            operators: vec![CMatrix::zeros(d1, d2)],
        }
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.d2, self.d2);
        for v in &self.operators {
            out += v.adjoint() * x * v;
        }
        out
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        let n = self.d1 * self.d2;
        let mut m = CMatrix::zeros(n, n);
        for v in &self.operators {
            let w = frame_vector(v);
            m += &w * w.adjoint();
        }
        ChoiMatrix {
            d1: self.d1,
            d2: self.d2,
            matrix: m,
        }
    }
}

/// The vector `sum_k e_k (x) (V* e_k)` of `C^{d1 d2}`; its outer product with
/// itself is the Choi matrix of `Ad_V`.
pub fn frame_vector(v: &CMatrix) -> CVector {
    let (d1, d2) = v.shape();
    CVector::from_iterator(
        d1 * d2,
        (0..d1).flat_map(|i| (0..d2).map(move |a| v[(i, a)].conj())),
    )
}

/// Inverse of [`frame_vector`].
pub fn unflatten_frame(w: &CVector, d1: usize, d2: usize) -> CMatrix {
    CMatrix::from_fn(d1, d2, |i, a| w[i * d2 + a].conj())
}

/// `C_Phi = sum E_ij (x) Phi(E_ij)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    d1: usize,
    d2: usize,
    matrix: CMatrix,
}

impl ChoiMatrix {
    pub fn new(d1: usize, d2: usize, matrix: CMatrix) -> Result<Self> {
        check_dims(d1, d2)?;
        let n = d1 * d2;
        if matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix is {}x{}, expected {n}x{n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_finite(&matrix)?;
        Ok(Self { d1, d2, matrix })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `Phi(E_ij)`.
    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        self.matrix
            .view((i * self.d2, j * self.d2), (self.d2, self.d2))
            .into_owned()
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let d2 = self.d2;
        let mut out = CMatrix::zeros(d2, d2);
        for i in 0..self.d1 {
            for j in 0..self.d1 {
                let xij = x[(i, j)];
                if xij != C64::new(0.0, 0.0) {
                    out += self.matrix.view((i * d2, j * d2), (d2, d2)) * xij;
                }
            }
        }
        out
    }

    /// `(id (x) T)(C)`: each `d2 x d2` block transposed in place.
    pub fn partial_transpose(&self) -> CMatrix {
        let d2 = self.d2;
        let mut out = self.matrix.clone();
        for i in 0..self.d1 {
            for j in 0..self.d1 {
                let blk = self.block(i, j).transpose();
                out.view_mut((i * d2, j * d2), (d2, d2)).copy_from(&blk);
            }
        }
        out
    }

    /// `(id (x) tr)(C)`, the `d1 x d1` matrix `[tr Phi(E_ij)]`.
    pub fn partial_trace_output(&self) -> CMatrix {
        CMatrix::from_fn(self.d1, self.d1, |i, j| trace(&self.block(i, j)))
    }

    /// One Kraus operator per eigenvalue above the rank cutoff.
    pub fn to_kraus(&self, tol: &Tolerance) -> Result<KrausSet> {
        let eig = herm_eig(&self.matrix, tol).map_err(|_| Error::NotCp)?;
        let top = eig.max_magnitude();
        if eig.min() < -tol.psd_floor * top.max(1.0) {
            return Err(Error::NotCp);
        }
        let rank = svd_rank(&self.matrix, tol);
        if rank == 0 {
            return Ok(KrausSet::zero(self.d1, self.d2));
        }
        let operators = (0..rank)
            .map(|k| {
                let w = eig.vector(k) * c(eig.values[k].max(0.0).sqrt());
                unflatten_frame(&w, self.d1, self.d2)
            })
            .collect();
        KrausSet::new(self.d1, self.d2, operators)
    }
}

/// `X -> tr(X F) R`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolevoTerm {
    pub f: CMatrix,
    pub r: CMatrix,
}

/// A separability certificate: `Phi(X) = sum tr(X F_i) R_i` with `F_i, R_i >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolevoEnsemble {
    d1: usize,
    d2: usize,
    terms: Vec<HolevoTerm>,
}

/// One rank-one piece `lambda <u, X u> |v><v|` of a refined Holevo ensemble,
/// with unit vectors `u`, `v`.
#[derive(Debug, Clone)]
pub struct RankOneTerm {
    pub u: CVector,
    pub v: CVector,
    pub weight: f64,
}

impl RankOneTerm {
    /// The Kraus operator `sqrt(weight) |u><v|`.
    pub fn kraus(&self) -> CMatrix {
        numkernel::outer(&self.u, &self.v) * c(self.weight.sqrt())
    }
}

impl HolevoEnsemble {
    /// Shape-checked constructor; positivity is checked where it is used.
    pub fn new(d1: usize, d2: usize, terms: Vec<HolevoTerm>) -> Result<Self> {
        check_dims(d1, d2)?;
        for (k, t) in terms.iter().enumerate() {
            if t.f.shape() != (d1, d1) || t.r.shape() != (d2, d2) {
                return Err(Error::DimensionMismatch(format!(
                    "Holevo term {k}: F is {:?}, R is {:?}, expected ({d1}, {d1}) and ({d2}, {d2})",
                    t.f.shape(),
                    t.r.shape()
                )));
            }
            check_finite(&t.f)?;
            check_finite(&t.r)?;
        }
        Ok(Self { d1, d2, terms })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn terms(&self) -> &[HolevoTerm] {
        &self.terms
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.d2, self.d2);
        for t in &self.terms {
            out += &t.r * trace(&(x * &t.f));
        }
        out
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        let n = self.d1 * self.d2;
        let mut m = CMatrix::zeros(n, n);
        for t in &self.terms {
            m += kron(&t.f.transpose(), &t.r);
        }
        ChoiMatrix {
            d1: self.d1,
            d2: self.d2,
            matrix: m,
        }
    }

    /// Checks every `F_i` and `R_i` is positive semidefinite.
    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        for t in &self.terms {
            for m in [&t.f, &t.r] {
                if !is_psd(m, tol)? {
                    return Err(Error::NotPsd(herm_eig(m, tol)?.min()));
                }
            }
        }
        Ok(())
    }

    /// Spectral refinement into rank-one pieces. Terms with a zero `F` or `R`
    /// are dropped.
    pub fn rank_one_refinement(&self, tol: &Tolerance) -> Result<Vec<RankOneTerm>> {
        self.validate(tol)?;
        let mut out = Vec::new();
        for t in &self.terms {
            let fs = spectral_pieces(&t.f, tol)?;
            let rs = spectral_pieces(&t.r, tol)?;
            for (mu, x) in &fs {
                for (nu, y) in &rs {
                    out.push(RankOneTerm {
                        u: x.clone(),
                        v: y.clone(),
                        weight: mu * nu,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Rank-one Kraus operators `|x_k><y_l|` from the spectral refinement.
    pub fn to_kraus(&self, tol: &Tolerance) -> Result<KrausSet> {
        let ops: Vec<CMatrix> = self
            .rank_one_refinement(tol)?
            .iter()
            .map(RankOneTerm::kraus)
            .collect();
        if ops.is_empty() {
            return Ok(KrausSet::zero(self.d1, self.d2));
        }
        KrausSet::new(self.d1, self.d2, ops)
    }
}

/// Eigenpairs `(lambda, unit vector)` of a psd matrix above the rank cutoff.
fn spectral_pieces(m: &CMatrix, tol: &Tolerance) -> Result<Vec<(f64, CVector)>> {
    if max_abs(m) == 0.0 {
        return Ok(Vec::new());
    }
    let eig = herm_eig(m, tol)?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(Vec::new());
    }
    Ok(eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > tol.rank_rel * top)
        .map(|(k, &l)| (l, eig.vector(k)))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Kraus(KrausSet),
    Choi(ChoiMatrix),
    Holevo(HolevoEnsemble),
}

impl Representation {
    pub fn name(&self) -> &'static str {
        match self {
            Representation::Kraus(_) => "kraus",
            Representation::Choi(_) => "choi",
            Representation::Holevo(_) => "holevo",
        }
    }
}

/// A linear map `M_{d1} -> M_{d2}` in one of three representations.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    d1: usize,
    d2: usize,
    repr: Representation,
    label: Option<String>,
}

/// Structural predicates of a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Predicates {
    pub is_cp: bool,
    pub is_unital: bool,
    pub is_tp: bool,
    pub is_hermiticity_preserving: bool,
}

/// `Phi(X) = V* (X (x) I_r) V` with `V : C^{d2} -> C^{d1} (x) C^r`.
#[derive(Debug, Clone)]
pub struct StinespringTriple {
    pub dilation_dim: usize,
    /// `(d1 r) x d2`, row index `a * r + i` holds row `a` of Kraus operator `i`.
    pub isometry: CMatrix,
    /// Whether the dilation is minimal, i.e. the Kraus operators are linearly independent.
    pub minimal: bool,
}

impl StinespringTriple {
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let pi = kron(x, &identity(self.dilation_dim));
        self.isometry.adjoint() * pi * &self.isometry
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointCheck {
    pub is_fixed: bool,
    pub commutes_with_all_kraus: bool,
}

impl FixedPointCheck {
    /// Fixed points of a unital trace-preserving map are exactly the matrices
    /// commuting with every Kraus operator, so the two flags must agree.
    pub fn consistent(&self) -> bool {
        self.is_fixed == self.commutes_with_all_kraus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Commutant {
    pub dim: usize,
    pub is_irreducible: bool,
}

fn check_dims(d1: usize, d2: usize) -> Result<()> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "dimensions must be positive, got d1={d1}, d2={d2}"
        )));
    }
    Ok(())
}

impl Channel {
    pub fn from_kraus(d1: usize, d2: usize, operators: Vec<CMatrix>) -> Result<Self> {
        Ok(KrausSet::new(d1, d2, operators)?.into())
    }

    pub fn from_choi(d1: usize, d2: usize, matrix: CMatrix) -> Result<Self> {
        Ok(ChoiMatrix::new(d1, d2, matrix)?.into())
    }

    pub fn from_holevo(d1: usize, d2: usize, terms: Vec<(CMatrix, CMatrix)>) -> Result<Self> {
        let terms = terms
            .into_iter()
            .map(|(f, r)| HolevoTerm { f, r })
            .collect();
        Ok(HolevoEnsemble::new(d1, d2, terms)?.into())
    }

    /// `X -> X` on `M_d`.
    pub fn identity(d: usize) -> Self {
        KrausSet::new(d, d, vec![identity(d)])
            .expect("identity Kraus set is well formed")
            .into()
    }

    /// `Ad_U : X -> U* X U`.
    pub fn ad(u: CMatrix) -> Result<Self> {
        let (d1, d2) = u.shape();
        Self::from_kraus(d1, d2, vec![u])
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    /// The Holevo ensemble when the channel is carried in Holevo form.
    pub fn certificate(&self) -> Option<&HolevoEnsemble> {
        match &self.repr {
            Representation::Holevo(h) => Some(h),
            _ => None,
        }
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != (self.d1, self.d1) {
            return Err(Error::DimensionMismatch(format!(
                "input is {}x{}, channel expects {}x{}",
                x.nrows(),
                x.ncols(),
                self.d1,
                self.d1
            )));
        }
        Ok(match &self.repr {
            Representation::Kraus(k) => k.apply(x),
            Representation::Choi(ch) => ch.apply(x),
            Representation::Holevo(h) => h.apply(x),
        })
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        match &self.repr {
            Representation::Kraus(k) => k.to_choi(),
            Representation::Choi(ch) => ch.clone(),
            Representation::Holevo(h) => h.to_choi(),
        }
    }

    pub fn to_kraus(&self, tol: &Tolerance) -> Result<KrausSet> {
        match &self.repr {
            Representation::Kraus(k) => Ok(k.clone()),
            Representation::Choi(ch) => ch.to_kraus(tol),
            Representation::Holevo(h) => h.to_kraus(tol),
        }
    }

    /// `Phi(I)`.
    pub fn apply_identity(&self) -> CMatrix {
        self.apply(&identity(self.d1))
            .expect("identity has the input dimension")
    }

    /// `max_ij || self(E_ij) - other(E_ij) ||_max`.
    pub fn distance(&self, other: &Channel) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(max_abs_diff(
            self.to_choi().matrix(),
            other.to_choi().matrix(),
        ))
    }

    pub fn check_same_dims(&self, other: &Channel) -> Result<()> {
        if (self.d1, self.d2) != (other.d1, other.d2) {
            return Err(Error::DimensionMismatch(format!(
                "maps {}->{} and {}->{}",
                self.d1, self.d2, other.d1, other.d2
            )));
        }
        Ok(())
    }

    /// The map `self - other`, in Choi form.
    pub fn difference(&self, other: &Channel) -> Result<Channel> {
        self.check_same_dims(other)?;
        let m = self.to_choi().matrix - other.to_choi().matrix;
        Channel::from_choi(self.d1, self.d2, m)
    }

    /// `Ad_T o self : X -> T* Phi(X) T` for `T` in `M_{d2}`.
    pub fn then_ad(&self, t: &CMatrix) -> Result<Channel> {
        if t.shape() != (self.d2, self.d2) {
            return Err(Error::DimensionMismatch(format!(
                "coefficient is {}x{}, expected {}x{}",
                t.nrows(),
                t.ncols(),
                self.d2,
                self.d2
            )));
        }
        let repr = match &self.repr {
            Representation::Kraus(k) => Representation::Kraus(KrausSet {
                d1: k.d1,
                d2: k.d2,
                operators: k.operators.iter().map(|v| v * t).collect(),
            }),
            Representation::Holevo(h) => Representation::Holevo(HolevoEnsemble {
                d1: h.d1,
                d2: h.d2,
                terms: h
                    .terms
                    .iter()
                    .map(|term| HolevoTerm {
                        f: term.f.clone(),
                        r: t.adjoint() * &term.r * t,
                    })
                    .collect(),
            }),
            Representation::Choi(ch) => {
                let lift = kron(&identity(self.d1), t);
                Representation::Choi(ChoiMatrix {
                    d1: ch.d1,
                    d2: ch.d2,
                    matrix: lift.adjoint() * &ch.matrix * lift,
                })
            }
        };
        Ok(Channel {
            d1: self.d1,
            d2: self.d2,
            repr,
            label: None,
        })
    }

    /// Hilbert-Schmidt adjoint `M_{d2} -> M_{d1}`.
    pub fn adjoint(&self) -> Channel {
        let repr = match &self.repr {
            Representation::Kraus(k) => Representation::Kraus(KrausSet {
                d1: k.d2,
                d2: k.d1,
                operators: k.operators.iter().map(|v| v.adjoint()).collect(),
            }),
            Representation::Holevo(h) => Representation::Holevo(HolevoEnsemble {
                d1: h.d2,
                d2: h.d1,
                terms: h
                    .terms
                    .iter()
                    .map(|t| HolevoTerm {
                        f: t.r.clone(),
                        r: t.f.clone(),
                    })
                    .collect(),
            }),
            Representation::Choi(ch) => {
                // C*[(a, i), (b, j)] = conj(C[(i, a), (j, b)])
                let (d1, d2) = (ch.d1, ch.d2);
                let m = CMatrix::from_fn(d1 * d2, d1 * d2, |row, col| {
                    let (a, i) = (row / d1, row % d1);
                    let (b, j) = (col / d1, col % d1);
                    ch.matrix[(i * d2 + a, j * d2 + b)].conj()
                });
                Representation::Choi(ChoiMatrix {
                    d1: d2,
                    d2: d1,
                    matrix: m,
                })
            }
        };
        Channel {
            d1: self.d2,
            d2: self.d1,
            repr,
            label: self.label.as_ref().map(|l| format!("{l}*")),
        }
    }

    pub fn predicates(&self, tol: &Tolerance) -> Predicates {
        let choi = self.to_choi();
        let m = choi.matrix();
        let is_hermiticity_preserving = max_abs_diff(m, &m.adjoint()) <= tol.eq_abs;
        let is_cp = is_hermiticity_preserving && is_psd(m, tol).unwrap_or(false);
        let is_unital = max_abs_diff(&self.apply_identity(), &identity(self.d2)) <= tol.eq_abs;
        let is_tp = max_abs_diff(&choi.partial_trace_output(), &identity(self.d1)) <= tol.eq_abs;
        Predicates {
            is_cp,
            is_unital,
            is_tp,
            is_hermiticity_preserving,
        }
    }

    pub fn is_unital(&self, tol: &Tolerance) -> bool {
        max_abs_diff(&self.apply_identity(), &identity(self.d2)) <= tol.eq_abs
    }

    pub fn is_cp(&self, tol: &Tolerance) -> bool {
        let choi = self.to_choi();
        is_psd(choi.matrix(), tol).unwrap_or(false)
    }

    pub fn stinespring(&self, tol: &Tolerance) -> Result<StinespringTriple> {
        if !self.is_cp(tol) {
            return Err(Error::NotCp);
        }
        let kraus = self.to_kraus(tol)?;
        let r = kraus.len();
        let mut v = CMatrix::zeros(self.d1 * r, self.d2);
        for (i, op) in kraus.operators().iter().enumerate() {
            for a in 0..self.d1 {
                v.row_mut(a * r + i).copy_from(&op.row(a));
            }
        }
        let stacked = CMatrix::from_columns(
            &kraus
                .operators()
                .iter()
                .map(frame_vector)
                .collect::<Vec<_>>(),
        );
        let triple = StinespringTriple {
            dilation_dim: r,
            isometry: v,
            minimal: svd_rank(&stacked, tol) == r,
        };
        let mut residual = max_abs_diff(
            &(triple.isometry.adjoint() * &triple.isometry),
            &self.apply_identity(),
        );
        for i in 0..self.d1 {
            for j in 0..self.d1 {
                let e = matrix_unit(self.d1, i, j);
                residual = residual.max(max_abs_diff(&triple.apply(&e), &self.apply(&e)?));
            }
        }
        if residual > tol.eq_abs {
            return Err(Error::VerificationFailed {
                what: "Stinespring dilation does not reproduce the map".into(),
                residual,
            });
        }
        Ok(triple)
    }

    pub fn fixed_point_check(&self, a: &CMatrix, tol: &Tolerance) -> Result<FixedPointCheck> {
        let p = self.predicates(tol);
        if self.d1 != self.d2 || !p.is_unital || !p.is_tp {
            return Err(Error::NotUnitalTp);
        }
        let image = self.apply(a)?;
        let kraus = self.to_kraus(tol)?;
        let is_fixed = max_abs_diff(&image, a) <= tol.eq_abs;
        let comm = kraus
            .operators()
            .iter()
            .map(|v| max_abs_diff(&(a * v), &(v * a)))
            .fold(0.0_f64, f64::max);
        let check = FixedPointCheck {
            is_fixed,
            commutes_with_all_kraus: comm <= tol.eq_abs,
        };
        if !check.consistent() {
            log::warn!(
                "fixed-point flags disagree (is_fixed={is_fixed}, max commutator {comm:e}); tolerance is likely miscalibrated"
            );
        }
        Ok(check)
    }

    /// Images `Phi(E_ij)` of the matrix units, a spanning set of the range.
    pub fn range_spanning_set(&self) -> Vec<CMatrix> {
        let choi = self.to_choi();
        (0..self.d1)
            .flat_map(|i| (0..self.d1).map(move |j| (i, j)))
            .map(|(i, j)| choi.block(i, j))
            .collect()
    }

    /// Dimension of the commutant of the range.
    pub fn commutant_dimension(&self, tol: &Tolerance) -> Commutant {
        let d = self.d2;
        let id = identity(d);
        let span = self.range_spanning_set();
        // Row-major vec: vec(Y B - B Y) = (I (x) B^T - B (x) I) vec(Y).
        let mut system = CMatrix::zeros(span.len() * d * d, d * d);
        for (k, b) in span.iter().enumerate() {
            let blk = kron(&id, &b.transpose()) - kron(b, &id);
            system
                .view_mut((k * d * d, 0), (d * d, d * d))
                .copy_from(&blk);
        }
        // A range of scalars gives a commutator system of pure rounding noise,
        // which a relative rank cutoff would count as full rank.
        let scale = span.iter().fold(0.0_f64, |a, b| a.max(max_abs(b)));
        let dim = if max_abs(&system) <= tol.eq_abs * scale.max(1.0) {
            d * d
        } else {
            nullspace(&system, tol).ncols().max(1)
        };
        Commutant {
            dim,
            is_irreducible: dim == 1,
        }
    }
}

impl From<KrausSet> for Channel {
    fn from(k: KrausSet) -> Self {
        Channel {
            d1: k.d1,
            d2: k.d2,
            repr: Representation::Kraus(k),
            label: None,
        }
    }
}

impl From<ChoiMatrix> for Channel {
    fn from(c: ChoiMatrix) -> Self {
        Channel {
            d1: c.d1,
            d2: c.d2,
            repr: Representation::Choi(c),
            label: None,
        }
    }
}

impl From<HolevoEnsemble> for Channel {
    fn from(h: HolevoEnsemble) -> Self {
        Channel {
            d1: h.d1,
            d2: h.d2,
            repr: Representation::Holevo(h),
            label: None,
        }
    }
}
