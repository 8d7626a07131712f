//! Reference maps with known structure and scripted checks over them.

use crate::channel::Channel;
use crate::decomp::{km_decompose, verify_decomposition, CStarCombination};
use crate::eb::{eb_verdict, is_ppt, rank_bounds, Verdict};
use crate::error::{Error, Result};
use crate::extremality::{
    cq_remark_flags, dominates_cp, dominates_eb, extract_canonical, extremality_witness,
    is_cstar_extreme, rn_derivative, unitary_equivalent,
};
use crate::numkernel::{
    basis_vector, c, identity, matrix_unit, max_abs_diff, outer, psd_sqrt, svd_rank, CMatrix,
    CVector, Tolerance,
};
use crate::rng::SeededRng;

pub const CASES: [&str; 8] = [
    "example_4_4",
    "example_4_5",
    "example_5_3",
    "example_5_4",
    "example_5_7",
    "example_5_9",
    "depolarizing_note",
    "krein_milman",
];

fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v)),
    ))
}

/// The four tetrahedral unit vectors in `C^3`.
pub fn tetrahedral_vectors() -> [CVector; 4] {
    let s = 1.0 / 3.0_f64.sqrt();
    let v = |a: f64, b: f64, d: f64| CVector::from_vec(vec![c(a * s), c(b * s), c(d * s)]);
    [
        v(1.0, 1.0, 1.0),
        v(1.0, -1.0, -1.0),
        v(-1.0, 1.0, -1.0),
        v(-1.0, -1.0, 1.0),
    ]
}

/// `X -> 3/4 sum <v_i, X v_i> |v_i><v_i|` over the tetrahedral vectors.
pub fn tetrahedral_m3() -> Channel {
    let terms = tetrahedral_vectors()
        .iter()
        .map(|v| (outer(v, v), outer(v, v) * c(0.75)))
        .collect();
    Channel::from_holevo(3, 3, terms)
        .expect("well-formed")
        .with_label("tetrahedral_m3")
}

/// The same map written entrywise: diagonal `tr(X)/3`, off-diagonal `(x_kl + x_lk)/3`.
pub fn tetrahedral_m3_explicit() -> Channel {
    let mut m = CMatrix::zeros(9, 9);
    for i in 0..3 {
        for j in 0..3 {
            let block = if i == j {
                identity(3) * c(1.0 / 3.0)
            } else {
                (matrix_unit(3, i, j) + matrix_unit(3, j, i)) * c(1.0 / 3.0)
            };
            m.view_mut((3 * i, 3 * j), (3, 3)).copy_from(&block);
        }
    }
    Channel::from_choi(3, 3, m).expect("well-formed")
}

/// `X -> diag(x_11, x_22)` with Kraus operators `{E_11, E_22}`.
pub fn diag_m2() -> Channel {
    Channel::from_kraus(2, 2, vec![matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)])
        .expect("well-formed")
        .with_label("diag_m2")
}

/// `X -> diag(x_11, x_22)` with Holevo terms `(E_ii, E_ii)`.
pub fn diag_m2_holevo() -> Channel {
    Channel::from_holevo(
        2,
        2,
        vec![
            (matrix_unit(2, 0, 0), matrix_unit(2, 0, 0)),
            (matrix_unit(2, 1, 1), matrix_unit(2, 1, 1)),
        ],
    )
    .expect("well-formed")
    .with_label("diag_m2")
}

/// `X -> diag(x_22, x_11)`.
pub fn diag_m2_swapped() -> Channel {
    Channel::from_holevo(
        2,
        2,
        vec![
            (matrix_unit(2, 1, 1), matrix_unit(2, 0, 0)),
            (matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)),
        ],
    )
    .expect("well-formed")
    .with_label("diag_m2_swapped")
}

/// `X -> ½ (X + V* X V)` with `V = diag(1, -1)`.
pub fn diag_m2_ucp_pair(tol: &Tolerance) -> Result<CStarCombination> {
    let h = identity(2) * c(0.5_f64.sqrt());
    CStarCombination::new(
        2,
        2,
        vec![
            (h.clone(), Channel::identity(2)),
            (h, Channel::ad(diag(&[1.0, -1.0]))?),
        ],
        tol,
    )
}

/// `X -> tr(X E_11)(E_11 + E_22) + tr(X E_33) E_33` on `M_3`.
pub fn block_diag_m3() -> Channel {
    Channel::from_holevo(
        3,
        3,
        vec![
            (matrix_unit(3, 0, 0), diag(&[1.0, 1.0, 0.0])),
            (matrix_unit(3, 2, 2), matrix_unit(3, 2, 2)),
        ],
    )
    .expect("well-formed")
    .with_label("block_diag_m3")
}

/// `X -> tr(X E_11) (t ⊕ 0) + tr(X E_33) t33 E_33` for a 2x2 block `t`.
pub fn block_diag_m3_dominated(t: &CMatrix, t33: f64) -> Result<Channel> {
    if t.shape() != (2, 2) {
        return Err(Error::DimensionMismatch(format!(
            "block is {:?}, expected (2, 2)",
            t.shape()
        )));
    }
    let mut top = CMatrix::zeros(3, 3);
    top.view_mut((0, 0), (2, 2)).copy_from(t);
    Channel::from_holevo(
        3,
        3,
        vec![
            (matrix_unit(3, 0, 0), top),
            (matrix_unit(3, 2, 2), matrix_unit(3, 2, 2) * c(t33)),
        ],
    )
}

/// Random invertible positive contraction on `C^2` (spectrum in `[0.05, 0.95)`)
/// and `t33` in `[0.05, 0.95)`.
pub fn random_block_parameters(rng: &mut SeededRng) -> (CMatrix, f64) {
    let t = rng.hermitian_with_spectrum(2, 0.05, 0.95);
    let t33 = rng.uniform(0.05, 0.95);
    (t, t33)
}

/// `X -> (x_11 + x_22)/2 I` on `M_2`.
pub fn trace_state_m2() -> Channel {
    Channel::from_holevo(2, 2, vec![(identity(2) * c(0.5), identity(2))])
        .expect("well-formed")
        .with_label("trace_state_m2")
}

/// `X -> [[tr X, x_12], [x_21, tr X]] / 4`, given by its Choi matrix.
pub fn trace_state_m2_partner() -> Channel {
    let q = c(0.25);
    let z = c(0.0);
    let m = CMatrix::from_row_slice(4, 4, &[q, z, z, q, z, q, z, z, z, z, q, z, q, z, z, q]);
    Channel::from_choi(2, 2, m)
        .expect("well-formed")
        .with_label("trace_state_m2_partner")
}

/// `X -> (tr(X) I + c X) / (d + c)` with Kraus operators
/// `E_ij / sqrt(d + c)` and `sqrt(c / (d + c)) I`.
pub fn noisy_identity(d: usize, weight: f64) -> Channel {
    let n = d as f64 + weight;
    let mut ops: Vec<CMatrix> = Vec::with_capacity(d * d + 1);
    for i in 0..d {
        for j in 0..d {
            ops.push(matrix_unit(d, i, j) * c(1.0 / n.sqrt()));
        }
    }
    ops.push(identity(d) * c((weight / n).sqrt()));
    Channel::from_kraus(d, d, ops)
        .expect("well-formed")
        .with_label("noisy_identity")
}

/// `X -> tr(X) I / (d + c)`.
pub fn noisy_identity_partner(d: usize, weight: f64) -> Channel {
    let n = d as f64 + weight;
    Channel::from_holevo(d, d, vec![(identity(d), identity(d) * c(1.0 / n))])
        .expect("well-formed")
        .with_label("noisy_identity_partner")
}

/// `X -> tr(X) I / d`.
pub fn depolarizing(d: usize) -> Channel {
    Channel::from_holevo(d, d, vec![(identity(d), identity(d) * c(1.0 / d as f64))])
        .expect("well-formed")
        .with_label(format!("depolarizing_m{d}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub name: String,
    pub checks: Vec<Check>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Recorder {
    checks: Vec<Check>,
}

impl Recorder {
    fn new() -> Self {
        Self { checks: Vec::new() }
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// Records `Err` as a failed check instead of aborting the case.
    fn attempt<T>(&mut self, name: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.check(name, false, e.to_string());
                None
            }
        }
    }
}

pub fn run_case(name: &str, tol: &Tolerance) -> Result<CaseReport> {
    let mut rec = Recorder::new();
    match name {
        "example_4_4" => case_trace_state(&mut rec, tol),
        "example_4_5" => case_noisy_identity(&mut rec, tol),
        "example_5_3" => case_block_diag(&mut rec, tol),
        "example_5_4" => case_mixed_state(&mut rec, tol),
        "example_5_7" => case_tetrahedral(&mut rec, tol),
        "example_5_9" => case_diag_m2(&mut rec, tol),
        "depolarizing_note" => case_depolarizing(&mut rec, tol),
        "krein_milman" => case_krein_milman(&mut rec, tol),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown gallery case '{other}' (known: {})",
                CASES.join(", ")
            )))
        }
    }
    Ok(CaseReport {
        name: name.into(),
        checks: rec.checks,
    })
}

pub fn run_all(tol: &Tolerance) -> Vec<CaseReport> {
    CASES
        .iter()
        .map(|n| run_case(n, tol).expect("known case"))
        .collect()
}

fn case_trace_state(rec: &mut Recorder, tol: &Tolerance) {
    let (phi, psi) = (trace_state_m2(), trace_state_m2_partner());
    let diff_ppt = phi
        .difference(&psi)
        .map(|d| is_ppt(&d, tol))
        .unwrap_or(false);
    rec.check(
        "phi, psi, phi - psi are PPT",
        is_ppt(&phi, tol) && is_ppt(&psi, tol) && diff_ppt,
        "",
    );
    if let Some(v) = rec.attempt("dominates_eb", dominates_eb(&phi, &psi, tol)) {
        rec.check("psi <=_EB phi", v.is_eb == Verdict::Yes, v.provenance);
    }
    match extract_canonical(&phi, tol) {
        Err(Error::NotExtreme(msg)) => rec.check("phi has no canonical form", true, msg),
        other => rec.check("phi has no canonical form", false, format!("{other:?}")),
    }
    let r = psi.apply_identity();
    let mut residual = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            let e = matrix_unit(2, i, j);
            let lhs = psi.apply(&e).expect("shape");
            let rhs = phi.apply(&e).expect("shape") * &r;
            residual = residual.max(max_abs_diff(&lhs, &rhs));
        }
    }
    rec.check(
        "psi != phi(.) psi(I)",
        residual > tol.eq_abs,
        format!("residual {residual:e}"),
    );
}

fn case_noisy_identity(rec: &mut Recorder, tol: &Tolerance) {
    let (phi, psi) = (noisy_identity(2, 1.0), noisy_identity_partner(2, 1.0));
    let p = phi.predicates(tol);
    rec.check("phi is unital CP", p.is_cp && p.is_unital, "");
    if let Some(v) = rec.attempt("phi EB verdict", eb_verdict(&phi, tol)) {
        rec.check("phi is EB", v.is_eb == Verdict::Yes, v.provenance);
    }
    if let Some(d) = rec.attempt("dominates_cp", dominates_cp(&phi, &psi, tol)) {
        rec.check("phi - psi is CP", d, "");
    }
    if let Some(diff) = rec.attempt("difference", phi.difference(&psi)) {
        if let Some(v) = rec.attempt("difference EB verdict", eb_verdict(&diff, tol)) {
            rec.check(
                "phi - psi is not EB (PPT fails, conclusive)",
                v.is_eb == Verdict::No && !v.ppt && v.conclusive,
                v.provenance,
            );
        }
    }
}

fn case_block_diag(rec: &mut Recorder, tol: &Tolerance) {
    let phi = block_diag_m3();
    let Some(form) = rec.attempt("extract canonical", extract_canonical(&phi, tol)) else {
        return;
    };
    rec.check("phi has two blocks", form.blocks().len() == 2, "");
    let mut rng = SeededRng::new(53);
    let mut worst_r = 0.0_f64;
    let mut worst_z = 0.0_f64;
    for _ in 0..10 {
        let (t, t33) = random_block_parameters(&mut rng);
        let Some(psi) = rec.attempt("build psi", block_diag_m3_dominated(&t, t33)) else {
            return;
        };
        let mut expected = CMatrix::zeros(3, 3);
        expected.view_mut((0, 0), (2, 2)).copy_from(&t);
        expected[(2, 2)] = c(t33);
        let Some(rn) = rec.attempt("rn_derivative", rn_derivative(&form, &psi, tol)) else {
            return;
        };
        worst_r = worst_r.max(max_abs_diff(&rn.r, &expected)).max(rn.residual);
        let Some(z) = rec.attempt("extremality_witness", extremality_witness(&form, &psi, tol))
        else {
            return;
        };
        let sqrt = psd_sqrt(&expected, tol).expect("psd by construction");
        let reproduced = phi
            .then_ad(&z)
            .and_then(|m| m.distance(&psi))
            .unwrap_or(f64::INFINITY);
        worst_z = worst_z.max(max_abs_diff(&z, &sqrt)).max(reproduced);
    }
    rec.check(
        "R = psi(I) with block structure",
        worst_r <= 1e-9,
        format!("max error {worst_r:e}"),
    );
    rec.check(
        "Z = sqrt(psi(I)) and Ad_Z o phi = psi",
        worst_z <= 1e-9,
        format!("max error {worst_z:e}"),
    );
}

fn case_mixed_state(rec: &mut Recorder, tol: &Tolerance) {
    let phi = trace_state_m2();
    let (a, b) = (diag_m2_holevo(), diag_m2_swapped());
    let h = identity(2) * c(0.5_f64.sqrt());
    if let Some(comb) = rec.attempt(
        "combination",
        CStarCombination::new(2, 2, vec![(h.clone(), a.clone()), (h, b.clone())], tol),
    ) {
        let err = comb
            .evaluate(tol)
            .and_then(|m| m.distance(&phi))
            .unwrap_or(f64::INFINITY);
        rec.check(
            "phi = ½ phi_1 + ½ phi_2",
            err <= 1e-12,
            format!("error {err:e}"),
        );
    }
    if let Some(r) = rec.attempt("phi extremality", is_cstar_extreme(&phi, tol)) {
        rec.check(
            "phi is not C*-extreme",
            !r.is_cstar_extreme,
            format!("Choi-rank {}", r.choi_rank),
        );
    }
    for (label, ch) in [("phi_1", &a), ("phi_2", &b)] {
        if let Some(r) = rec.attempt(label, is_cstar_extreme(ch, tol)) {
            rec.check(&format!("{label} is C*-extreme"), r.is_cstar_extreme, "");
        }
    }
    if let (Ok(fa), Ok(fb)) = (extract_canonical(&a, tol), extract_canonical(&b, tol)) {
        if let Some(eq) = rec.attempt("unitary_equivalent", unitary_equivalent(&fa, &fb, tol)) {
            rec.check(
                "phi_1 and phi_2 are unitarily equivalent",
                eq.equivalent,
                "",
            );
        }
    }
}

fn case_tetrahedral(rec: &mut Recorder, tol: &Tolerance) {
    let phi = tetrahedral_m3();
    let dist = phi
        .distance(&tetrahedral_m3_explicit())
        .unwrap_or(f64::INFINITY);
    rec.check(
        "ensemble matches the entrywise formula",
        dist <= 1e-12,
        format!("distance {dist:e}"),
    );
    let p = phi.predicates(tol);
    rec.check("unital and trace preserving", p.is_unital && p.is_tp, "");
    let self_adj = phi.distance(&phi.adjoint()).unwrap_or(f64::INFINITY);
    rec.check(
        "self-adjoint",
        self_adj <= 1e-12,
        format!("distance {self_adj:e}"),
    );
    let rank = svd_rank(phi.to_choi().matrix(), tol);
    rec.check("Choi-rank is 4", rank == 4, format!("rank {rank}"));
    if let Some(r) = rec.attempt("extremality", is_cstar_extreme(&phi, tol)) {
        rec.check("not C*-extreme", !r.is_cstar_extreme, "");
    }
    if let Some(b) = rec.attempt("rank bounds", rank_bounds(&phi, tol)) {
        rec.check(
            "EB-rank upper bound 4",
            b.eb_rank_upper == 4,
            format!("{b:?}"),
        );
    }
}

fn case_diag_m2(rec: &mut Recorder, tol: &Tolerance) {
    let phi = diag_m2();
    let x = CMatrix::from_fn(2, 2, |i, j| c((1 + 2 * i + j) as f64));
    let y = phi.apply(&x).expect("shape");
    rec.check(
        "phi(X) = diag(x_11, x_22)",
        max_abs_diff(&y, &diag(&[1.0, 4.0])) == 0.0,
        "",
    );
    let Some(r) = rec.attempt("extremality", is_cstar_extreme(&phi, tol)) else {
        return;
    };
    rec.check("C*-extreme", r.is_cstar_extreme, "");
    if let Some(form) = &r.canonical {
        let ok = form.blocks().len() == 2
            && form.blocks().iter().enumerate().all(|(k, b)| {
                (b.u.clone() - basis_vector(2, k)).norm() <= 1e-12
                    && max_abs_diff(&b.p, &matrix_unit(2, k, k)) <= 1e-12
            });
        rec.check("canonical form {(e_1, E_11), (e_2, E_22)}", ok, "");
        if let Some(f) = rec.attempt("overlap flags", cq_remark_flags(form, tol)) {
            rec.check("overlaps vanish", !f.all_overlaps_nonzero, "");
        }
    }
    rec.check(
        "not linear extreme in UCP",
        r.is_cq_linear_extreme_in_ucp == Some(false),
        "",
    );
    if let Some(comb) = rec.attempt("UCP pair", diag_m2_ucp_pair(tol)) {
        let err = comb
            .evaluate(tol)
            .and_then(|m| m.distance(&phi))
            .unwrap_or(f64::INFINITY);
        rec.check(
            "½(id + Ad_V) reconstructs phi",
            err <= 1e-12,
            format!("error {err:e}"),
        );
    }
}

fn case_depolarizing(rec: &mut Recorder, tol: &Tolerance) {
    for d in [2usize, 3] {
        let phi = depolarizing(d);
        let rank = svd_rank(phi.to_choi().matrix(), tol);
        rec.check(
            &format!("d={d}: Choi-rank d^2"),
            rank == d * d,
            format!("rank {rank}"),
        );
        if let Some(b) = rec.attempt("rank bounds", rank_bounds(&phi, tol)) {
            rec.check(
                &format!("d={d}: EB-rank = d^2"),
                b.eb_rank_lower == d * d && b.eb_rank_upper == d * d,
                format!("{b:?}"),
            );
        }
        if let Some(r) = rec.attempt("extremality", is_cstar_extreme(&phi, tol)) {
            rec.check(&format!("d={d}: not C*-extreme"), !r.is_cstar_extreme, "");
        }
    }
}

fn case_krein_milman(rec: &mut Recorder, tol: &Tolerance) {
    let mut rng = SeededRng::new(56);
    let mut inputs = vec![tetrahedral_m3(), diag_m2_holevo()];
    for (d1, d2) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
        if let Some(ch) = rec.attempt(
            "generator",
            crate::eb::random_unital_eb(&mut rng, d1, d2, 4),
        ) {
            inputs.push(ch);
        }
    }
    for ch in &inputs {
        let label = ch.label().unwrap_or("random").to_string();
        let Some(comb) = rec.attempt(&label, km_decompose(ch, tol)) else {
            continue;
        };
        if let Some(v) = rec.attempt(&label, verify_decomposition(&comb, ch, tol)) {
            rec.check(
                &format!("{label}: reconstruction and extreme factors"),
                v.reconstruction_error <= 1e-9 && v.all_factors_extreme,
                format!("error {:e}, {} terms", v.reconstruction_error, comb.len()),
            );
        }
    }
}
