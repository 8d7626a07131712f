use ebx_core::channel::frame_vector;
use ebx_core::decomp::{km_decompose, CStarCombination};
use ebx_core::eb::{
    eb_verdict, is_ppt, random_cstar_extreme, random_unital_eb, rank_bounds, Verdict,
};
use ebx_core::extremality::{
    dominates_cp, dominates_eb, extract_canonical, is_cstar_extreme, rn_derivative,
    unitary_equivalent, CanonicalEBForm,
};
use ebx_core::numkernel::{
    c, identity, matrix_unit, max_abs, max_abs_diff, pinv, projection_range, psd_sqrt, svd_rank,
    trace,
};
use ebx_core::{CMatrix, Channel, SeededRng, Tolerance};
use proptest::prelude::*;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn random_cp(rng: &mut SeededRng, d1: usize, d2: usize, n: usize) -> Channel {
    let ops = (0..n).map(|_| rng.gaussian_matrix(d1, d2)).collect();
    Channel::from_kraus(d1, d2, ops).unwrap()
}

fn hs(a: &CMatrix, b: &CMatrix) -> ebx_core::C64 {
    trace(&(a.adjoint() * b))
}

/// Orthogonal projection onto the span of the frame vectors.
fn span_projector(ops: &[CMatrix]) -> CMatrix {
    let w = CMatrix::from_columns(&ops.iter().map(frame_vector).collect::<Vec<_>>());
    &w * pinv(&w, &tol())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn choi_kraus_round_trip(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4, n in 1usize..5) {
        let mut rng = SeededRng::new(seed);
        let ch = random_cp(&mut rng, d1, d2, n);
        let choi = ch.to_choi();
        let back = choi.to_kraus(&tol()).unwrap().to_choi();
        prop_assert!(max_abs_diff(back.matrix(), choi.matrix()) <= 1e-9 * max_abs(choi.matrix()));
        prop_assert_eq!(choi.to_kraus(&tol()).unwrap().len(), svd_rank(choi.matrix(), &tol()));
    }

    #[test]
    fn representations_agree(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4, n in 1usize..4) {
        let mut rng = SeededRng::new(seed);
        let holevo = random_unital_eb(&mut rng, d1, d2, n).unwrap();
        let kraus: Channel = holevo.to_kraus(&tol()).unwrap().into();
        let choi: Channel = holevo.to_choi().into();
        for i in 0..d1 {
            for j in 0..d1 {
                let e = matrix_unit(d1, i, j);
                let a = holevo.apply(&e).unwrap();
                prop_assert!(max_abs_diff(&a, &kraus.apply(&e).unwrap()) <= 1e-9);
                prop_assert!(max_abs_diff(&a, &choi.apply(&e).unwrap()) <= 1e-9);
            }
        }
    }

    #[test]
    fn adjoint_duality(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4, n in 1usize..4) {
        let mut rng = SeededRng::new(seed);
        let ch = random_cp(&mut rng, d1, d2, n);
        let x = rng.gaussian_matrix(d1, d1);
        let y = rng.gaussian_matrix(d2, d2);
        for adj in [ch.adjoint(), Channel::from(ch.to_choi()).adjoint()] {
            let lhs = hs(&ch.apply(&x).unwrap(), &y);
            let rhs = hs(&x, &adj.apply(&y).unwrap());
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
        }
        let twice = ch.adjoint().adjoint();
        prop_assert!(twice.distance(&ch).unwrap() <= 1e-12 * (1.0 + max_abs(ch.to_choi().matrix())));
    }

    #[test]
    fn unital_iff_adjoint_tp(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4, n in 1usize..4) {
        let mut rng = SeededRng::new(seed);
        let ch = random_unital_eb(&mut rng, d1, d2, n).unwrap();
        prop_assert!(ch.predicates(&tol()).is_unital);
        prop_assert!(ch.adjoint().predicates(&tol()).is_tp);
        let generic = random_cp(&mut rng, d1, d2, n);
        prop_assert_eq!(generic.predicates(&tol()).is_unital, generic.adjoint().predicates(&tol()).is_tp);
    }

    #[test]
    fn kraus_span_invariance(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4, n in 1usize..4) {
        let mut rng = SeededRng::new(seed);
        let ch = random_cp(&mut rng, d1, d2, n);
        let mixed = rng.unitary(n);
        // A unitary remix of the Kraus operators is another Kraus set for the same map.
        let ops = ch.to_kraus(&tol()).unwrap().operators().to_vec();
        let remixed: Vec<CMatrix> = (0..n)
            .map(|k| (0..n).fold(CMatrix::zeros(d1, d2), |acc, j| acc + &ops[j] * mixed[(j, k)]))
            .collect();
        let other = Channel::from_kraus(d1, d2, remixed.clone()).unwrap();
        prop_assert!(other.distance(&ch).unwrap() <= 1e-9 * max_abs(ch.to_choi().matrix()));
        let from_choi = ch.to_choi().to_kraus(&tol()).unwrap();
        let p1 = span_projector(&ops);
        prop_assert!(max_abs_diff(&p1, &span_projector(&remixed)) <= 1e-9);
        prop_assert!(max_abs_diff(&p1, &span_projector(from_choi.operators())) <= 1e-9);
    }

    #[test]
    fn generated_eb_channels(seed in any::<u64>(), d1 in 2usize..4, d2 in 2usize..4, n in 1usize..6) {
        let mut rng = SeededRng::new(seed);
        let ch = random_unital_eb(&mut rng, d1, d2, n).unwrap();
        let p = ch.predicates(&tol());
        prop_assert!(p.is_cp && p.is_unital && is_ppt(&ch, &tol()));
        let b = rank_bounds(&ch, &tol()).unwrap();
        prop_assert!(d2 <= b.choi_rank);
        prop_assert!(b.choi_rank <= b.eb_rank_lower);
        prop_assert!(b.eb_rank_lower <= b.eb_rank_upper);
        prop_assert!(b.eb_rank_upper <= (d1 * d2).pow(2));
    }

    #[test]
    fn ppt_survives_ad(seed in any::<u64>(), d1 in 2usize..4, d2 in 2usize..4, n in 1usize..5) {
        let mut rng = SeededRng::new(seed);
        let ch = random_unital_eb(&mut rng, d1, d2, n).unwrap();
        let t = rng.gaussian_matrix(d2, d2);
        let composed: Channel = ch.then_ad(&t).unwrap().to_choi().into();
        prop_assert!(is_ppt(&composed, &tol()));
    }

    #[test]
    fn no_verdict_implies_not_ppt(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4, n in 1usize..5) {
        let mut rng = SeededRng::new(seed);
        let ch: Channel = random_cp(&mut rng, d1, d2, n).to_choi().into();
        let v = eb_verdict(&ch, &tol()).unwrap();
        prop_assert!(!(v.is_eb == Verdict::No && v.ppt));
        if v.is_eb == Verdict::Yes {
            prop_assert!(v.certificate.is_some() || (v.ppt && d1 * d2 <= 6));
        }
    }

    #[test]
    fn radon_nikodym_chain(seed in any::<u64>(), d1 in 2usize..4, d2 in 2usize..4) {
        let mut rng = SeededRng::new(seed);
        let n = rng.int_inclusive(1, d2);
        let phi = random_cstar_extreme(&mut rng, d1, d2, n).unwrap();
        let form = extract_canonical(&phi, &tol()).unwrap();
        let mut r0 = CMatrix::zeros(d2, d2);
        for b in form.blocks() {
            let q = projection_range(&b.p, &tol()).unwrap();
            r0 += &q * rng.hermitian_with_spectrum(q.ncols(), 0.0, 1.0) * q.adjoint();
        }
        let psi = phi.then_ad(&psd_sqrt(&r0, &tol()).unwrap()).unwrap();
        prop_assert!(dominates_cp(&phi, &psi, &tol()).unwrap());
        prop_assert_eq!(dominates_eb(&phi, &psi, &tol()).unwrap().is_eb, Verdict::Yes);
        let rn = rn_derivative(&form, &psi, &tol()).unwrap();
        prop_assert!(max_abs_diff(&rn.r, &r0) <= 1e-9);
        let complement = psd_sqrt(&(identity(d2) - &r0), &tol()).unwrap();
        let rest = phi.then_ad(&complement).unwrap();
        prop_assert!(phi.difference(&psi).unwrap().distance(&rest).unwrap() <= 1e-9);
        let cert: Channel = rn.certificate(&form).into();
        prop_assert!(cert.distance(&psi).unwrap() <= 1e-9);
    }

    #[test]
    fn irreducible_forms_are_states(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4) {
        let mut rng = SeededRng::new(seed);
        let n = rng.int_inclusive(1, d2);
        let phi = match random_cstar_extreme(&mut rng, d1, d2, n) {
            Ok(ch) => ch,
            Err(_) => return Ok(()),
        };
        let report = is_cstar_extreme(&phi, &tol()).unwrap();
        let form = report.canonical.unwrap();
        if report.is_irreducible {
            prop_assert_eq!(d2, 1);
            prop_assert_eq!(form.blocks().len(), 1);
        }
        if form.blocks().len() >= 2 {
            prop_assert!(phi.commutant_dimension(&tol()).dim >= 2);
        }
    }

    #[test]
    fn equivalence_relation(seed in any::<u64>(), d1 in 2usize..4, d2 in 2usize..4) {
        let mut rng = SeededRng::new(seed);
        let n = rng.int_inclusive(1, d2);
        let a = extract_canonical(&random_cstar_extreme(&mut rng, d1, d2, n).unwrap(), &tol()).unwrap();
        let u = rng.unitary(d2);
        let b = extract_canonical(&a.reconstruct().then_ad(&u).unwrap(), &tol()).unwrap();
        prop_assert!(unitary_equivalent(&a, &a, &tol()).unwrap().equivalent);
        let ab = unitary_equivalent(&a, &b, &tol()).unwrap();
        prop_assert!(ab.equivalent);
        let w = ab.witness_unitary.unwrap();
        prop_assert!(max_abs_diff(&(w.adjoint() * &w), &identity(d2)) <= 1e-9);
        prop_assert!(unitary_equivalent(&b, &a, &tol()).unwrap().equivalent);
        let mut blocks = a.blocks().to_vec();
        blocks.reverse();
        let permuted = CanonicalEBForm::new(d1, d2, blocks, &tol()).unwrap();
        prop_assert!(unitary_equivalent(&permuted, &b, &tol()).unwrap().equivalent);
    }

    #[test]
    fn evaluate_keeps_unital_eb(seed in any::<u64>(), d1 in 2usize..4, d2 in 2usize..4) {
        let mut rng = SeededRng::new(seed);
        let a = random_unital_eb(&mut rng, d1, d2, 3).unwrap();
        let b = random_unital_eb(&mut rng, d1, d2, 2).unwrap();
        let u = rng.unitary(d2);
        let s = rng.uniform(0.1, 0.9);
        let t1 = &u * CMatrix::from_diagonal(&ebx_core::CVector::from_element(d2, c(s.sqrt())));
        let t2 = CMatrix::from_diagonal(&ebx_core::CVector::from_element(d2, c((1.0 - s).sqrt()))) * u.adjoint();
        let comb = CStarCombination::new(d1, d2, vec![(t1, a), (t2, b)], &tol()).unwrap();
        let out = comb.evaluate(&tol()).unwrap();
        prop_assert!(out.is_unital(&tol()));
        prop_assert!(out.certificate().is_some());
        prop_assert_eq!(eb_verdict(&out, &tol()).unwrap().is_eb, Verdict::Yes);
    }

    #[test]
    fn decomposition_size_matches_refinement(seed in any::<u64>(), d1 in 2usize..4, d2 in 2usize..4, n in 1usize..6) {
        let mut rng = SeededRng::new(seed);
        let ch = random_unital_eb(&mut rng, d1, d2, n).unwrap();
        let comb = km_decompose(&ch, &tol()).unwrap();
        let refined = ch.certificate().unwrap().rank_one_refinement(&tol()).unwrap().len();
        prop_assert_eq!(comb.len(), refined);
        prop_assert!(comb.len() <= (d1 * d2).pow(2));
    }
}

#[test]
fn generated_eb_channels_over_many_seeds() {
    for seed in 0..1000u64 {
        let mut rng = SeededRng::new(seed);
        let d1 = 2 + (seed % 2) as usize;
        let d2 = 2 + ((seed / 2) % 2) as usize;
        let ch = random_unital_eb(&mut rng, d1, d2, 1 + (seed % 5) as usize).unwrap();
        let p = ch.predicates(&tol());
        assert!(p.is_cp && p.is_unital && is_ppt(&ch, &tol()), "seed {seed}");
        assert!(svd_rank(ch.to_choi().matrix(), &tol()) >= d2, "seed {seed}");
    }
}

#[test]
fn identical_seeds_give_identical_channels() {
    for seed in [0u64, 7, 42, u64::MAX] {
        let a = random_unital_eb(&mut SeededRng::new(seed), 3, 2, 4).unwrap();
        let b = random_unital_eb(&mut SeededRng::new(seed), 3, 2, 4).unwrap();
        assert_eq!(a, b);
        let a = random_cstar_extreme(&mut SeededRng::new(seed), 2, 3, 2).unwrap();
        let b = random_cstar_extreme(&mut SeededRng::new(seed), 2, 3, 2).unwrap();
        assert_eq!(a, b);
    }
}
