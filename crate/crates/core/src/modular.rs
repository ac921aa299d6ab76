//! Modular structure attached to a faithful state: the automorphism
//! `sigma_{-i}(a) = rho a rho^{-1}`, the modular group, s-scalar products,
//! commutation tests for superoperators, and privileged GKSL
//! representations.
//!
//! A special representation is *privileged* when `[H, rho] = 0` and each
//! `L_k` is an eigenvector of the modular automorphism:
//! `rho L_k = lambda_k L_k rho` with `lambda_k > 0`. A generator admits one
//! exactly when it commutes with `sigma_{-i}`, which is also exactly when
//! its 0-dual is again a QMS.

use crate::error::{Error, Result};
use crate::gksl::{build_generator, GkslRep, Superoperator};
use crate::matrices::{
    cr, eye, herm_eig, lstsq, sandwich_superop, unitarity_residual, vectorize, CMat, CVec, HermMat,
    C64,
};
use crate::settings::Tolerances;
use crate::stationary::DensityState;

/// `sigma_{-i}(a) = rho a rho^{-1}`.
pub fn sigma_minus_i(rho: &DensityState, a: &CMat) -> Result<CMat> {
    if !rho.is_faithful() {
        return Err(Error::NotFaithful {
            min_eig: rho.min_eig(),
        });
    }
    Ok(rho.matrix() * a * rho.power(-1.0)?)
}

/// Modular group `sigma_t(a) = rho^{it} a rho^{-it}` by spectral calculus.
pub fn modular_group(rho: &DensityState, t: f64, a: &CMat) -> CMat {
    let d = rho.dim();
    let phases: Vec<C64> = rho
        .eigenvalues()
        .iter()
        .map(|&lam| {
            if lam > 0.0 {
                (C64::new(0.0, t * lam.ln())).exp()
            } else {
                cr(1.0)
            }
        })
        .collect();
    let mut u = CMat::zeros(d, d);
    for (k, &phase) in phases.iter().enumerate() {
        let v = rho.eigenvectors().column(k);
        u += (v * v.adjoint()) * phase;
    }
    &u * a * u.adjoint()
}

/// Scalar product `<a, b>_s = tr(rho^{1-s} a' rho^s b)`.
pub fn s_inner(rho: &DensityState, s: f64, a: &CMat, b: &CMat) -> Result<C64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::SOutOfRange { s });
    }
    if !rho.is_faithful() {
        return Err(Error::NotFaithful {
            min_eig: rho.min_eig(),
        });
    }
    let p1 = rho.power(1.0 - s)?;
    let ps = rho.power(s)?;
    Ok((p1 * a.adjoint() * ps * b).trace())
}

/// Superoperator of `a -> rho a rho^{-1}`.
pub fn modular_superop(rho: &DensityState) -> Result<CMat> {
    Ok(sandwich_superop(rho.matrix(), &rho.power(-1.0)?))
}

/// Does the superoperator commute with the modular automorphism?
///
/// Returns the verdict together with the relative commutator residual
/// `||[Sigma_rho, S]||_F / ||S||_F`.
pub fn commutes_with_modular(
    s: &Superoperator,
    rho: &DensityState,
    tol: &Tolerances,
) -> Result<(bool, f64)> {
    if rho.dim() != s.dim() {
        return Err(Error::ShapeMismatch(format!(
            "state dimension {} vs superoperator dimension {}",
            rho.dim(),
            s.dim()
        )));
    }
    let sigma = modular_superop(rho)?;
    let comm = (&sigma * s.mat() - s.mat() * &sigma).norm();
    let scale = s.mat().norm().max(1e-300);
    let residual = comm / scale;
    Ok((residual <= tol.comm, residual))
}

/// A privileged GKSL representation with its modular eigenvalues.
#[derive(Debug, Clone)]
pub struct PrivilegedRep {
    pub rep: GkslRep,
    /// Positive eigenvalues `lambda_k` with `rho L_k = lambda_k L_k rho`.
    pub lambdas: Vec<f64>,
    /// Unitary mixing `u` with `L'_k = sum_j u[k, j] L_j` relating the
    /// input operators to the privileged ones.
    pub mixing: CMat,
}

impl PrivilegedRep {
    /// Largest relative residual of the defining relations
    /// `rho L_k = lambda_k L_k rho` and `rho L_k' = lambda_k^{-1} L_k' rho`.
    pub fn relation_residual(&self, rho: &DensityState) -> f64 {
        let r = rho.matrix();
        let mut worst: f64 = 0.0;
        for (l, &lam) in self.rep.ops().iter().zip(&self.lambdas) {
            let scale = l.norm().max(1e-300);
            let r1 = (r * l - (l * r) * cr(lam)).norm() / scale;
            let r2 = (r * l.adjoint() - (l.adjoint() * r) * cr(1.0 / lam)).norm() / scale;
            worst = worst.max(r1).max(r2);
        }
        worst
    }
}

/// Build a privileged representation from a special one.
///
/// Expands `sigma_{-i}(L_k)` in the span of the `L_j` by least squares; the
/// coefficient matrix is the restriction of the positive self-adjoint map
/// `Delta = rho (.) rho^{-1}`, so when the span is invariant it is Hermitian
/// and a unitary eigenbasis remix of the `L_k` diagonalizes it. A
/// non-invariant span means no privileged representation exists
/// (equivalently, the 0-dual is not a QMS).
pub fn privileged_rep(
    rep: &GkslRep,
    rho: &DensityState,
    tol: &Tolerances,
) -> Result<PrivilegedRep> {
    let d = rep.dim();
    if rho.dim() != d {
        return Err(Error::ShapeMismatch(format!(
            "state dimension {} vs representation dimension {d}",
            rho.dim()
        )));
    }
    if !rho.is_faithful() {
        return Err(Error::NotFaithful {
            min_eig: rho.min_eig(),
        });
    }
    let special = rep.special_check(rho, tol);
    if !special.is_special {
        return Err(Error::InvalidInput(format!(
            "representation is not special w.r.t. rho (max |tr(rho L_k)| = {:.3e}, Gram min sv = {:.3e})",
            special.max_state_trace, special.gram_min_sv
        )));
    }

    let h = rep.hamiltonian().mat();
    let r = rho.matrix();
    let h_comm = (h * r - r * h).norm();
    if h_comm > 1e-9 * (1.0 + h.norm()) {
        return Err(Error::NoPrivilegedRep(format!(
            "Hamiltonian does not commute with the state, ||[H, rho]|| = {h_comm:.3e}"
        )));
    }

    let m = rep.ops().len();
    if m == 0 {
        return Ok(PrivilegedRep {
            rep: rep.clone(),
            lambdas: Vec::new(),
            mixing: CMat::zeros(0, 0),
        });
    }

    // Least-squares expansion of Delta(L_k) in the raw operator basis.
    let basis = CMat::from_columns(
        &rep.ops()
            .iter()
            .map(vectorize)
            .collect::<Vec<CVec>>(),
    );
    let mut y = CMat::zeros(m, m);
    for k in 0..m {
        let target = vectorize(&sigma_minus_i(rho, &rep.ops()[k])?);
        let (coeffs, residual) = lstsq(&basis, &target, false)?;
        if residual > 1e-8 * (1.0 + target.norm()) {
            return Err(Error::NoPrivilegedRep(format!(
                "operator span is not invariant under the modular automorphism \
                 (expansion residual {residual:.3e} for operator {k})"
            )));
        }
        y.set_column(k, &coeffs);
    }

    // Hermiticity check in an HS-orthonormalized basis of the span, where
    // the restriction of Delta is exactly self-adjoint.
    let q = basis.clone().qr().q();
    let mut y_ortho = CMat::zeros(m, m);
    for b in 0..m {
        let qb = crate::matrices::devectorize(&q.column(b).into_owned())?;
        let img = vectorize(&sigma_minus_i(rho, &qb)?);
        let col = q.adjoint() * img;
        y_ortho.set_column(b, &col);
    }
    let y_ortho_dev = (&y_ortho - y_ortho.adjoint()).norm();
    if y_ortho_dev > tol.y_herm * y_ortho.norm().max(1e-300) {
        return Err(Error::NoPrivilegedRep(format!(
            "modular restriction is not self-adjoint on the span (deviation {y_ortho_dev:.3e})"
        )));
    }

    // Symmetrize and diagonalize in the raw basis; the eigenvector matrix is
    // the unitary mixing.
    let y_herm = HermMat::symmetrized(y);
    let (lambdas_asc, vecs) = herm_eig(&y_herm)?;
    if let Some(&bad) = lambdas_asc.iter().find(|&&l| l <= 0.0) {
        return Err(Error::Internal(format!(
            "nonpositive modular eigenvalue {bad:.3e}; eigenvalues of sigma_{{-i}} must be > 0"
        )));
    }

    let mut entries: Vec<(f64, CMat, CVec)> = Vec::with_capacity(m);
    for g in 0..m {
        let lam = lambdas_asc[g];
        let mut op = CMat::zeros(d, d);
        for k in 0..m {
            op += &rep.ops()[k] * vecs[(k, g)];
        }
        // canonical phase, folded into the mixing row
        let phased = crate::gksl::canonical_phase(op.clone());
        let phase = phase_between(&op, &phased);
        let row = vecs.column(g).map(|z| z * phase);
        entries.push((lam, phased, row));
    }
    entries.sort_by(|a, b| b.0.total_cmp(&a.0));

    let lambdas: Vec<f64> = entries.iter().map(|e| e.0).collect();
    let ops: Vec<CMat> = entries.iter().map(|e| e.1.clone()).collect();
    let mut mixing = CMat::zeros(m, m);
    for (row, e) in entries.iter().enumerate() {
        for k in 0..m {
            mixing[(row, k)] = e.2[k];
        }
    }

    let u_res = unitarity_residual(&mixing);
    if u_res > 1e-9 * (m as f64).sqrt() {
        return Err(Error::Internal(format!(
            "mixing matrix deviates from unitarity by {u_res:.3e}"
        )));
    }

    let priv_rep = GkslRep::new(rep.hamiltonian().clone(), ops)?;
    let out = PrivilegedRep {
        rep: priv_rep,
        lambdas,
        mixing,
    };

    let res = out.relation_residual(rho);
    if res > 1e-7 {
        return Err(Error::Internal(format!(
            "privileged relations fail after construction (residual {res:.3e})"
        )));
    }
    let s0 = build_generator(rep);
    let s1 = build_generator(&out.rep);
    let gen_res = (s1.mat() - s0.mat()).norm();
    if gen_res > tol.rep_match * 10.0 * (1.0 + s0.mat().norm()) {
        return Err(Error::Internal(format!(
            "privileged remix changed the generator (residual {gen_res:.3e})"
        )));
    }
    Ok(out)
}

fn phase_between(original: &CMat, phased: &CMat) -> C64 {
    // phased = original * phase.conj(); recover the applied factor
    for (o, p) in original.iter().zip(phased.iter()) {
        if o.norm() > 1e-12 {
            return p / o;
        }
    }
    cr(1.0)
}

/// Comparison of two privileged representations of the same generator.
#[derive(Debug, Clone)]
pub struct UniquenessReport {
    /// Unitary `V` with `L2_k = sum_j V[k, j] L1_j`.
    pub intertwiner: CMat,
    /// Real `alpha` with `H2 = H1 + alpha`.
    pub hamiltonian_shift: f64,
    pub hamiltonian_residual: f64,
    pub expansion_residual: f64,
    pub unitarity_residual: f64,
    /// `||V D1 V' - D2||` with `D` the diagonal eigenvalue matrices.
    pub conjugation_residual: f64,
    /// With all eigenvalues distinct the intertwiner is a phase permutation.
    pub is_phase_permutation: bool,
}

/// Relate two privileged representations of the same generator w.r.t. the
/// same state: find the unitary `V` and the real shift of `H`, and verify
/// `V D1 V' = D2`.
pub fn privileged_uniqueness_check(
    p1: &PrivilegedRep,
    p2: &PrivilegedRep,
    tol: &Tolerances,
) -> Result<UniquenessReport> {
    let s1 = build_generator(&p1.rep);
    let s2 = build_generator(&p2.rep);
    let gen_diff = (s2.mat() - s1.mat()).norm();
    if gen_diff > 1e-8 * (1.0 + s1.mat().norm()) {
        return Err(Error::InvalidInput(format!(
            "representations generate different semigroups (difference {gen_diff:.3e})"
        )));
    }
    let m = p1.rep.ops().len();
    if p2.rep.ops().len() != m {
        return Err(Error::InvalidInput(format!(
            "operator counts differ: {m} vs {}",
            p2.rep.ops().len()
        )));
    }
    let d = p1.rep.dim();
    if m == 0 {
        let shift = (p2.rep.hamiltonian().mat() - p1.rep.hamiltonian().mat()).trace().re
            / d as f64;
        return Ok(UniquenessReport {
            intertwiner: CMat::zeros(0, 0),
            hamiltonian_shift: shift,
            hamiltonian_residual: 0.0,
            expansion_residual: 0.0,
            unitarity_residual: 0.0,
            conjugation_residual: 0.0,
            is_phase_permutation: true,
        });
    }

    let basis = CMat::from_columns(
        &p1.rep
            .ops()
            .iter()
            .map(vectorize)
            .collect::<Vec<CVec>>(),
    );
    let mut v = CMat::zeros(m, m);
    let mut worst = 0.0f64;
    for k in 0..m {
        let target = vectorize(&p2.rep.ops()[k]);
        let (coeffs, residual) = lstsq(&basis, &target, true)?;
        worst = worst.max(residual / target.norm().max(1e-300));
        for j in 0..m {
            v[(k, j)] = coeffs[j];
        }
    }

    let u_res = unitarity_residual(&v);
    let d1 = CMat::from_diagonal(&CVec::from_iterator(m, p1.lambdas.iter().map(|&l| cr(l))));
    let d2 = CMat::from_diagonal(&CVec::from_iterator(m, p2.lambdas.iter().map(|&l| cr(l))));
    let conj_res = (&v * d1 * v.adjoint() - d2).norm();

    let hdiff = p2.rep.hamiltonian().mat() - p1.rep.hamiltonian().mat();
    let alpha = hdiff.trace().re / d as f64;
    let h_res = (&hdiff - eye(d) * cr(alpha)).norm();

    // phase permutation: one unimodular entry per row and column
    let mut is_perm = true;
    for k in 0..m {
        let row_big = (0..m)
            .filter(|&j| v[(k, j)].norm() > 1.0 - tol.lambda_cluster.sqrt())
            .count();
        let row_small = (0..m)
            .filter(|&j| v[(k, j)].norm() < tol.lambda_cluster.sqrt())
            .count();
        if row_big != 1 || row_small != m - 1 {
            is_perm = false;
        }
    }

    Ok(UniquenessReport {
        intertwiner: v,
        hamiltonian_shift: alpha,
        hamiltonian_residual: h_res,
        expansion_residual: worst,
        unitarity_residual: u_res,
        conjugation_residual: conj_res,
        is_phase_permutation: is_perm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gksl::special_rep_from_superoperator;
    use crate::instances;
    use crate::matrices::matrix_unit;
    use crate::qubit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tolerances() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn sigma_minus_i_trivia() {
        let tol = tolerances();
        let rho = DensityState::maximally_mixed(3);
        assert!((sigma_minus_i(&rho, &eye(3)).unwrap() - eye(3)).norm() < 1e-14);

        // rho = diag(nu, 1-nu), a = |e1><e2|  ->  (nu/(1-nu)) a
        let nu = 0.3;
        let rho = DensityState::from_probabilities(&[nu, 1.0 - nu]).unwrap();
        let a = matrix_unit(2, 0, 1);
        let out = sigma_minus_i(&rho, &a).unwrap();
        assert!((out.clone() - &a * cr(nu / (1.0 - nu))).norm() < 1e-13);
        // eigenvalue relation sigma_{-i}(a') = alpha^{-1} a'
        let out_dag = sigma_minus_i(&rho, &a.adjoint()).unwrap();
        assert!((out_dag - a.adjoint() * cr((1.0 - nu) / nu)).norm() < 1e-13);
        let _ = tol;
    }

    #[test]
    fn sigma_needs_faithful() {
        let rho = DensityState::from_probabilities(&[1.0, 0.0]).unwrap();
        assert!(sigma_minus_i(&rho, &eye(2)).is_err());
    }

    #[test]
    fn modular_group_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let rho = DensityState::random(&mut rng, 3, 0.05).unwrap();
        let a = CMat::from_fn(3, 3, |_, _| {
            C64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        });
        assert!((modular_group(&rho, 0.0, &a) - &a).norm() < 1e-13);
        let lhs = modular_group(&rho, 0.7, &modular_group(&rho, 0.4, &a));
        let rhs = modular_group(&rho, 1.1, &a);
        assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + a.norm()));
        // a commuting with rho is fixed
        let fixed = rho.power(2.0).unwrap();
        assert!((modular_group(&rho, 1.3, &fixed) - &fixed).norm() < 1e-12);
    }

    #[test]
    fn s_inner_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let rho = DensityState::random(&mut rng, 3, 0.05).unwrap();
        for s in [0.0, 0.3, 0.5, 1.0] {
            let one = s_inner(&rho, s, &eye(3), &eye(3)).unwrap();
            assert!((one - cr(1.0)).norm() < 1e-12);
        }
        // s = 0 reduces to tr(rho a' b)
        let a = CMat::from_fn(3, 3, |_, _| {
            C64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        });
        let b = CMat::from_fn(3, 3, |_, _| {
            C64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        });
        let lhs = s_inner(&rho, 0.0, &a, &b).unwrap();
        let rhs = (rho.matrix() * a.adjoint() * &b).trace();
        assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        // positive definiteness via the factorization rho^{s/2} a rho^{(1-s)/2}
        for s in [0.0, 0.25, 0.5, 0.75] {
            let ip = s_inner(&rho, s, &a, &a).unwrap();
            let f = rho.power(s / 2.0).unwrap() * &a * rho.power((1.0 - s) / 2.0).unwrap();
            assert!(ip.im.abs() < 1e-12);
            assert!(ip.re > 0.0);
            assert!((ip.re - f.norm() * f.norm()).abs() <= 1e-12 * (1.0 + ip.re));
        }
        assert!(s_inner(&rho, 1.2, &a, &b).is_err());
    }

    #[test]
    fn commutation_trivia() {
        let tol = tolerances();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        // rho = 1/d: always commutes
        let rep = instances::random_special_rep(&mut rng, 3, 2, &DensityState::maximally_mixed(3));
        let s = build_generator(&rep);
        let (ok, res) = commutes_with_modular(&s, &DensityState::maximally_mixed(3), &tol).unwrap();
        assert!(ok, "residual {res}");

        // shift with rho = 1/n: commutes
        let rep = instances::cyclic_shift_rep(4);
        let s = build_generator(&rep);
        let (ok, _) = commutes_with_modular(&s, &DensityState::maximally_mixed(4), &tol).unwrap();
        assert!(ok);

        // driven decay with its invariant state: does not commute
        let (rep, rho) = instances::driven_decay_qubit(1.0, 1.0);
        let s = build_generator(&rep);
        let (ok, res) = commutes_with_modular(&s, &rho, &tol).unwrap();
        assert!(!ok);
        assert!(res > 1e-3);
    }

    #[test]
    fn privileged_at_trace_state_is_trivial() {
        let tol = tolerances();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let rho = DensityState::maximally_mixed(3);
        let rep = instances::random_special_rep(&mut rng, 3, 2, &rho);
        let p = privileged_rep(&rep, &rho, &tol).unwrap();
        assert!(p.lambdas.iter().all(|&l| (l - 1.0).abs() < 1e-10));
        assert!(p.relation_residual(&rho) < 1e-10);
    }

    #[test]
    fn privileged_qubit_family_eigenvalues() {
        let tol = tolerances();
        let nu = 1.0 / 3.0;
        let params = qubit::QubitParams::consistent(
            nu,
            0.2,
            -0.4,
            C64::new(0.25, 0.1),
            0.7,
            C64::new(0.9, -0.2),
        );
        let rep = qubit::dual_qms_family(&params).unwrap();
        let rho = DensityState::from_probabilities(&[nu, 1.0 - nu]).unwrap();
        let p = privileged_rep(&rep, &rho, &tol).unwrap();
        let mut lams = p.lambdas.clone();
        lams.sort_by(f64::total_cmp);
        let mut expect = vec![1.0, nu / (1.0 - nu), (1.0 - nu) / nu];
        expect.sort_by(f64::total_cmp);
        assert_eq!(lams.len(), 3);
        for (a, b) in lams.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9, "{lams:?} vs {expect:?}");
        }
        // lambda_k = rho_j / rho_m wherever <e_j, L_k e_m> != 0
        for (l, &lam) in p.rep.ops().iter().zip(&p.lambdas) {
            for jj in 0..2 {
                for mm in 0..2 {
                    let amp = (rho.eigenvectors().column(jj).adjoint()
                        * l
                        * rho.eigenvectors().column(mm))[(0, 0)];
                    if amp.norm() > 1e-8 * l.norm() {
                        let ratio = rho.eigenvalues()[jj] / rho.eigenvalues()[mm];
                        assert!((lam - ratio).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn privileged_fails_off_family() {
        let tol = tolerances();
        let (rep, rho) = instances::driven_decay_qubit(1.0, 1.0);
        let s = build_generator(&rep);
        let special = special_rep_from_superoperator(&s, &rho, &tol).unwrap();
        match privileged_rep(&special, &rho, &tol) {
            Err(Error::NoPrivilegedRep(_)) => {}
            other => panic!("expected NoPrivilegedRep, got {other:?}"),
        }
    }

    #[test]
    fn uniqueness_identity_and_phase_permutation() {
        let tol = tolerances();
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let (rep, rho) = instances::modular_commuting_instance(&mut rng, 3);
        let s = build_generator(&rep);
        let special = special_rep_from_superoperator(&s, &rho, &tol).unwrap();
        let p1 = privileged_rep(&special, &rho, &tol).unwrap();

        // identical representation
        let rep_same = privileged_uniqueness_check(&p1, &p1, &tol).unwrap();
        assert!(rep_same.unitarity_residual < 1e-10);
        assert!(rep_same.conjugation_residual < 1e-9);
        assert!(rep_same.hamiltonian_shift.abs() < 1e-12);

        // phase-permuted copy
        let m = p1.rep.ops().len();
        let mut perm = CMat::zeros(m, m);
        for k in 0..m {
            perm[(k, (k + 1) % m)] = C64::new(0.0, 1.0); // i * cyclic permutation
        }
        let mixed = p1.rep.mixed(&perm).unwrap();
        let lambdas: Vec<f64> = (0..m).map(|k| p1.lambdas[(k + 1) % m]).collect();
        let p2 = PrivilegedRep {
            rep: mixed,
            lambdas,
            mixing: perm.clone(),
        };
        let report = privileged_uniqueness_check(&p1, &p2, &tol).unwrap();
        assert!(report.unitarity_residual < 1e-9);
        assert!(report.conjugation_residual < 1e-9);
        assert!(report.expansion_residual < 1e-9);
        // recovered intertwiner is the permutation we applied
        assert!((&report.intertwiner - &perm).norm() < 1e-9);
        if p1.lambdas.windows(2).all(|w| (w[0] - w[1]).abs() > 1e-6) {
            assert!(report.is_phase_permutation);
        }
    }
}
