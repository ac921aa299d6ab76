//! Detailed-balance certification.
//!
//! Quantum s-detailed balance requires `L - Ltilde^(s) = 2i[K, .]` for a
//! bounded self-adjoint `K`, the noncommutative counterpart of the
//! classical reversibility condition `pi_j q_jk = pi_k q_kj`. The solver
//! recovers the best traceless Hermitian `K` by least squares over the
//! superoperator norm; detailed balance holds exactly when the fit is
//! exact, and then `K` necessarily commutes with the invariant state.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gksl::{build_generator, compute_g, special_rep_from_superoperator, GkslRep, Superoperator};
use crate::matrices::{
    c, commutator_superop, cr, eye, lstsq, unitarity_residual, vectorize, CMat, CVec, HermMat, I,
};
use crate::modular::{privileged_rep, PrivilegedRep};
use crate::settings::Tolerances;
use crate::stationary::DensityState;

type RMat = DMatrix<f64>;
type RVec = DVector<f64>;

/// Traceless Hermitian basis of `M_d(C)`: the `d^2 - 1` generalized
/// Gell-Mann matrices (unnormalized).
pub fn traceless_hermitian_basis(d: usize) -> Vec<CMat> {
    let mut basis = Vec::with_capacity(d * d - 1);
    for i in 0..d {
        for j in (i + 1)..d {
            let mut x = CMat::zeros(d, d);
            x[(i, j)] = cr(1.0);
            x[(j, i)] = cr(1.0);
            basis.push(x);
            let mut y = CMat::zeros(d, d);
            y[(i, j)] = c(0.0, -1.0);
            y[(j, i)] = c(0.0, 1.0);
            basis.push(y);
        }
    }
    for k in 1..d {
        let mut h = CMat::zeros(d, d);
        for j in 0..k {
            h[(j, j)] = cr(1.0);
        }
        h[(k, k)] = cr(-(k as f64));
        basis.push(h);
    }
    basis
}

fn stack_real(m: &CMat) -> RVec {
    let n = m.len();
    let mut v = RVec::zeros(2 * n);
    for (idx, z) in m.iter().enumerate() {
        v[idx] = z.re;
        v[idx + n] = z.im;
    }
    v
}

/// Least-squares traceless Hermitian `K` minimizing
/// `||Delta - 2i [K, .]||_F` over superoperators.
///
/// The residual conveys the verdict: detailed balance fails exactly when no
/// commutator reproduces `Delta`.
pub fn solve_commutator_k(delta: &CMat, d: usize) -> Result<(HermMat, f64)> {
    if delta.nrows() != d * d || delta.ncols() != d * d {
        return Err(Error::ShapeMismatch(format!(
            "expected a {0}x{0} superoperator for dimension {d}",
            d * d
        )));
    }
    let basis = traceless_hermitian_basis(d);
    let cols = basis.len();
    let rows = 2 * d.pow(4);
    let mut design = RMat::zeros(rows, cols);
    for (j, b) in basis.iter().enumerate() {
        let ad = commutator_superop(b) * (I * cr(2.0));
        design.set_column(j, &stack_real(&ad));
    }
    let rhs = stack_real(delta);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let x = svd
        .solve(&rhs, smax * 1e-13)
        .map_err(|e| Error::Internal(format!("svd solve: {e}")))?;

    let mut k = CMat::zeros(d, d);
    for (j, b) in basis.iter().enumerate() {
        k += b * cr(x[j]);
    }
    let residual = (delta - commutator_superop(&k) * (I * cr(2.0))).norm();
    Ok((HermMat::symmetrized(k), residual))
}

/// Verdict and witnesses of the quantum s-detailed balance test.
#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub s: f64,
    pub holds: bool,
    pub k: Option<HermMat>,
    /// `||L - Ltilde - 2i[K, .]||_F / max(1, ||L||_F)`.
    pub k_residual: f64,
    pub k_commutes_rho: bool,
    pub k_commutation_residual: f64,
    /// Unitary intertwiner of the privileged criterion, when available.
    pub intertwiner: Option<CMat>,
    pub details: BTreeMap<String, f64>,
    pub failure_reason: Option<String>,
}

/// Run the s-detailed-balance test for a generator with faithful invariant
/// state `rho`.
pub fn detailed_balance_check(
    s_op: &Superoperator,
    rho: &DensityState,
    s: f64,
    tol: &Tolerances,
) -> Result<BalanceReport> {
    let dual = crate::duals::s_dual_generator(s_op, rho, s, tol)?;
    let mut details = BTreeMap::new();
    details.insert("dual_star".into(), dual.residuals["star"]);
    details.insert("dual_ccp_min_eig".into(), dual.residuals["ccp_min_eig"]);

    if !dual.is_qms {
        return Ok(BalanceReport {
            s,
            holds: false,
            k: None,
            k_residual: f64::INFINITY,
            k_commutes_rho: false,
            k_commutation_residual: f64::INFINITY,
            intertwiner: None,
            details,
            failure_reason: Some("s-dual is not a QMS generator".into()),
        });
    }

    let d = s_op.dim();
    let scale = 1.0_f64.max(s_op.mat().norm());
    let delta = s_op.mat() - dual.dual_gen.mat();
    let (k, abs_res) = solve_commutator_k(&delta, d)?;
    let rel_res = abs_res / scale;
    details.insert("commutator_residual_abs".into(), abs_res);

    let comm = (k.mat() * rho.matrix() - rho.matrix() * k.mat()).norm();
    let k_commutes = comm <= 1e-9 * 1.0_f64.max(k.norm());

    let mut intertwiner = None;
    if s == 0.0 {
        if let Ok(special) = special_rep_from_superoperator(s_op, rho, tol) {
            let h = special.hamiltonian().mat();
            let h0 = h - eye(d) * (h.trace() / cr(d as f64));
            let decomposition =
                (&delta - commutator_superop(&h0) * (I * cr(2.0))).norm() / scale;
            details.insert("l0_decomposition_residual".into(), decomposition);
            details.insert("h_minus_k_residual".into(), (&h0 - k.mat()).norm());
            if let Ok(p) = privileged_rep(&special, rho, tol) {
                let crit = db_unitary_criterion(&p)?;
                details.insert("intertwiner_expansion".into(), crit.expansion_residual);
                details.insert("intertwiner_unitarity".into(), crit.unitarity_residual);
                intertwiner = Some(crit.intertwiner);
            }
        }
    }

    let holds = rel_res <= tol.db && k_commutes;
    Ok(BalanceReport {
        s,
        holds,
        k: Some(k),
        k_residual: rel_res,
        k_commutes_rho: k_commutes,
        k_commutation_residual: comm,
        intertwiner,
        details,
        failure_reason: if holds {
            None
        } else {
            Some("generator difference is not a commutator".into())
        },
    })
}

/// The unitary criterion for 0-detailed balance on a privileged
/// representation: `lambda_k^{-1/2} L_k' = sum_j u[k, j] L_j` with `u`
/// unitary. Residuals convey failure.
#[derive(Debug, Clone)]
pub struct UnitaryCriterion {
    pub intertwiner: CMat,
    pub expansion_residual: f64,
    pub unitarity_residual: f64,
}

pub fn db_unitary_criterion(p: &PrivilegedRep) -> Result<UnitaryCriterion> {
    let m = p.rep.ops().len();
    if m == 0 {
        return Ok(UnitaryCriterion {
            intertwiner: CMat::zeros(0, 0),
            expansion_residual: 0.0,
            unitarity_residual: 0.0,
        });
    }
    let basis = CMat::from_columns(
        &p.rep
            .ops()
            .iter()
            .map(vectorize)
            .collect::<Vec<CVec>>(),
    );
    let mut u = CMat::zeros(m, m);
    let mut worst = 0.0_f64;
    for (k, (l, &lam)) in p.rep.ops().iter().zip(&p.lambdas).enumerate() {
        let target = vectorize(&(l.adjoint() * cr(lam.powf(-0.5))));
        let (coeffs, residual) = lstsq(&basis, &target, true)?;
        worst = worst.max(residual / target.norm().max(1e-300));
        for j in 0..m {
            u[(k, j)] = coeffs[j];
        }
    }
    let unit = unitarity_residual(&u);
    Ok(UnitaryCriterion {
        intertwiner: u,
        expansion_residual: worst,
        unitarity_residual: unit,
    })
}

/// Structural symmetric-detailed-balance test on a special representation:
/// solves `rho^{1/2} L_k' = sum_l u[k, l] L_l rho^{1/2}` for a unitary `u`
/// and extracts `K`, `c` from
/// `G rho^{1/2} = rho^{1/2} G' - (2iK + ic) rho^{1/2}`.
#[derive(Debug, Clone)]
pub struct SymmetricDbReport {
    pub holds: bool,
    pub mixing: CMat,
    pub mixing_expansion_residual: f64,
    pub mixing_unitarity: f64,
    pub k: HermMat,
    pub c: f64,
    pub k_hermiticity_residual: f64,
    pub k_commutes_rho: bool,
    pub k_commutation_residual: f64,
    pub g_relation_residual: f64,
    /// Agreement with the superoperator-level s = 1/2 commutator test.
    pub cross_check_agrees: bool,
}

pub fn symmetric_db_structure(
    rep: &GkslRep,
    rho: &DensityState,
    tol: &Tolerances,
) -> Result<SymmetricDbReport> {
    let d = rep.dim();
    let s_op = build_generator(rep);
    let g = compute_g(rep);
    let half = rho.power(0.5)?;
    let half_inv = rho.power(-0.5)?;

    // (2iK + ic) rho^{1/2} = rho^{1/2} G' - G rho^{1/2}
    let m = &half * g.mat().adjoint() - g.mat() * &half;
    let n = &m * &half_inv;
    let c_est = n.trace().im / d as f64;
    let k_raw = (&n - eye(d) * c(0.0, c_est)) * c(0.0, -0.5);
    let k_herm_res = (&k_raw - k_raw.adjoint()).norm() / 1.0_f64.max(k_raw.norm());
    let k = HermMat::symmetrized(k_raw);
    let g_rel = (g.mat() * &half - &half * g.mat().adjoint()
        + (k.mat() * c(0.0, 2.0) + eye(d) * c(0.0, c_est)) * &half)
        .norm()
        / 1.0_f64.max(g.mat().norm());

    let mops = rep.ops().len();
    let (mixing, expansion, unit_res) = if mops == 0 {
        (CMat::zeros(0, 0), 0.0, 0.0)
    } else {
        let basis = CMat::from_columns(
            &rep.ops()
                .iter()
                .map(|l| vectorize(&(l * &half)))
                .collect::<Vec<CVec>>(),
        );
        let mut u = CMat::zeros(mops, mops);
        let mut worst = 0.0_f64;
        for (kk, l) in rep.ops().iter().enumerate() {
            let target = vectorize(&(&half * l.adjoint()));
            let (coeffs, residual) = lstsq(&basis, &target, true)?;
            worst = worst.max(residual / target.norm().max(1e-300));
            for j in 0..mops {
                u[(kk, j)] = coeffs[j];
            }
        }
        (u.clone(), worst, unitarity_residual(&u))
    };

    let comm = (k.mat() * rho.matrix() - rho.matrix() * k.mat()).norm();
    let k_commutes = comm <= 1e-9 * 1.0_f64.max(k.norm());

    let holds = k_herm_res <= tol.db && expansion <= tol.db && unit_res <= tol.unitary;
    let cross = detailed_balance_check(&s_op, rho, 0.5, tol)?;

    Ok(SymmetricDbReport {
        holds,
        mixing,
        mixing_expansion_residual: expansion,
        mixing_unitarity: unit_res,
        k,
        c: c_est,
        k_hermiticity_residual: k_herm_res,
        k_commutes_rho: k_commutes,
        k_commutation_residual: comm,
        g_relation_residual: g_rel,
        cross_check_agrees: cross.holds == holds,
    })
}

/// Classical reversibility `pi_j q_jk = pi_k q_kj` for a transition rate
/// matrix `Q` (zero row sums, nonnegative off-diagonal) and a strictly
/// positive probability vector `pi`.
pub fn classical_reversibility(q: &RMat, pi: &RVec, tol: &Tolerances) -> Result<(bool, f64)> {
    let d = q.nrows();
    if q.ncols() != d || pi.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "rate matrix {}x{} with pi of length {}",
            q.nrows(),
            q.ncols(),
            pi.len()
        )));
    }
    let rate_scale = q.iter().cloned().fold(0.0_f64, |a, b| a.max(b.abs())).max(1e-300);
    for j in 0..d {
        let row_sum: f64 = (0..d).map(|k| q[(j, k)]).sum();
        if row_sum.abs() > 1e-10 * rate_scale {
            return Err(Error::InvalidInput(format!(
                "row {j} of the rate matrix sums to {row_sum:.3e}"
            )));
        }
        for k in 0..d {
            if j != k && q[(j, k)] < -1e-14 {
                return Err(Error::InvalidInput(format!(
                    "negative off-diagonal rate q[{j},{k}] = {}",
                    q[(j, k)]
                )));
            }
        }
    }
    let pi_sum: f64 = pi.iter().sum();
    if (pi_sum - 1.0).abs() > 1e-10 || pi.iter().any(|&p| p <= 0.0) {
        return Err(Error::InvalidInput(
            "pi must be strictly positive and sum to 1".into(),
        ));
    }
    let mut violation = 0.0_f64;
    for j in 0..d {
        for k in 0..d {
            violation = violation.max((pi[j] * q[(j, k)] - pi[k] * q[(k, j)]).abs());
        }
    }
    Ok((violation <= tol.invariance * (1.0 + rate_scale), violation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::matrices::matrix_unit;
    use crate::qubit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn commutator_solver_trivia() {
        let (k, r) = solve_commutator_k(&CMat::zeros(4, 4), 2).unwrap();
        assert!(k.norm() < 1e-12 && r < 1e-12);

        let s3 = qubit::pauli(3);
        let delta = commutator_superop(&s3) * (I * cr(2.0));
        let (k, r) = solve_commutator_k(&delta, 2).unwrap();
        assert!((k.mat() - &s3).norm() <= 1e-12);
        assert!(r <= 1e-12);
    }

    #[test]
    fn shift_balance_fails_for_n_at_least_3() {
        let t = tol();
        for n in [3usize, 4, 5] {
            let rep = instances::cyclic_shift_rep(n);
            let s = build_generator(&rep);
            let rho = DensityState::maximally_mixed(n);
            let dual = crate::duals::s_dual_generator(&s, &rho, 0.0, &t).unwrap();
            assert!(dual.is_qms);
            // (L - Ltilde)(E22) = E11 - E33
            let delta = s.mat() - dual.dual_gen.mat();
            let e22 = matrix_unit(n, 1, 1);
            let image = crate::matrices::devectorize(&(&delta * vectorize(&e22))).unwrap();
            let expect = matrix_unit(n, 0, 0) - matrix_unit(n, 2, 2);
            assert!((image - expect).norm() <= 1e-13);

            let report = detailed_balance_check(&s, &rho, 0.0, &t).unwrap();
            assert!(!report.holds);
            assert!(report.k_residual > 1e-3);
        }
    }

    #[test]
    fn shift_n2_balances_for_all_s() {
        let t = tol();
        let rep = instances::cyclic_shift_rep(2);
        let s = build_generator(&rep);
        let rho = DensityState::maximally_mixed(2);
        for sv in [0.0, 0.3, 0.5, 0.7] {
            let report = detailed_balance_check(&s, &rho, sv, &t).unwrap();
            assert!(report.holds, "s = {sv}");
            assert!(report.k_residual <= 1e-10);
            assert!(report.k_commutes_rho);
        }
    }

    #[test]
    fn family_balances_with_k_equal_h() {
        let t = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for k in 0..10 {
            let p = qubit::QubitParams::sample(&mut rng, k % 4 == 3);
            let rep = qubit::dual_qms_family(&p).unwrap();
            let rho = DensityState::from_probabilities(&[p.nu, 1.0 - p.nu]).unwrap();
            let s = build_generator(&rep);
            let report = detailed_balance_check(&s, &rho, 0.0, &t).unwrap();
            assert!(report.holds, "draw {k}: {:?}", report.failure_reason);
            // K equals H up to a real scalar
            let h = rep.hamiltonian().mat();
            let h0 = h - eye(2) * (h.trace() / cr(2.0));
            let kk = report.k.as_ref().unwrap();
            assert!((&h0 - kk.mat()).norm() <= 1e-9, "draw {k}");
            assert!(report.details["intertwiner_unitarity"] <= 1e-8);
            assert!(report.details["intertwiner_expansion"] <= 1e-8);
        }
    }

    #[test]
    fn unitary_criterion_matches_closed_form() {
        // privileged family rep in natural order: (eta L, lambda s+, mu s-)
        let nu = 0.3;
        let eta = c(0.4, 0.6);
        let mu = c(0.9, -0.3);
        let lam_mod = mu.norm() * (nu / (1.0_f64 - nu)).sqrt();
        let lambda = c(0.0, 0.8).exp() * cr(lam_mod);
        let big_l = eye(2) * cr(-(2.0 * nu - 1.0)) + qubit::pauli(3);
        let ops = vec![
            &big_l * eta,
            qubit::sigma_plus() * lambda,
            qubit::sigma_minus() * mu,
        ];
        let rep = GkslRep::new(HermMat::zeros(2), ops).unwrap();
        let p = PrivilegedRep {
            rep,
            lambdas: vec![1.0, nu / (1.0 - nu), (1.0 - nu) / nu],
            mixing: eye(3),
        };
        let crit = db_unitary_criterion(&p).unwrap();
        assert!(crit.expansion_residual <= 1e-12);
        assert!(crit.unitarity_residual <= 1e-10);
        let u = &crit.intertwiner;
        // row 1: conj(eta)/eta; rows 2/3 anti-diagonal
        assert!((u[(0, 0)] - eta.conj() / eta).norm() <= 1e-12);
        let ratio = ((1.0 - nu) / nu).sqrt();
        assert!((u[(1, 2)] - lambda.conj() / mu * cr(ratio)).norm() <= 1e-12);
        assert!((u[(2, 1)] - mu.conj() / lambda * cr(1.0 / ratio)).norm() <= 1e-12);
        assert!(u[(0, 1)].norm() <= 1e-12 && u[(1, 0)].norm() <= 1e-12);
        assert!(u[(1, 1)].norm() <= 1e-12 && u[(2, 2)].norm() <= 1e-12);
    }

    #[test]
    fn shift_unitary_criterion_fails() {
        // lambda_1 = 1, L' = S' not a phase multiple of S for n >= 3
        let n = 4;
        let rep = instances::cyclic_shift_rep(n);
        let p = PrivilegedRep {
            rep,
            lambdas: vec![1.0],
            mixing: eye(1),
        };
        let crit = db_unitary_criterion(&p).unwrap();
        assert!(crit.expansion_residual > 0.5);
    }

    #[test]
    fn symmetric_db_on_family_and_self_dual() {
        let t = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let p = qubit::QubitParams::sample(&mut rng, false);
        let rep = qubit::dual_qms_family(&p).unwrap();
        let rho = DensityState::from_probabilities(&[p.nu, 1.0 - p.nu]).unwrap();
        let report = symmetric_db_structure(&rep, &rho, &t).unwrap();
        assert!(report.holds);
        assert!(report.cross_check_agrees);
        assert!(report.k_commutes_rho);

        // self-dual instance at rho = 1/2: shift n = 2, K = 0
        let rep = instances::cyclic_shift_rep(2);
        let rho = DensityState::maximally_mixed(2);
        let report = symmetric_db_structure(&rep, &rho, &t).unwrap();
        assert!(report.holds);
        assert!(report.k.norm() <= 1e-10);
    }

    #[test]
    fn verdict_agrees_with_unitary_criterion() {
        // on every instance with a privileged representation, the s = 0
        // verdict coincides with (unitary criterion holds AND H - K scalar)
        let t = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let mut cases: Vec<(crate::gksl::Superoperator, DensityState)> = Vec::new();
        for n in [2usize, 3, 4] {
            cases.push((
                build_generator(&instances::cyclic_shift_rep(n)),
                DensityState::maximally_mixed(n),
            ));
        }
        for k in 0..6 {
            let p = qubit::QubitParams::sample(&mut rng, k % 3 == 0);
            let rep = qubit::dual_qms_family(&p).unwrap();
            cases.push((
                build_generator(&rep),
                DensityState::from_probabilities(&[p.nu, 1.0 - p.nu]).unwrap(),
            ));
        }
        for d in [2usize, 3] {
            let (rep, rho) = instances::modular_commuting_instance(&mut rng, d);
            cases.push((build_generator(&rep), rho));
        }
        for (s, rho) in cases {
            let special = special_rep_from_superoperator(&s, &rho, &t).unwrap();
            let p = privileged_rep(&special, &rho, &t).unwrap();
            let crit = db_unitary_criterion(&p).unwrap();
            let h = special.hamiltonian().mat();
            let d = special.dim();
            let report = detailed_balance_check(&s, &rho, 0.0, &t).unwrap();
            let k_scalar = report
                .k
                .as_ref()
                .map(|k| {
                    let h0 = h - eye(d) * (h.trace() / cr(d as f64));
                    (&h0 - k.mat()).norm() <= 1e-8 * (1.0 + h0.norm())
                })
                .unwrap_or(false);
            let structural =
                crit.expansion_residual <= t.db && crit.unitarity_residual <= t.unitary && k_scalar;
            assert_eq!(
                report.holds, structural,
                "verdict {} vs structural criterion {} (expansion {:.3e}, unitarity {:.3e})",
                report.holds, structural, crit.expansion_residual, crit.unitarity_residual
            );
        }
    }

    #[test]
    fn classical_reversibility_cases() {
        let t = tol();
        // symmetric rates, uniform pi
        let q = RMat::from_row_slice(3, 3, &[-2.0, 1.0, 1.0, 1.0, -2.0, 1.0, 1.0, 1.0, -2.0]);
        let pi = RVec::from_column_slice(&[1.0 / 3.0; 3]);
        let (ok, v) = classical_reversibility(&q, &pi, &t).unwrap();
        assert!(ok && v <= 1e-15);

        // any 2-state chain with pi Q = 0 is reversible
        let (a, b) = (0.7, 1.9);
        let q = RMat::from_row_slice(2, 2, &[-a, a, b, -b]);
        let pi = RVec::from_column_slice(&[b / (a + b), a / (a + b)]);
        let (ok, _) = classical_reversibility(&q, &pi, &t).unwrap();
        assert!(ok);

        // asymmetric 3-cycle with uniform pi: violation 1/3
        let q = RMat::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 1.0, 0.0, -1.0]);
        let pi = RVec::from_column_slice(&[1.0 / 3.0; 3]);
        let (ok, v) = classical_reversibility(&q, &pi, &t).unwrap();
        assert!(!ok);
        assert!((v - 1.0 / 3.0).abs() <= 1e-14);

        // invalid inputs
        let bad = RMat::from_row_slice(2, 2, &[-1.0, 2.0, 1.0, -1.0]);
        let pi2 = RVec::from_column_slice(&[0.5, 0.5]);
        assert!(classical_reversibility(&bad, &pi2, &t).is_err());
    }
}
