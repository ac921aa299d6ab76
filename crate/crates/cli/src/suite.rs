//! Built-in example suite behind `qms examples`: runs the named instances
//! and asserts their reference values.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use qms_core::balance::{classical_reversibility, detailed_balance_check, symmetric_db_structure};
use qms_core::duals::{dual_is_qms, s_dual_generator, symmetric_dual};
use qms_core::gksl::{build_generator, build_predual, special_rep_from_superoperator};
use qms_core::instances;
use qms_core::matrices::{cr, devectorize, eye, matrix_unit, sandwich_superop, vectorize};
use qms_core::modular::{commutes_with_modular, privileged_rep};
use qms_core::qubit::{self, QubitParams};
use qms_core::stationary::invariant_states;
use qms_core::{DensityState, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckResult>,
}

type Check = (&'static str, fn(&Tolerances, u64) -> Result<(), String>);

fn fail(msg: impl Into<String>) -> Result<(), String> {
    Err(msg.into())
}

fn shift_n2_balance(t: &Tolerances, _seed: u64) -> Result<(), String> {
    let rep = instances::cyclic_shift_rep(2);
    let s = build_generator(&rep);
    let rho = DensityState::maximally_mixed(2);
    for sv in [0.0, 0.3, 0.5, 0.7] {
        let report = detailed_balance_check(&s, &rho, sv, t).map_err(|e| e.to_string())?;
        if !report.holds || report.k_residual > 1e-10 {
            return fail(format!(
                "detailed balance must hold at s={sv} (residual {:.3e})",
                report.k_residual
            ));
        }
    }
    Ok(())
}

fn shift_dual_form(t: &Tolerances, _seed: u64) -> Result<(), String> {
    for n in 3..=6 {
        let rep = instances::cyclic_shift_rep(n);
        let s = build_generator(&rep);
        let rho = DensityState::maximally_mixed(n);
        let dual = s_dual_generator(&s, &rho, 0.0, t).map_err(|e| e.to_string())?;
        let shift = instances::cyclic_shift_matrix(n);
        let expect = sandwich_superop(&shift, &shift.adjoint()) - eye(n * n);
        let diff = (dual.dual_gen.mat() - &expect).norm();
        if diff > 1e-12 {
            return fail(format!("n={n}: dual is not a -> S a S' - a ({diff:.3e})"));
        }
        if !dual.is_qms {
            return fail(format!("n={n}: dual must be a QMS"));
        }
        let delta = s.mat() - dual.dual_gen.mat();
        let image = devectorize(&(&delta * vectorize(&matrix_unit(n, 1, 1))))
            .map_err(|e| e.to_string())?;
        let expect_img = matrix_unit(n, 0, 0) - matrix_unit(n, 2, 2);
        if (image - expect_img).norm() > 1e-13 {
            return fail(format!("n={n}: (L - Ltilde)(E22) != E11 - E33"));
        }
        let report = detailed_balance_check(&s, &rho, 0.0, t).map_err(|e| e.to_string())?;
        if report.holds || report.k_residual <= 1e-3 {
            return fail(format!("n={n}: 0-detailed balance must fail"));
        }
    }
    Ok(())
}

fn driven_decay_state(t: &Tolerances, _seed: u64) -> Result<(), String> {
    for (omega, mu) in [(1.0, 1.0), (0.7, 1.3)] {
        let (rep, closed_form) = instances::driven_decay_qubit(omega, mu);
        let s = build_generator(&rep);
        let inv = invariant_states(&s, t).map_err(|e| e.to_string())?;
        let Some(found) = inv.states.first() else {
            return fail("no invariant state found");
        };
        let diff = (found.matrix() - closed_form.matrix()).norm();
        if diff > 1e-12 {
            return fail(format!(
                "omega={omega}, mu={mu}: invariant state off by {diff:.3e}"
            ));
        }
        let (commutes, _) = commutes_with_modular(&s, &closed_form, t).map_err(|e| e.to_string())?;
        let (qms0, _) = dual_is_qms(&s, &closed_form, 0.0, t).map_err(|e| e.to_string())?;
        let (qms_half, _) = dual_is_qms(&s, &closed_form, 0.5, t).map_err(|e| e.to_string())?;
        if commutes || qms0 || !qms_half {
            return fail(format!(
                "omega={omega}, mu={mu}: expected (commutes, qms0, qms_half) = (false, false, true), got ({commutes}, {qms0}, {qms_half})"
            ));
        }
    }
    Ok(())
}

fn skewed_hamiltonian(t: &Tolerances, _seed: u64) -> Result<(), String> {
    for branch in [true, false] {
        let tag = if branch { "+" } else { "-" };
        let (rep, rho, (r, s_val)) = instances::skewed_hamiltonian_qubit(1.0, 1.0 / 3.0, branch);
        let res = (build_predual(&rep).mat() * vectorize(rho.matrix())).norm();
        if res > 1e-10 {
            return fail(format!("branch {tag}: invariance residual {res:.3e}"));
        }
        let identity = 2.0 / 3.0 - (r - s_val).powi(2) / (r * r + s_val * s_val);
        if identity.abs() > 1e-12 {
            return fail(format!("branch {tag}: 2nu identity residual {identity:.3e}"));
        }
        let s = build_generator(&rep);
        let (qms0, _) = dual_is_qms(&s, &rho, 0.0, t).map_err(|e| e.to_string())?;
        if qms0 {
            return fail(format!("branch {tag}: 0-dual must not be a QMS"));
        }
        let sym = symmetric_dual(&s, &rho, t).map_err(|e| e.to_string())?;
        if !sym.dual.is_qms {
            return fail(format!("branch {tag}: symmetric dual must be a QMS"));
        }
        if sym.g_relation_residual > 1e-9 || sym.kraus_relation_residual > 1e-9 {
            return fail(format!(
                "branch {tag}: symmetric dual structure residuals {:.3e} / {:.3e}",
                sym.g_relation_residual, sym.kraus_relation_residual
            ));
        }
    }
    Ok(())
}

fn symmetric_average(t: &Tolerances, _seed: u64) -> Result<(), String> {
    for branch in [true, false] {
        let tag = if branch { "+" } else { "-" };
        let (avg, rho) = instances::symmetric_average(1.0, 1.0 / 3.0, branch, t)
            .map_err(|e| e.to_string())?;
        let rep = special_rep_from_superoperator(&avg, &rho, t).map_err(|e| e.to_string())?;
        let sym = symmetric_db_structure(&rep, &rho, t).map_err(|e| e.to_string())?;
        if !sym.holds || !sym.cross_check_agrees {
            return fail(format!("branch {tag}: symmetric detailed balance must hold"));
        }
        let k_oracle = instances::symmetric_average_hamiltonian_oracle(1.0, 1.0 / 3.0, branch)
            .map_err(|e| e.to_string())?;
        let diff = (rep.hamiltonian().mat() - k_oracle.mat()).norm();
        if diff > 1e-9 {
            return fail(format!(
                "branch {tag}: recovered Hamiltonian differs from the independent construction by {diff:.3e}"
            ));
        }
        if branch {
            // the Hamiltonian must not commute with the state here
            let k = rep.hamiltonian().mat();
            let comm = (k * rho.matrix() - rho.matrix() * k).norm();
            if comm < 0.1 {
                return fail(format!(
                    "branch {tag}: Hamiltonian unexpectedly commutes with the state ({comm:.3e})"
                ));
            }
        }
    }
    Ok(())
}

fn family_spot_checks(t: &Tolerances, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params: Vec<QubitParams> = vec![
        QubitParams::consistent(1.0 / 3.0, 0.0, 0.0, cr(1.0), 0.0, cr(0.0)),
        QubitParams::consistent(
            1.0 / 3.0,
            0.3,
            -0.2,
            qms_core::matrices::c(0.7, 0.4),
            1.1,
            qms_core::matrices::c(0.5, -0.3),
        ),
    ];
    for k in 0..25 {
        params.push(QubitParams::sample(&mut rng, k % 4 == 3));
    }
    for (i, p) in params.iter().enumerate() {
        let rep = qubit::dual_qms_family(p).map_err(|e| e.to_string())?;
        let rho = DensityState::from_probabilities(&[p.nu, 1.0 - p.nu])
            .map_err(|e| e.to_string())?;
        let inv = (build_predual(&rep).mat() * vectorize(rho.matrix())).norm();
        if inv > 1e-10 {
            return fail(format!("draw {i}: invariance residual {inv:.3e}"));
        }
        let s = build_generator(&rep);
        let special = special_rep_from_superoperator(&s, &rho, t).map_err(|e| e.to_string())?;
        let priv_rep = privileged_rep(&special, &rho, t).map_err(|e| e.to_string())?;
        let mut lams = priv_rep.lambdas.clone();
        lams.sort_by(f64::total_cmp);
        let mut expect = vec![p.nu / (1.0 - p.nu), (1.0 - p.nu) / p.nu];
        if p.eta.norm() > 0.0 {
            expect.push(1.0);
        }
        expect.sort_by(f64::total_cmp);
        if lams.len() != expect.len()
            || lams
                .iter()
                .zip(&expect)
                .any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs()))
        {
            return fail(format!("draw {i}: eigenvalues {lams:?} != {expect:?}"));
        }
        let report = detailed_balance_check(&s, &rho, 0.0, t).map_err(|e| e.to_string())?;
        if !report.holds {
            return fail(format!("draw {i}: 0-detailed balance must hold"));
        }
        let h = rep.hamiltonian().mat();
        let h0 = h - eye(2) * (h.trace() / cr(2.0));
        let k = report.k.as_ref().expect("K present when balance holds");
        if (&h0 - k.mat()).norm() > 1e-9 {
            return fail(format!("draw {i}: K != H up to a scalar"));
        }
    }
    Ok(())
}

fn classical_examples(t: &Tolerances, _seed: u64) -> Result<(), String> {
    for ia in 0..20 {
        for ib in 0..20 {
            let a = 0.1 + 0.15 * ia as f64;
            let b = 0.1 + 0.15 * ib as f64;
            let q = DMatrix::from_row_slice(2, 2, &[-a, a, b, -b]);
            let pi = DVector::from_column_slice(&[b / (a + b), a / (a + b)]);
            let (ok, v) = classical_reversibility(&q, &pi, t).map_err(|e| e.to_string())?;
            if !ok {
                return fail(format!(
                    "2-state chain (a={a:.2}, b={b:.2}) flagged irreversible (violation {v:.3e})"
                ));
            }
        }
    }
    let q = DMatrix::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 1.0, 0.0, -1.0]);
    let pi = DVector::from_column_slice(&[1.0 / 3.0; 3]);
    let (ok, v) = classical_reversibility(&q, &pi, t).map_err(|e| e.to_string())?;
    if ok || (v - 1.0 / 3.0).abs() > 1e-14 {
        return fail(format!(
            "3-cycle must be irreversible with violation 1/3, got ok={ok} violation={v}"
        ));
    }
    Ok(())
}

const CHECKS: &[Check] = &[
    ("shift-n2-balance", shift_n2_balance),
    ("shift-dual-form", shift_dual_form),
    ("driven-decay-state", driven_decay_state),
    ("skewed-hamiltonian", skewed_hamiltonian),
    ("symmetric-average", symmetric_average),
    ("family-spot-checks", family_spot_checks),
    ("classical-reversibility", classical_examples),
];

/// Run the suite, optionally filtering check names by substring.
pub fn run(only: Option<&str>, seed: u64, tol: &Tolerances) -> SuiteReport {
    let mut checks = Vec::new();
    for (name, f) in CHECKS {
        if let Some(filter) = only {
            if !name.contains(filter) {
                continue;
            }
        }
        let outcome = f(tol, seed);
        let passed = outcome.is_ok();
        eprintln!(
            "example {name}: {}",
            if passed { "ok" } else { "MISMATCH" }
        );
        if let Err(detail) = &outcome {
            eprintln!("  {detail}");
        }
        checks.push(CheckResult {
            name: name.to_string(),
            passed,
            detail: outcome.err(),
        });
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    SuiteReport {
        total: checks.len(),
        passed,
        failed: checks.len() - passed,
        checks,
    }
}
