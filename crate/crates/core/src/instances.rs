//! Named generator instances and random instance samplers.
//!
//! The named instances exercise every qualitative regime: duals that are
//! QMSs with and without detailed balance, duals that fail to be QMSs, and
//! symmetric-detailed-balance generators whose Hamiltonian does not commute
//! with the invariant state.

use rand::Rng;

use crate::duals;
use crate::error::Result;
use crate::gksl::{build_generator, GkslRep, Superoperator, SuperopKind};
use crate::matrices::{c, cr, eye, matrix_unit, CMat, HermMat, C64};
use crate::qubit::{self, pauli};
use crate::settings::Tolerances;
use crate::stationary::{invariant_states, DensityState};

/// Cyclic shift `S e_j = e_{j+1 mod n}`.
pub fn cyclic_shift_matrix(n: usize) -> CMat {
    let mut s = CMat::zeros(n, n);
    for j in 0..n {
        s[((j + 1) % n, j)] = cr(1.0);
    }
    s
}

/// The shift semigroup `L(a) = S' a S - a` on `l^2(Z_n)`: `H = 0`,
/// `L_1 = S`. The trace state is faithful invariant; the 0-dual is the QMS
/// generated by `a -> S a S' - a`, and detailed balance fails for `n >= 3`.
pub fn cyclic_shift_rep(n: usize) -> GkslRep {
    GkslRep::new(HermMat::zeros(n), vec![cyclic_shift_matrix(n)]).expect("valid representation")
}

/// Driven decaying qubit `H = (omega/2) sigma_1`, `L = mu |e_2><e_1|`,
/// with its closed-form faithful invariant state. The Hamiltonian of every
/// special representation fails to commute with the state, so the 0-dual
/// is not a QMS.
pub fn driven_decay_qubit(omega: f64, mu: f64) -> (GkslRep, DensityState) {
    let h = HermMat::symmetrized(pauli(1) * cr(omega / 2.0));
    let l = matrix_unit(2, 1, 0) * cr(mu);
    let rep = GkslRep::new(h, vec![l]).expect("valid representation");
    let den = 2.0 * omega * omega + mu.powi(4);
    let rho = CMat::from_row_slice(
        2,
        2,
        &[
            cr(omega * omega / den),
            c(0.0, -mu * mu * omega / den),
            c(0.0, mu * mu * omega / den),
            cr((omega * omega + mu.powi(4)) / den),
        ],
    );
    let state = DensityState::new(rho, &Tolerances::default()).expect("closed-form state");
    (rep, state)
}

/// Qubit generator with `H = omega sigma_1` not commuting with the
/// invariant state `rho = diag(nu, 1 - nu)`:
/// `L = (1 - 2 nu) + i r sigma_1 + s sigma_2 + sigma_3` with `(r, s)`
/// solving the invariance equations
/// `(2 - w^2) r + w (s - omega) = 0` and `w (r^2 + s^2) + 2 r s = 0`
/// (`w = 2 nu - 1`), in closed form with `g = 2 sqrt(nu (1 - nu))`:
/// positive branch `r = omega (1-2nu) / (g (1-g))`, `s = omega (1+g) / (g (1-g))`;
/// negative branch `r = -omega (1-2nu) / (g (1+g))`, `s = -omega (1-g) / (g (1+g))`.
///
/// The representation is special w.r.t. `rho`, the state is exactly
/// invariant, `2 nu = (r - s)^2 / (r^2 + s^2)` holds, the 0-dual is not a
/// QMS, and the symmetric dual always is.
pub fn skewed_hamiltonian_qubit(
    omega: f64,
    nu: f64,
    positive_branch: bool,
) -> (GkslRep, DensityState, (f64, f64)) {
    assert!(
        nu > 0.0 && nu < 1.0 && (nu - 0.5).abs() > 1e-9,
        "nu must lie in (0,1) away from 1/2"
    );
    let g = 2.0 * (nu * (1.0 - nu)).sqrt();
    let (r, s) = if positive_branch {
        (
            omega * (1.0 - 2.0 * nu) / (g * (1.0 - g)),
            omega * (1.0 + g) / (g * (1.0 - g)),
        )
    } else {
        (
            -omega * (1.0 - 2.0 * nu) / (g * (1.0 + g)),
            -omega * (1.0 - g) / (g * (1.0 + g)),
        )
    };
    let h = HermMat::symmetrized(pauli(1) * cr(omega));
    let l = eye(2) * cr(1.0 - 2.0 * nu) + pauli(1) * c(0.0, r) + pauli(2) * cr(s) + pauli(3);
    let rep = GkslRep::new(h, vec![l]).expect("valid representation");
    let state = DensityState::from_probabilities(&[nu, 1.0 - nu]).expect("diagonal state");
    (rep, state, (r, s))
}

/// The average `K = (L + L')/2` of a skewed-Hamiltonian generator with its
/// symmetric dual: a generator satisfying symmetric detailed balance whose
/// special-representation Hamiltonian does not commute with the state.
pub fn symmetric_average(
    omega: f64,
    nu: f64,
    positive_branch: bool,
    tol: &Tolerances,
) -> Result<(Superoperator, DensityState)> {
    let (rep, rho, _) = skewed_hamiltonian_qubit(omega, nu, positive_branch);
    let s = build_generator(&rep);
    let dual = duals::s_dual_generator(&s, &rho, 0.5, tol)?;
    let avg = (s.mat() + dual.dual_gen.mat()).scale(0.5);
    Ok((Superoperator::new(avg, SuperopKind::Generator, tol)?, rho))
}

/// Independent route to the Hamiltonian of the averaged generator: with
/// `G' = rho^{1/2} G* rho^{-1/2}` a valid choice for the symmetric dual
/// (unitality follows from invariance), the averaged representation has
/// Hamiltonian `K = (H + H')/2`, `H' = (G'* - G')/(2i)`. Returned traceless.
pub fn symmetric_average_hamiltonian_oracle(
    omega: f64,
    nu: f64,
    positive_branch: bool,
) -> Result<HermMat> {
    let (rep, rho, _) = skewed_hamiltonian_qubit(omega, nu, positive_branch);
    let g = crate::gksl::compute_g(&rep);
    let half = rho.power(0.5)?;
    let half_inv = rho.power(-0.5)?;
    let g_prime = &half * g.mat().adjoint() * &half_inv;
    let h_prime = (g_prime.adjoint() - &g_prime) * c(0.0, -0.5);
    let k = (rep.hamiltonian().mat() + h_prime).scale(0.5);
    let k = &k - eye(2) * (k.trace() / cr(2.0));
    Ok(HermMat::symmetrized(k))
}

/// Random operators gauge-shifted to `tr(rho L_k) = 0`: a special
/// representation w.r.t. `rho` (which need not be invariant).
pub fn random_special_rep(
    rng: &mut impl Rng,
    d: usize,
    m: usize,
    rho: &DensityState,
) -> GkslRep {
    let mut h = random_cmat(rng, d);
    h = (&h + h.adjoint()).scale(0.5);
    let tr = h.trace();
    h -= eye(d) * (tr / cr(d as f64));
    let ops: Vec<CMat> = (0..m)
        .map(|_| {
            let l = random_cmat(rng, d);
            let shift = (rho.matrix() * &l).trace();
            l - eye(d) * shift
        })
        .collect();
    GkslRep::new(HermMat::symmetrized(h), ops).expect("valid representation")
}

/// A random generator together with a faithful invariant state, found by
/// resampling until the stationary search yields a faithful center.
pub fn random_generator_with_invariant(
    rng: &mut impl Rng,
    d: usize,
) -> (GkslRep, DensityState) {
    let tol = Tolerances::default();
    for _ in 0..300 {
        let h = HermMat::symmetrized(random_cmat(rng, d));
        let ops = vec![random_cmat(rng, d), random_cmat(rng, d)];
        let rep = GkslRep::new(h, ops).expect("valid representation");
        let s = build_generator(&rep);
        let Ok(inv) = invariant_states(&s, &tol) else {
            continue;
        };
        if let Some(center) = inv.states.first() {
            if center.min_eig() >= 1e-2 / d as f64 {
                return (rep, center.clone());
            }
        }
    }
    unreachable!("random GKSL generators generically have a faithful invariant state")
}

/// A random generator that commutes with the modular automorphism of its
/// (faithful, generically non-uniform) invariant state: Lindblad operators
/// are eigenoperators of `rho (.) rho^{-1}` in matched raising/lowering
/// pairs with weights balanced for invariance, plus optionally a normal
/// operator commuting with the state; everything is then conjugated by a
/// random unitary.
pub fn modular_commuting_instance(rng: &mut impl Rng, d: usize) -> (GkslRep, DensityState) {
    // distinct, well-separated spectrum
    let probs: Vec<f64> = loop {
        let mut raw: Vec<f64> = (0..d).map(|_| rng.random_range(0.25..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        for p in raw.iter_mut() {
            *p /= sum;
        }
        raw.sort_by(|a, b| b.total_cmp(a));
        if raw.windows(2).all(|w| w[0] - w[1] > 0.25 / d as f64) {
            break raw;
        }
    };

    let mut ops: Vec<CMat> = Vec::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            if rng.random_bool(0.6) {
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        pairs.push((0, 1));
    }
    for &(i, j) in &pairs {
        let amp: f64 = rng.random_range(0.5..1.2);
        let up = matrix_unit(d, i, j)
            * (C64::new(0.0, rng.random_range(0.0..std::f64::consts::TAU)).exp() * cr(amp));
        let down_amp = amp * (probs[j] / probs[i]).sqrt();
        let down = matrix_unit(d, j, i)
            * (C64::new(0.0, rng.random_range(0.0..std::f64::consts::TAU)).exp() * cr(down_amp));
        ops.push(up);
        ops.push(down);
    }
    if rng.random_bool(0.5) {
        let diag = CMat::from_fn(d, d, |r, cc| {
            if r == cc {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            } else {
                cr(0.0)
            }
        });
        ops.push(diag);
    }
    let h = CMat::from_fn(d, d, |r, cc| {
        if r == cc {
            cr(rng.random_range(-1.0..1.0))
        } else {
            cr(0.0)
        }
    });

    let w = random_cmat(rng, d).qr().q();
    let rho_mat = {
        let diag = CMat::from_fn(d, d, |r, cc| if r == cc { cr(probs[r]) } else { cr(0.0) });
        &w * diag * w.adjoint()
    };
    let ops: Vec<CMat> = ops.into_iter().map(|l| &w * l * w.adjoint()).collect();
    let h = &w * h * w.adjoint();
    let rep = GkslRep::new(HermMat::symmetrized(h), ops).expect("valid representation");
    let state = DensityState::new(rho_mat, &Tolerances::default()).expect("faithful by construction");
    (rep, state)
}

fn random_cmat(rng: &mut impl Rng, d: usize) -> CMat {
    CMat::from_fn(d, d, |_, _| {
        C64::new(
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
        )
    })
}

/// A named instance with its reference invariant state, when one is known
/// in closed form.
pub struct NamedInstance {
    pub name: &'static str,
    pub rep: GkslRep,
    pub state: Option<DensityState>,
}

/// The built-in instance catalog used by the example suite.
pub fn named_instances() -> Vec<NamedInstance> {
    let mut out = Vec::new();
    out.push(NamedInstance {
        name: "shift-2",
        rep: cyclic_shift_rep(2),
        state: Some(DensityState::maximally_mixed(2)),
    });
    out.push(NamedInstance {
        name: "shift-3",
        rep: cyclic_shift_rep(3),
        state: Some(DensityState::maximally_mixed(3)),
    });
    let (rep, rho) = driven_decay_qubit(1.0, 1.0);
    out.push(NamedInstance {
        name: "driven-decay",
        rep,
        state: Some(rho),
    });
    let (rep, rho) = driven_decay_qubit(0.7, 1.3);
    out.push(NamedInstance {
        name: "driven-decay-alt",
        rep,
        state: Some(rho),
    });
    let (rep, rho, _) = skewed_hamiltonian_qubit(1.0, 1.0 / 3.0, true);
    out.push(NamedInstance {
        name: "skewed-plus",
        rep,
        state: Some(rho),
    });
    let (rep, rho, _) = skewed_hamiltonian_qubit(1.0, 1.0 / 3.0, false);
    out.push(NamedInstance {
        name: "skewed-minus",
        rep,
        state: Some(rho),
    });
    let p = qubit::QubitParams::consistent(1.0 / 3.0, 0.0, 0.0, cr(1.0), 0.0, cr(0.0));
    out.push(NamedInstance {
        name: "family-default",
        rep: qubit::dual_qms_family(&p).expect("consistent parameters"),
        state: Some(DensityState::from_probabilities(&[p.nu, 1.0 - p.nu]).unwrap()),
    });
    let p = qubit::QubitParams::consistent(
        1.0 / 3.0,
        0.3,
        -0.2,
        c(0.7, 0.4),
        1.1,
        c(0.5, -0.3),
    );
    out.push(NamedInstance {
        name: "family-generic",
        rep: qubit::dual_qms_family(&p).expect("consistent parameters"),
        state: Some(DensityState::from_probabilities(&[p.nu, 1.0 - p.nu]).unwrap()),
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gksl::build_predual;
    use crate::matrices::vectorize;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shift_matrix_is_unitary_cycle() {
        let s = cyclic_shift_matrix(4);
        assert!((s.adjoint() * &s - eye(4)).norm() < 1e-15);
        // S e_0 = e_1
        assert_eq!(s[(1, 0)], cr(1.0));
    }

    #[test]
    fn skewed_instance_invariance_and_ratio() {
        for branch in [true, false] {
            for (omega, nu) in [(1.0, 1.0 / 3.0), (0.8, 0.22)] {
                let (rep, rho, (r, s)) = skewed_hamiltonian_qubit(omega, nu, branch);
                let pd = build_predual(&rep);
                let res = (pd.mat() * vectorize(rho.matrix())).norm();
                assert!(res <= 1e-10, "invariance residual {res}");
                // 2 nu = (r - s)^2 / (r^2 + s^2)
                let identity = 2.0 * nu - (r - s).powi(2) / (r * r + s * s);
                assert!(identity.abs() <= 1e-12);
                // special w.r.t. rho
                let chk = rep.special_check(&rho, &Tolerances::default());
                assert!(chk.is_special);
            }
        }
    }

    #[test]
    fn modular_commuting_instance_properties() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        for d in [2usize, 3, 4] {
            let (rep, rho) = modular_commuting_instance(&mut rng, d);
            assert!(rho.is_faithful());
            let pd = build_predual(&rep);
            let res = (pd.mat() * vectorize(rho.matrix())).norm();
            assert!(res <= 1e-10, "invariance residual {res} at d={d}");
            let s = build_generator(&rep);
            let (ok, r) = crate::modular::commutes_with_modular(&s, &rho, &tol).unwrap();
            assert!(ok, "commutation residual {r} at d={d}");
        }
    }

    #[test]
    fn random_invariant_pairs_are_faithful() {
        let mut rng = ChaCha8Rng::seed_from_u64(82);
        for d in [2usize, 3] {
            let (rep, rho) = random_generator_with_invariant(&mut rng, d);
            let pd = build_predual(&rep);
            let res = (pd.mat() * vectorize(rho.matrix())).norm();
            assert!(res <= 1e-9 * (1.0 + pd.mat().norm()));
            assert!(rho.is_faithful());
        }
    }

    #[test]
    fn catalog_builds() {
        let all = named_instances();
        assert_eq!(all.len(), 8);
        for inst in &all {
            if let Some(state) = &inst.state {
                let pd = build_predual(&inst.rep);
                let res = (pd.mat() * vectorize(state.matrix())).norm();
                assert!(
                    res <= 1e-9,
                    "{}: reference state not invariant, residual {res}",
                    inst.name
                );
            }
        }
    }
}
