//! `M_2(C)` specialization: Pauli tooling, special representations from
//! Pauli coefficients, and the parameterized family of qubit generators
//! whose 0-dual is again a QMS.
//!
//! Convention: the raising and lowering operators carry no 1/2 factor,
//! `sigma^{+} = sigma_1 + i sigma_2 = 2 |e_1><e_2|` and
//! `sigma^{-} = sigma_1 - i sigma_2 = 2 |e_2><e_1|`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrices::{c, cr, eye, CMat, HermMat, C64};
use crate::settings::Tolerances;

/// Pauli matrix `sigma_j`, `j = 0..3`, with `sigma_0 = 1`.
pub fn pauli(j: usize) -> CMat {
    match j {
        0 => eye(2),
        1 => CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]),
        2 => CMat::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)]),
        3 => CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]),
        _ => panic!("pauli index {j} out of range"),
    }
}

/// `sigma_1 + i sigma_2 = 2 |e_1><e_2|`.
pub fn sigma_plus() -> CMat {
    pauli(1) + pauli(2) * C64::new(0.0, 1.0)
}

/// `sigma_1 - i sigma_2 = 2 |e_2><e_1|`.
pub fn sigma_minus() -> CMat {
    pauli(1) - pauli(2) * C64::new(0.0, 1.0)
}

/// Coefficients of `a = sum_j c_j sigma_j`.
pub fn pauli_decompose(a: &CMat) -> Result<[C64; 4]> {
    if a.nrows() != 2 || a.ncols() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "pauli_decompose needs a 2x2 matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut out = [cr(0.0); 4];
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = (pauli(j) * a).trace() / cr(2.0);
    }
    Ok(out)
}

/// Inverse of [`pauli_decompose`].
pub fn pauli_compose(coeffs: &[C64; 4]) -> CMat {
    let mut out = CMat::zeros(2, 2);
    for (j, &cj) in coeffs.iter().enumerate() {
        out += pauli(j) * cj;
    }
    out
}

/// Special GKSL representation on `M_2(C)` from Pauli coefficient triples.
///
/// Each operator is `L_k = -(2 nu - 1) z_k3 + sum_{j=1..3} z_kj sigma_j`,
/// which forces `tr(rho L_k) = 0` against `rho = diag(nu, 1 - nu)`. At most
/// three linearly independent triples are admissible.
pub fn special_rep_from_pauli_coeffs(
    zs: &[[C64; 3]],
    nu: f64,
    hamiltonian: Option<HermMat>,
) -> Result<crate::gksl::GkslRep> {
    if !(0.0..1.0).contains(&nu) || nu <= 0.0 {
        return Err(Error::InvalidInput(format!("nu = {nu} outside (0, 1)")));
    }
    if zs.len() > 3 {
        return Err(Error::InvalidInput(format!(
            "{} coefficient triples; a special representation on M_2 admits at most 3",
            zs.len()
        )));
    }
    if !zs.is_empty() {
        let stack = CMat::from_fn(3, zs.len(), |r, cc| zs[cc][r]);
        let gram = crate::matrices::HermMat::symmetrized(stack.adjoint() * &stack);
        let (w, _) = crate::matrices::herm_eig(&gram)?;
        let wmax = w.iter().cloned().fold(0.0, f64::max);
        let wmin = w.first().copied().unwrap_or(0.0);
        if wmax == 0.0 || wmin <= 1e-20 * wmax {
            return Err(Error::InvalidInput(
                "coefficient triples are linearly dependent".into(),
            ));
        }
    }
    let mut ops = Vec::with_capacity(zs.len());
    for z in zs {
        let mut l = eye(2) * (-cr(2.0 * nu - 1.0) * z[2]);
        for (j, &zj) in z.iter().enumerate() {
            l += pauli(j + 1) * zj;
        }
        ops.push(l);
    }
    let h = hamiltonian.unwrap_or_else(|| HermMat::zeros(2));
    crate::gksl::GkslRep::new(h, ops)
}

/// Parameters of the qubit family with `rho = diag(nu, 1 - nu)` invariant
/// and the 0-dual a QMS: `H = v0 + v3 sigma_3`, operators `eta L` with
/// `L = -(2 nu - 1) + sigma_3`, `lambda sigma^+`, `mu sigma^-`, subject to
/// `|lambda|^2 / |mu|^2 = nu / (1 - nu)`.
#[derive(Debug, Clone)]
pub struct QubitParams {
    pub nu: f64,
    pub v0: f64,
    pub v3: f64,
    pub lambda: C64,
    pub mu: C64,
    pub eta: C64,
}

impl QubitParams {
    /// Residual of the invariance constraint
    /// `|lambda|^2 (1 - nu) - |mu|^2 nu = 0`.
    pub fn invariance_residual(&self) -> f64 {
        let scale = (self.lambda.norm_sqr() + self.mu.norm_sqr()).max(1e-300);
        (self.lambda.norm_sqr() * (1.0 - self.nu) - self.mu.norm_sqr() * self.nu).abs() / scale
    }

    pub fn is_invariance_consistent(&self, tol: &Tolerances) -> bool {
        if self.lambda.norm() == 0.0 && self.mu.norm() == 0.0 {
            return true;
        }
        self.invariance_residual() <= tol.rep_match
    }

    /// Derive `lambda` from `mu` (with a free phase) so the invariance
    /// constraint holds exactly.
    pub fn consistent(nu: f64, v0: f64, v3: f64, mu: C64, lambda_phase: f64, eta: C64) -> Self {
        let modulus = mu.norm() * (nu / (1.0 - nu)).sqrt();
        let lambda = C64::new(0.0, lambda_phase).exp() * cr(modulus);
        QubitParams {
            nu,
            v0,
            v3,
            lambda,
            mu,
            eta,
        }
    }

    /// Random invariance-consistent draw with `nu` bounded away from 0, 1
    /// and 1/2. Every fourth draw has `eta = 0`.
    pub fn sample(rng: &mut impl Rng, drop_eta: bool) -> Self {
        let nu = loop {
            let x: f64 = rng.random_range(0.05..0.95);
            if (x - 0.5).abs() > 0.05 {
                break x;
            }
        };
        let mu = C64::new(0.0, rng.random_range(0.0..std::f64::consts::TAU)).exp()
            * cr(rng.random_range(0.4..1.4));
        let eta = if drop_eta {
            cr(0.0)
        } else {
            C64::new(0.0, rng.random_range(0.0..std::f64::consts::TAU)).exp()
                * cr(rng.random_range(0.4..1.4))
        };
        QubitParams::consistent(
            nu,
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            mu,
            rng.random_range(0.0..std::f64::consts::TAU),
            eta,
        )
    }
}

/// Build the family representation, dropping zero-coefficient operators.
///
/// Guarantees (checked by tests, not here): `rho = diag(nu, 1 - nu)` is
/// invariant, the 0-dual is a QMS, and the privileged modular eigenvalues
/// are `{1 (iff eta != 0), nu/(1-nu), (1-nu)/nu}`.
pub fn dual_qms_family(p: &QubitParams) -> Result<crate::gksl::GkslRep> {
    if !(0.0 < p.nu && p.nu < 1.0) {
        return Err(Error::InvalidInput(format!("nu = {} outside (0, 1)", p.nu)));
    }
    if (p.nu - 0.5).abs() < 1e-9 {
        return Err(Error::InvalidInput(
            "nu = 1/2 excluded: the state is the trace state and the family degenerates".into(),
        ));
    }
    if !p.is_invariance_consistent(&Tolerances::default()) {
        return Err(Error::InvalidInput(format!(
            "|lambda|^2 / |mu|^2 != nu / (1 - nu), residual {:.3e}",
            p.invariance_residual()
        )));
    }
    let h = HermMat::symmetrized(pauli(0) * cr(p.v0) + pauli(3) * cr(p.v3));
    let big_l = eye(2) * cr(-(2.0 * p.nu - 1.0)) + pauli(3);
    let mut ops = Vec::new();
    if p.eta.norm() > 0.0 {
        ops.push(&big_l * p.eta);
    }
    if p.lambda.norm() > 0.0 {
        ops.push(sigma_plus() * p.lambda);
    }
    if p.mu.norm() > 0.0 {
        ops.push(sigma_minus() * p.mu);
    }
    crate::gksl::GkslRep::new(h, ops)
}
