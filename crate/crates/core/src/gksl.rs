//! GKSL representations of QMS generators.
//!
//! A generator acts in Heisenberg form
//! `L(a) = i[H,a] - 1/2 sum_k (L_k' L_k a - 2 L_k' a L_k + a L_k' L_k)`
//! and is materialized as a `d^2 x d^2` superoperator. Representations can
//! be recovered from a superoperator relative to a faithful state: the
//! recovered form is *special*, i.e. `tr(rho L_k) = 0` with `{1, L_k}`
//! linearly independent, and is unique up to a unitary mixing of the `L_k`
//! and a real shift of `H` (fixed here by `tr(H) = 0`).

use crate::error::{Error, Result};
use crate::matrices::{
    self, c, cr, eye, herm_eig, hs_inner, left_mul_superop, right_mul_superop, vectorize, CMat,
    CVec, HermMat, I,
};
use crate::settings::Tolerances;
use crate::stationary::DensityState;

/// A GKSL representation `(H, L_1..L_m)` of a generator.
#[derive(Debug, Clone)]
pub struct GkslRep {
    dim: usize,
    hamiltonian: HermMat,
    lindblad_ops: Vec<CMat>,
}

impl GkslRep {
    pub fn new(hamiltonian: HermMat, lindblad_ops: Vec<CMat>) -> Result<Self> {
        let d = hamiltonian.dim();
        for (k, l) in lindblad_ops.iter().enumerate() {
            if l.nrows() != d || l.ncols() != d {
                return Err(Error::ShapeMismatch(format!(
                    "Lindblad operator {k} is {}x{}, expected {d}x{d}",
                    l.nrows(),
                    l.ncols()
                )));
            }
            if l.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(GkslRep {
            dim: d,
            hamiltonian,
            lindblad_ops,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &HermMat {
        &self.hamiltonian
    }

    pub fn ops(&self) -> &[CMat] {
        &self.lindblad_ops
    }

    /// `sum_k L_k' L_k`.
    pub fn dissipation_strength(&self) -> CMat {
        let mut s = CMat::zeros(self.dim, self.dim);
        for l in &self.lindblad_ops {
            s += l.adjoint() * l;
        }
        s
    }

    /// Replace the operators by `L'_k = sum_j u[k, j] L_j`. The generator is
    /// unchanged when `u` is unitary (or isometric on the row space).
    pub fn mixed(&self, u: &CMat) -> Result<GkslRep> {
        let m = self.lindblad_ops.len();
        if u.ncols() != m {
            return Err(Error::ShapeMismatch(format!(
                "mixing matrix has {} columns for {m} operators",
                u.ncols()
            )));
        }
        let mut ops = Vec::with_capacity(u.nrows());
        for k in 0..u.nrows() {
            let mut l = CMat::zeros(self.dim, self.dim);
            for j in 0..m {
                l += &self.lindblad_ops[j] * u[(k, j)];
            }
            ops.push(l);
        }
        GkslRep::new(self.hamiltonian.clone(), ops)
    }

    /// Diagnostics for the special-representation conditions relative to
    /// `rho`: `tr(rho L_k) = 0` and linear independence of `{1, L_k}`.
    pub fn special_check(&self, rho: &DensityState, tol: &Tolerances) -> SpecialCheck {
        let max_trace = self
            .lindblad_ops
            .iter()
            .map(|l| (rho.matrix() * l).trace().norm())
            .fold(0.0, f64::max);
        // Gram matrix of {1, L_1..L_m} in the HS inner product.
        let m = self.lindblad_ops.len();
        let mut fam: Vec<CMat> = Vec::with_capacity(m + 1);
        fam.push(eye(self.dim));
        fam.extend(self.lindblad_ops.iter().cloned());
        let mut gram = CMat::zeros(m + 1, m + 1);
        for i in 0..=m {
            for j in 0..=m {
                gram[(i, j)] = hs_inner(&fam[i], &fam[j]).expect("matching shapes");
            }
        }
        let min_sv = herm_eig(&HermMat::symmetrized(gram))
            .map(|(w, _)| w.first().copied().unwrap_or(0.0).max(0.0))
            .unwrap_or(0.0);
        SpecialCheck {
            max_state_trace: max_trace,
            gram_min_sv: min_sv,
            is_special: max_trace <= tol.gauge * (1.0 + self.norm_scale()) && min_sv > tol.gauge,
        }
    }

    fn norm_scale(&self) -> f64 {
        self.lindblad_ops
            .iter()
            .map(|l| l.norm())
            .fold(self.hamiltonian.norm(), f64::max)
    }
}

/// Result of [`GkslRep::special_check`].
#[derive(Debug, Clone)]
pub struct SpecialCheck {
    pub max_state_trace: f64,
    pub gram_min_sv: f64,
    pub is_special: bool,
}

/// What a superoperator matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperopKind {
    /// Heisenberg-picture generator; `L(1) = 0`.
    Generator,
    /// Predual (Schroedinger-picture) generator; trace-annihilating.
    PredualGenerator,
    /// Unconstrained linear map.
    Map,
}

/// A `d^2 x d^2` matrix acting on vectorized `d x d` operators.
#[derive(Debug, Clone)]
pub struct Superoperator {
    dim: usize,
    kind: SuperopKind,
    mat: CMat,
}

impl Superoperator {
    pub fn new(mat: CMat, kind: SuperopKind, tol: &Tolerances) -> Result<Self> {
        let n = mat.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if mat.ncols() != n || d * d != n {
            return Err(Error::ShapeMismatch(format!(
                "superoperator must be d^2 x d^2, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let scale = (1.0 + mat.norm()).max(1.0);
        match kind {
            SuperopKind::Generator => {
                let res = (&mat * vectorize(&eye(d))).norm();
                if res > tol.unital * scale {
                    return Err(Error::NotGenerator(format!(
                        "L(1) != 0, residual {res:.3e}"
                    )));
                }
            }
            SuperopKind::PredualGenerator => {
                let res = (vectorize(&eye(d)).adjoint() * &mat).norm();
                if res > tol.unital * scale {
                    return Err(Error::NotGenerator(format!(
                        "predual does not annihilate the trace, residual {res:.3e}"
                    )));
                }
            }
            SuperopKind::Map => {}
        }
        Ok(Superoperator { dim: d, kind, mat })
    }

    pub fn map_of(mat: CMat) -> Result<Self> {
        Self::new(mat, SuperopKind::Map, &Tolerances::default())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> SuperopKind {
        self.kind
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    /// Apply to a `d x d` matrix.
    pub fn apply(&self, a: &CMat) -> CMat {
        let v = &self.mat * vectorize(a);
        CMat::from_column_slice(self.dim, self.dim, v.as_slice())
    }

    /// Hilbert-Schmidt adjoint (the predual at finite dimension).
    pub fn hs_adjoint(&self) -> CMat {
        self.mat.adjoint()
    }

    /// Choi matrix `C = sum_ij |e_i><e_j| (x) Phi(|e_i><e_j|)`.
    pub fn choi(&self) -> CMat {
        choi_matrix(&self.mat, self.dim)
    }
}

/// Choi matrix of a superoperator matrix in the column-stacking convention.
pub fn choi_matrix(s: &CMat, d: usize) -> CMat {
    let mut choi = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            // Phi(E_ij) is the devectorized column j*d + i of s.
            let col = s.column(j * d + i);
            for k in 0..d {
                for l in 0..d {
                    choi[(i * d + k, j * d + l)] = col[l * d + k];
                }
            }
        }
    }
    choi
}

/// Diagnostics of the QMS-generator test: unitality, Hermiticity
/// preservation, and conditional complete positivity of the Choi matrix
/// compressed off the maximally entangled vector.
#[derive(Debug, Clone)]
pub struct GeneratorCheck {
    pub unital_residual: f64,
    pub herm_preservation_residual: f64,
    pub min_compressed_choi_eig: f64,
    pub is_star_map: bool,
    pub is_ccp: bool,
    pub is_generator: bool,
}

/// Test whether a superoperator matrix generates a QMS.
pub fn check_generator(s: &CMat, d: usize, tol: &Tolerances) -> Result<GeneratorCheck> {
    let scale = 1.0_f64.max(s.norm());
    let unital = (s * vectorize(&eye(d))).norm();
    let choi = choi_matrix(s, d);
    let cscale = 1.0_f64.max(choi.norm());
    let herm = (&choi - choi.adjoint()).norm();

    // P C P with P the projector off the normalized maximally entangled
    // vector omega = vec(1)/sqrt(d).
    let omega = vectorize(&eye(d)).map(|z| z / cr((d as f64).sqrt()));
    let p = eye(d * d) - &omega * omega.adjoint();
    let compressed = HermMat::symmetrized(&p * &choi * &p);
    let (vals, _) = herm_eig(&compressed)?;
    let min_eig = vals.first().copied().unwrap_or(0.0);

    let is_star_map = herm <= tol.star * cscale;
    let is_ccp = min_eig >= -tol.ccp * cscale;
    let is_unital = unital <= tol.unital * scale;
    Ok(GeneratorCheck {
        unital_residual: unital,
        herm_preservation_residual: herm,
        min_compressed_choi_eig: min_eig,
        is_star_map,
        is_ccp,
        is_generator: is_star_map && is_ccp && is_unital,
    })
}

/// Assemble the Heisenberg generator superoperator of a representation.
pub fn build_generator(rep: &GkslRep) -> Superoperator {
    let d = rep.dim();
    let h = rep.hamiltonian().mat();
    let mut s = (left_mul_superop(h) - right_mul_superop(h)) * I;
    for l in rep.ops() {
        let ldl = l.adjoint() * l;
        s -= (left_mul_superop(&ldl) + right_mul_superop(&ldl)
            - matrices::sandwich_superop(&l.adjoint(), l).scale(2.0))
        .scale(0.5);
    }
    Superoperator {
        dim: d,
        kind: SuperopKind::Generator,
        mat: s,
    }
}

/// Assemble the predual (Schroedinger) generator superoperator,
/// `L_*(x) = -i[H,x] - 1/2 sum_k (x L_k' L_k - 2 L_k x L_k' + L_k' L_k x)`.
pub fn build_predual(rep: &GkslRep) -> Superoperator {
    let d = rep.dim();
    let h = rep.hamiltonian().mat();
    let mut s = (left_mul_superop(h) - right_mul_superop(h)) * (-I);
    for l in rep.ops() {
        let ldl = l.adjoint() * l;
        s -= (left_mul_superop(&ldl) + right_mul_superop(&ldl)
            - matrices::sandwich_superop(l, &l.adjoint()).scale(2.0))
        .scale(0.5);
    }
    Superoperator {
        dim: d,
        kind: SuperopKind::PredualGenerator,
        mat: s,
    }
}

/// The operator `G = -iH - 1/2 sum_k L_k' L_k`, so that
/// `L(a) = G' a + a G + sum_k L_k' a L_k`.
#[derive(Debug, Clone)]
pub struct GOperator {
    mat: CMat,
}

impl GOperator {
    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    /// Residual of the defining decomposition `G + G' = -sum_k L_k' L_k`.
    pub fn decomposition_residual(&self, rep: &GkslRep) -> f64 {
        (&self.mat + self.mat.adjoint() + rep.dissipation_strength()).norm()
    }
}

pub fn compute_g(rep: &GkslRep) -> GOperator {
    let g = rep.hamiltonian().mat() * (-I) - rep.dissipation_strength().scale(0.5);
    GOperator { mat: g }
}

/// Recover `G` from a generator superoperator relative to a faithful state.
///
/// Uses `G* u = sum_k rho_k L(|u><e_k|) e_k - tr(rho G) u` over the spectral
/// basis of `rho`. The unknown scalar is fixed so that the Hermitian part of
/// the output matches `-1/2 sum_k L_k' L_k` exactly; a residual purely
/// imaginary multiple of the identity (a real shift of `H`) remains and is
/// removed later by the `tr(H) = 0` gauge.
pub fn recover_g(s: &Superoperator, rho: &DensityState, tol: &Tolerances) -> Result<GOperator> {
    let d = s.dim();
    if rho.dim() != d {
        return Err(Error::ShapeMismatch(format!(
            "state dimension {} vs superoperator dimension {d}",
            rho.dim()
        )));
    }
    let unital = (s.mat() * vectorize(&eye(d))).norm();
    if unital > tol.unital * 1.0_f64.max(s.mat().norm()) {
        return Err(Error::NotGenerator(format!(
            "L(1) != 0, residual {unital:.3e}"
        )));
    }
    let evecs = rho.eigenvectors();
    let evals = rho.eigenvalues();
    // A e_m = sum_k rho_k L(|e_m><v_k|) v_k  (computational basis input,
    // spectral basis v_k of rho).
    let mut a = CMat::zeros(d, d);
    for m in 0..d {
        let mut acc = CVec::zeros(d);
        for (k, &weight) in evals.iter().enumerate() {
            let vk = evecs.column(k);
            let outer = CMat::from_fn(d, d, |r, cc| {
                if r == m {
                    vk[cc].conj()
                } else {
                    cr(0.0)
                }
            });
            let img = s.apply(&outer);
            acc += img * vk * cr(weight);
        }
        a.set_column(m, &acc);
    }
    let mut g = a.adjoint();
    let shift = (rho.matrix() * &g).trace().re / 2.0;
    g -= eye(d) * cr(shift);
    Ok(GOperator { mat: g })
}

/// Recover a special GKSL representation from a generator superoperator
/// relative to a faithful state `rho`.
///
/// The commutator part is split off with the recovered `G`, the completely
/// positive part is diagonalized through its Choi matrix, the Kraus
/// operators are gauge-shifted to `tr(rho L_k) = 0` with the compensating
/// Hamiltonian shift, re-orthogonalized, and `H` is made traceless.
pub fn special_rep_from_superoperator(
    s: &Superoperator,
    rho: &DensityState,
    tol: &Tolerances,
) -> Result<GkslRep> {
    let d = s.dim();
    let check = check_generator(s.mat(), d, tol)?;
    if !check.is_star_map {
        return Err(Error::NotGenerator(format!(
            "not Hermiticity-preserving, Choi asymmetry {:.3e}",
            check.herm_preservation_residual
        )));
    }
    if !check.is_ccp {
        return Err(Error::NotCcp {
            min_eig: check.min_compressed_choi_eig,
        });
    }
    if check.unital_residual > tol.unital * 1.0_f64.max(s.mat().norm()) {
        return Err(Error::NotGenerator(format!(
            "L(1) != 0, residual {:.3e}",
            check.unital_residual
        )));
    }

    let g = recover_g(s, rho, tol)?;
    // CP part Phi = L - G'(.)  - (.)G as a superoperator.
    let phi = s.mat() - left_mul_superop(&g.mat().adjoint()) - right_mul_superop(g.mat());
    let mut kraus = kraus_from_cp_superop(&phi, d, tol)?;

    // Gauge shift to tr(rho L_k) = 0 with the compensating Hamiltonian
    // shift  H += (1/2i) sum_k (c_k L_k' - conj(c_k) L_k),  c_k = tr(rho L_k).
    let mut h_shift = CMat::zeros(d, d);
    for l in kraus.iter_mut() {
        let ck = (rho.matrix() * &*l).trace();
        h_shift += (l.adjoint() * ck - &*l * ck.conj()) * c(0.0, -0.5);
        *l -= eye(d) * ck;
    }

    // Re-orthogonalize the shifted family (a fresh Choi diagonalization of
    // the same CP part) and drop null directions.
    let mut cp = CMat::zeros(d * d, d * d);
    for l in &kraus {
        let v = vectorize(&l.adjoint());
        cp += &v * v.adjoint();
    }
    let kraus = kraus_from_choi(&HermMat::symmetrized(cp), d, tol)?;

    // Hamiltonian: H = i (G + 1/2 sum L'L) + shift, then tr(H) = 0.
    let mut strength = CMat::zeros(d, d);
    for l in &kraus {
        strength += l.adjoint() * l;
    }
    let mut h = (g.mat() + strength.scale(0.5)) * I + h_shift;
    let tr = h.trace();
    h -= eye(d) * cr(tr.re / d as f64);
    let rep = GkslRep::new(HermMat::symmetrized(h), kraus)?;

    let rebuilt = build_generator(&rep);
    let mismatch = (rebuilt.mat() - s.mat()).norm();
    if mismatch > tol.rep_match * 1.0_f64.max(s.mat().norm()) {
        return Err(Error::Internal(format!(
            "recovered representation does not reproduce the generator, residual {mismatch:.3e}"
        )));
    }
    Ok(rep)
}

/// Kraus operators of a completely positive superoperator in Heisenberg
/// form `Phi(a) = sum_k L_k' a L_k`, from its Choi matrix.
fn kraus_from_cp_superop(phi: &CMat, d: usize, tol: &Tolerances) -> Result<Vec<CMat>> {
    let choi = HermMat::symmetrized(choi_matrix(phi, d));
    kraus_from_choi(&choi, d, tol)
}

fn kraus_from_choi(choi: &HermMat, d: usize, tol: &Tolerances) -> Result<Vec<CMat>> {
    let (vals, vecs) = herm_eig(choi)?;
    let gmax = vals.iter().cloned().fold(0.0, f64::max);
    if gmax <= 0.0 {
        return Ok(Vec::new());
    }
    let cutoff = tol.choi_rel * gmax;
    let mut ops: Vec<(f64, CMat)> = Vec::new();
    for (idx, &gamma) in vals.iter().enumerate() {
        if gamma > cutoff {
            let w = vecs.column(idx).into_owned();
            let scaled = CVec::from_iterator(d * d, w.iter().map(|z| z * cr(gamma.sqrt())));
            // vec(L') = sqrt(gamma) w  =>  L = devec(...)'.
            let l = CMat::from_column_slice(d, d, scaled.as_slice()).adjoint();
            ops.push((gamma, canonical_phase(l)));
        }
    }
    // Deterministic report order: descending Choi eigenvalue, entries as
    // tie-break.
    ops.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| lex_cmp(&a.1, &b.1))
    });
    Ok(ops.into_iter().map(|(_, l)| l).collect())
}

/// Multiply by a global phase so the largest-magnitude entry is real
/// positive. A diagonal-unitary mixing, so the generator is untouched.
pub(crate) fn canonical_phase(l: CMat) -> CMat {
    let mut best = 0.0;
    let mut phase = cr(1.0);
    for z in l.iter() {
        if z.norm() > best + 1e-14 {
            best = z.norm();
            phase = z / cr(z.norm());
        }
    }
    if best == 0.0 {
        l
    } else {
        l * phase.conj()
    }
}

fn lex_cmp(a: &CMat, b: &CMat) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)) {
            std::cmp::Ordering::Equal => continue,
            ord => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

/// Sampled-time complete positivity of the semigroup: the Choi matrix of
/// `exp(t L)` must be PSD.
pub fn semigroup_cp_check(s: &Superoperator, times: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in times {
        let et = matrices::expm(s.mat(), t)?;
        let choi = HermMat::symmetrized(choi_matrix(&et, s.dim()));
        let (vals, _) = herm_eig(&choi)?;
        worst = worst.min(vals.first().copied().unwrap_or(0.0));
    }
    Ok(worst)
}
