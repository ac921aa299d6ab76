//! Invariant states of a QMS: kernel of the predual generator, with
//! faithfulness diagnostics and spectral powers of states.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gksl::{Superoperator, SuperopKind};
use crate::matrices::{cr, devectorize, eye, herm_eig, vectorize, CMat, CVec, HermMat, C64};
use crate::settings::Tolerances;

/// A faithful-or-not density matrix with its spectral decomposition.
///
/// Eigenvalues are stored descending with matching orthonormal eigenvector
/// columns, so spectral powers `rho^s` are a reweighted sum of projectors.
#[derive(Debug, Clone)]
pub struct DensityState {
    dim: usize,
    rho: HermMat,
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
    min_eig: f64,
    faithful: bool,
}

impl DensityState {
    pub fn new(mat: CMat, tol: &Tolerances) -> Result<Self> {
        let rho = HermMat::new(mat, tol.herm).map_err(|e| match e {
            Error::NotHermitian { dev } => {
                Error::InvalidState(format!("not Hermitian (relative deviation {dev:.3e})"))
            }
            other => other,
        })?;
        let d = rho.dim();
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidState(format!(
                "trace {tr} is not 1 within 1e-12"
            )));
        }
        let (vals_asc, vecs_asc) = herm_eig(&rho)?;
        let min_eig = vals_asc[0];
        if min_eig < -1e-10 {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        let mut eigenvalues: Vec<f64> = vals_asc.iter().rev().cloned().collect();
        // clamp roundoff negatives; faithfulness is decided on the raw value
        for v in eigenvalues.iter_mut() {
            if *v < 0.0 && *v > -1e-10 {
                *v = 0.0;
            }
        }
        let mut eigenvectors = CMat::zeros(d, d);
        for k in 0..d {
            eigenvectors.set_column(k, &vecs_asc.column(d - 1 - k));
        }
        Ok(DensityState {
            dim: d,
            rho,
            eigenvalues,
            eigenvectors,
            min_eig,
            faithful: min_eig >= tol.faithful,
        })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        let mat = eye(d) * cr(1.0 / d as f64);
        DensityState::new(mat, &Tolerances::default()).expect("maximally mixed state is valid")
    }

    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || probs.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidState(
                "probabilities must be nonnegative and sum to 1".into(),
            ));
        }
        let diag = CMat::from_diagonal(&CVec::from_iterator(
            probs.len(),
            probs.iter().map(|&p| cr(p)),
        ));
        DensityState::new(diag, &Tolerances::default())
    }

    /// A random faithful state: a normalized Ginibre matrix mixed with the
    /// trace state so the minimum eigenvalue stays above `floor`.
    pub fn random(rng: &mut impl Rng, d: usize, floor: f64) -> Result<Self> {
        let g = CMat::from_fn(d, d, |_, _| {
            C64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        });
        let w = (floor * d as f64 * 1.2).min(0.9);
        let gg = &g * g.adjoint();
        let gg = &gg * cr((1.0 - w) / gg.trace().re);
        let mat = gg + eye(d) * cr(w / d as f64);
        DensityState::new(mat, &Tolerances::default())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        self.rho.mat()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvector columns aligned with [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    pub fn is_faithful(&self) -> bool {
        self.faithful
    }

    /// Spectral power `rho^s = sum_k rho_k^s |v_k><v_k|`.
    ///
    /// Negative exponents require a faithful state.
    pub fn power(&self, s: f64) -> Result<CMat> {
        if s < 0.0 && !self.faithful {
            return Err(Error::NotFaithful {
                min_eig: self.min_eig,
            });
        }
        let mut out = CMat::zeros(self.dim, self.dim);
        for k in 0..self.dim {
            let lam = self.eigenvalues[k];
            let w = if s == 0.0 { 1.0 } else { lam.powf(s) };
            let v = self.eigenvectors.column(k);
            out += (v * v.adjoint()) * cr(w);
        }
        Ok(out)
    }
}

/// Faithfulness verdict with the minimum eigenvalue.
pub fn faithfulness_check(rho: &DensityState, tol: &Tolerances) -> (bool, f64) {
    (rho.min_eig() >= tol.faithful, rho.min_eig())
}

/// Output of [`invariant_states`].
#[derive(Debug)]
pub struct InvariantStates {
    /// Complex dimension of the kernel of the predual superoperator.
    pub kernel_dim: usize,
    /// Real dimension of its Hermitian slice.
    pub hermitian_dim: usize,
    /// Invariant density matrices spanning the Hermitian slice, the
    /// max-min-eigenvalue representative first.
    pub states: Vec<DensityState>,
    /// Set when the kernel contains no PSD trace-one representative that
    /// the dense search could certify.
    pub psd_search_failed: bool,
    /// Minimum eigenvalue of the best representative found.
    pub center_min_eig: f64,
}

/// Invariant states of the semigroup generated by `s`: a basis of the
/// kernel of the predual superoperator intersected with the Hermitian
/// trace-one PSD cone.
pub fn invariant_states(s: &Superoperator, tol: &Tolerances) -> Result<InvariantStates> {
    let d = s.dim();
    let predual: CMat = match s.kind() {
        SuperopKind::Generator => s.mat().adjoint(),
        SuperopKind::PredualGenerator => s.mat().clone(),
        SuperopKind::Map => {
            return Err(Error::InvalidInput(
                "invariant_states needs a generator or predual generator".into(),
            ))
        }
    };

    // Kernel directions with sigma < kernel_rel * sigma_max.
    let (kernel, smax) = crate::matrices::kernel_basis(&predual, tol.kernel_rel);
    let kernel_dim = kernel.len();

    // Hermitian slice: orthonormalize {X + X', i(X' - X)} over the reals.
    let mut herm_basis: Vec<CMat> = Vec::new();
    for v in &kernel {
        let x = devectorize(v)?;
        for cand in [
            (&x + x.adjoint()).scale(0.5),
            (&x - x.adjoint()) * C64::new(0.0, -0.5),
        ] {
            let mut w = cand;
            for b in &herm_basis {
                let ip = (b.adjoint() * &w).trace().re;
                w -= b * cr(ip);
            }
            let n = w.norm();
            if n > 1e-10 {
                let w = &w * cr(1.0 / n);
                // keep only directions genuinely in the kernel
                let res = (&predual * vectorize(&w)).norm();
                if res <= 1e-8 * (1.0 + smax) {
                    herm_basis.push(w);
                }
            }
        }
    }
    let hermitian_dim = herm_basis.len();

    let traces: Vec<f64> = herm_basis.iter().map(|b| b.trace().re).collect();
    let tnorm2: f64 = traces.iter().map(|t| t * t).sum();
    if tnorm2 < 1e-20 {
        return Ok(InvariantStates {
            kernel_dim,
            hermitian_dim,
            states: Vec::new(),
            psd_search_failed: hermitian_dim > 0,
            center_min_eig: f64::NEG_INFINITY,
        });
    }

    // Minimum-norm trace-one base point and trace-zero directions.
    let mut base = CMat::zeros(d, d);
    for (b, &t) in herm_basis.iter().zip(&traces) {
        base += b * cr(t / tnorm2);
    }
    let mut directions: Vec<CMat> = Vec::new();
    {
        // real Gram-Schmidt of e_i against t-hat within coefficient space
        let that: Vec<f64> = traces.iter().map(|t| t / tnorm2.sqrt()).collect();
        let mut got: Vec<Vec<f64>> = Vec::new();
        for i in 0..herm_basis.len() {
            let mut q: Vec<f64> = (0..herm_basis.len())
                .map(|j| if i == j { 1.0 } else { 0.0 })
                .collect();
            let ip: f64 = q.iter().zip(&that).map(|(a, b)| a * b).sum();
            for (qj, tj) in q.iter_mut().zip(&that) {
                *qj -= ip * tj;
            }
            for prev in &got {
                let ip: f64 = q.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (qj, pj) in q.iter_mut().zip(prev) {
                    *qj -= ip * pj;
                }
            }
            let n: f64 = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-10 {
                for qj in q.iter_mut() {
                    *qj /= n;
                }
                let mut dmat = CMat::zeros(d, d);
                for (b, &qj) in herm_basis.iter().zip(&q) {
                    dmat += b * cr(qj);
                }
                directions.push(dmat);
                got.push(q);
            }
        }
    }

    // Maximize the minimum eigenvalue over the trace-one slice by
    // subgradient ascent (concave objective, small dimensions).
    let min_eig_of = |w: &CMat| -> Result<(f64, CVec)> {
        let (vals, vecs) = herm_eig(&HermMat::symmetrized(w.clone()))?;
        Ok((vals[0], vecs.column(0).into_owned()))
    };
    let mut center = base.clone();
    let (mut best, _) = min_eig_of(&center)?;
    if !directions.is_empty() {
        let mut step = 0.5;
        for _ in 0..400 {
            let (cur, v) = min_eig_of(&center)?;
            best = cur;
            let grad: Vec<f64> = directions
                .iter()
                .map(|dm| (v.adjoint() * dm * &v)[(0, 0)].re)
                .collect();
            let gnorm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm < 1e-13 || step < 1e-13 {
                break;
            }
            let mut trial = center.clone();
            for (dm, &g) in directions.iter().zip(&grad) {
                trial += dm * cr(step * g / gnorm);
            }
            let (tval, _) = min_eig_of(&trial)?;
            if tval > cur + 1e-16 {
                center = trial;
                best = tval;
                step *= 1.3;
            } else {
                step *= 0.5;
            }
        }
    }

    if best < -1e-12 {
        return Ok(InvariantStates {
            kernel_dim,
            hermitian_dim,
            states: Vec::new(),
            psd_search_failed: true,
            center_min_eig: best,
        });
    }

    // Tiny negative roundoff: renormalize against the identity.
    if best < 0.0 {
        let lift = -best + 1e-15;
        center = (center + eye(d) * cr(lift)) * cr(1.0 / (1.0 + d as f64 * lift));
        best = min_eig_of(&center)?.0;
    }

    let mut states = Vec::new();
    let center_state = DensityState::new(center.clone(), tol)?;
    states.push(center_state);
    if best > 1e-12 {
        for dm in &directions {
            let eps = 0.45 * best / dm.norm();
            let candidate = &center + dm * cr(eps);
            if let Ok(st) = DensityState::new(candidate, tol) {
                let res = (&predual * vectorize(st.matrix())).norm();
                if res <= 1e-9 * (1.0 + smax) {
                    states.push(st);
                }
            }
        }
    }

    Ok(InvariantStates {
        kernel_dim,
        hermitian_dim,
        states,
        psd_search_failed: false,
        center_min_eig: best,
    })
}
