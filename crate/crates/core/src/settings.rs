//! Numerical tolerances shared by every module.
//!
//! All verdict-producing operations take a [`Tolerances`] record so that a
//! whole analysis can be tightened or loosened coherently. Relative
//! tolerances are applied as `tol * max(1, scale)` where `scale` is the
//! Frobenius norm of the quantity being tested.

/// Tolerance settings for the whole toolkit.
#[derive(Debug, Clone)]
pub struct Tolerances {
    /// Hermiticity slack on construction of a `HermMat`, relative.
    pub herm: f64,
    /// Minimum eigenvalue for a state to count as faithful.
    pub faithful: f64,
    /// Singular values below `kernel_rel * sigma_max` are treated as zero
    /// when extracting the kernel of a predual generator.
    pub kernel_rel: f64,
    /// Choi eigenvalues below `choi_rel * gamma_max` are dropped when
    /// extracting Kraus operators.
    pub choi_rel: f64,
    /// Slack on the compressed Choi matrix in the conditional complete
    /// positivity test.
    pub ccp: f64,
    /// Unitality validation for generator-kind superoperators, relative.
    pub unital: f64,
    /// Hermiticity-preservation validation threshold, relative.
    pub star: f64,
    /// Modular commutation verdict threshold, relative.
    pub comm: f64,
    /// Hermiticity threshold for the modular restriction matrix in the
    /// orthonormalized Lindblad-operator span.
    pub y_herm: f64,
    /// Modular eigenvalues within this relative distance form one
    /// degenerate block in uniqueness analysis.
    pub lambda_cluster: f64,
    /// Detailed-balance commutator residual threshold, relative to the
    /// generator norm.
    pub db: f64,
    /// Unitarity threshold for recovered mixing matrices.
    pub unitary: f64,
    /// Invariance requirement on `||L_*(rho)||_F`.
    pub invariance: f64,
    /// Representation roundtrip match threshold, relative.
    pub rep_match: f64,
    /// `|tr(rho L_k)|` allowed for a representation to count as special.
    pub gauge: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-10,
            faithful: 1e-10,
            kernel_rel: 1e-10,
            choi_rel: 1e-10,
            ccp: 1e-9,
            unital: 1e-9,
            star: 1e-8,
            comm: 1e-9,
            y_herm: 1e-8,
            lambda_cluster: 1e-8,
            db: 1e-8,
            unitary: 1e-8,
            invariance: 1e-10,
            rep_match: 1e-9,
            gauge: 1e-11,
        }
    }
}

impl Tolerances {
    /// Multiply every tolerance by `factor`. Used by the CLI `--tol` flag.
    pub fn scaled(factor: f64) -> Self {
        let t = Tolerances::default();
        Tolerances {
            herm: t.herm * factor,
            faithful: t.faithful * factor,
            kernel_rel: t.kernel_rel * factor,
            choi_rel: t.choi_rel * factor,
            ccp: t.ccp * factor,
            unital: t.unital * factor,
            star: t.star * factor,
            comm: t.comm * factor,
            y_herm: t.y_herm * factor,
            lambda_cluster: t.lambda_cluster * factor,
            db: t.db * factor,
            unitary: t.unitary * factor,
            invariance: t.invariance * factor,
            rep_match: t.rep_match * factor,
            gauge: t.gauge * factor,
        }
    }
}
