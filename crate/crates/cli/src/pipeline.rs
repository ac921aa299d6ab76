//! The full analysis pipeline behind `qms analyze`:
//! stationary states -> special representation -> modular commutation ->
//! privileged representation -> s-duals -> detailed balance.

use anyhow::Context;

use qms_core::balance::detailed_balance_check;
use qms_core::duals::s_dual_generator;
use qms_core::gksl::{build_generator, special_rep_from_superoperator, GkslRep, Superoperator, SuperopKind};
use qms_core::matrices::vectorize;
use qms_core::modular::{commutes_with_modular, privileged_rep};
use qms_core::stationary::invariant_states;
use qms_core::{DensityState, Error, HermMat, Tolerances};

use crate::wire::{
    AnalysisReport, BalanceWire, DualWire, InstanceFile, MatrixWire, ModularWire, PrivilegedWire,
    SpecialRepWire, StationaryWire, ToleranceReportWire,
};

/// Failures mapped to process exit codes.
#[derive(Debug)]
pub enum PipelineError {
    /// Exit 1: malformed input.
    Input(String),
    /// Exit 2: analysis precondition failure.
    Precondition(String),
    /// Exit 3: internal inconsistency.
    Internal(String),
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipelineError::Input(m) => write!(f, "input error: {m}"),
            PipelineError::Precondition(m) => write!(f, "precondition failure: {m}"),
            PipelineError::Internal(m) => write!(f, "internal inconsistency: {m}"),
        }
    }
}

impl std::error::Error for PipelineError {}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input(_) => 1,
            PipelineError::Precondition(_) => 2,
            PipelineError::Internal(_) => 3,
        }
    }
}

fn classify(e: Error) -> PipelineError {
    match e {
        Error::ShapeMismatch(_)
        | Error::NonFinite
        | Error::NotHermitian { .. }
        | Error::InvalidState(_)
        | Error::InvalidInput(_)
        | Error::SOutOfRange { .. } => PipelineError::Input(e.to_string()),
        Error::NotFaithful { .. }
        | Error::NotGenerator(_)
        | Error::NotCcp { .. }
        | Error::NotInvariant { .. }
        | Error::RankDeficient { .. } => PipelineError::Precondition(e.to_string()),
        Error::NoPrivilegedRep(_) | Error::EigenFailed { .. } | Error::Internal(_) => {
            PipelineError::Internal(e.to_string())
        }
    }
}

/// Run the pipeline on a parsed instance.
pub fn analyze(
    instance: &InstanceFile,
    s_override: Option<&[f64]>,
    tol_scale: f64,
) -> Result<AnalysisReport, PipelineError> {
    instance
        .validate()
        .map_err(|e| PipelineError::Input(e.to_string()))?;
    let tol = instance
        .tolerances
        .clone()
        .unwrap_or_default()
        .apply(tol_scale);

    let superop = build_superoperator(instance, &tol)?;
    let d = superop.dim();

    // generator validation: Hermiticity preservation and conditional
    // complete positivity
    let check = qms_core::gksl::check_generator(superop.mat(), d, &tol).map_err(classify)?;
    if !check.is_generator {
        return Err(PipelineError::Precondition(format!(
            "not a QMS generator: unital residual {:.3e}, Choi asymmetry {:.3e}, min compressed Choi eigenvalue {:.3e}",
            check.unital_residual,
            check.herm_preservation_residual,
            check.min_compressed_choi_eig
        )));
    }

    let inv = invariant_states(&superop, &tol).map_err(classify)?;
    let stationary = StationaryWire {
        kernel_dim: inv.kernel_dim,
        hermitian_dim: inv.hermitian_dim,
        psd_search_failed: inv.psd_search_failed,
        center_min_eig: inv.center_min_eig,
        states: inv
            .states
            .iter()
            .map(|s| MatrixWire::from_mat(s.matrix()))
            .collect(),
    };

    let rho = match &instance.rho {
        Some(wire) => {
            let mat = wire
                .to_mat()
                .map_err(|e| PipelineError::Input(e.to_string()))?;
            let state = DensityState::new(mat, &tol)
                .map_err(|e| PipelineError::Input(format!("rho: {e}")))?;
            let res = (superop.mat().adjoint() * vectorize(state.matrix())).norm();
            if res > tol.invariance * 1.0_f64.max(superop.mat().norm()) {
                return Err(PipelineError::Precondition(format!(
                    "supplied rho is not invariant (residual {res:.3e})"
                )));
            }
            state
        }
        None => inv
            .states
            .first()
            .cloned()
            .ok_or_else(|| {
                PipelineError::Precondition("no invariant density matrix found".into())
            })?,
    };
    if !rho.is_faithful() {
        return Err(PipelineError::Precondition(format!(
            "no faithful invariant state (minimum eigenvalue {:.3e})",
            rho.min_eig()
        )));
    }

    let special = special_rep_from_superoperator(&superop, &rho, &tol).map_err(classify)?;
    let (commutes, residual) = commutes_with_modular(&superop, &rho, &tol).map_err(classify)?;

    let privileged = match privileged_rep(&special, &rho, &tol) {
        Ok(p) => PrivilegedWire {
            lambdas: Some(p.lambdas),
            failure_reason: None,
        },
        Err(Error::NoPrivilegedRep(reason)) => PrivilegedWire {
            lambdas: None,
            failure_reason: Some(reason),
        },
        Err(e) => return Err(classify(e)),
    };

    let s_values: Vec<f64> = s_override
        .map(|s| s.to_vec())
        .or_else(|| instance.s_values.clone())
        .unwrap_or_else(|| vec![0.0, 0.5]);

    let mut duals = Vec::new();
    let mut balance = Vec::new();
    for &s in &s_values {
        let dual = s_dual_generator(&superop, &rho, s, &tol).map_err(classify)?;
        duals.push(DualWire {
            s,
            is_star_map: dual.is_star_map,
            is_qms: dual.is_qms,
            residuals: dual.residuals.clone(),
        });
        let report = detailed_balance_check(&superop, &rho, s, &tol).map_err(classify)?;
        balance.push(BalanceWire::from_report(&report));
    }

    Ok(AnalysisReport {
        id: instance.id.clone().unwrap_or_else(|| "unnamed".into()),
        dim: d,
        version: env!("CARGO_PKG_VERSION").to_string(),
        tolerances: ToleranceReportWire::from_tol(&tol),
        stationary,
        state_used: MatrixWire::from_mat(rho.matrix()),
        faithful: rho.is_faithful(),
        min_eigenvalue: rho.min_eig(),
        special_rep: SpecialRepWire::from_rep(&special),
        modular_commutation: ModularWire {
            commutes,
            residual,
        },
        privileged,
        duals,
        balance,
    })
}

fn build_superoperator(
    instance: &InstanceFile,
    tol: &Tolerances,
) -> Result<Superoperator, PipelineError> {
    if let Some(wire) = &instance.superoperator {
        let mat = wire
            .to_mat()
            .map_err(|e| PipelineError::Input(e.to_string()))?;
        return Superoperator::new(mat, SuperopKind::Generator, tol)
            .map_err(|e| PipelineError::Precondition(e.to_string()));
    }
    let d = instance.dim;
    let h = match &instance.hamiltonian {
        Some(wire) => {
            let mat = wire
                .to_mat()
                .map_err(|e| PipelineError::Input(e.to_string()))?;
            HermMat::new(mat, tol.herm).map_err(|e| PipelineError::Input(e.to_string()))?
        }
        None => HermMat::zeros(d),
    };
    let ops = match &instance.lindblad_ops {
        Some(wires) => wires
            .iter()
            .map(|w| w.to_mat())
            .collect::<anyhow::Result<Vec<_>>>()
            .map_err(|e| PipelineError::Input(e.to_string()))?,
        None => Vec::new(),
    };
    let rep = GkslRep::new(h, ops).map_err(|e| PipelineError::Input(e.to_string()))?;
    Ok(build_generator(&rep))
}

/// Parse and analyze a file on disk.
pub fn analyze_path(
    path: &std::path::Path,
    s_override: Option<&[f64]>,
    tol_scale: f64,
) -> Result<AnalysisReport, PipelineError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| PipelineError::Input(e.to_string()))?;
    let instance: InstanceFile = serde_json::from_str(&text)
        .map_err(|e| PipelineError::Input(format!("parsing {}: {e}", path.display())))?;
    analyze(&instance, s_override, tol_scale)
}
