//! JSON wire formats: instance files, analysis reports, and a serializer
//! writing every float with 17 significant digits so reports are
//! byte-identical across runs.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};

use qms_core::matrices::{CMat, C64};
use qms_core::{DensityState, GkslRep, HermMat, Tolerances};

/// Complex matrix as row-major `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixWire {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixWire {
    pub fn from_mat(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixWire {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_mat(&self) -> anyhow::Result<CMat> {
        if self.data.len() != self.rows * self.cols {
            anyhow::bail!(
                "matrix data length {} does not match {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            );
        }
        let entries: Vec<C64> = self.data.iter().map(|p| C64::new(p[0], p[1])).collect();
        Ok(qms_core::matrices::cmat_from_rows(
            self.rows, self.cols, &entries,
        )?)
    }
}

/// Tolerance overrides carried by an instance file. `scale` multiplies all
/// defaults; the named fields then override individual entries.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ToleranceOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub faithful: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ccp: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base_scale: f64) -> Tolerances {
        let mut t = Tolerances::scaled(self.scale.unwrap_or(1.0) * base_scale);
        if let Some(x) = self.faithful {
            t.faithful = x;
        }
        if let Some(x) = self.invariance {
            t.invariance = x;
        }
        if let Some(x) = self.comm {
            t.comm = x;
        }
        if let Some(x) = self.db {
            t.db = x;
        }
        if let Some(x) = self.ccp {
            t.ccp = x;
        }
        t
    }
}

/// An analysis instance: either `(hamiltonian, lindblad_ops)` or a raw
/// `superoperator`, with an optional reference state and s-value list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<MatrixWire>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lindblad_ops: Option<Vec<MatrixWire>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub superoperator: Option<MatrixWire>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<MatrixWire>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
}

impl InstanceFile {
    pub fn validate(&self) -> anyhow::Result<()> {
        let has_ops = self.hamiltonian.is_some() || self.lindblad_ops.is_some();
        let has_super = self.superoperator.is_some();
        if has_ops == has_super {
            anyhow::bail!(
                "exactly one of (hamiltonian, lindblad_ops) or superoperator must be present"
            );
        }
        let d = self.dim;
        let check = |m: &MatrixWire, what: &str, r: usize, c: usize| -> anyhow::Result<()> {
            if m.rows != r || m.cols != c {
                anyhow::bail!("{what} must be {r}x{c}, got {}x{}", m.rows, m.cols);
            }
            Ok(())
        };
        if let Some(h) = &self.hamiltonian {
            check(h, "hamiltonian", d, d)?;
        }
        if let Some(ls) = &self.lindblad_ops {
            for (k, l) in ls.iter().enumerate() {
                check(l, &format!("lindblad_ops[{k}]"), d, d)?;
            }
        }
        if let Some(s) = &self.superoperator {
            check(s, "superoperator", d * d, d * d)?;
        }
        if let Some(r) = &self.rho {
            check(r, "rho", d, d)?;
        }
        if let Some(ss) = &self.s_values {
            if ss.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
                anyhow::bail!("s_values must lie in [0, 1]");
            }
        }
        Ok(())
    }

    pub fn from_rep(id: &str, rep: &GkslRep, rho: Option<&DensityState>) -> Self {
        InstanceFile {
            id: Some(id.to_string()),
            dim: rep.dim(),
            hamiltonian: Some(MatrixWire::from_mat(rep.hamiltonian().mat())),
            lindblad_ops: Some(rep.ops().iter().map(MatrixWire::from_mat).collect()),
            superoperator: None,
            rho: rho.map(|r| MatrixWire::from_mat(r.matrix())),
            s_values: None,
            tolerances: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StationaryWire {
    pub kernel_dim: usize,
    pub hermitian_dim: usize,
    pub psd_search_failed: bool,
    pub center_min_eig: f64,
    pub states: Vec<MatrixWire>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpecialRepWire {
    pub hamiltonian: MatrixWire,
    pub lindblad_ops: Vec<MatrixWire>,
    /// Choi eigenvalues of the completely positive part: the squared
    /// Frobenius norms of the HS-orthogonal operators, descending.
    pub choi_spectrum: Vec<f64>,
}

impl SpecialRepWire {
    pub fn from_rep(rep: &GkslRep) -> Self {
        SpecialRepWire {
            hamiltonian: MatrixWire::from_mat(rep.hamiltonian().mat()),
            lindblad_ops: rep.ops().iter().map(MatrixWire::from_mat).collect(),
            choi_spectrum: rep.ops().iter().map(|l| l.norm() * l.norm()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModularWire {
    pub commutes: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrivilegedWire {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DualWire {
    pub s: f64,
    pub is_star_map: bool,
    pub is_qms: bool,
    pub residuals: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceWire {
    pub s: f64,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<MatrixWire>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_residual: Option<f64>,
    pub k_commutes_rho: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intertwiner: Option<MatrixWire>,
    pub details: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<String>,
}

impl BalanceWire {
    pub fn from_report(r: &qms_core::balance::BalanceReport) -> Self {
        BalanceWire {
            s: r.s,
            holds: r.holds,
            k: r.k.as_ref().map(|k: &HermMat| MatrixWire::from_mat(k.mat())),
            k_residual: finite(r.k_residual),
            k_commutes_rho: r.k_commutes_rho,
            intertwiner: r.intertwiner.as_ref().map(MatrixWire::from_mat),
            details: r
                .details
                .iter()
                .filter_map(|(k, &v)| finite(v).map(|v| (k.clone(), v)))
                .collect(),
            failure_reason: r.failure_reason.clone(),
        }
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct ToleranceReportWire {
    pub faithful: f64,
    pub invariance: f64,
    pub comm: f64,
    pub db: f64,
    pub ccp: f64,
    pub unitary: f64,
}

impl ToleranceReportWire {
    pub fn from_tol(t: &Tolerances) -> Self {
        ToleranceReportWire {
            faithful: t.faithful,
            invariance: t.invariance,
            comm: t.comm,
            db: t.db,
            ccp: t.ccp,
            unitary: t.unitary,
        }
    }
}

/// Full machine-readable analysis report.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub id: String,
    pub dim: usize,
    pub version: String,
    pub tolerances: ToleranceReportWire,
    pub stationary: StationaryWire,
    pub state_used: MatrixWire,
    pub faithful: bool,
    pub min_eigenvalue: f64,
    pub special_rep: SpecialRepWire,
    pub modular_commutation: ModularWire,
    pub privileged: PrivilegedWire,
    pub duals: Vec<DualWire>,
    pub balance: Vec<BalanceWire>,
}

/// JSON formatter writing every float with 17 significant digits.
pub struct Sig17Formatter;

impl serde_json::ser::Formatter for Sig17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize with fixed field order and 17-significant-digit floats.
pub fn to_json_deterministic<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17Formatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out)?)
}
