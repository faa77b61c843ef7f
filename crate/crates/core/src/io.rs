//! File formats: matrix JSON, density and trace CSV, problem files and
//! solve reports.
//!
//! Floats are written so that they read back bit-for-bit: JSON numbers use
//! the shortest round-trip representation, CSV uses 17 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::homotopy::{SolveReport, TracePoint};
use crate::operator::grid::{GridKind, SupportGrid};
use crate::operator::kernels::KernelSamples;
use crate::operator::{MatrixDensity, MomentOperator};
use crate::problems::array::ArraySpec;
use crate::problems::statecov::StateSpaceModel;
use crate::problems::{grid2d_problem, nonequispaced_array_problem, partial_trace_problem, state_cov_problem};
use crate::scalar::{cx, ComplexMatrix, Real};

/// `{"rows": n, "cols": m, "data": [[re, im], ...]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix<T: Real>(m: &ComplexMatrix<T>) -> Self {
        let (rows, cols) = m.shape();
        let data = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| [m[(r, c)].re.as_f64(), m[(r, c)].im.as_f64()])
            .collect();
        Self { rows, cols, data }
    }

    pub fn to_matrix<T: Real>(&self) -> Result<ComplexMatrix<T>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Format(format!(
                "matrix JSON has {} entries for {}×{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        if self.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Format("matrix JSON contains non-finite entries".into()));
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |r, c| {
            let [re, im] = self.data[r * self.cols + c];
            cx(T::of(re), T::of(im))
        }))
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn coordinate_names(grid_dim: usize) -> &'static [&'static str] {
    match grid_dim {
        2 => &["theta", "phi"],
        0 => &["index"],
        _ => &["theta"],
    }
}

/// One row per node: node coordinates, then `ρ` entries as `re, im` pairs
/// in row-major order. The first line is a header.
pub fn write_density_csv<T: Real, W: Write>(mut w: W, grid: &SupportGrid<T>, rho: &MatrixDensity<T>) -> Result<()> {
    if rho.len() != grid.len() {
        return Err(Error::dim(format!("{} samples on a {}-node grid", rho.len(), grid.len())));
    }
    let coords = coordinate_names(grid.dimension());
    let m = rho.m();
    let mut header: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
    for a in 0..m {
        for b in 0..m {
            header.push(format!("rho_{a}_{b}_re"));
            header.push(format!("rho_{a}_{b}_im"));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for (p, s) in grid.nodes().iter().zip(rho.samples()) {
        let mut row: Vec<String> = p[..coords.len()].iter().map(|v| fmt17(v.as_f64())).collect();
        for z in s.as_matrix().transpose().iter() {
            row.push(fmt17(z.re.as_f64()));
            row.push(fmt17(z.im.as_f64()));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a density CSV written by [`write_density_csv`]. Node coordinates
/// must match `grid` to `1e-12`.
pub fn read_density_csv<T: Real, R: Read>(r: R, grid: &SupportGrid<T>) -> Result<MatrixDensity<T>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let ncoord = coordinate_names(grid.dimension()).len();
    let width = reader.headers().map_err(|e| Error::Format(e.to_string()))?.len();
    let entries = width
        .checked_sub(ncoord)
        .filter(|e| *e > 0 && e % 2 == 0)
        .ok_or_else(|| Error::Format("bad density CSV header".into()))?
        / 2;
    let m = (entries as f64).sqrt().round() as usize;
    if m * m != entries {
        return Err(Error::Format(format!("{entries} entries per row is not a square matrix")));
    }
    let mut samples = Vec::with_capacity(grid.len());
    for (j, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        let vals: Vec<f64> = record
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Format(format!("row {j}: {e}"))))
            .collect::<Result<_>>()?;
        let node = grid
            .nodes()
            .get(j)
            .ok_or_else(|| Error::Format("more rows than grid nodes".into()))?;
        for (k, v) in vals[..ncoord].iter().enumerate() {
            if (node[k].as_f64() - v).abs() > 1e-12 * (1.0 + v.abs()) {
                return Err(Error::Format(format!("row {j} does not sit on grid node {j}")));
            }
        }
        let mat = DMatrix::from_fn(m, m, |a, b| {
            let k = ncoord + 2 * (a * m + b);
            cx(T::of(vals[k]), T::of(vals[k + 1]))
        });
        samples.push(HermitianMatrix::new(mat)?);
    }
    if samples.len() != grid.len() {
        return Err(Error::Format(format!("{} rows for {} grid nodes", samples.len(), grid.len())));
    }
    MatrixDensity::new(samples)
}

/// Trace CSV with columns `t, V, min_eig, lambda_norm`.
pub fn write_trace_csv<T: Real, W: Write>(mut w: W, trace: &[TracePoint<T>]) -> Result<()> {
    writeln!(w, "t,V,min_eig,lambda_norm")?;
    for p in trace {
        writeln!(
            w,
            "{},{},{},{}",
            fmt17(p.t.as_f64()),
            fmt17(p.v.as_f64()),
            fmt17(p.min_eig.as_f64()),
            fmt17(p.lambda_norm.as_f64())
        )?;
    }
    Ok(())
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// Composite Gauss–Legendre on `[a, b]`; weights are multiplied by
    /// `scale` (e.g. `1/2π` for the normalized circle).
    Interval1d {
        bounds: [f64; 2],
        panels: usize,
        order: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    Rectangle2d {
        bounds: [[f64; 2]; 2],
        panels: usize,
        order: usize,
    },
    Discrete {
        count: usize,
    },
}

impl GridSpec {
    pub fn build<T: Real>(&self) -> Result<SupportGrid<T>> {
        match self {
            GridSpec::Interval1d {
                bounds,
                panels,
                order,
                scale,
            } => {
                let g = SupportGrid::build(GridKind::Interval1d, &[(T::of(bounds[0]), T::of(bounds[1]))], *panels, *order)?;
                if *scale == 1.0 {
                    Ok(g)
                } else {
                    g.scaled(T::of(*scale))
                }
            }
            GridSpec::Rectangle2d { bounds, panels, order } => {
                let b: Vec<(T, T)> = bounds.iter().map(|p| (T::of(p[0]), T::of(p[1]))).collect();
                SupportGrid::build(GridKind::Rectangle2d, &b, *panels, *order)
            }
            GridSpec::Discrete { count } => SupportGrid::discrete(*count),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BuiltinKernel {
    /// `G ≡ I_m` (moments are plain integrals of the density).
    Constant { m: usize },
    /// Linear sensor array; positions in wavelengths, first at 0.
    Array {
        positions: Vec<f64>,
        #[serde(default = "one")]
        wavenumber: f64,
    },
    /// Two-dimensional samples `R_{k,ℓ}`, `0 ≤ k, ℓ ≤ n`.
    Grid2d { n: usize },
    /// `trace_B` on a discrete grid with `d_b` nodes.
    PartialTrace { d_a: usize, d_b: usize },
    /// `G(θ) = (I − e^{jθ}A)⁻¹B`.
    StateCov {
        a: MatrixJson,
        b: MatrixJson,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_o: Option<MatrixJson>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum KernelSpec {
    Builtin(BuiltinKernel),
    /// Per-node samples; `right` defaults to the adjoint of `left`.
    Samples {
        left: Vec<MatrixJson>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        right: Option<Vec<MatrixJson>>,
    },
}

/// A moment problem on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub grid: GridSpec,
    pub kernels: KernelSpec,
    pub moment: MatrixJson,
    /// Path (relative to the problem file) of a density CSV that generated
    /// the moment, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_true: Option<String>,
}

impl KernelSpec {
    /// The state-space model of a `state_cov` kernel.
    pub fn state_space_model<T: Real>(&self) -> Result<Option<StateSpaceModel<T>>> {
        match self {
            KernelSpec::Builtin(BuiltinKernel::StateCov { a, b, c_o }) => {
                let c = c_o.as_ref().map(|c| c.to_matrix()).transpose()?;
                Ok(Some(StateSpaceModel::new(a.to_matrix()?, b.to_matrix()?, c)?))
            }
            _ => Ok(None),
        }
    }
}

impl ProblemFile {
    pub fn operator<T: Real>(&self) -> Result<MomentOperator<T>> {
        let grid = self.grid.build::<T>()?;
        match &self.kernels {
            KernelSpec::Builtin(BuiltinKernel::Constant { m }) => {
                let eye = DMatrix::identity(*m, *m);
                MomentOperator::new(grid.clone(), KernelSamples::symmetric(vec![eye; grid.len()])?)
            }
            KernelSpec::Builtin(BuiltinKernel::Array { positions, wavenumber }) => {
                let spec = ArraySpec::new(positions.iter().map(|&x| T::of(x)).collect(), T::of(*wavenumber), grid)?;
                nonequispaced_array_problem(&spec)
            }
            KernelSpec::Builtin(BuiltinKernel::Grid2d { n }) => grid2d_problem(*n, grid),
            KernelSpec::Builtin(BuiltinKernel::PartialTrace { d_a, d_b }) => {
                if grid.kind() != GridKind::Discrete || grid.len() != *d_b {
                    return Err(Error::invalid("partial trace needs a discrete grid with d_b nodes"));
                }
                partial_trace_problem(*d_a, *d_b)
            }
            KernelSpec::Builtin(BuiltinKernel::StateCov { .. }) => {
                let model = self.kernels.state_space_model()?.expect("state_cov kernel");
                state_cov_problem(&model, grid)
            }
            KernelSpec::Samples { left, right } => {
                let left: Vec<ComplexMatrix<T>> = left.iter().map(MatrixJson::to_matrix).collect::<Result<_>>()?;
                let kernels = match right {
                    Some(r) => KernelSamples::new(left, r.iter().map(MatrixJson::to_matrix).collect::<Result<_>>()?)?,
                    None => KernelSamples::symmetric(left)?,
                };
                MomentOperator::new(grid, kernels)
            }
        }
    }

    pub fn moment_matrix<T: Real>(&self) -> Result<ComplexMatrix<T>> {
        self.moment.to_matrix()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Machine-readable summary of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub status: String,
    pub family: String,
    pub lambda: MatrixJson,
    #[serde(rename = "V_final")]
    pub v_final: f64,
    pub entropy: Option<f64>,
    #[serde(rename = "fitted_V_slope")]
    pub fitted_v_slope: Option<f64>,
    pub iterations: usize,
    pub newton_iterations: usize,
    pub duality_pairing: f64,
    pub range_residual: f64,
    pub burg_entropy: Option<f64>,
    pub von_neumann_entropy: Option<f64>,
}

impl ReportJson {
    pub fn from_report<T: Real>(report: &SolveReport<T>, grid: &SupportGrid<T>) -> Self {
        use crate::operator::entropy::{entropy, EntropyKind};
        let diag = |kind| {
            report
                .density
                .as_ref()
                .and_then(|d| entropy(d, grid, kind).ok())
                .map(|v: T| v.as_f64())
        };
        Self {
            status: report.status.to_string(),
            family: report.family.to_string(),
            lambda: MatrixJson::from_matrix(report.lambda_hat.matrix()),
            v_final: report.v_final.as_f64(),
            entropy: report.entropy_value.map(|v| v.as_f64()),
            fitted_v_slope: report.fitted_v_slope.map(|v| v.as_f64()),
            iterations: report.iterations,
            newton_iterations: report.newton_iterations,
            duality_pairing: report.duality_pairing.as_f64(),
            range_residual: report.range_residual.as_f64(),
            burg_entropy: diag(EntropyKind::Burg),
            von_neumann_entropy: diag(EntropyKind::VonNeumann),
        }
    }
}
