//! Built-in example problems, each with the density that generated it when
//! there is one.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{BuiltinKernel, GridSpec, KernelSpec, MatrixJson, ProblemFile};
use crate::operator::MatrixDensity;
use crate::problems::array::default_positions;
use crate::problems::density::{synth_density, Bump, DensitySpec};
use crate::problems::quantum::bell_state;
use crate::problems::statecov::spectral_radius;
use crate::scalar::{cx, ComplexMatrix};

pub const EXAMPLE_NAMES: [&str; 5] = ["nonequispaced-array", "grid2d", "bell", "statecov", "scalar-demo"];

#[derive(Clone, Debug)]
pub struct ExampleBundle {
    pub name: &'static str,
    pub problem: ProblemFile,
    pub rho_true: Option<MatrixDensity<f64>>,
    /// Family the example is meant to be solved with.
    pub family: &'static str,
}

fn with_moment(
    grid: GridSpec,
    kernels: KernelSpec,
    rho: Option<&MatrixDensity<f64>>,
    fixed: Option<ComplexMatrix<f64>>,
) -> Result<ProblemFile> {
    let mut problem = ProblemFile {
        grid,
        kernels,
        moment: MatrixJson {
            rows: 0,
            cols: 0,
            data: vec![],
        },
        rho_true: None,
    };
    let r = match (rho, fixed) {
        (_, Some(r)) => r,
        (Some(rho), None) => problem.operator::<f64>()?.apply(rho)?,
        (None, None) => return Err(Error::invalid("example needs a moment")),
    };
    problem.moment = MatrixJson::from_matrix(&r);
    Ok(problem)
}

fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        cx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// A random stable pair `(A, B)` with `n` states, `m` inputs and spectral
/// radius 0.8.
pub fn random_state_space(seed: u64, n: usize, m: usize) -> Result<(ComplexMatrix<f64>, ComplexMatrix<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_complex(&mut rng, n, n);
    let rho = spectral_radius(&a)?;
    let a = a.map(|z| z * (0.8 / rho));
    Ok((a, random_complex(&mut rng, n, m)))
}

/// Builds the named example. `seed` drives the random pieces (the grid2d
/// density and the state-space model).
pub fn example(name: &str, seed: u64) -> Result<ExampleBundle> {
    let pi = std::f64::consts::PI;
    match name {
        "scalar-demo" => {
            let problem = with_moment(
                GridSpec::Interval1d {
                    bounds: [0.0, 1.0],
                    panels: 4,
                    order: 4,
                    scale: 1.0,
                },
                KernelSpec::Builtin(BuiltinKernel::Constant { m: 1 }),
                None,
                Some(DMatrix::from_element(1, 1, cx(2.0, 0.0))),
            )?;
            Ok(ExampleBundle {
                name: "scalar-demo",
                problem,
                rho_true: None,
                family: "rational",
            })
        }
        "nonequispaced-array" => {
            let grid = GridSpec::Interval1d {
                bounds: [0.0, pi],
                panels: 64,
                order: 6,
                scale: 1.0,
            };
            let rho = synth_density(&DensitySpec::array_demo(), &grid.build::<f64>()?)?;
            let kernels = KernelSpec::Builtin(BuiltinKernel::Array {
                positions: default_positions(),
                wavenumber: 1.0,
            });
            let problem = with_moment(grid, kernels, Some(&rho), None)?;
            Ok(ExampleBundle {
                name: "nonequispaced-array",
                problem,
                rho_true: Some(rho),
                family: "rational",
            })
        }
        "grid2d" => {
            let grid = GridSpec::Rectangle2d {
                bounds: [[0.0, pi], [0.0, pi]],
                panels: 8,
                order: 5,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bumps = (0..2)
                .map(|_| Bump {
                    center: vec![rng.random_range(0.5..2.6), rng.random_range(0.5..2.6)],
                    width: rng.random_range(0.3..0.6),
                    height: rng.random_range(0.5..1.5),
                })
                .collect();
            let spec = DensitySpec::Bumps {
                floor: 0.1,
                bumps,
                steps: vec![],
            };
            let rho = synth_density(&spec, &grid.build::<f64>()?)?;
            let problem = with_moment(grid, KernelSpec::Builtin(BuiltinKernel::Grid2d { n: 2 }), Some(&rho), None)?;
            Ok(ExampleBundle {
                name: "grid2d",
                problem,
                rho_true: Some(rho),
                family: "exponential",
            })
        }
        "bell" => {
            let grid = GridSpec::Discrete { count: 2 };
            let kernels = KernelSpec::Builtin(BuiltinKernel::PartialTrace { d_a: 2, d_b: 2 });
            let bell = MatrixDensity::constant(2, bell_state::<f64>());
            let problem = with_moment(grid, kernels, Some(&bell), None)?;
            Ok(ExampleBundle {
                name: "bell",
                problem,
                rho_true: None,
                family: "exponential",
            })
        }
        "statecov" => {
            let (a, b) = random_state_space(seed, 4, 2)?;
            let grid = GridSpec::Interval1d {
                bounds: [-pi, pi],
                panels: 64,
                order: 6,
                scale: 1.0 / (2.0 * pi),
            };
            let spec = DensitySpec::Random {
                seed,
                m: 2,
                modes: 3,
                floor: 0.2,
            };
            let rho = synth_density(&spec, &grid.build::<f64>()?)?;
            let kernels = KernelSpec::Builtin(BuiltinKernel::StateCov {
                a: MatrixJson::from_matrix(&a),
                b: MatrixJson::from_matrix(&b),
                c_o: None,
            });
            let problem = with_moment(grid, kernels, Some(&rho), None)?;
            Ok(ExampleBundle {
                name: "statecov",
                problem,
                rho_true: Some(rho),
                family: "rational",
            })
        }
        other => Err(Error::invalid(format!(
            "unknown example {other:?}; valid names: {}",
            EXAMPLE_NAMES.join(", ")
        ))),
    }
}
