//! Synthetic positive densities for experiments and tests.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::operator::grid::SupportGrid;
use crate::operator::MatrixDensity;
use crate::scalar::{cre, cx, Real};

/// A Gaussian bump `height · exp(−|x − center|² / 2 width²)` over the first
/// `center.len()` coordinates of a node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
    pub height: f64,
}

/// Adds `height` on `from ≤ θ < to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub from: f64,
    pub to: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    /// `value · I_m`.
    Constant { value: f64, m: usize },
    /// Scalar `floor + Σ bumps + Σ steps`.
    Bumps {
        floor: f64,
        bumps: Vec<Bump>,
        #[serde(default)]
        steps: Vec<Step>,
    },
    /// Scalar `low + (high − low)·1[from ≤ θ < to]`.
    Step { low: f64, high: f64, from: f64, to: f64 },
    /// `F(θ) · diag(b(θ), 2b(θ), …, m·b(θ)) · F(θ)*` for a scalar base
    /// density `b` and the unit lower-triangular
    /// `F_ab = coupling · e^{j(a+b)θ} / (1 + a + b)` (`a > b`).
    MatrixCongruence {
        base: Box<DensitySpec>,
        m: usize,
        coupling: f64,
    },
    /// `F F* + floor·I` with `F` an `m × m` random trigonometric polynomial
    /// of degree `modes` in each coordinate.
    Random { seed: u64, m: usize, modes: usize, floor: f64 },
}

impl DensitySpec {
    /// The scalar density on `[0, π]` used by the array demos: two Gaussian
    /// bumps at 0.9 and 2.2 rad on a floor of 0.2, plus a step of 0.6 on
    /// `[0.30, 0.45)`.
    pub fn array_demo() -> Self {
        DensitySpec::Bumps {
            floor: 0.2,
            bumps: vec![
                Bump {
                    center: vec![0.9],
                    width: 0.12,
                    height: 1.5,
                },
                Bump {
                    center: vec![2.2],
                    width: 0.25,
                    height: 0.8,
                },
            ],
            steps: vec![Step {
                from: 0.30,
                to: 0.45,
                height: 0.6,
            }],
        }
    }

    /// Size of the generated samples.
    pub fn m(&self) -> usize {
        match self {
            DensitySpec::Constant { m, .. } | DensitySpec::MatrixCongruence { m, .. } | DensitySpec::Random { m, .. } => *m,
            DensitySpec::Bumps { .. } | DensitySpec::Step { .. } => 1,
        }
    }

    fn scalar_at(&self, x: &[f64; 2]) -> Result<f64> {
        Ok(match self {
            DensitySpec::Constant { value, m: 1 } => *value,
            DensitySpec::Bumps { floor, bumps, steps } => {
                let mut v = *floor;
                for b in bumps {
                    let r2: f64 = b.center.iter().zip(x).map(|(c, xi)| (xi - c).powi(2)).sum();
                    v += b.height * (-r2 / (2.0 * b.width * b.width)).exp();
                }
                for s in steps {
                    if x[0] >= s.from && x[0] < s.to {
                        v += s.height;
                    }
                }
                v
            }
            DensitySpec::Step { low, high, from, to } => {
                if x[0] >= *from && x[0] < *to {
                    *high
                } else {
                    *low
                }
            }
            _ => return Err(Error::invalid("congruence base must be a scalar density")),
        })
    }

    fn validate(&self) -> Result<()> {
        match self {
            DensitySpec::Constant { m, .. } | DensitySpec::Random { m, .. } if *m == 0 => {
                Err(Error::invalid("m must be positive"))
            }
            DensitySpec::Bumps { bumps, .. }
                if bumps
                    .iter()
                    .any(|b| !(b.width > 0.0) || b.center.is_empty() || b.center.len() > 2) =>
            {
                Err(Error::invalid(
                    "bump widths must be positive with one or two center coordinates",
                ))
            }
            DensitySpec::MatrixCongruence { base, m, .. } => {
                if *m == 0 || base.m() != 1 {
                    return Err(Error::invalid("congruence needs m ≥ 1 and a scalar base"));
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }
}

/// Draws one real trigonometric polynomial in each node coordinate.
struct TrigPoly {
    coef: Vec<[f64; 4]>,
}

impl TrigPoly {
    fn draw(rng: &mut ChaCha8Rng, modes: usize) -> Self {
        let coef = (0..=modes)
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            .collect();
        Self { coef }
    }

    fn eval(&self, x: &[f64; 2]) -> f64 {
        self.coef
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let k = k as f64;
                c[0] * (k * x[0]).cos() + c[1] * (k * x[0]).sin() + c[2] * (k * x[1]).cos() + c[3] * (k * x[1]).sin()
            })
            .sum::<f64>()
            / (self.coef.len() as f64).sqrt()
    }
}

/// Samples `spec` at the grid nodes. Fails unless the result is positive
/// definite at every node.
pub fn synth_density<T: Real>(spec: &DensitySpec, grid: &SupportGrid<T>) -> Result<MatrixDensity<T>> {
    spec.validate()?;
    let nodes: Vec<[f64; 2]> = grid.nodes().iter().map(|p| [p[0].as_f64(), p[1].as_f64()]).collect();
    let samples: Vec<DMatrix<num_complex::Complex<f64>>> = match spec {
        DensitySpec::Constant { value, m } => nodes
            .iter()
            .map(|_| DMatrix::identity(*m, *m).map(|z: num_complex::Complex<f64>| z * *value))
            .collect(),
        DensitySpec::Bumps { .. } | DensitySpec::Step { .. } => nodes
            .iter()
            .map(|x| spec.scalar_at(x).map(|v| DMatrix::from_element(1, 1, cre(v))))
            .collect::<Result<_>>()?,
        DensitySpec::MatrixCongruence { base, m, coupling } => nodes
            .iter()
            .map(|x| {
                let b = base.scalar_at(x)?;
                let f = DMatrix::from_fn(*m, *m, |a, c| match a.cmp(&c) {
                    std::cmp::Ordering::Equal => cre(1.0),
                    std::cmp::Ordering::Less => cre(0.0),
                    std::cmp::Ordering::Greater => {
                        let phase = (a + c) as f64 * x[0];
                        cx(phase.cos(), phase.sin()) * (coupling / (1.0 + (a + c) as f64))
                    }
                });
                let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(*m, |k, _| cre(b * (k + 1) as f64)));
                Ok(&f * d * f.adjoint())
            })
            .collect::<Result<_>>()?,
        DensitySpec::Random { seed, m, modes, floor } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let re: Vec<TrigPoly> = (0..m * m).map(|_| TrigPoly::draw(&mut rng, *modes)).collect();
            let im: Vec<TrigPoly> = (0..m * m).map(|_| TrigPoly::draw(&mut rng, *modes)).collect();
            nodes
                .iter()
                .map(|x| {
                    let f = DMatrix::from_fn(*m, *m, |a, c| cx(re[a * m + c].eval(x), im[a * m + c].eval(x)));
                    &f * f.adjoint() + DMatrix::identity(*m, *m).map(|z: num_complex::Complex<f64>| z * *floor)
                })
                .collect()
        }
    };
    let density = MatrixDensity::new(
        samples
            .into_iter()
            .map(|s| HermitianMatrix::hermitian_part(&s.map(|z| cx(T::of(z.re), T::of(z.im)))))
            .collect::<Result<_>>()?,
    )?;
    let (min, node) = density.min_eigenvalue()?;
    if !(min > T::zero()) {
        return Err(Error::Positivity {
            eigenvalue: min.as_f64(),
            node: Some(node),
        });
    }
    Ok(density)
}
