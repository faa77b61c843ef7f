//! Quadrature discretization of the support set.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shape of the support set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    Interval1d,
    Rectangle2d,
    /// Finitely many indexed points with unit weights (sums instead of integrals).
    Discrete,
}

impl GridKind {
    pub fn name(self) -> &'static str {
        match self {
            GridKind::Interval1d => "interval1d",
            GridKind::Rectangle2d => "rectangle2d",
            GridKind::Discrete => "discrete",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "interval1d" => Ok(GridKind::Interval1d),
            "rectangle2d" => Ok(GridKind::Rectangle2d),
            "discrete" => Ok(GridKind::Discrete),
            other => Err(Error::invalid(format!("unknown grid kind {other:?}"))),
        }
    }
}

/// Quadrature nodes and positive weights on the support set.
///
/// Weights sum to `measure`. For continuous kinds this is the geometric
/// measure of the set times `normalization` (1 unless the grid was
/// [`scaled`](SupportGrid::scaled)).
#[derive(Clone, Debug, PartialEq)]
pub struct SupportGrid<T: Real> {
    kind: GridKind,
    bounds: Vec<(T, T)>,
    panels: usize,
    order: usize,
    normalization: T,
    nodes: Vec<[T; 2]>,
    weights: Vec<T>,
    measure: T,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n(z) and P_{n-1}(z).
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let step = pn / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn axis_rule(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

impl<T: Real> SupportGrid<T> {
    /// Composite Gauss–Legendre rule with `panels` equal panels of `order`
    /// points per axis; 2-D grids are tensor products (first axis outer).
    pub fn build(kind: GridKind, bounds: &[(T, T)], panels: usize, order: usize) -> Result<Self> {
        let axes = match kind {
            GridKind::Interval1d => 1,
            GridKind::Rectangle2d => 2,
            GridKind::Discrete => {
                return Err(Error::invalid("use SupportGrid::discrete for index sets"));
            }
        };
        if bounds.len() != axes {
            return Err(Error::invalid(format!("{} needs {axes} bound pair(s)", kind.name())));
        }
        if panels == 0 {
            return Err(Error::invalid("panels must be at least 1"));
        }
        if !(2..=10).contains(&order) {
            return Err(Error::invalid(format!("quadrature order {order} outside 2..=10")));
        }
        for &(a, b) in bounds {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::invalid("bounds must be finite and increasing"));
            }
        }
        let rules: Vec<_> = bounds
            .iter()
            .map(|&(a, b)| axis_rule(a.as_f64(), b.as_f64(), panels, order))
            .collect();
        let (nodes, weights): (Vec<[T; 2]>, Vec<T>) = if axes == 1 {
            let (x, w) = &rules[0];
            x.iter().zip(w).map(|(&x, &w)| ([T::of(x), T::zero()], T::of(w))).unzip()
        } else {
            let (x, wx) = &rules[0];
            let (y, wy) = &rules[1];
            let mut nodes = Vec::with_capacity(x.len() * y.len());
            let mut weights = Vec::with_capacity(x.len() * y.len());
            for (xi, wxi) in x.iter().zip(wx) {
                for (yj, wyj) in y.iter().zip(wy) {
                    nodes.push([T::of(*xi), T::of(*yj)]);
                    weights.push(T::of(wxi * wyj));
                }
            }
            (nodes, weights)
        };
        let measure = bounds.iter().fold(T::one(), |acc, &(a, b)| acc * (b - a));
        Ok(Self {
            kind,
            bounds: bounds.to_vec(),
            panels,
            order,
            normalization: T::one(),
            nodes,
            weights,
            measure,
        })
    }

    /// `count` index nodes `0..count` with unit weights.
    pub fn discrete(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("discrete grid needs at least one node"));
        }
        Ok(Self {
            kind: GridKind::Discrete,
            bounds: vec![(T::zero(), T::of_usize(count - 1))],
            panels: count,
            order: 1,
            normalization: T::one(),
            nodes: (0..count).map(|k| [T::of_usize(k), T::zero()]).collect(),
            weights: vec![T::one(); count],
            measure: T::of_usize(count),
        })
    }

    /// Multiplies every weight (and the measure) by `factor`, e.g. `1/2π` for a
    /// normalized measure on the circle.
    pub fn scaled(mut self, factor: T) -> Result<Self> {
        if !(factor > T::zero() && factor.is_finite()) {
            return Err(Error::invalid("grid scale factor must be positive"));
        }
        for w in &mut self.weights {
            *w *= factor;
        }
        self.measure *= factor;
        self.normalization *= factor;
        Ok(self)
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Dimension of the support set (0 for discrete index sets).
    pub fn dimension(&self) -> usize {
        match self.kind {
            GridKind::Interval1d => 1,
            GridKind::Rectangle2d => 2,
            GridKind::Discrete => 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }

    /// First coordinate of each node.
    pub fn thetas(&self) -> impl Iterator<Item = T> + '_ {
        self.nodes.iter().map(|p| p[0])
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn measure(&self) -> T {
        self.measure
    }

    pub fn bounds(&self) -> &[(T, T)] {
        &self.bounds
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn normalization(&self) -> T {
        self.normalization
    }

    /// Quadrature sum `Σ w_j f(node_j)`, accumulated in node order.
    pub fn integrate(&self, f: impl Fn(&[T; 2]) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (p, &w)| acc + w * f(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn two_point_rule_on_unit_interval() {
        let g = SupportGrid::<f64>::build(GridKind::Interval1d, &[(0.0, 1.0)], 1, 2).unwrap();
        assert_eq!(g.len(), 2);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let s = 0.5 / 3f64.sqrt();
        assert!((g.nodes()[0][0] - (0.5 - s)).abs() < 1e-15);
    }

    #[test]
    fn integrates_sine() {
        let g = SupportGrid::<f64>::build(GridKind::Interval1d, &[(0.0, PI)], 8, 5).unwrap();
        assert!((g.integrate(|p| p[0].sin()) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rectangle_measure() {
        let g = SupportGrid::<f64>::build(GridKind::Rectangle2d, &[(0.0, PI), (0.0, PI)], 4, 3).unwrap();
        assert_eq!(g.len(), 144);
        assert!((g.measure() - PI * PI).abs() < 1e-12);
        assert!((g.weights().iter().sum::<f64>() - PI * PI).abs() < 1e-12 * PI * PI);
        assert!(g.nodes().iter().all(|p| p[0] > 0.0 && p[0] < PI && p[1] > 0.0 && p[1] < PI));
    }

    #[test]
    fn polynomial_exactness_per_order() {
        for q in 2..=10 {
            let g = SupportGrid::<f64>::build(GridKind::Interval1d, &[(-0.3, 1.7)], 3, q).unwrap();
            let deg = 2 * q - 1;
            let exact = (1.7f64.powi(deg as i32 + 1) - (-0.3f64).powi(deg as i32 + 1)) / (deg + 1) as f64;
            let got = g.integrate(|p| p[0].powi(deg as i32));
            assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1.0), "order {q}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SupportGrid::<f64>::build(GridKind::Interval1d, &[(1.0, 0.0)], 2, 3).is_err());
        assert!(SupportGrid::<f64>::build(GridKind::Interval1d, &[(0.0, 1.0)], 0, 3).is_err());
        assert!(SupportGrid::<f64>::build(GridKind::Interval1d, &[(0.0, 1.0)], 2, 11).is_err());
        assert!(SupportGrid::<f64>::build(GridKind::Interval1d, &[(0.0, f64::INFINITY)], 2, 3).is_err());
        assert!(SupportGrid::<f64>::discrete(0).is_err());
    }

    #[test]
    fn scaling_keeps_weight_sum() {
        let g = SupportGrid::<f64>::build(GridKind::Interval1d, &[(-PI, PI)], 16, 5)
            .unwrap()
            .scaled(1.0 / (2.0 * PI))
            .unwrap();
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-13);
        assert!((g.measure() - 1.0).abs() < 1e-15);
    }
}
