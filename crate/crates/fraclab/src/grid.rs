//! Uniform discretization of the interval (-1, 1) with exterior-zero fields.
//!
//! The grid carries interior nodes only; the Dirichlet condition lives in the
//! convention that every [`ScalarField`] is identically zero outside the open
//! interval, including at the endpoints. `delta` is the distance to the
//! boundary, the weight that shows up in every regularity estimate here.

use crate::error::{Error, Result};
use serde::Serialize;
use std::sync::Arc;

/// Uniform grid on Ω = (-1, 1) with `n_interior` nodes at spacing `h = 2/(n+1)`.
#[derive(Debug, Clone, Serialize)]
pub struct Grid {
    pub n_interior: usize,
    pub h: f64,
    #[serde(skip)]
    pub nodes: Vec<f64>,
    #[serde(skip)]
    pub delta: Vec<f64>,
}

/// Build a grid with `n_interior >= 3` nodes.
pub fn build_grid(n_interior: usize) -> Result<Arc<Grid>> {
    if n_interior < 3 {
        return Err(Error::invalid(format!(
            "n_interior must be >= 3, got {n_interior}"
        )));
    }
    let h = 2.0 / (n_interior as f64 + 1.0);
    let nodes: Vec<f64> = (0..n_interior).map(|i| -1.0 + (i as f64 + 1.0) * h).collect();
    let delta: Vec<f64> = nodes.iter().map(|&x| 1.0 - x.abs()).collect();
    Ok(Arc::new(Grid {
        n_interior,
        h,
        nodes,
        delta,
    }))
}

impl Grid {
    /// Midpoint-rule integral of node samples: Σ f_i h, index-ascending.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        acc * self.h
    }
}

/// Grid-sampled function, implicitly zero on ℝ \ (-1, 1).
#[derive(Debug, Clone, Serialize)]
pub struct ScalarField {
    #[serde(skip)]
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_interior {
            return Err(Error::invalid(format!(
                "field length {} does not match grid size {}",
                values.len(),
                grid.n_interior
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.n_interior],
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: grid.nodes.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Power of the boundary distance, δ(x)^t.
    pub fn delta_pow(grid: &Arc<Grid>, t: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: grid.delta.iter().map(|&d| d.powf(t)).collect(),
        }
    }

    /// Power of the distance to an interior point, |x - center|^t.
    /// Fails if a node coincides with the center and t < 0.
    pub fn point_pow(grid: &Arc<Grid>, center: f64, t: f64) -> Result<Self> {
        let values: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&x| (x - center).abs().powf(t))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "point_pow({center}, {t}) is singular at a grid node"
            )));
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    /// Smooth bump of the given width at `center`, normalized so that the
    /// discrete mass Σ f_i h equals `mass` exactly.
    pub fn bump(grid: &Arc<Grid>, center: f64, width: f64, mass: f64) -> Result<Self> {
        if width <= 0.0 {
            return Err(Error::invalid("bump width must be positive"));
        }
        let raw: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&x| {
                let t = (x - center) / width;
                if t.abs() < 1.0 {
                    (-1.0 / (1.0 - t * t)).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let m = grid.integrate(&raw);
        if m <= 0.0 {
            return Err(Error::degenerate(
                "bump support does not contain any grid node",
            ));
        }
        let scale = mass / m;
        Ok(ScalarField {
            grid: grid.clone(),
            values: raw.into_iter().map(|v| v * scale).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// L^q norm on the grid, (Σ |f_i|^q h)^{1/q}.
    pub fn lq_norm(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for &v in &self.values {
            acc += v.abs().powf(q);
        }
        (acc * self.grid.h).powf(1.0 / q)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Componentwise a*self + b*other.
    pub fn axpy(&self, a: f64, other: &ScalarField, b: f64) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Largest componentwise excess max_i (self_i - other_i).
    pub fn max_excess_over(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(f64::NEG_INFINITY, |m, (&a, &b)| m.max(a - b))
    }
}

/// Pointwise truncation T_k: clamp to [-k, k]. Requires k > 0.
pub fn truncate(u: &ScalarField, k: f64) -> Result<ScalarField> {
    if !(k > 0.0) {
        return Err(Error::invalid(format!("truncation level must be > 0, got {k}")));
    }
    Ok(ScalarField {
        grid: u.grid.clone(),
        values: u.values.iter().map(|&v| v.clamp(-k, k)).collect(),
    })
}

/// Weighted gradient norm ( Σ |Du(x_i)|^q δ(x_i)^{q·w_exp} h )^{1/q}.
///
/// `w_exp = 0` gives the plain first-order seminorm; `w_exp = 1 - s` is the
/// boundary-compensated norm used throughout the regularity diagnostics.
/// Summation is index-ascending for reproducibility.
pub fn weighted_grad_norm(u: &ScalarField, q: f64, w_exp: f64) -> Result<f64> {
    if q < 1.0 {
        return Err(Error::invalid(format!("exponent q must be >= 1, got {q}")));
    }
    let du = crate::fraclap::gradient(u);
    let grid = &u.grid;
    let mut acc = 0.0;
    for i in 0..grid.n_interior {
        let w = if w_exp == 0.0 {
            1.0
        } else {
            grid.delta[i].powf(q * w_exp)
        };
        acc += du.values[i].abs().powf(q) * w;
    }
    Ok((acc * grid.h).powf(1.0 / q))
}

/// Result of a discrete Hardy-quotient evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HardyRatio {
    /// ∫ |φ|^p / δ^p dx  ÷  ∫ |Dφ|^p dx on the grid.
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// Set when both integrals vanish; the ratio is then 0 by convention.
    pub degenerate: bool,
}

/// Discrete Hardy quotient for a field vanishing at the boundary.
pub fn hardy_ratio(phi: &ScalarField, p: f64) -> Result<HardyRatio> {
    if p <= 1.0 {
        return Err(Error::invalid(format!("exponent p must be > 1, got {p}")));
    }
    let grid = &phi.grid;
    let dphi = crate::fraclap::gradient(phi);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..grid.n_interior {
        num += (phi.values[i].abs() / grid.delta[i]).powf(p);
        den += dphi.values[i].abs().powf(p);
    }
    num *= grid.h;
    den *= grid.h;
    if den == 0.0 {
        if num == 0.0 {
            return Ok(HardyRatio {
                ratio: 0.0,
                numerator: 0.0,
                denominator: 0.0,
                degenerate: true,
            });
        }
        return Err(Error::degenerate(
            "zero gradient integral with nonzero numerator",
        ));
    }
    Ok(HardyRatio {
        ratio: num / den,
        numerator: num,
        denominator: den,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grids_are_exact() {
        let g = build_grid(3).unwrap();
        assert_eq!(g.h, 0.5);
        assert_eq!(g.nodes, vec![-0.5, 0.0, 0.5]);
        assert_eq!(g.delta, vec![0.5, 1.0, 0.5]);

        let g7 = build_grid(7).unwrap();
        assert!((g7.h - 0.25).abs() < 1e-15);
        assert!((g7.nodes[0] + 0.75).abs() < 1e-15);
        assert!((g7.delta[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grid_too_small_rejected() {
        assert!(matches!(build_grid(2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn grid_symmetry_and_spacing() {
        for n in [5, 64, 301] {
            let g = build_grid(n).unwrap();
            assert!((g.h * (n as f64 + 1.0) - 2.0).abs() < 1e-14);
            for i in 0..n {
                assert!(
                    (g.nodes[i] + g.nodes[n - 1 - i]).abs() < 1e-14,
                    "reflection must negate coordinates"
                );
                assert!(g.delta[i] > 0.0);
            }
            for i in 1..n {
                assert!(g.nodes[i] > g.nodes[i - 1]);
            }
        }
    }

    #[test]
    fn truncate_examples() {
        let g = build_grid(3).unwrap();
        let u = ScalarField::new(g.clone(), vec![-3.0, 0.5, 7.0]).unwrap();
        let t = truncate(&u, 1.0).unwrap();
        assert_eq!(t.values, vec![-1.0, 0.5, 1.0]);

        // inactive clamp is the identity
        let v = ScalarField::new(g.clone(), vec![-0.2, 0.5, 0.9]).unwrap();
        assert_eq!(truncate(&v, 1.0).unwrap().values, v.values);
        // huge level behaves like k -> infinity
        assert_eq!(truncate(&u, 1e300).unwrap().values, u.values);

        assert!(truncate(&u, 0.0).is_err());
        assert!(truncate(&u, -1.0).is_err());
    }

    #[test]
    fn hardy_zero_field_is_degenerate() {
        let g = build_grid(21).unwrap();
        let z = ScalarField::constant(&g, 0.0);
        let r = hardy_ratio(&z, 2.0).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert!(r.degenerate);
    }

    #[test]
    fn weighted_norm_rejects_bad_exponent() {
        let g = build_grid(11).unwrap();
        let u = ScalarField::constant(&g, 1.0);
        assert!(weighted_grad_norm(&u, 0.5, 0.0).is_err());
    }

    #[test]
    fn affine_slope_gradient_norm() {
        // field sampled from x |-> x: interior one-sided stencils make the
        // discrete gradient exactly 1 everywhere, so the L^1 norm is n*h = 2-h
        let g = build_grid(400).unwrap();
        let u = ScalarField::from_fn(&g, |x| x);
        let norm = weighted_grad_norm(&u, 1.0, 0.0).unwrap();
        assert!((norm - 2.0).abs() <= g.h + 1e-12, "norm {norm} vs 2");
    }

    #[test]
    fn bump_mass_is_exact() {
        let g = build_grid(200).unwrap();
        let f = ScalarField::bump(&g, 0.0, 0.1, 1.0).unwrap();
        assert!((g.integrate(&f.values) - 1.0).abs() < 1e-14);
        let f2 = ScalarField::bump(&g, 0.0, 0.1, 2.0).unwrap();
        assert!((g.integrate(&f2.values) - 2.0).abs() < 1e-14);
    }
}
