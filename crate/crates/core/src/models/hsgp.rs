//! Low-rank Gaussian-process approximation from Laplacian eigenfunctions
//! on a rectangle, with a Matérn 3/2 spectral density.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsgpSpec {
    /// Basis functions per dimension; the 2-D basis has `n_basis²` columns.
    pub n_basis: usize,
    /// Boundary factor: `L = c · max|x|`.
    pub boundary_factor: f64,
}

impl Default for HsgpSpec {
    fn default() -> Self {
        HsgpSpec {
            n_basis: 16,
            boundary_factor: 2.5,
        }
    }
}

/// Half-widths of the approximation box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub lx: f64,
    pub ly: f64,
}

impl HsgpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_basis == 0 {
            return Err(Error::invalid("n_basis must be >= 1"));
        }
        if !(self.boundary_factor > 1.0) {
            return Err(Error::invalid("boundary factor must exceed 1"));
        }
        Ok(())
    }

    /// `L = c · max|coordinate|` per dimension over `points`.
    pub fn boundary(&self, points: &[[f64; 2]]) -> Result<Boundary> {
        let mx = points.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
        let my = points.iter().map(|p| p[1].abs()).fold(0.0, f64::max);
        if !(mx > 0.0 && my > 0.0) || !mx.is_finite() || !my.is_finite() {
            return Err(Error::invalid("coordinates must be finite and not all zero"));
        }
        Ok(Boundary {
            lx: self.boundary_factor * mx,
            ly: self.boundary_factor * my,
        })
    }

    pub fn n_columns(&self) -> usize {
        self.n_basis * self.n_basis
    }
}

/// `φ_j(x) = sin(π j (x + L) / (2L)) / √L`.
pub fn eigenfunction(j: usize, l: f64, x: f64) -> f64 {
    (PI * j as f64 * (x + l) / (2.0 * l)).sin() / l.sqrt()
}

/// `√λ_j = π j / (2L)`.
pub fn sqrt_eigenvalue(j: usize, l: f64) -> f64 {
    PI * j as f64 / (2.0 * l)
}

/// Basis matrix (row-major, one row per point) and squared frequency
/// `‖ω‖²` per column. Column `(j, k)` sits at `(j - 1) · n_b + (k - 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    pub n_points: usize,
    pub n_columns: usize,
    pub phi: Vec<f64>,
    pub omega_sq: Vec<f64>,
}

impl Basis {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.phi[i * self.n_columns..(i + 1) * self.n_columns]
    }

    /// `Φ · v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// `Φᵀ · u`.
    pub fn apply_transpose(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &ui) in u.iter().enumerate() {
            if ui == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * ui;
            }
        }
    }
}

pub fn hsgp_basis(points: &[[f64; 2]], n_basis: usize, b: Boundary) -> Result<Basis> {
    if n_basis == 0 {
        return Err(Error::invalid("n_basis must be >= 1"));
    }
    let m = n_basis * n_basis;
    let mut phi = Vec::with_capacity(points.len() * m);
    for p in points {
        if p[0].abs() > b.lx || p[1].abs() > b.ly || !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::BoundaryViolated {
                x: p[0],
                y: p[1],
                lx: b.lx,
                ly: b.ly,
            });
        }
        let fx: Vec<f64> = (1..=n_basis).map(|j| eigenfunction(j, b.lx, p[0])).collect();
        let fy: Vec<f64> = (1..=n_basis).map(|k| eigenfunction(k, b.ly, p[1])).collect();
        for x in &fx {
            phi.extend(fy.iter().map(|y| x * y));
        }
    }
    let mut omega_sq = Vec::with_capacity(m);
    for j in 1..=n_basis {
        for k in 1..=n_basis {
            omega_sq.push(sqrt_eigenvalue(j, b.lx).powi(2) + sqrt_eigenvalue(k, b.ly).powi(2));
        }
    }
    Ok(Basis {
        n_points: points.len(),
        n_columns: m,
        phi,
        omega_sq,
    })
}

/// 2-D Matérn 3/2 spectral density at squared frequency `omega_sq`:
/// `σ² · 6π · 3^{3/2} · δ^{-3} · (3/δ² + ‖ω‖²)^{-5/2}`.
pub fn matern32_spectral_density(omega_sq: f64, sigma: f64, delta: f64) -> f64 {
    sigma * sigma * 6.0 * PI * 3f64.powf(1.5) * delta.powi(-3) * (3.0 / (delta * delta) + omega_sq).powf(-2.5)
}

/// Exact Matérn 3/2 covariance at distance `r`.
pub fn matern32_kernel(r: f64, sigma: f64, delta: f64) -> f64 {
    let a = 3f64.sqrt() * r / delta;
    sigma * sigma * (1.0 + a) * (-a).exp()
}

/// `√S` per column.
pub fn basis_scales(omega_sq: &[f64], sigma: f64, delta: f64) -> Vec<f64> {
    omega_sq
        .iter()
        .map(|&w| matern32_spectral_density(w, sigma, delta).sqrt())
        .collect()
}

/// Spatial effect `Φ · (√S ∘ z)`.
pub fn hsgp_effect(basis: &Basis, sigma: f64, delta: f64, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != basis.n_columns {
        return Err(Error::invalid(format!(
            "z has {} weights, basis has {} columns",
            z.len(),
            basis.n_columns
        )));
    }
    let s = basis_scales(&basis.omega_sq, sigma, delta);
    let v: Vec<f64> = s.iter().zip(z).map(|(a, b)| a * b).collect();
    let mut out = vec![0.0; basis.n_points];
    basis.apply(&v, &mut out);
    Ok(out)
}
