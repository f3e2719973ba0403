//! Littlewood–Paley analysis of differential forms on the periodic grid
//! (ℝ/Tℤ)^d sampled at N points per axis.
//!
//! Forms are stored component-wise: a p-form has C(d, p) planes ordered
//! lexicographically by multi-index, each plane row-major with the last axis
//! fastest. Spectral operators act by Fourier multipliers.

mod bands;
mod container;
mod fft;
mod spectral;

use serde::Serialize;

pub use bands::{build_partition, bump, BandProfile, BandRow, Bands};
pub use container::{read_container, write_container};
pub use spectral::{
    band_profile, exterior_derivative, forward_transform, inverse_transform, kernel_l1_diagnostics, primitive,
    project_band, project_upto, KernelDiagnostics, KernelRow, Spectral, SpectralForm, SupportCheck,
};

use crate::error::{Error, Result};
use crate::exec;
use crate::exterior::{koszul_sign, MultiIndex};
use crate::ring::FormAlgebra;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub period: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, period: f64) -> Result<Self> {
        if !(1..=4).contains(&dim) {
            return Err(Error::Dimension(format!("grid dimension {dim} outside 1..=4")));
        }
        // Even N keeps a single Nyquist slot per axis; powers of two are fastest.
        if n < 2 || n % 2 == 1 {
            return Err(Error::Resolution(format!("N = {n} must be even and at least 2")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Geometry(format!("period {period} must be positive")));
        }
        Ok(Grid { dim, n, period })
    }

    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// (T/N)^d, the Riemann-sum weight of one sample.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// Integer frequency of FFT slot i, in [−N/2, N/2).
    pub fn freq(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Per-axis indices of a flat point index (axis 0 slowest).
    pub fn coords(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.dim).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
    }

    /// Largest |ξ| = |m|/T on the grid.
    pub fn max_frequency(&self) -> f64 {
        (self.dim as f64).sqrt() * (self.n / 2) as f64 / self.period
    }

    fn same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::Shape(format!("grids differ: {self:?} vs {other:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

/// A p-form sampled on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridForm {
    pub grid: Grid,
    pub degree: usize,
    pub components: Vec<Vec<f64>>,
}

impl GridForm {
    pub fn zeros(grid: Grid, degree: usize) -> Result<Self> {
        if degree > grid.dim {
            return Err(Error::Dimension(format!("degree {degree} exceeds grid dimension {}", grid.dim)));
        }
        let c = MultiIndex::all_of_degree(grid.dim, degree).len();
        Ok(GridForm { grid, degree, components: vec![vec![0.0; grid.points()]; c] })
    }

    /// Sample `f(component, x)` at every grid point x = (i·T/N).
    pub fn from_fn<F>(grid: Grid, degree: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, &[f64]) -> f64 + Sync + Send,
    {
        let mut out = Self::zeros(grid, degree)?;
        let h = grid.spacing();
        for (c, comp) in out.components.iter_mut().enumerate() {
            exec::for_each_chunk_mut(comp, grid.n, |row, vals| {
                let mut idx = vec![0usize; grid.dim];
                let mut x = vec![0.0; grid.dim];
                for (j, v) in vals.iter_mut().enumerate() {
                    grid.coords(row * grid.n + j, &mut idx);
                    for a in 0..grid.dim {
                        x[a] = idx[a] as f64 * h;
                    }
                    *v = f(c, &x);
                }
            });
        }
        Ok(out)
    }

    pub fn from_components(grid: Grid, degree: usize, components: Vec<Vec<f64>>) -> Result<Self> {
        let expect = MultiIndex::all_of_degree(grid.dim, degree).len();
        if degree > grid.dim || components.len() != expect || components.iter().any(|c| c.len() != grid.points()) {
            return Err(Error::Shape(format!("expected {expect} planes of {} samples", grid.points())));
        }
        Ok(GridForm { grid, degree, components })
    }

    /// Multi-indices (over axes 1..d) labelling the components.
    pub fn component_indices(&self) -> Vec<MultiIndex> {
        MultiIndex::all_of_degree(self.grid.dim, self.degree)
    }

    pub fn norm(&self, kind: Norm) -> f64 {
        lp_norm(self, kind)
    }

    pub fn max_abs(&self) -> f64 {
        lp_norm(self, Norm::Linf)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        self.grid.same(&other.grid)?;
        if self.degree != other.degree {
            return Err(Error::Shape(format!("degrees differ: {} vs {}", self.degree, other.degree)));
        }
        Ok(())
    }

    pub fn add_scaled(&mut self, c: f64, other: &Self) -> Result<()> {
        self.same_shape(other)?;
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            exec::for_each_chunk_mut(a, 1 << 14, |i, ch| {
                let off = i << 14;
                for (j, v) in ch.iter_mut().enumerate() {
                    *v += c * b[off + j];
                }
            });
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for comp in &mut out.components {
            exec::for_each_chunk_mut(comp, 1 << 14, |_, ch| ch.iter_mut().for_each(|v| *v *= c));
        }
        out
    }

    /// Pointwise wedge product.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.grid.same(&other.grid)?;
        let p = self.degree + other.degree;
        let mut out = Self::zeros(self.grid, p)?;
        let out_idx = out.component_indices();
        for (ia, ka) in self.component_indices().into_iter().enumerate() {
            for (ib, kb) in other.component_indices().into_iter().enumerate() {
                let Some(s) = koszul_sign(ka, kb) else { continue };
                let target = MultiIndex::from_mask(ka.mask() | kb.mask());
                let t = out_idx.iter().position(|&k| k == target).expect("degree matches");
                let (a, b) = (&self.components[ia], &other.components[ib]);
                exec::for_each_chunk_mut(&mut out.components[t], 1 << 14, |i, ch| {
                    let off = i << 14;
                    for (j, v) in ch.iter_mut().enumerate() {
                        *v += s as f64 * a[off + j] * b[off + j];
                    }
                });
            }
        }
        Ok(out)
    }

    /// Riemann-sum integral of each component.
    pub fn integrals(&self) -> Vec<f64> {
        let w = self.grid.cell_volume();
        self.components.iter().map(|c| c.iter().sum::<f64>() * w).collect()
    }
}

impl FormAlgebra for GridForm {
    fn wedge_form(&self, other: &Self) -> Result<Self> {
        self.wedge(other)
    }
    fn scaled(&self, c: f64) -> Self {
        self.scale(c)
    }
    fn add_form(&mut self, other: &Self) -> Result<()> {
        // The additive identity is passed in as a 0-form; adopt the shape.
        if self.degree != other.degree && self.components.iter().all(|c| c.iter().all(|&v| v == 0.0)) {
            *self = other.clone();
            return Ok(());
        }
        self.add_scaled(1.0, other)
    }
}

/// L¹: sum over components of ∫|a_I|; L²: (Σ_I ∫a_I²)^{1/2}; L∞: max |a_I|.
pub fn lp_norm(a: &GridForm, kind: Norm) -> f64 {
    let w = a.grid.cell_volume();
    match kind {
        Norm::L1 => a.components.iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).sum::<f64>() * w,
        Norm::L2 => (a.components.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() * w).sqrt(),
        Norm::Linf => a.components.iter().flat_map(|c| c.iter()).fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// Per-component norms, in component order.
pub fn component_norms(a: &[f64], grid: &Grid) -> (f64, f64, f64) {
    let w = grid.cell_volume();
    let (mut l1, mut l2, mut linf) = (0.0, 0.0, 0.0f64);
    for v in a {
        l1 += v.abs();
        l2 += v * v;
        linf = linf.max(v.abs());
    }
    (l1 * w, (l2 * w).sqrt(), linf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(matches!(Grid::new(2, 47, 1.0), Err(Error::Resolution(_))));
        assert!(Grid::new(2, 48, 1.0).is_ok());
        assert!(matches!(Grid::new(5, 16, 1.0), Err(Error::Dimension(_))));
        assert!(Grid::new(3, 16, 0.0).is_err());
        let g = Grid::new(2, 8, 2.0).unwrap();
        assert_eq!((g.freq(3), g.freq(4), g.freq(7)), (3, -4, -1));
        assert_eq!(g.cell_volume(), 0.0625);
    }

    #[test]
    fn norms_of_constant() {
        let g = Grid::new(2, 8, 2.0).unwrap();
        let a = GridForm::from_fn(g, 1, |c, _| if c == 0 { 3.0 } else { -4.0 }).unwrap();
        assert!((a.norm(Norm::L1) - 28.0).abs() < 1e-12);
        assert!((a.norm(Norm::L2) - 10.0).abs() < 1e-12);
        assert_eq!(a.norm(Norm::Linf), 4.0);
    }

    #[test]
    fn wedge_of_coordinate_forms() {
        let g = Grid::new(2, 4, 1.0).unwrap();
        let dx = GridForm::from_fn(g, 1, |c, _| if c == 0 { 1.0 } else { 0.0 }).unwrap();
        let dy = GridForm::from_fn(g, 1, |c, _| if c == 1 { 1.0 } else { 0.0 }).unwrap();
        let w = dy.wedge(&dx).unwrap();
        assert!(w.components[0].iter().all(|&v| v == -1.0));
        assert!(dx.wedge(&dx).unwrap().max_abs() == 0.0);
    }
}
