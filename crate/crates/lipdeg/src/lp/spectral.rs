//! Fourier-side operators: transforms, band projections, d and the primitive.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::bands::{BandProfile, BandRow, Bands};
use super::fft::NdFft;
use super::{component_norms, Grid, GridForm};
use crate::error::{Error, Result};
use crate::exec;
use crate::exterior::{koszul_sign, MultiIndex};

const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// Fourier coefficients of a form, one complex array per component in the
/// same layout as the spatial samples.
#[derive(Clone, Debug)]
pub struct SpectralForm {
    pub grid: Grid,
    pub degree: usize,
    pub components: Vec<Vec<Complex64>>,
}

/// Which frequency factor a matrix entry carries.
#[derive(Clone, Copy, Debug)]
enum Factor {
    /// 2πi ξ_axis.
    Deriv(usize),
    /// ξ_axis / (2πi |ξ|²), zero where ξ vanishes.
    Contract(usize),
}

/// One summand of out_J = Σ sign · factor(ξ) · â_input.
#[derive(Clone, Copy, Debug)]
struct Term {
    input: usize,
    sign: f64,
    factor: Factor,
}

/// Precomputed transforms and partition for one grid.
///
/// Derivative symbols use ξ̃, which equals ξ = m/T except that an axis sitting
/// at the Nyquist slot m = −N/2 contributes 0: that slot has no conjugate
/// partner, so an odd symbol there would not map real data to real data.
pub struct Spectral {
    grid: Grid,
    fft: NdFft,
    bands: Bands,
    xi: Vec<f64>,
    sq: Vec<usize>,
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n;
        let xi = (0..n)
            .map(|i| if i == n / 2 { 0.0 } else { grid.freq(i) as f64 / grid.period })
            .collect();
        let sq = (0..n).map(|i| (grid.freq(i) * grid.freq(i)) as usize).collect();
        Spectral { grid, fft: NdFft::new(n, grid.dim), bands: Bands::new(grid), xi, sq }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bands(&self) -> &Bands {
        &self.bands
    }

    fn check(&self, a: &GridForm) -> Result<()> {
        if a.grid != self.grid {
            return Err(Error::Shape(format!("form grid {:?} does not match {:?}", a.grid, self.grid)));
        }
        Ok(())
    }

    fn check_band(&self, k: i32) -> Result<()> {
        if self.bands.contains(k) {
            Ok(())
        } else {
            Err(Error::BandRange(k))
        }
    }

    /// Visit every lattice point row by row; `f(flat, slots, r2, value)`.
    fn visit<F>(&self, buf: &mut [Complex64], f: F)
    where
        F: Fn(usize, &[usize; 4], usize, &mut Complex64) + Sync + Send,
    {
        let (n, d) = (self.grid.n, self.grid.dim);
        exec::for_each_chunk_mut(buf, n, |row, vals| {
            let mut slots = [0usize; 4];
            let mut r = row;
            let mut r2 = 0;
            for a in (0..d - 1).rev() {
                slots[a] = r % n;
                r /= n;
                r2 += self.sq[slots[a]];
            }
            for (j, v) in vals.iter_mut().enumerate() {
                slots[d - 1] = j;
                f(row * n + j, &slots, r2 + self.sq[j], v);
            }
        });
    }

    fn neg_index(&self, slots: &[usize; 4]) -> usize {
        let n = self.grid.n;
        slots[..self.grid.dim].iter().fold(0, |acc, &s| acc * n + (n - s) % n)
    }

    fn pack(&self, a: &[f64], b: Option<&[f64]>) -> Vec<Complex64> {
        match b {
            Some(b) => a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect(),
            None => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    /// FFT of the packed pairs (a_0 + i a_1), (a_2 + i a_3), ...
    fn packed_spectra(&self, a: &GridForm) -> Vec<Vec<Complex64>> {
        a.components
            .chunks(2)
            .map(|p| {
                let mut z = self.pack(&p[0], p.get(1).map(|v| v.as_slice()));
                self.fft.forward(&mut z);
                z
            })
            .collect()
    }

    /// â_I(ω) recovered from the packed spectrum of its pair.
    fn unpack(z: &[Complex64], flat: usize, neg: usize, odd: bool) -> Complex64 {
        let (p, q) = (z[flat], z[neg].conj());
        if odd {
            (p - q) * Complex64::new(0.0, -0.5)
        } else {
            (p + q) * 0.5
        }
    }

    fn unpack_pair(w: Vec<Complex64>, second: bool) -> (Vec<f64>, Option<Vec<f64>>) {
        let re = w.iter().map(|z| z.re).collect();
        let im = second.then(|| w.iter().map(|z| z.im).collect());
        (re, im)
    }

    pub fn forward_transform(&self, a: &GridForm) -> Result<SpectralForm> {
        self.check(a)?;
        let components = a
            .components
            .iter()
            .map(|c| {
                let mut z = self.pack(c, None);
                self.fft.forward(&mut z);
                z
            })
            .collect();
        Ok(SpectralForm { grid: a.grid, degree: a.degree, components })
    }

    /// Inverse transform. The input is assumed conjugate-symmetric; any
    /// imaginary residue in the spatial result is discarded.
    pub fn inverse_transform(&self, s: &SpectralForm) -> Result<GridForm> {
        if s.grid != self.grid {
            return Err(Error::Shape("spectral grid mismatch".into()));
        }
        let mut components = Vec::with_capacity(s.components.len());
        for p in s.components.chunks(2) {
            let mut w: Vec<Complex64> = match p.get(1) {
                Some(b) => p[0].iter().zip(b).map(|(x, y)| x + Complex64::i() * y).collect(),
                None => p[0].clone(),
            };
            self.fft.inverse(&mut w);
            let (re, im) = Self::unpack_pair(w, p.len() == 2);
            components.push(re);
            components.extend(im);
        }
        GridForm::from_components(s.grid, s.degree, components)
    }

    /// Apply a real radial multiplier (a table indexed by r²) to every component.
    pub fn apply_radial(&self, a: &GridForm, table: &[f64]) -> Result<GridForm> {
        self.check(a)?;
        let mut components = Vec::with_capacity(a.components.len());
        for p in a.components.chunks(2) {
            let mut z = self.pack(&p[0], p.get(1).map(|v| v.as_slice()));
            self.fft.forward(&mut z);
            self.visit(&mut z, |_, _, r2, v| *v *= table[r2]);
            self.fft.inverse(&mut z);
            let (re, im) = Self::unpack_pair(z, p.len() == 2);
            components.push(re);
            components.extend(im);
        }
        GridForm::from_components(a.grid, a.degree, components)
    }

    pub fn project_band(&self, a: &GridForm, k: i32) -> Result<GridForm> {
        self.check_band(k)?;
        self.apply_radial(a, &self.bands.band_table(k))
    }

    /// P_{≤k}; below the range this is 0, above it the identity.
    pub fn project_upto(&self, a: &GridForm, k: i32) -> Result<GridForm> {
        self.apply_radial(a, &self.bands.low_table(k))
    }

    /// out_J = radial(|m|²) · Σ_terms sign · factor(ξ̃) · â_input, inverse transformed.
    fn apply_matrix(
        &self,
        a: &GridForm,
        out_degree: usize,
        rows: &[Vec<Term>],
        radial: Option<&[f64]>,
    ) -> Result<GridForm> {
        let spectra = self.packed_spectra(a);
        let d = self.grid.dim;
        let eval = |terms: &[Term], flat: usize, slots: &[usize; 4], r2: usize| -> Complex64 {
            if terms.is_empty() {
                return Complex64::default();
            }
            let rad = radial.map_or(1.0, |t| t[r2]);
            if rad == 0.0 {
                return Complex64::default();
            }
            let neg = self.neg_index(slots);
            let mut xi2 = 0.0;
            for &s in &slots[..d] {
                xi2 += self.xi[s] * self.xi[s];
            }
            let mut acc = Complex64::default();
            for t in terms {
                let f = match t.factor {
                    Factor::Deriv(ax) => TWO_PI_I * self.xi[slots[ax]],
                    Factor::Contract(ax) => {
                        if xi2 == 0.0 {
                            continue;
                        }
                        Complex64::new(self.xi[slots[ax]], 0.0) / (TWO_PI_I * xi2)
                    }
                };
                let ahat = Self::unpack(&spectra[t.input / 2], flat, neg, t.input % 2 == 1);
                acc += f * ahat * t.sign;
            }
            acc * rad
        };
        let mut components = Vec::with_capacity(rows.len());
        for pair in rows.chunks(2) {
            let mut w = vec![Complex64::default(); self.grid.points()];
            self.visit(&mut w, |flat, slots, r2, v| {
                let mut z = eval(&pair[0], flat, slots, r2);
                if let Some(second) = pair.get(1) {
                    z += Complex64::i() * eval(second, flat, slots, r2);
                }
                *v = z;
            });
            self.fft.inverse(&mut w);
            let (re, im) = Self::unpack_pair(w, pair.len() == 2);
            components.push(re);
            components.extend(im);
        }
        Ok(GridForm { grid: a.grid, degree: out_degree, components })
    }

    /// Terms of d: (da)_J = Σ_{i∈J} sign(e_i ∧ e_{J∖i}) · 2πi ξ_i · â_{J∖i}.
    fn derivative_rows(&self, p: usize) -> Vec<Vec<Term>> {
        let d = self.grid.dim;
        let inputs = MultiIndex::all_of_degree(d, p);
        MultiIndex::all_of_degree(d, p + 1)
            .into_iter()
            .map(|j| {
                j.indices()
                    .into_iter()
                    .map(|i1| {
                        let i = i1 - 1;
                        let ei = MultiIndex::from_mask(1 << i);
                        let rest = MultiIndex::from_mask(j.mask() & !(1 << i));
                        let sign = koszul_sign(ei, rest).expect("disjoint") as f64;
                        let input = inputs.iter().position(|&m| m == rest).expect("degree p");
                        Term { input, sign, factor: Factor::Deriv(i) }
                    })
                    .collect()
            })
            .collect()
    }

    /// Terms of ι_ξ/(2πi|ξ|²): out_I = Σ_{i∉I} sign(e_i ∧ e_I) · ξ_i/(2πi|ξ|²) · â_{I∪i}.
    fn contraction_rows(&self, p: usize) -> Vec<Vec<Term>> {
        let d = self.grid.dim;
        let inputs = MultiIndex::all_of_degree(d, p);
        MultiIndex::all_of_degree(d, p - 1)
            .into_iter()
            .map(|o| {
                (0..d)
                    .filter(|&i| !o.contains(i + 1))
                    .map(|i| {
                        let ei = MultiIndex::from_mask(1 << i);
                        let sign = koszul_sign(ei, o).expect("disjoint") as f64;
                        let full = MultiIndex::from_mask(o.mask() | (1 << i));
                        let input = inputs.iter().position(|&m| m == full).expect("degree p");
                        Term { input, sign, factor: Factor::Contract(i) }
                    })
                    .collect()
            })
            .collect()
    }

    /// Spectral exterior derivative. On a top-degree form the result is the
    /// zero (d+1)-form, which has no components.
    pub fn exterior_derivative(&self, a: &GridForm) -> Result<GridForm> {
        self.check(a)?;
        if a.degree == self.grid.dim {
            return Ok(GridForm { grid: a.grid, degree: a.degree + 1, components: Vec::new() });
        }
        self.apply_matrix(a, a.degree + 1, &self.derivative_rows(a.degree), None)
    }

    /// ‖da‖_∞ relative to ‖a‖_∞ (0 for the zero form or a top-degree form).
    pub fn closedness_defect(&self, a: &GridForm) -> Result<f64> {
        let da = self.exterior_derivative(a)?;
        let m = a.max_abs();
        Ok(if m == 0.0 { 0.0 } else { da.max_abs() / m })
    }

    /// Largest |â_I(ω)| over frequencies where ξ̃ = 0, relative to ‖a‖_∞.
    fn mean_obstruction(&self, a: &GridForm) -> f64 {
        let m = a.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let spectra = self.packed_spectra(a);
        let n = self.grid.n;
        let d = self.grid.dim;
        let mut worst = 0.0f64;
        // ξ̃ = 0 exactly on slots in {0, N/2}^d.
        for code in 0..(1usize << d) {
            let mut slots = [0usize; 4];
            for (ax, s) in slots.iter_mut().enumerate().take(d) {
                *s = if code >> ax & 1 == 1 { n / 2 } else { 0 };
            }
            let flat = slots[..d].iter().fold(0, |acc, &s| acc * n + s);
            let neg = self.neg_index(&slots);
            for (q, z) in spectra.iter().enumerate() {
                for odd in [false, true] {
                    if 2 * q + usize::from(odd) < a.components.len() {
                        worst = worst.max(Self::unpack(z, flat, neg, odd).norm());
                    }
                }
            }
        }
        worst / m
    }

    /// Cartan-homotopy primitive ι_ξ â/(2πi|ξ|²), optionally restricted to
    /// band k first. Requires a closed form of degree ≥ 1 with no spectral mass
    /// where ξ̃ = 0; both are checked against `tol` relative to ‖a‖_∞.
    fn primitive_impl(&self, a: &GridForm, band: Option<i32>, tol: f64) -> Result<GridForm> {
        self.check(a)?;
        if a.degree == 0 {
            return Err(Error::Dimension("a 0-form has no primitive".into()));
        }
        let table = band.map(|k| self.bands.band_table(k));
        let projected;
        let src = match &table {
            Some(t) => {
                projected = self.apply_radial(a, t)?;
                &projected
            }
            None => a,
        };
        let close = self.closedness_defect(src)?;
        if close > tol {
            return Err(Error::NotClosed(close));
        }
        let mean = self.mean_obstruction(src);
        if mean > tol {
            return Err(Error::MeanObstruction(mean));
        }
        self.apply_matrix(src, a.degree - 1, &self.contraction_rows(a.degree), None)
    }

    /// Primitive of the part of `a` (or of P_k a) carried by frequencies with
    /// ξ̃ ≠ 0, skipping the closedness and mean checks. For top-degree input,
    /// which is always closed, d of the result is a minus its ξ̃ = 0 modes.
    pub fn primitive_nonzero(&self, a: &GridForm, band: Option<i32>) -> Result<GridForm> {
        self.check(a)?;
        if a.degree == 0 {
            return Err(Error::Dimension("a 0-form has no primitive".into()));
        }
        if let Some(k) = band {
            self.check_band(k)?;
        }
        let table = band.map(|k| self.bands.band_table(k));
        self.apply_matrix(a, a.degree - 1, &self.contraction_rows(a.degree), table.as_deref())
    }

    pub fn primitive(&self, a: &GridForm, tol: f64) -> Result<GridForm> {
        self.primitive_impl(a, None, tol)
    }

    /// Prim(P_k a).
    pub fn primitive_band(&self, a: &GridForm, k: i32, tol: f64) -> Result<GridForm> {
        self.check_band(k)?;
        self.primitive_impl(a, Some(k), tol)
    }

    /// Per-band, per-component norm table of a, streaming one component pair
    /// and one band at a time.
    pub fn band_profile(&self, a: &GridForm) -> Result<BandProfile> {
        self.check(a)?;
        let ks: Vec<i32> = self.bands.range().collect();
        let tables: Vec<Vec<f64>> = ks.iter().map(|&k| self.bands.band_table(k)).collect();
        let ncomp = a.components.len();
        let mut per = vec![vec![(0.0, 0.0, 0.0); ncomp]; ks.len()];
        for (q, p) in a.components.chunks(2).enumerate() {
            let mut z = self.pack(&p[0], p.get(1).map(|v| v.as_slice()));
            self.fft.forward(&mut z);
            for (b, table) in tables.iter().enumerate() {
                let mut w = z.clone();
                self.visit(&mut w, |_, _, r2, v| *v *= table[r2]);
                self.fft.inverse(&mut w);
                let (re, im) = Self::unpack_pair(w, p.len() == 2);
                per[b][2 * q] = component_norms(&re, &self.grid);
                if let Some(im) = im {
                    per[b][2 * q + 1] = component_norms(&im, &self.grid);
                }
            }
        }
        let mut rows = Vec::new();
        let mut band_l2_sq = 0.0;
        for (b, &k) in ks.iter().enumerate() {
            let (mut l1, mut l2sq, mut linf) = (0.0, 0.0, 0.0f64);
            for (c, &(n1, n2, ni)) in per[b].iter().enumerate() {
                rows.push(BandRow { k, component: Some(c), l1: n1, l2: n2, linf: ni });
                l1 += n1;
                l2sq += n2 * n2;
                linf = linf.max(ni);
            }
            band_l2_sq += l2sq;
            rows.push(BandRow { k, component: None, l1, l2: l2sq.sqrt(), linf });
        }
        let total = a.norm(super::Norm::L2);
        let orthogonality_ratio = if total == 0.0 { 1.0 } else { band_l2_sq / (total * total) };
        Ok(BandProfile { grid: self.grid, degree: a.degree, rows, orthogonality_ratio })
    }

    /// ‖P_{≤k}(P_{≤k−3} a) − P_{≤k−3} a‖_∞ / ‖a‖_∞.
    pub fn idempotence_defect(&self, a: &GridForm, k: i32) -> Result<f64> {
        let inner = self.project_upto(a, k - 3)?;
        let outer = self.project_upto(&inner, k)?;
        let m = a.max_abs();
        Ok(if m == 0.0 { 0.0 } else { outer.sub(&inner)?.max_abs() / m })
    }

    /// Support of the product (P_{≤k} f)(P_{≤k} g) of two 0-forms, checked on
    /// the lattice and numerically.
    pub fn product_support_check(&self, f: &GridForm, g: &GridForm, k: i32) -> Result<SupportCheck> {
        if f.degree != 0 || g.degree != 0 {
            return Err(Error::Dimension("product support check takes 0-forms".into()));
        }
        let n = self.grid.n;
        let radius = (k as f64 + 2.0).exp2() * self.grid.period;
        // Lattice part: every mode with η_{≤k} ≠ 0 has |m|² ≤ r2max, so a sum
        // of two has |m| ≤ 2√r2max. No wrap-around occurs while each axis
        // stays below N/4.
        let r2max = self.bands.low_support_r2(k).unwrap_or(0);
        let axis_max = (r2max as f64).sqrt().floor() as usize;
        let no_alias = 2 * axis_max < n / 2;
        let lattice_ok = no_alias && 4 * r2max as u128 <= (radius * radius).floor() as u128;

        let pf = self.project_upto(f, k)?;
        let pg = self.project_upto(g, k)?;
        let prod = pf.wedge(&pg)?;
        let mut z = self.pack(&prod.components[0], None);
        self.fft.forward(&mut z);
        let total = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let r2cap = radius * radius;
        let mut outside = 0.0f64;
        let sq = &self.sq;
        let d = self.grid.dim;
        for (flat, v) in z.iter().enumerate() {
            let mut r = flat;
            let mut r2 = 0usize;
            for _ in 0..d {
                r2 += sq[r % n];
                r /= n;
            }
            if r2 as f64 > r2cap {
                outside = outside.max(v.norm());
            }
        }
        let relative_outside = if total == 0.0 { 0.0 } else { outside / total };
        Ok(SupportCheck {
            k,
            radius,
            lattice_max_r2: r2max,
            lattice_ok,
            relative_outside,
            passed: lattice_ok && relative_outside < 1e-12,
        })
    }

    /// ‖η_k^∨‖_{L¹} and ‖dη_k^∨‖_{L¹}/2^k for every band. The kernel on the
    /// torus is K(x) = T^{-d} Σ_m η_k(m/T) e^{2πi m·x/T}.
    pub fn kernel_l1_diagnostics(&self) -> KernelDiagnostics {
        let d = self.grid.dim;
        let np = self.grid.points() as f64;
        let rows: Vec<KernelRow> = self
            .bands
            .range()
            .map(|k| {
                let table = self.bands.band_table(k);
                let mut w = vec![Complex64::default(); self.grid.points()];
                self.visit(&mut w, |_, _, r2, v| *v = Complex64::new(table[r2], 0.0));
                let mut base = w.clone();
                self.fft.inverse(&mut base);
                let kernel_l1 = base.iter().map(|z| z.re.abs()).sum::<f64>() / np;
                let mut deriv_l1 = 0.0;
                for ax in 0..d {
                    let mut dw = w.clone();
                    self.visit(&mut dw, |_, slots, _, v| *v *= TWO_PI_I * self.xi[slots[ax]]);
                    self.fft.inverse(&mut dw);
                    deriv_l1 += dw.iter().map(|z| z.re.abs()).sum::<f64>() / np;
                }
                KernelRow { k, kernel_l1, deriv_ratio: deriv_l1 / (k as f64).exp2() }
            })
            .collect();
        // Bands whose annulus is cut by the lattice box are reported but
        // left out of the uniformity spread.
        let full = |k: i32| (k as f64 + 1.0).exp2() * self.grid.period <= (self.grid.n / 2) as f64;
        let spread = |f: fn(&KernelRow) -> f64| {
            let (lo, hi) = rows.iter().filter(|r| full(r.k)).map(f).fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
            hi / lo
        };
        let kernel_spread = spread(|r| r.kernel_l1);
        let deriv_spread = spread(|r| r.deriv_ratio);
        KernelDiagnostics { rows, kernel_spread, deriv_spread }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportCheck {
    pub k: i32,
    /// 2^{k+2} in lattice units (|m| ≤ radius ⇔ |ξ| ≤ 2^{k+2}).
    pub radius: f64,
    pub lattice_max_r2: usize,
    pub lattice_ok: bool,
    pub relative_outside: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelRow {
    pub k: i32,
    pub kernel_l1: f64,
    pub deriv_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelDiagnostics {
    pub rows: Vec<KernelRow>,
    /// max/min of ‖η_k^∨‖_{L¹} over bands whose annulus fits inside the lattice.
    pub kernel_spread: f64,
    /// max/min of ‖dη_k^∨‖_{L¹}/2^k over bands.
    pub deriv_spread: f64,
}

pub fn forward_transform(a: &GridForm) -> Result<SpectralForm> {
    Spectral::new(a.grid).forward_transform(a)
}

pub fn inverse_transform(s: &SpectralForm) -> Result<GridForm> {
    Spectral::new(s.grid).inverse_transform(s)
}

pub fn exterior_derivative(a: &GridForm) -> Result<GridForm> {
    Spectral::new(a.grid).exterior_derivative(a)
}

pub fn project_band(a: &GridForm, k: i32) -> Result<GridForm> {
    Spectral::new(a.grid).project_band(a, k)
}

pub fn project_upto(a: &GridForm, k: i32) -> Result<GridForm> {
    Spectral::new(a.grid).project_upto(a, k)
}

pub fn primitive(a: &GridForm, k: i32, tol: f64) -> Result<GridForm> {
    Spectral::new(a.grid).primitive_band(a, k, tol)
}

pub fn band_profile(a: &GridForm) -> Result<BandProfile> {
    Spectral::new(a.grid).band_profile(a)
}

pub fn kernel_l1_diagnostics(partition: &Bands) -> KernelDiagnostics {
    Spectral::new(partition.grid).kernel_l1_diagnostics()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_form(grid: Grid, p: usize, seed: u64) -> GridForm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = GridForm::zeros(grid, p).unwrap();
        for c in &mut a.components {
            c.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
        a
    }

    #[test]
    fn transforms_of_simple_fields() {
        let g = Grid::new(2, 32, 2.0).unwrap();
        let s = Spectral::new(g);
        let c = GridForm::from_fn(g, 0, |_, _| 3.5).unwrap();
        let sc = s.forward_transform(&c).unwrap();
        assert!((sc.components[0][0].re - 3.5).abs() < 1e-14);
        assert!(sc.components[0][1..].iter().all(|z| z.norm() < 1e-14));
        let w = GridForm::from_fn(g, 1, |c, x| if c == 0 { (2.0 * PI * 8.0 * x[0] / 2.0).cos() } else { 0.0 }).unwrap();
        let sw = s.forward_transform(&w).unwrap();
        let lines: Vec<usize> =
            (0..g.points()).filter(|&i| sw.components[0][i].norm() > 1e-10).collect();
        assert_eq!(lines, vec![8 * 32, 24 * 32]);
    }

    #[test]
    fn round_trip_and_parseval() {
        for (d, n) in [(1, 64), (2, 32), (3, 16), (2, 24), (3, 6)] {
            let g = Grid::new(d, n, 1.3).unwrap();
            let s = Spectral::new(g);
            let a = random_form(g, 1, d as u64);
            let sa = s.forward_transform(&a).unwrap();
            let back = s.inverse_transform(&sa).unwrap();
            assert!(back.sub(&a).unwrap().max_abs() < 1e-12 * a.max_abs());
            let spec: f64 = sa.components.iter().flat_map(|c| c.iter()).map(|z| z.norm_sqr()).sum();
            let parseval = (spec * g.volume()).sqrt();
            assert!((parseval / a.norm(Norm::L2) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_sine() {
        let t = 3.0;
        let g = Grid::new(2, 32, t).unwrap();
        let f = GridForm::from_fn(g, 0, |_, x| (2.0 * PI * x[0] / t).sin()).unwrap();
        let df = exterior_derivative(&f).unwrap();
        let expect =
            GridForm::from_fn(g, 1, |c, x| if c == 0 { 2.0 * PI / t * (2.0 * PI * x[0] / t).cos() } else { 0.0 }).unwrap();
        assert!(df.sub(&expect).unwrap().max_abs() < 1e-12);
        let c = GridForm::from_fn(g, 0, |_, _| 1.0).unwrap();
        assert!(exterior_derivative(&c).unwrap().max_abs() < 1e-14);
        let top = random_form(g, 2, 1);
        assert!(exterior_derivative(&top).unwrap().components.is_empty());
    }

    #[test]
    fn d_squared_and_commutation() {
        let g = Grid::new(3, 16, 1.0).unwrap();
        let s = Spectral::new(g);
        for p in 0..2 {
            let a = random_form(g, p, 7 + p as u64);
            let da = s.exterior_derivative(&a).unwrap();
            let dda = s.exterior_derivative(&da).unwrap();
            assert!(dda.max_abs() < 1e-11 * da.max_abs().max(1.0));
            for k in s.bands().range() {
                let lhs = s.exterior_derivative(&s.project_band(&a, k).unwrap()).unwrap();
                let rhs = s.project_band(&da, k).unwrap();
                assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-10 * da.max_abs());
            }
        }
    }

    #[test]
    fn reconstruction_and_disjoint_bands() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let s = Spectral::new(g);
        let a = random_form(g, 1, 3);
        let mut sum = GridForm::zeros(g, 1).unwrap();
        let ks: Vec<i32> = s.bands().range().collect();
        for &k in &ks {
            sum.add_scaled(1.0, &s.project_band(&a, k).unwrap()).unwrap();
        }
        assert!(sum.sub(&a).unwrap().max_abs() < 1e-10 * a.max_abs());
        let pj = s.project_band(&a, 2).unwrap();
        assert!(s.project_band(&pj, 5).unwrap().max_abs() < 1e-12 * a.max_abs());
        assert!(matches!(s.project_band(&a, 40), Err(Error::BandRange(40))));
        assert!(s.idempotence_defect(&a, 5).unwrap() < 1e-12);
    }

    #[test]
    fn single_shell_and_two_shells() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let s = Spectral::new(g);
        let shell = |m: f64| move |_: usize, x: &[f64]| (2.0 * PI * m * x[0]).cos();
        let a = GridForm::from_fn(g, 0, shell(8.0)).unwrap();
        let pa = s.project_band(&a, 3).unwrap();
        assert!(pa.sub(&a).unwrap().max_abs() < 1e-12);
        let prof = s.band_profile(&a).unwrap();
        assert_eq!(prof.dominant(), Some(3));
        for r in prof.totals() {
            if r.k != 3 {
                assert!(r.l2 < 1e-12);
            }
        }
        let s2 = {
            let f1 = shell(2.0);
            let f2 = shell(16.0);
            GridForm::from_fn(g, 0, move |c, x| f1(c, x) + f2(c, x)).unwrap()
        };
        let prof = s.band_profile(&s2).unwrap();
        let live: Vec<i32> = prof.totals().iter().filter(|r| r.l2 > 1e-10).map(|r| r.k).collect();
        assert_eq!(live, vec![1, 4]);
        assert!((prof.orthogonality_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonality_ratio_in_range() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        let prof = band_profile(&random_form(g, 1, 11)).unwrap();
        assert!((0.5..=1.0).contains(&prof.orthogonality_ratio));
        assert!(prof.rows.iter().all(|r| r.l1 >= 0.0 && r.l2 >= 0.0 && r.linf >= 0.0));
        let csv = prof.to_csv();
        assert!(csv.starts_with("k,component,l1,l2,linf\n"));
    }

    fn closed_band_form(s: &Spectral, p: usize, seed: u64, k: i32) -> GridForm {
        let g = random_form(*s.grid(), p - 1, seed);
        let gk = s.project_band(&g, k).unwrap();
        s.exterior_derivative(&gk).unwrap()
    }

    #[test]
    fn primitive_inverts_d() {
        let g = Grid::new(3, 16, 1.0).unwrap();
        let s = Spectral::new(g);
        for p in 1..=3 {
            let a = closed_band_form(&s, p, 20 + p as u64, 2);
            let prim = s.primitive_band(&a, 2, 1e-9).unwrap();
            assert_eq!(prim.degree, p - 1);
            let back = s.exterior_derivative(&prim).unwrap();
            let err = back.sub(&s.project_band(&a, 2).unwrap()).unwrap().max_abs();
            assert!(err < 1e-9 * a.max_abs(), "p={p} err={err} max={}", a.max_abs());
        }
        let a = closed_band_form(&s, 2, 5, 3);
        let back = s.exterior_derivative(&s.primitive(&a, 1e-9).unwrap()).unwrap();
        assert!(back.sub(&a).unwrap().max_abs() < 1e-9 * a.max_abs());
        let z = GridForm::zeros(g, 2).unwrap();
        assert_eq!(s.primitive(&z, 1e-9).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn primitive_errors() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let s = Spectral::new(g);
        let vol = GridForm::from_fn(g, 2, |_, _| 1.0).unwrap();
        assert!(matches!(s.primitive(&vol, 1e-9), Err(Error::MeanObstruction(_))));
        let open = GridForm::from_fn(g, 1, |c, x| if c == 0 { (2.0 * PI * x[1]).sin() } else { 0.0 }).unwrap();
        assert!(matches!(s.primitive(&open, 1e-9), Err(Error::NotClosed(_))));
    }

    #[test]
    fn product_support() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let s = Spectral::new(g);
        let f = random_form(g, 0, 1);
        let h = random_form(g, 0, 2);
        for k in 0..3 {
            let c = s.product_support_check(&f, &h, k).unwrap();
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn kernel_norms_uniform() {
        let diag = kernel_l1_diagnostics(&Bands::new(Grid::new(2, 64, 1.0).unwrap()));
        assert!(diag.rows.iter().all(|r| r.kernel_l1.is_finite() && r.kernel_l1 > 0.0));
        assert!(diag.kernel_spread <= 10.0 && diag.deriv_spread <= 10.0, "{diag:?}");
    }
}
