//! Uniform periodic grids with FFT support: the discrete carrier for
//! whole-space fields, Fourier multipliers, and Lebesgue/Sobolev norms.
//!
//! Conventions: the physical box is [-L/2, L/2)^d per axis; the spectral
//! representation approximates the continuous Fourier transform, i.e.
//! f_hat = (cell volume) * DFT(f), and Parseval reads
//! ||f||_{L^2}^2 = sum_k |f_hat_k|^2 / volume.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Physical,
    Spectral,
}

#[derive(Debug, Clone)]
pub struct GridField {
    /// Per-axis sample counts (powers of two).
    pub dims: Vec<usize>,
    /// Per-axis physical box lengths.
    pub lens: Vec<f64>,
    /// Component-major storage, each component a row-major flattened field.
    pub data: Vec<Vec<Complex64>>,
    pub space: Space,
}

impl GridField {
    pub fn zeros(dims: &[usize], lens: &[f64], ncomp: usize) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 || dims.len() != lens.len() {
            return Err(Error::InvalidParameter(
                "grid dimension must be 1, 2, or 3 with matching box lengths".into(),
            ));
        }
        if dims.iter().any(|&d| d < 2 || !d.is_power_of_two()) {
            return Err(Error::InvalidParameter(
                "per-axis sample counts must be powers of two >= 2".into(),
            ));
        }
        if lens.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidParameter("box lengths must be positive".into()));
        }
        if ncomp == 0 {
            return Err(Error::InvalidParameter("need at least one component".into()));
        }
        let total: usize = dims.iter().product();
        Ok(Self {
            dims: dims.to_vec(),
            lens: lens.to_vec(),
            data: vec![vec![Complex64::default(); total]; ncomp],
            space: Space::Physical,
        })
    }

    /// Scalar field sampled from a real function of the physical coordinates.
    pub fn sample_scalar(
        dims: &[usize],
        lens: &[f64],
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let mut field = Self::zeros(dims, lens, 1)?;
        let mut x = vec![0.0; dims.len()];
        for idx in 0..field.total_points() {
            field.coords(idx, &mut x);
            field.data[0][idx] = Complex64::new(f(&x), 0.0);
        }
        Ok(field)
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn ncomp(&self) -> usize {
        self.data.len()
    }

    pub fn total_points(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lens.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.total_points() as f64
    }

    /// Physical coordinates of a flattened index, box centred at the origin.
    pub fn coords(&self, mut flat: usize, out: &mut [f64]) {
        for axis in (0..self.dims.len()).rev() {
            let d = self.dims[axis];
            let i = flat % d;
            flat /= d;
            let dx = self.lens[axis] / d as f64;
            out[axis] = -0.5 * self.lens[axis] + i as f64 * dx;
        }
    }

    /// Frequency value on one axis for a per-axis index (standard DFT order).
    pub fn freq_axis(&self, axis: usize, i: usize) -> f64 {
        let d = self.dims[axis];
        let signed = if i <= d / 2 { i as isize } else { i as isize - d as isize };
        std::f64::consts::TAU / self.lens[axis] * signed as f64
    }

    /// Frequency vector of a flattened index.
    pub fn freq(&self, mut flat: usize, out: &mut [f64]) {
        for axis in (0..self.dims.len()).rev() {
            let d = self.dims[axis];
            let i = flat % d;
            flat /= d;
            out[axis] = self.freq_axis(axis, i);
        }
    }

    fn transform(&mut self, forward: bool) {
        let mut planner = FftPlanner::<f64>::new();
        let plans: Vec<Arc<dyn Fft<f64>>> = self
            .dims
            .iter()
            .map(|&d| {
                if forward {
                    planner.plan_fft_forward(d)
                } else {
                    planner.plan_fft_inverse(d)
                }
            })
            .collect();
        let scale = if forward {
            self.cell_volume()
        } else {
            1.0 / self.volume()
        };
        let dims = self.dims.clone();
        for comp in &mut self.data {
            // the box is centred at the origin, which shows up as a (-1)^k
            // phase per axis on the spectral side
            if !forward {
                centering_signs(comp, &dims);
            }
            for axis in 0..dims.len() {
                fft_along_axis(comp, &dims, axis, plans[axis].as_ref());
            }
            if forward {
                centering_signs(comp, &dims);
            }
            for z in comp.iter_mut() {
                *z *= scale;
            }
        }
        self.space = if forward { Space::Spectral } else { Space::Physical };
    }

    pub fn to_spectral(&mut self) {
        if self.space == Space::Physical {
            self.transform(true);
        }
    }

    pub fn to_physical(&mut self) {
        if self.space == Space::Spectral {
            self.transform(false);
        }
    }

    pub fn as_spectral(&self) -> Self {
        let mut out = self.clone();
        out.to_spectral();
        out
    }

    pub fn as_physical(&self) -> Self {
        let mut out = self.clone();
        out.to_physical();
        out
    }

    /// Riemann-sum L^p norm of the pointwise Euclidean magnitude over
    /// components; grid max for p = infinity (a lower bound on the sup-norm).
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if self.space != Space::Physical {
            return Err(Error::InvalidParameter(
                "lp_norm requires a physical-space field".into(),
            ));
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
        }
        let total = self.total_points();
        let mag = |idx: usize| -> f64 {
            self.data
                .iter()
                .map(|c| c[idx].norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        if p.is_infinite() {
            let mut best = 0.0f64;
            for idx in 0..total {
                best = best.max(mag(idx));
            }
            return Ok(best);
        }
        let mut acc = 0.0f64;
        for idx in 0..total {
            acc += mag(idx).powf(p);
        }
        Ok((acc * self.cell_volume()).powf(1.0 / p))
    }

    /// Spectral-side L^2 norm (Parseval partner of lp_norm(2)).
    pub fn l2_spectral(&self) -> f64 {
        debug_assert_eq!(self.space, Space::Spectral);
        let sum: f64 = self
            .data
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm_sqr())
            .sum();
        (sum / self.volume()).sqrt()
    }

    /// Sobolev H^s norm via spectral weights (1+|xi|^2)^s.
    pub fn hs_norm(&self, s: f64) -> f64 {
        let f = self.as_spectral();
        let mut xi = vec![0.0; f.ndim()];
        let mut acc = 0.0f64;
        for idx in 0..f.total_points() {
            f.freq(idx, &mut xi);
            let w = (1.0 + xi.iter().map(|x| x * x).sum::<f64>()).powf(s);
            let m: f64 = f.data.iter().map(|c| c[idx].norm_sqr()).sum();
            acc += w * m;
        }
        (acc / f.volume()).sqrt()
    }

    /// Apply a real radial-or-not Fourier multiplier. With `modulus` the
    /// multiplier acts on |f_hat| (phases discarded); otherwise on f_hat.
    /// Returns a physical-space field.
    pub fn apply_multiplier(&self, mult: impl Fn(&[f64]) -> f64, modulus: bool) -> Self {
        let mut f = self.as_spectral();
        let mut xi = vec![0.0; f.ndim()];
        for idx in 0..f.total_points() {
            f.freq(idx, &mut xi);
            let w = mult(&xi);
            for comp in &mut f.data {
                let z = comp[idx];
                comp[idx] = if modulus {
                    Complex64::new(w * z.norm(), 0.0)
                } else {
                    z * w
                };
            }
        }
        f.to_physical();
        f
    }

    /// Zero all modes with any |k_axis| above 2/3 of the axis Nyquist index.
    pub fn dealias_two_thirds(&mut self) {
        let was_physical = self.space == Space::Physical;
        self.to_spectral();
        let dims = self.dims.clone();
        let cutoffs: Vec<usize> = dims.iter().map(|&d| d / 3).collect();
        let total = self.total_points();
        for idx in 0..total {
            let mut flat = idx;
            let mut keep = true;
            for axis in (0..dims.len()).rev() {
                let d = dims[axis];
                let i = flat % d;
                flat /= d;
                let k = if i <= d / 2 { i } else { d - i };
                if k > cutoffs[axis] {
                    keep = false;
                    break;
                }
            }
            if !keep {
                for comp in &mut self.data {
                    comp[idx] = Complex64::default();
                }
            }
        }
        if was_physical {
            self.to_physical();
        }
    }

    /// Largest pointwise magnitude on the physical boundary faces; used to
    /// enforce the compact-concentration precondition of decay experiments.
    pub fn boundary_max(&self) -> Result<f64> {
        if self.space != Space::Physical {
            return Err(Error::InvalidParameter(
                "boundary_max requires a physical-space field".into(),
            ));
        }
        let mut best = 0.0f64;
        let dims = &self.dims;
        for idx in 0..self.total_points() {
            let mut flat = idx;
            let mut on_boundary = false;
            for axis in (0..dims.len()).rev() {
                let d = dims[axis];
                let i = flat % d;
                flat /= d;
                if i == 0 || i == d - 1 {
                    on_boundary = true;
                }
            }
            if on_boundary {
                let m: f64 = self.data.iter().map(|c| c[idx].norm_sqr()).sum();
                best = best.max(m.sqrt());
            }
        }
        Ok(best)
    }
}

/// Negate entries whose per-axis index sum is odd: the spectral-side phase
/// of the half-box shift that centres the physical box at the origin.
fn centering_signs(data: &mut [Complex64], dims: &[usize]) {
    for (idx, z) in data.iter_mut().enumerate() {
        let mut flat = idx;
        let mut parity = 0usize;
        for axis in (0..dims.len()).rev() {
            let d = dims[axis];
            parity ^= flat % d & 1;
            flat /= d;
        }
        if parity == 1 {
            *z = -*z;
        }
    }
}

/// In-place FFT of every line of a row-major flattened array along one axis.
fn fft_along_axis(data: &mut [Complex64], dims: &[usize], axis: usize, plan: &dyn Fft<f64>) {
    let len = dims[axis];
    let stride: usize = dims[axis + 1..].iter().product();
    let block: usize = len * stride;
    let nblocks: usize = dims[..axis].iter().product();
    let mut line = vec![Complex64::default(); len];
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    for b in 0..nblocks {
        let base = b * block;
        for off in 0..stride {
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = data[base + off + i * stride];
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for (i, v) in line.iter().enumerate() {
                data[base + off + i * stride] = *v;
            }
        }
    }
}
