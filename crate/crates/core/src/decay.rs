//! Dissipative-rate profiles, predicted decay exponents, kernel application,
//! exponent fitting, and empirical verification of the L^p-L^q-L^r bound
//! with its low/high frequency split.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridField;

pub type Rat = Ratio<i64>;

/// Dissipative rate eta(xi) = |xi|^{2a} / (1+|xi|^2)^b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EtaProfile {
    pub a: u32,
    pub b: u32,
}

impl EtaProfile {
    pub fn new(a: u32, b: u32) -> Result<Self> {
        if a < 1 || b < 1 {
            return Err(Error::InvalidParameter(format!(
                "profile orders must satisfy a >= 1, b >= 1, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b })
    }

    /// The standard regularity-loss profile with a=1, b=2.
    pub fn standard() -> Self {
        Self { a: 1, b: 2 }
    }

    /// Low-frequency order: eta ~ |xi|^{sigma1} as |xi| -> 0.
    pub fn sigma1(&self) -> u32 {
        2 * self.a
    }

    /// High-frequency loss order: eta ~ |xi|^{-sigma2} as |xi| -> infinity.
    pub fn sigma2(&self) -> Result<u32> {
        if self.b > self.a {
            Ok(2 * (self.b - self.a))
        } else {
            Err(Error::InvalidParameter(format!(
                "profile ({}, {}) has no high-frequency loss (needs b > a)",
                self.a, self.b
            )))
        }
    }

    pub fn eta(&self, xi_norm: f64) -> f64 {
        debug_assert!(xi_norm >= 0.0);
        let r2 = xi_norm * xi_norm;
        r2.powi(self.a as i32) / (1.0 + r2).powi(self.b as i32)
    }

    /// eta(xi) >= c_low |xi|^{sigma1} for |xi| <= r0.
    pub fn low_rate_constant(&self, r0: f64) -> f64 {
        (1.0 + r0 * r0).powi(-(self.b as i32))
    }

    /// eta(xi) >= c_high |xi|^{-sigma2} for |xi| >= r0.
    pub fn high_rate_constant(&self, r0: f64) -> f64 {
        (r0 * r0 / (1.0 + r0 * r0)).powi(self.b as i32)
    }
}

/// Best small-denominator rational approximation (continued fractions),
/// exact for the simple exponents used in practice.
pub fn ratio_from_f64(x: f64) -> Result<Rat> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("not a finite number: {x}")));
    }
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, x.floor() as i64, 1i64);
    let mut frac = x - x.floor();
    for _ in 0..40 {
        if ((p1 as f64) / (q1 as f64) - x).abs() < 1e-12 * (1.0 + x.abs()) {
            break;
        }
        let recip = 1.0 / frac;
        let a = recip.floor();
        frac = recip - a;
        let (p2, q2) = (a as i64 * p1 + p0, a as i64 * q1 + q0);
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if q1 > 1_000_000 {
            break;
        }
    }
    Ok(Rat::new(p1, q1))
}

/// Reciprocal Lebesgue exponent: 1/p as an exact rational, with 1/inf = 0.
pub fn inverse_exponent(p: f64) -> Result<Rat> {
    if p.is_infinite() && p > 0.0 {
        return Ok(Rat::zero());
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Lebesgue exponent must be in [1, inf], got {p}"
        )));
    }
    Ok(ratio_from_f64(1.0 / p)?)
}

#[derive(Debug, Clone, Copy)]
pub struct NormSpec {
    /// Reciprocals 1/p, 1/q, 1/r (0 encodes infinity).
    pub inv_p: Rat,
    pub inv_q: Rat,
    pub inv_r: Rat,
    /// Output derivative order.
    pub k: u32,
    /// Low-frequency derivative order, j <= k.
    pub j: u32,
    /// Extra high-frequency regularity.
    pub l: Rat,
    /// Space dimension.
    pub n: u32,
}

impl NormSpec {
    pub fn new(p: f64, q: f64, r: f64, k: u32, j: u32, l: f64, n: u32) -> Result<Self> {
        let spec = Self {
            inv_p: inverse_exponent(p)?,
            inv_q: inverse_exponent(q)?,
            inv_r: inverse_exponent(r)?,
            k,
            j,
            l: ratio_from_f64(l)?,
            n,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let half = Rat::new(1, 2);
        let one = Rat::new(1, 1);
        if self.inv_p > half || self.inv_p.is_negative() {
            return Err(Error::InvalidParameter("need 2 <= p <= inf".into()));
        }
        if self.inv_q < half || self.inv_q > one || self.inv_r < half || self.inv_r > one {
            return Err(Error::InvalidParameter("need 1 <= q, r <= 2".into()));
        }
        if self.j > self.k {
            return Err(Error::InvalidParameter(format!(
                "need j <= k, got j={}, k={}",
                self.j, self.k
            )));
        }
        if self.l.is_negative() {
            return Err(Error::InvalidParameter("need l >= 0".into()));
        }
        let bound = Rat::new(self.n as i64, 1) * (self.inv_r - self.inv_p);
        let p_r_2 = self.inv_p == half && self.inv_r == half;
        if !(self.l > bound || p_r_2) {
            return Err(Error::InvalidParameter(format!(
                "need l > n(1/r - 1/p) = {bound} (or l >= 0 when p = r = 2), got l = {}",
                self.l
            )));
        }
        Ok(())
    }

    /// Hoelder companion exponents of the frequency split:
    /// 1/s1 = 1/q - 1/p, 1/s2 = 1/r - 1/p (0 encodes infinity).
    pub fn inv_s1(&self) -> Rat {
        self.inv_q - self.inv_p
    }

    pub fn inv_s2(&self) -> Rat {
        self.inv_r - self.inv_p
    }
}

/// gamma_sigma(q, p) = (n/sigma)(1/q - 1/p).
pub fn gamma(sigma: u32, inv_q: Rat, inv_p: Rat, n: u32) -> Rat {
    Rat::new(n as i64, sigma as i64) * (inv_q - inv_p)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayPrediction {
    pub low_num: i64,
    pub low_den: i64,
    pub high_num: i64,
    pub high_den: i64,
}

impl DecayPrediction {
    pub fn low(&self) -> Rat {
        Rat::new(self.low_num, self.low_den)
    }

    pub fn high(&self) -> Rat {
        Rat::new(self.high_num, self.high_den)
    }

    pub fn low_f64(&self) -> f64 {
        self.low_num as f64 / self.low_den as f64
    }

    pub fn high_f64(&self) -> f64 {
        self.high_num as f64 / self.high_den as f64
    }
}

/// Predicted (low, high) frequency decay exponents of the kernel norm.
pub fn predict(spec: &NormSpec, profile: &EtaProfile) -> Result<DecayPrediction> {
    spec.validate()?;
    let s1 = profile.sigma1();
    let s2 = profile.sigma2()?;
    let low = -gamma(s1, spec.inv_q, spec.inv_p, spec.n)
        - Rat::new((spec.k - spec.j) as i64, s1 as i64);
    let high = -spec.l / Rat::new(s2 as i64, 1) + gamma(s2, spec.inv_r, spec.inv_p, spec.n);
    Ok(DecayPrediction {
        low_num: *low.numer(),
        low_den: *low.denom(),
        high_num: *high.numer(),
        high_den: *high.denom(),
    })
}

/// Inverse transform of |xi|^k e^{-eta(xi) t} |phi_hat| (modulus form, the
/// bound's statement) or of |xi|^k e^{-eta t} phi_hat when `modulus=false`
/// (phase-preserving variant, exposed separately: the bound is only claimed
/// for the modulus form).
pub fn kernel_apply(
    phi: &GridField,
    k: u32,
    t: f64,
    profile: &EtaProfile,
    modulus: bool,
) -> Result<GridField> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("need t >= 0, got {t}")));
    }
    Ok(phi.apply_multiplier(
        |xi| {
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            r.powi(k as i32) * (-profile.eta(r) * t).exp()
        },
        modulus,
    ))
}

/// Least-squares slope of log(value) against log(1+t) inside the window.
pub fn fit_exponent(series: &[(f64, f64)], window: (f64, f64)) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .map(|&(t, v)| (t, v))
        .collect();
    if pts.len() < 8 {
        return Err(Error::FitRejected(format!(
            "need >= 8 samples in window [{}, {}], have {}",
            window.0,
            window.1,
            pts.len()
        )));
    }
    if pts.iter().any(|(_, v)| !(*v > 0.0)) {
        return Err(Error::FitRejected("non-positive value in series".into()));
    }
    let xy: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(t, v)| ((1.0 + t).ln(), v.ln()))
        .collect();
    let n = xy.len() as f64;
    let sx: f64 = xy.iter().map(|p| p.0).sum();
    let sy: f64 = xy.iter().map(|p| p.1).sum();
    let sxx: f64 = xy.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = xy.iter().map(|p| p.0 * p.1).sum();
    let syy: f64 = xy.iter().map(|p| p.1 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(Error::FitRejected("degenerate abscissae".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let var_y = n * syy - sy * sy;
    let r_squared = if var_y <= 0.0 {
        1.0 // constant series: the zero slope explains everything
    } else {
        let cov = n * sxy - sx * sy;
        (cov * cov) / (denom * var_y)
    };
    Ok((slope, r_squared))
}

/// Least-squares slope of log(y) against log(x) (plain log-log regression,
/// used for frequency scans rather than time series).
pub fn loglog_fit(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < 4 {
        return Err(Error::FitRejected(format!(
            "need >= 4 samples, have {}",
            pairs.len()
        )));
    }
    if pairs.iter().any(|(x, y)| !(*x > 0.0) || !(*y > 0.0)) {
        return Err(Error::FitRejected("non-positive sample".into()));
    }
    let xy: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = xy.len() as f64;
    let sx: f64 = xy.iter().map(|p| p.0).sum();
    let sy: f64 = xy.iter().map(|p| p.1).sum();
    let sxx: f64 = xy.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = xy.iter().map(|p| p.0 * p.1).sum();
    let syy: f64 = xy.iter().map(|p| p.1 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(Error::FitRejected("degenerate abscissae".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let var_y = n * syy - sy * sy;
    let r_squared = if var_y <= 0.0 {
        1.0
    } else {
        let cov = n * sxy - sx * sy;
        (cov * cov) / (denom * var_y)
    };
    Ok((slope, r_squared))
}

fn surface_area(n: u32) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::TAU,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!("grid dimensions are capped at 3"),
    }
}

/// integral_0^upper v^m e^{-alpha v^sigma} dv for m > -1, alpha >= 0.
/// `upper` may be infinite when alpha > 0.
fn power_exp_integral(m: f64, alpha: f64, sigma: f64, upper: f64) -> f64 {
    assert!(m > -1.0 && sigma > 0.0 && alpha >= 0.0);
    if alpha == 0.0 {
        assert!(upper.is_finite());
        return upper.powf(m + 1.0) / (m + 1.0);
    }
    // rescale w = alpha^{1/sigma} v so the exponential is e^{-w^sigma}
    let scale = alpha.powf(1.0 / sigma);
    let u_cap = (745.0f64).powf(1.0 / sigma); // e^{-745} underflows anyway
    let w_hi = (upper * scale).min(u_cap);
    if w_hi <= 0.0 {
        return 0.0;
    }
    // analytic head below w_lo (exponential factor ~ 1), log-Simpson above
    let w_lo = w_hi.min(1.0) * 1e-9;
    let head = w_lo.powf(m + 1.0) / (m + 1.0);
    let (a, b) = (w_lo.ln(), w_hi.ln());
    let steps = 16384usize;
    let h = (b - a) / steps as f64;
    let f = |u: f64| ((m + 1.0) * u - (sigma * u).exp()).exp();
    let mut acc = f(a) + f(b);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    let body = acc * h / 3.0;
    (head + body) / scale.powf(m + 1.0)
}

/// integral over |xi| >= r0 of e^{-c t / |xi|^{sigma2}} |xi|^{-l s2} dxi,
/// by radial quadrature. Requires l*s2 > n for convergence.
pub fn high_freq_weight_integral(
    profile: &EtaProfile,
    l: f64,
    s2_exp: f64,
    n: u32,
    r0: f64,
    c: f64,
    t: f64,
) -> Result<f64> {
    let ls2 = l * s2_exp;
    if ls2 <= n as f64 {
        return Err(Error::InvalidParameter(format!(
            "weight integral diverges: l*s2 = {ls2} <= n = {n}"
        )));
    }
    if !(r0 > 0.0) || t < 0.0 || c <= 0.0 {
        return Err(Error::InvalidParameter(
            "need r0 > 0, c > 0, t >= 0".into(),
        ));
    }
    let sigma2 = profile.sigma2()? as f64;
    // substitute u = 1/rho: integrand u^{l s2 - n - 1} e^{-c t u^{sigma2}}
    let m = ls2 - n as f64 - 1.0;
    let val = if t == 0.0 {
        power_exp_integral(m, 0.0, sigma2, 1.0 / r0)
    } else {
        power_exp_integral(m, c * t, sigma2, 1.0 / r0)
    };
    Ok(surface_area(n) * val)
}

/// L^{s1} norm over {|xi| <= r0} of |xi|^{d} e^{-c |xi|^{sigma1} t};
/// inv_s1 = 0 encodes the sup-norm (computed in closed form).
pub(crate) fn low_weight_norm(d: u32, c: f64, sigma1: f64, t: f64, r0: f64, inv_s1: f64, n: u32) -> f64 {
    if inv_s1 == 0.0 {
        // sup of rho^d e^{-c rho^sigma t} on [0, r0]
        if d == 0 {
            return 1.0;
        }
        if t == 0.0 {
            return r0.powi(d as i32);
        }
        let rho_star = (d as f64 / (c * sigma1 * t)).powf(1.0 / sigma1).min(r0);
        return rho_star.powi(d as i32) * (-c * rho_star.powf(sigma1) * t).exp();
    }
    let s1 = 1.0 / inv_s1;
    let m = d as f64 * s1 + n as f64 - 1.0;
    let integral = power_exp_integral(m, c * s1 * t, sigma1, r0);
    (surface_area(n) * integral).powf(inv_s1)
}

/// L^{s2} norm over {|xi| >= r0} of |xi|^{-l} e^{-c t / |xi|^{sigma2}};
/// inv_s2 = 0 encodes the sup-norm (closed form).
pub(crate) fn high_weight_norm(l: f64, c: f64, sigma2: f64, t: f64, r0: f64, inv_s2: f64, n: u32) -> f64 {
    if inv_s2 == 0.0 {
        if l == 0.0 {
            return 1.0; // supremum approached as |xi| -> infinity
        }
        let g = |rho: f64| rho.powf(-l) * (-c * t / rho.powf(sigma2)).exp();
        if t == 0.0 {
            return r0.powf(-l);
        }
        let rho_star = (c * sigma2 * t / l).powf(1.0 / sigma2).max(r0);
        return g(r0).max(g(rho_star));
    }
    let s2 = 1.0 / inv_s2;
    let m = l * s2 - n as f64 - 1.0;
    assert!(m > -1.0, "weight norm requires l*s2 > n");
    let integral = if t == 0.0 {
        power_exp_integral(m, 0.0, sigma2, 1.0 / r0)
    } else {
        power_exp_integral(m, c * t * s2, sigma2, 1.0 / r0)
    };
    (surface_area(n) * integral).powf(inv_s2)
}

/// Spectral L^p norm of |xi|^order |phi_hat| on the grid, with the continuum
/// frequency measure (cell volume (2 pi / L)^n per mode; max for p = inf).
pub(crate) fn spectral_weighted_norm(spectral: &GridField, order: f64, inv_p: f64) -> f64 {
    let mut xi = vec![0.0; spectral.ndim()];
    let total = spectral.total_points();
    // frequency cell volume: product of (2 pi / L_axis)
    let dxi: f64 = spectral
        .lens
        .iter()
        .map(|l| std::f64::consts::TAU / l)
        .product();
    let mag = |idx: usize| -> f64 {
        spectral
            .data
            .iter()
            .map(|c| c[idx].norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    if inv_p == 0.0 {
        let mut best = 0.0f64;
        for idx in 0..total {
            spectral.freq(idx, &mut xi);
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            best = best.max(r.powf(order) * mag(idx));
        }
        return best;
    }
    let p = 1.0 / inv_p;
    let mut acc = 0.0f64;
    for idx in 0..total {
        spectral.freq(idx, &mut xi);
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v = r.powf(order) * mag(idx);
        if v > 0.0 {
            acc += v.powf(p);
        }
    }
    (acc * dxi).powf(inv_p)
}

#[derive(Debug, Clone, Serialize)]
pub struct LpqlrRow {
    pub t: f64,
    pub lhs_norm: f64,
    pub rhs_low: f64,
    pub rhs_high: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpqlrReport {
    pub rows: Vec<LpqlrRow>,
    /// Calibrated constant: max of lhs/(rhs_low + rhs_high) over the t-grid.
    pub c_star: f64,
    pub c_star_min: f64,
    pub low_fit: f64,
    pub low_r2: f64,
    pub high_fit: f64,
    pub high_r2: f64,
    pub predicted_low: f64,
    pub predicted_high: f64,
}

/// Verify the two-sided kernel bound on a concrete field: per t, the measured
/// kernel norm against the product-form low/high frequency majorants
/// (weight-factor norm from radial quadrature times the spectral data norm),
/// with the split at |xi| = r0 and exponent fits of both majorant parts.
pub fn verify_lpqlr(
    phi: &GridField,
    spec: &NormSpec,
    profile: &EtaProfile,
    t_grid: &[f64],
    r0: f64,
) -> Result<LpqlrReport> {
    spec.validate()?;
    if phi.ndim() != spec.n as usize {
        return Err(Error::InvalidParameter(format!(
            "field dimension {} does not match the norm spec n = {}",
            phi.ndim(),
            spec.n
        )));
    }
    if t_grid.len() < 8 {
        return Err(Error::InvalidParameter("need at least 8 time samples".into()));
    }
    let peak = phi.lp_norm(f64::INFINITY)?;
    let edge = phi.boundary_max()?;
    if edge > 1e-12 * peak.max(1e-300) {
        return Err(Error::InvalidParameter(format!(
            "field does not decay at the box boundary (edge/peak = {:.3e}); \
             enlarge the box",
            edge / peak
        )));
    }

    let sigma1 = profile.sigma1() as f64;
    let sigma2 = profile.sigma2()? as f64;
    let c_low = profile.low_rate_constant(r0);
    let c_high = profile.high_rate_constant(r0);
    let pred = predict(spec, profile)?;

    let spectral = phi.as_spectral();
    let inv_p = *spec.inv_p.numer() as f64 / *spec.inv_p.denom() as f64;
    let inv_q = *spec.inv_q.numer() as f64 / *spec.inv_q.denom() as f64;
    let inv_r = *spec.inv_r.numer() as f64 / *spec.inv_r.denom() as f64;
    let inv_s1 = *spec.inv_s1().numer() as f64 / *spec.inv_s1().denom() as f64;
    let inv_s2 = *spec.inv_s2().numer() as f64 / *spec.inv_s2().denom() as f64;
    let l = *spec.l.numer() as f64 / *spec.l.denom() as f64;
    // dual-exponent data norms ||xi|^j phi_hat||_{q'}, ||xi|^{k+l} phi_hat||_{r'}
    let data_low = spectral_weighted_norm(&spectral, spec.j as f64, 1.0 - inv_q);
    let data_high = spectral_weighted_norm(&spectral, spec.k as f64 + l, 1.0 - inv_r);

    let volume = phi.volume();
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut low_series = Vec::new();
    let mut high_series = Vec::new();
    for &t in t_grid {
        if t < 0.0 {
            return Err(Error::InvalidParameter("negative time in grid".into()));
        }
        // LHS: p=2 via Parseval, p=inf via the nonnegative-transform identity
        // (the modulus kernel has a nonnegative transform, so the sup sits at
        // x=0), anything else through the inverse FFT.
        let lhs = if spec.inv_p == Ratio::new(1, 2) {
            let mut xi = vec![0.0; spectral.ndim()];
            let mut acc = 0.0f64;
            for idx in 0..spectral.total_points() {
                spectral.freq(idx, &mut xi);
                let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                let w = r.powi(spec.k as i32) * (-profile.eta(r) * t).exp();
                let m: f64 = spectral.data.iter().map(|c| c[idx].norm_sqr()).sum();
                acc += w * w * m;
            }
            (acc / volume).sqrt()
        } else if spec.inv_p.is_zero() {
            let mut xi = vec![0.0; spectral.ndim()];
            let mut acc = 0.0f64;
            for idx in 0..spectral.total_points() {
                spectral.freq(idx, &mut xi);
                let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                let w = r.powi(spec.k as i32) * (-profile.eta(r) * t).exp();
                let m: f64 = spectral
                    .data
                    .iter()
                    .map(|c| c[idx].norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                acc += w * m;
            }
            acc / volume
        } else {
            let field = kernel_apply(phi, spec.k, t, profile, true)?;
            field.lp_norm(1.0 / inv_p)?
        };
        let w_low = low_weight_norm(
            spec.k - spec.j,
            c_low,
            sigma1,
            t,
            r0,
            inv_s1,
            spec.n,
        );
        let w_high = high_weight_norm(l, c_high, sigma2, t, r0, inv_s2, spec.n);
        let rhs_low = w_low * data_low;
        let rhs_high = w_high * data_high;
        let ratio = lhs / (rhs_low + rhs_high);
        rows.push(LpqlrRow {
            t,
            lhs_norm: lhs,
            rhs_low,
            rhs_high,
            ratio,
        });
        low_series.push((t, rhs_low));
        high_series.push((t, rhs_high));
    }

    let c_star = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let c_star_min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let window = (
        t_grid.iter().cloned().fold(f64::INFINITY, f64::min),
        t_grid.iter().cloned().fold(0.0, f64::max),
    );
    let (low_fit, low_r2) = fit_exponent(&low_series, window)?;
    let (high_fit, high_r2) = fit_exponent(&high_series, window)?;
    Ok(LpqlrReport {
        rows,
        c_star,
        c_star_min,
        low_fit,
        low_r2,
        high_fit,
        high_r2,
        predicted_low: pred.low_f64(),
        predicted_high: pred.high_f64(),
    })
}

/// Log-spaced sample times.
pub fn log_times(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn eta_values() {
        let p = EtaProfile::standard();
        assert_relative_eq!(p.eta(1.0), 0.25);
        assert_eq!(p.eta(0.0), 0.0);
        assert_relative_eq!(p.eta(10.0), 100.0 / (101.0f64 * 101.0));
        // asymptote |xi|^{-2}
        assert_relative_eq!(p.eta(10.0), 1e-2, max_relative = 0.03);
        assert_eq!((p.sigma1(), p.sigma2().unwrap()), (2, 2));
    }

    #[test]
    fn gamma_values() {
        assert_eq!(
            gamma(2, inverse_exponent(1.0).unwrap(), inverse_exponent(2.0).unwrap(), 3),
            Rat::new(3, 4)
        );
        let q = inverse_exponent(2.0).unwrap();
        assert_eq!(gamma(2, q, q, 3), Rat::zero());
        assert_eq!(
            gamma(
                2,
                inverse_exponent(1.0).unwrap(),
                inverse_exponent(f64::INFINITY).unwrap(),
                3
            ),
            Rat::new(3, 2)
        );
    }

    #[test]
    fn predict_reference_tuples() {
        let prof = EtaProfile::standard();
        let spec = NormSpec::new(2.0, 1.0, 2.0, 0, 0, 2.0, 3).unwrap();
        let pred = predict(&spec, &prof).unwrap();
        assert_eq!((pred.low(), pred.high()), (Rat::new(-3, 4), Rat::new(-1, 1)));

        let spec = NormSpec::new(2.0, 2.0, 2.0, 1, 1, 0.0, 3).unwrap();
        let pred = predict(&spec, &prof).unwrap();
        assert_eq!((pred.low(), pred.high()), (Rat::zero(), Rat::zero()));

        let spec = NormSpec::new(2.0, 1.0, 1.0, 1, 0, 2.0, 3).unwrap();
        let pred = predict(&spec, &prof).unwrap();
        assert_eq!(
            (pred.low(), pred.high()),
            (Rat::new(-5, 4), Rat::new(-1, 4))
        );
    }

    #[test]
    fn predict_rejects_insufficient_regularity() {
        let prof = EtaProfile::standard();
        // l = 1 <= n(1/r - 1/p) = 3*(1 - 0) = 3 for (p, r) = (inf, 1)
        assert!(NormSpec::new(f64::INFINITY, 1.0, 1.0, 0, 0, 1.0, 3).is_err());
        // but l = 0 is allowed when p = r = 2
        let spec = NormSpec::new(2.0, 1.0, 2.0, 0, 0, 0.0, 3).unwrap();
        assert!(predict(&spec, &prof).is_ok());
    }

    #[test]
    fn section_32_exponent_sets() {
        // the six exponent pairs consumed by the nonlinear a-priori estimates,
        // as exact rationals
        let prof = EtaProfile::standard();
        let cases: [(f64, f64, f64, u32, u32, f64, Rat, Rat); 6] = [
            (2.0, 1.0, 2.0, 0, 0, 2.0, Rat::new(-3, 4), Rat::new(-1, 1)),
            (2.0, 1.0, 2.0, 1, 0, 2.0, Rat::new(-5, 4), Rat::new(-1, 1)),
            (2.0, 1.0, 1.0, 1, 0, 2.0, Rat::new(-5, 4), Rat::new(-1, 4)),
            (2.0, 1.0, 1.0, 0, 0, 2.0, Rat::new(-3, 4), Rat::new(-1, 4)),
            (2.0, 1.0, 2.0, 1, 1, 2.0, Rat::new(-3, 4), Rat::new(-1, 1)),
            (2.0, 2.0, 2.0, 1, 0, 2.0, Rat::new(-1, 2), Rat::new(-1, 1)),
        ];
        for (p, q, r, k, j, l, low, high) in cases {
            let spec = NormSpec::new(p, q, r, k, j, l, 3).unwrap();
            let pred = predict(&spec, &prof).unwrap();
            assert_eq!(pred.low(), low, "low exponent for {spec:?}");
            assert_eq!(pred.high(), high, "high exponent for {spec:?}");
        }
    }

    #[test]
    fn fit_exact_power_law() {
        let ts = log_times(1.0, 1000.0, 30);
        let series: Vec<(f64, f64)> =
            ts.iter().map(|&t| (t, (1.0 + t).powf(-0.75))).collect();
        let (slope, r2) = fit_exponent(&series, (1.0, 1000.0)).unwrap();
        assert_relative_eq!(slope, -0.75, epsilon = 1e-12);
        assert_relative_eq!(r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_constant_series() {
        let ts = log_times(1.0, 100.0, 12);
        let series: Vec<(f64, f64)> = ts.iter().map(|&t| (t, 3.7)).collect();
        let (slope, _) = fit_exponent(&series, (1.0, 100.0)).unwrap();
        assert!(slope.abs() < 1e-12);
    }

    #[test]
    fn fit_with_noise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let ts = log_times(1.0, 1000.0, 60);
        let series: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| {
                let noise = 1.0 + 0.01 * (2.0 * rng.gen::<f64>() - 1.0);
                (t, 5.0 * (1.0 + t).powf(-1.0) * noise)
            })
            .collect();
        let (slope, r2) = fit_exponent(&series, (1.0, 1000.0)).unwrap();
        assert!((slope + 1.0).abs() < 0.02, "slope {slope}");
        assert!(r2 > 0.995);
    }

    #[test]
    fn fit_rejections() {
        let series = vec![(1.0, 1.0); 4];
        assert!(fit_exponent(&series, (0.0, 10.0)).is_err());
        let bad: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, -1.0)).collect();
        assert!(fit_exponent(&bad, (0.0, 10.0)).is_err());
    }

    #[test]
    fn high_freq_integral_t0_closed_form() {
        let prof = EtaProfile::standard();
        // t = 0: surface * r0^{n - l s2} / (l s2 - n)
        let got = high_freq_weight_integral(&prof, 2.0, 2.0, 3, 1.0, 1.0, 0.0).unwrap();
        let want = 4.0 * PI * 1.0 / (4.0 - 3.0);
        assert_relative_eq!(got, want, max_relative = 1e-6);
        assert!(high_freq_weight_integral(&prof, 1.5, 2.0, 3, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn high_freq_integral_exponent() {
        // predicted exponent -l s2/sigma2 + n/sigma2 = -2 + 3/2 = -1/2
        let prof = EtaProfile::standard();
        let ts = log_times(100.0, 10000.0, 16);
        let series: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| {
                let v = high_freq_weight_integral(&prof, 2.0, 2.0, 3, 1.0, 1.0, t).unwrap();
                (t, v)
            })
            .collect();
        let (slope, _) = fit_exponent(&series, (100.0, 10000.0)).unwrap();
        assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn kernel_identity_at_t0() {
        let phi = GridField::sample_scalar(&[512], &[64.0 * PI], |x| {
            (-0.5 * x[0] * x[0]).exp()
        })
        .unwrap();
        let out = kernel_apply(&phi, 0, 0.0, &EtaProfile::standard(), true).unwrap();
        let err: f64 = phi.data[0]
            .iter()
            .zip(&out.data[0])
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-11);
    }

    #[test]
    fn kernel_multiplier_composition() {
        // with phases kept and nonnegative transform, k1+k2 and t1+t2 compose
        let phi = GridField::sample_scalar(&[512], &[64.0 * PI], |x| {
            (-0.5 * x[0] * x[0]).exp()
        })
        .unwrap();
        let prof = EtaProfile::standard();
        let once = kernel_apply(&phi, 3, 5.0, &prof, false).unwrap();
        let a = kernel_apply(&phi, 1, 2.0, &prof, false).unwrap();
        let twice = kernel_apply(&a, 2, 3.0, &prof, false).unwrap();
        let scale = once.lp_norm(f64::INFINITY).unwrap().max(1e-300);
        let err: f64 = once.data[0]
            .iter()
            .zip(&twice.data[0])
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err / scale < 1e-10, "composition error {}", err / scale);
    }

    #[test]
    fn kernel_l2_monotone_in_t() {
        let phi = GridField::sample_scalar(&[512], &[64.0 * PI], |x| {
            (-0.5 * x[0] * x[0]).exp()
        })
        .unwrap();
        let prof = EtaProfile::standard();
        let mut last = f64::INFINITY;
        for &t in &[0.0, 1.0, 5.0, 25.0, 125.0] {
            let norm = kernel_apply(&phi, 0, t, &prof, true)
                .unwrap()
                .lp_norm(2.0)
                .unwrap();
            assert!(norm <= last * (1.0 + 1e-12));
            last = norm;
        }
    }

    #[test]
    fn kernel_l2_decay_rate_1d() {
        // n=1 analogue of the L^2 decay of the low-frequency part:
        // exponent -gamma_2(1,2) = -(1/2)(1 - 1/2) = -1/4
        let phi = GridField::sample_scalar(&[2048], &[256.0 * PI], |x| {
            (-x[0] * x[0] / 8.0).exp()
        })
        .unwrap();
        let prof = EtaProfile::standard();
        let ts = log_times(10.0, 1000.0, 16);
        let series: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| {
                let norm = kernel_apply(&phi, 0, t, &prof, true)
                    .unwrap()
                    .lp_norm(2.0)
                    .unwrap();
                (t, norm)
            })
            .collect();
        let (slope, _) = fit_exponent(&series, (10.0, 1000.0)).unwrap();
        assert!((slope + 0.25).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn verify_lpqlr_gaussian_1d() {
        let phi = GridField::sample_scalar(&[1024], &[64.0 * PI], |x| {
            (-x[0] * x[0] / 8.0).exp()
        })
        .unwrap();
        let spec = NormSpec::new(2.0, 1.0, 2.0, 0, 0, 2.0, 1).unwrap();
        let prof = EtaProfile::standard();
        let ts = log_times(10.0, 1000.0, 24);
        let report = verify_lpqlr(&phi, &spec, &prof, &ts, 1.0).unwrap();
        assert!((report.low_fit - report.predicted_low).abs() < 0.05);
        assert!((report.high_fit - report.predicted_high).abs() < 0.1);
        assert!(report.c_star.is_finite() && report.c_star > 0.0);
        for r in &report.rows {
            assert!(r.lhs_norm > 0.0 && r.rhs_low > 0.0 && r.rhs_high > 0.0);
        }
    }

    #[test]
    fn verify_lpqlr_rejects_wrapping_field() {
        // a wide Gaussian on a tiny box fails the boundary-decay precondition
        let phi =
            GridField::sample_scalar(&[64], &[4.0], |x| (-0.5 * x[0] * x[0]).exp()).unwrap();
        let spec = NormSpec::new(2.0, 1.0, 2.0, 0, 0, 2.0, 1).unwrap();
        let ts = log_times(10.0, 100.0, 10);
        assert!(verify_lpqlr(&phi, &spec, &EtaProfile::standard(), &ts, 1.0).is_err());
    }

    #[test]
    fn ratio_from_f64_exact_cases() {
        assert_eq!(ratio_from_f64(0.5).unwrap(), Rat::new(1, 2));
        assert_eq!(ratio_from_f64(2.0).unwrap(), Rat::new(2, 1));
        assert_eq!(ratio_from_f64(0.75).unwrap(), Rat::new(3, 4));
        assert_eq!(inverse_exponent(f64::INFINITY).unwrap(), Rat::zero());
    }
}
