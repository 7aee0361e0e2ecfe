//! Decay verification for general symmetric hyperbolic systems with partial
//! relaxation: the constraint/unconstrained splitting of the state space,
//! Green-matrix evolution of gridded data, and the two-sided decay bound with
//! rate-exponent consistency checks against the closed-form predictions.

use ndarray::prelude::*;
use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;

use crate::decay::{
    fit_exponent, gamma, high_weight_norm, low_weight_norm, predict, spectral_weighted_norm,
    EtaProfile, NormSpec,
};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::linalg::{column_space, CMat, Propagator};
use crate::system::{constraint_subspace, restricted_spectrum, symbol, HyperbolicSystem};

/// Orthogonal splitting of R^m induced by the relaxation-constraint pair:
/// P1 projects onto the range of the constraint source matrix (components
/// carrying their own damping), P2 = I - P1 onto its complement.
#[derive(Debug, Clone)]
pub struct ConstraintSplit {
    pub p1: Array2<f64>,
    pub p2: Array2<f64>,
    pub rank: usize,
}

const PROJECTOR_TOL: f64 = 1e-12;

pub fn constraint_split(sys: &HyperbolicSystem) -> Result<ConstraintSplit> {
    let constraints = sys.constraints.as_ref().ok_or(Error::NoConstraints)?;
    let u = column_space(&constraints.r.t().to_owned(), 1e-10)?;
    let rank = u.ncols();
    let p1 = u.dot(&u.t());
    let p2 = Array2::<f64>::eye(sys.m) - &p1;
    let split = ConstraintSplit { p1, p2, rank };
    split.validate()?;
    Ok(split)
}

impl ConstraintSplit {
    pub fn validate(&self) -> Result<()> {
        let m = self.p1.nrows();
        let checks = [
            ("P1 idempotent", &(self.p1.dot(&self.p1)) - &self.p1),
            ("P2 idempotent", &(self.p2.dot(&self.p2)) - &self.p2),
            ("P1 symmetric", &self.p1.t().to_owned() - &self.p1),
            ("P1 P2 = 0", self.p1.dot(&self.p2)),
            (
                "P1 + P2 = I",
                &(&self.p1 + &self.p2) - &Array2::<f64>::eye(m),
            ),
        ];
        for (name, resid) in checks {
            let err = resid.iter().map(|x| x.abs()).fold(0.0, f64::max);
            if err > PROJECTOR_TOL {
                return Err(Error::CheckFailed(format!(
                    "projector identity '{name}' violated: residual {err:.3e}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayPropertyRow {
    pub t: f64,
    pub lhs_norm: f64,
    pub rhs_low: f64,
    pub rhs_high: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayPropertyReport {
    pub rows: Vec<DecayPropertyRow>,
    pub c_star: f64,
    pub low_fit: f64,
    pub high_fit: f64,
    pub lhs_fit: f64,
    pub predicted_low: f64,
    pub predicted_high: f64,
    /// Largest relative constraint residual over all frequencies and times.
    pub constraint_persistence: f64,
    /// Smallest margin/eta ratio found on the qualification scan.
    pub profile_margin: f64,
}

/// Check that the restricted spectral abscissa of the system tracks the
/// (a, b) rate profile over a radius scan; systems without that property are
/// rejected rather than producing meaningless bounds.
fn qualify_profile(
    sys: &HyperbolicSystem,
    profile: &EtaProfile,
    n: usize,
) -> Result<f64> {
    let radii = crate::system::log_radii(1e-2, 1e2, 12);
    let dirs = crate::system::direction_set(n, 0, 0);
    let mut worst = f64::INFINITY;
    for &r in &radii {
        for dir in dirs.iter().take(3.min(dirs.len())) {
            let xi: Vec<f64> = dir.iter().map(|w| w * r).collect();
            let spec = restricted_spectrum(sys, &xi)?;
            let eta = profile.eta(r);
            if eta <= 0.0 {
                continue;
            }
            worst = worst.min(spec.abscissa / eta);
        }
    }
    if !(worst > 1e-3) {
        return Err(Error::CheckFailed(format!(
            "system does not exhibit the requested rate profile: \
             worst margin/eta = {worst:.3e}"
        )));
    }
    Ok(worst)
}

/// Verify the two-sided decay bound for a general constrained system on
/// gridded initial data: the data are projected frequency-wise onto the
/// constraint space, evolved by the exact Green matrix, and the measured L2
/// norm is compared against the low/high-frequency majorants; constraint
/// persistence is checked along the way. Only p = 2 (and hence the 1e-9
/// persistence bound in the same norm) is supported.
pub fn verify_decay_property(
    sys: &HyperbolicSystem,
    init: &GridField,
    spec: &NormSpec,
    profile: &EtaProfile,
    t_grid: &[f64],
    r0: f64,
) -> Result<DecayPropertyReport> {
    spec.validate()?;
    if spec.inv_p != Ratio::new(1, 2) {
        return Err(Error::InvalidParameter(
            "general decay verification supports p = 2 only".into(),
        ));
    }
    if init.ncomp() != sys.m {
        return Err(Error::InvalidParameter(format!(
            "initial data has {} components, system has {}",
            init.ncomp(),
            sys.m
        )));
    }
    if init.ndim() != spec.n as usize {
        return Err(Error::InvalidParameter(
            "grid dimension does not match the norm spec".into(),
        ));
    }
    if t_grid.len() < 6 {
        return Err(Error::InvalidParameter("need at least 6 time samples".into()));
    }
    let profile_margin = qualify_profile(sys, profile, init.ndim())?;

    let mut data = init.as_spectral();
    let total = data.total_points();
    let m = sys.m;
    // project each frequency onto the constraint space and prepare the
    // propagator and constraint matrix
    let mut props: Vec<Propagator> = Vec::with_capacity(total);
    let mut cmats: Vec<CMat> = Vec::with_capacity(total);
    let mut xi = vec![0.0; data.ndim()];
    let mut xi3;
    for idx in 0..total {
        data.freq(idx, &mut xi);
        xi3 = [0.0; 3];
        xi3[..xi.len()].copy_from_slice(&xi);
        let sub = constraint_subspace(sys, &xi3[..sys.n.min(3)])?;
        let mut z = Array1::<Complex64>::zeros(m);
        for c in 0..m {
            z[c] = data.data[c][idx];
        }
        let proj = sub.basis.dot(&crate::linalg::adjoint(&sub.basis).dot(&z));
        for c in 0..m {
            data.data[c][idx] = proj[c];
        }
        let ev = symbol(sys, &xi3[..sys.n.min(3)])?;
        props.push(Propagator::new(ev.phi_hat)?);
        cmats.push(sub.c);
    }

    let inv_q = ratio_f64(&spec.inv_q);
    let inv_r = ratio_f64(&spec.inv_r);
    let inv_s1 = ratio_f64(&spec.inv_s1());
    let inv_s2 = ratio_f64(&spec.inv_s2());
    let l = ratio_f64(&spec.l);
    let sigma1 = profile.sigma1() as f64;
    let sigma2 = profile.sigma2()? as f64;
    let c_low = profile.low_rate_constant(r0);
    let c_high = profile.high_rate_constant(r0);
    let pred = predict(spec, profile)?;
    let n = spec.n;
    let data_low = spectral_weighted_norm(&data, spec.j as f64, 1.0 - inv_q);
    let data_high = spectral_weighted_norm(&data, spec.k as f64 + l, 1.0 - inv_r);

    let volume = data.volume();
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut persistence = 0.0f64;
    let mut evolved = data.clone();
    for &t in t_grid {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter("times must be nonnegative".into()));
        }
        let mut lhs_sq = 0.0;
        let mut res_sq = 0.0;
        for idx in 0..total {
            let g = props[idx].green(t)?;
            let mut z = Array1::<Complex64>::zeros(m);
            for c in 0..m {
                z[c] = data.data[c][idx];
            }
            let w = g.dot(&z);
            lhs_sq += w.iter().map(|v| v.norm_sqr()).sum::<f64>();
            for c in 0..m {
                evolved.data[c][idx] = w[c];
            }
            let res = cmats[idx].dot(&w);
            res_sq += res.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        if lhs_sq > 0.0 {
            persistence = persistence.max((res_sq / lhs_sq).sqrt());
        }
        let lhs_norm = (lhs_sq / volume).sqrt();
        let w1 = low_weight_norm(spec.k - spec.j, c_low, sigma1, t, r0, inv_s1, n);
        let w2 = high_weight_norm(l, c_high, sigma2, t, r0, inv_s2, n);
        let rhs_low = w1 * data_low;
        let rhs_high = w2 * data_high;
        let ratio = lhs_norm / (rhs_low + rhs_high).max(1e-300);
        rows.push(DecayPropertyRow {
            t,
            lhs_norm,
            rhs_low,
            rhs_high,
            ratio,
        });
    }
    let c_star = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let span = (
        t_grid.iter().cloned().fold(f64::INFINITY, f64::min),
        t_grid.iter().cloned().fold(0.0, f64::max),
    );
    let fit = |f: &dyn Fn(&DecayPropertyRow) -> f64| -> Result<f64> {
        let series: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, f(r))).collect();
        Ok(fit_exponent(&series, span)?.0)
    };
    Ok(DecayPropertyReport {
        low_fit: fit(&|r| r.rhs_low)?,
        high_fit: fit(&|r| r.rhs_high)?,
        lhs_fit: fit(&|r| r.lhs_norm)?,
        rows,
        c_star,
        predicted_low: pred.low_f64(),
        predicted_high: pred.high_f64(),
        constraint_persistence: persistence,
        profile_margin,
    })
}

fn ratio_f64(r: &Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exact-rational consistency of the general (1,2)-profile prediction with
/// the direct sigma = 2 rate formulas at p = r = 2, q = 1:
/// low = -n/4 - (k - j)/2 and high = -l/2.
pub fn remark_consistency(n: u32, k: u32, j: u32, l: i64) -> Result<bool> {
    if j > k || l < 0 {
        return Err(Error::InvalidParameter(
            "need j <= k and nonnegative high-frequency regularity".into(),
        ));
    }
    let profile = EtaProfile::new(1, 2)?;
    let spec = NormSpec::new(2.0, 1.0, 2.0, k, j, l as f64, n)?;
    let pred = predict(&spec, &profile)?;
    let direct_low = -gamma(2, Ratio::new(1, 1), Ratio::new(1, 2), n)
        - Ratio::new((k - j) as i64, 2);
    let direct_high = Ratio::new(-l, 2);
    Ok(pred.low() == direct_low && pred.high() == direct_high)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{build_euler_maxwell, EulerMaxwellParams};

    fn em_sys() -> HyperbolicSystem {
        build_euler_maxwell(&EulerMaxwellParams::default()).unwrap()
    }

    #[test]
    fn split_projectors_for_plasma_system() {
        let split = constraint_split(&em_sys()).unwrap();
        // only the density row carries a constraint source
        assert_eq!(split.rank, 1);
        assert!((split.p1[[0, 0]] - 1.0).abs() < 1e-14);
        for i in 1..10 {
            assert!(split.p1[[i, i]].abs() < 1e-14);
        }
        split.validate().unwrap();
    }

    #[test]
    fn split_requires_constraints() {
        let mut sys = em_sys();
        sys.constraints = None;
        assert!(matches!(constraint_split(&sys), Err(Error::NoConstraints)));
    }

    #[test]
    fn remark_rates_agree_exactly() {
        for (n, k, j, l) in [(3, 0, 0, 2), (3, 1, 0, 2), (3, 2, 1, 3), (2, 1, 1, 1)] {
            assert!(remark_consistency(n, k, j, l).unwrap(), "({n},{k},{j},{l})");
        }
        assert!(remark_consistency(3, 1, 2, 2).is_err());
    }

    #[test]
    fn decay_property_on_plasma_data() {
        let sys = em_sys();
        let n = 16usize;
        let lens = vec![32.0 * std::f64::consts::PI; 3];
        let mut init = GridField::zeros(&[n, n, n], &lens, 10).unwrap();
        let sigma: f64 = 4.0;
        let mut x = [0.0; 3];
        for idx in 0..init.total_points() {
            init.coords(idx, &mut x);
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let g = (-r2 / (2.0 * sigma * sigma)).exp();
            init.data[0][idx] = Complex64::new(g, 0.0);
            init.data[1][idx] = Complex64::new(0.5 * g, 0.0);
            init.data[8][idx] = Complex64::new(-0.7 * g, 0.0);
        }
        let spec = NormSpec::new(2.0, 1.0, 2.0, 0, 0, 2.0, 3).unwrap();
        let profile = EtaProfile::standard();
        let times: Vec<f64> = crate::decay::log_times(1.0, 100.0, 10);
        let report =
            verify_decay_property(&sys, &init, &spec, &profile, &times, 1.0).unwrap();
        assert!(report.constraint_persistence < 1e-9, "persistence {}", report.constraint_persistence);
        assert!(report.c_star.is_finite() && report.c_star > 0.0);
        assert!(report.profile_margin > 0.0);
        // the low-frequency majorant follows the predicted power law
        assert!(
            (report.low_fit - report.predicted_low).abs() < 0.1,
            "low fit {} vs predicted {}",
            report.low_fit,
            report.predicted_low
        );
        // the measured norm must not decay slower than the bound overall
        assert!(report.rows.windows(2).all(|w| w[1].lhs_norm <= w[0].lhs_norm * 1.001));
    }

    #[test]
    fn rejects_profile_mismatch() {
        let sys = em_sys();
        let n = 8usize;
        let lens = vec![16.0 * std::f64::consts::PI; 3];
        let init = GridField::zeros(&[n, n, n], &lens, 10).unwrap();
        let spec = NormSpec::new(2.0, 1.0, 2.0, 0, 0, 2.0, 3).unwrap();
        // (1, 1) profile: eta -> 1 at high frequency, but the plasma
        // system's spectral margin vanishes there (regularity loss)
        let profile = EtaProfile::new(1, 1).unwrap();
        let times: Vec<f64> = crate::decay::log_times(1.0, 10.0, 8);
        let err = verify_decay_property(&sys, &init, &spec, &profile, &times, 1.0);
        assert!(err.is_err());
    }
}
