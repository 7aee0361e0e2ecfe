//! Frequency-wise energy method for the linearized plasma system: the
//! quadratic functionals E0..E3, the parameterized Lyapunov functional and
//! dissipation functional, per-frequency trajectories, the (alpha1, alpha2)
//! parameter search with a certified dissipation constant, and pointwise
//! Green-matrix decay checks.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::decay::{loglog_fit, EtaProfile};
use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, generalized_eigh, hermitian_part, identity, CMat, CVec, Propagator,
};
use crate::system::{
    build_euler_maxwell, constraint_subspace, symbol, EulerMaxwellParams, HyperbolicSystem,
};

fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One Fourier mode of the ten-component state (rho, v, E, h).
#[derive(Debug, Clone)]
pub struct FrequencyState {
    pub xi: [f64; 3],
    pub rho_hat: Complex64,
    pub v_hat: [Complex64; 3],
    pub e_hat: [Complex64; 3],
    pub h_hat: [Complex64; 3],
}

impl FrequencyState {
    pub fn zero(xi: [f64; 3]) -> Self {
        Self {
            xi,
            rho_hat: c64(0.0),
            v_hat: [c64(0.0); 3],
            e_hat: [c64(0.0); 3],
            h_hat: [c64(0.0); 3],
        }
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn omega(&self) -> Option<[f64; 3]> {
        let r = self.xi_norm();
        (r > 0.0).then(|| [self.xi[0] / r, self.xi[1] / r, self.xi[2] / r])
    }

    pub fn to_vec(&self) -> CVec {
        let mut z = CVec::zeros(10);
        z[0] = self.rho_hat;
        for i in 0..3 {
            z[1 + i] = self.v_hat[i];
            z[4 + i] = self.e_hat[i];
            z[7 + i] = self.h_hat[i];
        }
        z
    }

    pub fn from_vec(xi: [f64; 3], z: &CVec) -> Self {
        Self {
            xi,
            rho_hat: z[0],
            v_hat: [z[1], z[2], z[3]],
            e_hat: [z[4], z[5], z[6]],
            h_hat: [z[7], z[8], z[9]],
        }
    }

    /// Residuals of the two Gauss constraints: |i xi.E + rho| and |i xi.h|.
    pub fn constraint_residuals(&self) -> (f64, f64) {
        let dot = |v: &[Complex64; 3]| -> Complex64 {
            v.iter()
                .zip(self.xi.iter())
                .map(|(z, &x)| z * x)
                .sum::<Complex64>()
        };
        ((I * dot(&self.e_hat) + self.rho_hat).norm(), (I * dot(&self.h_hat)).norm())
    }

    /// Random unit-energy state in the constraint space at this frequency.
    pub fn random_constrained(xi: [f64; 3], rng: &mut impl Rng) -> Self {
        let mut rand_c = || Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let mut s = Self {
            xi,
            rho_hat: rand_c(),
            v_hat: [rand_c(), rand_c(), rand_c()],
            e_hat: [rand_c(), rand_c(), rand_c()],
            h_hat: [rand_c(), rand_c(), rand_c()],
        };
        let r = s.xi_norm();
        if let Some(om) = s.omega() {
            // enforce i|xi| (omega.E) = -rho and omega.h = 0
            let e_par: Complex64 = s
                .e_hat
                .iter()
                .zip(om.iter())
                .map(|(z, &w)| z * w)
                .sum();
            let want = I * s.rho_hat / r; // i rho / |xi|
            for i in 0..3 {
                s.e_hat[i] += (want - e_par) * om[i];
            }
            let h_par: Complex64 = s
                .h_hat
                .iter()
                .zip(om.iter())
                .map(|(z, &w)| z * w)
                .sum();
            for i in 0..3 {
                s.h_hat[i] -= h_par * om[i];
            }
        } else {
            s.rho_hat = c64(0.0); // at xi = 0 the constraint reduces to rho = 0
        }
        let norm = s.to_vec().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            s.rho_hat *= inv;
            for i in 0..3 {
                s.v_hat[i] *= inv;
                s.e_hat[i] *= inv;
                s.h_hat[i] *= inv;
            }
        }
        s
    }
}

/// The four building-block functionals (E0, E1, E2, E3); the omega-dependent
/// E2, E3 are zero at xi = 0 by convention.
pub fn energies(s: &FrequencyState, a_inf: f64, n_inf: f64) -> (f64, f64, f64, f64) {
    let abs2 = |v: &[Complex64; 3]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let e0 = a_inf * s.rho_hat.norm_sqr() + n_inf * abs2(&s.v_hat) + abs2(&s.e_hat)
        + abs2(&s.h_hat);
    // <u, w> = sum u_i conj(w_i)
    let e1: f64 = s
        .v_hat
        .iter()
        .zip(s.e_hat.iter())
        .map(|(v, e)| (v * e.conj()).re)
        .sum();
    let (e2, e3) = match s.omega() {
        Some(om) => {
            let e2: f64 = om
                .iter()
                .zip(s.v_hat.iter())
                .map(|(&w, v)| (I * s.rho_hat * w * v.conj()).re)
                .sum();
            // h x omega
            let hx = [
                s.h_hat[1] * om[2] - s.h_hat[2] * om[1],
                s.h_hat[2] * om[0] - s.h_hat[0] * om[2],
                s.h_hat[0] * om[1] - s.h_hat[1] * om[0],
            ];
            let e3: f64 = s
                .e_hat
                .iter()
                .zip(hx.iter())
                .map(|(e, x)| (e * (I * x).conj()).re)
                .sum();
            (e2, e3)
        }
        None => (0.0, 0.0),
    };
    (e0, e1, e2, e3)
}

#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
pub struct LyapunovParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub c1: f64,
    pub a_inf: f64,
    pub n_inf: f64,
}

/// E[z] = E0 + (alpha1/(1+|xi|^2)) { E1 + a_inf |xi| E2 + (alpha2 |xi|/(1+|xi|^2)) E3 }.
pub fn lyapunov(s: &FrequencyState, params: &LyapunovParams) -> f64 {
    let (e0, e1, e2, e3) = energies(s, params.a_inf, params.n_inf);
    let r = s.xi_norm();
    let w = 1.0 + r * r;
    e0 + params.alpha1 / w * (e1 + params.a_inf * r * e2 + params.alpha2 * r / w * e3)
}

/// D[z] = |rho|^2 + |v|^2 + |E|^2/(1+|xi|^2) + |xi|^2 |h|^2/(1+|xi|^2)^2.
pub fn dissipation(s: &FrequencyState) -> f64 {
    let abs2 = |v: &[Complex64; 3]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let r2 = s.xi.iter().map(|x| x * x).sum::<f64>();
    let w = 1.0 + r2;
    s.rho_hat.norm_sqr() + abs2(&s.v_hat) + abs2(&s.e_hat) / w + r2 * abs2(&s.h_hat) / (w * w)
}

/// A0-weighted squared norm, the equivalence partner of the Lyapunov
/// functional (equal to E0).
pub fn weighted_norm_sq(s: &FrequencyState, a_inf: f64, n_inf: f64) -> f64 {
    energies(s, a_inf, n_inf).0
}

// ---- quadratic-form matrices --------------------------------------------

/// 10x10 Hermitian matrix of the A0-weighted norm (i.e. of E0).
pub fn m0_matrix(a_inf: f64, n_inf: f64) -> CMat {
    let mut m = identity(10);
    m[[0, 0]] = c64(a_inf);
    for i in 0..3 {
        m[[1 + i, 1 + i]] = c64(n_inf);
    }
    m
}

/// 10x10 Hermitian matrix M with z^H M z = E[z] at frequency xi.
pub fn lyapunov_matrix(xi: &[f64], params: &LyapunovParams) -> CMat {
    let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let om: Option<[f64; 3]> = (r > 0.0).then(|| [xi[0] / r, xi[1] / r, xi[2] / r]);
    let m = m0_matrix(params.a_inf, params.n_inf);
    let w = 1.0 + r * r;
    // E1 = Re <v, E> corresponds to B1 with conj side E, plain side v
    let mut b = CMat::zeros((10, 10));
    for i in 0..3 {
        b[[4 + i, 1 + i]] = c64(1.0);
    }
    if let Some(om) = om {
        // E2 = Re <i rho omega, v>: conj side v, plain side rho
        for j in 0..3 {
            b[[1 + j, 0]] += I * om[j] * params.a_inf * r / 1.0;
        }
        // E3 = Re <E, i h x omega>: conj side h, plain side E
        let eps = |a: usize, b_: usize, c: usize| -> f64 {
            match (a, b_, c) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
                _ => 0.0,
            }
        };
        for hidx in 0..3 {
            for eidx in 0..3 {
                let mut coef = 0.0;
                for l in 0..3 {
                    coef += eps(eidx, hidx, l) * om[l];
                }
                b[[7 + hidx, 4 + eidx]] += -I * coef * params.alpha2 * r / w;
            }
        }
    }
    let scale = params.alpha1 / w;
    m + hermitian_part(&b).mapv(|z| z * scale)
}

/// Hermitian matrix of the dissipation functional D[z] at frequency xi.
pub fn dissipation_matrix(xi: &[f64]) -> CMat {
    let r2 = xi.iter().map(|x| x * x).sum::<f64>();
    let w = 1.0 + r2;
    let mut m = identity(10);
    for i in 0..3 {
        m[[4 + i, 4 + i]] = c64(1.0 / w);
        m[[7 + i, 7 + i]] = c64(r2 / (w * w));
    }
    m
}

// ---- linear dynamics -----------------------------------------------------

/// Block-wise assembly of dz/dt = -Phi(xi) z, written from the component
/// equations rather than the symbol (the agreement of the two assemblies is
/// a cross-module test).
pub fn linear_rhs(s: &FrequencyState, a_inf: f64, n_inf: f64, b_inf: &[f64; 3]) -> FrequencyState {
    let r = s.xi_norm();
    let mut out = FrequencyState::zero(s.xi);
    let om = s.omega().unwrap_or([0.0; 3]);
    let cross = |a: &[Complex64; 3], b: &[f64; 3]| -> [Complex64; 3] {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let v_dot_om: Complex64 = s.v_hat.iter().zip(om.iter()).map(|(v, &w)| v * w).sum();
    out.rho_hat = -I * n_inf * r * v_dot_om;
    let b_cross_v = {
        let neg = cross(&s.v_hat, b_inf); // v x B
        [-neg[0], -neg[1], -neg[2]] // B x v
    };
    for i in 0..3 {
        out.v_hat[i] =
            -I * a_inf * r * s.rho_hat * om[i] - s.v_hat[i] + b_cross_v[i] - s.e_hat[i];
    }
    let om_cross_h = {
        let hxo = cross(&s.h_hat, &om); // h x omega
        [-hxo[0], -hxo[1], -hxo[2]]
    };
    let om_cross_e = {
        let exo = cross(&s.e_hat, &om);
        [-exo[0], -exo[1], -exo[2]]
    };
    for i in 0..3 {
        out.e_hat[i] = I * r * om_cross_h[i] + n_inf * s.v_hat[i];
        out.h_hat[i] = -I * r * om_cross_e[i];
    }
    out
}

/// Forcing entering the velocity equation: (i|xi| q2_hat.omega + r2_hat)/n_inf.
#[derive(Debug, Clone, Copy)]
pub struct Forcing {
    /// q2_hat contracted with omega, a 3-vector (flux part).
    pub q_omega: [Complex64; 3],
    /// r2_hat, a 3-vector (source part).
    pub r: [Complex64; 3],
}

impl Forcing {
    pub fn none() -> Self {
        Self {
            q_omega: [c64(0.0); 3],
            r: [c64(0.0); 3],
        }
    }

    /// The velocity-slot forcing vector (i|xi| q.omega + r)/n_inf.
    pub fn velocity_term(&self, xi_norm: f64, n_inf: f64) -> [Complex64; 3] {
        let mut out = [c64(0.0); 3];
        for i in 0..3 {
            out[i] = (I * xi_norm * self.q_omega[i] + self.r[i]) / n_inf;
        }
        out
    }
}

/// Classical RK4 integration of one Fourier mode, optionally forced.
/// Step size obeys dt <= 0.01 / (1 + |xi| ||A(omega)|| + ||L||) scaled
/// crudely by (1 + |xi|).
pub fn integrate_mode(
    s0: &FrequencyState,
    a_inf: f64,
    n_inf: f64,
    b_inf: &[f64; 3],
    t_end: f64,
    forcing: Option<&dyn Fn(f64) -> Forcing>,
    mut observer: Option<&mut dyn FnMut(f64, &FrequencyState)>,
) -> FrequencyState {
    let r = s0.xi_norm();
    let scale = 1.0 + 2.0 * r + 2.0 * n_inf.max(1.0);
    let steps = ((t_end * scale / 0.01).ceil() as usize).max(1);
    let dt = t_end / steps as f64;
    let rhs = |t: f64, s: &FrequencyState| -> FrequencyState {
        let mut d = linear_rhs(s, a_inf, n_inf, b_inf);
        if let Some(f) = forcing {
            let term = f(t).velocity_term(r, n_inf);
            for i in 0..3 {
                d.v_hat[i] += term[i];
            }
        }
        d
    };
    let axpy = |s: &FrequencyState, d: &FrequencyState, h: f64| -> FrequencyState {
        let mut out = s.clone();
        out.rho_hat += d.rho_hat * h;
        for i in 0..3 {
            out.v_hat[i] += d.v_hat[i] * h;
            out.e_hat[i] += d.e_hat[i] * h;
            out.h_hat[i] += d.h_hat[i] * h;
        }
        out
    };
    let mut s = s0.clone();
    let mut t = 0.0;
    if let Some(obs) = observer.as_deref_mut() {
        obs(0.0, &s);
    }
    for _ in 0..steps {
        let k1 = rhs(t, &s);
        let k2 = rhs(t + 0.5 * dt, &axpy(&s, &k1, 0.5 * dt));
        let k3 = rhs(t + 0.5 * dt, &axpy(&s, &k2, 0.5 * dt));
        let k4 = rhs(t + dt, &axpy(&s, &k3, dt));
        let mut sum = k1;
        for i in 0..3 {
            sum.v_hat[i] += 2.0 * k2.v_hat[i] + 2.0 * k3.v_hat[i] + k4.v_hat[i];
            sum.e_hat[i] += 2.0 * k2.e_hat[i] + 2.0 * k3.e_hat[i] + k4.e_hat[i];
            sum.h_hat[i] += 2.0 * k2.h_hat[i] + 2.0 * k3.h_hat[i] + k4.h_hat[i];
        }
        sum.rho_hat += 2.0 * k2.rho_hat + 2.0 * k3.rho_hat + k4.rho_hat;
        s = axpy(&s, &sum, dt / 6.0);
        t += dt;
        if let Some(obs) = observer.as_deref_mut() {
            obs(t, &s);
        }
    }
    s
}

/// Residual of the frequency-wise energy identity along a trajectory point:
/// dE0/dt + 2 n_inf |v|^2 - 2 Re <i|xi| q.omega + r, v>, with dE0/dt taken
/// from the exact right-hand side.
pub fn energy_identity_residual(
    s: &FrequencyState,
    a_inf: f64,
    n_inf: f64,
    b_inf: &[f64; 3],
    forcing: &Forcing,
) -> f64 {
    let r = s.xi_norm();
    let mut d = linear_rhs(s, a_inf, n_inf, b_inf);
    let term = forcing.velocity_term(r, n_inf);
    for i in 0..3 {
        d.v_hat[i] += term[i];
    }
    // dE0/dt = 2 Re [ a rho' conj(rho) + n <v', v> + <E', E> + <h', h> ]
    let pair = |x: &[Complex64; 3], y: &[Complex64; 3]| -> f64 {
        x.iter().zip(y.iter()).map(|(a, b)| (a * b.conj()).re).sum()
    };
    let de0 = 2.0
        * (a_inf * (d.rho_hat * s.rho_hat.conj()).re
            + n_inf * pair(&d.v_hat, &s.v_hat)
            + pair(&d.e_hat, &s.e_hat)
            + pair(&d.h_hat, &s.h_hat));
    let v2: f64 = s.v_hat.iter().map(|z| z.norm_sqr()).sum();
    let force_inner: f64 = (0..3)
        .map(|i| ((I * r * forcing.q_omega[i] + forcing.r[i]) * s.v_hat[i].conj()).re)
        .sum();
    (de0 + 2.0 * n_inf * v2 - 2.0 * force_inner).abs()
}

// ---- parameter search -----------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub params: LyapunovParams,
    pub equiv_min: f64,
    pub equiv_max: f64,
    pub worst_xi: Vec<f64>,
    pub worst_ratio: f64,
}

struct GridPoint {
    xi: Vec<f64>,
    eta: f64,
    basis: CMat,
    phi: CMat,
}

fn prepare_grid(
    sys: &HyperbolicSystem,
    xi_grid: &[Vec<f64>],
    profile: &EtaProfile,
) -> Result<Vec<GridPoint>> {
    xi_grid
        .iter()
        .map(|xi| {
            let sub = constraint_subspace(sys, xi)?;
            let ev = symbol(sys, xi)?;
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            Ok(GridPoint {
                xi: xi.clone(),
                eta: profile.eta(r),
                basis: sub.basis,
                phi: ev.phi_hat,
            })
        })
        .collect()
}

fn restrict(m: &CMat, basis: &CMat) -> CMat {
    adjoint(basis).dot(&m.dot(basis))
}

/// Evaluate one (alpha1, alpha2) candidate over the prepared grid: the
/// equivalence ratio range of E versus the A0-weighted norm, and the largest
/// c1 with dE/dt + c1 eta(xi) E <= 0 everywhere on the constraint space.
fn evaluate_candidate(
    points: &[GridPoint],
    alpha1: f64,
    alpha2: f64,
    a_inf: f64,
    n_inf: f64,
) -> Result<(f64, f64, f64, usize)> {
    let m0 = m0_matrix(a_inf, n_inf);
    let params = LyapunovParams {
        alpha1,
        alpha2,
        c1: 0.0,
        a_inf,
        n_inf,
    };
    let mut equiv_min = f64::INFINITY;
    let mut equiv_max = 0.0f64;
    let mut c1 = f64::INFINITY;
    let mut worst = 0usize;
    for (idx, p) in points.iter().enumerate() {
        let m = lyapunov_matrix(&p.xi, &params);
        let m_r = restrict(&m, &p.basis);
        let m0_r = restrict(&m0, &p.basis);
        let equiv = generalized_eigh(&m_r, &m0_r)?;
        let lo = equiv.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = equiv.iter().cloned().fold(0.0, f64::max);
        equiv_min = equiv_min.min(lo);
        equiv_max = equiv_max.max(hi);
        if lo <= 0.0 {
            return Ok((lo, hi, f64::NEG_INFINITY, idx));
        }
        // dE/dt = -z^H S z with S = herm(Phi^H M + M Phi)
        let s = hermitian_part(&(adjoint(&p.phi).dot(&m) + m.dot(&p.phi)));
        let s_r = restrict(&s, &p.basis);
        if p.eta > 0.0 {
            let vals = generalized_eigh(&s_r, &m_r)?;
            let lam = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let ratio = lam / p.eta;
            if ratio < c1 {
                c1 = ratio;
                worst = idx;
            }
        } else {
            // eta = 0: only nonnegativity of the dissipation form is needed
            let vals = generalized_eigh(&s_r, &m_r)?;
            let lam = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            if lam < -1e-10 {
                return Ok((equiv_min, equiv_max, f64::NEG_INFINITY, idx));
            }
        }
    }
    Ok((equiv_min, equiv_max, c1, worst))
}

/// Search (alpha1, alpha2) for the largest certified dissipation constant c1
/// subject to the 1/2 <= E/E0 <= 2 equivalence over the grid. The candidate
/// grid is coarse; each candidate is certified exactly (per grid point) by
/// generalized eigenvalue bounds rather than sampling.
pub fn search_params(
    em: &EulerMaxwellParams,
    xi_grid: &[Vec<f64>],
    profile: &EtaProfile,
) -> Result<SearchReport> {
    let sys = build_euler_maxwell(em)?;
    let points = prepare_grid(&sys, xi_grid, profile)?;
    let a_inf = em.a_inf();
    let n_inf = em.n_inf;
    let alpha1_grid = [0.05, 0.1, 0.2, 0.3, 0.5, 0.8];
    let alpha2_grid = [0.1, 0.2, 0.5, 1.0];
    let mut best: Option<SearchReport> = None;
    for &a1 in &alpha1_grid {
        for &a2 in &alpha2_grid {
            let (lo, hi, c1, worst) = evaluate_candidate(&points, a1, a2, a_inf, n_inf)?;
            if lo < 0.5 || hi > 2.0 || c1 <= 0.0 || !c1.is_finite() {
                continue;
            }
            let report = SearchReport {
                params: LyapunovParams {
                    alpha1: a1,
                    alpha2: a2,
                    c1,
                    a_inf,
                    n_inf,
                },
                equiv_min: lo,
                equiv_max: hi,
                worst_xi: points[worst].xi.clone(),
                worst_ratio: c1,
            };
            if best.as_ref().map_or(true, |b| report.params.c1 > b.params.c1) {
                best = Some(report);
            }
        }
    }
    best.ok_or_else(|| Error::SearchInfeasible {
        xi: xi_grid.first().cloned().unwrap_or_default(),
        ratio: f64::NEG_INFINITY,
    })
}

/// Measured comparison constant for D[z] >= eta(xi) E0[z] / C over the grid.
pub fn dissipation_comparison(
    em: &EulerMaxwellParams,
    xi_grid: &[Vec<f64>],
    profile: &EtaProfile,
) -> Result<f64> {
    let sys = build_euler_maxwell(em)?;
    let points = prepare_grid(&sys, xi_grid, profile)?;
    let m0 = m0_matrix(em.a_inf(), em.n_inf);
    let mut c_cmp = 0.0f64;
    for p in &points {
        if p.eta <= 0.0 {
            continue;
        }
        let d_r = restrict(&dissipation_matrix(&p.xi), &p.basis);
        let m0_r = restrict(&m0, &p.basis);
        let vals = generalized_eigh(&d_r, &m0_r)?;
        let lam = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if lam <= 0.0 {
            return Err(Error::CheckFailed(format!(
                "dissipation form degenerate at xi = {:?}",
                p.xi
            )));
        }
        c_cmp = c_cmp.max(p.eta / lam);
    }
    Ok(c_cmp)
}

// ---- pointwise Green-matrix decay ----------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct PointwiseRow {
    pub xi_norm: f64,
    pub dir_id: usize,
    /// Fitted decay margin of the restricted Green norm (per unit time).
    pub margin: f64,
    pub eta: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointwiseReport {
    pub rows: Vec<PointwiseRow>,
    pub c0: f64,
    pub c_big: f64,
    pub low_exponent: f64,
    pub high_exponent: f64,
}

/// Operator-norm decay of the constrained Green matrix, in the A0-weighted
/// norm. Times are sampled per frequency at tau/eta(xi) so each mode is
/// observed over a comparable number of e-foldings; the fitted margin is
/// compared with eta(xi).
pub fn pointwise_check(
    em: &EulerMaxwellParams,
    radii: &[f64],
    dirs: &[Vec<f64>],
    tau_grid: &[f64],
    profile: &EtaProfile,
    low_cut: f64,
    high_cut: f64,
) -> Result<PointwiseReport> {
    use ndarray_linalg::{Cholesky, Inverse, UPLO};
    use rayon::prelude::*;
    let sys = build_euler_maxwell(em)?;
    let m0 = m0_matrix(em.a_inf(), em.n_inf);
    if tau_grid.len() < 4 || tau_grid.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidParameter(
            "need >= 4 nonnegative tau samples".into(),
        ));
    }
    let points: Vec<(usize, usize)> = (0..radii.len())
        .flat_map(|i| (0..dirs.len()).map(move |d| (i, d)))
        .collect();
    let results: Result<Vec<(PointwiseRow, Vec<(f64, f64)>)>> = points
        .par_iter()
        .map(|&(i, d)| {
            let r = radii[i];
            let xi: Vec<f64> = dirs[d].iter().map(|w| w * r).collect();
            let eta = profile.eta(r);
            if eta <= 0.0 {
                return Err(Error::InvalidParameter(
                    "pointwise scan requires eta > 0 (exclude xi = 0)".into(),
                ));
            }
            let sub = constraint_subspace(&sys, &xi)?;
            let ev = symbol(&sys, &xi)?;
            let prop = Propagator::new(ev.phi_hat)?;
            let m0_r = restrict(&m0, &sub.basis);
            let chol = m0_r.cholesky(UPLO::Lower)?;
            let chol_inv = chol.inv()?;
            let mut series = Vec::with_capacity(tau_grid.len());
            for &tau in tau_grid {
                let t = tau / eta;
                let g = prop.green(t)?;
                let g_r = restrict(&g, &sub.basis);
                // operator norm in the M0 inner product
                let sym = adjoint(&chol).dot(&g_r).dot(&adjoint(&chol_inv));
                let norm = crate::linalg::operator_norm(&sym)?;
                series.push((tau, norm));
            }
            // log-linear fit of ln||G|| against tau: margin per eta
            let n = series.len() as f64;
            let sx: f64 = series.iter().map(|p| p.0).sum();
            let sy: f64 = series.iter().map(|p| p.1.max(1e-300).ln()).sum();
            let sxx: f64 = series.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = series.iter().map(|p| p.0 * p.1.max(1e-300).ln()).sum();
            let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            let ratio = -slope; // margin / eta
            Ok((
                PointwiseRow {
                    xi_norm: r,
                    dir_id: d,
                    margin: ratio * eta,
                    eta,
                    ratio,
                },
                series,
            ))
        })
        .collect();
    let results = results?;
    let c0 = results
        .iter()
        .map(|(row, _)| row.ratio)
        .fold(f64::INFINITY, f64::min);
    // C = sup_t ||G(t)|| e^{c0 eta t} over the sampled grid (tau = eta t)
    let c_big = results
        .iter()
        .flat_map(|(_, series)| series.iter())
        .map(|&(tau, norm)| norm * (c0 * tau).exp())
        .fold(0.0, f64::max)
        .max(1.0);
    let rows: Vec<PointwiseRow> = results.into_iter().map(|(row, _)| row).collect();
    let low: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.xi_norm <= low_cut && r.margin > 0.0)
        .map(|r| (r.xi_norm, r.margin))
        .collect();
    let high: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.xi_norm >= high_cut && r.margin > 0.0)
        .map(|r| (r.xi_norm, r.margin))
        .collect();
    let (low_exponent, _) = loglog_fit(&low)?;
    let (high_exponent, _) = loglog_fit(&high)?;
    Ok(PointwiseReport {
        rows,
        c0,
        c_big,
        low_exponent,
        high_exponent,
    })
}

// ---- Duhamel verification --------------------------------------------------

/// Per-frequency record produced by the nonlinear solver: Lyapunov energy and
/// squared source strength |xi|^2 |Q|^2 + |R|^2 at sample times.
#[derive(Debug, Clone, Serialize)]
pub struct DuhamelRecord {
    pub xi: [f64; 3],
    pub eta: f64,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub source_sq: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DuhamelReport {
    /// max over records and times of E(t) / (e^{-c1 eta t} E(0) + K * conv).
    pub max_ratio: f64,
    pub worst_xi: [f64; 3],
    pub worst_t: f64,
}

/// Check the frequency-pointwise Duhamel inequality
/// E(t) <= C ( e^{-c1 eta t} E(0) + K int_0^t e^{-c1 eta (t-s)} src(s) ds )
/// with trapezoidal quadrature; returns the largest required constant.
pub fn duhamel_check(records: &[DuhamelRecord], c1: f64, k_const: f64) -> Result<DuhamelReport> {
    if !(c1 > 0.0) || !(k_const > 0.0) {
        return Err(Error::InvalidParameter("need c1 > 0 and K > 0".into()));
    }
    let mut max_ratio = 0.0f64;
    let mut worst_xi = [0.0; 3];
    let mut worst_t = 0.0;
    for rec in records {
        let nt = rec.times.len();
        if rec.energy.len() != nt || rec.source_sq.len() != nt || nt < 2 {
            return Err(Error::InvalidParameter(
                "malformed record: mismatched series lengths".into(),
            ));
        }
        let e0 = rec.energy[0];
        for i in 1..nt {
            let t = rec.times[i];
            // trapezoid over [0, t]
            let mut conv = 0.0;
            for w in 1..=i {
                let dt = rec.times[w] - rec.times[w - 1];
                let f = |idx: usize| {
                    (-c1 * rec.eta * (t - rec.times[idx])).exp() * rec.source_sq[idx]
                };
                conv += 0.5 * dt * (f(w) + f(w - 1));
            }
            let rhs = (-c1 * rec.eta * t).exp() * e0 + k_const * conv;
            if rhs > 0.0 {
                let ratio = rec.energy[i] / rhs;
                if ratio > max_ratio {
                    max_ratio = ratio;
                    worst_xi = rec.xi;
                    worst_t = t;
                }
            } else if rec.energy[i] > 0.0 {
                return Err(Error::CheckFailed(format!(
                    "zero bound with nonzero energy at xi = {:?}, t = {t}",
                    rec.xi
                )));
            }
        }
    }
    Ok(DuhamelReport {
        max_ratio,
        worst_xi,
        worst_t,
    })
}
