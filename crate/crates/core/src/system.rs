//! First-order symmetric hyperbolic systems with (possibly non-symmetric)
//! relaxation, their Fourier symbols, Green matrices, and linear constraints;
//! includes the built-in two-fluid plasma (Euler-Maxwell) instance.

use ndarray::prelude::*;
use ndarray_linalg::{Eig, Eigh, UPLO};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, frobenius_norm, nullspace, sorted_eigenvalues, to_complex, CMat, CVec, Propagator,
};

/// Cross-product matrix: `omega_matrix(v) · w = v × w`.
pub fn omega_matrix(v: &[f64; 3]) -> Array2<f64> {
    arr2(&[
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EulerMaxwellParams {
    pub n_inf: f64,
    pub b_inf: [f64; 3],
    pub pressure_gamma: f64,
    pub pressure_k: f64,
}

impl Default for EulerMaxwellParams {
    fn default() -> Self {
        // K=1/2, gamma=2 makes the sound-speed coefficient a_inf = 1 at n_inf = 1
        Self {
            n_inf: 1.0,
            b_inf: [0.0; 3],
            pressure_gamma: 2.0,
            pressure_k: 0.5,
        }
    }
}

impl EulerMaxwellParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_inf > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "n_inf must be positive, got {}",
                self.n_inf
            )));
        }
        if !(self.pressure_k > 0.0) || !(self.pressure_gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pressure law requires K > 0 and gamma > 0, got K={}, gamma={}",
                self.pressure_k, self.pressure_gamma
            )));
        }
        Ok(())
    }

    pub fn pressure(&self, n: f64) -> f64 {
        self.pressure_k * n.powf(self.pressure_gamma)
    }

    /// p'(n) = K gamma n^{gamma-1}.
    pub fn pressure_prime(&self, n: f64) -> f64 {
        self.pressure_k * self.pressure_gamma * n.powf(self.pressure_gamma - 1.0)
    }

    /// a_inf = p'(n_inf)/n_inf.
    pub fn a_inf(&self) -> f64 {
        self.pressure_prime(self.n_inf) / self.n_inf
    }
}

#[derive(Debug, Clone)]
pub struct Constraints {
    /// Per-direction symbol factors, each m1 x m.
    pub q: Vec<Array2<f64>>,
    /// Zeroth-order part, m1 x m.
    pub r: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct HyperbolicSystem {
    pub m: usize,
    pub n: usize,
    pub a0: Array2<f64>,
    pub a: Vec<Array2<f64>>,
    pub l: Array2<f64>,
    pub constraints: Option<Constraints>,
}

pub const SYM_TOL: f64 = 1e-12;

impl HyperbolicSystem {
    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        if m == 0 || n == 0 {
            return Err(Error::InvalidSystem("m and n must be positive".into()));
        }
        let square = |mat: &Array2<f64>, name: &str| -> Result<()> {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::InvalidSystem(format!(
                    "{name} must be {m}x{m}, got {}x{}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            Ok(())
        };
        square(&self.a0, "A0")?;
        square(&self.l, "L")?;
        if self.a.len() != n {
            return Err(Error::InvalidSystem(format!(
                "expected {n} flux matrices, got {}",
                self.a.len()
            )));
        }
        for (j, aj) in self.a.iter().enumerate() {
            square(aj, &format!("A{}", j + 1))?;
            let asym = frobenius_norm(&to_complex(&(aj - &aj.t().to_owned())));
            if asym > SYM_TOL * (1.0 + frobenius_norm(&to_complex(aj))) {
                return Err(Error::InvalidSystem(format!(
                    "A{} is not symmetric (residual {asym:.3e})",
                    j + 1
                )));
            }
        }
        let a0_sym = frobenius_norm(&to_complex(&(&self.a0 - &self.a0.t().to_owned())));
        if a0_sym > SYM_TOL * (1.0 + frobenius_norm(&to_complex(&self.a0))) {
            return Err(Error::InvalidSystem("A0 is not symmetric".into()));
        }
        let (evals, _) = self.a0.eigh(UPLO::Lower)?;
        if evals.iter().cloned().fold(f64::INFINITY, f64::min) <= 0.0 {
            return Err(Error::InvalidSystem(
                "A0 is not positive definite".into(),
            ));
        }
        let l_sym = (&self.l + &self.l.t().to_owned()).mapv(|x| 0.5 * x);
        let (levals, _) = l_sym.eigh(UPLO::Lower)?;
        let lmin = levals.iter().cloned().fold(f64::INFINITY, f64::min);
        if lmin < -1e-10 {
            return Err(Error::InvalidSystem(format!(
                "symmetric part of L has negative eigenvalue {lmin:.3e}"
            )));
        }
        if let Some(c) = &self.constraints {
            let m1 = c.r.nrows();
            if m1 >= m {
                return Err(Error::InvalidSystem(format!(
                    "constraint row count m1={m1} must be < m={m}"
                )));
            }
            if c.q.len() != n {
                return Err(Error::InvalidSystem(
                    "constraint factor count must equal the space dimension".into(),
                ));
            }
            for (j, qj) in c.q.iter().enumerate() {
                if qj.nrows() != m1 || qj.ncols() != m {
                    return Err(Error::InvalidSystem(format!(
                        "Q{} must be {m1}x{m}",
                        j + 1
                    )));
                }
            }
            if c.r.ncols() != m {
                return Err(Error::InvalidSystem("R must have m columns".into()));
            }
        }
        Ok(())
    }

    /// A(omega) = sum_j A^j omega_j.
    pub fn flux_symbol(&self, omega: &[f64]) -> Array2<f64> {
        let mut out = Array2::zeros((self.m, self.m));
        for (aj, &wj) in self.a.iter().zip(omega) {
            out.scaled_add(wj, aj);
        }
        out
    }

    /// Largest characteristic speed: max |eigenvalue| of (A0)^{-1/2} A(omega) (A0)^{-1/2}
    /// over the axis directions (exact for the isotropic built-in system).
    pub fn max_speed(&self) -> Result<f64> {
        let (vals, vecs) = self.a0.eigh(UPLO::Lower)?;
        let inv_sqrt = {
            let d = Array2::from_diag(&vals.mapv(|x| 1.0 / x.sqrt()));
            vecs.dot(&d).dot(&vecs.t())
        };
        let mut cmax = 0.0f64;
        for j in 0..self.n {
            let mut omega = vec![0.0; self.n];
            omega[j] = 1.0;
            let sym = inv_sqrt.dot(&self.flux_symbol(&omega)).dot(&inv_sqrt);
            let sym = (&sym + &sym.t().to_owned()).mapv(|x| 0.5 * x);
            let (ev, _) = sym.eigh(UPLO::Lower)?;
            for v in ev.iter() {
                cmax = cmax.max(v.abs());
            }
        }
        Ok(cmax)
    }
}

/// Euler-Maxwell perturbation system, state ordering (rho, v, E, h), m=10, n=3.
pub fn build_euler_maxwell(params: &EulerMaxwellParams) -> Result<HyperbolicSystem> {
    params.validate()?;
    let (m, n) = (10usize, 3usize);
    let n_inf = params.n_inf;
    let a_inf = params.a_inf();
    let p_prime = params.pressure_prime(n_inf);

    let mut a0 = Array2::zeros((m, m));
    a0[[0, 0]] = a_inf;
    for i in 0..3 {
        a0[[1 + i, 1 + i]] = n_inf;
        a0[[4 + i, 4 + i]] = 1.0;
        a0[[7 + i, 7 + i]] = 1.0;
    }

    // A^j: pressure coupling between rho and v_j, plus the curl blocks
    // coupling E and h through the cross-product matrix of e_j.
    let mut a = Vec::with_capacity(n);
    for j in 0..n {
        let mut aj = Array2::zeros((m, m));
        aj[[0, 1 + j]] = p_prime;
        aj[[1 + j, 0]] = p_prime;
        let mut ej = [0.0; 3];
        ej[j] = 1.0;
        let om = omega_matrix(&ej);
        for r in 0..3 {
            for c in 0..3 {
                aj[[4 + r, 7 + c]] = -om[[r, c]];
                aj[[7 + r, 4 + c]] = om[[r, c]];
            }
        }
        a.push(aj);
    }

    // L: velocity relaxation + Lorentz rotation, and the v/E exchange that
    // makes L non-symmetric while keeping its symmetric part >= 0.
    let mut l = Array2::zeros((m, m));
    let om_b = omega_matrix(&params.b_inf);
    for r in 0..3 {
        for c in 0..3 {
            let eye = if r == c { 1.0 } else { 0.0 };
            l[[1 + r, 1 + c]] = n_inf * (eye - om_b[[r, c]]);
        }
        l[[1 + r, 4 + r]] = n_inf;
        l[[4 + r, 1 + r]] = -n_inf;
    }

    // Gauss constraints in symbol form: rho + i xi . E_hat = 0, i xi . h_hat = 0.
    let mut q = Vec::with_capacity(n);
    for j in 0..n {
        let mut qj = Array2::zeros((2, m));
        qj[[0, 4 + j]] = 1.0;
        qj[[1, 7 + j]] = 1.0;
        q.push(qj);
    }
    let mut r = Array2::zeros((2, m));
    r[[0, 0]] = 1.0;

    let sys = HyperbolicSystem {
        m,
        n,
        a0,
        a,
        l,
        constraints: Some(Constraints { q, r }),
    };
    sys.validate()?;
    Ok(sys)
}

#[derive(Debug, Clone)]
pub struct SymbolEvaluation {
    pub xi: Vec<f64>,
    pub xi_norm: f64,
    /// Unit direction xi/|xi|; `None` at xi = 0.
    pub omega: Option<Vec<f64>>,
    pub phi_hat: CMat,
}

/// Phi(xi) = (A0)^{-1} (i |xi| A(omega) + L); Phi(0) = (A0)^{-1} L.
pub fn symbol(sys: &HyperbolicSystem, xi: &[f64]) -> Result<SymbolEvaluation> {
    if xi.len() != sys.n {
        return Err(Error::InvalidParameter(format!(
            "frequency has {} components, system has n={}",
            xi.len(),
            sys.n
        )));
    }
    let xi_norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let omega: Option<Vec<f64>> =
        (xi_norm > 0.0).then(|| xi.iter().map(|x| x / xi_norm).collect());
    // (A0)^{-1} is diagonal-friendly but A0 is generally only spd; solve
    // row-wise via the symmetric eigendecomposition once.
    let (vals, vecs) = sys.a0.eigh(UPLO::Lower)?;
    let inv = {
        let d = Array2::from_diag(&vals.mapv(|x| 1.0 / x));
        vecs.dot(&d).dot(&vecs.t())
    };
    let mut inner = to_complex(&sys.l);
    if let Some(om) = &omega {
        let flux = sys.flux_symbol(om);
        let factor = Complex64::new(0.0, xi_norm);
        inner = inner + to_complex(&flux).mapv(|z| z * factor);
    }
    let phi_hat = to_complex(&inv).dot(&inner);
    Ok(SymbolEvaluation {
        xi: xi.to_vec(),
        xi_norm,
        omega,
        phi_hat,
    })
}

/// e^{-t Phi(xi)}.
pub fn green_matrix(sys: &HyperbolicSystem, xi: &[f64], t: f64) -> Result<CMat> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    let ev = symbol(sys, xi)?;
    Propagator::new(ev.phi_hat)?.green(t)
}

#[derive(Debug, Clone)]
pub struct ConstraintSubspace {
    pub xi: Vec<f64>,
    /// C(xi) = i sum_j Q^j xi_j + R.
    pub c: CMat,
    /// Orthonormal columns spanning ker C(xi).
    pub basis: CMat,
    /// Orthogonal projector onto ker C(xi).
    pub projector: CMat,
}

pub fn constraint_subspace(sys: &HyperbolicSystem, xi: &[f64]) -> Result<ConstraintSubspace> {
    let cons = sys.constraints.as_ref().ok_or(Error::NoConstraints)?;
    let mut c = to_complex(&cons.r);
    for (qj, &xij) in cons.q.iter().zip(xi) {
        let factor = Complex64::new(0.0, xij);
        c = c + to_complex(qj).mapv(|z| z * factor);
    }
    let basis = nullspace(&c, 1e-12)?;
    let projector = basis.dot(&adjoint(&basis));
    Ok(ConstraintSubspace {
        xi: xi.to_vec(),
        c,
        basis,
        projector,
    })
}

#[derive(Debug, Clone)]
pub struct RestrictedSpectrum {
    pub xi: Vec<f64>,
    pub eigenvalues: Vec<Complex64>,
    /// min Re over the (restricted) spectrum: the exponential decay margin.
    pub abscissa: f64,
    /// ||(I - P) Phi basis||_F when constraints are present.
    pub invariance_residual: f64,
}

pub const INVARIANCE_TOL: f64 = 1e-9;

/// Spectrum of Phi(xi), restricted to the constraint subspace when the system
/// carries one. The restriction basis^H Phi basis is only meaningful when the
/// subspace is Phi-invariant; the residual is checked and reported.
pub fn restricted_spectrum(sys: &HyperbolicSystem, xi: &[f64]) -> Result<RestrictedSpectrum> {
    let ev = symbol(sys, xi)?;
    let (mat, invariance_residual) = match &sys.constraints {
        Some(_) => {
            let sub = constraint_subspace(sys, xi)?;
            let phi_basis = ev.phi_hat.dot(&sub.basis);
            let leak = &phi_basis - &sub.projector.dot(&phi_basis);
            let residual = frobenius_norm(&leak);
            if residual > INVARIANCE_TOL {
                return Err(Error::InvarianceViolation {
                    xi: xi.to_vec(),
                    residual,
                    tol: INVARIANCE_TOL,
                });
            }
            (adjoint(&sub.basis).dot(&phi_basis), residual)
        }
        None => (ev.phi_hat.clone(), 0.0),
    };
    let (vals, _) = mat.eig()?;
    let eigenvalues = sorted_eigenvalues(&vals, 1e-10);
    let abscissa = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    Ok(RestrictedSpectrum {
        xi: xi.to_vec(),
        eigenvalues,
        abscissa,
        invariance_residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub a0_spd: bool,
    pub aj_symmetric: bool,
    pub l_nonneg: bool,
    pub l_kernel_nontrivial: bool,
    pub l_symmetric: bool,
}

pub fn check_structure(sys: &HyperbolicSystem) -> Result<StructureReport> {
    let tol = 1e-10;
    let (a0_evals, _) = sys.a0.eigh(UPLO::Lower)?;
    let a0_sym = frobenius_norm(&to_complex(&(&sys.a0 - &sys.a0.t().to_owned())));
    let a0_spd =
        a0_sym <= tol && a0_evals.iter().cloned().fold(f64::INFINITY, f64::min) > 0.0;
    let aj_symmetric = sys.a.iter().all(|aj| {
        frobenius_norm(&to_complex(&(aj - &aj.t().to_owned())))
            <= tol * (1.0 + frobenius_norm(&to_complex(aj)))
    });
    let l_sym_part = (&sys.l + &sys.l.t().to_owned()).mapv(|x| 0.5 * x);
    let (l_evals, _) = l_sym_part.eigh(UPLO::Lower)?;
    let l_min = l_evals.iter().cloned().fold(f64::INFINITY, f64::min);
    let l_nonneg = l_min >= -tol;
    // kernel of the quadratic form z^T L z = z^T L1 z
    let l_kernel_nontrivial = l_evals.iter().any(|&v| v.abs() <= tol);
    let l_asym = frobenius_norm(&to_complex(&(&sys.l - &sys.l.t().to_owned())));
    let l_symmetric = l_asym <= tol * (1.0 + frobenius_norm(&to_complex(&sys.l)));
    Ok(StructureReport {
        a0_spd,
        aj_symmetric,
        l_nonneg,
        l_kernel_nontrivial,
        l_symmetric,
    })
}

/// Deterministic direction set: the 6 axis directions, the 8 cube diagonals,
/// plus `extra` seeded uniform sphere points.
pub fn direction_set(n: usize, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut dirs = Vec::new();
    for j in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[j] = s;
            dirs.push(d);
        }
    }
    if n == 3 {
        let inv = 1.0 / 3.0f64.sqrt();
        for &sx in &[1.0, -1.0] {
            for &sy in &[1.0, -1.0] {
                for &sz in &[1.0, -1.0] {
                    dirs.push(vec![sx * inv, sy * inv, sz * inv]);
                }
            }
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..extra {
        if n == 1 {
            dirs.push(vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }]);
        } else if n == 2 {
            let theta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            dirs.push(vec![theta.cos(), theta.sin()]);
        } else {
            // area-preserving sphere parameterization
            let z: f64 = 1.0 - 2.0 * rng.gen::<f64>();
            let phi: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            let r = (1.0 - z * z).max(0.0).sqrt();
            dirs.push(vec![r * phi.cos(), r * phi.sin(), z]);
        }
    }
    dirs
}

/// Log-spaced radii for symbol scans.
pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub xi_norm: f64,
    pub dir_id: usize,
    pub margin: f64,
    pub eta: f64,
    /// margin / eta, the per-point admissible rate constant.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumScan {
    pub rows: Vec<SpectrumRow>,
    /// Largest c0 with margin >= c0 * eta over the whole grid.
    pub c0: f64,
    /// Log-log slope of the margin for |xi| <= low_cut.
    pub low_exponent: f64,
    pub low_r2: f64,
    /// Log-log slope of the margin for |xi| >= high_cut.
    pub high_exponent: f64,
    pub high_r2: f64,
}

/// Scan the restricted decay margin mu(xi) over radii x directions, compare
/// it with the dissipative rate eta, and fit its low/high frequency power
/// laws. The scan is the numerical counterpart of the pointwise bound
/// e^{-c0 eta(xi) t} for the constrained Green matrix.
pub fn spectrum_scan(
    sys: &HyperbolicSystem,
    radii: &[f64],
    dirs: &[Vec<f64>],
    profile: &crate::decay::EtaProfile,
    low_cut: f64,
    high_cut: f64,
) -> Result<SpectrumScan> {
    use rayon::prelude::*;
    let points: Vec<(usize, usize)> = (0..radii.len())
        .flat_map(|i| (0..dirs.len()).map(move |d| (i, d)))
        .collect();
    let rows: Result<Vec<SpectrumRow>> = points
        .par_iter()
        .map(|&(i, d)| {
            let r = radii[i];
            let xi: Vec<f64> = dirs[d].iter().map(|w| w * r).collect();
            let spec = restricted_spectrum(sys, &xi)?;
            let eta = profile.eta(r);
            Ok(SpectrumRow {
                xi_norm: r,
                dir_id: d,
                margin: spec.abscissa,
                eta,
                ratio: if eta > 0.0 { spec.abscissa / eta } else { f64::NAN },
            })
        })
        .collect();
    let rows = rows?;
    let c0 = rows
        .iter()
        .filter(|r| r.eta > 0.0)
        .map(|r| r.ratio)
        .fold(f64::INFINITY, f64::min);
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
    let (low_exponent, low_r2) = crate::decay::loglog_fit(&low)?;
    let (high_exponent, high_r2) = crate::decay::loglog_fit(&high)?;
    Ok(SpectrumScan {
        rows,
        c0,
        low_exponent,
        low_r2,
        high_exponent,
        high_r2,
    })
}

// ---- JSON ingestion ----------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: Option<EulerMaxwellParams>,
    },
    Explicit {
        m: usize,
        n: usize,
        #[serde(rename = "A0")]
        a0: Vec<Vec<f64>>,
        #[serde(rename = "A")]
        a: Vec<Vec<Vec<f64>>>,
        #[serde(rename = "L")]
        l: Vec<Vec<f64>>,
        #[serde(rename = "Q", default)]
        q: Option<Vec<Vec<Vec<f64>>>>,
        #[serde(rename = "R", default)]
        r: Option<Vec<Vec<f64>>>,
    },
}

fn matrix_from_rows(rows: &[Vec<f64>], name: &str) -> Result<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidSystem(format!("{name} must be a rectangular matrix")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::InvalidSystem(format!("{name}: {e}")))
}

pub fn system_from_spec(spec: &SystemSpec) -> Result<HyperbolicSystem> {
    match spec {
        SystemSpec::Builtin { builtin, params } => {
            if builtin != "euler_maxwell" {
                return Err(Error::InvalidSystem(format!(
                    "unknown builtin system '{builtin}'"
                )));
            }
            build_euler_maxwell(&params.clone().unwrap_or_default())
        }
        SystemSpec::Explicit { m, n, a0, a, l, q, r } => {
            let a0 = matrix_from_rows(a0, "A0")?;
            let l = matrix_from_rows(l, "L")?;
            let a: Result<Vec<_>> = a
                .iter()
                .enumerate()
                .map(|(j, rows)| matrix_from_rows(rows, &format!("A{}", j + 1)))
                .collect();
            let constraints = match (q, r) {
                (Some(q), Some(r)) => {
                    let q: Result<Vec<_>> = q
                        .iter()
                        .enumerate()
                        .map(|(j, rows)| matrix_from_rows(rows, &format!("Q{}", j + 1)))
                        .collect();
                    Some(Constraints {
                        q: q?,
                        r: matrix_from_rows(r, "R")?,
                    })
                }
                (None, None) => None,
                _ => {
                    return Err(Error::InvalidSystem(
                        "constraints require both Q and R".into(),
                    ))
                }
            };
            let sys = HyperbolicSystem {
                m: *m,
                n: *n,
                a0,
                a: a?,
                l,
                constraints,
            };
            sys.validate()?;
            Ok(sys)
        }
    }
}

/// Apply Phi(xi) to a state vector without forming intermediate matrices twice.
pub fn apply_symbol(ev: &SymbolEvaluation, z: &CVec) -> CVec {
    ev.phi_hat.dot(z)
}

/// Rotate an Euler-Maxwell state/frequency pair: used by the spectral
/// rotation-equivariance property tests.
pub fn rotate_vec3(g: &Array2<f64>, v: &[f64]) -> Vec<f64> {
    let arr = arr1(v);
    g.dot(&arr).to_vec()
}
