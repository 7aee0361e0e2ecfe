//! Acceptance suite: one pass/fail line per criterion (run with
//! `cargo test --test acceptance -- --nocapture` to see them live).

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use decaylab::decay::{
    high_freq_weight_integral, log_times, loglog_fit, predict, verify_lpqlr, EtaProfile,
    NormSpec,
};
use decaylab::energy::{
    energy_identity_residual, integrate_mode, lyapunov, search_params, Forcing,
    FrequencyState,
};
use decaylab::grid::GridField;
use decaylab::hyp::{constraint_split, remark_consistency, verify_decay_property};
use decaylab::solver::{
    build_initial_data, decay_report, gn_check, gn_ratios, nonlinear_terms, simulate,
    subsample_indices, InitProfile, SolverConfig,
};
use decaylab::system::{
    build_euler_maxwell, check_structure, direction_set, log_radii, spectrum_scan,
    EulerMaxwellParams,
};

type CheckResult = Result<String, String>;

fn gaussian_field(dims: &[usize], lens: &[f64]) -> GridField {
    GridField::sample_scalar(dims, lens, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-r2 / 8.0).exp()
    })
    .expect("gaussian field")
}

fn base_solver_cfg() -> SolverConfig {
    SolverConfig {
        grid_n: 64,
        box_len: 64.0 * PI,
        params: EulerMaxwellParams::default(),
        profile: InitProfile::GaussianBump,
        epsilon: 1e-3,
        seed: 11,
        t_end: 70.0,
        dt: Some(0.05),
        sample_dt: 0.25,
        linear: false,
        spectra_subsample: 6,
        lyapunov: None,
    }
}

// criterion 1: the constrained spectral margin admits a uniform positive
// rate constant and follows the |xi|^2 / |xi|^{-2} power laws, within a
// one-minute scan.
fn criterion_1() -> CheckResult {
    let start = Instant::now();
    let sys = build_euler_maxwell(&EulerMaxwellParams::default()).map_err(|e| e.to_string())?;
    let radii = log_radii(1e-2, 1e2, 24);
    let dirs = direction_set(3, 0, 0); // 14 deterministic directions
    if dirs.len() < 14 {
        return Err(format!("direction set too small: {}", dirs.len()));
    }
    let scan = spectrum_scan(&sys, &radii, &dirs, &EtaProfile::standard(), 0.1, 10.0)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut problems = Vec::new();
    if !(scan.c0 > 0.0) {
        problems.push(format!("c0 = {:.4} not positive", scan.c0));
    }
    if (scan.low_exponent - 2.0).abs() > 0.15 {
        problems.push(format!("low exponent {:.4} != 2 +- 0.15", scan.low_exponent));
    }
    if (scan.high_exponent + 2.0).abs() > 0.15 {
        problems.push(format!("high exponent {:.4} != -2 +- 0.15", scan.high_exponent));
    }
    if elapsed.as_secs() >= 60 {
        problems.push(format!("scan took {elapsed:.1?} (>= 60 s)"));
    }
    if problems.is_empty() {
        Ok(format!(
            "c0 = {:.4}, exponents ({:.3}, {:.3}), {} points in {elapsed:.1?}",
            scan.c0,
            scan.low_exponent,
            scan.high_exponent,
            scan.rows.len()
        ))
    } else {
        Err(problems.join("; "))
    }
}

// criterion 2: the two-sided kernel bound reproduces the predicted low/high
// exponents for the six reference tuples in dimensions 1-3, and the
// calibrated constant for the flagship sup-norm tuple varies by < 2x.
fn criterion_2() -> CheckResult {
    let profile = EtaProfile::standard();
    let times = log_times(10.0, 1000.0, 24);
    let tuples = [
        (1.0, 2.0, 0u32, 0u32, 2.0),
        (1.0, 2.0, 1, 0, 2.0),
        (1.0, 1.0, 1, 0, 2.0),
        (1.0, 1.0, 0, 0, 2.0),
        (1.0, 2.0, 1, 1, 2.0),
        (2.0, 2.0, 1, 0, 2.0),
    ];
    let mut problems = Vec::new();
    let mut checked = 0usize;
    for n in 1u32..=3 {
        let pts = match n {
            1 => 1024usize,
            2 => 256,
            _ => 128,
        };
        let dims = vec![pts; n as usize];
        let lens = vec![64.0 * PI; n as usize];
        let phi = gaussian_field(&dims, &lens);
        for &(q, r, k, j, l) in &tuples {
            let spec = match NormSpec::new(2.0, q, r, k, j, l, n) {
                Ok(s) => s,
                Err(e) => {
                    problems.push(format!("n={n} tuple ({q},{r},{k},{j},{l}): {e}"));
                    continue;
                }
            };
            let pred = predict(&spec, &profile).map_err(|e| e.to_string())?;
            let report = match verify_lpqlr(&phi, &spec, &profile, &times, 1.0) {
                Ok(rep) => rep,
                Err(e) => {
                    problems.push(format!("n={n} tuple ({q},{r},{k},{j},{l}): {e}"));
                    continue;
                }
            };
            checked += 1;
            if (report.low_fit - pred.low_f64()).abs() > 0.05 {
                problems.push(format!(
                    "n={n} ({q},{r},{k},{j},{l}): low fit {:.4} vs {:.4}",
                    report.low_fit,
                    pred.low_f64()
                ));
            }
            if (report.high_fit - pred.high_f64()).abs() > 0.1 {
                problems.push(format!(
                    "n={n} ({q},{r},{k},{j},{l}): high fit {:.4} vs {:.4}",
                    report.high_fit,
                    pred.high_f64()
                ));
            }
        }
    }
    // flagship tuple in 3D: the calibrated constant must be stable in time
    let dims = vec![128usize; 3];
    let lens = vec![64.0 * PI; 3];
    let phi = gaussian_field(&dims, &lens);
    let spec = NormSpec::new(2.0, 1.0, 2.0, 0, 0, 2.0, 3).map_err(|e| e.to_string())?;
    let report = verify_lpqlr(&phi, &spec, &profile, &times, 1.0).map_err(|e| e.to_string())?;
    let spread = report.c_star / report.c_star_min.max(1e-300);
    if !(spread < 2.0) {
        problems.push(format!("flagship C* spread {spread:.3} >= 2"));
    }
    if problems.is_empty() {
        Ok(format!(
            "{checked} tuple/dimension pairs within tolerance; flagship C* spread {spread:.3}"
        ))
    } else {
        Err(problems.join("; "))
    }
}

// criterion 3: the high-frequency weight integral follows the closed-form
// power law t^{(n - l s2)/sigma2} for three convergent exponent triples.
fn criterion_3() -> CheckResult {
    let profile = EtaProfile::standard();
    let triples = [(4.0f64, 1.0f64), (2.0, 2.0), (3.0, 1.5)];
    let times = log_times(10.0, 1e4, 20);
    let mut details = Vec::new();
    for &(l, s2) in &triples {
        let series: Vec<(f64, f64)> = times
            .iter()
            .map(|&t| {
                high_freq_weight_integral(&profile, l, s2, 3, 1.0, 0.25, t).map(|v| (t, v))
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let (slope, _) = loglog_fit(&series).map_err(|e| e.to_string())?;
        let predicted = (3.0 - l * s2) / 2.0;
        if (slope - predicted).abs() > 0.05 {
            return Err(format!(
                "(l={l}, s2={s2}): slope {slope:.4} vs predicted {predicted:.4}"
            ));
        }
        details.push(format!("(l={l},s2={s2}): {slope:.3}~{predicted:.3}"));
    }
    Ok(details.join(", "))
}

// criterion 4: the Lyapunov weight search certifies c1 > 0 with a 2-sided
// norm equivalence in [1/2, 2], and along 100 random constrained linear
// trajectories e^{c1 eta t} E is nonincreasing with the energy identity
// satisfied to 1e-8.
fn criterion_4() -> CheckResult {
    let em = EulerMaxwellParams::default();
    let profile = EtaProfile::standard();
    let radii = log_radii(1e-2, 1e2, 16);
    let dirs = direction_set(3, 0, 0);
    let mut grid: Vec<Vec<f64>> = Vec::new();
    for &r in &radii {
        for d in dirs.iter().take(6) {
            grid.push(d.iter().map(|w| w * r).collect());
        }
    }
    grid.push(vec![0.0, 0.0, 0.0]);
    let search = search_params(&em, &grid, &profile).map_err(|e| e.to_string())?;
    if !(search.params.c1 > 0.0) {
        return Err(format!("certified c1 = {:.4e} not positive", search.params.c1));
    }
    if search.equiv_min < 0.5 || search.equiv_max > 2.0 {
        return Err(format!(
            "equivalence range [{:.3}, {:.3}] outside [1/2, 2]",
            search.equiv_min, search.equiv_max
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut max_residual = 0.0f64;
    for traj in 0..100 {
        let r = 10f64.powf(rng.gen_range(-2.0..2.0));
        let mut dir = [0.0f64; 3];
        loop {
            for d in dir.iter_mut() {
                *d = rng.gen_range(-1.0..1.0);
            }
            let norm: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 {
                for d in dir.iter_mut() {
                    *d /= norm;
                }
                break;
            }
        }
        let xi = [dir[0] * r, dir[1] * r, dir[2] * r];
        let s0 = FrequencyState::random_constrained(xi, &mut rng);
        let eta = profile.eta(r);
        let horizon = (2.0 / (search.params.c1 * eta)).min(40.0);
        let mut last = f64::INFINITY;
        let mut violated: Option<String> = None;
        let mut obs = |t: f64, s: &FrequencyState| {
            let weighted = lyapunov(s, &search.params) * (search.params.c1 * eta * t).exp();
            if weighted > last * (1.0 + 1e-7) && violated.is_none() {
                violated = Some(format!(
                    "trajectory {traj}: weighted E grew at t = {t:.3} (xi = {xi:?})"
                ));
            }
            last = weighted;
            let res = energy_identity_residual(s, 1.0, 1.0, &[0.0; 3], &Forcing::none());
            max_residual = max_residual.max(res);
        };
        integrate_mode(&s0, 1.0, 1.0, &[0.0; 3], horizon, None, Some(&mut obs));
        if let Some(msg) = violated {
            return Err(msg);
        }
    }
    if max_residual > 1e-8 {
        return Err(format!("energy identity residual {max_residual:.3e} > 1e-8"));
    }
    Ok(format!(
        "alpha = ({}, {}), c1 = {:.4}, equivalence [{:.3}, {:.3}], \
         identity residual {max_residual:.1e} over 100 trajectories",
        search.params.alpha1,
        search.params.alpha2,
        search.params.c1,
        search.equiv_min,
        search.equiv_max
    ))
}

// criterion 5: full solver decay. Linear 64^3 run reproduces the t^{-3/4}
// law (+- 0.1); the nonlinear run stays in [-0.9, -0.6] with a factor-4
// compensated band, bounded amplification, and constraint residuals <= 1e-8.
fn criterion_5() -> CheckResult {
    let lin_cfg = SolverConfig {
        t_end: 100.0,
        dt: Some(1.0),
        sample_dt: 1.0,
        linear: true,
        ..base_solver_cfg()
    };
    let lin = simulate(&lin_cfg).map_err(|e| e.to_string())?;
    let lin_decay = decay_report(&lin.monitors, (20.0, 100.0)).map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    if (lin_decay.slope + 0.75).abs() > 0.1 {
        problems.push(format!(
            "linear slope {:.4} outside -0.75 +- 0.1",
            lin_decay.slope
        ));
    }
    for m in &lin.monitors {
        if m.div_e_res > 1e-8 || m.div_h_res > 1e-8 {
            problems.push(format!(
                "linear constraint residual ({:.2e}, {:.2e}) at t = {}",
                m.div_e_res, m.div_h_res, m.t
            ));
            break;
        }
    }
    let non_cfg = base_solver_cfg();
    let non = simulate(&non_cfg).map_err(|e| e.to_string())?;
    let non_decay = decay_report(&non.monitors, (20.0, 70.0)).map_err(|e| e.to_string())?;
    if !(-0.9..=-0.6).contains(&non_decay.slope) {
        problems.push(format!(
            "nonlinear slope {:.4} outside [-0.9, -0.6]",
            non_decay.slope
        ));
    }
    if non_decay.band_ratio > 4.0 {
        problems.push(format!(
            "compensated band ratio {:.3} > 4",
            non_decay.band_ratio
        ));
    }
    if non_decay.amplification > 10.0 {
        problems.push(format!(
            "N(T)/N(1) = {:.3} > 10",
            non_decay.amplification
        ));
    }
    for m in &non.monitors {
        if m.div_e_res > 1e-8 || m.div_h_res > 1e-8 {
            problems.push(format!(
                "nonlinear constraint residual ({:.2e}, {:.2e}) at t = {}",
                m.div_e_res, m.div_h_res, m.t
            ));
            break;
        }
    }
    if problems.is_empty() {
        Ok(format!(
            "linear slope {:.4}, nonlinear slope {:.4}, band {:.3}, N(T)/N(1) = {:.3}",
            lin_decay.slope, non_decay.slope, non_decay.band_ratio, non_decay.amplification
        ))
    } else {
        Err(problems.join("; "))
    }
}

// criterion 6: the quadratic source terms scale with amplitude to order
// 2 +- 0.01 (flux contraction and Lorentz source separately).
fn criterion_6() -> CheckResult {
    let base = SolverConfig {
        grid_n: 32,
        box_len: 32.0 * PI,
        t_end: 1.0,
        ..base_solver_cfg()
    };
    let mut q_series = Vec::new();
    let mut r_series = Vec::new();
    let mut f_series = Vec::new();
    for &eps in &[1e-3, 2e-3, 4e-3, 8e-3] {
        let cfg = SolverConfig {
            epsilon: eps,
            ..base.clone()
        };
        let state = build_initial_data(&cfg).map_err(|e| e.to_string())?;
        let idx = subsample_indices(&state, 8);
        let eval = nonlinear_terms(&state, &cfg.params, &idx).map_err(|e| e.to_string())?;
        let q_norm: f64 = eval
            .sources
            .iter()
            .flat_map(|s| s.q_omega.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        let r_norm: f64 = eval
            .sources
            .iter()
            .flat_map(|s| s.r.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        q_series.push((eps, q_norm));
        r_series.push((eps, r_norm));
        f_series.push((eps, eval.forcing.l2_spectral()));
    }
    let (q_slope, _) = loglog_fit(&q_series).map_err(|e| e.to_string())?;
    let (r_slope, _) = loglog_fit(&r_series).map_err(|e| e.to_string())?;
    let (f_slope, _) = loglog_fit(&f_series).map_err(|e| e.to_string())?;
    for (name, slope) in [("flux", q_slope), ("source", r_slope), ("forcing", f_slope)] {
        if (slope - 2.0).abs() > 0.01 {
            return Err(format!("{name} scaling exponent {slope:.4} != 2 +- 0.01"));
        }
    }
    Ok(format!(
        "scaling exponents: flux {q_slope:.4}, source {r_slope:.4}, forcing {f_slope:.4}"
    ))
}

// criterion 7: interpolation-inequality ratios equal 1 on single Fourier
// modes to machine precision, and the corpus maximum is resolution-stable
// to 5%.
fn criterion_7() -> CheckResult {
    let lens = [16.0 * PI; 3];
    for mode in [1.0f64, 3.0, 7.0] {
        let k = std::f64::consts::TAU / lens[0] * mode;
        let field = GridField::sample_scalar(&[32, 32, 32], &lens, |x| (k * x[0]).sin())
            .map_err(|e| e.to_string())?;
        let ratios = gn_ratios(&field, 0).map_err(|e| e.to_string())?;
        for r in ratios {
            if (r - 1.0).abs() > 1e-12 {
                return Err(format!("mode {mode}: ratio {r} differs from 1 by > 1e-12"));
            }
        }
    }
    let mut max_ratios = Vec::new();
    for grid_n in [16usize, 32] {
        let cfg = SolverConfig {
            grid_n,
            box_len: 16.0 * PI,
            t_end: 1.0,
            ..base_solver_cfg()
        };
        let state = build_initial_data(&cfg).map_err(|e| e.to_string())?;
        let report = gn_check(&[&state]).map_err(|e| e.to_string())?;
        max_ratios.push(report.max_ratios);
    }
    for i in 0..3 {
        let (a, b) = (max_ratios[0][i], max_ratios[1][i]);
        if (a - b).abs() / b.max(1e-300) > 0.05 {
            return Err(format!(
                "corpus ratio {i} unstable across resolutions: {a:.5} vs {b:.5}"
            ));
        }
    }
    Ok(format!(
        "single-mode equality to 1e-12; corpus ratios {:?} stable to 5%",
        max_ratios[1].map(|r| (r * 1e4).round() / 1e4)
    ))
}

// criterion 8: general-system machinery: exact rational agreement of the
// rate formulas, projector identities to 1e-12, constraint persistence of
// the evolved data to 1e-9.
fn criterion_8() -> CheckResult {
    for (n, k, j, l) in [(3u32, 0u32, 0u32, 2i64), (3, 1, 0, 2), (3, 2, 1, 3), (2, 1, 1, 1)] {
        if !remark_consistency(n, k, j, l).map_err(|e| e.to_string())? {
            return Err(format!("rate formulas disagree at (n,k,j,l) = ({n},{k},{j},{l})"));
        }
    }
    let sys = build_euler_maxwell(&EulerMaxwellParams::default()).map_err(|e| e.to_string())?;
    let split = constraint_split(&sys).map_err(|e| e.to_string())?;
    split.validate().map_err(|e| e.to_string())?; // 1e-12 identities
    if split.rank != 1 {
        return Err(format!("constraint projector rank {} != 1", split.rank));
    }
    let n = 16usize;
    let lens = vec![32.0 * PI; 3];
    let mut init = GridField::zeros(&[n, n, n], &lens, 10).map_err(|e| e.to_string())?;
    let mut x = [0.0; 3];
    for idx in 0..init.total_points() {
        init.coords(idx, &mut x);
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let g = (-r2 / 32.0).exp();
        init.data[0][idx] = num_complex::Complex64::new(g, 0.0);
        init.data[1][idx] = num_complex::Complex64::new(0.5 * g, 0.0);
        init.data[8][idx] = num_complex::Complex64::new(-0.7 * g, 0.0);
    }
    let spec = NormSpec::new(2.0, 1.0, 2.0, 0, 0, 2.0, 3).map_err(|e| e.to_string())?;
    let report = verify_decay_property(
        &sys,
        &init,
        &spec,
        &EtaProfile::standard(),
        &log_times(1.0, 100.0, 10),
        1.0,
    )
    .map_err(|e| e.to_string())?;
    if report.constraint_persistence > 1e-9 {
        return Err(format!(
            "constraint persistence {:.3e} > 1e-9",
            report.constraint_persistence
        ));
    }
    Ok(format!(
        "rate formulas exact; projector rank 1; persistence {:.1e}; C* = {:.3e}",
        report.constraint_persistence, report.c_star
    ))
}

// criterion 9: structural classification of the plasma system: symmetric
// fluxes, positive-definite weight, degenerate nonnegative symmetric part of
// the relaxation, and a genuinely non-symmetric relaxation matrix.
fn criterion_9() -> CheckResult {
    let sys = build_euler_maxwell(&EulerMaxwellParams::default()).map_err(|e| e.to_string())?;
    let s = check_structure(&sys).map_err(|e| e.to_string())?;
    let got = (
        s.a0_spd,
        s.aj_symmetric,
        s.l_nonneg,
        s.l_kernel_nontrivial,
        s.l_symmetric,
    );
    let want = (true, true, true, true, false);
    if got != want {
        return Err(format!("structure flags {got:?}, expected {want:?}"));
    }
    Ok(format!("structure flags {got:?}"))
}

#[test]
fn acceptance_criteria() {
    let criteria: Vec<(usize, &str, fn() -> CheckResult)> = vec![
        (1, "spectral margin power laws", criterion_1),
        (2, "two-sided kernel norm bounds", criterion_2),
        (3, "weight quadrature power law", criterion_3),
        (4, "Lyapunov functional certification", criterion_4),
        (5, "solver decay rates", criterion_5),
        (6, "quadratic source scaling", criterion_6),
        (7, "interpolation ratios", criterion_7),
        (8, "general-system verification", criterion_8),
        (9, "structural classification", criterion_9),
    ];
    let mut failures = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run)
            .unwrap_or_else(|p| Err(format!("panicked: {p:?}")));
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => {
                println!("criterion {id} ({name}): PASS [{elapsed:.1?}] -- {detail}");
            }
            Err(detail) => {
                println!("criterion {id} ({name}): FAIL [{elapsed:.1?}] -- {detail}");
                failures.push(format!("criterion {id} ({name}): {detail}"));
            }
        }
    }
    assert!(
        failures.is_empty(),
        "{} acceptance criteria failed:\n{}",
        failures.len(),
        failures.join("\n")
    );
}
