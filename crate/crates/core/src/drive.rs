//! Drive protocols: the time-dependent hoppings `alpha_i(t)` and field
//! components `beta_j(t)`, and the phase integrals
//!
//! ```text
//! f_i(t)  = sum_j sigma_ji int_0^t beta_j ds
//! F_ji(t) = -i sigma_ji int_0^t alpha_i e^{i f_i} ds
//! ```
//!
//! `f_i` appears inside the integrand of `F_ji`, so both are advanced jointly
//! as one coupled system with a classical fourth-order scheme; halving the
//! step (Richardson) supplies the error estimate.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DriveError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid drive: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterpOrder {
    Linear,
    Cubic,
}

/// Uniformly sampled series with linear or cubic interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSeries {
    t0: f64,
    dt: f64,
    values: Vec<C64>,
    order: InterpOrder,
    /// Natural-spline second derivatives, filled on construction for cubic.
    #[serde(skip)]
    second: Vec<C64>,
}

impl SampledSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<C64>, order: InterpOrder) -> Result<Self, DriveError> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(DriveError::InvalidInput("sampled grid must have finite, positive spacing".into()));
        }
        if values.len() < 2 {
            return Err(DriveError::InvalidInput("sampled drive needs at least two samples".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(DriveError::InvalidInput("non-finite drive sample".into()));
        }
        let second = match order {
            InterpOrder::Linear => Vec::new(),
            InterpOrder::Cubic => natural_spline_second(&values, dt),
        };
        Ok(SampledSeries { t0, dt, values, order, second })
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.values.len() - 1) as f64
    }

    fn value(&self, t: f64) -> Result<C64, DriveError> {
        let eps = 1e-12 * self.dt.max(1.0);
        if t < self.t0 - eps || t > self.t_end() + eps {
            return Err(DriveError::Domain(format!(
                "t = {t} outside sampled range [{}, {}]",
                self.t0,
                self.t_end()
            )));
        }
        let s = ((t - self.t0) / self.dt).clamp(0.0, (self.values.len() - 1) as f64);
        let k = (s.floor() as usize).min(self.values.len() - 2);
        let u = s - k as f64;
        match self.order {
            InterpOrder::Linear => Ok(self.values[k] * (1.0 - u) + self.values[k + 1] * u),
            InterpOrder::Cubic => {
                let a = 1.0 - u;
                let h2 = self.dt * self.dt / 6.0;
                Ok(self.values[k] * a + self.values[k + 1] * u
                    + (self.second[k] * (a * a * a - a) + self.second[k + 1] * (u * u * u - u))
                        * h2)
            }
        }
    }
}

fn natural_spline_second(values: &[C64], dt: f64) -> Vec<C64> {
    let n = values.len();
    let mut second = vec![C64::new(0.0, 0.0); n];
    if n < 3 {
        return second;
    }
    // interior unknowns u_k = second[k+1], k = 0..m-1, with
    // u_{k-1} + 4 u_k + u_{k+1} = 6 (v_{k+2} - 2 v_{k+1} + v_k) / dt^2
    let m = n - 2;
    let mut diag = vec![4.0; m];
    let mut rhs: Vec<C64> = (0..m)
        .map(|k| (values[k + 2] - values[k + 1] * 2.0 + values[k]) * (6.0 / (dt * dt)))
        .collect();
    for k in 1..m {
        let w = 1.0 / diag[k - 1];
        diag[k] -= w;
        let carried = rhs[k - 1] * w;
        rhs[k] -= carried;
    }
    second[m] = rhs[m - 1] / diag[m - 1];
    for k in (0..m - 1).rev() {
        second[k + 1] = (rhs[k] - second[k + 2]) / diag[k];
    }
    second
}

/// One drive component as a function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Waveform {
    Constant(C64),
    /// `amplitude * cos(omega t + phase)`
    Harmonic { amplitude: C64, omega: f64, phase: f64 },
    Sampled(SampledSeries),
}

impl Waveform {
    pub fn constant_real(x: f64) -> Self {
        Waveform::Constant(C64::new(x, 0.0))
    }

    pub fn value(&self, t: f64) -> Result<C64, DriveError> {
        match self {
            Waveform::Constant(v) => Ok(*v),
            Waveform::Harmonic { amplitude, omega, phase } => {
                Ok(*amplitude * (omega * t + phase).cos())
            }
            Waveform::Sampled(s) => s.value(t),
        }
    }

    /// Upper bound on `|value|` over the domain; used to pick quadrature steps.
    pub fn magnitude_bound(&self) -> f64 {
        match self {
            Waveform::Constant(v) => v.norm(),
            Waveform::Harmonic { amplitude, .. } => amplitude.norm(),
            Waveform::Sampled(s) => s.values.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    /// Fastest angular scale of the component (0 for constants).
    fn frequency_scale(&self) -> f64 {
        match self {
            Waveform::Constant(_) => 0.0,
            Waveform::Harmonic { omega, .. } => omega.abs(),
            // the grid itself sets the resolvable scale
            Waveform::Sampled(s) => 1.0 / s.dt,
        }
    }

    fn t_end(&self) -> Option<f64> {
        match self {
            Waveform::Sampled(s) => Some(s.t_end()),
            _ => None,
        }
    }

    fn is_real(&self) -> bool {
        match self {
            Waveform::Constant(v) => v.im == 0.0,
            Waveform::Harmonic { amplitude, .. } => amplitude.im == 0.0,
            Waveform::Sampled(s) => s.values.iter().all(|v| v.im == 0.0),
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, Waveform::Constant(_))
    }

    fn describe(&self) -> String {
        match self {
            Waveform::Constant(v) => format!("const({:+.6e}{:+.6e}i)", v.re, v.im),
            Waveform::Harmonic { amplitude, omega, phase } => format!(
                "harmonic(|a|={:.6e}, arg a={:.6e}, w={:.6e}, ph={:.6e})",
                amplitude.norm(),
                amplitude.arg(),
                omega,
                phase
            ),
            Waveform::Sampled(s) => format!(
                "sampled(n={}, dt={:.6e}, {:?})",
                s.values.len(),
                s.dt,
                s.order
            ),
        }
    }
}

/// The full drive: `c` complex hoppings and `d` real field components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveProtocol {
    alphas: Vec<Waveform>,
    betas: Vec<Waveform>,
}

impl DriveProtocol {
    pub fn new(alphas: Vec<Waveform>, betas: Vec<Waveform>) -> Result<Self, DriveError> {
        if betas.is_empty() || alphas.len() < betas.len() {
            return Err(DriveError::InvalidInput(format!(
                "need c >= d >= 1, got c = {}, d = {}",
                alphas.len(),
                betas.len()
            )));
        }
        if let Some(k) = betas.iter().position(|b| !b.is_real()) {
            return Err(DriveError::InvalidInput(format!(
                "field component beta_{k} must be real-valued"
            )));
        }
        Ok(DriveProtocol { alphas, betas })
    }

    /// Constant chain drive, the workhorse of the 1D examples.
    pub fn chain_constant(alpha: C64, beta: f64) -> Self {
        DriveProtocol::new(vec![Waveform::Constant(alpha)], vec![Waveform::constant_real(beta)])
            .expect("chain drive arity is valid")
    }

    pub fn coordination(&self) -> usize {
        self.alphas.len()
    }

    pub fn dimension(&self) -> usize {
        self.betas.len()
    }

    pub fn alpha(&self, i: usize) -> &Waveform {
        &self.alphas[i]
    }

    pub fn beta(&self, j: usize) -> &Waveform {
        &self.betas[j]
    }

    pub fn is_constant(&self) -> bool {
        self.alphas.iter().chain(self.betas.iter()).all(|w| w.is_constant())
    }

    /// Latest time at which every component is defined (sampled drives end).
    pub fn t_max(&self) -> Option<f64> {
        self.alphas
            .iter()
            .chain(self.betas.iter())
            .filter_map(|w| w.t_end())
            .fold(None, |acc, e| Some(acc.map_or(e, |a: f64| a.min(e))))
    }

    pub fn check_time(&self, t: f64) -> Result<(), DriveError> {
        if !t.is_finite() || t < 0.0 {
            return Err(DriveError::Domain(format!("time {t} must be finite and non-negative")));
        }
        if let Some(tm) = self.t_max() {
            if t > tm + 1e-12 {
                return Err(DriveError::Domain(format!("time {t} beyond sampled range end {tm}")));
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        let a: Vec<String> = self.alphas.iter().map(|w| w.describe()).collect();
        let b: Vec<String> = self.betas.iter().map(|w| w.describe()).collect();
        format!("alpha=[{}]; beta=[{}]", a.join(", "), b.join(", "))
    }

    fn max_beta_bound(&self) -> f64 {
        self.betas.iter().map(|b| b.magnitude_bound()).fold(0.0, f64::max)
    }

    fn frequency_scale(&self) -> f64 {
        self.alphas
            .iter()
            .chain(self.betas.iter())
            .map(|w| w.frequency_scale())
            .fold(0.0, f64::max)
    }
}

/// `f_i(t)` and `G_i(t) = -i int_0^t alpha_i e^{i f_i} ds` for every
/// direction, plus the Richardson error estimate.
#[derive(Debug, Clone)]
pub struct PhaseIntegralValues {
    pub t: f64,
    pub f: Vec<f64>,
    pub amplitudes: Vec<C64>,
    pub error_estimate: f64,
}

/// Jointly integrate `(f_i, G_i)` for all directions up to time `t`.
///
/// `sigma_rows` is the d x c integer matrix as rows.
pub fn integrate_phases(
    drive: &DriveProtocol,
    sigma_rows: &[Vec<i64>],
    t: f64,
) -> Result<PhaseIntegralValues, DriveError> {
    drive.check_time(t)?;
    let c = drive.coordination();
    let d = drive.dimension();
    if sigma_rows.len() != d || sigma_rows.iter().any(|r| r.len() != c) {
        return Err(DriveError::InvalidInput(format!(
            "sigma must be {d} x {c} to match the drive"
        )));
    }
    if t == 0.0 {
        return Ok(PhaseIntegralValues {
            t,
            f: vec![0.0; c],
            amplitudes: vec![C64::new(0.0, 0.0); c],
            error_estimate: 0.0,
        });
    }

    // All components constant: closed forms, no quadrature error.
    if drive.is_constant() {
        let mut f = vec![0.0; c];
        let mut amplitudes = vec![C64::new(0.0, 0.0); c];
        for i in 0..c {
            let beta_eff: f64 = (0..d)
                .map(|j| sigma_rows[j][i] as f64 * drive.beta(j).value(0.0).unwrap().re)
                .sum();
            let alpha = drive.alpha(i).value(0.0).unwrap();
            let (fi, gi) = closed_form_constant(alpha, beta_eff, t);
            f[i] = fi;
            amplitudes[i] = gi;
        }
        return Ok(PhaseIntegralValues { t, f, amplitudes, error_estimate: 0.0 });
    }

    let steps = step_count(drive, t);
    let coarse = rk4_phases(drive, sigma_rows, t, steps)?;
    let fine = rk4_phases(drive, sigma_rows, t, steps * 2)?;
    let mut err: f64 = 0.0;
    for i in 0..c {
        err = err.max((coarse.0[i] - fine.0[i]).abs());
        err = err.max((coarse.1[i] - fine.1[i]).norm());
    }
    Ok(PhaseIntegralValues { t, f: fine.0, amplitudes: fine.1, error_estimate: err })
}

fn step_count(drive: &DriveProtocol, t: f64) -> usize {
    let beta_max = drive.max_beta_bound();
    // slow fields allow longer steps; fast oscillations force short ones
    let mut h = 1e-3 * f64::max(1.0, 1.0 / beta_max.max(1e-30));
    h = h.min(1e-3);
    let freq = drive.frequency_scale();
    if freq > 0.0 {
        h = h.min(0.05 / freq);
    }
    ((t / h).ceil() as usize).clamp(16, 4_000_000)
}

type PhaseState = (Vec<f64>, Vec<C64>);

fn rk4_phases(
    drive: &DriveProtocol,
    sigma_rows: &[Vec<i64>],
    t: f64,
    steps: usize,
) -> Result<PhaseState, DriveError> {
    let c = drive.coordination();
    let d = drive.dimension();
    let h = t / steps as f64;
    let mut f = vec![0.0; c];
    let mut g = vec![C64::new(0.0, 0.0); c];

    // derivative of the joint state at time s given current f values
    let deriv = |s: f64, f_now: &[f64]| -> Result<(Vec<f64>, Vec<C64>), DriveError> {
        let betas: Vec<f64> = (0..d).map(|j| drive.beta(j).value(s).map(|v| v.re)).collect::<Result<_, _>>()?;
        let mut df = vec![0.0; c];
        let mut dg = vec![C64::new(0.0, 0.0); c];
        for i in 0..c {
            let mut fdot = 0.0;
            for j in 0..d {
                fdot += sigma_rows[j][i] as f64 * betas[j];
            }
            df[i] = fdot;
            let alpha = drive.alpha(i).value(s)?;
            if !alpha.re.is_finite() || !alpha.im.is_finite() {
                return Err(DriveError::InvalidInput("non-finite drive sample".into()));
            }
            dg[i] = -C64::i() * alpha * C64::from_polar(1.0, f_now[i]);
        }
        Ok((df, dg))
    };

    for k in 0..steps {
        let s0 = k as f64 * h;
        let (df1, dg1) = deriv(s0, &f)?;
        let f_mid1: Vec<f64> = (0..c).map(|i| f[i] + 0.5 * h * df1[i]).collect();
        let (df2, dg2) = deriv(s0 + 0.5 * h, &f_mid1)?;
        let f_mid2: Vec<f64> = (0..c).map(|i| f[i] + 0.5 * h * df2[i]).collect();
        let (df3, dg3) = deriv(s0 + 0.5 * h, &f_mid2)?;
        let f_end: Vec<f64> = (0..c).map(|i| f[i] + h * df3[i]).collect();
        let (df4, dg4) = deriv(s0 + h, &f_end)?;
        for i in 0..c {
            f[i] += h / 6.0 * (df1[i] + 2.0 * df2[i] + 2.0 * df3[i] + df4[i]);
            g[i] += (dg1[i] + (dg2[i] + dg3[i]) * 2.0 + dg4[i]) * (h / 6.0);
        }
    }
    Ok((f, g))
}

/// Analytic fast path for constant drives:
/// `f = beta t`, `F = -i alpha t` when `beta = 0`, else
/// `F = -(alpha / beta)(e^{i beta t} - 1)`.
pub fn closed_form_constant(alpha: C64, beta: f64, t: f64) -> (f64, C64) {
    let f = beta * t;
    let big_f = if beta.abs() < 1e-300 {
        -C64::i() * alpha * t
    } else {
        -(alpha / beta) * (C64::from_polar(1.0, beta * t) - 1.0)
    };
    (f, big_f)
}

/// `f_i(t)` for direction `i` (0-based) of a drive on a lattice with the
/// given sigma rows.
pub fn phase_f(
    drive: &DriveProtocol,
    sigma_rows: &[Vec<i64>],
    i: usize,
    t: f64,
) -> Result<f64, DriveError> {
    if i >= drive.coordination() {
        return Err(DriveError::Domain(format!(
            "direction {i} out of range (c = {})",
            drive.coordination()
        )));
    }
    Ok(integrate_phases(drive, sigma_rows, t)?.f[i])
}

/// `F_ji(t)` for primitive `j`, direction `i` (0-based).
pub fn amplitude_f(
    drive: &DriveProtocol,
    sigma_rows: &[Vec<i64>],
    j: usize,
    i: usize,
    t: f64,
) -> Result<C64, DriveError> {
    if i >= drive.coordination() || j >= drive.dimension() {
        return Err(DriveError::Domain(format!(
            "indices (j, i) = ({j}, {i}) out of range for (d, c) = ({}, {})",
            drive.dimension(),
            drive.coordination()
        )));
    }
    let vals = integrate_phases(drive, sigma_rows, t)?;
    Ok(vals.amplitudes[i] * sigma_rows[j][i] as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIGMA_1D: &[Vec<i64>] = &[];

    fn sigma_chain() -> Vec<Vec<i64>> {
        vec![vec![1]]
    }

    fn chain(alpha: f64, beta: f64) -> DriveProtocol {
        DriveProtocol::chain_constant(C64::new(alpha, 0.0), beta)
    }

    #[test]
    fn phase_f_constant() {
        let _ = SIGMA_1D;
        let d = chain(0.0, 0.5);
        let f = phase_f(&d, &sigma_chain(), 0, 2.0).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        let d0 = chain(0.0, 0.0);
        assert_eq!(phase_f(&d0, &sigma_chain(), 0, 3.7).unwrap(), 0.0);
    }

    #[test]
    fn phase_f_harmonic_matches_sine() {
        // beta(t) = cos t integrates to sin t
        let d = DriveProtocol::new(
            vec![Waveform::constant_real(0.0)],
            vec![Waveform::Harmonic { amplitude: C64::new(1.0, 0.0), omega: 1.0, phase: 0.0 }],
        )
        .unwrap();
        let t = std::f64::consts::FRAC_PI_2;
        let f = phase_f(&d, &sigma_chain(), 0, t).unwrap();
        assert!((f - 1.0).abs() < 1e-10, "f = {f}");
    }

    #[test]
    fn amplitude_constant_zero_field() {
        let d = chain(0.7, 0.0);
        let big_f = amplitude_f(&d, &sigma_chain(), 0, 0, 3.0).unwrap();
        let expect = -C64::i() * 0.7 * 3.0;
        assert!((big_f - expect).norm() < 1e-12);
    }

    #[test]
    fn amplitude_matches_closed_form() {
        // harmonic alpha so the quadrature path actually runs
        let alpha = C64::new(0.8, 0.3);
        let beta = 0.6;
        let d = DriveProtocol::new(
            vec![Waveform::Harmonic { amplitude: alpha, omega: 0.0, phase: 0.0 }],
            vec![Waveform::constant_real(beta)],
        )
        .unwrap();
        for &t in &[0.5, 2.0, 10.0, 40.0] {
            let got = amplitude_f(&d, &sigma_chain(), 0, 0, t).unwrap();
            let (_, want) = closed_form_constant(alpha, beta, t);
            assert!((got - want).norm() < 1e-10, "t = {t}: {got} vs {want}");
        }
    }

    #[test]
    fn amplitude_zero_at_zero_time() {
        let d = chain(1.0, 0.4);
        assert_eq!(amplitude_f(&d, &sigma_chain(), 0, 0, 0.0).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn closed_form_values() {
        let (f, big_f) = closed_form_constant(C64::new(1.0, 0.0), 0.0, 3.0);
        assert_eq!(f, 0.0);
        assert!((big_f - C64::new(0.0, -3.0)).norm() < 1e-15);

        let (f, big_f) =
            closed_form_constant(C64::new(1.0, 0.0), 0.5, 4.0 * std::f64::consts::PI);
        assert!((f - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(big_f.norm() < 1e-12, "Bloch revival point, F = {big_f}");

        let (f, big_f) = closed_form_constant(C64::new(0.0, 0.0), 1.0, 1.0);
        assert_eq!(f, 1.0);
        assert_eq!(big_f, C64::new(0.0, 0.0));
    }

    #[test]
    fn quadrature_is_fourth_order() {
        let d = DriveProtocol::new(
            vec![Waveform::Harmonic { amplitude: C64::new(1.0, 0.0), omega: 2.0, phase: 0.3 }],
            vec![Waveform::Harmonic { amplitude: C64::new(0.7, 0.0), omega: 1.3, phase: 0.0 }],
        )
        .unwrap();
        let t = 3.0;
        let sig = sigma_chain();
        let n = 60;
        let coarse = rk4_phases(&d, &sig, t, n).unwrap();
        let fine = rk4_phases(&d, &sig, t, 2 * n).unwrap();
        let finest = rk4_phases(&d, &sig, t, 8 * n).unwrap();
        let e_coarse = (coarse.1[0] - finest.1[0]).norm();
        let e_fine = (fine.1[0] - finest.1[0]).norm();
        let ratio = e_coarse / e_fine;
        assert!(
            (10.0..25.0).contains(&ratio),
            "expected ~16x error reduction, got {ratio} ({e_coarse} -> {e_fine})"
        );
    }

    #[test]
    fn linearity_in_alpha() {
        let scale = C64::new(0.3, -1.2);
        let base = C64::new(0.8, 0.1);
        let mk = |a: C64| {
            DriveProtocol::new(
                vec![Waveform::Harmonic { amplitude: a, omega: 1.1, phase: 0.2 }],
                vec![Waveform::constant_real(0.4)],
            )
            .unwrap()
        };
        let sig = sigma_chain();
        let f1 = amplitude_f(&mk(base), &sig, 0, 0, 2.5).unwrap();
        let f2 = amplitude_f(&mk(base * scale), &sig, 0, 0, 2.5).unwrap();
        assert!((f2 - f1 * scale).norm() < 1e-11);
    }

    #[test]
    fn sampled_linear_interpolation() {
        let values: Vec<C64> = (0..=10).map(|k| C64::new(k as f64 * 0.1, 0.0)).collect();
        let s = SampledSeries::new(0.0, 0.1, values, InterpOrder::Linear).unwrap();
        let w = Waveform::Sampled(s);
        // the underlying samples trace beta(t) = t
        assert!((w.value(0.55).unwrap().re - 0.55).abs() < 1e-12);
        assert!(w.value(1.5).is_err());
        let d = DriveProtocol::new(vec![Waveform::constant_real(0.0)], vec![w]).unwrap();
        let f = phase_f(&d, &sigma_chain(), 0, 1.0).unwrap();
        assert!((f - 0.5).abs() < 1e-10, "int_0^1 t dt = 1/2, got {f}");
    }

    #[test]
    fn sampled_cubic_tracks_smooth_signal() {
        let dt = 0.05;
        let n = 201;
        let values: Vec<C64> =
            (0..n).map(|k| C64::new((k as f64 * dt).sin(), 0.0)).collect();
        let s = SampledSeries::new(0.0, dt, values, InterpOrder::Cubic).unwrap();
        let w = Waveform::Sampled(s);
        for &t in &[0.123, 1.87, 5.0, 9.33] {
            assert!((w.value(t).unwrap().re - t.sin()).abs() < 2e-5, "t = {t}");
        }
    }

    #[test]
    fn rejects_complex_beta() {
        let err = DriveProtocol::new(
            vec![Waveform::constant_real(1.0)],
            vec![Waveform::Constant(C64::new(0.0, 1.0))],
        );
        assert!(err.is_err());
    }

    #[test]
    fn out_of_range_direction() {
        let d = chain(1.0, 0.0);
        assert!(phase_f(&d, &sigma_chain(), 1, 1.0).is_err());
        assert!(phase_f(&d, &sigma_chain(), 0, -1.0).is_err());
    }
}
