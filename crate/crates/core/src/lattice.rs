//! Lattice topologies encoded through the integer matrix `sigma`, where
//! `[N_j, T_i] = sigma[j][i] T_i`, together with the dynamical (Heisenberg)
//! map generated by a drive on such a lattice.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drive::{DriveProtocol, DriveError};

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("invalid lattice: {0}")]
    Invalid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Drive(#[from] DriveError),
}

/// A lattice with `d` primitive directions and `c >= d` hopping directions.
///
/// Column `i` of `sigma` is the displacement of the translation `T_i`
/// expressed in primitive coordinates; the first `d` columns must be the
/// identity. The commutators are `[N_j, T_i] = sigma[j][i] T_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    dimension: usize,
    coordination: usize,
    /// Row-major, `dimension` rows by `coordination` columns.
    sigma: Vec<i64>,
    names: Option<Vec<String>>,
}

impl LatticeSpec {
    pub fn new(dimension: usize, coordination: usize, sigma: Vec<i64>) -> Result<Self, LatticeError> {
        if dimension == 0 {
            return Err(LatticeError::Invalid("dimension must be positive".into()));
        }
        if coordination < dimension {
            return Err(LatticeError::Invalid(format!(
                "coordination {coordination} < dimension {dimension}"
            )));
        }
        if sigma.len() != dimension * coordination {
            return Err(LatticeError::Invalid(format!(
                "sigma has {} entries, expected {}",
                sigma.len(),
                dimension * coordination
            )));
        }
        let spec = LatticeSpec { dimension, coordination, sigma, names: None };
        for j in 0..dimension {
            for i in 0..dimension {
                let want = if i == j { 1 } else { 0 };
                if spec.sigma(j, i) != want {
                    return Err(LatticeError::Invalid(
                        "first d columns of sigma must form the identity (primitive directions)"
                            .into(),
                    ));
                }
            }
        }
        Ok(spec)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self, LatticeError> {
        if names.len() != self.coordination {
            return Err(LatticeError::Invalid(format!(
                "{} names for {} directions",
                names.len(),
                self.coordination
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    /// 1D chain: d = 1, c = 1, sigma = [1].
    pub fn chain() -> Self {
        LatticeSpec::new(1, 1, vec![1]).expect("chain spec is valid")
    }

    /// Square lattice: d = 2, c = 2, axes decouple (sigma = identity).
    pub fn square() -> Self {
        LatticeSpec::new(2, 2, vec![1, 0, 0, 1]).expect("square spec is valid")
    }

    /// Triangular lattice: d = 2, c = 3 with `T_3 = T_1^dag T_2^dag`, so the
    /// third sigma column is (-1, -1).
    pub fn triangular() -> Self {
        LatticeSpec::new(2, 3, vec![1, 0, -1, 0, 1, -1]).expect("triangular spec is valid")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn coordination(&self) -> usize {
        self.coordination
    }

    pub fn sigma(&self, j: usize, i: usize) -> i64 {
        self.sigma[j * self.coordination + i]
    }

    pub fn sigma_rows(&self) -> Vec<Vec<i64>> {
        (0..self.dimension)
            .map(|j| (0..self.coordination).map(|i| self.sigma(j, i)).collect())
            .collect()
    }

    /// Displacement of `T_i` in primitive coordinates (column `i` of sigma).
    pub fn shift_vector(&self, i: usize) -> Vec<i64> {
        (0..self.dimension).map(|j| self.sigma(j, i)).collect()
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }
}

/// The chain, square and triangular lattices of the closed-form builders.
pub fn builtin_lattices() -> [LatticeSpec; 3] {
    [LatticeSpec::chain(), LatticeSpec::square(), LatticeSpec::triangular()]
}

/// Full parameter set of the dynamical map at one time: `T_i(t) = e^{i f_i} T_i(0)`
/// and `N_j(t) = N_j(0) + sum_i F_ji T_i(0) + h.c.`.
#[derive(Debug, Clone)]
pub struct HeisenbergMap {
    pub t: f64,
    /// `f_i(t)` per direction (length c).
    pub f: Vec<f64>,
    /// `e^{i f_i(t)}` per direction.
    pub phases: Vec<C64>,
    /// Row-major d x c table of `F_ji(t) = -i sigma_ji int alpha_i e^{i f_i}`.
    pub shifts: Vec<C64>,
    /// The sign-free per-direction integral `G_i = -i int alpha_i e^{i f_i}`,
    /// so `F_ji = sigma_ji G_i`.
    pub direction_amplitudes: Vec<C64>,
    pub dimension: usize,
    pub coordination: usize,
    /// Richardson estimate of the quadrature error in `f` and `F`.
    pub quadrature_error: f64,
}

impl HeisenbergMap {
    pub fn shift(&self, j: usize, i: usize) -> C64 {
        self.shifts[j * self.coordination + i]
    }

    /// The per-direction amplitudes entering the closed-form kernels:
    /// `F_i` in the paper's convention equals `sigma_{j(i),i} G_i` where
    /// `j(i)` is any row with a nonzero sigma entry.  For the builtin
    /// lattices this reproduces the reversed sign of the third triangular
    /// direction automatically.
    pub fn kernel_amplitude(&self, lattice: &LatticeSpec, i: usize) -> C64 {
        for j in 0..self.dimension {
            let s = lattice.sigma(j, i);
            if s != 0 {
                return self.direction_amplitudes[i] * s as f64;
            }
        }
        C64::new(0.0, 0.0)
    }
}

/// Evaluate the dynamical map of `drive` on `lattice` at time `t`.
pub fn heisenberg_map(
    lattice: &LatticeSpec,
    drive: &DriveProtocol,
    t: f64,
) -> Result<HeisenbergMap, LatticeError> {
    if drive.coordination() != lattice.coordination() || drive.dimension() != lattice.dimension() {
        return Err(LatticeError::DimensionMismatch(format!(
            "drive has (c, d) = ({}, {}), lattice needs ({}, {})",
            drive.coordination(),
            drive.dimension(),
            lattice.coordination(),
            lattice.dimension()
        )));
    }
    let integrals = crate::drive::integrate_phases(drive, &lattice.sigma_rows(), t)?;
    let c = lattice.coordination();
    let d = lattice.dimension();
    let mut shifts = vec![C64::new(0.0, 0.0); d * c];
    for j in 0..d {
        for i in 0..c {
            shifts[j * c + i] = integrals.amplitudes[i] * lattice.sigma(j, i) as f64;
        }
    }
    Ok(HeisenbergMap {
        t,
        phases: integrals.f.iter().map(|&fi| C64::from_polar(1.0, fi)).collect(),
        f: integrals.f,
        shifts,
        direction_amplitudes: integrals.amplitudes,
        dimension: d,
        coordination: c,
        quadrature_error: integrals.error_estimate,
    })
}

/// Coefficients of the one-parameter transformation
/// `N' = alpha T + alpha^*/T + beta N`, `T' = gamma T + gamma_bar/T + delta N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapCoefficients {
    pub alpha: C64,
    pub beta: f64,
    pub gamma: C64,
    pub gamma_bar: C64,
    pub delta: C64,
}

impl MapCoefficients {
    pub fn identity() -> Self {
        MapCoefficients {
            alpha: C64::new(0.0, 0.0),
            beta: 1.0,
            gamma: C64::new(1.0, 0.0),
            gamma_bar: C64::new(0.0, 0.0),
            delta: C64::new(0.0, 0.0),
        }
    }

    /// The Stark map at one instant: `alpha = F(t)`, `beta = 1`,
    /// `gamma = e^{i f(t)}`, `gamma_bar = delta = 0`.
    pub fn stark(f: f64, big_f: C64) -> Self {
        MapCoefficients {
            alpha: big_f,
            beta: 1.0,
            gamma: C64::from_polar(1.0, f),
            gamma_bar: C64::new(0.0, 0.0),
            delta: C64::new(0.0, 0.0),
        }
    }
}

/// Numerical values of the four constraint expressions together with
/// operator-level residuals on a truncated window.
///
/// The first expression evaluates to `gamma beta - alpha delta`; note that for
/// the Stark map this is `e^{i f}` rather than 1, so the expressions are
/// reported, never asserted.
#[derive(Debug, Clone, Serialize)]
pub struct MapConstraintReport {
    /// `gamma beta - alpha delta` (re, im).
    pub det_like: (f64, f64),
    /// `alpha^* delta - gamma_bar beta`.
    pub cross_1: (f64, f64),
    /// `delta gamma^* - delta^* gamma`.
    pub cross_2: (f64, f64),
    /// `delta gamma_bar^* - delta^* gamma_bar`.
    pub cross_3: (f64, f64),
    /// Max interior element of `T' T'^dag - 1`.
    pub unitarity_residual: f64,
    /// Max interior element of `[N', T'] - T'`.
    pub commutator_residual: f64,
    pub truncation: usize,
}

/// Evaluate the algebraic constraint expressions and the operator residuals
/// `|T' T'^dag - 1|` and `|[N', T'] - T'|` on truncated `N`, `T` matrices.
pub fn check_map_constraints(
    coeffs: &MapCoefficients,
    truncation: usize,
) -> Result<MapConstraintReport, LatticeError> {
    if truncation < 8 {
        return Err(LatticeError::Invalid("truncation window must be at least 8".into()));
    }
    let w = truncation;
    let beta = C64::new(coeffs.beta, 0.0);
    let det_like = coeffs.gamma * beta - coeffs.alpha * coeffs.delta;
    let cross_1 = coeffs.alpha.conj() * coeffs.delta - coeffs.gamma_bar * beta;
    let cross_2 = coeffs.delta * coeffs.gamma.conj() - coeffs.delta.conj() * coeffs.gamma;
    let cross_3 = coeffs.delta * coeffs.gamma_bar.conj() - coeffs.delta.conj() * coeffs.gamma_bar;

    // Truncated N (diagonal sites) and T (one-step shift) on sites
    // -w/2 .. w/2 - 1.
    let n0 = -(w as i64) / 2;
    let site = |k: usize| n0 + k as i64;
    let mut t_prime = vec![C64::new(0.0, 0.0); w * w];
    let mut n_prime = vec![C64::new(0.0, 0.0); w * w];
    for k in 0..w {
        n_prime[k * w + k] += beta * site(k) as f64;
        t_prime[k * w + k] += coeffs.delta * site(k) as f64;
        if k + 1 < w {
            // T maps |n> to |n+1>: element (k+1, k)
            t_prime[(k + 1) * w + k] += coeffs.gamma;
            n_prime[(k + 1) * w + k] += coeffs.alpha;
            t_prime[k * w + (k + 1)] += coeffs.gamma_bar;
            n_prime[k * w + (k + 1)] += coeffs.alpha.conj();
        }
    }

    let mul = |a: &[C64], b: &[C64]| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); w * w];
        for r in 0..w {
            for k in 0..w {
                let av = a[r * w + k];
                if av.norm_sqr() == 0.0 {
                    continue;
                }
                for cidx in 0..w {
                    out[r * w + cidx] += av * b[k * w + cidx];
                }
            }
        }
        out
    };
    let adjoint = |a: &[C64]| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); w * w];
        for r in 0..w {
            for cidx in 0..w {
                out[cidx * w + r] = a[r * w + cidx].conj();
            }
        }
        out
    };

    let t_dag = adjoint(&t_prime);
    let tt = mul(&t_prime, &t_dag);
    let nt = mul(&n_prime, &t_prime);
    let tn = mul(&t_prime, &n_prime);

    // interior: stay 2 away from every edge so no referenced index is clipped
    let lo = 2;
    let hi = w - 2;
    let mut unit_res: f64 = 0.0;
    let mut comm_res: f64 = 0.0;
    for r in lo..hi {
        for cidx in lo..hi {
            let idm = if r == cidx { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            unit_res = unit_res.max((tt[r * w + cidx] - idm).norm());
            let comm = nt[r * w + cidx] - tn[r * w + cidx] - t_prime[r * w + cidx];
            comm_res = comm_res.max(comm.norm());
        }
    }

    Ok(MapConstraintReport {
        det_like: (det_like.re, det_like.im),
        cross_1: (cross_1.re, cross_1.im),
        cross_2: (cross_2.re, cross_2.im),
        cross_3: (cross_3.re, cross_3.im),
        unitarity_residual: unit_res,
        commutator_residual: comm_res,
        truncation: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::Waveform;

    #[test]
    fn builtin_sigmas() {
        let chain = LatticeSpec::chain();
        assert_eq!(chain.sigma_rows(), vec![vec![1]]);
        let square = LatticeSpec::square();
        assert_eq!(square.sigma_rows(), vec![vec![1, 0], vec![0, 1]]);
        let tri = LatticeSpec::triangular();
        assert_eq!(tri.shift_vector(2), vec![-1, -1]);
    }

    #[test]
    fn rejects_non_identity_primitive_block() {
        assert!(LatticeSpec::new(2, 2, vec![1, 1, 0, 1]).is_err());
        assert!(LatticeSpec::new(2, 1, vec![1, 0]).is_err());
    }

    #[test]
    fn heisenberg_map_identity_at_zero() {
        let lattice = LatticeSpec::triangular();
        let drive = DriveProtocol::new(
            vec![Waveform::constant_real(1.0); 3],
            vec![Waveform::constant_real(0.3); 2],
        )
        .unwrap();
        let map = heisenberg_map(&lattice, &drive, 0.0).unwrap();
        for ph in &map.phases {
            assert_eq!(*ph, C64::new(1.0, 0.0));
        }
        for s in &map.shifts {
            assert_eq!(*s, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn triangular_f3_is_minus_sum() {
        // beta_3 = -beta_1 - beta_2 through sigma column (-1, -1)
        let lattice = LatticeSpec::triangular();
        let beta = 0.4;
        let drive = DriveProtocol::new(
            vec![Waveform::constant_real(1.0); 3],
            vec![Waveform::constant_real(beta); 2],
        )
        .unwrap();
        let t = 1.7;
        let map = heisenberg_map(&lattice, &drive, t).unwrap();
        assert!((map.f[2] + 2.0 * beta * t).abs() < 1e-12);
        assert!((map.f[0] - beta * t).abs() < 1e-12);
    }

    #[test]
    fn identity_map_constraints() {
        let report = check_map_constraints(&MapCoefficients::identity(), 32).unwrap();
        assert_eq!(report.det_like, (1.0, 0.0));
        assert_eq!(report.cross_1, (0.0, 0.0));
        assert!(report.unitarity_residual < 1e-14);
        assert!(report.commutator_residual < 1e-14);
    }

    #[test]
    fn stark_map_operator_residuals_vanish_but_det_is_phase() {
        let f = 0.7;
        let big_f = C64::new(0.3, -0.4);
        let report =
            check_map_constraints(&MapCoefficients::stark(f, big_f), 32).unwrap();
        assert!(report.unitarity_residual < 1e-14);
        assert!(report.commutator_residual < 1e-14);
        // det-like expression evaluates to e^{i f}, not 1
        assert!((report.det_like.0 - f.cos()).abs() < 1e-14);
        assert!((report.det_like.1 - f.sin()).abs() < 1e-14);
    }

    #[test]
    fn non_unitary_map_reported() {
        let coeffs = MapCoefficients {
            alpha: C64::new(0.0, 0.0),
            beta: 1.0,
            gamma: C64::new(0.0, 0.0),
            gamma_bar: C64::new(0.0, 0.0),
            delta: C64::new(0.5, 0.0),
        };
        let report = check_map_constraints(&coeffs, 32).unwrap();
        assert!(report.unitarity_residual > 0.5);
    }
}
