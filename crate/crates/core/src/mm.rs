//! Residual operators for the discrete transformation recurrences on
//! arbitrary lattices, evaluated on window interiors only (the recurrences
//! are infinite-lattice statements; boundary rows are truncation-polluted).
//!
//! For a lattice with shift vectors `v_i` (the sigma columns) the equations
//! checked against a table `U` and a dynamical map `(f_i, F_ji)` are
//!
//! ```text
//! shift i:       U[n, m + v_i] = e^{i f_i} U[n - v_i, m]
//! difference j:  (m_j - n_j) U[n, m] =
//!                    sum_i F_ji U[n - v_i, m] + F_ji^* U[n + v_i, m]
//! ```
//!
//! Shift equations for directions beyond the primitives are implied by the
//! first `d`; the checker can include them to confirm the redundancy.

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::{Convention, KernelTable, PropagatorError};
use crate::lattice::{HeisenbergMap, LatticeSpec};

#[derive(Debug, Error)]
pub enum MmError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
}

#[derive(Debug, Clone, Serialize)]
pub struct EquationResidual {
    pub label: String,
    pub max_abs: f64,
    pub points: usize,
}

/// Residuals of every recurrence, max-norm per equation.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    /// Largest residual over the required (non-redundant) equations.
    pub max_residual: f64,
    pub shift: Vec<EquationResidual>,
    pub difference: Vec<EquationResidual>,
    /// Shift equations of the non-primitive directions, reported when
    /// requested; expected to vanish whenever the primitive ones do.
    pub redundant_shift: Vec<EquationResidual>,
}

fn window_mismatch(lattice: &LatticeSpec, table: &KernelTable) -> Option<MmError> {
    if table.window.dimension() != lattice.dimension() {
        return Some(MmError::Domain(format!(
            "table window has {} axes, lattice dimension is {}",
            table.window.dimension(),
            lattice.dimension()
        )));
    }
    None
}

/// Evaluate all recurrence residuals of `table` against `map`.
pub fn mm_residual_general(
    lattice: &LatticeSpec,
    table: &KernelTable,
    map: &HeisenbergMap,
    include_redundant: bool,
) -> Result<ResidualReport, MmError> {
    if let Some(err) = window_mismatch(lattice, table) {
        return Err(err);
    }
    if map.coordination != lattice.coordination() || map.dimension != lattice.dimension() {
        return Err(MmError::Domain("map and lattice disagree on (d, c)".into()));
    }
    let d = lattice.dimension();
    let c = lattice.coordination();
    let window = &table.window;
    let shifts: Vec<Vec<i64>> = (0..c).map(|i| lattice.shift_vector(i)).collect();

    // interior margin per axis: the largest shift component reaching out
    let margin: i64 = shifts
        .iter()
        .flat_map(|v| v.iter().map(|s| s.abs()))
        .max()
        .unwrap_or(1);

    let sites = window.sites();
    let interior: Vec<usize> = (0..sites.len())
        .filter(|&k| window.is_interior(&sites[k], margin))
        .collect();
    if interior.is_empty() {
        return Err(MmError::Domain(format!(
            "window interior with margin {margin} is empty"
        )));
    }

    let offset = |coords: &[i64], v: &[i64], sign: i64| -> Option<usize> {
        let moved: Vec<i64> = coords.iter().zip(v).map(|(&x, &s)| x + sign * s).collect();
        window.flatten(&moved)
    };

    let mut diff_res = vec![(0.0_f64, 0usize); d];
    let mut shift_res = vec![(0.0_f64, 0usize); c];

    for &t_idx in &interior {
        let n = &sites[t_idx];
        // neighbours of the target in every hop direction
        let mut minus = Vec::with_capacity(c);
        let mut plus = Vec::with_capacity(c);
        for v in &shifts {
            minus.push(offset(n, v, -1));
            plus.push(offset(n, v, 1));
        }
        for (s_idx, m) in sites.iter().enumerate() {
            // difference equations, one per primitive
            if minus.iter().all(|o| o.is_some()) && plus.iter().all(|o| o.is_some()) {
                for j in 0..d {
                    let mut rhs = C64::new(0.0, 0.0);
                    for i in 0..c {
                        let fji = map.shift(j, i);
                        if fji.norm_sqr() == 0.0 && lattice.sigma(j, i) == 0 {
                            continue;
                        }
                        rhs += fji * table.entry_flat(minus[i].unwrap(), s_idx)
                            + fji.conj() * table.entry_flat(plus[i].unwrap(), s_idx);
                    }
                    let lhs = (m[j] - n[j]) as f64 * table.entry_flat(t_idx, s_idx);
                    let r = (lhs - rhs).norm();
                    if r > diff_res[j].0 {
                        diff_res[j].0 = r;
                    }
                    diff_res[j].1 += 1;
                }
            }
            // shift equations
            for i in 0..c {
                if !include_redundant && i >= d {
                    continue;
                }
                let (Some(m_up), Some(n_down)) = (offset(m, &shifts[i], 1), minus[i]) else {
                    continue;
                };
                let lhs = table.entry_flat(t_idx, m_up);
                let rhs = map.phases[i] * table.entry_flat(n_down, s_idx);
                let r = (lhs - rhs).norm();
                if r > shift_res[i].0 {
                    shift_res[i].0 = r;
                }
                shift_res[i].1 += 1;
            }
        }
    }

    let difference: Vec<EquationResidual> = diff_res
        .iter()
        .enumerate()
        .map(|(j, &(max_abs, points))| EquationResidual {
            label: format!("difference[{j}]"),
            max_abs,
            points,
        })
        .collect();
    let shift: Vec<EquationResidual> = shift_res[..d]
        .iter()
        .enumerate()
        .map(|(i, &(max_abs, points))| EquationResidual {
            label: format!("shift[{i}]"),
            max_abs,
            points,
        })
        .collect();
    let redundant_shift: Vec<EquationResidual> = if include_redundant {
        shift_res[d..]
            .iter()
            .enumerate()
            .map(|(k, &(max_abs, points))| EquationResidual {
                label: format!("redundant-shift[{}]", d + k),
                max_abs,
                points,
            })
            .collect()
    } else {
        Vec::new()
    };

    let max_residual = difference
        .iter()
        .chain(shift.iter())
        .map(|e| e.max_abs)
        .fold(0.0, f64::max);

    Ok(ResidualReport { max_residual, shift, difference, redundant_shift })
}

/// The separable reduction `U = exp[(i/2) sum_j (n_j + m_j) f_j] K_{m - n}`:
/// strips the field phase and collapses the table onto difference vectors.
#[derive(Debug, Clone)]
pub struct SeparableReduction {
    /// Mean reduced value per difference vector, in flattening order of the
    /// difference offsets.
    pub values: std::collections::BTreeMap<Vec<i64>, C64>,
    /// Largest in-group spread; ~0 certifies the separable ansatz.
    pub defect: f64,
}

pub fn separable_reduce(
    table: &KernelTable,
    map: &HeisenbergMap,
) -> Result<SeparableReduction, MmError> {
    if table.convention != Convention::PaperMm {
        return Err(MmError::Domain(
            "separable reduction applies to paper-mm tables only".into(),
        ));
    }
    if table.window.dimension() != map.dimension {
        return Err(MmError::Domain("table and map disagree on dimension".into()));
    }
    let sites = table.window.sites();
    let d = map.dimension;

    struct Group {
        sum: C64,
        count: usize,
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
    }
    let mut groups: std::collections::BTreeMap<Vec<i64>, Group> = Default::default();
    for (t_idx, n) in sites.iter().enumerate() {
        for (s_idx, m) in sites.iter().enumerate() {
            let mut phase = 0.0;
            for j in 0..d {
                phase += (n[j] + m[j]) as f64 * map.f[j];
            }
            let k = table.entry_flat(t_idx, s_idx) * C64::from_polar(1.0, -0.5 * phase);
            let delta: Vec<i64> = m.iter().zip(n).map(|(&mj, &nj)| mj - nj).collect();
            let g = groups.entry(delta).or_insert(Group {
                sum: C64::new(0.0, 0.0),
                count: 0,
                re_min: f64::INFINITY,
                re_max: f64::NEG_INFINITY,
                im_min: f64::INFINITY,
                im_max: f64::NEG_INFINITY,
            });
            g.sum += k;
            g.count += 1;
            g.re_min = g.re_min.min(k.re);
            g.re_max = g.re_max.max(k.re);
            g.im_min = g.im_min.min(k.im);
            g.im_max = g.im_max.max(k.im);
        }
    }
    let mut defect: f64 = 0.0;
    let mut values = std::collections::BTreeMap::new();
    for (delta, g) in groups {
        let spread =
            ((g.re_max - g.re_min).powi(2) + (g.im_max - g.im_min).powi(2)).sqrt();
        defect = defect.max(spread);
        values.insert(delta, g.sum / g.count as f64);
    }
    Ok(SeparableReduction { values, defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::{DriveProtocol, Waveform};
    use crate::kernel::{
        kernel_1d, kernel_triangular, AxisWindow, ConstraintPolicy, Window,
    };
    use crate::lattice::heisenberg_map;
    use crate::specfun::bessel::bessel_j;

    fn chain_drive(alpha: f64, beta: f64) -> DriveProtocol {
        DriveProtocol::chain_constant(C64::new(alpha, 0.0), beta)
    }

    fn tri_drive(alpha: f64, beta: f64) -> DriveProtocol {
        DriveProtocol::new(
            vec![Waveform::constant_real(alpha); 3],
            vec![Waveform::constant_real(beta); 2],
        )
        .unwrap()
    }

    #[test]
    fn paper_mm_chain_satisfies_recurrences() {
        let lattice = LatticeSpec::chain();
        let drive = chain_drive(1.0, 0.3);
        let t = 1.0;
        let map = heisenberg_map(&lattice, &drive, t).unwrap();
        let table = kernel_1d(&drive, t, AxisWindow::symmetric(20), Convention::PaperMm).unwrap();
        let report = mm_residual_general(&lattice, &table, &map, false).unwrap();
        assert!(report.max_residual < 1e-12, "residual {:?}", report);
    }

    #[test]
    fn forward_chain_fails_recurrences() {
        let lattice = LatticeSpec::chain();
        let drive = chain_drive(1.0, 0.3);
        let t = 1.0;
        let map = heisenberg_map(&lattice, &drive, t).unwrap();
        let table =
            kernel_1d(&drive, t, AxisWindow::symmetric(20), Convention::ForwardSchrodinger)
                .unwrap();
        let report = mm_residual_general(&lattice, &table, &map, false).unwrap();
        assert!(
            report.difference[0].max_abs > 0.1,
            "forward branch must violate the difference recurrence: {:?}",
            report
        );
    }

    #[test]
    fn identity_table_all_residuals_vanish() {
        let lattice = LatticeSpec::chain();
        let drive = chain_drive(1.0, 0.5);
        let map = heisenberg_map(&lattice, &drive, 0.0).unwrap();
        let table =
            kernel_1d(&drive, 0.0, AxisWindow::symmetric(10), Convention::PaperMm).unwrap();
        let report = mm_residual_general(&lattice, &table, &map, false).unwrap();
        assert_eq!(report.max_residual, 0.0);
    }

    #[test]
    fn triangular_recurrences_including_redundant() {
        let lattice = LatticeSpec::triangular();
        let drive = tri_drive(1.0, 0.3);
        let t = 0.8;
        let map = heisenberg_map(&lattice, &drive, t).unwrap();
        let w = Window::rect(AxisWindow::symmetric(8), AxisWindow::symmetric(8));
        let table = kernel_triangular(
            &drive,
            t,
            &w,
            Convention::PaperMm,
            ConstraintPolicy::Generalized,
        )
        .unwrap();
        let report = mm_residual_general(&lattice, &table, &map, true).unwrap();
        assert!(report.max_residual < 1e-12, "{report:?}");
        assert_eq!(report.redundant_shift.len(), 1);
        assert!(report.redundant_shift[0].max_abs < 1e-12);
    }

    #[test]
    fn empty_interior_is_domain_error() {
        let lattice = LatticeSpec::chain();
        let drive = chain_drive(1.0, 0.0);
        let map = heisenberg_map(&lattice, &drive, 0.5).unwrap();
        let table =
            kernel_1d(&drive, 0.5, AxisWindow::new(0, 0).unwrap(), Convention::PaperMm).unwrap();
        assert!(mm_residual_general(&lattice, &table, &map, false).is_err());
    }

    #[test]
    fn separable_reduction_of_chain_kernel() {
        let lattice = LatticeSpec::chain();
        let drive = chain_drive(1.0, 0.4);
        let t = 1.2;
        let map = heisenberg_map(&lattice, &drive, t).unwrap();
        let table = kernel_1d(&drive, t, AxisWindow::symmetric(15), Convention::PaperMm).unwrap();
        let red = separable_reduce(&table, &map).unwrap();
        assert!(red.defect < 1e-12, "defect {}", red.defect);
        // K_k has magnitude |J_k(2|F|)|
        let rho = 2.0 * map.shifts[0].norm();
        let k1 = red.values.get(&vec![1i64]).unwrap();
        assert!((k1.norm() - bessel_j(1, rho).unwrap().abs()).abs() < 1e-12);
    }

    #[test]
    fn separable_reduction_flags_perturbation() {
        let lattice = LatticeSpec::chain();
        let drive = chain_drive(1.0, 0.4);
        let t = 1.2;
        let map = heisenberg_map(&lattice, &drive, t).unwrap();
        let mut table =
            kernel_1d(&drive, t, AxisWindow::symmetric(10), Convention::PaperMm).unwrap();
        let n = table.site_count();
        table.entries[3 * n + 7] += C64::new(1e-3, 0.0);
        let red = separable_reduce(&table, &map).unwrap();
        assert!(red.defect >= 1e-3, "defect {}", red.defect);
    }

    #[test]
    fn separable_reduction_rejects_forward_tables() {
        let lattice = LatticeSpec::chain();
        let drive = chain_drive(1.0, 0.4);
        let map = heisenberg_map(&lattice, &drive, 1.0).unwrap();
        let table =
            kernel_1d(&drive, 1.0, AxisWindow::symmetric(5), Convention::ForwardSchrodinger)
                .unwrap();
        assert!(separable_reduce(&table, &map).is_err());
    }
}
