//! Post-run analysis: geometric form of qubit unitaries, the state prepared
//! by the first unitary, ensemble statistics, and the `Q = a exp(-b eps) + c`
//! run-time/accuracy fit.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::RunRecord;
use crate::linalg::{pauli, Complex, ComplexMatrix, StateVector};

/// `sin(theta)` below which the rotation axis is undefined.
pub const AXIS_EPS: f64 = 1e-9;

/// Amplitude modulus below which the relative phase is undefined.
pub const PHASE_EPS: f64 = 1e-12;

const UNITARY_TOL: f64 = 1e-10;

/// `U = e^{i chi} (cos(theta) I - i sin(theta) n . sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochDecomposition {
    pub theta: f64,
    pub axis: [f64; 3],
    /// Global phase `e^{i chi}` removed before decomposing.
    pub phase: [f64; 2],
    /// `max |reconstruction - U e^{-i chi}|`
    pub residual: f64,
    /// Set when `sin(theta) < AXIS_EPS`; the axis is then `(0, 0, 1)`.
    pub degenerate: bool,
}

impl BlochDecomposition {
    /// `cos(theta) I - i sin(theta) n . sigma`, without the global phase.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let (s, c) = self.theta.sin_cos();
        let [x, y, z] = self.axis.map(|n| n * s);
        ComplexMatrix::from_rows(vec![
            vec![Complex::new(c, -z), Complex::new(-y, -x)],
            vec![Complex::new(y, -x), Complex::new(c, z)],
        ])
        .expect("2x2")
    }
}

/// Rotation angle and axis of a qubit unitary.
///
/// The global phase is the principal square root of the determinant, so
/// `theta` lands in `[0, pi]` and the axis sign absorbs the rest.
pub fn bloch_decompose(u: &ComplexMatrix) -> Result<BlochDecomposition> {
    if u.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: u.dim(),
        });
    }
    let defect = u.unitarity_defect();
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let det = u.determinant_2x2().expect("2x2");
    // map -0.0 to +0.0 so det = -1 takes the +i branch
    let phase = Complex::new(det.re, det.im + 0.0).sqrt();
    let su = u.scale(phase.inv());

    let cos = su.trace().re / 2.0;
    let v: Vec<f64> = pauli()
        .iter()
        .map(|s| -su.matmul(s).expect("2x2").trace().im / 2.0)
        .collect();
    let sin = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let theta = sin.atan2(cos);
    let (axis, degenerate) = if sin < AXIS_EPS {
        ([0.0, 0.0, 1.0], true)
    } else {
        ([v[0] / sin, v[1] / sin, v[2] / sin], false)
    };
    let mut out = BlochDecomposition {
        theta,
        axis,
        phase: [phase.re, phase.im],
        residual: 0.0,
        degenerate,
    };
    out.residual = out.reconstruct().max_abs_diff(&su)?;
    Ok(out)
}

/// `U_1 |psi_in> = alpha |0> + e^{i phi} sqrt(1 - alpha^2) |1>` up to global phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparedState {
    pub alpha: f64,
    /// Relative phase in `(-pi, pi]`; 0 when `degenerate`.
    pub phi: f64,
    pub degenerate: bool,
}

pub fn prepared_state(u1: &ComplexMatrix, psi_in: &StateVector) -> Result<PreparedState> {
    if u1.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: u1.dim(),
        });
    }
    let s = u1.apply(psi_in)?;
    let (s0, s1) = (s.amplitudes()[0], s.amplitudes()[1]);
    let alpha = s0.norm();
    if alpha < PHASE_EPS || s1.norm() < PHASE_EPS {
        return Ok(PreparedState {
            alpha,
            phi: 0.0,
            degenerate: true,
        });
    }
    Ok(PreparedState {
        alpha,
        phi: wrap_phase(s1.arg() - s0.arg()),
        degenerate: false,
    })
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// `|alpha - 1/sqrt(2)| <= tol`: the prepared state sits on the Bloch equator.
pub fn balance_condition_check(ps: &PreparedState, tol: f64) -> bool {
    (ps.alpha - FRAC_1_SQRT_2).abs() <= tol
}

/// Mean, standard deviation (population form) and count of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl SampleStats {
    /// Sorts before summing so the result does not depend on input order.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        dev.sort_by(f64::total_cmp);
        let var = dev.iter().sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt(),
            n: v.len(),
        })
    }
}

/// How runs that terminated before a generation enter that generation's sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Padding {
    /// Finished runs drop out of later generations.
    #[default]
    DropOut,
    /// Finished runs contribute their final mean fitness to later generations.
    HoldFinal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    /// Per generation (index 0 = first generation): statistics of `xi-bar`.
    pub mean_fitness: Vec<SampleStats>,
    /// `alpha-bar`, `Delta alpha` over the supplied prepared states.
    pub alpha: Option<SampleStats>,
    /// `Q_c -> number of runs`
    pub qc_histogram: BTreeMap<usize, usize>,
    pub runs: usize,
    pub padding: Padding,
}

pub fn ensemble_stats(records: &[RunRecord], states: &[PreparedState]) -> Result<EnsembleStats> {
    ensemble_stats_with(records, states, Padding::DropOut, None)
}

/// Ensemble statistics; `horizon` extends the per-generation table to at
/// least that many generations (only meaningful with [`Padding::HoldFinal`]).
pub fn ensemble_stats_with(
    records: &[RunRecord],
    states: &[PreparedState],
    padding: Padding,
    horizon: Option<usize>,
) -> Result<EnsembleStats> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no run records".into()));
    }
    let longest = records
        .iter()
        .map(|r| r.generations.len())
        .max()
        .unwrap_or(0);
    let len = match padding {
        Padding::DropOut => longest,
        Padding::HoldFinal => longest.max(horizon.unwrap_or(0)),
    };
    let mean_fitness = (0..len)
        .map(|g| {
            let values: Vec<f64> = records
                .iter()
                .filter_map(|r| match (r.generations.get(g), padding) {
                    (Some(s), _) => Some(s.mean_fitness),
                    (None, Padding::HoldFinal) => r.generations.last().map(|s| s.mean_fitness),
                    (None, Padding::DropOut) => None,
                })
                .collect();
            SampleStats::from_values(&values).expect("generation below the longest run")
        })
        .collect();
    let alphas: Vec<f64> = states.iter().map(|s| s.alpha).collect();
    let mut qc_histogram = BTreeMap::new();
    for r in records {
        *qc_histogram.entry(r.generations_run()).or_insert(0) += 1;
    }
    Ok(EnsembleStats {
        mean_fitness,
        alpha: SampleStats::from_values(&alphas),
        qc_histogram,
        runs: records.len(),
        padding,
    })
}

/// Least-squares fit of `Q = a exp(-b eps) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Standard errors of `(a, b, c)` from the linearized covariance.
    pub std_errors: [f64; 3],
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn params(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn model(&self, eps: f64) -> f64 {
        model(&self.params(), eps)
    }
}

pub const FIT_MAX_ITERATIONS: usize = 200;
pub const FIT_REL_TOL: f64 = 1e-10;

fn model(p: &[f64; 3], eps: f64) -> f64 {
    p[0] * (-p[1] * eps).exp() + p[2]
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "exponential fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(e, q)| !(e.is_finite() && q.is_finite()) || e < 0.0)
    {
        return Err(Error::InsufficientData(
            "epsilon values must be finite and non-negative".into(),
        ));
    }
    let e0 = points[0].0;
    if points.iter().all(|&(e, _)| e == e0) {
        return Err(Error::InsufficientData(
            "all epsilon values are equal".into(),
        ));
    }
    Ok(())
}

/// Heuristic start: `c` just below `min Q`, then `ln(Q - c)` regressed on `eps`.
pub fn initial_guess(points: &[(f64, f64)]) -> Result<[f64; 3]> {
    check_points(points)?;
    let qmin = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let qmax = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let margin = 0.1 * (qmax - qmin) + 1e-6 * (1.0 + qmin.abs());
    let c0 = qmin - margin;
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| (p.1 - c0).ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    Ok([intercept.exp(), -slope, c0])
}

pub fn fit_exponential(points: &[(f64, f64)]) -> Result<FitResult> {
    let init = initial_guess(points)?;
    fit_exponential_from(points, init)
}

/// Levenberg-Marquardt from a given start.
///
/// Damping `lambda` (Marquardt diagonal scaling) starts at 1e-3, is divided
/// by 10 after an accepted step and multiplied by 10 after a rejected one.
/// Converges when an accepted step changes the residual sum of squares by
/// less than `FIT_REL_TOL` relatively, when the residual vanishes, or when no
/// representable step can reduce it further.
pub fn fit_exponential_from(points: &[(f64, f64)], init: [f64; 3]) -> Result<FitResult> {
    check_points(points)?;
    let rss_of = |p: &[f64; 3]| -> f64 {
        points
            .iter()
            .map(|&(e, q)| {
                let r = q - model(p, e);
                r * r
            })
            .sum()
    };
    let scale: f64 = points.iter().map(|p| p.1 * p.1).sum::<f64>().max(1e-300);

    let mut p = init;
    let mut rss = rss_of(&p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    if !rss.is_finite() {
        return Ok(flagged(p, rss, 0));
    }

    while iterations < FIT_MAX_ITERATIONS {
        iterations += 1;
        if rss <= 1e-30 * scale {
            converged = true;
            break;
        }
        let (jtj, jtr) = normal_equations(points, &p);
        let mut damped = jtj;
        for (i, row) in damped.iter_mut().enumerate() {
            row[i] += lambda * jtj[i][i].max(1e-300);
        }
        let Some(step) = solve3(damped, jtr) else {
            return Ok(flagged(p, rss, iterations));
        };
        let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
        let trial_rss = rss_of(&trial);
        if trial_rss.is_finite() && trial_rss <= rss {
            let rel = (rss - trial_rss) / rss.max(1e-300);
            p = trial;
            rss = trial_rss;
            lambda = (lambda / 10.0).max(1e-12);
            if rel < FIT_REL_TOL {
                converged = true;
                break;
            }
        } else {
            let pnorm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            let snorm = step.iter().map(|x| x * x).sum::<f64>().sqrt();
            if snorm <= 1e-15 * pnorm.max(1e-300) {
                converged = true;
                break;
            }
            lambda *= 10.0;
        }
    }

    let (jtj, _) = normal_equations(points, &p);
    let dof = (points.len() - 3) as f64;
    let std_errors = match invert3(jtj) {
        Some(inv) => {
            let s2 = rss / dof;
            [
                (s2 * inv[0][0]).max(0.0).sqrt(),
                (s2 * inv[1][1]).max(0.0).sqrt(),
                (s2 * inv[2][2]).max(0.0).sqrt(),
            ]
        }
        None => {
            converged = false;
            [f64::NAN; 3]
        }
    };
    Ok(FitResult {
        a: p[0],
        b: p[1],
        c: p[2],
        std_errors,
        rss,
        iterations,
        converged: converged && rss.is_finite(),
    })
}

fn flagged(p: [f64; 3], rss: f64, iterations: usize) -> FitResult {
    FitResult {
        a: p[0],
        b: p[1],
        c: p[2],
        std_errors: [f64::NAN; 3],
        rss,
        iterations,
        converged: false,
    }
}

/// `(J^T J, J^T r)` with model Jacobian columns `(e^{-b eps}, -a eps e^{-b eps}, 1)`.
fn normal_equations(points: &[(f64, f64)], p: &[f64; 3]) -> ([[f64; 3]; 3], [f64; 3]) {
    let mut jtj = [[0.0; 3]; 3];
    let mut jtr = [0.0; 3];
    for &(e, q) in points {
        let ex = (-p[1] * e).exp();
        let j = [ex, -p[0] * e * ex, 1.0];
        let r = q - (p[0] * ex + p[2]);
        for a in 0..3 {
            jtr[a] += j[a] * r;
            for b in 0..3 {
                jtj[a][b] += j[a] * j[b];
            }
        }
    }
    (jtj, jtr)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    let norm = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if !(m[piv][col].abs() > 1e-14 * norm) {
            return None;
        }
        m.swap(col, piv);
        v.swap(col, piv);
        for row in (col + 1)..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = ((row + 1)..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (v[row] - s) / m[row][row];
    }
    Some(x)
}

fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut inv = [[0.0; 3]; 3];
    for col in 0..3 {
        let mut e = [0.0; 3];
        e[col] = 1.0;
        let x = solve3(m, e)?;
        for row in 0..3 {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

/// Sorts points by `eps` and averages them in `bins` equal-count groups
/// (sizes differ by at most one).
pub fn quantile_bins(points: &[(f64, f64)], bins: usize) -> Vec<(f64, f64)> {
    if points.is_empty() || bins == 0 {
        return Vec::new();
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let bins = bins.min(sorted.len());
    let n = sorted.len();
    (0..bins)
        .map(|k| {
            let chunk = &sorted[k * n / bins..(k + 1) * n / bins];
            let m = chunk.len() as f64;
            (
                chunk.iter().map(|p| p.0).sum::<f64>() / m,
                chunk.iter().map(|p| p.1).sum::<f64>() / m,
            )
        })
        .collect()
}
