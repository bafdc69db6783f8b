//! Scalar and vector fixed points, the condensation functional Sigma_k(d),
//! and the bisection for its zero d_cond under common random numbers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gw::{self, TypeCompat};

/// The scalar map f(q) = (1 - exp(-dq/(k-1)))^(k-1).
pub fn scalar_map(k: usize, d: f64, q: f64) -> f64 {
    (1.0 - (-d * q / (k as f64 - 1.0)).exp()).powi(k as i32 - 1)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalarFixedPoint {
    pub q: f64,
    pub residual: f64,
    pub iterations: u32,
    /// d below (2k-1)ln k - 2, where uniqueness in [2/3,1] is unproven.
    pub outside_proven_range: bool,
}

pub fn theorem_interval(k: usize) -> (f64, f64) {
    let lo = (2.0 * k as f64 - 1.0) * (k as f64).ln() - 2.0;
    (lo, lo + 1.0)
}

/// Fixed point of the scalar map in [2/3,1], by iteration from q=1.
///
/// The iterates decrease monotonically, so the first one to drop below 2/3
/// proves there is no fixed point in the interval; that is reported as an
/// explicit error rather than a number.
pub fn scalar_fixed_point(k: usize, d: f64) -> Result<ScalarFixedPoint> {
    if k < 2 {
        return Err(Error::InvalidInput("k must be >= 2".into()));
    }
    let outside = d < theorem_interval(k).0;
    let mut q = 1.0f64;
    let cap = 2_000_000u32;
    for it in 0..cap {
        let fq = scalar_map(k, d, q);
        let resid = (fq - q).abs();
        if resid < 1e-14 {
            return Ok(ScalarFixedPoint { q: fq, residual: (scalar_map(k, d, fq) - fq).abs(), iterations: it, outside_proven_range: outside });
        }
        q = fq;
        if q < 2.0 / 3.0 {
            return Err(Error::NoFixedPoint { k, d, q_exit: q });
        }
    }
    Err(Error::NoFixedPoint { k, d, q_exit: q })
}

/// t applications of the vector map (F(q))_i = (1/k) prod_{j != i}
/// (1 - exp(-d' q_j)) starting from the uniform vector (1/k,...,1/k).
pub fn iterate_vector_f(k: usize, d: f64, t: u32) -> Vec<f64> {
    let mut q = vec![1.0 / k as f64; k];
    for _ in 0..t {
        q = apply_vector_f(k, d, &q);
    }
    q
}

pub fn apply_vector_f(k: usize, d: f64, q: &[f64]) -> Vec<f64> {
    let d_prime = d * k as f64 / (k as f64 - 1.0);
    let evals: Vec<f64> = q.iter().map(|&qj| 1.0 - (-d_prime * qj).exp()).collect();
    (0..k)
        .map(|i| {
            let mut p = 1.0 / k as f64;
            for (j, &e) in evals.iter().enumerate() {
                if j != i {
                    p *= e;
                }
            }
            p
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaEstimate {
    pub d: f64,
    pub value: f64,
    pub stderr: f64,
    pub free_entropy: f64,
    pub n_samples: usize,
}

/// Sigma_k(d) = ln k + (d/2) ln(1-1/k) - E[ln Z(T)/|T|], the expectation
/// estimated over GW trees. Deterministic given (d,k,n_samples,seed).
pub fn sigma(k: usize, d: f64, n_samples: usize, seed: u64) -> Result<SigmaEstimate> {
    let params = gw::params_at_fixed_point(d, k, gw::default_ell_cap(k), TypeCompat::RestrictParentColor)?;
    let est = gw::estimate_free_entropy(&params, n_samples, seed)?;
    let base = (k as f64).ln() + d / 2.0 * (1.0 - 1.0 / k as f64).ln();
    Ok(SigmaEstimate {
        d,
        value: base - est.mean,
        stderr: est.stderr,
        free_entropy: est.mean,
        n_samples,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaCurve {
    pub k: usize,
    pub rows: Vec<SigmaEstimate>,
}

/// Sigma_k on an evenly spaced d-grid, all points driven by the same seed
/// (common random numbers), so differences across d are smooth.
pub fn sigma_curve(
    k: usize,
    d_min: f64,
    d_max: f64,
    steps: usize,
    n_samples: usize,
    seed: u64,
) -> Result<SigmaCurve> {
    if steps < 2 || d_max <= d_min {
        return Err(Error::InvalidInput("sigma_curve: need steps >= 2 and d_max > d_min".into()));
    }
    let mut rows = Vec::with_capacity(steps);
    for i in 0..steps {
        let d = d_min + (d_max - d_min) * i as f64 / (steps - 1) as f64;
        rows.push(sigma(k, d, n_samples, seed)?);
    }
    Ok(SigmaCurve { k, rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct DcondResult {
    pub k: usize,
    pub d_cond: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub interval_lo: f64,
    pub interval_hi: f64,
    pub sigma_lo: SigmaEstimate,
    pub sigma_hi: SigmaEstimate,
    pub evaluations: usize,
    pub stopped_by_noise: bool,
}

/// Bisection for the zero of Sigma_k on the theorem interval, common random
/// numbers throughout. Refuses when the endpoint signs are not resolved at
/// 3 sigma; stops when the bracket is below `tol` or the midpoint value is
/// indistinguishable from zero at 3 sigma.
pub fn find_dcond(k: usize, n_samples: usize, tol: f64, seed: u64) -> Result<DcondResult> {
    let (mut lo, mut hi) = theorem_interval(k);
    let (interval_lo, interval_hi) = (lo, hi);
    let s_lo = sigma(k, lo, n_samples, seed)?;
    let s_hi = sigma(k, hi, n_samples, seed)?;
    let mut evals = 2;
    if !(s_lo.value > 3.0 * s_lo.stderr && s_hi.value < -3.0 * s_hi.stderr) {
        return Err(Error::NoSignChange {
            k,
            d_lo: lo,
            s_lo: s_lo.value,
            se_lo: s_lo.stderr,
            d_hi: hi,
            s_hi: s_hi.value,
            se_hi: s_hi.stderr,
        });
    }
    // local slope from the endpoints, used to convert Sigma noise into d units
    let slope = (s_hi.value - s_lo.value) / (hi - lo);
    let mut stopped_by_noise = false;
    let mut noise_stop: Option<SigmaEstimate> = None;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let s_mid = sigma(k, mid, n_samples, seed)?;
        evals += 1;
        if s_mid.value.abs() <= 3.0 * s_mid.stderr {
            // the sign at mid is unresolved: the zero lies within the
            // noise band around mid, which is tighter than the bracket
            stopped_by_noise = true;
            noise_stop = Some(s_mid);
            break;
        }
        if s_mid.value > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (d_cond, halfwidth) = match &noise_stop {
        Some(s_mid) => {
            let hw = (s_mid.value.abs() + 3.0 * s_mid.stderr) / slope.abs();
            (s_mid.d, hw)
        }
        None => {
            let hw = 0.5 * (hi - lo) + 3.0 * 0.5 * (s_lo.stderr + s_hi.stderr) / slope.abs();
            (0.5 * (lo + hi), hw)
        }
    };
    Ok(DcondResult {
        k,
        d_cond,
        ci_lo: d_cond - halfwidth,
        ci_hi: d_cond + halfwidth,
        interval_lo,
        interval_hi,
        sigma_lo: s_lo,
        sigma_hi: s_hi,
        evaluations: evals,
        stopped_by_noise,
    })
}
