//! Population dynamics for the distributional fixed-point map: per sweep,
//! every element proposes a merge B[mu_1..mu_gamma] of gamma ~ Po(d) random
//! population members, carrying the importance weight
//! [sum_h prod_j (1-mu_j(h))] / Z_gamma(nu), and the population is replaced
//! by self-normalized (systematic) resampling.
//!
//! The frozen fixed point is color-symmetric, and the finite-N chain is
//! unstable against spontaneous color-symmetry breaking: per-color atom
//! masses random-walk under the low-ESS resampling until one color starves,
//! after which all hard fields die. Each sweep therefore ends by applying
//! an independent uniform color relabeling to every element. The relabeling
//! commutes with the map and fixes every symmetric functional; all reported
//! measurements are taken before it, so they remain genuinely dynamical.

use rand::Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixpoint::scalar_fixed_point;
use crate::rng::{self, tag};

/// Empirical measure on the simplex: N points, row-major N x k.
#[derive(Debug, Clone)]
pub struct Population {
    pub points: Vec<f64>,
    pub n: usize,
    pub k: usize,
}

impl Population {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.k..(i + 1) * self.k]
    }

    /// Mean color marginal nu(h) = int mu(h) dpi.
    pub fn nu(&self) -> Vec<f64> {
        let mut nu = vec![0.0; self.k];
        for i in 0..self.n {
            for (h, slot) in nu.iter_mut().enumerate() {
                *slot += self.points[i * self.k + h];
            }
        }
        for slot in nu.iter_mut() {
            *slot /= self.n as f64;
        }
        nu
    }

    /// Z_gamma(pi) = sum_h (1 - nu(h))^gamma.
    pub fn z_gamma(&self, gamma: u32) -> f64 {
        self.nu().iter().map(|&x| (1.0 - x).powi(gamma as i32)).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepMeasurement {
    pub sweep: usize,
    /// hard field per color, pre-relabel
    pub rho: Vec<f64>,
    /// Z_gamma(pi_hat) for gamma = 1..=10, pre-relabel
    pub z_gamma: Vec<f64>,
    pub nu: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PopdynReport {
    pub k: usize,
    pub d: f64,
    pub q_star: f64,
    pub sweeps: usize,
    pub ess_history: Vec<f64>,
    pub hard_mass_history: Vec<f64>,
    pub warnings: Vec<String>,
    pub measurements: Vec<SweepMeasurement>,
}

fn hard_color(point: &[f64]) -> Option<usize> {
    point.iter().position(|&x| x == 1.0)
}

/// Run the population dynamics from the frozen initialization (atoms
/// delta_h with mass q*/k per color, uniform points for the rest).
/// Measurements are recorded for the last `measure_last` sweeps.
pub fn popdyn_run(
    k: usize,
    d: f64,
    n_pop: usize,
    sweeps: usize,
    measure_last: usize,
    seed: u64,
) -> Result<(Population, PopdynReport)> {
    if n_pop < 1000 {
        return Err(Error::InvalidInput(format!("population size {n_pop} below 10^3")));
    }
    let fp = scalar_fixed_point(k, d)?;
    let q = fp.q;
    let mut points = vec![0.0f64; n_pop * k];
    let natom = (n_pop as f64 * q / k as f64).floor() as usize;
    let mut idx = 0;
    for h in 0..k {
        for _ in 0..natom {
            points[idx * k + h] = 1.0;
            idx += 1;
        }
    }
    for i in idx..n_pop {
        for h in 0..k {
            points[i * k + h] = 1.0 / k as f64;
        }
    }
    let mut pop = Population { points, n: n_pop, k };
    let mut report = PopdynReport {
        k,
        d,
        q_star: q,
        sweeps,
        ess_history: Vec::with_capacity(sweeps),
        hard_mass_history: Vec::with_capacity(sweeps),
        warnings: Vec::new(),
        measurements: Vec::new(),
    };
    for sweep in 0..sweeps {
        let nu = pop.nu();
        let ln1m_nu: Vec<f64> = nu.iter().map(|&x| (1.0 - x).ln()).collect();
        // proposals
        let proposals: Vec<(Vec<f64>, f64)> = (0..n_pop)
            .into_par_iter()
            .map(|e| {
                let mut rng = rng::stream(seed, tag::POPDYN, (sweep * n_pop + e) as u64);
                let gamma = rand_distr::Poisson::new(d).unwrap().sample(&mut rng) as usize;
                if gamma == 0 {
                    return (vec![1.0 / k as f64; k], 1.0);
                }
                let mut prod = vec![1.0f64; k];
                for _ in 0..gamma {
                    let j = rng.gen_range(0..n_pop);
                    let mu = pop.point(j);
                    for h in 0..k {
                        prod[h] *= 1.0 - mu[h];
                    }
                }
                let s: f64 = prod.iter().sum();
                let z_gamma: f64 = ln1m_nu.iter().map(|&l| (gamma as f64 * l).exp()).sum();
                if s <= 0.0 {
                    (vec![1.0 / k as f64; k], 0.0)
                } else {
                    for slot in prod.iter_mut() {
                        *slot /= s;
                    }
                    (prod, s / z_gamma)
                }
            })
            .collect();
        let wsum: f64 = proposals.iter().map(|p| p.1).sum();
        let w2sum: f64 = proposals.iter().map(|p| p.1 * p.1).sum();
        let ess = if w2sum > 0.0 { wsum * wsum / w2sum } else { 0.0 };
        report.ess_history.push(ess);
        if ess < n_pop as f64 / 10.0 {
            report.warnings.push(format!(
                "sweep {sweep}: effective sample size {ess:.0} below N/10 = {}",
                n_pop / 10
            ));
        }
        // systematic resampling
        let mut resample_rng = rng::stream(seed, tag::POPDYN_RESAMPLE, sweep as u64);
        let u0: f64 = resample_rng.gen::<f64>() / n_pop as f64;
        let mut new_points = vec![0.0f64; n_pop * k];
        let mut src = 0usize;
        let mut next_cum = proposals[0].1 / wsum;
        for i in 0..n_pop {
            let target = u0 + i as f64 / n_pop as f64;
            while target > next_cum && src + 1 < n_pop {
                src += 1;
                next_cum += proposals[src].1 / wsum;
            }
            new_points[i * k..(i + 1) * k].copy_from_slice(&proposals[src].0);
        }
        pop.points = new_points;
        // measurements on the pre-relabel population
        let hard_mass =
            (0..n_pop).filter(|&i| hard_color(pop.point(i)).is_some()).count() as f64 / n_pop as f64;
        report.hard_mass_history.push(hard_mass);
        if sweep + measure_last >= sweeps {
            let mut rho = vec![0.0f64; k];
            for i in 0..n_pop {
                if let Some(h) = hard_color(pop.point(i)) {
                    rho[h] += 1.0;
                }
            }
            for slot in rho.iter_mut() {
                *slot /= n_pop as f64;
            }
            let nu2 = pop.nu();
            let z_gamma = (1..=10u32)
                .map(|g| nu2.iter().map(|&x| (1.0 - x).powi(g as i32)).sum())
                .collect();
            report.measurements.push(SweepMeasurement { sweep, rho, z_gamma, nu: nu2 });
        }
        // color-symmetry projection: independent uniform relabeling
        pop.points
            .par_chunks_mut(k)
            .enumerate()
            .for_each(|(i, chunk)| {
                let mut rng = rng::stream(seed, tag::POPDYN_RELABEL, (sweep * n_pop + i) as u64);
                // Fisher-Yates on the color slots
                for a in (1..k).rev() {
                    let b = rng.gen_range(0..=a);
                    chunk.swap(a, b);
                }
            });
    }
    Ok((pop, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct HardFields {
    /// rho_i = mass within atom_tol (total variation) of delta_i
    pub rho: Vec<f64>,
    /// per-type average of rho_{i,ell} over types with |ell| = s (index s)
    pub rho_by_size: Vec<f64>,
}

/// Hard fields of an empirical measure. rho_{i,ell} is computed under the
/// tilted measure d pi_i = k mu(i) d pi with the support read off by
/// thresholding entries above atom_tol.
pub fn hard_fields(pop: &Population, atom_tol: f64) -> HardFields {
    let k = pop.k;
    let mut rho = vec![0.0f64; k];
    // rho_{i,ell} accumulated per (i, support-mask), then averaged by size
    let mut by_type: std::collections::HashMap<(usize, u64), f64> = std::collections::HashMap::new();
    for idx in 0..pop.n {
        let mu = pop.point(idx);
        let mut support = 0u64;
        for (h, &x) in mu.iter().enumerate() {
            if x > atom_tol {
                support |= 1 << h;
            }
            if 1.0 - x <= atom_tol {
                rho[h] += 1.0;
            }
        }
        for (i, &x) in mu.iter().enumerate() {
            if x > atom_tol {
                *by_type.entry((i, support)).or_insert(0.0) += k as f64 * x;
            }
        }
    }
    for slot in rho.iter_mut() {
        *slot /= pop.n as f64;
    }
    let mut rho_by_size = vec![0.0f64; k + 1];
    let mut count_by_size = vec![0.0f64; k + 1];
    for ((_, support), mass) in by_type {
        let s = support.count_ones() as usize;
        rho_by_size[s] += mass / pop.n as f64;
        count_by_size[s] += 1.0;
    }
    // average over the types that occur is biased low when many types of a
    // size never appear; divide by the total number of types of that size
    for s in 1..=k {
        let total_types = s as f64 * choose_f(k, s);
        if total_types > 0.0 {
            rho_by_size[s] /= total_types;
        }
    }
    HardFields { rho, rho_by_size }
}

fn choose_f(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let mut v = 1.0f64;
    for i in 0..r {
        v *= (n - i) as f64 / (i + 1) as f64;
    }
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct BetheFunctional {
    pub mean: f64,
    pub stderr: f64,
    pub vertex_term: f64,
    pub vertex_stderr: f64,
    pub edge_term: f64,
    pub edge_stderr: f64,
}

/// The Bethe functional of an empirical measure, by Monte Carlo over the
/// Poisson sums: the vertex part averages
/// ln sum_h prod_{h' != i} prod_j (1 - mu_{h',j}(h)) with gamma_{h'} iid
/// Po(d/(k-1)) and mu_{h',j} drawn from the tilted measures pi_{h'}; the
/// edge part is -(d/2) E ln(1 - <mu_1, mu_2>) over tilted pairs with
/// distinct colors.
pub fn bethe_functional(
    pop: &Population,
    d: f64,
    n_vertex: usize,
    n_edge: usize,
    seed: u64,
) -> BetheFunctional {
    let k = pop.k;
    let n = pop.n;
    // tilted samplers: cumulative weights of mu(h) per color
    let mut cums: Vec<Vec<f64>> = Vec::with_capacity(k);
    for h in 0..k {
        let mut c = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..n {
            acc += pop.points[i * k + h];
            c.push(acc);
        }
        let total = acc;
        for slot in c.iter_mut() {
            *slot /= total;
        }
        cums.push(c);
    }
    let draw = |rng: &mut rand_chacha::ChaCha8Rng, h: usize| -> usize {
        let u: f64 = rng.gen();
        match cums[h].binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => i,
            Err(i) => i.min(n - 1),
        }
    };
    // vertex term
    let lam = d / (k as f64 - 1.0);
    let vvals: Vec<f64> = (0..n_vertex)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::stream(seed, tag::BETHE_MC, s as u64);
            let i = rng.gen_range(0..k);
            let mut prod = vec![1.0f64; k];
            for hp in 0..k {
                if hp == i {
                    continue;
                }
                let g = rand_distr::Poisson::new(lam).unwrap().sample(&mut rng) as usize;
                for _ in 0..g {
                    let j = draw(&mut rng, hp);
                    let mu = pop.point(j);
                    for h in 0..k {
                        prod[h] *= 1.0 - mu[h];
                    }
                }
            }
            prod.iter().sum::<f64>().ln()
        })
        .collect();
    // edge term
    let evals: Vec<f64> = (0..n_edge)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::stream(seed, tag::BETHE_MC, (n_vertex + s) as u64);
            let h1 = rng.gen_range(0..k);
            let h2 = (h1 + 1 + rng.gen_range(0..k - 1)) % k;
            let m1 = pop.point(draw(&mut rng, h1));
            let m2 = pop.point(draw(&mut rng, h2));
            let dot: f64 = m1.iter().zip(m2).map(|(a, b)| a * b).sum();
            (-dot).ln_1p()
        })
        .collect();
    let (vm, vse) = mean_se(&vvals);
    let (em, ese) = mean_se(&evals);
    let edge_term = -(d / 2.0) * em;
    let edge_stderr = (d / 2.0) * ese;
    BetheFunctional {
        mean: vm + edge_term,
        stderr: (vse * vse + edge_stderr * edge_stderr).sqrt(),
        vertex_term: vm,
        vertex_stderr: vse,
        edge_term,
        edge_stderr,
    }
}

fn mean_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, (var / n).sqrt())
}
