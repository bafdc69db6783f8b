//! The multi-type branching process GW(d,k,q*): type weights grouped by
//! list size (exact by color symmetry), subcriticality via the lumped
//! mean-offspring matrix, tree sampling, and Monte-Carlo estimation of
//! E[ln Z(T)/|T|].
//!
//! Types are (i, ell) with i in ell; the per-type weight
//! q_{i,ell} = (1/k) E^{|ell|-1} (1-E)^{k-|ell|} with E = exp(-q d'/k)
//! depends on ell only through its size, so everything is tabulated by
//! size. An individual of type (i,ell), |ell| > 1, spawns Po(d' q_{i',ell'})
//! children of each admissible type; |ell| = 1 types are leaves.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dtree::{dp_count, DecoratedTree, VertexType};
use crate::error::{Error, Result};
use crate::fixpoint::scalar_fixed_point;
use crate::rng::{self, poisson_inv, tag};

/// Which child types count as admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TypeCompat {
    /// ell ∩ ell' != 0, |ell'| > 1, and i' != i: the planted-model reading
    /// (edges are bichromatic), the default.
    RestrictParentColor,
    /// Only ell ∩ ell' != 0 and |ell'| > 1.
    Literal,
}

pub const DEFAULT_TREE_CAP: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct GwParams {
    pub k: usize,
    pub d: f64,
    pub d_prime: f64,
    pub q_star: f64,
    pub ell_cap: usize,
    pub compat: TypeCompat,
    /// Mass dropped by truncating list sizes above ell_cap.
    pub tail_mass: f64,
    /// Per-type weight w[s] = q_{i,ell} for |ell| = s (index 1..=k).
    type_weight: Vec<f64>,
    /// Number of types of each size: k * C(k-1, s-1).
    type_count: Vec<f64>,
    /// root size CDF over 1..=ell_cap (renormalized after truncation)
    root_cdf: Vec<f64>,
    /// child_rate[a][b] = d' * w[b] * A(a,b) for a,b in 2..=ell_cap
    child_rate: Vec<Vec<f64>>,
    /// S(a) = sum over all admissible child types (all sizes up to k) of w
    offspring_mass: Vec<f64>,
    /// Tree size cap for sampling.
    pub tree_cap: usize,
}

fn ln_choose(n: usize, r: usize) -> f64 {
    if r > n {
        return f64::NEG_INFINITY;
    }
    let mut s = 0.0;
    for i in 0..r {
        s += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    s
}

fn choose_f(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    ln_choose(n, r).exp()
}

/// Count of admissible child types of size b for a parent of list size a:
/// pairs (i', ell') with |ell'| = b and ell' meeting the parent list, minus
/// (in the restricted variant) the types with i' equal to the parent color.
fn admissible_count(k: usize, a: usize, b: usize, compat: TypeCompat) -> f64 {
    let meeting = b as f64 * (choose_f(k, b) - choose_f(k - a, b));
    match compat {
        TypeCompat::Literal => meeting,
        TypeCompat::RestrictParentColor => meeting - choose_f(k - 1, b - 1),
    }
}

/// Build the GW parameter table at branching parameter `q` (the symmetric
/// point q_j = q/k for all j).
pub fn q_table(d: f64, k: usize, q: f64, ell_cap: usize, compat: TypeCompat) -> Result<GwParams> {
    if !(0.0..=1.0).contains(&q) || q == 0.0 {
        return Err(Error::InvalidInput(format!("q={q} not in (0,1]")));
    }
    if !(2..=64).contains(&k) {
        return Err(Error::InvalidInput(format!("k={k} out of 2..=64")));
    }
    let d_prime = d * k as f64 / (k as f64 - 1.0);
    let e = (-q * d_prime / k as f64).exp();
    let mut type_weight = vec![0.0; k + 1];
    let mut type_count = vec![0.0; k + 1];
    for s in 1..=k {
        type_weight[s] = (1.0 / k as f64) * e.powi(s as i32 - 1) * (1.0 - e).powi((k - s) as i32);
        type_count[s] = k as f64 * choose_f(k - 1, s - 1);
    }
    let total_mass: f64 = (1..=k).map(|s| type_weight[s] * type_count[s]).sum();
    if (total_mass - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "type-weight identity violated: sum q_(i,ell) = {total_mass}"
        )));
    }
    let ell_cap = ell_cap.clamp(1, k);
    let tail_mass: f64 = ((ell_cap + 1)..=k).map(|s| type_weight[s] * type_count[s]).sum();
    let kept: f64 = (1..=ell_cap).map(|s| type_weight[s] * type_count[s]).sum();
    let mut root_cdf = Vec::with_capacity(ell_cap);
    let mut acc = 0.0;
    for s in 1..=ell_cap {
        acc += type_weight[s] * type_count[s] / kept;
        root_cdf.push(acc);
    }
    let mut child_rate = vec![vec![0.0; ell_cap + 1]; ell_cap + 1];
    for a in 2..=ell_cap {
        for b in 2..=ell_cap {
            child_rate[a][b] = d_prime * type_weight[b] * admissible_count(k, a, b, compat);
        }
    }
    let mut offspring_mass = vec![0.0; k + 1];
    for a in 2..=k {
        offspring_mass[a] =
            (2..=k).map(|b| type_weight[b] * admissible_count(k, a, b, compat)).sum();
    }
    Ok(GwParams {
        k,
        d,
        d_prime,
        q_star: q,
        ell_cap,
        compat,
        tail_mass,
        type_weight,
        type_count,
        root_cdf,
        child_rate,
        offspring_mass,
        tree_cap: DEFAULT_TREE_CAP,
    })
}

/// Parameter table at the frozen fixed point q* of the scalar map.
pub fn params_at_fixed_point(d: f64, k: usize, ell_cap: usize, compat: TypeCompat) -> Result<GwParams> {
    let fp = scalar_fixed_point(k, d)?;
    q_table(d, k, fp.q, ell_cap, compat)
}

impl GwParams {
    /// Per-type weight q_{i,ell} for |ell| = s.
    pub fn per_type_weight(&self, s: usize) -> f64 {
        self.type_weight[s]
    }

    /// Number of types of size s.
    pub fn types_of_size(&self, s: usize) -> f64 {
        self.type_count[s]
    }

    /// Total weight of admissible child types for a parent of list size a.
    pub fn offspring_weight(&self, a: usize) -> f64 {
        self.offspring_mass[a]
    }

    /// Poisson rate for size-b children of a size-a parent.
    pub fn offspring_rate(&self, a: usize, b: usize) -> f64 {
        self.child_rate[a][b]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanMatrix {
    /// list sizes indexing rows/columns (2..=ell_cap)
    pub sizes: Vec<usize>,
    pub entries: Vec<Vec<f64>>,
    pub spectral_radius: f64,
}

/// Mean-offspring matrix lumped by list size (exact by color symmetry);
/// size-1 types are absorbing leaves and excluded. Spectral radius via
/// power iteration to 1e-10.
pub fn mean_matrix(params: &GwParams) -> MeanMatrix {
    let sizes: Vec<usize> = (2..=params.ell_cap).collect();
    let n = sizes.len();
    let entries: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&a| sizes.iter().map(|&b| params.child_rate[a][b]).collect())
        .collect();
    let mut v = vec![1.0f64; n.max(1)];
    let mut rho = 0.0;
    if n > 0 {
        for _ in 0..100_000 {
            let mut w = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    w[i] += entries[i][j] * v[j];
                }
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                rho = 0.0;
                break;
            }
            for x in w.iter_mut() {
                *x /= norm;
            }
            let new_rho = norm;
            if (new_rho - rho).abs() < 1e-10 * new_rho.max(1.0) {
                rho = new_rho;
                break;
            }
            rho = new_rho;
            v = w;
        }
    }
    MeanMatrix { sizes, entries, spectral_radius: rho }
}

pub fn is_subcritical(params: &GwParams) -> (bool, f64) {
    let m = mean_matrix(params);
    (m.spectral_radius < 1.0, m.spectral_radius)
}

/// Sample one decorated tree. Uses inversion for every discrete draw so
/// that runs at nearby d under the same stream stay coupled (common random
/// numbers for the root-finding in Sigma_k).
pub fn sample_tree<R: Rng>(params: &GwParams, rng: &mut R) -> Result<DecoratedTree> {
    let (sub, rho) = is_subcritical(params);
    if !sub {
        return Err(Error::Supercritical { k: params.k, d: params.d, rho });
    }
    sample_tree_unchecked(params, rng)
}

/// Sampling without the subcriticality refusal (used internally after the
/// caller has verified it once; still guarded by the size cap).
pub fn sample_tree_unchecked<R: Rng>(params: &GwParams, rng: &mut R) -> Result<DecoratedTree> {
    let k = params.k;
    // root size by inversion
    let u: f64 = rng.gen();
    let mut s = params.ell_cap;
    for (idx, &c) in params.root_cdf.iter().enumerate() {
        if u <= c {
            s = idx + 1;
            break;
        }
    }
    let root_type = sample_type_of_size(rng, k, s, None, params.compat);
    let mut parent = vec![-1i32];
    let mut types = vec![root_type];
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        let tv = types[v];
        let a = tv.list_size() as usize;
        if a <= 1 {
            continue;
        }
        for b in 2..=params.ell_cap {
            let lam = params.child_rate[a][b];
            if lam <= 0.0 {
                continue;
            }
            let n_children = if lam < 30.0 {
                poisson_inv(rng, lam)
            } else {
                rand_distr::Distribution::sample(&rand_distr::Poisson::new(lam).unwrap(), rng) as u64
            };
            for _ in 0..n_children {
                let ct = sample_type_of_size(rng, k, b, Some(tv), params.compat);
                types.push(ct);
                parent.push(v as i32);
                stack.push(types.len() - 1);
                if types.len() > params.tree_cap {
                    return Err(Error::TreeTooLarge { cap: params.tree_cap });
                }
            }
        }
    }
    DecoratedTree::new(k, parent, types)
}

/// Uniform type of list size s, restricted (for children) to lists meeting
/// the parent's and, in the restricted variant, colors differing from the
/// parent's. Rejection sampling; acceptance stays bounded away from zero
/// for the sizes that actually occur.
fn sample_type_of_size<R: Rng>(
    rng: &mut R,
    k: usize,
    s: usize,
    parent: Option<VertexType>,
    compat: TypeCompat,
) -> VertexType {
    loop {
        // s distinct colors
        let mut mask = 0u64;
        let mut cnt = 0;
        while cnt < s {
            let c = rng.gen_range(0..k);
            if mask >> c & 1 == 0 {
                mask |= 1 << c;
                cnt += 1;
            }
        }
        // distinguished color uniform in the list
        let pos = rng.gen_range(0..s);
        let mut color = 0;
        let mut seen = 0;
        for c in 0..k {
            if mask >> c & 1 == 1 {
                if seen == pos {
                    color = c;
                    break;
                }
                seen += 1;
            }
        }
        if let Some(p) = parent {
            if mask & p.avail == 0 {
                continue;
            }
            if compat == TypeCompat::RestrictParentColor && color as u8 == p.color {
                continue;
            }
        }
        return VertexType::new(color, mask).unwrap();
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FreeEntropyEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub mean_tree_size: f64,
    pub max_tree_size: usize,
}

/// Monte-Carlo mean of ln Z(T)/|T| over n_samples trees using the exact
/// tree DP. Per-sample streams derived from (seed, sample index); the
/// reduction order is fixed, so results are bit-reproducible and
/// independent of thread count.
pub fn estimate_free_entropy(params: &GwParams, n_samples: usize, seed: u64) -> Result<FreeEntropyEstimate> {
    let (sub, rho) = is_subcritical(params);
    if !sub {
        return Err(Error::Supercritical { k: params.k, d: params.d, rho });
    }
    let vals: Vec<Result<(f64, usize)>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, tag::GW_SAMPLE, i as u64);
            let tree = sample_tree_unchecked(params, &mut rng)?;
            let dp = dp_count(&tree)?;
            Ok((dp.log_count / tree.n() as f64, tree.n()))
        })
        .collect();
    let mut sum = 0.0f64;
    let mut sumsq = 0.0f64;
    let mut size_sum = 0usize;
    let mut size_max = 0usize;
    for v in vals {
        let (x, sz) = v?;
        sum += x;
        sumsq += x * x;
        size_sum += sz;
        size_max = size_max.max(sz);
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    Ok(FreeEntropyEstimate {
        mean,
        stderr: (var / n).sqrt(),
        n_samples,
        mean_tree_size: size_sum as f64 / n,
        max_tree_size: size_max,
    })
}

pub const DEFAULT_ELL_CAP: usize = 12;

pub fn default_ell_cap(k: usize) -> usize {
    DEFAULT_ELL_CAP.min(k)
}
