//! Exact small-instance oracles: proper-coloring counts and the Potts
//! partition function, both by enumeration with pruning. These back the
//! first-moment and Lipschitz checks; caps keep them honest.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Exact coloring count, with the log value always available.
#[derive(Debug, Clone)]
pub struct ColoringCount {
    pub exact: BigUint,
    pub ln: f64,
}

impl ColoringCount {
    fn from_big(exact: BigUint) -> ColoringCount {
        let ln = ln_big(&exact);
        ColoringCount { exact, ln }
    }
}

/// Natural log of a big integer; -inf for zero.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1023 {
        // fits in f64 range
        let mut v = 0.0f64;
        for (i, d) in x.iter_u64_digits().enumerate() {
            v += (d as f64) * (2.0f64).powi(64 * i as i32);
        }
        v.ln()
    } else {
        let shift = bits - 64;
        let top: BigUint = x >> shift;
        let top64 = top.iter_u64_digits().next().unwrap_or(0);
        (top64 as f64).ln() + shift as f64 * std::f64::consts::LN_2
    }
}

pub const DEFAULT_COUNT_CAP: usize = 25;

/// Exact number of proper k-colorings. Forests (any size) use the closed
/// form k^(n-m) (k-1)^m; general graphs up to `cap` vertices are counted
/// by DFS with forward checking.
pub fn count_colorings_exact(g: &Graph, k: usize, cap: Option<usize>) -> Result<ColoringCount> {
    let cap = cap.unwrap_or(DEFAULT_COUNT_CAP);
    if g.is_forest() {
        // product over components: k * (k-1)^edges, i.e. k^(n-m) (k-1)^m
        let n = g.n() as u32;
        let m = g.m() as u32;
        let count = BigUint::from(k).pow(n - m) * BigUint::from(k - 1).pow(m);
        return Ok(ColoringCount::from_big(count));
    }
    if g.n() > cap {
        return Err(Error::CapExceeded { what: "n (general-graph coloring count)", got: g.n(), cap });
    }
    if k > 64 {
        return Err(Error::InvalidInput("k > 64".into()));
    }
    let order = connectivity_order(g);
    let mut used = vec![0u64; g.n()];
    let full: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let count = dfs_count(g, &order, 0, &mut used, full);
    Ok(ColoringCount::from_big(count))
}

/// BFS-ish order so each vertex (after the first per component) touches an
/// already-colored neighbor; keeps the forward-checking DFS tight.
fn connectivity_order(g: &Graph) -> Vec<u32> {
    let n = g.n();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start as u32]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v as usize) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

fn dfs_count(g: &Graph, order: &[u32], pos: usize, used: &mut Vec<u64>, full: u64) -> BigUint {
    if pos == order.len() {
        return BigUint::one();
    }
    let v = order[pos] as usize;
    let avail = full & !used[v];
    if avail == 0 {
        return BigUint::zero();
    }
    let mut total = BigUint::zero();
    let mut rest = avail;
    while rest != 0 {
        let c = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let bit = 1u64 << c;
        let mut touched = Vec::new();
        for &w in g.neighbors(v) {
            let w = w as usize;
            if used[w] & bit == 0 {
                used[w] |= bit;
                touched.push(w);
            }
        }
        total += dfs_count(g, order, pos + 1, used, full);
        for w in touched {
            used[w] &= !bit;
        }
    }
    total
}

pub const DEFAULT_POTTS_CAP: usize = 20;

/// Histogram of H_G over all k^n color assignments: hist[h] = #assignments
/// with exactly h monochromatic edges. Enumeration with incremental H.
pub fn potts_histogram(g: &Graph, k: usize, cap: Option<usize>) -> Result<Vec<u128>> {
    let cap = cap.unwrap_or(DEFAULT_POTTS_CAP);
    if g.n() > cap {
        return Err(Error::CapExceeded { what: "n (Potts enumeration)", got: g.n(), cap });
    }
    let states = (k as f64).powi(g.n() as i32);
    if states > 2e9 {
        return Err(Error::CapExceeded {
            what: "k^n (Potts enumeration states)",
            got: states as usize,
            cap: 2_000_000_000,
        });
    }
    let n = g.n();
    let mut hist = vec![0u128; g.m() + 1];
    let mut colors = vec![0usize; n];
    // backward adjacency: neighbors with smaller index
    let back: Vec<Vec<u32>> = (0..n)
        .map(|v| g.neighbors(v).iter().copied().filter(|&w| (w as usize) < v).collect())
        .collect();
    fn rec(
        v: usize,
        n: usize,
        k: usize,
        h: usize,
        colors: &mut Vec<usize>,
        back: &[Vec<u32>],
        hist: &mut Vec<u128>,
    ) {
        if v == n {
            hist[h] += 1;
            return;
        }
        for c in 0..k {
            colors[v] = c;
            let add = back[v].iter().filter(|&&w| colors[w as usize] == c).count();
            rec(v + 1, n, k, h + add, colors, back, hist);
        }
    }
    rec(0, n, k, 0, &mut colors, &back, &mut hist);
    Ok(hist)
}

/// ln Z_{beta,k}(G) = ln sum_sigma exp(-beta H_G(sigma)), exact enumeration
/// in log-sum-exp form.
pub fn potts_partition(g: &Graph, k: usize, beta: f64, cap: Option<usize>) -> Result<f64> {
    let hist = potts_histogram(g, k, cap)?;
    Ok(log_sum_exp_hist(&hist, beta))
}

pub fn log_sum_exp_hist(hist: &[u128], beta: f64) -> f64 {
    // terms ln(cnt) - beta*h
    let mut mx = f64::NEG_INFINITY;
    let terms: Vec<f64> = hist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(h, &c)| (c as f64).ln() - beta * h as f64)
        .collect();
    for &t in &terms {
        mx = mx.max(t);
    }
    if mx == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    mx + terms.iter().map(|t| (t - mx).exp()).sum::<f64>().ln()
}
