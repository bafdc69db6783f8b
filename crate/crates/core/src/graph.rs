//! Random-graph ensembles, colorings, and their small helpers.
//!
//! Vertices are `0..n`, edges are unordered pairs stored with `u < v`.
//! Colors are `0..k` with `k <= 64` throughout the crate; color sets are
//! 64-bit masks.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

pub const MAX_COLORS: usize = 64;

/// Simple undirected graph with adjacency lists kept in sync with the
/// edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    adj: Vec<Vec<u32>>,
}

impl Graph {
    pub fn new(n: usize, mut edges: Vec<(u32, u32)>) -> Result<Graph> {
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
            if e.0 == e.1 {
                return Err(Error::InvalidInput(format!("self-loop at vertex {}", e.0)));
            }
            if e.1 as usize >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({},{}) out of range for n={n}",
                    e.0, e.1
                )));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        Ok(Graph { n, edges, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// True if the graph has no cycle.
    pub fn is_forest(&self) -> bool {
        let mut dsu = Dsu::new(self.n);
        for &(u, v) in &self.edges {
            if !dsu.union(u as usize, v as usize) {
                return false;
            }
        }
        true
    }

    /// Connected-component index per vertex, labels compacted to 0..count.
    pub fn components(&self) -> (Vec<u32>, usize) {
        let mut dsu = Dsu::new(self.n);
        for &(u, v) in &self.edges {
            dsu.union(u as usize, v as usize);
        }
        let mut label = vec![u32::MAX; self.n];
        let mut next = 0u32;
        let mut comp = vec![0u32; self.n];
        for v in 0..self.n {
            let r = dsu.find(v);
            if label[r] == u32::MAX {
                label[r] = next;
                next += 1;
            }
            comp[v] = label[r];
        }
        (comp, next as usize)
    }
}

/// Tiny union-find used in a few places.
pub(crate) struct Dsu {
    parent: Vec<u32>,
}

impl Dsu {
    pub fn new(n: usize) -> Dsu {
        Dsu { parent: (0..n as u32).collect() }
    }
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let g = self.parent[self.parent[x] as usize];
            self.parent[x] = g;
            x = g as usize;
        }
        x
    }
    /// Returns false when x and y were already connected.
    pub fn union(&mut self, x: usize, y: usize) -> bool {
        let rx = self.find(x);
        let ry = self.find(y);
        if rx == ry {
            return false;
        }
        self.parent[rx] = ry as u32;
        true
    }
}

/// Assignment of one of `k` colors to each vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    pub colors: Vec<u8>,
    pub k: usize,
}

impl Coloring {
    pub fn new(colors: Vec<u8>, k: usize) -> Result<Coloring> {
        if !(1..=MAX_COLORS).contains(&k) {
            return Err(Error::InvalidInput(format!("k={k} out of 1..=64")));
        }
        if let Some(&c) = colors.iter().find(|&&c| c as usize >= k) {
            return Err(Error::InvalidInput(format!("color {c} >= k={k}")));
        }
        Ok(Coloring { colors, k })
    }

    pub fn n(&self) -> usize {
        self.colors.len()
    }

    pub fn color(&self, v: usize) -> usize {
        self.colors[v] as usize
    }

    /// Class sizes |sigma^{-1}(i)| for i in 0..k.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &c in &self.colors {
            sizes[c as usize] += 1;
        }
        sizes
    }

    pub fn is_proper(&self, g: &Graph) -> bool {
        g.edges().iter().all(|&(u, v)| self.colors[u as usize] != self.colors[v as usize])
    }

    /// Balanced in the sense ||sigma^{-1}(i)| - n/k| <= sqrt(n) for all i.
    pub fn is_balanced(&self) -> bool {
        let n = self.n() as f64;
        let target = n / self.k as f64;
        let tol = n.sqrt();
        self.class_sizes().iter().all(|&s| (s as f64 - target).abs() <= tol)
    }
}

/// Overlap matrix rho_ij = |sigma^{-1}(i) ∩ tau^{-1}(j)| / n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub k: usize,
    /// Row-major k*k entries.
    pub rho: Vec<f64>,
}

impl OverlapMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rho[i * self.k + j]
    }
    pub fn diag(&self) -> Vec<f64> {
        (0..self.k).map(|i| self.get(i, i)).collect()
    }
}

pub fn overlap(sigma: &Coloring, tau: &Coloring) -> Result<OverlapMatrix> {
    if sigma.n() != tau.n() {
        return Err(Error::InvalidInput("overlap: colorings differ in n".into()));
    }
    if sigma.k != tau.k {
        return Err(Error::InvalidInput("overlap: colorings differ in k".into()));
    }
    let k = sigma.k;
    let n = sigma.n();
    let mut counts = vec![0u64; k * k];
    for v in 0..n {
        counts[sigma.color(v) * k + tau.color(v)] += 1;
    }
    let rho = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(OverlapMatrix { k, rho })
}

pub fn monochrome_edges(g: &Graph, sigma: &Coloring) -> usize {
    g.edges()
        .iter()
        .filter(|&&(u, v)| sigma.colors[u as usize] == sigma.colors[v as usize])
        .count()
}

/// Forb(sigma) = sum_i C(|sigma^{-1}(i)|, 2), the number of monochromatic
/// vertex pairs.
pub fn forb(sigma: &Coloring) -> u64 {
    sigma
        .class_sizes()
        .iter()
        .map(|&s| (s as u64) * (s as u64).saturating_sub(1) / 2)
        .sum()
}

/// P[sigma proper in G(n,m)] = C(N - Forb(sigma), m) / C(N, m) with
/// N = C(n,2), evaluated in log space. Returns 0 when N - Forb < m.
pub fn prob_proper_gnm(sigma: &Coloring, m: usize) -> f64 {
    let n = sigma.n() as u64;
    let cap_n = n * n.saturating_sub(1) / 2;
    let free = cap_n - forb(sigma);
    if (m as u64) > free {
        return 0.0;
    }
    // C(free,m)/C(N,m) = prod_{i=0}^{m-1} (free-i)/(N-i)
    let mut ln = 0.0f64;
    for i in 0..m as u64 {
        ln += ((free - i) as f64).ln() - ((cap_n - i) as f64).ln();
    }
    ln.exp()
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Lexicographic index of the pair (u,v), u < v, among all C(n,2) pairs.
/// Row u starts at offset u(2n-u-1)/2; invert by float guess, then fix up.
fn pair_unrank(n: u64, idx: u64) -> (u32, u32) {
    let nf = n as f64;
    let disc = ((2.0 * nf - 1.0) * (2.0 * nf - 1.0) - 8.0 * idx as f64).max(0.0).sqrt();
    let mut u = (((2.0 * nf - 1.0 - disc) / 2.0).floor().max(0.0) as u64).min(n - 2);
    loop {
        let start = u * (2 * n - u - 1) / 2;
        let len = n - u - 1;
        if idx < start {
            u -= 1;
        } else if idx >= start + len {
            u += 1;
        } else {
            let v = u + 1 + (idx - start);
            return (u as u32, v as u32);
        }
    }
}

/// G(n,p): every pair independently with probability p. Skip-sampling, so
/// the cost is proportional to the number of edges generated.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("p={p} not in [0,1]")));
    }
    let total = (n as u64) * (n as u64 - 1) / 2;
    let mut edges = Vec::new();
    if p >= 1.0 {
        for idx in 0..total {
            let (u, v) = pair_unrank(n as u64, idx);
            edges.push((u, v));
        }
        return Graph::new(n, edges);
    }
    if p > 0.0 && n > 1 {
        let mut rng = rng::stream(seed, tag::GNP, 0);
        let lq = (1.0 - p).ln();
        let mut idx: i64 = -1;
        loop {
            let u: f64 = rng.gen::<f64>();
            let skip = (u.ln() / lq).floor() as i64;
            idx += 1 + skip.max(0);
            if idx as u64 >= total {
                break;
            }
            let (a, b) = pair_unrank(n as u64, idx as u64);
            edges.push((a, b));
        }
    }
    Graph::new(n, edges)
}

/// G(n,m): exactly m distinct edges, uniform over m-subsets of pairs.
/// Floyd's algorithm over pair indices, no retry loops.
pub fn gen_gnm(n: usize, m: usize, seed: u64) -> Result<Graph> {
    let total = (n as u64) * (n as u64 - 1) / 2;
    if m as u64 > total {
        return Err(Error::InvalidInput(format!("m={m} exceeds C({n},2)={total}")));
    }
    let mut rng = rng::stream(seed, tag::GNM, 0);
    let mut chosen = std::collections::HashSet::with_capacity(m * 2);
    for j in (total - m as u64)..total {
        let t = rng.gen_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    let edges = chosen.into_iter().map(|idx| pair_unrank(n as u64, idx)).collect();
    Graph::new(n, edges)
}

/// Planted model G(n,p',sigma): sigma uniform over [k]^n, every bichromatic
/// pair linked independently with p' = d'/n, d' = dk/(k-1).
pub fn gen_planted_p(n: usize, k: usize, d: f64, seed: u64) -> Result<(Coloring, Graph)> {
    if !(2..=MAX_COLORS).contains(&k) {
        return Err(Error::InvalidInput(format!("k={k} out of 2..=64")));
    }
    if d < 0.0 {
        return Err(Error::InvalidInput(format!("d={d} negative")));
    }
    let d_prime = d * k as f64 / (k as f64 - 1.0);
    let p_prime = d_prime / n as f64;
    if p_prime > 1.0 {
        return Err(Error::InvalidInput(format!("p'=d'/n={p_prime} exceeds 1")));
    }
    let mut rng = rng::stream(seed, tag::PLANTED_P, 0);
    let colors: Vec<u8> = (0..n).map(|_| rng.gen_range(0..k) as u8).collect();
    let sigma = Coloring::new(colors, k)?;
    let graph = plant_edges_p(&sigma, p_prime, seed)?;
    Ok((sigma, graph))
}

fn plant_edges_p(sigma: &Coloring, p: f64, seed: u64) -> Result<Graph> {
    let n = sigma.n();
    let k = sigma.k;
    let mut classes: Vec<Vec<u32>> = vec![Vec::new(); k];
    for v in 0..n {
        classes[sigma.color(v)].push(v as u32);
    }
    let mut edges = Vec::new();
    if p > 0.0 {
        let lq = if p >= 1.0 { f64::NEG_INFINITY } else { (1.0 - p).ln() };
        let mut stream_idx = 1u64;
        for a in 0..k {
            for b in (a + 1)..k {
                let na = classes[a].len() as u64;
                let nb = classes[b].len() as u64;
                let total = na * nb;
                if total == 0 {
                    continue;
                }
                let mut rng = rng::stream(seed, tag::PLANTED_P, stream_idx);
                stream_idx += 1;
                if p >= 1.0 {
                    for i in 0..na {
                        for j in 0..nb {
                            edges.push((classes[a][i as usize], classes[b][j as usize]));
                        }
                    }
                    continue;
                }
                let mut idx: i64 = -1;
                loop {
                    let u: f64 = rng.gen::<f64>();
                    let skip = (u.ln() / lq).floor() as i64;
                    idx += 1 + skip.max(0);
                    if idx as u64 >= total {
                        break;
                    }
                    let i = (idx as u64 / nb) as usize;
                    let j = (idx as u64 % nb) as usize;
                    edges.push((classes[a][i], classes[b][j]));
                }
            }
        }
    }
    Graph::new(n, edges)
}

/// Planted model with fixed edge count: exactly m edges uniform over the
/// bichromatic pairs of sigma.
pub fn gen_planted_m(n: usize, m: usize, sigma: &Coloring, seed: u64) -> Result<Graph> {
    if sigma.n() != n {
        return Err(Error::InvalidInput("gen_planted_m: coloring length != n".into()));
    }
    let k = sigma.k;
    let mut classes: Vec<Vec<u32>> = vec![Vec::new(); k];
    for v in 0..n {
        classes[sigma.color(v)].push(v as u32);
    }
    // blocks of bichromatic pairs, one per color pair (a,b)
    let mut blocks = Vec::new(); // (a, b, size, prefix)
    let mut total = 0u64;
    for a in 0..k {
        for b in (a + 1)..k {
            let sz = classes[a].len() as u64 * classes[b].len() as u64;
            if sz > 0 {
                blocks.push((a, b, sz, total));
                total += sz;
            }
        }
    }
    if m as u64 > total {
        return Err(Error::InvalidInput(format!(
            "m={m} exceeds bichromatic pair count {total}"
        )));
    }
    let mut rng = rng::stream(seed, tag::PLANTED_M, 0);
    let mut chosen = std::collections::HashSet::with_capacity(m * 2);
    for j in (total - m as u64)..total {
        let t = rng.gen_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    let mut edges = Vec::with_capacity(m);
    for idx in chosen {
        let bi = match blocks.binary_search_by(|bl| bl.3.cmp(&idx)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let (a, b, _, prefix) = blocks[bi];
        let off = idx - prefix;
        let nb = classes[b].len() as u64;
        let i = (off / nb) as usize;
        let j = (off % nb) as usize;
        edges.push((classes[a][i], classes[b][j]));
    }
    Graph::new(n, edges)
}

// ---------------------------------------------------------------------------
// Text formats
// ---------------------------------------------------------------------------

/// Graph file: line 1 `n m k`, then m lines `u v` (0-based).
pub fn write_graph<W: Write>(w: &mut W, g: &Graph, k: usize) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", g.n(), g.m(), k);
    for &(u, v) in g.edges() {
        let _ = writeln!(s, "{u} {v}");
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_graph<R: BufRead>(r: &mut R) -> Result<(Graph, usize)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty graph file".into()))??;
    let mut it = header.split_whitespace();
    let n: usize = parse_field(it.next(), "n")?;
    let m: usize = parse_field(it.next(), "m")?;
    let k: usize = parse_field(it.next(), "k")?;
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse("graph file: missing edge line".into()))??;
        let mut it = line.split_whitespace();
        let u: u32 = parse_field(it.next(), "u")?;
        let v: u32 = parse_field(it.next(), "v")?;
        edges.push((u, v));
    }
    Ok((Graph::new(n, edges)?, k))
}

/// Coloring file: n lines, one color per line.
pub fn write_coloring<W: Write>(w: &mut W, c: &Coloring) -> Result<()> {
    let mut s = String::new();
    for &col in &c.colors {
        let _ = writeln!(s, "{col}");
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_coloring<R: BufRead>(r: &mut R, k: usize) -> Result<Coloring> {
    let mut colors = Vec::new();
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let c: u8 = t.parse().map_err(|_| Error::Parse(format!("bad color '{t}'")))?;
        colors.push(c);
    }
    Coloring::new(colors, k)
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, name: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::Parse(format!("missing field {name}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad field {name}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnp_extremes() {
        let g = gen_gnp(3, 1.0, 1).unwrap();
        assert_eq!(g.m(), 3); // triangle
        let g = gen_gnp(5, 0.0, 1).unwrap();
        assert_eq!(g.m(), 0);
    }

    #[test]
    fn gnp_mean_edges() {
        // n=10^4, p=2/n: mean edge count within 4 sigma over 100 seeds
        let n = 10_000usize;
        let p = 2.0 / n as f64;
        let total = (n as u64 * (n as u64 - 1) / 2) as f64;
        let mean_expected = total * p;
        let var = total * p * (1.0 - p);
        let trials = 100;
        let mut sum = 0f64;
        for s in 0..trials {
            sum += gen_gnp(n, p, s as u64).unwrap().m() as f64;
        }
        let mean = sum / trials as f64;
        let se = (var / trials as f64).sqrt();
        assert!(
            (mean - mean_expected).abs() < 4.0 * se,
            "mean {mean} vs {mean_expected} (se {se})"
        );
    }

    #[test]
    fn gnm_exact_counts() {
        let g = gen_gnm(3, 3, 7).unwrap();
        assert_eq!(g.m(), 3);
        let g = gen_gnm(4, 0, 7).unwrap();
        assert_eq!(g.m(), 0);
        assert!(gen_gnm(4, 7, 7).is_err());
    }

    #[test]
    fn gnm_uniform_over_subsets() {
        // n=6, m=3: each 3-edge set has probability 1/C(15,3) = 1/455.
        // Chi-square-free check: track one specific subset's frequency
        // within 4 sigma over many seeds.
        let trials = 200_000u64;
        let mut hits = 0u64;
        let target = {
            let g = gen_gnm(6, 3, 0).unwrap();
            g.edges().to_vec()
        };
        for s in 0..trials {
            let g = gen_gnm(6, 3, s).unwrap();
            if g.edges() == target.as_slice() {
                hits += 1;
            }
        }
        let p = 1.0 / 455.0;
        let mean = trials as f64 * p;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (hits as f64 - mean).abs() < 4.0 * sd,
            "hits {hits} vs mean {mean} sd {sd}"
        );
    }

    #[test]
    fn planted_p_no_monochromatic_edges() {
        let (sigma, g) = gen_planted_p(500, 4, 6.0, 42).unwrap();
        assert_eq!(monochrome_edges(&g, &sigma), 0);
        assert!(sigma.is_proper(&g));
    }

    #[test]
    fn planted_p_mean_degree() {
        // mean degree within 1% of d, averaged over seeds
        let n = 20_000;
        let d = 12.0;
        let mut degs = 0f64;
        let trials = 10;
        for s in 0..trials {
            let (_, g) = gen_planted_p(n, 5, d, s).unwrap();
            degs += 2.0 * g.m() as f64 / n as f64;
        }
        let mean = degs / trials as f64;
        assert!((mean - d).abs() / d < 0.01, "mean degree {mean} vs {d}");
    }

    #[test]
    fn planted_p_single_edge_frequency() {
        // n=2, k=2: pair is bichromatic ~half the time; conditioned on
        // sigma=(0,1) or (1,0), edge present with probability p' = d'/n = d.
        // Use small d so p' <= 1 with n=2: d' = 2d, p' = d.
        let d = 0.37;
        let trials = 200_000u64;
        let mut bich = 0u64;
        let mut withedge = 0u64;
        for s in 0..trials {
            let (sigma, g) = gen_planted_p(2, 2, d, s).unwrap();
            if sigma.colors[0] != sigma.colors[1] {
                bich += 1;
                if g.m() == 1 {
                    withedge += 1;
                }
            }
        }
        let freq = withedge as f64 / bich as f64;
        let se = (d * (1.0 - d) / bich as f64).sqrt();
        assert!((freq - d).abs() < 4.0 * se, "freq {freq} vs {d}");
    }

    #[test]
    fn planted_m_exact_shapes() {
        // n=3, k=3, sigma=(0,1,2), m=3 -> triangle
        let sigma = Coloring::new(vec![0, 1, 2], 3).unwrap();
        let g = gen_planted_m(3, 3, &sigma, 5).unwrap();
        assert_eq!(g.m(), 3);
        // n=4, sigma=(0,0,1,1), m=4 -> K_{2,2}
        let sigma = Coloring::new(vec![0, 0, 1, 1], 2).unwrap();
        let g = gen_planted_m(4, 4, &sigma, 5).unwrap();
        assert_eq!(g.m(), 4);
        for &(u, v) in g.edges() {
            assert_ne!(sigma.colors[u as usize], sigma.colors[v as usize]);
        }
        assert!(gen_planted_m(4, 5, &sigma, 5).is_err());
    }

    #[test]
    fn planted_m_uniform() {
        // n=6, balanced 3 classes, m=2: all C(12,2)=66 pair-subsets equally
        // likely; check one subset's frequency within 4 sigma.
        let sigma = Coloring::new(vec![0, 0, 1, 1, 2, 2], 3).unwrap();
        let target = gen_planted_m(6, 2, &sigma, 0).unwrap().edges().to_vec();
        let trials = 200_000u64;
        let mut hits = 0u64;
        for s in 0..trials {
            if gen_planted_m(6, 2, &sigma, s).unwrap().edges() == target.as_slice() {
                hits += 1;
            }
        }
        let p = 1.0 / 66.0;
        let mean = trials as f64 * p;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!((hits as f64 - mean).abs() < 4.0 * sd);
    }

    #[test]
    fn planted_m_is_gnm_conditioned_on_properness() {
        // G(n,m,sigma) is G(n,m) conditioned on sigma being proper: the
        // frequency of one fixed bichromatic edge set agrees across the
        // two experiments within 4 sigma.
        let sigma = Coloring::new(vec![0, 0, 1, 1], 2).unwrap();
        let target = gen_planted_m(4, 2, &sigma, 0).unwrap().edges().to_vec();
        let trials = 200_000u64;
        let mut planted_hits = 0u64;
        let mut cond_hits = 0u64;
        let mut cond_total = 0u64;
        for s in 0..trials {
            if gen_planted_m(4, 2, &sigma, s).unwrap().edges() == target.as_slice() {
                planted_hits += 1;
            }
            let g = gen_gnm(4, 2, 7_000_000 + s).unwrap();
            if sigma.is_proper(&g) {
                cond_total += 1;
                if g.edges() == target.as_slice() {
                    cond_hits += 1;
                }
            }
        }
        let p1 = planted_hits as f64 / trials as f64;
        let p2 = cond_hits as f64 / cond_total as f64;
        let se = (p1 * (1.0 - p1) / trials as f64 + p2 * (1.0 - p2) / cond_total as f64).sqrt();
        assert!((p1 - p2).abs() < 4.0 * se, "planted {p1} vs conditioned {p2} (se {se})");
    }

    #[test]
    fn forb_examples() {
        let s = Coloring::new(vec![0, 0, 1, 1, 2], 3).unwrap();
        assert_eq!(forb(&s), 2);
        let s = Coloring::new(vec![0; 5], 3).unwrap();
        assert_eq!(forb(&s), 10);
    }

    #[test]
    fn forb_balanced_is_minimum() {
        // n=9, k=3: balanced coloring attains 3*C(3,2)=9, the minimum over
        // all 3^9 colorings (enumerated).
        let mut min = u64::MAX;
        for code in 0..3u32.pow(9) {
            let mut c = code;
            let mut colors = Vec::with_capacity(9);
            for _ in 0..9 {
                colors.push((c % 3) as u8);
                c /= 3;
            }
            let s = Coloring::new(colors, 3).unwrap();
            min = min.min(forb(&s));
        }
        assert_eq!(min, 9);
        let balanced = Coloring::new(vec![0, 0, 0, 1, 1, 1, 2, 2, 2], 3).unwrap();
        assert_eq!(forb(&balanced), 9);
    }

    #[test]
    fn prob_proper_trivial() {
        let s = Coloring::new(vec![0, 1], 2).unwrap();
        assert_eq!(prob_proper_gnm(&s, 1), 1.0);
        let s = Coloring::new(vec![0, 0], 2).unwrap();
        assert_eq!(prob_proper_gnm(&s, 1), 0.0);
    }

    #[test]
    fn prob_proper_matches_monte_carlo() {
        // n=6, k=3, balanced sigma, m=5; the acceptance suite runs the
        // 10^6-trial version at n=8.
        let sigma = Coloring::new(vec![0, 0, 1, 1, 2, 2], 3).unwrap();
        let p = prob_proper_gnm(&sigma, 5);
        let trials = 300_000u64;
        let mut hits = 0u64;
        for s in 0..trials {
            let g = gen_gnm(6, 5, s).unwrap();
            if sigma.is_proper(&g) {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * sd, "freq {freq} vs exact {p}");
    }

    #[test]
    fn overlap_examples() {
        let s = Coloring::new(vec![0, 0, 1, 1], 2).unwrap();
        let o = overlap(&s, &s).unwrap();
        assert_eq!(o.get(0, 0), 0.5);
        assert_eq!(o.get(1, 1), 0.5);
        assert_eq!(o.get(0, 1), 0.0);
        let t = Coloring::new(vec![1, 1, 0, 0], 2).unwrap();
        let o = overlap(&s, &t).unwrap();
        assert_eq!(o.get(0, 1), 0.5);
        assert_eq!(o.get(1, 0), 0.5);
        assert_eq!(o.get(0, 0), 0.0);
        // entries sum to 1, row sums equal the class fractions of sigma
        assert!((o.rho.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let sizes = s.class_sizes();
        for i in 0..2 {
            let row: f64 = (0..2).map(|j| o.get(i, j)).sum();
            assert!((row - sizes[i] as f64 / s.n() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn monochrome_examples() {
        let g = Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let s = Coloring::new(vec![0, 0, 1], 2).unwrap();
        assert_eq!(monochrome_edges(&g, &s), 1);
        let k4 = Graph::new(4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let s = Coloring::new(vec![0; 4], 2).unwrap();
        assert_eq!(monochrome_edges(&k4, &s), 6);
    }

    #[test]
    fn generators_reproducible() {
        let a = gen_gnp(100, 0.05, 9).unwrap();
        let b = gen_gnp(100, 0.05, 9).unwrap();
        assert_eq!(a, b);
        let (s1, g1) = gen_planted_p(200, 3, 4.0, 11).unwrap();
        let (s2, g2) = gen_planted_p(200, 3, 4.0, 11).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(g1, g2);
    }

    #[test]
    fn graph_file_roundtrip() {
        let g = gen_gnp(20, 0.3, 4).unwrap();
        let mut buf = Vec::new();
        write_graph(&mut buf, &g, 3).unwrap();
        let (g2, k) = read_graph(&mut std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(g, g2);
        assert_eq!(k, 3);
    }

    #[test]
    fn pair_unrank_covers_all() {
        let n = 37u64;
        let mut seen = std::collections::HashSet::new();
        for idx in 0..(n * (n - 1) / 2) {
            let (u, v) = pair_unrank(n, idx);
            assert!(u < v && (v as u64) < n);
            assert!(seen.insert((u, v)));
        }
    }
}
