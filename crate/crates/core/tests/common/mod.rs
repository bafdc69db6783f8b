#![allow(clippy::needless_range_loop)]

//! Helpers shared by the integration and acceptance suites: random planted
//! trees and the brute-force achievable-color oracle for Warning
//! Propagation round lists.

use rand::Rng;

use kcond_core::graph::{Coloring, Graph};

/// Uniform random tree via random attachment, plus a uniform random proper
/// coloring (root uniform, every child uniform among the k-1 colors
/// differing from its parent; exactly uniform on trees).
pub fn random_planted_tree(n: usize, k: usize, seed: u64) -> (Graph, Coloring) {
    let mut rng = kcond_core::rng::stream(seed, kcond_core::rng::tag::TEST, 901);
    let mut edges = Vec::new();
    let mut parent = vec![usize::MAX; n];
    for v in 1..n {
        let p = rng.gen_range(0..v);
        parent[v] = p;
        edges.push((p as u32, v as u32));
    }
    let mut colors = vec![0u8; n];
    colors[0] = rng.gen_range(0..k) as u8;
    for v in 1..n {
        let mut c = rng.gen_range(0..k - 1) as u8;
        if c >= colors[parent[v]] {
            c += 1;
        }
        colors[v] = c;
    }
    (Graph::new(n, edges).unwrap(), Coloring::new(colors, k).unwrap())
}

/// Brute-force achievable-color set of v over proper colorings that fix
/// every vertex at distance > t to sigma.
pub fn achievable_oracle(g: &Graph, sigma: &Coloring, v: usize, t: usize) -> u64 {
    let n = g.n();
    let k = sigma.k;
    let mut dist = vec![usize::MAX; n];
    dist[v] = 0;
    let mut queue = std::collections::VecDeque::from([v]);
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if dist[w as usize] == usize::MAX {
                dist[w as usize] = dist[u] + 1;
                queue.push_back(w as usize);
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|&w| dist[w] <= t).collect();
    let mut colors: Vec<u8> = sigma.colors.clone();
    let mut achieved = 0u64;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        pos: usize,
        free: &[usize],
        g: &Graph,
        k: usize,
        v: usize,
        dist: &[usize],
        t: usize,
        colors: &mut Vec<u8>,
        achieved: &mut u64,
    ) {
        if pos == free.len() {
            *achieved |= 1u64 << colors[v];
            return;
        }
        let w = free[pos];
        for c in 0..k as u8 {
            let clash = g.neighbors(w).iter().any(|&x| {
                let x = x as usize;
                if dist[x] <= t {
                    free[..pos].contains(&x) && colors[x] == c
                } else {
                    colors[x] == c
                }
            });
            if clash {
                continue;
            }
            let saved = colors[w];
            colors[w] = c;
            rec(pos + 1, free, g, k, v, dist, t, colors, achieved);
            colors[w] = saved;
        }
    }
    rec(0, &free, g, k, v, &dist, t, &mut colors, &mut achieved);
    achieved
}
