//! Warning Propagation on a colored graph, from the planted initialization
//! (every vertex warns its own color; messages only ever shrink) and from
//! the core initialization (only core vertices warn; messages only grow).
//!
//! The core variant keeps the core warnings clamped on: a core vertex emits
//! its sigma-warning every round. For threshold >= 2 this coincides with
//! the plain recursion (a core vertex always has a second core witness per
//! color), and it keeps the monotone fixed-point structure intact at
//! threshold 1, which desk-scale instances need.

use serde::Serialize;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::dtree::{dp_count, DecoratedTree, VertexType};
use crate::error::{Error, Result};
use crate::exact::ln_big;
use crate::graph::{Coloring, Graph};
use crate::sigma_core::core;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WpVariant {
    Planted,
    Core { threshold: u32 },
}

/// Message state at the fixed point, plus the per-round list history.
#[derive(Debug, Clone)]
pub struct WpState {
    /// k-bit mask per directed edge id (edge i gives ids 2i: u->v, 2i+1: v->u).
    pub messages: Vec<u64>,
    pub rounds: u32,
    pub variant: WpVariant,
    /// lists_history[t][v] = L(v,t); entry 0 uses the initial messages,
    /// the last entry is the fixed point.
    pub lists_history: Vec<Vec<u64>>,
}

/// Per-vertex color-set masks L(v) at the WP fixed point.
#[derive(Debug, Clone, Serialize)]
pub struct ColorLists {
    pub lists: Vec<u64>,
}

impl ColorLists {
    pub fn frozen_count(&self) -> usize {
        self.lists.iter().filter(|l| l.count_ones() == 1).count()
    }
}

fn lists_from_messages(g: &Graph, k: usize, messages: &[u64]) -> Vec<u64> {
    let full: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let mut warned = vec![0u64; g.n()];
    for (i, &(u, v)) in g.edges().iter().enumerate() {
        warned[v as usize] |= messages[2 * i];
        warned[u as usize] |= messages[2 * i + 1];
    }
    warned.iter().map(|w| full & !w).collect()
}

/// Run WP to its fixed point. Returns the message state (with the list
/// history) and the fixed-point lists; by monotonicity these equal the
/// union (planted) resp. intersection (core) of the per-round lists.
pub fn wp_run(g: &Graph, sigma: &Coloring, variant: WpVariant) -> Result<(WpState, ColorLists)> {
    if sigma.n() != g.n() {
        return Err(Error::InvalidInput("wp_run: coloring length != n".into()));
    }
    if !sigma.is_proper(g) {
        return Err(Error::InvalidInput("wp_run: sigma is not a proper coloring".into()));
    }
    let n = g.n();
    let k = sigma.k;
    let m = g.m();
    let clamp: Option<Vec<bool>> = match variant {
        WpVariant::Planted => None,
        WpVariant::Core { threshold } => Some(core(g, sigma, threshold)?.members),
    };
    let mut msgs = vec![0u64; 2 * m];
    for (i, &(u, v)) in g.edges().iter().enumerate() {
        let warn_u = clamp.as_ref().is_none_or(|c| c[u as usize]);
        let warn_v = clamp.as_ref().is_none_or(|c| c[v as usize]);
        msgs[2 * i] = if warn_u { 1u64 << sigma.color(u as usize) } else { 0 };
        msgs[2 * i + 1] = if warn_v { 1u64 << sigma.color(v as usize) } else { 0 };
    }
    let mut lists_history = vec![lists_from_messages(g, k, &msgs)];
    let mut next = vec![0u64; 2 * m];
    let round_cap = (2 * m * k + 2) as u32;
    let mut rounds = 0u32;
    loop {
        // per-vertex per-color incoming warning counts
        let mut cnt = vec![0u32; n * k];
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            let mut into_v = msgs[2 * i];
            while into_v != 0 {
                let j = into_v.trailing_zeros() as usize;
                into_v &= into_v - 1;
                cnt[v as usize * k + j] += 1;
            }
            let mut into_u = msgs[2 * i + 1];
            while into_u != 0 {
                let j = into_u.trailing_zeros() as usize;
                into_u &= into_u - 1;
                cnt[u as usize * k + j] += 1;
            }
        }
        // zero-color masks per vertex
        let mut zero_mask = vec![0u64; n];
        let mut zero_cnt = vec![0u32; n];
        for v in 0..n {
            for j in 0..k {
                if cnt[v * k + j] == 0 {
                    zero_mask[v] |= 1u64 << j;
                    zero_cnt[v] += 1;
                }
            }
        }
        let update = |src: usize, incoming_rev: u64, out: &mut u64| {
            // cavity zero set: colors with zero count once the reverse
            // message is discounted
            let mut zm = zero_mask[src];
            let mut zc = zero_cnt[src];
            let mut rev = incoming_rev;
            while rev != 0 {
                let j = rev.trailing_zeros() as usize;
                rev &= rev - 1;
                if cnt[src * k + j] == 1 {
                    zm |= 1u64 << j;
                    zc += 1;
                }
            }
            *out = match zc {
                0 => {
                    if k == 64 {
                        u64::MAX
                    } else {
                        (1u64 << k) - 1
                    }
                }
                1 => zm,
                _ => 0,
            };
        };
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            update(u as usize, msgs[2 * i + 1], &mut next[2 * i]);
            update(v as usize, msgs[2 * i], &mut next[2 * i + 1]);
            if let Some(ref members) = clamp {
                if members[u as usize] {
                    next[2 * i] |= 1u64 << sigma.color(u as usize);
                }
                if members[v as usize] {
                    next[2 * i + 1] |= 1u64 << sigma.color(v as usize);
                }
            }
        }
        // monotonicity: planted messages shrink, core messages grow
        for i in 0..2 * m {
            let ok = match variant {
                WpVariant::Planted => next[i] & !msgs[i] == 0,
                WpVariant::Core { .. } => msgs[i] & !next[i] == 0,
            };
            if !ok {
                return Err(Error::BetheInconsistent(format!(
                    "WP monotonicity violated on directed edge {i} (round {rounds})"
                )));
            }
        }
        rounds += 1;
        if next == msgs {
            break;
        }
        std::mem::swap(&mut msgs, &mut next);
        lists_history.push(lists_from_messages(g, k, &msgs));
        if rounds > round_cap {
            return Err(Error::BetheInconsistent("WP failed to reach a fixed point".into()));
        }
    }
    let lists = ColorLists { lists: lists_history.last().unwrap().clone() };
    Ok((WpState { messages: msgs, rounds, variant, lists_history }, lists))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReduceMode {
    /// Remove exactly the edges whose endpoint lists are disjoint.
    Limit,
    /// Additionally remove edges incident to a vertex with |L| < 2.
    Round,
}

/// Graph left after removing the edges WP has decided, with the vertex
/// decorations (sigma(v), L(v)) and component labels attached.
#[derive(Debug, Clone)]
pub struct ReducedGraph {
    pub graph: Graph,
    pub k: usize,
    pub types: Vec<VertexType>,
    pub component: Vec<u32>,
    pub n_components: usize,
}

pub fn reduced_graph(
    g: &Graph,
    sigma: &Coloring,
    lists: &ColorLists,
    mode: ReduceMode,
) -> Result<ReducedGraph> {
    let n = g.n();
    if lists.lists.len() != n {
        return Err(Error::InvalidInput("reduced_graph: lists length != n".into()));
    }
    let keep = |u: usize, v: usize| -> bool {
        let lu = lists.lists[u];
        let lv = lists.lists[v];
        if lu & lv == 0 {
            return false;
        }
        match mode {
            ReduceMode::Limit => true,
            ReduceMode::Round => lu.count_ones() >= 2 && lv.count_ones() >= 2,
        }
    };
    let edges: Vec<(u32, u32)> = g
        .edges()
        .iter()
        .copied()
        .filter(|&(u, v)| keep(u as usize, v as usize))
        .collect();
    let graph = Graph::new(n, edges)?;
    let mut types = Vec::with_capacity(n);
    for v in 0..n {
        types.push(VertexType::new(sigma.color(v), lists.lists[v])?);
    }
    let (component, n_components) = graph.components();
    Ok(ReducedGraph { graph, k: sigma.k, types, component, n_components })
}

pub const DEFAULT_NONTREE_CAP: usize = 30;

/// ln of the number of legal colorings of the reduced graph: the product
/// over connected components. Tree components use the exact tree DP;
/// small non-tree components are counted by conditioning on a feedback
/// vertex set and running the forest DP per assignment.
pub fn log_legal_colorings_reduced(r: &ReducedGraph, cap: Option<usize>) -> Result<f64> {
    let cap = cap.unwrap_or(DEFAULT_NONTREE_CAP);
    let n = r.graph.n();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); r.n_components];
    for v in 0..n {
        members[r.component[v] as usize].push(v as u32);
    }
    let mut total_ln = 0.0f64;
    for (cid, verts) in members.iter().enumerate() {
        let ln = count_component(r, verts, cid, cap)?;
        if ln == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        total_ln += ln;
    }
    Ok(total_ln)
}

/// ln of the legal-coloring count of one component, -inf when there is none.
fn count_component(r: &ReducedGraph, verts: &[u32], cid: usize, cap: usize) -> Result<f64> {
    let local: std::collections::HashMap<u32, usize> =
        verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let edges: Vec<(usize, usize)> = r
        .graph
        .edges()
        .iter()
        .filter(|&&(u, _)| r.component[u as usize] as usize == cid)
        .map(|&(u, v)| (local[&u], local[&v]))
        .collect();
    let sz = verts.len();
    if edges.len() + 1 == sz {
        // tree component: run the decorated-tree DP
        let tree = component_tree(r, verts, &edges)?;
        return match dp_count(&tree) {
            Ok(dp) => Ok(dp.log_count),
            Err(Error::NoLegalColoring) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        };
    }
    if sz > cap {
        return Err(Error::CapExceeded { what: "non-tree reduced component", got: sz, cap });
    }
    let count = count_with_fvs(r, verts, &edges)?;
    Ok(ln_big(&count))
}

fn component_tree(r: &ReducedGraph, verts: &[u32], edges: &[(usize, usize)]) -> Result<DecoratedTree> {
    let sz = verts.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); sz];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut parent = vec![-2i32; sz];
    parent[0] = -1;
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if parent[w] == -2 {
                parent[w] = v as i32;
                stack.push(w);
            }
        }
    }
    let types: Vec<VertexType> = verts.iter().map(|&v| r.types[v as usize]).collect();
    DecoratedTree::new(r.k, parent, types)
}

/// Count legal colorings of a small non-tree component: pick a feedback
/// vertex set greedily, enumerate its color assignments, and use the
/// forest DP on the rest with the assigned colors excluded at neighbors.
fn count_with_fvs(r: &ReducedGraph, verts: &[u32], edges: &[(usize, usize)]) -> Result<BigUint> {
    let sz = verts.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); sz];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    // greedy FVS: repeatedly delete the max-degree vertex of any cycle-bearing part
    let mut removed = vec![false; sz];
    let mut fvs = Vec::new();
    loop {
        if forest_after_removal(sz, edges, &removed) {
            break;
        }
        let v = (0..sz)
            .filter(|&v| !removed[v])
            .max_by_key(|&v| adj[v].iter().filter(|&&w| !removed[w]).count())
            .unwrap();
        removed[v] = true;
        fvs.push(v);
        if fvs.len() > 10 {
            return Err(Error::CapExceeded { what: "feedback vertex set", got: fvs.len(), cap: 10 });
        }
    }
    let avail: Vec<u64> = verts.iter().map(|&v| r.types[v as usize].avail).collect();
    // enumerate FVS assignments
    let mut assignment = vec![0usize; fvs.len()];
    let mut total = BigUint::zero();
    enumerate_fvs(r, verts, &adj, &avail, &fvs, &removed, 0, &mut assignment, &mut total)?;
    Ok(total)
}

fn forest_after_removal(sz: usize, edges: &[(usize, usize)], removed: &[bool]) -> bool {
    let mut dsu = crate::graph::Dsu::new(sz);
    for &(a, b) in edges {
        if !removed[a] && !removed[b] && !dsu.union(a, b) {
            return false;
        }
    }
    true
}

#[allow(clippy::too_many_arguments)]
fn enumerate_fvs(
    r: &ReducedGraph,
    verts: &[u32],
    adj: &[Vec<usize>],
    avail: &[u64],
    fvs: &[usize],
    removed: &[bool],
    pos: usize,
    assignment: &mut Vec<usize>,
    total: &mut BigUint,
) -> Result<()> {
    if pos == fvs.len() {
        *total += forest_count_conditioned(r, verts, adj, avail, fvs, removed, assignment)?;
        return Ok(());
    }
    let v = fvs[pos];
    let mut rest = avail[v];
    while rest != 0 {
        let c = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        // properness among already-assigned FVS vertices
        let clash = fvs[..pos]
            .iter()
            .enumerate()
            .any(|(i, &w)| assignment[i] == c && adj[v].contains(&w));
        if clash {
            continue;
        }
        assignment[pos] = c;
        enumerate_fvs(r, verts, adj, avail, fvs, removed, pos + 1, assignment, total)?;
    }
    Ok(())
}

fn forest_count_conditioned(
    r: &ReducedGraph,
    verts: &[u32],
    adj: &[Vec<usize>],
    avail: &[u64],
    fvs: &[usize],
    removed: &[bool],
    assignment: &[usize],
) -> Result<BigUint> {
    let sz = verts.len();
    // effective lists for the forest part
    let mut eff = avail.to_vec();
    for (i, &v) in fvs.iter().enumerate() {
        let bit = 1u64 << assignment[i];
        for &w in &adj[v] {
            if !removed[w] {
                eff[w] &= !bit;
            }
        }
    }
    // forest components among the non-removed vertices
    let mut seen = vec![false; sz];
    let mut product = BigUint::one();
    for start in 0..sz {
        if removed[start] || seen[start] {
            continue;
        }
        // collect the tree component
        let mut comp = vec![start];
        seen[start] = true;
        let mut qi = 0;
        while qi < comp.len() {
            let v = comp[qi];
            qi += 1;
            for &w in &adj[v] {
                if !removed[w] && !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
        }
        if eff.iter().enumerate().any(|(v, &m)| comp.contains(&v) && m == 0) {
            return Ok(BigUint::zero());
        }
        // build a decorated tree over the component with effective lists
        let local: std::collections::HashMap<usize, usize> =
            comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut parent = vec![-2i32; comp.len()];
        parent[0] = -1;
        let mut stack = vec![comp[0]];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !removed[w] && local.contains_key(&w) && parent[local[&w]] == -2 && w != comp[0] {
                    parent[local[&w]] = local[&v] as i32;
                    stack.push(w);
                }
            }
        }
        let types: Vec<VertexType> = comp
            .iter()
            .map(|&v| {
                let mask = eff[v];
                let c = mask.trailing_zeros() as usize;
                VertexType::new(c, mask)
            })
            .collect::<Result<_>>()?;
        let tree = DecoratedTree::new(r.k, parent, types)?;
        match dp_count(&tree) {
            Ok(dp) => product *= dp.exact.expect("forest components stay within 64 vertices"),
            Err(Error::NoLegalColoring) => return Ok(BigUint::zero()),
            Err(e) => return Err(e),
        }
    }
    Ok(product)
}
