//! Decorated trees: exact counting of legal colorings, root marginals, the
//! message-merge operators, and the Bethe free entropy.
//!
//! A legal coloring assigns every vertex a color from its available set so
//! that adjacent vertices differ. `dp_count` is exact (big-integer counts
//! up to 64 vertices, log-space beyond); `bethe_free_entropy` evaluates the
//! per-vertex Bethe terms from subtree marginals and must reproduce
//! `dp_count`'s ln Z on every tree.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ln_big;

/// Distinguished color plus available-color set (bit i = color i).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexType {
    pub color: u8,
    pub avail: u64,
}

impl VertexType {
    pub fn new(color: usize, avail: u64) -> Result<VertexType> {
        if avail == 0 {
            return Err(Error::InvalidInput("vertex type with empty color set".into()));
        }
        if avail >> color & 1 == 0 {
            return Err(Error::InvalidInput(format!(
                "distinguished color {color} not in available set {avail:#b}"
            )));
        }
        Ok(VertexType { color: color as u8, avail })
    }

    pub fn list_size(&self) -> u32 {
        self.avail.count_ones()
    }
}

/// Rooted tree with a `VertexType` per vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoratedTree {
    pub k: usize,
    root: u32,
    parent: Vec<i32>,
    children: Vec<Vec<u32>>,
    types: Vec<VertexType>,
}

impl DecoratedTree {
    /// Build from a parent array (-1 marks the root). Checks shape and type
    /// sanity; GW edge admissibility is a separate, stricter predicate.
    pub fn new(k: usize, parent: Vec<i32>, types: Vec<VertexType>) -> Result<DecoratedTree> {
        let n = parent.len();
        if n == 0 || types.len() != n {
            return Err(Error::InvalidInput("malformed tree: empty or length mismatch".into()));
        }
        let full: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
        for t in &types {
            if t.avail & !full != 0 {
                return Err(Error::InvalidInput("type uses colors >= k".into()));
            }
        }
        let mut roots = 0;
        let mut root = 0u32;
        let mut children = vec![Vec::new(); n];
        for (v, &p) in parent.iter().enumerate() {
            if p < 0 {
                roots += 1;
                root = v as u32;
            } else {
                let p = p as usize;
                if p >= n || p == v {
                    return Err(Error::InvalidInput(format!("bad parent {p} of {v}")));
                }
                children[p].push(v as u32);
            }
        }
        if roots != 1 {
            return Err(Error::InvalidInput(format!("tree must have exactly one root, got {roots}")));
        }
        // connectivity: every vertex must reach the root
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        seen[root as usize] = true;
        let mut cnt = 0;
        while let Some(v) = stack.pop() {
            cnt += 1;
            for &c in &children[v as usize] {
                if seen[c as usize] {
                    return Err(Error::InvalidInput("parent array contains a cycle".into()));
                }
                seen[c as usize] = true;
                stack.push(c);
            }
        }
        if cnt != n {
            return Err(Error::InvalidInput("tree not connected".into()));
        }
        Ok(DecoratedTree { k, root, parent, children, types })
    }

    pub fn single(k: usize, t: VertexType) -> Result<DecoratedTree> {
        DecoratedTree::new(k, vec![-1], vec![t])
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root as usize
    }

    pub fn vertex_type(&self, v: usize) -> VertexType {
        self.types[v]
    }

    pub fn types(&self) -> &[VertexType] {
        &self.types
    }

    pub fn children(&self, v: usize) -> &[u32] {
        &self.children[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p >= 0).then_some(p as usize)
    }

    pub fn neighbors(&self, v: usize) -> Vec<u32> {
        let mut out = self.children[v].clone();
        if let Some(p) = self.parent(v) {
            out.push(p as u32);
        }
        out
    }

    /// GW edge admissibility: along every edge the lists intersect and the
    /// child has a list of size > 1; with the parent-color restriction the
    /// child's distinguished color also differs from the parent's.
    pub fn is_gw_admissible(&self, require_distinct_parent_color: bool) -> bool {
        (0..self.n()).all(|v| {
            let tv = self.types[v];
            self.children[v].iter().all(|&c| {
                let tc = self.types[c as usize];
                tc.avail & tv.avail != 0
                    && tc.list_size() > 1
                    && (!require_distinct_parent_color || tc.color != tv.color)
            })
        })
    }
}

/// A probability vector over the k colors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint(pub Vec<f64>);

impl SimplexPoint {
    pub fn uniform(k: usize) -> SimplexPoint {
        SimplexPoint(vec![1.0 / k as f64; k])
    }

    pub fn dirac(k: usize, h: usize) -> SimplexPoint {
        let mut v = vec![0.0; k];
        v[h] = 1.0;
        SimplexPoint(v)
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.0.iter().all(|&x| x >= 0.0) && (self.0.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

/// The merge operator B[mu_1..mu_gamma](i) = prod_j (1-mu_j(i)) normalized
/// over colors; uniform when the normalizer vanishes or the input is empty.
pub fn bp_merge(mus: &[SimplexPoint], k: usize) -> SimplexPoint {
    let full = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    bp_merge_restricted(full, k, mus)
}

/// Restricted merge B_ell: supported on `ell`, normalized over `ell`;
/// uniform on `ell` when degenerate or when the input is empty.
pub fn bp_merge_restricted(ell: u64, k: usize, mus: &[SimplexPoint]) -> SimplexPoint {
    debug_assert!(ell != 0);
    let mut out = vec![0.0; k];
    let mut total = 0.0;
    for h in 0..k {
        if ell >> h & 1 == 0 {
            continue;
        }
        let p: f64 = mus.iter().map(|m| 1.0 - m.0[h]).product();
        out[h] = p;
        total += p;
    }
    if total <= 0.0 {
        let sz = ell.count_ones() as f64;
        for (h, slot) in out.iter_mut().enumerate() {
            *slot = if ell >> h & 1 == 1 { 1.0 / sz } else { 0.0 };
        }
        return SimplexPoint(out);
    }
    for slot in out.iter_mut() {
        *slot /= total;
    }
    SimplexPoint(out)
}

/// Result of the exact tree DP.
#[derive(Debug, Clone)]
pub struct DpCount {
    /// ln of the number of legal colorings.
    pub log_count: f64,
    /// Exact count when the tree has at most 64 vertices.
    pub exact: Option<BigUint>,
    /// Distribution of the root color under a uniform legal coloring.
    pub root_marginal: SimplexPoint,
}

const EXACT_DP_MAX_VERTICES: usize = 64;

/// Exact ln Z and root marginal via N(v,c) = prod_children sum_{c' in
/// ell_u, c' != c} N(u,c'). Errors with `NoLegalColoring` when Z = 0.
pub fn dp_count(tree: &DecoratedTree) -> Result<DpCount> {
    if tree.n() <= EXACT_DP_MAX_VERTICES {
        let table = dp_big(tree, tree.root());
        let z: BigUint = table.iter().sum();
        if z.is_zero() {
            return Err(Error::NoLegalColoring);
        }
        let zf = z.to_f64().unwrap_or(f64::INFINITY);
        let marginal: Vec<f64> = table
            .iter()
            .map(|c| c.to_f64().unwrap_or(0.0) / zf)
            .collect();
        Ok(DpCount { log_count: ln_big(&z), exact: Some(z), root_marginal: SimplexPoint(marginal) })
    } else {
        let table = dp_log(tree, tree.root());
        let lz = log_sum_exp(&table);
        if lz == f64::NEG_INFINITY {
            return Err(Error::NoLegalColoring);
        }
        let marginal: Vec<f64> = table.iter().map(|&t| (t - lz).exp()).collect();
        Ok(DpCount { log_count: lz, exact: None, root_marginal: SimplexPoint(marginal) })
    }
}

/// Big-integer DP at the root: per-color count vector N(root, .),
/// zero outside avail.
fn dp_big(tree: &DecoratedTree, v: usize) -> Vec<BigUint> {
    let k = tree.k;
    let tv = tree.vertex_type(v);
    let mut table = vec![BigUint::zero(); k];
    for c in 0..k {
        if tv.avail >> c & 1 == 1 {
            table[c] = BigUint::one();
        }
    }
    for &u in tree.neighbors(v).iter() {
        let u = u as usize;
        let sub = dp_big_dir(tree, u, v);
        for c in 0..k {
            if tv.avail >> c & 1 == 0 {
                continue;
            }
            let mut s = BigUint::zero();
            for (cp, cnt) in sub.iter().enumerate() {
                if cp != c {
                    s += cnt;
                }
            }
            table[c] *= s;
        }
    }
    table
}

/// DP on the component of `u` in tree minus `from`, rooted at `u`.
fn dp_big_dir(tree: &DecoratedTree, u: usize, from: usize) -> Vec<BigUint> {
    let k = tree.k;
    let tu = tree.vertex_type(u);
    let mut table = vec![BigUint::zero(); k];
    for c in 0..k {
        if tu.avail >> c & 1 == 1 {
            table[c] = BigUint::one();
        }
    }
    for &w in tree.neighbors(u).iter() {
        let w = w as usize;
        if w == from {
            continue;
        }
        let sub = dp_big_dir(tree, w, u);
        for c in 0..k {
            if tu.avail >> c & 1 == 0 {
                continue;
            }
            let mut s = BigUint::zero();
            for (cp, cnt) in sub.iter().enumerate() {
                if cp != c {
                    s += cnt;
                }
            }
            table[c] *= s;
        }
    }
    table
}

fn dp_log(tree: &DecoratedTree, v: usize) -> Vec<f64> {
    let k = tree.k;
    let tv = tree.vertex_type(v);
    let mut table =
        (0..k).map(|c| if tv.avail >> c & 1 == 1 { 0.0 } else { f64::NEG_INFINITY }).collect::<Vec<_>>();
    for &u in tree.neighbors(v).iter() {
        let u = u as usize;
        let sub = dp_log_dir(tree, u, v);
        for (c, slot) in table.iter_mut().enumerate() {
            if tv.avail >> c & 1 == 0 {
                continue;
            }
            let terms: Vec<f64> =
                sub.iter().enumerate().filter(|&(cp, _)| cp != c).map(|(_, &t)| t).collect();
            *slot += log_sum_exp(&terms);
        }
    }
    table
}

fn dp_log_dir(tree: &DecoratedTree, u: usize, from: usize) -> Vec<f64> {
    let k = tree.k;
    let tu = tree.vertex_type(u);
    let mut table =
        (0..k).map(|c| if tu.avail >> c & 1 == 1 { 0.0 } else { f64::NEG_INFINITY }).collect::<Vec<_>>();
    for &w in tree.neighbors(u).iter() {
        let w = w as usize;
        if w == from {
            continue;
        }
        let sub = dp_log_dir(tree, w, u);
        for (c, slot) in table.iter_mut().enumerate() {
            if tu.avail >> c & 1 == 0 {
                continue;
            }
            let terms: Vec<f64> =
                sub.iter().enumerate().filter(|&(cp, _)| cp != c).map(|(_, &t)| t).collect();
            *slot += log_sum_exp(&terms);
        }
    }
    table
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let mx = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + terms.iter().map(|&t| (t - mx).exp()).sum::<f64>().ln()
}

/// Marginal of the component of `u` in tree minus `banned`, rooted at `u`.
pub fn subtree_marginal(tree: &DecoratedTree, u: usize, banned: usize) -> Result<SimplexPoint> {
    let table = dp_log_dir(tree, u, banned);
    let lz = log_sum_exp(&table);
    if lz == f64::NEG_INFINITY {
        return Err(Error::NoLegalColoring);
    }
    Ok(SimplexPoint(table.iter().map(|&t| (t - lz).exp()).collect()))
}

/// Per-vertex Bethe term F_ell(mu_1..mu_gamma) = F^v - F^e/2 with
/// F^v = ln sum_{h in ell} prod_j (1-mu_j(h)) and
/// F^e = sum_j ln[1 - sum_{h in ell} mu_j(h) B_ell[mu_{-j}](h)].
pub fn bethe_vertex_term(ell: u64, k: usize, mus: &[SimplexPoint]) -> Result<f64> {
    if mus.is_empty() {
        return Ok((ell.count_ones() as f64).ln());
    }
    let mut fv = 0.0f64;
    for h in 0..k {
        if ell >> h & 1 == 1 {
            fv += mus.iter().map(|m| 1.0 - m.0[h]).product::<f64>();
        }
    }
    if fv <= 0.0 {
        return Err(Error::BetheInconsistent(
            "F^v argument vanished: no color of ell is jointly available".into(),
        ));
    }
    let fv = fv.ln();
    let mut fe = 0.0f64;
    for j in 0..mus.len() {
        let rest: Vec<SimplexPoint> = mus
            .iter()
            .enumerate()
            .filter(|&(idx, _)| idx != j)
            .map(|(_, m)| m.clone())
            .collect();
        let cavity = bp_merge_restricted(ell, k, &rest);
        let mut inner = 0.0;
        for h in 0..k {
            if ell >> h & 1 == 1 {
                inner += mus[j].0[h] * cavity.0[h];
            }
        }
        let arg = 1.0 - inner;
        if arg <= 0.0 {
            return Err(Error::BetheInconsistent(format!(
                "F^e argument non-positive ({arg}) at input {j}"
            )));
        }
        fe += arg.ln();
    }
    Ok(fv - 0.5 * fe)
}

/// Bethe free entropy: sum over vertices of the per-vertex term built from
/// the marginals of the components of T - v. Equals ln Z exactly on trees.
pub fn bethe_free_entropy(tree: &DecoratedTree) -> Result<f64> {
    let k = tree.k;
    let mut total = 0.0;
    for v in 0..tree.n() {
        let tv = tree.vertex_type(v);
        let nbrs = tree.neighbors(v);
        let mut mus = Vec::with_capacity(nbrs.len());
        for &u in &nbrs {
            mus.push(subtree_marginal(tree, u as usize, v)?);
        }
        total += bethe_vertex_term(tv.avail, k, &mus)?;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Text format: line 1 "n k root"; then n lines "parent color ell-mask".
// ---------------------------------------------------------------------------

pub fn write_tree<W: Write>(w: &mut W, t: &DecoratedTree) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", t.n(), t.k, t.root());
    for v in 0..t.n() {
        let ty = t.vertex_type(v);
        let _ = writeln!(s, "{} {} {}", t.parent[v], ty.color, ty.avail);
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_tree<R: BufRead>(r: &mut R) -> Result<DecoratedTree> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty tree file".into()))??;
    let mut it = header.split_whitespace();
    let n: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("tree header: bad n".into()))?;
    let k: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("tree header: bad k".into()))?;
    let root: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("tree header: bad root".into()))?;
    let mut parent = Vec::with_capacity(n);
    let mut types = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.next().ok_or_else(|| Error::Parse("tree file truncated".into()))??;
        let mut it = line.split_whitespace();
        let p: i32 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("tree line: bad parent".into()))?;
        let color: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("tree line: bad color".into()))?;
        let avail: u64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("tree line: bad mask".into()))?;
        parent.push(p);
        types.push(VertexType::new(color, avail)?);
    }
    let t = DecoratedTree::new(k, parent, types)?;
    if t.root() != root {
        return Err(Error::Parse("tree header root does not match parent array".into()));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Enumeration oracle: count legal colorings and root-color histogram
    /// by brute force.
    pub(crate) fn enumerate_legal(tree: &DecoratedTree) -> (u64, Vec<u64>) {
        let n = tree.n();
        let k = tree.k;
        assert!(n <= 14);
        let mut count = 0u64;
        let mut hist = vec![0u64; k];
        let mut colors = vec![usize::MAX; n];
        // depth-first over vertices in root-first order
        let mut order = vec![tree.root()];
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            for &c in tree.children(v) {
                order.push(c as usize);
            }
            i += 1;
        }
        fn rec(
            tree: &DecoratedTree,
            order: &[usize],
            pos: usize,
            colors: &mut Vec<usize>,
            count: &mut u64,
            hist: &mut Vec<u64>,
        ) {
            if pos == order.len() {
                *count += 1;
                hist[colors[tree.root()]] += 1;
                return;
            }
            let v = order[pos];
            let avail = tree.vertex_type(v).avail;
            for c in 0..tree.k {
                if avail >> c & 1 == 0 {
                    continue;
                }
                if let Some(p) = tree.parent(v) {
                    if colors[p] == c {
                        continue;
                    }
                }
                colors[v] = c;
                rec(tree, order, pos + 1, colors, count, hist);
            }
            colors[v] = usize::MAX;
        }
        rec(tree, &order, 0, &mut colors, &mut count, &mut hist);
        (count, hist)
    }

    pub(crate) fn random_decorated_tree(n: usize, k: usize, seed: u64) -> DecoratedTree {
        let mut rng = crate::rng::stream(seed, crate::rng::tag::TEST, 5150);
        let mut parent = vec![-1i32];
        for v in 1..n {
            parent.push(rng.gen_range(0..v) as i32);
        }
        let full: u64 = (1u64 << k) - 1;
        let types = (0..n)
            .map(|_| {
                let mut mask = rng.gen::<u64>() & full;
                if mask == 0 {
                    mask = 1 << rng.gen_range(0..k);
                }
                let set: Vec<usize> = (0..k).filter(|&c| mask >> c & 1 == 1).collect();
                let color = set[rng.gen_range(0..set.len())];
                VertexType::new(color, mask).unwrap()
            })
            .collect();
        DecoratedTree::new(k, parent, types).unwrap()
    }

    #[test]
    fn single_vertex_cases() {
        let t = DecoratedTree::single(3, VertexType::new(1, 0b010).unwrap()).unwrap();
        let r = dp_count(&t).unwrap();
        assert_eq!(r.log_count, 0.0);
        assert_eq!(r.root_marginal.0, vec![0.0, 1.0, 0.0]);

        let t = DecoratedTree::single(4, VertexType::new(0, 0b1011).unwrap()).unwrap();
        let r = dp_count(&t).unwrap();
        assert!((r.log_count - 3.0f64.ln()).abs() < 1e-14);
        for h in [0usize, 1, 3] {
            assert!((r.root_marginal.0[h] - 1.0 / 3.0).abs() < 1e-14);
        }
        assert_eq!(r.root_marginal.0[2], 0.0);
    }

    #[test]
    fn two_vertex_full_lists() {
        for k in [3usize, 5, 8] {
            let full = (1u64 << k) - 1;
            let t = DecoratedTree::new(
                k,
                vec![-1, 0],
                vec![VertexType::new(0, full).unwrap(), VertexType::new(1, full).unwrap()],
            )
            .unwrap();
            let r = dp_count(&t).unwrap();
            let expect = (k * (k - 1)) as f64;
            assert!((r.log_count - expect.ln()).abs() < 1e-12);
            for h in 0..k {
                assert!((r.root_marginal.0[h] - 1.0 / k as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dp_matches_enumeration() {
        let mut nonzero = 0;
        for seed in 0..60u64 {
            let n = 2 + (seed % 11) as usize;
            let k = 2 + (seed % 4) as usize;
            let t = random_decorated_tree(n, k, seed);
            let (cnt, hist) = enumerate_legal(&t);
            match dp_count(&t) {
                Ok(r) => {
                    assert_eq!(r.exact.as_ref().unwrap().to_u64().unwrap(), cnt, "seed {seed}");
                    for h in 0..k {
                        let want = hist[h] as f64 / cnt as f64;
                        assert!((r.root_marginal.0[h] - want).abs() < 1e-12);
                    }
                    nonzero += 1;
                }
                Err(Error::NoLegalColoring) => assert_eq!(cnt, 0, "seed {seed}"),
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        assert!(nonzero > 20);
    }

    #[test]
    fn log_space_path_matches_big_path() {
        // force the log-space branch with a 70-vertex path of full lists:
        // Z = k (k-1)^(n-1)
        let k = 4;
        let n = 70;
        let full = (1u64 << k) - 1;
        let parent: Vec<i32> = (0..n).map(|v| v as i32 - 1).collect();
        let types: Vec<VertexType> =
            (0..n).map(|v| VertexType::new(v % k, full).unwrap()).collect();
        let t = DecoratedTree::new(k, parent, types).unwrap();
        let r = dp_count(&t).unwrap();
        assert!(r.exact.is_none());
        let expect = (k as f64).ln() + (n as f64 - 1.0) * ((k - 1) as f64).ln();
        assert!((r.log_count - expect).abs() < 1e-9);
    }

    #[test]
    fn merge_examples() {
        let out = bp_merge(&[SimplexPoint::dirac(2, 0)], 2);
        assert_eq!(out.0, vec![0.0, 1.0]);
        let out = bp_merge(&[SimplexPoint::dirac(2, 0), SimplexPoint::dirac(2, 1)], 2);
        assert_eq!(out.0, vec![0.5, 0.5]); // degenerate branch
        let out = bp_merge(&[], 4);
        assert_eq!(out.0, vec![0.25; 4]);
    }

    #[test]
    fn merge_restricted_examples() {
        let out = bp_merge_restricted(0b011, 3, &[SimplexPoint::dirac(3, 1)]);
        assert_eq!(out.0, vec![1.0, 0.0, 0.0]);
        // ell = [k] coincides with bp_merge
        let mus = vec![SimplexPoint(vec![0.2, 0.5, 0.3]), SimplexPoint(vec![0.6, 0.1, 0.3])];
        let a = bp_merge_restricted(0b111, 3, &mus);
        let b = bp_merge(&mus, 3);
        assert_eq!(a.0, b.0);
        let out = bp_merge_restricted(0b001, 3, &mus);
        assert_eq!(out.0, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn root_marginal_is_restricted_merge_of_children() {
        for seed in 100..130u64 {
            let n = 2 + (seed % 9) as usize;
            let k = 3 + (seed % 3) as usize;
            let t = random_decorated_tree(n, k, seed);
            let root = t.root();
            let r = match dp_count(&t) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let mus: Vec<SimplexPoint> = t
                .children(root)
                .iter()
                .map(|&u| subtree_marginal(&t, u as usize, root).unwrap())
                .collect();
            let merged = bp_merge_restricted(t.vertex_type(root).avail, k, &mus);
            for h in 0..k {
                assert!(
                    (merged.0[h] - r.root_marginal.0[h]).abs() < 1e-10,
                    "seed {seed} color {h}: {} vs {}",
                    merged.0[h],
                    r.root_marginal.0[h]
                );
            }
        }
    }

    #[test]
    fn bethe_single_and_pair() {
        let t = DecoratedTree::single(5, VertexType::new(2, 0b10110).unwrap()).unwrap();
        let f = bethe_free_entropy(&t).unwrap();
        assert!((f - 3.0f64.ln()).abs() < 1e-14);

        for k in [3usize, 6] {
            let full = (1u64 << k) - 1;
            let t = DecoratedTree::new(
                k,
                vec![-1, 0],
                vec![VertexType::new(0, full).unwrap(), VertexType::new(1, full).unwrap()],
            )
            .unwrap();
            let f = bethe_free_entropy(&t).unwrap();
            let expect = ((k * (k - 1)) as f64).ln();
            assert!((f - expect).abs() < 1e-12, "k {k}: {f} vs {expect}");
        }
    }

    #[test]
    fn bethe_equals_dp_on_random_trees() {
        let mut checked = 0;
        for seed in 0..80u64 {
            let n = 1 + (seed % 12) as usize;
            let k = 3 + (seed % 3) as usize;
            let t = random_decorated_tree(n, k, seed * 31 + 7);
            let dp = match dp_count(&t) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let f = match bethe_free_entropy(&t) {
                Ok(f) => f,
                Err(Error::BetheInconsistent(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            let tol = 1e-8 * dp.log_count.abs().max(1.0);
            assert!((f - dp.log_count).abs() <= tol, "seed {seed}: bethe {f} vs dp {}", dp.log_count);
            checked += 1;
        }
        assert!(checked > 30);
    }

    #[test]
    fn tree_file_roundtrip() {
        let t = random_decorated_tree(9, 4, 123);
        let mut buf = Vec::new();
        write_tree(&mut buf, &t).unwrap();
        let t2 = read_tree(&mut std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(t, t2);
    }

    proptest! {
        #[test]
        fn merge_output_is_simplex(entries in proptest::collection::vec(
            proptest::collection::vec(0.0f64..1.0, 4), 0..6)) {
            // normalize inputs into simplex points
            let mus: Vec<SimplexPoint> = entries.iter().map(|v| {
                let s: f64 = v.iter().sum();
                if s == 0.0 { SimplexPoint::uniform(4) } else {
                    SimplexPoint(v.iter().map(|x| x/s).collect())
                }
            }).collect();
            let out = bp_merge(&mus, 4);
            prop_assert!(out.is_valid(1e-9));
        }

        #[test]
        fn merge_permutation_invariant(perm_seed in 0u64..1000) {
            let mus = vec![
                SimplexPoint(vec![0.7, 0.2, 0.1]),
                SimplexPoint(vec![0.1, 0.8, 0.1]),
                SimplexPoint(vec![0.3, 0.3, 0.4]),
            ];
            let mut shuffled = mus.clone();
            // cheap permutation from the seed
            shuffled.rotate_left((perm_seed % 3) as usize);
            if perm_seed % 2 == 0 { shuffled.swap(0, 1); }
            let a = bp_merge(&mus, 3);
            let b = bp_merge(&shuffled, 3);
            for h in 0..3 {
                prop_assert!((a.0[h] - b.0[h]).abs() < 1e-12);
            }
        }
    }
}
