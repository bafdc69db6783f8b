//! The sigma-core of a colored graph: the largest vertex set in which every
//! vertex keeps at least `threshold` neighbors of every color other than
//! its own. Computed by peeling; the result is order-independent because
//! the good sets are closed under union.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Coloring, Graph};

#[derive(Debug, Clone, Serialize)]
pub struct CoreResult {
    pub members: Vec<bool>,
    pub threshold: u32,
    /// Vertices in the order they were peeled away (debugging aid).
    pub peel_order: Vec<u32>,
}

impl CoreResult {
    pub fn size(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }
    pub fn member_ids(&self) -> Vec<u32> {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(v, _)| v as u32)
            .collect()
    }
}

/// Threshold used for the asymptotic freezing statements; desk-scale
/// instances need 1-3.
pub const DEFAULT_CORE_THRESHOLD: u32 = 100;

pub fn core(g: &Graph, sigma: &Coloring, threshold: u32) -> Result<CoreResult> {
    if sigma.n() != g.n() {
        return Err(Error::InvalidInput("core: coloring length != n".into()));
    }
    if !sigma.is_proper(g) {
        return Err(Error::InvalidInput("core: sigma is not a proper coloring".into()));
    }
    if threshold < 1 {
        return Err(Error::InvalidInput("core: threshold must be >= 1".into()));
    }
    let n = g.n();
    let k = sigma.k;
    // counts[v*k + j] = #neighbors of v with color j still inside
    let mut counts = vec![0u32; n * k];
    for v in 0..n {
        for &w in g.neighbors(v) {
            counts[v * k + sigma.color(w as usize)] += 1;
        }
    }
    let mut inside = vec![true; n];
    let mut queued = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    let violates = |counts: &[u32], v: usize| -> bool {
        let cv = sigma.color(v);
        (0..k).any(|j| j != cv && counts[v * k + j] < threshold)
    };
    for v in 0..n {
        if violates(&counts, v) {
            queued[v] = true;
            queue.push_back(v as u32);
        }
    }
    let mut peel_order = Vec::new();
    while let Some(v) = queue.pop_front() {
        let v = v as usize;
        if !inside[v] {
            continue;
        }
        inside[v] = false;
        peel_order.push(v as u32);
        let cv = sigma.color(v);
        for &w in g.neighbors(v) {
            let w = w as usize;
            if inside[w] {
                counts[w * k + cv] -= 1;
                if !queued[w] && violates(&counts, w) {
                    queued[w] = true;
                    queue.push_back(w as u32);
                }
            }
        }
    }
    Ok(CoreResult { members: inside, threshold, peel_order })
}
