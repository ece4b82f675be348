//! Monte Carlo evaluation with deterministic, schedule-independent aggregation.
//!
//! Replicate `i` draws its realizations from `derive_seed(base, SPREAD, i)`;
//! copy `c` of that replicate uses `derive_seed(replicate_seed, COPY, c)`.
//! Replicates are processed in fixed-size chunks, each chunk is reduced
//! sequentially, and the chunk summaries are merged in chunk order, so the
//! floating-point result does not depend on how many workers ran.

use rayon::prelude::*;

use crate::graph::{InfluenceGraph, NodeId};
use crate::realization::{PartialRealization, Reacher};
use crate::rng::{derive_seed, edge_coin, stream};

use super::SpreadEstimate;

const CHUNK: u64 = 1024;

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Pairwise combination of two summaries.
    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        let w = other.count as f64 / n as f64;
        self.mean += d * w;
        self.m2 += other.m2 + d * d * self.count as f64 * w;
        self.count = n;
    }

    pub fn estimate(&self) -> SpreadEstimate {
        let stderr = if self.count < 2 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.count - 1) as f64 / self.count as f64).sqrt()
        };
        SpreadEstimate {
            value: self.mean,
            exact: false,
            stderr,
            replicates: self.count,
        }
    }
}

/// Per-worker scratch handed to replicate closures.
pub struct Scratch {
    pub reacher: Reacher,
    pub copy_seeds: Vec<u64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            reacher: Reacher::new(n),
            copy_seeds: Vec::new(),
        }
    }

    /// Prepares copy seeds `0..t` for replicate `index` under `base`.
    pub fn load(&mut self, base: u64, index: u64, t: usize) {
        let rep = derive_seed(base, stream::SPREAD, index);
        self.copy_seeds.clear();
        self.copy_seeds
            .extend((0..t as u64).map(|c| derive_seed(rep, stream::COPY, c)));
        self.reacher.reset();
    }
}

/// Runs `replicates` replicates, each writing `width` outputs, and returns one
/// summary per output.
pub fn run<F>(n: usize, replicates: u64, width: usize, f: F) -> Vec<Moments>
where
    F: Fn(u64, &mut Scratch, &mut [f64]) + Sync,
{
    let chunks = replicates.div_ceil(CHUNK);
    let parts: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map_init(
            || (Scratch::new(n), vec![0.0; width]),
            |(scratch, out), c| {
                let mut acc = vec![Moments::default(); width];
                let end = ((c + 1) * CHUNK).min(replicates);
                for i in c * CHUNK..end {
                    out.fill(0.0);
                    f(i, scratch, out);
                    for (a, &x) in acc.iter_mut().zip(out.iter()) {
                        a.push(x);
                    }
                }
                acc
            },
        )
        .collect();
    let mut total = vec![Moments::default(); width];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
}

/// Liveness of edge `e` in a replicate: copy 1 (or the recorded feedback on
/// the domain of `psi`) united with copies `2..=copies`.
#[inline]
pub fn live_in_copies(
    graph: &InfluenceGraph,
    e: usize,
    copies: usize,
    psi: Option<&PartialRealization>,
    copy_seeds: &[u64],
) -> bool {
    let p = graph.edge(e).p;
    if let Some(state) = psi.and_then(|ps| ps.edge_state(graph, e)) {
        if state {
            return true;
        }
    } else if p >= 1.0 || edge_coin(copy_seeds[0], e) < p {
        return true;
    }
    if p <= 0.0 {
        return false;
    }
    (1..copies).any(|c| edge_coin(copy_seeds[c], e) < p)
}

/// A replicate-level aggregate query: nodes flagged in `multi` use `t`
/// copies, all others use copy 1, with copy 1 overridden by `psi`.
pub struct CopyPlan<'a> {
    pub graph: &'a InfluenceGraph,
    pub multi: Vec<bool>,
    pub t: usize,
    pub psi: Option<&'a PartialRealization>,
}

impl<'a> CopyPlan<'a> {
    pub fn new(
        graph: &'a InfluenceGraph,
        set: &[NodeId],
        t: usize,
        psi: Option<&'a PartialRealization>,
    ) -> Self {
        let mut multi = vec![false; graph.node_count()];
        for &s in set {
            multi[s.index()] = true;
        }
        CopyPlan {
            graph,
            multi,
            t,
            psi,
        }
    }

    /// `extra` additionally takes `t` copies (the candidate of a marginal).
    #[inline]
    pub fn live(&self, e: usize, extra: Option<usize>, copy_seeds: &[u64]) -> bool {
        let src = self.graph.edge(e).src.index();
        let copies = if self.multi[src] || extra == Some(src) {
            self.t
        } else {
            1
        };
        live_in_copies(self.graph, e, copies, self.psi, copy_seeds)
    }
}
