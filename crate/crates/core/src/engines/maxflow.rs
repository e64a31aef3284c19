//! Boykov–Kolmogorov augmenting-path max-flow with search-tree reuse.
//!
//! Nodes are attached to the two terminals through `add_terminal_weights`;
//! node-to-node arcs are added in sister pairs. After `solve`, nodes still
//! connected to the source tree form the source side of a minimum cut;
//! every other node (sink tree or free) is on the sink side.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::ops::{Add, Sub};

/// Numeric type usable as an arc capacity.
pub trait Capacity: Copy + Debug + PartialOrd + Add<Output = Self> + Sub<Output = Self> {
    const ZERO: Self;

    /// Capacity treated as unbounded for hard constraints.
    fn unbounded() -> Self;

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Capacity for f64 {
    const ZERO: Self = 0.0;

    fn unbounded() -> Self {
        f64::INFINITY
    }
}

impl Capacity for i64 {
    const ZERO: Self = 0;

    fn unbounded() -> Self {
        i64::MAX / 4
    }
}

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;
const INFINITE_DIST: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Source,
    Sink,
}

#[derive(Debug, Clone)]
pub struct MaxFlow<C> {
    first_arc: Vec<u32>,
    // Positive: residual from the source; negative: residual to the sink.
    terminal: Vec<C>,
    parent: Vec<u32>,
    in_sink_tree: Vec<bool>,
    active: Vec<bool>,
    stamp: Vec<u32>,
    dist: Vec<u32>,

    head: Vec<u32>,
    next_arc: Vec<u32>,
    residual: Vec<C>,

    flow: C,
    time: u32,
    queue: VecDeque<u32>,
    orphans: VecDeque<u32>,
}

impl<C: Capacity> MaxFlow<C> {
    pub fn new(nodes: usize) -> Self {
        Self::with_capacity(nodes, 0)
    }

    /// Preallocates room for `edges` node-to-node edges (each one arc pair).
    pub fn with_capacity(nodes: usize, edges: usize) -> Self {
        MaxFlow {
            first_arc: vec![NONE; nodes],
            terminal: vec![C::ZERO; nodes],
            parent: vec![NONE; nodes],
            in_sink_tree: vec![false; nodes],
            active: vec![false; nodes],
            stamp: vec![0; nodes],
            dist: vec![0; nodes],
            head: Vec::with_capacity(2 * edges),
            next_arc: Vec::with_capacity(2 * edges),
            residual: Vec::with_capacity(2 * edges),
            flow: C::ZERO,
            time: 0,
            queue: VecDeque::new(),
            orphans: VecDeque::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.first_arc.len()
    }

    /// Adds `source` capacity from the source terminal and `sink` capacity
    /// to the sink terminal. Repeated calls accumulate.
    pub fn add_terminal_weights(&mut self, node: usize, source: C, sink: C) {
        let (mut source, mut sink) = (source, sink);
        let delta = self.terminal[node];
        if delta > C::ZERO {
            source = source + delta;
        } else {
            sink = sink - delta;
        }
        self.flow = self.flow + source.min(sink);
        self.terminal[node] = source - sink;
    }

    /// Adds arc `from -> to` with capacity `cap` and its sister with
    /// capacity `rev_cap`.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: C, rev_cap: C) {
        assert!(from != to, "self loops are not allowed");
        let a = self.head.len() as u32;
        self.head.push(to as u32);
        self.next_arc.push(self.first_arc[from]);
        self.residual.push(cap);
        self.first_arc[from] = a;

        self.head.push(from as u32);
        self.next_arc.push(self.first_arc[to]);
        self.residual.push(rev_cap);
        self.first_arc[to] = a + 1;
    }

    pub fn flow(&self) -> C {
        self.flow
    }

    /// Side of the minimum cut `node` ends on; valid after `solve`.
    pub fn segment(&self, node: usize) -> Segment {
        if self.parent[node] != NONE && !self.in_sink_tree[node] {
            Segment::Source
        } else {
            Segment::Sink
        }
    }

    /// Runs to completion and returns the maximum flow value.
    pub fn solve(&mut self) -> C {
        for i in 0..self.node_count() {
            let t = self.terminal[i];
            if t > C::ZERO {
                self.attach_to_terminal(i, false);
            } else if t < C::ZERO {
                self.attach_to_terminal(i, true);
            } else {
                self.parent[i] = NONE;
            }
        }

        let mut current: Option<u32> = None;
        loop {
            let i = match current.take() {
                Some(i) if self.parent[i as usize] != NONE => i,
                Some(i) => {
                    self.active[i as usize] = false;
                    match self.next_active() {
                        Some(i) => i,
                        None => break,
                    }
                }
                None => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };

            let found = self.grow(i as usize);
            self.time += 1;
            match found {
                Some(arc) => {
                    current = Some(i);
                    self.augment(arc);
                    while let Some(o) = self.orphans.pop_front() {
                        if self.in_sink_tree[o as usize] {
                            self.adopt_sink_orphan(o as usize);
                        } else {
                            self.adopt_source_orphan(o as usize);
                        }
                    }
                }
                None => self.active[i as usize] = false,
            }
        }
        self.flow
    }

    fn attach_to_terminal(&mut self, i: usize, sink: bool) {
        self.parent[i] = TERMINAL;
        self.in_sink_tree[i] = sink;
        self.stamp[i] = 0;
        self.dist[i] = 1;
        self.set_active(i);
    }

    fn set_active(&mut self, i: usize) {
        if !self.active[i] {
            self.active[i] = true;
            self.queue.push_back(i as u32);
        }
    }

    fn next_active(&mut self) -> Option<u32> {
        while let Some(i) = self.queue.pop_front() {
            if self.parent[i as usize] != NONE {
                return Some(i);
            }
            self.active[i as usize] = false;
        }
        None
    }

    #[inline]
    fn sister(a: u32) -> u32 {
        a ^ 1
    }

    /// Extends the tree containing `i` by one layer. Returns the arc, in
    /// source-to-sink direction, that joins the two trees.
    fn grow(&mut self, i: usize) -> Option<u32> {
        let sink_side = self.in_sink_tree[i];
        let mut a = self.first_arc[i];
        while a != NONE {
            let forward = if sink_side {
                self.residual[Self::sister(a) as usize]
            } else {
                self.residual[a as usize]
            };
            if forward > C::ZERO {
                let j = self.head[a as usize] as usize;
                if self.parent[j] == NONE {
                    self.in_sink_tree[j] = sink_side;
                    self.parent[j] = Self::sister(a);
                    self.stamp[j] = self.stamp[i];
                    self.dist[j] = self.dist[i] + 1;
                    self.set_active(j);
                } else if self.in_sink_tree[j] != sink_side {
                    return Some(if sink_side { Self::sister(a) } else { a });
                } else if self.stamp[j] <= self.stamp[i] && self.dist[j] > self.dist[i] {
                    self.parent[j] = Self::sister(a);
                    self.stamp[j] = self.stamp[i];
                    self.dist[j] = self.dist[i] + 1;
                }
            }
            a = self.next_arc[a as usize];
        }
        None
    }

    fn augment(&mut self, middle: u32) {
        let mut bottleneck = self.residual[middle as usize];

        let mut i = self.head[Self::sister(middle) as usize] as usize;
        loop {
            let p = self.parent[i];
            if p == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.residual[Self::sister(p) as usize]);
            i = self.head[p as usize] as usize;
        }
        bottleneck = bottleneck.min(self.terminal[i]);

        let mut i = self.head[middle as usize] as usize;
        loop {
            let p = self.parent[i];
            if p == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.residual[p as usize]);
            i = self.head[p as usize] as usize;
        }
        bottleneck = bottleneck.min(C::ZERO - self.terminal[i]);

        let m = middle as usize;
        self.residual[Self::sister(middle) as usize] =
            self.residual[Self::sister(middle) as usize] + bottleneck;
        self.residual[m] = self.residual[m] - bottleneck;

        let mut i = self.head[Self::sister(middle) as usize] as usize;
        loop {
            let p = self.parent[i];
            if p == TERMINAL {
                break;
            }
            let (up, down) = (p as usize, Self::sister(p) as usize);
            self.residual[up] = self.residual[up] + bottleneck;
            self.residual[down] = self.residual[down] - bottleneck;
            if self.residual[down] <= C::ZERO {
                self.orphan_front(i);
            }
            i = self.head[up] as usize;
        }
        self.terminal[i] = self.terminal[i] - bottleneck;
        if self.terminal[i] <= C::ZERO {
            self.orphan_front(i);
        }

        let mut i = self.head[m] as usize;
        loop {
            let p = self.parent[i];
            if p == TERMINAL {
                break;
            }
            let (up, down) = (p as usize, Self::sister(p) as usize);
            self.residual[down] = self.residual[down] + bottleneck;
            self.residual[up] = self.residual[up] - bottleneck;
            if self.residual[up] <= C::ZERO {
                self.orphan_front(i);
            }
            i = self.head[up] as usize;
        }
        self.terminal[i] = self.terminal[i] + bottleneck;
        if self.terminal[i] >= C::ZERO {
            self.orphan_front(i);
        }

        self.flow = self.flow + bottleneck;
    }

    fn orphan_front(&mut self, i: usize) {
        self.parent[i] = ORPHAN;
        self.orphans.push_front(i as u32);
    }

    fn orphan_rear(&mut self, i: usize) {
        self.parent[i] = ORPHAN;
        self.orphans.push_back(i as u32);
    }

    /// Length of the valid tree path from `j` to its terminal, or `None` if
    /// the path runs into an orphan. Marks the walked path with the current
    /// time stamp.
    fn origin_distance(&mut self, j: usize) -> Option<u32> {
        let mut d = 0u32;
        let mut k = j;
        loop {
            if self.stamp[k] == self.time {
                d += self.dist[k];
                break;
            }
            let a = self.parent[k];
            d += 1;
            if a == TERMINAL {
                self.stamp[k] = self.time;
                self.dist[k] = 1;
                break;
            }
            if a == ORPHAN {
                return None;
            }
            k = self.head[a as usize] as usize;
        }
        let mut k = j;
        let mut dk = d;
        while self.stamp[k] != self.time {
            self.stamp[k] = self.time;
            self.dist[k] = dk;
            dk -= 1;
            k = self.head[self.parent[k] as usize] as usize;
        }
        Some(d)
    }

    fn adopt_source_orphan(&mut self, i: usize) {
        self.adopt(i, false);
    }

    fn adopt_sink_orphan(&mut self, i: usize) {
        self.adopt(i, true);
    }

    fn adopt(&mut self, i: usize, sink_side: bool) {
        let mut best: Option<(u32, u32)> = None;
        let mut a = self.first_arc[i];
        while a != NONE {
            // Residual capacity along the direction of flow into `i`.
            let inbound = if sink_side {
                self.residual[a as usize]
            } else {
                self.residual[Self::sister(a) as usize]
            };
            let j = self.head[a as usize] as usize;
            if inbound > C::ZERO && self.in_sink_tree[j] == sink_side && self.parent[j] != NONE {
                if let Some(d) = self.origin_distance(j) {
                    if d < best.map_or(INFINITE_DIST, |(_, bd)| bd) {
                        best = Some((a, d));
                    }
                }
            }
            a = self.next_arc[a as usize];
        }

        if let Some((a, d)) = best {
            self.parent[i] = a;
            self.stamp[i] = self.time;
            self.dist[i] = d + 1;
            return;
        }

        let mut a = self.first_arc[i];
        while a != NONE {
            let j = self.head[a as usize] as usize;
            let pj = self.parent[j];
            if self.in_sink_tree[j] == sink_side && pj != NONE {
                let inbound = if sink_side {
                    self.residual[a as usize]
                } else {
                    self.residual[Self::sister(a) as usize]
                };
                if inbound > C::ZERO {
                    self.set_active(j);
                }
                if pj != TERMINAL && pj != ORPHAN && self.head[pj as usize] as usize == i {
                    self.orphan_rear(j);
                }
            }
            a = self.next_arc[a as usize];
        }
        self.parent[i] = NONE;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_chain() {
        let mut g = MaxFlow::<i64>::new(2);
        g.add_terminal_weights(0, 5, 0);
        g.add_terminal_weights(1, 0, 3);
        g.add_edge(0, 1, 4, 0);
        assert_eq!(g.solve(), 3);
        // The only saturated arc is 1 -> t, so both nodes stay on the source side.
        assert_eq!(g.segment(0), Segment::Source);
        assert_eq!(g.segment(1), Segment::Source);
    }

    #[test]
    fn terminal_only_flow_is_counted() {
        let mut g = MaxFlow::<f64>::new(1);
        g.add_terminal_weights(0, 2.0, 7.0);
        g.add_terminal_weights(0, 1.0, 0.0);
        assert_eq!(g.solve(), 3.0);
        assert_eq!(g.segment(0), Segment::Sink);
    }

    #[test]
    fn unbounded_terminals_do_not_overflow() {
        let mut g = MaxFlow::<f64>::new(3);
        g.add_terminal_weights(0, f64::unbounded(), 0.0);
        g.add_terminal_weights(2, 0.0, f64::unbounded());
        g.add_edge(0, 1, 2.0, 2.0);
        g.add_edge(1, 2, 1.5, 1.5);
        assert_eq!(g.solve(), 1.5);
        assert_eq!(g.segment(1), Segment::Source);
    }

    #[test]
    fn classic_network() {
        // CLRS flow network: s=0 .. t=5 mapped onto terminal weights.
        let mut g = MaxFlow::<i64>::new(4);
        g.add_terminal_weights(0, 16, 0);
        g.add_terminal_weights(1, 13, 0);
        g.add_edge(0, 2, 12, 0);
        g.add_edge(1, 0, 4, 0);
        g.add_edge(0, 1, 10, 0);
        g.add_edge(2, 1, 9, 0);
        g.add_edge(1, 3, 14, 0);
        g.add_edge(3, 2, 7, 0);
        g.add_terminal_weights(2, 0, 20);
        g.add_terminal_weights(3, 0, 4);
        assert_eq!(g.solve(), 23);
    }
}
