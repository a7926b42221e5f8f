//! Stable genus-decorated dual graphs: boundary strata of the compactified
//! moduli space of closed genus-g surfaces, and separating multicurve types.

use crate::error::{Error, Result};
use rug::ops::Pow;
use rug::{Integer, Rational};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

/// Connected multigraph with genus-decorated vertices. `edges` holds
/// unordered vertex pairs (a ≤ b, loops allowed), kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualGraph {
    genera: Vec<u32>,
    edges: Vec<(usize, usize)>,
}

impl DualGraph {
    pub fn new(genera: Vec<u32>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let q = genera.len();
        if q == 0 {
            return Err(Error::Domain("dual graph needs a vertex".into()));
        }
        let mut edges: Vec<(usize, usize)> = edges
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        if edges.iter().any(|&(_, b)| b >= q) {
            return Err(Error::Domain("edge endpoint out of range".into()));
        }
        edges.sort_unstable();
        let g = DualGraph { genera, edges };
        if !g.is_connected() {
            return Err(Error::Domain("dual graph is not connected".into()));
        }
        if let Some(i) = (0..q).find(|&i| 2 * g.genera[i] as i64 - 2 + g.valence(i) as i64 <= 0) {
            return Err(Error::Domain(format!("vertex {i} is unstable")));
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.genera.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn genera(&self) -> &[u32] {
        &self.genera
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn valence(&self, v: usize) -> u32 {
        self.edges.iter().map(|&(a, b)| (a == v) as u32 + (b == v) as u32).sum()
    }

    /// (genus, valence) per vertex.
    pub fn vertices(&self) -> Vec<(u32, u32)> {
        (0..self.vertex_count())
            .map(|v| (self.genera[v], self.valence(v)))
            .collect()
    }

    /// Σ g_i + (k - q + 1).
    pub fn ambient_genus(&self) -> u32 {
        let s: u32 = self.genera.iter().sum();
        (s as i64 + self.edge_count() as i64 - self.vertex_count() as i64 + 1) as u32
    }

    /// Vertices that are neither (0,3) nor (1,1).
    pub fn q_prime(&self) -> usize {
        self.vertices()
            .iter()
            .filter(|&&(g, n)| !matches!((g, n), (0, 3) | (1, 1)))
            .count()
    }

    pub fn is_connected(&self) -> bool {
        let q = self.vertex_count();
        let mut seen = vec![false; q];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(a, b) in &self.edges {
                for (x, y) in [(a, b), (b, a)] {
                    if x == v && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn relabel(&self, perm: &[usize]) -> DualGraph {
        // perm[old] = new
        let mut genera = vec![0; self.genera.len()];
        for (old, &new) in perm.iter().enumerate() {
            genera[new] = self.genera[old];
        }
        let mut edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (perm[a], perm[b]);
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        edges.sort_unstable();
        DualGraph { genera, edges }
    }

    /// Canonical representative of the isomorphism class.
    ///
    /// Vertices are colored by (genus, valence, loops), colors are refined by
    /// the multiset of neighbor colors until stable, and the remaining ties
    /// are broken by trying every order inside each color class and keeping
    /// the smallest encoding.
    pub fn canonical(&self) -> DualGraph {
        let q = self.vertex_count();
        let loops = |v: usize| self.edges.iter().filter(|&&(a, b)| a == v && b == v).count();
        let mut color: Vec<usize> = {
            let keys: Vec<(u32, u32, usize)> = (0..q).map(|v| (self.genera[v], self.valence(v), loops(v))).collect();
            rank(&keys)
        };
        loop {
            let keys: Vec<(usize, Vec<usize>)> = (0..q)
                .map(|v| {
                    let mut nb: Vec<usize> = self
                        .edges
                        .iter()
                        .filter_map(|&(a, b)| {
                            if a == v && b != v {
                                Some(color[b])
                            } else if b == v && a != v {
                                Some(color[a])
                            } else {
                                None
                            }
                        })
                        .collect();
                    nb.sort_unstable();
                    (color[v], nb)
                })
                .collect();
            let next = rank(&keys);
            let classes = |c: &[usize]| c.iter().collect::<BTreeSet<_>>().len();
            if classes(&next) == classes(&color) {
                color = next;
                break;
            }
            color = next;
        }
        // classes in color order; every labeling keeps classes contiguous
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..q {
            classes.entry(color[v]).or_default().push(v);
        }
        let classes: Vec<Vec<usize>> = classes.into_values().collect();
        let mut best: Option<DualGraph> = None;
        let mut perm = vec![0usize; q];
        search(self, &classes, 0, 0, &mut perm, &mut vec![false; q], &mut best);
        best.unwrap()
    }

    /// `g1,n1 g2,n2 | a-b c-d`
    pub fn to_line(&self) -> String {
        self.to_string()
    }
}

fn rank<T: Ord + Clone>(keys: &[T]) -> Vec<usize> {
    let sorted: BTreeSet<T> = keys.iter().cloned().collect();
    let idx: BTreeMap<T, usize> = sorted.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
    keys.iter().map(|k| idx[k]).collect()
}

fn search(
    g: &DualGraph,
    classes: &[Vec<usize>],
    ci: usize,
    next_label: usize,
    perm: &mut Vec<usize>,
    used: &mut Vec<bool>,
    best: &mut Option<DualGraph>,
) {
    if ci == classes.len() {
        let cand = g.relabel(perm);
        if best.as_ref().is_none_or(|b| cand < *b) {
            *best = Some(cand);
        }
        return;
    }
    let class = &classes[ci];
    let placed = class.iter().filter(|&&v| used[v]).count();
    if placed == class.len() {
        search(g, classes, ci + 1, next_label, perm, used, best);
        return;
    }
    for &v in class {
        if used[v] {
            continue;
        }
        used[v] = true;
        perm[v] = next_label;
        search(g, classes, ci, next_label + 1, perm, used, best);
        used[v] = false;
    }
}

impl fmt::Display for DualGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vs: Vec<String> = self.vertices().iter().map(|(g, n)| format!("{g},{n}")).collect();
        let es: Vec<String> = self.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        write!(f, "{} | {}", vs.join(" "), es.join(" "))
    }
}

impl FromStr for DualGraph {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (vs, es) = s
            .split_once('|')
            .ok_or_else(|| Error::Parse("missing '|' in dual graph".into()))?;
        let mut genera = Vec::new();
        let mut vals = Vec::new();
        for tok in vs.split_whitespace() {
            let (g, n) = tok
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad vertex {tok:?}")))?;
            genera.push(g.parse().map_err(|_| Error::Parse(format!("bad genus {tok:?}")))?);
            vals.push(
                n.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad valence {tok:?}")))?,
            );
        }
        let mut edges = Vec::new();
        for tok in es.split_whitespace() {
            let (a, b) = tok
                .split_once('-')
                .ok_or_else(|| Error::Parse(format!("bad edge {tok:?}")))?;
            edges.push((
                a.parse().map_err(|_| Error::Parse(format!("bad edge {tok:?}")))?,
                b.parse().map_err(|_| Error::Parse(format!("bad edge {tok:?}")))?,
            ));
        }
        let g = DualGraph::new(genera, edges)?;
        if g.vertices().iter().map(|v| v.1).collect::<Vec<_>>() != vals {
            return Err(Error::Parse("valences do not match edges".into()));
        }
        Ok(g)
    }
}

/// Every labeled stratum with k edges and q vertices of ambient genus g:
/// (genus vector, sorted edge list) pairs on vertices 0..q.
pub fn labeled_strata(g: u32, k: usize, q: usize) -> Vec<DualGraph> {
    if q == 0 || q > k + 1 {
        return vec![];
    }
    let total = g as i64 + q as i64 - k as i64 - 1;
    if total < 0 {
        return vec![];
    }
    let pairs: Vec<(usize, usize)> = (0..q).flat_map(|a| (a..q).map(move |b| (a, b))).collect();
    let Some(cap) = valence_cap(g, q) else { return vec![] };
    let mut out = Vec::new();
    let mut edges = Vec::with_capacity(k);
    let mut dg = vec![0u32; q];
    edge_multisets(
        &pairs,
        0,
        k,
        &mut edges,
        &mut dg,
        cap,
        total as u32,
        &mut |edges: &[(usize, usize)]| {
            let mut deg = vec![0u32; q];
            for &(a, b) in edges {
                deg[a] += 1;
                deg[b] += 1;
            }
            let probe = DualGraph {
                genera: vec![0; q],
                edges: edges.to_vec(),
            };
            if !probe.is_connected() {
                return;
            }
            let mut genera = vec![0u32; q];
            compositions(total as u32, 0, &mut genera, &deg, &mut |gs: &[u32]| {
                out.push(DualGraph {
                    genera: gs.to_vec(),
                    edges: edges.to_vec(),
                });
            });
        },
    );
    out
}

/// Multisets of `left` more edges from `pairs` (sorted by first vertex),
/// pruned with two necessary conditions. Every vertex contributes at least
/// 1 to Σ(2g_i-2+n_i) = 2g-2, so valences are at most `max_val`; a vertex
/// of valence ≤ 2 needs positive genus, so there are at most `budget` of
/// them once their valence is final.
#[allow(clippy::too_many_arguments)]
fn edge_multisets(
    pairs: &[(usize, usize)],
    start: usize,
    left: usize,
    cur: &mut Vec<(usize, usize)>,
    deg: &mut Vec<u32>,
    max_val: u32,
    budget: u32,
    f: &mut impl FnMut(&[(usize, usize)]),
) {
    let q = deg.len();
    // vertices before pairs[start].0 can gain no more edges
    let done = if left == 0 || start >= pairs.len() {
        q
    } else {
        pairs[start].0
    };
    let mut low = 0;
    for &d in &deg[..done] {
        if d == 0 && q > 1 {
            return;
        }
        low += (d <= 2) as u32;
    }
    if low > budget {
        return;
    }
    if left == 0 {
        f(cur);
        return;
    }
    for i in start..pairs.len() {
        let (a, b) = pairs[i];
        if deg[a] + 1 + (a == b) as u32 > max_val || deg[b] + 1 > max_val {
            continue;
        }
        deg[a] += 1;
        deg[b] += 1;
        cur.push(pairs[i]);
        edge_multisets(pairs, i, left - 1, cur, deg, max_val, budget, f);
        cur.pop();
        deg[a] -= 1;
        deg[b] -= 1;
    }
}

/// Valence cap 2g-q+1, or None when no stable graph with q vertices exists.
fn valence_cap(g: u32, q: usize) -> Option<u32> {
    let cap = 2 * g as i64 - q as i64 + 1;
    (q as i64 <= (2 * g as i64 - 2).max(1) && cap >= 1).then_some(cap as u32)
}

/// Genus vectors summing to `left` with every vertex stable.
fn compositions(left: u32, i: usize, gs: &mut Vec<u32>, deg: &[u32], f: &mut impl FnMut(&[u32])) {
    let q = gs.len();
    if i == q - 1 {
        gs[i] = left;
        if 2 * left as i64 - 2 + deg[i] as i64 > 0 {
            f(gs);
        }
        return;
    }
    for gi in 0..=left {
        if 2 * gi as i64 - 2 + deg[i] as i64 <= 0 {
            continue;
        }
        gs[i] = gi;
        compositions(left - gi, i + 1, gs, deg, f);
    }
}

/// Isomorphism classes of strata, canonical forms in sorted order.
///
/// Only one labeling of each undecorated multigraph is expanded into genus
/// assignments; every decorated class has a member with that labeling.
pub fn enumerate_strata(g: u32, k: usize, q: usize) -> Vec<DualGraph> {
    if q == 0 || q > k + 1 {
        return vec![];
    }
    let total = g as i64 + q as i64 - k as i64 - 1;
    if total < 0 {
        return vec![];
    }
    let pairs: Vec<(usize, usize)> = (0..q).flat_map(|a| (a..q).map(move |b| (a, b))).collect();
    let Some(cap) = valence_cap(g, q) else { return vec![] };
    let mut set = BTreeSet::new();
    let mut edges = Vec::with_capacity(k);
    let mut dg = vec![0u32; q];
    edge_multisets(
        &pairs,
        0,
        k,
        &mut edges,
        &mut dg,
        cap,
        total as u32,
        &mut |edges: &[(usize, usize)]| {
            let shape = DualGraph {
                genera: vec![0; q],
                edges: edges.to_vec(),
            };
            if !shape.is_connected() || shape.canonical() != shape {
                return;
            }
            let deg: Vec<u32> = (0..q).map(|v| shape.valence(v)).collect();
            let mut genera = vec![0u32; q];
            compositions(total as u32, 0, &mut genera, &deg, &mut |gs: &[u32]| {
                let s = DualGraph {
                    genera: gs.to_vec(),
                    edges: edges.to_vec(),
                };
                set.insert(s.canonical());
            });
        },
    );
    set.into_iter().collect()
}

/// 2^{k+q²} g^{q'-1}, exact (a fraction when q' = 0).
pub fn strata_bound(g: u32, k: u32, q: u32, q_prime: u32) -> Rational {
    let p = Integer::from(1) << (k + q * q);
    let gp = Integer::from(g);
    if q_prime == 0 {
        Rational::from((p, gp))
    } else {
        Rational::from(p * Pow::pow(gp, q_prime - 1))
    }
}

/// One row of the stratum census.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CensusRow {
    pub g: u32,
    pub k: u32,
    pub q: u32,
    pub q_prime: u32,
    pub count: usize,
    pub labeled: usize,
    pub bound: String,
    pub bound_f64: f64,
    pub holds: bool,
}

/// Counts per (g,k,q,q') for all strata in range; the bound is compared
/// with the labeled count, which is never smaller than the class count.
pub fn census(g_max: u32, k_max: usize, q_max: usize) -> Vec<CensusRow> {
    let mut rows = Vec::new();
    for g in 2..=g_max {
        for k in 1..=k_max {
            for q in 1..=q_max.min(k + 1) {
                let labeled = labeled_strata(g, k, q);
                let mut lab: BTreeMap<usize, usize> = BTreeMap::new();
                let mut iso: BTreeMap<usize, BTreeSet<DualGraph>> = BTreeMap::new();
                for s in &labeled {
                    *lab.entry(s.q_prime()).or_default() += 1;
                    iso.entry(s.q_prime()).or_default().insert(s.canonical());
                }
                for (qp, set) in iso {
                    let bound = strata_bound(g, k as u32, q as u32, qp as u32);
                    let labeled = lab[&qp];
                    rows.push(CensusRow {
                        g,
                        k: k as u32,
                        q: q as u32,
                        q_prime: qp as u32,
                        count: set.len(),
                        labeled,
                        bound_f64: bound.to_f64(),
                        holds: labeled <= bound,
                        bound: bound.to_string(),
                    });
                }
            }
        }
    }
    rows
}

/// Which separating configurations to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SepFilter {
    All,
    /// Both sides have area at least 2πa: 2g_i + k - 2 ≥ a.
    Area(u32),
    /// 2g_i + k - 3 ≥ b on both sides.
    Excess(u32),
    FixedK(u32),
    AreaAndK(u32, u32),
}

/// Types (g1 ≤ g2, k) of k-component multicurves cutting a closed genus-g
/// surface into two pieces of genus g1 and g2, each with k boundaries.
pub fn separating_configs(g: u32, filter: SepFilter) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for k in 1..=g + 1 {
        // g1 + g2 = g + 1 - k
        let total = g + 1 - k;
        for g1 in 0..=total / 2 {
            let g2 = total - g1;
            let stable = |gi: u32| 2 * gi as i64 - 2 + k as i64 > 0;
            if !stable(g1) || !stable(g2) {
                continue;
            }
            let area = |gi: u32| 2 * gi as i64 + k as i64 - 2;
            let keep = match filter {
                SepFilter::All => true,
                SepFilter::Area(a) => area(g1) >= a as i64 && area(g2) >= a as i64,
                SepFilter::Excess(b) => area(g1) > b as i64 && area(g2) > b as i64,
                SepFilter::FixedK(kk) => k == kk,
                SepFilter::AreaAndK(a, kk) => k == kk && area(g1) >= a as i64 && area(g2) >= a as i64,
            };
            if keep {
                out.push((g1, g2, k));
            }
        }
    }
    out
}
