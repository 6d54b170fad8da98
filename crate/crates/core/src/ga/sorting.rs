//! Nondominated sorting and crowding distance over (predictive, fairness)
//! points, with predictive maximized and fairness minimized.

use std::collections::HashMap;

use crate::metrics::EvaluatedPoint;

/// True when `a` is at least as good as `b` in both objectives and strictly
/// better in one.
#[inline]
pub fn dominates(a: &EvaluatedPoint, b: &EvaluatedPoint) -> bool {
    a.predictive >= b.predictive
        && a.fairness <= b.fairness
        && (a.predictive > b.predictive || a.fairness < b.fairness)
}

/// Pareto rank of every point: 0 for the nondominated set, then 1 for the
/// set nondominated once rank 0 is removed, and so on.
pub fn fast_nondominated_sort(points: &[EvaluatedPoint]) -> Vec<usize> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominated_by_me[i].push(j);
                domination_count[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominated_by_me[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut rank = vec![0usize; n];
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    let mut level = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            rank[i] = level;
            for &j in &dominated_by_me[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        level += 1;
        current = next;
    }
    rank
}

/// Indices grouped by rank, best front first.
pub fn fronts(ranks: &[usize]) -> Vec<Vec<usize>> {
    let depth = ranks.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); depth];
    for (i, &r) in ranks.iter().enumerate() {
        out[r].push(i);
    }
    out
}

/// Crowding distance of each point of one front.
///
/// Computed over the distinct points of the front. Extreme points in either
/// objective get `+inf`; interior points sum the normalized gap between their
/// neighbours over both objectives, a zero-range objective contributing 0.
/// A point that occurs more than once keeps its distance on its first
/// occurrence only if it is extreme; otherwise every copy gets 0. Later
/// copies always get 0.
pub fn crowding_distance(front: &[EvaluatedPoint]) -> Vec<f64> {
    let key = |p: &EvaluatedPoint| (p.predictive.to_bits(), p.fairness.to_bits());
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    let mut distinct: Vec<EvaluatedPoint> = Vec::new();
    let mut first_of: Vec<Option<usize>> = Vec::with_capacity(front.len());
    let mut owner: Vec<usize> = Vec::with_capacity(front.len());
    let mut multiplicity: Vec<usize> = Vec::new();
    for p in front {
        match seen.get(&key(p)) {
            Some(&d) => {
                first_of.push(None);
                owner.push(d);
                multiplicity[d] += 1;
            }
            None => {
                seen.insert(key(p), distinct.len());
                first_of.push(Some(distinct.len()));
                owner.push(distinct.len());
                distinct.push(*p);
                multiplicity.push(1);
            }
        }
    }

    let m = distinct.len();
    let mut dist = vec![0.0f64; m];
    if m <= 2 {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
    } else {
        let objectives: [fn(&EvaluatedPoint) -> f64; 2] = [|p| p.predictive, |p| p.fairness];
        for (k, obj) in objectives.iter().enumerate() {
            let other = objectives[1 - k];
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| {
                obj(&distinct[a])
                    .total_cmp(&obj(&distinct[b]))
                    .then(other(&distinct[a]).total_cmp(&other(&distinct[b])))
            });
            let lo = obj(&distinct[order[0]]);
            let hi = obj(&distinct[order[m - 1]]);
            let range = hi - lo;
            if range <= 0.0 {
                continue;
            }
            dist[order[0]] = f64::INFINITY;
            dist[order[m - 1]] = f64::INFINITY;
            for w in 1..m - 1 {
                let gap = obj(&distinct[order[w + 1]]) - obj(&distinct[order[w - 1]]);
                dist[order[w]] += gap / range;
            }
        }
    }

    (0..front.len())
        .map(|i| {
            let d = owner[i];
            match first_of[i] {
                Some(_) if multiplicity[d] == 1 || dist[d].is_infinite() => dist[d],
                _ => 0.0,
            }
        })
        .collect()
}
