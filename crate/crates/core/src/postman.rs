//! Directed Chinese postman tours: degree balancing by min-cost flow and
//! Euler circuit extraction.

use std::collections::VecDeque;

/// An arc of a cost graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub cost: i64,
}

/// Shortest paths (unit or zero costs, all nonnegative) from `src`, as predecessor arcs.
pub fn shortest_from(n: usize, arcs: &[Arc], src: usize) -> (Vec<Option<i64>>, Vec<Option<usize>>) {
    let mut dist: Vec<Option<i64>> = vec![None; n];
    let mut pred = vec![None; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, a) in arcs.iter().enumerate() {
        out[a.from].push(i);
    }
    // 0-1 BFS
    let mut dq = VecDeque::new();
    dist[src] = Some(0);
    dq.push_back(src);
    while let Some(u) = dq.pop_front() {
        let du = dist[u].expect("queued vertices have a distance");
        for &i in &out[u] {
            let a = arcs[i];
            let nd = du + a.cost;
            if dist[a.to].is_none_or(|d| nd < d) {
                dist[a.to] = Some(nd);
                pred[a.to] = Some(i);
                if a.cost == 0 {
                    dq.push_front(a.to);
                } else {
                    dq.push_back(a.to);
                }
            }
        }
    }
    (dist, pred)
}

/// Arcs on the shortest path from the source of `pred` to `to`.
pub fn path_to(arcs: &[Arc], pred: &[Option<usize>], mut to: usize) -> Vec<usize> {
    let mut out = Vec::new();
    while let Some(i) = pred[to] {
        out.push(i);
        to = arcs[i].from;
        if out.len() > arcs.len() {
            break;
        }
    }
    out.reverse();
    out
}

#[derive(Clone)]
struct Residual {
    to: usize,
    cap: i64,
    cost: i64,
    rev: usize,
    orig: Option<usize>,
}

/// Extra copies of `arcs` (by index) that balance in- and out-degree of the
/// `required` multiset at minimum cost. `None` when no balancing exists.
pub fn balance(n: usize, arcs: &[Arc], required: &[usize]) -> Option<Vec<usize>> {
    let mut excess = vec![0i64; n];
    for &i in required {
        excess[arcs[i].to] += 1;
        excess[arcs[i].from] -= 1;
    }
    let need: i64 = excess.iter().filter(|&&e| e > 0).sum();
    if need == 0 {
        return Some(vec![]);
    }
    // residual network with a super source and super sink
    let (src, snk) = (n, n + 1);
    let inf = i64::MAX / 4;
    let mut g: Vec<Vec<Residual>> = vec![Vec::new(); n + 2];
    let add = |g: &mut Vec<Vec<Residual>>, u: usize, v: usize, cap: i64, cost: i64, orig: Option<usize>| {
        let rv = g[u].len();
        let ru = g[v].len() + usize::from(u == v);
        g[u].push(Residual { to: v, cap, cost, rev: ru, orig });
        g[v].push(Residual { to: u, cap: 0, cost: -cost, rev: rv, orig: None });
    };
    for (i, a) in arcs.iter().enumerate() {
        add(&mut g, a.from, a.to, inf, a.cost, Some(i));
    }
    for (v, &e) in excess.iter().enumerate() {
        if e > 0 {
            add(&mut g, src, v, e, 0, None);
        } else if e < 0 {
            add(&mut g, v, snk, -e, 0, None);
        }
    }
    let mut sent = 0;
    while sent < need {
        // Bellman-Ford over the residual graph
        let mut dist: Vec<Option<i64>> = vec![None; n + 2];
        let mut pred: Vec<Option<(usize, usize)>> = vec![None; n + 2];
        dist[src] = Some(0);
        for _ in 0..n + 2 {
            let mut changed = false;
            for u in 0..n + 2 {
                let Some(du) = dist[u] else { continue };
                for (k, r) in g[u].iter().enumerate() {
                    let v = r.to;
                    if r.cap > 0 && dist[v].is_none_or(|dv| du + r.cost < dv) {
                        dist[v] = Some(du + r.cost);
                        pred[v] = Some((u, k));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        dist[snk]?;
        let mut push = need - sent;
        let mut v = snk;
        while let Some((u, k)) = pred[v] {
            push = push.min(g[u][k].cap);
            v = u;
        }
        let mut v = snk;
        while let Some((u, k)) = pred[v] {
            g[u][k].cap -= push;
            let (to, rev) = (g[u][k].to, g[u][k].rev);
            g[to][rev].cap += push;
            v = u;
        }
        sent += push;
    }
    let mut extra = Vec::new();
    for u in 0..n {
        for r in &g[u] {
            if let Some(i) = r.orig {
                for _ in 0..g[r.to][r.rev].cap {
                    extra.push(i);
                }
            }
        }
    }
    extra.sort_unstable();
    Some(extra)
}

/// Euler circuit from `start` over the given arc multiset; `None` if the arcs
/// are not all reachable in one circuit.
pub fn euler_circuit(n: usize, arcs: &[Arc], multiset: &[usize], start: usize) -> Option<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &i in multiset {
        out[arcs[i].from].push(i);
    }
    for list in &mut out {
        // deterministic: consume smallest arc index first
        list.sort_unstable_by(|a, b| b.cmp(a));
    }
    let mut stack: Vec<(usize, Option<usize>)> = vec![(start, None)];
    let mut circuit = Vec::new();
    while let Some(&(v, via)) = stack.last() {
        if let Some(i) = out[v].pop() {
            stack.push((arcs[i].to, Some(i)));
        } else {
            stack.pop();
            if let Some(i) = via {
                circuit.push(i);
            }
        }
    }
    circuit.reverse();
    (circuit.len() == multiset.len()).then_some(circuit)
}

/// Minimum-length closed walk over a directed multigraph with unit arcs that
/// traverses every arc. `None` when no such walk exists.
pub fn chinese_postman(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    if edges.is_empty() {
        return Some(vec![]);
    }
    let arcs: Vec<Arc> = edges.iter().map(|&(from, to)| Arc { from, to, cost: 1 }).collect();
    let required: Vec<usize> = (0..arcs.len()).collect();
    let mut all = required.clone();
    all.extend(balance(n, &arcs, &required)?);
    euler_circuit(n, &arcs, &all, arcs[0].from)
}

/// Length of the shortest closed walk covering every arc, by breadth-first
/// search over (vertex, covered-set) pairs. Exponential; for oracles only.
pub fn brute_force_tour_length(n: usize, edges: &[(usize, usize)]) -> Option<usize> {
    if edges.is_empty() {
        return Some(0);
    }
    assert!(edges.len() <= 16, "oracle limited to 16 arcs");
    let full = (1usize << edges.len()) - 1;
    let mut best = None;
    for start in 0..n {
        if !edges.iter().any(|e| e.0 == start) {
            continue;
        }
        let mut dist = vec![usize::MAX; n << edges.len()];
        let key = |v: usize, m: usize| (m * n) + v;
        let mut q = VecDeque::new();
        dist[key(start, 0)] = 0;
        q.push_back((start, 0usize));
        while let Some((v, m)) = q.pop_front() {
            let d = dist[key(v, m)];
            if v == start && m == full {
                best = Some(best.map_or(d, |b: usize| b.min(d)));
                break;
            }
            for (i, &(a, b)) in edges.iter().enumerate() {
                if a == v {
                    let nm = m | (1 << i);
                    if dist[key(b, nm)] == usize::MAX {
                        dist[key(b, nm)] = d + 1;
                        q.push_back((b, nm));
                    }
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_closed_cover(edges: &[(usize, usize)], tour: &[usize]) -> bool {
        let chained = tour.windows(2).all(|w| edges[w[0]].1 == edges[w[1]].0);
        let closed = tour.first().map(|&f| edges[f].0) == tour.last().map(|&l| edges[l].1);
        let all = (0..edges.len()).all(|i| tour.contains(&i));
        chained && closed && all
    }

    #[test]
    fn eulerian_graph_needs_no_duplicates() {
        let edges = [(0, 1), (1, 0)];
        let t = chinese_postman(2, &edges).unwrap();
        assert_eq!(t.len(), 2);
        assert!(is_closed_cover(&edges, &t));
    }

    #[test]
    fn imbalance_is_padded_by_shortest_paths() {
        // vertex 0 has out - in = 2
        let edges = [(0, 1), (0, 2), (1, 2), (2, 0)];
        let t = chinese_postman(3, &edges).unwrap();
        assert!(is_closed_cover(&edges, &t));
        assert_eq!(Some(t.len()), brute_force_tour_length(3, &edges));
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn self_loops_are_traversed_once() {
        let edges = [(0, 0), (0, 1), (1, 0), (1, 1)];
        let t = chinese_postman(2, &edges).unwrap();
        assert_eq!(t.len(), 4);
        assert!(is_closed_cover(&edges, &t));
    }

    #[test]
    fn not_strongly_connected_has_no_tour() {
        assert_eq!(chinese_postman(2, &[(0, 1)]), None);
        assert_eq!(brute_force_tour_length(2, &[(0, 1)]), None);
    }

    #[test]
    fn zero_cost_arcs_are_preferred() {
        let arcs = [Arc { from: 0, to: 1, cost: 1 }, Arc { from: 0, to: 2, cost: 0 }, Arc { from: 2, to: 1, cost: 0 }];
        let (d, p) = shortest_from(3, &arcs, 0);
        assert_eq!(d[1], Some(0));
        assert_eq!(path_to(&arcs, &p, 1), [1, 2]);
    }
}
