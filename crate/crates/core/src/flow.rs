use std::collections::VecDeque;

use crate::graph::Graph;
use crate::vset::VertexSet;

const BIG: i32 = 1 << 20;

/// Result of a vertex-capacitated path packing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packing {
    pub paths: Vec<Vec<usize>>,
}

impl Packing {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Packs paths inside `G[within]` from distinct vertices of `sources` to
/// `sinks`. Non-sink vertices carry capacity one. With `shared_sinks` a sink
/// vertex may end several paths; otherwise sinks have capacity one as well.
/// Every path stops at the first sink it reaches.
pub fn pack_paths(
    g: &Graph,
    within: VertexSet,
    sources: VertexSet,
    sinks: VertexSet,
    shared_sinks: bool,
    limit: usize,
) -> Packing {
    let n = g.n();
    let (s, t) = (2 * n, 2 * n + 1);
    let size = 2 * n + 2;
    let mut cap = vec![vec![0i32; size]; size];
    let sources = sources.intersection(within);
    let sinks = sinks.intersection(within);
    for v in within.iter() {
        let inner = if sinks.contains(v) && shared_sinks {
            BIG
        } else {
            1
        };
        cap[2 * v][2 * v + 1] = inner;
        if sinks.contains(v) {
            cap[2 * v + 1][t] = inner;
            continue;
        }
        for w in g.neighbours(v).intersection(within).iter() {
            cap[2 * v + 1][2 * w] = 1;
        }
    }
    for u in sources.iter() {
        cap[s][2 * u] = 1;
    }
    let orig = cap.clone();
    let mut flow = 0;
    while flow < limit {
        let mut prev = vec![usize::MAX; size];
        prev[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            if x == t {
                break;
            }
            for y in 0..size {
                if prev[y] == usize::MAX && cap[x][y] > 0 {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        if prev[t] == usize::MAX {
            break;
        }
        let mut y = t;
        while y != s {
            let x = prev[y];
            cap[x][y] -= 1;
            cap[y][x] += 1;
            y = x;
        }
        flow += 1;
    }
    let mut used: Vec<Vec<i32>> = (0..size)
        .map(|x| (0..size).map(|y| (orig[x][y] - cap[x][y]).max(0)).collect())
        .collect();
    let mut paths = Vec::new();
    for _ in 0..flow {
        let mut path = Vec::new();
        let mut x = s;
        while x != t {
            let y = (0..size)
                .find(|&y| used[x][y] > 0)
                .expect("flow conservation");
            used[x][y] -= 1;
            if y < 2 * n && y % 2 == 0 {
                path.push(y / 2);
            }
            x = y;
        }
        paths.push(path);
    }
    paths.sort();
    Packing { paths }
}

/// Maximum number of vertex-disjoint paths from `sources` to `sinks` in `G[within]`.
pub fn disjoint_paths(
    g: &Graph,
    within: VertexSet,
    sources: VertexSet,
    sinks: VertexSet,
) -> Packing {
    pack_paths(g, within, sources, sinks, false, usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(v: &[usize]) -> VertexSet {
        v.iter().copied().collect()
    }

    #[test]
    fn grid_rows() {
        let g = Graph::grid(3, 6);
        let first = vs(&[0, 1, 2]);
        let last = vs(&[15, 16, 17]);
        let p = disjoint_paths(&g, g.vertices(), first, last);
        assert_eq!(p.len(), 3);
        let mut seen = VertexSet::EMPTY;
        for path in &p.paths {
            let set: VertexSet = path.iter().copied().collect();
            assert!(!set.meets(seen));
            seen = seen.union(set);
            for w in path.windows(2) {
                assert!(g.has_edge(w[0], w[1]));
            }
        }
    }

    #[test]
    fn shared_sink_fan() {
        let star = Graph::new(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let fan = pack_paths(
            &star,
            star.vertices(),
            vs(&[1, 2, 3, 4]),
            vs(&[0]),
            true,
            usize::MAX,
        );
        assert_eq!(fan.len(), 4);
        let plain = disjoint_paths(&star, star.vertices(), vs(&[1, 2, 3, 4]), vs(&[0]));
        assert_eq!(plain.len(), 1);
    }

    #[test]
    fn source_in_sink_is_trivial_path() {
        let g = Graph::path(3);
        let p = disjoint_paths(&g, g.vertices(), vs(&[1]), vs(&[1]));
        assert_eq!(p.paths, vec![vec![1]]);
    }
}
