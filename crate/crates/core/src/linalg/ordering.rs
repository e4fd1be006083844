//! Fill-reducing orderings for the sparse direct solvers.

use std::collections::VecDeque;

/// Subgraphs at most this large are numbered directly.
const LEAF_SIZE: usize = 64;

/// Nested-dissection permutation of a symmetric adjacency structure.
///
/// Returns `perm` with `perm[k]` = original index placed at position `k`.
/// Separators come from the middle level of a breadth-first level structure
/// rooted at a pseudo-peripheral vertex.
pub fn nested_dissection(ptr: &[usize], adj: &[usize]) -> Vec<usize> {
    let n = ptr.len() - 1;
    let mut ws = Workspace { stamp: vec![0; n], level: vec![usize::MAX; n], current: 0 };
    let mut perm = Vec::with_capacity(n);
    let mut stack: Vec<Task> = vec![Task::Split((0..n).collect())];
    // Tasks are processed depth first; separators are emitted after both halves.
    while let Some(task) = stack.pop() {
        match task {
            Task::Emit(vs) => perm.extend(vs),
            Task::Split(set) => {
                if set.len() <= LEAF_SIZE {
                    perm.extend(ws.bfs_order(ptr, adj, &set));
                    continue;
                }
                let Some((a, b, sep)) = ws.bisect(ptr, adj, &set) else {
                    perm.extend(ws.bfs_order(ptr, adj, &set));
                    continue;
                };
                stack.push(Task::Emit(sep));
                stack.push(Task::Split(b));
                stack.push(Task::Split(a));
            }
        }
    }
    debug_assert_eq!(perm.len(), n);
    perm
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

enum Task {
    Split(Vec<usize>),
    Emit(Vec<usize>),
}

struct Workspace {
    stamp: Vec<usize>,
    level: Vec<usize>,
    current: usize,
}

impl Workspace {
    fn mark(&mut self, set: &[usize]) {
        self.current += 1;
        for &v in set {
            self.stamp[v] = self.current;
        }
    }

    /// Breadth-first levels inside the marked set starting at `root`.
    fn levels(&mut self, ptr: &[usize], adj: &[usize], root: usize) -> Vec<Vec<usize>> {
        let mut levels = vec![vec![root]];
        let mut seen: Vec<usize> = vec![root];
        self.level[root] = 0;
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &w in &adj[ptr[v]..ptr[v + 1]] {
                    if self.stamp[w] == self.current && self.level[w] == usize::MAX {
                        self.level[w] = levels.len();
                        next.push(w);
                        seen.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        for v in seen {
            self.level[v] = usize::MAX;
        }
        levels
    }

    fn degree(&self, ptr: &[usize], adj: &[usize], v: usize) -> usize {
        adj[ptr[v]..ptr[v + 1]].iter().filter(|&&w| self.stamp[w] == self.current).count()
    }

    fn bfs_order(&mut self, ptr: &[usize], adj: &[usize], set: &[usize]) -> Vec<usize> {
        self.mark(set);
        let mut out = Vec::with_capacity(set.len());
        let mut visited = std::collections::HashSet::new();
        for &s in set {
            if visited.contains(&s) {
                continue;
            }
            let mut queue = VecDeque::from([s]);
            visited.insert(s);
            while let Some(v) = queue.pop_front() {
                out.push(v);
                for &w in &adj[ptr[v]..ptr[v + 1]] {
                    if self.stamp[w] == self.current && visited.insert(w) {
                        queue.push_back(w);
                    }
                }
            }
        }
        out
    }

    #[allow(clippy::type_complexity)]
    fn bisect(
        &mut self,
        ptr: &[usize],
        adj: &[usize],
        set: &[usize],
    ) -> Option<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        self.mark(set);
        let root = *set.iter().min().unwrap();
        let mut levels = self.levels(ptr, adj, root);
        let reached: usize = levels.iter().map(Vec::len).sum();
        if reached < set.len() {
            // Disconnected: the component of the root against the rest.
            let stamp = self.current;
            let comp: Vec<usize> = levels.concat();
            self.current += 1;
            for &v in &comp {
                self.stamp[v] = self.current;
            }
            let rest: Vec<usize> = set.iter().copied().filter(|&v| self.stamp[v] == stamp).collect();
            return Some((comp, rest, Vec::new()));
        }
        // pseudo-peripheral root: walk to a minimum-degree vertex of the last level
        for _ in 0..8 {
            let last = levels.last().unwrap();
            let cand = *last.iter().min_by_key(|&&v| (self.degree(ptr, adj, v), v)).unwrap();
            let trial = self.levels(ptr, adj, cand);
            if trial.len() > levels.len() {
                levels = trial;
            } else {
                break;
            }
        }
        if levels.len() < 3 {
            // too compact for a level separator
            return None;
        }
        // choose the level splitting the vertex count in half
        let half = set.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (l, lv) in levels.iter().enumerate() {
            acc += lv.len();
            if acc >= half {
                mid = l.clamp(1, levels.len() - 2);
                break;
            }
        }
        for (l, lv) in levels.iter().enumerate() {
            for &v in lv {
                self.level[v] = l;
            }
        }
        let mut a: Vec<usize> = levels[..mid].concat();
        let b: Vec<usize> = levels[mid + 1..].concat();
        let mut sep = Vec::new();
        // separator vertices with no neighbour beyond the middle level join the near side
        for &v in &levels[mid] {
            let touches_far = adj[ptr[v]..ptr[v + 1]]
                .iter()
                .any(|&w| self.stamp[w] == self.current && self.level[w] == mid + 1);
            if touches_far {
                sep.push(v);
            } else {
                a.push(v);
            }
        }
        for lv in &levels {
            for &v in lv {
                self.level[v] = usize::MAX;
            }
        }
        Some((a, b, sep))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_graph(n: usize) -> (Vec<usize>, Vec<usize>) {
        let id = |i: usize, j: usize| j * n + i;
        let mut ptr = vec![0];
        let mut adj = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let mut nb = Vec::new();
                if i > 0 {
                    nb.push(id(i - 1, j));
                }
                if i + 1 < n {
                    nb.push(id(i + 1, j));
                }
                if j > 0 {
                    nb.push(id(i, j - 1));
                }
                if j + 1 < n {
                    nb.push(id(i, j + 1));
                }
                nb.sort_unstable();
                adj.extend(nb);
                ptr.push(adj.len());
            }
        }
        (ptr, adj)
    }

    #[test]
    fn ordering_is_a_permutation() {
        let (ptr, adj) = grid_graph(40);
        let perm = nested_dissection(&ptr, &adj);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..1600).collect::<Vec<_>>());
        let inv = inverse_permutation(&perm);
        assert!(perm.iter().enumerate().all(|(k, &p)| inv[p] == k));
    }

    #[test]
    fn disconnected_graph_is_handled() {
        let (p1, a1) = grid_graph(12);
        let n1 = p1.len() - 1;
        let mut ptr = p1.clone();
        let mut adj = a1.clone();
        for k in 1..p1.len() {
            ptr.push(p1[k] + a1.len());
        }
        adj.extend(a1.iter().map(|v| v + n1));
        let perm = nested_dissection(&ptr, &adj);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..2 * n1).collect::<Vec<_>>());
    }
}
