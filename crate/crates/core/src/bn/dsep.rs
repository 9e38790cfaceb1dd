//! d-separation by Bayes-Ball reachability, with an independent
//! moralization-based oracle.

use std::collections::VecDeque;

use super::graph::{Bn, NodeKind};
use super::BnError;

/// `X ⟂ Y | Z` over node ids. Sets are kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CiStatement {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub z: Vec<usize>,
}

impl CiStatement {
    pub fn new(x: &[usize], y: &[usize], z: &[usize]) -> Result<Self, BnError> {
        let norm = |s: &[usize]| {
            let mut v = s.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        };
        let (x, y, z) = (norm(x), norm(y), norm(z));
        if x.is_empty() || y.is_empty() {
            return Err(BnError::EmptySet);
        }
        let overlaps = |a: &[usize], b: &[usize]| a.iter().any(|v| b.binary_search(v).is_ok());
        if overlaps(&x, &y) || overlaps(&x, &z) || overlaps(&y, &z) {
            return Err(BnError::OverlappingSets);
        }
        Ok(Self { x, y, z })
    }

    pub fn pair(a: usize, b: usize, z: &[usize]) -> Result<Self, BnError> {
        Self::new(&[a], &[b], z)
    }

    pub fn swapped(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
            z: self.z.clone(),
        }
    }

    /// Same statement up to swapping `X` and `Y`.
    pub fn same_as(&self, other: &CiStatement) -> bool {
        self == other || self.swapped() == *other
    }

    /// Human-readable form using node labels, e.g. `x3 ⟂ x4 | {x1, x2}`.
    pub fn display(&self, bn: &Bn) -> String {
        let names = |s: &[usize]| {
            s.iter()
                .map(|&i| bn.nodes()[i].label.clone())
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!("{} ⟂ {} | {{{}}}", names(&self.x), names(&self.y), names(&self.z))
    }

    fn check_ids(&self, bn: &Bn) -> Result<(), BnError> {
        let n = bn.node_count();
        match self.x.iter().chain(&self.y).chain(&self.z).find(|&&v| v >= n) {
            Some(v) => Err(BnError::UnknownNode(v.to_string())),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dir {
    /// Arrived from a child (or starting).
    Up,
    /// Arrived from a parent.
    Down,
}

/// Bayes-Ball: nodes reachable from `sources` by an active trail given `z`.
fn reachable(bn: &Bn, sources: &[usize], z: &[usize]) -> Vec<bool> {
    let n = bn.node_count();
    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    let anc_z = bn.ancestors_mask(z);
    let mut visited = vec![[false; 2]; n];
    let mut reached = vec![false; n];
    let mut queue: VecDeque<(usize, Dir)> = sources.iter().map(|&s| (s, Dir::Up)).collect();
    while let Some((v, dir)) = queue.pop_front() {
        let slot = match dir {
            Dir::Up => 0,
            Dir::Down => 1,
        };
        if std::mem::replace(&mut visited[v][slot], true) {
            continue;
        }
        if !in_z[v] {
            reached[v] = true;
        }
        match dir {
            Dir::Up if !in_z[v] => {
                queue.extend(bn.parents(v).iter().map(|&p| (p, Dir::Up)));
                queue.extend(bn.children(v).iter().map(|&c| (c, Dir::Down)));
            }
            Dir::Up => {}
            Dir::Down => {
                if !in_z[v] {
                    queue.extend(bn.children(v).iter().map(|&c| (c, Dir::Down)));
                }
                // A collider at v (or above an observed descendant) is open.
                if anc_z[v] {
                    queue.extend(bn.parents(v).iter().map(|&p| (p, Dir::Up)));
                }
            }
        }
    }
    reached
}

/// Whether the graph implies `q` by d-separation. Bijective markers and
/// deterministic flags play no role.
pub fn d_separated(bn: &Bn, q: &CiStatement) -> Result<bool, BnError> {
    q.check_ids(bn)?;
    let reached = reachable(bn, &q.x, &q.z);
    Ok(!q.y.iter().any(|&v| reached[v]))
}

/// Same question answered by separation in the moralized ancestral graph.
pub fn d_separated_oracle(bn: &Bn, q: &CiStatement) -> Result<bool, BnError> {
    q.check_ids(bn)?;
    let n = bn.node_count();
    let seeds: Vec<usize> = q.x.iter().chain(&q.y).chain(&q.z).copied().collect();
    let keep = bn.ancestors_mask(&seeds);
    let mut adj = vec![Vec::new(); n];
    for v in (0..n).filter(|&v| keep[v]) {
        let pa = bn.parents(v);
        for (i, &p) in pa.iter().enumerate() {
            adj[v].push(p);
            adj[p].push(v);
            for &p2 in &pa[i + 1..] {
                adj[p].push(p2);
                adj[p2].push(p);
            }
        }
    }
    let mut blocked = vec![false; n];
    for &v in &q.z {
        blocked[v] = true;
    }
    let mut seen = blocked.clone();
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &s in &q.x {
        seen[s] = true;
        queue.push_back(s);
    }
    let mut target = vec![false; n];
    for &v in &q.y {
        target[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        if target[v] {
            return Ok(false);
        }
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    Ok(true)
}

/// Largest conditioning-set size accepted by [`implied_independencies`].
pub const MAX_CONDITIONING: usize = 4;

/// All pairwise statements `a ⟂ b | Z` (with `a < b`) over the scope that the
/// graph implies, for every `Z` within the scope of size at most
/// `max_conditioning`. Ordered by pair, then by `Z` size, then lexicographically.
pub fn implied_independencies(
    bn: &Bn,
    observed_only: bool,
    max_conditioning: usize,
) -> Result<Vec<CiStatement>, BnError> {
    if max_conditioning > MAX_CONDITIONING {
        return Err(BnError::ConditioningTooLarge(max_conditioning));
    }
    let scope: Vec<usize> = if observed_only {
        bn.ids_of_kind(NodeKind::Observed)
    } else {
        (0..bn.node_count()).collect()
    };
    if scope.is_empty() {
        return Err(BnError::EmptyScope);
    }
    let mut out = Vec::new();
    for (i, &a) in scope.iter().enumerate() {
        for &b in &scope[i + 1..] {
            let rest: Vec<usize> = scope.iter().copied().filter(|&v| v != a && v != b).collect();
            for size in 0..=max_conditioning.min(rest.len()) {
                for z in combinations(&rest, size) {
                    let q = CiStatement::pair(a, b, &z)?;
                    if d_separated(bn, &q)? {
                        out.push(q);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `size`-subsets of `items` in lexicographic order.
pub fn combinations(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..size).collect();
    if size > items.len() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + items.len() - size {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sep(bn: &Bn, a: usize, b: usize, z: &[usize]) -> bool {
        let q = CiStatement::pair(a, b, z).unwrap();
        let fast = d_separated(bn, &q).unwrap();
        assert_eq!(fast, d_separated_oracle(bn, &q).unwrap());
        assert_eq!(fast, d_separated(bn, &q.swapped()).unwrap());
        fast
    }

    #[test]
    fn textbook_structures() {
        let chain = Bn::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(sep(&chain, 0, 2, &[1]));
        assert!(!sep(&chain, 0, 2, &[]));
        let fork = Bn::from_edges(3, &[(1, 0), (1, 2)]).unwrap();
        assert!(sep(&fork, 0, 2, &[1]));
        assert!(!sep(&fork, 0, 2, &[]));
        let collider = Bn::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        assert!(!sep(&collider, 0, 1, &[2]));
        assert!(sep(&collider, 0, 1, &[]));
        // observing a descendant of the collider also opens it
        let desc = Bn::from_edges(4, &[(0, 2), (1, 2), (2, 3)]).unwrap();
        assert!(!sep(&desc, 0, 1, &[3]));
    }

    #[test]
    fn query_validation() {
        assert!(matches!(CiStatement::new(&[0], &[0], &[]), Err(BnError::OverlappingSets)));
        assert!(matches!(CiStatement::new(&[0], &[1], &[0]), Err(BnError::OverlappingSets)));
        assert!(matches!(CiStatement::new(&[], &[1], &[]), Err(BnError::EmptySet)));
        let bn = Bn::from_edges(2, &[]).unwrap();
        let q = CiStatement::pair(0, 5, &[]).unwrap();
        assert!(matches!(d_separated(&bn, &q), Err(BnError::UnknownNode(_))));
        assert!(d_separated_oracle(&bn, &q).is_err());
    }

    #[test]
    fn combinations_enumerate_subsets() {
        assert_eq!(combinations(&[1, 2, 3], 2), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(&[1, 2], 0), vec![Vec::<usize>::new()]);
        assert!(combinations(&[1], 2).is_empty());
        assert_eq!(combinations(&[4, 5, 6, 7, 8], 3).len(), 10);
    }

    #[test]
    fn complete_dag_implies_nothing() {
        let mut edges = Vec::new();
        for j in 0..4 {
            for i in j + 1..4 {
                edges.push((j, i));
            }
        }
        let bn = Bn::from_edges(4, &edges).unwrap();
        assert!(implied_independencies(&bn, true, 2).unwrap().is_empty());
    }

    #[test]
    fn guards() {
        let bn = Bn::from_edges(2, &[]).unwrap();
        assert!(matches!(
            implied_independencies(&bn, true, 5),
            Err(BnError::ConditioningTooLarge(5))
        ));
        let mut nodes = bn.nodes().to_vec();
        nodes.iter_mut().for_each(|n| n.kind = NodeKind::Latent);
        let latent = Bn::new(nodes, vec![]).unwrap();
        assert!(matches!(implied_independencies(&latent, true, 0), Err(BnError::EmptyScope)));
        assert_eq!(implied_independencies(&latent, false, 0).unwrap().len(), 1);
    }
}
