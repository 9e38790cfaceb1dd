use serde::{Deserialize, Serialize};

use super::BnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Latent,
    Intermediate,
    Observed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: usize,
    pub label: String,
    pub kind: NodeKind,
    /// Flow step that produced this layer; `None` for base latents and for
    /// graphs not compiled from a flow.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    pub deterministic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Marks a bijective link between a value and its image in the next layer.
    pub bijective: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BnFile {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

/// Directed acyclic graph with node kinds and bijective edge markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bn {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Bn {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, BnError> {
        let n = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i {
                return Err(BnError::InvalidGraph(format!(
                    "node ids must be 0..{n} in order; found {} at position {i}",
                    node.id
                )));
            }
        }
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut bij_in = vec![0usize; n];
        let mut bij_out = vec![0usize; n];
        for e in &edges {
            if e.from >= n || e.to >= n {
                return Err(BnError::InvalidGraph(format!(
                    "edge {} -> {} references a missing node",
                    e.from, e.to
                )));
            }
            if e.from == e.to {
                return Err(BnError::InvalidGraph(format!("self loop on node {}", e.from)));
            }
            if parents[e.to].contains(&e.from) || children[e.to].contains(&e.from) {
                return Err(BnError::InvalidGraph(format!(
                    "duplicate edge between {} and {}",
                    e.from, e.to
                )));
            }
            parents[e.to].push(e.from);
            children[e.from].push(e.to);
            if e.bijective {
                bij_out[e.from] += 1;
                bij_in[e.to] += 1;
                if bij_out[e.from] > 1 || bij_in[e.to] > 1 {
                    return Err(BnError::InvalidGraph(format!(
                        "node has more than one bijective image ({} -> {})",
                        e.from, e.to
                    )));
                }
            }
        }
        let bn = Self {
            nodes,
            edges,
            parents,
            children,
        };
        if bn.topological_order().is_none() {
            return Err(BnError::Cyclic);
        }
        Ok(bn)
    }

    /// Plain observed DAG on `n` nodes labelled `x1..xn`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, BnError> {
        let nodes = (0..n)
            .map(|i| Node {
                id: i,
                label: format!("x{}", i + 1),
                kind: NodeKind::Observed,
                step: None,
                deterministic: false,
            })
            .collect();
        let edges = edges
            .iter()
            .map(|&(from, to)| Edge {
                from,
                to,
                bijective: false,
            })
            .collect();
        Self::new(nodes, edges)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.children[from].contains(&to)
    }

    /// Edges without the bijective marker.
    pub fn directed_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| !e.bijective)
    }

    pub fn bijective_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.bijective)
    }

    pub fn node_by_label(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }

    /// Resolves a node by label, falling back to a numeric id.
    pub fn resolve(&self, name: &str) -> Result<usize, BnError> {
        if let Some(i) = self.node_by_label(name) {
            return Ok(i);
        }
        match name.parse::<usize>() {
            Ok(i) if i < self.node_count() => Ok(i),
            _ => Err(BnError::UnknownNode(name.to_string())),
        }
    }

    pub fn ids_of_kind(&self, kind: NodeKind) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.kind == kind)
            .map(|n| n.id)
            .collect()
    }

    /// Copy of the graph with edge `index` (into [`Bn::edges`]) removed.
    pub fn without_edge(&self, index: usize) -> Bn {
        let mut edges = self.edges.clone();
        edges.remove(index);
        Bn::new(self.nodes.clone(), edges).expect("removing an edge keeps a valid DAG")
    }

    /// Kahn's algorithm; `None` when a cycle exists.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.node_count();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents[v].len()).collect();
        let mut ready: Vec<usize> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop() {
            order.push(v);
            for &c in self.children[v].iter().rev() {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Mask of `seeds` and all of their ancestors.
    pub fn ancestors_mask(&self, seeds: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.node_count()];
        let mut stack: Vec<usize> = seeds.to_vec();
        while let Some(v) = stack.pop() {
            if !std::mem::replace(&mut mask[v], true) {
                stack.extend_from_slice(&self.parents[v]);
            }
        }
        mask
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&BnFile {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        })
        .expect("bn serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BnError> {
        let f: BnFile = serde_json::from_str(text).map_err(|e| BnError::Parse(e.to_string()))?;
        Self::new(f.nodes, f.edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_cycles_and_bad_edges() {
        assert!(matches!(
            Bn::from_edges(3, &[(0, 1), (1, 2), (2, 0)]),
            Err(BnError::Cyclic)
        ));
        assert!(Bn::from_edges(2, &[(0, 2)]).is_err());
        assert!(Bn::from_edges(2, &[(1, 1)]).is_err());
        assert!(Bn::from_edges(2, &[(0, 1), (0, 1)]).is_err());
        assert!(Bn::from_edges(2, &[(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn bijective_edges_are_one_to_one() {
        let mut bn = Bn::from_edges(3, &[]).unwrap();
        let nodes = bn.nodes().to_vec();
        let e = |from, to| Edge {
            from,
            to,
            bijective: true,
        };
        assert!(Bn::new(nodes.clone(), vec![e(0, 1), e(0, 2)]).is_err());
        assert!(Bn::new(nodes.clone(), vec![e(0, 2), e(1, 2)]).is_err());
        bn = Bn::new(nodes, vec![e(0, 1), e(1, 2)]).unwrap();
        assert_eq!(bn.bijective_edges().count(), 2);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let mut nodes = Bn::from_edges(3, &[]).unwrap().nodes().to_vec();
        nodes[0].kind = NodeKind::Latent;
        nodes[2].step = Some(1);
        nodes[2].deterministic = true;
        let bn = Bn::new(
            nodes,
            vec![
                Edge {
                    from: 0,
                    to: 2,
                    bijective: true,
                },
                Edge {
                    from: 1,
                    to: 2,
                    bijective: false,
                },
            ],
        )
        .unwrap();
        let back = Bn::from_json(&bn.to_json()).unwrap();
        assert_eq!(back, bn);
        assert!(Bn::from_json(r#"{"nodes": [], "edges": [], "x": 1}"#).is_err());
    }

    #[test]
    fn resolve_by_label_or_id() {
        let bn = Bn::from_edges(3, &[(0, 1)]).unwrap();
        assert_eq!(bn.resolve("x2").unwrap(), 1);
        assert_eq!(bn.resolve("2").unwrap(), 2);
        assert!(matches!(bn.resolve("x9"), Err(BnError::UnknownNode(_))));
    }
}
