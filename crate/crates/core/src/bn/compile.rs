use super::graph::{Bn, Edge, Node, NodeKind};
use super::BnError;
use crate::flows::{conditioning_inputs, FlowSpec};

/// Compiles a flow spec into the network its structure induces.
///
/// Layers follow the generative direction: base latents `z`, then one
/// intermediate layer per inner step, then the observed `x`. The step listed
/// first (which consumes `x`) produces the observed layer; the last step's
/// layer receives the latents. Nodes are labelled by the variable they track
/// through the permutations, so `z2`, `u1_2`, ..., `x2` form one bijective
/// chain. Conditioning shows up as directed edges inside the layer a step
/// produces; the step's scalar bijection shows up as a bijective edge from
/// the layer above.
///
/// With `include_latents = false` a single-step flow compiles to its
/// projection onto `x` alone. Deeper flows refuse, because marginalizing the
/// intermediate layers does not in general yield a DAG over `x`.
pub fn bn_from_flow(spec: &FlowSpec, include_latents: bool) -> Result<Bn, BnError> {
    spec.validate().map_err(BnError::Flow)?;
    let d = spec.dim;
    let k = spec.steps.len();
    if !include_latents && k > 1 {
        return Err(BnError::ProjectionRefused { steps: k });
    }

    // Track which original variable sits at each permuted position, per step.
    let mut tracks: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut track: Vec<usize> = (0..d).collect();
    for step in &spec.steps {
        let order = step.permutation.order(d);
        track = order.iter().map(|&o| track[o]).collect();
        tracks.push(track.clone());
    }

    // Layer index j in 0..=k: 0 = observed x, k = base latents.
    let label = |layer: usize, var: usize| -> String {
        if layer == 0 {
            format!("x{}", var + 1)
        } else if layer == k {
            format!("z{}", var + 1)
        } else {
            format!("u{}_{}", k - layer, var + 1)
        }
    };
    let layers: Vec<usize> = if include_latents {
        (0..=k).rev().collect()
    } else {
        vec![0]
    };
    let mut nodes = Vec::new();
    let mut id = vec![vec![usize::MAX; d]; k + 1];
    for &layer in &layers {
        for var in 0..d {
            id[layer][var] = nodes.len();
            let (kind, deterministic) = match layer {
                l if l == k => (NodeKind::Latent, false),
                0 => (NodeKind::Observed, true),
                _ => (NodeKind::Intermediate, true),
            };
            nodes.push(Node {
                id: nodes.len(),
                label: label(layer, var),
                kind,
                step: (layer < k).then_some(layer + 1),
                deterministic,
            });
        }
    }

    let mut edges = Vec::new();
    for &layer in layers.iter().filter(|&&l| l < k) {
        let step = &spec.steps[layer];
        let track = &tracks[layer];
        if include_latents {
            for var in 0..d {
                edges.push(Edge {
                    from: id[layer + 1][var],
                    to: id[layer][var],
                    bijective: true,
                });
            }
        }
        for pos in 0..d {
            if let Some(m) = conditioning_inputs(step.conditioner, pos) {
                for src in 0..m {
                    edges.push(Edge {
                        from: id[layer][track[src]],
                        to: id[layer][track[pos]],
                        bijective: false,
                    });
                }
            }
        }
    }
    Bn::new(nodes, edges)
}
