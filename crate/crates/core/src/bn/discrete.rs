//! Discrete joint distributions and exact factorization / I-map checks.

use super::dsep::{d_separated, CiStatement};
use super::graph::Bn;
use super::BnError;
use crate::numcore::Rng;

pub const MAX_VARIABLES: usize = 6;
pub const MAX_CARDINALITY: usize = 4;
/// Tolerance for probability sums and equalities between table entries.
pub const PROB_TOL: f64 = 1e-9;

/// Joint probability table. The last variable varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    cards: Vec<usize>,
    probs: Vec<f64>,
}

fn table_size(cards: &[usize]) -> usize {
    cards.iter().product()
}

/// Decodes a flat index into per-variable states.
fn decode(mut index: usize, cards: &[usize], out: &mut [usize]) {
    for (slot, &c) in out.iter_mut().zip(cards).rev() {
        *slot = index % c;
        index /= c;
    }
}

fn encode(states: impl Iterator<Item = usize>, cards: impl Iterator<Item = usize>) -> usize {
    states.zip(cards).fold(0, |acc, (s, c)| acc * c + s)
}

impl DiscreteJoint {
    pub fn new(cards: Vec<usize>, probs: Vec<f64>) -> Result<Self, BnError> {
        if cards.is_empty() || cards.len() > MAX_VARIABLES {
            return Err(BnError::InvalidJoint(format!(
                "need 1..={MAX_VARIABLES} variables, got {}",
                cards.len()
            )));
        }
        if let Some(c) = cards.iter().find(|&&c| c == 0 || c > MAX_CARDINALITY) {
            return Err(BnError::InvalidJoint(format!(
                "cardinality {c} outside 1..={MAX_CARDINALITY}"
            )));
        }
        if probs.len() != table_size(&cards) {
            return Err(BnError::InvalidJoint(format!(
                "table has {} entries, expected {}",
                probs.len(),
                table_size(&cards)
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(BnError::InvalidJoint("entries must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(BnError::InvalidJoint(format!("entries sum to {total}")));
        }
        Ok(Self { cards, probs })
    }

    /// Uniform draws on (0, 1], normalized. Almost surely faithful to nothing.
    pub fn random(cards: Vec<usize>, rng: &mut Rng) -> Result<Self, BnError> {
        let n = table_size(&cards);
        let raw: Vec<f64> = (0..n).map(|_| 1.0 - rng.uniform()).collect();
        let total: f64 = raw.iter().sum();
        Self::new(cards, raw.into_iter().map(|p| p / total).collect())
    }

    /// Random conditional tables along `bn`, multiplied out. Variables map to
    /// nodes by id.
    pub fn random_from_bn(bn: &Bn, cards: Vec<usize>, rng: &mut Rng) -> Result<Self, BnError> {
        check_cards(bn, &cards)?;
        let n = table_size(&cards);
        let mut probs = vec![1.0; n];
        let mut states = vec![0; cards.len()];
        for v in 0..bn.node_count() {
            let pa = bn.parents(v);
            let pa_cards: Vec<usize> = pa.iter().map(|&p| cards[p]).collect();
            let rows = table_size(&pa_cards);
            let mut cpt = Vec::with_capacity(rows * cards[v]);
            for _ in 0..rows {
                let raw: Vec<f64> = (0..cards[v]).map(|_| 1.0 - rng.uniform()).collect();
                let t: f64 = raw.iter().sum();
                cpt.extend(raw.into_iter().map(|p| p / t));
            }
            for (i, p) in probs.iter_mut().enumerate() {
                decode(i, &cards, &mut states);
                let row = encode(pa.iter().map(|&q| states[q]), pa_cards.iter().copied());
                *p *= cpt[row * cards[v] + states[v]];
            }
        }
        let total: f64 = probs.iter().sum();
        Self::new(cards, probs.into_iter().map(|p| p / total).collect())
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_vars(&self) -> usize {
        self.cards.len()
    }

    /// Marginal table over `vars`, indexed in the order given.
    pub fn marginal(&self, vars: &[usize]) -> Vec<f64> {
        let sub_cards: Vec<usize> = vars.iter().map(|&v| self.cards[v]).collect();
        let mut out = vec![0.0; table_size(&sub_cards)];
        let mut states = vec![0; self.cards.len()];
        for (i, &p) in self.probs.iter().enumerate() {
            decode(i, &self.cards, &mut states);
            out[encode(vars.iter().map(|&v| states[v]), sub_cards.iter().copied())] += p;
        }
        out
    }

    /// Exact check of `X ⟂ Y | Z` through `p(x,y,z) p(z) = p(x,z) p(y,z)`.
    pub fn independent(&self, q: &CiStatement) -> bool {
        let xyz: Vec<usize> = q.x.iter().chain(&q.y).chain(&q.z).copied().collect();
        let xz: Vec<usize> = q.x.iter().chain(&q.z).copied().collect();
        let yz: Vec<usize> = q.y.iter().chain(&q.z).copied().collect();
        let p_xyz = self.marginal(&xyz);
        let p_xz = self.marginal(&xz);
        let p_yz = self.marginal(&yz);
        let p_z = self.marginal(&q.z);
        let cards: Vec<usize> = xyz.iter().map(|&v| self.cards[v]).collect();
        let mut s = vec![0; xyz.len()];
        let (nx, ny) = (q.x.len(), q.y.len());
        (0..p_xyz.len()).all(|i| {
            decode(i, &cards, &mut s);
            let c = |range: &mut dyn Iterator<Item = usize>| {
                let idx: Vec<usize> = range.collect();
                encode(idx.iter().map(|&j| s[j]), idx.iter().map(|&j| cards[j]))
            };
            let ixz = c(&mut (0..nx).chain(nx + ny..xyz.len()));
            let iyz = c(&mut (nx..xyz.len()));
            let iz = c(&mut (nx + ny..xyz.len()));
            (p_xyz[i] * p_z[iz] - p_xz[ixz] * p_yz[iyz]).abs() <= PROB_TOL
        })
    }
}

fn check_cards(bn: &Bn, cards: &[usize]) -> Result<(), BnError> {
    if cards.len() != bn.node_count() {
        return Err(BnError::CardinalityMismatch {
            nodes: bn.node_count(),
            variables: cards.len(),
        });
    }
    Ok(())
}

/// Whether `p(x) = prod_i p(x_i | pa_i)` holds entry-wise within [`PROB_TOL`].
/// Conditionals on zero-probability parent states are taken as zero.
pub fn factorizes(joint: &DiscreteJoint, bn: &Bn) -> Result<bool, BnError> {
    check_cards(bn, joint.cards())?;
    let cards = joint.cards();
    let n = joint.num_vars();
    let tables: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .map(|v| {
            let pa = bn.parents(v).to_vec();
            let fam: Vec<usize> = pa.iter().copied().chain([v]).collect();
            (joint.marginal(&fam), joint.marginal(&pa))
        })
        .collect();
    let mut states = vec![0; n];
    for (i, &p) in joint.probs().iter().enumerate() {
        decode(i, cards, &mut states);
        let mut prod = 1.0;
        for (v, (fam, pa_marg)) in tables.iter().enumerate() {
            let pa = bn.parents(v);
            let ipa = encode(pa.iter().map(|&q| states[q]), pa.iter().map(|&q| cards[q]));
            let ifam = ipa * cards[v] + states[v];
            prod *= if pa_marg[ipa] > 0.0 {
                fam[ifam] / pa_marg[ipa]
            } else {
                0.0
            };
        }
        if (p - prod).abs() > PROB_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether every independence the graph implies holds in `joint`.
///
/// For each node `i` and conditioning set `Z`, the largest `Y` d-separated
/// from `i` given `Z` is tested jointly; these statements include the local
/// Markov ones and are implied by them, so the result agrees with
/// [`factorizes`].
pub fn is_imap(bn: &Bn, joint: &DiscreteJoint) -> Result<bool, BnError> {
    check_cards(bn, joint.cards())?;
    let n = bn.node_count();
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&v| v != i).collect();
        for mask in 0u32..(1 << others.len()) {
            let z: Vec<usize> = others
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            let mut y = Vec::new();
            for &j in others.iter().filter(|v| !z.contains(v)) {
                if d_separated(bn, &CiStatement::pair(i, j, &z)?)? {
                    y.push(j);
                }
            }
            if y.is_empty() {
                continue;
            }
            if !joint.independent(&CiStatement::new(&[i], &y, &z)?) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
