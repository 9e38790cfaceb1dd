use serde::{Deserialize, Serialize};

use super::FlowError;

/// Which components feed the parameters of each scalar normalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Conditioner {
    /// Position `i` sees positions `0..i`.
    Autoregressive,
    /// Positions `< k - 1` use constants; positions `>= k - 1` see `0..k - 1`.
    /// `k` is 1-based and satisfies `1 < k <= dim`.
    Coupling { k: usize },
    /// Every position uses constants.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Normalizer {
    Affine,
    MonotonePwl { bins: usize },
}

impl Normalizer {
    /// Raw conditioner outputs consumed per component.
    pub fn param_count(&self) -> usize {
        match self {
            Normalizer::Affine => 2,
            Normalizer::MonotonePwl { bins } => *bins,
        }
    }
}

/// Reordering applied to the input of a step before its conditioner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Permutation {
    Identity,
    Reverse,
    /// 1-based source indices: position `j` takes input component `p[j]`.
    Explicit(Vec<usize>),
}

impl Permutation {
    /// 0-based gather order for dimension `dim`.
    pub fn order(&self, dim: usize) -> Vec<usize> {
        match self {
            Permutation::Identity => (0..dim).collect(),
            Permutation::Reverse => (0..dim).rev().collect(),
            Permutation::Explicit(p) => p.iter().map(|&i| i.wrapping_sub(1)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub conditioner: Conditioner,
    pub normalizer: Normalizer,
    pub permutation: Permutation,
}

/// Declarative flow architecture. Steps are listed in the density direction:
/// step 1 consumes the data vector, the last step produces the latent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub dim: usize,
    pub steps: Vec<StepSpec>,
}

/// Default coupling split: `ceil(d / 2)` unconditioned components.
pub fn default_coupling_k(dim: usize) -> usize {
    dim.div_ceil(2) + 1
}

impl FlowSpec {
    pub fn validate(&self) -> Result<(), FlowError> {
        let d = self.dim;
        if d == 0 {
            return Err(FlowError::InvalidSpec("dim must be at least 1".into()));
        }
        if self.steps.is_empty() {
            return Err(FlowError::InvalidSpec("flow needs at least one step".into()));
        }
        for (i, step) in self.steps.iter().enumerate() {
            let n = i + 1;
            if let Conditioner::Coupling { k } = step.conditioner {
                if k <= 1 || k > d {
                    return Err(FlowError::InvalidSpec(format!(
                        "step {n}: coupling split k={k} must satisfy 1 < k <= {d}"
                    )));
                }
            }
            if let Normalizer::MonotonePwl { bins } = step.normalizer {
                if bins < 2 {
                    return Err(FlowError::InvalidSpec(format!(
                        "step {n}: monotone normalizer needs at least 2 bins"
                    )));
                }
            }
            if let Permutation::Explicit(p) = &step.permutation {
                let mut seen = vec![false; d];
                let ok = p.len() == d
                    && p.iter().all(|&i| {
                        (1..=d).contains(&i) && !std::mem::replace(&mut seen[i - 1], true)
                    });
                if !ok {
                    return Err(FlowError::InvalidSpec(format!(
                        "step {n}: explicit permutation {p:?} is not a bijection on 1..={d}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, FlowError> {
        let spec: FlowSpec =
            serde_json::from_str(text).map_err(|e| FlowError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// `steps` coupling layers with the default split; the first step keeps
    /// the input order and every later step reverses it.
    pub fn coupling_stack(dim: usize, steps: usize, normalizer: Normalizer) -> Self {
        Self::stack(
            dim,
            steps,
            Conditioner::Coupling {
                k: default_coupling_k(dim),
            },
            normalizer,
        )
    }

    pub fn autoregressive_stack(dim: usize, steps: usize, normalizer: Normalizer) -> Self {
        Self::stack(dim, steps, Conditioner::Autoregressive, normalizer)
    }

    fn stack(dim: usize, steps: usize, conditioner: Conditioner, normalizer: Normalizer) -> Self {
        let steps = (0..steps)
            .map(|i| StepSpec {
                conditioner,
                normalizer,
                permutation: if i == 0 {
                    Permutation::Identity
                } else {
                    Permutation::Reverse
                },
            })
            .collect();
        Self { dim, steps }
    }

    /// Compact human-readable description, e.g. `d2 3x coupling(k=2)/affine`.
    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .steps
            .iter()
            .map(|s| {
                let c = match s.conditioner {
                    Conditioner::Autoregressive => "ar".to_string(),
                    Conditioner::Coupling { k } => format!("coupling(k={k})"),
                    Conditioner::Constant => "const".to_string(),
                };
                let n = match s.normalizer {
                    Normalizer::Affine => "affine".to_string(),
                    Normalizer::MonotonePwl { bins } => format!("pwl{bins}"),
                };
                let p = match &s.permutation {
                    Permutation::Identity => "id".to_string(),
                    Permutation::Reverse => "rev".to_string(),
                    Permutation::Explicit(p) => format!("{p:?}"),
                };
                format!("{p}>{c}/{n}")
            })
            .collect();
        format!("d{} [{}]", self.dim, parts.join(", "))
    }
}

/// Number of conditioning inputs for `pos` (0-based, permuted order), or
/// `None` when the component uses learned constants.
pub fn conditioning_inputs(conditioner: Conditioner, pos: usize) -> Option<usize> {
    match conditioner {
        Conditioner::Autoregressive => (pos > 0).then_some(pos),
        Conditioner::Coupling { k } => (pos + 1 >= k).then_some(k - 1),
        Conditioner::Constant => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_matches_wire_format() {
        let text = r#"{"dim": 4, "steps": [
            {"conditioner": "autoregressive", "normalizer": "affine", "permutation": "identity"},
            {"conditioner": {"coupling": {"k": 3}}, "normalizer": {"monotone_pwl": {"bins": 32}}, "permutation": "reverse"},
            {"conditioner": "constant", "normalizer": "affine", "permutation": {"explicit": [2, 1, 4, 3]}}
        ]}"#;
        let spec = FlowSpec::from_json(text).unwrap();
        assert_eq!(spec.steps[1].conditioner, Conditioner::Coupling { k: 3 });
        assert_eq!(spec.steps[1].normalizer, Normalizer::MonotonePwl { bins: 32 });
        assert_eq!(spec.steps[2].permutation.order(4), vec![1, 0, 3, 2]);
        let back = FlowSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
        let v: serde_json::Value = serde_json::from_str(&spec.to_json()).unwrap();
        assert_eq!(v["steps"][1]["conditioner"]["coupling"]["k"], 3);
        assert_eq!(v["steps"][0]["permutation"], "identity");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"dim": 2, "extra": 1, "steps": [
            {"conditioner": "constant", "normalizer": "affine", "permutation": "identity"}]}"#;
        assert!(matches!(FlowSpec::from_json(text), Err(FlowError::Parse(_))));
        let text = r#"{"dim": 2, "steps": [
            {"conditioner": {"coupling": {"k": 2, "j": 1}}, "normalizer": "affine", "permutation": "identity"}]}"#;
        assert!(FlowSpec::from_json(text).is_err());
        let text = r#"{"dim": 2, "steps": [
            {"conditioner": "constant", "normalizer": "affine", "permutation": "identity", "x": 0}]}"#;
        assert!(FlowSpec::from_json(text).is_err());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = FlowSpec::coupling_stack(4, 2, Normalizer::Affine);
        assert!(spec.validate().is_ok());
        spec.steps[0].conditioner = Conditioner::Coupling { k: 1 };
        assert!(spec.validate().is_err());
        spec.steps[0].conditioner = Conditioner::Coupling { k: 5 };
        assert!(spec.validate().is_err());
        spec.steps[0].conditioner = Conditioner::Coupling { k: 4 };
        spec.steps[0].permutation = Permutation::Explicit(vec![1, 1, 2, 3]);
        assert!(spec.validate().is_err());
        spec.steps[0].permutation = Permutation::Explicit(vec![0, 1, 2, 3]);
        assert!(spec.validate().is_err());
        assert!(FlowSpec { dim: 2, steps: vec![] }.validate().is_err());
    }

    #[test]
    fn default_split_matches_two_plus_two_at_d4() {
        assert_eq!(default_coupling_k(4), 3);
        assert_eq!(default_coupling_k(2), 2);
        assert_eq!(default_coupling_k(3), 3);
        let c = Conditioner::Coupling { k: 3 };
        let inputs: Vec<_> = (0..4).map(|p| conditioning_inputs(c, p)).collect();
        assert_eq!(inputs, vec![None, None, Some(2), Some(2)]);
        let a: Vec<_> = (0..3)
            .map(|p| conditioning_inputs(Conditioner::Autoregressive, p))
            .collect();
        assert_eq!(a, vec![None, Some(1), Some(2)]);
    }
}
