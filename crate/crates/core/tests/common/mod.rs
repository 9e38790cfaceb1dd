#![allow(dead_code)]

use flowbn::bn::Bn;
use flowbn::flows::{Conditioner, FlowModel, FlowSpec, Normalizer, Permutation, StepSpec};
use flowbn::numcore::{Matrix, Rng};

pub const PWL_BINS: usize = 8;

pub fn random_permutation(rng: &mut Rng, dim: usize) -> Permutation {
    match rng.below(3) {
        0 => Permutation::Identity,
        1 => Permutation::Reverse,
        _ => {
            let mut p: Vec<usize> = (1..=dim).collect();
            rng.shuffle(&mut p);
            Permutation::Explicit(p)
        }
    }
}

pub fn random_conditioner(rng: &mut Rng, dim: usize) -> Conditioner {
    if dim < 2 {
        return Conditioner::Autoregressive;
    }
    if rng.below(2) == 0 {
        Conditioner::Autoregressive
    } else {
        Conditioner::Coupling {
            k: 2 + rng.below(dim - 1),
        }
    }
}

pub fn random_normalizer(rng: &mut Rng) -> Normalizer {
    if rng.below(2) == 0 {
        Normalizer::Affine
    } else {
        Normalizer::MonotonePwl { bins: PWL_BINS }
    }
}

pub fn random_spec(rng: &mut Rng, dim: usize, steps: usize, normalizer: Option<Normalizer>) -> FlowSpec {
    let steps = (0..steps)
        .map(|_| StepSpec {
            conditioner: random_conditioner(rng, dim),
            normalizer: normalizer.unwrap_or_else(|| random_normalizer(rng)),
            permutation: random_permutation(rng, dim),
        })
        .collect();
    FlowSpec { dim, steps }
}

pub fn random_model(spec: FlowSpec, hidden: &[usize], rng: &mut Rng, scale: f64) -> FlowModel {
    let mut m = FlowModel::new(spec, hidden, rng).unwrap();
    m.perturb(rng, scale);
    m
}

pub fn normal_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.normal()).collect()
}

pub fn normal_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, normal_vec(rng, rows * cols)).unwrap()
}

/// Central differences, `out[i][j] = d f_i / d x_j`.
pub fn fd_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut a = x.to_vec();
        let mut b = x.to_vec();
        a[j] += h;
        b[j] -= h;
        let (fa, fb) = (f(&a), f(&b));
        cols.push(fa.iter().zip(&fb).map(|(p, q)| (p - q) / (2.0 * h)).collect::<Vec<_>>());
    }
    (0..cols[0].len()).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

/// Finite-difference Jacobian that refuses points sitting on a kink of a
/// piecewise-linear normalizer: estimates at `h` and `h / 2` must agree.
pub fn smooth_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> Option<Vec<Vec<f64>>> {
    let a = fd_jacobian(f, x, 1e-5);
    let b = fd_jacobian(f, x, 5e-6);
    let agree = a.iter().flatten().zip(b.iter().flatten()).all(|(p, q)| (p - q).abs() <= 1e-6 * (1.0 + p.abs()));
    agree.then_some(a)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    d
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||a - b|| / ||b||`.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    norm(&diff) / norm(b).max(f64::MIN_POSITIVE)
}

/// Central-difference gradient of the mean NLL, or `None` when halving the
/// step changes the estimate (a parameter move crossed a kink).
pub fn fd_nll_gradient(model: &FlowModel, batch: &Matrix) -> Option<Vec<f64>> {
    let p0 = model.params();
    let at = |h: f64| {
        let mut m = model.clone();
        let mut g = vec![0.0; p0.len()];
        for i in 0..p0.len() {
            let mut p = p0.clone();
            p[i] = p0[i] + h;
            m.set_params(&p).unwrap();
            let up = m.mean_nll(batch).unwrap();
            p[i] = p0[i] - h;
            m.set_params(&p).unwrap();
            let down = m.mean_nll(batch).unwrap();
            g[i] = (up - down) / (2.0 * h);
        }
        g
    };
    let a = at(1e-5);
    let b = at(5e-6);
    (rel_diff(&a, &b) < 1e-6).then_some(a)
}

/// Random DAG whose edges respect a shuffled node order.
pub fn random_dag(rng: &mut Rng, n: usize, p: f64) -> Bn {
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.uniform() < p {
                edges.push((order[i], order[j]));
            }
        }
    }
    Bn::from_edges(n, &edges).unwrap()
}

/// DAG on `n` nodes from a bitmask over the pairs `i < j` in lexicographic order.
pub fn dag_from_mask(n: usize, mask: u64) -> Bn {
    let mut edges = Vec::new();
    let mut bit = 0;
    for i in 0..n {
        for j in i + 1..n {
            if mask >> bit & 1 == 1 {
                edges.push((i, j));
            }
            bit += 1;
        }
    }
    Bn::from_edges(n, &edges).unwrap()
}

pub fn labelled_edges(bn: &Bn, bijective: bool) -> Vec<(String, String)> {
    let mut v: Vec<_> = bn
        .edges()
        .iter()
        .filter(|e| e.bijective == bijective)
        .map(|e| (bn.nodes()[e.from].label.clone(), bn.nodes()[e.to].label.clone()))
        .collect();
    v.sort();
    v
}

pub fn pairs(list: &[(&str, &str)]) -> Vec<(String, String)> {
    let mut v: Vec<_> = list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    v.sort();
    v
}

pub fn affine_step(conditioner: Conditioner, permutation: Permutation) -> StepSpec {
    StepSpec {
        conditioner,
        normalizer: Normalizer::Affine,
        permutation,
    }
}

pub fn fig1a_spec() -> FlowSpec {
    FlowSpec {
        dim: 4,
        steps: vec![affine_step(Conditioner::Autoregressive, Permutation::Identity)],
    }
}

pub fn fig1b_spec() -> FlowSpec {
    FlowSpec {
        dim: 4,
        steps: vec![affine_step(Conditioner::Coupling { k: 3 }, Permutation::Identity)],
    }
}

pub fn fig2_spec() -> FlowSpec {
    FlowSpec {
        dim: 4,
        steps: vec![
            affine_step(Conditioner::Coupling { k: 3 }, Permutation::Identity),
            affine_step(Conditioner::Coupling { k: 3 }, Permutation::Reverse),
        ],
    }
}

pub fn fig3_spec() -> FlowSpec {
    FlowSpec::coupling_stack(2, 3, Normalizer::Affine)
}

/// Directed edges of the three-step 2D chain. The drawing's arrows leave the
/// previous layer; each source is replaced by its bijective successor.
pub fn fig3_directed() -> Vec<(String, String)> {
    pairs(&[("u1_1", "u1_2"), ("u2_2", "u2_1"), ("x1", "x2")])
}

pub fn fig3_bijective() -> Vec<(String, String)> {
    pairs(&[
        ("z1", "u1_1"),
        ("z2", "u1_2"),
        ("u1_1", "u2_1"),
        ("u1_2", "u2_2"),
        ("u2_1", "x1"),
        ("u2_2", "x2"),
    ])
}

pub fn fig2_directed() -> Vec<(String, String)> {
    pairs(&[
        ("u1_3", "u1_1"),
        ("u1_3", "u1_2"),
        ("u1_4", "u1_1"),
        ("u1_4", "u1_2"),
        ("x1", "x3"),
        ("x1", "x4"),
        ("x2", "x3"),
        ("x2", "x4"),
    ])
}

pub fn fig2_bijective() -> Vec<(String, String)> {
    let mut v = Vec::new();
    for i in 1..=4 {
        v.push((format!("z{i}"), format!("u1_{i}")));
        v.push((format!("u1_{i}"), format!("x{i}")));
    }
    v.sort();
    v
}

pub fn fig1a_directed() -> Vec<(String, String)> {
    pairs(&[("x1", "x2"), ("x1", "x3"), ("x1", "x4"), ("x2", "x3"), ("x2", "x4"), ("x3", "x4")])
}

pub fn fig1b_directed() -> Vec<(String, String)> {
    pairs(&[("x1", "x3"), ("x1", "x4"), ("x2", "x3"), ("x2", "x4")])
}

/// Fresh scratch directory under the system temp dir.
pub fn scratch_dir(tag: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("flowbn-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}
