//! Oracle runs used to fix the capacity-ladder thresholds. Seeds here are
//! disjoint from the ones the acceptance suite uses.
//!
//! cargo run --release -p flowbn --example calibrate -- [epochs] [n_train] [hidden] [steps] [lr] [batch] [seeds] [flat|cosine]

use flowbn::lab::{capacity_ladder, ExperimentConfig, ToyTarget};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: usize| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let mut cfg = ExperimentConfig {
        epochs: arg(0, 60),
        n_train: arg(1, 10_000),
        hidden: vec![arg(2, 64); 2],
        batch_size: arg(5, 256),
        universal: args.get(3).is_none(),
        cosine_decay: args.get(7).is_none_or(|s| s != "flat"),
        ..ExperimentConfig::default()
    };
    if let Some(lr) = args.get(4).and_then(|s| s.parse().ok()) {
        cfg.lr = lr;
    }
    let steps: Vec<usize> = args
        .get(3)
        .map(|s| s.split(',').filter_map(|t| t.parse().ok()).collect())
        .unwrap_or_else(|| vec![1, 2, 3, 4, 5]);
    let seeds: Vec<u64> = (100..100 + arg(6, 5) as u64).collect();
    let out = capacity_ladder(ToyTarget::EightGaussians, &steps, &seeds, &cfg, 1)
        .expect("ladder runs");
    for row in &out.report.ladder {
        println!(
            "{:>10} mean={:.4} sd={:.4}",
            row.label,
            row.mean_test_nll.unwrap_or(f64::NAN),
            row.sd_test_nll.unwrap_or(f64::NAN)
        );
    }
    for c in &out.report.configs {
        println!("seed={} {} test={:?} {}", c.seed, c.label, c.test_nll, c.status);
    }
    for j in &out.meta.jobs {
        println!("time seed={} {} {:.1}s", j.seed, j.label, j.wall_seconds);
    }
    println!("total {:.1}s", out.meta.total_wall_seconds);
}
