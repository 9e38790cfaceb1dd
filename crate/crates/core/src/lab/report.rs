use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiments::ExperimentConfig;
use super::grid::DensityGrid;
use super::stats::NormalityStats;
use super::targets::ToyTarget;
use super::LabError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One trained configuration. NLLs are in nats per sample; `None` when the
/// run diverged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub seed: u64,
    pub label: String,
    pub steps: usize,
    pub spec: String,
    pub train_nll: Option<f64>,
    pub val_nll: Option<f64>,
    pub test_nll: Option<f64>,
    pub status: String,
}

impl ConfigResult {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub label: String,
    pub steps: usize,
    pub mean_test_nll: Option<f64>,
    pub sd_test_nll: Option<f64>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonUniversalRow {
    pub seed: u64,
    pub marginal_nll: Option<f64>,
    pub chain_second_difference: Option<f64>,
    pub mi: Option<f64>,
    pub mi_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonUniversalSummary {
    pub component: usize,
    pub separation: f64,
    pub depth: usize,
    /// Mean test NLL of the chain flow's marginal on the bimodal component.
    pub marginal_nll: Option<f64>,
    /// Analytic NLL of the best single Gaussian for that component.
    pub gaussian_fit_nll: f64,
    /// Mean estimated MI between the full flow's two components.
    pub mi: Option<f64>,
    /// Mean MI estimate on independent target samples of the same size.
    pub mi_floor: f64,
    pub per_seed: Vec<NonUniversalRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityRecord {
    pub seed: u64,
    pub label: String,
    pub component: usize,
    pub stats: Option<NormalityStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub target: ToyTarget,
    pub seeds: Vec<u64>,
    pub config: ExperimentConfig,
    pub configs: Vec<ConfigResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ladder: Vec<LadderRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonuniversal: Option<NonUniversalSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub normality: Vec<NormalityRecord>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::InvalidInput(format!("report: {e}")))
    }

    /// One row per configuration.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.configs {
            w.serialize(c).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn configs_from_csv(text: &str) -> Result<Vec<ConfigResult>, LabError> {
        csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| LabError::InvalidInput(format!("report csv: {e}")))
    }

    pub fn diverged(&self) -> Vec<&ConfigResult> {
        self.configs.iter().filter(|c| !c.ok()).collect()
    }

    pub fn ladder_row(&self, label: &str) -> Option<&LadderRow> {
        self.ladder.iter().find(|r| r.label == label)
    }
}

/// Timing and host details, kept apart from the scientific outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub threads: usize,
    pub total_wall_seconds: f64,
    pub jobs: Vec<JobTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobTiming {
    pub seed: u64,
    pub label: String,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub name: String,
    pub grid: DensityGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub meta: RunMeta,
    pub panels: Vec<Panel>,
}

fn io_err(path: &Path, e: std::io::Error) -> LabError {
    LabError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

impl ExperimentOutput {
    /// Writes `<name>_report.json`, `<name>_report.csv`, `<name>_meta.json`
    /// and a `.pgm` / `.csv` pair per panel. Returns the paths written.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<String>, LabError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let name = &self.report.experiment;
        let mut written = Vec::new();
        let mut put = |file: String, bytes: Vec<u8>| -> Result<(), LabError> {
            let p = dir.join(&file);
            fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
            written.push(p.display().to_string());
            Ok(())
        };
        put(format!("{name}_report.json"), self.report.to_json().into_bytes())?;
        put(format!("{name}_report.csv"), self.report.to_csv().into_bytes())?;
        let meta = serde_json::to_string_pretty(&self.meta).expect("meta serializes");
        put(format!("{name}_meta.json"), meta.into_bytes())?;
        for panel in &self.panels {
            let mut pgm = Vec::new();
            panel.grid.write_pgm(&mut pgm).expect("in-memory write");
            put(format!("{}.pgm", panel.name), pgm)?;
            let mut csv = Vec::new();
            panel.grid.write_csv(&mut csv).expect("in-memory write");
            put(format!("{}.csv", panel.name), csv)?;
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> ExperimentReport {
        ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: "capacity".into(),
            target: ToyTarget::EightGaussians,
            seeds: vec![1, 2, 3],
            config: ExperimentConfig::default(),
            configs: vec![
                ConfigResult {
                    seed: 1,
                    label: "K=1".into(),
                    steps: 1,
                    spec: "d2 [coupling(k=2)/affine/identity]".into(),
                    train_nll: Some(2.718281828459045),
                    val_nll: Some(0.1 + 0.2),
                    test_nll: Some(-1e-300),
                    status: "ok".into(),
                },
                ConfigResult {
                    seed: 1,
                    label: "universal".into(),
                    steps: 2,
                    spec: "x".into(),
                    train_nll: None,
                    val_nll: None,
                    test_nll: None,
                    status: "diverged: non-finite gradient".into(),
                },
            ],
            ladder: vec![LadderRow {
                label: "K=1".into(),
                steps: 1,
                mean_test_nll: Some(3.0),
                sd_test_nll: None,
                runs: 1,
            }],
            nonuniversal: None,
            normality: vec![],
        }
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let r = sample_report();
        assert_eq!(ExperimentReport::from_json(&r.to_json()).unwrap(), r);
        assert_eq!(r.diverged().len(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let r = sample_report();
        let csv = r.to_csv();
        assert!(csv.starts_with("seed,label,steps,spec,train_nll,val_nll,test_nll,status\n"));
        assert_eq!(ExperimentReport::configs_from_csv(&csv).unwrap(), r.configs);
    }
}
