use crate::error::{invalid_input, Error, Result};
use crate::features::FeatureMask;
use crate::harness::baseline::{sweep_masks, FeatureLearner};
use crate::harness::cv::{cross_validate, CvPlan, CvReport, NetworkLearner};
use crate::harness::task::{generate_task, SimSettings, Task};
use crate::model::{InputEncoding, ModelConfig};
use crate::simgen::LabeledDataset;
use std::fmt::{self, Write as _};
use std::str::FromStr;

/// A classifier arm: a network on one input encoding, or the feature baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Network(InputEncoding),
    Features,
}

impl Method {
    pub const HYBRID: Method = Method::Network(InputEncoding::ComplexHalfSpectrum);

    /// Row order of the simulation table.
    pub const TABLE: [Method; 8] = [
        Method::Features,
        Method::Network(InputEncoding::Phase),
        Method::Network(InputEncoding::Amplitude),
        Method::Network(InputEncoding::Time),
        Method::Network(InputEncoding::RealOnly),
        Method::Network(InputEncoding::ImagOnly),
        Method::Network(InputEncoding::ReImTwoChannel),
        Method::HYBRID,
    ];

    /// Arms of the AR(1) grid.
    pub const GRID: [Method; 4] = [
        Method::HYBRID,
        Method::Network(InputEncoding::Time),
        Method::Network(InputEncoding::Phase),
        Method::Features,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Network(InputEncoding::ComplexHalfSpectrum) => "hybrid",
            Method::Network(e) => e.name(),
            Method::Features => "features",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hybrid" | "complex" => Ok(Method::HYBRID),
            "features" | "feature" => Ok(Method::Features),
            other => other.parse::<InputEncoding>().map(Method::Network),
        }
    }
}

/// Everything besides the data that an experiment run needs.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub plan: CvPlan,
    /// Applied on top of each network's default configuration.
    pub model_overrides: Vec<(String, String)>,
    pub feature_template: FeatureLearner,
    pub masks: Vec<FeatureMask>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            plan: CvPlan::default(),
            model_overrides: Vec::new(),
            feature_template: FeatureLearner::new(FeatureMask::FULL),
            masks: FeatureMask::all().collect(),
        }
    }
}

impl RunSettings {
    pub fn model_config(&self, encoding: InputEncoding) -> Result<ModelConfig> {
        let mut cfg = ModelConfig::for_encoding(encoding, 2, 2);
        let unknown = cfg.apply_kv(self.model_overrides.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        if !unknown.is_empty() {
            return Err(Error::InvalidConfig(format!("unknown model keys: {}", unknown.join(", "))));
        }
        // Overrides may not change the arm's encoding.
        cfg.encoding = encoding;
        Ok(cfg)
    }
}

/// Cross-validates one method. For the feature baseline every mask is tried and the
/// best mean is returned.
pub fn run_method(task: &str, data: &LabeledDataset, method: Method, settings: &RunSettings) -> Result<CvReport> {
    match method {
        Method::Network(encoding) => {
            let learner = NetworkLearner::new(settings.model_config(encoding)?);
            cross_validate(task, data, &learner, &settings.plan)
        }
        Method::Features => {
            let sweep = sweep_masks(task, data, &settings.feature_template, &settings.masks, &settings.plan)?;
            sweep
                .best()
                .map(|(_, r)| r.clone())
                .ok_or_else(|| invalid_input!("no feature masks to evaluate"))
        }
    }
}

/// Mean accuracy per method over the AR(1) parameter grid.
#[derive(Debug, Clone)]
pub struct Sim1Grid {
    pub beta1s: Vec<f64>,
    pub vars: Vec<f64>,
    pub methods: Vec<Method>,
    /// `means[m][i][j]` for method `m`, `beta1s[i]` and `vars[j]`.
    pub means: Vec<Vec<Vec<f64>>>,
    pub stds: Vec<Vec<Vec<f64>>>,
}

impl Sim1Grid {
    /// `a - b` elementwise.
    pub fn difference(&self, a: Method, b: Method) -> Option<Vec<Vec<f64>>> {
        let ia = self.methods.iter().position(|&m| m == a)?;
        let ib = self.methods.iter().position(|&m| m == b)?;
        Some(
            self.means[ia]
                .iter()
                .zip(&self.means[ib])
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
                .collect(),
        )
    }

    /// Long format: one row per method and cell, then hybrid-minus-other differences.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,method,beta1,noise_var,mean,std\n");
        for (m, method) in self.methods.iter().enumerate() {
            for (i, b) in self.beta1s.iter().enumerate() {
                for (j, v) in self.vars.iter().enumerate() {
                    let _ = writeln!(out, "accuracy,{method},{b:?},{v:?},{:?},{:?}", self.means[m][i][j], self.stds[m][i][j]);
                }
            }
        }
        for &other in self.methods.iter().filter(|&&m| m != Method::HYBRID) {
            if let Some(diff) = self.difference(Method::HYBRID, other) {
                for (i, b) in self.beta1s.iter().enumerate() {
                    for (j, v) in self.vars.iter().enumerate() {
                        let _ = writeln!(out, "difference,hybrid-{other},{b:?},{v:?},{:?},", diff[i][j]);
                    }
                }
            }
        }
        out
    }
}

/// Default grid axis: 0.1 to 0.9 in steps of 0.1.
pub fn default_grid_axis() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

pub fn run_sim1_grid(
    beta1s: &[f64],
    vars: &[f64],
    per_class: usize,
    methods: &[Method],
    settings: &RunSettings,
    seed: u64,
) -> Result<Sim1Grid> {
    if let Some(v) = beta1s.iter().chain(vars).find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(invalid_input!("grid values must lie in (0, 1), got {v}"));
    }
    let mut means = vec![vec![vec![f64::NAN; vars.len()]; beta1s.len()]; methods.len()];
    let mut stds = means.clone();
    for (i, &beta1) in beta1s.iter().enumerate() {
        for (j, &noise_var) in vars.iter().enumerate() {
            let sim = SimSettings {
                per_class: Some(per_class),
                beta1,
                noise_var,
                ..SimSettings::default()
            };
            let data = generate_task(Task::Sim1, &sim, crate::harness::derive_seed(seed, &[i as u64, j as u64]))?;
            let name = format!("sim1[beta1={beta1},var={noise_var}]");
            for (m, &method) in methods.iter().enumerate() {
                let report = run_method(&name, &data, method, settings)?;
                means[m][i][j] = report.mean;
                stds[m][i][j] = report.std;
            }
        }
    }
    Ok(Sim1Grid {
        beta1s: beta1s.to_vec(),
        vars: vars.to_vec(),
        methods: methods.to_vec(),
        means,
        stds,
    })
}

/// Accuracy per method (rows) and task (columns).
#[derive(Debug, Clone)]
pub struct Sim2Table {
    pub tasks: Vec<Task>,
    pub methods: Vec<Method>,
    pub reports: Vec<Vec<CvReport>>,
}

impl Sim2Table {
    pub fn report(&self, method: Method, task: Task) -> Option<&CvReport> {
        let m = self.methods.iter().position(|&x| x == method)?;
        let t = self.tasks.iter().position(|&x| x == task)?;
        Some(&self.reports[m][t])
    }

    /// One row per method, a mean and a std column per task.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for t in &self.tasks {
            let _ = write!(out, ",{t}_mean,{t}_std");
        }
        out.push('\n');
        for (m, method) in self.methods.iter().enumerate() {
            out.push_str(method.name());
            for r in &self.reports[m] {
                let _ = write!(out, ",{:?},{:?}", r.mean, r.std);
            }
            out.push('\n');
        }
        out
    }
}

pub fn run_sim2_table(tasks: &[Task], methods: &[Method], sim: &SimSettings, settings: &RunSettings, seed: u64) -> Result<Sim2Table> {
    if let Some(t) = tasks.iter().find(|t| t.erp().is_none()) {
        return Err(Error::InvalidTask(format!("{t} is not an event-related potential task")));
    }
    let mut reports = vec![Vec::with_capacity(tasks.len()); methods.len()];
    for &task in tasks {
        let data = generate_task(task, sim, seed)?;
        for (m, &method) in methods.iter().enumerate() {
            reports[m].push(run_method(task.name(), &data, method, settings)?);
        }
    }
    Ok(Sim2Table {
        tasks: tasks.to_vec(),
        methods: methods.to_vec(),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::TABLE {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }

    #[test]
    fn grid_rejects_out_of_range() {
        let r = run_sim1_grid(&[1.0], &[0.5], 10, &[Method::HYBRID], &RunSettings::default(), 0);
        assert!(r.is_err());
    }
}
