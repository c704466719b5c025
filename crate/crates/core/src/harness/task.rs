use crate::error::{Error, Result};
use crate::harness::cv::derive_seed;
use crate::simgen::{gen_erp, gen_sim1_dataset, ErpConfig, LabeledDataset, Location, Sim1Config, Theory};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    ZvsS,
    SvsNS,
    ZvsNvsS,
    ZvsFvsS,
    Sim1,
    ClassicalFixed,
    ClassicalRandom,
    PresetFixed,
    PresetRandom,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::ZvsS,
        Task::SvsNS,
        Task::ZvsNvsS,
        Task::ZvsFvsS,
        Task::Sim1,
        Task::ClassicalFixed,
        Task::ClassicalRandom,
        Task::PresetFixed,
        Task::PresetRandom,
    ];

    /// The four binary event-related potential tasks.
    pub const ERP: [Task; 4] = [Task::ClassicalFixed, Task::ClassicalRandom, Task::PresetFixed, Task::PresetRandom];

    pub fn name(self) -> &'static str {
        match self {
            Task::ZvsS => "zvss",
            Task::SvsNS => "svsns",
            Task::ZvsNvsS => "zvsnvss",
            Task::ZvsFvsS => "zvsfvss",
            Task::Sim1 => "sim1",
            Task::ClassicalFixed => "classical_fixed",
            Task::ClassicalRandom => "classical_random",
            Task::PresetFixed => "preset_fixed",
            Task::PresetRandom => "preset_random",
        }
    }

    /// Groups of recording classes forming each dense label, for the recorded-data tasks.
    pub fn groups(self) -> Option<Vec<(&'static str, Vec<&'static str>)>> {
        Some(match self {
            Task::ZvsS => vec![("Z", vec!["Z"]), ("S", vec!["S"])],
            Task::SvsNS => vec![("S", vec!["S"]), ("NS", vec!["Z", "O", "F", "N"])],
            Task::ZvsNvsS => vec![("Z", vec!["Z"]), ("N", vec!["N"]), ("S", vec!["S"])],
            Task::ZvsFvsS => vec![("Z", vec!["Z"]), ("F", vec!["F"]), ("S", vec!["S"])],
            _ => return None,
        })
    }

    pub fn needs_recordings(self) -> bool {
        self.groups().is_some()
    }

    pub fn erp(self) -> Option<(Theory, Location)> {
        match self {
            Task::ClassicalFixed => Some((Theory::Classical, Location::Fixed)),
            Task::ClassicalRandom => Some((Theory::Classical, Location::Random)),
            Task::PresetFixed => Some((Theory::PhaseReset, Location::Fixed)),
            Task::PresetRandom => Some((Theory::PhaseReset, Location::Random)),
            _ => None,
        }
    }

    fn index(self) -> u64 {
        Task::ALL.iter().position(|&t| t == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Task::ALL
            .into_iter()
            .find(|t| t.name().replace('_', "") == key)
            .ok_or_else(|| {
                let names: Vec<&str> = Task::ALL.iter().map(|t| t.name()).collect();
                Error::InvalidTask(format!("unknown task '{s}', expected one of {}", names.join(", ")))
            })
    }
}

/// Filters recorded data to the task's classes and relabels them densely.
pub fn make_task(data: &LabeledDataset, task: Task) -> Result<LabeledDataset> {
    let groups = task
        .groups()
        .ok_or_else(|| Error::InvalidTask(format!("{task} is simulated, not selected from recordings")))?;
    let mut mapping = vec![None; data.n_classes()];
    for (dense, (_, members)) in groups.iter().enumerate() {
        for name in members {
            let source = data
                .class_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::InvalidTask(format!("class {name} is not in the dataset")))?;
            mapping[source] = Some(dense);
        }
    }
    let (indices, labels): (Vec<usize>, Vec<usize>) = data
        .labels
        .iter()
        .enumerate()
        .filter_map(|(i, &l)| mapping[l].map(|d| (i, d)))
        .unzip();
    if indices.is_empty() {
        return Err(Error::InvalidTask(format!("{task} selects no samples")));
    }
    let mut out = data.subset(&indices);
    out.labels = labels;
    out.class_names = groups.iter().map(|(n, _)| n.to_string()).collect();
    if let Some(c) = out.class_counts().iter().position(|&c| c == 0) {
        return Err(Error::InvalidTask(format!("{task}: class {} has no samples", out.class_names[c])));
    }
    Ok(out)
}

/// Sizes and generator settings of the simulated tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    /// Samples per class; `None` uses 5000 for the ERP tasks and 500 for sim1.
    pub per_class: Option<usize>,
    pub beta1: f64,
    pub noise_var: f64,
    /// Overrides the generator's default weight.
    pub snr: Option<f64>,
    pub sim1: Sim1Config,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            per_class: None,
            beta1: 0.5,
            noise_var: 0.5,
            snr: None,
            sim1: Sim1Config::default(),
        }
    }
}

impl SimSettings {
    pub fn per_class_for(&self, task: Task) -> usize {
        self.per_class.unwrap_or(if task == Task::Sim1 { 500 } else { 5000 })
    }

    pub fn to_kv(&self) -> Vec<(String, String)> {
        vec![
            ("per_class".into(), self.per_class.map_or("default".into(), |p| p.to_string())),
            ("beta1".into(), format!("{:?}", self.beta1)),
            ("noise_var".into(), format!("{:?}", self.noise_var)),
            ("snr".into(), self.snr.map_or("default".into(), |s| format!("{s:?}"))),
        ]
    }
}

/// Generates a simulated task from `seed`.
pub fn generate_task(task: Task, settings: &SimSettings, seed: u64) -> Result<LabeledDataset> {
    let per_class = settings.per_class_for(task);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[task.index(), 0x5157]));
    if task == Task::Sim1 {
        return gen_sim1_dataset(settings.beta1, settings.noise_var, per_class, &settings.sim1, &mut rng);
    }
    let (theory, location) = task
        .erp()
        .ok_or_else(|| Error::InvalidTask(format!("{task} needs recorded data (--data)")))?;
    let mut cfg = ErpConfig::new(theory, location);
    if let Some(snr) = settings.snr {
        cfg.snr_weight = snr;
    }
    gen_erp(&cfg, per_class, per_class, &mut rng)
}

/// Keeps `1/factor` of every class, chosen by a seeded shuffle; order is preserved.
pub fn thin_per_class(data: &LabeledDataset, factor: usize, seed: u64) -> LabeledDataset {
    if factor <= 1 {
        return data.clone();
    }
    let mut keep = Vec::new();
    for class in 0..data.n_classes() {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == class).collect();
        members.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, &[class as u64, 0x7431])));
        let take = members.len().div_ceil(factor);
        keep.extend_from_slice(&members[..take]);
    }
    keep.sort_unstable();
    data.subset(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::Signal;

    fn toy_recordings() -> LabeledDataset {
        let labels: Vec<usize> = (0..25).map(|i| i % 5).collect();
        let signals = labels.iter().map(|&l| Signal::new(vec![l as f64; 4], 1.0).unwrap()).collect();
        LabeledDataset::new(signals, labels, ["S", "F", "N", "O", "Z"].iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn names_parse() {
        for t in Task::ALL {
            assert_eq!(t.name().parse::<Task>().unwrap(), t);
        }
        assert_eq!("ZvsS".parse::<Task>().unwrap(), Task::ZvsS);
        assert_eq!("classical-fixed".parse::<Task>().unwrap(), Task::ClassicalFixed);
        assert!("zvso".parse::<Task>().is_err());
    }

    #[test]
    fn selection_and_relabeling() {
        let ds = toy_recordings();
        let t = make_task(&ds, Task::SvsNS).unwrap();
        assert_eq!(t.class_counts(), vec![5, 20]);
        let t = make_task(&ds, Task::ZvsNvsS).unwrap();
        assert_eq!(t.class_counts(), vec![5, 5, 5]);
        // Z recordings carry the constant 4.0 (label index 4).
        assert!(t.signals.iter().zip(&t.labels).all(|(s, &l)| (l == 0) == (s.samples()[0] == 4.0)));
        assert!(make_task(&ds, Task::Sim1).is_err());
    }

    #[test]
    fn thinning_keeps_classes() {
        let ds = toy_recordings();
        let thin = thin_per_class(&ds, 2, 0);
        assert_eq!(thin.class_counts(), vec![3; 5]);
    }
}
