//! Dataset ingestion, tasks, cross-validation and experiment drivers.

mod baseline;
mod cv;
mod experiments;
mod task;
mod uci;

pub use baseline::{sweep_masks, FeatureLearner, FittedFeatures, MaskSweep};
pub use cv::{cross_validate, derive_seed, mean_std, thread_count, CvPlan, CvReport, FittedNetwork, FoldLearner, FoldRow, NetworkLearner};
pub use experiments::{default_grid_axis, run_method, run_sim1_grid, run_sim2_table, Method, RunSettings, Sim1Grid, Sim2Table};
pub use task::{generate_task, make_task, thin_per_class, SimSettings, Task};
pub use uci::{load_uci_csv, parse_uci_csv, UCI_CLASSES, UCI_FS, UCI_ROWS, UCI_SEGMENT_LEN};
