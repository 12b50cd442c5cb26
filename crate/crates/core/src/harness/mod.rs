//! Experiment protocols, the FNN baseline, scoring, PCA export and reports.

mod fnn;
mod metrics;
mod pca;
mod protocol;
mod report;
mod spec;

pub use fnn::{fnn_finetune, fnn_new, fnn_predict, fnn_probs, last_hidden, train_classifier, FNN_HIDDEN};
pub use metrics::{uar, ConfusionMatrix};
pub use pca::{pca, pca_export, symmetric_eigen, write_pca_csv, Pca, PcaRow};
pub use protocol::{
    audit_plans, derive_seed, plan_trials, pretrain_siamese, run_experiment, run_few_shot, run_in_domain,
    run_on_data, run_out_of_domain, AuditSummary, ExperimentData, ExperimentReport, TrialPlan, TrialResult,
};
pub use report::{
    build_report, read_trials, summarize, trial_rows, write_report, write_summary, write_trials, SummaryRow,
    TrialRow, SUMMARY_FILE, TRIALS_FILE,
};
pub use spec::{parse_shots, DataSpec, ExperimentSpec, Hyper, Method};
