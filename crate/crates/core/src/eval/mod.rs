//! Dataset ingestion, metrics, bag-of-words baselines and reports.

mod baseline;
mod data;
mod metrics;
mod predictions;
mod report;

pub use baseline::{bow_baseline, nbow, Ridge, TfIdf, Weighting, RIDGE_LAMBDA};
pub use data::{
    load_ec, load_eireg, load_texts, parse_ec, parse_eireg, parse_texts, split_dev, write_ec, write_eireg, Annotation, EiregLoad, TweetRecord,
};
pub use metrics::{binarize, multilabel_metrics, pearson, MultiLabelScores, THRESHOLD};
pub use predictions::Predictions;
pub use report::{fingerprint, EvalReport, Metric};
