//! Transfer-learning evaluation of frozen DiscRE vectors: feature
//! construction, a one-vs-rest linear SVM, F1 metrics, stratified k-fold
//! cross-validation, attention statistics and a PCA projection.

mod attention;
mod cv;
mod features;
mod linear;
mod metrics;
mod project;

pub use attention::{attention_stats, AttentionStats, GroupSummary, WordAttention, WordGroup};
pub use cv::{assign_folds, kfold_cv, CvResult};
pub use features::{
    item_features, message_features, message_features_or_self_pair, pair_features, FeatureKind,
};
pub use linear::{train_linear, FeatureMatrix, LinearConfig, LinearModel};
pub use metrics::{f1_metrics, f1_score, ClassMetrics, MetricsReport};
pub use project::project_2d;
