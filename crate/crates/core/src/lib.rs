pub mod hashing;
pub mod jsonl;
pub mod llm;
pub mod num;
pub mod parallel;
pub mod reply;
pub mod template;
pub mod atelier;
pub mod inspector;
pub mod forge;
pub mod metrics;
pub mod stats;
pub mod dataset;
pub mod proofstand;
pub mod fixtures;
pub mod pipeline;

/// Double-precision instantiations of the generic numeric code.
pub type MetricScore = metrics::MetricScore<f64>;
pub type CorpusScores = metrics::CorpusScores<f64>;
pub type Aggregate = metrics::Aggregate<f64>;
pub type CorrelationMatrix = stats::CorrelationMatrix<f64>;
pub type ModelRow = stats::ModelRow<f64>;
