pub mod ingest;
pub mod metrics;
pub mod model;
pub mod numcore;
pub mod tokenizer;
pub mod trainer;
