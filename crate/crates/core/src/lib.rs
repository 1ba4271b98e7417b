pub mod bots;
pub mod concentration;
pub mod ingest;
pub mod interest;
pub mod pipeline;
pub mod stats;
pub mod synth;
