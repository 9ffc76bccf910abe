pub mod corpus;
pub mod error;
pub mod graph;
pub mod influence;
pub mod metrics;
pub mod mining;
pub mod pipeline;
pub mod solver;
pub mod synthetic;
