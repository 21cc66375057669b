pub mod fabric;
pub mod runtime;
pub mod scenario;
pub mod spec;
pub mod workload;
