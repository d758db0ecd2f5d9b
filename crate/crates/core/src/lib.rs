pub mod baseline;
pub mod error;
pub mod estimator;
pub mod generate;
pub mod graph;
pub mod oracle;
pub mod rank;
pub mod reference;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use estimator::{estimate_vc, EstimateConfig, EstimateReport, Mode};
pub use generate::{Family, GenSpec};
pub use graph::{parse_graph, GraphAccess, MultiGraph, QueryStats, Slot, Vertex};
pub use oracle::{OracleContext, OracleStats};
pub use rank::{EdgeKey, RankEngine, RankValue};
