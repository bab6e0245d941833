//! Entities, events, the product graph and per-step snapshots.

pub mod adjacency;
pub mod dataset;
pub mod ingest;
pub mod kcore;
pub mod segment;
pub mod snapshot;
pub mod types;

pub use adjacency::{to_adjacency, AdjacencyIndex};
pub use dataset::{Dataset, DatasetStats};
pub use ingest::{
    export_registry, import_registry, ingest_events, ingest_events_with, ingest_product_graph,
    ingest_product_graph_with, ActionSchema, HeadPolicy, ProductGraph,
};
pub use kcore::k_core_filter;
pub use segment::{segment_time, segment_time_with, SegmentationMode, Split, TimeSegmentation};
pub use snapshot::{build_snapshots, EntityLists, SnapshotGraph};
pub use types::{
    EntityId, EntityKind, Event, EventLog, Registry, RelationId, RelationKind, StaticTriple,
};
