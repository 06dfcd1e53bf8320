//! Dataset ingestion and preparation.

mod graphs;
mod idx;
mod images;

pub use graphs::{
    adjacency_from_mask, all_graphs, edge_list, expand_splits, graph_state, is_connected,
    make_graph_splits, permute_adjacency, sample_graph, Adjacency, GraphCase, GraphSample,
    GraphSplits, SplitOptions, SplitSamples,
};
pub use idx::{load_idx, parse_idx_images, parse_idx_labels, IdxImages};
pub use images::{angle_embed, binary_image_samples, downsample, downsample_4x4, ImageSample};
