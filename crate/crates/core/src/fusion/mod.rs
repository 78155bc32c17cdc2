//! Feature fusion and the boosted-tree intensity regressor built on it.

mod features;
mod gbt;

pub use features::{fuse, ColumnGroup, FeatureSet, Fused, FusionManifest};
pub use gbt::{GbtModel, GbtParams, Node, Tree};
