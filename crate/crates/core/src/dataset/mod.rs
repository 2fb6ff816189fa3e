//! On-disk inputs: scene metadata, instance-map PNGs and sample manifests.

pub mod instance;
pub mod manifest;
pub mod metadata;

pub use instance::{decode_instance_map, read_instance_map, ColorIndexTable};
pub use manifest::{
    filter_samples, read_manifest, split_dataset, write_manifest, DroppedSample, SampleRecord,
    Split, MANIFEST_HEADER,
};
pub use metadata::{parse_scene_metadata, read_scene_metadata, serialize_scene_metadata};
