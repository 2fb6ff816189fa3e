//! Scene metadata documents (TOML). See `docs/scene-metadata.md` for the
//! grammar.
//!
//! ```toml
//! scene_id = "birch_0001"
//! image_width_px = 224
//! image_height_px = 224
//!
//! [[trees]]
//! id = 1
//! species = "birch"
//! dbh_cm = 30.0
//! height_m = 20.0
//! canopy_diameter_m = 5.0
//! ground_x_m = 0.0
//! ground_y_m = 0.0
//! ```

use std::fmt::Write as _;
use std::path::Path;

use toml::{Table, Value};

use crate::allometry::SpeciesClass;
use crate::error::{Error, Result};
use crate::scene::{SceneMetadata, TreeRecord};

const SCENE_KEYS: [&str; 4] = ["scene_id", "image_width_px", "image_height_px", "trees"];
const TREE_KEYS: [&str; 7] = [
    "id",
    "species",
    "dbh_cm",
    "height_m",
    "canopy_diameter_m",
    "ground_x_m",
    "ground_y_m",
];

pub fn parse_scene_metadata(bytes: &[u8]) -> Result<SceneMetadata> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Metadata(format!("not UTF-8: {e}")))?;
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Metadata(e.to_string().trim_end().to_owned()))?;

    if let Some(k) = doc.keys().find(|k| !SCENE_KEYS.contains(&k.as_str())) {
        return Err(Error::Metadata(format!("unknown key `{k}`")));
    }
    let scene_id = match doc.get("scene_id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => return Err(Error::Metadata("`scene_id` must be a non-empty string".into())),
        None => return Err(Error::Metadata("missing field `scene_id`".into())),
    };
    let dim = |key: &str| -> Result<u32> {
        match doc.get(key) {
            Some(Value::Integer(n)) if *n > 0 && *n <= u32::MAX as i64 => Ok(*n as u32),
            Some(v) => Err(Error::Metadata(format!(
                "scene `{scene_id}`: `{key}` must be a positive integer, got {v}"
            ))),
            None => Err(Error::Metadata(format!("scene `{scene_id}`: missing field `{key}`"))),
        }
    };
    let image_width_px = dim("image_width_px")?;
    let image_height_px = dim("image_height_px")?;

    let trees = match doc.get("trees") {
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, item)| parse_tree(&scene_id, i, item))
            .collect::<Result<Vec<_>>>()?,
        Some(_) => {
            return Err(Error::Metadata(format!(
                "scene `{scene_id}`: `trees` must be an array of tables"
            )))
        }
        None => Vec::new(),
    };
    let scene = SceneMetadata {
        scene_id,
        image_width_px,
        image_height_px,
        trees,
    };
    scene.validate().map_err(|e| match e {
        Error::EmptyScene => Error::Metadata(format!("scene `{}` has no trees", scene.scene_id)),
        Error::InvalidAttribute {
            field,
            value,
            tree_id,
        } => Error::Metadata(format!(
            "scene `{}`: tree {}: invalid `{field}` = {value}",
            scene.scene_id,
            tree_id.unwrap_or(0)
        )),
        other => other,
    })?;
    Ok(scene)
}

fn parse_tree(scene_id: &str, position: usize, item: &Value) -> Result<TreeRecord> {
    let err = |what: String| Error::Metadata(format!("scene `{scene_id}`: tree #{position}: {what}"));
    let table = item
        .as_table()
        .ok_or_else(|| err("expected a table".into()))?;
    if let Some(k) = table.keys().find(|k| !TREE_KEYS.contains(&k.as_str())) {
        return Err(err(format!("unknown key `{k}`")));
    }
    let id = match table.get("id") {
        Some(Value::Integer(n)) if *n >= 1 && *n <= u32::MAX as i64 => *n as u32,
        Some(v) => return Err(err(format!("`id` must be an integer >= 1, got {v}"))),
        None => return Err(err("missing field `id`".into())),
    };
    let err = |what: String| {
        Error::Metadata(format!("scene `{scene_id}`: tree {id} (#{position}): {what}"))
    };
    let species = match table.get("species") {
        Some(Value::String(s)) => s.parse::<SpeciesClass>().map_err(|e| err(e.to_string()))?,
        Some(v) => return Err(err(format!("`species` must be a string, got {v}"))),
        None => return Err(err("missing field `species`".into())),
    };
    let num = |key: &str| -> Result<f64> {
        match table.get(key) {
            Some(Value::Float(f)) => Ok(*f),
            Some(Value::Integer(n)) => Ok(*n as f64),
            Some(v) => Err(err(format!("`{key}` must be a number, got {v}"))),
            None => Err(err(format!("missing field `{key}`"))),
        }
    };
    let tree = TreeRecord {
        id,
        species,
        dbh_cm: num("dbh_cm")?,
        height_m: num("height_m")?,
        canopy_diameter_m: num("canopy_diameter_m")?,
        ground_x_m: num("ground_x_m")?,
        ground_y_m: num("ground_y_m")?,
    };
    tree.validate().map_err(|e| match e {
        Error::InvalidAttribute { field, value, .. } => {
            err(format!("invalid attribute `{field}` = {value}"))
        }
        other => other,
    })?;
    Ok(tree)
}

/// Canonical text form. Floats use the shortest representation that parses
/// back to the same value.
pub fn serialize_scene_metadata(scene: &SceneMetadata) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scene_id = {}", Value::String(scene.scene_id.clone()));
    let _ = writeln!(out, "image_width_px = {}", scene.image_width_px);
    let _ = writeln!(out, "image_height_px = {}", scene.image_height_px);
    for t in &scene.trees {
        let _ = writeln!(out, "\n[[trees]]");
        let _ = writeln!(out, "id = {}", t.id);
        let _ = writeln!(out, "species = \"{}\"", t.species);
        for (key, v) in [
            ("dbh_cm", t.dbh_cm),
            ("height_m", t.height_m),
            ("canopy_diameter_m", t.canopy_diameter_m),
            ("ground_x_m", t.ground_x_m),
            ("ground_y_m", t.ground_y_m),
        ] {
            let _ = writeln!(out, "{key} = {v:?}");
        }
    }
    out
}

pub fn read_scene_metadata(path: impl AsRef<Path>) -> Result<SceneMetadata> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_scene_metadata(&bytes)
}

pub fn write_scene_metadata(path: impl AsRef<Path>, scene: &SceneMetadata) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_scene_metadata(scene)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allometry::WoodDensity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TWO_TREES: &str = r#"
scene_id = "minimal"
image_width_px = 224
image_height_px = 160

[[trees]]
id = 1
species = "birch"
dbh_cm = 30
height_m = 20.5
canopy_diameter_m = 4.0
ground_x_m = 0.0
ground_y_m = 0.0

[[trees]]
id = 2
species = "broadleaf"
dbh_cm = 15.0
height_m = 10.0
canopy_diameter_m = 3.0
ground_x_m = 10.0
ground_y_m = 20.0
"#;

    #[test]
    fn minimal_document() {
        let s = parse_scene_metadata(TWO_TREES.as_bytes()).unwrap();
        assert_eq!(s.scene_id, "minimal");
        assert_eq!((s.image_width_px, s.image_height_px), (224, 160));
        assert_eq!(s.trees.len(), 2);
        assert_eq!(s.trees[0].dbh_cm, 30.0);
        assert_eq!(s.trees[1].species, SpeciesClass::Broadleaf);
    }

    fn expect_msg(doc: &str, needle: &str) {
        match parse_scene_metadata(doc.as_bytes()) {
            Err(Error::Metadata(msg)) => assert!(msg.contains(needle), "{msg}"),
            other => panic!("expected metadata error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_documents_name_the_tree() {
        expect_msg(&TWO_TREES.replace("dbh_cm = 30", "dbh_cm = 0"), "tree 1");
        expect_msg(&TWO_TREES.replace("dbh_cm = 30", "dbh_cm = 0"), "dbh_cm");
        expect_msg(&TWO_TREES.replace("dbh_cm = 15.0\n", ""), "missing field `dbh_cm`");
        expect_msg(&TWO_TREES.replace("id = 2", "id = 1"), "duplicate tree id 1");
        expect_msg(&TWO_TREES.replace("height_m = 10.0", "height_m = -2.0"), "tree 2");
        expect_msg(&TWO_TREES.replace("\"broadleaf\"", "\"oak\""), "unknown species");
        expect_msg(&TWO_TREES.replace("image_width_px = 224\n", ""), "image_width_px");
        expect_msg(&TWO_TREES.replace("ground_y_m = 20.0", "ground_y_m = 20.0\nfoo = 1"), "unknown key");
        expect_msg("scene_id = \"x\"\nimage_width_px = 4\nimage_height_px = 4\n", "no trees");
        assert!(parse_scene_metadata(b"\xff\xfe").is_err());
        assert!(parse_scene_metadata(b"scene_id = ").is_err());
    }

    #[test]
    fn hundred_tree_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let trees = (1..=100)
            .map(|id| TreeRecord {
                id,
                species: match id % 3 {
                    0 => SpeciesClass::Birch,
                    1 => SpeciesClass::Broadleaf,
                    _ => SpeciesClass::Custom(
                        WoodDensity::new(rng.random_range(0.3..0.9)).unwrap(),
                    ),
                },
                dbh_cm: rng.random_range(5.0..80.0),
                height_m: rng.random_range(2.0..40.0),
                canopy_diameter_m: rng.random_range(0.0..10.0),
                ground_x_m: rng.random_range(-1e3..1e3),
                ground_y_m: rng.random_range(-1e-6..1e-6),
            })
            .collect();
        let scene = SceneMetadata::new("scene \"quoted\" \\ id", 640, 480, trees).unwrap();
        let text = serialize_scene_metadata(&scene);
        let back = parse_scene_metadata(text.as_bytes()).unwrap();
        assert_eq!(back, scene);
        assert_eq!(serialize_scene_metadata(&back), text);
    }
}
