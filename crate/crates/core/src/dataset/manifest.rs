use std::path::Path;

use super::{Dataset, DatasetError, DrivingSample};
use crate::presets::Behavior;

/// Column order written by [`save_manifest`].
pub const MANIFEST_HEADER: [&str; 8] = [
    "timestamp", "center", "left", "right", "steering", "throttle", "brake", "speed",
];

/// Optional sidecar written next to a collected manifest.
const META_FILE: &str = "collection.json";

/// Read a demonstration manifest (UTF-8 CSV with a header row).
///
/// Frame paths are kept as written (relative to the manifest directory) and
/// are not opened here. An empty `left`/`right` cell means the frame is absent.
/// If a `collection.json` sidecar with a `behavior` field sits next to the
/// manifest, the dataset is tagged with it.
pub fn load_manifest(path: &Path) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut col = [0usize; 8];
    for (i, name) in MANIFEST_HEADER.iter().enumerate() {
        col[i] = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))?;
    }

    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| DatasetError::Row {
            row,
            message: e.to_string(),
        })?;
        let field = |k: usize| record.get(col[k]).unwrap_or("");
        let num = |k: usize| -> Result<f64, DatasetError> {
            field(k).parse::<f64>().map_err(|_| DatasetError::Row {
                row,
                message: format!("{} '{}' is not a number", MANIFEST_HEADER[k], field(k)),
            })
        };
        let optional = |k: usize| {
            let v = field(k);
            (!v.is_empty()).then(|| v.to_string())
        };
        let sample = DrivingSample {
            timestamp: num(0)?,
            center: field(1).to_string(),
            left: optional(2),
            right: optional(3),
            steering: num(4)? as f32,
            throttle: num(5)? as f32,
            brake: num(6)? as f32,
            speed: num(7)? as f32,
        };
        sample
            .validate()
            .map_err(|message| DatasetError::Row { row, message })?;
        samples.push(sample);
    }

    let behavior = path
        .parent()
        .map(|dir| dir.join(META_FILE))
        .filter(|p| p.is_file())
        .and_then(|p| std::fs::read_to_string(p).ok())
        .and_then(|text| serde_json::from_str::<serde_json::Value>(&text).ok())
        .and_then(|v| v.get("behavior")?.as_str()?.parse::<Behavior>().ok());
    Ok(Dataset::new(samples, behavior))
}

/// Write a manifest. Floats use shortest round-trip formatting so that
/// loading the file reproduces the samples exactly.
pub fn save_manifest(path: &Path, ds: &Dataset) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(MANIFEST_HEADER)?;
    for s in &ds.samples {
        writer.write_record([
            s.timestamp.to_string(),
            s.center.clone(),
            s.left.clone().unwrap_or_default(),
            s.right.clone().unwrap_or_default(),
            s.steering.to_string(),
            s.throttle.to_string(),
            s.brake.to_string(),
            s.speed.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Write the collection sidecar read back by [`load_manifest`].
pub(crate) fn save_meta(dir: &Path, meta: &serde_json::Value) -> Result<(), DatasetError> {
    let text = serde_json::to_string_pretty(meta).map_err(|e| DatasetError::Invalid(e.to_string()))?;
    std::fs::write(dir.join(META_FILE), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, body: &str) -> std::path::PathBuf {
        let p = dir.join("driving_log.csv");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "timestamp,center,left,right,steering,throttle,brake,speed\n\
             0.0,c0.png,l0.png,r0.png,0.1,0.5,0,20\n\
             0.6667,c1.png,l1.png,r1.png,-0.25,0.4,0,21.5\n\
             1.3333,c2.png,l2.png,r2.png,0,0,0.3,19\n",
        );
        let ds = load_manifest(&p).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.samples[1].steering, -0.25);
        assert_eq!(ds.samples[2].left.as_deref(), Some("l2.png"));
        assert_eq!(ds.behavior, None);
    }

    #[test]
    fn steering_out_of_range_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "timestamp,center,left,right,steering,throttle,brake,speed\n\
             0.0,c0.png,,,0.1,0.5,0,20\n\
             1.0,c1.png,,,1.5,0.5,0,20\n",
        );
        match load_manifest(&p) {
            Err(DatasetError::Row { row, message }) => {
                assert_eq!(row, 2);
                assert!(message.contains("steering"), "{message}");
            }
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn center_only_rows_and_behavior_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "timestamp,center,left,right,steering,throttle,brake,speed\n\
             0.0,c0.png,,,0.0,0.5,0,20\n",
        );
        save_meta(dir.path(), &serde_json::json!({"behavior": "collision"})).unwrap();
        let ds = load_manifest(&p).unwrap();
        assert_eq!(ds.samples[0].left, None);
        assert_eq!(ds.samples[0].right, None);
        assert_eq!(ds.behavior, Some(Behavior::Collision));
    }

    #[test]
    fn missing_column_and_bad_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "timestamp,center,left,right,steering,throttle,brake\n0,c,,,0,0,0\n");
        assert!(matches!(load_manifest(&p), Err(DatasetError::MissingColumn(c)) if c == "speed"));
        let p = write(
            dir.path(),
            "timestamp,center,left,right,steering,throttle,brake,speed\n0,c,,,abc,0,0,0\n",
        );
        assert!(matches!(load_manifest(&p), Err(DatasetError::Row { row: 1, .. })));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::new(
            vec![DrivingSample {
                timestamp: 1.0 / 3.0,
                center: "c.png".into(),
                left: None,
                right: Some("r.png".into()),
                steering: -0.123_456_79,
                throttle: 0.7,
                brake: 0.0,
                speed: 29.9,
            }],
            None,
        );
        let p = dir.path().join("m.csv");
        save_manifest(&p, &ds).unwrap();
        assert_eq!(load_manifest(&p).unwrap(), ds);
    }
}
