use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::DatasetError;
use crate::imgproc::ImageU8;

/// Resolves frame references to decoded images.
pub trait FrameSource: Send + Sync {
    fn load(&self, frame: &str) -> Result<Arc<ImageU8>, DatasetError>;
}

/// Frames decoded from image files under a root directory. Decoded frames
/// are cached, so each file is read at most once.
#[derive(Debug)]
pub struct DiskFrames {
    root: PathBuf,
    cache: Mutex<HashMap<String, Arc<ImageU8>>>,
}

impl DiskFrames {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

impl FrameSource for DiskFrames {
    fn load(&self, frame: &str) -> Result<Arc<ImageU8>, DatasetError> {
        if let Some(img) = self.cache.lock().expect("frame cache poisoned").get(frame) {
            return Ok(Arc::clone(img));
        }
        let img = ImageU8::load(&self.root.join(frame)).map_err(|e| DatasetError::Frame {
            frame: frame.to_string(),
            reason: e.to_string(),
        })?;
        let img = Arc::new(img);
        self.cache
            .lock()
            .expect("frame cache poisoned")
            .insert(frame.to_string(), Arc::clone(&img));
        Ok(img)
    }
}

/// In-memory frame table.
#[derive(Debug, Clone, Default)]
pub struct MemoryFrames {
    frames: HashMap<String, Arc<ImageU8>>,
}

impl MemoryFrames {
    pub fn insert(&mut self, key: impl Into<String>, img: ImageU8) {
        self.frames.insert(key.into(), Arc::new(img));
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Arc<ImageU8>)> {
        self.frames.iter()
    }
}

impl FrameSource for MemoryFrames {
    fn load(&self, frame: &str) -> Result<Arc<ImageU8>, DatasetError> {
        self.frames
            .get(frame)
            .cloned()
            .ok_or_else(|| DatasetError::Frame {
                frame: frame.to_string(),
                reason: "not present".into(),
            })
    }
}
