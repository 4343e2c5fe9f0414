use std::path::Path;

use sha2::{Digest, Sha256};

use super::forward::forward_sample;
use super::params::{LayerParams, NetParams};
use super::spec::{LayerShape, NetSpec};
use super::NnError;
use crate::imgproc::{preprocess, GrayU8, ImageU8};

const MAGIC: &[u8; 4] = b"SCNN";
pub const MODEL_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

/// A network spec together with its trained parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: NetSpec,
    pub params: NetParams,
}

impl Model {
    pub fn new(spec: NetSpec, params: NetParams) -> Result<Self, NnError> {
        params.check_shape(&spec)?;
        Ok(Self { spec, params })
    }

    /// Resize and normalize `frame` exactly as in training, run an eval-mode
    /// forward pass and clamp to `[-1, 1]`.
    pub fn predict(&self, frame: &ImageU8) -> f32 {
        let x = preprocess(frame, self.spec.input.width, self.spec.input.height);
        self.predict_input(x.data())
    }

    /// Prediction for an already preprocessed input.
    pub fn predict_input(&self, x: &[f32]) -> f32 {
        let shapes = self.spec.layers().expect("model spec validated on construction");
        let masks = vec![None; shapes.len()];
        let acts = forward_sample(&shapes, &self.params, x, &masks);
        acts[acts.len() - 1][0].clamp(-1.0, 1.0)
    }

    /// Post-ReLU feature maps of every conv layer: one grayscale raster per
    /// channel, min-max scaled to `[0, 255]` (uniform maps become all zero).
    pub fn activation_maps(&self, frame: &ImageU8) -> Vec<Vec<GrayU8>> {
        let shapes = self.spec.layers().expect("model spec validated on construction");
        let x = preprocess(frame, self.spec.input.width, self.spec.input.height);
        let acts = forward_sample(&shapes, &self.params, x.data(), &vec![None; shapes.len()]);
        shapes
            .iter()
            .zip(&acts)
            .filter_map(|(shape, act)| match *shape {
                LayerShape::Conv {
                    out_h, out_w, out_c, ..
                } => Some((0..out_c).map(|c| channel_map(act, out_h, out_w, out_c, c)).collect()),
                LayerShape::Fc { .. } => None,
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Serialize: magic, version, spec JSON, per-layer little-endian `f32`
    /// blobs, then a SHA-256 of all preceding bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let spec = serde_json::to_vec(&self.spec).expect("spec serializes");
        let mut out = Vec::with_capacity(spec.len() + 4 * self.params.len() + 64);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(spec.len() as u32).to_le_bytes());
        out.extend_from_slice(&spec);
        out.extend_from_slice(&(self.params.layers.len() as u32).to_le_bytes());
        for layer in &self.params.layers {
            for blob in [&layer.weights, &layer.bias] {
                out.extend_from_slice(&(blob.len() as u32).to_le_bytes());
                for v in blob.iter() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NnError> {
        if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
            return Err(NnError::Format("not a model file (bad magic)".into()));
        }
        if bytes.len() < 4 + DIGEST_LEN {
            return Err(NnError::Checksum);
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(NnError::Checksum);
        }
        let mut r = Reader { buf: body, pos: 4 };
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(NnError::Version {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let spec_len = r.u32()? as usize;
        let spec: NetSpec =
            serde_json::from_slice(r.take(spec_len)?).map_err(|e| NnError::Format(format!("spec: {e}")))?;
        let count = r.u32()? as usize;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let weights = r.f32s()?;
            let bias = r.f32s()?;
            layers.push(LayerParams { weights, bias });
        }
        if r.pos != body.len() {
            return Err(NnError::Format("trailing bytes after parameters".into()));
        }
        Model::new(spec, NetParams { layers })
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn channel_map(act: &[f32], h: usize, w: usize, channels: usize, c: usize) -> GrayU8 {
    let values: Vec<f32> = (0..h * w).map(|i| act[i * channels + c]).collect();
    let lo = values.iter().copied().fold(f32::INFINITY, f32::min);
    let hi = values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let data = if hi > lo {
        values
            .iter()
            .map(|&v| ((v - lo) / (hi - lo) * 255.0).round() as u8)
            .collect()
    } else {
        vec![0; values.len()]
    };
    GrayU8 {
        width: w,
        height: h,
        data,
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| NnError::Format("unexpected end of model data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self) -> Result<Vec<f32>, NnError> {
        let n = self.u32()? as usize;
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| NnError::Format("blob too large".into()))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(seed: u64) -> Model {
        let spec = NetSpec::default();
        let params = NetParams::init(&spec, seed).unwrap();
        Model::new(spec, params).unwrap()
    }

    fn frame() -> ImageU8 {
        let mut img = ImageU8::new(320, 160);
        for (i, v) in img.data_mut().iter_mut().enumerate() {
            *v = (i * 31 % 251) as u8;
        }
        img
    }

    #[test]
    fn zero_model_predicts_zero() {
        let spec = NetSpec::default();
        let m = Model::new(spec.clone(), NetParams::zeros(&spec).unwrap()).unwrap();
        assert_eq!(m.predict(&frame()), 0.0);
        for layer in m.activation_maps(&frame()) {
            assert!(layer.iter().all(|g| g.data.iter().all(|&v| v == 0)));
        }
    }

    #[test]
    fn predictions_repeat_and_clamp() {
        let mut m = model(1);
        let f = frame();
        assert_eq!(m.predict(&f), m.predict(&f));
        m.params.layers.last_mut().unwrap().bias[0] = 50.0;
        assert_eq!(m.predict(&f), 1.0);
    }

    #[test]
    fn activation_map_dims() {
        let maps = model(2).activation_maps(&frame());
        let dims: Vec<(usize, usize, usize)> = maps
            .iter()
            .map(|l| (l.len(), l[0].width, l[0].height))
            .collect();
        assert_eq!(dims, vec![(8, 11, 11), (16, 4, 4), (24, 1, 1)]);
    }

    #[test]
    fn save_load_round_trip() {
        let m = model(3);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        m.save(&p).unwrap();
        let back = Model::load(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict(&frame()).to_bits(), m.predict(&frame()).to_bits());
    }

    #[test]
    fn corrupt_files_rejected() {
        let bytes = model(4).to_bytes();
        assert!(matches!(Model::from_bytes(&bytes[..bytes.len() - 10]), Err(NnError::Checksum)));
        let mut flipped = bytes.clone();
        flipped[40] ^= 1;
        assert!(matches!(Model::from_bytes(&flipped), Err(NnError::Checksum)));
        assert!(matches!(Model::from_bytes(b"PNG...."), Err(NnError::Format(_))));

        // Version bump with a valid checksum.
        let mut body = bytes[..bytes.len() - DIGEST_LEN].to_vec();
        body[4..8].copy_from_slice(&2u32.to_le_bytes());
        let digest = Sha256::digest(&body);
        body.extend_from_slice(&digest);
        assert!(matches!(
            Model::from_bytes(&body),
            Err(NnError::Version { found: 2, expected: 1 })
        ));
    }
}
