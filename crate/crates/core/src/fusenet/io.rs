use std::path::Path;

use super::conv::ConvLayer;
use super::model::{FuseNet, ModelConfig};
use crate::error::{Error, IoContext, Result};

const MAGIC: &[u8; 4] = b"TKFN";
const VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], String> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(format!("truncated at byte {}", self.pos));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> std::result::Result<usize, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> std::result::Result<f32, String> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Little-endian model image: magic, version, config, then every layer in
/// declaration order as `(in, out, kernel, stride, weights, bias)`.
pub fn model_to_bytes(model: &FuseNet<f32>) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION as usize);
    let c = &model.config;
    w.u32(c.num_classes);
    w.u32(c.feature_depth);
    w.u32(c.input_channels);
    w.f32(c.learning_rate);
    w.0.push(u8::from(c.linear_decay));
    w.u32(c.epochs);
    w.u32(c.batch_size);
    w.0.extend_from_slice(&c.seed.to_le_bytes());
    w.0.push(u8::from(c.depth_enabled));
    w.f32(c.max_depth_mm);
    for (_, layer) in model.layers() {
        w.u32(layer.in_channels);
        w.u32(layer.out_channels);
        w.u32(layer.kernel);
        w.u32(layer.stride);
        layer.weights.iter().chain(&layer.bias).for_each(|&v| w.f32(v));
    }
    w.0
}

pub fn model_from_bytes(bytes: &[u8]) -> std::result::Result<FuseNet<f32>, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err("bad magic".into());
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(format!("unsupported version {version}"));
    }
    let config = ModelConfig {
        num_classes: r.u32()?,
        feature_depth: r.u32()?,
        input_channels: r.u32()?,
        learning_rate: r.f32()?,
        linear_decay: r.take(1)?[0] != 0,
        epochs: r.u32()?,
        batch_size: r.u32()?,
        seed: r.u64()?,
        depth_enabled: r.take(1)?[0] != 0,
        max_depth_mm: r.f32()?,
    };
    let mut model = FuseNet::<f32>::new(config).map_err(|e| e.to_string())?;
    for layer in model.layers_mut() {
        let shape = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
        if shape != (layer.in_channels, layer.out_channels, layer.kernel, layer.stride) {
            return Err(format!("layer shape {shape:?} does not match the configured architecture"));
        }
        let loaded = read_layer(&mut r, layer)?;
        *layer = loaded;
    }
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    Ok(model)
}

fn read_layer(r: &mut Reader, like: &ConvLayer<f32>) -> std::result::Result<ConvLayer<f32>, String> {
    let mut layer = like.clone();
    for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
        *v = r.f32()?;
    }
    Ok(layer)
}

pub fn save_model(model: &FuseNet<f32>, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_bytes(model)).at(path)
}

pub fn load_model(path: &Path) -> Result<FuseNet<f32>> {
    let bytes = std::fs::read(path).at(path)?;
    model_from_bytes(&bytes).map_err(|reason| Error::Format {
        path: path.to_path_buf(),
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let model = FuseNet::<f32>::new(ModelConfig {
            seed: 11,
            depth_enabled: false,
            learning_rate: 0.25,
            ..ModelConfig::default()
        })
        .unwrap();
        let bytes = model_to_bytes(&model);
        assert_eq!(&bytes[..4], b"TKFN");
        assert_eq!(model_from_bytes(&bytes).unwrap(), model);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_model(&model, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
    }

    #[test]
    fn rejects_corruption() {
        let model = FuseNet::<f32>::new(ModelConfig::default()).unwrap();
        let bytes = model_to_bytes(&model);
        assert!(model_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(model_from_bytes(&bad).is_err());
        let mut longer = bytes;
        longer.push(0);
        assert!(model_from_bytes(&longer).is_err());
    }
}
