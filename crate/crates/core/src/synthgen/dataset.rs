//! On-disk dataset layout:
//!
//! ```text
//! <out>/manifest.json
//! <out>/<split>/annotations.json
//! <out>/<split>/<id>.int.pgm   16-bit intensity
//! <out>/<split>/<id>.dep.pgm   16-bit depth (mm, 0 = missing)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::render::{derive_annotations, render_scene, RenderedFrame};
use super::scene::{sample_scene, SceneRanges};
use crate::error::{Error, IoContext, Result};
use crate::imaging::{
    read_pgm_depth, read_pgm_intensity, write_pgm_depth, write_pgm_intensity, BoundingBox, DepthMap, IntensityImage,
    LabeledInstance, Rle, CLASS_NAMES, NUM_CLASSES,
};

/// Per-split frame and instance counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub split: String,
    pub frames: usize,
    pub deer: usize,
    pub boar: usize,
    pub hare: usize,
    pub fox: usize,
    pub instances: usize,
}

impl SplitManifest {
    fn new(split: &str) -> Self {
        Self {
            split: split.to_owned(),
            frames: 0,
            deer: 0,
            boar: 0,
            hare: 0,
            fox: 0,
            instances: 0,
        }
    }

    fn count(&mut self, class_id: u16) {
        match class_id {
            0 => self.deer += 1,
            1 => self.boar += 1,
            2 => self.hare += 1,
            _ => self.fox += 1,
        }
        self.instances += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub splits: Vec<SplitManifest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: u64,
    pub intensity: String,
    pub depth: String,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationEntry {
    pub id: u64,
    pub image_id: u64,
    pub class_id: u16,
    pub bbox: BoundingBox,
    pub segmentation: Rle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: u16,
    pub name: String,
}

/// Contents of `<split>/annotations.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationFile {
    pub split: String,
    pub images: Vec<ImageEntry>,
    pub annotations: Vec<AnnotationEntry>,
    pub categories: Vec<Category>,
}

impl AnnotationFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).at(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Ground truth as `(image_id, instance)` pairs.
    pub fn instances(&self) -> Result<Vec<(u64, LabeledInstance)>> {
        self.annotations
            .iter()
            .map(|a| {
                let mask = a.segmentation.decode()?;
                Ok((a.image_id, LabeledInstance::from_mask(a.class_id, mask, None)?))
            })
            .collect()
    }
}

/// One frame read back from disk.
#[derive(Debug, Clone)]
pub struct Sample {
    pub image_id: u64,
    pub intensity: IntensityImage,
    pub depth: DepthMap,
    pub instances: Vec<LabeledInstance>,
}

impl Sample {
    pub fn from_frame(image_id: u64, frame: &RenderedFrame) -> Result<Self> {
        Ok(Self {
            image_id,
            intensity: frame.intensity.clone(),
            depth: frame.depth.clone(),
            instances: derive_annotations(frame)?,
        })
    }

    /// Dense per-pixel target: 0 background, `class_id + 1` on instances.
    pub fn class_map(&self) -> Vec<u8> {
        let mut map = vec![0u8; self.intensity.pixels().len()];
        for inst in &self.instances {
            for (m, &b) in map.iter_mut().zip(inst.mask.bits()) {
                if b {
                    *m = inst.class_id as u8 + 1;
                }
            }
        }
        map
    }
}

fn categories() -> Vec<Category> {
    CLASS_NAMES
        .iter()
        .enumerate()
        .map(|(id, name)| Category {
            id: id as u16,
            name: (*name).to_owned(),
        })
        .collect()
}

/// Renders scenes sampled with seeds `first_seed .. first_seed + count`.
pub fn render_split(first_seed: u64, count: usize, ranges: &SceneRanges) -> Result<Vec<RenderedFrame>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| render_scene(&sample_scene(first_seed + i, ranges)))
        .collect()
}

/// In-memory counterpart of [`render_split`] followed by [`read_dataset`].
pub fn generate_samples(first_seed: u64, count: usize, ranges: &SceneRanges) -> Result<Vec<Sample>> {
    render_split(first_seed, count, ranges)?
        .iter()
        .enumerate()
        .map(|(i, f)| Sample::from_frame(i as u64, f))
        .collect()
}

/// Writes one split and returns its counts.
pub fn write_dataset(frames: &[RenderedFrame], split: &str, out: &Path) -> Result<SplitManifest> {
    if frames.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dir = out.join(split);
    fs::create_dir_all(&dir).at(&dir)?;
    let mut manifest = SplitManifest::new(split);
    let mut file = AnnotationFile {
        split: split.to_owned(),
        images: Vec::with_capacity(frames.len()),
        annotations: Vec::new(),
        categories: categories(),
    };
    for (i, frame) in frames.iter().enumerate() {
        let id = i as u64;
        let (int_name, dep_name) = (format!("{i:05}.int.pgm"), format!("{i:05}.dep.pgm"));
        write_pgm_intensity(&dir.join(&int_name), &frame.intensity)?;
        write_pgm_depth(&dir.join(&dep_name), &frame.depth)?;
        let (width, height) = frame.dims();
        file.images.push(ImageEntry {
            id,
            intensity: int_name,
            depth: dep_name,
            width,
            height,
        });
        for inst in derive_annotations(frame)? {
            manifest.count(inst.class_id);
            file.annotations.push(AnnotationEntry {
                id: file.annotations.len() as u64 + 1,
                image_id: id,
                class_id: inst.class_id,
                bbox: inst.bbox,
                segmentation: Rle::encode(&inst.mask),
            });
        }
        manifest.frames += 1;
    }
    let path = dir.join("annotations.json");
    fs::write(&path, serde_json::to_vec(&file)?).at(&path)?;
    Ok(manifest)
}

pub fn write_manifest(out: &Path, manifest: &DatasetManifest) -> Result<PathBuf> {
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_vec_pretty(manifest)?).at(&path)?;
    Ok(path)
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join("manifest.json");
    Ok(serde_json::from_str(&fs::read_to_string(&path).at(&path)?)?)
}

/// Loads every frame of `split` with its ground truth.
pub fn read_dataset(dir: &Path, split: &str) -> Result<Vec<Sample>> {
    let base = dir.join(split);
    let file = AnnotationFile::load(&base.join("annotations.json"))?;
    let mut samples: Vec<Sample> = Vec::with_capacity(file.images.len());
    let mut index = std::collections::HashMap::new();
    for img in &file.images {
        index.insert(img.id, samples.len());
        samples.push(Sample {
            image_id: img.id,
            intensity: read_pgm_intensity(&base.join(&img.intensity))?,
            depth: read_pgm_depth(&base.join(&img.depth))?,
            instances: Vec::new(),
        });
    }
    for (image_id, inst) in file.instances()? {
        if usize::from(inst.class_id) >= NUM_CLASSES {
            return Err(Error::UnknownClass(inst.class_id));
        }
        let slot = index.get(&image_id).ok_or_else(|| Error::Format {
            path: base.join("annotations.json"),
            reason: format!("annotation refers to unknown image {image_id}"),
        })?;
        samples[*slot].instances.push(inst);
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::super::{render_scene, sample_scene, Range, SceneRanges};
    use super::*;

    #[test]
    fn single_deer_counts() {
        let r = SceneRanges {
            animal_count: (1, 1),
            class_weights: [1.0, 0.0, 0.0, 0.0],
            distance: Range::point(5.0),
            column: Range::point(0.5),
            ..SceneRanges::default()
        };
        let f = render_scene(&sample_scene(1, &r)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = write_dataset(&[f], "train", dir.path()).unwrap();
        assert_eq!((m.frames, m.deer, m.instances), (1, 1, 1));
        assert_eq!((m.boar, m.hare, m.fox), (0, 0, 0));
    }

    #[test]
    fn reread_is_identical() {
        let r = SceneRanges::default();
        let frames: Vec<_> = (0..4).map(|s| render_scene(&sample_scene(s, &r)).unwrap()).collect();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&frames, "test", dir.path()).unwrap();
        let back = read_dataset(dir.path(), "test").unwrap();
        assert_eq!(back.len(), 4);
        for (f, s) in frames.iter().zip(&back) {
            assert_eq!(s.intensity, f.intensity);
            assert_eq!(s.depth, f.depth);
            assert_eq!(s.instances, derive_annotations(f).unwrap());
            let expected: Vec<u8> = f.class_map.clone();
            assert_eq!(s.class_map(), expected);
        }
        let a = fs::read(dir.path().join("test/annotations.json")).unwrap();
        let file = AnnotationFile::load(&dir.path().join("test/annotations.json")).unwrap();
        assert_eq!(serde_json::to_vec(&file).unwrap(), a);
    }

    #[test]
    fn empty_split_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(write_dataset(&[], "train", dir.path()), Err(Error::EmptyDataset)));
    }
}
