use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AnimalSpec, CameraSpec, SceneSpec, Species};
use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, DepthMap, IntensityImage, LabeledInstance, LUMA_SCALE};

/// Output of [`render_scene`]. `class_map` holds `class_id + 1` (0 is
/// background); `instance_map` holds consecutive ids from 1 in animal order,
/// skipping animals that ended up with no visible pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub intensity: IntensityImage,
    pub depth: DepthMap,
    pub class_map: Vec<u8>,
    pub instance_map: Vec<u16>,
}

impl RenderedFrame {
    pub fn dims(&self) -> (usize, usize) {
        self.intensity.dims()
    }

    pub fn instance_count(&self) -> u16 {
        self.instance_map.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy)]
enum Part {
    /// superellipse centred at (cs, ct) with semi-axes (a, b)
    Blob { cs: f64, ct: f64, a: f64, b: f64, exp: f64 },
    /// capsule from (s0, t0) to (s1, t1)
    Limb { s0: f64, t0: f64, s1: f64, t1: f64, radius: f64 },
}

impl Part {
    /// Pseudo surface normal's in-plane components when `(s, t)` is inside.
    fn hit(&self, s: f64, t: f64) -> Option<(f64, f64)> {
        match *self {
            Part::Blob { cs, ct, a, b, exp } => {
                let (u, v) = ((s - cs) / a, (t - ct) / b);
                let r = u.abs().powf(exp) + v.abs().powf(exp);
                (r <= 1.0).then(|| (u * 0.9, v * 0.9))
            }
            Part::Limb { s0, t0, s1, t1, radius } => {
                let (ds, dt) = (s1 - s0, t1 - t0);
                let len2 = ds * ds + dt * dt;
                let k = if len2 > 0.0 {
                    (((s - s0) * ds + (t - t0) * dt) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (ps, pt) = (s - (s0 + k * ds), t - (t0 + k * dt));
                let d2 = ps * ps + pt * pt;
                (d2 <= radius * radius).then(|| (ps / radius * 0.9, pt / radius * 0.9))
            }
        }
    }

    fn extent(&self) -> (f64, f64, f64, f64) {
        match *self {
            Part::Blob { cs, ct, a, b, .. } => (cs - a, ct - b, cs + a, ct + b),
            Part::Limb { s0, t0, s1, t1, radius } => (
                s0.min(s1) - radius,
                t0.min(t1) - radius,
                s0.max(s1) + radius,
                t0.max(t1) + radius,
            ),
        }
    }
}

/// Class-specific parametric animal outline in metres; `s` runs along the
/// body (forward positive before mirroring), `t` is height above ground.
#[derive(Debug, Clone)]
pub struct Silhouette {
    parts: Vec<Part>,
    /// horizontal factor applied in the image: foreshortening and facing direction
    facing: f64,
}

impl Silhouette {
    pub fn new(animal: &AnimalSpec) -> Self {
        let k = animal.scale;
        let phase = animal.gait_phase * std::f64::consts::TAU;
        // (body length, body height, leg length, leg radius, body exponent)
        let (len, bh, leg, lr, exp) = match animal.species {
            Species::Deer => (1.4, 0.5, 0.8, 0.04, 2.2),
            Species::Boar => (1.2, 0.6, 0.3, 0.05, 3.0),
            Species::Fox => (0.65, 0.26, 0.28, 0.03, 2.0),
            Species::Hare => (0.45, 0.28, 0.1, 0.03, 2.0),
        };
        let body_ct = leg + bh / 2.0;
        let mut parts = vec![Part::Blob {
            cs: 0.0,
            ct: body_ct,
            a: len / 2.0,
            b: bh / 2.0,
            exp,
        }];
        let hip = leg + bh * 0.2;
        let swing = 0.25 * leg;
        for (i, (hs, offset)) in [(0.32, 0.0), (0.26, 0.5), (-0.3, 0.5), (-0.36, 0.0)].into_iter().enumerate() {
            let hs = hs * len;
            let foot = hs + swing * (phase + offset * std::f64::consts::TAU + i as f64 * 0.1).sin();
            parts.push(Part::Limb {
                s0: hs,
                t0: hip,
                s1: foot,
                t1: lr,
                radius: lr,
            });
        }
        match animal.species {
            Species::Deer => {
                parts.push(Part::Limb {
                    s0: 0.55,
                    t0: body_ct + 0.1,
                    s1: 0.75,
                    t1: 1.5,
                    radius: 0.08,
                });
                parts.push(Part::Blob { cs: 0.85, ct: 1.52, a: 0.18, b: 0.1, exp: 2.0 });
                parts.push(Part::Blob { cs: 0.72, ct: 1.66, a: 0.04, b: 0.09, exp: 2.0 });
            }
            Species::Boar => {
                parts.push(Part::Blob { cs: 0.68, ct: 0.55, a: 0.24, b: 0.19, exp: 2.2 });
                parts.push(Part::Blob { cs: 0.5, ct: 0.83, a: 0.05, b: 0.07, exp: 2.0 });
            }
            Species::Fox => {
                parts.push(Part::Blob { cs: 0.4, ct: 0.55, a: 0.12, b: 0.08, exp: 2.0 });
                parts.push(Part::Blob { cs: 0.37, ct: 0.66, a: 0.03, b: 0.06, exp: 2.0 });
                parts.push(Part::Limb {
                    s0: -0.3,
                    t0: 0.42,
                    s1: -0.68,
                    t1: 0.32,
                    radius: 0.065,
                });
            }
            Species::Hare => {
                parts.push(Part::Blob { cs: 0.25, ct: 0.36, a: 0.09, b: 0.07, exp: 2.0 });
                parts.push(Part::Blob { cs: 0.2, ct: 0.53, a: 0.035, b: 0.13, exp: 2.0 });
                parts.push(Part::Blob { cs: 0.26, ct: 0.52, a: 0.03, b: 0.12, exp: 2.0 });
            }
        }
        for p in &mut parts {
            *p = match *p {
                Part::Blob { cs, ct, a, b, exp } => Part::Blob {
                    cs: cs * k,
                    ct: ct * k,
                    a: a * k,
                    b: b * k,
                    exp,
                },
                Part::Limb { s0, t0, s1, t1, radius } => Part::Limb {
                    s0: s0 * k,
                    t0: t0 * k,
                    s1: s1 * k,
                    t1: t1 * k,
                    radius: radius * k,
                },
            };
        }
        let c = animal.heading.to_radians().cos();
        let facing = (0.4 + 0.6 * c.abs()) * if c < 0.0 { -1.0 } else { 1.0 };
        Self { parts, facing }
    }

    /// In-plane normal components at billboard coordinates `(s, t)` in metres
    /// (image-right and up), or `None` outside the outline.
    pub fn hit(&self, s_img: f64, t: f64) -> Option<(f64, f64)> {
        let s = s_img / self.facing;
        self.parts
            .iter()
            .find_map(|p| p.hit(s, t))
            .map(|(ns, nt)| (ns * self.facing.signum(), nt))
    }

    /// `(s_min, t_min, s_max, t_max)` in billboard metres.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        let mut e = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in &self.parts {
            let (s0, t0, s1, t1) = p.extent();
            let (a, b) = (s0 * self.facing, s1 * self.facing);
            e = (e.0.min(a.min(b)), e.1.min(t0), e.2.max(a.max(b)), e.3.max(t1));
        }
        e
    }

    /// Projected pixel bounds `(x0, y0, x1, y1)` for `animal` seen by `camera`.
    pub fn image_bounds(&self, camera: &CameraSpec, animal: &AnimalSpec) -> (f64, f64, f64, f64) {
        let proj = Projection::new(camera, animal);
        let (s0, t0, s1, t1) = self.extent();
        let (u0, v0) = proj.to_pixel(s0, t1);
        let (u1, v1) = proj.to_pixel(s1, t0);
        (u0, v0, u1, v1)
    }
}

/// Maps billboard coordinates of one animal to pixels and back.
struct Projection {
    focal: f64,
    cx: f64,
    cy: f64,
    x: f64,
    z: f64,
    anchor_up: f64,
}

impl Projection {
    fn new(camera: &CameraSpec, animal: &AnimalSpec) -> Self {
        let pitch = camera.pitch.to_radians();
        let (x, z) = animal.ground_position;
        // ground point at optical-axis distance z, expressed on the camera's up axis
        let ground_forward = (z - camera.height * pitch.sin()) / pitch.cos();
        let anchor_up = -camera.height * pitch.cos() + ground_forward * pitch.sin();
        Self {
            focal: camera.focal_px(),
            cx: camera.image.0 as f64 / 2.0,
            cy: camera.image.1 as f64 / 2.0,
            x,
            z,
            anchor_up,
        }
    }

    fn to_pixel(&self, s: f64, t: f64) -> (f64, f64) {
        (
            self.cx + self.focal * (self.x + s) / self.z,
            self.cy - self.focal * (self.anchor_up + t) / self.z,
        )
    }

    fn to_billboard(&self, u: f64, v: f64) -> (f64, f64) {
        (
            (u - self.cx) * self.z / self.focal - self.x,
            -(v - self.cy) * self.z / self.focal - self.anchor_up,
        )
    }
}

fn gaussianish(rng: &mut ChaCha8Rng) -> f64 {
    // Irwin-Hall with unit variance
    (rng.gen::<f64>() + rng.gen::<f64>() + rng.gen::<f64>() - 1.5) * 2.0
}

/// Background luminance (0–255 scale): coarse blotches plus per-pixel grain.
fn background_texture(spec: &SceneSpec) -> Vec<f64> {
    let (w, h) = spec.camera.image;
    let bg = &spec.background;
    let mut rng = ChaCha8Rng::seed_from_u64(bg.texture_seed);
    let cell = 6usize;
    let (gw, gh) = (w / cell + 2, h / cell + 2);
    let grid: Vec<f64> = (0..gw * gh).map(|_| gaussianish(&mut rng)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64 / cell as f64, y as f64 / cell as f64);
            let (ix, iy) = (fx as usize, fy as usize);
            let (tx, ty) = (fx - ix as f64, fy - iy as f64);
            let g = |i: usize, j: usize| grid[j * gw + i];
            let coarse = (g(ix, iy) * (1.0 - tx) + g(ix + 1, iy) * tx) * (1.0 - ty)
                + (g(ix, iy + 1) * (1.0 - tx) + g(ix + 1, iy + 1) * tx) * ty;
            let fine = gaussianish(&mut rng);
            out.push(bg.mean_luminance + bg.texture_amplitude * (0.6 * coarse + 0.6 * fine));
        }
    }
    out
}

/// Optical-axis depth of the ground plane at a pixel row centre, if the ray hits it.
fn ground_depth(camera: &CameraSpec, v: f64) -> Option<f64> {
    let f = camera.focal_px();
    let pitch = camera.pitch.to_radians();
    let b = -(v - camera.image.1 as f64 / 2.0) / f;
    let down = pitch.sin() - b * pitch.cos();
    (down > 0.0).then(|| camera.height / down)
}

fn to_u16(luma: f64) -> u16 {
    (luma.clamp(0.0, 255.0) * LUMA_SCALE).round() as u16
}

/// Renders intensity, depth, class and instance images. Animals always occlude
/// the ground they stand on; among animals the nearer surface wins.
pub fn render_scene(spec: &SceneSpec) -> Result<RenderedFrame> {
    spec.camera.validate()?;
    for (index, a) in spec.animals.iter().enumerate() {
        if !(a.ground_position.1 > 0.0) {
            return Err(Error::BehindCamera {
                index,
                z: a.ground_position.1,
            });
        }
    }
    let (w, h) = spec.camera.image;
    let texture = background_texture(spec);
    let mut luma = texture.clone();
    let mut depth = vec![0u16; w * h];
    for y in 0..h {
        for x in 0..w {
            if let Some(d) = ground_depth(&spec.camera, y as f64 + 0.5) {
                let mm = (d * 1000.0).round();
                if mm <= 65535.0 {
                    depth[y * w + x] = mm as u16;
                }
            }
        }
    }

    let ill = &spec.illumination;
    let (az, el) = (ill.azimuth.to_radians(), ill.elevation.to_radians());
    let light = (el.cos() * az.sin(), el.sin(), el.cos() * az.cos());
    let mut zbuf = vec![f64::INFINITY; w * h];
    let mut owner = vec![0usize; w * h];
    let mut class_map = vec![0u8; w * h];

    for (index, animal) in spec.animals.iter().enumerate() {
        let sil = Silhouette::new(animal);
        let proj = Projection::new(&spec.camera, animal);
        let (u0, v0, u1, v1) = sil.image_bounds(&spec.camera, animal);
        let x0 = u0.floor().max(0.0) as usize;
        let y0 = v0.floor().max(0.0) as usize;
        let x1 = (u1.ceil().max(0.0) as usize).min(w);
        let y1 = (v1.ceil().max(0.0) as usize).min(h);
        let z = animal.ground_position.1;
        let z_mm = (z * 1000.0).round().min(65535.0) as u16;
        for y in y0..y1 {
            for x in x0..x1 {
                let i = y * w + x;
                if z >= zbuf[i] {
                    continue;
                }
                let (s, t) = proj.to_billboard(x as f64 + 0.5, y as f64 + 0.5);
                let Some((ns, nt)) = sil.hit(s, t) else {
                    continue;
                };
                let nz = (1.0 - ns * ns - nt * nt).max(0.0).sqrt();
                let lambert = (ns * light.0 + nt * light.1 + nz * light.2).max(0.0);
                let shaded = animal.albedo * ill.intensity_scale * (0.4 + 0.6 * lambert);
                // keep the ground's grain, move the mean toward the animal's shade
                luma[i] = texture[i] + (1.0 - spec.camouflage) * (shaded - spec.background.mean_luminance);
                zbuf[i] = z;
                owner[i] = index + 1;
                depth[i] = z_mm;
                class_map[i] = animal.species.class_id() as u8 + 1;
            }
        }
    }

    // relabel visible animals consecutively
    let mut remap = vec![0u16; spec.animals.len() + 1];
    let mut next = 0u16;
    for i in 0..w * h {
        let o = owner[i];
        if o != 0 && remap[o] == 0 {
            remap[o] = u16::MAX;
        }
    }
    for slot in remap.iter_mut().skip(1) {
        if *slot == u16::MAX {
            next += 1;
            *slot = next;
        }
    }
    let instance_map = owner.iter().map(|&o| remap[o]).collect();

    Ok(RenderedFrame {
        intensity: IntensityImage::new(w, h, luma.into_iter().map(to_u16).collect())?,
        depth: DepthMap::new(w, h, depth)?,
        class_map,
        instance_map,
    })
}

/// One [`LabeledInstance`] per instance id, in id order.
pub fn derive_annotations(frame: &RenderedFrame) -> Result<Vec<LabeledInstance>> {
    let (w, h) = frame.dims();
    let n = frame.instance_count();
    let mut bits = vec![vec![false; w * h]; usize::from(n)];
    let mut class: Vec<Option<u8>> = vec![None; usize::from(n)];
    for (i, (&id, &c)) in frame.instance_map.iter().zip(&frame.class_map).enumerate() {
        if id == 0 {
            if c != 0 {
                return Err(Error::InconsistentInstance { instance: 0 });
            }
            continue;
        }
        let k = usize::from(id - 1);
        match class[k] {
            None if c != 0 => class[k] = Some(c),
            Some(prev) if prev == c => {}
            _ => return Err(Error::InconsistentInstance { instance: id }),
        }
        bits[k][i] = true;
    }
    bits.into_iter()
        .zip(class)
        .enumerate()
        .map(|(k, (b, c))| {
            let c = c.ok_or(Error::InconsistentInstance { instance: k as u16 + 1 })?;
            LabeledInstance::from_mask(u16::from(c - 1), BinaryMask::new(w, h, b)?, None)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{BackgroundSpec, IlluminationSpec};
    use super::*;
    use crate::imaging::mask_iou;

    fn camera() -> CameraSpec {
        CameraSpec {
            height: 2.0,
            pitch: 15.0,
            fov: 50.0,
            image: (96, 72),
        }
    }

    fn animal(species: Species, x: f64, z: f64) -> AnimalSpec {
        AnimalSpec {
            species,
            ground_position: (x, z),
            heading: 0.0,
            scale: 1.0,
            gait_phase: 0.25,
            albedo: 180.0,
        }
    }

    fn scene(animals: Vec<AnimalSpec>, camouflage: f64) -> SceneSpec {
        SceneSpec {
            seed: 0,
            camera: camera(),
            illumination: IlluminationSpec {
                azimuth: 20.0,
                elevation: 40.0,
                intensity_scale: 1.0,
            },
            animals,
            background: BackgroundSpec {
                texture_seed: 5,
                mean_luminance: 110.0,
                texture_amplitude: 12.0,
            },
            camouflage,
        }
    }

    #[test]
    fn empty_scene_is_ground_only() {
        let s = scene(vec![], 0.0);
        let f = render_scene(&s).unwrap();
        assert!(f.class_map.iter().all(|&c| c == 0));
        assert!(f.instance_map.iter().all(|&c| c == 0));
        let (w, h) = f.dims();
        for y in 0..h {
            for x in 0..w {
                let expected = ground_depth(&s.camera, y as f64 + 0.5)
                    .map(|d| (d * 1000.0).round())
                    .filter(|&mm| mm <= 65535.0)
                    .unwrap_or(0.0);
                assert_eq!(f.depth.get(x, y) as f64, expected);
            }
        }
        assert!(derive_annotations(&f).unwrap().is_empty());
    }

    #[test]
    fn nearer_animal_wins_overlap() {
        let near = animal(Species::Deer, 0.0, 5.0);
        let far = animal(Species::Boar, 0.0, 10.0);
        let both = render_scene(&scene(vec![far, near], 0.0)).unwrap();
        let only_near = render_scene(&scene(vec![near], 0.0)).unwrap();
        let only_far = render_scene(&scene(vec![far], 0.0)).unwrap();
        let (w, h) = both.dims();
        let mut overlap = 0;
        for i in 0..w * h {
            let (n, f) = (only_near.instance_map[i] != 0, only_far.instance_map[i] != 0);
            if n && f {
                overlap += 1;
                // far is animal 0 -> id 1, near is animal 1 -> id 2
                assert_eq!(both.instance_map[i], 2);
                assert_eq!(both.depth.depths()[i], 5000);
            }
        }
        assert!(overlap > 0);
        let ann = derive_annotations(&both).unwrap();
        assert_eq!(ann.len(), 2);
        let total = both.instance_map.iter().filter(|&&v| v != 0).count();
        assert_eq!(ann[0].mask.count() + ann[1].mask.count(), total);
        assert_eq!(mask_iou(&ann[0].mask, &ann[1].mask).unwrap(), 0.0);
    }

    #[test]
    fn full_camouflage_hides_luminance_not_depth() {
        let a = animal(Species::Deer, 0.0, 4.0);
        let f = render_scene(&scene(vec![a], 1.0)).unwrap();
        let bare = render_scene(&scene(vec![], 1.0)).unwrap();
        let (mut sum_a, mut n_a, mut sum_b, mut n_b) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..f.instance_map.len() {
            let l = f64::from(f.intensity.pixels()[i]) / LUMA_SCALE;
            if f.instance_map[i] != 0 {
                sum_a += l;
                n_a += 1.0;
                assert_ne!(f.depth.depths()[i], bare.depth.depths()[i]);
            } else {
                sum_b += l;
                n_b += 1.0;
            }
        }
        assert!(n_a > 100.0);
        assert!((sum_a / n_a - sum_b / n_b).abs() <= 2.0);
    }

    #[test]
    fn class_sizes_are_ordered() {
        let area = |s: Species| {
            let f = render_scene(&scene(vec![animal(s, 0.0, 5.0)], 0.0)).unwrap();
            f.instance_map.iter().filter(|&&v| v != 0).count()
        };
        let (d, b, f, h) = (area(Species::Deer), area(Species::Boar), area(Species::Fox), area(Species::Hare));
        assert!(d > b && b > f && f > h, "{d} {b} {f} {h}");
    }

    #[test]
    fn behind_camera_rejected() {
        let s = scene(vec![animal(Species::Hare, 0.0, -1.0)], 0.0);
        assert!(matches!(render_scene(&s), Err(Error::BehindCamera { index: 0, .. })));
    }

    #[test]
    fn inconsistent_class_detected() {
        let mut f = render_scene(&scene(vec![animal(Species::Boar, 0.0, 5.0)], 0.0)).unwrap();
        let i = f.instance_map.iter().position(|&v| v == 1).unwrap();
        f.class_map[i] = 3;
        assert!(matches!(
            derive_annotations(&f),
            Err(Error::InconsistentInstance { instance: 1 })
        ));
    }
}
