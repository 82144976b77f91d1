//! Training-set augmentations.
//!
//! `noise`, `scale` and `duplication` work on any feature layout. The
//! remaining methods need an [`ImageShape`] and fail on tabular data.

use crate::rng::SeededRng;
use crate::space::{AugMethod, FeatureSpec};
use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayViewMut1, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{Dataset, ImageShape};
use super::TrainError;

/// Sigma of the jitter added to duplicated rows.
const DUPLICATE_JITTER: f64 = 0.05;

fn gaussian_noise(features: &mut Array2<f64>, sigma: f64, rng: &mut SeededRng) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    features.iter_mut().for_each(|v| *v += normal.sample(rng));
}

fn image_shape(method: AugMethod, data: &Dataset) -> Result<ImageShape, TrainError> {
    data.image_shape.ok_or(TrainError::NotApplicable { method })
}

/// Applies one method with parameter `param` (the method default when
/// `None`) and returns the augmented copy.
pub fn augment(
    method: AugMethod,
    data: &Dataset,
    param: Option<f64>,
    rng: &mut SeededRng,
) -> Result<Dataset, TrainError> {
    let param = param.or(method.default_param()).unwrap_or(0.0);
    if method.requires_image() {
        image_shape(method, data)?;
    }
    let mut out = data.clone();
    match method {
        AugMethod::None => {}
        AugMethod::Noise => gaussian_noise(&mut out.features, param, rng),
        AugMethod::Duplication => {
            let copies = param.round().max(0.0) as usize;
            let mut blocks = vec![data.features.clone()];
            let mut targets = data.targets.clone();
            for _ in 0..copies {
                let mut copy = data.features.clone();
                gaussian_noise(&mut copy, DUPLICATE_JITTER, rng);
                blocks.push(copy);
                targets.extend_from_slice(&data.targets);
            }
            let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
            out.features = concatenate(Axis(0), &views).expect("blocks share columns");
            out.targets = targets;
        }
        AugMethod::Scale => {
            for mut row in out.features.axis_iter_mut(Axis(0)) {
                let factor = 1.0 + rng.random_range(-1.0..=1.0) * param;
                row.mapv_inplace(|v| v * factor);
            }
        }
        AugMethod::Flip => {
            let shape = image_shape(method, data)?;
            for mut row in out.features.axis_iter_mut(Axis(0)) {
                if param >= 1.0 || rng.random::<f64>() < param {
                    flip_row(&mut row, shape);
                }
            }
        }
        AugMethod::Shift => {
            let shape = image_shape(method, data)?;
            let max = param.round().max(0.0) as i64;
            for mut row in out.features.axis_iter_mut(Axis(0)) {
                let dy = rng.random_range(-max..=max);
                let dx = rng.random_range(-max..=max);
                let src = row.to_owned();
                warp_row(&src.view(), &mut row, shape, |y, x| {
                    (y as f64 - dy as f64, x as f64 - dx as f64)
                });
            }
        }
        AugMethod::Rotation => {
            let shape = image_shape(method, data)?;
            let (cy, cx) = (
                (shape.height as f64 - 1.0) / 2.0,
                (shape.width as f64 - 1.0) / 2.0,
            );
            for mut row in out.features.axis_iter_mut(Axis(0)) {
                let angle = rng.random_range(-1.0..=1.0) * param.to_radians();
                let (sin, cos) = angle.sin_cos();
                let src = row.to_owned();
                // Inverse mapping: rotate each destination pixel back.
                warp_row(&src.view(), &mut row, shape, |y, x| {
                    let (ry, rx) = (y as f64 - cy, x as f64 - cx);
                    (cy + cos * ry - sin * rx, cx + sin * ry + cos * rx)
                });
            }
        }
        AugMethod::Contrast => {
            let shape = image_shape(method, data)?;
            for mut row in out.features.axis_iter_mut(Axis(0)) {
                let factor = 1.0 + rng.random_range(-1.0..=1.0) * param;
                for c in 0..shape.channels {
                    let idx: Vec<usize> = (0..shape.height)
                        .flat_map(|y| (0..shape.width).map(move |x| shape.index(y, x, c)))
                        .collect();
                    let mean = idx.iter().map(|&i| row[i]).sum::<f64>() / idx.len() as f64;
                    for i in idx {
                        row[i] = mean + (row[i] - mean) * factor;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Applies every method of `spec` in order. Image-only methods on tabular
/// data are errors.
pub fn augment_all(
    spec: &FeatureSpec,
    data: &Dataset,
    rng: &mut SeededRng,
) -> Result<Dataset, TrainError> {
    let mut out = data.clone();
    for &method in &spec.methods {
        if method == AugMethod::None {
            continue;
        }
        out = augment(method, &out, spec.param(method), rng)?;
    }
    Ok(out)
}

fn flip_row(row: &mut ArrayViewMut1<f64>, shape: ImageShape) {
    for y in 0..shape.height {
        for x in 0..shape.width / 2 {
            let mirror = shape.width - 1 - x;
            for c in 0..shape.channels {
                row.swap(shape.index(y, x, c), shape.index(y, mirror, c));
            }
        }
    }
}

/// Fills `dst` by nearest-neighbour sampling of `src` at `source(y, x)`;
/// samples outside the image read as zero.
fn warp_row(
    src: &ArrayView1<f64>,
    dst: &mut ArrayViewMut1<f64>,
    shape: ImageShape,
    source: impl Fn(usize, usize) -> (f64, f64),
) {
    let mut buf = Array1::zeros(dst.len());
    for y in 0..shape.height {
        for x in 0..shape.width {
            let (sy, sx) = source(y, x);
            let (sy, sx) = (sy.round(), sx.round());
            if sy < 0.0 || sx < 0.0 || sy >= shape.height as f64 || sx >= shape.width as f64 {
                continue;
            }
            for c in 0..shape.channels {
                buf[shape.index(y, x, c)] = src[shape.index(sy as usize, sx as usize, c)];
            }
        }
    }
    dst.assign(&buf);
}
