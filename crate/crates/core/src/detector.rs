//! Beacon candidates: binarize, group, filter by box area, then gate by
//! Hu-moment distance to a reference symbol.

use crate::imaging::{
    binarize, connected_components, BoundingBox, Frame, GrayImage, HuFeature, Moments,
    DEFAULT_THRESHOLD,
};
use crate::simulator::render::{centered_patch, Shape};

/// Side of the canonical reference patch.
pub const REFERENCE_PATCH_PX: usize = 21;
/// Apparent size of the symbol in the reference patch.
pub const REFERENCE_SYMBOL_PX: f64 = 2.5;
/// Blur of the reference symbol.
pub const REFERENCE_BLOOM_PX: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub threshold: u8,
    pub min_area: u64,
    pub max_area: u64,
    pub hu_threshold: f64,
    /// Pixels added around a proposal box before moments are taken.
    pub margin: u32,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            threshold: DEFAULT_THRESHOLD,
            min_area: 3,
            max_area: 400,
            hu_threshold: 0.2,
            margin: 1,
        }
    }
}

/// A proposal that passed the shape gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    /// Intensity centroid in frame coordinates, pixel centers at integers.
    pub centroid: (f64, f64),
    pub patch_sum: f64,
    pub hu_dist: f64,
    pub frame_index: u64,
    /// Moments of the cropped grayscale patch.
    pub moments: Moments,
}

/// The diagonal symbol every proposal is compared with.
#[derive(Debug, Clone)]
pub struct Reference {
    patch: GrayImage,
    features: HuFeature,
}

impl Reference {
    pub fn from_patch(patch: GrayImage) -> crate::error::Result<Self> {
        let features = HuFeature::normalized(&Moments::of(&patch)?);
        Ok(Reference { patch, features })
    }

    /// A 21x21 anti-aliased diagonal bar, softened like a beacon at mid range.
    pub fn canonical() -> Self {
        Reference::symbol(REFERENCE_SYMBOL_PX, REFERENCE_BLOOM_PX)
    }

    /// A 21x21 diagonal bar of `size_px` blurred by `bloom_px`.
    pub fn symbol(size_px: f64, bloom_px: f64) -> Self {
        let shape = Shape::Symbol {
            size: size_px,
            bit: 1,
        };
        let patch = centered_patch(shape, REFERENCE_PATCH_PX, bloom_px, 255.0);
        Reference::from_patch(patch).expect("reference is not blank")
    }

    pub fn patch(&self) -> &GrayImage {
        &self.patch
    }

    pub fn features(&self) -> &HuFeature {
        &self.features
    }
}

/// Connected components of the binarized frame with `w*h` inside the area bounds.
pub fn propose(frame: &Frame, params: &DetectorParams) -> Vec<BoundingBox> {
    let bin = binarize(&frame.image, params.threshold);
    connected_components(&bin)
        .into_iter()
        .filter(|b| (params.min_area..=params.max_area).contains(&b.area()))
        .collect()
}

/// Proposals whose grayscale patch lies within the Hu-distance threshold of
/// the reference, in scan order.
pub fn detect(frame: &Frame, reference: &Reference, params: &DetectorParams) -> Vec<Detection> {
    propose(frame, params)
        .into_iter()
        .filter_map(|b| measure(frame, &b, reference, params))
        .filter(|d| d.hu_dist < params.hu_threshold)
        .collect()
}

/// Crops a proposal, takes its moments and its distance to the reference.
/// Returns `None` for an all-zero crop.
pub fn measure(
    frame: &Frame,
    bbox: &BoundingBox,
    reference: &Reference,
    params: &DetectorParams,
) -> Option<Detection> {
    let crop_box = bbox.expand(params.margin, frame.width(), frame.height());
    let patch = frame.image.crop(&crop_box);
    let m = Moments::of(&patch).ok()?;
    let hu_dist = HuFeature::normalized(&m).distance(reference.features());
    Some(Detection {
        bbox: *bbox,
        centroid: (crop_box.x as f64 + m.cx, crop_box.y as f64 + m.cy),
        patch_sum: m.m00,
        hu_dist,
        frame_index: frame.index,
        moments: m,
    })
}
