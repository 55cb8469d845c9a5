//! Raster containers: multi-channel intensity images and binary inpainting masks.
//!
//! Images store normalised intensities (8-bit files map through `v / 255`) in
//! row-major, channel-planar order: channel `c` occupies
//! `data[c * width * height..(c + 1) * width * height]`.

use crate::error::{InpaintError, Result};

/// Values of one channel, one entry per pixel in row-major order.
pub type ChannelVector = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(InpaintError::InvalidConfig(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(InpaintError::InvalidConfig(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(InpaintError::dims(expected, data.len()));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image from per-channel planes of equal length `width * height`.
    pub fn from_channels(width: usize, height: usize, planes: Vec<ChannelVector>) -> Result<Self> {
        let n = width * height;
        if let Some(bad) = planes.iter().find(|p| p.len() != n) {
            return Err(InpaintError::dims(n, bad.len()));
        }
        let channels = planes.len();
        let data = planes.into_iter().flatten().collect();
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Pixel count per channel.
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.pixels();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.pixels();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn channel_planes(&self) -> Vec<ChannelVector> {
        (0..self.channels).map(|c| self.channel(c).to_vec()).collect()
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[c * self.pixels() + y * self.width + x]
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn check_shape(&self, other: &ImageBuffer) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(InpaintError::dims(self.shape_string(), other.shape_string()))
        }
    }

    pub(crate) fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    /// Copy with every value clamped into `[0, 1]`.
    pub fn clamped(&self) -> ImageBuffer {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        out
    }

    /// Box-filter resampling to a smaller (or equal) resolution. Each target
    /// pixel averages the source area it covers, with fractional coverage at
    /// the edges of the footprint.
    pub fn downsample_box(&self, width: usize, height: usize) -> Result<ImageBuffer> {
        if width == 0 || height == 0 || width > self.width || height > self.height {
            return Err(InpaintError::InvalidConfig(format!(
                "cannot box-downsample {}x{} to {width}x{height}",
                self.width, self.height
            )));
        }
        let xw = axis_weights(self.width, width);
        let yw = axis_weights(self.height, height);
        let mut data = Vec::with_capacity(width * height * self.channels);
        for c in 0..self.channels {
            let src = self.channel(c);
            for wy in &yw {
                for wx in &xw {
                    let mut acc = 0.0;
                    let mut total = 0.0;
                    for &(sy, ky) in wy {
                        for &(sx, kx) in wx {
                            let k = ky * kx;
                            acc += k * src[sy * self.width + sx];
                            total += k;
                        }
                    }
                    data.push(acc / total);
                }
            }
        }
        ImageBuffer::new(width, height, self.channels, data)
    }
}

// For each target index, the contributing source indices with their overlap lengths.
fn axis_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let lo = i as f64 * scale;
            let hi = lo + scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|s| {
                    let w = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                    (w > 1e-12).then_some((s, w))
                })
                .collect()
        })
        .collect()
}

/// Binary raster of known pixels (the diagonal of the confidence matrix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InpaintingMask {
    width: usize,
    height: usize,
    known: Vec<bool>,
}

impl InpaintingMask {
    /// Rejects masks without a single known pixel.
    pub fn new(width: usize, height: usize, known: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(InpaintError::InvalidConfig(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        if known.len() != width * height {
            return Err(InpaintError::dims(width * height, known.len()));
        }
        if !known.iter().any(|&k| k) {
            return Err(InpaintError::EmptyMask);
        }
        Ok(Self {
            width,
            height,
            known,
        })
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn from_points(width: usize, height: usize, points: &[(usize, usize)]) -> Result<Self> {
        let mut known = vec![false; width * height];
        for &(x, y) in points {
            if x >= width || y >= height {
                return Err(InpaintError::InvalidConfig(format!(
                    "mask point ({x},{y}) outside {width}x{height}"
                )));
            }
            known[y * width + x] = true;
        }
        Self::new(width, height, known)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.known.len()
    }

    pub fn is_empty(&self) -> bool {
        self.known.is_empty()
    }

    pub fn known(&self) -> &[bool] {
        &self.known
    }

    pub fn is_known(&self, i: usize) -> bool {
        self.known[i]
    }

    pub fn is_known_at(&self, x: usize, y: usize) -> bool {
        self.known[y * self.width + x]
    }

    pub fn count_known(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    pub fn density(&self) -> f64 {
        self.count_known() as f64 / self.len() as f64
    }

    pub fn matches(&self, image: &ImageBuffer) -> Result<()> {
        if self.width == image.width() && self.height == image.height() {
            Ok(())
        } else {
            Err(InpaintError::dims(
                format!("{}x{}", self.width, self.height),
                format!("{}x{}", image.width(), image.height()),
            ))
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(InpaintError::dims(self.len(), len))
        }
    }

    /// Number of 4-neighbours inside the image.
    pub fn degree(&self, x: usize, y: usize) -> usize {
        usize::from(x > 0)
            + usize::from(x + 1 < self.width)
            + usize::from(y > 0)
            + usize::from(y + 1 < self.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_wrong_length() {
        assert!(ImageBuffer::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(ImageBuffer::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(ImageBuffer::new(2, 2, 3, vec![0.0; 12]).is_ok());
    }

    #[test]
    fn channels_are_planar() {
        let img = ImageBuffer::new(2, 1, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(img.channel(1), &[3.0, 4.0]);
        assert_eq!(img.get(1, 0, 2), 6.0);
    }

    #[test]
    fn empty_mask_rejected() {
        assert!(matches!(
            InpaintingMask::new(2, 2, vec![false; 4]),
            Err(InpaintError::EmptyMask)
        ));
    }

    #[test]
    fn density_counts_known() {
        let m = InpaintingMask::from_points(4, 4, &[(0, 0), (3, 3)]).unwrap();
        assert_eq!(m.count_known(), 2);
        assert!((m.density() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn degree_at_corners_and_interior() {
        let m = InpaintingMask::full(3, 3).unwrap();
        assert_eq!(m.degree(0, 0), 2);
        assert_eq!(m.degree(1, 0), 3);
        assert_eq!(m.degree(1, 1), 4);
        let strip = InpaintingMask::full(3, 1).unwrap();
        assert_eq!(strip.degree(1, 0), 2);
    }

    #[test]
    fn box_downsample_halves_by_averaging() {
        let img = ImageBuffer::new(4, 2, 1, vec![0.0, 1.0, 0.2, 0.4, 1.0, 0.0, 0.6, 0.8]).unwrap();
        let small = img.downsample_box(2, 1).unwrap();
        assert!((small.data()[0] - 0.5).abs() < 1e-12);
        assert!((small.data()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn box_downsample_fractional_preserves_constants() {
        let img = ImageBuffer::filled(7, 5, 3, 0.3).unwrap();
        let small = img.downsample_box(3, 2).unwrap();
        assert!(small.data().iter().all(|v| (v - 0.3).abs() < 1e-12));
    }
}
