//! Box and mask arithmetic underpinning every preprocessing method.
//!
//! Pixel convention: origin top-left, `xmax`/`ymax` exclusive, integer
//! membership (no anti-aliasing).

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate box ({xmin},{ymin},{xmax},{ymax}): min must be strictly below max")]
    EmptyBox {
        xmin: u32,
        ymin: u32,
        xmax: u32,
        ymax: u32,
    },
    #[error("box {inner} exceeds frame {frame}")]
    OutsideFrame { inner: BBox, frame: BBox },
    #[error("box {bbox} exceeds raster bounds {width}x{height}")]
    OutsideRaster { bbox: BBox, width: u32, height: u32 },
}

/// Axis-aligned rectangle in image pixel coordinates, exclusive max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub xmin: u32,
    pub ymin: u32,
    pub xmax: u32,
    pub ymax: u32,
}

impl std::fmt::Display for BBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{})", self.xmin, self.ymin, self.xmax, self.ymax)
    }
}

impl BBox {
    pub fn new(xmin: u32, ymin: u32, xmax: u32, ymax: u32) -> Result<Self, GeometryError> {
        if xmin >= xmax || ymin >= ymax {
            return Err(GeometryError::EmptyBox {
                xmin,
                ymin,
                xmax,
                ymax,
            });
        }
        Ok(Self {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    pub fn width(&self) -> u32 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> u32 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    /// Smallest box enclosing both `self` and `other`.
    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            xmin: self.xmin.min(other.xmin),
            ymin: self.ymin.min(other.ymin),
            xmax: self.xmax.max(other.xmax),
            ymax: self.ymax.max(other.ymax),
        }
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.xmin <= other.xmin
            && self.ymin <= other.ymin
            && self.xmax >= other.xmax
            && self.ymax >= other.ymax
    }

    /// Pixel membership under the exclusive-max convention.
    pub fn contains_point(&self, x: u32, y: u32) -> bool {
        x >= self.xmin && x < self.xmax && y >= self.ymin && y < self.ymax
    }

    /// Translate into the coordinate frame of `frame` (usually a union box).
    pub fn to_local(&self, frame: &BBox) -> Result<BBox, GeometryError> {
        if !frame.contains(self) {
            return Err(GeometryError::OutsideFrame {
                inner: *self,
                frame: *frame,
            });
        }
        Ok(BBox {
            xmin: self.xmin - frame.xmin,
            ymin: self.ymin - frame.ymin,
            xmax: self.xmax - frame.xmin,
            ymax: self.ymax - frame.ymin,
        })
    }

    /// Binary raster of size `height`x`width` with ones exactly inside the box.
    pub fn rasterize(&self, height: u32, width: u32) -> Result<Mask, GeometryError> {
        if self.xmax > width || self.ymax > height {
            return Err(GeometryError::OutsideRaster {
                bbox: *self,
                width,
                height,
            });
        }
        let mut mask = Mask::zeros(height, width);
        for y in self.ymin..self.ymax {
            for x in self.xmin..self.xmax {
                mask.set(y, x, true);
            }
        }
        Ok(mask)
    }
}

/// Binary H×W raster, values in {0,1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    height: u32,
    width: u32,
    data: Vec<u8>,
}

impl Mask {
    pub fn zeros(height: u32, width: u32) -> Self {
        Self {
            height,
            width,
            data: vec![0; height as usize * width as usize],
        }
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn get(&self, y: u32, x: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize] != 0
    }

    #[inline]
    pub fn set(&mut self, y: u32, x: u32, value: bool) {
        self.data[y as usize * self.width as usize + x as usize] = u8::from(value);
    }

    /// Number of set pixels.
    pub fn popcount(&self) -> u64 {
        self.data.iter().map(|&v| u64::from(v)).sum()
    }

    /// Tightest box around the set pixels, or `None` if the mask is empty.
    pub fn bounding_box(&self) -> Option<BBox> {
        let (mut xmin, mut ymin) = (u32::MAX, u32::MAX);
        let (mut xmax, mut ymax) = (0u32, 0u32);
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(y, x) {
                    any = true;
                    xmin = xmin.min(x);
                    ymin = ymin.min(y);
                    xmax = xmax.max(x + 1);
                    ymax = ymax.max(y + 1);
                }
            }
        }
        any.then(|| BBox {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    /// Extract the sub-mask covered by `frame`.
    pub fn crop(&self, frame: &BBox) -> Result<Mask, GeometryError> {
        if frame.xmax > self.width || frame.ymax > self.height {
            return Err(GeometryError::OutsideRaster {
                bbox: *frame,
                width: self.width,
                height: self.height,
            });
        }
        let mut out = Mask::zeros(frame.height(), frame.width());
        for y in 0..frame.height() {
            for x in 0..frame.width() {
                out.set(y, x, self.get(frame.ymin + y, frame.xmin + x));
            }
        }
        Ok(out)
    }

    /// Zero every pixel outside `frame`, in place. Returns how many pixels
    /// were cleared.
    pub fn clip_to(&mut self, frame: &BBox) -> u64 {
        let mut cleared = 0;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(y, x) && !frame.contains_point(x, y) {
                    self.set(y, x, false);
                    cleared += 1;
                }
            }
        }
        cleared
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn bb(xmin: u32, ymin: u32, xmax: u32, ymax: u32) -> BBox {
        BBox::new(xmin, ymin, xmax, ymax).unwrap()
    }

    #[test]
    fn union_takes_coordinate_extremes() {
        let a = bb(10, 20, 40, 60);
        let b = bb(30, 10, 70, 50);
        assert_eq!(a.union(&b), bb(10, 10, 70, 60));
    }

    #[test]
    fn union_with_self_is_identity() {
        let a = bb(3, 4, 9, 11);
        assert_eq!(a.union(&a), a);
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(BBox::new(5, 0, 5, 10).is_err());
        assert!(BBox::new(6, 0, 5, 10).is_err());
        assert!(BBox::new(0, 10, 5, 10).is_err());
    }

    #[test]
    fn to_local_translates_into_frame() {
        let frame = bb(10, 10, 70, 60);
        assert_eq!(bb(10, 10, 20, 20).to_local(&frame).unwrap(), bb(0, 0, 10, 10));
    }

    #[test]
    fn to_local_identity_frame() {
        let frame = bb(0, 0, 100, 80);
        let b = bb(12, 30, 40, 44);
        assert_eq!(b.to_local(&frame).unwrap(), b);
    }

    #[test]
    fn to_local_round_trips() {
        let frame = bb(5, 7, 50, 60);
        let b = bb(10, 12, 30, 40);
        let local = b.to_local(&frame).unwrap();
        let back = BBox::new(
            local.xmin + frame.xmin,
            local.ymin + frame.ymin,
            local.xmax + frame.xmin,
            local.ymax + frame.ymin,
        )
        .unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn to_local_rejects_box_outside_frame() {
        let frame = bb(10, 10, 20, 20);
        assert_eq!(
            bb(5, 10, 15, 20).to_local(&frame),
            Err(GeometryError::OutsideFrame {
                inner: bb(5, 10, 15, 20),
                frame,
            })
        );
    }

    #[test]
    fn rasterize_small_box() {
        let m = bb(0, 0, 2, 2).rasterize(4, 4).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(m.get(y, x), x < 2 && y < 2, "pixel ({x},{y})");
            }
        }
        assert_eq!(m.popcount(), 4);
    }

    #[test]
    fn rasterize_full_frame_is_all_ones() {
        let m = bb(0, 0, 7, 5).rasterize(5, 7).unwrap();
        assert_eq!(m.popcount(), 35);
    }

    #[test]
    fn rasterize_rejects_box_outside_raster() {
        assert!(bb(0, 0, 8, 5).rasterize(5, 7).is_err());
    }

    fn random_box(rng: &mut ChaCha8Rng, w: u32, h: u32) -> BBox {
        let xmin = rng.random_range(0..w - 1);
        let ymin = rng.random_range(0..h - 1);
        let xmax = rng.random_range(xmin + 1..=w);
        let ymax = rng.random_range(ymin + 1..=h);
        bb(xmin, ymin, xmax, ymax)
    }

    // Oracle: rasterize both boxes and take the bounding box of the set
    // pixels by per-pixel scan.
    #[test]
    fn union_matches_rasterized_point_set_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..1000 {
            let a = random_box(&mut rng, 24, 20);
            let b = random_box(&mut rng, 24, 20);
            let mut canvas = a.rasterize(20, 24).unwrap();
            let rb = b.rasterize(20, 24).unwrap();
            for y in 0..20 {
                for x in 0..24 {
                    if rb.get(y, x) {
                        canvas.set(y, x, true);
                    }
                }
            }
            assert_eq!(canvas.bounding_box().unwrap(), a.union(&b));
        }
    }

    // Oracle: popcount by per-pixel scan equals the area product.
    #[test]
    fn rasterize_popcount_matches_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..500 {
            let b = random_box(&mut rng, 32, 25);
            let m = b.rasterize(25, 32).unwrap();
            let mut scan = 0u64;
            for y in 0..25 {
                for x in 0..32 {
                    scan += u64::from(m.get(y, x));
                }
            }
            assert_eq!(scan, m.popcount());
            assert_eq!(m.popcount(), b.area());
        }
    }

    prop_compose! {
        fn arb_box()(xmin in 0u32..30, ymin in 0u32..30, dw in 1u32..30, dh in 1u32..30) -> BBox {
            bb(xmin, ymin, xmin + dw, ymin + dh)
        }
    }

    proptest! {
        #[test]
        fn union_is_commutative_associative_idempotent(a in arb_box(), b in arb_box(), c in arb_box()) {
            prop_assert_eq!(a.union(&b), b.union(&a));
            prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
            prop_assert_eq!(a.union(&a), a);
        }

        #[test]
        fn union_area_dominates_inputs(a in arb_box(), b in arb_box()) {
            let u = a.union(&b);
            prop_assert!(u.area() >= a.area().max(b.area()));
            prop_assert!(u.contains(&a) && u.contains(&b));
        }

        #[test]
        fn union_is_minimal(a in arb_box(), b in arb_box()) {
            // Shrinking any edge of the union excludes a corner pixel of
            // some input.
            let u = a.union(&b);
            prop_assert!(u.xmin == a.xmin || u.xmin == b.xmin);
            prop_assert!(u.ymin == a.ymin || u.ymin == b.ymin);
            prop_assert!(u.xmax == a.xmax || u.xmax == b.xmax);
            prop_assert!(u.ymax == a.ymax || u.ymax == b.ymax);
        }
    }
}
