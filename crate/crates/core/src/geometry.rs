//! Axis-aligned boxes in top-left/width/height form and their overlap measures.
//!
//! Coordinates are continuous pixels with the origin at the image top-left and
//! y growing downward. Nothing is rounded until a box is written to a file.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BBox {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl BBox {
    pub const fn new(left: f64, top: f64, width: f64, height: f64) -> Self {
        Self {
            left,
            top,
            width,
            height,
        }
    }

    /// Builds a box from center x/y, aspect ratio (width / height) and height.
    pub fn from_xyah(cx: f64, cy: f64, aspect: f64, height: f64) -> Self {
        let width = aspect * height;
        Self {
            left: cx - width / 2.0,
            top: cy - height / 2.0,
            width,
            height,
        }
    }

    /// Center x/y, aspect ratio and height: the observation space of the motion model.
    pub fn to_xyah(&self) -> [f64; 4] {
        [
            self.left + self.width / 2.0,
            self.top + self.height / 2.0,
            self.width / self.height,
            self.height,
        ]
    }

    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.top + self.height
    }

    pub fn center(&self) -> (f64, f64) {
        (self.left + self.width / 2.0, self.top + self.height / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn is_valid(&self) -> bool {
        self.width > 0.0
            && self.height > 0.0
            && self.left.is_finite()
            && self.top.is_finite()
            && self.width.is_finite()
            && self.height.is_finite()
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::DegenerateBox {
                width: self.width,
                height: self.height,
            })
        }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self {
            left: self.left + dx,
            top: self.top + dy,
            ..*self
        }
    }

    fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.right().min(other.right()) - self.left.max(other.left)).max(0.0);
        let h = (self.bottom().min(other.bottom()) - self.top.max(other.top)).max(0.0);
        w * h
    }

    fn enclosing_area(&self, other: &BBox) -> f64 {
        let w = self.right().max(other.right()) - self.left.min(other.left);
        let h = self.bottom().max(other.bottom()) - self.top.min(other.top);
        w * h
    }
}

/// Intersection over union, in `[0, 1]`.
pub fn iou(a: &BBox, b: &BBox) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    Ok(inter / union)
}

/// Generalized IoU, in `[-1, 1]`. Never exceeds [`iou`]; negative for disjoint boxes.
pub fn giou(a: &BBox, b: &BBox) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    let hull = a.enclosing_area(b);
    Ok(inter / union - (hull - union) / hull)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const UNIT: BBox = BBox::new(0.0, 0.0, 10.0, 10.0);

    #[test]
    fn iou_examples() {
        assert_eq!(iou(&UNIT, &UNIT).unwrap(), 1.0);
        assert_eq!(iou(&UNIT, &BBox::new(100.0, 100.0, 10.0, 10.0)).unwrap(), 0.0);
        // inter 50, union 150
        let v = iou(&UNIT, &BBox::new(5.0, 0.0, 10.0, 10.0)).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn giou_examples() {
        assert_eq!(giou(&UNIT, &UNIT).unwrap(), 1.0);
        // hull 300, union 200, no overlap
        let v = giou(&UNIT, &BBox::new(20.0, 0.0, 10.0, 10.0)).unwrap();
        assert!((v + 1.0 / 3.0).abs() < 1e-12);
        // hull equals union, so giou == iou
        let v = giou(&UNIT, &BBox::new(5.0, 0.0, 10.0, 10.0)).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_boxes_rejected() {
        let flat = BBox::new(0.0, 0.0, 10.0, 0.0);
        assert!(matches!(iou(&UNIT, &flat), Err(Error::DegenerateBox { .. })));
        assert!(giou(&BBox::new(0.0, 0.0, -1.0, 5.0), &UNIT).is_err());
    }

    #[test]
    fn xyah_example() {
        let b = BBox::new(100.0, 50.0, 50.0, 100.0);
        assert_eq!(b.to_xyah(), [125.0, 100.0, 0.5, 100.0]);
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (-500.0..500.0f64, -500.0..500.0f64, 0.5..300.0f64, 0.5..300.0f64)
            .prop_map(|(l, t, w, h)| BBox::new(l, t, w, h))
    }

    proptest! {
        #[test]
        fn overlap_symmetry(a in arb_box(), b in arb_box()) {
            prop_assert_eq!(iou(&a, &b).unwrap(), iou(&b, &a).unwrap());
            prop_assert_eq!(giou(&a, &b).unwrap(), giou(&b, &a).unwrap());
        }

        #[test]
        fn giou_bounded_by_iou(a in arb_box(), b in arb_box()) {
            let i = iou(&a, &b).unwrap();
            let g = giou(&a, &b).unwrap();
            prop_assert!(g <= i + 1e-12);
            prop_assert!((-1.0..=1.0).contains(&g));
            prop_assert!((0.0..=1.0).contains(&i));
        }

        #[test]
        fn self_overlap_is_one(a in arb_box()) {
            prop_assert!((iou(&a, &a).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((giou(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn translation_invariance(a in arb_box(), b in arb_box(), dx in -100.0..100.0f64, dy in -100.0..100.0f64) {
            let (ta, tb) = (a.translate(dx, dy), b.translate(dx, dy));
            prop_assert!((iou(&a, &b).unwrap() - iou(&ta, &tb).unwrap()).abs() < 1e-12);
            prop_assert!((giou(&a, &b).unwrap() - giou(&ta, &tb).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn xyah_round_trip(a in arb_box()) {
            let [cx, cy, asp, h] = a.to_xyah();
            let r = BBox::from_xyah(cx, cy, asp, h);
            let scale = a.left.abs().max(a.top.abs()).max(a.width).max(a.height);
            prop_assert!((r.left - a.left).abs() <= 1e-9 * scale);
            prop_assert!((r.top - a.top).abs() <= 1e-9 * scale);
            prop_assert!((r.width - a.width).abs() <= 1e-9 * a.width);
            prop_assert!((r.height - a.height).abs() <= 1e-9 * a.height);
        }
    }
}
