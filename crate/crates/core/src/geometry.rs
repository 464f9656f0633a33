//! Box arithmetic shared by the model, the losses and the metrics.
//!
//! Boxes are center-parameterized `(cx, cy, w, h)` in frame-normalized units,
//! so the identity box transform is `c = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted magnitude for the log-size components of a transform.
pub const MAX_LOG_SCALE: f64 = 20.0;

/// Axis-aligned rectangle, center-parameterized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self { cx, cy, w, h }
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0
            && self.h > 0.0
            && self.cx.is_finite()
            && self.cy.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Range(format!("invalid box {self:?}")))
        }
    }

    pub fn x_min(&self) -> f64 {
        self.cx - 0.5 * self.w
    }

    pub fn x_max(&self) -> f64 {
        self.cx + 0.5 * self.w
    }

    pub fn y_min(&self) -> f64 {
        self.cy - 0.5 * self.h
    }

    pub fn y_max(&self) -> f64 {
        self.cy + 0.5 * self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x_min() && x <= self.x_max() && y >= self.y_min() && y <= self.y_max()
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.cx, self.cy, self.w, self.h]
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.cx + dx, self.cy + dy, self.w, self.h)
    }
}

/// The 9-dimensional agent-centric configuration of a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeConfig {
    pub dxc: f64,
    pub dyc: f64,
    pub dxmin: f64,
    pub dymin: f64,
    pub dxmax: f64,
    pub dymax: f64,
    pub dw: f64,
    pub dh: f64,
    pub iou: f64,
}

impl RelativeConfig {
    pub const DIM: usize = 9;

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.dxc, self.dyc, self.dxmin, self.dymin, self.dxmax, self.dymax, self.dw, self.dh,
            self.iou,
        ]
    }
}

/// Center offsets in units of the source box size plus log size ratios.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoxTransform {
    pub cx_off: f64,
    pub cy_off: f64,
    pub cw_log: f64,
    pub ch_log: f64,
}

impl BoxTransform {
    pub const fn new(cx_off: f64, cy_off: f64, cw_log: f64, ch_log: f64) -> Self {
        Self {
            cx_off,
            cy_off,
            cw_log,
            ch_log,
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.cx_off, self.cy_off, self.cw_log, self.ch_log]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

pub fn intersection_area(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x_max().min(b.x_max()) - a.x_min().max(b.x_min())).max(0.0);
    let ih = (a.y_max().min(b.y_max()) - a.y_min().max(b.y_min())).max(0.0);
    iw * ih
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    // edge-based areas so that iou(a, a) == 1 exactly
    let edge_area = |x: &BBox| (x.x_max() - x.x_min()) * (x.y_max() - x.y_min());
    let inter = intersection_area(a, b);
    let union = edge_area(a) + edge_area(b) - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Region geometry expressed in a frame where the agent sits at the origin
/// with unit width and height (each axis normalized separately).
pub fn relative_config(agent: &BBox, region: &BBox) -> RelativeConfig {
    RelativeConfig {
        dxc: (region.cx - agent.cx) / agent.w,
        dyc: (region.cy - agent.cy) / agent.h,
        dxmin: (region.x_min() - agent.cx) / agent.w,
        dymin: (region.y_min() - agent.cy) / agent.h,
        dxmax: (region.x_max() - agent.cx) / agent.w,
        dymax: (region.y_max() - agent.cy) / agent.h,
        dw: region.w / agent.w,
        dh: region.h / agent.h,
        iou: iou(agent, region),
    }
}

pub fn check_transform(c: &BoxTransform) -> Result<()> {
    let finite = c.to_array().iter().all(|v| v.is_finite());
    if !finite || c.cw_log.abs() > MAX_LOG_SCALE || c.ch_log.abs() > MAX_LOG_SCALE {
        return Err(Error::Range(format!(
            "box transform {c:?} outside |log scale| <= {MAX_LOG_SCALE}"
        )));
    }
    Ok(())
}

pub fn apply_box_transform(p: &BBox, c: &BoxTransform) -> Result<BBox> {
    check_transform(c)?;
    Ok(BBox::new(
        c.cx_off * p.w + p.cx,
        c.cy_off * p.h + p.cy,
        c.cw_log.exp() * p.w,
        c.ch_log.exp() * p.h,
    ))
}

pub fn encode_box_transform(from: &BBox, to: &BBox) -> BoxTransform {
    BoxTransform::new(
        (to.cx - from.cx) / from.w,
        (to.cy - from.cy) / from.h,
        (to.w / from.w).ln(),
        (to.h / from.h).ln(),
    )
}

pub fn smooth_l1(z: f64) -> f64 {
    let a = z.abs();
    if a < 1.0 {
        0.5 * z * z
    } else {
        a - 0.5
    }
}

/// Derivative of [`smooth_l1`].
pub fn smooth_l1_grad(z: f64) -> f64 {
    if z.abs() < 1.0 {
        z
    } else {
        z.signum()
    }
}
