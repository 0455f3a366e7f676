//! Order, join, widening and meet, all componentwise except the meet.

use crate::interval::{Interval, Thresholds};

use super::registry::{IndRegistry, Origin};
use super::value::{iota, kappa, FpsValue};

fn width(g: &FpsValue, h: &FpsValue) -> usize {
    g.slopes().len().max(h.slopes().len())
}

pub fn fps_leq(g: &FpsValue, h: &FpsValue) -> bool {
    g.m().leq(&h.m()) && (0..width(g, h)).all(|i| g.coord(i).leq(&h.coord(i)))
}

pub fn fps_join(g: &FpsValue, h: &FpsValue) -> FpsValue {
    let s = (0..width(g, h)).map(|i| g.coord(i).join(&h.coord(i))).collect();
    FpsValue::new(g.m().join(&h.m()), s)
}

pub fn fps_widen(g: &FpsValue, h: &FpsValue, thresholds: &Thresholds) -> FpsValue {
    let s = (0..width(g, h))
        .map(|i| g.coord(i).widen(&h.coord(i), thresholds))
        .collect();
    FpsValue::new(g.m().widen(&h.m(), thresholds), s)
}

/// Which case of the meet applies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeetCase {
    /// The two enclosures are disjoint.
    Bottom,
    /// `ι(g) ⊆ ι(h)`: keep `g`.
    Left,
    /// `ι(h) ⊂ ι(g)`: keep `h`.
    Right,
    /// Neither contains the other; the intersection is returned.
    Overlap(Interval),
}

pub fn meet_case(g: &FpsValue, h: &FpsValue, reg: &IndRegistry) -> MeetCase {
    let ig = iota(g, reg);
    let ih = iota(h, reg);
    let i = ig.meet(&ih);
    if i.is_bottom() {
        MeetCase::Bottom
    } else if ig.leq(&ih) {
        MeetCase::Left
    } else if ih.leq(&ig) {
        MeetCase::Right
    } else {
        MeetCase::Overlap(i)
    }
}

/// Greatest-lower-bound substitute. In the overlapping case a fresh
/// independent variable holding the intersection is registered and its unit
/// slope value returned. `None` is bottom.
pub fn fps_meet(g: &FpsValue, h: &FpsValue, reg: &mut IndRegistry, origin: Origin) -> Option<FpsValue> {
    match meet_case(g, h, reg) {
        MeetCase::Bottom => None,
        MeetCase::Left => Some(g.clone()),
        MeetCase::Right => Some(h.clone()),
        MeetCase::Overlap(i) => {
            let l = reg.register(origin, i);
            Some(kappa(reg, l))
        }
    }
}
