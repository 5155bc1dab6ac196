use super::segment::Component;
use crate::geometry::Vec2;

/// Pixel of `component` furthest along `axis`.
///
/// The extremal row of a rounded cap usually holds several pixels; the
/// middle one in `(x, y)` order is chosen, and of an even-sized tie the
/// upper of the two middle pixels (so a two-pixel tie yields the larger x).
pub fn locate_tip(component: &Component, axis: Vec2) -> Vec2 {
    const TIE_EPS: f64 = 1e-9;
    let proj = |&(x, y): &(u32, u32)| f64::from(x) * axis.x + f64::from(y) * axis.y;
    let best = component.pixels.iter().map(proj).fold(f64::NEG_INFINITY, f64::max);
    let mut ties: Vec<(u32, u32)> = component
        .pixels
        .iter()
        .copied()
        .filter(|p| proj(p) >= best - TIE_EPS)
        .collect();
    ties.sort_unstable();
    let (x, y) = ties[ties.len() / 2];
    Vec2::new(f64::from(x), f64::from(y))
}

pub fn locate_tips(components: &[Component], axis: Vec2) -> Vec<Vec2> {
    components.iter().map(|c| locate_tip(c, axis)).collect()
}
