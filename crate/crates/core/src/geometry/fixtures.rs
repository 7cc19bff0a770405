//! Small labelled centerlines with known geometry, shared by tests and examples.

use super::{CenterlineBuilder, CenterlineTree, PointId};
use crate::Real;

fn unit<T: Real>(v: [T; 3]) -> [T; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Appends a straight run of points after `parent` and returns the last one.
///
/// Points are placed every `spacing` (the final step may be shorter so the run
/// ends exactly at `length`).
#[allow(clippy::too_many_arguments)]
pub fn add_line<T: Real>(
    b: &mut CenterlineBuilder<T>,
    parent: PointId,
    direction: [T; 3],
    length: T,
    spacing: T,
    misr: T,
    branch_id: usize,
    in_junction: bool,
) -> PointId {
    let d = unit(direction);
    let start = b.position(parent);
    let steps = (length / spacing).ceil().to_usize().unwrap_or(1).max(1);
    let mut last = parent;
    for k in 1..=steps {
        let s = (spacing * T::from_count(k)).min(length);
        let p = [start[0] + d[0] * s, start[1] + d[1] * s, start[2] + d[2] * s];
        last = b.add(Some(last), p, misr, branch_id, in_junction);
    }
    last
}

fn branch_dir<T: Real>(angle: f64, azimuth: f64) -> [T; 3] {
    [
        T::lit(angle.sin() * azimuth.cos()),
        T::lit(angle.sin() * azimuth.sin()),
        T::lit(angle.cos()),
    ]
}

/// Straight vessel of length `length` along +z with constant radius.
pub fn straight<T: Real>(length: T, radius: T, spacing: T) -> CenterlineTree<T> {
    let mut b = CenterlineBuilder::new();
    let root = b.add(None, [T::zero(); 3], radius, 0, false);
    add_line(&mut b, root, [T::zero(), T::zero(), T::one()], length, spacing, radius, 0, false);
    b.build().expect("valid straight centerline")
}

/// Quarter circle of curvature radius `bend` in the x-z plane, starting along +z.
pub fn quarter_arc<T: Real>(bend: T, radius: T, samples: usize) -> CenterlineTree<T> {
    let mut b = CenterlineBuilder::new();
    let mut last = b.add(None, [T::zero(); 3], radius, 0, false);
    for k in 1..=samples {
        let phi = T::FRAC_PI_2() * T::from_count(k) / T::from_count(samples);
        let p = [bend * (T::one() - phi.cos()), T::zero(), bend * phi.sin()];
        last = b.add(Some(last), p, radius, 0, false);
    }
    let tree = b.build().expect("valid arc");
    // Replace the finite-difference tangents with the exact ones.
    let pts: Vec<_> = tree
        .points()
        .enumerate()
        .map(|(k, p)| {
            let phi = T::FRAC_PI_2() * T::from_count(k) / T::from_count(samples);
            let mut q = p.clone();
            q.tangent = [phi.sin(), T::zero(), phi.cos()];
            q
        })
        .collect();
    let edges: Vec<[PointId; 2]> = (1..=samples).map(|k| [PointId(k - 1), PointId(k)]).collect();
    CenterlineTree::new(pts, &edges, PointId(0)).expect("valid arc")
}

/// Symmetric Y: a 10 cm stem along +z, a junction region reaching 1 cm into
/// each branch at ±30°, and two 10 cm branches.
pub fn y_shape<T: Real>(stem_radius: T, branch_radius: T) -> CenterlineTree<T> {
    let mut b = CenterlineBuilder::new();
    let spacing = T::lit(0.5);
    let root = b.add(None, [T::zero(); 3], stem_radius, 0, false);
    let end = add_line(&mut b, root, [T::zero(), T::zero(), T::one()], T::lit(10.0), spacing, stem_radius, 0, false);
    for (k, az) in [0.0, std::f64::consts::PI].into_iter().enumerate() {
        let dir = branch_dir::<T>(std::f64::consts::FRAC_PI_6, az);
        let j = add_line(&mut b, end, dir, T::one(), spacing, branch_radius, 0, true);
        add_line(&mut b, j, dir, T::lit(10.0), spacing, branch_radius, k + 1, false);
    }
    b.build().expect("valid y-shape")
}

/// Y whose first branch ends in a second Y: 5 vessels, 2 junctions.
pub fn chain_with_two_junctions<T: Real>() -> CenterlineTree<T> {
    let mut b = CenterlineBuilder::new();
    let spacing = T::lit(0.5);
    let r = T::one();
    let root = b.add(None, [T::zero(); 3], r, 0, false);
    let end = add_line(&mut b, root, [T::zero(), T::zero(), T::one()], T::lit(8.0), spacing, r, 0, false);
    let d1 = branch_dir::<T>(0.4, 0.0);
    let d2 = branch_dir::<T>(0.4, std::f64::consts::PI);
    let j1 = add_line(&mut b, end, d1, T::one(), spacing, r, 0, true);
    let v1 = add_line(&mut b, j1, d1, T::lit(6.0), spacing, r, 1, false);
    let j2 = add_line(&mut b, end, d2, T::one(), spacing, r, 0, true);
    add_line(&mut b, j2, d2, T::lit(6.0), spacing, r, 2, false);
    for (k, az) in [0.5, 2.5].into_iter().enumerate() {
        let d = branch_dir::<T>(0.7, az);
        let j = add_line(&mut b, v1, d, T::lit(0.8), spacing, r, 1, true);
        add_line(&mut b, j, d, T::lit(5.0), spacing, r, 3 + k, false);
    }
    b.build().expect("valid chain")
}

/// One junction with `in_junction_lengths.len()` outlets. Outlet `k` leaves the
/// stem end through a straight in-junction run of the given length and then
/// continues as a vessel of length `outlet_lengths[k]` (spacing 0.25).
pub fn multi_outlet<T: Real>(in_junction_lengths: &[T], outlet_lengths: &[T], outlet_radius: T) -> CenterlineTree<T> {
    assert_eq!(in_junction_lengths.len(), outlet_lengths.len());
    let mut b = CenterlineBuilder::new();
    let spacing = T::lit(0.25);
    let r = T::one();
    let root = b.add(None, [T::zero(); 3], r, 0, false);
    let end = add_line(&mut b, root, [T::zero(), T::zero(), T::one()], T::lit(10.0), spacing, r, 0, false);
    let n = in_junction_lengths.len();
    for k in 0..n {
        let az = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let d = branch_dir::<T>(0.6, az);
        let j = add_line(&mut b, end, d, in_junction_lengths[k], spacing, outlet_radius, 0, true);
        // the vessel starts one spacing after the last junction point
        add_line(&mut b, j, d, outlet_lengths[k] + spacing, spacing, outlet_radius, k + 1, false);
    }
    b.build().expect("valid multi-outlet junction")
}
