//! Board areas.

use ggp_core::board::BoardSpec;
use smallvec::SmallVec;

use crate::error::{KnowledgeError, Result};

pub type AreaIndex = SmallVec<[u32; 4]>;

/// s = floor((d+1) / (log2(d+1) + 1)), at least 1.
pub fn area_size(d: f64) -> u32 {
    let d = d.abs();
    let s = ((d + 1.0) / ((d + 1.0).log2() + 1.0)).floor();
    (s as u32).max(1)
}

pub fn spec_area_size(spec: &BoardSpec) -> u32 {
    area_size(spec.d_max - spec.d_min)
}

pub fn in_bounds(coords: &[f64], spec: &BoardSpec) -> bool {
    coords.len() == spec.n_dims && coords.iter().all(|&r| r >= spec.d_min && r <= spec.d_max)
}

pub(crate) fn area_of(coords: &[f64], d_min: f64, s: u32) -> AreaIndex {
    coords
        .iter()
        .map(|&r| ((r - d_min) / s as f64).floor().max(0.0) as u32)
        .collect()
}

pub fn area_index(coords: &[f64], spec: &BoardSpec) -> Result<AreaIndex> {
    if !in_bounds(coords, spec) {
        return Err(KnowledgeError::OutOfBounds(coords.to_vec()));
    }
    Ok(area_of(coords, spec.d_min, spec_area_size(spec)))
}

/// All integer points of the board, last dimension fastest.
pub fn board_points(spec: &BoardSpec) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = {
        let mut v = Vec::new();
        let mut r = spec.d_min;
        while r <= spec.d_max {
            v.push(r);
            r += 1.0;
        }
        v
    };
    let mut out = vec![Vec::new()];
    for _ in 0..spec.n_dims {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&r| {
                    let mut q = p.clone();
                    q.push(r);
                    q
                })
            })
            .collect();
    }
    out
}

/// Every area index that contains at least one board point.
pub fn all_areas(spec: &BoardSpec) -> Vec<AreaIndex> {
    let mut v: Vec<AreaIndex> = board_points(spec)
        .iter()
        .map(|p| area_of(p, spec.d_min, spec_area_size(spec)))
        .collect();
    v.sort();
    v.dedup();
    v
}
