//! Segment association between two frames.
//!
//! Ground-truth mode matches segments that share an instance id, pairing
//! split components greedily by descending area. Noisy mode corrupts that
//! matching with seeded drop and rewire noise, emulating an imperfect
//! feature matcher while staying deterministic per frame pair.

use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64Mcg;

use crate::segment::Segment;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssociationMode {
    GroundTruth,
    Noisy,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssociationModel {
    pub mode: AssociationMode,
    pub p_drop: Real,
    pub p_swap: Real,
    pub rng_seed: u64,
}

impl AssociationModel {
    pub fn ground_truth() -> Self {
        Self { mode: AssociationMode::GroundTruth, p_drop: 0.0, p_swap: 0.0, rng_seed: 0 }
    }

    pub fn noisy(p_drop: Real, p_swap: Real, rng_seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&p_drop), "p_drop out of range");
        assert!((0.0..=1.0).contains(&p_swap), "p_swap out of range");
        Self { mode: AssociationMode::Noisy, p_drop, p_swap, rng_seed }
    }

    /// Reseed, keeping mode and probabilities.
    pub fn with_seed(self, rng_seed: u64) -> Self {
        Self { rng_seed, ..self }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// RNG stream derived from the model seed and the frame pair, so the noise
/// is reproducible regardless of call order.
fn pair_rng(model: &AssociationModel, frame_a: usize, frame_b: usize) -> Pcg64Mcg {
    let h = splitmix64(model.rng_seed ^ splitmix64(frame_a as u64) ^ splitmix64((frame_b as u64) << 1 | 1));
    Pcg64Mcg::seed_from_u64(h)
}

/// Partial matching between two frames: each entry is an index pair
/// (`frame_a` index, `frame_b` index); each segment appears at most once.
pub fn associate(
    frame_a: &[Segment],
    frame_b: &[Segment],
    model: &AssociationModel,
) -> Vec<(usize, usize)> {
    // ground-truth proposal: per instance id, pair by descending area
    let order = |segs: &[Segment]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..segs.len()).collect();
        idx.sort_by(|&i, &j| {
            segs[j]
                .area_px
                .cmp(&segs[i].area_px)
                .then(segs[i].local_id.cmp(&segs[j].local_id))
        });
        idx
    };
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut instance_ids: Vec<u32> = frame_a.iter().map(|s| s.instance_id).collect();
    instance_ids.sort_unstable();
    instance_ids.dedup();
    let a_order = order(frame_a);
    let b_order = order(frame_b);
    for id in instance_ids {
        let a_group: Vec<usize> = a_order.iter().copied().filter(|&i| frame_a[i].instance_id == id).collect();
        let b_group: Vec<usize> = b_order.iter().copied().filter(|&i| frame_b[i].instance_id == id).collect();
        for (ai, bi) in a_group.into_iter().zip(b_group) {
            pairs.push((ai, bi));
        }
    }
    pairs.sort_unstable();

    if model.mode == AssociationMode::GroundTruth {
        return pairs;
    }

    let fa = frame_a.first().map_or(0, |s| s.frame_index);
    let fb = frame_b.first().map_or(0, |s| s.frame_index);
    let mut rng = pair_rng(model, fa, fb);

    // drop pass
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for pair in pairs {
        if model.p_drop > 0.0 && rng.random_bool(model.p_drop) {
            continue;
        }
        kept.push(pair);
    }

    // swap pass: rewire to a random unmatched co-visible segment so the
    // result stays a partial matching
    let mut used_b: Vec<bool> = vec![false; frame_b.len()];
    for &(_, b) in &kept {
        used_b[b] = true;
    }
    for k in 0..kept.len() {
        if model.p_swap > 0.0 && rng.random_bool(model.p_swap) {
            let free: Vec<usize> = (0..frame_b.len()).filter(|&i| !used_b[i]).collect();
            if free.is_empty() {
                continue;
            }
            let pick = free[rng.random_range(0..free.len())];
            used_b[kept[k].1] = false;
            used_b[pick] = true;
            kept[k].1 = pick;
        }
    }
    kept.sort_unstable();
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(frame: usize, local: u32, instance: u32, area: u32) -> Segment {
        Segment {
            frame_index: frame,
            local_id: local,
            instance_id: instance,
            centroid_px: (local as Real, 0.0),
            area_px: area,
            pixel_runs: vec![crate::segment::PixelRun { row: 0, start: local, len: 1 }],
        }
    }

    #[test]
    fn ground_truth_matches_shared_instances() {
        let a = vec![seg(0, 0, 10, 100), seg(0, 1, 11, 50)];
        let b = vec![seg(1, 0, 11, 60), seg(1, 1, 10, 90), seg(1, 2, 12, 10)];
        let m = associate(&a, &b, &AssociationModel::ground_truth());
        assert_eq!(m, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn split_components_pair_by_descending_area() {
        let a = vec![seg(0, 0, 5, 40), seg(0, 1, 5, 400)];
        let b = vec![seg(1, 0, 5, 350), seg(1, 1, 5, 60)];
        let m = associate(&a, &b, &AssociationModel::ground_truth());
        // biggest with biggest
        assert_eq!(m, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn full_drop_empties_the_matching() {
        let a = vec![seg(0, 0, 10, 100)];
        let b = vec![seg(1, 0, 10, 100)];
        let m = associate(&a, &b, &AssociationModel::noisy(1.0, 0.0, 4));
        assert!(m.is_empty());
    }

    #[test]
    fn noisy_matching_is_deterministic() {
        let a: Vec<Segment> = (0..8).map(|i| seg(0, i, 100 + i, 50 + i)).collect();
        let b: Vec<Segment> = (0..8).map(|i| seg(1, i, 100 + i, 55 + i)).collect();
        let model = AssociationModel::noisy(0.2, 0.5, 77);
        let m1 = associate(&a, &b, &model);
        let m2 = associate(&a, &b, &model);
        assert_eq!(m1, m2);
        assert!(!m1.is_empty());
    }

    #[test]
    fn swap_preserves_partial_matching() {
        let a: Vec<Segment> = (0..10).map(|i| seg(0, i, i, 100)).collect();
        let b: Vec<Segment> = (0..10).map(|i| seg(1, i, i, 100)).collect();
        for seed in 0..20 {
            let m = associate(&a, &b, &AssociationModel::noisy(0.1, 0.6, seed));
            let mut seen_a = std::collections::HashSet::new();
            let mut seen_b = std::collections::HashSet::new();
            for (x, y) in m {
                assert!(seen_a.insert(x));
                assert!(seen_b.insert(y));
            }
        }
    }

    #[test]
    #[should_panic]
    fn probability_out_of_range_panics() {
        AssociationModel::noisy(1.5, 0.0, 0);
    }
}
