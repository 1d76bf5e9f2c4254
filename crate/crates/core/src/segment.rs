//! Connected-component segment extraction from instance-id images.
//!
//! One segment per 4-connected component of equal instance id; components
//! below the minimum area are dropped. The ground-truth id stays on the
//! segment for the harness, but noisy association never consults it beyond
//! proposing matches to corrupt.

use crate::render::Observation;
use crate::world::NO_INSTANCE;
use crate::Real;

/// Run-length encoded mask row: pixels `[start, start+len)` of `row`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelRun {
    pub row: u32,
    pub start: u32,
    pub len: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub frame_index: usize,
    pub local_id: u32,
    pub instance_id: u32,
    /// (u, v) mean of member pixels.
    pub centroid_px: (Real, Real),
    pub area_px: u32,
    pub pixel_runs: Vec<PixelRun>,
}

impl Segment {
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.pixel_runs
            .iter()
            .flat_map(|r| (r.start..r.start + r.len).map(move |u| (u, r.row)))
    }
}

/// Scaled minimum segment area: `base` pixels at 640x480, proportional to
/// the actual pixel count.
pub fn scaled_min_area(base: u32, width: u32, height: u32) -> u32 {
    let scale = (width as Real * height as Real) / (640.0 * 480.0);
    ((base as Real * scale).round() as u32).max(1)
}

pub fn extract_segments(obs: &Observation, frame_index: usize, min_area: u32) -> Vec<Segment> {
    let w = obs.width as usize;
    let h = obs.height as usize;

    // row-run connected components, 4-connectivity, equal instance id
    #[derive(Clone, Copy)]
    struct Run {
        row: u32,
        start: u32,
        len: u32,
        id: u32,
        label: u32,
    }
    let mut runs: Vec<Run> = Vec::new();
    let mut parent: Vec<u32> = Vec::new();

    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    fn union(parent: &mut [u32], a: u32, b: u32) {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            // smaller root wins so labels stay scan-ordered
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi as usize] = lo;
        }
    }

    let mut prev_row: Vec<usize> = Vec::new(); // indices into runs
    for v in 0..h {
        let mut cur_row: Vec<usize> = Vec::new();
        let base = v * w;
        let mut u = 0usize;
        while u < w {
            let id = obs.instance[base + u];
            if id == NO_INSTANCE {
                u += 1;
                continue;
            }
            let start = u;
            while u < w && obs.instance[base + u] == id {
                u += 1;
            }
            let label = runs.len() as u32;
            parent.push(label);
            runs.push(Run { row: v as u32, start: start as u32, len: (u - start) as u32, id, label });
            cur_row.push(runs.len() - 1);
        }
        // link to overlapping runs of the previous row with the same id
        for &ci in &cur_row {
            let (cs, ce, cid, cl) = {
                let r = runs[ci];
                (r.start, r.start + r.len, r.id, r.label)
            };
            for &pi in &prev_row {
                let p = runs[pi];
                if p.id == cid && p.start < ce && cs < p.start + p.len {
                    union(&mut parent, cl, p.label);
                }
            }
        }
        prev_row = cur_row;
    }

    // gather per-root stats
    use std::collections::HashMap;
    let mut groups: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, run) in runs.iter().enumerate() {
        let root = find(&mut parent, run.label);
        groups.entry(root).or_default().push(i);
    }
    let mut roots: Vec<u32> = groups.keys().copied().collect();
    roots.sort_unstable(); // scan order of first run

    let mut segments = Vec::new();
    for root in roots {
        let idxs = &groups[&root];
        let mut area: u64 = 0;
        let mut sum_u: f64 = 0.0;
        let mut sum_v: f64 = 0.0;
        let mut pixel_runs = Vec::with_capacity(idxs.len());
        for &i in idxs {
            let r = runs[i];
            area += r.len as u64;
            let len = r.len as f64;
            sum_u += len * (r.start as f64 + (len - 1.0) / 2.0);
            sum_v += len * r.row as f64;
            pixel_runs.push(PixelRun { row: r.row, start: r.start, len: r.len });
        }
        if (area as u32) < min_area {
            continue;
        }
        pixel_runs.sort_unstable_by_key(|r| (r.row, r.start));
        segments.push(Segment {
            frame_index,
            local_id: segments.len() as u32,
            instance_id: runs[idxs[0]].id,
            centroid_px: (sum_u / area as f64, sum_v / area as f64),
            area_px: area as u32,
            pixel_runs,
        });
    }
    segments
}
