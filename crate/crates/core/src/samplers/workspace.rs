use nalgebra::{DMatrix, DVector};

use crate::model::{partition_by_threshold, ChangePointState, Dataset, SegmentPartition};

/// Per-segment sufficient statistics `X_k'X_k` and `X_k'Y_k` for the current
/// partition.
///
/// When the change points move, only rows that switch segment are touched:
/// each is subtracted from its old segment and added to its new one as a
/// rank-1 update. Moves that relabel more than half the rows fall back to a
/// full recomputation.
#[derive(Clone, Debug)]
pub struct KernelWorkspace {
    part: SegmentPartition,
    grams: Vec<DMatrix<f64>>,
    cross: Vec<DVector<f64>>,
    row: DVector<f64>,
}

impl KernelWorkspace {
    pub fn new(data: &Dataset, cp: &ChangePointState) -> Self {
        let part = partition_by_threshold(data.t(), cp);
        let p = data.p();
        let mut ws = Self {
            grams: vec![DMatrix::zeros(p, p); part.num_segments()],
            cross: vec![DVector::zeros(p); part.num_segments()],
            part,
            row: DVector::zeros(p),
        };
        ws.recompute(data);
        ws
    }

    pub fn partition(&self) -> &SegmentPartition {
        &self.part
    }

    pub fn gram(&self, k: usize) -> &DMatrix<f64> {
        &self.grams[k]
    }

    pub fn cross(&self, k: usize) -> &DVector<f64> {
        &self.cross[k]
    }

    /// Rebuilds every Gram matrix and cross-product from scratch.
    pub fn recompute(&mut self, data: &Dataset) {
        for k in 0..self.part.num_segments() {
            let r = self.part.range(k);
            if r.is_empty() {
                self.grams[k].fill(0.0);
                self.cross[k].fill(0.0);
                continue;
            }
            let xk = data.x().rows(r.start, r.len());
            self.grams[k] = xk.tr_mul(&xk);
            self.cross[k] = xk.tr_mul(&data.y().rows(r.start, r.len()));
        }
    }

    /// Recomputes the cross-products only, after the response changed.
    pub fn refresh_cross(&mut self, data: &Dataset) {
        for k in 0..self.part.num_segments() {
            let r = self.part.range(k);
            if r.is_empty() {
                self.cross[k].fill(0.0);
                continue;
            }
            let xk = data.x().rows(r.start, r.len());
            self.cross[k] = xk.tr_mul(&data.y().rows(r.start, r.len()));
        }
    }

    /// Moves to `next`, updating the statistics of the rows that changed
    /// segment.
    pub fn move_to(&mut self, data: &Dataset, next: SegmentPartition) {
        assert_eq!(next.num_segments(), self.part.num_segments());
        let moved = changed_rows(&self.part, &next);
        let total: usize = moved.iter().map(|r| r.len()).sum();
        if 2 * total > data.n() {
            self.part = next;
            self.recompute(data);
            return;
        }
        for range in moved {
            for i in range {
                let from = self.part.segment_of_row(i);
                let to = next.segment_of_row(i);
                if from == to {
                    continue;
                }
                self.row.copy_from(&data.x().row(i).transpose());
                let y = data.y()[i];
                self.grams[from].ger(-1.0, &self.row, &self.row, 1.0);
                self.grams[to].ger(1.0, &self.row, &self.row, 1.0);
                self.cross[from].axpy(-y, &self.row, 1.0);
                self.cross[to].axpy(y, &self.row, 1.0);
            }
        }
        self.part = next;
    }
}

/// Disjoint, sorted row ranges that may change segment between two
/// partitions with the same number of segments.
pub(crate) fn changed_rows(
    old: &SegmentPartition,
    new: &SegmentPartition,
) -> Vec<std::ops::Range<usize>> {
    let mut ranges: Vec<std::ops::Range<usize>> = (1..old.num_segments())
        .filter_map(|k| {
            let (a, b) = (old.range(k).start, new.range(k).start);
            (a != b).then(|| a.min(b)..a.max(b))
        })
        .collect();
    ranges.sort_by_key(|r| r.start);
    let mut merged: Vec<std::ops::Range<usize>> = Vec::with_capacity(ranges.len());
    for r in ranges {
        match merged.last_mut() {
            Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
            _ => merged.push(r),
        }
    }
    merged
}
