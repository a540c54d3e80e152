//! K-D tree over fixed-dimension points under the Chebyshev (max-norm)
//! metric, supporting exact open-ball range counts and k-th neighbour
//! distances.

use crate::scalar::Scalar;

const LEAF_SIZE: usize = 12;
/// Depth-first traversal stack; median splits keep the depth logarithmic.
const STACK: usize = 160;
const NO_CHILD: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    start: usize,
    end: usize,
    left: usize,
    right: usize,
}

/// Static K-D tree over points in the Chebyshev (max-norm) metric.
///
/// Points are stored in tree order; per-node bounding boxes live in one flat
/// buffer. One-dimensional sets additionally keep their sorted coordinates so
/// range counts reduce to two binary searches.
#[derive(Debug, Clone)]
pub struct KdTree<T> {
    dim: usize,
    coords: Vec<T>,
    order: Vec<usize>,
    slot: Vec<usize>,
    nodes: Vec<Node>,
    /// `lo` then `hi` corner of each node, `2 * dim` values per node.
    bounds: Vec<T>,
}

/// Max-norm distance between two points.
#[inline(always)]
pub fn chebyshev<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

impl<T: Scalar> KdTree<T> {
    /// Builds a tree over `points`, a flat row-major buffer of `dim`-vectors.
    pub fn new(points: &[T], dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        assert_eq!(points.len() % dim, 0, "ragged point data");
        let n = points.len() / dim;
        let mut order: Vec<usize> = (0..n).collect();
        let mut tree = KdTree {
            dim,
            coords: Vec::new(),
            order: Vec::new(),
            slot: Vec::new(),
            nodes: Vec::new(),
            bounds: Vec::new(),
        };
        if dim == 1 {
            // Fully sorted: the leaves are contiguous value ranges.
            order.sort_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap_or(std::cmp::Ordering::Equal));
        }
        if n > 0 {
            tree.build(points, &mut order, 0, n);
        }
        let mut coords = Vec::with_capacity(points.len());
        for &i in &order {
            coords.extend_from_slice(&points[i * dim..(i + 1) * dim]);
        }
        let mut slot = vec![0; n];
        for (k, &i) in order.iter().enumerate() {
            slot[i] = k;
        }
        tree.coords = coords;
        tree.order = order;
        tree.slot = slot;
        tree
    }

    fn build(&mut self, points: &[T], order: &mut [usize], start: usize, end: usize) -> usize {
        let dim = self.dim;
        let block = &mut order[start..end];
        let id = self.nodes.len();
        let base = self.bounds.len();
        self.bounds.extend(std::iter::repeat_n(T::infinity(), dim));
        self.bounds.extend(std::iter::repeat_n(T::neg_infinity(), dim));
        for &i in block.iter() {
            for d in 0..dim {
                let v = points[i * dim + d];
                self.bounds[base + d] = self.bounds[base + d].min(v);
                self.bounds[base + dim + d] = self.bounds[base + dim + d].max(v);
            }
        }
        self.nodes.push(Node {
            start,
            end,
            left: NO_CHILD,
            right: NO_CHILD,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let (lo, hi) = self.bounds[base..base + 2 * dim].split_at(dim);
        let split_dim = (0..dim)
            .max_by(|&a, &b| {
                (hi[a] - lo[a])
                    .partial_cmp(&(hi[b] - lo[b]))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        if hi[split_dim] <= lo[split_dim] {
            return id;
        }
        let mid = block.len() / 2;
        if dim > 1 {
            block.select_nth_unstable_by(mid, |&a, &b| {
                points[a * dim + split_dim]
                    .partial_cmp(&points[b * dim + split_dim])
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
        }
        let left = self.build(points, order, start, start + mid);
        let right = self.build(points, order, start + mid, end);
        self.nodes[id].left = left;
        self.nodes[id].right = right;
        id
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates of the point with original index `index`.
    pub fn point(&self, index: usize) -> &[T] {
        self.stored(self.slot[index])
    }

    fn stored(&self, k: usize) -> &[T] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    /// Distance from `center` to the node's box (0 inside) and to its
    /// farthest corner.
    #[inline(always)]
    fn box_gap_reach(&self, id: usize, center: &[T], dim: usize) -> (T, T) {
        let base = 2 * dim * id;
        let lo = &self.bounds[base..base + dim];
        let hi = &self.bounds[base + dim..base + 2 * dim];
        let mut gap = T::zero();
        let mut reach = T::zero();
        for d in 0..dim {
            let c = center[d];
            let (l, h) = (lo[d], hi[d]);
            if c < l {
                gap = gap.max(l - c);
            } else if c > h {
                gap = gap.max(c - h);
            }
            reach = reach.max((c - l).abs()).max((h - c).abs());
        }
        (gap, reach)
    }

    #[inline(always)]
    fn box_gap(&self, id: usize, center: &[T], dim: usize) -> T {
        let base = 2 * dim * id;
        let mut gap = T::zero();
        for d in 0..dim {
            let c = center[d];
            let (l, h) = (self.bounds[base + d], self.bounds[base + dim + d]);
            if c < l {
                gap = gap.max(l - c);
            } else if c > h {
                gap = gap.max(c - h);
            }
        }
        gap
    }

    /// Number of points strictly within Chebyshev distance `radius` of
    /// `center`.
    pub fn range_count(&self, center: &[T], radius: T) -> usize {
        assert_eq!(center.len(), self.dim, "query dimension mismatch");
        self.count_impl(center, radius, None)
    }

    /// Like [`range_count`](Self::range_count) centred on point `index`,
    /// not counting the point itself.
    pub fn range_count_excluding(&self, index: usize, radius: T) -> usize {
        let s = self.slot[index];
        self.count_impl(self.stored(s), radius, Some(s))
    }

    fn count_impl(&self, center: &[T], radius: T, exclude_slot: Option<usize>) -> usize {
        if self.nodes.is_empty() || !(radius > T::zero()) {
            return 0;
        }
        // Literal dimensions let the compiler unroll the per-axis loops.
        match self.dim {
            1 => self.count_sorted(center[0], radius, exclude_slot),
            2 => self.count_tree(center, radius, exclude_slot, 2),
            3 => self.count_tree(center, radius, exclude_slot, 3),
            d => self.count_tree(center, radius, exclude_slot, d),
        }
    }

    #[inline(always)]
    fn count_tree(&self, center: &[T], radius: T, exclude_slot: Option<usize>, dim: usize) -> usize {
        let mut count = 0usize;
        let mut stack = [0usize; STACK];
        let mut sp = 1;
        while sp > 0 {
            sp -= 1;
            let id = stack[sp];
            let node = self.nodes[id];
            let (gap, reach) = self.box_gap_reach(id, center, dim);
            if gap >= radius {
                continue;
            }
            if reach < radius {
                count += node.end - node.start;
                if let Some(s) = exclude_slot {
                    if (node.start..node.end).contains(&s) {
                        count -= 1;
                    }
                }
                continue;
            }
            if node.left != NO_CHILD {
                stack[sp] = node.left;
                stack[sp + 1] = node.right;
                sp += 2;
            } else {
                for k in node.start..node.end {
                    let p = &self.coords[k * dim..(k + 1) * dim];
                    if Some(k) != exclude_slot && chebyshev(p, &center[..dim]) < radius {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    /// Exact strict count on sorted one-dimensional data. Floating-point
    /// subtraction is monotone, so `|v - c|` is monotone on each side of `c`
    /// and both boundaries are found by binary search on the same predicate
    /// the brute-force definition uses.
    fn count_sorted(&self, c: T, radius: T, exclude_slot: Option<usize>) -> usize {
        let v = &self.coords;
        let mid = v.partition_point(|&x| x < c);
        let above = v[mid..].partition_point(|&x| (x - c).abs() < radius);
        let below_start = v[..mid].partition_point(|&x| (x - c).abs() >= radius);
        let mut count = above + (mid - below_start);
        if let Some(s) = exclude_slot {
            if (below_start..mid + above).contains(&s) {
                count -= 1;
            }
        }
        count
    }

    /// Distance from point `index` to its `k`-th nearest other point.
    pub fn kth_neighbor_distance(&self, index: usize, k: usize) -> T {
        assert!(k >= 1 && k < self.len(), "k must lie in [1, len)");
        match self.dim {
            1 => self.kth_impl(index, k, 1),
            2 => self.kth_impl(index, k, 2),
            3 => self.kth_impl(index, k, 3),
            d => self.kth_impl(index, k, d),
        }
    }

    #[inline(always)]
    fn kth_impl(&self, index: usize, k: usize, dim: usize) -> T {
        let skip = self.slot[index];
        let center = &self.coords[skip * dim..(skip + 1) * dim];
        // Ascending k smallest distances seen so far.
        let mut best: Vec<T> = Vec::with_capacity(k + 1);
        let mut stack = [0usize; STACK];
        let mut sp = 1;
        while sp > 0 {
            sp -= 1;
            let id = stack[sp];
            if best.len() == k && self.box_gap(id, center, dim) >= best[k - 1] {
                continue;
            }
            let node = self.nodes[id];
            if node.left != NO_CHILD {
                let gl = self.box_gap(node.left, center, dim);
                let gr = self.box_gap(node.right, center, dim);
                // Visit the nearer child first (it is pushed last).
                let (near, far) = if gl <= gr { (node.left, node.right) } else { (node.right, node.left) };
                stack[sp] = far;
                stack[sp + 1] = near;
                sp += 2;
            } else {
                for s in node.start..node.end {
                    if s == skip {
                        continue;
                    }
                    let d = chebyshev(&self.coords[s * dim..(s + 1) * dim], center);
                    if best.len() < k || d < best[k - 1] {
                        let at = best.partition_point(|&b| b <= d);
                        best.insert(at, d);
                        best.truncate(k);
                    }
                }
            }
        }
        best.get(k - 1).copied().unwrap_or(T::infinity())
    }
}
