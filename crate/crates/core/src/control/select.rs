use std::cmp::Ordering;

use super::TeControlConfig;
use crate::graph::HeterophilyStats;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Sorted by degree (descending), then node index.
    pub selected: Vec<usize>,
    pub heterophily_used: HeterophilyStats,
    pub epoch: usize,
}

// Guards the ceilings against representation error such as 0.1 · 30 =
// 3.0000000000000004.
fn ceil_fraction(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Sizes of the heterophily stage and the degree stage for `n` nodes.
pub fn selection_sizes(n: usize, cfg: &TeControlConfig) -> (usize, usize) {
    if n == 0 {
        return (0, 0);
    }
    let stage1 = ceil_fraction(cfg.het_fraction, n).clamp(1, n);
    let stage2 = ceil_fraction(cfg.degree_fraction, stage1).clamp(1, stage1);
    (stage1, stage2)
}

/// Keeps the most heterophilic nodes (ties to higher degree, then lower
/// index), then the highest-degree nodes among them (ties to lower index).
pub fn select_nodes(
    het: &HeterophilyStats,
    degrees: &[usize],
    cfg: &TeControlConfig,
    epoch: usize,
) -> SelectionResult {
    let h = &het.per_node;
    let n = h.len().min(degrees.len());
    let (k1, k2) = selection_sizes(n, cfg);
    let by_degree = |a: &usize, b: &usize| -> Ordering { degrees[*b].cmp(&degrees[*a]).then(a.cmp(b)) };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| h[*b].total_cmp(&h[*a]).then_with(|| by_degree(a, b)));
    order.truncate(k1);
    order.sort_by(by_degree);
    order.truncate(k2);
    SelectionResult {
        selected: order,
        heterophily_used: het.clone(),
        epoch,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LabelSource;
    use proptest::prelude::*;

    fn stats(per_node: Vec<f64>) -> HeterophilyStats {
        HeterophilyStats {
            per_node,
            homophily_level: 0.0,
            label_source: LabelSource::FullLabels,
        }
    }

    #[test]
    fn cora_sized_selection() {
        assert_eq!(selection_sizes(2708, &TeControlConfig::default()), (136, 14));
    }

    #[test]
    fn exact_products_do_not_round_up() {
        let cfg = TeControlConfig {
            het_fraction: 0.1,
            degree_fraction: 0.1,
            ..Default::default()
        };
        assert_eq!(selection_sizes(30, &cfg), (3, 1));
        assert_eq!(selection_sizes(100, &TeControlConfig::default()), (5, 1));
    }

    #[test]
    fn single_node() {
        let r = select_nodes(&stats(vec![0.0]), &[0], &TeControlConfig::default(), 0);
        assert_eq!(r.selected, vec![0]);
    }

    #[test]
    fn equal_heterophily_falls_back_to_degree_then_index() {
        let cfg = TeControlConfig {
            het_fraction: 0.5,
            degree_fraction: 1.0,
            ..Default::default()
        };
        let degrees = [1, 3, 2, 3, 1, 2];
        let r = select_nodes(&stats(vec![0.5; 6]), &degrees, &cfg, 0);
        assert_eq!(r.selected, vec![1, 3, 2]);
    }

    #[test]
    fn second_stage_picks_by_degree() {
        let cfg = TeControlConfig {
            het_fraction: 0.4,
            degree_fraction: 0.5,
            ..Default::default()
        };
        let h = vec![0.9, 0.1, 0.8, 0.7, 0.0, 0.95, 0.2, 0.3, 0.1, 0.0];
        let degrees = [2, 9, 5, 1, 9, 1, 1, 1, 1, 1];
        // Stage 1: {5, 0, 2, 3}; stage 2 keeps the two of highest degree.
        let r = select_nodes(&stats(h), &degrees, &cfg, 3);
        assert_eq!(r.selected, vec![2, 0]);
        assert_eq!(r.epoch, 3);
    }

    proptest! {
        #[test]
        fn selection_properties(
            h in proptest::collection::vec(0u8..5, 1..80),
            seed_degrees in proptest::collection::vec(0usize..8, 80),
            het in 0.01f64..1.0,
            deg in 0.01f64..1.0,
        ) {
            let n = h.len();
            let per_node: Vec<f64> = h.iter().map(|&v| v as f64 / 4.0).collect();
            let degrees = &seed_degrees[..n];
            let cfg = TeControlConfig { het_fraction: het, degree_fraction: deg, ..Default::default() };
            let st = stats(per_node.clone());
            let a = select_nodes(&st, degrees, &cfg, 0);
            let b = select_nodes(&st, degrees, &cfg, 0);
            prop_assert_eq!(&a, &b);
            let (k1, k2) = selection_sizes(n, &cfg);
            prop_assert!(a.selected.len() == k2 && k2 >= 1);
            prop_assert!(k2 <= k1);
            for w in a.selected.windows(2) {
                prop_assert!((degrees[w[1]], w[0]) < (degrees[w[0]], w[1]) || degrees[w[1]] < degrees[w[0]]);
            }
            // Stage 1 is a top-k by heterophily: at most k1 nodes beat the
            // weakest selected one.
            let min_sel = a.selected.iter().map(|&i| per_node[i]).fold(f64::INFINITY, f64::min);
            let above = per_node.iter().filter(|&&v| v > min_sel).count();
            prop_assert!(above < k1);
        }
    }
}
