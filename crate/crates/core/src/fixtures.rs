//! Small hand-built instances with known exact answers, shared by tests and docs.

use crate::graph::{Edge, Graph};
use crate::opinion::OpinionPartition;

/// Four nodes: `0(+) -> 1(-)` with weight 1, `0 -> 2(+)` with weight 0.5,
/// `2 -> 3(neutral)` with weight 1.
///
/// Exact net spread: `{0}` 0.5, `{1}` -1, `{2}` 1, `{3}` 0.
pub fn fixture_a() -> (Graph, OpinionPartition) {
    let g = Graph::new(
        4,
        vec![Edge::new(0, 1, 1.0), Edge::new(0, 2, 0.5), Edge::new(2, 3, 1.0)],
    )
    .expect("valid fixture");
    let p = OpinionPartition::from_signs(&[1, -1, 1, 0]).expect("valid labels");
    (g, p)
}

/// Ten-node, unit-weight instance whose net spread is non-monotone and
/// neither submodular nor supermodular.
///
/// * `{0}` reaches positive `1`: `f({0,1}) - f({0}) = 0 < f({1}) - f({}) = 1`.
/// * `2(+)` and `3(-)` both reach negative `4`:
///   `f({2,3}) - f({2}) = -1 > f({3}) - f({}) = -2`.
pub fn non_submodular() -> (Graph, OpinionPartition) {
    let edges = [(0, 1), (1, 6), (2, 4), (3, 4), (7, 8), (8, 5), (8, 9), (7, 9)]
        .into_iter()
        .map(|(u, v)| Edge::new(u, v, 1.0))
        .collect();
    let g = Graph::new(10, edges).expect("valid fixture");
    let p = OpinionPartition::from_signs(&[1, 1, 1, -1, -1, -1, 0, 1, -1, 0]).expect("valid labels");
    (g, p)
}
