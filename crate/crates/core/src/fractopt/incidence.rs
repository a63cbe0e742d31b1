use crate::intgraph::InterferenceGraph;

/// Signed edge-incidence structure shared by every color: row `2m` holds
/// `+1` at the smaller endpoint of edge `m`, row `2m+1` holds `-1` at the
/// larger one.
#[derive(Clone, Debug, PartialEq)]
pub struct IncidenceMatrices {
    pub num_vertices: usize,
    /// Lexicographic `(z, t)` with `z < t`.
    pub edges: Vec<(usize, usize)>,
}

impl IncidenceMatrices {
    pub fn num_rows(&self) -> usize {
        2 * self.edges.len()
    }

    /// `(column, sign)` of the single nonzero in `row`.
    pub fn entry(&self, row: usize) -> (usize, i8) {
        let (z, t) = self.edges[row / 2];
        if row % 2 == 0 {
            (z, 1)
        } else {
            (t, -1)
        }
    }

    pub fn dense(&self) -> Vec<Vec<i8>> {
        (0..self.num_rows())
            .map(|r| {
                let mut row = vec![0; self.num_vertices];
                let (c, s) = self.entry(r);
                row[c] = s;
                row
            })
            .collect()
    }

    /// `D β` for one color.
    pub fn apply(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.num_rows())
            .map(|r| {
                let (c, s) = self.entry(r);
                f64::from(s) * beta[c]
            })
            .collect()
    }
}

/// Incidence of the interference graph; logs a warning when it is
/// disconnected.
pub fn build_incidence(graph: &InterferenceGraph) -> IncidenceMatrices {
    let comps = graph.components();
    if comps.len() > 1 {
        log::warn!(
            "interference graph has {} components; consensus needs bridging edges",
            comps.len()
        );
    }
    IncidenceMatrices {
        num_vertices: graph.num_vertices(),
        edges: graph.edges(),
    }
}

/// Edges over which consensus is enforced: the graph's own edges followed
/// by one bridge between the smallest vertices of consecutive components.
/// Returns the edges and the number of bridges.
pub fn consensus_edges(graph: &InterferenceGraph) -> (Vec<(usize, usize)>, usize) {
    let mut edges = graph.edges();
    let comps = graph.components();
    let bridges = comps.len().saturating_sub(1);
    for w in comps.windows(2) {
        edges.push((w[0][0], w[1][0]));
    }
    (edges, bridges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_rows() {
        let g = InterferenceGraph::from_edges(2, &[(0, 1)]).unwrap();
        let d = build_incidence(&g).dense();
        assert_eq!(d, vec![vec![1, 0], vec![0, -1]]);
    }

    #[test]
    fn empty_graph_has_no_rows() {
        let g = InterferenceGraph::empty(3);
        assert_eq!(build_incidence(&g).num_rows(), 0);
    }

    #[test]
    fn path_null_space_is_constants() {
        // Consensus D β = θ with θ_z + θ_t = 0 means β_z − β_t = 0 per edge.
        let g = InterferenceGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let inc = build_incidence(&g);
        assert_eq!(inc.num_rows(), 4);
        let pair_sum = |b: &[f64]| {
            let v = inc.apply(b);
            v.chunks(2).map(|p| (p[0] + p[1]).abs()).fold(0.0, f64::max)
        };
        assert_eq!(pair_sum(&[0.3, 0.3, 0.3]), 0.0);
        assert!(pair_sum(&[0.3, 0.3, 0.4]) > 0.0);
        assert!(pair_sum(&[0.4, 0.3, 0.3]) > 0.0);
    }

    #[test]
    fn bridges_join_components() {
        let g = InterferenceGraph::from_edges(5, &[(0, 1), (3, 4)]).unwrap();
        let (edges, bridges) = consensus_edges(&g);
        assert_eq!(bridges, 2);
        assert_eq!(edges, vec![(0, 1), (3, 4), (0, 2), (2, 3)]);
    }
}
