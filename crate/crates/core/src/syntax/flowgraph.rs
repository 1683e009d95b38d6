//! Control-flow graphs ingested from line-delimited graph records.
//!
//! Each line is one JSON object:
//! `{"sample_id": "m1", "nodes": [[1, "entry"], [2, "return"]], "edges": [[1, 2]]}`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("malformed graph record at line {line}: {message}")]
    MalformedGraph { line: usize, message: String },
    #[error("edge ({source_id}, {target_id}) references an undeclared node")]
    DanglingEdge { source_id: u32, target_id: u32 },
    #[error("graph {sample_id} declares node {node} twice")]
    DuplicateNode { sample_id: String, node: u32 },
    #[error("graph {sample_id} has no nodes")]
    EmptyGraph { sample_id: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Statement-level control-flow graph. Node order is declaration order; the
/// first declared node is the entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowGraph {
    pub sample_id: String,
    pub nodes: Vec<(u32, String)>,
    pub edges: Vec<(u32, u32)>,
}

impl FlowGraph {
    pub fn new(
        sample_id: impl Into<String>,
        nodes: Vec<(u32, String)>,
        edges: Vec<(u32, u32)>,
    ) -> Result<Self, GraphError> {
        let graph = FlowGraph {
            sample_id: sample_id.into(),
            nodes,
            edges,
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.nodes.is_empty() {
            return Err(GraphError::EmptyGraph {
                sample_id: self.sample_id.clone(),
            });
        }
        let mut seen = BTreeSet::new();
        for &(id, _) in &self.nodes {
            if !seen.insert(id) {
                return Err(GraphError::DuplicateNode {
                    sample_id: self.sample_id.clone(),
                    node: id,
                });
            }
        }
        for &(source_id, target_id) in &self.edges {
            if !seen.contains(&source_id) || !seen.contains(&target_id) {
                return Err(GraphError::DanglingEdge {
                    source_id,
                    target_id,
                });
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Maps node ids to 1-based declaration positions.
    pub fn positions(&self) -> BTreeMap<u32, u32> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, &(id, _))| (id, i as u32 + 1))
            .collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|(_, label)| label.as_str())
    }

    /// Breadth-first depth of every node (declaration order) from the entry node,
    /// following edges forward. Unreachable nodes get `None`.
    pub fn bfs_depths(&self) -> Vec<Option<u32>> {
        let positions = self.positions();
        let n = self.nodes.len();
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (s, t) in &self.edges {
            adjacency[positions[s] as usize - 1].push(positions[t] as usize - 1);
        }
        let mut depth = vec![None; n];
        if n == 0 {
            return depth;
        }
        depth[0] = Some(0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            let next = depth[v].map(|d| d + 1);
            for &w in &adjacency[v] {
                if depth[w].is_none() {
                    depth[w] = next;
                    queue.push_back(w);
                }
            }
        }
        depth
    }
}

/// Reads one graph per line; blank lines are skipped.
pub fn read_flowgraphs(reader: impl BufRead) -> Result<Vec<FlowGraph>, GraphError> {
    let mut graphs = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let graph: FlowGraph =
            serde_json::from_str(&line).map_err(|e| GraphError::MalformedGraph {
                line: line_no + 1,
                message: e.to_string(),
            })?;
        graph.validate()?;
        graphs.push(graph);
    }
    Ok(graphs)
}

pub fn load_flowgraphs(path: impl AsRef<Path>) -> Result<Vec<FlowGraph>, GraphError> {
    read_flowgraphs(records::open(path.as_ref())?)
}

pub fn write_flowgraphs<'a>(
    mut writer: impl Write,
    graphs: impl IntoIterator<Item = &'a FlowGraph>,
) -> Result<(), GraphError> {
    for graph in graphs {
        records::write_record(&mut writer, graph)?;
    }
    Ok(())
}

pub fn save_flowgraphs<'a>(
    path: impl AsRef<Path>,
    graphs: impl IntoIterator<Item = &'a FlowGraph>,
) -> Result<(), GraphError> {
    let mut writer = records::create(path.as_ref())?;
    write_flowgraphs(&mut writer, graphs)?;
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_graph_loads() {
        let text = r#"{"sample_id":"m","nodes":[[1,"entry"],[2,"return"]],"edges":[[1,2]]}"#;
        let graphs = read_flowgraphs(text.as_bytes()).unwrap();
        assert_eq!(graphs.len(), 1);
        assert_eq!(graphs[0].node_count(), 2);
        assert_eq!(graphs[0].edge_count(), 1);
    }

    #[test]
    fn dangling_edge_is_rejected() {
        let text = r#"{"sample_id":"m","nodes":[[1,"entry"],[2,"return"]],"edges":[[1,5]]}"#;
        match read_flowgraphs(text.as_bytes()) {
            Err(GraphError::DanglingEdge {
                source_id: 1,
                target_id: 5,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_record_reports_line() {
        let text = "{\"sample_id\":\"a\",\"nodes\":[[1,\"x\"]],\"edges\":[]}\n{\"sample_id\":\"b\",\"nodes\":7}\n";
        match read_flowgraphs(text.as_bytes()) {
            Err(GraphError::MalformedGraph { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let empty = r#"{"sample_id":"e","nodes":[],"edges":[]}"#;
        assert!(matches!(
            read_flowgraphs(empty.as_bytes()),
            Err(GraphError::EmptyGraph { .. })
        ));
    }

    #[test]
    fn depths_follow_forward_edges() {
        let g = FlowGraph::new(
            "d",
            vec![
                (1, "a".into()),
                (2, "b".into()),
                (3, "c".into()),
                (4, "d".into()),
                (9, "dead".into()),
            ],
            vec![(1, 2), (1, 3), (2, 4), (3, 4)],
        )
        .unwrap();
        assert_eq!(g.bfs_depths(), [Some(0), Some(1), Some(1), Some(2), None]);
    }
}
