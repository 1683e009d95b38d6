//! ⟨d,c,u⟩ and ⟨c,u⟩ probing targets.
//!
//! * `d`: node positions (breadth-first ids for trees, block numbers for
//!   statement trees, traversal depths for flow graphs).
//! * `c`: child structure. Trees store one group per internal node, tagged
//!   with the owning position; statement trees store, per block, the token
//!   indices of the block's non-root nodes in preorder; flow graphs store the
//!   edge list followed by every edge reversed.
//! * `u`: vocabulary index of each node's token.
//!
//! Flattening to numbers (see [`flatten`]):
//! * tree `c`: each group's children followed by a 0 sentinel;
//! * statement-tree `c`: each block's indices shifted by +1, then a 0 sentinel;
//! * graph `c`: concatenated `(source, target)` pairs;
//! * CU `c`: 0/1 flags; CU `u`: label indices in a label vocabulary.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records;
use crate::syntax::{FlowGraph, SyntaxNode, SyntaxTree};
use crate::vocab::Vocabulary;

/// Label given to reconstructed nodes whose index is out of vocabulary.
pub const OOV_LABEL: &str = "⟨OOV⟩";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TupleKind {
    WholeTree,
    StatementTrees,
    FlowGraph,
}

impl fmt::Display for TupleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TupleKind::WholeTree => "WholeTree",
            TupleKind::StatementTrees => "StatementTrees",
            TupleKind::FlowGraph => "FlowGraph",
        })
    }
}

impl FromStr for TupleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "wholetree" | "tree" | "ast" => Ok(TupleKind::WholeTree),
            "statementtrees" | "st" | "statements" => Ok(TupleKind::StatementTrees),
            "flowgraph" | "cfg" | "graph" => Ok(TupleKind::FlowGraph),
            _ => Err(format!("unknown tuple kind {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    D,
    C,
    U,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::D => "d",
            Component::C => "c",
            Component::U => "u",
        })
    }
}

/// Children of one internal tree node, left to right.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildGroup {
    pub parent: u32,
    pub children: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Children {
    Groups(Vec<ChildGroup>),
    Blocks(Vec<Vec<u32>>),
    Edges(Vec<(u32, u32)>),
}

impl Children {
    /// Number of entries: groups, blocks or directed edges.
    pub fn len(&self) -> usize {
        match self {
            Children::Groups(g) => g.len(),
            Children::Blocks(b) => b.len(),
            Children::Edges(e) => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcuTuple {
    pub kind: TupleKind,
    pub d: Vec<u32>,
    pub c: Children,
    pub u: Vec<u32>,
    /// Flow-graph positions not reachable from the entry node.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unreachable: Vec<u32>,
}

impl DcuTuple {
    pub fn node_count(&self) -> usize {
        self.u.len()
    }

    /// Per-node child count: group size for trees, block size for statement
    /// trees, out-degree for flow graphs (original edges only).
    pub fn child_counts(&self) -> Vec<u32> {
        let n = self.node_count();
        let mut counts = vec![0u32; n];
        match &self.c {
            Children::Groups(groups) => {
                for g in groups {
                    if let Some(slot) = counts.get_mut((g.parent as usize).wrapping_sub(1)) {
                        *slot = g.children.len() as u32;
                    }
                }
            }
            Children::Blocks(blocks) => {
                for (slot, block) in counts.iter_mut().zip(blocks) {
                    *slot = block.len() as u32;
                }
            }
            Children::Edges(edges) => {
                for &(s, _) in &edges[..edges.len() / 2] {
                    if let Some(slot) = counts.get_mut((s as usize).wrapping_sub(1)) {
                        *slot += 1;
                    }
                }
            }
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuTuple {
    pub c: Vec<bool>,
    pub u: Vec<String>,
}

/// Numeric view of one tuple component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleVector {
    pub component: Component,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TupleError {
    #[error("inconsistent tuple: {0}")]
    InconsistentTuple(String),
    #[error("{0} tuples cannot be reconstructed")]
    NotReconstructible(TupleKind),
    #[error("flow graph has no nodes")]
    EmptyGraph,
    #[error("no statement trees")]
    EmptyStatementTrees,
}

pub fn tree_to_dcu(tree: &SyntaxTree, vocab: &Vocabulary) -> DcuTuple {
    let n = tree.node_count() as u32;
    let c = tree
        .nodes()
        .iter()
        .filter(|node| !node.is_leaf())
        .map(|node| ChildGroup {
            parent: node.id as u32,
            children: node.children.iter().map(|&c| c as u32).collect(),
        })
        .collect();
    DcuTuple {
        kind: TupleKind::WholeTree,
        d: (1..=n).collect(),
        c: Children::Groups(c),
        u: tree.tokens().map(|t| vocab.lookup(t)).collect(),
        unreachable: Vec::new(),
    }
}

pub fn statement_trees_to_dcu(
    sts: &[SyntaxTree],
    vocab: &Vocabulary,
) -> Result<DcuTuple, TupleError> {
    if sts.is_empty() {
        return Err(TupleError::EmptyStatementTrees);
    }
    let mut blocks = Vec::with_capacity(sts.len());
    let mut u = Vec::with_capacity(sts.len());
    for st in sts {
        let order = st.preorder();
        u.push(vocab.lookup(st.node(order[0]).token()));
        blocks.push(
            order[1..]
                .iter()
                .map(|&id| vocab.lookup(st.node(id).token()))
                .collect(),
        );
    }
    Ok(DcuTuple {
        kind: TupleKind::StatementTrees,
        d: (1..=sts.len() as u32).collect(),
        c: Children::Blocks(blocks),
        u,
        unreachable: Vec::new(),
    })
}

pub fn flowgraph_to_dcu(graph: &FlowGraph, vocab: &Vocabulary) -> Result<DcuTuple, TupleError> {
    if graph.nodes.is_empty() {
        return Err(TupleError::EmptyGraph);
    }
    let depths = graph.bfs_depths();
    let reachable_max = depths.iter().flatten().copied().max().unwrap_or(0);
    let mut unreachable = Vec::new();
    let d = depths
        .iter()
        .enumerate()
        .map(|(i, depth)| {
            depth.unwrap_or_else(|| {
                unreachable.push(i as u32 + 1);
                reachable_max + 1
            })
        })
        .collect();
    let positions = graph.positions();
    let forward: Vec<(u32, u32)> = graph
        .edges
        .iter()
        .map(|(s, t)| (positions[s], positions[t]))
        .collect();
    let mut c = forward.clone();
    c.extend(forward.iter().map(|&(s, t)| (t, s)));
    Ok(DcuTuple {
        kind: TupleKind::FlowGraph,
        d,
        c: Children::Edges(c),
        u: graph.labels().map(|l| vocab.lookup(l)).collect(),
        unreachable,
    })
}

pub fn tree_to_cu(tree: &SyntaxTree) -> CuTuple {
    CuTuple {
        c: tree.nodes().iter().map(|n| !n.is_leaf()).collect(),
        u: tree.labels().map(str::to_string).collect(),
    }
}

/// Checks the ⟨d,c,u⟩ invariants for the tuple's kind.
pub fn validate(t: &DcuTuple) -> Result<(), TupleError> {
    let bad = |m: String| Err(TupleError::InconsistentTuple(m));
    let n = t.u.len();
    if t.d.len() != n {
        return bad(format!("|d| = {} but |u| = {n}", t.d.len()));
    }
    let valid_position = |p: u32| p >= 1 && p as usize <= n;
    match (&t.kind, &t.c) {
        (TupleKind::WholeTree, Children::Groups(groups)) => {
            if n == 0 {
                return bad("empty tuple".into());
            }
            if t.d.iter().enumerate().any(|(i, &p)| p as usize != i + 1) {
                return bad("d is not 1..=n".into());
            }
            let mut seen = vec![false; n + 1];
            let mut owners = vec![false; n + 1];
            for g in groups {
                if !valid_position(g.parent) {
                    return bad(format!("group owner {} outside 1..={n}", g.parent));
                }
                if std::mem::replace(&mut owners[g.parent as usize], true) {
                    return bad(format!("node {} owns two groups", g.parent));
                }
                if g.children.is_empty() {
                    return bad(format!("empty group for node {}", g.parent));
                }
                for &child in &g.children {
                    if !valid_position(child) {
                        return bad(format!("child {child} outside 1..={n}"));
                    }
                    if child <= g.parent {
                        return bad(format!("child {child} does not exceed parent {}", g.parent));
                    }
                    if std::mem::replace(&mut seen[child as usize], true) {
                        return bad(format!("child {child} appears in two groups"));
                    }
                }
            }
            if let Some(orphan) = (2..=n).find(|&p| !seen[p]) {
                return bad(format!("node {orphan} has no parent"));
            }
        }
        (TupleKind::StatementTrees, Children::Blocks(blocks)) => {
            if t.d.iter().enumerate().any(|(i, &p)| p as usize != i + 1) {
                return bad("d is not 1..=n".into());
            }
            if blocks.len() != n {
                return bad(format!("{} blocks for {n} statement trees", blocks.len()));
            }
        }
        (TupleKind::FlowGraph, Children::Edges(edges)) => {
            if n == 0 {
                return bad("empty tuple".into());
            }
            if edges.len() % 2 != 0 {
                return bad("edge list is not doubled".into());
            }
            let (fwd, rev) = edges.split_at(edges.len() / 2);
            if fwd
                .iter()
                .zip(rev)
                .any(|(&(s, t), &(rs, rt))| (s, t) != (rt, rs))
            {
                return bad("second half is not the reversed first half".into());
            }
            if let Some(&(s, e)) = fwd
                .iter()
                .find(|&&(s, e)| !valid_position(s) || !valid_position(e))
            {
                return bad(format!("edge ({s}, {e}) references an undeclared position"));
            }
        }
        (kind, _) => return bad(format!("children layout does not match kind {kind}")),
    }
    Ok(())
}

/// Rebuilds the tree a whole-tree tuple was extracted from. Nodes whose
/// index is OOV get [`OOV_LABEL`].
pub fn reconstruct_tree(t: &DcuTuple, vocab: &Vocabulary) -> Result<SyntaxTree, TupleError> {
    if t.kind != TupleKind::WholeTree {
        return Err(TupleError::NotReconstructible(t.kind));
    }
    validate(t)?;
    let Children::Groups(groups) = &t.c else {
        unreachable!("validated")
    };
    let mut children: BTreeMap<u32, &[u32]> = BTreeMap::new();
    for g in groups {
        children.insert(g.parent, &g.children);
    }
    let nodes =
        t.u.iter()
            .enumerate()
            .map(|(i, &index)| {
                let id = i + 1;
                SyntaxNode {
                    id,
                    label: vocab.token(index).unwrap_or(OOV_LABEL).to_string(),
                    token_text: None,
                    children: children
                        .get(&(id as u32))
                        .map(|c| c.iter().map(|&c| c as usize).collect())
                        .unwrap_or_default(),
                }
            })
            .collect();
    SyntaxTree::from_nodes(nodes).map_err(|e| TupleError::InconsistentTuple(e.to_string()))
}

/// Rebuilds a flow graph with node ids `1..=n` from a flow-graph tuple.
pub fn reconstruct_flowgraph(
    sample_id: &str,
    t: &DcuTuple,
    vocab: &Vocabulary,
) -> Result<FlowGraph, TupleError> {
    if t.kind != TupleKind::FlowGraph {
        return Err(TupleError::NotReconstructible(t.kind));
    }
    validate(t)?;
    let Children::Edges(edges) = &t.c else {
        unreachable!("validated")
    };
    let nodes =
        t.u.iter()
            .enumerate()
            .map(|(i, &index)| {
                (
                    i as u32 + 1,
                    vocab.token(index).unwrap_or(OOV_LABEL).to_string(),
                )
            })
            .collect();
    Ok(FlowGraph {
        sample_id: sample_id.to_string(),
        nodes,
        edges: edges[..edges.len() / 2].to_vec(),
    })
}

pub fn flatten(t: &DcuTuple, component: Component) -> TupleVector {
    let values = match component {
        Component::D => t.d.iter().map(|&v| f64::from(v)).collect(),
        Component::U => t.u.iter().map(|&v| f64::from(v)).collect(),
        Component::C => flatten_children(&t.c).into_iter().map(f64::from).collect(),
    };
    TupleVector { component, values }
}

/// Integer flattening of `c` (see module docs).
pub fn flatten_children(c: &Children) -> Vec<u32> {
    let mut out = Vec::new();
    match c {
        Children::Groups(groups) => {
            for g in groups {
                out.extend(&g.children);
                out.push(0);
            }
        }
        Children::Blocks(blocks) => {
            for b in blocks {
                out.extend(b.iter().map(|&i| i + 1));
                out.push(0);
            }
        }
        Children::Edges(edges) => {
            for &(s, t) in edges {
                out.push(s);
                out.push(t);
            }
        }
    }
    out
}

/// Flattened CU component; `u` labels are indexed through `labels`.
/// `D` has no CU counterpart and yields an empty vector.
pub fn flatten_cu(t: &CuTuple, component: Component, labels: &Vocabulary) -> TupleVector {
    let values = match component {
        Component::D => Vec::new(),
        Component::C => t.c.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        Component::U => t.u.iter().map(|l| f64::from(labels.lookup(l))).collect(),
    };
    TupleVector { component, values }
}

// ---- tuple files ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleRecord {
    pub sample_id: String,
    /// Run stamp of the producer; empty for hand-made files.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub stamp: String,
    #[serde(flatten)]
    pub tuple: DcuTuple,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuRecord {
    pub sample_id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub stamp: String,
    #[serde(flatten)]
    pub tuple: CuTuple,
}

#[derive(Debug, Error)]
pub enum TupleFileError {
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("duplicate sample id {0}")]
    DuplicateId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn read_lines<T: serde::de::DeserializeOwned>(
    reader: impl BufRead,
) -> Result<Vec<T>, TupleFileError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| TupleFileError::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

pub fn read_tuples(reader: impl BufRead) -> Result<Vec<TupleRecord>, TupleFileError> {
    let records: Vec<TupleRecord> = read_lines(reader)?;
    let mut seen = std::collections::HashSet::new();
    for (i, r) in records.iter().enumerate() {
        validate(&r.tuple).map_err(|e| TupleFileError::MalformedRecord {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(r.sample_id.as_str()) {
            return Err(TupleFileError::DuplicateId(r.sample_id.clone()));
        }
    }
    Ok(records)
}

pub fn write_tuples(
    writer: &mut impl Write,
    records: &[TupleRecord],
) -> Result<(), TupleFileError> {
    for r in records {
        records::write_record(writer, r)?;
    }
    Ok(())
}

pub fn save_tuples(path: impl AsRef<Path>, records: &[TupleRecord]) -> Result<(), TupleFileError> {
    let mut w = records::create(path.as_ref())?;
    write_tuples(&mut w, records)?;
    w.flush()?;
    Ok(())
}

pub fn load_tuples(path: impl AsRef<Path>) -> Result<Vec<TupleRecord>, TupleFileError> {
    read_tuples(records::open(path.as_ref())?)
}

pub fn read_cu_tuples(reader: impl BufRead) -> Result<Vec<CuRecord>, TupleFileError> {
    let records: Vec<CuRecord> = read_lines(reader)?;
    for (i, r) in records.iter().enumerate() {
        if r.tuple.c.len() != r.tuple.u.len() {
            return Err(TupleFileError::MalformedRecord {
                line: i + 1,
                message: "|c| != |u|".into(),
            });
        }
    }
    Ok(records)
}

pub fn write_cu_tuples(
    writer: &mut impl Write,
    records: &[CuRecord],
) -> Result<(), TupleFileError> {
    for r in records {
        records::write_record(writer, r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{RawNode, StatementLabels};
    use crate::vocab::build_vocabulary;

    fn graph(id: &str, nodes: Vec<(u32, String)>, edges: Vec<(u32, u32)>) -> FlowGraph {
        FlowGraph::new(id, nodes, edges).unwrap()
    }

    fn diamond() -> FlowGraph {
        graph(
            "g",
            vec![
                (1, "entry".into()),
                (2, "then".into()),
                (3, "else".into()),
                (4, "exit".into()),
            ],
            vec![(1, 2), (1, 3), (2, 4), (3, 4)],
        )
    }

    #[test]
    fn single_node_tree() {
        let tree = SyntaxTree::from_raw(RawNode::new("Module"));
        let vocab = build_vocabulary([&tree], 1).unwrap();
        let t = tree_to_dcu(&tree, &vocab);
        assert_eq!(t.d, [1]);
        assert_eq!(t.c, Children::Groups(vec![]));
        assert_eq!(t.u, [0]);
        let cu = tree_to_cu(&tree);
        assert_eq!(cu.c, [false]);
        assert_eq!(cu.u, ["Module"]);
        let back = reconstruct_tree(&t, &vocab).unwrap();
        assert_eq!(back.root().label, "Module");
    }

    #[test]
    fn flow_graph_tuples() {
        let g = diamond();
        let vocab = Vocabulary::from_counts(g.labels(), 1).unwrap();
        let t = flowgraph_to_dcu(&g, &vocab).unwrap();
        assert_eq!(t.d, [0, 1, 1, 2]);
        assert_eq!(t.c.len(), 8);
        assert_eq!(
            flatten(&t, Component::C).values,
            [1., 2., 1., 3., 2., 4., 3., 4., 2., 1., 3., 1., 4., 2., 4., 3.]
        );
        assert!(t.unreachable.is_empty());
        let back = reconstruct_flowgraph("g", &t, &vocab).unwrap();
        assert_eq!(back, g);

        let one = graph("s", vec![(9, "entry".into())], vec![]);
        let t = flowgraph_to_dcu(&one, &vocab).unwrap();
        assert_eq!(
            (t.d.as_slice(), t.c.len(), t.u.as_slice()),
            (&[0][..], 0, &[vocab.lookup("entry")][..])
        );

        let simple = graph(
            "p",
            vec![(1, "entry".into()), (2, "return".into())],
            vec![(1, 2)],
        );
        let t = flowgraph_to_dcu(&simple, &vocab).unwrap();
        assert_eq!(t.c, Children::Edges(vec![(1, 2), (2, 1)]));
    }

    #[test]
    fn unreachable_nodes_are_flagged() {
        let g = graph(
            "u",
            vec![(10, "a".into()), (20, "b".into()), (30, "dead".into())],
            vec![(10, 20), (30, 20)],
        );
        let vocab = Vocabulary::from_counts(g.labels(), 1).unwrap();
        let t = flowgraph_to_dcu(&g, &vocab).unwrap();
        assert_eq!(t.d, [0, 1, 2]);
        assert_eq!(t.unreachable, [3]);
        assert_eq!(t.c, Children::Edges(vec![(1, 2), (3, 2), (2, 1), (2, 3)]));
    }

    #[test]
    fn empty_graph_is_rejected() {
        let g = FlowGraph {
            sample_id: "e".into(),
            nodes: vec![],
            edges: vec![],
        };
        let vocab = Vocabulary::from_ordered(vec![]);
        assert_eq!(flowgraph_to_dcu(&g, &vocab), Err(TupleError::EmptyGraph));
    }

    #[test]
    fn flatten_tree_children_with_sentinels() {
        let c = Children::Groups(vec![
            ChildGroup {
                parent: 1,
                children: vec![2, 3],
            },
            ChildGroup {
                parent: 2,
                children: vec![4, 5, 6],
            },
        ]);
        assert_eq!(flatten_children(&c), [2, 3, 0, 4, 5, 6, 0]);
    }

    #[test]
    fn statement_tree_tuples() {
        // if (x) { y = 1; } as split statement trees
        let raw = RawNode::new("MethodDeclaration")
            .with_token("f")
            .with_child(
                RawNode::new("Block").with_child(
                    RawNode::new("IfStatement")
                        .with_child(RawNode::leaf("MemberReference", "x"))
                        .with_child(
                            RawNode::new("BlockStatement").with_child(
                                RawNode::new("StatementExpression").with_child(
                                    RawNode::new("Assignment")
                                        .with_token("=")
                                        .with_child(RawNode::leaf("MemberReference", "y"))
                                        .with_child(RawNode::leaf("Literal", "1")),
                                ),
                            ),
                        ),
                ),
            );
        let tree = SyntaxTree::from_raw(raw);
        let sts = crate::syntax::split_statements(
            &tree,
            &StatementLabels::for_language(crate::corpus::Language::Java),
        );
        let roots: Vec<&str> = sts.iter().map(|s| s.root().label.as_str()).collect();
        assert_eq!(
            roots,
            [
                "MethodDeclaration",
                "IfStatement",
                "BlockStatement",
                "StatementExpression"
            ]
        );
        let vocab = build_vocabulary([&tree], 1).unwrap();
        let t = statement_trees_to_dcu(&sts, &vocab).unwrap();
        assert_eq!(t.d, [1, 2, 3, 4]);
        let Children::Blocks(blocks) = &t.c else {
            panic!()
        };
        let ix = |s: &str| vocab.lookup(s);
        assert_eq!(blocks[0], [ix("Block")]);
        assert_eq!(blocks[1], [ix("x")]);
        assert!(blocks[2].is_empty());
        assert_eq!(blocks[3], [ix("Assignment"), ix("y"), ix("1")]);
        assert_eq!(
            t.u,
            [
                ix("MethodDeclaration"),
                ix("IfStatement"),
                ix("BlockStatement"),
                ix("StatementExpression")
            ]
        );
        assert_eq!(
            reconstruct_tree(&t, &vocab),
            Err(TupleError::NotReconstructible(TupleKind::StatementTrees))
        );
        assert_eq!(t.child_counts(), [1, 1, 0, 3]);
        assert_eq!(
            statement_trees_to_dcu(&[], &vocab),
            Err(TupleError::EmptyStatementTrees)
        );
    }

    #[test]
    fn oov_reconstruction() {
        let tree = SyntaxTree::from_raw(RawNode::new("A").with_child(RawNode::new("B")));
        let vocab = Vocabulary::from_ordered(vec!["A".into()]);
        let t = tree_to_dcu(&tree, &vocab);
        assert_eq!(t.u, [0, 1]);
        let back = reconstruct_tree(&t, &vocab).unwrap();
        assert_eq!(back.node(2).label, OOV_LABEL);
        assert_eq!(back.node(1).children, [2]);
    }

    #[test]
    fn inconsistent_tuples_are_rejected() {
        let vocab = Vocabulary::from_ordered(vec!["A".into()]);
        let base = DcuTuple {
            kind: TupleKind::WholeTree,
            d: vec![1, 2, 3],
            c: Children::Groups(vec![ChildGroup {
                parent: 1,
                children: vec![2, 3],
            }]),
            u: vec![0, 0, 0],
            unreachable: vec![],
        };
        assert!(reconstruct_tree(&base, &vocab).is_ok());
        let mut t = base.clone();
        t.c = Children::Groups(vec![ChildGroup {
            parent: 2,
            children: vec![1],
        }]);
        assert!(matches!(
            reconstruct_tree(&t, &vocab),
            Err(TupleError::InconsistentTuple(_))
        ));
        let mut t = base.clone();
        t.c = Children::Groups(vec![ChildGroup {
            parent: 1,
            children: vec![2],
        }]);
        assert!(matches!(
            reconstruct_tree(&t, &vocab),
            Err(TupleError::InconsistentTuple(_))
        ));
        let mut t = base.clone();
        t.d = vec![1, 2];
        assert!(matches!(
            reconstruct_tree(&t, &vocab),
            Err(TupleError::InconsistentTuple(_))
        ));
        let mut t = base.clone();
        // 1 -> [3], 3 -> [2] breaks breadth-first numbering
        t.c = Children::Groups(vec![
            ChildGroup {
                parent: 1,
                children: vec![3],
            },
            ChildGroup {
                parent: 3,
                children: vec![2],
            },
        ]);
        assert!(matches!(
            reconstruct_tree(&t, &vocab),
            Err(TupleError::InconsistentTuple(_))
        ));
    }

    #[test]
    fn tuple_file_round_trip() {
        let g = diamond();
        let vocab = Vocabulary::from_counts(g.labels(), 1).unwrap();
        let tree = SyntaxTree::from_raw(RawNode::new("A").with_child(RawNode::leaf("B", "x")));
        let records = vec![
            TupleRecord {
                sample_id: "g".into(),
                stamp: "cfg-1/seed-0".into(),
                tuple: flowgraph_to_dcu(&g, &vocab).unwrap(),
            },
            TupleRecord {
                sample_id: "t".into(),
                stamp: String::new(),
                tuple: tree_to_dcu(&tree, &vocab),
            },
        ];
        let mut buf = Vec::new();
        write_tuples(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with(r#"{"sample_id":"t","kind":"WholeTree","d":[1,2],"c":{"groups":[{"parent":1,"children":[2]}]}"#));
        assert_eq!(read_tuples(&buf[..]).unwrap(), records);

        let cu = vec![CuRecord {
            sample_id: "t".into(),
            stamp: String::new(),
            tuple: tree_to_cu(&tree),
        }];
        let mut buf = Vec::new();
        write_cu_tuples(&mut buf, &cu).unwrap();
        assert_eq!(read_cu_tuples(&buf[..]).unwrap(), cu);
    }
}
