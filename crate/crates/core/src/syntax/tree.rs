use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A node as produced by a parser, before breadth-first numbering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawNode {
    pub label: String,
    pub token_text: Option<String>,
    pub children: Vec<RawNode>,
}

impl RawNode {
    pub fn new(label: impl Into<String>) -> Self {
        RawNode {
            label: label.into(),
            token_text: None,
            children: Vec::new(),
        }
    }

    pub fn leaf(label: impl Into<String>, token: impl Into<String>) -> Self {
        RawNode {
            label: label.into(),
            token_text: Some(token.into()),
            children: Vec::new(),
        }
    }

    pub fn with_token(mut self, token: impl Into<String>) -> Self {
        self.token_text = Some(token.into());
        self
    }

    pub fn with_children(mut self, children: Vec<RawNode>) -> Self {
        self.children = children;
        self
    }

    pub fn with_child(mut self, child: RawNode) -> Self {
        self.children.push(child);
        self
    }

    pub fn with_extended(mut self, more: impl IntoIterator<Item = RawNode>) -> Self {
        self.children.extend(more);
        self
    }

    pub fn push(&mut self, child: RawNode) {
        self.children.push(child);
    }

    pub fn extend(&mut self, children: impl IntoIterator<Item = RawNode>) {
        self.children.extend(children);
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(RawNode::size).sum::<usize>()
    }
}

/// One node of a [`SyntaxTree`]. Ids are breadth-first positions starting at 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxNode {
    pub id: usize,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_text: Option<String>,
    #[serde(default)]
    pub children: Vec<usize>,
}

impl SyntaxNode {
    /// The vocabulary key of this node: lexical text for leaves that carry
    /// one (identifiers, literals), otherwise the grammar label.
    pub fn token(&self) -> &str {
        match (&self.token_text, self.children.is_empty()) {
            (Some(text), true) => text,
            _ => &self.label,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("tree has no nodes")]
    Empty,
    #[error("node at index {index} carries id {id}; ids must be 1..=node_count in order")]
    IdOutOfOrder { index: usize, id: usize },
    #[error("node {parent} references missing child {child}")]
    MissingChild { parent: usize, child: usize },
    #[error("node {child} has more than one parent")]
    MultipleParents { child: usize },
    #[error("root node cannot be a child (referenced by {parent})")]
    RootHasParent { parent: usize },
    #[error("node {node} is unreachable from the root")]
    Unreachable { node: usize },
    #[error(
        "ids are not in breadth-first order: node {node} sits at breadth-first position {position}"
    )]
    NotBreadthFirst { node: usize, position: usize },
}

/// Ordered labeled tree with nodes numbered `1..=node_count` in breadth-first,
/// left-to-right order. The root is always node 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxTree {
    nodes: Vec<SyntaxNode>,
}

impl SyntaxTree {
    /// Numbers a parser tree breadth-first.
    pub fn from_raw(root: RawNode) -> Self {
        let mut nodes: Vec<SyntaxNode> = Vec::with_capacity(root.size());
        let mut queue: VecDeque<RawNode> = VecDeque::new();
        queue.push_back(root);
        // Children of the node at position k receive consecutive ids assigned
        // when k is dequeued, which is exactly breadth-first order.
        let mut next_id = 2;
        while let Some(raw) = queue.pop_front() {
            let id = nodes.len() + 1;
            let children: Vec<usize> = (next_id..next_id + raw.children.len()).collect();
            next_id += raw.children.len();
            nodes.push(SyntaxNode {
                id,
                label: raw.label,
                token_text: raw.token_text,
                children,
            });
            queue.extend(raw.children);
        }
        SyntaxTree { nodes }
    }

    /// Validates an explicit node list against every tree invariant.
    pub fn from_nodes(nodes: Vec<SyntaxNode>) -> Result<Self, TreeError> {
        if nodes.is_empty() {
            return Err(TreeError::Empty);
        }
        let n = nodes.len();
        for (index, node) in nodes.iter().enumerate() {
            if node.id != index + 1 {
                return Err(TreeError::IdOutOfOrder { index, id: node.id });
            }
        }
        let mut parent = vec![0usize; n + 1];
        for node in &nodes {
            for &child in &node.children {
                if child == 0 || child > n {
                    return Err(TreeError::MissingChild {
                        parent: node.id,
                        child,
                    });
                }
                if child == 1 {
                    return Err(TreeError::RootHasParent { parent: node.id });
                }
                if parent[child] != 0 {
                    return Err(TreeError::MultipleParents { child });
                }
                parent[child] = node.id;
            }
        }
        // Breadth-first walk must visit every node, in id order.
        let mut queue = VecDeque::from([1usize]);
        let mut position = 0;
        while let Some(id) = queue.pop_front() {
            position += 1;
            if id != position {
                return Err(TreeError::NotBreadthFirst { node: id, position });
            }
            queue.extend(nodes[id - 1].children.iter().copied());
        }
        if position != n {
            let node = (2..=n).find(|&id| parent[id] == 0).unwrap_or(n);
            return Err(TreeError::Unreachable { node });
        }
        Ok(SyntaxTree { nodes })
    }

    pub fn root(&self) -> &SyntaxNode {
        &self.nodes[0]
    }

    pub fn root_id(&self) -> usize {
        1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Node by breadth-first id. Panics on an id outside `1..=node_count`.
    pub fn node(&self, id: usize) -> &SyntaxNode {
        &self.nodes[id - 1]
    }

    pub fn get(&self, id: usize) -> Option<&SyntaxNode> {
        id.checked_sub(1).and_then(|i| self.nodes.get(i))
    }

    /// Nodes in breadth-first order.
    pub fn nodes(&self) -> &[SyntaxNode] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(tree: &SyntaxTree, id: usize) -> usize {
            1 + tree
                .node(id)
                .children
                .iter()
                .map(|&c| walk(tree, c))
                .max()
                .unwrap_or(0)
        }
        walk(self, 1)
    }

    /// Node ids in preorder (parent before children, children left to right).
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![1usize];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.node(id).children.iter().rev().copied());
        }
        out
    }

    pub fn to_raw(&self) -> RawNode {
        self.raw_at(1)
    }

    fn raw_at(&self, id: usize) -> RawNode {
        let node = self.node(id);
        RawNode {
            label: node.label.clone(),
            token_text: node.token_text.clone(),
            children: node.children.iter().map(|&c| self.raw_at(c)).collect(),
        }
    }

    /// The subtree rooted at `id`, renumbered breadth-first.
    pub fn subtree(&self, id: usize) -> SyntaxTree {
        SyntaxTree::from_raw(self.raw_at(id))
    }

    /// Same shape and the same per-node vocabulary token.
    pub fn same_structure(&self, other: &SyntaxTree) -> bool {
        self.nodes.len() == other.nodes.len()
            && self
                .nodes
                .iter()
                .zip(&other.nodes)
                .all(|(a, b)| a.children == b.children && a.token() == b.token())
    }

    /// Same shape and labels; token text may differ.
    pub fn same_shape_and_labels(&self, other: &SyntaxTree) -> bool {
        self.nodes.len() == other.nodes.len()
            && self
                .nodes
                .iter()
                .zip(&other.nodes)
                .all(|(a, b)| a.children == b.children && a.label == b.label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.label.as_str())
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(SyntaxNode::token)
    }

    /// Distinct labels present in the tree.
    pub fn label_set(&self) -> BTreeSet<&str> {
        self.labels().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RawNode {
        RawNode::new("A")
            .with_child(RawNode::new("B").with_child(RawNode::leaf("D", "x")))
            .with_child(
                RawNode::new("C")
                    .with_child(RawNode::new("E"))
                    .with_child(RawNode::new("F")),
            )
    }

    #[test]
    fn breadth_first_numbering() {
        let tree = SyntaxTree::from_raw(sample());
        let labels: Vec<_> = tree.labels().collect();
        assert_eq!(labels, ["A", "B", "C", "D", "E", "F"]);
        assert_eq!(tree.node(1).children, [2, 3]);
        assert_eq!(tree.node(2).children, [4]);
        assert_eq!(tree.node(3).children, [5, 6]);
        assert_eq!(tree.preorder(), [1, 2, 4, 3, 5, 6]);
        assert_eq!(tree.depth(), 3);
        assert_eq!(tree.leaf_count(), 3);
    }

    #[test]
    fn raw_round_trip() {
        let tree = SyntaxTree::from_raw(sample());
        assert_eq!(tree.to_raw(), sample());
        assert_eq!(SyntaxTree::from_nodes(tree.nodes().to_vec()).unwrap(), tree);
    }

    #[test]
    fn token_prefers_leaf_text() {
        let tree = SyntaxTree::from_raw(sample());
        assert_eq!(tree.node(4).token(), "x");
        let internal = SyntaxTree::from_raw(
            RawNode::new("Call")
                .with_token("f")
                .with_child(RawNode::new("X")),
        );
        assert_eq!(internal.node(1).token(), "Call");
    }

    #[test]
    fn rejects_invalid_node_lists() {
        let node = |id, children: Vec<usize>| SyntaxNode {
            id,
            label: "n".into(),
            token_text: None,
            children,
        };
        assert_eq!(SyntaxTree::from_nodes(vec![]), Err(TreeError::Empty));
        assert_eq!(
            SyntaxTree::from_nodes(vec![node(1, vec![2]), node(2, vec![1])]),
            Err(TreeError::RootHasParent { parent: 2 })
        );
        assert_eq!(
            SyntaxTree::from_nodes(vec![node(1, vec![2, 3]), node(2, vec![3]), node(3, vec![])]),
            Err(TreeError::MultipleParents { child: 3 })
        );
        assert_eq!(
            SyntaxTree::from_nodes(vec![node(1, vec![3]), node(2, vec![]), node(3, vec![])]),
            Err(TreeError::NotBreadthFirst {
                node: 3,
                position: 2
            })
        );
        assert_eq!(
            SyntaxTree::from_nodes(vec![node(1, vec![5])]),
            Err(TreeError::MissingChild {
                parent: 1,
                child: 5
            })
        );
        // 1 -> 3, 2 -> 4: not a tree rooted at 1 in breadth-first order
        assert!(
            SyntaxTree::from_nodes(vec![node(1, vec![2]), node(2, vec![]), node(3, vec![])])
                .is_err()
        );
    }

    #[test]
    fn subtree_is_renumbered() {
        let tree = SyntaxTree::from_raw(sample());
        let sub = tree.subtree(3);
        assert_eq!(sub.node_count(), 3);
        assert_eq!(sub.root().label, "C");
        assert_eq!(sub.node(1).children, [2, 3]);
    }
}
