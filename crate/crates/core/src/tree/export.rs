//! DOT and JSON renderings of a framework tree.
//!
//! JSON layout (`schema: 1`):
//!
//! ```text
//! { "schema": 1, "final_time": 4, "pruned_count": 3,
//!   "root": { "label": "root", "time": 0, "kind": "root", "probability": 1.0,
//!             "pruned": false, "children": [ ... ] } }
//! ```
//!
//! `kind` is `root`, `projector` or `choice`; choice nodes also carry
//! `choice_weight`. Children appear in schedule order.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{BranchNode, FrameworkTree, NodeKind, TreeError, TreeResult};
use crate::scalar::Real;

pub const TREE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub schema: u32,
    pub final_time: usize,
    pub pruned_count: usize,
    pub root: NodeDocument,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDocument {
    pub label: String,
    pub time: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice_weight: Option<f64>,
    pub probability: f64,
    pub pruned: bool,
    pub children: Vec<NodeDocument>,
}

impl NodeDocument {
    fn from_node<T: Real>(node: &BranchNode<T>) -> Self {
        let (kind, choice_weight) = match &node.kind {
            NodeKind::Root => ("root", None),
            NodeKind::Projective(_) => ("projector", None),
            NodeKind::Choice(w) => ("choice", Some(w.as_f64())),
        };
        Self {
            label: node.label.clone(),
            time: node.time,
            kind: kind.into(),
            choice_weight,
            probability: node.probability.as_f64(),
            pruned: node.pruned,
            children: node.children.iter().map(Self::from_node).collect(),
        }
    }

    pub fn leaf_count(&self, include_pruned: bool) -> usize {
        if self.pruned && !include_pruned {
            0
        } else if self.children.is_empty() {
            1
        } else {
            self.children.iter().map(|c| c.leaf_count(include_pruned)).sum()
        }
    }
}

impl TreeDocument {
    pub fn from_json(text: &str) -> TreeResult<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| TreeError::Document(e.to_string()))?;
        if doc.schema != TREE_SCHEMA_VERSION {
            return Err(TreeError::Document(format!("unsupported schema {}", doc.schema)));
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree document serializes")
    }
}

impl<T: Real> FrameworkTree<T> {
    pub fn to_document(&self) -> TreeDocument {
        TreeDocument {
            schema: TREE_SCHEMA_VERSION,
            final_time: self.grid.final_time(),
            pruned_count: self.pruned.len(),
            root: NodeDocument::from_node(&self.root),
        }
    }

    pub fn to_json(&self) -> String {
        self.to_document().to_json()
    }

    /// Graphviz digraph, left to right, pruned branches dashed.
    pub fn to_dot(&self) -> String {
        fn walk<T: Real>(node: &BranchNode<T>, id: &mut usize, out: &mut String) -> usize {
            let me = *id;
            *id += 1;
            let style = if node.pruned { ", style=dashed" } else { "" };
            let _ = writeln!(
                out,
                "  n{me} [label=\"{}\\nt={} p={:.6}\"{style}];",
                node.label.replace('"', "\\\""),
                node.time,
                node.probability.as_f64()
            );
            for child in &node.children {
                let cid = walk(child, id, out);
                let edge_style = if child.pruned { " [style=dashed]" } else { "" };
                let _ = writeln!(out, "  n{me} -> n{cid}{edge_style};");
            }
            me
        }
        let mut out = String::from("digraph framework {\n  rankdir=LR;\n  node [shape=box];\n");
        let mut id = 0;
        walk(&self.root, &mut id, &mut out);
        out.push_str("}\n");
        out
    }
}
