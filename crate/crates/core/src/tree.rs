//! Chart trees: blow-up histories with per-edge substitutions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::blowup::Chart;
use crate::error::{Error, Result};
use crate::lattice::SubMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Interior,
    Resolved,
    Exited,
    Dropped,
}

impl NodeStatus {
    pub fn is_leaf_status(self) -> bool {
        self != NodeStatus::Interior
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeStatus::Interior => "interior",
            NodeStatus::Resolved => "resolved",
            NodeStatus::Exited => "exited",
            NodeStatus::Dropped => "dropped",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartNode<T> {
    pub id: usize,
    pub parent: Option<usize>,
    /// Chart leading from the parent to this node; `None` at the root.
    pub chart: Option<Chart>,
    pub data: T,
    pub status: NodeStatus,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartTree<T> {
    pub nodes: Vec<ChartNode<T>>,
}

impl<T> ChartTree<T> {
    pub fn new(root: T) -> Self {
        ChartTree {
            nodes: vec![ChartNode { id: 0, parent: None, chart: None, data: root, status: NodeStatus::Interior, children: vec![] }],
        }
    }

    pub fn root(&self) -> &ChartNode<T> {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &ChartNode<T> {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn push(&mut self, parent: usize, chart: Chart, data: T, status: NodeStatus) -> usize {
        let id = self.nodes.len();
        self.nodes.push(ChartNode { id, parent: Some(parent), chart: Some(chart), data, status, children: vec![] });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn set_status(&mut self, id: usize, status: NodeStatus) {
        self.nodes[id].status = status;
    }

    pub fn leaves(&self) -> impl Iterator<Item = &ChartNode<T>> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    /// Node ids from the root down to `id`.
    pub fn path(&self, id: usize) -> Vec<usize> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| self.path(n.id).len() - 1).max().unwrap_or(0)
    }

    /// Product of the monomial charts along the path to `id`.
    pub fn composed_sub(&self, id: usize) -> Option<SubMatrix> {
        let mut m = SubMatrix::IDENTITY;
        for &n in &self.path(id)[1..] {
            m = m.mul(&self.nodes[n].chart.as_ref()?.monomial()?);
        }
        Some(m)
    }

    /// Re-applies the recorded charts from the root data down to `id`.
    pub fn replay<F>(&self, id: usize, mut apply: F) -> Result<T>
    where
        T: Clone,
        F: FnMut(&T, &Chart) -> Result<T>,
    {
        let mut cur = self.nodes[0].data.clone();
        for &n in &self.path(id)[1..] {
            let chart = self.nodes[n]
                .chart
                .as_ref()
                .ok_or_else(|| Error::InvalidState(format!("node {n} has no chart")))?;
            cur = apply(&cur, chart)?;
        }
        Ok(cur)
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> ChartTree<U> {
        ChartTree {
            nodes: self
                .nodes
                .iter()
                .map(|n| ChartNode {
                    id: n.id,
                    parent: n.parent,
                    chart: n.chart.clone(),
                    data: f(&n.data),
                    status: n.status,
                    children: n.children.clone(),
                })
                .collect(),
        }
    }

    /// Graphviz rendering: nodes labelled `chart:<label>`, edges labelled by substitution.
    /// The node data is kept in the `comment` attribute.
    pub fn to_dot(&self, name: &str, describe: impl Fn(&T) -> String) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph {} {{", dot_id(name));
        for n in &self.nodes {
            let label = match &n.chart {
                Some(c) => c.label.clone(),
                None => "root".to_string(),
            };
            let _ = writeln!(
                out,
                "  n{} [label=\"chart:{}\", comment=\"status={}; data={}\"];",
                n.id,
                escape(&label),
                n.status.name(),
                escape(&describe(&n.data))
            );
        }
        for n in &self.nodes {
            if let (Some(p), Some(c)) = (n.parent, &n.chart) {
                let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", p, n.id, escape(&c.substitution_text()));
            }
        }
        out.push_str("}\n");
        out
    }
}

fn dot_id(name: &str) -> String {
    let cleaned: String = name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    if cleaned.is_empty() {
        "tree".into()
    } else {
        cleaned
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// One edge or node line of a DOT file produced by [`ChartTree::to_dot`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DotItem {
    Node { id: usize, label: String, comment: String },
    Edge { from: usize, to: usize, label: String },
}

/// Reads back the nodes and edges of a chart-tree DOT file.
pub fn parse_dot(text: &str) -> Result<Vec<DotItem>> {
    let mut out = vec![];
    for line in text.lines().map(str::trim) {
        if !line.starts_with('n') {
            continue;
        }
        let (head, attrs) = line
            .split_once(" [")
            .ok_or_else(|| Error::Parse(format!("bad DOT line {line:?}")))?;
        let id = |s: &str| -> Result<usize> {
            s.trim()
                .strip_prefix('n')
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad DOT node id {s:?}")))
        };
        let label = attr(attrs, "label").ok_or_else(|| Error::Parse(format!("missing label in {line:?}")))?;
        match head.split_once("->") {
            Some((a, b)) => out.push(DotItem::Edge { from: id(a)?, to: id(b)?, label }),
            None => out.push(DotItem::Node { id: id(head)?, label, comment: attr(attrs, "comment").unwrap_or_default() }),
        }
    }
    Ok(out)
}

fn attr(attrs: &str, key: &str) -> Option<String> {
    let start = attrs.find(&format!("{key}=\""))? + key.len() + 2;
    let mut out = String::new();
    let mut chars = attrs[start..].chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => out.push(chars.next()?),
            '"' => return Some(out),
            _ => out.push(c),
        }
    }
    None
}
