use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DecisionTree, TreeNode};
use crate::error::{Error, Result};

pub const TREE_FORMAT: &str = "l1o-tree";
pub const TREE_VERSION: u32 = 1;

/// Compact human-readable threshold: up to six decimals, trailing zeros trimmed.
pub fn format_threshold(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e9) {
        return format!("{v:e}");
    }
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn check_names(tree: &DecisionTree, feature_names: &[String]) -> Result<()> {
    if feature_names.len() != tree.n_features() {
        return Err(Error::Input(format!(
            "{} feature names for a tree over {} features",
            feature_names.len(),
            tree.n_features()
        )));
    }
    Ok(())
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl DecisionTree {
    /// Graphviz rendering: split nodes read `name ≤ threshold`, leaves show
    /// the class and the training class counts. The left edge is the `≤` branch.
    pub fn export_dot(&self, feature_names: &[String]) -> Result<String> {
        check_names(self, feature_names)?;
        let mut out = String::from("digraph tree {\n    node [shape=box, fontname=\"helvetica\"];\n");
        for (i, node) in self.nodes().iter().enumerate() {
            let label = match node {
                TreeNode::Split { feature, threshold, .. } => {
                    format!("{} ≤ {}", feature_names[*feature], format_threshold(*threshold))
                }
                TreeNode::Leaf {
                    class_label,
                    class_counts,
                } => format!("{}\\n{:?}", self.class_names()[*class_label], class_counts),
            };
            let style = if node.is_leaf() { ", style=rounded" } else { "" };
            writeln!(
                out,
                "    n{i} [label=\"{}\"{style}];",
                dot_escape(&label).replace("\\\\n", "\\n")
            )
            .unwrap();
        }
        for (i, node) in self.nodes().iter().enumerate() {
            if let TreeNode::Split { left, right, .. } = node {
                writeln!(out, "    n{i} -> n{left} [label=\"yes\"];").unwrap();
                writeln!(out, "    n{i} -> n{right} [label=\"no\"];").unwrap();
            }
        }
        out.push_str("}\n");
        Ok(out)
    }

    /// One `if … then class` line per leaf, in left-to-right leaf order.
    pub fn export_rules(&self, feature_names: &[String]) -> Result<String> {
        check_names(self, feature_names)?;
        let mut lines = Vec::with_capacity(self.n_leaves());
        let mut path: Vec<String> = Vec::new();
        self.collect_rules(0, feature_names, &mut path, &mut lines);
        let mut out = lines.join("\n");
        out.push('\n');
        Ok(out)
    }

    fn collect_rules(&self, idx: usize, names: &[String], path: &mut Vec<String>, lines: &mut Vec<String>) {
        match &self.nodes()[idx] {
            TreeNode::Leaf { class_label, .. } => {
                let antecedent = if path.is_empty() {
                    "true".to_string()
                } else {
                    path.join(" and ")
                };
                lines.push(format!("if {antecedent} then {}", self.class_names()[*class_label]));
            }
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let t = format_threshold(*threshold);
                path.push(format!("{} ≤ {t}", names[*feature]));
                self.collect_rules(*left, names, path, lines);
                path.pop();
                path.push(format!("{} > {t}", names[*feature]));
                self.collect_rules(*right, names, path, lines);
                path.pop();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PreorderNode {
    Split {
        feature: usize,
        threshold: f64,
        class_counts: Vec<usize>,
    },
    Leaf {
        class_label: usize,
        class_counts: Vec<usize>,
    },
}

/// Versioned JSON form of a tree: metadata plus the preorder node list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub format: String,
    pub version: u32,
    pub n_features: usize,
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    nodes: Vec<PreorderNode>,
}

impl TreeDocument {
    pub fn new(tree: &DecisionTree) -> Self {
        let nodes = tree
            .nodes()
            .iter()
            .map(|n| match n {
                TreeNode::Split {
                    feature,
                    threshold,
                    class_counts,
                    ..
                } => PreorderNode::Split {
                    feature: *feature,
                    threshold: *threshold,
                    class_counts: class_counts.clone(),
                },
                TreeNode::Leaf {
                    class_label,
                    class_counts,
                } => PreorderNode::Leaf {
                    class_label: *class_label,
                    class_counts: class_counts.clone(),
                },
            })
            .collect();
        Self {
            format: TREE_FORMAT.to_string(),
            version: TREE_VERSION,
            n_features: tree.n_features(),
            n_classes: tree.n_classes(),
            feature_names: tree.feature_names().to_vec(),
            class_names: tree.class_names().to_vec(),
            nodes,
        }
    }

    pub fn to_tree(&self) -> Result<DecisionTree> {
        if self.format != TREE_FORMAT {
            return Err(Error::Schema(format!(
                "expected format `{TREE_FORMAT}`, found `{}`",
                self.format
            )));
        }
        if self.version != TREE_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: TREE_VERSION,
            });
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let mut cursor = 0;
        rebuild_preorder(&self.nodes, &mut cursor, &mut nodes)?;
        if cursor != self.nodes.len() {
            return Err(Error::Schema(format!(
                "preorder list has {} trailing nodes",
                self.nodes.len() - cursor
            )));
        }
        DecisionTree::from_nodes(nodes, self.n_features, self.n_classes)?
            .with_names(self.feature_names.clone(), self.class_names.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn rebuild_preorder(src: &[PreorderNode], cursor: &mut usize, out: &mut Vec<TreeNode>) -> Result<usize> {
    let Some(node) = src.get(*cursor) else {
        return Err(Error::Schema("preorder list ends inside a subtree".into()));
    };
    *cursor += 1;
    let slot = out.len();
    match node {
        PreorderNode::Leaf {
            class_label,
            class_counts,
        } => out.push(TreeNode::Leaf {
            class_label: *class_label,
            class_counts: class_counts.clone(),
        }),
        PreorderNode::Split {
            feature,
            threshold,
            class_counts,
        } => {
            out.push(TreeNode::Split {
                feature: *feature,
                threshold: *threshold,
                left: 0,
                right: 0,
                class_counts: class_counts.clone(),
            });
            let l = rebuild_preorder(src, cursor, out)?;
            let r = rebuild_preorder(src, cursor, out)?;
            if let TreeNode::Split { left, right, .. } = &mut out[slot] {
                *left = l;
                *right = r;
            }
        }
    }
    Ok(slot)
}
