use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::frontend::{Connections, DesignAst, Direction, Expr, Item, ModuleAst, Stmt};
use crate::partition::{extract_features, CostPredictor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    /// Ports wired straight through.
    Direct,
    /// A port driven through combinational logic.
    Combinational,
    /// A port driven from a register.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeWeights {
    pub direct: f64,
    pub combinational: f64,
    pub sequential: f64,
}

impl Default for EdgeWeights {
    fn default() -> Self {
        EdgeWeights {
            direct: 0.1,
            combinational: 1.0,
            sequential: 0.3,
        }
    }
}

impl EdgeWeights {
    pub fn get(&self, kind: EdgeKind) -> f64 {
        match kind {
            EdgeKind::Direct => self.direct,
            EdgeKind::Combinational => self.combinational,
            EdgeKind::Sequential => self.sequential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub module: String,
    /// Hierarchical instance path, `top.u0.u1`.
    pub path: String,
    /// Predicted synthesis seconds.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub parent: usize,
    pub child: usize,
    pub kind: EdgeKind,
    pub weight: f64,
}

/// One node per instance, rooted at the top module (node 0). Node ids
/// follow a pre-order walk.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceTree {
    pub nodes: Vec<TreeNode>,
    pub edges: Vec<TreeEdge>,
}

impl InstanceTree {
    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// Tree built from explicit parts; node ids must be `0..n`.
    pub fn from_parts(weights: &[f64], edges: &[(usize, usize, EdgeKind, f64)]) -> Self {
        InstanceTree {
            nodes: weights
                .iter()
                .enumerate()
                .map(|(id, w)| TreeNode {
                    id,
                    module: format!("n{id}"),
                    path: format!("n{id}"),
                    weight: *w,
                })
                .collect(),
            edges: edges
                .iter()
                .map(|&(parent, child, kind, weight)| TreeEdge {
                    parent,
                    child,
                    kind,
                    weight,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("unknown top module `{0}`")]
    UnknownModule(String),
    #[error("recursive instantiation: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
}

pub fn build_instance_tree(
    ast: &DesignAst,
    top: &str,
    predictor: &CostPredictor,
) -> Result<InstanceTree, TreeError> {
    build_instance_tree_with(ast, top, predictor, &EdgeWeights::default())
}

pub fn build_instance_tree_with(
    ast: &DesignAst,
    top: &str,
    predictor: &CostPredictor,
    weights: &EdgeWeights,
) -> Result<InstanceTree, TreeError> {
    let root = ast
        .module(top)
        .ok_or_else(|| TreeError::UnknownModule(top.to_string()))?;
    let mut tree = InstanceTree::default();
    let mut stack = vec![top.to_string()];
    visit(ast, root, top.to_string(), None, predictor, weights, &mut tree, &mut stack)?;
    Ok(tree)
}

#[allow(clippy::too_many_arguments)]
fn visit(
    ast: &DesignAst,
    m: &ModuleAst,
    path: String,
    parent: Option<(usize, EdgeKind)>,
    predictor: &CostPredictor,
    weights: &EdgeWeights,
    tree: &mut InstanceTree,
    stack: &mut Vec<String>,
) -> Result<(), TreeError> {
    let id = tree.nodes.len();
    tree.nodes.push(TreeNode {
        id,
        module: m.name.clone(),
        path: path.clone(),
        weight: predictor.predict(&extract_features(m)),
    });
    if let Some((p, kind)) = parent {
        tree.edges.push(TreeEdge {
            parent: p,
            child: id,
            kind,
            weight: weights.get(kind),
        });
    }
    let drivers = Drivers::new(m);
    for inst in m.instances() {
        let child_path = format!("{path}.{}", inst.name);
        let Some(child) = ast.module(&inst.module) else {
            // External module: a leaf with nothing to synthesize.
            let cid = tree.nodes.len();
            tree.nodes.push(TreeNode {
                id: cid,
                module: inst.module.clone(),
                path: child_path,
                weight: 0.0,
            });
            tree.edges.push(TreeEdge {
                parent: id,
                child: cid,
                kind: EdgeKind::Direct,
                weight: weights.direct,
            });
            continue;
        };
        if stack.contains(&inst.module) {
            let mut cycle = stack.clone();
            cycle.push(inst.module.clone());
            return Err(TreeError::Cycle(cycle));
        }
        let kind = classify(inst, child, &drivers);
        stack.push(inst.module.clone());
        visit(ast, child, child_path, Some((id, kind)), predictor, weights, tree, stack)?;
        stack.pop();
    }
    Ok(())
}

/// How signals of a module are driven.
struct Drivers<'a> {
    registers: HashSet<&'a str>,
    /// Driven by an operator or a combinational always block.
    logic: HashSet<&'a str>,
}

impl<'a> Drivers<'a> {
    fn new(m: &'a ModuleAst) -> Self {
        let mut registers = HashSet::new();
        let mut logic = HashSet::new();
        for item in &m.items {
            match item {
                Item::Assign(a) => {
                    if has_logic(&a.rhs) {
                        logic.extend(a.lhs.targets());
                    }
                }
                Item::Always(a) => {
                    let set = if a.is_edge_triggered() {
                        &mut registers
                    } else {
                        &mut logic
                    };
                    a.body.walk(&mut |s| {
                        if let Stmt::Assign { lhs, .. } = s {
                            set.extend(lhs.targets());
                        }
                    });
                }
                Item::Instance(_) => {}
            }
        }
        Drivers { registers, logic }
    }
}

/// Parent-side classification of the signals feeding the child's inputs:
/// any register makes the edge sequential, otherwise any logic makes it
/// combinational.
fn classify(inst: &crate::frontend::Instance, child: &ModuleAst, d: &Drivers<'_>) -> EdgeKind {
    let conns: Vec<(Option<&crate::frontend::Port>, &Expr)> = match &inst.connections {
        Connections::Named(c) => c
            .iter()
            .filter_map(|c| c.expr.as_ref().map(|e| (child.port(&c.port), e)))
            .collect(),
        Connections::Positional(c) => c
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().map(|e| (child.ports.get(i), e)))
            .collect(),
    };
    let mut kind = EdgeKind::Direct;
    for (port, e) in conns {
        if port.is_some_and(|p| p.direction == Direction::Output) {
            continue;
        }
        let mut seq = false;
        let mut comb = has_logic(e);
        e.walk(&mut |x| {
            if let Expr::Ident(n) = x {
                seq |= d.registers.contains(n.as_str());
                comb |= d.logic.contains(n.as_str());
            }
        });
        if seq {
            return EdgeKind::Sequential;
        }
        if comb {
            kind = EdgeKind::Combinational;
        }
    }
    kind
}

/// Contains gates rather than wiring; constant selects are wiring.
fn has_logic(e: &Expr) -> bool {
    let mut logic = false;
    e.walk(&mut |x| {
        logic |= match x {
            Expr::Unary { .. } | Expr::Binary { .. } | Expr::Ternary { .. } => true,
            Expr::Index { index, .. } => index.as_literal().is_none(),
            _ => false,
        }
    });
    logic
}
