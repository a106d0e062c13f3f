//! Inline a module hierarchy into a single module for simulation.

use std::collections::HashMap;

use crate::frontend::{
    Connections, ContinuousAssign, DesignAst, Direction, Expr, Item, LValue, ModuleAst, Net,
    NetKind, Stmt,
};

use super::SimError;

/// Flatten `top` and everything it instantiates. Signals of an instance
/// `u` are renamed `u.name` (nested: `u.v.name`).
pub fn flatten(design: &DesignAst, top: &str) -> Result<ModuleAst, SimError> {
    let m = design
        .module(top)
        .ok_or_else(|| SimError::UnknownModule(top.to_string()))?;
    let mut out = ModuleAst {
        name: m.name.clone(),
        ports: m.ports.clone(),
        params: m.params.clone(),
        nets: m.nets.clone(),
        items: Vec::new(),
    };
    let mut stack = vec![top.to_string()];
    inline_items(design, m, "", &mut out, &mut stack)?;
    Ok(out)
}

fn inline_items(
    design: &DesignAst,
    m: &ModuleAst,
    prefix: &str,
    out: &mut ModuleAst,
    stack: &mut Vec<String>,
) -> Result<(), SimError> {
    for item in &m.items {
        let Item::Instance(inst) = item else {
            out.items.push(rename_item(item, prefix, m));
            continue;
        };
        if stack.contains(&inst.module) {
            return Err(SimError::Unsupported(format!(
                "recursive instantiation of `{}`",
                inst.module
            )));
        }
        let child = design
            .module(&inst.module)
            .ok_or_else(|| SimError::UnknownModule(inst.module.clone()))?;
        let child_prefix = format!("{prefix}{}.", inst.name);
        for p in &child.params {
            let mut p = p.clone();
            p.name = format!("{child_prefix}{}", p.name);
            out.params.push(p);
        }
        for p in &child.ports {
            out.nets.push(Net {
                name: format!("{child_prefix}{}", p.name),
                kind: if p.is_reg { NetKind::Reg } else { NetKind::Wire },
                width: p.width,
                depth: None,
            });
        }
        for n in &child.nets {
            let mut n = n.clone();
            n.name = format!("{child_prefix}{}", n.name);
            out.nets.push(n);
        }
        let bound: Vec<(usize, Option<&Expr>)> = match &inst.connections {
            Connections::Named(cs) => {
                let mut v = Vec::new();
                for c in cs {
                    let idx = child
                        .ports
                        .iter()
                        .position(|p| p.name == c.port)
                        .ok_or_else(|| {
                            SimError::Unsupported(format!(
                                "`{}` has no port `{}`",
                                child.name, c.port
                            ))
                        })?;
                    v.push((idx, c.expr.as_ref()));
                }
                v
            }
            Connections::Positional(cs) => {
                if cs.len() > child.ports.len() {
                    return Err(SimError::Unsupported(format!(
                        "too many connections for `{}`",
                        child.name
                    )));
                }
                cs.iter().enumerate().map(|(i, e)| (i, e.as_ref())).collect()
            }
        };
        let conn: HashMap<usize, Option<&Expr>> = bound.into_iter().collect();
        for (i, p) in child.ports.iter().enumerate() {
            let inner = format!("{child_prefix}{}", p.name);
            let outer = conn.get(&i).copied().flatten().map(|e| rename_expr(e, prefix, m));
            match p.direction {
                Direction::Input => out.items.push(Item::Assign(ContinuousAssign {
                    lhs: LValue::Ident(inner),
                    rhs: outer.unwrap_or_else(|| Expr::sized(p.width, 0)),
                })),
                Direction::Output => {
                    if let Some(e) = outer {
                        let lhs = expr_to_lvalue(&e).ok_or_else(|| {
                            SimError::Unsupported(format!(
                                "output `{}` of `{}` drives a non-assignable expression",
                                p.name, inst.name
                            ))
                        })?;
                        out.items.push(Item::Assign(ContinuousAssign {
                            lhs,
                            rhs: Expr::Ident(inner),
                        }));
                    }
                }
                Direction::Inout => {
                    return Err(SimError::Unsupported("inout ports".into()));
                }
            }
        }
        stack.push(inst.module.clone());
        inline_items(design, child, &child_prefix, out, stack)?;
        stack.pop();
    }
    Ok(())
}

fn expr_to_lvalue(e: &Expr) -> Option<LValue> {
    match e {
        Expr::Ident(n) => Some(LValue::Ident(n.clone())),
        Expr::Slice { base, msb, lsb } => match base.as_ref() {
            Expr::Ident(n) => Some(LValue::Slice {
                name: n.clone(),
                msb: *msb,
                lsb: *lsb,
            }),
            _ => None,
        },
        Expr::Index { base, index } => match base.as_ref() {
            Expr::Ident(n) => Some(LValue::Index {
                name: n.clone(),
                index: (**index).clone(),
            }),
            _ => None,
        },
        Expr::Concat(parts) => parts
            .iter()
            .map(expr_to_lvalue)
            .collect::<Option<Vec<_>>>()
            .map(LValue::Concat),
        _ => None,
    }
}

fn local(name: &str, prefix: &str, m: &ModuleAst) -> bool {
    !prefix.is_empty() && m.declared_names().any(|n| n == name)
}

fn rename_expr(e: &Expr, prefix: &str, m: &ModuleAst) -> Expr {
    let mut e = e.clone();
    if prefix.is_empty() {
        return e;
    }
    e.walk_mut_post(&mut |x| {
        if let Expr::Ident(n) = x {
            if local(n, prefix, m) {
                *n = format!("{prefix}{n}");
            }
        }
    });
    e
}

fn rename_lvalue(l: &mut LValue, prefix: &str, m: &ModuleAst) {
    match l {
        LValue::Ident(n) | LValue::Slice { name: n, .. } => *n = format!("{prefix}{n}"),
        LValue::Index { name, index } => {
            *name = format!("{prefix}{name}");
            *index = rename_expr(index, prefix, m);
        }
        LValue::Concat(parts) => parts.iter_mut().for_each(|p| rename_lvalue(p, prefix, m)),
    }
}

fn rename_item(item: &Item, prefix: &str, m: &ModuleAst) -> Item {
    let mut item = item.clone();
    if prefix.is_empty() {
        return item;
    }
    match &mut item {
        Item::Assign(a) => {
            rename_lvalue(&mut a.lhs, prefix, m);
            a.rhs = rename_expr(&a.rhs, prefix, m);
        }
        Item::Always(a) => {
            if let crate::frontend::Sensitivity::Edges(es) = &mut a.sensitivity {
                for e in es {
                    e.signal = format!("{prefix}{}", e.signal);
                }
            }
            a.body.walk_mut(&mut |s| {
                if let Stmt::Assign { lhs, rhs, .. } = s {
                    rename_lvalue(lhs, prefix, m);
                    *rhs = rename_expr(rhs, prefix, m);
                } else {
                    s.for_each_own_expr_mut(&mut |e| *e = rename_expr(e, prefix, m));
                }
            });
        }
        Item::Instance(_) => unreachable!("instances are inlined"),
    }
    item
}
