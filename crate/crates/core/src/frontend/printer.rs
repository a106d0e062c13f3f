use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn print_module(m: &ModuleAst) -> String {
    let mut out = String::new();
    if m.ports.is_empty() {
        let _ = writeln!(out, "module {};", m.name);
    } else {
        let _ = writeln!(out, "module {} (", m.name);
        for (i, p) in m.ports.iter().enumerate() {
            let reg = if p.is_reg { " reg" } else { "" };
            let sep = if i + 1 < m.ports.len() { "," } else { "" };
            let _ = writeln!(out, "{INDENT}{}{reg}{} {}{sep}", p.direction, range(p.width), p.name);
        }
        out.push_str(");\n");
    }
    for p in &m.params {
        let kw = if p.local { "localparam" } else { "parameter" };
        let _ = writeln!(out, "{INDENT}{kw} {} = {};", p.name, literal(&p.value));
    }
    for n in &m.nets {
        let kw = match n.kind {
            NetKind::Wire => "wire",
            NetKind::Reg | NetKind::RegArray => "reg",
        };
        let depth = match n.depth {
            Some(d) => format!(" [0:{}]", d - 1),
            None => String::new(),
        };
        let _ = writeln!(out, "{INDENT}{kw}{} {}{depth};", range(n.width), n.name);
    }
    if !m.items.is_empty() && (!m.params.is_empty() || !m.nets.is_empty()) {
        out.push('\n');
    }
    for item in &m.items {
        match item {
            Item::Assign(a) => {
                let _ = writeln!(out, "{INDENT}assign {} = {};", lvalue(&a.lhs), print_expr(&a.rhs));
            }
            Item::Always(a) => {
                let sens = match &a.sensitivity {
                    Sensitivity::Star => "*".to_string(),
                    Sensitivity::Edges(es) => es
                        .iter()
                        .map(|e| {
                            let kw = match e.edge {
                                Edge::Posedge => "posedge",
                                Edge::Negedge => "negedge",
                            };
                            format!("{kw} {}", e.signal)
                        })
                        .collect::<Vec<_>>()
                        .join(" or "),
                };
                let _ = write!(out, "{INDENT}always @({sens})");
                body(&mut out, &a.body, 1);
            }
            Item::Instance(i) => {
                let conns = match &i.connections {
                    Connections::Named(cs) => cs
                        .iter()
                        .map(|c| {
                            format!(
                                ".{}({})",
                                c.port,
                                c.expr.as_ref().map(print_expr).unwrap_or_default()
                            )
                        })
                        .collect::<Vec<_>>(),
                    Connections::Positional(cs) => cs
                        .iter()
                        .map(|c| c.as_ref().map(print_expr).unwrap_or_default())
                        .collect(),
                };
                let _ = writeln!(out, "{INDENT}{} {} ({});", i.module, i.name, conns.join(", "));
            }
        }
    }
    out.push_str("endmodule\n");
    out
}

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!(" [{}:0]", width - 1)
    }
}

fn pad(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str(INDENT);
    }
}

/// Statement that follows a header already written on the current line.
fn body(out: &mut String, s: &Stmt, level: usize) {
    match s {
        Stmt::Block(_) => {
            out.push(' ');
            stmt_inline(out, s, level);
        }
        _ => {
            out.push('\n');
            pad(out, level + 1);
            stmt_inline(out, s, level + 1);
        }
    }
}

/// Write a statement starting at the current cursor; ends with a newline.
fn stmt_inline(out: &mut String, s: &Stmt, level: usize) {
    match s {
        Stmt::Null => out.push_str(";\n"),
        Stmt::Assign { lhs, rhs, blocking } => {
            let op = if *blocking { "=" } else { "<=" };
            let _ = writeln!(out, "{} {op} {};", lvalue(lhs), print_expr(rhs));
        }
        Stmt::Block(stmts) => {
            out.push_str("begin\n");
            for st in stmts {
                pad(out, level + 1);
                stmt_inline(out, st, level + 1);
            }
            pad(out, level);
            out.push_str("end\n");
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = write!(out, "if ({})", print_expr(cond));
            // An else-less `if` in the then-branch would capture our else.
            let wrap = else_branch.is_some() && ends_in_open_if(then_branch);
            if wrap {
                out.push_str(" begin\n");
                pad(out, level + 1);
                stmt_inline(out, then_branch, level + 1);
                pad(out, level);
                out.push_str("end\n");
            } else {
                body(out, then_branch, level);
            }
            if let Some(e) = else_branch {
                pad(out, level);
                match e.as_ref() {
                    Stmt::If { .. } => {
                        out.push_str("else ");
                        stmt_inline(out, e, level);
                    }
                    _ => {
                        out.push_str("else");
                        body(out, e, level);
                    }
                }
            }
        }
        Stmt::Case(c) => {
            let kw = match c.kind {
                CaseKind::Case => "case",
                CaseKind::Casez => "casez",
            };
            let _ = writeln!(out, "{kw} ({})", print_expr(&c.selector));
            for it in &c.items {
                pad(out, level + 1);
                let labels: Vec<String> = it.labels.iter().map(print_expr).collect();
                let _ = write!(out, "{}:", labels.join(", "));
                case_arm(out, &it.body, level + 1);
            }
            if let Some(d) = &c.default {
                pad(out, level + 1);
                out.push_str("default:");
                case_arm(out, d, level + 1);
            }
            pad(out, level);
            out.push_str("endcase\n");
        }
    }
}

fn case_arm(out: &mut String, s: &Stmt, level: usize) {
    out.push(' ');
    stmt_inline(out, s, level);
}

fn ends_in_open_if(s: &Stmt) -> bool {
    match s {
        Stmt::If {
            else_branch: None, ..
        } => true,
        Stmt::If {
            else_branch: Some(e),
            ..
        } => ends_in_open_if(e),
        _ => false,
    }
}

fn lvalue(l: &LValue) -> String {
    match l {
        LValue::Ident(n) => n.clone(),
        LValue::Index { name, index } => format!("{name}[{}]", print_expr(index)),
        LValue::Slice { name, msb, lsb } => format!("{name}[{msb}:{lsb}]"),
        LValue::Concat(parts) => {
            let ps: Vec<String> = parts.iter().map(lvalue).collect();
            format!("{{{}}}", ps.join(", "))
        }
    }
}

pub fn literal(l: &Literal) -> String {
    let size = l.width.map(|w| w.to_string()).unwrap_or_default();
    if l.dont_care != 0 {
        let w = l
            .width
            .unwrap_or_else(|| bit_length(l.value | l.dont_care).max(1));
        let digits: String = (0..w)
            .rev()
            .map(|i| {
                if (l.dont_care >> i) & 1 == 1 {
                    '?'
                } else if (l.value >> i) & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect();
        return format!("{size}'b{digits}");
    }
    if l.width.is_none() && !l.based {
        return l.value.to_string();
    }
    match l.radix {
        Radix::Decimal => format!("{size}'d{}", l.value),
        Radix::Hex => format!("{size}'h{:x}", l.value),
        Radix::Octal => format!("{size}'o{:o}", l.value),
        Radix::Binary => match l.width {
            Some(w) => format!("{size}'b{:0width$b}", l.value, width = w as usize),
            None => format!("'b{:b}", l.value),
        },
    }
}

const PREC_TERNARY: u8 = 0;
const PREC_UNARY: u8 = 11;
const PREC_PRIMARY: u8 = 12;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Ternary { .. } => PREC_TERNARY,
        Expr::Binary { op, .. } => op.precedence(),
        Expr::Unary { .. } => PREC_UNARY,
        _ => PREC_PRIMARY,
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_child(out: &mut String, e: &Expr, min_prec: u8) {
    if prec(e) < min_prec {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Ident(n) => out.push_str(n),
        Expr::Literal(l) => out.push_str(&literal(l)),
        Expr::Index { base, index } => {
            write_expr(out, base);
            out.push('[');
            write_expr(out, index);
            out.push(']');
        }
        Expr::Slice { base, msb, lsb } => {
            write_expr(out, base);
            let _ = write!(out, "[{msb}:{lsb}]");
        }
        Expr::Concat(parts) => {
            out.push('{');
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, p);
            }
            out.push('}');
        }
        Expr::Repeat { count, parts } => {
            let _ = write!(out, "{{{count}{{");
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, p);
            }
            out.push_str("}}");
        }
        Expr::Unary { op, operand } => {
            out.push_str(op.symbol());
            // Nested unary operators are parenthesized so that pairs such
            // as `~&` or `&&` are never glued into another token.
            write_child(out, operand, PREC_PRIMARY);
        }
        Expr::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            write_child(out, lhs, p);
            let _ = write!(out, " {} ", op.symbol());
            write_child(out, rhs, p + 1);
        }
        Expr::Ternary {
            cond,
            then_expr,
            else_expr,
        } => {
            write_child(out, cond, PREC_TERNARY + 1);
            out.push_str(" ? ");
            write_expr(out, then_expr);
            out.push_str(" : ");
            write_expr(out, else_expr);
        }
    }
}
