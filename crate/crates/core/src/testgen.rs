//! Random design generators shared by unit tests.

use proptest::prelude::*;

use crate::frontend::*;

pub fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        prop::sample::select(vec!["a", "b", "c", "s"]).prop_map(Expr::ident),
        (1u32..9, any::<u64>()).prop_map(|(w, v)| Expr::sized(w, v)),
        (0u64..100).prop_map(Expr::lit),
    ]
}

pub fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 32, 3, |inner| {
        let bin = prop::sample::select(vec![
            BinaryOp::Add,
            BinaryOp::Sub,
            BinaryOp::Mul,
            BinaryOp::Div,
            BinaryOp::Mod,
            BinaryOp::Shl,
            BinaryOp::Shr,
            BinaryOp::And,
            BinaryOp::Or,
            BinaryOp::Xor,
            BinaryOp::LogicAnd,
            BinaryOp::LogicOr,
            BinaryOp::Eq,
            BinaryOp::Ne,
            BinaryOp::Lt,
            BinaryOp::Le,
            BinaryOp::Gt,
            BinaryOp::Ge,
        ]);
        let un = prop::sample::select(vec![
            UnaryOp::Not,
            UnaryOp::LogicNot,
            UnaryOp::RedAnd,
            UnaryOp::RedOr,
            UnaryOp::RedXor,
            UnaryOp::Neg,
        ]);
        prop_oneof![
            (bin, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (un, inner.clone()).prop_map(|(op, e)| Expr::unary(op, e)),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(c, a, b)| Expr::ternary(c, a, b)),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Expr::Concat),
            (0u32..4).prop_map(|i| Expr::Index {
                base: Box::new(Expr::ident("a")),
                index: Box::new(Expr::sized(2, i as u64)),
            }),
            (0u32..4, 0u32..4).prop_map(|(x, y)| Expr::Slice {
                base: Box::new(Expr::ident("b")),
                msb: x.max(y),
                lsb: x.min(y),
            }),
        ]
    })
}

pub fn module_with(e: Expr) -> ModuleAst {
    let mut m = ModuleAst::new("p");
    for (n, w) in [("a", 4), ("b", 4), ("c", 3), ("s", 1)] {
        m.ports.push(Port {
            name: n.into(),
            direction: Direction::Input,
            width: w,
            is_reg: false,
        });
    }
    m.ports.push(Port {
        name: "y".into(),
        direction: Direction::Output,
        width: 8,
        is_reg: false,
    });
    m.items.push(Item::Assign(ContinuousAssign {
        lhs: LValue::ident("y"),
        rhs: e,
    }));
    m
}
