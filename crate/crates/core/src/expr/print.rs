use std::fmt;

use num_traits::{One, Signed};

use super::{Expr, Node};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_POW: u8 = 3;
const PREC_ATOM: u8 = 4;

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(_) => PREC_ADD,
        Node::Mul(_) | Node::Div(..) => PREC_MUL,
        Node::Const(c) => {
            if c.is_negative() {
                PREC_ADD
            } else if !c.is_integer() {
                PREC_MUL
            } else {
                PREC_ATOM
            }
        }
        Node::Pow(..) => PREC_POW,
        _ => PREC_ATOM,
    }
}

fn wrap(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(e) < min {
        write!(f, "(")?;
        write_expr(e, f)?;
        write!(f, ")")
    } else {
        write_expr(e, f)
    }
}

/// Splits a product into a leading negative sign and the remaining factors.
fn negated_body(e: &Expr) -> Option<Expr> {
    if let Node::Mul(fs) = e.node() {
        if let Node::Const(c) = fs[0].node() {
            if c.is_negative() {
                let mut rest = fs.clone();
                let m = -c.clone();
                if m.is_one() {
                    rest.remove(0);
                } else {
                    rest[0] = Expr::constant(m);
                }
                return Some(Expr::product(rest));
            }
        }
    }
    None
}

fn write_product(fs: &[Expr], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for (i, x) in fs.iter().enumerate() {
        if i > 0 {
            write!(f, "*")?;
        }
        let min = if i == 0 { PREC_MUL } else { PREC_POW };
        if matches!(x.node(), Node::Div(..)) {
            write!(f, "(")?;
            write_expr(x, f)?;
            write!(f, ")")?;
        } else {
            wrap(x, min, f)?;
        }
    }
    Ok(())
}

pub(super) fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Var(v) => write!(f, "{v}"),
        Node::Const(c) => {
            if c.is_integer() {
                write!(f, "{}", c.numer())
            } else {
                write!(f, "{}/{}", c.numer(), c.denom())
            }
        }
        Node::Add(ts) => {
            for (i, t) in ts.iter().enumerate() {
                match (negated_body(t), t.as_const()) {
                    (Some(body), _) => {
                        write!(f, "{}", if i == 0 { "-" } else { " - " })?;
                        if matches!(body.node(), Node::Div(..)) {
                            write!(f, "(")?;
                            write_expr(&body, f)?;
                            write!(f, ")")?;
                        } else {
                            wrap(&body, PREC_MUL, f)?;
                        }
                    }
                    (None, Some(c)) if c.is_negative() && i > 0 => {
                        write!(f, " - ")?;
                        write_expr(&Expr::constant(-c.clone()), f)?;
                    }
                    _ => {
                        if i > 0 {
                            write!(f, " + ")?;
                        }
                        write_expr(t, f)?;
                    }
                }
            }
            Ok(())
        }
        Node::Mul(fs) => {
            if let Some(body) = negated_body(e) {
                write!(f, "-")?;
                return match body.node() {
                    Node::Mul(inner) => write_product(inner, f),
                    Node::Div(..) => {
                        write!(f, "(")?;
                        write_expr(&body, f)?;
                        write!(f, ")")
                    }
                    _ => wrap(&body, PREC_POW, f),
                };
            }
            write_product(fs, f)
        }
        Node::Pow(b, n) => {
            wrap(b, PREC_ATOM, f)?;
            write!(f, "^{n}")
        }
        Node::Div(a, b) => {
            wrap(a, PREC_MUL, f)?;
            write!(f, "/")?;
            wrap(b, PREC_POW, f)
        }
        Node::Func(g, a) => {
            write!(f, "{}(", g.name())?;
            write_expr(a, f)?;
            write!(f, ")")
        }
        Node::Table(t, k, a) => {
            write!(f, "{}", t.name())?;
            for _ in 0..*k {
                write!(f, "'")?;
            }
            write!(f, "(")?;
            write_expr(a, f)?;
            write!(f, ")")
        }
        Node::Integral(g, v, u) => {
            write!(f, "int[{v}=0..")?;
            write_expr(u, f)?;
            write!(f, "](")?;
            write_expr(g, f)?;
            write!(f, ")")
        }
    }
}
