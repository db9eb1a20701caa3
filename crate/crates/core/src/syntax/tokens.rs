use super::{escape_text, ExprKind, ExprNode};

/// Linearizes an expression into seq2seq-style target tokens.
///
/// Every identifier, literal, parenthesis, comma and `=` is one token, laid
/// out as in the call-style rendering. The count does not depend on which
/// surface form the tree was parsed from.
pub fn tokenize_linear(e: &ExprNode) -> Vec<String> {
    let mut out = Vec::new();
    push(e, &mut out);
    out
}

fn push(e: &ExprNode, out: &mut Vec<String>) {
    match &e.kind {
        ExprKind::Call { head, positional, named } => {
            out.push(head.clone());
            out.push("(".into());
            let mut first = true;
            for a in positional {
                if !first {
                    out.push(",".into());
                }
                first = false;
                push(a, out);
            }
            for (k, v) in named {
                if !first {
                    out.push(",".into());
                }
                first = false;
                out.push(k.clone());
                out.push("=".into());
                push(v, out);
            }
            out.push(")".into());
        }
        ExprKind::Let { bindings, body } => {
            out.push("let".into());
            out.push("(".into());
            for (name, value) in bindings {
                out.push(name.clone());
                out.push("=".into());
                push(value, out);
                out.push(",".into());
            }
            push(body, out);
            out.push(")".into());
        }
        ExprKind::Symbol(s) => out.push(s.clone()),
        ExprKind::Text(s) => out.push(escape_text(s)),
        ExprKind::Num(n) => out.push(n.to_string()),
        ExprKind::Bool(b) => out.push(b.to_string()),
        ExprKind::VarRef(v) => out.push(format!("${v}")),
    }
}
