use super::Expr;

/// Fully parenthesized text that parses back to the same tree.
pub fn format(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, &mut s);
    s
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        // `Display` for f64 is the shortest round-tripping decimal
        Expr::Num(c) => out.push_str(&c.to_string()),
        Expr::Coord(a) => out.push(a.name()),
        Expr::Jet(v) => out.push_str(&v.to_string()),
        Expr::Neg(inner) => {
            out.push_str("(-");
            write_expr(inner, out);
            out.push(')');
        }
        Expr::Binary(op, a, b) => {
            out.push('(');
            write_expr(a, out);
            out.push(' ');
            out.push(op.symbol());
            out.push(' ');
            write_expr(b, out);
            out.push(')');
        }
        Expr::Pow(base, n) => {
            out.push('(');
            write_expr(base, out);
            out.push('^');
            out.push_str(&n.to_string());
            out.push(')');
        }
        Expr::Call(f, arg) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(arg, out);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn round_trips_worked_lagrangians() {
        for src in [
            "0.5*D[theta,t,1]^2 - 0.5*mgl*theta^2",
            "D[y,t,1]^2/2 + cos(y)",
            "u*D[phi,t,1] - (3*u^2 + D[u,x,2])*D[phi,x,1] + u^3",
            "u*D[phi,t,1] - (u^2/2 + F)*D[phi,x,1] + u^3/6 - F*u",
            "-y^-3 * exp(-t) + 1e-7 * x",
        ] {
            let e = parse(src).unwrap();
            let text = format(&e);
            assert_eq!(parse(&text).unwrap(), e, "{src} -> {text}");
        }
    }

    #[test]
    fn shape() {
        let e = parse("-a^2 + sin(b)").unwrap();
        assert_eq!(format(&e), "((-(a^2)) + sin(b))");
    }
}
