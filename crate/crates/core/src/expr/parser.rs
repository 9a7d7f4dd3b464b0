use super::ast::{BinOp, Func, Node, Var};
use super::{ExprError, Role};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ExprError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        while matches!(self.peek_byte(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(b) = self.peek_byte() else {
            return Ok((Tok::End, start));
        };
        let tok = match b {
            b'0'..=b'9' | b'.' => self.number()?,
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while matches!(self.peek_byte(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(b as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character '{ch}'"),
                });
            }
        };
        Ok((tok, start))
    }

    fn number(&mut self) -> Result<Tok, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while matches!(lx.peek_byte(), Some(c) if c.is_ascii_digit()) {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        if self.peek_byte() == Some(b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(ExprError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.peek_byte(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek_byte(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // not an exponent after all, e.g. "2e" followed by identifier chars
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&bytes[start..self.pos]).expect("ascii slice");
        text.parse::<f64>().map(Tok::Num).map_err(|_| ExprError::Syntax {
            offset: start,
            message: format!("malformed number '{text}'"),
        })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    role: Role,
    dim: usize,
}

/// Parses `src` into a tree, checking identifiers, arities and role restrictions.
pub fn parse_node(src: &str, role: Role, dim: usize) -> Result<Node, ExprError> {
    let toks = Lexer::tokens(src)?;
    let mut p = Parser {
        toks,
        idx: 0,
        role,
        dim,
    };
    let node = p.expr()?;
    match p.peek() {
        (Tok::End, _) => Ok(node),
        (tok, at) => Err(ExprError::Syntax {
            offset: *at,
            message: format!("unexpected {}", describe(tok)),
        }),
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier '{s}'"),
        Tok::Op(c) => format!("'{c}'"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::End => "end of input".into(),
    }
}

impl Parser {
    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.idx]
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.idx].clone();
        if t.0 != Tok::End {
            self.idx += 1;
        }
        t
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek().0 {
            Tok::Op(c) if ops.contains(&c) => {
                self.idx += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ExprError> {
        let (tok, at) = self.bump();
        if tok == want {
            Ok(())
        } else {
            Err(ExprError::Syntax {
                offset: at,
                message: format!("expected {}, found {}", describe(&want), describe(&tok)),
            })
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Node::negate(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exponent = self.exponent()?;
            return Ok(Node::bin(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Node, ExprError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Node::negate(self.exponent()?));
        }
        self.power()
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.peek().0 == Tok::LParen {
                    self.call(name, at)
                } else {
                    self.variable(&name, at).map(Node::Var)
                }
            }
            other => Err(ExprError::Syntax {
                offset: at,
                message: format!("unexpected {}", describe(&other)),
            }),
        }
    }

    fn call(&mut self, name: String, at: usize) -> Result<Node, ExprError> {
        let func = Func::from_name(&name).ok_or(ExprError::UnknownIdentifier {
            name: name.clone(),
            offset: at,
        })?;
        self.expect(Tok::LParen)?;
        let mut args = vec![self.expr()?];
        while self.peek().0 == Tok::Comma {
            self.idx += 1;
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        if args.len() != func.arity() {
            return Err(ExprError::Arity {
                function: name,
                expected: func.arity(),
                found: args.len(),
                offset: at,
            });
        }
        Ok(Node::Call(func, args))
    }

    fn variable(&self, name: &str, at: usize) -> Result<Var, ExprError> {
        let unknown = || ExprError::UnknownIdentifier {
            name: name.to_string(),
            offset: at,
        };
        match name {
            "u" => {
                if self.role.allows_u() {
                    Ok(Var::U)
                } else {
                    Err(ExprError::RoleViolation {
                        variable: "u".into(),
                        role: self.role.name(),
                        offset: at,
                    })
                }
            }
            "r" => Ok(Var::R),
            _ => {
                let (prefix, digits) = name.split_at(1);
                let coordinate = prefix == "x" || (prefix == "y" && self.role == Role::Phi);
                if !coordinate || digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(unknown());
                }
                match digits.parse::<usize>() {
                    Ok(i) if (1..=self.dim).contains(&i) && !digits.starts_with('0') => Ok(Var::X(i - 1)),
                    _ => Err(unknown()),
                }
            }
        }
    }
}
