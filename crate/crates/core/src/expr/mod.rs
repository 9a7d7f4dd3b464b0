//! Arithmetic expression language for the nonlinearity, the bound function,
//! boundary data and implicit domains.
//!
//! Grammar (whitespace-insensitive, `^` right-associative):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' ('-')* power)?
//! atom  := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Variables are `x1..xd`, `r` (Euclidean norm of the point) and `u` (only in
//! the nonlinearity). Boundary data may also spell coordinates `y1..yd`.
//! Functions: `sin cos exp log sqrt abs step` (unary) and `min max` (binary),
//! where `step(t) = 1` for `t > 0` and `0` otherwise.

mod ast;
mod eval;
mod parser;

use thiserror::Error;

pub use ast::{BinOp, Func, Node, Var};
pub use eval::Bindings;
pub use parser::parse_node;

use crate::real::Real;
use eval::Program;

/// Which problem ingredient an expression defines; decides the admissible variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Nonlinearity `F(x, u)`.
    F,
    /// Bound `U(x)`.
    U,
    /// Boundary data.
    Phi,
    /// Signed distance of an implicit domain.
    Domain,
}

impl Role {
    pub fn allows_u(self) -> bool {
        matches!(self, Role::F)
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::F => "F",
            Role::U => "U",
            Role::Phi => "phi",
            Role::Domain => "domain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{function}` takes {expected} argument(s), got {found} (offset {offset})")]
    Arity {
        function: String,
        expected: usize,
        found: usize,
        offset: usize,
    },

    #[error("variable `{variable}` is not allowed in a {role} expression (offset {offset})")]
    RoleViolation {
        variable: String,
        role: &'static str,
        offset: usize,
    },

    #[error("missing binding for variable `{0}`")]
    MissingBinding(String),

    #[error("math domain error in `{node}`: argument {argument}")]
    Domain { node: String, argument: f64 },
}

/// A parsed, role-checked expression ready for evaluation.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    role: Role,
    dim: usize,
    program: Program,
}

impl Expr {
    /// Parses `source` for `role` in dimension `dim`.
    pub fn parse(source: &str, role: Role, dim: usize) -> Result<Self, ExprError> {
        let root = parse_node(source, role, dim)?;
        Ok(Self::from_node(root, role, dim))
    }

    /// Builds an expression from an already checked tree.
    pub fn from_node(root: Node, role: Role, dim: usize) -> Self {
        let program = Program::compile(&root);
        Expr {
            root,
            role,
            dim,
            program,
        }
    }

    /// Constant expression.
    pub fn constant(value: f64, role: Role, dim: usize) -> Self {
        Self::from_node(Node::Num(value), role, dim)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when the tree contains no variables.
    pub fn is_constant(&self) -> bool {
        !self.root.uses_any_var()
    }

    pub fn uses_u(&self) -> bool {
        self.root.uses(|v| matches!(v, Var::U))
    }

    /// Evaluates at point `x`, with `u` bound when the role allows it.
    #[inline]
    pub fn eval_at<S: Real>(&self, x: &[S], u: Option<S>) -> Result<S, ExprError> {
        self.program.run(x, u)
    }

    /// Evaluates against named bindings (`x1`, ..., `u`, `r`).
    pub fn eval(&self, bindings: &Bindings) -> Result<f64, ExprError> {
        let (x, u) = bindings.resolve(&self.root, self.dim)?;
        self.program.run_with_r(&x, u, bindings.get("r"))
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.root.fmt(f)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.role == other.role && self.dim == other.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_node_over_u() {
        let e = Expr::parse("u^2", Role::F, 3).unwrap();
        match e.root() {
            Node::Bin(BinOp::Pow, lhs, rhs) => {
                assert_eq!(**lhs, Node::Var(Var::U));
                assert_eq!(**rhs, Node::Num(2.0));
            }
            other => panic!("unexpected tree {other:?}"),
        }
    }

    #[test]
    fn step_call_for_phi() {
        let e = Expr::parse("step(x3)", Role::Phi, 3).unwrap();
        assert!(matches!(e.root(), Node::Call(Func::Step, args) if args.len() == 1));
        assert_eq!(e.eval_at(&[0.0, 0.0, 0.2], None).unwrap(), 1.0);
        assert_eq!(e.eval_at(&[0.0, 0.0, 0.0], None).unwrap(), 0.0);
        assert_eq!(e.eval_at(&[0.0, 0.0, -0.2], None).unwrap(), 0.0);
    }

    #[test]
    fn syntax_error_offset() {
        let err = Expr::parse("x1 + * 2", Role::F, 3).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { offset: 5, .. }), "{err:?}");
    }

    #[test]
    fn eval_with_bindings() {
        let e = Expr::parse("x1^2 + u", Role::F, 3).unwrap();
        let b = Bindings::new().with("x1", 2.0).with("u", 3.0);
        assert_eq!(e.eval(&b).unwrap(), 7.0);
        let c = Expr::parse("min(1, exp(0))", Role::U, 3).unwrap();
        assert_eq!(c.eval(&Bindings::new()).unwrap(), 1.0);
    }

    #[test]
    fn sqrt_of_negative_is_domain_error() {
        let e = Expr::parse("sqrt(x1)", Role::U, 3).unwrap();
        let err = e.eval(&Bindings::new().with("x1", -1.0)).unwrap_err();
        assert!(
            matches!(err, ExprError::Domain { ref node, .. } if node == "sqrt(x1)"),
            "{err}"
        );
        let l = Expr::parse("log(x2 - 1)", Role::U, 3).unwrap();
        assert!(matches!(
            l.eval_at(&[0.0, 0.5, 0.0], None),
            Err(ExprError::Domain { .. })
        ));
    }

    #[test]
    fn missing_binding() {
        let e = Expr::parse("x1 + u", Role::F, 3).unwrap();
        let err = e.eval(&Bindings::new().with("x1", 1.0)).unwrap_err();
        assert_eq!(err, ExprError::MissingBinding("u".into()));
    }

    #[test]
    fn role_and_identifier_checks() {
        assert!(matches!(
            Expr::parse("u + 1", Role::Phi, 3),
            Err(ExprError::RoleViolation { .. })
        ));
        assert!(matches!(
            Expr::parse("2*u", Role::U, 3),
            Err(ExprError::RoleViolation { .. })
        ));
        assert!(matches!(
            Expr::parse("x4", Role::F, 3),
            Err(ExprError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            Expr::parse("foo(1)", Role::F, 3),
            Err(ExprError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            Expr::parse("min(1)", Role::F, 3),
            Err(ExprError::Arity {
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(
            Expr::parse("y2", Role::F, 3),
            Err(ExprError::UnknownIdentifier { .. })
        ));
        assert!(Expr::parse("y2 + x1", Role::Phi, 3).is_ok());
    }

    #[test]
    fn precedence() {
        let eval = |s: &str| Expr::parse(s, Role::U, 3).unwrap().eval_at(&[0.0f64; 3], None).unwrap();
        assert_eq!(eval("-2^2"), -4.0);
        assert_eq!(eval("2^3^2"), 512.0);
        assert_eq!(eval("2^-1"), 0.5);
        assert_eq!(eval("1 + 2 * 3"), 7.0);
        assert_eq!(eval("(1 + 2) * 3"), 9.0);
        assert_eq!(eval("8 / 4 / 2"), 1.0);
        assert_eq!(eval("1 - 2 - 3"), -4.0);
        assert_eq!(eval("- - 3"), 3.0);
        assert_eq!(eval("2.5e1 + .5"), 25.5);
    }

    #[test]
    fn radius_variable() {
        let e = Expr::parse("r - 1", Role::Domain, 3).unwrap();
        assert!((e.eval_at(&[3.0, 4.0, 0.0], None).unwrap() - 4.0f64).abs() < 1e-15);
        let v = e
            .eval(&Bindings::new().with("x1", 0.0).with("x2", 0.0).with("x3", 2.0))
            .unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn display_round_trip() {
        let src = "-x1^2 + 3*min(u, exp(-r)) / (1 + step(x2 - 0.5))";
        let e = Expr::parse(src, Role::F, 3).unwrap();
        let printed = e.to_string();
        let again = Expr::parse(&printed, Role::F, 3).unwrap();
        assert_eq!(again.to_string(), printed);
        assert_eq!(again.root(), e.root());
    }
}
