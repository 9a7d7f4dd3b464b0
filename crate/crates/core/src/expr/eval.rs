use std::collections::HashMap;

use smallvec::SmallVec;

use super::ast::{BinOp, Func, Node, Var};
use super::ExprError;
use crate::real::{norm, Real};

#[derive(Debug, Clone, Copy)]
enum Op {
    Num(f64),
    X(usize),
    U,
    R,
    Neg,
    // second field indexes `Program::labels` for error reporting
    Bin(BinOp, u32),
    Call(Func, u32),
}

/// Postfix form of an expression tree, evaluated on a small inline stack.
#[derive(Debug, Clone)]
pub(crate) struct Program {
    ops: Vec<Op>,
    labels: Vec<String>,
    uses_r: bool,
}

impl Program {
    pub(crate) fn compile(root: &Node) -> Program {
        let mut prog = Program {
            ops: Vec::new(),
            labels: Vec::new(),
            uses_r: root.uses(|v| matches!(v, Var::R)),
        };
        prog.emit(root);
        prog
    }

    fn emit(&mut self, node: &Node) {
        match node {
            Node::Num(v) => self.ops.push(Op::Num(*v)),
            Node::Var(Var::X(i)) => self.ops.push(Op::X(*i)),
            Node::Var(Var::U) => self.ops.push(Op::U),
            Node::Var(Var::R) => self.ops.push(Op::R),
            Node::Neg(a) => {
                self.emit(a);
                self.ops.push(Op::Neg);
            }
            Node::Bin(op, a, b) => {
                self.emit(a);
                self.emit(b);
                let label = self.label(node, matches!(op, BinOp::Div | BinOp::Pow));
                self.ops.push(Op::Bin(*op, label));
            }
            Node::Call(f, args) => {
                for a in args {
                    self.emit(a);
                }
                let label = self.label(node, matches!(f, Func::Log | Func::Sqrt));
                self.ops.push(Op::Call(*f, label));
            }
        }
    }

    fn label(&mut self, node: &Node, fallible: bool) -> u32 {
        if !fallible {
            return u32::MAX;
        }
        self.labels.push(node.to_string());
        (self.labels.len() - 1) as u32
    }

    fn domain_error(&self, label: u32, argument: f64) -> ExprError {
        ExprError::Domain {
            node: self.labels.get(label as usize).cloned().unwrap_or_default(),
            argument,
        }
    }

    #[inline]
    pub(crate) fn run<S: Real>(&self, x: &[S], u: Option<S>) -> Result<S, ExprError> {
        self.run_with_r(x, u, None)
    }

    pub(crate) fn run_with_r<S: Real>(&self, x: &[S], u: Option<S>, r_override: Option<f64>) -> Result<S, ExprError> {
        let r = match (self.uses_r, r_override) {
            (true, Some(r)) => S::lit(r),
            (true, None) => norm(x),
            (false, _) => S::zero(),
        };
        let mut stack: SmallVec<[S; 16]> = SmallVec::new();
        for op in &self.ops {
            match *op {
                Op::Num(v) => stack.push(S::lit(v)),
                Op::X(i) => match x.get(i) {
                    Some(&v) => stack.push(v),
                    None => return Err(ExprError::MissingBinding(format!("x{}", i + 1))),
                },
                Op::U => match u {
                    Some(v) => stack.push(v),
                    None => return Err(ExprError::MissingBinding("u".into())),
                },
                Op::R => stack.push(r),
                Op::Neg => {
                    let a = stack.pop().expect("operand");
                    stack.push(-a);
                }
                Op::Bin(op, label) => {
                    let b = stack.pop().expect("operand");
                    let a = stack.pop().expect("operand");
                    let v = match op {
                        BinOp::Add => a + b,
                        BinOp::Sub => a - b,
                        BinOp::Mul => a * b,
                        BinOp::Div => {
                            if b == S::zero() {
                                return Err(self.domain_error(label, b.to_f64_lossy()));
                            }
                            a / b
                        }
                        BinOp::Pow => {
                            let v = a.powf(b);
                            if v.is_nan() && !a.is_nan() && !b.is_nan() {
                                return Err(self.domain_error(label, a.to_f64_lossy()));
                            }
                            v
                        }
                    };
                    stack.push(v);
                }
                Op::Call(f, label) => {
                    let v = match f {
                        Func::Min | Func::Max => {
                            let b = stack.pop().expect("operand");
                            let a = stack.pop().expect("operand");
                            if f == Func::Min {
                                a.min(b)
                            } else {
                                a.max(b)
                            }
                        }
                        _ => {
                            let a = stack.pop().expect("operand");
                            match f {
                                Func::Sin => a.sin(),
                                Func::Cos => a.cos(),
                                Func::Exp => a.exp(),
                                Func::Abs => a.abs(),
                                Func::Step => {
                                    if a > S::zero() {
                                        S::one()
                                    } else {
                                        S::zero()
                                    }
                                }
                                Func::Log => {
                                    if !(a > S::zero()) {
                                        return Err(self.domain_error(label, a.to_f64_lossy()));
                                    }
                                    a.ln()
                                }
                                Func::Sqrt => {
                                    if !(a >= S::zero()) {
                                        return Err(self.domain_error(label, a.to_f64_lossy()));
                                    }
                                    a.sqrt()
                                }
                                Func::Min | Func::Max => unreachable!(),
                            }
                        }
                    };
                    stack.push(v);
                }
            }
        }
        Ok(stack.pop().expect("result"))
    }
}

/// Named variable values for [`super::Expr::eval`].
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    values: HashMap<String, f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    fn coordinate(&self, i: usize) -> Option<f64> {
        self.get(&format!("x{}", i + 1))
            .or_else(|| self.get(&format!("y{}", i + 1)))
    }

    /// Lays the bindings out as a coordinate vector plus optional `u`.
    pub(crate) fn resolve(&self, root: &Node, dim: usize) -> Result<(Vec<f64>, Option<f64>), ExprError> {
        let needs_all = root.uses(|v| matches!(v, Var::R)) && self.get("r").is_none();
        let mut x = vec![0.0; dim];
        for (i, slot) in x.iter_mut().enumerate() {
            let used = needs_all || root.uses(|v| *v == Var::X(i));
            match (used, self.coordinate(i)) {
                (_, Some(v)) => *slot = v,
                (true, None) => return Err(ExprError::MissingBinding(format!("x{}", i + 1))),
                (false, None) => {}
            }
        }
        let u = match (root.uses(|v| matches!(v, Var::U)), self.get("u")) {
            (true, None) => return Err(ExprError::MissingBinding("u".into())),
            (_, u) => u,
        };
        Ok((x, u))
    }
}
