//! Closed-form expressions in `theta` and `t` for forcing terms and initial data.
//!
//! Grammar: numbers, `theta` (or `θ`), `t`, `T` (the period), `pi` (or `π`),
//! `sin`, `cos`, `exp`, `+ - * / ^` and parentheses. `^` binds tighter than
//! unary minus and is right associative.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("expression error at column {column}: {message}")]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Number(f64),
    Theta,
    Time,
    Period,
    Neg(Box<Node>),
    Binary(char, Box<Node>, Box<Node>),
    Call(Function, Box<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Function {
    Sin,
    Cos,
    Exp,
}

/// A parsed expression; evaluation is pure and allocation free.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self, ExprError> {
        let mut p = Parser { chars: source.chars().collect(), pos: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error(format!("unexpected '{}'", p.chars[p.pos])));
        }
        Ok(Expr { source: source.trim().to_string(), root })
    }

    pub fn eval(&self, theta: f64, t: f64, period: f64) -> f64 {
        eval(&self.root, theta, t, period)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn eval(node: &Node, theta: f64, t: f64, period: f64) -> f64 {
    match node {
        Node::Number(v) => *v,
        Node::Theta => theta,
        Node::Time => t,
        Node::Period => period,
        Node::Neg(a) => -eval(a, theta, t, period),
        Node::Binary(op, a, b) => {
            let (a, b) = (eval(a, theta, t, period), eval(b, theta, t, period));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.powf(b),
            }
        }
        Node::Call(f, a) => {
            let a = eval(a, theta, t, period);
            match f {
                Function::Sin => a.sin(),
                Function::Cos => a.cos(),
                Function::Exp => a.exp(),
            }
        }
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: String) -> ExprError {
        ExprError { column: self.pos + 1, message }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut left = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            left = Node::Binary(op, Box::new(left), Box::new(self.term()?));
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut left = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            left = Node::Binary(op, Box::new(left), Box::new(self.unary()?));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Node::Binary('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression".into())),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'".into()));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() => self.identifier(),
            Some(c) => Err(self.error(format!("unexpected '{c}'"))),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.chars.len() && (self.chars[self.pos].is_ascii_digit() || self.chars[self.pos] == '.') {
            self.pos += 1;
        }
        if self.pos < self.chars.len() && matches!(self.chars[self.pos], 'e' | 'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.chars.len() && matches!(self.chars[self.pos], '+' | '-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = mark;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse()
            .map(Node::Number)
            .map_err(|_| ExprError { column: start + 1, message: format!("bad number '{text}'") })
    }

    fn identifier(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.chars.len() && (self.chars[self.pos].is_alphanumeric() || self.chars[self.pos] == '_') {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        let function = match name.as_str() {
            "theta" | "θ" => return Ok(Node::Theta),
            "t" => return Ok(Node::Time),
            "T" => return Ok(Node::Period),
            "pi" | "π" => return Ok(Node::Number(std::f64::consts::PI)),
            "sin" => Function::Sin,
            "cos" => Function::Cos,
            "exp" => Function::Exp,
            _ => return Err(ExprError { column: start + 1, message: format!("unknown name '{name}'") }),
        };
        if !self.eat('(') {
            return Err(self.error(format!("expected '(' after {name}")));
        }
        let arg = self.expr()?;
        if !self.eat(')') {
            return Err(self.error("expected ')'".into()));
        }
        Ok(Node::Call(function, Box::new(arg)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn eval(s: &str, theta: f64, t: f64) -> f64 {
        Expr::parse(s).unwrap().eval(theta, t, 2.0)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(eval("(1 + 2) * 3", 0.0, 0.0), 9.0);
        assert_eq!(eval("2 ^ 3 ^ 2", 0.0, 0.0), 512.0);
        assert_eq!(eval("-2 ^ 2", 0.0, 0.0), -4.0);
        assert_eq!(eval("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(eval("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(eval("2.5e-1 * 4", 0.0, 0.0), 1.0);
    }

    #[test]
    fn variables_and_functions() {
        assert_eq!(eval("cos(theta) * exp(-t)", 0.3, 0.7), 0.3f64.cos() * (-0.7f64).exp());
        assert_eq!(eval("sin(2*π*t/T)", 0.0, 0.5), (PI * 0.5).sin());
        assert_eq!(eval("cos(θ)", 1.1, 0.0), 1.1f64.cos());
        assert_eq!(eval("pi", 0.0, 0.0), PI);
    }

    #[test]
    fn errors_carry_columns() {
        assert_eq!(Expr::parse("1 +").unwrap_err().column, 4);
        assert_eq!(Expr::parse("foo(1)").unwrap_err().column, 1);
        assert!(Expr::parse("sin 1").is_err());
        assert!(Expr::parse("(1").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("").is_err());
    }

    proptest! {
        #[test]
        fn literals_round_trip(v in 0.0f64..1e6) {
            let text = format!("{v:e}");
            prop_assert_eq!(eval(&text, 0.0, 0.0), v);
        }

        #[test]
        fn sum_is_commutative(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let x = eval(&format!("({a}) + ({b})"), 0.0, 0.0);
            let y = eval(&format!("({b}) + ({a})"), 0.0, 0.0);
            prop_assert_eq!(x, y);
        }
    }
}
