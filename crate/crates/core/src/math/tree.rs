use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

/// Expression tree. The variant order doubles as the kind order used when
/// sorting children into canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParseTree {
    Number(BigRational),
    Symbol(String),
    Subscript(Box<ParseTree>, Box<ParseTree>),
    Pow(Box<ParseTree>, Box<ParseTree>),
    Mul(Vec<ParseTree>),
    Add(Vec<ParseTree>),
    Sub(Box<ParseTree>, Box<ParseTree>),
    Div(Box<ParseTree>, Box<ParseTree>),
    Neg(Box<ParseTree>),
    Apply(String, Vec<ParseTree>),
    Equals(Box<ParseTree>, Box<ParseTree>),
}

/// Functions with a numeric definition.
pub const EVALUABLE_FUNCTIONS: &[&str] = &["sin", "cos", "tan", "log", "ln", "exp", "sqrt"];

impl ParseTree {
    pub fn int(n: i64) -> Self {
        ParseTree::Number(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn sym(name: &str) -> Self {
        ParseTree::Symbol(name.to_string())
    }

    pub fn add(children: Vec<ParseTree>) -> Self {
        ParseTree::Add(children)
    }

    pub fn mul(children: Vec<ParseTree>) -> Self {
        ParseTree::Mul(children)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: ParseTree, b: ParseTree) -> Self {
        ParseTree::Sub(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: ParseTree, b: ParseTree) -> Self {
        ParseTree::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: ParseTree, b: ParseTree) -> Self {
        ParseTree::Pow(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: ParseTree) -> Self {
        ParseTree::Neg(Box::new(a))
    }

    pub fn equals(a: ParseTree, b: ParseTree) -> Self {
        ParseTree::Equals(Box::new(a), Box::new(b))
    }

    pub fn apply(name: &str, args: Vec<ParseTree>) -> Self {
        ParseTree::Apply(name.to_string(), args)
    }

    pub fn subscript(base: ParseTree, sub: ParseTree) -> Self {
        ParseTree::Subscript(Box::new(base), Box::new(sub))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ParseTree::Number(_) => "Number",
            ParseTree::Symbol(_) => "Symbol",
            ParseTree::Subscript(..) => "Subscript",
            ParseTree::Pow(..) => "Pow",
            ParseTree::Mul(_) => "Mul",
            ParseTree::Add(_) => "Add",
            ParseTree::Sub(..) => "Sub",
            ParseTree::Div(..) => "Div",
            ParseTree::Neg(_) => "Neg",
            ParseTree::Apply(..) => "Apply",
            ParseTree::Equals(..) => "Equals",
        }
    }

    pub fn children(&self) -> Vec<&ParseTree> {
        match self {
            ParseTree::Number(_) | ParseTree::Symbol(_) => Vec::new(),
            ParseTree::Subscript(a, b)
            | ParseTree::Pow(a, b)
            | ParseTree::Sub(a, b)
            | ParseTree::Div(a, b)
            | ParseTree::Equals(a, b) => vec![a, b],
            ParseTree::Neg(a) => vec![a],
            ParseTree::Mul(cs) | ParseTree::Add(cs) | ParseTree::Apply(_, cs) => cs.iter().collect(),
        }
    }

    pub fn child_mut(&mut self, i: usize) -> Option<&mut ParseTree> {
        match self {
            ParseTree::Number(_) | ParseTree::Symbol(_) => None,
            ParseTree::Subscript(a, b)
            | ParseTree::Pow(a, b)
            | ParseTree::Sub(a, b)
            | ParseTree::Div(a, b)
            | ParseTree::Equals(a, b) => match i {
                0 => Some(a),
                1 => Some(b),
                _ => None,
            },
            ParseTree::Neg(a) => (i == 0).then_some(&mut **a),
            ParseTree::Mul(cs) | ParseTree::Add(cs) | ParseTree::Apply(_, cs) => cs.get_mut(i),
        }
    }

    pub fn at_path(&self, path: &[usize]) -> Option<&ParseTree> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children().get(i).and_then(|c| c.at_path(rest)),
        }
    }

    pub fn at_path_mut(&mut self, path: &[usize]) -> Option<&mut ParseTree> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.child_mut(i).and_then(|c| c.at_path_mut(rest)),
        }
    }

    /// A negative number constant.
    pub fn is_negative_number(&self) -> bool {
        matches!(self, ParseTree::Number(q) if q.is_negative())
    }

    pub fn is_atom(&self) -> bool {
        matches!(
            self,
            ParseTree::Number(_) | ParseTree::Symbol(_) | ParseTree::Subscript(..)
        )
    }

    /// Variable keys: symbol names and rendered subscripted symbols. Function
    /// names of `Apply` nodes are not included.
    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            ParseTree::Symbol(s) => {
                out.insert(s.clone());
            }
            ParseTree::Subscript(..) => {
                out.insert(super::render_latex(self));
            }
            _ => {
                for c in self.children() {
                    c.collect_symbols(out);
                }
            }
        }
    }

    /// Names of applied functions without a numeric definition.
    pub fn unknown_functions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| {
            if let ParseTree::Apply(name, _) = t {
                if !EVALUABLE_FUNCTIONS.contains(&name.as_str()) {
                    out.insert(name.clone());
                }
            }
        });
        out
    }

    pub fn walk(&self, f: &mut dyn FnMut(&ParseTree)) {
        f(self);
        if !matches!(self, ParseTree::Subscript(..)) {
            for c in self.children() {
                c.walk(f);
            }
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Checks per-kind arity.
    pub fn is_well_formed(&self) -> bool {
        let ok = match self {
            ParseTree::Add(cs) | ParseTree::Mul(cs) => cs.len() >= 2,
            ParseTree::Apply(_, args) => !args.is_empty(),
            _ => true,
        };
        ok && self.children().iter().all(|c| c.is_well_formed())
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::render_latex(self))
    }
}
