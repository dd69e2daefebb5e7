//! Terms and s-expression reading.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(String),
    /// Stored without the leading `?`.
    Var(String),
    Compound(String, Vec<Term>),
}

impl Term {
    pub fn constant(s: &str) -> Term {
        Term::Const(s.to_string())
    }

    pub fn var(s: &str) -> Term {
        Term::Var(s.to_string())
    }

    pub fn compound(f: &str, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Const(f.to_string())
        } else {
            Term::Compound(f.to_string(), args)
        }
    }

    /// Functor and arity of an atomic sentence. Variables have none.
    pub fn key(&self) -> Option<(&str, usize)> {
        match self {
            Term::Const(c) => Some((c, 0)),
            Term::Compound(f, a) => Some((f, a.len())),
            Term::Var(_) => None,
        }
    }

    pub fn functor(&self) -> Option<&str> {
        self.key().map(|k| k.0)
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, a) => a,
            _ => &[],
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Const(_) => true,
            Term::Var(_) => false,
            Term::Compound(_, a) => a.iter().all(Term::is_ground),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Compound(_, a) => a.iter().for_each(|t| t.collect_vars(out)),
            Term::Const(_) => {}
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut v = Vec::new();
        self.collect_vars(&mut v);
        v
    }

    /// True if `f` occurs as a functor or constant anywhere in the term.
    pub fn mentions(&self, f: &str) -> bool {
        match self {
            Term::Const(c) => c == f,
            Term::Var(_) => false,
            Term::Compound(g, a) => g == f || a.iter().any(|t| t.mentions(f)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => write!(f, "?{v}"),
            Term::Compound(g, a) => {
                write!(f, "({g}")?;
                for t in a {
                    write!(f, " {t}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexpr {
    Atom(String, usize),
    List(Vec<Sexpr>, usize),
}

impl Sexpr {
    pub fn line(&self) -> usize {
        match self {
            Sexpr::Atom(_, l) | Sexpr::List(_, l) => *l,
        }
    }
}

/// Reads every top level expression. Symbols are lower-cased.
pub fn read_sexprs(text: &str) -> Result<Vec<Sexpr>> {
    let mut stack: Vec<(Vec<Sexpr>, usize)> = Vec::new();
    let mut out = Vec::new();
    let mut line = 1;
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            ';' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                stack.push((Vec::new(), line));
                chars.next();
            }
            ')' => {
                chars.next();
                let (items, l) = stack.pop().ok_or(Error::Parse {
                    line,
                    msg: "unbalanced ')'".into(),
                })?;
                let e = Sexpr::List(items, l);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(e),
                    None => out.push(e),
                }
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let start = i;
                let mut end = text.len();
                while let Some(&(j, c)) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        end = j;
                        break;
                    }
                    chars.next();
                }
                let e = Sexpr::Atom(text[start..end].to_lowercase(), line);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(e),
                    None => out.push(e),
                }
            }
        }
    }
    if let Some((_, l)) = stack.last() {
        return Err(Error::Parse {
            line: *l,
            msg: "unbalanced '(' opened here".into(),
        });
    }
    Ok(out)
}

pub fn sexpr_to_term(e: &Sexpr) -> Result<Term> {
    match e {
        Sexpr::Atom(a, l) => {
            if let Some(v) = a.strip_prefix('?') {
                if v.is_empty() {
                    return Err(Error::Parse {
                        line: *l,
                        msg: "empty variable name".into(),
                    });
                }
                Ok(Term::Var(v.to_string()))
            } else {
                Ok(Term::Const(a.clone()))
            }
        }
        Sexpr::List(items, l) => {
            let (head, rest) = items.split_first().ok_or(Error::Parse {
                line: *l,
                msg: "empty list".into(),
            })?;
            let f = match head {
                Sexpr::Atom(a, _) if !a.starts_with('?') => a.clone(),
                _ => {
                    return Err(Error::Parse {
                        line: *l,
                        msg: "list must start with a functor symbol".into(),
                    })
                }
            };
            let args = rest.iter().map(sexpr_to_term).collect::<Result<Vec<_>>>()?;
            Ok(Term::compound(&f, args))
        }
    }
}

/// Parses a single term such as `(cell 1 1 b)`.
pub fn parse_term(text: &str) -> Result<Term> {
    let es = read_sexprs(text)?;
    match es.as_slice() {
        [e] => sexpr_to_term(e),
        _ => Err(Error::Parse {
            line: 1,
            msg: format!("expected one term, found {}", es.len()),
        }),
    }
}
