//! Typed rule sheets parsed from KIF.

use std::collections::BTreeMap;
use std::fmt;

use crate::board::{parse_board_extension, BoardSpec, EXTENSION_RELATIONS};
use crate::error::{Error, Result};
use crate::term::{read_sexprs, sexpr_to_term, Sexpr, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal {
    pub negated: bool,
    pub kind: LitKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LitKind {
    Atom(Term),
    Distinct(Term, Term),
    Or(Vec<Literal>),
}

impl Literal {
    pub fn pos(t: Term) -> Literal {
        Literal {
            negated: false,
            kind: LitKind::Atom(t),
        }
    }

    pub fn neg(t: Term) -> Literal {
        Literal {
            negated: true,
            kind: LitKind::Atom(t),
        }
    }

    pub fn is_distinct(&self) -> bool {
        matches!(self.kind, LitKind::Distinct(..))
    }

    pub fn mentions(&self, f: &str) -> bool {
        match &self.kind {
            LitKind::Atom(t) => t.mentions(f),
            LitKind::Distinct(a, b) => a.mentions(f) || b.mentions(f),
            LitKind::Or(ls) => ls.iter().any(|l| l.mentions(f)),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match &self.kind {
            LitKind::Atom(t) => t.collect_vars(out),
            LitKind::Distinct(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            LitKind::Or(ls) => ls.iter().for_each(|l| l.collect_vars(out)),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "(not ")?;
        }
        match &self.kind {
            LitKind::Atom(t) => write!(f, "{t}")?,
            LitKind::Distinct(a, b) => write!(f, "(distinct {a} {b})")?,
            LitKind::Or(ls) => {
                write!(f, "(or")?;
                for l in ls {
                    write!(f, " {l}")?;
                }
                write!(f, ")")?;
            }
        }
        if self.negated {
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub head: Term,
    pub body: Vec<Literal>,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(<= {}", self.head)?;
        for l in &self.body {
            write!(f, " {l}")?;
        }
        write!(f, ")")
    }
}

impl Rule {
    /// Conjunctive bodies after splitting `or` literals. Negated `or` is
    /// rewritten with De Morgan first.
    pub fn split_or(&self) -> Result<Vec<Vec<Literal>>> {
        let mut bodies: Vec<Vec<Literal>> = vec![Vec::new()];
        for lit in &self.body {
            let alts = literal_alternatives(lit);
            if alts.len() == 1 {
                for b in &mut bodies {
                    b.extend(alts[0].iter().cloned());
                }
                continue;
            }
            let mut next = Vec::with_capacity(bodies.len() * alts.len());
            for b in &bodies {
                for a in &alts {
                    let mut nb = b.clone();
                    nb.extend(a.iter().cloned());
                    next.push(nb);
                }
            }
            if next.len() > 4096 {
                return Err(Error::Unsupported(format!(
                    "or-splitting of {self} yields more than 4096 rules"
                )));
            }
            bodies = next;
        }
        Ok(bodies)
    }
}

/// Each alternative is a conjunction of plain literals.
fn literal_alternatives(lit: &Literal) -> Vec<Vec<Literal>> {
    match (&lit.kind, lit.negated) {
        (LitKind::Or(ls), false) => ls.iter().flat_map(literal_alternatives).collect(),
        (LitKind::Or(ls), true) => {
            // not (a or b) = (not a) and (not b)
            let mut acc: Vec<Vec<Literal>> = vec![Vec::new()];
            for l in ls {
                let flipped = Literal {
                    negated: !l.negated,
                    kind: l.kind.clone(),
                };
                let alts = literal_alternatives(&flipped);
                let mut next = Vec::new();
                for a in &acc {
                    for b in &alts {
                        let mut c = a.clone();
                        c.extend(b.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
        _ => vec![vec![lit.clone()]],
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RuleSheet {
    pub roles: Vec<String>,
    pub static_facts: Vec<Term>,
    /// Inner sentences of `(init ...)`.
    pub init_facts: Vec<Term>,
    pub rules: Vec<Rule>,
    /// Ground board extension sentences as written.
    pub extension: Vec<Term>,
    pub board: Option<BoardSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RelClass {
    Static,
    Dynamic,
    Rule,
}

const RESERVED_FACT_HEADS: [&str; 3] = ["true", "does", "distinct"];
const RULE_ONLY_HEADS: [&str; 4] = ["legal", "goal", "terminal", "next"];

pub fn parse_kif(text: &str) -> Result<RuleSheet> {
    let mut sheet = RuleSheet::default();
    for e in read_sexprs(text)? {
        classify(&mut sheet, &e)?;
    }
    sheet.check_safety()?;
    sheet.classification()?;
    sheet.board = parse_board_extension(&sheet)?;
    Ok(sheet)
}

fn classify(sheet: &mut RuleSheet, e: &Sexpr) -> Result<()> {
    let line = e.line();
    if let Sexpr::List(items, _) = e {
        if let Some(Sexpr::Atom(h, _)) = items.first() {
            if h == "<=" {
                let head = items.get(1).ok_or(Error::Parse {
                    line,
                    msg: "rule without head".into(),
                })?;
                let head = sexpr_to_term(head)?;
                if head.key().is_none() {
                    return Err(Error::Parse {
                        line,
                        msg: "rule head is a variable".into(),
                    });
                }
                let body = items[2..]
                    .iter()
                    .map(parse_literal)
                    .collect::<Result<Vec<_>>>()?;
                sheet.rules.push(Rule { head, body });
                return Ok(());
            }
        }
    }
    let t = sexpr_to_term(e)?;
    let (f, n) = t.key().ok_or(Error::Parse {
        line,
        msg: "top level variable".into(),
    })?;
    match (f, n) {
        ("role", 1) => match &t.args()[0] {
            Term::Const(r) => sheet.roles.push(r.clone()),
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: "role must be a constant".into(),
                })
            }
        },
        ("init", 1) => {
            let inner = t.args()[0].clone();
            if !inner.is_ground() || inner.key().is_none() {
                return Err(Error::Parse {
                    line,
                    msg: "init fact must be ground".into(),
                });
            }
            sheet.init_facts.push(inner);
        }
        _ if EXTENSION_RELATIONS.contains(&f) => sheet.extension.push(t),
        _ if RESERVED_FACT_HEADS.contains(&f) => {
            return Err(Error::Parse {
                line,
                msg: format!("{f} cannot be stated as a fact"),
            })
        }
        _ if RULE_ONLY_HEADS.contains(&f) => sheet.rules.push(Rule {
            head: t,
            body: Vec::new(),
        }),
        _ => {
            if !t.is_ground() {
                return Err(Error::Parse {
                    line,
                    msg: format!("fact {t} is not ground"),
                });
            }
            sheet.static_facts.push(t);
        }
    }
    Ok(())
}

fn parse_literal(e: &Sexpr) -> Result<Literal> {
    if let Sexpr::List(items, l) = e {
        if let Some(Sexpr::Atom(h, _)) = items.first() {
            let line = *l;
            match h.as_str() {
                "not" => {
                    if items.len() != 2 {
                        return Err(Error::Parse {
                            line,
                            msg: "not takes one argument".into(),
                        });
                    }
                    let mut inner = parse_literal(&items[1])?;
                    inner.negated = !inner.negated;
                    return Ok(inner);
                }
                "or" => {
                    let ls = items[1..]
                        .iter()
                        .map(parse_literal)
                        .collect::<Result<Vec<_>>>()?;
                    if ls.is_empty() {
                        return Err(Error::Parse {
                            line,
                            msg: "empty or".into(),
                        });
                    }
                    return Ok(Literal {
                        negated: false,
                        kind: LitKind::Or(ls),
                    });
                }
                "distinct" => {
                    if items.len() != 3 {
                        return Err(Error::Parse {
                            line,
                            msg: "distinct takes two arguments".into(),
                        });
                    }
                    return Ok(Literal {
                        negated: false,
                        kind: LitKind::Distinct(
                            sexpr_to_term(&items[1])?,
                            sexpr_to_term(&items[2])?,
                        ),
                    });
                }
                _ => {}
            }
        }
    }
    let t = sexpr_to_term(e)?;
    if t.key().is_none() {
        return Err(Error::Parse {
            line: e.line(),
            msg: "variable used as a literal".into(),
        });
    }
    Ok(Literal::pos(t))
}

/// Variables bound by positive atoms of a conjunctive body.
pub fn positive_vars(body: &[Literal]) -> Vec<String> {
    let mut out = Vec::new();
    for l in body {
        if let (false, LitKind::Atom(t)) = (l.negated, &l.kind) {
            t.collect_vars(&mut out);
        }
    }
    out
}

impl RuleSheet {
    fn check_safety(&self) -> Result<()> {
        for r in &self.rules {
            for body in r.split_or()? {
                let bound = positive_vars(&body);
                let mut need = r.head.vars();
                for l in body.iter().filter(|l| l.negated || l.is_distinct()) {
                    l.collect_vars(&mut need);
                }
                if let Some(v) = need.into_iter().find(|v| !bound.contains(v)) {
                    return Err(Error::Unsafe {
                        var: v,
                        rule: r.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Classifies every functor/arity pair. Fails when a pair lands in two classes.
    pub fn classification(&self) -> Result<BTreeMap<(String, usize), RelClass>> {
        let mut m: BTreeMap<(String, usize), RelClass> = BTreeMap::new();
        let mut put = |t: &Term, c: RelClass| -> Result<()> {
            let Some((f, n)) = t.key() else {
                return Err(Error::Unsupported(format!(
                    "variable in relation position: {t}"
                )));
            };
            let k = (f.to_string(), n);
            match m.get(&k) {
                Some(&old) if old != c => Err(Error::Classification(format!("{f}/{n}"))),
                _ => {
                    m.insert(k, c);
                    Ok(())
                }
            }
        };
        for f in &self.static_facts {
            put(f, RelClass::Static)?;
        }
        for r in &self.roles {
            put(&Term::compound("role", vec![Term::Const(r.clone())]), RelClass::Static)?;
        }
        for f in &self.init_facts {
            put(f, RelClass::Dynamic)?;
        }
        for r in &self.rules {
            if r.head.functor() == Some("next") && r.head.args().len() == 1 {
                put(&r.head.args()[0], RelClass::Dynamic)?;
            } else {
                put(&r.head, RelClass::Rule)?;
            }
            for body in r.split_or()? {
                for l in &body {
                    if let LitKind::Atom(t) = &l.kind {
                        if t.functor() == Some("true") && t.args().len() == 1 {
                            put(&t.args()[0], RelClass::Dynamic)?;
                        }
                    }
                }
            }
        }
        Ok(m)
    }
}

impl fmt::Display for RuleSheet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.roles {
            writeln!(f, "(role {r})")?;
        }
        for t in &self.extension {
            writeln!(f, "{t}")?;
        }
        for t in &self.static_facts {
            writeln!(f, "{t}")?;
        }
        for t in &self.init_facts {
            writeln!(f, "(init {t})")?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_sheet() {
        let s = parse_kif("(role xplayer)").unwrap();
        assert_eq!(s.roles, vec!["xplayer"]);
        assert!(s.rules.is_empty() && s.static_facts.is_empty());
    }

    #[test]
    fn legal_rule_keeps_order() {
        let s = parse_kif(
            "(<= (legal xPlayer (play ?i ?j x)) (true (control xPlayer)) (emptyCell ?i ?j))",
        )
        .unwrap();
        let r = &s.rules[0];
        assert_eq!(r.head.key(), Some(("legal", 2)));
        assert_eq!(r.body.len(), 2);
        assert_eq!(r.body[0].to_string(), "(true (control xplayer))");
        assert_eq!(r.body[1].to_string(), "(emptycell ?i ?j)");
    }

    #[test]
    fn addition_fact() {
        let s = parse_kif("(++ 1 0 1)").unwrap();
        assert_eq!(s.static_facts.len(), 1);
        assert_eq!(s.static_facts[0].key(), Some(("++", 3)));
    }

    #[test]
    fn unsafe_rule_rejected() {
        let e = parse_kif("(<= (p ?x) (not (q ?x)))").unwrap_err();
        assert!(matches!(e, Error::Unsafe { .. }));
        assert!(parse_kif("(<= (p ?x) (q ?y))").is_err());
    }

    #[test]
    fn duplicate_class_rejected() {
        let e = parse_kif("(foo a) (<= (foo ?x) (bar ?x)) (bar b)").unwrap_err();
        assert_eq!(e, Error::Classification("foo/1".into()));
        let e = parse_kif("(init (foo a)) (foo b)").unwrap_err();
        assert!(matches!(e, Error::Classification(_)));
    }

    #[test]
    fn or_split_de_morgan() {
        let s = parse_kif("(<= (h ?x) (p ?x) (not (or (q ?x) (r ?x))))").unwrap();
        let b = s.rules[0].split_or().unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].len(), 3);
        let s = parse_kif("(<= (h ?x) (or (p ?x) (q ?x)))").unwrap();
        assert_eq!(s.rules[0].split_or().unwrap().len(), 2);
    }

    #[test]
    fn or_branch_safety() {
        assert!(parse_kif("(<= (h ?x) (or (p ?x) (q a)))").is_err());
    }
}
