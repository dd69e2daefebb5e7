//! mGDL conformance checking and normalization into flat relations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::rulesheet::{LitKind, Literal, RuleSheet};
use crate::term::Term;

/// Rule heads whose bodies are not checked for conformance.
pub const CONFORMANCE_EXCLUDED: [&str; 6] = ["terminal", "goal", "legal", "next", "init", "base"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Conforming,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub rule: usize,
    pub literal: Term,
    pub head: Term,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConformanceResult {
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
}

type Subst = HashMap<String, Term>;

fn walk<'a>(t: &'a Term, s: &'a Subst) -> &'a Term {
    let mut t = t;
    while let Term::Var(v) = t {
        match s.get(v) {
            Some(b) => t = b,
            None => break,
        }
    }
    t
}

pub(crate) fn unify(a: &Term, b: &Term, s: &mut Subst) -> bool {
    let (a, b) = (walk(a, s).clone(), walk(b, s).clone());
    match (&a, &b) {
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), _) => {
            s.insert(x.clone(), b);
            true
        }
        (_, Term::Var(y)) => {
            s.insert(y.clone(), a);
            true
        }
        (Term::Const(x), Term::Const(y)) => x == y,
        (Term::Compound(f, xs), Term::Compound(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| unify(x, y, s))
        }
        _ => false,
    }
}

fn rename(t: &Term, suffix: &str) -> Term {
    match t {
        Term::Var(v) => Term::Var(format!("{v}{suffix}")),
        Term::Const(_) => t.clone(),
        Term::Compound(f, a) => Term::Compound(f.clone(), a.iter().map(|x| rename(x, suffix)).collect()),
    }
}

fn body_atoms<'a>(ls: &'a [Literal], out: &mut Vec<&'a Term>) {
    for l in ls {
        match &l.kind {
            LitKind::Atom(t) => out.push(t),
            LitKind::Or(inner) => body_atoms(inner, out),
            LitKind::Distinct(..) => {}
        }
    }
}

/// Basic conformance check. Only rule heads are unification targets.
pub fn check_conformance(sheet: &RuleSheet) -> ConformanceResult {
    let mut witnesses = Vec::new();
    for (ri, r) in sheet.rules.iter().enumerate() {
        if r.head.functor().is_some_and(|f| CONFORMANCE_EXCLUDED.contains(&f)) {
            continue;
        }
        let mut atoms = Vec::new();
        body_atoms(&r.body, &mut atoms);
        for lit in atoms {
            if matches!(lit.functor(), Some("true" | "does")) {
                continue;
            }
            for r2 in &sheet.rules {
                let head = rename(&r2.head, "#2");
                let mut s = Subst::new();
                if !unify(lit, &head, &mut s) {
                    continue;
                }
                let mut vars = lit.vars();
                head.collect_vars(&mut vars);
                let binds_complex = vars
                    .iter()
                    .any(|v| matches!(walk(&Term::Var(v.clone()), &s), Term::Compound(..)));
                if binds_complex {
                    witnesses.push(Witness {
                        rule: ri,
                        literal: lit.clone(),
                        head: r2.head.clone(),
                    });
                }
            }
        }
    }
    ConformanceResult {
        verdict: if witnesses.is_empty() {
            Verdict::Conforming
        } else {
            Verdict::Inconclusive
        },
        witnesses,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MangledName {
    pub name: String,
    pub flat_arity: usize,
}

fn mangle_args(args: &[Term], name: &mut String, flat: &mut Vec<Term>) {
    for a in args {
        match a {
            Term::Compound(f, inner) => {
                name.push_str("_LPAR_");
                name.push_str(f);
                mangle_args(inner, name, flat);
                name.push_str("_RPAR");
            }
            _ => {
                name.push_str("_ARG");
                flat.push(a.clone());
            }
        }
    }
}

pub fn mangle(sentence: &Term) -> (MangledName, Vec<Term>) {
    let (f, args) = match sentence {
        Term::Compound(f, a) => (f.as_str(), a.as_slice()),
        Term::Const(c) => (c.as_str(), &[][..]),
        Term::Var(v) => (v.as_str(), &[][..]),
    };
    let mut name = f.to_string();
    let mut flat = Vec::new();
    mangle_args(args, &mut name, &mut flat);
    (
        MangledName {
            name,
            flat_arity: flat.len(),
        },
        flat,
    )
}

/// Rebuilds a sentence from a mangled name and its flat arguments.
pub fn unmangle(name: &str, flat: &[Term]) -> Option<Term> {
    let cut = [name.find("_ARG"), name.find("_LPAR_")]
        .into_iter()
        .flatten()
        .min()
        .unwrap_or(name.len());
    let (functor, mut rest) = name.split_at(cut);
    let mut flat = flat.iter();
    // stack of (functor, args)
    let mut stack: Vec<(String, Vec<Term>)> = vec![(functor.to_string(), Vec::new())];
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix("_ARG") {
            stack.last_mut()?.1.push(flat.next()?.clone());
            rest = r;
        } else if let Some(r) = rest.strip_prefix("_LPAR_") {
            let end = [r.find("_ARG"), r.find("_LPAR_"), r.find("_RPAR")]
                .into_iter()
                .flatten()
                .min()
                .unwrap_or(r.len());
            stack.push((r[..end].to_string(), Vec::new()));
            rest = &r[end..];
        } else if let Some(r) = rest.strip_prefix("_RPAR") {
            let (f, a) = stack.pop()?;
            stack.last_mut()?.1.push(Term::compound(&f, a));
            rest = r;
        } else {
            return None;
        }
    }
    if stack.len() != 1 || flat.next().is_some() {
        return None;
    }
    let (f, a) = stack.pop()?;
    Some(Term::compound(&f, a))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FArg {
    Var(String),
    Const(String),
}

impl fmt::Display for FArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FArg::Var(v) => write!(f, "?{v}"),
            FArg::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FAtom {
    pub rel: String,
    pub args: Vec<FArg>,
}

impl fmt::Display for FAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.rel)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FLit {
    Pos(FAtom),
    Neg(FAtom),
    Distinct { a: FArg, b: FArg, negated: bool },
}

impl fmt::Display for FLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FLit::Pos(a) => write!(f, "{a}"),
            FLit::Neg(a) => write!(f, "not {a}"),
            FLit::Distinct { a, b, negated } => {
                write!(f, "{}distinct({a},{b})", if *negated { "not " } else { "" })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FRule {
    pub head: FAtom,
    pub body: Vec<FLit>,
}

impl fmt::Display for FRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <=", self.head)?;
        for (i, l) in self.body.iter().enumerate() {
            write!(f, "{}{l}", if i == 0 { " " } else { ", " })?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FlatClass {
    Static,
    Dynamic,
    /// Transient `does` relations, one per move shape.
    Does,
    Rule,
}

/// A rule sheet after true-stripping, or-splitting and flattening.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalSheet {
    pub roles: Vec<String>,
    pub static_facts: Vec<FAtom>,
    pub init_facts: Vec<FAtom>,
    pub rules: Vec<FRule>,
    pub classes: BTreeMap<String, FlatClass>,
    pub arities: BTreeMap<String, usize>,
    /// `next_LPAR_<x>_RPAR` rule relation to the dynamic relation it feeds.
    pub next_targets: BTreeMap<String, String>,
}

fn to_farg(t: &Term) -> Result<FArg> {
    match t {
        Term::Var(v) => Ok(FArg::Var(v.clone())),
        Term::Const(c) => Ok(FArg::Const(c.clone())),
        Term::Compound(..) => Err(Error::Unsupported(format!(
            "compound term {t} where a flat argument is required"
        ))),
    }
}

fn flat_atom(t: &Term) -> Result<FAtom> {
    if let Term::Var(v) = t {
        return Err(Error::Unsupported(format!("variable ?{v} used as a sentence")));
    }
    let (m, args) = mangle(t);
    Ok(FAtom {
        rel: m.name,
        args: args.iter().map(to_farg).collect::<Result<_>>()?,
    })
}

fn wrapped_inner(t: &Term, wrapper: &str) -> Option<Term> {
    match t {
        Term::Compound(f, a) if f == wrapper && a.len() == 1 => Some(a[0].clone()),
        _ => None,
    }
}

struct Builder {
    classes: BTreeMap<String, FlatClass>,
    arities: BTreeMap<String, usize>,
}

impl Builder {
    fn note(&mut self, a: &FAtom, c: FlatClass) -> Result<()> {
        if let Some(&n) = self.arities.get(&a.rel) {
            if n != a.args.len() {
                return Err(Error::Compile(format!("arity clash on {}", a.rel)));
            }
        }
        self.arities.insert(a.rel.clone(), a.args.len());
        match self.classes.get(&a.rel) {
            Some(&old) if old != c => Err(Error::Classification(a.rel.clone())),
            _ => {
                self.classes.insert(a.rel.clone(), c);
                Ok(())
            }
        }
    }

    fn literal(&mut self, l: &Literal) -> Result<FLit> {
        match &l.kind {
            LitKind::Distinct(a, b) => Ok(FLit::Distinct {
                a: to_farg(a)?,
                b: to_farg(b)?,
                negated: l.negated,
            }),
            LitKind::Or(_) => unreachable!("or removed by split"),
            LitKind::Atom(t) => {
                let atom = if let Some(inner) = wrapped_inner(t, "true") {
                    let a = flat_atom(&inner)?;
                    self.note(&a, FlatClass::Dynamic)?;
                    a
                } else if t.functor() == Some("does") {
                    let a = flat_atom(t)?;
                    self.note(&a, FlatClass::Does)?;
                    a
                } else {
                    let a = flat_atom(t)?;
                    if let Some(&n) = self.arities.get(&a.rel) {
                        if n != a.args.len() {
                            return Err(Error::Compile(format!("arity clash on {}", a.rel)));
                        }
                    }
                    a
                };
                Ok(if l.negated {
                    FLit::Neg(atom)
                } else {
                    FLit::Pos(atom)
                })
            }
        }
    }
}

pub fn normalize(sheet: &RuleSheet) -> Result<NormalSheet> {
    let mut b = Builder {
        classes: BTreeMap::new(),
        arities: BTreeMap::new(),
    };
    let mut static_facts = Vec::new();
    for r in &sheet.roles {
        static_facts.push(FAtom {
            rel: "role_ARG".into(),
            args: vec![FArg::Const(r.clone())],
        });
    }
    for t in &sheet.static_facts {
        static_facts.push(flat_atom(t)?);
    }
    for a in &static_facts {
        b.note(a, FlatClass::Static)?;
    }
    let mut init_facts = Vec::new();
    for t in &sheet.init_facts {
        let a = flat_atom(t)?;
        b.note(&a, FlatClass::Dynamic)?;
        init_facts.push(a);
    }
    let mut next_targets = BTreeMap::new();
    let mut rules = Vec::new();
    for r in &sheet.rules {
        let head = if let Some(inner) = wrapped_inner(&r.head, "next") {
            if matches!(inner, Term::Var(_)) {
                return Err(Error::Unsupported(format!("variable next head in {r}")));
            }
            let target = flat_atom(&inner)?;
            b.note(&target, FlatClass::Dynamic)?;
            let rel = format!("next_LPAR_{}_RPAR", target.rel);
            next_targets.insert(rel.clone(), target.rel.clone());
            FAtom {
                rel,
                args: target.args,
            }
        } else {
            flat_atom(&r.head)?
        };
        b.note(&head, FlatClass::Rule)?;
        for body in r.split_or()? {
            let body = body.iter().map(|l| b.literal(l)).collect::<Result<Vec<_>>>()?;
            rules.push(FRule {
                head: head.clone(),
                body,
            });
        }
    }
    Ok(NormalSheet {
        roles: sheet.roles.clone(),
        static_facts,
        init_facts,
        rules,
        classes: b.classes,
        arities: b.arities,
        next_targets,
    })
}

impl NormalSheet {
    /// Legal relations, one per move shape, in name order.
    pub fn legal_relations(&self) -> Vec<&str> {
        self.rule_relations("legal_ARG")
    }

    pub fn goal_relations(&self) -> Vec<&str> {
        self.rule_relations("goal_ARG")
    }

    fn rule_relations(&self, prefix: &str) -> Vec<&str> {
        self.classes
            .iter()
            .filter(|(k, c)| **c == FlatClass::Rule && k.starts_with(prefix))
            .filter(|(k, _)| {
                let rest = &k[prefix.len()..];
                rest.is_empty() || rest.starts_with('_')
            })
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulesheet::parse_kif;
    use crate::term::parse_term;

    fn names(t: &str) -> (String, Vec<String>) {
        let (m, a) = mangle(&parse_term(t).unwrap());
        assert_eq!(m.flat_arity, a.len());
        (m.name, a.iter().map(|x| x.to_string()).collect())
    }

    #[test]
    fn mangle_examples() {
        assert_eq!(
            names("(legal ?player (move ?x ?y ?piece))"),
            (
                "legal_ARG_LPAR_move_ARG_ARG_ARG_RPAR".to_string(),
                vec!["?player".into(), "?x".into(), "?y".into(), "?piece".into()]
            )
        );
        assert_eq!(names("noop"), ("noop".to_string(), vec![]));
        assert_eq!(
            names("(next (cell ?x ?y b))"),
            (
                "next_LPAR_cell_ARG_ARG_ARG_RPAR".to_string(),
                vec!["?x".into(), "?y".into(), "b".into()]
            )
        );
    }

    #[test]
    fn unmangle_inverts() {
        for s in ["(legal p (move 1 2 x))", "noop", "(f (g (h a) b) (k c))", "(a_b (c_d e))"] {
            let t = parse_term(s).unwrap();
            let (m, a) = mangle(&t);
            assert_eq!(unmangle(&m.name, &a), Some(t));
        }
    }

    #[test]
    fn conformance_witness() {
        let s = parse_kif("(<= (foo (bar a))) (<= (baz ?x) (foo ?x))").unwrap();
        let r = check_conformance(&s);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.witnesses.len(), 1);
        assert_eq!(r.witnesses[0].rule, 1);
        assert_eq!(r.witnesses[0].literal.to_string(), "(foo ?x)");
        assert_eq!(r.witnesses[0].head.to_string(), "(foo (bar a))");
        let s = parse_kif("(<= (foo a)) (<= (baz ?x) (foo ?x))").unwrap();
        let r = check_conformance(&s);
        assert_eq!(r.verdict, Verdict::Conforming);
        assert!(r.witnesses.is_empty());
    }

    #[test]
    fn normalize_strips_true() {
        let s = parse_kif("(role xplayer) (init (control xplayer)) (<= (p ?x) (true (control ?x)))").unwrap();
        let n = normalize(&s).unwrap();
        assert_eq!(n.rules[0].body[0], FLit::Pos(FAtom {
            rel: "control_ARG".into(),
            args: vec![FArg::Var("x".into())]
        }));
        assert_eq!(n.classes["control_ARG"], FlatClass::Dynamic);
    }

    #[test]
    fn normalize_splits_or() {
        let s = parse_kif("(p a) (q b) (<= (h ?x) (or (p ?x) (q ?x)))").unwrap();
        let n = normalize(&s).unwrap();
        assert_eq!(n.rules.len(), 2);
        assert_eq!(n.rules[0].to_string(), "h_ARG(?x) <= p_ARG(?x)");
        assert_eq!(n.rules[1].to_string(), "h_ARG(?x) <= q_ARG(?x)");
    }

    #[test]
    fn normalize_flattens_legal_head() {
        let s = parse_kif(
            "(role xplayer) (init (control xplayer)) (e 1 1) \
             (<= (legal xPlayer (play ?i ?j x)) (true (control xPlayer)) (e ?i ?j))",
        )
        .unwrap();
        let n = normalize(&s).unwrap();
        let h = &n.rules[0].head;
        assert_eq!(h.rel, "legal_ARG_LPAR_play_ARG_ARG_ARG_RPAR");
        assert_eq!(h.args.len(), 4);
        assert_eq!(h.args[3], FArg::Const("x".into()));
        assert_eq!(n.legal_relations(), vec!["legal_ARG_LPAR_play_ARG_ARG_ARG_RPAR"]);
    }

    #[test]
    fn propositional_next() {
        let s = parse_kif("(role r) (<= (next step1) (true step0)) (init step0)").unwrap();
        let n = normalize(&s).unwrap();
        assert_eq!(n.next_targets["next_LPAR_step1_RPAR"], "step1");
        assert_eq!(n.classes["step0"], FlatClass::Dynamic);
    }
}
