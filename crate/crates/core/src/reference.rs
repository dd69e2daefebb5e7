//! Slow term-level interpreter used as a test oracle. Works directly on a
//! rule sheet with full unification.

use std::cell::Cell;
use std::collections::{BTreeSet, HashMap};

use crate::mgdl::{unify, FArg, FAtom, FLit, FlatClass, NormalSheet};
use crate::rulesheet::{LitKind, Literal, Rule, RuleSheet};
use crate::term::Term;

type Subst = HashMap<String, Term>;

pub fn substitute(t: &Term, s: &Subst) -> Term {
    match t {
        Term::Var(v) => match s.get(v) {
            Some(b) => substitute(b, s),
            None => t.clone(),
        },
        Term::Const(_) => t.clone(),
        Term::Compound(f, a) => Term::Compound(f.clone(), a.iter().map(|x| substitute(x, s)).collect()),
    }
}

fn rename_term(t: &Term, n: u64) -> Term {
    match t {
        Term::Var(v) => Term::Var(format!("{v}#{n}")),
        Term::Const(_) => t.clone(),
        Term::Compound(f, a) => Term::Compound(f.clone(), a.iter().map(|x| rename_term(x, n)).collect()),
    }
}

fn rename_lit(l: &Literal, n: u64) -> Literal {
    Literal {
        negated: l.negated,
        kind: match &l.kind {
            LitKind::Atom(t) => LitKind::Atom(rename_term(t, n)),
            LitKind::Distinct(a, b) => LitKind::Distinct(rename_term(a, n), rename_term(b, n)),
            LitKind::Or(ls) => LitKind::Or(ls.iter().map(|x| rename_lit(x, n)).collect()),
        },
    }
}

fn lit_ground(l: &Literal, s: &Subst) -> bool {
    match &l.kind {
        LitKind::Atom(t) => substitute(t, s).is_ground(),
        LitKind::Distinct(a, b) => substitute(a, s).is_ground() && substitute(b, s).is_ground(),
        LitKind::Or(ls) => ls.iter().all(|x| lit_ground(x, s)),
    }
}

pub struct Reference {
    rules: HashMap<(String, usize), Vec<Rule>>,
    facts: HashMap<(String, usize), Vec<Term>>,
    pub roles: Vec<String>,
    pub init: BTreeSet<Term>,
    counter: Cell<u64>,
}

struct Env<'a> {
    state: &'a BTreeSet<Term>,
    does: &'a [Term],
}

impl Reference {
    pub fn new(sheet: &RuleSheet) -> Reference {
        let mut rules: HashMap<(String, usize), Vec<Rule>> = HashMap::new();
        for r in &sheet.rules {
            let (f, n) = r.head.key().expect("rule head");
            rules.entry((f.to_string(), n)).or_default().push(r.clone());
        }
        let mut facts: HashMap<(String, usize), Vec<Term>> = HashMap::new();
        for t in &sheet.static_facts {
            let (f, n) = t.key().expect("fact");
            facts.entry((f.to_string(), n)).or_default().push(t.clone());
        }
        for r in &sheet.roles {
            facts
                .entry(("role".into(), 1))
                .or_default()
                .push(Term::compound("role", vec![Term::Const(r.clone())]));
        }
        Reference {
            rules,
            facts,
            roles: sheet.roles.clone(),
            init: sheet.init_facts.iter().cloned().collect(),
            counter: Cell::new(0),
        }
    }

    /// Ground instances of `q` provable in the state with the given `does` terms.
    pub fn ask(&self, state: &BTreeSet<Term>, does: &[Term], q: &Term) -> BTreeSet<Term> {
        let env = Env { state, does };
        let mut out = BTreeSet::new();
        self.solve(&[Literal::pos(q.clone())], Subst::new(), &env, &mut |s| {
            out.insert(substitute(q, s));
            true
        });
        out
    }

    pub fn holds(&self, state: &BTreeSet<Term>, does: &[Term], q: &Term) -> bool {
        let env = Env { state, does };
        let mut found = false;
        self.solve(&[Literal::pos(q.clone())], Subst::new(), &env, &mut |_| {
            found = true;
            false
        });
        found
    }

    pub fn legal(&self, state: &BTreeSet<Term>, role: &str) -> BTreeSet<Term> {
        let q = Term::compound("legal", vec![Term::constant(role), Term::var("m")]);
        self.ask(state, &[], &q).into_iter().map(|t| t.args()[1].clone()).collect()
    }

    pub fn next(&self, state: &BTreeSet<Term>, moves: &[(String, Term)]) -> BTreeSet<Term> {
        let does: Vec<Term> = moves
            .iter()
            .map(|(r, m)| Term::compound("does", vec![Term::Const(r.clone()), m.clone()]))
            .collect();
        let q = Term::compound("next", vec![Term::var("x")]);
        self.ask(state, &does, &q).into_iter().map(|t| t.args()[0].clone()).collect()
    }

    pub fn terminal(&self, state: &BTreeSet<Term>) -> bool {
        self.holds(state, &[], &Term::constant("terminal"))
    }

    pub fn goal(&self, state: &BTreeSet<Term>, role: &str) -> u32 {
        let q = Term::compound("goal", vec![Term::constant(role), Term::var("v")]);
        self.ask(state, &[], &q)
            .iter()
            .filter_map(|t| match &t.args()[1] {
                Term::Const(c) => c.parse::<f64>().ok(),
                _ => None,
            })
            .fold(0.0f64, f64::max) as u32
    }

    fn solve(&self, goals: &[Literal], s: Subst, env: &Env, k: &mut dyn FnMut(&Subst) -> bool) -> bool {
        if goals.is_empty() {
            return k(&s);
        }
        let pick = goals
            .iter()
            .position(|l| (!l.negated && !l.is_distinct()) || lit_ground(l, &s))
            .expect("unsafe rule body");
        let lit = &goals[pick];
        let mut rest: Vec<Literal> = goals.to_vec();
        rest.remove(pick);
        match (&lit.kind, lit.negated) {
            (LitKind::Distinct(a, b), neg) => {
                if (substitute(a, &s) != substitute(b, &s)) != neg {
                    self.solve(&rest, s, env, k)
                } else {
                    true
                }
            }
            (LitKind::Or(ls), false) => {
                for l in ls {
                    let mut g = vec![l.clone()];
                    g.extend(rest.iter().cloned());
                    if !self.solve(&g, s.clone(), env, k) {
                        return false;
                    }
                }
                true
            }
            (LitKind::Or(ls), true) => {
                let any = ls.iter().any(|l| self.provable(l, &s, env));
                if any {
                    true
                } else {
                    self.solve(&rest, s, env, k)
                }
            }
            (LitKind::Atom(t), true) => {
                if self.provable(&Literal::pos(t.clone()), &s, env) {
                    true
                } else {
                    self.solve(&rest, s, env, k)
                }
            }
            (LitKind::Atom(t), false) => self.solve_atom(t, &rest, s, env, k),
        }
    }

    fn provable(&self, l: &Literal, s: &Subst, env: &Env) -> bool {
        let mut found = false;
        self.solve(std::slice::from_ref(l), s.clone(), env, &mut |_| {
            found = true;
            false
        });
        found
    }

    fn solve_atom(&self, t: &Term, rest: &[Literal], s: Subst, env: &Env, k: &mut dyn FnMut(&Subst) -> bool) -> bool {
        let Some((f, n)) = t.key() else {
            panic!("variable literal");
        };
        let try_fact = |fact: &Term, k: &mut dyn FnMut(&Subst) -> bool| -> bool {
            let mut s2 = s.clone();
            if unify(t, fact, &mut s2) {
                self.solve(rest, s2, env, k)
            } else {
                true
            }
        };
        if f == "true" && n == 1 {
            for fact in env.state {
                if !try_fact(&Term::compound("true", vec![fact.clone()]), k) {
                    return false;
                }
            }
            return true;
        }
        if f == "does" {
            for d in env.does {
                if !try_fact(d, k) {
                    return false;
                }
            }
            return true;
        }
        let key = (f.to_string(), n);
        if let Some(fs) = self.facts.get(&key) {
            for fact in fs {
                if !try_fact(fact, k) {
                    return false;
                }
            }
        }
        if let Some(rs) = self.rules.get(&key) {
            for r in rs {
                let c = self.counter.get() + 1;
                self.counter.set(c);
                let head = rename_term(&r.head, c);
                let mut s2 = s.clone();
                if !unify(t, &head, &mut s2) {
                    continue;
                }
                let mut g: Vec<Literal> = r.body.iter().map(|l| rename_lit(l, c)).collect();
                g.extend(rest.iter().cloned());
                if !self.solve(&g, s2, env, k) {
                    return false;
                }
            }
        }
        true
    }
}

fn fatom_term(a: &FAtom) -> Term {
    Term::compound(
        &a.rel,
        a.args
            .iter()
            .map(|x| match x {
                FArg::Var(v) => Term::Var(v.clone()),
                FArg::Const(c) => Term::Const(c.clone()),
            })
            .collect(),
    )
}

/// Re-expresses a normalized sheet as terms over mangled relation names so
/// the reference interpreter can run it. Dynamic atoms get a `true` wrapper,
/// does atoms a one-argument `does` wrapper, next heads `(next (target ..))`.
pub fn flat_sheet(n: &NormalSheet) -> RuleSheet {
    let wrap = |a: &FAtom| -> Term {
        let t = fatom_term(a);
        match n.classes.get(&a.rel) {
            Some(FlatClass::Dynamic) => Term::compound("true", vec![t]),
            Some(FlatClass::Does) => Term::compound("does", vec![t]),
            _ => t,
        }
    };
    let rules = n
        .rules
        .iter()
        .map(|r| {
            let head = match n.next_targets.get(&r.head.rel) {
                Some(target) => Term::compound(
                    "next",
                    vec![fatom_term(&FAtom {
                        rel: target.clone(),
                        args: r.head.args.clone(),
                    })],
                ),
                None => fatom_term(&r.head),
            };
            let body = r
                .body
                .iter()
                .map(|l| match l {
                    FLit::Pos(a) => Literal::pos(wrap(a)),
                    FLit::Neg(a) => Literal::neg(wrap(a)),
                    FLit::Distinct { a, b, negated } => {
                        let t = |x: &FArg| match x {
                            FArg::Var(v) => Term::Var(v.clone()),
                            FArg::Const(c) => Term::Const(c.clone()),
                        };
                        Literal {
                            negated: *negated,
                            kind: LitKind::Distinct(t(a), t(b)),
                        }
                    }
                })
                .collect();
            Rule { head, body }
        })
        .collect();
    RuleSheet {
        roles: n.roles.clone(),
        static_facts: n.static_facts.iter().map(fatom_term).collect(),
        init_facts: n.init_facts.iter().map(fatom_term).collect(),
        rules,
        extension: Vec::new(),
        board: None,
    }
}
