//! Reasoning trees, overload discovery and compilation into a query plan.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::mgdl::{FArg, FAtom, FLit, FRule, FlatClass, NormalSheet};
use crate::store::StaticStore;

pub const MAX_DEPTH: usize = 64;
pub const MAX_SLOTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Var,
    Const,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OverloadSignature {
    pub relation: String,
    pub labels: Vec<Label>,
}

impl fmt::Display for OverloadSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, l) in self.labels.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", if *l == Label::Var { "VAR" } else { "CONST" })?;
        }
        write!(f, ")")
    }
}

pub fn mask_labels(mask: u64, arity: usize) -> Vec<Label> {
    (0..arity)
        .map(|i| if mask >> i & 1 == 1 { Label::Const } else { Label::Var })
        .collect()
}

pub fn full_mask(arity: usize) -> u64 {
    if arity >= 64 {
        u64::MAX
    } else {
        (1u64 << arity) - 1
    }
}

/// Execution order of a rule body under a call mask: positive literals in
/// written order, filters (negation, distinct) as soon as their variables
/// are bound. Returns (body index, call mask) pairs.
pub fn analyze_rule(rule: &FRule, mask: u64) -> Result<Vec<(usize, u64)>> {
    let mut bound: Vec<&str> = Vec::new();
    for (i, a) in rule.head.args.iter().enumerate() {
        if let FArg::Var(v) = a {
            if mask >> i & 1 == 1 && !bound.contains(&v.as_str()) {
                bound.push(v);
            }
        }
    }
    let is_bound = |a: &FArg, bound: &[&str]| match a {
        FArg::Const(_) => true,
        FArg::Var(v) => bound.contains(&v.as_str()),
    };
    let mut order = Vec::new();
    let mut pending: Vec<usize> = Vec::new();
    let flush = |pending: &mut Vec<usize>, bound: &[&str], order: &mut Vec<(usize, u64)>| {
        pending.retain(|&i| {
            let ready = match &rule.body[i] {
                FLit::Neg(a) => a.args.iter().all(|x| is_bound(x, bound)),
                FLit::Distinct { a, b, .. } => is_bound(a, bound) && is_bound(b, bound),
                FLit::Pos(_) => unreachable!(),
            };
            if ready {
                let m = match &rule.body[i] {
                    FLit::Neg(a) => full_mask(a.args.len()),
                    _ => 0,
                };
                order.push((i, m));
            }
            !ready
        });
    };
    for (i, lit) in rule.body.iter().enumerate() {
        match lit {
            FLit::Pos(a) => {
                flush(&mut pending, &bound, &mut order);
                let mut m = 0u64;
                for (j, x) in a.args.iter().enumerate() {
                    if is_bound(x, &bound) {
                        m |= 1 << j;
                    }
                }
                order.push((i, m));
                for x in &a.args {
                    if let FArg::Var(v) = x {
                        if !bound.contains(&v.as_str()) {
                            bound.push(v);
                        }
                    }
                }
            }
            _ => pending.push(i),
        }
    }
    flush(&mut pending, &bound, &mut order);
    if let Some(&i) = pending.first() {
        return Err(Error::Unsafe {
            var: String::new(),
            rule: format!("{rule} (filter {})", rule.body[i]),
        });
    }
    for a in &rule.head.args {
        if !is_bound(a, &bound) {
            return Err(Error::Unsafe {
                var: a.to_string(),
                rule: rule.to_string(),
            });
        }
    }
    Ok(order)
}

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct RuleAlt {
    pub rule: usize,
    /// (body index, call mask, child node for atoms)
    pub steps: Vec<(usize, u64, Option<NodeId>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    /// Leaf over a fact store.
    Facts(FlatClass),
    /// One alternative is a plain child; several form an OR vertex.
    Rules(Vec<RuleAlt>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub rel: String,
    pub arity: usize,
    pub mask: u64,
    pub kind: NodeKind,
}

/// Reasoning trees sharing expanded (relation, shape) nodes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Forest {
    pub nodes: Vec<TreeNode>,
    pub roots: Vec<NodeId>,
    index: BTreeMap<(String, u64), NodeId>,
}

impl Forest {
    pub fn node(&self, rel: &str, mask: u64) -> Option<NodeId> {
        self.index.get(&(rel.to_string(), mask)).copied()
    }

    /// Longest acyclic path from `id` measured in nodes.
    pub fn depth(&self, id: NodeId) -> usize {
        fn go(f: &Forest, id: NodeId, seen: &mut Vec<bool>) -> usize {
            if seen[id] {
                return 0;
            }
            seen[id] = true;
            let d = match &f.nodes[id].kind {
                NodeKind::Facts(_) => 1,
                NodeKind::Rules(alts) => {
                    1 + alts
                        .iter()
                        .flat_map(|a| a.steps.iter().filter_map(|s| s.2))
                        .map(|c| go(f, c, seen))
                        .max()
                        .unwrap_or(0)
                }
            };
            seen[id] = false;
            d
        }
        go(self, id, &mut vec![false; self.nodes.len()])
    }

    /// Relations reachable from a root.
    pub fn reachable(&self, id: NodeId) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![id];
        let mut visited = vec![false; self.nodes.len()];
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut visited[n], true) {
                continue;
            }
            seen.insert(self.nodes[n].rel.clone());
            if let NodeKind::Rules(alts) = &self.nodes[n].kind {
                stack.extend(alts.iter().flat_map(|a| a.steps.iter().filter_map(|s| s.2)));
            }
        }
        seen
    }
}

/// The fixed root queries: legal(CONST, VAR..) per legal relation, one
/// all-VAR root per next relation, goal(CONST, VAR), terminal().
pub fn root_queries(sheet: &NormalSheet) -> Vec<(String, u64)> {
    let mut roots = Vec::new();
    for r in sheet.legal_relations() {
        roots.push((r.to_string(), 1));
    }
    for r in sheet.next_targets.keys() {
        roots.push((r.clone(), 0));
    }
    for r in sheet.goal_relations() {
        roots.push((r.to_string(), 1));
    }
    if sheet.classes.get("terminal") == Some(&FlatClass::Rule) {
        roots.push(("terminal".to_string(), 0));
    }
    roots
}

pub fn build_reasoning_trees(sheet: &NormalSheet) -> Result<Forest> {
    build_trees_from(sheet, &root_queries(sheet))
}

pub fn build_trees_from(sheet: &NormalSheet, roots: &[(String, u64)]) -> Result<Forest> {
    let mut by_rel: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in sheet.rules.iter().enumerate() {
        by_rel.entry(r.head.rel.as_str()).or_default().push(i);
    }
    let mut f = Forest::default();
    for (rel, mask) in roots {
        let id = expand(sheet, &by_rel, &mut f, rel, *mask, 0)?;
        f.roots.push(id);
    }
    Ok(f)
}

fn expand(
    sheet: &NormalSheet,
    by_rel: &BTreeMap<&str, Vec<usize>>,
    f: &mut Forest,
    rel: &str,
    mask: u64,
    depth: usize,
) -> Result<NodeId> {
    if depth > MAX_DEPTH {
        return Err(Error::Compile(format!(
            "reasoning tree deeper than {MAX_DEPTH} at {rel}"
        )));
    }
    if let Some(id) = f.node(rel, mask) {
        return Ok(id);
    }
    let class = *sheet
        .classes
        .get(rel)
        .ok_or_else(|| Error::Undefined(rel.to_string()))?;
    let arity = sheet.arities.get(rel).copied().unwrap_or(0);
    let id = f.nodes.len();
    let kind = if class == FlatClass::Rule {
        NodeKind::Rules(Vec::new())
    } else {
        NodeKind::Facts(class)
    };
    f.nodes.push(TreeNode {
        rel: rel.to_string(),
        arity,
        mask,
        kind,
    });
    f.index.insert((rel.to_string(), mask), id);
    if class != FlatClass::Rule {
        return Ok(id);
    }
    let mut alts = Vec::new();
    for &ri in by_rel.get(rel).map(Vec::as_slice).unwrap_or(&[]) {
        let rule = &sheet.rules[ri];
        let mut steps = Vec::new();
        for (bi, m) in analyze_rule(rule, mask)? {
            let child = match &rule.body[bi] {
                FLit::Pos(a) | FLit::Neg(a) => {
                    Some(expand(sheet, by_rel, f, &a.rel, m, depth + 1)?)
                }
                FLit::Distinct { .. } => None,
            };
            steps.push((bi, m, child));
        }
        alts.push(RuleAlt { rule: ri, steps });
    }
    f.nodes[id].kind = NodeKind::Rules(alts);
    Ok(id)
}

pub fn discover_overloads(forest: &Forest) -> BTreeSet<OverloadSignature> {
    forest
        .nodes
        .iter()
        .map(|n| OverloadSignature {
            relation: n.rel.clone(),
            labels: mask_labels(n.mask, n.arity),
        })
        .collect()
}

/// Symbol table with dense ids in first-occurrence order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstantTable {
    names: Vec<String>,
    ids: FxHashMap<String, u32>,
    numbers: Vec<Option<f64>>,
}

impl ConstantTable {
    pub fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_string());
        self.numbers.push(crate::board::parse_real(s));
        self.ids.insert(s.to_string(), id);
        id
    }

    pub fn id(&self, s: &str) -> Option<u32> {
        self.ids.get(s).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn number(&self, id: u32) -> Option<f64> {
        self.numbers[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

pub fn build_constant_table(sheet: &NormalSheet) -> ConstantTable {
    let mut t = ConstantTable::default();
    let atom = |a: &FAtom, t: &mut ConstantTable| {
        for x in &a.args {
            if let FArg::Const(c) = x {
                t.intern(c);
            }
        }
    };
    for r in &sheet.roles {
        t.intern(r);
    }
    for a in sheet.static_facts.iter().chain(&sheet.init_facts) {
        atom(a, &mut t);
    }
    for r in &sheet.rules {
        atom(&r.head, &mut t);
        for l in &r.body {
            match l {
                FLit::Pos(a) | FLit::Neg(a) => atom(a, &mut t),
                FLit::Distinct { a, b, .. } => {
                    for x in [a, b] {
                        if let FArg::Const(c) = x {
                            t.intern(c);
                        }
                    }
                }
            }
        }
    }
    t
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Val {
    Slot(u16),
    Const(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutArg {
    Bind(u16),
    /// Repeated variable inside one literal.
    Check(u16),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeadArg {
    BindIn(u16),
    CheckIn(u16),
    ConstIn(u32),
    Out(u16),
    OutConst(u32),
}

pub type ProcId = usize;
pub type RelId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    Call {
        proc: ProcId,
        inputs: Vec<Val>,
        outputs: Vec<OutArg>,
    },
    Exists { proc: ProcId, inputs: Vec<Val> },
    Not { proc: ProcId, inputs: Vec<Val> },
    Distinct { a: Val, b: Val, negated: bool },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub n_slots: usize,
    /// Slots bound after the head, then after each step.
    pub width_after: Vec<usize>,
    pub head: Vec<HeadArg>,
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProcBody {
    Facts,
    Rules(Vec<Clause>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Proc {
    pub rel: RelId,
    pub mask: u64,
    pub arity: usize,
    pub n_in: usize,
    pub in_pos: Vec<u8>,
    pub out_pos: Vec<u8>,
    pub body: ProcBody,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    TableDriven,
    QueryDriven,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::TableDriven => "table",
            Backend::QueryDriven => "query",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "table" | "table-driven" => Ok(Backend::TableDriven),
            "query" | "query-driven" => Ok(Backend::QueryDriven),
            _ => Err(format!("unknown backend {s}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelInfo {
    pub name: String,
    pub arity: usize,
    pub class: FlatClass,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryPlan {
    pub procs: Vec<Proc>,
    pub index: BTreeMap<(RelId, u64), ProcId>,
}

impl QueryPlan {
    pub fn proc_for(&self, rel: RelId, mask: u64) -> Option<ProcId> {
        self.index.get(&(rel, mask)).copied()
    }

    /// Every call site targets a proc whose relation and mask agree.
    pub fn check_closure(&self) -> bool {
        self.procs.iter().all(|p| match &p.body {
            ProcBody::Facts => true,
            ProcBody::Rules(cs) => cs.iter().all(|c| {
                c.steps.iter().all(|s| match s {
                    Step::Call { proc, inputs, .. }
                    | Step::Exists { proc, inputs }
                    | Step::Not { proc, inputs } => self
                        .procs
                        .get(*proc)
                        .is_some_and(|q| q.n_in == inputs.len()),
                    Step::Distinct { .. } => true,
                })
            }),
        })
    }
}

struct ClauseBuilder<'a> {
    consts: &'a ConstantTable,
    slots: Vec<String>,
}

impl ClauseBuilder<'_> {
    fn slot(&self, v: &str) -> Option<u16> {
        self.slots.iter().position(|s| s == v).map(|i| i as u16)
    }

    fn new_slot(&mut self, v: &str) -> Result<u16> {
        if self.slots.len() >= MAX_SLOTS {
            return Err(Error::Compile(format!("more than {MAX_SLOTS} variables in a rule")));
        }
        self.slots.push(v.to_string());
        Ok(self.slots.len() as u16 - 1)
    }

    fn val(&self, a: &FArg) -> Val {
        match a {
            FArg::Const(c) => Val::Const(self.consts.id(c).expect("interned")),
            FArg::Var(v) => Val::Slot(self.slot(v).expect("bound by analysis")),
        }
    }
}

pub struct Compiled {
    pub consts: ConstantTable,
    pub rels: Vec<RelInfo>,
    pub rel_ids: BTreeMap<String, RelId>,
    pub plan: QueryPlan,
    pub forest: Forest,
    pub statics: Vec<Option<StaticStore>>,
}

/// Lowers the forest to procedures over integer ids.
pub fn compile_plan(sheet: &NormalSheet) -> Result<Compiled> {
    let forest = build_reasoning_trees(sheet)?;
    let consts = build_constant_table(sheet);
    let mut rels = Vec::new();
    let mut rel_ids = BTreeMap::new();
    for (name, class) in &sheet.classes {
        rel_ids.insert(name.clone(), rels.len());
        rels.push(RelInfo {
            name: name.clone(),
            arity: sheet.arities.get(name).copied().unwrap_or(0),
            class: *class,
        });
    }
    let mut plan = QueryPlan::default();
    for (id, n) in forest.nodes.iter().enumerate() {
        let rel = rel_ids[&n.rel];
        plan.index.insert((rel, n.mask), id);
        plan.procs.push(Proc {
            rel,
            mask: n.mask,
            arity: n.arity,
            n_in: n.mask.count_ones() as usize,
            in_pos: (0..n.arity as u8).filter(|&i| n.mask >> i & 1 == 1).collect(),
            out_pos: (0..n.arity as u8).filter(|&i| n.mask >> i & 1 == 0).collect(),
            body: ProcBody::Facts,
        });
    }
    for (id, n) in forest.nodes.iter().enumerate() {
        let NodeKind::Rules(alts) = &n.kind else {
            continue;
        };
        let mut clauses = Vec::new();
        for alt in alts {
            clauses.push(compile_clause(&sheet.rules[alt.rule], n.mask, alt, &consts)?);
        }
        plan.procs[id].body = ProcBody::Rules(clauses);
    }
    let mut statics: Vec<Option<StaticStore>> = rels
        .iter()
        .map(|r| (r.class == FlatClass::Static).then(|| StaticStore::new(r.arity)))
        .collect();
    for a in &sheet.static_facts {
        let t: Vec<u32> = a
            .args
            .iter()
            .map(|x| match x {
                FArg::Const(c) => consts.id(c).expect("interned"),
                FArg::Var(_) => unreachable!("static facts are ground"),
            })
            .collect();
        statics[rel_ids[&a.rel]].as_mut().expect("static").insert(&t);
    }
    for p in &plan.procs {
        if let Some(s) = statics[p.rel].as_mut() {
            s.add_index(p.mask);
        }
    }
    Ok(Compiled {
        consts,
        rels,
        rel_ids,
        plan,
        forest,
        statics,
    })
}

fn compile_clause(rule: &FRule, mask: u64, alt: &RuleAlt, consts: &ConstantTable) -> Result<Clause> {
    let mut b = ClauseBuilder {
        consts,
        slots: Vec::new(),
    };
    let mut head = Vec::new();
    for (i, a) in rule.head.args.iter().enumerate() {
        if mask >> i & 1 == 0 {
            continue;
        }
        head.push(match a {
            FArg::Const(c) => HeadArg::ConstIn(consts.id(c).expect("interned")),
            FArg::Var(v) => match b.slot(v) {
                Some(s) => HeadArg::CheckIn(s),
                None => HeadArg::BindIn(b.new_slot(v)?),
            },
        });
    }
    let mut width_after = vec![b.slots.len()];
    let mut steps = Vec::new();
    for &(bi, m, child) in &alt.steps {
        let step = match &rule.body[bi] {
            FLit::Pos(a) => {
                let proc = child.expect("atom child");
                let mut inputs = Vec::new();
                let mut outputs = Vec::new();
                let mut fresh: Vec<&str> = Vec::new();
                for (j, x) in a.args.iter().enumerate() {
                    if m >> j & 1 == 1 {
                        inputs.push(b.val(x));
                    } else {
                        let FArg::Var(v) = x else { unreachable!() };
                        if fresh.contains(&v.as_str()) {
                            outputs.push(OutArg::Check(b.slot(v).expect("fresh")));
                        } else {
                            fresh.push(v);
                            outputs.push(OutArg::Bind(b.new_slot(v)?));
                        }
                    }
                }
                if outputs.is_empty() {
                    Step::Exists { proc, inputs }
                } else {
                    Step::Call {
                        proc,
                        inputs,
                        outputs,
                    }
                }
            }
            FLit::Neg(a) => Step::Not {
                proc: child.expect("atom child"),
                inputs: a.args.iter().map(|x| b.val(x)).collect(),
            },
            FLit::Distinct { a, b: y, negated } => Step::Distinct {
                a: b.val(a),
                b: b.val(y),
                negated: *negated,
            },
        };
        steps.push(step);
        width_after.push(b.slots.len());
    }
    for (i, a) in rule.head.args.iter().enumerate() {
        if mask >> i & 1 == 1 {
            continue;
        }
        head.push(match a {
            FArg::Const(c) => HeadArg::OutConst(consts.id(c).expect("interned")),
            FArg::Var(v) => HeadArg::Out(b.slot(v).expect("safe head")),
        });
    }
    Ok(Clause {
        n_slots: b.slots.len(),
        width_after,
        head,
        steps,
    })
}

fn fmt_val(v: &Val, c: &ConstantTable) -> String {
    match v {
        Val::Slot(s) => format!("${s}"),
        Val::Const(k) => c.name(*k).to_string(),
    }
}

/// Deterministic text form of the plan.
pub fn dump_plan(c: &Compiled) -> String {
    let mut out = String::new();
    for (id, p) in c.plan.procs.iter().enumerate() {
        let sig = OverloadSignature {
            relation: c.rels[p.rel].name.clone(),
            labels: mask_labels(p.mask, p.arity),
        };
        match &p.body {
            ProcBody::Facts => {
                let _ = writeln!(out, "p{id} {sig} facts:{:?}", c.rels[p.rel].class);
            }
            ProcBody::Rules(cs) => {
                let _ = writeln!(out, "p{id} {sig} rules:{}", cs.len());
                for cl in cs {
                    let _ = writeln!(out, "  clause slots={} head={:?}", cl.n_slots, cl.head);
                    for s in &cl.steps {
                        let line = match s {
                            Step::Call {
                                proc,
                                inputs,
                                outputs,
                            } => format!(
                                "call p{proc} in=[{}] out={outputs:?}",
                                inputs.iter().map(|v| fmt_val(v, &c.consts)).collect::<Vec<_>>().join(" ")
                            ),
                            Step::Exists { proc, inputs } => format!(
                                "exists p{proc} [{}]",
                                inputs.iter().map(|v| fmt_val(v, &c.consts)).collect::<Vec<_>>().join(" ")
                            ),
                            Step::Not { proc, inputs } => format!(
                                "not p{proc} [{}]",
                                inputs.iter().map(|v| fmt_val(v, &c.consts)).collect::<Vec<_>>().join(" ")
                            ),
                            Step::Distinct { a, b, negated } => format!(
                                "{}distinct {} {}",
                                if *negated { "not " } else { "" },
                                fmt_val(a, &c.consts),
                                fmt_val(b, &c.consts)
                            ),
                        };
                        let _ = writeln!(out, "    {line}");
                    }
                }
            }
        }
    }
    out
}
