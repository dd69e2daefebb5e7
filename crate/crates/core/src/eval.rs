//! Query-driven (nested loops) and table-driven (joins over var stores)
//! evaluation of a compiled plan.

use std::cell::Cell;

use rustc_hash::{FxHashMap, FxHashSet};
use smallvec::SmallVec;

use crate::compiler::{Backend, Clause, HeadArg, OutArg, Proc, ProcBody, ProcId, QueryPlan, Step, Val, MAX_SLOTS};
use crate::store::{FactStore, StaticStore};

type Buf = SmallVec<[u32; 8]>;

pub struct Ctx<'a> {
    pub plan: &'a QueryPlan,
    pub statics: &'a [Option<StaticStore>],
    pub dyns: &'a [Option<FactStore>],
    /// Live var-store columns across nested clause activations.
    pub columns: Cell<usize>,
}

#[inline]
fn val(v: &Val, slots: &[u32]) -> u32 {
    match *v {
        Val::Slot(s) => slots[s as usize],
        Val::Const(c) => c,
    }
}

fn bind_head(c: &Clause, input: &[u32], slots: &mut [u32]) -> bool {
    for (h, &v) in c.head.iter().zip(input) {
        match *h {
            HeadArg::BindIn(s) => slots[s as usize] = v,
            HeadArg::CheckIn(s) => {
                if slots[s as usize] != v {
                    return false;
                }
            }
            HeadArg::ConstIn(k) => {
                if k != v {
                    return false;
                }
            }
            _ => unreachable!("inputs precede outputs"),
        }
    }
    true
}

fn head_outputs(c: &Clause, n_in: usize, slots: &[u32]) -> Buf {
    c.head[n_in..]
        .iter()
        .map(|h| match *h {
            HeadArg::Out(s) => slots[s as usize],
            HeadArg::OutConst(k) => k,
            _ => unreachable!(),
        })
        .collect()
}

impl<'a> Ctx<'a> {
    pub fn new(plan: &'a QueryPlan, statics: &'a [Option<StaticStore>], dyns: &'a [Option<FactStore>]) -> Self {
        Ctx {
            plan,
            statics,
            dyns,
            columns: Cell::new(0),
        }
    }

    /// Calls `k` with the unbound argument values of every answer. `k`
    /// returns false to stop. Duplicates are possible in query mode.
    pub fn solve(&self, backend: Backend, p: ProcId, input: &[u32], k: &mut dyn FnMut(&[u32]) -> bool) {
        match backend {
            Backend::QueryDriven => {
                self.qcall(p, input, k);
            }
            Backend::TableDriven => {
                let keys = Table::from_row(input);
                let t = self.tcall(p, &keys);
                let n_in = input.len();
                for r in 0..t.rows {
                    if !k(&t.row(r)[n_in..]) {
                        break;
                    }
                }
            }
        }
    }

    pub fn exists(&self, backend: Backend, p: ProcId, input: &[u32]) -> bool {
        let mut found = false;
        self.solve(backend, p, input, &mut |_| {
            found = true;
            false
        });
        found
    }

    fn store(&self, proc: &Proc) -> (&FactStore, Option<&StaticStore>) {
        match &self.statics[proc.rel] {
            Some(s) => (&s.facts, Some(s)),
            None => (self.dyns[proc.rel].as_ref().expect("dynamic store"), None),
        }
    }

    fn facts_call(&self, proc: &Proc, input: &[u32], k: &mut dyn FnMut(&[u32]) -> bool) -> bool {
        let (store, st) = self.store(proc);
        if proc.n_in == proc.arity {
            return if store.contains(input) { k(&[]) } else { true };
        }
        let mut out: Buf = SmallVec::new();
        let mut visit = |t: &[u32]| -> bool {
            for (j, &p) in proc.in_pos.iter().enumerate() {
                if t[p as usize] != input[j] {
                    return true;
                }
            }
            out.clear();
            out.extend(proc.out_pos.iter().map(|&p| t[p as usize]));
            k(&out)
        };
        if proc.n_in > 0 {
            if let Some(c) = st.and_then(|s| s.candidates(proc.mask, input)) {
                for &i in c {
                    if !visit(store.tuple(i as usize)) {
                        return false;
                    }
                }
                return true;
            }
        }
        for t in store.iter() {
            if !visit(t) {
                return false;
            }
        }
        true
    }

    fn qcall(&self, p: ProcId, input: &[u32], k: &mut dyn FnMut(&[u32]) -> bool) -> bool {
        let proc = &self.plan.procs[p];
        let ProcBody::Rules(clauses) = &proc.body else {
            return self.facts_call(proc, input, k);
        };
        let all_bound = proc.n_in == proc.arity;
        let mut slots = [0u32; MAX_SLOTS];
        for c in clauses {
            if !bind_head(c, input, &mut slots) {
                continue;
            }
            if all_bound {
                let mut found = false;
                self.qrun(c, proc.n_in, 0, &mut slots, &mut |_| {
                    found = true;
                    false
                });
                if found {
                    return k(&[]);
                }
            } else if !self.qrun(c, proc.n_in, 0, &mut slots, k) {
                return false;
            }
        }
        true
    }

    fn qexists(&self, p: ProcId, input: &[u32]) -> bool {
        let mut found = false;
        self.qcall(p, input, &mut |_| {
            found = true;
            false
        });
        found
    }

    fn qrun(
        &self,
        c: &Clause,
        n_in: usize,
        i: usize,
        slots: &mut [u32; MAX_SLOTS],
        k: &mut dyn FnMut(&[u32]) -> bool,
    ) -> bool {
        let Some(step) = c.steps.get(i) else {
            return k(&head_outputs(c, n_in, slots));
        };
        match step {
            Step::Call {
                proc,
                inputs,
                outputs,
            } => {
                let inb: Buf = inputs.iter().map(|v| val(v, slots)).collect();
                self.qcall(*proc, &inb, &mut |outs| {
                    for (o, &v) in outputs.iter().zip(outs) {
                        match *o {
                            OutArg::Bind(s) => slots[s as usize] = v,
                            OutArg::Check(s) => {
                                if slots[s as usize] != v {
                                    return true;
                                }
                            }
                        }
                    }
                    self.qrun(c, n_in, i + 1, slots, k)
                })
            }
            Step::Exists { proc, inputs } | Step::Not { proc, inputs } => {
                let inb: Buf = inputs.iter().map(|v| val(v, slots)).collect();
                let want = matches!(step, Step::Exists { .. });
                if self.qexists(*proc, &inb) == want {
                    self.qrun(c, n_in, i + 1, slots, k)
                } else {
                    true
                }
            }
            Step::Distinct { a, b, negated } => {
                if (val(a, slots) != val(b, slots)) != *negated {
                    self.qrun(c, n_in, i + 1, slots, k)
                } else {
                    true
                }
            }
        }
    }

    /// Set-at-a-time call: `keys` holds distinct bound-argument rows, the
    /// result holds `key ++ free values` rows without duplicates.
    pub fn tcall(&self, p: ProcId, keys: &Table) -> Table {
        let proc = &self.plan.procs[p];
        let mut out = Table::new(proc.arity);
        let ProcBody::Rules(clauses) = &proc.body else {
            let mut row: Buf = SmallVec::new();
            for r in 0..keys.rows {
                let key = keys.row(r);
                self.facts_call(proc, key, &mut |free| {
                    row.clear();
                    row.extend_from_slice(key);
                    row.extend_from_slice(free);
                    out.push(&row);
                    true
                });
            }
            out.dedup();
            return out;
        };
        let before = self.columns.get();
        let mut seen: FxHashSet<Buf> = FxHashSet::default();
        for c in clauses {
            let vs = self.run_clause_table(c, proc.n_in, keys);
            let w = vs.width;
            let mut slots = [0u32; MAX_SLOTS];
            for r in 0..vs.rows {
                slots[..w].copy_from_slice(vs.row(r));
                let mut row: Buf = SmallVec::new();
                for h in &c.head {
                    row.push(match *h {
                        HeadArg::BindIn(s) | HeadArg::CheckIn(s) | HeadArg::Out(s) => slots[s as usize],
                        HeadArg::ConstIn(k) | HeadArg::OutConst(k) => k,
                    });
                }
                if seen.insert(row.clone()) {
                    out.push(&row);
                }
            }
            self.columns.set(self.columns.get() - w);
        }
        debug_assert_eq!(self.columns.get(), before, "column discipline");
        out
    }

    /// Evaluates one clause over all key rows. The returned store's columns
    /// are the clause's slots in binding order; they stay counted as live
    /// until the caller releases them.
    fn run_clause_table(&self, c: &Clause, n_in: usize, keys: &Table) -> Table {
        let mut vs = Table::new(c.width_after[0]);
        let mut slots = [0u32; MAX_SLOTS];
        for r in 0..keys.rows {
            if bind_head(c, &keys.row(r)[..n_in], &mut slots) {
                vs.push(&slots[..vs.width]);
            }
        }
        self.columns.set(self.columns.get() + vs.width);
        for (i, step) in c.steps.iter().enumerate() {
            if vs.rows == 0 {
                break;
            }
            let new_w = c.width_after[i + 1];
            match step {
                Step::Call {
                    proc,
                    inputs,
                    outputs,
                } => {
                    let (keys2, proj) = project(&vs, inputs);
                    let res = self.tcall(*proc, &keys2);
                    let n = inputs.len();
                    let mut by_key: FxHashMap<&[u32], SmallVec<[usize; 4]>> = FxHashMap::default();
                    for r in 0..res.rows {
                        by_key.entry(&res.row(r)[..n]).or_default().push(r);
                    }
                    let mut next = Table::new(new_w);
                    let mut row: Buf = SmallVec::new();
                    for r in 0..vs.rows {
                        let key = &proj[r * n..(r + 1) * n];
                        let Some(ms) = by_key.get(key) else { continue };
                        'm: for &m in ms {
                            row.clear();
                            row.extend_from_slice(vs.row(r));
                            for (o, &v) in outputs.iter().zip(&res.row(m)[n..]) {
                                match *o {
                                    OutArg::Bind(_) => row.push(v),
                                    OutArg::Check(s) => {
                                        if row[s as usize] != v {
                                            continue 'm;
                                        }
                                    }
                                }
                            }
                            next.push(&row);
                        }
                    }
                    self.columns.set(self.columns.get() + new_w - vs.width);
                    vs = next;
                }
                Step::Exists { proc, inputs } | Step::Not { proc, inputs } => {
                    let (keys2, proj) = project(&vs, inputs);
                    let res = self.tcall(*proc, &keys2);
                    let n = inputs.len();
                    let hit: FxHashSet<&[u32]> = (0..res.rows).map(|r| &res.row(r)[..n]).collect();
                    let want = matches!(step, Step::Exists { .. });
                    vs = vs.filter(|r, _| hit.contains(&proj[r * n..(r + 1) * n]) == want);
                }
                Step::Distinct { a, b, negated } => {
                    vs = vs.filter(|_, row| (val(a, row) != val(b, row)) != *negated);
                }
            }
        }
        vs
    }
}

/// Distinct projection of `vs` on `inputs`, plus the full per-row projection.
fn project(vs: &Table, inputs: &[Val]) -> (Table, Vec<u32>) {
    let n = inputs.len();
    let mut proj = Vec::with_capacity(vs.rows * n);
    for r in 0..vs.rows {
        let row = vs.row(r);
        proj.extend(inputs.iter().map(|v| val(v, row)));
    }
    let mut keys = Table::new(n);
    let mut seen: FxHashSet<&[u32]> = FxHashSet::default();
    for r in 0..vs.rows {
        let k = &proj[r * n..(r + 1) * n];
        if seen.insert(k) {
            keys.push(k);
        }
    }
    (keys, proj)
}

/// Row-major table of constant ids. Zero-width rows are counted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub width: usize,
    pub rows: usize,
    pub data: Vec<u32>,
}

impl Table {
    pub fn new(width: usize) -> Table {
        Table {
            width,
            rows: 0,
            data: Vec::new(),
        }
    }

    pub fn from_row(r: &[u32]) -> Table {
        let mut t = Table::new(r.len());
        t.push(r);
        t
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    pub fn push(&mut self, r: &[u32]) {
        debug_assert_eq!(r.len(), self.width);
        self.data.extend_from_slice(r);
        self.rows += 1;
    }

    fn filter(self, mut keep: impl FnMut(usize, &[u32]) -> bool) -> Table {
        let mut t = Table::new(self.width);
        for r in 0..self.rows {
            if keep(r, self.row(r)) {
                t.push(self.row(r));
            }
        }
        t
    }

    pub fn dedup(&mut self) {
        let mut seen: FxHashSet<Vec<u32>> = FxHashSet::default();
        let mut t = Table::new(self.width);
        for r in 0..self.rows {
            if seen.insert(self.row(r).to_vec()) {
                t.push(self.row(r));
            }
        }
        *self = t;
    }

    pub fn sorted_rows(&self) -> Vec<Vec<u32>> {
        let mut v: Vec<Vec<u32>> = (0..self.rows).map(|r| self.row(r).to_vec()).collect();
        v.sort();
        v.dedup();
        v
    }
}
