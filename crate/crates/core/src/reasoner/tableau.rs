//! Completion-graph tableau for ALCQ with dependency-directed backtracking.
//!
//! Rules: conjunction, disjunction (semantic branching), at-least (which
//! also covers existentials), universal, at-most merging and the choose
//! rule. Subsumptions with an atomic trigger are unfolded lazily; the rest
//! are internalized into every node label. Without inverse roles, a
//! generated node may be blocked by any earlier generated node whose label
//! contains its own.

use std::rc::Rc;
use std::time::Instant;

use smallvec::SmallVec;

use super::model::FiniteModel;
use super::table::{Cid, ConceptTable, Term, BOTTOM};
use crate::bits::BitSet;

/// Branch points a fact depends on, sorted ascending.
pub(crate) type Deps = SmallVec<[u32; 4]>;

fn union(a: &Deps, b: &Deps) -> Deps {
    let mut out = Deps::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn with(a: &Deps, b: u32) -> Deps {
    union(a, &smallvec::smallvec![b])
}

fn without(a: &Deps, b: u32) -> Deps {
    a.iter().copied().filter(|&x| x != b).collect()
}

type NodeId = u32;

#[derive(Clone, Debug)]
struct Edge {
    role: u32,
    to: NodeId,
    deps: Deps,
}

#[derive(Clone, Debug)]
struct Node {
    alive: bool,
    root: bool,
    parent: Option<NodeId>,
    merged_into: Option<NodeId>,
    label: BitSet,
    deps: Vec<(Cid, Deps)>,
    edges: Vec<Edge>,
    distinct: Vec<(NodeId, Deps)>,
}

impl Node {
    fn dep_of(&self, c: Cid) -> Deps {
        self.deps.iter().find(|(x, _)| *x == c).map(|(_, d)| d.clone()).unwrap_or_default()
    }

    fn is_distinct(&self, other: NodeId) -> Option<&Deps> {
        self.distinct.iter().find(|(n, _)| *n == other).map(|(_, d)| d)
    }
}

/// Nodes are shared between saved states and copied on first write.
#[derive(Clone, Debug)]
struct State {
    nodes: Vec<Rc<Node>>,
    todo: Vec<(NodeId, Cid)>,
}

impl State {
    fn node_mut(&mut self, x: NodeId) -> &mut Node {
        Rc::make_mut(&mut self.nodes[x as usize])
    }
}

/// Why a run stopped without a model.
#[derive(Debug)]
pub(crate) enum Fail {
    Clash(Deps),
    Budget,
}

/// Input to one satisfiability run.
pub(crate) struct Problem<'a> {
    pub table: &'a ConceptTable,
    /// Consequents to add whenever the atom (by concept id) is in a label.
    pub unfold: &'a [Vec<Cid>],
    /// Concepts added to every node.
    pub internal: &'a [Cid],
    /// Named individuals with their initial concepts.
    pub individuals: &'a [(String, Vec<Cid>)],
    /// Role assertions as (role, subject index, object index).
    pub role_edges: &'a [(u32, usize, usize)],
}

pub(crate) struct Limits {
    pub max_nodes: usize,
    pub deadline: Option<Instant>,
}

pub(crate) struct Tableau<'a> {
    p: &'a Problem<'a>,
    limits: Limits,
    created: usize,
    next_id: u32,
    ticks: u32,
}

#[derive(Clone, Copy, Debug)]
enum Block {
    Free,
    Direct(NodeId),
    Indirect,
    Dead,
}

struct Frame {
    id: u32,
    choice: Choice,
    alt: usize,
    alts: usize,
    saved: State,
    acc: Deps,
    prev_clash: Deps,
}

enum Choice {
    Or { node: NodeId, left: Cid, right: Cid, deps: Deps },
    Choose { node: NodeId, filler: Cid, deps: Deps },
    Merge { pairs: Vec<(NodeId, NodeId)>, deps: Deps },
}

impl Choice {
    fn alternatives(&self) -> usize {
        match self {
            Choice::Or { .. } | Choice::Choose { .. } => 2,
            Choice::Merge { pairs, .. } => pairs.len(),
        }
    }
}

impl<'a> Tableau<'a> {
    pub fn new(p: &'a Problem<'a>, limits: Limits) -> Self {
        Tableau { p, limits, created: 0, next_id: 0, ticks: 0 }
    }

    /// Runs the tableau; `Ok` carries the model read off the completion
    /// graph (not yet verified against any axioms).
    pub fn run(&mut self) -> Result<FiniteModel, Fail> {
        let width = self.p.table.len();
        let mut st = State { nodes: Vec::new(), todo: Vec::new() };
        for _ in self.p.individuals {
            self.new_node(&mut st, width, true, None);
        }
        for (i, (_, concepts)) in self.p.individuals.iter().enumerate() {
            for &c in concepts {
                self.add(&mut st, i as NodeId, c, Deps::new())?;
            }
            for &c in self.p.internal {
                self.add(&mut st, i as NodeId, c, Deps::new())?;
            }
        }
        for &(role, s, o) in self.p.role_edges {
            self.add_edge(&mut st, s as NodeId, o as NodeId, role, Deps::new())?;
        }
        let done = self.expand(st)?;
        Ok(self.extract(&done))
    }

    fn new_node(&mut self, st: &mut State, width: usize, root: bool, parent: Option<NodeId>) -> NodeId {
        self.created += 1;
        st.nodes.push(Rc::new(Node {
            alive: true,
            root,
            parent,
            merged_into: None,
            label: BitSet::new(width),
            deps: Vec::new(),
            edges: Vec::new(),
            distinct: Vec::new(),
        }));
        (st.nodes.len() - 1) as NodeId
    }

    fn tick(&mut self) -> Result<(), Fail> {
        if self.created > self.limits.max_nodes {
            return Err(Fail::Budget);
        }
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks % 64 == 0 {
            if let Some(d) = self.limits.deadline {
                if Instant::now() >= d {
                    return Err(Fail::Budget);
                }
            }
        }
        Ok(())
    }

    fn add(&self, st: &mut State, x: NodeId, c: Cid, deps: Deps) -> Result<(), Fail> {
        let node = &st.nodes[x as usize];
        if node.label.contains(c as usize) {
            return Ok(());
        }
        if c == BOTTOM {
            return Err(Fail::Clash(deps));
        }
        let neg = self.p.table.complement(c);
        if node.label.contains(neg as usize) {
            return Err(Fail::Clash(union(&deps, &node.dep_of(neg))));
        }
        let node = st.node_mut(x);
        node.label.insert(c as usize);
        node.deps.push((c, deps));
        st.todo.push((x, c));
        Ok(())
    }

    fn add_edge(&self, st: &mut State, from: NodeId, to: NodeId, role: u32, deps: Deps) -> Result<(), Fail> {
        st.node_mut(from).edges.push(Edge { role, to, deps: deps.clone() });
        // propagate universals already in the source label
        let alls: Vec<(Cid, Deps)> = st.nodes[from as usize]
            .deps
            .iter()
            .filter_map(|(c, d)| match self.p.table.term(*c) {
                Term::All(r, f) if *r == role => Some((*f, d.clone())),
                _ => None,
            })
            .collect();
        for (f, d) in alls {
            self.add(st, to, f, union(&d, &deps))?;
        }
        Ok(())
    }

    /// Deterministic rules to fixpoint.
    fn saturate(&self, st: &mut State) -> Result<(), Fail> {
        while let Some((x, c)) = st.todo.pop() {
            if !st.nodes[x as usize].alive {
                continue;
            }
            let d = st.nodes[x as usize].dep_of(c);
            match *self.p.table.term(c) {
                Term::And(l, r) => {
                    self.add(st, x, l, d.clone())?;
                    self.add(st, x, r, d)?;
                }
                Term::Atom(a) => {
                    if let Some(cons) = self.p.unfold.get(a as usize) {
                        for &e in cons {
                            self.add(st, x, e, d.clone())?;
                        }
                    }
                }
                Term::All(role, f) => {
                    let targets: Vec<(NodeId, Deps)> = st.nodes[x as usize]
                        .edges
                        .iter()
                        .filter(|e| e.role == role && st.nodes[e.to as usize].alive)
                        .map(|e| (e.to, e.deps.clone()))
                        .collect();
                    for (y, ed) in targets {
                        self.add(st, y, f, union(&d, &ed))?;
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Alive role successors of `x`, deduplicated, with the deps of the
    /// first edge reaching each.
    fn successors(&self, st: &State, x: NodeId, role: u32) -> Vec<(NodeId, Deps)> {
        let mut out: Vec<(NodeId, Deps)> = Vec::new();
        for e in &st.nodes[x as usize].edges {
            if e.role == role && st.nodes[e.to as usize].alive && !out.iter().any(|(n, _)| *n == e.to) {
                out.push((e.to, e.deps.clone()));
            }
        }
        out
    }

    /// At-most restrictions with too many successors: merge or clash.
    fn merge_choice(&self, st: &State, blocking: &[Block]) -> Result<Option<Choice>, Fail> {
        let table = self.p.table;
        for x in 0..st.nodes.len() as NodeId {
            if !matches!(blocking[x as usize], Block::Free) {
                continue;
            }
            for (c, d) in &st.nodes[x as usize].deps {
                let Term::Max(n, role, f) = *table.term(*c) else { continue };
                let succ: Vec<(NodeId, Deps)> = self
                    .successors(st, x, role)
                    .into_iter()
                    .filter(|(y, _)| st.nodes[*y as usize].label.contains(f as usize))
                    .collect();
                if succ.len() as u32 <= n {
                    continue;
                }
                let mut deps = d.clone();
                for (y, ed) in &succ {
                    deps = union(&deps, ed);
                    deps = union(&deps, &st.nodes[*y as usize].dep_of(f));
                }
                let mut pairs = Vec::new();
                for i in 0..succ.len() {
                    for j in i + 1..succ.len() {
                        let (y, z) = (succ[i].0, succ[j].0);
                        match st.nodes[y as usize].is_distinct(z) {
                            Some(dd) => deps = union(&deps, dd),
                            None => pairs.push((y, z)),
                        }
                    }
                }
                if pairs.is_empty() {
                    return Err(Fail::Clash(deps));
                }
                return Ok(Some(Choice::Merge { pairs, deps }));
            }
        }
        Ok(None)
    }

    /// Successors of an at-most restriction's holder must decide its filler.
    fn choose_choice(&self, st: &State, blocking: &[Block]) -> Option<Choice> {
        let table = self.p.table;
        for x in 0..st.nodes.len() as NodeId {
            if !matches!(blocking[x as usize], Block::Free) {
                continue;
            }
            for (c, d) in &st.nodes[x as usize].deps {
                let Term::Max(_, role, f) = *table.term(*c) else { continue };
                let nf = table.complement(f);
                for (y, ed) in self.successors(st, x, role) {
                    let label = &st.nodes[y as usize].label;
                    if !label.contains(f as usize) && !label.contains(nf as usize) {
                        return Some(Choice::Choose { node: y, filler: f, deps: union(d, &ed) });
                    }
                }
            }
        }
        None
    }

    /// First open disjunction at `x`. Disjunctions with one refuted side are
    /// resolved in place; returns `Ok(None)` when nothing is left open.
    fn or_choice(&self, st: &mut State, x: NodeId) -> Result<Option<Choice>, Fail> {
        let table = self.p.table;
        let mut i = 0;
        while i < st.nodes[x as usize].deps.len() {
            let (c, d) = st.nodes[x as usize].deps[i].clone();
            i += 1;
            let Term::Or(l, r) = *table.term(c) else { continue };
            let node = &st.nodes[x as usize];
            if node.label.contains(l as usize) || node.label.contains(r as usize) {
                continue;
            }
            let (nl, nr) = (table.complement(l), table.complement(r));
            if node.label.contains(nl as usize) {
                let dd = union(&d, &node.dep_of(nl));
                self.add(st, x, r, dd)?;
                self.saturate(st)?;
                continue;
            }
            if node.label.contains(nr as usize) {
                let dd = union(&d, &node.dep_of(nr));
                self.add(st, x, l, dd)?;
                self.saturate(st)?;
                continue;
            }
            // try the cheaper disjunct first: generating ones last
            let (l, r) = if cost(table.term(l)) > cost(table.term(r)) { (r, l) } else { (l, r) };
            return Ok(Some(Choice::Or { node: x, left: l, right: r, deps: d }));
        }
        Ok(None)
    }

    /// Blocking status of every node. A generated node is directly blocked
    /// by an earlier, unblocked generated node whose label contains its own;
    /// descendants of blocked nodes are indirectly blocked.
    fn blocking(&self, st: &State) -> Vec<Block> {
        let mut out = vec![Block::Free; st.nodes.len()];
        let mut free_generated: Vec<NodeId> = Vec::new();
        for (i, node) in st.nodes.iter().enumerate() {
            if !node.alive {
                out[i] = Block::Dead;
                continue;
            }
            if node.root {
                continue;
            }
            // parents are created before their children, except after a
            // root merge re-parents a subtree; roots are never blocked
            if let Some(p) = node.parent {
                if (p as usize) < i && !matches!(out[p as usize], Block::Free) {
                    out[i] = Block::Indirect;
                    continue;
                }
            }
            match free_generated.iter().find(|&&y| node.label.is_subset(&st.nodes[y as usize].label)) {
                Some(&y) => out[i] = Block::Direct(y),
                None => free_generated.push(i as NodeId),
            }
        }
        out
    }

    /// Applies the at-least rule at `x`; returns whether anything was
    /// generated.
    fn generate(&mut self, st: &mut State, x: NodeId) -> Result<bool, Fail> {
        let table = self.p.table;
        let mins: Vec<(u32, u32, Cid, Deps)> = st.nodes[x as usize]
            .deps
            .iter()
            .filter_map(|(c, d)| match *table.term(*c) {
                Term::Min(n, r, f) => Some((n, r, f, d.clone())),
                _ => None,
            })
            .collect();
        let mut generated = false;
        for (n, role, f, d) in mins {
            let with_f: Vec<NodeId> = self
                .successors(st, x, role)
                .into_iter()
                .map(|(y, _)| y)
                .filter(|y| st.nodes[*y as usize].label.contains(f as usize))
                .collect();
            if has_distinct_subset(st, &with_f, n as usize) {
                continue;
            }
            let width = table.len();
            let mut fresh = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let y = self.new_node(st, width, false, Some(x));
                fresh.push(y);
            }
            for (i, &y) in fresh.iter().enumerate() {
                for &z in &fresh[..i] {
                    st.node_mut(y).distinct.push((z, d.clone()));
                    st.node_mut(z).distinct.push((y, d.clone()));
                }
            }
            for &y in &fresh {
                self.add(st, y, f, d.clone())?;
                for &c in self.p.internal {
                    self.add(st, y, c, d.clone())?;
                }
                self.add_edge(st, x, y, role, d.clone())?;
            }
            generated = true;
        }
        Ok(generated)
    }

    /// Runs deterministic rules and generation until the graph is complete
    /// or a nondeterministic choice is needed. Merges and the choose rule
    /// come first; otherwise the newest unblocked node with open work is
    /// expanded, so clashes below a choice surface right after it.
    fn step(&mut self, st: &mut State) -> Result<Option<Choice>, Fail> {
        'outer: loop {
            self.tick()?;
            self.saturate(st)?;
            let blocking = self.blocking(st);
            if let Some(c) = self.merge_choice(st, &blocking)? {
                return Ok(Some(c));
            }
            if let Some(c) = self.choose_choice(st, &blocking) {
                return Ok(Some(c));
            }
            for x in (0..st.nodes.len() as NodeId).rev() {
                if !matches!(blocking[x as usize], Block::Free) {
                    continue;
                }
                if let Some(c) = self.or_choice(st, x)? {
                    return Ok(Some(c));
                }
                if self.generate(st, x)? {
                    continue 'outer;
                }
            }
            return Ok(None);
        }
    }

    fn apply(&mut self, st: &mut State, frame: &Frame) -> Result<(), Fail> {
        let b = frame.id;
        match &frame.choice {
            Choice::Or { node, left, right, deps } => {
                if frame.alt == 0 {
                    self.add(st, *node, *left, with(deps, b))
                } else {
                    let neg = self.p.table.complement(*left);
                    self.add(st, *node, neg, union(deps, &frame.prev_clash))?;
                    self.add(st, *node, *right, with(deps, b))
                }
            }
            Choice::Choose { node, filler, deps } => {
                let c = if frame.alt == 0 { *filler } else { self.p.table.complement(*filler) };
                self.add(st, *node, c, with(deps, b))
            }
            Choice::Merge { pairs, deps } => {
                let (y, z) = pairs[frame.alt];
                self.merge(st, y, z, with(deps, b))
            }
        }
    }

    /// Depth-first search over choices with an explicit stack. A clash
    /// unwinds straight to the latest choice it depends on.
    fn expand(&mut self, st: State) -> Result<State, Fail> {
        let mut stack: Vec<Frame> = Vec::new();
        let mut current = st;
        loop {
            let clash = match self.step(&mut current) {
                Ok(None) => return Ok(current),
                Ok(Some(choice)) => {
                    self.next_id += 1;
                    let frame = Frame {
                        id: self.next_id,
                        alts: choice.alternatives(),
                        choice,
                        alt: 0,
                        saved: current.clone(),
                        acc: Deps::new(),
                        prev_clash: Deps::new(),
                    };
                    let r = self.apply(&mut current, &frame);
                    stack.push(frame);
                    match r {
                        Ok(()) => continue,
                        Err(Fail::Clash(d)) => d,
                        Err(Fail::Budget) => return Err(Fail::Budget),
                    }
                }
                Err(Fail::Clash(d)) => d,
                Err(Fail::Budget) => return Err(Fail::Budget),
            };
            let mut deps = clash;
            loop {
                let Some(frame) = stack.last_mut() else {
                    return Err(Fail::Clash(deps));
                };
                if !deps.contains(&frame.id) {
                    stack.pop();
                    continue;
                }
                frame.prev_clash = without(&deps, frame.id);
                frame.acc = union(&frame.acc, &frame.prev_clash);
                frame.alt += 1;
                if frame.alt >= frame.alts {
                    deps = std::mem::take(&mut frame.acc);
                    stack.pop();
                    continue;
                }
                current = frame.saved.clone();
                let frame = stack.last().unwrap();
                match self.apply(&mut current, frame) {
                    Ok(()) => break,
                    Err(Fail::Clash(d)) => deps = d,
                    Err(Fail::Budget) => return Err(Fail::Budget),
                }
            }
        }
    }

    /// Merges one of `y`, `z` into the other. Generated nodes merge into
    /// roots; otherwise the later node merges into the earlier one.
    fn merge(&mut self, st: &mut State, y: NodeId, z: NodeId, deps: Deps) -> Result<(), Fail> {
        let (from, into) = {
            let (ny, nz) = (&st.nodes[y as usize], &st.nodes[z as usize]);
            match (ny.root, nz.root) {
                (true, false) => (z, y),
                (false, true) => (y, z),
                _ => (y.max(z), y.min(z)),
            }
        };
        let from_node = st.nodes[from as usize].clone();
        // incoming edges
        let mut incoming = Vec::new();
        for (i, n) in st.nodes.iter().enumerate() {
            if !n.alive {
                continue;
            }
            for e in &n.edges {
                if e.to == from {
                    incoming.push((i as NodeId, e.role, union(&e.deps, &deps)));
                }
            }
        }
        st.node_mut(from).alive = false;
        if from_node.root {
            st.node_mut(from).merged_into = Some(into);
            // outgoing edges move to the surviving node
            for e in &from_node.edges {
                if st.nodes[e.to as usize].alive {
                    if !st.nodes[e.to as usize].root {
                        st.node_mut(e.to).parent = Some(into);
                    }
                    let target = if e.to == from { into } else { e.to };
                    self.add_edge(st, into, target, e.role, union(&e.deps, &deps))?;
                }
            }
        } else {
            self.prune_below(st, from);
        }
        for (w, dd) in &from_node.distinct {
            let dd = union(dd, &deps);
            if *w == into {
                return Err(Fail::Clash(dd));
            }
            st.node_mut(into).distinct.push((*w, dd.clone()));
            st.node_mut(*w).distinct.push((into, dd));
        }
        for (src, role, d) in incoming {
            let src = if src == from { into } else { src };
            self.add_edge(st, src, into, role, d)?;
        }
        for (c, cd) in &from_node.deps {
            self.add(st, into, *c, union(cd, &deps))?;
        }
        Ok(())
    }

    fn prune_below(&self, st: &mut State, y: NodeId) {
        for i in 0..st.nodes.len() {
            if !st.nodes[i].alive || st.nodes[i].root {
                continue;
            }
            let mut cur = st.nodes[i].parent;
            while let Some(a) = cur {
                if a == y {
                    st.node_mut(i as NodeId).alive = false;
                    break;
                }
                cur = st.nodes[a as usize].parent;
            }
        }
    }

    /// Free nodes become elements. A directly blocked node becomes a copy of
    /// its blocker: the blocker's atoms and successors, but a separate element,
    /// so distinct successors stay distinct.
    fn extract(&self, st: &State) -> FiniteModel {
        let blocking = self.blocking(st);
        let mut element: Vec<Option<usize>> = vec![None; blocking.len()];
        let mut count = 0;
        for (i, b) in blocking.iter().enumerate() {
            if matches!(b, Block::Free | Block::Direct(_)) {
                element[i] = Some(count);
                count += 1;
            }
        }
        let mut model = FiniteModel::new(count);
        for (i, b) in blocking.iter().enumerate() {
            let Some(x) = element[i] else { continue };
            let source = match b {
                Block::Direct(blocker) => &st.nodes[*blocker as usize],
                _ => &st.nodes[i],
            };
            for c in source.label.iter() {
                if let Term::Atom(a) = self.p.table.term(c as Cid) {
                    model.add_concept_member(self.p.table.concept_name(*a), x);
                }
            }
            for e in &source.edges {
                if !st.nodes[e.to as usize].alive {
                    continue;
                }
                if let Some(t) = element[e.to as usize] {
                    model.add_edge(self.p.table.role_name(e.role), x, t);
                }
            }
        }
        for (i, (name, _)) in self.p.individuals.iter().enumerate() {
            let mut cur = i as NodeId;
            while let Some(next) = st.nodes[cur as usize].merged_into {
                cur = next;
            }
            if let Some(x) = element[cur as usize] {
                model.set_individual(name, x);
            }
        }
        model
    }
}

fn cost(t: &Term) -> u8 {
    match t {
        Term::Top | Term::Bottom | Term::Atom(_) | Term::NegAtom(_) => 0,
        Term::And(..) | Term::Or(..) | Term::All(..) => 1,
        Term::Max(..) => 2,
        Term::Min(..) => 3,
    }
}

/// Whether `k` pairwise-distinct nodes can be picked from `cands`.
fn has_distinct_subset(st: &State, cands: &[NodeId], k: usize) -> bool {
    if k == 0 {
        return true;
    }
    if cands.len() < k {
        return false;
    }
    if k == 1 {
        return true;
    }
    fn search(st: &State, cands: &[NodeId], picked: &mut Vec<NodeId>, start: usize, k: usize) -> bool {
        if picked.len() == k {
            return true;
        }
        for i in start..cands.len() {
            let c = cands[i];
            if picked.iter().all(|&p| st.nodes[p as usize].is_distinct(c).is_some()) {
                picked.push(c);
                if search(st, cands, picked, i + 1, k) {
                    return true;
                }
                picked.pop();
            }
        }
        false
    }
    search(st, cands, &mut Vec::new(), 0, k)
}
