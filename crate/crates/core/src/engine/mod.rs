//! CEGAR loop: abstract reachability with lazy, per-location precision.
//!
//! Each iteration rebuilds the abstract reachability tree from scratch under
//! the current precision. A path to the error location is checked with the
//! solver; infeasible paths contribute predicates along their prefix.

mod art;

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

pub use art::{Art, ArtNode, CounterexamplePath};

use crate::abstraction::{AbstractFormula, AbstractionMode, Abstractor, BddRef, Precision, ProgramPrecision};
use crate::cfa::{summarize, LocId, Program, SummarizationTrace};
use crate::formula::{encode_edge, Canon, Cmp, Formula, SsaMap, Term, Var};
use crate::oracle;
use crate::smt::{Model, SatResult, SolverBackend, SolverError};

/// Block encoding applied before the analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Encoding {
    /// One edge per statement.
    Sbe,
    /// Loop-free blocks summarized into single edges.
    Lbe,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub encoding: Encoding,
    pub mode: AbstractionMode,
    pub max_refinements: usize,
    pub backend: SolverBackend,
    /// Render the final ART as GraphViz in [`Run::art_dot`].
    pub art_dot: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            encoding: Encoding::Lbe,
            mode: AbstractionMode::Boolean,
            max_refinements: 100,
            backend: SolverBackend::Internal,
            art_dot: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// Nodes of the last ART built.
    pub art_size: usize,
    pub refinement_steps: usize,
    /// Distinct predicates over all locations.
    pub predicates_total: usize,
    /// Floor of the mean precision size over locations with a nonempty
    /// precision.
    pub predicates_avg: usize,
    pub predicates_max: usize,
    pub solver_queries: u64,
    pub rule_applications: usize,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub enum VerificationResult {
    Safe(Stats),
    Unsafe {
        path: CounterexamplePath,
        model: Model,
        /// Whether every model value is an integer.
        integral: bool,
        /// Concrete replay of the path, when the model is integral.
        replayed: Option<bool>,
        stats: Stats,
    },
    Unknown {
        reason: String,
        stats: Stats,
    },
}

impl VerificationResult {
    pub fn stats(&self) -> &Stats {
        match self {
            VerificationResult::Safe(s) => s,
            VerificationResult::Unsafe { stats, .. } => stats,
            VerificationResult::Unknown { stats, .. } => stats,
        }
    }

    pub fn verdict(&self) -> &'static str {
        match self {
            VerificationResult::Safe(_) => "safe",
            VerificationResult::Unsafe { .. } => "unsafe",
            VerificationResult::Unknown { .. } => "unknown",
        }
    }

    pub fn is_safe(&self) -> bool {
        matches!(self, VerificationResult::Safe(_))
    }

    pub fn is_unsafe(&self) -> bool {
        matches!(self, VerificationResult::Unsafe { .. })
    }
}

/// Outcome of one ART construction.
#[derive(Clone, Debug)]
pub enum ArtOutcome {
    /// Every node is expanded or covered.
    Complete(Art),
    ErrorReached(Art, CounterexamplePath),
}

impl ArtOutcome {
    pub fn art(&self) -> &Art {
        match self {
            ArtOutcome::Complete(a) | ArtOutcome::ErrorReached(a, _) => a,
        }
    }
}

#[derive(Clone, Debug)]
pub enum PathCheck {
    Feasible(Model),
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefineError {
    NoNewPredicates,
    Solver(SolverError),
}

impl From<SolverError> for RefineError {
    fn from(e: SolverError) -> Self {
        RefineError::Solver(e)
    }
}

/// Analysis state for one program: abstraction machinery and a cache of
/// abstract successors that survives refinements.
pub struct Engine<'p> {
    pub program: &'p Program,
    pub abstractor: Abstractor,
    pub mode: AbstractionMode,
    cache: HashMap<(usize, BddRef, Precision), AbstractFormula>,
}

impl<'p> Engine<'p> {
    pub fn new(program: &'p Program, abstractor: Abstractor, mode: AbstractionMode) -> Self {
        Engine {
            program,
            abstractor,
            mode,
            cache: HashMap::new(),
        }
    }

    fn post(&mut self, state: AbstractFormula, edge: usize, pi: &Precision) -> Result<AbstractFormula, SolverError> {
        let key = (edge, state, pi.clone());
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let op = &self.program.cfa.edges()[edge].op;
        let r = self.abstractor.abstract_post(state, op, pi, self.mode)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    /// Lowest-id node at the same location that is not itself covered and
    /// whose state contains the state of `n`.
    pub fn find_coverer(&mut self, art: &Art, by_loc: &HashMap<LocId, Vec<usize>>, n: usize) -> Option<usize> {
        let node = &art.nodes[n];
        for &m in by_loc.get(&node.location)? {
            if m == n || art.nodes[m].covered_by.is_some() {
                continue;
            }
            if self.abstractor.entails(node.state, art.nodes[m].state) {
                return Some(m);
            }
        }
        None
    }

    /// Depth-first ART construction under `pi`. Successors are pushed in CFA
    /// edge order; coverage is checked when a node is popped. Stops at the
    /// first node at the error location.
    pub fn build_art(&mut self, pi: &ProgramPrecision) -> Result<ArtOutcome, SolverError> {
        let p = self.program;
        let mut art = Art::default();
        let mut by_loc: HashMap<LocId, Vec<usize>> = HashMap::new();
        art.nodes.push(ArtNode {
            id: 0,
            location: p.entry,
            state: BddRef::TRUE,
            precision: pi.get(p.entry).clone(),
            parent: None,
            covered_by: None,
            children: Vec::new(),
        });
        by_loc.entry(p.entry).or_default().push(0);
        if p.entry == p.error {
            return Ok(ArtOutcome::ErrorReached(art, CounterexamplePath { steps: Vec::new() }));
        }
        let mut outgoing: HashMap<LocId, Vec<usize>> = HashMap::new();
        for (i, e) in p.cfa.edges().iter().enumerate() {
            outgoing.entry(e.source).or_default().push(i);
        }
        art.waitlist.push(0);
        while let Some(n) = art.waitlist.pop() {
            if let Some(m) = self.find_coverer(&art, &by_loc, n) {
                art.nodes[n].covered_by = Some(m);
                continue;
            }
            let state = art.nodes[n].state;
            let loc = art.nodes[n].location;
            for &ei in outgoing.get(&loc).map(Vec::as_slice).unwrap_or(&[]) {
                let target = p.cfa.edges()[ei].target;
                let prec = pi.get(target).clone();
                let s = self.post(state, ei, &prec)?;
                if s.is_false() {
                    continue;
                }
                let id = art.nodes.len();
                art.nodes.push(ArtNode {
                    id,
                    location: target,
                    state: s,
                    precision: prec,
                    parent: Some((n, ei)),
                    covered_by: None,
                    children: Vec::new(),
                });
                art.nodes[n].children.push(id);
                by_loc.entry(target).or_default().push(id);
                if target == p.error {
                    let path = self.path_to(&art, id);
                    return Ok(ArtOutcome::ErrorReached(art, path));
                }
                art.waitlist.push(id);
            }
        }
        Ok(ArtOutcome::Complete(art))
    }

    fn path_to(&self, art: &Art, mut n: usize) -> CounterexamplePath {
        let mut steps = Vec::new();
        while let Some((parent, ei)) = art.nodes[n].parent {
            steps.push((self.program.cfa.edges()[ei].clone(), n));
            n = parent;
        }
        steps.reverse();
        CounterexamplePath { steps }
    }

    /// Satisfiability of the SSA path formula, threaded from the all-zero map.
    pub fn check_path(&mut self, path: &CounterexamplePath) -> Result<PathCheck, SolverError> {
        let (parts, _) = path_encoding(path);
        match self.abstractor.solver().check_sat(&Formula::and(parts))? {
            SatResult::Sat(m) => Ok(PathCheck::Feasible(m)),
            SatResult::Unsat => Ok(PathCheck::Infeasible),
        }
    }

    /// Adds predicates harvested from an infeasible path to `pi`.
    ///
    /// At the node reached after `i` edges, every atom of the path formula
    /// whose variables are all live at that point becomes a predicate of the
    /// node's location, with SSA indices dropped. Atoms from later edges
    /// qualify when they read the values current at the node. Under
    /// Cartesian abstraction the negation of each atom is added as well,
    /// since a conjunction of predicates cannot express it otherwise.
    ///
    /// If that yields nothing new, falls back to value predicates: `v == c`
    /// whenever the path prefix forces the live copy of `v` to equal `c`.
    pub fn extract_predicates(
        &mut self,
        path: &CounterexamplePath,
        pi: &mut ProgramPrecision,
    ) -> Result<usize, RefineError> {
        let (parts, maps) = path_encoding(path);
        let mut added = 0;
        for i in 1..=path.len() {
            let loc = path.steps[i - 1].0.target;
            let ssa = &maps[i];
            let mut atoms = BTreeSet::new();
            for c in &parts {
                c.visit_atoms(&mut |a| {
                    if a.vars().all(|v| ssa.is_live(v)) {
                        if let Canon::Atom(b) = a.map_vars(|v| v.with_index(None)) {
                            atoms.insert(b);
                        }
                    }
                });
            }
            for a in atoms {
                let p = Formula::Atom(a);
                if self.mode == AbstractionMode::Cartesian {
                    let id = self.abstractor.preds.intern(Formula::not(p.clone()));
                    added += pi.insert(loc, id) as usize;
                }
                let id = self.abstractor.preds.intern(p);
                added += pi.insert(loc, id) as usize;
            }
        }
        if added == 0 {
            added = self.value_predicates(path, &parts, &maps, pi)?;
        }
        if added == 0 {
            Err(RefineError::NoNewPredicates)
        } else {
            Ok(added)
        }
    }

    fn value_predicates(
        &mut self,
        path: &CounterexamplePath,
        parts: &[Formula],
        maps: &[SsaMap],
        pi: &mut ProgramPrecision,
    ) -> Result<usize, SolverError> {
        let names: BTreeSet<_> = parts.iter().flat_map(|f| f.vars()).map(|v| v.name).collect();
        let mut added = 0;
        for i in 1..=path.len() {
            let prefix = Formula::and(parts[..i].iter().cloned());
            let SatResult::Sat(model) = self.abstractor.solver().check_sat(&prefix)? else {
                break;
            };
            let loc = path.steps[i - 1].0.target;
            for name in &names {
                let live = maps[i].var(name);
                let q = model.value(&live);
                let Some(c) = q.is_integer().then(|| i64::try_from(q.to_integer()).ok()).flatten() else {
                    continue;
                };
                let eq = |v: Var| Formula::compare(&Term::var(v), Cmp::Eq, &Term::constant(c));
                if self.abstractor.solver().entails(&prefix, &eq(live.clone()))? {
                    let id = self.abstractor.preds.intern(eq(live.with_index(None)));
                    added += pi.insert(loc, id) as usize;
                }
            }
        }
        Ok(added)
    }
}

fn path_encoding(path: &CounterexamplePath) -> (Vec<Formula>, Vec<SsaMap>) {
    let mut maps = vec![SsaMap::new()];
    let mut parts = Vec::new();
    for (e, _) in &path.steps {
        let (f, next) = encode_edge(&e.op, maps.last().unwrap());
        parts.push(f);
        maps.push(next);
    }
    (parts, maps)
}

fn precision_stats(pi: &ProgramPrecision, stats: &mut Stats) {
    let mut all = BTreeSet::new();
    let mut sum = 0;
    let mut nonempty = 0;
    let mut max = 0;
    for (_, p) in pi.iter() {
        if p.is_empty() {
            continue;
        }
        all.extend(p.ids().iter().copied());
        sum += p.len();
        nonempty += 1;
        max = max.max(p.len());
    }
    stats.predicates_total = all.len();
    stats.predicates_avg = if nonempty == 0 { 0 } else { sum / nonempty };
    stats.predicates_max = max;
}

/// Everything a driver may want to report about one verification run.
#[derive(Clone, Debug)]
pub struct Run {
    pub result: VerificationResult,
    /// The program actually analysed (summarized under LBE).
    pub program: Program,
    pub trace: SummarizationTrace,
    pub art_dot: Option<String>,
}

/// Verifies `p` under `config`. With [`Encoding::Lbe`] the program is
/// summarized first; summarizing an already summarized program is a no-op.
pub fn verify(p: &Program, config: &Config) -> VerificationResult {
    run(p, config).result
}

pub fn run(p: &Program, config: &Config) -> Run {
    let start = Instant::now();
    let (program, trace) = match config.encoding {
        Encoding::Sbe => (p.clone(), SummarizationTrace::default()),
        Encoding::Lbe => summarize(p),
    };
    let mut stats = Stats {
        rule_applications: trace.applications.len(),
        ..Stats::default()
    };
    let solver = match config.backend.create() {
        Ok(s) => s,
        Err(e) => {
            stats.wall_time = start.elapsed();
            return Run {
                result: VerificationResult::Unknown {
                    reason: e.to_string(),
                    stats,
                },
                program,
                trace,
                art_dot: None,
            };
        }
    };
    let mut engine = Engine::new(&program, Abstractor::new(solver), config.mode);
    let mut pi = ProgramPrecision::new();
    let mut last_art = None;
    let result = loop {
        let outcome = match engine.build_art(&pi) {
            Ok(o) => o,
            Err(e) => break Err(e.to_string()),
        };
        stats.art_size = outcome.art().len();
        let path = match outcome {
            ArtOutcome::Complete(art) => {
                last_art = Some(art);
                break Ok(None);
            }
            ArtOutcome::ErrorReached(art, path) => {
                last_art = Some(art);
                path
            }
        };
        match engine.check_path(&path) {
            Err(e) => break Err(e.to_string()),
            Ok(PathCheck::Feasible(model)) => break Ok(Some((path, model))),
            Ok(PathCheck::Infeasible) => {}
        }
        if stats.refinement_steps >= config.max_refinements {
            break Err("refinement bound reached".to_string());
        }
        match engine.extract_predicates(&path, &mut pi) {
            Ok(_) => stats.refinement_steps += 1,
            Err(RefineError::NoNewPredicates) => break Err("no new predicates".to_string()),
            Err(RefineError::Solver(e)) => break Err(e.to_string()),
        }
    };
    precision_stats(&pi, &mut stats);
    stats.solver_queries = engine.abstractor.queries();
    let art_dot = match (&last_art, config.art_dot) {
        (Some(art), true) => {
            let abs = &mut engine.abstractor;
            Some(art.to_dot(program.cfa.edges(), |s| abs.render(s)))
        }
        _ => None,
    };
    stats.wall_time = start.elapsed();
    let result = match result {
        Ok(None) => VerificationResult::Safe(stats),
        Ok(Some((path, model))) => {
            let integral = model.is_integral();
            let replayed = integral.then(|| oracle::replay(&program, &path.edges(), &model));
            VerificationResult::Unsafe {
                path,
                model,
                integral,
                replayed,
                stats,
            }
        }
        Err(reason) => VerificationResult::Unknown { reason, stats },
    };
    Run {
        result,
        program,
        trace,
        art_dot,
    }
}
