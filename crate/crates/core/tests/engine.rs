use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lbemc_core::abstraction::Abstractor;
use lbemc_core::cfa::summarize;
use lbemc_core::engine::{Art, ArtOutcome, Engine, PathCheck};
use lbemc_core::formula::sp;
use lbemc_core::frontend::{compile, to_cfa};
use lbemc_core::oracle::{explicit_reachable, random_program, DomainBound, RandomProgramConfig, Reachability};
use lbemc_core::smt::InternalSolver;
use lbemc_core::workloads::gen_test_locks;
use lbemc_core::{
    AbstractionMode, Config, Encoding, LocId, Program, ProgramPrecision, SatResult, SolverBackend,
    VerificationResult,
};

const CONFIGS: [(Encoding, AbstractionMode); 4] = [
    (Encoding::Sbe, AbstractionMode::Cartesian),
    (Encoding::Sbe, AbstractionMode::Boolean),
    (Encoding::Lbe, AbstractionMode::Cartesian),
    (Encoding::Lbe, AbstractionMode::Boolean),
];

fn random(seed: u64) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    to_cfa(&random_program(&mut rng, &RandomProgramConfig::default()))
}

/// Checks the structural invariants of an ART built by `engine`.
fn check_art(engine: &mut Engine, art: &Art, complete: bool) {
    let p = engine.program;
    let edges = p.cfa.edges().to_vec();
    for n in &art.nodes {
        if let Some(m) = n.covered_by {
            let m = &art.nodes[m];
            assert_eq!(m.location, n.location);
            assert!(m.covered_by.is_none(), "covered by a covered node");
            assert!(engine.abstractor.entails(n.state, m.state));
            assert!(n.children.is_empty(), "covered node was expanded");
        }
        assert!(!n.state.is_false(), "false state in the ART");
        for &c in &n.children {
            assert_eq!(art.nodes[c].parent.map(|(q, _)| q), Some(n.id));
        }
    }
    for n in &art.nodes {
        if n.covered_by.is_some() || art.waitlist.contains(&n.id) || n.location == p.error {
            continue;
        }
        // Every successor of an expanded node over-approximates the concrete post.
        let phi = engine.abstractor.concretize(n.state);
        let children: Vec<(usize, usize)> = n.children.iter().map(|&c| (art.nodes[c].parent.unwrap().1, c)).collect();
        for (ei, e) in edges.iter().enumerate() {
            if e.source != n.location {
                continue;
            }
            let post = sp(&e.op, &phi);
            match children.iter().find(|(k, _)| *k == ei) {
                Some(&(_, c)) => {
                    let gamma = engine.abstractor.concretize(art.nodes[c].state);
                    assert!(engine.abstractor.solver().entails(&post, &gamma).unwrap(), "unsound successor via {}", e.op);
                }
                None if complete => {
                    let sat = engine.abstractor.solver().check_sat(&post).unwrap();
                    assert!(matches!(sat, SatResult::Unsat), "pruned a satisfiable successor via {}", e.op);
                }
                None => {}
            }
        }
    }
    if complete {
        assert!(art.waitlist.is_empty());
        assert!(art.nodes.iter().all(|n| n.location != p.error), "complete ART reaches the error location");
    }
}

/// Runs the refinement loop by hand, checking every ART on the way.
fn refine_and_check(p: &Program, mode: AbstractionMode, rounds: usize) -> Option<bool> {
    let mut engine = Engine::new(p, Abstractor::new(Box::new(InternalSolver::new())), mode);
    let mut pi = ProgramPrecision::new();
    for _ in 0..rounds {
        match engine.build_art(&pi).unwrap() {
            ArtOutcome::Complete(art) => {
                check_art(&mut engine, &art, true);
                return Some(true);
            }
            ArtOutcome::ErrorReached(art, path) => {
                check_art(&mut engine, &art, false);
                let last = path.steps.last().map(|(_, n)| *n).unwrap_or(0);
                assert_eq!(art.nodes[last].location, p.error);
                if let PathCheck::Feasible(_) = engine.check_path(&path).unwrap() {
                    return Some(false);
                }
                let before = pi.clone();
                let on_path: BTreeSet<LocId> = path.steps.iter().map(|(e, _)| e.target).collect();
                if engine.extract_predicates(&path, &mut pi).is_err() {
                    return None;
                }
                for (l, prec) in pi.iter() {
                    if !on_path.contains(&l) {
                        assert_eq!(prec, before.get(l), "precision grew off the path at {l}");
                    }
                    for id in before.get(l).ids() {
                        assert!(prec.contains(*id), "precision shrank at {l}");
                    }
                }
            }
        }
    }
    None
}

#[test]
fn art_invariants_on_random_programs() {
    let mut finished = 0;
    for seed in 0..60 {
        let p = random(seed);
        let (s, _) = summarize(&p);
        for mode in [AbstractionMode::Cartesian, AbstractionMode::Boolean] {
            finished += refine_and_check(&p, mode, 8).is_some() as usize;
            finished += refine_and_check(&s, mode, 8).is_some() as usize;
        }
    }
    assert!(finished > 120, "only {finished} runs finished");
}

#[test]
fn art_invariants_on_test_locks() {
    for n in 1..=3 {
        let p = compile(&gen_test_locks(n, false).unwrap()).unwrap();
        let (s, _) = summarize(&p);
        for mode in [AbstractionMode::Cartesian, AbstractionMode::Boolean] {
            assert_eq!(refine_and_check(&p, mode, 50), Some(true), "sbe n={n} {mode:?}");
            assert_eq!(refine_and_check(&s, mode, 50), Some(true), "lbe n={n} {mode:?}");
        }
    }
}

#[test]
fn verdicts_agree_with_explicit_search() {
    let bound = DomainBound::uniform(0, 3, 200_000);
    let mut decided = 0;
    for seed in 0..120 {
        let p = random(seed);
        let truth = explicit_reachable(&p, &bound);
        for (encoding, mode) in CONFIGS {
            let config = Config {
                encoding,
                mode,
                max_refinements: 20,
                backend: SolverBackend::Internal,
                art_dot: false,
            };
            let r = lbemc_core::verify(&p, &config);
            let tag = format!("seed {seed} {encoding:?} {mode:?}");
            match &r {
                VerificationResult::Safe(_) => {
                    assert_ne!(truth, Reachability::Reachable, "{tag}: safe but error reachable");
                    decided += 1;
                }
                VerificationResult::Unsafe { integral, replayed, path, .. } => {
                    let end = path.steps.last().map_or(p.entry, |(e, _)| e.target);
                    assert_eq!(end, p.error, "{tag}");
                    if *integral {
                        assert_eq!(*replayed, Some(true), "{tag}: counterexample does not replay");
                    }
                    decided += 1;
                }
                VerificationResult::Unknown { .. } => {}
            }
        }
    }
    assert!(decided >= 400, "only {decided} of 480 runs decided");
}

#[test]
fn lbe_never_needs_a_larger_art_on_test_locks() {
    for n in 2..=4 {
        let p = compile(&gen_test_locks(n, false).unwrap()).unwrap();
        let size = |encoding| {
            let r = lbemc_core::verify(
                &p,
                &Config {
                    encoding,
                    mode: AbstractionMode::Cartesian,
                    ..Config::default()
                },
            );
            assert!(r.is_safe(), "n={n} {encoding:?}");
            r.stats().art_size
        };
        assert!(size(Encoding::Lbe) < size(Encoding::Sbe), "n={n}");
    }
}
